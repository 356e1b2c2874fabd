//! Sector-constant machinery for the Dirichlet form of an ergodic branching
//! structure.
//!
//! The form ℰ^δ(f, g) = ⟨(−L_δ)f · g⟩_δ is evaluated in closed form on the
//! exponential family f_λ(x) = e^{−λx}:
//!
//! ```text
//!   ℰ^δ(f_λ, f_μ) = δ e^{−δΦ(λ+μ)} · λ (R₀(λ+μ) − R₀(λ)) / R₀(λ+μ)
//! ```
//!
//! where R₀(λ) = aλ + b + λ∫M(du)/(λ+u) = 1/Φ′(λ). The difference
//! R₀(λ+μ) − R₀(λ) equals aλμ/λ·μ-form plus the tail-measure kernel
//! ∫ñ(dy)(e^{−λy} − e^{−(λ+μ)y}) without ever forming the two individually
//! divergent halves, so the evaluation stays finite even when M has infinite
//! mass.
//!
//! The sector constant Sect(ℰ) is the smallest C with
//! |ℰ(f,g)| ≤ C √(ℰ(f,f) ℰ(g,g)); it equals 1 exactly for symmetric forms.
//! This module provides a certified lower estimate (largest singular value of
//! the whitened Gram matrix over an exponential span), moment-based lower
//! bounds through the test pair f = x, g = x², and the two families of upper
//! bounds driven by the spectral support and mass.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::correspondence::{forward, spectral_moments};
use crate::error::{Error, Result};
use crate::measure::{PositiveMeasure, ThorinPair};
use crate::mechanism::Quadruplet;

/// Standard (λ, μ) grid for reversibility scans; spans small and large
/// arguments where asymmetry of the form is visible.
pub const REVERSIBILITY_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Eigenvalues of the symmetric Gram part below this fraction of the largest
/// one are treated as null directions.
const GRAM_CUTOFF: f64 = 1e-12;
/// How far below zero a symmetric-part eigenvalue may sit before the matrix
/// is declared numerically indefinite.
const GRAM_NEGATIVE: f64 = -1e-10;

/// One evaluation of the bilinear form on an exponential pair, split into its
/// symmetric and antisymmetric parts; `full = symmetric + antisymmetric`
/// holds exactly by construction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BilinearValue {
    pub full: f64,
    pub symmetric: f64,
    pub antisymmetric: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Input(format!("immigration weight must be > 0, got {delta}")));
    }
    Ok(())
}

fn check_ergodic(quad: &Quadruplet) -> Result<()> {
    if !quad.is_ergodic()? {
        return Err(Error::NonErgodic(
            "the Dirichlet form needs a stationary law, so an ergodic mechanism".into(),
        ));
    }
    Ok(())
}

/// ℰ^δ(f_λ, f_μ) without the ergodicity check; callers verify once.
fn full_value(quad: &Quadruplet, delta: f64, lam: f64, mu: f64) -> Result<f64> {
    if !(lam >= 0.0 && mu >= 0.0) || !lam.is_finite() || !mu.is_finite() {
        return Err(Error::Input(format!("exponential rates must be ≥ 0, got ({lam}, {mu})")));
    }
    // f₀ ≡ 1 is harmonic for the branching part, so either rate vanishing
    // kills the form.
    if lam == 0.0 || mu == 0.0 {
        return Ok(0.0);
    }
    let s = lam + mu;
    let r0_s = quad.rate_r0(s)?;
    let r0_l = quad.rate_r0(lam)?;
    let phi_s = quad.phi(s)?;
    Ok(delta * (-delta * phi_s).exp() * lam * (r0_s - r0_l) / r0_s)
}

/// ℰ^δ(f_λ, f_μ) with its symmetric and antisymmetric parts.
///
/// `delta` overrides the quadruplet's own immigration weight, so a single
/// mechanism can serve a δ-scan. The closed form multiplies
/// ⟨x f_{λ+μ}⟩_δ = δΦ′(λ+μ)e^{−δΦ(λ+μ)} by λ(R₀(λ+μ) − R₀(λ)), the
/// integration-by-parts kernel written as a resolvent difference.
pub fn bilinear_exp(quad: &Quadruplet, delta: f64, lam: f64, mu: f64) -> Result<BilinearValue> {
    check_delta(delta)?;
    check_ergodic(quad)?;
    let full = full_value(quad, delta, lam, mu)?;
    let transpose = full_value(quad, delta, mu, lam)?;
    let symmetric = 0.5 * (full + transpose);
    Ok(BilinearValue { full, symmetric, antisymmetric: full - symmetric })
}

/// Worst asymmetry max |ℰ(f_λ, f_μ) − ℰ(f_μ, f_λ)| over the grid; zero
/// exactly for reversible (M ≡ 0) mechanisms.
pub fn reversibility_residual(quad: &Quadruplet, delta: f64, grid: &[f64]) -> Result<f64> {
    check_delta(delta)?;
    check_ergodic(quad)?;
    let mut worst: f64 = 0.0;
    for (i, &lam) in grid.iter().enumerate() {
        for &mu in &grid[i + 1..] {
            let fwd = full_value(quad, delta, lam, mu)?;
            let bwd = full_value(quad, delta, mu, lam)?;
            worst = worst.max((fwd - bwd).abs());
        }
    }
    Ok(worst)
}

/// Gram matrix A_{ij} = ℰ^δ(f_{λᵢ}, f_{λⱼ}), assembled in parallel.
fn gram_matrix(quad: &Quadruplet, delta: f64, grid: &[f64]) -> Result<DMatrix<f64>> {
    let k = grid.len();
    let entries: Vec<f64> = (0..k * k)
        .into_par_iter()
        .map(|idx| full_value(quad, delta, grid[idx / k], grid[idx % k]))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DMatrix::from_fn(k, k, |i, j| entries[i * k + j]))
}

/// Largest singular value of S^{−1/2} A S^{−1/2} with S the symmetric part
/// of A, null directions of S projected out.
fn whitened_top_singular(a: &DMatrix<f64>) -> Result<f64> {
    let s = 0.5 * (a + a.transpose());
    let eig = s.symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    if max_eig <= 0.0 {
        // The form vanishes on the whole span (a drift-only mechanism);
        // nothing distinguishes it from a symmetric one.
        return Ok(1.0);
    }
    if eig.eigenvalues.iter().any(|&v| v < GRAM_NEGATIVE * max_eig.max(1.0)) {
        return Err(Error::Solver(
            "symmetric part of the Gram matrix is indefinite beyond tolerance".into(),
        ));
    }
    let cutoff = GRAM_CUTOFF * max_eig;
    let inv_sqrt = DMatrix::from_diagonal(
        &eig.eigenvalues.map(|v| if v > cutoff { v.sqrt().recip() } else { 0.0 }),
    );
    let white = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let b = &white * a * &white;
    let sv = b.svd(false, false).singular_values;
    Ok(sv.iter().fold(0.0f64, |m, &v| m.max(v)))
}

/// Certified lower estimate of Sect(ℰ^δ): the form's operator norm over
/// span{f_{λ₁}, …, f_{λ_k}} in the metric of its own symmetric part.
///
/// This optimizes ℰ(f, g)/√(ℰ(f,f)ℰ(g,g)) exactly over the span, so it is a
/// lower bound of the sector constant by definition; whether it converges to
/// Sect as the grid refines is not claimed. Refining the grid never decreases
/// the value (span inclusion).
pub fn empirical_sector(quad: &Quadruplet, delta: f64, grid: &[f64]) -> Result<f64> {
    check_delta(delta)?;
    validate_grid(grid)?;
    check_ergodic(quad)?;
    let a = gram_matrix(quad, delta, grid)?;
    whitened_top_singular(&a)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Input("the λ-grid must be nonempty".into()));
    }
    if grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::Input("λ-grid entries must be positive and finite".into()));
    }
    for (i, &l) in grid.iter().enumerate() {
        if grid[i + 1..].contains(&l) {
            return Err(Error::Input(format!("λ-grid entries must be distinct, {l} repeats")));
        }
    }
    Ok(())
}

/// The two support-driven upper bounds for Sect − 1 available when the
/// stationary side (q = 0, m) has m̄₁ < ∞ and inf S(m) > 0:
///
/// ```text
///   Sect − 1 ≤ √((m̄₁/m̄₀ − inf S(m)) · 2/inf S(M))      (first)
///           ≤ √(2 (m̄₁/(m̄₀ · inf S(m)) − 1))           (second)
/// ```
///
/// Returns (first, second); (+∞, +∞) when the hypotheses fail. A degenerate
/// m gives (0, 0): the form is then symmetric.
pub fn upper_bound_thorin(pair: &ThorinPair, spectral: &PositiveMeasure) -> Result<(f64, f64)> {
    let m = pair.m();
    let inf_m = match m.support() {
        Some((lo, _)) => lo,
        None => return Ok((f64::INFINITY, f64::INFINITY)),
    };
    let m1 = m.moment(1.0)?;
    if pair.q() != 0.0 || !m1.is_finite() || !(inf_m > 0.0) {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let m0 = m.moment(0.0)?;
    let diff = m1.value() / m0.value() - inf_m;
    if diff <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let inf_spec = match spectral.support() {
        Some((lo, _)) if lo > 0.0 => lo,
        _ => return Ok((f64::INFINITY, f64::INFINITY)),
    };
    Ok(((diff * 2.0 / inf_spec).sqrt(), (2.0 * diff / inf_m).sqrt()))
}

/// Upper bound for (Sect − 1)² from the mechanism side, valid when a, b > 0,
/// M̄₀ < ∞ and inf S(M) > 0:
///
/// ```text
///   (Sect−1)² ≤ [√((a·i − b − M̄₀)² + 4a M̄₀ i) − (a·i − b − M̄₀)] / (a·i)
/// ```
///
/// with i = inf S(M). Returns +∞ when the hypotheses fail and 0 for M ≡ 0.
pub fn upper_bound_quad(a: f64, b: f64, spectral: &PositiveMeasure) -> Result<f64> {
    if spectral.is_zero() {
        return Ok(0.0);
    }
    let mass = spectral.moment(0.0)?;
    let inf_spec = match spectral.support() {
        Some((lo, _)) => lo,
        None => return Ok(0.0),
    };
    if !(a > 0.0 && b > 0.0) || !mass.is_finite() || !(inf_spec > 0.0) {
        return Ok(f64::INFINITY);
    }
    let t = a * inf_spec - b - mass.value();
    Ok(((t * t + 4.0 * a * mass.value() * inf_spec).sqrt() - t) / (a * inf_spec))
}

/// Constants of the drift-domination route to the first support bound.
///
/// With φ(y) = ∫e^{−uy} m(du) and V = −ln φ, the tilted mean V′(y) decreases
/// from m̄₁/m̄₀ to inf S(m), so C₂ = sup_y (V′(0) − V′(y)) equals the cap
/// m̄₁/m̄₀ − inf S(m) exactly. Combined with ‖dñ/dn‖_∞ ≤ 1/inf S(M) this
/// yields Sect − 1 ≤ √(2 C₂ / inf S(M)), the same value as the first
/// component of [`upper_bound_thorin`]; C₁ = a C₂ is the convolution
/// constant of the intermediate Lévy-density estimate.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DriftDomination {
    /// Supremum of V′(0) − V′(y), attained in the y → ∞ limit.
    pub c2: f64,
    /// The same supremum restricted to the evaluation grid; always ≤ `c2`.
    pub c2_observed: f64,
    /// a·C₂, the constant of the convolution inequality φ∗ñ ≤ C₁φ.
    pub c1: f64,
    /// √(2 C₂ / inf S(M)), the resulting Sect − 1 bound.
    pub bound: f64,
}

/// See [`DriftDomination`]. Requires a > 0, inf S(m) > 0 and m̄₁ < ∞.
pub fn drift_domination(
    a: f64,
    m: &PositiveMeasure,
    spectral: &PositiveMeasure,
) -> Result<DriftDomination> {
    if !(a > 0.0) {
        return Err(Error::Domain("the drift-domination route needs a > 0".into()));
    }
    let inf_m = m
        .support()
        .map(|(lo, _)| lo)
        .ok_or_else(|| Error::Domain("the zero measure has no drift-domination route".into()))?;
    let m1 = m.moment(1.0)?;
    if !(inf_m > 0.0) || !m1.is_finite() {
        return Err(Error::Domain(
            "drift domination needs inf S(m) > 0 and a finite first moment".into(),
        ));
    }
    let v0 = m1.value() / m.moment(0.0)?.value();
    let c2 = v0 - inf_m;

    // Cross-check grid: V′(y) = −φ′(y)/φ(y) sampled log-uniformly; every
    // value must sit below the analytic cap.
    let mut c2_observed: f64 = 0.0;
    let points = 40;
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let y = 1e-6 * (1e9f64).powf(t);
        let phi = m.exp_transform(y)?;
        let v_prime = -m.exp_transform_prime(y)? / phi;
        c2_observed = c2_observed.max(v0 - v_prime);
    }

    let inf_spec = spectral
        .support()
        .map(|(lo, _)| lo)
        .filter(|&lo| lo > 0.0)
        .ok_or_else(|| Error::Domain("drift domination needs inf S(M) > 0".into()))?;
    Ok(DriftDomination {
        c2,
        c2_observed,
        c1: a * c2,
        bound: (2.0 * c2 / inf_spec).sqrt(),
    })
}

/// Moment-form lower bound for the sector constant of the q = 0
/// correspondence:
///
/// ```text
///   Sect² − 1 ≥ (m̄₋₁m̄₋₃ − m̄₋₂²)² /
///     (2m̄₋₁m̄₋₂²m̄₋₃ + 4m̄₋₁²m̄₋₂³ + 12m̄₋₁²m̄₋₂m̄₋₄ − 9m̄₋₁²m̄₋₃² − m̄₋₂⁴)
/// ```
///
/// returned on the Sect scale as √(1 + ratio). Both sides are homogeneous of
/// degree 4 in the weights, so the bound ignores an overall mass scale. A
/// degenerate m has a vanishing numerator and the bound collapses to 1.
pub fn lower_bound_moments(m: &PositiveMeasure) -> Result<f64> {
    let inf_m = m
        .support()
        .map(|(lo, _)| lo)
        .ok_or_else(|| Error::Domain("the zero measure carries no sector bound".into()))?;
    if !(inf_m > 0.0) {
        return Err(Error::Domain("the moment lower bound needs inf S(m) > 0".into()));
    }
    if !m.moment(0.0)?.is_finite() {
        return Err(Error::Domain("the moment lower bound needs m̄₀ < ∞".into()));
    }
    let m1 = m.moment(-1.0)?.value();
    let m2 = m.moment(-2.0)?.value();
    let m3 = m.moment(-3.0)?.value();
    let m4 = m.moment(-4.0)?.value();
    let num = (m1 * m3 - m2 * m2).powi(2);
    if num == 0.0 {
        return Ok(1.0);
    }
    let den = 2.0 * m1 * m2 * m2 * m3 + 4.0 * m1 * m1 * m2.powi(3)
        + 12.0 * m1 * m1 * m2 * m4
        - 9.0 * m1 * m1 * m3 * m3
        - m2.powi(4);
    if !(den > 0.0) {
        return Err(Error::Invariant(format!(
            "the moment-bound denominator must be positive, got {den}"
        )));
    }
    Ok((1.0 + num / den).sqrt())
}

/// Lower bound for Sect from one evaluated test pair, on the Sect scale.
///
/// With ℰ̃ = (ℰ(f,g) + ℰ(g,f))/2, ℰ̌ = (ℰ(f,g) − ℰ(g,f))/2 and
/// Δ = ℰ(f,f)ℰ(g,g) − ℰ̃²:
///
/// ```text
///   Sect² − 1 ≥ ℰ̌²/Δ        (ℰ(f,f)ℰ(g,g) ≠ ℰ(f,g)ℰ̃, Δ > 0)
///             = ∞            (ℰ(f,f)ℰ(g,g) ≠ ℰ(f,g)ℰ̃, Δ = 0)
///             ≥ ℰ̌/ℰ̃        (ℰ(f,f)ℰ(g,g) = ℰ(f,g)ℰ̃)
/// ```
///
/// A transposed pair carries the same information, so a negative ℰ̌ is
/// handled by swapping the roles of f and g. Symmetric input (ℰ̌ = 0) or a
/// non-positive diagonal yields the no-information value 1.
pub fn lower_bound_general(e_ff: f64, e_gg: f64, e_fg: f64, e_gf: f64) -> f64 {
    if !(e_ff * e_gg > 0.0) {
        return 1.0;
    }
    let check = 0.5 * (e_fg - e_gf);
    if check == 0.0 {
        return 1.0;
    }
    let (e_ff, e_gg, e_fg) = if check > 0.0 { (e_ff, e_gg, e_fg) } else { (e_gg, e_ff, e_gf) };
    let check = check.abs();
    // After the orientation swap ℰ̌ > 0 and ℰ̃ = ℰ(f,g) − ℰ̌.
    let tilde = e_fg - check;
    let diag = e_ff * e_gg;
    let delta = diag - tilde * tilde;
    let scale = diag.abs().max((e_fg * tilde).abs());
    if (diag - e_fg * tilde).abs() > 1e-12 * scale {
        if delta > 1e-12 * diag {
            (1.0 + check * check / delta).sqrt()
        } else {
            f64::INFINITY
        }
    } else {
        let ratio = check / tilde;
        if ratio > 0.0 {
            (1.0 + ratio).sqrt()
        } else {
            1.0
        }
    }
}

/// First three stationary moments ⟨xᵏ⟩ of the q = 0, δ = 1 law of a Thorin
/// measure with inf S(m) > 0:
///
/// ```text
///   ⟨x⟩ = m̄₋₁,  ⟨x²⟩ = m̄₋₁² + m̄₋₂,  ⟨x³⟩ = 2m̄₋₃ + 3m̄₋₁m̄₋₂ + m̄₋₁³
/// ```
pub fn ggc_moments(m: &PositiveMeasure) -> Result<(f64, f64, f64)> {
    let inf_m = m
        .support()
        .map(|(lo, _)| lo)
        .ok_or_else(|| Error::Domain("the zero measure has no stationary moments".into()))?;
    if !(inf_m > 0.0) {
        return Err(Error::Domain("stationary moments need inf S(m) > 0".into()));
    }
    let m1 = m.moment(-1.0)?.value();
    let m2 = m.moment(-2.0)?.value();
    let m3 = m.moment(-3.0)?.value();
    Ok((m1, m1 * m1 + m2, 2.0 * m3 + 3.0 * m1 * m2 + m1.powi(3)))
}

/// The four ℰ-values of the test pair f = x, g = x² for the q = 0, δ = 1
/// correspondence of m, expressed through stationary and spectral moments:
///
/// ```text
///   ℰ(f,f) = ⟨x⟩ A                 ℰ̌(f,g) = −⟨x⟩ M̄₋₂
///   ℰ̃(f,g) = 2⟨x²⟩ A + 3⟨x⟩ M̄₋₂   A = a + M̄₋₁ = m̄₋₂/m̄₋₁²
///   ℰ(g,g) = 4⟨x³⟩ A + 12⟨x²⟩ M̄₋₂ + 12⟨x⟩ M̄₋₃
/// ```
///
/// Feeding these into [`lower_bound_general`] reproduces
/// [`lower_bound_moments`] exactly.
pub fn polynomial_pair_values(m: &PositiveMeasure) -> Result<(f64, f64, f64, f64)> {
    let (x1, x2, x3) = ggc_moments(m)?;
    let sm = spectral_moments(0.0, m)?;
    for v in [sm.m_neg1, sm.m_neg2, sm.m_neg3] {
        if !v.is_finite() {
            return Err(Error::Domain(
                "the polynomial test pair needs finite reciprocal spectral moments".into(),
            ));
        }
    }
    let m0 = m.moment(0.0)?;
    if !m0.is_finite() {
        return Err(Error::Domain("the polynomial test pair needs m̄₀ < ∞".into()));
    }
    let a = m0.recip();
    let big_a = a + sm.m_neg1.value();
    let e_ff = x1 * big_a;
    let anti = -x1 * sm.m_neg2.value();
    let tilde = 2.0 * x2 * big_a + 3.0 * x1 * sm.m_neg2.value();
    let e_gg = 4.0 * x3 * big_a + 12.0 * x2 * sm.m_neg2.value() + 12.0 * x1 * sm.m_neg3.value();
    Ok((e_ff, e_gg, tilde + anti, tilde - anti))
}

/// Gram-type matrices backing the empirical estimate: the full bilinear
/// matrix and its symmetric part.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GramMatrices {
    pub full: Vec<Vec<f64>>,
    pub symmetric: Vec<Vec<f64>>,
}

/// Everything the sector analysis of one stationary pair produces: the two
/// lower routes, the three upper bounds, the empirical span estimate, and
/// the matrices behind it. Bound fields are on the Sect scale (≥ 1, +∞ when
/// a route's hypotheses fail).
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SectorReport {
    pub lower_moments: f64,
    pub lower_general: f64,
    pub upper_thorin_a: f64,
    pub upper_thorin_b: f64,
    pub upper_quad: f64,
    pub empirical: f64,
    pub basis: Vec<f64>,
    pub matrices: GramMatrices,
    pub reversibility_residual: f64,
    pub identity_residual: f64,
}

/// Tolerance granted to the upper side of the sandwich check; the lower side
/// gets a pure rounding allowance.
const SANDWICH_TOL: f64 = 1e-6;

/// Full sector analysis of a stationary pair at immigration weight δ over an
/// exponential λ-grid.
///
/// The mechanism comes from the correspondence; bounds whose hypotheses the
/// input does not satisfy degrade to their no-information values (1 for
/// lower bounds, +∞ for upper bounds). The report is self-checked: lower
/// bounds must not exceed the empirical estimate, which must not exceed the
/// smallest finite upper bound beyond tolerance.
pub fn sector_report(pair: &ThorinPair, delta: f64, grid: &[f64]) -> Result<SectorReport> {
    check_delta(delta)?;
    validate_grid(grid)?;
    let corr = forward(pair)?;
    let quad = Quadruplet::new(corr.a, corr.b, corr.spectral.clone(), delta)?;
    check_ergodic(&quad)?;

    let a_mat = gram_matrix(&quad, delta, grid)?;
    let empirical = whitened_top_singular(&a_mat)?;
    let k = grid.len();
    let full: Vec<Vec<f64>> =
        (0..k).map(|i| (0..k).map(|j| a_mat[(i, j)]).collect()).collect();
    let symmetric: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| 0.5 * (a_mat[(i, j)] + a_mat[(j, i)])).collect())
        .collect();

    let lower_moments = if pair.q() == 0.0 {
        match lower_bound_moments(pair.m()) {
            Ok(v) => v,
            Err(Error::Domain(_)) => 1.0,
            Err(e) => return Err(e),
        }
    } else {
        1.0
    };
    let lower_general = if pair.q() == 0.0 {
        match polynomial_pair_values(pair.m()) {
            Ok((e_ff, e_gg, e_fg, e_gf)) => lower_bound_general(e_ff, e_gg, e_fg, e_gf),
            Err(Error::Domain(_)) => 1.0,
            Err(e) => return Err(e),
        }
    } else {
        1.0
    };
    let (ta, tb) = upper_bound_thorin(pair, &corr.spectral)?;
    let quad_sq = upper_bound_quad(corr.a, corr.b, &corr.spectral)?;
    let upper_thorin_a = 1.0 + ta;
    let upper_thorin_b = 1.0 + tb;
    let upper_quad = 1.0 + quad_sq.sqrt();
    let reversibility = reversibility_residual(&quad, delta, grid)?;

    let min_upper = upper_thorin_a.min(upper_thorin_b).min(upper_quad);
    for lower in [lower_moments, lower_general] {
        if lower.is_finite() && lower > empirical + 1e-9 {
            return Err(Error::Invariant(format!(
                "sector sandwich violated: lower bound {lower} exceeds the empirical span \
                 value {empirical}"
            )));
        }
    }
    if min_upper.is_finite() && empirical > min_upper + SANDWICH_TOL {
        return Err(Error::Invariant(format!(
            "sector sandwich violated: empirical value {empirical} exceeds the smallest upper \
             bound {min_upper}"
        )));
    }

    Ok(SectorReport {
        lower_moments,
        lower_general,
        upper_thorin_a,
        upper_thorin_b,
        upper_quad,
        empirical,
        basis: grid.to_vec(),
        matrices: GramMatrices { full, symmetric },
        reversibility_residual: reversibility,
        identity_residual: corr.identity_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::PositiveMeasure as PM;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn atom(weight: f64, location: f64) -> crate::measure::Atom {
        crate::measure::Atom { weight, location }
    }

    fn two_atom_pair() -> ThorinPair {
        ThorinPair::new(0.0, PM::atomic(vec![atom(1.0, 1.0), atom(1.0, 2.0)]).unwrap()).unwrap()
    }

    fn two_atom_quad() -> Quadruplet {
        let corr = forward(&two_atom_pair()).unwrap();
        assert_relative_eq!(corr.a, 0.5, max_relative = 1e-12);
        assert_relative_eq!(corr.b, 2.0 / 3.0, max_relative = 1e-12);
        let atoms = corr.spectral.atoms();
        assert_eq!(atoms.len(), 1);
        assert_relative_eq!(atoms[0].location, 1.5, max_relative = 1e-12);
        assert_relative_eq!(atoms[0].weight, 1.0 / 12.0, max_relative = 1e-12);
        Quadruplet::new(corr.a, corr.b, corr.spectral, 1.0).unwrap()
    }

    #[test]
    fn closed_form_matches_stable_tail_mechanism() {
        // For (a, b, M) = (0, √κ·κ^{...}) with M the dual-stable measure at
        // index 1/2 the resolvent is the pure power (λ+κ)^{1/2}, so the form
        // has the elementary value λ(1 − √((λ+κ)/(λ+μ+κ))) e^{−δΦ(λ+μ)}
        // with Φ(s) = 2(√(s+κ) − √κ).
        let kappa = 1.0;
        let spectral = PM::stable_tail_dual(0.5, kappa).unwrap();
        let quad = Quadruplet::new(0.0, kappa.sqrt(), spectral, 1.0).unwrap();
        for &delta in &[1.0, 2.0] {
            for &lam in &[0.3f64, 1.0, 2.5] {
                for &mu in &[0.3f64, 1.0, 2.5] {
                    let got = bilinear_exp(&quad, delta, lam, mu).unwrap();
                    let s = lam + mu;
                    let phi = 2.0 * ((s + kappa).sqrt() - kappa.sqrt());
                    let want = lam
                        * (1.0 - ((lam + kappa) / (s + kappa)).sqrt())
                        * (-delta * phi).exp()
                        * delta;
                    assert_relative_eq!(got.full, want, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn quadrature_free_oracle_for_two_atoms() {
        // The stationary law of the two-atom pair at δ = 1 is the
        // convolution Exp(1) ⊛ Exp(2), whose x-weighted Laplace transform is
        // I(s) = 2((s+1)⁻² − (s+2)⁻²). Integrating the jump kernel against
        // the single spectral exponential gives the whole form in closed
        // form, fully independent of the resolvent-difference route.
        let quad = two_atom_quad();
        let (a, w, kap) = (0.5, 1.0 / 12.0, 1.5);
        for &lam in &[0.35f64, 1.0, 3.2] {
            for &mu in &[0.6f64, 1.7, 4.0] {
                let s = lam + mu;
                let xweight = 2.0 * ((s + 1.0).powi(-2) - (s + 2.0).powi(-2));
                let jump = lam * w * kap * (1.0 / (kap + lam) - 1.0 / (kap + s));
                let want = xweight * (a * lam * mu + jump);
                let got = bilinear_exp(&quad, 1.0, lam, mu).unwrap();
                assert_relative_eq!(got.full, want, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn monte_carlo_oracle_for_symmetric_part() {
        // The symmetric part is the stationary average of
        // x (a f′_λ f′_μ + ½ ∫n(dy) Δ_y f_λ Δ_y f_μ); for exponentials the
        // integrand is (aλμ + J/2) x e^{−(λ+μ)x} with J the doubly-killed
        // exponential integral of the jump density. Sampling the stationary
        // law directly as Exp(1) + Exp(2) checks the closed form against the
        // generator itself.
        let quad = two_atom_quad();
        let (a, w, kap) = (0.5, 1.0 / 12.0, 1.5);
        let (lam, mu) = (0.7, 1.9);
        let s = lam + mu;
        let j =
            w * kap * (1.0 / (kap + s) - 1.0 / (kap + lam) - 1.0 / (kap + mu) + 1.0 / kap);
        let want = bilinear_exp(&quad, 1.0, lam, mu).unwrap().symmetric;

        let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7_0a11);
        let n = 200_000usize;
        let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
        for _ in 0..n {
            let u1: f64 = rng.gen::<f64>();
            let u2: f64 = rng.gen::<f64>();
            // Inverse-CDF exponential draws; gen() lies in [0, 1), so the
            // complements stay strictly positive.
            let x = -(1.0 - u1).ln() - 0.5 * (1.0 - u2).ln();
            let h = (a * lam * mu + 0.5 * j) * x * (-s * x).exp();
            sum += h;
            sum_sq += h * h;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(se > 0.0);
        assert!(
            (mean - want).abs() < 5.0 * se,
            "MC mean {mean} vs closed form {want}, se {se}"
        );
    }

    #[test]
    fn value_splits_exactly() {
        let quad = two_atom_quad();
        for &(lam, mu) in &[(0.5, 2.0), (1.0, 1.0), (3.0, 0.25)] {
            let v = bilinear_exp(&quad, 1.0, lam, mu).unwrap();
            assert_eq!(v.full, v.symmetric + v.antisymmetric);
            if lam == mu {
                assert_eq!(v.antisymmetric, 0.0);
            }
        }
        assert_eq!(bilinear_exp(&quad, 1.0, 0.0, 2.0).unwrap().full, 0.0);
        assert_eq!(bilinear_exp(&quad, 1.0, 2.0, 0.0).unwrap().full, 0.0);
    }

    #[test]
    fn reversibility_separates_diffusive_from_jumping() {
        let cir = Quadruplet::new(1.0, 1.0, PM::zero(), 1.5).unwrap();
        let res = reversibility_residual(&cir, 1.5, &REVERSIBILITY_GRID).unwrap();
        assert!(res <= 1e-12, "diffusive mechanism shows asymmetry {res}");

        let jumping = two_atom_quad();
        let res = reversibility_residual(&jumping, 1.0, &REVERSIBILITY_GRID).unwrap();
        assert!(res > 1e-4, "jump mechanism asymmetry {res} unexpectedly small");

        // Light weights and well-separated atoms leave the Laplace damping
        // mild, so the asymmetry of the form is an order larger.
        let m = PM::atomic(vec![atom(0.3, 1.0), atom(0.3, 6.0)]).unwrap();
        let corr = forward(&ThorinPair::new(0.0, m).unwrap()).unwrap();
        let quad = Quadruplet::new(corr.a, corr.b, corr.spectral, 0.5).unwrap();
        let res = reversibility_residual(&quad, 0.5, &REVERSIBILITY_GRID).unwrap();
        assert!(res > 1e-3, "separated-atom asymmetry {res} unexpectedly small");
    }

    #[test]
    fn empirical_unit_for_symmetric_mechanisms() {
        let cir = Quadruplet::new(1.0, 1.0, PM::zero(), 1.0).unwrap();
        let e = empirical_sector(&cir, 1.0, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(e, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn empirical_monotone_under_refinement() {
        let pair = two_atom_pair();
        let corr = forward(&pair).unwrap();
        let quad = Quadruplet::new(corr.a, corr.b, corr.spectral, 1.0).unwrap();
        let coarse = empirical_sector(&quad, 1.0, &[1.0, 2.0]).unwrap();
        let mid = empirical_sector(&quad, 1.0, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        let fine = empirical_sector(&quad, 1.0, &[0.25, 0.5, 1.0, 2.0, 4.0, 8.0]).unwrap();
        assert!(coarse <= mid + 1e-12, "coarse {coarse} > mid {mid}");
        assert!(mid <= fine + 1e-12, "mid {mid} > fine {fine}");
        assert!(coarse > 1.0, "asymmetric form but span value {coarse} ≤ 1");
        assert!(fine <= 1.0 + (2.0f64 / 3.0).sqrt() + 1e-6);
    }

    #[test]
    fn polynomial_pair_has_rational_values() {
        let m = PM::atomic(vec![atom(1.0, 1.0), atom(1.0, 2.0)]).unwrap();
        let (e_ff, e_gg, e_fg, e_gf) = polynomial_pair_values(&m).unwrap();
        assert_relative_eq!(e_ff, 5.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(e_gg, 27.0, max_relative = 1e-12);
        assert_relative_eq!(e_fg, 4.0, max_relative = 1e-12);
        assert_relative_eq!(e_gf, 37.0 / 9.0, max_relative = 1e-12);
    }

    #[test]
    fn lower_routes_agree_on_two_atoms() {
        let m = PM::atomic(vec![atom(1.0, 1.0), atom(1.0, 2.0)]).unwrap();
        let via_moments = lower_bound_moments(&m).unwrap();
        assert_relative_eq!(via_moments, (1.0f64 + 1.0 / 1961.0).sqrt(), max_relative = 1e-12);
        let (e_ff, e_gg, e_fg, e_gf) = polynomial_pair_values(&m).unwrap();
        let via_pair = lower_bound_general(e_ff, e_gg, e_fg, e_gf);
        assert_relative_eq!(via_pair, via_moments, max_relative = 1e-10);
    }

    #[test]
    fn lower_bound_general_cases() {
        // Symmetric input and non-positive diagonals carry no information.
        assert_eq!(lower_bound_general(1.0, 1.0, 0.7, 0.7), 1.0);
        assert_eq!(lower_bound_general(0.0, 1.0, 0.7, 0.3), 1.0);
        // Degenerate symmetric part with genuine asymmetry certifies ∞.
        assert_eq!(lower_bound_general(1.0, 1.0, 1.2, 0.8), f64::INFINITY);
        // Transposing the pair cannot change the bound.
        let (e_ff, e_gg, e_fg, e_gf) = (5.0 / 6.0, 27.0, 4.0, 37.0 / 9.0);
        assert_eq!(
            lower_bound_general(e_ff, e_gg, e_fg, e_gf),
            lower_bound_general(e_gg, e_ff, e_gf, e_fg)
        );
        // When ℰ(f,f)ℰ(g,g) = ℰ(f,g)ℰ̃ the ratio form takes over.
        let check = 0.25f64;
        let tilde = 0.5 * (-check + (check * check + 16.0).sqrt());
        let v = lower_bound_general(2.0, 2.0, tilde + check, tilde - check);
        assert_relative_eq!(v, (1.0 + check / tilde).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn stationary_moment_oracles() {
        let single = PM::atomic(vec![atom(1.0, 1.0)]).unwrap();
        let (x1, x2, x3) = ggc_moments(&single).unwrap();
        assert_relative_eq!(x1, 1.0, max_relative = 1e-12);
        assert_relative_eq!(x2, 2.0, max_relative = 1e-12);
        assert_relative_eq!(x3, 6.0, max_relative = 1e-12);

        let doubled = PM::atomic(vec![atom(2.0, 1.0)]).unwrap();
        let (x1, x2, x3) = ggc_moments(&doubled).unwrap();
        assert_relative_eq!(x1, 2.0, max_relative = 1e-12);
        assert_relative_eq!(x2, 6.0, max_relative = 1e-12);
        assert_relative_eq!(x3, 24.0, max_relative = 1e-12);

        let m = PM::atomic(vec![atom(1.0, 1.0), atom(1.0, 2.0)]).unwrap();
        let (x1, x2, x3) = ggc_moments(&m).unwrap();
        assert_relative_eq!(x1, 1.5, max_relative = 1e-12);
        assert_relative_eq!(x2, 3.5, max_relative = 1e-12);
        assert_relative_eq!(x3, 11.25, max_relative = 1e-12);
    }

    #[test]
    fn upper_bounds_take_known_values() {
        let pair = two_atom_pair();
        let corr = forward(&pair).unwrap();
        let (first, second) = upper_bound_thorin(&pair, &corr.spectral).unwrap();
        assert_relative_eq!(first, (2.0f64 / 3.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(second, 1.0, max_relative = 1e-12);

        let quad_sq = upper_bound_quad(corr.a, corr.b, &corr.spectral).unwrap();
        assert_relative_eq!(quad_sq, 2.0 / 3.0, max_relative = 1e-12);

        assert_eq!(upper_bound_quad(0.5, 1.0, &PM::zero()).unwrap(), 0.0);
        assert_eq!(
            upper_bound_quad(0.0, 1.0, &corr.spectral).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn bounds_unit_exactly_for_reversible_input() {
        // A single atom corresponds to a diffusive mechanism (M ≡ 0); all
        // routes must then report the symmetric value 1 exactly.
        let pair = ThorinPair::new(0.0, PM::atomic(vec![atom(1.0, 1.0)]).unwrap()).unwrap();
        let report = sector_report(&pair, 1.0, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(report.lower_moments, 1.0);
        assert_eq!(report.lower_general, 1.0);
        assert_eq!(report.upper_thorin_a, 1.0);
        assert_eq!(report.upper_thorin_b, 1.0);
        assert_eq!(report.upper_quad, 1.0);
        assert_relative_eq!(report.empirical, 1.0, max_relative = 1e-9);
        assert!(report.reversibility_residual <= 1e-12);
    }

    #[test]
    fn drift_domination_matches_first_support_bound() {
        let pair = two_atom_pair();
        let corr = forward(&pair).unwrap();
        let dd = drift_domination(corr.a, pair.m(), &corr.spectral).unwrap();
        assert_relative_eq!(dd.c2, 0.5, max_relative = 1e-12);
        assert_relative_eq!(dd.c1, 0.25, max_relative = 1e-12);
        let (first, _) = upper_bound_thorin(&pair, &corr.spectral).unwrap();
        assert_eq!(dd.bound, first);
        assert!(dd.c2_observed <= dd.c2 + 1e-12);
        assert_relative_eq!(dd.c2_observed, dd.c2, max_relative = 1e-6);
    }

    #[test]
    fn report_sandwich_for_two_atoms() {
        let pair = two_atom_pair();
        let report = sector_report(&pair, 1.0, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        let cap = 1.0 + (2.0f64 / 3.0).sqrt();
        assert!(report.empirical > 1.0, "empirical {} not > 1", report.empirical);
        assert!(report.empirical <= cap + 1e-6);
        assert!(report.lower_moments <= report.empirical + 1e-9);
        assert!(report.lower_general <= report.empirical + 1e-9);
        assert_relative_eq!(report.upper_thorin_a, cap, max_relative = 1e-12);
        assert_relative_eq!(report.upper_thorin_b, 2.0, max_relative = 1e-12);
        assert_relative_eq!(report.upper_quad, cap, max_relative = 1e-12);
        assert!(report.reversibility_residual > 1e-4);
        assert!(report.identity_residual < 1e-8);
        assert_eq!(report.basis.len(), 4);
        assert_eq!(report.matrices.full.len(), 4);

        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "lowerMoments",
            "lowerGeneral",
            "upperThorinA",
            "upperThorinB",
            "upperQuad",
            "empirical",
            "basis",
            "matrices",
            "reversibilityResidual",
            "identityResidual",
        ] {
            assert!(json.get(key).is_some(), "missing report key {key}");
        }
    }

    #[test]
    fn non_ergodic_mechanisms_are_rejected() {
        let quad = Quadruplet::new(1.0, 0.0, PM::zero(), 1.0).unwrap();
        let err = bilinear_exp(&quad, 1.0, 1.0, 2.0).unwrap_err();
        assert!(matches!(err, Error::NonErgodic(_)));
    }

    #[test]
    fn grid_validation_rejects_bad_input() {
        let quad = two_atom_quad();
        assert!(matches!(
            empirical_sector(&quad, 1.0, &[]).unwrap_err(),
            Error::Input(_)
        ));
        assert!(matches!(
            empirical_sector(&quad, 1.0, &[1.0, -2.0]).unwrap_err(),
            Error::Input(_)
        ));
        assert!(matches!(
            empirical_sector(&quad, 1.0, &[1.0, 1.0]).unwrap_err(),
            Error::Input(_)
        ));
    }
}
