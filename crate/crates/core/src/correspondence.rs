//! The bijection between stationary jump structures and branching mechanisms.
//!
//! A stationary pair (q, m) and a mechanism triple (a, b, M) correspond to
//! each other exactly when the reciprocal resolvent identity
//!
//! ```text
//!   q + ∫ m(du)/(λ+u)  =  1 / (aλ + b + λ ∫ M(du)/(λ+u))        (λ > 0)
//! ```
//!
//! holds. Both directions are implemented here with three interchangeable
//! routes, picked per input family:
//!
//! * closed form, when the right-hand structure is known exactly (degenerate
//!   pairs, the stable tail and its dual, and the self-corresponding
//!   free-Poisson and dual-stable families where M = m);
//! * the rational route of [`poly`], when the measure is purely atomic;
//! * boundary-value inversion via [`invert`], for every other family: the
//!   identity is read as a formula for the unknown side's Stieltjes
//!   transform, whose boundary values on the known continuous support give
//!   the density and whose real poles in the gaps give the atoms.
//!
//! Every result carries the worst relative defect of the identity over a
//! fixed logarithmic sweep of λ; construction fails if that residual exceeds
//! the route's tolerance, so a returned value is always a certified one.

mod invert;
mod poly;

pub use invert::{halving_ladder, stieltjes_invert, Inversion};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{Atom, MomentValue, PositiveMeasure, ThorinPair};
use crate::mechanism::Quadruplet;

/// Identity-residual sweep: 100 logarithmically spaced λ in [10⁻³, 10³].
const RESIDUAL_POINTS: usize = 100;
const RESIDUAL_LO: f64 = 1e-3;
const RESIDUAL_HI: f64 = 1e3;
/// Residual tolerance for exact routes (closed form and rational).
const RESIDUAL_EXACT: f64 = 1e-8;
/// Residual tolerance for the inversion route.
const RESIDUAL_NUMERIC: f64 = 1e-4;
/// Relative slack for the mass cross-check of inverted spectral measures.
const MASS_CHECK_NUMERIC: f64 = 2e-3;

/// How a correspondence result was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Polynomial,
    Inversion,
}

/// A matched stationary pair and mechanism triple, with the certified
/// residual of the defining identity.
#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceResult {
    pub q: f64,
    pub m: PositiveMeasure,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "M")]
    pub spectral: PositiveMeasure,
    pub method: Method,
    #[serde(rename = "identityResidual")]
    pub identity_residual: f64,
}

impl CorrespondenceResult {
    fn certified(
        q: f64,
        m: PositiveMeasure,
        a: f64,
        b: f64,
        spectral: PositiveMeasure,
        method: Method,
    ) -> Result<Self> {
        let identity_residual = identity_residual(q, &m, a, b, &spectral)?;
        let cap = match method {
            Method::Inversion => RESIDUAL_NUMERIC,
            _ => RESIDUAL_EXACT,
        };
        if !(identity_residual <= cap) {
            return Err(Error::Invariant(format!(
                "identity residual {identity_residual:.3e} exceeds the {cap:.0e} tolerance \
                 of the {method:?} route"
            )));
        }
        Ok(CorrespondenceResult { q, m, a, b, spectral, method, identity_residual })
    }
}

/// Worst relative defect of the reciprocal resolvent identity over the
/// standard λ sweep.
pub fn identity_residual(
    q: f64,
    m: &PositiveMeasure,
    a: f64,
    b: f64,
    spectral: &PositiveMeasure,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..RESIDUAL_POINTS {
        let t = i as f64 / (RESIDUAL_POINTS - 1) as f64;
        let lam = RESIDUAL_LO * (RESIDUAL_HI / RESIDUAL_LO).powf(t);
        let lhs = q + m.resolvent(lam)?;
        let rhs = 1.0 / (a * lam + b + lam * spectral.resolvent(lam)?);
        let denom = lhs.abs().max(rhs.abs());
        if denom > 0.0 {
            worst = worst.max((lhs - rhs).abs() / denom);
        }
    }
    Ok(worst)
}

/// Relative tolerance for recognizing parameters that sit exactly on a
/// self-corresponding manifold. Inputs further away fall through to the
/// generic routes, which certify or reject them on their own terms.
const FIXED_POINT_TOL: f64 = 1e-12;

fn rel_eq(x: f64, y: f64) -> bool {
    (x - y).abs() <= FIXED_POINT_TOL * x.abs().max(y.abs())
}

/// Whether the pair (q, scale·P_{α,β}) reproduces itself as its own spectral
/// measure. For q = 0 this happens exactly when α = scale², with any β ≥ 1;
/// for q > 0 exactly when α = scale/q and β = 1/(scale·q). In both cases the
/// moment-determined constants a and b already agree with the fixed-point
/// values, so only the dispatch needs the test.
fn free_poisson_fixed_point(q: f64, scale: f64, alpha: f64, beta: f64) -> bool {
    if q == 0.0 {
        let _ = beta;
        rel_eq(alpha, scale * scale)
    } else {
        rel_eq(alpha, scale / q) && rel_eq(beta, 1.0 / (scale * q))
    }
}

/// Backward counterpart of [`free_poisson_fixed_point`]: whether the
/// constants (a, b) with the candidate q place scale·P_{α,β} on the
/// self-corresponding manifold (then m = M).
fn free_poisson_fixed_point_constants(
    a: f64,
    b: f64,
    q: f64,
    scale: f64,
    alpha: f64,
    beta: f64,
) -> bool {
    if a > 0.0 {
        // q = 0 branch: a = 1/scale, b = scale·(β − 1), α = scale².
        rel_eq(a * scale, 1.0)
            && (b - scale * (beta - 1.0)).abs() <= FIXED_POINT_TOL * b.abs().max(1.0)
            && rel_eq(alpha, scale * scale)
    } else {
        // a = 0 branch: q = 1/(b + scale) is consistent with b automatically,
        // so only the shape parameters constrain the manifold.
        q > 0.0 && rel_eq(alpha, scale * (b + scale)) && rel_eq(beta, (b + scale) / scale)
    }
}

/// Mechanism triple (a, b, M) of a stationary pair (q, m).
///
/// The constants come first: a = 1/m̄₀ if q = 0 (zero otherwise, and zero
/// when m̄₀ = ∞), b = 1/(q + m̄₋₁) with the convention 1/∞ = 0. The spectral
/// measure follows by the route matching m's family. The returned result is
/// residual-certified, and the spectral mass is cross-checked against its
/// moment prediction whenever the latter is finite.
pub fn forward(pair: &ThorinPair) -> Result<CorrespondenceResult> {
    let q = pair.q();
    let m = pair.m().clone();
    if q == 0.0 && m.is_zero() {
        return Err(Error::Domain(
            "the trivial pair q = 0, m = 0 has no mechanism counterpart".into(),
        ));
    }
    let m0 = m.moment(0.0)?;
    let mneg1 = m.moment(-1.0)?;
    let a = if q > 0.0 { 0.0 } else { m0.recip() };
    let b = if mneg1.is_finite() { 1.0 / (q + mneg1.value()) } else { 0.0 };

    let (spectral, method) = match &m {
        m_ if m_.is_zero() => (PositiveMeasure::zero(), Method::ClosedForm),
        PositiveMeasure::Atomic(atoms) => {
            let found = poly::forward_atoms(q, atoms)?;
            if found.is_empty() {
                (PositiveMeasure::zero(), Method::ClosedForm)
            } else {
                (PositiveMeasure::atomic(found)?, Method::Polynomial)
            }
        }
        PositiveMeasure::StableTail { alpha, kappa } if q == 0.0 => {
            (PositiveMeasure::stable_tail_dual(*alpha, *kappa)?, Method::ClosedForm)
        }
        // Self-corresponding families: the identity closes with M = m, so the
        // spectral measure is the input itself (see `boolean` for the map
        // (q, a, b) ↦ fixed-point measure these branches invert).
        PositiveMeasure::StableTailDual { alpha, kappa: _ }
            if q == 0.0 && (*alpha - 0.5).abs() <= FIXED_POINT_TOL =>
        {
            (m.clone(), Method::ClosedForm)
        }
        PositiveMeasure::FreePoissonScaled { scale, alpha, beta }
            if free_poisson_fixed_point(q, *scale, *alpha, *beta) =>
        {
            (m.clone(), Method::ClosedForm)
        }
        _ => (forward_inversion(q, &m, a, b)?, Method::Inversion),
    };

    let predicted = spectral_moments(q, &m)?.m0;
    if predicted.is_finite() {
        let actual = spectral.moment(0.0)?;
        let tol = match method {
            Method::Inversion => MASS_CHECK_NUMERIC * predicted.value() + 1e-6,
            _ => RESIDUAL_EXACT * (1.0 + predicted.value()),
        };
        if !((actual.value() - predicted.value()).abs() <= tol) {
            return Err(Error::Consistency(format!(
                "spectral mass {} disagrees with its moment prediction {}",
                actual.value(),
                predicted.value()
            )));
        }
    }

    CorrespondenceResult::certified(q, m, a, b, spectral, method)
}

/// Stationary pair (q, m) of a mechanism (a, b, M); defined for ergodic
/// mechanisms only.
///
/// q = 1/(b + M̄₀) if a = 0 (zero otherwise, and zero when M̄₀ = ∞); m comes
/// from the route matching M's family, with gap atoms located as real poles
/// of the reconstructed transform.
pub fn backward(a: f64, b: f64, spectral: &PositiveMeasure) -> Result<CorrespondenceResult> {
    let mech = Quadruplet::new(a, b, spectral.clone(), 1.0)?;
    if !mech.is_ergodic()? {
        return Err(Error::NonErgodic(
            "the stationary pair exists for ergodic mechanisms only".into(),
        ));
    }
    let spec_mass = spectral.moment(0.0)?;
    let q_default = if a > 0.0 {
        0.0
    } else {
        MomentValue::new(b + spec_mass.value()).recip()
    };

    let (q, m, method) = if spectral.is_zero() {
        if a > 0.0 {
            // No jumps: the transform q + 1/(aλ + b) has the single pole b/a.
            let atom = Atom { weight: 1.0 / a, location: b / a };
            (0.0, PositiveMeasure::atomic(vec![atom])?, Method::ClosedForm)
        } else {
            (1.0 / b, PositiveMeasure::zero(), Method::ClosedForm)
        }
    } else {
        match spectral {
            PositiveMeasure::Atomic(sp) => {
                let (q, atoms) = poly::backward_atoms(a, b, sp)?;
                (q, PositiveMeasure::atomic(atoms)?, Method::Polynomial)
            }
            PositiveMeasure::StableTailDual { alpha, kappa }
                if a == 0.0 && (b - kappa.powf(*alpha)).abs() <= 1e-12 * kappa.powf(*alpha) =>
            {
                (0.0, PositiveMeasure::stable_tail(*alpha, *kappa)?, Method::ClosedForm)
            }
            // Mirrors of the self-corresponding forward branches: when (a, b)
            // sit exactly where the fixed-point map places them, m = M.
            PositiveMeasure::StableTailDual { alpha, kappa }
                if a == 0.0
                    && (*alpha - 0.5).abs() <= FIXED_POINT_TOL
                    && (b - 2.0 * kappa.sqrt()).abs()
                        <= FIXED_POINT_TOL * (2.0 * kappa.sqrt()).max(1.0) =>
            {
                (0.0, spectral.clone(), Method::ClosedForm)
            }
            PositiveMeasure::FreePoissonScaled { scale, alpha, beta }
                if free_poisson_fixed_point_constants(a, b, q_default, *scale, *alpha, *beta) =>
            {
                (q_default, spectral.clone(), Method::ClosedForm)
            }
            _ => {
                let m = backward_inversion(a, b, spectral, q_default)?;
                (q_default, m, Method::Inversion)
            }
        }
    };

    CorrespondenceResult::certified(q, m, a, b, spectral.clone(), method)
}

/// Spectral mass and reciprocal moments determined by the stationary side.
///
/// Writing T = q + m̄₋₁, matching the small-λ expansions of both sides of the
/// identity gives b = 1/T and, order by order,
///
/// ```text
///   M̄₀  = 1/q − b                 (q > 0)
///        = m̄₁/m̄₀² − b             (q = 0, m̄₀ < ∞; ∞ otherwise)
///   M̄₋₁ = m̄₋₂/T² − a
///   M̄₋₂ = m̄₋₃/T² − m̄₋₂²/T³
///   M̄₋₃ = m̄₋₄/T² − 2 m̄₋₂ m̄₋₃/T³ + m̄₋₂³/T⁴
/// ```
///
/// with a = 1/m̄₀ when q = 0 and 0 otherwise. A reciprocal moment is ∞ as
/// soon as the next Thorin moment it depends on is.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralMoments {
    #[serde(rename = "M0")]
    pub m0: MomentValue,
    #[serde(rename = "M-1")]
    pub m_neg1: MomentValue,
    #[serde(rename = "M-2")]
    pub m_neg2: MomentValue,
    #[serde(rename = "M-3")]
    pub m_neg3: MomentValue,
}

/// See [`SpectralMoments`] for the formulas.
pub fn spectral_moments(q: f64, m: &PositiveMeasure) -> Result<SpectralMoments> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::Input(format!("translation term must be ≥ 0, got {q}")));
    }
    let mb0 = m.moment(0.0)?;
    let mneg1 = m.moment(-1.0)?;
    let mneg2 = m.moment(-2.0)?;
    let mneg3 = m.moment(-3.0)?;
    let mneg4 = m.moment(-4.0)?;
    let a = if q > 0.0 { 0.0 } else { mb0.recip() };
    let t_finite = mneg1.is_finite();
    let b = if t_finite { 1.0 / (q + mneg1.value()) } else { 0.0 };
    let t = q + mneg1.value();

    let m0 = if q > 0.0 {
        MomentValue::new(1.0 / q - b)
    } else if mb0.is_finite() {
        let mb1 = m.moment(1.0)?;
        if mb1.is_finite() {
            MomentValue::new(mb1.value() / (mb0.value() * mb0.value()) - b)
        } else {
            MomentValue::INFINITE
        }
    } else {
        MomentValue::INFINITE
    };

    let m_neg1 = if t_finite && mneg2.is_finite() {
        MomentValue::new(mneg2.value() / (t * t) - a)
    } else {
        MomentValue::INFINITE
    };
    let m_neg2 = if t_finite && mneg3.is_finite() {
        MomentValue::new(mneg3.value() / (t * t) - mneg2.value().powi(2) / t.powi(3))
    } else {
        MomentValue::INFINITE
    };
    let m_neg3 = if t_finite && mneg4.is_finite() {
        MomentValue::new(
            mneg4.value() / (t * t) - 2.0 * mneg2.value() * mneg3.value() / t.powi(3)
                + mneg2.value().powi(3) / t.powi(4),
        )
    } else {
        MomentValue::INFINITE
    };

    Ok(SpectralMoments { m0, m_neg1, m_neg2, m_neg3 })
}

/// Two-sided enclosure of the spectral support determined by (q, r, m).
///
/// `s_minus` and `s_plus` enclose S(M); which side is sharp depends on the
/// constants of the extended triple: a vanishes unless q = 0 and m̄₀ < ∞,
/// and b vanishes unless r = 0 and m̄₋₁ < ∞ (a positive immigration weight
/// contributes r/λ to the transform, which kills the drift term). Whenever a
/// constant vanishes the matching edge is the crossing of the strictly
/// increasing gap function s(q − G_m(s)) with r; otherwise the matching edge
/// of S(m) itself bounds S(M).
///
/// `closed_form_minus` and `closed_form_plus` are the explicit
/// quadratic-root bounds obtained by replacing the resolvent with its
/// single-atom extremal value; they satisfy `closed_form_minus ≤ s_minus`
/// and `s_plus ≤ closed_form_plus`, with equality for a single atom.
///
/// The immigration weight r enters only here; the correspondence itself is
/// independent of it.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SupportBracket {
    pub s_minus: f64,
    pub s_plus: f64,
    pub closed_form_minus: f64,
    pub closed_form_plus: f64,
}

/// See [`SupportBracket`]. The gap function s ↦ s(q − G_m(s)) is strictly
/// increasing on both real gaps, so each sharp edge is a bisection away.
pub fn support_bracket(q: f64, r: f64, m: &PositiveMeasure) -> Result<SupportBracket> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::Input(format!("translation term must be ≥ 0, got {q}")));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Input(format!("immigration weight must be ≥ 0, got {r}")));
    }
    let (inf_s, sup_s) = m
        .support()
        .ok_or_else(|| Error::Domain("the zero measure has no support bracket".into()))?;
    let mb0 = m.moment(0.0)?;
    let a_pos = q == 0.0 && mb0.is_finite();
    let b_pos = r == 0.0 && m.moment(-1.0)?.is_finite();

    let gap = |s: f64| -> Result<f64> {
        let g = m.stieltjes(Complex64::new(s, 0.0))?.re;
        Ok(s * (q - g))
    };

    let s_minus = if b_pos || inf_s <= 0.0 {
        inf_s.max(0.0)
    } else if r == 0.0 {
        0.0
    } else {
        let hi = inf_s * (1.0 - 1e-10);
        if gap(hi)? <= r {
            inf_s
        } else {
            let f = |s: f64| -> Result<f64> { Ok(gap(s)? - r) };
            invert::find_pole(&f, 0.0, hi)?.unwrap_or(inf_s)
        }
    };

    let s_plus = if a_pos {
        sup_s
    } else if q == 0.0 || !sup_s.is_finite() {
        f64::INFINITY
    } else {
        let lo = sup_s * (1.0 + 1e-10) + 1e-300;
        if gap(lo)? >= r {
            sup_s
        } else {
            let mut hi = sup_s + (r + mb0.value()) / q;
            let mut tries = 0;
            while gap(hi)? <= r {
                hi = sup_s + (hi - sup_s) * 2.0;
                tries += 1;
                if tries > 60 {
                    return Err(Error::Solver("no upper crossing of the gap function".into()));
                }
            }
            let f = |s: f64| -> Result<f64> { Ok(gap(s)? - r) };
            invert::find_pole(&f, lo, hi)?
                .ok_or_else(|| Error::Solver("upper gap crossing lost during bisection".into()))?
        }
    };

    let closed_form_minus = if r == 0.0 || !mb0.is_finite() {
        0.0
    } else if q == 0.0 {
        r * inf_s / (r + mb0.value())
    } else {
        let bq = r + mb0.value() + q * inf_s;
        (bq - (bq * bq - 4.0 * q * r * inf_s).sqrt()) / (2.0 * q)
    };
    let closed_form_plus = if q == 0.0 || !mb0.is_finite() || !sup_s.is_finite() {
        f64::INFINITY
    } else {
        let bq = r + mb0.value() + q * sup_s;
        (bq + (bq * bq - 4.0 * q * r * sup_s).sqrt()) / (2.0 * q)
    };

    Ok(SupportBracket { s_minus, s_plus, closed_form_minus, closed_form_plus })
}

/// Complement of the covered pieces (continuous blocks plus atom locations)
/// within (0, cap]; these are the intervals a pole search must sweep.
fn gap_segments(
    blocks: &[(f64, f64)],
    atom_locs: &[f64],
    upper_cap: Option<f64>,
) -> Vec<(f64, f64)> {
    let mut pieces: Vec<(f64, f64)> = blocks.to_vec();
    pieces.extend(atom_locs.iter().map(|&l| (l, l)));
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for p in pieces {
        match merged.last_mut() {
            Some(last) if p.0 <= last.1 => last.1 = last.1.max(p.1),
            _ => merged.push(p),
        }
    }
    let mut gaps = Vec::new();
    if let Some(&(lo0, _)) = merged.first() {
        if lo0 > 0.0 {
            gaps.push((0.0, lo0));
        }
    }
    for w in merged.windows(2) {
        if w[1].0 > w[0].1 {
            gaps.push((w[0].1, w[1].0));
        }
    }
    if let Some(&(_, hi_last)) = merged.last() {
        if hi_last.is_finite() {
            if let Some(cap) = upper_cap {
                if cap > hi_last {
                    gaps.push((hi_last, cap));
                }
            }
        }
    }
    gaps
}

/// Density grid and offset ladder for one support block.
fn grids_for_block(lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    if hi.is_finite() {
        (invert::compact_grid(lo, hi), invert::ladder_for_span(hi - lo))
    } else {
        (invert::tail_grid(lo), invert::ladder_for_span(lo.max(1.0)))
    }
}

/// Shared tail of both inversion routes: invert `g` over the blocks, append
/// the located gap atoms, and refuse to certify a result when too many grid
/// points failed to settle.
fn assemble_inverted<F>(
    g: F,
    blocks: &[(f64, f64)],
    mut atoms: Vec<Atom>,
) -> Result<PositiveMeasure>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut parts = Vec::new();
    let mut flagged = 0usize;
    let mut total = 0usize;
    for &(lo, hi) in blocks {
        let (xs, ys) = grids_for_block(lo, hi);
        let inv = stieltjes_invert(&g, &xs, &ys)?;
        flagged += inv.flagged.iter().filter(|&&f| f).count();
        total += xs.len();
        atoms.extend(inv.atoms);
        let part = PositiveMeasure::grid(xs, inv.densities)?;
        if !part.is_zero() {
            parts.push(part);
        }
    }
    if flagged * 10 > total {
        return Err(Error::Inconclusive(format!(
            "{flagged} of {total} boundary extrapolations failed to settle"
        )));
    }
    if !atoms.is_empty() {
        parts.push(PositiveMeasure::atomic(atoms)?);
    }
    if parts.is_empty() {
        return Err(Error::Solver(
            "inversion recovered no mass at all; the transform routes disagree".into(),
        ));
    }
    Ok(PositiveMeasure::sum(parts))
}

/// Refuse sources whose density is flat and positive down to 0 when the
/// drift constant vanishes. The partner's resolvent then diverges only
/// logarithmically at 0, so the partner measure carries mass ≈ 1/|log ε|
/// below every ε; no grid reaches that to tolerance, while power-law spikes
/// (which come with a power-law divergent resolvent) invert cleanly.
fn reject_log_edge(source: &PositiveMeasure, b: f64, first_lo: f64, what: &str) -> Result<()> {
    if b != 0.0 || first_lo > 0.0 {
        return Ok(());
    }
    let deep = source.density_at(1e-12);
    let near = source.density_at(1e-6);
    if deep > 0.0 && deep < 3.0 * near {
        return Err(Error::Domain(format!(
            "{what} has a flat positive density at 0; its partner measure then \
             concentrates logarithmically at 0 and cannot be represented on a grid"
        )));
    }
    Ok(())
}

/// Inversion route of [`forward`]: solve the identity for G_M,
/// G_M(z) = (az − b − 1/(G_m(z) − q))/z, read densities off its boundary
/// values on m's continuous support and atoms off the real solutions of
/// G_m(s) = q in the gaps.
fn forward_inversion(q: f64, m: &PositiveMeasure, a: f64, b: f64) -> Result<PositiveMeasure> {
    let blocks = invert::continuous_blocks(m);
    if blocks.is_empty() {
        return Err(Error::Domain("inversion route needs a continuous part".into()));
    }
    reject_log_edge(m, b, blocks[0].0, "the stationary measure")?;
    let gm_real = |s: f64| -> Result<f64> { Ok(m.stieltjes(Complex64::new(s, 0.0))?.re) };
    let atom_locs: Vec<f64> = m.atoms().iter().map(|x| x.location).collect();

    // Above the support G_m decreases to 0, so a crossing with q needs q > 0
    // and sits below supS + m̄₀/q.
    let top = blocks
        .last()
        .map(|&(_, hi)| hi)
        .unwrap_or(0.0)
        .max(atom_locs.iter().copied().fold(0.0, f64::max));
    let cap = if q > 0.0 && top.is_finite() {
        let m0 = m.moment(0.0)?;
        Some(top + 2.0 * m0.value() / q + 1.0)
    } else {
        None
    };

    let mut atoms = Vec::new();
    for (glo, ghi) in gap_segments(&blocks, &atom_locs, cap) {
        let f = |s: f64| -> Result<f64> { Ok(q - gm_real(s)?) };
        if let Some(s0) = invert::find_pole(&f, glo, ghi)? {
            let slope = invert::deriv5(&gm_real, s0, glo, ghi)?;
            let mass = -1.0 / (s0 * slope);
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::Solver(format!(
                    "gap pole at {s0} carries nonpositive mass {mass}"
                )));
            }
            atoms.push(Atom { weight: mass, location: s0 });
        }
    }

    let g = |z: Complex64| -> Result<Complex64> {
        let gm = m.stieltjes(z)?;
        Ok((a * z - b - 1.0 / (gm - q)) / z)
    };
    assemble_inverted(g, &blocks, atoms)
}

/// Inversion route of [`backward`]: solve the identity for G_m,
/// G_m(z) = q + 1/(az − b − zG_M(z)), with densities from M's continuous
/// support and atoms from the real zeros of d(x) = ax − b − xG_M(x), each
/// carrying mass 1/d′.
fn backward_inversion(
    a: f64,
    b: f64,
    spectral: &PositiveMeasure,
    q: f64,
) -> Result<PositiveMeasure> {
    let blocks = invert::continuous_blocks(spectral);
    if blocks.is_empty() {
        return Err(Error::Domain("inversion route needs a continuous part".into()));
    }
    reject_log_edge(spectral, b, blocks[0].0, "the spectral measure")?;
    let d_real = |x: f64| -> Result<f64> {
        Ok(a * x - b - x * spectral.stieltjes(Complex64::new(x, 0.0))?.re)
    };
    let atom_locs: Vec<f64> = spectral.atoms().iter().map(|x| x.location).collect();

    let top = blocks
        .last()
        .map(|&(_, hi)| hi)
        .unwrap_or(0.0)
        .max(atom_locs.iter().copied().fold(0.0, f64::max));
    // With a > 0 the gap function eventually turns positive (ax outgrows the
    // sublinear xG_M term), so a far zero always exists; bracket it by
    // doubling.
    let cap = if a > 0.0 && top.is_finite() {
        let mut hi = top.max(1.0) + b / a + 1.0;
        let mut tries = 0;
        while d_real(hi)? <= 0.0 {
            hi *= 2.0;
            tries += 1;
            if tries > 200 || !hi.is_finite() {
                return Err(Error::Solver("no upper zero of the gap function".into()));
            }
        }
        Some(hi)
    } else {
        None
    };

    let mut atoms = Vec::new();
    for (glo, ghi) in gap_segments(&blocks, &atom_locs, cap) {
        if let Some(x0) = invert::find_pole(&d_real, glo, ghi)? {
            let slope = invert::deriv5(&d_real, x0, glo, ghi)?;
            let mass = 1.0 / slope;
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::Solver(format!(
                    "gap zero at {x0} carries nonpositive mass {mass}"
                )));
            }
            atoms.push(Atom { weight: mass, location: x0 });
        }
    }

    let g = |z: Complex64| -> Result<Complex64> {
        let gs = spectral.stieltjes(z)?;
        Ok(q + 1.0 / (a * z - b - z * gs))
    };
    assemble_inverted(g, &blocks, atoms)
}
