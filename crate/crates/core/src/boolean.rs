//! Boolean convolution on probability Thorin measures, realized through the
//! correspondence: the cumulant transform K_m(z) = z − 1/G_m(z) is additive
//! under the convolution ⊎, and on the mechanism side the operation is plain
//! addition, (1, b₁, M₁) ⊎ (1, b₂, M₂) = (1, b₁+b₂, M₁+M₂). The module also
//! houses the free-Poisson family and the fixed-point measures, i.e. the
//! stationary pairs whose spectral image is the input measure itself.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::correspondence::{backward, forward};
use crate::error::{Error, Result};
use crate::measure::{PositiveMeasure, ThorinPair};

/// Tolerance on |m̄₀ − 1| for the probability-normalization gate.
const MASS_TOL: f64 = 1e-9;

/// Twenty fixed probe points off the closed positive axis, radii
/// {0.7, 1, 2, 5} × angles {π/3, π/2, 2π/3, 5π/6, 4π/3}; deterministic so
/// transform identities are reproducible.
pub fn complex_probes() -> Vec<Complex64> {
    let radii = [0.7, 1.0, 2.0, 5.0];
    let angles = [PI / 3.0, PI / 2.0, 2.0 * PI / 3.0, 5.0 * PI / 6.0, 4.0 * PI / 3.0];
    radii
        .iter()
        .flat_map(|&r| angles.iter().map(move |&t| Complex64::from_polar(r, t)))
        .collect()
}

fn require_probability(m: &PositiveMeasure) -> Result<()> {
    let m0 = m.moment(0.0)?;
    if !m0.is_finite() || (m0.value() - 1.0).abs() > MASS_TOL {
        return Err(Error::Domain(format!(
            "Boolean operations are defined for probability measures; total mass is {}",
            m0.value()
        )));
    }
    Ok(())
}

/// Boolean cumulant K_m(z) = z − 1/G_m(z) of a probability measure at a
/// point off the closed positive axis.
pub fn boolean_cumulant(m: &PositiveMeasure, z: Complex64) -> Result<Complex64> {
    require_probability(m)?;
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::Input(format!(
            "cumulant probe {} lies on the closed positive axis",
            z.re
        )));
    }
    let g = m.stieltjes(z)?;
    Ok(z - 1.0 / g)
}

/// Boolean convolution m₁ ⊎ m₂ of two probability Thorin measures: both
/// mechanisms have a = 1, and the convolution adds their (b, M) data before
/// mapping back. The result is again a probability Thorin measure.
pub fn boolean_convolve(m1: &PositiveMeasure, m2: &PositiveMeasure) -> Result<PositiveMeasure> {
    require_probability(m1)?;
    require_probability(m2)?;
    let c1 = forward(&ThorinPair::new(0.0, m1.clone())?)?;
    let c2 = forward(&ThorinPair::new(0.0, m2.clone())?)?;
    let combined = backward(1.0, c1.b + c2.b, &c1.spectral.plus(&c2.spectral))?;
    Ok(combined.m)
}

/// Boolean convolution power m^{⊎t}, t > 0: scales the mechanism data,
/// (1, b, M) ↦ (1, tb, tM). m^{⊎1} = m and powers compose additively.
pub fn boolean_power(m: &PositiveMeasure, t: f64) -> Result<PositiveMeasure> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Input(format!("convolution power must be > 0, got {t}")));
    }
    require_probability(m)?;
    let c = forward(&ThorinPair::new(0.0, m.clone())?)?;
    let scaled = if c.spectral.is_zero() { c.spectral } else { c.spectral.scale(t)? };
    Ok(backward(1.0, t * c.b, &scaled)?.m)
}

/// Parameters of the free Poisson law: rate β ≥ 0 and jump size α > 0. The
/// absolutely continuous part lives on [α(1−√β)², α(1+√β)²] with total mass
/// min(β, 1); for β < 1 the remaining 1−β sits in an atom at zero. The law
/// is a Thorin measure exactly when β ≥ 1.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FreePoissonParams {
    pub alpha: f64,
    pub beta: f64,
}

impl FreePoissonParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Input(format!("jump size must be > 0, got {alpha}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Input(format!("rate must be ≥ 0, got {beta}")));
        }
        Ok(FreePoissonParams { alpha, beta })
    }

    /// Support interval of the absolutely continuous part.
    pub fn support(&self) -> (f64, f64) {
        let root = self.beta.sqrt();
        (self.alpha * (1.0 - root).powi(2), self.alpha * (1.0 + root).powi(2))
    }
}

/// Density of the absolutely continuous part,
/// (2παu)⁻¹ √(4α²β − (u − α(1+β))²) inside the support and 0 elsewhere.
pub fn free_poisson_density(params: &FreePoissonParams, u: f64) -> f64 {
    if !(u > 0.0) {
        return 0.0;
    }
    let (lo, hi) = params.support();
    if u < lo || u > hi {
        return 0.0;
    }
    let d = 4.0 * params.alpha * params.alpha * params.beta
        - (u - params.alpha * (1.0 + params.beta)).powi(2);
    d.max(0.0).sqrt() / (2.0 * PI * params.alpha * u)
}

/// The stationary pair (q, m) whose spectral image under the correspondence
/// is m itself.
///
/// For a + q > 0 (with bq < 1) the fixed point is the scaled free Poisson
/// law
///
/// ```text
///   m = (1−bq)/(a+q) · P_{α,β},  α = (1−bq)/(a+q)²,  β = (1+ab)/(1−bq)
/// ```
///
/// and β ≥ 1 holds automatically. For a = q = 0 the fixed point is the
/// infinite-mass density (πu)⁻¹ √(u − (b/2)²) on [(b/2)², ∞), the index-1/2
/// dual-stable measure at threshold (b/2)²; b = 0 degenerates to the pure
/// power-tail measure. Mechanisms with q > 0 force a = 0 through the
/// correspondence, so q > 0 with a > 0 has no fixed point.
pub fn fixed_point_measure(q: f64, a: f64, b: f64) -> Result<ThorinPair> {
    for (name, v) in [("translation term", q), ("diffusion coefficient", a), ("drift", b)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Input(format!("{name} must be ≥ 0 and finite, got {v}")));
        }
    }
    if a == 0.0 && q == 0.0 {
        let kappa = (b / 2.0).powi(2);
        return ThorinPair::new(0.0, PositiveMeasure::stable_tail_dual(0.5, kappa)?);
    }
    if a > 0.0 && q > 0.0 {
        return Err(Error::Domain(
            "pairs with q > 0 correspond to mechanisms with a = 0; no fixed point exists"
                .into(),
        ));
    }
    let denom = 1.0 - b * q;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "the fixed-point regime needs bq < 1, got bq = {}",
            b * q
        )));
    }
    let scale = denom / (a + q);
    let alpha = denom / (a + q).powi(2);
    let beta = (1.0 + a * b) / denom;
    ThorinPair::new(q, PositiveMeasure::free_poisson_scaled(scale, alpha, beta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;
    use approx::assert_relative_eq;

    fn atom(weight: f64, location: f64) -> Atom {
        Atom { weight, location }
    }

    fn point_mass(location: f64) -> PositiveMeasure {
        PositiveMeasure::atomic(vec![atom(1.0, location)]).unwrap()
    }

    fn assert_atoms_eq(got: &PositiveMeasure, want: &[(f64, f64)], tol: f64) {
        let atoms = got.atoms();
        assert_eq!(atoms.len(), want.len(), "atom count mismatch: {atoms:?}");
        for (a, (w, l)) in atoms.iter().zip(want) {
            assert_relative_eq!(a.weight, *w, max_relative = tol);
            assert_relative_eq!(a.location, *l, max_relative = tol);
        }
    }

    #[test]
    fn point_mass_cumulant_is_its_location() {
        let m = point_mass(2.5);
        for z in complex_probes() {
            let k = boolean_cumulant(&m, z).unwrap();
            assert!((k - 2.5).norm() < 1e-12, "K({z}) = {k}");
        }
    }

    #[test]
    fn point_masses_add_their_locations() {
        let sum = boolean_convolve(&point_mass(1.0), &point_mass(2.0)).unwrap();
        assert_atoms_eq(&sum, &[(1.0, 3.0)], 1e-12);

        let powered = boolean_power(&point_mass(2.0), 1.5).unwrap();
        assert_atoms_eq(&powered, &[(1.0, 3.0)], 1e-12);
    }

    #[test]
    fn cumulants_add_under_convolution() {
        let m1 = PositiveMeasure::atomic(vec![atom(0.5, 1.0), atom(0.5, 3.0)]).unwrap();
        let m2 = PositiveMeasure::atomic(vec![atom(0.3, 0.8), atom(0.7, 2.2)]).unwrap();

        let self_conv = boolean_convolve(&m1, &m1).unwrap();
        let cross = boolean_convolve(&m1, &m2).unwrap();
        for z in complex_probes() {
            let k1 = boolean_cumulant(&m1, z).unwrap();
            let k2 = boolean_cumulant(&m2, z).unwrap();
            let k_self = boolean_cumulant(&self_conv, z).unwrap();
            let k_cross = boolean_cumulant(&cross, z).unwrap();
            assert!((k_self - 2.0 * k1).norm() < 1e-10, "‖K_self − 2K₁‖ at {z}");
            assert!((k_cross - k1 - k2).norm() < 1e-10, "‖K_cross − K₁ − K₂‖ at {z}");
        }
    }

    #[test]
    fn powers_form_a_semigroup() {
        let m = PositiveMeasure::atomic(vec![atom(0.5, 1.0), atom(0.5, 3.0)]).unwrap();

        let identity = boolean_power(&m, 1.0).unwrap();
        assert_atoms_eq(&identity, &[(0.5, 1.0), (0.5, 3.0)], 1e-10);

        let doubled = boolean_power(&m, 2.0).unwrap();
        let convolved = boolean_convolve(&m, &m).unwrap();
        let (da, ca) = (doubled.atoms(), convolved.atoms());
        assert_eq!(da.len(), ca.len());
        for (d, c) in da.iter().zip(&ca) {
            assert_relative_eq!(d.weight, c.weight, max_relative = 1e-10);
            assert_relative_eq!(d.location, c.location, max_relative = 1e-10);
        }

        let part1 = boolean_power(&m, 0.7).unwrap();
        let part2 = boolean_power(&m, 1.3).unwrap();
        let composed = boolean_convolve(&part1, &part2).unwrap();
        for z in complex_probes() {
            let k_composed = boolean_cumulant(&composed, z).unwrap();
            let k_doubled = boolean_cumulant(&doubled, z).unwrap();
            assert!((k_composed - k_doubled).norm() < 1e-10, "semigroup break at {z}");
        }
    }

    /// Mass of the absolutely continuous part by the substitution
    /// u = lo + (hi−lo)sin²θ, which removes the edge square roots.
    fn ac_mass(params: &FreePoissonParams) -> f64 {
        let (lo, hi) = params.support();
        let n = 4000;
        let h = (PI / 2.0) / n as f64;
        let f = |theta: f64| {
            let s = theta.sin();
            let c = theta.cos();
            let u = lo + (hi - lo) * s * s;
            free_poisson_density(params, u) * (hi - lo) * 2.0 * s * c
        };
        // Simpson weights on the θ-interval [0, π/2]; the endpoints are
        // nudged half a panel inward because the integrand's value there is
        // a removable 0·∞ limit the density function cannot produce, and a
        // smaller nudge would hit the cancellation in the discriminant.
        let mut sum = f(0.5 * h) + f(PI / 2.0 - 0.5 * h);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(i as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn free_poisson_density_and_mass() {
        let standard = FreePoissonParams::new(1.0, 1.0).unwrap();
        assert_relative_eq!(
            free_poisson_density(&standard, 2.0),
            1.0 / (2.0 * PI),
            max_relative = 1e-12
        );
        assert_eq!(free_poisson_density(&standard, 4.5), 0.0);
        assert_eq!(free_poisson_density(&standard, -1.0), 0.0);

        let shifted = FreePoissonParams::new(1.0, 4.0).unwrap();
        assert_eq!(free_poisson_density(&shifted, 0.5), 0.0);

        assert!((ac_mass(&standard) - 1.0).abs() < 1e-8);
        let wide = FreePoissonParams::new(1.3, 2.5).unwrap();
        assert!((ac_mass(&wide) - 1.0).abs() < 1e-8);
        let defective = FreePoissonParams::new(1.0, 0.5).unwrap();
        assert!((ac_mass(&defective) - 0.5).abs() < 1e-8);
    }

    fn assert_g_identity(pair: &ThorinPair, a: f64, b: f64, tol: f64) {
        for z in complex_probes() {
            let g = pair.m().stieltjes(z).unwrap();
            let residual = (g - pair.q() - 1.0 / (a * z - b - z * g)).norm();
            assert!(residual < tol, "transform identity residual {residual} at {z}");
        }
    }

    #[test]
    fn fixed_points_close_the_correspondence_loop() {
        // Marchenko–Pastur case (q, a, b) = (0, 1, 0).
        let mp = fixed_point_measure(0.0, 1.0, 0.0).unwrap();
        match mp.m() {
            PositiveMeasure::FreePoissonScaled { scale, alpha, beta } => {
                assert_relative_eq!(*scale, 1.0, max_relative = 1e-12);
                assert_relative_eq!(*alpha, 1.0, max_relative = 1e-12);
                assert_relative_eq!(*beta, 1.0, max_relative = 1e-12);
            }
            other => panic!("expected a free Poisson measure, got {other:?}"),
        }
        let corr = forward(&mp).unwrap();
        assert_relative_eq!(corr.a, 1.0, max_relative = 1e-12);
        assert!(corr.b.abs() <= 1e-12);
        let params = FreePoissonParams::new(1.0, 1.0).unwrap();
        for i in 0..40 {
            let u = 0.05 + 0.1 * i as f64;
            let diff = (corr.spectral.density_at(u) - free_poisson_density(&params, u)).abs();
            assert!(diff < 1e-12, "spectral density off by {diff} at {u}");
        }
        assert_g_identity(&mp, 1.0, 0.0, 1e-8);

        // Diffusive case with drift: (q, a, b) = (0, 1/2, 4/5).
        let diff_pair = fixed_point_measure(0.0, 0.5, 0.8).unwrap();
        let corr = forward(&diff_pair).unwrap();
        assert_relative_eq!(corr.a, 0.5, max_relative = 1e-12);
        assert_relative_eq!(corr.b, 0.8, max_relative = 1e-12);
        assert!(matches!(corr.spectral, PositiveMeasure::FreePoissonScaled { .. }));
        assert!(corr.identity_residual < 1e-10);
        assert_g_identity(&diff_pair, 0.5, 0.8, 1e-8);

        // Translated case: (q, a, b) = (1/2, 0, 3/5).
        let translated = fixed_point_measure(0.5, 0.0, 0.6).unwrap();
        assert_relative_eq!(translated.q(), 0.5, max_relative = 1e-12);
        let corr = forward(&translated).unwrap();
        assert_eq!(corr.a, 0.0);
        assert_relative_eq!(corr.b, 0.6, max_relative = 1e-10);
        assert_g_identity(&translated, 0.0, 0.6, 1e-8);

        // Infinite-mass case: (q, a, b) = (0, 0, 2).
        let heavy = fixed_point_measure(0.0, 0.0, 2.0).unwrap();
        match heavy.m() {
            PositiveMeasure::StableTailDual { alpha, kappa } => {
                assert_relative_eq!(*alpha, 0.5, max_relative = 1e-12);
                assert_relative_eq!(*kappa, 1.0, max_relative = 1e-12);
            }
            other => panic!("expected the dual-stable fixed point, got {other:?}"),
        }
        assert_g_identity(&heavy, 0.0, 2.0, 1e-8);
    }

    #[test]
    fn fixed_point_regime_is_enforced() {
        assert!(matches!(
            fixed_point_measure(0.5, 1.0, 0.0).unwrap_err(),
            Error::Domain(_)
        ));
        assert!(matches!(
            fixed_point_measure(0.5, 0.0, 4.0).unwrap_err(),
            Error::Domain(_)
        ));
        let driftless = fixed_point_measure(0.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            driftless.m(),
            PositiveMeasure::StableTailDual { kappa, .. } if *kappa == 0.0
        ));
    }

    #[test]
    fn density_cases_join_continuously() {
        // First-case densities approach the infinite-mass one as the regime
        // parameter shrinks, both along a ↓ 0 and along q ↓ 0 at b = 2.
        let b = 2.0;
        let limit = |u: f64| if u > 1.0 { (u - 1.0).sqrt() / (PI * u) } else { 0.0 };
        for route in [
            |eps: f64| fixed_point_measure(0.0, eps, 2.0),
            |eps: f64| fixed_point_measure(eps, 0.0, 2.0),
        ] {
            let mut prev_sup = f64::INFINITY;
            for eps in [1e-2, 1e-3] {
                let pair = route(eps).unwrap();
                let sup = [1.5, 2.0, 3.0, 5.0]
                    .iter()
                    .map(|&u| (pair.m().density_at(u) - limit(u)).abs())
                    .fold(0.0f64, f64::max);
                assert!(sup < prev_sup, "sup error {sup} did not shrink at eps {eps}");
                prev_sup = sup;
            }
            assert!(prev_sup < 5e-3, "limit density error {prev_sup} too large (b = {b})");
        }
    }

    #[test]
    fn probability_normalization_is_required() {
        let heavy = PositiveMeasure::atomic(vec![atom(2.0, 1.0)]).unwrap();
        let probe = Complex64::new(-1.0, 1.0);
        assert!(matches!(boolean_cumulant(&heavy, probe).unwrap_err(), Error::Domain(_)));
        assert!(matches!(
            boolean_convolve(&point_mass(1.0), &heavy).unwrap_err(),
            Error::Domain(_)
        ));
        assert!(matches!(
            boolean_power(&heavy, 2.0).unwrap_err(),
            Error::Domain(_)
        ));
        assert!(matches!(
            boolean_cumulant(&point_mass(1.0), Complex64::new(1.0, 0.0)).unwrap_err(),
            Error::Input(_)
        ));
    }
}
