//! Branching mechanisms of continuous-state branching processes with
//! immigration driven by a diffusion part a, linear drift b, and a spectral
//! measure M for the jump kernel.
//!
//! The jump measure and its tail have densities against Lebesgue measure
//!
//! ```text
//!   n(dy)/dy = ∫ u² e^{−uy} M(du),    ñ(dy)/dy = ∫ u e^{−uy} M(du),
//! ```
//!
//! so the branching mechanism collapses to a resolvent moment of M:
//!
//! ```text
//!   R(λ) = −aλ² − bλ − λ ∫(1 − e^{−λy}) ñ(dy) = −λ R₀(λ),
//!   R₀(λ) = aλ + b + λ ∫ M(du)/(λ + u) .
//! ```
//!
//! The flow ψ(t, λ) solves ∂ψ/∂t = R(ψ), ψ(0, λ) = λ, and satisfies the
//! implicit identity t = ∫_ψ^λ du/(u R₀(u)), which serves as an a posteriori
//! residual oracle for the ODE integration. Immigration enters only through
//! the rate δ, via F(λ) = δλ, and the transient Laplace transform
//!
//! ```text
//!   E_x[e^{−λ X_t}] = exp(−x ψ(t,λ) − δ ∫₀^t ψ(s,λ) ds) .
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{MomentValue, PositiveMeasure};
use crate::quadrature::{self, ShellOutcome};

/// Generator data (a, b, M, δ) of a CBCI process: diffusion coefficient a ≥ 0,
/// linear drift b ≥ 0, spectral measure M of the jump kernel (possibly zero),
/// immigration rate δ > 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quadruplet {
    a: f64,
    b: f64,
    #[serde(rename = "M")]
    m_spectral: PositiveMeasure,
    delta: f64,
}

impl<'de> Deserialize<'de> for Quadruplet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            a: f64,
            b: f64,
            #[serde(rename = "M")]
            m_spectral: PositiveMeasure,
            delta: f64,
        }
        let r = Repr::deserialize(d)?;
        Quadruplet::new(r.a, r.b, r.m_spectral, r.delta).map_err(serde::de::Error::custom)
    }
}

/// One evaluation of the flow ψ(t, λ) together with the defect of the implicit
/// identity t = ∫_ψ^λ du/(u R₀(u)).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PsiSolution {
    pub t: f64,
    pub lambda: f64,
    pub psi: f64,
    pub residual: f64,
}

impl Quadruplet {
    pub fn new(a: f64, b: f64, m_spectral: PositiveMeasure, delta: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Input(format!("diffusion coefficient must be ≥ 0, got {a}")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::Input(format!("drift must be ≥ 0, got {b}")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Input(format!("immigration rate must be > 0, got {delta}")));
        }
        if a == 0.0 && b == 0.0 && m_spectral.is_zero() {
            return Err(Error::Input(
                "degenerate mechanism: a, b and the spectral measure all vanish".into(),
            ));
        }
        Ok(Quadruplet { a, b, m_spectral, delta })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn spectral(&self) -> &PositiveMeasure {
        &self.m_spectral
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Total jump rate per unit mass, ρ = ∫ u M(du).
    pub fn jump_rate(&self) -> Result<MomentValue> {
        self.m_spectral.moment(1.0)
    }

    /// Mean total jump displacement per unit mass, c = ∫ M(du) = ∫ y n(dy).
    pub fn jump_mean(&self) -> Result<MomentValue> {
        self.m_spectral.moment(0.0)
    }

    /// R₀(λ) = aλ + b + λ ∫ M(du)/(λ+u) = −R(λ)/λ, continuously extended by
    /// R₀(0) = b.
    pub fn rate_r0(&self, lam: f64) -> Result<f64> {
        // λ ∫ M(du)/(λ+u) increases to ∫M(du) and vanishes at λ = 0; below the
        // subnormal range the resolvent itself is no longer evaluable, so use
        // the limit directly.
        if lam < 1e-280 {
            return Ok(self.b);
        }
        Ok(self.a * lam + self.b + lam * self.m_spectral.resolvent(lam)?)
    }

    /// Branching mechanism R(λ) = −aλ² − bλ − λ∫(1−e^{−λy}) ñ(dy) ≤ 0.
    pub fn branching_r(&self, lam: f64) -> Result<f64> {
        if !(lam >= 0.0) {
            return Err(Error::Domain(format!("mechanism needs λ ≥ 0, got {lam}")));
        }
        if lam == 0.0 {
            return Ok(0.0);
        }
        Ok(-lam * self.rate_r0(lam)?)
    }

    /// Densities (n, ñ) of the jump measure and its tail measure at y > 0.
    pub fn jump_density(&self, y: f64) -> Result<(f64, f64)> {
        if self.m_spectral.is_zero() {
            return Ok((0.0, 0.0));
        }
        Ok((
            self.m_spectral.exp_transform_second(y)?,
            -self.m_spectral.exp_transform_prime(y)?,
        ))
    }

    /// Φ(λ) = ∫₀^λ du / R₀(u), the Laplace exponent of the stationary law
    /// (up to the factor δ) when it exists; +∞ exactly when the integral
    /// diverges at 0, which is the non-ergodic case.
    ///
    /// The 0-endpoint is resolved by dyadic shells, i.e. uniform steps in
    /// log u, with divergence detection; this is how the ergodic dichotomy is
    /// decided numerically for non-atomic M.
    pub fn phi(&self, lam: f64) -> Result<f64> {
        if !(lam >= 0.0) {
            return Err(Error::Domain(format!("Φ needs λ ≥ 0, got {lam}")));
        }
        if lam == 0.0 {
            return Ok(0.0);
        }
        let out = quadrature::shelled(
            |u| match self.rate_r0(u) {
                Ok(r0) => 1.0 / r0,
                Err(_) => f64::NAN,
            },
            0.0,
            Some(lam),
            quadrature::REL_TOL,
        )?;
        Ok(out.value())
    }

    /// Derivative Φ′(λ) = 1/R₀(λ).
    pub fn phi_prime(&self, lam: f64) -> Result<f64> {
        Ok(1.0 / self.rate_r0(lam)?)
    }

    /// Ergodicity of the CBCI process: holds iff b > 0 or
    /// ∫₀¹ (u ∫ M(du′)/(u+u′))⁻¹ du < ∞.
    pub fn is_ergodic(&self) -> Result<bool> {
        if self.b > 0.0 {
            return Ok(true);
        }
        if self.m_spectral.is_zero() {
            // Pure diffusion without drift: Φ diverges logarithmically.
            return Ok(false);
        }
        // When ∫ u⁻¹ M(du) < ∞ the integrand is ≥ ((∫u⁻¹M) u)⁻¹ near 0 and
        // the integral diverges; this covers every atomic M exactly.
        if self.m_spectral.moment(-1.0)?.is_finite() {
            return Ok(false);
        }
        let out = quadrature::shelled(
            |u| match self.m_spectral.resolvent(u) {
                Ok(h) => 1.0 / (u * h),
                Err(_) => f64::NAN,
            },
            0.0,
            Some(1.0),
            1e-8,
        )?;
        Ok(out != ShellOutcome::Divergent)
    }

    /// ψ(t, λ) with its implicit-identity residual.
    ///
    /// The flow is integrated in logarithmic coordinates, d(log ψ)/dt =
    /// −R₀(ψ), which keeps ψ positive through arbitrarily deep decay; the
    /// residual is recomputed from the independent quadrature identity and
    /// must come out below 10⁻⁸.
    pub fn psi(&self, t: f64, lam: f64) -> Result<PsiSolution> {
        if !(t > 0.0 && lam > 0.0) {
            return Err(Error::Input(format!("flow needs t > 0 and λ > 0, got ({t}, {lam})")));
        }
        let (psi, _) = self.flow(t, lam)?;
        let residual = self.implicit_residual(t, lam, psi)?;
        if residual > 1e-8 {
            return Err(Error::Solver(format!(
                "flow residual {residual:.3e} exceeds 1e-8 at t={t}, λ={lam} (ψ={psi:.6e})"
            )));
        }
        // Monotonicity of R₀ turns the flow representation
        // ψ = λ exp(−∫₀^t R₀(ψ(s)) ds) into two-sided exponential bounds.
        let upper = lam * (-t * self.rate_r0(psi)?).exp();
        let lower = lam * (-t * self.rate_r0(lam)?).exp();
        if psi > upper * (1.0 + 1e-7) || psi < lower * (1.0 - 1e-7) {
            return Err(Error::Solver(format!(
                "flow value ψ={psi:.6e} violates bracket [{lower:.6e}, {upper:.6e}] at t={t}, λ={lam}"
            )));
        }
        Ok(PsiSolution { t, lambda: lam, psi, residual })
    }

    /// E_x[e^{−λ X_t}] = exp(−x ψ(t,λ) − δ ∫₀^t ψ(s,λ) ds).
    pub fn transient_laplace(&self, t: f64, lam: f64, x: f64) -> Result<f64> {
        if !(t >= 0.0 && lam >= 0.0 && x >= 0.0) {
            return Err(Error::Input(format!(
                "transient transform needs t, λ, x ≥ 0, got ({t}, {lam}, {x})"
            )));
        }
        if lam == 0.0 {
            return Ok(1.0);
        }
        if t == 0.0 {
            return Ok((-lam * x).exp());
        }
        let (psi, integral) = self.flow(t, lam)?;
        Ok((-x * psi - self.delta * integral).exp())
    }

    /// Infimum of the support of X_t started at x.
    ///
    /// Zero when a > 0 or the jump mean c is infinite. When a = 0 and
    /// 0 < b + c < ∞ the process sits above the deterministic floor
    /// x e^{−t(b+c)} + (δ/(b+c))(1 − e^{−t(b+c)}).
    pub fn support_infimum(&self, t: f64, x: f64) -> Result<f64> {
        if !(t >= 0.0 && x >= 0.0) {
            return Err(Error::Input(format!("support floor needs t, x ≥ 0, got ({t}, {x})")));
        }
        if self.a > 0.0 {
            return Ok(0.0);
        }
        let c = self.jump_mean()?;
        if !c.is_finite() {
            return Ok(0.0);
        }
        let rate = self.b + c.value();
        let decay = (-t * rate).exp();
        Ok(x * decay + self.delta / rate * (1.0 - decay))
    }

    /// The t → ∞ limit of the support floor, δ/(b+c); requires ergodicity so
    /// that a stationary law exists.
    pub fn stationary_support_infimum(&self) -> Result<f64> {
        if !self.is_ergodic()? {
            return Err(Error::NonErgodic(
                "no stationary law: the mechanism is not ergodic".into(),
            ));
        }
        if self.a > 0.0 {
            return Ok(0.0);
        }
        let c = self.jump_mean()?;
        if !c.is_finite() {
            return Ok(0.0);
        }
        Ok(self.delta / (self.b + c.value()))
    }

    /// Partial sum (up to N convolution orders) of the Neumann series for the
    /// stationary Lévy density in the pure-jump case a = 0, b + c < ∞:
    ///
    /// ```text
    ///   Λ(y) = y⁻¹ Σ_{n≥1} (b+c)^{−(n+1)} ñ^{*n}(y) ,
    /// ```
    ///
    /// with the convolution powers of the tail density computed in closed form
    /// for atomic M (mixtures of exponentials). The partial sums increase in N.
    pub fn levy_series_a0(&self, y: f64, n_terms: usize) -> Result<f64> {
        if self.a != 0.0 {
            return Err(Error::Domain(format!(
                "series expansion requires a = 0, got a = {}",
                self.a
            )));
        }
        if !(y > 0.0) || n_terms == 0 {
            return Err(Error::Input(format!("need y > 0 and N ≥ 1, got ({y}, {n_terms})")));
        }
        let atoms = match &self.m_spectral {
            PositiveMeasure::Atomic(atoms) => atoms.clone(),
            other => {
                return Err(Error::Domain(format!(
                    "series expansion supports atomic spectral measures only, got {other:?}"
                )))
            }
        };
        let c = self.jump_mean()?;
        if !c.is_finite() {
            return Err(Error::Domain("series expansion requires finite jump mean c".into()));
        }
        let rate = self.b + c.value();
        // ñ as an exponential polynomial Σ cᵢκᵢ e^{−κᵢ y}.
        let base: Vec<ExpTerm> = atoms
            .iter()
            .map(|a| ExpTerm {
                coef: a.weight * a.location,
                power: 0,
                decay: a.location,
            })
            .collect();
        let mut conv = base.clone();
        let mut acc = 0.0;
        let mut weight = rate.powi(-2);
        for n in 1..=n_terms {
            acc += weight * eval_exp_poly(&conv, y);
            if n < n_terms {
                conv = convolve_with_exponentials(&conv, &base);
                weight /= rate;
            }
        }
        Ok(acc / y)
    }

    /// Joint integration of (log ψ, ∫₀^t ψ) by an adaptive embedded
    /// Runge–Kutta pair of orders 5(4).
    fn flow(&self, t: f64, lam: f64) -> Result<(f64, f64)> {
        let rhs = |state: [f64; 2]| -> Result<[f64; 2]> {
            let psi = state[0].exp();
            Ok([-self.rate_r0(psi)?, psi])
        };
        let mut state = [lam.ln(), 0.0];
        let mut time = 0.0;
        let mut h = (t / 16.0).min(0.1 / (self.rate_r0(lam)? + 1.0));
        let rel = 1e-10;
        let abs = 1e-12;
        let mut steps = 0usize;
        while time < t {
            steps += 1;
            if steps > 2_000_000 {
                return Err(Error::Solver(format!(
                    "flow integration exceeded the step budget at t={time} of {t}"
                )));
            }
            h = h.min(t - time);
            let (next, err) = dp54_step(&rhs, state, h)?;
            let mut ratio: f64 = 0.0;
            for i in 0..2 {
                let sc = abs + rel * state[i].abs().max(next[i].abs());
                ratio = ratio.max(err[i].abs() / sc);
            }
            if ratio <= 1.0 {
                time += h;
                state = next;
            }
            let factor = if ratio > 0.0 { 0.9 * ratio.powf(-0.2) } else { 5.0 };
            h *= factor.clamp(0.2, 5.0);
            if h < 1e-14 * t.max(1.0) {
                return Err(Error::Solver("flow step size underflow".into()));
            }
        }
        Ok((state[0].exp(), state[1]))
    }

    /// ∫_ψ^λ du/(u R₀(u)) − t, integrated in log coordinates where the
    /// integrand 1/R₀(e^s) is bounded and smooth.
    fn implicit_residual(&self, t: f64, lam: f64, psi: f64) -> Result<f64> {
        let lo = psi.ln();
        let hi = lam.ln();
        let implicit = quadrature::adaptive(
            |s| match self.rate_r0(s.exp()) {
                Ok(r0) => 1.0 / r0,
                Err(_) => f64::NAN,
            },
            lo,
            hi,
            1e-11,
        )?;
        Ok((implicit - t).abs())
    }
}

/// One term coef · y^power · e^{−decay·y} of an exponential polynomial.
#[derive(Clone, Copy, Debug)]
struct ExpTerm {
    coef: f64,
    power: u32,
    decay: f64,
}

fn eval_exp_poly(terms: &[ExpTerm], y: f64) -> f64 {
    terms
        .iter()
        .map(|t| t.coef * y.powi(t.power as i32) * (-t.decay * y).exp())
        .sum()
}

/// Convolution of an exponential polynomial with a sum of pure exponentials
/// c e^{−βy}, term by term:
///
/// ```text
///   (y^j e^{−αy}) * e^{−βy} = y^{j+1} e^{−αy}/(j+1)                 (α = β)
///   (y^j e^{−αy}) * e^{−βy} = j!/d^{j+1} e^{−βy}
///                             − e^{−αy} Σ_{k≤j} (j!/k!) y^k /d^{j+1−k}
///                                                                   (d = α−β)
/// ```
fn convolve_with_exponentials(terms: &[ExpTerm], exps: &[ExpTerm]) -> Vec<ExpTerm> {
    let mut out: Vec<ExpTerm> = Vec::new();
    let mut push = |coef: f64, power: u32, decay: f64| {
        if coef == 0.0 {
            return;
        }
        for t in out.iter_mut() {
            if t.power == power && t.decay == decay {
                t.coef += coef;
                return;
            }
        }
        out.push(ExpTerm { coef, power, decay });
    };
    for t in terms {
        for e in exps {
            debug_assert_eq!(e.power, 0);
            let c = t.coef * e.coef;
            if t.decay == e.decay {
                push(c / (t.power + 1) as f64, t.power + 1, t.decay);
            } else {
                let d = t.decay - e.decay;
                let j = t.power;
                let j_fact: f64 = (1..=j).map(|k| k as f64).product();
                push(c * j_fact / d.powi(j as i32 + 1), 0, e.decay);
                let mut k_fact = 1.0;
                for k in 0..=j {
                    if k > 0 {
                        k_fact *= k as f64;
                    }
                    push(
                        -c * j_fact / k_fact / d.powi((j + 1 - k) as i32),
                        k,
                        t.decay,
                    );
                }
            }
        }
    }
    out
}

/// Dormand–Prince 5(4) step; returns the fifth-order value and the embedded
/// error estimate.
fn dp54_step(
    rhs: &impl Fn([f64; 2]) -> Result<[f64; 2]>,
    y: [f64; 2],
    h: f64,
) -> Result<([f64; 2], [f64; 2])> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut k = [[0.0; 2]; 7];
    k[0] = rhs(y)?;
    for stage in 0..6 {
        let mut arg = y;
        for i in 0..2 {
            let mut inc = 0.0;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                inc += A[stage][j] * kj[i];
            }
            arg[i] += h * inc;
        }
        k[stage + 1] = rhs(arg)?;
    }
    let mut y5 = y;
    let mut err = [0.0; 2];
    for i in 0..2 {
        let mut s5 = 0.0;
        let mut s4 = 0.0;
        for j in 0..7 {
            s5 += B5[j] * k[j][i];
            s4 += B4[j] * k[j][i];
        }
        y5[i] += h * s5;
        err[i] = h * (s5 - s4);
    }
    Ok((y5, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    fn atomic(pairs: &[(f64, f64)]) -> PositiveMeasure {
        PositiveMeasure::atomic(
            pairs
                .iter()
                .map(|&(weight, location)| Atom { weight, location })
                .collect(),
        )
        .unwrap()
    }

    fn cir() -> Quadruplet {
        Quadruplet::new(1.0, 1.0, PositiveMeasure::zero(), 1.0).unwrap()
    }

    #[test]
    fn rejects_degenerate_mechanism() {
        assert!(Quadruplet::new(0.0, 0.0, PositiveMeasure::zero(), 1.0).is_err());
        assert!(Quadruplet::new(1.0, 0.0, PositiveMeasure::zero(), 0.0).is_err());
    }

    #[test]
    fn branching_mechanism_values() {
        assert_eq!(cir().branching_r(0.0).unwrap(), 0.0);
        assert!((cir().branching_r(2.0).unwrap() + 6.0).abs() < 1e-14);

        // Quadruplet (0, κ^α, dual tail): R(λ) = −λ(λ+κ)^α.
        let dual = PositiveMeasure::stable_tail_dual(0.5, 1.0).unwrap();
        let quad = Quadruplet::new(0.0, 1.0, dual, 1.0).unwrap();
        for &lam in &[0.5, 1.0, 3.0, 10.0] {
            let expect = -lam * (lam + 1.0f64).sqrt();
            let got = quad.branching_r(lam).unwrap();
            assert!((got - expect).abs() < 1e-12 * expect.abs(), "λ={lam}: {got} vs {expect}");
        }
        assert!((quad.branching_r(3.0).unwrap() + 6.0).abs() < 1e-12);
    }

    #[test]
    fn jump_density_mixture() {
        let quad = Quadruplet::new(0.0, 1.0, atomic(&[(1.0 / 12.0, 1.5)]), 1.0).unwrap();
        let (n, nt) = quad.jump_density(1.0).unwrap();
        let e = (-1.5f64).exp();
        assert!((n - 1.0 / 12.0 * 2.25 * e).abs() < 1e-15);
        assert!((nt - 1.0 / 12.0 * 1.5 * e).abs() < 1e-15);
        // y → 0 recovers the mixture head c κ².
        let (n0, _) = quad.jump_density(1e-13).unwrap();
        assert!((n0 - 3.0 / 16.0).abs() < 1e-10);

        let trivial = Quadruplet::new(1.0, 0.0, PositiveMeasure::zero(), 1.0).unwrap();
        assert_eq!(trivial.jump_density(0.7).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn phi_closed_forms_and_divergence() {
        // a = b = 1, no jumps: Φ(λ) = log(1+λ).
        for &lam in &[0.5, 1.0, 3.0] {
            let got = cir().phi(lam).unwrap();
            assert!((got - (1.0 + lam).ln()).abs() < 1e-9, "λ={lam}");
        }
        assert_eq!(cir().phi(0.0).unwrap(), 0.0);

        // Without drift the diffusion mechanism is non-ergodic: Φ = ∞.
        let quad = Quadruplet::new(1.0, 0.0, PositiveMeasure::zero(), 1.0).unwrap();
        assert!(quad.phi(1.0).unwrap().is_infinite());

        // Large-λ slope tends to 1/(b+c).
        let quad = Quadruplet::new(0.0, 1.0, atomic(&[(1.0, 1.0)]), 1.0).unwrap();
        let slope = (quad.phi(400.0).unwrap() - quad.phi(200.0).unwrap()) / 200.0;
        assert!((slope - 0.5).abs() < 0.01, "slope={slope}");
    }

    #[test]
    fn phi_prime_matches_finite_differences() {
        let dual = PositiveMeasure::stable_tail_dual(0.5, 1.0).unwrap();
        let quads = vec![
            cir(),
            Quadruplet::new(0.0, 1.0, dual, 2.0).unwrap(),
            Quadruplet::new(0.5, 0.2, atomic(&[(1.0, 1.0), (2.0, 3.0)]), 1.0).unwrap(),
        ];
        for quad in quads {
            for &lam in &[0.3, 1.0, 4.0] {
                let h = 1e-5 * lam;
                let fd = (quad.phi(lam + h).unwrap() - quad.phi(lam - h).unwrap()) / (2.0 * h);
                let an = quad.phi_prime(lam).unwrap();
                assert!((fd - an).abs() < 1e-8 * an.abs().max(1.0), "λ={lam}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn flow_linear_case() {
        // a = 0, M = 0: ψ(t,λ) = λ e^{−bt}.
        let quad = Quadruplet::new(0.0, 2.0, PositiveMeasure::zero(), 1.0).unwrap();
        for &(t, lam) in &[(0.5, 1.0), (1.0, 3.0), (5.0, 0.2)] {
            let sol = quad.psi(t, lam).unwrap();
            let expect = lam * (-2.0 * t).exp();
            assert!(
                (sol.psi - expect).abs() < 1e-9 * expect,
                "t={t} λ={lam}: {} vs {expect}",
                sol.psi
            );
        }
    }

    #[test]
    fn flow_riccati_case() {
        // a = b = 1, M = 0: ψ = b λ e^{−bt} / (b + aλ(1 − e^{−bt})).
        let quad = cir();
        let sol = quad.psi(1.0, 1.0).unwrap();
        let expect = (-1.0f64).exp() / (2.0 - (-1.0f64).exp());
        assert!((sol.psi - expect).abs() < 1e-9, "{} vs {expect}", sol.psi);
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn flow_monotone_and_contractive() {
        let dual = PositiveMeasure::stable_tail_dual(0.5, 1.0).unwrap();
        let quad = Quadruplet::new(0.0, 1.0, dual, 1.0).unwrap();
        // Decreasing in t, always within (0, λ].
        let mut prev = f64::INFINITY;
        for k in 1..=8 {
            let t = 0.4 * k as f64;
            let sol = quad.psi(t, 2.0).unwrap();
            assert!(sol.psi > 0.0 && sol.psi <= 2.0);
            assert!(sol.psi < prev);
            prev = sol.psi;
        }
        // ∂ψ/∂λ ∈ (0, 1] by finite differences.
        for &lam in &[0.5, 1.0, 4.0] {
            let h = 1e-6 * lam;
            let up = quad.psi(1.0, lam + h).unwrap().psi;
            let dn = quad.psi(1.0, lam - h).unwrap().psi;
            let d = (up - dn) / (2.0 * h);
            assert!(d > 0.0 && d <= 1.0 + 1e-9, "∂ψ/∂λ = {d} at λ={lam}");
        }
    }

    #[test]
    fn transient_laplace_closed_forms() {
        let quad = Quadruplet::new(0.0, 1.0, PositiveMeasure::zero(), 1.0).unwrap();
        assert!((quad.transient_laplace(0.0, 2.0, 3.0).unwrap() - (-6.0f64).exp()).abs() < 1e-15);
        for &(t, lam, x) in &[(0.5, 1.0, 2.0), (2.0, 3.0, 0.0), (1.0, 0.7, 1.3)] {
            let expect = (-x * lam * (-t as f64).exp() - lam * (1.0 - (-t as f64).exp())).exp();
            let got = quad.transient_laplace(t, lam, x).unwrap();
            assert!((got - expect).abs() < 1e-8 * expect, "(t,λ,x)=({t},{lam},{x})");
        }
    }

    #[test]
    fn transient_laplace_converges_to_stationary() {
        // For the ergodic diffusion case the t → ∞ limit at x = 0 is
        // exp(−δΦ(λ)) = (1+λ)^{−δ} with a = b = 1.
        let quad = cir();
        for &lam in &[0.5, 1.0, 2.0] {
            let got = quad.transient_laplace(40.0, lam, 0.0).unwrap();
            let expect = 1.0 / (1.0 + lam);
            assert!((got - expect).abs() < 1e-8, "λ={lam}: {got} vs {expect}");
        }
    }

    #[test]
    fn transient_laplace_monotone_in_lambda_and_x() {
        let quad = Quadruplet::new(0.5, 0.5, atomic(&[(1.0, 2.0)]), 1.5).unwrap();
        let lams = [0.5, 1.0, 2.0, 4.0];
        let vals: Vec<f64> = lams
            .iter()
            .map(|&l| quad.transient_laplace(0.7, l, 1.0).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0]);
        }
        let xs = [0.0, 0.5, 1.0, 3.0];
        let vals: Vec<f64> = xs
            .iter()
            .map(|&x| quad.transient_laplace(0.7, 1.0, x).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn support_floor() {
        assert_eq!(cir().support_infimum(1.0, 5.0).unwrap(), 0.0);

        // a = 0, b + c = 1 (drift only), δ = 1.
        let quad = Quadruplet::new(0.0, 1.0, PositiveMeasure::zero(), 1.0).unwrap();
        assert!((quad.support_infimum(1e-12, 5.0).unwrap() - 5.0).abs() < 1e-10);
        assert!((quad.support_infimum(60.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((quad.stationary_support_infimum().unwrap() - 1.0).abs() < 1e-15);

        // Infinite jump mean: floor is 0.
        let tail = PositiveMeasure::stable_tail(0.5, 1.0).unwrap();
        let quad = Quadruplet::new(0.0, 1.0, tail, 1.0).unwrap();
        assert_eq!(quad.support_infimum(1.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn ergodicity_decision() {
        assert!(cir().is_ergodic().unwrap());
        let quad = Quadruplet::new(1.0, 0.0, atomic(&[(1.0, 1.0)]), 1.0).unwrap();
        assert!(!quad.is_ergodic().unwrap());

        // Driftless dual tail with κ = 0: stationary law exists.
        let dual = PositiveMeasure::stable_tail_dual(0.5, 0.0).unwrap();
        let quad = Quadruplet::new(0.0, 0.0, dual, 1.0).unwrap();
        assert!(quad.is_ergodic().unwrap());

        // Driftless window touching 0: resolvent grows only logarithmically,
        // not fast enough for ergodicity.
        let win = PositiveMeasure::window(0.0, 1.0).unwrap();
        let quad = Quadruplet::new(0.0, 0.0, win, 1.0).unwrap();
        assert!(!quad.is_ergodic().unwrap());
    }

    #[test]
    fn mechanism_slope_diverges_iff_diffusive_or_heavy() {
        // R(λ)/λ stays bounded iff a = 0 and c < ∞.
        let bounded = Quadruplet::new(0.0, 1.0, atomic(&[(1.0, 2.0)]), 1.0).unwrap();
        let r1 = bounded.branching_r(1e4).unwrap() / 1e4;
        let r2 = bounded.branching_r(1e6).unwrap() / 1e6;
        assert!((r1 - r2).abs() < 1e-2 && r2.abs() < 3.0);

        let diffusive = cir();
        let r = |quad: &Quadruplet, l: f64| quad.branching_r(l).unwrap() / l;
        assert!(r(&diffusive, 1e6) < -1e5);

        let heavy = Quadruplet::new(
            0.0,
            1.0,
            PositiveMeasure::stable_tail(0.5, 1.0).unwrap(),
            1.0,
        )
        .unwrap();
        // c = ∞ here: |R(λ)/λ| grows like √λ without bound.
        assert!(r(&heavy, 1e6) / r(&heavy, 1e2) > 30.0);
    }

    #[test]
    fn exponential_convolution_powers() {
        // Self-convolutions of c κ e^{−κy}: the n-th power has density
        // (cκ)^n y^{n−1} e^{−κy}/(n−1)!.
        let base = vec![ExpTerm { coef: 2.0, power: 0, decay: 2.0 }];
        let mut conv = base.clone();
        for n in 2..=4u32 {
            conv = convolve_with_exponentials(&conv, &base);
            let fact: f64 = (1..n).map(|k| k as f64).product();
            for &y in &[0.5f64, 1.0, 2.0] {
                let expect = 2.0f64.powi(n as i32) * y.powi(n as i32 - 1) * (-2.0 * y).exp() / fact;
                let got = eval_exp_poly(&conv, y);
                assert!((got - expect).abs() < 1e-12 * expect, "n={n} y={y}");
            }
        }

        // Distinct decay rates against the two-exponential closed form.
        let f = vec![ExpTerm { coef: 1.0, power: 0, decay: 1.0 }];
        let g = vec![ExpTerm { coef: 1.0, power: 0, decay: 3.0 }];
        let conv = convolve_with_exponentials(&f, &g);
        for &y in &[0.3f64, 1.0, 2.0] {
            let expect = ((-1.0 * y).exp() - (-3.0 * y).exp()) / 2.0;
            let got = eval_exp_poly(&conv, y);
            assert!((got - expect).abs() < 1e-14, "y={y}");
        }
    }

    #[test]
    fn levy_series_matches_geometric_resummation() {
        // b = 1, M = ε₂ (c = 1): the series resums to 0.5 e^{−y}/y, the Lévy
        // density of the GGC with translation 1/2 and measure 0.5 ε₁.
        let quad = Quadruplet::new(0.0, 1.0, atomic(&[(1.0, 2.0)]), 1.0).unwrap();
        for &y in &[0.4, 0.7, 1.3, 2.5] {
            let got = quad.levy_series_a0(y, 60).unwrap();
            let expect = 0.5 * (-y).exp() / y;
            assert!((got - expect).abs() < 1e-10 * expect, "y={y}: {got} vs {expect}");
        }

        // First term alone is ñ(y)/((b+c)² y).
        let y = 0.9;
        let first = quad.levy_series_a0(y, 1).unwrap();
        let (_, nt) = quad.jump_density(y).unwrap();
        assert!((first - nt / (4.0 * y)).abs() < 1e-14);

        // Partial sums increase in N.
        let mut prev = 0.0;
        for n in 1..=10 {
            let v = quad.levy_series_a0(1.0, n).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn quadruplet_json_round_trip() {
        let quad = Quadruplet::new(0.5, 1.0, atomic(&[(1.0, 2.0)]), 1.5).unwrap();
        let s = serde_json::to_string(&quad).unwrap();
        assert!(s.contains("\"a\":0.5") && s.contains("\"M\":{") && s.contains("\"delta\":1.5"));
        let back: Quadruplet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, quad);
        let bad: std::result::Result<Quadruplet, _> = serde_json::from_str(
            r#"{"a":0.0,"b":0.0,"M":{"kind":"atomic","atoms":[]},"delta":1.0}"#,
        );
        assert!(bad.is_err());
    }
}
