//! Exact rational-function form of the correspondence for atomic measures.
//!
//! For m = Σ γᵢ ε_{λᵢ} the derivative of the Laplace exponent is rational,
//!
//! ```text
//!   q + Σᵢ γᵢ/(λ+λᵢ) = (q P(λ) + Q(λ)) / P(λ),
//!   P(λ) = Π (λ+λᵢ),   Q(λ) = Σᵢ γᵢ Π_{j≠i} (λ+λⱼ),
//! ```
//!
//! and matching it with 1/(aλ + b + λ Σ cᵢ/(λ+κᵢ)) reduces both directions of
//! the correspondence to locating the real zeros of an explicit polynomial
//! whose sign alternates between consecutive known points. All evaluation is
//! done in product form straight from the atom data; coefficient expansion is
//! never needed, and every root lives in a guaranteed bracket.

use crate::error::{Error, Result};
use crate::measure::Atom;

/// Zeros −κᵢ of q P + Q, returned as the positive κᵢ together with the weights
/// cᵢ of the spectral measure they carry. Requires ≥ 2 atoms or q > 0.
pub fn forward_atoms(q: f64, atoms: &[Atom]) -> Result<Vec<Atom>> {
    let lam: Vec<f64> = atoms.iter().map(|a| a.location).collect();
    let gam: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
    let n = lam.len();
    let m0: f64 = gam.iter().sum();

    // D(−x) = q P(−x) + Q(−x) evaluated in product form.
    let d_neg = |x: f64| -> f64 {
        let p: f64 = lam.iter().map(|&l| l - x).product();
        let qq: f64 = (0..n)
            .map(|i| {
                gam[i]
                    * lam
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &l)| l - x)
                        .product::<f64>()
            })
            .sum();
        q * p + qq
    };

    // One zero strictly inside each gap (λᵢ, λᵢ₊₁); with q > 0 one more above
    // λ_n, no further than m̄₀/q away.
    let mut kappas = Vec::new();
    for i in 0..n.saturating_sub(1) {
        kappas.push(bisect(&d_neg, lam[i], lam[i + 1])?);
    }
    if q > 0.0 {
        let lo = lam[n - 1];
        let mut hi = lo + m0 / q;
        let mut tries = 0;
        while d_neg(lo).signum() == d_neg(hi).signum() {
            hi = lo + (hi - lo) * 2.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::Solver(
                    "no sign change above the largest atom for the extra zero".into(),
                ));
            }
        }
        kappas.push(bisect(&d_neg, lo, hi)?);
    }

    // Residues of (P − (aλ+b) D)/(λ D) at −κᵢ collapse to
    // cᵢ = P(−κᵢ) / (−κᵢ · LC · Π_{j≠i}(κⱼ − κᵢ)) with LC the leading
    // coefficient of D (q if q > 0, m̄₀ otherwise).
    let lc = if q > 0.0 { q } else { m0 };
    let mut out = Vec::with_capacity(kappas.len());
    for (i, &k) in kappas.iter().enumerate() {
        let p: f64 = lam.iter().map(|&l| l - k).product();
        let gaps: f64 = kappas
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &kj)| kj - k)
            .product();
        let c = p / (-k * lc * gaps);
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Solver(format!(
                "nonpositive residue {c} at zero {k}; atom data violates the sign structure"
            )));
        }
        out.push(Atom { weight: c, location: k });
    }
    Ok(out)
}

/// Converse direction: zeros −λᵢ of Q₀(λ) = (aλ+b) Π(λ+κᵢ) + λ Σ cᵢ Π_{j≠i},
/// with the weights γᵢ read off the factored form. Returns (q, atoms of m).
pub fn backward_atoms(a: f64, b: f64, spectral: &[Atom]) -> Result<(f64, Vec<Atom>)> {
    let kap: Vec<f64> = spectral.iter().map(|s| s.location).collect();
    let c: Vec<f64> = spectral.iter().map(|s| s.weight).collect();
    let n = kap.len();
    let c0: f64 = c.iter().sum();

    let q0_neg = |x: f64| -> f64 {
        let p: f64 = kap.iter().map(|&k| k - x).product();
        let s: f64 = (0..n)
            .map(|i| {
                c[i] * kap
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &k)| k - x)
                    .product::<f64>()
            })
            .sum();
        (b - a * x) * p - x * s
    };

    let mut lambdas = Vec::new();
    let mut edges = vec![0.0];
    edges.extend_from_slice(&kap);
    for w in edges.windows(2) {
        lambdas.push(bisect(&q0_neg, w[0], w[1])?);
    }
    if a > 0.0 {
        let lo = kap[n - 1];
        let mut hi = lo + (b + c0) / a + 1.0;
        let mut tries = 0;
        while q0_neg(lo).signum() == q0_neg(hi).signum() {
            hi = lo + (hi - lo) * 2.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::Solver(
                    "no sign change above the largest spectral atom".into(),
                ));
            }
        }
        lambdas.push(bisect(&q0_neg, lo, hi)?);
    }

    let lc = if a > 0.0 { a } else { b + c0 };
    let q = if a > 0.0 { 0.0 } else { 1.0 / (b + c0) };
    let mut atoms = Vec::with_capacity(lambdas.len());
    for (i, &l) in lambdas.iter().enumerate() {
        let p: f64 = kap.iter().map(|&k| k - l).product();
        let gaps: f64 = lambdas
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &lj)| lj - l)
            .product();
        let g = p / (lc * gaps);
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::Solver(format!(
                "nonpositive weight {g} at zero {l}; spectral data violates the sign structure"
            )));
        }
        atoms.push(Atom { weight: g, location: l });
    }
    Ok((q, atoms))
}

/// Root of f in (lo, hi) assuming a strict sign change; bisection to a tight
/// bracket, then a few secant steps for the last digits.
fn bisect(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Solver(format!(
            "no sign change on [{lo}, {hi}]: the interlacing structure is violated"
        )));
    }
    let mut flo = flo;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    // Secant polish inside the final bracket.
    let (mut x0, mut x1) = (lo, hi);
    let (mut f0, mut f1) = (f(x0), f(x1));
    for _ in 0..4 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 > lo && x2 < hi) {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1);
        if f1 == 0.0 {
            break;
        }
    }
    Ok(x1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_atom_forward_closed_form() {
        // γ₁ = γ₂ = 1 at 1 and 2: single spectral atom (1/12, 3/2).
        let atoms = vec![
            Atom { weight: 1.0, location: 1.0 },
            Atom { weight: 1.0, location: 2.0 },
        ];
        let m = forward_atoms(0.0, &atoms).unwrap();
        assert_eq!(m.len(), 1);
        assert!((m[0].location - 1.5).abs() < 1e-13);
        assert!((m[0].weight - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn general_two_atom_closed_form() {
        // κ = (λ₂γ₁ + λ₁γ₂)/(γ₁+γ₂) and
        // c = γ₁γ₂(λ₁−λ₂)²/((γ₁+γ₂)²(λ₂γ₁+λ₁γ₂)).
        let (g1, g2, l1, l2) = (0.7, 2.5, 0.4, 3.1);
        let atoms = vec![
            Atom { weight: g1, location: l1 },
            Atom { weight: g2, location: l2 },
        ];
        let m = forward_atoms(0.0, &atoms).unwrap();
        let kappa = (l2 * g1 + l1 * g2) / (g1 + g2);
        let c = g1 * g2 * (l1 - l2) * (l1 - l2) / ((g1 + g2) * (g1 + g2) * (l2 * g1 + l1 * g2));
        assert!((m[0].location - kappa).abs() < 1e-12);
        assert!((m[0].weight - c).abs() < 1e-13);
    }

    #[test]
    fn translated_single_atom() {
        // q = 1, one atom (γ₁, λ₁): spectral atom at λ₁ + γ₁/q with weight
        // γ₁/(q²(λ₁+γ₁/q)).
        let atoms = vec![Atom { weight: 2.0, location: 3.0 }];
        let m = forward_atoms(1.0, &atoms).unwrap();
        assert_eq!(m.len(), 1);
        assert!((m[0].location - 5.0).abs() < 1e-12);
        assert!((m[0].weight - 2.0 / 5.0).abs() < 1e-13);
    }

    #[test]
    fn backward_single_spectral_atom() {
        // a = 0, b = 1, M = ε₂: q = 1/2, m = (1/2) ε₁.
        let spectral = vec![Atom { weight: 1.0, location: 2.0 }];
        let (q, atoms) = backward_atoms(0.0, 1.0, &spectral).unwrap();
        assert!((q - 0.5).abs() < 1e-15);
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].location - 1.0).abs() < 1e-13);
        assert!((atoms[0].weight - 0.5).abs() < 1e-13);
    }

    #[test]
    fn backward_recovers_two_atoms() {
        // a = 1/2, b = 2/3, M = (1/12) ε_{3/2}: q = 0, m = ε₁ + ε₂.
        let spectral = vec![Atom { weight: 1.0 / 12.0, location: 1.5 }];
        let (q, atoms) = backward_atoms(0.5, 2.0 / 3.0, &spectral).unwrap();
        assert_eq!(q, 0.0);
        assert_eq!(atoms.len(), 2);
        assert!((atoms[0].location - 1.0).abs() < 1e-12);
        assert!((atoms[1].location - 2.0).abs() < 1e-12);
        assert!((atoms[0].weight - 1.0).abs() < 1e-12);
        assert!((atoms[1].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interlacing_many_atoms() {
        let atoms: Vec<Atom> = (1..=8)
            .map(|i| Atom {
                weight: 0.3 + 0.1 * i as f64,
                location: i as f64 * i as f64 * 0.37,
            })
            .collect();
        for &q in &[0.0, 0.8] {
            let m = forward_atoms(q, &atoms).unwrap();
            let expect_len = if q > 0.0 { 8 } else { 7 };
            assert_eq!(m.len(), expect_len);
            for i in 0..7 {
                assert!(atoms[i].location < m[i].location);
                if i + 1 < atoms.len() {
                    assert!(m[i].location < atoms[i + 1].location);
                }
            }
            if q > 0.0 {
                let m0: f64 = atoms.iter().map(|a| a.weight).sum();
                assert!(m[7].location > atoms[7].location);
                assert!(m[7].location <= atoms[7].location + m0 / q + 1e-12);
            }
        }
    }
}
