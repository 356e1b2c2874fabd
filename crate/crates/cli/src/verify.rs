//! The acceptance suite: ten numbered criteria covering the closed forms,
//! residual identities, sector sandwich, Monte Carlo agreement, and boolean
//! algebra. Each criterion reports pass/fail with a one-line detail; the
//! suite passes only if every criterion does.
//!
//! Deterministic tolerances can be replaced wholesale through `--tol`
//! (tightening them surfaces honest failures); statistical bands (σ
//! multiples) and strict `>` separation gates are fixed, since loosening
//! them could only weaken the suite.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ggc_cbi::boolean::{
    boolean_convolve, boolean_cumulant, complex_probes, free_poisson_density, FreePoissonParams,
};
use ggc_cbi::correspondence::{backward, forward, halving_ladder, stieltjes_invert};
use ggc_cbi::measure::{Atom, PositiveMeasure, ThorinPair};
use ggc_cbi::mechanism::Quadruplet;
use ggc_cbi::sector::{reversibility_residual, sector_report, REVERSIBILITY_GRID};
use ggc_cbi::simulate::{empirical_laplace, simulate_paths, verify_transient};

use crate::artifact::{self, ConfigKey};
use crate::{CliResult, Failure, GlobalArgs, VerifyArgs, EXIT_CRITERION, EXIT_OK};

pub const CRITERIA: usize = 10;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

pub struct VerifyOptions {
    pub seed: u64,
    pub tol: Option<f64>,
    /// Criterion numbers to run; empty means all.
    pub only: Vec<usize>,
}

struct Ctx {
    seed: u64,
    tol: Option<f64>,
}

impl Ctx {
    /// One RNG stream per criterion, all derived from the run seed.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

type Check = Result<(bool, String), ggc_cbi::Error>;

/// Runs the selected criteria in order.
pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionResult> {
    let ctx = Ctx { seed: opts.seed, tol: opts.tol };
    let table: [(usize, &'static str, fn(&Ctx) -> Check); CRITERIA] = [
        (1, "two-atom forward closed forms", c1),
        (2, "resolvent identity and interlacing", c2),
        (3, "round-trip recovery", c3),
        (4, "density inversion and the window pole", c4),
        (5, "transient flow closed form and implicit residual", c5),
        (6, "sector sandwich for the two-atom pair", c6),
        (7, "reversibility dichotomy", c7),
        (8, "ensemble transforms match analytics", c8),
        (9, "empirical support floor", c9),
        (10, "boolean algebra and the correspondence fixed point", c10),
    ];
    table
        .iter()
        .filter(|(id, _, _)| opts.only.is_empty() || opts.only.contains(id))
        .map(|&(id, name, f)| {
            let start = Instant::now();
            let (passed, details) = match f(&ctx) {
                Ok(outcome) => outcome,
                Err(e) => (false, format!("error: {e}")),
            };
            CriterionResult { id, name, passed, details, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

/// `verify` subcommand: print one line per criterion, write the JSON
/// summary, exit 0 only if everything passed.
pub fn run_command(args: &VerifyArgs, global: &GlobalArgs) -> CliResult {
    for &id in &args.only {
        if !(1..=CRITERIA).contains(&id) {
            return Err(Failure::input(format!("--only accepts 1..={CRITERIA}, got {id}")));
        }
    }
    let results =
        run_all(&VerifyOptions { seed: global.seed, tol: global.tol, only: args.only.clone() });
    for r in &results {
        println!(
            "criterion {:02} {} {} [{:.2} s] {}",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            r.details
        );
    }
    let all_passed = results.iter().all(|r| r.passed);

    let only_str = if args.only.is_empty() {
        "all".to_string()
    } else {
        args.only.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
    };
    let meta = ConfigKey::new("verify")
        .arg("only", only_str)
        .opt("tol", global.tol)
        .arg("seed", global.seed)
        .finish();

    #[derive(Serialize)]
    #[serde(rename_all = "camelCase")]
    struct VerifyArtifact {
        meta: artifact::Meta,
        all_passed: bool,
        criteria: Vec<CriterionResult>,
    }
    let art = VerifyArtifact { meta, all_passed, criteria: results };
    artifact::write_json(&global.out, "verify.json", &art)?;
    if global.json {
        println!("{}", artifact::render_json(&art)?);
    }
    Ok(if all_passed { EXIT_OK } else { EXIT_CRITERION })
}

/// Atomic measure with the requested number of atoms, weights and locations
/// uniform in the given ranges; location gaps below 10⁻³ are redrawn so the
/// polynomial routes stay well conditioned.
fn random_atomic(
    rng: &mut ChaCha8Rng,
    n: usize,
    weights: std::ops::Range<f64>,
    locations: std::ops::Range<f64>,
) -> PositiveMeasure {
    loop {
        let mut atoms: Vec<Atom> = (0..n)
            .map(|_| Atom {
                weight: rng.gen_range(weights.clone()),
                location: rng.gen_range(locations.clone()),
            })
            .collect();
        atoms.sort_by(|x, y| x.location.total_cmp(&y.location));
        if atoms.windows(2).all(|p| p[1].location - p[0].location > 1e-3) {
            return PositiveMeasure::atomic(atoms).expect("atoms are valid by construction");
        }
    }
}

fn two_atom_pair() -> ggc_cbi::Result<ThorinPair> {
    ThorinPair::new(
        0.0,
        PositiveMeasure::atomic(vec![
            Atom { weight: 1.0, location: 1.0 },
            Atom { weight: 1.0, location: 2.0 },
        ])?,
    )
}

/// Largest atom-wise deviation between two atomic measures.
fn atom_distance(x: &PositiveMeasure, y: &PositiveMeasure) -> ggc_cbi::Result<f64> {
    let (ax, ay) = (x.atoms(), y.atoms());
    if ax.len() != ay.len() {
        return Err(ggc_cbi::Error::Consistency(format!(
            "atom count mismatch: {} vs {}",
            ax.len(),
            ay.len()
        )));
    }
    Ok(ax
        .iter()
        .zip(&ay)
        .map(|(p, q)| (p.weight - q.weight).abs().max((p.location - q.location).abs()))
        .fold(0.0, f64::max))
}

/// 1: the forward map of a two-atom pair hits the one-atom closed forms
/// κ = (λ₂γ₁ + λ₁γ₂)/(γ₁ + γ₂) and c = γ₁γ₂(λ₁ − λ₂)²/((γ₁+γ₂)²(λ₂γ₁+λ₁γ₂))
/// to 10⁻¹² over 50 random draws, in under a second.
fn c1(ctx: &Ctx) -> Check {
    let tol = ctx.tol(1e-12);
    let mut rng = ctx.rng(1);
    let start = Instant::now();
    let mut worst_location: f64 = 0.0;
    let mut worst_weight: f64 = 0.0;
    for _ in 0..50 {
        let m = random_atomic(&mut rng, 2, 0.1..10.0, 0.1..10.0);
        let at = m.atoms();
        let (g1, l1, g2, l2) = (at[0].weight, at[0].location, at[1].weight, at[1].location);
        let kappa = (l2 * g1 + l1 * g2) / (g1 + g2);
        let c = g1 * g2 * (l1 - l2).powi(2) / ((g1 + g2).powi(2) * (l2 * g1 + l1 * g2));
        let corr = forward(&ThorinPair::new(0.0, m)?)?;
        let found = corr.spectral.atoms();
        if found.len() != 1 {
            return Ok((false, format!("expected one spectral atom, got {}", found.len())));
        }
        worst_location = worst_location.max((found[0].location - kappa).abs());
        worst_weight = worst_weight.max((found[0].weight - c).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_location <= tol && worst_weight <= tol && secs < 1.0;
    Ok((
        pass,
        format!(
            "max |Δκ| = {worst_location:.2e}, max |Δc| = {worst_weight:.2e} \
             (tolerance {tol:.0e}); {secs:.3} s (< 1 s)"
        ),
    ))
}

/// 2: every atomic forward/backward result keeps the reciprocal resolvent
/// identity below 10⁻¹⁰ on the standard λ-sweep, and the forward atoms
/// interlace strictly (with the q > 0 cap on the last atom).
fn c2(ctx: &Ctx) -> Check {
    let tol = ctx.tol(1e-10);
    let mut rng = ctx.rng(2);
    let mut worst: f64 = 0.0;
    let mut cases = 0usize;
    for n in 1..=8 {
        for &q in &[0.0, 0.7] {
            let m = random_atomic(&mut rng, n, 0.1..5.0, 0.1..10.0);
            let corr = forward(&ThorinPair::new(q, m.clone())?)?;
            worst = worst.max(corr.identity_residual);
            let lam: Vec<f64> = m.atoms().iter().map(|a| a.location).collect();
            let kap: Vec<f64> = corr.spectral.atoms().iter().map(|a| a.location).collect();
            let expected = if q > 0.0 { n } else { n - 1 };
            if kap.len() != expected {
                return Ok((
                    false,
                    format!("{n} atoms, q = {q}: expected {expected} spectral atoms, got {}", kap.len()),
                ));
            }
            for (i, &k) in kap.iter().enumerate() {
                let above = k > lam[i];
                let below = if i + 1 < lam.len() {
                    k < lam[i + 1]
                } else {
                    k <= lam[i] + m.moment(0.0)?.value() / q
                };
                if !(above && below) {
                    return Ok((false, format!("interlacing violated at {n} atoms, q = {q}")));
                }
            }
            cases += 1;
        }
    }
    for n in 1..=8 {
        for &(a, b) in &[(0.5, 0.8), (0.0, 1.2)] {
            let spectral = random_atomic(&mut rng, n, 0.05..1.0, 0.5..10.0);
            let corr = backward(a, b, &spectral)?;
            worst = worst.max(corr.identity_residual);
            cases += 1;
        }
    }
    Ok((
        worst <= tol,
        format!("{cases} cases, max identity residual {worst:.2e} (tolerance {tol:.0e})"),
    ))
}

/// 3: backward∘forward and forward∘backward recover their atomic inputs
/// atom-wise to 10⁻¹⁰ over 50 random measures each way.
fn c3(ctx: &Ctx) -> Check {
    let tol = ctx.tol(1e-10);
    let mut rng = ctx.rng(3);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let n = rng.gen_range(2..=6);
        let q = if i % 2 == 0 { 0.0 } else { rng.gen_range(0.1..1.0) };
        let m = random_atomic(&mut rng, n, 0.1..5.0, 0.1..10.0);
        let fwd = forward(&ThorinPair::new(q, m.clone())?)?;
        let back = backward(fwd.a, fwd.b, &fwd.spectral)?;
        worst = worst.max((back.q - q).abs());
        worst = worst.max(atom_distance(&m, &back.m)?);
    }
    for i in 0..50 {
        let n = rng.gen_range(2..=6);
        let (a, b) = if i % 2 == 0 {
            (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0))
        } else {
            (0.0, rng.gen_range(0.5..2.0))
        };
        let spectral = random_atomic(&mut rng, n, 0.05..1.0, 0.5..10.0);
        let back = backward(a, b, &spectral)?;
        let fwd = forward(&ThorinPair::new(back.q, back.m.clone())?)?;
        worst = worst.max((fwd.a - a).abs()).max((fwd.b - b).abs());
        worst = worst.max(atom_distance(&spectral, &fwd.spectral)?);
    }
    Ok((worst <= tol, format!("100 round trips, max defect {worst:.2e} (tolerance {tol:.0e})")))
}

/// 4: inverting the spectral transform of the square-root stable pair
/// reproduces the density (x−1)^{1/2}/(πx) to 10⁻⁴ relative on 50 points of
/// (1.01, 10); the uniform-block mechanism's gap pole solves its defining
/// equation to 10⁻¹⁰ inside (b/a, 1 + (b+1)/a).
fn c4(ctx: &Ctx) -> Check {
    let density_tol = ctx.tol(1e-4);
    let pole_tol = ctx.tol(1e-10);

    let m = PositiveMeasure::stable_tail(0.5, 1.0)?;
    let (a, b) = (0.0, 1.0);
    let g_spectral = |z: Complex64| -> ggc_cbi::Result<Complex64> {
        let g = m.stieltjes(z)?;
        Ok((a * z - b - 1.0 / g) / z)
    };
    let xs: Vec<f64> =
        (0..50).map(|i| 1.01 + (10.0 - 1.01) * (i as f64 + 0.5) / 50.0).collect();
    let ys = halving_ladder(1e-4, 7);
    let inv = stieltjes_invert(g_spectral, &xs, &ys)?;
    let mut worst_rel: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if inv.flagged[i] {
            return Ok((false, format!("inversion did not settle at x = {x}")));
        }
        let want = (x - 1.0).sqrt() / (std::f64::consts::PI * x);
        worst_rel = worst_rel.max((inv.densities[i] - want).abs() / want);
    }
    if !inv.atoms.is_empty() {
        return Ok((false, "spurious atoms in a purely continuous inversion".into()));
    }

    let (pa, pb) = (1.0, 1.0);
    let corr = backward(pa, pb, &PositiveMeasure::window(0.0, 1.0)?)?;
    let pole = match corr.m.atoms().into_iter().find(|at| at.location > 1.0) {
        Some(at) => at,
        None => return Ok((false, "no gap pole found beyond the uniform block".into())),
    };
    let x0 = pole.location;
    let defect = (pa * x0 - pb - x0 * (x0 / (x0 - 1.0)).ln()).abs();
    let (lo, hi) = (pb / pa, 1.0 + (pb + 1.0) / pa);
    let bracketed = x0 > lo && x0 < hi;

    let pass = worst_rel <= density_tol && defect <= pole_tol && bracketed;
    Ok((
        pass,
        format!(
            "sup relative density error {worst_rel:.2e} (tolerance {density_tol:.0e}); \
             pole {x0:.12} defect {defect:.2e} (tolerance {pole_tol:.0e}) in ({lo}, {hi})"
        ),
    ))
}

/// 5: the ψ-flow matches the square-root-diffusion closed form
/// ψ = bλe^{−bt}/(b + aλ(1 − e^{−bt})) to 10⁻⁸ on a 10×10 grid, and the
/// stable-tail mechanism keeps the implicit flow identity below 10⁻⁸.
fn c5(ctx: &Ctx) -> Check {
    let tol = ctx.tol(1e-8);
    let cir = Quadruplet::new(1.0, 1.0, PositiveMeasure::zero(), 1.0)?;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let t = 0.2 * (i as f64 + 1.0);
        for j in 0..10 {
            let lam = 0.4 * (j as f64 + 1.0);
            let sol = cir.psi(t, lam)?;
            let decay = (-t).exp();
            let exact = lam * decay / (1.0 + lam * (1.0 - decay));
            worst = worst.max((sol.psi - exact).abs());
        }
    }
    let stable = Quadruplet::new(0.0, 1.0, PositiveMeasure::stable_tail_dual(0.5, 1.0)?, 1.0)?;
    let mut worst_implicit: f64 = 0.0;
    for &t in &[0.3, 1.0, 2.5] {
        for &lam in &[0.5, 1.5, 4.0] {
            worst_implicit = worst_implicit.max(stable.psi(t, lam)?.residual.abs());
        }
    }
    let pass = worst <= tol && worst_implicit <= tol;
    Ok((
        pass,
        format!(
            "max |ψ − closed form| = {worst:.2e}; max implicit residual = \
             {worst_implicit:.2e} (tolerance {tol:.0e})"
        ),
    ))
}

/// 6: for the two-atom pair at δ = 1 the sector estimates sandwich strictly:
/// moment lower bound ≤ empirical < upper cap 1 + √(2/3) + 10⁻⁶, the
/// empirical value exceeds 1, and the two lower routes agree to 10⁻¹⁰.
fn c6(ctx: &Ctx) -> Check {
    let tol_agree = ctx.tol(1e-10);
    let report = sector_report(&two_atom_pair()?, 1.0, &REVERSIBILITY_GRID)?;
    let cap = 1.0 + (2.0f64 / 3.0).sqrt() + 1e-6;
    let route_gap = (report.lower_moments - report.lower_general).abs();
    let pass = report.lower_moments <= report.empirical
        && report.empirical <= cap
        && report.empirical > 1.0
        && route_gap <= tol_agree;
    Ok((
        pass,
        format!(
            "lower {:.9} ≤ empirical {:.9} ≤ cap {cap:.9}, empirical > 1; \
             lower routes differ by {route_gap:.2e} (tolerance {tol_agree:.0e})",
            report.lower_moments, report.empirical
        ),
    ))
}

/// 7: reversibility residuals split cleanly: ≤ 10⁻¹² for 20 random
/// diffusive mechanisms, > 10⁻³ for 20 random jumping two-atom pairs drawn
/// from a family whose atoms stay separated.
fn c7(ctx: &Ctx) -> Check {
    let tol = ctx.tol(1e-12);
    let mut rng = ctx.rng(7);
    let mut worst_diffusive: f64 = 0.0;
    for _ in 0..20 {
        let a = rng.gen_range(0.2..3.0);
        let b = rng.gen_range(0.2..3.0);
        let delta = rng.gen_range(0.5..2.0);
        let quad = Quadruplet::new(a, b, PositiveMeasure::zero(), delta)?;
        worst_diffusive = worst_diffusive.max(reversibility_residual(&quad, delta, &REVERSIBILITY_GRID)?);
    }
    let mut min_jumping = f64::INFINITY;
    for _ in 0..20 {
        let g1 = rng.gen_range(0.2..0.8);
        let g2 = rng.gen_range(0.2..0.8);
        let l1 = rng.gen_range(0.5..1.5);
        let l2 = l1 * rng.gen_range(4.0..8.0);
        let delta = rng.gen_range(0.5..1.0);
        let m = PositiveMeasure::atomic(vec![
            Atom { weight: g1, location: l1 },
            Atom { weight: g2, location: l2 },
        ])?;
        let corr = forward(&ThorinPair::new(0.0, m)?)?;
        let quad = Quadruplet::new(corr.a, corr.b, corr.spectral, delta)?;
        min_jumping = min_jumping.min(reversibility_residual(&quad, delta, &REVERSIBILITY_GRID)?);
    }
    let pass = worst_diffusive <= tol && min_jumping > 1e-3;
    Ok((
        pass,
        format!(
            "max diffusive asymmetry {worst_diffusive:.2e} (tolerance {tol:.0e}); \
             min jumping asymmetry {min_jumping:.2e} (> 1e-3 required)"
        ),
    ))
}

/// 8: ensembles agree with the analytic transforms: the square-root
/// diffusion run (10⁵ paths, dt = 10⁻³, T = 20) lands within 3σ of
/// 1/(1+λ) at ten λ-points; the two-atom jump run's terminal mean lands
/// within 4σ of δ·m̄₋₁; both transient checks at t ∈ {0.5, 2} pass; all in
/// under two minutes.
fn c8(ctx: &Ctx) -> Check {
    let start = Instant::now();
    let cir = Quadruplet::new(1.0, 1.0, PositiveMeasure::zero(), 1.0)?;
    let ensemble = simulate_paths(&cir, 1.0, 20.0, 1e-3, 100_000, ctx.seed)?;
    let grid: Vec<f64> = (1..=10).map(|i| 0.3 * i as f64).collect();
    let mut worst_z: f64 = 0.0;
    for point in empirical_laplace(&ensemble, &grid)? {
        let exact = 1.0 / (1.0 + point.lambda);
        worst_z = worst_z.max(((point.value - exact) / point.std_error).abs());
    }
    let cir_ok = worst_z <= 3.0;

    let corr = forward(&two_atom_pair()?)?;
    let quad = Quadruplet::new(corr.a, corr.b, corr.spectral.clone(), 1.0)?;
    let jump_ens = simulate_paths(&quad, 1.5, 12.0, 5e-3, 20_000, ctx.seed ^ 0x9e37)?;
    let n = jump_ens.terminals.len() as f64;
    let mean = jump_ens.terminals.iter().sum::<f64>() / n;
    let var = jump_ens.terminals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let target = 1.5;
    let band = 4.0 * (var / n).sqrt();
    let mean_ok = (mean - target).abs() <= band;

    let mut worst_transient: f64 = 0.0;
    let mut transient_ok = true;
    for &t in &[0.5, 2.0] {
        let e = simulate_paths(&quad, 1.0, t, 1e-3, 20_000, ctx.seed ^ 0x51)?;
        let report = verify_transient(&quad, &e, &REVERSIBILITY_GRID)?;
        worst_transient = worst_transient.max(report.max_abs_z);
        transient_ok &= report.pass;
    }

    let secs = start.elapsed().as_secs_f64();
    let pass = cir_ok && mean_ok && transient_ok && secs < 120.0;
    Ok((
        pass,
        format!(
            "diffusive max |z| = {worst_z:.2} (≤ 3); jump mean {mean:.4} vs {target} \
             within {band:.4}; transient max |z| = {worst_transient:.2} (< 4); \
             {secs:.1} s (< 120 s)"
        ),
    ))
}

/// 9: with a = 0 and b + c = 1 the simulated paths respect the
/// deterministic support floor at t = 1 up to the 2·dt·(b+c)·x₀
/// discretization slack.
fn c9(ctx: &Ctx) -> Check {
    let spectral = PositiveMeasure::atomic(vec![Atom { weight: 0.5, location: 1.0 }])?;
    let quad = Quadruplet::new(0.0, 0.5, spectral, 1.0)?;
    let (x0, dt) = (1.0, 1e-3);
    let ensemble = simulate_paths(&quad, x0, 1.0, dt, 20_000, ctx.seed ^ 0x99)?;
    let floor = quad.support_infimum(1.0, x0)?;
    let slack = 2.0 * dt * 1.0 * x0;
    let min = ensemble.terminals.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = min >= floor - slack;
    Ok((
        pass,
        format!("min terminal {min:.6} vs floor {floor:.6} minus slack {slack:.0e}"),
    ))
}

/// 10: point masses add locations under ⊎ exactly; the cumulant additivity
/// residual stays below 10⁻¹⁰ at the 20 probe points for 20 random pairs;
/// the forward map of the standard free Poisson law returns a = 1, b = 0
/// and a spectral density matching the closed form to 10⁻⁴ on (0.05, 3.95).
fn c10(ctx: &Ctx) -> Check {
    let atom_tol = ctx.tol(1e-12);
    let cumulant_tol = ctx.tol(1e-10);
    let density_tol = ctx.tol(1e-4);

    let e1 = PositiveMeasure::atomic(vec![Atom { weight: 1.0, location: 1.0 }])?;
    let e2 = PositiveMeasure::atomic(vec![Atom { weight: 1.0, location: 2.0 }])?;
    let conv = boolean_convolve(&e1, &e2)?;
    let found = conv.atoms();
    let point_ok = found.len() == 1
        && (found[0].location - 3.0).abs() <= atom_tol
        && (found[0].weight - 1.0).abs() <= atom_tol;

    let probes = complex_probes();
    let mut rng = ctx.rng(10);
    let mut worst_cumulant: f64 = 0.0;
    for _ in 0..20 {
        let p1 = random_probability(&mut rng);
        let p2 = random_probability(&mut rng);
        let c = boolean_convolve(&p1, &p2)?;
        for &z in &probes {
            let defect =
                boolean_cumulant(&c, z)? - boolean_cumulant(&p1, z)? - boolean_cumulant(&p2, z)?;
            worst_cumulant = worst_cumulant.max(defect.norm());
        }
    }

    let mp = PositiveMeasure::free_poisson_scaled(1.0, 1.0, 1.0)?;
    let corr = forward(&ThorinPair::new(0.0, mp)?)?;
    let constants_ok = (corr.a - 1.0).abs() <= 1e-12 && corr.b.abs() <= 1e-12;
    let params = FreePoissonParams::new(1.0, 1.0)?;
    let mut worst_density: f64 = 0.0;
    for i in 0..50 {
        let u = 0.05 + (3.95 - 0.05) * i as f64 / 49.0;
        worst_density =
            worst_density.max((corr.spectral.density_at(u) - free_poisson_density(&params, u)).abs());
    }

    let pass =
        point_ok && worst_cumulant <= cumulant_tol && constants_ok && worst_density <= density_tol;
    Ok((
        pass,
        format!(
            "point-mass sum exact to {atom_tol:.0e}; max cumulant defect {worst_cumulant:.2e} \
             (tolerance {cumulant_tol:.0e}); fixed-point constants a = {:.3e}+1, b = {:.3e}; \
             sup density error {worst_density:.2e} (tolerance {density_tol:.0e})",
            corr.a - 1.0,
            corr.b
        ),
    ))
}

/// Random probability measure with 2 or 3 separated atoms.
fn random_probability(rng: &mut ChaCha8Rng) -> PositiveMeasure {
    let n = rng.gen_range(2..=3);
    let raw = random_atomic(rng, n, 0.2..1.0, 0.3..5.0);
    let atoms = raw.atoms();
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    PositiveMeasure::atomic(
        atoms
            .into_iter()
            .map(|a| Atom { weight: a.weight / total, location: a.location })
            .collect(),
    )
    .expect("normalized atoms are valid")
}
