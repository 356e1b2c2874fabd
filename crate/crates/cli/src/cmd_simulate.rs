//! `simulate`: one Euler-scheme ensemble with its Laplace-transform
//! diagnostics. Exit 1 signals that the transient comparison failed its
//! z-band; the artifacts are written either way.

use serde::Serialize;

use ggc_cbi::mechanism::Quadruplet;
use ggc_cbi::simulate::{
    default_dt, empirical_laplace, simulate_paths, verify_transient, LaplacePoint,
    TransientReport,
};

use crate::artifact::{self, ConfigKey, Meta};
use crate::{require_increasing, CliResult, GlobalArgs, SimulateArgs, EXIT_CRITERION, EXIT_OK};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SimArtifact {
    meta: Meta,
    seed: u64,
    paths: usize,
    dt: f64,
    horizon: f64,
    x0: f64,
    dt_warning: bool,
    terminal_mean: f64,
    terminal_std: f64,
    terminal_min: f64,
    terminal_max: f64,
    total_jumps: u64,
    laplace: Vec<LaplacePoint>,
    transient: TransientReport,
}

pub fn run(args: &SimulateArgs, global: &GlobalArgs) -> CliResult {
    require_increasing("lambda-grid", &args.lambda_grid)?;

    let (quad, bytes): (Quadruplet, _) = artifact::read_input(&args.input)?;
    let dt = match args.dt {
        Some(dt) => dt,
        None => default_dt(&quad)?,
    };

    let ensemble = simulate_paths(&quad, args.x0, args.horizon, dt, args.paths, global.seed)?;
    if ensemble.dt_warning {
        eprintln!(
            "warning: jump intensity times step exceeds 0.1 at the typical state; \
             shrink --dt for an unbiased thinning"
        );
    }
    let laplace = empirical_laplace(&ensemble, &args.lambda_grid)?;
    let transient = verify_transient(&quad, &ensemble, &args.lambda_grid)?;

    let n = ensemble.terminals.len() as f64;
    let mean = ensemble.terminals.iter().sum::<f64>() / n;
    let var = if ensemble.terminals.len() > 1 {
        ensemble.terminals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let min = ensemble.terminals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ensemble.terminals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let meta = ConfigKey::new("simulate")
        .file("input", &bytes)
        .arg("x0", args.x0)
        .arg("horizon", args.horizon)
        .arg("dt", ensemble.dt)
        .arg("paths", args.paths)
        .list("lambdaGrid", &args.lambda_grid)
        .opt("tol", global.tol)
        .arg("seed", global.seed)
        .finish();

    let rows = ensemble
        .terminals
        .iter()
        .zip(&ensemble.jump_counts)
        .enumerate()
        .map(|(i, (x, j))| format!("{i},{x},{j}"));
    artifact::write_csv(&global.out, "paths.csv", &meta, "path_id,terminal,jumps", rows)?;

    let pass = transient.pass;
    let art = SimArtifact {
        meta,
        seed: ensemble.seed,
        paths: ensemble.paths,
        dt: ensemble.dt,
        horizon: ensemble.horizon,
        x0: ensemble.x0,
        dt_warning: ensemble.dt_warning,
        terminal_mean: mean,
        terminal_std: var.sqrt(),
        terminal_min: min,
        terminal_max: max,
        total_jumps: ensemble.jump_counts.iter().sum(),
        laplace,
        transient,
    };
    artifact::write_json(&global.out, "summary.json", &art)?;

    if global.json {
        println!("{}", artifact::render_json(&art)?);
    }
    if pass {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "transient comparison failed: max |z| = {:.2} at horizon {}",
            art.transient.max_abs_z, art.horizon
        );
        Ok(EXIT_CRITERION)
    }
}
