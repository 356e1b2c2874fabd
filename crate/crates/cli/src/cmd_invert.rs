//! `invert`: recover a measure's density and atoms from boundary values of
//! its own Stieltjes transform. Per-point extrapolation failures are data
//! (flags in the artifact), not process errors.

use serde::Serialize;

use ggc_cbi::correspondence::{halving_ladder, stieltjes_invert};
use ggc_cbi::measure::PositiveMeasure;

use crate::artifact::{self, ConfigKey, Meta};
use crate::{CliResult, Failure, GlobalArgs, InvertArgs, EXIT_OK};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AtomOut {
    weight: f64,
    location: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct InvertArtifact {
    meta: Meta,
    points: usize,
    flagged: Vec<usize>,
    atoms: Vec<AtomOut>,
    x_min: f64,
    x_max: f64,
    y0: f64,
    rungs: usize,
}

pub fn run(args: &InvertArgs, global: &GlobalArgs) -> CliResult {
    let (measure, bytes): (PositiveMeasure, _) = artifact::read_input(&args.input)?;

    if args.points < 2 {
        return Err(Failure::input(format!("--points must be ≥ 2, got {}", args.points)));
    }
    let support = measure
        .support()
        .ok_or_else(|| Failure::input("the zero measure has no transform to invert"))?;
    // Defaults hug the support: slightly inside the lower edge, at the upper
    // edge for bounded measures, ten scale units out for unbounded ones.
    let scale = support.0.max(1.0);
    let x_max = match args.x_max {
        Some(v) => v,
        None if support.1.is_finite() => support.1,
        None => support.0 + 10.0 * scale,
    };
    let x_min = match args.x_min {
        Some(v) => v,
        None => support.0 + 5e-3 * (x_max - support.0),
    };
    if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
        return Err(Failure::input(format!(
            "need finite --x-min < --x-max, got {x_min} and {x_max}"
        )));
    }

    let n = args.points;
    let xs: Vec<f64> =
        (0..n).map(|i| x_min + (x_max - x_min) * i as f64 / (n - 1) as f64).collect();
    let ys = halving_ladder(args.y0, args.rungs);

    let g = |z| measure.stieltjes(z);
    let inversion = stieltjes_invert(g, &xs, &ys)?;

    let meta = ConfigKey::new("invert")
        .file("input", &bytes)
        .arg("xMin", x_min)
        .arg("xMax", x_max)
        .arg("points", n)
        .arg("y0", args.y0)
        .arg("rungs", args.rungs)
        .opt("tol", global.tol)
        .arg("seed", global.seed)
        .finish();

    // Atoms land exactly on grid abscissae, so an exact-location lookup
    // assigns each row its mass.
    let mass_at = |x: f64| -> f64 {
        inversion
            .atoms
            .iter()
            .find(|a| a.location == x)
            .map(|a| a.weight)
            .unwrap_or(0.0)
    };
    let rows = xs
        .iter()
        .zip(&inversion.densities)
        .map(|(&x, &d)| format!("{x},{d},{}", mass_at(x)));
    artifact::write_csv(&global.out, "density.csv", &meta, "x,density,atom_mass", rows)?;

    let art = InvertArtifact {
        meta,
        points: n,
        flagged: inversion
            .flagged
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect(),
        atoms: inversion
            .atoms
            .iter()
            .map(|a| AtomOut { weight: a.weight, location: a.location })
            .collect(),
        x_min,
        x_max,
        y0: args.y0,
        rungs: args.rungs,
    };
    artifact::write_json(&global.out, "inversion.json", &art)?;

    if global.json {
        println!("{}", artifact::render_json(&art)?);
    }
    Ok(EXIT_OK)
}
