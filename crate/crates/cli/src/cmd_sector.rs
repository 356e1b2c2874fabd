//! `sector`: full sector-constant report for one stationary pair, reached
//! either directly or through the backward map from a mechanism quadruplet.

use serde::Serialize;

use ggc_cbi::correspondence::backward;
use ggc_cbi::measure::ThorinPair;
use ggc_cbi::mechanism::Quadruplet;
use ggc_cbi::sector::{sector_report, SectorReport};

use crate::artifact::{self, ConfigKey, Meta};
use crate::{require_increasing, CliResult, Failure, GlobalArgs, SectorArgs, EXIT_OK};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SectorArtifact {
    meta: Meta,
    delta: f64,
    report: SectorReport,
}

pub fn run(args: &SectorArgs, global: &GlobalArgs) -> CliResult {
    require_increasing("grid", &args.grid)?;
    if !(args.delta > 0.0) || !args.delta.is_finite() {
        return Err(Failure::input(format!(
            "--delta must be positive and finite, got {}",
            args.delta
        )));
    }

    let bytes = std::fs::read(&args.input)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", args.input.display())))?;

    // A quadruplet file carries a/b/M/delta, a pair file q/m; each schema
    // fails the other's parse, so trying both is unambiguous.
    let (pair, delta) = match serde_json::from_slice::<Quadruplet>(&bytes) {
        Ok(quad) => {
            let corr = backward(quad.a(), quad.b(), quad.spectral())?;
            let pair = ThorinPair::new(corr.q, corr.m)?;
            (pair, quad.delta())
        }
        Err(quad_err) => match serde_json::from_slice::<ThorinPair>(&bytes) {
            Ok(pair) => (pair, args.delta),
            Err(pair_err) => {
                return Err(Failure::input(format!(
                    "{} parses as neither a mechanism quadruplet ({quad_err}) nor a \
                     stationary pair ({pair_err})",
                    args.input.display()
                )));
            }
        },
    };

    let report = sector_report(&pair, delta, &args.grid)?;

    if let Some(tol) = global.tol {
        if !(report.identity_residual <= tol) {
            return Err(Failure::invariant(format!(
                "identity residual {:.3e} exceeds the requested tolerance {tol:.0e}",
                report.identity_residual
            )));
        }
    }

    let meta = ConfigKey::new("sector")
        .file("input", &bytes)
        .arg("delta", delta)
        .list("grid", &args.grid)
        .opt("tol", global.tol)
        .arg("seed", global.seed)
        .finish();

    // Surface rows (λ, μ, full, symmetric, antisymmetric) over the basis
    // grid, read off the report's Gram matrices.
    let k = report.basis.len();
    let mut rows = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let full = report.matrices.full[i][j];
            let sym = report.matrices.symmetric[i][j];
            rows.push(format!(
                "{},{},{},{},{}",
                report.basis[i],
                report.basis[j],
                full,
                sym,
                full - sym
            ));
        }
    }

    let art = SectorArtifact { meta: meta.clone(), delta, report };
    artifact::write_json(&global.out, "sector.json", &art)?;
    artifact::write_csv(
        &global.out,
        "bilinear.csv",
        &meta,
        "lambda,mu,full,symmetric,antisymmetric",
        rows,
    )?;

    if global.json {
        println!("{}", artifact::render_json(&art)?);
    }
    Ok(EXIT_OK)
}
