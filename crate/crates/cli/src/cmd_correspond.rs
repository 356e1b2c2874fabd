//! `correspond`: drive the stationary-pair / mechanism map in either
//! direction and write the result with its density dump.

use serde::{Deserialize, Serialize};

use ggc_cbi::correspondence::{backward, forward, CorrespondenceResult};
use ggc_cbi::measure::{PositiveMeasure, ThorinPair};

use crate::artifact::{self, ConfigKey, Meta};
use crate::{CliResult, Direction, Failure, GlobalArgs, CorrespondArgs, EXIT_OK};

/// Backward input triple; a full quadruplet file also parses (its δ is not
/// used by the map).
#[derive(Deserialize)]
struct Triple {
    a: f64,
    b: f64,
    #[serde(rename = "M")]
    spectral: PositiveMeasure,
    #[serde(default)]
    #[allow(dead_code)]
    delta: Option<f64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CorrespondArtifact {
    meta: Meta,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
    result: CorrespondenceResult,
}

pub fn run(args: &CorrespondArgs, global: &GlobalArgs) -> CliResult {
    let (direction, result, input_bytes) = match args.direction {
        Direction::Forward => {
            let (pair, bytes): (ThorinPair, _) = artifact::read_input(&args.input)?;
            ("forward", forward(&pair)?, bytes)
        }
        Direction::Backward => {
            let (triple, bytes): (Triple, _) = artifact::read_input(&args.input)?;
            ("backward", backward(triple.a, triple.b, &triple.spectral)?, bytes)
        }
    };

    if let Some(tol) = global.tol {
        if !(result.identity_residual <= tol) {
            return Err(Failure::invariant(format!(
                "identity residual {:.3e} exceeds the requested tolerance {tol:.0e}",
                result.identity_residual
            )));
        }
    }

    // M ≡ 0 means the mechanism is a pure square-root diffusion.
    let note = if result.spectral.is_zero() { Some("CIR") } else { None };

    let meta = ConfigKey::new("correspond")
        .arg("direction", direction)
        .file("input", &input_bytes)
        .opt("tol", global.tol)
        .arg("seed", global.seed)
        .finish();

    // The density dump describes the measure the command produced: M going
    // forward, m going backward.
    let produced = match args.direction {
        Direction::Forward => result.spectral.clone(),
        Direction::Backward => result.m.clone(),
    };

    let art = CorrespondArtifact { meta: meta.clone(), note, result };
    artifact::write_json(&global.out, "correspondence.json", &art)?;
    artifact::write_csv(
        &global.out,
        "density.csv",
        &meta,
        "x,density,atom_mass",
        artifact::density_csv_rows(&produced),
    )?;

    if global.json {
        println!("{}", artifact::render_json(&art)?);
    }
    Ok(EXIT_OK)
}
