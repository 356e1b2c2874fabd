//! `boolean`: convolution, convolution powers, and correspondence fixed
//! points. The result measure is written in the standard schema (with a
//! `meta` sibling key other commands ignore on read-back) next to a residual
//! report; residuals past tolerance are consistency failures.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use ggc_cbi::boolean::{
    boolean_convolve, boolean_cumulant, boolean_power, complex_probes, fixed_point_measure,
};
use ggc_cbi::correspondence::forward;
use ggc_cbi::measure::{PositiveMeasure, ThorinPair};

use crate::artifact::{self, ConfigKey, Meta};
use crate::{BooleanArgs, BooleanOp, CliResult, Failure, GlobalArgs, EXIT_OK};

/// Probe-set residual gate defaults: the cumulant identities are exact
/// analytically, so only evaluation noise accumulates.
const CONV_TOL: f64 = 1e-10;
const FIXED_POINT_TOL: f64 = 1e-8;

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BooleanArtifact {
    meta: Meta,
    op: &'static str,
    residual: f64,
    tolerance: f64,
    probes: usize,
}

/// The result measure in its ordinary schema plus the provenance block.
fn measure_with_meta<T: Serialize>(value: &T, meta: &Meta) -> Result<Value, Failure> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| Failure::numeric(format!("serialization failed: {e}")))?;
    let map = v
        .as_object_mut()
        .ok_or_else(|| Failure::numeric("measure did not serialize to an object"))?;
    map.insert(
        "meta".into(),
        serde_json::to_value(meta)
            .map_err(|e| Failure::numeric(format!("serialization failed: {e}")))?,
    );
    Ok(v)
}

pub fn run(args: &BooleanArgs, global: &GlobalArgs) -> CliResult {
    let probes = complex_probes();
    let (op, meta, residual, tolerance, measure_json) = match &args.op {
        BooleanOp::Conv { m1, m2 } => {
            let (first, b1): (PositiveMeasure, _) = artifact::read_input(m1)?;
            let (second, b2): (PositiveMeasure, _) = artifact::read_input(m2)?;
            let result = boolean_convolve(&first, &second)?;
            let mut worst: f64 = 0.0;
            for &z in &probes {
                let lhs = boolean_cumulant(&result, z)?;
                let rhs = boolean_cumulant(&first, z)? + boolean_cumulant(&second, z)?;
                worst = worst.max((lhs - rhs).norm());
            }
            let meta = ConfigKey::new("boolean")
                .arg("op", "conv")
                .file("m1", &b1)
                .file("m2", &b2)
                .opt("tol", global.tol)
                .arg("seed", global.seed)
                .finish();
            let json = measure_with_meta(&result, &meta)?;
            ("conv", meta, worst, global.tol.unwrap_or(CONV_TOL), json)
        }
        BooleanOp::Pow { m, t } => {
            let (base, b): (PositiveMeasure, _) = artifact::read_input(m)?;
            let result = boolean_power(&base, *t)?;
            let mut worst: f64 = 0.0;
            for &z in &probes {
                let lhs = boolean_cumulant(&result, z)?;
                let rhs = boolean_cumulant(&base, z)? * *t;
                worst = worst.max((lhs - rhs).norm());
            }
            let meta = ConfigKey::new("boolean")
                .arg("op", "pow")
                .file("m", &b)
                .arg("t", *t)
                .opt("tol", global.tol)
                .arg("seed", global.seed)
                .finish();
            let json = measure_with_meta(&result, &meta)?;
            ("pow", meta, worst, global.tol.unwrap_or(CONV_TOL), json)
        }
        BooleanOp::FixedPoint { q, a, b } => {
            let pair = fixed_point_measure(*q, *a, *b)?;
            let residual = fixed_point_residual(&pair, *q, *a, *b, &probes)?;
            // The produced pair must also close the correspondence loop with
            // M = m; the forward run certifies its own identity residual.
            forward(&pair)?;
            let meta = ConfigKey::new("boolean")
                .arg("op", "fixed-point")
                .arg("q", *q)
                .arg("a", *a)
                .arg("b", *b)
                .opt("tol", global.tol)
                .arg("seed", global.seed)
                .finish();
            let json = measure_with_meta(&pair, &meta)?;
            ("fixed-point", meta, residual, global.tol.unwrap_or(FIXED_POINT_TOL), json)
        }
    };

    if !(residual <= tolerance) {
        return Err(Failure::numeric(format!(
            "{op} residual {residual:.3e} exceeds the {tolerance:.0e} tolerance"
        )));
    }

    artifact::write_json(&global.out, "measure.json", &measure_json)?;
    let art = BooleanArtifact { meta, op, residual, tolerance, probes: probes.len() };
    artifact::write_json(&global.out, "boolean.json", &art)?;

    if global.json {
        println!("{}", artifact::render_json(&art)?);
    }
    Ok(EXIT_OK)
}

/// Defect of G = q + 1/(az − b − zG) at the probe points, G being the
/// transform of the fixed-point Thorin measure.
fn fixed_point_residual(
    pair: &ThorinPair,
    q: f64,
    a: f64,
    b: f64,
    probes: &[Complex64],
) -> Result<f64, Failure> {
    let mut worst: f64 = 0.0;
    for &z in probes {
        let g = pair.m().stieltjes(z)?;
        let rhs = q + 1.0 / (a * z - b - z * g);
        worst = worst.max((g - rhs).norm());
    }
    Ok(worst)
}
