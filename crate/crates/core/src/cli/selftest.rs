//! Invariant checks behind `selftest`, and re-validation of saved
//! `determinant` documents.

use std::path::Path;

use serde_json::{json, Value};

use super::commands::Resolved;
use super::output::Document;
use super::CliError;
use crate::dilute_gas;
use crate::fluctuations;
use crate::instanton::{self, closed_form_instanton, numeric_instanton, zero_mode};
use crate::potentials::PotentialModel;
use crate::spectral_oracle::{self, GridSpec};

type Measure = Result<f64, String>;

struct Check {
    name: &'static str,
    limit: f64,
    measure: fn() -> Measure,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn harmonic_propagator() -> Measure {
    let mut worst = 0.0f64;
    for &nu in &[0.5, 1.0, 2.0] {
        for &t in &[5.0, 10.0, 20.0] {
            let gy = fluctuations::harmonic_propagator_gy(nu, t).map_err(text)?;
            let exact = fluctuations::harmonic_propagator(nu, t).map_err(text)?;
            worst = worst.max(rel(gy, exact));
        }
    }
    Ok(worst)
}

fn numeric_profile() -> Measure {
    let model = PotentialModel::triple_well(1.0).map_err(text)?;
    let numeric = numeric_instanton(&model, 0.0, 1.0, 0.0, 1e-12).map_err(text)?;
    let closed = closed_form_instanton(1.0, 0.0).map_err(text)?;
    Ok((0..=400)
        .map(|i| -20.0 + 0.1 * i as f64)
        .map(|t| (numeric.position(t) - closed.position(t)).abs())
        .fold(0.0, f64::max))
}

fn action_value() -> Measure {
    let model = PotentialModel::triple_well(1.0).map_err(text)?;
    let numeric = numeric_instanton(&model, 0.0, 1.0, 0.0, 1e-12).map_err(text)?;
    Ok((numeric.action() - 0.25).abs())
}

fn zero_mode_norm() -> Measure {
    let zm = zero_mode(&closed_form_instanton(1.0, 0.0).map_err(text)?).map_err(text)?;
    Ok((zm.norm_check() - 1.0).abs())
}

fn zero_mode_residual() -> Measure {
    let zm = zero_mode(&closed_form_instanton(1.0, 0.0).map_err(text)?).map_err(text)?;
    Ok(zm.stability_residual(1e-3, 10.0))
}

fn tail_constants() -> Measure {
    let mut worst = 0.0f64;
    for &omega in &[1.0, 4.0] {
        let model = PotentialModel::triple_well(omega).map_err(text)?;
        let kink = numeric_instanton(&model, 0.0, 1.0, 0.0, 1e-12).map_err(text)?;
        let (d, c) = instanton::fit_asymptotic_constants(&kink).map_err(text)?;
        let expected = 2.0 * omega.sqrt();
        worst = worst.max((d - expected).abs()).max((c - expected).abs());
    }
    Ok(worst)
}

fn walk_counts() -> Measure {
    let mut mismatches = 0u32;
    for k in 0..=15usize {
        let n = dilute_gas::count_configurations(k, 0, 1)
            .map_err(text)?
            .count;
        let expected = if k % 2 == 1 { 1u64 << ((k - 1) / 2) } else { 0 };
        if n != expected {
            mismatches += 1;
        }
    }
    Ok(mismatches as f64)
}

fn odd_series() -> Measure {
    let mut worst = 0.0f64;
    for &x in &[0.5, 2.0, 5.0, 10.0] {
        let series = dilute_gas::ln_odd_series(x, Some(30)).exp();
        worst = worst.max(rel(series, x.sinh()));
    }
    Ok(worst)
}

fn predicted_triplet() -> Measure {
    let s = dilute_gas::predicted_spectrum(10.0).map_err(text)?;
    let d = (8.0 / (3.0 * std::f64::consts::PI)).sqrt() * 2.5f64.sqrt() * (-2.5f64).exp();
    let expected = [7.5 - 10.0 * d, 7.5, 7.5 + 10.0 * d];
    let asymmetry = ((s.levels[2] - s.levels[1]) - (s.levels[1] - s.levels[0])).abs();
    Ok((0..3)
        .map(|i| (s.levels[i] - expected[i]).abs())
        .fold(asymmetry, f64::max))
}

fn harmonic_oracle() -> Measure {
    let model = PotentialModel::harmonic(1.0).map_err(text)?;
    let s = spectral_oracle::diagonalize(&model, GridSpec::new(10.0, 2000), 5).map_err(text)?;
    Ok(s.energies
        .iter()
        .enumerate()
        .map(|(n, e)| (e - (n as f64 + 0.5)).abs())
        .fold(0.0, f64::max))
}

fn log_slope() -> Measure {
    let mut worst = 0.0f64;
    for &omega in &[8.0, 12.0, 16.0, 20.0] {
        let numeric = spectral_oracle::predicted_log_slope(omega).map_err(text)?;
        worst = worst.max((numeric - spectral_oracle::predicted_log_slope_analytic(omega)).abs());
    }
    Ok(worst)
}

fn determinant_identities() -> Measure {
    let r = fluctuations::determinant_report(10.0, 3.0, None).map_err(text)?;
    let worst = identity_errors(&to_fields(&serde_json::to_value(&r).map_err(text)?)?)?
        .into_iter()
        .map(|(_, e)| e)
        .fold(0.0, f64::max);
    Ok(worst)
}

const CHECKS: &[Check] = &[
    Check {
        name: "harmonic_propagator_gy",
        limit: 1e-8,
        measure: harmonic_propagator,
    },
    Check {
        name: "numeric_profile_sup_error",
        limit: 1e-8,
        measure: numeric_profile,
    },
    Check {
        name: "action_quadrature",
        limit: 1e-10,
        measure: action_value,
    },
    Check {
        name: "zero_mode_norm",
        limit: 1e-8,
        measure: zero_mode_norm,
    },
    Check {
        name: "zero_mode_stability_residual",
        limit: 1e-6,
        measure: zero_mode_residual,
    },
    Check {
        name: "tail_constants_fit",
        limit: 1e-6,
        measure: tail_constants,
    },
    Check {
        name: "walk_counts",
        limit: 0.5,
        measure: walk_counts,
    },
    Check {
        name: "odd_series_vs_sinh",
        limit: 1e-12,
        measure: odd_series,
    },
    Check {
        name: "predicted_triplet",
        limit: 5e-5,
        measure: predicted_triplet,
    },
    Check {
        name: "harmonic_oracle_levels",
        limit: 1e-6,
        measure: harmonic_oracle,
    },
    Check {
        name: "log_slope",
        limit: 1e-10,
        measure: log_slope,
    },
    Check {
        name: "determinant_identities",
        limit: 1e-12,
        measure: determinant_identities,
    },
];

/// Numeric fields of a `DeterminantReport` object.
struct Fields(serde_json::Map<String, Value>);

impl Fields {
    fn get(&self, key: &str) -> Result<f64, String> {
        self.0
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| format!("missing numeric field '{key}'"))
    }
}

fn to_fields(v: &Value) -> Result<Fields, String> {
    match v {
        Value::Object(m) => Ok(Fields(m.clone())),
        _ => Err("result is not an object".into()),
    }
}

/// Relative error of each identity that ties the report's fields together.
fn identity_errors(f: &Fields) -> Result<Vec<(&'static str, f64)>, String> {
    let omega = f.get("omega")?;
    let big_t = f.get("big_t")?;
    let d = f.get("amplitude_constant")?;
    let action = f.get("action")?;
    let raw = f.get("raw_ratio")?;
    let lambda = f.get("lowest_eigenvalue")?;
    let reduced = f.get("reduced_ratio")?;
    let jacobian = f.get("jacobian")?;
    let nu = f.get("nu")?;
    let reference = f.get("reference_value")?;
    let one = f.get("one_instanton_weight")?;
    Ok(vec![
        (
            "reduced_ratio*lowest_eigenvalue=raw_ratio",
            rel(reduced * lambda, raw),
        ),
        (
            "gy_value/reference_value=raw_ratio",
            rel(f.get("gy_value")? / reference, raw),
        ),
        (
            "reference_value=sinh(nu*T)/nu",
            rel(reference, (nu * big_t).sinh() / nu),
        ),
        (
            "lowest_eigenvalue=2*omega*D^2*exp(-omega*T)",
            rel(lambda, 2.0 * omega * d * d * (-omega * big_t).exp()),
        ),
        ("action=omega/4", rel(action, 0.25 * omega)),
        (
            "amplitude_constant=2*sqrt(omega)",
            rel(d, 2.0 * omega.sqrt()),
        ),
        (
            "jacobian=sqrt(action/2pi)",
            rel(jacobian, (action / (2.0 * std::f64::consts::PI)).sqrt()),
        ),
        (
            "gy_weight=jacobian/sqrt(reduced_ratio)",
            rel(f.get("gy_weight")?, jacobian / reduced.sqrt()),
        ),
        (
            "one_instanton_weight=sqrt(4/3pi)*sqrt(S)*omega",
            rel(one, fluctuations::one_instanton_weight(omega)),
        ),
        (
            "density_weight=sqrt(2)*one_instanton_weight",
            rel(f.get("density_weight")?, std::f64::consts::SQRT_2 * one),
        ),
    ])
}

/// Identities hold to this relative error in any written report.
const FILE_TOLERANCE: f64 = 1e-12;

pub(super) fn run(
    _cfg: &Resolved,
    doc: &mut Document,
    check_file: Option<&Path>,
) -> Result<(), CliError> {
    let (records, failed) = match check_file {
        Some(path) => {
            doc.parameters
                .insert("check_file".into(), json!(path.display().to_string()));
            check_saved_report(path)?
        }
        None => run_checks(),
    };
    doc.result = json!({
        "checks": records,
        "passed": failed == 0,
        "failures": failed,
    });
    if failed > 0 {
        return Err(CliError::Numeric {
            operation: "selftest",
            variant: "CheckFailed".into(),
            message: format!("{failed} check(s) failed"),
        });
    }
    Ok(())
}

fn run_checks() -> (Vec<Value>, usize) {
    let mut failed = 0;
    let records = CHECKS
        .iter()
        .map(|c| {
            let outcome = (c.measure)();
            let passed = matches!(outcome, Ok(v) if v <= c.limit);
            if !passed {
                failed += 1;
            }
            match outcome {
                Ok(v) => json!({"name": c.name, "passed": passed, "measured": v, "limit": c.limit}),
                Err(e) => json!({"name": c.name, "passed": false, "error": e, "limit": c.limit}),
            }
        })
        .collect();
    (records, failed)
}

fn check_saved_report(path: &Path) -> Result<(Vec<Value>, usize), CliError> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let invalid = |m: String| CliError::Validation(format!("{}: {m}", path.display()));
    let saved: Value =
        serde_json::from_str(&content).map_err(|e| invalid(format!("not JSON: {e}")))?;
    if saved.get("command").and_then(Value::as_str) != Some("determinant") {
        return Err(invalid("not a determinant document".into()));
    }
    if saved.get("schema_version").and_then(Value::as_u64)
        != Some(super::output::SCHEMA_VERSION as u64)
    {
        return Err(invalid("unsupported schema_version".into()));
    }
    let fields = to_fields(&saved["result"]).map_err(invalid)?;
    let errors = identity_errors(&fields).map_err(invalid)?;

    let mut failed = 0;
    let mut records: Vec<Value> = errors
        .into_iter()
        .map(|(name, e)| {
            let passed = e <= FILE_TOLERANCE;
            if !passed {
                failed += 1;
            }
            json!({"name": name, "passed": passed, "measured": e, "limit": FILE_TOLERANCE})
        })
        .collect();

    // recompute from the recorded inputs: every field must reproduce
    let (omega, big_t, nu) = (
        fields.get("omega").map_err(invalid)?,
        fields.get("big_t").map_err(invalid)?,
        fields.get("nu").map_err(invalid)?,
    );
    let fresh = fluctuations::determinant_report(omega, big_t, Some(nu))
        .map_err(CliError::numeric("determinant_report"))?;
    let fresh =
        to_fields(&serde_json::to_value(&fresh).expect("report serializes")).map_err(invalid)?;
    let mut worst = 0.0f64;
    for key in fresh.0.keys() {
        let (a, b) = (
            fields.get(key).map_err(invalid)?,
            fresh.get(key).map_err(invalid)?,
        );
        worst = worst.max(if b == 0.0 { a.abs() } else { rel(a, b) });
    }
    let passed = worst <= FILE_TOLERANCE;
    if !passed {
        failed += 1;
    }
    records.push(json!({"name": "recomputed_report", "passed": passed, "measured": worst, "limit": FILE_TOLERANCE}));
    Ok((records, failed))
}
