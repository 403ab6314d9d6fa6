use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::output::{to_value, Cell, Document, Table};
use super::{selftest, Cli, CliError, Command, GlobalArgs, OmegaRange};
use crate::dilute_gas::{self, DiluteGasSpectrum};
use crate::fluctuations::{self, StabilityOperator};
use crate::instanton::{self, closed_form_instanton, numeric_instanton};
use crate::potentials::{PotentialModel, TRIPLE_WELL_NORMALIZATION};
use crate::spectral_oracle::{self, GridSpec, Parity};

/// Quadrature tolerance for numerically built profiles.
const PROFILE_TOLERANCE: f64 = 1e-12;

/// Global flags with every default filled in.
#[derive(Debug, Clone, Copy)]
pub(super) struct Resolved {
    pub omega: f64,
    pub big_t: f64,
    pub grid: GridSpec,
    pub nu: f64,
}

impl Resolved {
    fn from_args(g: &GlobalArgs) -> Result<Self, CliError> {
        positive("omega", g.omega)?;
        let big_t = positive("T", g.big_t.unwrap_or(30.0 / g.omega))?;
        let half_width = positive("L", g.half_width)?;
        if g.points == 0 {
            return Err(CliError::Validation("N must be positive (got 0)".into()));
        }
        let nu = positive("nu", g.nu.unwrap_or(1.5 * g.omega))?;
        Ok(Resolved {
            omega: g.omega,
            big_t,
            grid: GridSpec::new(half_width, g.points),
            nu,
        })
    }

    fn parameters(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("omega".into(), json!(self.omega));
        m.insert("T".into(), json!(self.big_t));
        m.insert("L".into(), json!(self.grid.half_width));
        m.insert("N".into(), json!(self.grid.points));
        m.insert("nu".into(), json!(self.nu));
        m
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Validation(format!(
            "{name} must be positive and finite (got {v})"
        )))
    }
}

pub(super) fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = Resolved::from_args(&cli.global)?;
    let mut doc = Document {
        command: cli.command.name(),
        normalization: TRIPLE_WELL_NORMALIZATION,
        parameters: cfg.parameters(),
        result: Value::Null,
        table: None,
    };
    let outcome = match &cli.command {
        Command::Profile {
            tau_max,
            samples,
            numeric,
        } => profile(&cfg, &mut doc, *tau_max, *samples, *numeric),
        Command::Action => action(&cfg, &mut doc),
        Command::Determinant => determinant(&cfg, &mut doc),
        Command::Density { sweep } => density(&cfg, &mut doc, *sweep),
        Command::Spectrum => spectrum(&cfg, &mut doc),
        Command::Oracle { states } => oracle(&cfg, &mut doc, *states),
        Command::Compare => compare(&cfg, &mut doc),
        Command::Sweep { omega_range } => sweep(&cfg, &mut doc, *omega_range),
        Command::Selftest { check_file } => selftest::run(&cfg, &mut doc, check_file.as_deref()),
    };
    // a failed selftest still emits its report
    match outcome {
        Ok(()) => emit(cli, &doc),
        Err(
            e @ CliError::Numeric {
                operation: "selftest",
                ..
            },
        ) => {
            emit(cli, &doc)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn emit(cli: &Cli, doc: &Document) -> Result<(), CliError> {
    let text = doc.render(cli.global.format);
    match &cli.global.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("cannot write to standard output: {e}")))
        }
    }
}

fn triple_well(omega: f64) -> Result<PotentialModel, CliError> {
    PotentialModel::triple_well(omega).map_err(CliError::numeric("potential"))
}

fn profile(
    cfg: &Resolved,
    doc: &mut Document,
    tau_max: Option<f64>,
    samples: usize,
    numeric: bool,
) -> Result<(), CliError> {
    let tau_max = positive("tau-max", tau_max.unwrap_or(10.0 / cfg.omega))?;
    if samples < 2 {
        return Err(CliError::Validation(format!(
            "samples must be at least 2 (got {samples})"
        )));
    }
    let kink = if numeric {
        let model = triple_well(cfg.omega)?;
        numeric_instanton(&model, 0.0, 1.0, 0.0, PROFILE_TOLERANCE)
            .map_err(CliError::numeric("numeric_instanton"))?
    } else {
        closed_form_instanton(cfg.omega, 0.0).map_err(CliError::numeric("closed_form_instanton"))?
    };
    doc.parameters.insert("tau_max".into(), json!(tau_max));
    doc.parameters.insert("samples".into(), json!(samples));
    doc.parameters.insert("numeric".into(), json!(numeric));

    let mut tau = Vec::with_capacity(samples);
    let mut x = Vec::with_capacity(samples);
    let mut v = Vec::with_capacity(samples);
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        // symmetric grid: the middle sample sits exactly on tau = 0
        let t = tau_max * (2.0 * i as f64 - (samples - 1) as f64) / (samples - 1) as f64;
        let p = kink.point(t);
        rows.push(vec![Cell::Num(t), Cell::Num(p.x), Cell::Num(p.velocity())]);
        tau.push(t);
        x.push(p.x);
        v.push(p.velocity());
    }
    doc.result = json!({
        "from_well": 0.0,
        "to_well": 1.0,
        "center": 0.0,
        "action": kink.action(),
        "tau": tau,
        "x": x,
        "dxdtau": v,
    });
    doc.table = Some(Table {
        header: vec!["tau", "x", "dxdtau"],
        rows,
    });
    Ok(())
}

fn action(cfg: &Resolved, doc: &mut Document) -> Result<(), CliError> {
    let model = triple_well(cfg.omega)?;
    let closed = closed_form_instanton(cfg.omega, 0.0)
        .map_err(CliError::numeric("closed_form_instanton"))?;
    let numeric = numeric_instanton(&model, 0.0, 1.0, 0.0, PROFILE_TOLERANCE)
        .map_err(CliError::numeric("numeric_instanton"))?;
    let time_integral = closed
        .action_time_integral(1e-12)
        .map_err(CliError::numeric("action_time_integral"))?;
    let (d, c) = instanton::asymptotic_constants(&closed)
        .map_err(CliError::numeric("asymptotic_constants"))?;
    let (d_fit, c_fit) = instanton::asymptotic_constants(&numeric)
        .map_err(CliError::numeric("fit_asymptotic_constants"))?;
    doc.result = json!({
        "action_closed_form": closed.action(),
        "action_position_integral": numeric.action(),
        "action_time_integral": time_integral,
        "decay_rates": [closed.decay_rates().0, closed.decay_rates().1],
        "amplitude_constants": [d, c],
        "amplitude_constants_fitted": [d_fit, c_fit],
    });
    Ok(())
}

fn determinant(cfg: &Resolved, doc: &mut Document) -> Result<(), CliError> {
    let report = fluctuations::determinant_report(cfg.omega, cfg.big_t, Some(cfg.nu))
        .map_err(CliError::numeric("determinant_report"))?;
    let mut result = to_value(&report);
    let mut warnings: Vec<String> = Vec::new();
    // brute-force cross-check of the near-zero eigenvalue; failures are
    // reported rather than fatal, the report itself does not depend on it
    let kink = closed_form_instanton(cfg.omega, 0.0)
        .map_err(CliError::numeric("closed_form_instanton"))?;
    let op = StabilityOperator::instanton(&kink, cfg.big_t)
        .map_err(CliError::numeric("stability_operator"))?;
    let numeric = match fluctuations::lowest_eigenvalue_numeric(&op, cfg.grid.points) {
        Ok(n) => json!({
            "value": n.value,
            "error_estimate": n.error_estimate,
            "relative_difference": n.value / report.lowest_eigenvalue - 1.0,
        }),
        Err(e) => {
            warnings.push(format!("lowest_eigenvalue_numeric: {e}"));
            Value::Null
        }
    };
    if let Value::Object(map) = &mut result {
        map.insert("lowest_eigenvalue_numeric".into(), numeric);
        map.insert("warnings".into(), json!(warnings));
    }
    doc.result = result;
    Ok(())
}

fn spectrum_row(s: &DiluteGasSpectrum) -> Vec<Cell> {
    vec![
        Cell::Num(s.omega),
        Cell::Num(s.action),
        Cell::Num(s.density),
        Cell::Num(s.levels[0]),
        Cell::Num(s.levels[1]),
        Cell::Num(s.levels[2]),
    ]
}

fn density(cfg: &Resolved, doc: &mut Document, sweep: Option<OmegaRange>) -> Result<(), CliError> {
    let Some(range) = sweep else {
        let s = dilute_gas::predicted_spectrum(cfg.omega)
            .map_err(CliError::numeric("predicted_spectrum"))?;
        doc.result = json!({
            "action": s.action,
            "density": s.density,
            "ln_density": dilute_gas::ln_instanton_density(cfg.omega),
            "one_instanton_weight": dilute_gas::one_instanton_weight(cfg.omega),
            "mean_separation": s.mean_separation,
            "dilute": s.dilute,
        });
        return Ok(());
    };
    doc.parameters
        .insert("sweep".into(), json!(range.to_string()));
    let spectra = range
        .values()
        .into_iter()
        .map(dilute_gas::predicted_spectrum)
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::numeric("predicted_spectrum"))?;
    doc.table = Some(Table {
        header: vec!["omega", "action", "density", "E0", "E1", "E2"],
        rows: spectra.iter().map(spectrum_row).collect(),
    });
    doc.result = json!({ "rows": to_value(&spectra) });
    Ok(())
}

fn spectrum(cfg: &Resolved, doc: &mut Document) -> Result<(), CliError> {
    let s = dilute_gas::predicted_spectrum(cfg.omega)
        .map_err(CliError::numeric("predicted_spectrum"))?;
    doc.result = to_value(&s);
    Ok(())
}

fn oracle(cfg: &Resolved, doc: &mut Document, states: usize) -> Result<(), CliError> {
    let model = triple_well(cfg.omega)?;
    doc.parameters.insert("states".into(), json!(states));
    let s = spectral_oracle::diagonalize(&model, cfg.grid, states)
        .map_err(CliError::numeric("diagonalize"))?;
    doc.result = to_value(&s);
    Ok(())
}

fn parity_text(p: Parity) -> Cell {
    Cell::Text(match p {
        Parity::Even => "even".into(),
        Parity::Odd => "odd".into(),
    })
}

fn compare(cfg: &Resolved, doc: &mut Document) -> Result<(), CliError> {
    let t = spectral_oracle::compare_report(cfg.omega, cfg.grid)
        .map_err(CliError::numeric("compare_report"))?;
    let rows = (0..3)
        .map(|i| {
            vec![
                Cell::Num(t.omega),
                Cell::Int(i as i64),
                Cell::Num(t.exact_levels[i]),
                parity_text(t.exact_parities[i]),
                Cell::Num(t.predicted_levels[i]),
                Cell::Num(t.differences[i]),
            ]
        })
        .collect();
    doc.table = Some(Table {
        header: vec![
            "omega",
            "level",
            "exact",
            "parity",
            "predicted",
            "difference",
        ],
        rows,
    });
    doc.result = to_value(&t);
    Ok(())
}

fn sweep(cfg: &Resolved, doc: &mut Document, range: OmegaRange) -> Result<(), CliError> {
    doc.parameters
        .insert("omega_range".into(), json!(range.to_string()));
    // each point is independent; collect() keeps ascending omega order
    let points = range
        .values()
        .into_par_iter()
        .map(|omega| -> Result<_, CliError> {
            let predicted = dilute_gas::predicted_spectrum(omega)
                .map_err(CliError::numeric("predicted_spectrum"))?;
            let model = triple_well(omega)?;
            let exact = spectral_oracle::diagonalize(&model, cfg.grid, 3)
                .map_err(CliError::numeric("diagonalize"))?;
            Ok((predicted, exact))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(points.len());
    let mut records = Vec::with_capacity(points.len());
    for (p, e) in &points {
        let mut row = vec![
            Cell::Num(p.omega),
            Cell::Num(p.action),
            Cell::Num(p.density),
            Cell::Text(p.dilute.to_string()),
        ];
        row.extend(p.levels.iter().map(|&x| Cell::Num(x)));
        row.extend(e.energies.iter().map(|&x| Cell::Num(x)));
        row.extend(e.parities.iter().map(|&q| parity_text(q)));
        rows.push(row);
        records.push(json!({
            "omega": p.omega,
            "action": p.action,
            "density": p.density,
            "dilute": p.dilute,
            "predicted_levels": p.levels,
            "exact_levels": e.energies,
            "exact_parities": e.parities,
        }));
    }
    doc.table = Some(Table {
        header: vec![
            "omega",
            "action",
            "density",
            "dilute",
            "predicted_E0",
            "predicted_E1",
            "predicted_E2",
            "exact_E0",
            "exact_E1",
            "exact_E2",
            "parity0",
            "parity1",
            "parity2",
        ],
        rows,
    });
    doc.result = json!({ "rows": records });
    Ok(())
}
