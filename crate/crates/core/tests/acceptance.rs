//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//!     cargo test -p instanton --test acceptance

use std::f64::consts::PI;
use std::process::Command;

use instanton::dilute_gas::{self, count_configurations, extract_energies, transition_amplitude};
use instanton::fluctuations::{
    gy_terminal, harmonic_propagator_gy, lowest_eigenvalue_numeric, reference_terminal,
    StabilityOperator,
};
use instanton::instanton::{
    closed_form_instanton, fit_asymptotic_constants, numeric_instanton, zero_mode,
};
use instanton::spectral_oracle::{
    compare_report, diagonalize, predicted_log_slope, stability_eigenproduct_ratio, GridSpec,
    Parity,
};
use instanton::PotentialModel;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `(ν/π)^{1/2} (2 sinh νT)^{-1/2}`.
fn oscillator_amplitude(nu: f64, t: f64) -> f64 {
    (nu / PI).sqrt() / (2.0 * (nu * t).sinh()).sqrt()
}

fn harmonic_propagator() -> Outcome {
    let mut worst = 0.0f64;
    for &nu in &[0.5, 1.0, 2.0] {
        for &t in &[5.0, 10.0, 20.0] {
            let gy = harmonic_propagator_gy(nu, t).map_err(|e| e.to_string())?;
            worst = worst.max(rel(gy, oscillator_amplitude(nu, t)));
        }
    }
    let sample = harmonic_propagator_gy(1.0, 10.0).map_err(|e| e.to_string())?;
    ensure(
        worst < 1e-8 && (sample - 3.8015e-3).abs() < 5e-8,
        format!("max rel error {worst:.2e} (< 1e-8); nu=1,T=10 -> {sample:.5e}"),
    )
}

fn instanton_exactness() -> Outcome {
    let model = PotentialModel::triple_well(1.0).map_err(|e| e.to_string())?;
    let kink = numeric_instanton(&model, 0.0, 1.0, 0.0, 1e-12).map_err(|e| e.to_string())?;
    // x² = 1/(1 + e^{-2τ}) at ω = 1
    let sup = (0..=4000)
        .map(|i| -20.0 + 0.01 * i as f64)
        .map(|t| (kink.position(t) - (1.0 / (1.0 + (-2.0 * t).exp())).sqrt()).abs())
        .fold(0.0, f64::max);
    let action_error = (kink.action() - 0.25).abs();
    ensure(
        sup < 1e-8 && action_error < 1e-10,
        format!("sup error {sup:.2e} (< 1e-8); |S - 1/4| = {action_error:.2e} (< 1e-10)"),
    )
}

fn zero_mode_and_tails() -> Outcome {
    let zm = zero_mode(&closed_form_instanton(1.0, 0.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let norm = (zm.norm_check() - 1.0).abs();
    let residual = zm.stability_residual(1e-3, 10.0);
    let mut tail = 0.0f64;
    for &omega in &[1.0, 4.0] {
        let model = PotentialModel::triple_well(omega).map_err(|e| e.to_string())?;
        let kink = numeric_instanton(&model, 0.0, 1.0, 0.0, 1e-12).map_err(|e| e.to_string())?;
        let (d, c) = fit_asymptotic_constants(&kink).map_err(|e| e.to_string())?;
        let expected = 2.0 * omega.sqrt();
        tail = tail.max((d - expected).abs()).max((c - expected).abs());
    }
    ensure(
        norm < 1e-8 && residual < 1e-6 && tail < 1e-6,
        format!(
            "norm error {norm:.2e} (< 1e-8); residual {residual:.2e} (< 1e-6); (D, C) error {tail:.2e} (< 1e-6)"
        ),
    )
}

fn lowest_eigenvalue() -> Outcome {
    let kink = closed_form_instanton(1.0, 0.0).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for &t in &[8.0, 10.0, 12.0] {
        let op = StabilityOperator::instanton(&kink, t).map_err(|e| e.to_string())?;
        let numeric = lowest_eigenvalue_numeric(&op, 4000).map_err(|e| e.to_string())?;
        let expected = 8.0 * (-t as f64).exp();
        let r = numeric.value / expected - 1.0;
        ok &= r.abs() < 0.05;
        parts.push(format!(
            "T={t}: {:.4e} vs {expected:.4e} ({:+.2}%)",
            numeric.value,
            100.0 * r
        ));
    }
    ensure(ok, parts.join("; "))
}

fn gy_versus_eigenproduct() -> Outcome {
    let (omega, t) = (1.0, 10.0);
    let kink = closed_form_instanton(omega, 0.0).map_err(|e| e.to_string())?;
    let op = StabilityOperator::instanton(&kink, t).map_err(|e| e.to_string())?;
    let gy = gy_terminal(&op).map_err(|e| e.to_string())?;
    let reference = reference_terminal(1.5 * omega, t).map_err(|e| e.to_string())?;
    let gy_ratio = (gy.ln() - reference.ln()).exp();
    let brute = stability_eigenproduct_ratio(omega, t, 2000).map_err(|e| e.to_string())?;
    let r = rel(brute.extrapolated(), gy_ratio);
    ensure(
        r < 1e-3,
        format!(
            "GY {gy_ratio:.8e}, eigenproduct {:.8e}: rel {r:.2e} (< 1e-3; unextrapolated rel {:.2e})",
            brute.extrapolated(),
            rel(brute.raw(), gy_ratio)
        ),
    )
}

fn combinatorics() -> Outcome {
    let mut bad = Vec::new();
    for k in 0..=15usize {
        let n = count_configurations(k, 0, 1)
            .map_err(|e| e.to_string())?
            .count;
        let expected = if k % 2 == 1 {
            2u64.pow(((k - 1) / 2) as u32)
        } else {
            0
        };
        if n != expected {
            bad.push(format!("k={k}: {n} != {expected}"));
        }
    }
    ensure(
        bad.is_empty(),
        if bad.is_empty() {
            "k = 0..15 all match".into()
        } else {
            bad.join(", ")
        },
    )
}

fn dilute_gas_closed_form() -> Outcome {
    let mut series = 0.0f64;
    // ωTd from 0.1 to 10 through the physical amplitude's argument
    for &x in &[0.1, 0.5, 1.0, 2.0, 5.0, 7.5, 10.0] {
        series = series.max(rel(dilute_gas::ln_odd_series(x, Some(30)).exp(), x.sinh()));
    }
    let mut round_trip = 0.0f64;
    for &omega in &[4.0, 10.0, 20.0] {
        let predicted = dilute_gas::predicted_spectrum(omega).map_err(|e| e.to_string())?;
        let fit = extract_energies(
            |t| transition_amplitude(omega, t, None).unwrap().ln(),
            &[5.0, 10.0, 15.0, 20.0],
        )
        .map_err(|e| e.to_string())?;
        round_trip = round_trip
            .max(rel(fit.low, predicted.levels[0]))
            .max(rel(fit.high, predicted.levels[2]));
    }
    ensure(
        series < 1e-12 && round_trip < 1e-6,
        format!(
            "series rel {series:.2e} (< 1e-12); energy round trip rel {round_trip:.2e} (< 1e-6)"
        ),
    )
}

fn spectrum_formula() -> Outcome {
    let s = dilute_gas::predicted_spectrum(10.0).map_err(|e| e.to_string())?;
    // S = 5/2, d = √(8/3π) √S e^{-S}, levels 3ω/4 ∓ ωd
    let d = (8.0 / (3.0 * PI) * 2.5).sqrt() * (-2.5f64).exp();
    let composed = [7.5 - 10.0 * d, 7.5, 7.5 + 10.0 * d];
    let quoted = [6.3042, 7.5, 8.6958];
    let mut worst = 0.0f64;
    for i in 0..3 {
        worst = worst
            .max((s.levels[i] - composed[i]).abs())
            .max((s.levels[i] - quoted[i]).abs());
    }
    let symmetric = s.levels[2] - s.levels[1] == s.levels[1] - s.levels[0];
    ensure(
        worst < 5e-5 && symmetric,
        format!(
            "levels ({:.5}, {:.5}, {:.5}); max deviation {worst:.2e} (< 5e-5); splitting symmetric: {symmetric}",
            s.levels[0], s.levels[1], s.levels[2]
        ),
    )
}

fn oracle_properties() -> Outcome {
    let harmonic = PotentialModel::harmonic(1.0).map_err(|e| e.to_string())?;
    let levels = diagonalize(&harmonic, GridSpec::new(10.0, 2000), 5).map_err(|e| e.to_string())?;
    let harmonic_error = levels
        .energies
        .iter()
        .enumerate()
        .map(|(n, e)| (e - (n as f64 + 0.5)).abs())
        .fold(0.0, f64::max);
    let mut problems = Vec::new();
    let mut slope = 0.0f64;
    for &omega in &[8.0, 12.0, 16.0, 20.0] {
        let t = compare_report(omega, GridSpec::new(3.0, 4000))
            .map_err(|e| format!("omega={omega}: {e}"))?;
        if t.exact_parities[0] != Parity::Even || t.exact_parities[1] != Parity::Odd {
            problems.push(format!("omega={omega}: parities {:?}", t.exact_parities));
        }
        let analytic = -0.25 + 1.5 / omega;
        slope = slope
            .max((t.log_slope_numeric - analytic).abs())
            .max((predicted_log_slope(omega).map_err(|e| e.to_string())? - analytic).abs());
    }
    ensure(
        harmonic_error < 1e-6 && problems.is_empty() && slope < 1e-10,
        format!(
            "harmonic error {harmonic_error:.2e} (< 1e-6); parities {}; log-slope error {slope:.2e} (< 1e-10)",
            if problems.is_empty() { "even/odd at all four omega".into() } else { problems.join(", ") }
        ),
    )
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_instanton"))
            .args(["sweep", "--omega-range", "4:30:2", "--format", "csv"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if !a.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            a.status.code(),
            String::from_utf8_lossy(&a.stderr)
        ));
    }
    ensure(
        a.stdout == b.stdout && b.status.success(),
        format!(
            "two runs, {} bytes each, identical: {}",
            a.stdout.len(),
            a.stdout == b.stdout
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("harmonic propagator calibration", harmonic_propagator),
        ("instanton exactness", instanton_exactness),
        ("zero mode and tail constants", zero_mode_and_tails),
        ("lowest eigenvalue", lowest_eigenvalue),
        ("GY versus eigenvalue product", gy_versus_eigenproduct),
        ("combinatorics", combinatorics),
        ("dilute-gas closed form", dilute_gas_closed_form),
        ("spectrum formula", spectrum_formula),
        ("oracle properties", oracle_properties),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
