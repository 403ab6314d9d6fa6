//! Dilute-gas summation over instanton sequences on the three-well chain
//! `-1 — 0 — +1`, and the energy triplet it predicts.
//!
//! Energies and densities are in the units of the triple well with
//! `V = (ω²/2) x²(x² - 1)²`: action `S = ω/4`, wells of frequency `ω` and
//! `2ω`, reference frequency `3ω/2`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::numerics::quadrature::log_add_exp;
use crate::numerics::{ln_sinh, ScaledReal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiluteGasError {
    #[error("exhaustive enumeration is capped at k = {cap} (requested {k})")]
    EnumerationTooLarge { k: usize, cap: usize },
    #[error("well index {0} is not one of -1, 0, 1")]
    InvalidWell(i32),
    #[error("{name} must be positive and finite (got {value})")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("the two exponentials cannot be separated on this grid ({reason})")]
    FitDegenerate { reason: String },
    #[error("two-exponential fit did not converge (residual {residual:e})")]
    FitDiverged { residual: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, DiluteGasError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(DiluteGasError::InvalidParameter { name, value })
    }
}

/// `√(8/3π) √S e^{-S}` with `S = ω/4`.
pub fn instanton_density(omega: f64) -> f64 {
    ln_instanton_density(omega).exp()
}

pub fn ln_instanton_density(omega: f64) -> f64 {
    let s = 0.25 * omega;
    0.5 * (8.0 / (3.0 * PI)).ln() + 0.5 * s.ln() - s
}

/// Per-instanton weight of the one-instanton amplitude, `√(4/3π) √S e^{-S}`;
/// smaller than the density by `√2`.
pub fn one_instanton_weight(omega: f64) -> f64 {
    instanton_density(omega) / std::f64::consts::SQRT_2
}

/// Largest `k` accepted by [`count_configurations`].
pub const ENUMERATION_CAP: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GasConfigurationCount {
    pub k: usize,
    pub endpoints: (i32, i32),
    pub count: u64,
}

fn check_well(w: i32) -> Result<i32, DiluteGasError> {
    if (-1..=1).contains(&w) {
        Ok(w)
    } else {
        Err(DiluteGasError::InvalidWell(w))
    }
}

fn neighbours(w: i32) -> &'static [i32] {
    match w {
        0 => &[-1, 1],
        _ => &[0],
    }
}

fn enumerate(at: i32, remaining: usize, to: i32) -> u64 {
    if remaining == 0 {
        return u64::from(at == to);
    }
    neighbours(at)
        .iter()
        .map(|&next| enumerate(next, remaining - 1, to))
        .sum()
}

/// Number of sequences of `k` jumps between adjacent wells leading from
/// `from` to `to`, by visiting every sequence.
pub fn count_configurations(
    k: usize,
    from: i32,
    to: i32,
) -> Result<GasConfigurationCount, DiluteGasError> {
    let (from, to) = (check_well(from)?, check_well(to)?);
    if k > ENUMERATION_CAP {
        return Err(DiluteGasError::EnumerationTooLarge {
            k,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(GasConfigurationCount {
        k,
        endpoints: (from, to),
        count: enumerate(from, k, to),
    })
}

/// The same count as an entry of the `k`-th power of the adjacency matrix.
pub fn walk_count(k: usize, from: i32, to: i32) -> Result<u128, DiluteGasError> {
    let (from, to) = (check_well(from)?, check_well(to)?);
    type M = [[u128; 3]; 3];
    let mul = |a: &M, b: &M| {
        let mut c = [[0u128; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
            }
        }
        c
    };
    let mut result: M = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    let mut base: M = [[0, 1, 0], [1, 0, 1], [0, 1, 0]];
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = mul(&result, &base);
        }
        base = mul(&base, &base);
        e >>= 1;
    }
    Ok(result[(from + 1) as usize][(to + 1) as usize])
}

fn configurations(k: usize, from: i32, to: i32) -> Result<f64, DiluteGasError> {
    if k <= ENUMERATION_CAP {
        Ok(count_configurations(k, from, to)?.count as f64)
    } else {
        Ok(walk_count(k, from, to)? as f64)
    }
}

/// `ln Σ_{j<terms} x^{2j+1}/(2j+1)!`, or `ln sinh x` when `terms` is `None`.
pub fn ln_odd_series(x: f64, terms: Option<usize>) -> f64 {
    let Some(terms) = terms else {
        return ln_sinh(x);
    };
    if terms == 0 || x == 0.0 {
        return f64::NEG_INFINITY;
    }
    // terms are summed relative to e^x so none of them overflows
    let ln_x = x.ln();
    let mut ln_term = ln_x;
    let mut sum = 0.0;
    for j in 0..terms {
        sum += (ln_term - x).exp();
        ln_term += 2.0 * ln_x - (((2 * j + 2) * (2 * j + 3)) as f64).ln();
    }
    x + sum.ln()
}

/// `0 → ±1` amplitude `(3ω/4π)^{1/2} e^{-3ωT/4} sinh(ωTd)`, with the
/// hyperbolic sine replaced by its first `terms` odd-power terms when given.
pub fn transition_amplitude(
    omega: f64,
    big_t: f64,
    terms: Option<usize>,
) -> Result<ScaledReal, DiluteGasError> {
    positive("omega", omega)?;
    positive("T", big_t)?;
    let x = omega * big_t * instanton_density(omega);
    let ln_prefactor = 0.5 * (3.0 * omega / (4.0 * PI)).ln() - 0.75 * omega * big_t;
    Ok(ScaledReal::from_ln(
        ln_prefactor + ln_odd_series(x, terms),
        1.0,
    ))
}

/// Amplitude between any two wells as an explicit sum over `k ≤ k_max`
/// instantons, each weighted by the one-instanton factor, the translational
/// volume `(ωT)^k/k!` and the enumerated number of orderings. The `k = 0`
/// term is the reference oscillator `(ν/π)^{1/2} e^{-νT/2}`, `ν = 3ω/2`.
pub fn gas_amplitude(
    omega: f64,
    big_t: f64,
    from: i32,
    to: i32,
    k_max: usize,
) -> Result<ScaledReal, DiluteGasError> {
    positive("omega", omega)?;
    positive("T", big_t)?;
    let nu = 1.5 * omega;
    let ln_x = (omega * big_t * one_instanton_weight(omega)).ln();
    let mut ln_sum = f64::NEG_INFINITY;
    let mut ln_factorial = 0.0;
    for k in 0..=k_max {
        if k > 0 {
            ln_factorial += (k as f64).ln();
        }
        let count = configurations(k, from, to)?;
        if count > 0.0 {
            ln_sum = log_add_exp(ln_sum, count.ln() + k as f64 * ln_x - ln_factorial);
        }
    }
    let ln_prefactor = 0.5 * (nu / PI).ln() - 0.5 * nu * big_t;
    Ok(ScaledReal::from_ln(ln_prefactor + ln_sum, 1.0))
}

/// `0 → 0` return amplitude from the gas sum. Not a closed form: the even-k
/// weights come from the enumeration.
pub fn return_amplitude(
    omega: f64,
    big_t: f64,
    k_max: usize,
) -> Result<ScaledReal, DiluteGasError> {
    gas_amplitude(omega, big_t, 0, 0, k_max)
}

/// `(ωT)^k / k!`, the volume of the ordered centres.
pub fn translational_volume(k: usize, omega: f64, big_t: f64) -> f64 {
    let x = omega * big_t;
    (1..=k).fold(1.0, |acc, j| acc * x / j as f64)
}

/// Largest `k` accepted by [`translational_volume_numeric`].
pub const VOLUME_CHECK_MAX_K: usize = 4;

/// The ordered integral `∫_{0<u₁<…<u_k<ωT} du` on a uniform grid of
/// `points` nodes, as `k` nested cumulative trapezoid sums.
pub fn translational_volume_numeric(
    k: usize,
    omega: f64,
    big_t: f64,
    points: usize,
) -> Result<f64, DiluteGasError> {
    if k > VOLUME_CHECK_MAX_K {
        return Err(DiluteGasError::EnumerationTooLarge {
            k,
            cap: VOLUME_CHECK_MAX_K,
        });
    }
    let x = positive("omega", omega)? * positive("T", big_t)?;
    let n = points.max(2);
    let h = x / (n - 1) as f64;
    let mut g = vec![1.0; n];
    for _ in 0..k {
        let mut next = vec![0.0; n];
        for i in 1..n {
            next[i] = next[i - 1] + 0.5 * h * (g[i - 1] + g[i]);
        }
        g = next;
    }
    Ok(g[n - 1])
}

/// Default minimum mean separation, in instanton widths `1/ω`, for the gas
/// to count as dilute.
pub const DEFAULT_MIN_SEPARATION: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiluteGasSpectrum {
    pub omega: f64,
    pub action: f64,
    pub density: f64,
    /// `3ω/4`.
    pub reference_energy: f64,
    /// `(E₀, E₁, E₂) = (3ω/4 - ωd, 3ω/4, 3ω/4 + ωd)`.
    pub levels: [f64; 3],
    pub splitting: f64,
    /// Mean instanton separation `1/(ωd)` in units of `1/ω`, i.e. `1/d`.
    pub mean_separation: f64,
    /// Whether the mean separation reaches the dilute threshold.
    pub dilute: bool,
}

pub fn predicted_spectrum(omega: f64) -> Result<DiluteGasSpectrum, DiluteGasError> {
    predicted_spectrum_with(omega, DEFAULT_MIN_SEPARATION)
}

pub fn predicted_spectrum_with(
    omega: f64,
    min_separation: f64,
) -> Result<DiluteGasSpectrum, DiluteGasError> {
    positive("omega", omega)?;
    let density = instanton_density(omega);
    let centre = 0.75 * omega;
    // E₂ - E₁ and E₁ - E₀ are both exactly `split`: E₂ lies in [c, 2c], so
    // E₂ - c is exact, and c - split is then a multiple of ulp(c) in [c/2, c]
    let upper = centre + omega * density;
    let split = upper - centre;
    let lower = centre - split;
    Ok(DiluteGasSpectrum {
        omega,
        action: 0.25 * omega,
        density,
        reference_energy: centre,
        levels: [lower, centre, upper],
        splitting: split,
        mean_separation: 1.0 / density,
        dilute: 1.0 / density >= min_separation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyFit {
    pub low: f64,
    pub high: f64,
    /// `ln P` in `A = P (e^{-E_low T} - e^{-E_high T})`.
    pub ln_weight: f64,
    /// Root-mean-square residual in `ln A`.
    pub residual: f64,
}

/// Fits `ln A(T) = ln P - E_low T + ln(1 - e^{-(E_high - E_low) T})` to the
/// samples by Gauss–Newton, starting from the best of a scan over the gap
/// with `(ln P, E_low)` solved linearly.
pub fn extract_energies<F: Fn(f64) -> f64>(
    ln_amplitude: F,
    t_grid: &[f64],
) -> Result<EnergyFit, DiluteGasError> {
    if t_grid.len() < 4 {
        return Err(DiluteGasError::InvalidGrid(format!(
            "need at least 4 points, got {}",
            t_grid.len()
        )));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || !(t_grid[0] > 0.0) {
        return Err(DiluteGasError::InvalidGrid(
            "times must be positive and strictly increasing".into(),
        ));
    }
    let y: Vec<f64> = t_grid.iter().map(|&t| ln_amplitude(t)).collect();
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(DiluteGasError::InvalidGrid(format!(
            "amplitude is not finite at T = {}",
            t_grid[i]
        )));
    }
    let t0 = t_grid[0];
    let span = t_grid[t_grid.len() - 1] - t0;

    let gap_term = |gap: f64, t: f64| (-(-gap * t).exp_m1()).ln();
    // (ln P, E_low, sum of squares) for a fixed gap
    let linear = |gap: f64| {
        let n = t_grid.len() as f64;
        let z: Vec<f64> = y
            .iter()
            .zip(t_grid)
            .map(|(&v, &t)| v - gap_term(gap, t))
            .collect();
        let mean_t = t_grid.iter().sum::<f64>() / n;
        let mean_z = z.iter().sum::<f64>() / n;
        let sxx: f64 = t_grid.iter().map(|t| (t - mean_t).powi(2)).sum();
        let sxz: f64 = t_grid
            .iter()
            .zip(&z)
            .map(|(t, v)| (t - mean_t) * (v - mean_z))
            .sum();
        let slope = sxz / sxx;
        let intercept = mean_z - slope * mean_t;
        let ss: f64 = t_grid
            .iter()
            .zip(&z)
            .map(|(t, v)| (v - intercept - slope * t).powi(2))
            .sum();
        (intercept, -slope, ss)
    };

    let (gap_lo, gap_hi) = (1e-8 / span, 60.0 / t0);
    const SCAN: usize = 600;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=SCAN {
        let gap = gap_lo * (gap_hi / gap_lo).powf(i as f64 / SCAN as f64);
        let (_, _, ss) = linear(gap);
        if ss < best.0 {
            best = (ss, gap);
        }
    }
    let mut gap = best.1;
    let (mut ln_p, mut e_low, mut ss) = linear(gap);

    // Levenberg–Marquardt on (ln P, E_low, ln gap)
    let mut damping = 1e-3;
    for _ in 0..200 {
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for (&t, &v) in t_grid.iter().zip(&y) {
            let r = v - (ln_p - e_low * t + gap_term(gap, t));
            let j = [1.0, -t, gap * t / (gap * t).exp_m1()];
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj;
            for a in 0..3 {
                m[a][a] *= 1.0 + damping;
            }
            let Some(step) = solve3(m, jtr) else {
                damping *= 10.0;
                continue;
            };
            let candidate = (ln_p + step[0], e_low + step[1], gap * step[2].exp());
            let trial: f64 = t_grid
                .iter()
                .zip(&y)
                .map(|(&t, &v)| {
                    (v - (candidate.0 - candidate.1 * t + gap_term(candidate.2, t))).powi(2)
                })
                .sum();
            if trial.is_finite() && trial <= ss {
                let small = step.iter().all(|s| s.abs() <= 1e-15 * 8.0)
                    || step[0].abs() <= 4.0 * f64::EPSILON * ln_p.abs().max(1.0)
                        && step[1].abs() <= 4.0 * f64::EPSILON * e_low.abs().max(1.0)
                        && step[2].abs() <= 4.0 * f64::EPSILON;
                (ln_p, e_low, gap, ss) = (candidate.0, candidate.1, candidate.2, trial);
                damping = (damping * 0.1).max(1e-12);
                improved = !small;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let residual = (ss / t_grid.len() as f64).sqrt();
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if !(residual <= 1e-6 * scale) {
        return Err(DiluteGasError::FitDiverged { residual });
    }
    if gap * span < 1e-6 {
        return Err(DiluteGasError::FitDegenerate {
            reason: format!("gap times span is {:e}", gap * span),
        });
    }
    if (-gap * t0).exp() < 1e-10 {
        return Err(DiluteGasError::FitDegenerate {
            reason: format!(
                "the faster exponential is suppressed by {:e} at the first time",
                (-gap * t0).exp()
            ),
        });
    }
    Ok(EnergyFit {
        low: e_low,
        high: e_low + gap,
        ln_weight: ln_p,
        residual,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}
