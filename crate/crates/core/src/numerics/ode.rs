//! Zero-energy initial value problems `f'' = W(t) f` integrated with an
//! adaptive Dormand–Prince 5(4) pair.
//!
//! The state `(f, f')` is rescaled by an exact power of two whenever it
//! outgrows a threshold; the accumulated exponent is returned alongside the
//! mantissa. Error control is purely relative to the state norm, so the
//! rescaling never changes a step decision.

use thiserror::Error;

use super::scaled::ScaledReal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("exceeded {steps} steps before reaching t = {target}")]
    TooManySteps { steps: usize, target: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct IvpOptions {
    /// Per-step relative tolerance.
    pub rtol: f64,
    /// Rescale once `max(|f|, |f'|)` exceeds `2^threshold`; `None` never
    /// rescales.
    pub rescale_log2: Option<i32>,
    pub max_steps: usize,
}

impl Default for IvpOptions {
    fn default() -> Self {
        IvpOptions {
            rtol: 1e-13,
            rescale_log2: Some(64),
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IvpSolution {
    pub value: ScaledReal,
    pub derivative: ScaledReal,
    pub steps: usize,
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [f64; 2];

#[inline]
fn rhs<W: Fn(f64) -> f64>(w: &W, t: f64, y: &State) -> State {
    [y[1], w(t) * y[0]]
}

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrates `f'' = W(t) f` from `t0` to `t1 > t0` with `f(t0) = f0`,
/// `f'(t0) = df0`.
pub fn integrate_zero_energy<W: Fn(f64) -> f64>(
    w: W,
    t0: f64,
    t1: f64,
    f0: f64,
    df0: f64,
    options: IvpOptions,
) -> Result<IvpSolution, OdeError> {
    assert!(t1 >= t0, "integration runs forward in t");
    let mut y: State = [f0, df0];
    let mut exponent: i64 = 0;
    let mut t = t0;
    if t1 == t0 {
        return Ok(IvpSolution {
            value: ScaledReal::from_f64(f0),
            derivative: ScaledReal::from_f64(df0),
            steps: 0,
        });
    }
    let rate = w(t0).abs().sqrt().max(1.0);
    let mut h = ((t1 - t0) / 100.0).min(0.05 / rate);
    let mut k1 = rhs(&w, t, &y);
    let mut steps = 0usize;

    while t < t1 {
        if steps >= options.max_steps {
            return Err(OdeError::TooManySteps { steps, target: t1 });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let k2 = rhs(&w, t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(&w, t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            &w,
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            &w,
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            &w,
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let t_new = if last { t1 } else { t + h };
        let k7 = rhs(&w, t_new, &y_new);

        let mut err = [0.0; 2];
        for i in 0..2 {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let scale = y[0]
            .abs()
            .max(y[1].abs())
            .max(y_new[0].abs())
            .max(y_new[1].abs());
        let err_norm = err[0].abs().max(err[1].abs()) / (options.rtol * scale);
        if !err_norm.is_finite() {
            return Err(OdeError::NonFinite { t });
        }

        if err_norm <= 1.0 {
            t = t_new;
            y = y_new;
            k1 = k7;
            steps += 1;
            if let Some(threshold) = options.rescale_log2 {
                let size = y[0].abs().max(y[1].abs());
                if size > 2f64.powi(threshold) {
                    let shift = ScaledReal::from_f64(size).exponent();
                    let factor = ScaledReal::new(1.0, -shift).to_f64_lossy();
                    y[0] *= factor;
                    y[1] *= factor;
                    k1[0] *= factor;
                    k1[1] *= factor;
                    exponent += shift;
                }
            }
            if !y[0].is_finite() || !y[1].is_finite() {
                return Err(OdeError::NonFinite { t });
            }
        }
        let growth = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        let proposed = h * if err_norm <= 1.0 {
            growth
        } else {
            growth.min(1.0)
        };
        if !last || err_norm > 1.0 {
            h = proposed;
        }
        if h < 1e-14 * (t1 - t0) && t < t1 {
            return Err(OdeError::StepSizeUnderflow { t, h });
        }
    }

    Ok(IvpSolution {
        value: ScaledReal::new(y[0], exponent),
        derivative: ScaledReal::new(y[1], exponent),
        steps,
    })
}
