//! Numerical building blocks shared by the pipeline stages.

pub mod ode;
pub mod quadrature;
pub mod scaled;
pub mod tridiag;

pub use scaled::ScaledReal;

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln sinh(x)` for `x ≥ 0`, without overflow for large `x`.
pub fn ln_sinh(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x < 1.0 {
        x.sinh().ln()
    } else {
        x + (-(-2.0 * x).exp_m1()).ln() - std::f64::consts::LN_2
    }
}

/// `ln cosh(x)`, without overflow for large `|x|`.
pub fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}
