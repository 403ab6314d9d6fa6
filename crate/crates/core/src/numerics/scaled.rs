//! Real numbers carried as `mantissa * 2^exponent`.
//!
//! Zero-energy solutions and reference determinants grow like `exp(c T)`, so
//! they are tracked with a separate binary exponent. Rescaling by powers of
//! two is exact in IEEE arithmetic, which means a scaled computation and a
//! plain one agree bit for bit as long as the plain one stays in range.

use std::cmp::Ordering;
use std::f64::consts::LN_2;
use std::fmt;
use std::ops::{Div, Mul, Neg};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledReal {
    mantissa: f64,
    exponent: i64,
}

/// `2^e` for exponents where the result is a normal double.
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Multiplies by `2^e` exactly, splitting the shift so intermediate factors
/// stay representable.
fn scale_by_pow2(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= pow2(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= pow2(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * pow2(e)
}

impl ScaledReal {
    pub const ZERO: ScaledReal = ScaledReal {
        mantissa: 0.0,
        exponent: 0,
    };

    pub const ONE: ScaledReal = ScaledReal {
        mantissa: 1.0,
        exponent: 0,
    };

    pub fn new(mantissa: f64, exponent: i64) -> Self {
        ScaledReal { mantissa, exponent }.normalized()
    }

    pub fn from_f64(x: f64) -> Self {
        ScaledReal::new(x, 0)
    }

    /// Builds `sign * exp(ln_abs)`.
    pub fn from_ln(ln_abs: f64, sign: f64) -> Self {
        if ln_abs == f64::NEG_INFINITY || sign == 0.0 {
            return ScaledReal::ZERO;
        }
        let exponent = (ln_abs / LN_2).floor();
        let rest = ln_abs - exponent * LN_2;
        ScaledReal::new(sign.signum() * rest.exp(), exponent as i64)
    }

    /// Brings the mantissa into `[1, 2)` by an exact power-of-two shift.
    fn normalized(self) -> Self {
        let m = self.mantissa;
        if m == 0.0 || !m.is_finite() {
            return ScaledReal {
                mantissa: m,
                exponent: if m == 0.0 { 0 } else { self.exponent },
            };
        }
        let bits = m.abs().to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        if raw_exp == 0 {
            // subnormal: lift into the normal range first
            let lifted = m * pow2(64);
            return ScaledReal {
                mantissa: lifted,
                exponent: self.exponent - 64,
            }
            .normalized();
        }
        let shift = raw_exp - 1023;
        ScaledReal {
            mantissa: m * pow2(-shift),
            exponent: self.exponent + shift,
        }
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    pub fn signum(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    pub fn abs(&self) -> Self {
        ScaledReal {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    /// Natural log of the magnitude.
    pub fn ln(&self) -> f64 {
        if self.mantissa == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.mantissa.abs().ln() + self.exponent as f64 * LN_2
    }

    /// The plain double, or `None` when it would overflow to infinity.
    /// Values below the normal range flush towards zero.
    pub fn value(&self) -> Option<f64> {
        let v = scale_by_pow2(self.mantissa, self.exponent);
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    }

    /// Like [`value`](Self::value) but saturating to `±inf`.
    pub fn to_f64_lossy(&self) -> f64 {
        scale_by_pow2(self.mantissa, self.exponent)
    }

    pub fn recip(&self) -> Self {
        ScaledReal::new(1.0 / self.mantissa, -self.exponent)
    }

    pub fn sqrt(&self) -> Self {
        assert!(self.mantissa >= 0.0, "sqrt of negative scaled value");
        if self.exponent % 2 == 0 {
            ScaledReal::new(self.mantissa.sqrt(), self.exponent / 2)
        } else {
            ScaledReal::new((2.0 * self.mantissa).sqrt(), (self.exponent - 1) / 2)
        }
    }

    /// Relative difference `|a - b| / max(|a|, |b|)`, computed without leaving
    /// scaled form.
    pub fn relative_difference(&self, other: &ScaledReal) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        let top = self.exponent.max(other.exponent);
        let a = scale_by_pow2(self.mantissa, self.exponent - top);
        let b = scale_by_pow2(other.mantissa, other.exponent - top);
        (a - b).abs() / a.abs().max(b.abs())
    }
}

impl Mul for ScaledReal {
    type Output = ScaledReal;
    fn mul(self, rhs: ScaledReal) -> ScaledReal {
        ScaledReal::new(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Div for ScaledReal {
    type Output = ScaledReal;
    fn div(self, rhs: ScaledReal) -> ScaledReal {
        ScaledReal::new(self.mantissa / rhs.mantissa, self.exponent - rhs.exponent)
    }
}

impl Neg for ScaledReal {
    type Output = ScaledReal;
    fn neg(self) -> ScaledReal {
        ScaledReal {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl PartialOrd for ScaledReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.partial_cmp(&sb);
        }
        if sa == 0.0 {
            return Some(Ordering::Equal);
        }
        let by_magnitude = if self.exponent != other.exponent {
            self.exponent.cmp(&other.exponent)
        } else {
            self.mantissa.abs().partial_cmp(&other.mantissa.abs())?
        };
        Some(if sa > 0.0 {
            by_magnitude
        } else {
            by_magnitude.reverse()
        })
    }
}

impl fmt::Display for ScaledReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) if v != 0.0 || self.is_zero() => write!(f, "{v:e}"),
            _ => write!(
                f,
                "{}exp({})",
                if self.signum() < 0.0 { "-" } else { "" },
                self.ln()
            ),
        }
    }
}
