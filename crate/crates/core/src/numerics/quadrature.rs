//! Adaptive Gauss–Kronrod (7/15) quadrature.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not reach tolerance on [{a}, {b}] (estimated error {error:e})")]
    ToleranceNotMet { a: f64, b: f64, error: f64 },
    #[error("integrand is not finite at t = {at}")]
    NonFinite { at: f64 },
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7/K15 panel. Returns `(kronrod, |kronrod - gauss|)`.
pub fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance {
            abs: 0.0,
            rel,
            max_depth: 60,
        }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

/// Integrates `f` over the finite interval `[a, b]` by recursive bisection.
/// A panel is accepted once its Gauss/Kronrod discrepancy falls below
/// `max(abs, rel * |panel|)`, with `abs` shared out in proportion to width.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let width = (b - a).abs();
    let mut total = 0.0;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, error) = kronrod15(&f, lo, hi);
        if !value.is_finite() {
            return Err(QuadratureError::NonFinite {
                at: 0.5 * (lo + hi),
            });
        }
        let share = tol.abs * (hi - lo).abs() / width;
        if error <= share.max(tol.rel * value.abs()) || error == 0.0 {
            total += value;
        } else if depth >= tol.max_depth {
            return Err(QuadratureError::ToleranceNotMet {
                a: lo,
                b: hi,
                error,
            });
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}

/// `ln ∫_a^b exp(g(t)) dt` for exponents that would overflow if taken
/// directly. The integrand is shifted by the largest of a few samples of
/// `g`, which must be of the same order as its true maximum.
pub fn integrate_log<G: Fn(f64) -> f64>(
    g: G,
    a: f64,
    b: f64,
    rel: f64,
) -> Result<f64, QuadratureError> {
    const SAMPLES: usize = 64;
    let shift = (0..=SAMPLES)
        .map(|i| g(a + (b - a) * i as f64 / SAMPLES as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(QuadratureError::NonFinite { at: a });
    }
    // the shifted integrand peaks near 1, so its integral is at least of the
    // order of one panel width; an absolute floor keeps negligible
    // regions from being refined to full relative accuracy
    let scale = (b - a).abs() / SAMPLES as f64;
    let value = integrate(
        |t| (g(t) - shift).exp(),
        a,
        b,
        Tolerance::relative(rel).with_abs(rel * scale * 1e-3),
    )?;
    Ok(shift + value.ln())
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
