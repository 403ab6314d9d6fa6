//! Quadratic fluctuations about an instanton: Gelfand–Yaglom determinant
//! ratios, zero-mode removal and the exponentially small lowest eigenvalue.
//!
//! For an operator `-d²/dτ² + W(τ)` on `[-T/2, T/2]` with Dirichlet ends,
//! the determinant (up to a W-independent constant) is the value at `T/2` of
//! the solution of `f'' = W f` with `f(-T/2) = 0`, `f'(-T/2) = 1`.
//!
//! When `W` is the curvature along an instanton, the zero mode `x₀` solves
//! the same equation and the terminal value follows by reduction of order,
//!
//! ```text
//! f(T/2) = x₀(-T/2) x₀(T/2) ∫ ds / x₀(s)²,
//! ```
//!
//! which is evaluated in log form. Integrating the initial value problem
//! directly loses relative accuracy like `e^{ωT}·ε` because the solution
//! nearly cancels against the growing branch; the IVP is still used for
//! constant curvatures and as a cross-check on moderate boxes.

use serde::Serialize;
use thiserror::Error;

use crate::instanton::{self, closed_form_instanton, InstantonError, InstantonProfile, ZeroMode};
use crate::numerics::ode::{integrate_zero_energy, IvpOptions, OdeError};
use crate::numerics::quadrature::{self, log_add_exp, QuadratureError};
use crate::numerics::tridiag::{EigenError, SymTridiagonal};
use crate::numerics::{ln_sinh, ScaledReal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluctuationError {
    #[error("{quantity} = exp({ln_value}) is not representable as a double")]
    OverflowUnrepresentable {
        quantity: &'static str,
        ln_value: f64,
    },
    #[error("ODE integration failed: {0}")]
    ToleranceNotMet(#[from] OdeError),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(#[from] QuadratureError),
    #[error("eigensolver failed: {0}")]
    Nonconvergence(#[from] EigenError),
    #[error(transparent)]
    Instanton(#[from] InstantonError),
    #[error(
        "lowest eigenvalue {value:e} is not resolved above the discretization error {error_estimate:e}"
    )]
    ResolutionWarning { value: f64, error_estimate: f64 },
    #[error("{name} must be positive and finite (got {value})")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("box too small: omega*T = {omega_t} (need at least {minimum})")]
    BoxTooSmall { omega_t: f64, minimum: f64 },
    #[error("grid of {points} points is too coarse (need at least {minimum})")]
    GridTooCoarse { points: usize, minimum: usize },
}

fn positive(name: &'static str, value: f64) -> Result<f64, FluctuationError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(FluctuationError::InvalidParameter { name, value })
    }
}

#[derive(Debug, Clone)]
enum Curvature {
    Constant(f64),
    Instanton(ZeroMode),
}

/// `-d²/dτ² + W(τ)` on the box `[-T/2, T/2]`.
#[derive(Debug, Clone)]
pub struct StabilityOperator {
    curvature: Curvature,
    big_t: f64,
}

impl StabilityOperator {
    /// Constant curvature `ν²`: the harmonic reference.
    pub fn constant(nu: f64, big_t: f64) -> Result<Self, FluctuationError> {
        positive("nu", nu)?;
        Ok(StabilityOperator {
            curvature: Curvature::Constant(nu * nu),
            big_t: positive("T", big_t)?,
        })
    }

    /// `W = 0`.
    pub fn free(big_t: f64) -> Result<Self, FluctuationError> {
        Ok(StabilityOperator {
            curvature: Curvature::Constant(0.0),
            big_t: positive("T", big_t)?,
        })
    }

    /// `W(τ) = V''(x_c(τ))` along the given instanton.
    pub fn instanton(profile: &InstantonProfile, big_t: f64) -> Result<Self, FluctuationError> {
        Ok(StabilityOperator {
            curvature: Curvature::Instanton(instanton::zero_mode(profile)?),
            big_t: positive("T", big_t)?,
        })
    }

    pub fn curvature(&self, tau: f64) -> f64 {
        match &self.curvature {
            Curvature::Constant(w) => *w,
            Curvature::Instanton(zm) => zm.curvature(tau),
        }
    }

    pub fn big_t(&self) -> f64 {
        self.big_t
    }

    pub fn interval(&self) -> (f64, f64) {
        (-0.5 * self.big_t, 0.5 * self.big_t)
    }

    /// `(W(-∞), W(+∞))`.
    pub fn asymptotic_curvatures(&self) -> (f64, f64) {
        match &self.curvature {
            Curvature::Constant(w) => (*w, *w),
            Curvature::Instanton(zm) => {
                let (a, b) = zm.profile().decay_rates();
                (a * a, b * b)
            }
        }
    }

    pub fn zero_mode(&self) -> Option<&ZeroMode> {
        match &self.curvature {
            Curvature::Constant(_) => None,
            Curvature::Instanton(zm) => Some(zm),
        }
    }

    /// Second-difference Dirichlet discretization on `n` interior points,
    /// spacing `T/(n+1)`.
    pub fn discretize(&self, n: usize) -> SymTridiagonal {
        let h = self.big_t / (n + 1) as f64;
        let inv_h2 = 1.0 / (h * h);
        let start = -0.5 * self.big_t;
        let diag = (1..=n)
            .map(|i| 2.0 * inv_h2 + self.curvature(start + i as f64 * h))
            .collect();
        SymTridiagonal::new(diag, vec![-inv_h2; n - 1])
    }
}

/// Terminal value `f(T/2)`: by reduction of order when the operator carries
/// a zero mode, by direct integration otherwise.
pub fn gy_terminal(op: &StabilityOperator) -> Result<ScaledReal, FluctuationError> {
    match op.zero_mode() {
        Some(_) => gy_terminal_reduction(op),
        None => gy_terminal_ivp(op, IvpOptions::default()),
    }
}

/// `f(T/2)` from the initial value problem.
pub fn gy_terminal_ivp(
    op: &StabilityOperator,
    options: IvpOptions,
) -> Result<ScaledReal, FluctuationError> {
    let (a, b) = op.interval();
    let solution = integrate_zero_energy(|t| op.curvature(t), a, b, 0.0, 1.0, options)?;
    Ok(solution.value)
}

/// `f(T/2) = x₀(-T/2) x₀(T/2) ∫ ds/x₀²` for operators with a zero mode.
pub fn gy_terminal_reduction(op: &StabilityOperator) -> Result<ScaledReal, FluctuationError> {
    let zm = op
        .zero_mode()
        .expect("reduction of order needs a zero mode");
    let (a, b) = op.interval();
    let c = zm.profile().center().clamp(a, b);
    let g = |s: f64| -2.0 * zm.ln_value(s);
    let mut ln_integral = f64::NEG_INFINITY;
    for (lo, hi) in [(a, c), (c, b)] {
        if hi > lo {
            ln_integral = log_add_exp(ln_integral, quadrature::integrate_log(g, lo, hi, 1e-13)?);
        }
    }
    Ok(ScaledReal::from_ln(
        zm.ln_value(a) + zm.ln_value(b) + ln_integral,
        1.0,
    ))
}

/// `sinh(νT)/ν`, the terminal value for constant curvature `ν²`.
pub fn reference_terminal(nu: f64, big_t: f64) -> Result<ScaledReal, FluctuationError> {
    positive("nu", nu)?;
    if !(big_t.is_finite() && big_t >= 0.0) {
        return Err(FluctuationError::InvalidParameter {
            name: "T",
            value: big_t,
        });
    }
    Ok(ScaledReal::from_ln(ln_sinh(nu * big_t) - nu.ln(), 1.0))
}

/// `ln[(ν/π)^{1/2} (2 sinh νT)^{-1/2}]`.
pub fn ln_harmonic_propagator(nu: f64, big_t: f64) -> Result<f64, FluctuationError> {
    positive("nu", nu)?;
    positive("T", big_t)?;
    Ok(0.5 * (nu / std::f64::consts::PI).ln()
        - 0.5 * (std::f64::consts::LN_2 + ln_sinh(nu * big_t)))
}

/// Return amplitude `<0| e^{-HT} |0>` of the oscillator in closed form.
pub fn harmonic_propagator(nu: f64, big_t: f64) -> Result<f64, FluctuationError> {
    Ok(ln_harmonic_propagator(nu, big_t)?.exp())
}

/// The same amplitude as `N(T) · Det^{-1/2}` with both determinants from the
/// initial value problem. `N(T)` is fixed by the free particle, whose
/// amplitude is `(2πT)^{-1/2}`.
pub fn harmonic_propagator_gy(nu: f64, big_t: f64) -> Result<f64, FluctuationError> {
    let free = gy_terminal(&StabilityOperator::free(big_t)?)?;
    let harmonic = gy_terminal(&StabilityOperator::constant(nu, big_t)?)?;
    let ln_normalization = -0.5 * (2.0 * std::f64::consts::PI * big_t).ln() + 0.5 * free.ln();
    Ok((ln_normalization - 0.5 * harmonic.ln()).exp())
}

/// `y₀(τ) = x₀(τ) ∫_{τ_c}^{τ} ds/x₀(s)²`, the second solution with unit
/// Wronskian.
#[derive(Debug, Clone)]
pub struct SecondSolution {
    zero_mode: ZeroMode,
}

pub fn second_solution(zero_mode: &ZeroMode) -> SecondSolution {
    SecondSolution {
        zero_mode: zero_mode.clone(),
    }
}

impl SecondSolution {
    fn integral(&self, tau: f64) -> Result<f64, FluctuationError> {
        let c = self.zero_mode.profile().center();
        let (lo, hi, sign) = if tau >= c {
            (c, tau, 1.0)
        } else {
            (tau, c, -1.0)
        };
        if lo == hi {
            return Ok(0.0);
        }
        let ln = quadrature::integrate_log(|s| -2.0 * self.zero_mode.ln_value(s), lo, hi, 1e-13)?;
        Ok(sign * ln.exp())
    }

    pub fn value(&self, tau: f64) -> Result<f64, FluctuationError> {
        Ok(self.zero_mode.value(tau) * self.integral(tau)?)
    }

    /// `x₀ y₀' - x₀' y₀` with `y₀'` from a five-point difference.
    pub fn wronskian(&self, tau: f64) -> Result<f64, FluctuationError> {
        let omega = self.zero_mode.profile().model().omega();
        let h = 1e-3 / omega;
        let y = |t: f64| self.value(t);
        let dy = (y(tau - 2.0 * h)? - 8.0 * y(tau - h)? + 8.0 * y(tau + h)? - y(tau + 2.0 * h)?)
            / (12.0 * h);
        Ok(self.zero_mode.value(tau) * dy - self.zero_mode.derivative(tau) * y(tau)?)
    }
}

/// `λ = 2ωD² e^{-ωT}`.
pub fn lowest_eigenvalue_analytic(omega: f64, d: f64, big_t: f64) -> f64 {
    2.0 * omega * d * d * (-omega * big_t).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericEigenvalue {
    pub value: f64,
    /// `|λ_h - λ_{2h}|` scaled to the error of the fine grid.
    pub error_estimate: f64,
}

/// Smallest Dirichlet eigenvalue of the discretized operator on
/// `grid_points` interior points, with an error bar from a grid of twice the
/// spacing.
pub fn lowest_eigenvalue_numeric(
    op: &StabilityOperator,
    grid_points: usize,
) -> Result<NumericEigenvalue, FluctuationError> {
    const MINIMUM: usize = 1000;
    if grid_points < MINIMUM {
        return Err(FluctuationError::GridTooCoarse {
            points: grid_points,
            minimum: MINIMUM,
        });
    }
    let coarse_points = (grid_points + 1) / 2 - 1;
    let fine = op.discretize(grid_points).eigenvalue(0)?;
    let coarse = op.discretize(coarse_points).eigenvalue(0)?;
    let h = op.big_t() / (grid_points + 1) as f64;
    let h2 = op.big_t() / (coarse_points + 1) as f64;
    let error_estimate = (fine - coarse).abs() * h * h / (h2 * h2 - h * h);
    if !(fine > 0.0 && fine >= 10.0 * error_estimate) {
        return Err(FluctuationError::ResolutionWarning {
            value: fine,
            error_estimate,
        });
    }
    Ok(NumericEigenvalue {
        value: fine,
        error_estimate,
    })
}

/// `√(S/2π)`.
pub fn collective_jacobian(action: f64) -> f64 {
    (action / (2.0 * std::f64::consts::PI)).sqrt()
}

/// Weight per unit time of a single instanton in the one-instanton amplitude
/// formula, without `e^{-S}`: `√(4/3π) √S ω`.
pub fn one_instanton_weight(omega: f64) -> f64 {
    (4.0 / (3.0 * std::f64::consts::PI)).sqrt() * (0.25 * omega).sqrt() * omega
}

/// The same weight as carried by the instanton density: `√(8/3π) √S ω`.
pub fn density_weight(omega: f64) -> f64 {
    (8.0 / (3.0 * std::f64::consts::PI)).sqrt() * (0.25 * omega).sqrt() * omega
}

/// Smallest `ωT` accepted by [`determinant_report`].
pub const MIN_OMEGA_T: f64 = 20.0;

/// Every determinant quantity for the 0 → 1 triple-well instanton centred in
/// a box of length `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminantReport {
    pub omega: f64,
    pub big_t: f64,
    pub nu: f64,
    /// `f(T/2)` for the instanton operator.
    pub gy_value: f64,
    /// `sinh(νT)/ν`.
    pub reference_value: f64,
    pub raw_ratio: f64,
    /// `2ωD² e^{-ωT}` with `D` from the profile.
    pub lowest_eigenvalue: f64,
    pub amplitude_constant: f64,
    /// `raw_ratio / λ`: the ratio with the near-zero mode removed.
    pub reduced_ratio: f64,
    /// `√(S/2π)`.
    pub jacobian: f64,
    pub action: f64,
    /// `jacobian · reduced_ratio^{-1/2}`: the weight per unit time implied
    /// by the determinants, without `e^{-S}`.
    pub gy_weight: f64,
    /// `√(4/3π) √S ω`.
    pub one_instanton_weight: f64,
    /// `√(8/3π) √S ω`.
    pub density_weight: f64,
}

pub fn determinant_report(
    omega: f64,
    big_t: f64,
    nu: Option<f64>,
) -> Result<DeterminantReport, FluctuationError> {
    positive("omega", omega)?;
    positive("T", big_t)?;
    let nu = positive("nu", nu.unwrap_or(1.5 * omega))?;
    if omega * big_t < MIN_OMEGA_T {
        return Err(FluctuationError::BoxTooSmall {
            omega_t: omega * big_t,
            minimum: MIN_OMEGA_T,
        });
    }
    let profile = closed_form_instanton(omega, 0.0)?;
    let (d, _) = instanton::asymptotic_constants(&profile)?;
    let op = StabilityOperator::instanton(&profile, big_t)?;
    let gy = gy_terminal(&op)?;
    let reference = reference_terminal(nu, big_t)?;
    let plain = |quantity: &'static str, v: ScaledReal| {
        v.value().filter(|x| *x != 0.0 && x.is_normal()).ok_or(
            FluctuationError::OverflowUnrepresentable {
                quantity,
                ln_value: v.ln(),
            },
        )
    };
    let raw_ratio = plain("raw_ratio", gy / reference)?;
    let lambda = lowest_eigenvalue_analytic(omega, d, big_t);
    if !(lambda.is_normal()) {
        return Err(FluctuationError::OverflowUnrepresentable {
            quantity: "lowest_eigenvalue",
            ln_value: (2.0 * omega * d * d).ln() - omega * big_t,
        });
    }
    let reduced_ratio = raw_ratio / lambda;
    let jacobian = collective_jacobian(profile.action());
    Ok(DeterminantReport {
        omega,
        big_t,
        nu,
        gy_value: plain("gy_value", gy)?,
        reference_value: plain("reference_value", reference)?,
        raw_ratio,
        lowest_eigenvalue: lambda,
        amplitude_constant: d,
        reduced_ratio,
        jacobian,
        action: profile.action(),
        gy_weight: jacobian / reduced_ratio.sqrt(),
        one_instanton_weight: one_instanton_weight(omega),
        density_weight: density_weight(omega),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instanton_operator(omega: f64, big_t: f64) -> StabilityOperator {
        StabilityOperator::instanton(&closed_form_instanton(omega, 0.0).unwrap(), big_t).unwrap()
    }

    #[test]
    fn reference_terminal_values() {
        assert!(reference_terminal(1.0, 0.0).unwrap().is_zero());
        let v = reference_terminal(1.0, 2.0).unwrap().value().unwrap();
        assert!((v - 2f64.sinh()).abs() < 1e-15 * v);
        assert!((v - 3.62686).abs() < 1e-5);
        let v = reference_terminal(1.5, 20.0).unwrap().value().unwrap();
        assert!((v / (30f64.sinh() / 1.5) - 1.0).abs() < 1e-14);
        assert!((v / 3.5622e12 - 1.0).abs() < 1e-4);
        let huge = reference_terminal(1.0, 2000.0).unwrap();
        assert!(huge.value().is_none());
        assert!((huge.ln() - (2000.0 - 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn gy_constant_curvature() {
        for &nu in &[0.5, 1.0, 2.0] {
            for &t in &[5.0, 10.0, 20.0] {
                let op = StabilityOperator::constant(nu, t).unwrap();
                let got = gy_terminal(&op).unwrap();
                let exact = reference_terminal(nu, t).unwrap();
                assert!(got.relative_difference(&exact) < 1e-8, "nu={nu} T={t}");
            }
        }
        let op = StabilityOperator::constant(2.0, 10.0).unwrap();
        let v = gy_terminal(&op).unwrap().value().unwrap();
        assert!((v / 1.21291e8 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn reduction_matches_ivp_on_moderate_box() {
        let op = instanton_operator(1.0, 12.0);
        let a = gy_terminal_reduction(&op).unwrap();
        let b = gy_terminal_ivp(&op, IvpOptions::default()).unwrap();
        assert!(a.relative_difference(&b) < 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn instanton_terminal_asymptote() {
        let v = gy_terminal(&instanton_operator(1.0, 20.0))
            .unwrap()
            .value()
            .unwrap();
        let asymptote = 10f64.exp() / 4.0;
        assert!((v / asymptote - 1.0).abs() < 1e-2, "{v}");
    }

    #[test]
    fn harmonic_propagator_values() {
        let v = harmonic_propagator(1.0, 10.0).unwrap();
        assert!((v / 3.8015e-3 - 1.0).abs() < 1e-4);
        let v = harmonic_propagator(2.0, 5.0).unwrap();
        assert!((v / 5.3762e-3 - 1.0).abs() < 1e-4);
        let ratio = harmonic_propagator(1.0, 60.0).unwrap()
            / ((1.0 / std::f64::consts::PI).sqrt() * (-30f64).exp());
        assert!((ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lowest_eigenvalue_formula() {
        let l = lowest_eigenvalue_analytic(1.0, 2.0, 10.0);
        assert!((l / (8.0 * (-10f64).exp()) - 1.0).abs() < 1e-15);
        assert!((l / 3.6320e-4 - 1.0).abs() < 1e-4);
        assert!((lowest_eigenvalue_analytic(1.0, 2.0, 20.0) / 1.6489e-8 - 1.0).abs() < 1e-4);
        assert_eq!(lowest_eigenvalue_analytic(3.0, 1.5, 0.0), 13.5);
    }

    #[test]
    fn numeric_eigenvalue_of_constant_operator() {
        // Dirichlet spectrum ν² + (nπ/T)²
        let op = StabilityOperator::constant(1.0, 10.0).unwrap();
        let l = lowest_eigenvalue_numeric(&op, 2000).unwrap();
        let exact = 1.0 + (std::f64::consts::PI / 10.0).powi(2);
        assert!((l.value - exact).abs() < 1e-5);
        assert!((l.value - 1.0987).abs() < 1e-4);
    }

    #[test]
    fn numeric_eigenvalue_warns_when_unresolved() {
        let r = lowest_eigenvalue_numeric(&instanton_operator(1.0, 40.0), 4000);
        assert!(matches!(r, Err(FluctuationError::ResolutionWarning { .. })));
        assert!(matches!(
            lowest_eigenvalue_numeric(&instanton_operator(1.0, 10.0), 500),
            Err(FluctuationError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn spectral_gap_above_near_zero_mode() {
        let op = instanton_operator(1.0, 10.0);
        let e = op.discretize(2000).lowest_eigenvalues(2).unwrap();
        assert!(e[1] > 1e3 * e[0]);
    }

    #[test]
    fn second_solution_wronskian_and_growth() {
        let zm = instanton::zero_mode(&closed_form_instanton(1.0, 0.0).unwrap()).unwrap();
        let y = second_solution(&zm);
        for &tau in &[-3.0, 0.0, 2.0] {
            assert!((y.wronskian(tau).unwrap() - 1.0).abs() < 1e-8);
        }
        // y ≈ e^{2ωτ}/(4ωC) and -e^{-ωτ}/(2ωD)
        let plus = y.value(10.0).unwrap() * 8.0 / (20f64).exp();
        assert!((plus - 1.0).abs() < 1e-4, "{plus}");
        let minus = y.value(-12.0).unwrap() * 4.0 / (12f64).exp();
        assert!((minus + 1.0).abs() < 1e-4, "{minus}");
    }

    #[test]
    fn jacobian_values() {
        assert!((collective_jacobian(2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-15);
        assert!((collective_jacobian(0.25) - 0.19947).abs() < 1e-5);
        assert!((collective_jacobian(2.5) - 0.63078).abs() < 1e-5);
    }

    #[test]
    fn report_identities() {
        let r = determinant_report(1.0, 30.0, None).unwrap();
        assert!((r.reduced_ratio * r.lowest_eigenvalue / r.raw_ratio - 1.0).abs() < 1e-12);
        assert!(r.raw_ratio > 0.0 && r.lowest_eigenvalue > 0.0 && r.reduced_ratio > 0.0);
        assert!((r.jacobian - 0.19947).abs() < 1e-5);
        assert_eq!(r.nu, 1.5);
        // f ~ e^{ωT/2}/4ω and g ~ e^{3ωT/2}/(3ω), so raw ~ (3/4) e^{-ωT}
        assert!((r.raw_ratio / (0.75 * (-30f64).exp()) - 1.0).abs() < 1e-6);
        assert!(matches!(
            determinant_report(1.0, 10.0, None),
            Err(FluctuationError::BoxTooSmall { .. })
        ));
    }

    #[test]
    fn box_edges_reach_asymptotic_curvature() {
        let op = instanton_operator(2.0, 20.0);
        let (a, b) = op.interval();
        let (wa, wb) = op.asymptotic_curvatures();
        assert_eq!((wa, wb), (4.0, 16.0));
        assert!((op.curvature(a) - wa).abs() < 1e-8);
        assert!((op.curvature(b) - wb).abs() < 1e-8);
    }
}
