//! Instanton and anti-instanton solutions of the euclidean equation of
//! motion, their action, zero mode and tail constants.
//!
//! A profile is stored as a base kink running from `from` to `to` and
//! centred at zero, plus a time reversal, a space reflection and a shift.
//! Evaluation returns the position together with `ln |dx/dτ|`, since the
//! velocity has to stay accurate in relative terms deep in the tails where
//! the position itself equals the well to machine precision.

use std::sync::Arc;

use thiserror::Error;

use crate::numerics::quadrature::{self, kronrod15, QuadratureError, Tolerance};
use crate::numerics::softplus;
use crate::potentials::{Family, PotentialError, PotentialModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstantonError {
    #[error("wells {from} and {to} are not adjacent")]
    NonAdjacentWells { from: f64, to: f64 },
    #[error(transparent)]
    Potential(PotentialError),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(#[from] QuadratureError),
    #[error("tail plateau on the {side} side varies by {variation:e} (limit {limit:e})")]
    FitUnstable {
        side: TailSide,
        variation: f64,
        limit: f64,
    },
    #[error("tolerance must be positive (got {0})")]
    InvalidTolerance(f64),
}

impl From<PotentialError> for InstantonError {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::NonAdjacentWells { from, to } => {
                InstantonError::NonAdjacentWells { from, to }
            }
            other => InstantonError::Potential(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    Past,
    Future,
}

impl std::fmt::Display for TailSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TailSide::Past => "tau -> -inf",
            TailSide::Future => "tau -> +inf",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// `τ -> 2τ_c - τ`: the anti-instanton.
    TimeReverse,
    /// `x -> -x`.
    SpaceReflect,
    Translate(f64),
}

/// Tabulation range in units of `1/ω`.
pub const TABULATION_HORIZON: f64 = 40.0;
/// Window, in units of `1/ω`, over which the tail constants are read off.
pub const FIT_WINDOW: (f64, f64) = (8.0, 15.0);

/// Stretch applied to [`FIT_WINDOW`]. The triple-well tails carry
/// corrections of relative order `e^{-2ω|τ|}`; the double-well kink only
/// `e^{-ω|τ|}`, which needs twice the distance to reach the same plateau.
fn fit_window_stretch(family: Family) -> f64 {
    match family {
        Family::DoubleWell => 2.0,
        _ => 1.0,
    }
}

/// Largest relative variation accepted across the fit window.
pub const FIT_PLATEAU_LIMIT: f64 = 1e-6;

/// Position and log-speed of a profile at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub x: f64,
    pub ln_speed: f64,
    /// Sign of `dx/dτ`.
    pub direction: f64,
}

impl ProfilePoint {
    pub fn velocity(&self) -> f64 {
        self.direction * self.ln_speed.exp()
    }
}

#[derive(Debug)]
enum Shape {
    /// `x = sqrt((1 + tanh ωu)/2)`, the triple-well kink from 0 to 1.
    ClosedForm {
        omega: f64,
    },
    Numeric(NumericShape),
}

impl Shape {
    fn eval(&self, u: f64) -> ProfilePoint {
        match self {
            Shape::ClosedForm { omega } => {
                // x² = σ(2ωu) with σ the logistic function
                let z = 2.0 * omega * u;
                let ln_sigma = -softplus(-z);
                let ln_one_minus_sigma = -softplus(z);
                ProfilePoint {
                    x: (0.5 * ln_sigma).exp(),
                    ln_speed: omega.ln() + 0.5 * ln_sigma + ln_one_minus_sigma,
                    direction: 1.0,
                }
            }
            Shape::Numeric(n) => n.eval(u),
        }
    }
}

/// One half of a numeric kink: the approach to a single well, tabulated as
/// elapsed time against `ℓ = ln |x - well|`.
#[derive(Debug)]
struct Branch {
    model: PotentialModel,
    well: f64,
    /// `x = well + sign · exp(ℓ)`
    sign: f64,
    frequency: f64,
    ln_offsets: Vec<f64>,
    elapsed: Vec<f64>,
}

const BRANCH_STEP: f64 = 1.0 / 16.0;

impl Branch {
    /// `dτ/dℓ` up to sign: `|x - well| / sqrt(2V(x))`. Tends to `1/μ` at the
    /// well, so the log-divergent time integral becomes a bounded one.
    fn dwell(&self, ln_offset: f64) -> f64 {
        (ln_offset - self.model.ln_speed_near(self.well, self.sign, ln_offset)).exp()
    }

    fn build(
        model: PotentialModel,
        well: f64,
        anchor: f64,
        horizon: f64,
        tolerance: f64,
    ) -> Result<Self, InstantonError> {
        let sign = (anchor - well).signum();
        let frequency = model.well_at(well)?.frequency;
        let mut branch = Branch {
            model,
            well,
            sign,
            frequency,
            ln_offsets: vec![(anchor - well).abs().ln()],
            elapsed: vec![0.0],
        };
        let tol = Tolerance::relative(tolerance);
        while *branch.elapsed.last().unwrap() < horizon {
            let hi = *branch.ln_offsets.last().unwrap();
            let lo = hi - BRANCH_STEP;
            let dt = quadrature::integrate(|l| branch.dwell(l), lo, hi, tol)?;
            let t = branch.elapsed.last().unwrap() + dt;
            branch.ln_offsets.push(lo);
            branch.elapsed.push(t);
        }
        Ok(branch)
    }

    /// `ℓ` reached after time `t ≥ 0` from the anchor.
    fn ln_offset_at(&self, t: f64) -> f64 {
        let last = self.elapsed.len() - 1;
        if t >= self.elapsed[last] {
            // past the table the approach is a pure exponential
            return self.ln_offsets[last] - self.frequency * (t - self.elapsed[last]);
        }
        let k = self.elapsed.partition_point(|&e| e <= t) - 1;
        let (l_hi, l_lo) = (self.ln_offsets[k], self.ln_offsets[k + 1]);
        let (t_k, t_next) = (self.elapsed[k], self.elapsed[k + 1]);
        if t == t_k {
            return l_hi;
        }
        let mut l = l_hi + (l_lo - l_hi) * (t - t_k) / (t_next - t_k);
        for _ in 0..30 {
            let (integral, _) = kronrod15(&|s| self.dwell(s), l, l_hi);
            let residual = t_k + integral - t;
            let step = residual / self.dwell(l);
            let next = (l + step).clamp(l_lo, l_hi);
            let done = (next - l).abs() <= 4.0 * f64::EPSILON * l.abs().max(1.0);
            l = next;
            if done {
                break;
            }
        }
        l
    }

    fn point(&self, t: f64, direction: f64) -> ProfilePoint {
        let l = self.ln_offset_at(t);
        ProfilePoint {
            x: self.well + self.sign * l.exp(),
            ln_speed: self.model.ln_speed_near(self.well, self.sign, l),
            direction,
        }
    }
}

#[derive(Debug)]
struct NumericShape {
    /// Sign of `to - from`.
    direction: f64,
    past: Branch,
    future: Branch,
}

impl NumericShape {
    fn eval(&self, u: f64) -> ProfilePoint {
        if u >= 0.0 {
            self.future.point(u, self.direction)
        } else {
            self.past.point(-u, self.direction)
        }
    }
}

/// A single instanton or anti-instanton.
#[derive(Debug, Clone)]
pub struct InstantonProfile {
    model: PotentialModel,
    shape: Arc<Shape>,
    center: f64,
    time_sign: f64,
    space_sign: f64,
    action: f64,
    base_endpoints: (f64, f64),
    base_decay_rates: (f64, f64),
    base_amplitudes: (f64, f64),
}

/// The 0 → 1 triple-well instanton `x(τ) = sqrt((1 + tanh ω(τ - τ_c))/2)`.
pub fn closed_form_instanton(omega: f64, tau_c: f64) -> Result<InstantonProfile, InstantonError> {
    let model = PotentialModel::triple_well(omega)?;
    let amplitude = 2.0 * omega.sqrt();
    Ok(InstantonProfile {
        model,
        shape: Arc::new(Shape::ClosedForm { omega }),
        center: tau_c,
        time_sign: 1.0,
        space_sign: 1.0,
        action: 0.25 * omega,
        base_endpoints: (0.0, 1.0),
        base_decay_rates: (omega, 2.0 * omega),
        base_amplitudes: (amplitude, amplitude),
    })
}

/// Builds the kink from `from_well` to `to_well` by quadrature of
/// `dτ = dx / sqrt(2V)` outwards from the anchor position, then inverts the
/// tabulated `τ(x)` on demand.
pub fn numeric_instanton(
    model: &PotentialModel,
    from_well: f64,
    to_well: f64,
    tau_c: f64,
    tolerance: f64,
) -> Result<InstantonProfile, InstantonError> {
    let anchor = model.default_anchor(from_well, to_well)?;
    numeric_instanton_anchored(model, from_well, to_well, anchor, tau_c, tolerance)
}

/// [`numeric_instanton`] with an explicit position for `x(τ_c)`.
pub fn numeric_instanton_anchored(
    model: &PotentialModel,
    from_well: f64,
    to_well: f64,
    anchor: f64,
    tau_c: f64,
    tolerance: f64,
) -> Result<InstantonProfile, InstantonError> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(InstantonError::InvalidTolerance(tolerance));
    }
    let (from, to) = model.check_adjacent(from_well, to_well)?;
    let (lo, hi) = if from_well < to_well {
        (from_well, to_well)
    } else {
        (to_well, from_well)
    };
    assert!(
        anchor > lo && anchor < hi,
        "anchor {anchor} must lie strictly between the wells"
    );
    let horizon = TABULATION_HORIZON / model.omega();
    let shape = NumericShape {
        direction: (to_well - from_well).signum(),
        past: Branch::build(*model, from_well, anchor, horizon, tolerance)?,
        future: Branch::build(*model, to_well, anchor, horizon, tolerance)?,
    };
    let action = quadrature::integrate(
        |x| model.bogomolny_speed(x),
        lo,
        hi,
        Tolerance::relative(tolerance),
    )?;
    let mut profile = InstantonProfile {
        model: *model,
        shape: Arc::new(Shape::Numeric(shape)),
        center: tau_c,
        time_sign: 1.0,
        space_sign: 1.0,
        action,
        base_endpoints: (from_well, to_well),
        base_decay_rates: (from.frequency, to.frequency),
        base_amplitudes: (f64::NAN, f64::NAN),
    };
    profile.base_amplitudes = fit_asymptotic_constants(&profile)?;
    Ok(profile)
}

impl InstantonProfile {
    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn action(&self) -> f64 {
        self.action
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(*self.shape, Shape::ClosedForm { .. })
    }

    fn reversed(&self) -> bool {
        self.time_sign < 0.0
    }

    /// `(x_i, x_f)`: the wells approached as `τ -> -∞` and `τ -> +∞`.
    pub fn endpoints(&self) -> (f64, f64) {
        let (a, b) = self.base_endpoints;
        let (a, b) = (self.space_sign * a, self.space_sign * b);
        if self.reversed() {
            (b, a)
        } else {
            (a, b)
        }
    }

    /// `(μ₋, μ₊)`: exponential approach rates of `dx/dτ` in the past and future.
    pub fn decay_rates(&self) -> (f64, f64) {
        let (a, b) = self.base_decay_rates;
        if self.reversed() {
            (b, a)
        } else {
            (a, b)
        }
    }

    /// `(D, C)` with `x₀ ≈ D e^{μ₋(τ-τ_c)}` as `τ -> -∞` and
    /// `x₀ ≈ C e^{-μ₊(τ-τ_c)}` as `τ -> +∞`.
    pub fn amplitude_constants(&self) -> (f64, f64) {
        let (a, b) = self.base_amplitudes;
        if self.reversed() {
            (b, a)
        } else {
            (a, b)
        }
    }

    pub fn point(&self, tau: f64) -> ProfilePoint {
        let u = self.time_sign * (tau - self.center);
        let p = self.shape.eval(u);
        ProfilePoint {
            x: self.space_sign * p.x,
            ln_speed: p.ln_speed,
            direction: self.space_sign * self.time_sign * p.direction,
        }
    }

    pub fn position(&self, tau: f64) -> f64 {
        self.point(tau).x
    }

    pub fn velocity(&self, tau: f64) -> f64 {
        self.point(tau).velocity()
    }

    pub fn ln_speed(&self, tau: f64) -> f64 {
        self.point(tau).ln_speed
    }

    /// Sign of `dx/dτ`, constant along the kink.
    pub fn direction(&self) -> f64 {
        self.point(self.center).direction
    }

    pub fn transform(&self, op: Transform) -> InstantonProfile {
        let mut out = self.clone();
        match op {
            Transform::TimeReverse => out.time_sign = -out.time_sign,
            Transform::SpaceReflect => out.space_sign = -out.space_sign,
            Transform::Translate(dt) => out.center += dt,
        }
        out
    }

    /// Tabulated half-width `40/ω` around the centre.
    pub fn horizon(&self) -> f64 {
        TABULATION_HORIZON / self.model.omega()
    }

    /// `∫ (dx/dτ)² dτ` over the whole line: quadrature over the tabulated
    /// range plus the exponential tails in closed form.
    pub fn action_time_integral(&self, tolerance: f64) -> Result<f64, InstantonError> {
        integrate_over_line(self, |tau| (2.0 * self.ln_speed(tau)).exp(), 2.0, tolerance)
    }

    /// Largest `|dx/dτ - sqrt(2V(x))|`, relative to `max |dx/dτ|`, over
    /// `samples` points in `[τ_c - half_width, τ_c + half_width]`. The
    /// derivative is a five-point finite difference of the position, so it
    /// does not reuse the profile's own speed.
    pub fn bogomolny_residual(&self, half_width: f64, samples: usize) -> f64 {
        let h = 1e-3 / self.model.omega();
        let mut worst = 0.0f64;
        let mut largest = 0.0f64;
        for i in 0..samples {
            let tau = self.center - half_width + 2.0 * half_width * i as f64 / (samples - 1) as f64;
            let d = (self.position(tau - 2.0 * h) - 8.0 * self.position(tau - h)
                + 8.0 * self.position(tau + h)
                - self.position(tau + 2.0 * h))
                / (12.0 * h);
            let x = self.position(tau);
            let expected = self.direction() * (2.0 * self.model.evaluate(x)).sqrt();
            worst = worst.max((d - expected).abs());
            largest = largest.max(d.abs());
        }
        worst / largest
    }
}

/// `∫ f` over the real line for integrands decaying like
/// `exp(-power · μ |τ - τ_c|)` in both tails.
fn integrate_over_line<F: Fn(f64) -> f64>(
    profile: &InstantonProfile,
    f: F,
    power: f64,
    tolerance: f64,
) -> Result<f64, InstantonError> {
    let c = profile.center();
    let horizon = profile.horizon();
    let (mu_past, mu_future) = profile.decay_rates();
    let tol = Tolerance::relative(tolerance).with_abs(1e-300);
    let mut total = 0.0;
    // unit-sized panels keep the recursion shallow
    let pieces = (2.0 * horizon * profile.model.omega()).ceil().max(2.0) as usize;
    for i in 0..pieces {
        let a = c - horizon + 2.0 * horizon * i as f64 / pieces as f64;
        let b = c - horizon + 2.0 * horizon * (i + 1) as f64 / pieces as f64;
        total += quadrature::integrate(&f, a, b, tol)?;
    }
    total += f(c - horizon) / (power * mu_past);
    total += f(c + horizon) / (power * mu_future);
    Ok(total)
}

/// Fits the tail constants from plateaus of `x₀(τ) e^{±μ(τ-τ_c)}`.
pub fn fit_asymptotic_constants(profile: &InstantonProfile) -> Result<(f64, f64), InstantonError> {
    let omega = profile.model.omega();
    let (mu_past, mu_future) = profile.decay_rates();
    let ln_scale = -0.5 * profile.action().ln();
    let c = profile.center();
    let stretch = fit_window_stretch(profile.model.family());
    const SAMPLES: usize = 29;
    let plateau = |side: TailSide, mu: f64| -> Result<f64, InstantonError> {
        let values: Vec<f64> = (0..SAMPLES)
            .map(|i| {
                let u = stretch
                    * (FIT_WINDOW.0
                        + (FIT_WINDOW.1 - FIT_WINDOW.0) * i as f64 / (SAMPLES - 1) as f64)
                    / omega;
                let tau = match side {
                    TailSide::Past => c - u,
                    TailSide::Future => c + u,
                };
                profile.ln_speed(tau) + ln_scale + mu * u
            })
            .collect();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let variation = (max - min).exp_m1();
        if !(variation <= FIT_PLATEAU_LIMIT) {
            return Err(InstantonError::FitUnstable {
                side,
                variation,
                limit: FIT_PLATEAU_LIMIT,
            });
        }
        Ok((values.iter().sum::<f64>() / SAMPLES as f64).exp())
    };
    Ok((
        plateau(TailSide::Past, mu_past)?,
        plateau(TailSide::Future, mu_future)?,
    ))
}

/// `(D, C)`: analytic for the closed form, fitted otherwise.
pub fn asymptotic_constants(profile: &InstantonProfile) -> Result<(f64, f64), InstantonError> {
    if profile.is_closed_form() {
        Ok(profile.amplitude_constants())
    } else {
        fit_asymptotic_constants(profile)
    }
}

/// The translation zero mode `x₀ = |dx/dτ| / sqrt(S)`, oriented positive.
#[derive(Debug, Clone)]
pub struct ZeroMode {
    profile: InstantonProfile,
    ln_scale: f64,
    norm_check: f64,
}

pub fn zero_mode(profile: &InstantonProfile) -> Result<ZeroMode, InstantonError> {
    let ln_scale = -0.5 * profile.action().ln();
    let norm_check = integrate_over_line(
        profile,
        |tau| (2.0 * (profile.ln_speed(tau) + ln_scale)).exp(),
        2.0,
        1e-12,
    )?;
    Ok(ZeroMode {
        profile: profile.clone(),
        ln_scale,
        norm_check,
    })
}

impl ZeroMode {
    pub fn profile(&self) -> &InstantonProfile {
        &self.profile
    }

    /// Computed `∫ x₀² dτ`.
    pub fn norm_check(&self) -> f64 {
        self.norm_check
    }

    pub fn ln_value(&self, tau: f64) -> f64 {
        self.profile.ln_speed(tau) + self.ln_scale
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.ln_value(tau).exp()
    }

    /// `dx₀/dτ`, using `d²x/dτ² = V'(x)` along a Bogomol'nyi solution.
    pub fn derivative(&self, tau: f64) -> f64 {
        let p = self.profile.point(tau);
        p.direction * self.profile.model().first_derivative(p.x) * self.ln_scale.exp()
    }

    /// Curvature of the stability operator, `V''(x_c(τ))`.
    pub fn curvature(&self, tau: f64) -> f64 {
        self.profile
            .model()
            .second_derivative(self.profile.position(tau))
    }

    /// Largest `|-x₀'' + V''(x_c) x₀|` over a uniform grid of spacing `h`
    /// on `[τ_c - half_width, τ_c + half_width]`, with `x₀''` from the
    /// three-point second difference.
    pub fn stability_residual(&self, h: f64, half_width: f64) -> f64 {
        let n = (2.0 * half_width / h).round() as usize;
        let start = self.profile.center() - half_width;
        let values: Vec<f64> = (0..=n).map(|i| self.value(start + i as f64 * h)).collect();
        (1..n)
            .map(|i| {
                let tau = start + i as f64 * h;
                let second = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
                (-second + self.curvature(tau) * values[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed(omega: f64) -> InstantonProfile {
        closed_form_instanton(omega, 0.0).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let p = closed(1.0);
        assert!((p.position(0.0) - 0.5f64.sqrt()).abs() < 1e-16);
        let expected = ((1.0 + 1f64.tanh()) / 2.0).sqrt();
        assert!((p.position(1.0) - expected).abs() < 1e-15);
        assert!((p.position(1.0) - 0.93851).abs() < 1e-5);
        assert_eq!(p.action(), 0.25);
        assert_eq!(p.decay_rates(), (1.0, 2.0));
        assert_eq!(p.amplitude_constants(), (2.0, 2.0));
        assert_eq!(closed(4.0).amplitude_constants(), (4.0, 4.0));
    }

    #[test]
    fn closed_form_velocity_is_derivative_of_profile() {
        let p = closed(1.3);
        for &tau in &[-2.0, -0.3, 0.0, 0.4, 1.7] {
            let h = 1e-5;
            let fd = (p.position(tau + h) - p.position(tau - h)) / (2.0 * h);
            assert!((fd - p.velocity(tau)).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_limits() {
        let p = closed(1.0);
        assert!(p.position(-30.0).abs() < 1e-10);
        assert!((p.position(30.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bogomolny_condition_holds_for_closed_form() {
        for &omega in &[0.5, 1.0, 3.0] {
            let r = closed(omega).bogomolny_residual(12.0 / omega, 401);
            assert!(r < 1e-10, "omega = {omega}: residual {r}");
        }
    }

    #[test]
    fn transforms() {
        let p = closed(1.0);
        let anti = p.transform(Transform::TimeReverse);
        assert_eq!(anti.endpoints(), (1.0, 0.0));
        assert_eq!(anti.action(), p.action());
        assert_eq!(anti.decay_rates(), (2.0, 1.0));
        assert!(anti.velocity(0.3) < 0.0);
        assert_eq!(anti.position(0.7), p.position(-0.7));

        let mirror = p.transform(Transform::SpaceReflect);
        assert_eq!(mirror.endpoints(), (0.0, -1.0));
        assert_eq!(mirror.position(0.2), -p.position(0.2));
        assert_eq!(mirror.action(), p.action());

        let shifted = p.transform(Transform::Translate(5.0));
        for &tau in &[-3.0, 0.0, 2.5, 7.0] {
            assert!((shifted.position(tau) - p.position(tau - 5.0)).abs() <= 1e-15);
        }
    }

    #[test]
    fn transforms_are_involutions() {
        let p = closed(2.0).transform(Transform::Translate(0.3));
        let tt = p
            .transform(Transform::TimeReverse)
            .transform(Transform::TimeReverse);
        let ss = p
            .transform(Transform::SpaceReflect)
            .transform(Transform::SpaceReflect);
        for i in 0..50 {
            let tau = -5.0 + 0.2 * i as f64;
            assert_eq!(tt.position(tau), p.position(tau));
            assert_eq!(ss.position(tau), p.position(tau));
            assert_eq!(tt.velocity(tau), p.velocity(tau));
        }
    }

    #[test]
    fn numeric_rejects_non_adjacent_wells() {
        let v = PotentialModel::triple_well(1.0).unwrap();
        let r = numeric_instanton(&v, -1.0, 1.0, 0.0, 1e-12);
        assert!(matches!(r, Err(InstantonError::NonAdjacentWells { .. })));
        assert!(matches!(
            numeric_instanton(&v, 0.0, 1.0, 0.0, -1.0),
            Err(InstantonError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn numeric_matches_closed_form() {
        let v = PotentialModel::triple_well(1.0).unwrap();
        let numeric = numeric_instanton(&v, 0.0, 1.0, 0.0, 1e-13).unwrap();
        let exact = closed(1.0);
        let mut worst = 0.0f64;
        for i in 0..=400 {
            let tau = -20.0 + 0.1 * i as f64;
            worst = worst.max((numeric.position(tau) - exact.position(tau)).abs());
        }
        assert!(worst < 1e-8, "sup-norm {worst}");
        assert!((numeric.action() - 0.25).abs() < 1e-10);
    }

    #[test]
    fn numeric_tails_keep_relative_precision() {
        let v = PotentialModel::triple_well(1.0).unwrap();
        let numeric = numeric_instanton(&v, 0.0, 1.0, 0.0, 1e-13).unwrap();
        let exact = closed(1.0);
        for &tau in &[-25.0, -12.0, 12.0, 25.0, 45.0] {
            let a = numeric.ln_speed(tau);
            let b = exact.ln_speed(tau);
            assert!((a - b).abs() < 1e-9, "tau = {tau}: {a} vs {b}");
        }
        let (d, c) = numeric.amplitude_constants();
        assert!(
            (d - 2.0).abs() < 1e-6 && (c - 2.0).abs() < 1e-6,
            "({d}, {c})"
        );
    }

    #[test]
    fn numeric_double_well_kink() {
        // (ω²/8)(x²-1)² has the kink x = tanh(ωτ/2) with action 2ω/3
        let omega = 2.0;
        let v = PotentialModel::double_well(omega).unwrap();
        let p = numeric_instanton(&v, -1.0, 1.0, 0.0, 1e-13).unwrap();
        for &tau in &[-6.0, -1.0, 0.0, 0.5, 3.0] {
            assert!((p.position(tau) - (0.5 * omega * tau).tanh()).abs() < 1e-10);
        }
        assert!((p.action() - 2.0 * omega / 3.0).abs() < 1e-12);
        assert_eq!(p.decay_rates(), (omega, omega));
        let (d, c) = p.amplitude_constants();
        let expected = (6.0 * omega).sqrt();
        assert!((d - expected).abs() < 1e-6 * expected && (c - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn zero_mode_normalization_and_tails() {
        let zm = zero_mode(&closed(1.0)).unwrap();
        assert!((zm.norm_check() - 1.0).abs() < 1e-8);
        // x₀ ≈ 2√ω e^{-2ωτ} and 2√ω e^{ωτ}
        assert!((zm.value(14.0) * (28.0f64).exp() - 2.0).abs() < 1e-6);
        assert!((zm.value(-14.0) * (14.0f64).exp() - 2.0).abs() < 1e-6);
        assert!(zm.value(-60.0) > 0.0 && zm.value(60.0) > 0.0);
    }

    #[test]
    fn zero_mode_derivative() {
        let zm = zero_mode(&closed(1.5).transform(Transform::TimeReverse)).unwrap();
        for &tau in &[-1.0, 0.2, 0.9] {
            let h = 1e-5;
            let fd = (zm.value(tau + h) - zm.value(tau - h)) / (2.0 * h);
            assert!((fd - zm.derivative(tau)).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_mode_annihilated_by_stability_operator() {
        let zm = zero_mode(&closed(1.0)).unwrap();
        let r = zm.stability_residual(1e-3, 20.0);
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn fitted_constants_match_analytic() {
        for &omega in &[1.0, 4.0] {
            let (d, c) = fit_asymptotic_constants(&closed(omega)).unwrap();
            let expected = 2.0 * omega.sqrt();
            assert!((d - expected).abs() < 1e-6);
            assert!((c - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn action_two_ways() {
        let p = closed(1.0);
        let t = p.action_time_integral(1e-13).unwrap();
        assert!((t - 0.25).abs() / 0.25 < 1e-10, "{t}");
    }
}
