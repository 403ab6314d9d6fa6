//! Brute-force reference numbers: finite-difference diagonalization of
//! `H = -½ d²/dx² + V(x)` and of the discretized stability operators, and a
//! side-by-side table of exact and dilute-gas levels.
//!
//! Energies are Richardson-extrapolated from grids of spacing `h` and about
//! `2h`; the second-order scheme alone leaves errors of order `h²`, which at
//! the default resolution sit well above `1e-6`.

use serde::Serialize;
use thiserror::Error;

use crate::dilute_gas::{self, DiluteGasError};
use crate::fluctuations::{FluctuationError, StabilityOperator};
use crate::instanton::closed_form_instanton;
use crate::numerics::tridiag::{EigenError, SymTridiagonal};
use crate::potentials::{Family, PotentialModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("eigensolver failed: {0}")]
    Nonconvergence(#[from] EigenError),
    #[error("state {state} leaks {leakage:e} at the domain edge; enlarge L")]
    UnconvergedBoundary { state: usize, leakage: f64 },
    #[error("eigenvalues {index} and {next} are not strictly ascending")]
    Degenerate { index: usize, next: usize },
    #[error(transparent)]
    Fluctuation(#[from] FluctuationError),
    #[error(transparent)]
    DiluteGas(#[from] DiluteGasError),
}

/// Leakage above which a state is reported as unconverged.
pub const LEAKAGE_LIMIT: f64 = 1e-8;

/// Uniform grid of `points` nodes on `[-half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 200;

    pub fn new(half_width: f64, points: usize) -> Self {
        GridSpec { half_width, points }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    /// Checks the point count and that `h < 0.2 / (largest well frequency)`.
    pub fn validate(&self, model: &PotentialModel) -> Result<(), OracleError> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(OracleError::InvalidGrid(format!(
                "half-width must be positive (got {})",
                self.half_width
            )));
        }
        if self.points < Self::MIN_POINTS {
            return Err(OracleError::InvalidGrid(format!(
                "need at least {} points (got {})",
                Self::MIN_POINTS,
                self.points
            )));
        }
        let max_frequency = model
            .wells()
            .iter()
            .map(|w| w.frequency)
            .fold(0.0, f64::max);
        let limit = 0.2 / max_frequency;
        if !(self.spacing() < limit) {
            return Err(OracleError::InvalidGrid(format!(
                "spacing {} does not resolve frequency {} (need h < {})",
                self.spacing(),
                max_frequency,
                limit
            )));
        }
        Ok(())
    }

    /// Interior nodes `x₁ … x_{N-2}`; the end nodes carry the Dirichlet
    /// condition.
    fn interior(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..self.points - 1)
            .map(|i| -self.half_width + i as f64 * h)
            .collect()
    }

    /// The grid with about twice the spacing.
    fn coarse(&self) -> GridSpec {
        GridSpec {
            half_width: self.half_width,
            points: (self.points - 1) / 2 + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSpectrum {
    /// Richardson-extrapolated eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Eigenvalues on the requested grid alone.
    pub raw_energies: Vec<f64>,
    pub parities: Vec<Parity>,
    /// `max |ψ|` over the first and last interior nodes, for unit-max `ψ`.
    pub boundary_leakage: Vec<f64>,
    pub grid: GridSpec,
}

fn hamiltonian(model: &PotentialModel, grid: &GridSpec) -> SymTridiagonal {
    let h = grid.spacing();
    let kinetic = 0.5 / (h * h);
    let x = grid.interior();
    let diag = x
        .iter()
        .map(|&x| 2.0 * kinetic + model.evaluate(x))
        .collect();
    SymTridiagonal::new(diag, vec![-kinetic; x.len() - 1])
}

fn richardson(fine: f64, coarse: f64, h: f64, h_coarse: f64) -> f64 {
    let (a, b) = (h * h, h_coarse * h_coarse);
    (b * fine - a * coarse) / (b - a)
}

/// Lowest `m` eigenpairs of `H` on the grid, with parities and leakage.
pub fn diagonalize(
    model: &PotentialModel,
    grid: GridSpec,
    m: usize,
) -> Result<OracleSpectrum, OracleError> {
    grid.validate(model)?;
    if m == 0 || m > grid.points / 10 {
        return Err(OracleError::InvalidGrid(format!(
            "can report between 1 and {} states (requested {m})",
            grid.points / 10
        )));
    }
    let fine = hamiltonian(model, &grid);
    let coarse_grid = grid.coarse();
    let coarse = hamiltonian(model, &coarse_grid);
    let raw_energies = fine.lowest_eigenvalues(m)?;
    let coarse_energies = coarse.lowest_eigenvalues(m)?;
    let energies: Vec<f64> = raw_energies
        .iter()
        .zip(&coarse_energies)
        .map(|(&f, &c)| richardson(f, c, grid.spacing(), coarse_grid.spacing()))
        .collect();
    for i in 1..m {
        if !(raw_energies[i] > raw_energies[i - 1]) {
            return Err(OracleError::Degenerate {
                index: i - 1,
                next: i,
            });
        }
    }

    let mut parities = Vec::with_capacity(m);
    let mut boundary_leakage = Vec::with_capacity(m);
    for (state, &e) in raw_energies.iter().enumerate() {
        let psi = fine.eigenvector(e)?;
        let n = psi.len();
        // the interior grid is symmetric: node i mirrors node n-1-i
        let overlap: f64 = (0..n).map(|i| psi[i] * psi[n - 1 - i]).sum();
        parities.push(if overlap >= 0.0 {
            Parity::Even
        } else {
            Parity::Odd
        });
        let peak = psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let leakage = psi[0].abs().max(psi[n - 1].abs()) / peak;
        if !(leakage < LEAKAGE_LIMIT) {
            return Err(OracleError::UnconvergedBoundary { state, leakage });
        }
        boundary_leakage.push(leakage);
    }
    Ok(OracleSpectrum {
        energies,
        raw_energies,
        parities,
        boundary_leakage,
        grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenproductRatio {
    /// `Σ ln(ε_j / ε_j^ref)` on the requested grid.
    pub ln_raw: f64,
    /// The same on grids of about twice and four times the spacing.
    pub ln_coarse: f64,
    pub ln_coarser: f64,
    /// Two-level Richardson (Romberg) combination of the three.
    pub ln_extrapolated: f64,
}

impl EigenproductRatio {
    pub fn raw(&self) -> f64 {
        self.ln_raw.exp()
    }

    pub fn extrapolated(&self) -> f64 {
        self.ln_extrapolated.exp()
    }
}

fn ln_product_ratio(
    a: &StabilityOperator,
    b: &StabilityOperator,
    interior: usize,
) -> Result<f64, OracleError> {
    let ea = a.discretize(interior).all_eigenvalues()?;
    let eb = b.discretize(interior).all_eigenvalues()?;
    if ea[0] <= 0.0 || eb[0] <= 0.0 {
        return Err(OracleError::InvalidGrid(format!(
            "{interior} interior points leave a non-positive eigenvalue"
        )));
    }
    Ok(ea.iter().zip(&eb).map(|(x, y)| (x / y).ln()).sum())
}

/// `∏ ε_j / ∏ ε_j^ref` over every mode of the Dirichlet discretizations of
/// two operators on the same `grid_points`-node grid over `[-T/2, T/2]`.
pub fn eigenproduct_ratio(
    op: &StabilityOperator,
    reference: &StabilityOperator,
    grid_points: usize,
) -> Result<EigenproductRatio, OracleError> {
    if grid_points < GridSpec::MIN_POINTS {
        return Err(OracleError::InvalidGrid(format!(
            "need at least {} points (got {grid_points})",
            GridSpec::MIN_POINTS
        )));
    }
    let points = [grid_points, (grid_points + 1) / 2, (grid_points + 3) / 4];
    let mut ln = [0.0; 3];
    let mut h = [0.0; 3];
    for i in 0..3 {
        ln[i] = ln_product_ratio(op, reference, points[i] - 2)?;
        h[i] = op.big_t() / (points[i] - 1) as f64;
    }
    // O(h²) removed pairwise, then O(h⁴) between the two improved values
    let first = richardson(ln[0], ln[1], h[0], h[1]);
    let second = richardson(ln[1], ln[2], h[1], h[2]);
    let (a, b) = (h[0].powi(4), h[1].powi(4));
    Ok(EigenproductRatio {
        ln_raw: ln[0],
        ln_coarse: ln[1],
        ln_coarser: ln[2],
        ln_extrapolated: (b * first - a * second) / (b - a),
    })
}

/// The eigenproduct ratio between the 0 → 1 triple-well instanton operator
/// and the constant reference `ν = 3ω/2`.
pub fn stability_eigenproduct_ratio(
    omega: f64,
    big_t: f64,
    grid_points: usize,
) -> Result<EigenproductRatio, OracleError> {
    let profile = closed_form_instanton(omega, 0.0).map_err(FluctuationError::from)?;
    let spacing = big_t / (grid_points.max(2) - 1) as f64;
    if !(spacing < 0.05 / omega) {
        return Err(OracleError::InvalidGrid(format!(
            "{grid_points} points do not resolve the instanton core on T = {big_t}"
        )));
    }
    let op = StabilityOperator::instanton(&profile, big_t)?;
    let reference = StabilityOperator::constant(1.5 * omega, big_t)?;
    eigenproduct_ratio(&op, &reference, grid_points)
}

/// `d ln(E₂ - E₀)/dω` of the predicted triplet, by a Richardson-improved
/// central difference of the pipeline output.
pub fn predicted_log_slope(omega: f64) -> Result<f64, OracleError> {
    let f = |w: f64| -> Result<f64, OracleError> {
        let s = dilute_gas::predicted_spectrum(w)?;
        Ok((s.levels[2] - s.levels[0]).ln())
    };
    let step = 2e-3 * omega;
    let central =
        |h: f64| -> Result<f64, OracleError> { Ok((f(omega + h)? - f(omega - h)?) / (2.0 * h)) };
    let wide = central(step)?;
    let narrow = central(0.5 * step)?;
    Ok((4.0 * narrow - wide) / 3.0)
}

/// `d ln(2ωd)/dω = -1/4 + 3/(2ω)`.
pub fn predicted_log_slope_analytic(omega: f64) -> f64 {
    -0.25 + 1.5 / omega
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub omega: f64,
    pub grid: GridSpec,
    pub exact_levels: [f64; 3],
    pub exact_parities: [Parity; 3],
    pub predicted_levels: [f64; 3],
    /// `exact - predicted`, level by level.
    pub differences: [f64; 3],
    pub exact_splitting: f64,
    /// `2ωd`.
    pub predicted_splitting: f64,
    /// The splitting with the one-instanton weight `√(4/3π)` in place of
    /// the density's `√(8/3π)`.
    pub alternative_predicted_splitting: f64,
    pub density: f64,
    pub dilute: bool,
    /// Harmonic estimate in the central well, `ω/2`.
    pub central_harmonic: f64,
    /// Harmonic estimate in either lateral well, `2ω/2 = ω`.
    pub lateral_harmonic: f64,
    pub log_slope_numeric: f64,
    pub log_slope_analytic: f64,
}

impl ComparisonTable {
    pub const CSV_HEADER: &'static str = "omega,level,exact,parity,predicted,difference";
}

/// Exact and predicted lowest triplets side by side. Reports the
/// differences; it does not judge them.
pub fn compare_report(omega: f64, grid: GridSpec) -> Result<ComparisonTable, OracleError> {
    let model = PotentialModel::new(Family::TripleWell, omega)
        .map_err(|e| OracleError::InvalidGrid(e.to_string()))?;
    let exact = diagonalize(&model, grid, 3)?;
    let predicted = dilute_gas::predicted_spectrum(omega)?;
    let exact_levels = [exact.energies[0], exact.energies[1], exact.energies[2]];
    let differences = [
        exact_levels[0] - predicted.levels[0],
        exact_levels[1] - predicted.levels[1],
        exact_levels[2] - predicted.levels[2],
    ];
    let predicted_splitting = predicted.levels[2] - predicted.levels[0];
    Ok(ComparisonTable {
        omega,
        grid,
        exact_levels,
        exact_parities: [exact.parities[0], exact.parities[1], exact.parities[2]],
        predicted_levels: predicted.levels,
        differences,
        exact_splitting: exact_levels[2] - exact_levels[0],
        predicted_splitting,
        alternative_predicted_splitting: predicted_splitting / std::f64::consts::SQRT_2,
        density: predicted.density,
        dilute: predicted.dilute,
        central_harmonic: 0.5 * omega,
        lateral_harmonic: omega,
        log_slope_numeric: predicted_log_slope(omega)?,
        log_slope_analytic: predicted_log_slope_analytic(omega),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluctuations::{gy_terminal, reference_terminal};

    #[test]
    fn harmonic_levels() {
        let model = PotentialModel::harmonic(1.0).unwrap();
        let s = diagonalize(&model, GridSpec::new(10.0, 2000), 5).unwrap();
        for (n, e) in s.energies.iter().enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-6, "n={n}: {e}");
        }
        assert_eq!(
            s.parities,
            vec![
                Parity::Even,
                Parity::Odd,
                Parity::Even,
                Parity::Odd,
                Parity::Even
            ]
        );
    }

    #[test]
    fn second_order_convergence() {
        let model = PotentialModel::harmonic(1.0).unwrap();
        let coarse = diagonalize(&model, GridSpec::new(10.0, 1001), 1).unwrap();
        let fine = diagonalize(&model, GridSpec::new(10.0, 2001), 1).unwrap();
        let ratio = (coarse.raw_energies[0] - 0.5) / (fine.raw_energies[0] - 0.5);
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn grid_guards() {
        let model = PotentialModel::triple_well(10.0).unwrap();
        assert!(matches!(
            GridSpec::new(3.0, 100).validate(&model),
            Err(OracleError::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(30.0, 1000).validate(&model),
            Err(OracleError::InvalidGrid(_))
        ));
        assert!(diagonalize(&model, GridSpec::new(3.0, 4000), 401).is_err());
    }

    #[test]
    fn leakage_is_detected() {
        let model = PotentialModel::harmonic(1.0).unwrap();
        let r = diagonalize(&model, GridSpec::new(3.0, 1000), 3);
        assert!(
            matches!(r, Err(OracleError::UnconvergedBoundary { .. })),
            "{r:?}"
        );
    }

    #[test]
    fn triple_well_parities() {
        let model = PotentialModel::triple_well(10.0).unwrap();
        let s = diagonalize(&model, GridSpec::new(3.0, 4000), 3).unwrap();
        assert_eq!(s.parities[0], Parity::Even);
        assert_eq!(s.parities[1], Parity::Odd);
        assert!(s.energies[0] < s.energies[1] && s.energies[1] < s.energies[2]);
    }

    #[test]
    fn identical_operators_give_unit_ratio() {
        let a = StabilityOperator::constant(1.5, 10.0).unwrap();
        let r = eigenproduct_ratio(&a, &a, 500).unwrap();
        assert_eq!(r.ln_raw, 0.0);
        assert_eq!(r.extrapolated(), 1.0);
    }

    #[test]
    fn eigenproduct_matches_gy() {
        let r = stability_eigenproduct_ratio(1.0, 10.0, 2000).unwrap();
        let profile = closed_form_instanton(1.0, 0.0).unwrap();
        let gy = gy_terminal(&StabilityOperator::instanton(&profile, 10.0).unwrap()).unwrap();
        let raw = (gy / reference_terminal(1.5, 10.0).unwrap())
            .value()
            .unwrap();
        assert!((r.extrapolated() / raw - 1.0).abs() < 1e-3);
        let n1000 = stability_eigenproduct_ratio(1.0, 10.0, 1000).unwrap();
        assert!((n1000.extrapolated() / r.extrapolated() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn log_slope() {
        for &omega in &[8.0, 16.0, 28.0] {
            let d = predicted_log_slope(omega).unwrap() - predicted_log_slope_analytic(omega);
            assert!(d.abs() < 1e-10, "omega={omega}: {d:e}");
        }
    }
}
