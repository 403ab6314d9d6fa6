//! Symmetric one-dimensional potentials with closed-form derivatives.
//!
//! Every family is a perfect square, `V(x) = c · Π (x - r_i)²`, so the
//! Bogomol'nyi speed `sqrt(2V)` factorizes into `sqrt(2c) · Π |x - r_i|`.
//! The factored form is what lets instanton tails be evaluated to full
//! relative precision at distances from a well far below machine epsilon.
//!
//! The triple well is normalized as `V(x) = (ω²/2) x² (x² - 1)²`: its
//! kink `x(τ) = sqrt((1 + tanh ωτ)/2)` then solves `dx/dτ = sqrt(2V)`
//! exactly, has action `ω/4`, and the wells oscillate at `ω` (centre) and
//! `2ω` (sides).

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("frequency parameter must be positive and finite (got {0})")]
    InvalidFrequency(f64),
    #[error("{x} is not a minimum of the {family} potential")]
    NotAWell { x: f64, family: Family },
    #[error("wells {from} and {to} are not adjacent: a minimum lies between them")]
    NonAdjacentWells { from: f64, to: f64 },
    #[error("a transition needs two distinct wells (got {0} twice)")]
    SameWell(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TripleWell,
    DoubleWell,
    Harmonic,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::TripleWell => "triple-well",
            Family::DoubleWell => "double-well",
            Family::Harmonic => "harmonic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceClass {
    /// Mapped to itself by `x -> -x`.
    Central,
    /// One of a pair exchanged by `x -> -x`.
    Lateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WellInfo {
    pub location: f64,
    pub frequency: f64,
    pub equivalence_class: EquivalenceClass,
}

/// A potential family together with its frequency parameter (`ω` for the
/// multi-well families, `ν` for the oscillator). Unit mass throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialModel {
    family: Family,
    omega: f64,
}

pub const TRIPLE_WELL_NORMALIZATION: &str = "V(x) = (omega^2/2) x^2 (x^2 - 1)^2";
pub const DOUBLE_WELL_NORMALIZATION: &str = "V(x) = (omega^2/8) (x^2 - 1)^2";
pub const HARMONIC_NORMALIZATION: &str = "V(x) = (nu^2/2) x^2";

const TRIPLE_ROOTS: [f64; 3] = [-1.0, 0.0, 1.0];
const DOUBLE_ROOTS: [f64; 2] = [-1.0, 1.0];
const HARMONIC_ROOTS: [f64; 1] = [0.0];

impl PotentialModel {
    pub fn new(family: Family, omega: f64) -> Result<Self, PotentialError> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(PotentialError::InvalidFrequency(omega));
        }
        Ok(PotentialModel { family, omega })
    }

    pub fn triple_well(omega: f64) -> Result<Self, PotentialError> {
        Self::new(Family::TripleWell, omega)
    }

    pub fn double_well(omega: f64) -> Result<Self, PotentialError> {
        Self::new(Family::DoubleWell, omega)
    }

    pub fn harmonic(nu: f64) -> Result<Self, PotentialError> {
        Self::new(Family::Harmonic, nu)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn normalization(&self) -> &'static str {
        match self.family {
            Family::TripleWell => TRIPLE_WELL_NORMALIZATION,
            Family::DoubleWell => DOUBLE_WELL_NORMALIZATION,
            Family::Harmonic => HARMONIC_NORMALIZATION,
        }
    }

    /// The `c` in `V = c Π (x - r_i)²`.
    fn coefficient(&self) -> f64 {
        let w2 = self.omega * self.omega;
        match self.family {
            Family::TripleWell => 0.5 * w2,
            Family::DoubleWell => 0.125 * w2,
            Family::Harmonic => 0.5 * w2,
        }
    }

    /// Zeros of `V`; these are exactly the minima.
    pub fn roots(&self) -> &'static [f64] {
        match self.family {
            Family::TripleWell => &TRIPLE_ROOTS,
            Family::DoubleWell => &DOUBLE_ROOTS,
            Family::Harmonic => &HARMONIC_ROOTS,
        }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let x2 = x * x;
        let c = self.coefficient();
        match self.family {
            Family::TripleWell => {
                let s = x2 - 1.0;
                c * x2 * s * s
            }
            Family::DoubleWell => {
                let s = x2 - 1.0;
                c * s * s
            }
            Family::Harmonic => c * x2,
        }
    }

    pub fn first_derivative(&self, x: f64) -> f64 {
        let w2 = self.omega * self.omega;
        let x2 = x * x;
        match self.family {
            Family::TripleWell => w2 * x * (x2 - 1.0) * (3.0 * x2 - 1.0),
            Family::DoubleWell => 0.5 * w2 * x * (x2 - 1.0),
            Family::Harmonic => w2 * x,
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let w2 = self.omega * self.omega;
        let x2 = x * x;
        match self.family {
            Family::TripleWell => 0.5 * w2 * (30.0 * x2 * x2 - 24.0 * x2 + 2.0),
            Family::DoubleWell => 0.5 * w2 * (3.0 * x2 - 1.0),
            Family::Harmonic => w2,
        }
    }

    /// All minima in ascending order.
    pub fn wells(&self) -> Vec<WellInfo> {
        self.roots()
            .iter()
            .map(|&location| WellInfo {
                location,
                frequency: self.second_derivative(location).sqrt(),
                equivalence_class: if location == 0.0 {
                    EquivalenceClass::Central
                } else {
                    EquivalenceClass::Lateral
                },
            })
            .collect()
    }

    pub fn well_at(&self, x: f64) -> Result<WellInfo, PotentialError> {
        self.wells()
            .into_iter()
            .find(|w| w.location == x)
            .ok_or(PotentialError::NotAWell {
                x,
                family: self.family,
            })
    }

    /// Checks that `from` and `to` are distinct neighbouring minima.
    pub fn check_adjacent(
        &self,
        from: f64,
        to: f64,
    ) -> Result<(WellInfo, WellInfo), PotentialError> {
        let a = self.well_at(from)?;
        let b = self.well_at(to)?;
        if from == to {
            return Err(PotentialError::SameWell(from));
        }
        let (lo, hi) = if from < to { (from, to) } else { (to, from) };
        if self.roots().iter().any(|&r| r > lo && r < hi) {
            return Err(PotentialError::NonAdjacentWells { from, to });
        }
        Ok((a, b))
    }

    /// `sqrt(2 V(x))`, evaluated in factored form.
    pub fn bogomolny_speed(&self, x: f64) -> f64 {
        (2.0 * self.coefficient()).sqrt()
            * self.roots().iter().map(|r| (x - r).abs()).product::<f64>()
    }

    /// `ln sqrt(2 V(x))` at `x = well + sign · exp(ln_offset)`, accurate even
    /// when the offset underflows.
    pub fn ln_speed_near(&self, well: f64, sign: f64, ln_offset: f64) -> f64 {
        let offset = sign * ln_offset.exp();
        let mut total = 0.5 * (2.0 * self.coefficient()).ln();
        for &r in self.roots() {
            total += if r == well {
                ln_offset
            } else {
                (well - r + offset).abs().ln()
            };
        }
        total
    }

    /// Location of the barrier maximum between two adjacent wells.
    pub fn barrier_top(&self, from: f64, to: f64) -> Result<f64, PotentialError> {
        self.check_adjacent(from, to)?;
        let (lo, hi) = if from < to { (from, to) } else { (to, from) };
        Ok(match self.family {
            // V' = ω² x (x² - 1)(3x² - 1) vanishes at x² = 1/3 inside (0, 1)
            Family::TripleWell => {
                let top = (1.0f64 / 3.0).sqrt();
                if lo >= 0.0 {
                    top
                } else {
                    -top
                }
            }
            Family::DoubleWell => 0.5 * (lo + hi),
            Family::Harmonic => unreachable!("a single well has no barrier"),
        })
    }

    /// Position at which a kink from `from` to `to` is centred by convention.
    ///
    /// For the triple well this is the point where `x²` is halfway between
    /// the two wells' `x²`, i.e. `±1/√2`, matching the tanh kink at
    /// `τ = τ_c`. The double well uses its barrier top, `x = 0`.
    pub fn default_anchor(&self, from: f64, to: f64) -> Result<f64, PotentialError> {
        self.check_adjacent(from, to)?;
        Ok(match self.family {
            Family::TripleWell => {
                let outer = if from == 0.0 { to } else { from };
                outer.signum() * (0.5 * (from * from + to * to)).sqrt()
            }
            _ => self.barrier_top(from, to)?,
        })
    }
}
