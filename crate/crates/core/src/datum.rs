//! Initial data: continuous, nonnegative, nonzero, valued in `[0, 1]` and
//! concentrated well inside the box (`|x| < L/16`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    /// `A e^{−|x−c|²/w²}`
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Smooth compactly supported bump `A exp(1 − 1/(1 − (|x−c|/R)²))`.
    Bump {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Two perpendicular arms of half-length `arm_length` and gaussian
    /// cross-section `arm_width`, centered at the origin.
    Cross {
        amplitude: f64,
        arm_length: f64,
        arm_width: f64,
    },
    /// Two gaussians at `(±offset, 0)`.
    OffsetPair {
        amplitude: f64,
        width: f64,
        offset: f64,
    },
}

fn gauss(r: f64, w: f64) -> f64 {
    (-(r / w) * (r / w)).exp()
}

/// Flat top on `|s| ≤ len`, gaussian shoulders of width `w`.
fn plateau(s: f64, len: f64, w: f64) -> f64 {
    let excess = s.abs() - len;
    if excess <= 0.0 {
        1.0
    } else {
        gauss(excess, w)
    }
}

impl InitialDatum {
    pub fn amplitude(&self) -> f64 {
        match *self {
            InitialDatum::Gaussian { amplitude, .. }
            | InitialDatum::Bump { amplitude, .. }
            | InitialDatum::Cross { amplitude, .. }
            | InitialDatum::OffsetPair { amplitude, .. } => amplitude,
        }
    }

    /// Radius beyond which the datum is below `e^{-9}` of its amplitude.
    pub fn extent(&self) -> f64 {
        let norm = |c: [f64; 2]| c[0].hypot(c[1]);
        match *self {
            InitialDatum::Gaussian { width, center, .. } => norm(center) + 3.0 * width,
            InitialDatum::Bump { radius, center, .. } => norm(center) + radius,
            InitialDatum::Cross {
                arm_length, arm_width, ..
            } => arm_length + 3.0 * arm_width,
            InitialDatum::OffsetPair { width, offset, .. } => offset.abs() + 3.0 * width,
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            InitialDatum::Gaussian {
                amplitude,
                width,
                center,
            } => amplitude * gauss((x[0] - center[0]).hypot(x[1] - center[1]), width),
            InitialDatum::Bump {
                amplitude,
                radius,
                center,
            } => {
                let s = (x[0] - center[0]).hypot(x[1] - center[1]) / radius;
                if s >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            InitialDatum::Cross {
                amplitude,
                arm_length,
                arm_width,
            } => {
                let horizontal = plateau(x[0], arm_length, arm_width) * gauss(x[1], arm_width);
                let vertical = plateau(x[1], arm_length, arm_width) * gauss(x[0], arm_width);
                amplitude * horizontal.max(vertical)
            }
            InitialDatum::OffsetPair {
                amplitude,
                width,
                offset,
            } => {
                let left = gauss((x[0] + offset).hypot(x[1]), width);
                let right = gauss((x[0] - offset).hypot(x[1]), width);
                amplitude * left.max(right)
            }
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let mut problems = Vec::new();
        let a = self.amplitude();
        if !(a > 0.0 && a <= 1.0) {
            problems.push(format!("amplitude must lie in (0,1], got {a}"));
        }
        let positive = match *self {
            InitialDatum::Gaussian { width, .. } => width > 0.0,
            InitialDatum::Bump { radius, .. } => radius > 0.0,
            InitialDatum::Cross {
                arm_length, arm_width, ..
            } => arm_length >= 0.0 && arm_width > 0.0,
            InitialDatum::OffsetPair { width, .. } => width > 0.0,
        };
        if !positive {
            problems.push("datum lengths must be positive".into());
        }
        let limit = grid.length() / 16.0;
        if !(self.extent() < limit) {
            problems.push(format!(
                "datum extends to |x| = {}, must stay below L/16 = {limit}",
                self.extent()
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }
}

pub fn make_initial_datum(grid: &Grid, datum: &InitialDatum) -> Result<Field> {
    datum.validate(grid)?;
    let field = Field::from_fn(*grid, 0.0, |x| datum.eval(x))?;
    if field.max() <= 0.0 {
        return Err(Error::InvalidParameter(
            "datum vanishes on every grid point; widen it relative to the spacing".into(),
        ));
    }
    Ok(field)
}
