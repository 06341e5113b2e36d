//! Least-squares fits on log-transformed data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Straight line `y = slope·x + intercept` with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Ordinary least squares. Needs at least two distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // a perfectly flat series is perfectly explained by a flat line
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * nf * (1.0 + my * my) {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        samples: n,
    })
}

/// Fit of `log y` against `log x`, restricted to `x ∈ [lo, hi]`.
pub fn fit_power_law(xs: &[f64], ys: &[f64], lo: f64, hi: f64, min_samples: usize) -> Result<LineFit> {
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (&x, &y) in xs.iter().zip(ys) {
        if x < lo || x > hi {
            continue;
        }
        if !(y > 0.0) || !(x > 0.0) {
            return Err(Error::NonPositive { at: x, value: y });
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }
    if lx.len() < min_samples {
        return Err(Error::TooFewSamples {
            need: min_samples,
            got: lx.len(),
        });
    }
    fit_line(&lx, &ly)
}
