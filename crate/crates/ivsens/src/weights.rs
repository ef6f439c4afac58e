//! Logistic complier-selection models, calibration of their intercepts
//! against a target mean weight, and the complier outcome densities they
//! induce.
//!
//! A selection model gives the probability that a subject observed in a
//! matched cell is a complier as a logistic function of the outcome. For a
//! fixed slope, the intercept is pinned down by requiring the average weight
//! over the cell's outcome distribution to equal the complier fraction γ;
//! that constraint is strictly increasing in the intercept, so bisection on
//! a bracket solves it to full precision.

use crate::density::{Density, DensityGrid};
use crate::error::{Error, Result};
use crate::Arm;

/// Residual tolerance for intercept calibration: |mean weight − γ| ≤ this.
pub const CALIBRATION_TOL: f64 = 1e-10;

/// Initial calibration bracket for the intercept.
const BRACKET_START: f64 = 50.0;

/// Bracket expansion beyond this magnitude means no usable intercept exists.
const BRACKET_LIMIT: f64 = 1e4;

/// Numerically stable logistic function, exact to the last ulp for arguments
/// up to ±745 and saturating cleanly beyond.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Log-odds; inverse of [`logistic`] for p in (0,1).
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// One arm's complier-selection model: weight(y) = logistic(α₀ + α₁·y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionModel {
    pub alpha0: f64,
    pub alpha1: f64,
    pub arm: Arm,
}

impl SelectionModel {
    pub fn new(alpha0: f64, alpha1: f64, arm: Arm) -> Result<Self> {
        if !alpha0.is_finite() || !alpha1.is_finite() {
            return Err(Error::Validation(format!(
                "selection model coefficients must be finite, got α0={alpha0}, α1={alpha1}"
            )));
        }
        Ok(Self {
            alpha0,
            alpha1,
            arm,
        })
    }
}

/// Probability that a subject with outcome `y` is a complier under `model`.
pub fn selection_weight(y: f64, model: &SelectionModel) -> f64 {
    logistic(model.alpha0 + model.alpha1 * y)
}

/// The four-dimensional sensitivity vector: complier fractions within the two
/// matched cells and the log-odds slopes of the two selection models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityParams {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub alpha1_a: f64,
    pub alpha1_b: f64,
}

impl SensitivityParams {
    pub fn new(gamma_a: f64, gamma_b: f64, alpha1_a: f64, alpha1_b: f64) -> Result<Self> {
        let p = Self {
            gamma_a,
            gamma_b,
            alpha1_a,
            alpha1_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, g) in [("gamma_A", self.gamma_a), ("gamma_B", self.gamma_b)] {
            if !g.is_finite() || g <= 0.0 || g > 1.0 {
                return Err(Error::Validation(format!(
                    "{label} must lie in (0, 1], got {g}"
                )));
            }
        }
        for (label, a) in [("alpha1_A", self.alpha1_a), ("alpha1_B", self.alpha1_b)] {
            if !a.is_finite() {
                return Err(Error::Validation(format!(
                    "{label} must be finite, got {a}"
                )));
            }
        }
        Ok(())
    }
}

/// An observed outcome sample treated as an empirical distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation(
                "empirical distribution must be non-empty".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "empirical distribution values must be finite".into(),
            ));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    /// Values in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Bisection for a nondecreasing residual `f`, starting from `[lo, hi]` and
/// expanding the bracket geometrically (up to ±`limit`) until it straddles
/// the root. Returns x with |f(x)| ≤ `tol`; errors carry a plain message so
/// callers can wrap them in their own variant.
pub(crate) fn bisect_increasing(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    limit: f64,
    tol: f64,
) -> std::result::Result<f64, String> {
    let mut flo = f(lo);
    if flo.abs() <= tol {
        return Ok(lo);
    }
    let mut fhi = f(hi);
    if fhi.abs() <= tol {
        return Ok(hi);
    }
    while flo > 0.0 {
        lo = if lo < 0.0 { 2.0 * lo } else { -hi.abs() };
        if lo < -limit {
            return Err(format!("no root with argument above -{limit:e}"));
        }
        flo = f(lo);
        if flo.abs() <= tol {
            return Ok(lo);
        }
    }
    while fhi < 0.0 {
        hi = if hi > 0.0 { 2.0 * hi } else { lo.abs() };
        if hi > limit {
            return Err(format!("no root with argument below {limit:e}"));
        }
        fhi = f(hi);
        if fhi.abs() <= tol {
            return Ok(hi);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket collapsed to adjacent floats
        }
        let fm = f(mid);
        if fm.abs() <= tol {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(format!(
        "residual tolerance {tol:e} not attainable on this input"
    ))
}

fn check_gamma_open_interval(gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma <= 0.0 || gamma >= 1.0 {
        return Err(Error::Validation(format!(
            "calibration requires gamma strictly inside (0, 1), got {gamma}"
        )));
    }
    Ok(())
}

/// Calibration over a raw slice; the mean weight does not depend on order,
/// so the public entry points share this.
pub(crate) fn calibrate_slice(values: &[f64], alpha1: f64, gamma: f64) -> Result<f64> {
    check_gamma_open_interval(gamma)?;
    if !alpha1.is_finite() {
        return Err(Error::Validation(format!(
            "alpha1 must be finite, got {alpha1}"
        )));
    }
    if values.is_empty() {
        return Err(Error::Validation(
            "calibration sample must be non-empty".into(),
        ));
    }
    if alpha1 == 0.0 {
        // Weights are constant in y; the constraint is logistic(α0) = γ.
        return Ok(logit(gamma));
    }
    let terms: Vec<f64> = values.iter().map(|&y| alpha1 * y).collect();
    let n = terms.len() as f64;
    let resid = |a0: f64| terms.iter().map(|&t| logistic(a0 + t)).sum::<f64>() / n - gamma;
    bisect_increasing(
        resid,
        -BRACKET_START,
        BRACKET_START,
        BRACKET_LIMIT,
        CALIBRATION_TOL,
    )
    .map_err(|m| Error::Calibration(format!("intercept calibration: {m}")))
}

/// Solves for the intercept α₀ such that the sample mean of the selection
/// weight over `dist` equals `gamma` within [`CALIBRATION_TOL`].
pub fn calibrate_intercept(dist: &EmpiricalDistribution, alpha1: f64, gamma: f64) -> Result<f64> {
    calibrate_slice(dist.values(), alpha1, gamma)
}

/// Continuous analogue of [`calibrate_intercept`]: solves ∫ w(y)·f(y) dy = γ
/// by quadrature over the density's standard window.
pub fn calibrate_intercept_density(base: &dyn Density, alpha1: f64, gamma: f64) -> Result<f64> {
    check_gamma_open_interval(gamma)?;
    if !alpha1.is_finite() {
        return Err(Error::Validation(format!(
            "alpha1 must be finite, got {alpha1}"
        )));
    }
    if alpha1 == 0.0 {
        return Ok(logit(gamma));
    }
    let grid = DensityGrid::new(base);
    let resid = |a0: f64| grid.integrate(|y| logistic(a0 + alpha1 * y)) - gamma;
    bisect_increasing(
        resid,
        -BRACKET_START,
        BRACKET_START,
        BRACKET_LIMIT,
        CALIBRATION_TOL,
    )
    .map_err(|m| Error::Calibration(format!("density calibration: {m}")))
}

/// Complier outcome density w(y)·f(y)/γ induced by a calibrated selection
/// model over the base density.
pub fn complier_density(
    y: f64,
    base: &dyn Density,
    model: &SelectionModel,
    gamma: f64,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Validation(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(selection_weight(y, model) * base.pdf(y) / gamma)
}
