//! Evaluable outcome densities and the crate-standard quadrature.
//!
//! All continuous integrals in this crate use composite Simpson quadrature
//! with [`SIMPSON_PANELS`] panels over the density's location ± 10 scales.
//! For the normal densities used throughout, the truncation and
//! discretization errors are far below every statistical tolerance.

use std::f64::consts::PI;

use rand::RngCore;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Panels used by the crate-standard composite Simpson rule.
pub const SIMPSON_PANELS: usize = 4096;

/// Quadrature window half-width, in units of the density's scale.
pub const WINDOW_SCALES: f64 = 10.0;

/// A normalized outcome density that can be evaluated, integrated against,
/// and proposed from.
pub trait Density {
    fn pdf(&self, y: f64) -> f64;

    /// Center of the quadrature window.
    fn location(&self) -> f64;

    /// Scale that sizes the quadrature window.
    fn scale(&self) -> f64;

    /// Draw one proposal from the density.
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
}

/// Location-scale normal density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalDensity {
    mean: f64,
    sd: f64,
}

impl NormalDensity {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !sd.is_finite() {
            return Err(Error::Validation(
                "normal density parameters must be finite".into(),
            ));
        }
        if sd <= 0.0 {
            return Err(Error::Validation(format!(
                "normal density requires sd > 0, got {sd}"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }
}

impl Density for NormalDensity {
    fn pdf(&self, y: f64) -> f64 {
        let z = (y - self.mean) / self.sd;
        (-0.5 * z * z).exp() / (self.sd * (2.0 * PI).sqrt())
    }

    fn location(&self) -> f64 {
        self.mean
    }

    fn scale(&self) -> f64 {
        self.sd
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        Normal::new(self.mean, self.sd)
            .expect("validated on construction")
            .sample(rng)
    }
}

/// Composite Simpson rule on `[lo, hi]`; `panels` must be even and positive.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    assert!(
        panels >= 2 && panels % 2 == 0,
        "simpson requires an even panel count"
    );
    let h = (hi - lo) / panels as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Precomputed quadrature nodes with weights already multiplied by the
/// density, so that `Σ fw[i]·g(ys[i]) ≈ ∫ g(y)·f(y) dy`.
///
/// Built once per calibration or moment computation; the repeated bisection
/// residuals then cost one pass over the nodes.
pub struct DensityGrid {
    ys: Vec<f64>,
    fw: Vec<f64>,
}

impl DensityGrid {
    pub fn new(density: &dyn Density) -> Self {
        let lo = density.location() - WINDOW_SCALES * density.scale();
        let hi = density.location() + WINDOW_SCALES * density.scale();
        let h = (hi - lo) / SIMPSON_PANELS as f64;
        let mut ys = Vec::with_capacity(SIMPSON_PANELS + 1);
        let mut fw = Vec::with_capacity(SIMPSON_PANELS + 1);
        for i in 0..=SIMPSON_PANELS {
            let y = lo + i as f64 * h;
            let c = if i == 0 || i == SIMPSON_PANELS {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            ys.push(y);
            fw.push(c * h / 3.0 * density.pdf(y));
        }
        Self { ys, fw }
    }

    /// `∫ g(y)·f(y) dy` over the standard window.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.ys.iter().zip(&self.fw).map(|(&y, &w)| w * g(y)).sum()
    }
}
