//! The sensitivity-indexed complier treatment-effect estimator, bootstrap
//! standard errors, Wald testing, and grid sweeps over the sensitivity space.
//!
//! For a presumed sensitivity vector, each arm's selection-model intercept is
//! calibrated on that arm's observed outcomes and the effect estimate is the
//! difference of the calibrated weighted means,
//! `Σ y·w(y)/(γ·n)` per arm. Uncertainty comes from a nonparametric bootstrap
//! that resamples the two arms independently and recalibrates per replicate.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, purpose, stream};
use crate::weights::{calibrate_slice, logistic, SensitivityParams};

/// Outcomes of the two matched cells: subjects whose received treatment
/// equals their instrument value.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSample {
    y_a: Vec<f64>,
    y_b: Vec<f64>,
}

impl ArmSample {
    pub fn new(y_a: Vec<f64>, y_b: Vec<f64>) -> Result<Self> {
        for (label, arm) in [("A", &y_a), ("B", &y_b)] {
            if arm.is_empty() {
                return Err(Error::Validation(format!("arm {label} must be non-empty")));
            }
            if arm.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "arm {label} contains non-finite outcomes"
                )));
            }
        }
        Ok(Self { y_a, y_b })
    }

    pub fn arm_a(&self) -> &[f64] {
        &self.y_a
    }

    pub fn arm_b(&self) -> &[f64] {
        &self.y_b
    }
}

/// Point estimate with bootstrap uncertainty and a Wald test decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub theta_hat: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub reject_null: bool,
    pub level: f64,
}

/// Quantile of the standard normal distribution.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Calibrated weighted mean `Σ y·w(y) / (γ·n)` for one arm.
fn weighted_arm_mean(values: &[f64], alpha1: f64, gamma: f64) -> Result<f64> {
    let alpha0 = calibrate_slice(values, alpha1, gamma)?;
    let sum: f64 = values
        .iter()
        .map(|&y| y * logistic(alpha0 + alpha1 * y))
        .sum();
    Ok(sum / (gamma * values.len() as f64))
}

/// Sensitivity-indexed complier effect estimate: calibrates both arms' model
/// intercepts against the presumed complier fractions, then differences the
/// weighted arm means.
pub fn estimate_theta(sample: &ArmSample, params: &SensitivityParams) -> Result<f64> {
    params.validate()?;
    let mean_a = weighted_arm_mean(sample.arm_a(), params.alpha1_a, params.gamma_a)?;
    let mean_b = weighted_arm_mean(sample.arm_b(), params.alpha1_b, params.gamma_b)?;
    Ok(mean_a - mean_b)
}

fn resample(values: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    (0..values.len())
        .map(|_| values[rng.gen_range(0..values.len())])
        .collect()
}

/// Nonparametric bootstrap standard error of the effect estimate.
///
/// Arms are resampled independently with replacement at their original sizes
/// and the intercepts recalibrated on every replicate. A replicate whose
/// calibration fails is redrawn, up to 10 attempts. Each replicate draws from
/// a stream derived from `(seed, replicate index)`, so the result is
/// deterministic regardless of evaluation order.
pub fn bootstrap_se(
    sample: &ArmSample,
    params: &SensitivityParams,
    n_boot: usize,
    seed: u64,
) -> Result<f64> {
    params.validate()?;
    if n_boot < 2 {
        return Err(Error::Validation(format!(
            "n_boot must be at least 2, got {n_boot}"
        )));
    }
    let estimates: Vec<f64> = (0..n_boot)
        .map(|b| {
            let mut rng = stream(seed, &[purpose::BOOTSTRAP, b as u64]);
            for _attempt in 0..10 {
                let replicate = ArmSample {
                    y_a: resample(sample.arm_a(), &mut rng),
                    y_b: resample(sample.arm_b(), &mut rng),
                };
                if let Ok(est) = estimate_theta(&replicate, params) {
                    return Ok(est);
                }
            }
            Err(Error::Calibration(format!(
                "bootstrap replicate {b} failed calibration 10 times"
            )))
        })
        .collect::<Result<_>>()?;
    Ok(sample_sd(&estimates))
}

/// Sample standard deviation (ddof = 1); zero for constant input.
pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Two-sided Wald test of `theta_hat = null_value` with normal reference:
/// rejects iff |θ̂ − null| strictly exceeds z·se. Returns the decision and
/// the symmetric confidence interval θ̂ ± z·se.
pub fn wald_test(theta_hat: f64, se: f64, null_value: f64, level: f64) -> Result<(bool, f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Validation(format!(
            "test level must lie in (0,1), got {level}"
        )));
    }
    if !theta_hat.is_finite() || !null_value.is_finite() {
        return Err(Error::Validation(
            "test statistic and null value must be finite".into(),
        ));
    }
    if !se.is_finite() || se < 0.0 {
        return Err(Error::Validation(format!(
            "se must be finite and non-negative, got {se}"
        )));
    }
    let z = normal_quantile(1.0 - level / 2.0);
    let half = z * se;
    Ok((
        (theta_hat - null_value).abs() > half,
        theta_hat - half,
        theta_hat + half,
    ))
}

/// Point estimate, bootstrap SE, and Wald decision in one call.
pub fn estimate(
    sample: &ArmSample,
    params: &SensitivityParams,
    n_boot: usize,
    null_value: f64,
    level: f64,
    seed: u64,
) -> Result<EstimateResult> {
    let theta_hat = estimate_theta(sample, params)?;
    let se = bootstrap_se(sample, params, n_boot, seed)?;
    let (reject_null, ci_lo, ci_hi) = wald_test(theta_hat, se, null_value, level)?;
    Ok(EstimateResult {
        theta_hat,
        se,
        ci_lo,
        ci_hi,
        reject_null,
        level,
    })
}

/// Axes of a sensitivity-parameter grid sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub gamma_a: Vec<f64>,
    pub gamma_b: Vec<f64>,
    pub alpha1_a: Vec<f64>,
    pub alpha1_b: Vec<f64>,
    /// True when the γ axes were fixed from observable cells under an
    /// empty-stratum restriction rather than swept; metadata only.
    pub fixed_gammas: bool,
}

impl SweepGrid {
    pub fn new(
        gamma_a: Vec<f64>,
        gamma_b: Vec<f64>,
        alpha1_a: Vec<f64>,
        alpha1_b: Vec<f64>,
    ) -> Self {
        Self {
            gamma_a,
            gamma_b,
            alpha1_a,
            alpha1_b,
            fixed_gammas: false,
        }
    }
    pub fn validate(&self) -> Result<()> {
        for (label, axis) in [
            ("gamma_A", &self.gamma_a),
            ("gamma_B", &self.gamma_b),
            ("alpha1_A", &self.alpha1_a),
            ("alpha1_B", &self.alpha1_b),
        ] {
            if axis.is_empty() {
                return Err(Error::Validation(format!(
                    "sweep axis {label} must be non-empty"
                )));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "sweep axis {label} has non-finite values"
                )));
            }
        }
        for (label, axis) in [("gamma_A", &self.gamma_a), ("gamma_B", &self.gamma_b)] {
            if axis.iter().any(|&g| g <= 0.0 || g > 1.0) {
                return Err(Error::Validation(format!(
                    "sweep axis {label} must lie within (0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gamma_a.len() * self.gamma_b.len() * self.alpha1_a.len() * self.alpha1_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in lexicographic axis order, outermost `gamma_A`.
    fn points(&self) -> Vec<SensitivityParams> {
        let mut out = Vec::with_capacity(self.len());
        for &ga in &self.gamma_a {
            for &gb in &self.gamma_b {
                for &aa in &self.alpha1_a {
                    for &ab in &self.alpha1_b {
                        out.push(SensitivityParams {
                            gamma_a: ga,
                            gamma_b: gb,
                            alpha1_a: aa,
                            alpha1_b: ab,
                        });
                    }
                }
            }
        }
        out
    }
}

/// One evaluated grid point. Numeric fields are `None` when the point failed;
/// `status` is `"ok"` or the stable error code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "gamma_A")]
    pub gamma_a: f64,
    #[serde(rename = "gamma_B")]
    pub gamma_b: f64,
    #[serde(rename = "alpha1_A")]
    pub alpha1_a: f64,
    #[serde(rename = "alpha1_B")]
    pub alpha1_b: f64,
    pub theta_hat: Option<f64>,
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub status: String,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str =
        "gamma_A,gamma_B,alpha1_A,alpha1_B,theta_hat,se,ci_lo,ci_hi,status";
}

/// Evaluates the estimator at every grid point, in the grid's lexicographic
/// order. Per-point failures are recorded in the row, not fatal; per-point
/// bootstrap seeds derive from `(seed, flattened index)` so results do not
/// depend on evaluation order or parallelism.
pub fn sweep(
    sample: &ArmSample,
    grid: &SweepGrid,
    n_boot: usize,
    level: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    let points = grid.points();
    Ok(points
        .par_iter()
        .enumerate()
        .map(|(index, params)| {
            let point_seed = derive_seed(seed, &[purpose::SWEEP, index as u64]);
            match estimate(sample, params, n_boot, 0.0, level, point_seed) {
                Ok(r) => SweepRow {
                    gamma_a: params.gamma_a,
                    gamma_b: params.gamma_b,
                    alpha1_a: params.alpha1_a,
                    alpha1_b: params.alpha1_b,
                    theta_hat: Some(r.theta_hat),
                    se: Some(r.se),
                    ci_lo: Some(r.ci_lo),
                    ci_hi: Some(r.ci_hi),
                    status: "ok".into(),
                },
                Err(e) => SweepRow {
                    gamma_a: params.gamma_a,
                    gamma_b: params.gamma_b,
                    alpha1_a: params.alpha1_a,
                    alpha1_b: params.alpha1_b,
                    theta_hat: None,
                    se: None,
                    ci_lo: None,
                    ci_hi: None,
                    status: e.code().into(),
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn params(ga: f64, gb: f64, aa: f64, ab: f64) -> SensitivityParams {
        SensitivityParams::new(ga, gb, aa, ab).unwrap()
    }

    fn normal_sample(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(mean, sd).unwrap();
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    }

    fn mean(values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }

    #[test]
    fn flat_slopes_reduce_to_mean_difference() {
        let sample = ArmSample::new(
            normal_sample(80, 2.5, 2.0, 1),
            normal_sample(60, 1.7, 2.0, 2),
        )
        .unwrap();
        let expected = mean(sample.arm_a()) - mean(sample.arm_b());
        for (ga, gb) in [(0.2, 0.9), (0.5, 0.5), (0.99, 0.01)] {
            let th = estimate_theta(&sample, &params(ga, gb, 0.0, 0.0)).unwrap();
            let scale = expected.abs().max(1.0);
            assert!((th - expected).abs() <= 1e-13 * scale, "{th} vs {expected}");
        }
    }

    #[test]
    fn identical_arms_give_zero() {
        let y = normal_sample(50, 0.3, 1.0, 3);
        let sample = ArmSample::new(y.clone(), y).unwrap();
        let th = estimate_theta(&sample, &params(0.4, 0.4, 1.3, 1.3)).unwrap();
        assert_eq!(th, 0.0);
    }

    #[test]
    fn degenerate_arms_have_zero_se() {
        let sample = ArmSample::new(vec![2.0; 30], vec![-1.0; 40]).unwrap();
        let se = bootstrap_se(&sample, &params(0.5, 0.5, 0.0, 0.0), 100, 9).unwrap();
        assert_eq!(se, 0.0);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let sample = ArmSample::new(
            normal_sample(70, 2.5, 2.0, 4),
            normal_sample(90, 1.0, 2.0, 5),
        )
        .unwrap();
        let p = params(0.4, 0.6, 1.0, 2.0);
        let a = bootstrap_se(&sample, &p, 200, 123).unwrap();
        let b = bootstrap_se(&sample, &p, 200, 123).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn wald_boundary_is_strict() {
        let z = normal_quantile(0.975);
        // Exactly at the critical value: no rejection.
        let (reject, lo, hi) = wald_test(z, 1.0, 0.0, 0.05).unwrap();
        assert!(!reject);
        assert!(lo <= 0.0 && 0.0 <= hi);
        // 1.96 sits just above z_{0.975} = 1.959964…, so it rejects.
        let (reject, lo, _hi) = wald_test(1.96, 1.0, 0.0, 0.05).unwrap();
        assert!(reject);
        assert!(lo > 0.0);
        // Zero estimate never rejects a zero null.
        let (reject, _, _) = wald_test(0.0, 0.7, 0.0, 0.05).unwrap();
        assert!(!reject);
    }

    #[test]
    fn wald_rejects_bad_level() {
        assert!(wald_test(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(wald_test(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(wald_test(1.0, 1.0, 0.0, -0.3).is_err());
    }

    #[test]
    fn estimate_result_invariants_hold() {
        let sample = ArmSample::new(
            normal_sample(60, 2.0, 1.5, 6),
            normal_sample(60, 1.0, 1.5, 7),
        )
        .unwrap();
        let r = estimate(&sample, &params(0.5, 0.5, 0.5, 0.5), 200, 0.0, 0.05, 11).unwrap();
        assert!(r.se >= 0.0);
        assert!(r.ci_lo <= r.theta_hat && r.theta_hat <= r.ci_hi);
        assert_eq!(r.reject_null, !(r.ci_lo <= 0.0 && 0.0 <= r.ci_hi));
    }

    #[test]
    fn single_point_sweep_matches_direct_estimate() {
        let sample = ArmSample::new(
            normal_sample(50, 2.5, 2.0, 8),
            normal_sample(50, 1.5, 2.0, 9),
        )
        .unwrap();
        let grid = SweepGrid::new(vec![0.4], vec![0.6], vec![1.0], vec![2.0]);
        let rows = sweep(&sample, &grid, 150, 0.05, 77).unwrap();
        assert_eq!(rows.len(), 1);
        let direct_seed = derive_seed(77, &[purpose::SWEEP, 0]);
        let direct = estimate(
            &sample,
            &params(0.4, 0.6, 1.0, 2.0),
            150,
            0.0,
            0.05,
            direct_seed,
        )
        .unwrap();
        assert_eq!(rows[0].theta_hat, Some(direct.theta_hat));
        assert_eq!(rows[0].se, Some(direct.se));
        assert_eq!(rows[0].status, "ok");
    }

    #[test]
    fn flat_alpha_axes_share_mean_difference() {
        let sample = ArmSample::new(
            normal_sample(40, 3.0, 1.0, 10),
            normal_sample(40, 2.0, 1.0, 11),
        )
        .unwrap();
        let expected = mean(sample.arm_a()) - mean(sample.arm_b());
        let grid = SweepGrid::new(vec![0.3, 0.7], vec![0.2, 0.8], vec![0.0], vec![0.0]);
        let rows = sweep(&sample, &grid, 50, 0.05, 1).unwrap();
        assert_eq!(rows.len(), 4);
        for row in rows {
            let th = row.theta_hat.unwrap();
            assert!((th - expected).abs() <= 1e-13 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn sweep_records_per_point_failures() {
        let sample = ArmSample::new(
            normal_sample(30, 0.0, 1.0, 12),
            normal_sample(30, 0.0, 1.0, 13),
        )
        .unwrap();
        // γ = 1 cannot be calibrated with a finite intercept.
        let grid = SweepGrid::new(vec![0.5, 1.0], vec![0.5], vec![0.5], vec![0.5]);
        let rows = sweep(&sample, &grid, 50, 0.05, 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status, "ok");
        assert_eq!(rows[1].status, "validation");
        assert_eq!(rows[1].theta_hat, None);
        // Row order is lexicographic in the axes.
        assert_eq!(rows[0].gamma_a, 0.5);
        assert_eq!(rows[1].gamma_a, 1.0);
    }

    #[test]
    fn monotone_response_in_alpha1_a() {
        let sample = ArmSample::new(
            normal_sample(300, 2.5, 2.0, 14),
            normal_sample(300, 1.5, 2.0, 15),
        )
        .unwrap();
        let mut last = f64::NEG_INFINITY;
        for alpha in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let th = estimate_theta(&sample, &params(0.4, 0.6, alpha, 1.0)).unwrap();
            assert!(th > last, "θ̂ not increasing at α1_A = {alpha}");
            last = th;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn translating_both_arms_preserves_theta(
            shift in -5.0f64..5.0,
            alpha1 in -1.5f64..1.5,
            gamma in 0.15f64..0.85,
        ) {
            let y_a = normal_sample(120, 2.0, 1.5, 21);
            let y_b = normal_sample(100, 1.0, 1.5, 22);
            let p = params(gamma, gamma, alpha1, alpha1);
            let base = estimate_theta(&ArmSample::new(y_a.clone(), y_b.clone()).unwrap(), &p).unwrap();
            let shifted = ArmSample::new(
                y_a.iter().map(|v| v + shift).collect(),
                y_b.iter().map(|v| v + shift).collect(),
            ).unwrap();
            let moved = estimate_theta(&shifted, &p).unwrap();
            prop_assert!((moved - base).abs() < 1e-7, "{moved} vs {base}");
        }

        #[test]
        fn translating_one_arm_shifts_theta(
            shift in -5.0f64..5.0,
            alpha1 in -1.5f64..1.5,
            gamma in 0.15f64..0.85,
        ) {
            let y_a = normal_sample(120, 2.0, 1.5, 23);
            let y_b = normal_sample(100, 1.0, 1.5, 24);
            let p = params(gamma, 0.5, alpha1, 0.8);
            let base = estimate_theta(&ArmSample::new(y_a.clone(), y_b.clone()).unwrap(), &p).unwrap();
            let shifted = ArmSample::new(
                y_a.iter().map(|v| v + shift).collect(),
                y_b.clone(),
            ).unwrap();
            let moved = estimate_theta(&shifted, &p).unwrap();
            prop_assert!((moved - (base + shift)).abs() < 1e-7, "{moved} vs {}", base + shift);
        }
    }
}
