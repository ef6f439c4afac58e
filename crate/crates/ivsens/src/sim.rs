//! Monte Carlo simulation engine: scenario definitions, solving for the
//! second arm's location at a target complier effect, observed-arm
//! generation, rejection sampling of complier outcomes, and replication
//! summaries of bias, spread, and rejection rates.
//!
//! A scenario fixes the true sensitivity parameters and the matched-cell
//! outcome model: arm A outcomes are normal around a known location while arm
//! B's location μ is solved so that the true complier effect — the difference
//! of the calibrated complier means — equals the target. Each dataset draws
//! two IV groups of `n_per_arm` subjects, keeps the matched cells (binomially
//! thinned by the scenario's cell probabilities when strata are given), and
//! evaluates the estimator under each presumed parameter vector. Rejection
//! sampling from the complier densities serves as an independent oracle for
//! the calibrated moments.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;

use crate::density::{Density, DensityGrid, NormalDensity};
use crate::error::{Error, Result};
use crate::estimator::{bootstrap_se, estimate_theta, normal_quantile, sample_sd, ArmSample};
use crate::rng::{derive_seed, purpose, stream};
use crate::strata::{cell_probabilities, gammas_from_strata, StrataProportions};
use crate::weights::{
    bisect_increasing, calibrate_intercept_density, logistic, selection_weight, SelectionModel,
    SensitivityParams,
};
use crate::{Arm, Treatment};

/// Residual tolerance for the μ solve.
pub const MU_TOL: f64 = 1e-8;

/// Starting bracket for the μ solve.
const MU_BRACKET: (f64, f64) = (-20.0, 25.0);

/// Simulation scenario: the data-generating truth plus replication sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Principal-strata proportions; when present they define both the
    /// default true complier fractions and the matched-cell probabilities
    /// used to thin the IV groups.
    pub strata: Option<StrataProportions>,
    /// Explicit true complier fraction for arm A (overrides the
    /// strata-derived value).
    pub gamma_a: Option<f64>,
    /// Explicit true complier fraction for arm B.
    pub gamma_b: Option<f64>,
    pub true_alpha1_a: f64,
    pub true_alpha1_b: f64,
    pub theta_target: f64,
    /// Subjects per IV group, before thinning to the matched cell.
    pub n_per_arm: usize,
    pub n_replicates: usize,
    /// Bootstrap replicates per estimate; 0 skips bootstrap and testing
    /// (bias-only runs).
    pub n_boot: usize,
    /// Nominal test size.
    pub level: f64,
    /// Outcome density of the matched A cell.
    pub base_a: NormalDensity,
    pub seed: u64,
}

pub(crate) struct ResolvedTruth {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub p_match_a: f64,
    pub p_match_b: f64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_arm < 2 {
            return Err(Error::Validation(format!(
                "n_per_arm must be at least 2, got {}",
                self.n_per_arm
            )));
        }
        if self.n_replicates < 1 {
            return Err(Error::Validation("n_replicates must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Validation(format!(
                "level must lie in (0,1), got {}",
                self.level
            )));
        }
        if !self.theta_target.is_finite() {
            return Err(Error::Validation("theta_target must be finite".into()));
        }
        if !self.true_alpha1_a.is_finite() || !self.true_alpha1_b.is_finite() {
            return Err(Error::Validation("true slopes must be finite".into()));
        }
        self.resolve().map(|_| ())
    }

    pub(crate) fn resolve(&self) -> Result<ResolvedTruth> {
        let truth = match (&self.strata, self.gamma_a, self.gamma_b) {
            (Some(pi), ga, gb) => {
                let (strata_ga, strata_gb) = gammas_from_strata(pi)?;
                let cells = cell_probabilities(pi);
                ResolvedTruth {
                    gamma_a: ga.unwrap_or(strata_ga),
                    gamma_b: gb.unwrap_or(strata_gb),
                    p_match_a: cells.prob(Arm::A, Treatment::A),
                    p_match_b: cells.prob(Arm::B, Treatment::B),
                }
            }
            (None, Some(ga), Some(gb)) => ResolvedTruth {
                gamma_a: ga,
                gamma_b: gb,
                p_match_a: 1.0,
                p_match_b: 1.0,
            },
            _ => {
                return Err(Error::Validation(
                    "scenario needs strata proportions or explicit gamma_a and gamma_b".into(),
                ))
            }
        };
        for (label, g) in [("gamma_A", truth.gamma_a), ("gamma_B", truth.gamma_b)] {
            if !g.is_finite() || g <= 0.0 || g >= 1.0 {
                return Err(Error::Validation(format!(
                    "true {label} must lie strictly inside (0,1), got {g}"
                )));
            }
        }
        Ok(truth)
    }

    /// Presumed parameters equal to the scenario truth (the "correctly
    /// specified" row of the sensitivity tables).
    pub fn true_params(&self) -> Result<SensitivityParams> {
        let truth = self.resolve()?;
        SensitivityParams::new(
            truth.gamma_a,
            truth.gamma_b,
            self.true_alpha1_a,
            self.true_alpha1_b,
        )
    }
}

/// Mean outcome of compliers under a calibrated selection model:
/// ∫ y·w(y)·f(y) dy / γ by the crate-standard quadrature.
pub fn true_complier_mean(base: &dyn Density, alpha1: f64, gamma: f64) -> Result<f64> {
    let alpha0 = calibrate_intercept_density(base, alpha1, gamma)?;
    if alpha1 == 0.0 {
        // Weights are constant, so the complier density is the base density.
        return Ok(base.location());
    }
    let grid = DensityGrid::new(base);
    Ok(grid.integrate(|y| y * logistic(alpha0 + alpha1 * y)) / gamma)
}

/// Solves for the arm-B location μ at which the true complier effect equals
/// the scenario's target, by bisection over a bracket expanded from
/// [−20, 25]. The arm-B complier mean is verified strictly increasing in μ
/// across the bracket before solving.
pub fn solve_mu(config: &ScenarioConfig) -> Result<f64> {
    config.validate()?;
    let truth = config.resolve()?;
    let sd = config.base_a.sd();
    let mean_a = true_complier_mean(&config.base_a, config.true_alpha1_a, truth.gamma_a)?;

    let mean_b = |mu: f64| -> Result<f64> {
        let base_b = NormalDensity::new(mu, sd)?;
        true_complier_mean(&base_b, config.true_alpha1_b, truth.gamma_b)
    };

    let (mut lo, mut hi) = MU_BRACKET;
    // residual(μ) = mean_a − mean_b(μ) − θ is decreasing in μ; bisect its
    // negation. Expand the bracket until it straddles the root.
    let objective = |mu: f64| -> Result<f64> { Ok(mean_b(mu)? - (mean_a - config.theta_target)) };
    while objective(lo)? > 0.0 {
        lo *= 2.0;
        if lo < -1e4 {
            return Err(Error::Solver(
                "no μ above -1e4 matches the target effect".into(),
            ));
        }
    }
    while objective(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Solver(
                "no μ below 1e4 matches the target effect".into(),
            ));
        }
    }

    // Monotonicity check across the final bracket.
    let probes = 9;
    let mut last = f64::NEG_INFINITY;
    for i in 0..probes {
        let mu = lo + (hi - lo) * i as f64 / (probes - 1) as f64;
        let m = mean_b(mu)?;
        if m <= last {
            return Err(Error::Solver(format!(
                "arm-B complier mean is not strictly increasing in μ near {mu}"
            )));
        }
        last = m;
    }

    // Errors inside the residual cannot occur once the probes above passed;
    // map them to an out-of-band value that bisection treats as no-root.
    let resid = |mu: f64| objective(mu).unwrap_or(f64::NAN);
    bisect_increasing(resid, lo, hi, 1e4, MU_TOL)
        .map_err(|m| Error::Solver(format!("μ solve: {m}")))
}

/// Draws one replicate's observed matched-cell outcomes.
///
/// Each IV group holds `n_per_arm` subjects; when the scenario carries strata
/// the matched cell keeps a Binomial(n_per_arm, p(D=Z|Z)) subset, otherwise
/// the whole group. Outcomes are normal: the scenario's base density for arm
/// A, location μ with the shared scale for arm B. The stream derives from
/// `(seed, OBSERVED, replicate_index)`.
pub fn draw_observed(config: &ScenarioConfig, mu: f64, replicate_index: u64) -> Result<ArmSample> {
    let truth = config.resolve()?;
    let mut rng = stream(config.seed, &[purpose::OBSERVED, replicate_index]);

    let n_a = draw_cell_size(&mut rng, config.n_per_arm, truth.p_match_a)?;
    let n_b = draw_cell_size(&mut rng, config.n_per_arm, truth.p_match_b)?;
    let normal_a = Normal::new(config.base_a.mean(), config.base_a.sd())
        .map_err(|e| Error::Validation(e.to_string()))?;
    let normal_b =
        Normal::new(mu, config.base_a.sd()).map_err(|e| Error::Validation(e.to_string()))?;
    let y_a: Vec<f64> = (0..n_a).map(|_| normal_a.sample(&mut rng)).collect();
    let y_b: Vec<f64> = (0..n_b).map(|_| normal_b.sample(&mut rng)).collect();
    ArmSample::new(y_a, y_b)
}

fn draw_cell_size(rng: &mut impl Rng, n: usize, p: f64) -> Result<usize> {
    if p >= 1.0 {
        return Ok(n);
    }
    let size = Binomial::new(n as u64, p)
        .map_err(|e| Error::Validation(e.to_string()))?
        .sample(rng) as usize;
    if size < 2 {
        return Err(Error::Replication(format!(
            "matched cell collapsed to {size} subjects"
        )));
    }
    Ok(size)
}

/// Draws `n` complier outcomes by rejection: propose from the base density,
/// accept with probability equal to the selection weight. The expected
/// acceptance rate is the calibrated γ.
pub fn rejection_sample_complier(
    base: &dyn Density,
    model: &SelectionModel,
    n: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = stream(seed, &[]);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let y = base.sample(&mut rng);
        let u: f64 = rng.gen();
        if u < selection_weight(y, model) {
            out.push(y);
        }
    }
    out
}

/// Per-presumed-row Monte Carlo aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRow {
    pub params: SensitivityParams,
    /// Successful replicate estimates in replicate order.
    pub estimates: Vec<f64>,
    /// Mean of (θ_target − θ̂) over replicates.
    pub mean_bias: f64,
    /// Replicate standard deviation of θ̂.
    pub sd: f64,
    /// Mean of (θ_target − θ̂)².
    pub mse: f64,
    /// Rejection rate of the zero null (one-sided upper-tail test at the
    /// scenario level); `None` for bias-only runs.
    pub power: Option<f64>,
    /// Mean bootstrap standard error; `None` for bias-only runs.
    pub mean_se: Option<f64>,
    /// Normal-theory interval mean_bias ± 1.96·sd/√n for the bias mean.
    pub bias_ci: (f64, f64),
    pub n_failed: usize,
}

impl MonteCarloRow {
    /// Whether the bias is not distinguishable from zero at the shading level.
    pub fn bias_insignificant(&self) -> bool {
        self.bias_ci.0 <= 0.0 && 0.0 <= self.bias_ci.1
    }
}

/// Full replication summary for one scenario and θ target.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub theta_target: f64,
    pub mu: f64,
    pub n_replicates: usize,
    pub level: f64,
    pub rows: Vec<MonteCarloRow>,
}

struct ReplicatePoint {
    theta: f64,
    se: Option<f64>,
    reject: Option<bool>,
}

/// Runs the scenario's replications and evaluates every presumed parameter
/// vector on each dataset.
///
/// μ is solved once. Replicates execute independently (and may run in
/// parallel); their data streams derive from `(seed, replicate index)` and
/// bootstrap streams from a separate purpose tag, so adding presumed rows
/// never perturbs the generated data and results are scheduling-independent.
/// Replicate failures are excluded per row and counted; more than 1% of
/// failures in any row fails the run.
pub fn run_replications(
    config: &ScenarioConfig,
    presumed: &[SensitivityParams],
) -> Result<MonteCarloSummary> {
    config.validate()?;
    if presumed.is_empty() {
        return Err(Error::Validation(
            "at least one presumed parameter vector required".into(),
        ));
    }
    for p in presumed {
        p.validate()?;
    }

    let mu = solve_mu(config)?;
    // Rejection counts follow the power-table convention: a one-sided
    // upper-tail normal test of the zero null, θ̂ > z_{1−level}·se. (The
    // sign-agnostic two-sided test would count mis-specified rows whose
    // estimates land far below zero as "detections".)
    let critical = normal_quantile(1.0 - config.level);
    let per_replicate: Vec<Vec<Option<ReplicatePoint>>> = (0..config.n_replicates)
        .into_par_iter()
        .map(|rep| {
            let sample = match draw_observed(config, mu, rep as u64) {
                Ok(s) => s,
                Err(_) => return (0..presumed.len()).map(|_| None).collect(),
            };
            presumed
                .iter()
                .map(|params| {
                    let theta = estimate_theta(&sample, params).ok()?;
                    if config.n_boot == 0 {
                        return Some(ReplicatePoint {
                            theta,
                            se: None,
                            reject: None,
                        });
                    }
                    let boot_seed = derive_seed(config.seed, &[purpose::BOOTSTRAP, rep as u64]);
                    let se = bootstrap_se(&sample, params, config.n_boot, boot_seed).ok()?;
                    let reject = theta > critical * se;
                    Some(ReplicatePoint {
                        theta,
                        se: Some(se),
                        reject: Some(reject),
                    })
                })
                .collect()
        })
        .collect();

    let n_total = config.n_replicates;
    let rows = presumed
        .iter()
        .enumerate()
        .map(|(j, params)| {
            let points: Vec<&ReplicatePoint> = per_replicate
                .iter()
                .filter_map(|rep| rep[j].as_ref())
                .collect();
            let n_failed = n_total - points.len();
            if n_failed as f64 > 0.01 * n_total as f64 {
                return Err(Error::Replication(format!(
                    "{n_failed} of {n_total} replicates failed for presumed row {j}"
                )));
            }
            let estimates: Vec<f64> = points.iter().map(|p| p.theta).collect();
            let n_used = estimates.len() as f64;
            let mean = estimates.iter().sum::<f64>() / n_used;
            let mean_bias = config.theta_target - mean;
            let sd = if estimates.len() > 1 {
                sample_sd(&estimates)
            } else {
                0.0
            };
            let mse = estimates
                .iter()
                .map(|e| (config.theta_target - e) * (config.theta_target - e))
                .sum::<f64>()
                / n_used;
            let (power, mean_se) = if config.n_boot > 0 {
                let rejections = points.iter().filter(|p| p.reject == Some(true)).count() as f64;
                let se_sum: f64 = points.iter().filter_map(|p| p.se).sum();
                (Some(rejections / n_used), Some(se_sum / n_used))
            } else {
                (None, None)
            };
            let half = 1.96 * sd / n_used.sqrt();
            Ok(MonteCarloRow {
                params: *params,
                estimates,
                mean_bias,
                sd,
                mse,
                power,
                mean_se,
                bias_ci: (mean_bias - half, mean_bias + half),
                n_failed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MonteCarloSummary {
        theta_target: config.theta_target,
        mu,
        n_replicates: n_total,
        level: config.level,
        rows,
    })
}
