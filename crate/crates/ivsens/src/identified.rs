//! Estimators for the regimes where preselection is ignorable: the plug-in
//! moment estimator when selection into the third arm is unrelated to the
//! instrument, and the three-step inverse-probability-weighted 2SLS when
//! selection depends only on measured covariates and the instrument.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::weights::logistic;
use crate::{Arm, Treatment};

/// Score sup-norm below which the logistic fit counts as converged.
pub const LOGIT_SCORE_TOL: f64 = 1e-8;

/// Coefficient magnitude that flags complete separation.
const SEPARATION_BOUND: f64 = 30.0;

/// Selected subjects get at least this estimated selection probability when
/// forming inverse weights; smaller fitted values are clipped and counted.
pub const WEIGHT_CLIP: f64 = 0.01;

const MAX_IRLS_ITERATIONS: usize = 100;

/// One observational record. Selection (`r = 1`) is by construction the event
/// that the received treatment is one of the two being compared.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub y: f64,
    pub z: Arm,
    pub d: Treatment,
    pub x: Vec<f64>,
}

impl Record {
    /// The selection flag: true iff the received treatment is A or B.
    pub fn selected(&self) -> bool {
        !matches!(self.d, Treatment::C)
    }
}

/// Full observational dataset with a common covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    n_covariates: usize,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation(
                "dataset must contain at least one record".into(),
            ));
        }
        let n_covariates = records[0].x.len();
        for (i, rec) in records.iter().enumerate() {
            if rec.x.len() != n_covariates {
                return Err(Error::Validation(format!(
                    "record {i} has {} covariates, expected {n_covariates}",
                    rec.x.len()
                )));
            }
            if !rec.y.is_finite() || rec.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "record {i} contains non-finite numerics"
                )));
            }
        }
        Ok(Self {
            records,
            n_covariates,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.n_covariates
    }

    /// The subset assigned to one of the treatments of interest.
    pub fn selected(&self) -> Result<Dataset> {
        let records: Vec<Record> = self
            .records
            .iter()
            .filter(|r| r.selected())
            .cloned()
            .collect();
        if records.is_empty() {
            return Err(Error::Validation("no records with D in {A, B}".into()));
        }
        Ok(Dataset {
            records,
            n_covariates: self.n_covariates,
        })
    }

    /// Count of records per (z, d) cell, ordered (AA, AB, AC, BA, BB, BC)
    /// with the instrument first.
    pub fn cell_counts(&self) -> [usize; 6] {
        let mut counts = [0usize; 6];
        for rec in &self.records {
            let zi = match rec.z {
                Arm::A => 0,
                Arm::B => 1,
            };
            let di = match rec.d {
                Treatment::A => 0,
                Treatment::B => 1,
                Treatment::C => 2,
            };
            counts[zi * 3 + di] += 1;
        }
        counts
    }
}

/// Maximum-likelihood logistic regression fit of the selection indicator on
/// (intercept, covariates, instrument indicator).
#[derive(Debug, Clone, PartialEq)]
pub struct LogitFit {
    /// Intercept, covariate slopes, then the `z = A` indicator slope.
    pub coefficients: Vec<f64>,
    /// Standard errors from the inverse observed information.
    pub se: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl LogitFit {
    /// Fitted selection probability for one record.
    pub fn predict(&self, x: &[f64], z: Arm) -> f64 {
        let mut eta = self.coefficients[0];
        for (b, v) in self.coefficients[1..=x.len()].iter().zip(x) {
            eta += b * v;
        }
        eta += self.coefficients[x.len() + 1] * if z == Arm::A { 1.0 } else { 0.0 };
        logistic(eta)
    }
}

fn log_likelihood(eta: &DVector<f64>, y: &DVector<f64>) -> f64 {
    // Σ [y·η − log(1 + e^η)] with a stable softplus.
    eta.iter()
        .zip(y.iter())
        .map(|(&e, &yi)| {
            let softplus = if e > 30.0 {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            };
            yi * e - softplus
        })
        .sum()
}

/// Iteratively reweighted least squares for the selection logit, with step
/// halving on likelihood decrease. Declares convergence when the score
/// sup-norm drops to [`LOGIT_SCORE_TOL`]; at most 100 iterations.
pub fn fit_selection_logit(data: &Dataset) -> Result<LogitFit> {
    let n = data.len();
    let p = data.n_covariates() + 2;
    if n < p {
        return Err(Error::SingularDesign(format!(
            "{n} records cannot identify {p} coefficients"
        )));
    }

    let mut design = DMatrix::zeros(n, p);
    let mut response = DVector::zeros(n);
    for (i, rec) in data.records().iter().enumerate() {
        design[(i, 0)] = 1.0;
        for (j, &v) in rec.x.iter().enumerate() {
            design[(i, j + 1)] = v;
        }
        design[(i, p - 1)] = if rec.z == Arm::A { 1.0 } else { 0.0 };
        response[i] = if rec.selected() { 1.0 } else { 0.0 };
    }

    let mut beta = DVector::zeros(p);
    let mut eta = &design * &beta;
    let mut ll = log_likelihood(&eta, &response);

    for iteration in 1..=MAX_IRLS_ITERATIONS {
        let mu = eta.map(logistic);
        let score = design.transpose() * (&response - &mu);
        if score.amax() <= LOGIT_SCORE_TOL {
            let info = information_matrix(&design, &mu);
            let se = standard_errors(&info)?;
            return Ok(LogitFit {
                coefficients: beta.iter().copied().collect(),
                se,
                converged: true,
                iterations: iteration - 1,
            });
        }

        let info = information_matrix(&design, &mu);
        let chol = info.clone().cholesky().ok_or_else(|| {
            Error::SingularDesign("design matrix (1, x, 1{z=A}) is rank deficient".into())
        })?;
        let delta = chol.solve(&score);

        // Step halving keeps the likelihood nondecreasing.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &beta + step * &delta;
            let cand_eta = &design * &candidate;
            let cand_ll = log_likelihood(&cand_eta, &response);
            if cand_ll >= ll - 1e-12 {
                beta = candidate;
                eta = cand_eta;
                ll = cand_ll;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::Solver(
                "logistic likelihood could not be increased".into(),
            ));
        }
        if beta.amax() > SEPARATION_BOUND {
            return Err(Error::Separation(format!(
                "coefficient magnitude exceeded {SEPARATION_BOUND}; the selection outcome is \
                 completely separated"
            )));
        }
    }

    let mu = eta.map(logistic);
    let info = information_matrix(&design, &mu);
    let se = standard_errors(&info)?;
    Ok(LogitFit {
        coefficients: beta.iter().copied().collect(),
        se,
        converged: false,
        iterations: MAX_IRLS_ITERATIONS,
    })
}

fn information_matrix(design: &DMatrix<f64>, mu: &DVector<f64>) -> DMatrix<f64> {
    let p = design.ncols();
    let mut info = DMatrix::zeros(p, p);
    for i in 0..design.nrows() {
        let w = mu[i] * (1.0 - mu[i]);
        for a in 0..p {
            for b in a..p {
                info[(a, b)] += w * design[(i, a)] * design[(i, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[(a, b)] = info[(b, a)];
        }
    }
    info
}

fn standard_errors(info: &DMatrix<f64>) -> Result<Vec<f64>> {
    let inverse = info
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularDesign("information matrix is singular".into()))?
        .inverse();
    Ok((0..info.nrows())
        .map(|j| inverse[(j, j)].max(0.0).sqrt())
        .collect())
}

/// Plug-in moment estimator for the regime where the instrument is unrelated
/// to selection, so the two instrument-discordant strata are empty.
///
/// Uses the cell frequencies to estimate the always-taker shares, removes the
/// always-taker contribution from each matched-cell mean, and rescales by the
/// complier fraction. Always-taker cells that are empty contribute nothing,
/// which reduces the estimator to the matched-cell mean difference.
pub fn estimate_a1(data: &Dataset) -> Result<f64> {
    let mut count = [[0usize; 3]; 2];
    let mut sum = [[0.0f64; 3]; 2];
    for rec in data.records() {
        let zi = match rec.z {
            Arm::A => 0,
            Arm::B => 1,
        };
        let di = match rec.d {
            Treatment::A => 0,
            Treatment::B => 1,
            Treatment::C => 2,
        };
        count[zi][di] += 1;
        sum[zi][di] += rec.y;
    }
    let n_z_a: usize = count[0].iter().sum();
    let n_z_b: usize = count[1].iter().sum();
    if n_z_a == 0 || n_z_b == 0 {
        return Err(Error::Identification(
            "both instrument groups are required".into(),
        ));
    }
    if count[0][0] == 0 {
        return Err(Error::Identification("cell (Z=A, D=A) is empty".into()));
    }
    if count[1][1] == 0 {
        return Err(Error::Identification("cell (Z=B, D=B) is empty".into()));
    }

    let p_aa = count[0][0] as f64 / n_z_a as f64; // p(D=A | Z=A)
    let p_ab = count[1][0] as f64 / n_z_b as f64; // p(D=A | Z=B)
    let p_ba = count[0][1] as f64 / n_z_a as f64; // p(D=B | Z=A)
    let p_bb = count[1][1] as f64 / n_z_b as f64; // p(D=B | Z=B)

    let complier_a = p_aa - p_ab;
    let complier_b = p_bb - p_ba;
    if complier_a <= 0.0 || complier_b <= 0.0 {
        return Err(Error::Identification(format!(
            "nonpositive complier mass: p(A|A)-p(A|B) = {complier_a}, p(B|B)-p(B|A) = {complier_b}"
        )));
    }

    let m_aa = sum[0][0] / count[0][0] as f64;
    let m_bb = sum[1][1] / count[1][1] as f64;

    // Always-taker means come from the mismatched cells; an empty cell means
    // a zero estimated share, so its term drops.
    let always_a = if count[1][0] > 0 {
        (p_ab / p_aa) * (sum[1][0] / count[1][0] as f64)
    } else {
        0.0
    };
    let always_b = if count[0][1] > 0 {
        (p_ba / p_bb) * (sum[0][1] / count[0][1] as f64)
    } else {
        0.0
    };

    let gamma_a_s4 = complier_a / p_aa;
    let gamma_b_s4 = complier_b / p_bb;
    Ok((m_aa - always_a) / gamma_a_s4 - (m_bb - always_b) / gamma_b_s4)
}

/// Weighted two-stage least squares on the selected subset, with the
/// instrument indicator as the single excluded instrument.
///
/// Both the explicit two-stage computation and the weighted Wald ratio
/// `Cov_w(y, z̃)/Cov_w(d̃, z̃)` are evaluated and cross-checked to 1e-10.
pub fn weighted_2sls(data: &Dataset, weights: &[f64]) -> Result<f64> {
    let n = data.len();
    if weights.len() != n {
        return Err(Error::Validation(format!(
            "{} weights for {n} records",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::Validation(
            "weights must be positive and finite".into(),
        ));
    }
    if data.records().iter().any(|r| !r.selected()) {
        return Err(Error::Validation(
            "weighted 2SLS expects data restricted to received treatments A and B".into(),
        ));
    }

    let total: f64 = weights.iter().sum();
    let mut mean_y = 0.0;
    let mut mean_d = 0.0;
    let mut mean_z = 0.0;
    for (rec, &w) in data.records().iter().zip(weights) {
        mean_y += w * rec.y;
        mean_d += w * if rec.d == Treatment::A { 1.0 } else { 0.0 };
        mean_z += w * if rec.z == Arm::A { 1.0 } else { 0.0 };
    }
    mean_y /= total;
    mean_d /= total;
    mean_z /= total;

    let mut cov_yz = 0.0;
    let mut cov_dz = 0.0;
    let mut var_z = 0.0;
    for (rec, &w) in data.records().iter().zip(weights) {
        let zd = if rec.z == Arm::A { 1.0 } else { 0.0 } - mean_z;
        let dd = if rec.d == Treatment::A { 1.0 } else { 0.0 } - mean_d;
        cov_yz += w * (rec.y - mean_y) * zd;
        cov_dz += w * dd * zd;
        var_z += w * zd * zd;
    }
    cov_yz /= total;
    cov_dz /= total;
    var_z /= total;

    if var_z <= 0.0 {
        return Err(Error::Validation(
            "both instrument groups are required".into(),
        ));
    }
    if cov_dz.abs() < 1e-12 {
        return Err(Error::WeakInstrument(
            "weighted first-stage covariance of treatment with instrument is zero".into(),
        ));
    }
    let wald_ratio = cov_yz / cov_dz;

    // Explicit two-stage route: stage 1 fits d̃ on (1, z̃) by WLS, stage 2
    // fits y on (1, d̂).
    let stage1_slope = cov_dz / var_z;
    let stage1_intercept = mean_d - stage1_slope * mean_z;
    let mut cov_y_dhat = 0.0;
    let mut var_dhat = 0.0;
    for (rec, &w) in data.records().iter().zip(weights) {
        let dhat = stage1_intercept + stage1_slope * if rec.z == Arm::A { 1.0 } else { 0.0 };
        cov_y_dhat += w * (rec.y - mean_y) * (dhat - mean_d);
        var_dhat += w * (dhat - mean_d) * (dhat - mean_d);
    }
    let two_stage = cov_y_dhat / var_dhat;

    let scale = 1.0f64.max(wald_ratio.abs()).max(two_stage.abs());
    if (two_stage - wald_ratio).abs() > 1e-10 * scale {
        return Err(Error::Solver(format!(
            "2SLS routes disagree: two-stage {two_stage} vs Wald ratio {wald_ratio}"
        )));
    }
    Ok(two_stage)
}

/// How Step 3 of the ignorable-selection procedure weights the selected
/// records: inverse fitted selection probabilities (the pseudo-population
/// weighting) or the fitted probabilities themselves, kept for audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Inverse,
    Literal,
}

impl std::fmt::Display for WeightMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightMode::Inverse => write!(f, "inverse"),
            WeightMode::Literal => write!(f, "literal"),
        }
    }
}

/// Output of the three-step estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct A2Result {
    pub theta_hat: f64,
    pub mode: WeightMode,
    /// Selected records whose fitted probability was clipped at [`WEIGHT_CLIP`].
    pub clipped: usize,
    pub n_selected: usize,
    pub fit: LogitFit,
}

/// Three-step estimator for the regime where selection depends only on the
/// covariates and the instrument: fit the selection logit on everyone,
/// restrict to the selected, and run 2SLS weighted by the reciprocal fitted
/// probabilities.
pub fn estimate_a2(data: &Dataset, mode: WeightMode) -> Result<A2Result> {
    let fit = fit_selection_logit(data)?;
    let selected = data.selected()?;
    let mut clipped = 0usize;
    let weights: Vec<f64> = selected
        .records()
        .iter()
        .map(|rec| {
            let pi = fit.predict(&rec.x, rec.z);
            match mode {
                WeightMode::Inverse => {
                    if pi < WEIGHT_CLIP {
                        clipped += 1;
                        1.0 / WEIGHT_CLIP
                    } else {
                        1.0 / pi
                    }
                }
                WeightMode::Literal => pi,
            }
        })
        .collect();
    let theta_hat = weighted_2sls(&selected, &weights)?;
    Ok(A2Result {
        theta_hat,
        mode,
        clipped,
        n_selected: selected.len(),
        fit,
    })
}
