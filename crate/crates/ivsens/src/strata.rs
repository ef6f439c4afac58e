//! Principal-strata bookkeeping: stratum proportions, the forward map to
//! observable treatment-cell probabilities, and the partial inversions that
//! recover the complier fractions when one stratum is assumed empty.
//!
//! Subjects are classified by their pair of potential treatments under the
//! two instrument values. Nine strata exist a priori; the two monotonicity
//! assumptions exclude S7–S9, so valid proportion vectors put exactly zero
//! mass there. The full six-equation system linking stratum proportions to
//! observable cells is underdetermined, so only the three single-stratum-empty
//! restrictions are inverted.

use std::fmt;

use crate::error::{Error, Result};
use crate::{Arm, Treatment};

/// Tolerance for "proportions sum to one".
pub const PROPORTION_SUM_TOL: f64 = 1e-12;

/// Recovered proportions this far below zero are treated as floating-point
/// noise and clamped to exactly zero; anything lower is an inconsistency.
const CLAMP_TOL: f64 = 1e-9;

/// Tolerance on the recovered-proportion sum in the cell inversion; cell
/// frequencies estimated from data carry more noise than exact simplex input.
const INVERSION_SUM_TOL: f64 = 1e-6;

/// The nine principal strata. S1 always takes B, S2 always takes A, S3 always
/// takes C, S4 complies with the instrument; S5 takes B under Z=B and C under
/// Z=A; S6 takes A under Z=A and C under Z=B. S7–S9 are the patterns excluded
/// by the two monotonicity assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StratumId {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
    S9,
}

impl StratumId {
    pub const ALL: [StratumId; 9] = [
        StratumId::S1,
        StratumId::S2,
        StratumId::S3,
        StratumId::S4,
        StratumId::S5,
        StratumId::S6,
        StratumId::S7,
        StratumId::S8,
        StratumId::S9,
    ];

    pub fn excluded_by_monotonicity(self) -> bool {
        matches!(self, StratumId::S7 | StratumId::S8 | StratumId::S9)
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|&s| s == self).unwrap()
    }
}

impl fmt::Display for StratumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.index() + 1)
    }
}

/// Proportion of the population in each principal stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct StrataProportions {
    pi: [f64; 9],
}

impl StrataProportions {
    /// Validates non-negativity, zero mass on the monotonicity-excluded
    /// strata, and a unit sum.
    pub fn new(pi: [f64; 9]) -> Result<Self> {
        for (i, &p) in pi.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Validation(format!(
                    "stratum proportion π^{} must be a finite non-negative number, got {p}",
                    StratumId::ALL[i]
                )));
            }
        }
        for s in StratumId::ALL
            .iter()
            .filter(|s| s.excluded_by_monotonicity())
        {
            if pi[s.index()] != 0.0 {
                return Err(Error::Validation(format!(
                    "stratum {s} is excluded by monotonicity and must have proportion exactly 0"
                )));
            }
        }
        let sum: f64 = pi.iter().sum();
        if (sum - 1.0).abs() > PROPORTION_SUM_TOL {
            return Err(Error::Validation(format!(
                "stratum proportions must sum to 1 within {PROPORTION_SUM_TOL:e}, got {sum}"
            )));
        }
        Ok(Self { pi })
    }

    /// Builds from the six non-excluded strata S1..S6 in order.
    pub fn from_active(active: [f64; 6]) -> Result<Self> {
        let mut pi = [0.0; 9];
        pi[..6].copy_from_slice(&active);
        Self::new(pi)
    }

    pub fn proportion(&self, s: StratumId) -> f64 {
        self.pi[s.index()]
    }
}

/// Probabilities of each received treatment given each instrument value.
/// For each instrument value the three entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CellProbabilities {
    // indexed [z][d] with z ∈ {A,B}, d ∈ {A,B,C}
    p: [[f64; 3]; 2],
}

impl CellProbabilities {
    /// `given_a` and `given_b` list p(D=A|Z=z), p(D=B|Z=z), p(D=C|Z=z).
    pub fn new(given_a: [f64; 3], given_b: [f64; 3]) -> Result<Self> {
        for (z, row) in [(Arm::A, &given_a), (Arm::B, &given_b)] {
            for (d, &p) in [Treatment::A, Treatment::B, Treatment::C]
                .iter()
                .zip(row.iter())
            {
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(Error::Validation(format!(
                        "cell probability p(D={d}|Z={z}) must lie in [0,1], got {p}"
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROPORTION_SUM_TOL {
                return Err(Error::Validation(format!(
                    "cell probabilities given Z={z} must sum to 1 within {PROPORTION_SUM_TOL:e}, got {sum}"
                )));
            }
        }
        Ok(Self {
            p: [given_a, given_b],
        })
    }

    /// p(D=d | Z=z).
    pub fn prob(&self, z: Arm, d: Treatment) -> f64 {
        let zi = match z {
            Arm::A => 0,
            Arm::B => 1,
        };
        let di = match d {
            Treatment::A => 0,
            Treatment::B => 1,
            Treatment::C => 2,
        };
        self.p[zi][di]
    }
}

/// Forward map from stratum proportions to observable cell probabilities.
pub fn cell_probabilities(pi: &StrataProportions) -> CellProbabilities {
    let p = |s| pi.proportion(s);
    use StratumId::*;
    let given_a = [p(S2) + p(S4) + p(S6), p(S1), p(S3) + p(S5)];
    let given_b = [p(S2), p(S1) + p(S4) + p(S5), p(S3) + p(S6)];
    // Row sums deviate from the π sum only by regrouping rounding, far inside
    // the constructor tolerance.
    CellProbabilities {
        p: [given_a, given_b],
    }
}

/// Complier fractions within the two matched cells:
/// γ_A = π^S4/(π^S2+π^S4+π^S6) and γ_B = π^S4/(π^S1+π^S4+π^S5).
pub fn gammas_from_strata(pi: &StrataProportions) -> Result<(f64, f64)> {
    use StratumId::*;
    let den_a = pi.proportion(S2) + pi.proportion(S4) + pi.proportion(S6);
    let den_b = pi.proportion(S1) + pi.proportion(S4) + pi.proportion(S5);
    if den_a <= 0.0 {
        return Err(Error::DegenerateCell(
            "cell (Z=A, D=A) has zero mass: π^S2+π^S4+π^S6 = 0".into(),
        ));
    }
    if den_b <= 0.0 {
        return Err(Error::DegenerateCell(
            "cell (Z=B, D=B) has zero mass: π^S1+π^S4+π^S5 = 0".into(),
        ));
    }
    Ok((
        pi.proportion(StratumId::S4) / den_a,
        pi.proportion(StratumId::S4) / den_b,
    ))
}

/// Which of the three invertibility restrictions to apply: the named stratum
/// is assumed empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyStratum {
    S3,
    S5,
    S6,
}

impl EmptyStratum {
    pub fn stratum(self) -> StratumId {
        match self {
            EmptyStratum::S3 => StratumId::S3,
            EmptyStratum::S5 => StratumId::S5,
            EmptyStratum::S6 => StratumId::S6,
        }
    }
}

/// Inverts the cell system under the declared empty-stratum restriction.
///
/// Each restriction yields closed forms for the remaining five proportions.
/// Recovered values within [`CLAMP_TOL`] below zero are clamped to exactly
/// zero (empirical cell frequencies routinely sit on the boundary); anything
/// lower is reported as an inconsistency naming the offending stratum.
pub fn strata_from_cells(
    cells: &CellProbabilities,
    empty: EmptyStratum,
) -> Result<StrataProportions> {
    let p_aa = cells.prob(Arm::A, Treatment::A);
    let p_ab = cells.prob(Arm::B, Treatment::A);
    let p_ba = cells.prob(Arm::A, Treatment::B);
    let p_bb = cells.prob(Arm::B, Treatment::B);
    let p_ca = cells.prob(Arm::A, Treatment::C);
    let p_cb = cells.prob(Arm::B, Treatment::C);

    // In all three cases π^S1 and π^S2 come from the mismatched cells.
    let pi1 = p_ba;
    let pi2 = p_ab;
    let (pi3, pi4, pi5, pi6) = match empty {
        EmptyStratum::S6 => {
            let pi3 = p_cb;
            (pi3, p_aa - pi2, p_ca - pi3, 0.0)
        }
        EmptyStratum::S5 => {
            let pi3 = p_ca;
            (pi3, p_bb - pi1, 0.0, p_cb - pi3)
        }
        EmptyStratum::S3 => (0.0, p_aa - pi2 - p_cb, p_ca, p_cb),
    };

    let mut active = [pi1, pi2, pi3, pi4, pi5, pi6];
    let names = [
        StratumId::S1,
        StratumId::S2,
        StratumId::S3,
        StratumId::S4,
        StratumId::S5,
        StratumId::S6,
    ];
    for (value, name) in active.iter_mut().zip(names) {
        if *value < -CLAMP_TOL {
            return Err(Error::InconsistentCells(format!(
                "recovered π^{name} = {value} under the empty-{} restriction",
                empty.stratum()
            )));
        }
        if *value < 0.0 {
            *value = 0.0;
        }
    }

    let sum: f64 = active.iter().sum();
    if (sum - 1.0).abs() > INVERSION_SUM_TOL {
        return Err(Error::InconsistentCells(format!(
            "recovered proportions sum to {sum}, not 1 within {INVERSION_SUM_TOL:e}"
        )));
    }
    // Renormalize the residual (≤ 1e-6) so the simplex invariant holds
    // exactly; the γ ratios are scale invariant, so this cannot move them.
    for value in active.iter_mut() {
        *value /= sum;
    }
    StrataProportions::from_active(active)
}

/// Recovers (γ_A, γ_B) from observable cells under the declared restriction.
pub fn identify_gammas(cells: &CellProbabilities, empty: EmptyStratum) -> Result<(f64, f64)> {
    gammas_from_strata(&strata_from_cells(cells, empty)?)
}
