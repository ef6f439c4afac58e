//! TOML run-configuration schema and conversion into library types.
//!
//! One flat key-value file with sections; every command reads the sections it
//! needs and rejects unknown keys. See the README for the documented schema.

use std::path::PathBuf;

use serde::Deserialize;

use ivsens::density::NormalDensity;
use ivsens::estimator::SweepGrid;
use ivsens::sim::ScenarioConfig;
use ivsens::strata::StrataProportions;
use ivsens::weights::SensitivityParams;

use crate::error::{CliError, Result};

pub const DEFAULT_N_BOOT: usize = 500;
pub const DEFAULT_LEVEL: f64 = 0.05;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub input: Option<InputSection>,
    pub params: Option<ParamsSection>,
    pub test: Option<TestSection>,
    pub grid: Option<GridSection>,
    pub cells: Option<CellsSection>,
    pub scenario: Option<ScenarioSection>,
    #[serde(default)]
    pub presumed: Vec<PresumedSection>,
    pub identified: Option<IdentifiedSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    /// Arm-sample CSV (`arm,y`) for calibrate/estimate/sweep.
    pub arms: Option<PathBuf>,
    /// Dataset CSV (`y,z,d,x1..xk`) for identified.
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub alpha1_a: f64,
    pub alpha1_b: f64,
}

impl ParamsSection {
    pub fn sensitivity_params(&self) -> Result<SensitivityParams> {
        Ok(SensitivityParams::new(
            self.gamma_a,
            self.gamma_b,
            self.alpha1_a,
            self.alpha1_b,
        )?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSection {
    pub n_boot: Option<usize>,
    pub level: Option<f64>,
    pub null: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Required unless a [cells] section fixes the complier fractions.
    pub gamma_a: Option<Vec<f64>>,
    pub gamma_b: Option<Vec<f64>>,
    pub alpha1_a: Vec<f64>,
    pub alpha1_b: Vec<f64>,
}

impl GridSection {
    pub fn sweep_grid(&self, cells: Option<&CellsSection>) -> Result<SweepGrid> {
        match (cells, &self.gamma_a, &self.gamma_b) {
            (Some(cells), None, None) => {
                let (gamma_a, gamma_b) = cells.identify_gammas()?;
                Ok(SweepGrid {
                    gamma_a: vec![gamma_a],
                    gamma_b: vec![gamma_b],
                    alpha1_a: self.alpha1_a.clone(),
                    alpha1_b: self.alpha1_b.clone(),
                    fixed_gammas: true,
                })
            }
            (Some(_), _, _) => Err(CliError::Config(
                "grid gamma axes and a [cells] section are mutually exclusive".into(),
            )),
            (None, Some(ga), Some(gb)) => Ok(SweepGrid::new(
                ga.clone(),
                gb.clone(),
                self.alpha1_a.clone(),
                self.alpha1_b.clone(),
            )),
            (None, _, _) => Err(CliError::Config(
                "grid needs gamma_a and gamma_b axes (or a [cells] section)".into(),
            )),
        }
    }
}

/// Observable treatment-cell probabilities plus the empty-stratum
/// restriction that makes the complier fractions identifiable.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellsSection {
    /// p(D=A|Z=A)
    pub p_aa: f64,
    /// p(D=B|Z=A)
    pub p_ba: f64,
    /// p(D=C|Z=A)
    pub p_ca: f64,
    /// p(D=A|Z=B)
    pub p_ab: f64,
    /// p(D=B|Z=B)
    pub p_bb: f64,
    /// p(D=C|Z=B)
    pub p_cb: f64,
    /// Which stratum is assumed empty: "S3", "S5", or "S6".
    pub empty: String,
}

impl CellsSection {
    pub fn identify_gammas(&self) -> Result<(f64, f64)> {
        let cells = ivsens::strata::CellProbabilities::new(
            [self.p_aa, self.p_ba, self.p_ca],
            [self.p_ab, self.p_bb, self.p_cb],
        )?;
        let empty = match self.empty.as_str() {
            "S3" | "s3" => ivsens::strata::EmptyStratum::S3,
            "S5" | "s5" => ivsens::strata::EmptyStratum::S5,
            "S6" | "s6" => ivsens::strata::EmptyStratum::S6,
            other => {
                return Err(CliError::Config(format!(
                    "cells.empty must be one of S3, S5, S6; got {other:?}"
                )))
            }
        };
        Ok(ivsens::strata::identify_gammas(&cells, empty)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub pi_s1: Option<f64>,
    pub pi_s2: Option<f64>,
    pub pi_s3: Option<f64>,
    pub pi_s4: Option<f64>,
    pub pi_s5: Option<f64>,
    pub pi_s6: Option<f64>,
    /// Pinned true complier fractions (override the strata-derived values).
    pub gamma_a: Option<f64>,
    pub gamma_b: Option<f64>,
    pub alpha1_a: f64,
    pub alpha1_b: f64,
    /// Target complier effects; one summary block per entry.
    pub theta: Vec<f64>,
    /// Subjects per IV group (cells are thinned from these when strata are
    /// given).
    pub n_per_arm: usize,
    pub n_replicates: usize,
    pub n_boot: Option<usize>,
    pub level: Option<f64>,
    pub mean_a: Option<f64>,
    pub sd: Option<f64>,
}

impl ScenarioSection {
    fn strata(&self) -> Result<Option<StrataProportions>> {
        let pis = [
            self.pi_s1, self.pi_s2, self.pi_s3, self.pi_s4, self.pi_s5, self.pi_s6,
        ];
        if pis.iter().all(Option::is_none) {
            return Ok(None);
        }
        if pis.iter().any(Option::is_none) {
            return Err(CliError::Config(
                "scenario strata require all of pi_s1..pi_s6 (omit all six to use explicit gammas)"
                    .into(),
            ));
        }
        Ok(Some(StrataProportions::from_active(
            pis.map(Option::unwrap),
        )?))
    }

    /// Library scenario for one θ target, applying CLI-level overrides.
    pub fn scenario_config(
        &self,
        theta_target: f64,
        seed: u64,
        boot_override: Option<usize>,
    ) -> Result<ScenarioConfig> {
        let config = ScenarioConfig {
            strata: self.strata()?,
            gamma_a: self.gamma_a,
            gamma_b: self.gamma_b,
            true_alpha1_a: self.alpha1_a,
            true_alpha1_b: self.alpha1_b,
            theta_target,
            n_per_arm: self.n_per_arm,
            n_replicates: self.n_replicates,
            n_boot: boot_override.or(self.n_boot).unwrap_or(DEFAULT_N_BOOT),
            level: self.level.unwrap_or(DEFAULT_LEVEL),
            base_a: NormalDensity::new(self.mean_a.unwrap_or(2.5), self.sd.unwrap_or(2.0))?,
            seed,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresumedSection {
    /// Defaults to the scenario's true value when omitted.
    pub gamma_a: Option<f64>,
    pub gamma_b: Option<f64>,
    pub alpha1_a: f64,
    pub alpha1_b: f64,
}

impl PresumedSection {
    pub fn params(&self, truth: &SensitivityParams) -> Result<SensitivityParams> {
        Ok(SensitivityParams::new(
            self.gamma_a.unwrap_or(truth.gamma_a),
            self.gamma_b.unwrap_or(truth.gamma_b),
            self.alpha1_a,
            self.alpha1_b,
        )?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifiedSection {
    /// "a1" (moment estimator) or "a2" (weighted 2SLS).
    pub method: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Long-format heatmap CSV emitted alongside the simulate summary.
    pub heatmap: Option<PathBuf>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Re-anchors relative input/output paths at the config file's directory
    /// so runs do not depend on the working directory.
    pub fn resolve_relative_to(&mut self, base: &std::path::Path) {
        if let Some(input) = &mut self.input {
            for path in [&mut input.arms, &mut input.dataset].into_iter().flatten() {
                if path.is_relative() {
                    *path = base.join(&path);
                }
            }
        }
        if let Some(output) = &mut self.output {
            if let Some(path) = &mut output.heatmap {
                if path.is_relative() {
                    *path = base.join(&path);
                }
            }
        }
    }

    pub fn input(&self) -> Result<&InputSection> {
        self.input
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [input] section".into()))
    }

    pub fn arms_path(&self) -> Result<&PathBuf> {
        self.input()?
            .arms
            .as_ref()
            .ok_or_else(|| CliError::Config("missing input.arms path".into()))
    }

    pub fn dataset_path(&self) -> Result<&PathBuf> {
        self.input()?
            .dataset
            .as_ref()
            .ok_or_else(|| CliError::Config("missing input.dataset path".into()))
    }

    pub fn params(&self) -> Result<&ParamsSection> {
        self.params
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [params] section".into()))
    }

    pub fn grid(&self) -> Result<&GridSection> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [grid] section".into()))
    }

    pub fn scenario(&self) -> Result<&ScenarioSection> {
        self.scenario
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [scenario] section".into()))
    }

    pub fn identified(&self) -> Result<&IdentifiedSection> {
        self.identified
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [identified] section".into()))
    }

    pub fn n_boot(&self, override_: Option<usize>) -> usize {
        override_
            .or_else(|| self.test.as_ref().and_then(|t| t.n_boot))
            .unwrap_or(DEFAULT_N_BOOT)
    }

    pub fn level(&self) -> f64 {
        self.test
            .as_ref()
            .and_then(|t| t.level)
            .unwrap_or(DEFAULT_LEVEL)
    }

    pub fn null_value(&self) -> f64 {
        self.test.as_ref().and_then(|t| t.null).unwrap_or(0.0)
    }
}
