//! The five CLI commands, each producing a result table.

use std::path::PathBuf;

use serde_json::json;

use ivsens::estimator::{self, SweepRow};
use ivsens::identified::{self, WeightMode};
use ivsens::sim::{self, MonteCarloSummary};
use ivsens::weights::{
    calibrate_intercept, selection_weight, EmpiricalDistribution, SelectionModel, SensitivityParams,
};
use ivsens::Arm;

use crate::config::FileConfig;
use crate::dataset::{load_arm_sample, load_dataset};
use crate::error::Result;
use crate::output::{fmt17, fmt17_opt, Table};

pub struct CommonArgs {
    pub seed: u64,
    pub boot: Option<usize>,
    pub weights: WeightMode,
}

pub fn calibrate(config: &FileConfig, _args: &CommonArgs) -> Result<Table> {
    let sample = load_arm_sample(config.arms_path()?)?;
    let params = config.params()?.sensitivity_params()?;

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (arm, values, alpha1, gamma) in [
        (Arm::A, sample.arm_a(), params.alpha1_a, params.gamma_a),
        (Arm::B, sample.arm_b(), params.alpha1_b, params.gamma_b),
    ] {
        let dist = EmpiricalDistribution::new(values.to_vec())?;
        let alpha0 = calibrate_intercept(&dist, alpha1, gamma)?;
        let model = SelectionModel::new(alpha0, alpha1, arm)?;
        let mean_weight = values
            .iter()
            .map(|&y| selection_weight(y, &model))
            .sum::<f64>()
            / values.len() as f64;
        rows.push(vec![
            arm.to_string(),
            fmt17(gamma),
            fmt17(alpha1),
            fmt17(alpha0),
            fmt17(mean_weight),
            values.len().to_string(),
        ]);
        records.push(json!({
            "arm": arm.to_string(),
            "gamma": gamma,
            "alpha1": alpha1,
            "alpha0": alpha0,
            "mean_weight": mean_weight,
            "n": values.len(),
        }));
    }
    Ok(Table {
        header: vec!["arm", "gamma", "alpha1", "alpha0", "mean_weight", "n"],
        rows,
        records: json!(records),
    })
}

pub fn estimate(config: &FileConfig, args: &CommonArgs) -> Result<Table> {
    let sample = load_arm_sample(config.arms_path()?)?;
    let params = config.params()?.sensitivity_params()?;
    let n_boot = config.n_boot(args.boot);
    let level = config.level();
    let null_value = config.null_value();
    let result = estimator::estimate(&sample, &params, n_boot, null_value, level, args.seed)?;

    let rows = vec![vec![
        fmt17(params.gamma_a),
        fmt17(params.gamma_b),
        fmt17(params.alpha1_a),
        fmt17(params.alpha1_b),
        n_boot.to_string(),
        fmt17(level),
        fmt17(null_value),
        fmt17(result.theta_hat),
        fmt17(result.se),
        fmt17(result.ci_lo),
        fmt17(result.ci_hi),
        result.reject_null.to_string(),
    ]];
    let records = json!([{
        "gamma_A": params.gamma_a,
        "gamma_B": params.gamma_b,
        "alpha1_A": params.alpha1_a,
        "alpha1_B": params.alpha1_b,
        "n_boot": n_boot,
        "level": level,
        "null": null_value,
        "theta_hat": result.theta_hat,
        "se": result.se,
        "ci_lo": result.ci_lo,
        "ci_hi": result.ci_hi,
        "reject_null": result.reject_null,
    }]);
    Ok(Table {
        header: vec![
            "gamma_A",
            "gamma_B",
            "alpha1_A",
            "alpha1_B",
            "n_boot",
            "level",
            "null",
            "theta_hat",
            "se",
            "ci_lo",
            "ci_hi",
            "reject_null",
        ],
        rows,
        records,
    })
}

pub fn sweep(config: &FileConfig, args: &CommonArgs) -> Result<Table> {
    let sample = load_arm_sample(config.arms_path()?)?;
    let grid = config.grid()?.sweep_grid(config.cells.as_ref())?;
    let n_boot = config.n_boot(args.boot);
    let level = config.level();
    let rows = estimator::sweep(&sample, &grid, n_boot, level, args.seed)?;
    Ok(sweep_table(&rows))
}

fn sweep_table(rows: &[SweepRow]) -> Table {
    let cells = rows
        .iter()
        .map(|r| {
            vec![
                fmt17(r.gamma_a),
                fmt17(r.gamma_b),
                fmt17(r.alpha1_a),
                fmt17(r.alpha1_b),
                fmt17_opt(r.theta_hat),
                fmt17_opt(r.se),
                fmt17_opt(r.ci_lo),
                fmt17_opt(r.ci_hi),
                r.status.clone(),
            ]
        })
        .collect();
    Table {
        header: SweepRow::CSV_HEADER.split(',').collect(),
        rows: cells,
        records: serde_json::to_value(rows).expect("serializable"),
    }
}

pub struct SimulateOutput {
    pub summary: Table,
    pub heatmap: Option<(PathBuf, Table)>,
}

pub fn simulate(config: &FileConfig, args: &CommonArgs) -> Result<SimulateOutput> {
    let section = config.scenario()?;
    let mut summaries: Vec<MonteCarloSummary> = Vec::new();
    for &theta in &section.theta {
        let scenario = section.scenario_config(theta, args.seed, args.boot)?;
        let truth = scenario.true_params()?;
        let presumed: Vec<SensitivityParams> = if config.presumed.is_empty() {
            vec![truth]
        } else {
            config
                .presumed
                .iter()
                .map(|p| p.params(&truth))
                .collect::<Result<_>>()?
        };
        summaries.push(sim::run_replications(&scenario, &presumed)?);
    }

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut heat_rows = Vec::new();
    let mut heat_records = Vec::new();
    for summary in &summaries {
        for row in &summary.rows {
            let significant = !row.bias_insignificant();
            rows.push(vec![
                fmt17(summary.theta_target),
                fmt17(summary.mu),
                fmt17(row.params.gamma_a),
                fmt17(row.params.gamma_b),
                fmt17(row.params.alpha1_a),
                fmt17(row.params.alpha1_b),
                summary.n_replicates.to_string(),
                row.n_failed.to_string(),
                fmt17(row.mean_bias),
                fmt17(row.sd),
                fmt17(row.mse),
                fmt17_opt(row.power),
                fmt17_opt(row.mean_se),
                fmt17(row.bias_ci.0),
                fmt17(row.bias_ci.1),
                (significant as u8).to_string(),
            ]);
            records.push(json!({
                "theta_target": summary.theta_target,
                "mu": summary.mu,
                "gamma_A": row.params.gamma_a,
                "gamma_B": row.params.gamma_b,
                "alpha1_A": row.params.alpha1_a,
                "alpha1_B": row.params.alpha1_b,
                "n_replicates": summary.n_replicates,
                "n_failed": row.n_failed,
                "mean_bias": row.mean_bias,
                "sd": row.sd,
                "mse": row.mse,
                "power": row.power,
                "mean_se": row.mean_se,
                "bias_ci_lo": row.bias_ci.0,
                "bias_ci_hi": row.bias_ci.1,
                "bias_significant": significant,
            }));
            heat_rows.push(vec![
                fmt17(row.params.gamma_a),
                fmt17(row.params.gamma_b),
                fmt17(row.params.alpha1_a),
                fmt17(row.params.alpha1_b),
                fmt17(summary.theta_target),
                fmt17(row.mean_bias),
                (significant as u8).to_string(),
            ]);
            heat_records.push(json!({
                "gamma_A": row.params.gamma_a,
                "gamma_B": row.params.gamma_b,
                "alpha1_A": row.params.alpha1_a,
                "alpha1_B": row.params.alpha1_b,
                "theta_target": summary.theta_target,
                "mean_bias": row.mean_bias,
                "bias_significant": significant,
            }));
        }
    }

    let summary = Table {
        header: vec![
            "theta_target",
            "mu",
            "gamma_A",
            "gamma_B",
            "alpha1_A",
            "alpha1_B",
            "n_replicates",
            "n_failed",
            "mean_bias",
            "sd",
            "mse",
            "power",
            "mean_se",
            "bias_ci_lo",
            "bias_ci_hi",
            "bias_significant",
        ],
        rows,
        records: json!(records),
    };
    let heatmap = config
        .output
        .as_ref()
        .and_then(|o| o.heatmap.clone())
        .map(|path| {
            (
                path,
                Table {
                    header: vec![
                        "gamma_A",
                        "gamma_B",
                        "alpha1_A",
                        "alpha1_B",
                        "theta_target",
                        "mean_bias",
                        "bias_significant",
                    ],
                    rows: heat_rows,
                    records: json!(heat_records),
                },
            )
        });
    Ok(SimulateOutput { summary, heatmap })
}

pub fn identified_cmd(config: &FileConfig, args: &CommonArgs) -> Result<Table> {
    let (dataset, report) = load_dataset(config.dataset_path()?)?;
    eprintln!("loaded {report}");
    let method = config.identified()?.method.as_str();
    let (theta_hat, mode, clipped, n_selected, converged, iterations) = match method {
        "a1" => {
            let theta = identified::estimate_a1(&dataset)?;
            let n_selected = dataset.records().iter().filter(|r| r.selected()).count();
            (theta, None, None, n_selected, None, None)
        }
        "a2" => {
            let result = identified::estimate_a2(&dataset, args.weights)?;
            (
                result.theta_hat,
                Some(result.mode),
                Some(result.clipped),
                result.n_selected,
                Some(result.fit.converged),
                Some(result.fit.iterations),
            )
        }
        other => {
            return Err(crate::error::CliError::Config(format!(
                "identified.method must be \"a1\" or \"a2\", got {other:?}"
            )))
        }
    };

    let rows = vec![vec![
        method.to_string(),
        fmt17(theta_hat),
        mode.map(|m| m.to_string()).unwrap_or_default(),
        clipped.map(|c| c.to_string()).unwrap_or_default(),
        dataset.len().to_string(),
        n_selected.to_string(),
        converged.map(|c| c.to_string()).unwrap_or_default(),
        iterations.map(|i| i.to_string()).unwrap_or_default(),
    ]];
    let records = json!([{
        "method": method,
        "theta_hat": theta_hat,
        "weight_mode": mode.map(|m| m.to_string()),
        "clipped": clipped,
        "n_records": dataset.len(),
        "n_selected": n_selected,
        "converged": converged,
        "iterations": iterations,
    }]);
    Ok(Table {
        header: vec![
            "method",
            "theta_hat",
            "weight_mode",
            "clipped",
            "n_records",
            "n_selected",
            "converged",
            "iterations",
        ],
        rows,
        records,
    })
}
