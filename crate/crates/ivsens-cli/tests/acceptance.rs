//! Acceptance suite: every numbered criterion runs at its stated tolerance
//! and prints exactly one PASS/FAIL line. The process exits nonzero if any
//! criterion fails.
//!
//! The Monte Carlo criteria replicate the published power/bias tables with
//! 500 datasets of 500 subjects (two IV groups of 250, thinned to the
//! matched cells) and 500 bootstrap replicates, at a fixed master seed.
//!
//! Known inconsistency in the reference tables: their power entries mix two
//! test constructions. The zero-power cell checked by criterion 4 is only
//! producible by a one-sided upper-tail test (a two-sided test rejects there
//! ~93% of the time because the estimate sits far below zero), and the
//! weighted diagonal cells of criterion 1 match the one-sided values to
//! ±0.015 — but the unweighted S1 cell (published 0.92) and criterion 4's
//! second cell (published 0.75) match the two-sided variant instead. No
//! single construction reproduces all of them; the suite uses the one-sided
//! test throughout and honestly reports those two sub-checks, which land at
//! ≈0.97 and ≈0.83, as failures rather than bending the tolerances.

use std::fmt::Write as _;
use std::fs;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use ivsens::density::{simpson, Density, NormalDensity};
use ivsens::estimator::{estimate_theta, ArmSample};
use ivsens::identified::{estimate_a1, estimate_a2, weighted_2sls, Dataset, Record, WeightMode};
use ivsens::sim::{run_replications, solve_mu, true_complier_mean, ScenarioConfig};
use ivsens::strata::StrataProportions;
use ivsens::weights::{
    calibrate_intercept, calibrate_intercept_density, logistic, selection_weight,
    EmpiricalDistribution, SelectionModel, SensitivityParams,
};
use ivsens::{Arm, Treatment};

const MASTER_SEED: u64 = 20260809;
const N_REPLICATES: usize = 500;
const N_BOOT: usize = 500;

struct Outcome {
    ok: bool,
    detail: String,
}

struct Check {
    ok: bool,
    text: String,
}

fn check(label: &str, value: f64, lo: f64, hi: f64) -> Check {
    let ok = value >= lo && value <= hi;
    let mut text = format!("{label}={value:.3}");
    if !ok {
        let _ = write!(text, "∉[{lo:.3},{hi:.3}]");
    }
    Check { ok, text }
}

fn combine(checks: Vec<Check>) -> Outcome {
    let ok = checks.iter().all(|c| c.ok);
    let mut detail = String::new();
    for (i, c) in checks.iter().enumerate() {
        if i > 0 {
            detail.push_str(", ");
        }
        if !c.ok {
            detail.push_str("**");
        }
        detail.push_str(&c.text);
        if !c.ok {
            detail.push_str("**");
        }
    }
    Outcome { ok, detail }
}

// ------------------------------------------------------------- scenarios

fn scenario(which: u8, alpha: (f64, f64), theta: f64, n_boot: usize, seed: u64) -> ScenarioConfig {
    let (strata, gamma_a, gamma_b) = match which {
        1 => (
            StrataProportions::from_active([0.1, 0.1, 0.1, 0.3, 0.1, 0.3]).unwrap(),
            None,
            None,
        ),
        2 => (
            // Listed proportions give the observable cells; the published
            // truth pins the complier fractions at (2/3, 2/7).
            StrataProportions::from_active([0.1, 0.1, 0.1, 0.3, 0.4, 0.0]).unwrap(),
            Some(2.0 / 3.0),
            Some(2.0 / 7.0),
        ),
        _ => unreachable!(),
    };
    ScenarioConfig {
        strata: Some(strata),
        gamma_a,
        gamma_b,
        true_alpha1_a: alpha.0,
        true_alpha1_b: alpha.1,
        theta_target: theta,
        n_per_arm: 250,
        n_replicates: N_REPLICATES,
        n_boot,
        level: 0.05,
        base_a: NormalDensity::new(2.5, 2.0).unwrap(),
        seed,
    }
}

fn presumed(
    config: &ScenarioConfig,
    gammas: Option<(f64, f64)>,
    alpha: (f64, f64),
) -> SensitivityParams {
    let truth = config.true_params().unwrap();
    let (ga, gb) = gammas.unwrap_or((truth.gamma_a, truth.gamma_b));
    SensitivityParams::new(ga, gb, alpha.0, alpha.1).unwrap()
}

// ------------------------------------------------------------- criterion 1

/// Table 1 diagonal: empirical size at θ=0 within 0.05 ± 0.03 and power at
/// θ=0.80 within ±0.04 of the published values, for both scenarios and
/// true = presumed slopes (1,2), (1,1), (0,0).
fn criterion1() -> Outcome {
    let cells: [(u8, (f64, f64), f64); 6] = [
        (1, (1.0, 2.0), 0.91),
        (1, (1.0, 1.0), 0.91),
        (1, (0.0, 0.0), 0.92),
        (2, (1.0, 2.0), 0.86),
        (2, (1.0, 1.0), 0.85),
        (2, (0.0, 0.0), 0.94),
    ];
    let mut checks = Vec::new();
    for (idx, (scen, alpha, published_power)) in cells.iter().enumerate() {
        for (theta, is_size) in [(0.0, true), (0.80, false)] {
            let config = scenario(*scen, *alpha, theta, N_BOOT, MASTER_SEED + idx as u64);
            let params = presumed(&config, None, *alpha);
            let summary = run_replications(&config, &[params]).unwrap();
            let rate = summary.rows[0].power.unwrap();
            let label = format!(
                "S{scen}({},{}) {}",
                alpha.0,
                alpha.1,
                if is_size { "size" } else { "power" }
            );
            if is_size {
                checks.push(check(&label, rate, 0.02, 0.08));
            } else {
                checks.push(check(
                    &label,
                    rate,
                    published_power - 0.04,
                    published_power + 0.04,
                ));
            }
        }
    }
    combine(checks)
}

// ------------------------------------------------------------- criterion 2

/// Table 2: bias/sd of the estimator at θ=0.80 under correctly and
/// incorrectly presumed slopes (known complier fractions).
fn criterion2() -> Outcome {
    // (scenario, true slopes, [(presumed slopes, published bias, published sd)])
    let blocks: [(u8, (f64, f64), [((f64, f64), f64, f64); 5]); 4] = [
        (
            1,
            (1.0, 2.0),
            [
                ((1.0, 2.0), -0.01, 0.28),
                ((1.0, 1.0), -0.22, 0.29),
                ((0.0, 2.0), 1.38, 0.25),
                ((1.0, 0.0), -1.18, 0.25),
                ((0.0, 0.0), 0.21, 0.23),
            ],
        ),
        (
            2,
            (1.0, 2.0),
            [
                ((1.0, 2.0), 0.01, 0.30),
                ((1.0, 1.0), -0.38, 0.32),
                ((0.0, 2.0), 0.81, 0.29),
                ((1.0, 0.0), -2.17, 0.28),
                ((0.0, 0.0), -1.34, 0.25),
            ],
        ),
        (
            1,
            (1.0, 1.0),
            [
                ((1.0, 1.0), 0.00, 0.28),
                ((1.0, 2.0), 0.19, 0.28),
                ((0.0, 2.0), 1.58, 0.27),
                ((1.0, 0.0), -0.98, 0.26),
                ((0.0, 0.0), 0.41, 0.23),
            ],
        ),
        (
            2,
            (1.0, 1.0),
            [
                ((1.0, 1.0), -0.01, 0.30),
                ((1.0, 2.0), 0.39, 0.31),
                ((0.0, 2.0), 1.17, 0.30),
                ((1.0, 0.0), -1.77, 0.28),
                ((0.0, 0.0), -0.95, 0.27),
            ],
        ),
    ];
    let mut checks = Vec::new();
    for (idx, (scen, true_alpha, rows)) in blocks.iter().enumerate() {
        let config = scenario(*scen, *true_alpha, 0.80, 0, MASTER_SEED + 100 + idx as u64);
        let params: Vec<SensitivityParams> = rows
            .iter()
            .map(|(alpha, _, _)| presumed(&config, None, *alpha))
            .collect();
        let summary = run_replications(&config, &params).unwrap();
        for ((alpha, published_bias, published_sd), row) in rows.iter().zip(&summary.rows) {
            let correctly_specified = alpha == true_alpha;
            let label = format!(
                "S{scen} true({},{}) presumed({},{}) bias",
                true_alpha.0, true_alpha.1, alpha.0, alpha.1
            );
            if correctly_specified {
                checks.push(check(&label, row.mean_bias, -0.04, 0.04));
                checks.push(check(
                    &label.replace("bias", "sd"),
                    row.sd,
                    published_sd - 0.03,
                    published_sd + 0.03,
                ));
            } else {
                checks.push(check(
                    &label,
                    row.mean_bias,
                    published_bias - 0.10,
                    published_bias + 0.10,
                ));
            }
        }
    }
    combine(checks)
}

// ------------------------------------------------------------- criterion 3

/// Appendix table spot rows at θ=0.80 with presumed complier fractions.
fn criterion3() -> Outcome {
    let mut checks = Vec::new();

    let config = scenario(1, (1.0, 2.0), 0.80, 0, MASTER_SEED + 200);
    let params = presumed(&config, Some((0.3, 0.6)), (0.0, 0.0));
    let summary = run_replications(&config, &[params]).unwrap();
    checks.push(check(
        "S1(0.3,0.6,0,0) bias",
        summary.rows[0].mean_bias,
        0.23 - 0.10,
        0.23 + 0.10,
    ));
    checks.push(check(
        "S1(0.3,0.6,0,0) mse",
        summary.rows[0].mse,
        0.11 - 0.05,
        0.11 + 0.05,
    ));

    let config = scenario(2, (1.0, 2.0), 0.80, 0, MASTER_SEED + 201);
    let params = presumed(&config, Some((0.2, 0.8)), (1.0, 0.0));
    let summary = run_replications(&config, &[params]).unwrap();
    checks.push(check(
        "S2(0.2,0.8,1,0) bias",
        summary.rows[0].mean_bias,
        -3.42 - 0.15,
        -3.42 + 0.15,
    ));
    combine(checks)
}

// ------------------------------------------------------------- criterion 4

/// Four-parameter power table spot rows.
fn criterion4() -> Outcome {
    let mut checks = Vec::new();

    let config = scenario(1, (1.0, 2.0), 0.50, N_BOOT, MASTER_SEED + 300);
    let params = presumed(&config, Some((0.3, 0.6)), (0.0, 2.0));
    let summary = run_replications(&config, &[params]).unwrap();
    checks.push(check(
        "S1(0.3,0.6,0,2)@0.50 power",
        summary.rows[0].power.unwrap(),
        0.0,
        0.02,
    ));

    let config = scenario(2, (1.0, 2.0), 0.80, N_BOOT, MASTER_SEED + 301);
    let params = presumed(&config, Some((0.5, 0.5)), (0.0, 2.0));
    let summary = run_replications(&config, &[params]).unwrap();
    checks.push(check(
        "S2(0.5,0.5,0,2)@0.80 power",
        summary.rows[0].power.unwrap(),
        0.75 - 0.06,
        0.75 + 0.06,
    ));
    combine(checks)
}

// ------------------------------------------------------------- criterion 5

/// Calibration property suite over 1000 random (sample, slope, target) cases
/// plus 1000 complier-density normalization checks by quadrature.
fn criterion5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED + 400);
    let mut worst_resid = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(50..400);
        let loc = rng.gen_range(-5.0..5.0);
        let scale = rng.gen_range(0.3..3.0);
        let alpha1 = rng.gen_range(-3.0..3.0);
        let gamma = rng.gen_range(0.02..0.98);
        let normal = Normal::new(loc, scale).unwrap();
        let values: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let dist = EmpiricalDistribution::new(values).unwrap();
        let alpha0 = calibrate_intercept(&dist, alpha1, gamma).unwrap();
        let mean_w: f64 = dist
            .values()
            .iter()
            .map(|&y| logistic(alpha0 + alpha1 * y))
            .sum::<f64>()
            / dist.values().len() as f64;
        worst_resid = worst_resid.max((mean_w - gamma).abs());
    }

    let mut worst_norm = 0.0f64;
    for _ in 0..1000 {
        let loc = rng.gen_range(-4.0..4.0);
        let scale = rng.gen_range(0.4..3.0);
        let alpha1 = rng.gen_range(-2.5..2.5);
        let gamma = rng.gen_range(0.05..0.95);
        let base = NormalDensity::new(loc, scale).unwrap();
        let alpha0 = calibrate_intercept_density(&base, alpha1, gamma).unwrap();
        let model = SelectionModel::new(alpha0, alpha1, Arm::A).unwrap();
        // independent integrator configuration: wider window, finer panels
        let total = simpson(
            |y| selection_weight(y, &model) * base.pdf(y) / gamma,
            loc - 12.0 * scale,
            loc + 12.0 * scale,
            8192,
        );
        worst_norm = worst_norm.max((total - 1.0).abs());
    }

    let ok = worst_resid <= 1e-10 && worst_norm <= 1e-6;
    Outcome {
        ok,
        detail: format!(
            "worst |mean w − γ| = {worst_resid:.2e} (≤1e-10), worst |∫f_c − 1| = {worst_norm:.2e} (≤1e-6), 1000 cases each"
        ),
    }
}

// ------------------------------------------------------------- criterion 6

/// Rejection-sampled complier means match the quadrature means within three
/// standard errors on a 5×5 (slope, fraction) grid with 1e6 proposals/cell.
fn criterion6() -> Outcome {
    let base = NormalDensity::new(2.5, 2.0).unwrap();
    let proposal = Normal::new(2.5, 2.0).unwrap();
    let mut failures = Vec::new();
    let mut max_z = 0.0f64;
    for (i, &alpha1) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
        for (j, &gamma) in [0.1, 0.3, 0.5, 0.7, 0.9].iter().enumerate() {
            let alpha0 = calibrate_intercept_density(&base, alpha1, gamma).unwrap();
            let model = SelectionModel::new(alpha0, alpha1, Arm::A).unwrap();
            let truth = true_complier_mean(&base, alpha1, gamma).unwrap();

            let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED + 500 + (i * 5 + j) as u64);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut accepted = 0usize;
            for _ in 0..1_000_000 {
                let y = proposal.sample(&mut rng);
                let u: f64 = rng.gen();
                if u < selection_weight(y, &model) {
                    sum += y;
                    sum_sq += y * y;
                    accepted += 1;
                }
            }
            let mean = sum / accepted as f64;
            let var = (sum_sq - sum * sum / accepted as f64) / (accepted as f64 - 1.0);
            let se = (var / accepted as f64).sqrt();
            let zscore = (mean - truth).abs() / se;
            max_z = max_z.max(zscore);
            if zscore > 3.0 {
                failures.push(format!("(α1={alpha1},γ={gamma}): z={zscore:.2}"));
            }
        }
    }
    Outcome {
        ok: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("25 cells, max |z| = {max_z:.2} (≤3), 1e6 proposals each")
        } else {
            format!("cells beyond 3 SE: {}", failures.join("; "))
        },
    }
}

// ------------------------------------------------------------- criterion 7

/// With zero slopes the estimator equals the arm-mean difference to machine
/// precision, for any complier fractions.
fn criterion7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED + 600);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n_a = rng.gen_range(5..300);
        let n_b = rng.gen_range(5..300);
        let normal = Normal::new(rng.gen_range(-10.0..10.0), rng.gen_range(0.1..5.0)).unwrap();
        let y_a: Vec<f64> = (0..n_a).map(|_| normal.sample(&mut rng)).collect();
        let y_b: Vec<f64> = (0..n_b).map(|_| normal.sample(&mut rng)).collect();
        let mean_diff = y_a.iter().sum::<f64>() / n_a as f64 - y_b.iter().sum::<f64>() / n_b as f64;
        let sample = ArmSample::new(y_a, y_b).unwrap();
        let params = SensitivityParams::new(
            rng.gen_range(0.01..0.99),
            rng.gen_range(0.01..0.99),
            0.0,
            0.0,
        )
        .unwrap();
        let theta = estimate_theta(&sample, &params).unwrap();
        let rel = (theta - mean_diff).abs() / mean_diff.abs().max(1.0);
        worst = worst.max(rel);
    }
    Outcome {
        ok: worst <= 1e-13,
        detail: format!(
            "worst relative deviation from mean difference = {worst:.2e} (≤1e-13), 100 samples"
        ),
    }
}

// ------------------------------------------------------------- criterion 8

/// Selection-ignorable DGP for the moment estimator: third-arm assignment is
/// stratum membership, independent of the instrument given the confounder.
fn a1_dgp(n: usize, effect: f64, rng: &mut ChaCha8Rng) -> Dataset {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let z = if rng.gen_bool(0.5) { Arm::A } else { Arm::B };
        let u: f64 = noise.sample(rng);
        let p_s2 = 0.15 + 0.05 * logistic(u);
        let p_s1 = 0.15 + 0.05 * logistic(-u);
        let roll: f64 = rng.gen();
        let (d, level) = if roll < p_s2 {
            (Treatment::A, 0.4 + 0.8 * u)
        } else if roll < p_s2 + p_s1 {
            (Treatment::B, -0.3 + 0.8 * u)
        } else if roll < p_s2 + p_s1 + 0.2 {
            (Treatment::C, 0.8 * u)
        } else {
            let d = if z == Arm::A {
                Treatment::A
            } else {
                Treatment::B
            };
            let base = 0.1 + 0.8 * u;
            (
                d,
                if d == Treatment::A {
                    base + effect
                } else {
                    base
                },
            )
        };
        records.push(Record {
            y: level + noise.sample(rng),
            z,
            d,
            x: vec![],
        });
    }
    Dataset::new(records).unwrap()
}

/// DGP where third-arm assignment depends on the instrument and a measured
/// covariate only; the unmeasured confounder drives treatment and outcome.
fn a2_dgp(n: usize, effect: f64, rng: &mut ChaCha8Rng) -> Dataset {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let z = if rng.gen_bool(0.5) { Arm::A } else { Arm::B };
        let x: f64 = noise.sample(rng);
        let u: f64 = noise.sample(rng);
        let zi = if z == Arm::A { 1.0 } else { 0.0 };
        let p_select = logistic(0.4 + 1.2 * x + 1.0 * zi);
        if !rng.gen_bool(p_select) {
            records.push(Record {
                y: 1.5 * x + 0.9 * u + noise.sample(rng),
                z,
                d: Treatment::C,
                x: vec![x],
            });
            continue;
        }
        let roll: f64 = rng.gen();
        let p_s2 = 0.2 * logistic(1.2 * u);
        let p_s1 = 0.2 * logistic(-1.2 * u);
        let d = if roll < p_s2 {
            Treatment::A
        } else if roll < p_s2 + p_s1 {
            Treatment::B
        } else if z == Arm::A {
            Treatment::A
        } else {
            Treatment::B
        };
        let y =
            if d == Treatment::A { effect } else { 0.0 } + 1.5 * x + 0.9 * u + noise.sample(rng);
        records.push(Record {
            y,
            z,
            d,
            x: vec![x],
        });
    }
    Dataset::new(records).unwrap()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Identified-regime suite: the moment estimator is unbiased on the
/// instrument-ignorable DGP; the weighted 2SLS is unbiased on the
/// covariate-driven selection DGP while the naive selected-data Wald
/// estimator is demonstrably biased.
fn criterion8() -> Outcome {
    let effect = 0.5;
    let reps = 500;
    let n = 2000;

    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED + 700);
    let mut a1_biases = Vec::with_capacity(reps);
    for _ in 0..reps {
        let data = a1_dgp(n, effect, &mut rng);
        a1_biases.push(estimate_a1(&data).unwrap() - effect);
    }
    let (a1_bias, a1_se) = mean_and_se(&a1_biases);

    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED + 701);
    let mut a2_biases = Vec::with_capacity(reps);
    let mut naive_biases = Vec::with_capacity(reps);
    for _ in 0..reps {
        let data = a2_dgp(n, effect, &mut rng);
        a2_biases.push(estimate_a2(&data, WeightMode::Inverse).unwrap().theta_hat - effect);
        let selected = data.selected().unwrap();
        let uniform = vec![1.0; selected.len()];
        naive_biases.push(weighted_2sls(&selected, &uniform).unwrap() - effect);
    }
    let (a2_bias, a2_se) = mean_and_se(&a2_biases);
    let (naive_bias, naive_se) = mean_and_se(&naive_biases);

    let c1 = a1_bias.abs() <= 2.0 * a1_se;
    let c2 = a2_bias.abs() <= 2.0 * a2_se;
    let c3 = naive_bias.abs() > 4.0 * naive_se;
    Outcome {
        ok: c1 && c2 && c3,
        detail: format!(
            "a1 bias {a1_bias:.4}±{a1_se:.4} ({}2 SE), a2 bias {a2_bias:.4}±{a2_se:.4} ({}2 SE), naive Wald bias {naive_bias:.4}±{naive_se:.4} ({}4 SE)",
            if c1 { "≤" } else { ">" },
            if c2 { "≤" } else { ">" },
            if c3 { ">" } else { "≤" },
        ),
    }
}

// ------------------------------------------------------------- criterion 9

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_ivsens"))
        .args(args)
        .output()
        .expect("spawn ivsens binary");
    assert!(
        out.status.success(),
        "ivsens {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// Fixed-seed commands produce byte-identical artifacts across repeated runs
/// and across `--jobs` settings.
fn criterion9() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let base = dir.path();

    let sim_config = base.join("sim.toml");
    fs::write(
        &sim_config,
        concat!(
            "seed = 31\n",
            "[scenario]\n",
            "pi_s1 = 0.1\npi_s2 = 0.1\npi_s3 = 0.1\npi_s4 = 0.3\npi_s5 = 0.1\npi_s6 = 0.3\n",
            "alpha1_a = 1.0\nalpha1_b = 2.0\n",
            "theta = [0.8]\n",
            "n_per_arm = 120\nn_replicates = 8\nn_boot = 30\n",
            "[[presumed]]\nalpha1_a = 1.0\nalpha1_b = 2.0\n",
            "[[presumed]]\ngamma_a = 0.3\ngamma_b = 0.6\nalpha1_a = 0.0\nalpha1_b = 0.0\n",
        ),
    )
    .unwrap();

    let mut arms = String::from("arm,y\n");
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED + 800);
    let normal = Normal::new(2.5, 2.0).unwrap();
    for _ in 0..80 {
        let _ = writeln!(arms, "A,{}", normal.sample(&mut rng));
        let _ = writeln!(arms, "B,{}", normal.sample(&mut rng) - 1.0);
    }
    fs::write(base.join("arms.csv"), arms).unwrap();
    let sweep_config = base.join("sweep.toml");
    fs::write(
        &sweep_config,
        concat!(
            "seed = 13\n",
            "[input]\narms = \"arms.csv\"\n",
            "[grid]\ngamma_a = [0.3, 0.5]\ngamma_b = [0.6]\nalpha1_a = [0.0, 1.0]\nalpha1_b = [2.0]\n",
            "[test]\nn_boot = 40\n",
        ),
    )
    .unwrap();

    let mut mismatches = Vec::new();
    for (name, cfg) in [("simulate", &sim_config), ("sweep", &sweep_config)] {
        for format in ["csv", "json"] {
            let mut outputs = Vec::new();
            for jobs in ["1", "1", "4"] {
                let out_path = base.join(format!("{name}-{format}-{jobs}-{}.out", outputs.len()));
                run_cli(&[
                    name,
                    "--config",
                    cfg.to_str().unwrap(),
                    "--format",
                    format,
                    "--jobs",
                    jobs,
                    "--out",
                    out_path.to_str().unwrap(),
                ]);
                outputs.push(fs::read(&out_path).unwrap());
            }
            if outputs[0] != outputs[1] {
                mismatches.push(format!("{name}/{format}: repeat run differs"));
            }
            if outputs[0] != outputs[2] {
                mismatches.push(format!("{name}/{format}: --jobs 4 differs"));
            }
        }
    }

    Outcome {
        ok: mismatches.is_empty(),
        detail: if mismatches.is_empty() {
            "simulate and sweep outputs byte-identical across repeats and --jobs {1,4}, csv and json".into()
        } else {
            mismatches.join("; ")
        },
    }
}

// ------------------------------------------------------------------- main

fn main() {
    // Sanity anchors used by several criteria; fail fast if they move.
    let s1 = scenario(1, (1.0, 2.0), 0.80, 0, 1);
    let truth = s1.true_params().unwrap();
    assert!((truth.gamma_a - 3.0 / 7.0).abs() < 1e-12);
    assert!((truth.gamma_b - 3.0 / 5.0).abs() < 1e-12);
    let mu = solve_mu(&s1).unwrap();
    assert!((mu - 1.9125).abs() < 1e-3, "scenario 1 μ drifted: {mu}");

    let checks: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 power/size table, known fractions", criterion1),
        ("2 bias/sd table, known fractions", criterion2),
        ("3 appendix bias spot rows", criterion3),
        ("4 four-parameter power spot rows", criterion4),
        ("5 calibration property suite", criterion5),
        ("6 rejection vs quadrature oracle", criterion6),
        ("7 zero-slope reduction", criterion7),
        ("8 identified-regime suite", criterion8),
        ("9 byte-identical determinism", criterion9),
    ];

    let mut failures = 0;
    for (name, run) in checks {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed().as_secs_f64();
        let tag = if outcome.ok { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {name}: {} ({elapsed:.1}s)",
            outcome.detail
        );
        if !outcome.ok {
            failures += 1;
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criterion(s) failed");
        std::process::exit(1);
    }
}
