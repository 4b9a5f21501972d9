//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines are always shown.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use samplebench::harness::{build_teststatistic_iid, build_teststatistic_user, compare};
use samplebench::metrics::{mmd_exact, mmd_rff, median_heuristic, sliced_wasserstein, wasserstein_1d, Metric, SwdConfig};
use samplebench::samplers::{metropolis_hastings, MhConfig};
use samplebench::seed::child_seed;
use samplebench::store::{ess, ess_of_weights, SampleBatch};
use samplebench::targets::{lookup, CatalogConfig, TargetSpec};
use samplebench_cli::{cmd_run, default_metrics, InputMode, RunConfig, EXIT_DEVIATION, OVERVIEW_FILE, REPORT_FILE};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn metrics(list: &[&str]) -> Vec<Metric> {
    list.iter().map(|s| s.parse().unwrap()).collect()
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:.1?}, limit {limit:?}"))
    }
}

/// `n` points in `dim` dimensions, scaled standard normal draws.
fn cloud(dim: usize, n: usize, scale: f64, seed: u64) -> SampleBatch {
    let name = match dim {
        1 => "Normal-1D",
        2 => "Normal-2D-Uncorrelated",
        _ => unreachable!(),
    };
    let b = lookup(name).unwrap().sample_iid(n, seed).unwrap();
    SampleBatch::new(b.points().iter().map(|x| x * scale).collect(), dim).unwrap()
}

fn ac1_swd_axioms() -> Outcome {
    let started = Instant::now();
    let mut worst_triangle = f64::NEG_INFINITY;
    for k in 0..50u64 {
        let x = cloud(2, 200, 1.0, 3 * k);
        let y = cloud(2, 200, 1.5, 3 * k + 1);
        let z = cloud(2, 200, 0.7, 3 * k + 2);
        let cfg = SwdConfig::new(50, 1.0, k);
        let d = |a: &SampleBatch, b: &SampleBatch| sliced_wasserstein(a, b, &cfg).unwrap();
        let (xy, yx, yz, xz) = (d(&x, &y), d(&y, &x), d(&y, &z), d(&x, &z));
        if xy < 0.0 || yz < 0.0 || xz < 0.0 {
            return Err(format!("negative distance at pair {k}"));
        }
        if d(&x, &x) != 0.0 || d(&y, &y) != 0.0 {
            return Err(format!("nonzero self-distance at pair {k}"));
        }
        if xy.to_bits() != yx.to_bits() {
            return Err(format!("asymmetric at pair {k}: {xy} vs {yx}"));
        }
        worst_triangle = worst_triangle.max(xz - xy - yz);
        if xz > xy + yz + 1e-9 {
            return Err(format!("triangle violated at triple {k}: {xz} > {xy} + {yz}"));
        }
    }
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!("50 triples, max d(x,z)-d(x,y)-d(y,z) = {worst_triangle:.3e}, {took:.1?}"))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn ac2_one_d_oracle() -> Outcome {
    for k in 0..100u64 {
        let n = 20 + (k as usize % 7) * 30;
        let x = cloud(1, n, 1.0, 2 * k);
        let y = cloud(1, n, 2.0, 2 * k + 1);
        let exact = wasserstein_1d(x.points(), y.points(), 1.0).unwrap();
        for l in [1, 7, 50] {
            let sliced = sliced_wasserstein(&x, &y, &SwdConfig::new(l, 1.0, k)).unwrap();
            if sliced.to_bits() != exact.to_bits() {
                return Err(format!("pair {k}, L={l}: {sliced} != {exact}"));
            }
        }
    }
    let mut worst = 0.0f64;
    for n in 1..=8 {
        let perms = permutations(n);
        for k in 0..4u64 {
            let xs = cloud(1, n, 3.0, 1000 + 10 * n as u64 + k);
            let ys = cloud(1, n, 3.0, 5000 + 10 * n as u64 + k);
            for p in [1.0, 2.0] {
                let best = perms
                    .iter()
                    .map(|perm| {
                        perm.iter()
                            .enumerate()
                            .map(|(i, &j)| (xs.points()[i] - ys.points()[j]).abs().powf(p))
                            .sum::<f64>()
                            / n as f64
                    })
                    .fold(f64::INFINITY, f64::min)
                    .powf(1.0 / p);
                let got = wasserstein_1d(xs.points(), ys.points(), p).unwrap();
                worst = worst.max((got - best).abs());
            }
        }
    }
    check(worst <= 1e-12, format!("100 pairs bit-identical; brute force max error {worst:.2e}"))
}

fn std_dev(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn ac3_swd_projection_convergence() -> Outcome {
    let started = Instant::now();
    let gaussian = lookup("Normal-2D-Uncorrelated").unwrap();
    let mixture = TargetSpec::bimodal_mixture("two-gaussians", 2, 2.0, 0.0).unwrap();
    let ls = [10, 25, 50, 100];
    let mut avg = [0.0; 4];
    for draw in 0..20u64 {
        let x = gaussian.sample_iid(500, 2 * draw).unwrap();
        let y = mixture.sample_iid(500, 2 * draw + 1).unwrap();
        for (slot, &l) in ls.iter().enumerate() {
            let values: Vec<f64> = (0..100u64)
                .map(|s| sliced_wasserstein(&x, &y, &SwdConfig::new(l, 1.0, child_seed(draw, s, "swd"))).unwrap())
                .collect();
            avg[slot] += std_dev(&values) / 20.0;
        }
    }
    let took = within(Duration::from_secs(120), started)?;
    let detail = format!("std over seeds for L={ls:?}: {avg:.4?}, {took:.1?}");
    check(avg.windows(2).all(|w| w[1] < w[0]), detail)
}

fn ac4_rff_convergence() -> Outcome {
    let started = Instant::now();
    let bimodal = TargetSpec::bimodal_mixture("bimodal", 2, 1.5, 0.0).unwrap();
    let x = bimodal.sample_iid(500, 11).unwrap();
    let y = lookup("Normal-2D-Uncorrelated").unwrap().sample_iid(500, 12).unwrap();
    let sigma = median_heuristic(&x, &y, 1000, 0).unwrap();
    let exact = mmd_exact(&x, &y, sigma).unwrap();
    let errors: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&d| (0..20u64).map(|s| (mmd_rff(&x, &y, sigma, d, s).unwrap() - exact).abs() / exact).sum::<f64>() / 20.0)
        .collect();
    let took = within(Duration::from_secs(120), started)?;
    let detail = format!("exact {exact:.4}, mean relative error for D=[10, 100, 1000]: {errors:.4?}, {took:.1?}");
    check(errors.windows(2).all(|w| w[1] < w[0]) && errors[2] <= 0.05, detail)
}

fn ac5_mmd_hand_values() -> Outcome {
    // ‖x−y‖² = 2σ² so the cross kernel is e⁻¹.
    let x = SampleBatch::new(vec![0.0], 1).unwrap();
    let y = SampleBatch::new(vec![2f64.sqrt()], 1).unwrap();
    let single = mmd_exact(&x, &y, 1.0).unwrap();
    let expected = (2.0 - 2.0 * (-1.0f64).exp()).sqrt();
    let set = cloud(2, 300, 1.0, 77);
    let same = mmd_exact(&set, &set, 0.8).unwrap();
    check(
        (single - expected).abs() <= 1e-12 && same <= 1e-9,
        format!("singleton {single:.15} vs {expected:.15}; identical sets {same:.2e}"),
    )
}

fn ac6_ess_and_mh_efficiency() -> Outcome {
    for n in [1usize, 7, 1000] {
        for w in [1.0, 0.5, 4.0] {
            let got = ess_of_weights(&vec![w; n]).unwrap();
            if got != n as f64 {
                return Err(format!("equal weights {w} x {n}: ess {got}"));
            }
        }
    }
    let small = ess_of_weights(&[1.0, 1.0, 2.0]).unwrap();
    if (small - 16.0 / 6.0).abs() > 1e-15 {
        return Err(format!("(1,1,2): {small}"));
    }
    let t = lookup("Normal-1D").unwrap();
    let raw = metropolis_hastings(&t, &MhConfig::new(22_223, 1.0, 5)).unwrap();
    let efficiency = ess(&raw.collapse_repeats()) / raw.len() as f64;
    if efficiency >= 1.0 {
        return Err(format!("MH efficiency {efficiency}"));
    }
    let (m, n) = (20, 1000);
    let ms = metrics(&["mean"]);
    let reference = build_teststatistic_iid(&t, &ms, m, n, 3).unwrap();
    let user = build_teststatistic_user(&t, &ms, m, n, &raw, 3).unwrap();
    let ratio = user[0].std / reference[0].std;
    check(ratio > 1.0, format!("ESS cases exact; MH efficiency {efficiency:.3}; MH/IID std of mean {ratio:.2}"))
}

fn ac7_null_test() -> Outcome {
    let started = Instant::now();
    let t = lookup("Normal-3D-Uncorrelated").unwrap();
    let (m, n) = (50, 5000);
    let ms = metrics(&["mean", "variance", "chi2", "swd", "mmd_rff:D=100"]);
    let reference = build_teststatistic_iid(&t, &ms, m, n, 7).unwrap();
    let mut clean = 0;
    let mut worst = 0.0f64;
    for r in 0..100u64 {
        let user_samples = t.sample_iid(m * n, child_seed(7, r, "user-null")).unwrap();
        let user = build_teststatistic_user(&t, &ms, m, n, &user_samples, 7).unwrap();
        let summary = compare(&reference, &user).unwrap();
        worst = worst.max(summary.max_abs_z());
        if summary.entries.iter().all(|e| e.z.abs() <= 3.0) {
            clean += 1;
        }
    }
    let took = within(Duration::from_secs(300), started)?;
    check(clean >= 95, format!("{clean}/100 repeats with all |z| <= 3, max |z| {worst:.2}, {took:.1?}"))
}

fn mh_run_config(seed: u64, m: usize, n: usize, out_dir: std::path::PathBuf) -> RunConfig {
    let kept = m * n;
    let config = MhConfig::new(kept + kept / 9 + 1, 0.5, child_seed(seed, 0, "mh"));
    RunConfig {
        testcase: "Mixture-Normal-3D-Strongly-Correlated".into(),
        metrics: default_metrics(),
        m,
        n,
        seed,
        input: InputMode::BuiltinMh {
            config,
            compact: true,
            size_to_ess: true,
        },
        out_dir,
        sampler: None,
        catalog: CatalogConfig::default(),
    }
}

fn ac8_failure_detection() -> Outcome {
    let mut flagged = 0;
    for r in 0..100u64 {
        let doc = samplebench_cli::build_report(&mh_run_config(r, 10, 300, "unused".into())).map_err(|e| e.to_string())?;
        if doc.comparison.max_abs_z() > 3.0 {
            flagged += 1;
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_samplebench"))
        .args(["run", "--testcase", "Mixture-Normal-3D-Strongly-Correlated", "--mh-proposal-std", "0.5"])
        .args(["--m", "10", "--n", "300", "--seed", "1", "--out-dir"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?
        .status;
    let detail = format!("{flagged}/100 repeats flagged; binary exit code {:?}", status.code());
    check(flagged >= 95 && status.code() == Some(EXIT_DEVIATION), detail)
}

fn ac9_chi_square_calibration() -> Outcome {
    let t = lookup("Normal-1D").unwrap();
    let chi2: Metric = "chi2:bins=50".parse().unwrap();
    let values: Vec<f64> = (0..200u64)
        .map(|s| chi2.evaluate_one(&t.sample_iid(10_000, s).unwrap(), &t).unwrap()[0])
        .collect();
    let mean = values.iter().sum::<f64>() / 200.0;
    // Chi-square with 49 degrees of freedom: mean 49, variance 98.
    let half_width = 3.5 * (98.0f64 / 200.0).sqrt();
    let oracle_ok = 49.0 - half_width >= 44.0 && 49.0 + half_width <= 54.0;
    check(
        oracle_ok && (44.0..=54.0).contains(&mean),
        format!("mean of 200 statistics {mean:.2}, bound [44, 54]"),
    )
}

fn ac10_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = mh_run_config(42, 10, 200, a.path().to_path_buf());
    cfg.metrics = metrics(&["mean", "variance", "chi2:bins=10", "swd:L=10", "mmd:cap=100", "mmd_rff:D=100"]);
    cfg.testcase = "Normal-2D-Weakly-Correlated".into();
    let first = cmd_run(&cfg).map_err(|e| e.to_string())?;
    cfg.out_dir = b.path().to_path_buf();
    let second = cmd_run(&cfg).map_err(|e| e.to_string())?;
    let same = |f: &str| std::fs::read(a.path().join(f)).unwrap() == std::fs::read(b.path().join(f)).unwrap();
    check(
        first == second && same(REPORT_FILE) && same(OVERVIEW_FILE),
        format!("exit codes {first}/{second}; JSON and SVG byte-identical: {}", same(REPORT_FILE) && same(OVERVIEW_FILE)),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1 sliced Wasserstein metric axioms", ac1_swd_axioms),
        ("AC2 one-dimensional oracle equivalence", ac2_one_d_oracle),
        ("AC3 SWD projection convergence", ac3_swd_projection_convergence),
        ("AC4 RFF-MMD convergence", ac4_rff_convergence),
        ("AC5 MMD hand values", ac5_mmd_hand_values),
        ("AC6 effective sample size", ac6_ess_and_mh_efficiency),
        ("AC7 pipeline null test", ac7_null_test),
        ("AC8 pipeline failure detection", ac8_failure_detection),
        ("AC9 chi-square null calibration", ac9_chi_square_calibration),
        ("AC10 determinism", ac10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
