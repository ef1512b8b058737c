//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test --release --test acceptance`.

use std::f64::consts::LN_2;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use calibound::binning::{bin_stats, BinningMethod, BinningScheme};
use calibound::bounds::{
    gen_ece_bound, recalib_holdout_bound, recalib_reuse_bound, total_bias_bound,
};
use calibound::data::ScoredDataset;
use calibound::experiment::{log_grid, run_scaling, BinRule, ScalingConfig};
use calibound::metrics::{binned_tce, cube_root_bins, ece, ece_reformulated, optimal_bins};
use calibound::mi::{ksg_mixed_mi_scalar, plugin_mi, run_cmi_experiment, CmiExperimentConfig};
use calibound::models::{sample_synthetic, Scorer, SyntheticModel};
use calibound::recalibration::Recalibrator;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_dataset(r: &mut ChaCha8Rng, n: usize) -> ScoredDataset {
    let pairs: Vec<(f64, u8)> = (0..n)
        .map(|_| (r.random::<f64>(), r.random::<bool>() as u8))
        .collect();
    ScoredDataset::from_pairs(&pairs, "acceptance").unwrap()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn c1_table_bounds() -> Outcome {
    let h15 = recalib_holdout_bound(15, 100).unwrap().value;
    let h27 = recalib_holdout_bound(27, 100).unwrap().value;
    let r15 = recalib_reuse_bound(0.0, 0.0, 15, 4000).unwrap().value;
    let r27 = recalib_reuse_bound(0.0, 0.0, 27, 20000).unwrap().value;
    let ok = within(h15, 0.8475, 0.0005)
        && within(h27, 1.4558, 0.0010)
        && within(r15, 0.1442, 0.0005)
        && within(r27, 0.08652, 0.0003);
    (
        ok,
        format!("holdout {h15:.5} / {h27:.5}, reuse {r15:.5} / {r27:.5}"),
    )
}

fn c2_scaling_law() -> Outcome {
    let cfg = ScalingConfig {
        beta0: 0.5,
        beta1: -1.5,
        n_grid: log_grid(1000, 100_000, 9).unwrap(),
        reps: 20,
        bin_rule: BinRule::Optimal,
        n_mc: 10_000_000,
        lipschitz_grid: 10_001,
        seed: 2024,
    };
    let r = run_scaling(&cfg).unwrap();
    let gaps: Vec<String> = r
        .mean_gaps
        .iter()
        .map(|(n, g)| format!("{n}:{g:.4}"))
        .collect();
    (
        (-0.45..=-0.20).contains(&r.slope),
        format!(
            "slope {:.3} (band [-0.45, -0.20]); L {:.3}, TCE {:.4}; mean gaps {}",
            r.slope,
            r.lipschitz,
            r.tce,
            gaps.join(" ")
        ),
    )
}

fn c3_ece_identity() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = r.random_range(1..200);
        let d = random_dataset(&mut r, n);
        let b = r.random_range(1..40);
        let s = if i % 2 == 0 || n < 2 * b {
            BinningScheme::uwb(b).unwrap()
        } else {
            BinningScheme::umb(&d.scores(), b).unwrap()
        };
        worst = worst.max((ece(&d, &s).value - ece_reformulated(&d, &s).value).abs());
    }
    (
        worst <= 1e-12,
        format!("max |difference| {worst:.2e} over 1000 pairs"),
    )
}

fn c4_umb_mass() -> Outcome {
    let mut r = rng(4);
    let mut bad = 0;
    for _ in 0..200 {
        let b = r.random_range(1..30);
        let n = r.random_range(2 * b..2 * b + 400);
        // distinct scores: a shuffled lattice inside (0, 1)
        let mut scores: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        for i in (1..n).rev() {
            scores.swap(i, r.random_range(0..=i));
        }
        let pairs: Vec<(f64, u8)> = scores.iter().map(|&s| (s, 0)).collect();
        let d = ScoredDataset::from_pairs(&pairs, "umb").unwrap();
        let st = bin_stats(&BinningScheme::umb(&scores, b).unwrap(), &d);
        let expected: Vec<usize> = (1..=b).map(|k| n * k / b - n * (k - 1) / b).collect();
        let got: Vec<usize> = st.bins.iter().map(|x| x.count).collect();
        if got != expected {
            bad += 1;
        }
    }
    (
        bad == 0,
        format!("{bad} of 200 datasets with wrong per-bin counts"),
    )
}

fn c5_overestimation() -> Outcome {
    let model = SyntheticModel::new(0.5, -1.5).unwrap();
    let oracle = model.oracle();
    let bins = cube_root_bins(500);
    let scheme = BinningScheme::uwb(bins).unwrap();
    let tce = binned_tce(&oracle, &scheme, 2_000_000, 55);
    let eces: Vec<f64> = (0..200)
        .map(|i| {
            let d = model
                .score_points(&sample_synthetic(500, 10_000 + i), "test")
                .unwrap();
            ece(&d, &scheme).value
        })
        .collect();
    let m = eces.len() as f64;
    let mean = eces.iter().sum::<f64>() / m;
    let var = eces.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let sigma = (var / m + tce.std_error.powi(2)).sqrt();
    (
        mean >= tce.value - 3.0 * sigma,
        format!(
            "mean ECE {mean:.5} vs binned TCE {:.5} (3 sigma = {:.5}, B = {bins})",
            tce.value,
            3.0 * sigma
        ),
    )
}

fn c6_optimal_bins() -> Outcome {
    let mut worst = 0i64;
    for n in [100usize, 1000, 10_000, 100_000] {
        for l in [0.0, 1.0, 5.0] {
            let closed = optimal_bins(n, l, BinningMethod::Uwb).unwrap() as i64;
            let mut best = (1usize, f64::INFINITY);
            for b in 1..=n / 2 {
                let v = total_bias_bound(b, n, l, BinningMethod::Uwb).unwrap().value;
                if v < best.1 {
                    best = (b, v);
                }
            }
            worst = worst.max((closed - best.0 as i64).abs());
        }
    }
    (
        worst <= 1,
        format!("max |closed form - scan| = {worst} bins"),
    )
}

fn c7_mi_sanity() -> Outcome {
    let mut r = rng(7);
    let v: Vec<f64> = (0..2000).map(|_| r.random::<f64>()).collect();
    let c: Vec<u64> = (0..2000).map(|_| r.random::<bool>() as u64).collect();
    let independent = ksg_mixed_mi_scalar(&v, &c, 3).unwrap().value;

    let c: Vec<u64> = (0..2000).map(|i| i % 2).collect();
    let v: Vec<f64> = c
        .iter()
        .map(|&l| l as f64 + 1e-6 * r.random::<f64>())
        .collect();
    let deterministic = ksg_mixed_mi_scalar(&v, &c, 3).unwrap().value;

    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut r = rng(700 + seed);
        let sep = 0.25 * seed as f64;
        let p = 0.3 + 0.02 * seed as f64;
        let labels: Vec<u64> = (0..2000).map(|_| (r.random::<f64>() < p) as u64).collect();
        let values: Vec<f64> = labels
            .iter()
            .map(|&l| {
                let z: f64 = StandardNormal.sample(&mut r);
                sep * l as f64 + z
            })
            .collect();
        let knn = ksg_mixed_mi_scalar(&values, &labels, 3).unwrap().value;
        let plug = plugin_mi(&values, &labels, 8).unwrap().value;
        worst = worst.max((knn - plug).abs());
    }
    (
        independent.abs() < 0.05 && within(deterministic, LN_2, 0.05) && worst <= 0.08,
        format!("independent {independent:.4}, deterministic {deterministic:.4}, max kNN/plug-in gap {worst:.4}"),
    )
}

fn c8_cmi_bound() -> Outcome {
    let cfg = CmiExperimentConfig {
        n: 2000,
        bins: cube_root_bins(2000),
        n_supersamples: 50,
        n_masks: 10,
        seed: 8,
        ..Default::default()
    };
    let r = run_cmi_experiment(&cfg).unwrap();
    let bound = gen_ece_bound(r.ecmi.clamped, cfg.bins, cfg.n)
        .unwrap()
        .value;
    (
        r.mean_gap <= bound,
        format!(
            "mean gap {:.5} <= bound {bound:.5} (eCMI {:.4}, B = {})",
            r.mean_gap, r.ecmi.value, cfg.bins
        ),
    )
}

fn c9_recalibrator_identity() -> Outcome {
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let b = r.random_range(1..25);
        let n = r.random_range(2 * b..2 * b + 300);
        let mut d = random_dataset(&mut r, n);
        if i % 4 == 0 {
            // coarse scores exercise tie handling
            let pairs: Vec<(f64, u8)> = d
                .samples()
                .iter()
                .map(|s| ((s.score() * 5.0).round() / 5.0, s.label()))
                .collect();
            d = ScoredDataset::from_pairs(&pairs, "ties").unwrap();
        }
        let rc = Recalibrator::fit(&d, b, i % 2 == 0).unwrap();
        worst = worst.max(rc.ece(&d).value);
    }
    (
        worst <= 1e-12,
        format!("max fit-set ECE {worst:.2e} over 200 fits"),
    )
}

fn c10_calibrated_model() -> Outcome {
    let o = SyntheticModel::calibrated().oracle();
    let mut worst: f64 = 0.0;
    for i in 1..10_000 {
        let z = i as f64 / 10_000.0;
        worst = worst.max((o.canonical_calibration(z).unwrap() - z).abs());
    }
    let tce = o.mc_tce(1_000_000, 10).value;
    (
        worst <= 1e-12 && tce < 0.005,
        format!("max |pi1(z) - z| {worst:.2e}, MC TCE {tce:.5}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("table 1 bound values", c1_table_bounds),
        ("TCE-gap scaling slope", c2_scaling_law),
        ("ECE reformulation identity", c3_ece_identity),
        ("UMB mass property", c4_umb_mass),
        ("ECE overestimates binned TCE", c5_overestimation),
        ("optimal B closed form vs scan", c6_optimal_bins),
        ("MI estimator sanity", c7_mi_sanity),
        ("CMI bound validity", c8_cmi_bound),
        ("recalibrator fit-set identity", c9_recalibrator_identity),
        ("calibrated model zero check", c10_calibrated_model),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail} [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
