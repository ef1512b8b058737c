//! TCE gap against the test-set size with the bound-minimising bin count.

use calibound::experiment::{log_grid, run_scaling, BinRule, ScalingConfig};

fn main() -> calibound::Result<()> {
    let cfg = ScalingConfig {
        n_grid: log_grid(1000, 100_000, 5)?,
        reps: 10,
        bin_rule: BinRule::Optimal,
        ..Default::default()
    };
    let r = run_scaling(&cfg)?;
    println!(
        "beta = ({}, {}), L = {:.3}, TCE = {:.5}",
        cfg.beta0, cfg.beta1, r.lipschitz, r.tce
    );
    for (chunk, (n, gap)) in r.rows.chunks(cfg.reps).zip(&r.mean_gaps) {
        println!(
            "n = {n:>6}  B = {:>3}  mean gap {gap:.5}  bound {:.5}",
            chunk[0].bins, chunk[0].bound
        );
    }
    println!("log-log slope {:.3}", r.slope);
    Ok(())
}
