//! A shortened policy-error sweep: errors of the learned most-likely-channel
//! policy over training for each network and backup.

use antijam::harness::{fig1_checks, run_fig1, ExperimentConfig, FIG1_H_MLP, FIG1_H_RECURRENT};

fn main() -> antijam::Result<()> {
    let cfg = ExperimentConfig::parse(
        "seeds = 1\nfig1.n = 5\nmlp.train_slots = 20000\nrecurrent.train_slots = 10000\nagent.log_every = 2000\n",
    )?;
    let out = std::env::temp_dir().join("antijam-fig1-example");
    let result = run_fig1(&cfg, Some(&out), 1)?;
    for c in &result.cells {
        println!(
            "{:<9} {:<14} H={} seed {}: final errors {:?}",
            c.architecture.label(),
            c.backup.label(),
            c.h_tilde,
            c.seed,
            c.final_errors()
        );
    }
    for check in fig1_checks(&result, FIG1_H_RECURRENT, FIG1_H_MLP) {
        println!("{check}");
    }
    println!("CSV and SVG in {}", out.display());
    Ok(())
}
