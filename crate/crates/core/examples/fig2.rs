//! A shortened jam-probability sweep with recurrent Mellowmax agents.

use antijam::harness::{fig2_checks, run_fig2, ExperimentConfig};

fn main() -> antijam::Result<()> {
    let cfg = ExperimentConfig::parse(
        "seeds = 1\nfig2.n_values = 5, 9\nfig2.h_values = 0.7, 0.8, 0.9\nfig2.train_slots = 5000\nfig2.eval_slots = 100000\n",
    )?;
    let out = std::env::temp_dir().join("antijam-fig2-example");
    let result = run_fig2(&cfg, Some(&out), 1)?;
    print!("{}", result.sweep.summary_csv());
    for check in fig2_checks(&result) {
        println!("{check}");
    }
    println!("CSV and SVG in {}", out.display());
    Ok(())
}
