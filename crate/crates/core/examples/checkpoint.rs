//! Saves a trained agent, reloads it and evaluates strategies built from
//! the reloaded network.

use antijam::harness::{run_eval, run_train, ExperimentConfig};

fn main() -> antijam::Result<()> {
    let dir = std::env::temp_dir().join("antijam-checkpoint-example");
    let cfg = ExperimentConfig::parse(
        "chain.n = 5\nchain.h_tilde = 0.7\nagent.architecture = mlp\nagent.backup = double-q\nmlp.train_slots = 15000\neval.slots = 100000\n",
    )?;
    run_train(&cfg, Some(&dir))?;
    let path = dir.join("agent.params");
    println!("checkpoint written to {}", path.display());

    let mut reload = cfg.clone();
    reload.set("eval.checkpoint", &path.to_string_lossy())?;
    print!("{}", run_eval(&reload, None)?.to_csv());
    Ok(())
}
