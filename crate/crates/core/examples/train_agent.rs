//! Trains a small MLP agent on a noisy five-channel jammer and compares its
//! learned policies with the exact oracle.

use antijam::markov::{build_circulant, calibrate_theta, ChainSpec};
use antijam::rl::{policy_error_count, train, AgentConfig, Architecture, Backup};
use antijam::signal::{Env, SignalConfig};

fn main() -> antijam::Result<()> {
    let theta = calibrate_theta(5, 0.001, 0.7, 1e-9)?;
    let chain = build_circulant(&ChainSpec::new(5, theta, 0.001))?;
    let cfg = AgentConfig {
        train_slots: 20_000,
        log_every: 2_000,
        ..AgentConfig::paper(Architecture::Mlp, Backup::DoubleQ)
    };
    let mut env = Env::new(chain, SignalConfig::default(), 3)?;
    let outcome = train(&mut env, &cfg, 3)?;
    for r in &outcome.log.records {
        println!("slot {:>6}  eps {:.3}  loss {:.3e}  errors {}", r.slot, r.epsilon, r.loss, r.pi_star_errors);
    }
    println!("learned pi*   {:?}", outcome.policies.pi_star);
    println!("oracle  pi*   {:?}", outcome.oracle.pi_star);
    println!("learned lara  {:?}", outcome.policies.pi_lara);
    println!("errors: {}", policy_error_count(&outcome.policies.pi_star, &outcome.oracle));
    Ok(())
}
