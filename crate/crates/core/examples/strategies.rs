//! Random hopping, KARAA and LARA with oracle policies: Monte-Carlo jam
//! probability against the closed form.

use antijam::markov::{build_circulant, calibrate_theta, exact_oracle, ChainSpec};
use antijam::signal::{jam_probability_mc, Env, SignalConfig};
use antijam::strategies::{analytic_jam_probability, oracle_strategies, Strategy};

fn main() -> antijam::Result<()> {
    for h in [0.6, 0.75, 0.9] {
        let theta = calibrate_theta(5, 0.001, h, 1e-9)?;
        let chain = build_circulant(&ChainSpec::new(5, theta, 0.001))?;
        let oracle = exact_oracle(&chain, 0.1)?;
        for kind in oracle_strategies(&oracle) {
            let analytic = analytic_jam_probability(&chain, &kind);
            let mut env = Env::new(chain.clone(), SignalConfig::noiseless(), 11)?;
            let mut strategy = Strategy::new(kind.clone(), 5, 12)?;
            let est = jam_probability_mc(&mut env, &mut strategy, 200_000)?;
            println!(
                "H={h:.2} {:<6} mc {:.5} +- {:.5}  analytic {analytic:.5}",
                kind.label(),
                est.probability(),
                est.std_error()
            );
        }
    }
    Ok(())
}
