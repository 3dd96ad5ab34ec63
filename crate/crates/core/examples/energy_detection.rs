//! Detection accuracy of the energy detector as a function of SNR.

use antijam::markov::{build_circulant, ChainSpec};
use antijam::signal::{Env, Phase, SignalConfig};

fn main() -> antijam::Result<()> {
    let chain = build_circulant(&ChainSpec::new(9, 0.5, 0.001))?;
    let slots = 20_000;
    for snr_db in [0.0, 5.0, 7.5, 10.0, 15.0] {
        let cfg = SignalConfig { eval_snr_db: snr_db, ..SignalConfig::default() };
        let mut env = Env::new(chain.clone(), cfg, 7)?;
        env.set_phase(Phase::Implementation);
        let mut hits = 0;
        for _ in 0..slots {
            env.step(0)?;
            hits += usize::from(env.detected() == env.true_state());
        }
        println!("SNR {snr_db:>4} dB: detection accuracy {:.4}", hits as f64 / slots as f64);
    }
    Ok(())
}
