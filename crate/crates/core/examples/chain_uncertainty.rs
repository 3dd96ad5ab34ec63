//! Builds circulant jammer chains, reports their uncertainty and calibrates
//! the decay for a target normalized uncertainty.

use antijam::markov::{achievable_range, build_circulant, calibrate_theta, uncertainty, ChainSpec};

fn main() -> antijam::Result<()> {
    let chain = build_circulant(&ChainSpec::new(5, 0.5, 0.001))?;
    let row: Vec<String> = chain.row(0).iter().map(|p| format!("{p:.4}")).collect();
    println!("n=5 theta=0.5 first row: [{}]", row.join(", "));
    let rep = uncertainty(&chain);
    println!("H = {:.4} bits, normalized {:.4}, lambda_max {}", rep.chain_entropy, rep.normalized, rep.lambda_max);

    for n in [5, 9] {
        let (lo, hi) = achievable_range(n, 0.001)?;
        println!("n={n}: reachable normalized uncertainty [{lo:.4}, {hi:.4}]");
        for target in [0.6, 0.77, 0.9] {
            let theta = calibrate_theta(n, 0.001, target, 1e-9)?;
            let h = uncertainty(&build_circulant(&ChainSpec::new(n, theta, 0.001))?).normalized;
            println!("  target {target:.2}: theta {theta:.6} gives {h:.9}");
        }
    }
    Ok(())
}
