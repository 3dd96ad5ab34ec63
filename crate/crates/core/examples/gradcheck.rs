//! Finite-difference verification of the MLP and LSTM gradients.

fn main() {
    let report = antijam::harness::gradcheck_report(1);
    print!("{}", report.render());
}
