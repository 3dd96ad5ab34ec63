//! Mellowmax: a log-mean-exp soft maximum.
//!
//! ```text
//! mm_ω(v) = (1/ω) · ln( (1/m) Σᵢ exp(ω vᵢ) )
//! ```
//!
//! It lies between the mean and the max of `v`, and tends to the max as
//! `ω → ∞`.

/// Mellowmax of `values` with inverse temperature `omega`, evaluated as
/// `max + (1/ω) ln((1/m) Σ exp(ω (vᵢ − max)))` so it cannot overflow.
pub fn mellowmax(values: &[f64], omega: f64) -> f64 {
    assert!(!values.is_empty(), "mellowmax of an empty slice");
    assert!(omega > 0.0, "mellowmax requires omega > 0");
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean_exp = values.iter().map(|v| (omega * (v - max)).exp()).sum::<f64>() / values.len() as f64;
    max + mean_exp.ln() / omega
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_values_return_that_value() {
        assert_eq!(mellowmax(&[0.37; 9], 45.0), 0.37);
        assert_eq!(mellowmax(&[-2.0; 3], 15.0), -2.0);
    }

    #[test]
    fn two_value_reference() {
        // (1/15) ln((e^15 + 1) / 2)
        let direct = ((15f64.exp() + 1.0) / 2.0).ln() / 15.0;
        let got = mellowmax(&[1.0, 0.0], 15.0);
        assert!((got - direct).abs() < 1e-14);
        assert!((got - 0.9538).abs() < 1e-4);
    }

    #[test]
    fn large_omega_approaches_max() {
        let v = [0.2, 1.5, -3.0, 1.4];
        assert!((mellowmax(&v, 1e4) - 1.5).abs() < 1e-3);
    }

    #[test]
    fn no_overflow_for_large_inputs() {
        assert!(mellowmax(&[1e3, 999.0], 45.0).is_finite());
    }

    proptest! {
        #[test]
        fn bounded_by_mean_and_max(v in prop::collection::vec(-50.0f64..50.0, 1..12), omega in 0.01f64..100.0) {
            let mm = mellowmax(&v, omega);
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            prop_assert!(mm <= max + 1e-9);
            prop_assert!(mm >= mean - 1e-9);
        }
    }
}
