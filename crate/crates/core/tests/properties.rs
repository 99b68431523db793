//! Property-based checks of the numerical invariants.

use proptest::prelude::*;

use infoconf::calibration::{
    calibrate_with, estimate_performance, recognition_rate, BinningSpec, EvaluationSet,
    LabeledSample, RankedOutput,
};
use infoconf::entropy::{net_force, sigmoid};

/// An evaluation set from arbitrary (correct?, confidence) decisions.
fn eval_from_decisions(decisions: &[(bool, f64)]) -> EvaluationSet {
    let mut samples = Vec::new();
    let mut outputs = Vec::new();
    for (i, (correct, conf)) in decisions.iter().enumerate() {
        let sample_id = format!("s{i}");
        samples.push(LabeledSample {
            sample_id: sample_id.clone(),
            true_label: "t".into(),
        });
        let top = if *correct { "t" } else { "f" };
        outputs.push(RankedOutput {
            sample_id,
            classifier_id: "c".into(),
            ranking: vec![(top.into(), *conf)],
        });
    }
    EvaluationSet::new(samples, outputs).unwrap()
}

proptest! {
    /// The cumulative performance estimate never decreases with
    /// confidence and tops out at exactly the recognition rate,
    /// whatever the decision pattern.
    #[test]
    fn performance_estimate_is_monotone_with_top_r(
        decisions in prop::collection::vec((any::<bool>(), 0.0_f64..1.0), 1..120),
    ) {
        let eval = eval_from_decisions(&decisions);
        for binning in [BinningSpec::Distinct, BinningSpec::Auto, BinningSpec::EqualFrequency(7)] {
            let perf = estimate_performance(&eval, "c", &binning).unwrap();
            prop_assert!(perf.p_hat.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*perf.p_hat.last().unwrap(), recognition_rate(&eval, "c").unwrap());
        }
    }

    /// Calibration maps confidences monotonically: raw order is never
    /// inverted by the table, only possibly collapsed into ties.
    #[test]
    fn calibration_map_is_monotone(
        decisions in prop::collection::vec((any::<bool>(), 0.0_f64..1.0), 2..120),
        probes in prop::collection::vec(-0.5_f64..1.5, 2..40),
    ) {
        let eval = eval_from_decisions(&decisions);
        let table = calibrate_with(&eval, "c", &BinningSpec::Distinct, true).unwrap();
        let mut sorted = probes.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mapped: Vec<f64> = sorted.iter().map(|p| table.map(*p)).collect();
        prop_assert!(mapped.windows(2).all(|w| w[0] <= w[1]));
    }

    /// The sigmoid inverts the net force over the whole open unit
    /// interval and positive expectations.
    #[test]
    fn sigmoid_inverts_net_force(p in 1e-6_f64..0.999999, e in 0.01_f64..100.0) {
        let roundtrip = sigmoid(net_force(p, e).unwrap(), e).unwrap();
        prop_assert!((roundtrip - p).abs() <= 1e-9 * e.max(1.0));
    }
}
