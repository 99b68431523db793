//! Combining multi-classifier outputs per sample with the sum, max,
//! and product rules, and scoring the results: per-classifier top-n
//! rates, AND/OR coverage, and combined top-1 accuracies.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{apply_table, CalibrationError, CalibrationTable, EvaluationSet, RankedOutput};

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("no outputs to fuse")]
    Empty,
    #[error("mismatched sample ids: '{0}' vs '{1}'")]
    SampleMismatch(String, String),
    #[error("no calibration table for classifier '{0}'")]
    MissingTable(String),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

pub type Result<T> = std::result::Result<T, FusionError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionRule {
    Sum,
    Max,
    Product,
}

impl FusionRule {
    pub const ALL: [FusionRule; 3] = [FusionRule::Sum, FusionRule::Max, FusionRule::Product];

    pub fn name(&self) -> &'static str {
        match self {
            FusionRule::Sum => "sum",
            FusionRule::Max => "max",
            FusionRule::Product => "product",
        }
    }
}

impl std::str::FromStr for FusionRule {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sum" => Ok(FusionRule::Sum),
            "max" => Ok(FusionRule::Max),
            "product" => Ok(FusionRule::Product),
            other => Err(format!("unknown fusion rule '{other}' (sum|max|product)")),
        }
    }
}

/// Per-sample fused ranking, descending score; ties break by ascending
/// label so reports are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedRanking {
    pub sample_id: String,
    pub ranking: Vec<(String, f64)>,
    /// Set when a product-rule factor was zero or negative.
    pub nonpositive_product_factor: bool,
}

impl FusedRanking {
    pub fn top1(&self) -> Option<&str> {
        self.ranking.first().map(|(l, _)| l.as_str())
    }
}

/// Fuses one sample's outputs under the given rule.
///
/// Labels absent from a classifier's list contribute nothing under SUM
/// and MAX. Under PRODUCT only labels present in every classifier's
/// ranking participate; anything else would invent a factor.
pub fn fuse(outputs: &[&RankedOutput], rule: FusionRule) -> Result<FusedRanking> {
    if outputs.is_empty() {
        return Err(FusionError::Empty);
    }
    let sample_id = &outputs[0].sample_id;
    for o in outputs {
        if &o.sample_id != sample_id {
            return Err(FusionError::SampleMismatch(
                sample_id.clone(),
                o.sample_id.clone(),
            ));
        }
    }

    // label -> (aggregate, classifiers seen)
    let mut scores: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut nonpositive = false;
    for output in outputs {
        for (label, conf) in &output.ranking {
            let entry = scores.entry(label.as_str());
            match rule {
                FusionRule::Sum => {
                    let e = entry.or_insert((0.0, 0));
                    e.0 += conf;
                    e.1 += 1;
                }
                FusionRule::Max => {
                    let e = entry.or_insert((f64::NEG_INFINITY, 0));
                    e.0 = e.0.max(*conf);
                    e.1 += 1;
                }
                FusionRule::Product => {
                    if *conf <= 0.0 {
                        nonpositive = true;
                    }
                    let e = entry.or_insert((1.0, 0));
                    e.0 *= conf;
                    e.1 += 1;
                }
            }
        }
    }

    let mut ranking: Vec<(String, f64)> = scores
        .into_iter()
        .filter(|(_, (_, seen))| rule != FusionRule::Product || *seen == outputs.len())
        .map(|(label, (score, _))| (label.to_string(), score))
        .collect();
    // BTreeMap iteration is label-ascending; a stable sort on the score
    // alone therefore leaves ties in lexicographic order.
    ranking.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    Ok(FusedRanking {
        sample_id: sample_id.clone(),
        ranking,
        nonpositive_product_factor: nonpositive && rule == FusionRule::Product,
    })
}

/// Per-rule combined top-1 accuracy, raw and calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedRates {
    pub raw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub informational: Option<f64>,
}

/// The recognition-rate summary for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionReport {
    /// classifier -> {"top1": .., "top2": .., ...}
    pub individual: BTreeMap<String, BTreeMap<String, f64>>,
    /// "top1"... -> fraction with the correct label in every list.
    pub and: BTreeMap<String, f64>,
    /// "top1"... -> fraction with the correct label in at least one list.
    pub or: BTreeMap<String, f64>,
    /// rule name -> raw / informational top-1 accuracy.
    pub combined: BTreeMap<String, CombinedRates>,
    /// Samples where a product factor was zero or negative.
    pub product_flagged_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infonet: Option<f64>,
}

fn top_n_contains(output: &RankedOutput, label: &str, n: usize) -> bool {
    output.ranking.iter().take(n).any(|(l, _)| l == label)
}

/// Scores an evaluation set: individual top-n rates, AND/OR coverage,
/// and fused top-1 accuracy per rule (raw, plus calibrated when tables
/// are supplied).
pub fn evaluate(
    eval: &EvaluationSet,
    tables: Option<&HashMap<String, CalibrationTable>>,
    rules: &[FusionRule],
    n_max: usize,
) -> Result<FusionReport> {
    let truth = eval.true_labels();
    let classifier_ids = eval.classifier_ids();
    if classifier_ids.is_empty() {
        return Err(FusionError::Empty);
    }
    if let Some(tables) = tables {
        for id in &classifier_ids {
            if !tables.contains_key(id) {
                return Err(FusionError::MissingTable(id.clone()));
            }
        }
    }

    // Group outputs by sample, preserving sample order.
    let mut by_sample: Vec<(&str, Vec<&RankedOutput>)> = Vec::new();
    let mut sample_index: HashMap<&str, usize> = HashMap::new();
    for o in &eval.outputs {
        let idx = *sample_index.entry(o.sample_id.as_str()).or_insert_with(|| {
            by_sample.push((o.sample_id.as_str(), Vec::new()));
            by_sample.len() - 1
        });
        by_sample[idx].1.push(o);
    }

    let n_samples = by_sample.len();
    let mut individual_hits: HashMap<&str, Vec<usize>> = classifier_ids
        .iter()
        .map(|id| (id.as_str(), vec![0usize; n_max]))
        .collect();
    let mut individual_counts: HashMap<&str, usize> =
        classifier_ids.iter().map(|id| (id.as_str(), 0)).collect();
    let mut and_hits = vec![0usize; n_max];
    let mut or_hits = vec![0usize; n_max];
    let mut raw_hits: HashMap<FusionRule, usize> = rules.iter().map(|r| (*r, 0)).collect();
    let mut cal_hits: HashMap<FusionRule, usize> = rules.iter().map(|r| (*r, 0)).collect();
    let mut product_flagged = 0usize;

    for (sample_id, outputs) in &by_sample {
        let label = truth[sample_id];
        for o in outputs {
            individual_counts
                .entry(o.classifier_id.as_str())
                .and_modify(|c| *c += 1);
            for n in 1..=n_max {
                if top_n_contains(o, label, n) {
                    individual_hits.get_mut(o.classifier_id.as_str()).unwrap()[n - 1] += 1;
                }
            }
        }
        for n in 1..=n_max {
            let in_list: Vec<bool> = outputs
                .iter()
                .map(|o| top_n_contains(o, label, n))
                .collect();
            if in_list.iter().all(|&b| b) {
                and_hits[n - 1] += 1;
            }
            if in_list.iter().any(|&b| b) {
                or_hits[n - 1] += 1;
            }
        }

        let calibrated: Option<Vec<RankedOutput>> = match tables {
            Some(tables) => Some(
                outputs
                    .iter()
                    .map(|o| apply_table(&tables[&o.classifier_id], o))
                    .collect::<crate::calibration::Result<_>>()?,
            ),
            None => None,
        };

        for &rule in rules {
            let fused = fuse(outputs, rule)?;
            if fused.nonpositive_product_factor {
                product_flagged += 1;
            }
            if fused.top1() == Some(label) {
                *raw_hits.get_mut(&rule).unwrap() += 1;
            }
            if let Some(cal) = &calibrated {
                let refs: Vec<&RankedOutput> = cal.iter().collect();
                let fused = fuse(&refs, rule)?;
                if fused.top1() == Some(label) {
                    *cal_hits.get_mut(&rule).unwrap() += 1;
                }
            }
        }
    }

    let top_key = |n: usize| format!("top{n}");
    let individual = classifier_ids
        .iter()
        .map(|id| {
            let count = individual_counts[id.as_str()].max(1);
            let rates = (1..=n_max)
                .map(|n| {
                    (
                        top_key(n),
                        individual_hits[id.as_str()][n - 1] as f64 / count as f64,
                    )
                })
                .collect();
            (id.clone(), rates)
        })
        .collect();
    let and = (1..=n_max)
        .map(|n| (top_key(n), and_hits[n - 1] as f64 / n_samples as f64))
        .collect();
    let or = (1..=n_max)
        .map(|n| (top_key(n), or_hits[n - 1] as f64 / n_samples as f64))
        .collect();
    let combined = rules
        .iter()
        .map(|rule| {
            (
                rule.name().to_string(),
                CombinedRates {
                    raw: raw_hits[rule] as f64 / n_samples as f64,
                    informational: tables.map(|_| cal_hits[rule] as f64 / n_samples as f64),
                },
            )
        })
        .collect();

    Ok(FusionReport {
        individual,
        and,
        or,
        combined,
        product_flagged_samples: product_flagged,
        infonet: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::LabeledSample;

    fn out(sample: &str, cls: &str, ranking: &[(&str, f64)]) -> RankedOutput {
        RankedOutput {
            sample_id: sample.into(),
            classifier_id: cls.into(),
            ranking: ranking.iter().map(|(l, c)| (l.to_string(), *c)).collect(),
        }
    }

    #[test]
    fn fuse_all_three_rules_hand_arithmetic() {
        // Classifier 1: A=2.0, B=4.0. Classifier 2: A=3.0, B=0.5.
        let o1 = out("s", "c1", &[("B", 4.0), ("A", 2.0)]);
        let o2 = out("s", "c2", &[("A", 3.0), ("B", 0.5)]);
        let outputs = [&o1, &o2];

        let sum = fuse(&outputs, FusionRule::Sum).unwrap();
        assert_eq!(sum.ranking, vec![("A".into(), 5.0), ("B".into(), 4.5)]);

        let max = fuse(&outputs, FusionRule::Max).unwrap();
        assert_eq!(max.ranking, vec![("B".into(), 4.0), ("A".into(), 3.0)]);

        let product = fuse(&outputs, FusionRule::Product).unwrap();
        assert_eq!(product.ranking, vec![("A".into(), 6.0), ("B".into(), 2.0)]);
    }

    #[test]
    fn fuse_single_classifier_is_identity() {
        let o = out("s", "c1", &[("A", 3.0), ("B", 1.0)]);
        for rule in FusionRule::ALL {
            let fused = fuse(&[&o], rule).unwrap();
            assert_eq!(fused.ranking, o.ranking);
        }
    }

    #[test]
    fn sum_label_in_one_classifier_keeps_its_confidence() {
        let o1 = out("s", "c1", &[("A", 3.0)]);
        let o2 = out("s", "c2", &[("B", 1.0)]);
        let fused = fuse(&[&o1, &o2], FusionRule::Sum).unwrap();
        assert!(fused.ranking.contains(&("A".into(), 3.0)));
    }

    #[test]
    fn product_drops_labels_missing_somewhere() {
        let o1 = out("s", "c1", &[("A", 3.0), ("B", 2.0)]);
        let o2 = out("s", "c2", &[("B", 1.0)]);
        let fused = fuse(&[&o1, &o2], FusionRule::Product).unwrap();
        assert_eq!(fused.ranking, vec![("B".into(), 2.0)]);
    }

    #[test]
    fn product_flags_nonpositive_factors() {
        let o1 = out("s", "c1", &[("A", 0.0)]);
        let o2 = out("s", "c2", &[("A", 2.0)]);
        let fused = fuse(&[&o1, &o2], FusionRule::Product).unwrap();
        assert!(fused.nonpositive_product_factor);
    }

    #[test]
    fn fuse_is_permutation_invariant() {
        let o1 = out("s", "c1", &[("A", 2.0), ("B", 4.0)]);
        let o2 = out("s", "c2", &[("B", 0.5), ("A", 3.0)]);
        for rule in FusionRule::ALL {
            let ab = fuse(&[&o1, &o2], rule).unwrap();
            let ba = fuse(&[&o2, &o1], rule).unwrap();
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn fuse_rejects_mixed_samples() {
        let o1 = out("s1", "c1", &[("A", 2.0)]);
        let o2 = out("s2", "c2", &[("A", 3.0)]);
        assert!(fuse(&[&o1, &o2], FusionRule::Sum).is_err());
        assert!(fuse(&[], FusionRule::Sum).is_err());
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let o = out("s", "c1", &[("Z", 1.0), ("A", 1.0)]);
        let fused = fuse(&[&o], FusionRule::Sum).unwrap();
        assert_eq!(fused.ranking[0].0, "A");
    }

    fn two_classifier_eval(correct1: &[bool], correct2: &[bool]) -> EvaluationSet {
        let n = correct1.len();
        let samples = (0..n)
            .map(|i| LabeledSample {
                sample_id: format!("s{i}"),
                true_label: "T".into(),
            })
            .collect();
        let mut outputs = Vec::new();
        for (i, (&c1, &c2)) in correct1.iter().zip(correct2).enumerate() {
            for (cls, correct) in [("c1", c1), ("c2", c2)] {
                let top = if correct { "T" } else { "W" };
                let second = if correct { "W" } else { "T" };
                outputs.push(out(
                    &format!("s{i}"),
                    cls,
                    &[(top, 2.0), (second, 1.0)],
                ));
            }
        }
        EvaluationSet::new(samples, outputs).unwrap()
    }

    #[test]
    fn evaluate_all_correct() {
        let eval = two_classifier_eval(&[true; 4], &[true; 4]);
        let report = evaluate(&eval, None, &FusionRule::ALL, 2).unwrap();
        assert_eq!(report.individual["c1"]["top1"], 1.0);
        assert_eq!(report.and["top1"], 1.0);
        assert_eq!(report.or["top1"], 1.0);
        for rule in FusionRule::ALL {
            assert_eq!(report.combined[rule.name()].raw, 1.0);
        }
    }

    #[test]
    fn evaluate_disjoint_halves() {
        let eval = two_classifier_eval(&[true, true, false, false], &[false, false, true, true]);
        let report = evaluate(&eval, None, &[FusionRule::Sum], 1).unwrap();
        assert_eq!(report.individual["c1"]["top1"], 0.5);
        assert_eq!(report.individual["c2"]["top1"], 0.5);
        assert_eq!(report.or["top1"], 1.0);
        assert_eq!(report.and["top1"], 0.0);
    }

    #[test]
    fn and_or_bracket_individual_rates() {
        let eval = two_classifier_eval(
            &[true, true, true, false, false, true],
            &[true, false, true, true, false, false],
        );
        let report = evaluate(&eval, None, &[FusionRule::Sum], 2).unwrap();
        for n in ["top1", "top2"] {
            let best = report.individual.values().map(|m| m[n]).fold(0.0, f64::max);
            let worst = report.individual.values().map(|m| m[n]).fold(1.0, f64::min);
            assert!(report.or[n] >= best);
            assert!(report.and[n] <= worst);
        }
    }

    #[test]
    fn report_json_shape() {
        let eval = two_classifier_eval(&[true, false], &[true, true]);
        let report = evaluate(&eval, None, &FusionRule::ALL, 3).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert!(json["individual"]["c1"]["top3"].is_number());
        assert!(json["and"]["top1"].is_number());
        assert!(json["or"]["top2"].is_number());
        assert!(json["combined"]["sum"]["raw"].is_number());
        // No tables supplied: informational column absent.
        assert!(json["combined"]["sum"].get("informational").is_none());
    }
}
