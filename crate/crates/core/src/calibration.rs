//! Learning informational confidence values: performance estimation by
//! accumulated partial frequencies, expectation normalization, and the
//! lookup table that rewrites raw confidences.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Clamp margin applied to R and p_hat^(1/I_C) before any logarithm.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("no outputs for classifier '{0}' in the evaluation set")]
    NoOutputs(String),
    #[error("sample '{0}' has an empty ranking")]
    EmptyRanking(String),
    #[error("output references unknown sample '{0}'")]
    UnknownSample(String),
    #[error("recognition rate {0} outside [0, 1]")]
    RateOutOfRange(f64),
    #[error(
        "degenerate recognition rate {0}: normalization diverges \
         (pass allow_degenerate to clamp instead)"
    )]
    DegenerateRate(f64),
    #[error("table is for classifier '{expected}', output is from '{actual}'")]
    ClassifierMismatch { expected: String, actual: String },
    #[error("duplicate sample id '{0}'")]
    DuplicateSample(String),
}

pub type Result<T> = std::result::Result<T, CalibrationError>;

/// How raw confidences are mapped onto the finite key set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BinningSpec {
    /// One bin per distinct observed top-1 confidence value.
    Distinct,
    /// Quantile bins with roughly equal sample counts.
    EqualFrequency(usize),
    /// Distinct values when at most 4096 are observed, else
    /// equal-frequency with 1024 bins.
    Auto,
}

impl Default for BinningSpec {
    fn default() -> Self {
        BinningSpec::Auto
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfRangePolicy {
    /// Below-range confidences take the lowest key's value, above-range
    /// the highest key's value.
    ClampToEndpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub sample_id: String,
    pub true_label: String,
}

/// One classifier's ranked output for one sample, confidences
/// non-increasing down the ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedOutput {
    pub sample_id: String,
    pub classifier_id: String,
    pub ranking: Vec<(String, f64)>,
}

impl RankedOutput {
    pub fn top1(&self) -> Option<&(String, f64)> {
        self.ranking.first()
    }
}

/// Labeled samples plus per-(sample, classifier) ranked outputs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationSet {
    pub samples: Vec<LabeledSample>,
    pub outputs: Vec<RankedOutput>,
}

impl EvaluationSet {
    pub fn new(samples: Vec<LabeledSample>, outputs: Vec<RankedOutput>) -> Result<Self> {
        let mut ids = std::collections::HashSet::new();
        for s in &samples {
            if !ids.insert(s.sample_id.as_str()) {
                return Err(CalibrationError::DuplicateSample(s.sample_id.clone()));
            }
        }
        for o in &outputs {
            if !ids.contains(o.sample_id.as_str()) {
                return Err(CalibrationError::UnknownSample(o.sample_id.clone()));
            }
        }
        Ok(EvaluationSet { samples, outputs })
    }

    pub fn true_labels(&self) -> HashMap<&str, &str> {
        self.samples
            .iter()
            .map(|s| (s.sample_id.as_str(), s.true_label.as_str()))
            .collect()
    }

    pub fn classifier_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for o in &self.outputs {
            if !ids.contains(&o.classifier_id) {
                ids.push(o.classifier_id.clone());
            }
        }
        ids
    }

    pub fn outputs_for(&self, classifier_id: &str) -> Vec<&RankedOutput> {
        self.outputs
            .iter()
            .filter(|o| o.classifier_id == classifier_id)
            .collect()
    }
}

/// One key of the discretized confidence set: a half-open value range
/// with a representative (the largest observed value in the bin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceKey {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub representative: f64,
}

/// Cumulative performance estimate per confidence key.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceEstimate {
    pub keys: Vec<ConfidenceKey>,
    pub cumulative_correct: Vec<u64>,
    pub p_hat: Vec<f64>,
    /// Number of samples with an output from this classifier.
    pub n: usize,
}

/// Normalization terms derived from the recognition rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTerms {
    /// Overall classifier information, -ln(1 - R), in nats.
    pub i_c: f64,
    /// Expectation estimate R^(1/I_C).
    pub e_hat: f64,
    /// True when R had to be clamped away from {0, 1}.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub representative: f64,
    pub p_hat: f64,
    pub k_new: f64,
}

/// Persisted calibration artifact: the monotone map from raw confidence
/// to informational confidence, plus the terms it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub classifier_id: String,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "I_C")]
    pub i_c: f64,
    #[serde(rename = "E_hat")]
    pub e_hat: f64,
    pub binning: BinningSpec,
    pub clamped: bool,
    pub entries: Vec<TableEntry>,
    pub out_of_range_policy: OutOfRangePolicy,
}

impl CalibrationTable {
    /// Maps a raw confidence to its informational confidence.
    /// Out-of-range values clamp to the nearest endpoint key.
    pub fn map(&self, raw: f64) -> f64 {
        debug_assert!(!self.entries.is_empty());
        let first = &self.entries[0];
        if raw < first.bin_lo {
            return first.k_new;
        }
        let last = self.entries.last().unwrap();
        if raw > last.bin_hi {
            return last.k_new;
        }
        // Binary search on bin_hi: first bin whose upper bound covers raw.
        let idx = self
            .entries
            .partition_point(|e| e.bin_hi < raw)
            .min(self.entries.len() - 1);
        self.entries[idx].k_new
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialization cannot fail")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

fn top1_records<'a>(
    eval: &'a EvaluationSet,
    classifier_id: &str,
) -> Result<Vec<(f64, bool)>> {
    let truth = eval.true_labels();
    let outputs = eval.outputs_for(classifier_id);
    if outputs.is_empty() {
        return Err(CalibrationError::NoOutputs(classifier_id.to_string()));
    }
    outputs
        .iter()
        .map(|o| {
            let (label, conf) = o
                .top1()
                .ok_or_else(|| CalibrationError::EmptyRanking(o.sample_id.clone()))?;
            let correct = truth.get(o.sample_id.as_str()) == Some(&label.as_str());
            Ok((*conf, correct))
        })
        .collect()
}

fn make_keys(sorted_values: &[f64], binning: &BinningSpec) -> Vec<ConfidenceKey> {
    let distinct: Vec<f64> = {
        let mut d: Vec<f64> = sorted_values.to_vec();
        d.dedup();
        d
    };
    let spec = match binning {
        BinningSpec::Auto => {
            if distinct.len() <= 4096 {
                BinningSpec::Distinct
            } else {
                BinningSpec::EqualFrequency(1024)
            }
        }
        other => other.clone(),
    };
    match spec {
        BinningSpec::Distinct => distinct
            .iter()
            .map(|&v| ConfidenceKey {
                bin_lo: v,
                bin_hi: v,
                representative: v,
            })
            .collect(),
        BinningSpec::EqualFrequency(q) => {
            let q = q.max(1).min(distinct.len());
            let n = sorted_values.len();
            let mut keys = Vec::with_capacity(q);
            let mut start = 0usize;
            for b in 0..q {
                let mut end = (n * (b + 1)) / q;
                // Never split a run of equal values across bins.
                while end < n && end > 0 && sorted_values[end] == sorted_values[end - 1] {
                    end += 1;
                }
                if end <= start {
                    continue;
                }
                keys.push(ConfidenceKey {
                    bin_lo: sorted_values[start],
                    bin_hi: sorted_values[end - 1],
                    representative: sorted_values[end - 1],
                });
                start = end;
            }
            keys
        }
        BinningSpec::Auto => unreachable!(),
    }
}

fn key_index(keys: &[ConfidenceKey], value: f64) -> usize {
    let idx = keys.partition_point(|k| k.bin_hi < value);
    idx.min(keys.len() - 1)
}

/// Estimates performance per confidence key by accumulated partial
/// frequencies: p_hat(K_i) = (correct with top-1 confidence in bins
/// 0..=i) / N.
pub fn estimate_performance(
    eval: &EvaluationSet,
    classifier_id: &str,
    binning: &BinningSpec,
) -> Result<PerformanceEstimate> {
    let records = top1_records(eval, classifier_id)?;
    let n = records.len();
    let mut values: Vec<f64> = records.iter().map(|r| r.0).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let keys = make_keys(&values, binning);

    let mut correct_in_bin = vec![0u64; keys.len()];
    for &(conf, correct) in &records {
        if correct {
            correct_in_bin[key_index(&keys, conf)] += 1;
        }
    }
    let mut cumulative_correct = Vec::with_capacity(keys.len());
    let mut acc = 0u64;
    for c in correct_in_bin {
        acc += c;
        cumulative_correct.push(acc);
    }
    let p_hat = cumulative_correct
        .iter()
        .map(|&c| c as f64 / n as f64)
        .collect();
    Ok(PerformanceEstimate {
        keys,
        cumulative_correct,
        p_hat,
        n,
    })
}

/// Fraction of samples whose top-1 label matches the true label.
pub fn recognition_rate(eval: &EvaluationSet, classifier_id: &str) -> Result<f64> {
    let records = top1_records(eval, classifier_id)?;
    let correct = records.iter().filter(|r| r.1).count();
    Ok(correct as f64 / records.len() as f64)
}

/// Computes I_C = -ln(1 - R) and E_hat = R^(1/I_C), clamping R to
/// [EPS, 1 - EPS] first.
pub fn normalization_terms(r: f64) -> Result<NormalizationTerms> {
    if !(0.0..=1.0).contains(&r) || !r.is_finite() {
        return Err(CalibrationError::RateOutOfRange(r));
    }
    let clamped = r < EPS || r > 1.0 - EPS;
    let rc = r.clamp(EPS, 1.0 - EPS);
    let i_c = -(1.0 - rc).ln();
    let e_hat = rc.powf(1.0 / i_c);
    Ok(NormalizationTerms { i_c, e_hat, clamped })
}

/// Builds the lookup table
/// K_new = -E_hat * ln(1 - p_hat^(1/I_C)).
pub fn build_table(
    perf: &PerformanceEstimate,
    r: f64,
    classifier_id: &str,
    binning: BinningSpec,
    allow_degenerate: bool,
) -> Result<CalibrationTable> {
    let terms = normalization_terms(r)?;
    if terms.clamped && !allow_degenerate {
        return Err(CalibrationError::DegenerateRate(r));
    }
    let mut clamped = terms.clamped;
    let entries = perf
        .keys
        .iter()
        .zip(&perf.p_hat)
        .map(|(key, &p_hat)| {
            let root = p_hat.powf(1.0 / terms.i_c);
            let bounded = if root > 1.0 - EPS {
                clamped = true;
                1.0 - EPS
            } else {
                root
            };
            TableEntry {
                bin_lo: key.bin_lo,
                bin_hi: key.bin_hi,
                representative: key.representative,
                p_hat,
                k_new: -terms.e_hat * (1.0 - bounded).ln(),
            }
        })
        .collect();
    Ok(CalibrationTable {
        classifier_id: classifier_id.to_string(),
        r,
        i_c: terms.i_c,
        e_hat: terms.e_hat,
        binning,
        clamped,
        entries,
        out_of_range_policy: OutOfRangePolicy::ClampToEndpoints,
    })
}

/// Rewrites every confidence in a ranked output through the table.
/// Ranking order is preserved (the table map is monotone).
pub fn apply_table(table: &CalibrationTable, output: &RankedOutput) -> Result<RankedOutput> {
    if table.classifier_id != output.classifier_id {
        return Err(CalibrationError::ClassifierMismatch {
            expected: table.classifier_id.clone(),
            actual: output.classifier_id.clone(),
        });
    }
    Ok(RankedOutput {
        sample_id: output.sample_id.clone(),
        classifier_id: output.classifier_id.clone(),
        ranking: output
            .ranking
            .iter()
            .map(|(label, conf)| (label.clone(), table.map(*conf)))
            .collect(),
    })
}

/// The full estimation pipeline: performance estimate, recognition
/// rate, normalization, table.
pub fn calibrate(
    eval: &EvaluationSet,
    classifier_id: &str,
    binning: &BinningSpec,
) -> Result<CalibrationTable> {
    calibrate_with(eval, classifier_id, binning, false)
}

pub fn calibrate_with(
    eval: &EvaluationSet,
    classifier_id: &str,
    binning: &BinningSpec,
    allow_degenerate: bool,
) -> Result<CalibrationTable> {
    let perf = estimate_performance(eval, classifier_id, binning)?;
    let r = recognition_rate(eval, classifier_id)?;
    build_table(&perf, r, classifier_id, binning.clone(), allow_degenerate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdempotenceReport {
    pub max_abs_diff: f64,
    pub pass: bool,
    /// True when pass one mapped several raw values onto one new value.
    pub ties_introduced: bool,
}

/// Verifies the one-iteration attractor property: calibrating the
/// already-calibrated confidences reproduces the same table values.
pub fn idempotence_check(
    eval: &EvaluationSet,
    classifier_id: &str,
    binning: &BinningSpec,
) -> Result<IdempotenceReport> {
    let first = calibrate(eval, classifier_id, binning)?;

    let rewritten: Vec<RankedOutput> = eval
        .outputs
        .iter()
        .map(|o| {
            if o.classifier_id == classifier_id {
                apply_table(&first, o)
            } else {
                Ok(o.clone())
            }
        })
        .collect::<Result<_>>()?;
    let rewritten_eval = EvaluationSet::new(eval.samples.clone(), rewritten)?;

    let second = calibrate(&rewritten_eval, classifier_id, &BinningSpec::Distinct)?;

    // Pass one may merge bins (ties): distinct first-pass K_new values
    // correspond one-to-one with second-pass keys.
    let mut first_distinct: Vec<f64> = first.entries.iter().map(|e| e.k_new).collect();
    first_distinct.dedup();
    let ties_introduced = first_distinct.len() < first.entries.len();

    let max_abs_diff = if first_distinct.len() == second.entries.len() {
        first_distinct
            .iter()
            .zip(&second.entries)
            .map(|(k1, e2)| (k1 - e2.k_new).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(IdempotenceReport {
        max_abs_diff,
        pass: max_abs_diff <= 1e-9,
        ties_introduced,
    })
}
