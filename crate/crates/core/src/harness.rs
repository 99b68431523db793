//! Seeded synthetic experiment harness: generates correlated
//! multi-classifier evaluation sets with controllable reliability and
//! runs the full calibrate / fuse / report pipeline.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{
    calibrate, BinningSpec, CalibrationError, CalibrationTable, EvaluationSet, LabeledSample,
    RankedOutput,
};
use crate::fusion::{evaluate, FusionError, FusionReport, FusionRule};
use crate::infonet::{single_layer_fuse, InfonetError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("calibration stage: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("fusion stage: {0}")]
    Fusion(#[from] FusionError),
    #[error("infonet stage: {0}")]
    Infonet(#[from] InfonetError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceModel {
    /// Confidences exponentially distributed with the given mean, so
    /// the true performance curve is 1 - e^(-K/mean).
    Exponential { mean: f64 },
    /// Logistic quantile function with the given scale, centered at 0.
    Logistic { scale: f64 },
    /// Uniform on [0, 1].
    Uniform,
}

impl ConfidenceModel {
    /// Quantile function mapping u in (0, 1) to a confidence value.
    fn quantile(&self, u: f64) -> f64 {
        match self {
            ConfidenceModel::Exponential { mean } => -mean * (1.0 - u).ln(),
            ConfidenceModel::Logistic { scale } => scale * (u / (1.0 - u)).ln(),
            ConfidenceModel::Uniform => u,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub id: String,
    pub accuracy_target: f64,
    pub confidence_model: ConfidenceModel,
    /// Error correlation with the first classifier, in [0, 1].
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_samples: usize,
    pub n_classes: usize,
    pub classifiers: Vec<ClassifierSpec>,
    pub n_best: usize,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(HarnessError::InvalidSpec("n_samples must be > 0".into()));
        }
        if self.n_classes < 2 {
            return Err(HarnessError::InvalidSpec("n_classes must be >= 2".into()));
        }
        if self.n_best < 1 || self.n_best > self.n_classes {
            return Err(HarnessError::InvalidSpec(format!(
                "n_best must be in [1, n_classes = {}]",
                self.n_classes
            )));
        }
        if self.classifiers.is_empty() {
            return Err(HarnessError::InvalidSpec("need at least one classifier".into()));
        }
        for c in &self.classifiers {
            if !(c.accuracy_target > 0.0 && c.accuracy_target < 1.0) {
                return Err(HarnessError::InvalidSpec(format!(
                    "accuracy target {} for '{}' outside (0, 1)",
                    c.accuracy_target, c.id
                )));
            }
            if !(0.0..=1.0).contains(&c.correlation) {
                return Err(HarnessError::InvalidSpec(format!(
                    "correlation {} for '{}' outside the feasible range [0, 1]",
                    c.correlation, c.id
                )));
            }
        }
        Ok(())
    }
}

/// Probability that a wrong top-1 still carries the true label at a
/// lower rank, so the n-best lists get a realistic top-2/top-3 lift.
const TRUE_LABEL_RECOVERY: f64 = 0.5;

/// Generates a deterministic evaluation set from the spec.
///
/// Correlation works through a shared per-sample latent: classifier j
/// consults the latent with probability `correlation`, else draws
/// fresh. A sample is correct when its (possibly shared) uniform falls
/// below the accuracy target, and the same uniform is rearranged into
/// the upper or lower tail of the confidence model, so every
/// classifier's marginal confidence distribution is exactly the model
/// and performance genuinely increases with confidence.
pub fn generate(spec: &SyntheticSpec) -> Result<EvaluationSet> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let labels: Vec<String> = (0..spec.n_classes).map(|c| format!("L{c:03}")).collect();

    let mut samples = Vec::with_capacity(spec.n_samples);
    let mut outputs = Vec::with_capacity(spec.n_samples * spec.classifiers.len());

    for i in 0..spec.n_samples {
        let sample_id = format!("s{i:06}");
        let true_class = rng.gen_range(0..spec.n_classes);
        samples.push(LabeledSample {
            sample_id: sample_id.clone(),
            true_label: labels[true_class].clone(),
        });

        // Shared latent difficulty for this sample.
        let latent: f64 = rng.gen();

        for cls in &spec.classifiers {
            let v: f64 = if rng.gen::<f64>() < cls.correlation {
                latent
            } else {
                rng.gen()
            };
            let a = cls.accuracy_target;
            let correct = v < a;
            // Measure-preserving rearrangement: correct samples take the
            // upper tail [1 - a, 1), incorrect the lower tail [0, 1 - a),
            // so the marginal stays uniform and performance increases
            // with confidence.
            let u = if correct { (1.0 - a) + v } else { v - a };
            let u = u.clamp(1e-9, 1.0 - 1e-9);
            let top_conf = cls.confidence_model.quantile(u);

            let top_label = if correct {
                true_class
            } else {
                // A wrong label, uniform over the others.
                let mut w = rng.gen_range(0..spec.n_classes - 1);
                if w >= true_class {
                    w += 1;
                }
                w
            };

            // Lower ranks: distinct labels with confidences below top-1.
            let mut ranking = Vec::with_capacity(spec.n_best);
            ranking.push((labels[top_label].clone(), top_conf));
            let mut used = vec![top_label];
            let recover_rank = if !correct
                && spec.n_best > 1
                && rng.gen::<f64>() < TRUE_LABEL_RECOVERY
            {
                Some(rng.gen_range(1..spec.n_best))
            } else {
                None
            };
            let scale = top_conf.abs().max(1e-6);
            let mut drops: Vec<f64> = (1..spec.n_best)
                .map(|_| rng.gen::<f64>() * scale)
                .collect();
            drops.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (offset, drop) in drops.into_iter().enumerate() {
                let rank = offset + 1;
                let label_idx = if Some(rank) == recover_rank {
                    true_class
                } else {
                    loop {
                        let c = rng.gen_range(0..spec.n_classes);
                        if !used.contains(&c) && c != true_class {
                            break c;
                        }
                    }
                };
                used.push(label_idx);
                ranking.push((labels[label_idx].clone(), top_conf - drop));
            }
            outputs.push(RankedOutput {
                sample_id: sample_id.clone(),
                classifier_id: cls.id.clone(),
                ranking,
            });
        }
    }
    Ok(EvaluationSet::new(samples, outputs)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: SyntheticSpec,
    /// Fraction of samples used for calibration; the rest is the test
    /// split. Defaults to a two-thirds / one-third protocol.
    pub calibration_fraction: f64,
    pub rules: Vec<FusionRule>,
    pub binning: BinningSpec,
    pub run_infonet: bool,
    pub n_max: usize,
}

impl ExperimentConfig {
    pub fn with_defaults(spec: SyntheticSpec) -> Self {
        ExperimentConfig {
            spec,
            calibration_fraction: 2.0 / 3.0,
            rules: FusionRule::ALL.to_vec(),
            binning: BinningSpec::Auto,
            run_infonet: true,
            n_max: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub report: FusionReport,
    pub tables: Vec<CalibrationTable>,
    /// Stage wall-times in milliseconds: (stage, elapsed).
    pub stage_timings: Vec<(String, u128)>,
}

/// Splits an evaluation set by sample into calibration and test parts.
pub fn split(eval: &EvaluationSet, calibration_fraction: f64) -> (EvaluationSet, EvaluationSet) {
    let n_cal = ((eval.samples.len() as f64) * calibration_fraction).ceil() as usize;
    let n_cal = n_cal.min(eval.samples.len());
    let cal_ids: std::collections::HashSet<&str> = eval.samples[..n_cal]
        .iter()
        .map(|s| s.sample_id.as_str())
        .collect();
    let part = |keep_cal: bool| {
        let samples = eval
            .samples
            .iter()
            .filter(|s| cal_ids.contains(s.sample_id.as_str()) == keep_cal)
            .cloned()
            .collect();
        let outputs = eval
            .outputs
            .iter()
            .filter(|o| cal_ids.contains(o.sample_id.as_str()) == keep_cal)
            .cloned()
            .collect();
        EvaluationSet::new(samples, outputs).expect("split preserves validity")
    };
    (part(true), part(false))
}

/// Runs the full pipeline: generate, split, calibrate per classifier,
/// evaluate raw and calibrated fusion on the test split, optionally the
/// single-layer information network.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut timings = Vec::new();

    let start = std::time::Instant::now();
    let eval = generate(&config.spec)?;
    timings.push(("generate".to_string(), start.elapsed().as_millis()));

    let start = std::time::Instant::now();
    let (cal_split, test_split) = split(&eval, config.calibration_fraction);
    timings.push(("split".to_string(), start.elapsed().as_millis()));

    let start = std::time::Instant::now();
    let mut tables: HashMap<String, CalibrationTable> = HashMap::new();
    for id in eval.classifier_ids() {
        tables.insert(id.clone(), calibrate(&cal_split, &id, &config.binning)?);
    }
    timings.push(("calibrate".to_string(), start.elapsed().as_millis()));

    let start = std::time::Instant::now();
    let mut report = evaluate(&test_split, Some(&tables), &config.rules, config.n_max)?;
    timings.push(("evaluate".to_string(), start.elapsed().as_millis()));

    if config.run_infonet {
        let start = std::time::Instant::now();
        report.infonet = Some(single_layer_fuse(&test_split, &tables)?);
        timings.push(("infonet".to_string(), start.elapsed().as_millis()));
    }

    let mut table_list: Vec<CalibrationTable> = tables.into_values().collect();
    table_list.sort_by(|a, b| a.classifier_id.cmp(&b.classifier_id));
    Ok(ExperimentReport {
        config: config.clone(),
        seed: config.spec.seed,
        report,
        tables: table_list,
        stage_timings: timings,
    })
}

const CSV_HEADER: &str = "sample_id,true_label,classifier_id,rank,label,confidence";

/// Writes an evaluation set in the documented CSV format: one row per
/// ranking entry, rank 1-based, rows per (sample, classifier)
/// contiguous and rank-ascending.
pub fn write_csv<W: Write>(eval: &EvaluationSet, mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let truth = eval.true_labels();
    for o in &eval.outputs {
        let true_label = truth.get(o.sample_id.as_str()).copied().unwrap_or("");
        for (rank, (label, conf)) in o.ranking.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                o.sample_id,
                true_label,
                o.classifier_id,
                rank + 1,
                label,
                format_f64(*conf)
            )?;
        }
    }
    Ok(())
}

fn format_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Parses and validates an evaluation set from the CSV format.
pub fn ingest<R: Read>(reader: R) -> Result<EvaluationSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = rdr.headers().map_err(|e| HarnessError::Csv {
            line: 1,
            message: e.to_string(),
        })?;
        let expected: Vec<&str> = CSV_HEADER.split(',').collect();
        let actual: Vec<&str> = headers.iter().collect();
        if actual != expected {
            return Err(HarnessError::Csv {
                line: 1,
                message: format!("unknown header {actual:?}, expected {expected:?}"),
            });
        }
    }

    let mut samples: Vec<LabeledSample> = Vec::new();
    let mut seen_samples: HashMap<String, String> = HashMap::new();
    let mut outputs: Vec<RankedOutput> = Vec::new();
    let mut finished: std::collections::HashSet<(String, String)> = Default::default();

    for record in rdr.records() {
        let record = record.map_err(|e| HarnessError::Csv {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let err = |message: String| HarnessError::Csv { line, message };
        if record.len() != 6 {
            return Err(err(format!("expected 6 fields, got {}", record.len())));
        }
        let sample_id = record[0].to_string();
        let true_label = record[1].to_string();
        let classifier_id = record[2].to_string();
        let rank: usize = record[3]
            .parse()
            .map_err(|_| err(format!("bad rank '{}'", &record[3])))?;
        let label = record[4].to_string();
        let confidence: f64 = record[5]
            .parse()
            .map_err(|_| err(format!("bad confidence '{}'", &record[5])))?;
        if !confidence.is_finite() {
            return Err(err(format!("non-finite confidence {confidence}")));
        }

        match seen_samples.get(&sample_id) {
            None => {
                seen_samples.insert(sample_id.clone(), true_label.clone());
                samples.push(LabeledSample {
                    sample_id: sample_id.clone(),
                    true_label: true_label.clone(),
                });
            }
            Some(existing) if *existing != true_label => {
                return Err(err(format!(
                    "sample '{sample_id}' has conflicting true labels"
                )));
            }
            _ => {}
        }

        let key = (sample_id.clone(), classifier_id.clone());
        let continues = outputs
            .last()
            .map(|o| o.sample_id == sample_id && o.classifier_id == classifier_id)
            .unwrap_or(false);
        if continues {
            let last = outputs.last_mut().unwrap();
            if rank != last.ranking.len() + 1 {
                return Err(err(format!(
                    "rank {rank} out of order for sample '{sample_id}' \
                     classifier '{classifier_id}' (expected {})",
                    last.ranking.len() + 1
                )));
            }
            if last.ranking.iter().any(|(l, _)| *l == label) {
                return Err(err(format!("duplicate label '{label}' in ranking")));
            }
            if confidence > last.ranking.last().unwrap().1 {
                return Err(err(format!(
                    "confidence {confidence} increases at rank {rank}"
                )));
            }
            last.ranking.push((label, confidence));
        } else {
            if finished.contains(&key) {
                return Err(err(format!(
                    "rows for sample '{sample_id}' classifier '{classifier_id}' \
                     are not contiguous"
                )));
            }
            if let Some(prev) = outputs.last() {
                finished.insert((prev.sample_id.clone(), prev.classifier_id.clone()));
            }
            if rank != 1 {
                return Err(err(format!(
                    "first row for sample '{sample_id}' classifier \
                     '{classifier_id}' must have rank 1, got {rank}"
                )));
            }
            outputs.push(RankedOutput {
                sample_id,
                classifier_id,
                ranking: vec![(label, confidence)],
            });
        }
    }
    Ok(EvaluationSet::new(samples, outputs)?)
}

/// File-path convenience wrappers.
pub fn ingest_path(path: &Path) -> Result<EvaluationSet> {
    ingest(std::fs::File::open(path)?)
}

pub fn write_csv_path(eval: &EvaluationSet, path: &Path) -> Result<()> {
    write_csv(eval, std::fs::File::create(path)?)
}
