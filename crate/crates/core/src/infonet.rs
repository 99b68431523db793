//! Single-layer information network: synapses emit general-entropy
//! summands, the neuron sums them and pushes the total through the
//! sigmoid. Also the per-class information summation used as an
//! alternative fusion route.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{CalibrationTable, EvaluationSet};
use crate::entropy;

/// Clamp margin for synapse performances.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum InfonetError {
    #[error("performance {0} outside clamped domain [eps, 1 - eps]")]
    Domain(f64),
    #[error("classifier information I_C must be positive, got {0}")]
    NonPositiveInformation(f64),
    #[error("neuron has no synapses")]
    NoSynapses,
    #[error("no calibration table for classifier '{0}'")]
    MissingTable(String),
}

pub type Result<T> = std::result::Result<T, InfonetError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Synapse {
    pub source: String,
    pub normalized_performance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neuron {
    pub synapses: Vec<Synapse>,
    pub expectation: f64,
}

/// JSON network configuration: neurons with synapse sources and the
/// per-source information used to normalize performances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub neurons: Vec<NeuronConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronConfig {
    pub id: String,
    pub expectation: f64,
    pub synapses: Vec<SynapseConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynapseConfig {
    pub source: String,
    pub i_c: f64,
}

impl NetworkConfig {
    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// One general-entropy summand, -p ln p. Maximum e^{-1} at p = e^{-1}.
pub fn synapse_summand(p: f64) -> Result<f64> {
    if !(EPS..=1.0 - EPS).contains(&p) {
        return Err(InfonetError::Domain(p));
    }
    Ok(-p * p.ln())
}

/// Sums the synapse summands into the general entropy and applies the
/// sigmoid to get the neuron's output performance.
pub fn neuron_forward(neuron: &Neuron) -> Result<f64> {
    if neuron.synapses.is_empty() {
        return Err(InfonetError::NoSynapses);
    }
    if neuron.expectation <= 0.0 || !neuron.expectation.is_finite() {
        return Err(InfonetError::Domain(neuron.expectation));
    }
    let mut k = 0.0;
    for s in &neuron.synapses {
        k += synapse_summand(s.normalized_performance)?;
    }
    Ok(entropy::sigmoid(k, neuron.expectation).expect("finite entropy sum"))
}

/// The network output value 1 / (1 + p_hat^(1/I_C)).
///
/// Force-B orientation: higher cumulative performance means a lower
/// output value, in [0.5, 1).
pub fn output_value(p_hat: f64, i_c: f64) -> Result<f64> {
    if i_c <= 0.0 || !i_c.is_finite() {
        return Err(InfonetError::NonPositiveInformation(i_c));
    }
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(InfonetError::Domain(p_hat));
    }
    let p = p_hat.max(EPS);
    Ok(1.0 / (1.0 + p.powf(1.0 / i_c)))
}

/// Per-class information fusion: for each label, sum over classifiers
/// the information -ln(output_value(p_hat, I_C)) of the cumulative
/// performance of the confidence that classifier assigned to the label.
/// Returns the top-1 accuracy over the evaluation set.
pub fn single_layer_fuse(
    eval: &EvaluationSet,
    tables: &HashMap<String, CalibrationTable>,
) -> Result<f64> {
    for id in eval.classifier_ids() {
        if !tables.contains_key(&id) {
            return Err(InfonetError::MissingTable(id));
        }
    }
    let truth = eval.true_labels();

    // Group outputs by sample.
    let mut by_sample: Vec<(&str, Vec<&crate::calibration::RankedOutput>)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for o in &eval.outputs {
        let idx = *index.entry(o.sample_id.as_str()).or_insert_with(|| {
            by_sample.push((o.sample_id.as_str(), Vec::new()));
            by_sample.len() - 1
        });
        by_sample[idx].1.push(o);
    }

    let mut hits = 0usize;
    for (sample_id, outputs) in &by_sample {
        let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
        for o in outputs {
            let table = &tables[&o.classifier_id];
            for (label, conf) in &o.ranking {
                let p_hat = lookup_p_hat(table, *conf);
                let out = output_value(p_hat, table.i_c)?;
                *scores.entry(label.as_str()).or_insert(0.0) += -out.ln();
            }
        }
        let top = scores
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(a.0)))
            .map(|(l, _)| *l);
        if top == truth.get(sample_id).copied() {
            hits += 1;
        }
    }
    Ok(hits as f64 / by_sample.len() as f64)
}

/// Cumulative performance of the bin containing a raw confidence,
/// clamped to the table's endpoints outside its range.
fn lookup_p_hat(table: &CalibrationTable, raw: f64) -> f64 {
    let first = &table.entries[0];
    if raw < first.bin_lo {
        return first.p_hat;
    }
    let last = table.entries.last().unwrap();
    if raw > last.bin_hi {
        return last.p_hat;
    }
    let idx = table
        .entries
        .partition_point(|e| e.bin_hi < raw)
        .min(table.entries.len() - 1);
    table.entries[idx].p_hat
}
