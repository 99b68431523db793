//! Informational-confidence toolkit: maps raw classifier confidences to
//! calibrated "informational" confidences via a fixed-point performance
//! relation, fuses multiple calibrated classifiers, and exposes the
//! supporting entropy / force / sigmoid / spiral mathematics.

pub mod calibration;
pub mod entropy;
pub mod fusion;
pub mod harness;
pub mod infonet;
pub mod plot;

pub use calibration::{BinningSpec, CalibrationTable, EvaluationSet, RankedOutput};
pub use fusion::{FusionReport, FusionRule};
pub use harness::{ExperimentConfig, SyntheticSpec};
