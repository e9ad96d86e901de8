//! Condition monitoring pipeline for cyclic ultrasonic-welding signals.
//!
//! The pipeline turns continuous multi-sensor streams into per-cycle tool and
//! surface condition estimates:
//!
//! ```text
//! recording -> segment -> spectral -> (augment) -> model -> harness reports
//! ```
//!
//! A seeded synthetic generator ([`synthgen`]) stands in for lab data so the
//! whole chain is reproducible end to end: segmentation of the welding phase
//! by two-stage RMS thresholding, STFT magnitude spectrograms in dB (plus a
//! Mel variant), class-conditional time-axis splice augmentation, a hybrid
//! CNN + handcrafted-feature classifier trained with Adam, and an evaluation
//! harness covering stratified repeated cross-validation, sensor-combination
//! ranking, augmentation sweeps and latency benchmarks.

pub mod augment;
pub mod domain;
pub mod error;
pub mod features;
pub mod harness;
pub mod ingest;
pub mod model;
pub mod segment;
pub mod spectral;
pub mod synthgen;

pub use domain::{Labels, SensorId, SurfaceCondition, ToolCondition};
pub use error::{Result, WeldmonError};
