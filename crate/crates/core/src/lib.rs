//! Rolling-shutter ENF analysis.
//!
//! CMOS cameras expose frames row by row and pause between frames; the pause
//! drops a slice of every illumination cycle embedded in the footage by
//! mains-powered lighting. This crate models where the captured ENF
//! component lands and how much it attenuates as a function of that idle
//! period, synthesizes test footage, estimates a recording's idle period,
//! extracts ENF traces, and verifies claimed recording times against
//! ground-truth logger data.
//!
//! Data-parallel stages (candidate sweeps, STFT windows, per-row phase
//! probes) run on rayon when the default `parallel` feature is enabled and
//! degrade to sequential loops without it, with bit-identical output.

pub mod error;
pub mod idle;
pub mod io;
pub mod model;
mod par;
pub mod spectral;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
pub use idle::{estimate_idle, match_features, vertical_phase};
pub use idle::{IdleEstimate, RowMeansMatrix, VerticalPhaseResult};
pub use model::{attenuation_factor, candidate_components, idle_sweep_table, strongest_components};
pub use model::{CaptureProfile, CaseTag, ComponentPrediction, ComponentTable, GridProfile};
pub use par::execution_mode;
pub use spectral::{extract_enf, extract_enf_multi, interpolate_idle, periodogram_peak};
pub use spectral::{PeakReading, SpectrumEstimate};
pub use synth::{apply_rolling_shutter, synth_enf, synth_luminance, synth_luminance_full};
pub use synth::{EnfSeries, LuminanceSeries, SynthesisConfig};
pub use verify::{
    decide, default_component_set, evaluate_metrics, ncc_align, ncc_trace, verify_timestamp,
};
pub use verify::{
    CandidateMatch, Decision, LagGroup, MetricConfig, MetricId, NccPeak, VerificationReport,
};
