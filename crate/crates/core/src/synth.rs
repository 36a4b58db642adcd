//! Synthetic ENF traces and rolling-shutter luminance series.
//!
//! The generator stands in for a power-grid logger and a camera pointed at a
//! mains-lit wall: a mean-reverting random walk around the nominal ENF drives
//! an illumination waveform at twice that frequency, sampled row by row at
//! the full rate `Fr·M`, and the rolling shutter then keeps the first L rows
//! of every frame.

use chrono::{DateTime, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CaptureProfile, GridProfile};

/// Time-stamped ENF trace at one sample per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnfSeries {
    pub start_time: DateTime<Utc>,
    pub sample_period_s: f64,
    pub values_hz: Vec<f64>,
}

impl EnfSeries {
    pub fn duration_s(&self) -> f64 {
        self.values_hz.len() as f64 * self.sample_period_s
    }

    /// Placeholder epoch for traces with no absolute clock (e.g. extracted
    /// from a video, where only relative lags matter).
    pub fn relative(values_hz: Vec<f64>) -> Self {
        Self {
            start_time: Utc.timestamp_opt(0, 0).unwrap(),
            sample_period_s: 1.0,
            values_hz,
        }
    }
}

/// Concatenated row-luminance samples, L per frame in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuminanceSeries {
    pub capture: CaptureProfile,
    pub grid_hint: Option<GridProfile>,
    pub frame_count: usize,
    pub samples: Vec<f64>,
}

impl LuminanceSeries {
    pub fn new(
        capture: CaptureProfile,
        grid_hint: Option<GridProfile>,
        frame_count: usize,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if samples.len() != frame_count * capture.rows_per_frame {
            return Err(Error::ShapeMismatch(format!(
                "expected {} samples ({} frames x {} rows), got {}",
                frame_count * capture.rows_per_frame,
                frame_count,
                capture.rows_per_frame,
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite luminance sample".into()));
        }
        Ok(Self {
            capture,
            grid_hint,
            frame_count,
            samples,
        })
    }

    /// Sample rate of the concatenated row stream.
    pub fn sample_rate_hz(&self) -> f64 {
        self.capture.effective_rate_hz()
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count as f64 / self.capture.frame_rate_fps
    }
}

/// Parameters of the ENF random walk.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnfWalkConfig {
    /// Standard deviation of the per-second innovation, Hz.
    pub step_sigma_hz: f64,
    /// Pull-back per second toward the nominal value, in (0, 1].
    pub mean_reversion: f64,
}

impl Default for EnfWalkConfig {
    fn default() -> Self {
        Self {
            step_sigma_hz: 0.005,
            mean_reversion: 0.15,
        }
    }
}

/// Illumination waveform parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LuminanceConfig {
    pub dc_level: f64,
    pub modulation_depth: f64,
    /// Optional second illumination harmonic (at four times the ENF).
    pub second_harmonic_depth: Option<f64>,
}

impl Default for LuminanceConfig {
    fn default() -> Self {
        Self {
            dc_level: 2.0,
            modulation_depth: 1.0,
            second_harmonic_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub enf: EnfWalkConfig,
    pub luminance: LuminanceConfig,
    /// SNR of the additive white noise, measured against the modulation term
    /// alone; `None` disables noise.
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
}

// ChaCha streams: 0 drives the ENF walk, 1+frame drives that frame's noise.
// Per-chunk streams keep the output identical no matter how frames are
// scheduled across threads.
const STREAM_ENF: u64 = 0;
const STREAM_NOISE_BASE: u64 = 1;

/// Generate a mean-reverting ENF walk around the grid's nominal value.
pub fn synth_enf(
    duration_s: f64,
    grid: &GridProfile,
    config: &SynthesisConfig,
    start_time: DateTime<Utc>,
) -> Result<EnfSeries> {
    if duration_s < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "duration must be at least 1 s, got {duration_s}"
        )));
    }
    let n = duration_s.ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_ENF);
    let mut values = Vec::with_capacity(n);
    let mut dev = 0.0f64;
    let keep = 1.0 - config.enf.mean_reversion;
    if config.enf.step_sigma_hz > 0.0 {
        let noise = Normal::new(0.0, config.enf.step_sigma_hz).unwrap();
        for _ in 0..n {
            values.push(grid.nominal_enf_hz + dev);
            dev = keep * dev + noise.sample(&mut rng);
        }
    } else {
        values.resize(n, grid.nominal_enf_hz);
    }
    Ok(EnfSeries {
        start_time,
        sample_period_s: 1.0,
        values_hz: values,
    })
}

/// Cumulative phase of the ENF trace at its 1 s knots, in cycles.
fn phase_knots(enf: &EnfSeries) -> Vec<f64> {
    let mut knots = Vec::with_capacity(enf.values_hz.len());
    let mut acc = 0.0f64;
    knots.push(0.0);
    for w in enf.values_hz.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * enf.sample_period_s;
        knots.push(acc);
    }
    knots
}

/// Phase in cycles at time `t`, with the trace linearly interpolated between
/// knots so the integral is exact for the piecewise-linear frequency.
fn phase_at(enf: &EnfSeries, knots: &[f64], t: f64) -> f64 {
    let k = (t.floor() as usize).min(knots.len() - 2);
    let dt = t - k as f64;
    let f0 = enf.values_hz[k];
    let f1 = enf.values_hz[k + 1];
    knots[k] + f0 * dt + 0.5 * (f1 - f0) * dt * dt
}

/// Synthesize the shuttered row-luminance series driven by an ENF trace.
pub fn synth_luminance(
    enf: &EnfSeries,
    capture: &CaptureProfile,
    frame_count: usize,
    config: &SynthesisConfig,
) -> Result<LuminanceSeries> {
    Ok(synth_luminance_full(enf, capture, frame_count, config)?.0)
}

/// Same as [`synth_luminance`], also returning the full-rate series before
/// the shutter discards the idle rows.
pub fn synth_luminance_full(
    enf: &EnfSeries,
    capture: &CaptureProfile,
    frame_count: usize,
    config: &SynthesisConfig,
) -> Result<(LuminanceSeries, Vec<f64>)> {
    if frame_count == 0 {
        return Err(Error::InvalidArgument(
            "frame count must be positive".into(),
        ));
    }
    let needed = (frame_count as f64 / capture.frame_rate_fps).ceil() as usize + 1;
    if enf.values_hz.len() < needed {
        return Err(Error::TooShort {
            needed,
            actual: enf.values_hz.len(),
        });
    }

    let knots = phase_knots(enf);
    let m = capture.row_capacity;
    let full_rate = capture.full_rate_hz();
    let depth = config.luminance.modulation_depth;
    if !depth.is_finite() || depth <= 0.0 {
        return Err(Error::InvalidArgument(
            "modulation depth must be positive".into(),
        ));
    }
    let noise_sigma = config
        .noise_snr_db
        .map(|snr| depth / std::f64::consts::SQRT_2 / 10f64.powf(snr / 20.0));

    let frames: Vec<Vec<f64>> = crate::par::map_indexed(frame_count, |f| {
        let mut chunk = Vec::with_capacity(m);
        for i in 0..m {
            let t = (f * m + i) as f64 / full_rate;
            let phi = phase_at(enf, &knots, t);
            let mut v =
                config.luminance.dc_level + depth * (2.0 * std::f64::consts::TAU * phi).cos();
            if let Some(d2) = config.luminance.second_harmonic_depth {
                v += d2 * (4.0 * std::f64::consts::TAU * phi).cos();
            }
            chunk.push(v);
        }
        if let Some(sigma) = noise_sigma {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(STREAM_NOISE_BASE + f as u64);
            let noise = Normal::new(0.0, sigma).unwrap();
            for v in &mut chunk {
                *v += noise.sample(&mut rng);
            }
        }
        chunk
    });

    let full: Vec<f64> = frames.into_iter().flatten().collect();
    let shuttered = apply_rolling_shutter(&full, capture)?;
    let mut series = shuttered;
    series.grid_hint = enf_grid_hint(enf);
    Ok((series, full))
}

fn enf_grid_hint(enf: &EnfSeries) -> Option<GridProfile> {
    let mean = enf.values_hz.iter().sum::<f64>() / enf.values_hz.len() as f64;
    let nominal = if (mean - 50.0).abs() < 2.0 {
        50.0
    } else if (mean - 60.0).abs() < 2.0 {
        60.0
    } else {
        return None;
    };
    GridProfile::new(nominal).ok()
}

/// Keep the first L samples of every M-sample frame, preserving order.
pub fn apply_rolling_shutter(x_full: &[f64], capture: &CaptureProfile) -> Result<LuminanceSeries> {
    let m = capture.row_capacity;
    let l = capture.rows_per_frame;
    if x_full.is_empty() || !x_full.len().is_multiple_of(m) {
        return Err(Error::ShapeMismatch(format!(
            "full-rate length {} is not a positive multiple of M={}",
            x_full.len(),
            m
        )));
    }
    let frame_count = x_full.len() / m;
    let mut kept = Vec::with_capacity(frame_count * l);
    for frame in x_full.chunks_exact(m) {
        kept.extend_from_slice(&frame[..l]);
    }
    LuminanceSeries::new(*capture, None, frame_count, kept)
}
