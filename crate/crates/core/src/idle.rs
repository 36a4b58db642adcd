//! Idle-period estimation.
//!
//! Two estimators: the two-component spectral method matches the measured
//! (H1, H2, power-ratio) features against a reference sweep table, and the
//! vertical-phase baseline fits the per-row phase ramp of the alias ENF to
//! recover the frame read-out time. The spectral method works at any frame
//! rate; the baseline needs a nonzero alias and clean phases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{candidate_components, CaptureProfile, ComponentTable, GridProfile};
use crate::spectral::magnitude_spectrum;
use crate::synth::LuminanceSeries;

/// Amplitude margin (dB) over the median spectrum a component needs to count.
pub const NOISE_GATE_DB: f64 = 6.0;

/// Measured ratios above this are treated as "effectively infinite" when
/// matched against sentinel table cells.
const RATIO_SENTINEL: f64 = 100.0;

/// Frequency tolerance when matching a measured peak to a table component.
const FREQ_MATCH_TOL_HZ: f64 = 1.5;

/// Residual circular variance above which the vertical-phase fit is rejected.
const PHASE_VARIANCE_GATE: f64 = 0.3;

/// Result of the two-component spectral idle estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdleEstimate {
    /// Strongest gated component, by its model identity.
    pub h1_hz: Option<f64>,
    /// Second-strongest gated component, absent when nothing else clears the
    /// noise gate.
    pub h2_hz: Option<f64>,
    /// Measured magnitude ratio H1/H2.
    pub ratio: Option<f64>,
    pub band_low_pct: Option<f64>,
    pub band_high_pct: Option<f64>,
    /// Midpoint of the candidate band.
    pub point_estimate_pct: Option<f64>,
    pub matched: bool,
    pub diagnostic: Option<String>,
}

impl IdleEstimate {
    fn unmatched(h1: Option<f64>, h2: Option<f64>, ratio: Option<f64>, why: String) -> Self {
        Self {
            h1_hz: h1,
            h2_hz: h2,
            ratio,
            band_low_pct: None,
            band_high_pct: None,
            point_estimate_pct: None,
            matched: false,
            diagnostic: Some(why),
        }
    }
}

/// Vertical-phase baseline output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalPhaseResult {
    /// Unwrapped per-row phase of the alias component, radians.
    pub per_row_phase: Vec<f64>,
    /// Fitted phase slope, radians per row.
    pub vertical_radial_freq: f64,
    /// Frame read-out time, seconds.
    pub read_out_time_s: f64,
    /// Illumination cycles observed during one frame read-out.
    pub cycle_count: f64,
    /// Estimated idle proportion, percent.
    pub idle_pct: f64,
    /// Alias frequency the per-row phases were probed at.
    pub alias_freq_hz: f64,
}

/// Per-row mean luminance, one row per sensor line, one column per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeansMatrix {
    pub capture: CaptureProfile,
    pub values: Vec<Vec<f64>>,
}

impl RowMeansMatrix {
    pub fn new(capture: CaptureProfile, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != capture.rows_per_frame {
            return Err(Error::ShapeMismatch(format!(
                "expected {} rows, got {}",
                capture.rows_per_frame,
                values.len()
            )));
        }
        let cols = values.first().map(|r| r.len()).unwrap_or(0);
        if cols == 0 || values.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("row-means matrix is ragged".into()));
        }
        Ok(Self { capture, values })
    }

    /// View a concatenated row series as per-row frame series. At desk scale
    /// one luminance sample per row already is the row mean.
    pub fn from_luminance(series: &LuminanceSeries) -> Self {
        let l = series.capture.rows_per_frame;
        let mut values = vec![Vec::with_capacity(series.frame_count); l];
        for frame in series.samples.chunks_exact(l) {
            for (row, &v) in frame.iter().enumerate() {
                values[row].push(v);
            }
        }
        Self {
            capture: series.capture,
            values,
        }
    }

    pub fn frame_count(&self) -> usize {
        self.values.first().map(|r| r.len()).unwrap_or(0)
    }
}

/// Estimate the idle period of a shuttered series by locating its two
/// strongest admissible components and matching (H1, H2, ratio) against a
/// reference table built at the same frame rate and grid.
pub fn estimate_idle(
    series: &LuminanceSeries,
    grid: &GridProfile,
    reference: &ComponentTable,
) -> Result<IdleEstimate> {
    let rate = series.sample_rate_hz();
    let needed = (20.0 * rate) as usize;
    if series.samples.len() < needed {
        return Err(Error::TooShort {
            needed,
            actual: series.samples.len(),
        });
    }

    let spec = magnitude_spectrum(&series.samples, rate)?;
    let mut sorted = spec.magnitudes.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2].max(1e-300);
    // The maximum of n noise bins runs ~sqrt(ln n / ln 2) above the median,
    // so the gate is referenced to the expected in-band noise maximum; a
    // bare peak-to-median test would wave broadband noise through.
    let raw_band_bins = (2.0 * series.samples.len() as f64 / rate).max(2.0);
    let noise_max = median * (raw_band_bins.ln() / std::f64::consts::LN_2).sqrt();

    let candidates = candidate_components(grid, &series.capture)?;
    let mut gated: Vec<(f64, f64)> = Vec::new(); // (identity freq, magnitude)
    for c in &candidates {
        let Some(peak) = crate::spectral::peak_in_band(&spec, c.freq_hz - 1.0, c.freq_hz + 1.0)
        else {
            continue;
        };
        let margin_db = 20.0 * (peak.magnitude / noise_max).log10();
        if margin_db >= NOISE_GATE_DB {
            gated.push((c.freq_hz, peak.magnitude));
        }
    }
    gated.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then(a.0.partial_cmp(&b.0).unwrap())
    });

    let Some(&(h1, m1)) = gated.first() else {
        return Ok(IdleEstimate::unmatched(
            None,
            None,
            None,
            format!("no component peak clears the {NOISE_GATE_DB} dB noise gate"),
        ));
    };
    let second = gated.get(1).copied();
    let h2 = second.map(|(f, _)| f);
    let ratio = second.map(|(_, m2)| m1 / m2);
    Ok(match_features(reference, h1, h2, ratio))
}

/// Match measured (H1, H2, ratio) features against the reference sweep.
///
/// Frequency identity is a hard gate; among frequency-matching cells the
/// nearest ratio in log space wins, sentinel cells accepting only a missing
/// or very large measured ratio. The candidate band spans the matched cell
/// and its better-matching frequency-compatible neighbour; the midpoint is
/// the point estimate.
pub fn match_features(
    reference: &ComponentTable,
    h1_hz: f64,
    h2_hz: Option<f64>,
    ratio: Option<f64>,
) -> IdleEstimate {
    let rows = &reference.rows;
    let distance = |row: &crate::model::SweepRow| -> Option<f64> {
        let in_set = |set: &[crate::model::ComponentPrediction], f: f64| {
            set.iter()
                .any(|c| (c.freq_hz - f).abs() <= FREQ_MATCH_TOL_HZ)
        };
        if !in_set(&row.strongest, h1_hz) {
            return None;
        }
        if row.power_ratio.is_infinite() {
            // Sentinel cell: compatible when the measurement also saw no
            // usable second component.
            return match ratio {
                None => Some(0.0),
                Some(r) if r > RATIO_SENTINEL => Some(0.0),
                Some(_) => None,
            };
        }
        let h2 = h2_hz?;
        if !in_set(&row.second, h2) {
            return None;
        }
        let r = ratio?;
        Some((r.ln() - row.power_ratio.ln()).abs())
    };

    let mut best: Option<(usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        if let Some(d) = distance(row) {
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
    }
    let Some((i, _)) = best else {
        return IdleEstimate::unmatched(
            Some(h1_hz),
            h2_hz,
            ratio,
            "no reference cell carries this component pair at a compatible ratio".into(),
        );
    };

    let step = if rows.len() > 1 {
        (rows[1].idle_percent - rows[0].idle_percent).abs()
    } else {
        5.0
    };
    let center = rows[i].idle_percent;

    let neighbour_distance = |j: usize| rows.get(j).and_then(&distance);
    let prev = i
        .checked_sub(1)
        .and_then(|j| neighbour_distance(j).map(|d| (j, d)));
    let next = neighbour_distance(i + 1).map(|d| (i + 1, d));
    let bracket = match (prev, next) {
        (Some((jp, dp)), Some((jn, dn))) => {
            if dp < dn {
                Some(jp)
            } else if dn < dp {
                Some(jn)
            } else {
                // Equidistant neighbours: prefer the side whose strongest
                // set still carries the measured H1.
                let carries = |j: usize| {
                    rows[j]
                        .strongest
                        .iter()
                        .any(|c| (c.freq_hz - h1_hz).abs() <= FREQ_MATCH_TOL_HZ)
                };
                if carries(jp) {
                    Some(jp)
                } else {
                    Some(jn)
                }
            }
        }
        (Some((jp, _)), None) => Some(jp),
        (None, Some((jn, _))) => Some(jn),
        (None, None) => None,
    };

    let (low, high) = match bracket {
        Some(j) => {
            let other = rows[j].idle_percent;
            (center.min(other), center.max(other))
        }
        None => {
            let half = step / 2.0;
            let mut low = center - half;
            let mut high = center + half;
            if low < 0.0 {
                high -= low;
                low = 0.0;
            }
            (low, high)
        }
    };

    IdleEstimate {
        h1_hz: Some(h1_hz),
        h2_hz,
        ratio,
        band_low_pct: Some(low),
        band_high_pct: Some(high),
        point_estimate_pct: Some(0.5 * (low + high)),
        matched: true,
        diagnostic: None,
    }
}

/// Vertical-phase baseline: probe each row's frame-rate series at the alias
/// of the illumination frequency, fit the unwrapped phase ramp, and convert
/// the per-frame cycle count into an idle proportion.
pub fn vertical_phase(rows: &RowMeansMatrix, grid: &GridProfile) -> Result<VerticalPhaseResult> {
    let fr = rows.capture.frame_rate_fps;
    let f_illum = grid.illumination_freq_hz;
    let alias = f_illum.rem_euclid(fr);
    if alias < 1e-6 || fr - alias < 1e-6 {
        return Err(Error::AliasAtDc {
            frame_rate: fr,
            illumination_hz: f_illum,
        });
    }
    if (alias - fr / 2.0).abs() < 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "alias ENF sits at the frame-rate Nyquist ({alias} Hz); phase is degenerate"
        )));
    }
    let frames = rows.frame_count();
    let needed = (30.0 * fr).ceil() as usize;
    if frames < needed {
        return Err(Error::TooShort {
            needed,
            actual: frames,
        });
    }

    // Single-bin projection at the alias frequency, one phase per row.
    let omega = std::f64::consts::TAU * alias / fr;
    let wrapped: Vec<f64> = crate::par::map_slice(&rows.values, |row| {
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (k, &v) in row.iter().enumerate() {
            let a = omega * k as f64;
            let x = v - mean;
            re += x * a.cos();
            im -= x * a.sin();
        }
        im.atan2(re)
    });

    let mut unwrapped = Vec::with_capacity(wrapped.len());
    let mut acc = wrapped[0];
    unwrapped.push(acc);
    for w in wrapped.windows(2) {
        let mut d = w[1] - w[0];
        while d > std::f64::consts::PI {
            d -= std::f64::consts::TAU;
        }
        while d < -std::f64::consts::PI {
            d += std::f64::consts::TAU;
        }
        acc += d;
        unwrapped.push(acc);
    }

    // Least-squares line over row index.
    let l = unwrapped.len() as f64;
    let mean_x = (l - 1.0) / 2.0;
    let mean_y = unwrapped.iter().sum::<f64>() / l;
    let (mut sxy, mut sxx) = (0.0f64, 0.0f64);
    for (x, y) in unwrapped.iter().enumerate() {
        let dx = x as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let (mut res_re, mut res_im) = (0.0f64, 0.0f64);
    for (x, y) in unwrapped.iter().enumerate() {
        let r = y - (intercept + slope * x as f64);
        res_re += r.cos();
        res_im += r.sin();
    }
    let variance = 1.0 - (res_re * res_re + res_im * res_im).sqrt() / l;
    if variance > PHASE_VARIANCE_GATE {
        return Err(Error::UnreliablePhase { variance });
    }

    let rows_l = rows.capture.rows_per_frame as f64;
    let read_out_time_s = rows_l * slope.abs() / (std::f64::consts::TAU * f_illum);
    let span_cycles = slope.abs() * rows_l / std::f64::consts::TAU;
    let cycle_count = (span_cycles * 100.0).round() / 100.0;
    let idle_pct = (100.0 * (1.0 - cycle_count * fr / f_illum)).max(0.0);

    Ok(VerticalPhaseResult {
        per_row_phase: unwrapped,
        vertical_radial_freq: slope,
        read_out_time_s,
        cycle_count,
        idle_pct,
        alias_freq_hz: alias,
    })
}
