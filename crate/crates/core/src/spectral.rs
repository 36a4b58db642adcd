//! Periodograms, band-limited peak readings, idle-gap interpolation and
//! STFT-based ENF trace extraction.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CaptureProfile, GridProfile};
use crate::synth::{EnfSeries, LuminanceSeries};

/// One-sided magnitude spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub bin_spacing_hz: f64,
    pub magnitudes: Vec<f64>,
    pub source_sample_rate_hz: f64,
}

/// A band-limited spectral peak after quadratic refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakReading {
    pub freq_hz: f64,
    pub magnitude: f64,
}

/// Default STFT window length for ENF extraction, seconds.
pub const DEFAULT_WINDOW_S: f64 = 20.0;
/// Default STFT overlap, seconds; leaves a 1 s hop and 1 s ENF resolution.
pub const DEFAULT_OVERLAP_S: f64 = 19.0;

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos()))
        .collect()
}

fn transform_len(window_len: usize) -> usize {
    (4 * window_len).next_power_of_two()
}

fn spectrum_with_plan(
    samples: &[f64],
    sample_rate_hz: f64,
    window: &[f64],
    fft: &Arc<dyn Fft<f64>>,
) -> Result<SpectrumEstimate> {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let nfft = fft.len();
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    let mut energy = 0.0f64;
    for i in 0..n {
        let v = (samples[i] - mean) * window[i];
        energy += v * v;
        buf[i].re = v;
    }
    if energy <= 0.0 {
        return Err(Error::EmptyWindow);
    }
    fft.process(&mut buf);
    let half = nfft / 2;
    let magnitudes: Vec<f64> = buf[..=half].iter().map(|c| c.norm()).collect();
    Ok(SpectrumEstimate {
        bin_spacing_hz: sample_rate_hz / nfft as f64,
        magnitudes,
        source_sample_rate_hz: sample_rate_hz,
    })
}

/// Mean-removed, Hann-tapered magnitude spectrum, zero-padded to the next
/// power of two at least four times the input length.
pub fn magnitude_spectrum(samples: &[f64], sample_rate_hz: f64) -> Result<SpectrumEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let window = hann(samples.len());
    let fft = FftPlanner::new().plan_fft_forward(transform_len(samples.len()));
    spectrum_with_plan(samples, sample_rate_hz, &window, &fft)
}

pub(crate) fn peak_in_band(
    spec: &SpectrumEstimate,
    low_hz: f64,
    high_hz: f64,
) -> Option<PeakReading> {
    let lo_bin = (low_hz / spec.bin_spacing_hz).ceil().max(1.0) as usize;
    let hi_bin = ((high_hz / spec.bin_spacing_hz).floor() as usize).min(spec.magnitudes.len() - 1);
    if lo_bin > hi_bin {
        return None;
    }
    let mut best = lo_bin;
    for i in lo_bin..=hi_bin {
        if spec.magnitudes[i] > spec.magnitudes[best] {
            best = i;
        }
    }
    let m0 = spec.magnitudes[best];
    if m0 <= 0.0 {
        return None;
    }
    // Three-point parabolic refinement on log magnitudes.
    let mut delta = 0.0f64;
    let mut mag = m0;
    if best > 0 && best + 1 < spec.magnitudes.len() {
        let (lm, l0, lp) = (
            spec.magnitudes[best - 1].max(1e-300).ln(),
            m0.ln(),
            spec.magnitudes[best + 1].max(1e-300).ln(),
        );
        let denom = lm - 2.0 * l0 + lp;
        if denom < 0.0 {
            delta = (0.5 * (lm - lp) / denom).clamp(-0.5, 0.5);
            mag = (l0 - 0.25 * (lm - lp) * delta).exp();
        }
    }
    Some(PeakReading {
        freq_hz: (best as f64 + delta) * spec.bin_spacing_hz,
        magnitude: mag,
    })
}

/// Strongest interpolated peak inside `band_center ± band_halfwidth`.
///
/// The window must cover at least two seconds of samples and the band must
/// sit strictly inside (0, Nyquist).
pub fn periodogram_peak(
    samples: &[f64],
    sample_rate_hz: f64,
    band_center_hz: f64,
    band_halfwidth_hz: f64,
) -> Result<PeakReading> {
    let nyquist = sample_rate_hz / 2.0;
    let low = band_center_hz - band_halfwidth_hz;
    let high = band_center_hz + band_halfwidth_hz;
    if !(low > 0.0 && high < nyquist) {
        return Err(Error::BandOutOfRange {
            low_hz: low,
            high_hz: high,
            nyquist_hz: nyquist,
        });
    }
    let needed = (2.0 * sample_rate_hz).round() as usize;
    if samples.len() < needed {
        return Err(Error::TooShort {
            needed,
            actual: samples.len(),
        });
    }
    let spec = magnitude_spectrum(samples, sample_rate_hz)?;
    peak_in_band(&spec, low, high).ok_or(Error::EmptyWindow)
}

/// Re-expand a shuttered series to `M' = round(L/(1−assumed_idle))` samples
/// per frame, filling each frame's missing tail positionally from the same
/// position of the previous and next frames (clamped to the last kept row);
/// boundary frames use their single neighbour.
pub fn interpolate_idle(series: &LuminanceSeries, assumed_idle: f64) -> Result<LuminanceSeries> {
    if !(0.0..=0.95).contains(&assumed_idle) {
        return Err(Error::InvalidArgument(format!(
            "assumed idle must lie in [0, 0.95], got {assumed_idle}"
        )));
    }
    if series.frame_count < 3 {
        return Err(Error::TooShort {
            needed: 3,
            actual: series.frame_count,
        });
    }
    if assumed_idle == 0.0 {
        return Ok(series.clone());
    }
    let l = series.capture.rows_per_frame;
    let m_new = (l as f64 / (1.0 - assumed_idle)).round() as usize;
    if m_new == l {
        return Ok(series.clone());
    }
    let frames = series.frame_count;
    let frame_at = |k: usize| &series.samples[k * l..(k + 1) * l];

    let mut out = Vec::with_capacity(frames * m_new);
    for k in 0..frames {
        out.extend_from_slice(frame_at(k));
        for j in l..m_new {
            let src = j.min(l - 1);
            let fill = if k == 0 {
                frame_at(1)[src]
            } else if k == frames - 1 {
                frame_at(frames - 2)[src]
            } else {
                0.5 * (frame_at(k - 1)[src] + frame_at(k + 1)[src])
            };
            out.push(fill);
        }
    }
    let capture = CaptureProfile::new(series.capture.frame_rate_fps, m_new, m_new)?;
    LuminanceSeries::new(capture, series.grid_hint, frames, out)
}

/// STFT ENF extraction at one shifted component. See [`extract_enf_multi`].
pub fn extract_enf(
    series: &LuminanceSeries,
    grid: &GridProfile,
    component_freq_hz: f64,
    window_s: f64,
    overlap_s: f64,
) -> Result<EnfSeries> {
    extract_enf_multi(series, grid, &[component_freq_hz], window_s, overlap_s)?
        .pop()
        .unwrap()
}

/// Extract ENF traces at several shifted components in one pass, sharing the
/// per-window transform.
///
/// Each window's peak inside `component ± 1 Hz` maps to ENF as
/// `nominal + (peak − component)/2`: the shifted components move at twice
/// the ENF deviation, so halving the component deviation recovers the grid
/// frequency. Sample k of the output covers the window starting k hops in.
///
/// Components whose band does not fit under the Nyquist limit yield an `Err`
/// entry without failing the others.
pub fn extract_enf_multi(
    series: &LuminanceSeries,
    grid: &GridProfile,
    components_hz: &[f64],
    window_s: f64,
    overlap_s: f64,
) -> Result<Vec<Result<EnfSeries>>> {
    if !(window_s > 0.0 && overlap_s >= 0.0 && overlap_s < window_s) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= overlap < window, got window {window_s} s, overlap {overlap_s} s"
        )));
    }
    let rate = series.sample_rate_hz();
    let win = (window_s * rate).round() as usize;
    let hop = ((window_s - overlap_s) * rate).round().max(1.0) as usize;
    if series.samples.len() < win {
        return Err(Error::TooShort {
            needed: win,
            actual: series.samples.len(),
        });
    }
    let n_windows = (series.samples.len() - win) / hop + 1;
    let nyquist = rate / 2.0;

    let bands: Vec<Option<(f64, f64)>> = components_hz
        .iter()
        .map(|&c| {
            let (low, high) = (c - 1.0, c + 1.0);
            (low > 0.0 && high < nyquist).then_some((low, high))
        })
        .collect();

    let window = hann(win);
    let fft = FftPlanner::new().plan_fft_forward(transform_len(win));

    // One spectrum per window, every component band read from it.
    let per_window: Vec<Result<Vec<Option<PeakReading>>>> =
        crate::par::map_indexed(n_windows, |k| {
            let chunk = &series.samples[k * hop..k * hop + win];
            let spec = spectrum_with_plan(chunk, rate, &window, &fft)?;
            Ok(bands
                .iter()
                .map(|band| band.and_then(|(lo, hi)| peak_in_band(&spec, lo, hi)))
                .collect())
        });

    let mut readings: Vec<Vec<Option<PeakReading>>> = Vec::with_capacity(n_windows);
    for w in per_window {
        readings.push(w?);
    }

    let nominal = grid.nominal_enf_hz;
    Ok(components_hz
        .iter()
        .enumerate()
        .map(|(ci, &component)| {
            if bands[ci].is_none() {
                return Err(Error::BandOutOfRange {
                    low_hz: component - 1.0,
                    high_hz: component + 1.0,
                    nyquist_hz: nyquist,
                });
            }
            let mut values = Vec::with_capacity(n_windows);
            for row in &readings {
                match row[ci] {
                    Some(peak) => values.push(nominal + (peak.freq_hz - component) / 2.0),
                    None => return Err(Error::EmptyWindow),
                }
            }
            Ok(EnfSeries::relative(values))
        })
        .collect())
}

/// Hann-weighted forward moving window over a 1 Hz trace.
///
/// A tapered STFT window reads out a taper-weighted average of the
/// instantaneous frequency, so the logger trace must be smoothed with the
/// same weights before correlation. The frequency over second `[i, i+1)` is
/// the midpoint of the two bounding knots, keeping the smoothed sample
/// centred on its window; output j covers `values[j..=j+window]` and lags
/// stay start-aligned.
pub(crate) fn windowed_trace_reference(values: &[f64], window: usize) -> Vec<f64> {
    if values.len() < window + 1 || window == 0 {
        return Vec::new();
    }
    let weights: Vec<f64> = (0..window)
        .map(|i| {
            let u = (i as f64 + 0.5) / window as f64;
            0.5 * (1.0 - (std::f64::consts::TAU * u).cos())
        })
        .collect();
    let norm: f64 = weights.iter().sum();
    (0..values.len() - window)
        .map(|j| {
            weights
                .iter()
                .enumerate()
                .map(|(i, w)| w * 0.5 * (values[j + i] + values[j + i + 1]))
                .sum::<f64>()
                / norm
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GridProfile;
    use crate::synth::{synth_enf, synth_luminance, EnfWalkConfig, SynthesisConfig};
    use chrono::{TimeZone, Utc};

    fn grid50() -> GridProfile {
        GridProfile::new(50.0).unwrap()
    }

    fn epoch() -> chrono::DateTime<Utc> {
        Utc.timestamp_opt(0, 0).unwrap()
    }

    fn tone(freq: f64, rate: f64, seconds: f64) -> Vec<f64> {
        let n = (rate * seconds) as usize;
        (0..n)
            .map(|i| (std::f64::consts::TAU * freq * i as f64 / rate).cos())
            .collect()
    }

    pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for i in 0..a.len() {
            let (da, db) = (a[i] - ma, b[i] - mb);
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        sab / (saa.sqrt() * sbb.sqrt())
    }

    #[test]
    fn exact_tone_at_high_rate() {
        let samples = tone(70.0, 21600.0, 2.0);
        let peak = periodogram_peak(&samples, 21600.0, 70.0, 1.0).unwrap();
        assert!((peak.freq_hz - 70.0).abs() <= 0.01, "{}", peak.freq_hz);
    }

    #[test]
    fn off_bin_tone_interpolates_below_hundredth() {
        // 20 s window at 1 kHz puts the raw bin spacing at 0.05 Hz.
        let samples = tone(69.95, 1000.0, 20.0);
        let peak = periodogram_peak(&samples, 1000.0, 70.0, 1.0).unwrap();
        assert!((peak.freq_hz - 69.95).abs() <= 0.005, "{}", peak.freq_hz);
    }

    #[test]
    fn interpolation_error_stays_below_tenth_of_bin() {
        let rate = 1000.0;
        let raw_bin = 1.0 / 2.0; // 2 s window
        for k in 0..12 {
            let f = 70.0 + (k as f64 / 12.0 - 0.5) * raw_bin;
            let samples = tone(f, rate, 2.0);
            let peak = periodogram_peak(&samples, rate, 70.0, 2.0).unwrap();
            assert!(
                (peak.freq_hz - f).abs() < 0.1 * raw_bin,
                "tone {f}: got {}",
                peak.freq_hz
            );
        }
    }

    #[test]
    fn band_outside_nyquist_rejected() {
        let samples = tone(70.0, 200.0, 3.0);
        assert!(matches!(
            periodogram_peak(&samples, 200.0, 99.5, 1.0),
            Err(Error::BandOutOfRange { .. })
        ));
    }

    #[test]
    fn constant_window_rejected() {
        let samples = vec![3.25; 4000];
        assert!(matches!(
            periodogram_peak(&samples, 1000.0, 70.0, 1.0),
            Err(Error::EmptyWindow)
        ));
    }

    #[test]
    fn parseval_on_tapered_padded_transform() {
        let samples = tone(73.37, 1000.0, 2.0);
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let window = hann(n);
        let time_energy: f64 = samples
            .iter()
            .enumerate()
            .map(|(i, &v)| ((v - mean) * window[i]).powi(2))
            .sum();

        let spec = magnitude_spectrum(&samples, 1000.0).unwrap();
        let nfft = (spec.magnitudes.len() - 1) * 2;
        let mut freq_energy = spec.magnitudes[0].powi(2) + spec.magnitudes[nfft / 2].powi(2);
        for m in &spec.magnitudes[1..nfft / 2] {
            freq_energy += 2.0 * m * m;
        }
        freq_energy /= nfft as f64;
        let rel = (time_energy - freq_energy).abs() / time_energy;
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn idle_45_bands_read_near_equal_magnitudes() {
        let capture = CaptureProfile::from_idle(30.0, 100, 0.45).unwrap();
        let config = SynthesisConfig {
            enf: EnfWalkConfig {
                step_sigma_hz: 0.0,
                mean_reversion: 0.15,
            },
            ..Default::default()
        };
        let enf = synth_enf(22.0, &grid50(), &config, epoch()).unwrap();
        let series = synth_luminance(&enf, &capture, 600, &config).unwrap();
        let rate = series.sample_rate_hz();
        let p40 = periodogram_peak(&series.samples, rate, 40.0, 1.0).unwrap();
        let p70 = periodogram_peak(&series.samples, rate, 70.0, 1.0).unwrap();
        let rel = (p40.magnitude - p70.magnitude).abs() / p40.magnitude.max(p70.magnitude);
        assert!(rel < 0.15, "magnitudes differ by {rel}");
    }

    #[test]
    fn interpolate_identity_at_zero() {
        let capture = CaptureProfile::from_idle(30.0, 100, 0.45).unwrap();
        let config = SynthesisConfig::default();
        let enf = synth_enf(5.0, &grid50(), &config, epoch()).unwrap();
        let series = synth_luminance(&enf, &capture, 90, &config).unwrap();
        let out = interpolate_idle(&series, 0.0).unwrap();
        assert_eq!(out, series);
    }

    #[test]
    fn interpolate_fills_positionally_from_neighbours() {
        let capture = CaptureProfile::new(30.0, 2, 2).unwrap();
        let series =
            LuminanceSeries::new(capture, None, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let out = interpolate_idle(&series, 1.0 / 3.0).unwrap();
        assert_eq!(out.capture.rows_per_frame, 3);
        assert_eq!(
            out.samples,
            vec![1.0, 2.0, 4.0, 3.0, 4.0, 4.0, 5.0, 6.0, 4.0]
        );
    }

    #[test]
    fn interpolate_needs_three_frames() {
        let capture = CaptureProfile::new(30.0, 2, 2).unwrap();
        let series = LuminanceSeries::new(capture, None, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(
            interpolate_idle(&series, 0.25),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn window_count_formula() {
        let capture = CaptureProfile::new(30.0, 100, 100).unwrap();
        let config = SynthesisConfig::default();
        let enf = synth_enf(62.0, &grid50(), &config, epoch()).unwrap();
        let series = synth_luminance(&enf, &capture, 60 * 30, &config).unwrap();
        let trace = extract_enf(&series, &grid50(), 100.0, 20.0, 19.0).unwrap();
        assert_eq!(trace.values_hz.len(), 60 - 20 + 1);
    }

    #[test]
    fn constant_enf_extracts_flat_trace() {
        let capture = CaptureProfile::from_idle(30.0, 100, 0.45).unwrap();
        let config = SynthesisConfig {
            enf: EnfWalkConfig {
                step_sigma_hz: 0.0,
                mean_reversion: 0.15,
            },
            ..Default::default()
        };
        let enf = synth_enf(40.0, &grid50(), &config, epoch()).unwrap();
        let series = synth_luminance(&enf, &capture, 38 * 30, &config).unwrap();
        let trace = extract_enf(&series, &grid50(), 70.0, 20.0, 19.0).unwrap();
        for v in &trace.values_hz {
            assert!((v - 50.0).abs() <= 0.005, "got {v}");
        }
    }

    #[test]
    fn shifting_the_walk_shifts_the_trace_linearly() {
        let capture = CaptureProfile::from_idle(30.0, 100, 0.45).unwrap();
        let config = SynthesisConfig {
            seed: 11,
            ..Default::default()
        };
        let delta = 0.05;
        let enf_a = synth_enf(62.0, &grid50(), &config, epoch()).unwrap();
        let mut enf_b = enf_a.clone();
        for v in &mut enf_b.values_hz {
            *v += delta;
        }
        let sa = synth_luminance(&enf_a, &capture, 60 * 30, &config).unwrap();
        let sb = synth_luminance(&enf_b, &capture, 60 * 30, &config).unwrap();
        let ta = extract_enf(&sa, &grid50(), 70.0, 20.0, 19.0).unwrap();
        let tb = extract_enf(&sb, &grid50(), 70.0, 20.0, 19.0).unwrap();
        for (a, b) in ta.values_hz.iter().zip(&tb.values_hz) {
            assert!((b - a - delta).abs() <= 0.002, "shift {}", b - a);
        }
    }

    /// Smoothed view of the ground truth matching the extraction window, for
    /// correlation checks against window-aligned traces.
    fn smoothed_truth(enf: &EnfSeries, len: usize) -> Vec<f64> {
        windowed_trace_reference(&enf.values_hz, 20)[..len].to_vec()
    }

    #[test]
    fn noisy_walk_round_trip_beats_099_and_wrong_component_fails() {
        let capture = CaptureProfile::from_idle(30.0, 100, 0.45).unwrap();
        let config = SynthesisConfig {
            noise_snr_db: Some(-16.0),
            seed: 22,
            enf: EnfWalkConfig {
                step_sigma_hz: 0.01,
                mean_reversion: 0.15,
            },
            ..Default::default()
        };
        let enf = synth_enf(602.0, &grid50(), &config, epoch()).unwrap();
        let series = synth_luminance(&enf, &capture, 600 * 30, &config).unwrap();

        // Correct component through the correct idle assumption.
        let restored = interpolate_idle(&series, 0.45).unwrap();
        let trace = extract_enf(&restored, &grid50(), 70.0, 20.0, 19.0).unwrap();
        let truth = smoothed_truth(&enf, trace.values_hz.len());
        let rho = pearson(&trace.values_hz, &truth);
        assert!(rho >= 0.99, "correct-component correlation {rho}");

        // The heavily attenuated 100 Hz component drowns at this noise level.
        let bad = extract_enf(&series, &grid50(), 100.0, 20.0, 19.0).unwrap();
        let truth = smoothed_truth(&enf, bad.values_hz.len());
        let rho_bad = pearson(&bad.values_hz, &truth);
        assert!(rho_bad < 0.94, "wrong-component correlation {rho_bad}");
    }

    #[test]
    fn correct_idle_assumption_beats_no_assumption() {
        let capture = CaptureProfile::from_idle(30.0, 100, 0.45).unwrap();
        let config = SynthesisConfig {
            noise_snr_db: Some(-16.0),
            seed: 9,
            enf: EnfWalkConfig {
                step_sigma_hz: 0.01,
                mean_reversion: 0.15,
            },
            ..Default::default()
        };
        let enf = synth_enf(182.0, &grid50(), &config, epoch()).unwrap();
        let series = synth_luminance(&enf, &capture, 180 * 30, &config).unwrap();

        let with = {
            let restored = interpolate_idle(&series, 0.45).unwrap();
            let t = extract_enf(&restored, &grid50(), 100.0, 20.0, 19.0).unwrap();
            let truth = smoothed_truth(&enf, t.values_hz.len());
            pearson(&t.values_hz, &truth)
        };
        let without = {
            let t = extract_enf(&series, &grid50(), 100.0, 20.0, 19.0).unwrap();
            let truth = smoothed_truth(&enf, t.values_hz.len());
            pearson(&t.values_hz, &truth)
        };
        assert!(
            with > without,
            "interpolated {with} should beat raw {without}"
        );
    }

    #[test]
    fn too_short_series_rejected() {
        let capture = CaptureProfile::new(30.0, 100, 100).unwrap();
        let config = SynthesisConfig::default();
        let enf = synth_enf(12.0, &grid50(), &config, epoch()).unwrap();
        let series = synth_luminance(&enf, &capture, 10 * 30, &config).unwrap();
        assert!(matches!(
            extract_enf(&series, &grid50(), 100.0, 20.0, 19.0),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn windowed_reference_shape_and_mean() {
        let v: Vec<f64> = (0..30).map(|i| 50.0 + i as f64 * 0.001).collect();
        let smoothed = windowed_trace_reference(&v, 20);
        assert_eq!(smoothed.len(), v.len() - 20);
        // On a linear ramp every weighting reads the window centre.
        assert!((smoothed[0] - (50.0 + 10.0 * 0.001)).abs() < 1e-9);
        assert!(windowed_trace_reference(&v[..20], 20).is_empty());
    }
}
