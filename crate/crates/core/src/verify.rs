//! Time-of-recording verification.
//!
//! An extracted ENF trace is slid along a ground-truth logger trace with
//! normalized cross-correlation; candidate (component, idle-assumption)
//! pairs feed one of four decision metrics, and the chosen lag is compared
//! against the lag implied by the claimed recording time.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GridProfile;
use crate::spectral::{
    extract_enf_multi, interpolate_idle, windowed_trace_reference, DEFAULT_OVERLAP_S,
    DEFAULT_WINDOW_S,
};
use crate::synth::{EnfSeries, LuminanceSeries};

/// Correlation threshold a candidate must exceed to take part in a decision.
pub const DEFAULT_THRESHOLD: f64 = 0.94;

/// Lags within this tolerance count as the same alignment, and a chosen lag
/// within this tolerance of the expected lag confirms the claim.
pub const DEFAULT_LAG_TOLERANCE_S: f64 = 1.0;

/// Correlation sentinel recorded for candidates whose extraction failed.
pub const FAILED_CANDIDATE_CORR: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricId {
    Metric1,
    Metric2,
    Metric3,
    Metric4,
}

impl MetricId {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Self::Metric1),
            2 => Ok(Self::Metric2),
            3 => Ok(Self::Metric3),
            4 => Ok(Self::Metric4),
            _ => Err(Error::InvalidArgument(format!(
                "metric must be 1..=4, got {n}"
            ))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::Metric1 => 1,
            Self::Metric2 => 2,
            Self::Metric3 => 3,
            Self::Metric4 => 4,
        }
    }
}

/// One (component, idle-assumption) correlation result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateMatch {
    pub component_hz: f64,
    #[serde(rename = "idle_pct")]
    pub idle_assumption_pct: f64,
    #[serde(rename = "corr")]
    pub peak_corr: f64,
    pub lag_s: f64,
}

/// Candidates agreeing on a lag within the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagGroup {
    pub representative_lag_s: f64,
    pub member_count: usize,
    pub best_corr: f64,
    /// `sqrt(n_norm² + ρ²)` with the member count normalized by the largest
    /// group.
    pub d_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "TD")]
    TrueDecision,
    #[serde(rename = "FD")]
    FalseDecision,
    #[serde(rename = "ND")]
    NoDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(rename = "metric")]
    pub metric_id: u8,
    pub threshold: f64,
    pub expected_lag_s: f64,
    pub chosen_lag_s: Option<f64>,
    pub decision: Decision,
    pub candidates: Vec<CandidateMatch>,
}

/// Peak of the sliding normalized cross-correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NccPeak {
    pub peak_corr: f64,
    pub lag_s: f64,
}

fn ncc_core(query: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    if query.len() < 60 {
        return Err(Error::TooShort {
            needed: 60,
            actual: query.len(),
        });
    }
    if reference.len() < query.len() {
        return Err(Error::TooShort {
            needed: query.len(),
            actual: reference.len(),
        });
    }
    let q = query.len();
    let qmean = query.iter().sum::<f64>() / q as f64;
    let qdev: Vec<f64> = query.iter().map(|v| v - qmean).collect();
    let qvar: f64 = qdev.iter().map(|v| v * v).sum();
    if qvar <= 0.0 {
        return Err(Error::ZeroVariance("query has no variation".into()));
    }

    // Working on globally centered values keeps the per-window variance free
    // of cancellation (raw ENF values sit near 50 with ~1e-2 spread).
    let gmean = reference.iter().sum::<f64>() / reference.len() as f64;
    let rc: Vec<f64> = reference.iter().map(|v| v - gmean).collect();
    let total_var: f64 = rc.iter().map(|v| v * v).sum();
    if total_var <= 0.0 {
        return Err(Error::ZeroVariance("reference has no variation".into()));
    }
    let mut s1 = vec![0.0f64; rc.len() + 1];
    for (i, &v) in rc.iter().enumerate() {
        s1[i + 1] = s1[i] + v;
    }

    let lags = rc.len() - q + 1;
    let mut corr = Vec::with_capacity(lags);
    for lag in 0..lags {
        let rmean = (s1[lag + q] - s1[lag]) / q as f64;
        let (mut cross, mut rvar) = (0.0f64, 0.0f64);
        for (i, qd) in qdev.iter().enumerate() {
            let rd = rc[lag + i] - rmean;
            cross += qd * rd;
            rvar += rd * rd;
        }
        if rvar <= 0.0 {
            corr.push(0.0);
            continue;
        }
        corr.push(cross / (qvar.sqrt() * rvar.sqrt()));
    }
    Ok(corr)
}

/// Full correlation trace over every full-overlap lag, one value per second.
pub fn ncc_trace(query: &EnfSeries, reference: &EnfSeries) -> Result<Vec<f64>> {
    ncc_core(&query.values_hz, &reference.values_hz)
}

/// Maximum of the sliding zero-normalized correlation and its lag.
pub fn ncc_align(query: &EnfSeries, reference: &EnfSeries) -> Result<NccPeak> {
    let trace = ncc_core(&query.values_hz, &reference.values_hz)?;
    let (lag, corr) = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    Ok(NccPeak {
        peak_corr: *corr,
        lag_s: lag as f64,
    })
}

/// Candidate component set for a grid and frame rate: every shifted image of
/// the illumination frequency inside (0, 2·f0), plus the second illumination
/// harmonic.
pub fn default_component_set(grid: &GridProfile, frame_rate_fps: f64) -> Vec<f64> {
    let f0 = grid.illumination_freq_hz;
    let mut set = Vec::new();
    let mut m = 0.0;
    loop {
        let down = f0 - m * frame_rate_fps;
        let up = f0 + m * frame_rate_fps;
        let mut grew = false;
        if down > 0.0 {
            set.push(down);
            grew = true;
        }
        if up < 2.0 * f0 && m > 0.0 {
            set.push(up);
            grew = true;
        }
        if !grew {
            break;
        }
        m += 1.0;
    }
    set.push(2.0 * f0);
    set.sort_by(|a, b| a.partial_cmp(b).unwrap());
    set.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    set
}

/// Sweep configuration for [`evaluate_metrics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub metric: MetricId,
    pub components_hz: Vec<f64>,
    pub idle_assumptions_pct: Vec<f64>,
    pub window_s: f64,
    pub overlap_s: f64,
}

impl MetricConfig {
    /// Defaults per metric: the baseline correlates only the illumination
    /// frequency with no idle assumption; the component-sweep metric adds
    /// the shifted set; the interpolating metrics cross the set with idle
    /// assumptions on the 5% grid.
    pub fn for_metric(metric: MetricId, grid: &GridProfile, frame_rate_fps: f64) -> Self {
        let full_set = default_component_set(grid, frame_rate_fps);
        let idle_grid: Vec<f64> = (0..20).map(|i| i as f64 * 5.0).collect();
        let (components_hz, idle_assumptions_pct) = match metric {
            MetricId::Metric1 => (vec![grid.illumination_freq_hz], vec![0.0]),
            MetricId::Metric2 => (full_set, vec![0.0]),
            MetricId::Metric3 | MetricId::Metric4 => (full_set, idle_grid),
        };
        Self {
            metric,
            components_hz,
            idle_assumptions_pct,
            window_s: DEFAULT_WINDOW_S,
            overlap_s: DEFAULT_OVERLAP_S,
        }
    }
}

/// Correlate every (component, idle assumption) candidate of a metric
/// against the reference.
///
/// The reference is averaged with the extraction window before correlating,
/// so both series carry the same temporal smoothing and the peak lag reads
/// directly as the offset of the video start inside the reference. Failed
/// extractions keep their slot with the −1 sentinel so the sweep stays
/// rectangular.
pub fn evaluate_metrics(
    series: &LuminanceSeries,
    reference: &EnfSeries,
    grid: &GridProfile,
    config: &MetricConfig,
) -> Result<Vec<CandidateMatch>> {
    let window = config.window_s.round() as usize;
    let smoothed = windowed_trace_reference(&reference.values_hz, window);
    if smoothed.is_empty() {
        return Err(Error::TooShort {
            needed: window,
            actual: reference.values_hz.len(),
        });
    }

    let per_idle: Vec<Result<Vec<CandidateMatch>>> =
        crate::par::map_slice(&config.idle_assumptions_pct, |&idle_pct| {
            let prepared = interpolate_idle(series, idle_pct / 100.0)?;
            let traces = extract_enf_multi(
                &prepared,
                grid,
                &config.components_hz,
                config.window_s,
                config.overlap_s,
            )?;
            Ok(config
                .components_hz
                .iter()
                .zip(traces)
                .map(|(&component_hz, trace)| {
                    let aligned = trace.and_then(|t| ncc_core(&t.values_hz, &smoothed));
                    match aligned {
                        Ok(corr) => {
                            let (lag, rho) = corr
                                .iter()
                                .enumerate()
                                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                                .unwrap();
                            CandidateMatch {
                                component_hz,
                                idle_assumption_pct: idle_pct,
                                peak_corr: *rho,
                                lag_s: lag as f64,
                            }
                        }
                        Err(_) => CandidateMatch {
                            component_hz,
                            idle_assumption_pct: idle_pct,
                            peak_corr: FAILED_CANDIDATE_CORR,
                            lag_s: 0.0,
                        },
                    }
                })
                .collect())
        });

    let mut out = Vec::new();
    for chunk in per_idle {
        out.extend(chunk?);
    }
    out.sort_by(|a, b| {
        a.component_hz.partial_cmp(&b.component_hz).unwrap().then(
            a.idle_assumption_pct
                .partial_cmp(&b.idle_assumption_pct)
                .unwrap(),
        )
    });
    Ok(out)
}

/// Outcome of the decision stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub chosen_lag_s: Option<f64>,
    pub groups: Vec<LagGroup>,
}

/// Pick the final lag from the candidate sweep.
///
/// Metrics 1–3 take the lag of the highest correlation above the threshold.
/// Metric 4 groups passing lags within the tolerance and keeps the group
/// maximizing `sqrt(n_norm² + ρ²)`, the member count normalized by the
/// largest group.
pub fn decide(
    candidates: &[CandidateMatch],
    metric: MetricId,
    threshold: f64,
    lag_tolerance_s: f64,
) -> DecisionOutcome {
    let mut passing: Vec<&CandidateMatch> = candidates
        .iter()
        .filter(|c| c.peak_corr > threshold)
        .collect();
    if passing.is_empty() {
        return DecisionOutcome {
            chosen_lag_s: None,
            groups: Vec::new(),
        };
    }

    if metric != MetricId::Metric4 {
        let best = passing
            .iter()
            .min_by(|a, b| {
                b.peak_corr
                    .partial_cmp(&a.peak_corr)
                    .unwrap()
                    .then(a.lag_s.partial_cmp(&b.lag_s).unwrap())
                    .then(a.component_hz.partial_cmp(&b.component_hz).unwrap())
                    .then(
                        a.idle_assumption_pct
                            .partial_cmp(&b.idle_assumption_pct)
                            .unwrap(),
                    )
            })
            .unwrap();
        return DecisionOutcome {
            chosen_lag_s: Some(best.lag_s),
            groups: Vec::new(),
        };
    }

    passing.sort_by(|a, b| {
        a.lag_s
            .partial_cmp(&b.lag_s)
            .unwrap()
            .then(b.peak_corr.partial_cmp(&a.peak_corr).unwrap())
    });
    let mut groups: Vec<Vec<&CandidateMatch>> = Vec::new();
    for c in passing {
        match groups.last_mut() {
            Some(g) if (c.lag_s - g[0].lag_s).abs() <= lag_tolerance_s => g.push(c),
            _ => groups.push(vec![c]),
        }
    }
    let max_n = groups.iter().map(|g| g.len()).max().unwrap() as f64;
    let scored: Vec<LagGroup> = groups
        .iter()
        .map(|g| {
            let best = g
                .iter()
                .min_by(|a, b| {
                    b.peak_corr
                        .partial_cmp(&a.peak_corr)
                        .unwrap()
                        .then(a.lag_s.partial_cmp(&b.lag_s).unwrap())
                })
                .unwrap();
            let n_norm = g.len() as f64 / max_n;
            LagGroup {
                representative_lag_s: best.lag_s,
                member_count: g.len(),
                best_corr: best.peak_corr,
                d_g: (n_norm * n_norm + best.peak_corr * best.peak_corr).sqrt(),
            }
        })
        .collect();
    let chosen = scored
        .iter()
        .min_by(|a, b| {
            b.d_g
                .partial_cmp(&a.d_g)
                .unwrap()
                .then(b.best_corr.partial_cmp(&a.best_corr).unwrap())
                .then(
                    a.representative_lag_s
                        .partial_cmp(&b.representative_lag_s)
                        .unwrap(),
                )
        })
        .map(|g| g.representative_lag_s);
    DecisionOutcome {
        chosen_lag_s: chosen,
        groups: scored,
    }
}

/// Check a claimed recording time against a ground-truth trace.
pub fn verify_timestamp(
    series: &LuminanceSeries,
    reference: &EnfSeries,
    claimed_start: DateTime<Utc>,
    metric: MetricId,
    threshold: f64,
    lag_tolerance_s: f64,
) -> Result<VerificationReport> {
    let expected = (claimed_start - reference.start_time).num_milliseconds() as f64 / 1000.0;
    let ref_dur = reference.duration_s();
    // The smoothed reference needs one knot past the last full window, so
    // the recording must end at least a second before the log does.
    if expected < 0.0 || expected + series.duration_s() + 1.0 > ref_dur {
        let fmt = "%Y-%m-%dT%H:%M:%SZ";
        return Err(Error::OutsideReference {
            claimed: claimed_start.format(fmt).to_string(),
            start: reference.start_time.format(fmt).to_string(),
            end: (reference.start_time + chrono::Duration::milliseconds((ref_dur * 1000.0) as i64))
                .format(fmt)
                .to_string(),
        });
    }

    let grid = grid_of(series, reference);
    let config = MetricConfig::for_metric(metric, &grid, series.capture.frame_rate_fps);
    let candidates = evaluate_metrics(series, reference, &grid, &config)?;
    Ok(report_from_candidates(
        candidates,
        metric,
        threshold,
        lag_tolerance_s,
        expected,
    ))
}

/// Assemble a report from an already-computed candidate sweep.
pub fn report_from_candidates(
    candidates: Vec<CandidateMatch>,
    metric: MetricId,
    threshold: f64,
    lag_tolerance_s: f64,
    expected_lag_s: f64,
) -> VerificationReport {
    let outcome = decide(&candidates, metric, threshold, lag_tolerance_s);
    let decision = match outcome.chosen_lag_s {
        None => Decision::NoDecision,
        Some(lag) if (lag - expected_lag_s).abs() <= lag_tolerance_s => Decision::TrueDecision,
        Some(_) => Decision::FalseDecision,
    };
    VerificationReport {
        metric_id: metric.number(),
        threshold,
        expected_lag_s,
        chosen_lag_s: outcome.chosen_lag_s,
        decision,
        candidates,
    }
}

fn grid_of(series: &LuminanceSeries, reference: &EnfSeries) -> GridProfile {
    series.grid_hint.unwrap_or_else(|| {
        let mean = reference.values_hz.iter().sum::<f64>() / reference.values_hz.len() as f64;
        GridProfile::new(mean.round()).unwrap_or_else(|_| GridProfile::new(50.0).unwrap())
    })
}
