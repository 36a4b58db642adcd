//! Text file formats: RLUM row-luminance carriers, ENF log CSVs and
//! row-means matrices. Everything is line-oriented and inspectable; floats
//! are written with nine significant digits, which bounds the round-trip
//! error well below every analysis tolerance.

use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::idle::RowMeansMatrix;
use crate::model::{format_sig, CaptureProfile, GridProfile};
use crate::synth::{EnfSeries, LuminanceSeries};

const TIMESTAMP_FMT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// RLUM header, one JSON object on the first line of the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlumHeader {
    pub version: u32,
    pub frame_rate_fps: f64,
    pub rows_per_frame: usize,
    pub frame_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_idle_pct: Option<f64>,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, rule: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        rule: rule.into(),
    }
}

/// Serialize a luminance series to the RLUM text format: a one-line JSON
/// header followed by one luminance value per line in frame-major row order.
pub fn write_rlum(path: &Path, series: &LuminanceSeries, true_idle_pct: Option<f64>) -> Result<()> {
    let header = RlumHeader {
        version: 1,
        frame_rate_fps: series.capture.frame_rate_fps,
        rows_per_frame: series.capture.rows_per_frame,
        frame_count: series.frame_count,
        grid_hz: series.grid_hint.map(|g| g.nominal_enf_hz),
        true_idle_pct,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for v in &series.samples {
        out.push_str(&format_sig(*v, 9));
        out.push('\n');
    }
    write_string(path, &out)
}

/// Load an RLUM file, enforcing the header invariants and the line count.
pub fn read_rlum(path: &Path) -> Result<(LuminanceSeries, RlumHeader)> {
    let contents = read_to_string(path)?;
    let mut lines = contents.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing JSON header line"))?;
    let header: RlumHeader = serde_json::from_str(header_line)
        .map_err(|e| parse_err(path, 1, format!("malformed header: {e}")))?;
    if header.version != 1 {
        return Err(parse_err(
            path,
            1,
            format!("unsupported version {}", header.version),
        ));
    }
    if header.rows_per_frame == 0 || header.frame_count == 0 {
        return Err(parse_err(
            path,
            1,
            "rows_per_frame and frame_count must be positive",
        ));
    }
    if let Some(r) = header.true_idle_pct {
        if !(0.0..100.0).contains(&r) {
            return Err(parse_err(
                path,
                1,
                format!("true_idle_pct {r} out of [0, 100)"),
            ));
        }
    }

    let expected = header.frame_count * header.rows_per_frame;
    let mut samples = Vec::with_capacity(expected);
    for (i, line) in lines.enumerate() {
        let v: f64 = line.trim().parse().map_err(|_| {
            parse_err(
                path,
                i + 2,
                format!("not a decimal luminance value: {line:?}"),
            )
        })?;
        if !v.is_finite() {
            return Err(parse_err(path, i + 2, "luminance value must be finite"));
        }
        samples.push(v);
    }
    if samples.len() != expected {
        return Err(parse_err(
            path,
            samples.len() + 1,
            format!(
                "body line count {} does not match frame_count x rows_per_frame = {}",
                samples.len(),
                expected
            ),
        ));
    }

    // Reconstruct the capacity from the recorded idle proportion when
    // available; otherwise treat the series as gap-free.
    let capacity = match header.true_idle_pct {
        Some(r) => ((header.rows_per_frame as f64) / (1.0 - r / 100.0)).round() as usize,
        None => header.rows_per_frame,
    };
    let capture = CaptureProfile::new(header.frame_rate_fps, capacity, header.rows_per_frame)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    let grid_hint = match header.grid_hz {
        Some(hz) => Some(GridProfile::new(hz).map_err(|e| parse_err(path, 1, e.to_string()))?),
        None => None,
    };
    let series = LuminanceSeries::new(capture, grid_hint, header.frame_count, samples)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    Ok((series, header))
}

/// Write an ENF log: `timestamp_utc,frequency_hz` at a strict 1 s cadence.
pub fn write_enf_log(path: &Path, series: &EnfSeries) -> Result<()> {
    let mut out = String::from("timestamp_utc,frequency_hz\n");
    for (i, v) in series.values_hz.iter().enumerate() {
        let t = series.start_time + chrono::Duration::seconds(i as i64);
        out.push_str(&format!(
            "{},{}\n",
            t.format(TIMESTAMP_FMT),
            format_sig(*v, 9)
        ));
    }
    write_string(path, &out)
}

/// Load an ENF log, enforcing the header, cadence, monotonicity and the
/// nominal ± 1 Hz frequency bound.
pub fn read_enf_log(path: &Path) -> Result<EnfSeries> {
    let contents = read_to_string(path)?;
    let mut lines = contents.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header line"))?;
    if header.trim() != "timestamp_utc,frequency_hz" {
        return Err(parse_err(
            path,
            1,
            format!("expected header `timestamp_utc,frequency_hz`, got {header:?}"),
        ));
    }

    let mut start_time: Option<DateTime<Utc>> = None;
    let mut prev: Option<DateTime<Utc>> = None;
    let mut values = Vec::new();
    let mut nominal: Option<f64> = None;
    for (i, line) in lines {
        let line_no = i + 1;
        let (ts_str, freq_str) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, line_no, "expected `timestamp,frequency`"))?;
        let ts = DateTime::parse_from_rfc3339(ts_str.trim())
            .map_err(|e| parse_err(path, line_no, format!("bad timestamp {ts_str:?}: {e}")))?
            .with_timezone(&Utc);
        let freq: f64 = freq_str
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad frequency {freq_str:?}")))?;
        if let Some(p) = prev {
            let gap = ts - p;
            if gap != chrono::Duration::seconds(1) {
                return Err(parse_err(
                    path,
                    line_no,
                    format!(
                        "cadence violation: {} s since previous row",
                        gap.num_seconds()
                    ),
                ));
            }
        }
        let nom = *nominal.get_or_insert_with(|| {
            if (freq - 60.0).abs() < 5.0 {
                60.0
            } else {
                50.0
            }
        });
        if (freq - nom).abs() > 1.0 {
            return Err(parse_err(
                path,
                line_no,
                format!("frequency {freq} outside nominal {nom} +/- 1 Hz"),
            ));
        }
        start_time.get_or_insert(ts);
        prev = Some(ts);
        values.push(freq);
    }
    if values.is_empty() {
        return Err(parse_err(path, 2, "log has no rows"));
    }
    Ok(EnfSeries {
        start_time: start_time.unwrap(),
        sample_period_s: 1.0,
        values_hz: values,
    })
}

/// Write a row-means matrix: header `frame_0..frame_{F-1}`, then one CSV row
/// per sensor row.
pub fn write_row_means(path: &Path, rows: &RowMeansMatrix) -> Result<()> {
    let frames = rows.frame_count();
    let mut out = (0..frames)
        .map(|f| format!("frame_{f}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in &rows.values {
        let line = row
            .iter()
            .map(|v| format_sig(*v, 9))
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    write_string(path, &out)
}

/// Load a row-means matrix; the frame rate is not stored in the file and
/// must be supplied by the caller.
pub fn read_row_means(path: &Path, frame_rate_fps: f64) -> Result<RowMeansMatrix> {
    let contents = read_to_string(path)?;
    let mut lines = contents.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header line"))?;
    let frames = header.split(',').count();
    for (i, col) in header.split(',').enumerate() {
        if col.trim() != format!("frame_{i}") {
            return Err(parse_err(
                path,
                1,
                format!("expected column `frame_{i}`, got {col:?}"),
            ));
        }
    }

    let mut values: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(path, i + 2, "row contains a non-numeric value"))?;
        if row.len() != frames {
            return Err(parse_err(
                path,
                i + 2,
                format!("expected {frames} columns, got {}", row.len()),
            ));
        }
        values.push(row);
    }
    if values.is_empty() {
        return Err(parse_err(path, 2, "matrix has no rows"));
    }
    let capture = CaptureProfile::new(frame_rate_fps, values.len(), values.len())
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    RowMeansMatrix::new(capture, values)
}
