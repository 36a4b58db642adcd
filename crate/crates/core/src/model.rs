//! Analytical model of rolling-shutter ENF capture.
//!
//! A rolling shutter reads L of the M rows it could sample per frame period
//! and discards the rest during the idle interval. Concatenating the kept row
//! samples compacts the timeline, which shifts the illumination component at
//! `f0` (twice the mains frequency) to `f0 ± m·Fr` and attenuates it by a
//! factor that depends only on the idle proportion. This module enumerates
//! the shifted components, evaluates their attenuation in closed form, and
//! tabulates the two strongest components over a grid of idle periods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mains-network parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    /// Nominal ENF in Hz (50 or 60).
    pub nominal_enf_hz: f64,
    /// Dominant flicker frequency of mains-powered light, always twice the ENF.
    pub illumination_freq_hz: f64,
}

impl GridProfile {
    pub fn new(nominal_enf_hz: f64) -> Result<Self> {
        if !nominal_enf_hz.is_finite() || nominal_enf_hz <= 0.0 {
            return Err(Error::InvalidProfile(format!(
                "nominal ENF must be positive, got {nominal_enf_hz}"
            )));
        }
        Ok(Self {
            nominal_enf_hz,
            illumination_freq_hz: 2.0 * nominal_enf_hz,
        })
    }
}

/// Camera sampling parameters.
///
/// `row_capacity` (M) is the number of rows the sensor could read in one
/// frame period with zero idle; `rows_per_frame` (L) is the number actually
/// kept. The compacted row series runs at `frame_rate × L` samples/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureProfile {
    pub frame_rate_fps: f64,
    pub rows_per_frame: usize,
    pub row_capacity: usize,
}

impl CaptureProfile {
    pub fn new(frame_rate_fps: f64, row_capacity: usize, rows_per_frame: usize) -> Result<Self> {
        if !frame_rate_fps.is_finite() || frame_rate_fps <= 0.0 {
            return Err(Error::InvalidProfile(format!(
                "frame rate must be positive, got {frame_rate_fps}"
            )));
        }
        if rows_per_frame == 0 || rows_per_frame > row_capacity {
            return Err(Error::InvalidProfile(format!(
                "need 1 <= L <= M, got L={rows_per_frame}, M={row_capacity}"
            )));
        }
        Ok(Self {
            frame_rate_fps,
            rows_per_frame,
            row_capacity,
        })
    }

    /// Build a profile from a capacity and an idle fraction, keeping
    /// `L = round(M·(1−idle))` rows.
    pub fn from_idle(frame_rate_fps: f64, row_capacity: usize, idle_ratio: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&idle_ratio) {
            return Err(Error::InvalidProfile(format!(
                "idle ratio must lie in [0, 1), got {idle_ratio}"
            )));
        }
        let rows = ((row_capacity as f64) * (1.0 - idle_ratio)).round() as usize;
        Self::new(frame_rate_fps, row_capacity, rows.max(1))
    }

    /// Fraction of the frame period spent idle, `(M−L)/M`.
    pub fn idle_ratio(&self) -> f64 {
        (self.row_capacity - self.rows_per_frame) as f64 / self.row_capacity as f64
    }

    /// Sample rate of the uncut row stream, `Fr·M`.
    pub fn full_rate_hz(&self) -> f64 {
        self.frame_rate_fps * self.row_capacity as f64
    }

    /// Sample rate of the compacted (kept-rows) stream, `Fr·L`.
    pub fn effective_rate_hz(&self) -> f64 {
        self.frame_rate_fps * self.rows_per_frame as f64
    }

    /// Nyquist frequency of the compacted stream.
    pub fn nyquist_hz(&self) -> f64 {
        self.effective_rate_hz() / 2.0
    }
}

/// Which branch of the shifted-frequency relation produced a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    /// `f_y = f0 + m·Fr`
    Case1,
    /// `f_y = f0 − m·Fr`
    Case2,
}

/// One predicted shifted ENF component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentPrediction {
    pub freq_hz: f64,
    pub m_index: usize,
    pub case_tag: CaseTag,
    /// Index into the M-term image sum that carries this component.
    pub effective_sum_index: usize,
    /// |F| evaluated at this component; zero until ranked.
    pub attenuation_magnitude: f64,
    /// 1-based rank by attenuation magnitude; zero until ranked.
    pub rank: usize,
}

/// Enumerate the shifted components admitted by a capture, unranked and with
/// attenuation left unset.
///
/// Case 1 takes `m < L/2 − f0/Fr`, Case 2 takes `m < f0/Fr`; every frequency
/// must satisfy `0 < f_y < L·Fr/2`. Components reachable from both cases
/// (m = 0 gives `f0` twice) are deduplicated.
pub fn candidate_components(
    grid: &GridProfile,
    capture: &CaptureProfile,
) -> Result<Vec<ComponentPrediction>> {
    let f0 = grid.illumination_freq_hz;
    let fr = capture.frame_rate_fps;
    let l = capture.rows_per_frame as f64;
    let nyquist = capture.nyquist_hz();
    let m_cap = capture.row_capacity;

    let mut out: Vec<ComponentPrediction> = Vec::new();
    let mut push = |freq_hz: f64, m: usize, case: CaseTag| {
        if out.iter().any(|c| (c.freq_hz - freq_hz).abs() < 1e-9) {
            return;
        }
        let effective_sum_index = match case {
            CaseTag::Case1 => m % m_cap,
            CaseTag::Case2 => (m_cap - m % m_cap) % m_cap,
        };
        out.push(ComponentPrediction {
            freq_hz,
            m_index: m,
            case_tag: case,
            effective_sum_index,
            attenuation_magnitude: 0.0,
            rank: 0,
        });
    };

    let mut m = 0usize;
    while (m as f64) < l / 2.0 - f0 / fr {
        let fy = f0 + m as f64 * fr;
        if fy > 0.0 && fy < nyquist {
            push(fy, m, CaseTag::Case1);
        }
        m += 1;
    }
    let mut m = 0usize;
    while (m as f64) < f0 / fr {
        let fy = f0 - m as f64 * fr;
        if fy > 0.0 && fy < nyquist {
            push(fy, m, CaseTag::Case2);
        }
        m += 1;
    }

    if out.is_empty() {
        return Err(Error::DegenerateCapture {
            rows: capture.rows_per_frame,
            frame_rate: fr,
            nyquist_hz: nyquist,
        });
    }
    out.sort_by(|a, b| a.freq_hz.partial_cmp(&b.freq_hz).unwrap());
    Ok(out)
}

/// Attenuation magnitude |F| of one component.
///
/// With `θ = (ω_y·(M−L) + 2π·m_eff)/M` and `ω_y = 2π·f_y/(Fr·L)`, the L-term
/// geometric sum collapses to `|sin(Lθ/2)/sin(θ/2)|/M`. θ is reduced modulo
/// 2π before evaluation, which leaves the magnitude unchanged while keeping
/// the sin ratio well conditioned near the nulls; the θ→0 limit is L/M.
pub fn attenuation_factor(capture: &CaptureProfile, component: &ComponentPrediction) -> f64 {
    let m = capture.row_capacity as f64;
    let l = capture.rows_per_frame as f64;
    let fr = capture.frame_rate_fps;
    // θ/(2π), an O(1) quantity, reduced to [-1/2, 1/2] before scaling by 2π.
    let turns = (component.freq_hz * (m - l) / (fr * l) + component.effective_sum_index as f64) / m;
    let reduced = turns - turns.round();
    if reduced == 0.0 {
        return l / m;
    }
    let half_theta = std::f64::consts::PI * reduced;
    ((l * half_theta).sin() / half_theta.sin()).abs() / m
}

/// All candidates with attenuation filled in, sorted strongest-first.
/// Equal magnitudes are ordered by ascending frequency.
pub fn strongest_components(
    grid: &GridProfile,
    capture: &CaptureProfile,
    k: usize,
) -> Result<Vec<ComponentPrediction>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut all = candidate_components(grid, capture)?;
    for c in &mut all {
        c.attenuation_magnitude = attenuation_factor(capture, c);
    }
    all.sort_by(|a, b| {
        b.attenuation_magnitude
            .partial_cmp(&a.attenuation_magnitude)
            .unwrap()
            .then(a.freq_hz.partial_cmp(&b.freq_hz).unwrap())
    });
    all.truncate(k);
    for (i, c) in all.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    Ok(all)
}

/// Second magnitudes below this report an effectively infinite power ratio.
pub const SENTINEL_MAGNITUDE: f64 = 1e-9;

/// Relative tolerance under which two component magnitudes count as tied.
const TIE_EPS: f64 = 1e-9;

/// One idle-grid cell of a [`ComponentTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub idle_percent: f64,
    /// Strongest component(s); more than one entry means an exact tie.
    pub strongest: Vec<ComponentPrediction>,
    /// Second-strongest component(s); empty when everything else is nulled.
    pub second: Vec<ComponentPrediction>,
    /// Magnitude ratio strongest/second; `f64::INFINITY` when the second
    /// magnitude falls below [`SENTINEL_MAGNITUDE`].
    pub power_ratio: f64,
}

/// Two strongest shifted components and their power ratio per idle period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTable {
    pub frame_rate_fps: f64,
    pub grid: GridProfile,
    pub rows: Vec<SweepRow>,
}

/// Sweep the idle grid and tabulate the two strongest components per cell.
///
/// Each idle fraction r is realised with `M = row_capacity_resolution` and
/// `L = round(M·(1−r))`; the row reports the realised idle percentage.
pub fn idle_sweep_table(
    grid: &GridProfile,
    frame_rate_fps: f64,
    idle_grid: &[f64],
    row_capacity_resolution: usize,
) -> Result<ComponentTable> {
    if idle_grid.is_empty() {
        return Err(Error::InvalidArgument("idle grid is empty".into()));
    }
    if row_capacity_resolution < 100 {
        return Err(Error::InvalidArgument(format!(
            "row capacity resolution must be at least 100, got {row_capacity_resolution}"
        )));
    }
    for w in idle_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(
                "idle grid must be strictly increasing".into(),
            ));
        }
    }
    if idle_grid[0] < 0.0 || *idle_grid.last().unwrap() > 0.95 + 1e-9 {
        return Err(Error::InvalidArgument(
            "idle grid must lie within [0, 0.95]".into(),
        ));
    }

    let grid_copy = *grid;
    let rows = crate::par::map_slice(idle_grid, move |&r| -> Result<SweepRow> {
        let capture = CaptureProfile::from_idle(frame_rate_fps, row_capacity_resolution, r)?;
        let ranked = strongest_components(&grid_copy, &capture, usize::MAX)?;
        Ok(sweep_row_from_ranked(&capture, ranked))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ComponentTable {
        frame_rate_fps,
        grid: *grid,
        rows,
    })
}

fn sweep_row_from_ranked(capture: &CaptureProfile, ranked: Vec<ComponentPrediction>) -> SweepRow {
    let top = ranked[0].attenuation_magnitude;
    let tied: Vec<ComponentPrediction> = ranked
        .iter()
        .filter(|c| (top - c.attenuation_magnitude).abs() <= TIE_EPS * top.max(1e-300))
        .cloned()
        .collect();

    let (second, ratio) = if tied.len() >= 2 {
        // An exact tie puts the same pair in both slots with ratio 1.
        (tied.clone(), 1.0)
    } else {
        let rest: Vec<&ComponentPrediction> = ranked
            .iter()
            .filter(|c| (top - c.attenuation_magnitude).abs() > TIE_EPS * top.max(1e-300))
            .collect();
        match rest.first() {
            Some(best2) if best2.attenuation_magnitude >= SENTINEL_MAGNITUDE => {
                let m2 = best2.attenuation_magnitude;
                let tied2: Vec<ComponentPrediction> = rest
                    .iter()
                    .filter(|c| (m2 - c.attenuation_magnitude).abs() <= TIE_EPS * m2)
                    .map(|c| (*c).clone())
                    .collect();
                (tied2, top / m2)
            }
            _ => (Vec::new(), f64::INFINITY),
        }
    };

    SweepRow {
        idle_percent: capture.idle_ratio() * 100.0,
        strongest: tied,
        second,
        power_ratio: ratio,
    }
}

impl ComponentTable {
    /// CSV form with columns `idle_percent,h1_hz,h2_hz,ratio`. Tied
    /// frequencies within a cell are joined with `;` in ascending order; an
    /// infinite ratio prints as `inf` and an absent second column is empty.
    pub fn to_csv(&self) -> String {
        self.render_csv(false)
    }

    /// Like [`to_csv`](Self::to_csv) with trailing `h1_mag,h2_mag`
    /// attenuation columns, enough to plot both the frequency staircase and
    /// the power falloff against the idle period.
    pub fn to_csv_with_magnitudes(&self) -> String {
        self.render_csv(true)
    }

    fn render_csv(&self, magnitudes: bool) -> String {
        let mut out = String::from("idle_percent,h1_hz,h2_hz,ratio");
        if magnitudes {
            out.push_str(",h1_mag,h2_mag");
        }
        out.push('\n');
        for row in &self.rows {
            let h1 = join_freqs(&row.strongest);
            let h2 = join_freqs(&row.second);
            let ratio = if row.power_ratio.is_infinite() {
                "inf".to_string()
            } else {
                format_sig(row.power_ratio, 9)
            };
            out.push_str(&format!(
                "{},{},{},{}",
                format_sig(row.idle_percent, 9),
                h1,
                h2,
                ratio
            ));
            if magnitudes {
                let mag = |set: &[ComponentPrediction]| match set.first() {
                    Some(c) => format_sig(c.attenuation_magnitude, 9),
                    None => String::new(),
                };
                out.push_str(&format!(",{},{}", mag(&row.strongest), mag(&row.second)));
            }
            out.push('\n');
        }
        out
    }
}

fn join_freqs(components: &[ComponentPrediction]) -> String {
    let mut freqs: Vec<f64> = components.iter().map(|c| c.freq_hz).collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    freqs
        .iter()
        .map(|f| format_sig(*f, 9))
        .collect::<Vec<_>>()
        .join(";")
}

/// Format to at most `digits` significant digits, trimming trailing zeros.
pub(crate) fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let mag = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - mag).clamp(0, 17) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid50() -> GridProfile {
        GridProfile::new(50.0).unwrap()
    }

    /// Direct L-term complex summation; the independent check for the
    /// closed-form attenuation.
    fn attenuation_direct(capture: &CaptureProfile, component: &ComponentPrediction) -> f64 {
        let m = capture.row_capacity as f64;
        let l = capture.rows_per_frame;
        let theta = 2.0
            * std::f64::consts::PI
            * (component.freq_hz * (m - l as f64) / (capture.frame_rate_fps * l as f64)
                + component.effective_sum_index as f64)
            / m;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for k in 0..l {
            let a = theta * k as f64;
            re += a.cos();
            im -= a.sin();
        }
        (re * re + im * im).sqrt() / m
    }

    fn find(components: &[ComponentPrediction], freq: f64) -> &ComponentPrediction {
        components
            .iter()
            .find(|c| (c.freq_hz - freq).abs() < 1e-6)
            .unwrap()
    }

    #[test]
    fn candidate_set_30fps_eu() {
        let capture = CaptureProfile::new(30.0, 100, 55).unwrap();
        let freqs: Vec<f64> = candidate_components(&grid50(), &capture)
            .unwrap()
            .iter()
            .map(|c| c.freq_hz)
            .collect();
        for expect in [10.0, 40.0, 70.0, 100.0, 130.0, 160.0, 190.0] {
            assert!(freqs.contains(&expect), "missing {expect} in {freqs:?}");
        }
        // 100 reachable from both cases appears once.
        assert_eq!(freqs.iter().filter(|f| **f == 100.0).count(), 1);
        let nyq = capture.nyquist_hz();
        assert!(freqs.iter().all(|f| *f > 0.0 && *f < nyq));
    }

    #[test]
    fn candidate_set_25fps_eu() {
        let capture = CaptureProfile::new(25.0, 100, 80).unwrap();
        let freqs: Vec<f64> = candidate_components(&grid50(), &capture)
            .unwrap()
            .iter()
            .map(|c| c.freq_hz)
            .collect();
        for expect in [25.0, 50.0, 75.0, 100.0] {
            assert!(freqs.contains(&expect), "missing {expect} in {freqs:?}");
        }
    }

    #[test]
    fn degenerate_capture_rejected() {
        // L=1 at 25 fps puts Nyquist at 12.5 Hz, below the lowest image (25 Hz).
        let capture = CaptureProfile::new(25.0, 100, 1).unwrap();
        assert!(matches!(
            candidate_components(&grid50(), &capture),
            Err(Error::DegenerateCapture { .. })
        ));
    }

    #[test]
    fn zero_idle_keeps_only_the_illumination_component() {
        let capture = CaptureProfile::new(30.0, 100, 100).unwrap();
        let mut ranked = strongest_components(&grid50(), &capture, usize::MAX).unwrap();
        let top = ranked.remove(0);
        assert_eq!(top.freq_hz, 100.0);
        assert!((top.attenuation_magnitude - 1.0).abs() < 1e-12);
        for c in ranked {
            assert!(
                c.attenuation_magnitude < 1e-9,
                "{} Hz should be nulled, got {}",
                c.freq_hz,
                c.attenuation_magnitude
            );
        }
    }

    #[test]
    fn attenuation_matches_direct_sum_spot_values() {
        // 5% idle at 30 fps: |F| at 100 Hz vs the 70 Hz image, ratio ~5.
        let capture = CaptureProfile::new(30.0, 100, 95).unwrap();
        let cands = candidate_components(&grid50(), &capture).unwrap();
        let c100 = find(&cands, 100.0);
        let c70 = find(&cands, 70.0);

        let f100 = attenuation_factor(&capture, c100);
        let f70 = attenuation_factor(&capture, c70);
        assert!((f100 - attenuation_direct(&capture, c100)).abs() < 1e-9);
        assert!((f70 - attenuation_direct(&capture, c70)).abs() < 1e-9);
        assert!((f100 - 0.907188).abs() < 1e-4, "got {f100}");
        assert!((f70 - 0.181460).abs() < 1e-4, "got {f70}");
        let ratio = f100 / f70;
        assert!((ratio - 5.0).abs() < 0.05, "got {ratio}");
    }

    #[test]
    fn fifteen_percent_idle_is_an_exact_tie() {
        let capture = CaptureProfile::new(30.0, 100, 85).unwrap();
        let cands = candidate_components(&grid50(), &capture).unwrap();
        let f100 = attenuation_factor(&capture, find(&cands, 100.0));
        let f70 = attenuation_factor(&capture, find(&cands, 70.0));
        assert!((f100 - f70).abs() <= 1e-9 * f100);
    }

    #[test]
    fn strongest_transitions_and_ties() {
        for (idle, pair) in [
            (0.15, [100.0, 70.0]),
            (0.45, [70.0, 40.0]),
            (0.75, [40.0, 10.0]),
        ] {
            let capture = CaptureProfile::from_idle(30.0, 100, idle).unwrap();
            let top = strongest_components(&grid50(), &capture, 2).unwrap();
            let mut freqs = [top[0].freq_hz, top[1].freq_hz];
            freqs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut want = pair;
            want.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert_eq!(freqs, want, "idle {idle}");
            assert!(
                (top[0].attenuation_magnitude - top[1].attenuation_magnitude).abs()
                    <= 1e-9 * top[0].attenuation_magnitude
            );
        }
    }

    #[test]
    fn strongest_attenuation_decreases_across_regimes() {
        let mags: Vec<f64> = [0.0, 0.45, 0.75]
            .iter()
            .map(|&r| {
                let capture = CaptureProfile::from_idle(30.0, 1000, r).unwrap();
                strongest_components(&grid50(), &capture, 1).unwrap()[0].attenuation_magnitude
            })
            .collect();
        assert!(mags[0] > mags[1] && mags[1] > mags[2], "{mags:?}");
    }

    #[test]
    fn sweep_rows_30fps() {
        let idle_grid: Vec<f64> = (0..20).map(|i| i as f64 * 5.0 / 100.0).collect();
        let table = idle_sweep_table(&grid50(), 30.0, &idle_grid, 1000).unwrap();

        let row10 = &table.rows[2];
        assert_eq!(row10.strongest[0].freq_hz, 100.0);
        assert_eq!(row10.second[0].freq_hz, 70.0);
        assert!(
            (row10.power_ratio - 2.0).abs() < 0.1,
            "{}",
            row10.power_ratio
        );

        // Structural nulls at 30/60/90% idle leave no usable second component.
        for idx in [6, 12, 18] {
            assert!(table.rows[idx].power_ratio.is_infinite());
            assert!(table.rows[idx].second.is_empty());
        }
    }

    #[test]
    fn sweep_rows_25fps() {
        let idle_grid: Vec<f64> = (0..20).map(|i| i as f64 * 5.0 / 100.0).collect();
        let table = idle_sweep_table(&grid50(), 25.0, &idle_grid, 1000).unwrap();

        let row20 = &table.rows[4];
        assert_eq!(row20.strongest[0].freq_hz, 75.0);
        assert_eq!(row20.second[0].freq_hz, 100.0);
        assert!(
            (row20.power_ratio - 4.0).abs() < 0.2,
            "{}",
            row20.power_ratio
        );

        let row50 = &table.rows[10];
        assert_eq!(row50.strongest[0].freq_hz, 50.0);
        assert!(row50.power_ratio.is_infinite());
    }

    #[test]
    fn csv_shape() {
        let table = idle_sweep_table(&grid50(), 30.0, &[0.0, 0.15, 0.45], 1000).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "idle_percent,h1_hz,h2_hz,ratio");
        assert_eq!(lines.next().unwrap(), "0,100,,inf");
        assert_eq!(lines.next().unwrap(), "15,70;100,70;100,1");
        assert_eq!(lines.next().unwrap(), "45,40;70,40;70,1");
    }

    #[test]
    fn csv_magnitude_columns() {
        let table = idle_sweep_table(&grid50(), 30.0, &[0.0, 0.05], 1000).unwrap();
        let csv = table.to_csv_with_magnitudes();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "idle_percent,h1_hz,h2_hz,ratio,h1_mag,h2_mag"
        );
        assert_eq!(lines.next().unwrap(), "0,100,,inf,1,");
        let row5: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert!((row5[4].parse::<f64>().unwrap() - 0.907188).abs() < 1e-4);
        assert!((row5[5].parse::<f64>().unwrap() - 0.181460).abs() < 1e-4);
    }

    #[test]
    fn format_sig_trims() {
        assert_eq!(format_sig(100.0, 9), "100");
        assert_eq!(format_sig(2.0, 9), "2");
        assert_eq!(format_sig(0.123456789123, 9), "0.123456789");
        assert_eq!(format_sig(f64::INFINITY, 9), "inf");
    }
}
