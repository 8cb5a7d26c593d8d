//! Side-distance series and accuracy summaries for the four-rover board.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use libm::sqrt;

use crate::geo::{geodetic_to_enu, GeodeticCoord, RtkFix, DISTURBANCE_DECAY_S};
use crate::tf::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("no fixes to analyze")]
    Empty,
    #[error("no side has fixes from both of its rovers")]
    NoSides,
    #[error("rover time spans do not overlap")]
    NonOverlapping,
    #[error("series ends {available:.3} s after its start, shorter than the {needed:.3} s convergence window")]
    TooShort { available: f64, needed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Top,
    Right,
    Bottom,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Top, Side::Right, Side::Bottom, Side::Left];

    /// Corner indices (clockwise from top left) at the ends of this side.
    pub fn corners(self) -> (usize, usize) {
        let i = self as usize;
        (i, (i + 1) % 4)
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Top => "top",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Left => "left",
        }
    }

    /// The two sides meeting at corner `idx`.
    pub fn at_corner(idx: usize) -> [Side; 2] {
        [Side::ALL[(idx + 3) % 4], Side::ALL[idx % 4]]
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-side `(stamp, 3D distance)` samples, indexed by [`Side`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistanceSeries {
    pub sides: [Vec<(f64, f64)>; 4],
}

impl DistanceSeries {
    pub fn side(&self, s: Side) -> &[(f64, f64)] {
        &self.sides[s as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.sides.iter().all(Vec::is_empty)
    }

    /// Union of all stamps, ascending.
    pub fn stamps(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.sides.iter().flatten().map(|&(t, _)| t).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }

    pub fn start(&self) -> Option<f64> {
        self.sides.iter().filter_map(|s| s.first().map(|p| p.0)).min_by(f64::total_cmp)
    }
}

fn to_enu_series(fixes: &[RtkFix], base: &GeodeticCoord) -> Vec<(f64, Vec3)> {
    let mut v: Vec<(f64, Vec3)> = fixes
        .iter()
        .map(|f| (f.stamp, geodetic_to_enu(&f.position, base).vec()))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn nearest(series: &[(f64, Vec3)], t: f64) -> Option<&(f64, Vec3)> {
    let i = series.partition_point(|p| p.0 < t);
    let after = series.get(i);
    let before = i.checked_sub(1).and_then(|j| series.get(j));
    match (before, after) {
        (Some(b), Some(a)) => Some(if t - b.0 <= a.0 - t { b } else { a }),
        (b, a) => b.or(a),
    }
}

/// Distances between adjacent corners of the board, pairing each fix of a
/// side's first rover with the nearest-stamped fix of its second rover when
/// they lie within half a fix period. `corners` lists rover ids clockwise
/// from the top left.
pub fn side_distances(
    fixes: &BTreeMap<String, Vec<RtkFix>>,
    corners: &[String; 4],
    base: &GeodeticCoord,
    fix_rate_hz: f64,
) -> Result<DistanceSeries, AnalysisError> {
    if fixes.values().all(Vec::is_empty) {
        return Err(AnalysisError::Empty);
    }
    let half_period = 0.5 / fix_rate_hz + 1e-9;
    let enu: Vec<Option<Vec<(f64, Vec3)>>> = corners
        .iter()
        .map(|id| fixes.get(id).filter(|f| !f.is_empty()).map(|f| to_enu_series(f, base)))
        .collect();

    let mut out = DistanceSeries::default();
    let mut any_side = false;
    for side in Side::ALL {
        let (i, j) = side.corners();
        let (Some(a), Some(b)) = (&enu[i], &enu[j]) else {
            continue;
        };
        any_side = true;
        let series = &mut out.sides[side as usize];
        for &(t, pa) in a {
            let Some(&(tb, pb)) = nearest(b, t) else { continue };
            if (tb - t).abs() > half_period {
                continue;
            }
            if series.last().is_some_and(|&(last, _)| t <= last) {
                continue;
            }
            series.push((t, (pa - pb).norm()));
        }
    }
    if !any_side {
        return Err(AnalysisError::NoSides);
    }
    if out.is_empty() {
        return Err(AnalysisError::NonOverlapping);
    }
    Ok(out)
}

/// Centroid of all rovers at each epoch where every listed rover reported.
pub fn centroid_path(
    fixes: &BTreeMap<String, Vec<RtkFix>>,
    rovers: &[String],
    base: &GeodeticCoord,
) -> Vec<(f64, Vec3)> {
    let mut by_stamp: BTreeMap<u64, (f64, Vec3, usize)> = BTreeMap::new();
    for id in rovers {
        for f in fixes.get(id).into_iter().flatten() {
            let e = by_stamp.entry(f.stamp.to_bits()).or_insert((f.stamp, Vec3::ZERO, 0));
            e.1 = e.1 + geodetic_to_enu(&f.position, base).vec();
            e.2 += 1;
        }
    }
    let mut path: Vec<(f64, Vec3)> = by_stamp
        .into_values()
        .filter(|&(_, _, n)| n == rovers.len())
        .map(|(t, sum, n)| (t, sum.scale(1.0 / n as f64)))
        .collect();
    path.sort_by(|a, b| a.0.total_cmp(&b.0));
    path
}

pub fn path_length(path: &[(f64, Vec3)]) -> f64 {
    path.windows(2).map(|w| (w[1].1 - w[0].1).norm()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryOptions {
    /// Samples earlier than `start + convergence_s` are ignored.
    pub convergence_s: f64,
    /// Declared disturbance windows, in series time.
    pub windows: Vec<(f64, f64)>,
    /// Extra time after each window that is still treated as disturbed.
    pub window_decay_s: f64,
    /// Width of the centered moving average applied before thresholding.
    pub smoothing_s: f64,
    pub peak_sigma: f64,
    pub peak_min_samples: usize,
    /// Excursions smaller than this never count as peaks.
    pub peak_floor_m: f64,
    pub tolerance_m: f64,
    pub max_slope_mm_per_min: f64,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            convergence_s: 120.0,
            windows: Vec::new(),
            window_decay_s: DISTURBANCE_DECAY_S,
            smoothing_s: 1.0,
            peak_sigma: 2.0,
            peak_min_samples: 2,
            peak_floor_m: 1e-3,
            tolerance_m: 0.20,
            max_slope_mm_per_min: 1.0,
        }
    }
}

impl SummaryOptions {
    /// The centered smoothing leaks a window half a width early.
    fn disturbed(&self, t: f64) -> bool {
        let lead = 0.5 * self.smoothing_s;
        self.windows
            .iter()
            .any(|&(s, e)| t >= s - lead && t <= e + self.window_decay_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub stamp: f64,
    /// Excursion from the side's undisturbed mean, meters.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideReport {
    pub side: Side,
    pub samples: usize,
    /// Mean distance over undisturbed post-convergence samples.
    pub mean: f64,
    pub mean_error: f64,
    pub std: f64,
    /// Largest smoothed |distance − expected| after convergence.
    pub max_abs_error: f64,
    pub slope_mm_per_min: f64,
    pub peaks: Vec<Peak>,
    pub within_20cm: bool,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub expected_side: f64,
    pub convergence_s: f64,
    pub sides: Vec<SideReport>,
    pub within_20cm: bool,
    pub stable: bool,
}

impl Report {
    pub fn side(&self, s: Side) -> Option<&SideReport> {
        self.sides.iter().find(|r| r.side == s)
    }

    /// Stable `key,value` rows.
    pub fn rows(&self) -> Vec<(String, String)> {
        use alloc::format;
        let mut rows = Vec::new();
        let mut push = |k: String, v: String| rows.push((k, v));
        push("expected_side_m".into(), format!("{:.6}", self.expected_side));
        push("convergence_s".into(), format!("{:.6}", self.convergence_s));
        push("within_20cm".into(), format!("{}", self.within_20cm));
        push("stable".into(), format!("{}", self.stable));
        for s in &self.sides {
            let n = s.side.name();
            push(format!("{n}.samples"), format!("{}", s.samples));
            push(format!("{n}.mean_m"), format!("{:.6}", s.mean));
            push(format!("{n}.mean_error_m"), format!("{:.6}", s.mean_error));
            push(format!("{n}.std_m"), format!("{:.6}", s.std));
            push(format!("{n}.max_abs_error_m"), format!("{:.6}", s.max_abs_error));
            push(format!("{n}.slope_mm_per_min"), format!("{:.6}", s.slope_mm_per_min));
            push(format!("{n}.within_20cm"), format!("{}", s.within_20cm));
            push(format!("{n}.stable"), format!("{}", s.stable));
            push(format!("{n}.peak_count"), format!("{}", s.peaks.len()));
            for (i, p) in s.peaks.iter().enumerate() {
                push(format!("{n}.peak.{i}.stamp_s"), format!("{:.6}", p.stamp));
                push(format!("{n}.peak.{i}.magnitude_m"), format!("{:.6}", p.magnitude));
            }
        }
        rows
    }
}

/// Centered moving average over `±width/2` seconds.
pub fn moving_average(series: &[(f64, f64)], width: f64) -> Vec<f64> {
    let half = 0.5 * width;
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    for &(_, d) in series {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + d);
    }
    let (mut lo, mut hi) = (0usize, 0usize);
    series
        .iter()
        .map(|&(t, _)| {
            while series[lo].0 < t - half {
                lo += 1;
            }
            while hi < series.len() && series[hi].0 <= t + half {
                hi += 1;
            }
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, sqrt(var))
}

/// Least-squares slope of `d` against `t`, m/s.
fn slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let md = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, d) in points {
        sxy += (t - mt) * (d - md);
        sxx += (t - mt) * (t - mt);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn summarize_side(
    side: Side,
    series: &[(f64, f64)],
    conv_end: f64,
    expected: f64,
    opts: &SummaryOptions,
) -> Option<SideReport> {
    let first_post = series.partition_point(|p| p.0 < conv_end);
    if first_post == series.len() {
        return None;
    }
    let smooth = moving_average(series, opts.smoothing_s);
    let post = &series[first_post..];
    let post_smooth = &smooth[first_post..];

    let mut quiet: Vec<(f64, f64)> = post.iter().copied().filter(|p| !opts.disturbed(p.0)).collect();
    if quiet.is_empty() {
        quiet = post.to_vec();
    }
    let dists: Vec<f64> = quiet.iter().map(|p| p.1).collect();
    let (mean, std) = mean_std(&dists);
    let slope_mm_per_min = slope(&quiet) * 60_000.0;

    let mut max_abs_error: f64 = 0.0;
    let mut within = true;
    for (&(t, _), &s) in post.iter().zip(post_smooth) {
        let err = (s - expected).abs();
        max_abs_error = max_abs_error.max(err);
        if err > opts.tolerance_m && !opts.disturbed(t) {
            within = false;
        }
    }

    let threshold = (opts.peak_sigma * std).max(opts.peak_floor_m);
    let mut peaks = Vec::new();
    let mut run: Option<(usize, Peak)> = None;
    let close = |run: &mut Option<(usize, Peak)>, peaks: &mut Vec<Peak>| {
        if let Some((n, p)) = run.take() {
            if n >= opts.peak_min_samples {
                peaks.push(p);
            }
        }
    };
    for (&(t, _), &s) in post.iter().zip(post_smooth) {
        let x = (s - mean).abs();
        if x > threshold {
            let entry = run.get_or_insert((0, Peak { stamp: t, magnitude: x }));
            entry.0 += 1;
            if x > entry.1.magnitude {
                entry.1 = Peak { stamp: t, magnitude: x };
            }
        } else {
            close(&mut run, &mut peaks);
        }
    }
    close(&mut run, &mut peaks);

    Some(SideReport {
        side,
        samples: post.len(),
        mean,
        mean_error: mean - expected,
        std,
        max_abs_error,
        slope_mm_per_min,
        peaks,
        within_20cm: within,
        stable: slope_mm_per_min.abs() <= opts.max_slope_mm_per_min,
    })
}

/// Judges each side against `expected_side` after the convergence window.
pub fn summarize(d: &DistanceSeries, expected_side: f64, opts: &SummaryOptions) -> Result<Report, AnalysisError> {
    let start = d.start().ok_or(AnalysisError::Empty)?;
    let conv_end = start + opts.convergence_s;
    let sides: Vec<SideReport> = Side::ALL
        .iter()
        .filter_map(|&s| summarize_side(s, d.side(s), conv_end, expected_side, opts))
        .collect();
    if sides.is_empty() {
        let end = d.stamps().last().copied().unwrap_or(start);
        return Err(AnalysisError::TooShort {
            available: end - start,
            needed: opts.convergence_s,
        });
    }
    Ok(Report {
        expected_side,
        convergence_s: opts.convergence_s,
        within_20cm: sides.iter().all(|s| s.within_20cm),
        stable: sides.iter().all(|s| s.stable),
        sides,
    })
}
