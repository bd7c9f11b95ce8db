//! Pattern post-processing: normalization, lobe extraction, measured-data
//! ingestion, and measured-vs-simulated comparison.
//!
//! All cuts live on a uniform circular grid covering [0, 360) degrees;
//! phi = 0 and phi = 360 are identified.

use crate::error::{Error, Result};
use std::io::BufRead;

const HALF_POWER_DB: f64 = -3.010299956639812; // 10*log10(1/2)
const DB_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutLabel {
    Simulated,
    Measured,
}

/// 1D azimuth pattern on a uniform circular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut1D {
    pub phi_deg: Vec<f64>,
    pub values_db: Vec<f64>,
    pub label: CutLabel,
}

impl Cut1D {
    pub fn new(phi_deg: Vec<f64>, values_db: Vec<f64>, label: CutLabel) -> Result<Cut1D> {
        if phi_deg.len() < 2 || phi_deg.len() != values_db.len() {
            return Err(Error::InvalidMetrics(format!(
                "cut needs matching angle/value lists of length >= 2, got {} and {}",
                phi_deg.len(),
                values_db.len()
            )));
        }
        let n = phi_deg.len();
        let spacing = 360.0 / n as f64;
        for (i, &a) in phi_deg.iter().enumerate() {
            if (a - i as f64 * spacing).abs() > 1e-6 {
                return Err(Error::InvalidMetrics(format!(
                    "cut grid is not uniform over [0, 360): sample {i} at {a} deg"
                )));
            }
        }
        if !values_db.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("cut values".into()));
        }
        Ok(Cut1D { phi_deg, values_db, label })
    }

    pub fn spacing(&self) -> f64 {
        360.0 / self.phi_deg.len() as f64
    }

    /// Index of the peak sample (smallest angle on ties).
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values_db.iter().enumerate() {
            if v > self.values_db[best] {
                best = i;
            }
        }
        best
    }

    /// CSV export, 6 decimals. Simulated cuts use the
    /// `phi_deg,directivity_dbi` header, measured cuts `angle_deg,s21_db`.
    pub fn to_csv(&self) -> String {
        let header = match self.label {
            CutLabel::Simulated => "phi_deg,directivity_dbi",
            CutLabel::Measured => "angle_deg,s21_db",
        };
        let mut out = String::from(header);
        out.push('\n');
        for (a, v) in self.phi_deg.iter().zip(&self.values_db) {
            out.push_str(&format!("{a:.6},{v:.6}\n"));
        }
        out
    }
}

/// Shift the peak to 0 dB. Idempotent; flat inputs become flat 0 dB.
pub fn normalize(cut: &Cut1D) -> Cut1D {
    let peak = cut.values_db[cut.peak_index()];
    Cut1D {
        phi_deg: cut.phi_deg.clone(),
        values_db: cut.values_db.iter().map(|v| v - peak).collect(),
        label: cut.label,
    }
}

/// Main-lobe summary of a cut.
#[derive(Debug, Clone, PartialEq)]
pub struct LobeReport {
    pub peak_angle_deg: f64,
    pub peak_value_db: f64,
    /// Half-power beamwidth, grid-granular. 360 for a flat pattern.
    pub hpbw_deg: f64,
    /// Contiguous region around the peak above `peak + threshold_db`,
    /// as (start, end) angles; end may exceed 360 when the lobe wraps.
    pub main_lobe_extent_deg: (f64, f64),
    /// (angle_deg, level_below_peak_db), level <= 0, sorted descending.
    pub side_lobes: Vec<(f64, f64)>,
}

/// Walk outward from `peak` while values stay >= peak + threshold.
/// Returns (steps_left, steps_right); a full circle gives n-1 total.
fn contiguous_extent(values: &[f64], peak: usize, threshold_db: f64) -> (usize, usize) {
    let n = values.len();
    let floor = values[peak] + threshold_db - DB_TOL;
    let mut left = 0;
    while left < n - 1 && values[(peak + n - left - 1) % n] >= floor {
        left += 1;
    }
    let mut right = 0;
    while left + right < n - 1 && values[(peak + right + 1) % n] >= floor {
        right += 1;
    }
    (left, right)
}

/// Peak, main-lobe extent at `threshold_db` below the peak, and half-power
/// beamwidth. Thresholds are applied inclusively at grid granularity.
pub fn main_lobe(cut: &Cut1D, threshold_db: f64) -> Result<LobeReport> {
    if !(threshold_db < 0.0) {
        return Err(Error::InvalidMetrics(format!(
            "main-lobe threshold must be negative dB, got {threshold_db}"
        )));
    }
    let n = cut.values_db.len();
    let spacing = cut.spacing();
    let peak = cut.peak_index();
    let peak_angle = cut.phi_deg[peak];

    let (l, r) = contiguous_extent(&cut.values_db, peak, threshold_db);
    let extent = if l + r >= n - 1 {
        (0.0, 360.0)
    } else {
        (peak_angle - l as f64 * spacing, peak_angle + r as f64 * spacing)
    };

    let (hl, hr) = contiguous_extent(&cut.values_db, peak, HALF_POWER_DB);
    let hpbw = if hl + hr >= n - 1 { 360.0 } else { (hl + hr) as f64 * spacing };

    Ok(LobeReport {
        peak_angle_deg: peak_angle,
        peak_value_db: cut.values_db[peak],
        hpbw_deg: hpbw,
        main_lobe_extent_deg: extent,
        side_lobes: Vec::new(),
    })
}

/// Circular topographic prominence of a local maximum: height above the
/// higher of the two saddle minima reached before meeting larger terrain.
fn prominence(values: &[f64], i: usize) -> f64 {
    let n = values.len();
    let mut saddle = f64::NEG_INFINITY;
    for dir in [1usize, n - 1] {
        let mut min_seen = values[i];
        let mut j = (i + dir) % n;
        while j != i {
            if values[j] > values[i] {
                break;
            }
            min_seen = min_seen.min(values[j]);
            j = (j + dir) % n;
        }
        saddle = saddle.max(min_seen);
    }
    values[i] - saddle
}

/// Local maxima outside the main-lobe extent with prominence at or above
/// `prominence_db`, sorted by level descending; levels are relative to the
/// main peak (<= 0 dB).
pub fn side_lobes(cut: &Cut1D, prominence_db: f64, extent_threshold_db: f64) -> Result<Vec<(f64, f64)>> {
    if !(prominence_db > 0.0) {
        return Err(Error::InvalidMetrics(format!(
            "prominence must be positive dB, got {prominence_db}"
        )));
    }
    let report = main_lobe(cut, extent_threshold_db)?;
    let n = cut.values_db.len();
    let peak = cut.peak_index();
    let (l, r) = contiguous_extent(&cut.values_db, peak, extent_threshold_db);
    if l + r >= n - 1 {
        return Ok(Vec::new()); // the main lobe covers the full circle
    }
    let in_main = |i: usize| -> bool {
        let back = (i + n - peak) % n; // steps from peak going right
        back <= r || back >= n - l
    };
    let mut lobes = Vec::new();
    for i in 0..n {
        if in_main(i) {
            continue;
        }
        let prev = cut.values_db[(i + n - 1) % n];
        let next = cut.values_db[(i + 1) % n];
        let v = cut.values_db[i];
        if v >= prev && v > next && prominence(&cut.values_db, i) >= prominence_db - DB_TOL {
            lobes.push((cut.phi_deg[i], v - report.peak_value_db));
        }
    }
    lobes.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.partial_cmp(&b.0).unwrap()));
    Ok(lobes)
}

/// Canonical measured grid: 360 samples at 1 degree.
pub const CANONICAL_POINTS: usize = 360;

/// Parses a rotary-sweep CSV (`angle_deg,s21_db`) and resamples it onto the
/// canonical 1-degree grid by circular linear interpolation.
pub fn ingest_measurement<R: BufRead>(reader: R) -> Result<Cut1D> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => {
            return Err(Error::Parse { line: 1, message: "empty input".into() });
        }
    };
    if header.trim() != "angle_deg,s21_db" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `angle_deg,s21_db`, got `{}`", header.trim()),
        });
    }
    let mut angles = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut parts = t.split(',');
        let parse = |s: Option<&str>, what: &str| -> Result<f64> {
            s.map(str::trim)
                .filter(|s| !s.is_empty())
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("malformed {what} in `{t}`"),
                })
        };
        let angle = parse(parts.next(), "angle")?;
        let value = parse(parts.next(), "value")?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two columns, got more in `{t}`"),
            });
        }
        if let Some(&last) = angles.last() {
            if angle == last {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate angle {angle}"),
                });
            }
            if angle < last {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("angles must be ascending, {angle} after {last}"),
                });
            }
        }
        angles.push(angle);
        values.push(value);
    }
    if angles.len() < 8 {
        return Err(Error::Parse {
            line: angles.len() + 1,
            message: format!("need at least 8 samples, got {}", angles.len()),
        });
    }

    // circular linear interpolation onto the canonical grid
    let n_src = angles.len();
    let mut out = Vec::with_capacity(CANONICAL_POINTS);
    for i in 0..CANONICAL_POINTS {
        let target = i as f64;
        out.push(interp_circular(&angles, &values, n_src, target));
    }
    Cut1D::new(
        (0..CANONICAL_POINTS).map(|i| i as f64).collect(),
        out,
        CutLabel::Measured,
    )
}

fn interp_circular(angles: &[f64], values: &[f64], n: usize, target: f64) -> f64 {
    // source angles ascending; wrap with period 360
    let wrap = |a: f64| a.rem_euclid(360.0);
    let t = wrap(target);
    // exact hit
    for (a, v) in angles.iter().zip(values) {
        if (wrap(*a) - t).abs() < 1e-9 {
            return *v;
        }
    }
    // find the bracketing pair on the circle
    let mut best_prev = 0usize;
    let mut best_prev_gap = f64::INFINITY;
    let mut best_next = 0usize;
    let mut best_next_gap = f64::INFINITY;
    for i in 0..n {
        let a = wrap(angles[i]);
        let gap_back = wrap(t - a);
        if gap_back < best_prev_gap {
            best_prev_gap = gap_back;
            best_prev = i;
        }
        let gap_fwd = wrap(a - t);
        if gap_fwd < best_next_gap {
            best_next_gap = gap_fwd;
            best_next = i;
        }
    }
    let span = best_prev_gap + best_next_gap;
    if span == 0.0 {
        return values[best_prev];
    }
    let w = best_prev_gap / span;
    values[best_prev] * (1.0 - w) + values[best_next] * w
}

/// Result of a measured-vs-simulated comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// Global azimuth offset applied to `b` for the best match, in (-180, 180].
    pub phi_offset_deg: f64,
    /// Residual peak-angle difference after the offset, in (-180, 180].
    pub peak_angle_error_deg: f64,
    /// Windowed RMSE of the normalized patterns at the best offset, dB.
    pub rmse_db: f64,
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        format!(
            "phi_offset_deg: {:.6}\npeak_angle_error_deg: {:.6}\nrmse_db: {:.6}\n",
            self.phi_offset_deg, self.peak_angle_error_deg, self.rmse_db
        )
    }
}

fn wrap_half(a: f64) -> f64 {
    let mut w = a.rem_euclid(360.0);
    if w > 180.0 {
        w -= 360.0;
    }
    w
}

/// Finds the circular shift of `b` (grid granularity) minimizing RMSE over
/// samples within `window_db` of either normalized pattern's peak. `b` is
/// resampled onto `a`'s grid first when the grids differ.
pub fn compare(a: &Cut1D, b: &Cut1D, window_db: f64) -> Result<CompareReport> {
    if !(window_db < 0.0) {
        return Err(Error::InvalidMetrics(format!(
            "comparison window must be negative dB, got {window_db}"
        )));
    }
    let a_n = normalize(a);
    let b_res = if b.phi_deg.len() == a.phi_deg.len() {
        b.clone()
    } else {
        let n_src = b.phi_deg.len();
        let values: Vec<f64> = a
            .phi_deg
            .iter()
            .map(|&t| interp_circular(&b.phi_deg, &b.values_db, n_src, t))
            .collect();
        Cut1D::new(a.phi_deg.clone(), values, b.label)?
    };
    let b_n = normalize(&b_res);

    let n = a_n.values_db.len();
    let spacing = a_n.spacing();
    let mut best: Option<(f64, usize)> = None; // (rmse, shift)
    for k in 0..n {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            let av = a_n.values_db[i];
            let bv = b_n.values_db[(i + k) % n];
            if av >= window_db || bv >= window_db {
                let d = av - bv;
                sum += d * d;
                count += 1;
            }
        }
        if count == 0 {
            continue;
        }
        let rmse = (sum / count as f64).sqrt();
        let better = match best {
            None => true,
            Some((r, ks)) => {
                rmse < r - 1e-12
                    || ((rmse - r).abs() <= 1e-12
                        && wrap_half(k as f64 * spacing).abs()
                            < wrap_half(ks as f64 * spacing).abs())
            }
        };
        if better {
            best = Some((rmse, k));
        }
    }
    let (rmse, k) = best.ok_or_else(|| {
        Error::InvalidMetrics("comparison window is empty".into())
    })?;
    let offset = wrap_half(k as f64 * spacing);
    // best shift k means b(phi + offset) ~ a(phi), so b's features sit at
    // a's angle + offset
    let peak_err = wrap_half(
        a_n.phi_deg[a_n.peak_index()] - (b_n.phi_deg[b_n.peak_index()] - offset),
    );
    Ok(CompareReport { phi_offset_deg: offset, peak_angle_error_deg: peak_err, rmse_db: rmse })
}

/// Reads a cut CSV produced by [`Cut1D::to_csv`] (either header).
pub fn read_cut_csv<R: BufRead>(mut reader: R) -> Result<Cut1D> {
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let label = match first.trim() {
        "phi_deg,directivity_dbi" => CutLabel::Simulated,
        "angle_deg,s21_db" => CutLabel::Measured,
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unrecognized cut header `{other}`"),
            });
        }
    };
    let mut phi = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut parts = t.split(',');
        let bad = || Error::Parse {
            line: idx + 2,
            message: format!("malformed row `{t}`"),
        };
        let a: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let v: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        phi.push(a);
        values.push(v);
    }
    Cut1D::new(phi, values, label)
}
