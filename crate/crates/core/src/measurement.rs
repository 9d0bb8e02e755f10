//! Observables computed from rod configurations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::particles::{ModelKind, SystemState};

/// Coordinate frame of a density profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Static,
    /// Positions measured from the moving barrier `c t`.
    BarrierComoving,
}

impl Frame {
    pub fn of(state: &SystemState) -> Self {
        match state.model {
            ModelKind::BarrierPushed => Frame::BarrierComoving,
            _ => Frame::Static,
        }
    }
}

/// Mass fraction per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub bin_edges: Vec<f64>,
    pub values: Vec<f64>,
    pub frame: Frame,
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return domain("a profile needs at least one bin");
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
        return domain("bin edges must be finite and strictly ascending");
    }
    Ok(())
}

impl DensityProfile {
    pub fn new(bin_edges: Vec<f64>, values: Vec<f64>, frame: Frame) -> Result<Self> {
        check_edges(&bin_edges)?;
        if values.len() + 1 != bin_edges.len() {
            return domain(format!(
                "{} values for {} bins",
                values.len(),
                bin_edges.len() - 1
            ));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return domain("bin values must lie in [0, 1]");
        }
        Ok(Self {
            bin_edges,
            values,
            frame,
        })
    }

    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Mass fraction over the union of bins `range`, as the width-weighted
    /// mean of the bin values.
    pub fn coarse_value(&self, range: std::ops::Range<usize>) -> f64 {
        let w = self.widths();
        let mass: f64 = range.clone().map(|i| self.values[i] * w[i]).sum();
        mass / (self.bin_edges[range.end] - self.bin_edges[range.start])
    }

    /// Bin-wise weighted mean of profiles sharing the same bins and frame.
    /// The reduction runs in slice order.
    pub fn weighted_mean(items: &[(&DensityProfile, f64)]) -> Result<DensityProfile> {
        let (first, _) = items
            .first()
            .ok_or_else(|| Error::Domain("nothing to merge".into()))?;
        let mut sums = vec![0.0; first.bins()];
        let mut total = 0.0;
        for (p, w) in items {
            if p.bin_edges != first.bin_edges || p.frame != first.frame {
                return domain("cannot merge profiles with different bins or frames");
            }
            if !(*w >= 0.0) {
                return domain(format!("negative merge weight {w}"));
            }
            for (s, v) in sums.iter_mut().zip(&p.values) {
                *s += w * v;
            }
            total += w;
        }
        if !(total > 0.0) {
            return domain("merge weights sum to zero");
        }
        let values = sums.iter().map(|s| (s / total).clamp(0.0, 1.0)).collect();
        DensityProfile::new(first.bin_edges.clone(), values, first.frame)
    }

    /// CSV with header `bin_left,bin_right,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,density\n");
        for (w, v) in self.bin_edges.windows(2).zip(&self.values) {
            writeln!(out, "{},{},{}", w[0], w[1], v).unwrap();
        }
        out
    }
}

/// `count` equal bins on `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let w = (hi - lo) / count as f64;
    (0..=count)
        .map(|i| if i == count { hi } else { lo + i as f64 * w })
        .collect()
}

/// Covered length of `[lo, hi]` (static coordinates).
fn covered_length(x: &[f64], eps: f64, lo: f64, hi: f64) -> f64 {
    let half = eps / 2.0;
    // first rod whose right edge passes lo
    let start = x.partition_point(|&c| c + half <= lo);
    let mut len = 0.0;
    for &c in &x[start..] {
        let (l, r) = (c - half, c + half);
        if l >= hi {
            break;
        }
        len += r.min(hi) - l.max(lo);
    }
    len
}

/// Fraction of `[x1, x2]` covered by rods. For the barrier-pushed system the
/// window is taken relative to the barrier, i.e. shifted by `c t`.
pub fn density_window(state: &SystemState, x1: f64, x2: f64) -> Result<f64> {
    if !(x1 < x2) {
        return domain(format!("empty window [{x1}, {x2}]"));
    }
    let s = state.frame_shift();
    let len = covered_length(&state.x, state.params.epsilon, x1 + s, x2 + s);
    Ok((len / (x2 - x1)).clamp(0.0, 1.0))
}

/// [`density_window`] for every bin.
pub fn density_profile(state: &SystemState, bin_edges: &[f64]) -> Result<DensityProfile> {
    check_edges(bin_edges)?;
    let values = bin_edges
        .windows(2)
        .map(|w| density_window(state, w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    DensityProfile::new(bin_edges.to_vec(), values, Frame::of(state))
}

/// Mean gap between consecutive rods whose gap midpoint lies in `[x1, x2]`
/// (same frame convention as [`density_window`]). `None` when no such pair
/// exists.
pub fn gap_stats(state: &SystemState, x1: f64, x2: f64) -> Option<f64> {
    let s = state.frame_shift();
    let eps = state.params.epsilon;
    let (lo, hi) = (x1 + s, x2 + s);
    let mut sum = 0.0;
    let mut count = 0usize;
    for w in state.x.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if mid < lo {
            continue;
        }
        if mid > hi {
            break;
        }
        let g = w[1] - w[0] - eps;
        // spacing round-off on packed rods reads as contact
        sum += if g > 1e-12 * w[1].abs().max(1.0) {
            g
        } else {
            0.0
        };
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Position history of one labelled rod.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedTrack {
    pub label: u64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

impl TaggedTrack {
    pub fn new(label: u64, times: Vec<f64>, positions: Vec<f64>) -> Result<Self> {
        if times.len() != positions.len() {
            return domain("times and positions differ in length");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return domain("sample times must be strictly increasing");
        }
        Ok(Self {
            label,
            times,
            positions,
        })
    }

    pub fn push(&mut self, t: f64, x: f64) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return domain(format!("sample time {t} not after {last}"));
            }
        }
        self.times.push(t);
        self.positions.push(x);
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Track with its least-squares quadratic trend removed.
    pub fn detrended_quadratic(&self) -> TaggedTrack {
        let n = self.times.len();
        if n < 3 {
            return self.clone();
        }
        let t0 = self.times[0];
        let scale = self.duration().max(f64::MIN_POSITIVE);
        // normal equations in the scaled time s = (t - t0) / scale
        let mut m = [[0.0f64; 3]; 3];
        let mut r = [0.0f64; 3];
        for (&t, &x) in self.times.iter().zip(&self.positions) {
            let s = (t - t0) / scale;
            let basis = [1.0, s, s * s];
            for i in 0..3 {
                r[i] += basis[i] * x;
                for j in 0..3 {
                    m[i][j] += basis[i] * basis[j];
                }
            }
        }
        let coef = solve3(m, r);
        let positions = self
            .times
            .iter()
            .zip(&self.positions)
            .map(|(&t, &x)| {
                let s = (t - t0) / scale;
                x - (coef[0] + coef[1] * s + coef[2] * s * s)
            })
            .collect();
        TaggedTrack {
            label: self.label,
            times: self.times.clone(),
            positions,
        }
    }
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut out = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * out[k]).sum();
        out[i] = (r[i] - s) / m[i][i];
    }
    out
}

/// Variance of `lag`-increments of a uniformly sampled track.
///
/// Uses all overlapping increments `X[j+k] - X[j]`, centred on `k` times the
/// mean one-step increment, with the overlapping-sample divisor
/// `m = k (N - k + 1) (1 - k/N)` (N one-step increments), so that
/// `k/m * sum (dX - k mu)^2` is unbiased for Brownian tracks.
pub fn increment_variances(track: &TaggedTrack, lags: &[f64]) -> Result<Vec<f64>> {
    let n_pts = track.times.len();
    if lags.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 lags, got {}",
            lags.len()
        )));
    }
    if n_pts < 2 {
        return Err(Error::InsufficientData(
            "track has fewer than 2 samples".into(),
        ));
    }
    let dt = track.duration() / (n_pts - 1) as f64;
    if track
        .times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt)
    {
        return domain("track must be sampled on a uniform grid");
    }
    let max_lag = lags.iter().cloned().fold(0.0, f64::max);
    if track.duration() < 10.0 * max_lag * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "track covers {} but 10 x max lag is {}",
            track.duration(),
            10.0 * max_lag
        )));
    }
    let x = &track.positions;
    let big_n = n_pts - 1;
    let mu = (x[big_n] - x[0]) / big_n as f64;
    let mut out = Vec::with_capacity(lags.len());
    for &lag in lags {
        let kf = lag / dt;
        let k = kf.round() as usize;
        if k == 0 || (kf - k as f64).abs() > 1e-6 * kf.max(1.0) {
            return domain(format!(
                "lag {lag} is not a multiple of the sampling step {dt}"
            ));
        }
        let ss: f64 = (0..=big_n - k)
            .map(|j| {
                let d = x[j + k] - x[j] - k as f64 * mu;
                d * d
            })
            .sum();
        let kk = k as f64;
        let m = kk * (big_n - k + 1) as f64 * (1.0 - kk / big_n as f64);
        out.push(kk / m * ss);
    }
    Ok(out)
}

/// Ordinary least-squares slope of `ln Var(X[t+lag] - X[t])` against `ln lag`.
pub fn increment_scaling(track: &TaggedTrack, lags: &[f64]) -> Result<f64> {
    let vars = increment_variances(track, lags)?;
    // round-off floor relative to the spread of the track
    let (lo, hi) = track
        .positions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| {
            (l.min(x), h.max(x))
        });
    let floor = 1e-20 * (hi - lo) * (hi - lo);
    if vars.iter().any(|v| !(*v > floor)) {
        return Err(Error::InsufficientData(
            "increment variance vanishes; scaling exponent undefined".into(),
        ));
    }
    let xs: Vec<f64> = lags.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = vars.iter().map(|v| v.ln()).collect();
    ols_slope(&xs, &ys)
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return domain("lags must not all be equal");
    }
    Ok(sxy / sxx)
}
