//! Resonance peaks of |Q|.
//!
//! A finite averaging window turns each resonance into a sinc-like line
//! whose side lobes alternate in sign, so in |Q| every lobe is a local
//! maximum with prominence close to its height. Lobes are removed by
//! comparing each candidate with the envelope `h w / d` of every taller
//! line (height `h`, width `w`, distance `d`); a maximum sitting on a grid
//! edge is never reported but still suppresses its own lobes.

use serde::{Deserialize, Serialize};

use super::QTrace;
use crate::error::{Error, Result};

/// Candidates below `LOBE_FACTOR * h * w / d` of a taller line are side lobes.
/// An ideal sinc line has lobes at `0.26 h w / d`.
pub const LOBE_FACTOR: f64 = 0.6;

/// Default prominence threshold as a fraction of `max |Q|`.
pub const DEFAULT_PROMINENCE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Refined position on the swept axis.
    pub position: f64,
    /// Refined |Q| at the position.
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence.
    pub width: f64,
    /// Assigned resonance order.
    pub order: i64,
    /// Grid index of the sampled maximum.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    /// Median distance between neighbouring lines.
    pub spacing: Option<f64>,
    pub threshold: f64,
}

impl PeakSet {
    pub fn positions(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.position).collect()
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Peak of order `k`, if present.
    pub fn order(&self, k: i64) -> Option<&Peak> {
        self.peaks.iter().find(|p| p.order == k)
    }

    /// Tallest peak.
    pub fn tallest(&self) -> Option<&Peak> {
        self.peaks.iter().max_by(|a, b| a.height.total_cmp(&b.height))
    }
}

/// Peaks of `|Q|` in a trace. `min_prominence` defaults to 5% of `max |Q|`.
pub fn detect_peaks(trace: &QTrace, min_prominence: Option<f64>) -> Result<PeakSet> {
    detect(&trace.grid, &trace.q, min_prominence)
}

#[derive(Debug, Clone, Copy)]
struct Line {
    index: usize,
    height: f64,
    prominence: f64,
    width: f64,
}

/// Peak detection on raw samples; NaN samples are gaps.
pub fn detect(x: &[f64], q: &[f64], min_prominence: Option<f64>) -> Result<PeakSet> {
    let n = x.len();
    if n < 5 || q.len() != n {
        return Err(Error::InsufficientData(format!(
            "peak detection needs at least 5 matching samples, got {n} positions and {} values",
            q.len()
        )));
    }
    let y: Vec<f64> = q.iter().map(|v| v.abs()).collect();
    let ymax = y.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let threshold = min_prominence.unwrap_or(DEFAULT_PROMINENCE_FRACTION * ymax);

    let mut candidates = Vec::new();
    for i in 1..n - 1 {
        let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
        if a.is_finite() && b.is_finite() && c.is_finite() && b > a && b >= c {
            let line = measure(x, &y, i);
            if line.prominence > 0.0 && line.prominence >= threshold {
                candidates.push(line);
            }
        }
    }

    let mut suppressors: Vec<Line> = Vec::new();
    for (edge, inner) in [(0, 1), (n - 1, n - 2)] {
        if y[edge].is_finite() && y[inner].is_finite() && y[edge] >= y[inner] {
            suppressors.push(measure(x, &y, edge));
        }
    }

    candidates.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.index.cmp(&b.index)));
    let mut kept: Vec<Line> = Vec::new();
    for c in candidates {
        let lobe = suppressors.iter().chain(&kept).any(|s| {
            let d = (x[c.index] - x[s.index]).abs();
            s.height >= c.height && c.height < LOBE_FACTOR * s.height * s.width / d
        });
        if !lobe {
            kept.push(c);
        }
    }
    if kept.is_empty() {
        return Err(Error::NoPeaks { threshold });
    }
    kept.sort_by_key(|l| l.index);

    let mut peaks: Vec<Peak> = kept
        .iter()
        .map(|l| {
            let (position, height) = refine(x, &y, l.index);
            Peak {
                position,
                height,
                prominence: l.prominence,
                width: l.width,
                order: 1,
                index: l.index,
            }
        })
        .collect();

    let spacing = comb_spacing(&peaks);
    if let Some(s) = spacing {
        for p in &mut peaks {
            p.order = (p.position / s).round() as i64;
        }
        if peaks.windows(2).any(|w| w[1].order > w[0].order + 1) {
            log::warn!(
                "peak orders skip a resonance: {:?}",
                peaks.iter().map(|p| p.order).collect::<Vec<_>>()
            );
        }
    }
    Ok(PeakSet {
        peaks,
        spacing,
        threshold,
    })
}

/// Below this fraction of the widest neighbour gap, maxima belong to one line.
const CLUSTER_FRACTION: f64 = 0.4;

/// Median distance between neighbouring lines. Side lobes and split
/// components are first grouped with their line, represented by the tallest
/// member, so a lobe train does not set the comb period.
fn comb_spacing(peaks: &[Peak]) -> Option<f64> {
    let widest = peaks.windows(2).map(|w| w[1].position - w[0].position).fold(0.0, f64::max);
    let mut lines: Vec<&Peak> = Vec::new();
    for p in peaks {
        match lines.last_mut() {
            Some(last) if p.position - last.position < CLUSTER_FRACTION * widest => {
                if p.height > last.height {
                    *last = p;
                }
            }
            _ => lines.push(p),
        }
    }
    if lines.len() < 2 {
        return None;
    }
    let mut d: Vec<f64> = lines.windows(2).map(|w| w[1].position - w[0].position).collect();
    d.sort_by(f64::total_cmp);
    let m = d.len();
    Some(if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) })
}

/// Prominence and width at half prominence of the maximum at `i`.
fn measure(x: &[f64], y: &[f64], i: usize) -> Line {
    let h = y[i];
    let n = y.len();
    // Walk outwards until a strictly higher sample or the edge.
    let walk = |range: &mut dyn Iterator<Item = usize>| -> (f64, usize) {
        let mut low = h;
        let mut stop = i;
        for j in range {
            if !y[j].is_finite() {
                continue;
            }
            if y[j] > h {
                break;
            }
            low = low.min(y[j]);
            stop = j;
        }
        (low, stop)
    };
    let (left_min, left_stop) = walk(&mut (0..i).rev());
    let (right_min, right_stop) = walk(&mut (i + 1..n));
    let prominence = if i == 0 {
        h - right_min
    } else if i == n - 1 {
        h - left_min
    } else {
        h - left_min.max(right_min)
    };
    let level = h - 0.5 * prominence;

    let cross = |from: usize, to: usize| -> f64 {
        // First sample at or below `level` walking from `from` to `to`.
        let step: isize = if to < from { -1 } else { 1 };
        let mut prev = from;
        let mut j = from as isize;
        while j != to as isize {
            j += step;
            let ju = j as usize;
            if !y[ju].is_finite() {
                continue;
            }
            if y[ju] <= level {
                let (ya, yb) = (y[prev], y[ju]);
                let t = if ya == yb { 0.0 } else { (ya - level) / (ya - yb) };
                return x[prev] + t * (x[ju] - x[prev]);
            }
            prev = ju;
        }
        x[to]
    };
    let xl = if i == 0 { x[0] } else { cross(i, left_stop) };
    let xr = if i == n - 1 { x[n - 1] } else { cross(i, right_stop) };
    // A maximum on the edge only sees one flank.
    let width = if i == 0 {
        2.0 * (xr - x[0])
    } else if i == n - 1 {
        2.0 * (x[n - 1] - xl)
    } else {
        xr - xl
    };
    Line {
        index: i,
        height: h,
        prominence,
        width,
    }
}

/// Vertex of the parabola through the three samples around `i`.
fn refine(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    let c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / denom;
    if !(a < 0.0) {
        return (x1, y1);
    }
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    (xv, a * xv * xv + b * xv + c)
}
