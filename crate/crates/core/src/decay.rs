//! Net decay factor estimation for post-peak activity.
//!
//! The pipeline: locate the activity peak, cut the post-peak window at the
//! first sustained drop below a fraction of the peak, delete sub-event
//! spikes, recursively fit `chi = alpha * ln(t) + beta` segments until each
//! fit clears the R^2 gate, merge adjacent decay/growth pairs, and aggregate
//! per-region contributions `-alpha/beta` into one length-weighted scalar.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// One point of the decay window: `t` is hours after the peak (t = 1 is the
/// first post-peak bucket), `chi` the activity count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPoint {
    pub t: i64,
    pub chi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Region span in buckets (default).
    BucketLength,
    /// Number of surviving points in the region.
    PointCount,
    /// Total activity in the region.
    ActivityMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub threshold_frac: f64,
    pub sustain_k: usize,
    pub ratio_theta: f64,
    pub max_width: usize,
    pub min_len: usize,
    pub r2_gate: f64,
    pub weighting: Weighting,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            threshold_frac: 0.01,
            sustain_k: 3,
            ratio_theta: 2.0,
            max_width: 3,
            min_len: 4,
            r2_gate: 0.8,
            weighting: Weighting::BucketLength,
        }
    }
}

impl DecayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_frac > 0.0 && self.threshold_frac < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold_frac must be in (0,1), got {}",
                self.threshold_frac
            )));
        }
        if self.sustain_k < 1 {
            return Err(Error::InvalidParameter("sustain_k must be >= 1".into()));
        }
        if self.ratio_theta <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "ratio_theta must exceed 1, got {}",
                self.ratio_theta
            )));
        }
        if self.max_width < 1 {
            return Err(Error::InvalidParameter("max_width must be >= 1".into()));
        }
        if self.min_len < 3 {
            return Err(Error::InvalidParameter("min_len must be >= 3".into()));
        }
        if !(self.r2_gate > 0.0 && self.r2_gate < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "r2_gate must be in (0,1), got {}",
                self.r2_gate
            )));
        }
        Ok(())
    }
}

/// One fitted region, in global post-peak time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionFit {
    pub start_idx: i64,
    pub end_idx: i64,
    pub alpha: f64,
    pub beta: f64,
    pub r2: f64,
    /// `-alpha/beta`; positive for decay, negative for growth.
    pub contribution: f64,
    pub weight: f64,
    /// Accepted on the minimum-length floor without clearing the R^2 gate.
    pub flagged: bool,
}

/// Post-merge aggregate of one or more adjacent regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergedRegion {
    pub start_idx: i64,
    pub end_idx: i64,
    pub weight: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub peak_idx: usize,
    pub peak_value: u64,
    pub window_end_idx: i64,
    pub spike_indices: Vec<i64>,
    pub regions: Vec<RegionFit>,
    pub merged_pairs: Vec<(usize, usize)>,
    pub net_factor: f64,
}

/// Index and value of the maximum count; ties break to the earliest index.
pub fn peak(ts: &TimeSeries) -> Result<(usize, u64)> {
    if ts.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut best = (0usize, ts.counts[0]);
    for (i, &c) in ts.counts.iter().enumerate().skip(1) {
        if c > best.1 {
            best = (i, c);
        }
    }
    Ok(best)
}

/// The post-peak window, ending just before the first run of at least
/// `sustain_k` consecutive buckets below `threshold_frac * peak`. A shorter
/// dip does not end the window; with no such run the window reaches the
/// series end.
pub fn extract_decay_window(
    ts: &TimeSeries,
    peak_idx: usize,
    threshold_frac: f64,
    sustain_k: usize,
) -> Result<Vec<WindowPoint>> {
    let peak_value = ts.counts[peak_idx] as f64;
    let threshold = threshold_frac * peak_value;
    let tail = &ts.counts[peak_idx + 1..];
    let mut end = tail.len(); // exclusive, in tail coordinates
    let mut run = 0usize;
    for (i, &c) in tail.iter().enumerate() {
        if (c as f64) < threshold {
            run += 1;
            if run == sustain_k {
                end = i + 1 - sustain_k;
                break;
            }
        } else {
            run = 0;
        }
    }
    if end < 3 {
        return Err(Error::InsufficientDecayData);
    }
    Ok(tail[..end]
        .iter()
        .enumerate()
        .map(|(i, &c)| WindowPoint {
            t: i as i64 + 1,
            chi: c as f64,
        })
        .collect())
}

/// Delete sub-event spikes: a maximal run of at most `max_width` points
/// where every point exceeds `ratio_theta` times the larger boundary
/// neighbor. A run touching the window edge has no surge-and-return shape
/// and is never a spike. Surviving points keep their original `t`.
pub fn remove_spikes(
    window: &[WindowPoint],
    ratio_theta: f64,
    max_width: usize,
) -> (Vec<WindowPoint>, Vec<i64>) {
    let n = window.len();
    let mut spikes = Vec::new();
    let mut keep = vec![true; n];
    let mut i = 0usize;
    while i < n {
        let mut found = 0usize;
        for width in (1..=max_width.min(n - i)).rev() {
            if i == 0 || i + width >= n {
                continue;
            }
            let boundary = window[i - 1].chi.max(window[i + width].chi);
            if window[i..i + width]
                .iter()
                .all(|p| p.chi > ratio_theta * boundary)
            {
                found = width;
                break;
            }
        }
        if found > 0 {
            for p in &window[i..i + found] {
                spikes.push(p.t);
            }
            for slot in &mut keep[i..i + found] {
                *slot = false;
            }
            i += found;
        } else {
            i += 1;
        }
    }
    let cleaned = window
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(p, _)| *p)
        .collect();
    (cleaned, spikes)
}

/// Ordinary least squares of `chi` on `ln(t)`. A constant series fits
/// exactly with slope zero and R^2 defined as 1.
pub fn fit_log(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let mut distinct = points.iter().map(|p| p.0).collect::<Vec<_>>();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    Ok(fit_log_unchecked(points))
}

fn fit_log_unchecked(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if ss_tot == 0.0 {
        return (0.0, mean_y, 1.0);
    }
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (x - mean_x) * (p.1 - mean_y))
        .sum();
    if sxx == 0.0 {
        return (0.0, mean_y, 1.0);
    }
    let alpha = sxy / sxx;
    let beta = mean_y - alpha * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (p.1 - (alpha * x + beta)).powi(2))
        .sum();
    let r2 = (1.0 - ss_res / ss_tot).clamp(0.0, 1.0);
    (alpha, beta, r2)
}

fn contribution(alpha: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else {
        -alpha / beta
    }
}

fn region_weight(points: &[WindowPoint], weighting: Weighting) -> f64 {
    let start = points[0].t;
    let end = points[points.len() - 1].t;
    match weighting {
        Weighting::BucketLength => (end - start + 1) as f64,
        Weighting::PointCount => points.len() as f64,
        Weighting::ActivityMass => points.iter().map(|p| p.chi).sum(),
    }
}

// Fit for regions too short for the three-point OLS path: one point or two
// points fit exactly.
fn fit_tiny(points: &[(f64, f64)]) -> (f64, f64, f64) {
    match points {
        [(_, y)] => (0.0, *y, 1.0),
        [(x1, y1), (x2, y2)] if x1 != x2 => {
            let alpha = (y2 - y1) / (x2.ln() - x1.ln());
            let beta = y1 - alpha * x1.ln();
            (alpha, beta, 1.0)
        }
        _ => {
            let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
            (0.0, mean, 1.0)
        }
    }
}

fn make_region(points: &[WindowPoint], cfg: &DecayConfig, flagged: bool) -> RegionFit {
    // Each region is fitted in its own local log-time, t = 1 at region start.
    let start = points[0].t;
    let local: Vec<(f64, f64)> = points
        .iter()
        .map(|p| ((p.t - start + 1) as f64, p.chi))
        .collect();
    let (alpha, beta, r2) = if local.len() >= 3 {
        fit_log_unchecked(&local)
    } else {
        fit_tiny(&local)
    };
    RegionFit {
        start_idx: start,
        end_idx: points[points.len() - 1].t,
        alpha,
        beta,
        r2,
        contribution: contribution(alpha, beta),
        weight: region_weight(points, cfg.weighting),
        flagged,
    }
}

/// Recursively split the window at its temporal midpoint until every
/// region's log fit clears the R^2 gate or hits the minimum-length floor.
pub fn segment(window: &[WindowPoint], cfg: &DecayConfig) -> Result<Vec<RegionFit>> {
    if window.is_empty() {
        return Err(Error::InsufficientDecayData);
    }
    let mut regions = Vec::new();
    segment_rec(window, cfg, &mut regions);
    Ok(regions)
}

fn segment_rec(points: &[WindowPoint], cfg: &DecayConfig, out: &mut Vec<RegionFit>) {
    if points.len() < cfg.min_len {
        out.push(make_region(points, cfg, true));
        return;
    }
    let fit = make_region(points, cfg, false);
    if fit.r2 > cfg.r2_gate {
        out.push(fit);
        return;
    }
    let mid_t = (points[0].t + points[points.len() - 1].t) / 2;
    let split = points.partition_point(|p| p.t <= mid_t);
    if split == 0 || split == points.len() {
        out.push(RegionFit {
            flagged: true,
            ..fit
        });
        return;
    }
    segment_rec(&points[..split], cfg, out);
    segment_rec(&points[split..], cfg, out);
}

/// Merge adjacent decay/growth pairs (opposite-sign contributions) into one
/// region with the weighted-mean contribution, leftmost pair first, until no
/// such pair remains. Returns the final regions and the original adjacent
/// region indices joined at each merge.
pub fn merge_growth_pairs(regions: &[RegionFit]) -> (Vec<MergedRegion>, Vec<(usize, usize)>) {
    // (region, covered original index range)
    let mut work: Vec<(MergedRegion, (usize, usize))> = regions
        .iter()
        .enumerate()
        .map(|(i, r)| {
            (
                MergedRegion {
                    start_idx: r.start_idx,
                    end_idx: r.end_idx,
                    weight: r.weight,
                    contribution: r.contribution,
                },
                (i, i),
            )
        })
        .collect();
    let mut pairs = Vec::new();
    loop {
        let pos = work.windows(2).position(|w| {
            let (a, b) = (w[0].0.contribution, w[1].0.contribution);
            (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)
        });
        let Some(i) = pos else { break };
        let (right, right_span) = work.remove(i + 1);
        let (left, left_span) = work[i];
        let weight = left.weight + right.weight;
        let merged = MergedRegion {
            start_idx: left.start_idx,
            end_idx: right.end_idx,
            weight,
            contribution: (left.weight * left.contribution + right.weight * right.contribution)
                / weight,
        };
        pairs.push((left_span.1, right_span.0));
        work[i] = (merged, (left_span.0, right_span.1));
    }
    (work.into_iter().map(|(r, _)| r).collect(), pairs)
}

/// Weighted mean of region contributions.
pub fn net_decay_factor(regions: &[MergedRegion]) -> f64 {
    let total_weight: f64 = regions.iter().map(|r| r.weight).sum();
    if total_weight == 0.0 {
        return 0.0;
    }
    regions
        .iter()
        .map(|r| r.weight * r.contribution)
        .sum::<f64>()
        / total_weight
}

/// End-to-end pipeline: peak, window, spike removal, segmentation, merge,
/// net factor.
pub fn analyze_decay(ts: &TimeSeries, cfg: &DecayConfig) -> Result<DecayReport> {
    cfg.validate()?;
    let (peak_idx, peak_value) = peak(ts)?;
    let window = extract_decay_window(ts, peak_idx, cfg.threshold_frac, cfg.sustain_k)?;
    let window_end_idx = window[window.len() - 1].t;
    let (cleaned, spike_indices) = remove_spikes(&window, cfg.ratio_theta, cfg.max_width);
    if cleaned.is_empty() {
        return Err(Error::InsufficientDecayData);
    }
    let regions = segment(&cleaned, cfg)?;
    let (final_regions, merged_pairs) = merge_growth_pairs(&regions);
    let net_factor = net_decay_factor(&final_regions);
    Ok(DecayReport {
        peak_idx,
        peak_value,
        window_end_idx,
        spike_indices,
        regions,
        merged_pairs,
        net_factor,
    })
}
