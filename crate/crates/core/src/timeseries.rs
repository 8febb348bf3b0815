//! Hour-aligned activity series and derived views.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PostRecord;

pub const HOUR: i64 = 3600;
pub const DAY: i64 = 86_400;

/// Bucketed activity counts. `origin` is in shifted (local) time and is
/// aligned to a bucket boundary; `counts[i]` covers
/// `[origin + i*w, origin + (i+1)*w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub origin: i64,
    pub bucket_width: i64,
    pub tz_offset: i64,
    pub counts: Vec<u64>,
}

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// UTC start of bucket `i`.
    pub fn bucket_start_utc(&self, i: usize) -> i64 {
        self.origin - self.tz_offset + i as i64 * self.bucket_width
    }

    /// CSV export: header "bucket_start_utc,count", one row per bucket.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bucket_start_utc,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{}", self.bucket_start_utc(i), c)?;
        }
        Ok(())
    }
}

/// Count records into fixed-width buckets. Timestamps are shifted by
/// `tz_offset` before alignment; gaps are zero-filled.
pub fn bucketize(records: &[PostRecord], bucket_width: i64, tz_offset: i64) -> Result<TimeSeries> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if bucket_width <= 0 {
        return Err(Error::InvalidParameter(format!(
            "bucket_width must be positive, got {bucket_width}"
        )));
    }
    let min_shifted = records
        .iter()
        .map(|r| r.timestamp + tz_offset)
        .min()
        .unwrap();
    let max_shifted = records
        .iter()
        .map(|r| r.timestamp + tz_offset)
        .max()
        .unwrap();
    let origin = floor_div(min_shifted, bucket_width) * bucket_width;
    let len = (floor_div(max_shifted, bucket_width) - floor_div(min_shifted, bucket_width)) as usize + 1;
    let mut counts = vec![0u64; len];
    for rec in records {
        let shifted = rec.timestamp + tz_offset;
        let idx = floor_div(shifted - origin, bucket_width) as usize;
        counts[idx] += 1;
    }
    Ok(TimeSeries {
        origin,
        bucket_width,
        tz_offset,
        counts,
    })
}

/// Aggregate into wider buckets. `new_width` must be a multiple of the
/// current width; mass is conserved exactly.
pub fn rebucket(ts: &TimeSeries, new_width: i64) -> Result<TimeSeries> {
    if new_width <= 0 || new_width % ts.bucket_width != 0 {
        return Err(Error::InvalidParameter(format!(
            "new width {new_width} is not a multiple of {}",
            ts.bucket_width
        )));
    }
    let origin = floor_div(ts.origin, new_width) * new_width;
    let last = ts.origin + (ts.counts.len() as i64 - 1) * ts.bucket_width;
    let len = (floor_div(last, new_width) - floor_div(ts.origin, new_width)) as usize + 1;
    let mut counts = vec![0u64; len];
    for (i, c) in ts.counts.iter().enumerate() {
        let start = ts.origin + i as i64 * ts.bucket_width;
        let idx = floor_div(start - origin, new_width) as usize;
        counts[idx] += c;
    }
    Ok(TimeSeries {
        origin,
        bucket_width: new_width,
        tz_offset: ts.tz_offset,
        counts,
    })
}

/// Day-wise view of an hourly series: one 24-hour column per selected day
/// plus the mean hourly profile over those days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DaywiseOverlay {
    pub day_indices: Vec<usize>,
    /// `matrix[d][h]` = count at hour `h` of selected day `d`.
    pub matrix: Vec<[u64; 24]>,
    pub profile: [f64; 24],
}

impl DaywiseOverlay {
    /// CSV export: "hour,day_<d>...,mean" with one row per hour of day.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        write!(out, "hour")?;
        for d in &self.day_indices {
            write!(out, ",day_{d}")?;
        }
        writeln!(out, ",mean")?;
        for h in 0..24 {
            write!(out, "{h}")?;
            for col in &self.matrix {
                write!(out, ",{}", col[h])?;
            }
            writeln!(out, ",{:.6}", self.profile[h])?;
        }
        Ok(())
    }
}

/// Number of local days the series touches. Day 0 is the day containing the
/// series origin, in the series' shifted time.
pub fn day_count(ts: &TimeSeries) -> usize {
    let last = ts.origin + (ts.counts.len() as i64 - 1) * ts.bucket_width;
    (floor_div(last, DAY) - floor_div(ts.origin, DAY)) as usize + 1
}

pub fn daywise_overlay(ts: &TimeSeries, day_indices: &[usize]) -> Result<DaywiseOverlay> {
    if ts.bucket_width != HOUR {
        return Err(Error::NotHourly(ts.bucket_width));
    }
    let days = day_count(ts);
    let day0 = floor_div(ts.origin, DAY);
    let mut matrix = Vec::with_capacity(day_indices.len());
    for &d in day_indices {
        if d >= days {
            return Err(Error::DayOutOfRange(d, days));
        }
        let day_start = (day0 + d as i64) * DAY;
        let mut col = [0u64; 24];
        for (h, slot) in col.iter_mut().enumerate() {
            let t = day_start + h as i64 * HOUR;
            let idx = floor_div(t - ts.origin, HOUR);
            if idx >= 0 && (idx as usize) < ts.counts.len() {
                *slot = ts.counts[idx as usize];
            }
        }
        matrix.push(col);
    }
    let mut profile = [0.0f64; 24];
    if !matrix.is_empty() {
        for h in 0..24 {
            profile[h] = matrix.iter().map(|c| c[h] as f64).sum::<f64>() / matrix.len() as f64;
        }
    }
    Ok(DaywiseOverlay {
        day_indices: day_indices.to_vec(),
        matrix,
        profile,
    })
}

/// Fraction of event activity attributable to a sub-event over a bucket
/// range of the event series. The sub-series is re-aligned by origin; event
/// and sub counts may overlap arbitrarily.
pub fn subevent_share(
    event: &TimeSeries,
    sub: &TimeSeries,
    window: std::ops::Range<usize>,
) -> Result<f64> {
    if event.bucket_width != sub.bucket_width {
        return Err(Error::InvalidParameter(format!(
            "bucket width mismatch: {} vs {}",
            event.bucket_width, sub.bucket_width
        )));
    }
    let shift = (sub.origin - sub.tz_offset) - (event.origin - event.tz_offset);
    if shift % event.bucket_width != 0 {
        return Err(Error::InvalidParameter(
            "sub-event series is not re-alignable to the event series".into(),
        ));
    }
    let offset = shift / event.bucket_width;
    let mut event_sum = 0u64;
    let mut sub_sum = 0u64;
    for i in window {
        event_sum += event.counts.get(i).copied().unwrap_or(0);
        let j = i as i64 - offset;
        if j >= 0 {
            sub_sum += sub.counts.get(j as usize).copied().unwrap_or(0);
        }
    }
    if event_sum == 0 {
        return Err(Error::ZeroEventActivity);
    }
    Ok(sub_sum as f64 / event_sum as f64)
}

/// Per-user post counts and the frequency-of-frequencies distribution.
pub fn per_user_counts(
    records: &[PostRecord],
) -> (BTreeMap<String, u64>, BTreeMap<u64, u64>) {
    let mut per_user: BTreeMap<String, u64> = BTreeMap::new();
    for rec in records {
        *per_user.entry(rec.user_id.clone()).or_insert(0) += 1;
    }
    let mut distribution: BTreeMap<u64, u64> = BTreeMap::new();
    for count in per_user.values() {
        *distribution.entry(*count).or_insert(0) += 1;
    }
    (per_user, distribution)
}
