//! Gazetteer-based point assignment and geographic share statistics.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{GeoPoint, PostRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    City,
    State,
    Country,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lat >= self.lat_min && p.lat <= self.lat_max && p.lon >= self.lon_min && p.lon <= self.lon_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub name: String,
    pub kind: RegionKind,
    pub bbox: BoundingBox,
    pub center: GeoPoint,
    pub population_rank: Option<u32>,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    pub entries: Vec<GazetteerEntry>,
}

/// CSV row schema:
/// name,kind,lat_min,lat_max,lon_min,lon_max,center_lat,center_lon,population_rank,parent
#[derive(Debug, Deserialize)]
struct GazetteerRow {
    name: String,
    kind: RegionKind,
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
    center_lat: f64,
    center_lon: f64,
    #[serde(default)]
    population_rank: Option<u32>,
    #[serde(default)]
    parent: Option<String>,
}

impl Gazetteer {
    pub fn load<R: BufRead>(input: R) -> Result<Gazetteer> {
        let mut reader = csv::Reader::from_reader(input);
        let mut entries = Vec::new();
        let mut ranks_seen = BTreeMap::new();
        for row in reader.deserialize::<GazetteerRow>() {
            let row = row.map_err(|e| Error::BadGazetteerEntry {
                name: String::new(),
                msg: e.to_string(),
            })?;
            let bbox = BoundingBox {
                lat_min: row.lat_min,
                lat_max: row.lat_max,
                lon_min: row.lon_min,
                lon_max: row.lon_max,
            };
            if bbox.lat_min > bbox.lat_max || bbox.lon_min > bbox.lon_max {
                return Err(Error::BadGazetteerEntry {
                    name: row.name,
                    msg: "bounding box not well-ordered".into(),
                });
            }
            let center = GeoPoint {
                lat: row.center_lat,
                lon: row.center_lon,
            };
            if !bbox.contains(center) {
                return Err(Error::BadGazetteerEntry {
                    name: row.name,
                    msg: "center outside bounding box".into(),
                });
            }
            if row.kind == RegionKind::City {
                if let Some(rank) = row.population_rank {
                    if let Some(prev) = ranks_seen.insert(rank, row.name.clone()) {
                        return Err(Error::BadGazetteerEntry {
                            name: row.name,
                            msg: format!("population rank {rank} already used by {prev}"),
                        });
                    }
                }
            }
            entries.push(GazetteerEntry {
                name: row.name,
                kind: row.kind,
                bbox,
                center,
                population_rank: row.population_rank,
                parent: row.parent.filter(|p| !p.is_empty()),
            });
        }
        Ok(Gazetteer { entries })
    }

    pub fn find(&self, name: &str) -> Option<&GazetteerEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Per-level assignment of one point. Missing levels are filled from the
/// matched child's parent chain when set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub country: Option<String>,
    pub state: Option<String>,
    pub city: Option<String>,
}

impl Assignment {
    pub fn is_unassigned(&self) -> bool {
        self.country.is_none() && self.state.is_none() && self.city.is_none()
    }
}

fn sq_dist(a: GeoPoint, b: GeoPoint) -> f64 {
    (a.lat - b.lat).powi(2) + (a.lon - b.lon).powi(2)
}

fn best_containing(
    gazetteer: &Gazetteer,
    kind: RegionKind,
    point: GeoPoint,
) -> Option<&GazetteerEntry> {
    gazetteer
        .entries
        .iter()
        .filter(|e| e.kind == kind && e.bbox.contains(point))
        .min_by(|a, b| {
            sq_dist(point, a.center)
                .total_cmp(&sq_dist(point, b.center))
                .then_with(|| a.name.cmp(&b.name))
        })
}

/// Assign a point to the containing city/state/country. Among overlapping
/// boxes of the same kind the nearest center wins; ties break by name.
pub fn assign(point: GeoPoint, gazetteer: &Gazetteer) -> Assignment {
    let city = best_containing(gazetteer, RegionKind::City, point);
    let state = best_containing(gazetteer, RegionKind::State, point);
    let country = best_containing(gazetteer, RegionKind::Country, point);

    let mut out = Assignment {
        country: country.map(|e| e.name.clone()),
        state: state.map(|e| e.name.clone()),
        city: city.map(|e| e.name.clone()),
    };
    // city implies its parent state, state implies its parent country
    if out.state.is_none() {
        if let Some(c) = city {
            out.state = c.parent.clone();
        }
    }
    if out.country.is_none() {
        if let Some(name) = &out.state {
            if let Some(s) = gazetteer.find(name) {
                out.country = s.parent.clone();
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryShare {
    pub count: u64,
    pub percent: f64,
}

/// Country shares over assigned records; percents sum to 100 over the
/// assigned set, unassigned counted separately.
pub fn country_share(
    records: &[PostRecord],
    gazetteer: &Gazetteer,
) -> Result<(BTreeMap<String, CountryShare>, u64)> {
    let points: Vec<GeoPoint> = records.iter().filter_map(|r| r.geo).collect();
    if points.is_empty() {
        return Err(Error::NoGeoRecords);
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut unassigned = 0u64;
    for p in points {
        match assign(p, gazetteer).country {
            Some(name) => *counts.entry(name).or_insert(0) += 1,
            None => unassigned += 1,
        }
    }
    let assigned_total: u64 = counts.values().sum();
    let shares = counts
        .into_iter()
        .map(|(name, count)| {
            let percent = if assigned_total == 0 {
                0.0
            } else {
                100.0 * count as f64 / assigned_total as f64
            };
            (name, CountryShare { count, percent })
        })
        .collect();
    Ok((shares, unassigned))
}

/// Percent of city-assigned records whose city ranks within the top `n`
/// most-populated cities.
pub fn top_city_share(records: &[PostRecord], gazetteer: &Gazetteer, n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut in_top = 0u64;
    let mut total = 0u64;
    for rec in records {
        let Some(p) = rec.geo else { continue };
        let Some(city) = assign(p, gazetteer).city else {
            continue;
        };
        total += 1;
        let rank = gazetteer.find(&city).and_then(|e| e.population_rank);
        if matches!(rank, Some(r) if r <= n) {
            in_top += 1;
        }
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * in_top as f64 / total as f64)
}

/// Count and percent of a team's geo-tagged records that fall in its home
/// region.
pub fn team_local_activity(
    team_records: &[PostRecord],
    gazetteer: &Gazetteer,
    home_region: &str,
) -> Result<(u64, f64)> {
    let entry = gazetteer
        .find(home_region)
        .ok_or_else(|| Error::UnknownRegion(home_region.to_string()))?;
    let points: Vec<GeoPoint> = team_records.iter().filter_map(|r| r.geo).collect();
    if points.is_empty() {
        return Err(Error::NoGeoRecords);
    }
    let local = points
        .iter()
        .filter(|p| {
            let a = assign(**p, gazetteer);
            let assigned = match entry.kind {
                RegionKind::City => a.city,
                RegionKind::State => a.state,
                RegionKind::Country => a.country,
            };
            assigned.as_deref() == Some(home_region)
        })
        .count() as u64;
    Ok((local, 100.0 * local as f64 / points.len() as f64))
}

/// Plot-ready density grid: counts per lat/lon cell of `cell_size` degrees.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub cell_size: f64,
    pub cells: BTreeMap<(i64, i64), u64>,
}

impl DensityGrid {
    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    /// CSV export: "lat_idx,lon_idx,count".
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "lat_idx,lon_idx,count")?;
        for (&(lat_idx, lon_idx), count) in &self.cells {
            writeln!(out, "{lat_idx},{lon_idx},{count}")?;
        }
        Ok(())
    }
}

pub fn grid_density(records: &[PostRecord], cell_size: f64) -> Result<DensityGrid> {
    if cell_size <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cell_size must be positive, got {cell_size}"
        )));
    }
    let mut cells: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    for rec in records {
        let Some(p) = rec.geo else { continue };
        let lat_idx = (p.lat / cell_size).floor() as i64;
        let lon_idx = (p.lon / cell_size).floor() as i64;
        *cells.entry((lat_idx, lon_idx)).or_insert(0) += 1;
    }
    Ok(DensityGrid { cell_size, cells })
}
