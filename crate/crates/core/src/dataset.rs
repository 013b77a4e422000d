//! Station workloads: request-log ingestion, filtering, CSV I/O and a
//! synthetic instance generator.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: u64,
    pub location: GeoPoint,
    /// Peak daily requests.
    pub workload: f64,
}

/// One line of a request log: requests seen at a station on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestRecord {
    pub station_key: String,
    pub day: String,
    pub count: f64,
    pub location: GeoPoint,
}

const LOCATION_TOLERANCE_DEG: f64 = 1e-9;

/// Collapses request records into one station per key. Workload is the
/// largest per-day total; ids follow first appearance.
pub fn ingest_records(records: &[RequestRecord]) -> Result<Vec<BaseStation>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut locations: HashMap<&str, GeoPoint> = HashMap::new();
    let mut daily: HashMap<(&str, &str), f64> = HashMap::new();

    for r in records {
        if !(r.count >= 0.0) {
            return Err(Error::Parse(format!(
                "negative request count {} for station `{}`",
                r.count, r.station_key
            )));
        }
        let key = r.station_key.as_str();
        match locations.get(key) {
            Some(first) => {
                if (first.lat_deg - r.location.lat_deg).abs() > LOCATION_TOLERANCE_DEG
                    || (first.lon_deg - r.location.lon_deg).abs() > LOCATION_TOLERANCE_DEG
                {
                    return Err(Error::InconsistentLocation {
                        key: key.to_string(),
                        first: (first.lat_deg, first.lon_deg),
                        second: (r.location.lat_deg, r.location.lon_deg),
                    });
                }
            }
            None => {
                locations.insert(key, r.location);
                order.push(key);
            }
        }
        *daily.entry((key, r.day.as_str())).or_insert(0.0) += r.count;
    }

    let mut peak: HashMap<&str, f64> = HashMap::with_capacity(order.len());
    for ((key, _), total) in daily {
        let e = peak.entry(key).or_insert(0.0);
        if total > *e {
            *e = total;
        }
    }

    Ok(order
        .iter()
        .enumerate()
        .map(|(id, key)| BaseStation {
            id: id as u64,
            location: locations[key],
            workload: peak[key],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessParams {
    pub capacity_max: f64,
    pub outlier_radius_km: f64,
    pub min_neighbors: usize,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            capacity_max: 150.0,
            outlier_radius_km: 3.0,
            min_neighbors: 5,
        }
    }
}

/// Drops stations heavier than a single server can take, then drops
/// outliers with too few stations within `outlier_radius_km`. Outlier
/// removal repeats until no station falls below `min_neighbors`. Survivors
/// keep their order and get dense ids.
pub fn preprocess(stations: &[BaseStation], params: PreprocessParams) -> Result<Vec<BaseStation>> {
    if !(params.capacity_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "capacity_max must be positive, got {}",
            params.capacity_max
        )));
    }
    let mut kept: Vec<&BaseStation> = stations
        .iter()
        .filter(|s| s.workload <= params.capacity_max)
        .collect();

    loop {
        let counts: Vec<usize> = kept
            .iter()
            .map(|s| {
                kept.iter()
                    .filter(|o| {
                        !std::ptr::eq(*o, s)
                            && haversine_km(s.location, o.location) <= params.outlier_radius_km
                    })
                    .count()
            })
            .collect();
        let before = kept.len();
        let mut idx = 0;
        kept.retain(|_| {
            let keep = counts[idx] >= params.min_neighbors;
            idx += 1;
            keep
        });
        if kept.len() == before {
            break;
        }
    }

    if kept.is_empty() {
        return Err(Error::AllFiltered);
    }
    Ok(kept
        .into_iter()
        .enumerate()
        .map(|(id, s)| BaseStation {
            id: id as u64,
            ..s.clone()
        })
        .collect())
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
        (self.lat_min..=self.lat_max).contains(&p.lat_deg)
            && (self.lon_min..=self.lon_max).contains(&p.lon_deg)
    }
}

impl Default for BoundingBox {
    /// A 0.3° square over central Shanghai.
    fn default() -> Self {
        Self {
            lat_min: 31.08,
            lat_max: 31.38,
            lon_min: 121.32,
            lon_max: 121.62,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n: usize,
    pub seed: u64,
    pub bbox: BoundingBox,
    /// Inclusive integer workload range.
    pub workload_range: (u64, u64),
    pub cluster_count: usize,
}

impl SynthParams {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            ..Self::default()
        }
    }
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n: 100,
            seed: 0,
            bbox: BoundingBox::default(),
            workload_range: (5, 40),
            cluster_count: 6,
        }
    }
}

/// Generates stations scattered around `cluster_count` Gaussian blobs
/// inside the bounding box, with integer workloads drawn uniformly.
pub fn synthesize(params: &SynthParams) -> Result<Vec<BaseStation>> {
    let SynthParams {
        n,
        seed,
        bbox,
        workload_range: (lo, hi),
        cluster_count,
    } = *params;
    if n < 2 {
        return Err(Error::InvalidRange(format!(
            "need at least 2 stations, got {n}"
        )));
    }
    if lo > hi {
        return Err(Error::InvalidRange(format!(
            "workload range {lo}:{hi} is empty"
        )));
    }
    if cluster_count == 0 {
        return Err(Error::InvalidRange(
            "cluster_count must be at least 1".into(),
        ));
    }
    if !(bbox.lat_min < bbox.lat_max && bbox.lon_min < bbox.lon_max)
        || !GeoPoint::new(bbox.lat_min, bbox.lon_min).is_valid()
        || !GeoPoint::new(bbox.lat_max, bbox.lon_max).is_valid()
    {
        return Err(Error::InvalidRange(format!(
            "degenerate bounding box {bbox:?}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lat_span = bbox.lat_max - bbox.lat_min;
    let lon_span = bbox.lon_max - bbox.lon_min;
    let centers: Vec<GeoPoint> = (0..cluster_count)
        .map(|_| {
            GeoPoint::new(
                bbox.lat_min + lat_span * rng.random_range(0.15..0.85),
                bbox.lon_min + lon_span * rng.random_range(0.15..0.85),
            )
        })
        .collect();
    let spread_lat = Normal::new(0.0, lat_span / 6.0).expect("positive sigma");
    let spread_lon = Normal::new(0.0, lon_span / 6.0).expect("positive sigma");

    let mut out = Vec::with_capacity(n);
    for id in 0..n {
        let c = centers[rng.random_range(0..cluster_count)];
        let mut p = GeoPoint::new(
            c.lat_deg + spread_lat.sample(&mut rng),
            c.lon_deg + spread_lon.sample(&mut rng),
        );
        let mut tries = 0;
        while !bbox.contains(p) && tries < 32 {
            p = GeoPoint::new(
                c.lat_deg + spread_lat.sample(&mut rng),
                c.lon_deg + spread_lon.sample(&mut rng),
            );
            tries += 1;
        }
        p.lat_deg = p.lat_deg.clamp(bbox.lat_min, bbox.lat_max);
        p.lon_deg = p.lon_deg.clamp(bbox.lon_min, bbox.lon_max);
        let workload = rng.random_range(lo..=hi) as f64;
        out.push(BaseStation {
            id: id as u64,
            location: p,
            workload,
        });
    }
    Ok(out)
}

/// Reads a request log: header row, then
/// `station_key,day,count,"lat lon"` per line.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<RequestRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        if row.len() != 4 {
            return Err(Error::Parse(format!(
                "record {}: expected 4 fields, found {}",
                line + 1,
                row.len()
            )));
        }
        let count: f64 = row[2]
            .parse()
            .map_err(|_| Error::Parse(format!("record {}: bad count `{}`", line + 1, &row[2])))?;
        let location = parse_coordinate_pair(&row[3]).ok_or_else(|| {
            Error::Parse(format!("record {}: bad location `{}`", line + 1, &row[3]))
        })?;
        out.push(RequestRecord {
            station_key: row[0].to_string(),
            day: row[1].to_string(),
            count,
            location,
        });
    }
    Ok(out)
}

fn parse_coordinate_pair(s: &str) -> Option<GeoPoint> {
    let mut parts = s.split_whitespace();
    let lat = parts.next()?.parse().ok()?;
    let lon = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    let p = GeoPoint::new(lat, lon);
    p.is_valid().then_some(p)
}

#[derive(Debug, Serialize, Deserialize)]
struct StationRow {
    id: u64,
    lat: f64,
    lon: f64,
    workload: f64,
}

/// Writes `id,lat,lon,workload` with a header row.
pub fn write_stations<W: Write>(writer: W, stations: &[BaseStation]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for s in stations {
        wtr.serialize(StationRow {
            id: s.id,
            lat: s.location.lat_deg,
            lon: s.location.lon_deg,
            workload: s.workload,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_stations<R: Read>(reader: R) -> Result<Vec<BaseStation>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: StationRow = row?;
        let location = GeoPoint::new(row.lat, row.lon);
        if !location.is_valid() {
            return Err(Error::Parse(format!(
                "station {}: coordinates out of range",
                row.id
            )));
        }
        if !(row.workload >= 0.0) {
            return Err(Error::Parse(format!(
                "station {}: negative workload",
                row.id
            )));
        }
        out.push(BaseStation {
            id: row.id,
            location,
            workload: row.workload,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}
