//! Great-circle geometry and the precomputed station topology.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::BaseStation;
use crate::error::{Error, Result};

/// Mean Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Signal propagation speed used to turn distance into delay.
pub const PROPAGATION_SPEED_KM_PER_S: f64 = 3.0e5;

/// Default number of nearest stations averaged for the priority denominator.
pub const DEFAULT_K_NEAREST: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Self {
        Self { lat_deg, lon_deg }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat_deg) && (-180.0..=180.0).contains(&self.lon_deg)
    }
}

/// Haversine term `a` for two points given in degrees. Monotone in the
/// great-circle distance, so it can stand in for it when only ordering matters.
#[inline]
pub fn haversine_term(p1: GeoPoint, p2: GeoPoint) -> f64 {
    let lat1 = p1.lat_deg.to_radians();
    let lat2 = p2.lat_deg.to_radians();
    let dlat = lat2 - lat1;
    let dlon = (p2.lon_deg - p1.lon_deg).to_radians();
    let s_lat = (dlat / 2.0).sin();
    let s_lon = (dlon / 2.0).sin();
    s_lat * s_lat + lat1.cos() * lat2.cos() * s_lon * s_lon
}

/// Great-circle distance in km on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_km(p1: GeoPoint, p2: GeoPoint) -> f64 {
    let a = haversine_term(p1, p2).clamp(0.0, 1.0);
    let c = 2.0 * a.sqrt().atan2((1.0 - a).sqrt());
    EARTH_RADIUS_KM * c
}

/// One-way propagation delay in milliseconds for a distance in km.
pub fn delay_ms_from_km(d_km: f64) -> f64 {
    d_km / PROPAGATION_SPEED_KM_PER_S * 1000.0
}

/// Immutable geometry of an instance. Stations are addressed by their
/// position in `stations`; `BaseStation::id` is only a label.
#[derive(Debug, Clone)]
pub struct Topology {
    pub stations: Vec<BaseStation>,
    pub d_th_km: f64,
    pub k_nearest: usize,
    dist: Vec<f64>,
    adj: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
    dof: Vec<usize>,
    avg_dist_k: Vec<f64>,
}

impl Topology {
    pub fn build(stations: Vec<BaseStation>, d_th_km: f64, k_nearest: usize) -> Result<Self> {
        Self::validate(&stations, d_th_km, k_nearest)?;
        let n = stations.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = haversine_km(stations[i].location, stations[j].location);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Self::assemble(stations, dist, d_th_km, k_nearest))
    }

    fn validate(stations: &[BaseStation], d_th_km: f64, k_nearest: usize) -> Result<()> {
        if stations.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(d_th_km > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "distance threshold must be positive, got {d_th_km}"
            )));
        }
        if k_nearest == 0 {
            return Err(Error::InvalidParameter(
                "k_nearest must be at least 1".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(stations.len());
        for s in stations {
            if !seen.insert(s.id) {
                return Err(Error::DuplicateId(s.id));
            }
            if !s.location.is_valid() {
                return Err(Error::InvalidParameter(format!(
                    "station {} has out-of-range coordinates {:?}",
                    s.id, s.location
                )));
            }
            if !(s.workload >= 0.0) || !s.workload.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "station {} has invalid workload {}",
                    s.id, s.workload
                )));
            }
        }

        Ok(())
    }

    /// Builds a topology over an explicit row-major distance matrix (km)
    /// instead of station coordinates. Locations in `stations` are kept as
    /// labels only.
    pub fn from_distances(
        stations: Vec<BaseStation>,
        dist: Vec<f64>,
        d_th_km: f64,
        k_nearest: usize,
    ) -> Result<Self> {
        Self::validate(&stations, d_th_km, k_nearest)?;
        let n = stations.len();
        if dist.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = dist[i * n + j];
                if !(d >= 0.0) || d != dist[j * n + i] {
                    return Err(Error::InvalidParameter(format!(
                        "distance matrix is not symmetric and nonnegative at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::assemble(stations, dist, d_th_km, k_nearest))
    }

    fn assemble(
        stations: Vec<BaseStation>,
        dist: Vec<f64>,
        d_th_km: f64,
        k_nearest: usize,
    ) -> Self {
        let n = stations.len();
        let adj: Vec<bool> = dist.iter().map(|&d| d <= d_th_km).collect();

        let mut neighbors = Vec::with_capacity(n);
        for i in 0..n {
            let row = &dist[i * n..(i + 1) * n];
            let mut nb: Vec<usize> = (0..n).filter(|&j| adj[i * n + j]).collect();
            nb.sort_by(|&a, &b| {
                // self always leads, even against a co-located station
                (a != i)
                    .cmp(&(b != i))
                    .then(row[a].total_cmp(&row[b]))
                    .then(stations[a].id.cmp(&stations[b].id))
            });
            neighbors.push(nb);
        }
        let dof = neighbors.iter().map(|nb| nb.len() - 1).collect();

        let take = k_nearest.min(n - 1);
        let mut avg_dist_k = Vec::with_capacity(n);
        let mut scratch = Vec::with_capacity(n);
        for i in 0..n {
            if take == 0 {
                avg_dist_k.push(0.0);
                continue;
            }
            scratch.clear();
            scratch.extend((0..n).filter(|&j| j != i).map(|j| dist[i * n + j]));
            scratch.select_nth_unstable_by(take - 1, f64::total_cmp);
            let sum: f64 = scratch[..take].iter().sum();
            avg_dist_k.push(sum / take as f64);
        }

        Self {
            stations,
            d_th_km,
            k_nearest,
            dist,
            adj,
            neighbors,
            dof,
            avg_dist_k,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.stations.len()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n() + j]
    }

    #[inline]
    pub fn dist_row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.dist[i * n..(i + 1) * n]
    }

    #[inline]
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n() + j]
    }

    /// Stations within the threshold of `i`, nearest first, `i` itself leading.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    #[inline]
    pub fn dof(&self, i: usize) -> usize {
        self.dof[i]
    }

    #[inline]
    pub fn avg_dist_k(&self, i: usize) -> f64 {
        self.avg_dist_k[i]
    }

    #[inline]
    pub fn workload(&self, i: usize) -> f64 {
        self.stations[i].workload
    }

    pub fn workloads(&self) -> Vec<f64> {
        self.stations.iter().map(|s| s.workload).collect()
    }

    pub fn total_workload(&self) -> f64 {
        self.stations.iter().map(|s| s.workload).sum()
    }

    /// Position of the station carrying `id`, if any.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.stations.iter().position(|s| s.id == id)
    }
}

/// Builds a [`Topology`]; see [`Topology::build`].
pub fn build_topology(
    stations: Vec<BaseStation>,
    d_th_km: f64,
    k_nearest: usize,
) -> Result<Topology> {
    Topology::build(stations, d_th_km, k_nearest)
}
