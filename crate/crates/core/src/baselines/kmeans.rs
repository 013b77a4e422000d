//! Lat/lon k-means with great-circle membership, and the repetitive
//! K-means placement built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::{haversine_km, GeoPoint, Topology};
use crate::mdp::HyperParams;
use crate::placement::Placement;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Clone, Copy)]
struct Prepared {
    lat: f64,
    lon: f64,
    cos_lat: f64,
}

impl Prepared {
    fn new(p: GeoPoint) -> Self {
        let lat = p.lat_deg.to_radians();
        Self {
            lat,
            lon: p.lon_deg.to_radians(),
            cos_lat: lat.cos(),
        }
    }

    /// Haversine term; orders pairs exactly as the great-circle distance does.
    #[inline]
    fn term(&self, o: &Prepared) -> f64 {
        let s_lat = ((o.lat - self.lat) * 0.5).sin();
        let s_lon = ((o.lon - self.lon) * 0.5).sin();
        s_lat * s_lat + self.cos_lat * o.cos_lat * s_lon * s_lon
    }
}

#[derive(Debug, Clone)]
pub struct Clustering {
    /// Cluster index for each input point.
    pub labels: Vec<usize>,
    pub centroids: Vec<GeoPoint>,
    pub iterations: usize,
}

/// Lloyd's k-means over coordinates with k-means++ seeding. Centroids are
/// coordinate means; points join the centroid nearest on the sphere.
pub fn kmeans<R: Rng>(points: &[GeoPoint], k: usize, rng: &mut R) -> Clustering {
    assert!(k >= 1 && k <= points.len(), "k must lie in 1..=n");
    let prepared: Vec<Prepared> = points.iter().copied().map(Prepared::new).collect();
    let mut centroids = seed_plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let cents: Vec<Prepared> = centroids.iter().copied().map(Prepared::new).collect();
        let mut changed = false;
        for (p, label) in prepared.iter().zip(labels.iter_mut()) {
            let mut best = 0;
            let mut best_term = f64::INFINITY;
            for (c, cent) in cents.iter().enumerate() {
                let t = p.term(cent);
                if t < best_term {
                    best_term = t;
                    best = c;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l].0 += p.lat_deg;
            sums[l].1 += p.lon_deg;
            sums[l].2 += 1;
        }
        for (c, (slat, slon, cnt)) in sums.into_iter().enumerate() {
            // an emptied cluster keeps its previous centroid
            if cnt > 0 {
                centroids[c] = GeoPoint::new(slat / cnt as f64, slon / cnt as f64);
            }
        }
    }

    Clustering {
        labels,
        centroids,
        iterations,
    }
}

fn seed_plus_plus<R: Rng>(points: &[GeoPoint], k: usize, rng: &mut R) -> Vec<GeoPoint> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points
        .iter()
        .map(|&p| haversine_km(p, centroids[0]).powi(2))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // every point coincides with a centroid already
            rng.random_range(0..n)
        };
        let c = points[next];
        centroids.push(c);
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            let nd = haversine_km(*p, c).powi(2);
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// Groups point indices by label, dropping empty clusters.
pub(crate) fn groups(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut g = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        g[l].push(i);
    }
    g.retain(|c| !c.is_empty());
    g
}

/// Smallest number of servers the total workload could possibly fit in.
pub(crate) fn load_lower_bound(topo: &Topology, capacity_max: f64) -> usize {
    ((topo.total_workload() / capacity_max).ceil() as usize).max(1)
}

/// Increases K from the load lower bound until every cluster fits in one
/// server and lies within the threshold of its head (the member nearest
/// the centroid). Falls back to every station serving itself at K = n.
pub fn kmeans_repetitive(topo: &Topology, hp: &HyperParams, seed: u64) -> Placement {
    kmeans_repetitive_with_k(topo, hp, seed).0
}

/// Same as [`kmeans_repetitive`] but also reports the accepted K.
pub fn kmeans_repetitive_with_k(
    topo: &Topology,
    hp: &HyperParams,
    seed: u64,
) -> (Placement, usize) {
    let n = topo.n();
    let points: Vec<GeoPoint> = topo.stations.iter().map(|s| s.location).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for k in load_lower_bound(topo, hp.capacity_max)..n {
        let clustering = kmeans(&points, k, &mut rng);
        if let Some(assignment) = accept(topo, hp, &points, &clustering, k) {
            return (
                Placement::from_assignment(assignment, hp.d_th_km, hp.capacity_max),
                k,
            );
        }
    }
    (Placement::all_self(n, hp.d_th_km, hp.capacity_max), n)
}

fn accept(
    topo: &Topology,
    hp: &HyperParams,
    points: &[GeoPoint],
    clustering: &Clustering,
    k: usize,
) -> Option<Vec<usize>> {
    let mut assignment = vec![usize::MAX; topo.n()];
    for members in groups(&clustering.labels, k) {
        let load: f64 = members.iter().map(|&m| topo.workload(m)).sum();
        if load > hp.capacity_max {
            return None;
        }
        let centroid = clustering.centroids[clustering.labels[members[0]]];
        let head = *members
            .iter()
            .min_by(|&&a, &&b| {
                haversine_km(points[a], centroid)
                    .total_cmp(&haversine_km(points[b], centroid))
                    .then(topo.stations[a].id.cmp(&topo.stations[b].id))
            })
            .expect("nonempty cluster");
        for &m in &members {
            if topo.dist(m, head) > hp.d_th_km {
                return None;
            }
            assignment[m] = head;
        }
    }
    Some(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BaseStation;

    fn station(id: u64, lat: f64, lon: f64, w: f64) -> BaseStation {
        BaseStation {
            id,
            location: GeoPoint::new(lat, lon),
            workload: w,
        }
    }

    #[test]
    fn two_blobs_give_two_clusters() {
        let mut st = Vec::new();
        for i in 0..5 {
            st.push(station(i, 31.0 + 0.001 * i as f64, 121.0, 20.0));
        }
        for i in 0..5 {
            st.push(station(5 + i, 31.3 + 0.001 * i as f64, 121.3, 20.0));
        }
        let topo = Topology::build(st, 9.0, 15).unwrap();
        let (p, k) = kmeans_repetitive_with_k(&topo, &HyperParams::default(), 1);
        assert_eq!(k, 2);
        assert_eq!(p.k(), 2);
        assert!(p.assignment[..5].iter().all(|&a| a == p.assignment[0]));
        assert!(p.assignment[5..].iter().all(|&a| a == p.assignment[5]));
    }

    #[test]
    fn load_bound_forces_more_clusters() {
        // one tight blob carrying 2.4 servers' worth of load
        let st: Vec<BaseStation> = (0..12)
            .map(|i| {
                station(
                    i,
                    31.0 + 0.0005 * (i % 4) as f64,
                    121.0 + 0.0005 * (i / 4) as f64,
                    30.0,
                )
            })
            .collect();
        let topo = Topology::build(st, 9.0, 15).unwrap();
        let (p, k) = kmeans_repetitive_with_k(&topo, &HyperParams::default(), 4);
        assert!(k >= 3);
        assert!(p.k() >= 3);
    }

    #[test]
    fn kmeans_is_seeded() {
        let pts: Vec<GeoPoint> = (0..40)
            .map(|i| {
                GeoPoint::new(
                    31.0 + (i as f64 * 0.37).sin() * 0.1,
                    121.0 + (i as f64 * 0.11).cos() * 0.1,
                )
            })
            .collect();
        let a = kmeans(&pts, 4, &mut ChaCha8Rng::seed_from_u64(9));
        let b = kmeans(&pts, 4, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.labels, b.labels);
        assert!(a.iterations <= MAX_ITERATIONS);
    }
}
