use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::head_cluster::{cluster_members, HeadRule};
use super::kmeans::{groups, kmeans};
use crate::geo::{GeoPoint, Topology};
use crate::mdp::HyperParams;
use crate::placement::Placement;

#[derive(Debug, Clone)]
pub struct KmtkOutcome {
    pub placement: Placement,
    /// Geometric clusters that satisfied the distance test.
    pub geo_clusters: Vec<Vec<usize>>,
}

/// K-means followed by Top-K: grow K until every cluster lies within the
/// threshold of its heaviest member, then run Top-K inside each cluster to
/// respect capacity.
pub fn kmtk(topo: &Topology, hp: &HyperParams, seed: u64) -> Placement {
    kmtk_detailed(topo, hp, seed).placement
}

pub fn kmtk_detailed(topo: &Topology, hp: &HyperParams, seed: u64) -> KmtkOutcome {
    let n = topo.n();
    let points: Vec<GeoPoint> = topo.stations.iter().map(|s| s.location).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut geo_clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for k in 1..n {
        let clustering = kmeans(&points, k, &mut rng);
        let g = groups(&clustering.labels, k);
        if g.iter().all(|members| within_heaviest(topo, hp, members)) {
            geo_clusters = g;
            break;
        }
    }

    let mut assignment = vec![usize::MAX; n];
    for members in &geo_clusters {
        cluster_members(topo, hp, HeadRule::TopK, members, &mut assignment, &mut rng);
    }
    KmtkOutcome {
        placement: Placement::from_assignment(assignment, hp.d_th_km, hp.capacity_max),
        geo_clusters,
    }
}

fn within_heaviest(topo: &Topology, hp: &HyperParams, members: &[usize]) -> bool {
    let head = *members
        .iter()
        .max_by(|&&a, &&b| {
            topo.workload(a)
                .total_cmp(&topo.workload(b))
                .then(topo.stations[b].id.cmp(&topo.stations[a].id))
        })
        .expect("nonempty cluster");
    members.iter().all(|&m| topo.dist(m, head) <= hp.d_th_km)
}
