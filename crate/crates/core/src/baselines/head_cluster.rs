use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geo::Topology;
use crate::mdp::HyperParams;
use crate::placement::Placement;

/// How the next cluster head is chosen among unassigned stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeadRule {
    /// Heaviest workload.
    TopK,
    /// Most neighbors within the threshold.
    TopDoF,
    /// Uniformly at random.
    Random,
}

/// Greedy clustering: pick a head, hand it its nearest unassigned
/// neighbors until the next one would overflow capacity, remove the
/// cluster and repeat.
pub fn head_cluster(topo: &Topology, hp: &HyperParams, rule: HeadRule, seed: u64) -> Placement {
    let n = topo.n();
    let members: Vec<usize> = (0..n).collect();
    let mut assignment = vec![usize::MAX; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cluster_members(topo, hp, rule, &members, &mut assignment, &mut rng);
    Placement::from_assignment(assignment, hp.d_th_km, hp.capacity_max)
}

/// Runs the head-cluster procedure over `members` only, writing into
/// `assignment`. Stations outside `members` are ignored.
pub(crate) fn cluster_members<R: Rng>(
    topo: &Topology,
    hp: &HyperParams,
    rule: HeadRule,
    members: &[usize],
    assignment: &mut [usize],
    rng: &mut R,
) {
    let n = topo.n();
    let mut eligible = vec![false; n];
    for &m in members {
        eligible[m] = true;
    }
    let mut remaining: Vec<usize> = members.to_vec();
    remaining.sort_unstable();

    while !remaining.is_empty() {
        let head = match rule {
            HeadRule::TopK => best_by(&remaining, topo, |i| topo.workload(i)),
            HeadRule::TopDoF => best_by(&remaining, topo, |i| topo.dof(i) as f64),
            HeadRule::Random => remaining[rng.random_range(0..remaining.len())],
        };
        eligible[head] = false;
        assignment[head] = head;
        let mut load = topo.workload(head);
        for &j in topo.neighbors(head) {
            if !eligible[j] {
                continue;
            }
            let w = topo.workload(j);
            if load + w > hp.capacity_max {
                break;
            }
            eligible[j] = false;
            assignment[j] = head;
            load += w;
        }
        remaining.retain(|&i| eligible[i]);
    }
}

/// Largest key wins; equal keys go to the smaller station id.
fn best_by(cands: &[usize], topo: &Topology, key: impl Fn(usize) -> f64) -> usize {
    *cands
        .iter()
        .max_by(|&&a, &&b| {
            key(a)
                .total_cmp(&key(b))
                .then(topo.stations[b].id.cmp(&topo.stations[a].id))
        })
        .expect("nonempty candidate list")
}
