//! Constraint checking, reported metrics and the exhaustive oracle for
//! small instances.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{delay_ms_from_km, Topology};
use crate::mdp::HyperParams;
use crate::placement::Placement;

/// Cost charged per opened server in the combination cost.
pub const SERVER_COST: f64 = 10.0;

/// Largest instance [`brute_force_optimal`] accepts.
pub const BRUTE_FORCE_MAX_N: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A server's summed workload exceeds capacity.
    Capacity {
        server: usize,
        load: f64,
        excess: f64,
    },
    /// A station is farther from its server than the threshold.
    Distance {
        station: usize,
        server: usize,
        distance_km: f64,
        excess_km: f64,
    },
    /// A station has no valid destination.
    Coverage { station: usize },
    /// A station points at something outside the server set.
    NotAServer { station: usize, destination: usize },
    /// A server offloads elsewhere instead of serving itself.
    ServerNotSelfAssigned { server: usize, destination: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Capacity {
                server,
                load,
                excess,
            } => {
                write!(
                    f,
                    "capacity: server {server} carries {load} ({excess} over)"
                )
            }
            Violation::Distance {
                station,
                server,
                distance_km,
                excess_km,
            } => write!(
                f,
                "distance: station {station} -> {server} is {distance_km} km ({excess_km} km over)"
            ),
            Violation::Coverage { station } => write!(f, "coverage: station {station} unassigned"),
            Violation::NotAServer {
                station,
                destination,
            } => write!(
                f,
                "assignment: station {station} -> {destination} which is not a server"
            ),
            Violation::ServerNotSelfAssigned {
                server,
                destination,
            } => write!(f, "assignment: server {server} offloads to {destination}"),
        }
    }
}

/// Lists every violated placement constraint under `hp`'s threshold and
/// capacity. Empty means feasible.
pub fn feasibility_check(p: &Placement, topo: &Topology, hp: &HyperParams) -> Vec<Violation> {
    check_limits(p, topo, hp.d_th_km, hp.capacity_max)
}

fn check_limits(p: &Placement, topo: &Topology, d_th_km: f64, capacity_max: f64) -> Vec<Violation> {
    let n = topo.n();
    let mut out = Vec::new();
    let mut load = vec![0.0; n];

    for station in 0..n {
        let Some(&dest) = p.assignment.get(station) else {
            out.push(Violation::Coverage { station });
            continue;
        };
        if dest >= n {
            out.push(Violation::Coverage { station });
            continue;
        }
        if !p.es_set.contains(&dest) {
            out.push(Violation::NotAServer {
                station,
                destination: dest,
            });
        }
        let d = topo.dist(station, dest);
        if d > d_th_km {
            out.push(Violation::Distance {
                station,
                server: dest,
                distance_km: d,
                excess_km: d - d_th_km,
            });
        }
        load[dest] += topo.workload(station);
    }
    for &server in &p.es_set {
        if server >= n {
            continue;
        }
        if let Some(&dest) = p.assignment.get(server) {
            if dest != server {
                out.push(Violation::ServerNotSelfAssigned {
                    server,
                    destination: dest,
                });
            }
        }
        if load[server] > capacity_max {
            out.push(Violation::Capacity {
                server,
                load: load[server],
                excess: load[server] - capacity_max,
            });
        }
    }
    // extra entries beyond n cover nothing real
    for station in n..p.assignment.len() {
        out.push(Violation::Coverage { station });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub k: usize,
    pub total_distance_km: f64,
    /// Mean station-to-server distance.
    pub avg_delay_km: f64,
    pub avg_delay_ms: f64,
    pub combination_cost: f64,
}

/// Delay and cost figures for a feasible placement.
pub fn metrics(p: &Placement, topo: &Topology) -> Result<MetricsReport> {
    let violations = check_limits(p, topo, p.d_th_km, p.capacity_max);
    if !violations.is_empty() {
        return Err(Error::InfeasiblePlacement(violations.len()));
    }
    Ok(metrics_unchecked(p, topo))
}

pub(crate) fn metrics_unchecked(p: &Placement, topo: &Topology) -> MetricsReport {
    let n = p.n();
    let k = p.k();
    let total_distance_km: f64 = p
        .assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| topo.dist(i, a))
        .sum();
    let avg_delay_km = if n == 0 {
        0.0
    } else {
        total_distance_km / n as f64
    };
    MetricsReport {
        n,
        k,
        total_distance_km,
        avg_delay_km,
        avg_delay_ms: delay_ms_from_km(avg_delay_km),
        combination_cost: combination_cost(total_distance_km, k),
    }
}

#[inline]
pub fn combination_cost(total_distance_km: f64, k: usize) -> f64 {
    total_distance_km + SERVER_COST * k as f64
}

/// Exhaustive search over every assignment in which each station picks
/// one of its neighbors. Returns the cheapest feasible placement; ties go
/// to fewer servers, then the lexicographically smallest assignment.
/// Fails if some station is heavier than a server's capacity.
pub fn brute_force_optimal(topo: &Topology, hp: &HyperParams) -> Result<Placement> {
    let n = topo.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    if let Some(i) = (0..n).find(|&i| topo.workload(i) > hp.capacity_max) {
        return Err(Error::NoFeasibleAction {
            station: i,
            workload: topo.workload(i),
            capacity: hp.capacity_max,
        });
    }
    let choices: Vec<&[usize]> = (0..n).map(|i| topo.neighbors(i)).collect();
    let mut digits = vec![0usize; n];
    let mut genes = vec![0usize; n];
    let mut load = vec![0.0; n];
    let mut best: Option<(f64, usize, Vec<usize>)> = None;

    'outer: loop {
        for i in 0..n {
            genes[i] = choices[i][digits[i]];
        }
        if let Some((cost, k)) = evaluate(&genes, topo, hp, &mut load) {
            let better = match &best {
                None => true,
                Some((bc, bk, ba)) => {
                    cost < *bc || (cost == *bc && (k < *bk || (k == *bk && genes < *ba)))
                }
            };
            if better {
                best = Some((cost, k, genes.clone()));
            }
        }
        // odometer increment
        for i in (0..n).rev() {
            digits[i] += 1;
            if digits[i] < choices[i].len() {
                continue 'outer;
            }
            digits[i] = 0;
        }
        break;
    }

    let (_, _, assignment) = best.expect("all-self assignment is always enumerated");
    Ok(Placement::from_assignment(
        assignment,
        hp.d_th_km,
        hp.capacity_max,
    ))
}

fn evaluate(
    genes: &[usize],
    topo: &Topology,
    hp: &HyperParams,
    load: &mut [f64],
) -> Option<(f64, usize)> {
    load.fill(0.0);
    let mut k = 0;
    let mut dist = 0.0;
    for (i, &g) in genes.iter().enumerate() {
        if genes[g] != g {
            return None;
        }
        if g == i {
            k += 1;
        }
        let d = topo.dist(i, g);
        if d > hp.d_th_km {
            return None;
        }
        dist += d;
        load[g] += topo.workload(i);
        if load[g] > hp.capacity_max {
            return None;
        }
    }
    Some((combination_cost(dist, k), k))
}
