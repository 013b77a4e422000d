//! The offloading environment walked by the learning agents: priorities,
//! step penalties, feasible action lists and the per-episode state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Topology;

/// Priorities below this are treated as zero.
pub const MIN_PRIORITY: f64 = 1e-9;
/// Replacement for `1/Pr` when the priority is (near) zero.
pub const MAX_INVERSE_PRIORITY: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub episodes: usize,
    /// Penalty surcharge for opening a new server. Must exceed `d_th_km`.
    pub fixed_value: f64,
    pub d_th_km: f64,
    pub capacity_max: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self::with_threshold(9.0, 150.0)
    }
}

impl HyperParams {
    /// Defaults for a given threshold and capacity; `fixed_value` is one
    /// km above the threshold.
    pub fn with_threshold(d_th_km: f64, capacity_max: f64) -> Self {
        Self {
            alpha: 0.4,
            gamma: 0.9,
            lambda: 0.0,
            episodes: 2000,
            fixed_value: d_th_km + 1.0,
            d_th_km,
            capacity_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if self.episodes == 0 {
            return bad("episodes must be at least 1".into());
        }
        if !(self.d_th_km > 0.0) {
            return bad(format!(
                "distance threshold must be positive, got {}",
                self.d_th_km
            ));
        }
        if !(self.fixed_value > self.d_th_km) {
            return bad(format!(
                "fixed_value {} must exceed the distance threshold {}",
                self.fixed_value, self.d_th_km
            ));
        }
        if !(self.capacity_max > 0.0) {
            return bad(format!(
                "capacity must be positive, got {}",
                self.capacity_max
            ));
        }
        Ok(())
    }
}

/// Exploration rate for episode `t` (0-based).
pub fn epsilon(t: usize) -> f64 {
    (9.0 / (t as f64 + 100.0)).min(1.0)
}

/// `(workload + DoF) / mean distance to the k nearest stations`.
pub fn priority(i: usize, topo: &Topology) -> f64 {
    let avg = topo.avg_dist_k(i);
    let num = topo.workload(i) + topo.dof(i) as f64;
    if avg > 0.0 {
        num / avg
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// `1/Pr`, clamped for degenerate stations.
pub fn inverse_priority(pr: f64) -> f64 {
    if pr < MIN_PRIORITY {
        MAX_INVERSE_PRIORITY
    } else {
        1.0 / pr
    }
}

pub fn priorities(topo: &Topology) -> Vec<f64> {
    (0..topo.n()).map(|i| priority(i, topo)).collect()
}

/// Mutable state of one episode.
#[derive(Debug, Clone)]
pub struct EpisodeContext {
    es_list: Vec<usize>,
    is_server: Vec<bool>,
    wl: Vec<f64>,
    forbidden: Vec<bool>,
    assignment: Vec<Option<usize>>,
    capacity_max: f64,
}

impl EpisodeContext {
    pub fn new(n: usize, capacity_max: f64) -> Self {
        Self {
            es_list: Vec::new(),
            is_server: vec![false; n],
            wl: vec![0.0; n],
            forbidden: vec![false; n],
            assignment: vec![None; n],
            capacity_max,
        }
    }

    pub fn reset(&mut self) {
        for &s in &self.es_list {
            self.is_server[s] = false;
            self.wl[s] = 0.0;
        }
        self.es_list.clear();
        self.forbidden.fill(false);
        self.assignment.fill(None);
    }

    pub fn capacity_max(&self) -> f64 {
        self.capacity_max
    }

    /// Edge servers in opening order.
    pub fn es_list(&self) -> &[usize] {
        &self.es_list
    }

    #[inline]
    pub fn is_server(&self, j: usize) -> bool {
        self.is_server[j]
    }

    #[inline]
    pub fn is_forbidden(&self, j: usize) -> bool {
        self.forbidden[j]
    }

    /// Accumulated workload of server `j`, or `None` if `j` is not a server.
    pub fn server_load(&self, j: usize) -> Option<f64> {
        self.is_server[j].then_some(self.wl[j])
    }

    pub fn wl_map(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.es_list.iter().map(|&s| (s, self.wl[s]))
    }

    pub fn forbidden(&self) -> impl Iterator<Item = usize> + '_ {
        self.forbidden
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    /// Checks the context invariants, including workload conservation.
    /// Linear in `n`.
    pub fn check_invariants(&self, topo: &Topology) -> std::result::Result<(), String> {
        let mut listed = vec![false; self.is_server.len()];
        for &s in &self.es_list {
            if listed[s] {
                return Err(format!("server {s} listed twice"));
            }
            listed[s] = true;
            if self.forbidden[s] {
                return Err(format!("server {s} is also forbidden"));
            }
            if self.wl[s] > self.capacity_max {
                return Err(format!(
                    "server {s} carries {} > {}",
                    self.wl[s], self.capacity_max
                ));
            }
        }
        if listed != self.is_server {
            return Err("server flags disagree with the server list".into());
        }
        let mut assigned_load = 0.0;
        for (i, a) in self.assignment.iter().enumerate() {
            if let Some(a) = *a {
                if !self.is_server[a] {
                    return Err(format!("station {i} assigned to non-server {a}"));
                }
                assigned_load += topo.workload(i);
            }
        }
        let pending: f64 = self
            .es_list
            .iter()
            .filter(|&&s| self.assignment[s].is_none())
            .map(|&s| topo.workload(s))
            .sum();
        let carried: f64 = self.wl_map().map(|(_, w)| w).sum();
        let tol = 1e-9 * (1.0 + carried.abs());
        if (assigned_load + pending - carried).abs() > tol {
            return Err(format!(
                "workload not conserved: assigned {assigned_load} + pending {pending} != carried {carried}"
            ));
        }
        Ok(())
    }
}

/// Step penalty for station `i` offloading to `a`:
/// distance, plus `fixed_value` if `a` is not yet a server, plus `1/Pr_a`.
pub fn penalty(
    i: usize,
    a: usize,
    ctx: &EpisodeContext,
    topo: &Topology,
    hp: &HyperParams,
) -> Result<f64> {
    if !topo.adjacent(i, a) {
        return Err(Error::NotANeighbor {
            station: i,
            action: a,
        });
    }
    Ok(penalty_unchecked(
        i,
        a,
        ctx,
        topo,
        hp.fixed_value,
        inverse_priority(priority(a, topo)),
    ))
}

#[inline]
pub(crate) fn penalty_unchecked(
    i: usize,
    a: usize,
    ctx: &EpisodeContext,
    topo: &Topology,
    fixed_value: f64,
    inv_pr_a: f64,
) -> f64 {
    let z = if ctx.is_server(a) { 0.0 } else { 1.0 };
    topo.dist(i, a) + fixed_value * z + inv_pr_a
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeasibleActions {
    /// Existing servers in range with room for the station.
    pub pa: Vec<usize>,
    /// Neighbors that could be opened as new servers, nearest first.
    pub nei: Vec<usize>,
}

/// Computes the possible-action list and the new-server candidates for an
/// unassigned station.
pub fn feasible_actions(
    i: usize,
    ctx: &EpisodeContext,
    topo: &Topology,
) -> Result<FeasibleActions> {
    let mut out = FeasibleActions::default();
    feasible_actions_into(i, ctx, topo, &mut out)?;
    Ok(out)
}

pub(crate) fn feasible_actions_into(
    i: usize,
    ctx: &EpisodeContext,
    topo: &Topology,
    out: &mut FeasibleActions,
) -> Result<()> {
    let cap = ctx.capacity_max;
    let load = topo.workload(i);
    if load > cap {
        return Err(Error::NoFeasibleAction {
            station: i,
            workload: load,
            capacity: cap,
        });
    }
    out.pa.clear();
    out.nei.clear();
    for &j in &ctx.es_list {
        if topo.adjacent(i, j) && cap - ctx.wl[j] >= load {
            out.pa.push(j);
        }
    }
    for &j in topo.neighbors(i) {
        if ctx.forbidden[j] || ctx.is_server[j] {
            continue;
        }
        if j == i || load + topo.workload(j) <= cap {
            out.nei.push(j);
        }
    }
    Ok(())
}

/// Records station `i` offloading to `a` and updates servers, loads and
/// the forbidden set. A server opened on behalf of an unvisited station
/// reserves that station's own load immediately.
pub fn apply_action(ctx: &mut EpisodeContext, i: usize, a: usize, topo: &Topology) -> Result<()> {
    if ctx.assignment[i].is_some() {
        return Err(Error::InvalidParameter(format!(
            "station {i} is already assigned"
        )));
    }
    if a != i && (ctx.forbidden[a] || (ctx.assignment[a].is_some() && !ctx.is_server[a])) {
        return Err(Error::InvalidParameter(format!(
            "station {a} already offloaded and cannot serve {i}"
        )));
    }
    let load_i = topo.workload(i);
    let new_load = if !ctx.is_server[a] {
        let own = if a != i && ctx.assignment[a].is_none() {
            topo.workload(a)
        } else {
            0.0
        };
        load_i + own
    } else if a != i {
        ctx.wl[a] + load_i
    } else {
        // visiting a server opened earlier: its load is already reserved
        ctx.wl[a]
    };
    if new_load > ctx.capacity_max {
        return Err(Error::CapacityExceeded {
            server: a,
            load: new_load,
            capacity: ctx.capacity_max,
        });
    }
    if !ctx.is_server[a] {
        ctx.es_list.push(a);
        ctx.is_server[a] = true;
    }
    ctx.wl[a] = new_load;
    if a != i {
        ctx.forbidden[i] = true;
    }
    ctx.assignment[i] = Some(a);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BaseStation;
    use crate::geo::GeoPoint;

    pub(crate) fn topo_from(dist: &[&[f64]], loads: &[f64], d_th: f64) -> Topology {
        let n = loads.len();
        let stations = (0..n)
            .map(|i| BaseStation {
                id: i as u64,
                location: GeoPoint::new(0.0, 0.0),
                workload: loads[i],
            })
            .collect();
        let flat = dist.iter().flat_map(|r| r.iter().copied()).collect();
        Topology::from_distances(stations, flat, d_th, 15).unwrap()
    }

    fn five_station(loads: &[f64]) -> Topology {
        topo_from(
            &[
                &[0., 5., 8., 9., 4.],
                &[5., 0., 3., 17., 2.],
                &[8., 3., 0., 10., 14.],
                &[9., 17., 10., 0., 20.],
                &[4., 2., 14., 20., 0.],
            ],
            loads,
            7.0,
        )
    }

    #[test]
    fn epsilon_schedule() {
        assert_eq!(epsilon(0), 0.09);
        assert_eq!(epsilon(800), 0.01);
        assert_eq!(epsilon(8900), 0.001);
    }

    #[test]
    fn inverse_priority_is_clamped() {
        assert_eq!(inverse_priority(0.0), MAX_INVERSE_PRIORITY);
        assert_eq!(inverse_priority(50.0), 0.02);
    }

    #[test]
    fn priority_from_components() {
        // station 0 of the five-station example: DoF 2, nearest others 4,5,8,9
        let topo = five_station(&[100.0, 1.0, 1.0, 1.0, 1.0]);
        let avg = (4.0 + 5.0 + 8.0 + 9.0) / 4.0;
        assert_eq!(priority(0, &topo), (100.0 + 2.0) / avg);
    }

    #[test]
    fn penalty_terms() {
        let topo = topo_from(&[&[0., 4.], &[4., 0.]], &[10.0, 10.0], 9.0);
        let hp = HyperParams::default();
        let mut ctx = EpisodeContext::new(2, 150.0);
        let inv = inverse_priority(priority(1, &topo));
        let p_new = penalty(0, 1, &ctx, &topo, &hp).unwrap();
        assert!((p_new - (4.0 + 10.0 + inv)).abs() < 1e-12);
        apply_action(&mut ctx, 1, 1, &topo).unwrap();
        let p_old = penalty(0, 1, &ctx, &topo, &hp).unwrap();
        assert!((p_old - (4.0 + inv)).abs() < 1e-12);
        assert!((p_new - p_old - hp.fixed_value).abs() < 1e-12);
    }

    #[test]
    fn penalty_rejects_non_neighbor() {
        let topo = five_station(&[1.0; 5]);
        let ctx = EpisodeContext::new(5, 150.0);
        assert!(matches!(
            penalty(0, 3, &ctx, &topo, &HyperParams::default()),
            Err(Error::NotANeighbor {
                station: 0,
                action: 3
            })
        ));
    }

    #[test]
    fn first_station_sees_sorted_neighbors() {
        let topo = five_station(&[10.0; 5]);
        let ctx = EpisodeContext::new(5, 150.0);
        let fa = feasible_actions(0, &ctx, &topo).unwrap();
        assert!(fa.pa.is_empty());
        assert_eq!(fa.nei, vec![0, 4, 1]);
    }

    #[test]
    fn full_server_is_not_possible() {
        let topo = topo_from(
            &[&[0., 2., 2.], &[2., 0., 2.], &[2., 2., 0.]],
            &[20.0, 120.0, 20.0],
            9.0,
        );
        let mut ctx = EpisodeContext::new(3, 150.0);
        // station 2 opens 1, reserving 20 + 120
        apply_action(&mut ctx, 2, 1, &topo).unwrap();
        assert_eq!(ctx.server_load(1), Some(140.0));
        let fa = feasible_actions(0, &ctx, &topo).unwrap();
        assert!(!fa.pa.contains(&1));
    }

    #[test]
    fn new_server_capacity_filter() {
        let topo = topo_from(
            &[&[0., 1., 1.], &[1., 0., 1.], &[1., 1., 0.]],
            &[100.0, 60.0, 40.0],
            9.0,
        );
        let ctx = EpisodeContext::new(3, 150.0);
        let fa = feasible_actions(0, &ctx, &topo).unwrap();
        assert_eq!(fa.nei, vec![0, 2]);
        let heavy = topo_from(&[&[0., 1.], &[1., 0.]], &[200.0, 1.0], 9.0);
        assert!(matches!(
            feasible_actions(0, &EpisodeContext::new(2, 150.0), &heavy),
            Err(Error::NoFeasibleAction { .. })
        ));
    }

    #[test]
    fn self_selection_opens_server() {
        let topo = topo_from(&[&[0., 1.], &[1., 0.]], &[30.0, 40.0], 9.0);
        let mut ctx = EpisodeContext::new(2, 150.0);
        apply_action(&mut ctx, 0, 0, &topo).unwrap();
        assert_eq!(ctx.es_list(), &[0]);
        assert_eq!(ctx.server_load(0), Some(30.0));
        assert_eq!(ctx.forbidden().count(), 0);
        ctx.check_invariants(&topo).unwrap();
    }

    #[test]
    fn remote_selection_reserves_server_load() {
        let topo = topo_from(&[&[0., 1.], &[1., 0.]], &[30.0, 40.0], 9.0);
        let mut ctx = EpisodeContext::new(2, 150.0);
        apply_action(&mut ctx, 0, 1, &topo).unwrap();
        assert_eq!(ctx.server_load(1), Some(70.0));
        assert!(ctx.is_forbidden(0));
        ctx.check_invariants(&topo).unwrap();
        // later visit of 1 is forced onto itself and adds nothing
        apply_action(&mut ctx, 1, 1, &topo).unwrap();
        assert_eq!(ctx.server_load(1), Some(70.0));
        assert_eq!(ctx.assignment(), &[Some(1), Some(1)]);
        ctx.check_invariants(&topo).unwrap();
    }

    #[test]
    fn forbidden_station_never_offered() {
        let topo = topo_from(
            &[&[0., 1., 1.], &[1., 0., 1.], &[1., 1., 0.]],
            &[50.0, 50.0, 120.0],
            9.0,
        );
        let mut ctx = EpisodeContext::new(3, 150.0);
        apply_action(&mut ctx, 0, 1, &topo).unwrap();
        // 2 cannot join 1 (100 + 120 > 150) and may not pick the forbidden 0
        let fa = feasible_actions(2, &ctx, &topo).unwrap();
        assert!(fa.pa.is_empty());
        assert_eq!(fa.nei, vec![2]);
    }

    #[test]
    fn apply_action_rejects_overflow() {
        let topo = topo_from(&[&[0., 1.], &[1., 0.]], &[100.0, 100.0], 9.0);
        let mut ctx = EpisodeContext::new(2, 150.0);
        assert!(matches!(
            apply_action(&mut ctx, 0, 1, &topo),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn hyperparams_validation() {
        assert!(HyperParams::default().validate().is_ok());
        assert_eq!(HyperParams::default().fixed_value, 10.0);
        let mut hp = HyperParams {
            fixed_value: 9.0,
            ..HyperParams::default()
        };
        assert!(hp.validate().is_err());
        hp = HyperParams::default();
        hp.alpha = 0.0;
        assert!(hp.validate().is_err());
        hp = HyperParams::default();
        hp.lambda = 1.5;
        assert!(hp.validate().is_err());
    }
}
