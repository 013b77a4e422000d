//! Tabular cost-minimizing agents: one-step Q-learning (QMC) and
//! backward-view TD(λ) with accumulating traces (TDMC).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::feasibility_check;
use crate::geo::Topology;
use crate::mdp::{
    apply_action, epsilon, feasible_actions_into, inverse_priority, penalty_unchecked, priorities,
    EpisodeContext, FeasibleActions, HyperParams,
};
use crate::placement::Placement;

/// Initial value for state-action pairs outside the threshold.
pub const NON_NEIGHBOR_Q: f64 = 1000.0;

/// Traces below this are dropped from the active set.
pub const TRACE_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Qmc,
    Tdmc,
}

/// `n × n` action values; rows are stations, columns destinations.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n: usize,
    q: Vec<f64>,
}

impl QTable {
    /// Zero for adjacent pairs, [`NON_NEIGHBOR_Q`] elsewhere.
    pub fn init(topo: &Topology) -> Self {
        let n = topo.n();
        let mut q = vec![NON_NEIGHBOR_Q; n * n];
        for i in 0..n {
            for &j in topo.neighbors(i) {
                q[i * n + j] = 0.0;
            }
        }
        Self { n, q }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.q[s * self.n + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.q[s * self.n..(s + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    /// Smallest value over the neighbor actions of `s_next`; zero for the
    /// terminal state (`None`).
    pub fn next_min(&self, topo: &Topology, s_next: Option<usize>) -> f64 {
        match s_next {
            None => 0.0,
            Some(s) => {
                let row = self.row(s);
                topo.neighbors(s)
                    .iter()
                    .map(|&a| row[a])
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Eligibility traces with a sparse list of the nonzero entries.
#[derive(Debug, Clone)]
pub struct TraceTable {
    n: usize,
    e: Vec<f64>,
    active: Vec<usize>,
}

impl TraceTable {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            e: vec![0.0; n * n],
            active: Vec::new(),
        }
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.e[s * self.n + a]
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    pub fn reset(&mut self) {
        for &idx in &self.active {
            self.e[idx] = 0.0;
        }
        self.active.clear();
    }
}

/// One-step cost-minimizing Q update.
pub fn q_update(
    q: &mut QTable,
    topo: &Topology,
    s: usize,
    a: usize,
    p: f64,
    s_next: Option<usize>,
    hp: &HyperParams,
) {
    let err = p + hp.gamma * q.next_min(topo, s_next) - q.get(s, a);
    let idx = s * q.n + a;
    q.q[idx] += hp.alpha * err;
}

/// Backward-view TD(λ) step: bump the trace of `(s, a)`, then move every
/// traced pair along the TD error and decay its trace by `γλ`.
#[allow(clippy::too_many_arguments)]
pub fn td_lambda_step(
    q: &mut QTable,
    e: &mut TraceTable,
    topo: &Topology,
    s: usize,
    a: usize,
    p: f64,
    s_next: Option<usize>,
    hp: &HyperParams,
) {
    let err = p + hp.gamma * q.next_min(topo, s_next) - q.get(s, a);
    let idx = s * e.n + a;
    if e.e[idx] == 0.0 {
        e.active.push(idx);
    }
    e.e[idx] += 1.0;

    let decay = hp.gamma * hp.lambda;
    let step = hp.alpha * err;
    let TraceTable {
        e: traces, active, ..
    } = e;
    active.retain(|&k| {
        q.q[k] += step * traces[k];
        traces[k] *= decay;
        if traces[k] < TRACE_CUTOFF {
            traces[k] = 0.0;
            false
        } else {
            true
        }
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub assignment: Vec<usize>,
    pub path_cost: f64,
}

/// Owns the learning state for one training run.
pub struct Agent<'t> {
    topo: &'t Topology,
    hp: HyperParams,
    mode: Mode,
    q: QTable,
    traces: TraceTable,
    ctx: EpisodeContext,
    inv_pr: Vec<f64>,
    actions: FeasibleActions,
    ids: Vec<u64>,
}

impl<'t> Agent<'t> {
    pub fn new(topo: &'t Topology, hp: HyperParams, mode: Mode) -> Result<Self> {
        let hp = effective_params(hp, mode);
        hp.validate()?;
        for i in 0..topo.n() {
            if topo.workload(i) > hp.capacity_max {
                return Err(Error::NoFeasibleAction {
                    station: i,
                    workload: topo.workload(i),
                    capacity: hp.capacity_max,
                });
            }
        }
        let n = topo.n();
        Ok(Self {
            topo,
            hp,
            mode,
            q: QTable::init(topo),
            traces: TraceTable::new(n),
            ctx: EpisodeContext::new(n, hp.capacity_max),
            inv_pr: priorities(topo).into_iter().map(inverse_priority).collect(),
            actions: FeasibleActions::default(),
            ids: topo.stations.iter().map(|s| s.id).collect(),
        })
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn hp(&self) -> &HyperParams {
        &self.hp
    }

    /// Walks stations `0..n` once. With `learn` off the tables are left
    /// untouched.
    pub fn run_episode<R: Rng>(
        &mut self,
        rng: &mut R,
        eps: f64,
        learn: bool,
    ) -> Result<EpisodeOutcome> {
        let topo = self.topo;
        let n = topo.n();
        self.ctx.reset();
        self.traces.reset();
        let mut path_cost = 0.0;

        for i in 0..n {
            let a = if self.ctx.is_server(i) {
                i
            } else {
                feasible_actions_into(i, &self.ctx, topo, &mut self.actions)?;
                let cands: &[usize] = if !self.actions.pa.is_empty() {
                    &self.actions.pa
                } else if !self.actions.nei.is_empty() {
                    &self.actions.nei
                } else {
                    std::slice::from_ref(&i)
                };
                select(&self.q, topo, &self.ids, i, cands, eps, rng)
            };
            debug_assert!(!self.ctx.is_forbidden(a));
            debug_assert!(topo.adjacent(i, a));

            let p = penalty_unchecked(i, a, &self.ctx, topo, self.hp.fixed_value, self.inv_pr[a]);
            let s_next = (i + 1 < n).then_some(i + 1);
            if learn {
                match self.mode {
                    Mode::Qmc => q_update(&mut self.q, topo, i, a, p, s_next, &self.hp),
                    Mode::Tdmc => td_lambda_step(
                        &mut self.q,
                        &mut self.traces,
                        topo,
                        i,
                        a,
                        p,
                        s_next,
                        &self.hp,
                    ),
                }
            }
            apply_action(&mut self.ctx, i, a, topo)?;
            path_cost += p;

            #[cfg(debug_assertions)]
            if let Err(msg) = self.ctx.check_invariants(topo) {
                panic!("episode state broken after station {i}: {msg}");
            }
        }

        let assignment: Vec<usize> = self
            .ctx
            .assignment()
            .iter()
            .map(|a| a.expect("every station visited"))
            .collect();
        debug_assert!(path_cost.is_finite());
        debug_assert!(self.q.values().iter().all(|v| v.is_finite()));
        Ok(EpisodeOutcome {
            assignment,
            path_cost,
        })
    }
}

/// ε-greedy choice among `cands`; the greedy pick is the lowest Q-value,
/// ties going to the nearer destination and then the smaller id.
fn select<R: Rng>(
    q: &QTable,
    topo: &Topology,
    ids: &[u64],
    s: usize,
    cands: &[usize],
    eps: f64,
    rng: &mut R,
) -> usize {
    let explore = rng.random::<f64>() < eps;
    if explore {
        return cands[rng.random_range(0..cands.len())];
    }
    let row = q.row(s);
    let dist = topo.dist_row(s);
    *cands
        .iter()
        .min_by(|&&x, &&y| {
            row[x]
                .total_cmp(&row[y])
                .then(dist[x].total_cmp(&dist[y]))
                .then(ids[x].cmp(&ids[y]))
        })
        .expect("candidate list is never empty")
}

fn effective_params(mut hp: HyperParams, mode: Mode) -> HyperParams {
    if mode == Mode::Qmc {
        hp.lambda = 0.0;
    }
    hp
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub mode: Mode,
    pub hp: HyperParams,
    pub best_placement: Placement,
    /// Path penalty of `best_placement`.
    pub best_cost: f64,
    /// Path penalty of every training episode.
    pub cost_trace: Vec<f64>,
    /// Path penalty of the closing ε = 0 rollout.
    pub greedy_cost: f64,
    pub episodes_run: usize,
    pub seed: u64,
}

/// Runs `hp.episodes` training episodes followed by one greedy rollout and
/// keeps the cheapest placement seen.
pub fn train(topo: &Topology, hp: &HyperParams, seed: u64, mode: Mode) -> Result<TrainResult> {
    let mut agent = Agent::new(topo, *hp, mode)?;
    let hp = agent.hp;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cost_trace = Vec::with_capacity(hp.episodes);
    let mut best: Option<EpisodeOutcome> = None;

    for t in 0..hp.episodes {
        let out = agent.run_episode(&mut rng, epsilon(t), true)?;
        cost_trace.push(out.path_cost);
        debug_check_feasible(topo, &hp, &out.assignment);
        if best.as_ref().is_none_or(|b| out.path_cost < b.path_cost) {
            best = Some(out);
        }
    }
    let greedy = agent.run_episode(&mut rng, 0.0, false)?;
    debug_check_feasible(topo, &hp, &greedy.assignment);
    let greedy_cost = greedy.path_cost;
    let best = match best {
        Some(b) if b.path_cost <= greedy.path_cost => b,
        _ => greedy,
    };

    Ok(TrainResult {
        mode,
        hp,
        best_placement: Placement::from_assignment(best.assignment, hp.d_th_km, hp.capacity_max),
        best_cost: best.path_cost,
        cost_trace,
        greedy_cost,
        episodes_run: hp.episodes,
        seed,
    })
}

#[inline]
fn debug_check_feasible(topo: &Topology, hp: &HyperParams, assignment: &[usize]) {
    if cfg!(debug_assertions) {
        let p = Placement::from_assignment(assignment.to_vec(), hp.d_th_km, hp.capacity_max);
        let v = feasibility_check(&p, topo, hp);
        assert!(
            v.is_empty(),
            "episode produced an infeasible placement: {}",
            v[0]
        );
    }
}
