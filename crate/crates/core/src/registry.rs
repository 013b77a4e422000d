//! Name-addressed registry of placement algorithms behind one trait.

use crate::baselines::{genetic, head_cluster, kmeans_repetitive, kmtk, GaParams, HeadRule};
use crate::error::{Error, Result};
use crate::geo::Topology;
use crate::learner::{train, Mode, TrainResult};
use crate::mdp::HyperParams;
use crate::placement::Placement;

/// What a solver hands back. Learning agents also report their training run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub placement: Placement,
    pub training: Option<TrainResult>,
}

impl From<Placement> for Solution {
    fn from(placement: Placement) -> Self {
        Self {
            placement,
            training: None,
        }
    }
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, topo: &Topology, hp: &HyperParams, seed: u64) -> Result<Solution>;
}

pub struct RlSolver {
    pub mode: Mode,
}

impl Solver for RlSolver {
    fn name(&self) -> &'static str {
        match self.mode {
            Mode::Qmc => "qmc",
            Mode::Tdmc => "tdmc",
        }
    }

    fn solve(&self, topo: &Topology, hp: &HyperParams, seed: u64) -> Result<Solution> {
        let result = train(topo, hp, seed, self.mode)?;
        Ok(Solution {
            placement: result.best_placement.clone(),
            training: Some(result),
        })
    }
}

pub struct HeadClusterSolver {
    pub rule: HeadRule,
}

impl Solver for HeadClusterSolver {
    fn name(&self) -> &'static str {
        match self.rule {
            HeadRule::TopK => "topk",
            HeadRule::TopDoF => "topdof",
            HeadRule::Random => "random",
        }
    }

    fn solve(&self, topo: &Topology, hp: &HyperParams, seed: u64) -> Result<Solution> {
        Ok(head_cluster(topo, hp, self.rule, seed).into())
    }
}

pub struct KMeansSolver;

impl Solver for KMeansSolver {
    fn name(&self) -> &'static str {
        "kmeans"
    }

    fn solve(&self, topo: &Topology, hp: &HyperParams, seed: u64) -> Result<Solution> {
        Ok(kmeans_repetitive(topo, hp, seed).into())
    }
}

pub struct KmtkSolver;

impl Solver for KmtkSolver {
    fn name(&self) -> &'static str {
        "kmtk"
    }

    fn solve(&self, topo: &Topology, hp: &HyperParams, seed: u64) -> Result<Solution> {
        Ok(kmtk(topo, hp, seed).into())
    }
}

pub struct GeneticSolver {
    pub params: GaParams,
}

impl Solver for GeneticSolver {
    fn name(&self) -> &'static str {
        "ga"
    }

    fn solve(&self, topo: &Topology, hp: &HyperParams, seed: u64) -> Result<Solution> {
        Ok(genetic(topo, hp, &self.params, seed).into())
    }
}

/// Names of the built-in algorithms, in registration order.
pub const BUILTIN: [&str; 8] = [
    "qmc", "tdmc", "topk", "topdof", "random", "kmeans", "kmtk", "ga",
];

pub struct SolverRegistry {
    solvers: Vec<Box<dyn Solver>>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::builtin(GaParams::default())
    }
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            solvers: Vec::new(),
        }
    }

    pub fn builtin(ga: GaParams) -> Self {
        let mut r = Self::empty();
        r.register(Box::new(RlSolver { mode: Mode::Qmc }));
        r.register(Box::new(RlSolver { mode: Mode::Tdmc }));
        r.register(Box::new(HeadClusterSolver {
            rule: HeadRule::TopK,
        }));
        r.register(Box::new(HeadClusterSolver {
            rule: HeadRule::TopDoF,
        }));
        r.register(Box::new(HeadClusterSolver {
            rule: HeadRule::Random,
        }));
        r.register(Box::new(KMeansSolver));
        r.register(Box::new(KmtkSolver));
        r.register(Box::new(GeneticSolver { params: ga }));
        r
    }

    /// Adds a solver, replacing any existing one with the same name.
    pub fn register(&mut self, solver: Box<dyn Solver>) {
        self.solvers.retain(|s| s.name() != solver.name());
        self.solvers.push(solver);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Solver> {
        self.solvers
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownAlgorithm(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.iter().map(|s| s.name())
    }
}

/// Per-algorithm seed: a stable hash of the name mixed into the global
/// seed, so one algorithm's stream never depends on which others run.
pub fn derive_seed(global: u64, name: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(global ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
