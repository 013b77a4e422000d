//! Genetic search over neighbor-restricted assignment vectors with a
//! capacity repair pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evaluation::{combination_cost, SERVER_COST};
use crate::geo::Topology;
use crate::mdp::HyperParams;
use crate::placement::Placement;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 500,
            tournament: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.05,
        }
    }
}

/// Turns genes into an assignment: every gene target is a server and
/// servers serve themselves.
pub fn decode(genes: &[usize]) -> Vec<usize> {
    let mut is_server = vec![false; genes.len()];
    for &g in genes {
        is_server[g] = true;
    }
    genes
        .iter()
        .enumerate()
        .map(|(i, &g)| if is_server[i] { i } else { g })
        .collect()
}

/// Combination cost plus `10 × fixed_value` per overloaded server.
pub fn fitness(genes: &[usize], topo: &Topology, hp: &HyperParams) -> f64 {
    let assignment = decode(genes);
    let n = genes.len();
    let mut load = vec![0.0; n];
    let mut k = 0;
    let mut dist = 0.0;
    for (i, &a) in assignment.iter().enumerate() {
        if a == i {
            k += 1;
        }
        dist += topo.dist(i, a);
        load[a] += topo.workload(i);
    }
    let overloaded = (0..n)
        .filter(|&s| assignment[s] == s && load[s] > hp.capacity_max)
        .count();
    combination_cost(dist, k) + SERVER_COST * hp.fixed_value * overloaded as f64
}

/// Moves the farthest members off overloaded servers onto the nearest
/// server with room, or makes them serve themselves.
pub fn repair(mut assignment: Vec<usize>, topo: &Topology, hp: &HyperParams) -> Vec<usize> {
    let n = assignment.len();
    let mut load = vec![0.0; n];
    let mut servers: Vec<usize> = Vec::new();
    for (i, &a) in assignment.iter().enumerate() {
        load[a] += topo.workload(i);
        if a == i {
            servers.push(i);
        }
    }
    let overloaded: Vec<usize> = servers
        .iter()
        .copied()
        .filter(|&s| load[s] > hp.capacity_max)
        .collect();
    for s in overloaded {
        let mut members: Vec<usize> = (0..n).filter(|&i| i != s && assignment[i] == s).collect();
        members.sort_by(|&a, &b| topo.dist(b, s).total_cmp(&topo.dist(a, s)).then(a.cmp(&b)));
        for m in members {
            if load[s] <= hp.capacity_max {
                break;
            }
            let w = topo.workload(m);
            load[s] -= w;
            let target = servers
                .iter()
                .copied()
                .filter(|&t| {
                    t != s && topo.dist(m, t) <= hp.d_th_km && load[t] + w <= hp.capacity_max
                })
                .min_by(|&a, &b| topo.dist(m, a).total_cmp(&topo.dist(m, b)).then(a.cmp(&b)));
            let t = target.unwrap_or_else(|| {
                servers.push(m);
                m
            });
            assignment[m] = t;
            load[t] += w;
        }
    }
    assignment
}

/// Runs the GA and returns the cheapest repaired individual from the final
/// population and the best one ever seen.
pub fn genetic(topo: &Topology, hp: &HyperParams, params: &GaParams, seed: u64) -> Placement {
    let n = topo.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pop_size = params.population.max(2);
    let random_gene = |i: usize, rng: &mut ChaCha8Rng| {
        let nb = topo.neighbors(i);
        nb[rng.random_range(0..nb.len())]
    };

    let mut pop: Vec<Vec<usize>> = (0..pop_size)
        .map(|_| (0..n).map(|i| random_gene(i, &mut rng)).collect())
        .collect();
    let mut fit: Vec<f64> = pop.iter().map(|g| fitness(g, topo, hp)).collect();
    let (mut best_genes, mut best_fit) = fittest(&pop, &fit);

    for _ in 0..params.generations {
        let mut next: Vec<Vec<usize>> = Vec::with_capacity(pop_size);
        next.push(best_genes.clone());
        while next.len() < pop_size {
            let a = tournament(&fit, params.tournament, &mut rng);
            let b = tournament(&fit, params.tournament, &mut rng);
            let (mut c1, mut c2) = (pop[a].clone(), pop[b].clone());
            if n > 1 && rng.random::<f64>() < params.crossover_rate {
                let cut = rng.random_range(1..n);
                c1[cut..].copy_from_slice(&pop[b][cut..]);
                c2[cut..].copy_from_slice(&pop[a][cut..]);
            }
            for child in [&mut c1, &mut c2] {
                for (i, g) in child.iter_mut().enumerate() {
                    if rng.random::<f64>() < params.mutation_rate {
                        *g = random_gene(i, &mut rng);
                    }
                }
            }
            next.push(c1);
            if next.len() < pop_size {
                next.push(c2);
            }
        }
        pop = next;
        fit = pop.iter().map(|g| fitness(g, topo, hp)).collect();
        let (g, f) = fittest(&pop, &fit);
        if f < best_fit {
            best_genes = g;
            best_fit = f;
        }
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for genes in std::iter::once(&best_genes).chain(pop.iter()) {
        let assignment = repair(decode(genes), topo, hp);
        let cost = assignment_cost(&assignment, topo);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, assignment));
        }
    }
    let (_, assignment) = best.expect("population is nonempty");
    Placement::from_assignment(assignment, hp.d_th_km, hp.capacity_max)
}

fn assignment_cost(assignment: &[usize], topo: &Topology) -> f64 {
    let k = assignment
        .iter()
        .enumerate()
        .filter(|&(i, &a)| i == a)
        .count();
    let d: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| topo.dist(i, a))
        .sum();
    combination_cost(d, k)
}

fn fittest(pop: &[Vec<usize>], fit: &[f64]) -> (Vec<usize>, f64) {
    let (i, f) = fit
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty population");
    (pop[i].clone(), *f)
}

fn tournament<R: Rng>(fit: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..fit.len());
    for _ in 1..size.max(1) {
        let c = rng.random_range(0..fit.len());
        if fit[c] < fit[best] {
            best = c;
        }
    }
    best
}
