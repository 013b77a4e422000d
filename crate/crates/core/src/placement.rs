use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// A complete design: which stations host servers and where every
/// station's workload goes. Indices are positions in the topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub es_set: BTreeSet<usize>,
    pub assignment: Vec<usize>,
    pub d_th_km: f64,
    pub capacity_max: f64,
}

impl Placement {
    /// Derives the server set from the assignment targets.
    pub fn from_assignment(assignment: Vec<usize>, d_th_km: f64, capacity_max: f64) -> Self {
        let es_set = assignment.iter().copied().collect();
        Self {
            es_set,
            assignment,
            d_th_km,
            capacity_max,
        }
    }

    /// Every station serves itself.
    pub fn all_self(n: usize, d_th_km: f64, capacity_max: f64) -> Self {
        Self::from_assignment((0..n).collect(), d_th_km, capacity_max)
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn k(&self) -> usize {
        self.es_set.len()
    }

    /// Members of each server, in station order.
    pub fn clusters(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> =
            self.es_set.iter().map(|&s| (s, Vec::new())).collect();
        for (i, &a) in self.assignment.iter().enumerate() {
            if let Ok(pos) = out.binary_search_by_key(&a, |(s, _)| *s) {
                out[pos].1.push(i);
            }
        }
        out
    }
}
