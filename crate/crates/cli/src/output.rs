//! On-disk artifact formats. JSON for placements and metrics, CSV (LF line
//! endings) for traces and tables.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use mec_placer::baselines::GaParams;
use mec_placer::dataset::write_stations;
use mec_placer::{BaseStation, HyperParams, MetricsReport, Placement, Topology};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;
use crate::runner::Outcome;

/// A placement keyed by station id rather than topology index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementFile {
    pub algorithm: String,
    pub d_th_km: f64,
    pub capacity_max: f64,
    pub es_set: Vec<u64>,
    /// Station id → id of the server it offloads to.
    pub assignment: BTreeMap<u64, u64>,
}

impl PlacementFile {
    pub fn new(algorithm: &str, p: &Placement, topo: &Topology) -> Self {
        let id = |i: usize| topo.stations[i].id;
        Self {
            algorithm: algorithm.to_string(),
            d_th_km: p.d_th_km,
            capacity_max: p.capacity_max,
            es_set: p.es_set.iter().map(|&s| id(s)).collect(),
            assignment: p
                .assignment
                .iter()
                .enumerate()
                .map(|(i, &a)| (id(i), id(a)))
                .collect(),
        }
    }

    /// Maps ids back onto `topo` indices.
    pub fn to_placement(&self, topo: &Topology) -> Result<Placement, Failure> {
        let index = |id: u64| {
            topo.index_of(id)
                .ok_or_else(|| Failure::Config(format!("station {id} is not in the instance")))
        };
        let mut assignment = vec![usize::MAX; topo.n()];
        for (&from, &to) in &self.assignment {
            assignment[index(from)?] = index(to)?;
        }
        if let Some(i) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(Failure::Config(format!(
                "station {} has no assignment",
                topo.stations[i].id
            )));
        }
        Ok(Placement::from_assignment(
            assignment,
            self.d_th_km,
            self.capacity_max,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub episodes: usize,
    /// Path penalty of the emitted placement.
    pub best_path_cost: f64,
    /// Path penalty of the final greedy rollout.
    pub greedy_path_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub algorithm: String,
    pub seed: u64,
    /// Delays are averaged per station, not per request.
    pub delay_basis: String,
    #[serde(flatten)]
    pub metrics: MetricsReport,
    pub lambda: f64,
    pub hyperparameters: HyperParams,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub training: Option<TrainingSummary>,
    /// GA settings; the defaults are this tool's choice, not tuned values.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ga: Option<GaParams>,
}

impl MetricsFile {
    pub fn new(o: &Outcome, ga: GaParams) -> Self {
        Self {
            algorithm: o.algorithm.clone(),
            seed: o.seed,
            delay_basis: "per_station".into(),
            metrics: o.report.clone(),
            lambda: o.hp.lambda,
            hyperparameters: o.hp,
            training: o.solution.training.as_ref().map(|t| TrainingSummary {
                episodes: t.episodes_run,
                best_path_cost: t.best_cost,
                greedy_path_cost: t.greedy_cost,
            }),
            ga: (o.algorithm == "ga").then_some(ga),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, Failure> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?))
}

pub fn write_station_csv(path: &Path, stations: &[BaseStation]) -> Result<(), Failure> {
    let w = create(path)?;
    write_stations(w, stations)?;
    Ok(())
}

/// Writes `placement_<alg>.json`, `metrics_<alg>.json` and, for learning
/// agents, `cost_trace_<alg>.csv`.
pub fn write_outcome(
    dir: &Path,
    o: &Outcome,
    topo: &Topology,
    ga: GaParams,
) -> Result<(), Failure> {
    let name = &o.algorithm;
    write_json(
        &dir.join(format!("placement_{name}.json")),
        &PlacementFile::new(name, &o.solution.placement, topo),
    )?;
    write_json(
        &dir.join(format!("metrics_{name}.json")),
        &MetricsFile::new(o, ga),
    )?;
    if let Some(t) = &o.solution.training {
        let mut w = csv_writer(&dir.join(format!("cost_trace_{name}.csv")))?;
        w.write_record(["episode", "path_cost"])?;
        for (e, c) in t.cost_trace.iter().enumerate() {
            w.write_record([e.to_string(), c.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CompareRow<'a> {
    algorithm: &'a str,
    k: usize,
    avg_delay_km: f64,
    avg_delay_ms: f64,
    total_distance_km: f64,
    combination_cost: f64,
    /// Empty unless timing was requested.
    runtime_ms: Option<f64>,
}

/// Writes `compare.csv` and the long-format `cost_curves.csv`.
pub fn write_comparison(dir: &Path, outcomes: &[Outcome]) -> Result<(), Failure> {
    let mut w = csv_writer(&dir.join("compare.csv"))?;
    for o in outcomes {
        let m = &o.report;
        w.serialize(CompareRow {
            algorithm: &o.algorithm,
            k: m.k,
            avg_delay_km: m.avg_delay_km,
            avg_delay_ms: m.avg_delay_ms,
            total_distance_km: m.total_distance_km,
            combination_cost: m.combination_cost,
            runtime_ms: o.runtime_ms,
        })?;
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join("cost_curves.csv"))?;
    w.write_record(["algorithm", "episode", "path_cost"])?;
    for o in outcomes {
        if let Some(t) = &o.solution.training {
            for (e, c) in t.cost_trace.iter().enumerate() {
                w.write_record([o.algorithm.clone(), e.to_string(), c.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))
}
