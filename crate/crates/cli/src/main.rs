mod args;
mod config;
mod failure;
mod output;
mod runner;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use mec_placer::dataset::{
    ingest_records, preprocess, read_records, read_stations, synthesize, PreprocessParams,
};
use mec_placer::{feasibility_check, metrics, BaseStation, HyperParams, Topology};

use crate::args::{Cli, Command, CompareArgs, EvaluateArgs, IngestArgs, RunArgs, SynthArgs};
use crate::config::{load_instance, synth_params, RunConfig};
use crate::failure::Failure;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mec-placer: {e}");
            e.exit_code()
        }
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<(), Failure> {
    if a.n < 2 {
        return Err(Failure::Config(format!(
            "--n must be at least 2, got {}",
            a.n
        )));
    }
    let stations = synthesize(&synth_params(a.n, a.seed, &a.shape))?;
    output::write_station_csv(&a.out, &stations)
}

fn cmd_ingest(a: &IngestArgs) -> Result<(), Failure> {
    let f =
        File::open(&a.input).map_err(|e| Failure::Config(format!("{}: {e}", a.input.display())))?;
    let mut stations = ingest_records(&read_records(BufReader::new(f))?)?;
    if !a.raw {
        let params = PreprocessParams {
            capacity_max: a.cap,
            outlier_radius_km: a.outlier_km,
            min_neighbors: a.min_neighbors,
        };
        stations = preprocess(&stations, params)?;
    }
    output::write_station_csv(&a.out, &stations)
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let cfg = RunConfig::from_args(a)?;
    let stations = prepare(a, &cfg)?;
    execute(
        &a.out_dir,
        stations,
        &cfg,
        runner::thread_limit()?,
        false,
        false,
    )
}

fn cmd_compare(a: &CompareArgs) -> Result<(), Failure> {
    let cfg = RunConfig::from_args(&a.run)?;
    if cfg.algorithms.len() < 2 {
        return Err(Failure::Config(
            "compare needs at least two algorithms".into(),
        ));
    }
    let threads = runner::thread_limit()?;
    let Some(sweep) = &a.sweep else {
        let stations = prepare(&a.run, &cfg)?;
        return execute(&a.run.out_dir, stations, &cfg, threads, a.timing, true);
    };

    let (param, values) = parse_sweep(sweep)?;
    let mut configs = Vec::with_capacity(values.len());
    for v in values {
        let mut c = cfg.clone();
        match param {
            SweepParam::Threshold => c.d_th_km = v,
            SweepParam::Capacity => c.capacity_max = v,
        }
        c.validate()?;
        configs.push((format!("{}_{v}", param.label()), c));
    }
    let stations = prepare(&a.run, &cfg)?;
    for (sub, c) in configs {
        c.check_instance(&stations)?;
        execute(
            &a.run.out_dir.join(sub),
            stations.clone(),
            &c,
            threads,
            a.timing,
            true,
        )?;
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), Failure> {
    let open = |p: &Path| {
        File::open(p)
            .map(BufReader::new)
            .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
    };
    let stations = read_stations(open(&a.input)?)?;
    let file: output::PlacementFile = serde_json::from_reader(open(&a.placement)?)
        .map_err(|e| Failure::Config(format!("{}: {e}", a.placement.display())))?;
    let topo = Topology::build(stations, file.d_th_km, a.k_nearest)?;
    let placement = file.to_placement(&topo)?;
    let hp = HyperParams::with_threshold(file.d_th_km, file.capacity_max);
    let violations = feasibility_check(&placement, &topo, &hp);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        return Err(Failure::Config(format!(
            "placement violates {} constraint(s)",
            violations.len()
        )));
    }
    let report = metrics(&placement, &topo)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// Loads the instance, validates it, and saves the exact stations used.
fn prepare(a: &RunArgs, cfg: &RunConfig) -> Result<Vec<BaseStation>, Failure> {
    let stations = load_instance(&a.instance, cfg.seed)?;
    cfg.check_instance(&stations)?;
    output::ensure_dir(&a.out_dir)?;
    output::write_station_csv(&a.out_dir.join("stations.csv"), &stations)?;
    Ok(stations)
}

fn execute(
    dir: &Path,
    stations: Vec<BaseStation>,
    cfg: &RunConfig,
    threads: usize,
    timing: bool,
    tabulate: bool,
) -> Result<(), Failure> {
    output::ensure_dir(dir)?;
    let topo = Topology::build(stations, cfg.d_th_km, cfg.k_nearest)?;
    let outcomes = runner::solve_all(&topo, cfg, threads, timing)?;
    for o in &outcomes {
        output::write_outcome(dir, o, &topo, cfg.ga)?;
    }
    if tabulate {
        output::write_comparison(dir, &outcomes)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SweepParam {
    Threshold,
    Capacity,
}

impl SweepParam {
    fn label(self) -> &'static str {
        match self {
            SweepParam::Threshold => "dth",
            SweepParam::Capacity => "cap",
        }
    }
}

fn parse_sweep(s: &str) -> Result<(SweepParam, Vec<f64>), Failure> {
    let bad = |m: String| Failure::Config(format!("--sweep `{s}`: {m}"));
    let (key, list) = s
        .split_once('=')
        .ok_or_else(|| bad("expected `param=v1,v2,…`".into()))?;
    let param = match key.trim() {
        "dth" => SweepParam::Threshold,
        "cap" => SweepParam::Capacity,
        other => return Err(bad(format!("unknown parameter `{other}` (use dth or cap)"))),
    };
    let values: Vec<f64> = list
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("`{v}`: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(bad("no values".into()));
    }
    Ok((param, values))
}
