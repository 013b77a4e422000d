use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mec_placer::dataset::BoundingBox;

#[derive(Debug, Parser)]
#[command(
    name = "mec-placer",
    version,
    about = "Edge-server placement and base-station allocation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic station set as `id,lat,lon,workload` CSV.
    Synth(SynthArgs),
    /// Collapse a request log into a preprocessed station CSV.
    Ingest(IngestArgs),
    /// Run one or more algorithms and write placement, metrics and traces.
    Run(RunArgs),
    /// Run several algorithms on one instance and tabulate the results.
    Compare(CompareArgs),
    /// Check a saved placement against its instance and print its metrics.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// Inclusive integer workload range, `lo:hi`.
    #[arg(long, default_value = "5:40", value_parser = parse_range)]
    pub workload: (u64, u64),
    /// Number of Gaussian hot spots.
    #[arg(long, default_value_t = 6)]
    pub clusters: usize,
    /// `lat_min,lat_max,lon_min,lon_max` in degrees.
    #[arg(long, value_parser = parse_bbox)]
    pub bbox: Option<BoundingBox>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub shape: ShapeArgs,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Request log: header, then `station_key,day,count,"lat lon"`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Drop stations heavier than this.
    #[arg(long, default_value_t = 150.0)]
    pub cap: f64,
    #[arg(long, default_value_t = 3.0)]
    pub outlier_km: f64,
    #[arg(long, default_value_t = 5)]
    pub min_neighbors: usize,
    /// Skip capacity and outlier filtering.
    #[arg(long)]
    pub raw: bool,
}

/// Where the stations come from: a CSV file or the synthetic generator.
#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Station CSV (`id,lat,lon,workload`).
    #[arg(long = "in", conflicts_with = "n")]
    pub input: Option<PathBuf>,
    /// Synthesize this many stations instead of reading a file.
    #[arg(long, required_unless_present = "input")]
    pub n: Option<usize>,
    /// Generator seed; defaults to `--seed`.
    #[arg(long)]
    pub instance_seed: Option<u64>,
    #[command(flatten)]
    pub shape: ShapeArgs,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 2000)]
    pub episodes: usize,
    /// Distance threshold in km.
    #[arg(long, default_value_t = 9.0)]
    pub dth: f64,
    /// Server capacity in requests per day.
    #[arg(long, default_value_t = 150.0)]
    pub cap: f64,
    #[arg(long, default_value_t = 0.4)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// Trace decay for tdmc (default 0.4). qmc always uses 0.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// New-server surcharge; defaults to the threshold plus 1 km.
    #[arg(long)]
    pub fixed_value: Option<f64>,
    /// Stations averaged over for priority distances.
    #[arg(long, default_value_t = 15)]
    pub k_nearest: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub ga_population: usize,
    #[arg(long, default_value_t = 500)]
    pub ga_generations: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Comma-separated algorithm names.
    #[arg(long = "alg", value_delimiter = ',', required = true)]
    pub algorithms: Vec<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Repeat over values of one parameter, e.g. `dth=3,5,7,9,11` or `cap=100,150`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Measure wall-clock runtime (makes `compare.csv` machine-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Station CSV the placement was computed on.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// A `placement_<alg>.json` file.
    #[arg(long)]
    pub placement: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub k_nearest: usize,
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected `lo:hi`")?;
    let lo = lo
        .trim()
        .parse::<u64>()
        .map_err(|e| format!("bad lower bound: {e}"))?;
    let hi = hi
        .trim()
        .parse::<u64>()
        .map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("lower bound {lo} exceeds upper bound {hi}"));
    }
    Ok((lo, hi))
}

fn parse_bbox(s: &str) -> Result<BoundingBox, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [lat_min, lat_max, lon_min, lon_max] = v[..] else {
        return Err("expected four comma-separated numbers".into());
    };
    Ok(BoundingBox {
        lat_min,
        lat_max,
        lon_min,
        lon_max,
    })
}
