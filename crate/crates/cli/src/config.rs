use std::fs::File;
use std::io::BufReader;

use mec_placer::baselines::GaParams;
use mec_placer::dataset::{read_stations, synthesize, SynthParams};
use mec_placer::{BaseStation, HyperParams, SolverRegistry};

use crate::args::{HyperArgs, InstanceArgs, RunArgs, ShapeArgs};
use crate::failure::Failure;

/// Trace decay used by `tdmc` when `--lambda` is not given.
pub const DEFAULT_TDMC_LAMBDA: f64 = 0.4;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithms: Vec<String>,
    pub d_th_km: f64,
    pub capacity_max: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub episodes: usize,
    /// `None` tracks the threshold (threshold + 1 km).
    pub fixed_value: Option<f64>,
    pub k_nearest: usize,
    pub seed: u64,
    pub ga: GaParams,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, Failure> {
        let h: &HyperArgs = &args.hyper;
        let cfg = Self {
            algorithms: args
                .algorithms
                .iter()
                .map(|a| a.trim().to_ascii_lowercase())
                .collect(),
            d_th_km: h.dth,
            capacity_max: h.cap,
            alpha: h.alpha,
            gamma: h.gamma,
            lambda: h.lambda,
            episodes: h.episodes,
            fixed_value: h.fixed_value,
            k_nearest: h.k_nearest,
            seed: h.seed,
            ga: GaParams {
                population: h.ga_population,
                generations: h.ga_generations,
                ..GaParams::default()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::Config(m));
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        let registry = SolverRegistry::default();
        for (i, a) in self.algorithms.iter().enumerate() {
            registry.get(a)?;
            if self.algorithms[..i].contains(a) {
                return bad(format!("algorithm `{a}` listed twice"));
            }
        }
        let has = |name: &str| self.algorithms.iter().any(|a| a == name);
        if let Some(l) = self.lambda {
            if l != 0.0 && has("qmc") && !has("tdmc") {
                return bad(format!(
                    "qmc always uses lambda = 0; drop --lambda {l} or add tdmc"
                ));
            }
            if l == 0.0 && has("tdmc") {
                return bad("tdmc needs lambda > 0; use qmc for lambda = 0".into());
            }
        }
        if self.k_nearest == 0 {
            return bad("--k-nearest must be at least 1".into());
        }
        if self.ga.population < 2 {
            return bad("--ga-population must be at least 2".into());
        }
        for alg in &self.algorithms {
            self.hyper_params(alg).validate()?;
        }
        Ok(())
    }

    /// Parameters as a given algorithm sees them.
    pub fn hyper_params(&self, algorithm: &str) -> HyperParams {
        let lambda = match algorithm {
            "tdmc" => self.lambda.unwrap_or(DEFAULT_TDMC_LAMBDA),
            _ => 0.0,
        };
        HyperParams {
            alpha: self.alpha,
            gamma: self.gamma,
            lambda,
            episodes: self.episodes,
            fixed_value: self.fixed_value.unwrap_or(self.d_th_km + 1.0),
            d_th_km: self.d_th_km,
            capacity_max: self.capacity_max,
        }
    }

    /// Rejects stations that no server could ever hold.
    pub fn check_instance(&self, stations: &[BaseStation]) -> Result<(), Failure> {
        if stations.len() < 2 {
            return Err(Failure::Config(format!(
                "need at least 2 stations, got {}",
                stations.len()
            )));
        }
        match stations.iter().find(|s| s.workload > self.capacity_max) {
            Some(s) => Err(Failure::Config(format!(
                "station {} has workload {} above capacity {}",
                s.id, s.workload, self.capacity_max
            ))),
            None => Ok(()),
        }
    }
}

pub fn synth_params(n: usize, seed: u64, shape: &ShapeArgs) -> SynthParams {
    let mut p = SynthParams::new(n, seed);
    p.workload_range = shape.workload;
    p.cluster_count = shape.clusters;
    if let Some(b) = shape.bbox {
        p.bbox = b;
    }
    p
}

pub fn load_instance(args: &InstanceArgs, seed: u64) -> Result<Vec<BaseStation>, Failure> {
    match (&args.input, args.n) {
        (Some(path), _) => {
            let f = File::open(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            Ok(read_stations(BufReader::new(f))?)
        }
        (None, Some(n)) => {
            let seed = args.instance_seed.unwrap_or(seed);
            Ok(synthesize(&synth_params(n, seed, &args.shape))?)
        }
        (None, None) => Err(Failure::Config("either --in or --n is required".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(algs: &[&str], lambda: Option<f64>) -> RunConfig {
        RunConfig {
            algorithms: algs.iter().map(|s| s.to_string()).collect(),
            d_th_km: 9.0,
            capacity_max: 150.0,
            alpha: 0.4,
            gamma: 0.9,
            lambda,
            episodes: 10,
            fixed_value: None,
            k_nearest: 15,
            seed: 0,
            ga: GaParams::default(),
        }
    }

    #[test]
    fn lambda_rules() {
        assert!(cfg(&["qmc"], None).validate().is_ok());
        assert!(cfg(&["qmc"], Some(0.0)).validate().is_ok());
        assert!(cfg(&["qmc"], Some(0.4)).validate().is_err());
        assert!(cfg(&["qmc", "tdmc"], Some(0.4)).validate().is_ok());
        assert!(cfg(&["tdmc"], Some(0.0)).validate().is_err());
        assert!(cfg(&["tdmc"], Some(1.5)).validate().is_err());
    }

    #[test]
    fn per_algorithm_lambda() {
        let c = cfg(&["qmc", "tdmc"], Some(0.7));
        assert_eq!(c.hyper_params("qmc").lambda, 0.0);
        assert_eq!(c.hyper_params("tdmc").lambda, 0.7);
        assert_eq!(
            cfg(&["tdmc"], None).hyper_params("tdmc").lambda,
            DEFAULT_TDMC_LAMBDA
        );
    }

    #[test]
    fn fixed_value_tracks_threshold() {
        let mut c = cfg(&["topk"], None);
        c.d_th_km = 3.0;
        assert_eq!(c.hyper_params("topk").fixed_value, 4.0);
        c.fixed_value = Some(2.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_and_duplicate_algorithms() {
        assert!(cfg(&["dqn"], None).validate().is_err());
        assert!(cfg(&["topk", "topk"], None).validate().is_err());
        assert!(cfg(&[], None).validate().is_err());
    }
}
