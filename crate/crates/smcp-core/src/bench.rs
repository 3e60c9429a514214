//! Seeded experiment campaigns and machine-readable reports.
//!
//! A campaign runs one algorithm for many trials against realizations of
//! one instance and reports the empirical competitive ratio with a 95%
//! confidence interval. Everything is a pure function of (spec, seed):
//! per-trial streams are derived from the master seed by counter mixing,
//! and Monte Carlo OPT is paired with the algorithm's realizations.

use crate::algorithms::{
    run_greedy, run_oblivious_bipartite, run_random_vertex_greedy, run_two_stage,
    run_two_stage_with_cache, GreedyOrder, QMode, TwoStageConfig,
};
use crate::graph::{ProbGraph, ProbeOracle};
use crate::matching::max_matching;
use crate::qtable::{expected_opt, ExactQCache, OptMode, EXACT_PAIR_LIMIT};
use crate::rng;
use crate::{Error, Result};

/// Stream tags for per-trial derivation.
const TAG_REALIZATION: u64 = 0x5245414c;
const TAG_ALGORITHM: u64 = 0x414c474f;

/// Algorithm under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algo {
    TwoStage(TwoStageConfig),
    Greedy(GreedyOrder),
    RandomVertexGreedy,
    ObliviousBipartite,
}

impl Algo {
    pub fn label(&self) -> &'static str {
        match self {
            Algo::TwoStage(_) => "twostage",
            Algo::Greedy(_) => "greedy",
            Algo::RandomVertexGreedy => "random-greedy",
            Algo::ObliviousBipartite => "oblivious-bipartite",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Label echoed into reports.
    pub instance: String,
    pub algo: Algo,
    pub trials: usize,
    pub seed: u64,
    pub opt: OptMode,
}

impl ExperimentSpec {
    /// Default OPT mode for an instance: exact when enumerable, else
    /// paired Monte Carlo with the same trial count.
    pub fn default_opt(g: &ProbGraph, trials: usize) -> OptMode {
        if g.num_positive_pairs() <= EXACT_PAIR_LIMIT {
            OptMode::Exact
        } else {
            OptMode::MonteCarlo { trials }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub instance: String,
    pub algo: String,
    pub seed: u64,
    pub trials: usize,
    /// Matching size per trial, in trial order.
    pub sizes: Vec<usize>,
    pub mean_alg: f64,
    pub mean_opt: f64,
    pub opt_mode: String,
    pub ratio: f64,
    /// 95% half-width of the ratio by the delta method.
    pub ci95: f64,
}

/// Runs a campaign: per trial, a fresh realization and oracle, one
/// algorithm run, and (in Monte Carlo mode) the paired offline optimum.
pub fn run_experiment(g: &ProbGraph, spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if spec.trials == 0 {
        return Err(Error::TooFewTrials(0));
    }
    let mut cache = match spec.algo {
        Algo::TwoStage(cfg)
            if cfg.q_mode == QMode::Exact && g.num_positive_pairs() <= EXACT_PAIR_LIMIT =>
        {
            Some(ExactQCache::new(g)?)
        }
        _ => None,
    };

    let paired = matches!(spec.opt, OptMode::MonteCarlo { .. });
    let mut sizes = Vec::with_capacity(spec.trials);
    let mut opt_sizes = Vec::with_capacity(if paired { spec.trials } else { 0 });
    for t in 0..spec.trials {
        let mut real_rng = rng::derive(spec.seed, TAG_REALIZATION, t as u64);
        let mut alg_rng = rng::derive(spec.seed, TAG_ALGORITHM, t as u64);
        let realization = g.sample_realization(&mut real_rng);
        if paired {
            opt_sizes.push(max_matching(&realization).len());
        }
        let mut oracle = ProbeOracle::new(g, realization);
        let rec = match &spec.algo {
            Algo::TwoStage(cfg) => match cache.as_mut() {
                Some(cache) => run_two_stage_with_cache(g, &mut oracle, cfg, cache, &mut alg_rng)?,
                None => run_two_stage(g, &mut oracle, cfg, &mut alg_rng)?,
            },
            Algo::Greedy(order) => run_greedy(g, &mut oracle, *order, &mut alg_rng)?,
            Algo::RandomVertexGreedy => run_random_vertex_greedy(g, &mut oracle, &mut alg_rng)?,
            Algo::ObliviousBipartite => run_oblivious_bipartite(g, &mut oracle, &mut alg_rng)?,
        };
        sizes.push(rec.matched());
    }

    let n = spec.trials as f64;
    let mean_alg = sizes.iter().sum::<usize>() as f64 / n;
    let var_alg = variance(&sizes, mean_alg);
    let (mean_opt, ratio_var, opt_mode) = match spec.opt {
        OptMode::Exact => {
            let (mean_opt, _) = expected_opt(g, OptMode::Exact, &mut rng::master(spec.seed))?;
            if mean_opt == 0.0 {
                return Err(Error::ZeroOptimum);
            }
            (mean_opt, var_alg / n / (mean_opt * mean_opt), "exact".into())
        }
        OptMode::MonteCarlo { trials } => {
            let mean_opt = opt_sizes.iter().sum::<usize>() as f64 / n;
            if mean_opt == 0.0 {
                return Err(Error::ZeroOptimum);
            }
            let var_opt = variance(&opt_sizes, mean_opt);
            let mut cov = 0.0;
            for (&a, &o) in sizes.iter().zip(&opt_sizes) {
                cov += (a as f64 - mean_alg) * (o as f64 - mean_opt);
            }
            cov /= n - 1.0;
            let r = mean_alg / mean_opt;
            // Delta method for a paired ratio of means.
            let var = (var_alg - 2.0 * r * cov + r * r * var_opt) / (n * mean_opt * mean_opt);
            (mean_opt, var.max(0.0), format!("mc:{trials}"))
        }
    };

    Ok(ExperimentReport {
        instance: spec.instance.clone(),
        algo: spec.algo.label().to_string(),
        seed: spec.seed,
        trials: spec.trials,
        sizes,
        mean_alg,
        mean_opt,
        opt_mode,
        ratio: mean_alg / mean_opt,
        ci95: 1.96 * ratio_var.sqrt(),
    })
}

fn variance(xs: &[usize], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    xs.iter()
        .map(|&x| (x as f64 - mean) * (x as f64 - mean))
        .sum::<f64>()
        / (n - 1.0)
}

/// `x` with 9 significant digits, plain decimal notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub const CSV_HEADER: &str = "instance,algo,seed,trials,mean_alg,mean_opt,opt_mode,ratio,ci95";

impl ExperimentReport {
    /// One CSV row (no header, no trailing newline).
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.instance,
            self.algo,
            self.seed,
            self.trials,
            sig9(self.mean_alg),
            sig9(self.mean_opt),
            self.opt_mode,
            sig9(self.ratio),
            sig9(self.ci95),
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}\n", self.csv_row())
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::json!({
            "instance": self.instance,
            "algo": self.algo,
            "seed": self.seed,
            "trials": self.trials,
            "mean_alg": sig9(self.mean_alg),
            "mean_opt": sig9(self.mean_opt),
            "opt_mode": self.opt_mode,
            "ratio": sig9(self.ratio),
            "ci95": sig9(self.ci95),
        });
        format!("{}\n", serde_json::to_string_pretty(&value).expect("serializable"))
    }
}
