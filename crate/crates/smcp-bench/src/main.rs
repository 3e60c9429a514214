//! Command-line front end: instance generation, seeded experiment
//! campaigns, estimator dumps, hardness numbers, and sampler checks.

use clap::{Args, Parser, Subcommand, ValueEnum};
use smcp_core::algorithms::{GreedyOrder, QMode, TwoStageConfig};
use smcp_core::bench::{run_experiment, sig9, Algo, ExperimentSpec, CSV_HEADER};
use smcp_core::dp::optimal_online_value;
use smcp_core::estimator::{default_sample_count, estimate_q, Matcher, SampleCount};
use smcp_core::graph::{generate_instance, InstanceKind, ProbGraph};
use smcp_core::qtable::{exact_q_table, expected_opt, OptMode, EXACT_PAIR_LIMIT};
use smcp_core::sampler::{build_policy, feasibility_margin, first_occurrence_probs, TargetProfile};
use smcp_core::rng;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "smcp-bench",
    about = "Stochastic matching with commitment: simulator and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run a seeded experiment campaign and report the empirical ratio.
    Run(RunArgs),
    /// Dump estimated q values (and exact ones when enumerable).
    Estimate(EstimateArgs),
    /// Exact optimal-online vs offline values for a small instance.
    Hardness(InstanceArgs),
    /// Verify the order sampler on an explicit target profile.
    SamplerCheck(SamplerArgs),
    /// Run one experiment per grid value of a parameter; one CSV row each.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file (JSON), overrides --graph.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Built-in instance family.
    #[arg(long, value_enum, default_value_t = BuiltinGraph::K4)]
    graph: BuiltinGraph,
    /// Edge probability for the built-in families.
    #[arg(long, default_value_t = 0.64)]
    p: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinGraph {
    /// Complete graph on 4 vertices.
    K4,
    /// Complete graph on 6 vertices.
    K6,
    /// 3-edge path with probabilities (0.9, 1.0, 0.9); ignores --p.
    Path3,
    /// Complete bipartite 3+3.
    Bipartite33,
}

impl InstanceArgs {
    fn resolve(&self) -> smcp_core::Result<(ProbGraph, String)> {
        if let Some(path) = &self.instance {
            let g = ProbGraph::load(path)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".into());
            return Ok((g, name));
        }
        let mut dummy = rng::master(0);
        let (kind, name) = match self.graph {
            BuiltinGraph::K4 => (
                InstanceKind::UniformComplete { n: 4, p: self.p },
                format!("k4-p{}", self.p),
            ),
            BuiltinGraph::K6 => (
                InstanceKind::UniformComplete { n: 6, p: self.p },
                format!("k6-p{}", self.p),
            ),
            BuiltinGraph::Path3 => (
                InstanceKind::Path {
                    probs: vec![0.9, 1.0, 0.9],
                },
                "path3".into(),
            ),
            BuiltinGraph::Bipartite33 => (
                InstanceKind::Bipartite {
                    left: 3,
                    right: 3,
                    p: self.p,
                },
                format!("bip33-p{}", self.p),
            ),
        };
        Ok((generate_instance(&kind, &mut dummy)?, name))
    }
}

#[derive(Args)]
struct GenArgs {
    /// Generator family.
    #[arg(long, value_enum)]
    kind: GenKind,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Edge keep probability for the sparse generator.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Left/right sizes for the bipartite generator.
    #[arg(long, default_value_t = 3)]
    left: usize,
    #[arg(long, default_value_t = 3)]
    right: usize,
    /// Comma-separated edge probabilities for the path generator.
    #[arg(long, value_delimiter = ',')]
    probs: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    UniformComplete,
    SparseRandom,
    Bipartite,
    Path,
}

#[derive(Args)]
struct AlgoArgs {
    #[arg(long, value_enum, default_value_t = AlgoName::Twostage)]
    algo: AlgoName,
    #[arg(long, default_value_t = 0.255)]
    alpha: f64,
    #[arg(long = "q-mode", value_enum, default_value_t = QModeName::Fast)]
    q_mode: QModeName,
    #[arg(long, default_value_t = 0.05)]
    zeta: f64,
    /// Probe order for the greedy baseline.
    #[arg(long, value_enum, default_value_t = OrderName::Random)]
    order: OrderName,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoName {
    Twostage,
    Greedy,
    RandomGreedy,
    ObliviousBipartite,
}

#[derive(Clone, Copy, ValueEnum)]
enum QModeName {
    Paper,
    Fast,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderName {
    Index,
    Random,
}

impl AlgoArgs {
    fn resolve(&self) -> Algo {
        match self.algo {
            AlgoName::Twostage => Algo::TwoStage(TwoStageConfig {
                alpha: self.alpha,
                q_mode: match self.q_mode {
                    QModeName::Paper => QMode::Paper,
                    QModeName::Fast => QMode::Fast,
                    QModeName::Exact => QMode::Exact,
                },
                zeta: self.zeta,
            }),
            AlgoName::Greedy => Algo::Greedy(match self.order {
                OrderName::Index => GreedyOrder::Index,
                OrderName::Random => GreedyOrder::Random,
            }),
            AlgoName::RandomGreedy => Algo::RandomVertexGreedy,
            AlgoName::ObliviousBipartite => Algo::ObliviousBipartite,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    algo: AlgoArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// OPT mode: "exact" or "mc:<trials>"; default exact for small
    /// instances, else paired Monte Carlo.
    #[arg(long)]
    opt: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Sample count; defaults to the fast budget.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SamplerArgs {
    /// Comma-separated event probabilities.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    /// Comma-separated first-occurrence targets.
    #[arg(long, value_delimiter = ',', required = true)]
    r: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Which parameter the grid varies.
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    opt: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    /// Vary the two-stage pruning threshold.
    Alpha,
    /// Vary the built-in instance's edge probability.
    P,
}

fn parse_opt(text: Option<&str>, g: &ProbGraph, trials: usize) -> Result<OptMode, String> {
    match text {
        None => Ok(ExperimentSpec::default_opt(g, trials)),
        Some("exact") => Ok(OptMode::Exact),
        Some(s) => {
            let n = s
                .strip_prefix("mc:")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| format!("invalid --opt value '{s}' (want exact or mc:<trials>)"))?;
            Ok(OptMode::MonteCarlo { trials: n })
        }
    }
}

fn write_out(out: Option<&PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Hardness(args) => cmd_hardness(args),
        Command::SamplerCheck(args) => cmd_sampler_check(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), String> {
    let kind = match args.kind {
        GenKind::UniformComplete => InstanceKind::UniformComplete {
            n: args.n,
            p: args.p,
        },
        GenKind::SparseRandom => InstanceKind::SparseRandom {
            n: args.n,
            density: args.density,
        },
        GenKind::Bipartite => InstanceKind::Bipartite {
            left: args.left,
            right: args.right,
            p: args.p,
        },
        GenKind::Path => {
            if args.probs.is_empty() {
                return Err("--probs is required for the path generator".into());
            }
            InstanceKind::Path {
                probs: args.probs.clone(),
            }
        }
    };
    let g = generate_instance(&kind, &mut rng::master(args.seed)).map_err(|e| e.to_string())?;
    write_out(args.out.as_ref(), &g.to_json()).map_err(|e| e.to_string())
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let (g, name) = args.instance.resolve().map_err(|e| e.to_string())?;
    let opt = parse_opt(args.opt.as_deref(), &g, args.trials)?;
    let spec = ExperimentSpec {
        instance: name,
        algo: args.algo.resolve(),
        trials: args.trials,
        seed: args.seed,
        opt,
    };
    let report = run_experiment(&g, &spec).map_err(|e| e.to_string())?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    write_out(args.out.as_ref(), &text).map_err(|e| e.to_string())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), String> {
    let (g, _) = args.instance.resolve().map_err(|e| e.to_string())?;
    let samples = args
        .samples
        .unwrap_or_else(|| default_sample_count(g.n(), SampleCount::Fast));
    let est = estimate_q(&g, samples, Matcher::Maximum, &mut rng::master(args.seed))
        .map_err(|e| e.to_string())?;
    let exact = if g.num_positive_pairs() <= EXACT_PAIR_LIMIT {
        Some(exact_q_table(&g).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let mut text = String::from("pair,p,q_hat,q_exact\n");
    for (&e, &q_hat) in &est.q {
        let q_exact = exact
            .as_ref()
            .map(|t| sig9(t.q(e)))
            .unwrap_or_else(|| "".into());
        text.push_str(&format!(
            "{}-{},{},{},{}\n",
            e.lo(),
            e.hi(),
            sig9(g.p_pair(e)),
            sig9(q_hat),
            q_exact
        ));
    }
    text.push_str(&format!("# samples = {samples}\n"));
    write_out(args.out.as_ref(), &text).map_err(|e| e.to_string())
}

fn cmd_hardness(args: InstanceArgs) -> Result<(), String> {
    let (g, name) = args.resolve().map_err(|e| e.to_string())?;
    let online = optimal_online_value(&g).map_err(|e| e.to_string())?;
    let (offline, _) =
        expected_opt(&g, OptMode::Exact, &mut rng::master(0)).map_err(|e| e.to_string())?;
    if offline == 0.0 {
        return Err("expected offline optimum is zero".into());
    }
    println!("instance {name}");
    println!("online {}", sig9(online));
    println!("offline {}", sig9(offline));
    println!("ratio {}", sig9(online / offline));
    Ok(())
}

fn cmd_sampler_check(args: SamplerArgs) -> Result<(), String> {
    let profile = TargetProfile::new(args.p.clone(), args.r.clone()).map_err(|e| e.to_string())?;
    let margin = feasibility_margin(&profile);
    let policy = build_policy(&profile).map_err(|e| e.to_string())?;
    let achieved = first_occurrence_probs(&policy, &profile.p);
    let mut text = String::from("event,p,target,achieved,met\n");
    let mut all_met = true;
    for i in 0..profile.len() {
        let met = achieved[i] + 1e-9 >= profile.r[i];
        all_met &= met;
        text.push_str(&format!(
            "{i},{},{},{},{}\n",
            sig9(profile.p[i]),
            sig9(profile.r[i]),
            sig9(achieved[i]),
            met
        ));
    }
    text.push_str(&format!("# step0 margin = {}\n", sig9(margin.min(1.0))));
    write_out(args.out.as_ref(), &text).map_err(|e| e.to_string())?;
    if all_met {
        Ok(())
    } else {
        Err("some targets were missed".into())
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), String> {
    let mut rows = String::from(CSV_HEADER);
    rows.push('\n');
    for &value in &args.values {
        let (instance_args, mut algo_args) = (&args.instance, AlgoArgs { ..args.algo });
        let (g, name) = match args.param {
            SweepParam::Alpha => {
                algo_args.alpha = value;
                instance_args.resolve().map_err(|e| e.to_string())?
            }
            SweepParam::P => {
                let varied = InstanceArgs {
                    instance: instance_args.instance.clone(),
                    graph: instance_args.graph,
                    p: value,
                };
                varied.resolve().map_err(|e| e.to_string())?
            }
        };
        let opt = parse_opt(args.opt.as_deref(), &g, args.trials)?;
        let spec = ExperimentSpec {
            instance: name,
            algo: algo_args.resolve(),
            trials: args.trials,
            seed: args.seed,
            opt,
        };
        let report = run_experiment(&g, &spec).map_err(|e| e.to_string())?;
        rows.push_str(&report.csv_row());
        rows.push('\n');
    }
    write_out(args.out.as_ref(), &rows).map_err(|e| e.to_string())
}
