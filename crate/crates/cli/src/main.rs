use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ubac::codespec::CodeSpec;
use ubac::de::de_run;
use ubac::harness::{
    derive_seed, manifest, points_csv, run_ber_random_tau, run_bler_fixed_tau, run_de_vs_sim,
    write_outputs, ExperimentConfig,
};
use ubac::optimizer::{alternate, ConstraintDomain, OptimizerConfig};
use ubac::rlc::{rlc_experiment, RlcReport};
use ubac::tanner::{error_floor_bound, expected_four_sets, expurgate, find_deg1_stopping_sets};

#[derive(Parser)]
#[command(name = "ubac", version, about = "LDPC design and joint decoding for the delayed two-user binary adder channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density evolution trajectory of a code.
    DeEval {
        #[arg(long, default_value = "1")]
        code: String,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        target: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Alternating check/variable LP optimization of a degree distribution.
    Optimize(OptimizeArgs),
    /// Sample a graph free of small degree-one stopping sets.
    Expurgate {
        #[arg(long, default_value = "1")]
        code: String,
        #[arg(long)]
        n: usize,
        #[arg(long, alias = "taumax", default_value_t = 1)]
        tau_max: usize,
        #[arg(long, alias = "K", default_value_t = 3)]
        k_max: usize,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Block error rate against n at a fixed delay.
    SimulateFixed(ExperimentArgs),
    /// Bit and block error rates against n at a uniformly random delay.
    SimulateRandom(ExperimentArgs),
    /// Decoder erased fraction per iteration against density evolution.
    DeVsSim(ExperimentArgs),
    /// Random linear codes decoded by Gaussian elimination.
    Rlc {
        #[arg(long, value_delimiter = ',', default_value = "16,32,48,64")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        rate: f64,
        #[arg(long, default_value_t = 1)]
        tau: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Lower bound on the probability of no small degree-one stopping set.
    FloorBound {
        #[arg(long, default_value = "1")]
        code: String,
        #[arg(long, default_value_t = 1)]
        tau_max: usize,
        #[arg(long, default_value_t = 3)]
        k_max: usize,
    },
}

#[derive(Args)]
struct OptimizeArgs {
    /// Starting ensemble.
    #[arg(long, alias = "init", default_value = "1")]
    code: String,
    #[arg(long, alias = "lmax", default_value_t = 8)]
    l_max: u32,
    #[arg(long, alias = "rmax", default_value_t = 20)]
    r_max: u32,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Derive the margin as coefficient / sqrt(n) instead of --delta.
    #[arg(long)]
    n_for_delta: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    delta_coefficient: f64,
    #[arg(long, default_value_t = 256)]
    grid: usize,
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    #[arg(long)]
    l1_cap: Option<f64>,
    #[arg(long, value_enum, default_value_t = Domain::Y)]
    domain: Domain,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Domain {
    Y,
    X,
    Both,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    code: Option<String>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    tau_max: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    expurgate: bool,
    #[arg(long)]
    expurgate_tau_max: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    resample_per_trial: bool,
    /// `pattern` or `transmit`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    time_cap: Option<f64>,
    /// Extra `key=value` overrides.
    #[arg(long = "set")]
    overrides: Vec<String>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        let mut set = |k: &str, v: String| cfg.set(k, &v);
        if let Some(v) = &self.code {
            set("code", v.clone())?;
        }
        if let Some(v) = &self.n {
            let list: Vec<String> = v.iter().map(usize::to_string).collect();
            set("n", list.join(","))?;
        }
        if let Some(v) = self.tau {
            set("tau", v.to_string())?;
        }
        if let Some(v) = self.tau_max {
            set("tau_max", v.to_string())?;
        }
        if let Some(v) = self.trials {
            set("trials", v.to_string())?;
        }
        if let Some(v) = self.max_iters {
            set("max_iters", v.to_string())?;
        }
        if self.expurgate {
            set("expurgate", "true".into())?;
        }
        if let Some(v) = self.expurgate_tau_max {
            set("expurgate_tau_max", v.to_string())?;
        }
        if let Some(v) = self.k_max {
            set("k_max", v.to_string())?;
        }
        if let Some(v) = self.budget {
            set("budget", v.to_string())?;
        }
        if self.resample_per_trial {
            set("resample_per_trial", "true".into())?;
        }
        if let Some(v) = &self.mode {
            set("mode", v.clone())?;
        }
        if let Some(v) = self.seed {
            set("seed", v.to_string())?;
        }
        if let Some(v) = &self.out_dir {
            set("out_dir", v.display().to_string())?;
        }
        if let Some(v) = self.time_cap {
            set("time_cap", v.to_string())?;
        }
        for o in &self.overrides {
            let Some((k, v)) = o.split_once('=') else {
                bail!("--set expects key=value, got `{o}`");
            };
            set(k.trim(), v.trim().to_string())?;
        }
        cfg.check()?;
        Ok(cfg)
    }
}

fn ensemble(code: &str) -> Result<ubac::degree::EnsembleSpec> {
    let cfg = ExperimentConfig {
        code: code.to_string(),
        ..ExperimentConfig::default()
    };
    Ok(cfg.ensemble()?)
}

fn report(paths: (PathBuf, PathBuf)) {
    println!("wrote {} and {}", paths.0.display(), paths.1.display());
}

fn simple_manifest(command: &str, lines: &[(&str, String)]) -> String {
    let mut out = format!("command = {command}\nubac_version = {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in lines {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

fn optimize(a: &OptimizeArgs) -> Result<()> {
    let init = ensemble(&a.code)?;
    let cfg = OptimizerConfig {
        l_max: a.l_max,
        r_max: a.r_max,
        delta: a.delta,
        grid: a.grid,
        max_rounds: a.rounds,
        n_for_delta: a.n_for_delta,
        delta_coefficient: a.delta_coefficient,
        l1_cap: a.l1_cap,
        seed: a.seed,
        vn_domain: match a.domain {
            Domain::Y => ConstraintDomain::Y,
            Domain::X => ConstraintDomain::X,
            Domain::Both => ConstraintDomain::Both,
        },
        ..OptimizerConfig::default()
    };
    let out = alternate(&init, &cfg)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let spec = CodeSpec {
        ensemble: out.ensemble.clone(),
        n: a.n_for_delta,
    };
    let spec_path = a.out_dir.join("optimized.code");
    spec.save(&spec_path)?;
    let m = simple_manifest(
        "optimize",
        &[
            ("code", a.code.clone()),
            ("l_max", a.l_max.to_string()),
            ("r_max", a.r_max.to_string()),
            ("delta", cfg.effective_delta().to_string()),
            ("grid", a.grid.to_string()),
            ("rounds", a.rounds.to_string()),
            ("seed", a.seed.to_string()),
            ("final_rate", format!("{:.6}", out.ensemble.design_rate)),
        ],
    );
    report(write_outputs(&a.out_dir, "audit", &out.audit_csv(), &m)?);
    println!("design rate {:.6}; spec in {}", out.ensemble.design_rate, spec_path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DeEval {
            code,
            max_iters,
            target,
            out_dir,
        } => {
            let spec = ensemble(&code)?;
            let t = de_run(&spec.vn, &spec.cn, max_iters, target);
            let m = simple_manifest(
                "de-eval",
                &[
                    ("code", code),
                    ("max_iters", max_iters.to_string()),
                    ("target", target.to_string()),
                    ("converged", t.converged.to_string()),
                    ("iterations_to_target", format!("{:?}", t.iterations_to_target)),
                ],
            );
            report(write_outputs(&out_dir, "de", &t.to_csv(), &m)?);
            match t.iterations_to_target {
                Some(l) => println!("reached {target:e} after {l} iterations"),
                None => println!("did not reach {target:e} in {max_iters} iterations"),
            }
        }
        Command::Optimize(a) => optimize(&a)?,
        Command::Expurgate {
            code,
            n,
            tau_max,
            k_max,
            budget,
            seed,
            out_dir,
        } => {
            let spec = ensemble(&code)?;
            let (graph, resamples) = expurgate(&spec, n, tau_max, k_max, budget, derive_seed(seed, "expurgate"))?;
            std::fs::create_dir_all(&out_dir)?;
            let graph_path = out_dir.join(format!("graph_n{n}.txt"));
            graph.save(&graph_path)?;
            let leftover = find_deg1_stopping_sets(&graph, tau_max, k_max).len();
            let csv = format!(
                "code,n,tau_max,k_max,resamples,graph_seed,remaining_sets\n{code},{n},{tau_max},{k_max},{resamples},{},{leftover}\n",
                graph.seed()
            );
            let m = simple_manifest(
                "expurgate",
                &[
                    ("code", code.clone()),
                    ("n", n.to_string()),
                    ("seed", seed.to_string()),
                    ("budget", budget.to_string()),
                    ("graph", graph_path.display().to_string()),
                ],
            );
            report(write_outputs(&out_dir, "expurgate", &csv, &m)?);
        }
        Command::SimulateFixed(a) => {
            let cfg = a.config()?;
            let points = run_bler_fixed_tau(&cfg)?;
            let m = manifest(&cfg, "simulate-fixed", &points);
            report(write_outputs(&cfg.out_dir, "bler_fixed_tau", &points_csv(&points), &m)?);
        }
        Command::SimulateRandom(a) => {
            let cfg = a.config()?;
            let points = run_ber_random_tau(&cfg)?;
            let undetected: usize = points.iter().map(|p| p.undetected).sum();
            let m = manifest(&cfg, "simulate-random", &points);
            report(write_outputs(&cfg.out_dir, "ber_random_tau", &points_csv(&points), &m)?);
            if undetected > 0 {
                bail!("{undetected} decoded blocks differ from the sent words");
            }
        }
        Command::DeVsSim(a) => {
            let cfg = a.config()?;
            let r = run_de_vs_sim(&cfg)?;
            let m = manifest(&cfg, "de-vs-sim", &[]);
            report(write_outputs(&cfg.out_dir, "de_vs_sim_de", &r.de_csv, &m)?);
            if !r.max_deviation.is_empty() {
                std::fs::write(cfg.out_dir.join("de_vs_sim_trials.csv"), &r.trials_csv)?;
                std::fs::write(cfg.out_dir.join("de_vs_sim_summary.csv"), r.summary_csv())?;
            }
        }
        Command::Rlc {
            n,
            rate,
            tau,
            trials,
            seed,
            out_dir,
        } => {
            let mut csv = format!("{}\n", RlcReport::csv_header());
            for &len in &n {
                let r = rlc_experiment(len, rate, tau, trials, derive_seed(seed, &format!("rlc/n={len}")))?;
                csv.push_str(&r.csv_row());
                csv.push('\n');
            }
            let m = simple_manifest(
                "rlc",
                &[
                    ("rate", rate.to_string()),
                    ("tau", tau.to_string()),
                    ("trials", trials.to_string()),
                    ("seed", seed.to_string()),
                ],
            );
            report(write_outputs(&out_dir, "rlc", &csv, &m)?);
        }
        Command::FloorBound { code, tau_max, k_max } => {
            let spec = ensemble(&code)?;
            let l1 = spec.degree_one_fraction();
            println!("code,l1,rate,tau_max,k_max,bound,expected_four_sets");
            println!(
                "{code},{l1},{:.6},{tau_max},{k_max},{:.6},{:.6}",
                spec.design_rate,
                error_floor_bound(l1, spec.design_rate, tau_max, k_max),
                expected_four_sets(l1, spec.design_rate, tau_max)
            );
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    run(Cli::parse())
}
