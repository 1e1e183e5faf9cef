//! Experiment orchestration: seeding, configuration, Monte-Carlo runs and CSV.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::channel::{erasure_pattern_with, modulate, random_bits, transmit};
use crate::codes::reference_code;
use crate::codespec::CodeSpec;
use crate::de::de_run;
use crate::decoder::{decode, decode_erasure_pattern, DecodeResult};
use crate::degree::EnsembleSpec;
use crate::error::{Error, Result};
use crate::gf2::LdpcEncoder;
use crate::tanner::{expurgate, sample_graph, TannerGraph};

/// One seed per label: the first eight bytes (little endian) of
/// `SHA-256(master as 8 LE bytes || label)`.
pub fn seed_split(master: u64, labels: &[&str]) -> Result<Vec<u64>> {
    let mut seen = HashSet::new();
    labels
        .iter()
        .map(|label| {
            if !seen.insert(*label) {
                return Err(Error::DuplicateLabel(label.to_string()));
            }
            Ok(derive_seed(master, label))
        })
        .collect()
}

pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TauMode {
    Fixed(usize),
    /// Uniform over `0..=tau_max`.
    Uniform(usize),
}

impl TauMode {
    fn label(&self) -> &'static str {
        match self {
            TauMode::Fixed(_) => "fixed",
            TauMode::Uniform(_) => "uniform",
        }
    }

    fn tau_max(&self) -> usize {
        match *self {
            TauMode::Fixed(t) | TauMode::Uniform(t) => t,
        }
    }
}

/// How trial outcomes are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Sample the erased positions directly and decode the pattern.
    Pattern,
    /// Encode, transmit and decode actual words.
    Transmit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `1`, `2`, `3` for the reference codes, or a code-spec file path.
    pub code: String,
    pub n: Vec<usize>,
    pub tau: TauMode,
    pub trials: usize,
    pub max_iters: usize,
    pub expurgate: bool,
    /// Delays covered by expurgation.
    pub expurgate_tau_max: usize,
    pub k_max: usize,
    pub budget: usize,
    /// Fresh graph per trial instead of one graph per point.
    pub resample_per_trial: bool,
    pub mode: SimMode,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Seconds per point after which remaining trials are dropped.
    pub time_cap: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            code: "1".into(),
            n: vec![1024],
            tau: TauMode::Fixed(1),
            trials: 100,
            max_iters: crate::decoder::DEFAULT_MAX_ITERS,
            expurgate: false,
            expurgate_tau_max: 1,
            k_max: 3,
            budget: 100,
            resample_per_trial: false,
            mode: SimMode::Pattern,
            seed: 1,
            out_dir: PathBuf::from("."),
            time_cap: None,
        }
    }
}

impl ExperimentConfig {
    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: "expected `key = value`".into(),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::InvalidConfig(format!("bad value `{value}` for `{key}`"));
        let int = |v: &str| v.parse::<usize>().map_err(|_| bad());
        let flag = |v: &str| match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(bad()),
        };
        match key {
            "code" => self.code = value.to_string(),
            "n" => {
                self.n = value
                    .split(',')
                    .map(|v| int(v.trim()))
                    .collect::<Result<_>>()?
            }
            "tau" => self.tau = TauMode::Fixed(int(value)?),
            "tau_max" => self.tau = TauMode::Uniform(int(value)?),
            "trials" => self.trials = int(value)?,
            "max_iters" => self.max_iters = int(value)?,
            "expurgate" => self.expurgate = flag(value)?,
            "expurgate_tau_max" => self.expurgate_tau_max = int(value)?,
            "k_max" | "K" => self.k_max = int(value)?,
            "budget" => self.budget = int(value)?,
            "resample_per_trial" => self.resample_per_trial = flag(value)?,
            "mode" => {
                self.mode = match value {
                    "pattern" => SimMode::Pattern,
                    "transmit" => SimMode::Transmit,
                    _ => return Err(bad()),
                }
            }
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "time_cap" => self.time_cap = Some(value.parse().map_err(|_| bad())?),
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(Error::InvalidConfig("n list must hold positive values".into()));
        }
        if self.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("n list must be sorted ascending".into()));
        }
        if self.max_iters == 0 || self.k_max == 0 {
            return Err(Error::InvalidConfig("max_iters and k_max must be positive".into()));
        }
        Ok(())
    }

    pub fn ensemble(&self) -> Result<EnsembleSpec> {
        match self.code.trim_start_matches("code") {
            "1" => Ok(reference_code(1)),
            "2" => Ok(reference_code(2)),
            "3" => Ok(reference_code(3)),
            _ => Ok(CodeSpec::load(Path::new(&self.code))?.ensemble),
        }
    }

    /// `key = value` echo, loadable by [`ExperimentConfig::apply_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let ns: Vec<String> = self.n.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "code = {}", self.code);
        let _ = writeln!(out, "n = {}", ns.join(","));
        match self.tau {
            TauMode::Fixed(t) => {
                let _ = writeln!(out, "tau = {t}");
            }
            TauMode::Uniform(t) => {
                let _ = writeln!(out, "tau_max = {t}");
            }
        }
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "max_iters = {}", self.max_iters);
        let _ = writeln!(out, "expurgate = {}", self.expurgate);
        let _ = writeln!(out, "expurgate_tau_max = {}", self.expurgate_tau_max);
        let _ = writeln!(out, "k_max = {}", self.k_max);
        let _ = writeln!(out, "budget = {}", self.budget);
        let _ = writeln!(out, "resample_per_trial = {}", self.resample_per_trial);
        let mode = if self.mode == SimMode::Pattern { "pattern" } else { "transmit" };
        let _ = writeln!(out, "mode = {mode}");
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        if let Some(cap) = self.time_cap {
            let _ = writeln!(out, "time_cap = {cap}");
        }
        out
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    if successes == 0 {
        return (0.0, wilson_upper_at_zero(trials as f64));
    }
    let z = 1.959963984540054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn wilson_upper_at_zero(n: f64) -> f64 {
    let z2 = 1.959963984540054f64.powi(2);
    z2 / (n + z2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub tau: usize,
    pub block_error: bool,
    pub bit_errors: usize,
    pub iterations: usize,
    /// Decoded as a success but some bit differs from the sent word.
    pub undetected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub code: String,
    pub n: usize,
    pub tau_mode: TauMode,
    pub trials: usize,
    pub block_errors: usize,
    pub bit_errors: usize,
    pub mean_iters: f64,
    pub seed: u64,
    pub tau0_draws: usize,
    pub undetected: usize,
    pub graph_seed: u64,
    pub expurgation_attempts: Option<usize>,
}

impl PointResult {
    pub fn bler(&self) -> f64 {
        self.block_errors as f64 / self.trials.max(1) as f64
    }

    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / (2 * self.n * self.trials.max(1)) as f64
    }

    pub fn wilson(&self) -> (f64, f64) {
        wilson_interval(self.block_errors, self.trials)
    }

    pub const CSV_HEADER: &'static str =
        "code,n,tau_mode,tau_max,trials,block_errors,bler,bit_errors,ber,mean_iters,seed,bler_lo,bler_hi,tau0_draws";

    pub fn csv_row(&self) -> String {
        let (lo, hi) = self.wilson();
        format!(
            "{},{},{},{},{},{},{:.9e},{},{:.9e},{:.4},{},{:.9e},{:.9e},{}",
            self.code,
            self.n,
            self.tau_mode.label(),
            self.tau_mode.tau_max(),
            self.trials,
            self.block_errors,
            self.bler(),
            self.bit_errors,
            self.ber(),
            self.mean_iters,
            self.seed,
            lo,
            hi,
            self.tau0_draws
        )
    }
}

pub fn points_csv(points: &[PointResult]) -> String {
    let mut out = String::from(PointResult::CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    out
}

/// One decoding trial on `graph` at delay `tau`.
pub fn run_trial(
    graph: &TannerGraph,
    encoder: Option<&LdpcEncoder>,
    tau: usize,
    max_iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TrialOutcome> {
    let n = graph.n();
    match encoder {
        None => {
            let pattern = erasure_pattern_with(n, tau, rng);
            let r = decode_erasure_pattern(graph, tau, &pattern, max_iters)?;
            Ok(TrialOutcome {
                tau,
                block_error: !r.success,
                bit_errors: r.erased_count(),
                iterations: r.iterations_used,
                undetected: false,
            })
        }
        Some(enc) => {
            let dither = random_bits(n, rng);
            let m1 = enc.encode(&dither, &[], rng)?;
            let m2 = enc.encode(&dither, &[], rng)?;
            let y = transmit(&modulate(&m1, &dither), &modulate(&m2, &dither), tau, &dither)?;
            let r = decode(graph, tau, &y, &dither, max_iters)?;
            let wrong = count_wrong(&r, &m1, &m2);
            Ok(TrialOutcome {
                tau,
                block_error: !r.success || wrong > 0,
                bit_errors: r.erased_count() + wrong,
                iterations: r.iterations_used,
                undetected: r.success && wrong > 0,
            })
        }
    }
}

/// Recovered bits that differ from the sent words.
pub fn count_wrong(r: &DecodeResult, m1: &[u8], m2: &[u8]) -> usize {
    let wrong = |vals: &[Option<u8>], m: &[u8]| {
        vals.iter()
            .zip(m)
            .filter(|(v, &b)| matches!(v, Some(x) if *x != b))
            .count()
    };
    wrong(&r.user1_values, m1) + wrong(&r.user2_values, m2)
}

fn point_graph(cfg: &ExperimentConfig, spec: &EnsembleSpec, n: usize, seed: u64) -> Result<(TannerGraph, Option<usize>)> {
    if cfg.expurgate {
        let (g, attempts) = expurgate(spec, n, cfg.expurgate_tau_max, cfg.k_max, cfg.budget, seed)?;
        Ok((g, Some(attempts)))
    } else {
        Ok((sample_graph(spec, n, seed)?, None))
    }
}

/// Runs every point of `cfg`. Trials run in parallel with seeds derived from
/// `(master, point, trial)`, so results do not depend on thread count.
pub fn run_points(cfg: &ExperimentConfig, experiment: &str) -> Result<Vec<PointResult>> {
    cfg.check()?;
    let spec = cfg.ensemble()?;
    let mut points = Vec::with_capacity(cfg.n.len());
    for &n in &cfg.n {
        let prefix = format!("{experiment}/n={n}");
        let graph_seed = derive_seed(cfg.seed, &format!("{prefix}/graph"));
        let shared = if cfg.resample_per_trial {
            None
        } else {
            Some(point_graph(cfg, &spec, n, graph_seed)?)
        };
        let encoder = match (&shared, cfg.mode) {
            (Some((g, _)), SimMode::Transmit) => Some(LdpcEncoder::new(g)),
            _ => None,
        };
        let started = Instant::now();
        let chunk = 256usize;
        let mut outcomes: Vec<TrialOutcome> = Vec::with_capacity(cfg.trials);
        for lo in (0..cfg.trials).step_by(chunk) {
            let hi = (lo + chunk).min(cfg.trials);
            let batch: Vec<Result<TrialOutcome>> = (lo..hi)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("{prefix}/trial/{t}")));
                    let tau = match cfg.tau {
                        TauMode::Fixed(t) => t,
                        TauMode::Uniform(max) => rand::Rng::random_range(&mut rng, 0..=max),
                    };
                    if tau > n {
                        return Err(Error::TauOutOfRange { tau, n });
                    }
                    if matches!(cfg.tau, TauMode::Uniform(_)) && tau == 0 {
                        // Never decoded: both bits of every erased position are lost.
                        let erased = erasure_pattern_with(n, 0, &mut rng).len();
                        return Ok(TrialOutcome {
                            tau,
                            block_error: true,
                            bit_errors: 2 * erased,
                            iterations: 0,
                            undetected: false,
                        });
                    }
                    let own;
                    let own_encoder;
                    let (graph, enc) = match &shared {
                        Some((g, _)) => (g, encoder.as_ref()),
                        None => {
                            own = point_graph(cfg, &spec, n, derive_seed(cfg.seed, &format!("{prefix}/graph/{t}")))?.0;
                            own_encoder = (cfg.mode == SimMode::Transmit).then(|| LdpcEncoder::new(&own));
                            (&own, own_encoder.as_ref())
                        }
                    };
                    run_trial(graph, enc, tau, cfg.max_iters, &mut rng)
                })
                .collect();
            for r in batch {
                outcomes.push(r?);
            }
            if let Some(cap) = cfg.time_cap {
                if started.elapsed().as_secs_f64() > cap && hi < cfg.trials {
                    eprintln!(
                        "warning: n = {n} hit the {cap}s time cap; {hi} of {} trials kept",
                        cfg.trials
                    );
                    break;
                }
            }
        }
        let trials = outcomes.len();
        points.push(PointResult {
            code: cfg.code.clone(),
            n,
            tau_mode: cfg.tau.clone(),
            trials,
            block_errors: outcomes.iter().filter(|o| o.block_error).count(),
            bit_errors: outcomes.iter().map(|o| o.bit_errors).sum(),
            mean_iters: outcomes.iter().map(|o| o.iterations as f64).sum::<f64>() / trials.max(1) as f64,
            seed: cfg.seed,
            tau0_draws: outcomes.iter().filter(|o| o.tau == 0).count(),
            undetected: outcomes.iter().filter(|o| o.undetected).count(),
            graph_seed,
            expurgation_attempts: shared.as_ref().and_then(|s| s.1),
        });
    }
    Ok(points)
}

/// Block error rate at a fixed delay.
pub fn run_bler_fixed_tau(cfg: &ExperimentConfig) -> Result<Vec<PointResult>> {
    if !matches!(cfg.tau, TauMode::Fixed(_)) {
        return Err(Error::InvalidConfig("fixed-delay run needs `tau`".into()));
    }
    run_points(cfg, "bler-fixed")
}

/// Bit and block error rates with the delay drawn uniformly from
/// `0..=tau_max`; a zero delay always counts as a block error.
pub fn run_ber_random_tau(cfg: &ExperimentConfig) -> Result<Vec<PointResult>> {
    if !matches!(cfg.tau, TauMode::Uniform(_)) {
        return Err(Error::InvalidConfig("random-delay run needs `tau_max`".into()));
    }
    run_points(cfg, "ber-random")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeVsSim {
    /// Density evolution, columns `iter,x,y,w,z,p`.
    pub de_csv: String,
    /// Columns `trial,iter,erased_fraction,de`.
    pub trials_csv: String,
    /// Largest `|sample - DE|` per trial over iterations `1..=L`.
    pub max_deviation: Vec<f64>,
    pub iterations_compared: usize,
}

impl DeVsSim {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("trial,max_deviation\n");
        for (t, d) in self.max_deviation.iter().enumerate() {
            let _ = writeln!(out, "{t},{d:.9e}");
        }
        out
    }
}

/// Per-iteration erased fraction of sampled graphs against density
/// evolution, each trial on a fresh graph and erasure pattern. The decoder
/// trace is held at its final value once decoding stops; the comparison runs
/// until density evolution reaches `1e-6`.
pub fn run_de_vs_sim(cfg: &ExperimentConfig) -> Result<DeVsSim> {
    cfg.check()?;
    let [n] = cfg.n[..] else {
        return Err(Error::InvalidConfig("de-vs-sim takes a single n".into()));
    };
    let TauMode::Fixed(tau) = cfg.tau else {
        return Err(Error::InvalidConfig("de-vs-sim needs a fixed tau".into()));
    };
    let spec = cfg.ensemble()?;
    let de = de_run(&spec.vn, &spec.cn, cfg.max_iters, 1e-6);
    let horizon = de.p.len();
    let traces: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let g = sample_graph(&spec, n, derive_seed(cfg.seed, &format!("de-vs-sim/graph/{t}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("de-vs-sim/trial/{t}")));
            let pattern = erasure_pattern_with(n, tau, &mut rng);
            Ok(decode_erasure_pattern(&g, tau, &pattern, cfg.max_iters)?.erased_fraction_per_iter)
        })
        .collect::<Result<_>>()?;
    let mut trials_csv = String::from("trial,iter,erased_fraction,de\n");
    let mut max_deviation = Vec::with_capacity(traces.len());
    for (t, trace) in traces.iter().enumerate() {
        let mut worst = 0.0f64;
        for l in 1..=horizon {
            let sample = trace[l.min(trace.len() - 1)];
            let p = de.p[l - 1];
            worst = worst.max((sample - p).abs());
            let _ = writeln!(trials_csv, "{t},{l},{sample:.9e},{p:.9e}");
        }
        max_deviation.push(worst);
    }
    Ok(DeVsSim {
        de_csv: de.to_csv(),
        trials_csv,
        max_deviation,
        iterations_compared: horizon,
    })
}

/// Config echo, versions and derived seeds.
pub fn manifest(cfg: &ExperimentConfig, command: &str, points: &[PointResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "command = {command}");
    let _ = writeln!(out, "ubac_version = {}", env!("CARGO_PKG_VERSION"));
    out.push_str(&cfg.to_text());
    let mut seeds = BTreeMap::new();
    for p in points {
        seeds.insert(p.n, (p.graph_seed, p.expurgation_attempts, p.trials));
    }
    for (n, (seed, attempts, trials)) in seeds {
        let _ = write!(out, "point n={n} graph_seed={seed} trials_run={trials}");
        if let Some(a) = attempts {
            let _ = write!(out, " expurgation_resamples={a}");
        }
        out.push('\n');
    }
    out
}

/// Writes `<name>.csv` and `<name>.manifest.txt` under the output directory.
pub fn write_outputs(dir: &Path, name: &str, csv: &str, manifest: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{name}.csv"));
    let manifest_path = dir.join(format!("{name}.manifest.txt"));
    std::fs::write(&csv_path, csv)?;
    std::fs::write(&manifest_path, manifest)?;
    Ok((csv_path, manifest_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_split_examples() {
        let a = seed_split(1, &["trial/0"]).unwrap();
        assert_eq!(a, seed_split(1, &["trial/0"]).unwrap());
        let b = seed_split(1, &["trial/0", "trial/1"]).unwrap();
        assert_ne!(b[0], b[1]);
        assert_eq!(
            seed_split(1, &["x", "x"]),
            Err(Error::DuplicateLabel("x".into()))
        );
    }

    #[test]
    fn config_text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("code = 2\nn = 1024, 2048\ntau_max = 500 # random delay\nexpurgate = yes\n")
            .unwrap();
        assert_eq!(cfg.n, vec![1024, 2048]);
        assert_eq!(cfg.tau, TauMode::Uniform(500));
        assert!(cfg.expurgate);
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.apply_text("bogus = 1").is_err());
        assert!(cfg.apply_text("n 5").is_err());
        cfg.n = vec![2048, 1024];
        assert!(cfg.check().is_err());
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(10, 100);
        assert!(lo < 0.1 && 0.1 < hi);
        assert_eq!(wilson_interval(0, 50).0, 0.0);
        let z2 = 1.959963984540054f64.powi(2);
        assert!((wilson_interval(0, 50).1 - z2 / (50.0 + z2)).abs() < 1e-15);
    }

    #[test]
    fn zero_tau_max_always_fails() {
        let cfg = ExperimentConfig {
            code: "2".into(),
            n: vec![256],
            tau: TauMode::Uniform(0),
            trials: 20,
            ..ExperimentConfig::default()
        };
        let pts = run_ber_random_tau(&cfg).unwrap();
        assert_eq!(pts[0].block_errors, 20);
        assert_eq!(pts[0].tau0_draws, 20);
        assert_eq!(pts[0].bler(), 1.0);
    }

    #[test]
    fn single_trial_single_row() {
        let cfg = ExperimentConfig {
            n: vec![1024],
            trials: 1,
            ..ExperimentConfig::default()
        };
        let csv = points_csv(&run_bler_fixed_tau(&cfg).unwrap());
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("code,n,tau_mode,tau_max,trials,block_errors,bler,bit_errors,ber,mean_iters,seed"));
    }
}
