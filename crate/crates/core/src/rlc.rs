//! Random linear codes on the delayed two-user channel, decoded by solving
//! the stacked parity system on the erased positions.
//!
//! With erased overlap set `E`, the unknowns are `m1_E`; the partner bits are
//! `m2_{E - tau} = m1_E + 1`. Both parity systems restricted to `E` give
//!
//! ```text
//! [H_E      ]          [ H_notE m1_notE                          ]
//! [H_{E-tau}] m1_E  =  [ H_{notE-tau} m2_notE + H_{E-tau} 1      ]
//! ```
//!
//! which is decodable exactly when the stacked matrix has full column rank.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf2::{Gf2Matrix, Solution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RlcOutcome {
    Decoded { m1: Vec<u8>, m2: Vec<u8> },
    /// The stacked matrix is column-rank deficient.
    Ambiguous,
}

fn beta(b: u8) -> i8 {
    1 - 2 * (b & 1) as i8
}

/// Noiseless output `beta(m1_p) + beta(m2_{p - tau})` of length `n + tau`.
pub fn rlc_observe(m1: &[u8], m2: &[u8], tau: usize) -> Vec<i8> {
    let n = m1.len();
    (0..n + tau)
        .map(|p| {
            let a = if p < n { beta(m1[p]) } else { 0 };
            let b = if p >= tau && p - tau < m2.len() { beta(m2[p - tau]) } else { 0 };
            a + b
        })
        .collect()
}

/// Erased overlap positions `{p : y_p = 0}`.
pub fn erased_positions(observation: &[i8], n: usize, tau: usize) -> Vec<usize> {
    (tau..n).filter(|&p| observation[p] == 0).collect()
}

/// Stacked matrix `[H_E; H_{E - tau}]` for erased positions `erased`.
pub fn stacked_matrix(h: &Gf2Matrix, tau: usize, erased: &[usize]) -> Gf2Matrix {
    let shifted: Vec<usize> = erased.iter().map(|&p| p - tau).collect();
    h.select_columns(erased)
        .vstack(&h.select_columns(&shifted))
        .expect("equal column counts")
}

pub fn rlc_decode(h: &Gf2Matrix, tau: usize, observation: &[i8]) -> Result<RlcOutcome> {
    let n = h.cols();
    if tau > n {
        return Err(Error::TauOutOfRange { tau, n });
    }
    if observation.len() != n + tau {
        return Err(Error::LengthMismatch {
            expected: n + tau,
            actual: observation.len(),
        });
    }
    let mut m1 = vec![0u8; n];
    let mut m2 = vec![0u8; n];
    for (p, &y) in observation.iter().enumerate() {
        let overlap = p >= tau && p < n;
        match (overlap, y) {
            (true, 2 | -2) => {
                m1[p] = u8::from(y < 0);
                m2[p - tau] = u8::from(y < 0);
            }
            (true, 0) => {}
            (false, 1 | -1) if p < n => m1[p] = u8::from(y < 0),
            (false, 1 | -1) => m2[p - tau] = u8::from(y < 0),
            _ => {
                return Err(Error::MalformedObservation(format!(
                    "symbol {y} at position {p} is impossible for n = {n}, tau = {tau}"
                )))
            }
        }
    }
    let erased = erased_positions(observation, n, tau);
    // With erased bits zeroed, H m1 and H m2 are the known-part syndromes.
    let s1 = h.mul_vec(&m1)?;
    let s2 = h.mul_vec(&m2)?;
    if erased.is_empty() {
        if s1.iter().chain(&s2).any(|&b| b != 0) {
            return Err(Error::ObservationInconsistent("unerased words are not codewords".into()));
        }
        return Ok(RlcOutcome::Decoded { m1, m2 });
    }
    let shifted: Vec<usize> = erased.iter().map(|&p| p - tau).collect();
    let ones = h.select_columns(&shifted).mul_vec(&vec![1; erased.len()])?;
    let rhs: Vec<u8> = s1.iter().copied().chain(s2.iter().zip(&ones).map(|(a, b)| a ^ b)).collect();
    match stacked_matrix(h, tau, &erased).solve(&rhs)? {
        Solution::Unique(x) => {
            for (k, &p) in erased.iter().enumerate() {
                m1[p] = x[k];
                m2[p - tau] = x[k] ^ 1;
            }
            Ok(RlcOutcome::Decoded { m1, m2 })
        }
        Solution::Family { .. } => Ok(RlcOutcome::Ambiguous),
        Solution::Inconsistent => Err(Error::ObservationInconsistent(
            "stacked parity system has no solution".into(),
        )),
    }
}

/// Uniform codeword from a nullspace basis.
pub fn random_codeword<R: RngCore + ?Sized>(basis: &[Vec<u8>], n: usize, rng: &mut R) -> Vec<u8> {
    let mut c = vec![0u8; n];
    for v in basis {
        if rng.random::<bool>() {
            for (a, b) in c.iter_mut().zip(v) {
                *a ^= b;
            }
        }
    }
    c
}

/// `((n - 1) / 2) * 2^(n (2R - 3/2))`.
pub fn rlc_bound(n: usize, rate: f64) -> f64 {
    (n as f64 - 1.0) / 2.0 * 2f64.powf(n as f64 * (2.0 * rate - 1.5))
}

/// `prod_{k=1}^{d} (1 - 2^(k+1) / 2^(2r))`, a lower bound on the probability
/// that the stacked matrix on `d` erasures has full column rank.
pub fn product_bound(d: usize, r: usize) -> f64 {
    (1..=d)
        .map(|k| 1.0 - 2f64.powi(k as i32 + 1 - 2 * r as i32))
        .product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlcReport {
    pub n: usize,
    pub rate: f64,
    pub k: usize,
    pub tau: usize,
    pub trials: usize,
    pub errors: usize,
    pub empirical_pe: f64,
    pub bound: f64,
    /// Trials whose stacked matrix had full column rank.
    pub full_rank: usize,
    pub mean_erased: f64,
}

impl RlcReport {
    pub fn csv_header() -> &'static str {
        "n,rate,tau,trials,errors,empirical_pe,bound"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6}",
            self.n, self.rate, self.tau, self.trials, self.errors, self.empirical_pe, self.bound
        )
    }
}

/// Per-trial generator: stream `trial` of the master seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

struct TrialOutcome {
    error: bool,
    full_rank: bool,
    erased: usize,
}

fn rlc_trial(n: usize, r: usize, tau: usize, rng: &mut ChaCha8Rng) -> TrialOutcome {
    let h = Gf2Matrix::random(r, n, rng);
    let basis = h.nullspace();
    let m1 = random_codeword(&basis, n, rng);
    let m2 = random_codeword(&basis, n, rng);
    let y = rlc_observe(&m1, &m2, tau);
    let erased = erased_positions(&y, n, tau);
    let full_rank = stacked_matrix(&h, tau, &erased).rank() == erased.len();
    let error = match rlc_decode(&h, tau, &y) {
        Ok(RlcOutcome::Decoded { m1: a, m2: b }) => a != m1 || b != m2,
        _ => true,
    };
    TrialOutcome {
        error,
        full_rank,
        erased: erased.len(),
    }
}

/// Largest blocklength accepted by [`rlc_experiment`].
pub const MAX_RLC_LENGTH: usize = 512;

/// Monte-Carlo error rate of random `(n, round(nR))` codes with i.i.d.
/// Bernoulli(1/2) parity checks. A trial fails if decoding is ambiguous or
/// returns a different pair.
pub fn rlc_experiment(n: usize, rate: f64, tau: usize, trials: usize, seed: u64) -> Result<RlcReport> {
    if n == 0 || trials == 0 || !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidConfig("need n >= 1, trials >= 1 and 0 <= R <= 1".into()));
    }
    if n > MAX_RLC_LENGTH {
        return Err(Error::InvalidConfig(format!(
            "n = {n} exceeds {MAX_RLC_LENGTH}; elimination cost is cubic"
        )));
    }
    if tau > n {
        return Err(Error::TauOutOfRange { tau, n });
    }
    let k = (n as f64 * rate).round() as usize;
    let r = n - k;
    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|t| rlc_trial(n, r, tau, &mut trial_rng(seed, t)))
        .collect();
    let errors = outcomes.iter().filter(|o| o.error).count();
    Ok(RlcReport {
        n,
        rate,
        k,
        tau,
        trials,
        errors,
        empirical_pe: errors as f64 / trials as f64,
        bound: rlc_bound(n, rate),
        full_rank: outcomes.iter().filter(|o| o.full_rank).count(),
        mean_erased: outcomes.iter().map(|o| o.erased as f64).sum::<f64>() / trials as f64,
    })
}

/// Fraction of trials in which the stacked matrix of a fresh `r x n` random
/// `H` on `d` uniformly chosen overlap positions has full column rank.
pub fn stacked_full_rank_frequency(n: usize, r: usize, tau: usize, d: usize, trials: usize, seed: u64) -> f64 {
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = trial_rng(seed, t);
            let h = Gf2Matrix::random(r, n, &mut rng);
            let mut overlap: Vec<usize> = (tau..n).collect();
            let (chosen, _) = overlap.partial_shuffle(&mut rng, d);
            let mut erased = chosen.to_vec();
            erased.sort_unstable();
            stacked_matrix(&h, tau, &erased).rank() == d
        })
        .count();
    hits as f64 / trials as f64
}
