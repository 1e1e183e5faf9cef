//! The noiseless two-user adder channel with delay and shared dither.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `(-1)^b`.
#[inline]
pub fn beta(bit: u8) -> i8 {
    1 - 2 * (bit & 1) as i8
}

/// Antipodal symbols `beta(m_i + d_i)` for a coset word `m` and dither `d`.
/// After the channel multiplies by `beta(d_i)` again, only `beta(m_i)` remains.
pub fn modulate(m: &[u8], dither: &[u8]) -> Vec<i8> {
    m.iter().zip(dither).map(|(&a, &b)| beta(a ^ b)).collect()
}

/// `y_p = c1_p beta(d_p) + c2_{p - tau} beta(d_{p - tau})` for
/// `p = 0..n + tau`, with symbols outside `0..n` taken as zero.
pub fn transmit(c1: &[i8], c2: &[i8], tau: usize, dither: &[u8]) -> Result<Vec<i8>> {
    let n = c1.len();
    for len in [c2.len(), dither.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    if tau > n {
        return Err(Error::TauOutOfRange { tau, n });
    }
    Ok((0..n + tau)
        .map(|p| {
            let a = if p < n { c1[p] * beta(dither[p]) } else { 0 };
            let b = if p >= tau { c2[p - tau] * beta(dither[p - tau]) } else { 0 };
            a + b
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointChannelInstance {
    pub n: usize,
    pub tau: usize,
    pub observation: Vec<i8>,
    pub dither: Vec<u8>,
    pub erased_overlap: Vec<usize>,
}

impl JointChannelInstance {
    pub fn new(c1: &[i8], c2: &[i8], tau: usize, dither: &[u8]) -> Result<Self> {
        let observation = transmit(c1, c2, tau, dither)?;
        let erased_overlap = (tau..c1.len()).filter(|&p| observation[p] == 0).collect();
        Ok(JointChannelInstance {
            n: c1.len(),
            tau,
            observation,
            dither: dither.to_vec(),
            erased_overlap,
        })
    }
}

/// Overlap positions `tau..n`, each erased independently with probability 1/2.
pub fn sample_erasure_pattern(n: usize, tau: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    erasure_pattern_with(n, tau, &mut rng)
}

pub fn erasure_pattern_with<R: Rng + ?Sized>(n: usize, tau: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(n.saturating_sub(tau) / 2 + 8);
    let mut p = tau;
    while p < n {
        let word = rng.next_u64();
        for b in 0..64.min(n - p) {
            if (word >> b) & 1 == 1 {
                out.push(p + b);
            }
        }
        p += 64;
    }
    out
}

/// Delay from the count of magnitude-one symbols, which occur only at the
/// `2 tau` boundary positions.
pub fn detect_tau(observation: &[i8]) -> Result<usize> {
    let ones = observation.iter().filter(|y| y.abs() == 1).count();
    if ones % 2 == 1 {
        return Err(Error::MalformedObservation(format!(
            "{ones} magnitude-one symbols; expected an even count"
        )));
    }
    Ok(ones / 2)
}

/// Uniform random bits.
pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}
