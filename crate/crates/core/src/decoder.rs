//! Joint peeling decoder for the two-user erasure model.
//!
//! Channel symbols are read in the message domain: with shared dither the
//! output at an overlap position is `beta(m1_i) + beta(m2_{i-tau})` where
//! `beta(b) = (-1)^b`, so `+-2` pins both bits, `0` erases both and ties them
//! by `m1_i != m2_{i-tau}`, and `+-1` pins a lone boundary bit. Every user's
//! word lies in the dither coset, so check `j` sums to `(H d)_j`.
//!
//! Each iteration first lets bits resolved in the previous iteration cross
//! their erased MAC positions, then runs one flooding check step on both
//! users. The erased fraction after iteration `l` then follows the density
//! evolution value `p_l`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::tanner::{joint_view, JointView, TannerGraph};

pub const DEFAULT_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// `None` marks a bit that is still erased. All zeros in value-free mode.
    pub user1_values: Vec<Option<u8>>,
    pub user2_values: Vec<Option<u8>>,
    pub iterations_used: usize,
    /// Entry 0 is the fraction erased by the channel; entry `l` follows
    /// iteration `l`. Fractions are over all `2n` bits.
    pub erased_fraction_per_iter: Vec<f64>,
    pub success: bool,
    /// Counter updates performed, one per edge touched by a resolved bit.
    pub edge_updates: usize,
}

impl DecodeResult {
    pub fn erased_count(&self) -> usize {
        self.user1_values.iter().chain(&self.user2_values).filter(|v| v.is_none()).count()
    }

    /// Erased `(user, index)` pairs in order.
    pub fn erased_set(&self) -> Vec<(u8, usize)> {
        let one = self.user1_values.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| (1, i));
        let two = self.user2_values.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| (2, i));
        one.chain(two).collect()
    }

    /// CSV with columns `iter,erased_fraction`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,erased_fraction\n");
        for (l, f) in self.erased_fraction_per_iter.iter().enumerate() {
            let _ = writeln!(out, "{l},{f:.9e}");
        }
        out
    }
}

/// Decodes both users from the channel output.
///
/// `observation` has length `n + tau` with symbols in `{-2, -1, 0, 1, 2}`;
/// `dither` is the shared binary dither of length `n`.
pub fn decode(
    graph: &TannerGraph,
    tau: usize,
    observation: &[i8],
    dither: &[u8],
    max_iters: usize,
) -> Result<DecodeResult> {
    let view = joint_view(graph, tau)?;
    let n = graph.n();
    if observation.len() != n + tau {
        return Err(Error::LengthMismatch {
            expected: n + tau,
            actual: observation.len(),
        });
    }
    if dither.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: dither.len(),
        });
    }
    let mut init = [vec![None; n], vec![None; n]];
    let mut tied = vec![false; n + tau];
    for (p, &y) in observation.iter().enumerate() {
        let has1 = p < n;
        let has2 = p >= tau;
        match (has1 && has2, y) {
            (true, 2) => {
                init[0][p] = Some(0);
                init[1][p - tau] = Some(0);
            }
            (true, -2) => {
                init[0][p] = Some(1);
                init[1][p - tau] = Some(1);
            }
            (true, 0) => tied[p] = true,
            (false, 1 | -1) => {
                let bit = u8::from(y < 0);
                if has1 {
                    init[0][p] = Some(bit);
                } else {
                    init[1][p - tau] = Some(bit);
                }
            }
            _ => {
                return Err(Error::MalformedObservation(format!(
                    "symbol {y} at position {p} is impossible for n = {n}, tau = {tau}"
                )))
            }
        }
    }
    let targets = parity_targets(graph, dither);
    Peeler::new(graph, view, init, tied, Some(targets)).run(max_iters)
}

/// Value-free decoding of an erasure pattern given as erased overlap
/// positions; the outcome depends on nothing else.
pub fn decode_erasure_pattern(
    graph: &TannerGraph,
    tau: usize,
    erased: &[usize],
    max_iters: usize,
) -> Result<DecodeResult> {
    let view = joint_view(graph, tau)?;
    let n = graph.n();
    let mut init = [vec![Some(0); n], vec![Some(0); n]];
    let mut tied = vec![false; n + tau];
    for &p in erased {
        if !view.overlap().contains(&p) {
            return Err(Error::MalformedObservation(format!(
                "position {p} is outside the overlap {tau}..{n}"
            )));
        }
        tied[p] = true;
        init[0][p] = None;
        init[1][p - tau] = None;
    }
    Peeler::new(graph, view, init, tied, None).run(max_iters)
}

/// `(H d)_j` with edges of even multiplicity cancelling.
pub fn parity_targets(graph: &TannerGraph, dither: &[u8]) -> Vec<u8> {
    let mut t = vec![0u8; graph.m()];
    for (i, row) in graph.adjacency().iter().enumerate() {
        for &c in row {
            t[c as usize] ^= dither[i] & 1;
        }
    }
    t
}

/// Neighborhoods with multi-edges reduced mod 2.
fn reduced_adjacency(graph: &TannerGraph) -> Vec<Vec<u32>> {
    graph
        .adjacency()
        .iter()
        .map(|row| {
            let mut out: Vec<u32> = Vec::with_capacity(row.len());
            for &c in row {
                if out.last() == Some(&c) {
                    out.pop();
                } else {
                    out.push(c);
                }
            }
            out
        })
        .collect()
}

struct CheckState {
    erased: Vec<u32>,
    erased_xor: Vec<u32>,
    /// Target xor the known neighbor values.
    residual: Vec<u8>,
}

struct Peeler {
    view: JointView,
    adj: Vec<Vec<u32>>,
    values: [Vec<Option<u8>>; 2],
    tied: Vec<bool>,
    checks: [CheckState; 2],
    with_values: bool,
    pending: Vec<(usize, u32)>,
    fresh: Vec<(usize, usize)>,
    edge_updates: usize,
}

impl Peeler {
    fn new(
        graph: &TannerGraph,
        view: JointView,
        values: [Vec<Option<u8>>; 2],
        tied: Vec<bool>,
        targets: Option<Vec<u8>>,
    ) -> Self {
        let adj = reduced_adjacency(graph);
        let m = graph.m();
        let with_values = targets.is_some();
        let targets = targets.unwrap_or_else(|| vec![0; m]);
        let checks = [0, 1].map(|u| {
            let mut st = CheckState {
                erased: vec![0; m],
                erased_xor: vec![0; m],
                residual: targets.clone(),
            };
            for (i, row) in adj.iter().enumerate() {
                for &c in row {
                    match values[u][i] {
                        Some(v) => st.residual[c as usize] ^= v,
                        None => {
                            st.erased[c as usize] += 1;
                            st.erased_xor[c as usize] ^= i as u32;
                        }
                    }
                }
            }
            st
        });
        let pending = (0..2)
            .flat_map(|u| (0..m as u32).map(move |c| (u, c)))
            .filter(|&(u, c)| checks[u].erased[c as usize] == 1)
            .collect();
        Peeler {
            view,
            adj,
            values,
            tied,
            checks,
            with_values,
            pending,
            fresh: Vec::new(),
            edge_updates: 0,
        }
    }

    fn erased_count(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_none()).count()
    }

    fn check_satisfied(&self) -> Result<()> {
        if !self.with_values {
            return Ok(());
        }
        for u in 0..2 {
            let st = &self.checks[u];
            if let Some(c) = (0..st.erased.len()).find(|&c| st.erased[c] == 0 && st.residual[c] != 0) {
                return Err(Error::ObservationInconsistent(format!(
                    "user {} check {c} is unsatisfied",
                    u + 1
                )));
            }
        }
        Ok(())
    }

    /// Sets bit `i` of user `u`; returns false if it was already known.
    fn assign(&mut self, u: usize, i: usize, v: u8) -> Result<bool> {
        if let Some(old) = self.values[u][i] {
            if self.with_values && old != v {
                return Err(Error::ObservationInconsistent(format!(
                    "user {} bit {i} resolved to both values",
                    u + 1
                )));
            }
            return Ok(false);
        }
        self.values[u][i] = Some(v);
        for k in 0..self.adj[i].len() {
            let c = self.adj[i][k] as usize;
            let st = &mut self.checks[u];
            st.erased[c] -= 1;
            st.erased_xor[c] ^= i as u32;
            st.residual[c] ^= v;
            self.edge_updates += 1;
            match st.erased[c] {
                1 => self.pending.push((u, c as u32)),
                0 if self.with_values && st.residual[c] != 0 => {
                    return Err(Error::ObservationInconsistent(format!(
                        "user {} check {c} is unsatisfied",
                        u + 1
                    )))
                }
                _ => {}
            }
        }
        self.fresh.push((u, i));
        Ok(true)
    }

    fn mac_step(&mut self) -> Result<bool> {
        let fresh = std::mem::take(&mut self.fresh);
        let mut progress = false;
        for (u, i) in fresh {
            let (pos, partner) = if u == 0 {
                (i, self.view.partner_of_user1(i))
            } else {
                (i + self.view.tau, self.view.partner_of_user2(i))
            };
            let Some(j) = partner else { continue };
            if !self.tied[pos] {
                continue;
            }
            let v = self.values[u][i].expect("fresh bits are known");
            progress |= self.assign(1 - u, j, v ^ 1)?;
        }
        Ok(progress)
    }

    fn check_step(&mut self) -> Result<bool> {
        let batch: Vec<(usize, usize, u8)> = std::mem::take(&mut self.pending)
            .into_iter()
            .filter(|&(u, c)| self.checks[u].erased[c as usize] == 1)
            .map(|(u, c)| {
                let st = &self.checks[u];
                (u, st.erased_xor[c as usize] as usize, st.residual[c as usize])
            })
            .collect();
        let mut progress = false;
        for (u, i, v) in batch {
            progress |= self.assign(u, i, v)?;
        }
        Ok(progress)
    }

    fn run(mut self, max_iters: usize) -> Result<DecodeResult> {
        self.check_satisfied()?;
        // Pinned bits at erased MAC positions cannot exist; nothing to cross yet.
        self.fresh.clear();
        let total = (2 * self.view.n).max(1) as f64;
        let mut erased = self.erased_count();
        let mut trace = vec![erased as f64 / total];
        let mut iterations = 0;
        while erased > 0 && iterations < max_iters {
            let mac = self.mac_step()?;
            let cn = self.check_step()?;
            if !(mac || cn) {
                break;
            }
            iterations += 1;
            erased = self.erased_count();
            trace.push(erased as f64 / total);
        }
        let [user1_values, user2_values] = self.values;
        Ok(DecodeResult {
            user1_values,
            user2_values,
            iterations_used: iterations,
            erased_fraction_per_iter: trace,
            success: erased == 0,
            edge_updates: self.edge_updates,
        })
    }
}
