//! Random Tanner graphs from an ensemble, the delayed two-user view, and
//! stopping sets made only of degree-one variable nodes.
//!
//! Both users share one graph. Indices are 0-based throughout: with delay
//! `tau`, user-1 VN `i` and user-2 VN `i - tau` meet at channel position `i`
//! for `tau <= i < n`; the first `tau` user-1 VNs and the last `tau` user-2
//! VNs are observed alone.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::degree::{DegreeDistribution, EnsembleSpec};
use crate::error::{Error, Result};

/// Largest supported `K` for stopping-set searches.
pub const MAX_K: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n: usize,
    m: usize,
    vn_degrees: Vec<u32>,
    adjacency: Vec<Vec<u32>>,
    seed: u64,
    permutation_applied: bool,
}

impl TannerGraph {
    /// Graph from explicit per-VN check lists. Multi-edges are allowed.
    pub fn from_adjacency(m: usize, adjacency: Vec<Vec<u32>>) -> Result<Self> {
        let mut adjacency = adjacency;
        for (i, row) in adjacency.iter_mut().enumerate() {
            if let Some(&c) = row.iter().find(|&&c| c as usize >= m) {
                return Err(Error::InvalidConfig(format!("VN {i} links to CN {c} but m = {m}")));
            }
            row.sort_unstable();
        }
        Ok(TannerGraph {
            n: adjacency.len(),
            m,
            vn_degrees: adjacency.iter().map(|r| r.len() as u32).collect(),
            adjacency,
            seed: 0,
            permutation_applied: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn permutation_applied(&self) -> bool {
        self.permutation_applied
    }

    pub fn vn_degrees(&self) -> &[u32] {
        &self.vn_degrees
    }

    /// Sorted check indices of VN `i`, repeated for multi-edges.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adjacency
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn cn_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.m];
        for row in &self.adjacency {
            for &c in row {
                deg[c as usize] += 1;
            }
        }
        deg
    }

    /// Per-CN VN lists, repeated for multi-edges.
    pub fn check_neighbors(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.m];
        for (i, row) in self.adjacency.iter().enumerate() {
            for &c in row {
                out[c as usize].push(i as u32);
            }
        }
        out
    }

    /// Node counts per degree on the variable and check side.
    pub fn degree_census(&self) -> (BTreeMap<u32, usize>, BTreeMap<u32, usize>) {
        let count = |degs: &[u32]| {
            let mut map = BTreeMap::new();
            for &d in degs {
                *map.entry(d).or_insert(0) += 1;
            }
            map
        };
        (count(&self.vn_degrees), count(&self.cn_degrees()))
    }

    /// Design rate `1 - m / n` of the sampled graph.
    pub fn achieved_rate(&self) -> f64 {
        1.0 - self.m as f64 / self.n as f64
    }

    /// Header `n m seed`, then `i: c1 c2 ...` per VN.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.m, self.seed);
        for (i, row) in self.adjacency.iter().enumerate() {
            let _ = write!(out, "{i}:");
            for c in row {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let head: Vec<u64> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: 1,
                msg: "header must be `n m seed`".into(),
            })?;
        let [n, m, seed] = head[..] else {
            return Err(Error::Parse {
                line: 1,
                msg: "header must be `n m seed`".into(),
            });
        };
        let mut adjacency = vec![Vec::new(); n as usize];
        let mut seen = 0usize;
        for (idx, line) in lines {
            let err = |msg: &str| Error::Parse {
                line: idx + 1,
                msg: msg.into(),
            };
            let (vn, rest) = line.split_once(':').ok_or_else(|| err("expected `i: c1 c2 ...`"))?;
            let vn: usize = vn.trim().parse().map_err(|_| err("bad VN index"))?;
            if vn != seen || vn >= n as usize {
                return Err(err("VN lines must be in order 0..n"));
            }
            adjacency[vn] = rest
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err("bad CN index"))?;
            seen += 1;
        }
        if seen != n as usize {
            return Err(Error::Parse {
                line: seen + 2,
                msg: format!("expected {n} VN lines, found {seen}"),
            });
        }
        let mut g = Self::from_adjacency(m as usize, adjacency)?;
        g.seed = seed;
        g.permutation_applied = true;
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Largest-remainder apportionment of `total` nodes over node fractions.
fn apportion(total: usize, dist: &DegreeDistribution) -> Vec<(u32, usize)> {
    let node = dist.edge_to_node();
    let mut counts: Vec<(u32, usize, f64)> = node
        .iter()
        .map(|(d, f)| {
            let exact = f * total as f64;
            (d, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = counts.iter().map(|c| c.1).sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].2.total_cmp(&counts[a].2).then(a.cmp(&b)));
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        counts[k].1 += 1;
    }
    counts.into_iter().map(|(d, c, _)| (d, c)).collect()
}

fn sockets(counts: &[(u32, usize)]) -> i64 {
    counts.iter().map(|&(d, c)| d as i64 * c as i64).sum()
}

/// Moves single nodes between degree classes, check side first, until the
/// socket counts agree. Returns false if no move reduces the gap.
fn balance(vn: &mut [(u32, usize)], cn: &mut [(u32, usize)]) -> bool {
    loop {
        let gap = sockets(vn) - sockets(cn);
        if gap == 0 {
            return true;
        }
        // (new |gap|, side, from, to); side 0 = check, 1 = variable
        let mut best: Option<(i64, usize, usize, usize)> = None;
        for (side, counts) in [(0usize, &*cn), (1, &*vn)] {
            for a in 0..counts.len() {
                if counts[a].1 == 0 {
                    continue;
                }
                for b in 0..counts.len() {
                    let step = counts[b].0 as i64 - counts[a].0 as i64;
                    let new_gap = if side == 0 { gap - step } else { gap + step };
                    if new_gap.abs() < gap.abs() && best.is_none_or(|bst| new_gap.abs() < bst.0) {
                        best = Some((new_gap.abs(), side, a, b));
                    }
                }
            }
        }
        let Some((_, side, a, b)) = best else {
            return false;
        };
        let counts = if side == 0 { &mut *cn } else { &mut *vn };
        counts[a].1 -= 1;
        counts[b].1 += 1;
    }
}

/// Degree counts for a graph with `n` VNs drawn from `spec`.
pub fn degree_counts(spec: &EnsembleSpec, n: usize) -> Result<(Vec<(u32, usize)>, Vec<(u32, usize)>)> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be positive".into()));
    }
    let m0 = (n as f64 * spec.vn.mean_degree() / spec.cn.mean_degree()).round().max(1.0) as i64;
    for delta in [0i64, -1, 1, -2, 2] {
        let m = m0 + delta;
        if m < 1 {
            continue;
        }
        let mut vn = apportion(n, &spec.vn);
        let mut cn = apportion(m as usize, &spec.cn);
        if balance(&mut vn, &mut cn) {
            return Ok((vn, cn));
        }
    }
    Err(Error::DegreeAssignmentOverflow(format!(
        "cannot balance sockets for n = {n} near m = {m0}"
    )))
}

/// Samples a graph: VN degrees are uniformly permuted and sockets are joined
/// by a uniform random permutation. Multi-edges are kept.
pub fn sample_graph(spec: &EnsembleSpec, n: usize, seed: u64) -> Result<TannerGraph> {
    let (vn_counts, cn_counts) = degree_counts(spec, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vn_degrees: Vec<u32> = vn_counts
        .iter()
        .flat_map(|&(d, c)| std::iter::repeat_n(d, c))
        .collect();
    vn_degrees.shuffle(&mut rng);
    let mut cn_degrees: Vec<u32> = cn_counts
        .iter()
        .flat_map(|&(d, c)| std::iter::repeat_n(d, c))
        .collect();
    cn_degrees.shuffle(&mut rng);
    let mut cn_sockets: Vec<u32> = cn_degrees
        .iter()
        .enumerate()
        .flat_map(|(c, &d)| std::iter::repeat_n(c as u32, d as usize))
        .collect();
    cn_sockets.shuffle(&mut rng);
    let mut next = cn_sockets.into_iter();
    let adjacency: Vec<Vec<u32>> = vn_degrees
        .iter()
        .map(|&d| {
            let mut row: Vec<u32> = next.by_ref().take(d as usize).collect();
            row.sort_unstable();
            row
        })
        .collect();
    Ok(TannerGraph {
        n,
        m: cn_degrees.len(),
        vn_degrees,
        adjacency,
        seed,
        permutation_applied: true,
    })
}

/// MAC-node topology of the two-user graph at delay `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointView {
    pub n: usize,
    pub tau: usize,
}

impl JointView {
    /// Length `n + tau` of the channel output.
    pub fn observation_len(&self) -> usize {
        self.n + self.tau
    }

    /// Overlap positions, where both users transmit.
    pub fn overlap(&self) -> std::ops::Range<usize> {
        self.tau..self.n.max(self.tau)
    }

    /// User-2 partner of user-1 VN `i`, if any.
    pub fn partner_of_user1(&self, i: usize) -> Option<usize> {
        (i >= self.tau && i < self.n).then(|| i - self.tau)
    }

    /// User-1 partner of user-2 VN `j`, if any.
    pub fn partner_of_user2(&self, j: usize) -> Option<usize> {
        (j + self.tau < self.n).then(|| j + self.tau)
    }

    /// MAC links `(user-1 index, user-2 index)` in position order.
    pub fn mac_links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.overlap().map(move |i| (i, i - self.tau))
    }
}

pub fn joint_view(graph: &TannerGraph, tau: usize) -> Result<JointView> {
    if tau > graph.n() {
        return Err(Error::TauOutOfRange { tau, n: graph.n() });
    }
    Ok(JointView { n: graph.n(), tau })
}

/// A minimal stopping set of the joint graph made of degree-one VNs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StoppingSetReport {
    pub tau: usize,
    /// Sorted `(user, index)` pairs with `user` in `{1, 2}`.
    pub vn_indices: Vec<(u8, usize)>,
    pub size: usize,
    pub k: usize,
}

/// A MAC link whose two ends both have degree one.
#[derive(Debug, Clone, Copy)]
struct Pair {
    user1: usize,
    c1: u32,
    c2: u32,
}

/// Every minimal stopping set of size at most `4 * k_max` made only of
/// degree-one VNs, for each delay in `1..=tau_max`.
///
/// Such a set is closed under MAC partners and every member shares its check
/// with another member of the same user. The minimal ones are exactly the
/// cycles that alternate between MAC links and shared checks, found here by
/// depth-first search over MAC links whose ends both have degree one.
pub fn find_deg1_stopping_sets(graph: &TannerGraph, tau_max: usize, k_max: usize) -> Vec<StoppingSetReport> {
    let k_max = k_max.min(MAX_K);
    let check_of: Vec<Option<u32>> = (0..graph.n())
        .map(|i| (graph.vn_degrees()[i] == 1).then(|| graph.neighbors(i)[0]))
        .collect();
    let mut out = Vec::new();
    if k_max == 0 {
        return out;
    }
    for tau in 1..=tau_max.min(graph.n()) {
        let pairs: Vec<Pair> = (tau..graph.n())
            .filter_map(|i| match (check_of[i], check_of[i - tau]) {
                (Some(c1), Some(c2)) => Some(Pair { user1: i, c1, c2 }),
                _ => None,
            })
            .collect();
        for set in minimal_cycle_sets(&pairs, k_max) {
            let mut vn_indices: Vec<(u8, usize)> = set
                .iter()
                .flat_map(|&p| [(1u8, pairs[p].user1), (2u8, pairs[p].user1 - tau)])
                .collect();
            vn_indices.sort_unstable();
            out.push(StoppingSetReport {
                tau,
                size: vn_indices.len(),
                k: vn_indices.len() / 4,
                vn_indices,
            });
        }
    }
    out
}

fn minimal_cycle_sets(pairs: &[Pair], k_max: usize) -> Vec<Vec<usize>> {
    let mut by_c1: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut by_c2: HashMap<u32, Vec<usize>> = HashMap::new();
    for (p, pair) in pairs.iter().enumerate() {
        by_c1.entry(pair.c1).or_default().push(p);
        by_c2.entry(pair.c2).or_default().push(p);
    }
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut path = Vec::with_capacity(2 * k_max);
    for start in 0..pairs.len() {
        // A pair needs a partner on both checks to lie on any cycle.
        if by_c1[&pairs[start].c1].len() < 2 || by_c2[&pairs[start].c2].len() < 2 {
            continue;
        }
        path.clear();
        path.push(start);
        extend_cycle(pairs, &by_c1, &by_c2, 2 * k_max, &mut path, &mut found);
    }
    // Keep only sets that contain no other stopping set.
    let mut sets: Vec<Vec<usize>> = found.into_iter().collect();
    sets.sort_by_key(Vec::len);
    let mut minimal: Vec<Vec<usize>> = Vec::new();
    for s in sets {
        let contains_smaller = minimal
            .iter()
            .any(|t| t.len() < s.len() && t.iter().all(|x| s.binary_search(x).is_ok()));
        if !contains_smaller {
            minimal.push(s);
        }
    }
    minimal.sort();
    minimal
}

/// Links alternate: shared user-1 check after even positions, shared user-2
/// check after odd ones; the closing link is a user-2 check.
fn extend_cycle(
    pairs: &[Pair],
    by_c1: &HashMap<u32, Vec<usize>>,
    by_c2: &HashMap<u32, Vec<usize>>,
    max_len: usize,
    path: &mut Vec<usize>,
    found: &mut BTreeSet<Vec<usize>>,
) {
    let start = path[0];
    let last = *path.last().unwrap();
    let via_c1 = path.len() % 2 == 1;
    if !via_c1 && pairs[last].c2 == pairs[start].c2 && path.len() >= 2 {
        let mut set = path.clone();
        set.sort_unstable();
        found.insert(set);
    }
    if path.len() == max_len {
        return;
    }
    let group = if via_c1 {
        &by_c1[&pairs[last].c1]
    } else {
        &by_c2[&pairs[last].c2]
    };
    for &next in group {
        if next <= start || path.contains(&next) {
            continue;
        }
        path.push(next);
        extend_cycle(pairs, by_c1, by_c2, max_len, path, found);
        path.pop();
    }
}

/// Resamples until the graph has no degree-one stopping set of size at most
/// `4 * k_max` for any delay in `1..=tau_max`. Returns the graph and the
/// number of resamples after the first draw.
pub fn expurgate(
    spec: &EnsembleSpec,
    n: usize,
    tau_max: usize,
    k_max: usize,
    max_resamples: usize,
    seed: u64,
) -> Result<(TannerGraph, usize)> {
    let bound = error_floor_bound(spec.degree_one_fraction(), spec.design_rate, tau_max, k_max);
    if !(bound > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "floor bound {bound:.4} is not positive; expurgation would not terminate"
        )));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..=max_resamples {
        let graph = sample_graph(spec, n, seeds.random())?;
        if find_deg1_stopping_sets(&graph, tau_max, k_max).is_empty() {
            return Ok((graph, attempt));
        }
    }
    Err(Error::ExpurgationBudgetExceeded {
        budget: max_resamples,
    })
}

/// Lower bound on the probability that a graph has no degree-one stopping
/// set of size at most `4K` for any delay in `1..=tau_max`, without the
/// `O(K / n^2)` correction. Negative values mean the bound is vacuous.
pub fn error_floor_bound(l1: f64, rate: f64, tau_max: usize, k: usize) -> f64 {
    let ratio = l1 * l1 / (1.0 - rate);
    let sum: f64 = (1..=k).map(|j| ratio.powi(j as i32) / (2 * j) as f64).sum();
    1.0 - 0.5 * tau_max as f64 * sum
}

/// Expected number of 4-stopping-sets per graph over `tau_max` delays.
pub fn expected_four_sets(l1: f64, rate: f64, tau_max: usize) -> f64 {
    tau_max as f64 * l1.powi(4) / (2.0 * (1.0 - rate).powi(2))
}
