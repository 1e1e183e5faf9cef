//! Slow, definition-level oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ubac::tanner::TannerGraph;

/// A MAC link at delay `tau` whose two ends are degree-one VNs:
/// `(user-1 index, user-1 check, user-2 check)`.
pub fn degree_one_links(g: &TannerGraph, tau: usize) -> Vec<(usize, u32, u32)> {
    (tau..g.n())
        .filter(|&i| g.neighbors(i).len() == 1 && g.neighbors(i - tau).len() == 1)
        .map(|i| (i, g.neighbors(i)[0], g.neighbors(i - tau)[0]))
        .collect()
}

/// Stopping condition straight from the definition: no check of either user
/// sees exactly one member of that user.
fn is_stopping(links: &[(usize, u32, u32)], chosen: &[usize]) -> bool {
    let mut c1: BTreeMap<u32, usize> = BTreeMap::new();
    let mut c2: BTreeMap<u32, usize> = BTreeMap::new();
    for &k in chosen {
        *c1.entry(links[k].1).or_default() += 1;
        *c2.entry(links[k].2).or_default() += 1;
    }
    c1.values().chain(c2.values()).all(|&c| c >= 2)
}

fn minimal_only(mut sets: Vec<Vec<usize>>) -> BTreeSet<Vec<usize>> {
    sets.sort_by_key(Vec::len);
    let mut keep: Vec<Vec<usize>> = Vec::new();
    for s in sets {
        if !keep.iter().any(|t| t.iter().all(|x| s.contains(x))) {
            keep.push(s);
        }
    }
    keep.into_iter().collect()
}

fn to_vn_sets(links: &[(usize, u32, u32)], tau: usize, sets: BTreeSet<Vec<usize>>) -> BTreeSet<Vec<(u8, usize)>> {
    sets.into_iter()
        .map(|s| {
            let mut v: Vec<(u8, usize)> = s.iter().flat_map(|&k| [(1, links[k].0), (2, links[k].0 - tau)]).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

/// Every subset of at most `2 k_max` degree-one links, filtered by the
/// stopping condition and then by minimality.
pub fn subset_oracle(g: &TannerGraph, tau: usize, k_max: usize) -> BTreeSet<Vec<(u8, usize)>> {
    let links = degree_one_links(g, tau);
    let mut found = Vec::new();
    let mut chosen = Vec::new();
    fn rec(
        links: &[(usize, u32, u32)],
        from: usize,
        limit: usize,
        chosen: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
    ) {
        if !chosen.is_empty() && is_stopping(links, chosen) {
            found.push(chosen.clone());
        }
        if chosen.len() == limit {
            return;
        }
        for k in from..links.len() {
            chosen.push(k);
            rec(links, k + 1, limit, chosen, found);
            chosen.pop();
        }
    }
    rec(&links, 0, 2 * k_max, &mut chosen, &mut found);
    to_vn_sets(&links, tau, minimal_only(found))
}

/// Grows sets from each seed link by repeatedly covering a check that holds
/// a single member, branching over every link that could cover it.
pub fn closure_oracle(g: &TannerGraph, tau: usize, k_max: usize) -> BTreeSet<Vec<(u8, usize)>> {
    let links = degree_one_links(g, tau);
    let mut by_c1: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut by_c2: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (k, l) in links.iter().enumerate() {
        by_c1.entry(l.1).or_default().push(k);
        by_c2.entry(l.2).or_default().push(k);
    }
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    fn grow(
        links: &[(usize, u32, u32)],
        by_c1: &BTreeMap<u32, Vec<usize>>,
        by_c2: &BTreeMap<u32, Vec<usize>>,
        set: &mut BTreeSet<usize>,
        limit: usize,
        found: &mut BTreeSet<Vec<usize>>,
    ) {
        let mut c1: BTreeMap<u32, usize> = BTreeMap::new();
        let mut c2: BTreeMap<u32, usize> = BTreeMap::new();
        for &k in set.iter() {
            *c1.entry(links[k].1).or_default() += 1;
            *c2.entry(links[k].2).or_default() += 1;
        }
        let lonely = c1
            .iter()
            .find(|(_, &c)| c == 1)
            .map(|(&c, _)| &by_c1[&c])
            .or_else(|| c2.iter().find(|(_, &c)| c == 1).map(|(&c, _)| &by_c2[&c]));
        let Some(options) = lonely else {
            found.insert(set.iter().copied().collect());
            return;
        };
        if set.len() == limit {
            return;
        }
        for &k in options {
            if set.insert(k) {
                grow(links, by_c1, by_c2, set, limit, found);
                set.remove(&k);
            }
        }
    }
    for seed in 0..links.len() {
        let mut set = BTreeSet::from([seed]);
        grow(&links, &by_c1, &by_c2, &mut set, 2 * k_max, &mut found);
    }
    to_vn_sets(&links, tau, minimal_only(found.into_iter().collect()))
}

/// Sequential peeling in the given check order, one resolution at a time,
/// until nothing changes. Returns the erased `(user, index)` pairs.
pub fn sequential_peel(g: &TannerGraph, tau: usize, erased: &[usize], order: &[usize]) -> BTreeSet<(u8, usize)> {
    let n = g.n();
    let mut gone: [Vec<bool>; 2] = [vec![false; n], vec![false; n]];
    for &p in erased {
        gone[0][p] = true;
        gone[1][p - tau] = true;
    }
    let checks = g.check_neighbors();
    loop {
        let mut progress = false;
        for user in 0..2 {
            for &c in order {
                // A VN attached an even number of times drops out of the check.
                let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
                for &v in &checks[c] {
                    *counts.entry(v).or_default() += 1;
                }
                let open: Vec<u32> = counts
                    .iter()
                    .filter(|(&v, &k)| k % 2 == 1 && gone[user][v as usize])
                    .map(|(&v, _)| v)
                    .collect();
                if let [v] = open[..] {
                    let v = v as usize;
                    gone[user][v] = false;
                    // The MAC tie recovers the partner immediately.
                    if user == 0 && v >= tau {
                        gone[1][v - tau] = false;
                    } else if user == 1 && v + tau < n {
                        gone[0][v + tau] = false;
                    }
                    progress = true;
                }
            }
        }
        if !progress {
            break;
        }
    }
    let mut out = BTreeSet::new();
    for (u, list) in gone.iter().enumerate() {
        for (i, &e) in list.iter().enumerate() {
            if e {
                out.insert((u as u8 + 1, i));
            }
        }
    }
    out
}

/// Rank by exhaustive elimination on `Vec<Vec<u8>>`, one bit per byte.
pub fn naive_rank(rows: &[Vec<u8>]) -> usize {
    let mut m: Vec<Vec<u8>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] == 1) else {
            continue;
        };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && m[r][c] == 1 {
                for k in 0..cols {
                    m[r][k] ^= m[rank][k];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// All codewords of `h` (as rows) by enumeration over `2^n` words.
pub fn all_codewords(h: &[Vec<u8>], n: usize) -> Vec<Vec<u8>> {
    (0u32..1 << n)
        .map(|w| (0..n).map(|i| ((w >> i) & 1) as u8).collect::<Vec<u8>>())
        .filter(|x| h.iter().all(|row| row.iter().zip(x).fold(0, |acc, (a, b)| acc ^ (a & b)) == 0))
        .collect()
}
