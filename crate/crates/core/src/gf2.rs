//! Dense bit-packed matrices over GF(2).

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::tanner::TannerGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    bits: Vec<u64>,
}

/// Classification of `M x = b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Unique(Vec<u8>),
    /// A particular solution plus a basis of the nullspace of `M`.
    Family {
        particular: Vec<u8>,
        nullspace: Vec<Vec<u8>>,
    },
    Inconsistent,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = cols.div_ceil(64);
        Gf2Matrix {
            rows,
            cols,
            stride,
            bits: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                m.set(r, c, v);
            }
        }
        Ok(m)
    }

    /// I.i.d. Bernoulli(1/2) entries.
    pub fn random<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        let tail = cols % 64;
        for r in 0..rows {
            for w in 0..m.stride {
                let mut word = rng.next_u64();
                if w + 1 == m.stride && tail != 0 {
                    word &= (1u64 << tail) - 1;
                }
                m.bits[r * m.stride + w] = word;
            }
        }
        m
    }

    /// Parity-check matrix of a graph; edges of even multiplicity cancel.
    pub fn parity_check(graph: &TannerGraph) -> Self {
        let mut m = Self::zeros(graph.m(), graph.n());
        for (i, row) in graph.adjacency().iter().enumerate() {
            for &c in row {
                m.flip(c as usize, i);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        ((self.bits[r * self.stride + c / 64] >> (c % 64)) & 1) as u8
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        let w = &mut self.bits[r * self.stride + c / 64];
        if v & 1 == 1 {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.bits[r * self.stride + c / 64] ^= 1 << (c % 64);
    }

    pub fn row(&self, r: usize) -> Vec<u8> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.bits[r * self.stride..(r + 1) * self.stride]
    }

    /// `row[dst] ^= row[src]`.
    fn xor_row(&mut self, dst: usize, src: usize) {
        let s = self.stride;
        let (a, b) = if dst < src {
            let (lo, hi) = self.bits.split_at_mut(src * s);
            (&mut lo[dst * s..(dst + 1) * s], &hi[..s])
        } else {
            let (lo, hi) = self.bits.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..(src + 1) * s])
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= y;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for w in 0..self.stride {
                self.bits.swap(a * self.stride + w, b * self.stride + w);
            }
        }
    }

    pub fn mul_vec(&self, x: &[u8]) -> Result<Vec<u8>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        let mut packed = vec![0u64; self.stride];
        for (c, &v) in x.iter().enumerate() {
            if v & 1 == 1 {
                packed[c / 64] |= 1 << (c % 64);
            }
        }
        Ok((0..self.rows)
            .map(|r| {
                let ones: u32 = self.row_words(r).iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
                (ones & 1) as u8
            })
            .collect())
    }

    /// Submatrix of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (k, &c) in cols.iter().enumerate() {
                if self.get(r, c) == 1 {
                    m.set(r, k, 1);
                }
            }
        }
        m
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.cols,
            });
        }
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Ok(Gf2Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            stride: self.stride,
            bits,
        })
    }

    /// Reduced row echelon form in place; returns pivot columns by row.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c) == 1) else {
                continue;
            };
            self.swap_rows(r, p);
            for i in 0..self.rows {
                if i != r && self.get(i, c) == 1 {
                    self.xor_row(i, r);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref_in_place().len()
    }

    /// Basis of `{x : M x = 0}`, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<u8>> {
        let mut red = self.clone();
        let pivots = red.rref_in_place();
        nullspace_from_rref(&red, &pivots, self.cols)
    }

    pub fn solve(&self, b: &[u8]) -> Result<Solution> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                actual: b.len(),
            });
        }
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) == 1 {
                    aug.set(r, c, 1);
                }
            }
            aug.set(r, self.cols, b[r]);
        }
        let pivots = aug.rref_in_place();
        if pivots.last() == Some(&self.cols) {
            return Ok(Solution::Inconsistent);
        }
        let mut particular = vec![0u8; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            particular[c] = aug.get(r, self.cols);
        }
        if pivots.len() == self.cols {
            return Ok(Solution::Unique(particular));
        }
        let nullspace = nullspace_from_rref(&aug, &pivots, self.cols);
        Ok(Solution::Family { particular, nullspace })
    }
}

/// Nullspace over the first `cols` columns of a reduced matrix.
fn nullspace_from_rref(red: &Gf2Matrix, pivots: &[usize], cols: usize) -> Vec<Vec<u8>> {
    let mut is_pivot = vec![false; red.cols];
    for &c in pivots {
        is_pivot[c] = true;
    }
    (0..cols)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = vec![0u8; cols];
            v[f] = 1;
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = red.get(r, f);
            }
            v
        })
        .collect()
}

/// Systematic encoder for the coset `{m : H m = H d}` of a graph's code.
#[derive(Debug, Clone)]
pub struct LdpcEncoder {
    reduced: Gf2Matrix,
    pivots: Vec<usize>,
    free: Vec<usize>,
}

impl LdpcEncoder {
    pub fn new(graph: &TannerGraph) -> Self {
        let mut reduced = Gf2Matrix::parity_check(graph);
        let pivots = reduced.rref_in_place();
        let mut is_pivot = vec![false; graph.n()];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let free = (0..graph.n()).filter(|&c| !is_pivot[c]).collect();
        LdpcEncoder { reduced, pivots, free }
    }

    /// Code dimension `n - rank(H)`.
    pub fn dimension(&self) -> usize {
        self.free.len()
    }

    /// `info` fills the first free positions, `rng` the rest; the result is
    /// the codeword plus the dither.
    pub fn encode<R: Rng + ?Sized>(&self, dither: &[u8], info: &[u8], rng: &mut R) -> Result<Vec<u8>> {
        let n = self.reduced.cols();
        if dither.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: dither.len(),
            });
        }
        if info.len() > self.free.len() {
            return Err(Error::RankDeficient {
                corank: self.free.len(),
                info: info.len(),
            });
        }
        let mut u = vec![0u8; n];
        for (k, &f) in self.free.iter().enumerate() {
            u[f] = match info.get(k) {
                Some(&b) => b & 1,
                None => rng.random::<bool>() as u8,
            };
        }
        for (r, &p) in self.pivots.iter().enumerate() {
            let mut acc = 0u8;
            for &f in &self.free {
                acc ^= self.reduced.get(r, f) & u[f];
            }
            u[p] = acc;
        }
        Ok(u.iter().zip(dither).map(|(a, b)| a ^ (b & 1)).collect())
    }
}

/// Codeword of `graph` shifted into the dither coset.
pub fn ldpc_encode(graph: &TannerGraph, dither: &[u8], info: &[u8], seed: u64) -> Result<Vec<u8>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    LdpcEncoder::new(graph).encode(dither, info, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::reference_code;
    use crate::tanner::sample_graph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_examples() {
        assert_eq!(Gf2Matrix::identity(4).rank(), 4);
        let ones = Gf2Matrix::from_rows(&[vec![1; 3], vec![1; 3], vec![1; 3]]).unwrap();
        assert_eq!(ones.rank(), 1);
        assert_eq!(Gf2Matrix::zeros(3, 70).rank(), 0);
    }

    #[test]
    fn solve_examples() {
        let b = vec![1, 0, 1, 1];
        assert_eq!(Gf2Matrix::identity(4).solve(&b).unwrap(), Solution::Unique(b));
        assert_eq!(
            Gf2Matrix::zeros(2, 3).solve(&[0, 1]).unwrap(),
            Solution::Inconsistent
        );
        assert!(matches!(
            Gf2Matrix::zeros(2, 3).solve(&[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_consistent_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = Gf2Matrix::random(30, 40, &mut rng);
            let x: Vec<u8> = (0..40).map(|_| rng.random::<bool>() as u8).collect();
            let b = m.mul_vec(&x).unwrap();
            match m.solve(&b).unwrap() {
                Solution::Family { particular, nullspace } => {
                    assert_eq!(m.mul_vec(&particular).unwrap(), b);
                    assert_eq!(nullspace.len(), 40 - m.rank());
                    for v in nullspace {
                        assert!(m.mul_vec(&v).unwrap().iter().all(|&z| z == 0));
                    }
                }
                other => panic!("expected a family, got {other:?}"),
            }
        }
    }

    #[test]
    fn random_matrix_masks_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Gf2Matrix::random(5, 70, &mut rng);
        let t = m.select_columns(&(0..70).collect::<Vec<_>>());
        assert_eq!(m, t);
    }

    #[test]
    fn encoder_respects_coset() {
        let g = sample_graph(&reference_code(1), 200, 3).unwrap();
        let h = Gf2Matrix::parity_check(&g);
        let enc = LdpcEncoder::new(&g);
        assert_eq!(enc.dimension(), 200 - h.rank());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dither: Vec<u8> = (0..200).map(|_| rng.random::<bool>() as u8).collect();
        let target = h.mul_vec(&dither).unwrap();
        let a = enc.encode(&dither, &[0, 1, 1], &mut rng).unwrap();
        assert_eq!(h.mul_vec(&a).unwrap(), target);
        let zero = ldpc_encode(&g, &vec![0; 200], &vec![0; enc.dimension()], 0).unwrap();
        assert!(zero.iter().all(|&b| b == 0));
        let x = ldpc_encode(&g, &dither, &vec![0; enc.dimension()], 0).unwrap();
        let mut info = vec![0; enc.dimension()];
        info[0] = 1;
        let y = ldpc_encode(&g, &dither, &info, 0).unwrap();
        assert_ne!(x, y);
        assert!(matches!(
            ldpc_encode(&g, &dither, &vec![0; enc.dimension() + 1], 0),
            Err(Error::RankDeficient { .. })
        ));
    }
}
