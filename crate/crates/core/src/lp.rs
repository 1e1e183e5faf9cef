//! Dense simplex solver for small linear programs.
//!
//! Problems have the form `minimize c.x` subject to linear rows and `x >= 0`.
//! Every row is turned into `a.x <= b` with a slack; the solver keeps a
//! condensed tableau whose columns are only the nonbasic variables, so a pivot
//! costs `O(rows * vars)`. That suits the optimizer's programs: a handful of
//! degree variables against hundreds of grid constraints.
//!
//! Phase one runs the dual simplex with zero costs (every basis is dual
//! feasible) until the slacks are nonnegative; phase two runs the primal
//! simplex. Dantzig pricing is used until a run of degenerate pivots, after
//! which Bland's rule takes over to rule out cycling.

use thiserror::Error;

const EPS: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    /// `minimize objective . x` over `x >= 0`.
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars(), "row width must match variable count");
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add(coeffs, Relation::Le, rhs)
    }

    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add(coeffs, Relation::Ge, rhs)
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add(coeffs, Relation::Eq, rhs)
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let mut tab = Tableau::build(self);
        tab.phase_one()?;
        tab.phase_two()?;
        let n = self.num_vars();
        let mut x = vec![0.0; n];
        for (i, &var) in tab.basic.iter().enumerate() {
            if var < n {
                x[var] = tab.beta[i].max(0.0);
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots: tab.pivots,
        })
    }
}

/// Condensed tableau: `basic[i] = beta[i] - sum_k t[i][k] * nonbasic[k]`,
/// objective `z = z0 + sum_k d[k] * nonbasic[k]`.
struct Tableau {
    t: Vec<Vec<f64>>,
    beta: Vec<f64>,
    d: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let mut t = Vec::new();
        let mut beta = Vec::new();
        for (coeffs, rel, rhs) in &lp.rows {
            if matches!(rel, Relation::Le | Relation::Eq) {
                t.push(coeffs.clone());
                beta.push(*rhs);
            }
            if matches!(rel, Relation::Ge | Relation::Eq) {
                t.push(coeffs.iter().map(|c| -c).collect());
                beta.push(-rhs);
            }
        }
        let m = t.len();
        Tableau {
            t,
            beta,
            d: lp.objective.clone(),
            basic: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            pivots: 0,
            max_pivots: 50 * (n + m) + 1000,
        }
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let piv = self.t[r][k];
        let row_r: Vec<f64> = self.t[r].iter().map(|v| v / piv).collect();
        let beta_r = self.beta[r] / piv;
        for i in 0..self.t.len() {
            if i == r {
                continue;
            }
            let f = self.t[i][k];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i];
            for (j, v) in row.iter_mut().enumerate() {
                if j != k {
                    *v -= f * row_r[j];
                }
            }
            row[k] = -f / piv;
            self.beta[i] -= f * beta_r;
        }
        let dk = self.d[k];
        if dk != 0.0 {
            for (j, v) in self.d.iter_mut().enumerate() {
                if j != k {
                    *v -= dk * row_r[j];
                }
            }
            self.d[k] = -dk / piv;
        }
        self.t[r] = row_r;
        self.t[r][k] = 1.0 / piv;
        self.beta[r] = beta_r;
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[k]);
        self.pivots += 1;
    }

    /// Dual simplex on zero costs: drive every basic value nonnegative.
    fn phase_one(&mut self) -> Result<(), LpError> {
        let mut degenerate = 0usize;
        loop {
            if self.pivots > self.max_pivots {
                return Err(LpError::IterationLimit);
            }
            let bland = degenerate > DEGENERATE_RUN;
            let leaving = (0..self.beta.len())
                .filter(|&i| self.beta[i] < -FEAS_TOL)
                .min_by(|&a, &b| {
                    if bland {
                        self.basic[a].cmp(&self.basic[b])
                    } else {
                        self.beta[a].total_cmp(&self.beta[b])
                    }
                });
            let Some(r) = leaving else {
                return Ok(());
            };
            // All reduced costs are treated as zero, so every ratio ties;
            // prefer the largest pivot magnitude, or the smallest index under Bland.
            let entering = (0..self.nonbasic.len())
                .filter(|&k| self.t[r][k] < -EPS)
                .min_by(|&a, &b| {
                    if bland {
                        self.nonbasic[a].cmp(&self.nonbasic[b])
                    } else {
                        self.t[r][a].total_cmp(&self.t[r][b])
                    }
                });
            let Some(k) = entering else {
                return Err(LpError::Infeasible);
            };
            let before = self.infeasibility();
            self.pivot(r, k);
            if self.infeasibility() >= before - 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
        }
    }

    fn infeasibility(&self) -> f64 {
        self.beta.iter().filter(|&&b| b < 0.0).map(|b| -b).sum()
    }

    fn phase_two(&mut self) -> Result<(), LpError> {
        let mut degenerate = 0usize;
        loop {
            if self.pivots > self.max_pivots {
                return Err(LpError::IterationLimit);
            }
            let bland = degenerate > DEGENERATE_RUN;
            let entering = (0..self.d.len())
                .filter(|&k| self.d[k] < -EPS)
                .min_by(|&a, &b| {
                    if bland {
                        self.nonbasic[a].cmp(&self.nonbasic[b])
                    } else {
                        self.d[a].total_cmp(&self.d[b])
                    }
                });
            let Some(k) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][k];
                if a > EPS {
                    let ratio = self.beta[i].max(0.0) / a;
                    let better = match best {
                        None => true,
                        Some((j, r)) => {
                            ratio < r - 1e-13
                                || (ratio <= r + 1e-13 && self.basic[i] < self.basic[j])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = best else {
                return Err(LpError::Unbounded);
            };
            if ratio <= 1e-13 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::minimize(vec![-3.0, -5.0]);
        lp.add_le(vec![1.0, 0.0], 4.0)
            .add_le(vec![0.0, 2.0], 12.0)
            .add_le(vec![3.0, 2.0], 18.0);
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        assert!((s.objective + 36.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y + 3z s.t. x + y + z = 1, y + z >= 0.5, z >= 0.1
        let mut lp = LinearProgram::minimize(vec![1.0, 2.0, 3.0]);
        lp.add_eq(vec![1.0, 1.0, 1.0], 1.0)
            .add_ge(vec![0.0, 1.0, 1.0], 0.5)
            .add_ge(vec![0.0, 0.0, 1.0], 0.1);
        let s = lp.solve().unwrap();
        assert!((s.objective - (0.5 + 0.8 + 0.3)).abs() < 1e-9, "{s:?}");
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_ge(vec![1.0], 2.0).add_le(vec![1.0], 1.0);
        assert_eq!(lp.solve(), Err(LpError::Infeasible));

        let mut lp = LinearProgram::minimize(vec![-1.0, 0.0]);
        lp.add_ge(vec![1.0, -1.0], 0.0);
        assert_eq!(lp.solve(), Err(LpError::Unbounded));
    }

    /// Vertex enumeration for two-variable problems with `<=` rows.
    fn brute_force_2d(c: [f64; 2], rows: &[([f64; 2], f64)]) -> Option<f64> {
        let mut lines: Vec<([f64; 2], f64)> = rows.to_vec();
        lines.push(([-1.0, 0.0], 0.0));
        lines.push(([0.0, -1.0], 0.0));
        let feasible = |p: [f64; 2]| {
            p[0] >= -1e-9
                && p[1] >= -1e-9
                && rows.iter().all(|(a, b)| a[0] * p[0] + a[1] * p[1] <= b + 1e-9)
        };
        let mut best: Option<f64> = None;
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let ([a, b], e) = lines[i];
                let ([c2, d], f) = lines[j];
                let det = a * d - b * c2;
                if det.abs() < 1e-12 {
                    continue;
                }
                let p = [(e * d - b * f) / det, (a * f - e * c2) / det];
                if feasible(p) {
                    let v = c[0] * p[0] + c[1] * p[1];
                    best = Some(best.map_or(v, |bv: f64| bv.min(v)));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            c in prop::array::uniform2(-5.0f64..5.0),
            rows in prop::collection::vec((prop::array::uniform2(0.1f64..5.0), 0.5f64..10.0), 1..6),
        ) {
            // Positive coefficients keep the region bounded and nonempty.
            let mut lp = LinearProgram::minimize(c.to_vec());
            for (a, b) in &rows {
                lp.add_le(a.to_vec(), *b);
            }
            let s = lp.solve().unwrap();
            let expect = brute_force_2d(c, &rows).unwrap();
            prop_assert!((s.objective - expect).abs() < 1e-7, "{} vs {}", s.objective, expect);
        }
    }
}
