//! Degree-distribution optimization by alternating linear programs.
//!
//! For a fixed variable-node distribution the contraction margin
//! `f(y) = y - 1 + sum_i rho_i (1 - L(y) lambda(y) / 2)^(i-1)` is linear in
//! `rho`, so the check-node step is a single LP maximizing the mean check
//! degree (minimizing `sum_i rho_i / i`).
//!
//! For a fixed `rho` the variable-node constraints are bilinear in `lambda`:
//! with `P(s) = sum_i lambda_i s^i / i` and `kappa = sum_i lambda_i / i`,
//! `L(s) lambda(s) = P(s) lambda(s) / kappa`, so every grid constraint reads
//! `P(s) lambda(s) <= 2 kappa c` for a point `s` and bound `c`. The step is
//! solved by sequential linear programming inside an l1 trust region whose
//! radius also bounds the dropped second-order term, so every accepted
//! iterate is feasible and `kappa` increases monotonically.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::de::{contraction_margin, margin_on, uniform_grid, DePolys};
use crate::degree::{DegreeDistribution, EnsembleSpec, Perspective, Side};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError};

/// Extra slack realizing the strict inequalities on the grid. The check-node
/// LP uses twice this so its output stays feasible for the variable-node step.
pub const STRICT_SLACK: f64 = 1e-9;
/// Default `c` in `delta = c / sqrt(n)`.
pub const DEFAULT_DELTA_COEFFICIENT: f64 = 0.5;

const MAX_GRID_REFINEMENTS: usize = 4;
const PRUNE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub l_max: u32,
    pub r_max: u32,
    pub delta: f64,
    pub grid: usize,
    pub max_rounds: usize,
    /// When set, the slack is `delta_coefficient / sqrt(n)` instead of `delta`.
    pub n_for_delta: Option<usize>,
    pub delta_coefficient: f64,
    /// Upper bound on the node fraction `L_1` of degree-one variable nodes.
    pub l1_cap: Option<f64>,
    /// Seeds the offsets of the refined verification grids.
    pub seed: u64,
    /// Sequential-LP iterations per variable-node step.
    pub max_slp_iters: usize,
    pub vn_domain: ConstraintDomain,
}

/// Parameterization of the variable-node grid constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintDomain {
    /// `rho(1 - L(y) lambda(y) / 2) >= 1 - y + delta`, the margin that
    /// [`crate::de::feasibility_margin`] certifies.
    Y,
    /// `x - L(z) lambda(z) / 2 >= delta` with `z = 1 - rho(1 - x)`.
    X,
    Both,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            l_max: 8,
            r_max: 20,
            delta: 1e-3,
            grid: 256,
            max_rounds: 10,
            n_for_delta: None,
            delta_coefficient: DEFAULT_DELTA_COEFFICIENT,
            l1_cap: None,
            seed: 0,
            max_slp_iters: 200,
            vn_domain: ConstraintDomain::Y,
        }
    }
}

impl OptimizerConfig {
    pub fn effective_delta(&self) -> f64 {
        match self.n_for_delta {
            Some(n) => self.delta_coefficient / (n as f64).sqrt(),
            None => self.delta,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.l_max < 1 {
            return Err(Error::InvalidConfig("l_max must be at least 1".into()));
        }
        if self.r_max < 2 {
            return Err(Error::InvalidConfig("r_max must be at least 2".into()));
        }
        if self.grid < 32 {
            return Err(Error::InvalidConfig("grid must have at least 32 points".into()));
        }
        if !(self.effective_delta() >= 0.0) {
            return Err(Error::InvalidConfig("delta must be nonnegative".into()));
        }
        if let Some(cap) = self.l1_cap {
            if !(0.0..=1.0).contains(&cap) {
                return Err(Error::InvalidConfig("l1_cap must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

fn edge_dist(coeffs: &[f64], first_degree: u32, side: Side) -> DegreeDistribution {
    let clean: Vec<f64> = coeffs.iter().map(|&v| if v > PRUNE { v } else { 0.0 }).collect();
    let sum: f64 = clean.iter().sum();
    let map: BTreeMap<u32, f64> = clean
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (first_degree + i as u32, v / sum))
        .collect();
    DegreeDistribution::from_parts(map, Perspective::Edge, side)
}

/// Check-node LP: the edge-perspective `rho` over degrees `2..=r_max`
/// maximizing the design rate subject to `f(y) > delta` on the grid.
pub fn optimize_cn(vn: &DegreeDistribution, cfg: &OptimizerConfig) -> Result<DegreeDistribution> {
    optimize_cn_detailed(vn, cfg).map(|step| step.rho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnStep {
    pub rho: DegreeDistribution,
    /// Whether `f > 0` held on the final 4x finer offset grid.
    pub fine_grid_ok: bool,
    pub refinements: usize,
}

/// [`optimize_cn`] with the fine-grid recheck reported. Fine-grid violations
/// are added to the constraint set and the LP is re-solved, up to a fixed
/// number of times; the returned `rho` always meets the configured grid.
pub fn optimize_cn_detailed(vn: &DegreeDistribution, cfg: &OptimizerConfig) -> Result<CnStep> {
    cfg.check()?;
    let delta = cfg.effective_delta();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let coarse = uniform_grid(cfg.grid);
    let mut points = coarse.clone();
    let mut refinements = 0;
    loop {
        let rho = solve_cn_lp(vn, cfg.r_max, delta, &points)?;
        let polys = DePolys::new(vn, &rho);
        if !(margin_on(&polys, delta, &coarse).0 > 0.0) {
            return Err(Error::Infeasible);
        }
        let fine = jittered_grid(4 * cfg.grid, &mut rng);
        let violated: Vec<f64> = fine
            .iter()
            .copied()
            .filter(|&y| !(contraction_margin(&polys, y) > 0.0))
            .collect();
        if violated.is_empty() || refinements == MAX_GRID_REFINEMENTS {
            return Ok(CnStep {
                rho,
                fine_grid_ok: violated.is_empty(),
                refinements,
            });
        }
        points.extend(violated);
        refinements += 1;
    }
}

fn jittered_grid(points: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let h = 1.0 / (points + 1) as f64;
    let offset: f64 = rng.random_range(-0.5..0.5) * h;
    (1..=points).map(|k| k as f64 * h + offset).collect()
}

fn solve_cn_lp(vn: &DegreeDistribution, r_max: u32, delta: f64, ys: &[f64]) -> Result<DegreeDistribution> {
    let l_node = vn.edge_to_node();
    let lambda = vn.node_to_edge();
    let degrees: Vec<u32> = (2..=r_max).collect();
    let mut lp = LinearProgram::minimize(degrees.iter().map(|&i| 1.0 / i as f64).collect());
    lp.add_eq(vec![1.0; degrees.len()], 1.0);
    for &y in ys {
        let u = 1.0 - 0.5 * l_node.eval(y) * lambda.eval(y);
        lp.add_ge(
            degrees.iter().map(|&i| u.powi(i as i32 - 1)).collect(),
            1.0 - y + delta + 2.0 * STRICT_SLACK,
        );
    }
    let sol = lp.solve().map_err(|_| Error::Infeasible)?;
    Ok(edge_dist(&sol.x, 2, Side::Check))
}

/// Constraint points `(s, c)` meaning `P(s) lambda(s) <= 2 kappa c`.
fn vn_constraints(
    rho: &DegreeDistribution,
    delta: f64,
    grid: usize,
    domain: ConstraintDomain,
) -> Result<Vec<(f64, f64)>> {
    let use_x = domain != ConstraintDomain::Y;
    let use_y = domain != ConstraintDomain::X;
    let rho = rho.node_to_edge();
    let target = delta + STRICT_SLACK;
    let mut points = Vec::with_capacity(2 * grid);
    for &t in &uniform_grid(grid) {
        // x domain: x - L(z) lambda(z) / 2 >= delta with z = 1 - rho(1 - x).
        if use_x {
            let c = t - target;
            if c <= 0.0 {
                return Err(Error::Infeasible);
            }
            points.push(((1.0 - rho.eval(1.0 - t)).clamp(0.0, 1.0), c));
        }
        // y domain: rho(1 - L(y) lambda(y) / 2) >= 1 - y + delta.
        if use_y {
            let level = 1.0 - t + target;
            if level >= 1.0 {
                return Err(Error::Infeasible);
            }
            points.push((t, 1.0 - invert_increasing(|v| rho.eval(v), level)));
        }
    }
    Ok(points)
}

fn invert_increasing(f: impl Fn(f64) -> f64, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The lower end keeps the derived bound conservative.
    lo
}

fn kappa(lambda: &[f64]) -> f64 {
    lambda.iter().enumerate().map(|(i, v)| v / (i + 1) as f64).sum()
}

fn p_and_q(lambda: &[f64], s: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut pow = 1.0; // s^(i-1)
    for (idx, &v) in lambda.iter().enumerate() {
        let deg = (idx + 1) as f64;
        q += v * pow;
        p += v * pow * s / deg;
        pow *= s;
    }
    (p, q)
}

fn vn_feasible(lambda: &[f64], points: &[(f64, f64)], l1_cap: Option<f64>) -> bool {
    let k = kappa(lambda);
    if lambda.iter().any(|&v| v < 0.0) || (lambda.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return false;
    }
    if let Some(cap) = l1_cap {
        if lambda[0] > cap * k + 1e-12 {
            return false;
        }
    }
    points.iter().all(|&(s, c)| {
        let (p, q) = p_and_q(lambda, s);
        p * q <= 2.0 * k * c
    })
}

/// Result of a variable-node step.
#[derive(Debug, Clone, PartialEq)]
pub struct VnStep {
    /// Edge-perspective `lambda` over degrees `1..=l_max`.
    pub lambda: DegreeDistribution,
    pub kappa_start: f64,
    pub kappa: f64,
    pub accepted_steps: usize,
}

/// Variable-node step from a feasible single-degree start (the best one).
pub fn optimize_vn(cn: &DegreeDistribution, cfg: &OptimizerConfig) -> Result<DegreeDistribution> {
    cfg.check()?;
    let points = vn_constraints(cn, cfg.effective_delta(), cfg.grid, cfg.vn_domain)?;
    let start = (1..=cfg.l_max)
        .map(|d| {
            let mut v = vec![0.0; cfg.l_max as usize];
            v[d as usize - 1] = 1.0;
            v
        })
        .find(|v| vn_feasible(v, &points, cfg.l1_cap))
        .ok_or(Error::Infeasible)?;
    let start = edge_dist(&start, 1, Side::Variable);
    match optimize_vn_from(cn, &start, cfg) {
        Ok(step) => Ok(step.lambda),
        Err(Error::Stalled) => Ok(start),
        Err(e) => Err(e),
    }
}

/// Variable-node step by trust-region sequential LP from a feasible `start`.
///
/// Returns [`Error::Infeasible`] if `start` violates the grid constraints and
/// [`Error::Stalled`] if no subproblem yields an improving feasible point.
pub fn optimize_vn_from(
    cn: &DegreeDistribution,
    start: &DegreeDistribution,
    cfg: &OptimizerConfig,
) -> Result<VnStep> {
    cfg.check()?;
    let l_max = cfg.l_max.max(start.max_degree()) as usize;
    let points = vn_constraints(cn, cfg.effective_delta(), cfg.grid, cfg.vn_domain)?;
    let start_edge = start.node_to_edge();
    let mut lambda: Vec<f64> = (1..=l_max as u32).map(|d| start_edge.fraction(d)).collect();
    if !vn_feasible(&lambda, &points, cfg.l1_cap) {
        return Err(Error::Infeasible);
    }
    let kappa_start = kappa(&lambda);
    let mut radius = 0.1;
    let mut accepted = 0;
    for _ in 0..cfg.max_slp_iters {
        if radius < 1e-7 {
            break;
        }
        match slp_subproblem(&lambda, &points, cfg.l1_cap, radius) {
            Some(candidate)
                if kappa(&candidate) > kappa(&lambda) + 1e-13
                    && vn_feasible(&candidate, &points, cfg.l1_cap) =>
            {
                lambda = candidate;
                accepted += 1;
                radius = (radius * 2.0).min(1.0);
            }
            _ => radius *= 0.25,
        }
    }
    if accepted == 0 {
        return Err(Error::Stalled);
    }
    Ok(VnStep {
        lambda: edge_dist(&lambda, 1, Side::Variable),
        kappa_start,
        kappa: kappa(&lambda),
        accepted_steps: accepted,
    })
}

/// One linearized subproblem over `d = p - q` with `sum(p + q) <= radius`.
fn slp_subproblem(lambda: &[f64], points: &[(f64, f64)], l1_cap: Option<f64>, radius: f64) -> Option<Vec<f64>> {
    let k = lambda.len();
    let k0 = kappa(lambda);
    let inv: Vec<f64> = (1..=k).map(|i| 1.0 / i as f64).collect();
    // Variables: p_1..p_k, q_1..q_k. Maximize sum (p_i - q_i) / i.
    let mut objective = Vec::with_capacity(2 * k);
    objective.extend(inv.iter().map(|v| -v));
    objective.extend(inv.iter().copied());
    let mut lp = LinearProgram::minimize(objective);
    let signed = |coeff: &[f64]| -> Vec<f64> {
        coeff.iter().copied().chain(coeff.iter().map(|v| -v)).collect()
    };
    lp.add_eq(signed(&vec![1.0; k]), 0.0);
    lp.add_le(vec![1.0; 2 * k], radius);
    for i in 0..k {
        // lambda_i + p_i - q_i >= 0
        let mut row = vec![0.0; 2 * k];
        row[i] = -1.0;
        row[k + i] = 1.0;
        lp.add_le(row, lambda[i]);
    }
    if let Some(cap) = l1_cap {
        // lambda_1 <= cap * kappa
        let mut coeff: Vec<f64> = inv.iter().map(|v| -cap * v).collect();
        coeff[0] += 1.0;
        let current: f64 = coeff.iter().zip(lambda).map(|(c, l)| c * l).sum();
        lp.add_le(signed(&coeff), -current);
    }
    for &(s, c) in points {
        let (p0, q0) = p_and_q(lambda, s);
        let mut pow = 1.0;
        let mut coeff = Vec::with_capacity(k);
        for i in 0..k {
            let grad = pow * s * inv[i] * q0 + p0 * pow;
            coeff.push(grad - 2.0 * c * inv[i]);
            pow *= s;
        }
        // Second-order remainder |P(d) Q(d)| <= s * |d|_1^2.
        let rhs = 2.0 * c * k0 - p0 * q0 - s * radius * radius;
        lp.add_le(signed(&coeff), rhs);
    }
    let sol = match lp.solve() {
        Ok(sol) => sol,
        Err(LpError::Infeasible) | Err(LpError::Unbounded) | Err(LpError::IterationLimit) => return None,
    };
    let mut next: Vec<f64> = (0..k)
        .map(|i| (lambda[i] + sol.x[i] - sol.x[k + i]).max(0.0))
        .collect();
    let sum: f64 = next.iter().sum();
    next.iter_mut().for_each(|v| *v /= sum);
    Some(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub round: usize,
    pub rate: f64,
    /// Grid minimum of `f(y) - delta`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternateOutcome {
    pub ensemble: EnsembleSpec,
    pub audit: Vec<AuditRow>,
}

impl AlternateOutcome {
    pub fn audit_csv(&self) -> String {
        let mut out = String::from("round,rate,margin\n");
        for row in &self.audit {
            out.push_str(&format!("{},{:.9},{:.9e}\n", row.round, row.rate, row.margin));
        }
        out
    }
}

fn rate_of(lambda: &DegreeDistribution, rho: &DegreeDistribution) -> f64 {
    1.0 - lambda.mean_degree() / rho.mean_degree()
}

/// Alternates check-node and variable-node steps from a feasible ensemble.
/// Rates in the audit trail never decrease.
pub fn alternate(init: &EnsembleSpec, cfg: &OptimizerConfig) -> Result<AlternateOutcome> {
    cfg.check()?;
    if init.vn.max_degree() > cfg.l_max || init.cn.max_degree() > cfg.r_max {
        return Err(Error::InvalidConfig(
            "initial ensemble exceeds the configured maximum degrees".into(),
        ));
    }
    let delta = cfg.effective_delta();
    let margin = |l: &DegreeDistribution, r: &DegreeDistribution| {
        margin_on(&DePolys::new(l, r), delta, &uniform_grid(cfg.grid)).0
    };
    let mut lambda = init.lambda();
    let mut rho = init.rho();
    let m0 = margin(&lambda, &rho);
    if !(m0 > 0.0) {
        return Err(Error::Infeasible);
    }
    let mut rate = rate_of(&lambda, &rho);
    let mut audit = vec![AuditRow {
        round: 0,
        rate,
        margin: m0,
    }];
    for round in 1..=cfg.max_rounds {
        let round_cfg = OptimizerConfig {
            seed: cfg.seed.wrapping_add(round as u64),
            ..cfg.clone()
        };
        let new_rho = match optimize_cn(&lambda, &round_cfg) {
            Ok(r) => r,
            Err(e) if round == 1 => return Err(e),
            Err(_) => break,
        };
        let mut new_lambda = match optimize_vn_from(&new_rho, &lambda, &round_cfg) {
            Ok(step) => step.lambda,
            Err(_) => lambda.clone(),
        };
        if !(margin(&new_lambda, &new_rho) > 0.0) {
            new_lambda = lambda.clone();
        }
        let new_rate = rate_of(&new_lambda, &new_rho);
        let new_margin = margin(&new_lambda, &new_rho);
        if new_rate < rate || !(new_margin > 0.0) {
            break;
        }
        let gain = new_rate - rate;
        lambda = new_lambda;
        rho = new_rho;
        rate = new_rate;
        audit.push(AuditRow {
            round,
            rate,
            margin: new_margin,
        });
        if gain < 1e-9 {
            break;
        }
    }
    Ok(AlternateOutcome {
        ensemble: EnsembleSpec::new(lambda, rho)?,
        audit,
    })
}
