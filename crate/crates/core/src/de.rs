//! Density evolution on the joint two-user graph.
//!
//! Four erasure probabilities are tracked per iteration: `x` (VN to CN), `y`
//! (CN to VN), `w` (VN to MAC node) and `z` (MAC node to VN). Starting from
//! `x = y = 1`, `z = 1/2`:
//!
//! ```text
//! x' = z * lambda(y)
//! y' = 1 - rho(1 - x')
//! w' = L(y')
//! z' = w' / 2
//! p' = z * L(y')
//! ```
//!
//! where `p` is the probability that a bit is still erased.

use std::fmt::Write as _;

use crate::degree::DegreeDistribution;

/// Default stopping threshold on the residual erasure probability.
pub const DEFAULT_TARGET: f64 = 1e-8;
/// Default number of interior grid points used for margin certification.
pub const DEFAULT_GRID: usize = 256;

/// Node-perspective `L` and edge-perspective `lambda`, `rho` of an ensemble.
#[derive(Debug, Clone)]
pub struct DePolys {
    pub l_node: DegreeDistribution,
    pub lambda: DegreeDistribution,
    pub rho: DegreeDistribution,
}

impl DePolys {
    pub fn new(vn: &DegreeDistribution, cn: &DegreeDistribution) -> Self {
        DePolys {
            l_node: vn.edge_to_node(),
            lambda: vn.node_to_edge(),
            rho: cn.node_to_edge(),
        }
    }

    /// `1 - rho(1 - x)`.
    #[inline]
    pub fn check_update(&self, x: f64) -> f64 {
        (1.0 - self.rho.eval(1.0 - x)).clamp(0.0, 1.0)
    }

    /// `L(y) lambda(y) / 2`.
    #[inline]
    pub fn variable_update(&self, y: f64) -> f64 {
        (0.5 * self.l_node.eval(y) * self.lambda.eval(y)).clamp(0.0, 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeState {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub z: f64,
    pub iteration: usize,
}

impl DeState {
    pub fn initial() -> Self {
        DeState {
            x: 1.0,
            y: 1.0,
            w: 1.0,
            z: 0.5,
            iteration: 0,
        }
    }
}

impl Default for DeState {
    fn default() -> Self {
        Self::initial()
    }
}

/// One iteration of the four-message recursion, updated in the order x, y, w, z.
pub fn de_step(state: &DeState, vn: &DegreeDistribution, cn: &DegreeDistribution) -> DeState {
    step_with(state, &DePolys::new(vn, cn))
}

fn step_with(state: &DeState, polys: &DePolys) -> DeState {
    let x = (state.z * polys.lambda.eval(state.y)).clamp(0.0, 1.0);
    let y = polys.check_update(x);
    let w = polys.l_node.eval(y).clamp(0.0, 1.0);
    DeState {
        x,
        y,
        w,
        z: 0.5 * w,
        iteration: state.iteration + 1,
    }
}

/// Scalar form `x' = L(u) lambda(u) / 2` with `u = 1 - rho(1 - x)`.
pub fn de_scalar_step(x: f64, vn: &DegreeDistribution, cn: &DegreeDistribution) -> f64 {
    let polys = DePolys::new(vn, cn);
    polys.variable_update(polys.check_update(x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeTrajectory {
    /// `states[0]` is the initial condition; `states[l]` follows iteration `l`.
    pub states: Vec<DeState>,
    /// `p[l - 1]` is the erasure probability after iteration `l`.
    pub p: Vec<f64>,
    pub converged: bool,
    pub iterations_to_target: Option<usize>,
}

impl DeTrajectory {
    /// CSV with columns `iter,x,y,w,z,p`; the initial state carries no `p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,x,y,w,z,p\n");
        for (l, s) in self.states.iter().enumerate() {
            let p = if l == 0 {
                String::new()
            } else {
                format!("{:.12e}", self.p[l - 1])
            };
            let _ = writeln!(
                out,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                l, s.x, s.y, s.w, s.z, p
            );
        }
        out
    }
}

/// Iterates from the initial condition until `p <= target` or `max_iters`.
pub fn de_run(
    vn: &DegreeDistribution,
    cn: &DegreeDistribution,
    max_iters: usize,
    target: f64,
) -> DeTrajectory {
    let polys = DePolys::new(vn, cn);
    let mut states = vec![DeState::initial()];
    let mut p = Vec::new();
    let mut iterations_to_target = None;
    for _ in 0..max_iters.max(1) {
        let prev = *states.last().unwrap();
        let next = step_with(&prev, &polys);
        // p_{l+1} uses the previous MAC message z_l.
        p.push((prev.z * polys.l_node.eval(next.y)).clamp(0.0, 1.0));
        states.push(next);
        if *p.last().unwrap() <= target {
            iterations_to_target = Some(p.len());
            break;
        }
    }
    DeTrajectory {
        states,
        p,
        converged: iterations_to_target.is_some(),
        iterations_to_target,
    }
}

/// Interior uniform grid `k / (grid + 1)` for `k = 1..=grid`.
pub fn uniform_grid(grid: usize) -> Vec<f64> {
    (1..=grid).map(|k| k as f64 / (grid + 1) as f64).collect()
}

/// `f(y) = y - 1 + rho(1 - L(y) lambda(y) / 2)`, the one-step contraction of
/// the `y` recursion. DE converges iff it is positive on `(0, 1]`.
pub fn contraction_margin(polys: &DePolys, y: f64) -> f64 {
    y - 1.0 + polys.rho.eval(1.0 - polys.variable_update(y))
}

/// Minimum of `f(y) - delta` over the interior grid and the `y` attaining it.
pub fn feasibility_margin(
    vn: &DegreeDistribution,
    cn: &DegreeDistribution,
    delta: f64,
    grid: usize,
) -> (f64, f64) {
    margin_on(&DePolys::new(vn, cn), delta, &uniform_grid(grid.max(10)))
}

pub(crate) fn margin_on(polys: &DePolys, delta: f64, points: &[f64]) -> (f64, f64) {
    points
        .iter()
        .map(|&y| (contraction_margin(polys, y) - delta, y))
        .fold((f64::INFINITY, f64::NAN), |best, cur| if cur.0 < best.0 { cur } else { best })
}
