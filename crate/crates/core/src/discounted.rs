//! Discounted equations `lambda u + G(x, u') = c` on a truncated line: a semi-Lagrangian
//! dynamic-programming scheme, a Godunov cross-check, the `lambda` sweep and the
//! truncation audit.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::hamiltonian::{HamiltonianSpec, Which, L_INF};
use crate::sublevel::{sublevel_bracket, CaseReport};
use crate::weakkam::CriticalProfile;

/// How the truncated problem is closed at the two ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Feet of characteristics must stay in the domain.
    StateConstraint,
    /// Curves leaving the domain continue monotonically outward; ghost values come from
    /// one-sided periodic solves of the unperturbed problem.
    MonotoneExit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SemiLagrangian,
    Godunov,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::SemiLagrangian => "semi_lagrangian",
            Scheme::Godunov => "godunov",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverConfig {
    /// Velocities on `[-Q_max, Q_max]`, odd so that `q = 0` is included.
    pub q_nodes: usize,
    /// `h = h_factor * dx / Q_max`.
    pub h_factor: f64,
    /// Stop when the sup-change of a sweep is below `tol_fix * lambda`.
    pub tol_fix: f64,
    /// Parabolic refinement of the discrete argmin velocity with an exact Lagrangian.
    pub refine_q: bool,
    pub closure: Closure,
    /// Godunov stopping residual.
    pub tol_residual: f64,
    pub max_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            q_nodes: 201,
            h_factor: 1.0,
            tol_fix: 1e-9,
            refine_q: true,
            closure: Closure::MonotoneExit,
            tol_residual: 1e-7,
            max_sweeps: 200_000,
        }
    }
}

/// `L(x_i, q_j)` on a grid and a velocity lattice; `L_INF` marks inadmissible pairs.
#[derive(Clone, Debug)]
pub struct LagrangianTable {
    pub grid: Grid1D,
    pub qs: Vec<f64>,
    pub values: Vec<f64>,
    pub which: Which,
}

impl LagrangianTable {
    pub fn build(spec: &HamiltonianSpec, which: Which, grid: &Grid1D, q_nodes: usize) -> Self {
        let nq = q_nodes.max(3) | 1;
        let qmax = spec.q_velocity_bound;
        let qs: Vec<f64> = (0..nq).map(|j| -qmax + 2.0 * qmax * j as f64 / (nq - 1) as f64).collect();
        let mut values = Vec::with_capacity(grid.n * nq);
        for i in 0..grid.n {
            let fiber = spec.fiber(grid.x(i), which);
            for &q in &qs {
                values.push(fiber.conjugate(q, spec.p_search_bound));
            }
        }
        Self { grid: *grid, qs, values, which }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let nq = self.qs.len();
        &self.values[i * nq..(i + 1) * nq]
    }

    /// `L(x, q_j)` interpolated linearly in `x`; inadmissible if either neighbor is.
    pub fn at(&self, x: f64, j: usize) -> f64 {
        let (i, t) = self.grid.locate(x);
        let a = self.row(i)[j];
        let b = self.row(i + 1)[j];
        if a >= 0.5 * L_INF || b >= 0.5 * L_INF {
            L_INF
        } else {
            a + t * (b - a)
        }
    }
}

/// Coefficients of the exact one-node solve `u = a_j u_nb + b_j (L + c)`.
struct LocalSolve {
    a: Vec<f64>,
    b: Vec<f64>,
    /// `-1` (left neighbor), `0` (none), `+1` (right neighbor).
    side: Vec<i8>,
}

impl LocalSolve {
    fn new(qs: &[f64], lambda: f64, h: f64, dx: f64) -> Self {
        let beta = 1.0 - lambda * h;
        let mut a = Vec::with_capacity(qs.len());
        let mut b = Vec::with_capacity(qs.len());
        let mut side = Vec::with_capacity(qs.len());
        for &q in qs {
            let s = (h * q / dx).abs().min(1.0);
            let d = 1.0 - beta * (1.0 - s);
            a.push(beta * s / d);
            b.push(h / d);
            side.push(if q > 0.0 { -1 } else if q < 0.0 { 1 } else { 0 });
        }
        Self { a, b, side }
    }

    fn candidate(&self, j: usize, l: f64, c: f64, left: f64, right: f64) -> f64 {
        let nb = match self.side[j] {
            -1 => left,
            1 => right,
            _ => 0.0,
        };
        self.a[j] * nb + self.b[j] * (l + c)
    }
}

/// Exact solve at one velocity that is not on the lattice.
fn refined_candidate(q: f64, l: f64, c: f64, lambda: f64, h: f64, dx: f64, left: f64, right: f64) -> f64 {
    let beta = 1.0 - lambda * h;
    let s = (h * q / dx).abs().min(1.0);
    let nb = if q > 0.0 { left } else { right };
    (beta * s * nb + h * (l + c)) / (1.0 - beta * (1.0 - s))
}

/// Minimum over admissible velocities at node `i`; returns `(value, q)`.
#[allow(clippy::too_many_arguments)]
fn node_update(
    spec: &HamiltonianSpec,
    table: &LagrangianTable,
    local: &LocalSolve,
    i: usize,
    c: f64,
    lambda: f64,
    h: f64,
    left: Option<f64>,
    right: Option<f64>,
    refine: bool,
) -> (f64, f64) {
    let row = table.row(i);
    let nq = row.len();
    let mut best = f64::INFINITY;
    let mut best_j = nq / 2;
    let (lv, rv) = (left.unwrap_or(f64::NAN), right.unwrap_or(f64::NAN));
    let mut costs = [f64::INFINITY; 3];
    for j in 0..nq {
        let l = row[j];
        if l >= 0.5 * L_INF {
            continue;
        }
        let ok = match local.side[j] {
            -1 => left.is_some(),
            1 => right.is_some(),
            _ => true,
        };
        if !ok {
            continue;
        }
        let v = local.candidate(j, l, c, lv, rv);
        if v < best {
            best = v;
            best_j = j;
        }
    }
    let mut q_best = table.qs[best_j];
    if refine && best_j > 0 && best_j + 1 < nq {
        for (k, j) in [best_j - 1, best_j, best_j + 1].into_iter().enumerate() {
            let l = row[j];
            let ok = l < 0.5 * L_INF
                && match local.side[j] {
                    -1 => left.is_some(),
                    1 => right.is_some(),
                    _ => true,
                };
            costs[k] = if ok { local.candidate(j, l, c, lv, rv) } else { f64::INFINITY };
        }
        let denom = costs[0] - 2.0 * costs[1] + costs[2];
        if costs.iter().all(|v| v.is_finite()) && denom > 1e-14 {
            let shift = 0.5 * (costs[0] - costs[2]) / denom;
            let dq = table.qs[1] - table.qs[0];
            let q = table.qs[best_j] + shift.clamp(-0.5, 0.5) * dq;
            let side_ok = if q > 0.0 { left.is_some() } else if q < 0.0 { right.is_some() } else { true };
            if side_ok && shift.abs() > 1e-6 {
                let l = spec.fiber(table.grid.x(i), table.which).conjugate(q, spec.p_search_bound);
                if l < 0.5 * L_INF {
                    let v = refined_candidate(q, l, c, lambda, h, table.grid.dx(), lv, rv);
                    if v < best {
                        best = v;
                        q_best = q;
                    }
                }
            }
        }
    }
    (best, q_best)
}

/// Which way a far-field branch lets curves leave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Exit {
    /// Backward curves move left forever: velocities `q >= 0`.
    Left,
    /// Backward curves move right forever: velocities `q <= 0`.
    Right,
}

/// One-sided periodic discounted solution of the unperturbed problem on one period.
#[derive(Clone, Debug)]
pub struct FarField {
    pub exit: Exit,
    /// Nodes `k / N`, `k = 0..=N`, the last repeating the first.
    pub values: Vec<f64>,
    pub table: Arc<LagrangianTable>,
}

impl FarField {
    pub fn value(&self, x: f64) -> f64 {
        let t = x.rem_euclid(1.0);
        self.table.grid.interp(&self.values, t)
    }
}

fn solve_far_field(
    spec: &HamiltonianSpec,
    lambda: f64,
    c: f64,
    dx: f64,
    h: f64,
    exit: Exit,
    cfg: &SolverConfig,
) -> Result<FarField> {
    let cells = (1.0 / dx).round() as usize;
    if ((cells as f64) * dx - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("monotone-exit closure needs 1/dx integral, got dx = {dx}")));
    }
    let ring = Grid1D::new(0.0, 1.0, cells + 1)?;
    let base = spec.base();
    let table = Arc::new(LagrangianTable::build(&base, Which::H, &ring, cfg.q_nodes));
    let local = LocalSolve::new(&table.qs, lambda, h, ring.dx());
    let zero = table.qs.len() / 2;
    let mut u: Vec<f64> = (0..cells).map(|i| (table.row(i)[zero] + c) / lambda).collect();
    let tol = cfg.tol_fix * lambda;
    let mut converged = false;
    for _ in 0..cfg.max_sweeps {
        let mut change: f64 = 0.0;
        for step in 0..cells {
            let i = match exit {
                Exit::Left => step,
                Exit::Right => cells - 1 - step,
            };
            let (left, right) = match exit {
                Exit::Left => (Some(u[(i + cells - 1) % cells]), None),
                Exit::Right => (None, Some(u[(i + 1) % cells])),
            };
            let (v, _) = node_update(&base, &table, &local, i, c, lambda, h, left, right, cfg.refine_q);
            change = change.max((v - u[i]).abs());
            u[i] = v;
        }
        if change <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { iterations: cfg.max_sweeps, residual: f64::NAN });
    }
    u.push(u[0]);
    Ok(FarField { exit, values: u, table })
}

/// A discounted solution on a truncated grid.
#[derive(Clone, Debug)]
pub struct DiscountedSolution {
    pub grid: Grid1D,
    pub lambda: f64,
    pub level: f64,
    pub values: Vec<f64>,
    pub residual_sup: f64,
    pub iterations: usize,
    pub scheme: Scheme,
    pub closure: Closure,
    /// Time step of the dynamic-programming operator.
    pub h: f64,
    pub spec: Arc<HamiltonianSpec>,
    pub table: Option<Arc<LagrangianTable>>,
    pub refine_q: bool,
    pub far_left: Option<FarField>,
    pub far_right: Option<FarField>,
}

impl DiscountedSolution {
    /// `u^lambda(x)`: grid interpolation, continued by the far-field branches outside.
    pub fn value_at(&self, x: f64) -> f64 {
        if x < self.grid.x_lo {
            if let Some(f) = &self.far_left {
                return f.value(x);
            }
        } else if x > self.grid.x_hi {
            if let Some(f) = &self.far_right {
                return f.value(x);
            }
        }
        self.grid.interp(&self.values, x)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_slope(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.windows(2).fold(0.0, |m, w| m.max(((w[1] - w[0]) / dx).abs()))
    }
}

/// Shared precomputation for repeated solves on one grid.
#[derive(Clone, Debug)]
pub struct SolverContext {
    pub spec: Arc<HamiltonianSpec>,
    pub grid: Grid1D,
    pub table: Arc<LagrangianTable>,
    pub config: SolverConfig,
}

impl SolverContext {
    pub fn new(spec: &HamiltonianSpec, grid: &Grid1D, config: SolverConfig) -> Self {
        let table = Arc::new(LagrangianTable::build(spec, Which::G, grid, config.q_nodes));
        Self { spec: Arc::new(spec.clone()), grid: *grid, table, config }
    }

    pub fn h(&self) -> f64 {
        self.config.h_factor * self.grid.dx() / self.spec.q_velocity_bound
    }

    pub fn solve(&self, lambda: f64, c: f64) -> Result<DiscountedSolution> {
        let cfg = &self.config;
        let h = self.h();
        if !(lambda > 0.0) {
            return Err(Error::Config(format!("discount must be positive, got {lambda}")));
        }
        if lambda * h >= 1.0 {
            return Err(Error::Config(format!("lambda h = {} >= 1: the scheme is not a contraction", lambda * h)));
        }
        let grid = &self.grid;
        let dx = grid.dx();
        let n = grid.n;
        let spec = self.spec.as_ref();
        let (far_left, far_right) = match cfg.closure {
            Closure::MonotoneExit => (
                Some(solve_far_field(spec, lambda, c, dx, h, Exit::Left, cfg)?),
                Some(solve_far_field(spec, lambda, c, dx, h, Exit::Right, cfg)?),
            ),
            Closure::StateConstraint => (None, None),
        };
        let ghost_left = far_left.as_ref().map(|f| f.value(grid.x_lo - dx));
        let ghost_right = far_right.as_ref().map(|f| f.value(grid.x_hi + dx));
        let local = LocalSolve::new(&self.table.qs, lambda, h, dx);
        let zero = self.table.qs.len() / 2;
        let mut u: Vec<f64> = (0..n).map(|i| (self.table.row(i)[zero] + c) / lambda).collect();
        let tol = cfg.tol_fix * lambda;
        let max_sweeps = cfg.max_sweeps.min((1e7 / (lambda * h)).ceil() as usize);
        let mut sweeps = 0;
        let mut change = f64::INFINITY;
        while sweeps < max_sweeps {
            change = 0.0;
            let forward = sweeps % 2 == 0;
            for step in 0..n {
                let i = if forward { step } else { n - 1 - step };
                let left = if i == 0 { ghost_left } else { Some(u[i - 1]) };
                let right = if i + 1 == n { ghost_right } else { Some(u[i + 1]) };
                let (v, _) = node_update(spec, &self.table, &local, i, c, lambda, h, left, right, cfg.refine_q);
                change = change.max((v - u[i]).abs());
                u[i] = v;
            }
            sweeps += 1;
            if change <= tol {
                break;
            }
        }
        if change > tol {
            return Err(Error::Convergence { iterations: sweeps, residual: change });
        }
        Ok(DiscountedSolution {
            grid: *grid,
            lambda,
            level: c,
            values: u,
            residual_sup: change,
            iterations: sweeps,
            scheme: Scheme::SemiLagrangian,
            closure: cfg.closure,
            h,
            spec: self.spec.clone(),
            table: Some(self.table.clone()),
            refine_q: cfg.refine_q,
            far_left,
            far_right,
        })
    }

    /// One application of the discrete operator at node `i` with the given neighbor values.
    /// Exposed for monotonicity probes.
    pub fn operator_at(&self, lambda: f64, c: f64, i: usize, left: Option<f64>, right: Option<f64>) -> f64 {
        let h = self.h();
        let local = LocalSolve::new(&self.table.qs, lambda, h, self.grid.dx());
        node_update(self.spec.as_ref(), &self.table, &local, i, c, lambda, h, left, right, self.config.refine_q).0
    }
}

/// Semi-Lagrangian solve of `lambda u + G(x, u') = c` on `grid`.
pub fn solve_semilagrangian(
    spec: &HamiltonianSpec,
    lambda: f64,
    c: f64,
    grid: &Grid1D,
    config: &SolverConfig,
) -> Result<DiscountedSolution> {
    SolverContext::new(spec, grid, *config).solve(lambda, c)
}

/// Godunov flux for convex `G`: `max(G(max(a, p*)), G(min(b, p*)))`.
fn godunov_flux(spec: &HamiltonianSpec, x: f64, p_star: f64, a: f64, b: f64) -> f64 {
    let fiber = spec.fiber(x, Which::G);
    fiber.eval(a.max(p_star)).max(fiber.eval(b.min(p_star)))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SweepOrder {
    Alternate,
    Forward,
    Backward,
}

/// Gauss-Seidel sweeps where node `i` is set to the root of the increasing map
/// `ui -> residual(u, i, ui)`; stops when the sup residual is below `tol`.
fn gauss_seidel_bisection<F>(u: &mut [f64], residual: F, order: SweepOrder, tol: f64, max_sweeps: usize) -> Result<(usize, f64)>
where
    F: Fn(&[f64], usize, f64) -> f64,
{
    let n = u.len();
    let mut sweeps = 0;
    let mut res_sup = f64::INFINITY;
    while sweeps < max_sweeps {
        let forward = match order {
            SweepOrder::Alternate => sweeps % 2 == 0,
            SweepOrder::Forward => true,
            SweepOrder::Backward => false,
        };
        for step in 0..n {
            let i = if forward { step } else { n - 1 - step };
            let mut lo = u[i] - 1.0;
            let mut hi = u[i] + 1.0;
            let mut width = 1.0;
            while residual(u, i, lo) > 0.0 {
                width *= 2.0;
                lo = u[i] - width;
            }
            width = 1.0;
            while residual(u, i, hi) < 0.0 {
                width *= 2.0;
                hi = u[i] + width;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
                    break;
                }
                if residual(u, i, mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            u[i] = 0.5 * (lo + hi);
        }
        sweeps += 1;
        if order != SweepOrder::Alternate || sweeps % 2 == 0 {
            res_sup = (0..n).map(|i| residual(u, i, u[i]).abs()).fold(0.0, f64::max);
            if res_sup <= tol {
                return Ok((sweeps, res_sup));
            }
        }
    }
    Err(Error::Convergence { iterations: sweeps, residual: res_sup })
}

/// One-sided periodic Godunov solve of the unperturbed problem: curves leaving to the left
/// see `H(x, max(p, p*))`, upwinded from the left; to the right `H(x, min(p, p*))`.
fn godunov_far_field(spec: &HamiltonianSpec, lambda: f64, c: f64, dx: f64, exit: Exit, config: &SolverConfig) -> Result<Vec<f64>> {
    let cells = (1.0 / dx).round() as usize;
    if ((cells as f64) * dx - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("monotone-exit closure needs 1/dx integral, got dx = {dx}")));
    }
    let base = spec.base();
    let xs: Vec<f64> = (0..cells).map(|i| i as f64 * dx).collect();
    let fibers: Vec<(f64, f64)> = xs.iter().map(|&x| base.fiber(x, Which::H).argmin(base.p_search_bound)).collect();
    let mut u: Vec<f64> = fibers.iter().map(|&(_, m)| (c - m) / lambda).collect();
    let residual = |u: &[f64], i: usize, ui: f64| -> f64 {
        let fiber = base.fiber(xs[i], Which::H);
        let p_star = fibers[i].0;
        let flux = match exit {
            Exit::Left => fiber.eval(((ui - u[(i + cells - 1) % cells]) / dx).max(p_star)),
            Exit::Right => fiber.eval(((u[(i + 1) % cells] - ui) / dx).min(p_star)),
        };
        lambda * ui + flux - c
    };
    let order = match exit {
        Exit::Left => SweepOrder::Forward,
        Exit::Right => SweepOrder::Backward,
    };
    gauss_seidel_bisection(&mut u, residual, order, config.tol_residual, config.max_sweeps)?;
    Ok(u)
}

/// Finite-difference cross-check: `lambda u_i + G_hat(x_i; D^- u_i, D^+ u_i) = c`, solved node by
/// node (the residual is increasing in `u_i`) with alternating Gauss-Seidel sweeps. The ends
/// follow `config.closure`: ghost values from one-sided periodic Godunov solves, or state
/// constraints.
pub fn solve_godunov(
    spec: &HamiltonianSpec,
    lambda: f64,
    c: f64,
    grid: &Grid1D,
    config: &SolverConfig,
) -> Result<DiscountedSolution> {
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("discount must be positive, got {lambda}")));
    }
    let n = grid.n;
    let dx = grid.dx();
    let xs = grid.nodes();
    let (ghost_left, ghost_right) = match config.closure {
        Closure::MonotoneExit => {
            let cells = (1.0 / dx).round() as usize;
            let node = |x: f64| ((x / dx).round() as i64).rem_euclid(cells as i64) as usize;
            let left = godunov_far_field(spec, lambda, c, dx, Exit::Left, config)?;
            let right = godunov_far_field(spec, lambda, c, dx, Exit::Right, config)?;
            (Some(left[node(grid.x_lo - dx)]), Some(right[node(grid.x_hi + dx)]))
        }
        Closure::StateConstraint => (None, None),
    };
    let fibers: Vec<(f64, f64)> = xs.iter().map(|&x| spec.fiber(x, Which::G).argmin(spec.p_search_bound)).collect();
    let residual = |u: &[f64], i: usize, ui: f64| -> f64 {
        let p_star = fibers[i].0;
        let a = match (i, ghost_left) {
            (0, Some(g)) => (ui - g) / dx,
            (0, None) => p_star,
            _ => (ui - u[i - 1]) / dx,
        };
        let b = match (i + 1 == n, ghost_right) {
            (true, Some(g)) => (g - ui) / dx,
            (true, None) => p_star,
            _ => (u[i + 1] - ui) / dx,
        };
        lambda * ui + godunov_flux(spec, xs[i], p_star, a, b) - c
    };
    // stationary start: (L(x, 0) + c) / lambda with L(x, 0) = -min_p G
    let mut u: Vec<f64> = fibers.iter().map(|&(_, m)| (c - m) / lambda).collect();
    let (sweeps, res_sup) =
        gauss_seidel_bisection(&mut u, residual, SweepOrder::Alternate, config.tol_residual, config.max_sweeps)?;
    Ok(DiscountedSolution {
        grid: *grid,
        lambda,
        level: c,
        values: u,
        residual_sup: res_sup,
        iterations: sweeps,
        scheme: Scheme::Godunov,
        closure: config.closure,
        h: dx / spec.q_velocity_bound,
        spec: Arc::new(spec.clone()),
        table: None,
        refine_q: false,
        far_left: None,
        far_right: None,
    })
}

/// A priori bounds `||u|| <= (M + |c|)/lambda` and `Lip(u) <= kappa + 1`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundsCheck {
    pub sup_norm: f64,
    pub sup_bound: f64,
    pub lipschitz: f64,
    pub lipschitz_bound: f64,
}

impl BoundsCheck {
    pub fn holds(&self, dx: f64) -> bool {
        self.sup_norm <= self.sup_bound + dx && self.lipschitz <= self.lipschitz_bound
    }
}

pub fn check_bounds(spec: &HamiltonianSpec, sol: &DiscountedSolution) -> BoundsCheck {
    let xs = sol.grid.nodes();
    let m = xs.iter().map(|&x| spec.g(x, 0.0).abs()).fold(0.0, f64::max);
    let level = m + sol.level.abs();
    let kappa = xs
        .iter()
        .step_by(8)
        .map(|&x| match sublevel_bracket(spec, Which::G, x, level) {
            Ok(b) => b.p_minus.abs().max(b.p_plus.abs()),
            Err(_) => spec.p_search_bound,
        })
        .fold(0.0, f64::max);
    BoundsCheck {
        sup_norm: sol.sup_norm(),
        sup_bound: level / sol.lambda,
        lipschitz: sol.max_slope(),
        lipschitz_bound: kappa + 1.0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    pub sup_error: f64,
    pub iterations: usize,
    pub residual: f64,
    pub scheme: Scheme,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// `e(lambda) <= e(previous lambda) + dx` along the sweep.
    pub monotone_decay: bool,
    /// Least-squares slope of `log e` against `log lambda` (reported, not asserted).
    pub empirical_order: Option<f64>,
    #[serde(skip)]
    pub solutions: Vec<DiscountedSolution>,
}

impl ConvergenceTable {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "lambda,sup_error,iterations,residual,scheme")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.lambda, r.sup_error, r.iterations, r.residual, r.scheme.as_str())?;
        }
        Ok(())
    }
}

/// Default geometric sequence `0.8, 0.4, ..., 0.0125`.
pub fn default_lambdas() -> Vec<f64> {
    (0..7).map(|k| 0.8 / 2f64.powi(k)).collect()
}

/// Solves for every `lambda` (decreasing) at level `c(G)` and measures `sup_window |u^lambda - u0_G|`.
pub fn lambda_sweep(
    ctx: &SolverContext,
    report: &CaseReport,
    lambdas: &[f64],
    window: (f64, f64),
    u0g: &CriticalProfile,
    keep_solutions: bool,
) -> Result<ConvergenceTable> {
    if lambdas.iter().any(|&l| !(l > 0.0)) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("lambda list must be positive and decreasing".into()));
    }
    if window.0 < ctx.grid.x_lo || window.1 > ctx.grid.x_hi {
        return Err(Error::Config(format!("window [{}, {}] is not inside the grid", window.0, window.1)));
    }
    let idx = ctx.grid.index_range(window.0, window.1);
    let mut rows = Vec::new();
    let mut solutions = Vec::new();
    for &lambda in lambdas {
        let sol = ctx.solve(lambda, report.c_G)?;
        let err = idx
            .clone()
            .map(|i| (sol.values[i] - u0g.eval(ctx.grid.x(i))).abs())
            .fold(0.0, f64::max);
        rows.push(ConvergenceRow {
            lambda,
            sup_error: err,
            iterations: sol.iterations,
            residual: sol.residual_sup,
            scheme: sol.scheme,
        });
        if keep_solutions {
            solutions.push(sol);
        }
    }
    let dx = ctx.grid.dx();
    let monotone_decay = rows.windows(2).all(|w| w[1].sup_error <= w[0].sup_error + dx);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sup_error > 0.0)
        .map(|r| (r.lambda.ln(), r.sup_error.ln()))
        .collect();
    let empirical_order = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(ConvergenceTable { rows, monotone_decay, empirical_order, solutions })
}

/// `sup_window |u^lambda on grid - u^lambda on the grid extended by half its length on each side|`.
pub fn domain_doubling_check(
    spec: &HamiltonianSpec,
    lambda: f64,
    c: f64,
    grid: &Grid1D,
    window: (f64, f64),
    config: &SolverConfig,
) -> Result<f64> {
    let half = ((grid.x_hi - grid.x_lo) / 2.0).floor();
    let big = grid.extended(half, half);
    let a = solve_semilagrangian(spec, lambda, c, grid, config)?;
    let b = solve_semilagrangian(spec, lambda, c, &big, config)?;
    Ok(grid
        .index_range(window.0, window.1)
        .map(|i| (a.values[i] - b.value_at(grid.x(i))).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{PeriodicFunction, PotentialSpec};
    use std::f64::consts::PI;

    fn grid(lo: f64, hi: f64, dx: f64) -> Grid1D {
        Grid1D::with_spacing(lo, hi, dx).unwrap()
    }

    #[test]
    fn flat_hamiltonian_gives_zero() {
        let spec = HamiltonianSpec::eikonal(0.0, PeriodicFunction::zero(), PotentialSpec::zero());
        let g = grid(-2.0, 2.0, 1.0 / 64.0);
        for closure in [Closure::MonotoneExit, Closure::StateConstraint] {
            let cfg = SolverConfig { closure, ..Default::default() };
            let s = solve_semilagrangian(&spec, 0.3, 0.0, &g, &cfg).unwrap();
            assert!(s.sup_norm() < 1e-12);
        }
        let s = solve_godunov(&spec, 0.3, 0.0, &g, &SolverConfig::default()).unwrap();
        assert!(s.sup_norm() < 1e-9 && s.residual_sup <= 1e-7);
    }

    #[test]
    fn shifted_family_matches_closed_form() {
        let spec = HamiltonianSpec::eikonal(2.0, PeriodicFunction::cosine(), PotentialSpec::zero());
        let g = grid(-3.0, 4.0, 1.0 / 128.0);
        let lambda = 0.4;
        let s = solve_semilagrangian(&spec, lambda, 2.0, &g, &SolverConfig::default()).unwrap();
        let d = lambda * lambda + 4.0 * PI * PI;
        let err = g
            .nodes()
            .iter()
            .zip(&s.values)
            .map(|(&x, &u)| (u - (lambda * (2.0 * PI * x).cos() + 2.0 * PI * (2.0 * PI * x).sin()) / d).abs())
            .fold(0.0, f64::max);
        assert!(err < 10.0 * g.dx(), "{err}");
    }

    #[test]
    fn discrete_comparison() {
        let spec = HamiltonianSpec::eikonal(0.0, PeriodicFunction::cosine(), PotentialSpec::bump(0.25, 0.15, 1.0 / 3.0));
        let g = grid(-3.0, 4.0, 1.0 / 64.0);
        let ctx = SolverContext::new(&spec, &g, SolverConfig::default());
        let a = ctx.solve(0.2, 1.0).unwrap();
        let b = ctx.solve(0.2, 1.1).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| y >= x));
        let bounds = check_bounds(&spec, &a);
        assert!(bounds.holds(g.dx()), "{bounds:?}");
    }

    #[test]
    fn rejects_bad_discount() {
        let spec = HamiltonianSpec::eikonal(0.0, PeriodicFunction::cosine(), PotentialSpec::zero());
        let g = grid(0.0, 1.0, 1.0 / 16.0);
        assert!(matches!(
            solve_semilagrangian(&spec, 0.0, 1.0, &g, &SolverConfig::default()),
            Err(Error::Config(_))
        ));
        let cfg = SolverConfig { h_factor: 1e4, ..Default::default() };
        assert!(matches!(solve_semilagrangian(&spec, 10.0, 1.0, &g, &cfg), Err(Error::Config(_))));
    }
}
