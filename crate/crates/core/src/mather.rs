//! Minimizing closed measures by linear programming, equilibrium Mather measures of `G`,
//! and the non-Tonelli counterexample of the appendix.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{appendix_eps, appendix_p1, appendix_p2, HamiltonianSpec, Which, L_INF};
use crate::lp::{self, LinearProgram};
use crate::sublevel::{free_critical_value, mean_momenta, CaseReport};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LpDomain {
    /// `H` on the circle, trigonometric test functions.
    Torus,
    /// `G` on `[lo, hi]`, hat test functions with free boundary values.
    Window { lo: f64, hi: f64 },
}

impl LpDomain {
    /// `supp V` with one period of margin on each side.
    pub fn default_window(spec: &HamiltonianSpec) -> Self {
        let (lo, hi) = spec.potential.support().unwrap_or((0.0, 0.0));
        LpDomain::Window { lo: lo - 1.0, hi: hi + 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LpResolution {
    pub x_cells: usize,
    pub q_nodes: usize,
    pub k_basis: usize,
}

impl Default for LpResolution {
    fn default() -> Self {
        Self { x_cells: 256, q_nodes: 65, k_basis: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub x: f64,
    pub q: f64,
    pub w: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscreteClosedMeasure {
    pub atoms: Vec<Atom>,
    /// `max |sum w phi'(x) q|` over the test basis used to build the measure.
    pub closure_residual: f64,
}

impl DiscreteClosedMeasure {
    pub fn delta(x: f64) -> Self {
        Self { atoms: vec![Atom { x, q: 0.0, w: 1.0 }], closure_residual: 0.0 }
    }

    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|a| a.w * f(a.x, a.q)).sum()
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LpResult {
    pub optimal_value: f64,
    pub measure: DiscreteClosedMeasure,
    pub dual_gap_proxy: f64,
}

impl LpResult {
    /// `value`, atoms above `1e-6` and the closure residual.
    pub fn to_json(&self) -> serde_json::Value {
        let atoms: Vec<&Atom> = self.measure.atoms.iter().filter(|a| a.w > 1e-6).collect();
        serde_json::json!({
            "value": self.optimal_value,
            "support": atoms,
            "closure_residual": self.measure.closure_residual,
            "dual_gap_proxy": self.dual_gap_proxy,
        })
    }
}

/// `min sum w L(x_i, q_j)` over discrete closed probability measures.
pub fn closed_measure_lp(spec: &HamiltonianSpec, domain: LpDomain, res: &LpResolution) -> Result<LpResult> {
    let qmax = spec.q_velocity_bound;
    let nq = res.q_nodes.max(3) | 1;
    let qs: Vec<f64> = (0..nq).map(|j| -qmax + 2.0 * qmax * j as f64 / (nq - 1) as f64).collect();
    let (which, xs): (Which, Vec<f64>) = match domain {
        LpDomain::Torus => (Which::H, (0..res.x_cells).map(|i| i as f64 / res.x_cells as f64).collect()),
        LpDomain::Window { lo, hi } => {
            if let Some((a, b)) = spec.potential.support() {
                if lo > a || hi < b {
                    return Err(Error::Domain(format!("LP window [{lo}, {hi}] does not contain supp V")));
                }
            }
            (Which::G, (0..=res.x_cells).map(|i| lo + (hi - lo) * i as f64 / res.x_cells as f64).collect())
        }
    };
    let target = if which == Which::H { spec.base() } else { spec.clone() };
    let mut columns: Vec<(usize, f64, f64)> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let fiber = target.fiber(x, which);
        for &q in &qs {
            let l = fiber.conjugate(q, target.p_search_bound);
            if l < 0.5 * L_INF {
                columns.push((i, q, l));
            }
        }
    }
    let n = columns.len();
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut b = vec![1.0];
    match domain {
        LpDomain::Torus => {
            for k in 1..=res.k_basis {
                let kk = 2.0 * PI * k as f64;
                // phi = sin(kk x) / kk and cos(kk x) / kk
                rows.push(columns.iter().map(|&(i, q, _)| (kk * xs[i]).cos() * q).collect());
                rows.push(columns.iter().map(|&(i, q, _)| -(kk * xs[i]).sin() * q).collect());
                b.push(0.0);
                b.push(0.0);
            }
        }
        LpDomain::Window { .. } => {
            for k in 0..xs.len() {
                rows.push(columns.iter().map(|&(i, q, _)| if i == k { q } else { 0.0 }).collect());
                b.push(0.0);
            }
        }
    }
    let program = LinearProgram { c: columns.iter().map(|c| c.2).collect(), a: rows.clone(), b };
    let sol = lp::solve(&program)?;
    let atoms: Vec<Atom> = columns
        .iter()
        .zip(&sol.x)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&(i, q, _), &w)| Atom { x: xs[i], q, w })
        .collect();
    let closure_residual = rows[1..]
        .iter()
        .map(|r| r.iter().zip(&sol.x).map(|(a, w)| a * w).sum::<f64>().abs())
        .fold(0.0, f64::max);
    Ok(LpResult {
        optimal_value: sol.objective,
        measure: DiscreteClosedMeasure { atoms, closure_residual },
        dual_gap_proxy: (sol.objective - sol.dual_objective).abs(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumMeasure {
    pub measure: DiscreteClosedMeasure,
    pub objective: f64,
}

/// `delta_(y, 0)` for each equilibrium `y` of `G` in `[lo, hi]`, each checked to reach `-c_f(G)`.
pub fn equilibrium_mather_g(spec: &HamiltonianSpec, report: &CaseReport, lo: f64, hi: f64) -> Result<Vec<EquilibriumMeasure>> {
    let mut out = Vec::new();
    for e in report.equilibria_g_in(spec, lo, hi) {
        let objective = spec.fiber(e.x, Which::G).conjugate(0.0, spec.p_search_bound);
        if (objective + report.c_f_G).abs() > 1e-9 {
            return Err(Error::Internal(format!(
                "equilibrium {} has L(y, 0) = {objective}, expected {}",
                e.x, -report.c_f_G
            )));
        }
        out.push(EquilibriumMeasure { measure: DiscreteClosedMeasure::delta(e.x), objective });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct AppendixReport {
    pub eps1: f64,
    pub c_f: f64,
    pub I_plus: f64,
    pub gamma_period_T: f64,
    /// `(y, int u_y dmu)` for `y` on a grid over `[-1/100, 1/100]`.
    pub integrals: Vec<(f64, f64)>,
    pub min_integral: f64,
    pub rho: f64,
    pub delta: f64,
    /// `-4 / rho + delta / (4 eps1)`.
    pub lower_bound: f64,
    /// `eps1` below which the lower bound is positive, `delta rho / 16`.
    pub eps1_threshold: f64,
    /// `|int phi' q dmu|` for `phi = sin 2 pi x` and `cos 2 pi x`.
    pub closure_residuals: [f64; 2],
}

/// Speed of the curve `gamma' = eps + p1 - p2`.
fn appendix_speed(x: f64, eps1: f64) -> f64 {
    appendix_eps(x) + appendix_p1(x) - appendix_p2(x, eps1)
}

/// `u_y(x) = int_y^x p1`.
fn appendix_u(y: f64, x: f64) -> f64 {
    -((2.0 * PI * x).sin() - (2.0 * PI * y).sin()) / (2.0 * PI)
}

/// Builds the appendix Hamiltonian, its Birkhoff measure, and the integrals `int u_y dmu`.
pub fn appendix_counterexample(eps1: f64, y_samples: usize) -> Result<AppendixReport> {
    if !(eps1 > 0.0 && eps1 <= 0.01) {
        return Err(Error::Domain(format!("eps1 = {eps1} outside (0, 0.01]")));
    }
    let spec = HamiltonianSpec::appendix(eps1);
    let (c_f, _) = free_critical_value(&spec, Which::H);
    let (_, i_plus) = mean_momenta(&spec, 0.0)?;

    let ys: Vec<f64> = (0..y_samples.max(2))
        .map(|k| -0.01 + 0.02 * k as f64 / (y_samples.max(2) - 1) as f64)
        .collect();
    // RK4 in x for dt/dx = 1/gamma', carrying int f(x) dt for the test integrands
    let step: f64 = 1e-4;
    let steps = (1.0 / step).round() as usize;
    let nf = 2 + ys.len();
    let integrand = |x: f64| -> Result<Vec<f64>> {
        let v = appendix_speed(x, eps1);
        if v <= 0.0 {
            return Err(Error::Internal(format!("curve speed {v} <= 0 at x = {x}")));
        }
        let mut out = Vec::with_capacity(nf + 1);
        out.push(1.0 / v);
        // phi'(x) q / q: the velocity cancels against dt/dx
        out.push((2.0 * PI * x).cos() * 2.0 * PI);
        out.push(-(2.0 * PI * x).sin() * 2.0 * PI);
        for &y in &ys {
            out.push(appendix_u(y, x) / v);
        }
        Ok(out)
    };
    let mut acc = vec![0.0; nf + 1];
    for s in 0..steps {
        let x0 = s as f64 * step;
        let k1 = integrand(x0)?;
        let k2 = integrand(x0 + 0.5 * step)?;
        let k4 = integrand(x0 + step)?;
        // the right-hand side does not depend on t, so RK4 reduces to Simpson's weights
        for j in 0..acc.len() {
            acc[j] += step / 6.0 * (k1[j] + 4.0 * k2[j] + k4[j]);
        }
    }
    let period = acc[0];
    let closure_residuals = [(acc[1] / period).abs(), (acc[2] / period).abs()];
    let integrals: Vec<(f64, f64)> = ys.iter().enumerate().map(|(k, &y)| (y, acc[3 + k] / period)).collect();
    let min_integral = integrals.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);

    let mut rho = f64::INFINITY;
    for i in 0..=100_000 {
        let x = i as f64 / 100_000.0;
        if x <= 0.52 || x >= 0.99 {
            rho = rho.min(appendix_speed(x, eps1));
        }
    }
    let mut delta = f64::INFINITY;
    for i in 0..=200 {
        let y = -0.01 + 0.02 * i as f64 / 200.0;
        for j in 0..=2000 {
            let x = 0.53 + 0.44 * j as f64 / 2000.0;
            delta = delta.min(appendix_u(y, x));
        }
    }
    Ok(AppendixReport {
        eps1,
        c_f,
        I_plus: i_plus,
        gamma_period_T: period,
        integrals,
        min_integral,
        rho,
        delta,
        lower_bound: -4.0 / rho + delta / (4.0 * eps1),
        eps1_threshold: delta * rho / 16.0,
        closure_residuals,
    })
}
