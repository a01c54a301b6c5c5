//! Intrinsic semidistances, periodic critical solutions, the limits `u0_H`, `u0_G`
//! and the strict subsolution `v_G` of case I.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::hamiltonian::{HamiltonianSpec, Which};
use crate::sublevel::{
    integrate_side, panel, sublevel_bracket, CaseReport, CaseTag, PANELS_PER_UNIT, TOL_MEAN,
};

/// `S_a` for `which` at level `a`.
#[derive(Clone, Copy, Debug)]
pub struct Semidistance<'a> {
    pub spec: &'a HamiltonianSpec,
    pub which: Which,
    pub level: f64,
}

/// `S_a(y, x)`: `int_y^x p^+` if `y <= x`, `int_x^y (-p^-)` otherwise.
pub fn semidistance_eval(s: &Semidistance<'_>, y: f64, x: f64) -> Result<f64> {
    if y <= x {
        integrate_side(s.spec, s.which, s.level, y, x, true, PANELS_PER_UNIT)
    } else {
        Ok(-integrate_side(s.spec, s.which, s.level, x, y, false, PANELS_PER_UNIT)?)
    }
}

/// Where an obstacle `g + S(y, .)` acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reach {
    Both,
    /// Only at `x >= y`.
    Right,
    /// Only at `x <= y`.
    Left,
}

#[derive(Clone, Copy, Debug)]
pub struct Obstacle {
    pub y: f64,
    pub g: f64,
    pub reach: Reach,
}

/// Cumulative primitives of `p^+` and `p^-` on a lattice of step `1/4096`, so that
/// `S(y, x)` is a table difference plus one partial panel.
#[derive(Clone, Debug)]
pub struct SemidistanceTable {
    spec: HamiltonianSpec,
    which: Which,
    level: f64,
    lo: f64,
    h: f64,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl SemidistanceTable {
    pub fn build(spec: &HamiltonianSpec, which: Which, level: f64, lo: f64, hi: f64) -> Result<Self> {
        let per = PANELS_PER_UNIT as f64;
        let lo = (lo * per).floor() / per;
        let hi = (hi * per).ceil() / per;
        let n = ((hi - lo) * per).round() as usize;
        let h = 1.0 / per;
        let mut plus = Vec::with_capacity(n + 1);
        let mut minus = Vec::with_capacity(n + 1);
        plus.push(0.0);
        minus.push(0.0);
        let mut left = sublevel_bracket(spec, which, lo, level)?;
        for i in 0..n {
            let x0 = lo + h * i as f64;
            let x1 = lo + h * (i + 1) as f64;
            let mid = sublevel_bracket(spec, which, 0.5 * (x0 + x1), level)?;
            let right = sublevel_bracket(spec, which, x1, level)?;
            plus.push(plus[i] + panel(spec, which, level, x0, x1, &left, &mid, &right, true)?);
            minus.push(minus[i] + panel(spec, which, level, x0, x1, &left, &mid, &right, false)?);
            left = right;
        }
        Ok(Self { spec: spec.clone(), which, level, lo, h, plus, minus })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.lo + self.h * (self.plus.len() - 1) as f64)
    }

    fn primitive(&self, x: f64, upper: bool) -> Result<f64> {
        let (lo, hi) = self.domain();
        if x < lo - 1e-12 || x > hi + 1e-12 {
            return Err(Error::Domain(format!("semidistance table on [{lo}, {hi}] queried at {x}")));
        }
        let s = ((x - lo) / self.h).clamp(0.0, (self.plus.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.plus.len() - 2);
        let x0 = lo + self.h * k as f64;
        let table = if upper { &self.plus } else { &self.minus };
        if x - x0 <= 1e-15 {
            return Ok(table[k]);
        }
        let b0 = sublevel_bracket(&self.spec, self.which, x0, self.level)?;
        let bm = sublevel_bracket(&self.spec, self.which, 0.5 * (x0 + x), self.level)?;
        let b1 = sublevel_bracket(&self.spec, self.which, x, self.level)?;
        Ok(table[k] + panel(&self.spec, self.which, self.level, x0, x, &b0, &bm, &b1, upper)?)
    }

    /// `int_lo^x p^+`.
    pub fn primitive_plus(&self, x: f64) -> Result<f64> {
        self.primitive(x, true)
    }

    /// `int_lo^x p^-`.
    pub fn primitive_minus(&self, x: f64) -> Result<f64> {
        self.primitive(x, false)
    }

    pub fn eval(&self, y: f64, x: f64) -> Result<f64> {
        if y <= x {
            Ok(self.primitive_plus(x)? - self.primitive_plus(y)?)
        } else {
            Ok(self.primitive_minus(x)? - self.primitive_minus(y)?)
        }
    }

    /// `min_obstacles [g + S(y, x)]` at every node of `grid`, or `+inf` where no obstacle reaches.
    /// One forward and one backward running minimum; exact in 1D since `S` is additive.
    pub fn envelope(&self, grid: &Grid1D, obstacles: &[Obstacle]) -> Result<Vec<f64>> {
        let xs = grid.nodes();
        let pp: Vec<f64> = xs.iter().map(|&x| self.primitive_plus(x)).collect::<Result<_>>()?;
        let pm: Vec<f64> = xs.iter().map(|&x| self.primitive_minus(x)).collect::<Result<_>>()?;
        let mut right: Vec<(f64, f64)> = Vec::new();
        let mut left: Vec<(f64, f64)> = Vec::new();
        for o in obstacles {
            if o.reach != Reach::Left {
                right.push((o.y, o.g - self.primitive_plus(o.y)?));
            }
            if o.reach != Reach::Right {
                left.push((o.y, o.g - self.primitive_minus(o.y)?));
            }
        }
        right.sort_by(|a, b| a.0.total_cmp(&b.0));
        left.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut out = vec![f64::INFINITY; xs.len()];
        let mut best = f64::INFINITY;
        let mut j = 0;
        for (i, &x) in xs.iter().enumerate() {
            while j < right.len() && right[j].0 <= x + 1e-13 {
                best = best.min(right[j].1);
                j += 1;
            }
            out[i] = out[i].min(pp[i] + best);
        }
        let mut best = f64::INFINITY;
        let mut j = 0;
        for (i, &x) in xs.iter().enumerate().rev() {
            while j < left.len() && left[j].0 >= x - 1e-13 {
                best = best.min(left[j].1);
                j += 1;
            }
            out[i] = out[i].min(pm[i] + best);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    #[serde(rename = "u0_H")]
    U0H,
    #[serde(rename = "u0_G")]
    U0G,
    #[serde(rename = "periodic_solution")]
    PeriodicSolution,
    #[serde(rename = "strict_subsolution_vG")]
    StrictSubsolutionVG,
}

impl ProfileKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileKind::U0H => "u0_H",
            ProfileKind::U0G => "u0_G",
            ProfileKind::PeriodicSolution => "periodic_solution",
            ProfileKind::StrictSubsolutionVG => "strict_subsolution_vG",
        }
    }
}

/// A critical (sub)solution sampled on a grid.
#[derive(Clone, Debug)]
pub struct CriticalProfile {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub level: f64,
    pub kind: ProfileKind,
}

impl CriticalProfile {
    /// Linear interpolation, clamped at the grid ends.
    pub fn eval(&self, x: f64) -> f64 {
        self.grid.interp(&self.values, x)
    }

    /// Quasi-periodic continuation past the grid: the outermost period is repeated with
    /// its increment. Exact for the profiles built here, since `V` vanishes there.
    pub fn eval_extended(&self, x: f64) -> f64 {
        let (lo, hi) = (self.grid.x_lo, self.grid.x_hi);
        if x > hi {
            let k = (x - hi).ceil();
            let drift = self.eval(hi) - self.eval(hi - 1.0);
            self.eval(x - k) + k * drift
        } else if x < lo {
            let k = (lo - x).ceil();
            let drift = self.eval(lo) - self.eval(lo + 1.0);
            self.eval(x + k) + k * drift
        } else {
            self.eval(x)
        }
    }

    /// `max_i max(G(x_i, D^-u), G(x_i, D^+u)) - level` over interior nodes in `[lo, hi]`.
    pub fn subsolution_defect(&self, spec: &HamiltonianSpec, which: Which, lo: f64, hi: f64) -> f64 {
        let dx = self.grid.dx();
        let mut worst = f64::NEG_INFINITY;
        for i in self.grid.index_range(lo, hi) {
            if i == 0 || i + 1 >= self.grid.n {
                continue;
            }
            let x = self.grid.x(i);
            let dm = (self.values[i] - self.values[i - 1]) / dx;
            let dp = (self.values[i + 1] - self.values[i]) / dx;
            worst = worst.max(spec.value(which, x, dm).max(spec.value(which, x, dp)) - self.level);
        }
        worst
    }

    /// `5 dx L_x`, with `L_x` an estimate of the `x`-Lipschitz constant of `G` on the momenta in use.
    pub fn subsolution_tolerance(&self, spec: &HamiltonianSpec, which: Which) -> f64 {
        let dx = self.grid.dx();
        let slopes = self
            .values
            .windows(2)
            .map(|w| ((w[1] - w[0]) / dx).abs())
            .fold(0.0, f64::max);
        5.0 * dx * x_lipschitz(spec, which, slopes + 1.0)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }

    /// Rows `x,value,kind,level`.
    pub fn write_csv_rows<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{},{}", self.grid.x(i), v, self.kind.as_str(), self.level)?;
        }
        Ok(())
    }
}

/// Sampled `sup |d_x G(x, p)|` over one period, the support of `V`, and `|p| <= radius`.
pub fn x_lipschitz(spec: &HamiltonianSpec, which: Which, radius: f64) -> f64 {
    let radius = radius.min(spec.p_search_bound);
    let mut xs: Vec<f64> = (0..512).map(|i| i as f64 / 512.0).collect();
    if let Some((lo, hi)) = spec.potential.support() {
        xs.extend((0..=512).map(|i| lo + (hi - lo) * i as f64 / 512.0));
    }
    let e = 1e-5;
    let mut best: f64 = 0.0;
    for &x in &xs {
        for j in 0..=16 {
            let p = -radius + 2.0 * radius * j as f64 / 16.0;
            let d = (spec.value(which, x + e, p) - spec.value(which, x - e, p)).abs() / (2.0 * e);
            best = best.max(d);
        }
    }
    best
}

fn table_for(spec: &HamiltonianSpec, which: Which, level: f64, grid: &Grid1D) -> Result<SemidistanceTable> {
    SemidistanceTable::build(spec, which, level, grid.x_lo - 2.0, grid.x_hi + 2.0)
}

fn equilibrium_obstacles(table: &SemidistanceTable, points: impl IntoIterator<Item = f64>) -> Vec<Obstacle> {
    let (lo, hi) = table.domain();
    points
        .into_iter()
        .filter(|y| (lo..=hi).contains(y))
        .map(|y| Obstacle { y, g: 0.0, reach: Reach::Both })
        .collect()
}

/// A periodic solution of `H(x, u') = c(H)`.
pub fn periodic_critical_solution(spec: &HamiltonianSpec, report: &CaseReport, grid: &Grid1D) -> Result<CriticalProfile> {
    let base = spec.base();
    let table = table_for(&base, Which::H, report.c_H, grid)?;
    let values = if (report.c_H - report.c_f_H).abs() <= crate::sublevel::TOL_LEVEL {
        let (lo, hi) = table.domain();
        let eq = report.equilibria_h_in(&base, lo, hi);
        let obstacles = equilibrium_obstacles(&table, eq.iter().flat_map(|e| e.samples()));
        table.envelope(grid, &obstacles)?
    } else {
        let upper = if report.P_H_plus.abs() <= TOL_MEAN {
            true
        } else if report.P_H_minus.abs() <= TOL_MEAN {
            false
        } else {
            return Err(Error::Classification {
                c_f_h: report.c_f_H,
                c_h: report.c_H,
                c_f_g: report.c_f_G,
                c_g: report.c_G,
                p_plus: report.P_H_plus,
                p_minus: report.P_H_minus,
            });
        };
        let origin = if upper { table.primitive_plus(0.0)? } else { table.primitive_minus(0.0)? };
        grid.nodes()
            .iter()
            .map(|&x| Ok(if upper { table.primitive_plus(x)? } else { table.primitive_minus(x)? } - origin))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(CriticalProfile { grid: *grid, values, level: report.c_H, kind: ProfileKind::PeriodicSolution })
}

/// Whether the characterization of `u0_H` as an infimum of semidistances is certified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ConditionU {
    /// `I^-(c_H) < 0 < I^+(c_H)`, or Tonelli with one mean momentum zero.
    Verified,
    /// Not certified; the profile is still the infimum formula.
    Unverifiable { p_minus: f64, p_plus: f64 },
    /// `c_H > c_f_H`: the limit is selected by the Mather normalization instead.
    NotApplicable,
}

#[derive(Clone, Debug)]
pub struct U0H {
    pub profile: CriticalProfile,
    pub condition_u: ConditionU,
    /// Additive constant fixed by `int u0_H dmu = 0` (case `c_H > c_f_H`).
    pub normalization: Option<f64>,
}

impl U0H {
    /// The profile, or `ConditionUUnverifiable` when it is not certified.
    pub fn trusted(&self) -> Result<&CriticalProfile> {
        match self.condition_u {
            ConditionU::Unverifiable { p_minus, p_plus } => Err(Error::ConditionUUnverifiable { p_minus, p_plus }),
            _ => Ok(&self.profile),
        }
    }
}

/// The vanishing-discount limit of the unperturbed problem.
pub fn u0_h(spec: &HamiltonianSpec, report: &CaseReport, grid: &Grid1D) -> Result<U0H> {
    let mut profile = periodic_critical_solution(spec, report, grid)?;
    profile.kind = ProfileKind::U0H;
    if (report.c_H - report.c_f_H).abs() <= crate::sublevel::TOL_LEVEL {
        let (p_minus, p_plus) = (report.P_H_minus, report.P_H_plus);
        let interior = p_minus < -TOL_MEAN && p_plus > TOL_MEAN;
        let tonelli_endpoint = spec.is_tonelli() && (p_minus.abs() <= TOL_MEAN || p_plus.abs() <= TOL_MEAN);
        let condition_u = if interior || tonelli_endpoint {
            ConditionU::Verified
        } else {
            ConditionU::Unverifiable { p_minus, p_plus }
        };
        return Ok(U0H { profile, condition_u, normalization: None });
    }
    let lp = crate::mather::closed_measure_lp(spec, crate::mather::LpDomain::Torus, &Default::default())?;
    let mean: f64 = lp.measure.atoms.iter().map(|a| a.w * profile.eval_extended(a.x)).sum();
    for v in profile.values.iter_mut() {
        *v -= mean;
    }
    Ok(U0H { profile, condition_u: ConditionU::NotApplicable, normalization: Some(-mean) })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeDiagnostics {
    /// Largest `C` in `{2^-k}` with `u0_G(x) >= C|x| - 1/C` on the grid (case I).
    pub coercivity_c: Option<f64>,
    pub min: f64,
    pub max: f64,
    /// Increment of the profile over the outermost period on each side.
    pub drift_left: f64,
    pub drift_right: f64,
}

#[derive(Clone, Debug)]
pub struct Envelope {
    pub profile: CriticalProfile,
    pub diagnostics: EnvelopeDiagnostics,
}

/// `u0_G = min over obstacles of [g(y) + S_G(y, .)]`, with the obstacle set of the case.
pub fn u0_g_envelope(spec: &HamiltonianSpec, report: &CaseReport, u0h: &CriticalProfile, grid: &Grid1D) -> Result<Envelope> {
    let table = table_for(spec, Which::G, report.c_G, grid)?;
    let (tlo, thi) = table.domain();
    let equilibria = || -> Vec<Obstacle> {
        let eq = report.equilibria_g_in(spec, tlo, thi);
        equilibrium_obstacles(&table, eq.iter().flat_map(|e| e.samples()))
    };
    let values = match report.case_tag {
        CaseTag::I | CaseTag::III => {
            let obstacles = equilibria();
            if obstacles.is_empty() {
                return Err(Error::Internal(format!("no equilibria of G for case {}", report.case_tag)));
            }
            table.envelope(grid, &obstacles)?
        }
        CaseTag::IIA | CaseTag::IIB => {
            let (ylo, yhi) = spec
                .potential
                .support()
                .ok_or_else(|| Error::Internal("case II without a potential".into()))?;
            let (anchor, reach) = if report.case_tag == CaseTag::IIA { (ylo, Reach::Right) } else { (yhi, Reach::Left) };
            let obstacle = Obstacle { y: anchor, g: u0h.eval_extended(anchor), reach };
            let mut v = table.envelope(grid, &[obstacle])?;
            for (i, x) in grid.nodes().into_iter().enumerate() {
                let outside = match reach {
                    Reach::Right => x < anchor,
                    _ => x > anchor,
                };
                if outside {
                    v[i] = u0h.eval_extended(x);
                }
            }
            if report.mather_constraint_active {
                let extra = table.envelope(grid, &equilibria())?;
                for (a, b) in v.iter_mut().zip(extra) {
                    *a = a.min(b);
                }
            }
            v
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Internal("obstacle envelope is not finite on the grid".into()));
    }
    let profile = CriticalProfile { grid: *grid, values, level: report.c_G, kind: ProfileKind::U0G };
    let (min, max) = profile.min_max();
    let drift_left = profile.eval(grid.x_lo) - profile.eval(grid.x_lo + 1.0);
    let drift_right = profile.eval(grid.x_hi) - profile.eval(grid.x_hi - 1.0);
    let coercivity_c = if report.case_tag == CaseTag::I {
        let xs = grid.nodes();
        let c = (0..40).map(|k| 0.5f64.powi(k)).find(|&c| {
            xs.iter().zip(&profile.values).all(|(&x, &u)| u >= c * x.abs() - 1.0 / c)
        });
        match c {
            Some(c) => Some(c),
            None => return Err(Error::Internal("u0_G is not coercive on the grid".into())),
        }
    } else {
        if drift_left.abs() > 1e-5 || drift_right.abs() > 1e-5 {
            return Err(Error::Internal(format!(
                "u0_G drifts by {drift_left:e} / {drift_right:e} per period; expected a bounded profile"
            )));
        }
        None
    };
    Ok(Envelope { profile, diagnostics: EnvelopeDiagnostics { coercivity_c, min, max, drift_left, drift_right } })
}

#[derive(Clone, Debug)]
pub struct StrictSubsolution {
    pub profile: CriticalProfile,
    /// Compact interval outside which `G(x, v_G') <= c_G - delta`.
    pub k_set: (f64, f64),
    pub delta: f64,
    /// The constant in `min(S_G(0, .), u_H + k)`.
    pub k: f64,
}

/// `v_G = min(S_G(0, .), u_H + k) - shift`, bounded and uniformly strict outside `K` (case I).
pub fn strict_subsolution_vg(spec: &HamiltonianSpec, report: &CaseReport, grid: &Grid1D) -> Result<StrictSubsolution> {
    if report.case_tag != CaseTag::I {
        return Err(Error::Case { expected: "I".into(), found: report.case_tag.to_string() });
    }
    let (ylo, yhi) = spec.potential.support().unwrap_or((0.0, 0.0));
    let table = table_for(spec, Which::G, report.c_G, grid)?;
    let w = table.envelope(grid, &[Obstacle { y: 0.0, g: 0.0, reach: Reach::Both }])?;
    let u_h = periodic_critical_solution(spec, report, grid)?;
    let near = grid.index_range(ylo.min(0.0) - 0.05, yhi.max(0.0) + 0.05);
    let mut k = 1.0 / 64.0;
    while near.clone().any(|i| w[i] >= u_h.values[i] + k) {
        k *= 2.0;
        if k > 1e6 {
            return Err(Error::Internal("no finite k makes v_G agree with S_G(0, .) near supp V".into()));
        }
    }
    let mut values: Vec<f64> = w.iter().zip(&u_h.values).map(|(a, b)| a.min(b + k)).collect();
    let active: Vec<usize> = (0..grid.n).filter(|&i| w[i] <= u_h.values[i] + k).collect();
    let (first, last) = (active[0], *active.last().unwrap());
    if first == 0 || last + 1 == grid.n {
        return Err(Error::Internal("the S_G branch of v_G reaches the grid boundary".into()));
    }
    let shift = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for v in values.iter_mut() {
        *v -= shift;
    }
    let pad = 2.0 * grid.dx();
    Ok(StrictSubsolution {
        profile: CriticalProfile { grid: *grid, values, level: report.c_G, kind: ProfileKind::StrictSubsolutionVG },
        k_set: (grid.x(first) - pad, grid.x(last) + pad),
        delta: report.c_G - report.c_H,
        k,
    })
}
