//! Sublevel brackets `[p^-(x,a), p^+(x,a)]`, free critical values, equilibria,
//! mean momenta, the effective Hamiltonian and the case classification.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianSpec, Which};
use crate::quad::adaptive_simpson;

pub const TOL_LEVEL: f64 = 1e-8;
pub const TOL_MEAN: f64 = 1e-6;
pub const TOL_EQUIL: f64 = 1e-8;

/// Bisection tolerance on the endpoints.
const BRACKET_TOL: f64 = 1e-11;
/// Default scan density for `sup_x min_p G`.
const SCAN_PER_UNIT: usize = 4096;
/// Default Simpson panels per unit length.
pub const PANELS_PER_UNIT: usize = 4096;
/// Levels this far below `min_p G` still count as touching the minimum; free critical
/// values come from a finite scan and carry errors of this order.
const EMPTY_SLACK: f64 = 1e-9;
/// A panel whose bracket is narrower than this is integrated adaptively.
const DEGENERATE_WIDTH: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SublevelBracket {
    pub x: f64,
    pub a: f64,
    pub p_minus: f64,
    pub p_plus: f64,
}

impl SublevelBracket {
    pub fn width(&self) -> f64 {
        self.p_plus - self.p_minus
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.p_minus + self.p_plus)
    }
}

/// `{p : G(x, p) <= a}` for `which = G` (or `H`).
pub fn sublevel_bracket(spec: &HamiltonianSpec, which: Which, x: f64, a: f64) -> Result<SublevelBracket> {
    let fiber = spec.fiber(x, which);
    let bound = spec.p_search_bound;
    let (p_star, min_value) = fiber.argmin(bound);
    if a < min_value - EMPTY_SLACK {
        return Err(Error::EmptySublevel { x, level: a, min_value });
    }
    if a <= min_value {
        return Ok(SublevelBracket { x, a, p_minus: p_star, p_plus: p_star });
    }
    if fiber.eval(-bound) <= a || fiber.eval(bound) <= a {
        return Err(Error::Coercivity { x, bound });
    }
    let crossing = |mut inside: f64, mut outside: f64| {
        while (outside - inside).abs() > BRACKET_TOL {
            let mid = 0.5 * (inside + outside);
            if fiber.eval(mid) <= a {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    let p_minus = crossing(p_star, -bound);
    let p_plus = crossing(p_star, bound);
    Ok(SublevelBracket { x, a, p_minus, p_plus })
}

/// Support function of the sublevel in direction `q`.
pub fn support_sigma(bracket: &SublevelBracket, q: f64) -> f64 {
    if q >= 0.0 {
        q * bracket.p_plus
    } else {
        q * bracket.p_minus
    }
}

/// `min_p G(x, p)`.
pub fn min_value(spec: &HamiltonianSpec, which: Which, x: f64) -> f64 {
    spec.fiber(x, which).argmin(spec.p_search_bound).1
}

/// A connected component of equilibria, `[lo, hi]` with midpoint `x`.
/// Periodic components stand for all integer translates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Equilibrium {
    pub x: f64,
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Equilibrium {
    fn shifted(&self, k: f64) -> Self {
        Self { x: self.x + k, lo: self.lo + k, hi: self.hi + k, periodic: false }
    }

    /// Representative points of the component: the endpoints and the midpoint.
    pub fn samples(&self) -> Vec<f64> {
        if self.hi - self.lo < 1e-12 {
            vec![self.x]
        } else {
            vec![self.lo, self.x, self.hi]
        }
    }
}

/// Scans `m(x) = min_p G(x, .)` on `[lo, hi]` and returns `(sup m, components where m >= sup - tol)`.
fn scan_sup_min(spec: &HamiltonianSpec, which: Which, lo: f64, hi: f64, per_unit: usize) -> (f64, Vec<(f64, f64)>) {
    let n = (((hi - lo) * per_unit as f64).ceil() as usize).max(256);
    let step = (hi - lo) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
    let ms: Vec<f64> = xs.iter().map(|&x| min_value(spec, which, x)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 0..=n {
        best = best.max(ms[i]);
        if i == 0 || i == n {
            continue;
        }
        if ms[i] >= ms[i - 1] && ms[i] >= ms[i + 1] {
            let denom = ms[i - 1] - 2.0 * ms[i] + ms[i + 1];
            if denom < 0.0 {
                let shift = 0.5 * (ms[i - 1] - ms[i + 1]) / denom;
                let xr = xs[i] + shift.clamp(-1.0, 1.0) * step;
                let mr = min_value(spec, which, xr);
                if mr > ms[i] {
                    peaks.push((xr, mr));
                    best = best.max(mr);
                }
            }
        }
    }
    let mut hits: Vec<f64> = xs
        .iter()
        .zip(&ms)
        .filter(|(_, &m)| m >= best - TOL_EQUIL)
        .map(|(&x, _)| x)
        .collect();
    hits.extend(peaks.iter().filter(|(_, m)| *m >= best - TOL_EQUIL).map(|(x, _)| *x));
    hits.sort_by(f64::total_cmp);
    let mut comps: Vec<(f64, f64)> = Vec::new();
    for x in hits {
        match comps.last_mut() {
            Some(c) if x - c.1 <= 1.5 * step => c.1 = x,
            _ => comps.push((x, x)),
        }
    }
    (best, comps)
}

fn periodic_components(spec: &HamiltonianSpec, which: Which) -> (f64, Vec<Equilibrium>) {
    let (c_f, mut comps) = scan_sup_min(spec, which, 0.0, 1.0, SCAN_PER_UNIT);
    let step = 1.0 / SCAN_PER_UNIT as f64;
    // glue a component that wraps around x = 0 = 1, and drop the duplicated node at 1
    if comps.len() >= 2 {
        let first = comps[0];
        let last = *comps.last().unwrap();
        if first.0 <= 1.5 * step && last.1 >= 1.0 - 1.5 * step {
            comps.pop();
            comps[0] = (last.0 - 1.0, first.1);
        }
    }
    let eq = comps
        .into_iter()
        .map(|(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let mut base = mid.rem_euclid(1.0);
            if base >= 1.0 - 1e-12 {
                base = 0.0;
            }
            let k = base - mid;
            Equilibrium { x: base, lo: lo + k, hi: hi + k, periodic: true }
        })
        .collect::<Vec<_>>();
    let mut eq = eq;
    eq.sort_by(|a, b| a.x.total_cmp(&b.x));
    eq.dedup_by(|a, b| (a.x - b.x).abs() < 1e-9);
    (c_f, eq)
}

/// `c_f = sup_x min_p G(x, p)` with the equilibria where the supremum is attained.
pub fn free_critical_value(spec: &HamiltonianSpec, which: Which) -> (f64, Vec<Equilibrium>) {
    let (c_f_h, eq_h) = periodic_components(spec, Which::H);
    let support = match (which, spec.potential.support()) {
        (Which::H, _) | (_, None) => return (c_f_h, eq_h),
        (Which::G, Some(s)) => s,
    };
    let (local_sup, local) = scan_sup_min(spec, Which::G, support.0, support.1, SCAN_PER_UNIT);
    if local_sup > c_f_h + TOL_EQUIL {
        let eq = local
            .into_iter()
            .map(|(lo, hi)| Equilibrium { x: 0.5 * (lo + hi), lo, hi, periodic: false })
            .collect();
        return (local_sup, eq);
    }
    let c_f = c_f_h.max(local_sup);
    let mut eq = eq_h.clone();
    if local_sup >= c_f - TOL_EQUIL {
        for (lo, hi) in local {
            let mid = 0.5 * (lo + hi);
            let duplicate = eq_h.iter().any(|e| {
                let k = (mid - e.x).round();
                mid >= e.lo + k - 1e-6 && mid <= e.hi + k + 1e-6
            });
            if !duplicate {
                eq.push(Equilibrium { x: mid, lo, hi, periodic: false });
            }
        }
    }
    (c_f, eq)
}

/// Concrete components inside `[lo, hi]`: periodic entries are translated, and translates
/// that are no longer equilibria of `which` (because of `V`) are dropped.
pub fn expand_equilibria(
    spec: &HamiltonianSpec,
    which: Which,
    c_f: f64,
    equilibria: &[Equilibrium],
    lo: f64,
    hi: f64,
) -> Vec<Equilibrium> {
    let mut out = Vec::new();
    for e in equilibria {
        if !e.periodic {
            if e.hi >= lo && e.lo <= hi {
                out.push(*e);
            }
            continue;
        }
        let k_lo = (lo - e.hi).floor() as i64;
        let k_hi = (hi - e.lo).ceil() as i64;
        for k in k_lo..=k_hi {
            let c = e.shifted(k as f64);
            if c.hi < lo || c.lo > hi {
                continue;
            }
            if which == Which::G && min_value(spec, Which::G, c.x) < c_f - 1e-7 {
                continue;
            }
            out.push(c);
        }
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x));
    out
}

/// Integral of `p^+` (`upper = true`) or `p^-` at level `a` over `[lo, hi]`, composite Simpson
/// with `panels_per_unit` panels per unit and adaptive refinement on near-degenerate panels.
pub fn integrate_side(
    spec: &HamiltonianSpec,
    which: Which,
    a: f64,
    lo: f64,
    hi: f64,
    upper: bool,
    panels_per_unit: usize,
) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let (s, lo, hi) = if lo < hi { (1.0, lo, hi) } else { (-1.0, hi, lo) };
    let n = (((hi - lo) * panels_per_unit as f64).ceil() as usize).max(2);
    let h = (hi - lo) / n as f64;
    let mut left = sublevel_bracket(spec, which, lo, a)?;
    let mut total = 0.0;
    for i in 0..n {
        let x0 = lo + h * i as f64;
        let x1 = if i + 1 == n { hi } else { lo + h * (i + 1) as f64 };
        let mid = sublevel_bracket(spec, which, 0.5 * (x0 + x1), a)?;
        let right = sublevel_bracket(spec, which, x1, a)?;
        total += panel(spec, which, a, x0, x1, &left, &mid, &right, upper)?;
        left = right;
    }
    Ok(s * total)
}

/// One Simpson panel; switches to adaptive quadrature when the bracket degenerates.
#[allow(clippy::too_many_arguments)]
pub(crate) fn panel(
    spec: &HamiltonianSpec,
    which: Which,
    a: f64,
    x0: f64,
    x1: f64,
    left: &SublevelBracket,
    mid: &SublevelBracket,
    right: &SublevelBracket,
    upper: bool,
) -> Result<f64> {
    let pick = |b: &SublevelBracket| if upper { b.p_plus } else { b.p_minus };
    let degenerate = left.width().min(mid.width()).min(right.width()) < DEGENERATE_WIDTH;
    if !degenerate {
        return Ok((x1 - x0) / 6.0 * (pick(left) + 4.0 * pick(mid) + pick(right)));
    }
    let failure = std::cell::Cell::new(None);
    let f = |x: f64| match sublevel_bracket(spec, which, x, a) {
        Ok(b) => pick(&b),
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    };
    let v = adaptive_simpson(&f, x0, x1, 1e-14, 24);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `I^-(a) = int_0^1 p^-_H(x, a) dx` and `I^+(a) = int_0^1 p^+_H(x, a) dx`.
pub fn mean_momenta(spec: &HamiltonianSpec, a: f64) -> Result<(f64, f64)> {
    mean_momenta_with(spec, a, PANELS_PER_UNIT)
}

/// `(I^-(a), I^+(a))`, the means of `p^-` and `p^+` over one period.
pub fn mean_momenta_with(spec: &HamiltonianSpec, a: f64, panels: usize) -> Result<(f64, f64)> {
    let n = panels.max(2);
    let h = 1.0 / n as f64;
    let mut left = sublevel_bracket(spec, Which::H, 0.0, a)?;
    let (mut lo_sum, mut hi_sum) = (0.0, 0.0);
    for i in 0..n {
        let x0 = h * i as f64;
        let x1 = h * (i + 1) as f64;
        let mid = sublevel_bracket(spec, Which::H, 0.5 * (x0 + x1), a)?;
        let right = sublevel_bracket(spec, Which::H, x1, a)?;
        lo_sum += panel(spec, Which::H, a, x0, x1, &left, &mid, &right, false)?;
        hi_sum += panel(spec, Which::H, a, x0, x1, &left, &mid, &right, true)?;
        left = right;
    }
    Ok((lo_sum, hi_sum))
}

/// Largest level whose sublevels all stay inside the momentum ball.
fn level_cap(spec: &HamiltonianSpec) -> f64 {
    let pm = spec.p_search_bound;
    (0..1024)
        .map(|i| {
            let x = i as f64 / 1024.0;
            spec.h(x, pm).min(spec.h(x, -pm))
        })
        .fold(f64::INFINITY, f64::min)
}

/// `H_bar(theta) = inf { a >= c_f(H) : I^-(a) <= theta <= I^+(a) }`.
pub fn effective_hamiltonian(spec: &HamiltonianSpec, theta: f64) -> Result<f64> {
    let (c_f, _) = free_critical_value(spec, Which::H);
    effective_hamiltonian_from(spec, theta, c_f, PANELS_PER_UNIT)
}

pub(crate) fn effective_hamiltonian_from(spec: &HamiltonianSpec, theta: f64, c_f: f64, panels: usize) -> Result<f64> {
    let contains = |a: f64| -> Result<bool> {
        let (lo, hi) = mean_momenta_with(spec, a, panels)?;
        Ok(lo <= theta && theta <= hi)
    };
    if contains(c_f)? {
        return Ok(c_f);
    }
    let cap = (level_cap(spec) - 1e-9).min(c_f + 1e6);
    let mut lo = c_f;
    let mut step = 0.5;
    let mut hi = (c_f + step).min(cap);
    loop {
        if contains(hi)? {
            break;
        }
        if hi >= cap {
            return Err(Error::UnboundedSearch { theta, cap });
        }
        lo = hi;
        step *= 2.0;
        hi = (c_f + step).min(cap);
    }
    while hi - lo > TOL_LEVEL {
        let mid = 0.5 * (lo + hi);
        if contains(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    I,
    #[serde(rename = "II_A")]
    IIA,
    #[serde(rename = "II_B")]
    IIB,
    III,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::I => "I",
            CaseTag::IIA => "II_A",
            CaseTag::IIB => "II_B",
            CaseTag::III => "III",
        }
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub c_f_H: f64,
    pub c_H: f64,
    pub c_f_G: f64,
    pub c_G: f64,
    pub case_tag: CaseTag,
    pub equilibria_H: Vec<f64>,
    pub equilibria_G: Vec<f64>,
    pub P_H_plus: f64,
    pub P_H_minus: f64,
    pub rho: f64,
    pub mather_constraint_active: bool,
    #[serde(skip)]
    pub components_H: Vec<Equilibrium>,
    #[serde(skip)]
    pub components_G: Vec<Equilibrium>,
}

impl CaseReport {
    /// Concrete equilibria of `G` inside `[lo, hi]`.
    pub fn equilibria_g_in(&self, spec: &HamiltonianSpec, lo: f64, hi: f64) -> Vec<Equilibrium> {
        expand_equilibria(spec, Which::G, self.c_f_G, &self.components_G, lo, hi)
    }

    pub fn equilibria_h_in(&self, spec: &HamiltonianSpec, lo: f64, hi: f64) -> Vec<Equilibrium> {
        expand_equilibria(spec, Which::H, self.c_f_H, &self.components_H, lo, hi)
    }
}

/// `min_x (p^+_H - p^-_H)` at level `a` over one period.
pub fn bracket_width_min(spec: &HamiltonianSpec, a: f64) -> Result<f64> {
    let mut rho = f64::INFINITY;
    for i in 0..SCAN_PER_UNIT {
        let x = i as f64 / SCAN_PER_UNIT as f64;
        rho = rho.min(sublevel_bracket(spec, Which::H, x, a)?.width());
    }
    Ok(rho)
}

/// Critical constants and the case of the trichotomy.
pub fn classify(spec: &HamiltonianSpec) -> Result<CaseReport> {
    let (c_f_h, comps_h) = free_critical_value(spec, Which::H);
    let (c_f_g, comps_g) = free_critical_value(spec, Which::G);
    let c_h = effective_hamiltonian_from(spec, 0.0, c_f_h, PANELS_PER_UNIT)?;
    let c_g = c_h.max(c_f_g);
    let (p_minus, p_plus) = mean_momenta(spec, c_h)?;
    let rho = bracket_width_min(spec, c_h)?;
    let case_tag = if c_g > c_h + TOL_LEVEL {
        CaseTag::I
    } else if (c_h - c_f_h).abs() <= TOL_LEVEL {
        CaseTag::III
    } else {
        let a = p_plus.abs() <= TOL_MEAN;
        let b = p_minus.abs() <= TOL_MEAN;
        match (a, b) {
            (true, false) => CaseTag::IIA,
            (false, true) => CaseTag::IIB,
            _ => {
                return Err(Error::Classification {
                    c_f_h,
                    c_h,
                    c_f_g,
                    c_g,
                    p_plus,
                    p_minus,
                })
            }
        }
    };
    let points = |c: &[Equilibrium]| {
        let mut v: Vec<f64> = c.iter().map(|e| e.x).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    Ok(CaseReport {
        c_f_H: c_f_h,
        c_H: c_h,
        c_f_G: c_f_g,
        c_G: c_g,
        case_tag,
        equilibria_H: points(&comps_h),
        equilibria_G: points(&comps_g),
        P_H_plus: p_plus,
        P_H_minus: p_minus,
        rho,
        mather_constraint_active: (c_g - c_f_g).abs() <= TOL_LEVEL,
        components_H: comps_h,
        components_G: comps_g,
    })
}
