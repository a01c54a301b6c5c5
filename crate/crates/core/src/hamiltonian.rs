//! Hamiltonian families, compactly supported potentials and pointwise evaluation
//! of `H`, `G = H - V`, `V` and the Fenchel-conjugate Lagrangian.
//!
//! Every search in momentum is confined to `[-P_max, P_max]` and every velocity to
//! `[-Q_max, Q_max]`; the Hamiltonian itself is never modified outside those balls.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel for `L = +inf`. Consumers treat anything `>= L_INF / 2` as inadmissible.
pub const L_INF: f64 = 1e9;

const GOLDEN_TOL: f64 = 1e-12;
const GOLDEN_MAX_ITER: usize = 200;

/// `U(x) = constant + sum_k cos[k] cos(2 pi (k+1) x) + sin[k] sin(2 pi (k+1) x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicFunction {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl PeriodicFunction {
    pub fn cosine() -> Self {
        Self { constant: 0.0, cos: vec![1.0], sin: vec![] }
    }

    /// `cos(2 pi (x - shift))`.
    pub fn shifted_cosine(shift: f64) -> Self {
        let phase = 2.0 * PI * shift;
        Self { constant: 0.0, cos: vec![phase.cos()], sin: vec![phase.sin()] }
    }

    pub fn zero() -> Self {
        Self { constant: 0.0, cos: vec![], sin: vec![] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.constant;
        for (k, a) in self.cos.iter().enumerate() {
            acc += a * (2.0 * PI * (k + 1) as f64 * x).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            acc += b * (2.0 * PI * (k + 1) as f64 * x).sin();
        }
        acc
    }

    /// Mean over one period.
    pub fn mean(&self) -> f64 {
        self.constant
    }
}

/// A user-supplied Hamiltonian `H(x, p)`, declared 1-periodic in `x` and convex in `p`.
#[derive(Clone)]
pub struct CustomHamiltonian {
    pub name: String,
    pub eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomHamiltonian").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug)]
pub enum Family {
    /// `|theta + p| - U(x)`.
    ShiftedEikonal { theta: f64, u: PeriodicFunction },
    /// `p^2 / 2 - U(x)`.
    Quadratic { u: PeriodicFunction },
    /// `(p - p1)(p - p2) + eps(x) |p - p1|`, with `p1 = -cos 2 pi x`.
    AppendixExample { eps1: f64 },
    Custom(CustomHamiltonian),
}

impl Family {
    pub fn theta(&self) -> f64 {
        match self {
            Family::ShiftedEikonal { theta, .. } => *theta,
            _ => 0.0,
        }
    }
}

#[derive(Clone)]
pub enum PotentialKind {
    Zero,
    /// `amplitude * cos^2(pi (x - center) / (2 half_width))` on `|x - center| <= half_width`.
    Bump { center: f64, half_width: f64, amplitude: f64 },
    Custom { eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>, support: (f64, f64) },
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::Zero => write!(f, "Zero"),
            PotentialKind::Bump { center, half_width, amplitude } => f
                .debug_struct("Bump")
                .field("center", center)
                .field("half_width", half_width)
                .field("amplitude", amplitude)
                .finish(),
            PotentialKind::Custom { support, .. } => {
                f.debug_struct("Custom").field("support", support).finish()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignHint {
    Nonneg,
    Nonpos,
    Mixed,
}

#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self { kind: PotentialKind::Zero }
    }

    pub fn bump(center: f64, half_width: f64, amplitude: f64) -> Self {
        Self { kind: PotentialKind::Bump { center, half_width, amplitude } }
    }

    pub fn custom<F>(support: (f64, f64), f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { kind: PotentialKind::Custom { eval: Arc::new(f), support } }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
    }

    /// `[y_V^-, y_V^+]`, or `None` for `V = 0`.
    pub fn support(&self) -> Option<(f64, f64)> {
        match &self.kind {
            PotentialKind::Zero => None,
            PotentialKind::Bump { center, half_width, .. } => {
                Some((center - half_width, center + half_width))
            }
            PotentialKind::Custom { support, .. } => Some(*support),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Bump { center, half_width, amplitude } => {
                let t = (x - center) / half_width;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    let c = (0.5 * PI * t).cos();
                    amplitude * c * c
                }
            }
            PotentialKind::Custom { eval, support } => {
                if x < support.0 || x > support.1 {
                    0.0
                } else {
                    eval(x)
                }
            }
        }
    }

    pub fn sign_hint(&self) -> SignHint {
        match &self.kind {
            PotentialKind::Zero => SignHint::Nonneg,
            PotentialKind::Bump { amplitude, .. } => {
                if *amplitude >= 0.0 {
                    SignHint::Nonneg
                } else {
                    SignHint::Nonpos
                }
            }
            PotentialKind::Custom { support, .. } => {
                let (lo, hi) = *support;
                let (mut pos, mut neg) = (false, false);
                for i in 0..=1000 {
                    let v = self.eval(lo + (hi - lo) * i as f64 / 1000.0);
                    pos |= v > 0.0;
                    neg |= v < 0.0;
                }
                match (pos, neg) {
                    (true, true) => SignHint::Mixed,
                    (false, true) => SignHint::Nonpos,
                    _ => SignHint::Nonneg,
                }
            }
        }
    }

    /// `int V` by composite Simpson on the support.
    pub fn integral(&self) -> f64 {
        match self.support() {
            None => 0.0,
            Some((lo, hi)) => crate::quad::simpson(|x| self.eval(x), lo, hi, 4096),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    H,
    G,
}

/// Quantity selector for [`eval`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    H,
    G,
    V,
}

/// A Hamiltonian `G(x, p) = H(x, p) - V(x)` with its search bounds.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub family: Family,
    pub potential: PotentialSpec,
    /// Momentum radius `P_max`.
    pub p_search_bound: f64,
    /// Velocity radius `Q_max`.
    pub q_velocity_bound: f64,
}

impl HamiltonianSpec {
    /// Default bounds `P_max = 8 + |theta|`, `Q_max = 4`.
    pub fn new(family: Family, potential: PotentialSpec) -> Self {
        let p_search_bound = 8.0 + family.theta().abs();
        Self { family, potential, p_search_bound, q_velocity_bound: 4.0 }
    }

    pub fn eikonal(theta: f64, u: PeriodicFunction, potential: PotentialSpec) -> Self {
        Self::new(Family::ShiftedEikonal { theta, u }, potential)
    }

    pub fn quadratic(u: PeriodicFunction, potential: PotentialSpec) -> Self {
        Self::new(Family::Quadratic { u }, potential)
    }

    pub fn appendix(eps1: f64) -> Self {
        Self::new(Family::AppendixExample { eps1 }, PotentialSpec::zero())
    }

    pub fn with_bounds(mut self, p_search_bound: f64, q_velocity_bound: f64) -> Self {
        self.p_search_bound = p_search_bound;
        self.q_velocity_bound = q_velocity_bound;
        self
    }

    /// Same base Hamiltonian with `V = 0`.
    pub fn base(&self) -> Self {
        Self { potential: PotentialSpec::zero(), ..self.clone() }
    }

    /// Superlinear, strictly convex and smooth in `p`.
    pub fn is_tonelli(&self) -> bool {
        matches!(self.family, Family::Quadratic { .. })
    }

    pub(crate) fn fiber(&self, x: f64, which: Which) -> Fiber<'_> {
        let v = match which {
            Which::H => 0.0,
            Which::G => self.potential.eval(x),
        };
        match &self.family {
            Family::ShiftedEikonal { theta, u } => {
                Fiber { core: Core::Eikonal { theta: *theta }, offset: u.eval(x) + v }
            }
            Family::Quadratic { u } => Fiber { core: Core::Quadratic, offset: u.eval(x) + v },
            Family::AppendixExample { eps1 } => Fiber {
                core: Core::Appendix {
                    p1: appendix_p1(x),
                    p2: appendix_p2(x, *eps1),
                    eps: appendix_eps(x),
                },
                offset: v,
            },
            Family::Custom(c) => Fiber { core: Core::Custom { f: c.eval.as_ref(), x }, offset: v },
        }
    }

    pub fn h(&self, x: f64, p: f64) -> f64 {
        self.fiber(x, Which::H).eval(p)
    }

    pub fn g(&self, x: f64, p: f64) -> f64 {
        self.fiber(x, Which::G).eval(p)
    }

    pub fn v(&self, x: f64) -> f64 {
        self.potential.eval(x)
    }

    pub fn value(&self, which: Which, x: f64, p: f64) -> f64 {
        self.fiber(x, which).eval(p)
    }

    /// Sampled checks of periodicity, convexity in `p` and locality of `V`.
    pub fn validate(&self) -> Result<()> {
        let pm = self.p_search_bound;
        for i in 0..64 {
            let x = -2.0 + 4.0 * (i as f64 + 0.37) / 64.0;
            for j in 0..16 {
                let p = -pm + 2.0 * pm * (j as f64 + 0.5) / 16.0;
                let h0 = self.h(x, p);
                let h1 = self.h(x + 1.0, p);
                if !h0.is_finite() {
                    return Err(Error::Evaluation { x, p });
                }
                if (h1 - h0).abs() > 1e-12 * (1.0 + h0.abs()) {
                    return Err(Error::Domain(format!(
                        "H is not 1-periodic at x={x}, p={p}: {h0} vs {h1}"
                    )));
                }
                let (p1, p3) = (p - 0.3, p + 0.3);
                let mid = self.h(x, 0.5 * (p1 + p3));
                if mid > 0.5 * (self.h(x, p1) + self.h(x, p3)) + 1e-10 {
                    return Err(Error::Domain(format!("H(x, .) is not convex near x={x}, p={p}")));
                }
            }
        }
        if let Some((lo, hi)) = self.potential.support() {
            if !(lo <= hi) {
                return Err(Error::Domain(format!("empty potential support [{lo}, {hi}]")));
            }
            for i in 0..200 {
                let t = i as f64 / 199.0;
                for x in [lo - 3.0 * t - 1e-9, hi + 3.0 * t + 1e-9] {
                    if self.v(x).abs() > 1e-12 {
                        return Err(Error::Domain(format!("V({x}) != 0 outside its support")));
                    }
                }
                let x = lo + (hi - lo) * t;
                if !self.v(x).is_finite() {
                    return Err(Error::Evaluation { x, p: 0.0 });
                }
            }
        }
        Ok(())
    }

    /// `min_x G(x, +-P_max) > level` on a sample of points.
    pub fn check_coercive(&self, level: f64) -> Result<()> {
        let pm = self.p_search_bound;
        let mut xs: Vec<f64> = (0..256).map(|i| i as f64 / 256.0).collect();
        if let Some((lo, hi)) = self.potential.support() {
            xs.extend((0..=256).map(|i| lo + (hi - lo) * i as f64 / 256.0));
        }
        for x in xs {
            for p in [-pm, pm] {
                if self.g(x, p) <= level {
                    return Err(Error::Coercivity { x, bound: pm });
                }
            }
        }
        Ok(())
    }
}

/// Pointwise evaluation of `H`, `G` or `V`.
pub fn eval(spec: &HamiltonianSpec, x: f64, p: f64, which: Quantity) -> Result<f64> {
    if !x.is_finite() || !p.is_finite() {
        return Err(Error::Evaluation { x, p });
    }
    let v = match which {
        Quantity::H => spec.h(x, p),
        Quantity::G => spec.g(x, p),
        Quantity::V => spec.v(x),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { x, p })
    }
}

/// Minimizer of `p -> H(x, p)` or `G(x, p)` on `[-P_max, P_max]`.
pub fn argmin_p(spec: &HamiltonianSpec, x: f64, which: Which) -> Result<(f64, f64)> {
    let (p, v) = spec.fiber(x, which).argmin(spec.p_search_bound);
    if spec.p_search_bound - p.abs() < 1e-6 {
        return Err(Error::Coercivity { x, bound: spec.p_search_bound });
    }
    if !v.is_finite() {
        return Err(Error::Evaluation { x, p });
    }
    Ok((p, v))
}

/// The Lagrangian `L = G^*` restricted to velocities in `[-Q_max, Q_max]`.
#[derive(Clone, Copy, Debug)]
pub struct LagrangianView<'a> {
    pub source: &'a HamiltonianSpec,
    pub which: Which,
}

impl<'a> LagrangianView<'a> {
    pub fn new(source: &'a HamiltonianSpec, which: Which) -> Self {
        Self { source, which }
    }

    pub fn q_domain(&self) -> (f64, f64) {
        let q = self.source.q_velocity_bound;
        (-q, q)
    }
}

/// `L(x, q) = sup_p (p q - G(x, p))`, or [`L_INF`] when the supremum escapes the momentum ball.
pub fn fenchel_lagrangian(view: &LagrangianView<'_>, x: f64, q: f64) -> Result<f64> {
    let qmax = view.source.q_velocity_bound;
    if q.abs() > qmax * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("velocity {q} outside [-{qmax}, {qmax}]")));
    }
    Ok(view.source.fiber(x, view.which).conjugate(q, view.source.p_search_bound))
}

pub fn appendix_p1(x: f64) -> f64 {
    -(2.0 * PI * x).cos()
}

/// `eps(x)`: affine ramps from `1/100` at the integers to `0` on `[1/100, 99/100]`.
pub fn appendix_eps(x: f64) -> f64 {
    let t = x - x.floor();
    if t < 0.01 {
        0.01 - t
    } else if t > 0.99 {
        t - 0.99
    } else {
        0.0
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// `p2(x)`: `-1` on `[0, 0.52] u [0.99, 1]`, `p1 - eps1` on `[0.53, 0.97]`; on the two
/// joining intervals the gap `p1 - p2` is interpolated monotonically, so `p2 < p1` on `(0, 1)`.
pub fn appendix_p2(x: f64, eps1: f64) -> f64 {
    let t = x - x.floor();
    let p1 = appendix_p1(t);
    if t <= 0.52 || t >= 0.99 {
        -1.0
    } else if t >= 0.53 && t <= 0.97 {
        p1 - eps1
    } else if t < 0.53 {
        let gap_left = appendix_p1(0.52) + 1.0;
        let s = smoothstep((t - 0.52) / 0.01);
        p1 - (gap_left * (1.0 - s) + eps1 * s)
    } else {
        let gap_right = appendix_p1(0.99) + 1.0;
        let s = smoothstep((t - 0.97) / 0.02);
        p1 - (eps1 * (1.0 - s) + gap_right * s)
    }
}

/// `G(x, .)` frozen at one base point.
#[derive(Clone, Copy)]
pub(crate) struct Fiber<'a> {
    core: Core<'a>,
    offset: f64,
}

#[derive(Clone, Copy)]
enum Core<'a> {
    Eikonal { theta: f64 },
    Quadratic,
    Appendix { p1: f64, p2: f64, eps: f64 },
    Custom { f: &'a (dyn Fn(f64, f64) -> f64 + Send + Sync), x: f64 },
}

impl<'a> Fiber<'a> {
    #[inline]
    pub(crate) fn eval(&self, p: f64) -> f64 {
        let core = match self.core {
            Core::Eikonal { theta } => (theta + p).abs(),
            Core::Quadratic => 0.5 * p * p,
            Core::Appendix { p1, p2, eps } => (p - p1) * (p - p2) + eps * (p - p1).abs(),
            Core::Custom { f, x } => f(x, p),
        };
        core - self.offset
    }

    pub(crate) fn argmin(&self, bound: f64) -> (f64, f64) {
        golden_min(|p| self.eval(p), -bound, bound)
    }

    /// `sup_{|p| <= bound} (p q - G(p))`, [`L_INF`] if the maximizer is pushed onto the bound.
    pub(crate) fn conjugate(&self, q: f64, bound: f64) -> f64 {
        let (p, neg) = golden_min(|p| self.eval(p) - p * q, -bound, bound);
        let value = -neg;
        let step = 1e-4 * bound;
        let edge = bound - p.abs() < 1e-6 * bound;
        if edge {
            let s = p.signum();
            let at_edge = s * bound * q - self.eval(s * bound);
            let inside = (s * bound - s * step) * q - self.eval(s * bound - s * step);
            if at_edge - inside > 1e-9 * step * (1.0 + q.abs()) {
                return L_INF;
            }
        }
        value
    }
}

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_MAX_ITER {
        if (b - a).abs() <= GOLDEN_TOL {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // the endpoints are candidates too: a minimum on the boundary must be reported there
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [a, b] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}
