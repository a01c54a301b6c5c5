//! Optimal backward curves of discounted solutions, their discounted occupation measures,
//! the splitting at a radius and the measure inequalities built on them.

use std::io::Write;

use serde::Serialize;

use crate::discounted::{DiscountedSolution, Exit};
use crate::error::{Error, Result};
use crate::hamiltonian::L_INF;
use crate::weakkam::CriticalProfile;

/// Default horizon cut: stop once `exp(-lambda t) < TOL_MASS`.
pub const TOL_MASS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub y: f64,
    pub q: f64,
    /// `L(y, q)` used by the feedback.
    pub l: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub x0: f64,
    pub lambda: f64,
    pub h: f64,
    pub level: f64,
    /// Walked samples `k = 0..samples.len()`.
    pub samples: Vec<Sample>,
    /// Total number of steps up to the horizon cut.
    pub steps: usize,
    /// When set, the curve rests at the last sample for all remaining steps.
    pub stationary: bool,
    /// The walk left the region where the solution is defined.
    pub truncated: bool,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.h
    }

    /// Sample `k` including the stationary tail.
    pub fn sample(&self, k: usize) -> Sample {
        if k < self.samples.len() {
            self.samples[k]
        } else {
            let last = *self.samples.last().expect("nonempty trajectory");
            Sample { t: -(k as f64) * self.h, q: 0.0, ..last }
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.q.abs()))
    }

    /// Largest move against the overall direction of travel.
    pub fn max_backtrack(&self) -> f64 {
        let first = self.samples[0].y;
        let last = self.samples.last().unwrap().y;
        let sign = if last < first { -1.0 } else { 1.0 };
        let mut extreme = sign * first;
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            let z = sign * s.y;
            extreme = extreme.max(z);
            worst = worst.max(extreme - z);
        }
        worst
    }

    /// `sum_k h exp(-lambda k h) (L(y_k, q_k) + c)`, the discrete representation formula.
    pub fn discounted_cost(&self) -> f64 {
        let beta = (-self.lambda * self.h).exp();
        let mut w = self.h;
        let mut total = 0.0;
        for s in &self.samples {
            total += w * (s.l + self.level);
            w *= beta;
        }
        if self.stationary && self.steps > self.samples.len() {
            let last = self.samples.last().unwrap();
            let k0 = self.samples.len() as f64;
            let tail = self.h * (beta.powf(k0) - beta.powf(self.steps as f64)) / (1.0 - beta);
            total += tail * (last.l + self.level);
        }
        total
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,y,q")?;
        for s in &self.samples {
            writeln!(w, "{},{},{}", s.t, s.y, s.q)?;
        }
        Ok(())
    }
}

struct Feedback<'a> {
    sol: &'a DiscountedSolution,
}

impl Feedback<'_> {
    /// `L(y, q_j)` and the exit restriction outside the grid.
    fn lagrangian(&self, y: f64, j: usize) -> Option<f64> {
        let sol = self.sol;
        let table = sol.table.as_ref()?;
        let q = table.qs[j];
        let l = if y < sol.grid.x_lo || y > sol.grid.x_hi {
            let far = if y < sol.grid.x_lo { sol.far_left.as_ref()? } else { sol.far_right.as_ref()? };
            let allowed = match far.exit {
                Exit::Left => q >= 0.0,
                Exit::Right => q <= 0.0,
            };
            if !allowed {
                return None;
            }
            far.table.at(y.rem_euclid(1.0), j)
        } else {
            table.at(y, j)
        };
        (l < 0.5 * L_INF).then_some(l)
    }

    fn cost(&self, y: f64, q: f64, l: f64) -> f64 {
        let sol = self.sol;
        (1.0 - sol.lambda * sol.h) * sol.value_at(y - sol.h * q) + sol.h * (l + sol.level)
    }

    /// Argmin velocity of the dynamic-programming operator at `y`: `(q, L(y, q), stationary)`.
    fn argmin(&self, y: f64) -> Option<(f64, f64, bool)> {
        let sol = self.sol;
        let table = sol.table.as_ref()?;
        let nq = table.qs.len();
        let mut costs = vec![f64::INFINITY; nq];
        let mut ls = vec![f64::NAN; nq];
        let mut best = nq;
        for j in 0..nq {
            if let Some(l) = self.lagrangian(y, j) {
                let foot = y - sol.h * table.qs[j];
                if sol.far_left.is_none() && (foot < sol.grid.x_lo || foot > sol.grid.x_hi) {
                    continue;
                }
                costs[j] = self.cost(y, table.qs[j], l);
                ls[j] = l;
                if best == nq || costs[j] < costs[best] {
                    best = j;
                }
            }
        }
        if best == nq {
            return None;
        }
        let zero = nq / 2;
        // a tie with rest is resolved in favor of rest
        if best != zero && costs[zero].is_finite() && costs[zero] <= costs[best] + 1e-15 {
            best = zero;
        }
        let mut q = table.qs[best];
        let mut l = ls[best];
        if sol.refine_q && best > 0 && best + 1 < nq {
            let (a, b, c) = (costs[best - 1], costs[best], costs[best + 1]);
            let denom = a - 2.0 * b + c;
            if a.is_finite() && c.is_finite() && denom > 1e-14 {
                let shift = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
                if shift.abs() > 1e-6 {
                    let qr = q + shift * (table.qs[1] - table.qs[0]);
                    let lr = sol.spec.fiber(y, table.which).conjugate(qr, sol.spec.p_search_bound);
                    let inside = y >= sol.grid.x_lo && y <= sol.grid.x_hi;
                    if inside && lr < 0.5 * L_INF && self.cost(y, qr, lr) < b {
                        q = qr;
                        l = lr;
                    }
                }
            }
        }
        Some((q, l, best == zero && q == 0.0))
    }
}

/// Backward walk `y_{k+1} = y_k - h q*(y_k)` along the feedback of a semi-Lagrangian solution.
pub fn extract_optimal_curve(sol: &DiscountedSolution, x0: f64) -> Result<Trajectory> {
    extract_optimal_curve_with(sol, x0, TOL_MASS)
}

pub fn extract_optimal_curve_with(sol: &DiscountedSolution, x0: f64, tol_mass: f64) -> Result<Trajectory> {
    if sol.table.is_none() {
        return Err(Error::Config("curve extraction needs a semi-Lagrangian solution".into()));
    }
    if x0 <= sol.grid.x_lo || x0 >= sol.grid.x_hi {
        return Err(Error::Domain(format!("x0 = {x0} is not interior to the grid")));
    }
    let steps = ((1.0 / tol_mass).ln() / (sol.lambda * sol.h)).ceil() as usize;
    let fb = Feedback { sol };
    let mut samples = Vec::new();
    let mut y = x0;
    let mut stationary = false;
    let mut truncated = false;
    for k in 0..steps {
        let Some((q, l, rest)) = fb.argmin(y) else {
            truncated = true;
            break;
        };
        samples.push(Sample { t: -(k as f64) * sol.h, y, q, l });
        if rest {
            stationary = true;
            break;
        }
        y -= sol.h * q;
    }
    if samples.is_empty() {
        return Err(Error::Domain(format!("no admissible velocity at x0 = {x0}")));
    }
    Ok(Trajectory { x0, lambda: sol.lambda, h: sol.h, level: sol.level, samples, steps, stationary, truncated })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedAtom {
    pub y: f64,
    pub q: f64,
    pub w: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OccupationMeasure {
    pub atoms: Vec<WeightedAtom>,
    pub total: f64,
    /// Mass before renormalization.
    pub raw_total: f64,
    pub x0: f64,
    pub lambda: f64,
}

impl OccupationMeasure {
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|a| a.w * f(a.y, a.q)).sum()
    }

    /// Projected mass of `{y : pred(y)}`.
    pub fn mass_where<F: Fn(f64) -> bool>(&self, pred: F) -> f64 {
        self.atoms.iter().filter(|a| pred(a.y)).map(|a| a.w).sum()
    }

    fn from_raw(atoms: Vec<WeightedAtom>, x0: f64, lambda: f64) -> Self {
        let raw_total: f64 = atoms.iter().map(|a| a.w).sum();
        let atoms = if raw_total > 0.0 {
            atoms.into_iter().map(|a| WeightedAtom { w: a.w / raw_total, ..a }).collect()
        } else {
            atoms
        };
        let total = atoms.iter().map(|a| a.w).sum();
        Self { atoms, total, raw_total, x0, lambda }
    }
}

/// Unnormalized atoms `(y_k, q_k, lambda h exp(-lambda k h))` for `k` in `range`; a stationary
/// tail is collapsed into one atom.
fn raw_atoms(traj: &Trajectory, range: std::ops::Range<usize>) -> Vec<WeightedAtom> {
    let beta = (-traj.lambda * traj.h).exp();
    let lh = traj.lambda * traj.h;
    let walked = traj.samples.len();
    let mut atoms = Vec::new();
    let end_walked = range.end.min(walked);
    for k in range.start.min(end_walked)..end_walked {
        let s = traj.samples[k];
        atoms.push(WeightedAtom { y: s.y, q: s.q, w: lh * beta.powi(k as i32) });
    }
    if traj.stationary && range.end > walked {
        let k0 = range.start.max(walked) as f64;
        let w = lh * (beta.powf(k0) - beta.powf(range.end as f64)) / (1.0 - beta);
        let last = traj.samples[walked - 1];
        if w > 0.0 {
            atoms.push(WeightedAtom { y: last.y, q: 0.0, w });
        }
    }
    atoms
}

fn last_index(traj: &Trajectory) -> usize {
    if traj.stationary {
        traj.steps
    } else {
        traj.samples.len()
    }
}

/// Discounted occupation measure of the curve, renormalized to a probability.
pub fn occupation_measure(traj: &Trajectory) -> OccupationMeasure {
    OccupationMeasure::from_raw(raw_atoms(traj, 0..last_index(traj)), traj.x0, traj.lambda)
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureSplit {
    pub r: f64,
    /// `None` when the curve stays in `[-r, r]`.
    pub t_exit: Option<f64>,
    pub theta: f64,
    pub mu1: OccupationMeasure,
    /// Conventional `delta_(x0 + r, 0)` when the curve never exits; never read in that case.
    pub mu2: OccupationMeasure,
}

impl MeasureSplit {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "y,q,w,part")?;
        for a in &self.mu1.atoms {
            writeln!(w, "{},{},{},1", a.y, a.q, a.w)?;
        }
        if self.t_exit.is_some() {
            for a in &self.mu2.atoms {
                writeln!(w, "{},{},{},2", a.y, a.q, a.w)?;
            }
        }
        Ok(())
    }
}

/// Splits the occupation measure at the first exit from `[-r, r]`.
pub fn split_at_radius(traj: &Trajectory, r: f64, support: Option<(f64, f64)>) -> Result<MeasureSplit> {
    let x0 = traj.x0;
    let (slo, shi) = support.unwrap_or((x0, x0));
    if x0.abs() > r || slo < -r || shi > r {
        return Err(Error::Domain(format!("[-{r}, {r}] must contain x0 = {x0} and supp V")));
    }
    let end = last_index(traj);
    let exit = traj.samples.iter().position(|s| s.y.abs() > r);
    let (lambda, h) = (traj.lambda, traj.h);
    match exit {
        Some(k) => {
            let t = k as f64 * h;
            Ok(MeasureSplit {
                r,
                t_exit: Some(t),
                theta: 1.0 - (-lambda * t).exp(),
                mu1: OccupationMeasure::from_raw(raw_atoms(traj, 0..k), x0, lambda),
                mu2: OccupationMeasure::from_raw(raw_atoms(traj, k..end), x0, lambda),
            })
        }
        None => Ok(MeasureSplit {
            r,
            t_exit: None,
            theta: 1.0,
            mu1: OccupationMeasure::from_raw(raw_atoms(traj, 0..end), x0, lambda),
            mu2: OccupationMeasure::from_raw(vec![WeightedAtom { y: x0 + r, q: 0.0, w: 1.0 }], x0, lambda),
        }),
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TightnessCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `mu(R \ K) <= (lambda / delta)(u^lambda(x0) - v(x0))`.
pub fn tightness_check(
    sol: &DiscountedSolution,
    x0: f64,
    v: &CriticalProfile,
    k_set: (f64, f64),
    delta: f64,
) -> Result<TightnessCheck> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("tightness needs delta > 0, got {delta}")));
    }
    let traj = extract_optimal_curve(sol, x0)?;
    let mu = occupation_measure(&traj);
    let lhs = mu.mass_where(|y| y < k_set.0 || y > k_set.1);
    let rhs = sol.lambda / delta * (sol.value_at(x0) - v.eval(x0)) + TOL_MASS;
    Ok(TightnessCheck { lhs, rhs, pass: lhs <= rhs })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairingCheck {
    /// `u^lambda(x0) - v(x0) + theta int v dmu1 + (1 - theta) int v dmu2`.
    pub gap: f64,
    pub pass: bool,
}

/// `u^lambda(x0) >= v(x0) - (theta int v dmu1 + (1 - theta) int v dmu2)` with slack `20 dx`.
/// `v2`, when given, replaces `v` on the atoms of `mu2`.
pub fn pairing_test(
    sol: &DiscountedSolution,
    x0: f64,
    v: &CriticalProfile,
    split: &MeasureSplit,
    v2: Option<&CriticalProfile>,
) -> PairingCheck {
    let m1 = split.mu1.integrate(|y, _| v.eval_extended(y));
    let m2 = if split.t_exit.is_some() {
        let w = v2.unwrap_or(v);
        split.mu2.integrate(|y, _| w.eval_extended(y))
    } else {
        0.0
    };
    let gap = sol.value_at(x0) - v.eval(x0) + split.theta * m1 + (1.0 - split.theta) * m2;
    PairingCheck { gap, pass: gap >= -(20.0 * sol.grid.dx() + 10.0 * TOL_MASS) }
}

/// Measure CSV: `y,q,w,part` with every atom in part 1.
pub fn write_measure_csv<W: Write>(mu: &OccupationMeasure, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "y,q,w,part")?;
    for a in &mu.atoms {
        writeln!(w, "{},{},{},1", a.y, a.q, a.w)?;
    }
    Ok(())
}
