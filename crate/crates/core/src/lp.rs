//! Small dense two-phase simplex for `min c^T x` subject to `A x = b`, `x >= 0`.

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    /// Row-major constraint matrix, one `Vec` per equality row.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers `y` of the equality rows; `b^T y` is the dual objective.
    pub dual: Vec<f64>,
    pub dual_objective: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows + 1` rows of `cols + 1` entries; the last row holds reduced costs, the last column the rhs.
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let pv = self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v /= pv;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
                if v.abs() < 1e-14 {
                    *v = 0.0;
                }
            }
            row[pc] = 0.0;
            if r < self.rows && row[self.cols] < 0.0 {
                // primal feasibility is invariant; a negative rhs here is rounding
                row[self.cols] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations over columns `allowed`; returns the iteration count.
    /// Dantzig pricing with the lexicographic ratio test, which cannot cycle; the columns
    /// `allowed..allowed + rows` hold `B^{-1}` because the start basis is the identity.
    fn optimize(&mut self, allowed: usize, max_iter: usize) -> Result<usize> {
        let cost = self.rows;
        for it in 0..max_iter {
            let mut enter = None;
            let mut best = -EPS;
            for c in 0..allowed {
                let r = self.at(cost, c);
                if r < best {
                    enter = Some(c);
                    best = r;
                }
            }
            let Some(pc) = enter else { return Ok(it) };
            let mut ties: Vec<usize> = Vec::new();
            let mut min_ratio = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    if ratio < min_ratio - RATIO_TOL {
                        min_ratio = ratio;
                        ties.clear();
                        ties.push(r);
                    } else if ratio <= min_ratio + RATIO_TOL {
                        ties.push(r);
                    }
                }
            }
            if ties.is_empty() {
                return Err(Error::Internal("linear program is unbounded".into()));
            }
            ties.retain(|&r| self.rhs(r) / self.at(r, pc) <= min_ratio + RATIO_TOL);
            let mut k = 0;
            while ties.len() > 1 && k < self.rows {
                let col = allowed + k;
                let key = |r: usize| self.at(r, col) / self.at(r, pc);
                let m = ties.iter().map(|&r| key(r)).fold(f64::INFINITY, f64::min);
                ties.retain(|&r| key(r) <= m + RATIO_TOL);
                k += 1;
            }
            self.pivot(ties[0], pc);
        }
        Err(Error::Convergence { iterations: max_iter, residual: f64::NAN })
    }
}

/// Solves the standard-form program with artificial variables for phase one.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let m = lp.a.len();
    let n = lp.c.len();
    if lp.b.len() != m || lp.a.iter().any(|r| r.len() != n) {
        return Err(Error::Internal("inconsistent linear program dimensions".into()));
    }
    let cols = n + m;
    let w = cols + 1;
    let mut data = vec![0.0; (m + 1) * w];
    let mut sign = vec![1.0; m];
    for r in 0..m {
        sign[r] = if lp.b[r] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..n {
            data[r * w + c] = sign[r] * lp.a[r][c];
        }
        data[r * w + n + r] = 1.0;
        data[r * w + cols] = sign[r] * lp.b[r];
    }
    // phase one: minimize the sum of artificials
    for c in 0..n {
        data[m * w + c] = -(0..m).map(|r| data[r * w + c]).sum::<f64>();
    }
    data[m * w + cols] = -(0..m).map(|r| data[r * w + cols]).sum::<f64>();
    let mut t = Tableau { rows: m, cols, data, basis: (n..n + m).collect() };
    let max_iter = 50 * (m + n) + 1000;
    let mut iterations = t.optimize(n, max_iter)?;
    if -t.rhs(m) > 1e-7 {
        return Err(Error::Internal(format!("linear program is infeasible (phase one residual {:e})", -t.rhs(m))));
    }
    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(c) = (0..n).find(|&c| t.at(r, c).abs() > 1e-7) {
                t.pivot(r, c);
                iterations += 1;
            }
        }
    }
    // phase two: reduced costs for the true objective, artificials barred from entering
    for c in 0..=cols {
        let cost = if c < n { lp.c[c] } else { 0.0 };
        let mut v = if c == cols { 0.0 } else { cost };
        for r in 0..m {
            let bc = t.basis[r];
            let cb = if bc < n { lp.c[bc] } else { 0.0 };
            v -= cb * t.at(r, c);
        }
        t.data[m * w + c] = v;
    }
    iterations += t.optimize(n, max_iter)?;
    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    let objective: f64 = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
    // reduced cost of artificial r is -y_r (in the sign-adjusted rows)
    let dual: Vec<f64> = (0..m).map(|r| -t.at(m, n + r) * sign[r]).collect();
    let dual_objective = dual.iter().zip(&lp.b).map(|(y, b)| y * b).sum();
    Ok(LpSolution { x, objective, dual, dual_objective, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // min -x0 - 2 x1, x0 + x1 + s0 = 4, x0 + 3 x1 + s1 = 6
        let lp = LinearProgram {
            c: vec![-1.0, -2.0, 0.0, 0.0],
            a: vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]],
            b: vec![4.0, 6.0],
        };
        let s = solve(&lp).unwrap();
        assert!((s.objective + 5.0).abs() < 1e-9);
        assert!((s.x[0] - 3.0).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9);
        assert!((s.dual_objective - s.objective).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // x0 - x1 = -1 twice, x0 + x1 = 3; min x0
        let lp = LinearProgram {
            c: vec![1.0, 0.0],
            a: vec![vec![1.0, -1.0], vec![1.0, -1.0], vec![1.0, 1.0]],
            b: vec![-1.0, -1.0, 3.0],
        };
        let s = solve(&lp).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-9 && (s.x[1] - 2.0).abs() < 1e-9);
        assert!((s.dual_objective - s.objective).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram { c: vec![1.0], a: vec![vec![1.0], vec![2.0]], b: vec![1.0, 1.0] };
        assert!(solve(&lp).is_err());
        let lp = LinearProgram { c: vec![-1.0, 0.0], a: vec![vec![1.0, -1.0]], b: vec![0.0] };
        assert!(solve(&lp).is_err());
    }
}
