//! Acceptance suite. Each test prints one `PASS`/`FAIL` line; run with `--nocapture` to see them.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weakkam1d::discounted::{
    default_lambdas, lambda_sweep, solve_semilagrangian, SolverConfig, SolverContext,
};
use weakkam1d::grid::Grid1D;
use weakkam1d::hamiltonian::{HamiltonianSpec, PeriodicFunction, PotentialSpec};
use weakkam1d::mather::{appendix_counterexample, closed_measure_lp, LpDomain, LpResolution};
use weakkam1d::occupation::{extract_optimal_curve, occupation_measure, tightness_check};
use weakkam1d::runner::{run, write_outputs, RunConfig};
use weakkam1d::scenario::scenario;
use weakkam1d::sublevel::{classify, effective_hamiltonian, CaseTag};
use weakkam1d::weakkam::{strict_subsolution_vg, u0_g_envelope, u0_h, CriticalProfile};

// The criteria are timed, so they run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: u32, name: &str, pass: bool, detail: String) -> bool {
    println!("{} criterion {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

/// `U + V` for the cosine family with the bump `A cos^2(pi t / 2)`, `t = (x - c) / w`.
fn potential_sum(x: f64, bump: Option<(f64, f64, f64)>) -> f64 {
    let mut s = (2.0 * PI * x).cos();
    if let Some((c, w, a)) = bump {
        let t = (x - c) / w;
        if t.abs() < 1.0 {
            s += a * (PI * t / 2.0).cos().powi(2);
        }
    }
    s
}

fn min_on_grid(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    (0..=n).map(|k| f(lo + (hi - lo) * k as f64 / n as f64)).fold(f64::INFINITY, f64::min)
}

fn envelope_for(name: &str, grid: &Grid1D) -> (HamiltonianSpec, weakkam1d::sublevel::CaseReport, CriticalProfile, Option<CriticalProfile>) {
    let sc = scenario(name).unwrap();
    let spec = sc.spec();
    let case = classify(&spec).unwrap();
    let u0h = u0_h(&spec, &case, grid).unwrap().trusted().unwrap().clone();
    let env = u0_g_envelope(&spec, &case, &u0h, grid).unwrap();
    let vg = if case.case_tag == CaseTag::I { Some(strict_subsolution_vg(&spec, &case, grid).unwrap().profile) } else { None };
    (spec, case, env.profile, vg)
}

#[test]
fn c01_critical_constants() {
    let _g = lock();
    let start = Instant::now();
    let sc = scenario("E1").unwrap();
    let case = classify(&sc.spec()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    // one period for H; a window holding supp V and a full unperturbed period for G
    let cf_h = -min_on_grid(0.0, 1.0, 100_000, |x| potential_sum(x, None));
    let cf_g = -min_on_grid(-1.0, 2.0, 100_000, |x| potential_sum(x, sc.bump));
    let c_h: f64 = 1.0; // H-bar(0) = max(1, |theta|) with theta = 0
    let c_g = c_h.max(cf_g);
    let errs = [
        (case.c_f_H - cf_h).abs(),
        (case.c_H - c_h).abs(),
        (case.c_f_G - cf_g).abs(),
        (case.c_G - c_g).abs(),
        (cf_g - 1.5).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let pass = worst <= 1e-6 && secs < 5.0;
    assert!(verdict(
        1,
        "critical constants E1",
        pass,
        format!(
            "c_f(H) = {}, c(H) = {}, c_f(G) = {}, c(G) = {}; max error {worst:.2e}; {secs:.2} s",
            case.c_f_H, case.c_H, case.c_f_G, case.c_G
        )
    ));
}

#[test]
fn c02_effective_hamiltonian() {
    let _g = lock();
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for theta in [0.0, 2.0] {
        let spec = HamiltonianSpec::eikonal(theta, PeriodicFunction::cosine(), PotentialSpec::zero());
        let start = Instant::now();
        for k in 0..20 {
            let vt = -3.0 + 6.0 * k as f64 / 19.0;
            let hbar = effective_hamiltonian(&spec, vt).unwrap();
            worst = worst.max((hbar - 1f64.max((theta + vt).abs())).abs());
        }
        slowest = slowest.max(start.elapsed().as_secs_f64());
    }
    let pass = worst <= 1e-6 && slowest < 10.0;
    assert!(verdict(2, "effective Hamiltonian", pass, format!("max error {worst:.2e} over 2 x 20 values; slowest set {slowest:.2} s")));
}

#[test]
fn c03_classification_matrix() {
    let _g = lock();
    let expected = [("E0", CaseTag::III), ("E1", CaseTag::I), ("E2", CaseTag::IIA), ("E2b", CaseTag::IIB), ("E3", CaseTag::III)];
    let mut got = Vec::new();
    let mut pass = true;
    for (name, tag) in expected {
        let case = classify(&scenario(name).unwrap().spec()).unwrap();
        pass &= case.case_tag == tag;
        got.push(format!("{name}={}", case.case_tag));
    }
    assert!(verdict(3, "classification matrix", pass, got.join(" ")));
}

#[test]
fn c04_closed_form_discounted() {
    let _g = lock();
    let start = Instant::now();
    let spec = HamiltonianSpec::eikonal(2.0, PeriodicFunction::cosine(), PotentialSpec::zero());
    let grid = Grid1D::with_spacing(-8.0, 9.0, 1.0 / 512.0).unwrap();
    let dx = grid.dx();
    let mut errs = Vec::new();
    for lambda in [0.4, 0.1] {
        let sol = solve_semilagrangian(&spec, lambda, 2.0, &grid, &SolverConfig::default()).unwrap();
        let exact = |x: f64| (lambda * (2.0 * PI * x).cos() + 2.0 * PI * (2.0 * PI * x).sin()) / (lambda * lambda + 4.0 * PI * PI);
        let e = (0..grid.n).map(|i| (sol.values[i] - exact(grid.x(i))).abs()).fold(0.0, f64::max);
        errs.push(e);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = errs.iter().all(|&e| e <= 10.0 * dx) && secs < 60.0;
    assert!(verdict(
        4,
        "closed-form discounted solution",
        pass,
        format!("errors {:.3e} (0.4), {:.3e} (0.1) vs {:.3e}; {secs:.1} s", errs[0], errs[1], 10.0 * dx)
    ));
}

#[test]
fn c05_vanishing_discount_convergence() {
    let _g = lock();
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["E1", "E2", "E3"] {
        let sc = scenario(name).unwrap();
        let grid = sc.default_grid();
        let (spec, case, u0g, _) = envelope_for(name, &grid);
        let ctx = SolverContext::new(&spec, &grid, SolverConfig::default());
        let lambdas = default_lambdas();
        assert!((lambdas.last().unwrap() - 0.0125).abs() < 1e-15);
        let table = lambda_sweep(&ctx, &case, &lambdas, sc.default_window(), &u0g, false).unwrap();
        let last = table.rows.last().unwrap().sup_error;
        let ok = last <= 0.02 && table.monotone_decay;
        pass &= ok;
        let errs: Vec<String> = table.rows.iter().map(|r| format!("{:.2e}", r.sup_error)).collect();
        parts.push(format!("{name} {} [{}]", if ok { "ok" } else { "over" }, errs.join(", ")));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 600.0;
    assert!(verdict(5, "vanishing-discount convergence", pass, format!("{}; {secs:.1} s", parts.join("; "))));
}

#[test]
fn c06_comparison_sandwich() {
    let _g = lock();
    let mut worst = f64::INFINITY;
    let mut dx = 0.0;
    for name in ["E0", "E1", "E2", "E2b", "E3"] {
        let sc = scenario(name).unwrap();
        let grid = sc.default_grid();
        dx = grid.dx();
        let (spec, case, u0g, vg) = envelope_for(name, &grid);
        let (lo, hi) = u0g.min_max();
        let w: Vec<f64> = u0g.values.iter().map(|u| u - lo).collect();
        let v: Vec<f64> = match &vg {
            Some(p) => p.values.clone(),
            None => u0g.values.iter().map(|u| u - hi).collect(),
        };
        let ctx = SolverContext::new(&spec, &grid, SolverConfig::default());
        let table = lambda_sweep(&ctx, &case, &default_lambdas(), sc.default_window(), &u0g, true).unwrap();
        for sol in &table.solutions {
            for i in 0..grid.n {
                worst = worst.min(sol.values[i] - v[i]).min(w[i] - sol.values[i]);
            }
        }
    }
    assert!(verdict(6, "comparison sandwich", worst >= -5.0 * dx, format!("min slack {worst:.3e} vs {:.3e}", -5.0 * dx)));
}

#[test]
fn c07_curve_monotonicity() {
    let _g = lock();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["E0", "E1", "E2", "E2b", "E3"] {
        let sc = scenario(name).unwrap();
        let grid = sc.default_grid();
        let spec = sc.spec();
        let case = classify(&spec).unwrap();
        let sol = SolverContext::new(&spec, &grid, SolverConfig::default()).solve(0.2, case.c_G).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut back, mut speed): (f64, f64) = (0.0, 0.0);
        for _ in 0..50 {
            let x0 = rng.gen_range(-2.0..3.0);
            let traj = extract_optimal_curve(&sol, x0).unwrap();
            // independent scan of the samples for a reversal of direction
            let ys: Vec<f64> = traj.samples.iter().map(|s| s.y).collect();
            let net = ys.last().unwrap() - ys[0];
            let mut extreme = ys[0];
            for &y in &ys {
                if net >= 0.0 {
                    extreme = extreme.max(y);
                    back = back.max(extreme - y);
                } else {
                    extreme = extreme.min(y);
                    back = back.max(y - extreme);
                }
            }
            speed = speed.max(traj.max_speed());
        }
        let ok = back <= grid.dx() / 4.0 && speed <= spec.q_velocity_bound + 1e-12;
        pass &= ok;
        parts.push(format!("{name} back {back:.1e} |q| {speed:.3}"));
    }
    assert!(verdict(7, "curve monotonicity and speed", pass, parts.join("; ")));
}

#[test]
fn c08_tightness_case_one() {
    let _g = lock();
    let sc = scenario("E1").unwrap();
    let grid = sc.default_grid();
    let spec = sc.spec();
    let case = classify(&spec).unwrap();
    let vg = strict_subsolution_vg(&spec, &case, &grid).unwrap();
    let ctx = SolverContext::new(&spec, &grid, SolverConfig::default());
    let (klo, khi) = vg.k_set;
    let mut pass = true;
    let mut parts = Vec::new();
    for x0 in [0.5, 2.0] {
        let mut scaled = Vec::new();
        for lambda in [0.4, 0.2, 0.1] {
            let sol = ctx.solve(lambda, case.c_G).unwrap();
            let t = tightness_check(&sol, x0, &vg.profile, vg.k_set, vg.delta).unwrap();
            let mu = occupation_measure(&extract_optimal_curve(&sol, x0).unwrap());
            let outside = mu.mass_where(|y| y < klo || y > khi);
            pass &= t.pass && (outside - t.lhs).abs() <= 1e-9;
            scaled.push(outside / lambda + 0.0);
        }
        // mass / lambda may not grow as lambda shrinks
        let linear = scaled.windows(2).all(|w| w[1] <= 1.5 * w[0] + 1e-5);
        pass &= linear;
        parts.push(format!("x0 = {x0}: mass/lambda {:?}", scaled.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>()));
    }
    assert!(verdict(8, "tightness (case I)", pass, parts.join("; ")));
}

#[test]
fn c09_mather_lp() {
    let _g = lock();
    let res = LpResolution::default();
    let tol = |qmax: f64, period: f64| 1e-3 + 2.0 * qmax / (res.q_nodes - 1) as f64 + period / res.x_cells as f64;
    let e0 = scenario("E0").unwrap().spec();
    let base2 = scenario("E2").unwrap().spec().base();
    let e1 = scenario("E1").unwrap().spec();
    let t0 = closed_measure_lp(&e0, LpDomain::Torus, &res).unwrap().optimal_value;
    let t2 = closed_measure_lp(&base2, LpDomain::Torus, &res).unwrap().optimal_value;
    let (lo, hi) = (0.4 - 1.0, 0.6 + 1.0);
    let w1 = closed_measure_lp(&e1, LpDomain::Window { lo, hi }, &res).unwrap().optimal_value;
    let pass = (t0 + 1.0).abs() <= tol(e0.q_velocity_bound, 1.0)
        && (t2 + 2.0).abs() <= tol(base2.q_velocity_bound, 1.0)
        && (w1 + 1.5).abs() <= tol(e1.q_velocity_bound, hi - lo);
    assert!(verdict(9, "Mather LP", pass, format!("torus E0 {t0:.6}, torus theta=2 {t2:.6}, window E1 {w1:.6}")));
}

/// Largest grid function with `u_{i+1} - u_i <= int p+`, `u_i - u_{i+1} <= int (-p-)` and `u <= 0` on equilibria.
fn brute_force_subsolution(grid: &Grid1D, c: f64, bump: Option<(f64, f64, f64)>) -> Vec<f64> {
    let n = grid.n;
    let cell = |i: usize| {
        let (a, b) = (grid.x(i), grid.x(i + 1));
        let m = 16;
        let h = (b - a) / m as f64;
        let f = |x: f64| c + potential_sum(x, bump);
        let mut s = f(a) + f(b);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
        }
        s * h / 3.0
    };
    // theta = 0, so both sublevel endpoints give the same cell integral
    let cost: Vec<f64> = (0..n - 1).map(cell).collect();
    let floor = (0..n).map(|i| potential_sum(grid.x(i), bump)).fold(f64::INFINITY, f64::min);
    let big = 1e6;
    let mut u: Vec<f64> =
        (0..n).map(|i| if potential_sum(grid.x(i), bump) <= floor + 1e-12 { 0.0 } else { big }).collect();
    loop {
        let mut changed = false;
        for i in 0..n - 1 {
            if u[i] + cost[i] < u[i + 1] {
                u[i + 1] = u[i] + cost[i];
                changed = true;
            }
        }
        for i in (0..n - 1).rev() {
            if u[i + 1] + cost[i] < u[i] {
                u[i] = u[i + 1] + cost[i];
                changed = true;
            }
        }
        if !changed {
            return u;
        }
    }
}

#[test]
fn c10_envelope_equivalence() {
    let _g = lock();
    let dx = 1.0 / 128.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["E1", "E3"] {
        let sc = scenario(name).unwrap();
        let lib_grid = Grid1D::with_spacing(-8.0, 9.0, dx).unwrap();
        let (_, case, u0g, _) = envelope_for(name, &lib_grid);
        let bf_grid = Grid1D::with_spacing(-6.0, 7.0, dx).unwrap();
        let bf = brute_force_subsolution(&bf_grid, case.c_G, sc.bump);
        let diff = bf_grid.index_range(-1.0, 2.0).map(|i| (bf[i] - u0g.eval(bf_grid.x(i))).abs()).fold(0.0, f64::max);
        pass &= diff <= 5.0 * dx;
        parts.push(format!("{name} {diff:.3e}"));
    }
    assert!(verdict(10, "envelope vs discrete maximal subsolution", pass, format!("{} vs {:.3e}", parts.join(", "), 5.0 * dx)));
}

#[test]
fn c11_appendix_counterexample() {
    let _g = lock();
    let start = Instant::now();
    let rep = appendix_counterexample(1e-3, 201).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let checks = [
        ("c_f", rep.c_f.abs() <= 1e-6),
        ("I+", rep.I_plus.abs() <= 1e-6),
        ("bound > 0", rep.lower_bound > 0.0),
        ("min integral > 0", rep.min_integral > 0.0),
        ("runtime", secs < 30.0),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let pass = failed.is_empty();
    assert!(verdict(
        11,
        "appendix counterexample",
        pass,
        format!(
            "c_f = {:.2e}, I+ = {:.2e}, bound = {:.4e} (rho = {:.3e}, delta = {:.3e}), min integral = {:.4e}; {secs:.1} s; failed: {failed:?}",
            rep.c_f, rep.I_plus, rep.lower_bound, rep.rho, rep.delta, rep.min_integral
        )
    ));
}

fn run_into(dir: &std::path::Path, scenario: &str) {
    let args: Vec<String> = ["--scenario", scenario, "--outputs", dir.to_str().unwrap()].iter().map(|s| s.to_string()).collect();
    let cfg = RunConfig::from_args(&args).unwrap();
    let report = run(&cfg).unwrap();
    write_outputs(&report, dir).unwrap();
}

#[test]
fn c12_determinism() {
    let _g = lock();
    let mut pass = true;
    let mut compared = 0;
    for name in ["E3", "appendix"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_into(a.path(), name);
        run_into(b.path(), name);
        let mut files: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        for f in files {
            let x = std::fs::read(a.path().join(&f)).unwrap();
            let y = std::fs::read(b.path().join(&f)).unwrap_or_default();
            pass &= x == y && !x.is_empty();
            compared += 1;
        }
    }
    pass &= compared >= 6;
    assert!(verdict(12, "determinism", pass, format!("{compared} files compared byte for byte")));
}
