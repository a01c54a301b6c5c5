//! Property tests for the structural invariants of each module.

use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use weakkam1d::discounted::{default_lambdas, DiscountedSolution, SolverConfig, SolverContext};
use weakkam1d::grid::Grid1D;
use weakkam1d::hamiltonian::{
    eval, fenchel_lagrangian, HamiltonianSpec, LagrangianView, PeriodicFunction, PotentialSpec, Quantity, Which,
    L_INF,
};
use weakkam1d::mather::{appendix_counterexample, closed_measure_lp, LpDomain, LpResolution};
use weakkam1d::occupation::{extract_optimal_curve, occupation_measure, split_at_radius};
use weakkam1d::scenario::scenario;
use weakkam1d::sublevel::{classify, free_critical_value, mean_momenta_with, sublevel_bracket, support_sigma, CaseTag};
use weakkam1d::weakkam::{semidistance_eval, u0_g_envelope, u0_h, Semidistance, SemidistanceTable};

fn bumped(theta: f64) -> HamiltonianSpec {
    HamiltonianSpec::eikonal(theta, PeriodicFunction::cosine(), PotentialSpec::bump(0.25, 0.15, 1.0 / 3.0))
}

fn quadratic() -> HamiltonianSpec {
    HamiltonianSpec::quadratic(PeriodicFunction::cosine(), PotentialSpec::bump(0.25, 0.15, 1.0 / 3.0))
}

/// E3 and E2 solved on a small grid at `lambda = 0.2`.
fn small_solution(name: &str) -> &'static DiscountedSolution {
    static E3: OnceLock<DiscountedSolution> = OnceLock::new();
    static E2: OnceLock<DiscountedSolution> = OnceLock::new();
    let cell = if name == "E3" { &E3 } else { &E2 };
    cell.get_or_init(|| {
        let spec = scenario(name).unwrap().spec();
        let case = classify(&spec).unwrap();
        let grid = Grid1D::with_spacing(-4.0, 5.0, 1.0 / 128.0).unwrap();
        SolverContext::new(&spec, &grid, SolverConfig::default()).solve(0.2, case.c_G).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn base_hamiltonian_is_periodic(theta in -3.0..3.0f64, x in -5.0..5.0f64, p in -10.0..10.0f64, k in -6i32..6) {
        let spec = bumped(theta);
        let a = eval(&spec, x, p, Quantity::H).unwrap();
        let b = eval(&spec, x + k as f64, p, Quantity::H).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn perturbation_is_local(theta in -3.0..3.0f64, x in -5.0..5.0f64, p in -10.0..10.0f64) {
        prop_assume!(!(0.1..=0.4).contains(&x));
        let spec = bumped(theta);
        prop_assert_eq!(eval(&spec, x, p, Quantity::G).unwrap(), eval(&spec, x, p, Quantity::H).unwrap());
    }

    #[test]
    fn convex_in_momentum(theta in -3.0..3.0f64, x in -2.0..2.0f64, p1 in -8.0..8.0f64, d1 in 0.0..3.0f64, d2 in 0.0..3.0f64) {
        for spec in [bumped(theta), quadratic()] {
            let (a, b) = (p1, p1 + d1 + d2);
            let t = d1 / (d1 + d2).max(1e-300);
            let mid = spec.g(x, p1 + d1);
            prop_assert!(mid <= (1.0 - t) * spec.g(x, a) + t * spec.g(x, b) + 1e-10);
        }
    }

    #[test]
    fn fenchel_inequality(theta in -3.0..3.0f64, x in -2.0..2.0f64, p in -8.0..8.0f64, q in -4.0..4.0f64) {
        for spec in [bumped(theta), quadratic()] {
            let l = fenchel_lagrangian(&LagrangianView::new(&spec, Which::G), x, q).unwrap();
            prop_assert!(l + spec.g(x, p) >= p * q - 1e-9);
        }
    }

    #[test]
    fn fenchel_round_trip(theta in -3.0..3.0f64, x in -2.0..2.0f64, p in -2.0..2.0f64) {
        for spec in [bumped(theta), quadratic()] {
            let view = LagrangianView::new(&spec, Which::G);
            let (qlo, qhi) = view.q_domain();
            let m = 201;
            let step = (qhi - qlo) / (m - 1) as f64;
            let back = (0..m)
                .map(|j| qlo + step * j as f64)
                .map(|q| {
                    let l = fenchel_lagrangian(&view, x, q).unwrap();
                    if l >= L_INF / 2.0 { f64::NEG_INFINITY } else { p * q - l }
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let g = spec.g(x, p);
            prop_assert!((back - g).abs() <= 2.0 * step * p.abs() + 1e-8, "recovered {} vs {}", back, g);
        }
    }

    #[test]
    fn sublevel_bracket_endpoints(theta in -3.0..3.0f64, x in -2.0..2.0f64, lift in 0.0..3.0f64) {
        for spec in [bumped(theta), quadratic()] {
            let (_, min) = weakkam1d::hamiltonian::argmin_p(&spec, x, Which::G).unwrap();
            let a = min + lift;
            let b = sublevel_bracket(&spec, Which::G, x, a).unwrap();
            prop_assert!(b.p_minus <= b.p_plus);
            if b.p_minus < b.p_plus {
                prop_assert!((spec.g(x, b.p_minus) - a).abs() <= 1e-9);
                prop_assert!((spec.g(x, b.p_plus) - a).abs() <= 1e-9);
            }
            prop_assert!(spec.g(x, b.midpoint()) <= a + 1e-9);
        }
    }

    #[test]
    fn support_function_increases_with_level(theta in -3.0..3.0f64, x in -2.0..2.0f64, lift in 0.0..3.0f64) {
        let spec = bumped(theta);
        let (cf, _) = free_critical_value(&spec, Which::G);
        let a = cf + lift;
        let lo = sublevel_bracket(&spec, Which::G, x, a).unwrap();
        let hi = sublevel_bracket(&spec, Which::G, x, a + 0.01).unwrap();
        for q in [-1.0, 1.0] {
            prop_assert!(support_sigma(&hi, q) > support_sigma(&lo, q));
        }
    }
}

#[test]
fn mean_momenta_are_monotone_in_level() {
    for theta in [0.0, 2.0, -1.5] {
        let spec = HamiltonianSpec::eikonal(theta, PeriodicFunction::cosine(), PotentialSpec::zero());
        let (cf, _) = free_critical_value(&spec, Which::H);
        let mut prev = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..50 {
            let a = cf + 3.0 * k as f64 / 49.0;
            let (minus, plus) = mean_momenta_with(&spec, a, 512).unwrap();
            assert!(plus >= prev.0 - 1e-12 && minus <= prev.1 + 1e-12, "theta {theta}, level {a}");
            prev = (plus, minus);
        }
    }
}

#[test]
fn case_report_ordering() {
    for s in weakkam1d::scenario::scenarios() {
        let r = classify(&s.spec()).unwrap();
        assert!(r.c_f_H <= r.c_f_G + 1e-12 && r.c_f_G <= r.c_G + 1e-12 && r.c_H <= r.c_G + 1e-12, "{}", s.name);
        assert_eq!(r.c_G, r.c_H.max(r.c_f_G));
        if matches!(r.case_tag, CaseTag::IIA | CaseTag::IIB) {
            assert!(r.rho > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classification_respects_ordering(theta in -3.0..3.0f64, c in -1.0..1.0f64, w in 0.05..0.4f64, a in -1.0..1.0f64) {
        let spec = HamiltonianSpec::eikonal(theta, PeriodicFunction::cosine(), PotentialSpec::bump(c, w, a));
        if let Ok(r) = classify(&spec) {
            prop_assert!(r.c_f_H <= r.c_f_G + 1e-12);
            prop_assert!(r.c_f_G <= r.c_G + 1e-12 && r.c_H <= r.c_G + 1e-12);
            let tag = r.case_tag;
            prop_assert_eq!(tag == CaseTag::I, r.c_G > r.c_H + 1e-8);
        }
    }

    #[test]
    fn semidistance_triangle_and_lipschitz(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, lift in 0.0..1.0f64) {
        let spec = bumped(0.0);
        let case = classify(&spec).unwrap();
        let s = Semidistance { spec: &spec, which: Which::G, level: case.c_G + lift };
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let [y, z, x] = v;
        prop_assert_eq!(semidistance_eval(&s, x, x).unwrap(), 0.0);
        let direct = semidistance_eval(&s, y, x).unwrap();
        let split = semidistance_eval(&s, y, z).unwrap() + semidistance_eval(&s, z, x).unwrap();
        prop_assert!((direct - split).abs() <= 1e-8);
        let back = semidistance_eval(&s, x, y).unwrap();
        let back_split = semidistance_eval(&s, x, z).unwrap() + semidistance_eval(&s, z, y).unwrap();
        prop_assert!((back - back_split).abs() <= 1e-8);
        // sublevel radius at the level over the segment
        let kappa = (0..=200)
            .map(|k| y + (x - y) * k as f64 / 200.0)
            .map(|t| {
                let br = sublevel_bracket(&spec, Which::G, t, s.level).unwrap();
                br.p_minus.abs().max(br.p_plus.abs())
            })
            .fold(0.0, f64::max);
        prop_assert!(direct.abs() <= kappa * (x - y) + 1e-8);
        prop_assert!(back.abs() <= kappa * (x - y) + 1e-8);
    }

    #[test]
    fn scheme_is_monotone(i in 1usize..1150, bump_l in 0.0..0.5f64, bump_r in 0.0..0.5f64, base in -1.0..1.0f64) {
        let sol = small_solution("E3");
        let ctx = SolverContext::new(&sol.spec, &sol.grid, SolverConfig::default());
        let (l, r) = (sol.values[i - 1] + base * 0.1, sol.values[i + 1] + base * 0.1);
        let before = ctx.operator_at(sol.lambda, sol.level, i, Some(l), Some(r));
        let after = ctx.operator_at(sol.lambda, sol.level, i, Some(l + bump_l), Some(r + bump_r));
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn curves_never_reenter_and_respect_speed(x0 in -1.9..1.9f64, which in 0usize..2) {
        let sol = small_solution(["E3", "E2"][which]);
        let traj = extract_optimal_curve(sol, x0).unwrap();
        prop_assert!(traj.max_speed() <= sol.spec.q_velocity_bound);
        let split = split_at_radius(&traj, 2.0, sol.spec.potential.support()).unwrap();
        if split.t_exit.is_some() {
            prop_assert!(split.mu2.atoms.iter().all(|a| a.y.abs() > 2.0));
            let expected = 1.0 - (-sol.lambda * split.t_exit.unwrap()).exp();
            prop_assert!((split.theta - expected).abs() <= 1e-15);
        }
        prop_assert!(split.mu1.atoms.iter().all(|a| a.y.abs() <= 2.0));
    }

    #[test]
    fn occupation_weights_are_geometric(x0 in -1.9..1.9f64) {
        let sol = small_solution("E2");
        let traj = extract_optimal_curve(sol, x0).unwrap();
        let mu = occupation_measure(&traj);
        prop_assert!((mu.total - 1.0).abs() <= 1e-12);
        let beta = (-sol.lambda * sol.h).exp();
        // the untruncated weights sum to lambda h / (1 - beta)
        let kept = mu.raw_total * (1.0 - beta) / (sol.lambda * sol.h);
        prop_assert!(kept <= 1.0 + 1e-12 && kept >= 1.0 - weakkam1d::occupation::TOL_MASS);
        let walked = if traj.stationary { traj.samples.len() - 1 } else { mu.atoms.len() - 1 };
        for k in 0..walked.min(mu.atoms.len() - 1) {
            let ratio = mu.atoms[k + 1].w / mu.atoms[k].w;
            prop_assert!((ratio - beta).abs() <= 1e-12, "k {} ratio {}", k, ratio);
        }
    }
}

#[test]
fn window_reduction_for_equilibria() {
    use rand::{Rng, SeedableRng};
    let spec = scenario("E0").unwrap().spec();
    let case = classify(&spec).unwrap();
    let table = SemidistanceTable::build(&spec, Which::H, case.c_H, -15.0, 15.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x: f64 = rng.gen_range(-8.0..8.0);
        let best = |r: f64| {
            case.equilibria_h_in(&spec, x - r, x + r)
                .iter()
                .map(|e| table.eval(e.x, x).unwrap())
                .fold(f64::INFINITY, f64::min)
        };
        assert!((best(1.0) - best(5.0)).abs() <= 1e-12, "x = {x}");
    }
}

#[test]
fn equilibria_agree_off_the_support() {
    // holds when the perturbation does not lower the free critical value
    for name in ["E0", "E2", "E3"] {
        let spec = scenario(name).unwrap().spec();
        let case = classify(&spec).unwrap();
        let off = |v: Vec<f64>| -> Vec<f64> { v.into_iter().filter(|&x| spec.potential.eval(x) == 0.0).collect() };
        let g = off(case.equilibria_g_in(&spec, -3.0, 3.0).iter().flat_map(|e| e.samples()).collect());
        let h = off(case.equilibria_h_in(&spec, -3.0, 3.0).iter().flat_map(|e| e.samples()).collect());
        assert_eq!(g.len(), h.len(), "{name}");
        for (a, b) in g.iter().zip(&h) {
            assert!((a - b).abs() <= 1e-8, "{name}: {a} vs {b}");
        }
    }
}

#[test]
fn envelope_is_admissible() {
    let grid = Grid1D::with_spacing(-8.0, 9.0, 1.0 / 128.0).unwrap();
    for name in ["E0", "E1", "E2", "E2b", "E3"] {
        let spec = scenario(name).unwrap().spec();
        let case = classify(&spec).unwrap();
        let u0h = u0_h(&spec, &case, &grid).unwrap().trusted().unwrap().clone();
        let env = u0_g_envelope(&spec, &case, &u0h, &grid).unwrap();
        let u = &env.profile;
        let defect = u.subsolution_defect(&spec, Which::G, -2.0, 3.0);
        assert!(defect <= u.subsolution_tolerance(&spec, Which::G), "{name}: defect {defect}");
        if case.mather_constraint_active {
            for e in case.equilibria_g_in(&spec, -2.0, 3.0) {
                assert!(u.eval(e.x) <= 1e-9, "{name}: u0_G({}) = {}", e.x, u.eval(e.x));
            }
        }
        let (slo, shi) = spec.potential.support().unwrap_or((0.0, 0.0));
        let below_h = |lo: f64, hi: f64| grid.index_range(lo, hi).all(|i| u.values[i] <= u0h.eval(grid.x(i)) + 1e-9);
        match case.case_tag {
            CaseTag::IIA => assert!(below_h(-2.0, slo), "{name}"),
            CaseTag::IIB => assert!(below_h(shi, 3.0), "{name}"),
            CaseTag::I => assert!(env.diagnostics.coercivity_c.unwrap() > 0.0),
            CaseTag::III => {}
        }
    }
}

#[test]
fn discrete_comparison_and_discount_scaling() {
    let spec = scenario("E1").unwrap().spec();
    let case = classify(&spec).unwrap();
    let grid = Grid1D::with_spacing(-4.0, 5.0, 1.0 / 128.0).unwrap();
    let ctx = SolverContext::new(&spec, &grid, SolverConfig::default());
    let m = grid.nodes().iter().map(|&x| spec.g(x, 0.0).abs()).fold(0.0, f64::max);
    for lambda in default_lambdas() {
        let u = ctx.solve(lambda, case.c_G).unwrap();
        let up = ctx.solve(lambda, case.c_G + 0.1).unwrap();
        assert!(u.values.iter().zip(&up.values).all(|(a, b)| b >= a));
        assert!(lambda * u.sup_norm() <= m + case.c_G.abs() + lambda * grid.dx());
    }
}

#[test]
fn lp_value_is_pinched() {
    let res = LpResolution::default();
    let spec = scenario("E0").unwrap().spec();
    let case = classify(&spec).unwrap();
    let lp = closed_measure_lp(&spec, LpDomain::Torus, &res).unwrap();
    let tol = 1e-3 + 8.0 / (res.q_nodes - 1) as f64 + 1.0 / res.x_cells as f64;
    // any equilibrium delta is feasible
    let view = LagrangianView::new(&spec, Which::H);
    for e in case.equilibria_h_in(&spec, 0.0, 1.0) {
        assert!(lp.optimal_value <= fenchel_lagrangian(&view, e.x, 0.0).unwrap() + 1e-9);
    }
    assert!(lp.optimal_value >= -case.c_H - tol);
    // p(x) = midpoint of the critical sublevel is a subsolution gradient: int L >= int (p q) - c
    let pq: f64 = lp
        .measure
        .integrate(|x, q| q * sublevel_bracket(&spec, Which::H, x, case.c_H).unwrap().midpoint());
    assert!(lp.optimal_value >= pq - case.c_H - tol);
}

#[test]
fn appendix_integral_shrinks_with_eps1() {
    let mins: Vec<f64> = [1e-3, 2e-3, 4e-3].iter().map(|&e| appendix_counterexample(e, 101).unwrap().min_integral).collect();
    assert!(mins.windows(2).all(|w| w[1] < w[0]), "{mins:?}");
}

#[test]
fn shifted_cosine_is_a_translate() {
    let s = PeriodicFunction::shifted_cosine(0.25);
    for k in 0..20 {
        let x = k as f64 / 7.0;
        assert!((s.eval(x) - (2.0 * PI * (x - 0.25)).cos()).abs() <= 1e-12);
    }
}
