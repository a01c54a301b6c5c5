//! Optimal backward curves and their occupation measures:
//! `cargo run --release --example optimal_curves -- E2 0.2`.

use std::time::Instant;

use weakkam1d::discounted::{SolverConfig, SolverContext};
use weakkam1d::occupation::{extract_optimal_curve, occupation_measure, split_at_radius};
use weakkam1d::scenario::scenario;
use weakkam1d::sublevel::classify;

fn main() -> weakkam1d::Result<()> {
    let mut args = std::env::args().skip(1);
    let sc = scenario(&args.next().unwrap_or_else(|| "E2".into()))?;
    let lambda: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let spec = sc.spec();
    let report = classify(&spec)?;
    let grid = sc.default_grid();
    let sol = SolverContext::new(&spec, &grid, SolverConfig::default()).solve(lambda, report.c_G)?;
    println!("{} case {} lambda {lambda}", sc.name, report.case_tag);
    println!("x0,u,representation,max_speed,backtrack,stationary,end,theta");
    for x0 in [-1.3, -0.2, 0.2, 0.5, 1.0, 2.6] {
        let t = Instant::now();
        let traj = extract_optimal_curve(&sol, x0)?;
        let mu = occupation_measure(&traj);
        let split = split_at_radius(&traj, 3.0, spec.potential.support())?;
        println!(
            "{x0},{:.6},{:.6},{:.3},{:.2e},{},{:.3},{:.4}  ({:.2?}, mass {:.6})",
            sol.value_at(x0),
            traj.discounted_cost(),
            traj.max_speed(),
            traj.max_backtrack(),
            traj.stationary,
            traj.samples.last().unwrap().y,
            split.theta,
            t.elapsed(),
            mu.raw_total
        );
    }
    Ok(())
}
