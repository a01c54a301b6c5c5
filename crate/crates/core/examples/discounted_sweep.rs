//! Vanishing-discount sweep for one scenario: `cargo run --release --example discounted_sweep -- E3`.

use std::time::Instant;

use weakkam1d::discounted::{default_lambdas, lambda_sweep, SolverConfig, SolverContext};
use weakkam1d::scenario::scenario;
use weakkam1d::sublevel::classify;
use weakkam1d::weakkam::{u0_g_envelope, u0_h};

fn main() -> weakkam1d::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "E3".into());
    let sc = scenario(&name)?;
    let spec = sc.spec();
    let grid = sc.default_grid();
    let report = classify(&spec)?;
    let u0h = u0_h(&spec, &report, &grid)?;
    let u0g = u0_g_envelope(&spec, &report, &u0h.profile, &grid)?;
    println!("{} case {} c_G = {}", sc.name, report.case_tag, report.c_G);
    let t = Instant::now();
    let ctx = SolverContext::new(&spec, &grid, SolverConfig::default());
    let table = lambda_sweep(&ctx, &report, &default_lambdas(), sc.default_window(), &u0g.profile, false)?;
    table.write_csv(&mut std::io::stdout())?;
    println!("monotone decay: {}, empirical order: {:?}", table.monotone_decay, table.empirical_order);
    println!("elapsed {:.1?}", t.elapsed());
    Ok(())
}
