//! `u0_H`, `u0_G` and, in case I, the strict subsolution `v_G`, written as CSV:
//! `cargo run --release --example envelope -- E2 > e2.csv`.

use std::io::Write;

use weakkam1d::grid::Grid1D;
use weakkam1d::hamiltonian::Which;
use weakkam1d::scenario::scenario;
use weakkam1d::sublevel::{classify, CaseTag};
use weakkam1d::weakkam::{strict_subsolution_vg, u0_g_envelope, u0_h};

fn main() -> weakkam1d::Result<()> {
    let sc = scenario(&std::env::args().nth(1).unwrap_or_else(|| "E2".into()))?;
    let spec = sc.spec();
    let report = classify(&spec)?;
    let grid = Grid1D::with_spacing(-8.0, 9.0, 1.0 / 128.0)?;
    let u0h = u0_h(&spec, &report, &grid)?;
    let env = u0_g_envelope(&spec, &report, u0h.trusted()?, &grid)?;
    let vg = if report.case_tag == CaseTag::I { Some(strict_subsolution_vg(&spec, &report, &grid)?) } else { None };
    eprintln!("{} case {}, condition (U): {:?}", sc.name, report.case_tag, u0h.condition_u);
    eprintln!("{:?}", env.diagnostics);
    eprintln!("subsolution defect on [-2, 3]: {:.2e}", env.profile.subsolution_defect(&spec, Which::G, -2.0, 3.0));
    let mut out = std::io::stdout().lock();
    writeln!(out, "x,u0_H,u0_G,v_G")?;
    for i in grid.index_range(-3.0, 4.0).step_by(4) {
        let x = grid.x(i);
        let v = vg.as_ref().map_or(String::new(), |s| format!("{:.6}", s.profile.values[i]));
        writeln!(out, "{x},{:.6},{:.6},{v}", u0h.profile.values[i], env.profile.values[i])?;
    }
    Ok(())
}
