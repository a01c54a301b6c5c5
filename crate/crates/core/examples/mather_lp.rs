//! Minimizing closed measures by linear programming: `cargo run --release --example mather_lp -- E1`.

use weakkam1d::mather::{closed_measure_lp, equilibrium_mather_g, LpDomain, LpResolution};
use weakkam1d::scenario::scenario;
use weakkam1d::sublevel::classify;

fn main() -> weakkam1d::Result<()> {
    let sc = scenario(&std::env::args().nth(1).unwrap_or_else(|| "E1".into()))?;
    let spec = sc.spec();
    let report = classify(&spec)?;
    let res = LpResolution::default();
    let torus = closed_measure_lp(&spec, LpDomain::Torus, &res)?;
    println!("torus: min int L_H = {:.6}, -c(H) = {}", torus.optimal_value, -report.c_H);
    println!("{}", serde_json::to_string_pretty(&torus.to_json())?);
    if spec.potential.support().is_some() {
        let domain = LpDomain::default_window(&spec);
        let LpDomain::Window { lo, hi } = domain else { unreachable!() };
        let win = closed_measure_lp(&spec, domain, &res)?;
        println!("window [{lo}, {hi}]: min int L_G = {:.6}, -c_f(G) = {}", win.optimal_value, -report.c_f_G);
        println!("{}", serde_json::to_string_pretty(&win.to_json())?);
        for e in equilibrium_mather_g(&spec, &report, lo, hi)? {
            println!("delta at {:.6}: L = {:.6}", e.measure.atoms[0].x, e.objective);
        }
    }
    Ok(())
}
