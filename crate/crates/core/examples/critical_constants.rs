//! Critical values and case of every built-in scenario: `cargo run --release --example critical_constants`.

use weakkam1d::scenario::{scenarios, ScenarioKind};
use weakkam1d::sublevel::classify;

fn main() -> weakkam1d::Result<()> {
    println!("{:<9} {:>9} {:>9} {:>9} {:>9}  case   P-H        P+H        rho", "scenario", "c_f(H)", "c(H)", "c_f(G)", "c(G)");
    for sc in scenarios() {
        if sc.kind == ScenarioKind::Appendix {
            continue;
        }
        let r = classify(&sc.spec())?;
        println!(
            "{:<9} {:>9.6} {:>9.6} {:>9.6} {:>9.6}  {:<5} {:>10.6} {:>10.6} {:>8.5}",
            sc.name, r.c_f_H, r.c_H, r.c_f_G, r.c_G, r.case_tag.as_str(), r.P_H_minus, r.P_H_plus, r.rho
        );
        println!("          equilibria of G: {:?}", r.equilibria_G);
    }
    Ok(())
}
