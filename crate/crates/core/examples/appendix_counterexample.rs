//! The non-Tonelli torus example where the maximal subsolution vanishing on equilibria is not
//! the limit: `cargo run --release --example appendix_counterexample -- 1e-3`.

use weakkam1d::mather::appendix_counterexample;

fn main() -> weakkam1d::Result<()> {
    let eps1: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let rep = appendix_counterexample(eps1, 21)?;
    println!("eps1 = {eps1}");
    println!("c_f = {:.3e}, I+ = {:.3e}, period of gamma = {:.6}", rep.c_f, rep.I_plus, rep.gamma_period_T);
    println!("closure residuals {:.2e} {:.2e}", rep.closure_residuals[0], rep.closure_residuals[1]);
    println!("y,int u_y dmu");
    for (y, v) in &rep.integrals {
        println!("{y:.4},{v:.6}");
    }
    println!("min integral {:.6}", rep.min_integral);
    println!(
        "bound -4/rho + delta/(4 eps1) = {:.4} (rho {:.4e}, delta {:.4e}); positive once eps1 < {:.3e}",
        rep.lower_bound, rep.rho, rep.delta, rep.eps1_threshold
    );
    Ok(())
}
