//! `H_bar(theta)` for `H = |p| - cos 2 pi x` and a quadratic Hamiltonian, with the mean momenta
//! that define it: `cargo run --release --example effective_hamiltonian`.

use weakkam1d::hamiltonian::{HamiltonianSpec, PeriodicFunction, PotentialSpec, Which};
use weakkam1d::sublevel::{effective_hamiltonian, free_critical_value, mean_momenta};

fn main() -> weakkam1d::Result<()> {
    let eikonal = HamiltonianSpec::eikonal(0.0, PeriodicFunction::cosine(), PotentialSpec::zero());
    let quad = HamiltonianSpec::quadratic(PeriodicFunction::cosine(), PotentialSpec::zero());
    println!("theta,eikonal,max(1,|theta|),quadratic");
    for k in 0..=16 {
        let theta = -4.0 + 0.5 * k as f64;
        println!(
            "{theta},{:.8},{},{:.8}",
            effective_hamiltonian(&eikonal, theta)?,
            1f64.max(theta.abs()),
            effective_hamiltonian(&quad, theta)?
        );
    }
    // the flat piece of the eikonal H_bar is [I^-(c_f), I^+(c_f)]
    let (cf, _) = free_critical_value(&eikonal, Which::H);
    let (lo, hi) = mean_momenta(&eikonal, cf)?;
    println!("c_f = {cf}, flat piece [{lo:.6}, {hi:.6}]");
    Ok(())
}
