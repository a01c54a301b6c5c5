//! Vanishing-discount analysis of one-dimensional Hamilton-Jacobi equations
//! `lambda u + H(x, u') - V(x) = c` with `H` periodic in `x` and `V` compactly supported.

pub mod discounted;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod lp;
pub mod mather;
pub mod occupation;
pub mod quad;
pub mod runner;
pub mod scenario;
pub mod sublevel;
pub mod weakkam;

pub use error::{Error, Result};
