//! P1 finite elements for `-(a u')' = 0` on `[0, 1]` with `u(0) = 0` and unit
//! flux at `x = 1`, plus the dual problems driven by an observable.
//!
//! With a piecewise-constant coefficient every element integral is exact, so
//! the discrete solutions have closed forms: `u_h' = 1 / a_h` and
//! `lambda_h' = G_h / a_h`.

mod observable;
mod solve;

pub use crate::grid::{Coefficient, DyadicGrid, NodalValues};
pub use observable::Observable;
pub use solve::{
    assemble_solve_tridiagonal, solve_dual_explicit, solve_primal_explicit, Boundary, FemSolution, Load,
};
