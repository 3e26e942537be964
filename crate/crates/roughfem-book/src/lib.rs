// mdbook cannot test listings that depend on a workspace crate, so each
// chapter is pulled in as the docs of an empty module and the listings run
// under `cargo test --doc`. A failing doctest is reported against the
// chapter's module name.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/random-coefficients.md")]
pub mod random_coefficients {}
#[doc = include_str!("../../../book/src/model-problem.md")]
pub mod model_problem {}
#[doc = include_str!("../../../book/src/galerkin-estimators.md")]
pub mod galerkin_estimators {}
#[doc = include_str!("../../../book/src/frequency.md")]
pub mod frequency {}
#[doc = include_str!("../../../book/src/quadrature.md")]
pub mod quadrature {}
#[doc = include_str!("../../../book/src/two-dimensions.md")]
pub mod two_dimensions {}
#[doc = include_str!("../../../book/src/monte-carlo.md")]
pub mod monte_carlo {}
