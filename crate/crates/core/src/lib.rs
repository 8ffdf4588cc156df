//! Semi-Lagrangian Lie–Trotter splitting for the linear Vlasov equation with
//! stochastic perturbations.
//!
//! The state is a density `f(x, v)` sampled on a periodic-in-`x`, truncated-in-`v`
//! phase grid. One time step applies the free-streaming flow in `x`, then the
//! force flow in `v`, then the action of the noise:
//!
//! | scheme        | noise action after `S²(τ)S¹(τ)`                          |
//! |---------------|----------------------------------------------------------|
//! | deterministic | none                                                     |
//! | additive      | `+ Σₖ δβₖ σₖ`                                            |
//! | mult_ito      | `× exp(Σₖ σₖ δβₖ − τ/2 Σₖ σₖ²)`                          |
//! | mult_strato   | `× exp(Σₖ σₖ δβₖ)`                                       |
//! | transport     | velocity shift by `Σₖ δβₖ σₖ(x)`                         |
//!
//! Every shift is realised by linear interpolation, which keeps nonnegative
//! data nonnegative.
//!
//! ```
//! use svlasov_core::{grid::PhaseGrid, schemes::{SchemeKind, SchemeState}, testcase};
//!
//! let grid = PhaseGrid::new(64, 65, 2.0 * std::f64::consts::PI).unwrap();
//! let f0 = testcase::two_stream(&grid);
//! let e = testcase::cosine_field(&grid);
//! let mut state = SchemeState::new(f0, 0.1);
//! for _ in 0..5 {
//!     state = SchemeKind::Deterministic.step(state, &e, None, &[]).unwrap();
//! }
//! assert!(state.field.min_value() >= 0.0);
//! ```

mod accumulator;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod interp;
pub mod montecarlo;
pub mod noise;
pub mod operators;
pub mod schemes;
pub mod testcase;

pub use error::{Error, Result};
pub use grid::{Field, Norm, PhaseGrid};
pub use noise::{Catalog, IncrementStream, NoiseKind, NoiseSpec};
pub use operators::FieldOnX;
pub use schemes::{SchemeKind, SchemeState};
