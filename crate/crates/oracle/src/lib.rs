//! Test oracle: a reference interpreter that shares only the parser with
//! the stepper, and a generator of random ground programs.

pub mod gen;
pub mod interp;

pub use gen::{generate, Shape, Ty};
pub use interp::{Interpreter, RefOutcome, RefValue};
