//! Dense matrices, the differentiation tape, and the optimizer.

mod adam;
mod matrix;
mod tape;

pub use adam::{Adam, AdamConfig};
pub use matrix::{sigmoid, Matrix};
pub use tape::{Gradients, OperatorStack, Tape, Var, PROB_FLOOR};
pub(crate) use tape::cross_entropy_value;
