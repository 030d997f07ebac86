//! The mini-C front end: parsing, instrumentation with a step counter, and
//! translation of the sliced program into the intermediate language.

mod ast;
mod instrument;
mod interp;
mod parse;
mod print;
mod translate;

pub use ast::*;
pub use instrument::{instrument, STEP};
pub use interp::{run_function, Value};
pub use parse::parse_c;
pub use translate::{slice_translate, Translation};

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unsupported construct: {what}")]
    Unsupported { pos: Pos, what: String },
    #[error("`{0}` already has a `step` variable")]
    AlreadyInstrumented(String),
    #[error("`{0}` is not instrumented")]
    NotInstrumented(String),
    #[error("{pos}: cannot slice: {msg}")]
    SliceFailure { pos: Pos, msg: String },
    #[error("interpreter: {0}")]
    Runtime(String),
}

impl FrontendError {
    fn unsupported(pos: Pos, what: impl Into<String>) -> Self {
        FrontendError::Unsupported { pos, what: what.into() }
    }

    fn slice(pos: Pos, msg: impl Into<String>) -> Self {
        FrontendError::SliceFailure { pos, msg: msg.into() }
    }
}
