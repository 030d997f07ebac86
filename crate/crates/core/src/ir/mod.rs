//! The intermediate language: terms, programs, parsing and printing.

mod ast;
pub mod parse;
pub mod print;
pub mod vars;
pub mod wf;

pub use ast::{AExp, BExp, Exp, FuncDef, Int, Name, ProbDef, Program, QExp};
pub use parse::{parse_aexp, parse_bexp, parse_exp, parse_program, parse_qexp, ParseError};
pub use vars::{alpha_eq, free_vars, subst1, substitute, Bindings, SubstError, Term};
pub use wf::{check_well_formed, WfError};
