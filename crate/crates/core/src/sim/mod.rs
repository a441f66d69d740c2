//! Executable semantics: valuations, sample paths, choice sequences,
//! interpretations, and the evaluators for the three syntactic kinds.

pub mod formula;
pub mod interp;
pub mod iota;
pub mod omega;
pub mod prog;
pub mod term;
pub mod value;

pub use formula::eval_formula;
pub use interp::{EvalLimits, FnMeaning, Interp, PredMeaning, ProgMeaning};
pub use iota::solve_iota;
pub use omega::{derive_seed, ChoiceSeq, RunState, SamplePath};
pub use prog::{run_program, run_program_with, Trace, TraceRow};
pub use term::{eval_term, partial, strict_fn};
pub use value::{Outcome, RealBot, Valuation};
