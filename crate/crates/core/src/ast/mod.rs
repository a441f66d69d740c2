//! Abstract syntax: the truth lattice, expressions of the three kinds,
//! surface sugar, and well-formedness.

mod eq;
pub mod expr;
pub mod sugar;
pub mod truth;
pub mod wf;

pub use expr::{
    formula_vars, free_vars_formula, free_vars_term, program_vars, term_vars, FnRef, Formula,
    IotaTag, MarkerKey, Program, SdeSystem, SymKind, Term, Var,
};
pub use truth::TruthValue;
pub use wf::{well_formed_formula, well_formed_program, well_formed_term, Violation};
