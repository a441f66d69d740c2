//! A proof-checking kernel and simulation laboratory for a stochastic
//! differential dynamic logic with definite descriptions, three-valued
//! truth, and uniform substitution.
//!
//! The crate is organized around the pipeline from text to verdicts:
//!
//! * [`ast`] and [`syntax`] define the expression language and its
//!   concrete grammar;
//! * [`sim`] gives the language an executable, seeded semantics;
//! * [`analysis`] and [`subst`] provide the static machinery that makes
//!   uniform substitution safe;
//! * [`kernel`] checks proofs built from the axiom catalog and rules;
//! * [`prob`] estimates probabilities of formulas by Monte Carlo;
//! * [`harness`] hunts for counterexamples to validity claims.
//!
//! With the default `parallel` feature, sampling loops fan out over a
//! rayon pool; disabling it falls back to sequential loops with
//! identical results.

pub mod analysis;
pub mod ast;
pub mod exec;
pub mod harness;
pub mod kernel;
pub mod prob;
pub mod sim;
pub mod subst;
pub mod syntax;
