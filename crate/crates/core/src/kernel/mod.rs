//! The trusted proof checker: judgments, the axiom catalog, the proof
//! rules, and replay of proof scripts. This is the only module that may
//! assert a [`Judgment`].

pub mod axioms;
pub mod rules;
pub mod script;

use crate::ast::Formula;
use crate::prob::ProbFormula;

pub use axioms::{axiom_catalog, lookup, AxiomKind, AxiomSchema, SchemaBody};
pub use rules::{apply_rule, instantiate, KernelError, RuleParams};
pub use script::{check_proof, parse_script, ProofScript, Step, Verdict};

/// A checked claim: a pathwise-valid formula or a valid probability
/// comparison, together with the semantic side conditions the derivation
/// assumed but did not check.
#[derive(Debug, Clone, PartialEq)]
pub struct Judgment {
    pub claim: Claim,
    pub obligations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Claim {
    Pathwise(Formula),
    Prob(ProbFormula),
}

impl std::fmt::Display for Claim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Claim::Pathwise(x) => write!(f, "{x}"),
            Claim::Prob(x) => write!(f, "{x}"),
        }
    }
}
