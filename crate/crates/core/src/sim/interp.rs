//! Interpretations: symbol tables plus the stop-time set and the
//! simulation controls that determinize evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::ast::{Formula, MarkerKey, Program, Term, TruthValue};

use super::value::{RealBot, Valuation};

pub type FnTable = Arc<dyn Fn(&[RealBot]) -> RealBot + Send + Sync>;
pub type PredTable = Arc<dyn Fn(&[RealBot]) -> TruthValue + Send + Sync>;

/// Meaning of a function symbol: either an opaque total table, or a term
/// evaluated at a captured valuation with the symbol's markers bound to
/// the argument vector (the shape adjoint interpretations use).
#[derive(Clone)]
pub enum FnMeaning {
    Fixed(FnTable),
    Expr {
        body: Term,
        env: Arc<Interp>,
        at: Valuation,
        markers: Vec<MarkerKey>,
    },
}

/// Meaning of a predicate symbol. `Expr` evaluates an arbitrary formula
/// (possibly with modalities) at a captured valuation.
#[derive(Clone)]
pub enum PredMeaning {
    Fixed(PredTable),
    Expr {
        body: Formula,
        env: Arc<Interp>,
        at: Valuation,
        markers: Vec<MarkerKey>,
    },
}

/// Meaning of a program symbol: a concrete program, run either under the
/// ambient interpretation (`env: None`) or under a captured one.
#[derive(Clone)]
pub struct ProgMeaning {
    pub body: Program,
    pub env: Option<Arc<Interp>>,
}

/// Controls for the bounded, deterministic evaluation of the semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalLimits {
    /// Integrator step.
    pub step: f64,
    /// Choice-sequence support bound for modal suprema.
    pub choice_bound: u32,
    /// Search interval for definite-description solving.
    pub iota_lo: f64,
    pub iota_hi: f64,
    /// Number of scan cells for root isolation and uniqueness.
    pub iota_cells: u32,
}

impl Default for EvalLimits {
    fn default() -> Self {
        EvalLimits {
            step: 1e-3,
            choice_bound: 8,
            iota_lo: -1e6,
            iota_hi: 1e6,
            iota_cells: 1 << 16,
        }
    }
}

/// An interpretation: meanings for the open symbols, the marker bindings
/// used by adjoints, the ordered stop-time list, and evaluation limits.
#[derive(Clone, Default)]
pub struct Interp {
    pub fns: BTreeMap<(String, u8), FnMeaning>,
    pub preds: BTreeMap<(String, u8), PredMeaning>,
    pub progs: BTreeMap<String, ProgMeaning>,
    pub markers: BTreeMap<MarkerKey, RealBot>,
    /// Sorted ascending, no duplicates, all non-negative.
    pub times: Vec<f64>,
    pub limits: EvalLimits,
}

impl Interp {
    pub fn new(times: Vec<f64>, limits: EvalLimits) -> Interp {
        let mut times = times;
        times.retain(|t| t.is_finite() && *t >= 0.0);
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        Interp {
            fns: BTreeMap::new(),
            preds: BTreeMap::new(),
            progs: BTreeMap::new(),
            markers: BTreeMap::new(),
            times,
            limits,
        }
    }

    /// Stop time selected by index `i`, clamped to the last entry.
    pub fn stop_time(&self, i: usize) -> Option<f64> {
        match self.times.len() {
            0 => None,
            n => Some(self.times[i.min(n - 1)]),
        }
    }

    pub fn with_fn(mut self, name: &str, arity: u8, f: FnTable) -> Interp {
        self.fns.insert((name.to_string(), arity), FnMeaning::Fixed(f));
        self
    }

    pub fn with_pred(mut self, name: &str, arity: u8, p: PredTable) -> Interp {
        self.preds.insert((name.to_string(), arity), PredMeaning::Fixed(p));
        self
    }

    pub fn with_prog(mut self, name: &str, body: Program) -> Interp {
        self.progs.insert(name.to_string(), ProgMeaning { body, env: None });
        self
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Interp {
        let mut times = times;
        times.retain(|t| t.is_finite() && *t >= 0.0);
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        self.times = times;
        self
    }
}

impl fmt::Debug for Interp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Interp")
            .field("fns", &self.fns.keys().collect::<Vec<_>>())
            .field("preds", &self.preds.keys().collect::<Vec<_>>())
            .field("progs", &self.progs.keys().collect::<Vec<_>>())
            .field("times", &self.times)
            .field("limits", &self.limits)
            .finish()
    }
}
