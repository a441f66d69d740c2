//! Randomized falsification of pathwise-validity claims and the
//! axiom-soundness smoke suite.
//!
//! Absence of a counterexample is evidence, never proof. Every reported
//! counterexample carries the seed data needed to replay it exactly.

pub mod gen;
pub mod mutants;
pub mod suite;

use crate::ast::{Formula, TruthValue, Var};
use crate::exec::map_indexed;
use crate::sim::{derive_seed, eval_formula, EvalLimits, SamplePath, Valuation};

use gen::{signature_of, support_for, Gen, InterpGen};

#[derive(Debug, Clone, PartialEq)]
pub struct FalsifyCfg {
    pub trials: u64,
    pub seed: u64,
    pub limits: EvalLimits,
    /// Number of stop times drawn per trial.
    pub times_len: usize,
    pub parallel: bool,
    /// Absolute slack added to every comparison, used by the smoke suite
    /// for derivative-algebra instances only. Zero means exact.
    pub geq_slack: f64,
}

impl Default for FalsifyCfg {
    fn default() -> Self {
        FalsifyCfg {
            trials: 1000,
            seed: 0,
            limits: EvalLimits { step: 0.05, ..Default::default() },
            times_len: 4,
            parallel: true,
            geq_slack: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    /// Trial index; everything else is re-derivable from it.
    pub trial: u64,
    pub valuation: Valuation,
    pub times: Vec<f64>,
    pub observed: TruthValue,
    pub interp_summary: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FalsificationReport {
    pub formula: Formula,
    pub trials: u64,
    pub counterexample: Option<Counterexample>,
    pub truncation_rate: f64,
}

/// Adds `slack` to the left side of every comparison, so equalities of
/// floating-point derivative algebra compare up to an absolute tolerance.
fn relax_formula(f: &Formula, slack: f64) -> Formula {
    if slack == 0.0 {
        return f.clone();
    }
    match f {
        Formula::Geq(a, b) => {
            Formula::geq(a.clone().add(crate::ast::Term::Const(slack)), b.clone())
        }
        Formula::Not(x) => relax_formula(x, slack).not(),
        Formula::And(a, b) => relax_formula(a, slack).and(relax_formula(b, slack)),
        Formula::Sure(x) => relax_formula(x, slack).sure(),
        Formula::Pred { .. } => f.clone(),
        Formula::Diamond(p, x) => Formula::diamond((**p).clone(), relax_formula(x, slack)),
    }
}

fn run_trial(
    f: &Formula,
    cfg: &FalsifyCfg,
    trial: u64,
) -> (TruthValue, bool, Valuation, Vec<f64>, String) {
    let mut g = Gen::new(derive_seed(cfg.seed, 0xFA15, trial));
    let sig = signature_of(f);
    let times = {
        let mut t = g.stop_times(cfg.times_len.max(1));
        if t.is_empty() {
            t.push(1.0);
        }
        t
    };
    let interp = InterpGen::interp_for(&mut g, &sig, times.clone(), cfg.limits.clone());
    let mut support = support_for(f);
    if gen::has_prog_symbol(&sig) {
        for extra in [Var::named("hv1"), Var::named("hv2")] {
            if !support.contains(&extra) {
                support.push(extra);
            }
        }
    }
    let v = g.valuation(&support);
    let w = SamplePath::new(derive_seed(cfg.seed, 0x0A17, trial));
    let out = eval_formula(&interp, &v, &w, 0, f);
    let summary = format!(
        "symbols={} times={:?}",
        sig.len(),
        times.iter().map(|t| (t * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
    (out.value, out.truncated, v, times, summary)
}

/// Searches for an interpretation, valuation, and sample path where the
/// formula is not definitely true.
pub fn falsify(f: &Formula, cfg: &FalsifyCfg) -> FalsificationReport {
    let target = relax_formula(f, cfg.geq_slack);
    let results = map_indexed(cfg.trials, cfg.parallel, |trial| run_trial(&target, cfg, trial));
    let truncation_rate =
        results.iter().filter(|r| r.1).count() as f64 / cfg.trials.max(1) as f64;
    let counterexample = results
        .into_iter()
        .enumerate()
        .find(|(_, r)| r.0 != TruthValue::Top)
        .map(|(trial, r)| Counterexample {
            trial: trial as u64,
            valuation: r.2,
            times: r.3,
            observed: r.0,
            interp_summary: r.4,
        });
    FalsificationReport { formula: f.clone(), trials: cfg.trials, counterexample, truncation_rate }
}

/// Re-evaluates the formula at a recorded trial index; reports replay to
/// the same observed value.
pub fn replay(f: &Formula, cfg: &FalsifyCfg, trial: u64) -> TruthValue {
    let target = relax_formula(f, cfg.geq_slack);
    run_trial(&target, cfg, trial).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Term;

    #[test]
    fn valid_instance_survives_trials() {
        let f = crate::ast::sugar::core_ops::iff(
            Formula::geq(Term::var("x"), Term::Const(0.0)),
            Formula::geq(Term::var("x"), Term::Const(0.0)),
        );
        let cfg = FalsifyCfg { trials: 300, parallel: false, ..Default::default() };
        let report = falsify(&f, &cfg);
        assert!(report.counterexample.is_none(), "{:?}", report.counterexample);
    }

    #[test]
    fn open_threshold_is_falsified_and_replays() {
        let f = Formula::geq(Term::var("x"), Term::Const(0.0));
        let cfg = FalsifyCfg { trials: 200, parallel: false, ..Default::default() };
        let report = falsify(&f, &cfg);
        let ce = report.counterexample.expect("x >= 0 is not valid");
        assert_eq!(replay(&f, &cfg, ce.trial), ce.observed);
    }

    #[test]
    fn indeterminate_box_choice_is_reported() {
        // [x := 1 ++ fail] x = 1 evaluates indeterminate everywhere
        let f = crate::syntax::parse_formula("[x := 1 ++ fail] x = 1").unwrap();
        let cfg = FalsifyCfg { trials: 20, parallel: false, ..Default::default() };
        let report = falsify(&f, &cfg);
        let ce = report.counterexample.expect("must find the indeterminate value");
        assert_eq!(ce.observed, TruthValue::Ind);
    }
}
