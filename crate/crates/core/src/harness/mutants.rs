//! Seeded axiom mutations: deliberately broken variants the falsifier
//! must catch. Each mutant is a concrete instance engineered so that a
//! counterexample lies in the sampled region.

use crate::ast::sugar::core_ops::{eq_cmp, iff, implies, or};
use crate::ast::{Formula, Program, Term, Var};

use super::{falsify, FalsifyCfg};

fn xv() -> Var {
    Var::named("x")
}

fn yv() -> Var {
    Var::named("y")
}

fn dt(t: Term) -> Term {
    Term::DiffT(Box::new(t))
}

pub fn mutant_suite() -> Vec<(&'static str, Formula)> {
    let u = || Term::var("u");
    let w = || Term::var("w");
    let p = Formula::pred0("p");
    let q = Formula::pred0("q");
    vec![
        // weakening backwards: a disjunction does not entail a conjunction
        (
            "weaken-or-to-and",
            implies(
                or(
                    Formula::geq(u(), Term::Const(0.0)),
                    Formula::geq(w(), Term::Const(0.0)),
                ),
                Formula::geq(u(), Term::Const(0.0)).and(Formula::geq(w(), Term::Const(0.0))),
            ),
        ),
        // choice rewritten with conjunction on the right
        ("choice-to-and", {
            let assign = Program::Assign(xv(), Term::Const(1.0));
            let x_is_one = eq_cmp(Term::var("x"), Term::Const(1.0));
            iff(
                Formula::diamond(assign.clone().choice(Program::Fail), x_is_one.clone()),
                Formula::diamond(assign, x_is_one.clone())
                    .and(Formula::diamond(Program::Fail, x_is_one)),
            )
        }),
        // composition with the operands swapped
        ("compose-swapped", {
            let a = Program::Assign(xv(), Term::Const(1.0));
            let b = Program::Assign(xv(), Term::Const(2.0));
            let phi = eq_cmp(Term::var("x"), Term::Const(2.0));
            iff(
                Formula::diamond(a.clone().seq(b.clone()), phi.clone()),
                Formula::diamond(b, Formula::diamond(a, phi)),
            )
        }),
        // excluded middle without the sure wrapper
        ("excluded-middle-dropped-sure", or(p.clone(), p.clone().not())),
        // negation pretending to be the identity
        ("neg-as-id", iff(p.clone().not(), p.clone())),
        // conditional with the branches exchanged
        ("cond-swapped-branches", {
            let h = Formula::geq(u(), Term::Const(0.0));
            let a = Program::Assign(yv(), Term::Const(1.0));
            let b = Program::Assign(yv(), Term::Const(2.0));
            let post = Formula::geq(Term::var("y"), Term::Const(1.5));
            let ind =
                |f: Formula| crate::ast::sugar::core_ops::ind(f);
            iff(
                Formula::diamond(
                    Program::If(h.clone(), Box::new(a.clone()), Box::new(b.clone())),
                    post.clone(),
                ),
                or(
                    h.clone().and(or(ind(h.clone()), Formula::diamond(b, post.clone()))),
                    h.clone().not().and(or(ind(h), Formula::diamond(a, post))),
                ),
            )
        }),
        // failing program treated as the identity
        (
            "fail-as-skip",
            iff(
                Formula::diamond(Program::Fail, Formula::geq(u(), Term::Const(0.0))),
                Formula::geq(u(), Term::Const(0.0)),
            ),
        ),
        // iteration unfolding without the zero-iteration disjunct
        ("iter-dropped-base", {
            let body = Program::Assign(yv(), Term::Const(-1.0));
            let phi = Formula::geq(Term::var("y"), Term::Const(0.0));
            iff(
                Formula::diamond(body.clone().star(), phi.clone()),
                Formula::diamond(body.clone().seq(body.star()), phi),
            )
        }),
        // derivative of a sum turned into a product
        (
            "dt-plus-as-product",
            eq_cmp(
                dt(Term::var("x").add(Term::var("y"))),
                dt(Term::var("x")).mul(dt(Term::var("y"))),
            ),
        ),
        // sureness of a conjunction split into a disjunction
        (
            "sure-and-as-or",
            iff(
                p.clone().and(q.clone()).sure(),
                or(p.sure(), q.sure()),
            ),
        ),
    ]
}

/// Runs the falsifier on every mutant; each must be detected.
pub fn mutants_detected(trials: u64, seed: u64, parallel: bool) -> Vec<(&'static str, bool)> {
    mutant_suite()
        .into_iter()
        .map(|(name, f)| {
            let cfg = FalsifyCfg { trials, seed, parallel, ..Default::default() };
            let found = falsify(&f, &cfg).counterexample.is_some();
            (name, found)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_has_ten_mutants_with_unique_names() {
        let suite = mutant_suite();
        assert_eq!(suite.len(), 10);
        let mut names: Vec<_> = suite.iter().map(|(n, _)| *n).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 10);
    }

    #[test]
    fn a_sample_mutant_is_detected_fast() {
        let (name, f) = &mutant_suite()[4];
        let cfg = FalsifyCfg { trials: 200, parallel: false, ..Default::default() };
        assert!(falsify(f, &cfg).counterexample.is_some(), "{name} not detected");
    }
}
