//! The axiom catalog.
//!
//! Schemas are stated over arity-0 symbols: predicate symbols `p`, `q`,
//! `r` (plus `p@1` where an argument position matters), function symbols
//! `f`, `g`, `h`, `c`, program symbols `a`, `b`, and the canonical
//! variables `x`, `y` where the axiom is about variables themselves.
//! Instantiation happens through uniform substitution, so schemas are
//! ordinary formulas.
//!
//! Equational field axioms are guarded by `def(.)` on every symbol they
//! mention: an equation between undefined values is indeterminate, not
//! true, so the unguarded forms do not hold at partial valuations.

use crate::ast::sugar::core_ops::{box_mod, crash, defined, eq_cmp, iff, implies, or};
use crate::ast::{FnRef, Formula, Program, SdeSystem, Term, Var};
use crate::prob::{ProbFormula, ProbTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomKind {
    Pathwise,
    Probabilistic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemaBody {
    Pathwise(Formula),
    Probabilistic(ProbFormula),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomSchema {
    pub id: &'static str,
    pub kind: AxiomKind,
    pub body: SchemaBody,
    pub side_condition: Option<&'static str>,
}

fn p() -> Formula {
    Formula::pred0("p")
}

fn q() -> Formula {
    Formula::pred0("q")
}

fn r() -> Formula {
    Formula::pred0("r")
}

fn p1(arg: Term) -> Formula {
    Formula::Pred { name: "p".into(), arity: 1, args: vec![arg] }
}

fn f() -> Term {
    Term::Func(FnRef::named("f", 0), vec![])
}

fn g() -> Term {
    Term::Func(FnRef::named("g", 0), vec![])
}

fn h() -> Term {
    Term::Func(FnRef::named("h", 0), vec![])
}

fn c() -> Term {
    Term::Func(FnRef::named("c", 0), vec![])
}

fn prog_a() -> Program {
    Program::Symbol("a".into())
}

fn prog_b() -> Program {
    Program::Symbol("b".into())
}

fn x() -> Var {
    Var::named("x")
}

fn y() -> Var {
    Var::named("y")
}

fn dt(t: Term) -> Term {
    Term::DiffT(Box::new(t))
}

fn db(along: Var, t: Term) -> Term {
    Term::DiffB(along, Box::new(t))
}

fn diamond(a: Program, f: Formula) -> Formula {
    Formula::diamond(a, f)
}

fn ind(f: Formula) -> Formula {
    crate::ast::sugar::core_ops::ind(f)
}

/// The canonical one-dimensional system `dx = f dt + g dW & q` used by
/// the differential-equation schemas.
fn canonical_sde(drift: Term, diffusion: Term) -> SdeSystem {
    SdeSystem {
        vars: vec![x()],
        drift: vec![drift],
        diffusion: vec![vec![diffusion]],
        boundary: q(),
    }
}

fn pathwise(id: &'static str, f: Formula) -> AxiomSchema {
    AxiomSchema { id, kind: AxiomKind::Pathwise, body: SchemaBody::Pathwise(f), side_condition: None }
}

fn probabilistic(id: &'static str, f: ProbFormula, side: Option<&'static str>) -> AxiomSchema {
    AxiomSchema { id, kind: AxiomKind::Probabilistic, body: SchemaBody::Probabilistic(f), side_condition: side }
}

pub fn axiom_catalog() -> Vec<AxiomSchema> {
    let mut out = Vec::new();

    // --- propositional structure ---------------------------------------
    out.push(pathwise("id", iff(p(), p())));
    out.push(pathwise("ho-eq-sym", iff(iff(p(), q()), iff(q(), p()))));
    out.push(pathwise("ho-eq-neg", iff(iff(p(), q()), iff(p().not(), q().not()))));
    out.push(pathwise("and-comm", iff(p().and(q()), q().and(p()))));
    out.push(pathwise("and-idem", iff(p(), p().and(p()))));
    out.push(pathwise(
        "and-assoc",
        iff(p().and(q()).and(r()), p().and(q().and(r()))),
    ));
    out.push(pathwise("and-weaken", implies(p().and(q()), p())));
    out.push(pathwise("double-neg", iff(p().not().not(), p())));
    out.push(pathwise("excluded-middle-sure", or(p().sure(), p().sure().not())));
    out.push(pathwise("sure-idem", iff(p().sure(), p().sure().sure())));
    out.push(pathwise("sure-elim", implies(p().sure(), p())));
    out.push(pathwise(
        "sure-conj-intro",
        implies(p().sure(), implies(q(), p().and(q()))),
    ));
    out.push(pathwise(
        "not-sure-cases",
        iff(p().sure().not(), or(p().not(), ind(p()))),
    ));
    out.push(pathwise(
        "sure-and",
        iff(p().and(q()).sure(), p().sure().and(q().sure())),
    ));

    // --- differential terms ---------------------------------------------
    out.push(pathwise("dt-const", eq_cmp(dt(c()), Term::Const(0.0))));
    out.push(pathwise("db-const", eq_cmp(db(x(), c()), Term::Const(0.0))));
    out.push(pathwise("dt-var", eq_cmp(dt(Term::Var(x())), Term::Var(x().time()))));
    out.push(pathwise(
        "db-var",
        eq_cmp(db(y(), Term::Var(x())), Term::Var(x().brownian(y()))),
    ));
    out.push(pathwise(
        "dt-plus",
        eq_cmp(dt(f().add(g())), dt(f()).add(dt(g()))),
    ));
    out.push(pathwise(
        "db-plus",
        eq_cmp(db(x(), f().add(g())), db(x(), f()).add(db(x(), g()))),
    ));
    // The covariation term vanishes on arity-0 symbols; it is kept for the
    // shape of the law, with the index ranging over the canonical variable.
    out.push(pathwise(
        "dt-times",
        eq_cmp(
            dt(f().mul(g())),
            g().mul(dt(f()))
                .add(f().mul(dt(g())))
                .add(db(x(), f()).mul(db(x(), g()))),
        ),
    ));
    out.push(pathwise(
        "db-times",
        eq_cmp(
            db(x(), f().mul(g())),
            g().mul(db(x(), f())).add(f().mul(db(x(), g()))),
        ),
    ));
    out.push(pathwise(
        "eq-subst-term",
        implies(eq_cmp(f(), g()), iff(p1(f()), p1(g()))),
    ));

    // --- ordered-field fragment -----------------------------------------
    let def2 = |a: Term, b: Term| defined(a).and(defined(b));
    let def3 = |a: Term, b: Term, c: Term| defined(a).and(defined(b)).and(defined(c));
    out.push(pathwise(
        "rcf-add-comm",
        implies(def2(f(), g()), eq_cmp(f().add(g()), g().add(f()))),
    ));
    out.push(pathwise(
        "rcf-mul-comm",
        implies(def2(f(), g()), eq_cmp(f().mul(g()), g().mul(f()))),
    ));
    out.push(pathwise(
        "rcf-distrib",
        implies(
            def3(f(), g(), h()),
            eq_cmp(f().mul(g().add(h())), f().mul(g()).add(f().mul(h()))),
        ),
    ));
    out.push(pathwise(
        "rcf-add-zero",
        implies(defined(f()), eq_cmp(f().add(Term::Const(0.0)), f())),
    ));
    out.push(pathwise(
        "rcf-mul-one",
        implies(defined(f()), eq_cmp(Term::Const(1.0).mul(f()), f())),
    ));
    out.push(pathwise("rcf-ge-refl", implies(defined(f()), Formula::geq(f(), f()))));
    out.push(pathwise(
        "rcf-ge-trans",
        implies(
            def3(f(), g(), h()),
            implies(
                Formula::geq(f(), g()).and(Formula::geq(g(), h())),
                Formula::geq(f(), h()),
            ),
        ),
    ));
    out.push(pathwise(
        "rcf-sq-nonneg",
        implies(defined(f()), Formula::geq(f().mul(f()), Term::Const(0.0))),
    ));

    // --- programs ---------------------------------------------------------
    out.push(pathwise(
        "skip-seq-left",
        iff(diamond(Program::Skip.seq(prog_a()), p()), diamond(prog_a(), p())),
    ));
    out.push(pathwise(
        "skip-seq-right",
        iff(diamond(prog_a(), p()), diamond(prog_a().seq(Program::Skip), p())),
    ));
    out.push(pathwise("skip-unit", iff(diamond(Program::Skip, p()), p())));
    out.push(pathwise("fail-seq", ind(diamond(Program::Fail.seq(prog_a()), p()))));
    out.push(pathwise("fail-unit", ind(diamond(Program::Fail, p()))));
    out.push(pathwise(
        "distrib-or",
        iff(
            diamond(prog_a(), or(p(), q())),
            or(diamond(prog_a(), p()), diamond(prog_a(), q())),
        ),
    ));
    out.push(pathwise(
        "choice",
        iff(
            diamond(prog_a().choice(prog_b()), p()),
            or(diamond(prog_a(), p()), diamond(prog_b(), p())),
        ),
    ));
    out.push(pathwise(
        "cond",
        iff(
            diamond(Program::If(q(), Box::new(prog_a()), Box::new(prog_b())), p()),
            or(
                q().and(or(ind(q()), diamond(prog_a(), p()))),
                q().not().and(or(ind(q()), diamond(prog_b(), p()))),
            ),
        ),
    ));
    out.push(pathwise(
        "iter-unfold",
        iff(
            diamond(prog_a().star(), p()),
            or(p(), diamond(prog_a().seq(prog_a().star()), p())),
        ),
    ));
    out.push(pathwise(
        "iter-induction",
        implies(
            box_mod(prog_a().star(), implies(p(), box_mod(prog_a(), p())).sure()),
            implies(p(), box_mod(prog_a().star(), p())).sure(),
        ),
    ));
    out.push(pathwise(
        "compose",
        iff(
            diamond(prog_a().seq(prog_b()), p()),
            diamond(prog_a(), diamond(prog_b(), p())),
        ),
    ));
    out.push(pathwise(
        "assign",
        implies(
            defined(f()),
            iff(
                box_mod(Program::Assign(x(), f()), p1(Term::Var(x()))),
                p1(f()),
            ),
        ),
    ));

    // --- differential equations -------------------------------------------
    let sde = || Program::Sde(canonical_sde(f(), g()));
    out.push(pathwise("sde-dw", or(crash(sde()), box_mod(sde(), q()))));
    out.push(pathwise(
        "sde-dc",
        implies(
            box_mod(Program::Sde(canonical_sde(f(), g())), r()).sure(),
            iff(
                box_mod(
                    Program::Sde(SdeSystem {
                        vars: vec![x()],
                        drift: vec![f()],
                        diffusion: vec![vec![g()]],
                        boundary: q().and(r()),
                    }),
                    p(),
                ),
                box_mod(sde(), p()),
            ),
        ),
    ));
    out.push(pathwise(
        "sde-de-t",
        box_mod(sde(), eq_cmp(dt(Term::Var(x())), f())),
    ));
    out.push(pathwise(
        "sde-de-b",
        box_mod(sde(), eq_cmp(db(x(), Term::Var(x())), g())),
    ));
    // Drift-only system: with the diffusion literally zero this is the
    // ordinary differential-invariant reduction. The boundary enters the
    // right-hand side under `sure` so an indeterminate guard cannot break
    // the equivalence.
    let ode = || Program::Sde(canonical_sde(h(), Term::Const(0.0)));
    out.push(pathwise(
        "sde-di",
        implies(
            box_mod(ode(), Formula::geq(dt(f()), dt(g()))),
            iff(
                box_mod(ode(), Formula::geq(f(), g())),
                implies(q().sure(), Formula::geq(f(), g())),
            ),
        ),
    ));

    // --- probability --------------------------------------------------------
    out.push(probabilistic(
        "p-nonneg",
        ProbFormula::ge(ProbTerm::prob(p()), ProbTerm::Const(0.0)),
        None,
    ));
    out.push(probabilistic(
        "p-neg",
        ProbFormula::le(
            ProbTerm::prob(p().not()),
            ProbTerm::Const(1.0).add(ProbTerm::Const(-1.0).mul(ProbTerm::prob(p()))),
        ),
        None,
    ));
    out.push(probabilistic(
        "p-mono-or",
        ProbFormula::ge(ProbTerm::prob(or(p(), q())), ProbTerm::prob(p())),
        None,
    ));
    out.push(probabilistic(
        "p-sure",
        ProbFormula::eq(ProbTerm::prob(p().sure()), ProbTerm::prob(p())),
        None,
    ));
    out.push(probabilistic(
        "p-randomize",
        ProbFormula::eq(
            ProbTerm::prob(diamond(Program::Random(x()), p())),
            ProbTerm::Sym("c".into()),
        ),
        Some("c equals the integral over s in [0,1] of P(<x := s> p) (not checked)"),
    ));

    out
}

pub fn lookup(id: &str) -> Option<AxiomSchema> {
    axiom_catalog().into_iter().find(|a| a.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::sugar::core_ops;

    #[test]
    fn catalog_ids_are_unique_and_wellformed() {
        let cat = axiom_catalog();
        let mut ids: Vec<_> = cat.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n, "duplicate axiom ids");
        for a in &cat {
            if let SchemaBody::Pathwise(f) = &a.body {
                assert!(
                    crate::ast::well_formed_formula(f).is_empty(),
                    "{} is ill-formed",
                    a.id
                );
            }
        }
        assert!(cat.len() >= 35, "catalog has {} schemas", cat.len());
    }

    #[test]
    fn lookup_finds_choice_shape() {
        let choice = lookup("choice").unwrap();
        let SchemaBody::Pathwise(f) = &choice.body else { panic!() };
        let want = core_ops::iff(
            Formula::diamond(
                Program::Symbol("a".into()).choice(Program::Symbol("b".into())),
                Formula::pred0("p"),
            ),
            core_ops::or(
                Formula::diamond(Program::Symbol("a".into()), Formula::pred0("p")),
                Formula::diamond(Program::Symbol("b".into()), Formula::pred0("p")),
            ),
        );
        assert_eq!(f, &want);
    }

    #[test]
    fn dt_plus_is_the_sum_rule() {
        let a = lookup("dt-plus").unwrap();
        let SchemaBody::Pathwise(fm) = &a.body else { panic!() };
        let want = eq_cmp(dt(f().add(g())), dt(f()).add(dt(g())));
        assert_eq!(fm, &want);
    }

    #[test]
    fn iter_unfold_shape() {
        let a = lookup("iter-unfold").unwrap();
        let SchemaBody::Pathwise(fm) = &a.body else { panic!() };
        let want = core_ops::iff(
            Formula::diamond(Program::Symbol("a".into()).star(), Formula::pred0("p")),
            core_ops::or(
                Formula::pred0("p"),
                Formula::diamond(
                    Program::Symbol("a".into()).seq(Program::Symbol("a".into()).star()),
                    Formula::pred0("p"),
                ),
            ),
        );
        assert_eq!(fm, &want);
    }

    #[test]
    fn randomization_axiom_carries_side_condition() {
        let a = lookup("p-randomize").unwrap();
        assert!(a.side_condition.is_some());
        assert_eq!(a.kind, AxiomKind::Probabilistic);
    }
}
