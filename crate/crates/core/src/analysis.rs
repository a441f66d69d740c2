//! Static analysis: symbol signatures, syntactic over-approximations of
//! read and write variables, and the admissibility check that guards
//! uniform substitution.

use std::collections::BTreeSet;

use crate::ast::{
    formula_vars, term_vars, FnRef, Formula, Program, SymKind, Term, Var,
};
use crate::subst::{apply_formula, apply_program, Substitution};

/// A set of variables, or the sound top element absorbing everything.
/// Program symbols have unconstrained semantics, so anything touching an
/// unresolved one goes to `All`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarSet {
    Finite(BTreeSet<Var>),
    All,
}

impl VarSet {
    pub fn empty() -> VarSet {
        VarSet::Finite(BTreeSet::new())
    }

    pub fn single(v: Var) -> VarSet {
        VarSet::Finite([v].into_iter().collect())
    }

    pub fn union(self, other: VarSet) -> VarSet {
        match (self, other) {
            (VarSet::All, _) | (_, VarSet::All) => VarSet::All,
            (VarSet::Finite(mut a), VarSet::Finite(b)) => {
                a.extend(b);
                VarSet::Finite(a)
            }
        }
    }

    pub fn insert(&mut self, v: Var) {
        if let VarSet::Finite(s) = self {
            s.insert(v);
        }
    }

    pub fn contains(&self, v: &Var) -> bool {
        match self {
            VarSet::All => true,
            VarSet::Finite(s) => s.contains(v),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, VarSet::Finite(s) if s.is_empty())
    }

    /// A witness of non-empty intersection, if any. When either side is
    /// `All`, any element of the other side serves; two `All`s witness
    /// with a canonical variable.
    pub fn meet_witness(&self, other: &VarSet) -> Option<Var> {
        match (self, other) {
            (VarSet::Finite(a), VarSet::Finite(b)) => a.iter().find(|v| b.contains(v)).cloned(),
            (VarSet::All, VarSet::Finite(b)) => b.iter().next().cloned(),
            (VarSet::Finite(a), VarSet::All) => a.iter().next().cloned(),
            (VarSet::All, VarSet::All) => Some(Var::named("x")),
        }
    }

    pub fn subset_of(&self, other: &VarSet) -> bool {
        match (self, other) {
            (_, VarSet::All) => true,
            (VarSet::All, VarSet::Finite(_)) => false,
            (VarSet::Finite(a), VarSet::Finite(b)) => a.is_subset(b),
        }
    }
}

/// One symbol occurrence class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SymRef {
    pub kind: SymKind,
    pub name: String,
    pub arity: u8,
}

pub type Signature = BTreeSet<SymRef>;

pub fn sig_term(t: &Term, out: &mut Signature) {
    match t {
        Term::Const(_) | Term::Var(_) => {}
        Term::Add(a, b) | Term::Mul(a, b) => {
            sig_term(a, out);
            sig_term(b, out);
        }
        Term::Func(FnRef::Named { name, arity }, args) => {
            out.insert(SymRef { kind: SymKind::Fn, name: name.clone(), arity: *arity });
            for a in args {
                sig_term(a, out);
            }
        }
        Term::Func(FnRef::Marker(_), args) => {
            for a in args {
                sig_term(a, out);
            }
        }
        Term::DiffT(a) => sig_term(a, out),
        Term::DiffB(_, a) => sig_term(a, out),
        Term::Iota { body, .. } => sig_formula(body, out),
    }
}

pub fn sig_program(p: &Program, out: &mut Signature) {
    match p {
        Program::Assign(_, t) => sig_term(t, out),
        Program::Random(_) | Program::Skip | Program::Fail => {}
        Program::Symbol(n) => {
            out.insert(SymRef { kind: SymKind::Prog, name: n.clone(), arity: 0 });
        }
        Program::Sde(s) => {
            for t in &s.drift {
                sig_term(t, out);
            }
            for t in s.diffusion.iter().flatten() {
                sig_term(t, out);
            }
            sig_formula(&s.boundary, out);
        }
        Program::If(h, a, b) => {
            sig_formula(h, out);
            sig_program(a, out);
            sig_program(b, out);
        }
        Program::Choice(a, b) | Program::Seq(a, b) => {
            sig_program(a, out);
            sig_program(b, out);
        }
        Program::Star(a) => sig_program(a, out),
    }
}

pub fn sig_formula(f: &Formula, out: &mut Signature) {
    match f {
        Formula::Geq(a, b) => {
            sig_term(a, out);
            sig_term(b, out);
        }
        Formula::Not(x) | Formula::Sure(x) => sig_formula(x, out),
        Formula::And(a, b) => {
            sig_formula(a, out);
            sig_formula(b, out);
        }
        Formula::Pred { name, arity, args } => {
            out.insert(SymRef { kind: SymKind::Pred, name: name.clone(), arity: *arity });
            for a in args {
                sig_term(a, out);
            }
        }
        Formula::Diamond(p, x) => {
            sig_program(p, out);
            sig_formula(x, out);
        }
    }
}

/// Variables occurring anywhere in the expression, used as the finite
/// index range for differential subscripts.
fn occ_term(t: &Term) -> BTreeSet<Var> {
    let mut s = BTreeSet::new();
    term_vars(t, &mut s);
    s
}

/// Read variables of a term: a syntactic superset of the variables whose
/// value can influence evaluation. Differentials also read the time and
/// Brownian subscripts of the variables in their argument, with the
/// Brownian index ranging over `occ`, the variables occurring in the
/// enclosing expression.
fn rv_term_in(t: &Term, occ: &BTreeSet<Var>) -> BTreeSet<Var> {
    match t {
        Term::Const(_) => BTreeSet::new(),
        Term::Var(v) => [v.clone()].into_iter().collect(),
        Term::Add(a, b) | Term::Mul(a, b) => {
            let mut s = rv_term_in(a, occ);
            s.extend(rv_term_in(b, occ));
            s
        }
        Term::Func(_, args) => {
            let mut s = BTreeSet::new();
            for a in args {
                s.extend(rv_term_in(a, occ));
            }
            s
        }
        Term::DiffT(body) => {
            let inner = rv_term_in(body, occ);
            let mut s = inner.clone();
            for y in &inner {
                s.insert(y.clone().time());
                for j in occ {
                    s.insert(y.clone().brownian(j.clone()));
                }
            }
            s
        }
        Term::DiffB(along, body) => {
            let inner = rv_term_in(body, occ);
            let mut s = inner.clone();
            s.insert(along.clone());
            for y in &inner {
                s.insert(y.clone().brownian(along.clone()));
            }
            s
        }
        Term::Iota { tag, body, .. } => rv_formula_in(body, occ)
            .into_iter()
            .filter(|v| !v.is_slot_of(*tag) && !v.involves_slot())
            .collect(),
    }
}

fn rv_formula_in(f: &Formula, occ: &BTreeSet<Var>) -> BTreeSet<Var> {
    match f {
        Formula::Geq(a, b) => {
            let mut s = rv_term_in(a, occ);
            s.extend(rv_term_in(b, occ));
            s
        }
        Formula::Not(x) | Formula::Sure(x) => rv_formula_in(x, occ),
        Formula::And(a, b) => {
            let mut s = rv_formula_in(a, occ);
            s.extend(rv_formula_in(b, occ));
            s
        }
        Formula::Pred { args, .. } => {
            let mut s = BTreeSet::new();
            for a in args {
                s.extend(rv_term_in(a, occ));
            }
            s
        }
        Formula::Diamond(..) => BTreeSet::new(), // handled by rv_formula
    }
}

pub fn rv_term(t: &Term) -> VarSet {
    VarSet::Finite(rv_term_in(t, &occ_term(t)))
}

pub fn rv_program(p: &Program) -> VarSet {
    let mut occ = BTreeSet::new();
    crate::ast::program_vars(p, &mut occ);
    rv_program_in(p, &occ)
}

fn rv_program_in(p: &Program, occ: &BTreeSet<Var>) -> VarSet {
    match p {
        Program::Assign(_, t) => VarSet::Finite(rv_term_in(t, occ)),
        Program::Random(_) | Program::Skip | Program::Fail => VarSet::empty(),
        Program::Symbol(_) => VarSet::All,
        Program::Sde(s) => {
            let mut set: BTreeSet<Var> = s.vars.iter().cloned().collect();
            for t in &s.drift {
                set.extend(rv_term_in(t, occ));
            }
            for t in s.diffusion.iter().flatten() {
                set.extend(rv_term_in(t, occ));
            }
            VarSet::Finite(set).union(rv_formula_full(&s.boundary, occ))
        }
        Program::If(h, a, b) => rv_formula_full(h, occ)
            .union(rv_program_in(a, occ))
            .union(rv_program_in(b, occ)),
        Program::Choice(a, b) | Program::Seq(a, b) => {
            rv_program_in(a, occ).union(rv_program_in(b, occ))
        }
        Program::Star(a) => rv_program_in(a, occ),
    }
}

fn rv_formula_full(f: &Formula, occ: &BTreeSet<Var>) -> VarSet {
    match f {
        Formula::Diamond(p, x) => rv_program_in(p, occ).union(rv_formula_full(x, occ)),
        Formula::Not(x) | Formula::Sure(x) => rv_formula_full(x, occ),
        Formula::And(a, b) => rv_formula_full(a, occ).union(rv_formula_full(b, occ)),
        other => VarSet::Finite(rv_formula_in(other, occ)),
    }
}

pub fn rv_formula(f: &Formula) -> VarSet {
    let mut occ = BTreeSet::new();
    formula_vars(f, &mut occ);
    rv_formula_full(f, &occ)
}

/// Write variables of a program: everything any run may change. The
/// integrator also assigns the differential subscripts of its vector.
pub fn wv_program(p: &Program) -> VarSet {
    match p {
        Program::Assign(v, _) | Program::Random(v) => VarSet::single(v.clone()),
        Program::Skip | Program::Fail => VarSet::empty(),
        Program::Symbol(_) => VarSet::All,
        Program::Sde(s) => {
            let mut set = BTreeSet::new();
            for x in &s.vars {
                set.insert(x.clone());
                set.insert(x.clone().time());
                for j in &s.vars {
                    set.insert(x.clone().brownian(j.clone()));
                }
            }
            VarSet::Finite(set)
        }
        Program::If(_, a, b) | Program::Choice(a, b) | Program::Seq(a, b) => {
            wv_program(a).union(wv_program(b))
        }
        Program::Star(a) => wv_program(a),
    }
}

/// Write variables of a formula: the union over its program
/// subexpressions.
pub fn wv_formula(f: &Formula) -> VarSet {
    match f {
        Formula::Geq(..) | Formula::Pred { .. } => VarSet::empty(),
        Formula::Not(x) | Formula::Sure(x) => wv_formula(x),
        Formula::And(a, b) => wv_formula(a).union(wv_formula(b)),
        Formula::Diamond(p, x) => wv_program(p).union(wv_formula(x)),
    }
}

/// The read variables a substitution introduces into `e`: the union of
/// the read variables of the replacements of symbols shared between the
/// substitution's domain and `e`'s signature.
pub fn rv_of_subst(sigma: &Substitution, sig: &Signature) -> VarSet {
    let mut acc = VarSet::empty();
    for sym in sig {
        match sym.kind {
            SymKind::Fn => {
                if let Some(rep) = sigma.fns.get(&(sym.name.clone(), sym.arity)) {
                    acc = acc.union(rv_term(rep));
                }
            }
            SymKind::Pred => {
                if let Some(rep) = sigma.preds.get(&(sym.name.clone(), sym.arity)) {
                    acc = acc.union(rv_formula(rep));
                }
            }
            SymKind::Prog => {
                if let Some(rep) = sigma.progs.get(&sym.name) {
                    acc = acc.union(rv_program(rep));
                }
            }
        }
    }
    acc
}

/// A subexpression that may write variables.
#[derive(Debug, Clone, PartialEq)]
pub enum SubExpr {
    Prog(Program),
    Form(Formula),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Admissibility {
    Ok,
    Clash { subexpr: SubExpr, var: Var },
}

impl Admissibility {
    pub fn is_ok(&self) -> bool {
        matches!(self, Admissibility::Ok)
    }
}

fn walk_formula<'a>(f: &'a Formula, out: &mut Vec<SubExpr>) {
    out.push(SubExpr::Form(f.clone()));
    match f {
        Formula::Geq(..) | Formula::Pred { .. } => {}
        Formula::Not(x) | Formula::Sure(x) => walk_formula(x, out),
        Formula::And(a, b) => {
            walk_formula(a, out);
            walk_formula(b, out);
        }
        Formula::Diamond(p, x) => {
            walk_program(p, out);
            walk_formula(x, out);
        }
    }
}

fn walk_program<'a>(p: &'a Program, out: &mut Vec<SubExpr>) {
    out.push(SubExpr::Prog(p.clone()));
    match p {
        Program::Assign(..)
        | Program::Random(_)
        | Program::Skip
        | Program::Fail
        | Program::Symbol(_) => {}
        Program::Sde(s) => walk_formula(&s.boundary, out),
        Program::If(h, a, b) => {
            walk_formula(h, out);
            walk_program(a, out);
            walk_program(b, out);
        }
        Program::Choice(a, b) | Program::Seq(a, b) => {
            walk_program(a, out);
            walk_program(b, out);
        }
        Program::Star(a) => walk_program(a, out),
    }
}

fn admissible_on(sigma: &Substitution, sig: &Signature, subs: Vec<SubExpr>) -> Admissibility {
    let reads = rv_of_subst(sigma, sig);
    if reads.is_empty() {
        return Admissibility::Ok;
    }
    for sub in subs {
        let writes = match &sub {
            SubExpr::Prog(p) => wv_program(&apply_program(sigma, p)),
            SubExpr::Form(f) => wv_formula(&apply_formula(sigma, f)),
        };
        if let Some(var) = reads.meet_witness(&writes) {
            return Admissibility::Clash { subexpr: sub, var };
        }
    }
    Admissibility::Ok
}

/// Admissibility of `sigma` for a formula: the reads the substitution
/// introduces must be disjoint from the writes of every substituted
/// subexpression.
pub fn admissible_formula(sigma: &Substitution, f: &Formula) -> Admissibility {
    let mut sig = Signature::new();
    sig_formula(f, &mut sig);
    let mut subs = Vec::new();
    walk_formula(f, &mut subs);
    admissible_on(sigma, &sig, subs)
}

pub fn admissible_program(sigma: &Substitution, p: &Program) -> Admissibility {
    let mut sig = Signature::new();
    sig_program(p, &mut sig);
    let mut subs = Vec::new();
    walk_program(p, &mut subs);
    admissible_on(sigma, &sig, subs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Term;

    #[test]
    fn sig_collects_symbols_by_kind() {
        let f = Formula::geq(
            Term::Func(FnRef::named("f", 1), vec![Term::var("x")]),
            Term::Const(0.0),
        )
        .and(Formula::pred0("p"));
        let mut s = Signature::new();
        sig_formula(&f, &mut s);
        assert_eq!(s.len(), 2);
        assert!(s.contains(&SymRef { kind: SymKind::Fn, name: "f".into(), arity: 1 }));
        assert!(s.contains(&SymRef { kind: SymKind::Pred, name: "p".into(), arity: 0 }));

        let g = Formula::diamond(
            Program::Symbol("g".into()),
            Formula::geq(Term::var("x"), Term::Const(0.0)),
        );
        let mut s2 = Signature::new();
        sig_formula(&g, &mut s2);
        assert!(s2.contains(&SymRef { kind: SymKind::Prog, name: "g".into(), arity: 0 }));
        assert_eq!(s2.len(), 1);
    }

    #[test]
    fn rv_of_sum_is_both_variables() {
        let t = Term::var("x").add(Term::var("y"));
        assert_eq!(
            rv_term(&t),
            VarSet::Finite([Var::named("x"), Var::named("y")].into_iter().collect())
        );
    }

    #[test]
    fn wv_of_skip_is_empty_and_symbol_is_all() {
        assert!(wv_program(&Program::Skip).is_empty());
        assert_eq!(wv_program(&Program::Symbol("g".into())), VarSet::All);
    }

    #[test]
    fn differential_reads_subscripts() {
        let t = Term::DiffT(Box::new(Term::var("x")));
        let rv = rv_term(&t);
        assert!(rv.contains(&Var::named("x")));
        assert!(rv.contains(&Var::named("x").time()));
        assert!(rv.contains(&Var::named("x").brownian(Var::named("x"))));
    }

    #[test]
    fn sde_writes_vector_and_subscripts() {
        let sde = crate::ast::SdeSystem {
            vars: vec![Var::named("x")],
            drift: vec![Term::Const(1.0)],
            diffusion: vec![vec![Term::Const(0.0)]],
            boundary: Formula::geq(Term::Const(0.0), Term::Const(0.0)),
        };
        let wv = wv_program(&Program::Sde(sde));
        assert!(wv.contains(&Var::named("x")));
        assert!(wv.contains(&Var::named("x").time()));
        assert!(wv.contains(&Var::named("x").brownian(Var::named("x"))));
    }

    #[test]
    fn clash_example_from_assignments() {
        // sigma: p |-> (x >= 0), e = <x := 1> p : x is written and read
        let mut sigma = Substitution::new();
        sigma.map_pred("p", 0, Formula::geq(Term::var("x"), Term::Const(0.0)));
        let e = Formula::diamond(
            Program::Assign(Var::named("x"), Term::Const(1.0)),
            Formula::pred0("p"),
        );
        match admissible_formula(&sigma, &e) {
            Admissibility::Clash { var, .. } => assert_eq!(var, Var::named("x")),
            other => panic!("expected clash, got {other:?}"),
        }
    }

    #[test]
    fn disjoint_variables_are_admissible() {
        let mut sigma = Substitution::new();
        sigma.map_pred("p", 0, Formula::geq(Term::var("y"), Term::Const(0.0)));
        let e = Formula::diamond(
            Program::Assign(Var::named("x"), Term::Const(1.0)),
            Formula::pred0("p"),
        );
        assert!(admissible_formula(&sigma, &e).is_ok());
    }

    #[test]
    fn identity_is_admissible_for_anything() {
        let sigma = Substitution::new();
        let e = Formula::diamond(
            Program::Symbol("g".into()),
            Formula::pred0("p"),
        );
        assert!(admissible_formula(&sigma, &e).is_ok());
    }

    #[test]
    fn monotonicity_of_rv_on_subterms() {
        let sub = Term::DiffT(Box::new(Term::var("x").mul(Term::var("y"))));
        let whole = sub.clone().add(Term::var("z"));
        assert!(rv_term(&sub).subset_of(&rv_term(&whole)));
    }
}
