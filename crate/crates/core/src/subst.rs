//! Uniform substitutions: replacement of function, predicate, and program
//! symbols, validated against the marker discipline, applied recursively,
//! and reflected into adjoint interpretations for testing.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::ast::{
    free_vars_term, FnRef, Formula, MarkerKey, Program, SdeSystem, SymKind, Term,
};
use crate::prob::{ProbFormula, ProbTerm};
use crate::sim::{FnMeaning, Interp, PredMeaning, ProgMeaning, Valuation};

static NEXT_SUBST_ID: AtomicU64 = AtomicU64::new(1);

/// A uniform substitution. Symbols not listed map to themselves. The
/// replacement for a function symbol of arity `d` may mention only that
/// symbol's `d` reserved markers among 0-ary function symbols and no
/// variables; a predicate replacement may read variables but is subject
/// to the same marker discipline; a program replacement is any program.
#[derive(Debug, Clone)]
pub struct Substitution {
    id: u64,
    pub fns: BTreeMap<(String, u8), Term>,
    pub preds: BTreeMap<(String, u8), Formula>,
    pub progs: BTreeMap<String, Program>,
}

impl Default for Substitution {
    fn default() -> Self {
        Substitution::new()
    }
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution {
            id: NEXT_SUBST_ID.fetch_add(1, Ordering::Relaxed),
            fns: BTreeMap::new(),
            preds: BTreeMap::new(),
            progs: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn is_identity(&self) -> bool {
        self.fns.is_empty() && self.preds.is_empty() && self.progs.is_empty()
    }

    /// The reserved marker for argument `index` (1-based) of a symbol this
    /// substitution replaces.
    pub fn marker(&self, kind: SymKind, name: &str, arity: u8, index: u8) -> MarkerKey {
        MarkerKey { subst: self.id, kind, name: name.to_string(), arity, index }
    }

    pub fn marker_term(&self, kind: SymKind, name: &str, arity: u8, index: u8) -> Term {
        Term::Func(FnRef::Marker(self.marker(kind, name, arity, index)), vec![])
    }

    pub fn map_fn(&mut self, name: &str, arity: u8, replacement: Term) {
        self.fns.insert((name.to_string(), arity), replacement);
    }

    pub fn map_pred(&mut self, name: &str, arity: u8, replacement: Formula) {
        self.preds.insert((name.to_string(), arity), replacement);
    }

    pub fn map_prog(&mut self, name: &str, replacement: Program) {
        self.progs.insert(name.to_string(), replacement);
    }

    /// Symbols the substitution does not map to themselves.
    pub fn domain(&self) -> Vec<(SymKind, String, u8)> {
        let mut out = Vec::new();
        for (n, a) in self.fns.keys() {
            out.push((SymKind::Fn, n.clone(), *a));
        }
        for (n, a) in self.preds.keys() {
            out.push((SymKind::Pred, n.clone(), *a));
        }
        for n in self.progs.keys() {
            out.push((SymKind::Prog, n.clone(), 0));
        }
        out
    }
}

/// Marker occurrences in a replacement, plus named 0-ary function symbols.
fn scan_term(t: &Term, markers: &mut Vec<MarkerKey>, zero_ary: &mut Vec<String>) {
    match t {
        Term::Const(_) | Term::Var(_) => {}
        Term::Add(a, b) | Term::Mul(a, b) => {
            scan_term(a, markers, zero_ary);
            scan_term(b, markers, zero_ary);
        }
        Term::Func(FnRef::Marker(k), args) => {
            markers.push(k.clone());
            for a in args {
                scan_term(a, markers, zero_ary);
            }
        }
        Term::Func(FnRef::Named { name, arity }, args) => {
            if *arity == 0 {
                zero_ary.push(name.clone());
            }
            for a in args {
                scan_term(a, markers, zero_ary);
            }
        }
        Term::DiffT(a) => scan_term(a, markers, zero_ary),
        Term::DiffB(_, a) => scan_term(a, markers, zero_ary),
        Term::Iota { body, .. } => scan_formula(body, markers, zero_ary),
    }
}

fn scan_formula(f: &Formula, markers: &mut Vec<MarkerKey>, zero_ary: &mut Vec<String>) {
    match f {
        Formula::Geq(a, b) => {
            scan_term(a, markers, zero_ary);
            scan_term(b, markers, zero_ary);
        }
        Formula::Not(x) | Formula::Sure(x) => scan_formula(x, markers, zero_ary),
        Formula::And(a, b) => {
            scan_formula(a, markers, zero_ary);
            scan_formula(b, markers, zero_ary);
        }
        Formula::Pred { args, .. } => {
            for a in args {
                scan_term(a, markers, zero_ary);
            }
        }
        Formula::Diamond(p, x) => {
            scan_program(p, markers, zero_ary);
            scan_formula(x, markers, zero_ary);
        }
    }
}

fn scan_program(p: &Program, markers: &mut Vec<MarkerKey>, zero_ary: &mut Vec<String>) {
    match p {
        Program::Assign(_, t) => scan_term(t, markers, zero_ary),
        Program::Random(_) | Program::Skip | Program::Fail | Program::Symbol(_) => {}
        Program::Sde(s) => {
            for t in &s.drift {
                scan_term(t, markers, zero_ary);
            }
            for t in s.diffusion.iter().flatten() {
                scan_term(t, markers, zero_ary);
            }
            scan_formula(&s.boundary, markers, zero_ary);
        }
        Program::If(h, a, b) => {
            scan_formula(h, markers, zero_ary);
            scan_program(a, markers, zero_ary);
            scan_program(b, markers, zero_ary);
        }
        Program::Choice(a, b) | Program::Seq(a, b) => {
            scan_program(a, markers, zero_ary);
            scan_program(b, markers, zero_ary);
        }
        Program::Star(a) => scan_program(a, markers, zero_ary),
    }
}

/// Checks the replacement discipline. An empty report means the
/// substitution is valid for use by the kernel.
pub fn validate(sigma: &Substitution) -> Vec<String> {
    let mut out = Vec::new();
    for ((name, arity), rep) in &sigma.fns {
        let vars = free_vars_term(rep);
        if let Some(v) = vars.iter().next() {
            out.push(format!("f {name}@{arity}: variable {v} in replacement"));
        }
        let mut markers = Vec::new();
        let mut zero = Vec::new();
        scan_term(rep, &mut markers, &mut zero);
        if let Some(z) = zero.first() {
            out.push(format!("f {name}@{arity}: 0-ary function symbol {z}@0 in replacement"));
        }
        for m in markers {
            let own = m.subst == sigma.id
                && m.kind == SymKind::Fn
                && m.name == *name
                && m.arity == *arity
                && (1..=*arity).contains(&m.index);
            if !own {
                out.push(format!("f {name}@{arity}: foreign marker o{} in replacement", m.index));
            }
        }
    }
    for ((name, arity), rep) in &sigma.preds {
        let mut markers = Vec::new();
        let mut zero = Vec::new();
        scan_formula(rep, &mut markers, &mut zero);
        if let Some(z) = zero.first() {
            out.push(format!("p {name}@{arity}: 0-ary function symbol {z}@0 in replacement"));
        }
        for m in markers {
            let own = m.subst == sigma.id
                && m.kind == SymKind::Pred
                && m.name == *name
                && m.arity == *arity
                && (1..=*arity).contains(&m.index);
            if !own {
                out.push(format!("p {name}@{arity}: foreign marker o{} in replacement", m.index));
            }
        }
    }
    out
}

fn graft_term(body: &Term, bind: &BTreeMap<MarkerKey, Term>) -> Term {
    match body {
        Term::Func(FnRef::Marker(k), _) if bind.contains_key(k) => bind[k].clone(),
        Term::Const(_) | Term::Var(_) | Term::Func(_, _) => match body {
            Term::Func(f, args) => {
                Term::Func(f.clone(), args.iter().map(|a| graft_term(a, bind)).collect())
            }
            other => other.clone(),
        },
        Term::Add(a, b) => graft_term(a, bind).add(graft_term(b, bind)),
        Term::Mul(a, b) => graft_term(a, bind).mul(graft_term(b, bind)),
        Term::DiffT(a) => Term::DiffT(Box::new(graft_term(a, bind))),
        Term::DiffB(v, a) => Term::DiffB(v.clone(), Box::new(graft_term(a, bind))),
        Term::Iota { tag, select, arity, body } => Term::Iota {
            tag: *tag,
            select: *select,
            arity: *arity,
            body: Box::new(graft_formula(body, bind)),
        },
    }
}

fn graft_formula(body: &Formula, bind: &BTreeMap<MarkerKey, Term>) -> Formula {
    match body {
        Formula::Geq(a, b) => Formula::geq(graft_term(a, bind), graft_term(b, bind)),
        Formula::Not(x) => graft_formula(x, bind).not(),
        Formula::And(a, b) => graft_formula(a, bind).and(graft_formula(b, bind)),
        Formula::Sure(x) => graft_formula(x, bind).sure(),
        Formula::Pred { name, arity, args } => Formula::Pred {
            name: name.clone(),
            arity: *arity,
            args: args.iter().map(|a| graft_term(a, bind)).collect(),
        },
        Formula::Diamond(p, x) => {
            Formula::diamond(graft_program(p, bind), graft_formula(x, bind))
        }
    }
}

fn graft_program(body: &Program, bind: &BTreeMap<MarkerKey, Term>) -> Program {
    match body {
        Program::Assign(v, t) => Program::Assign(v.clone(), graft_term(t, bind)),
        Program::Random(v) => Program::Random(v.clone()),
        Program::Sde(s) => Program::Sde(SdeSystem {
            vars: s.vars.clone(),
            drift: s.drift.iter().map(|t| graft_term(t, bind)).collect(),
            diffusion: s
                .diffusion
                .iter()
                .map(|r| r.iter().map(|t| graft_term(t, bind)).collect())
                .collect(),
            boundary: graft_formula(&s.boundary, bind),
        }),
        Program::If(h, a, b) => Program::If(
            graft_formula(h, bind),
            Box::new(graft_program(a, bind)),
            Box::new(graft_program(b, bind)),
        ),
        Program::Choice(a, b) => graft_program(a, bind).choice(graft_program(b, bind)),
        Program::Seq(a, b) => graft_program(a, bind).seq(graft_program(b, bind)),
        Program::Star(a) => graft_program(a, bind).star(),
        Program::Skip => Program::Skip,
        Program::Fail => Program::Fail,
        Program::Symbol(n) => Program::Symbol(n.clone()),
    }
}

/// Applies the substitution to a term. Application is total; admissibility
/// is a separate side condition checked by the kernel.
pub fn apply_term(sigma: &Substitution, t: &Term) -> Term {
    match t {
        Term::Const(_) | Term::Var(_) => t.clone(),
        Term::Add(a, b) => apply_term(sigma, a).add(apply_term(sigma, b)),
        Term::Mul(a, b) => apply_term(sigma, a).mul(apply_term(sigma, b)),
        Term::DiffT(a) => Term::DiffT(Box::new(apply_term(sigma, a))),
        Term::DiffB(v, a) => Term::DiffB(v.clone(), Box::new(apply_term(sigma, a))),
        Term::Func(FnRef::Marker(_), _) => t.clone(),
        Term::Func(FnRef::Named { name, arity }, args) => {
            let new_args: Vec<Term> = args.iter().map(|a| apply_term(sigma, a)).collect();
            match sigma.fns.get(&(name.clone(), *arity)) {
                None => Term::Func(FnRef::named(name.clone(), *arity), new_args),
                Some(rep) => {
                    let bind: BTreeMap<MarkerKey, Term> = (1..=*arity)
                        .map(|i| {
                            (
                                sigma.marker(SymKind::Fn, name, *arity, i),
                                new_args[usize::from(i) - 1].clone(),
                            )
                        })
                        .collect();
                    graft_term(rep, &bind)
                }
            }
        }
        Term::Iota { tag, select, arity, body } => Term::Iota {
            tag: *tag,
            select: *select,
            arity: *arity,
            body: Box::new(apply_formula(sigma, body)),
        },
    }
}

pub fn apply_program(sigma: &Substitution, p: &Program) -> Program {
    match p {
        Program::Assign(v, t) => Program::Assign(v.clone(), apply_term(sigma, t)),
        Program::Random(_) | Program::Skip | Program::Fail => p.clone(),
        Program::Sde(s) => Program::Sde(SdeSystem {
            vars: s.vars.clone(),
            drift: s.drift.iter().map(|t| apply_term(sigma, t)).collect(),
            diffusion: s
                .diffusion
                .iter()
                .map(|r| r.iter().map(|t| apply_term(sigma, t)).collect())
                .collect(),
            boundary: apply_formula(sigma, &s.boundary),
        }),
        Program::If(h, a, b) => Program::If(
            apply_formula(sigma, h),
            Box::new(apply_program(sigma, a)),
            Box::new(apply_program(sigma, b)),
        ),
        Program::Choice(a, b) => apply_program(sigma, a).choice(apply_program(sigma, b)),
        Program::Seq(a, b) => apply_program(sigma, a).seq(apply_program(sigma, b)),
        Program::Star(a) => apply_program(sigma, a).star(),
        Program::Symbol(n) => match sigma.progs.get(n) {
            None => p.clone(),
            Some(rep) => rep.clone(),
        },
    }
}

pub fn apply_formula(sigma: &Substitution, f: &Formula) -> Formula {
    match f {
        Formula::Geq(a, b) => Formula::geq(apply_term(sigma, a), apply_term(sigma, b)),
        Formula::Not(x) => apply_formula(sigma, x).not(),
        Formula::And(a, b) => apply_formula(sigma, a).and(apply_formula(sigma, b)),
        Formula::Sure(x) => apply_formula(sigma, x).sure(),
        Formula::Diamond(p, x) => {
            Formula::diamond(apply_program(sigma, p), apply_formula(sigma, x))
        }
        Formula::Pred { name, arity, args } => {
            let new_args: Vec<Term> = args.iter().map(|a| apply_term(sigma, a)).collect();
            match sigma.preds.get(&(name.clone(), *arity)) {
                None => Formula::Pred { name: name.clone(), arity: *arity, args: new_args },
                Some(rep) => {
                    let bind: BTreeMap<MarkerKey, Term> = (1..=*arity)
                        .map(|i| {
                            (
                                sigma.marker(SymKind::Pred, name, *arity, i),
                                new_args[usize::from(i) - 1].clone(),
                            )
                        })
                        .collect();
                    graft_formula(rep, &bind)
                }
            }
        }
    }
}

/// Rewrites every probability atom `P(phi)` to `P([sigma phi])`; the
/// arithmetic skeleton is untouched except for 0-ary symbol leaves, which
/// substitute like terms.
pub fn apply_prob(sigma: &Substitution, spade: &ProbFormula) -> ProbFormula {
    fn go(sigma: &Substitution, t: &ProbTerm) -> ProbTerm {
        match t {
            ProbTerm::Const(c) => ProbTerm::Const(*c),
            ProbTerm::Add(a, b) => {
                ProbTerm::Add(Box::new(go(sigma, a)), Box::new(go(sigma, b)))
            }
            ProbTerm::Mul(a, b) => {
                ProbTerm::Mul(Box::new(go(sigma, a)), Box::new(go(sigma, b)))
            }
            ProbTerm::Prob(f) => ProbTerm::Prob(apply_formula(sigma, f)),
            ProbTerm::Sym(name) => match sigma.fns.get(&(name.clone(), 0)) {
                Some(Term::Const(c)) => ProbTerm::Const(*c),
                _ => ProbTerm::Sym(name.clone()),
            },
        }
    }
    ProbFormula {
        op: spade.op,
        lhs: go(sigma, &spade.lhs),
        rhs: go(sigma, &spade.rhs),
    }
}

/// The adjoint interpretation: gives unsubstituted symbols the semantics
/// of their replacements. Function and predicate meanings evaluate the
/// replacement at the captured valuation with markers bound to the
/// argument vector; program meanings run the applied replacement under
/// the base interpretation. Stop times are preserved.
pub fn adjoint(sigma: &Substitution, base: &Interp, at: &Valuation) -> Interp {
    let base_arc = Arc::new(base.clone());
    let mut out = base.clone();
    for ((name, arity), rep) in &sigma.fns {
        let markers: Vec<MarkerKey> =
            (1..=*arity).map(|i| sigma.marker(SymKind::Fn, name, *arity, i)).collect();
        out.fns.insert(
            (name.clone(), *arity),
            FnMeaning::Expr {
                body: rep.clone(),
                env: Arc::clone(&base_arc),
                at: at.clone(),
                markers,
            },
        );
    }
    for ((name, arity), rep) in &sigma.preds {
        let markers: Vec<MarkerKey> =
            (1..=*arity).map(|i| sigma.marker(SymKind::Pred, name, *arity, i)).collect();
        out.preds.insert(
            (name.clone(), *arity),
            PredMeaning::Expr {
                body: rep.clone(),
                env: Arc::clone(&base_arc),
                at: at.clone(),
                markers,
            },
        );
    }
    for (name, rep) in &sigma.progs {
        out.progs.insert(
            name.clone(),
            ProgMeaning { body: apply_program(sigma, rep), env: Some(Arc::clone(&base_arc)) },
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Var;
    use crate::sim::{eval_term, EvalLimits, RealBot};

    #[test]
    fn validate_accepts_marker_polynomial() {
        let mut s = Substitution::new();
        let m = s.marker_term(SymKind::Fn, "f", 1, 1);
        s.map_fn("f", 1, m.clone().add(m));
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn validate_rejects_variable_in_fn_replacement() {
        let mut s = Substitution::new();
        let m = s.marker_term(SymKind::Fn, "f", 1, 1);
        s.map_fn("f", 1, m.add(Term::var("x")));
        let errs = validate(&s);
        assert!(errs.iter().any(|e| e.contains("variable x")), "{errs:?}");
    }

    #[test]
    fn validate_rejects_foreign_zero_ary_symbol() {
        let mut s = Substitution::new();
        let m = s.marker_term(SymKind::Pred, "p", 1, 1);
        s.map_pred(
            "p",
            1,
            Formula::geq(m, Term::Func(FnRef::named("c", 0), vec![])),
        );
        let errs = validate(&s);
        assert!(errs.iter().any(|e| e.contains("c@0")), "{errs:?}");
    }

    #[test]
    fn variables_allowed_in_pred_replacement() {
        let mut s = Substitution::new();
        s.map_pred("p", 0, Formula::geq(Term::var("x"), Term::Const(0.0)));
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn apply_fn_grafts_arguments_into_markers() {
        let mut s = Substitution::new();
        s.map_fn("f", 0, Term::Const(2.0));
        let t = Term::Func(FnRef::named("f", 0), vec![]).add(Term::var("x"));
        assert_eq!(apply_term(&s, &t), Term::Const(2.0).add(Term::var("x")));

        let mut s2 = Substitution::new();
        s2.map_pred("p", 1, Formula::geq(s2.marker_term(SymKind::Pred, "p", 1, 1), Term::Const(0.0)));
        let f = Formula::Pred {
            name: "p".into(),
            arity: 1,
            args: vec![Term::var("x").mul(Term::var("x"))],
        };
        assert_eq!(
            apply_formula(&s2, &f),
            Formula::geq(Term::var("x").mul(Term::var("x")), Term::Const(0.0))
        );
    }

    #[test]
    fn apply_prog_symbol_replaces_whole_program() {
        let mut s = Substitution::new();
        s.map_prog("a", Program::Assign(Var::named("x"), Term::Const(1.0)));
        let f = Formula::diamond(
            Program::Symbol("a".into()),
            Formula::geq(Term::var("x"), Term::Const(1.0)),
        );
        let got = apply_formula(&s, &f);
        let want = Formula::diamond(
            Program::Assign(Var::named("x"), Term::Const(1.0)),
            Formula::geq(Term::var("x"), Term::Const(1.0)),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn identity_is_a_fixpoint() {
        let s = Substitution::new();
        let f = Formula::diamond(
            Program::Symbol("a".into()),
            Formula::pred0("p").and(Formula::geq(Term::var("x"), Term::Const(0.0))),
        );
        assert_eq!(apply_formula(&s, &f), f);
    }

    #[test]
    fn adjoint_of_constant_fn_is_constant() {
        let mut s = Substitution::new();
        s.map_fn("f", 0, Term::Const(2.0));
        let i = Interp::new(vec![1.0], EvalLimits::default());
        let v = Valuation::empty();
        let adj = adjoint(&s, &i, &v);
        let t = Term::Func(FnRef::named("f", 0), vec![]);
        assert_eq!(eval_term(&adj, &v, &t), RealBot::Real(2.0));
    }

    #[test]
    fn adjoint_doubling_fn() {
        let mut s = Substitution::new();
        let m = s.marker_term(SymKind::Fn, "f", 1, 1);
        s.map_fn("f", 1, m.clone().add(m));
        let i = Interp::new(vec![1.0], EvalLimits::default());
        let v = Valuation::empty();
        let adj = adjoint(&s, &i, &v);
        let t = Term::Func(FnRef::named("f", 1), vec![Term::Const(3.0)]);
        assert_eq!(eval_term(&adj, &v, &t), RealBot::Real(6.0));
        let bot = Term::Func(FnRef::named("f", 1), vec![Term::var("missing")]);
        assert_eq!(eval_term(&adj, &v, &bot), RealBot::Bot);
    }
}
