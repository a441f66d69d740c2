//! Surface grammar and its elaboration into the core constructors.
//!
//! The surface layer adds the familiar derived connectives: disjunction,
//! box modality, implication, equivalence, `ind`, `crash`, and the extra
//! comparisons. Elaboration (`desugar`) rewrites them away:
//!
//! * `[a] p`      becomes `!<a>!p`
//! * `p | q`      becomes `!(!p & !q)`
//! * `ind(p)`     becomes `!sure(p) & !sure(!p)`
//! * `p -> q`     becomes `!p | q | (ind(p) & ind(q))`
//! * `p <-> q`    becomes `(p -> q) & (q -> p)`
//! * `crash(a)`   becomes `ind([a] 0 >= 0)`
//! * `s = t`      becomes `s >= t & t >= s`
//! * `s <= t`     becomes `t >= s`
//! * `s < t`      becomes `!(s >= t)`
//!
//! Disjunction chains produced by `->` associate to the right.

use super::expr::{Formula, IotaTag, Program, SdeSystem, Term, Var};

#[derive(Debug, Clone, PartialEq)]
pub enum STerm {
    Const(f64),
    Var(Var),
    Add(Box<STerm>, Box<STerm>),
    Mul(Box<STerm>, Box<STerm>),
    Func(super::expr::FnRef, Vec<STerm>),
    DiffT(Box<STerm>),
    DiffB(Var, Box<STerm>),
    Iota { tag: IotaTag, select: u32, arity: u32, body: Box<SFormula> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SSde {
    pub vars: Vec<Var>,
    pub drift: Vec<STerm>,
    pub diffusion: Vec<Vec<STerm>>,
    pub boundary: Box<SFormula>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SProgram {
    Assign(Var, STerm),
    Random(Var),
    Sde(SSde),
    If(Box<SFormula>, Box<SProgram>, Box<SProgram>),
    Choice(Box<SProgram>, Box<SProgram>),
    Seq(Box<SProgram>, Box<SProgram>),
    Star(Box<SProgram>),
    Skip,
    Fail,
    Symbol(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SFormula {
    Geq(STerm, STerm),
    Leq(STerm, STerm),
    Lt(STerm, STerm),
    EqCmp(STerm, STerm),
    Not(Box<SFormula>),
    And(Box<SFormula>, Box<SFormula>),
    Or(Box<SFormula>, Box<SFormula>),
    Implies(Box<SFormula>, Box<SFormula>),
    Iff(Box<SFormula>, Box<SFormula>),
    Pred { name: String, arity: u8, args: Vec<STerm> },
    Diamond(Box<SProgram>, Box<SFormula>),
    BoxMod(Box<SProgram>, Box<SFormula>),
    Sure(Box<SFormula>),
    Ind(Box<SFormula>),
    Crash(Box<SProgram>),
}

pub fn desugar_term(t: &STerm) -> Term {
    match t {
        STerm::Const(c) => Term::Const(*c),
        STerm::Var(v) => Term::Var(v.clone()),
        STerm::Add(a, b) => desugar_term(a).add(desugar_term(b)),
        STerm::Mul(a, b) => desugar_term(a).mul(desugar_term(b)),
        STerm::Func(f, args) => Term::Func(f.clone(), args.iter().map(desugar_term).collect()),
        STerm::DiffT(a) => Term::DiffT(Box::new(desugar_term(a))),
        STerm::DiffB(v, a) => Term::DiffB(v.clone(), Box::new(desugar_term(a))),
        STerm::Iota { tag, select, arity, body } => Term::Iota {
            tag: *tag,
            select: *select,
            arity: *arity,
            body: Box::new(desugar(body)),
        },
    }
}

pub fn desugar_program(p: &SProgram) -> Program {
    match p {
        SProgram::Assign(v, t) => Program::Assign(v.clone(), desugar_term(t)),
        SProgram::Random(v) => Program::Random(v.clone()),
        SProgram::Sde(s) => Program::Sde(SdeSystem {
            vars: s.vars.clone(),
            drift: s.drift.iter().map(desugar_term).collect(),
            diffusion: s
                .diffusion
                .iter()
                .map(|row| row.iter().map(desugar_term).collect())
                .collect(),
            boundary: desugar(&s.boundary),
        }),
        SProgram::If(h, a, b) => Program::If(
            desugar(h),
            Box::new(desugar_program(a)),
            Box::new(desugar_program(b)),
        ),
        SProgram::Choice(a, b) => desugar_program(a).choice(desugar_program(b)),
        SProgram::Seq(a, b) => desugar_program(a).seq(desugar_program(b)),
        SProgram::Star(a) => desugar_program(a).star(),
        SProgram::Skip => Program::Skip,
        SProgram::Fail => Program::Fail,
        SProgram::Symbol(n) => Program::Symbol(n.clone()),
    }
}

fn or(a: Formula, b: Formula) -> Formula {
    a.not().and(b.not()).not()
}

fn ind(a: Formula) -> Formula {
    a.clone().sure().not().and(a.not().sure().not())
}

fn implies(a: Formula, b: Formula) -> Formula {
    or(a.clone().not(), or(b.clone(), ind(a).and(ind(b))))
}

pub fn desugar(f: &SFormula) -> Formula {
    match f {
        SFormula::Geq(a, b) => Formula::geq(desugar_term(a), desugar_term(b)),
        SFormula::Leq(a, b) => Formula::geq(desugar_term(b), desugar_term(a)),
        SFormula::Lt(a, b) => Formula::geq(desugar_term(a), desugar_term(b)).not(),
        SFormula::EqCmp(a, b) => {
            let (da, db) = (desugar_term(a), desugar_term(b));
            Formula::geq(da.clone(), db.clone()).and(Formula::geq(db, da))
        }
        SFormula::Not(a) => desugar(a).not(),
        SFormula::And(a, b) => desugar(a).and(desugar(b)),
        SFormula::Or(a, b) => or(desugar(a), desugar(b)),
        SFormula::Implies(a, b) => implies(desugar(a), desugar(b)),
        SFormula::Iff(a, b) => {
            let (da, db) = (desugar(a), desugar(b));
            implies(da.clone(), db.clone()).and(implies(db, da))
        }
        SFormula::Pred { name, arity, args } => Formula::Pred {
            name: name.clone(),
            arity: *arity,
            args: args.iter().map(desugar_term).collect(),
        },
        SFormula::Diamond(p, a) => Formula::diamond(desugar_program(p), desugar(a)),
        SFormula::BoxMod(p, a) => {
            Formula::diamond(desugar_program(p), desugar(a).not()).not()
        }
        SFormula::Sure(a) => desugar(a).sure(),
        SFormula::Ind(a) => ind(desugar(a)),
        SFormula::Crash(p) => ind(
            Formula::diamond(
                desugar_program(p),
                Formula::geq(Term::Const(0.0), Term::Const(0.0)).not(),
            )
            .not(),
        ),
    }
}

/// Builders for the derived connectives directly on core formulas. The
/// kernel and test suites assemble desugared shapes with these so that
/// structural matching against parser output is exact.
pub mod core_ops {
    use super::super::expr::{Formula, Program, Term};

    pub fn or(a: Formula, b: Formula) -> Formula {
        super::or(a, b)
    }

    pub fn ind(a: Formula) -> Formula {
        super::ind(a)
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        super::implies(a, b)
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        implies(a.clone(), b.clone()).and(implies(b, a))
    }

    pub fn box_mod(p: Program, a: Formula) -> Formula {
        Formula::diamond(p, a.not()).not()
    }

    pub fn crash(p: Program) -> Formula {
        ind(box_mod(p, Formula::geq(Term::Const(0.0), Term::Const(0.0))))
    }

    pub fn eq_cmp(a: Term, b: Term) -> Formula {
        Formula::geq(a.clone(), b.clone()).and(Formula::geq(b, a))
    }

    pub fn leq(a: Term, b: Term) -> Formula {
        Formula::geq(b, a)
    }

    /// `def(t)`: definitely denotes a real; spelled `sure(t >= t)`.
    pub fn defined(t: Term) -> Formula {
        Formula::geq(t.clone(), t).sure()
    }

    /// Matches the exact shape produced by [`implies`], recovering the
    /// antecedent and consequent.
    pub fn match_implies(f: &Formula) -> Option<(Formula, Formula)> {
        // or(x, y) = !( !x & !y )
        fn match_or(f: &Formula) -> Option<(Formula, Formula)> {
            if let Formula::Not(inner) = f {
                if let Formula::And(l, r) = &**inner {
                    if let (Formula::Not(a), Formula::Not(b)) = (&**l, &**r) {
                        return Some(((**a).clone(), (**b).clone()));
                    }
                }
            }
            None
        }
        let (na, rest) = match_or(f)?;
        let (b, guard) = match_or(&rest)?;
        let a = if let Formula::Not(x) = &na { (**x).clone() } else { return None };
        if guard == ind(a.clone()).and(ind(b.clone())) {
            Some((a, b))
        } else {
            None
        }
    }

    /// Matches the conjunction-of-implications shape produced by [`iff`].
    pub fn match_iff(f: &Formula) -> Option<(Formula, Formula)> {
        if let Formula::And(l, r) = f {
            let (a, b) = match_implies(l)?;
            let (b2, a2) = match_implies(r)?;
            if a == a2 && b == b2 {
                return Some((a, b));
            }
        }
        None
    }
}

/// Trivial embedding of a core formula into the surface grammar, so that
/// `desugar` restricted to core formulas is the identity.
pub fn embed(f: &Formula) -> SFormula {
    match f {
        Formula::Geq(a, b) => SFormula::Geq(embed_term(a), embed_term(b)),
        Formula::Not(a) => SFormula::Not(Box::new(embed(a))),
        Formula::And(a, b) => SFormula::And(Box::new(embed(a)), Box::new(embed(b))),
        Formula::Pred { name, arity, args } => SFormula::Pred {
            name: name.clone(),
            arity: *arity,
            args: args.iter().map(embed_term).collect(),
        },
        Formula::Diamond(p, a) => {
            SFormula::Diamond(Box::new(embed_program(p)), Box::new(embed(a)))
        }
        Formula::Sure(a) => SFormula::Sure(Box::new(embed(a))),
    }
}

pub fn embed_term(t: &Term) -> STerm {
    match t {
        Term::Const(c) => STerm::Const(*c),
        Term::Var(v) => STerm::Var(v.clone()),
        Term::Add(a, b) => STerm::Add(Box::new(embed_term(a)), Box::new(embed_term(b))),
        Term::Mul(a, b) => STerm::Mul(Box::new(embed_term(a)), Box::new(embed_term(b))),
        Term::Func(f, args) => STerm::Func(f.clone(), args.iter().map(embed_term).collect()),
        Term::DiffT(a) => STerm::DiffT(Box::new(embed_term(a))),
        Term::DiffB(v, a) => STerm::DiffB(v.clone(), Box::new(embed_term(a))),
        Term::Iota { tag, select, arity, body } => STerm::Iota {
            tag: *tag,
            select: *select,
            arity: *arity,
            body: Box::new(embed(body)),
        },
    }
}

pub fn embed_program(p: &Program) -> SProgram {
    match p {
        Program::Assign(v, t) => SProgram::Assign(v.clone(), embed_term(t)),
        Program::Random(v) => SProgram::Random(v.clone()),
        Program::Sde(s) => SProgram::Sde(SSde {
            vars: s.vars.clone(),
            drift: s.drift.iter().map(embed_term).collect(),
            diffusion: s.diffusion.iter().map(|r| r.iter().map(embed_term).collect()).collect(),
            boundary: Box::new(embed(&s.boundary)),
        }),
        Program::If(h, a, b) => SProgram::If(
            Box::new(embed(h)),
            Box::new(embed_program(a)),
            Box::new(embed_program(b)),
        ),
        Program::Choice(a, b) => {
            SProgram::Choice(Box::new(embed_program(a)), Box::new(embed_program(b)))
        }
        Program::Seq(a, b) => SProgram::Seq(Box::new(embed_program(a)), Box::new(embed_program(b))),
        Program::Star(a) => SProgram::Star(Box::new(embed_program(a))),
        Program::Skip => SProgram::Skip,
        Program::Fail => SProgram::Fail,
        Program::Symbol(n) => SProgram::Symbol(n.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_is_negated_diamond() {
        let s = SFormula::BoxMod(
            Box::new(SProgram::Symbol("a".into())),
            Box::new(SFormula::Pred { name: "p".into(), arity: 0, args: vec![] }),
        );
        let want = Formula::diamond(Program::Symbol("a".into()), Formula::pred0("p").not()).not();
        assert_eq!(desugar(&s), want);
    }

    #[test]
    fn crash_is_ind_of_box_trivial() {
        let s = SFormula::Crash(Box::new(SProgram::Fail));
        let want = core_ops::crash(Program::Fail);
        assert_eq!(desugar(&s), want);
    }

    #[test]
    fn desugar_fixes_core_formulas() {
        let core = Formula::geq(Term::var("x"), Term::Const(0.0))
            .and(Formula::pred0("p"))
            .sure();
        assert_eq!(desugar(&embed(&core)), core);
    }

    #[test]
    fn implication_shape_roundtrips_through_matcher() {
        let a = Formula::geq(Term::var("x"), Term::Const(0.0));
        let b = Formula::pred0("q");
        let f = core_ops::implies(a.clone(), b.clone());
        assert_eq!(core_ops::match_implies(&f), Some((a.clone(), b.clone())));
        let g = core_ops::iff(a.clone(), b.clone());
        assert_eq!(core_ops::match_iff(&g), Some((a, b)));
    }
}
