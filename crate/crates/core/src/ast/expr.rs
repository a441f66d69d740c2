//! Core abstract syntax: terms, programs, and formulas.
//!
//! The three kinds are mutually recursive. Formulas embed programs through
//! the diamond modality, programs embed formulas as guards, and terms embed
//! formulas as definite-description bodies. Everything here is immutable
//! value data, freely shareable across threads.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_IOTA_TAG: AtomicU64 = AtomicU64::new(1);

/// Allocation-time identity of a definite-description node. Two iota terms
/// compare equal when their bodies match up to a renaming of their own
/// slot variables, so the numeric value of a tag never matters for
/// equality, only for telling distinct binders apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IotaTag(pub u64);

impl IotaTag {
    pub fn fresh() -> IotaTag {
        IotaTag(NEXT_IOTA_TAG.fetch_add(1, Ordering::Relaxed))
    }
}

/// A variable. The set of variables is closed under subscripting: `x.t` is
/// the time-differential subscript of `x` and `x.B[y]` the Brownian
/// subscript of `x` along the motion associated with `y`. Slot variables
/// are the reserved placeholders bound by a definite description.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Named(String),
    /// Time subscript `v.t`.
    Time(Box<Var>),
    /// Brownian subscript `v.B[w]`.
    Brownian(Box<Var>, Box<Var>),
    /// Bound placeholder `d<index>` of the iota node identified by `owner`.
    Slot { owner: IotaTag, index: u32 },
}

impl Var {
    pub fn named(name: impl Into<String>) -> Var {
        Var::Named(name.into())
    }

    pub fn time(self) -> Var {
        Var::Time(Box::new(self))
    }

    pub fn brownian(self, along: Var) -> Var {
        Var::Brownian(Box::new(self), Box::new(along))
    }

    pub fn is_slot_of(&self, tag: IotaTag) -> bool {
        matches!(self, Var::Slot { owner, .. } if *owner == tag)
    }

    /// True when the variable is, or is a subscript chain rooted in, a slot.
    pub fn involves_slot(&self) -> bool {
        match self {
            Var::Named(_) => false,
            Var::Time(b) => b.involves_slot(),
            Var::Brownian(b, a) => b.involves_slot() || a.involves_slot(),
            Var::Slot { .. } => true,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Named(n) => f.write_str(n),
            Var::Time(b) => write!(f, "{}.t", b),
            Var::Brownian(b, a) => write!(f, "{}.B[{}]", b, a),
            Var::Slot { index, .. } => write!(f, "d{}", index),
        }
    }
}

/// Which symbol table a symbol belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymKind {
    Fn,
    Pred,
    Prog,
}

/// Identity of a reserved marker symbol: a 0-ary function symbol owned by
/// a particular substitution instance and one of the symbols it replaces.
/// The substitution id keeps markers of distinct substitutions apart, so
/// nested applications cannot capture one another.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MarkerKey {
    pub subst: u64,
    pub kind: SymKind,
    pub name: String,
    pub arity: u8,
    pub index: u8,
}

/// A function-symbol position in a term: either a user-level named symbol
/// of known arity, or a reserved marker (always 0-ary).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FnRef {
    Named { name: String, arity: u8 },
    Marker(MarkerKey),
}

impl FnRef {
    pub fn named(name: impl Into<String>, arity: u8) -> FnRef {
        FnRef::Named { name: name.into(), arity }
    }
}

/// Terms: real-valued expressions over the state.
#[derive(Debug, Clone)]
pub enum Term {
    Const(f64),
    Var(Var),
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Func(FnRef, Vec<Term>),
    /// Time differential `d/dt(theta)`.
    DiffT(Box<Term>),
    /// Brownian differential `dB[x](theta)`.
    DiffB(Var, Box<Term>),
    /// Definite description: the `select`-th coordinate of the unique
    /// assignment to the `arity` slot variables satisfying the body.
    Iota {
        tag: IotaTag,
        select: u32,
        arity: u32,
        body: Box<Formula>,
    },
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(Var::named(name))
    }

    pub fn add(self, rhs: Term) -> Term {
        Term::Add(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Term) -> Term {
        Term::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn iota(select: u32, arity: u32, body: Formula) -> Term {
        Term::Iota { tag: IotaTag::fresh(), select, arity, body: Box::new(body) }
    }
}

/// A stochastic differential equation block `d x = b dt + s dW & H`.
#[derive(Debug, Clone)]
pub struct SdeSystem {
    /// Evolved variables, pairwise distinct.
    pub vars: Vec<Var>,
    /// Drift vector, same length as `vars`.
    pub drift: Vec<Term>,
    /// Diffusion matrix, square over `vars` (row i: coefficients of the
    /// Brownian motions associated with each `vars[j]`).
    pub diffusion: Vec<Vec<Term>>,
    /// Evolution-domain guard, program-free.
    pub boundary: Formula,
}

/// Programs: state transformers resolved by a sample path and a choice
/// sequence.
#[derive(Debug, Clone)]
pub enum Program {
    Assign(Var, Term),
    /// `x := *`, a fresh uniform draw from [0,1].
    Random(Var),
    Sde(SdeSystem),
    If(Formula, Box<Program>, Box<Program>),
    Choice(Box<Program>, Box<Program>),
    Seq(Box<Program>, Box<Program>),
    Star(Box<Program>),
    Skip,
    Fail,
    Symbol(String),
}

impl Program {
    pub fn seq(self, rhs: Program) -> Program {
        Program::Seq(Box::new(self), Box::new(rhs))
    }

    pub fn choice(self, rhs: Program) -> Program {
        Program::Choice(Box::new(self), Box::new(rhs))
    }

    pub fn star(self) -> Program {
        Program::Star(Box::new(self))
    }
}

/// Formulas in the core grammar. Surface connectives (disjunction, box,
/// implication, ...) live in [`crate::ast::sugar`] and elaborate into
/// these six constructors.
#[derive(Debug, Clone)]
pub enum Formula {
    Geq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Pred { name: String, arity: u8, args: Vec<Term> },
    /// Diamond modality: the best value of the body over all runs.
    Diamond(Box<Program>, Box<Formula>),
    Sure(Box<Formula>),
}

impl Formula {
    pub fn geq(lhs: Term, rhs: Term) -> Formula {
        Formula::Geq(lhs, rhs)
    }

    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, rhs: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(rhs))
    }

    pub fn sure(self) -> Formula {
        Formula::Sure(Box::new(self))
    }

    pub fn diamond(prog: Program, body: Formula) -> Formula {
        Formula::Diamond(Box::new(prog), Box::new(body))
    }

    pub fn pred0(name: impl Into<String>) -> Formula {
        Formula::Pred { name: name.into(), arity: 0, args: vec![] }
    }
}

/// Collects every variable occurring syntactically in a term, including
/// subscripted ones, into `out`.
pub fn term_vars(term: &Term, out: &mut BTreeSet<Var>) {
    match term {
        Term::Const(_) => {}
        Term::Var(v) => {
            out.insert(v.clone());
        }
        Term::Add(a, b) | Term::Mul(a, b) => {
            term_vars(a, out);
            term_vars(b, out);
        }
        Term::Func(_, args) => {
            for a in args {
                term_vars(a, out);
            }
        }
        Term::DiffT(t) => term_vars(t, out),
        Term::DiffB(v, t) => {
            out.insert(v.clone());
            term_vars(t, out);
        }
        Term::Iota { body, .. } => formula_vars(body, out),
    }
}

pub fn program_vars(prog: &Program, out: &mut BTreeSet<Var>) {
    match prog {
        Program::Assign(v, t) => {
            out.insert(v.clone());
            term_vars(t, out);
        }
        Program::Random(v) => {
            out.insert(v.clone());
        }
        Program::Sde(sde) => {
            for v in &sde.vars {
                out.insert(v.clone());
            }
            for t in &sde.drift {
                term_vars(t, out);
            }
            for row in &sde.diffusion {
                for t in row {
                    term_vars(t, out);
                }
            }
            formula_vars(&sde.boundary, out);
        }
        Program::If(h, a, b) => {
            formula_vars(h, out);
            program_vars(a, out);
            program_vars(b, out);
        }
        Program::Choice(a, b) | Program::Seq(a, b) => {
            program_vars(a, out);
            program_vars(b, out);
        }
        Program::Star(a) => program_vars(a, out),
        Program::Skip | Program::Fail | Program::Symbol(_) => {}
    }
}

pub fn formula_vars(fm: &Formula, out: &mut BTreeSet<Var>) {
    match fm {
        Formula::Geq(a, b) => {
            term_vars(a, out);
            term_vars(b, out);
        }
        Formula::Not(f) | Formula::Sure(f) => formula_vars(f, out),
        Formula::And(a, b) => {
            formula_vars(a, out);
            formula_vars(b, out);
        }
        Formula::Pred { args, .. } => {
            for a in args {
                term_vars(a, out);
            }
        }
        Formula::Diamond(p, f) => {
            program_vars(p, out);
            formula_vars(f, out);
        }
    }
}

/// Variables of a term with slot variables (and subscript chains rooted in
/// them) removed; used where slots act as bound names.
pub fn free_vars_term(term: &Term) -> BTreeSet<Var> {
    let mut all = BTreeSet::new();
    term_vars(term, &mut all);
    all.into_iter().filter(|v| !v.involves_slot()).collect()
}

pub fn free_vars_formula(fm: &Formula) -> BTreeSet<Var> {
    let mut all = BTreeSet::new();
    formula_vars(fm, &mut all);
    all.into_iter().filter(|v| !v.involves_slot()).collect()
}
