//! Seeded generators for expressions, interpretations, and valuations.
//!
//! Everything is a pure function of the seed, so every reported
//! counterexample replays exactly.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{rv_formula, Signature, SymRef, VarSet};
use crate::ast::{
    formula_vars, Formula, Program, SdeSystem, SymKind, Term, TruthValue, Var,
};
use crate::sim::{strict_fn, EvalLimits, Interp, PredMeaning, ProgMeaning, RealBot, Valuation};

pub struct Gen {
    pub rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    fn small_const(&mut self) -> Term {
        Term::Const(f64::from(self.rng.gen_range(-4i8..=4)) / 2.0)
    }

    /// A polynomial-ish term over the given variables.
    pub fn term(&mut self, depth: u32, vars: &[Var]) -> Term {
        if depth == 0 || self.rng.gen_bool(0.3) {
            if vars.is_empty() || self.rng.gen_bool(0.35) {
                self.small_const()
            } else {
                Term::Var(self.pick(vars).clone())
            }
        } else {
            let a = self.term(depth - 1, vars);
            let b = self.term(depth - 1, vars);
            if self.rng.gen_bool(0.5) {
                a.add(b)
            } else {
                a.mul(b)
            }
        }
    }

    /// A program-free comparison formula.
    pub fn guard(&mut self, vars: &[Var]) -> Formula {
        let t = self.term(1, vars);
        let c = self.small_const();
        match self.rng.gen_range(0..3) {
            0 => Formula::geq(t, c),
            1 => Formula::geq(c, t),
            _ => Formula::geq(t, c).not(),
        }
    }

    /// A concrete (symbol-free) program of bounded depth. Star bodies come
    /// from one level down, so unrollings stay cheap under the choice
    /// bound.
    pub fn program(&mut self, depth: u32, vars: &[Var]) -> Program {
        if depth == 0 || self.rng.gen_bool(0.35) {
            match self.rng.gen_range(0..5) {
                0 => Program::Skip,
                1 => Program::Fail,
                2 => Program::Random(self.pick(vars).clone()),
                _ => {
                    let target = self.pick(vars).clone();
                    let value = self.term(1, vars);
                    Program::Assign(target, value)
                }
            }
        } else {
            match self.rng.gen_range(0..6) {
                0 => self.program(depth - 1, vars).seq(self.program(depth - 1, vars)),
                1 => self.program(depth - 1, vars).choice(self.program(depth - 1, vars)),
                2 => Program::If(
                    self.guard(vars),
                    Box::new(self.program(depth - 1, vars)),
                    Box::new(self.program(depth - 1, vars)),
                ),
                3 => self.program(depth - 1, vars).star(),
                4 => self.sde(vars),
                _ => {
                    let target = self.pick(vars).clone();
                    let value = self.term(1, vars);
                    Program::Assign(target, value)
                }
            }
        }
    }

    /// A small one-dimensional system with affine drift and constant
    /// diffusion over one of the given variables.
    pub fn sde(&mut self, vars: &[Var]) -> Program {
        let x = self.pick(vars).clone();
        let drift = match self.rng.gen_range(0..3) {
            0 => Term::Const(1.0),
            1 => self.small_const(),
            _ => Term::Var(x.clone()).mul(Term::Const(0.5)),
        };
        let diffusion = if self.rng.gen_bool(0.5) { Term::Const(0.0) } else { self.small_const() };
        let boundary = if self.rng.gen_bool(0.5) {
            Formula::geq(Term::Const(0.0), Term::Const(0.0))
        } else {
            Formula::geq(Term::Const(100.0), Term::Var(x.clone()))
        };
        Program::Sde(SdeSystem { vars: vec![x], drift: vec![drift], diffusion: vec![vec![diffusion]], boundary })
    }

    /// A concrete formula of bounded depth over the given variables.
    pub fn formula(&mut self, depth: u32, vars: &[Var]) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.3) {
            self.guard(vars)
        } else {
            match self.rng.gen_range(0..4) {
                0 => self.formula(depth - 1, vars).not(),
                1 => self.formula(depth - 1, vars).and(self.formula(depth - 1, vars)),
                2 => self.formula(depth - 1, vars).sure(),
                _ => Formula::diamond(
                    self.program(depth - 1, vars),
                    self.formula(depth - 1, vars),
                ),
            }
        }
    }

    /// A valuation giving a real value to every variable in `support`.
    pub fn valuation(&mut self, support: &[Var]) -> Valuation {
        let mut v = Valuation::empty();
        for var in support {
            let x = self.rng.gen_range(-3.0..3.0);
            v = v.set(var.clone(), RealBot::Real(x));
        }
        v
    }

    /// Random sorted stop times.
    pub fn stop_times(&mut self, len: usize) -> Vec<f64> {
        let mut out: Vec<f64> = (0..len).map(|_| self.rng.gen_range(0.0..10.0)).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }
}

/// Seeded interpretation source: polynomial function meanings, threshold
/// predicates, straight-line program meanings. Function symbols always
/// denote reals, so schemas whose validity presumes defined coefficients
/// are exercised fairly.
pub struct InterpGen;

impl InterpGen {
    pub fn interp_for(
        gen: &mut Gen,
        sig: &Signature,
        times: Vec<f64>,
        limits: EvalLimits,
    ) -> Interp {
        let mut interp = Interp::new(times, limits);
        let harness_vars = [Var::named("hv1"), Var::named("hv2")];
        for sym in sig {
            match sym.kind {
                SymKind::Fn => {
                    let arity = usize::from(sym.arity);
                    let coeffs: Vec<f64> =
                        (0..=arity).map(|_| f64::from(gen.rng.gen_range(-4i8..=4)) / 2.0).collect();
                    let squares: Vec<f64> =
                        (0..arity).map(|_| f64::from(gen.rng.gen_range(-2i8..=2)) / 2.0).collect();
                    interp.fns.insert(
                        (sym.name.clone(), sym.arity),
                        crate::sim::FnMeaning::Fixed(strict_fn(move |args| {
                            let mut acc = coeffs[0];
                            for (k, a) in args.iter().enumerate() {
                                acc += coeffs[k + 1] * a + squares[k] * a * a;
                            }
                            acc
                        })),
                    );
                }
                SymKind::Pred => {
                    let arity = usize::from(sym.arity);
                    if arity == 0 {
                        let value = *gen.pick(&TruthValue::ALL);
                        interp.preds.insert(
                            (sym.name.clone(), 0),
                            PredMeaning::Fixed(std::sync::Arc::new(move |_| value)),
                        );
                    } else {
                        let coeffs: Vec<f64> =
                            (0..arity).map(|_| f64::from(gen.rng.gen_range(-3i8..=3)) / 2.0).collect();
                        let threshold = f64::from(gen.rng.gen_range(-4i8..=4)) / 2.0;
                        let band = if gen.rng.gen_bool(0.3) { 0.5 } else { 0.0 };
                        interp.preds.insert(
                            (sym.name.clone(), sym.arity),
                            PredMeaning::Fixed(std::sync::Arc::new(move |args| {
                                let mut acc = 0.0;
                                for (k, a) in args.iter().enumerate() {
                                    match a.real() {
                                        Some(x) => acc += coeffs[k] * x,
                                        None => return TruthValue::Ind,
                                    }
                                }
                                if acc >= threshold + band {
                                    TruthValue::Top
                                } else if acc >= threshold {
                                    TruthValue::Ind
                                } else {
                                    TruthValue::Bot
                                }
                            })),
                        );
                    }
                }
                SymKind::Prog => {
                    // straight-line: a fixed number of simple assignments,
                    // consuming no choice bits
                    let mut body = Program::Skip;
                    for _ in 0..gen.rng.gen_range(1..=3) {
                        let target = gen.pick(&harness_vars).clone();
                        let step = if gen.rng.gen_bool(0.3) {
                            Program::Random(target)
                        } else {
                            let value = gen.term(1, &harness_vars);
                            Program::Assign(target, value)
                        };
                        body = body.seq(step);
                    }
                    interp.progs.insert(sym.name.clone(), ProgMeaning { body, env: None });
                }
            }
        }
        interp
    }
}

/// The support a sampled valuation should cover for a fair evaluation of
/// `f`: its read variables when finite, otherwise every occurring
/// variable plus first-order subscripts.
pub fn support_for(f: &Formula) -> Vec<Var> {
    match rv_formula(f) {
        VarSet::Finite(set) => set.into_iter().filter(|v| !v.involves_slot()).collect(),
        VarSet::All => {
            let mut occ = std::collections::BTreeSet::new();
            formula_vars(f, &mut occ);
            let base: Vec<Var> = occ.into_iter().filter(|v| !v.involves_slot()).collect();
            let mut out = base.clone();
            for v in &base {
                out.push(v.clone().time());
                for w in &base {
                    out.push(v.clone().brownian(w.clone()));
                }
            }
            out.push(Var::named("hv1"));
            out.push(Var::named("hv2"));
            out.sort();
            out.dedup();
            out
        }
    }
}

/// Signature helper reused by the falsifier.
pub fn signature_of(f: &Formula) -> Signature {
    let mut sig = Signature::new();
    crate::analysis::sig_formula(f, &mut sig);
    sig
}

/// True when the signature mentions a program symbol (whose generated
/// meaning may read the dedicated harness variables).
pub fn has_prog_symbol(sig: &Signature) -> bool {
    sig.iter().any(|s| matches!(s, SymRef { kind: SymKind::Prog, .. }))
}
