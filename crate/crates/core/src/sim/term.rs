//! Term evaluation: structural arithmetic, symbol tables, differentials
//! via symbolic partial derivatives, and definite descriptions via the
//! root-isolating solver.
//!
//! Term semantics never consult the sample path: definite-description
//! bodies exclude programs and formula symbols, so every term denotes a
//! single extended real per (interpretation, valuation).

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::ast::{term_vars, FnRef, Term, Var};

use super::interp::{FnMeaning, Interp};
use super::iota::solve_iota;
use super::value::{RealBot, Valuation};

pub fn eval_term(i: &Interp, v: &Valuation, t: &Term) -> RealBot {
    if !v.is_map() {
        return RealBot::Bot;
    }
    match t {
        Term::Const(c) => RealBot::new(*c),
        Term::Var(x) => v.get(x),
        Term::Add(a, b) => eval_term(i, v, a) + eval_term(i, v, b),
        Term::Mul(a, b) => eval_term(i, v, a) * eval_term(i, v, b),
        Term::Func(fr, args) => {
            let vals: Vec<RealBot> = args.iter().map(|a| eval_term(i, v, a)).collect();
            match fr {
                FnRef::Marker(key) => i.markers.get(key).copied().unwrap_or(RealBot::Bot),
                FnRef::Named { name, arity } => {
                    match i.fns.get(&(name.clone(), *arity)) {
                        None => RealBot::Bot,
                        Some(FnMeaning::Fixed(f)) => f(&vals),
                        Some(FnMeaning::Expr { body, env, at, markers }) => {
                            let mut env2 = (**env).clone();
                            for (k, val) in markers.iter().zip(vals.iter()) {
                                env2.markers.insert(k.clone(), *val);
                            }
                            eval_term(&env2, at, body)
                        }
                    }
                }
            }
        }
        Term::DiffT(body) => eval_time_differential(i, v, body),
        Term::DiffB(along, body) => eval_brownian_differential(i, v, along, body),
        Term::Iota { tag, select, arity, body } => {
            solve_iota(i, v, *tag, *select, *arity, body)
        }
    }
}

fn is_zero(t: &Term) -> bool {
    matches!(t, Term::Const(c) if *c == 0.0)
}

fn sadd(a: Term, b: Term) -> Term {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        a.add(b)
    }
}

fn smul(a: Term, b: Term) -> Term {
    if is_zero(&a) || is_zero(&b) {
        Term::Const(0.0)
    } else if matches!(a, Term::Const(c) if c == 1.0) {
        b
    } else if matches!(b, Term::Const(c) if c == 1.0) {
        a
    } else {
        a.mul(b)
    }
}

/// Symbolic partial derivative of `t` with respect to `x`, or `None` when
/// `t` falls outside the differentiable closure (polynomials over
/// variables and 0-ary symbols; nested differentials, descriptions, and
/// uninterpreted symbols of positive arity are out).
pub fn partial(t: &Term, x: &Var) -> Option<Term> {
    match t {
        Term::Const(_) => Some(Term::Const(0.0)),
        Term::Var(y) => Some(Term::Const(if y == x { 1.0 } else { 0.0 })),
        Term::Add(a, b) => Some(sadd(partial(a, x)?, partial(b, x)?)),
        Term::Mul(a, b) => {
            let da = partial(a, x)?;
            let db = partial(b, x)?;
            Some(sadd(smul(da, (**b).clone()), smul((**a).clone(), db)))
        }
        Term::Func(FnRef::Marker(_), _) => Some(Term::Const(0.0)),
        Term::Func(FnRef::Named { arity: 0, .. }, _) => Some(Term::Const(0.0)),
        Term::Func(..) | Term::DiffT(_) | Term::DiffB(..) | Term::Iota { .. } => None,
    }
}

fn occurring(body: &Term) -> BTreeSet<Var> {
    let mut vars = BTreeSet::new();
    term_vars(body, &mut vars);
    vars
}

/// `d/dt` via the second-order chain rule: first-order transport along the
/// time subscripts plus half the Hessian contracted with the quadratic
/// covariation of the Brownian subscripts. Subscript reads come from the
/// valuation; a needed but unmapped subscript makes the result undefined.
fn eval_time_differential(i: &Interp, v: &Valuation, body: &Term) -> RealBot {
    let vars = occurring(body);
    let mut acc = RealBot::Real(0.0);
    for y in &vars {
        let Some(p) = partial(body, y) else { return RealBot::Bot };
        if is_zero(&p) {
            continue;
        }
        let coeff = eval_term(i, v, &p);
        acc = acc + v.get(&y.clone().time()) * coeff;
    }
    for a in &vars {
        let Some(pa) = partial(body, a) else { return RealBot::Bot };
        if is_zero(&pa) {
            continue;
        }
        for b in &vars {
            let Some(pab) = partial(&pa, b) else { return RealBot::Bot };
            if is_zero(&pab) {
                continue;
            }
            let coeff = eval_term(i, v, &pab);
            let mut qv = RealBot::Real(0.0);
            for j in &vars {
                let lhs = v.get(&a.clone().brownian(j.clone()));
                let rhs = v.get(&b.clone().brownian(j.clone()));
                qv = qv + lhs * rhs;
            }
            acc = acc + RealBot::Real(0.5) * coeff * qv;
        }
    }
    acc
}

/// `dB[w]`: the gradient contracted with the Brownian subscripts along `w`.
fn eval_brownian_differential(i: &Interp, v: &Valuation, along: &Var, body: &Term) -> RealBot {
    let vars = occurring(body);
    let mut acc = RealBot::Real(0.0);
    for y in &vars {
        let Some(p) = partial(body, y) else { return RealBot::Bot };
        if is_zero(&p) {
            continue;
        }
        let coeff = eval_term(i, v, &p);
        acc = acc + v.get(&y.clone().brownian(along.clone())) * coeff;
    }
    acc
}

/// Convenience for building opaque polynomial tables in tests and
/// generators: any undefined argument makes the result undefined.
pub fn strict_fn<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(f: F) -> super::interp::FnTable {
    Arc::new(move |args: &[RealBot]| {
        let mut reals = Vec::with_capacity(args.len());
        for a in args {
            match a.real() {
                Some(x) => reals.push(x),
                None => return RealBot::Bot,
            }
        }
        RealBot::new(f(&reals))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Formula;

    fn interp() -> Interp {
        Interp::new(vec![1.0], Default::default())
    }

    #[test]
    fn arithmetic_and_absorption() {
        let i = interp();
        let v = Valuation::from_pairs([(Var::named("x"), 1.0), (Var::named("y"), 2.0)]);
        let t = Term::var("x").add(Term::var("y"));
        assert_eq!(eval_term(&i, &v, &t), RealBot::Real(3.0));
        let u = Term::var("x").add(Term::var("z"));
        assert_eq!(eval_term(&i, &v, &u), RealBot::Bot);
    }

    #[test]
    fn crash_state_gives_bot() {
        let i = interp();
        assert_eq!(eval_term(&i, &Valuation::Crash, &Term::Const(1.0)), RealBot::Bot);
        assert_eq!(eval_term(&i, &Valuation::Out, &Term::Const(1.0)), RealBot::Bot);
    }

    #[test]
    fn time_differential_of_constant_and_variable() {
        let i = interp();
        let v = Valuation::from_pairs([(Var::named("x").time(), 5.0)]);
        assert_eq!(eval_term(&i, &v, &Term::DiffT(Box::new(Term::Const(3.0)))), RealBot::Real(0.0));
        assert_eq!(eval_term(&i, &v, &Term::DiffT(Box::new(Term::var("x")))), RealBot::Real(5.0));
        // x.t needed but unmapped elsewhere
        let empty = Valuation::empty();
        assert_eq!(eval_term(&i, &empty, &Term::DiffT(Box::new(Term::var("x")))), RealBot::Bot);
    }

    #[test]
    fn time_differential_product_rule_with_zero_covariation() {
        let i = interp();
        let x = Var::named("x");
        let y = Var::named("y");
        let v = Valuation::from_pairs([
            (x.clone(), 1.0),
            (y.clone(), 2.0),
            (x.clone().time(), 3.0),
            (y.clone().time(), 4.0),
            (x.clone().brownian(x.clone()), 0.0),
            (y.clone().brownian(x.clone()), 0.0),
            (x.clone().brownian(y.clone()), 0.0),
            (y.clone().brownian(y.clone()), 0.0),
        ]);
        let t = Term::DiffT(Box::new(Term::var("x").mul(Term::var("y"))));
        assert_eq!(eval_term(&i, &v, &t), RealBot::Real(2.0 * 3.0 + 1.0 * 4.0));
    }

    #[test]
    fn quadratic_covariation_contributes() {
        let i = interp();
        let x = Var::named("x");
        // d/dt(x*x) = 2 x x.t + sum_j x.B[j]^2, here j ranges over {x}.
        let v = Valuation::from_pairs([
            (x.clone(), 3.0),
            (x.clone().time(), 1.0),
            (x.clone().brownian(x.clone()), 2.0),
        ]);
        let t = Term::DiffT(Box::new(Term::var("x").mul(Term::var("x"))));
        assert_eq!(eval_term(&i, &v, &t), RealBot::Real(2.0 * 3.0 * 1.0 + 4.0));
    }

    #[test]
    fn brownian_differential_reads_subscripts() {
        let i = interp();
        let x = Var::named("x");
        let w = Var::named("w");
        let v = Valuation::from_pairs([
            (x.clone(), 2.0),
            (x.clone().brownian(w.clone()), 7.0),
        ]);
        let t = Term::DiffB(w.clone(), Box::new(Term::var("x").mul(Term::var("x"))));
        assert_eq!(eval_term(&i, &v, &t), RealBot::Real(2.0 * 2.0 * 7.0));
    }

    #[test]
    fn iota_square_root_examples() {
        let i = interp();
        let t = {
            let tag = crate::ast::IotaTag::fresh();
            let d1 = Term::Var(Var::Slot { owner: tag, index: 1 });
            let body = Formula::geq(d1.clone().mul(d1.clone()), Term::var("y"))
                .and(Formula::geq(Term::var("y"), d1.clone().mul(d1.clone())))
                .and(Formula::geq(d1, Term::Const(0.0)));
            Term::Iota { tag, select: 1, arity: 1, body: Box::new(body) }
        };
        let at = |y: f64| Valuation::from_pairs([(Var::named("y"), y)]);
        assert_eq!(eval_term(&i, &at(4.0), &t), RealBot::Real(2.0));
        assert_eq!(eval_term(&i, &at(9.0), &t), RealBot::Real(3.0));
        assert_eq!(eval_term(&i, &at(-1.0), &t), RealBot::Bot);
    }
}
