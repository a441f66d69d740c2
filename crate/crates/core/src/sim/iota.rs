//! Definite-description solving.
//!
//! A description denotes the selected coordinate of the unique slot
//! assignment making its body definitely true, and is undefined
//! otherwise. The solver handles what the motivating examples need:
//! it normalizes the body into equality drivers plus side constraints,
//! isolates roots of a driver by a sign-change scan over the search
//! interval, bisects each bracket, and certifies uniqueness by counting
//! certified roots. Multi-slot bodies are solved coordinate-wise when the
//! drivers form a triangular system; anything else is undefined, which is
//! always a sound answer here.

use crate::ast::{formula_vars, Formula, IotaTag, Term, TruthValue, Var};

use std::collections::BTreeSet;

use super::interp::Interp;
use super::term::eval_term;
use super::value::{RealBot, Valuation};

/// Residual tolerance for accepting a bisected root of a driver equality.
const DRIVER_TOL: f64 = 1e-9;

/// Evaluates a program-free, symbol-free-at-the-formula-level body.
/// Iota bodies are restricted to exactly this fragment.
fn eval_body(i: &Interp, v: &Valuation, f: &Formula) -> TruthValue {
    match f {
        Formula::Geq(a, b) => eval_term(i, v, a).geq(eval_term(i, v, b)),
        Formula::Not(x) => eval_body(i, v, x).neg(),
        Formula::And(a, b) => eval_body(i, v, a).and(eval_body(i, v, b)),
        Formula::Sure(x) => {
            if eval_body(i, v, x) == TruthValue::Top {
                TruthValue::Top
            } else {
                TruthValue::Bot
            }
        }
        // Excluded by well-formedness; indeterminate keeps the solver total.
        Formula::Pred { .. } | Formula::Diamond(..) => TruthValue::Ind,
    }
}

fn conjuncts<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    if let Formula::And(a, b) = f {
        conjuncts(a, out);
        conjuncts(b, out);
    } else {
        out.push(f);
    }
}

/// An equality driver `lhs = rhs` recovered from the elaborated pair
/// `lhs >= rhs & rhs >= lhs`, together with the indices of the two
/// conjuncts it occupies.
struct Driver<'a> {
    lhs: &'a Term,
    rhs: &'a Term,
    used: [usize; 2],
}

fn find_drivers<'a>(parts: &[&'a Formula]) -> Vec<Driver<'a>> {
    let mut out = Vec::new();
    for (i, f) in parts.iter().enumerate() {
        let Formula::Geq(a, b) = f else { continue };
        for (j, g) in parts.iter().enumerate() {
            if i == j {
                continue;
            }
            let Formula::Geq(c, d) = g else { continue };
            if a == d && b == c {
                // Record each unordered pair once.
                if i < j {
                    out.push(Driver { lhs: a, rhs: b, used: [i, j] });
                }
            }
        }
    }
    out
}

fn slot_indices_of(body: &Formula, tag: IotaTag, out: &mut BTreeSet<u32>) {
    let mut vars = BTreeSet::new();
    formula_vars(body, &mut vars);
    out.extend(vars.into_iter().filter_map(|v| match v {
        Var::Slot { owner, index } if owner == tag => Some(index),
        _ => None,
    }));
}

fn term_slots(t: &Term, tag: IotaTag) -> BTreeSet<u32> {
    let mut vars = BTreeSet::new();
    crate::ast::term_vars(t, &mut vars);
    vars.into_iter()
        .filter_map(|v| match v {
            Var::Slot { owner, index } if owner == tag => Some(index),
            _ => None,
        })
        .collect()
}

/// Snaps a bisected root to the nearest integer when that is at least as
/// good a zero of the driver, so exact roots print exactly.
fn polish(root: f64, f: &impl Fn(f64) -> Option<f64>) -> f64 {
    let snapped = root.round();
    if snapped != root {
        if let (Some(a), Some(b)) = (f(root), f(snapped)) {
            if b.abs() <= a.abs() && (snapped - root).abs() <= 1e-6 * (1.0 + root.abs()) {
                return snapped;
            }
        }
    }
    root
}

/// All certified roots of `f` on `[lo, hi]` found by an `cells`-cell
/// sign-change scan followed by bisection. Cells where `f` is undefined
/// contribute nothing.
fn certified_roots(lo: f64, hi: f64, cells: u32, f: &impl Fn(f64) -> Option<f64>) -> Vec<f64> {
    let mut roots = Vec::new();
    let width = (hi - lo) / f64::from(cells.max(1));
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=cells {
        let x = lo + width * f64::from(k);
        let Some(fx) = f(x) else {
            prev = None;
            continue;
        };
        if fx == 0.0 {
            roots.push(x);
            prev = Some((x, fx));
            continue;
        }
        if let Some((px, pfx)) = prev {
            if pfx.signum() != fx.signum() && pfx != 0.0 {
                if let Some(r) = bisect(px, x, f) {
                    roots.push(polish(r, f));
                }
            }
        }
        prev = Some((x, fx));
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + a.abs()));
    roots
}

fn bisect(mut lo: f64, mut hi: f64, f: &impl Fn(f64) -> Option<f64>) -> Option<f64> {
    let mut flo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fmid = f(mid)?;
        if fmid == 0.0 {
            return Some(mid);
        }
        if flo.signum() == fmid.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let r = f(mid)?;
    if r.abs() <= DRIVER_TOL * (1.0 + mid.abs()) {
        Some(mid)
    } else {
        None
    }
}

/// Solves a description and returns the selected coordinate, or undefined
/// when existence or uniqueness cannot be certified in the search domain.
pub fn solve_iota(
    i: &Interp,
    v: &Valuation,
    tag: IotaTag,
    select: u32,
    arity: u32,
    body: &Formula,
) -> RealBot {
    if !v.is_map() {
        return RealBot::Bot;
    }
    let mut parts = Vec::new();
    conjuncts(body, &mut parts);
    let drivers = find_drivers(&parts);
    if drivers.is_empty() {
        return RealBot::Bot;
    }

    // Solve slots one at a time: a driver is usable for a slot when it
    // mentions that slot and no other unsolved one.
    let mut unsolved: BTreeSet<u32> = BTreeSet::new();
    slot_indices_of(body, tag, &mut unsolved);
    for idx in 1..=arity {
        unsolved.insert(idx);
    }
    let mut state = v.clone();
    let mut progress = true;
    while !unsolved.is_empty() && progress {
        progress = false;
        let candidates: Vec<u32> = unsolved.iter().copied().collect();
        'slots: for idx in candidates {
            let slot = Var::Slot { owner: tag, index: idx };
            for d in &drivers {
                let mut slots = term_slots(d.lhs, tag);
                slots.extend(term_slots(d.rhs, tag));
                if !slots.contains(&idx) || slots.iter().any(|s| *s != idx && unsolved.contains(s))
                {
                    continue;
                }
                let fi = |x: f64| -> Option<f64> {
                    let probe = state.set(slot.clone(), RealBot::Real(x));
                    let l = eval_term(i, &probe, d.lhs).real()?;
                    let r = eval_term(i, &probe, d.rhs).real()?;
                    Some(l - r)
                };
                let roots =
                    certified_roots(i.limits.iota_lo, i.limits.iota_hi, i.limits.iota_cells, &fi);
                // Keep only roots satisfying every non-driver conjunct whose
                // slots are all resolved at this point; conjuncts that still
                // mention unsolved slots are rechecked at the end. The
                // driver itself holds up to the bisection tolerance.
                let keep: Vec<f64> = roots
                    .into_iter()
                    .filter(|x| {
                        let probe = state.set(slot.clone(), RealBot::Real(*x));
                        parts.iter().enumerate().all(|(ci, c)| {
                            if d.used.contains(&ci) {
                                return true;
                            }
                            let mut pending = BTreeSet::new();
                            slot_indices_of(c, tag, &mut pending);
                            if pending.iter().any(|s| *s != idx && unsolved.contains(s)) {
                                return true;
                            }
                            eval_body(i, &probe, c) == TruthValue::Top
                        })
                    })
                    .collect();
                if keep.len() != 1 {
                    return RealBot::Bot;
                }
                state = state.set(slot.clone(), RealBot::Real(keep[0]));
                unsolved.remove(&idx);
                progress = true;
                continue 'slots;
            }
        }
    }
    if !unsolved.is_empty() {
        return RealBot::Bot;
    }
    // Final check: drivers must hold at the solution within tolerance and
    // every other conjunct exactly (they were only enforced piecemeal).
    let mut driver_parts = BTreeSet::new();
    for d in &drivers {
        driver_parts.extend(d.used);
        let (Some(l), Some(r)) = (eval_term(i, &state, d.lhs).real(), eval_term(i, &state, d.rhs).real())
        else {
            return RealBot::Bot;
        };
        if (l - r).abs() > DRIVER_TOL * (1.0 + l.abs().max(r.abs())) {
            return RealBot::Bot;
        }
    }
    for (ci, c) in parts.iter().enumerate() {
        if !driver_parts.contains(&ci) && eval_body(i, &state, c) != TruthValue::Top {
            return RealBot::Bot;
        }
    }
    state.get(&Var::Slot { owner: tag, index: select })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Formula;

    fn interp() -> Interp {
        Interp::new(vec![1.0], Default::default())
    }

    fn eq_pair(a: Term, b: Term) -> Formula {
        Formula::geq(a.clone(), b.clone()).and(Formula::geq(b, a))
    }

    #[test]
    fn two_roots_without_constraint_fail_uniqueness() {
        let tag = IotaTag::fresh();
        let d1 = Term::Var(Var::Slot { owner: tag, index: 1 });
        let body = eq_pair(d1.clone().mul(d1.clone()), Term::var("y"));
        let v = Valuation::from_pairs([(Var::named("y"), 4.0)]);
        assert_eq!(solve_iota(&interp(), &v, tag, 1, 1, &body), RealBot::Bot);
    }

    #[test]
    fn unsatisfiable_body_fails() {
        let tag = IotaTag::fresh();
        let d1 = Term::Var(Var::Slot { owner: tag, index: 1 });
        let body = Formula::geq(d1.clone(), Term::Const(0.0))
            .and(Formula::geq(d1, Term::Const(0.0)).not());
        let v = Valuation::empty();
        assert_eq!(solve_iota(&interp(), &v, tag, 1, 1, &body), RealBot::Bot);
    }

    #[test]
    fn triangular_two_slot_system() {
        let tag = IotaTag::fresh();
        let d1 = Term::Var(Var::Slot { owner: tag, index: 1 });
        let d2 = Term::Var(Var::Slot { owner: tag, index: 2 });
        // d1 = 3  and  d2 = d1 + 1, select the second coordinate.
        let body = eq_pair(d1.clone(), Term::Const(3.0))
            .and(eq_pair(d2.clone(), d1.clone().add(Term::Const(1.0))));
        let v = Valuation::empty();
        assert_eq!(solve_iota(&interp(), &v, tag, 2, 2, &body), RealBot::Real(4.0));
    }

    #[test]
    fn linear_root_solves_exactly() {
        let tag = IotaTag::fresh();
        let d1 = Term::Var(Var::Slot { owner: tag, index: 1 });
        let body = eq_pair(d1.clone().add(d1.clone()), Term::Const(10.0));
        let v = Valuation::empty();
        assert_eq!(solve_iota(&interp(), &v, tag, 1, 1, &body), RealBot::Real(5.0));
    }
}
