//! Formula evaluation, including the bounded supremum over adversarial
//! choice sequences for the diamond modality.

use crate::ast::{Formula, TruthValue};

use super::interp::{Interp, PredMeaning};
use super::omega::{ChoiceSeq, RunState, SamplePath};
use super::prog::run_program;
use super::term::eval_term;
use super::value::{Outcome, Valuation};

/// Evaluates a formula at a valuation along one sample path. `draws` is
/// the position already consumed in the path's uniform family; nested
/// modalities continue from it so that sequencing a program is
/// indistinguishable from nesting modalities.
pub fn eval_formula(
    i: &Interp,
    v: &Valuation,
    w: &SamplePath,
    draws: u64,
    f: &Formula,
) -> Outcome {
    if !v.is_map() {
        return Outcome::exact(TruthValue::Ind);
    }
    match f {
        Formula::Geq(a, b) => Outcome::exact(eval_term(i, v, a).geq(eval_term(i, v, b))),
        Formula::Not(x) => {
            let o = eval_formula(i, v, w, draws, x);
            Outcome { value: o.value.neg(), truncated: o.truncated }
        }
        Formula::And(a, b) => {
            let oa = eval_formula(i, v, w, draws, a);
            let ob = eval_formula(i, v, w, draws, b);
            Outcome { value: oa.value.and(ob.value), truncated: oa.truncated || ob.truncated }
        }
        Formula::Sure(x) => {
            let o = eval_formula(i, v, w, draws, x);
            let value = if o.value == TruthValue::Top { TruthValue::Top } else { TruthValue::Bot };
            Outcome { value, truncated: o.truncated }
        }
        Formula::Pred { name, arity, args } => {
            let vals: Vec<_> = args.iter().map(|a| eval_term(i, v, a)).collect();
            match i.preds.get(&(name.clone(), *arity)) {
                None => Outcome::exact(TruthValue::Ind),
                Some(PredMeaning::Fixed(p)) => Outcome::exact(p(&vals)),
                Some(PredMeaning::Expr { body, env, at, markers }) => {
                    let mut env2 = (**env).clone();
                    for (k, val) in markers.iter().zip(vals.iter()) {
                        env2.markers.insert(k.clone(), *val);
                    }
                    eval_formula(&env2, at, w, draws, body)
                }
            }
        }
        Formula::Diamond(prog, body) => {
            let bound = i.limits.choice_bound as usize;
            let mut best: Option<TruthValue> = None;
            let mut truncated = false;
            // Lazy expansion of the choice tree: branch only at positions a
            // run actually read, so each demanded bit pattern runs once.
            let mut stack: Vec<Vec<bool>> = vec![vec![]];
            while let Some(prefix) = stack.pop() {
                let st = RunState::new(ChoiceSeq::new(prefix.clone()), draws);
                let (v2, st2) = run_program(i, v, w, st, prog);
                truncated |= st2.truncated;
                let consumed = st2.choices.consumed();
                if consumed > bound {
                    truncated = true;
                }
                for q in prefix.len()..consumed.min(bound) {
                    let mut flipped = prefix.clone();
                    flipped.resize(q, false);
                    flipped.push(true);
                    stack.push(flipped);
                }
                if v2 == Valuation::Out {
                    continue;
                }
                let out = if v2 == Valuation::Crash {
                    Outcome::exact(TruthValue::Ind)
                } else {
                    eval_formula(i, &v2, w, st2.draws, body)
                };
                truncated |= out.truncated;
                best = Some(best.map_or(out.value, |b| b.max(out.value)));
                if best == Some(TruthValue::Top) {
                    // Supremum reached; remaining branches cannot change it.
                    break;
                }
            }
            Outcome { value: best.unwrap_or(TruthValue::Bot), truncated }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::sugar::core_ops;
    use crate::ast::{Program, Term, Var};

    fn interp() -> Interp {
        Interp::new(vec![1.0], Default::default())
    }

    fn eval(i: &Interp, v: &Valuation, f: &Formula) -> Outcome {
        eval_formula(i, v, &SamplePath::new(42), 0, f)
    }

    #[test]
    fn crash_state_is_indeterminate() {
        let f = Formula::geq(Term::Const(1.0), Term::Const(0.0));
        assert_eq!(eval(&interp(), &Valuation::Crash, &f).value, TruthValue::Ind);
        assert_eq!(eval(&interp(), &Valuation::Out, &f).value, TruthValue::Ind);
    }

    #[test]
    fn sure_of_indeterminate_is_false() {
        let f = Formula::geq(Term::var("missing"), Term::Const(0.0)).sure();
        assert_eq!(eval(&interp(), &Valuation::empty(), &f).value, TruthValue::Bot);
        let g = Formula::geq(Term::Const(0.0), Term::Const(1.0)).sure();
        assert_eq!(eval(&interp(), &Valuation::empty(), &g).value, TruthValue::Bot);
    }

    #[test]
    fn choice_with_fail_is_top_under_diamond_and_ind_under_box() {
        let v = Valuation::from_pairs([(Var::named("x"), 0.0)]);
        let assign = Program::Assign(Var::named("x"), Term::Const(1.0));
        let prog = assign.choice(Program::Fail);
        let x_is_one = core_ops::eq_cmp(Term::var("x"), Term::Const(1.0));
        let diamond = Formula::diamond(prog.clone(), x_is_one.clone());
        assert_eq!(eval(&interp(), &v, &diamond).value, TruthValue::Top);
        let boxed = core_ops::box_mod(prog, x_is_one);
        assert_eq!(eval(&interp(), &v, &boxed).value, TruthValue::Ind);
    }

    #[test]
    fn all_out_of_bounds_runs_give_bot() {
        // SDE leaves the domain immediately: candidate set is empty.
        let sde = crate::ast::SdeSystem {
            vars: vec![Var::named("x")],
            drift: vec![Term::Const(1.0)],
            diffusion: vec![vec![Term::Const(0.0)]],
            boundary: Formula::geq(Term::Const(0.0), Term::Const(1.0)),
        };
        let v = Valuation::from_pairs([(Var::named("x"), 0.0)]);
        let f = Formula::diamond(
            Program::Sde(sde),
            Formula::geq(Term::Const(0.0), Term::Const(0.0)),
        );
        assert_eq!(eval(&interp(), &v, &f).value, TruthValue::Bot);
    }

    #[test]
    fn star_supremum_finds_the_right_iteration_count() {
        // <(x := x + 1)*> x = 3 from x = 0
        let v = Valuation::from_pairs([(Var::named("x"), 0.0)]);
        let body = Program::Assign(Var::named("x"), Term::var("x").add(Term::Const(1.0)));
        let f = Formula::diamond(
            body.star(),
            core_ops::eq_cmp(Term::var("x"), Term::Const(3.0)),
        );
        assert_eq!(eval(&interp(), &v, &f).value, TruthValue::Top);
        let g = Formula::diamond(
            Program::Assign(Var::named("x"), Term::var("x").add(Term::Const(1.0))).star(),
            core_ops::eq_cmp(Term::var("x"), Term::Const(-1.0)),
        );
        assert_eq!(eval(&interp(), &v, &g).value, TruthValue::Bot);
    }

    #[test]
    fn truncation_flag_set_when_bound_hit() {
        let mut i = interp();
        i.limits.choice_bound = 2;
        // needs four iterations: demands bits past the bound
        let v = Valuation::from_pairs([(Var::named("x"), 0.0)]);
        let f = Formula::diamond(
            Program::Assign(Var::named("x"), Term::var("x").add(Term::Const(1.0))).star(),
            core_ops::eq_cmp(Term::var("x"), Term::Const(4.0)),
        );
        let out = eval(&i, &v, &f);
        assert_eq!(out.value, TruthValue::Bot);
        assert!(out.truncated);
    }

    #[test]
    fn random_assignment_draws_are_deterministic_and_fresh() {
        let v = Valuation::empty();
        let p = Program::Random(Var::named("x")).seq(Program::Random(Var::named("y")));
        let f = Formula::diamond(
            p,
            core_ops::eq_cmp(Term::var("x"), Term::var("y")),
        );
        // distinct indices: equal draws have probability zero
        assert_eq!(eval(&interp(), &v, &f).value, TruthValue::Bot);
    }
}
