//! Program semantics: deterministic state transformation given an
//! interpretation, a sample path, and a choice sequence.
//!
//! Crash and out-of-bounds states pass through every construct unchanged.
//! Each construct consumes exactly the choice bits it reads, so altering
//! the sequence past the consumed prefix never changes the result.

use crate::ast::{Program, SdeSystem, TruthValue, Var};

use super::formula::eval_formula;
use super::interp::Interp;
use super::omega::{RunState, SamplePath};
use super::term::eval_term;
use super::value::{RealBot, Valuation};

/// Trajectory capture for the opt-in dump: one row per grid point of every
/// integrator run, with a cumulative time offset across runs.
#[derive(Debug, Clone)]
pub struct Trace {
    pub vars: Vec<Var>,
    pub rows: Vec<TraceRow>,
    offset: f64,
}

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t: f64,
    pub values: Vec<RealBot>,
    pub status: &'static str,
}

impl Trace {
    pub fn new(vars: Vec<Var>) -> Trace {
        Trace { vars, rows: vec![], offset: 0.0 }
    }

    fn push(&mut self, t: f64, state: &Valuation, status: &'static str) {
        let values = self.vars.iter().map(|v| state.get(v)).collect();
        self.rows.push(TraceRow { t: self.offset + t, values, status });
    }
}

pub fn run_program(
    i: &Interp,
    v: &Valuation,
    w: &SamplePath,
    st: RunState,
    p: &Program,
) -> (Valuation, RunState) {
    run_program_with(i, v, w, st, p, None)
}

pub fn run_program_with(
    i: &Interp,
    v: &Valuation,
    w: &SamplePath,
    mut st: RunState,
    p: &Program,
    mut trace: Option<&mut Trace>,
) -> (Valuation, RunState) {
    if !v.is_map() {
        return (v.clone(), st);
    }
    match p {
        Program::Assign(x, theta) => match eval_term(i, v, theta) {
            RealBot::Bot => (Valuation::Crash, st),
            val => (v.set(x.clone(), val), st),
        },
        Program::Random(x) => {
            let u = w.uniform(st.draws);
            st.draws += 1;
            (v.set(x.clone(), RealBot::Real(u)), st)
        }
        Program::Sde(sde) => {
            let idx = st.choices.nat();
            st.choices.advance(idx + 1);
            match i.stop_time(idx) {
                None => (Valuation::Out, st),
                Some(t_stop) => integrate_sde(i, v, w, st, sde, t_stop, trace),
            }
        }
        Program::If(h, a, b) => {
            let guard = eval_formula(i, v, w, st.draws, h);
            st.truncated |= guard.truncated;
            match guard.value {
                TruthValue::Top => run_program_with(i, v, w, st, a, trace),
                TruthValue::Bot => run_program_with(i, v, w, st, b, trace),
                TruthValue::Ind => (Valuation::Crash, st),
            }
        }
        Program::Choice(a, b) => {
            let bit = st.choices.head();
            st.choices.advance(1);
            if bit {
                run_program_with(i, v, w, st, b, trace)
            } else {
                run_program_with(i, v, w, st, a, trace)
            }
        }
        Program::Seq(a, b) => {
            let (v1, st1) = run_program_with(i, v, w, st, a, trace.as_deref_mut());
            run_program_with(i, &v1, w, st1, b, trace)
        }
        Program::Star(a) => {
            let n = st.choices.nat();
            st.choices.advance(n + 1);
            let mut cur = v.clone();
            for _ in 0..n {
                let (v1, st1) = run_program_with(i, &cur, w, st, a, trace.as_deref_mut());
                cur = v1;
                st = st1;
                if !cur.is_map() {
                    break;
                }
            }
            (cur, st)
        }
        Program::Skip => (v.clone(), st),
        Program::Fail => (Valuation::Crash, st),
        Program::Symbol(name) => match i.progs.get(name) {
            None => (Valuation::Crash, st),
            Some(meaning) => {
                let env = meaning.env.as_deref().unwrap_or(i);
                run_program_with(env, v, w, st, &meaning.body, trace)
            }
        },
    }
}

/// Explicit Euler-Maruyama integration to `t_stop` on the grid
/// `0, h, 2h, ...` with a final partial step landing exactly on `t_stop`.
///
/// At every grid point, in order: drift and diffusion must denote reals
/// (crash otherwise), then the boundary must be definitely true
/// (out-of-bounds otherwise). The Brownian increment of coordinate `j`
/// over cell `k` is `sqrt(dt) * z(j, k)`, where `z` comes from the sample
/// path alone, so trajectories agree across stop times and sequences.
/// On success the evolved variables are updated along with their time and
/// Brownian subscripts, which receive the drift and diffusion values at
/// the stop point.
fn integrate_sde(
    i: &Interp,
    v: &Valuation,
    w: &SamplePath,
    mut st: RunState,
    sde: &SdeSystem,
    t_stop: f64,
    mut trace: Option<&mut Trace>,
) -> (Valuation, RunState) {
    let n = sde.vars.len();
    let h = i.limits.step;
    let mut state = v.clone();
    let mut tau = 0.0;
    let mut cell: u64 = 0;
    loop {
        // Coefficients at the current grid point.
        let mut drift = Vec::with_capacity(n);
        let mut diff = Vec::with_capacity(n);
        let mut undefined = false;
        for b in &sde.drift {
            let val = eval_term(i, &state, b);
            undefined |= val.is_bot();
            drift.push(val);
        }
        for row in &sde.diffusion {
            let mut r = Vec::with_capacity(n);
            for s in row {
                let val = eval_term(i, &state, s);
                undefined |= val.is_bot();
                r.push(val);
            }
            diff.push(r);
        }
        if undefined {
            if let Some(t) = trace.as_deref_mut() {
                t.push(tau, &state, "crash");
            }
            return (Valuation::Crash, st);
        }
        let guard = eval_formula(i, &state, w, st.draws, &sde.boundary);
        st.truncated |= guard.truncated;
        if guard.value != TruthValue::Top {
            if let Some(t) = trace.as_deref_mut() {
                t.push(tau, &state, "out");
            }
            return (Valuation::Out, st);
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(tau, &state, "ok");
        }
        if tau >= t_stop {
            // Final subscript assignments at the stop point.
            for (k, x) in sde.vars.iter().enumerate() {
                state = state.set(x.clone().time(), drift[k]);
                for (j, along) in sde.vars.iter().enumerate() {
                    state = state.set(x.clone().brownian(along.clone()), diff[k][j]);
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                t.offset += t_stop;
            }
            return (state, st);
        }
        let dt = h.min(t_stop - tau);
        let sqrt_dt = dt.sqrt();
        let mut incr: Vec<f64> = Vec::with_capacity(n);
        for j in 0..n {
            incr.push(sqrt_dt * w.gaussian(&sde.vars[j], cell));
        }
        for (k, x) in sde.vars.iter().enumerate() {
            let mut next = state.get(x) + drift[k] * RealBot::Real(dt);
            for j in 0..n {
                next = next + diff[k][j] * RealBot::Real(incr[j]);
            }
            state = state.set(x.clone(), next);
        }
        tau = if t_stop - tau <= h { t_stop } else { tau + h };
        cell += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Formula, Term};
    use crate::sim::omega::ChoiceSeq;

    fn interp(times: Vec<f64>) -> Interp {
        Interp::new(times, Default::default())
    }

    fn run(i: &Interp, v: &Valuation, bits: Vec<bool>, p: &Program) -> (Valuation, RunState) {
        run_program(i, v, &SamplePath::new(1), RunState::new(ChoiceSeq::new(bits), 0), p)
    }

    #[test]
    fn skip_and_fail() {
        let i = interp(vec![1.0]);
        let v = Valuation::empty();
        let (v1, st1) = run(&i, &v, vec![], &Program::Skip);
        assert_eq!(v1, v);
        assert_eq!(st1.choices.consumed(), 0);
        let (v2, _) = run(&i, &v, vec![], &Program::Fail);
        assert_eq!(v2, Valuation::Crash);
    }

    #[test]
    fn assignment_of_undefined_crashes() {
        let i = interp(vec![1.0]);
        let v = Valuation::empty();
        let p = Program::Assign(Var::named("x"), Term::var("nope"));
        let (v1, _) = run(&i, &v, vec![], &p);
        assert_eq!(v1, Valuation::Crash);
    }

    #[test]
    fn choice_takes_right_branch_on_one() {
        let i = interp(vec![1.0]);
        let v = Valuation::empty();
        let p = Program::Assign(Var::named("x"), Term::Const(1.0)).choice(Program::Fail);
        let (v1, st1) = run(&i, &v, vec![true], &p);
        assert_eq!(v1, Valuation::Crash);
        assert_eq!(st1.choices.consumed(), 1);
        let (v0, _) = run(&i, &v, vec![false], &p);
        assert_eq!(v0.get(&Var::named("x")), RealBot::Real(1.0));
    }

    #[test]
    fn star_unrolls_nat_times() {
        let i = interp(vec![1.0]);
        let v = Valuation::from_pairs([(Var::named("x"), 0.0)]);
        let body = Program::Assign(Var::named("x"), Term::var("x").add(Term::Const(1.0)));
        let p = body.star();
        // two leading ones then the terminating zero: two iterations
        let (v1, st1) = run(&i, &v, vec![true, true, false], &p);
        assert_eq!(v1.get(&Var::named("x")), RealBot::Real(2.0));
        assert_eq!(st1.choices.consumed(), 3);
    }

    #[test]
    fn crash_prefix_absorbs_without_extra_consumption() {
        let i = interp(vec![1.0]);
        let v = Valuation::empty();
        let tail = Program::Assign(Var::named("x"), Term::Const(1.0))
            .choice(Program::Assign(Var::named("x"), Term::Const(2.0)));
        let p = Program::Fail.seq(tail);
        let (v1, st1) = run(&i, &v, vec![true, true], &p);
        assert_eq!(v1, Valuation::Crash);
        assert_eq!(st1.choices.consumed(), 0);
    }

    #[test]
    fn constant_drift_integrates_exactly() {
        let i = interp(vec![2.0]);
        let v = Valuation::from_pairs([(Var::named("x"), 0.0)]);
        let sde = SdeSystem {
            vars: vec![Var::named("x")],
            drift: vec![Term::Const(1.0)],
            diffusion: vec![vec![Term::Const(0.0)]],
            boundary: Formula::geq(Term::Const(0.0), Term::Const(0.0)),
        };
        let (v1, st1) = run(&i, &v, vec![], &Program::Sde(sde));
        let x = v1.get(&Var::named("x")).real().unwrap();
        assert!((x - 2.0).abs() < 1e-9, "x = {x}");
        // differential subscripts written at exit
        assert_eq!(v1.get(&Var::named("x").time()), RealBot::Real(1.0));
        assert_eq!(
            v1.get(&Var::named("x").brownian(Var::named("x"))),
            RealBot::Real(0.0)
        );
        assert_eq!(st1.choices.consumed(), 1);
    }

    #[test]
    fn boundary_crossing_goes_out_of_bounds() {
        let i = interp(vec![5.0]);
        let v = Valuation::from_pairs([(Var::named("x"), 0.0)]);
        let sde = SdeSystem {
            vars: vec![Var::named("x")],
            drift: vec![Term::Const(1.0)],
            diffusion: vec![vec![Term::Const(0.0)]],
            boundary: Formula::geq(Term::Const(3.0), Term::var("x")),
        };
        let (v1, _) = run(&i, &v, vec![], &Program::Sde(sde));
        assert_eq!(v1, Valuation::Out);
    }

    #[test]
    fn stop_time_index_clamps_to_last() {
        let i = interp(vec![1.0, 2.0]);
        let v = Valuation::from_pairs([(Var::named("x"), 0.0)]);
        let sde = SdeSystem {
            vars: vec![Var::named("x")],
            drift: vec![Term::Const(1.0)],
            diffusion: vec![vec![Term::Const(0.0)]],
            boundary: Formula::geq(Term::Const(0.0), Term::Const(0.0)),
        };
        // nat = 3 clamps to the last stop time (2.0); consumes 4 bits.
        let (v1, st1) = run(&i, &v, vec![true, true, true, false], &Program::Sde(sde));
        let x = v1.get(&Var::named("x")).real().unwrap();
        assert!((x - 2.0).abs() < 1e-9);
        assert_eq!(st1.choices.consumed(), 4);
    }
}
