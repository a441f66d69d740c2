//! Probability meta-language: arithmetic over `P(phi)` atoms, Monte Carlo
//! estimation with Wilson intervals, and interval checking of
//! probabilistic claims.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{Formula, TruthValue, Var};
use crate::exec::map_indexed;
use crate::sim::{derive_seed, eval_formula, Interp, Outcome, SamplePath, Valuation};

/// Arithmetic skeleton of a probabilistic statement. `Sym` leaves are
/// 0-ary function symbols, present so axiom schemas can talk about an
/// unknown constant; they must be substituted away before checking.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbTerm {
    Const(f64),
    Add(Box<ProbTerm>, Box<ProbTerm>),
    Mul(Box<ProbTerm>, Box<ProbTerm>),
    Prob(Formula),
    Sym(String),
}

impl ProbTerm {
    pub fn prob(f: Formula) -> ProbTerm {
        ProbTerm::Prob(f)
    }

    pub fn add(self, rhs: ProbTerm) -> ProbTerm {
        ProbTerm::Add(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: ProbTerm) -> ProbTerm {
        ProbTerm::Mul(Box::new(self), Box::new(rhs))
    }

    /// Collects the distinct probability atoms, left to right.
    pub fn atoms<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        match self {
            ProbTerm::Const(_) | ProbTerm::Sym(_) => {}
            ProbTerm::Add(a, b) | ProbTerm::Mul(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
            ProbTerm::Prob(f) => {
                if !out.iter().any(|g| *g == f) {
                    out.push(f);
                }
            }
        }
    }

    fn has_sym(&self) -> bool {
        match self {
            ProbTerm::Const(_) | ProbTerm::Prob(_) => false,
            ProbTerm::Sym(_) => true,
            ProbTerm::Add(a, b) | ProbTerm::Mul(a, b) => a.has_sym() || b.has_sym(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Ge,
    Le,
    Eq,
}

/// A single comparison between two probability-arithmetic terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbFormula {
    pub op: CmpOp,
    pub lhs: ProbTerm,
    pub rhs: ProbTerm,
}

impl std::fmt::Display for ProbTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbTerm::Const(c) => write!(f, "{c}"),
            ProbTerm::Add(a, b) => write!(f, "{a} + {b}"),
            ProbTerm::Mul(a, b) => {
                let wrap = |t: &ProbTerm| matches!(t, ProbTerm::Add(..));
                match (wrap(a), wrap(b)) {
                    (true, true) => write!(f, "({a}) * ({b})"),
                    (true, false) => write!(f, "({a}) * {b}"),
                    (false, true) => write!(f, "{a} * ({b})"),
                    (false, false) => write!(f, "{a} * {b}"),
                }
            }
            ProbTerm::Prob(phi) => write!(f, "P({phi})"),
            ProbTerm::Sym(name) => write!(f, "{name}@0"),
        }
    }
}

impl std::fmt::Display for ProbFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = match self.op {
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
        };
        write!(f, "{} {} {}", self.lhs, op, self.rhs)
    }
}

impl ProbFormula {
    pub fn ge(lhs: ProbTerm, rhs: ProbTerm) -> ProbFormula {
        ProbFormula { op: CmpOp::Ge, lhs, rhs }
    }

    pub fn le(lhs: ProbTerm, rhs: ProbTerm) -> ProbFormula {
        ProbFormula { op: CmpOp::Le, lhs, rhs }
    }

    pub fn eq(lhs: ProbTerm, rhs: ProbTerm) -> ProbFormula {
        ProbFormula { op: CmpOp::Eq, lhs, rhs }
    }

    pub fn atoms(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.lhs.atoms(&mut out);
        self.rhs.atoms(&mut out);
        out
    }

    pub fn has_sym(&self) -> bool {
        self.lhs.has_sym() || self.rhs.has_sym()
    }
}

/// Initial-state distribution: a point valuation plus independent uniform
/// coordinates. Both assign reals only, so the start state is never a
/// crash or out-of-bounds state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InitialSpec {
    pub point: BTreeMap<Var, f64>,
    pub uniforms: Vec<(Var, f64, f64)>,
}

impl InitialSpec {
    pub fn point_only<I: IntoIterator<Item = (Var, f64)>>(vals: I) -> InitialSpec {
        InitialSpec { point: vals.into_iter().collect(), uniforms: vec![] }
    }

    pub fn validate(&self) -> Result<(), ProbError> {
        for (v, x) in &self.point {
            if !x.is_finite() {
                return Err(ProbError::BadInitial(format!("{v} = {x}")));
            }
        }
        for (v, lo, hi) in &self.uniforms {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(ProbError::BadInitial(format!("{v} ~ U[{lo},{hi}]")));
            }
        }
        Ok(())
    }

    fn sample(&self, seed: u64) -> Valuation {
        let mut v = Valuation::from_pairs(self.point.clone());
        let path = SamplePath::new(seed);
        for (idx, (var, lo, hi)) in self.uniforms.iter().enumerate() {
            let u = path.uniform(idx as u64);
            v = v.set(var.clone(), crate::sim::RealBot::Real(lo + u * (hi - lo)));
        }
        v
    }

    fn fingerprint(&self) -> u64 {
        let mut acc: u64 = 0x1234_5678;
        let mut push = |x: u64| acc = acc.rotate_left(13) ^ x.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for (v, x) in &self.point {
            push(format!("{v}").len() as u64);
            for b in format!("{v}").bytes() {
                push(u64::from(b));
            }
            push(x.to_bits());
        }
        for (v, lo, hi) in &self.uniforms {
            for b in format!("{v}").bytes() {
                push(u64::from(b));
            }
            push(lo.to_bits());
            push(hi.to_bits());
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbEstimate {
    pub p: f64,
    pub ci: (f64, f64),
    pub n: u64,
    /// Fraction of samples whose evaluation hit the choice bound.
    pub truncated: f64,
    /// Estimates with equal coupling ids were drawn from the same seed
    /// stream sample-by-sample.
    pub coupling: u64,
}

impl std::fmt::Display for ProbEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "p={:.6} ci=[{:.6},{:.6}] n={} truncated={:.4}",
            self.p, self.ci.0, self.ci.1, self.n, self.truncated
        )
    }
}

#[derive(Debug, Error)]
pub enum ProbError {
    #[error("initial specification can produce a non-real state: {0}")]
    BadInitial(String),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("unbound probability atom: {0}")]
    UnboundAtom(String),
    #[error("unsubstituted constant symbol in probability formula")]
    UnresolvedSymbol,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateCfg {
    pub n: u64,
    pub seed: u64,
    pub level: f64,
    pub parallel: bool,
}

impl Default for EstimateCfg {
    fn default() -> Self {
        EstimateCfg { n: 10_000, seed: 0, level: 0.95, parallel: true }
    }
}

const STREAM_OMEGA: u64 = 0xA1;
const STREAM_INIT: u64 = 0xB2;

/// Per-sample evaluations of `f` under matched seeds. Two calls with the
/// same configuration and initial spec see identical sample paths and
/// initial states, which turns distributional identities into per-sample
/// ones.
pub fn sample_values(
    i: &Interp,
    init: &InitialSpec,
    f: &Formula,
    cfg: &EstimateCfg,
) -> Result<Vec<Outcome>, ProbError> {
    init.validate()?;
    if cfg.n == 0 {
        return Err(ProbError::NoSamples);
    }
    Ok(map_indexed(cfg.n, cfg.parallel, |k| {
        let w = SamplePath::new(derive_seed(cfg.seed, STREAM_OMEGA, k));
        let v = init.sample(derive_seed(cfg.seed, STREAM_INIT, k));
        eval_formula(i, &v, &w, 0, f)
    }))
}

/// Monte Carlo estimate of the probability that `f` evaluates definitely
/// true from the initial distribution.
pub fn estimate(
    i: &Interp,
    init: &InitialSpec,
    f: &Formula,
    cfg: &EstimateCfg,
) -> Result<ProbEstimate, ProbError> {
    let values = sample_values(i, init, f, cfg)?;
    let hits = values.iter().filter(|o| o.value == TruthValue::Top).count() as u64;
    let trunc = values.iter().filter(|o| o.truncated).count() as u64;
    let (lo, hi) = wilson(hits, cfg.n, cfg.level);
    let p = hits as f64 / cfg.n as f64;
    Ok(ProbEstimate {
        p,
        ci: (lo.min(p), hi.max(p)),
        n: cfg.n,
        truncated: trunc as f64 / cfg.n as f64,
        coupling: derive_seed(cfg.seed, 0xC0u64 ^ init.fingerprint(), cfg.n),
    })
}

/// Two-sided Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, level: f64) -> (f64, f64) {
    let z = normal_quantile(0.5 + level / 2.0);
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |relative error| < 1.2e-9 on (0,1)).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile argument out of range");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpadeVerdict {
    Consistent,
    Violated,
    Inconclusive,
}

/// Checks a probability comparison against estimates for its atoms.
///
/// Each atom value ranges over its confidence interval; estimates sharing
/// a coupling id move together (same quantile parameter), uncoupled ones
/// independently. The arithmetic is multilinear in those parameters over
/// non-negative atom values, so extremes are attained at corners of the
/// parameter box. `Violated` requires failure by at least `eps`
/// everywhere; `Consistent` requires the comparison to hold everywhere,
/// with equality read up to `eps`.
pub fn check_spade(
    spade: &ProbFormula,
    bindings: &[(Formula, ProbEstimate)],
    eps: f64,
) -> Result<SpadeVerdict, ProbError> {
    if spade.has_sym() {
        return Err(ProbError::UnresolvedSymbol);
    }
    for atom in spade.atoms() {
        if !bindings.iter().any(|(f, _)| f == atom) {
            return Err(ProbError::UnboundAtom(format!("{atom:?}")));
        }
    }
    let mut classes: Vec<u64> = bindings.iter().map(|(_, e)| e.coupling).collect();
    classes.sort_unstable();
    classes.dedup();

    fn eval(t: &ProbTerm, bindings: &[(Formula, ProbEstimate)], assign: &BTreeMap<u64, f64>) -> f64 {
        match t {
            ProbTerm::Const(c) => *c,
            ProbTerm::Add(a, b) => eval(a, bindings, assign) + eval(b, bindings, assign),
            ProbTerm::Mul(a, b) => eval(a, bindings, assign) * eval(b, bindings, assign),
            ProbTerm::Sym(_) => f64::NAN,
            ProbTerm::Prob(f) => {
                let (_, e) = bindings.iter().find(|(g, _)| g == f).expect("atom bound");
                let t01 = (assign[&e.coupling] + 1.0) / 2.0;
                e.ci.0 + t01 * (e.ci.1 - e.ci.0)
            }
        }
    }

    let corners = 1u32 << classes.len().min(20);
    let mut dmin = f64::INFINITY;
    let mut dmax = f64::NEG_INFINITY;
    for mask in 0..corners {
        let assign: BTreeMap<u64, f64> = classes
            .iter()
            .enumerate()
            .map(|(idx, c)| (*c, if mask >> idx & 1 == 1 { 1.0 } else { -1.0 }))
            .collect();
        let d = eval(&spade.lhs, bindings, &assign) - eval(&spade.rhs, bindings, &assign);
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    let verdict = match spade.op {
        CmpOp::Ge => {
            if dmin >= 0.0 {
                SpadeVerdict::Consistent
            } else if dmax <= -eps {
                SpadeVerdict::Violated
            } else {
                SpadeVerdict::Inconclusive
            }
        }
        CmpOp::Le => {
            if dmax <= 0.0 {
                SpadeVerdict::Consistent
            } else if dmin >= eps {
                SpadeVerdict::Violated
            } else {
                SpadeVerdict::Inconclusive
            }
        }
        CmpOp::Eq => {
            if dmin >= -eps && dmax <= eps {
                SpadeVerdict::Consistent
            } else if dmin >= eps || dmax <= -eps {
                SpadeVerdict::Violated
            } else {
                SpadeVerdict::Inconclusive
            }
        }
    };
    Ok(verdict)
}

#[derive(Debug, Clone)]
pub struct RandomizationCheck {
    pub lhs: ProbEstimate,
    pub rhs_point: f64,
    pub rhs_half: f64,
    pub consistent: bool,
}

/// Compares `P(<x := *> phi)` against the midpoint quadrature
/// `(1/m) * sum_k P(<x := s_k> phi)`, the numeric side condition of the
/// randomization axiom. Consistency means the two intervals overlap after
/// inflating by `eps`.
pub fn check_randomization_axiom(
    i: &Interp,
    init: &InitialSpec,
    phi: &Formula,
    x: &Var,
    m: u32,
    cfg: &EstimateCfg,
    eps: f64,
) -> Result<RandomizationCheck, ProbError> {
    use crate::ast::{Program, Term};
    let lhs_formula = Formula::diamond(Program::Random(x.clone()), phi.clone());
    let lhs = estimate(i, init, &lhs_formula, cfg)?;
    let mut acc = 0.0;
    let mut var_acc = 0.0;
    for k in 0..m {
        let s = (f64::from(k) + 0.5) / f64::from(m);
        let fk = Formula::diamond(Program::Assign(x.clone(), Term::Const(s)), phi.clone());
        let sub_cfg = EstimateCfg { seed: derive_seed(cfg.seed, 0xD3, u64::from(k)), ..*cfg };
        let e = estimate(i, init, &fk, &sub_cfg)?;
        acc += e.p;
        let half = (e.ci.1 - e.ci.0) / 2.0;
        var_acc += half * half;
    }
    let rhs_point = acc / f64::from(m);
    let rhs_half = var_acc.sqrt() / f64::from(m);
    let lhs_half = (lhs.ci.1 - lhs.ci.0) / 2.0;
    let gap = (lhs.p - rhs_point).abs();
    let consistent = gap <= lhs_half + rhs_half + eps;
    Ok(RandomizationCheck { lhs, rhs_point, rhs_half, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Term;
    use crate::sim::EvalLimits;

    fn interp() -> Interp {
        Interp::new(vec![1.0], EvalLimits::default())
    }

    fn cfg(n: u64) -> EstimateCfg {
        EstimateCfg { n, seed: 7, level: 0.95, parallel: false }
    }

    #[test]
    fn tautology_estimates_exactly_one() {
        let f = Formula::geq(Term::Const(0.0), Term::Const(0.0));
        let e = estimate(&interp(), &InitialSpec::default(), &f, &cfg(200)).unwrap();
        assert_eq!(e.p, 1.0);
        assert_eq!(e.truncated, 0.0);
    }

    #[test]
    fn uniform_threshold_is_near_half() {
        use crate::ast::Program;
        let f = Formula::diamond(
            Program::Random(Var::named("x")),
            Formula::geq(Term::var("x"), Term::Const(0.5)).sure(),
        );
        let e = estimate(&interp(), &InitialSpec::default(), &f, &cfg(4000)).unwrap();
        assert!((e.p - 0.5).abs() < 0.05, "p = {}", e.p);
        assert!(e.ci.0 <= e.p && e.p <= e.ci.1);
    }

    #[test]
    fn estimates_are_reproducible() {
        use crate::ast::Program;
        let f = Formula::diamond(
            Program::Random(Var::named("x")),
            Formula::geq(Term::var("x"), Term::Const(0.3)).sure(),
        );
        let a = estimate(&interp(), &InitialSpec::default(), &f, &cfg(500)).unwrap();
        let b = estimate(&interp(), &InitialSpec::default(), &f, &cfg(500)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wilson_contains_point_and_stays_in_unit_interval() {
        for k in [0u64, 1, 50, 99, 100] {
            let (lo, hi) = wilson(k, 100, 0.95);
            let p = k as f64 / 100.0;
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
            assert!(lo <= p + 1e-12 && p - 1e-12 <= hi);
        }
    }

    #[test]
    fn quantile_matches_known_values() {
        assert!((normal_quantile(0.975) - 1.959964).abs() < 1e-5);
        assert!((normal_quantile(0.5)).abs() < 1e-12);
        assert!((normal_quantile(0.8413447460685429) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn spade_ge_zero_is_consistent() {
        let f = Formula::pred0("p");
        let e = ProbEstimate { p: 0.4, ci: (0.35, 0.45), n: 100, truncated: 0.0, coupling: 1 };
        let spade = ProbFormula::ge(ProbTerm::prob(f.clone()), ProbTerm::Const(0.0));
        assert_eq!(check_spade(&spade, &[(f, e)], 0.01).unwrap(), SpadeVerdict::Consistent);
    }

    #[test]
    fn spade_detects_clear_violation() {
        let f = Formula::pred0("p");
        let e = ProbEstimate { p: 0.10, ci: (0.08, 0.12), n: 1000, truncated: 0.0, coupling: 1 };
        let spade = ProbFormula::eq(ProbTerm::prob(f.clone()), ProbTerm::Const(0.9));
        assert_eq!(check_spade(&spade, &[(f, e)], 0.05).unwrap(), SpadeVerdict::Violated);
    }

    #[test]
    fn matched_coupling_makes_equality_consistent() {
        let f = Formula::pred0("p");
        let g = Formula::pred0("q");
        let e1 = ProbEstimate { p: 0.4, ci: (0.35, 0.45), n: 100, truncated: 0.0, coupling: 9 };
        let e2 = e1.clone();
        let spade = ProbFormula::eq(ProbTerm::prob(f.clone()), ProbTerm::prob(g.clone()));
        assert_eq!(
            check_spade(&spade, &[(f.clone(), e1.clone()), (g.clone(), e2.clone())], 0.01).unwrap(),
            SpadeVerdict::Consistent
        );
        // Uncoupled versions of the same numbers are merely inconclusive.
        let e3 = ProbEstimate { coupling: 10, ..e2 };
        assert_eq!(
            check_spade(&spade, &[(f, e1), (g, e3)], 0.01).unwrap(),
            SpadeVerdict::Inconclusive
        );
    }
}
