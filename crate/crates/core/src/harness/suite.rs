//! Concrete instance suites for every catalog axiom, and the smoke run
//! that hunts for counterexamples across them.
//!
//! Most axioms are instantiated through the kernel under substitutions
//! drawn from fixed pools whose reads (`u`, `w`) and writes (`y`, `z`)
//! cannot clash. Axioms about variables and derivative algebra also get
//! hand-built family members (for example the product rule on `x * y`)
//! that no substitution can produce, since function replacements exclude
//! variables. Derivative-algebra instances compare equalities with an
//! absolute slack of 1e-9; everything else is exact.

use crate::analysis::{sig_formula, Signature, SymRef};
use crate::ast::sugar::core_ops::{box_mod, crash, defined, eq_cmp, iff, implies, ind, or};
use crate::ast::{Formula, Program, SdeSystem, SymKind, Term, TruthValue, Var};
use crate::exec::map_indexed;
use crate::kernel::{axiom_catalog, instantiate, AxiomKind, AxiomSchema, SchemaBody};
use crate::prob::{estimate, EstimateCfg, InitialSpec, ProbEstimate};
use crate::sim::derive_seed;
use crate::subst::Substitution;

use super::{falsify, FalsifyCfg};

fn u() -> Term {
    Term::var("u")
}

fn w() -> Term {
    Term::var("w")
}

fn xv() -> Var {
    Var::named("x")
}

fn yv() -> Var {
    Var::named("y")
}

fn dt(t: Term) -> Term {
    Term::DiffT(Box::new(t))
}

fn db(along: Var, t: Term) -> Term {
    Term::DiffB(along, Box::new(t))
}

fn formula_pool(k: usize) -> Formula {
    let pool: [Formula; 5] = [
        Formula::geq(u(), Term::Const(0.0)),
        Formula::geq(w().mul(w()), Term::Const(1.0)),
        Formula::geq(u(), w()).not(),
        Formula::geq(w(), Term::Const(0.0)).sure(),
        Formula::geq(u().add(w()), Term::Const(1.0)),
    ];
    pool[k % pool.len()].clone()
}

fn fn0_pool(k: usize) -> Term {
    let pool: [Term; 4] = [
        Term::Const(2.0),
        Term::Const(0.5).add(Term::Const(1.0)),
        Term::Const(3.0).mul(Term::Const(2.0)),
        Term::Const(-1.0),
    ];
    pool[k % pool.len()].clone()
}

fn prog_pool(k: usize) -> Program {
    let pool: [Program; 5] = [
        Program::Assign(yv(), u().add(Term::Const(1.0))),
        Program::Random(Var::named("z")),
        Program::Assign(yv(), Term::Const(1.0))
            .choice(Program::Assign(Var::named("z"), Term::Const(2.0))),
        Program::If(
            Formula::geq(u(), Term::Const(0.0)),
            Box::new(Program::Assign(yv(), Term::Const(1.0))),
            Box::new(Program::Assign(yv(), Term::Const(2.0))),
        ),
        Program::Assign(yv(), u().mul(u())),
    ];
    pool[k % pool.len()].clone()
}

fn p1_pool(sigma: &Substitution, name: &str, k: usize) -> Formula {
    let m = sigma.marker_term(SymKind::Pred, name, 1, 1);
    let pool: [Formula; 3] = [
        Formula::geq(m.clone(), Term::Const(0.0)),
        Formula::geq(m.clone(), u()).not(),
        Formula::geq(m.clone().mul(m), Term::Const(1.0)),
    ];
    pool[k % pool.len()].clone()
}

fn name_offset(name: &str) -> usize {
    name.bytes().map(usize::from).sum()
}

/// Three substitution variants covering every symbol of the schema.
pub fn sigma_suite(schema: &AxiomSchema) -> Vec<Substitution> {
    let mut sig = Signature::new();
    match &schema.body {
        SchemaBody::Pathwise(f) => sig_formula(f, &mut sig),
        SchemaBody::Probabilistic(spade) => {
            for atom in spade.atoms() {
                sig_formula(atom, &mut sig);
            }
        }
    }
    (0..3)
        .map(|variant| {
            let mut sigma = Substitution::new();
            for SymRef { kind, name, arity } in &sig {
                let k = variant + name_offset(name);
                match (kind, arity) {
                    (SymKind::Fn, 0) => sigma.map_fn(name, 0, fn0_pool(k)),
                    (SymKind::Fn, _) => {}
                    (SymKind::Pred, 0) => sigma.map_pred(name, 0, formula_pool(k)),
                    (SymKind::Pred, 1) => {
                        let rep = p1_pool(&sigma, name, k);
                        sigma.map_pred(name, 1, rep);
                    }
                    (SymKind::Pred, _) => {}
                    (SymKind::Prog, _) => sigma.map_prog(name, prog_pool(k)),
                }
            }
            sigma
        })
        .collect()
}

/// The product-rule family member on concrete terms, with the quadratic
/// covariation expanded over the variables the terms mention.
fn dt_product_instance(t1: Term, t2: Term) -> Formula {
    let mut vars = std::collections::BTreeSet::new();
    crate::ast::term_vars(&t1, &mut vars);
    crate::ast::term_vars(&t2, &mut vars);
    let mut rhs = t2.clone().mul(dt(t1.clone())).add(t1.clone().mul(dt(t2.clone())));
    for j in vars {
        rhs = rhs.add(db(j.clone(), t1.clone()).mul(db(j, t2.clone())));
    }
    eq_cmp(dt(t1.mul(t2)), rhs)
}

fn spec_choice_instance() -> Formula {
    let assign = Program::Assign(xv(), Term::Const(1.0));
    let x_is_one = eq_cmp(Term::var("x"), Term::Const(1.0));
    iff(
        Formula::diamond(assign.clone().choice(Program::Fail), x_is_one.clone()),
        or(
            Formula::diamond(assign, x_is_one.clone()),
            Formula::diamond(Program::Fail, x_is_one),
        ),
    )
}

fn guarded_sde(drift: Term, diffusion: Term, boundary: Formula) -> Program {
    Program::Sde(SdeSystem {
        vars: vec![xv()],
        drift: vec![drift],
        diffusion: vec![vec![diffusion]],
        boundary,
    })
}

/// Hand-built instances that a substitution cannot express.
pub fn template_instances(id: &str) -> Vec<Formula> {
    let x = Term::var("x");
    let y = Term::var("y");
    match id {
        "dt-var" => vec![
            eq_cmp(dt(y.clone()), Term::Var(yv().time())),
            eq_cmp(dt(Term::var("z")), Term::Var(Var::named("z").time())),
        ],
        "db-var" => vec![
            eq_cmp(db(Var::named("u"), y.clone()), Term::Var(yv().brownian(Var::named("u")))),
            eq_cmp(db(yv(), x.clone()), Term::Var(xv().brownian(yv()))),
        ],
        "dt-plus" => vec![
            eq_cmp(dt(x.clone().add(y.clone())), dt(x.clone()).add(dt(y.clone()))),
            eq_cmp(
                dt(x.clone().mul(x.clone()).add(y.clone())),
                dt(x.clone().mul(x.clone())).add(dt(y.clone())),
            ),
        ],
        "db-plus" => vec![eq_cmp(
            db(xv(), x.clone().add(y.clone())),
            db(xv(), x.clone()).add(db(xv(), y.clone())),
        )],
        "dt-times" => vec![
            dt_product_instance(x.clone(), y.clone()),
            dt_product_instance(x.clone(), x.clone()),
            dt_product_instance(x.clone().add(y.clone()), y.clone()),
        ],
        "db-times" => vec![
            eq_cmp(
                db(xv(), x.clone().mul(y.clone())),
                y.clone().mul(db(xv(), x.clone())).add(x.clone().mul(db(xv(), y.clone()))),
            ),
        ],
        "eq-subst-term" => vec![implies(
            eq_cmp(x.clone(), y.clone()),
            iff(
                Formula::geq(x.clone(), Term::Const(0.0)),
                Formula::geq(y.clone(), Term::Const(0.0)),
            ),
        )],
        "rcf-add-comm" => vec![implies(
            defined(u()).and(defined(w())),
            eq_cmp(u().add(w()), w().add(u())),
        )],
        "rcf-mul-comm" => vec![implies(
            defined(u()).and(defined(w())),
            eq_cmp(u().mul(w()), w().mul(u())),
        )],
        "rcf-add-zero" => vec![implies(
            defined(u()),
            eq_cmp(u().add(Term::Const(0.0)), u()),
        )],
        "rcf-mul-one" => vec![implies(
            defined(u()),
            eq_cmp(Term::Const(1.0).mul(u()), u()),
        )],
        "rcf-ge-refl" => vec![implies(defined(u()), Formula::geq(u(), u()))],
        "rcf-sq-nonneg" => vec![implies(
            defined(u()),
            Formula::geq(u().mul(u()), Term::Const(0.0)),
        )],
        "skip-unit" => vec![iff(
            Formula::diamond(Program::Skip, Formula::geq(u(), Term::Const(0.0))),
            Formula::geq(u(), Term::Const(0.0)),
        )],
        "fail-unit" => vec![ind(Formula::diamond(
            Program::Fail,
            Formula::geq(u(), Term::Const(0.0)),
        ))],
        "choice" => vec![spec_choice_instance()],
        "compose" => {
            let a = Program::Assign(xv(), Term::Const(1.0));
            let b = Program::Assign(yv(), x.clone().add(Term::Const(1.0)));
            let phi = Formula::geq(y.clone(), u());
            vec![iff(
                Formula::diamond(a.clone().seq(b.clone()), phi.clone()),
                Formula::diamond(a, Formula::diamond(b, phi)),
            )]
        }
        "cond" => {
            let h = Formula::geq(u(), Term::Const(0.0));
            let a = Program::Assign(yv(), Term::Const(1.0));
            let b = Program::Assign(yv(), Term::Const(2.0));
            let p = Formula::geq(y.clone(), Term::Const(1.5));
            vec![iff(
                Formula::diamond(
                    Program::If(h.clone(), Box::new(a.clone()), Box::new(b.clone())),
                    p.clone(),
                ),
                or(
                    h.clone().and(or(ind(h.clone()), Formula::diamond(a, p.clone()))),
                    h.clone().not().and(or(ind(h), Formula::diamond(b, p))),
                ),
            )]
        }
        "iter-unfold" => {
            let body = Program::Assign(yv(), y.clone().add(Term::Const(1.0)));
            let phi = Formula::geq(y.clone(), Term::Const(3.0));
            vec![iff(
                Formula::diamond(body.clone().star(), phi.clone()),
                or(phi.clone(), Formula::diamond(body.clone().seq(body.star()), phi)),
            )]
        }
        "distrib-or" => {
            let a = Program::Random(xv());
            let p = Formula::geq(x.clone(), Term::Const(0.5));
            let q = Formula::geq(u(), x.clone());
            vec![iff(
                Formula::diamond(a.clone(), or(p.clone(), q.clone())),
                or(Formula::diamond(a.clone(), p), Formula::diamond(a, q)),
            )]
        }
        "assign" => {
            let theta = u().add(Term::Const(1.0));
            vec![implies(
                defined(theta.clone()),
                iff(
                    box_mod(
                        Program::Assign(xv(), theta.clone()),
                        Formula::geq(x.clone(), Term::Const(0.0)),
                    ),
                    Formula::geq(theta, Term::Const(0.0)),
                ),
            )]
        }
        "sde-dw" => {
            let h = Formula::geq(Term::Const(3.0), x.clone());
            let sde = guarded_sde(Term::Const(1.0), Term::Const(0.0), h.clone());
            vec![or(crash(sde.clone()), box_mod(sde, h))]
        }
        "sde-de-t" => {
            let sde = guarded_sde(
                Term::Const(1.0),
                Term::Const(0.5),
                Formula::geq(Term::Const(0.0), Term::Const(0.0)),
            );
            vec![box_mod(sde, eq_cmp(dt(x.clone()), Term::Const(1.0)))]
        }
        "sde-de-b" => {
            let sde = guarded_sde(
                Term::Const(1.0),
                Term::Const(0.5),
                Formula::geq(Term::Const(0.0), Term::Const(0.0)),
            );
            vec![box_mod(sde, eq_cmp(db(xv(), x.clone()), Term::Const(0.5)))]
        }
        _ => vec![],
    }
}

/// All concrete pathwise instances of a schema: kernel instantiations
/// under the pool substitutions plus the hand-built family members.
pub fn pathwise_instances(schema: &AxiomSchema) -> Vec<Formula> {
    let mut out = Vec::new();
    if matches!(schema.body, SchemaBody::Pathwise(_)) {
        for sigma in sigma_suite(schema) {
            match instantiate(schema.id, &sigma) {
                Ok(j) => match j.claim {
                    crate::kernel::Claim::Pathwise(f) => out.push(f),
                    crate::kernel::Claim::Prob(_) => {}
                },
                Err(e) => panic!("pool substitution clashes on {}: {e}", schema.id),
            }
        }
    }
    out.extend(template_instances(schema.id));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmokeCfg {
    /// Samples per instance.
    pub trials: u64,
    pub seed: u64,
    pub parallel: bool,
    /// Sample count for the statistical checks of probability axioms.
    pub stat_n: u64,
    /// Axioms excluded from the pass/fail gate but still reported.
    pub quarantined: Vec<String>,
}

impl Default for SmokeCfg {
    fn default() -> Self {
        SmokeCfg { trials: 1000, seed: 0, parallel: true, stat_n: 4000, quarantined: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmokeRow {
    pub axiom: String,
    pub trials: u64,
    pub failures: u64,
    pub quarantined: bool,
}

fn falsify_cfg(cfg: &SmokeCfg, id: &str, instance_idx: usize) -> FalsifyCfg {
    let slack = if id.starts_with("dt-") || id.starts_with("db-") { 1e-9 } else { 0.0 };
    FalsifyCfg {
        trials: cfg.trials,
        seed: derive_seed(cfg.seed, name_offset(id) as u64, instance_idx as u64),
        parallel: cfg.parallel,
        geq_slack: slack,
        ..Default::default()
    }
}

fn smoke_pathwise(schema: &AxiomSchema, cfg: &SmokeCfg) -> SmokeRow {
    let instances = pathwise_instances(schema);
    let mut failures = 0;
    let mut trials = 0;
    for (k, inst) in instances.iter().enumerate() {
        let fc = falsify_cfg(cfg, schema.id, k);
        let report = falsify(inst, &fc);
        trials += report.trials;
        if report.counterexample.is_some() {
            failures += 1;
        }
    }
    SmokeRow {
        axiom: schema.id.to_string(),
        trials,
        failures,
        quarantined: cfg.quarantined.iter().any(|q| q == schema.id),
    }
}

fn prob_estimate_for(
    f: &Formula,
    init: &InitialSpec,
    cfg: &SmokeCfg,
    salt: u64,
) -> ProbEstimate {
    let interp = crate::sim::Interp::new(vec![1.0], Default::default());
    let ec = EstimateCfg {
        n: cfg.stat_n,
        seed: derive_seed(cfg.seed, 0x9E0B, salt),
        level: 0.95,
        parallel: cfg.parallel,
    };
    estimate(&interp, init, f, &ec).expect("estimation cannot fail on valid inputs")
}

fn prob_values(f: &Formula, init: &InitialSpec, cfg: &SmokeCfg, salt: u64) -> Vec<TruthValue> {
    let interp = crate::sim::Interp::new(vec![1.0], Default::default());
    let ec = EstimateCfg {
        n: cfg.stat_n,
        seed: derive_seed(cfg.seed, 0x9E0B, salt),
        level: 0.95,
        parallel: cfg.parallel,
    };
    crate::prob::sample_values(&interp, init, f, &ec)
        .expect("sampling cannot fail on valid inputs")
        .into_iter()
        .map(|o| o.value)
        .collect()
}

/// Statistical rows for the probability axioms: matched-seed per-sample
/// checks where the axiom admits them, interval checks otherwise.
fn smoke_probabilistic(schema: &AxiomSchema, cfg: &SmokeCfg) -> SmokeRow {
    let init = InitialSpec {
        point: Default::default(),
        uniforms: vec![
            (Var::named("u"), -1.0, 1.0),
            (Var::named("w"), 0.0, 1.0),
        ],
    };
    let phis: [Formula; 3] = [
        Formula::geq(w(), Term::Const(0.5)),
        Formula::geq(u(), Term::Const(0.0)).and(Formula::geq(w(), Term::Const(0.25))),
        Formula::geq(u().mul(u()), w()),
    ];
    let mut failures = 0u64;
    let mut trials = 0u64;
    match schema.id {
        "p-nonneg" => {
            for (k, phi) in phis.iter().enumerate() {
                let e = prob_estimate_for(phi, &init, cfg, k as u64);
                trials += e.n;
                if e.p < 0.0 {
                    failures += 1;
                }
            }
        }
        "p-neg" => {
            for (k, phi) in phis.iter().enumerate() {
                let pos = prob_values(phi, &init, cfg, k as u64);
                let neg = prob_values(&phi.clone().not(), &init, cfg, k as u64);
                trials += pos.len() as u64;
                let both = pos
                    .iter()
                    .zip(&neg)
                    .filter(|(a, b)| **a == TruthValue::Top && **b == TruthValue::Top)
                    .count();
                if both > 0 {
                    failures += 1;
                }
            }
        }
        "p-mono-or" => {
            for (k, phi) in phis.iter().enumerate() {
                let psi = &phis[(k + 1) % phis.len()];
                let left = prob_values(&or(phi.clone(), psi.clone()), &init, cfg, k as u64);
                let right = prob_values(phi, &init, cfg, k as u64);
                trials += left.len() as u64;
                if left.iter().zip(&right).any(|(a, b)| a < b) {
                    failures += 1;
                }
            }
        }
        "p-sure" => {
            for (k, phi) in phis.iter().enumerate() {
                let sure = prob_values(&phi.clone().sure(), &init, cfg, k as u64);
                let plain = prob_values(phi, &init, cfg, k as u64);
                trials += sure.len() as u64;
                let mismatch = sure
                    .iter()
                    .zip(&plain)
                    .filter(|(a, b)| (**a == TruthValue::Top) != (**b == TruthValue::Top))
                    .count();
                if mismatch > 0 {
                    failures += 1;
                }
            }
        }
        "p-randomize" => {
            // P(<x := *> phi) against the constant the axiom names.
            let cases: [(Formula, f64); 3] = [
                (Formula::geq(x_term(), Term::Const(0.0)).sure(), 1.0),
                (Formula::geq(x_term(), Term::Const(0.5)).sure(), 0.5),
                (Formula::geq(x_term(), Term::Const(2.0)).sure(), 0.0),
            ];
            for (k, (phi, c)) in cases.iter().enumerate() {
                let f = Formula::diamond(Program::Random(xv()), phi.clone());
                let e = prob_estimate_for(&f, &init, cfg, 100 + k as u64);
                trials += e.n;
                let half = (e.ci.1 - e.ci.0) / 2.0;
                if (e.p - c).abs() > half + 0.03 {
                    failures += 1;
                }
            }
        }
        other => panic!("unhandled probabilistic axiom {other}"),
    }
    SmokeRow {
        axiom: schema.id.to_string(),
        trials,
        failures,
        quarantined: cfg.quarantined.iter().any(|q| q == schema.id),
    }
}

fn x_term() -> Term {
    Term::var("x")
}

/// Runs the full catalog: every pathwise axiom through the falsifier on
/// its instance suite, every probability axiom through its statistical
/// check. Rows come back in catalog order.
pub fn smoke_axioms(cfg: &SmokeCfg) -> Vec<SmokeRow> {
    let catalog = axiom_catalog();
    let rows = map_indexed(catalog.len() as u64, cfg.parallel, |k| {
        let schema = &catalog[k as usize];
        match schema.kind {
            AxiomKind::Pathwise => smoke_pathwise(schema, &SmokeCfg { parallel: false, ..cfg.clone() }),
            AxiomKind::Probabilistic => {
                smoke_probabilistic(schema, &SmokeCfg { parallel: false, ..cfg.clone() })
            }
        }
    });
    rows
}

pub fn render_tsv(rows: &[SmokeRow]) -> String {
    let mut out = String::from("axiom\ttrials\tfailures\tquarantined\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.axiom,
            r.trials,
            r.failures,
            if r.quarantined { 1 } else { 0 }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_axiom_has_at_least_three_instances() {
        for schema in axiom_catalog() {
            match schema.kind {
                AxiomKind::Pathwise => {
                    let n = pathwise_instances(&schema).len();
                    assert!(n >= 3, "{} has only {} instances", schema.id, n);
                }
                AxiomKind::Probabilistic => {}
            }
        }
    }

    #[test]
    fn pool_substitutions_are_valid_and_admissible() {
        for schema in axiom_catalog() {
            if matches!(schema.body, SchemaBody::Pathwise(_)) {
                // pathwise_instances panics on a clash
                let _ = pathwise_instances(&schema);
            }
        }
    }

    #[test]
    fn smoke_single_axiom_quickly() {
        let cfg = SmokeCfg { trials: 40, stat_n: 400, parallel: false, ..Default::default() };
        let schema = crate::kernel::lookup("choice").unwrap();
        let row = smoke_pathwise(&schema, &cfg);
        assert_eq!(row.failures, 0, "{row:?}");
    }
}
