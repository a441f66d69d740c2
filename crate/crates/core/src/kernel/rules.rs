//! Axiom instantiation and the proof rules.

use thiserror::Error;

use crate::analysis::{
    admissible_formula, sig_formula, Admissibility, Signature, SubExpr,
};
use crate::ast::sugar::core_ops::{box_mod, crash, iff, implies, leq, match_iff, match_implies, or};
use crate::ast::{Formula, Program, SdeSystem, Term};
use crate::prob::{ProbFormula, ProbTerm};
use crate::subst::{apply_formula, apply_prob, validate, Substitution};

use super::axioms::{lookup, AxiomSchema, SchemaBody};
use super::{Claim, Judgment};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("unknown axiom `{0}`")]
    UnknownAxiom(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("unknown lemma `{0}`")]
    UnknownLemma(String),
    #[error("invalid substitution: {0}")]
    InvalidSubstitution(String),
    #[error("inadmissible substitution: variable {var} is read by a replacement and written by `{subexpr}`")]
    Inadmissible { subexpr: String, var: String },
    #[error("premise reference {0} is out of range")]
    PremiseIndex(usize),
    #[error("rule mismatch: {0}")]
    RuleMismatch(String),
    #[error("ill-formed result: {0}")]
    IllFormed(String),
    #[error("expected {expected}, derived {derived}")]
    ExpectFailed { expected: String, derived: String },
    #[error("parse error in step: {0}")]
    Parse(#[from] crate::syntax::ParseError),
}

fn check_admissible(sigma: &Substitution, f: &Formula) -> Result<(), KernelError> {
    match admissible_formula(sigma, f) {
        Admissibility::Ok => Ok(()),
        Admissibility::Clash { subexpr, var } => Err(KernelError::Inadmissible {
            subexpr: match subexpr {
                SubExpr::Prog(p) => p.to_string(),
                SubExpr::Form(f) => f.to_string(),
            },
            var: var.to_string(),
        }),
    }
}

fn check_valid_subst(sigma: &Substitution) -> Result<(), KernelError> {
    let errs = validate(sigma);
    if errs.is_empty() {
        Ok(())
    } else {
        Err(KernelError::InvalidSubstitution(errs.join("; ")))
    }
}

/// Instantiates a catalog axiom under a substitution. The substitution
/// must be valid and admissible for the schema; the schema's side
/// condition, if any, becomes an open obligation of the judgment.
pub fn instantiate(axiom_id: &str, sigma: &Substitution) -> Result<Judgment, KernelError> {
    let schema = lookup(axiom_id).ok_or_else(|| KernelError::UnknownAxiom(axiom_id.into()))?;
    instantiate_schema(&schema, sigma)
}

pub fn instantiate_schema(
    schema: &AxiomSchema,
    sigma: &Substitution,
) -> Result<Judgment, KernelError> {
    check_valid_subst(sigma)?;
    let obligations: Vec<String> =
        schema.side_condition.iter().map(|s| s.to_string()).collect();
    match &schema.body {
        SchemaBody::Pathwise(f) => {
            check_admissible(sigma, f)?;
            let out = apply_formula(sigma, f);
            if let Some(v) = crate::ast::well_formed_formula(&out).into_iter().next() {
                return Err(KernelError::IllFormed(v.to_string()));
            }
            Ok(Judgment { claim: Claim::Pathwise(out), obligations })
        }
        SchemaBody::Probabilistic(spade) => {
            for atom in spade.atoms() {
                check_admissible(sigma, atom)?;
            }
            Ok(Judgment { claim: Claim::Prob(apply_prob(sigma, spade)), obligations })
        }
    }
}

/// Parameters a rule application may need beyond its premises.
#[derive(Debug, Clone)]
pub enum RuleParams {
    None,
    Prog(Program),
    Subst(Substitution),
    IffSub { target: Formula, occurrences: Option<Vec<usize>> },
    GroundArith(Formula),
    SdeIneq { prefix: Program, sde: SdeSystem, theta: Term, lambda: f64, bound: f64 },
}

fn pathwise_premise<'a>(premises: &'a [&Judgment], k: usize) -> Result<&'a Formula, KernelError> {
    match premises.get(k).map(|j| &j.claim) {
        Some(Claim::Pathwise(f)) => Ok(f),
        Some(Claim::Prob(_)) => {
            Err(KernelError::RuleMismatch(format!("premise {} is probabilistic", k + 1)))
        }
        None => Err(KernelError::RuleMismatch(format!("rule needs premise {}", k + 1))),
    }
}

fn prob_premise<'a>(premises: &'a [&Judgment], k: usize) -> Result<&'a ProbFormula, KernelError> {
    match premises.get(k).map(|j| &j.claim) {
        Some(Claim::Prob(s)) => Ok(s),
        Some(Claim::Pathwise(_)) => {
            Err(KernelError::RuleMismatch(format!("premise {} is pathwise", k + 1)))
        }
        None => Err(KernelError::RuleMismatch(format!("rule needs premise {}", k + 1))),
    }
}

fn want_premises(premises: &[&Judgment], n: usize, rule: &str) -> Result<(), KernelError> {
    if premises.len() != n {
        return Err(KernelError::RuleMismatch(format!(
            "rule {rule} takes {n} premise(s), got {}",
            premises.len()
        )));
    }
    Ok(())
}

fn inherited(premises: &[&Judgment]) -> Vec<String> {
    let mut out = Vec::new();
    for j in premises {
        for o in &j.obligations {
            if !out.contains(o) {
                out.push(o.clone());
            }
        }
    }
    out
}

/// Replaces occurrences of `from` (counted 1-based in preorder) by `to`.
fn replace_occurrences(
    target: &Formula,
    from: &Formula,
    to: &Formula,
    wanted: &Option<Vec<usize>>,
    counter: &mut usize,
) -> Formula {
    if target == from {
        *counter += 1;
        let take = wanted.as_ref().map_or(true, |w| w.contains(counter));
        if take {
            return to.clone();
        }
    }
    match target {
        Formula::Geq(..) | Formula::Pred { .. } => target.clone(),
        Formula::Not(x) => replace_occurrences(x, from, to, wanted, counter).not(),
        Formula::Sure(x) => replace_occurrences(x, from, to, wanted, counter).sure(),
        Formula::And(a, b) => replace_occurrences(a, from, to, wanted, counter)
            .and(replace_occurrences(b, from, to, wanted, counter)),
        Formula::Diamond(p, x) => Formula::diamond(
            (**p).clone(),
            replace_occurrences(x, from, to, wanted, counter),
        ),
    }
}

fn is_ground(f: &Formula) -> Result<(), KernelError> {
    let mut sig = Signature::new();
    sig_formula(f, &mut sig);
    if !sig.is_empty() {
        return Err(KernelError::RuleMismatch(
            "ground-arith formula mentions interpreted symbols".into(),
        ));
    }
    let vars = crate::ast::free_vars_formula(f);
    if let Some(v) = vars.iter().next() {
        return Err(KernelError::RuleMismatch(format!(
            "ground-arith formula reads variable {v}"
        )));
    }
    fn no_modality(f: &Formula) -> bool {
        match f {
            Formula::Geq(..) | Formula::Pred { .. } => true,
            Formula::Not(x) | Formula::Sure(x) => no_modality(x),
            Formula::And(a, b) => no_modality(a) && no_modality(b),
            Formula::Diamond(..) => false,
        }
    }
    if !no_modality(f) {
        return Err(KernelError::RuleMismatch(
            "ground-arith formula contains a modality".into(),
        ));
    }
    Ok(())
}

pub fn apply_rule(
    rule_id: &str,
    premises: &[&Judgment],
    params: &RuleParams,
) -> Result<Judgment, KernelError> {
    let obligations = inherited(premises);
    match (rule_id, params) {
        ("and-elim", RuleParams::None) => {
            // conjunction introduction, under its traditional name here
            want_premises(premises, 2, rule_id)?;
            let a = pathwise_premise(premises, 0)?;
            let b = pathwise_premise(premises, 1)?;
            Ok(Judgment { claim: Claim::Pathwise(a.clone().and(b.clone())), obligations })
        }
        ("mp", RuleParams::None) => {
            want_premises(premises, 2, rule_id)?;
            let a = pathwise_premise(premises, 0)?;
            let imp = pathwise_premise(premises, 1)?;
            let (ante, cons) = match_implies(imp).ok_or_else(|| {
                KernelError::RuleMismatch("second premise is not an implication".into())
            })?;
            if &ante != a {
                return Err(KernelError::RuleMismatch(
                    "first premise does not match the antecedent".into(),
                ));
            }
            Ok(Judgment { claim: Claim::Pathwise(cons), obligations })
        }
        ("iff-sub", RuleParams::IffSub { target, occurrences }) => {
            want_premises(premises, 1, rule_id)?;
            let equiv = pathwise_premise(premises, 0)?;
            let (lhs, rhs) = match_iff(equiv).ok_or_else(|| {
                KernelError::RuleMismatch("premise is not an equivalence".into())
            })?;
            // occurrences of the right formula are rewritten to the left one
            let mut counter = 0;
            let replaced = replace_occurrences(target, &rhs, &lhs, occurrences, &mut counter);
            if counter == 0 {
                return Err(KernelError::RuleMismatch(
                    "right-hand side of the equivalence does not occur in the target".into(),
                ));
            }
            Ok(Judgment {
                claim: Claim::Pathwise(iff(target.clone(), replaced)),
                obligations,
            })
        }
        ("g", RuleParams::Prog(alpha)) => {
            want_premises(premises, 1, rule_id)?;
            let f = pathwise_premise(premises, 0)?;
            Ok(Judgment {
                claim: Claim::Pathwise(or(crash(alpha.clone()), box_mod(alpha.clone(), f.clone()))),
                obligations,
            })
        }
        ("us", RuleParams::Subst(sigma)) => {
            want_premises(premises, 1, rule_id)?;
            let f = pathwise_premise(premises, 0)?;
            check_valid_subst(sigma)?;
            check_admissible(sigma, f)?;
            let out = apply_formula(sigma, f);
            if let Some(v) = crate::ast::well_formed_formula(&out).into_iter().next() {
                return Err(KernelError::IllFormed(v.to_string()));
            }
            Ok(Judgment { claim: Claim::Pathwise(out), obligations })
        }
        ("usp", RuleParams::Subst(sigma)) => {
            want_premises(premises, 1, rule_id)?;
            let spade = prob_premise(premises, 0)?;
            check_valid_subst(sigma)?;
            for atom in spade.atoms() {
                check_admissible(sigma, atom)?;
            }
            Ok(Judgment { claim: Claim::Prob(apply_prob(sigma, spade)), obligations })
        }
        ("valid-prob", RuleParams::None) => {
            want_premises(premises, 1, rule_id)?;
            let f = pathwise_premise(premises, 0)?;
            Ok(Judgment {
                claim: Claim::Prob(ProbFormula::eq(
                    ProbTerm::prob(f.clone()),
                    ProbTerm::Const(1.0),
                )),
                obligations,
            })
        }
        ("disjoint-prob", RuleParams::None) => {
            want_premises(premises, 1, rule_id)?;
            let f = pathwise_premise(premises, 0)?;
            let (l, r) = match f {
                Formula::And(l, r) => (&**l, &**r),
                _ => {
                    return Err(KernelError::RuleMismatch(
                        "premise is not the two-sided exclusion conjunction".into(),
                    ))
                }
            };
            let (sl, nr) = match_implies(l).ok_or_else(|| {
                KernelError::RuleMismatch("left conjunct is not an implication".into())
            })?;
            let (sr, nl) = match_implies(r).ok_or_else(|| {
                KernelError::RuleMismatch("right conjunct is not an implication".into())
            })?;
            let phi1 = match &sl {
                Formula::Sure(x) => (**x).clone(),
                _ => return Err(KernelError::RuleMismatch("expected sure(phi1) antecedent".into())),
            };
            let phi2 = match &sr {
                Formula::Sure(x) => (**x).clone(),
                _ => return Err(KernelError::RuleMismatch("expected sure(phi2) antecedent".into())),
            };
            let want_l = implies(phi1.clone().sure(), phi2.clone().sure().not());
            let want_r = implies(phi2.clone().sure(), phi1.clone().sure().not());
            if *l != want_l || *r != want_r || nr != phi2.clone().sure().not() || nl != phi1.clone().sure().not()
            {
                return Err(KernelError::RuleMismatch(
                    "premise does not have the mutual-exclusion shape".into(),
                ));
            }
            Ok(Judgment {
                claim: Claim::Prob(ProbFormula::eq(
                    ProbTerm::prob(or(phi1.clone(), phi2.clone())),
                    ProbTerm::prob(phi1).add(ProbTerm::prob(phi2)),
                )),
                obligations,
            })
        }
        ("ground-arith", RuleParams::GroundArith(f)) => {
            want_premises(premises, 0, rule_id)?;
            is_ground(f)?;
            let i = crate::sim::Interp::new(vec![1.0], Default::default());
            let out = crate::sim::eval_formula(
                &i,
                &crate::sim::Valuation::empty(),
                &crate::sim::SamplePath::new(0),
                0,
                f,
            );
            if out.value != crate::ast::TruthValue::Top {
                return Err(KernelError::RuleMismatch(format!(
                    "ground formula evaluates to {}",
                    out.value
                )));
            }
            Ok(Judgment { claim: Claim::Pathwise(f.clone()), obligations })
        }
        ("sde-ineq", RuleParams::SdeIneq { prefix, sde, theta, lambda, bound }) => {
            want_premises(premises, 3, rule_id)?;
            let h = sde.boundary.clone();
            let expected1 = implies(
                Formula::diamond(prefix.clone(), h.clone()),
                leq(theta.clone(), Term::Const(*lambda).mul(Term::Const(*bound))),
            );
            let expected2 = implies(h.clone(), Formula::geq(theta.clone(), Term::Const(0.0)));
            let expected3 = implies(
                h.clone(),
                leq(Term::DiffT(Box::new(theta.clone())), Term::Const(0.0)),
            );
            for (k, want) in [expected1, expected2, expected3].iter().enumerate() {
                let got = pathwise_premise(premises, k)?;
                if got != want {
                    return Err(KernelError::RuleMismatch(format!(
                        "premise {} should be `{}`",
                        k + 1,
                        want
                    )));
                }
            }
            let mut obligations = obligations;
            obligations.push(
                "the interpretation of theta has compact real support for every sample path (not checked)".into(),
            );
            obligations.push(
                "drift and diffusion are real and Lipschitz on the region where the boundary is definitely true (not checked)".into(),
            );
            let inner = Formula::diamond(
                Program::Sde(sde.clone()),
                Formula::geq(theta.clone(), Term::Const(*lambda)),
            );
            Ok(Judgment {
                claim: Claim::Prob(ProbFormula::le(
                    ProbTerm::prob(Formula::diamond(prefix.clone(), inner)),
                    ProbTerm::Const(*bound),
                )),
                obligations,
            })
        }
        (other, _) => {
            if matches!(
                other,
                "and-elim" | "mp" | "iff-sub" | "g" | "us" | "usp" | "valid-prob"
                    | "disjoint-prob" | "ground-arith" | "sde-ineq"
            ) {
                Err(KernelError::RuleMismatch(format!("rule {other} given wrong parameters")))
            } else {
                Err(KernelError::UnknownRule(other.into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Term, Var};

    fn judged(f: Formula) -> Judgment {
        Judgment { claim: Claim::Pathwise(f), obligations: vec![] }
    }

    #[test]
    fn instantiate_id_axiom() {
        let mut sigma = Substitution::new();
        sigma.map_pred("p", 0, Formula::geq(Term::var("x"), Term::Const(0.0)));
        let j = instantiate("id", &sigma).unwrap();
        let want = iff(
            Formula::geq(Term::var("x"), Term::Const(0.0)),
            Formula::geq(Term::var("x"), Term::Const(0.0)),
        );
        assert_eq!(j.claim, Claim::Pathwise(want));
    }

    #[test]
    fn instantiate_choice_with_disjoint_reads() {
        let mut sigma = Substitution::new();
        sigma.map_prog("a", Program::Assign(Var::named("x"), Term::Const(1.0)));
        sigma.map_prog("b", Program::Fail);
        sigma.map_pred("p", 0, Formula::geq(Term::var("y"), Term::Const(0.0)));
        let j = instantiate("choice", &sigma).unwrap();
        match j.claim {
            Claim::Pathwise(f) => {
                let printed = f.to_string();
                assert!(printed.contains("x := 1"), "{printed}");
            }
            _ => panic!(),
        }
    }

    #[test]
    fn instantiate_rejects_clash() {
        // the canonical clash: the predicate reads what the program writes
        let mut sigma = Substitution::new();
        sigma.map_prog("a", Program::Assign(Var::named("x"), Term::Const(1.0)));
        sigma.map_prog("b", Program::Fail);
        sigma.map_pred("p", 0, Formula::geq(Term::var("x"), Term::Const(0.0)));
        let err = instantiate("choice", &sigma).unwrap_err();
        assert!(matches!(err, KernelError::Inadmissible { .. }), "{err}");
    }

    #[test]
    fn mp_matches_and_projects() {
        let a = Formula::geq(Term::var("x"), Term::Const(0.0));
        let b = Formula::geq(Term::var("x").add(Term::Const(1.0)), Term::Const(1.0));
        let imp = implies(a.clone(), b.clone());
        let j = apply_rule("mp", &[&judged(a), &judged(imp)], &RuleParams::None).unwrap();
        assert_eq!(j.claim, Claim::Pathwise(b));
        // misuse: premises swapped
        let a2 = Formula::geq(Term::var("x"), Term::Const(0.0));
        let err = apply_rule("mp", &[&judged(a2.clone()), &judged(a2)], &RuleParams::None)
            .unwrap_err();
        assert!(matches!(err, KernelError::RuleMismatch(_)));
    }

    #[test]
    fn g_builds_crash_disjunction() {
        let f = Formula::geq(Term::Const(1.0), Term::Const(0.0));
        let j = apply_rule("g", &[&judged(f.clone())], &RuleParams::Prog(Program::Fail)).unwrap();
        let want = or(crash(Program::Fail), box_mod(Program::Fail, f));
        assert_eq!(j.claim, Claim::Pathwise(want));
    }

    #[test]
    fn valid_prob_wraps_in_probability_one() {
        let f = Formula::geq(Term::Const(0.0), Term::Const(0.0));
        let j = apply_rule("valid-prob", &[&judged(f.clone())], &RuleParams::None).unwrap();
        match j.claim {
            Claim::Prob(s) => {
                assert_eq!(s, ProbFormula::eq(ProbTerm::prob(f), ProbTerm::Const(1.0)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn ground_arith_accepts_truths_and_rejects_falsehoods() {
        let t = Formula::geq(Term::Const(1.0), Term::Const(0.0));
        assert!(apply_rule("ground-arith", &[], &RuleParams::GroundArith(t)).is_ok());
        let f = Formula::geq(Term::Const(0.0), Term::Const(1.0));
        assert!(apply_rule("ground-arith", &[], &RuleParams::GroundArith(f)).is_err());
        let open = Formula::geq(Term::var("x"), Term::Const(0.0));
        assert!(apply_rule("ground-arith", &[], &RuleParams::GroundArith(open)).is_err());
    }

    #[test]
    fn us_rejects_inadmissible_after_deriving_schema() {
        let schema = lookup("skip-unit").unwrap();
        let SchemaBody::Pathwise(f) = schema.body else { panic!() };
        let premise = judged(f);
        // skip writes nothing, so any predicate replacement is admissible
        let mut sigma = Substitution::new();
        sigma.map_pred("p", 0, Formula::geq(Term::var("x"), Term::Const(0.0)));
        assert!(apply_rule("us", &[&premise], &RuleParams::Subst(sigma)).is_ok());
    }
}
