//! Proof scripts: a line-oriented format replayed through the kernel.
//!
//! ```text
//! # derive <skip> (x >= 0) <-> (x >= 0)
//! axiom skip-unit subst { p@0 -> x >= 0 }
//! expect < skip > (x >= 0) <-> x >= 0
//! ```
//!
//! Lines are `axiom <id> [subst { .. }]`, `rule <id> <premises..>
//! [params]`, `lemma <name>`, or `expect <formula>`. Premise references
//! count judgment-producing steps from 1. Rule parameters are written as
//! bracketed payloads: `prog { .. }`, `form { .. } [at i,j]`, `subst
//! { .. }`, and for the stochastic inequality rule `prog { .. } sde
//! { .. } term { .. } lambda <num> bound <num>`.

use crate::analysis::{sig_formula, Signature, SymRef};
use crate::ast::{Program, SymKind};
use crate::prob::ProbTerm;
use crate::syntax::{parse_formula, parse_prob_formula, parse_substitution, ScriptCursor};

use super::axioms::{lookup, AxiomSchema, SchemaBody};
use super::rules::{apply_rule, instantiate_schema, KernelError, RuleParams};
use super::{Claim, Judgment};

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Axiom { id: String, subst_text: Option<String> },
    Rule { id: String, premises: Vec<usize>, params_text: String },
    Lemma { name: String },
    Expect { text: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProofScript {
    pub steps: Vec<(u32, Step)>,
}

fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(k) => (&s[..k], s[k..].trim_start()),
        None => (s, ""),
    }
}

pub fn parse_script(src: &str) -> Result<ProofScript, crate::syntax::ParseError> {
    let mut out = ProofScript::default();
    for (k, raw) in src.lines().enumerate() {
        let lineno = k as u32 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| crate::syntax::ParseError {
            span: crate::syntax::SourceSpan { start: 0, end: raw.len(), line: lineno, col: 1 },
            message,
        };
        let (kw, rest) = split_word(line);
        let step = match kw {
            "axiom" => {
                let (id, rest) = split_word(rest);
                if id.is_empty() {
                    return Err(err("missing axiom id".into()));
                }
                let subst_text =
                    if rest.is_empty() { None } else { Some(rest.to_string()) };
                Step::Axiom { id: id.to_string(), subst_text }
            }
            "rule" => {
                let (id, mut rest) = split_word(rest);
                if id.is_empty() {
                    return Err(err("missing rule id".into()));
                }
                let mut premises = Vec::new();
                loop {
                    let (word, after) = split_word(rest);
                    if let Ok(n) = word.parse::<usize>() {
                        premises.push(n);
                        rest = after;
                    } else {
                        break;
                    }
                }
                Step::Rule {
                    id: id.to_string(),
                    premises,
                    params_text: rest.to_string(),
                }
            }
            "lemma" => {
                let (name, rest) = split_word(rest);
                if name.is_empty() || !rest.is_empty() {
                    return Err(err("lemma takes exactly one name".into()));
                }
                Step::Lemma { name: name.to_string() }
            }
            "expect" => {
                if rest.is_empty() {
                    return Err(err("expect needs a formula".into()));
                }
                Step::Expect { text: rest.to_string() }
            }
            other => return Err(err(format!("unknown script keyword `{other}`"))),
        };
        out.steps.push((lineno, step));
    }
    Ok(out)
}

fn schema_signature(schema: &AxiomSchema) -> Signature {
    let mut sig = Signature::new();
    match &schema.body {
        SchemaBody::Pathwise(f) => sig_formula(f, &mut sig),
        SchemaBody::Probabilistic(spade) => {
            for atom in spade.atoms() {
                sig_formula(atom, &mut sig);
            }
            fn syms(t: &ProbTerm, sig: &mut Signature) {
                match t {
                    ProbTerm::Sym(name) => {
                        sig.insert(SymRef { kind: SymKind::Fn, name: name.clone(), arity: 0 });
                    }
                    ProbTerm::Add(a, b) | ProbTerm::Mul(a, b) => {
                        syms(a, sig);
                        syms(b, sig);
                    }
                    ProbTerm::Const(_) | ProbTerm::Prob(_) => {}
                }
            }
            syms(&spade.lhs, &mut sig);
            syms(&spade.rhs, &mut sig);
        }
    }
    sig
}

fn claim_signature(claim: &Claim) -> Signature {
    let mut sig = Signature::new();
    match claim {
        Claim::Pathwise(f) => sig_formula(f, &mut sig),
        Claim::Prob(spade) => {
            for atom in spade.atoms() {
                sig_formula(atom, &mut sig);
            }
        }
    }
    sig
}

/// Built-in derivations importable by name with `lemma <name>`.
pub fn lemma_registry() -> Vec<(&'static str, &'static str)> {
    vec![
        ("triv-geq", "rule ground-arith form { 0 >= 0 }\n"),
        ("skip-self", "axiom skip-unit subst { p@0 -> 0 >= 0 }\n"),
    ]
}

fn parse_rule_params(
    id: &str,
    params_text: &str,
    premises: &[&Judgment],
) -> Result<RuleParams, KernelError> {
    let needs_none = matches!(id, "and-elim" | "mp" | "valid-prob" | "disjoint-prob");
    if needs_none {
        if !params_text.trim().is_empty() {
            return Err(KernelError::RuleMismatch(format!("rule {id} takes no parameters")));
        }
        return Ok(RuleParams::None);
    }
    let mut cur = ScriptCursor::new(params_text)?;
    let params = match id {
        "g" => {
            cur.take_ident().ok().filter(|w| w == "prog").ok_or_else(|| {
                KernelError::RuleMismatch("rule g expects `prog { .. }`".into())
            })?;
            RuleParams::Prog(cur.take_braced_program()?)
        }
        "us" | "usp" => {
            let sig = premises
                .first()
                .map(|j| claim_signature(&j.claim))
                .unwrap_or_default();
            RuleParams::Subst(cur.take_substitution(&sig)?)
        }
        "iff-sub" => {
            cur.take_ident().ok().filter(|w| w == "form").ok_or_else(|| {
                KernelError::RuleMismatch("rule iff-sub expects `form { .. }`".into())
            })?;
            let target = cur.take_braced_formula()?;
            let occurrences = if cur.peek_is_ident("at") {
                cur.take_ident()?;
                Some(cur.take_comma_separated_usizes()?)
            } else {
                None
            };
            RuleParams::IffSub { target, occurrences }
        }
        "ground-arith" => {
            cur.take_ident().ok().filter(|w| w == "form").ok_or_else(|| {
                KernelError::RuleMismatch("rule ground-arith expects `form { .. }`".into())
            })?;
            RuleParams::GroundArith(cur.take_braced_formula()?)
        }
        "sde-ineq" => {
            cur.take_ident().ok().filter(|w| w == "prog").ok_or_else(|| {
                KernelError::RuleMismatch("rule sde-ineq expects `prog { .. }` first".into())
            })?;
            let prefix = cur.take_braced_program()?;
            cur.take_ident().ok().filter(|w| w == "sde").ok_or_else(|| {
                KernelError::RuleMismatch("rule sde-ineq expects `sde { .. }`".into())
            })?;
            let sde_prog = cur.take_braced_program()?;
            let Program::Sde(sde) = sde_prog else {
                return Err(KernelError::RuleMismatch(
                    "the `sde { .. }` payload must be a differential-equation program".into(),
                ));
            };
            cur.take_ident().ok().filter(|w| w == "term").ok_or_else(|| {
                KernelError::RuleMismatch("rule sde-ineq expects `term { .. }`".into())
            })?;
            let theta = cur.take_braced_term()?;
            cur.take_ident().ok().filter(|w| w == "lambda").ok_or_else(|| {
                KernelError::RuleMismatch("rule sde-ineq expects `lambda <num>`".into())
            })?;
            let lambda = cur.take_number()?;
            cur.take_ident().ok().filter(|w| w == "bound").ok_or_else(|| {
                KernelError::RuleMismatch("rule sde-ineq expects `bound <num>`".into())
            })?;
            let bound = cur.take_number()?;
            RuleParams::SdeIneq { prefix, sde, theta, lambda, bound }
        }
        other => return Err(KernelError::UnknownRule(other.into())),
    };
    cur.expect_end()?;
    Ok(params)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accepted { judgments: Vec<Judgment>, obligations: Vec<String> },
    Rejected { step: usize, line: u32, error: String, sofar: Vec<Judgment> },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted { .. })
    }

    pub fn open_obligations(&self) -> &[String] {
        match self {
            Verdict::Accepted { obligations, .. } => obligations,
            Verdict::Rejected { .. } => &[],
        }
    }

    /// Deterministic textual report, one line per step.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let steps: &[Judgment] = match self {
            Verdict::Accepted { judgments, .. } => judgments,
            Verdict::Rejected { sofar, .. } => sofar,
        };
        for (k, j) in steps.iter().enumerate() {
            out.push_str(&format!("step {}: ok  {}\n", k + 1, j.claim));
        }
        match self {
            Verdict::Accepted { judgments, obligations } => {
                for o in obligations {
                    out.push_str(&format!("obligation: {o}\n"));
                }
                out.push_str(&format!(
                    "accepted ({} step{}, {} open obligation{})\n",
                    judgments.len(),
                    if judgments.len() == 1 { "" } else { "s" },
                    obligations.len(),
                    if obligations.len() == 1 { "" } else { "s" },
                ));
            }
            Verdict::Rejected { step, line, error, .. } => {
                out.push_str(&format!("step {step}: error (line {line}): {error}\n"));
                out.push_str(&format!("rejected at step {step}\n"));
            }
        }
        out
    }
}

/// Replays a script. Accepted iff every step succeeds; obligations are
/// collected across steps and surfaced, never discharged.
pub fn check_proof(script: &ProofScript) -> Verdict {
    check_proof_depth(script, 0)
}

fn check_proof_depth(script: &ProofScript, depth: usize) -> Verdict {
    let mut judgments: Vec<Judgment> = Vec::new();
    let reject = |judgments: &[Judgment], line: u32, error: String| Verdict::Rejected {
        step: judgments.len() + 1,
        line,
        error,
        sofar: judgments.to_vec(),
    };
    if depth > 4 {
        return reject(&judgments, 0, "lemma imports nest too deeply".into());
    }
    for (line, step) in &script.steps {
        match step {
            Step::Axiom { id, subst_text } => {
                let Some(schema) = lookup(id) else {
                    return reject(&judgments, *line, KernelError::UnknownAxiom(id.clone()).to_string());
                };
                let sigma = match subst_text {
                    None => crate::subst::Substitution::new(),
                    Some(text) => {
                        match parse_substitution(text, &schema_signature(&schema)) {
                            Ok(s) => s,
                            Err(e) => return reject(&judgments, *line, e.to_string()),
                        }
                    }
                };
                match instantiate_schema(&schema, &sigma) {
                    Ok(j) => judgments.push(j),
                    Err(e) => return reject(&judgments, *line, e.to_string()),
                }
            }
            Step::Rule { id, premises, params_text } => {
                let mut prem_refs: Vec<&Judgment> = Vec::new();
                for idx in premises {
                    match idx.checked_sub(1).and_then(|k| judgments.get(k)) {
                        Some(j) => prem_refs.push(j),
                        None => {
                            return reject(
                                &judgments,
                                *line,
                                KernelError::PremiseIndex(*idx).to_string(),
                            )
                        }
                    }
                }
                let params = match parse_rule_params(id, params_text, &prem_refs) {
                    Ok(p) => p,
                    Err(e) => return reject(&judgments, *line, e.to_string()),
                };
                match apply_rule(id, &prem_refs, &params) {
                    Ok(j) => judgments.push(j),
                    Err(e) => return reject(&judgments, *line, e.to_string()),
                }
            }
            Step::Lemma { name } => {
                let Some((_, text)) = lemma_registry().into_iter().find(|(n, _)| n == name)
                else {
                    return reject(
                        &judgments,
                        *line,
                        KernelError::UnknownLemma(name.clone()).to_string(),
                    );
                };
                let inner = match parse_script(text) {
                    Ok(s) => s,
                    Err(e) => return reject(&judgments, *line, e.to_string()),
                };
                match check_proof_depth(&inner, depth + 1) {
                    Verdict::Accepted { judgments: inner_js, .. } => match inner_js.last() {
                        Some(j) => judgments.push(j.clone()),
                        None => {
                            return reject(&judgments, *line, format!("lemma {name} derives nothing"))
                        }
                    },
                    Verdict::Rejected { step, error, .. } => {
                        return reject(
                            &judgments,
                            *line,
                            format!("lemma {name} fails at its step {step}: {error}"),
                        )
                    }
                }
            }
            Step::Expect { text } => {
                let Some(last) = judgments.last() else {
                    return reject(&judgments, *line, "expect before any judgment".into());
                };
                let ok = match (&last.claim, parse_formula(text)) {
                    (Claim::Pathwise(have), Ok(want)) => *have == want,
                    (claim, _) => match (claim, parse_prob_formula(text)) {
                        (Claim::Prob(have), Ok(want)) => *have == want,
                        (_, Err(e)) => return reject(&judgments, *line, e.to_string()),
                        _ => false,
                    },
                };
                if !ok {
                    return Verdict::Rejected {
                        step: judgments.len(),
                        line: *line,
                        error: KernelError::ExpectFailed {
                            expected: text.clone(),
                            derived: last.claim.to_string(),
                        }
                        .to_string(),
                        sofar: judgments.clone(),
                    };
                }
            }
        }
    }
    let mut obligations = Vec::new();
    for j in &judgments {
        for o in &j.obligations {
            if !obligations.contains(o) {
                obligations.push(o.clone());
            }
        }
    }
    Verdict::Accepted { judgments, obligations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skip_equivalence_script_accepts() {
        let script = parse_script(
            "axiom skip-unit subst { p@0 -> x >= 0 }\nexpect < skip > (x >= 0) <-> x >= 0\n",
        )
        .unwrap();
        let v = check_proof(&script);
        assert!(v.is_accepted(), "{}", v.render());
    }

    #[test]
    fn mp_misuse_rejected_at_step_two() {
        let script = parse_script("axiom id\nrule mp 1 1\n").unwrap();
        match check_proof(&script) {
            Verdict::Rejected { step, .. } => assert_eq!(step, 2),
            v => panic!("{}", v.render()),
        }
    }

    #[test]
    fn determinism_of_replay() {
        let src = "axiom and-comm subst { p@0 -> x >= 0 ; q@0 -> y >= 0 }\n\
                   axiom id subst { p@0 -> x >= 0 }\n";
        let script = parse_script(src).unwrap();
        let a = check_proof(&script).render();
        let b = check_proof(&script).render();
        assert_eq!(a, b);
    }

    #[test]
    fn lemma_import_provides_judgment() {
        let script = parse_script("lemma triv-geq\nrule g 1 prog { fail }\n").unwrap();
        let v = check_proof(&script);
        assert!(v.is_accepted(), "{}", v.render());
    }

    #[test]
    fn sde_inequality_attaches_two_obligations() {
        // The first premise needs a modality, which ground arithmetic
        // cannot supply: rewrite the guard through the skip equivalence.
        let src = "\
rule ground-arith form { (1 >= 0) -> (0 <= 1 * 0.5) }
axiom skip-unit subst { p@0 -> 1 >= 0 }
rule iff-sub 2 form { (1 >= 0) -> (0 <= 1 * 0.5) }
axiom and-weaken subst { p@0 -> ((1 >= 0) -> (0 <= 1 * 0.5)) -> (< skip > (1 >= 0) -> (0 <= 1 * 0.5)) ; q@0 -> (< skip > (1 >= 0) -> (0 <= 1 * 0.5)) -> ((1 >= 0) -> (0 <= 1 * 0.5)) }
rule mp 3 4
rule mp 1 5
rule ground-arith form { (1 >= 0) -> (0 >= 0) }
rule ground-arith form { (1 >= 0) -> (d/dt(0) <= 0) }
rule sde-ineq 6 7 8 prog { skip } sde { dx = 0 dt + 1 dW & 1 >= 0 } term { 0 } lambda 1 bound 0.5
";
        let script = parse_script(src).unwrap();
        match check_proof(&script) {
            Verdict::Accepted { obligations, judgments } => {
                assert_eq!(obligations.len(), 2);
                assert_eq!(judgments.len(), 9);
            }
            v => panic!("{}", v.render()),
        }
    }
}
