//! Recursive-descent parser for terms, programs, formulas, substitution
//! literals, and probability comparisons.
//!
//! The parser builds surface trees, elaborates them, and enforces
//! well-formedness at the construction sites so diagnostics carry spans.

use crate::analysis::{Signature, SymRef};
use crate::ast::sugar::{self, SFormula, SProgram, SSde, STerm};
use crate::ast::{FnRef, Formula, IotaTag, Program, SymKind, Term, Var};
use crate::prob::{CmpOp, ProbFormula, ProbTerm};
use crate::subst::Substitution;

use super::lexer::{lex, Tok, Token};
use super::span::SourceSpan;
use super::ParseError;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    iota_scopes: Vec<(IotaTag, u32)>,
    marker_ctx: Option<(u64, SymKind, String, u8)>,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0, iota_scopes: vec![], marker_ctx: None })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, want: &Tok) -> Result<(), ParseError> {
        if self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {want}, found {}", self.peek())))
        }
    }

    fn eat_ident(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == word => {
                self.bump();
                Ok(())
            }
            other => Err(self.err(format!("expected `{word}`, found {other}"))),
        }
    }

    fn err(&self, message: String) -> ParseError {
        ParseError { span: self.span(), message }
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.err(format!("unexpected {} after expression", self.peek())))
        }
    }

    // ---- variables -------------------------------------------------

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            other => Err(ParseError {
                span: self.toks[self.pos.saturating_sub(1)].span,
                message: format!("expected identifier, found {other}"),
            }),
        }
    }

    fn slot_of(&self, name: &str) -> Option<Var> {
        let digits = name.strip_prefix('d')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let (tag, _arity) = self.iota_scopes.last()?;
        let index: u32 = digits.parse().ok()?;
        Some(Var::Slot { owner: *tag, index })
    }

    fn var_from(&mut self, name: String) -> Result<Var, ParseError> {
        let mut v = self.slot_of(&name).unwrap_or(Var::Named(name));
        loop {
            if *self.peek() != Tok::Dot {
                return Ok(v);
            }
            self.bump();
            match self.peek().clone() {
                Tok::Ident(s) if s == "t" => {
                    self.bump();
                    v = v.time();
                }
                Tok::Ident(s) if s == "B" => {
                    self.bump();
                    self.eat(&Tok::LBracket)?;
                    let inner = self.parse_var()?;
                    self.eat(&Tok::RBracket)?;
                    v = v.brownian(inner);
                }
                other => return Err(self.err(format!("expected subscript `t` or `B[..]`, found {other}"))),
            }
        }
    }

    fn parse_var(&mut self) -> Result<Var, ParseError> {
        let name = self.ident()?;
        self.var_from(name)
    }

    // ---- terms -----------------------------------------------------

    fn term(&mut self) -> Result<STerm, ParseError> {
        let mut acc = self.term_product()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.term_product()?;
            acc = STerm::Add(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn term_product(&mut self) -> Result<STerm, ParseError> {
        let mut acc = self.term_factor()?;
        while *self.peek() == Tok::StarOp {
            self.bump();
            let rhs = self.term_factor()?;
            acc = STerm::Mul(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn is_marker_name(&self, name: &str) -> Option<u8> {
        let digits = name.strip_prefix('o')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        self.marker_ctx.as_ref()?;
        digits.parse().ok()
    }

    fn term_factor(&mut self) -> Result<STerm, ParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(STerm::Const(n))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Number(n) => Ok(STerm::Const(-n)),
                    other => Err(self.err(format!("expected number after `-`, found {other}"))),
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.term()?;
                self.eat(&Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if name == "iota" {
                    return self.iota_term();
                }
                if name == "d" && *self.peek2() == Tok::Slash {
                    self.bump(); // d
                    self.bump(); // /
                    self.eat_ident("dt")?;
                    self.eat(&Tok::LParen)?;
                    let inner = self.term()?;
                    self.eat(&Tok::RParen)?;
                    return Ok(STerm::DiffT(Box::new(inner)));
                }
                if name == "dB" && *self.peek2() == Tok::LBracket {
                    self.bump(); // dB
                    self.bump(); // [
                    let along = self.parse_var()?;
                    self.eat(&Tok::RBracket)?;
                    self.eat(&Tok::LParen)?;
                    let inner = self.term()?;
                    self.eat(&Tok::RParen)?;
                    return Ok(STerm::DiffB(along, Box::new(inner)));
                }
                if *self.peek2() == Tok::At {
                    return self.symbol_application();
                }
                if let Some(idx) = self.is_marker_name(&name) {
                    self.bump();
                    let (subst, kind, sym, arity) = self.marker_ctx.clone().unwrap();
                    return Ok(STerm::Func(
                        FnRef::Marker(crate::ast::MarkerKey {
                            subst,
                            kind,
                            name: sym,
                            arity,
                            index: idx,
                        }),
                        vec![],
                    ));
                }
                self.bump();
                Ok(STerm::Var(self.var_from(name)?))
            }
            other => Err(self.err(format!("expected a term, found {other}"))),
        }
    }

    /// `name@arity` optionally followed by an argument list.
    fn symbol_application(&mut self) -> Result<STerm, ParseError> {
        let at_span = self.span();
        let name = self.ident()?;
        self.eat(&Tok::At)?;
        let arity = match self.bump() {
            Tok::Number(n) if n >= 0.0 && n.fract() == 0.0 && n <= 255.0 => n as u8,
            other => {
                return Err(ParseError {
                    span: at_span,
                    message: format!("expected arity after `@`, found {other}"),
                })
            }
        };
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            if *self.peek() != Tok::RParen {
                loop {
                    args.push(self.term()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.eat(&Tok::RParen)?;
        }
        if args.len() != usize::from(arity) {
            return Err(ParseError {
                span: at_span,
                message: format!("symbol {name}@{arity} applied to {} arguments", args.len()),
            });
        }
        Ok(STerm::Func(FnRef::named(name, arity), args))
    }

    fn iota_term(&mut self) -> Result<STerm, ParseError> {
        let start = self.span();
        self.eat_ident("iota")?;
        let select = match self.bump() {
            Tok::Number(n) if n >= 1.0 && n.fract() == 0.0 => n as u32,
            other => return Err(self.err(format!("expected coordinate index, found {other}"))),
        };
        self.eat_ident("of")?;
        let arity = match self.bump() {
            Tok::Number(n) if n >= 1.0 && n.fract() == 0.0 => n as u32,
            other => return Err(self.err(format!("expected slot count, found {other}"))),
        };
        if select > arity {
            return Err(ParseError {
                span: start,
                message: format!("iota selects coordinate {select} of {arity}"),
            });
        }
        self.eat(&Tok::LBrace)?;
        let tag = IotaTag::fresh();
        self.iota_scopes.push((tag, arity));
        let body = self.formula();
        self.iota_scopes.pop();
        let body = body?;
        self.eat(&Tok::RBrace)?;
        // check the elaborated body immediately so the span is local
        let core = Term::Iota {
            tag,
            select,
            arity,
            body: Box::new(sugar::desugar(&body)),
        };
        if let Some(v) = crate::ast::well_formed_term(&core).into_iter().next() {
            return Err(ParseError { span: start, message: v.message });
        }
        Ok(STerm::Iota { tag, select, arity, body: Box::new(body) })
    }

    // ---- formulas --------------------------------------------------

    fn formula(&mut self) -> Result<SFormula, ParseError> {
        let lhs = self.formula_impl()?;
        if *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.formula()?;
            Ok(SFormula::Iff(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn formula_impl(&mut self) -> Result<SFormula, ParseError> {
        let lhs = self.formula_or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula_impl()?;
            Ok(SFormula::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn formula_or(&mut self) -> Result<SFormula, ParseError> {
        let mut acc = self.formula_and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.formula_and()?;
            acc = SFormula::Or(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn formula_and(&mut self) -> Result<SFormula, ParseError> {
        let mut acc = self.formula_unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.formula_unary()?;
            acc = SFormula::And(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn formula_unary(&mut self) -> Result<SFormula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(SFormula::Not(Box::new(self.formula_unary()?)))
            }
            Tok::Lt => {
                self.bump();
                let prog = self.program()?;
                self.eat(&Tok::Gt)?;
                let body = self.formula_unary()?;
                Ok(SFormula::Diamond(Box::new(prog), Box::new(body)))
            }
            Tok::LBracket => {
                self.bump();
                let prog = self.program()?;
                self.eat(&Tok::RBracket)?;
                let body = self.formula_unary()?;
                Ok(SFormula::BoxMod(Box::new(prog), Box::new(body)))
            }
            _ => self.formula_atom(),
        }
    }

    fn formula_atom(&mut self) -> Result<SFormula, ParseError> {
        if self.at_ident("sure") && *self.peek2() == Tok::LParen {
            self.bump();
            self.bump();
            let inner = self.formula()?;
            self.eat(&Tok::RParen)?;
            return Ok(SFormula::Sure(Box::new(inner)));
        }
        if self.at_ident("ind") && *self.peek2() == Tok::LParen {
            self.bump();
            self.bump();
            let inner = self.formula()?;
            self.eat(&Tok::RParen)?;
            return Ok(SFormula::Ind(Box::new(inner)));
        }
        if self.at_ident("crash") && *self.peek2() == Tok::LParen {
            self.bump();
            self.bump();
            let prog = self.program()?;
            self.eat(&Tok::RParen)?;
            return Ok(SFormula::Crash(Box::new(prog)));
        }
        // comparison, predicate application, or parenthesized formula
        let snapshot = self.pos;
        match self.comparison() {
            Ok(f) => Ok(f),
            Err(e) => {
                if self.toks[snapshot].tok == Tok::LParen {
                    self.pos = snapshot;
                    self.bump();
                    let inner = self.formula()?;
                    self.eat(&Tok::RParen)?;
                    Ok(inner)
                } else {
                    Err(e)
                }
            }
        }
    }

    fn comparison(&mut self) -> Result<SFormula, ParseError> {
        let lhs = self.term()?;
        let op = self.peek().clone();
        match op {
            Tok::Ge | Tok::Le | Tok::Lt | Tok::EqOp => {
                self.bump();
                let rhs = self.term()?;
                Ok(match op {
                    Tok::Ge => SFormula::Geq(lhs, rhs),
                    Tok::Le => SFormula::Leq(lhs, rhs),
                    Tok::Lt => SFormula::Lt(lhs, rhs),
                    _ => SFormula::EqCmp(lhs, rhs),
                })
            }
            _ => match lhs {
                STerm::Func(FnRef::Named { name, arity }, args) => {
                    Ok(SFormula::Pred { name, arity, args })
                }
                _ => Err(self.err(format!(
                    "expected a comparison or predicate, found {}",
                    self.peek()
                ))),
            },
        }
    }

    // ---- programs --------------------------------------------------

    fn program(&mut self) -> Result<SProgram, ParseError> {
        let mut acc = self.program_seq()?;
        while *self.peek() == Tok::ChoiceOp {
            self.bump();
            let rhs = self.program_seq()?;
            acc = SProgram::Choice(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn program_seq(&mut self) -> Result<SProgram, ParseError> {
        let mut acc = self.program_postfix()?;
        while *self.peek() == Tok::Semi {
            self.bump();
            let rhs = self.program_postfix()?;
            acc = SProgram::Seq(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn program_postfix(&mut self) -> Result<SProgram, ParseError> {
        let mut acc = self.program_atom()?;
        while *self.peek() == Tok::StarOp {
            self.bump();
            acc = SProgram::Star(Box::new(acc));
        }
        Ok(acc)
    }

    fn program_atom(&mut self) -> Result<SProgram, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.program()?;
                self.eat(&Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if name == "skip" {
                    self.bump();
                    return Ok(SProgram::Skip);
                }
                if name == "fail" {
                    self.bump();
                    return Ok(SProgram::Fail);
                }
                if name == "if" {
                    self.bump();
                    let guard = self.formula()?;
                    self.eat_ident("then")?;
                    let then_branch = self.program_postfix()?;
                    self.eat_ident("else")?;
                    let else_branch = self.program_postfix()?;
                    return Ok(SProgram::If(
                        Box::new(guard),
                        Box::new(then_branch),
                        Box::new(else_branch),
                    ));
                }
                if name == "G" && *self.peek2() == Tok::At {
                    self.bump();
                    self.bump();
                    let sym = self.ident()?;
                    return Ok(SProgram::Symbol(sym));
                }
                if name == "d" && *self.peek2() == Tok::LParen {
                    return self.sde(None);
                }
                if let Some(rest) = name.strip_prefix('d') {
                    if !rest.is_empty()
                        && rest.bytes().next().is_some_and(|b| b.is_ascii_alphabetic() || b == b'_')
                        && *self.peek2() == Tok::EqOp
                    {
                        return self.sde(Some(rest.to_string()));
                    }
                }
                // assignment or random assignment
                self.bump();
                let target = self.var_from(name)?;
                self.eat(&Tok::Assign)?;
                if *self.peek() == Tok::StarOp {
                    self.bump();
                    Ok(SProgram::Random(target))
                } else {
                    Ok(SProgram::Assign(target, self.term()?))
                }
            }
            other => Err(self.err(format!("expected a program, found {other}"))),
        }
    }

    /// `dx = b dt + s dW & H` or `d(x, y) = (...) dt + ((..),(..)) dW & H`.
    fn sde(&mut self, single: Option<String>) -> Result<SProgram, ParseError> {
        let start = self.span();
        let vars: Vec<Var> = match single {
            Some(name) => {
                self.bump(); // the d-prefixed identifier
                vec![Var::Named(name)]
            }
            None => {
                self.bump(); // d
                self.bump(); // (
                let mut vs = Vec::new();
                loop {
                    vs.push(self.parse_var()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.eat(&Tok::RParen)?;
                vs
            }
        };
        let n = vars.len();
        {
            let mut seen = std::collections::BTreeSet::new();
            for v in &vars {
                if !seen.insert(v.clone()) {
                    return Err(ParseError {
                        span: start,
                        message: format!("repeated variable {v} in vector"),
                    });
                }
            }
        }
        self.eat(&Tok::EqOp)?;
        let drift = self.term_vector(n)?;
        self.eat_ident("dt")?;
        self.eat(&Tok::Plus)?;
        let diffusion = if n == 1 {
            vec![vec![self.term()?]]
        } else {
            self.eat(&Tok::LParen)?;
            let mut rows = Vec::new();
            loop {
                rows.push(self.term_tuple(n)?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
            self.eat(&Tok::RParen)?;
            if rows.len() != n {
                return Err(ParseError {
                    span: start,
                    message: format!("diffusion has {} rows for {n} variables", rows.len()),
                });
            }
            rows
        };
        self.eat_ident("dW")?;
        self.eat(&Tok::Amp)?;
        let boundary = self.formula()?;
        Ok(SProgram::Sde(SSde { vars, drift, diffusion, boundary: Box::new(boundary) }))
    }

    fn term_vector(&mut self, n: usize) -> Result<Vec<STerm>, ParseError> {
        if n == 1 {
            Ok(vec![self.term()?])
        } else {
            self.term_tuple(n)
        }
    }

    fn term_tuple(&mut self, n: usize) -> Result<Vec<STerm>, ParseError> {
        let start = self.span();
        self.eat(&Tok::LParen)?;
        let mut out = Vec::new();
        loop {
            out.push(self.term()?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.eat(&Tok::RParen)?;
        if out.len() != n {
            return Err(ParseError {
                span: start,
                message: format!("expected {n} components, found {}", out.len()),
            });
        }
        Ok(out)
    }

    // ---- probability formulas ---------------------------------------

    fn prob_term(&mut self) -> Result<ProbTerm, ParseError> {
        let mut acc = self.prob_product()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            acc = acc.add(self.prob_product()?);
        }
        Ok(acc)
    }

    fn prob_product(&mut self) -> Result<ProbTerm, ParseError> {
        let mut acc = self.prob_atom()?;
        while *self.peek() == Tok::StarOp {
            self.bump();
            acc = acc.mul(self.prob_atom()?);
        }
        Ok(acc)
    }

    fn prob_atom(&mut self) -> Result<ProbTerm, ParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(ProbTerm::Const(n))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Number(n) => Ok(ProbTerm::Const(-n)),
                    other => Err(self.err(format!("expected number after `-`, found {other}"))),
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.prob_term()?;
                self.eat(&Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) if name == "P" && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let f = self.formula()?;
                self.eat(&Tok::RParen)?;
                Ok(ProbTerm::Prob(finish_formula(&f)?))
            }
            Tok::Ident(name) if *self.peek2() == Tok::At => {
                self.bump();
                self.bump();
                match self.bump() {
                    Tok::Number(n) if n == 0.0 => Ok(ProbTerm::Sym(name)),
                    other => Err(self.err(format!("expected arity 0, found {other}"))),
                }
            }
            other => Err(self.err(format!("expected probability term, found {other}"))),
        }
    }

    fn prob_formula(&mut self) -> Result<ProbFormula, ParseError> {
        let lhs = self.prob_term()?;
        let op = match self.bump() {
            Tok::Ge => CmpOp::Ge,
            Tok::Le => CmpOp::Le,
            Tok::EqOp => CmpOp::Eq,
            other => return Err(self.err(format!("expected `>=`, `<=`, or `=`, found {other}"))),
        };
        let rhs = self.prob_term()?;
        Ok(ProbFormula { op, lhs, rhs })
    }
}

fn finish_formula(surface: &SFormula) -> Result<Formula, ParseError> {
    let core = sugar::desugar(surface);
    if let Some(v) = crate::ast::well_formed_formula(&core).into_iter().next() {
        return Err(ParseError {
            span: SourceSpan { start: 0, end: 0, line: 1, col: 1 },
            message: v.to_string(),
        });
    }
    Ok(core)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let surface = p.term()?;
    p.expect_eof()?;
    let core = sugar::desugar_term(&surface);
    if let Some(v) = crate::ast::well_formed_term(&core).into_iter().next() {
        return Err(ParseError { span: SourceSpan { start: 0, end: src.len(), line: 1, col: 1 }, message: v.to_string() });
    }
    Ok(core)
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    let surface = p.program()?;
    p.expect_eof()?;
    let core = sugar::desugar_program(&surface);
    if let Some(v) = crate::ast::well_formed_program(&core).into_iter().next() {
        return Err(ParseError { span: SourceSpan { start: 0, end: src.len(), line: 1, col: 1 }, message: v.to_string() });
    }
    Ok(core)
}

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src)?;
    let surface = p.formula()?;
    p.expect_eof()?;
    let core = sugar::desugar(&surface);
    if let Some(v) = crate::ast::well_formed_formula(&core).into_iter().next() {
        return Err(ParseError { span: SourceSpan { start: 0, end: src.len(), line: 1, col: 1 }, message: v.to_string() });
    }
    Ok(core)
}

pub fn parse_prob_formula(src: &str) -> Result<ProbFormula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.prob_formula()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parses a substitution literal `subst { f@1 -> o1 + o1 ; p@0 -> x >= 0 ;
/// G@a -> x := 1 }`. Whether `name@arity` denotes a function or a
/// predicate symbol is resolved against `sig`; symbols outside the
/// signature parse as functions first, predicates second.
pub fn parse_substitution(src: &str, sig: &Signature) -> Result<Substitution, ParseError> {
    let mut p = Parser::new(src)?;
    let sigma = parse_subst_inner(&mut p, sig)?;
    p.expect_eof()?;
    Ok(sigma)
}

fn parse_subst_inner(p: &mut Parser, sig: &Signature) -> Result<Substitution, ParseError> {
    let mut sigma = Substitution::new();
    p.eat_ident("subst")?;
    p.eat(&Tok::LBrace)?;
    if *p.peek() == Tok::RBrace {
        p.bump();
        return Ok(sigma);
    }
    loop {
        match p.peek().clone() {
            Tok::Ident(head) if head == "G" && *p.peek2() == Tok::At => {
                p.bump();
                p.bump();
                let name = p.ident()?;
                p.eat(&Tok::Arrow)?;
                let surface = p.program()?;
                let prog = sugar::desugar_program(&surface);
                sigma.map_prog(&name, prog);
            }
            Tok::Ident(name) => {
                p.bump();
                p.eat(&Tok::At)?;
                let arity = match p.bump() {
                    Tok::Number(n) if n >= 0.0 && n.fract() == 0.0 && n <= 255.0 => n as u8,
                    other => return Err(p.err(format!("expected arity, found {other}"))),
                };
                p.eat(&Tok::Arrow)?;
                let is_pred = sig.contains(&SymRef {
                    kind: SymKind::Pred,
                    name: name.clone(),
                    arity,
                });
                let is_fn = sig.contains(&SymRef { kind: SymKind::Fn, name: name.clone(), arity });
                if is_pred && !is_fn {
                    p.marker_ctx = Some((sigma.id(), SymKind::Pred, name.clone(), arity));
                    let surface = p.formula()?;
                    p.marker_ctx = None;
                    sigma.map_pred(&name, arity, sugar::desugar(&surface));
                } else if is_fn {
                    p.marker_ctx = Some((sigma.id(), SymKind::Fn, name.clone(), arity));
                    let surface = p.term()?;
                    p.marker_ctx = None;
                    sigma.map_fn(&name, arity, sugar::desugar_term(&surface));
                } else {
                    // unknown symbol: term first, formula second
                    let snapshot = p.pos;
                    p.marker_ctx = Some((sigma.id(), SymKind::Fn, name.clone(), arity));
                    let as_term = p.term();
                    p.marker_ctx = None;
                    let fits = as_term.is_ok()
                        && matches!(p.peek(), Tok::Semi | Tok::RBrace);
                    if fits {
                        sigma.map_fn(&name, arity, sugar::desugar_term(&as_term.unwrap()));
                    } else {
                        p.pos = snapshot;
                        p.marker_ctx = Some((sigma.id(), SymKind::Pred, name.clone(), arity));
                        let surface = p.formula();
                        p.marker_ctx = None;
                        sigma.map_pred(&name, arity, sugar::desugar(&surface?));
                    }
                }
            }
            other => return Err(p.err(format!("expected substitution entry, found {other}"))),
        }
        match p.bump() {
            Tok::Semi => {
                if *p.peek() == Tok::RBrace {
                    p.bump();
                    break;
                }
            }
            Tok::RBrace => break,
            other => {
                return Err(p.err(format!("expected `;` or `}}` in substitution, found {other}")))
            }
        }
    }
    Ok(sigma)
}

/// Entry point used by the proof-script reader: parses a substitution
/// literal starting at the current token of an existing parser.
pub struct ScriptCursor(Parser);

impl ScriptCursor {
    pub fn new(src: &str) -> Result<ScriptCursor, ParseError> {
        Ok(ScriptCursor(Parser::new(src)?))
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.0.peek(), Tok::Eof)
    }

    pub fn take_ident(&mut self) -> Result<String, ParseError> {
        self.0.ident()
    }

    pub fn peek_is_ident(&self, word: &str) -> bool {
        self.0.at_ident(word)
    }

    pub fn take_number(&mut self) -> Result<f64, ParseError> {
        match self.0.bump() {
            Tok::Number(n) => Ok(n),
            other => Err(self.0.err(format!("expected number, found {other}"))),
        }
    }

    pub fn take_usize(&mut self) -> Result<usize, ParseError> {
        let n = self.take_number()?;
        if n >= 0.0 && n.fract() == 0.0 {
            Ok(n as usize)
        } else {
            Err(self.0.err(format!("expected whole number, found {n}")))
        }
    }

    pub fn peek_is_number(&self) -> bool {
        matches!(self.0.peek(), Tok::Number(_))
    }

    pub fn take_substitution(&mut self, sig: &Signature) -> Result<Substitution, ParseError> {
        parse_subst_inner(&mut self.0, sig)
    }

    pub fn take_braced_program(&mut self) -> Result<Program, ParseError> {
        self.0.eat(&Tok::LBrace)?;
        let surface = self.0.program()?;
        self.0.eat(&Tok::RBrace)?;
        let core = sugar::desugar_program(&surface);
        if let Some(v) = crate::ast::well_formed_program(&core).into_iter().next() {
            return Err(self.0.err(v.to_string()));
        }
        Ok(core)
    }

    pub fn take_braced_formula(&mut self) -> Result<Formula, ParseError> {
        self.0.eat(&Tok::LBrace)?;
        let surface = self.0.formula()?;
        self.0.eat(&Tok::RBrace)?;
        let core = sugar::desugar(&surface);
        if let Some(v) = crate::ast::well_formed_formula(&core).into_iter().next() {
            return Err(self.0.err(v.to_string()));
        }
        Ok(core)
    }

    pub fn take_braced_term(&mut self) -> Result<Term, ParseError> {
        self.0.eat(&Tok::LBrace)?;
        let surface = self.0.term()?;
        self.0.eat(&Tok::RBrace)?;
        Ok(sugar::desugar_term(&surface))
    }

    pub fn take_formula(&mut self) -> Result<Formula, ParseError> {
        let surface = self.0.formula()?;
        let core = sugar::desugar(&surface);
        if let Some(v) = crate::ast::well_formed_formula(&core).into_iter().next() {
            return Err(self.0.err(v.to_string()));
        }
        Ok(core)
    }

    pub fn take_prob_formula(&mut self) -> Result<ProbFormula, ParseError> {
        self.0.prob_formula()
    }

    pub fn contains_prob_atom(&self) -> bool {
        self.0.toks[self.0.pos..]
            .windows(2)
            .any(|w| matches!(&w[0].tok, Tok::Ident(s) if s == "P") && w[1].tok == Tok::LParen)
    }

    pub fn take_comma_separated_usizes(&mut self) -> Result<Vec<usize>, ParseError> {
        let mut out = vec![self.take_usize()?];
        while *self.0.peek() == Tok::Comma {
            self.0.bump();
            out.push(self.take_usize()?);
        }
        Ok(out)
    }

    pub fn expect_end(&self) -> Result<(), ParseError> {
        self.0.expect_eof()
    }

    pub fn error(&self, message: String) -> ParseError {
        self.0.err(message)
    }
}
