//! `.sdl` declaration files: one declaration per line,
//! `term NAME = ...` / `prog NAME = ...` / `form NAME = ...`,
//! `#` comments.

use crate::ast::{Formula, Program, Term};

use super::parser::{parse_formula, parse_program, parse_term};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Term(Term),
    Prog(Program),
    Form(Formula),
}

#[derive(Debug, Clone, Default)]
pub struct SdlFile {
    pub decls: Vec<(String, Decl)>,
}

impl SdlFile {
    pub fn parse(src: &str) -> Result<SdlFile, ParseError> {
        let mut out = SdlFile::default();
        for (lineno, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ParseError {
                span: super::span::SourceSpan {
                    start: 0,
                    end: raw.len(),
                    line: lineno as u32 + 1,
                    col: 1,
                },
                message,
            };
            let mut parts = line.splitn(2, '=');
            let head = parts.next().unwrap_or("").trim();
            let body = parts.next().ok_or_else(|| err("missing `=` in declaration".into()))?;
            let mut words = head.split_whitespace();
            let kind = words.next().ok_or_else(|| err("empty declaration head".into()))?;
            let name = words.next().ok_or_else(|| err("missing declaration name".into()))?;
            if words.next().is_some() {
                return Err(err("extra tokens before `=`".into()));
            }
            let reline = |mut e: ParseError| {
                e.span.line = lineno as u32 + 1;
                e
            };
            let decl = match kind {
                "term" => Decl::Term(parse_term(body).map_err(reline)?),
                "prog" => Decl::Prog(parse_program(body).map_err(reline)?),
                "form" => Decl::Form(parse_formula(body).map_err(reline)?),
                other => return Err(err(format!("unknown declaration kind `{other}`"))),
            };
            if out.decls.iter().any(|(n, _)| n == name) {
                return Err(err(format!("duplicate declaration `{name}`")));
            }
            out.decls.push((name.to_string(), decl));
        }
        Ok(out)
    }

    pub fn lookup(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_declarations_and_comments() {
        let src = "# header\nterm two = 1 + 1\nprog p = skip\nform f = two@0 >= 0\n";
        let file = SdlFile::parse(src).unwrap();
        assert_eq!(file.decls.len(), 3);
        assert!(matches!(file.lookup("p"), Some(Decl::Prog(Program::Skip))));
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let src = "term a = 1\nterm a = 2\n";
        let e = SdlFile::parse(src).unwrap_err();
        assert!(e.message.contains("duplicate"));
        assert_eq!(e.span.line, 2);
    }

    #[test]
    fn errors_carry_the_line() {
        let src = "term ok = 1\nform broken = x >=\n";
        let e = SdlFile::parse(src).unwrap_err();
        assert_eq!(e.span.line, 2);
    }
}
