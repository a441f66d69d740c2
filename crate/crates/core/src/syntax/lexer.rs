//! Tokenizer for the expression and script languages.

use super::span::SourceSpan;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    // operators and punctuation
    Plus,       // +
    StarOp,     // *
    Minus,      // - (only before numeric literals)
    Slash,      // /
    Assign,     // :=
    Ge,         // >=
    Le,         // <=
    Lt,         // <
    Gt,         // >
    EqOp,       // =
    Bang,       // !
    Amp,        // &
    Pipe,       // |
    Arrow,      // ->
    Iff,        // <->
    ChoiceOp,   // ++
    Semi,       // ;
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Dot,
    At,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number(n) => write!(f, "number `{n}`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::StarOp => f.write_str("`*`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::EqOp => f.write_str("`=`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Iff => f.write_str("`<->`"),
            Tok::ChoiceOp => f.write_str("`++`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::At => f.write_str("`@`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    macro_rules! span {
        ($start:expr, $scol:expr, $end:expr) => {
            SourceSpan { start: $start, end: $end, line, col: $scol }
        };
    }
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let scol = col;
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '0'..='9' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    // a dot not followed by a digit ends the number (subscript syntax)
                    if bytes[j] == b'.' && !(j + 1 < bytes.len() && bytes[j + 1].is_ascii_digit()) {
                        break;
                    }
                    j += 1;
                }
                // scientific notation
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let text = &src[i..j];
                let mut value: f64 = text.parse().map_err(|_| ParseError {
                    span: span!(start, scol, j),
                    message: format!("bad number literal `{text}`"),
                })?;
                // ratio p/q
                if j < bytes.len() && bytes[j] == b'/' && j + 1 < bytes.len() && bytes[j + 1].is_ascii_digit() {
                    let mut k = j + 1;
                    while k < bytes.len() && (bytes[k].is_ascii_digit() || bytes[k] == b'.') {
                        if bytes[k] == b'.' && !(k + 1 < bytes.len() && bytes[k + 1].is_ascii_digit()) {
                            break;
                        }
                        k += 1;
                    }
                    let denom: f64 = src[j + 1..k].parse().map_err(|_| ParseError {
                        span: span!(start, scol, k),
                        message: format!("bad ratio literal `{}`", &src[i..k]),
                    })?;
                    value /= denom;
                    j = k;
                }
                col += (j - i) as u32;
                out.push(Token { tok: Tok::Number(value), span: span!(start, scol, j) });
                i = j;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                col += (j - i) as u32;
                out.push(Token { tok: Tok::Ident(src[i..j].to_string()), span: span!(start, scol, j) });
                i = j;
            }
            _ => {
                let two = if i + 1 < bytes.len() { &src[i..i + 2] } else { "" };
                let three = if i + 2 < bytes.len() { &src[i..i + 3] } else { "" };
                let (tok, len) = if three == "<->" {
                    (Tok::Iff, 3)
                } else if two == ":=" {
                    (Tok::Assign, 2)
                } else if two == ">=" {
                    (Tok::Ge, 2)
                } else if two == "<=" {
                    (Tok::Le, 2)
                } else if two == "->" {
                    (Tok::Arrow, 2)
                } else if two == "++" {
                    (Tok::ChoiceOp, 2)
                } else {
                    let t = match c {
                        '+' => Tok::Plus,
                        '*' => Tok::StarOp,
                        '-' => Tok::Minus,
                        '/' => Tok::Slash,
                        '<' => Tok::Lt,
                        '>' => Tok::Gt,
                        '=' => Tok::EqOp,
                        '!' => Tok::Bang,
                        '&' => Tok::Amp,
                        '|' => Tok::Pipe,
                        ';' => Tok::Semi,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        ',' => Tok::Comma,
                        '.' => Tok::Dot,
                        '@' => Tok::At,
                        other => {
                            return Err(ParseError {
                                span: span!(start, scol, i + 1),
                                message: format!("unexpected character `{other}`"),
                            })
                        }
                    };
                    (t, 1)
                };
                col += len as u32;
                out.push(Token { tok, span: span!(start, scol, i + len) });
                i += len;
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan { start: src.len(), end: src.len(), line, col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_ratios() {
        assert_eq!(toks("1.5"), vec![Tok::Number(1.5), Tok::Eof]);
        assert_eq!(toks("3/4"), vec![Tok::Number(0.75), Tok::Eof]);
        assert_eq!(toks("1e-3"), vec![Tok::Number(1e-3), Tok::Eof]);
    }

    #[test]
    fn subscript_dot_is_not_a_decimal_point() {
        assert_eq!(
            toks("x.t"),
            vec![Tok::Ident("x".into()), Tok::Dot, Tok::Ident("t".into()), Tok::Eof]
        );
        assert_eq!(toks("1.t"), vec![Tok::Number(1.0), Tok::Dot, Tok::Ident("t".into()), Tok::Eof]);
    }

    #[test]
    fn operators_longest_match() {
        assert_eq!(toks("<->"), vec![Tok::Iff, Tok::Eof]);
        assert_eq!(toks("<-"), vec![Tok::Lt, Tok::Minus, Tok::Eof]);
        assert_eq!(toks(":= ++ >= <="), vec![Tok::Assign, Tok::ChoiceOp, Tok::Ge, Tok::Le, Tok::Eof]);
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(toks("x # trailing\ny"), vec![Tok::Ident("x".into()), Tok::Ident("y".into()), Tok::Eof]);
    }
}
