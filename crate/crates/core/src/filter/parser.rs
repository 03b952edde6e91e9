//! Recursive-descent parser for the filter grammar.
//!
//! ```text
//! expr      := or_expr
//! or_expr   := and_expr ("or" and_expr)*
//! and_expr  := not_expr ("and" not_expr)*
//! not_expr  := "not" not_expr | atom
//! atom      := "(" expr ")" | "true" | predicate
//! predicate := boolN "=" ("true" | "false")
//!            | intN "=" INT
//!            | intN "in" "{" INT ("," INT)* "}"
//!            | floatN "in" "[" NUM "," NUM "]"
//! ```
//!
//! Keywords and attribute names are case-insensitive.

use super::Filter;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Word(String),
    Number(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Word(w) => format!("`{w}`"),
            Tok::Number(n) => format!("number `{n}`"),
        }
    }
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let single = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'{' => Some(Tok::LBrace),
            b'}' => Some(Tok::RBrace),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b',' => Some(Tok::Comma),
            b'=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(t) = single {
            out.push((i, t));
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Word(input[start..i].to_ascii_lowercase())));
        } else if c.is_ascii_digit() || c == b'-' || c == b'+' || c == b'.' {
            let start = i;
            i += 1;
            while i < bytes.len() {
                let b = bytes[i];
                let exp_sign = (b == b'-' || b == b'+') && matches!(bytes[i - 1], b'e' | b'E');
                if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push((start, Tok::Number(input[start..i].to_string())));
        } else {
            return Err(syntax(
                i,
                format!("unexpected character `{}`", input[i..].chars().next().unwrap()),
            ));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy)]
enum AttrKind {
    Bool,
    Int,
    Float,
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map_or(self.end, |(p, _)| *p)
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let pos = self.pos();
        match self.next() {
            Some((_, t)) if t == want => Ok(()),
            Some((_, t)) => Err(syntax(
                pos,
                format!("expected {}, found {}", want.describe(), t.describe()),
            )),
            None => Err(syntax(pos, format!("expected {}, found end of input", want.describe()))),
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<()> {
        self.expect(Tok::Word(w.to_string()))
    }

    fn or_expr(&mut self) -> Result<Filter> {
        let mut items = vec![self.and_expr()?];
        while self.at_word("or") {
            self.idx += 1;
            items.push(self.and_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Filter::Or(items)
        })
    }

    fn and_expr(&mut self) -> Result<Filter> {
        let mut items = vec![self.not_expr()?];
        while self.at_word("and") {
            self.idx += 1;
            items.push(self.not_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Filter::And(items)
        })
    }

    fn not_expr(&mut self) -> Result<Filter> {
        if self.at_word("not") {
            self.idx += 1;
            return Ok(Filter::not(self.not_expr()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Filter> {
        let pos = self.pos();
        match self.next() {
            Some((_, Tok::LParen)) => {
                let inner = self.or_expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some((_, Tok::Word(w))) if w == "true" => Ok(Filter::True),
            Some((_, Tok::Word(w))) => {
                let (kind, attr) = attribute(&w).ok_or_else(|| {
                    syntax(pos, format!("unknown attribute `{w}` (expected boolN, intN or floatN)"))
                })?;
                self.predicate(kind, attr)
            }
            Some((_, t)) => Err(syntax(pos, format!("expected a predicate, found {}", t.describe()))),
            None => Err(syntax(pos, "expected a predicate, found end of input")),
        }
    }

    fn predicate(&mut self, kind: AttrKind, attr: usize) -> Result<Filter> {
        match kind {
            AttrKind::Bool => {
                self.expect(Tok::Eq)?;
                let pos = self.pos();
                match self.next() {
                    Some((_, Tok::Word(w))) if w == "true" => Ok(Filter::BoolEq { attr, value: true }),
                    Some((_, Tok::Word(w))) if w == "false" => {
                        Ok(Filter::BoolEq { attr, value: false })
                    }
                    _ => Err(syntax(pos, "expected `true` or `false`")),
                }
            }
            AttrKind::Int => {
                let pos = self.pos();
                match self.next() {
                    Some((_, Tok::Eq)) => Ok(Filter::IntEq {
                        attr,
                        value: self.int()?,
                    }),
                    Some((_, Tok::Word(w))) if w == "in" => {
                        if matches!(self.peek(), Some(Tok::LBracket)) {
                            return Err(syntax(
                                self.pos(),
                                "malformed range: ranges apply to float attributes only",
                            ));
                        }
                        self.expect(Tok::LBrace)?;
                        let mut values = vec![self.int()?];
                        while matches!(self.peek(), Some(Tok::Comma)) {
                            self.idx += 1;
                            values.push(self.int()?);
                        }
                        self.expect(Tok::RBrace)?;
                        Ok(Filter::int_in(attr, values))
                    }
                    _ => Err(syntax(pos, "expected `=` or `in` after int attribute")),
                }
            }
            AttrKind::Float => {
                self.expect_word("in")?;
                let open = self.pos();
                self.expect(Tok::LBracket)?;
                let low = self.num()?;
                self.expect(Tok::Comma)?;
                let high = self.num()?;
                self.expect(Tok::RBracket)?;
                if !(low <= high) {
                    return Err(syntax(open, format!("malformed range: low {low} exceeds high {high}")));
                }
                Ok(Filter::FloatRange { attr, low, high })
            }
        }
    }

    fn int(&mut self) -> Result<i32> {
        let pos = self.pos();
        match self.next() {
            Some((_, Tok::Number(n))) => n
                .parse::<i32>()
                .map_err(|_| syntax(pos, format!("invalid integer `{n}`"))),
            _ => Err(syntax(pos, "expected an integer")),
        }
    }

    fn num(&mut self) -> Result<f64> {
        let pos = self.pos();
        match self.next() {
            Some((_, Tok::Number(n))) => match n.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(syntax(pos, format!("invalid number `{n}`"))),
            },
            _ => Err(syntax(pos, "expected a number")),
        }
    }
}

fn attribute(word: &str) -> Option<(AttrKind, usize)> {
    let (kind, rest) = if let Some(r) = word.strip_prefix("bool") {
        (AttrKind::Bool, r)
    } else if let Some(r) = word.strip_prefix("int") {
        (AttrKind::Int, r)
    } else {
        let r = word.strip_prefix("float")?;
        (AttrKind::Float, r)
    };
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok().map(|n| (kind, n))
}

/// Parse a filter expression. Errors carry the byte offset of the offending token.
pub fn parse_filter(text: &str) -> Result<Filter> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        idx: 0,
        end: text.len(),
    };
    let f = p.or_expr()?;
    if let Some(t) = p.peek() {
        return Err(syntax(p.pos(), format!("unexpected trailing {}", t.describe())));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_examples() {
        assert_eq!(
            parse_filter("int0 = 3").unwrap(),
            Filter::IntEq { attr: 0, value: 3 }
        );
        assert_eq!(
            parse_filter("int0 in {1,2,3} and float0 in [10,60]").unwrap(),
            Filter::And(vec![
                Filter::IntIn {
                    attr: 0,
                    values: vec![1, 2, 3]
                },
                Filter::FloatRange {
                    attr: 0,
                    low: 10.0,
                    high: 60.0
                },
            ])
        );
        assert_eq!(
            parse_filter("not bool0 = true").unwrap(),
            Filter::not(Filter::BoolEq {
                attr: 0,
                value: true
            })
        );
    }

    #[test]
    fn precedence_not_and_or() {
        let f = parse_filter("bool0 = true or not int1 = 2 and int0 = 1").unwrap();
        assert_eq!(
            f,
            Filter::Or(vec![
                Filter::BoolEq {
                    attr: 0,
                    value: true
                },
                Filter::And(vec![
                    Filter::not(Filter::IntEq { attr: 1, value: 2 }),
                    Filter::IntEq { attr: 0, value: 1 },
                ]),
            ])
        );
        let g = parse_filter("(bool0 = true OR int1 = 2) AND int0 = 1").unwrap();
        assert!(matches!(g, Filter::And(ref c) if matches!(c[0], Filter::Or(_))));
    }

    #[test]
    fn case_insensitive_and_scientific() {
        let f = parse_filter("NOT Float2 IN [-1.5e1, 2E2]").unwrap();
        assert_eq!(
            f,
            Filter::not(Filter::FloatRange {
                attr: 2,
                low: -15.0,
                high: 200.0
            })
        );
    }

    fn err_pos(text: &str) -> (usize, String) {
        match parse_filter(text) {
            Err(Error::Syntax { pos, msg }) => (pos, msg),
            other => panic!("expected syntax error for {text:?}, got {other:?}"),
        }
    }

    #[test]
    fn reports_errors_with_positions() {
        let (pos, msg) = err_pos("int0 = ");
        assert_eq!(pos, 7);
        assert!(msg.contains("integer"));

        let (pos, msg) = err_pos("color0 = 3");
        assert_eq!(pos, 0);
        assert!(msg.contains("unknown attribute"));

        let (pos, msg) = err_pos("float0 in [60, 10]");
        assert_eq!(pos, 10);
        assert!(msg.contains("malformed range"));

        let (_, msg) = err_pos("int0 in [1, 2]");
        assert!(msg.contains("malformed range"));

        let (pos, _) = err_pos("bool0 = true )");
        assert_eq!(pos, 13);

        let (pos, _) = err_pos("(int0 = 1");
        assert_eq!(pos, 9);

        let (_, msg) = err_pos("int0 = 99999999999");
        assert!(msg.contains("invalid integer"));

        let (pos, _) = err_pos("int0 = 1 & int1 = 2");
        assert_eq!(pos, 9);
    }
}
