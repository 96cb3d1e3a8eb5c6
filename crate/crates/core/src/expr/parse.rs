//! Pratt parser for the textual expression grammar.
//!
//! ```text
//! expr   := sum
//! sum    := product (('+' | '-') product)*
//! product:= unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right associative
//! atom   := number | ident | ident '(' args ')' | '(' expr ')'
//!         | 'D' '(' expr ',' (ident | slot) (',' integer)? ')'
//! ```
//!
//! `D(e, x, k)` is the k-th derivative in the symbol `x`. `D(f(a, b), 2, k)`
//! differentiates an unknown function k times in its second argument slot,
//! which is how derivatives of functions with composite arguments print.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::{diff, Builtin, Expr, FunNode, Node, Rational, Symbol};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownBuiltin(String),
    ImplicitMultiplication,
    BadNumber(String),
    BadDerivative(String),
    Arity { name: String, expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {position}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character '{c}'"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token '{t}'"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::UnknownBuiltin(n) => write!(f, "unsupported function '{n}'"),
            ParseErrorKind::ImplicitMultiplication => {
                write!(f, "implicit multiplication is not allowed, use '*'")
            }
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number '{s}'"),
            ParseErrorKind::BadDerivative(s) => write!(f, "malformed derivative: {s}"),
            ParseErrorKind::Arity { name, expected, found } => {
                write!(f, "'{name}' takes {expected} argument(s), found {found}")
            }
        }
    }
}

/// Names that look like elementary functions but are not supported.
const UNSUPPORTED: &[&str] = &[
    "tan", "cot", "sec", "csc", "tanh", "coth", "sech", "csch", "ln", "abs", "asin", "acos", "atan",
    "asinh", "acosh", "atanh", "arcsin", "arccos", "arctan", "sign", "floor", "ceil", "min", "max",
    "erf", "gamma",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational, String),
    Ident(String),
    Op(char),
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    end: usize,
}

fn lex(src: &str) -> Result<Lexer, ParseError> {
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut toks = Vec::new();
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && (bytes[i + 1] as char).is_ascii_digit()) {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let save = i;
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                } else {
                    i = save;
                }
            }
            let text = &src[start..i];
            let r = parse_decimal(text)
                .ok_or_else(|| ParseError { kind: ParseErrorKind::BadNumber(text.to_string()), position: start })?;
            toks.push((Tok::Num(r, text.to_string()), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        match c {
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | ',' => {
                toks.push((Tok::Op(c), i));
                i += 1;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap();
                return Err(ParseError { kind: ParseErrorKind::UnexpectedChar(ch), position: i });
            }
        }
    }
    Ok(Lexer { toks, end: src.len() })
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(p) => (&text[..p], text[p + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(p) => (&mantissa[..p], &mantissa[p + 1..]),
        None => (mantissa, ""),
    };
    let digits: String = [int_part, frac_part].concat();
    if digits.is_empty() {
        return None;
    }
    let n: BigInt = digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    let mut r = Rational::from_integer(n);
    if scale >= 0 {
        r *= num_traits::pow::Pow::pow(&ten, scale as u32);
    } else {
        r /= num_traits::pow::Pow::pow(&ten, (-scale) as u32);
    }
    Some(r)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

/// Parse an expression from text.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let lx = lex(src)?;
    let mut p = Parser { toks: lx.toks, pos: 0, end: lx.end };
    let e = p.sum()?;
    if let Some((t, at)) = p.toks.get(p.pos) {
        let kind = match t {
            Tok::Num(..) | Tok::Ident(_) | Tok::Op('(') => ParseErrorKind::ImplicitMultiplication,
            other => ParseErrorKind::UnexpectedToken(tok_text(other)),
        };
        return Err(ParseError { kind, position: *at });
    }
    Ok(e)
}

fn tok_text(t: &Tok) -> String {
    match t {
        Tok::Num(_, s) => s.clone(),
        Tok::Ident(s) => s.clone(),
        Tok::Op(c) => c.to_string(),
    }
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError { kind, position: self.here() })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Op(d)) if *d == c => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let t = tok_text(t);
                self.err(ParseErrorKind::UnexpectedToken(t))
            }
            None => self.err(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Some(Tok::Op('+')) => {
                    self.pos += 1;
                    let rhs = self.product()?;
                    acc = acc + rhs;
                }
                Some(Tok::Op('-')) => {
                    self.pos += 1;
                    let rhs = self.product()?;
                    acc = acc - rhs;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = acc * rhs;
                }
                Some(Tok::Op('/')) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = match (acc.as_num(), rhs.as_num()) {
                        (Some(a), Some(b)) if !b.is_zero() => Expr::num(a / b),
                        _ => acc / rhs,
                    };
                }
                Some(Tok::Num(..)) | Some(Tok::Ident(_)) | Some(Tok::Op('(')) => {
                    return self.err(ParseErrorKind::ImplicitMultiplication);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(match inner.as_num() {
                Some(r) => Expr::num(-r.clone()),
                None => -inner,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        let tok = match self.toks.get(self.pos) {
            Some((t, _)) => t.clone(),
            None => return self.err(ParseErrorKind::UnexpectedEnd),
        };
        self.pos += 1;
        match tok {
            Tok::Num(r, _) => Ok(Expr::num(r)),
            Tok::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(Tok::Op('(')) = self.peek() {
                    self.pos += 1;
                    self.call(name, at)
                } else {
                    if UNSUPPORTED.contains(&name.as_str()) {
                        return Err(ParseError { kind: ParseErrorKind::UnknownBuiltin(name), position: at });
                    }
                    Ok(Expr::sym(&name))
                }
            }
            other => Err(ParseError { kind: ParseErrorKind::UnexpectedToken(tok_text(&other)), position: at }),
        }
    }

    fn args(&mut self) -> Result<Vec<(Expr, usize)>, ParseError> {
        let mut args = Vec::new();
        if let Some(Tok::Op(')')) = self.peek() {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            let at = self.here();
            args.push((self.sum()?, at));
            match self.peek() {
                Some(Tok::Op(',')) => self.pos += 1,
                Some(Tok::Op(')')) => {
                    self.pos += 1;
                    return Ok(args);
                }
                Some(t) => {
                    let t = tok_text(t);
                    return self.err(ParseErrorKind::UnexpectedToken(t));
                }
                None => return self.err(ParseErrorKind::UnexpectedEnd),
            }
        }
    }

    fn call(&mut self, name: String, at: usize) -> Result<Expr, ParseError> {
        if UNSUPPORTED.contains(&name.as_str()) {
            return Err(ParseError { kind: ParseErrorKind::UnknownBuiltin(name), position: at });
        }
        let args = self.args()?;
        if name == "D" {
            return derivative(args, at);
        }
        if name == "sqrt" || Builtin::from_name(&name).is_some() {
            if args.len() != 1 {
                return Err(ParseError {
                    kind: ParseErrorKind::Arity { name, expected: 1, found: args.len() },
                    position: at,
                });
            }
            let a = args.into_iter().next().unwrap().0;
            return Ok(match Builtin::from_name(&name) {
                Some(b) => Expr::call(b, a),
                None => Expr::sqrt(a),
            });
        }
        Ok(Expr::fun(Symbol::new(&name), args.into_iter().map(|(e, _)| e).collect()))
    }
}

fn derivative(args: Vec<(Expr, usize)>, at: usize) -> Result<Expr, ParseError> {
    let bad = |msg: &str, position: usize| ParseError { kind: ParseErrorKind::BadDerivative(msg.to_string()), position };
    if args.len() < 2 || args.len() > 3 {
        return Err(bad("expected D(expr, variable[, order])", at));
    }
    let mut it = args.into_iter();
    let (target, _) = it.next().unwrap();
    let (var, var_at) = it.next().unwrap();
    let order = match it.next() {
        Some((o, o_at)) => match o.as_num() {
            Some(r) if r.is_integer() && *r >= Rational::one() => {
                r.to_integer().to_u32().ok_or_else(|| bad("order too large", o_at))?
            }
            _ => return Err(bad("order must be a positive integer", o_at)),
        },
        None => 1,
    };
    match var.node() {
        Node::Sym(s) => {
            let mut e = target;
            for _ in 0..order {
                e = diff(&e, s);
            }
            Ok(e)
        }
        Node::Num(r) if r.is_integer() => {
            let slot = r.to_integer().to_usize().unwrap_or(0);
            match target.node() {
                Node::Fun(f) if slot >= 1 && slot <= f.args.len() => {
                    let mut orders = f.orders.clone();
                    orders[slot - 1] += order;
                    Ok(Expr::from_node(Node::Fun(FunNode { name: f.name.clone(), args: f.args.clone(), orders })))
                }
                Node::Fun(_) => Err(bad("argument slot out of range", var_at)),
                _ => Err(bad("slot derivatives apply to unknown functions only", var_at)),
            }
        }
        _ => Err(bad("variable must be a symbol or an argument slot", var_at)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::simplify;

    #[test]
    fn precedence() {
        let e = parse("-x^2").unwrap();
        assert_eq!(simplify(&(e + parse("x^2").unwrap())), Expr::zero());
        let e = parse("2^3^2").unwrap();
        assert_eq!(simplify(&e), Expr::int(512));
        let e = parse("x^-1*x").unwrap();
        assert_eq!(simplify(&e), Expr::one());
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.25").unwrap(), Expr::rational(1, 4));
        assert_eq!(parse("1.5e2").unwrap(), Expr::int(150));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("2 x").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ImplicitMultiplication);
        assert_eq!(e.position, 2);
        let e = parse("x + tan(y)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownBuiltin("tan".into()));
        assert_eq!(e.position, 4);
        assert_eq!(parse("(x").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert!(matches!(parse("x $ y").unwrap_err().kind, ParseErrorKind::UnexpectedChar('$')));
    }

    #[test]
    fn derivatives() {
        let u = parse("D(u(x,t), x, 2)").unwrap();
        let f = u.as_fun().unwrap();
        assert_eq!(f.orders, [2, 0]);
        let v = parse("D(D(u(x,t), x), x)").unwrap();
        assert_eq!(u, v);
        let w = parse("D(f(x^2), 1)").unwrap();
        assert_eq!(w.as_fun().unwrap().orders, [1]);
        let chain = simplify(&parse("D(f(x^2), x) - 2*x*D(f(x^2), 1)").unwrap());
        assert_eq!(chain, Expr::zero());
    }
}
