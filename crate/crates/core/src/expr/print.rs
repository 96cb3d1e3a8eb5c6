//! Text and LaTeX rendering. The text form is accepted by [`super::parse`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use num_traits::{One, Signed};

use super::{Builtin, Expr, FunNode, Node, Rational};

const SUM: u8 = 1;
const PROD: u8 = 2;
const POW: u8 = 3;
const ATOM: u8 = 4;

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Num(r) => {
            if r.is_integer() && !r.is_negative() {
                ATOM
            } else {
                PROD
            }
        }
        Node::Sym(_) | Node::Fun(_) | Node::Call(..) => ATOM,
        Node::Pow(..) => POW,
        Node::Mul(_) => PROD,
        Node::Add(_) => SUM,
    }
}

/// Split a term into (is_negative, magnitude factors) for sign-aware printing.
fn split_sign(e: &Expr) -> Option<Vec<Expr>> {
    match e.node() {
        Node::Num(r) if r.is_negative() => Some(alloc::vec![Expr::num(-r.clone())]),
        Node::Mul(fs) => match fs[0].node() {
            Node::Num(r) if r.is_negative() => {
                let a = -r.clone();
                let mut v = Vec::with_capacity(fs.len());
                if !a.is_one() {
                    v.push(Expr::num(a));
                }
                v.extend(fs[1..].iter().cloned());
                Some(v)
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_num(f: &mut dyn Write, r: &Rational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

fn write_factors(f: &mut dyn Write, fs: &[Expr]) -> fmt::Result {
    for (i, x) in fs.iter().enumerate() {
        if i > 0 {
            f.write_char('*')?;
        }
        write_ctx(f, x, PROD + if i > 0 { 1 } else { 0 })?;
    }
    Ok(())
}

fn write_ctx(f: &mut dyn Write, e: &Expr, ctx: u8) -> fmt::Result {
    let p = prec(e);
    if p < ctx {
        f.write_char('(')?;
        write_node(f, e)?;
        f.write_char(')')
    } else {
        write_node(f, e)
    }
}

fn write_node(f: &mut dyn Write, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Num(r) => write_num(f, r),
        Node::Sym(s) => f.write_str(s.as_str()),
        Node::Fun(fun) => write_fun(f, fun),
        Node::Call(b, a) => {
            f.write_str(b.name())?;
            f.write_char('(')?;
            write_node(f, a)?;
            f.write_char(')')
        }
        Node::Pow(b, x) => {
            write_ctx(f, b, ATOM)?;
            f.write_char('^')?;
            let bare = match x.node() {
                Node::Sym(_) => true,
                Node::Num(r) => r.is_integer() && !r.is_negative(),
                _ => false,
            };
            if bare {
                write_node(f, x)
            } else {
                f.write_char('(')?;
                write_node(f, x)?;
                f.write_char(')')
            }
        }
        Node::Mul(fs) => {
            if let Node::Num(r) = fs[0].node() {
                if (-r.clone()).is_one() && fs.len() > 1 {
                    f.write_char('-')?;
                    return write_factors_after_sign(f, &fs[1..]);
                }
                if r.is_negative() && fs.len() > 1 {
                    f.write_char('-')?;
                    let mut v = alloc::vec![Expr::num(-r.clone())];
                    v.extend(fs[1..].iter().cloned());
                    return write_factors_after_sign(f, &v);
                }
            }
            write_factors(f, fs)
        }
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_ctx(f, t, SUM + 1)?;
                    continue;
                }
                match split_sign(t) {
                    Some(mag) => {
                        f.write_str(" - ")?;
                        if mag.len() == 1 {
                            write_ctx(f, &mag[0], PROD)?;
                        } else {
                            write_factors(f, &mag)?;
                        }
                    }
                    None => {
                        f.write_str(" + ")?;
                        write_ctx(f, t, SUM + 1)?;
                    }
                }
            }
            Ok(())
        }
    }
}

/// After a leading unary minus the first factor must bind tighter than `^`
/// would take it, so fractions get parentheses.
fn write_factors_after_sign(f: &mut dyn Write, fs: &[Expr]) -> fmt::Result {
    for (i, x) in fs.iter().enumerate() {
        if i > 0 {
            f.write_char('*')?;
        }
        let ctx = if i == 0 { POW } else { PROD + 1 };
        write_ctx(f, x, ctx)?;
    }
    Ok(())
}

fn distinct_symbol_args(fun: &FunNode) -> bool {
    if !fun.has_symbol_args() {
        return false;
    }
    for i in 0..fun.args.len() {
        for j in 0..i {
            if fun.args[i] == fun.args[j] {
                return false;
            }
        }
    }
    true
}

fn write_fun(f: &mut dyn Write, fun: &FunNode) -> fmt::Result {
    let mut base = String::new();
    base.push_str(fun.name.as_str());
    base.push('(');
    for (i, a) in fun.args.iter().enumerate() {
        if i > 0 {
            base.push_str(", ");
        }
        write_node(&mut base, a)?;
    }
    base.push(')');
    let by_name = distinct_symbol_args(fun);
    let mut text = base;
    for (slot, &k) in fun.orders.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let var = if by_name { fun.args[slot].to_string() } else { (slot + 1).to_string() };
        text = if k == 1 { format!("D({text}, {var})") } else { format!("D({text}, {var}, {k})") };
    }
    f.write_str(&text)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_node(&mut s, self)?;
        f.write_str(&s)
    }
}

/// LaTeX rendering options.
#[derive(Clone, Debug, Default)]
pub struct LatexOptions {
    /// Print `u(x, t)` instead of `u` for unknown functions.
    pub show_function_args: bool,
}

const GREEK: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda",
    "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega", "Gamma",
    "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Phi", "Psi", "Omega",
];

fn latex_name(name: &str) -> String {
    let (stem, rest) = match name.find('_') {
        Some(p) => (&name[..p], Some(&name[p + 1..])),
        None => (name, None),
    };
    let digits_at = stem.find(|c: char| c.is_ascii_digit()).unwrap_or(stem.len());
    let (letters, digits) = stem.split_at(digits_at);
    let mut out = if GREEK.contains(&letters) { format!("\\{letters}") } else { letters.to_string() };
    let mut sub = String::from(digits);
    if let Some(r) = rest {
        if !sub.is_empty() {
            sub.push(',');
        }
        sub.push_str(r);
    }
    if !sub.is_empty() {
        out.push_str(&format!("_{{{sub}}}"));
    }
    out
}

/// Render as LaTeX math (without surrounding delimiters).
pub fn to_latex(e: &Expr, opts: &LatexOptions) -> String {
    let mut s = String::new();
    latex(&mut s, e, opts, SUM);
    s
}

fn latex_group(out: &mut String, e: &Expr, opts: &LatexOptions, ctx: u8) {
    if prec(e) < ctx {
        out.push_str("\\left(");
        latex(out, e, opts, SUM);
        out.push_str("\\right)");
    } else {
        latex(out, e, opts, ctx);
    }
}

fn latex(out: &mut String, e: &Expr, opts: &LatexOptions, _ctx: u8) {
    match e.node() {
        Node::Num(r) => {
            if r.is_integer() {
                out.push_str(&r.numer().to_string());
            } else {
                let sign = if r.is_negative() { "-" } else { "" };
                out.push_str(&format!("{sign}\\frac{{{}}}{{{}}}", r.numer().abs(), r.denom()));
            }
        }
        Node::Sym(s) => out.push_str(&latex_name(s.as_str())),
        Node::Fun(fun) => {
            let vars: Vec<String> = fun
                .orders
                .iter()
                .enumerate()
                .flat_map(|(slot, &k)| {
                    let v = match fun.args[slot].node() {
                        Node::Sym(s) => latex_name(s.as_str()),
                        _ => (slot + 1).to_string(),
                    };
                    core::iter::repeat(v).take(k as usize)
                })
                .collect();
            if !vars.is_empty() {
                out.push_str(&format!("\\partial_{{{}}} ", vars.join(" ")));
            }
            out.push_str(&latex_name(fun.name.as_str()));
            if opts.show_function_args || !fun.has_symbol_args() {
                out.push_str("\\left(");
                for (i, a) in fun.args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    latex(out, a, opts, SUM);
                }
                out.push_str("\\right)");
            }
        }
        Node::Call(b, a) => {
            if *b == Builtin::Exp {
                out.push_str("e^{");
                latex(out, a, opts, SUM);
                out.push('}');
            } else {
                out.push_str(&format!("\\{}\\left(", b.name()));
                latex(out, a, opts, SUM);
                out.push_str("\\right)");
            }
        }
        Node::Pow(b, x) => {
            if let Node::Num(r) = x.node() {
                if *r == super::rat(1, 2) {
                    out.push_str("\\sqrt{");
                    latex(out, b, opts, SUM);
                    out.push('}');
                    return;
                }
                if r.is_negative() {
                    out.push_str("\\frac{1}{");
                    latex(out, &Expr::pow(b.clone(), Expr::num(-r.clone())), opts, SUM);
                    out.push('}');
                    return;
                }
            }
            latex_group(out, b, opts, ATOM);
            out.push_str("^{");
            latex(out, x, opts, SUM);
            out.push('}');
        }
        Node::Mul(fs) => {
            let mut num: Vec<Expr> = Vec::new();
            let mut den: Vec<Expr> = Vec::new();
            let mut negative = false;
            for f in fs {
                match f.node() {
                    Node::Num(r) => {
                        negative = r.is_negative();
                        let a = r.abs();
                        if !a.numer().is_one() {
                            num.push(Expr::num(Rational::from_integer(a.numer().clone())));
                        }
                        if !a.denom().is_one() {
                            den.push(Expr::num(Rational::from_integer(a.denom().clone())));
                        }
                    }
                    Node::Pow(b, x) if matches!(x.node(), Node::Num(r) if r.is_negative()) => {
                        let r = x.as_num().unwrap();
                        den.push(Expr::pow(b.clone(), Expr::num(-r.clone())));
                    }
                    _ => num.push(f.clone()),
                }
            }
            if negative {
                out.push('-');
            }
            let write_list = |out: &mut String, v: &[Expr]| {
                if v.is_empty() {
                    out.push('1');
                }
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" \\, ");
                    }
                    latex_group(out, x, opts, PROD + 1);
                }
            };
            if den.is_empty() {
                write_list(out, &num);
            } else {
                out.push_str("\\frac{");
                write_list(out, &num);
                out.push_str("}{");
                write_list(out, &den);
                out.push('}');
            }
        }
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    if let Some(mag) = split_sign(t) {
                        out.push_str(" - ");
                        let m = Expr::product(mag);
                        latex_group(out, &m, opts, PROD);
                        continue;
                    }
                    out.push_str(" + ");
                }
                latex_group(out, t, opts, SUM + 1);
            }
        }
    }
}
