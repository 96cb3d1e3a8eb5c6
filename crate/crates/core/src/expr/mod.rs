//! Expression kernel: an immutable, structurally shared expression DAG with
//! exact rational coefficients.
//!
//! Construction through the smart constructors and the arithmetic operators
//! only performs cheap folding. [`simplify`] produces the canonical form.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

mod cancel;
mod derive;
mod eval;
mod monomial;
mod parse;
mod print;
pub mod random;
mod simplify;
mod subst;
mod zero;

pub use cancel::{cancel, cancel_with};
pub use derive::{derive_with, diff, diff_atom, diff_explicit, AtomRule};
pub use eval::{eval, eval_with_scale, Assignment, EvalError};
pub use monomial::{collect_generalized, collect_monomials, MonomialError, MonomialKey};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use print::{to_latex, LatexOptions};
pub use simplify::{simplify, simplify_with, Assumptions, BudgetExceeded, Simplifier};
pub use subst::{substitute, substitute_raw, Bindings, FunctionBinding, SubstError};
pub use zero::{equals_zero, equals_zero_with, Verdict, ZeroTester};

/// Exact rational numbers used for every numeric literal.
pub type Rational = num_rational::BigRational;

/// Interned-by-value symbol name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// Elementary functions known to the kernel. `sqrt` is represented as a
/// half power and never appears here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Sinh => "sinh",
            Builtin::Cosh => "cosh",
            Builtin::Exp => "exp",
            Builtin::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "sin" => Builtin::Sin,
            "cos" => Builtin::Cos,
            "sinh" => Builtin::Sinh,
            "cosh" => Builtin::Cosh,
            "exp" => Builtin::Exp,
            "log" => Builtin::Log,
            _ => return None,
        })
    }
}

/// An unknown function applied to arguments, with a derivative order per
/// argument slot. `u(x,t)` has orders `[0,0]`; `u_xx` has `[2,0]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunNode {
    pub name: Symbol,
    pub args: Vec<Expr>,
    pub orders: Vec<u32>,
}

impl FunNode {
    pub fn total_order(&self) -> u32 {
        self.orders.iter().sum()
    }

    /// The underlying function with all derivative orders reset.
    pub fn base(&self) -> Expr {
        Expr::fun(self.name.clone(), self.args.clone())
    }

    /// True when every argument is a plain symbol.
    pub fn has_symbol_args(&self) -> bool {
        self.args.iter().all(|a| a.as_symbol().is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(Rational),
    Sym(Symbol),
    Fun(FunNode),
    Call(Builtin, Expr),
    Pow(Expr, Expr),
    Mul(Vec<Expr>),
    Add(Vec<Expr>),
}

/// Reference-counted expression handle. Cloning is O(1).
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.cmp(&other.0)
    }
}

impl core::hash::Hash for Expr {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    /// Address of the shared node, used as a memoization key.
    pub(crate) fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn int(n: i64) -> Expr {
        Expr::from_node(Node::Num(rat_int(n)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::num(rat(n, d))
    }

    pub fn num(r: Rational) -> Expr {
        Expr::from_node(Node::Num(r))
    }

    pub fn sym(name: &str) -> Expr {
        Expr::from_node(Node::Sym(Symbol::new(name)))
    }

    pub fn symbol(s: Symbol) -> Expr {
        Expr::from_node(Node::Sym(s))
    }

    /// Unknown function `name(args)` with zero derivative orders.
    pub fn fun(name: impl Into<Symbol>, args: Vec<Expr>) -> Expr {
        let orders = vec![0; args.len()];
        Expr::from_node(Node::Fun(FunNode { name: name.into(), args, orders }))
    }

    /// Unknown function of plain symbols, e.g. `Expr::field("u", &[x, t])`.
    pub fn field(name: &str, args: &[Symbol]) -> Expr {
        Expr::fun(Symbol::new(name), args.iter().cloned().map(Expr::symbol).collect())
    }

    pub fn fun_with_orders(name: impl Into<Symbol>, args: Vec<Expr>, orders: Vec<u32>) -> Expr {
        assert_eq!(args.len(), orders.len(), "one derivative order per argument");
        Expr::from_node(Node::Fun(FunNode { name: name.into(), args, orders }))
    }

    pub fn call(f: Builtin, arg: Expr) -> Expr {
        if let Node::Num(r) = arg.node() {
            if r.is_zero() {
                match f {
                    Builtin::Sin | Builtin::Sinh => return Expr::zero(),
                    Builtin::Cos | Builtin::Cosh | Builtin::Exp => return Expr::one(),
                    Builtin::Log => {}
                }
            } else if r.is_one() && f == Builtin::Log {
                return Expr::zero();
            }
        }
        Expr::from_node(Node::Call(f, arg))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::call(Builtin::Sin, a)
    }
    pub fn cos(a: Expr) -> Expr {
        Expr::call(Builtin::Cos, a)
    }
    pub fn sinh(a: Expr) -> Expr {
        Expr::call(Builtin::Sinh, a)
    }
    pub fn cosh(a: Expr) -> Expr {
        Expr::call(Builtin::Cosh, a)
    }
    pub fn exp(a: Expr) -> Expr {
        Expr::call(Builtin::Exp, a)
    }
    pub fn log(a: Expr) -> Expr {
        Expr::call(Builtin::Log, a)
    }
    pub fn sqrt(a: Expr) -> Expr {
        Expr::pow(a, Expr::rational(1, 2))
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        if let Some(e) = exponent.as_num() {
            if e.is_zero() {
                return Expr::one();
            }
            if e.is_one() {
                return base;
            }
            if let Some(b) = base.as_num() {
                if e.is_integer() && !(b.is_zero() && e.is_negative()) {
                    if let Some(k) = e.to_integer().to_i32() {
                        if k.unsigned_abs() <= 64 {
                            return Expr::num(num_traits::pow::Pow::pow(b, k));
                        }
                    }
                }
            }
        }
        if let Some(b) = base.as_num() {
            if b.is_one() {
                return Expr::one();
            }
        }
        Expr::from_node(Node::Pow(base, exponent))
    }

    pub fn powi(base: Expr, k: i64) -> Expr {
        Expr::pow(base, Expr::int(k))
    }

    pub fn recip(self) -> Expr {
        Expr::powi(self, -1)
    }

    /// Flattening sum with constant folding and zero dropping.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut out = Vec::new();
        let mut constant = Rational::zero();
        for t in terms {
            match t.node() {
                Node::Num(r) => constant += r,
                Node::Add(ts) => {
                    for s in ts {
                        match s.node() {
                            Node::Num(r) => constant += r,
                            _ => out.push(s.clone()),
                        }
                    }
                }
                _ => out.push(t),
            }
        }
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::from_node(Node::Add(out)),
        }
    }

    /// Flattening product with constant folding; any zero factor gives zero.
    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut out = Vec::new();
        let mut coeff = Rational::one();
        for f in factors {
            match f.node() {
                Node::Num(r) => {
                    if r.is_zero() {
                        return Expr::zero();
                    }
                    coeff *= r;
                }
                Node::Mul(fs) => {
                    for g in fs {
                        match g.node() {
                            Node::Num(r) => coeff *= r,
                            _ => out.push(g.clone()),
                        }
                    }
                }
                _ => out.push(f),
            }
        }
        if out.is_empty() {
            return Expr::num(coeff);
        }
        if !coeff.is_one() {
            out.insert(0, Expr::num(coeff));
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Expr::from_node(Node::Mul(out))
        }
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self.node() {
            Node::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_fun(&self) -> Option<&FunNode> {
        match self.node() {
            Node::Fun(f) => Some(f),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Num(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(r) if r.is_one())
    }

    pub fn is_number(&self) -> bool {
        matches!(self.node(), Node::Num(_))
    }

    /// Children in evaluation order.
    pub fn children(&self) -> Vec<Expr> {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => Vec::new(),
            Node::Fun(f) => f.args.clone(),
            Node::Call(_, a) => vec![a.clone()],
            Node::Pow(b, e) => vec![b.clone(), e.clone()],
            Node::Mul(v) | Node::Add(v) => v.clone(),
        }
    }

    /// True if `needle` occurs structurally anywhere in `self`.
    pub fn contains(&self, needle: &Expr) -> bool {
        let mut seen = alloc::collections::BTreeSet::new();
        contains_rec(self, &|e: &Expr| e == needle, &mut seen)
    }

    /// True if any subexpression satisfies `pred`.
    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        let mut seen = alloc::collections::BTreeSet::new();
        contains_rec(self, pred, &mut seen)
    }

    /// True if the symbol occurs, either directly or as a function argument.
    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.any(&|e| e.as_symbol() == Some(s))
    }

    /// True if a function node with the given name occurs.
    pub fn contains_function(&self, name: &Symbol) -> bool {
        self.any(&|e| matches!(e.node(), Node::Fun(f) if &f.name == name))
    }

    /// Evaluation atoms: free symbols outside function arguments plus
    /// function nodes, sorted and deduplicated.
    pub fn atoms(&self) -> Vec<Expr> {
        let mut out = alloc::collections::BTreeSet::new();
        let mut seen = alloc::collections::BTreeSet::new();
        atoms_rec(self, &mut out, &mut seen);
        out.into_iter().collect()
    }

    /// All symbols, including those inside function arguments.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out = alloc::collections::BTreeSet::new();
        let mut seen = alloc::collections::BTreeSet::new();
        symbols_rec(self, &mut out, &mut seen);
        out.into_iter().collect()
    }

    /// All function nodes (any derivative order), sorted and deduplicated.
    pub fn functions(&self) -> Vec<Expr> {
        let mut out = alloc::collections::BTreeSet::new();
        let mut seen = alloc::collections::BTreeSet::new();
        funs_rec(self, &mut out, &mut seen);
        out.into_iter().collect()
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = alloc::collections::BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if seen.insert(e.addr()) {
                stack.extend(e.children());
            }
        }
        seen.len()
    }

    /// Number of top-level terms (1 for non-sums).
    pub fn term_count(&self) -> usize {
        match self.node() {
            Node::Add(v) => v.len(),
            _ => 1,
        }
    }

    /// Grammar-compatible rendering.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

fn contains_rec(
    e: &Expr,
    pred: &dyn Fn(&Expr) -> bool,
    seen: &mut alloc::collections::BTreeSet<usize>,
) -> bool {
    if !seen.insert(e.addr()) {
        return false;
    }
    if pred(e) {
        return true;
    }
    match e.node() {
        Node::Num(_) | Node::Sym(_) => false,
        Node::Fun(f) => f.args.iter().any(|a| contains_rec(a, pred, seen)),
        Node::Call(_, a) => contains_rec(a, pred, seen),
        Node::Pow(b, x) => contains_rec(b, pred, seen) || contains_rec(x, pred, seen),
        Node::Mul(v) | Node::Add(v) => v.iter().any(|a| contains_rec(a, pred, seen)),
    }
}

fn atoms_rec(
    e: &Expr,
    out: &mut alloc::collections::BTreeSet<Expr>,
    seen: &mut alloc::collections::BTreeSet<usize>,
) {
    if !seen.insert(e.addr()) {
        return;
    }
    match e.node() {
        Node::Num(_) => {}
        Node::Sym(_) => {
            out.insert(e.clone());
        }
        Node::Fun(f) => {
            if f.has_symbol_args() {
                out.insert(e.clone());
            } else {
                // composite arguments: the function node is an atom, and so
                // are the atoms of its arguments (needed for chain-rule checks)
                out.insert(e.clone());
                for a in &f.args {
                    atoms_rec(a, out, seen);
                }
            }
        }
        _ => {
            for c in e.children() {
                atoms_rec(&c, out, seen);
            }
        }
    }
}

fn symbols_rec(
    e: &Expr,
    out: &mut alloc::collections::BTreeSet<Symbol>,
    seen: &mut alloc::collections::BTreeSet<usize>,
) {
    if !seen.insert(e.addr()) {
        return;
    }
    if let Node::Sym(s) = e.node() {
        out.insert(s.clone());
    }
    for c in e.children() {
        symbols_rec(&c, out, seen);
    }
}

fn funs_rec(
    e: &Expr,
    out: &mut alloc::collections::BTreeSet<Expr>,
    seen: &mut alloc::collections::BTreeSet<usize>,
) {
    if !seen.insert(e.addr()) {
        return;
    }
    if let Node::Fun(_) = e.node() {
        out.insert(e.clone());
    }
    for c in e.children() {
        funs_rec(&c, out, seen);
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl core::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl core::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl core::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl core::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl core::ops::$tr<i64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::int(rhs))
            }
        }
        impl core::ops::$tr<i64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), Expr::int(rhs))
            }
        }
        impl core::ops::$tr<Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::int(self), rhs)
            }
        }
        impl core::ops::$tr<&Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::int(self), rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a, b]));
binop!(Sub, sub, |a, b| Expr::sum([a, Expr::product([Expr::int(-1), b])]));
binop!(Mul, mul, |a, b| Expr::product([a, b]));
binop!(Div, div, |a, b| Expr::product([a, Expr::powi(b, -1)]));

impl core::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::int(-1), self])
    }
}

impl core::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::int(-1), self.clone()])
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::symbol(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_folding() {
        let x = Expr::sym("x");
        assert_eq!(&x + 0, x);
        assert_eq!(&x * 1, x);
        assert!((&x * 0).is_zero());
        assert_eq!(Expr::int(2) + Expr::int(3), Expr::int(5));
        assert_eq!(Expr::powi(Expr::int(2), -2), Expr::rational(1, 4));
        assert_eq!(Expr::sin(Expr::zero()), Expr::zero());
    }

    #[test]
    fn atoms_include_functions_and_free_symbols() {
        let x = Symbol::new("x");
        let u = Expr::field("u", &[x.clone()]);
        let e = &u * Expr::sym("k") + Expr::symbol(x);
        let atoms = e.atoms();
        assert_eq!(atoms.len(), 3);
        assert!(atoms.contains(&u));
    }
}
