//! Derivations over the expression DAG.
//!
//! Every derivative in the crate is an instance of one memoized traversal
//! parameterized by what happens at atoms: a symbol or unknown-function node
//! either gets an explicit value, is treated as a constant, or (for function
//! nodes) is differentiated through its arguments by the chain rule.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::One;

use super::{Builtin, Expr, FunNode, Node, Symbol};

/// What a derivation does when it reaches a symbol or function node.
pub enum AtomRule {
    /// Derivative of this atom is the given expression.
    Value(Expr),
    /// Differentiate through the function arguments (function nodes only).
    Chain,
    /// The atom is constant.
    Zero,
}

/// Apply the derivation described by `rule` to `e`. The result is not
/// simplified.
pub fn derive_with(e: &Expr, rule: &mut dyn FnMut(&Expr) -> AtomRule) -> Expr {
    let mut memo = BTreeMap::new();
    go(e, rule, &mut memo)
}

fn go(e: &Expr, rule: &mut dyn FnMut(&Expr) -> AtomRule, memo: &mut BTreeMap<usize, (Expr, Expr)>) -> Expr {
    if let Some((_, v)) = memo.get(&e.addr()) {
        return v.clone();
    }
    let out = match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Sym(_) => match rule(e) {
            AtomRule::Value(v) => v,
            AtomRule::Chain | AtomRule::Zero => Expr::zero(),
        },
        Node::Fun(f) => match rule(e) {
            AtomRule::Value(v) => v,
            AtomRule::Zero => Expr::zero(),
            AtomRule::Chain => {
                let mut terms = Vec::new();
                for (slot, a) in f.args.iter().enumerate() {
                    let da = go(a, rule, memo);
                    if da.is_zero() {
                        continue;
                    }
                    terms.push(Expr::product([bump(f, slot), da]));
                }
                Expr::sum(terms)
            }
        },
        Node::Call(b, a) => {
            let da = go(a, rule, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                let outer = match b {
                    Builtin::Sin => Expr::cos(a.clone()),
                    Builtin::Cos => -Expr::sin(a.clone()),
                    Builtin::Sinh => Expr::cosh(a.clone()),
                    Builtin::Cosh => Expr::sinh(a.clone()),
                    Builtin::Exp => e.clone(),
                    Builtin::Log => Expr::powi(a.clone(), -1),
                };
                Expr::product([outer, da])
            }
        }
        Node::Pow(b, x) => {
            let db = go(b, rule, memo);
            match x.node() {
                Node::Num(r) => {
                    if db.is_zero() {
                        Expr::zero()
                    } else {
                        let lowered = Expr::pow(b.clone(), Expr::num(r - super::Rational::one()));
                        Expr::product([x.clone(), lowered, db])
                    }
                }
                _ => {
                    let dx = go(x, rule, memo);
                    let mut parts = Vec::new();
                    if !dx.is_zero() {
                        parts.push(Expr::product([dx, Expr::log(b.clone())]));
                    }
                    if !db.is_zero() {
                        parts.push(Expr::product([x.clone(), db, Expr::powi(b.clone(), -1)]));
                    }
                    if parts.is_empty() {
                        Expr::zero()
                    } else {
                        Expr::product([e.clone(), Expr::sum(parts)])
                    }
                }
            }
        }
        Node::Mul(fs) => {
            let mut terms = Vec::new();
            for i in 0..fs.len() {
                let d = go(&fs[i], rule, memo);
                if d.is_zero() {
                    continue;
                }
                let mut factors = Vec::with_capacity(fs.len());
                for (j, g) in fs.iter().enumerate() {
                    factors.push(if i == j { d.clone() } else { g.clone() });
                }
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Node::Add(ts) => {
            let mut terms = Vec::with_capacity(ts.len());
            for t in ts {
                let d = go(t, rule, memo);
                if !d.is_zero() {
                    terms.push(d);
                }
            }
            Expr::sum(terms)
        }
    };
    memo.insert(e.addr(), (e.clone(), out.clone()));
    out
}

fn bump(f: &FunNode, slot: usize) -> Expr {
    let mut orders = f.orders.clone();
    orders[slot] += 1;
    Expr::from_node(Node::Fun(FunNode { name: f.name.clone(), args: f.args.clone(), orders }))
}

/// Total derivative in the symbol `s`; unknown functions are differentiated
/// through their arguments.
pub fn diff(e: &Expr, s: &Symbol) -> Expr {
    derive_with(e, &mut |a: &Expr| match a.node() {
        Node::Sym(t) if t == s => AtomRule::Value(Expr::one()),
        Node::Sym(_) => AtomRule::Zero,
        _ => AtomRule::Chain,
    })
}

/// Jet-space partial derivative: symbols and function nodes with plain
/// symbol arguments are independent coordinates; `atom` is one of them.
pub fn diff_atom(e: &Expr, atom: &Expr) -> Expr {
    derive_with(e, &mut |a: &Expr| {
        if a == atom {
            return AtomRule::Value(Expr::one());
        }
        match a.node() {
            Node::Fun(f) if !f.has_symbol_args() => AtomRule::Chain,
            _ => AtomRule::Zero,
        }
    })
}

/// Partial derivative in `s` with the function nodes selected by `frozen`
/// held constant and all other functions differentiated by the chain rule.
pub fn diff_explicit(e: &Expr, s: &Symbol, frozen: &dyn Fn(&FunNode) -> bool) -> Expr {
    derive_with(e, &mut |a: &Expr| match a.node() {
        Node::Sym(t) if t == s => AtomRule::Value(Expr::one()),
        Node::Sym(_) => AtomRule::Zero,
        Node::Fun(f) if frozen(f) => AtomRule::Zero,
        _ => AtomRule::Chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, simplify};

    fn check(src: &str, var: &str, expected: &str) {
        let d = simplify(&diff(&parse(src).unwrap(), &Symbol::new(var)));
        let e = simplify(&parse(expected).unwrap());
        assert_eq!(simplify(&(d.clone() - e.clone())), Expr::zero(), "d/d{var} {src} = {d}, expected {e}");
    }

    #[test]
    fn elementary_rules() {
        check("x^3", "x", "3*x^2");
        check("sin(x)*cos(x)", "x", "cos(x)^2 - sin(x)^2");
        check("exp(2*x)", "x", "2*exp(2*x)");
        check("log(x^2+1)", "x", "2*x/(x^2+1)");
        check("x^y", "y", "x^y*log(x)");
        check("sqrt(1+2*k*t)", "t", "k*(1+2*k*t)^(-1/2)");
        check("sinh(a*x)", "x", "a*cosh(a*x)");
    }

    #[test]
    fn chain_through_unknown_functions() {
        check("u(x,t)^2", "x", "2*u(x,t)*D(u(x,t),x)");
        check("f(x^2)", "x", "2*x*D(f(x^2),1)");
    }

    #[test]
    fn jet_partial_freezes_functions() {
        let e = parse("u(x)*D(u(x),x)^2 + x").unwrap();
        let ux = parse("D(u(x),x)").unwrap();
        let d = simplify(&diff_atom(&e, &ux));
        assert_eq!(d, simplify(&parse("2*u(x)*D(u(x),x)").unwrap()));
        let dx = simplify(&diff_atom(&e, &Expr::sym("x")));
        assert_eq!(dx, Expr::one());
    }
}
