//! Simultaneous substitution of atoms and unknown functions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{diff, simplify, Expr, FunNode, Node, Symbol};

/// Replacement for an unknown function: `name(params) := body`. Derivative
/// nodes of `name` are replaced by the corresponding derivatives of `body`.
#[derive(Clone, Debug)]
pub struct FunctionBinding {
    pub params: Vec<Symbol>,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SubstError {
    #[error("conflicting bindings for {0}")]
    Conflict(String),
    #[error("function {name} bound with {expected} parameter(s) but applied to {found} argument(s)")]
    Arity { name: String, expected: usize, found: usize },
    #[error("only symbols and function nodes can be bound, got {0}")]
    NotAnAtom(String),
}

/// A consistent set of simultaneous replacements.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    atoms: BTreeMap<Expr, Expr>,
    functions: BTreeMap<Symbol, FunctionBinding>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bind a symbol or an exact function node (a specific jet coordinate).
    pub fn bind(&mut self, atom: Expr, value: Expr) -> Result<&mut Self, SubstError> {
        if !matches!(atom.node(), Node::Sym(_) | Node::Fun(_)) {
            return Err(SubstError::NotAnAtom(format!("{atom}")));
        }
        if let Some(old) = self.atoms.get(&atom) {
            if *old != value {
                return Err(SubstError::Conflict(format!("{atom}")));
            }
        }
        self.atoms.insert(atom, value);
        Ok(self)
    }

    pub fn bind_symbol(&mut self, name: &str, value: Expr) -> Result<&mut Self, SubstError> {
        self.bind(Expr::sym(name), value)
    }

    /// Bind every occurrence of the unknown function `name`, including its
    /// derivatives.
    pub fn bind_function(&mut self, name: &str, params: &[Symbol], body: Expr) -> Result<&mut Self, SubstError> {
        let key = Symbol::new(name);
        if self.functions.contains_key(&key) {
            return Err(SubstError::Conflict(String::from(name)));
        }
        self.functions.insert(key, FunctionBinding { params: params.to_vec(), body });
        Ok(self)
    }

    pub fn merge(&mut self, other: &Bindings) -> Result<&mut Self, SubstError> {
        for (k, v) in &other.atoms {
            self.bind(k.clone(), v.clone())?;
        }
        for (k, f) in &other.functions {
            self.bind_function(k.as_str(), &f.params, f.body.clone())?;
        }
        Ok(self)
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.functions.is_empty()
    }

    pub fn atom_bindings(&self) -> impl Iterator<Item = (&Expr, &Expr)> {
        self.atoms.iter()
    }

    pub fn function_bindings(&self) -> impl Iterator<Item = (&Symbol, &FunctionBinding)> {
        self.functions.iter()
    }

    pub fn get_atom(&self, atom: &Expr) -> Option<&Expr> {
        self.atoms.get(atom)
    }
}

struct Ctx<'a> {
    b: &'a Bindings,
    memo: BTreeMap<usize, (Expr, Expr)>,
    derivs: BTreeMap<(Symbol, Vec<u32>), Expr>,
}

/// Simultaneous substitution without simplification.
pub fn substitute_raw(e: &Expr, b: &Bindings) -> Result<Expr, SubstError> {
    let mut ctx = Ctx { b, memo: BTreeMap::new(), derivs: BTreeMap::new() };
    ctx.go(e)
}

/// Simultaneous substitution followed by simplification.
pub fn substitute(e: &Expr, b: &Bindings) -> Result<Expr, SubstError> {
    Ok(simplify(&substitute_raw(e, b)?))
}

impl Ctx<'_> {
    fn go(&mut self, e: &Expr) -> Result<Expr, SubstError> {
        if let Some((_, v)) = self.memo.get(&e.addr()) {
            return Ok(v.clone());
        }
        let out = if let Some(v) = self.b.atoms.get(e) {
            v.clone()
        } else {
            match e.node() {
                Node::Num(_) | Node::Sym(_) => e.clone(),
                Node::Fun(f) => self.fun(f)?,
                Node::Call(b, a) => Expr::call(*b, self.go(a)?),
                Node::Pow(b, x) => Expr::pow(self.go(b)?, self.go(x)?),
                Node::Mul(fs) => {
                    let mut v = Vec::with_capacity(fs.len());
                    for f in fs {
                        v.push(self.go(f)?);
                    }
                    Expr::product(v)
                }
                Node::Add(ts) => {
                    let mut v = Vec::with_capacity(ts.len());
                    for t in ts {
                        v.push(self.go(t)?);
                    }
                    Expr::sum(v)
                }
            }
        };
        self.memo.insert(e.addr(), (e.clone(), out.clone()));
        Ok(out)
    }

    fn fun(&mut self, f: &FunNode) -> Result<Expr, SubstError> {
        let mut args = Vec::with_capacity(f.args.len());
        for a in &f.args {
            args.push(self.go(a)?);
        }
        let Some(binding) = self.b.functions.get(&f.name) else {
            return Ok(Expr::from_node(Node::Fun(FunNode { name: f.name.clone(), args, orders: f.orders.clone() })));
        };
        if binding.params.len() != args.len() {
            return Err(SubstError::Arity {
                name: String::from(f.name.as_str()),
                expected: binding.params.len(),
                found: args.len(),
            });
        }
        let key = (f.name.clone(), f.orders.clone());
        let body = match self.derivs.get(&key) {
            Some(b) => b.clone(),
            None => {
                let mut body = binding.body.clone();
                for (slot, &k) in f.orders.iter().enumerate() {
                    for _ in 0..k {
                        body = diff(&body, &binding.params[slot]);
                    }
                }
                self.derivs.insert(key, body.clone());
                body
            }
        };
        let identity = binding.params.iter().zip(&args).all(|(p, a)| a.as_symbol() == Some(p));
        if identity {
            return Ok(body);
        }
        let mut rename = Bindings::new();
        for (p, a) in binding.params.iter().zip(&args) {
            rename.atoms.insert(Expr::symbol(p.clone()), a.clone());
        }
        substitute_raw(&body, &rename)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn substitution_is_simultaneous() {
        let mut b = Bindings::new();
        b.bind_symbol("x", Expr::sym("y")).unwrap();
        b.bind_symbol("y", Expr::sym("x")).unwrap();
        let e = substitute(&parse("x - 2*y").unwrap(), &b).unwrap();
        assert_eq!(e, simplify(&parse("y - 2*x").unwrap()));
    }

    #[test]
    fn conflicting_bindings_are_rejected() {
        let mut b = Bindings::new();
        b.bind_symbol("x", Expr::int(1)).unwrap();
        assert!(matches!(b.bind_symbol("x", Expr::int(2)), Err(SubstError::Conflict(_))));
        assert!(b.bind_symbol("x", Expr::int(1)).is_ok());
    }

    #[test]
    fn function_bindings_follow_derivatives() {
        let x = Symbol::new("x");
        let t = Symbol::new("t");
        let mut b = Bindings::new();
        b.bind_function("g", &[x.clone(), t.clone()], parse("exp(u(x,t))").unwrap()).unwrap();
        let e = parse("D(g(x,t), x, 2)").unwrap();
        let got = substitute(&e, &b).unwrap();
        let want = simplify(&parse("exp(u(x,t))*(D(u(x,t),x)^2 + D(u(x,t),x,2))").unwrap());
        assert_eq!(simplify(&(got - want)), Expr::zero());
    }

    #[test]
    fn function_bindings_rename_parameters() {
        let s = Symbol::new("s");
        let mut b = Bindings::new();
        b.bind_function("G", &[s], parse("sin(2*s)").unwrap()).unwrap();
        let got = substitute(&parse("D(G(y), y)").unwrap(), &b).unwrap();
        assert_eq!(got, simplify(&parse("2*cos(2*y)").unwrap()));
    }
}
