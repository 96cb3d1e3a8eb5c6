//! Coefficient extraction with respect to jet variables.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Signed;

use super::{simplify, Builtin, Expr, Node};

/// A product of powers of jet-dependent bases, sorted by base.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct MonomialKey(pub Vec<(Expr, Expr)>);

impl MonomialKey {
    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_expr(&self) -> Expr {
        Expr::product(self.0.iter().map(|(b, x)| Expr::pow(b.clone(), x.clone())))
    }
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        write!(f, "{}", self.to_expr())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MonomialError {
    #[error("expression is not polynomial in the jet variables: factor {factor}")]
    NonPolynomial { factor: String },
}

fn terms_of(e: &Expr) -> Vec<Expr> {
    match e.node() {
        Node::Add(ts) => ts.clone(),
        _ if e.is_zero() => Vec::new(),
        _ => alloc::vec![e.clone()],
    }
}

fn factors_of(t: &Expr) -> Vec<Expr> {
    match t.node() {
        Node::Mul(fs) => fs.clone(),
        _ => alloc::vec![t.clone()],
    }
}

/// Collect `e` as a polynomial in `vars`. Every factor must be either free of
/// the variables or a positive integer power of one of them.
pub fn collect_monomials(e: &Expr, vars: &[Expr]) -> Result<BTreeMap<MonomialKey, Expr>, MonomialError> {
    let s = simplify(e);
    let mut acc: BTreeMap<MonomialKey, Vec<Expr>> = BTreeMap::new();
    for t in terms_of(&s) {
        let mut key = Vec::new();
        let mut coeff = Vec::new();
        for f in factors_of(&t) {
            let (b, x) = match f.node() {
                Node::Pow(b, x) => (b.clone(), x.clone()),
                _ => (f.clone(), Expr::one()),
            };
            if vars.contains(&b) {
                let ok = matches!(x.node(), Node::Num(r) if r.is_integer() && r.is_positive());
                if !ok {
                    return Err(MonomialError::NonPolynomial { factor: format!("{f}") });
                }
                key.push((b, x));
            } else if vars.iter().any(|v| f.contains(v)) {
                return Err(MonomialError::NonPolynomial { factor: format!("{f}") });
            } else {
                coeff.push(f);
            }
        }
        key.sort();
        acc.entry(MonomialKey(key)).or_default().push(Expr::product(coeff));
    }
    Ok(finish(acc))
}

/// Collect `e` treating every factor for which `dependent` holds anywhere
/// inside it as part of the key. Exponentials are split so that
/// `exp(u + a)` contributes `exp(u)` to the key and `exp(a)` to the
/// coefficient.
pub fn collect_generalized(e: &Expr, dependent: &dyn Fn(&Expr) -> bool) -> BTreeMap<MonomialKey, Expr> {
    let s = simplify(e);
    let mut acc: BTreeMap<MonomialKey, Vec<Expr>> = BTreeMap::new();
    for t in terms_of(&s) {
        let mut key: BTreeMap<Expr, Expr> = BTreeMap::new();
        let mut coeff = Vec::new();
        for f in factors_of(&t) {
            if !f.any(dependent) {
                coeff.push(f);
                continue;
            }
            if let Node::Call(Builtin::Exp, arg) = f.node() {
                let (dep, free): (Vec<Expr>, Vec<Expr>) = terms_of(arg).into_iter().partition(|x| x.any(dependent));
                key.insert(Expr::exp(Expr::sum(dep)), Expr::one());
                if !free.is_empty() {
                    coeff.push(Expr::exp(Expr::sum(free)));
                }
                continue;
            }
            let (b, x) = match f.node() {
                Node::Pow(b, x) => (b.clone(), x.clone()),
                _ => (f.clone(), Expr::one()),
            };
            key.insert(b, x);
        }
        acc.entry(MonomialKey(key.into_iter().collect())).or_default().push(Expr::product(coeff));
    }
    finish(acc)
}

fn finish(acc: BTreeMap<MonomialKey, Vec<Expr>>) -> BTreeMap<MonomialKey, Expr> {
    let mut out = BTreeMap::new();
    for (k, cs) in acc {
        let c = simplify(&Expr::sum(cs));
        if !c.is_zero() {
            out.insert(k, c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn strict_collection() {
        let e = parse("a*p^2 + b*p*q + c*p^2 + 3").unwrap();
        let vars = [Expr::sym("p"), Expr::sym("q")];
        let m = collect_monomials(&e, &vars).unwrap();
        assert_eq!(m.len(), 3);
        let key = MonomialKey(alloc::vec![(Expr::sym("p"), Expr::int(2))]);
        assert_eq!(m[&key], simplify(&parse("a+c").unwrap()));
        assert!(collect_monomials(&parse("sin(p)").unwrap(), &vars).is_err());
        assert!(collect_monomials(&parse("p^(-1)").unwrap(), &vars).is_err());
    }

    #[test]
    fn generalized_collection_splits_exponentials() {
        let e = parse("exp(u + a)*b - exp(u)*c + u^(-2)*d").unwrap();
        let u = Expr::sym("u");
        let m = collect_generalized(&e, &|x: &Expr| *x == u);
        assert_eq!(m.len(), 2);
        let key = MonomialKey(alloc::vec![(Expr::exp(u.clone()), Expr::one())]);
        assert_eq!(m[&key], simplify(&parse("exp(a)*b - c").unwrap()));
    }
}
