//! Cancellation of common factors between a sum and its denominators.
//!
//! The canonical form of [`super::simplify`] is an expanded sum, which is not
//! a normal form for rational functions: `2/(2-x^2) - x^2/(2-x^2)` does not
//! collapse to `1`. [`cancel`] brings the expression over its common
//! denominator and removes factors of the numerator that divide it exactly,
//! using multivariate polynomial division over the expression's atoms.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Assumptions, Expr, Node, Rational, Simplifier};

type Mono = BTreeMap<Expr, u32>;
type Poly = BTreeMap<MonoKey, Rational>;

/// Monomial ordered lexicographically by (atom, exponent), which is a
/// multiplicative order.
#[derive(Clone, Debug, PartialEq, Eq)]
struct MonoKey(Mono);

impl PartialOrd for MonoKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MonoKey {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter().peekable();
        let mut b = other.0.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((xa, ea)), Some((xb, eb))) => match xa.cmp(xb) {
                    // the smaller atom is present in `a` only
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        match ea.cmp(eb) {
                            Ordering::Equal => {}
                            o => return o,
                        }
                        a.next();
                        b.next();
                    }
                },
            }
        }
    }
}

/// Terms budget above which cancellation is skipped.
const MAX_TERMS: usize = 4000;

/// Cancel common factors with the default (empty) assumptions.
pub fn cancel(e: &Expr) -> Expr {
    cancel_with(e, &Assumptions::new())
}

/// Simplify, bring over a common denominator, and cancel exact factors.
/// Falls back to the plain simplified form when nothing cancels or the
/// expression is too large.
pub fn cancel_with(e: &Expr, assumptions: &Assumptions) -> Expr {
    let mut simp = Simplifier::new(assumptions.clone());
    let s = simp.run(e).expect("unbounded");
    if s.term_count() > MAX_TERMS {
        return s;
    }
    let dens = integer_denominators(&s);
    if dens.is_empty() {
        return s;
    }
    let mut factors = alloc::vec![s.clone()];
    for (b, k) in &dens {
        factors.push(Expr::powi(b.clone(), *k as i64));
    }
    let mut bounded = Simplifier::new(assumptions.clone()).with_budget(20 * MAX_TERMS);
    let Ok(num) = bounded.run(&Expr::product(factors)) else {
        return s;
    };
    let Some(mut np) = to_poly(&num) else {
        return s;
    };
    let mut remaining: Vec<(Expr, u32)> = Vec::new();
    let mut cancelled = false;
    for (b, k) in dens {
        let mut k = k;
        match b.node() {
            Node::Add(_) => {
                if let Some(bp) = to_poly(&b) {
                    while k > 0 {
                        match divide_exact(&np, &bp) {
                            Some(q) => {
                                np = q;
                                k -= 1;
                                cancelled = true;
                            }
                            None => break,
                        }
                    }
                }
            }
            _ => {
                let common = np.keys().map(|m| m.0.get(&b).copied().unwrap_or(0)).min().unwrap_or(0).min(k);
                if common > 0 {
                    np = np
                        .into_iter()
                        .map(|(mut m, c)| {
                            let e = m.0.get_mut(&b).unwrap();
                            *e -= common;
                            if *e == 0 {
                                m.0.remove(&b);
                            }
                            (m, c)
                        })
                        .collect();
                    k -= common;
                    cancelled = true;
                }
            }
        }
        if k > 0 {
            remaining.push((b, k));
        }
    }
    if !cancelled {
        return s;
    }
    let mut factors = alloc::vec![from_poly(&np)];
    for (b, k) in remaining {
        factors.push(Expr::powi(b, -(k as i64)));
    }
    simp.run(&Expr::product(factors)).expect("unbounded")
}

fn terms(e: &Expr) -> Vec<Expr> {
    match e.node() {
        Node::Add(ts) => ts.clone(),
        _ => alloc::vec![e.clone()],
    }
}

fn factors(t: &Expr) -> Vec<Expr> {
    match t.node() {
        Node::Mul(fs) => fs.clone(),
        _ => alloc::vec![t.clone()],
    }
}

fn integer_denominators(e: &Expr) -> Vec<(Expr, u32)> {
    let mut out: BTreeMap<Expr, u32> = BTreeMap::new();
    for t in terms(e) {
        for f in factors(&t) {
            if let Node::Pow(b, x) = f.node() {
                if let Node::Num(r) = x.node() {
                    if r.is_integer() && r.is_negative() {
                        if let Some(k) = (-r.clone()).to_integer().to_u32() {
                            let entry = out.entry(b.clone()).or_insert(0);
                            *entry = (*entry).max(k);
                        }
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

fn to_poly(e: &Expr) -> Option<Poly> {
    let mut p = Poly::new();
    if e.is_zero() {
        return Some(p);
    }
    for t in terms(e) {
        let mut c = Rational::one();
        let mut m = Mono::new();
        for f in factors(&t) {
            match f.node() {
                Node::Num(r) => c *= r,
                Node::Pow(b, x) => match x.node() {
                    Node::Num(r) if r.is_integer() => {
                        if r.is_negative() || b.is_number() {
                            return None;
                        }
                        *m.entry(b.clone()).or_insert(0) += r.to_integer().to_u32()?;
                    }
                    _ => *m.entry(f.clone()).or_insert(0) += 1,
                },
                _ => *m.entry(f.clone()).or_insert(0) += 1,
            }
        }
        let key = MonoKey(m);
        let entry = p.entry(key.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            p.remove(&key);
        }
    }
    Some(p)
}

fn from_poly(p: &Poly) -> Expr {
    Expr::sum(p.iter().map(|(m, c)| {
        let mut f = alloc::vec![Expr::num(c.clone())];
        for (a, k) in &m.0 {
            f.push(Expr::powi(a.clone(), *k as i64));
        }
        Expr::product(f)
    }))
}

fn mono_div(a: &Mono, b: &Mono) -> Option<Mono> {
    let mut out = a.clone();
    for (x, k) in b {
        let e = out.get_mut(x)?;
        if *e < *k {
            return None;
        }
        *e -= k;
        if *e == 0 {
            out.remove(x);
        }
    }
    Some(out)
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = a.clone();
    for (x, k) in b {
        *out.entry(x.clone()).or_insert(0) += k;
    }
    out
}

/// Exact quotient `n / d`, or `None` when the remainder is nonzero.
fn divide_exact(n: &Poly, d: &Poly) -> Option<Poly> {
    let (lead_m, lead_c) = d.iter().next_back()?;
    let mut rem = n.clone();
    let mut q = Poly::new();
    let mut steps = 0usize;
    while let Some((m, c)) = rem.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) {
        steps += 1;
        if steps > 50 * MAX_TERMS {
            return None;
        }
        let qm = mono_div(&m.0, &lead_m.0)?;
        let qc = c / lead_c;
        for (dm, dc) in d {
            let key = MonoKey(mono_mul(&qm, &dm.0));
            let entry = rem.entry(key.clone()).or_insert_with(Rational::zero);
            *entry -= &qc * dc;
            if entry.is_zero() {
                rem.remove(&key);
            }
        }
        let entry = q.entry(MonoKey(qm)).or_insert_with(Rational::zero);
        *entry += qc;
    }
    q.retain(|_, c| !c.is_zero());
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn cancels_common_factors() {
        assert_eq!(cancel(&parse("2/(2-x^2) - x^2/(2-x^2)").unwrap()), Expr::one());
        assert_eq!(cancel(&parse("(x^2-y^2)/(x-y)").unwrap()), crate::expr::simplify(&parse("x+y").unwrap()));
        assert_eq!(cancel(&parse("(a*x + a*y)*(x+y)^(-2)").unwrap()), crate::expr::simplify(&parse("a/(x+y)").unwrap()));
    }

    #[test]
    fn leaves_irreducible_fractions() {
        let e = parse("x/(x+1)").unwrap();
        assert_eq!(cancel(&e), crate::expr::simplify(&e));
    }
}
