//! Numeric evaluation in f64.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use num_traits::ToPrimitive;

use super::{Builtin, Expr, Node};

/// Values for evaluation atoms: symbols and unknown-function nodes.
pub type Assignment = BTreeMap<Expr, f64>;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no value assigned to {0}")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Evaluate `e`. Function nodes are looked up as atoms; their arguments are
/// not evaluated.
pub fn eval(e: &Expr, a: &Assignment) -> Result<f64, EvalError> {
    eval_with_scale(e, a).map(|(v, _)| v)
}

/// Evaluate `e` together with an estimate of the magnitudes that were
/// combined to produce it. A sum of large terms that cancels has a small
/// value and a large scale; the ratio bounds the relative rounding error.
pub fn eval_with_scale(e: &Expr, a: &Assignment) -> Result<(f64, f64), EvalError> {
    let mut memo = BTreeMap::new();
    go(e, a, &mut memo)
}

fn domain(msg: String) -> EvalError {
    EvalError::Domain(msg)
}

fn go(e: &Expr, a: &Assignment, memo: &mut BTreeMap<usize, (Expr, (f64, f64))>) -> Result<(f64, f64), EvalError> {
    if let Some((_, v)) = memo.get(&e.addr()) {
        return Ok(*v);
    }
    let out = match e.node() {
        Node::Num(r) => {
            let v = r.to_f64().unwrap_or(f64::NAN);
            (v, libm::fabs(v))
        }
        Node::Sym(_) | Node::Fun(_) => match a.get(e) {
            Some(&v) => (v, libm::fabs(v)),
            None => return Err(EvalError::Unbound(format!("{e}"))),
        },
        Node::Call(f, x) => {
            let (v, s) = go(x, a, memo)?;
            match f {
                Builtin::Sin => {
                    let r = libm::sin(v);
                    (r, libm::fabs(r) + s)
                }
                Builtin::Cos => {
                    let r = libm::cos(v);
                    (r, libm::fabs(r) + s)
                }
                Builtin::Sinh => {
                    let r = libm::sinh(v);
                    (r, libm::fabs(r) + libm::cosh(v) * s)
                }
                Builtin::Cosh => {
                    let r = libm::cosh(v);
                    (r, r * (1.0 + s))
                }
                Builtin::Exp => {
                    let r = libm::exp(v);
                    (r, r * (1.0 + s))
                }
                Builtin::Log => {
                    if v <= 0.0 {
                        return Err(domain(format!("log of non-positive value {v}")));
                    }
                    let r = libm::log(v);
                    (r, libm::fabs(r) + s / v)
                }
            }
        }
        Node::Pow(b, x) => {
            let (bv, bs) = go(b, a, memo)?;
            let int_exp = x.as_num().filter(|r| r.is_integer()).and_then(|r| r.to_integer().to_i32());
            match int_exp {
                Some(k) => {
                    if bv == 0.0 && k < 0 {
                        return Err(domain(format!("division by zero in {e}")));
                    }
                    let r = libm::pow(bv, k as f64);
                    let s = if k > 0 { libm::pow(bs, k as f64) } else { libm::fabs(r) * (1.0 + bs / libm::fabs(bv)) };
                    (r, s)
                }
                None => {
                    let (xv, xs) = go(x, a, memo)?;
                    let r = if bv < 0.0 {
                        let odd_root = x.as_num().map(|q| q.denom().to_u64().map(|d| d % 2 == 1).unwrap_or(false));
                        if odd_root == Some(true) {
                            -libm::pow(-bv, xv)
                        } else {
                            return Err(domain(format!("negative base in {e}")));
                        }
                    } else if bv == 0.0 && xv <= 0.0 {
                        return Err(domain(format!("zero base with non-positive exponent in {e}")));
                    } else {
                        libm::pow(bv, xv)
                    };
                    let s = libm::fabs(r) * (1.0 + bs / libm::fabs(bv).max(f64::MIN_POSITIVE) + xs);
                    (r, s)
                }
            }
        }
        Node::Mul(fs) => {
            let mut v = 1.0;
            let mut s = 1.0;
            for f in fs {
                let (fv, fsc) = go(f, a, memo)?;
                v *= fv;
                s *= fsc;
            }
            (v, s)
        }
        Node::Add(ts) => {
            let mut v = 0.0;
            let mut s = 0.0;
            for t in ts {
                let (tv, tsc) = go(t, a, memo)?;
                v += tv;
                s += tsc;
            }
            (v, s)
        }
    };
    if !out.0.is_finite() {
        return Err(domain(format!("non-finite value for {e}")));
    }
    memo.insert(e.addr(), (e.clone(), out));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn evaluates() {
        let mut a = Assignment::new();
        a.insert(Expr::sym("x"), 2.0);
        assert!((eval(&parse("x^3 - sqrt(x)*exp(0)").unwrap(), &a).unwrap() - (8.0 - 2f64.sqrt())).abs() < 1e-14);
        assert!(matches!(eval(&parse("y").unwrap(), &a), Err(EvalError::Unbound(_))));
        assert!(matches!(eval(&parse("log(x-3)").unwrap(), &a), Err(EvalError::Domain(_))));
        assert!(matches!(eval(&parse("(x-2)^(-1)").unwrap(), &a), Err(EvalError::Domain(_))));
    }

    #[test]
    fn scale_tracks_cancellation() {
        let mut a = Assignment::new();
        a.insert(Expr::sym("x"), 1e8);
        let (v, s) = eval_with_scale(&parse("(x+1) - x").unwrap(), &a).unwrap();
        assert_eq!(v, 1.0);
        assert!(s > 1e8);
    }
}
