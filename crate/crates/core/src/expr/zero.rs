//! Zero testing: bounded symbolic simplification, then denominator clearing,
//! then evaluation at seeded random points.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{eval_with_scale, Assignment, Assumptions, EvalError, Expr, Node, Rational, Simplifier};

/// Outcome of a zero test.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// The canonical form is literally zero.
    ZeroSymbolic,
    /// Every probe point evaluated below tolerance.
    ZeroProbabilistic { points: usize, max_abs: f64 },
    /// A probe point where the expression is (or may be) nonzero.
    NonZero { witness: Assignment, value: f64, note: Option<String> },
}

impl Verdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, Verdict::NonZero { .. })
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, Verdict::ZeroSymbolic)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::ZeroSymbolic => "zero (symbolic)",
            Verdict::ZeroProbabilistic { .. } => "zero (probabilistic)",
            Verdict::NonZero { .. } => "nonzero",
        }
    }
}

/// Zero-test configuration.
#[derive(Clone, Debug)]
pub struct ZeroTester {
    pub points: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub range: (f64, f64),
    pub max_redraws: usize,
    /// Term budget for the symbolic phase; 0 skips it.
    pub term_budget: usize,
    pub clearing_rounds: usize,
    pub assumptions: Assumptions,
}

impl Default for ZeroTester {
    fn default() -> Self {
        ZeroTester {
            points: 8,
            tolerance: 1e-9,
            seed: 0x5eed_2024,
            range: (0.2, 1.7),
            max_redraws: 32,
            term_budget: 200_000,
            clearing_rounds: 4,
            assumptions: Assumptions::new(),
        }
    }
}

/// Zero test with the default configuration.
pub fn equals_zero(e: &Expr) -> Verdict {
    ZeroTester::default().test(e)
}

/// Zero test under positivity assumptions.
pub fn equals_zero_with(e: &Expr, assumptions: &Assumptions) -> Verdict {
    ZeroTester { assumptions: assumptions.clone(), ..ZeroTester::default() }.test(e)
}

impl ZeroTester {
    pub fn numeric_only() -> Self {
        ZeroTester { term_budget: 0, ..ZeroTester::default() }
    }

    pub fn test(&self, e: &Expr) -> Verdict {
        let mut probe_target = e.clone();
        if self.term_budget > 0 {
            let mut simp = Simplifier::new(self.assumptions.clone()).with_budget(self.term_budget);
            if let Ok(s) = simp.run(e) {
                if s.is_zero() {
                    return Verdict::ZeroSymbolic;
                }
                if let Some(true) = self.clear_denominators(&s) {
                    return Verdict::ZeroSymbolic;
                }
                probe_target = s;
            }
        }
        self.probe(&probe_target)
    }

    /// Multiply by the largest negative power of each base and re-simplify.
    /// Returns `Some(true)` when the product collapses to zero.
    fn clear_denominators(&self, s: &Expr) -> Option<bool> {
        let mut cur = s.clone();
        for _ in 0..self.clearing_rounds {
            let dens = negative_powers(&cur);
            if dens.is_empty() {
                return Some(false);
            }
            let mut factors = Vec::with_capacity(dens.len() + 1);
            factors.push(cur.clone());
            for (b, r) in dens {
                factors.push(Expr::pow(b, Expr::num(r)));
            }
            let mut simp = Simplifier::new(self.assumptions.clone()).with_budget(self.term_budget);
            cur = simp.run(&Expr::product(factors)).ok()?;
            if cur.is_zero() {
                return Some(true);
            }
        }
        Some(false)
    }

    /// Evaluate at seeded random points.
    pub fn probe(&self, e: &Expr) -> Verdict {
        let atoms = e.atoms();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut max_abs: f64 = 0.0;
        let mut done = 0;
        let mut redraws = 0;
        while done < self.points {
            let mut a = Assignment::new();
            for atom in &atoms {
                a.insert(atom.clone(), rng.gen_range(self.range.0..self.range.1));
            }
            match eval_with_scale(e, &a) {
                Ok((v, scale)) => {
                    let threshold = self.tolerance * scale.max(1.0);
                    if libm::fabs(v) >= threshold {
                        return Verdict::NonZero { witness: a, value: v, note: None };
                    }
                    max_abs = max_abs.max(libm::fabs(v));
                    done += 1;
                }
                Err(EvalError::Domain(msg)) => {
                    redraws += 1;
                    if redraws > self.max_redraws {
                        return Verdict::NonZero {
                            witness: a,
                            value: f64::NAN,
                            note: Some(alloc::format!("indeterminate: no valid probe point ({msg})")),
                        };
                    }
                }
                Err(err @ EvalError::Unbound(_)) => {
                    return Verdict::NonZero { witness: a, value: f64::NAN, note: Some(alloc::format!("{err}")) };
                }
            }
        }
        Verdict::ZeroProbabilistic { points: done, max_abs }
    }
}

/// Bases raised to negative rational powers anywhere in the top-level terms,
/// with the largest magnitude of exponent seen.
fn negative_powers(e: &Expr) -> Vec<(Expr, Rational)> {
    let mut out: BTreeMap<Expr, Rational> = BTreeMap::new();
    let terms: Vec<Expr> = match e.node() {
        Node::Add(ts) => ts.clone(),
        _ => alloc::vec![e.clone()],
    };
    for t in terms {
        let factors: Vec<Expr> = match t.node() {
            Node::Mul(fs) => fs.clone(),
            _ => alloc::vec![t.clone()],
        };
        for f in factors {
            if let Node::Pow(b, x) = f.node() {
                if let Node::Num(r) = x.node() {
                    if r.is_negative() {
                        let m = -r.clone();
                        let entry = out.entry(b.clone()).or_insert_with(|| m.clone());
                        if m > *entry {
                            *entry = m;
                        }
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn symbolic_zero() {
        assert_eq!(equals_zero(&parse("(x+1)^2 - x^2 - 2*x - 1").unwrap()), Verdict::ZeroSymbolic);
    }

    #[test]
    fn cleared_denominators() {
        let e = parse("1/(x+y) + 1/(x-y) - 2*x/(x^2-y^2)").unwrap();
        assert_eq!(equals_zero(&e), Verdict::ZeroSymbolic);
    }

    #[test]
    fn nonzero_has_witness() {
        match equals_zero(&parse("x - y").unwrap()) {
            Verdict::NonZero { witness, value, .. } => {
                assert_eq!(witness.len(), 2);
                assert!(value.abs() > 0.0);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn probabilistic_fallback() {
        let t = ZeroTester::numeric_only();
        let v = t.test(&parse("sin(2*x) - 2*sin(x)*cos(x)").unwrap());
        assert!(matches!(v, Verdict::ZeroProbabilistic { .. }), "{v:?}");
    }
}
