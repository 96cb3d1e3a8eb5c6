//! Seeded random expressions for kernel cross-checks.

use alloc::vec::Vec;

use rand::Rng;

use super::{Expr, Symbol};

/// A random expression in `symbols` that is smooth and finite on positive
/// arguments of moderate size. Depth 0 gives a leaf.
pub fn random_smooth<R: Rng + ?Sized>(rng: &mut R, symbols: &[Symbol], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng, symbols);
    }
    let d = depth - 1;
    match rng.gen_range(0..11) {
        0 | 1 => random_smooth(rng, symbols, d) + random_smooth(rng, symbols, d),
        2 | 3 => random_smooth(rng, symbols, d) * random_smooth(rng, symbols, d),
        4 => Expr::powi(random_smooth(rng, symbols, d), rng.gen_range(2..4)),
        5 => Expr::sin(random_smooth(rng, symbols, d)),
        6 => Expr::cos(random_smooth(rng, symbols, d)),
        7 => Expr::exp(random_smooth(rng, symbols, d) * Expr::rational(1, 2)),
        8 => {
            let a = random_smooth(rng, symbols, d);
            Expr::sqrt(Expr::one() + Expr::powi(a, 2))
        }
        9 => {
            let a = random_smooth(rng, symbols, d);
            Expr::log(Expr::one() + Expr::powi(a, 2))
        }
        _ => {
            let a = random_smooth(rng, symbols, d);
            let b = random_smooth(rng, symbols, d);
            a / (Expr::one() + Expr::powi(b, 2))
        }
    }
}

fn leaf<R: Rng + ?Sized>(rng: &mut R, symbols: &[Symbol]) -> Expr {
    if symbols.is_empty() || rng.gen_bool(0.25) {
        let n = rng.gen_range(-4i64..=4);
        let d = rng.gen_range(1i64..=3);
        return Expr::rational(if n == 0 { 1 } else { n }, d);
    }
    Expr::symbol(symbols[rng.gen_range(0..symbols.len())].clone())
}

/// Random polynomial of total degree at most `degree` with small integer
/// coefficients.
pub fn random_polynomial<R: Rng + ?Sized>(rng: &mut R, symbols: &[Symbol], degree: u32, terms: usize) -> Expr {
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let c = rng.gen_range(-3i64..=3);
        if c == 0 {
            continue;
        }
        let mut factors = alloc::vec![Expr::int(c)];
        let deg = rng.gen_range(0..=degree);
        for _ in 0..deg {
            factors.push(Expr::symbol(symbols[rng.gen_range(0..symbols.len())].clone()));
        }
        out.push(Expr::product(factors));
    }
    Expr::sum(out)
}
