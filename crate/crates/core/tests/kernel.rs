use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riccisym::expr::random::{random_polynomial, random_smooth};
use riccisym::expr::{collect_monomials, diff, equals_zero, parse, simplify, Verdict};
use riccisym::numerics::{fd_cross_check, fd_suite};
use riccisym::{Expr, Symbol};

fn xy() -> [Symbol; 2] {
    [Symbol::new("x"), Symbol::new("y")]
}

fn smooth(seed: u64, depth: u32) -> Expr {
    random_smooth(&mut ChaCha8Rng::seed_from_u64(seed), &xy(), depth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplify_is_idempotent(seed in any::<u64>()) {
        let once = simplify(&smooth(seed, 4));
        prop_assert_eq!(simplify(&once), once);
    }

    #[test]
    fn print_then_parse_is_identity_on_canonical_forms(seed in any::<u64>()) {
        let c = simplify(&smooth(seed, 4));
        let back = parse(&c.to_string()).unwrap();
        prop_assert_eq!(simplify(&back), c);
    }

    #[test]
    fn derivative_is_linear(seed in any::<u64>()) {
        let (a, b) = (smooth(seed, 3), smooth(seed ^ 0xabcd, 3));
        let x = Symbol::new("x");
        let lhs = diff(&(a.clone() * Expr::int(3) - b.clone()), &x);
        let rhs = diff(&a, &x) * Expr::int(3) - diff(&b, &x);
        prop_assert!(simplify(&(lhs - rhs)).is_zero());
    }

    #[test]
    fn product_rule(seed in any::<u64>()) {
        let (a, b) = (smooth(seed, 3), smooth(seed.rotate_left(7), 3));
        let x = Symbol::new("x");
        let d = diff(&(a.clone() * b.clone()), &x) - a.clone() * diff(&b, &x) - b * diff(&a, &x);
        prop_assert_eq!(equals_zero(&d), Verdict::ZeroSymbolic);
    }

    #[test]
    fn mixed_partials_commute(seed in any::<u64>()) {
        let e = smooth(seed, 3);
        let [x, y] = xy();
        prop_assert_eq!(simplify(&diff(&diff(&e, &x), &y)), simplify(&diff(&diff(&e, &y), &x)));
    }

    #[test]
    fn monomials_reconstruct(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars = [Symbol::new("x"), Symbol::new("y"), Symbol::new("a"), Symbol::new("b")];
        let e = random_polynomial(&mut rng, &vars, 4, 6) * (Expr::sym("a") + Expr::int(1));
        let jet = [Expr::sym("x"), Expr::sym("y")];
        let parts = collect_monomials(&e, &jet).unwrap();
        for (k, c) in &parts {
            prop_assert!(!c.contains_symbol(&Symbol::new("x")) && !c.contains_symbol(&Symbol::new("y")), "{k}: {c}");
        }
        let back = Expr::sum(parts.iter().map(|(k, c)| c.clone() * k.to_expr()));
        prop_assert_eq!(equals_zero(&(back - e)), Verdict::ZeroSymbolic);
    }

    #[test]
    fn derivative_matches_finite_differences(seed in any::<u64>()) {
        let e = smooth(seed, 3);
        let r = fd_cross_check(&e, &xy(), 4, seed);
        prop_assert!(r.pass_rate() >= 0.99 || r.per_variable.iter().all(|v| v.trials == 0), "{e}: {r:?}");
    }
}

#[test]
fn finite_difference_suite() {
    let r = fd_suite(1000, 0x5eed_2024);
    assert!(r.pass_rate() >= 0.99, "{r:?}");
}

#[test]
fn zero_test_rejects_perturbation() {
    let e = parse("sin(x)^2 + cos(x)^2 - 1 + y*10^(-6)").unwrap();
    assert!(!equals_zero(&e).is_zero());
}
