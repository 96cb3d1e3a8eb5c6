use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riccisym::expr::random::random_polynomial;
use riccisym::expr::{diff, parse, simplify, substitute_raw, Bindings, ZeroTester};
use riccisym::lie::{
    check_flow_symmetry, commutator, determining_monomial_system, diffeomorphism, generic_flow, metric_jet_space, prolong2, prolong_recursive,
    scaling, time_translation, Generator,
};
use riccisym::{Expr, Symbol};

/// Point generator on the generic 2D metric space with polynomial
/// components in `t, x, g`.
fn random_point_generator(seed: u64) -> Generator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sp = metric_jet_space(2);
    let names = ["t", "x1", "x2", "G11", "G12", "G22"];
    let syms: Vec<Symbol> = names.iter().map(|s| Symbol::new(s)).collect();
    let mut b = Bindings::new();
    for (k, f) in sp.fields.iter().enumerate() {
        b.bind(Expr::symbol(syms[3 + k].clone()), f.expr()).unwrap();
    }
    let mut comp = |vars: &[Symbol]| substitute_raw(&random_polynomial(&mut rng, vars, 2, 3), &b).unwrap();
    let xi_t = comp(&syms[..1]);
    let xi = vec![comp(&syms[..3]), comp(&syms[..3])];
    let eta = (0..3).map(|_| comp(&syms)).collect();
    Generator::new(sp, xi_t, xi, eta).unwrap()
}

fn vector_field(seed: u64) -> Vec<Expr> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = [Symbol::new("x1"), Symbol::new("x2")];
    vec![random_polynomial(&mut rng, &x, 2, 3), random_polynomial(&mut rng, &x, 2, 3)]
}

fn field_bracket(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    let x = [Symbol::new("x1"), Symbol::new("x2")];
    (0..2)
        .map(|k| simplify(&Expr::sum((0..2).map(|s| a[s].clone() * diff(&b[k], &x[s]) - b[s].clone() * diff(&a[k], &x[s])))))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn prolongation_matches_recursive_formula(seed in any::<u64>()) {
        let x = random_point_generator(seed);
        let mut px = prolong2(&x);
        for jet in x.space.jets(2, false) {
            let want = prolong_recursive(&x, &jet);
            let got = px.coefficient(&jet);
            prop_assert!(simplify(&(got - want)).is_zero(), "{jet}");
        }
    }

    #[test]
    fn prolongation_stays_second_order(seed in any::<u64>()) {
        let x = random_point_generator(seed);
        let px = prolong2(&x);
        for (jet, c) in px.coefficients() {
            for f in c.functions() {
                if let Some((_, node)) = x.space.as_jet(&f) {
                    prop_assert!(node.total_order() <= 2, "{jet}: {f}");
                }
            }
        }
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let gens: Vec<Generator> = [a, b, c].iter().map(|s| diffeomorphism(2, &vector_field(*s)).unwrap()).collect();
        let (x, y, z) = (&gens[0], &gens[1], &gens[2]);
        let xy = commutator(x, y).unwrap();
        let yx = commutator(y, x).unwrap();
        prop_assert!(xy.add(&yx).unwrap().simplified().canonically_equal(&Generator::zero(metric_jet_space(2))));
        let j = commutator(x, &commutator(y, z).unwrap()).unwrap()
            .add(&commutator(y, &commutator(z, x).unwrap()).unwrap()).unwrap()
            .add(&commutator(z, &commutator(x, y).unwrap()).unwrap()).unwrap();
        prop_assert!(j.simplified().canonically_equal(&Generator::zero(metric_jet_space(2))));
    }

    #[test]
    fn diffeomorphisms_close_under_brackets(a in any::<u64>(), b in any::<u64>()) {
        let (xi, zeta) = (vector_field(a), vector_field(b));
        let got = commutator(&diffeomorphism(2, &xi).unwrap(), &diffeomorphism(2, &zeta).unwrap()).unwrap();
        let want = diffeomorphism(2, &field_bracket(&xi, &zeta)).unwrap();
        prop_assert!(got.canonically_equal(&want));
        let x1 = time_translation(2);
        let x2 = scaling(2);
        let zero = Generator::zero(metric_jet_space(2));
        prop_assert!(commutator(&x1, &diffeomorphism(2, &xi).unwrap()).unwrap().canonically_equal(&zero));
        prop_assert!(commutator(&x2, &diffeomorphism(2, &xi).unwrap()).unwrap().canonically_equal(&zero));
    }
}

#[test]
fn time_translation_and_scaling_bracket() {
    let x1 = time_translation(3);
    assert!(commutator(&x1, &scaling(3)).unwrap().canonically_equal(&x1));
}

#[test]
fn determining_system_vanishes_termwise_on_the_family() {
    let det = determining_monomial_system(2, true).unwrap();
    let tester = ZeroTester::default();
    let mut family = vec![time_translation(2), scaling(2)];
    for xi in [["x2", "-x1"], ["x1^2", "x1*x2"], ["x2^2", "0"]] {
        family.push(diffeomorphism(2, &[parse(xi[0]).unwrap(), parse(xi[1]).unwrap()]).unwrap());
    }
    for x in &family {
        for (label, key, v) in det.evaluate(x, &tester) {
            assert!(v.is_zero(), "{label} {key}: {v:?}");
        }
    }
    let mut bad = Generator::zero(metric_jet_space(2));
    bad.xi_t = parse("t").unwrap();
    assert!(det.evaluate(&bad, &tester).iter().any(|(_, _, v)| !v.is_zero()));
}

#[test]
fn rotation_is_a_symmetry_and_stretch_of_time_is_not() {
    let flow = generic_flow(2).unwrap();
    let tester = ZeroTester::default();
    let rot = diffeomorphism(2, &[parse("x2").unwrap(), parse("-x1").unwrap()]).unwrap();
    assert!(check_flow_symmetry(&rot, &flow, &tester).unwrap().is_symmetry());
    let mut bad = Generator::zero(metric_jet_space(2));
    bad.xi_t = parse("t").unwrap();
    let r = check_flow_symmetry(&bad, &flow, &tester).unwrap();
    assert!(r.witness().is_some());
}
