use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riccisym::expr::{equals_zero, parse, simplify, Verdict, ZeroTester};
use riccisym::flow::{flow_residual, FlowSystem};
use riccisym::geometry::{christoffel_lower, ricci, warped_ricci, Chart, Fiber, FieldDecl, Geometry, MetricFamily, SymMatrix, WarpedProduct};
use riccisym::numerics::random_rational_metric;
use riccisym::reduce::closed_form_library;
use riccisym::{Expr, Symbol};

fn oracle_tester() -> ZeroTester {
    ZeroTester { term_budget: 5_000, ..ZeroTester::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn christoffel_and_ricci_are_symmetric(seed in any::<u64>()) {
        let m = random_rational_metric(&mut ChaCha8Rng::seed_from_u64(seed), 2);
        let g = christoffel_lower(&m).unwrap();
        for t in 0..2 {
            prop_assert_eq!(&g[t][0][1], &g[t][1][0]);
        }
        let geo = Geometry::new(&m).unwrap();
        let r = geo.ricci_raw();
        let v = oracle_tester().test(&(r.get(0, 1).clone() - r.get(1, 0).clone()));
        prop_assert!(v.is_zero());
    }

    #[test]
    fn ricci_is_scale_invariant(seed in any::<u64>()) {
        let m = random_rational_metric(&mut ChaCha8Rng::seed_from_u64(seed), 2);
        let scaled = MetricFamily::new(m.chart.clone(), m.metric.map(|e| Expr::int(7) / Expr::int(3) * e.clone()), Vec::new()).unwrap();
        let (a, b) = (Geometry::new(&m).unwrap().ricci_raw(), Geometry::new(&scaled).unwrap().ricci_raw());
        for (i, j, e) in a.upper() {
            prop_assert!(oracle_tester().test(&(e.clone() - b.get(i, j).clone())).is_zero());
        }
    }

    #[test]
    fn contraction_of_riemann_agrees(seed in any::<u64>()) {
        let m = random_rational_metric(&mut ChaCha8Rng::seed_from_u64(seed), 2);
        let geo = Geometry::new(&m).unwrap();
        let (a, b) = (geo.ricci_raw(), geo.ricci_oracle());
        for (i, j, e) in a.upper() {
            prop_assert!(oracle_tester().test(&(e.clone() - b.get(i, j).clone())).is_zero());
        }
    }
}

#[test]
fn perturbed_oracle_is_caught() {
    let m = random_rational_metric(&mut ChaCha8Rng::seed_from_u64(3), 2);
    let geo = Geometry::new(&m).unwrap();
    let d = geo.ricci_raw().get(0, 0).clone() - geo.ricci_oracle().get(0, 0).clone() + parse("x1/1000").unwrap();
    assert!(!oracle_tester().test(&d).is_zero());
}

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

/// `ψ^{-2} δ + φ² g_can` against the block formulas written with flat
/// derivatives on the base.
fn conformal_base_warped_product(n: usize) {
    let chart = Chart::standard(n);
    let vars = chart.all_variables();
    let psi = Expr::field("psi", &vars);
    let phi = Expr::field("phi", &vars);
    let base = MetricFamily::new(
        chart.clone(),
        SymMatrix::from_fn(n, |i, j| if i == j { Expr::powi(psi.clone(), -2) } else { Expr::zero() }),
        vec![FieldDecl::new("psi", &vars), FieldDecl::new("phi", &vars)],
    )
    .unwrap();
    let (m, mu) = (Expr::sym("m"), Expr::sym("mu"));
    let w = WarpedProduct { base, fibers: vec![Fiber { dim: m.clone(), einstein: mu.clone(), warp: phi.clone() }] };
    let r = warped_ricci(&w).unwrap();

    let x: Vec<Symbol> = chart.coords.clone();
    let d = |f: &Expr, i: usize| riccisym::expr::diff(f, &x[i]);
    let lap = |f: &Expr| Expr::sum((0..n).map(|i| d(&d(f, i), i)));
    let dot = |f: &Expr, g: &Expr| Expr::sum((0..n).map(|i| d(f, i) * d(g, i)));
    let nn = Expr::int(n as i64);
    let one = Expr::one();
    for i in 0..n {
        for j in i..n {
            let delta = if i == j { one.clone() } else { Expr::zero() };
            let want = (nn.clone() - Expr::int(2)) * d(&d(&psi, i), j) / psi.clone()
                + (lap(&psi) / psi.clone() - (nn.clone() - one.clone()) * dot(&psi, &psi) / Expr::powi(psi.clone(), 2)) * delta.clone()
                - m.clone() / phi.clone()
                    * (d(&d(&phi, i), j) + (d(&psi, i) * d(&phi, j) + d(&psi, j) * d(&phi, i)) / psi.clone()
                        - dot(&psi, &phi) / psi.clone() * delta);
            assert_eq!(equals_zero(&(r.base.get(i, j).clone() - want)), Verdict::ZeroSymbolic, "n={n} ({i},{j})");
        }
    }
    let fiber_want = mu
        - phi.clone() * Expr::powi(psi.clone(), 2) * (lap(&phi) - (nn - Expr::int(2)) * dot(&phi, &psi) / psi.clone())
        - (m - one) * Expr::powi(psi.clone(), 2) * dot(&phi, &phi);
    assert_eq!(equals_zero(&(r.fibers[0].clone() - fiber_want)), Verdict::ZeroSymbolic, "n={n} fiber");
}

#[test]
fn warped_blocks_match_flat_formulas() {
    conformal_base_warped_product(2);
    conformal_base_warped_product(3);
}

#[test]
fn closed_forms_solve_the_flow() {
    for sol in closed_form_library() {
        let r = sol.flow_residual().unwrap();
        for e in r {
            let v = riccisym::expr::equals_zero_with(&e, &sol.assumptions());
            assert_eq!(v, Verdict::ZeroSymbolic, "{}", sol.name);
        }
    }
}

#[test]
fn on_shell_is_a_projection() {
    let f = FlowSystem::generic(2).unwrap();
    let e = p("D(g11(x1,x2,t),t)*D(D(g22(x1,x2,t),t),x2) + D(g12(x1,x2,t),x1)");
    let once = f.on_shell(&e).unwrap();
    assert_eq!(f.on_shell(&once).unwrap(), once);
}

#[test]
fn round_sphere_shrinks() {
    let chart = Chart::new(&["th", "ph"], Some("t"));
    let m = MetricFamily::from_rows(chart, vec![vec![p("1-2*t"), Expr::zero()], vec![Expr::zero(), p("(1-2*t)*sin(th)^2")]], Vec::new()).unwrap();
    let r = flow_residual(&m).unwrap();
    assert!(r.upper().all(|(_, _, e)| simplify(e).is_zero()));
    let flat = MetricFamily::from_rows(Chart::new(&["x", "y"], Some("t")), vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::one()]], Vec::new()).unwrap();
    assert!(ricci(&flat).unwrap().upper().all(|(_, _, e)| e.is_zero()));
}
