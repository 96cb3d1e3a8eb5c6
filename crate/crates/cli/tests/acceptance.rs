//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riccisym::expr::random::{random_polynomial, random_smooth};
use riccisym::expr::{collect_monomials, diff, equals_zero, equals_zero_with, parse, simplify, Assumptions, Bindings, Verdict, ZeroTester};
use riccisym::geometry::Geometry;
use riccisym::lie::{check_flow_symmetry, check_symmetry, commutator, diffeomorphism, generic_flow, metric_jet_space, scaling, time_translation, Generator};
use riccisym::numerics::{fd_suite, grid_residual, polynomial_vector_fields, random_rational_metric, Grid};
use riccisym::reduce::{closed_form_library, solution, verify_closed_form, ReducedFamily};
use riccisym::restrict::{conformal2d, doubly_warped, doubly_warped_generators, restrict, verify_restricted_algebra, warped_audit, warped_einstein_fiber};
use riccisym::{Expr, Symbol};

type Outcome = Result<String, String>;

const SEED: u64 = 0x5eed_2024;

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.1?}, target {limit:?}"))
}

/// Time translation, scaling and one diffeomorphism generator per basis field.
fn flow_family(n: usize, degree: u32) -> Outcome {
    let start = Instant::now();
    let flow = generic_flow(n).map_err(|e| e.to_string())?;
    let tester = ZeroTester::default();
    let fields = polynomial_vector_fields(n, degree);
    ensure(fields.len() == 12, || format!("{} basis fields", fields.len()))?;
    let mut gens = vec![(String::from("X1"), time_translation(n)), (String::from("X2"), scaling(n))];
    for xi in &fields {
        let label = xi.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        gens.push((format!("xi=({label})"), diffeomorphism(n, xi).map_err(|e| e.to_string())?));
    }
    let (mut sym, mut prob) = (0, 0);
    for (label, x) in &gens {
        let r = check_flow_symmetry(x, &flow, &tester).map_err(|e| e.to_string())?;
        ensure(r.is_symmetry(), || format!("{label}: witness {:?}", r.witness()))?;
        for e in &r.entries {
            if e.verdict == Verdict::ZeroSymbolic {
                sym += 1;
            } else {
                prob += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(if n == 2 { 60 } else { 600 }))?;
    Ok(format!("{} generators, {sym} entries symbolic, {prob} probabilistic, {elapsed:.1?}", gens.len()))
}

fn criterion_1() -> Outcome {
    flow_family(2, 2)
}

fn criterion_2() -> Outcome {
    flow_family(3, 1)
}

fn bind_xi(r: &riccisym::restrict::RestrictionResult, bodies: [&str; 2]) -> Result<Generator, String> {
    let args = [Symbol::new("x1"), Symbol::new("x2")];
    let mut b = Bindings::new();
    b.bind_function("xi1", &args, p(bodies[0])).map_err(|e| e.to_string())?;
    b.bind_function("xi2", &args, p(bodies[1])).map_err(|e| e.to_string())?;
    r.generator.substitute(&b).map_err(|e| e.to_string())
}

fn criterion_3() -> Outcome {
    let a = conformal2d();
    let r = restrict(&a).map_err(|e| e.to_string())?;
    let cr = [p("D(xi1(x1,x2),x1) - D(xi2(x1,x2),x2)"), p("D(xi1(x1,x2),x2) + D(xi2(x1,x2),x1)")];
    ensure(r.constraints.len() == 2, || format!("constraints {:?}", r.constraints))?;
    for want in &cr {
        let found = r.constraints.iter().any(|c| {
            equals_zero(&(c.clone() - want.clone())).is_zero() || equals_zero(&(c.clone() + want.clone())).is_zero()
        });
        ensure(found, || format!("missing {want} in {:?}", r.constraints))?;
    }
    let q = p("c2 - 2*D(xi1(x1,x2),x1) - (c1 + c2*t)*D(u(x1,x2,t),t) - xi1(x1,x2)*D(u(x1,x2,t),x1) - xi2(x1,x2)*D(u(x1,x2,t),x2)");
    ensure(r.characteristics.len() == 1, || String::from("one characteristic expected"))?;
    let v = equals_zero(&(r.characteristics[0].1.clone() - q));
    ensure(v.is_zero(), || format!("Q differs: {v:?}"))?;

    let sys = a.reduced_system().map_err(|e| e.to_string())?;
    let tester = ZeroTester::default();
    let good = check_symmetry(&bind_xi(&r, ["x1", "x2"])?, &sys, &tester).map_err(|e| e.to_string())?;
    ensure(good.is_symmetry(), || format!("xi=(x1,x2) rejected: {:?}", good.witness()))?;
    let bad = check_symmetry(&bind_xi(&r, ["x2", "x1"])?, &sys, &tester).map_err(|e| e.to_string())?;
    let w = bad.witness().ok_or("xi=(x2,x1) accepted")?;
    Ok(format!("CR pair and Q match; xi=(x1,x2) passes; xi=(x2,x1) fails at {}", w.label))
}

fn criterion_4() -> Outcome {
    let tester = ZeroTester { term_budget: 5_000, ..ZeroTester::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut summary = Vec::new();
    for (n, count) in [(2, 50), (3, 20)] {
        let (mut sym, mut prob) = (0, 0);
        for case in 0..count {
            let m = random_rational_metric(&mut rng, n);
            let geo = Geometry::new(&m).map_err(|e| e.to_string())?;
            let (a, b) = (geo.ricci_raw(), geo.ricci_oracle());
            for (i, j, e) in a.upper() {
                match tester.test(&(e.clone() - b.get(i, j).clone())) {
                    Verdict::ZeroSymbolic => sym += 1,
                    v if v.is_zero() => prob += 1,
                    v => return Err(format!("n={n} metric {case} entry ({i},{j}): {v:?}")),
                }
            }
        }
        summary.push(format!("n={n}: {count} metrics, {sym} symbolic, {prob} probabilistic"));
    }
    Ok(summary.join("; "))
}

fn criterion_5() -> Outcome {
    let lib = closed_form_library();
    ensure(lib.len() == 5, || format!("{} solutions", lib.len()))?;
    let mut worst = 0.0f64;
    for sol in &lib {
        let r = verify_closed_form(sol).map_err(|e| e.to_string())?;
        ensure(r.all_symbolic(), || format!("{}: {:?}", sol.name, r.checks))?;
        let sets: Vec<Vec<(&str, f64)>> = match sol.family {
            ReducedFamily::DoublyWarped => vec![vec![("k", 1.0), ("p", 2.0), ("q", 2.0)], vec![("k", 1.0), ("p", 3.0), ("q", 2.0)]],
            _ => vec![vec![("k", 1.0), ("m", 2.0)], vec![("k", 1.0), ("m", 3.0)]],
        };
        for set in sets {
            let g = grid_residual(sol, &Grid::canonical(&set)).map_err(|e| e.to_string())?;
            ensure(g.max_abs < 1e-10, || format!("{} {set:?}: max_abs {:e}", sol.name, g.max_abs))?;
            worst = worst.max(g.max_abs);
        }
    }
    Ok(format!("5 solutions symbolic; worst grid max_abs {worst:.2e}"))
}

fn criterion_6() -> Outcome {
    let sol = solution("dw_sincos").map_err(|e| e.to_string())?;
    let res = sol.reduced_residuals().map_err(|e| e.to_string())?;
    ensure(res.len() == 3, || format!("{} equations", res.len()))?;
    for (i, e) in res.iter().enumerate() {
        let v = equals_zero_with(e, &sol.assumptions());
        ensure(v == Verdict::ZeroSymbolic, || format!("equation {}: {v:?}", i + 1))?;
    }
    let (g, h) = (&sol.profiles[0].1, &sol.profiles[1].1);
    let amp = Expr::powi(g.clone(), 2) + Expr::powi(h.clone(), 2) - p("(p + q)") / -sol.reduction_k.clone();
    let pos = Assumptions::with_positive(["k", "p", "q"].iter().map(|s| Expr::sym(s)));
    let v = equals_zero_with(&amp, &pos);
    ensure(v == Verdict::ZeroSymbolic, || format!("amplitude: {v:?}"))?;
    Ok(String::from("three arc-length equations and G^2 + H^2 = (p+q)/(-k) vanish symbolically"))
}

fn random_field(seed: u64) -> Vec<Expr> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = [Symbol::new("x1"), Symbol::new("x2")];
    vec![random_polynomial(&mut rng, &x, 2, 3), random_polynomial(&mut rng, &x, 2, 3)]
}

/// Vector field bracket computed directly on the plane.
fn field_bracket(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    let x = [Symbol::new("x1"), Symbol::new("x2")];
    (0..2)
        .map(|k| simplify(&Expr::sum((0..2).map(|s| a[s].clone() * diff(&b[k], &x[s]) - b[s].clone() * diff(&a[k], &x[s])))))
        .collect()
}

fn criterion_7() -> Outcome {
    let err = |e: riccisym::lie::LieError| e.to_string();
    let (x1, x2) = (time_translation(2), scaling(2));
    ensure(commutator(&x1, &x2).map_err(err)?.canonically_equal(&x1), || String::from("[X1,X2] != X1"))?;
    let zero = Generator::zero(metric_jet_space(2));
    for xi in polynomial_vector_fields(2, 2) {
        let x = diffeomorphism(2, &xi).map_err(err)?;
        ensure(commutator(&x1, &x).map_err(err)?.canonically_equal(&zero), || format!("[X1,X_xi] != 0 for {xi:?}"))?;
    }
    for pair in 0..3u64 {
        let (xi, zeta) = (random_field(SEED + 2 * pair), random_field(SEED + 2 * pair + 1));
        let got = commutator(&diffeomorphism(2, &xi).map_err(err)?, &diffeomorphism(2, &zeta).map_err(err)?).map_err(err)?;
        let want = diffeomorphism(2, &field_bracket(&xi, &zeta)).map_err(err)?;
        ensure(got.canonically_equal(&want), || format!("pair {pair}: {xi:?}, {zeta:?}"))?;
    }
    Ok(String::from("[X1,X2]=X1, [X1,X_xi]=0 on 12 fields, 3 seeded pairs close"))
}

fn criterion_8() -> Outcome {
    let tester = ZeroTester::default();
    let gens = doubly_warped_generators().map_err(|e| e.to_string())?;
    let reports = verify_restricted_algebra(&gens, &doubly_warped(), &tester).map_err(|e| e.to_string())?;
    ensure(reports.len() == 3, || format!("{} reports", reports.len()))?;
    for (i, r) in reports.iter().enumerate() {
        ensure(r.is_symmetry(), || format!("doubly-warped generator {}: {:?}", i + 1, r.witness()))?;
    }
    let mut lines = vec![String::from("doubly-warped: 3 generators verify")];
    for euclid in [false, true] {
        let audit = warped_audit(euclid, &tester).map_err(|e| e.to_string())?;
        for c in &audit.candidates {
            let failing: Vec<&str> = c.generators.iter().filter(|(_, r)| !r.is_symmetry()).map(|(l, _)| l.as_str()).collect();
            let state = if failing.is_empty() { String::from("verifies") } else { format!("fails on {}", failing.join(", ")) };
            lines.push(format!("{}: {} {state}", audit.ansatz, c.name));
        }
    }
    Ok(lines.join("\n         "))
}

fn criterion_9() -> Outcome {
    let fd = fd_suite(1000, SEED);
    ensure(fd.pass_rate() >= 0.99, || format!("fd pass rate {:.4}", fd.pass_rate()))?;
    let xy = [Symbol::new("x"), Symbol::new("y")];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for case in 0..1000 {
        let once = simplify(&random_smooth(&mut rng, &xy, 4));
        ensure(simplify(&once) == once, || format!("simplify not idempotent on case {case}: {once}"))?;
    }
    let vars = [Symbol::new("x"), Symbol::new("y"), Symbol::new("a"), Symbol::new("b")];
    let jet = [Expr::sym("x"), Expr::sym("y")];
    for case in 0..1000 {
        let e = random_polynomial(&mut rng, &vars, 4, 6) * (Expr::sym("a") + Expr::int(1));
        let parts = collect_monomials(&e, &jet).map_err(|err| format!("case {case}: {err}"))?;
        let back = Expr::sum(parts.iter().map(|(k, c)| c.clone() * k.to_expr()));
        ensure(equals_zero(&(back - e)) == Verdict::ZeroSymbolic, || format!("monomials do not reconstruct case {case}"))?;
    }
    Ok(format!("fd pass rate {:.4} ({} skipped); 1000 idempotent, 1000 reconstructed", fd.pass_rate(), fd.skipped))
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn cli_exit(spec: &str, generator: &str) -> Result<i32, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_riccisym"))
        .args(["check-symmetry", &data(spec), "--generator", &data(generator)])
        .output()
        .map_err(|e| e.to_string())?;
    o.status.code().ok_or_else(|| String::from("killed"))
}

fn criterion_10() -> Outcome {
    let tester = ZeroTester::default();
    let flow = generic_flow(2).map_err(|e| e.to_string())?;
    let mut stretch = Generator::zero(metric_jet_space(2));
    stretch.xi_t = p("t");
    let r = check_flow_symmetry(&stretch, &flow, &tester).map_err(|e| e.to_string())?;
    let w1 = r.witness().ok_or("t d_t accepted")?.label.clone();

    let a = warped_einstein_fiber(2);
    let x = a.generator("0", &["0", "0"], &["0", "phi"]).map_err(|e| e.to_string())?;
    let r = check_symmetry(&x, &a.reduced_system().map_err(|e| e.to_string())?, &tester).map_err(|e| e.to_string())?;
    let w2 = r.witness().ok_or("phi d_phi accepted")?.label.clone();

    let c1 = cli_exit("generic2.json", "t_dt.json")?;
    let c2 = cli_exit("einstein_fiber2.json", "phi_scaling.json")?;
    ensure(c1 == 1 && c2 == 1, || format!("CLI exit codes {c1}, {c2}"))?;
    Ok(format!("t d_t witness {w1}, phi d_phi witness {w2}, CLI exit 1 for both"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("flow symmetries, n=2, degree <= 2", criterion_1),
        ("flow symmetries, n=3, degree <= 1", criterion_2),
        ("conformal plane restriction", criterion_3),
        ("Ricci oracle agreement", criterion_4),
        ("closed-form library", criterion_5),
        ("sin-cos reduced identities", criterion_6),
        ("bracket table", criterion_7),
        ("restricted algebras and warped audit", criterion_8),
        ("kernel health", criterion_9),
        ("falsification", criterion_10),
    ];
    let handles: Vec<_> = criteria.iter().map(|(_, f)| thread::spawn(*f)).collect();
    let mut failed = 0;
    for (k, ((name, _), h)) in criteria.iter().zip(handles).enumerate() {
        let outcome = h.join().unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
