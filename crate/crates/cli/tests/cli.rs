use std::process::{Command, Output};

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riccisym")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(args: &[&str]) -> (i32, serde_json::Value) {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let o = run(&all);
    let v = serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)));
    (code(&o), v)
}

#[test]
fn symmetry_family_passes() {
    let (c, v) = json(&["check-symmetry", &data("generic2.json"), "--generator", &data("flow_family_n2.json")]);
    assert_eq!(c, 0, "{v}");
}

#[test]
fn time_stretch_is_rejected_with_witness() {
    let (c, v) = json(&["check-symmetry", &data("generic2.json"), "--generator", &data("t_dt.json")]);
    assert_eq!(c, 1);
    let text = v.to_string();
    assert!(text.contains("\"nonzero\"") && text.contains("\"witness\""), "{text}");
}

#[test]
fn fiber_scaling_depends_on_the_fiber() {
    let g = data("phi_scaling.json");
    assert_eq!(code(&run(&["check-symmetry", &data("einstein_fiber2.json"), "--generator", &g])), 1);
    assert_eq!(code(&run(&["check-symmetry", &data("euclidean_fiber2.json"), "--generator", &g])), 0);
}

#[test]
fn conformal_samples() {
    let spec = data("conformal2d.json");
    assert_eq!(code(&run(&["check-symmetry", &spec, "--generator", &data("dilation_conformal.json")])), 0);
    assert_eq!(code(&run(&["check-symmetry", &spec, "--generator", &data("swap_conformal.json")])), 1);
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(code(&run(&["ricci", &data("bad.json")])), 2);
    assert_eq!(code(&run(&["ricci", &data("missing.json")])), 2);
    assert_eq!(code(&run(&["restrict", "--ansatz", "nope"])), 2);
    assert_eq!(code(&run(&["reduce", "--family", "doubly_warped", "--params", "p=1"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let o = run(&["verify-solution", "--name", "dw_sincos", "--grid", "k=1,p=2,q=2", "--t-range", "0:2:5"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn json_output_is_deterministic() {
    let cases: [Vec<String>; 3] = [
        vec!["--format".into(), "json".into(), "ricci".into(), data("generic2.json")],
        vec!["--format".into(), "json".into(), "restrict".into(), "--ansatz".into(), "warped_euclidean_fiber".into()],
        vec!["--format".into(), "json".into(), "check-symmetry".into(), data("generic2.json"), "--generator".into(), data("t_dt.json")],
    ];
    for args in &cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (a, b) = (run(&args), run(&args));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn verify_solution_reports_both_checks() {
    for name in ["warped_hyperbolic", "warped_spherical", "dw_sincos", "dw_sinsin", "dw_sinhsinh"] {
        let (c, v) = json(&["verify-solution", "--name", name]);
        assert_eq!(c, 0, "{name}");
        assert_eq!(v["symbolic"], "zero", "{name}");
        assert!(v["numeric_max_abs"].as_f64().unwrap() < 1e-10, "{name}: {}", v["numeric_max_abs"]);
    }
}

#[test]
fn restrict_conformal_plane() {
    let (c, v) = json(&["restrict", "--ansatz", "conformal2d"]);
    assert_eq!(c, 0);
    let cons = v["constraints"].as_array().unwrap();
    assert_eq!(cons.len(), 2);
    let exprs: Vec<&str> = cons.iter().map(|r| r["expr"].as_str().unwrap()).collect();
    assert!(exprs.iter().all(|e| e.contains("xi1") && e.contains("xi2")), "{exprs:?}");
}

#[test]
fn bracket_of_time_generators() {
    let (c, v) = json(&["bracket", &data("x1.json"), &data("x2.json")]);
    assert_eq!(c, 0);
    assert!(v.to_string().contains("\"expr\":\"1\""), "{v}");
}

#[test]
fn reduce_prints_each_equation() {
    let (c, v) = json(&["reduce", "--family", "doubly_warped", "--params", "p=3"]);
    assert_eq!(c, 0);
    assert_eq!(v["family"], "doubly_warped");
}

/// Every control sequence the renderer may emit.
const MACROS: &[&str] = &[
    "documentclass", "usepackage", "begin", "end", "section", "subsection", "item", "text", "frac", "left", "right",
    "partial", "sqrt", "quad", "sin", "cos", "sinh", "cosh", "tan", "exp", "log", "textbackslash", "textasciicircum",
    "textasciitilde", "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda",
    "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega",
];

fn check_latex(src: &str) {
    let mut depth = 0i64;
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                assert!(depth >= 0, "unbalanced braces");
            }
            '\\' => {
                let mut name = String::new();
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_alphabetic() {
                        name.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    let sym = chars.next().expect("dangling backslash");
                    assert!(",\\_{}#$%&".contains(sym), "escape \\{sym}");
                } else {
                    assert!(MACROS.contains(&name.as_str()), "macro \\{name}");
                }
            }
            _ => {}
        }
    }
    assert_eq!(depth, 0, "unbalanced braces");
    assert_eq!(src.matches("\\begin{").count(), src.matches("\\end{").count());
}

#[test]
fn latex_output_is_well_formed() {
    let runs: Vec<Vec<String>> = vec![
        vec!["ricci".into(), data("sphere2.json")],
        vec!["christoffel".into(), data("conformal2d.json")],
        vec!["flow-residual".into(), data("shrinking_sphere2.json")],
        vec!["restrict".into(), "--ansatz".into(), "doubly_warped".into()],
        vec!["reduce".into(), "--family".into(), "warped_1d_sphere_fiber".into()],
        vec!["verify-solution".into(), "--name".into(), "dw_sinhsinh".into()],
        vec!["check-symmetry".into(), data("einstein_fiber2.json"), "--generator".into(), data("phi_scaling.json")],
        vec!["bracket".into(), data("x1.json"), data("x2.json")],
    ];
    for args in runs {
        let mut all = vec!["--format", "latex"];
        all.extend(args.iter().map(String::as_str));
        let o = run(&all);
        assert!(code(&o) <= 1, "{args:?}");
        let src = String::from_utf8(o.stdout).unwrap();
        assert!(src.starts_with("\\documentclass{article}"), "{args:?}");
        check_latex(&src);
    }
}
