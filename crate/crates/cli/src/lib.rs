//! Command-line front end: metric spec and generator file formats, and the
//! commands of the `riccisym` binary.

pub mod report;
pub mod spec;

use clap::{Parser, Subcommand};
use riccisym::expr::{simplify, Verdict, ZeroTester};
use riccisym::geometry::{christoffel_lower, ricci, warped_flow_residual, warped_ricci, Fiber, WarpedProduct};
use riccisym::flow::flow_residual;
use riccisym::lie::{check_symmetry, commutator, Generator};
use riccisym::numerics::{grid_residual, Grid};
use riccisym::reduce::{reduced_system, reduction_generator, solution, verify_closed_form, Params, ReducedFamily};
use riccisym::restrict::{ansatz, restrict, ANSATZ_NAMES};
use serde_json::json;

use report::{Doc, Format, Row};
use spec::{GeneratorSpec, MetricSpec, Target};

/// Malformed input: exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn read_file(path: &str) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("{path}: {e}")))
}

/// Largest grid residual accepted by `verify-solution`.
pub const GRID_TOLERANCE: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "riccisym", version, about = "Symbolic Ricci flow and Lie symmetry toolkit")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    /// Seed of the probabilistic zero test.
    #[arg(long, default_value_t = 0x5eed_2024, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lower Christoffel symbols of a metric spec.
    Christoffel { spec: String },
    /// Ricci tensor of a metric spec.
    Ricci { spec: String },
    /// Residual of the flow equation with zero verdicts.
    FlowResidual { spec: String },
    /// Check generators against the flow of a metric spec.
    CheckSymmetry {
        spec: String,
        #[arg(long)]
        generator: String,
    },
    /// Restrict the general symmetry to a library ansatz.
    Restrict {
        #[arg(long)]
        ansatz: String,
    },
    /// Reduced ODE system of a family under its reduction generator.
    Reduce {
        #[arg(long)]
        family: String,
        /// Comma-separated `name=value` overrides for k, m, p, q.
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Symbolic and grid checks of a library solution.
    VerifySolution {
        #[arg(long)]
        name: String,
        /// Parameter values of a single grid, e.g. `k=1,m=2`; canonical
        /// parameter sets otherwise.
        #[arg(long)]
        grid: Option<String>,
        /// `start:end:count` of the arc-length axis.
        #[arg(long, default_value = "0.2:2:50")]
        s_range: String,
        /// `start:end:count` of the time axis.
        #[arg(long, default_value = "0:0.4:20")]
        t_range: String,
    },
    /// Commutator of two generator files.
    Bracket {
        first: String,
        second: String,
        /// Metric spec whose system fixes the space of both generators.
        #[arg(long)]
        spec: Option<String>,
    },
}

/// Rendered output and whether everything checked out.
pub struct Outcome {
    pub doc: Doc,
    pub verified: bool,
}

impl Outcome {
    fn ok(doc: Doc) -> Self {
        Outcome { doc, verified: true }
    }

    pub fn exit_code(&self) -> i32 {
        if self.verified {
            0
        } else {
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, InputError> {
    let tester = ZeroTester { seed: cli.seed, ..ZeroTester::default() };
    match &cli.command {
        Command::Christoffel { spec } => christoffel_cmd(&MetricSpec::load(spec)?),
        Command::Ricci { spec } => ricci_cmd(&MetricSpec::load(spec)?),
        Command::FlowResidual { spec } => flow_cmd(&MetricSpec::load(spec)?, &tester),
        Command::CheckSymmetry { spec, generator } => {
            check_cmd(&MetricSpec::load(spec)?, &GeneratorSpec::load(generator)?, &tester)
        }
        Command::Restrict { ansatz } => restrict_cmd(ansatz),
        Command::Reduce { family, params } => reduce_cmd(family, params),
        Command::VerifySolution { name, grid, s_range, t_range } => verify_cmd(name, grid.as_deref(), s_range, t_range),
        Command::Bracket { first, second, spec } => {
            let spec = spec.as_deref().map(MetricSpec::load).transpose()?;
            bracket_cmd(&GeneratorSpec::load(first)?, &GeneratorSpec::load(second)?, spec.as_ref())
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> InputError {
    InputError(e.to_string())
}

pub fn christoffel_cmd(spec: &MetricSpec) -> Result<Outcome, InputError> {
    let fam = spec.family()?;
    let g = christoffel_lower(&fam).map_err(input)?;
    let n = fam.dim();
    let mut rows = Vec::new();
    for t in 0..n {
        for a in 0..n {
            for b in a..n {
                let e = &g[t][a][b];
                if !e.is_zero() {
                    rows.push(Row::expr(format!("Gamma[{},{},{}]", t + 1, a + 1, b + 1), e.clone()));
                }
            }
        }
    }
    let mut doc = Doc::new("christoffel");
    doc.field("dimension", n);
    doc.field("convention", "Gamma[c,a,b] = (d_a g_bc + d_b g_ac - d_c g_ab)/2, zero entries omitted");
    doc.section("christoffel", rows);
    Ok(Outcome::ok(doc))
}

fn warped(spec: &MetricSpec) -> Result<Option<WarpedProduct>, InputError> {
    let Some(f) = spec.fiber_block()? else { return Ok(None) };
    Ok(Some(WarpedProduct { base: spec.family()?, fibers: vec![Fiber { dim: f.dim, einstein: f.einstein, warp: f.warp }] }))
}

fn matrix_rows(prefix: &str, m: &riccisym::geometry::SymMatrix) -> Vec<Row> {
    m.upper().map(|(i, j, e)| Row::expr(format!("{prefix}{},{}", i + 1, j + 1), e.clone())).collect()
}

pub fn ricci_cmd(spec: &MetricSpec) -> Result<Outcome, InputError> {
    let mut doc = Doc::new("ricci");
    match warped(spec)? {
        Some(w) => {
            let r = warped_ricci(&w).map_err(input)?;
            let mut rows = matrix_rows("R", &r.base.simplified());
            rows.extend(r.fibers.iter().map(|e| Row::expr("fiber (coefficient of h)", simplify(e))));
            doc.section("ricci", rows);
        }
        None => {
            let r = ricci(&spec.family()?).map_err(input)?;
            doc.section("ricci", matrix_rows("R", &r));
        }
    }
    Ok(Outcome::ok(doc))
}

pub fn flow_cmd(spec: &MetricSpec, tester: &ZeroTester) -> Result<Outcome, InputError> {
    let entries: Vec<(String, riccisym::Expr)> = match warped(spec)? {
        Some(w) => {
            let r = warped_flow_residual(&w).map_err(input)?;
            let mut v: Vec<_> = r.base.upper().map(|(i, j, e)| (format!("E{},{}", i + 1, j + 1), riccisym::expr::cancel(e))).collect();
            v.extend(r.fibers.iter().map(|e| (String::from("fiber"), riccisym::expr::cancel(e))));
            v
        }
        None => {
            let fam = spec.family()?;
            if fam.chart.time.is_none() {
                return Err(InputError(String::from("flow-residual needs a time variable in the chart")));
            }
            let r = flow_residual(&fam).map_err(input)?;
            r.upper().map(|(i, j, e)| (format!("E{},{}", i + 1, j + 1), e.clone())).collect()
        }
    };
    let rows: Vec<Row> = entries.into_iter().map(|(l, e)| {
        let v = tester.test(&e);
        Row::expr(l, e).with_verdict(v)
    }).collect();
    let solves = rows.iter().all(|r| r.verdict.as_ref().is_some_and(Verdict::is_zero));
    let mut doc = Doc::new("flow-residual");
    doc.field("equation", "E = d_t g + 2 Ric");
    doc.field("solves_flow", solves);
    doc.field("seed", tester.seed);
    doc.section("residual", rows);
    Ok(Outcome::ok(doc))
}

fn generator_rows(g: &Generator) -> Vec<Row> {
    g.simplified().components().into_iter().filter(|(_, c)| !c.is_zero()).map(|(l, c)| Row::expr(l, c)).collect()
}

pub fn check_cmd(spec: &MetricSpec, gen: &GeneratorSpec, tester: &ZeroTester) -> Result<Outcome, InputError> {
    let target = spec.system()?;
    let parts = gen.split(&target)?;
    let mut doc = Doc::new("check-symmetry");
    doc.field("system", target.system.name.clone());
    doc.field("seed", tester.seed);
    let mut verified = true;
    let mut summary = Vec::new();
    for (label, x) in &parts {
        let report = check_symmetry(x, &target.system, tester).map_err(input)?;
        let ok = report.is_symmetry();
        verified &= ok;
        let mut note = String::from(if ok { "symmetry" } else { "not a symmetry" });
        if let Some(w) = report.witness() {
            note = format!("not a symmetry, witness entry {}", w.label);
        }
        summary.push(Row::note(label.clone(), note));
        let mut rows = generator_rows(x);
        rows.extend(report.entries.iter().map(|e| Row::verdict(e.label.clone(), e.verdict.clone())));
        doc.section(&format!("generator {label}"), rows);
    }
    doc.field("verified", verified);
    doc.sections.insert(0, report::Section { name: String::from("verdicts"), rows: summary });
    Ok(Outcome { doc, verified })
}

pub fn restrict_cmd(name: &str) -> Result<Outcome, InputError> {
    let a = ansatz(name).map_err(|e| InputError(format!("{e}; known: {}", ANSATZ_NAMES.join(", "))))?;
    let r = restrict(&a).map_err(input)?;
    let mut doc = Doc::new("restrict");
    doc.field("ansatz", r.ansatz.clone());
    doc.field("constants", r.constants.iter().map(|c| c.as_str().to_string()).collect::<Vec<_>>());
    doc.field("inconsistent", r.inconsistent);
    doc.section("constraints", r.constraints.iter().enumerate().map(|(i, c)| Row::expr(format!("C{}", i + 1), c.clone())).collect());
    doc.section("characteristics", r.characteristics.iter().map(|(f, q)| Row::expr(format!("Q_{f}"), q.clone())).collect());
    doc.section("generator", generator_rows(&r.generator));
    let mut labels: Vec<String> = r.constants.iter().map(|c| c.as_str().to_string()).collect();
    labels.push(String::from("vector field"));
    let mut algebra = Vec::new();
    for (l, g) in labels.iter().zip(r.generator.split_constants(&r.constants)) {
        for row in generator_rows(&g) {
            algebra.push(Row { label: format!("{l}: {}", row.label), ..row });
        }
    }
    doc.section("restricted algebra", algebra);
    Ok(Outcome::ok(doc))
}

pub fn reduce_cmd(family: &str, params: &str) -> Result<Outcome, InputError> {
    let fam = ReducedFamily::from_name(family).map_err(input)?;
    let p = if params.trim().is_empty() { Params::default() } else { Params::parse(params).map_err(input)? };
    let sys = reduced_system(fam, &p).map_err(input)?;
    let x = reduction_generator(fam, &p.k).map_err(input)?;
    let mut doc = Doc::new("reduce");
    doc.field("family", fam.name());
    doc.field("variables", sys.variables.iter().map(|v| v.as_str().to_string()).collect::<Vec<_>>());
    doc.field("unknowns", sys.unknowns.clone());
    doc.section("generator", generator_rows(&x));
    doc.section("system", sys.residuals.iter().enumerate().map(|(i, e)| Row::expr(format!("eq{} (lhs - rhs)", i + 1), e.clone())).collect());
    if let Some(arc) = &sys.arc_length {
        doc.section("arc-length system", arc.residuals.iter().enumerate().map(|(i, e)| Row::expr(format!("eq{} (lhs - rhs)", i + 1), e.clone())).collect());
    }
    Ok(Outcome::ok(doc))
}

fn axis(src: &str) -> Result<((f64, f64), usize), InputError> {
    let bad = || InputError(format!("range {src:?} is not start:end:count"));
    let parts: Vec<&str> = src.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !(a.is_finite() && b.is_finite()) {
        return Err(bad());
    }
    Ok(((a, b), n))
}

fn grid_params(src: &str) -> Result<Vec<(String, f64)>, InputError> {
    src.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| InputError(format!("grid parameter {kv:?} is not name=value")))?;
            let v: f64 = v.trim().parse().map_err(|_| InputError(format!("grid parameter {kv:?} has no numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// Parameter sets of the canonical grids.
pub fn canonical_params(family: ReducedFamily) -> Vec<Vec<(String, f64)>> {
    let sets: &[&[(&str, f64)]] = match family {
        ReducedFamily::DoublyWarped => &[&[("k", 1.0), ("p", 2.0), ("q", 2.0)], &[("k", 1.0), ("p", 3.0), ("q", 2.0)]],
        _ => &[&[("k", 1.0), ("m", 2.0)], &[("k", 1.0), ("m", 3.0)]],
    };
    sets.iter().map(|s| s.iter().map(|(k, v)| (k.to_string(), *v)).collect()).collect()
}

pub fn verify_cmd(name: &str, grid: Option<&str>, s_range: &str, t_range: &str) -> Result<Outcome, InputError> {
    let sol = solution(name).map_err(input)?;
    let report = verify_closed_form(&sol).map_err(input)?;
    let symbolic = if report.all_symbolic() {
        "zero"
    } else if report.all_zero() {
        "zero_probabilistic"
    } else {
        "nonzero"
    };
    let (s, s_count) = axis(s_range)?;
    let (t, t_count) = axis(t_range)?;
    let sets = match grid {
        Some(g) => vec![grid_params(g)?],
        None => canonical_params(sol.family),
    };
    let mut max_abs = 0.0f64;
    let mut grid_rows = Vec::new();
    for params in sets {
        let g = Grid { s, s_count, t, t_count, params: params.clone(), exclusion: 1e-3 };
        let desc: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        // Grid points too close to a singularity are an input error.
        let r = grid_residual(&sol, &g).map_err(input)?;
        max_abs = max_abs.max(r.max_abs);
        grid_rows.push(Row::note(
            desc.join(","),
            format!("max_abs {:e} at s={}, t={} ({}), seed {}", r.max_abs, r.argmax.0, r.argmax.1, r.argmax.2, r.seed),
        ));
    }
    let numeric_ok = max_abs < GRID_TOLERANCE;
    let mut doc = Doc::new("verify-solution");
    doc.field("solution", sol.name.clone());
    doc.field("family", sol.family.name());
    doc.field("domain", sol.domain.clone());
    doc.field("symbolic", symbolic);
    doc.field("numeric_max_abs", json!(max_abs));
    doc.section("symbolic checks", report.checks.iter().map(|(l, v)| Row::verdict(l.clone(), v.clone())).collect());
    doc.section("grids", grid_rows);
    doc.section("profiles", sol.profiles.iter().map(|(n, e)| Row::expr(n.clone(), e.clone())).collect());
    let verified = report.all_zero() && numeric_ok;
    doc.field("verified", verified);
    Ok(Outcome { doc, verified })
}

pub fn bracket_cmd(a: &GeneratorSpec, b: &GeneratorSpec, spec: Option<&MetricSpec>) -> Result<Outcome, InputError> {
    let target = match (spec, a.ansatz.as_ref().or(b.ansatz.as_ref())) {
        (Some(s), _) => s.system()?,
        (None, Some(name)) => Target::from_ansatz(ansatz(name).map_err(input)?)?,
        (None, None) => Target::generic(a.xi.len()),
    };
    let x = a.build(&target)?;
    let y = b.build(&target)?;
    let z = commutator(&x, &y).map_err(input)?;
    let mut doc = Doc::new("bracket");
    doc.field("zero", z.components().iter().all(|(_, c)| c.is_zero()));
    doc.section("X", generator_rows(&x));
    doc.section("Y", generator_rows(&y));
    doc.section("[X,Y]", generator_rows(&z));
    Ok(Outcome::ok(doc))
}
