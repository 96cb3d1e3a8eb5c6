//! Similarity reductions of the warped-product flows and their closed-form
//! solutions.
//!
//! The reduction uses `X = (1 + 2kt)∂_t + …`, whose invariants are
//! `ψ = F/√(1+2kt)`, `φ = √(1+2kt) G` on a warped product and
//! `χ, φ, ψ = √(1+2kt)·(F, G, H)` on a doubly-warped product. The arc-length
//! forms introduce `s` with `ds/dx = 1/F` (warped) or `ds/dx = F`
//! (doubly-warped) by the chain rule alone.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{
    cancel, derive_with, diff, parse, simplify, substitute, substitute_raw, AtomRule, Assumptions, Bindings, Expr,
    Node, SubstError, Symbol, Verdict, ZeroTester,
};
use crate::geometry::{warped_flow_residual, Chart, Fiber, GeometryError, MetricFamily, SymMatrix, WarpedProduct};
use crate::lie::{characteristic, Generator};
use crate::restrict::{doubly_warped, warped_einstein_fiber, Ansatz, RestrictError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ReduceError {
    #[error("the reduction parameter k must be nonzero")]
    ZeroK,
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam { name: String, value: String, reason: String },
    #[error("unknown family {0}")]
    UnknownFamily(String),
    #[error("unknown solution {0}")]
    UnknownSolution(String),
    #[error("cannot read parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Restrict(#[from] RestrictError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Subst(#[from] SubstError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReducedFamily {
    /// `ψ^{-2}δ + φ² g_F` over `R^n`.
    WarpedGeneralN(usize),
    /// Line base, round sphere fiber.
    Warped1dSphereFiber,
    DoublyWarped,
}

impl ReducedFamily {
    pub fn name(&self) -> String {
        match self {
            ReducedFamily::WarpedGeneralN(n) => format!("warped_general_n{n}"),
            ReducedFamily::Warped1dSphereFiber => String::from("warped_1d_sphere_fiber"),
            ReducedFamily::DoublyWarped => String::from("doubly_warped"),
        }
    }

    /// `warped_general_n` (base dimension 2 by default, or `warped_general_n3`
    /// and so on), `warped_1d_sphere_fiber`, `doubly_warped`.
    pub fn from_name(name: &str) -> Result<Self, ReduceError> {
        match name {
            "warped_1d_sphere_fiber" => Ok(ReducedFamily::Warped1dSphereFiber),
            "doubly_warped" => Ok(ReducedFamily::DoublyWarped),
            "warped_general_n" => Ok(ReducedFamily::WarpedGeneralN(2)),
            _ => name
                .strip_prefix("warped_general_n")
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(ReducedFamily::WarpedGeneralN)
                .ok_or_else(|| ReduceError::UnknownFamily(String::from(name))),
        }
    }

    fn base_dim(&self) -> usize {
        match self {
            ReducedFamily::WarpedGeneralN(n) => *n,
            _ => 1,
        }
    }

    /// Ansatz whose fields the reduction acts on.
    pub fn ansatz(&self) -> Ansatz {
        match self {
            ReducedFamily::DoublyWarped => doubly_warped(),
            _ => warped_einstein_fiber(self.base_dim()),
        }
    }

    fn profiles(&self) -> &'static [&'static str] {
        match self {
            ReducedFamily::DoublyWarped => &["F", "G", "H"],
            _ => &["F", "G"],
        }
    }
}

/// Reduction parameter `k`, fiber dimensions `m`, `p`, `q`. Unset values are
/// symbols of the same name.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub k: Expr,
    pub m: Expr,
    pub p: Expr,
    pub q: Expr,
}

impl Default for Params {
    fn default() -> Self {
        Params { k: Expr::sym("k"), m: Expr::sym("m"), p: Expr::sym("p"), q: Expr::sym("q") }
    }
}

impl Params {
    /// Parse `k=-1,m=2`.
    pub fn parse(src: &str) -> Result<Self, ReduceError> {
        let mut p = Params::default();
        for item in src.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = item.split_once('=').ok_or_else(|| ReduceError::Params(format!("expected name=value, got {item}")))?;
            let v = parse(value.trim()).map_err(|e| ReduceError::Params(format!("{value}: {e}")))?;
            match name.trim() {
                "k" => p.k = v,
                "m" => p.m = v,
                "p" => p.p = v,
                "q" => p.q = v,
                other => return Err(ReduceError::Params(format!("unknown parameter {other}"))),
            }
        }
        Ok(p)
    }

    fn check(&self, family: ReducedFamily) -> Result<(), ReduceError> {
        let below = |e: &Expr, bound: i64| e.as_num().is_some_and(|r| *r < crate::expr::rat_int(bound));
        let bad = |name: &str, e: &Expr, reason: &str| ReduceError::InvalidParam {
            name: String::from(name),
            value: e.to_text(),
            reason: String::from(reason),
        };
        match family {
            ReducedFamily::DoublyWarped => {
                if below(&self.p, 2) {
                    return Err(bad("p", &self.p, "sphere fibers need p >= 2"));
                }
                if below(&self.q, 2) {
                    return Err(bad("q", &self.q, "sphere fibers need q >= 2"));
                }
            }
            _ => {
                if below(&self.m, 1) {
                    return Err(bad("m", &self.m, "fiber dimension must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Einstein constant of the unit sphere fiber, `m − 1`.
    pub fn mu(&self) -> Expr {
        simplify(&(self.m.clone() - Expr::one()))
    }
}

/// The similarity generator `X_1 + 2k X_2` (warped) or `X_1 + k X_2`
/// (doubly-warped), acting on the fields of [`ReducedFamily::ansatz`].
pub fn reduction_generator(family: ReducedFamily, k: &Expr) -> Result<Generator, ReduceError> {
    let a = family.ansatz();
    let sp = a.space();
    let t = Expr::sym("t");
    let xi_t = Expr::one() + Expr::int(2) * k.clone() * t;
    let eta: Vec<Expr> = match family {
        ReducedFamily::DoublyWarped => sp.fields.iter().map(|f| k.clone() * f.expr()).collect(),
        _ => alloc::vec![-(k.clone() * sp.fields[0].expr()), k.clone() * sp.fields[1].expr()],
    };
    let xi = alloc::vec![Expr::zero(); sp.coords.len()];
    Ok(Generator::new(sp, simplify(&xi_t), xi, eta.iter().map(simplify).collect()).map_err(RestrictError::from)?)
}

/// `Q_u = 0` for each field.
pub fn invariant_surface_conditions(x: &Generator) -> Vec<Expr> {
    characteristic(x)
}

fn growth(k: &Expr) -> Expr {
    Expr::one() + Expr::int(2) * k.clone() * Expr::sym("t")
}

/// Bindings of the ansatz fields to their similarity form.
pub fn similarity_substitution(family: ReducedFamily, k: &Expr) -> Result<Bindings, ReduceError> {
    if simplify(k).is_zero() {
        return Err(ReduceError::ZeroK);
    }
    let a = family.ansatz();
    let sp = a.space();
    let coords: Vec<Expr> = sp.coords.iter().cloned().map(Expr::symbol).collect();
    let half = Expr::rational(1, 2);
    let up = Expr::pow(growth(k), half.clone());
    let down = Expr::pow(growth(k), -half);
    let profile = |name: &str| Expr::fun(name, coords.clone());
    let mut b = Bindings::new();
    for (i, f) in sp.fields.iter().enumerate() {
        let body = match family {
            ReducedFamily::DoublyWarped => up.clone() * profile(family.profiles()[i]),
            _ if i == 0 => down.clone() * profile("F"),
            _ => up.clone() * profile("G"),
        };
        b.bind_function(f.name.as_str(), &f.args, body)?;
    }
    Ok(b)
}

/// Equations without time for the similarity profiles.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub family: ReducedFamily,
    pub variables: Vec<Symbol>,
    /// Names of the unknown profile functions.
    pub unknowns: Vec<String>,
    /// Each residual is `lhs − rhs` of one displayed equation.
    pub residuals: Vec<Expr>,
    pub params: Params,
    /// Same system in the arc-length variable `s`.
    pub arc_length: Option<alloc::boxed::Box<ReducedSystem>>,
}

fn lin(terms: Vec<Expr>) -> Expr {
    Expr::sum(terms)
}

fn warped_general_display(n: usize, p: &Params) -> (Vec<Symbol>, Vec<Expr>) {
    let xs: Vec<Symbol> = if n == 1 { alloc::vec![Symbol::new("x")] } else { (1..=n).map(|i| Symbol::new(&format!("x{i}"))).collect() };
    let args: Vec<Expr> = xs.iter().cloned().map(Expr::symbol).collect();
    let f = Expr::fun("F", args.clone());
    let g = Expr::fun("G", args);
    let fi: Vec<Expr> = xs.iter().map(|x| diff(&f, x)).collect();
    let gi: Vec<Expr> = xs.iter().map(|x| diff(&g, x)).collect();
    let lap = |h: &Expr| lin(xs.iter().map(|x| diff(&diff(h, x), x)).collect());
    let dot = |a: &[Expr], b: &[Expr]| lin(a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()).collect());
    let nn = Expr::int(n as i64);
    let (k, m) = (p.k.clone(), p.m.clone());
    let fr = Expr::powi(f.clone(), -1);
    let gr = Expr::powi(g.clone(), -1);
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let d = if i == j { Expr::one() } else { Expr::zero() };
            let fij = diff(&fi[i], &xs[j]);
            let gij = diff(&gi[i], &xs[j]);
            let rhs = lin(alloc::vec![
                (nn.clone() - Expr::int(2)) * fij * fr.clone(),
                (lap(&f) * fr.clone() - (nn.clone() - Expr::one()) * dot(&fi, &fi) * Expr::powi(f.clone(), -2)) * d.clone(),
                -(m.clone()
                    * gr.clone()
                    * lin(alloc::vec![
                        gij,
                        (fi[i].clone() * gi[j].clone() + fi[j].clone() * gi[i].clone()) * fr.clone(),
                        -(dot(&fi, &gi) * fr.clone() * d.clone()),
                    ])),
            ]);
            out.push(-(k.clone() * Expr::powi(f.clone(), -2) * d) - rhs);
        }
    }
    let rhs = lin(alloc::vec![
        p.mu(),
        -(g.clone() * Expr::powi(f.clone(), 2) * (lap(&g) - (nn - Expr::int(2)) * dot(&gi, &fi) * fr)),
        -((m - Expr::one()) * Expr::powi(f, 2) * dot(&gi, &gi)),
    ]);
    out.push(-(k * Expr::powi(g, 2)) - rhs);
    (xs, out)
}

fn read(src: &str, p: &Params) -> Expr {
    let e = parse(src).expect("built-in display parses");
    let mut b = Bindings::new();
    for (name, v) in [("k", &p.k), ("m", &p.m), ("p", &p.p), ("q", &p.q)] {
        b.bind_symbol(name, v.clone()).expect("distinct names");
    }
    b.bind_symbol("mu", p.mu()).expect("distinct names");
    substitute_raw(&e, &b).expect("symbol bindings")
}

/// The reduced equations as displayed, with `μ = m − 1`.
pub fn reduced_system(family: ReducedFamily, params: &Params) -> Result<ReducedSystem, ReduceError> {
    params.check(family)?;
    let x = alloc::vec![Symbol::new("x")];
    let s = alloc::vec![Symbol::new("s")];
    let sys = match family {
        ReducedFamily::WarpedGeneralN(n) => {
            let (variables, residuals) = warped_general_display(n, params);
            ReducedSystem { family, variables, unknowns: names(&["F", "G"]), residuals, params: params.clone(), arc_length: None }
        }
        ReducedFamily::Warped1dSphereFiber => {
            let residuals = alloc::vec![
                read("k/F(x)^2 - m/G(x)*(D(G(x),x,2) + D(F(x),x)*D(G(x),x)/F(x))", params),
                read("k*G(x)^2 - (-mu + k/m*G(x)^2 + (m-1)*F(x)^2*D(G(x),x)^2)", params),
            ];
            let arc = alloc::vec![
                read("k - m*D(G(s),s,2)/G(s)", params),
                read("k*G(s)^2 - (-mu + k/m*G(s)^2 + (m-1)*D(G(s),s)^2)", params),
            ];
            ReducedSystem {
                family,
                variables: x,
                unknowns: names(&["F", "G"]),
                residuals,
                params: params.clone(),
                arc_length: Some(alloc::boxed::Box::new(ReducedSystem {
                    family,
                    variables: s,
                    unknowns: names(&["G"]),
                    residuals: arc,
                    params: params.clone(),
                    arc_length: None,
                })),
            }
        }
        ReducedFamily::DoublyWarped => {
            let residuals = alloc::vec![
                read(
                    "k*F(x)^2 - (p/G(x)*(D(G(x),x,2) - D(G(x),x)*D(F(x),x)/F(x)) + q/H(x)*(D(H(x),x,2) - D(H(x),x)*D(F(x),x)/F(x)))",
                    params
                ),
                read(
                    "k*G(x)^2 - (-(p-1) + (G(x)/F(x))^2*(D(G(x),x,2)/G(x) - D(G(x),x)*D(F(x),x)/(F(x)*G(x)) + (p-1)*(D(G(x),x)/G(x))^2 + q*D(G(x),x)*D(H(x),x)/(G(x)*H(x))))",
                    params
                ),
                read(
                    "k*H(x)^2 - (-(q-1) + (H(x)/F(x))^2*(D(H(x),x,2)/H(x) - D(H(x),x)*D(F(x),x)/(F(x)*H(x)) + (q-1)*(D(H(x),x)/H(x))^2 + p*D(G(x),x)*D(H(x),x)/(G(x)*H(x))))",
                    params
                ),
            ];
            let arc = alloc::vec![
                read("k - (p*D(G(s),s,2)/G(s) + q*D(H(s),s,2)/H(s))", params),
                read("k - (D(G(s),s,2)/G(s) + (p-1)*(D(G(s),s)^2 - 1)/G(s)^2 + q*D(G(s),s)*D(H(s),s)/(G(s)*H(s)))", params),
                read("k - (D(H(s),s,2)/H(s) + (q-1)*(D(H(s),s)^2 - 1)/H(s)^2 + p*D(G(s),s)*D(H(s),s)/(G(s)*H(s)))", params),
            ];
            ReducedSystem {
                family,
                variables: x,
                unknowns: names(&["F", "G", "H"]),
                residuals,
                params: params.clone(),
                arc_length: Some(alloc::boxed::Box::new(ReducedSystem {
                    family,
                    variables: s,
                    unknowns: names(&["G", "H"]),
                    residuals: arc,
                    params: params.clone(),
                    arc_length: None,
                })),
            }
        }
    };
    Ok(sys)
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| String::from(*s)).collect()
}

/// Substitute the similarity form into the flow equations of the ansatz and
/// remove the common time factor from each equation. Residuals follow the
/// ansatz order (base entries, then fibers) in the variable `x` (or
/// `x1..xn`).
pub fn derive_reduced(family: ReducedFamily, params: &Params) -> Result<Vec<Expr>, ReduceError> {
    params.check(family)?;
    let mut a = family.ansatz();
    let fix = |e: &Expr| {
        let mut b = Bindings::new();
        for (name, v) in [("m", &params.m), ("p", &params.p), ("q", &params.q)] {
            b.bind_symbol(name, v.clone()).expect("distinct names");
        }
        substitute_raw(e, &b).expect("symbol bindings")
    };
    for f in &mut a.fibers {
        f.dim = fix(&f.dim);
        f.einstein = fix(&f.einstein);
    }
    let sys = a.reduced_system()?;
    let b = similarity_substitution(family, &params.k)?;
    let mut rename = Bindings::new();
    if family.base_dim() == 1 {
        rename.bind_symbol("x1", Expr::sym("x"))?;
    }
    let g = growth(&params.k);
    let t = Symbol::new("t");
    let mut out = Vec::new();
    for r in &sys.residuals {
        let e = cancel(&substitute(&substitute_raw(r, &b)?, &rename)?);
        let mut cleared = e.clone();
        for j in [1i64, -1, 2, -2] {
            if !cleared.contains_symbol(&t) {
                break;
            }
            cleared = cancel(&(e.clone() * Expr::powi(g.clone(), j)));
        }
        out.push(cleared);
    }
    Ok(out)
}

/// Rewrite an expression in `x` whose profiles `others` are to become
/// functions of `s(x)`, with `ds/dx = rate` (an expression in `x`).
pub fn to_arc_length(e: &Expr, x: &Symbol, s: &Symbol, others: &[&str], rate: &Expr) -> Result<Expr, ReduceError> {
    let is_other = |f: &crate::expr::FunNode| others.iter().any(|n| f.name.as_str() == *n);
    // d/dx acting on expressions in s-profiles and x.
    let dx = |e: &Expr| -> Expr {
        derive_with(e, &mut |a: &Expr| match a.node() {
            Node::Sym(v) if v == x => AtomRule::Value(Expr::one()),
            Node::Sym(_) => AtomRule::Zero,
            Node::Fun(f) if is_other(f) => {
                let mut orders = f.orders.clone();
                orders[0] += 1;
                AtomRule::Value(Expr::fun_with_orders(f.name.clone(), f.args.clone(), orders) * rate.clone())
            }
            _ => AtomRule::Chain,
        })
    };
    let mut b = Bindings::new();
    for f in e.functions() {
        let Some(node) = f.as_fun() else { continue };
        if !is_other(node) || node.args.len() != 1 {
            continue;
        }
        let mut v = Expr::fun(node.name.clone(), alloc::vec![Expr::symbol(s.clone())]);
        for _ in 0..node.orders[0] {
            v = dx(&v);
        }
        b.bind(f.clone(), v)?;
    }
    Ok(simplify(&substitute_raw(e, &b)?))
}

/// `(F G_x)² = (k/m) G² + 1`, solved from the second sphere-fiber
/// equation; returns the right-hand side.
pub fn warped_first_integral(params: &Params) -> Expr {
    let (k, m) = (params.k.clone(), params.m.clone());
    let g2 = Expr::powi(Expr::fun("G", alloc::vec![Expr::sym("x")]), 2);
    // (m−1)(F G_x)² = k G² + μ − (k/m) G²
    let rhs = k.clone() * g2.clone() + params.mu() - k * Expr::powi(m.clone(), -1) * g2;
    cancel(&(rhs * Expr::powi(m - Expr::one(), -1)))
}

/// A closed-form solution of the flow in arc-length form.
#[derive(Clone, Debug)]
pub struct ClosedFormSolution {
    pub name: String,
    pub family: ReducedFamily,
    /// Coefficient of `ds²`: `1 ± 2k²t`.
    pub time_factor: Expr,
    /// Reduction parameter of the similarity generator, `±k²`.
    pub reduction_k: Expr,
    /// Profiles of `s`: `G` (and `H`).
    pub profiles: Vec<(String, Expr)>,
    /// Fiber dimensions and Einstein constants of the unit spheres.
    pub fibers: Vec<(Expr, Expr)>,
    pub domain: String,
}

fn sol_read(s: &str) -> Expr {
    parse(s).expect("library expression parses")
}

/// The five solution families, with `k` the parameter of the final metrics.
pub fn closed_form_library() -> Vec<ClosedFormSolution> {
    let m = (sol_read("m"), sol_read("m - 1"));
    let pq = [(sol_read("p"), sol_read("p - 1")), (sol_read("q"), sol_read("q - 1"))];
    let sinh_w = "sqrt(m/k^2)*sinh(sqrt(k^2/m)*s)";
    let sin_w = "sqrt(m/k^2)*sin(sqrt(k^2/m)*s)";
    let arg = "sqrt(k^2/(p+q))*s";
    let amp_g = "sqrt((p-1)*(p+q)/(k^2*(p+q-1)))";
    let amp_h = "sqrt((q-1)*(p+q)/(k^2*(p+q-1)))";
    alloc::vec![
        ClosedFormSolution {
            name: String::from("warped_hyperbolic"),
            family: ReducedFamily::Warped1dSphereFiber,
            time_factor: sol_read("1 + 2*k^2*t"),
            reduction_k: sol_read("k^2"),
            profiles: alloc::vec![(String::from("G"), sol_read(sinh_w))],
            fibers: alloc::vec![m.clone()],
            domain: String::from("k > 0, m >= 2, t > -1/(2k^2)"),
        },
        ClosedFormSolution {
            name: String::from("warped_spherical"),
            family: ReducedFamily::Warped1dSphereFiber,
            time_factor: sol_read("1 - 2*k^2*t"),
            reduction_k: sol_read("-k^2"),
            profiles: alloc::vec![(String::from("G"), sol_read(sin_w))],
            fibers: alloc::vec![m],
            domain: String::from("k > 0, m >= 2, t < 1/(2k^2)"),
        },
        ClosedFormSolution {
            name: String::from("dw_sincos"),
            family: ReducedFamily::DoublyWarped,
            time_factor: sol_read("1 - 2*k^2*t"),
            reduction_k: sol_read("-k^2"),
            profiles: alloc::vec![
                (String::from("G"), sol_read(&format!("sqrt((p+q)/k^2)*sin({arg})"))),
                (String::from("H"), sol_read(&format!("sqrt((p+q)/k^2)*cos({arg})"))),
            ],
            fibers: pq.to_vec(),
            domain: String::from("k > 0, p >= 2, q >= 2, t < 1/(2k^2)"),
        },
        ClosedFormSolution {
            name: String::from("dw_sinsin"),
            family: ReducedFamily::DoublyWarped,
            time_factor: sol_read("1 - 2*k^2*t"),
            reduction_k: sol_read("-k^2"),
            profiles: alloc::vec![
                (String::from("G"), sol_read(&format!("{amp_g}*sin({arg})"))),
                (String::from("H"), sol_read(&format!("{amp_h}*sin({arg})"))),
            ],
            fibers: pq.to_vec(),
            domain: String::from("k > 0, p >= 2, q >= 2, t < 1/(2k^2)"),
        },
        ClosedFormSolution {
            name: String::from("dw_sinhsinh"),
            family: ReducedFamily::DoublyWarped,
            time_factor: sol_read("1 + 2*k^2*t"),
            reduction_k: sol_read("k^2"),
            profiles: alloc::vec![
                (String::from("G"), sol_read(&format!("{amp_g}*sinh({arg})"))),
                (String::from("H"), sol_read(&format!("{amp_h}*sinh({arg})"))),
            ],
            fibers: pq.to_vec(),
            domain: String::from("k > 0, p >= 2, q >= 2, t > -1/(2k^2)"),
        },
    ]
}

pub fn solution(name: &str) -> Result<ClosedFormSolution, ReduceError> {
    closed_form_library().into_iter().find(|s| s.name == name).ok_or_else(|| ReduceError::UnknownSolution(String::from(name)))
}

impl ClosedFormSolution {
    /// `time_factor · (ds² + Σ G_a² h_a)` as a warped product over the `s`
    /// line, fibers being unit spheres.
    pub fn warped_product(&self) -> Result<WarpedProduct, ReduceError> {
        let base = MetricFamily::new(Chart::new(&["s"], Some("t")), SymMatrix::from_fn(1, |_, _| self.time_factor.clone()), Vec::new())?;
        let root = Expr::pow(self.time_factor.clone(), Expr::rational(1, 2));
        let fibers = self
            .fibers
            .iter()
            .zip(&self.profiles)
            .map(|((dim, einstein), (_, g))| Fiber { dim: dim.clone(), einstein: einstein.clone(), warp: root.clone() * g.clone() })
            .collect();
        Ok(WarpedProduct { base, fibers })
    }

    /// `∂_t g + 2 Ric`: base entry and one scalar per fiber.
    pub fn flow_residual(&self) -> Result<Vec<Expr>, ReduceError> {
        Ok(warped_flow_residual(&self.warped_product()?)?.entries())
    }

    /// Positivity of `k` and the fiber dimensions.
    pub fn assumptions(&self) -> Assumptions {
        Assumptions::with_positive(["k", "m", "p", "q"].iter().map(|s| Expr::sym(s)))
    }

    fn profile_bindings(&self) -> Bindings {
        let mut b = Bindings::new();
        let s = Symbol::new("s");
        for (name, e) in &self.profiles {
            b.bind_function(name, &[s.clone()], e.clone()).expect("distinct profiles");
        }
        b
    }

    /// Arc-length residuals of the reduced system with the profiles inserted.
    pub fn reduced_residuals(&self) -> Result<Vec<Expr>, ReduceError> {
        let params = Params { k: self.reduction_k.clone(), ..Params::default() };
        let sys = reduced_system(self.family, &params)?;
        let arc = sys.arc_length.expect("library families have an arc-length form");
        let b = self.profile_bindings();
        arc.residuals.iter().map(|r| Ok(substitute_raw(r, &b)?)).collect()
    }

    /// Invariant surface conditions of the reduction generator evaluated on
    /// the solution in the gauge `x = s`.
    pub fn invariant_residuals(&self) -> Result<Vec<Expr>, ReduceError> {
        let x = reduction_generator(self.family, &self.reduction_k)?;
        let conds = invariant_surface_conditions(&x);
        let sp = &x.space;
        let root = Expr::pow(self.time_factor.clone(), Expr::rational(1, 2));
        let mut b = Bindings::new();
        let mut rename = Bindings::new();
        rename.bind_symbol("s", Expr::sym("x1"))?;
        let profile = |i: usize| substitute_raw(&self.profiles[i].1, &rename);
        for (i, f) in sp.fields.iter().enumerate() {
            let body = match self.family {
                ReducedFamily::DoublyWarped if i == 0 => root.clone(),
                ReducedFamily::DoublyWarped => root.clone() * profile(i - 1)?,
                _ if i == 0 => Expr::powi(root.clone(), -1),
                _ => root.clone() * profile(0)?,
            };
            b.bind_function(f.name.as_str(), &f.args, body)?;
        }
        conds.iter().map(|c| Ok(substitute_raw(c, &b)?)).collect()
    }
}

/// Outcome of [`verify_closed_form`].
#[derive(Clone, Debug)]
pub struct ClosedFormReport {
    pub solution: String,
    pub checks: Vec<(String, Verdict)>,
}

impl ClosedFormReport {
    pub fn all_symbolic(&self) -> bool {
        self.checks.iter().all(|(_, v)| v.is_symbolic())
    }

    pub fn all_zero(&self) -> bool {
        self.checks.iter().all(|(_, v)| v.is_zero())
    }
}

/// Reduced equations, invariant surface conditions, and the full flow
/// residual of the warped product, each zero-tested under positivity of
/// `k` and the fiber dimensions.
pub fn verify_closed_form(sol: &ClosedFormSolution) -> Result<ClosedFormReport, ReduceError> {
    let tester = ZeroTester { assumptions: sol.assumptions(), ..ZeroTester::default() };
    let mut checks = Vec::new();
    for (i, r) in sol.reduced_residuals()?.iter().enumerate() {
        checks.push((format!("reduced equation {}", i + 1), tester.test(r)));
    }
    for (i, r) in sol.invariant_residuals()?.iter().enumerate() {
        checks.push((format!("invariant surface condition {}", i + 1), tester.test(r)));
    }
    for (i, r) in sol.flow_residual()?.iter().enumerate() {
        let label = if i == 0 { String::from("flow residual ds^2") } else { format!("flow residual fiber {i}") };
        checks.push((label, tester.test(r)));
    }
    Ok(ClosedFormReport { solution: sol.name.clone(), checks })
}
