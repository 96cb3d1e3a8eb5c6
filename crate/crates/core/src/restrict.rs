//! Symmetries induced on metric ansätze.
//!
//! The characteristic `Q_ij` of the general symmetry `c1 ∂_t + c2 (t ∂_t + g ∂_g) + X_ξ`
//! of the flow is pushed through an ansatz `g_ij = A_ij(x, u)`. The system
//! `Q_ij|_A = Σ_k ∂A_ij/∂u_k · Q_{u_k}` is split into definitions of the
//! field characteristics `Q_{u_k}` (one pivot row per field) and constraints
//! on `ξ` and the constants, obtained by matching coefficients of the
//! remaining rows over field jets and abstract fiber-metric entries.
//!
//! Fiber factors of warped products are represented by two abstract
//! coordinates and an unknown symmetric fiber metric `h_lp(y)`; a Euclidean
//! fiber uses `δ_lp` instead.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{
    cancel, collect_generalized, diff_atom, eval, simplify, substitute_raw, Assignment, Bindings, Expr, Node,
    SubstError, Symbol, ZeroTester,
};
use crate::flow::{flow_residual_raw, FlowError};
use crate::geometry::{warped_flow_residual, Chart, Fiber, FieldDecl, Geometry, GeometryError, MetricFamily, SymMatrix, WarpedProduct};
use crate::jet::{Field, JetError, JetSpace, PdeSystem};
use crate::lie::{characteristic, check_symmetry, diffeomorphism, metric_jet_space, scaling, time_translation, Generator, LieError, SymmetryReport};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RestrictError {
    #[error("ansatz map has rank {found} at a generic point, expected {expected}")]
    Rank { expected: usize, found: usize },
    #[error("field {0} has no row in which it appears alone")]
    NoPivot(String),
    #[error("restricted generator is not closed on the base: {0}")]
    NotClosed(String),
    #[error("unknown ansatz {0}")]
    Unknown(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Subst(#[from] SubstError),
}

/// A fiber factor `warp² · h` over a block of coordinates.
#[derive(Clone, Debug)]
pub struct FiberBlock {
    pub coords: Vec<Symbol>,
    /// Name prefix of the unknown fiber metric entries, or `None` for the
    /// Euclidean metric.
    pub metric: Option<String>,
    pub dim: Expr,
    pub einstein: Expr,
    pub warp: Expr,
}

impl FiberBlock {
    fn entry(&self, l: usize, p: usize) -> Expr {
        match &self.metric {
            None if l == p => Expr::one(),
            None => Expr::zero(),
            Some(prefix) => {
                let (a, b) = if l <= p { (l, p) } else { (p, l) };
                Expr::fun(format!("{prefix}{}{}", a + 1, b + 1).as_str(), self.coords.iter().cloned().map(Expr::symbol).collect())
            }
        }
    }

    fn metric_names(&self) -> Vec<Symbol> {
        let Some(prefix) = &self.metric else { return Vec::new() };
        let m = self.coords.len();
        let mut v = Vec::new();
        for l in 0..m {
            for p in l..m {
                v.push(Symbol::new(&format!("{prefix}{}{}", l + 1, p + 1)));
            }
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct Ansatz {
    pub name: String,
    /// Full chart: base coordinates, then each fiber block, then time.
    pub chart: Chart,
    pub metric: SymMatrix,
    pub fields: Vec<Field>,
    /// Number of leading base coordinates.
    pub base: usize,
    pub fibers: Vec<FiberBlock>,
    /// Fields do not depend on time.
    pub stationary: bool,
    /// Entries of the reduced residual list kept as equations
    /// (base upper triangle, then one scalar per fiber).
    pub entries: Vec<usize>,
    /// For each field, the kept entry solved for its time derivative.
    pub pivots: Vec<usize>,
}

fn standard_symbols(range: core::ops::Range<usize>) -> Vec<Symbol> {
    range.map(|i| Symbol::new(&format!("x{}", i + 1))).collect()
}

fn t() -> Symbol {
    Symbol::new("t")
}

fn diag(n: usize, f: impl Fn(usize) -> Expr) -> SymMatrix {
    SymMatrix::from_fn(n, |i, j| if i == j { f(i) } else { Expr::zero() })
}

impl Ansatz {
    /// Space of `(t, x_base, u)` on which restricted generators act.
    pub fn space(&self) -> JetSpace {
        let time = (!self.stationary).then(t);
        JetSpace::new(self.chart.coords[..self.base].to_vec(), time, self.fields.clone())
    }

    pub fn base_coords(&self) -> &[Symbol] {
        &self.chart.coords[..self.base]
    }

    fn fiber_coords(&self) -> Vec<Symbol> {
        self.fibers.iter().flat_map(|f| f.coords.iter().cloned()).collect()
    }

    fn fiber_metric_names(&self) -> Vec<Symbol> {
        self.fibers.iter().flat_map(FiberBlock::metric_names).collect()
    }

    /// `∂A_ij/∂u_k` in upper-triangle row order.
    pub fn jacobian(&self) -> Vec<Vec<Expr>> {
        self.metric
            .upper()
            .map(|(_, _, a)| self.fields.iter().map(|f| simplify(&diff_atom(a, &f.expr()))).collect())
            .collect()
    }

    /// The map from fields to metric entries has full rank at a seeded
    /// random point.
    pub fn check_rank(&self) -> Result<(), RestrictError> {
        use rand::{Rng, SeedableRng};
        let jac = self.jacobian();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_2024);
        let mut atoms: Vec<Expr> = Vec::new();
        for e in jac.iter().flatten() {
            for a in e.atoms() {
                if !atoms.contains(&a) {
                    atoms.push(a);
                }
            }
        }
        let mut a = Assignment::new();
        for x in atoms {
            a.insert(x, rng.gen_range(0.2..1.7));
        }
        let m: Vec<Vec<f64>> = jac.iter().map(|row| row.iter().map(|e| eval(e, &a).unwrap_or(f64::NAN)).collect()).collect();
        let found = crate::lie::numeric_rank(&m);
        if found != self.fields.len() {
            return Err(RestrictError::Rank { expected: self.fields.len(), found });
        }
        Ok(())
    }

    fn base_family(&self) -> Result<MetricFamily, RestrictError> {
        let coords: Vec<&str> = self.base_coords().iter().map(Symbol::as_str).collect();
        let time = self.chart.time.as_ref().map(Symbol::as_str).filter(|_| !self.stationary);
        let chart = Chart::new(&coords, time);
        let block = SymMatrix::from_fn(self.base, |i, j| self.metric.get(i, j).clone());
        let decls = self.fields.iter().map(|f| FieldDecl::new(f.name.as_str(), &f.args)).collect();
        Ok(MetricFamily::new(chart, block, decls)?)
    }

    /// Every residual entry: base upper triangle, then one per fiber.
    fn labelled_residuals(&self) -> Result<(Vec<Expr>, Vec<String>), RestrictError> {
        let base = self.base_family()?;
        let (all, labels): (Vec<Expr>, Vec<String>) = if self.stationary {
            let ric = Geometry::new(&base)?.ricci_raw();
            ric.upper().map(|(i, j, e)| (e.clone(), format!("R{}{}", i + 1, j + 1))).unzip()
        } else if self.fibers.is_empty() {
            let e = flow_residual_raw(&base)?;
            e.upper().map(|(i, j, e)| (e.clone(), format!("E{}{}", i + 1, j + 1))).unzip()
        } else {
            let w = WarpedProduct {
                base,
                fibers: self
                    .fibers
                    .iter()
                    .map(|f| Fiber { dim: f.dim.clone(), einstein: f.einstein.clone(), warp: f.warp.clone() })
                    .collect(),
            };
            let r = warped_flow_residual(&w)?;
            let mut v: Vec<(Expr, String)> = r.base.upper().map(|(i, j, e)| (e.clone(), format!("E{}{}", i + 1, j + 1))).collect();
            for (a, e) in r.fibers.iter().enumerate() {
                v.push((e.clone(), format!("F{}", a + 1)));
            }
            v.into_iter().unzip()
        };
        Ok((all, labels))
    }

    fn residual_list(&self) -> Result<Vec<Expr>, RestrictError> {
        Ok(self.labelled_residuals()?.0)
    }

    /// The flow written as equations on the ansatz fields: the base block of
    /// `∂_t g + 2 Ric` and one scalar per fiber (Ricci tensor alone when
    /// stationary), restricted to [`Ansatz::entries`].
    pub fn reduced_system(&self) -> Result<PdeSystem, RestrictError> {
        let (all, labels) = self.labelled_residuals()?;
        let residuals: Vec<Expr> = self.entries.iter().map(|&i| all[i].clone()).collect();
        let labels: Vec<String> = self.entries.iter().map(|&i| labels[i].clone()).collect();
        let mut sys = if self.stationary {
            PdeSystem::stationary(&self.name, self.space(), residuals)
        } else {
            let pivots: Vec<usize> =
                self.pivots.iter().map(|p| self.entries.iter().position(|e| e == p).expect("pivot among entries")).collect();
            PdeSystem::with_pivots(&self.name, self.space(), residuals, &pivots)?
        };
        sys.labels = labels;
        Ok(sys)
    }

    /// Ansatz over a whole metric family, with optional fibers that carry
    /// no coordinates of their own. Identically vanishing and repeated
    /// residual entries are dropped; each field is solved from the first
    /// remaining entry that contains its time derivative and no other.
    pub fn from_family(name: &str, family: &MetricFamily, fibers: Vec<FiberBlock>) -> Result<Ansatz, RestrictError> {
        let n = family.dim();
        let stationary = family.chart.time.is_none();
        let fields: Vec<Field> = family.fields.iter().map(|f| Field { name: f.name.clone(), args: f.args.clone() }).collect();
        let slots = n * (n + 1) / 2 + fibers.len();
        let mut a = Ansatz {
            name: String::from(name),
            chart: family.chart.clone(),
            metric: family.metric.clone(),
            fields,
            base: n,
            fibers,
            stationary,
            entries: (0..slots).collect(),
            pivots: Vec::new(),
        };
        let all = a.residual_list()?;
        let mut kept: Vec<usize> = Vec::new();
        for (i, e) in all.iter().enumerate() {
            let s = simplify(e);
            if s.is_zero() || kept.iter().any(|&j| simplify(&(all[j].clone() - e.clone())).is_zero()) {
                continue;
            }
            kept.push(i);
        }
        a.entries = kept;
        if !stationary {
            let space = a.space();
            let t = space.time.clone().expect("time present");
            let ut: Vec<Expr> = space.fields.iter().map(|f| f.jet(&[(t.clone(), 1)])).collect();
            for (k, u) in ut.iter().enumerate() {
                let pick = a.entries.iter().copied().find(|i| {
                    !a.pivots.contains(i) && all[*i].contains(u) && ut.iter().enumerate().all(|(j, w)| j == k || !all[*i].contains(w))
                });
                a.pivots.push(pick.ok_or_else(|| RestrictError::NoPivot(String::from(space.fields[k].name.as_str())))?);
            }
        }
        Ok(a)
    }

    /// Generator on [`Ansatz::space`] from component strings; bare field
    /// names stand for the field values.
    pub fn generator(&self, xi_t: &str, xi: &[&str], eta: &[&str]) -> Result<Generator, RestrictError> {
        Ok(Generator::parse(self.space(), xi_t, xi, eta)?)
    }
}

/// `g = e^u (dx1² + dx2²)`.
pub fn conformal2d() -> Ansatz {
    let chart = Chart::standard(2);
    let u = Field::new("u", &chart.all_variables());
    let e = Expr::exp(u.expr());
    Ansatz {
        name: String::from("conformal2d"),
        metric: diag(2, |_| e.clone()),
        chart,
        fields: alloc::vec![u],
        base: 2,
        fibers: Vec::new(),
        stationary: false,
        entries: alloc::vec![0],
        pivots: alloc::vec![0],
    }
}

/// `g = ψ^{-2} δ` on `R^n`.
pub fn conformal_rn(n: usize) -> Ansatz {
    let chart = Chart::standard(n);
    let psi = Field::new("psi", &chart.all_variables());
    let e = Expr::powi(psi.expr(), -2);
    let entries = (0..n * (n + 1) / 2).collect();
    Ansatz {
        name: format!("conformal_rn{n}"),
        metric: diag(n, |_| e.clone()),
        chart,
        fields: alloc::vec![psi],
        base: n,
        fibers: Vec::new(),
        stationary: false,
        entries,
        pivots: alloc::vec![0],
    }
}

/// Time-independent metrics `g_ij(x)`, whose flow equation is `Ric = 0`.
pub fn einstein_static(n: usize) -> Ansatz {
    let chart = Chart::standard(n);
    let mut fields = Vec::new();
    for i in 0..n {
        for j in i..n {
            fields.push(Field::new(&crate::geometry::generic_name(i, j), &chart.coords));
        }
    }
    let mut it = fields.iter();
    let metric = SymMatrix::from_fn(n, |_, _| it.next().expect("upper order").expr());
    Ansatz {
        name: format!("einstein_static{n}"),
        metric,
        chart,
        entries: (0..fields.len()).collect(),
        pivots: Vec::new(),
        fields,
        base: n,
        fibers: Vec::new(),
        stationary: true,
    }
}

fn warped(name: &str, n: usize, metric_prefix: Option<&str>, einstein: Expr) -> Ansatz {
    let fiber_dim = 2;
    let chart = Chart::standard(n + fiber_dim);
    let mut base_args = standard_symbols(0..n);
    base_args.push(t());
    let psi = Field::new("psi", &base_args);
    let phi = Field::new("phi", &base_args);
    let fiber = FiberBlock {
        coords: standard_symbols(n..n + fiber_dim),
        metric: metric_prefix.map(String::from),
        dim: Expr::sym("m"),
        einstein,
        warp: phi.expr(),
    };
    let inv = Expr::powi(psi.expr(), -2);
    let w2 = Expr::powi(phi.expr(), 2);
    let metric = SymMatrix::from_fn(n + fiber_dim, |i, j| match (i < n, j < n) {
        (true, true) if i == j => inv.clone(),
        (false, false) => w2.clone() * fiber.entry(i - n, j - n),
        _ => Expr::zero(),
    });
    let nb = n * (n + 1) / 2;
    Ansatz {
        name: String::from(name),
        chart,
        metric,
        fields: alloc::vec![psi, phi],
        base: n,
        fibers: alloc::vec![fiber],
        stationary: false,
        entries: (0..=nb).collect(),
        pivots: alloc::vec![0, nb],
    }
}

/// `ψ^{-2} δ_B + φ² h` with `h` an Einstein metric, `Ric_h = (m−1) h`.
pub fn warped_einstein_fiber(n: usize) -> Ansatz {
    warped("warped_einstein_fiber", n, Some("h"), Expr::sym("m") - Expr::one())
}

/// `ψ^{-2} δ_B + φ² δ_F`.
pub fn warped_euclidean_fiber(n: usize) -> Ansatz {
    warped("warped_euclidean_fiber", n, None, Expr::zero())
}

/// `χ² dx² + φ² h_a + ψ² h_b` over a line, with unit-sphere-like fibers
/// `Ric = (p−1) h_a`, `Ric = (q−1) h_b`.
pub fn doubly_warped() -> Ansatz {
    let chart = Chart::standard(5);
    let args = alloc::vec![Symbol::new("x1"), t()];
    let chi = Field::new("chi", &args);
    let phi = Field::new("phi", &args);
    let psi = Field::new("psi", &args);
    let fa = FiberBlock {
        coords: standard_symbols(1..3),
        metric: Some(String::from("ha")),
        dim: Expr::sym("p"),
        einstein: Expr::sym("p") - Expr::one(),
        warp: phi.expr(),
    };
    let fb = FiberBlock {
        coords: standard_symbols(3..5),
        metric: Some(String::from("hb")),
        dim: Expr::sym("q"),
        einstein: Expr::sym("q") - Expr::one(),
        warp: psi.expr(),
    };
    let metric = SymMatrix::from_fn(5, |i, j| match (i, j) {
        (0, 0) => Expr::powi(chi.expr(), 2),
        (1..=2, 1..=2) => Expr::powi(phi.expr(), 2) * fa.entry(i - 1, j - 1),
        (3..=4, 3..=4) => Expr::powi(psi.expr(), 2) * fb.entry(i - 3, j - 3),
        _ => Expr::zero(),
    });
    Ansatz {
        name: String::from("doubly_warped"),
        chart,
        metric,
        fields: alloc::vec![chi, phi, psi],
        base: 1,
        fibers: alloc::vec![fa, fb],
        stationary: false,
        entries: alloc::vec![0, 1, 2],
        pivots: alloc::vec![0, 1, 2],
    }
}

/// Registry names.
pub const ANSATZ_NAMES: [&str; 6] =
    ["conformal2d", "conformal_rn", "einstein_static", "warped_einstein_fiber", "warped_euclidean_fiber", "doubly_warped"];

/// Ansatz by registry name, with default dimensions: `conformal_rn` and
/// `einstein_static` on three coordinates, warped products over a plane.
pub fn ansatz(name: &str) -> Result<Ansatz, RestrictError> {
    Ok(match name {
        "conformal2d" => conformal2d(),
        "conformal_rn" => conformal_rn(3),
        "einstein_static" => einstein_static(3),
        "warped_einstein_fiber" => warped_einstein_fiber(2),
        "warped_euclidean_fiber" => warped_euclidean_fiber(2),
        "doubly_warped" => doubly_warped(),
        _ => return Err(RestrictError::Unknown(String::from(name))),
    })
}

#[derive(Clone, Debug)]
pub struct RestrictionResult {
    pub ansatz: String,
    /// Each expression is required to vanish.
    pub constraints: Vec<Expr>,
    /// `(field name, Q_u)`.
    pub characteristics: Vec<(String, Expr)>,
    pub generator: Generator,
    /// `c1, c2` and any constants introduced for fiber derivatives.
    pub constants: Vec<Symbol>,
    /// Vector field components over the full chart after forced
    /// simplifications (vanishing components, dropped arguments).
    pub vector_field: Vec<Expr>,
    /// One-term conditions already imposed on the vector field: each node
    /// listed here vanishes.
    pub forced: Vec<Expr>,
    /// Derivative nodes of the vector field replaced by `−c`.
    pub renamed: Vec<(Expr, Symbol)>,
    /// `Q_ij` restricted to the ansatz, upper-triangle order.
    pub restricted: Vec<Expr>,
    /// A constraint reduced to a nonzero number.
    pub inconsistent: bool,
}

impl RestrictionResult {
    /// `Σ_k ∂A_ij/∂u_k · Q_{u_k} − Q_ij|_A` for every row; zero wherever the
    /// constraints hold.
    pub fn lift_defect(&self, a: &Ansatz) -> Vec<Expr> {
        a.jacobian()
            .iter()
            .zip(&self.restricted)
            .map(|(row, q)| {
                let lifted = Expr::sum(row.iter().zip(&self.characteristics).map(|(d, (_, qu))| d.clone() * qu.clone()));
                simplify(&(lifted - q.clone()))
            })
            .collect()
    }
}

struct Work<'a> {
    a: &'a Ansatz,
    generic: Vec<Expr>,
    gbind: Bindings,
    xi_names: Vec<Symbol>,
    /// `None` when the component is forced to vanish.
    xi_args: Vec<Option<Vec<Symbol>>>,
    renamed: Vec<(Expr, Symbol)>,
    forced: Vec<Expr>,
    next_constant: usize,
}

impl Work<'_> {
    fn xi_expr(&self, k: usize) -> Expr {
        match &self.xi_args[k] {
            None => Expr::zero(),
            Some(args) => Expr::fun(self.xi_names[k].clone(), args.iter().cloned().map(Expr::symbol).collect()),
        }
    }

    fn restricted(&self) -> Result<Vec<Expr>, RestrictError> {
        let mut b = self.gbind.clone();
        let full = &self.a.chart.coords;
        for k in 0..self.xi_names.len() {
            b.bind_function(self.xi_names[k].as_str(), full, self.xi_expr(k))?;
        }
        let mut ren = Bindings::new();
        for (node, c) in &self.renamed {
            ren.bind(node.clone(), -Expr::symbol(c.clone()))?;
        }
        self.generic
            .iter()
            .map(|q| {
                let s = simplify(&substitute_raw(q, &b)?);
                Ok(simplify(&substitute_raw(&s, &ren)?))
            })
            .collect()
    }

    fn is_xi(&self, e: &Expr) -> bool {
        e.as_fun().is_some_and(|f| self.xi_names.contains(&f.name))
    }
}

fn leading_coefficient(e: &Expr) -> Expr {
    let first = match e.node() {
        Node::Add(ts) => ts[0].clone(),
        _ => e.clone(),
    };
    match first.node() {
        Node::Num(_) => first.clone(),
        Node::Mul(fs) if fs[0].is_number() => fs[0].clone(),
        _ => Expr::one(),
    }
}

/// Scale to leading numeric coefficient one.
fn normalize(e: &Expr) -> Option<Expr> {
    let s = cancel(e);
    if s.is_zero() {
        return None;
    }
    let c = leading_coefficient(&s);
    Some(simplify(&(s * c.recip())))
}

/// Push the generic characteristic through the ansatz.
pub fn restrict(a: &Ansatz) -> Result<RestrictionResult, RestrictError> {
    a.check_rank()?;
    let n = a.chart.dim();
    let full = a.chart.coords.clone();
    let xi_names: Vec<Symbol> = (1..=n).map(|k| Symbol::new(&format!("xi{k}"))).collect();
    let xi0: Vec<Expr> = xi_names.iter().map(|s| Expr::fun(s.clone(), full.iter().cloned().map(Expr::symbol).collect())).collect();
    let c1 = Symbol::new("c1");
    let c2 = Symbol::new("c2");
    let gen = time_translation(n)
        .scale(&Expr::symbol(c1.clone()))
        .add(&scaling(n).scale(&Expr::symbol(c2.clone())))?
        .add(&diffeomorphism(n, &xi0)?)?;
    let generic = characteristic(&gen);
    let space = metric_jet_space(n);
    let mut gbind = Bindings::new();
    for (f, (_, _, entry)) in space.fields.iter().zip(a.metric.upper()) {
        gbind.bind_function(f.name.as_str(), &f.args, entry.clone())?;
    }

    let jac = a.jacobian();
    let mut pivots = Vec::new();
    for k in 0..a.fields.len() {
        let row = jac
            .iter()
            .position(|r| !r[k].is_zero() && r.iter().enumerate().all(|(l, d)| l == k || d.is_zero()))
            .ok_or_else(|| RestrictError::NoPivot(String::from(a.fields[k].name.as_str())))?;
        pivots.push(row);
    }

    let field_names: Vec<Symbol> = a.fields.iter().map(|f| f.name.clone()).collect();
    let fiber_names = a.fiber_metric_names();
    let fiber_coords = a.fiber_coords();
    let is_field = |e: &Expr| e.as_fun().is_some_and(|f| field_names.contains(&f.name));
    let is_fiber = |e: &Expr| e.as_fun().is_some_and(|f| fiber_names.contains(&f.name));
    let is_dep = |e: &Expr| is_field(e) || is_fiber(e);

    let mut w = Work {
        a,
        generic,
        gbind,
        xi_names: xi_names.clone(),
        xi_args: alloc::vec![Some(full.clone()); n],
        renamed: Vec::new(),
        forced: Vec::new(),
        next_constant: 3,
    };

    let mut rounds = 0;
    let (restricted, qs, constraints) = loop {
        rounds += 1;
        let restricted = w.restricted()?;
        let mut qs = Vec::new();
        for (k, &row) in pivots.iter().enumerate() {
            qs.push(cancel(&(restricted[row].clone() * jac[row][k].clone().recip())));
        }
        let mut raw = Vec::new();
        for (r, q) in restricted.iter().enumerate() {
            if pivots.contains(&r) {
                continue;
            }
            let lifted = Expr::sum(jac[r].iter().zip(&qs).map(|(d, qu)| d.clone() * qu.clone()));
            let defect = simplify(&(q.clone() - lifted));
            raw.extend(collect_generalized(&defect, &is_dep).into_values());
        }
        let mut kept = Vec::new();
        for q in &qs {
            let mut base_part = Vec::new();
            for (key, coeff) in collect_generalized(q, &is_fiber) {
                if key.is_constant() {
                    base_part.push(coeff);
                } else {
                    raw.extend(collect_generalized(&coeff, &is_field).into_values());
                }
            }
            kept.push(simplify(&Expr::sum(base_part)));
        }
        let mut constraints: Vec<Expr> = Vec::new();
        let mut seen = BTreeSet::new();
        for c in raw {
            if let Some(c) = normalize(&c) {
                if seen.insert(c.clone()) {
                    constraints.push(c);
                }
            }
        }

        let mut changed = false;
        for c in &constraints {
            let Some((node, rest)) = single_xi_factor(&w, c) else { continue };
            if !rest {
                continue;
            }
            let f = node.as_fun().expect("function node");
            let k = xi_names.iter().position(|s| *s == f.name).expect("xi name");
            match f.total_order() {
                0 => {
                    if w.xi_args[k].is_some() {
                        w.xi_args[k] = None;
                        w.forced.push(node.clone());
                        changed = true;
                    }
                }
                1 => {
                    let slot = f.orders.iter().position(|&o| o == 1).expect("order one");
                    if let Some(args) = &mut w.xi_args[k] {
                        if slot < args.len() && f.args.len() == args.len() {
                            args.remove(slot);
                            w.forced.push(node.clone());
                            changed = true;
                        }
                    }
                }
                _ => {}
            }
        }
        if changed && rounds < 32 {
            continue;
        }

        let mut fresh = Vec::new();
        for q in &kept {
            for f in q.functions() {
                let Some(node) = f.as_fun() else { continue };
                if !w.is_xi(&f) || node.args.is_empty() || w.renamed.iter().any(|(r, _)| *r == f) || fresh.contains(&f) {
                    continue;
                }
                if node.args.iter().all(|x| x.as_symbol().is_some_and(|s| fiber_coords.contains(s))) {
                    fresh.push(f);
                }
            }
        }
        if !fresh.is_empty() && rounds < 32 {
            for f in fresh {
                let c = Symbol::new(&format!("c{}", w.next_constant));
                w.next_constant += 1;
                w.renamed.push((f, c));
            }
            continue;
        }
        break (restricted, kept, constraints);
    };

    let space = a.space();
    let xi_t = if a.stationary { Expr::zero() } else { gen.xi_t.clone() };
    let xi_base: Vec<Expr> = (0..a.base).map(|k| w.xi_expr(k)).collect();
    let mut eta = Vec::new();
    for (f, q) in a.fields.iter().zip(&qs) {
        let mut terms = alloc::vec![q.clone()];
        if let Some(tt) = &space.time {
            terms.push(xi_t.clone() * f.jet(&[(tt.clone(), 1)]));
        }
        for (s, x) in space.coords.iter().zip(&xi_base) {
            terms.push(x.clone() * f.jet(&[(s.clone(), 1)]));
        }
        let e = simplify(&Expr::sum(terms));
        if fiber_coords.iter().any(|s| e.contains_symbol(s)) {
            return Err(RestrictError::NotClosed(format!("eta_{} = {e}", f.name)));
        }
        eta.push(e);
    }
    let generator = Generator::new(space, xi_t, xi_base, eta)?;
    let mut constants = alloc::vec![c1, c2];
    constants.extend(w.renamed.iter().map(|(_, c)| c.clone()));
    let inconsistent = constraints.iter().any(Expr::is_number);
    let mut constraints = constraints;
    for (node, c) in &w.renamed {
        constraints.push(simplify(&(node.clone() + Expr::symbol(c.clone()))));
    }
    Ok(RestrictionResult {
        ansatz: a.name.clone(),
        constraints,
        characteristics: a.fields.iter().map(|f| String::from(f.name.as_str())).zip(qs).collect(),
        generator,
        constants,
        vector_field: (0..n).map(|k| w.xi_expr(k)).collect(),
        forced: w.forced.clone(),
        renamed: w.renamed.clone(),
        restricted,
        inconsistent,
    })
}

/// For a one-term constraint `k · node · rest`, the vector-field node and
/// whether the remaining factors are free of vector-field nodes and
/// constants (hence generically nonzero).
fn single_xi_factor(w: &Work<'_>, c: &Expr) -> Option<(Expr, bool)> {
    if matches!(c.node(), Node::Add(_)) {
        return None;
    }
    let factors = match c.node() {
        Node::Mul(fs) => fs.clone(),
        _ => alloc::vec![c.clone()],
    };
    let mut node = None;
    let mut clean = true;
    for f in factors {
        if w.is_xi(&f) {
            if node.is_some() {
                return None;
            }
            node = Some(f);
        } else if f.any(&|e| w.is_xi(e)) || f.symbols().iter().any(|s| s.as_str().starts_with('c')) {
            clean = false;
        }
    }
    node.map(|n| (n, clean))
}

/// Check each claimed generator against the flow written on the ansatz
/// fields.
pub fn verify_restricted_algebra(claimed: &[Generator], a: &Ansatz, tester: &ZeroTester) -> Result<Vec<SymmetryReport>, RestrictError> {
    let sys = a.reduced_system()?;
    claimed.iter().map(|x| Ok(check_symmetry(x, &sys, tester)?)).collect()
}

/// One reading of a restricted algebra: named generators with their
/// symmetry reports.
#[derive(Clone, Debug)]
pub struct AuditCandidate {
    pub name: String,
    pub generators: Vec<(String, SymmetryReport)>,
}

impl AuditCandidate {
    pub fn verified(&self) -> bool {
        self.generators.iter().all(|(_, r)| r.is_symmetry())
    }
}

#[derive(Clone, Debug)]
pub struct Audit {
    pub ansatz: String,
    pub candidates: Vec<AuditCandidate>,
}

/// Compare the stated generators of the warped-product algebras with the
/// generators read off the final display of the derivation and with the
/// engine's own restriction, on a one-dimensional base.
///
/// Stated: `∂_t`, `t∂_t − ψ/2 ∂_ψ + φ/2 ∂_φ`, (`φ∂_φ` for a Euclidean fiber),
/// `ξ∂_x + ψξ' ∂_ψ`.
/// Final display: `(c1 + 2 c2 t)∂_t + ξ∂_x + (c2 + c3 φ)∂_φ + (ξ' ψ − c2 ψ)∂_ψ`
/// split by constants.
pub fn warped_audit(euclidean: bool, tester: &ZeroTester) -> Result<Audit, RestrictError> {
    let a = if euclidean { warped_euclidean_fiber(1) } else { warped_einstein_fiber(1) };
    let g = |xt: &str, x: &str, psi: &str, phi: &str| a.generator(xt, &[x], &[psi, phi]);
    let xi = "xi1(x1)";
    let xi_eta = "psi*D(xi1(x1),x1)";
    let mut stated = alloc::vec![
        (String::from("d_t"), g("1", "0", "0", "0")?),
        (String::from("t d_t - psi/2 d_psi + phi/2 d_phi"), g("t", "0", "-psi/2", "phi/2")?),
    ];
    let mut display = alloc::vec![
        (String::from("d_t"), g("1", "0", "0", "0")?),
        (String::from("2t d_t + d_phi - psi d_psi"), g("2*t", "0", "-psi", "1")?),
    ];
    if euclidean {
        stated.push((String::from("phi d_phi"), g("0", "0", "0", "phi")?));
        display.push((String::from("phi d_phi"), g("0", "0", "0", "phi")?));
    }
    stated.push((String::from("xi d_x + psi xi' d_psi"), g("0", xi, xi_eta, "0")?));
    display.push((String::from("xi d_x + psi xi' d_psi"), g("0", xi, xi_eta, "0")?));

    let r = restrict(&a)?;
    let mut derived = Vec::new();
    let parts = r.generator.split_constants(&r.constants);
    for (c, part) in r.constants.iter().zip(&parts) {
        derived.push((format!("coefficient of {c}"), part.simplified()));
    }
    derived.push((String::from("vector field part"), parts.last().expect("free part").simplified()));

    let sys = a.reduced_system()?;
    let mut candidates = Vec::new();
    for (name, gens) in [("stated generators", stated), ("final display", display), ("restriction", derived)] {
        let mut generators = Vec::new();
        for (label, x) in gens {
            generators.push((label, check_symmetry(&x, &sys, tester)?));
        }
        candidates.push(AuditCandidate { name: String::from(name), generators });
    }
    Ok(Audit { ansatz: a.name.clone(), candidates })
}

/// `∂_t`, `2t∂_t + χ∂_χ + φ∂_φ + ψ∂_ψ`, `ξ∂_x − χξ'∂_χ` on the doubly-warped
/// fields.
pub fn doubly_warped_generators() -> Result<Vec<Generator>, RestrictError> {
    let a = doubly_warped();
    Ok(alloc::vec![
        a.generator("1", &["0"], &["0", "0", "0"])?,
        a.generator("2*t", &["0"], &["chi", "phi", "psi"])?,
        a.generator("0", &["xi1(x1)"], &["-chi*D(xi1(x1),x1)", "0", "0"])?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Verdict};

    #[test]
    fn conformal_plane_restriction() {
        let r = restrict(&conformal2d()).unwrap();
        assert_eq!(r.constraints.len(), 2, "{:?}", r.constraints);
        let cr1 = parse("D(xi1(x1,x2),x1) - D(xi2(x1,x2),x2)").unwrap();
        let cr2 = parse("D(xi1(x1,x2),x2) + D(xi2(x1,x2),x1)").unwrap();
        for want in [cr1, cr2] {
            assert!(
                r.constraints.iter().any(|c| simplify(&(c.clone() - want.clone())).is_zero() || simplify(&(c.clone() + want.clone())).is_zero()),
                "{:?}",
                r.constraints
            );
        }
        let q = parse(
            "-(xi1(x1,x2)*D(u(x1,x2,t),x1) + xi2(x1,x2)*D(u(x1,x2,t),x2) + (c1 + c2*t)*D(u(x1,x2,t),t) - c2 + 2*D(xi1(x1,x2),x1))",
        )
        .unwrap();
        assert!(simplify(&(r.characteristics[0].1.clone() - q)).is_zero());
        let eta = parse("c2 - 2*D(xi1(x1,x2),x1)").unwrap();
        assert!(simplify(&(r.generator.eta[0].clone() - eta)).is_zero());
    }

    #[test]
    fn warped_fiber_components_vanish() {
        let r = restrict(&warped_einstein_fiber(2)).unwrap();
        assert!(r.vector_field[2].is_zero() && r.vector_field[3].is_zero(), "{:?}", r.vector_field);
        assert!(!r.inconsistent);
        assert_eq!(r.constants.len(), 2);
        let eu = restrict(&warped_euclidean_fiber(2)).unwrap();
        assert_eq!(eu.constants.len(), 3, "{:?}", eu.renamed);
    }

    #[test]
    fn stationary_restriction_drops_time() {
        let r = restrict(&einstein_static(2)).unwrap();
        assert!(r.constraints.is_empty(), "{:?}", r.constraints);
        assert!(r.generator.space.time.is_none());
        assert!(!r.generator.components().iter().any(|(_, c)| c.contains_symbol(&Symbol::new("c1"))));
    }

    #[test]
    fn audit_runs_on_both_fibers() {
        let tester = ZeroTester::default();
        for euclid in [false, true] {
            let audit = warped_audit(euclid, &tester).unwrap();
            assert_eq!(audit.candidates.len(), 3);
            assert!(audit.candidates[2].verified(), "{:?}", audit.candidates[2]);
        }
    }

    #[test]
    fn doubly_warped_algebra() {
        let reports = verify_restricted_algebra(&doubly_warped_generators().unwrap(), &doubly_warped(), &ZeroTester::default()).unwrap();
        for r in reports {
            assert!(r.entries.iter().all(|e| matches!(e.verdict, Verdict::ZeroSymbolic)), "{:?}", r);
        }
    }
}
