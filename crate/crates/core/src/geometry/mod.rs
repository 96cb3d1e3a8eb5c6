//! Metric families, Christoffel symbols and Ricci curvature.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::expr::{cancel, diff, equals_zero, simplify, Assumptions, Expr, Simplifier, Symbol, Verdict};

mod warped;

pub use warped::{warped_flow_residual, warped_ricci, Fiber, WarpedProduct, WarpedRicci};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("metric is singular: determinant {0} vanishes")]
    Singular(String),
    #[error("metric entry ({0},{1}) is not symmetric")]
    NotSymmetric(usize, usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Coordinates of a chart, with an optional time parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub coords: Vec<Symbol>,
    pub time: Option<Symbol>,
}

impl Chart {
    pub fn new(coords: &[&str], time: Option<&str>) -> Self {
        Chart { coords: coords.iter().map(|c| Symbol::new(c)).collect(), time: time.map(Symbol::new) }
    }

    /// `x1..xn` with time `t`.
    pub fn standard(n: usize) -> Self {
        Chart { coords: (1..=n).map(|i| Symbol::new(&format!("x{i}"))).collect(), time: Some(Symbol::new("t")) }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinates followed by time when present.
    pub fn all_variables(&self) -> Vec<Symbol> {
        let mut v = self.coords.clone();
        if let Some(t) = &self.time {
            v.push(t.clone());
        }
        v
    }
}

/// Symmetric n×n matrix of expressions, stored as its upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<Expr>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![Expr::zero(); n * (n + 1) / 2] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                data.push(f(i, j));
            }
        }
        SymMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        let k = self.idx(i, j);
        self.data[k] = e;
    }

    /// Upper-triangle entries `(i, j, value)` with `i <= j`.
    pub fn upper(&self) -> impl Iterator<Item = (usize, usize, &Expr)> {
        let n = self.n;
        (0..n).flat_map(move |i| (i..n).map(move |j| (i, j))).map(move |(i, j)| (i, j, self.get(i, j)))
    }

    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> SymMatrix {
        SymMatrix { n: self.n, data: self.data.iter().map(|e| f(e)).collect() }
    }

    pub fn simplified(&self) -> SymMatrix {
        let mut s = Simplifier::new(Assumptions::new());
        self.map(|e| s.run(e).expect("unbounded"))
    }

    pub fn is_diagonal(&self) -> bool {
        self.upper().all(|(i, j, e)| i == j || e.is_zero())
    }
}

/// Declaration of an unknown function appearing in a metric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: Symbol,
    pub args: Vec<Symbol>,
}

impl FieldDecl {
    pub fn new(name: &str, args: &[Symbol]) -> Self {
        FieldDecl { name: Symbol::new(name), args: args.to_vec() }
    }

    pub fn expr(&self) -> Expr {
        Expr::fun(self.name.clone(), self.args.iter().cloned().map(Expr::symbol).collect())
    }
}

/// A family of metrics on a chart whose entries are expressions in the
/// coordinates, time, and declared unknown functions.
#[derive(Clone, Debug)]
pub struct MetricFamily {
    pub chart: Chart,
    pub metric: SymMatrix,
    pub fields: Vec<FieldDecl>,
}

impl MetricFamily {
    pub fn new(chart: Chart, metric: SymMatrix, fields: Vec<FieldDecl>) -> Result<Self, GeometryError> {
        if metric.dim() != chart.dim() {
            return Err(GeometryError::Dimension(format!(
                "{} coordinates but a {}x{} metric",
                chart.dim(),
                metric.dim(),
                metric.dim()
            )));
        }
        Ok(MetricFamily { chart, metric, fields })
    }

    /// Build from a full matrix, checking symmetry.
    pub fn from_rows(chart: Chart, rows: Vec<Vec<Expr>>, fields: Vec<FieldDecl>) -> Result<Self, GeometryError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(GeometryError::Dimension(String::from("metric rows must form a square matrix")));
        }
        for i in 0..n {
            for j in i + 1..n {
                if !simplify(&(rows[i][j].clone() - rows[j][i].clone())).is_zero() {
                    return Err(GeometryError::NotSymmetric(i, j));
                }
            }
        }
        let metric = SymMatrix::from_fn(n, |i, j| rows[i][j].clone());
        Self::new(chart, metric, fields)
    }

    /// The general metric `g_ij(x, t)` with one unknown function per entry,
    /// named `g11, g12, ...` (1-based, `i <= j`).
    pub fn generic(chart: Chart) -> Self {
        let n = chart.dim();
        let args = chart.all_variables();
        let mut fields = Vec::new();
        let metric = SymMatrix::from_fn(n, |i, j| {
            let f = FieldDecl::new(&generic_name(i, j), &args);
            let e = f.expr();
            fields.push(f);
            e
        });
        MetricFamily { chart, metric, fields }
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        self.metric.get(i, j)
    }
}

/// Name of the generic metric component `g_{ij}` (0-based indices).
pub fn generic_name(i: usize, j: usize) -> String {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    format!("g{}{}", i + 1, j + 1)
}

/// Determinant by cofactor expansion (entries are not simplified).
pub fn determinant(rows: &[Vec<Expr>]) -> Expr {
    let n = rows.len();
    match n {
        0 => Expr::one(),
        1 => rows[0][0].clone(),
        2 => rows[0][0].clone() * &rows[1][1] - rows[0][1].clone() * &rows[1][0],
        _ => {
            let mut terms = Vec::new();
            for c in 0..n {
                if rows[0][c].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> =
                    rows[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != c).map(|(_, e)| e.clone()).collect()).collect();
                let t = rows[0][c].clone() * determinant(&minor);
                terms.push(if c % 2 == 0 { t } else { -t });
            }
            Expr::sum(terms)
        }
    }
}

/// Connected blocks of the sparsity pattern, for block-wise inversion.
fn blocks(m: &SymMatrix) -> Vec<Vec<usize>> {
    let n = m.dim();
    let mut label: Vec<usize> = (0..n).collect();
    // relabel until stable; n is tiny
    loop {
        let mut changed = false;
        for (i, j, e) in m.upper() {
            if i != j && !e.is_zero() && label[i] != label[j] {
                let l = label[i].min(label[j]);
                label[i] = l;
                label[j] = l;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    for root in 0..n {
        let b: Vec<usize> = (0..n).filter(|&i| label[i] == root).collect();
        if !b.is_empty() {
            out.push(b);
        }
    }
    out
}

/// Inverse metric via block-wise adjugate over determinant. Entries are
/// simplified. Fails when a block determinant vanishes identically.
pub fn inverse_metric(m: &MetricFamily) -> Result<SymMatrix, GeometryError> {
    let n = m.dim();
    let g = m.metric.simplified();
    let mut inv = SymMatrix::zeros(n);
    for block in blocks(&g) {
        let k = block.len();
        let rows: Vec<Vec<Expr>> = block.iter().map(|&i| block.iter().map(|&j| g.get(i, j).clone()).collect()).collect();
        let det = simplify(&determinant(&rows));
        let singular = match det.is_zero() {
            true => true,
            false => matches!(equals_zero(&det), Verdict::ZeroSymbolic | Verdict::ZeroProbabilistic { .. }),
        };
        if singular {
            return Err(GeometryError::Singular(format!("{det}")));
        }
        let det_inv = Expr::powi(det.clone(), -1);
        for a in 0..k {
            for b in a..k {
                let cof = if k == 1 {
                    Expr::one()
                } else {
                    // adj(A)_{ab} = (-1)^{a+b} det(minor without row b, column a)
                    let minor: Vec<Vec<Expr>> = rows
                        .iter()
                        .enumerate()
                        .filter(|(r, _)| *r != b)
                        .map(|(_, row)| row.iter().enumerate().filter(|(c, _)| *c != a).map(|(_, e)| e.clone()).collect())
                        .collect();
                    let d = determinant(&minor);
                    if (a + b) % 2 == 0 {
                        d
                    } else {
                        -d
                    }
                };
                let e = cancel(&(cof * det_inv.clone()));
                inv.set(block[a], block[b], e);
            }
        }
    }
    Ok(inv)
}

/// Cached derived quantities of a metric family.
pub struct Geometry<'a> {
    pub family: &'a MetricFamily,
    pub inverse: SymMatrix,
    /// `dg[k]` is the matrix of first derivatives in coordinate `k`.
    dg: Vec<SymMatrix>,
    gamma: Vec<Expr>,
}

impl<'a> Geometry<'a> {
    pub fn new(family: &'a MetricFamily) -> Result<Self, GeometryError> {
        let inverse = inverse_metric(family)?;
        let n = family.dim();
        let dg: Vec<SymMatrix> =
            family.chart.coords.iter().map(|x| family.metric.map(|e| diff(e, x))).collect();
        let mut gamma = Vec::with_capacity(n * n * n);
        let half = Expr::rational(1, 2);
        for tau in 0..n {
            for gam in 0..n {
                for alpha in 0..n {
                    let e = Expr::sum([
                        dg[alpha].get(tau, gam).clone(),
                        dg[gam].get(tau, alpha).clone(),
                        -dg[tau].get(gam, alpha).clone(),
                    ]);
                    gamma.push(half.clone() * e);
                }
            }
        }
        Ok(Geometry { family, inverse, dg, gamma })
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// `Γ_{τγα} = ½(∂_α g_{τγ} + ∂_γ g_{τα} − ∂_τ g_{γα})`, unsimplified.
    pub fn christoffel_lower(&self, tau: usize, gam: usize, alpha: usize) -> &Expr {
        let n = self.dim();
        &self.gamma[(tau * n + gam) * n + alpha]
    }

    /// `Γ^λ_{γα} = g^{λτ} Γ_{τγα}`, unsimplified.
    pub fn christoffel_upper(&self, lambda: usize, gam: usize, alpha: usize) -> Expr {
        Expr::sum((0..self.dim()).map(|tau| self.inverse.get(lambda, tau).clone() * self.christoffel_lower(tau, gam, alpha)))
    }

    fn d2(&self, k: usize, l: usize, i: usize, j: usize) -> Expr {
        diff(self.dg[k].get(i, j), &self.family.chart.coords[l])
    }

    /// Ricci tensor from the quadratic-in-Christoffel formula, unsimplified:
    ///
    /// `R_αβ = ½ g^{γδ}(−∂γ∂δ g_αβ − ∂α∂β g_γδ + ∂β∂δ g_αγ + ∂α∂γ g_δβ)
    ///        + g^{γδ} g^{τρ}(Γ_τγα Γ_ρδβ − Γ_τγδ Γ_ραβ)`
    pub fn ricci_raw(&self) -> SymMatrix {
        let n = self.dim();
        let ginv = &self.inverse;
        let half = Expr::rational(1, 2);
        SymMatrix::from_fn(n, |a, b| {
            let mut terms = Vec::new();
            for c in 0..n {
                for d in 0..n {
                    let gi = ginv.get(c, d);
                    if gi.is_zero() {
                        continue;
                    }
                    let second = Expr::sum([
                        -self.d2(c, d, a, b),
                        -self.d2(a, b, c, d),
                        self.d2(b, d, a, c),
                        self.d2(a, c, d, b),
                    ]);
                    terms.push(Expr::product([half.clone(), gi.clone(), second]));
                    for t in 0..n {
                        for r in 0..n {
                            let gj = ginv.get(t, r);
                            if gj.is_zero() {
                                continue;
                            }
                            let quad = self.christoffel_lower(t, c, a).clone() * self.christoffel_lower(r, d, b)
                                - self.christoffel_lower(t, c, d).clone() * self.christoffel_lower(r, a, b);
                            terms.push(Expr::product([gi.clone(), gj.clone(), quad]));
                        }
                    }
                }
            }
            Expr::sum(terms)
        })
    }

    /// Ricci tensor with common factors cancelled.
    pub fn ricci(&self) -> SymMatrix {
        self.ricci_raw().map(cancel)
    }

    /// Independent route: contract the Riemann tensor built from the upper
    /// Christoffel symbols, `R_σν = ∂_ρ Γ^ρ_{νσ} − ∂_ν Γ^ρ_{ρσ}
    /// + Γ^ρ_{ρλ} Γ^λ_{νσ} − Γ^ρ_{νλ} Γ^λ_{ρσ}`. Unsimplified.
    pub fn ricci_oracle(&self) -> SymMatrix {
        let n = self.dim();
        let mut up = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for g in 0..n {
                for a in 0..n {
                    up.push(self.christoffel_upper(l, g, a));
                }
            }
        }
        let gu = |l: usize, g: usize, a: usize| &up[(l * n + g) * n + a];
        let coords = &self.family.chart.coords;
        SymMatrix::from_fn(n, |s, v| {
            let mut terms = Vec::new();
            for r in 0..n {
                terms.push(diff(gu(r, v, s), &coords[r]));
                terms.push(-diff(gu(r, r, s), &coords[v]));
                for l in 0..n {
                    terms.push(gu(r, r, l).clone() * gu(l, v, s));
                    terms.push(-(gu(r, v, l).clone() * gu(l, r, s)));
                }
            }
            Expr::sum(terms)
        })
    }

    /// Covariant Hessian `∇_i∇_j f = ∂_i∂_j f − Γ^k_{ij} ∂_k f`, unsimplified.
    pub fn hessian(&self, f: &Expr) -> SymMatrix {
        let n = self.dim();
        let coords = &self.family.chart.coords;
        let df: Vec<Expr> = coords.iter().map(|x| diff(f, x)).collect();
        SymMatrix::from_fn(n, |i, j| {
            let mut terms = vec![diff(&df[i], &coords[j])];
            for k in 0..n {
                if df[k].is_zero() {
                    continue;
                }
                terms.push(-(self.christoffel_upper(k, i, j) * df[k].clone()));
            }
            Expr::sum(terms)
        })
    }

    /// Laplace–Beltrami operator `g^{ij} ∇_i∇_j f`, unsimplified.
    pub fn laplacian(&self, f: &Expr) -> Expr {
        let h = self.hessian(f);
        let n = self.dim();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let gi = self.inverse.get(i, j);
                if !gi.is_zero() {
                    terms.push(gi.clone() * h.get(i, j));
                }
            }
        }
        Expr::sum(terms)
    }

    /// `g^{ij} ∂_i f ∂_j h`, unsimplified.
    pub fn inner_gradient(&self, f: &Expr, h: &Expr) -> Expr {
        let coords = &self.family.chart.coords;
        let df: Vec<Expr> = coords.iter().map(|x| diff(f, x)).collect();
        let dh: Vec<Expr> = coords.iter().map(|x| diff(h, x)).collect();
        let n = self.dim();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let gi = self.inverse.get(i, j);
                if !gi.is_zero() {
                    terms.push(Expr::product([gi.clone(), df[i].clone(), dh[j].clone()]));
                }
            }
        }
        Expr::sum(terms)
    }
}

/// Simplified lower Christoffel symbols, indexed `[τ][γ][α]`.
pub fn christoffel_lower(m: &MetricFamily) -> Result<Vec<Vec<Vec<Expr>>>, GeometryError> {
    let geo = Geometry::new(m)?;
    let n = m.dim();
    let mut s = Simplifier::new(Assumptions::new());
    Ok((0..n)
        .map(|t| (0..n).map(|g| (0..n).map(|a| s.run(geo.christoffel_lower(t, g, a)).expect("unbounded")).collect()).collect())
        .collect())
}

/// Simplified Ricci tensor.
pub fn ricci(m: &MetricFamily) -> Result<SymMatrix, GeometryError> {
    Ok(Geometry::new(m)?.ricci())
}

/// Ricci tensor via the Riemann contraction, simplified.
pub fn ricci_oracle(m: &MetricFamily) -> Result<SymMatrix, GeometryError> {
    Ok(Geometry::new(m)?.ricci_oracle().simplified())
}

/// Simplified covariant Hessian of `f`.
pub fn hessian(m: &MetricFamily, f: &Expr) -> Result<SymMatrix, GeometryError> {
    Ok(Geometry::new(m)?.hessian(f).simplified())
}

/// Simplified Laplace–Beltrami of `f`.
pub fn laplacian(m: &MetricFamily, f: &Expr) -> Result<Expr, GeometryError> {
    Ok(simplify(&Geometry::new(m)?.laplacian(f)))
}
