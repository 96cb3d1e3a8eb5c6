//! Ricci curvature of multiply warped products `g_B + Σ φ_a² g_{F_a}` with
//! Einstein fibers `Ric_{F_a} = μ_a g_{F_a}`.

use alloc::vec::Vec;

use super::{Geometry, GeometryError, MetricFamily, SymMatrix};
use crate::expr::{diff, Expr};

/// An Einstein fiber of dimension `dim` warped by `warp`.
#[derive(Clone, Debug)]
pub struct Fiber {
    pub dim: Expr,
    pub einstein: Expr,
    pub warp: Expr,
}

#[derive(Clone, Debug)]
pub struct WarpedProduct {
    pub base: MetricFamily,
    pub fibers: Vec<Fiber>,
}

/// Base block of a tensor together with one scalar per fiber: the fiber
/// block of the tensor is `fibers[a] * g_{F_a}`.
#[derive(Clone, Debug)]
pub struct WarpedRicci {
    pub base: SymMatrix,
    pub fibers: Vec<Expr>,
}

impl WarpedRicci {
    pub fn entries(&self) -> Vec<Expr> {
        let mut v: Vec<Expr> = self.base.upper().map(|(_, _, e)| e.clone()).collect();
        v.extend(self.fibers.iter().cloned());
        v
    }
}

/// Ricci tensor of the warped product, unsimplified.
///
/// Base block: `Ric_B − Σ_a (m_a/φ_a) Hess φ_a`.
/// Fiber `a`: `μ_a − φ_a Δφ_a − (m_a − 1)|∇φ_a|² − Σ_{b≠a} m_b (φ_a/φ_b)⟨∇φ_a, ∇φ_b⟩`.
pub fn warped_ricci(w: &WarpedProduct) -> Result<WarpedRicci, GeometryError> {
    let geo = Geometry::new(&w.base)?;
    let ric = geo.ricci_raw();
    let hess: Vec<SymMatrix> = w.fibers.iter().map(|f| geo.hessian(&f.warp)).collect();
    let n = w.base.dim();
    let base = SymMatrix::from_fn(n, |i, j| {
        let mut terms = alloc::vec![ric.get(i, j).clone()];
        for (f, h) in w.fibers.iter().zip(&hess) {
            terms.push(-(Expr::product([f.dim.clone(), Expr::powi(f.warp.clone(), -1), h.get(i, j).clone()])));
        }
        Expr::sum(terms)
    });
    let mut fibers = Vec::with_capacity(w.fibers.len());
    for (a, fa) in w.fibers.iter().enumerate() {
        let mut terms = alloc::vec![
            fa.einstein.clone(),
            -(fa.warp.clone() * geo.laplacian(&fa.warp)),
            -((fa.dim.clone() - Expr::one()) * geo.inner_gradient(&fa.warp, &fa.warp)),
        ];
        for (b, fb) in w.fibers.iter().enumerate() {
            if a == b {
                continue;
            }
            terms.push(-(Expr::product([
                fb.dim.clone(),
                fa.warp.clone(),
                Expr::powi(fb.warp.clone(), -1),
                geo.inner_gradient(&fa.warp, &fb.warp),
            ])));
        }
        fibers.push(Expr::sum(terms));
    }
    Ok(WarpedRicci { base, fibers })
}

/// Ricci flow residual `∂_t g + 2 Ric` in warped-product form, unsimplified.
/// The base block is `∂_t g_B + 2 Ric|_B`; fiber `a` is `∂_t(φ_a²) + 2 c_a`.
pub fn warped_flow_residual(w: &WarpedProduct) -> Result<WarpedRicci, GeometryError> {
    let t = w
        .base
        .chart
        .time
        .clone()
        .ok_or_else(|| GeometryError::Dimension(alloc::string::String::from("flow residual needs a time variable")))?;
    let ric = warped_ricci(w)?;
    let two = Expr::int(2);
    let base = SymMatrix::from_fn(w.base.dim(), |i, j| diff(w.base.get(i, j), &t) + two.clone() * ric.base.get(i, j));
    let fibers = w
        .fibers
        .iter()
        .zip(&ric.fibers)
        .map(|(f, c)| diff(&Expr::powi(f.warp.clone(), 2), &t) + two.clone() * c)
        .collect();
    Ok(WarpedRicci { base, fibers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equals_zero, parse, Symbol, Verdict};
    use crate::geometry::{ricci, Chart, FieldDecl, MetricFamily, SymMatrix};

    /// Base `dx²` on a line, round 2-sphere fiber in explicit coordinates.
    #[test]
    fn matches_explicit_sphere_fiber() {
        let x = Symbol::new("x");
        let phi = parse("f(x)").unwrap();
        let base = MetricFamily::new(Chart::new(&["x"], None), SymMatrix::from_fn(1, |_, _| Expr::one()), alloc::vec![])
            .unwrap();
        let w = WarpedProduct {
            base,
            fibers: alloc::vec![Fiber { dim: Expr::int(2), einstein: Expr::one(), warp: phi.clone() }],
        };
        let wr = warped_ricci(&w).unwrap();

        let f2 = Expr::powi(phi.clone(), 2);
        let full = SymMatrix::from_fn(3, |i, j| match (i, j) {
            (0, 0) => Expr::one(),
            (1, 1) => f2.clone(),
            (2, 2) => f2.clone() * parse("sin(th)^2").unwrap(),
            _ => Expr::zero(),
        });
        let m = MetricFamily::new(Chart::new(&["x", "th", "ph"], None), full, alloc::vec![FieldDecl::new("f", &[x])])
            .unwrap();
        let r = ricci(&m).unwrap();
        assert_eq!(equals_zero(&(r.get(0, 0).clone() - wr.base.get(0, 0).clone())), Verdict::ZeroSymbolic);
        assert_eq!(equals_zero(&(r.get(1, 1).clone() - wr.fibers[0].clone())), Verdict::ZeroSymbolic);
        let fiber_metric = parse("sin(th)^2").unwrap();
        assert_eq!(equals_zero(&(r.get(2, 2).clone() - wr.fibers[0].clone() * fiber_metric)), Verdict::ZeroSymbolic);
    }

    /// Two circle fibers over a line, explicit coordinates.
    #[test]
    fn matches_explicit_doubly_warped_torus() {
        let x = Symbol::new("x");
        let a = parse("a(x)").unwrap();
        let b = parse("b(x)").unwrap();
        let base = MetricFamily::new(Chart::new(&["x"], None), SymMatrix::from_fn(1, |_, _| parse("h(x)^2").unwrap()), alloc::vec![])
            .unwrap();
        let w = WarpedProduct {
            base,
            fibers: alloc::vec![
                Fiber { dim: Expr::one(), einstein: Expr::zero(), warp: a.clone() },
                Fiber { dim: Expr::one(), einstein: Expr::zero(), warp: b.clone() },
            ],
        };
        let wr = warped_ricci(&w).unwrap();
        let full = SymMatrix::from_fn(3, |i, j| match (i, j) {
            (0, 0) => parse("h(x)^2").unwrap(),
            (1, 1) => Expr::powi(a.clone(), 2),
            (2, 2) => Expr::powi(b.clone(), 2),
            _ => Expr::zero(),
        });
        let m = MetricFamily::new(Chart::new(&["x", "y", "z"], None), full, alloc::vec![FieldDecl::new("a", &[x])]).unwrap();
        let r = ricci(&m).unwrap();
        assert_eq!(equals_zero(&(r.get(0, 0).clone() - wr.base.get(0, 0).clone())), Verdict::ZeroSymbolic);
        assert_eq!(equals_zero(&(r.get(1, 1).clone() - wr.fibers[0].clone())), Verdict::ZeroSymbolic);
        assert_eq!(equals_zero(&(r.get(2, 2).clone() - wr.fibers[1].clone())), Verdict::ZeroSymbolic);
    }
}
