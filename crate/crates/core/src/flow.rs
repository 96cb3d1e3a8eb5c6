//! The Ricci flow `∂_t g = −2 Ric` as a PDE system on the metric entries.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{cancel, diff_atom, simplify, Expr};
use crate::geometry::{Geometry, GeometryError, MetricFamily, SymMatrix};
use crate::jet::{Field, JetError, JetSpace, PdeSystem};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("metric entry ({0},{1}) is not an unknown field of the family")]
    NotGeneric(usize, usize),
    #[error("the flow needs a time variable")]
    NoTime,
}

/// `E_αβ = ∂_t g_αβ + 2 R_αβ`, each entry simplified with common factors
/// cancelled.
pub fn flow_residual(m: &MetricFamily) -> Result<SymMatrix, FlowError> {
    let raw = flow_residual_raw(m)?;
    Ok(raw.map(cancel))
}

/// Unsimplified residual matrix.
pub fn flow_residual_raw(m: &MetricFamily) -> Result<SymMatrix, FlowError> {
    let t = m.chart.time.clone().ok_or(FlowError::NoTime)?;
    let geo = Geometry::new(m)?;
    let ric = geo.ricci_raw();
    let two = Expr::int(2);
    Ok(SymMatrix::from_fn(m.dim(), |i, j| {
        crate::expr::diff(m.get(i, j), &t) + two.clone() * ric.get(i, j)
    }))
}

/// The flow of a family in which every metric entry `g_ij` (i ≤ j) is its
/// own unknown function of all coordinates and time.
#[derive(Clone, Debug)]
pub struct FlowSystem {
    pub family: MetricFamily,
    /// Raw residual `∂_t g + 2 Ric`.
    pub residual: SymMatrix,
    /// Fields in upper-triangle order, evolution `u_t = −2 R`.
    pub pde: PdeSystem,
}

impl FlowSystem {
    pub fn new(family: MetricFamily) -> Result<Self, FlowError> {
        let t = family.chart.time.clone().ok_or(FlowError::NoTime)?;
        let mut all = family.chart.coords.clone();
        all.push(t.clone());
        let mut fields = Vec::new();
        for (i, j, e) in family.metric.upper() {
            let f = e.as_fun().ok_or(FlowError::NotGeneric(i, j))?;
            if f.total_order() != 0 {
                return Err(FlowError::NotGeneric(i, j));
            }
            let field = Field::new(f.name.as_str(), &all);
            if !field.owns(f) || fields.iter().any(|g: &Field| g.name == field.name) {
                return Err(FlowError::NotGeneric(i, j));
            }
            fields.push(field);
        }
        let geo = Geometry::new(&family)?;
        let ric = geo.ricci_raw();
        let space = JetSpace::new(family.chart.coords.clone(), Some(t.clone()), fields);
        let two = Expr::int(2);
        let evolution: Vec<Expr> = ric.upper().map(|(_, _, r)| -(two.clone() * r)).collect();
        let residual = SymMatrix::from_fn(family.dim(), |i, j| {
            crate::expr::diff(family.get(i, j), &t) + two.clone() * ric.get(i, j)
        });
        let residuals: Vec<Expr> = residual.upper().map(|(_, _, e)| e.clone()).collect();
        let labels = residual.upper().map(|(i, j, _)| format!("E{}{}", i + 1, j + 1)).collect();
        let mut pde = PdeSystem::from_evolution("ricci_flow", space, evolution)?;
        pde.residuals = residuals;
        pde.labels = labels;
        Ok(FlowSystem { family, residual, pde })
    }

    /// Flow of the general metric on the standard chart `x1..xn, t`.
    pub fn generic(n: usize) -> Result<Self, FlowError> {
        Self::new(MetricFamily::generic(crate::geometry::Chart::standard(n)))
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// Replace `∂_J ∂_t g_αβ` by `−2 ∂_J R_αβ`.
    pub fn on_shell(&self, e: &Expr) -> Result<Expr, FlowError> {
        Ok(self.pde.on_shell(e)?)
    }

    /// Pack a per-field list (upper-triangle order) into a matrix.
    pub fn to_matrix(&self, v: &[Expr]) -> SymMatrix {
        let mut it = v.iter();
        SymMatrix::from_fn(self.dim(), |_, _| it.next().cloned().unwrap_or_else(Expr::zero))
    }
}

/// Write `r = lin * u + rest` with neither part containing `u`.
pub(crate) fn split_linear(r: &Expr, u: &Expr) -> Result<(Expr, Expr), String> {
    let s = simplify(r);
    let lin = simplify(&diff_atom(&s, u));
    if lin.contains(u) {
        return Err(format!("not linear in {u}"));
    }
    if lin.is_zero() {
        return Err(format!("does not contain {u}"));
    }
    let rest = simplify(&(s - lin.clone() * u.clone()));
    if rest.contains(u) {
        return Err(format!("not linear in {u}"));
    }
    Ok((lin, rest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equals_zero, parse, Symbol, Verdict};
    use crate::geometry::{Chart, FieldDecl};

    #[test]
    fn static_flat_metric_has_zero_residual() {
        let m = MetricFamily::new(Chart::standard(2), SymMatrix::from_fn(2, |i, j| if i == j { Expr::one() } else { Expr::zero() }), alloc::vec![])
            .unwrap();
        let e = flow_residual(&m).unwrap();
        assert!(e.upper().all(|(_, _, x)| x.is_zero()));
    }

    #[test]
    fn shrinking_round_sphere() {
        let scale = parse("1 - 2*t").unwrap();
        let m = MetricFamily::new(
            Chart::new(&["th", "ph"], Some("t")),
            SymMatrix::from_fn(2, |i, j| match (i, j) {
                (0, 0) => scale.clone(),
                (1, 1) => scale.clone() * parse("sin(th)^2").unwrap(),
                _ => Expr::zero(),
            }),
            alloc::vec![],
        )
        .unwrap();
        let e = flow_residual(&m).unwrap();
        for (_, _, x) in e.upper() {
            assert_eq!(equals_zero(x), Verdict::ZeroSymbolic, "{x}");
        }
    }

    #[test]
    fn conformal_plane_gives_scalar_flow() {
        let args: Vec<Symbol> = ["x1", "x2", "t"].iter().map(|s| Symbol::new(s)).collect();
        let conf = parse("exp(u(x1,x2,t))").unwrap();
        let m = MetricFamily::new(
            Chart::standard(2),
            SymMatrix::from_fn(2, |i, j| if i == j { conf.clone() } else { Expr::zero() }),
            alloc::vec![FieldDecl::new("u", &args)],
        )
        .unwrap();
        let e = flow_residual(&m).unwrap();
        let expected = parse("exp(u(x1,x2,t))*D(u(x1,x2,t),t) - D(u(x1,x2,t),x1,2) - D(u(x1,x2,t),x2,2)").unwrap();
        assert_eq!(equals_zero(&(e.get(0, 0).clone() - expected.clone())), Verdict::ZeroSymbolic);
        assert_eq!(equals_zero(&(e.get(1, 1).clone() - expected)), Verdict::ZeroSymbolic);
        assert!(e.get(0, 1).is_zero());
    }

    #[test]
    fn on_shell_rules() {
        let f = FlowSystem::generic(2).unwrap();
        let dt = parse("D(g11(x1,x2,t),t)").unwrap();
        let r = f.on_shell(&dt).unwrap();
        let ric = crate::geometry::Geometry::new(&f.family).unwrap().ricci_raw();
        assert_eq!(equals_zero(&(r.clone() + Expr::int(2) * ric.get(0, 0))), Verdict::ZeroSymbolic);
        let mixed = parse("D(D(g12(x1,x2,t),t),x1)").unwrap();
        let r2 = f.on_shell(&mixed).unwrap();
        let want = -(Expr::int(2) * crate::expr::diff(ric.get(0, 1), &Symbol::new("x1")));
        assert_eq!(crate::expr::ZeroTester::numeric_only().test(&(r2 - want)).is_zero(), true);
        // projection
        let once = f.on_shell(&(dt.clone() * mixed.clone())).unwrap();
        let twice = f.on_shell(&once).unwrap();
        assert_eq!(once, twice);
        assert!(f.on_shell(&parse("D(g11(x1,x2,t),t,2)").unwrap()).is_err());
    }
}
