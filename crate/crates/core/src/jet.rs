//! Jet coordinates and evolution systems.
//!
//! Dependent variables are unknown functions of the independent variables,
//! `u(x1, .., xn, t)`. A jet coordinate is a derivative node of such a field.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{diff, substitute_raw, Bindings, Expr, FunNode, Symbol};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("no on-shell rule for {0}")]
    RuleSetIncomplete(String),
    #[error("equation {index} cannot be solved for a time derivative: {reason}")]
    NotEvolution { index: usize, reason: String },
    #[error("unknown field {0}")]
    UnknownField(String),
}

/// A dependent variable and the independent variables it depends on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    pub name: Symbol,
    pub args: Vec<Symbol>,
}

impl Field {
    pub fn new(name: &str, args: &[Symbol]) -> Self {
        Field { name: Symbol::new(name), args: args.to_vec() }
    }

    pub fn expr(&self) -> Expr {
        Expr::fun(self.name.clone(), self.args.iter().cloned().map(Expr::symbol).collect())
    }

    /// True if `f` is this field or one of its derivatives.
    pub fn owns(&self, f: &FunNode) -> bool {
        f.name == self.name && f.args.len() == self.args.len() && f.args.iter().zip(&self.args).all(|(a, s)| a.as_symbol() == Some(s))
    }

    /// Derivative node with the given orders per independent variable.
    /// Returns zero when differentiating in a variable the field ignores.
    pub fn jet(&self, orders: &[(Symbol, u32)]) -> Expr {
        let mut o = alloc::vec![0u32; self.args.len()];
        for (s, k) in orders {
            if *k == 0 {
                continue;
            }
            match self.args.iter().position(|a| a == s) {
                Some(i) => o[i] += k,
                None => return Expr::zero(),
            }
        }
        Expr::fun_with_orders(self.name.clone(), self.args.iter().cloned().map(Expr::symbol).collect(), o)
    }
}

/// Independent variables (space and optional time) and fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSpace {
    pub time: Option<Symbol>,
    pub coords: Vec<Symbol>,
    pub fields: Vec<Field>,
}

impl JetSpace {
    pub fn new(coords: Vec<Symbol>, time: Option<Symbol>, fields: Vec<Field>) -> Self {
        JetSpace { time, coords, fields }
    }

    /// Spatial coordinates followed by time.
    pub fn independent(&self) -> Vec<Symbol> {
        let mut v = self.coords.clone();
        if let Some(t) = &self.time {
            v.push(t.clone());
        }
        v
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name.as_str() == name)
    }

    /// Field index and node when `e` is a jet coordinate of this space.
    pub fn as_jet<'e>(&self, e: &'e Expr) -> Option<(usize, &'e FunNode)> {
        let f = e.as_fun()?;
        self.fields.iter().position(|fd| fd.owns(f)).map(|k| (k, f))
    }

    /// Order of the time derivative in a jet node.
    pub fn time_order(&self, k: usize, f: &FunNode) -> u32 {
        match &self.time {
            Some(t) => self.fields[k].args.iter().position(|a| a == t).map(|i| f.orders[i]).unwrap_or(0),
            None => 0,
        }
    }

    /// All jets of every field with total order in `1..=max`, restricted to
    /// spatial derivatives when `spatial_only`.
    pub fn jets(&self, max: u32, spatial_only: bool) -> Vec<Expr> {
        let mut out = Vec::new();
        for f in &self.fields {
            let vars: Vec<Symbol> = f
                .args
                .iter()
                .filter(|a| !(spatial_only && Some(*a) == self.time.as_ref()))
                .cloned()
                .collect();
            for order in 1..=max {
                for combo in multisets(vars.len(), order as usize) {
                    let orders: Vec<(Symbol, u32)> = combo.iter().map(|&i| (vars[i].clone(), 1)).collect();
                    out.push(f.jet(&orders));
                }
            }
        }
        out
    }

    /// Multi-index of a jet node as (variable, order) pairs.
    pub fn multi_index(&self, k: usize, f: &FunNode) -> Vec<(Symbol, u32)> {
        self.fields[k].args.iter().cloned().zip(f.orders.iter().copied()).filter(|(_, o)| *o > 0).collect()
    }
}

/// Non-decreasing index sequences of length `k` over `0..n`.
pub(crate) fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// A system of equations `residuals = 0`. Residual `pivots[k]` is solved
/// for the time derivative of field `k`, giving the evolution rule
/// `u_t = evolution[k]`; every other residual is a constraint that must hold
/// on solutions alongside the evolution equations.
#[derive(Clone, Debug)]
pub struct PdeSystem {
    pub name: String,
    pub space: JetSpace,
    pub residuals: Vec<Expr>,
    /// Display name per residual.
    pub labels: Vec<String>,
    /// Right-hand side of `u_t = rhs` for each field, free of time
    /// derivatives. Empty for systems without time.
    pub evolution: Vec<Expr>,
    pub pivots: Vec<usize>,
}

impl PdeSystem {
    /// System whose residuals are `u_t - rhs_u`.
    pub fn from_evolution(name: &str, space: JetSpace, rhs: Vec<Expr>) -> Result<Self, JetError> {
        let t = space.time.clone().ok_or_else(|| JetError::NotEvolution { index: 0, reason: String::from("no time variable") })?;
        let residuals = space.fields.iter().zip(&rhs).map(|(f, r)| f.jet(&[(t.clone(), 1)]) - r.clone()).collect();
        let labels = default_labels(&space);
        let pivots = (0..rhs.len()).collect();
        Ok(PdeSystem { name: String::from(name), space, residuals, labels, evolution: rhs, pivots })
    }

    /// System given by residuals, each linear in the time derivative of
    /// exactly the field with the same index.
    pub fn from_residuals(name: &str, space: JetSpace, residuals: Vec<Expr>) -> Result<Self, JetError> {
        if residuals.len() != space.fields.len() {
            return Err(JetError::NotEvolution {
                index: residuals.len().min(space.fields.len()),
                reason: format!("{} equations for {} fields", residuals.len(), space.fields.len()),
            });
        }
        let pivots: Vec<usize> = (0..residuals.len()).collect();
        Self::with_pivots(name, space, residuals, &pivots)
    }

    /// Residual `pivots[k]` must be linear in `∂_t u_k` and free of the
    /// other time derivatives; the remaining residuals become constraints.
    pub fn with_pivots(name: &str, space: JetSpace, residuals: Vec<Expr>, pivots: &[usize]) -> Result<Self, JetError> {
        let t = space.time.clone().ok_or_else(|| JetError::NotEvolution { index: 0, reason: String::from("no time variable") })?;
        if pivots.len() != space.fields.len() {
            return Err(JetError::NotEvolution { index: 0, reason: format!("{} pivots for {} fields", pivots.len(), space.fields.len()) });
        }
        let ut: Vec<Expr> = space.fields.iter().map(|f| f.jet(&[(t.clone(), 1)])).collect();
        let mut evolution = Vec::with_capacity(pivots.len());
        for (k, &i) in pivots.iter().enumerate() {
            let r = residuals.get(i).ok_or_else(|| JetError::NotEvolution { index: i, reason: String::from("no such residual") })?;
            let (lin, rest) = crate::flow::split_linear(r, &ut[k]).map_err(|reason| JetError::NotEvolution { index: i, reason })?;
            for (j, u) in ut.iter().enumerate() {
                if j != k && rest.contains(u) {
                    return Err(JetError::NotEvolution { index: i, reason: format!("also contains {u}") });
                }
            }
            // lin * u_t + rest = 0
            evolution.push(crate::expr::simplify(&(-(rest * Expr::powi(lin, -1)))));
        }
        let labels = (0..residuals.len()).map(|i| format!("E{}", i + 1)).collect();
        Ok(PdeSystem { name: String::from(name), space, residuals, labels, evolution, pivots: pivots.to_vec() })
    }

    /// Time-independent system: every residual is a constraint.
    pub fn stationary(name: &str, space: JetSpace, residuals: Vec<Expr>) -> Self {
        let labels = (0..residuals.len()).map(|i| format!("E{}", i + 1)).collect();
        PdeSystem { name: String::from(name), space, residuals, labels, evolution: Vec::new(), pivots: Vec::new() }
    }

    /// Indices of residuals that are not solved for a time derivative.
    pub fn constraints(&self) -> Vec<usize> {
        (0..self.residuals.len()).filter(|i| !self.pivots.contains(i)).collect()
    }

    /// Replace every time derivative `∂_J ∂_t u` by `D_J rhs_u`. Fails if a
    /// second time derivative occurs.
    pub fn on_shell(&self, e: &Expr) -> Result<Expr, JetError> {
        let mut b = Bindings::new();
        for f in e.functions() {
            let Some((k, node)) = self.space.as_jet(&f) else { continue };
            match self.space.time_order(k, node) {
                0 => {}
                1 if k < self.evolution.len() => {
                    let mut v = self.evolution[k].clone();
                    for (s, o) in self.space.multi_index(k, node) {
                        if Some(&s) == self.space.time.as_ref() {
                            continue;
                        }
                        for _ in 0..o {
                            v = diff(&v, &s);
                        }
                    }
                    b.bind(f.clone(), v).expect("fresh key");
                }
                _ => return Err(JetError::RuleSetIncomplete(format!("{f}"))),
            }
        }
        if b.is_empty() {
            return Ok(e.clone());
        }
        Ok(substitute_raw(e, &b).expect("atom bindings only"))
    }
}

fn default_labels(space: &JetSpace) -> Vec<String> {
    space.fields.iter().map(|f| format!("E[{}]", f.name)).collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, simplify};

    fn heat() -> PdeSystem {
        let x = Symbol::new("x");
        let t = Symbol::new("t");
        let space = JetSpace::new(alloc::vec![x.clone()], Some(t.clone()), alloc::vec![Field::new("u", &[x, t])]);
        PdeSystem::from_evolution("heat", space, alloc::vec![parse("D(u(x,t),x,2)").unwrap()]).unwrap()
    }

    #[test]
    fn on_shell_differentiates_rules() {
        let sys = heat();
        let e = parse("D(D(u(x,t),t),x) - D(u(x,t),x,3)").unwrap();
        assert_eq!(simplify(&sys.on_shell(&e).unwrap()), Expr::zero());
        let bad = parse("D(u(x,t),t,2)").unwrap();
        assert!(matches!(sys.on_shell(&bad), Err(JetError::RuleSetIncomplete(_))));
    }

    #[test]
    fn residual_form_is_solved() {
        let x = Symbol::new("x");
        let t = Symbol::new("t");
        let space = JetSpace::new(alloc::vec![x.clone()], Some(t.clone()), alloc::vec![Field::new("u", &[x, t])]);
        let sys = PdeSystem::from_residuals("c", space, alloc::vec![parse("exp(u(x,t))*D(u(x,t),t) - D(u(x,t),x,2)").unwrap()])
            .unwrap();
        assert_eq!(sys.evolution[0], simplify(&parse("exp(-u(x,t))*D(u(x,t),x,2)").unwrap()));
    }

    #[test]
    fn jet_enumeration() {
        let sys = heat();
        assert_eq!(sys.space.jets(2, false).len(), 5);
        assert_eq!(sys.space.jets(2, true).len(), 2);
        assert_eq!(multisets(3, 2).len(), 6);
    }
}
