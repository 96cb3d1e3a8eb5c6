//! Infinitesimal generators, prolongation, and the linearized symmetry
//! condition.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{
    collect_monomials, derive_with, diff, simplify, substitute_raw, AtomRule, Bindings, Expr, MonomialKey, Node,
    Simplifier, Symbol, Verdict, ZeroTester,
};
use crate::flow::{FlowError, FlowSystem};
use crate::geometry::{generic_name, Chart, MetricFamily};
use crate::jet::{Field, JetSpace, PdeSystem};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("component {0} depends on derivatives of the fields")]
    NotPoint(String),
    #[error("vector field component {component} depends on {var}")]
    BadDependency { component: String, var: String },
    #[error("generators act on different spaces")]
    SpaceMismatch,
    #[error("expected {expected} components, got {found}")]
    Arity { expected: usize, found: usize },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("cannot read component {0}")]
    Parse(String),
    #[error("dimension {0} exceeds the configured bound {1}")]
    TooLarge(usize, usize),
}

/// `X = ξ^t ∂_t + Σ ξ^i ∂_{x^i} + Σ η_u ∂_u` on the space of independent
/// variables and field values. Components may contain field nodes `u(x, t)`
/// (standing for the value of `u`) but no derivatives of them.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub space: JetSpace,
    pub xi_t: Expr,
    pub xi: Vec<Expr>,
    pub eta: Vec<Expr>,
}

impl Generator {
    pub fn new(space: JetSpace, xi_t: Expr, xi: Vec<Expr>, eta: Vec<Expr>) -> Result<Self, LieError> {
        if xi.len() != space.coords.len() {
            return Err(LieError::Arity { expected: space.coords.len(), found: xi.len() });
        }
        if eta.len() != space.fields.len() {
            return Err(LieError::Arity { expected: space.fields.len(), found: eta.len() });
        }
        let g = Generator { space, xi_t, xi, eta };
        for (name, c) in g.components() {
            if c.any(&|e| g.space.as_jet(e).is_some_and(|(_, f)| f.total_order() > 0)) {
                return Err(LieError::NotPoint(name));
            }
        }
        Ok(g)
    }

    /// Build from expression strings. A bare field name such as `psi`
    /// stands for the field node `psi(x, t)`.
    pub fn parse(space: JetSpace, xi_t: &str, xi: &[&str], eta: &[&str]) -> Result<Self, LieError> {
        let mut b = Bindings::new();
        for f in &space.fields {
            b.bind(Expr::symbol(f.name.clone()), f.expr()).expect("distinct field names");
        }
        let read = |s: &str| -> Result<Expr, LieError> {
            let e = crate::expr::parse(s).map_err(|e| LieError::Parse(format!("{s}: {e}")))?;
            crate::expr::substitute(&e, &b).map_err(|e| LieError::Parse(format!("{s}: {e}")))
        };
        let xi_t = read(xi_t)?;
        let xi = xi.iter().map(|s| read(s)).collect::<Result<Vec<_>, _>>()?;
        let eta = eta.iter().map(|s| read(s)).collect::<Result<Vec<_>, _>>()?;
        Generator::new(space, xi_t, xi, eta)
    }

    pub fn zero(space: JetSpace) -> Self {
        let xi = alloc::vec![Expr::zero(); space.coords.len()];
        let eta = alloc::vec![Expr::zero(); space.fields.len()];
        Generator { space, xi_t: Expr::zero(), xi, eta }
    }

    /// Named components in the order `t, coords, fields`.
    pub fn components(&self) -> Vec<(String, Expr)> {
        let mut v = Vec::new();
        if let Some(t) = &self.space.time {
            v.push((format!("xi_{t}"), self.xi_t.clone()));
        }
        for (s, c) in self.space.coords.iter().zip(&self.xi) {
            v.push((format!("xi_{s}"), c.clone()));
        }
        for (f, c) in self.space.fields.iter().zip(&self.eta) {
            v.push((format!("eta_{}", f.name), c.clone()));
        }
        v
    }

    fn component_list(&self) -> Vec<Expr> {
        let mut v = alloc::vec![self.xi_t.clone()];
        v.extend(self.xi.iter().cloned());
        v.extend(self.eta.iter().cloned());
        v
    }

    fn from_component_list(space: JetSpace, mut v: Vec<Expr>) -> Self {
        let eta = v.split_off(1 + space.coords.len());
        let xi = v.split_off(1);
        Generator { space, xi_t: v.pop().unwrap_or_else(Expr::zero), xi, eta }
    }

    pub fn simplified(&self) -> Self {
        Generator::from_component_list(self.space.clone(), self.component_list().iter().map(simplify).collect())
    }

    pub fn scale(&self, c: &Expr) -> Self {
        Generator::from_component_list(self.space.clone(), self.component_list().iter().map(|e| c.clone() * e).collect())
    }

    pub fn add(&self, other: &Generator) -> Result<Self, LieError> {
        if self.space != other.space {
            return Err(LieError::SpaceMismatch);
        }
        let v = self.component_list().into_iter().zip(other.component_list()).map(|(a, b)| a + b).collect();
        Ok(Generator::from_component_list(self.space.clone(), v))
    }

    /// Apply `b` to every component.
    pub fn substitute(&self, b: &Bindings) -> Result<Self, crate::expr::SubstError> {
        let v = self.component_list().iter().map(|e| crate::expr::substitute(e, b)).collect::<Result<Vec<_>, _>>()?;
        Ok(Generator::from_component_list(self.space.clone(), v))
    }

    /// Coefficient of each constant in a generator linear in them, followed
    /// by the part free of all of them.
    pub fn split_constants(&self, constants: &[Symbol]) -> Vec<Generator> {
        let mut out = Vec::new();
        let mut zero = Bindings::new();
        for c in constants {
            let part = self.component_list().iter().map(|e| simplify(&diff(e, c))).collect();
            out.push(Generator::from_component_list(self.space.clone(), part));
            zero.bind(Expr::symbol(c.clone()), Expr::zero()).expect("distinct constants");
        }
        out.push(self.substitute(&zero).expect("symbol bindings"));
        out
    }

    /// Componentwise zero test of `self − other`.
    pub fn difference_verdicts(&self, other: &Generator, tester: &ZeroTester) -> Result<Vec<(String, Verdict)>, LieError> {
        if self.space != other.space {
            return Err(LieError::SpaceMismatch);
        }
        Ok(self
            .components()
            .into_iter()
            .zip(other.components())
            .map(|((name, a), (_, b))| (name, tester.test(&(a - b))))
            .collect())
    }

    /// True when every component of `self − other` simplifies to zero.
    pub fn canonically_equal(&self, other: &Generator) -> bool {
        self.space == other.space
            && self.component_list().into_iter().zip(other.component_list()).all(|(a, b)| simplify(&(a - b)).is_zero())
    }
}

/// `Q_u = η_u − ξ^t u_t − Σ ξ^s u_s` for each field.
pub fn characteristic(x: &Generator) -> Vec<Expr> {
    let sp = &x.space;
    sp.fields
        .iter()
        .zip(&x.eta)
        .map(|(f, eta)| {
            let mut terms = alloc::vec![eta.clone()];
            if let Some(t) = &sp.time {
                terms.push(-(x.xi_t.clone() * f.jet(&[(t.clone(), 1)])));
            }
            for (s, xi) in sp.coords.iter().zip(&x.xi) {
                terms.push(-(xi.clone() * f.jet(&[(s.clone(), 1)])));
            }
            simplify(&Expr::sum(terms))
        })
        .collect()
}

/// A generator together with its prolongation coefficients, computed on
/// demand and cached by jet node.
pub struct Prolonged {
    pub generator: Generator,
    pub characteristic: Vec<Expr>,
    /// `D_J Q_u` keyed by the jet node `u_J`.
    dq: BTreeMap<Expr, Expr>,
    coeffs: BTreeMap<Expr, Expr>,
    simp: Simplifier,
}

impl Prolonged {
    pub fn new(x: &Generator) -> Self {
        let characteristic = characteristic(x);
        let mut dq = BTreeMap::new();
        let mut coeffs = BTreeMap::new();
        for (k, f) in x.space.fields.iter().enumerate() {
            dq.insert(f.expr(), characteristic[k].clone());
            coeffs.insert(f.expr(), x.eta[k].clone());
        }
        Prolonged {
            generator: x.clone(),
            characteristic,
            dq,
            coeffs,
            simp: Simplifier::new(crate::expr::Assumptions::new()),
        }
    }

    fn total_dq(&mut self, k: usize, jet: &Expr) -> Expr {
        if let Some(v) = self.dq.get(jet) {
            return v.clone();
        }
        let f = jet.as_fun().expect("jet node").clone();
        let field = self.generator.space.fields[k].clone();
        // peel the last nonzero order
        let slot = f.orders.iter().rposition(|&o| o > 0).expect("positive order");
        let mut lower = f.orders.clone();
        lower[slot] -= 1;
        let lower_jet = Expr::fun_with_orders(field.name.clone(), f.args.clone(), lower);
        let prev = self.total_dq(k, &lower_jet);
        let v = self.simp.run(&diff(&prev, &field.args[slot])).expect("unbounded");
        self.dq.insert(jet.clone(), v.clone());
        v
    }

    /// `η_J = D_J Q + ξ^t u_{J,t} + Σ ξ^s u_{J,s}` for the jet node `u_J`.
    pub fn coefficient(&mut self, jet: &Expr) -> Expr {
        if let Some(v) = self.coeffs.get(jet) {
            return v.clone();
        }
        let (k, node) = self.generator.space.as_jet(jet).expect("jet coordinate of the generator's space");
        let orders: Vec<(Symbol, u32)> = self.generator.space.multi_index(k, node);
        let field = self.generator.space.fields[k].clone();
        let mut terms = alloc::vec![self.total_dq(k, jet)];
        let bumped = |s: &Symbol| {
            let mut o = orders.clone();
            o.push((s.clone(), 1));
            field.jet(&o)
        };
        if let Some(t) = self.generator.space.time.clone() {
            terms.push(self.generator.xi_t.clone() * bumped(&t));
        }
        for (s, xi) in self.generator.space.coords.clone().iter().zip(self.generator.xi.clone()) {
            terms.push(xi * bumped(s));
        }
        let v = self.simp.run(&Expr::sum(terms)).expect("unbounded");
        self.coeffs.insert(jet.clone(), v.clone());
        v
    }

    /// Compute and cache coefficients for all jets up to `order`.
    pub fn fill(&mut self, order: u32) {
        for j in self.generator.space.jets(order, false) {
            self.coefficient(&j);
        }
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&Expr, &Expr)> {
        self.coeffs.iter()
    }

    /// Apply the prolonged vector field to `e` as a derivation. Symbols
    /// other than the independent variables are constants; unknown functions
    /// that are not fields are differentiated through their arguments.
    pub fn apply(&mut self, e: &Expr) -> Expr {
        let space = self.generator.space.clone();
        let xi_t = self.generator.xi_t.clone();
        let xi = self.generator.xi.clone();
        derive_with(e, &mut |a: &Expr| match a.node() {
            Node::Sym(s) => {
                if Some(s) == space.time.as_ref() {
                    return AtomRule::Value(xi_t.clone());
                }
                match space.coords.iter().position(|c| c == s) {
                    Some(i) => AtomRule::Value(xi[i].clone()),
                    None => AtomRule::Zero,
                }
            }
            _ => {
                if space.as_jet(a).is_some() {
                    AtomRule::Value(self.coefficient(a))
                } else {
                    AtomRule::Chain
                }
            }
        })
    }
}

/// Second prolongation with all coefficients up to order two filled in.
pub fn prolong2(x: &Generator) -> Prolonged {
    let mut p = Prolonged::new(x);
    p.fill(2);
    p
}

/// Recursive prolongation formula `η_{J,a} = D_a η_J − Σ_s (D_a ξ^s) u_{J,s}`
/// (with `s` ranging over time and space). Used as an independent check.
pub fn prolong_recursive(x: &Generator, jet: &Expr) -> Expr {
    let sp = &x.space;
    let (k, node) = sp.as_jet(jet).expect("jet coordinate");
    let field = &sp.fields[k];
    let mut cur_orders: Vec<(Symbol, u32)> = Vec::new();
    let mut eta = x.eta[k].clone();
    let mut vars: Vec<(Symbol, Expr)> = sp.coords.iter().cloned().zip(x.xi.iter().cloned()).collect();
    if let Some(t) = &sp.time {
        vars.push((t.clone(), x.xi_t.clone()));
    }
    for (a, o) in sp.multi_index(k, node) {
        for _ in 0..o {
            let mut terms = alloc::vec![diff(&eta, &a)];
            for (s, xs) in &vars {
                let mut bumped = cur_orders.clone();
                bumped.push((s.clone(), 1));
                terms.push(-(diff(xs, &a) * field.jet(&bumped)));
            }
            eta = simplify(&Expr::sum(terms));
            cur_orders.push((a.clone(), 1));
        }
    }
    eta
}

/// Linearized condition `X^(2) Δ` for every residual of the system, before
/// on-shell substitution.
pub fn apply_prolonged(px: &mut Prolonged, system: &PdeSystem) -> Vec<Expr> {
    system.residuals.iter().map(|r| px.apply(r)).collect()
}

/// Per-residual outcome of a symmetry check.
#[derive(Clone, Debug)]
pub struct EntryVerdict {
    pub label: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct SymmetryReport {
    pub system: String,
    pub entries: Vec<EntryVerdict>,
}

impl SymmetryReport {
    pub fn is_symmetry(&self) -> bool {
        self.entries.iter().all(|e| e.verdict.is_zero())
    }

    /// First nonzero entry, if any.
    pub fn witness(&self) -> Option<&EntryVerdict> {
        self.entries.iter().find(|e| !e.verdict.is_zero())
    }
}

/// On-shell linearized conditions `X^(2) Δ |_{Δ=0}`, unsimplified.
pub fn linearized_on_shell(x: &Generator, system: &PdeSystem) -> Result<Vec<Expr>, LieError> {
    if x.space != system.space {
        return Err(LieError::SpaceMismatch);
    }
    let mut px = Prolonged::new(x);
    apply_prolonged(&mut px, system)
        .iter()
        .map(|e| system.on_shell(e).map_err(|e| LieError::Flow(FlowError::Jet(e))))
        .collect()
}

/// Infinitesimal criterion: every `X^(2) Δ` vanishes on solutions.
///
/// When the system has constraints besides its evolution equations, the
/// conditions are only required to vanish where the constraints hold; they
/// are then probed numerically at points of that variety (see
/// [`probe_on_variety`]).
pub fn check_symmetry(x: &Generator, system: &PdeSystem, tester: &ZeroTester) -> Result<SymmetryReport, LieError> {
    let conds = linearized_on_shell(x, system)?;
    let constraint_idx = system.constraints();
    let verdicts = if constraint_idx.is_empty() {
        conds.iter().map(|c| tester.test(c)).collect()
    } else {
        let constraints = constraint_idx
            .iter()
            .map(|&i| system.on_shell(&system.residuals[i]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| LieError::Flow(FlowError::Jet(e)))?;
        probe_on_variety(&system.space, &conds, &constraints, tester)
    };
    let entries = verdicts
        .into_iter()
        .zip(&system.labels)
        .map(|(verdict, l)| EntryVerdict { label: l.clone(), verdict })
        .collect();
    Ok(SymmetryReport { system: system.name.clone(), entries })
}

/// Evaluate `conditions` at seeded random points where every constraint
/// vanishes. Points are found by drawing all atoms at random and then
/// solving the constraints for their highest-order spatial jets by Newton
/// steps.
pub fn probe_on_variety(space: &JetSpace, conditions: &[Expr], constraints: &[Expr], tester: &ZeroTester) -> Vec<Verdict> {
    use crate::expr::{diff_atom, eval_with_scale, Assignment};
    use rand::{Rng, SeedableRng};

    let mut atoms: Vec<Expr> = Vec::new();
    for e in conditions.iter().chain(constraints) {
        for a in e.atoms() {
            if !atoms.contains(&a) {
                atoms.push(a);
            }
        }
    }
    let spatial = |f: &Expr| -> Option<u32> {
        let (k, node) = space.as_jet(f)?;
        (space.time_order(k, node) == 0).then(|| node.total_order())
    };
    let top = constraints.iter().flat_map(|c| c.functions()).filter_map(|f| spatial(&f)).max().unwrap_or(0);
    let mut unknowns: Vec<Expr> = Vec::new();
    for c in constraints {
        for f in c.functions() {
            if top > 0 && spatial(&f) == Some(top) && !unknowns.contains(&f) {
                unknowns.push(f);
            }
        }
    }
    let jac: Vec<Vec<Expr>> = constraints.iter().map(|c| unknowns.iter().map(|u| diff_atom(c, u)).collect()).collect();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(tester.seed);
    let mut results: Vec<Option<Verdict>> = alloc::vec![None; conditions.len()];
    let mut max_abs = alloc::vec![0.0f64; conditions.len()];
    let mut done = 0;
    let mut redraws = 0;
    while done < tester.points && redraws <= tester.max_redraws {
        let mut a = Assignment::new();
        for atom in &atoms {
            a.insert(atom.clone(), rng.gen_range(tester.range.0..tester.range.1));
        }
        if newton_onto(&mut a, constraints, &jac, &unknowns) != Some(true) {
            redraws += 1;
            continue;
        }
        let Ok(vals) = conditions.iter().map(|e| eval_with_scale(e, &a)).collect::<Result<Vec<_>, _>>() else {
            redraws += 1;
            continue;
        };
        for (i, (v, s)) in vals.into_iter().enumerate() {
            if results[i].is_some() {
                continue;
            }
            if libm::fabs(v) > tester.tolerance * s.max(1.0) {
                results[i] = Some(Verdict::NonZero { witness: a.clone(), value: v, note: None });
            } else {
                max_abs[i] = max_abs[i].max(libm::fabs(v));
            }
        }
        done += 1;
    }
    results
        .into_iter()
        .zip(max_abs)
        .map(|(r, m)| match r {
            Some(v) => v,
            None if done == tester.points => Verdict::ZeroProbabilistic { points: done, max_abs: m },
            None => Verdict::NonZero {
                witness: Default::default(),
                value: f64::NAN,
                note: Some(String::from("indeterminate: no points found on the constraint variety")),
            },
        })
        .collect()
}

fn newton_onto(a: &mut crate::expr::Assignment, constraints: &[Expr], jac: &[Vec<Expr>], unknowns: &[Expr]) -> Option<bool> {
    use crate::expr::eval_with_scale;
    for _ in 0..12 {
        let mut worst = 0.0f64;
        let mut c = Vec::with_capacity(constraints.len());
        for e in constraints {
            let (v, s) = eval_with_scale(e, a).ok()?;
            worst = worst.max(libm::fabs(v) / s.max(1.0));
            c.push(v);
        }
        if worst < 1e-13 {
            return Some(true);
        }
        let mut m = Vec::with_capacity(jac.len());
        for row in jac {
            let mut r = Vec::with_capacity(row.len());
            for d in row {
                r.push(eval_with_scale(d, a).ok()?.0);
            }
            m.push(r);
        }
        let step = solve_min(&m, &c)?;
        for (u, d) in unknowns.iter().zip(step) {
            *a.get_mut(u)? -= d;
        }
    }
    Some(false)
}

/// Numerical rank with relative threshold `1e-9`.
pub(crate) fn numeric_rank(m: &[Vec<f64>]) -> usize {
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(libm::fabs(*v)));
    if scale == 0.0 {
        return 0;
    }
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for j in 0..cols {
        let Some((pi, pv)) = a.iter().enumerate().skip(rank).map(|(i, r)| (i, libm::fabs(r[j]))).max_by(|x, y| x.1.total_cmp(&y.1))
        else {
            break;
        };
        if pv <= 1e-9 * scale {
            continue;
        }
        a.swap(rank, pi);
        let pivot = a[rank].clone();
        for row in a.iter_mut().skip(rank + 1) {
            let f = row[j] / pivot[j];
            for (x, p) in row.iter_mut().zip(&pivot) {
                *x -= f * p;
            }
        }
        rank += 1;
    }
    rank
}

/// Solve `m x = c` by elimination with full pivoting, setting free
/// unknowns to zero. `None` if the system is inconsistent.
fn solve_min(m: &[Vec<f64>], c: &[f64]) -> Option<Vec<f64>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut b: Vec<f64> = c.to_vec();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(libm::fabs(*v)));
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut used = alloc::vec![false; cols];
    let mut r = 0;
    while r < rows {
        let mut best = (0.0, 0, 0);
        for (i, row) in a.iter().enumerate().skip(r) {
            for (j, v) in row.iter().enumerate() {
                if !used[j] && libm::fabs(*v) > best.0 {
                    best = (libm::fabs(*v), i, j);
                }
            }
        }
        if best.0 <= 1e-12 * scale || best.0 == 0.0 {
            break;
        }
        let (_, pi, pj) = best;
        a.swap(r, pi);
        b.swap(r, pi);
        used[pj] = true;
        let pivot_row = a[r].clone();
        let pivot_b = b[r];
        for i in 0..rows {
            if i != r {
                let f = a[i][pj] / pivot_row[pj];
                if f != 0.0 {
                    for (x, p) in a[i].iter_mut().zip(&pivot_row) {
                        *x -= f * p;
                    }
                    b[i] -= f * pivot_b;
                }
            }
        }
        pivot_cols.push(pj);
        r += 1;
    }
    let bscale = c.iter().fold(0.0f64, |s, v| s.max(libm::fabs(*v)));
    if b[r..].iter().any(|v| libm::fabs(*v) > 1e-9 * bscale && libm::fabs(*v) > 1e-13) {
        return None;
    }
    let mut x = alloc::vec![0.0; cols];
    for (i, &j) in pivot_cols.iter().enumerate() {
        x[j] = b[i] / a[i][j];
    }
    Some(x)
}

/// Default bound on the dimension for generic-metric computations.
pub const MAX_DIM: usize = 4;

fn metric_space(n: usize) -> JetSpace {
    let chart = Chart::standard(n);
    let all = chart.all_variables();
    let mut fields = Vec::new();
    for i in 0..n {
        for j in i..n {
            fields.push(Field::new(&generic_name(i, j), &all));
        }
    }
    JetSpace::new(chart.coords.clone(), chart.time.clone(), fields)
}

/// Jet space of the generic metric `g_ij(x1..xn, t)`, fields in
/// upper-triangle order.
pub fn metric_jet_space(n: usize) -> JetSpace {
    metric_space(n)
}

/// `∂_t`.
pub fn time_translation(n: usize) -> Generator {
    let mut g = Generator::zero(metric_space(n));
    g.xi_t = Expr::one();
    g
}

/// `t ∂_t + Σ g_ij ∂_{g_ij}`.
pub fn scaling(n: usize) -> Generator {
    let sp = metric_space(n);
    let eta = sp.fields.iter().map(Field::expr).collect();
    let t = Expr::symbol(sp.time.clone().expect("time"));
    Generator { xi: alloc::vec![Expr::zero(); n], space: sp, xi_t: t, eta }
}

/// `Σ ξ^k ∂_k − Σ_{i≤j} (g_ki ∂_j ξ^k + g_kj ∂_i ξ^k) ∂_{g_ij}` for a vector
/// field `ξ(x)`.
pub fn diffeomorphism(n: usize, xi: &[Expr]) -> Result<Generator, LieError> {
    if xi.len() != n {
        return Err(LieError::Arity { expected: n, found: xi.len() });
    }
    let sp = metric_space(n);
    let t = sp.time.clone().expect("time");
    for (k, c) in xi.iter().enumerate() {
        if c.contains_symbol(&t) {
            return Err(LieError::BadDependency { component: format!("xi{}", k + 1), var: String::from(t.as_str()) });
        }
        let uses_field = c.functions().into_iter().filter_map(|f| f.as_fun().map(|n| n.name.clone())).find(|nm| sp.fields.iter().any(|fd| &fd.name == nm));
        if let Some(f) = uses_field {
            return Err(LieError::BadDependency { component: format!("xi{}", k + 1), var: String::from(f.as_str()) });
        }
    }
    let g = |i: usize, j: usize| sp.fields[field_index(n, i, j)].expr();
    let mut eta = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut terms = Vec::new();
            for (k, xk) in xi.iter().enumerate() {
                terms.push(g(k, i) * diff(xk, &sp.coords[j]));
                terms.push(g(k, j) * diff(xk, &sp.coords[i]));
            }
            eta.push(simplify(&-Expr::sum(terms)));
        }
    }
    Ok(Generator { space: sp, xi_t: Expr::zero(), xi: xi.to_vec(), eta })
}

/// Position of `g_ij` in upper-triangle order.
pub fn field_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// `[X_1, X_2, X_ξ]`: time translation, scaling, and the diffeomorphism
/// generator of `ξ`.
pub fn flow_family_generators(n: usize, xi: &[Expr]) -> Result<Vec<Generator>, LieError> {
    Ok(alloc::vec![time_translation(n), scaling(n), diffeomorphism(n, xi)?])
}

/// Symmetry check against the Ricci flow of the generic metric.
pub fn check_flow_symmetry(x: &Generator, flow: &FlowSystem, tester: &ZeroTester) -> Result<SymmetryReport, LieError> {
    check_symmetry(x, &flow.pde, tester)
}

/// Replace field nodes by plain symbols so that components become functions
/// on `(t, x, u)`-space.
struct Freezer {
    to_sym: Bindings,
    back: Bindings,
    syms: Vec<Symbol>,
}

impl Freezer {
    fn new(space: &JetSpace) -> Self {
        let mut to_sym = Bindings::new();
        let mut back = Bindings::new();
        let mut syms = Vec::new();
        for f in &space.fields {
            let s = Symbol::new(&format!("{}'", f.name));
            to_sym.bind(f.expr(), Expr::symbol(s.clone())).expect("distinct fields");
            back.bind(Expr::symbol(s.clone()), f.expr()).expect("distinct fields");
            syms.push(s);
        }
        Freezer { to_sym, back, syms }
    }

    fn freeze(&self, e: &Expr) -> Expr {
        substitute_raw(e, &self.to_sym).expect("atom bindings")
    }

    fn thaw(&self, e: &Expr) -> Expr {
        substitute_raw(e, &self.back).expect("atom bindings")
    }
}

/// `X(f)` for a frozen point function `f`.
fn act(x: &[Expr], vars: &[Symbol], f: &Expr) -> Expr {
    Expr::sum(x.iter().zip(vars).map(|(c, v)| c.clone() * diff(f, v)))
}

/// Lie bracket `[X, Y]` of vector fields on `(t, x, u)`-space.
pub fn commutator(x: &Generator, y: &Generator) -> Result<Generator, LieError> {
    if x.space != y.space {
        return Err(LieError::SpaceMismatch);
    }
    let sp = &x.space;
    let fr = Freezer::new(sp);
    let mut vars: Vec<Symbol> = Vec::new();
    vars.push(sp.time.clone().unwrap_or_else(|| Symbol::new("t'")));
    vars.extend(sp.coords.iter().cloned());
    vars.extend(fr.syms.iter().cloned());
    let xs: Vec<Expr> = x.component_list().iter().map(|e| fr.freeze(e)).collect();
    let ys: Vec<Expr> = y.component_list().iter().map(|e| fr.freeze(e)).collect();
    let out = xs
        .iter()
        .zip(&ys)
        .map(|(xc, yc)| simplify(&fr.thaw(&(act(&xs, &vars, yc) - act(&ys, &vars, xc)))))
        .collect();
    Ok(Generator::from_component_list(sp.clone(), out))
}

/// Jet-order family of a determining-system monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Family {
    pub time_first: u32,
    pub first: u32,
    pub second: u32,
}

impl Family {
    pub fn name(&self) -> String {
        let mut parts = Vec::new();
        let rep = |s: &str, k: u32| -> String { (0..k).map(|_| s).collect() };
        if self.time_first > 0 {
            parts.push(rep("∂_t g", self.time_first));
        }
        if self.first > 0 {
            parts.push(rep("∂g", self.first));
        }
        if self.second > 0 {
            parts.push(rep("∂∂g", self.second));
        }
        if parts.is_empty() {
            return String::from("no-derivative terms");
        }
        format!("{} terms", parts.join(" "))
    }
}

/// Coefficients of the linearized condition, one list per residual entry.
#[derive(Clone, Debug)]
pub struct DeterminingSystem {
    pub n: usize,
    pub on_shell: bool,
    /// `(entry label, monomial, family, coefficient)`.
    pub equations: Vec<(String, MonomialKey, Family, Expr)>,
    /// The generic generator the system was derived from.
    pub generator: Generator,
}

impl DeterminingSystem {
    pub fn families(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for (_, _, f, _) in &self.equations {
            *m.entry(f.name()).or_insert(0) += 1;
        }
        m
    }

    pub fn family(&self, name: &str) -> Vec<&(String, MonomialKey, Family, Expr)> {
        self.equations.iter().filter(|e| e.2.name() == name).collect()
    }

    /// Bindings replacing the generic component functions by the
    /// components of `x` (expressed with field nodes).
    pub fn bindings_for(&self, x: &Generator) -> Bindings {
        let n = self.n;
        let sp = &self.generator.space;
        let mut params: Vec<Symbol> = Vec::new();
        params.push(sp.time.clone().expect("time"));
        params.extend(sp.coords.iter().cloned());
        let gsyms: Vec<Symbol> = sp.fields.iter().map(|f| Symbol::new(&format!("{}'", f.name))).collect();
        params.extend(gsyms.iter().cloned());
        let fr = Freezer::new(sp);
        let mut b = Bindings::new();
        let names = component_names(n);
        for (name, c) in names.iter().zip(x.component_list()) {
            b.bind_function(name, &params, fr.freeze(&c)).expect("distinct names");
        }
        b
    }

    /// Zero test of every coefficient after substituting `x`.
    pub fn evaluate(&self, x: &Generator, tester: &ZeroTester) -> Vec<(String, MonomialKey, Verdict)> {
        let b = self.bindings_for(x);
        self.equations
            .iter()
            .map(|(l, k, _, c)| (l.clone(), k.clone(), tester.test(&substitute_raw(c, &b).expect("function bindings"))))
            .collect()
    }
}

fn component_names(n: usize) -> Vec<String> {
    let mut v = alloc::vec![String::from("tau")];
    for k in 0..n {
        v.push(format!("xi{}", k + 1));
    }
    for i in 0..n {
        for j in i..n {
            v.push(format!("eta{}{}", i + 1, j + 1));
        }
    }
    v
}

/// The generator whose components are unknown functions of
/// `(t, x, g)`: `tau`, `xi1..xin`, `eta11..`.
pub fn generic_generator(n: usize) -> Generator {
    let sp = metric_space(n);
    let mut args: Vec<Expr> = Vec::new();
    args.push(Expr::symbol(sp.time.clone().expect("time")));
    args.extend(sp.coords.iter().cloned().map(Expr::symbol));
    args.extend(sp.fields.iter().map(Field::expr));
    let comps = component_names(n).iter().map(|nm| Expr::fun(nm.as_str(), args.clone())).collect();
    Generator::from_component_list(sp, comps)
}

/// Determining equations of the flow in dimension `n`: the linearized
/// condition for the generic generator, optionally reduced on-shell, split
/// into coefficients of monomials in the jet coordinates.
pub fn determining_monomial_system(n: usize, on_shell: bool) -> Result<DeterminingSystem, LieError> {
    determining_monomial_system_bounded(n, on_shell, MAX_DIM)
}

pub fn determining_monomial_system_bounded(n: usize, on_shell: bool, bound: usize) -> Result<DeterminingSystem, LieError> {
    if n > bound {
        return Err(LieError::TooLarge(n, bound));
    }
    let flow = FlowSystem::generic(n)?;
    let x = generic_generator(n);
    let mut px = Prolonged::new(&x);
    let conds = apply_prolonged(&mut px, &flow.pde);
    let sp = &flow.pde.space;
    let mut vars = sp.jets(2, true);
    if !on_shell {
        let t = sp.time.clone().expect("time");
        vars.extend(sp.fields.iter().map(|f| f.jet(&[(t.clone(), 1)])));
    }
    let mut equations = Vec::new();
    for (c, label) in conds.iter().zip(&flow.pde.labels) {
        let c = if on_shell { flow.on_shell(c)? } else { c.clone() };
        let c = simplify(&c);
        let coeffs = collect_monomials(&c, &vars).map_err(|e| LieError::NotPoint(format!("{e}")))?;
        for (key, coeff) in coeffs {
            let mut fam = Family { time_first: 0, first: 0, second: 0 };
            for (base, exp) in &key.0 {
                let k = exp.as_num().and_then(|r| num_traits::ToPrimitive::to_u32(&r.to_integer())).unwrap_or(1);
                let (fi, node) = sp.as_jet(base).expect("jet variable");
                if sp.time_order(fi, node) > 0 {
                    fam.time_first += k;
                } else if node.total_order() == 1 {
                    fam.first += k;
                } else {
                    fam.second += k;
                }
            }
            equations.push((label.clone(), key, fam, coeff));
        }
    }
    Ok(DeterminingSystem { n, on_shell, equations, generator: x })
}

/// Flow system on the generic metric family of dimension `n`.
pub fn generic_flow(n: usize) -> Result<FlowSystem, LieError> {
    Ok(FlowSystem::new(MetricFamily::generic(Chart::standard(n)))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn characteristic_examples() {
        let q = characteristic(&time_translation(2));
        assert_eq!(q[0], simplify(&-p("D(g11(x1,x2,t),t)")));
        let x = Symbol::new("x");
        let sp = JetSpace::new(alloc::vec![x.clone()], None, alloc::vec![Field::new("u", &[x])]);
        let g = Generator::new(sp, Expr::zero(), alloc::vec![p("x")], alloc::vec![Expr::zero()]).unwrap();
        assert_eq!(characteristic(&g)[0], simplify(&p("-x*D(u(x),x)")));
    }

    #[test]
    fn flow_family_components() {
        let gens = flow_family_generators(2, &[Expr::one(), Expr::zero()]).unwrap();
        assert!(gens[2].eta.iter().all(Expr::is_zero));
        assert_eq!(gens[1].eta[1], p("g12(x1,x2,t)"));
        let rot = diffeomorphism(3, &[p("x2"), p("-x1"), Expr::zero()]).unwrap();
        // η_11 = −2 g_k1 ∂_1 ξ^k = 2 g12
        assert_eq!(rot.eta[field_index(3, 0, 0)], simplify(&p("2*g12(x1,x2,x3,t)")));
        assert_eq!(rot.eta[field_index(3, 1, 1)], simplify(&p("-2*g12(x1,x2,x3,t)")));
        assert_eq!(rot.eta[field_index(3, 0, 1)], simplify(&p("g22(x1,x2,x3,t) - g11(x1,x2,x3,t)")));
        assert!(diffeomorphism(2, &[p("t"), Expr::zero()]).is_err());
        assert!(diffeomorphism(2, &[p("g11(x1,x2,t)"), Expr::zero()]).is_err());
    }

    #[test]
    fn prolongation_of_time_translation_vanishes() {
        let mut px = prolong2(&time_translation(2));
        let jets = px.generator.space.jets(2, false);
        for j in jets {
            assert!(px.coefficient(&j).is_zero(), "{j}");
        }
    }

    #[test]
    fn scaling_time_coefficient() {
        let mut px = prolong2(&scaling(2));
        let j = p("D(g11(x1,x2,t),t)");
        // D_t(g − t g_t) + t g_tt = g_t − g_t = 0
        assert!(px.coefficient(&j).is_zero());
        let jx = p("D(g11(x1,x2,t),x1)");
        assert_eq!(px.coefficient(&jx), jx);
    }

    #[test]
    fn symmetry_checks_in_two_dimensions() {
        let flow = generic_flow(2).unwrap();
        let tester = ZeroTester::default();
        for g in flow_family_generators(2, &[p("x2"), p("-x1")]).unwrap() {
            let r = check_flow_symmetry(&g, &flow, &tester).unwrap();
            assert!(r.is_symmetry(), "{:?}", r.witness());
        }
        let mut bad = Generator::zero(metric_jet_space(2));
        bad.xi_t = p("t");
        let r = check_flow_symmetry(&bad, &flow, &tester).unwrap();
        assert!(!r.is_symmetry());
    }

    #[test]
    fn brackets() {
        let x1 = time_translation(2);
        let x2 = scaling(2);
        assert!(commutator(&x1, &x2).unwrap().canonically_equal(&x1));
        let xi = diffeomorphism(2, &[p("x1"), Expr::zero()]).unwrap();
        let zeta = diffeomorphism(2, &[Expr::zero(), p("x1")]).unwrap();
        assert!(commutator(&x1, &xi).unwrap().canonically_equal(&Generator::zero(metric_jet_space(2))));
        // [ξ, ζ] = ξ(ζ) − ζ(ξ) = (0, x1)
        let want = diffeomorphism(2, &[Expr::zero(), p("x1")]).unwrap();
        assert!(commutator(&xi, &zeta).unwrap().canonically_equal(&want));
    }
}
