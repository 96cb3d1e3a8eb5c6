//! Floating-point cross-checks: closed-form residuals on grids and finite
//! differences against symbolic derivatives.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{diff, eval, random::{random_polynomial, random_smooth}, simplify, substitute_raw, Assignment, Bindings, Expr, Symbol};
use crate::geometry::{Chart, MetricFamily, SymMatrix};
use crate::reduce::{ClosedFormSolution, ReduceError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("grid point s={s}, t={t} is within {radius} of a singularity ({what})")]
    Domain { s: f64, t: f64, radius: f64, what: String },
    #[error("evaluation failed at s={s}, t={t}: {msg}")]
    Eval { s: f64, t: f64, msg: String },
    #[error("grid needs at least one point in each direction")]
    Empty,
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

/// Tensor grid in `(s, t)` with fixed parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub s: (f64, f64),
    pub s_count: usize,
    pub t: (f64, f64),
    pub t_count: usize,
    /// Values for `k`, `m`, `p`, `q`.
    pub params: Vec<(String, f64)>,
    /// Minimum allowed distance of the time factor and of every profile
    /// from zero.
    pub exclusion: f64,
}

impl Grid {
    /// `s ∈ [0.2, 2]`, `t ∈ [0, 0.4]`, 50 × 20 points.
    pub fn canonical(params: &[(&str, f64)]) -> Self {
        Grid {
            s: (0.2, 2.0),
            s_count: 50,
            t: (0.0, 0.4),
            t_count: 20,
            params: params.iter().map(|(n, v)| (String::from(*n), *v)).collect(),
            exclusion: 1e-3,
        }
    }

    fn axis(range: (f64, f64), count: usize, i: usize) -> f64 {
        if count == 1 {
            return range.0;
        }
        range.0 + (range.1 - range.0) * (i as f64) / ((count - 1) as f64)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.s_count)
            .flat_map(move |i| (0..self.t_count).map(move |j| (Self::axis(self.s, self.s_count, i), Self::axis(self.t, self.t_count, j))))
    }

    fn bindings(&self) -> Bindings {
        let mut b = Bindings::new();
        for (n, v) in &self.params {
            b.bind_symbol(n, float_expr(*v)).expect("distinct parameter names");
        }
        b
    }
}

/// Exact rational for a float with a short decimal expansion.
fn float_expr(v: f64) -> Expr {
    let scaled = libm::round(v * 1e6);
    Expr::rational(scaled as i64, 1_000_000)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridReport {
    pub solution: String,
    pub grid: Grid,
    pub max_abs: f64,
    /// `(s, t, entry label)` of the largest residual.
    pub argmax: (f64, f64, String),
    pub seed: u64,
}

/// Seed recorded in grid reports; grid evaluation itself is deterministic.
pub const GRID_SEED: u64 = 0x5eed_2024;

/// Maximum of `|∂_t g + 2 Ric|` over the grid, every entry evaluated from
/// its exact symbolic form.
pub fn grid_residual(sol: &ClosedFormSolution, grid: &Grid) -> Result<GridReport, NumericsError> {
    if grid.s_count == 0 || grid.t_count == 0 {
        return Err(NumericsError::Empty);
    }
    let b = grid.bindings();
    // No simplification: the tree is evaluated as built.
    let fix = |e: &Expr| substitute_raw(e, &b).expect("symbol bindings");
    let residual: Vec<Expr> = sol.flow_residual()?.iter().map(fix).collect();
    let mut guards = alloc::vec![(String::from("time factor"), fix(&sol.time_factor))];
    for (name, g) in &sol.profiles {
        guards.push((format!("profile {name}"), fix(g)));
    }
    let labels: Vec<String> =
        (0..residual.len()).map(|i| if i == 0 { String::from("ds^2") } else { format!("fiber {i}") }).collect();
    let (ss, ts) = (Expr::sym("s"), Expr::sym("t"));
    let mut max_abs = 0.0f64;
    let mut argmax = (grid.s.0, grid.t.0, labels[0].clone());
    for (s, t) in grid.points() {
        let mut a = Assignment::new();
        a.insert(ss.clone(), s);
        a.insert(ts.clone(), t);
        for (what, g) in &guards {
            let v = eval(g, &a).map_err(|e| NumericsError::Eval { s, t, msg: format!("{e}") })?;
            if !(libm::fabs(v) >= grid.exclusion) {
                return Err(NumericsError::Domain { s, t, radius: grid.exclusion, what: what.clone() });
            }
        }
        for (e, label) in residual.iter().zip(&labels) {
            let v = eval(e, &a).map_err(|e| NumericsError::Eval { s, t, msg: format!("{e}") })?;
            if !v.is_finite() {
                return Err(NumericsError::Eval { s, t, msg: String::from("non-finite residual") });
            }
            if libm::fabs(v) > max_abs {
                max_abs = libm::fabs(v);
                argmax = (s, t, label.clone());
            }
        }
    }
    Ok(GridReport { solution: sol.name.clone(), grid: grid.clone(), max_abs, argmax, seed: GRID_SEED })
}

/// Step of the central differences.
pub const FD_STEP: f64 = 1e-5;
/// Allowed `|fd − exact| / max(1, |exact|)`.
pub const FD_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct FdVariable {
    pub var: Symbol,
    pub trials: usize,
    pub passed: usize,
    pub worst: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub per_variable: Vec<FdVariable>,
    /// Trials skipped because the expression could not be evaluated.
    pub skipped: usize,
    pub seed: u64,
}

impl FdReport {
    pub fn pass_rate(&self) -> f64 {
        let (t, p) = self.per_variable.iter().fold((0, 0), |(t, p), v| (t + v.trials, p + v.passed));
        if t == 0 {
            return 1.0;
        }
        p as f64 / t as f64
    }
}

/// Compare symbolic partial derivatives with central differences at seeded
/// random points in `(0.2, 1.7)` for every symbol. Points where `e` or its
/// derivative cannot be evaluated are skipped, not failed.
pub fn fd_cross_check(e: &Expr, vars: &[Symbol], trials: usize, seed: u64) -> FdReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let syms = e.symbols();
    let derivs: Vec<Expr> = vars.iter().map(|v| simplify(&diff(e, v))).collect();
    let mut per_variable: Vec<FdVariable> =
        vars.iter().map(|v| FdVariable { var: v.clone(), trials: 0, passed: 0, worst: 0.0 }).collect();
    let mut skipped = 0;
    for _ in 0..trials {
        let mut a = Assignment::new();
        for s in &syms {
            a.insert(Expr::symbol(s.clone()), rng.gen_range(0.2..1.7));
        }
        for (i, v) in vars.iter().enumerate() {
            match fd_one(e, &derivs[i], v, &a) {
                Some(err) => {
                    let slot = &mut per_variable[i];
                    slot.trials += 1;
                    if err < FD_TOLERANCE {
                        slot.passed += 1;
                    }
                    slot.worst = slot.worst.max(err);
                }
                None => skipped += 1,
            }
        }
    }
    FdReport { per_variable, skipped, seed }
}

fn fd_one(e: &Expr, d: &Expr, v: &Symbol, a: &Assignment) -> Option<f64> {
    let key = Expr::symbol(v.clone());
    let x0 = a.get(&key).copied().unwrap_or(0.5);
    let mut a = a.clone();
    a.insert(key.clone(), x0);
    let exact = eval(d, &a).ok()?;
    a.insert(key.clone(), x0 + FD_STEP);
    let up = eval(e, &a).ok()?;
    a.insert(key, x0 - FD_STEP);
    let down = eval(e, &a).ok()?;
    let fd = (up - down) / (2.0 * FD_STEP);
    if !(fd.is_finite() && exact.is_finite()) {
        return None;
    }
    Some(libm::fabs(fd - exact) / libm::fabs(exact).max(1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdSuiteReport {
    pub cases: usize,
    pub passed: usize,
    pub skipped: usize,
    pub seed: u64,
}

impl FdSuiteReport {
    pub fn pass_rate(&self) -> f64 {
        if self.cases == 0 {
            return 1.0;
        }
        self.passed as f64 / self.cases as f64
    }
}

/// One random smooth expression in `x, y` per case, one point each; a case
/// passes when both partial derivatives match.
pub fn fd_suite(cases: usize, seed: u64) -> FdSuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = [Symbol::new("x"), Symbol::new("y")];
    let mut passed = 0;
    let mut skipped = 0;
    for _ in 0..cases {
        let e = random_smooth(&mut rng, &vars, 4);
        let r = fd_cross_check(&e, &vars, 1, rng.gen());
        skipped += r.skipped;
        if r.per_variable.iter().all(|v| v.passed == v.trials) {
            passed += 1;
        }
    }
    FdSuiteReport { cases, passed, skipped, seed }
}

/// Seeded metric with rational entries on `x1..xn`: diagonal entries
/// `1 + P_i²` with small polynomials `P_i`, off-diagonal entries
/// `Q / (2 + x1²)` with `Q` linear, so the matrix is generically invertible.
pub fn random_rational_metric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> MetricFamily {
    let chart = Chart::standard(n);
    let syms = chart.coords.clone();
    let den = Expr::int(2) + Expr::powi(Expr::symbol(syms[0].clone()), 2);
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let e = if i == j {
                Expr::one() + Expr::powi(random_polynomial(rng, &syms, 2, 2), 2)
            } else {
                random_polynomial(rng, &syms, 1, 2) / den.clone()
            };
            m.set(i, j, e);
        }
    }
    MetricFamily::new(Chart::new(&syms.iter().map(Symbol::as_str).collect::<Vec<_>>(), None), m, Vec::new())
        .expect("square metric")
}

/// Every vector field on `x1..xn` with a single monomial of total degree at
/// most `degree` in a single component, in a fixed order.
pub fn polynomial_vector_fields(n: usize, degree: u32) -> Vec<Vec<Expr>> {
    let xs: Vec<Expr> = (1..=n).map(|i| Expr::sym(&format!("x{i}"))).collect();
    let mut monomials = alloc::vec![Expr::one()];
    let mut last = alloc::vec![(Expr::one(), 0usize)];
    for _ in 0..degree {
        let mut next = Vec::new();
        for (m, from) in &last {
            for (k, x) in xs.iter().enumerate().skip(*from) {
                next.push((simplify(&(m.clone() * x.clone())), k));
            }
        }
        monomials.extend(next.iter().map(|(m, _)| m.clone()));
        last = next;
    }
    let mut out = Vec::new();
    for c in 0..n {
        for m in &monomials {
            let mut v = alloc::vec![Expr::zero(); n];
            v[c] = m.clone();
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::reduce::solution;

    #[test]
    fn finite_differences_agree() {
        let e = parse("sinh(sqrt(k/m)*s)^2").unwrap();
        let r = fd_cross_check(&e, &[Symbol::new("s")], 200, 7);
        assert_eq!(r.pass_rate(), 1.0, "{r:?}");
        let e = parse("(1+2*k*t)^(-1/2)").unwrap();
        assert_eq!(fd_cross_check(&e, &[Symbol::new("t")], 200, 7).pass_rate(), 1.0);
    }

    #[test]
    fn vector_field_basis_sizes() {
        assert_eq!(polynomial_vector_fields(2, 2).len(), 12);
        assert_eq!(polynomial_vector_fields(3, 1).len(), 12);
    }

    #[test]
    fn hyperbolic_grid() {
        let sol = solution("warped_hyperbolic").unwrap();
        let r = grid_residual(&sol, &Grid::canonical(&[("k", 1.0), ("m", 2.0)])).unwrap();
        assert!(r.max_abs < 1e-10, "{r:?}");
    }

    #[test]
    fn singular_grid_rejected() {
        let sol = solution("warped_spherical").unwrap();
        let mut g = Grid::canonical(&[("k", 1.0), ("m", 2.0)]);
        g.t = (0.0, 0.5);
        assert!(matches!(grid_residual(&sol, &g), Err(NumericsError::Domain { .. })));
    }
}
