//! JSON input documents: metric specs and generator files.

use std::collections::BTreeMap;

use riccisym::expr::parse;
use riccisym::flow::FlowSystem;
use riccisym::geometry::{Chart, FieldDecl, MetricFamily, SymMatrix};
use riccisym::jet::{JetSpace, PdeSystem};
use riccisym::lie::{metric_jet_space, Generator};
use riccisym::restrict::{ansatz, Ansatz, FiberBlock};
use riccisym::{Expr, Symbol};
use serde::{Deserialize, Serialize};

use crate::InputError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coords: Vec<String>,
    #[serde(default)]
    pub time: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    pub args: Vec<String>,
}

/// A number or an expression string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Text(String),
}

impl Scalar {
    fn expr(&self, what: &str) -> Result<Expr, InputError> {
        match self {
            Scalar::Int(n) => Ok(Expr::int(*n)),
            Scalar::Text(s) => parse_expr(s, what),
        }
    }
}

/// Warped fiber `warp² · h` with `Ric(h) = einstein_constant · h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub dimension: Scalar,
    pub einstein_constant: Scalar,
    pub warp: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub chart: ChartSpec,
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
    /// `"i,j"` (1-based, `i ≤ j`) to expression; missing entries are zero.
    pub metric: BTreeMap<String, String>,
    /// Library ansatz whose reduced system replaces the one built from
    /// `metric` in symmetry checks.
    #[serde(default)]
    pub ansatz: Option<String>,
    #[serde(default)]
    pub fiber: Option<FiberSpec>,
}

fn parse_expr(s: &str, what: &str) -> Result<Expr, InputError> {
    parse(s).map_err(|e| InputError(format!("{what}: cannot parse {s:?}: {e}")))
}

fn index_pair(key: &str, n: usize) -> Result<(usize, usize), InputError> {
    let bad = || InputError(format!("metric key {key:?} is not \"i,j\" with 1 <= i <= j <= {n}"));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    let i: usize = a.trim().parse().map_err(|_| bad())?;
    let j: usize = b.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 || i > j || j > n {
        return Err(bad());
    }
    Ok((i - 1, j - 1))
}

impl MetricSpec {
    pub fn from_json(src: &str) -> Result<Self, InputError> {
        serde_json::from_str(src).map_err(|e| InputError(format!("metric spec: {e}")))
    }

    pub fn load(path: &str) -> Result<Self, InputError> {
        Self::from_json(&crate::read_file(path)?)
    }

    pub fn family(&self) -> Result<MetricFamily, InputError> {
        let coords: Vec<&str> = self.chart.coords.iter().map(String::as_str).collect();
        let chart = Chart::new(&coords, self.chart.time.as_deref());
        let n = chart.dim();
        let mut m = SymMatrix::zeros(n);
        for (k, v) in &self.metric {
            let (i, j) = index_pair(k, n)?;
            m.set(i, j, parse_expr(v, &format!("metric entry {k}"))?);
        }
        let vars = chart.all_variables();
        let mut fields = Vec::new();
        for f in &self.fields {
            if let Some(a) = f.args.iter().find(|a| !vars.iter().any(|v| v.as_str() == a.as_str())) {
                return Err(InputError(format!("field {}: argument {a} is not a chart variable", f.name)));
            }
            let args: Vec<Symbol> = f.args.iter().map(|a| Symbol::new(a)).collect();
            fields.push(FieldDecl::new(&f.name, &args));
        }
        MetricFamily::new(chart, m, fields).map_err(|e| InputError(format!("metric spec: {e}")))
    }

    pub fn fiber_block(&self) -> Result<Option<FiberBlock>, InputError> {
        let Some(f) = &self.fiber else { return Ok(None) };
        Ok(Some(FiberBlock {
            coords: Vec::new(),
            metric: None,
            dim: f.dimension.expr("fiber dimension")?,
            einstein: f.einstein_constant.expr("fiber einstein constant")?,
            warp: parse_expr(&f.warp, "fiber warp")?,
        }))
    }

    /// The system a generator is checked against.
    pub fn system(&self) -> Result<Target, InputError> {
        if let Some(name) = &self.ansatz {
            let a = ansatz(name).map_err(|e| InputError(e.to_string()))?;
            return Target::from_ansatz(a);
        }
        let family = self.family()?;
        if self.fiber.is_none() && family.chart.time.is_some() {
            if let Ok(flow) = FlowSystem::new(family.clone()) {
                let names = field_names_by_entry(&family);
                return Ok(Target { system: flow.pde, entry_fields: names });
            }
        }
        let fibers = self.fiber_block()?.into_iter().collect();
        let a = Ansatz::from_family("metric", &family, fibers).map_err(|e| InputError(format!("cannot form a system: {e}")))?;
        Target::from_ansatz(a)
    }
}

/// For each upper-triangle entry that is a bare field, that field's name.
fn field_names_by_entry(f: &MetricFamily) -> BTreeMap<(usize, usize), String> {
    f.metric
        .upper()
        .filter_map(|(i, j, e)| e.as_fun().map(|n| ((i, j), n.name.as_str().to_string())))
        .collect()
}

/// A PDE system plus the map used to resolve `"i,j"` keys of generator
/// files to field names.
pub struct Target {
    pub system: PdeSystem,
    pub entry_fields: BTreeMap<(usize, usize), String>,
}

impl Target {
    pub fn from_ansatz(a: Ansatz) -> Result<Self, InputError> {
        let entry_fields = a
            .metric
            .upper()
            .filter_map(|(i, j, e)| {
                let n = e.as_fun()?;
                a.fields.iter().any(|f| f.name == n.name).then(|| ((i, j), n.name.as_str().to_string()))
            })
            .collect();
        let system = a.reduced_system().map_err(|e| InputError(format!("cannot form the reduced system: {e}")))?;
        Ok(Target { system, entry_fields })
    }

    /// Generic metric of dimension `n`.
    pub fn generic(n: usize) -> Self {
        let space = metric_jet_space(n);
        let mut entry_fields = BTreeMap::new();
        for i in 0..n {
            for j in i..n {
                entry_fields.insert((i, j), riccisym::geometry::generic_name(i, j));
            }
        }
        Target { system: PdeSystem::stationary("generic", space, Vec::new()), entry_fields }
    }

    pub fn space(&self) -> &JetSpace {
        &self.system.space
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(default = "zero_string")]
    pub xi_t: String,
    #[serde(default)]
    pub xi: Vec<String>,
    /// Keyed by field name or by `"i,j"` metric entry.
    #[serde(default)]
    pub eta: BTreeMap<String, String>,
    /// Free constants; each one yields its own generator.
    #[serde(default)]
    pub constants: Vec<String>,
    /// Library ansatz the generator acts on, for `bracket`.
    #[serde(default)]
    pub ansatz: Option<String>,
}

fn zero_string() -> String {
    String::from("0")
}

impl GeneratorSpec {
    pub fn from_json(src: &str) -> Result<Self, InputError> {
        serde_json::from_str(src).map_err(|e| InputError(format!("generator file: {e}")))
    }

    pub fn load(path: &str) -> Result<Self, InputError> {
        Self::from_json(&crate::read_file(path)?)
    }

    pub fn build(&self, target: &Target) -> Result<Generator, InputError> {
        let space = target.space();
        let n = space.coords.len();
        let mut eta = vec![String::from("0"); space.fields.len()];
        for (key, v) in &self.eta {
            let name = if key.contains(',') {
                let (i, j) = index_pair(key, n)?;
                target.entry_fields.get(&(i, j)).cloned().ok_or_else(|| InputError(format!("eta key {key:?}: entry is not a field")))?
            } else {
                key.clone()
            };
            let pos = space
                .fields
                .iter()
                .position(|f| f.name.as_str() == name)
                .ok_or_else(|| InputError(format!("eta key {key:?}: unknown field {name}")))?;
            eta[pos] = v.clone();
        }
        let xi: Vec<&str> = self.xi.iter().map(String::as_str).collect();
        let eta: Vec<&str> = eta.iter().map(String::as_str).collect();
        if xi.len() != n {
            return Err(InputError(format!("generator has {} xi components, the space has {n} coordinates", xi.len())));
        }
        Generator::parse(space.clone(), &self.xi_t, &xi, &eta).map_err(|e| InputError(format!("generator: {e}")))
    }

    pub fn constant_symbols(&self) -> Vec<Symbol> {
        self.constants.iter().map(|c| Symbol::new(c)).collect()
    }

    /// One generator per constant (its coefficient), then the part free of
    /// constants; zero generators are dropped.
    pub fn split(&self, target: &Target) -> Result<Vec<(String, Generator)>, InputError> {
        let g = self.build(target)?;
        if self.constants.is_empty() {
            return Ok(vec![(String::from("X"), g)]);
        }
        let mut labels: Vec<String> = self.constants.clone();
        labels.push(String::from("rest"));
        Ok(labels
            .into_iter()
            .zip(g.split_constants(&self.constant_symbols()))
            .filter(|(_, x)| x.components().iter().any(|(_, c)| !c.is_zero()))
            .collect())
    }
}
