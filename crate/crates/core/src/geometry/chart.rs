//! Coordinate charts with geometric roles.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::symexpr::{Expr, Scope};

/// Geometric role of a coordinate. Indices are 0-based: `field` counts the
/// field coordinates in chart order, `base` the base coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Role {
    Base,
    Field,
    Velocity { field: usize, base: usize },
    Momentum { field: usize, base: usize },
    Contact { base: usize },
    Gauge,
    Generic,
}

impl Role {
    pub fn is_base(self) -> bool {
        matches!(self, Role::Base)
    }

    pub fn is_contact(self) -> bool {
        matches!(self, Role::Contact { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Coordinate {
    pub name: String,
    pub role: Role,
}

impl Coordinate {
    pub fn new(name: impl Into<String>, role: Role) -> Self {
        Coordinate { name: name.into(), role }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ChartError {
    #[error("duplicate name '{0}'")]
    Duplicate(String),
    #[error("a chart needs at least one base coordinate")]
    NoBase,
    #[error("expected {expected} contact coordinates, found {found}")]
    ContactCount { expected: usize, found: usize },
    #[error("coordinate '{0}' has an index out of range")]
    IndexOutOfRange(String),
    #[error("expected {expected} suffixes, found {found}")]
    SuffixCount { expected: usize, found: usize },
    #[error("expected {expected} names for {what}, found {found}")]
    NameCount { what: &'static str, expected: usize, found: usize },
    #[error("missing roles: {0}")]
    MissingRoles(String),
}

/// Named coordinates with roles, plus declared parameters and functions.
///
/// Expressions over a chart may mention its coordinates, its parameters
/// (constants) and its functions (applied to any arguments).
#[derive(Clone, Debug)]
pub struct Chart {
    coords: Vec<Coordinate>,
    suffixes: Vec<String>,
    base: Vec<usize>,
    fields: Vec<usize>,
    lookup: HashMap<String, usize>,
    parameters: BTreeSet<String>,
    functions: BTreeMap<String, usize>,
}

impl Chart {
    /// Validates and builds a chart. Base coordinates are numbered in the
    /// order they appear; `suffixes` name them in derived names and default
    /// to the base names.
    pub fn new(coords: Vec<Coordinate>, suffixes: Option<Vec<String>>) -> Result<Chart, ChartError> {
        let mut lookup = HashMap::new();
        for (i, c) in coords.iter().enumerate() {
            if lookup.insert(c.name.clone(), i).is_some() {
                return Err(ChartError::Duplicate(c.name.clone()));
            }
        }
        let base: Vec<usize> = (0..coords.len()).filter(|&i| coords[i].role.is_base()).collect();
        let fields: Vec<usize> = (0..coords.len()).filter(|&i| coords[i].role == Role::Field).collect();
        let m = base.len();
        if m == 0 {
            return Err(ChartError::NoBase);
        }
        let n = fields.len();
        let mut contact = vec![0usize; m];
        let mut contact_count = 0;
        for c in &coords {
            match c.role {
                Role::Velocity { field, base } | Role::Momentum { field, base } => {
                    if field >= n || base >= m {
                        return Err(ChartError::IndexOutOfRange(c.name.clone()));
                    }
                }
                Role::Contact { base } => {
                    if base >= m {
                        return Err(ChartError::IndexOutOfRange(c.name.clone()));
                    }
                    contact[base] += 1;
                    contact_count += 1;
                }
                _ => {}
            }
        }
        if contact_count > 0 && contact.iter().any(|&k| k != 1) {
            return Err(ChartError::ContactCount { expected: m, found: contact_count });
        }
        let suffixes = match suffixes {
            Some(s) if s.len() != m => return Err(ChartError::SuffixCount { expected: m, found: s.len() }),
            Some(s) => s,
            None => base.iter().map(|&i| coords[i].name.clone()).collect(),
        };
        Ok(Chart {
            coords,
            suffixes,
            base,
            fields,
            lookup,
            parameters: BTreeSet::new(),
            functions: BTreeMap::new(),
        })
    }

    /// Declares constant parameters.
    pub fn with_parameters<S: AsRef<str>>(mut self, names: impl IntoIterator<Item = S>) -> Result<Self, ChartError> {
        for n in names {
            let n = n.as_ref();
            if self.lookup.contains_key(n) || self.functions.contains_key(n) {
                return Err(ChartError::Duplicate(n.to_string()));
            }
            self.parameters.insert(n.to_string());
        }
        Ok(self)
    }

    /// Declares a function of `arity` arguments.
    pub fn with_function(mut self, name: &str, arity: usize) -> Result<Self, ChartError> {
        if self.lookup.contains_key(name) || self.parameters.contains(name) {
            return Err(ChartError::Duplicate(name.to_string()));
        }
        self.functions.insert(name.to_string(), arity);
        Ok(self)
    }

    /// Base dimension.
    pub fn m(&self) -> usize {
        self.base.len()
    }

    /// Number of field coordinates.
    pub fn n(&self) -> usize {
        self.fields.len()
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn name(&self, i: usize) -> &str {
        &self.coords[i].name
    }

    pub fn role(&self, i: usize) -> Role {
        self.coords[i].role
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn symbol(&self, i: usize) -> Expr {
        Expr::symbol(&self.coords[i].name)
    }

    /// Chart index of the `mu`-th base coordinate.
    pub fn base(&self, mu: usize) -> usize {
        self.base[mu]
    }

    pub fn base_indices(&self) -> &[usize] {
        &self.base
    }

    /// Chart index of the `i`-th field coordinate.
    pub fn field(&self, i: usize) -> usize {
        self.fields[i]
    }

    pub fn field_indices(&self) -> &[usize] {
        &self.fields
    }

    /// Position of a base coordinate among the base coordinates.
    pub fn base_position(&self, chart_index: usize) -> Option<usize> {
        self.base.iter().position(|&b| b == chart_index)
    }

    /// All non-base coordinates, in chart order.
    pub fn vertical(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.coords[i].role.is_base()).collect()
    }

    fn find(&self, pred: impl Fn(Role) -> bool) -> Option<usize> {
        (0..self.len()).find(|&i| pred(self.coords[i].role))
    }

    pub fn velocity(&self, field: usize, base: usize) -> Option<usize> {
        self.find(|r| r == Role::Velocity { field, base })
    }

    pub fn momentum(&self, field: usize, base: usize) -> Option<usize> {
        self.find(|r| r == Role::Momentum { field, base })
    }

    pub fn contact(&self, base: usize) -> Option<usize> {
        self.find(|r| r == Role::Contact { base })
    }

    pub fn has_contact(&self) -> bool {
        self.contact(0).is_some()
    }

    pub fn gauge(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.coords[i].role == Role::Gauge).collect()
    }

    pub fn suffix(&self, mu: usize) -> &str {
        &self.suffixes[mu]
    }

    pub fn suffixes(&self) -> &[String] {
        &self.suffixes
    }

    pub fn parameters(&self) -> &BTreeSet<String> {
        &self.parameters
    }

    pub fn functions(&self) -> &BTreeMap<String, usize> {
        &self.functions
    }

    /// Name of the jet symbol for the derivative of coordinate `i` along base `mu`.
    ///
    /// Field jets reuse the velocity coordinate when the chart has one;
    /// derivatives of velocities are symmetric second jets.
    pub fn jet_name(&self, i: usize, mu: usize) -> String {
        match self.coords[i].role {
            Role::Field => {
                let field = self.fields.iter().position(|&f| f == i).unwrap();
                match self.velocity(field, mu) {
                    Some(v) => self.coords[v].name.clone(),
                    None => format!("{}_{}", self.coords[i].name, self.suffixes[mu]),
                }
            }
            Role::Velocity { field, base } => {
                let (a, b) = if base <= mu { (base, mu) } else { (mu, base) };
                format!("{}_{}_{}", self.coords[self.fields[field]].name, self.suffixes[a], self.suffixes[b])
            }
            _ => format!("{}_{}", self.coords[i].name, self.suffixes[mu]),
        }
    }

    /// The base-coordinate symbols, in order.
    pub fn base_symbols(&self) -> Vec<Expr> {
        self.base.iter().map(|&i| self.symbol(i)).collect()
    }
}

impl Scope for Chart {
    fn is_symbol(&self, name: &str) -> bool {
        self.lookup.contains_key(name) || self.parameters.contains(name)
    }

    fn function_arity(&self, name: &str) -> Option<usize> {
        self.functions.get(name).copied()
    }
}

/// Scope of a chart extended by extra symbols (e.g. jet unknowns).
pub struct ExtendedScope<'a> {
    pub chart: &'a Chart,
    pub extra: BTreeSet<String>,
}

impl Scope for ExtendedScope<'_> {
    fn is_symbol(&self, name: &str) -> bool {
        self.chart.is_symbol(name) || self.extra.contains(name)
    }

    fn function_arity(&self, name: &str) -> Option<usize> {
        self.chart.function_arity(name)
    }
}

/// Names for building Lagrangian and Hamiltonian charts over the same
/// base and fields.
#[derive(Clone, Debug, Default)]
pub struct ChartSpec {
    pub base: Vec<String>,
    pub suffixes: Option<Vec<String>>,
    pub fields: Vec<String>,
    /// Field-major: all bases of field 0, then field 1, …
    pub velocities: Option<Vec<String>>,
    /// Field-major like `velocities`.
    pub momenta: Option<Vec<String>>,
    pub contact: Option<Vec<String>>,
    pub gauge: Vec<String>,
    pub generic: Vec<String>,
}

impl ChartSpec {
    pub fn new<S: AsRef<str>>(base: &[S], fields: &[S]) -> Self {
        ChartSpec {
            base: base.iter().map(|s| s.as_ref().to_string()).collect(),
            fields: fields.iter().map(|s| s.as_ref().to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn with_suffixes<S: AsRef<str>>(mut self, suffixes: &[S]) -> Self {
        self.suffixes = Some(suffixes.iter().map(|s| s.as_ref().to_string()).collect());
        self
    }

    fn suffix_list(&self) -> Vec<String> {
        self.suffixes.clone().unwrap_or_else(|| self.base.clone())
    }

    fn names(&self, given: &Option<Vec<String>>, what: &'static str, default: impl Fn(usize, usize) -> String) -> Result<Vec<String>, ChartError> {
        let m = self.base.len();
        let n = self.fields.len();
        match given {
            Some(v) if v.len() != n * m => Err(ChartError::NameCount { what, expected: n * m, found: v.len() }),
            Some(v) => Ok(v.clone()),
            None => Ok((0..n).flat_map(|i| (0..m).map(move |mu| (i, mu))).map(|(i, mu)| default(i, mu)).collect()),
        }
    }

    fn contact_names(&self) -> Result<Vec<String>, ChartError> {
        let m = self.base.len();
        match &self.contact {
            Some(v) if v.len() != m => Err(ChartError::ContactCount { expected: m, found: v.len() }),
            Some(v) => Ok(v.clone()),
            None => Ok(self.suffix_list().iter().map(|s| format!("s_{s}")).collect()),
        }
    }

    fn assemble(&self, middle: Vec<String>, role: fn(usize, usize) -> Role) -> Result<Chart, ChartError> {
        let m = self.base.len();
        let mut coords: Vec<Coordinate> = self.base.iter().map(|b| Coordinate::new(b, Role::Base)).collect();
        coords.extend(self.fields.iter().map(|f| Coordinate::new(f, Role::Field)));
        for (k, name) in middle.into_iter().enumerate() {
            coords.push(Coordinate::new(name, role(k / m, k % m)));
        }
        for (mu, s) in self.contact_names()?.into_iter().enumerate() {
            coords.push(Coordinate::new(s, Role::Contact { base: mu }));
        }
        coords.extend(self.gauge.iter().map(|g| Coordinate::new(g, Role::Gauge)));
        coords.extend(self.generic.iter().map(|g| Coordinate::new(g, Role::Generic)));
        Chart::new(coords, Some(self.suffix_list()))
    }

    /// Chart `(x, y, y_mu, s)`.
    pub fn lagrangian_chart(&self) -> Result<Chart, ChartError> {
        let sfx = self.suffix_list();
        let names = self.names(&self.velocities, "velocities", |i, mu| format!("{}_{}", self.fields[i], sfx[mu]))?;
        self.assemble(names, |field, base| Role::Velocity { field, base })
    }

    /// Chart `(x, y, p^mu, s)`.
    pub fn hamiltonian_chart(&self) -> Result<Chart, ChartError> {
        let sfx = self.suffix_list();
        let single = self.fields.len() == 1;
        let names = self.names(&self.momenta, "momenta", |i, mu| {
            if single {
                format!("p_{}", sfx[mu])
            } else {
                format!("p_{}_{}", self.fields[i], sfx[mu])
            }
        })?;
        self.assemble(names, |field, base| Role::Momentum { field, base })
    }
}
