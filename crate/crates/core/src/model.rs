//! Pixie spaces, situation models and lexicons.
//!
//! A [`SituationModel`] is an explicit joint probability table over named,
//! pixie-valued variables. Vague predicates map pixies to probabilities of
//! truth; [`lift`] turns them into weighted enumerations of precise
//! (boolean) lexicons whose marginals reproduce the vague values.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quant::threshold_partition;

/// Tolerance on total probability mass.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of lifted configurations.
pub const DEFAULT_CONFIG_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("pixie space is empty")]
    EmptySpace,
    #[error("duplicate pixie `{0}`")]
    DuplicatePixie(String),
    #[error("unknown pixie `{0}`")]
    UnknownPixie(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no variables selected")]
    NoVariables,
    #[error("joint entry {index} does not assign variable `{variable}`")]
    IncompleteAssignment { index: usize, variable: String },
    #[error("joint entry {index} assigns undeclared variable `{variable}`")]
    ExtraAssignment { index: usize, variable: String },
    #[error("duplicate joint assignment at entry {0}")]
    DuplicateAssignment(usize),
    #[error("negative or non-finite mass {mass} at joint entry {index}")]
    BadMass { index: usize, mass: f64 },
    #[error("joint mass {0} ≠ 1")]
    MassNotNormalized(f64),
    #[error("predicate `{predicate}` gives pixie `{pixie}` probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { predicate: String, pixie: String, value: f64 },
    #[error("conditioning event has zero probability")]
    ZeroProbabilityCondition,
    #[error("lifting needs {needed} configurations, above the cap of {cap}")]
    ExplosionGuard { needed: u128, cap: usize },
}

/// Ordered set of distinct pixie identifiers. Pixies are addressed by index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct PixieSpace {
    elements: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl PixieSpace {
    pub fn new<S: Into<String>>(elements: impl IntoIterator<Item = S>) -> Result<Self, ModelError> {
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if elements.is_empty() {
            return Err(ModelError::EmptySpace);
        }
        let mut index = HashMap::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(ModelError::DuplicatePixie(e.clone()));
            }
        }
        Ok(Self { elements, index })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn index_of(&self, pixie: &str) -> Option<usize> {
        self.index.get(pixie).copied()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.elements[index]
    }
}

impl TryFrom<Vec<String>> for PixieSpace {
    type Error = ModelError;
    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<PixieSpace> for Vec<String> {
    fn from(s: PixieSpace) -> Self {
        s.elements
    }
}

/// A distribution over tuples of pixie indices for an ordered list of
/// variables. Entries are sorted by tuple and have positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub variables: Vec<String>,
    pub entries: Vec<(Vec<usize>, f64)>,
}

impl Distribution {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.entries
            .binary_search_by(|(t, _)| t.as_slice().cmp(tuple))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }
}

/// Finite joint distribution over pixie-valued variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SituationModel {
    space: PixieSpace,
    variables: Vec<String>,
    joint: Vec<(Vec<usize>, f64)>,
}

impl SituationModel {
    /// Builds a model from named assignments. Each assignment must map every
    /// declared variable exactly once.
    pub fn new(
        space: PixieSpace,
        variables: Vec<String>,
        joint: Vec<(BTreeMap<String, String>, f64)>,
    ) -> Result<Self, ModelError> {
        let mut seen_vars = BTreeSet::new();
        for v in &variables {
            if !seen_vars.insert(v.as_str()) {
                return Err(ModelError::DuplicateVariable(v.clone()));
            }
        }
        let mut rows = Vec::with_capacity(joint.len());
        for (index, (assign, mass)) in joint.into_iter().enumerate() {
            if let Some(extra) = assign.keys().find(|k| !seen_vars.contains(k.as_str())) {
                return Err(ModelError::ExtraAssignment { index, variable: extra.clone() });
            }
            let mut tuple = Vec::with_capacity(variables.len());
            for v in &variables {
                let pixie = assign
                    .get(v)
                    .ok_or_else(|| ModelError::IncompleteAssignment { index, variable: v.clone() })?;
                tuple.push(space.index_of(pixie).ok_or_else(|| ModelError::UnknownPixie(pixie.clone()))?);
            }
            rows.push((tuple, mass));
        }
        Self::from_indexed(space, variables, rows)
    }

    /// Builds a model from index tuples ordered like `variables`.
    pub fn from_indexed(
        space: PixieSpace,
        variables: Vec<String>,
        joint: Vec<(Vec<usize>, f64)>,
    ) -> Result<Self, ModelError> {
        let mut seen_vars = BTreeSet::new();
        for v in &variables {
            if !seen_vars.insert(v.as_str()) {
                return Err(ModelError::DuplicateVariable(v.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        let mut total = 0.0;
        for (index, (tuple, mass)) in joint.iter().enumerate() {
            if tuple.len() != variables.len() {
                let variable = variables.get(tuple.len()).cloned().unwrap_or_default();
                return Err(ModelError::IncompleteAssignment { index, variable });
            }
            if let Some(&bad) = tuple.iter().find(|&&p| p >= space.len()) {
                return Err(ModelError::UnknownPixie(format!("#{bad}")));
            }
            if !mass.is_finite() || *mass < 0.0 {
                return Err(ModelError::BadMass { index, mass: *mass });
            }
            if !seen.insert(tuple.clone()) {
                return Err(ModelError::DuplicateAssignment(index));
            }
            total += mass;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(ModelError::MassNotNormalized(total));
        }
        Ok(Self { space, variables, joint })
    }

    pub fn space(&self) -> &PixieSpace {
        &self.space
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Joint rows as (pixie index per variable, mass), in declaration order.
    pub fn joint(&self) -> &[(Vec<usize>, f64)] {
        &self.joint
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    fn resolve(&self, vars: &[&str]) -> Result<Vec<usize>, ModelError> {
        vars.iter()
            .map(|v| self.variable_index(v).ok_or_else(|| ModelError::UnknownVariable(v.to_string())))
            .collect()
    }

    /// Marginal over the named variables, in the order given.
    pub fn marginal(&self, vars: &[&str]) -> Result<Distribution, ModelError> {
        if vars.is_empty() {
            return Err(ModelError::NoVariables);
        }
        let idx = self.resolve(vars)?;
        let mut seen = BTreeSet::new();
        if let Some(dup) = vars.iter().find(|v| !seen.insert(**v)) {
            return Err(ModelError::DuplicateVariable(dup.to_string()));
        }
        Ok(Distribution {
            variables: vars.iter().map(|v| v.to_string()).collect(),
            entries: self.marginal_indexed(&idx),
        })
    }

    /// Marginal over variable indices; zero-mass tuples are dropped.
    pub(crate) fn marginal_indexed(&self, idx: &[usize]) -> Vec<(Vec<usize>, f64)> {
        let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (tuple, mass) in &self.joint {
            if *mass > 0.0 {
                let key: Vec<usize> = idx.iter().map(|&i| tuple[i]).collect();
                *acc.entry(key).or_insert(0.0) += mass;
            }
        }
        acc.into_iter().filter(|(_, p)| *p > 0.0).collect()
    }

    /// `P(u | v)` over the variables not fixed by `given`, in declaration order.
    pub fn conditional(&self, given: &[(&str, &str)]) -> Result<Distribution, ModelError> {
        let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(given.len());
        for (var, pixie) in given {
            let vi = self.variable_index(var).ok_or_else(|| ModelError::UnknownVariable(var.to_string()))?;
            let pi = self.space.index_of(pixie).ok_or_else(|| ModelError::UnknownPixie(pixie.to_string()))?;
            if fixed.iter().any(|(v, _)| *v == vi) {
                return Err(ModelError::DuplicateVariable(var.to_string()));
            }
            fixed.push((vi, pi));
        }
        let free: Vec<usize> = (0..self.variables.len()).filter(|i| !fixed.iter().any(|(v, _)| v == i)).collect();
        let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut evidence = 0.0;
        for (tuple, mass) in &self.joint {
            if *mass > 0.0 && fixed.iter().all(|&(v, p)| tuple[v] == p) {
                evidence += mass;
                let key: Vec<usize> = free.iter().map(|&i| tuple[i]).collect();
                *acc.entry(key).or_insert(0.0) += mass;
            }
        }
        if evidence <= 0.0 {
            return Err(ModelError::ZeroProbabilityCondition);
        }
        Ok(Distribution {
            variables: free.iter().map(|&i| self.variables[i].clone()).collect(),
            entries: acc.into_iter().map(|(k, p)| (k, p / evidence)).collect(),
        })
    }
}

/// A vague predicate: pixie name to probability of truth. Absent pixies
/// are false with certainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaguePredicate {
    pub name: String,
    pub table: BTreeMap<String, f64>,
}

impl VaguePredicate {
    pub fn new(name: impl Into<String>, table: BTreeMap<String, f64>) -> Result<Self, ModelError> {
        let name = name.into();
        for (pixie, &value) in &table {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::ProbabilityOutOfRange { predicate: name.clone(), pixie: pixie.clone(), value });
            }
        }
        Ok(Self { name, table })
    }

    pub fn prob(&self, pixie: &str) -> f64 {
        self.table.get(pixie).copied().unwrap_or(0.0)
    }

    /// Dense values over a pixie space.
    pub fn dense(&self, space: &PixieSpace) -> Vec<f64> {
        space.elements().iter().map(|p| self.prob(p)).collect()
    }
}

/// Predicates by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VagueLexicon {
    predicates: BTreeMap<String, VaguePredicate>,
}

impl VagueLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, predicate: VaguePredicate) {
        self.predicates.insert(predicate.name.clone(), predicate);
    }

    pub fn get(&self, name: &str) -> Option<&VaguePredicate> {
        self.predicates.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.predicates.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &VaguePredicate> {
        self.predicates.values()
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    /// The sub-lexicon restricted to `names`; unknown names are skipped.
    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> VagueLexicon {
        let mut out = VagueLexicon::new();
        for n in names {
            if let Some(p) = self.predicates.get(n) {
                out.insert(p.clone());
            }
        }
        out
    }
}

impl FromIterator<VaguePredicate> for VagueLexicon {
    fn from_iter<T: IntoIterator<Item = VaguePredicate>>(iter: T) -> Self {
        let mut lex = VagueLexicon::new();
        for p in iter {
            lex.insert(p);
        }
        lex
    }
}

/// A situation model together with the vague lexicon interpreted in it.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub model: SituationModel,
    pub lexicon: VagueLexicon,
}

impl World {
    /// Pixies sorted by name, joint rows sorted by assignment, so that two
    /// worlds describing the same distribution compare equal.
    pub fn canonical(&self) -> World {
        let mut names: Vec<String> = self.model.space.elements().to_vec();
        names.sort();
        let space = PixieSpace::new(names).expect("pixies already distinct");
        let mut joint: Vec<(Vec<usize>, f64)> = self
            .model
            .joint
            .iter()
            .map(|(t, p)| {
                let t = t.iter().map(|&i| space.index_of(self.model.space.name(i)).expect("same pixies")).collect();
                (t, *p)
            })
            .collect();
        joint.sort_by(|a, b| a.0.cmp(&b.0));
        World {
            model: SituationModel { space, variables: self.model.variables.clone(), joint },
            lexicon: self.lexicon.clone(),
        }
    }
}

/// Boolean predicates, each total over the pixie space (indexed by pixie).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreciseLexicon {
    pub predicates: BTreeMap<String, Vec<bool>>,
}

impl PreciseLexicon {
    pub fn holds(&self, predicate: &str, pixie: usize) -> Option<bool> {
        self.predicates.get(predicate).and_then(|v| v.get(pixie).copied())
    }
}

/// How a vague predicate's uncertainty is coupled across pixies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftScheme {
    /// Each (predicate, pixie) is an independent Bernoulli draw.
    #[default]
    Independent,
    /// One uniform threshold per predicate; `π(x) = [ψ(x) ≥ θ]`.
    CoupledThreshold,
}

impl LiftScheme {
    pub fn name(self) -> &'static str {
        match self {
            Self::Independent => "independent",
            Self::CoupledThreshold => "coupled-threshold",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "independent" => Some(Self::Independent),
            "coupled-threshold" => Some(Self::CoupledThreshold),
            _ => None,
        }
    }
}

/// A weighted enumeration of precise lexicons.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedLexicon {
    pub configurations: Vec<(PreciseLexicon, f64)>,
    pub scheme: LiftScheme,
}

impl LiftedLexicon {
    /// `Σ weight · [π_r(x)]`.
    pub fn marginal(&self, predicate: &str, pixie: usize) -> f64 {
        self.configurations
            .iter()
            .filter(|(lex, _)| lex.holds(predicate, pixie) == Some(true))
            .map(|(_, w)| w)
            .sum()
    }
}

/// The precise options for one predicate under a scheme.
pub(crate) fn predicate_options(values: &[f64], scheme: LiftScheme) -> Vec<(Vec<bool>, f64)> {
    match scheme {
        LiftScheme::Independent => {
            let base: Vec<bool> = values.iter().map(|&v| v >= 1.0).collect();
            let mut out = vec![(base, 1.0)];
            for (i, &p) in values.iter().enumerate() {
                if p > 0.0 && p < 1.0 {
                    let mut next = Vec::with_capacity(out.len() * 2);
                    for (ext, w) in out {
                        let mut on = ext.clone();
                        on[i] = true;
                        next.push((on, w * p));
                        next.push((ext, w * (1.0 - p)));
                    }
                    out = next;
                }
            }
            out
        }
        LiftScheme::CoupledThreshold => {
            let mut out: Vec<(Vec<bool>, f64)> = Vec::new();
            for interval in threshold_partition(values.iter().copied()) {
                let ext: Vec<bool> = values.iter().map(|&v| interval.admits(v)).collect();
                match out.iter_mut().find(|(e, _)| *e == ext) {
                    Some((_, w)) => *w += interval.measure(),
                    None => out.push((ext, interval.measure())),
                }
            }
            out
        }
    }
}

/// Number of precise options a predicate has under a scheme.
pub(crate) fn option_count(values: &[f64], scheme: LiftScheme) -> u128 {
    match scheme {
        LiftScheme::Independent => {
            let k = values.iter().filter(|&&p| p > 0.0 && p < 1.0).count() as u32;
            if k >= 127 {
                u128::MAX
            } else {
                1u128 << k
            }
        }
        LiftScheme::CoupledThreshold => predicate_options(values, scheme).len() as u128,
    }
}

/// Lifts vague predicates to a weighted enumeration of precise lexicons.
/// Predicates are independent of each other; `cap` bounds the total
/// configuration count.
pub fn lift(
    lexicon: &VagueLexicon,
    scheme: LiftScheme,
    space: &PixieSpace,
    cap: usize,
) -> Result<LiftedLexicon, ModelError> {
    let dense: Vec<(String, Vec<f64>)> = lexicon.iter().map(|p| (p.name.clone(), p.dense(space))).collect();
    let needed = dense
        .iter()
        .map(|(_, v)| option_count(v, scheme))
        .fold(1u128, |a, b| a.saturating_mul(b));
    if needed > cap as u128 {
        return Err(ModelError::ExplosionGuard { needed, cap });
    }
    let mut configurations = vec![(PreciseLexicon::default(), 1.0)];
    for (name, values) in &dense {
        let options = predicate_options(values, scheme);
        let mut next = Vec::with_capacity(configurations.len() * options.len());
        for (lex, w) in &configurations {
            for (ext, pw) in &options {
                let mut lex = lex.clone();
                lex.predicates.insert(name.clone(), ext.clone());
                next.push((lex, w * pw));
            }
        }
        configurations = next;
    }
    Ok(LiftedLexicon { configurations, scheme })
}
