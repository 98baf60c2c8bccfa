//! Evaluation of scope graphs against situation models.
//!
//! Four engines share one compiled plan:
//!
//! * **naive** evaluates every node with vague values directly: leaves take
//!   ψ, conjunction multiplies, quantifiers apply `f_Q` to the ratio of
//!   expectations. Precise quantifiers over vague predicates become trivial.
//! * **exact** enumerates precise lexicons (see [`lift`]) and, inside each,
//!   evaluates nodes as precise functions of their free variables. Each vague
//!   quantifier node draws one uniform threshold shared by all its free
//!   variable assignments; the threshold is integrated out exactly by
//!   partitioning `(0, 1]` at the node's attained values, recursively from
//!   the leaves up.
//! * **mc** samples the same process: one precise lexicon and one threshold
//!   per vague node per sample.
//! * **generic-fast** is the naive recursion restricted to vague quantifiers,
//!   where exchanging the expectations is a reasonable approximation.
//!
//! Nested vague quantifiers in the fast path compose the single-quantifier
//! approximation recursively; that composition is a choice of this crate.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{lift, option_count, LiftScheme, ModelError, SituationModel, VagueLexicon, DEFAULT_CONFIG_CAP};
use crate::quant::{
    empty_restriction_value, shape_value_unchecked, threshold_partition, QuantifierKind, ShapeSpec, ThresholdInterval,
};
use crate::scope::{self, NodeId, ScopeDiagnostic, ScopeGraph, ScopeNode};

/// Restriction mass (given the free variables) below which the restriction
/// is treated as empty.
pub const DEFAULT_DENOMINATOR_GUARD: f64 = 1e-15;

pub const DEFAULT_VAGUE_NODE_CAP: usize = 4;

/// Ratios this close to an interior step of a shape are moved onto it, so
/// summation noise cannot flip a strict comparison such as `most` at ½.
const RATIO_SNAP: f64 = 1e-12;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Naive,
    Exact,
    #[serde(rename = "mc")]
    MonteCarlo,
    GenericFast,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::Exact => "exact",
            Self::MonteCarlo => "mc",
            Self::GenericFast => "generic-fast",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "naive" => Self::Naive,
            "exact" => Self::Exact,
            "mc" => Self::MonteCarlo,
            "generic-fast" => Self::GenericFast,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub probability: f64,
    pub engine: EngineKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<LiftScheme>,
}

impl EvalResult {
    fn point(probability: f64, engine: EngineKind, scheme: Option<LiftScheme>) -> Self {
        Self { probability, engine, ci: None, samples: None, seed: None, scheme }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineOptions {
    pub scheme: LiftScheme,
    /// Cap on lifted configurations × threshold regions.
    pub config_cap: usize,
    /// Cap on vague quantifier nodes for exact evaluation.
    pub vague_node_cap: usize,
    pub denominator_guard: f64,
    /// Truth value of a generic quantifier with an empty restriction.
    pub generic_empty_value: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            scheme: LiftScheme::Independent,
            config_cap: DEFAULT_CONFIG_CAP,
            vague_node_cap: DEFAULT_VAGUE_NODE_CAP,
            denominator_guard: DEFAULT_DENOMINATOR_GUARD,
            generic_empty_value: 1.0,
        }
    }
}

impl EngineOptions {
    pub fn with_scheme(scheme: LiftScheme) -> Self {
        Self { scheme, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("graph does not validate: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<ScopeDiagnostic>),
    #[error("explosion guard: {needed} configurations × threshold regions exceed the cap of {cap}")]
    ExplosionGuard { needed: u128, cap: usize },
    #[error("explosion guard: {count} vague quantifier nodes exceed the cap of {cap}")]
    TooManyVagueNodes { count: usize, cap: usize },
    #[error("precise quantifier `{kind}` at node {node} is not allowed in the generic fast path; use the exact engine")]
    PreciseQuantifierInFastPath { node: NodeId, kind: String },
    #[error("quantifier `{kind}` at node {node} is not generic")]
    NonGenericQuantifier { node: NodeId, kind: String },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One precise world of the exact enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfiguration {
    pub precise: crate::model::PreciseLexicon,
    /// Lifted-lexicon weight times the product of threshold-region measures.
    pub weight: f64,
    pub thresholds: BTreeMap<NodeId, ThresholdInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenericComparison {
    /// Expectation over precise functions of the ratio.
    pub exact: f64,
    /// Ratio of vague expectations.
    pub fast: f64,
    pub difference: f64,
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

const UNSET: u32 = u32::MAX;

/// Leaf-level expression; quantifier children are referenced by slot.
#[derive(Debug, Clone)]
enum Expr {
    True,
    App { pred: usize, var: usize },
    And(Vec<Expr>),
    Dep(usize),
}

impl Expr {
    fn eval(&self, assign: &[u32], leaf: &[Vec<f64>], dep: &dyn Fn(usize) -> f64) -> f64 {
        match self {
            Expr::True => 1.0,
            Expr::App { pred, var } => leaf[*pred][assign[*var] as usize],
            Expr::And(parts) => {
                let mut acc = 1.0;
                for p in parts {
                    acc *= p.eval(assign, leaf, dep);
                    if acc == 0.0 {
                        break;
                    }
                }
                acc
            }
            Expr::Dep(slot) => dep(*slot),
        }
    }
}

struct Row {
    key: usize,
    mass: f64,
    assign: Vec<u32>,
    dep_keys: Vec<usize>,
}

struct QuantPlan {
    node: NodeId,
    kind: QuantifierKind,
    vague: bool,
    empty_value: f64,
    /// interior breakpoints of the shape
    cuts: Vec<f64>,
    restriction: Expr,
    body: Expr,
    /// slot → index into `Plan::quants`
    deps: Vec<usize>,
    ctx: Vec<usize>,
    keys: BTreeMap<Vec<u32>, usize>,
    rows: Vec<Row>,
}

struct Plan {
    preds: Vec<String>,
    quants: Vec<QuantPlan>,
    root: Expr,
    root_deps: Vec<usize>,
    guard: f64,
}

struct ExprBuilder<'a> {
    graph: &'a ScopeGraph,
    model: &'a SituationModel,
    preds: &'a [String],
    quant_index: &'a BTreeMap<NodeId, usize>,
}

impl ExprBuilder<'_> {
    fn build(&self, id: NodeId, deps: &mut Vec<usize>) -> Expr {
        match self.graph.node(id) {
            ScopeNode::Tautology => Expr::True,
            ScopeNode::Application { predicate, variable } => Expr::App {
                pred: self.preds.binary_search(predicate).expect("validated predicate"),
                var: self.model.variable_index(variable).expect("validated variable"),
            },
            ScopeNode::Conjunction(cs) => Expr::And(cs.iter().map(|c| self.build(*c, deps)).collect()),
            ScopeNode::Quantifier { .. } => {
                let q = self.quant_index[&id];
                let slot = deps.iter().position(|d| *d == q).unwrap_or_else(|| {
                    deps.push(q);
                    deps.len() - 1
                });
                Expr::Dep(slot)
            }
        }
    }
}

impl Plan {
    fn compile(
        graph: &ScopeGraph,
        model: &SituationModel,
        lexicon: &VagueLexicon,
        opts: &EngineOptions,
    ) -> Result<Plan, EngineError> {
        scope::validate(graph, model, lexicon).map_err(EngineError::Validation)?;
        let order = scope::reachable_order(graph).expect("validated graph is acyclic");
        let info = scope::analyze(graph, &order);
        let preds: Vec<String> = graph.predicates().into_iter().map(String::from).collect();

        let quant_nodes: Vec<NodeId> = order
            .iter()
            .copied()
            .filter(|id| matches!(graph.node(*id), ScopeNode::Quantifier { .. }))
            .collect();
        let quant_index: BTreeMap<NodeId, usize> = quant_nodes.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let builder = ExprBuilder { graph, model, preds: &preds, quant_index: &quant_index };
        let var_idx = |name: &String| model.variable_index(name).expect("validated variable");

        let mut quants: Vec<QuantPlan> = Vec::with_capacity(quant_nodes.len());
        for &id in &quant_nodes {
            let ScopeNode::Quantifier { kind, bound, restriction, body } = graph.node(id) else {
                unreachable!()
            };
            let ctx: Vec<usize> = {
                let mut v: Vec<usize> = info.context[id.0].iter().map(var_idx).collect();
                v.sort_unstable();
                v
            };
            let mut all: Vec<usize> = ctx.iter().copied().chain(bound.iter().map(var_idx)).collect();
            all.sort_unstable();
            all.dedup();

            let mut deps = Vec::new();
            let restriction = builder.build(*restriction, &mut deps);
            let body = builder.build(*body, &mut deps);

            let mut keys = BTreeMap::new();
            let mut rows = Vec::new();
            for (tuple, mass) in model.marginal_indexed(&all) {
                let mut assign = vec![UNSET; model.variables().len()];
                for (v, p) in all.iter().zip(&tuple) {
                    assign[*v] = *p as u32;
                }
                let key_tuple: Vec<u32> = ctx.iter().map(|v| assign[*v]).collect();
                let next = keys.len();
                let key = *keys.entry(key_tuple).or_insert(next);
                let dep_keys = deps
                    .iter()
                    .map(|&d| {
                        let dq: &QuantPlan = &quants[d];
                        let k: Vec<u32> = dq.ctx.iter().map(|v| assign[*v]).collect();
                        dq.keys.get(&k).copied().unwrap_or(usize::MAX)
                    })
                    .collect();
                rows.push(Row { key, mass, assign, dep_keys });
            }
            let empty_value = match kind {
                QuantifierKind::Generic => opts.generic_empty_value,
                k => empty_restriction_value(k),
            };
            let mut cuts: Vec<f64> = ShapeSpec::builtin(kind)
                .segments()
                .iter()
                .flat_map(|s| [s.start, s.end])
                .filter(|c| *c > 0.0 && *c < 1.0)
                .collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            quants.push(QuantPlan {
                node: id,
                kind: kind.clone(),
                vague: kind.is_vague(),
                empty_value,
                cuts,
                restriction,
                body,
                deps,
                ctx,
                keys,
                rows,
            });
        }
        let mut root_deps = Vec::new();
        let root = builder.build(graph.root(), &mut root_deps);
        Ok(Plan { preds, quants, root, root_deps, guard: opts.denominator_guard })
    }

    fn dep_value(&self, values: &[Vec<f64>], q: usize, key: usize) -> f64 {
        values[q].get(key).copied().unwrap_or(self.quants[q].empty_value)
    }

    /// `f_Q(ratio(v))` for every support assignment of the node's context.
    fn shape_values(&self, qi: usize, leaf: &[Vec<f64>], values: &[Vec<f64>]) -> Vec<f64> {
        let q = &self.quants[qi];
        let n = q.keys.len();
        let mut num = vec![0.0; n];
        let mut den = vec![0.0; n];
        let mut evidence = vec![0.0; n];
        for row in &q.rows {
            evidence[row.key] += row.mass;
            let dep = |slot: usize| self.dep_value(values, q.deps[slot], row.dep_keys[slot]);
            let r = q.restriction.eval(&row.assign, leaf, &dep);
            if r == 0.0 {
                continue;
            }
            let b = q.body.eval(&row.assign, leaf, &dep);
            den[row.key] += row.mass * r;
            num[row.key] += row.mass * r * b;
        }
        (0..n)
            .map(|k| {
                let restriction_mass = den[k] / evidence[k];
                if den[k] <= 0.0 || restriction_mass < self.guard {
                    q.empty_value
                } else {
                    let mut ratio = (num[k] / den[k]).clamp(0.0, 1.0);
                    if let Some(c) = q.cuts.iter().find(|c| (ratio - **c).abs() <= RATIO_SNAP) {
                        ratio = *c;
                    }
                    shape_value_unchecked(&q.kind, ratio)
                }
            })
            .collect()
    }

    fn root_value(&self, leaf: &[Vec<f64>], values: &[Vec<f64>]) -> f64 {
        let assign: Vec<u32> = Vec::new();
        let dep = |slot: usize| self.dep_value(values, self.root_deps[slot], 0);
        self.root.eval(&assign, leaf, &dep)
    }

    fn vague_leaf(&self, lexicon: &VagueLexicon, model: &SituationModel) -> Vec<Vec<f64>> {
        self.preds.iter().map(|p| lexicon.get(p).expect("validated predicate").dense(model.space())).collect()
    }

    fn eval_vague(&self, leaf: &[Vec<f64>]) -> f64 {
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(self.quants.len());
        for qi in 0..self.quants.len() {
            let v = self.shape_values(qi, leaf, &values);
            values.push(v);
        }
        self.root_value(leaf, &values)
    }

    fn vague_nodes(&self) -> impl Iterator<Item = &QuantPlan> {
        self.quants.iter().filter(|q| q.vague)
    }

    fn check_exact_budget(&self, lexicon: &VagueLexicon, model: &SituationModel, opts: &EngineOptions) -> Result<(), EngineError> {
        let count = self.vague_nodes().count();
        if count > opts.vague_node_cap {
            return Err(EngineError::TooManyVagueNodes { count, cap: opts.vague_node_cap });
        }
        let configs = self
            .preds
            .iter()
            .map(|p| option_count(&lexicon.get(p).expect("validated").dense(model.space()), opts.scheme))
            .fold(1u128, |a, b| a.saturating_mul(b));
        let regions = self
            .vague_nodes()
            .map(|q| q.keys.len() as u128 + 1)
            .fold(1u128, |a, b| a.saturating_mul(b));
        let needed = configs.saturating_mul(regions);
        if needed > opts.config_cap as u128 {
            return Err(EngineError::ExplosionGuard { needed, cap: opts.config_cap });
        }
        Ok(())
    }

    /// Depth-first over threshold regions of the vague nodes, in
    /// topological order. `visit` receives the region path, its measure and
    /// the root truth.
    fn integrate(
        &self,
        qi: usize,
        measure: f64,
        leaf: &[Vec<f64>],
        values: &mut Vec<Vec<f64>>,
        path: &mut Vec<(NodeId, ThresholdInterval)>,
        visit: &mut dyn FnMut(&[(NodeId, ThresholdInterval)], f64, f64),
    ) {
        if qi == self.quants.len() {
            let root = self.root_value(leaf, values);
            visit(path, measure, root);
            return;
        }
        let shape = self.shape_values(qi, leaf, values);
        values.truncate(qi);
        let q = &self.quants[qi];
        if q.vague {
            for interval in threshold_partition(shape.iter().copied()) {
                values.push(shape.iter().map(|&v| if interval.admits(v) { 1.0 } else { 0.0 }).collect());
                path.push((q.node, interval));
                self.integrate(qi + 1, measure * interval.measure(), leaf, values, path, visit);
                path.pop();
                values.truncate(qi);
            }
        } else {
            values.push(shape);
            self.integrate(qi + 1, measure, leaf, values, path, visit);
            values.truncate(qi);
        }
    }

    fn exact_config(&self, leaf: &[Vec<f64>]) -> f64 {
        let mut acc = Kahan::default();
        let mut values = Vec::with_capacity(self.quants.len());
        let mut path = Vec::new();
        self.integrate(0, 1.0, leaf, &mut values, &mut path, &mut |_, m, root| acc.add(m * root));
        acc.sum
    }

    fn precise_leaf(&self, lex: &crate::model::PreciseLexicon) -> Vec<Vec<f64>> {
        self.preds
            .iter()
            .map(|p| lex.predicates[p].iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    fn sample(&self, dense: &[Vec<f64>], scheme: LiftScheme, rng: &mut ChaCha8Rng) -> bool {
        let leaf: Vec<Vec<f64>> = dense
            .iter()
            .map(|psi| match scheme {
                LiftScheme::Independent => psi
                    .iter()
                    .map(|&p| {
                        let on = if p > 0.0 && p < 1.0 { rng.gen::<f64>() < p } else { p >= 1.0 };
                        if on { 1.0 } else { 0.0 }
                    })
                    .collect(),
                LiftScheme::CoupledThreshold => {
                    let theta = 1.0 - rng.gen::<f64>();
                    psi.iter().map(|&p| if p >= theta { 1.0 } else { 0.0 }).collect()
                }
            })
            .collect();
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(self.quants.len());
        for qi in 0..self.quants.len() {
            let shape = self.shape_values(qi, &leaf, &values);
            if self.quants[qi].vague {
                let theta = 1.0 - rng.gen::<f64>();
                values.push(shape.into_iter().map(|v| if v >= theta { 1.0 } else { 0.0 }).collect());
            } else {
                values.push(shape);
            }
        }
        self.root_value(&leaf, &values) >= 1.0
    }
}

/// Quantifier truth straight from vague values.
pub fn eval_naive(
    graph: &ScopeGraph,
    model: &SituationModel,
    lexicon: &VagueLexicon,
    opts: &EngineOptions,
) -> Result<EvalResult, EngineError> {
    let plan = Plan::compile(graph, model, lexicon, opts)?;
    let leaf = plan.vague_leaf(lexicon, model);
    Ok(EvalResult::point(plan.eval_vague(&leaf), EngineKind::Naive, None))
}

/// Exact probability of truth under the lifting scheme in `opts`.
pub fn eval_exact(
    graph: &ScopeGraph,
    model: &SituationModel,
    lexicon: &VagueLexicon,
    opts: &EngineOptions,
) -> Result<EvalResult, EngineError> {
    let plan = Plan::compile(graph, model, lexicon, opts)?;
    plan.check_exact_budget(lexicon, model, opts)?;
    let used = lexicon.restrict(plan.preds.iter().map(String::as_str));
    let lifted = lift(&used, opts.scheme, model.space(), opts.config_cap)?;
    let parts: Vec<f64> = lifted
        .configurations
        .par_iter()
        .map(|(lex, w)| w * plan.exact_config(&plan.precise_leaf(lex)))
        .collect();
    let mut acc = Kahan::default();
    for p in parts {
        acc.add(p);
    }
    Ok(EvalResult::point(acc.sum.clamp(0.0, 1.0), EngineKind::Exact, Some(opts.scheme)))
}

/// Every precise world of the exact enumeration with its root truth.
pub fn exact_worlds(
    graph: &ScopeGraph,
    model: &SituationModel,
    lexicon: &VagueLexicon,
    opts: &EngineOptions,
) -> Result<Vec<(WorldConfiguration, bool)>, EngineError> {
    let plan = Plan::compile(graph, model, lexicon, opts)?;
    plan.check_exact_budget(lexicon, model, opts)?;
    let used = lexicon.restrict(plan.preds.iter().map(String::as_str));
    let lifted = lift(&used, opts.scheme, model.space(), opts.config_cap)?;
    let mut out = Vec::new();
    for (lex, w) in &lifted.configurations {
        let leaf = plan.precise_leaf(lex);
        let mut values = Vec::new();
        let mut path = Vec::new();
        plan.integrate(0, 1.0, &leaf, &mut values, &mut path, &mut |regions, m, root| {
            out.push((
                WorldConfiguration {
                    precise: lex.clone(),
                    weight: w * m,
                    thresholds: regions.iter().copied().collect(),
                },
                root >= 1.0,
            ));
        });
    }
    Ok(out)
}

/// Monte Carlo estimate with a 95% normal-approximation interval. Sample `i`
/// draws from its own ChaCha stream, so results do not depend on threading.
pub fn eval_mc(
    graph: &ScopeGraph,
    model: &SituationModel,
    lexicon: &VagueLexicon,
    opts: &EngineOptions,
    samples: u64,
    seed: u64,
) -> Result<EvalResult, EngineError> {
    if samples == 0 {
        return Err(EngineError::NoSamples);
    }
    let plan = Plan::compile(graph, model, lexicon, opts)?;
    let dense = plan.vague_leaf(lexicon, model);
    let hits: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            plan.sample(&dense, opts.scheme, &mut rng) as u64
        })
        .sum();
    let n = samples as f64;
    let p = hits as f64 / n;
    let half = Z_95 * (p * (1.0 - p) / n).sqrt();
    Ok(EvalResult {
        probability: p,
        engine: EngineKind::MonteCarlo,
        ci: Some(((p - half).max(0.0), (p + half).min(1.0))),
        samples: Some(samples),
        seed: Some(seed),
        scheme: Some(opts.scheme),
    })
}

/// Vague-function recursion for graphs whose quantifiers are all vague.
pub fn eval_generic_fast(
    graph: &ScopeGraph,
    model: &SituationModel,
    lexicon: &VagueLexicon,
    opts: &EngineOptions,
) -> Result<EvalResult, EngineError> {
    let plan = Plan::compile(graph, model, lexicon, opts)?;
    if let Some(q) = plan.quants.iter().find(|q| !q.vague) {
        return Err(EngineError::PreciseQuantifierInFastPath { node: q.node, kind: q.kind.to_string() });
    }
    let leaf = plan.vague_leaf(lexicon, model);
    Ok(EvalResult::point(plan.eval_vague(&leaf), EngineKind::GenericFast, None))
}

/// Expectation over precise functions versus the fast path, for graphs
/// whose quantifiers are all generic.
pub fn compare_generic(
    graph: &ScopeGraph,
    model: &SituationModel,
    lexicon: &VagueLexicon,
    opts: &EngineOptions,
) -> Result<GenericComparison, EngineError> {
    let order = scope::reachable_order(graph).map_err(|_| {
        EngineError::Validation(scope::validate(graph, model, lexicon).err().unwrap_or_default())
    })?;
    for id in order {
        if let ScopeNode::Quantifier { kind, .. } = graph.node(id) {
            if *kind != QuantifierKind::Generic {
                return Err(EngineError::NonGenericQuantifier { node: id, kind: kind.to_string() });
            }
        }
    }
    let exact = eval_exact(graph, model, lexicon, opts)?.probability;
    let fast = eval_generic_fast(graph, model, lexicon, opts)?.probability;
    Ok(GenericComparison { exact, fast, difference: (exact - fast).abs() })
}

/// Quantifier nodes reachable from the root that are vague.
pub fn vague_quantifiers(graph: &ScopeGraph) -> BTreeSet<NodeId> {
    scope::reachable_order(graph)
        .unwrap_or_default()
        .into_iter()
        .filter(|id| matches!(graph.node(*id), ScopeNode::Quantifier { kind, .. } if kind.is_vague()))
        .collect()
}

/// Dispatches on `engine`; `mc` needs `samples` and `seed`.
pub fn evaluate(
    engine: EngineKind,
    graph: &ScopeGraph,
    model: &SituationModel,
    lexicon: &VagueLexicon,
    opts: &EngineOptions,
    mc: Option<(u64, u64)>,
) -> Result<EvalResult, EngineError> {
    match engine {
        EngineKind::Naive => eval_naive(graph, model, lexicon, opts),
        EngineKind::Exact => eval_exact(graph, model, lexicon, opts),
        EngineKind::GenericFast => eval_generic_fast(graph, model, lexicon, opts),
        EngineKind::MonteCarlo => {
            let (samples, seed) = mc.ok_or(EngineError::NoSamples)?;
            eval_mc(graph, model, lexicon, opts, samples, seed)
        }
    }
}
