//! Helpers shared by the integration tests: fixture access, small world
//! builders, random generators and independent reference evaluators.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use quantale::dsl::{parse_prop, parse_world};
use quantale::model::{PixieSpace, SituationModel, VagueLexicon, VaguePredicate, World};
use quantale::ScopeGraph;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn fixture_world(name: &str) -> World {
    parse_world(&read_fixture(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn fixture_prop(name: &str) -> ScopeGraph {
    parse_prop(&read_fixture(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn prop(text: &str) -> ScopeGraph {
    parse_prop(text).unwrap_or_else(|d| panic!("{text}: {d:?}"))
}

/// Builds a world from rows of pixie names (in variable order) and sparse
/// predicate tables.
pub fn world(pixies: &[&str], vars: &[&str], joint: &[(Vec<&str>, f64)], preds: &[(&str, Vec<(&str, f64)>)]) -> World {
    let space = PixieSpace::new(pixies.iter().copied()).unwrap();
    let rows = joint
        .iter()
        .map(|(tuple, p)| {
            let assign: BTreeMap<String, String> =
                vars.iter().zip(tuple).map(|(v, x)| (v.to_string(), x.to_string())).collect();
            (assign, *p)
        })
        .collect();
    let model = SituationModel::new(space, vars.iter().map(|v| v.to_string()).collect(), rows).unwrap();
    let lexicon = preds
        .iter()
        .map(|(name, table)| {
            VaguePredicate::new(*name, table.iter().map(|(x, p)| (x.to_string(), *p)).collect()).unwrap()
        })
        .collect::<VagueLexicon>();
    World { model, lexicon }
}

/// One pixie `x1`, one variable `x`, `red(x1) = p`.
pub fn red_world(p: f64) -> World {
    world(&["x1"], &["x"], &[(vec!["x1"], 1.0)], &[("red", vec![("x1", p)])])
}

pub const PIXIES: [&str; 4] = ["a", "b", "c", "d"];
pub const VARS: [&str; 3] = ["x", "y", "z"];
pub const PREDS: [&str; 2] = ["p", "q"];

/// A precise world in which every variable ranges uniformly and
/// independently over its own domain. Conditional distributions are then
/// uniform, so proportions of mass are proportions of individuals.
#[derive(Debug, Clone)]
pub struct ClassicalWorld {
    pub vars: Vec<&'static str>,
    pub domains: Vec<Vec<&'static str>>,
    pub preds: BTreeMap<&'static str, Vec<&'static str>>,
}

impl ClassicalWorld {
    pub fn random(rng: &mut impl Rng) -> Self {
        let n_pixies = rng.gen_range(1..=4);
        let pixies = &PIXIES[..n_pixies];
        let n_vars = rng.gen_range(1..=3);
        let vars = VARS[..n_vars].to_vec();
        let domains = vars
            .iter()
            .map(|_| {
                let k = rng.gen_range(1..=n_pixies);
                let mut d: Vec<&str> = pixies.choose_multiple(rng, k).copied().collect();
                d.sort();
                d
            })
            .collect();
        let preds = PREDS
            .iter()
            .map(|p| (*p, pixies.iter().copied().filter(|_| rng.gen_bool(0.5)).collect()))
            .collect();
        Self { vars, domains, preds }
    }

    pub fn pixies(&self) -> Vec<&'static str> {
        let mut all: Vec<&str> = self.domains.iter().flatten().copied().collect();
        all.extend(self.preds.values().flatten());
        all.sort();
        all.dedup();
        all
    }

    pub fn to_world(&self) -> World {
        let mut rows: Vec<Vec<&str>> = vec![vec![]];
        for d in &self.domains {
            rows = rows
                .into_iter()
                .flat_map(|r| {
                    d.iter().map(move |x| {
                        let mut r = r.clone();
                        r.push(*x);
                        r
                    })
                })
                .collect();
        }
        let mass = 1.0 / rows.len() as f64;
        let joint: Vec<(Vec<&str>, f64)> = rows.into_iter().map(|r| (r, mass)).collect();
        let preds: Vec<(&str, Vec<(&str, f64)>)> =
            self.preds.iter().map(|(p, ext)| (*p, ext.iter().map(|x| (*x, 1.0)).collect())).collect();
        world(&self.pixies(), &self.vars, &joint, &preds)
    }

    fn domain(&self, var: &str) -> &[&'static str] {
        &self.domains[self.vars.iter().position(|v| *v == var).unwrap()]
    }
}

/// Propositions with a syntax tree kept alongside the text, for oracles.
#[derive(Debug, Clone)]
pub enum Term {
    True,
    App(&'static str, &'static str),
    And(Vec<Term>),
    Quant { kind: &'static str, bound: Vec<&'static str>, restriction: Box<Term>, body: Box<Term> },
}

impl Term {
    pub fn text(&self) -> String {
        match self {
            Term::True => "true".into(),
            Term::App(p, v) => format!("({p} {v})"),
            Term::And(parts) => format!("(and {})", parts.iter().map(Term::text).collect::<Vec<_>>().join(" ")),
            Term::Quant { kind, bound, restriction, body } => {
                format!("({kind} ({}) {} {})", bound.join(" "), restriction.text(), body.text())
            }
        }
    }
}

fn random_leaf<R: Rng>(rng: &mut R, scope: &[&'static str]) -> Term {
    let app = |rng: &mut R| Term::App(*PREDS.choose(rng).unwrap(), *scope.choose(rng).unwrap());
    match rng.gen_range(0..5) {
        0 => Term::True,
        1 => Term::And(vec![app(rng), app(rng)]),
        _ => app(rng),
    }
}

/// A quantifier over some of `free` variables, whose children may contain
/// one more quantifier level while `depth > 1`.
pub fn random_quant<R: Rng>(
    rng: &mut R,
    kinds: &[&'static str],
    scope: &[&'static str],
    free: &[&'static str],
    depth: usize,
) -> Term {
    let k = rng.gen_range(1..=free.len());
    let mut bound: Vec<&'static str> = free.choose_multiple(rng, k).copied().collect();
    bound.sort();
    let inner_scope: Vec<&'static str> = scope.iter().chain(bound.iter()).copied().collect();
    let rest: Vec<&'static str> = free.iter().copied().filter(|v| !bound.contains(v)).collect();
    let child = |rng: &mut R| {
        if depth > 1 && !rest.is_empty() && rng.gen_bool(0.5) {
            random_quant(rng, kinds, &inner_scope, &rest, depth - 1)
        } else {
            random_leaf(rng, &inner_scope)
        }
    };
    let restriction = Box::new(child(rng));
    let body = Box::new(child(rng));
    Term::Quant { kind: kinds.choose(rng).unwrap(), bound, restriction, body }
}

/// Truth under the classical cardinality conditions, by enumerating
/// domain tuples.
pub fn classical_truth(w: &ClassicalWorld, t: &Term, env: &BTreeMap<&str, &str>) -> bool {
    match t {
        Term::True => true,
        Term::App(p, v) => w.preds[p].contains(&env[v]),
        Term::And(parts) => parts.iter().all(|c| classical_truth(w, c, env)),
        Term::Quant { kind, bound, restriction, body } => {
            let mut tuples: Vec<BTreeMap<&str, &str>> = vec![env.clone()];
            for b in bound {
                tuples = tuples
                    .into_iter()
                    .flat_map(|e| {
                        w.domain(b).iter().map(move |x| {
                            let mut e = e.clone();
                            e.insert(b, x);
                            e
                        })
                    })
                    .collect();
            }
            let r: Vec<&BTreeMap<&str, &str>> = tuples.iter().filter(|e| classical_truth(w, restriction, e)).collect();
            let rb = r.iter().filter(|e| classical_truth(w, body, e)).count();
            match *kind {
                "some" => rb > 0,
                "every" => rb == r.len(),
                "no" => rb == 0,
                "most" => 2 * rb > r.len(),
                other => panic!("not a classical quantifier: {other}"),
            }
        }
    }
}

/// A vague world over `vars` with random masses on a random support and
/// random ψ tables (some entries 0 or 1, some absent).
pub fn random_vague_world(rng: &mut impl Rng, n_pixies: usize, vars: &[&str], preds: &[&str]) -> World {
    let pixies = &PIXIES[..n_pixies];
    let mut tuples: Vec<Vec<&str>> = vec![vec![]];
    for _ in vars {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                pixies.iter().map(move |x| {
                    let mut t = t.clone();
                    t.push(*x);
                    t
                })
            })
            .collect();
    }
    let mut weights: Vec<f64> = tuples.iter().map(|_| if rng.gen_bool(0.7) { rng.gen_range(1..=8) as f64 } else { 0.0 }).collect();
    if weights.iter().all(|w| *w == 0.0) {
        weights[0] = 1.0;
    }
    let total: f64 = weights.iter().sum();
    let joint: Vec<(Vec<&str>, f64)> =
        tuples.into_iter().zip(weights).filter(|(_, w)| *w > 0.0).map(|(t, w)| (t, w / total)).collect();
    let tables: Vec<(&str, Vec<(&str, f64)>)> = preds
        .iter()
        .map(|p| {
            let table = pixies
                .iter()
                .filter_map(|x| match rng.gen_range(0..6) {
                    0 => None,
                    1 => Some((*x, 1.0)),
                    2 => Some((*x, 0.0)),
                    _ => Some((*x, rng.gen_range(1..=9) as f64 / 10.0)),
                })
                .collect();
            (*p, table)
        })
        .collect();
    world(pixies, vars, &joint, &tables)
}

/// `Σ P·ψ_R·ψ_B / Σ P·ψ_R` straight from the joint table, where `ψ_R` and
/// `ψ_B` are products of predicate values over (predicate, variable) pairs.
pub fn direct_conditional(w: &World, restriction: &[(&str, &str)], body: &[(&str, &str)]) -> Option<f64> {
    let space = w.model.space();
    let vars = w.model.variables();
    let product = |row: &[usize], atoms: &[(&str, &str)]| -> f64 {
        atoms
            .iter()
            .map(|(p, v)| {
                let i = vars.iter().position(|x| x == v).unwrap();
                w.lexicon.get(p).unwrap().prob(space.name(row[i]))
            })
            .product()
    };
    let (mut num, mut den) = (0.0, 0.0);
    for (row, mass) in w.model.joint() {
        let r = product(row, restriction);
        den += mass * r;
        num += mass * r * product(row, body);
    }
    (den > 0.0).then(|| num / den)
}

/// Farmers `f1..` each owning `owned` donkeys and feeding the first `fed`
/// of them. Farmer and donkey are uniform and independent; the event
/// variables record whether the farmer owns and feeds the donkey.
pub fn donkey_world(farms: &[(usize, usize)]) -> World {
    let farmers: Vec<String> = (1..=farms.len()).map(|i| format!("f{i}")).collect();
    let mut donkeys: Vec<(String, usize, bool)> = Vec::new();
    for (i, &(owned, fed)) in farms.iter().enumerate() {
        for j in 0..owned {
            donkeys.push((format!("d{}_{}", i + 1, j + 1), i, j < fed));
        }
    }
    if donkeys.is_empty() {
        donkeys.push(("stray".into(), usize::MAX, false));
    }
    let mut pixies: Vec<&str> = farmers.iter().map(String::as_str).collect();
    pixies.extend(donkeys.iter().map(|d| d.0.as_str()));
    pixies.extend(["owning", "feeding", "idle"]);
    let mass = 1.0 / (farmers.len() * donkeys.len()) as f64;
    let mut joint = Vec::new();
    for (i, f) in farmers.iter().enumerate() {
        for (d, owner, fed) in &donkeys {
            let owns = *owner == i;
            let y = if owns { "owning" } else { "idle" };
            let w = if owns && *fed { "feeding" } else { "idle" };
            joint.push((vec![f.as_str(), y, d.as_str(), w], mass));
        }
    }
    let preds = vec![
        ("farmer", farmers.iter().map(|f| (f.as_str(), 1.0)).collect()),
        ("donkey", donkeys.iter().map(|d| (d.0.as_str(), 1.0)).collect()),
        ("own", vec![("owning", 1.0)]),
        ("feed", vec![("feeding", 1.0)]),
    ];
    world(&pixies, &["x", "y", "z", "w"], &joint, &preds)
}

/// Smallest fed proportion among farmers who own a donkey; 1 if none do.
pub fn min_proportion(farms: &[(usize, usize)]) -> f64 {
    farms.iter().filter(|(o, _)| *o > 0).map(|&(o, f)| f as f64 / o as f64).fold(1.0, f64::min)
}

/// Mass-weighted truth of a precise term: the ratio sums joint rows that
/// agree with `env`, as the classical definition does when individuals
/// carry weights.
pub fn weighted_truth(w: &World, t: &Term, env: &BTreeMap<&str, usize>) -> bool {
    let vars = w.model.variables();
    let var = |v: &str| vars.iter().position(|x| x == v).unwrap();
    match t {
        Term::True => true,
        Term::App(p, v) => w.lexicon.get(p).map_or(0.0, |q| q.prob(w.model.space().name(env[v]))) == 1.0,
        Term::And(parts) => parts.iter().all(|c| weighted_truth(w, c, env)),
        Term::Quant { kind, bound, restriction, body } => {
            let (mut num, mut den) = (0.0, 0.0);
            for (row, mass) in w.model.joint() {
                if env.iter().any(|(v, x)| row[var(v)] != *x) {
                    continue;
                }
                let mut e = env.clone();
                for b in bound {
                    e.insert(b, row[var(b)]);
                }
                if weighted_truth(w, restriction, &e) {
                    den += mass;
                    if weighted_truth(w, body, &e) {
                        num += mass;
                    }
                }
            }
            match *kind {
                "some" => num > 0.0,
                "every" => num == den,
                "no" => num == 0.0,
                "most" => 2.0 * num > den,
                other => panic!("not a classical quantifier: {other}"),
            }
        }
    }
}

/// A precise world with masses that are multiples of 1/16, so sums of
/// masses are exact.
pub fn random_dyadic_world(rng: &mut impl Rng) -> World {
    let n_pixies = rng.gen_range(1..=4);
    let pixies = &PIXIES[..n_pixies];
    let n_vars = rng.gen_range(1..=3);
    let vars = &VARS[..n_vars];
    let mut all: Vec<Vec<&str>> = vec![vec![]];
    for _ in vars {
        all = all
            .into_iter()
            .flat_map(|t| {
                pixies.iter().map(move |x| {
                    let mut t = t.clone();
                    t.push(*x);
                    t
                })
            })
            .collect();
    }
    all.shuffle(rng);
    let k = rng.gen_range(1..=all.len().min(16));
    let rows: Vec<Vec<&str>> = all.into_iter().take(k).collect();
    // a random composition of 16 into k positive parts
    let mut cuts: Vec<usize> = (1..16).collect::<Vec<_>>().choose_multiple(rng, k - 1).copied().collect();
    cuts.sort_unstable();
    cuts.push(16);
    let masses: Vec<usize> = cuts.iter().scan(0, |prev, &c| {
        let m = c - *prev;
        *prev = c;
        Some(m)
    }).collect();
    let joint: Vec<(Vec<&str>, f64)> = rows.into_iter().zip(masses).map(|(r, m)| (r, m as f64 / 16.0)).collect();
    let preds: Vec<(&str, Vec<(&str, f64)>)> = PREDS
        .iter()
        .map(|p| (*p, pixies.iter().filter(|_| rng.gen_bool(0.5)).map(|x| (*x, 1.0)).collect()))
        .collect();
    world(pixies, vars, &joint, &preds)
}
