//! Rational Speech Acts over graded meanings.
//!
//! The meaning `M(u, s)` of utterance `u` in state `s` is the probability of
//! truth the chosen engine assigns to the utterance's scope graph in the
//! state's world. Boolean worlds give 0/1 meanings, so the literal listener
//! rules out states where the utterance is false.

use serde::Serialize;
use thiserror::Error;

use crate::engine::{evaluate, EngineError, EngineKind, EngineOptions};
use crate::model::{LiftScheme, World, MASS_TOLERANCE};
use crate::scope::{validate, ScopeDiagnostic, ScopeGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RsaError {
    #[error("scenario has no states")]
    NoStates,
    #[error("scenario has no utterances")]
    NoUtterances,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("state `{state}` has invalid prior {prior}")]
    BadPrior { state: String, prior: f64 },
    #[error("priors sum to {0}, not 1")]
    PriorsNotNormalized(f64),
    #[error("utterance `{utterance}` has invalid cost {cost}")]
    BadCost { utterance: String, cost: f64 },
    #[error("rationality must be positive, got {0}")]
    BadAlpha(f64),
    #[error("utterance `{utterance}` uses engine `{engine}`, which needs sampling parameters")]
    UnsupportedEngine { utterance: String, engine: &'static str },
    #[error("utterance `{utterance}` is invalid in state `{state}`: {}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidUtterance { utterance: String, state: String, diagnostics: Vec<ScopeDiagnostic> },
    #[error("evaluating `{utterance}` in state `{state}`: {source}")]
    Meaning { utterance: String, state: String, source: EngineError },
    #[error("unknown utterance `{0}`")]
    UnknownUtterance(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("utterance `{0}` is false in every state with positive prior")]
    AllFalse(String),
    #[error("no utterance is true in state `{0}`")]
    NoViableUtterance(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone)]
pub struct RsaState {
    pub id: String,
    pub prior: f64,
    pub world: World,
    pub scheme: LiftScheme,
    /// Optional numeric label, such as a feeding proportion.
    pub param: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Utterance {
    pub id: String,
    pub graph: ScopeGraph,
    pub cost: f64,
    pub engine: EngineKind,
}

#[derive(Debug, Clone)]
pub struct RsaScenario {
    states: Vec<RsaState>,
    utterances: Vec<Utterance>,
    alpha: Alpha,
}

impl RsaScenario {
    pub fn new(states: Vec<RsaState>, utterances: Vec<Utterance>, alpha: Alpha) -> Result<Self, RsaError> {
        if states.is_empty() {
            return Err(RsaError::NoStates);
        }
        if utterances.is_empty() {
            return Err(RsaError::NoUtterances);
        }
        let mut ids = std::collections::BTreeSet::new();
        for id in states.iter().map(|s| &s.id) {
            if !ids.insert(id) {
                return Err(RsaError::DuplicateId(id.clone()));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for id in utterances.iter().map(|u| &u.id) {
            if !ids.insert(id) {
                return Err(RsaError::DuplicateId(id.clone()));
            }
        }
        for s in &states {
            if !s.prior.is_finite() || s.prior < 0.0 {
                return Err(RsaError::BadPrior { state: s.id.clone(), prior: s.prior });
            }
        }
        let total: f64 = states.iter().map(|s| s.prior).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(RsaError::PriorsNotNormalized(total));
        }
        if let Alpha::Finite(a) = alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(RsaError::BadAlpha(a));
            }
        }
        for u in &utterances {
            if !u.cost.is_finite() || u.cost < 0.0 {
                return Err(RsaError::BadCost { utterance: u.id.clone(), cost: u.cost });
            }
            if u.engine == EngineKind::MonteCarlo {
                return Err(RsaError::UnsupportedEngine { utterance: u.id.clone(), engine: u.engine.name() });
            }
            for s in &states {
                validate(&u.graph, &s.world.model, &s.world.lexicon).map_err(|diagnostics| {
                    RsaError::InvalidUtterance { utterance: u.id.clone(), state: s.id.clone(), diagnostics }
                })?;
            }
        }
        Ok(Self { states, utterances, alpha })
    }

    pub fn states(&self) -> &[RsaState] {
        &self.states
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: Alpha) -> Result<Self, RsaError> {
        if let Alpha::Finite(a) = alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(RsaError::BadAlpha(a));
            }
        }
        Ok(Self { alpha, ..self.clone() })
    }
}

/// A distribution over ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posterior {
    pub support: Vec<String>,
    pub probs: Vec<f64>,
}

impl Posterior {
    pub fn get(&self, id: &str) -> Option<f64> {
        self.support.iter().position(|s| s == id).map(|i| self.probs[i])
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }
}

fn normalize(support: Vec<String>, weights: Vec<f64>) -> Option<Posterior> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return None;
    }
    Some(Posterior { support, probs: weights.into_iter().map(|w| w / total).collect() })
}

/// A scenario with its meaning matrix evaluated.
#[derive(Debug, Clone)]
pub struct Rsa {
    scenario: RsaScenario,
    /// `meanings[u][s]`
    meanings: Vec<Vec<f64>>,
}

impl Rsa {
    pub fn new(scenario: RsaScenario, opts: &EngineOptions) -> Result<Self, RsaError> {
        let mut meanings = Vec::with_capacity(scenario.utterances.len());
        for u in &scenario.utterances {
            let mut row = Vec::with_capacity(scenario.states.len());
            for s in &scenario.states {
                let o = EngineOptions { scheme: s.scheme, ..opts.clone() };
                let r = evaluate(u.engine, &u.graph, &s.world.model, &s.world.lexicon, &o, None).map_err(|source| {
                    RsaError::Meaning { utterance: u.id.clone(), state: s.id.clone(), source }
                })?;
                row.push(r.probability);
            }
            meanings.push(row);
        }
        Ok(Self { scenario, meanings })
    }

    pub fn scenario(&self) -> &RsaScenario {
        &self.scenario
    }

    pub fn meanings(&self) -> &[Vec<f64>] {
        &self.meanings
    }

    /// Same meanings, different rationality.
    pub fn with_alpha(&self, alpha: Alpha) -> Result<Self, RsaError> {
        Ok(Self { scenario: self.scenario.with_alpha(alpha)?, meanings: self.meanings.clone() })
    }

    fn utterance_index(&self, id: &str) -> Result<usize, RsaError> {
        self.scenario
            .utterances
            .iter()
            .position(|u| u.id == id)
            .ok_or_else(|| RsaError::UnknownUtterance(id.to_string()))
    }

    fn state_index(&self, id: &str) -> Result<usize, RsaError> {
        self.scenario.states.iter().position(|s| s.id == id).ok_or_else(|| RsaError::UnknownState(id.to_string()))
    }

    fn state_ids(&self) -> Vec<String> {
        self.scenario.states.iter().map(|s| s.id.clone()).collect()
    }

    fn l0(&self, u: usize) -> Option<Vec<f64>> {
        let w: Vec<f64> = self.scenario.states.iter().zip(&self.meanings[u]).map(|(s, m)| s.prior * m).collect();
        normalize(Vec::new(), w).map(|p| p.probs)
    }

    /// `L0(s | u) ∝ prior(s) · M(u, s)`.
    pub fn literal_listener(&self, utterance: &str) -> Result<Posterior, RsaError> {
        let u = self.utterance_index(utterance)?;
        let probs = self.l0(u).ok_or_else(|| RsaError::AllFalse(utterance.to_string()))?;
        Ok(Posterior { support: self.state_ids(), probs })
    }

    fn s1(&self, s: usize) -> Option<Vec<f64>> {
        let utilities: Vec<f64> = (0..self.scenario.utterances.len())
            .map(|u| match self.l0(u) {
                Some(l0) if l0[s] > 0.0 => l0[s].ln() - self.scenario.utterances[u].cost,
                _ => f64::NEG_INFINITY,
            })
            .collect();
        let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            return None;
        }
        let weights: Vec<f64> = match self.scenario.alpha {
            Alpha::Infinite => utilities
                .iter()
                .map(|&x| if x.is_finite() && (best - x).abs() <= 1e-12 * best.abs().max(1.0) { 1.0 } else { 0.0 })
                .collect(),
            Alpha::Finite(a) => utilities.iter().map(|&x| if x.is_finite() { (a * (x - best)).exp() } else { 0.0 }).collect(),
        };
        normalize(Vec::new(), weights).map(|p| p.probs)
    }

    /// Utterance distribution of a speaker who observes `state` and aims at
    /// the literal listener.
    pub fn pragmatic_speaker(&self, state: &str) -> Result<Posterior, RsaError> {
        let s = self.state_index(state)?;
        let probs = self.s1(s).ok_or_else(|| RsaError::NoViableUtterance(state.to_string()))?;
        Ok(Posterior { support: self.scenario.utterances.iter().map(|u| u.id.clone()).collect(), probs })
    }

    /// `L1(s | u) ∝ prior(s) · S1(u | s)`. States in which no utterance is
    /// viable contribute nothing.
    pub fn pragmatic_listener(&self, utterance: &str) -> Result<Posterior, RsaError> {
        let u = self.utterance_index(utterance)?;
        let weights: Vec<f64> = self
            .scenario
            .states
            .iter()
            .enumerate()
            .map(|(s, st)| self.s1(s).map(|sp| st.prior * sp[u]).unwrap_or(0.0))
            .collect();
        normalize(self.state_ids(), weights).ok_or_else(|| RsaError::AllFalse(utterance.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadingState {
    pub id: String,
    pub param: Option<f64>,
    pub prior: f64,
    pub meaning: f64,
    pub literal: f64,
    pub pragmatic: f64,
}

/// How the pragmatic listener's posterior over parameterised states (such
/// as feeding proportions) concentrates after hearing an utterance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadingReport {
    pub utterance: String,
    pub states: Vec<ReadingState>,
    pub prior_mean: Option<f64>,
    pub posterior_mean: Option<f64>,
    pub entropy: f64,
    /// Posterior mass on states whose parameter is 0.
    pub zero_param_mass: f64,
    /// Smallest parameter keeping posterior mass above 1e-9.
    pub lowest_supported_param: Option<f64>,
    /// `strong` when only the largest parameter survives, `weak` otherwise.
    pub reading: &'static str,
}

pub fn reading_selector(rsa: &Rsa, utterance: &str) -> Result<ReadingReport, RsaError> {
    let u = rsa.utterance_index(utterance)?;
    let literal = rsa.literal_listener(utterance)?;
    let pragmatic = rsa.pragmatic_listener(utterance)?;
    let states: Vec<ReadingState> = rsa
        .scenario
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| ReadingState {
            id: s.id.clone(),
            param: s.param,
            prior: s.prior,
            meaning: rsa.meanings[u][i],
            literal: literal.probs[i],
            pragmatic: pragmatic.probs[i],
        })
        .collect();
    let mean = |f: &dyn Fn(&ReadingState) -> f64| -> Option<f64> {
        states.iter().map(|s| s.param.map(|p| p * f(s))).sum::<Option<f64>>()
    };
    let zero_param_mass = states.iter().filter(|s| s.param == Some(0.0)).map(|s| s.pragmatic).sum();
    let lowest_supported_param = states
        .iter()
        .filter(|s| s.pragmatic > 1e-9)
        .filter_map(|s| s.param)
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.min(p))));
    let max_param = states.iter().filter_map(|s| s.param).fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))));
    let reading = match (lowest_supported_param, max_param) {
        (Some(lo), Some(hi)) if lo == hi => "strong",
        _ => "weak",
    };
    Ok(ReadingReport {
        utterance: utterance.to_string(),
        prior_mean: mean(&|s| s.prior),
        posterior_mean: mean(&|s| s.pragmatic),
        entropy: pragmatic.entropy(),
        zero_param_mass,
        lowest_supported_param,
        reading,
        states,
    })
}
