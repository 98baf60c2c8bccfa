//! Probabilistic quantification over finite pixie spaces.
//!
//! Propositions are scope graphs whose quantifier nodes compare the
//! probability of a body given a restriction. Vague predicates are
//! distributions over precise predicates, and vague quantifiers draw a
//! uniform threshold, so precise quantifiers stay non-trivial when their
//! arguments are vague.
//!
//! * [`model`]: pixie spaces, joint distributions, lexicons and lifting.
//! * [`scope`]: scope graphs, free variables and validation.
//! * [`quant`]: quantifier shapes and threshold partitions.
//! * [`engine`]: naive, exact, Monte Carlo and generic fast-path evaluation.
//! * [`rsa`]: literal listener, pragmatic speaker and pragmatic listener.
//! * [`dsl`]: world, proposition and scenario file formats.

pub mod dsl;
pub mod engine;
pub mod model;
pub mod quant;
pub mod rsa;
pub mod scope;

pub use engine::{EngineKind, EngineOptions, EvalResult};
pub use model::{LiftScheme, PixieSpace, SituationModel, VagueLexicon, VaguePredicate, World};
pub use quant::QuantifierKind;
pub use scope::{NodeId, ScopeGraph, ScopeNode};
