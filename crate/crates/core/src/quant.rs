//! Quantifier shapes.
//!
//! A quantifier maps the conditional probability of its body given its
//! restriction (the *ratio*) to a probability of truth. Precise quantifiers
//! are step functions valued in `{0, 1}`; vague ones take intermediate values
//! and are turned into distributions over precise functions by drawing a
//! uniform threshold `θ ∈ (0, 1]` and returning truth where `f(ratio) ≥ θ`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantError {
    #[error("ratio {0} is outside [0, 1]")]
    RatioOutOfRange(f64),
    #[error("invalid custom shape: {0}")]
    InvalidShape(String),
    #[error("unknown quantifier keyword `{0}`")]
    UnknownKind(String),
}

/// One piece of a custom shape: the closed or open interval between `start`
/// and `end`, on which the shape is the straight line from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub start_closed: bool,
    pub end_closed: bool,
    pub from: f64,
    pub to: f64,
}

impl Segment {
    fn contains(&self, x: f64) -> bool {
        let above = if self.start_closed { x >= self.start } else { x > self.start };
        let below = if self.end_closed { x <= self.end } else { x < self.end };
        above && below
    }

    fn value_at(&self, x: f64) -> f64 {
        if self.end == self.start {
            return self.from;
        }
        let t = (x - self.start) / (self.end - self.start);
        self.from + t * (self.to - self.from)
    }
}

/// Piecewise constant-plus-linear shape with explicit open/closed endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    segments: Vec<Segment>,
    empty_restriction: f64,
}

impl ShapeSpec {
    /// Builds a shape, checking that the segments tile `[0, 1]` exactly once
    /// and stay inside `[0, 1]`.
    pub fn new(segments: Vec<Segment>, empty_restriction: f64) -> Result<Self, QuantError> {
        if segments.is_empty() {
            return Err(QuantError::InvalidShape("no segments".into()));
        }
        if !(0.0..=1.0).contains(&empty_restriction) {
            return Err(QuantError::InvalidShape(format!(
                "empty-restriction value {empty_restriction} outside [0, 1]"
            )));
        }
        let first = &segments[0];
        if first.start != 0.0 || !first.start_closed {
            return Err(QuantError::InvalidShape("shape must start with a closed 0".into()));
        }
        let last = &segments[segments.len() - 1];
        if last.end != 1.0 || !last.end_closed {
            return Err(QuantError::InvalidShape("shape must end with a closed 1".into()));
        }
        for seg in &segments {
            if seg.end < seg.start {
                return Err(QuantError::InvalidShape(format!(
                    "segment [{}, {}] is reversed",
                    seg.start, seg.end
                )));
            }
            if seg.start == seg.end && !(seg.start_closed && seg.end_closed) {
                return Err(QuantError::InvalidShape(format!("empty point segment at {}", seg.start)));
            }
            for v in [seg.from, seg.to] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(QuantError::InvalidShape(format!("value {v} outside [0, 1]")));
                }
            }
        }
        for pair in segments.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.end != b.start || a.end_closed == b.start_closed {
                return Err(QuantError::InvalidShape(format!(
                    "segments must meet at {} with exactly one closed side",
                    a.end
                )));
            }
        }
        Ok(Self { segments, empty_restriction })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn empty_restriction(&self) -> f64 {
        self.empty_restriction
    }

    /// The piecewise description of a built-in kind.
    pub fn builtin(kind: &QuantifierKind) -> ShapeSpec {
        let seg = |start, end, start_closed, end_closed, from, to| Segment {
            start,
            end,
            start_closed,
            end_closed,
            from,
            to,
        };
        let segments = match kind {
            QuantifierKind::Some => vec![seg(0.0, 0.0, true, true, 0.0, 0.0), seg(0.0, 1.0, false, true, 1.0, 1.0)],
            QuantifierKind::Every => vec![seg(0.0, 1.0, true, false, 0.0, 0.0), seg(1.0, 1.0, true, true, 1.0, 1.0)],
            QuantifierKind::No => vec![seg(0.0, 0.0, true, true, 1.0, 1.0), seg(0.0, 1.0, false, true, 0.0, 0.0)],
            QuantifierKind::Most => vec![seg(0.0, 0.5, true, true, 0.0, 0.0), seg(0.5, 1.0, false, true, 1.0, 1.0)],
            QuantifierKind::Many | QuantifierKind::Generic => vec![seg(0.0, 1.0, true, true, 0.0, 1.0)],
            QuantifierKind::Few => vec![seg(0.0, 1.0, true, true, 1.0, 0.0)],
            QuantifierKind::Custom(spec) => return spec.clone(),
        };
        ShapeSpec { segments, empty_restriction: empty_restriction_value(kind) }
    }

    pub fn value(&self, ratio: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| s.contains(ratio))
            .map(|s| s.value_at(ratio))
            .unwrap_or(0.0)
    }

    fn is_precise(&self) -> bool {
        self.segments
            .iter()
            .all(|s| s.from == s.to && (s.from == 0.0 || s.from == 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuantifierKind {
    Some,
    Every,
    No,
    Most,
    Many,
    Few,
    Generic,
    Custom(ShapeSpec),
}

impl QuantifierKind {
    pub const KEYWORDS: [&'static str; 8] = ["some", "a", "every", "no", "most", "many", "few", "generic"];

    /// Parses a proposition keyword; `a` is an alias of `some`.
    pub fn from_keyword(word: &str) -> Result<Self, QuantError> {
        Ok(match word {
            "some" | "a" => Self::Some,
            "every" => Self::Every,
            "no" => Self::No,
            "most" => Self::Most,
            "many" => Self::Many,
            "few" => Self::Few,
            "generic" => Self::Generic,
            other => return Err(QuantError::UnknownKind(other.to_string())),
        })
    }

    /// Canonical keyword, `None` for custom shapes.
    pub fn keyword(&self) -> Option<&'static str> {
        Some(match self {
            Self::Some => "some",
            Self::Every => "every",
            Self::No => "no",
            Self::Most => "most",
            Self::Many => "many",
            Self::Few => "few",
            Self::Generic => "generic",
            Self::Custom(_) => return None,
        })
    }

    /// Vague kinds take intermediate truth values and carry a threshold.
    pub fn is_vague(&self) -> bool {
        match self {
            Self::Some | Self::Every | Self::No | Self::Most => false,
            Self::Many | Self::Few | Self::Generic => true,
            Self::Custom(spec) => !spec.is_precise(),
        }
    }
}

impl fmt::Display for QuantifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.keyword() {
            Some(k) => f.write_str(k),
            None => f.write_str("custom"),
        }
    }
}

/// `f_Q(ratio)`.
pub fn shape_value(kind: &QuantifierKind, ratio: f64) -> Result<f64, QuantError> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(QuantError::RatioOutOfRange(ratio));
    }
    Ok(shape_value_unchecked(kind, ratio))
}

pub(crate) fn shape_value_unchecked(kind: &QuantifierKind, ratio: f64) -> f64 {
    let step = |b: bool| if b { 1.0 } else { 0.0 };
    match kind {
        QuantifierKind::Some => step(ratio > 0.0),
        QuantifierKind::Every => step(ratio == 1.0),
        QuantifierKind::No => step(ratio == 0.0),
        QuantifierKind::Most => step(ratio > 0.5),
        QuantifierKind::Many | QuantifierKind::Generic => ratio,
        QuantifierKind::Few => 1.0 - ratio,
        QuantifierKind::Custom(spec) => spec.value(ratio),
    }
}

/// Truth value used when the restriction has zero mass, so the ratio is
/// undefined. Precise kinds follow the cardinality conditions at `|R| = 0`.
pub fn empty_restriction_value(kind: &QuantifierKind) -> f64 {
    match kind {
        QuantifierKind::Every | QuantifierKind::No | QuantifierKind::Few | QuantifierKind::Generic => 1.0,
        QuantifierKind::Some | QuantifierKind::Most | QuantifierKind::Many => 0.0,
        QuantifierKind::Custom(spec) => spec.empty_restriction,
    }
}

/// A threshold interval `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ThresholdInterval {
    pub fn measure(&self) -> f64 {
        self.hi - self.lo
    }

    /// `[value ≥ θ]` for any `θ` in the interval, valid for the values the
    /// interval was partitioned from.
    pub fn admits(&self, value: f64) -> bool {
        value >= self.hi
    }
}

/// Cuts `(0, 1]` at the distinct values in `(0, 1)`, so that `[v ≥ θ]` is
/// constant on each interval for every input `v`. Intervals are returned in
/// increasing order; all have positive measure.
pub fn threshold_partition(values: impl IntoIterator<Item = f64>) -> Vec<ThresholdInterval> {
    let mut cuts: Vec<f64> = values.into_iter().filter(|v| *v > 0.0 && *v < 1.0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = 0.0;
    for cut in cuts.into_iter().chain(std::iter::once(1.0)) {
        out.push(ThresholdInterval { lo, hi: cut });
        lo = cut;
    }
    out
}
