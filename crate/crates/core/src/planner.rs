//! Graph-based event planning.
//!
//! For a previous event `prev` and the history `H` (the start event followed by
//! every event chosen so far), each successor `c` of `prev` is scored
//!
//! ```text
//! f(c)  = omega * d(c) * gamma(c)
//! gamma = (rept_m - min(count(c, H), rept_m)) / (rept_m * in_degree(c))
//! p(c)  = f(c) / sum over successors of f
//! ```
//!
//! where `d(c)` is selected by [`DegreeMode`]. The next event is drawn from
//! `p`. When `prev` has no successor, or every score is zero, the advisor
//! picks the next event instead.
//!
//! Randomness comes from one ChaCha8 generator per plan seeded with
//! `PlanConfig::seed` (`rand_chacha::ChaCha8Rng::seed_from_u64`). The plan
//! length is drawn once, uniformly from `l_min..=l_max`, before any event.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::advisor::{Advisor, AdvisorError, AdvisorRequest};
use crate::corpus::ParsedToken;
use crate::event::{extract_event, Event, ExtractOptions};
use crate::graph::EventGraph;

pub type PlanRng = ChaCha8Rng;

/// Probabilities must sum to one within this bound.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    /// Weight of the edge `prev -> candidate`.
    EdgeWeight,
    /// Weighted in-degree of the candidate.
    NodeIn,
    /// Weighted total degree of the candidate.
    NodeTotal,
}

impl fmt::Display for DegreeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegreeMode::EdgeWeight => "edge_weight",
            DegreeMode::NodeIn => "node_in",
            DegreeMode::NodeTotal => "node_total",
        })
    }
}

impl FromStr for DegreeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "edge_weight" => Ok(DegreeMode::EdgeWeight),
            "node_in" => Ok(DegreeMode::NodeIn),
            "node_total" => Ok(DegreeMode::NodeTotal),
            _ => Err(format!(
                "unknown degree mode {s:?} (expected edge_weight, node_in or node_total)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanConfig {
    /// Maximum repetitions of one event in the history.
    pub rept_m: u32,
    pub l_min: usize,
    pub l_max: usize,
    pub degree_mode: DegreeMode,
    pub seed: u64,
    pub omega: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            rept_m: 1,
            l_min: 4,
            l_max: 4,
            degree_mode: DegreeMode::EdgeWeight,
            seed: 42,
            omega: 1.0,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::Config(m.to_string()));
        if self.rept_m < 1 {
            return bad("rept_m must be at least 1");
        }
        if self.l_min < 1 {
            return bad("l_min must be at least 1");
        }
        if self.l_min > self.l_max {
            return bad("l_min must not exceed l_max");
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return bad("omega must be a positive finite number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSource {
    Graph,
    Advisor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSource {
    /// The context event is itself a graph node.
    Context,
    /// A graph node sharing the context event's trigger.
    Reselect,
    Advisor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanStep {
    pub event: String,
    pub source: StepSource,
    /// Candidate distribution the event was drawn from; empty for advisor steps.
    pub distribution: Vec<(String, f64)>,
    /// Set when the advisor answered through its fallback.
    pub advisor_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub start: String,
    pub start_source: StartSource,
    pub target_length: usize,
    pub events: Vec<String>,
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid plan configuration: {0}")]
    Config(String),
    #[error("the event graph is empty")]
    EmptyGraph,
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("advisor failed after {} planned events: {source}", partial.events.len())]
    Advisor {
        source: AdvisorError,
        partial: Box<PlanResult>,
    },
    #[error("advisor failed to choose a start event: {0}")]
    Start(AdvisorError),
}

/// Repetition penalty of `candidate` given the history.
pub fn repetition_penalty(
    candidate: &str,
    history: &[String],
    rept_m: u32,
    g: &EventGraph,
) -> Result<f64, PlanError> {
    let in_degree = g.in_degree(candidate);
    if in_degree == 0 {
        return Err(PlanError::Contract(format!(
            "candidate {candidate:?} has no incoming edges"
        )));
    }
    if rept_m == 0 {
        return Err(PlanError::Config("rept_m must be at least 1".into()));
    }
    let seen = history.iter().filter(|h| *h == candidate).count() as u64;
    let rept = rept_m as u64;
    Ok((rept - seen.min(rept)) as f64 / (rept * in_degree) as f64)
}

/// Unnormalized score of the transition `prev -> candidate`.
pub fn event_score(
    prev: &str,
    candidate: &str,
    history: &[String],
    cfg: &PlanConfig,
    g: &EventGraph,
) -> Result<f64, PlanError> {
    let weight = g.weight(prev, candidate).ok_or_else(|| {
        PlanError::Contract(format!("no edge {prev:?} -> {candidate:?}"))
    })?;
    let degree = match cfg.degree_mode {
        DegreeMode::EdgeWeight => weight,
        DegreeMode::NodeIn => g.in_degree(candidate),
        DegreeMode::NodeTotal => g.total_degree(candidate),
    };
    Ok(cfg.omega * degree as f64 * repetition_penalty(candidate, history, cfg.rept_m, g)?)
}

/// Normalized distribution over the successors of `prev`, in successor order.
/// Empty when `prev` is a sink or every candidate scores zero.
pub fn candidate_distribution(
    prev: &str,
    history: &[String],
    cfg: &PlanConfig,
    g: &EventGraph,
) -> Vec<(String, f64)> {
    let scored: Vec<(String, f64)> = g
        .successors(prev)
        .into_iter()
        .map(|(c, _)| {
            // Every successor has an incoming edge, so scoring cannot fail.
            let s = event_score(prev, c, history, cfg, g).unwrap_or(0.0);
            (c.to_string(), s)
        })
        .collect();
    let total: f64 = scored.iter().map(|(_, s)| s).sum();
    if total.is_nan() || total <= 0.0 {
        return Vec::new();
    }
    scored.into_iter().map(|(c, s)| (c, s / total)).collect()
}

pub fn sample_next<R: Rng + ?Sized>(dist: &[(String, f64)], rng: &mut R) -> Result<String, PlanError> {
    if dist.is_empty() {
        return Err(PlanError::Contract("cannot sample from an empty distribution".into()));
    }
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE || dist.iter().any(|(_, p)| p.is_nan() || *p < 0.0) {
        return Err(PlanError::Contract(format!(
            "distribution is not normalized (sum {total})"
        )));
    }
    let index = WeightedIndex::new(dist.iter().map(|(_, p)| *p))
        .map_err(|e| PlanError::Contract(e.to_string()))?;
    Ok(dist[index.sample(rng)].0.clone())
}

/// The leading context as the planner sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanContext {
    pub event: Option<Event>,
    pub tokens: Vec<String>,
}

impl PlanContext {
    pub fn from_parse(parse: &[ParsedToken], opts: &ExtractOptions) -> Self {
        PlanContext {
            event: extract_event(parse, opts),
            tokens: parse.iter().map(|t| t.surface.clone()).collect(),
        }
    }
}

fn start_request(tokens: &[String]) -> AdvisorRequest {
    AdvisorRequest::new(tokens.to_vec(), Vec::new())
}

/// Choose the event planning starts from.
pub fn resolve_start<A: Advisor + ?Sized>(
    context_event: Option<&Event>,
    context_tokens: &[String],
    g: &EventGraph,
    advisor: &A,
) -> Result<(String, StartSource), PlanError> {
    if g.is_empty() {
        return Err(PlanError::EmptyGraph);
    }
    if let Some(e) = context_event {
        if g.contains(e.string_form()) {
            return Ok((e.string_form().to_string(), StartSource::Context));
        }
        if let Some(first) = g.find_by_verb(&e.trigger().text).first() {
            return Ok((first.form.clone(), StartSource::Reselect));
        }
    }
    let resp = advisor
        .advise(&start_request(context_tokens), g)
        .map_err(PlanError::Start)?;
    if !g.contains(&resp.event) {
        return Err(PlanError::Start(AdvisorError::InvalidRequest(format!(
            "advisor returned {:?}, which is not a graph event",
            resp.event
        ))));
    }
    Ok((resp.event, StartSource::Advisor))
}

/// Plan an event sequence for `context`.
pub fn plan<A: Advisor + ?Sized>(
    context: &PlanContext,
    g: &EventGraph,
    cfg: &PlanConfig,
    advisor: &A,
) -> Result<PlanResult, PlanError> {
    cfg.validate()?;
    let mut rng = PlanRng::seed_from_u64(cfg.seed);
    let target_length = rng.random_range(cfg.l_min..=cfg.l_max);
    let (start, start_source) = resolve_start(context.event.as_ref(), &context.tokens, g, advisor)?;

    let mut result = PlanResult {
        start: start.clone(),
        start_source,
        target_length,
        events: Vec::with_capacity(target_length),
        steps: Vec::with_capacity(target_length),
    };
    let mut history = vec![start];
    for _ in 0..target_length {
        let prev = history.last().expect("history starts non-empty");
        let distribution = candidate_distribution(prev, &history, cfg, g);
        let step = if distribution.is_empty() {
            let req = AdvisorRequest::new(context.tokens.clone(), history.clone());
            let resp = match advisor.advise(&req, g) {
                Ok(r) if g.contains(&r.event) => r,
                Ok(r) => {
                    return Err(PlanError::Advisor {
                        source: AdvisorError::InvalidRequest(format!(
                            "advisor returned {:?}, which is not a graph event",
                            r.event
                        )),
                        partial: Box::new(result),
                    })
                }
                Err(source) => {
                    return Err(PlanError::Advisor {
                        source,
                        partial: Box::new(result),
                    })
                }
            };
            PlanStep {
                event: resp.event,
                source: StepSource::Advisor,
                distribution,
                advisor_fallback: resp.fallback,
            }
        } else {
            PlanStep {
                event: sample_next(&distribution, &mut rng)?,
                source: StepSource::Graph,
                distribution,
                advisor_fallback: false,
            }
        };
        history.push(step.event.clone());
        result.events.push(step.event.clone());
        result.steps.push(step);
    }
    Ok(result)
}

/// Per-item seed derived from a run seed and a stable key (e.g. a story id),
/// so each story's plan is independent of file order.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    // FNV-1a over the key, then a splitmix64 finalizer over the combination.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
