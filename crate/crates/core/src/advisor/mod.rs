//! Advisors pick a graph event when graph inference has no candidate.
//!
//! Every advisor answers with an event that is a node of the supplied graph;
//! free text is mapped onto the graph by Jaccard similarity ([`snap_to_graph`]).

mod lexical;
mod remote;

pub use lexical::{lexical_advise, LexicalAdvisor};
pub use remote::{remote_advise, RemoteAdvisor, DEFAULT_TIMEOUT};

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::EventGraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdvisorError {
    #[error("the event graph is empty")]
    EmptyGraph,
    #[error("invalid advisor request: {0}")]
    InvalidRequest(String),
    #[error("advisor service failed: {0}")]
    Remote(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvisorRequest {
    pub context_tokens: Vec<String>,
    /// String forms of the events planned so far.
    pub history: Vec<String>,
}

impl AdvisorRequest {
    pub fn new(context_tokens: Vec<String>, history: Vec<String>) -> Self {
        AdvisorRequest {
            context_tokens,
            history,
        }
    }

    pub fn validate(&self) -> Result<(), AdvisorError> {
        if self.history.is_empty() && self.context_tokens.iter().all(|t| t.trim().is_empty()) {
            return Err(AdvisorError::InvalidRequest(
                "context tokens are required when the history is empty".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdvisorResponse {
    /// A node of the graph the request was answered against.
    pub event: String,
    /// The suggestion before snapping.
    pub raw_text: String,
    /// Set when a remote advisor could not answer and the lexical one did.
    pub fallback: bool,
    pub note: Option<String>,
}

pub trait Advisor {
    fn advise(&self, req: &AdvisorRequest, g: &EventGraph) -> Result<AdvisorResponse, AdvisorError>;

    fn name(&self) -> &str;
}

impl<A: Advisor + ?Sized> Advisor for &A {
    fn advise(&self, req: &AdvisorRequest, g: &EventGraph) -> Result<AdvisorResponse, AdvisorError> {
        (**self).advise(req, g)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<A: Advisor + ?Sized> Advisor for Box<A> {
    fn advise(&self, req: &AdvisorRequest, g: &EventGraph) -> Result<AdvisorResponse, AdvisorError> {
        (**self).advise(req, g)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Makes an advisor that is not `Sync` shareable by running one call at a time.
pub struct Serialized<A> {
    inner: Mutex<A>,
    name: String,
}

impl<A: Advisor> Serialized<A> {
    pub fn new(inner: A) -> Self {
        let name = format!("serialized({})", inner.name());
        Serialized {
            inner: Mutex::new(inner),
            name,
        }
    }
}

impl<A: Advisor> Advisor for Serialized<A> {
    fn advise(&self, req: &AdvisorRequest, g: &EventGraph) -> Result<AdvisorResponse, AdvisorError> {
        let guard = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        guard.advise(req, g)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Lowercased whitespace tokens.
pub fn token_set(text: &str) -> BTreeSet<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// `|a ∩ b|` and `|a ∪ b|`.
fn overlap(a: &BTreeSet<String>, b: &BTreeSet<String>) -> (u64, u64) {
    let inter = a.intersection(b).count() as u64;
    (inter, a.len() as u64 + b.len() as u64 - inter)
}

/// Jaccard index; 0 when both sets are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    match overlap(a, b) {
        (_, 0) => 0.0,
        (i, u) => i as f64 / u as f64,
    }
}

/// A non-negative rational, compared exactly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ratio {
    num: u128,
    den: u128,
}

impl Ratio {
    pub(crate) fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            Ratio { num: 0, den: 1 }
        } else {
            Ratio {
                num: num as u128,
                den: den as u128,
            }
        }
    }

    pub(crate) fn scale(self, k: u64) -> Self {
        Ratio {
            num: self.num * k as u128,
            den: self.den,
        }
    }

    pub(crate) fn cmp(&self, other: &Ratio) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Pick the best-scoring node: highest score, then highest total degree, then
/// lexicographically smallest form.
pub(crate) fn best_node<'g>(
    g: &'g EventGraph,
    candidates: impl Iterator<Item = &'g str>,
    score: impl Fn(&str) -> Ratio,
) -> Option<&'g str> {
    let mut best: Option<(&str, Ratio, u64)> = None;
    for form in candidates {
        let s = score(form);
        let d = g.total_degree(form);
        let better = match &best {
            None => true,
            Some((bf, bs, bd)) => s
                .cmp(bs)
                .then(d.cmp(bd))
                .then_with(|| bf.cmp(&form))
                == Ordering::Greater,
        };
        if better {
            best = Some((form, s, d));
        }
    }
    best.map(|(f, _, _)| f)
}

/// Map free text onto the most Jaccard-similar graph node.
pub fn snap_to_graph<'g>(raw_text: &str, g: &'g EventGraph) -> Result<&'g str, AdvisorError> {
    let query = token_set(raw_text);
    best_node(g, g.nodes().iter().map(|n| n.form.as_str()), |form| {
        let (i, u) = overlap(&query, &token_set(form));
        Ratio::new(i, u)
    })
    .ok_or(AdvisorError::EmptyGraph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{EventForm, EventSequence};
    use crate::graph::build_graph;

    fn set(s: &[&str]) -> BTreeSet<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    pub(crate) fn graph(seqs: &[&[&str]]) -> EventGraph {
        let seqs: Vec<EventSequence> = seqs
            .iter()
            .map(|s| EventSequence {
                story_id: "x".into(),
                slots: s.iter().map(|f| Some(EventForm::new(*f, 0))).collect(),
            })
            .collect();
        build_graph(&seqs)
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard(&set(&["had", "test"]), &set(&["had", "test"])), 1.0);
        assert!((jaccard(&set(&["had", "test"]), &set(&["had", "fun"])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 0.0);
        assert_eq!(jaccard(&set(&["a"]), &set(&[])), 0.0);
    }

    #[test]
    fn snap_prefers_highest_jaccard() {
        let g = graph(&[&["studied"], &["went home"]]);
        assert_eq!(snap_to_graph("went studied hard", &g).unwrap(), "studied");
        assert_eq!(snap_to_graph("went home", &g).unwrap(), "went home");
    }

    #[test]
    fn snap_all_zero_falls_to_degree_then_lex() {
        let g = graph(&[&["b", "c"], &["b", "a"]]);
        // b has total degree 2, a and c have 1.
        assert_eq!(snap_to_graph("zzz", &g).unwrap(), "b");
        let flat = graph(&[&["y"], &["x"]]);
        assert_eq!(snap_to_graph("zzz", &flat).unwrap(), "x");
    }

    #[test]
    fn snap_empty_graph() {
        assert_eq!(snap_to_graph("x", &EventGraph::default()), Err(AdvisorError::EmptyGraph));
    }

    #[test]
    fn request_validation() {
        assert!(AdvisorRequest::new(vec![], vec![]).validate().is_err());
        assert!(AdvisorRequest::new(vec![], vec!["a".into()]).validate().is_ok());
        assert!(AdvisorRequest::new(vec!["i".into()], vec![]).validate().is_ok());
    }

    struct NotSync(std::cell::Cell<u32>);

    impl Advisor for NotSync {
        fn advise(&self, _: &AdvisorRequest, g: &EventGraph) -> Result<AdvisorResponse, AdvisorError> {
            self.0.set(self.0.get() + 1);
            let event = g.nodes()[0].form.clone();
            Ok(AdvisorResponse {
                raw_text: event.clone(),
                event,
                fallback: false,
                note: None,
            })
        }

        fn name(&self) -> &str {
            "not-sync"
        }
    }

    #[test]
    fn serialized_adapter_is_shareable() {
        fn assert_sync<T: Sync>(_: &T) {}
        let adv = Serialized::new(NotSync(std::cell::Cell::new(0)));
        assert_sync(&adv);
        let g = graph(&[&["a", "b"]]);
        let req = AdvisorRequest::new(vec!["x".into()], vec![]);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| adv.advise(&req, &g).unwrap());
            }
        });
        assert_eq!(adv.inner.lock().unwrap().0.get(), 4);
    }
}
