//! Storyline planning over an event graph.
//!
//! The pipeline: load stories and their CoNLL-U parses ([`corpus`]), extract one
//! verb-phrase event per sentence ([`event`]), count adjacent event pairs into
//! a weighted directed graph ([`graph`]), then plan event sequences by sampling
//! repetition-penalized transitions ([`planner`]), asking an [`advisor`] when
//! the graph has nothing to offer. [`metrics`] scores the results.

pub mod advisor;
pub mod corpus;
pub mod event;
pub mod graph;
pub mod metrics;
pub mod planner;

pub use advisor::{Advisor, AdvisorRequest, AdvisorResponse, LexicalAdvisor, RemoteAdvisor};
pub use corpus::{ParsedStory, ParsedToken, StoryRecord};
pub use event::{Event, EventForm, EventSequence, EventSlot, ExtractOptions, LabelMap};
pub use graph::{build_graph, EventGraph};
pub use planner::{plan, DegreeMode, PlanConfig, PlanContext, PlanResult};
