//! HTTP client for a remote generation service.
//!
//! `POST {endpoint}/advise` with `{"context": "...", "history": ["..."]}`,
//! answered by `{"event_text": "..."}`; `GET {endpoint}/health` answers
//! `{"status": "ok"}`. The generated text is snapped onto the graph here, never
//! on the service side.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::graph::EventGraph;

use super::{
    lexical_advise, snap_to_graph, Advisor, AdvisorError, AdvisorRequest, AdvisorResponse,
};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    context: String,
    history: &'a [String],
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    event_text: String,
}

#[derive(Debug, Deserialize)]
struct WireHealth {
    status: String,
}

pub struct RemoteAdvisor {
    endpoint: String,
    agent: ureq::Agent,
    /// `Some(rept_m)` enables the lexical fallback.
    fallback_rept_m: Option<u32>,
}

impl RemoteAdvisor {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteAdvisor {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            agent,
            fallback_rept_m: Some(1),
        }
    }

    pub fn with_fallback(mut self, rept_m: Option<u32>) -> Self {
        self.fallback_rept_m = rept_m;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Ask the service for raw event text.
    pub fn request_text(&self, req: &AdvisorRequest) -> Result<String, AdvisorError> {
        let body = WireRequest {
            context: req.context_tokens.join(" "),
            history: &req.history,
        };
        let mut resp = self
            .agent
            .post(format!("{}/advise", self.endpoint))
            .send_json(&body)
            .map_err(|e| AdvisorError::Remote(e.to_string()))?;
        let wire: WireResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| AdvisorError::Remote(format!("bad response body: {e}")))?;
        if wire.event_text.trim().is_empty() {
            return Err(AdvisorError::Remote("empty event_text".into()));
        }
        Ok(wire.event_text)
    }

    pub fn health(&self) -> Result<(), AdvisorError> {
        let mut resp = self
            .agent
            .get(format!("{}/health", self.endpoint))
            .call()
            .map_err(|e| AdvisorError::Remote(e.to_string()))?;
        let h: WireHealth = resp
            .body_mut()
            .read_json()
            .map_err(|e| AdvisorError::Remote(format!("bad health body: {e}")))?;
        if h.status == "ok" {
            Ok(())
        } else {
            Err(AdvisorError::Remote(format!("service status {:?}", h.status)))
        }
    }
}

impl Advisor for RemoteAdvisor {
    fn advise(&self, req: &AdvisorRequest, g: &EventGraph) -> Result<AdvisorResponse, AdvisorError> {
        if g.is_empty() {
            return Err(AdvisorError::EmptyGraph);
        }
        req.validate()?;
        match self.request_text(req) {
            Ok(raw_text) => Ok(AdvisorResponse {
                event: snap_to_graph(&raw_text, g)?.to_string(),
                raw_text,
                fallback: false,
                note: None,
            }),
            Err(err) => match self.fallback_rept_m {
                Some(rept_m) => {
                    let mut r = lexical_advise(req, g, rept_m)?;
                    r.fallback = true;
                    r.note = Some(err.to_string());
                    Ok(r)
                }
                None => Err(err),
            },
        }
    }

    fn name(&self) -> &str {
        "remote"
    }
}

/// One-shot remote advice with the lexical fallback enabled.
pub fn remote_advise(
    req: &AdvisorRequest,
    g: &EventGraph,
    endpoint: &str,
    timeout: Duration,
) -> Result<AdvisorResponse, AdvisorError> {
    RemoteAdvisor::new(endpoint, timeout).advise(req, g)
}
