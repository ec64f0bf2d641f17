use std::collections::{BTreeSet, HashMap};

use crate::graph::EventGraph;

use super::{
    best_node, overlap, token_set, Advisor, AdvisorError, AdvisorRequest, AdvisorResponse, Ratio,
};

/// Deterministic advisor scoring each node by
/// `jaccard(context ∪ history tokens, node tokens) × (1 + total degree)`.
///
/// Nodes already used `rept_m` times in the history are skipped unless every
/// node is exhausted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexicalAdvisor {
    pub rept_m: u32,
}

impl Default for LexicalAdvisor {
    fn default() -> Self {
        LexicalAdvisor { rept_m: 1 }
    }
}

pub fn lexical_advise(
    req: &AdvisorRequest,
    g: &EventGraph,
    rept_m: u32,
) -> Result<AdvisorResponse, AdvisorError> {
    if g.is_empty() {
        return Err(AdvisorError::EmptyGraph);
    }
    req.validate()?;

    let mut query: BTreeSet<String> = req
        .context_tokens
        .iter()
        .flat_map(|t| token_set(t))
        .collect();
    let mut used: HashMap<&str, u32> = HashMap::new();
    for h in &req.history {
        query.extend(token_set(h));
        *used.entry(h.as_str()).or_default() += 1;
    }

    let score = |form: &str| {
        let (i, u) = overlap(&query, &token_set(form));
        Ratio::new(i, u).scale(1 + g.total_degree(form))
    };
    let fresh = g
        .nodes()
        .iter()
        .map(|n| n.form.as_str())
        .filter(|f| used.get(f).copied().unwrap_or(0) < rept_m);
    let event = match best_node(g, fresh, score) {
        Some(e) => e,
        None => best_node(g, g.nodes().iter().map(|n| n.form.as_str()), score)
            .ok_or(AdvisorError::EmptyGraph)?,
    };
    let raw_text = req
        .context_tokens
        .iter()
        .chain(&req.history)
        .cloned()
        .collect::<Vec<_>>()
        .join(" ");
    Ok(AdvisorResponse {
        event: event.to_string(),
        raw_text,
        fallback: false,
        note: None,
    })
}

impl Advisor for LexicalAdvisor {
    fn advise(&self, req: &AdvisorRequest, g: &EventGraph) -> Result<AdvisorResponse, AdvisorError> {
        lexical_advise(req, g, self.rept_m)
    }

    fn name(&self) -> &str {
        "lexical"
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::graph;
    use super::*;

    fn req(ctx: &[&str], hist: &[&str]) -> AdvisorRequest {
        AdvisorRequest::new(
            ctx.iter().map(|s| s.to_string()).collect(),
            hist.iter().map(|s| s.to_string()).collect(),
        )
    }

    #[test]
    fn context_overlap_wins() {
        // "had test" gets total degree 3, "went home" 1.
        let g = graph(&[&["had test", "went home"], &["had test", "x y"], &["z", "had test"]]);
        assert_eq!(g.total_degree("had test"), 3);
        let r = lexical_advise(&req(&["i", "had", "a", "test"], &[]), &g, 1).unwrap();
        assert_eq!(r.event, "had test");
        assert!(!r.fallback);
    }

    #[test]
    fn exhausted_history_events_skipped() {
        let g = graph(&[&["had test", "had fun"], &["went home"]]);
        let r = lexical_advise(&req(&[], &["had test"]), &g, 1).unwrap();
        assert_eq!(r.event, "had fun");
        // With a larger budget the repeated event is still allowed.
        let r = lexical_advise(&req(&[], &["had test"]), &g, 2).unwrap();
        assert_eq!(r.event, "had test");
    }

    #[test]
    fn all_exhausted_falls_back_to_all_nodes() {
        let g = graph(&[&["a"]]);
        assert_eq!(lexical_advise(&req(&[], &["a"]), &g, 1).unwrap().event, "a");
    }

    #[test]
    fn single_node_graph() {
        let g = graph(&[&["only"]]);
        assert_eq!(lexical_advise(&req(&["nothing", "shared"], &[]), &g, 1).unwrap().event, "only");
    }

    #[test]
    fn errors() {
        assert_eq!(
            lexical_advise(&req(&["x"], &[]), &EventGraph::default(), 1),
            Err(AdvisorError::EmptyGraph)
        );
        let g = graph(&[&["a"]]);
        assert!(matches!(
            lexical_advise(&req(&[], &[]), &g, 1),
            Err(AdvisorError::InvalidRequest(_))
        ));
    }
}
