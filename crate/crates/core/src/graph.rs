//! Weighted directed event graph.
//!
//! Nodes are event string forms; the weight of `head -> tail` counts how many
//! times `tail` directly followed `head` in the corpus. Once built the graph
//! is immutable and can be shared across planner threads.
//!
//! File format (UTF-8, `\n` line endings):
//!
//! ```text
//! event-graph 1
//! nodes <N>
//! <form>\t<trigger offset>          N lines, sorted by form
//! edges <M>
//! <head>\t<tail>\t<weight>          M lines, sorted by (head, tail)
//! checksum sha256 <hex of every byte above this line>
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::event::{EventForm, EventSequence};

const MAGIC: &str = "event-graph";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported graph file version {found} (expected {VERSION})")]
    Version { found: String },
    #[error("graph file checksum mismatch")]
    Checksum,
    #[error("graph file line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeKind {
    In,
    Out,
    Total,
}

/// Accumulates nodes and edge counts; [`GraphBuilder::finish`] freezes them.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: BTreeMap<String, usize>,
    edges: BTreeMap<(String, String), u64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a node. When the same form is seen with different trigger offsets
    /// the smallest one is kept, so the result is independent of input order.
    pub fn add_node(&mut self, event: &EventForm) {
        self.nodes
            .entry(event.form.clone())
            .and_modify(|t| *t = (*t).min(event.trigger))
            .or_insert(event.trigger);
    }

    pub fn add_edge(&mut self, head: &EventForm, tail: &EventForm, weight: u64) {
        if weight == 0 {
            return;
        }
        self.add_node(head);
        self.add_node(tail);
        *self
            .edges
            .entry((head.form.clone(), tail.form.clone()))
            .or_insert(0) += weight;
    }

    /// Count every adjacent pair of events not separated by a gap.
    pub fn add_sequence(&mut self, slots: &[Option<EventForm>]) {
        for e in slots.iter().flatten() {
            self.add_node(e);
        }
        for pair in slots.windows(2) {
            if let [Some(head), Some(tail)] = pair {
                self.add_edge(head, tail, 1);
            }
        }
    }

    pub fn finish(self) -> EventGraph {
        let nodes: Vec<EventForm> = self
            .nodes
            .into_iter()
            .map(|(form, trigger)| EventForm { form, trigger })
            .collect();
        let index: HashMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.form.clone(), i))
            .collect();
        let n = nodes.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_degree = vec![0u64; n];
        let mut out_degree = vec![0u64; n];
        for ((h, t), w) in self.edges {
            let (h, t) = (index[&h], index[&t]);
            out_edges[h].push((t, w));
            out_degree[h] += w;
            in_degree[t] += w;
        }
        // Node ids follow lexicographic order, so the id breaks weight ties.
        for list in &mut out_edges {
            list.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        }
        let mut by_trigger: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            by_trigger
                .entry(node.trigger_token().to_string())
                .or_default()
                .push(i);
        }
        let total = |i: usize| in_degree[i] + out_degree[i];
        for list in by_trigger.values_mut() {
            list.sort_by(|&a, &b| total(b).cmp(&total(a)).then(a.cmp(&b)));
        }
        EventGraph {
            nodes,
            index,
            out_edges,
            in_degree,
            out_degree,
            by_trigger,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EventGraph {
    nodes: Vec<EventForm>,
    index: HashMap<String, usize>,
    out_edges: Vec<Vec<(usize, u64)>>,
    in_degree: Vec<u64>,
    out_degree: Vec<u64>,
    by_trigger: HashMap<String, Vec<usize>>,
}

impl PartialEq for EventGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.out_edges == other.out_edges
    }
}

impl Eq for EventGraph {}

impl Default for EventGraph {
    fn default() -> Self {
        GraphBuilder::new().finish()
    }
}

pub fn build_graph(sequences: &[EventSequence]) -> EventGraph {
    let mut b = GraphBuilder::new();
    for s in sequences {
        b.add_sequence(&s.slots);
    }
    b.finish()
}

impl EventGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn total_weight(&self) -> u64 {
        self.out_degree.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, form: &str) -> bool {
        self.index.contains_key(form)
    }

    pub fn node(&self, form: &str) -> Option<&EventForm> {
        self.index.get(form).map(|&i| &self.nodes[i])
    }

    /// All nodes in lexicographic order.
    pub fn nodes(&self) -> &[EventForm] {
        &self.nodes
    }

    /// All edges as `(head, tail, weight)`, sorted by `(head, tail)`.
    pub fn edges(&self) -> Vec<(&str, &str, u64)> {
        let mut out: Vec<_> = self
            .out_edges
            .iter()
            .enumerate()
            .flat_map(|(h, list)| {
                list.iter()
                    .map(move |&(t, w)| (self.nodes[h].form.as_str(), self.nodes[t].form.as_str(), w))
            })
            .collect();
        out.sort();
        out
    }

    pub fn weight(&self, head: &str, tail: &str) -> Option<u64> {
        let h = *self.index.get(head)?;
        let t = *self.index.get(tail)?;
        self.out_edges[h].iter().find(|(x, _)| *x == t).map(|&(_, w)| w)
    }

    /// Tails of `form`, by descending weight then lexicographic form.
    pub fn successors(&self, form: &str) -> Vec<(&str, u64)> {
        match self.index.get(form) {
            Some(&h) => self.out_edges[h]
                .iter()
                .map(|&(t, w)| (self.nodes[t].form.as_str(), w))
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn degree(&self, form: &str, kind: DegreeKind) -> u64 {
        let Some(&i) = self.index.get(form) else {
            return 0;
        };
        match kind {
            DegreeKind::In => self.in_degree[i],
            DegreeKind::Out => self.out_degree[i],
            DegreeKind::Total => self.in_degree[i] + self.out_degree[i],
        }
    }

    pub fn in_degree(&self, form: &str) -> u64 {
        self.degree(form, DegreeKind::In)
    }

    pub fn total_degree(&self, form: &str) -> u64 {
        self.degree(form, DegreeKind::Total)
    }

    /// Events triggered by `verb`, by descending total degree then form.
    pub fn find_by_verb(&self, verb: &str) -> Vec<&EventForm> {
        self.by_trigger
            .get(verb)
            .map(|ids| ids.iter().map(|&i| &self.nodes[i]).collect())
            .unwrap_or_default()
    }

    pub fn to_text(&self) -> String {
        let mut body = String::new();
        let _ = writeln!(body, "{MAGIC} {VERSION}");
        let _ = writeln!(body, "nodes {}", self.nodes.len());
        for n in &self.nodes {
            let _ = writeln!(body, "{}\t{}", n.form, n.trigger);
        }
        let edges = self.edges();
        let _ = writeln!(body, "edges {}", edges.len());
        for (h, t, w) in edges {
            let _ = writeln!(body, "{h}\t{t}\t{w}");
        }
        let _ = writeln!(body, "checksum sha256 {}", sha256_hex(body.as_bytes()));
        body
    }

    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        let fmt_err = |line: usize, message: &str| GraphError::Format {
            line,
            message: message.to_string(),
        };
        let header = lines.first().ok_or_else(|| fmt_err(1, "empty file"))?.trim_end();
        match header.split_once(' ') {
            Some((MAGIC, v)) if v == VERSION.to_string() => {}
            Some((MAGIC, v)) => return Err(GraphError::Version { found: v.to_string() }),
            _ => return Err(fmt_err(1, "not an event-graph file")),
        }

        let last = lines.len() - 1;
        let checksum_line = lines[last];
        let Some(expected) = checksum_line
            .strip_suffix('\n')
            .and_then(|l| l.strip_prefix("checksum sha256 "))
        else {
            return Err(fmt_err(lines.len(), "missing checksum line (truncated file?)"));
        };
        let body_len = text.len() - checksum_line.len();
        if sha256_hex(&text.as_bytes()[..body_len]) != expected {
            return Err(GraphError::Checksum);
        }

        let mut cursor = 1;
        let mut next = |what: &str| -> Result<(usize, &str), GraphError> {
            if cursor >= last {
                return Err(fmt_err(cursor + 1, &format!("unexpected end of file, expected {what}")));
            }
            let l = lines[cursor].trim_end_matches('\n');
            cursor += 1;
            Ok((cursor, l))
        };
        let count = |line: (usize, &str), key: &str| -> Result<usize, GraphError> {
            line.1
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| fmt_err(line.0, &format!("expected `{key} <count>`")))
        };

        let mut builder = GraphBuilder::new();
        let n_nodes = count(next("node count")?, "nodes")?;
        for _ in 0..n_nodes {
            let (ln, l) = next("node line")?;
            let (form, trig) = l.split_once('\t').ok_or_else(|| fmt_err(ln, "bad node line"))?;
            let trigger = trig.parse().map_err(|_| fmt_err(ln, "bad trigger offset"))?;
            builder.add_node(&EventForm::new(form, trigger));
        }
        let n_edges = count(next("edge count")?, "edges")?;
        for _ in 0..n_edges {
            let (ln, l) = next("edge line")?;
            let parts: Vec<&str> = l.split('\t').collect();
            let [h, t, w] = parts[..] else {
                return Err(fmt_err(ln, "bad edge line"));
            };
            let w: u64 = w.parse().map_err(|_| fmt_err(ln, "bad edge weight"))?;
            if w == 0 {
                return Err(fmt_err(ln, "zero edge weight"));
            }
            let (Some(h), Some(t)) = (builder.nodes.get(h), builder.nodes.get(t)) else {
                return Err(fmt_err(ln, "edge endpoint is not a node"));
            };
            let (head, tail) = (EventForm::new(parts[0], *h), EventForm::new(parts[1], *t));
            builder.add_edge(&head, &tail, w);
        }
        if cursor != last {
            return Err(fmt_err(cursor + 1, "trailing content before checksum"));
        }
        Ok(builder.finish())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn stats(&self, top_k: usize) -> GraphStats {
        let mut histogram = BTreeMap::new();
        let mut isolated = 0;
        let mut hubs: Vec<(usize, u64)> = Vec::with_capacity(self.nodes.len());
        for i in 0..self.nodes.len() {
            let d = self.in_degree[i] + self.out_degree[i];
            *histogram.entry(d).or_insert(0usize) += 1;
            if d == 0 {
                isolated += 1;
            }
            hubs.push((i, d));
        }
        hubs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        GraphStats {
            nodes: self.node_count(),
            edges: self.edge_count(),
            weight_sum: self.total_weight(),
            isolated_nodes: isolated,
            degree_histogram: histogram,
            top_hubs: hubs
                .into_iter()
                .take(top_k)
                .map(|(i, d)| Hub {
                    event: self.nodes[i].form.clone(),
                    total_degree: d,
                    in_degree: self.in_degree[i],
                    out_degree: self.out_degree[i],
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hub {
    pub event: String,
    pub total_degree: u64,
    pub in_degree: u64,
    pub out_degree: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub weight_sum: u64,
    pub isolated_nodes: usize,
    /// Total weighted degree -> number of nodes.
    pub degree_histogram: BTreeMap<u64, usize>,
    pub top_hubs: Vec<Hub>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}
