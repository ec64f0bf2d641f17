//! Independent reference evaluators shared by the integration tests.
//!
//! Nothing here calls into the graph, planner or metrics code it checks:
//! graphs are plain edge lists and n-grams are counted by linear scans.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use storyplan::event::{EventForm, EventSequence};
use storyplan::graph::GraphBuilder;
use storyplan::EventGraph;

pub type EdgeList = Vec<(String, String, u64)>;

pub fn graph_from_edges(nodes: &[String], edges: &EdgeList) -> EventGraph {
    let mut b = GraphBuilder::new();
    for n in nodes {
        b.add_node(&EventForm::new(n.clone(), 0));
    }
    for (h, t, w) in edges {
        b.add_edge(&EventForm::new(h.clone(), 0), &EventForm::new(t.clone(), 0), *w);
    }
    b.finish()
}

/// Random graph over at most `max_nodes` nodes with weights in `1..=max_weight`.
pub fn random_graph(rng: &mut impl Rng, max_nodes: usize, max_weight: u64) -> (Vec<String>, EdgeList) {
    let n = rng.random_range(1..=max_nodes);
    let nodes: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let mut edges = EdgeList::new();
    for h in &nodes {
        for t in &nodes {
            if rng.random_bool(0.45) {
                edges.push((h.clone(), t.clone(), rng.random_range(1..=max_weight)));
            }
        }
    }
    (nodes, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    EdgeWeight,
    NodeIn,
    NodeTotal,
}

/// Direct evaluation of the candidate distribution from an edge list:
/// `f = omega * d * gamma`, `gamma = (rept_m - min(c, rept_m)) / (rept_m * in)`,
/// normalized over the out-edges of `prev`. Empty when the mass is zero.
pub fn brute_distribution(
    edges: &EdgeList,
    prev: &str,
    history: &[String],
    rept_m: u32,
    mode: Mode,
    omega: f64,
) -> BTreeMap<String, f64> {
    let in_deg = |node: &str| -> u64 { edges.iter().filter(|e| e.1 == node).map(|e| e.2).sum() };
    let out_deg = |node: &str| -> u64 { edges.iter().filter(|e| e.0 == node).map(|e| e.2).sum() };
    let mut scores = BTreeMap::new();
    for (h, t, w) in edges {
        if h != prev {
            continue;
        }
        let count = history.iter().filter(|x| *x == t).count() as f64;
        let rept = rept_m as f64;
        let gamma = (rept - count.min(rept)) / (rept * in_deg(t) as f64);
        let d = match mode {
            Mode::EdgeWeight => *w as f64,
            Mode::NodeIn => in_deg(t) as f64,
            Mode::NodeTotal => (in_deg(t) + out_deg(t)) as f64,
        };
        scores.insert(t.clone(), omega * d * gamma);
    }
    let total: f64 = scores.values().sum();
    if total <= 0.0 {
        return BTreeMap::new();
    }
    scores.into_iter().map(|(k, v)| (k, v / total)).collect()
}

/// Random event sequences over a small vocabulary, with occasional gaps.
pub fn random_corpus(rng: &mut impl Rng, stories: usize) -> Vec<EventSequence> {
    let vocab = ["a", "b", "c", "d", "had test", "went home", "not drive"];
    (0..stories)
        .map(|i| {
            let len = rng.random_range(0..=6);
            EventSequence {
                story_id: format!("s{i}"),
                slots: (0..len)
                    .map(|_| {
                        if rng.random_bool(0.15) {
                            None
                        } else {
                            let form = *vocab.choose(rng).unwrap();
                            let trigger = usize::from(form == "not drive");
                            Some(EventForm::new(form, trigger))
                        }
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Count adjacent, gap-free pairs directly.
pub fn brute_pair_counts(corpus: &[EventSequence]) -> BTreeMap<(String, String), u64> {
    let mut counts = BTreeMap::new();
    for seq in corpus {
        for i in 1..seq.slots.len() {
            if let (Some(a), Some(b)) = (&seq.slots[i - 1], &seq.slots[i]) {
                *counts.entry((a.form.clone(), b.form.clone())).or_insert(0) += 1;
            }
        }
    }
    counts
}

fn grams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
}

fn occurrences(list: &[Vec<String>], g: &[String]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

fn distinct(list: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for g in list {
        if !out.contains(g) {
            out.push(g.clone());
        }
    }
    out
}

/// Sentence BLEU with add-one smoothing of zero precisions.
pub fn brute_bleu(cand: &[String], refs: &[Vec<String>], n: usize) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let mut product = 1.0;
    for k in 1..=n {
        let cg = grams(cand, k);
        let rgs: Vec<Vec<Vec<String>>> = refs.iter().map(|r| grams(r, k)).collect();
        let mut matched = 0;
        for g in distinct(&cg) {
            let best = rgs.iter().map(|rg| occurrences(rg, &g)).max().unwrap_or(0);
            matched += occurrences(&cg, &g).min(best);
        }
        let p = if matched == 0 {
            1.0 / (cg.len() as f64 + 1.0)
        } else {
            matched as f64 / cg.len() as f64
        };
        product *= p;
    }
    let c = cand.len() as f64;
    let mut best_len = refs[0].len();
    for r in refs {
        let (d, bd) = ((r.len() as f64 - c).abs(), (best_len as f64 - c).abs());
        if d < bd || (d == bd && r.len() < best_len) {
            best_len = r.len();
        }
    }
    let bp = if c >= best_len as f64 { 1.0 } else { (1.0 - best_len as f64 / c).exp() };
    bp * product.powf(1.0 / n as f64)
}

fn prf(overlap: usize, c: usize, r: usize) -> (f64, f64, f64) {
    if overlap == 0 || c == 0 || r == 0 {
        return (0.0, 0.0, 0.0);
    }
    let rec = overlap as f64 / r as f64;
    let prec = overlap as f64 / c as f64;
    (rec, prec, 2.0 * rec * prec / (rec + prec))
}

/// (recall, precision, f1).
pub fn brute_rouge_n(cand: &[String], reference: &[String], n: usize) -> (f64, f64, f64) {
    let cg = grams(cand, n);
    let rg = grams(reference, n);
    let overlap: usize = distinct(&cg)
        .iter()
        .map(|g| occurrences(&cg, g).min(occurrences(&rg, g)))
        .sum();
    prf(overlap, cg.len(), rg.len())
}

fn is_subsequence(sub: &[&String], seq: &[String]) -> bool {
    let mut it = seq.iter();
    sub.iter().all(|s| it.any(|x| x == *s))
}

/// LCS by enumerating every subsequence of the candidate (keep inputs short).
pub fn brute_rouge_l(cand: &[String], reference: &[String]) -> (f64, f64, f64) {
    assert!(cand.len() <= 16);
    let mut lcs = 0;
    for mask in 0u32..(1 << cand.len()) {
        let sub: Vec<&String> = (0..cand.len()).filter(|i| mask & (1 << i) != 0).map(|i| &cand[i]).collect();
        if sub.len() > lcs && is_subsequence(&sub, reference) {
            lcs = sub.len();
        }
    }
    prf(lcs, cand.len(), reference.len())
}

pub fn random_tokens(rng: &mut impl Rng, max_len: usize) -> Vec<String> {
    let vocab = ["a", "b", "c", "d", "e"];
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| vocab.choose(rng).unwrap().to_string()).collect()
}
