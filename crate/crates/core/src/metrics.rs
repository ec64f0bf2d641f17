//! Automatic metrics for event sequences and generated stories.
//!
//! BLEU is sentence-level (uniform weights over orders `1..=n`, clipped counts
//! against the best reference, brevity penalty against the closest reference
//! length) with add-one smoothing of zero precisions: an order with no clipped
//! match scores `1 / (candidate n-grams + 1)`. Corpus BLEU is the mean of the
//! sentence scores.
//!
//! Intra-story repetition uses word trigrams and percent scale.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

/// Label attached to reports so results name the repetition variant in use.
pub const REPETITION_VARIANT: &str = "trigram-percent";

/// Lowercased whitespace tokens; empty tokens cannot occur.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn from_text(text: &str) -> Self {
        TokenSequence {
            tokens: text.split_whitespace().map(str::to_lowercase).collect(),
        }
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        Self::from_text(
            &tokens
                .iter()
                .map(|t| t.as_ref())
                .collect::<Vec<_>>()
                .join(" "),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn ngrams(&self, n: usize) -> impl Iterator<Item = &[String]> {
        // windows(0) panics; callers reject n = 0.
        self.tokens.windows(n.max(1))
    }
}

fn ngram_counts(seq: &TokenSequence, n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for g in seq.ngrams(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

/// Unique n-grams over total n-grams across the corpus.
pub fn distinct_n(corpus: &[TokenSequence], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut unique: HashSet<&[String]> = HashSet::new();
    let mut total = 0usize;
    for seq in corpus {
        for g in seq.ngrams(n) {
            unique.insert(g);
            total += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        unique.len() as f64 / total as f64
    }
}

pub fn bleu_n(candidate: &TokenSequence, references: &[TokenSequence], n: usize) -> f64 {
    if candidate.is_empty() || references.is_empty() || n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let cand = ngram_counts(candidate, k);
        let total: usize = cand.values().sum();
        let ref_counts: Vec<_> = references.iter().map(|r| ngram_counts(r, k)).collect();
        let clipped: usize = cand
            .iter()
            .map(|(g, &c)| {
                let max_ref = ref_counts.iter().map(|r| r.get(g).copied().unwrap_or(0)).max();
                c.min(max_ref.unwrap_or(0))
            })
            .sum();
        let p = if clipped == 0 {
            1.0 / (total as f64 + 1.0)
        } else {
            clipped as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let c = candidate.len();
    // Closest reference length, shorter on ties.
    let r = references
        .iter()
        .map(TokenSequence::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap_or(0);
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    bp * (log_sum / n as f64).exp()
}

/// Mean sentence BLEU over aligned candidate/reference pairs.
pub fn corpus_bleu(pairs: &[(TokenSequence, Vec<TokenSequence>)], n: usize) -> f64 {
    mean(pairs.iter().map(|(c, r)| bleu_n(c, r, n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RougeScore {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl RougeScore {
    const ZERO: RougeScore = RougeScore {
        recall: 0.0,
        precision: 0.0,
        f1: 0.0,
    };

    fn from_counts(overlap: usize, cand_total: usize, ref_total: usize) -> Self {
        if overlap == 0 || cand_total == 0 || ref_total == 0 {
            return Self::ZERO;
        }
        let recall = overlap as f64 / ref_total as f64;
        let precision = overlap as f64 / cand_total as f64;
        RougeScore {
            recall,
            precision,
            f1: 2.0 * precision * recall / (precision + recall),
        }
    }
}

pub fn rouge_n(candidate: &TokenSequence, reference: &TokenSequence, n: usize) -> RougeScore {
    if n == 0 || reference.is_empty() {
        return RougeScore::ZERO;
    }
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    RougeScore::from_counts(overlap, cand.values().sum(), refs.values().sum())
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l(candidate: &TokenSequence, reference: &TokenSequence) -> RougeScore {
    if reference.is_empty() {
        return RougeScore::ZERO;
    }
    let lcs = lcs_len(candidate.tokens(), reference.tokens());
    RougeScore::from_counts(lcs, candidate.len(), reference.len())
}

/// Repetition at one sentence position of a story.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositionRepetition {
    /// Percent of this sentence's trigrams already seen earlier in the story.
    pub value: f64,
    /// The sentence had fewer than three tokens and contributes 0.
    pub short: bool,
}

pub fn intra_story_repetition(sentences: &[TokenSequence]) -> Vec<PositionRepetition> {
    let mut seen: HashSet<&[String]> = HashSet::new();
    let mut out = Vec::with_capacity(sentences.len());
    for (i, s) in sentences.iter().enumerate() {
        let trigrams: Vec<&[String]> = s.ngrams(3).collect();
        let short = trigrams.is_empty();
        let value = if i == 0 || short {
            0.0
        } else {
            let repeated = trigrams.iter().filter(|g| seen.contains(*g)).count();
            100.0 * repeated as f64 / trigrams.len() as f64
        };
        out.push(PositionRepetition { value, short });
        seen.extend(trigrams);
    }
    out
}

/// Mean over positions 2.. of each story, then mean over stories. Stories
/// with fewer than two sentences are not counted.
pub fn ir_aggregate(corpus: &[Vec<TokenSequence>]) -> f64 {
    mean(corpus.iter().filter(|s| s.len() >= 2).map(|story| {
        let curve = intra_story_repetition(story);
        mean(curve[1..].iter().map(|p| p.value))
    }))
}

/// Mean repetition at each sentence position across stories (position 1 first).
pub fn repetition_curve(corpus: &[Vec<TokenSequence>]) -> Vec<f64> {
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for story in corpus {
        for (i, p) in intra_story_repetition(story).iter().enumerate() {
            if sums.len() <= i {
                sums.push((0.0, 0));
            }
            sums[i].0 += p.value;
            sums[i].1 += 1;
        }
    }
    sums.into_iter().map(|(s, c)| s / c as f64).collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub mode: String,
    /// Column name -> value, in table order.
    pub columns: Vec<(String, f64)>,
    /// Mean intra-story repetition per sentence position (stories mode).
    pub repetition_curve: Vec<f64>,
    pub repetition_variant: String,
    pub sizes: BTreeMap<String, usize>,
}

impl MetricReport {
    pub fn value(&self, column: &str) -> Option<f64> {
        self.columns.iter().find(|(c, _)| c == column).map(|(_, v)| *v)
    }

    /// Aligned plain-text table: header row then one value row.
    pub fn to_table(&self) -> String {
        let cells: Vec<String> = self.columns.iter().map(|(_, v)| format!("{v:.4}")).collect();
        let widths: Vec<usize> = self
            .columns
            .iter()
            .zip(&cells)
            .map(|((c, _), v)| c.len().max(v.len()))
            .collect();
        let row = |items: Vec<&str>| {
            items
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = row(self.columns.iter().map(|(c, _)| c.as_str()).collect());
        out.push('\n');
        out.push_str(&row(cells.iter().map(String::as_str).collect()));
        out.push('\n');
        out
    }

    /// Position/value rows for plotting the repetition curve.
    pub fn curve_tsv(&self) -> String {
        let mut out = String::from("position\trepetition\n");
        for (i, v) in self.repetition_curve.iter().enumerate() {
            out.push_str(&format!("{}\t{v}\n", i + 1));
        }
        out
    }
}

/// Referenced metrics over event sequences: R-1, R-2, R-L, B-1, B-2, D-1, D-2.
pub fn event_report(pairs: &[(TokenSequence, TokenSequence)]) -> MetricReport {
    let hyps: Vec<TokenSequence> = pairs.iter().map(|(h, _)| h.clone()).collect();
    let f1 = |f: &dyn Fn(&TokenSequence, &TokenSequence) -> RougeScore| {
        mean(pairs.iter().map(|(h, r)| f(h, r).f1))
    };
    let bleu = |n| mean(pairs.iter().map(|(h, r)| bleu_n(h, std::slice::from_ref(r), n)));
    MetricReport {
        mode: "events".into(),
        columns: vec![
            ("R-1".into(), f1(&|h, r| rouge_n(h, r, 1))),
            ("R-2".into(), f1(&|h, r| rouge_n(h, r, 2))),
            ("R-L".into(), f1(&rouge_l)),
            ("B-1".into(), bleu(1)),
            ("B-2".into(), bleu(2)),
            ("D-1".into(), distinct_n(&hyps, 1)),
            ("D-2".into(), distinct_n(&hyps, 2)),
        ],
        repetition_curve: Vec::new(),
        repetition_variant: REPETITION_VARIANT.into(),
        sizes: BTreeMap::from([("pairs".to_string(), pairs.len())]),
    }
}

/// Unreferenced story metrics: IR-A, D-2, D-3, D-4, plus the repetition curve.
pub fn story_report(stories: &[Vec<TokenSequence>]) -> MetricReport {
    // Distinct-n over whole stories.
    let flat: Vec<TokenSequence> = stories
        .iter()
        .map(|s| TokenSequence {
            tokens: s.iter().flat_map(|x| x.tokens.iter().cloned()).collect(),
        })
        .collect();
    MetricReport {
        mode: "stories".into(),
        columns: vec![
            ("IR-A".into(), ir_aggregate(stories)),
            ("D-2".into(), distinct_n(&flat, 2)),
            ("D-3".into(), distinct_n(&flat, 3)),
            ("D-4".into(), distinct_n(&flat, 4)),
        ],
        repetition_curve: repetition_curve(stories),
        repetition_variant: REPETITION_VARIANT.into(),
        sizes: BTreeMap::from([
            ("stories".to_string(), stories.len()),
            ("sentences".to_string(), stories.iter().map(Vec::len).sum()),
        ]),
    }
}
