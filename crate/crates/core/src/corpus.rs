//! Story corpora and their dependency parses.
//!
//! A corpus file holds one JSON record per line:
//!
//! ```text
//! {"story_id": "s1", "leading_context": "I had a test today.", "sentences": ["I studied hard.", "..."]}
//! ```
//!
//! Parses arrive as CoNLL-U. Every sentence block carries a
//! `# sent_id = <story_id>:<role>:<index>` comment where `role` is `ctx` for
//! the leading context (index `0`) or `sent` for reference sentences
//! (0-based). FORM and LEMMA are lowercased on the way in.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate story_id {0:?}")]
    DuplicateStory(String),
    #[error("line {line}: sentence {sent_id:?}: {message}")]
    Structure {
        line: usize,
        sent_id: String,
        message: String,
    },
    #[error("duplicate sent_id {0:?}")]
    DuplicateSentence(String),
    #[error("story {story_id:?}: no parse for {role} {index}")]
    MissingParse {
        story_id: String,
        role: SentenceRole,
        index: usize,
    },
}

/// One story: the leading context plus its reference sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryRecord {
    pub story_id: String,
    pub leading_context: String,
    #[serde(default)]
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RawRecord {
    story_id: Option<String>,
    leading_context: Option<String>,
    sentences: Option<Vec<String>>,
}

/// Parse a corpus from its line-delimited text. Blank lines are skipped.
pub fn parse_story_corpus(text: &str) -> Result<Vec<StoryRecord>, CorpusError> {
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        let missing = |field: &str| CorpusError::Malformed {
            line: lineno,
            message: format!("missing field `{field}`"),
        };
        let story_id = raw.story_id.ok_or_else(|| missing("story_id"))?;
        let leading_context = raw.leading_context.ok_or_else(|| missing("leading_context"))?;
        if story_id.is_empty() {
            return Err(CorpusError::Malformed {
                line: lineno,
                message: "empty story_id".into(),
            });
        }
        if !seen.insert(story_id.clone()) {
            return Err(CorpusError::DuplicateStory(story_id));
        }
        records.push(StoryRecord {
            story_id,
            leading_context,
            sentences: raw.sentences.unwrap_or_default(),
        });
    }
    Ok(records)
}

pub fn load_story_corpus(path: impl AsRef<Path>) -> Result<Vec<StoryRecord>, CorpusError> {
    parse_story_corpus(&read(path.as_ref())?)
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SentenceRole {
    Context,
    Sentence,
}

impl fmt::Display for SentenceRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentenceRole::Context => "ctx",
            SentenceRole::Sentence => "sent",
        })
    }
}

/// Parsed form of a `sent_id` value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SentenceKey {
    pub story_id: String,
    pub role: SentenceRole,
    pub index: usize,
}

impl SentenceKey {
    pub fn context(story_id: &str) -> Self {
        SentenceKey {
            story_id: story_id.to_string(),
            role: SentenceRole::Context,
            index: 0,
        }
    }

    pub fn sentence(story_id: &str, index: usize) -> Self {
        SentenceKey {
            story_id: story_id.to_string(),
            role: SentenceRole::Sentence,
            index,
        }
    }
}

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.story_id, self.role, self.index)
    }
}

impl FromStr for SentenceKey {
    type Err = String;

    // Split from the right so story ids may themselves contain ':'.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.rsplitn(3, ':');
        let index = parts.next().unwrap_or_default();
        let role = parts.next().ok_or_else(|| format!("bad sent_id {s:?}"))?;
        let story_id = parts.next().ok_or_else(|| format!("bad sent_id {s:?}"))?;
        if story_id.is_empty() {
            return Err(format!("bad sent_id {s:?}: empty story id"));
        }
        let role = match role {
            "ctx" => SentenceRole::Context,
            "sent" => SentenceRole::Sentence,
            other => return Err(format!("bad sent_id {s:?}: unknown role {other:?}")),
        };
        let index = index
            .parse()
            .map_err(|_| format!("bad sent_id {s:?}: index is not an integer"))?;
        Ok(SentenceKey {
            story_id: story_id.to_string(),
            role,
            index,
        })
    }
}

/// One CoNLL-U token row. Columns the pipeline does not use are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedToken {
    /// 1-based position in the sentence.
    pub index: usize,
    pub surface: String,
    pub lemma: String,
    pub upos: Option<String>,
    pub xpos: Option<String>,
    pub feats: String,
    /// Governing token, 0 for the root.
    pub head: usize,
    pub dep_label: String,
    pub deps: String,
    pub misc: String,
}

impl ParsedToken {
    /// Convenience constructor used by fixtures: `_` for the unused columns.
    pub fn new(index: usize, surface: &str, upos: &str, head: usize, dep_label: &str) -> Self {
        ParsedToken {
            index,
            surface: surface.to_lowercase(),
            lemma: surface.to_lowercase(),
            upos: Some(upos.to_string()),
            xpos: None,
            feats: "_".into(),
            head,
            dep_label: dep_label.to_string(),
            deps: "_".into(),
            misc: "_".into(),
        }
    }

    pub fn to_conllu_row(&self) -> String {
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "_".to_string());
        [
            self.index.to_string(),
            self.surface.clone(),
            self.lemma.clone(),
            opt(&self.upos),
            opt(&self.xpos),
            self.feats.clone(),
            self.head.to_string(),
            self.dep_label.clone(),
            self.deps.clone(),
            self.misc.clone(),
        ]
        .join("\t")
    }
}

pub type Parses = HashMap<SentenceKey, Vec<ParsedToken>>;

/// Check the single-root and head-range invariants of one sentence.
pub fn validate_sentence(tokens: &[ParsedToken]) -> Result<(), String> {
    let n = tokens.len();
    let mut roots = 0;
    for (i, t) in tokens.iter().enumerate() {
        if t.index != i + 1 {
            return Err(format!("token {} out of sequence (expected {})", t.index, i + 1));
        }
        if t.head > n {
            return Err(format!("token {} has head {} beyond length {n}", t.index, t.head));
        }
        if t.head == 0 {
            roots += 1;
        }
    }
    if roots != 1 {
        return Err(format!("expected exactly one root, found {roots}"));
    }
    Ok(())
}

/// Render one sentence block, `sent_id` comment first.
pub fn write_conllu_block(key: &SentenceKey, tokens: &[ParsedToken]) -> String {
    let mut out = format!("# sent_id = {key}\n");
    for t in tokens {
        out.push_str(&t.to_conllu_row());
        out.push('\n');
    }
    out
}

fn parse_row(row: &str, lineno: usize) -> Result<Option<ParsedToken>, CorpusError> {
    let cols: Vec<&str> = row.split('\t').collect();
    let bad = |message: String| CorpusError::Malformed {
        line: lineno,
        message,
    };
    if cols.len() != 10 {
        return Err(bad(format!("expected 10 columns, found {}", cols.len())));
    }
    // Multiword ranges ("1-2") and empty nodes ("1.1") are not syntactic words.
    if cols[0].contains('-') || cols[0].contains('.') {
        return Ok(None);
    }
    let index = cols[0]
        .parse()
        .map_err(|_| bad(format!("non-integer ID {:?}", cols[0])))?;
    let head = cols[6]
        .parse()
        .map_err(|_| bad(format!("non-integer HEAD {:?}", cols[6])))?;
    let tag = |s: &str| (s != "_").then(|| s.to_string());
    Ok(Some(ParsedToken {
        index,
        surface: cols[1].to_lowercase(),
        lemma: cols[2].to_lowercase(),
        upos: tag(cols[3]),
        xpos: tag(cols[4]),
        feats: cols[5].to_string(),
        head,
        dep_label: cols[7].to_string(),
        deps: cols[8].to_string(),
        misc: cols[9].to_string(),
    }))
}

/// Parse CoNLL-U text into sentences keyed by their `sent_id`.
pub fn parse_conllu(text: &str) -> Result<Parses, CorpusError> {
    let mut parses = Parses::new();
    let mut block: Vec<ParsedToken> = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut block_start = 0;
    let mut in_block = false;

    let mut finish = |block: &mut Vec<ParsedToken>,
                      sent_id: &mut Option<String>,
                      start: usize|
     -> Result<(), CorpusError> {
        if block.is_empty() && sent_id.is_none() {
            return Ok(());
        }
        let id = sent_id.take().ok_or(CorpusError::Malformed {
            line: start,
            message: "sentence block without `# sent_id`".into(),
        })?;
        let key: SentenceKey = id.parse().map_err(|message| CorpusError::Malformed {
            line: start,
            message,
        })?;
        if block.is_empty() {
            return Err(CorpusError::Structure {
                line: start,
                sent_id: id,
                message: "no token rows".into(),
            });
        }
        validate_sentence(block).map_err(|message| CorpusError::Structure {
            line: start,
            sent_id: id.clone(),
            message,
        })?;
        if parses.insert(key, std::mem::take(block)).is_some() {
            return Err(CorpusError::DuplicateSentence(id));
        }
        Ok(())
    };

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(&mut block, &mut sent_id, block_start)?;
            in_block = false;
            continue;
        }
        if !in_block {
            block_start = lineno;
            in_block = true;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if k.trim() == "sent_id" {
                    sent_id = Some(v.trim().to_string());
                }
            }
            continue;
        }
        if let Some(token) = parse_row(line, lineno)? {
            block.push(token);
        }
    }
    finish(&mut block, &mut sent_id, block_start)?;
    Ok(parses)
}

pub fn load_parses(path: impl AsRef<Path>) -> Result<Parses, CorpusError> {
    parse_conllu(&read(path.as_ref())?)
}

/// A story paired with the parses of its context and every sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedStory {
    pub story_id: String,
    pub context_parse: Vec<ParsedToken>,
    pub sentence_parses: Vec<Vec<ParsedToken>>,
}

pub fn align(stories: &[StoryRecord], parses: &Parses) -> Result<Vec<ParsedStory>, CorpusError> {
    stories
        .iter()
        .map(|story| {
            let lookup = |key: SentenceKey| {
                parses.get(&key).cloned().ok_or(CorpusError::MissingParse {
                    story_id: story.story_id.clone(),
                    role: key.role,
                    index: key.index,
                })
            };
            let context_parse = lookup(SentenceKey::context(&story.story_id))?;
            let sentence_parses = (0..story.sentences.len())
                .map(|i| lookup(SentenceKey::sentence(&story.story_id, i)))
                .collect::<Result<_, _>>()?;
            Ok(ParsedStory {
                story_id: story.story_id.clone(),
                context_parse,
                sentence_parses,
            })
        })
        .collect()
}
