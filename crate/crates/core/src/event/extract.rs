use crate::corpus::{ParsedStory, ParsedToken};

use super::{Event, EventSlot, EventToken, LabelMap};

/// Which tokens count as verbs.
///
/// UPOS is consulted when the token has one; otherwise XPOS is matched by
/// prefix (Penn tags `VB`, `VBD`, ... by default).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbTags {
    pub upos: Vec<String>,
    pub xpos_prefixes: Vec<String>,
}

impl Default for VerbTags {
    fn default() -> Self {
        VerbTags {
            upos: vec!["VERB".into(), "AUX".into()],
            xpos_prefixes: vec!["VB".into()],
        }
    }
}

impl VerbTags {
    pub fn is_verb(&self, token: &ParsedToken) -> bool {
        match (&token.upos, &token.xpos) {
            (Some(u), _) => self.upos.iter().any(|t| t == u),
            (None, Some(x)) => self.xpos_prefixes.iter().any(|p| x.starts_with(p.as_str())),
            (None, None) => false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExtractOptions {
    pub labels: LabelMap,
    pub verbs: VerbTags,
    /// Use lemmas instead of surface forms in the string form.
    pub use_lemma: bool,
    /// Prepend the leading-context event to each story's sequence.
    pub include_context: bool,
}

fn token_text(token: &ParsedToken, use_lemma: bool) -> String {
    let raw = if use_lemma && !token.lemma.is_empty() && token.lemma != "_" {
        &token.lemma
    } else {
        &token.surface
    };
    // Event strings are whitespace-tokenized downstream.
    raw.split_whitespace().collect::<Vec<_>>().join("_")
}

/// Extract the event of one parsed sentence.
///
/// The trigger is the root when it is a verb, else the leftmost verb. The
/// arguments are its direct dependents whose relation is in the label map.
/// Returns `None` for sentences without a verb.
pub fn extract_event(sentence: &[ParsedToken], opts: &ExtractOptions) -> Option<Event> {
    let root = sentence.iter().find(|t| t.head == 0);
    let trigger = root
        .filter(|t| opts.verbs.is_verb(t))
        .or_else(|| sentence.iter().find(|t| opts.verbs.is_verb(t)))?;
    let arguments = sentence
        .iter()
        .filter(|t| t.head == trigger.index && t.index != trigger.index)
        .filter_map(|t| {
            opts.labels.role(&t.dep_label).map(|role| {
                (
                    role,
                    EventToken {
                        text: token_text(t, opts.use_lemma),
                        position: t.index,
                    },
                )
            })
        })
        .collect();
    Some(Event::new(
        EventToken {
            text: token_text(trigger, opts.use_lemma),
            position: trigger.index,
        },
        arguments,
    ))
}

/// One slot per sentence, in order; verbless sentences become gaps.
pub fn extract_story_events(story: &ParsedStory, opts: &ExtractOptions) -> Vec<EventSlot> {
    let context = opts
        .include_context
        .then(|| slot(extract_event(&story.context_parse, opts)));
    context
        .into_iter()
        .chain(
            story
                .sentence_parses
                .iter()
                .map(|s| slot(extract_event(s, opts))),
        )
        .collect()
}

fn slot(event: Option<Event>) -> EventSlot {
    event.map_or(EventSlot::Gap, EventSlot::Event)
}
