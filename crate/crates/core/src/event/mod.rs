//! Verb-phrase events: extraction from dependency parses and the event-line
//! text format.

mod extract;
mod format;
mod labels;

pub use extract::{extract_event, extract_story_events, ExtractOptions, VerbTags};
pub use format::{
    parse_event_line, parse_event_slots, parse_event_sequences, serialize_events, serialize_forms,
    serialize_slots, write_event_sequences, EventSequence, FormatError, GAP, SEP, START, END,
};
pub use labels::{LabelMap, LabelMapError, Role};

use std::fmt;
use std::hash::{Hash, Hasher};

/// A token of an event together with its 1-based position in the sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventToken {
    pub text: String,
    pub position: usize,
}

/// An extracted event: a trigger plus typed arguments.
///
/// Identity (equality and hashing) is the string form, which is what the event
/// graph uses as node key.
#[derive(Debug, Clone)]
pub struct Event {
    trigger: EventToken,
    arguments: Vec<(Role, EventToken)>,
    form: String,
}

impl Event {
    pub fn new(trigger: EventToken, mut arguments: Vec<(Role, EventToken)>) -> Self {
        arguments.sort_by_key(|(_, t)| t.position);
        let mut tokens: Vec<&EventToken> = arguments.iter().map(|(_, t)| t).collect();
        tokens.push(&trigger);
        tokens.sort_by_key(|t| t.position);
        let form = tokens
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        Event {
            trigger,
            arguments,
            form,
        }
    }

    pub fn trigger(&self) -> &EventToken {
        &self.trigger
    }

    pub fn arguments(&self) -> &[(Role, EventToken)] {
        &self.arguments
    }

    pub fn string_form(&self) -> &str {
        &self.form
    }

    /// Offset of the trigger among the tokens of the string form.
    pub fn trigger_offset(&self) -> usize {
        self.arguments
            .iter()
            .filter(|(_, t)| t.position < self.trigger.position)
            .count()
    }

    pub fn to_form(&self) -> EventForm {
        EventForm {
            form: self.form.clone(),
            trigger: self.trigger_offset(),
        }
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.form == other.form
    }
}

impl Eq for Event {}

impl Hash for Event {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.form.hash(state);
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.form)
    }
}

/// An event reduced to what survives serialization: its string form and
/// which of its tokens is the trigger.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventForm {
    pub form: String,
    pub trigger: usize,
}

impl EventForm {
    pub fn new(form: impl Into<String>, trigger: usize) -> Self {
        EventForm {
            form: form.into(),
            trigger,
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.form.split_whitespace()
    }

    pub fn trigger_token(&self) -> &str {
        self.tokens().nth(self.trigger).unwrap_or("")
    }
}

/// One sentence slot of an extracted story: either an event or a gap left by
/// a sentence without a verb.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventSlot {
    Event(Event),
    Gap,
}

impl EventSlot {
    pub fn event(&self) -> Option<&Event> {
        match self {
            EventSlot::Event(e) => Some(e),
            EventSlot::Gap => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(text: &str, position: usize) -> EventToken {
        EventToken {
            text: text.into(),
            position,
        }
    }

    #[test]
    fn string_form_is_position_ordered() {
        let e = Event::new(
            tok("drive", 4),
            vec![(Role::Modifier, tok("not", 3)), (Role::Agent, tok("car", 6))],
        );
        assert_eq!(e.string_form(), "not drive car");
        assert_eq!(e.trigger_offset(), 1);
        assert_eq!(e.to_form().trigger_token(), "drive");
    }

    #[test]
    fn identity_is_string_form() {
        let a = Event::new(tok("had", 2), vec![(Role::Agent, tok("test", 4))]);
        let b = Event::new(tok("had", 1), vec![(Role::Agent, tok("test", 2))]);
        assert_eq!(a, b);
    }
}
