//! Event-line text format: `<s> e1 <sep> e2 <sep> ... <e>`.
//!
//! A sentence that produced no event is written as the `<gap>` segment so that
//! files keep sentence adjacency intact. Event-sequence files prefix each line
//! with the story id and a tab; an optional third tab-separated column lists
//! the trigger offset of every segment (`-` for gaps).

use thiserror::Error;

use super::{Event, EventForm, EventSlot};

pub const START: &str = "<s>";
pub const SEP: &str = "<sep>";
pub const END: &str = "<e>";
pub const GAP: &str = "<gap>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("cannot serialize an empty event list")]
    Empty,
    #[error("event line must start with `<s>`")]
    MissingStart,
    #[error("event line must end with `<e>`")]
    MissingEnd,
    #[error("empty event segment at position {0}")]
    EmptySegment(usize),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

fn join_segments<'a>(segments: impl Iterator<Item = &'a str>) -> String {
    let body = segments.collect::<Vec<_>>().join(&format!(" {SEP} "));
    format!("{START} {body} {END}")
}

pub fn serialize_events(events: &[Event]) -> Result<String, FormatError> {
    if events.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(join_segments(events.iter().map(Event::string_form)))
}

pub fn serialize_slots(slots: &[EventSlot]) -> Result<String, FormatError> {
    if slots.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(join_segments(slots.iter().map(|s| match s {
        EventSlot::Event(e) => e.string_form(),
        EventSlot::Gap => GAP,
    })))
}

/// Serialize graph forms; `None` becomes a gap segment.
pub fn serialize_forms(slots: &[Option<EventForm>]) -> Result<String, FormatError> {
    if slots.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(join_segments(slots.iter().map(|s| match s {
        Some(f) => f.form.as_str(),
        None => GAP,
    })))
}

/// Parse a line into its segments; `None` marks a gap.
pub fn parse_event_slots(line: &str) -> Result<Vec<Option<String>>, FormatError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.first() != Some(&START) {
        return Err(FormatError::MissingStart);
    }
    if tokens.len() < 2 || tokens.last() != Some(&END) {
        return Err(FormatError::MissingEnd);
    }
    let body = &tokens[1..tokens.len() - 1];
    if body.is_empty() {
        return Err(FormatError::EmptySegment(0));
    }
    body.split(|t| *t == SEP)
        .enumerate()
        .map(|(i, seg)| match seg {
            [] => Err(FormatError::EmptySegment(i)),
            [g] if *g == GAP => Ok(None),
            _ => Ok(Some(seg.join(" "))),
        })
        .collect()
}

/// The event string forms of a line, gaps dropped.
pub fn parse_event_line(line: &str) -> Result<Vec<String>, FormatError> {
    Ok(parse_event_slots(line)?.into_iter().flatten().collect())
}

/// The extracted (or planned) events of one story.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSequence {
    pub story_id: String,
    pub slots: Vec<Option<EventForm>>,
}

impl EventSequence {
    pub fn from_slots(story_id: &str, slots: &[EventSlot]) -> Self {
        EventSequence {
            story_id: story_id.to_string(),
            slots: slots
                .iter()
                .map(|s| s.event().map(Event::to_form))
                .collect(),
        }
    }

    pub fn events(&self) -> impl Iterator<Item = &EventForm> {
        self.slots.iter().flatten()
    }

    /// `story_id \t event-line \t trigger offsets`.
    pub fn to_line(&self) -> Result<String, FormatError> {
        let triggers = self
            .slots
            .iter()
            .map(|s| s.as_ref().map_or("-".to_string(), |f| f.trigger.to_string()))
            .collect::<Vec<_>>()
            .join(" ");
        Ok(format!("{}\t{}\t{}", self.story_id, serialize_forms(&self.slots)?, triggers))
    }
}

pub fn write_event_sequences(seqs: &[EventSequence]) -> Result<String, FormatError> {
    let mut out = String::new();
    for s in seqs {
        out.push_str(&s.to_line()?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse an event-sequence file. Without the trigger column every event's
/// trigger defaults to its first token.
pub fn parse_event_sequences(text: &str) -> Result<Vec<EventSequence>, FormatError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| FormatError::Line { line, message };
        let cols: Vec<&str> = raw.split('\t').collect();
        let (story_id, body, triggers) = match cols[..] {
            [id, body] => (id, body, None),
            [id, body, trig] => (id, body, Some(trig)),
            _ => return Err(err("expected `story_id<TAB>event line[<TAB>triggers]`".into())),
        };
        if story_id.is_empty() {
            return Err(err("empty story id".into()));
        }
        let segments = parse_event_slots(body).map_err(|e| err(e.to_string()))?;
        let offsets: Vec<Option<usize>> = match triggers {
            None => segments.iter().map(|s| s.as_ref().map(|_| 0)).collect(),
            Some(t) => t
                .split_whitespace()
                .map(|v| match v {
                    "-" => Ok(None),
                    n => n
                        .parse()
                        .map(Some)
                        .map_err(|_| err(format!("bad trigger offset {n:?}"))),
                })
                .collect::<Result<_, _>>()?,
        };
        if offsets.len() != segments.len() {
            return Err(err(format!(
                "{} trigger offsets for {} segments",
                offsets.len(),
                segments.len()
            )));
        }
        let slots = segments
            .into_iter()
            .zip(offsets)
            .map(|(seg, off)| match (seg, off) {
                (None, None) => Ok(None),
                (Some(form), Some(trigger)) => {
                    if trigger >= form.split_whitespace().count() {
                        Err(err(format!("trigger offset {trigger} out of range for {form:?}")))
                    } else {
                        Ok(Some(EventForm { form, trigger }))
                    }
                }
                _ => Err(err("trigger column disagrees with gap positions".into())),
            })
            .collect::<Result<_, _>>()?;
        out.push(EventSequence {
            story_id: story_id.to_string(),
            slots,
        });
    }
    Ok(out)
}
