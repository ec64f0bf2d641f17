use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Modifier,
    Agent,
    Complement,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Modifier => "modifier",
            Role::Agent => "agent",
            Role::Complement => "complement",
        })
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "modifier" | "mod" => Ok(Role::Modifier),
            "agent" => Ok(Role::Agent),
            "complement" | "comp" => Ok(Role::Complement),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum LabelMapError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("label {label:?} mapped to both {first} and {second}")]
    Conflict {
        label: String,
        first: Role,
        second: Role,
    },
    #[error("label {0:?} is a subject relation and cannot be an event argument")]
    Subject(String),
    #[error("failed to read label map: {0}")]
    Io(#[from] std::io::Error),
}

/// Dependency labels that make a dependent of the trigger an event argument.
///
/// Labels are compared case-insensitively. Subject relations are rejected:
/// events never carry their subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    roles: BTreeMap<String, Role>,
}

const SUBJECT_LABELS: &[&str] = &[
    "nsubj",
    "nsubjpass",
    "nsubj:pass",
    "csubj",
    "csubjpass",
    "csubj:pass",
    "expl",
];

impl Default for LabelMap {
    /// The seven typed dependencies of the event schema, plus the UD spellings
    /// `compound:prt`, `obj` and `obl:agent`.
    fn default() -> Self {
        let mut map = LabelMap::empty();
        for (label, role) in [
            ("prt", Role::Modifier),
            ("compound:prt", Role::Modifier),
            ("neg", Role::Modifier),
            ("agent", Role::Agent),
            ("obl:agent", Role::Agent),
            ("dobj", Role::Agent),
            ("obj", Role::Agent),
            ("acomp", Role::Complement),
            ("ccomp", Role::Complement),
            ("xcomp", Role::Complement),
        ] {
            map.insert(label, role).expect("default labels are consistent");
        }
        map
    }
}

impl LabelMap {
    pub fn empty() -> Self {
        LabelMap {
            roles: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, label: &str, role: Role) -> Result<(), LabelMapError> {
        let label = label.to_lowercase();
        if SUBJECT_LABELS.contains(&label.as_str()) {
            return Err(LabelMapError::Subject(label));
        }
        match self.roles.get(&label) {
            Some(&first) if first != role => Err(LabelMapError::Conflict {
                label,
                first,
                second: role,
            }),
            _ => {
                self.roles.insert(label, role);
                Ok(())
            }
        }
    }

    pub fn role(&self, dep_label: &str) -> Option<Role> {
        self.roles.get(&dep_label.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Role)> {
        self.roles.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Parse `label role` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, LabelMapError> {
        let mut map = LabelMap::empty();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [label, role] = fields[..] else {
                return Err(LabelMapError::Syntax {
                    line: i + 1,
                    message: format!("expected `label role`, got {line:?}"),
                });
            };
            let role = role.parse().map_err(|message| LabelMapError::Syntax {
                line: i + 1,
                message,
            })?;
            map.insert(label, role)?;
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LabelMapError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        self.iter().map(|(l, r)| format!("{l}\t{r}\n")).collect()
    }
}
