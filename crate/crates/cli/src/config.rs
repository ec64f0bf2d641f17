//! The run configuration file and its merge with command-line flags.
//!
//! ```toml
//! [paths]
//! corpus = "data/corpus.jsonl"
//! parses = "data/parses.conllu"
//! events = "out/events.tsv"
//! graph = "out/graph.txt"
//! plans = "out/plans.tsv"
//! reports = "out/report"
//! label_map = "labels.txt"
//!
//! [extract]
//! lemma = false
//! include_context = false
//!
//! [plan]
//! seed = 42
//! rept_m = 1
//! l_min = 4
//! l_max = 4
//! degree_mode = "edge_weight"
//! omega = 1.0
//!
//! [advisor]
//! kind = "remote"
//! endpoint = "http://127.0.0.1:8080"
//! timeout = 5.0
//! fallback = true
//! ```
//!
//! Every key is optional. Relative paths are resolved against the directory
//! holding the file. Flags override the file, which overrides the defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use storyplan::advisor::DEFAULT_TIMEOUT;
use storyplan::{DegreeMode, PlanConfig};

use crate::error::{CmdResult, Failure};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub extract: ExtractSection,
    #[serde(default)]
    pub plan: PlanSection,
    #[serde(default)]
    pub advisor: AdvisorSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub corpus: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub plans: Option<PathBuf>,
    pub reports: Option<PathBuf>,
    pub label_map: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractSection {
    pub lemma: Option<bool>,
    pub include_context: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub seed: Option<u64>,
    pub rept_m: Option<u32>,
    pub l_min: Option<usize>,
    pub l_max: Option<usize>,
    pub degree_mode: Option<String>,
    pub omega: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvisorSection {
    pub kind: Option<String>,
    pub endpoint: Option<String>,
    /// Seconds.
    pub timeout: Option<f64>,
    pub fallback: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.corpus,
            &mut p.parses,
            &mut p.events,
            &mut p.graph,
            &mut p.plans,
            &mut p.reports,
            &mut p.label_map,
        ] {
            if let Some(rel) = slot.as_ref().filter(|p| p.is_relative()) {
                *slot = Some(base.join(rel));
            }
        }
        Ok(cfg)
    }
}

/// First of `flag`, `file`, else a usage error naming both spellings.
pub fn require_path(flag: &Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> CmdResult<PathBuf> {
    flag.clone().or_else(|| file.clone()).ok_or_else(|| {
        Failure::usage(format!(
            "missing --{} (or paths.{} in the config file)",
            name.replace('_', "-"),
            name
        ))
    })
}

/// Referenced inputs must exist before a command starts writing anything.
pub fn existing(path: PathBuf) -> CmdResult<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Failure::data(format!("input file {} does not exist", path.display())))
    }
}

/// Planner flags as parsed; `None` means "not given on the command line".
#[derive(Debug, Default, Clone)]
pub struct PlanOverrides {
    pub seed: Option<u64>,
    pub rept_m: Option<u32>,
    pub l_min: Option<usize>,
    pub l_max: Option<usize>,
    pub degree_mode: Option<DegreeMode>,
    pub omega: Option<f64>,
}

pub fn plan_config(flags: &PlanOverrides, file: &PlanSection) -> CmdResult<PlanConfig> {
    let d = PlanConfig::default();
    let degree_mode = match (&flags.degree_mode, &file.degree_mode) {
        (Some(m), _) => *m,
        (None, Some(s)) => s.parse().map_err(Failure::usage)?,
        (None, None) => d.degree_mode,
    };
    let cfg = PlanConfig {
        rept_m: flags.rept_m.or(file.rept_m).unwrap_or(d.rept_m),
        l_min: flags.l_min.or(file.l_min).unwrap_or(d.l_min),
        l_max: flags.l_max.or(file.l_max).unwrap_or(d.l_max),
        degree_mode,
        seed: flags.seed.or(file.seed).unwrap_or(d.seed),
        omega: flags.omega.or(file.omega).unwrap_or(d.omega),
    };
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdvisorChoice {
    Lexical,
    Remote {
        endpoint: String,
        timeout: Duration,
        fallback: bool,
    },
}

#[derive(Debug, Default, Clone)]
pub struct AdvisorOverrides {
    pub kind: Option<String>,
    pub endpoint: Option<String>,
    pub timeout: Option<f64>,
    pub no_fallback: bool,
}

pub fn advisor_choice(flags: &AdvisorOverrides, file: &AdvisorSection) -> CmdResult<AdvisorChoice> {
    let kind = flags.kind.clone().or(file.kind.clone()).unwrap_or_else(|| "lexical".into());
    match kind.as_str() {
        "lexical" => Ok(AdvisorChoice::Lexical),
        "remote" => {
            let endpoint = flags
                .endpoint
                .clone()
                .or(file.endpoint.clone())
                .ok_or_else(|| Failure::usage("the remote advisor needs --endpoint"))?;
            let timeout = match flags.timeout.or(file.timeout) {
                None => DEFAULT_TIMEOUT,
                Some(s) if s.is_finite() && s > 0.0 => Duration::from_secs_f64(s),
                Some(s) => return Err(Failure::usage(format!("timeout must be positive, got {s}"))),
            };
            let fallback = !flags.no_fallback && file.fallback.unwrap_or(true);
            Ok(AdvisorChoice::Remote {
                endpoint,
                timeout,
                fallback,
            })
        }
        other => Err(Failure::usage(format!(
            "unknown advisor {other:?} (expected lexical or remote)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beats_defaults() {
        let file: FileConfig = toml::from_str("[plan]\nseed = 7\nl_min = 2\nl_max = 6\n").unwrap();
        let flags = PlanOverrides {
            l_max: Some(3),
            ..Default::default()
        };
        let cfg = plan_config(&flags, &file.plan).unwrap();
        assert_eq!((cfg.seed, cfg.l_min, cfg.l_max, cfg.rept_m), (7, 2, 3, 1));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[plan]\nsed = 7\n").is_err());
    }

    #[test]
    fn remote_needs_an_endpoint() {
        let flags = AdvisorOverrides {
            kind: Some("remote".into()),
            ..Default::default()
        };
        assert!(advisor_choice(&flags, &AdvisorSection::default()).is_err());
        let file = AdvisorSection {
            endpoint: Some("http://x".into()),
            fallback: Some(true),
            ..Default::default()
        };
        let flags = AdvisorOverrides {
            no_fallback: true,
            ..flags
        };
        assert_eq!(
            advisor_choice(&flags, &file).unwrap(),
            AdvisorChoice::Remote {
                endpoint: "http://x".into(),
                timeout: DEFAULT_TIMEOUT,
                fallback: false
            }
        );
    }

    #[test]
    fn degree_mode_from_file() {
        let file = PlanSection {
            degree_mode: Some("node-total".into()),
            ..Default::default()
        };
        let cfg = plan_config(&PlanOverrides::default(), &file).unwrap();
        assert_eq!(cfg.degree_mode, DegreeMode::NodeTotal);
        let bad = PlanSection {
            degree_mode: Some("weird".into()),
            ..Default::default()
        };
        assert!(plan_config(&PlanOverrides::default(), &bad).is_err());
    }
}
