use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;
use serde_json::json;
use storyplan::advisor::{Advisor, AdvisorError, AdvisorRequest, AdvisorResponse};
use storyplan::corpus::{self, CorpusError, SentenceKey};
use storyplan::event::{self, extract_story_events, EventSequence};
use storyplan::metrics::{event_report, story_report, MetricReport, TokenSequence};
use storyplan::planner::{derive_seed, PlanError};
use storyplan::{build_graph, plan, EventGraph, ExtractOptions, LabelMap, LexicalAdvisor, PlanConfig};
use storyplan::{PlanContext, RemoteAdvisor};

use crate::config::AdvisorChoice;
use crate::error::{CmdResult, Failure};

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

/// Write via a temp file in the target directory, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let env = |e: std::io::Error| Failure::environment(format!("cannot write {}: {e}", path.display()));
    std::fs::create_dir_all(dir).map_err(env)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(env)?;
    tmp.write_all(bytes).map_err(env)?;
    tmp.flush().map_err(env)?;
    tmp.persist(path).map_err(|e| env(e.error))?;
    Ok(())
}

fn read(path: &Path) -> CmdResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))
}

fn corpus_error(path: &Path) -> impl Fn(CorpusError) -> Failure + '_ {
    move |e| Failure::data(format!("{}: {e}", path.display()))
}

pub fn extract_options(label_map: Option<&Path>, use_lemma: bool, include_context: bool) -> CmdResult<ExtractOptions> {
    let labels = match label_map {
        None => LabelMap::default(),
        Some(p) => LabelMap::load(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?,
    };
    Ok(ExtractOptions {
        labels,
        use_lemma,
        include_context,
        ..ExtractOptions::default()
    })
}

fn load_corpus(path: &Path) -> CmdResult<Vec<corpus::StoryRecord>> {
    corpus::parse_story_corpus(&read(path)?).map_err(corpus_error(path))
}

fn load_parses(path: &Path) -> CmdResult<corpus::Parses> {
    corpus::parse_conllu(&read(path)?).map_err(corpus_error(path))
}

pub fn extract(corpus_path: &Path, parses_path: &Path, out: &Path, opts: &ExtractOptions) -> CmdResult {
    let stories = load_corpus(corpus_path)?;
    let parses = load_parses(parses_path)?;
    let aligned = corpus::align(&stories, &parses).map_err(corpus_error(parses_path))?;

    let mut text = String::new();
    for story in &aligned {
        let slots = extract_story_events(story, opts);
        if slots.is_empty() {
            warn(&format!("story {:?} has no sentences; skipped", story.story_id));
            continue;
        }
        let seq = EventSequence::from_slots(&story.story_id, &slots);
        let line = seq
            .to_line()
            .map_err(|e| Failure::data(format!("story {:?}: {e}", story.story_id)))?;
        text.push_str(&line);
        text.push('\n');
    }
    write_atomic(out, text.as_bytes())
}

fn load_events(path: &Path) -> CmdResult<Vec<EventSequence>> {
    event::parse_event_sequences(&read(path)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

pub fn build(events: &Path, out: &Path) -> CmdResult {
    let seqs = load_events(events)?;
    if seqs.is_empty() {
        warn(&format!("{} holds no event sequences; the graph is empty", events.display()));
    }
    write_atomic(out, build_graph(&seqs).to_text().as_bytes())
}

fn load_graph(path: &Path) -> CmdResult<EventGraph> {
    EventGraph::from_text(&read(path)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

pub fn stats(graph: &Path, top_k: usize, out: Option<&Path>) -> CmdResult {
    let g = load_graph(graph)?;
    let mut text = serde_json::to_string_pretty(&g.stats(top_k)).expect("stats serialize");
    text.push('\n');
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Counts calls and fallbacks of the wrapped advisor.
struct Tally<A> {
    inner: A,
    calls: AtomicUsize,
    fallbacks: AtomicUsize,
}

impl<A: Advisor> Tally<A> {
    fn new(inner: A) -> Self {
        Tally {
            inner,
            calls: AtomicUsize::new(0),
            fallbacks: AtomicUsize::new(0),
        }
    }

    fn take(&self) -> (usize, usize) {
        (self.calls.swap(0, Ordering::Relaxed), self.fallbacks.swap(0, Ordering::Relaxed))
    }
}

impl<A: Advisor> Advisor for Tally<A> {
    fn advise(&self, req: &AdvisorRequest, g: &EventGraph) -> Result<AdvisorResponse, AdvisorError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let r = self.inner.advise(req, g)?;
        if r.fallback {
            self.fallbacks.fetch_add(1, Ordering::Relaxed);
        }
        Ok(r)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

#[derive(Serialize)]
struct StoryProvenance<'a> {
    story_id: &'a str,
    seed: u64,
    advisor_calls: usize,
    advisor_fallbacks: usize,
    plan: &'a storyplan::PlanResult,
}

fn plan_failure(story_id: &str, e: PlanError) -> Failure {
    let message = format!("story {story_id:?}: {e}");
    match e {
        PlanError::Advisor {
            source: AdvisorError::Remote(_),
            ..
        }
        | PlanError::Start(AdvisorError::Remote(_)) => Failure::environment(message),
        PlanError::Config(_) => Failure::usage(message),
        _ => Failure::data(message),
    }
}

pub struct PlanInputs<'a> {
    pub graph: &'a Path,
    pub corpus: &'a Path,
    pub parses: &'a Path,
    pub out: &'a Path,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".provenance.jsonl");
    PathBuf::from(s)
}

pub fn run_plan(
    inputs: &PlanInputs,
    cfg: &PlanConfig,
    choice: &AdvisorChoice,
    opts: &ExtractOptions,
) -> CmdResult {
    let g = load_graph(inputs.graph)?;
    if g.is_empty() {
        return Err(Failure::data(format!("{}: the event graph is empty", inputs.graph.display())));
    }
    let stories = load_corpus(inputs.corpus)?;
    let parses = load_parses(inputs.parses)?;

    let (advisor, advisor_meta): (Box<dyn Advisor>, _) = match choice {
        AdvisorChoice::Lexical => (
            Box::new(LexicalAdvisor { rept_m: cfg.rept_m }),
            json!({"kind": "lexical"}),
        ),
        AdvisorChoice::Remote {
            endpoint,
            timeout,
            fallback,
        } => {
            let remote = RemoteAdvisor::new(endpoint, *timeout).with_fallback(fallback.then_some(cfg.rept_m));
            if let Err(e) = remote.health() {
                if *fallback {
                    warn(&format!("advisor service unavailable, using the lexical fallback: {e}"));
                } else {
                    return Err(Failure::environment(format!("advisor service unavailable: {e}")));
                }
            }
            (
                Box::new(remote),
                json!({
                    "kind": "remote",
                    "endpoint": endpoint,
                    "timeout_secs": timeout.as_secs_f64(),
                    "fallback": fallback,
                }),
            )
        }
    };
    let advisor = Tally::new(advisor);

    let mut plans = String::new();
    let mut sidecar = serde_json::to_string(&json!({
        "header": {"seed": cfg.seed, "config": cfg, "advisor": advisor_meta, "stories": stories.len()}
    }))
    .expect("header serialize");
    sidecar.push('\n');

    for story in &stories {
        let ctx_parse = parses
            .get(&SentenceKey::context(&story.story_id))
            .ok_or_else(|| Failure::data(format!("story {:?}: no parse for its leading context", story.story_id)))?;
        let context = PlanContext::from_parse(ctx_parse, opts);
        let story_cfg = PlanConfig {
            seed: derive_seed(cfg.seed, &story.story_id),
            ..cfg.clone()
        };
        let result = plan(&context, &g, &story_cfg, &advisor).map_err(|e| plan_failure(&story.story_id, e))?;
        let (calls, fallbacks) = advisor.take();

        let forms: Vec<Option<storyplan::EventForm>> = result
            .events
            .iter()
            .map(|e| g.node(e).cloned())
            .collect();
        let line = event::serialize_forms(&forms).map_err(|e| Failure::data(e.to_string()))?;
        plans.push_str(&format!("{}\t{line}\n", story.story_id));

        let record = StoryProvenance {
            story_id: &story.story_id,
            seed: story_cfg.seed,
            advisor_calls: calls,
            advisor_fallbacks: fallbacks,
            plan: &result,
        };
        sidecar.push_str(&serde_json::to_string(&record).expect("provenance serialize"));
        sidecar.push('\n');
    }
    write_atomic(inputs.out, plans.as_bytes())?;
    write_atomic(&sidecar_path(inputs.out), sidecar.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalMode {
    Events,
    Stories,
}

fn event_tokens(seq: &EventSequence) -> TokenSequence {
    let tokens: Vec<&str> = seq.events().flat_map(|f| f.tokens()).collect();
    TokenSequence::from_tokens(&tokens)
}

fn index_by_id<T>(items: Vec<T>, id: impl Fn(&T) -> &str, path: &Path) -> CmdResult<HashMap<String, T>> {
    let mut map = HashMap::with_capacity(items.len());
    for item in items {
        let key = id(&item).to_string();
        if map.contains_key(&key) {
            return Err(Failure::data(format!("{}: duplicate story id {key:?}", path.display())));
        }
        map.insert(key, item);
    }
    Ok(map)
}

fn id_mismatch(hyp: &BTreeSet<&str>, refs: &BTreeSet<&str>) -> Option<String> {
    let only_hyp: Vec<&str> = hyp.difference(refs).copied().collect();
    let only_ref: Vec<&str> = refs.difference(hyp).copied().collect();
    if only_hyp.is_empty() && only_ref.is_empty() {
        return None;
    }
    let mut msg = String::from("story ids differ between hypotheses and references");
    if !only_hyp.is_empty() {
        msg.push_str(&format!("\n  only in hypotheses: {}", only_hyp.join(", ")));
    }
    if !only_ref.is_empty() {
        msg.push_str(&format!("\n  only in references: {}", only_ref.join(", ")));
    }
    Some(msg)
}

pub fn evaluate(mode: EvalMode, hypotheses: &Path, references: Option<&Path>) -> CmdResult<MetricReport> {
    match mode {
        EvalMode::Events => {
            let references = references.ok_or_else(|| Failure::usage("events mode needs --references"))?;
            let hyp = load_events(hypotheses)?;
            let order: Vec<String> = hyp.iter().map(|s| s.story_id.clone()).collect();
            let hyp = index_by_id(hyp, |s| &s.story_id, hypotheses)?;
            let refs = index_by_id(load_events(references)?, |s| &s.story_id, references)?;
            let hyp_ids: BTreeSet<&str> = hyp.keys().map(String::as_str).collect();
            let ref_ids: BTreeSet<&str> = refs.keys().map(String::as_str).collect();
            if let Some(msg) = id_mismatch(&hyp_ids, &ref_ids) {
                return Err(Failure::data(msg));
            }
            let pairs: Vec<(TokenSequence, TokenSequence)> = order
                .iter()
                .map(|id| (event_tokens(&hyp[id]), event_tokens(&refs[id])))
                .collect();
            Ok(event_report(&pairs))
        }
        EvalMode::Stories => {
            if references.is_some() {
                return Err(Failure::usage("stories mode is unreferenced; drop --references"));
            }
            let stories = load_corpus(hypotheses)?;
            let corpus: Vec<Vec<TokenSequence>> = stories
                .iter()
                .map(|s| s.sentences.iter().map(|t| TokenSequence::from_text(t)).collect())
                .collect();
            Ok(story_report(&corpus))
        }
    }
}

/// `<prefix>.txt` table, `<prefix>.json` report and, with a curve, `<prefix>.curve.tsv`.
pub fn write_report(report: &MetricReport, prefix: &Path) -> CmdResult {
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    write_atomic(&with(".txt"), report.to_table().as_bytes())?;
    let mut json = serde_json::to_string_pretty(report).expect("report serialize");
    json.push('\n');
    write_atomic(&with(".json"), json.as_bytes())?;
    if !report.repetition_curve.is_empty() {
        write_atomic(&with(".curve.tsv"), report.curve_tsv().as_bytes())?;
    }
    Ok(())
}
