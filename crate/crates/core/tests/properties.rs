mod common;

use proptest::collection::vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use storyplan::advisor::{lexical_advise, snap_to_graph, AdvisorRequest};
use storyplan::corpus::{parse_conllu, write_conllu_block, ParsedToken, SentenceKey};
use storyplan::event::{
    extract_event, parse_event_line, serialize_events, Event, EventToken, ExtractOptions, Role,
};
use storyplan::graph::build_graph;
use storyplan::metrics::{distinct_n, intra_story_repetition, TokenSequence};
use storyplan::planner::{event_score, PlanConfig};

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,6}"
}

fn event_strategy() -> impl Strategy<Value = Event> {
    (word(), vec(word(), 0..3)).prop_map(|(trigger, args)| {
        Event::new(
            EventToken { text: trigger, position: 1 },
            args.into_iter()
                .enumerate()
                .map(|(i, t)| (Role::Agent, EventToken { text: t, position: i + 2 }))
                .collect(),
        )
    })
}

/// A random tree: token i > 1 hangs off some earlier token, token 1 is the root.
fn sentence_strategy() -> impl Strategy<Value = Vec<ParsedToken>> {
    let labels = prop::sample::select(vec!["nsubj", "dobj", "prt", "neg", "det", "xcomp", "amod"]);
    let tags = prop::sample::select(vec!["VERB", "NOUN", "AUX", "DET", "ADP"]);
    vec((word(), tags, labels, any::<prop::sample::Index>()), 1..8).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (w, tag, label, parent))| {
                let index = i + 1;
                let head = if index == 1 { 0 } else { parent.index(i) + 1 };
                ParsedToken::new(index, &w, tag, head, if head == 0 { "ROOT" } else { label })
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn event_lines_roundtrip(events in vec(event_strategy(), 1..6)) {
        let line = serialize_events(&events).unwrap();
        let forms: Vec<String> = events.iter().map(|e| e.string_form().to_string()).collect();
        prop_assert_eq!(parse_event_line(&line).unwrap(), forms);
    }

    #[test]
    fn conllu_reserialization_keeps_structure(sentence in sentence_strategy()) {
        let key = SentenceKey::sentence("p", 0);
        let text = write_conllu_block(&key, &sentence);
        let parsed = parse_conllu(&text).unwrap();
        let back = &parsed[&key];
        prop_assert_eq!(back.len(), sentence.len());
        for (a, b) in back.iter().zip(&sentence) {
            prop_assert_eq!((a.index, a.head, &a.dep_label), (b.index, b.head, &b.dep_label));
        }
        prop_assert_eq!(write_conllu_block(&key, back), text);
    }

    #[test]
    fn extraction_is_deterministic_and_subject_free(sentence in sentence_strategy()) {
        let opts = ExtractOptions::default();
        let a = extract_event(&sentence, &opts);
        let b = extract_event(&sentence, &opts);
        prop_assert_eq!(a.as_ref().map(|e| e.string_form().to_string()), b.map(|e| e.string_form().to_string()));
        if let Some(e) = a {
            let positions: Vec<usize> = std::iter::once(e.trigger().position)
                .chain(e.arguments().iter().map(|(_, t)| t.position))
                .collect();
            let mut sorted = positions.clone();
            sorted.sort();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), positions.len());
            let expected: Vec<&str> = sorted
                .iter()
                .map(|p| sentence[p - 1].surface.as_str())
                .collect();
            prop_assert_eq!(e.string_form(), expected.join(" "));
            for (_, t) in e.arguments() {
                prop_assert!(!sentence[t.position - 1].dep_label.starts_with("nsubj"));
            }
        }
    }

    #[test]
    fn advisor_answers_are_graph_members(seed in any::<u64>(), raw in "[a-z ]{0,20}", ctx in vec(word(), 1..5)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stories = 1 + (seed % 8) as usize;
        let corpus = common::random_corpus(&mut rng, stories);
        let g = build_graph(&corpus);
        prop_assume!(!g.is_empty());
        let snapped = snap_to_graph(&raw, &g).unwrap();
        prop_assert!(g.contains(snapped));
        prop_assert_eq!(snap_to_graph(snapped, &g).unwrap(), snapped);
        let r = lexical_advise(&AdvisorRequest::new(ctx.clone(), vec![]), &g, 1).unwrap();
        prop_assert!(g.contains(&r.event));
        prop_assert_eq!(lexical_advise(&AdvisorRequest::new(ctx, vec![]), &g, 1).unwrap(), r);
    }

    #[test]
    fn score_decreases_with_repetitions(rept_m in 1u32..5, w in 1u64..5) {
        let nodes = vec!["a".to_string(), "b".to_string()];
        let g = common::graph_from_edges(&nodes, &vec![("a".into(), "b".into(), w)]);
        let cfg = PlanConfig { rept_m, ..PlanConfig::default() };
        let mut last = f64::INFINITY;
        for count in 0..=(rept_m + 2) {
            let history = vec!["b".to_string(); count as usize];
            let s = event_score("a", "b", &history, &cfg, &g).unwrap();
            if count <= rept_m {
                prop_assert!(s < last);
            } else {
                prop_assert_eq!(s, 0.0);
            }
            last = s;
        }
    }

    #[test]
    fn distinct_never_grows_on_duplicates(corpus in vec("[a-c]( [a-c]){0,5}", 1..5), n in 1usize..3) {
        let seqs: Vec<TokenSequence> = corpus.iter().map(|s| TokenSequence::from_text(s)).collect();
        let before = distinct_n(&seqs, n);
        let mut more = seqs.clone();
        more.push(seqs[0].clone());
        prop_assert!(distinct_n(&more, n) <= before + 1e-15);
        prop_assert!((0.0..=1.0).contains(&before));
    }

    #[test]
    fn repetition_prefix_unaffected_by_disjoint_sentences(
        prefix in vec("[a-c]( [a-c]){2,5}", 1..4),
        extra in 1usize..4,
    ) {
        let seqs: Vec<TokenSequence> = prefix.iter().map(|s| TokenSequence::from_text(s)).collect();
        let base = intra_story_repetition(&seqs);
        let mut longer = seqs.clone();
        for i in 0..extra {
            longer.push(TokenSequence::from_text(&format!("x{i} y{i} z{i}")));
        }
        let curve = intra_story_repetition(&longer);
        prop_assert_eq!(&curve[..base.len()], &base[..]);
        prop_assert!(curve[base.len()..].iter().all(|p| p.value == 0.0));
        prop_assert!(curve.iter().all(|p| (0.0..=100.0).contains(&p.value)));
    }
}
