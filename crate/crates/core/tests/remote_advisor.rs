//! The remote advisor against a throwaway HTTP server on localhost.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use storyplan::advisor::{Advisor, AdvisorError, AdvisorRequest, RemoteAdvisor};
use storyplan::event::{EventForm, EventSequence};
use storyplan::graph::build_graph;
use storyplan::EventGraph;

struct Reply {
    status: u16,
    body: String,
    delay: Duration,
}

/// `(method path, body)` of every request received.
type Log = Arc<Mutex<Vec<(String, String)>>>;

/// Serve `reply` for every request.
fn serve(reply: Reply) -> (String, Log) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let target = request_line.split_whitespace().take(2).collect::<Vec<_>>().join(" ");
            log.lock().unwrap().push((target, String::from_utf8(body).unwrap()));
            thread::sleep(reply.delay);
            let _ = write!(
                stream,
                "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                reply.status,
                reply.body.len(),
                reply.body
            );
        }
    });
    (addr, seen)
}

fn ok(body: &str) -> Reply {
    Reply {
        status: 200,
        body: body.to_string(),
        delay: Duration::ZERO,
    }
}

fn graph() -> EventGraph {
    let seq = |forms: &[&str]| EventSequence {
        story_id: "x".into(),
        slots: forms.iter().map(|f| Some(EventForm::new(*f, 0))).collect(),
    };
    build_graph(&[seq(&["had test", "studied"]), seq(&["went home"])])
}

fn request() -> AdvisorRequest {
    AdvisorRequest::new(
        vec!["i".into(), "had".into(), "a".into(), "test".into()],
        vec!["had test".into()],
    )
}

#[test]
fn generated_text_is_snapped_onto_the_graph() {
    let (addr, seen) = serve(ok(r#"{"event_text": "studied hard"}"#));
    let adv = RemoteAdvisor::new(&addr, Duration::from_secs(5));
    let r = adv.advise(&request(), &graph()).unwrap();
    assert_eq!(r.event, "studied");
    assert_eq!(r.raw_text, "studied hard");
    assert!(!r.fallback);

    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].0, "POST /advise");
    let body: serde_json::Value = serde_json::from_str(&seen[0].1).unwrap();
    assert_eq!(body, serde_json::json!({"context": "i had a test", "history": ["had test"]}));
}

#[test]
fn unreachable_service_falls_back_to_lexical() {
    let addr = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}", l.local_addr().unwrap())
    };
    let adv = RemoteAdvisor::new(&addr, Duration::from_secs(2));
    let r = adv.advise(&request(), &graph()).unwrap();
    assert!(r.fallback);
    assert!(r.note.is_some());
    assert!(graph().contains(&r.event));
}

#[test]
fn empty_event_text_is_a_protocol_error() {
    let (addr, _) = serve(ok(r#"{"event_text": "  "}"#));
    let r = RemoteAdvisor::new(&addr, Duration::from_secs(5))
        .advise(&request(), &graph())
        .unwrap();
    assert!(r.fallback);
    assert!(r.note.unwrap().contains("empty"));
}

#[test]
fn non_success_status_falls_back() {
    let (addr, _) = serve(Reply {
        status: 500,
        body: "{}".into(),
        delay: Duration::ZERO,
    });
    let r = RemoteAdvisor::new(&addr, Duration::from_secs(5))
        .advise(&request(), &graph())
        .unwrap();
    assert!(r.fallback);
}

#[test]
fn timeout_falls_back() {
    let (addr, _) = serve(Reply {
        status: 200,
        body: r#"{"event_text": "studied"}"#.into(),
        delay: Duration::from_millis(1500),
    });
    let r = RemoteAdvisor::new(&addr, Duration::from_millis(200))
        .advise(&request(), &graph())
        .unwrap();
    assert!(r.fallback);
}

#[test]
fn fallback_can_be_disabled() {
    let (addr, _) = serve(ok("not json"));
    let err = RemoteAdvisor::new(&addr, Duration::from_secs(5))
        .with_fallback(None)
        .advise(&request(), &graph())
        .unwrap_err();
    assert!(matches!(err, AdvisorError::Remote(_)));
}

#[test]
fn health_check() {
    let (addr, seen) = serve(ok(r#"{"status": "ok"}"#));
    RemoteAdvisor::new(&addr, Duration::from_secs(5)).health().unwrap();
    assert_eq!(seen.lock().unwrap()[0].0, "GET /health");

    let (addr, _) = serve(ok(r#"{"status": "loading"}"#));
    assert!(RemoteAdvisor::new(&addr, Duration::from_secs(5)).health().is_err());
}

#[test]
fn one_shot_helper() {
    let (addr, _) = serve(ok(r#"{"event_text": "went home early"}"#));
    let r = storyplan::advisor::remote_advise(&request(), &graph(), &addr, Duration::from_secs(5)).unwrap();
    assert_eq!(r.event, "went home");
}
