use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use fcore::llm::{
    cost, extract_code, extract_plain, fingerprint, CallRecord, Cassette, CassetteEntry, ChatProvider, ChatRequest,
    ChatResponse, CountingProvider, LiveConfig, LiveProvider, LlmError, Phase, PriceTable, RecordingProvider,
    ReplayProvider, ScriptedProvider,
};
use fcore::prompt::{Message, Method};

fn req(text: &str) -> ChatRequest {
    ChatRequest { model_id: "m-1".into(), temperature: 0.7, max_tokens: 64, messages: vec![Message::user(text)] }
}

fn entry(text: &str, reply: &str) -> CassetteEntry {
    CassetteEntry {
        fingerprint: fingerprint(&req(text)),
        model_id: "m-1".into(),
        response: ChatResponse { text: reply.into(), prompt_tokens: 10, completion_tokens: 5, latency_ms: 0 },
    }
}

#[derive(Clone, Default)]
struct Sink(Arc<Mutex<Vec<u8>>>);

impl Write for Sink {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[test]
fn replay_serves_entries_in_order_then_exhausts() {
    let cassette = Cassette { entries: vec![entry("a", "A"), entry("b", "B"), entry("c", "C")] };
    let replay = ReplayProvider::new(cassette);
    for (q, a) in [("a", "A"), ("b", "B"), ("c", "C")] {
        assert_eq!(replay.complete(&req(q)).unwrap().text, a);
    }
    assert!(replay.is_exhausted());
    assert!(matches!(replay.complete(&req("d")), Err(LlmError::Exhausted(3))));
}

#[test]
fn replay_rejects_a_different_request() {
    let replay = ReplayProvider::new(Cassette { entries: vec![entry("a", "A")] });
    assert!(matches!(replay.complete(&req("zzz")), Err(LlmError::Mismatch { index: 0, .. })));
}

#[test]
fn recorded_cassette_replays_identically() {
    let sink = Sink::default();
    let recorder = RecordingProvider::to_writer(ScriptedProvider::new(["one", "two"]), Box::new(sink.clone()));
    let first = [recorder.complete(&req("p")).unwrap(), recorder.complete(&req("q")).unwrap()];
    drop(recorder);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    std::fs::write(&path, sink.0.lock().unwrap().as_slice()).unwrap();
    let replay = ReplayProvider::open(&path).unwrap();
    assert_eq!(replay.complete(&req("p")).unwrap(), first[0]);
    assert_eq!(replay.complete(&req("q")).unwrap(), first[1]);
    assert!(replay.is_exhausted());
}

#[test]
fn cassette_file_round_trips_and_reports_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let cassette = Cassette { entries: vec![entry("a", "A\n```x```"), entry("b", "B")] };
    cassette.save(&path).unwrap();
    assert_eq!(Cassette::load(&path).unwrap(), cassette);

    std::fs::write(&path, format!("{}\nnot json\n", serde_json::to_string(&cassette.entries[0]).unwrap())).unwrap();
    assert!(matches!(Cassette::load(&path), Err(LlmError::Cassette { line: 2, .. })));
}

#[test]
fn counting_provider_counts() {
    let counter = CountingProvider::new(ScriptedProvider::new(["x", "y", "z"]));
    for _ in 0..3 {
        counter.complete(&req("r")).unwrap();
    }
    assert_eq!(counter.calls(), 3);
}

fn serve(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(String::from_utf8(buf).unwrap());
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        bodies
    });
    (format!("http://{addr}/v1"), handle)
}

fn live(base_url: String) -> LiveProvider {
    LiveProvider::new(LiveConfig {
        base_url,
        api_key: Some("k".into()),
        requests_per_minute: 6000,
        max_attempts: 3,
        initial_backoff: Duration::from_millis(10),
        max_backoff: Duration::from_millis(20),
        timeout: Duration::from_secs(10),
    })
    .unwrap()
}

#[test]
fn live_provider_retries_server_errors() {
    let ok = r#"{"choices":[{"message":{"role":"assistant","content":"hello"}}],"usage":{"prompt_tokens":7,"completion_tokens":3}}"#;
    let (url, server) = serve(vec![(500, "{}".into()), (200, ok.into())]);
    let r = live(url).complete(&req("hi")).unwrap();
    assert_eq!((r.text.as_str(), r.prompt_tokens, r.completion_tokens), ("hello", 7, 3));
    let bodies = server.join().unwrap();
    assert_eq!(bodies.len(), 2);
    let sent: serde_json::Value = serde_json::from_str(&bodies[1]).unwrap();
    assert_eq!(sent["model"], "m-1");
    assert_eq!(sent["messages"][0]["role"], "user");
}

#[test]
fn live_provider_gives_up_on_client_errors() {
    let (url, server) = serve(vec![(400, r#"{"error":"bad"}"#.into())]);
    let err = live(url).complete(&req("hi")).unwrap_err();
    assert!(matches!(err, LlmError::Provider { attempts: 1, .. }));
    server.join().unwrap();
}

#[test]
fn extraction_cases() {
    assert_eq!(extract_code("```python\nprint(1)\n```", "python").unwrap(), "print(1)\n");
    assert_eq!(extract_code("text\n```py\nx=1\n```\n```python\ny=2\n```", "python").unwrap(), "x=1\n");
    assert_eq!(extract_code("```smt2\n(check-sat)\n```", "smt2").unwrap(), "(check-sat)\n");
    assert_eq!(
        extract_code("(declare-const a Int)\n(check-sat)", "smt2").unwrap(),
        "(declare-const a Int)\n(check-sat)\n"
    );
    assert!(extract_code("Sorry, no.", "smt2").is_err());
    assert_eq!(extract_plain("```\n1 2\n```"), "1 2\n");
    assert_eq!(extract_plain("1 2\n3 4"), "1 2\n3 4\n");
}

#[test]
fn program_methods_have_no_test_phase_spend() {
    let rec = |method, phase| CallRecord {
        problem_id: "sudoku".into(),
        method,
        phase,
        model_id: "m-1".into(),
        prompt_tokens: 1000,
        completion_tokens: 1000,
    };
    let records = vec![
        rec(Method::SymProLm, Phase::Train),
        rec(Method::SymProLm, Phase::Train),
        rec(Method::FewShot, Phase::Test),
    ];
    let prices = PriceTable::default().with("m-1", 0.01, 0.03);
    let s = cost(&records, &prices).unwrap();
    assert!((s.total - 0.12).abs() < 1e-12);
    assert_eq!(s.test_phase.get(&Method::SymProLm).copied().unwrap_or(0.0), 0.0);
    assert!((s.test_phase[&Method::FewShot] - 0.04).abs() < 1e-12);
    assert!(matches!(cost(&records, &PriceTable::default()), Err(LlmError::Pricing(_))));
}
