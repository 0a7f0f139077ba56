mod common;

use std::sync::Once;
use std::time::{Duration, Instant};

use common::stub::{Reply, StubServer};
use eas_core::backend::{BackendConfig, BackendError, CompletionBackend, CompletionRequest, HttpBackend};
use eas_core::prompting::PromptPair;

const KEY_VAR: &str = "EAS_BACKEND_STUB_TEST_KEY";
const BLOCK: &str = "OT: We won't to see all that is it remarkable here.\nCorrected: We want to see all that is remarkable here.\n1st Error & Reason: GW6A, won't, Confused word choice between 'won't' (will not) and 'want'\n2nd Error & Reason: GS2A, is it, Incorrect word order with redundant 'it'\n";

fn set_key() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| std::env::set_var(KEY_VAR, "sk-test-123"));
}

fn backend(url: &str, max_attempts: u32, backoff_ms: u64) -> HttpBackend {
    set_key();
    let mut config = BackendConfig::http(url, "stub-model");
    config.api_key_env = KEY_VAR.into();
    config.max_attempts = max_attempts;
    config.backoff_base = Duration::from_millis(backoff_ms);
    HttpBackend::new(&config).unwrap()
}

fn request(timeout: Duration) -> CompletionRequest {
    CompletionRequest {
        prompt: PromptPair {
            system_text: "SYSTEM".into(),
            user_text: "USER".into(),
            temperature: 0.0,
            model_hint: None,
        },
        chunk_index: 2,
        chunk_text: "We won't to see all that is it remarkable here.".into(),
        timeout,
    }
}

#[test]
fn canned_block_passes_through_verbatim() {
    let server = StubServer::start(vec![Reply::message(BLOCK)]);
    let result = backend(&server.url, 3, 10).complete(&request(Duration::from_secs(5))).unwrap();
    assert_eq!(result.raw_text, BLOCK);
    assert_eq!(result.attempt_count, 1);
    assert_eq!(result.backend_id, "http:stub-model");

    let seen = server.requests();
    assert_eq!(seen.len(), 1);
    assert!(seen[0].request_line.starts_with("POST /v1/chat/completions "));
    assert_eq!(seen[0].header("authorization"), Some("Bearer sk-test-123"));
    let body: serde_json::Value = serde_json::from_str(&seen[0].body).unwrap();
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][0]["content"], "SYSTEM");
    assert_eq!(body["messages"][1]["role"], "user");
    assert_eq!(body["messages"][1]["content"], "USER");
}

#[test]
fn rate_limit_then_success_retries_once() {
    let server = StubServer::start(vec![Reply::Json(429, "{}".into()), Reply::message(BLOCK)]);
    let result = backend(&server.url, 3, 20).complete(&request(Duration::from_secs(5))).unwrap();
    assert_eq!(result.attempt_count, 2);
    assert_eq!(result.raw_text, BLOCK);
    assert_eq!(server.requests().len(), 2);
}

#[test]
fn unauthorized_fails_fast() {
    for status in [401, 403] {
        let server = StubServer::start(vec![Reply::Json(status, "{}".into()), Reply::message(BLOCK)]);
        let err = backend(&server.url, 3, 200).complete(&request(Duration::from_secs(5))).unwrap_err();
        assert!(matches!(err, BackendError::AuthError { status: s } if s == status));
        assert_eq!(server.requests().len(), 1);
    }
}

#[test]
fn timeouts_exhaust_attempts() {
    let server = StubServer::start(vec![Reply::Hang(Duration::from_secs(2))]);
    let started = Instant::now();
    let err = backend(&server.url, 3, 10).complete(&request(Duration::from_millis(150))).unwrap_err();
    assert!(matches!(err, BackendError::TransientExhausted { attempts: 3, .. }), "{err:?}");
    assert_eq!(server.requests().len(), 3);
    assert!(started.elapsed() < Duration::from_secs(2));
}

#[test]
fn server_errors_are_retried_with_growing_delays() {
    let server = StubServer::start(vec![Reply::Json(503, "{}".into())]);
    let err = backend(&server.url, 4, 40).complete(&request(Duration::from_secs(5))).unwrap_err();
    assert!(matches!(err, BackendError::TransientExhausted { attempts: 4, .. }));
    let seen = server.requests();
    assert_eq!(seen.len(), 4);
    let gaps: Vec<Duration> = seen.windows(2).map(|w| w[1].at - w[0].at).collect();
    for (i, gap) in gaps.iter().enumerate() {
        let expected = Duration::from_millis(40 << i);
        assert!(*gap >= expected.mul_f64(0.8), "gap {i} = {gap:?}, expected about {expected:?}");
    }
    for w in gaps.windows(2) {
        assert!(w[1] + Duration::from_millis(25) >= w[0], "{gaps:?}");
    }
}

#[test]
fn other_client_errors_are_not_retried() {
    let server = StubServer::start(vec![Reply::Json(400, r#"{"error":"bad"}"#.into())]);
    let err = backend(&server.url, 3, 10).complete(&request(Duration::from_secs(5))).unwrap_err();
    assert!(matches!(err, BackendError::Rejected { status: 400, .. }));
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn success_without_message_text_is_bad_response() {
    let server = StubServer::start(vec![Reply::Json(200, r#"{"choices":[]}"#.into())]);
    let err = backend(&server.url, 3, 10).complete(&request(Duration::from_secs(5))).unwrap_err();
    assert!(matches!(err, BackendError::BadResponse(_)));
}

#[test]
fn refused_connection_is_transient() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = backend(&format!("http://127.0.0.1:{port}/"), 2, 5).complete(&request(Duration::from_secs(2))).unwrap_err();
    assert!(matches!(err, BackendError::TransientExhausted { attempts: 2, .. }), "{err:?}");
}
