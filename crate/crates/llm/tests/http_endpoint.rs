use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use crnforge_llm::mock::ScriptedBackend;
use crnforge_llm::server::spawn;
use crnforge_llm::{ChatBackend, ChatMessage, CompletionRequest, EndpointConfig, HttpBackend, LlmError};

fn config(base_url: String) -> EndpointConfig {
    EndpointConfig {
        base_url,
        backoff_base_secs: 0.01,
        max_retries: 3,
        timeout_secs: 10.0,
        ..Default::default()
    }
}

fn request() -> CompletionRequest {
    CompletionRequest::new(vec![ChatMessage::system("s"), ChatMessage::user("A decays.")])
}

fn status(code: u16) -> Result<String, LlmError> {
    Err(LlmError::Status {
        status: code,
        body: "scripted".into(),
    })
}

#[tokio::test]
async fn canned_reply_comes_back_verbatim() {
    let canned = "```\nA -> @ k0;\n```\n";
    let script = Arc::new(ScriptedBackend::replies([canned]));
    let endpoint = spawn(script.clone()).await.unwrap();
    let client = HttpBackend::with_key(config(endpoint.base_url()), None).unwrap();
    assert_eq!(client.complete(&request()).await.unwrap(), canned);
    let seen = script.requests();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].messages, request().messages);
}

#[tokio::test]
async fn rate_limits_are_retried() {
    let script = Arc::new(ScriptedBackend::new([status(429), status(429), Ok("done".into())]));
    let endpoint = spawn(script.clone()).await.unwrap();
    let client = HttpBackend::with_key(config(endpoint.base_url()), None).unwrap();
    assert_eq!(client.complete(&request()).await.unwrap(), "done");
    assert_eq!(script.requests().len(), 3);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let script = Arc::new(ScriptedBackend::new([status(400), Ok("never".into())]));
    let endpoint = spawn(script.clone()).await.unwrap();
    let client = HttpBackend::with_key(config(endpoint.base_url()), None).unwrap();
    assert!(matches!(client.complete(&request()).await, Err(LlmError::Status { status: 400, .. })));
    assert_eq!(script.requests().len(), 1);
}

#[tokio::test]
async fn retries_are_bounded() {
    let script = Arc::new(ScriptedBackend::new([status(500), status(502), status(503), Ok("late".into())]));
    let endpoint = spawn(script.clone()).await.unwrap();
    let cfg = EndpointConfig {
        max_retries: 1,
        ..config(endpoint.base_url())
    };
    let client = HttpBackend::with_key(cfg, None).unwrap();
    assert!(matches!(client.complete(&request()).await, Err(LlmError::Status { status: 502, .. })));
    assert_eq!(script.requests().len(), 2);
}

#[tokio::test]
async fn unreachable_endpoint_is_a_transport_error() {
    let cfg = EndpointConfig {
        max_retries: 0,
        ..config("http://127.0.0.1:9/v1".into())
    };
    let client = HttpBackend::with_key(cfg, None).unwrap();
    assert!(matches!(client.complete(&request()).await, Err(LlmError::Transport(_))));
}

struct Slow {
    active: AtomicUsize,
    peak: AtomicUsize,
}

#[async_trait]
impl ChatBackend for Slow {
    async fn complete(&self, _request: &CompletionRequest) -> Result<String, LlmError> {
        let now = self.active.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        tokio::time::sleep(Duration::from_millis(30)).await;
        self.active.fetch_sub(1, Ordering::SeqCst);
        Ok("ok".into())
    }
}

#[tokio::test]
async fn in_flight_limit_holds() {
    let slow = Arc::new(Slow {
        active: AtomicUsize::new(0),
        peak: AtomicUsize::new(0),
    });
    let endpoint = spawn(slow.clone()).await.unwrap();
    let cfg = EndpointConfig {
        max_in_flight: 2,
        ..config(endpoint.base_url())
    };
    let client = Arc::new(HttpBackend::with_key(cfg, None).unwrap());
    let calls: Vec<_> = (0..8)
        .map(|_| {
            let c = client.clone();
            tokio::spawn(async move { c.complete(&request()).await })
        })
        .collect();
    for call in calls {
        assert_eq!(call.await.unwrap().unwrap(), "ok");
    }
    assert!(slow.peak.load(Ordering::SeqCst) <= 2);
}

#[derive(Clone, Default)]
struct Capture(Arc<Mutex<Vec<u8>>>);

impl std::io::Write for Capture {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[tokio::test]
async fn logs_never_contain_the_key() {
    let key = "sk-test-5f2a9c";
    let capture = Capture::default();
    let writer = capture.clone();
    let subscriber = tracing_subscriber::fmt()
        .with_max_level(tracing::Level::DEBUG)
        .with_writer(move || writer.clone())
        .finish();
    let _guard = tracing::subscriber::set_default(subscriber);

    let script = Arc::new(ScriptedBackend::new([status(500), Ok(format!("echo {key}"))]));
    let endpoint = spawn(script).await.unwrap();
    let client = HttpBackend::with_key(config(endpoint.base_url()), Some(key.into())).unwrap();
    let mut req = request();
    req.messages.push(ChatMessage::user(format!("my key is {key}")));
    client.complete(&req).await.unwrap();

    let logs = String::from_utf8(capture.0.lock().unwrap().clone()).unwrap();
    assert!(logs.contains("completion request"));
    assert!(logs.contains("[REDACTED]"));
    assert!(!logs.contains(key));
}
