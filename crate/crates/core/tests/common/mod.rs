#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use tailqa::dataset::{QAExample, Relation};
use tailqa::eval::{Mode, PredictionRecord};

pub struct Reply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl Reply {
    pub fn ok(body: impl Into<String>) -> Self {
        Self::status(200, body)
    }
    pub fn status(status: u16, body: impl Into<String>) -> Self {
        Self {
            status,
            body: body.into(),
            delay: Duration::ZERO,
        }
    }
}

/// Local HTTP server answering with a caller-supplied handler that sees the
/// request URL and body.
pub struct MockServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
    pub bodies: Arc<Mutex<Vec<String>>>,
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start<H>(mut handler: H) -> Self
    where
        H: FnMut(usize, &str, &str) -> Reply + Send + 'static,
    {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let port = server.server_addr().to_ip().unwrap().port();
        let hits = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let (s, h, b) = (server.clone(), hits.clone(), bodies.clone());
        let handle = std::thread::spawn(move || {
            for mut req in s.incoming_requests() {
                let n = h.fetch_add(1, Ordering::SeqCst);
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                b.lock().unwrap().push(body.clone());
                let reply = handler(n, req.url(), &body);
                if !reply.delay.is_zero() {
                    std::thread::sleep(reply.delay);
                }
                let resp = tiny_http::Response::from_string(reply.body)
                    .with_status_code(reply.status)
                    .with_header(
                        "Content-Type: application/json"
                            .parse::<tiny_http::Header>()
                            .unwrap(),
                    );
                let _ = req.respond(resp);
            }
        });
        Self {
            url: format!("http://127.0.0.1:{port}"),
            hits,
            bodies,
            server,
            handle: Some(handle),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub fn example(id: &str, relation: Relation, views: u64, answer: &str) -> QAExample {
    QAExample {
        id: id.to_string(),
        question: format!("Question about {id}?"),
        answers: vec![answer.to_string()],
        subj_label: format!("Subject {id}"),
        subj_id: id.to_string(),
        relation,
        popularity: Some(views),
    }
}

pub fn record(id: &str, mode: Mode, correct: bool) -> PredictionRecord {
    PredictionRecord {
        question_id: id.to_string(),
        mode,
        prompt: String::new(),
        prediction: String::new(),
        retrieved_doc_id: None,
        retrieval_recall1: None,
        correct,
        prompt_tokens: None,
        completion_tokens: None,
        latency_ms: None,
        generated_context: None,
        empty_generated_context: false,
    }
}
