mod common;

use std::time::{Duration, Instant};

use common::{MockServer, Reply};
use tailqa::http::RetryPolicy;
use tailqa::lm::{genread_answer, Completer, EndpointConfig, HttpCompleter};
use tailqa::popularity::{annotate_dataset, PageviewsClient, PageviewsConfig, YearMonth};
use tailqa::Error;

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        max_retries: 5,
        initial_backoff_ms: 10,
        timeout_ms: 5_000,
    }
}

fn pageviews_config(base: &str) -> PageviewsConfig {
    PageviewsConfig {
        base_url: base.to_string(),
        rate_limit_per_sec: None,
        retry: fast_retry(),
        ..PageviewsConfig::default()
    }
}

fn month() -> YearMonth {
    "2022-10".parse().unwrap()
}

fn views_body(views: u64) -> String {
    format!(
        r#"{{"items":[{{"project":"en.wikipedia","article":"X","granularity":"monthly","timestamp":"2022100100","access":"all-access","agent":"user","views":{views}}}]}}"#
    )
}

#[test]
fn pageviews_cached_across_clients() {
    let server = MockServer::start(|_, url, _| {
        assert!(
            url.contains(
                "/per-article/en.wikipedia/all-access/user/Pierre/monthly/20221001/20221031"
            ),
            "{url}"
        );
        Reply::ok(views_body(10_000))
    });
    let dir = tempfile::tempdir().unwrap();
    let client = PageviewsClient::new(pageviews_config(&server.url), dir.path());
    let rec = client.fetch("Pierre", month()).unwrap();
    assert_eq!(rec.views, 10_000);
    assert!(!rec.missing);
    assert_eq!(client.requests_made(), 1);

    let again = client.fetch("Pierre", month()).unwrap();
    assert_eq!(again, rec);
    assert_eq!(client.requests_made(), 1);

    // A fresh client over the same directory stands in for a process restart.
    let restarted = PageviewsClient::new(pageviews_config(&server.url), dir.path());
    assert_eq!(restarted.fetch("Pierre", month()).unwrap(), rec);
    assert_eq!(restarted.requests_made(), 0);
    assert_eq!(server.hits(), 1);
}

#[test]
fn pageviews_404_is_missing_with_zero_views() {
    let server = MockServer::start(|_, _, _| Reply::status(404, r#"{"type":"not_found"}"#));
    let dir = tempfile::tempdir().unwrap();
    let client = PageviewsClient::new(pageviews_config(&server.url), dir.path());
    let rec = client.fetch("No Such Article", month()).unwrap();
    assert_eq!(rec.views, 0);
    assert!(rec.missing);
    assert_eq!(server.hits(), 1);
}

#[test]
fn pageviews_retry_after_rate_limit() {
    let server = MockServer::start(|n, _, _| {
        if n < 3 {
            Reply::status(429, "slow down")
        } else {
            Reply::ok(views_body(42))
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let client = PageviewsClient::new(pageviews_config(&server.url), dir.path());
    assert_eq!(client.fetch("Black", month()).unwrap().views, 42);
    assert_eq!(client.requests_made(), 4);
}

#[test]
fn annotate_fetches_each_subject_once() {
    let server = MockServer::start(|_, url, _| {
        let views = if url.contains("/Popular_Thing/") {
            5000
        } else {
            7
        };
        Reply::ok(views_body(views))
    });
    let dir = tempfile::tempdir().unwrap();
    let client = PageviewsClient::new(pageviews_config(&server.url), dir.path());
    let mut a = common::example("a", tailqa::dataset::Relation::Genre, 0, "x");
    a.subj_label = "Popular Thing".into();
    a.popularity = None;
    let mut b = a.clone();
    b.id = "b".into();
    let mut c = a.clone();
    c.id = "c".into();
    c.subj_label = "Rare Thing".into();
    let out = annotate_dataset(&[a, b, c], &client, month()).unwrap();
    let pops: Vec<_> = out.iter().map(|e| e.popularity).collect();
    assert_eq!(pops, vec![Some(5000), Some(5000), Some(7)]);
    assert_eq!(server.hits(), 2);
}

fn completion_body(text: &str) -> String {
    serde_json::json!({
        "choices": [{"text": text, "index": 0}],
        "usage": {"prompt_tokens": 11, "completion_tokens": 3, "total_tokens": 14}
    })
    .to_string()
}

fn endpoint(base: &str) -> EndpointConfig {
    let mut e = EndpointConfig::new(base, "test-model");
    e.retry = fast_retry();
    e
}

#[test]
fn completion_cache_hit_makes_no_request() {
    let server = MockServer::start(|_, url, body| {
        assert_eq!(url, "/completions");
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(v["model"], "test-model");
        assert_eq!(v["temperature"], 0.0);
        Reply::ok(completion_body(" Sarajevo"))
    });
    let dir = tempfile::tempdir().unwrap();
    let c = HttpCompleter::new(endpoint(&server.url), dir.path()).unwrap();
    let first = c
        .complete("Q: In what city was Zijah Sokolović born? A:")
        .unwrap();
    assert_eq!(first.text, " Sarajevo");
    assert_eq!((first.prompt_tokens, first.completion_tokens), (11, 3));
    assert!(!first.from_cache);

    let second = c
        .complete("Q: In what city was Zijah Sokolović born? A:")
        .unwrap();
    assert!(second.from_cache);
    assert_eq!(second.latency_ms, first.latency_ms);
    assert_eq!(second.text, first.text);
    assert_eq!(c.network_calls(), 1);
    assert_eq!(server.hits(), 1);
}

#[test]
fn completion_retries_429_three_times() {
    let server = MockServer::start(|n, _, _| {
        if n < 3 {
            Reply::status(429, "rate limited")
        } else {
            Reply::ok(completion_body("ok"))
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let c = HttpCompleter::new(endpoint(&server.url), dir.path()).unwrap();
    assert_eq!(c.complete("p").unwrap().text, "ok");
    assert_eq!(c.network_calls(), 4);
}

#[test]
fn completion_retries_server_errors_until_exhausted() {
    let server = MockServer::start(|_, _, _| Reply::status(503, "down"));
    let dir = tempfile::tempdir().unwrap();
    let mut e = endpoint(&server.url);
    e.retry.max_retries = 2;
    let c = HttpCompleter::new(e, dir.path()).unwrap();
    match c.complete("p").unwrap_err() {
        Error::Transport {
            attempts, message, ..
        } => {
            assert_eq!(attempts, 3);
            assert!(message.contains("503"), "{message}");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn completion_timeout_reports_elapsed_time() {
    let server = MockServer::start(|_, _, _| Reply {
        status: 200,
        body: completion_body("late"),
        delay: Duration::from_millis(1500),
    });
    let dir = tempfile::tempdir().unwrap();
    let mut e = endpoint(&server.url);
    e.retry = RetryPolicy {
        max_retries: 10,
        initial_backoff_ms: 10,
        timeout_ms: 300,
    };
    let c = HttpCompleter::new(e, dir.path()).unwrap();
    let start = Instant::now();
    let err = c.complete("p").unwrap_err();
    assert!(start.elapsed() < Duration::from_millis(1400));
    match err {
        Error::Transport { elapsed_ms, .. } => assert!(elapsed_ms >= 250, "{elapsed_ms}"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn completion_client_errors_are_not_retried() {
    let server = MockServer::start(|_, _, _| Reply::status(400, r#"{"error":"bad"}"#));
    let dir = tempfile::tempdir().unwrap();
    let c = HttpCompleter::new(endpoint(&server.url), dir.path()).unwrap();
    assert!(matches!(c.complete("p").unwrap_err(), Error::Protocol(_)));
    assert_eq!(server.hits(), 1);
}

#[test]
fn completion_malformed_body_is_protocol_error() {
    let server = MockServer::start(|n, _, _| {
        if n == 0 {
            Reply::ok("not json")
        } else {
            Reply::ok(r#"{"choices":[]}"#)
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let c = HttpCompleter::new(endpoint(&server.url), dir.path()).unwrap();
    assert!(matches!(c.complete("a").unwrap_err(), Error::Protocol(_)));
    assert!(matches!(c.complete("b").unwrap_err(), Error::Protocol(_)));
}

#[test]
fn unset_api_key_variable_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut e = endpoint("http://127.0.0.1:9");
    e.api_key_env = Some("TAILQA_TEST_KEY_THAT_IS_UNSET".into());
    let c = HttpCompleter::new(e, dir.path()).unwrap();
    assert!(matches!(c.complete("p").unwrap_err(), Error::Config(_)));
}

#[test]
fn genread_stages_embed_document_and_cache() {
    const DOC: &str = "The Cocoanuts is a 1929 musical comedy film produced by Walter Wanger.";
    let server = MockServer::start(|_, _, body| {
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        let prompt = v["prompt"].as_str().unwrap();
        if prompt.starts_with("Generate a background document") {
            Reply::ok(completion_body(DOC))
        } else {
            Reply::ok(completion_body(" Walter Wanger"))
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let c = HttpCompleter::new(endpoint(&server.url), dir.path()).unwrap();
    let q = "Who was the producer of The Cocoanuts?";
    let shots = vec![(
        "In what country is Pierre?".to_string(),
        "United States".to_string(),
    )];
    let instruction = tailqa::lm::DEFAULT_GENREAD_INSTRUCTION;
    let out = genread_answer(&c, q, &shots, instruction).unwrap();
    assert_eq!(out.generated_context, DOC);
    assert!(out.answer_prompt.contains(DOC));
    assert!(!out.empty_context);
    assert_eq!(out.completion.text, " Walter Wanger");
    assert_eq!(server.hits(), 2);

    let again = genread_answer(&c, q, &shots, instruction).unwrap();
    assert_eq!(again.answer_prompt, out.answer_prompt);
    assert_eq!(server.hits(), 2);
    assert_eq!(c.network_calls(), 2);
}
