//! Wire-level tests against a local stand-in server.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use candrefine::generation::{
    CompletionClient, CompletionRequest, HttpCompletionClient, Provider, RetryPolicy,
};
use candrefine::harness::{
    read_pools, read_rerank_results, CorrectRequest, ExperimentConfig, Harness, HttpCorrector,
};
use candrefine::rerank::Method;
use serde_json::{json, Value};
use tempfile::TempDir;

#[derive(Debug, Clone)]
struct Seen {
    path: String,
    auth: Option<String>,
    body: Value,
}

type Handler = dyn Fn(usize, &str, &Value) -> (u16, Value) + Send + Sync;

/// Starts a server on a free port. Every request is recorded.
fn serve(handler: Box<Handler>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let count = AtomicUsize::new(0);
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let mut text = String::new();
            req.as_reader().read_to_string(&mut text).unwrap();
            let body: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
            let auth = req
                .headers()
                .iter()
                .find(|h| h.field.equiv("Authorization"))
                .map(|h| h.value.to_string());
            let path = req.url().to_string();
            let n = count.fetch_add(1, Ordering::SeqCst);
            let (status, reply) = handler(n, &path, &body);
            log.lock().unwrap().push(Seen { path, auth, body });
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let resp = tiny_http::Response::from_string(reply.to_string())
                .with_status_code(status)
                .with_header(header);
            let _ = req.respond(resp);
        }
    });
    (url, seen)
}

fn request(prompt: &str) -> CompletionRequest {
    CompletionRequest {
        model: "m".into(),
        prompt: prompt.into(),
        temperature: 0.0,
        max_new_tokens: 8,
        stop: vec!["\n".into()],
        seed: Some(3),
        sample_index: 0,
        item_id: Some("0".into()),
    }
}

fn bench(n: usize) -> (TempDir, ExperimentConfig) {
    let dir = tempfile::tempdir().unwrap();
    candrefine::harness::synthetic::write_benchmark(dir.path(), n, 11).unwrap();
    let mut config = ExperimentConfig::load(dir.path().join("config.json")).unwrap();
    config.retry = RetryPolicy::immediate(3);
    (dir, config)
}

/// The query line of a rendered prompt.
fn query(prompt: &str) -> String {
    prompt
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("Input: "))
        .unwrap()
        .to_string()
}

#[test]
fn completion_bodies_and_auth() {
    let (url, seen) = serve(Box::new(|_, _, _| {
        (200, json!({"choices": [{"message": {"content": " fixed\nignored"}}]}))
    }));
    let client = HttpCompletionClient::new(format!("{url}/v1/"), Provider::ChatCompletions)
        .with_api_key(Some("k123".into()));
    let out = client.complete(&request("hello")).unwrap();
    assert_eq!(out.text, " fixed\nignored");

    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].path, "/v1/chat/completions");
    assert_eq!(seen[0].auth.as_deref(), Some("Bearer k123"));
    let body = &seen[0].body;
    assert_eq!(body["model"], "m");
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "hello");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 8);
    assert_eq!(body["stop"], json!(["\n"]));
    assert_eq!(body["seed"], 3);
}

#[test]
fn completion_status_codes_map_to_retryability() {
    let (url, _) = serve(Box::new(|n, _, _| match n {
        0 => (503, json!({"error": "busy"})),
        1 => (429, json!({"error": "slow down"})),
        _ => (400, json!({"error": "bad"})),
    }));
    let client = HttpCompletionClient::new(url, Provider::Completions).with_api_key(None);
    assert!(client.complete(&request("p")).unwrap_err().retryable);
    assert!(client.complete(&request("p")).unwrap_err().retryable);
    let fatal = client.complete(&request("p")).unwrap_err();
    assert!(!fatal.retryable);
    assert!(fatal.message.contains("400"));
}

#[test]
fn live_generate_against_endpoint_with_one_transient_failure() {
    let (_dir, mut config) = bench(6);
    let (url, seen) = serve(Box::new(|n, _, body| {
        if n == 0 {
            return (500, json!({"error": "warming up"}));
        }
        let prompt = body["messages"][0]["content"].as_str().unwrap();
        (200, json!({"choices": [{"message": {"content": query(prompt)}}]}))
    }));
    config.endpoints.completion_url = Some(url);
    let h = Harness::new(config.clone(), false);
    let report = h.generate().unwrap();
    assert_eq!((report.pools_written, report.failed), (6, 0));

    let pools = read_pools(&h.output_dir().join("pools.jsonl")).unwrap();
    for p in &pools {
        assert!(p.candidates.iter().all(|c| c.text == p.source));
    }
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 6 * 11 + 1);
    let greedy = seen.iter().filter(|s| s.body["temperature"] == 0.0).count();
    assert_eq!(greedy, 6 + usize::from(seen[0].body["temperature"] == 0.0));
    let demo = &config.prompt_sets[0].demonstrations[0].input;
    assert!(seen.iter().all(|s| s.body["messages"][0]["content"].as_str().unwrap().contains(demo.as_str())));
}

#[test]
fn corrector_batch_contract() {
    let (_dir, mut config) = bench(45);
    Harness::new(config.clone(), true).generate().unwrap();

    let (url, seen) = serve(Box::new(|_, path, body| {
        assert_eq!(path, "/correct_batch");
        let outputs: Vec<Value> = body["candidates"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c[0].clone())
            .collect();
        let truncated = vec![false; outputs.len()];
        (200, json!({"outputs": outputs, "truncated": truncated}))
    }));
    config.endpoints.corrector_url = Some(url);
    let h = Harness::new(config, true);
    let report = h.rerank(Some(Method::Corrector)).unwrap();
    assert_eq!((report.n, report.coverage), (45, 1.0));

    let pools = read_pools(&h.output_dir().join("pools.jsonl")).unwrap();
    let results = read_rerank_results(&h.output_dir().join("rerank.corrector.jsonl")).unwrap();
    for (r, p) in results.iter().zip(&pools) {
        assert_eq!(r.id, p.id);
        assert_eq!(r.chosen_text, p.candidates[0].text);
        assert_eq!(r.chosen_index, None);
    }

    let seen = seen.lock().unwrap();
    let sizes: Vec<usize> = seen.iter().map(|s| s.body["sources"].as_array().unwrap().len()).collect();
    assert_eq!(sizes, vec![32, 13]);
    let first = &seen[0].body;
    assert_eq!(first["sources"][0], pools[0].source);
    assert_eq!(first["candidates"][0].as_array().unwrap().len(), 11);
    let input = first["inputs"][0].as_str().unwrap();
    assert!(input.starts_with(&format!("source: {} candidate0: ", pools[0].source)));
}

#[test]
fn corrector_short_reply_falls_back_to_source() {
    let (_dir, mut config) = bench(5);
    Harness::new(config.clone(), true).generate().unwrap();
    let (url, _) = serve(Box::new(|_, _, _| (200, json!({"outputs": ["only one"]}))));
    config.endpoints.corrector_url = Some(url);
    let h = Harness::new(config, true);
    let report = h.rerank(Some(Method::Corrector)).unwrap();
    assert_eq!(report.coverage, 0.0);
    assert_eq!(report.failures.len(), 5);
    let results = read_rerank_results(&h.output_dir().join("rerank.corrector.jsonl")).unwrap();
    let inputs = h.config().load_inputs().unwrap();
    for (r, i) in results.iter().zip(&inputs) {
        assert!(r.fallback);
        assert_eq!(r.chosen_text, i.source);
    }
}

#[test]
fn corrector_single_endpoint() {
    let (url, seen) = serve(Box::new(|_, path, body| {
        assert_eq!(path, "/correct");
        let out = body["candidates"][1].clone();
        (200, json!({"output": out, "truncated": true}))
    }));
    let corrector = HttpCorrector::new(format!("{url}/")).with_retry(RetryPolicy::immediate(1));
    let resp = corrector
        .correct(&CorrectRequest {
            source: "he go".into(),
            candidates: vec!["he go".into(), "he goes".into()],
            input: None,
        })
        .unwrap();
    assert_eq!(resp.output, "he goes");
    assert_eq!(resp.truncated, Some(true));
    assert!(seen.lock().unwrap()[0].body.get("input").is_none());
}
