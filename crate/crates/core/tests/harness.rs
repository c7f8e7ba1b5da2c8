mod common;

use std::path::Path;
use std::sync::Arc;

use candrefine::generation::Origin;
use candrefine::harness::synthetic::{self, DEFAULT_SEED, DEFAULT_SIZE};
use candrefine::harness::{read_pools, read_rerank_results, ExperimentConfig, Harness, MockLlm};
use candrefine::rerank::Method;
use candrefine::Error;
use tempfile::TempDir;

const N: usize = 40;

fn bench() -> (TempDir, ExperimentConfig) {
    let dir = tempfile::tempdir().unwrap();
    synthetic::write_benchmark(dir.path(), N, 7).unwrap();
    let config = ExperimentConfig::load(dir.path().join("config.json")).unwrap();
    (dir, config)
}

fn counting_mock(config: &ExperimentConfig) -> Arc<MockLlm> {
    let inputs = config.load_inputs().unwrap();
    Arc::new(MockLlm::new(config.mock, &inputs).unwrap())
}

#[test]
fn shipped_benchmark_matches_generator() {
    let dir = tempfile::tempdir().unwrap();
    synthetic::write_benchmark(dir.path(), DEFAULT_SIZE, DEFAULT_SEED).unwrap();
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_gec");
    for name in ["source.txt", "target.txt", "gold.m2", "config.json"] {
        let want = std::fs::read(dir.path().join(name)).unwrap();
        let have = std::fs::read(shipped.join(name)).unwrap();
        assert!(want == have, "{name} differs from `candrefine synth-bench` output");
    }
}

#[test]
fn generate_writes_full_pools_with_greedy_first() {
    let (_dir, config) = bench();
    let h = Harness::new(config, true);
    let report = h.generate().unwrap();
    assert_eq!((report.n_inputs, report.pools_written, report.failed), (N, N, 0));
    assert_eq!(report.coverage, 1.0);

    let pools = read_pools(&h.output_dir().join("pools.jsonl")).unwrap();
    assert_eq!(pools.len(), N);
    for p in &pools {
        assert_eq!(p.candidates.len(), 11);
        assert_eq!(p.candidates[0].origin, Origin::Greedy);
        assert_eq!(p.candidates[0].sample_index, 0);
        assert!(p.candidates[1..].iter().all(|c| c.origin == Origin::Sampled));
        assert!(!p.config_fingerprint.is_empty() && !p.prompt_fingerprint.is_empty());
    }

    h.rerank(Some(Method::Greedy)).unwrap();
    let chosen = read_rerank_results(&h.output_dir().join("rerank.greedy.jsonl")).unwrap();
    for (r, p) in chosen.iter().zip(&pools) {
        assert_eq!(r.id, p.id);
        assert_eq!(r.chosen_text, p.candidates[0].text);
    }
    assert!(h.output_dir().join("manifest.generate.json").is_file());
    assert!(h.output_dir().join("manifest.rerank.greedy.json").is_file());
}

#[test]
fn generate_resumes_from_pools_and_cache() {
    let (_dir, config) = bench();

    let first = counting_mock(&config);
    let r = Harness::new(config.clone(), true).with_client(first.clone()).generate().unwrap();
    assert_eq!(first.calls(), N * 11);
    assert_eq!(r.reused, 0);

    let second = counting_mock(&config);
    let h = Harness::new(config.clone(), true).with_client(second.clone());
    let r = h.generate().unwrap();
    assert_eq!(second.calls(), 0);
    assert_eq!(r.reused, N);

    // Without pools.jsonl every completion still comes from the cache.
    std::fs::remove_file(h.output_dir().join("pools.jsonl")).unwrap();
    let third = counting_mock(&config);
    let r = Harness::new(config.clone(), true).with_client(third.clone()).generate().unwrap();
    assert_eq!(third.calls(), 0);
    assert_eq!((r.reused, r.pools_written), (0, N));

    // A config change invalidates both.
    let mut changed = config;
    changed.generation.temperature = 0.9;
    let fourth = counting_mock(&changed);
    let r = Harness::new(changed, true).with_client(fourth.clone()).generate().unwrap();
    assert_eq!(r.reused, 0);
    assert_eq!(fourth.calls(), N * 10);
}

#[test]
fn evaluate_rejects_misaligned_outputs() {
    let (dir, config) = bench();
    let h = Harness::new(config, true);
    h.generate().unwrap();
    h.rerank(Some(Method::Mbrd)).unwrap();
    let good = h.output_dir().join("rerank.mbrd.jsonl");
    let report = h.evaluate(Some(&good)).unwrap();
    assert!(report.corpus_score > 0.0 && report.corpus_score <= 1.0);
    assert_eq!(report.coverage, 1.0);

    let text = std::fs::read_to_string(&good).unwrap();
    let lines: Vec<&str> = text.lines().collect();

    let short = dir.path().join("short.jsonl");
    std::fs::write(&short, lines[..N - 1].join("\n")).unwrap();
    assert!(matches!(h.evaluate(Some(&short)), Err(Error::CorpusMismatch(_))));

    let mut swapped = lines.clone();
    swapped.swap(0, 1);
    let reordered = dir.path().join("reordered.jsonl");
    std::fs::write(&reordered, swapped.join("\n")).unwrap();
    assert!(matches!(h.evaluate(Some(&reordered)), Err(Error::CorpusMismatch(_))));

    let plain = dir.path().join("short.txt");
    std::fs::write(&plain, "one line\n").unwrap();
    assert!(matches!(h.evaluate(Some(&plain)), Err(Error::CorpusMismatch(_))));
}

#[test]
fn evaluate_targets_score_perfectly() {
    let (dir, config) = bench();
    let h = Harness::new(config, true);
    let report = h.evaluate(Some(&dir.path().join("target.txt"))).unwrap();
    assert_eq!(report.corpus_score, 1.0);
    let report = h.evaluate(Some(&dir.path().join("source.txt"))).unwrap();
    assert_eq!(report.corpus_score, 0.0);
}

#[test]
fn oracle_methods_need_targets() {
    let (dir, config) = bench();
    Harness::new(config.clone(), true).generate().unwrap();
    let mut untargeted = config;
    untargeted.data.targets = None;
    untargeted.data.m2_gold = None;
    untargeted.metric = candrefine::harness::MetricKind::Rouge;
    let h = Harness::new(untargeted, true);
    assert!(h.rerank(Some(Method::Mbrd)).is_ok());
    assert!(matches!(h.rerank(Some(Method::OracleRank)), Err(Error::MissingTarget(_))));
    assert!(matches!(h.rerank(Some(Method::OracleCombine)), Err(Error::MissingTarget(_))));
    drop(dir);
}

#[test]
fn oracle_report_has_rows_and_curve() {
    let (_dir, config) = bench();
    let h = Harness::new(config, true);
    h.generate().unwrap();
    let report = h.oracle().unwrap();
    assert_eq!(report.n, N);
    let greedy = report.score(Method::Greedy).unwrap();
    let rank = report.score(Method::OracleRank).unwrap();
    let combine = report.score(Method::OracleCombine).unwrap();
    assert!(greedy <= rank && rank <= combine, "{greedy} {rank} {combine}");
    assert_eq!(report.curve.len(), 11);
    assert_eq!(report.curve[0].oracle_rank, greedy);
    assert_eq!(report.curve[10].oracle_rank, rank);
    for w in report.curve.windows(2) {
        assert!(w[1].oracle_rank >= w[0].oracle_rank - 1e-12);
    }
    assert!(h.output_dir().join("oracle.txt").is_file());
}

#[test]
fn identical_prompt_sets_have_zero_spread() {
    let (_dir, mut config) = bench();
    let first = config.prompt_sets[0].clone();
    for set in &mut config.prompt_sets {
        set.demonstrations = first.demonstrations.clone();
        set.mock_quality = first.mock_quality;
    }
    let report = Harness::new(config, true).robustness().unwrap();
    for row in &report.rows {
        assert_eq!(row.std, 0.0, "{:?}", row.method);
        assert!(row.scores.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn greedy_score_falls_with_prompt_quality() {
    let (_dir, config) = bench();
    let qualities: Vec<f64> = config.prompt_sets.iter().map(|s| s.mock_quality.unwrap()).collect();
    assert!(qualities.windows(2).all(|w| w[0] > w[1]));
    let report = Harness::new(config, true).robustness().unwrap();
    let greedy = report.row(Method::Greedy).unwrap();
    assert!(greedy.scores.windows(2).all(|w| w[0] > w[1]), "{:?}", greedy.scores);
    assert!(greedy.std > 0.0);
    assert!(greedy.sample_std > greedy.std);
}

#[test]
fn weaker_model_gains_more_from_reranking() {
    let (_dir, config) = bench();
    let report = Harness::new(config, true).swap_llm().unwrap();
    assert_eq!(report.rows.len(), 2);
    let gain = |model: &str| {
        let row = report.rows.iter().find(|r| r.model == model).unwrap();
        row.scores
            .iter()
            .find(|s| s.method == Method::OracleRank)
            .unwrap()
            .delta_vs_greedy
            .unwrap()
    };
    assert!(gain("mock-weak") > gain("mock-strong"));
}

#[test]
fn dataset_records_follow_the_schema() {
    let (_dir, config) = bench();
    let h = Harness::new(config, true);
    h.generate().unwrap();
    let report = h.build_dataset().unwrap();
    assert_eq!(report.records, N);
    assert_eq!(report.train + report.validation, N);
    let text = std::fs::read_to_string(h.output_dir().join("dataset/train.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let input = first["input"].as_str().unwrap();
    assert!(input.starts_with("source: "));
    assert!(input.contains(" candidate0: ") && input.contains(" candidate10: "));
    assert!(first["target"].is_string());
    assert_eq!(first["meta"]["variant"], "multi");
    assert_eq!(first["meta"]["truncated"], false);
}

#[test]
fn robustness_needs_two_sets() {
    let (_dir, mut config) = bench();
    config.prompt_sets.truncate(1);
    assert!(matches!(Harness::new(config, true).robustness(), Err(Error::Config(_))));
}

#[test]
fn live_mode_without_endpoint_is_a_config_error() {
    let (_dir, config) = bench();
    assert!(matches!(Harness::new(config, false).generate(), Err(Error::Config(_))));
}
