use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::ExperimentConfig;
use super::corrector::{request_for_pool, Corrector, HttpCorrector};
use super::manifest::Manifest;
use super::mock::{MockLlm, MockLlmSpec};
use super::report::{points, render_table, score_outputs, MetricReport};
use crate::alignment::SIM_LCS_FORM;
use crate::dataset::{build_record, emit_dataset, write_jsonl};
use crate::error::{Error, Result};
use crate::fingerprint::{json_fingerprint, sha256_hex};
use crate::generation::{
    render_prompt, CandidateCache, CandidatePool, CompletionClient, GenerationConfig, Generator,
    HttpCompletionClient, PoolInput, TaskSpec,
};
use crate::metrics::{aggregate, M2Document};
use crate::rerank::{rerank, Method, RerankResult};

const POOLS_FILE: &str = "pools.jsonl";
const CORRECTOR_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateReport {
    pub n_inputs: usize,
    pub pools_written: usize,
    /// Pools taken over from an earlier `pools.jsonl`.
    pub reused: usize,
    pub failed: usize,
    pub coverage: f64,
    pub failures: Vec<ItemFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub method: Method,
    pub n: usize,
    pub coverage: f64,
    pub failures: Vec<ItemFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub method: Method,
    pub corpus_score: f64,
    pub delta_vs_greedy: Option<f64>,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Number of leading pool candidates the oracles may use.
    pub pool_size: usize,
    pub oracle_rank: f64,
    pub oracle_combine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub metric: String,
    pub n: usize,
    pub rows: Vec<MethodScore>,
    pub curve: Vec<CurvePoint>,
}

impl OracleReport {
    pub fn score(&self, method: Method) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method).map(|r| r.corpus_score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub method: Method,
    /// One score per prompt set, in config order.
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub sample_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub metric: String,
    pub sets: Vec<String>,
    pub rows: Vec<RobustnessRow>,
    pub coverage: Vec<f64>,
}

impl RobustnessReport {
    pub fn row(&self, method: Method) -> Option<&RobustnessRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRow {
    pub model: String,
    pub scores: Vec<MethodScore>,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub metric: String,
    pub rows: Vec<SwapRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub records: usize,
    pub train: usize,
    pub validation: usize,
    pub truncated: usize,
    pub failures: Vec<ItemFailure>,
}

struct Selection {
    results: Vec<RerankResult>,
    failures: Vec<ItemFailure>,
}

impl Selection {
    fn outputs(&self) -> Vec<String> {
        self.results.iter().map(|r| r.chosen_text.clone()).collect()
    }

    fn coverage(&self) -> f64 {
        coverage(self.results.len() - self.failures.len(), self.results.len())
    }
}

struct Pools {
    pools: Vec<Option<CandidatePool>>,
    reused: usize,
    failures: Vec<ItemFailure>,
}

fn coverage(ok: usize, n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        ok as f64 / n as f64
    }
}

fn fallback(input: &PoolInput, method: Method) -> RerankResult {
    RerankResult {
        id: input.id.clone(),
        method,
        chosen_index: None,
        chosen_text: input.source.clone(),
        scores: Vec::new(),
        fallback: true,
    }
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

pub fn read_pools(path: &Path) -> Result<Vec<CandidatePool>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

pub fn read_rerank_results(path: &Path) -> Result<Vec<RerankResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the experiment commands for one config.
pub struct Harness {
    config: ExperimentConfig,
    mock: bool,
    client: Option<Arc<dyn CompletionClient>>,
    corrector: Option<Arc<dyn Corrector>>,
}

impl Harness {
    pub fn new(config: ExperimentConfig, mock: bool) -> Self {
        Harness {
            config,
            mock,
            client: None,
            corrector: None,
        }
    }

    /// Uses `client` for every generation request instead of the endpoint or
    /// the config-driven mock.
    pub fn with_client(mut self, client: Arc<dyn CompletionClient>) -> Self {
        self.client = Some(client);
        self
    }

    pub fn with_corrector(mut self, corrector: Arc<dyn Corrector>) -> Self {
        self.corrector = Some(corrector);
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.output_dir
    }

    fn out(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn ensure_output_dir(&self) -> Result<()> {
        let dir = &self.config.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
    }

    fn completion_client(&self, spec: MockLlmSpec, inputs: &[PoolInput]) -> Result<Arc<dyn CompletionClient>> {
        if let Some(client) = &self.client {
            return Ok(client.clone());
        }
        if self.mock {
            return Ok(Arc::new(MockLlm::new(spec, inputs)?));
        }
        let url = self.config.endpoints.completion_url.as_deref().ok_or_else(|| {
            Error::Config("endpoints.completion_url is required unless --mock is given".into())
        })?;
        Ok(Arc::new(HttpCompletionClient::new(url, self.config.endpoints.provider)))
    }

    fn corrector(&self) -> Option<Arc<dyn Corrector>> {
        if let Some(c) = &self.corrector {
            return Some(c.clone());
        }
        self.config.endpoints.corrector_url.as_deref().map(|url| {
            Arc::new(HttpCorrector::new(url).with_retry(self.config.retry)) as Arc<dyn Corrector>
        })
    }

    /// Configured methods that can run here; the corrector is skipped when no
    /// endpoint is configured.
    fn methods(&self) -> Vec<Method> {
        let has_corrector = self.corrector().is_some();
        self.config
            .methods
            .iter()
            .copied()
            .filter(|m| {
                if *m == Method::Corrector && !has_corrector {
                    log::warn!("skipping the corrector method: no endpoints.corrector_url");
                    false
                } else {
                    true
                }
            })
            .collect()
    }

    fn manifest(&self, command: &str) -> Result<Manifest> {
        let c = &self.config;
        let mut m = Manifest::new(command, self.mock, self.config_hash());
        m.input(&c.data.inputs)?;
        for path in [c.data.targets.as_ref(), c.data.m2_gold.as_ref()].into_iter().flatten() {
            m.input(path)?;
        }
        m.decision("granularity", c.rerank.options.granularity.as_str());
        m.decision("sim_lcs_form", SIM_LCS_FORM);
        m.decision("tokenizer", c.rerank.options.tokenizer.describe());
        m.decision("include_greedy", c.generation.include_greedy);
        m.decision("k", c.generation.k);
        m.decision("temperature", c.generation.temperature);
        m.decision("metric", c.metric.as_str());
        m.decision("m2_scorer", "lite");
        m.decision("tie_break", "lowest index");
        if self.mock {
            m.decision("mock", serde_json::to_value(c.mock)?);
        }
        Ok(m)
    }

    fn config_hash(&self) -> String {
        self.config
            .file_hash
            .clone()
            .unwrap_or_else(|| json_fingerprint(&self.config))
    }

    fn gold(&self) -> Result<Option<M2Document>> {
        self.config.gold()
    }

    fn generate_pools(
        &self,
        task: &TaskSpec,
        generation: &GenerationConfig,
        spec: MockLlmSpec,
        inputs: &[PoolInput],
        existing: Vec<CandidatePool>,
    ) -> Result<Pools> {
        let client = self.completion_client(spec, inputs)?;
        let cache = CandidateCache::open(&self.config.cache_path)?;
        let generator = Generator::new(client.as_ref())
            .with_cache(&cache)
            .with_retry(self.config.retry);

        let config_fp = generation.fingerprint();
        let mut existing: HashMap<String, CandidatePool> =
            existing.into_iter().map(|p| (p.id.clone(), p)).collect();
        let mut pools: Vec<Option<CandidatePool>> = Vec::with_capacity(inputs.len());
        let mut missing = Vec::new();
        for input in inputs {
            let prompt_fp = sha256_hex(render_prompt(task, &input.source)?);
            match existing.remove(&input.id) {
                Some(p)
                    if p.source == input.source
                        && p.config_fingerprint == config_fp
                        && p.prompt_fingerprint == prompt_fp =>
                {
                    pools.push(Some(CandidatePool { target: input.target.clone(), ..p }))
                }
                _ => {
                    missing.push(pools.len());
                    pools.push(None);
                }
            }
        }
        let reused = inputs.len() - missing.len();
        let todo: Vec<PoolInput> = missing.iter().map(|&i| inputs[i].clone()).collect();
        let results = generator.generate_batch(task, &todo, generation, self.config.concurrency);
        let mut failures = Vec::new();
        for (&i, result) in missing.iter().zip(results) {
            match result {
                Ok(pool) => pools[i] = Some(pool),
                Err(e) => {
                    log::warn!("item {}: {e}", inputs[i].id);
                    failures.push(ItemFailure {
                        id: inputs[i].id.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
        Ok(Pools {
            pools,
            reused,
            failures,
        })
    }

    fn select(&self, inputs: &[PoolInput], pools: &[Option<CandidatePool>], method: Method) -> Result<Selection> {
        if method.needs_target() {
            if let Some(input) = inputs.iter().find(|i| i.target.is_none()) {
                return Err(Error::MissingTarget(Some(input.id.clone())));
            }
        }
        let mut results: Vec<RerankResult> = Vec::with_capacity(inputs.len());
        let mut failures = Vec::new();
        let mut fail = |input: &PoolInput, error: String, results: &mut Vec<RerankResult>| {
            failures.push(ItemFailure { id: input.id.clone(), error });
            results.push(fallback(input, method));
        };

        if method == Method::Corrector {
            let corrector = self.corrector().ok_or_else(|| {
                Error::Config("the corrector method needs endpoints.corrector_url".into())
            })?;
            let build = self.config.dataset.build;
            let mut slots: Vec<std::result::Result<String, String>> =
                vec![Err("no candidate pool".into()); inputs.len()];
            let mut queued = Vec::new();
            for (i, pool) in pools.iter().enumerate() {
                if let Some(pool) = pool {
                    match request_for_pool(pool, &build) {
                        Ok(req) => queued.push((i, req)),
                        Err(e) => slots[i] = Err(e.to_string()),
                    }
                }
            }
            for chunk in queued.chunks(CORRECTOR_CHUNK) {
                let requests: Vec<_> = chunk.iter().map(|(_, r)| r.clone()).collect();
                match corrector.correct_batch(&requests) {
                    Ok(outputs) if outputs.len() == chunk.len() => {
                        for ((i, _), output) in chunk.iter().zip(outputs) {
                            slots[*i] = Ok(output);
                        }
                    }
                    Ok(outputs) => {
                        let msg = format!("corrector returned {} outputs for {} items", outputs.len(), chunk.len());
                        for (i, _) in chunk {
                            slots[*i] = Err(msg.clone());
                        }
                    }
                    Err(e) => {
                        for (i, _) in chunk {
                            slots[*i] = Err(e.to_string());
                        }
                    }
                }
            }
            for (input, slot) in inputs.iter().zip(slots) {
                match slot {
                    Ok(text) => results.push(RerankResult {
                        id: input.id.clone(),
                        method,
                        chosen_index: None,
                        chosen_text: text,
                        scores: Vec::new(),
                        fallback: false,
                    }),
                    Err(msg) => fail(input, msg, &mut results),
                }
            }
        } else {
            for (input, pool) in inputs.iter().zip(pools) {
                let Some(pool) = pool else {
                    fail(input, "no candidate pool".into(), &mut results);
                    continue;
                };
                match rerank(pool, method, &self.config.rerank.options) {
                    Ok(r) => results.push(r),
                    Err(e @ Error::MissingTarget(_)) => return Err(e),
                    Err(e) => fail(input, e.to_string(), &mut results),
                }
            }
        }
        Ok(Selection { results, failures })
    }

    fn score_selection(&self, selection: &Selection, inputs: &[PoolInput], gold: Option<&M2Document>) -> Result<MetricReport> {
        score_outputs(
            self.config.metric,
            &selection.outputs(),
            inputs,
            gold,
            selection.coverage(),
        )
    }

    fn load_pools(&self, inputs: &[PoolInput]) -> Result<Vec<Option<CandidatePool>>> {
        let path = self.out(POOLS_FILE);
        if !path.is_file() {
            return Err(Error::Config(format!(
                "{} not found; run `generate` first",
                path.display()
            )));
        }
        let mut by_id: HashMap<String, CandidatePool> =
            read_pools(&path)?.into_iter().map(|p| (p.id.clone(), p)).collect();
        Ok(inputs
            .iter()
            .map(|input| {
                by_id.remove(&input.id).map(|p| CandidatePool {
                    target: input.target.clone(),
                    ..p
                })
            })
            .collect())
    }

    /// Generates one pool per input, reusing pools already present in the
    /// output directory and any cached completions.
    pub fn generate(&self) -> Result<GenerateReport> {
        self.ensure_output_dir()?;
        let inputs = self.config.load_inputs()?;
        let path = self.out(POOLS_FILE);
        let existing = if path.is_file() { read_pools(&path)? } else { Vec::new() };
        let task = self.config.primary_task();
        let pools = self.generate_pools(&task, &self.config.generation, self.config.mock, &inputs, existing)?;

        let written: Vec<&CandidatePool> = pools.pools.iter().flatten().collect();
        write_jsonl(&path, &written)?;
        let report = GenerateReport {
            n_inputs: inputs.len(),
            pools_written: written.len(),
            reused: pools.reused,
            failed: pools.failures.len(),
            coverage: coverage(written.len(), inputs.len()),
            failures: pools.failures,
        };
        let report_path = self.out("generate.report.json");
        write_json(&report_path, &report)?;

        let mut m = self.manifest("generate")?;
        m.output(self.output_dir(), &path)?;
        m.write(self.output_dir())?;
        Ok(report)
    }

    /// Applies `method` (the configured one when `None`) to every pool and
    /// writes `rerank.<method>.jsonl`.
    pub fn rerank(&self, method: Option<Method>) -> Result<SelectionReport> {
        let method = method.unwrap_or(self.config.rerank.method);
        let inputs = self.config.load_inputs()?;
        let pools = self.load_pools(&inputs)?;
        let selection = self.select(&inputs, &pools, method)?;
        let path = self.out(&format!("rerank.{method}.jsonl"));
        write_jsonl(&path, &selection.results)?;
        let report = SelectionReport {
            method,
            n: inputs.len(),
            coverage: selection.coverage(),
            failures: selection.failures,
        };
        write_json(&self.out(&format!("rerank.{method}.report.json")), &report)?;

        let mut m = self.manifest(&format!("rerank.{method}"))?;
        m.input(&self.out(POOLS_FILE))?;
        m.output(self.output_dir(), &path)?;
        m.write(self.output_dir())?;
        Ok(report)
    }

    fn method_scores(
        &self,
        inputs: &[PoolInput],
        pools: &[Option<CandidatePool>],
        gold: Option<&M2Document>,
        methods: &[Method],
    ) -> Result<Vec<MethodScore>> {
        let mut rows = Vec::with_capacity(methods.len());
        for &method in methods {
            let selection = self.select(inputs, pools, method)?;
            let report = self.score_selection(&selection, inputs, gold)?;
            rows.push(MethodScore {
                method,
                corpus_score: report.corpus_score,
                delta_vs_greedy: None,
                coverage: report.coverage,
            });
        }
        if let Some(greedy) = rows.iter().find(|r| r.method == Method::Greedy).map(|r| r.corpus_score) {
            for row in &mut rows {
                row.delta_vs_greedy = Some(row.corpus_score - greedy);
            }
        }
        Ok(rows)
    }

    /// Headroom of ranking and combining over greedy decoding, plus the
    /// oracle scores as a function of how many candidates they may use.
    pub fn oracle(&self) -> Result<OracleReport> {
        let inputs = self.config.load_inputs()?;
        let pools = self.load_pools(&inputs)?;
        let gold = self.gold()?;
        let rows = self.method_scores(&inputs, &pools, gold.as_ref(), &self.methods())?;

        let max = pools.iter().flatten().map(|p| p.candidates.len()).max().unwrap_or(0);
        let mut curve = Vec::with_capacity(max);
        for size in 1..=max {
            let prefix: Vec<Option<CandidatePool>> = pools
                .iter()
                .map(|p| {
                    p.as_ref().map(|p| {
                        let mut p = p.clone();
                        p.candidates.truncate(size);
                        p
                    })
                })
                .collect();
            let rank = self.select(&inputs, &prefix, Method::OracleRank)?;
            let combine = if size == 1 {
                // combining needs two candidates; one candidate is its own combination
                self.select(&inputs, &prefix, Method::OracleRank)?
            } else {
                self.select(&inputs, &prefix, Method::OracleCombine)?
            };
            curve.push(CurvePoint {
                pool_size: size,
                oracle_rank: self.score_selection(&rank, &inputs, gold.as_ref())?.corpus_score,
                oracle_combine: self.score_selection(&combine, &inputs, gold.as_ref())?.corpus_score,
            });
        }

        let report = OracleReport {
            metric: self.config.metric.as_str().to_string(),
            n: inputs.len(),
            rows,
            curve,
        };
        let json_path = self.out("oracle.json");
        let text_path = self.out("oracle.txt");
        write_json(&json_path, &report)?;
        write_text(&text_path, &oracle_table(&report))?;

        let mut m = self.manifest("oracle")?;
        m.input(&self.out(POOLS_FILE))?;
        m.output(self.output_dir(), &json_path)?;
        m.output(self.output_dir(), &text_path)?;
        m.write(self.output_dir())?;
        Ok(report)
    }

    /// Turns pools into corrector training records and writes the split.
    pub fn build_dataset(&self) -> Result<DatasetReport> {
        let inputs = self.config.load_inputs()?;
        let pools = self.load_pools(&inputs)?;
        let ds = self.config.dataset;
        let mut records = Vec::with_capacity(pools.len());
        let mut failures = Vec::new();
        for (input, pool) in inputs.iter().zip(&pools) {
            let result = pool
                .as_ref()
                .ok_or_else(|| Error::Config("no candidate pool".into()))
                .and_then(|p| build_record(p, &ds.build));
            match result {
                Ok(r) => records.push(r),
                Err(e) => failures.push(ItemFailure {
                    id: input.id.clone(),
                    error: e.to_string(),
                }),
            }
        }
        let dir = self.out("dataset");
        let emitted = emit_dataset(&records, ds.split, ds.seed, &dir)?;
        let report = DatasetReport {
            records: records.len(),
            train: emitted.train,
            validation: emitted.validation,
            truncated: records.iter().filter(|r| r.meta.truncated).count(),
            failures,
        };
        write_json(&dir.join("report.json"), &report)?;

        let mut m = self.manifest("build-dataset")?;
        m.input(&self.out(POOLS_FILE))?;
        m.decision("dataset", serde_json::to_value(ds)?);
        m.output(self.output_dir(), &emitted.train_path)?;
        m.output(self.output_dir(), &emitted.validation_path)?;
        m.write(self.output_dir())?;
        Ok(report)
    }

    /// Scores a system output file: rerank JSONL (ids checked against the
    /// inputs) or plain text with one output per line. Defaults to the
    /// configured method's rerank file.
    pub fn evaluate(&self, outputs: Option<&Path>) -> Result<MetricReport> {
        let inputs = self.config.load_inputs()?;
        let path = match outputs {
            Some(p) => p.to_path_buf(),
            None => self.out(&format!("rerank.{}.jsonl", self.config.rerank.method)),
        };
        let (texts, ok) = if path.extension().is_some_and(|e| e == "jsonl") {
            let rows = read_rerank_results(&path)?;
            if rows.len() != inputs.len() {
                return Err(Error::CorpusMismatch(format!(
                    "{} outputs for {} inputs",
                    rows.len(),
                    inputs.len()
                )));
            }
            if let Some((row, input)) = rows.iter().zip(&inputs).find(|(r, i)| r.id != i.id) {
                return Err(Error::CorpusMismatch(format!(
                    "output id {:?} where input id {:?} was expected",
                    row.id, input.id
                )));
            }
            let ok = rows.iter().filter(|r| !r.fallback).count();
            (rows.into_iter().map(|r| r.chosen_text).collect::<Vec<_>>(), ok)
        } else {
            let lines = super::config::read_lines(&path)?;
            let n = lines.len();
            (lines, n)
        };
        let gold = self.gold()?;
        let report = score_outputs(
            self.config.metric,
            &texts,
            &inputs,
            gold.as_ref(),
            coverage(ok, texts.len()),
        )?;

        self.ensure_output_dir()?;
        let stem = file_safe(&path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        let json_path = self.out(&format!("evaluate.{stem}.json"));
        let text_path = self.out(&format!("evaluate.{stem}.txt"));
        write_json(&json_path, &report)?;
        write_text(&text_path, &metric_table(&report))?;

        let mut m = self.manifest(&format!("evaluate.{stem}"))?;
        m.input(&path)?;
        m.output(self.output_dir(), &json_path)?;
        m.output(self.output_dir(), &text_path)?;
        m.write(self.output_dir())?;
        Ok(report)
    }

    /// Scores every configured method once per prompt set and reports
    /// mean and spread across sets.
    pub fn robustness(&self) -> Result<RobustnessReport> {
        let sets = &self.config.prompt_sets;
        if sets.len() < 2 {
            return Err(Error::Config("robustness needs at least two prompt_sets".into()));
        }
        self.ensure_output_dir()?;
        let inputs = self.config.load_inputs()?;
        if let Some(input) = inputs.iter().find(|i| i.target.is_none()) {
            return Err(Error::MissingTarget(Some(input.id.clone())));
        }
        let gold = self.gold()?;
        let methods = self.methods();
        let dir = self.out("robustness");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

        let mut m = self.manifest("robustness")?;
        let mut per_set: Vec<Vec<MethodScore>> = Vec::with_capacity(sets.len());
        let mut coverage_row = Vec::with_capacity(sets.len());
        for set in sets {
            let task = self.config.task_for(set);
            let pools = self.generate_pools(
                &task,
                &self.config.generation,
                self.config.mock_for_set(set),
                &inputs,
                Vec::new(),
            )?;
            let pools_path = dir.join(format!("{}.pools.jsonl", file_safe(&set.name)));
            write_jsonl(&pools_path, &pools.pools.iter().flatten().collect::<Vec<_>>())?;
            m.output(self.output_dir(), &pools_path)?;
            coverage_row.push(coverage(inputs.len() - pools.failures.len(), inputs.len()));
            per_set.push(self.method_scores(&inputs, &pools.pools, gold.as_ref(), &methods)?);
        }

        let mut rows = Vec::with_capacity(methods.len());
        for (j, &method) in methods.iter().enumerate() {
            let scores: Vec<f64> = per_set.iter().map(|s| s[j].corpus_score).collect();
            let agg = aggregate(&scores)?;
            rows.push(RobustnessRow {
                method,
                scores,
                mean: agg.mean,
                std: agg.std,
                sample_std: agg.sample_std,
            });
        }
        let report = RobustnessReport {
            metric: self.config.metric.as_str().to_string(),
            sets: sets.iter().map(|s| s.name.clone()).collect(),
            rows,
            coverage: coverage_row,
        };
        let json_path = self.out("robustness.json");
        let text_path = self.out("robustness.txt");
        write_json(&json_path, &report)?;
        write_text(&text_path, &robustness_table(&report))?;
        m.decision(
            "prompt_sets",
            json!(sets
                .iter()
                .map(|s| json!({"name": s.name, "mock_quality": s.mock_quality}))
                .collect::<Vec<_>>()),
        );
        m.output(self.output_dir(), &json_path)?;
        m.output(self.output_dir(), &text_path)?;
        m.write(self.output_dir())?;
        Ok(report)
    }

    /// Regenerates candidates with each configured model and scores every
    /// method on each, with no other change between models.
    pub fn swap_llm(&self) -> Result<SwapReport> {
        let models = &self.config.models;
        if models.len() < 2 {
            return Err(Error::Config("swap-llm needs at least two models".into()));
        }
        self.ensure_output_dir()?;
        let inputs = self.config.load_inputs()?;
        let gold = self.gold()?;
        let methods = self.methods();
        let task = self.config.primary_task();
        let dir = self.out("swap");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

        let mut m = self.manifest("swap-llm")?;
        let mut rows = Vec::with_capacity(models.len());
        for model in models {
            let generation = GenerationConfig {
                model_id: model.id.clone(),
                ..self.config.generation.clone()
            };
            let pools = self.generate_pools(&task, &generation, self.config.mock_for_model(model), &inputs, Vec::new())?;
            let pools_path = dir.join(format!("{}.pools.jsonl", file_safe(&model.id)));
            write_jsonl(&pools_path, &pools.pools.iter().flatten().collect::<Vec<_>>())?;
            m.output(self.output_dir(), &pools_path)?;
            rows.push(SwapRow {
                model: model.id.clone(),
                scores: self.method_scores(&inputs, &pools.pools, gold.as_ref(), &methods)?,
                coverage: coverage(inputs.len() - pools.failures.len(), inputs.len()),
            });
        }
        let report = SwapReport {
            metric: self.config.metric.as_str().to_string(),
            rows,
        };
        let json_path = self.out("swap_llm.json");
        let text_path = self.out("swap_llm.txt");
        write_json(&json_path, &report)?;
        write_text(&text_path, &swap_table(&report))?;
        m.decision(
            "models",
            json!(models
                .iter()
                .map(|x| json!({"id": x.id, "mock_quality": x.mock_quality}))
                .collect::<Vec<_>>()),
        );
        m.output(self.output_dir(), &json_path)?;
        m.output(self.output_dir(), &text_path)?;
        m.write(self.output_dir())?;
        Ok(report)
    }
}

fn delta(d: Option<f64>) -> String {
    d.map(|d| format!("{:+.2}", d * 100.0)).unwrap_or_default()
}

pub fn metric_table(report: &MetricReport) -> String {
    let mut rows = vec![vec![report.metric.clone(), points(report.corpus_score)]];
    if let Some(obj) = report.details.as_object() {
        for (k, v) in obj {
            if let Some(x) = v.as_f64() {
                let cell = if k.ends_with("f1") || matches!(k.as_str(), "precision" | "recall" | "f_beta") {
                    points(x)
                } else {
                    format!("{x}")
                };
                rows.push(vec![k.clone(), cell]);
            }
        }
    }
    rows.push(vec!["coverage".into(), format!("{:.3}", report.coverage)]);
    render_table(&["measure".into(), "value".into()], &rows)
}

pub fn oracle_table(report: &OracleReport) -> String {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![r.method.to_string(), points(r.corpus_score), delta(r.delta_vs_greedy)])
        .collect();
    let mut out = render_table(
        &["method".into(), report.metric.clone(), "vs greedy".into()],
        &rows,
    );
    out.push('\n');
    let curve: Vec<Vec<String>> = report
        .curve
        .iter()
        .map(|p| vec![p.pool_size.to_string(), points(p.oracle_rank), points(p.oracle_combine)])
        .collect();
    out += &render_table(
        &["candidates".into(), "oracle_rank".into(), "oracle_combine".into()],
        &curve,
    );
    out
}

pub fn robustness_table(report: &RobustnessReport) -> String {
    let mut header = vec!["method".to_string()];
    header.extend(report.sets.iter().cloned());
    header.extend(["mean".into(), "std".into()]);
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.method.to_string()];
            row.extend(r.scores.iter().map(|&s| points(s)));
            row.push(points(r.mean));
            row.push(points(r.std));
            row
        })
        .collect();
    render_table(&header, &rows)
}

pub fn swap_table(report: &SwapReport) -> String {
    let methods: Vec<Method> = report
        .rows
        .first()
        .map(|r| r.scores.iter().map(|s| s.method).collect())
        .unwrap_or_default();
    let mut header = vec!["model".to_string()];
    for m in &methods {
        header.push(m.to_string());
        if *m != Method::Greedy {
            header.push(format!("Δ {m}"));
        }
    }
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.model.clone()];
            for s in &r.scores {
                row.push(points(s.corpus_score));
                if s.method != Method::Greedy {
                    row.push(delta(s.delta_vs_greedy));
                }
            }
            row
        })
        .collect();
    render_table(&header, &rows)
}
