//! Few-shot prompt construction and candidate pool generation.
//!
//! A pool holds the greedy (temperature 0) completion first, when enabled,
//! followed by `k` temperature-sampled completions in ascending sample index.
//! Duplicate completions are kept: majority-style selection depends on them.

mod cache;
mod client;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{fields_fingerprint, json_fingerprint, sha256_hex};

pub use cache::{CacheRecord, CandidateCache};
pub use client::{
    ClientError, Completion, CompletionClient, CompletionRequest, HttpCompletionClient, Provider,
    RetryPolicy, API_KEY_ENV,
};

pub const INPUT_PLACEHOLDER: &str = "{input}";
pub const OUTPUT_PLACEHOLDER: &str = "{output}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub input: String,
    pub output: String,
}

fn default_input_format() -> String {
    "Input: {input}".to_string()
}

fn default_output_format() -> String {
    "Output: {output}".to_string()
}

fn default_stop() -> Vec<String> {
    vec!["\n".to_string()]
}

/// Task description, demonstrations and the templates used to lay them out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub demonstrations: Vec<Demonstration>,
    #[serde(default = "default_input_format")]
    pub input_format: String,
    #[serde(default = "default_output_format")]
    pub output_format: String,
    /// Completion text is cut at the first of these.
    #[serde(default = "default_stop")]
    pub stop: Vec<String>,
    /// Allows an empty demonstration list.
    #[serde(default)]
    pub zero_shot: bool,
}

impl TaskSpec {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        TaskSpec {
            name: name.into(),
            description: description.into(),
            demonstrations: Vec::new(),
            input_format: default_input_format(),
            output_format: default_output_format(),
            stop: default_stop(),
            zero_shot: false,
        }
    }

    pub fn with_demonstrations(mut self, demos: Vec<Demonstration>) -> Self {
        self.demonstrations = demos;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_placeholder("input_format", &self.input_format, INPUT_PLACEHOLDER)?;
        check_placeholder("output_format", &self.output_format, OUTPUT_PLACEHOLDER)?;
        if self.demonstrations.is_empty() && !self.zero_shot {
            return Err(Error::Template(format!(
                "task {:?} has no demonstrations and zero_shot is not set",
                self.name
            )));
        }
        Ok(())
    }

    /// Cuts `raw` at the first stop sequence and strips surrounding blanks.
    pub fn clean_completion(&self, raw: &str) -> String {
        let text = raw.trim_start_matches([' ', '\t']);
        let cut = self
            .stop
            .iter()
            .filter(|s| !s.is_empty())
            .filter_map(|s| text.find(s.as_str()))
            .min()
            .unwrap_or(text.len());
        text[..cut].trim_end().to_string()
    }
}

fn check_placeholder(field: &str, template: &str, placeholder: &str) -> Result<()> {
    let count = template.matches(placeholder).count();
    if count != 1 {
        return Err(Error::Template(format!(
            "{field} must contain exactly one {placeholder}, found {count} in {template:?}"
        )));
    }
    Ok(())
}

/// Renders the few-shot prompt: description, blank line, one block per
/// demonstration, then the query with an empty output slot.
pub fn render_prompt(task: &TaskSpec, input: &str) -> Result<String> {
    task.validate()?;
    let fill_in = |v: &str| task.input_format.replacen(INPUT_PLACEHOLDER, v, 1);
    let fill_out = |v: &str| task.output_format.replacen(OUTPUT_PLACEHOLDER, v, 1);

    let mut prompt = String::new();
    prompt.push_str(task.description.trim_end());
    prompt.push_str("\n\n");
    for demo in &task.demonstrations {
        prompt.push_str(&fill_in(&demo.input));
        prompt.push('\n');
        prompt.push_str(&fill_out(&demo.output));
        prompt.push_str("\n\n");
    }
    prompt.push_str(&fill_in(input));
    prompt.push('\n');
    prompt.push_str(fill_out("").trim_end());
    Ok(prompt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub model_id: String,
    pub k: u32,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub include_greedy: bool,
    pub seed: Option<u64>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            model_id: "default".to_string(),
            k: 4,
            temperature: 0.7,
            max_new_tokens: 128,
            include_greedy: true,
            seed: None,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("generation.k must be at least 1".into()));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(Error::Config(format!(
                "generation.temperature must be positive for sampled candidates, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn pool_size(&self) -> usize {
        self.k as usize + usize::from(self.include_greedy)
    }

    pub fn fingerprint(&self) -> String {
        json_fingerprint(self)
    }

    /// `(origin, sample_index, temperature)` for every request of a pool, in
    /// pool order.
    pub fn request_plan(&self) -> Vec<(Origin, u32, f64)> {
        let mut plan = Vec::with_capacity(self.pool_size());
        if self.include_greedy {
            plan.push((Origin::Greedy, 0, 0.0));
        }
        plan.extend((1..=self.k).map(|i| (Origin::Sampled, i, self.temperature)));
        plan
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Greedy,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub origin: Origin,
    pub sample_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprob: Option<f64>,
    /// Set when the endpoint returned nothing usable.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty: bool,
}

impl Candidate {
    pub fn new(text: impl Into<String>, origin: Origin, sample_index: u32) -> Self {
        let text = text.into();
        Candidate {
            empty: text.is_empty(),
            text,
            origin,
            sample_index,
            logprob: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub id: String,
    pub source: String,
    #[serde(default)]
    pub target: Option<String>,
    pub candidates: Vec<Candidate>,
    #[serde(default)]
    pub prompt_fingerprint: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub config_fingerprint: String,
}

impl CandidatePool {
    /// Pool with the given texts, the first one marked greedy. Intended for
    /// tests and ad-hoc use.
    pub fn from_texts<S: AsRef<str>>(source: &str, texts: &[S], target: Option<&str>) -> Self {
        let candidates = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let origin = if i == 0 { Origin::Greedy } else { Origin::Sampled };
                Candidate::new(t.as_ref(), origin, i as u32)
            })
            .collect();
        CandidatePool {
            id: String::new(),
            source: source.to_string(),
            target: target.map(str::to_string),
            candidates,
            prompt_fingerprint: String::new(),
            config_fingerprint: String::new(),
        }
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|c| c.text.as_str())
    }

    pub fn greedy(&self) -> Option<&Candidate> {
        self.candidates.first().filter(|c| c.origin == Origin::Greedy)
    }
}

/// Content hash identifying one completion request.
pub fn cache_key(
    model: &str,
    prompt: &str,
    temperature: f64,
    k: u32,
    max_new_tokens: u32,
    sample_index: u32,
) -> String {
    let temperature = format!("{temperature:?}");
    let k = k.to_string();
    let max_new_tokens = max_new_tokens.to_string();
    let sample_index = sample_index.to_string();
    fields_fingerprint([
        model.as_bytes(),
        prompt.as_bytes(),
        temperature.as_bytes(),
        k.as_bytes(),
        max_new_tokens.as_bytes(),
        sample_index.as_bytes(),
    ])
}

/// Input item for generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolInput {
    pub id: String,
    pub source: String,
    #[serde(default)]
    pub target: Option<String>,
}

/// Drives a [`CompletionClient`] to build candidate pools, consulting an
/// optional cache before every request.
pub struct Generator<'a, C: CompletionClient + ?Sized> {
    client: &'a C,
    cache: Option<&'a CandidateCache>,
    retry: RetryPolicy,
}

impl<'a, C: CompletionClient + ?Sized> Generator<'a, C> {
    pub fn new(client: &'a C) -> Self {
        Generator {
            client,
            cache: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_cache(mut self, cache: &'a CandidateCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn generate_pool(
        &self,
        task: &TaskSpec,
        item: &PoolInput,
        config: &GenerationConfig,
    ) -> Result<CandidatePool> {
        config.validate()?;
        let prompt = render_prompt(task, &item.source)?;
        let prompt_hash = sha256_hex(&prompt);
        let namespace = format!("{}{}", config.model_id, self.client.cache_namespace());

        let mut candidates = Vec::with_capacity(config.pool_size());
        for (origin, sample_index, temperature) in config.request_plan() {
            let key = cache_key(
                &namespace,
                &prompt,
                temperature,
                config.k,
                config.max_new_tokens,
                sample_index,
            );
            let (raw, logprob) = match self.cache.and_then(|c| c.get(&key)) {
                Some(hit) => (hit.text, hit.logprob),
                None => {
                    let request = CompletionRequest {
                        model: config.model_id.clone(),
                        prompt: prompt.clone(),
                        temperature,
                        max_new_tokens: config.max_new_tokens,
                        stop: task.stop.clone(),
                        seed: config.seed.map(|s| s.wrapping_add(u64::from(sample_index))),
                        sample_index,
                        item_id: Some(item.id.clone()),
                    };
                    let completion = self
                        .retry
                        .run(|| self.client.complete(&request))
                        .map_err(|attempts| Error::Generation { attempts })?;
                    if let Some(cache) = self.cache {
                        cache.insert(CacheRecord {
                            key,
                            model: namespace.clone(),
                            prompt_hash: prompt_hash.clone(),
                            origin,
                            text: completion.text.clone(),
                            logprob: completion.logprob,
                            timestamp: 0,
                        })?;
                    }
                    (completion.text, completion.logprob)
                }
            };
            let mut candidate = Candidate::new(task.clean_completion(&raw), origin, sample_index);
            candidate.logprob = logprob;
            if candidate.empty {
                log::warn!("item {}: empty completion for sample {sample_index}", item.id);
            }
            candidates.push(candidate);
        }

        Ok(CandidatePool {
            id: item.id.clone(),
            source: item.source.clone(),
            target: item.target.clone(),
            candidates,
            prompt_fingerprint: prompt_hash,
            config_fingerprint: config.fingerprint(),
        })
    }

    /// Generates pools for all `items` with at most `concurrency` requests in
    /// flight. Results come back in input order; a failed item does not stop
    /// the others.
    pub fn generate_batch(
        &self,
        task: &TaskSpec,
        items: &[PoolInput],
        config: &GenerationConfig,
        concurrency: usize,
    ) -> Vec<Result<CandidatePool>> {
        let workers = concurrency.max(1).min(items.len().max(1));
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<CandidatePool>>>> =
            Mutex::new((0..items.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(item) = items.get(i) else { break };
                    let result = self.generate_pool(task, item, config);
                    slots.lock().expect("result slots")[i] = Some(result);
                });
            }
        });
        slots
            .into_inner()
            .expect("result slots")
            .into_iter()
            .map(|r| r.expect("every item processed"))
            .collect()
    }
}
