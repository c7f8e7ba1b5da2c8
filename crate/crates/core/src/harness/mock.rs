//! Deterministic stand-in for an LLM endpoint.
//!
//! The mock knows each item's source and gold target. The greedy completion
//! starts from the source and applies each gold fix with probability
//! `quality`, so quality 1 reproduces the target and quality 0 the source.
//! A sampled completion (temperature > 0) starts from the greedy fix
//! decisions, re-draws each one with probability
//! `resample_prob * min(temperature, 1)`, and is then perturbed by
//! token-level noise whose rate scales with `(1 - quality) * min(temperature,
//! 1)`. Every random draw is seeded from `(seed, item id, sample index,
//! temperature)`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::fields_fingerprint;
use crate::generation::{ClientError, Completion, CompletionClient, CompletionRequest, PoolInput};
use crate::metrics::{apply_edits, extract_edits, Edit};
use crate::tokenize::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockLlmSpec {
    /// Probability that any single gold fix is applied.
    pub quality: f64,
    pub seed: u64,
    /// Chance, at temperature 1, that a sample re-draws a greedy fix
    /// decision.
    pub resample_prob: f64,
    /// Per-token probability of swapping with the next token, before scaling.
    pub swap_prob: f64,
    /// Per-token probability of dropping the token, before scaling.
    pub drop_prob: f64,
    /// Per-token probability of an inflection-style suffix change, before
    /// scaling.
    pub suffix_prob: f64,
}

impl Default for MockLlmSpec {
    fn default() -> Self {
        MockLlmSpec {
            quality: 0.7,
            seed: 0,
            resample_prob: 0.3,
            swap_prob: 0.1,
            drop_prob: 0.1,
            suffix_prob: 0.15,
        }
    }
}

impl MockLlmSpec {
    pub fn with_quality(mut self, quality: f64) -> Self {
        self.quality = quality;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("quality", self.quality),
            ("resample_prob", self.resample_prob),
            ("swap_prob", self.swap_prob),
            ("drop_prob", self.drop_prob),
            ("suffix_prob", self.suffix_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("mock.{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    fn rng(&self, item_id: &str, index: u32, temperature: f64) -> ChaCha8Rng {
        let seed = self.seed.to_le_bytes();
        let index = index.to_le_bytes();
        let temp = temperature.to_bits().to_le_bytes();
        let digest = fields_fingerprint([
            seed.as_slice(),
            item_id.as_bytes(),
            index.as_slice(),
            temp.as_slice(),
        ]);
        let bytes: [u8; 32] = hex::decode(digest)
            .expect("digest is hex")
            .try_into()
            .expect("sha-256 digest is 32 bytes");
        ChaCha8Rng::from_seed(bytes)
    }
}

/// Gold information for one item.
#[derive(Debug, Clone)]
pub struct MockItem {
    pub source: Vec<String>,
    pub fixes: Vec<Edit>,
}

impl MockItem {
    pub fn new(source: &str, target: &str) -> Self {
        let source = TokenSeq::from_tokens(source.split_whitespace());
        let target = TokenSeq::from_tokens(target.split_whitespace());
        let fixes = extract_edits(&source, &target);
        MockItem {
            source: source.tokens,
            fixes,
        }
    }
}

/// One completion for `item`: a pure function of the spec, item, sample index
/// and temperature.
pub fn mock_complete(spec: &MockLlmSpec, item_id: &str, item: &MockItem, temperature: f64, index: u32) -> String {
    let heat = temperature.clamp(0.0, 1.0);
    let mut greedy_rng = spec.rng(item_id, 0, 0.0);
    let greedy_draws: Vec<f64> = item.fixes.iter().map(|_| greedy_rng.gen()).collect();
    let mut rng = spec.rng(item_id, index, temperature);
    let applied: Vec<Edit> = item
        .fixes
        .iter()
        .zip(greedy_draws)
        .filter(|(_, u)| {
            let u = if heat > 0.0 && rng.gen_bool(spec.resample_prob * heat) {
                rng.gen()
            } else {
                *u
            };
            u < spec.quality
        })
        .map(|(fix, _)| fix.clone())
        .collect();
    let mut tokens = apply_edits(&item.source, &applied).expect("gold fixes do not overlap");

    let scale = (1.0 - spec.quality) * heat;
    if scale > 0.0 {
        tokens = perturb(tokens, spec, scale, &mut rng);
    }
    tokens.join(" ")
}

fn perturb(tokens: Vec<String>, spec: &MockLlmSpec, scale: f64, rng: &mut ChaCha8Rng) -> Vec<String> {
    let swap = spec.swap_prob * scale;
    let drop = spec.drop_prob * scale;
    let suffix = spec.suffix_prob * scale;
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    let mut iter = tokens.into_iter();
    while let Some(tok) = iter.next() {
        let r: f64 = rng.gen();
        if r < swap {
            match iter.next() {
                Some(next) => {
                    out.push(next);
                    out.push(tok);
                }
                None => out.push(tok),
            }
        } else if r < swap + drop {
            // dropped
        } else if r < swap + drop + suffix {
            out.push(change_suffix(&tok));
        } else {
            out.push(tok);
        }
    }
    out
}

/// Inflection-style change; short function words are left alone.
fn change_suffix(token: &str) -> String {
    if token.chars().filter(|c| c.is_alphabetic()).count() < 4 {
        return token.to_string();
    }
    if let Some(stem) = token.strip_suffix("ed") {
        format!("{stem}s")
    } else if let Some(stem) = token.strip_suffix('s') {
        stem.to_string()
    } else {
        format!("{token}s")
    }
}

/// [`CompletionClient`] backed by [`mock_complete`]. Counts calls.
pub struct MockLlm {
    spec: MockLlmSpec,
    items: HashMap<String, MockItem>,
    calls: AtomicUsize,
}

impl MockLlm {
    pub fn new(spec: MockLlmSpec, inputs: &[PoolInput]) -> Result<Self> {
        spec.validate()?;
        let mut items = HashMap::with_capacity(inputs.len());
        for input in inputs {
            let target = input
                .target
                .as_deref()
                .ok_or_else(|| Error::MissingTarget(Some(input.id.clone())))?;
            items.insert(input.id.clone(), MockItem::new(&input.source, target));
        }
        Ok(MockLlm {
            spec,
            items,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn spec(&self) -> &MockLlmSpec {
        &self.spec
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn complete_item(&self, item_id: &str, temperature: f64, index: u32) -> Result<String> {
        let item = self
            .items
            .get(item_id)
            .ok_or_else(|| Error::MockMiss(Some(item_id.to_string())))?;
        Ok(mock_complete(&self.spec, item_id, item, temperature, index))
    }
}

impl CompletionClient for MockLlm {
    fn complete(&self, request: &CompletionRequest) -> std::result::Result<Completion, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let id = request
            .item_id
            .as_deref()
            .ok_or_else(|| ClientError::fatal(Error::MockMiss(None).to_string()))?;
        let text = self
            .complete_item(id, request.temperature, request.sample_index)
            .map_err(|e| ClientError::fatal(e.to_string()))?;
        Ok(Completion { text, logprob: None })
    }

    fn cache_namespace(&self) -> String {
        let s = &self.spec;
        format!(
            "#mock(q={:?},seed={},resample={:?},swap={:?},drop={:?},suffix={:?})",
            s.quality, s.seed, s.resample_prob, s.swap_prob, s.drop_prob, s.suffix_prob
        )
    }
}
