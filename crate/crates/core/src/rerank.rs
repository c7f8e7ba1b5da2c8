//! Choosing (or assembling) one output from a candidate pool.
//!
//! Every method is deterministic: score ties go to the lowest candidate
//! index, which is the greedy candidate when the pool has one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alignment::{align, levenshtein, segment_pool, sim_lcs, Granularity, Segment};
use crate::error::{Error, Result};
use crate::generation::CandidatePool;
use crate::tokenize::{TokenSeq, TokenizerKind};

/// Relative tolerance under which two summed similarities count as tied.
const TIE_EPS: f64 = 1e-9;

pub trait Similarity: Sync {
    fn similarity(&self, a: &TokenSeq, b: &TokenSeq) -> f64;

    fn name(&self) -> &str {
        "custom"
    }
}

/// Longest-common-subsequence similarity, `2·LCS/(|a|+|b|)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimLcs;

impl Similarity for SimLcs {
    fn similarity(&self, a: &TokenSeq, b: &TokenSeq) -> f64 {
        sim_lcs(a, b)
    }

    fn name(&self) -> &str {
        "sim_lcs"
    }
}

impl<F> Similarity for F
where
    F: Fn(&TokenSeq, &TokenSeq) -> f64 + Sync,
{
    fn similarity(&self, a: &TokenSeq, b: &TokenSeq) -> f64 {
        self(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Greedy,
    Mbrd,
    OracleRank,
    OracleCombine,
    /// Output produced by an external corrector endpoint.
    Corrector,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Mbrd => "mbrd",
            Method::OracleRank => "oracle_rank",
            Method::OracleCombine => "oracle_combine",
            Method::Corrector => "corrector",
        }
    }

    pub fn needs_target(self) -> bool {
        matches!(self, Method::OracleRank | Method::OracleCombine)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "greedy" => Method::Greedy,
            "mbrd" => Method::Mbrd,
            "oracle_rank" | "oracle-rank" => Method::OracleRank,
            "oracle_combine" | "oracle-combine" => Method::OracleCombine,
            "corrector" => Method::Corrector,
            other => return Err(Error::Config(format!("unknown method {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RerankOptions {
    /// Unit for oracle distances.
    pub granularity: Granularity,
    pub tokenizer: TokenizerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResult {
    #[serde(default)]
    pub id: String,
    pub method: Method,
    pub chosen_index: Option<usize>,
    pub chosen_text: String,
    pub scores: Vec<f64>,
    /// Set when the harness had no usable output and fell back to the source.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

fn tokenize_all(pool: &CandidatePool, opts: &RerankOptions) -> Vec<TokenSeq> {
    let tok = opts.tokenizer.tokenizer();
    pool.texts().map(|t| tok.tokenize(t)).collect()
}

fn require_target<'a>(target: Option<&'a str>, pool: &CandidatePool) -> Result<&'a str> {
    target.ok_or_else(|| {
        Error::MissingTarget((!pool.id.is_empty()).then(|| pool.id.clone()))
    })
}

fn distance(a: &[String], b: &[String], granularity: Granularity) -> usize {
    match granularity {
        Granularity::Token => levenshtein(a, b),
        Granularity::Character => {
            let a: Vec<char> = a.join(" ").chars().collect();
            let b: Vec<char> = b.join(" ").chars().collect();
            levenshtein(&a, &b)
        }
    }
}

fn selection(pool: &CandidatePool, method: Method, index: usize, scores: Vec<f64>) -> RerankResult {
    RerankResult {
        id: pool.id.clone(),
        method,
        chosen_index: Some(index),
        chosen_text: pool.candidates[index].text.clone(),
        scores,
        fallback: false,
    }
}

/// The greedy candidate (index 0).
pub fn greedy_select(pool: &CandidatePool) -> Result<RerankResult> {
    if pool.candidates.is_empty() {
        return Err(Error::PoolTooSmall { required: 1, actual: 0 });
    }
    let scores = (0..pool.candidates.len())
        .map(|i| if i == 0 { 1.0 } else { 0.0 })
        .collect();
    Ok(selection(pool, Method::Greedy, 0, scores))
}

/// Minimum Bayes risk selection: the candidate with the largest summed
/// similarity to every pool member, itself included.
pub fn mbrd_select(
    pool: &CandidatePool,
    sim: &dyn Similarity,
    opts: &RerankOptions,
) -> Result<RerankResult> {
    if pool.candidates.is_empty() {
        return Err(Error::PoolTooSmall { required: 1, actual: 0 });
    }
    let seqs = tokenize_all(pool, opts);
    let scores: Vec<f64> = seqs
        .iter()
        .map(|c| seqs.iter().map(|other| sim.similarity(c, other)).sum())
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        let incumbent = scores[best];
        if s - incumbent > TIE_EPS * incumbent.abs().max(1.0) {
            best = i;
        }
    }
    Ok(selection(pool, Method::Mbrd, best, scores))
}

/// The candidate closest to `target` in edit distance. Scores are the
/// distances.
pub fn oracle_rank(
    pool: &CandidatePool,
    target: Option<&str>,
    opts: &RerankOptions,
) -> Result<RerankResult> {
    let target = require_target(target, pool)?;
    if pool.candidates.is_empty() {
        return Err(Error::PoolTooSmall { required: 1, actual: 0 });
    }
    let target = opts.tokenizer.tokenizer().tokenize(target);
    let dists: Vec<usize> = tokenize_all(pool, opts)
        .iter()
        .map(|c| distance(&c.tokens, &target.tokens, opts.granularity))
        .collect();
    let best = dists
        .iter()
        .enumerate()
        .min_by_key(|&(i, &d)| (d, i))
        .map(|(i, _)| i)
        .expect("non-empty pool");
    let scores = dists.into_iter().map(|d| d as f64).collect();
    Ok(selection(pool, Method::OracleRank, best, scores))
}

/// Splices together, span by span, the candidate variant closest to the
/// matching part of `target`.
///
/// Candidates are segmented against candidate 0; each segment's pivot span is
/// mapped to target coordinates through the pivot-to-target alignment. Shared
/// segments are copied and each variant segment takes the variant nearest to
/// its target span. Scores are each candidate's whole-text distance to the
/// target.
pub fn oracle_combine(
    pool: &CandidatePool,
    target: Option<&str>,
    opts: &RerankOptions,
) -> Result<RerankResult> {
    let target_text = require_target(target, pool)?;
    let seqs = tokenize_all(pool, opts);
    let segmented = segment_pool(&seqs)?;
    let tokenizer = opts.tokenizer.tokenizer();
    let target = tokenizer.tokenize(target_text);
    let target_spans = segmented.project(&align(&seqs[0], &target), &target.tokens);

    let mut combined: Vec<String> = Vec::new();
    for (segment, target_span) in segmented.segments.iter().zip(&target_spans) {
        match segment {
            Segment::Shared { tokens, .. } => combined.extend(tokens.iter().cloned()),
            Segment::Variant { spans, .. } => {
                let best = spans
                    .iter()
                    .enumerate()
                    .min_by_key(|&(i, span)| (distance(span, target_span, opts.granularity), i))
                    .map(|(_, span)| span)
                    .expect("variant has one span per candidate");
                combined.extend(best.iter().cloned());
            }
        }
    }

    let scores = seqs
        .iter()
        .map(|c| distance(&c.tokens, &target.tokens, opts.granularity) as f64)
        .collect();
    Ok(RerankResult {
        id: pool.id.clone(),
        method: Method::OracleCombine,
        chosen_index: None,
        chosen_text: tokenizer.detokenize(&combined),
        scores,
        fallback: false,
    })
}

/// Dispatches to the named method. MBRD uses Sim-LCS.
pub fn rerank(pool: &CandidatePool, method: Method, opts: &RerankOptions) -> Result<RerankResult> {
    let target = pool.target.as_deref();
    match method {
        Method::Greedy => greedy_select(pool),
        Method::Mbrd => mbrd_select(pool, &SimLcs, opts),
        Method::OracleRank => oracle_rank(pool, target, opts),
        Method::OracleCombine => oracle_combine(pool, target, opts),
        Method::Corrector => Err(Error::Config(
            "the corrector method needs an endpoint; use the harness".into(),
        )),
    }
}
