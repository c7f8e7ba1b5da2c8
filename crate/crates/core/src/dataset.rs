//! Corrector training records: the source and the LLM candidates concatenated
//! into one input string, paired with the gold target.
//!
//! The input template is `source: <x> candidate0: <c0> candidate1: <c1> ...`
//! with candidates in pool order (greedy first). Dropping the source removes
//! the `source:` block entirely. Lengths are counted in whitespace tokens, and
//! only inputs are ever truncated.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generation::CandidatePool;

pub const SOURCE_MARKER: &str = "source:";

pub fn candidate_marker(index: usize) -> String {
    format!("candidate{index}:")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Greedy candidate only.
    Single,
    #[default]
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    pub variant: Variant,
    pub include_source: bool,
    /// Whole-input budget in whitespace tokens, markers included.
    pub max_len: usize,
    /// Share of the content budget the source keeps when everything does
    /// not fit.
    pub source_share: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            variant: Variant::Multi,
            include_source: true,
            max_len: 2048,
            source_share: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub variant: Variant,
    pub include_source: bool,
    pub truncated: bool,
    pub pool_id: String,
}

/// One line of a corrector dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectorRecord {
    #[serde(rename = "input")]
    pub input_text: String,
    #[serde(rename = "target")]
    pub target_text: String,
    pub meta: RecordMeta,
}

/// The pieces a record input is assembled from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputParts {
    pub source: Option<String>,
    pub candidates: Vec<String>,
}

impl InputParts {
    /// Number of marker tokens the template adds.
    pub fn overhead(&self) -> usize {
        usize::from(self.source.is_some()) + self.candidates.len()
    }

    pub fn render(&self) -> String {
        let mut blocks = Vec::with_capacity(self.overhead());
        if let Some(source) = &self.source {
            blocks.push(marked(SOURCE_MARKER, source));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            blocks.push(marked(&candidate_marker(i), c));
        }
        blocks.join(" ")
    }

    /// Inverse of [`render`](Self::render) for texts that do not themselves
    /// contain ` candidateN:` markers.
    pub fn parse(input: &str) -> InputParts {
        let mut rest = input;
        let source_text;
        let mut next = 0;
        let first = candidate_marker(0);
        if let Some(after) = rest.strip_prefix(SOURCE_MARKER) {
            let end = find_marker(after, &first).unwrap_or(after.len());
            source_text = Some(unmark(&after[..end]).to_string());
            rest = &after[end..];
        } else {
            source_text = None;
        }
        let mut candidates = Vec::new();
        loop {
            let marker = candidate_marker(next);
            let trimmed = rest.strip_prefix(' ').unwrap_or(rest);
            let Some(after) = trimmed.strip_prefix(marker.as_str()) else { break };
            let following = candidate_marker(next + 1);
            let end = find_marker(after, &following).unwrap_or(after.len());
            candidates.push(unmark(&after[..end]).to_string());
            rest = &after[end..];
            next += 1;
        }
        InputParts {
            source: source_text,
            candidates,
        }
    }
}

fn marked(marker: &str, text: &str) -> String {
    if text.is_empty() {
        marker.to_string()
    } else {
        format!("{marker} {text}")
    }
}

fn unmark(block: &str) -> &str {
    block.strip_prefix(' ').unwrap_or(block)
}

/// Offset of ` <marker>` in `text`, where the marker ends the text or is
/// followed by a space.
fn find_marker(text: &str, marker: &str) -> Option<usize> {
    let needle = format!(" {marker}");
    let mut from = 0;
    while let Some(pos) = text[from..].find(&needle) {
        let at = from + pos;
        let tail = &text[at + needle.len()..];
        if tail.is_empty() || tail.starts_with(' ') {
            return Some(at);
        }
        from = at + 1;
    }
    None
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn keep_words(text: &str, n: usize) -> String {
    text.split_whitespace().take(n).collect::<Vec<_>>().join(" ")
}

/// Fits the parts into `max_len` content tokens.
///
/// The source gives way first but keeps at least `source_share · max_len`
/// tokens; candidates then shrink proportionally from their tails. Returns
/// the new parts and whether anything was cut.
pub fn truncate(parts: &InputParts, max_len: usize, source_share: f64) -> Result<(InputParts, bool)> {
    let src_len = parts.source.as_deref().map_or(0, word_count);
    let cand_lens: Vec<usize> = parts.candidates.iter().map(|c| word_count(c)).collect();
    let cand_total: usize = cand_lens.iter().sum();
    if src_len + cand_total <= max_len {
        return Ok((parts.clone(), false));
    }
    if max_len == 0 {
        return Err(Error::BudgetTooSmall { max_len, overhead: 0 });
    }

    let floor = (source_share.clamp(0.0, 1.0) * max_len as f64).floor() as usize;
    let src_new = src_len.min(floor.max(max_len.saturating_sub(cand_total)));
    let remaining = max_len - src_new;

    let mut new_lens = cand_lens.clone();
    if cand_total > remaining {
        for (n, &len) in new_lens.iter_mut().zip(&cand_lens) {
            *n = len * remaining / cand_total;
        }
        let mut leftover = remaining - new_lens.iter().sum::<usize>();
        for (n, &len) in new_lens.iter_mut().zip(&cand_lens) {
            if leftover == 0 {
                break;
            }
            if *n < len {
                *n += 1;
                leftover -= 1;
            }
        }
    }

    let source = parts.source.as_ref().map(|s| {
        if src_new < src_len {
            keep_words(s, src_new)
        } else {
            s.clone()
        }
    });
    let candidates = parts
        .candidates
        .iter()
        .zip(new_lens.iter().zip(&cand_lens))
        .map(|(c, (&n, &len))| if n < len { keep_words(c, n) } else { c.clone() })
        .collect();
    Ok((InputParts { source, candidates }, true))
}

pub fn build_record(pool: &CandidatePool, opts: &BuildOptions) -> Result<CorrectorRecord> {
    let target = pool
        .target
        .clone()
        .ok_or_else(|| Error::MissingTarget(Some(pool.id.clone())))?;
    let (parts, truncated) = build_input(pool, opts)?;
    Ok(CorrectorRecord {
        input_text: parts.render(),
        target_text: target,
        meta: RecordMeta {
            variant: opts.variant,
            include_source: opts.include_source,
            truncated,
            pool_id: pool.id.clone(),
        },
    })
}

/// The truncated input parts for `pool`; needs no target, so it also serves
/// inference requests.
pub fn build_input(pool: &CandidatePool, opts: &BuildOptions) -> Result<(InputParts, bool)> {
    let candidates: Vec<String> = match opts.variant {
        Variant::Single => vec![pool.greedy().ok_or(Error::MissingGreedy)?.text.clone()],
        Variant::Multi => pool.texts().map(str::to_string).collect(),
    };
    let parts = InputParts {
        source: opts.include_source.then(|| pool.source.clone()),
        candidates,
    };
    let overhead = parts.overhead();
    if opts.max_len <= overhead {
        return Err(Error::BudgetTooSmall {
            max_len: opts.max_len,
            overhead,
        });
    }
    truncate(&parts, opts.max_len - overhead, opts.source_share)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.9,
            validation: 0.1,
        }
    }
}

/// Seeded shuffle followed by a train/validation cut.
pub fn split_records(
    records: &[CorrectorRecord],
    ratios: SplitRatios,
    seed: u64,
) -> Result<(Vec<CorrectorRecord>, Vec<CorrectorRecord>)> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ratios.train < 0.0 || ratios.validation < 0.0 || (ratios.train + ratios.validation - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSplit(format!(
            "train {} + validation {} must be non-negative and sum to 1",
            ratios.train, ratios.validation
        )));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratios.train * records.len() as f64).round() as usize).min(records.len());
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmittedDataset {
    pub train_path: PathBuf,
    pub validation_path: PathBuf,
    pub train: usize,
    pub validation: usize,
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `train.jsonl` and `validation.jsonl` under `out_dir`.
pub fn emit_dataset(
    records: &[CorrectorRecord],
    ratios: SplitRatios,
    seed: u64,
    out_dir: &Path,
) -> Result<EmittedDataset> {
    let (train, validation) = split_records(records, ratios, seed)?;
    let train_path = out_dir.join("train.jsonl");
    let validation_path = out_dir.join("validation.jsonl");
    write_jsonl(&train_path, &train)?;
    write_jsonl(&validation_path, &validation)?;
    Ok(EmittedDataset {
        train_path,
        validation_path,
        train: train.len(),
        validation: validation.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool() -> CandidatePool {
        let mut p = CandidatePool::from_texts("a", &["b", "c"], Some("c"));
        p.id = "p0".into();
        p
    }

    fn words(n: usize, tag: &str) -> String {
        (0..n).map(|i| format!("{tag}{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn multi_record_template() {
        let r = build_record(&pool(), &BuildOptions::default()).unwrap();
        assert_eq!(r.input_text, "source: a candidate0: b candidate1: c");
        assert_eq!(r.target_text, "c");
        assert!(!r.meta.truncated);
        let line = serde_json::to_value(&r).unwrap();
        assert_eq!(line["input"], "source: a candidate0: b candidate1: c");
        assert_eq!(line["meta"]["pool_id"], "p0");
        assert_eq!(line["meta"]["variant"], "multi");
    }

    #[test]
    fn single_and_no_source() {
        let single = BuildOptions { variant: Variant::Single, ..Default::default() };
        assert_eq!(build_record(&pool(), &single).unwrap().input_text, "source: a candidate0: b");
        let no_src = BuildOptions { include_source: false, ..Default::default() };
        assert_eq!(build_record(&pool(), &no_src).unwrap().input_text, "candidate0: b candidate1: c");
    }

    #[test]
    fn errors() {
        let mut p = pool();
        p.target = None;
        assert!(matches!(build_record(&p, &BuildOptions::default()), Err(Error::MissingTarget(_))));

        let mut p = pool();
        p.candidates[0].origin = crate::generation::Origin::Sampled;
        let single = BuildOptions { variant: Variant::Single, ..Default::default() };
        assert!(matches!(build_record(&p, &single), Err(Error::MissingGreedy)));

        let tiny = BuildOptions { max_len: 3, ..Default::default() };
        assert!(matches!(build_record(&pool(), &tiny), Err(Error::BudgetTooSmall { overhead: 3, .. })));
    }

    #[test]
    fn truncate_within_budget_is_identity() {
        let parts = InputParts { source: Some("a b".into()), candidates: vec!["c".into()] };
        assert_eq!(truncate(&parts, 3, 0.5).unwrap(), (parts.clone(), false));
    }

    #[test]
    fn truncate_lone_source_to_budget() {
        let parts = InputParts { source: Some(words(3000, "s")), candidates: vec![] };
        let (out, cut) = truncate(&parts, 2048, 0.5).unwrap();
        assert!(cut);
        assert_eq!(word_count(out.source.as_deref().unwrap()), 2048);
        assert_eq!(out.source.unwrap(), words(2048, "s"));
    }

    #[test]
    fn truncate_source_and_candidates() {
        // 1500 + 5x300 into 2048: source keeps 1024, candidates share 1024
        let parts = InputParts {
            source: Some(words(1500, "s")),
            candidates: (0..5).map(|i| words(300, &format!("c{i}_"))).collect(),
        };
        let (out, cut) = truncate(&parts, 2048, 0.5).unwrap();
        assert!(cut);
        assert_eq!(word_count(out.source.as_deref().unwrap()), 1024);
        let lens: Vec<usize> = out.candidates.iter().map(|c| word_count(c)).collect();
        assert_eq!(lens, vec![205, 205, 205, 205, 204]);
        assert!(out.candidates[0].starts_with("c0_0 c0_1"));
    }

    #[test]
    fn short_candidates_leave_room_for_source() {
        let parts = InputParts { source: Some(words(3000, "s")), candidates: vec![words(48, "c")] };
        let (out, _) = truncate(&parts, 2048, 0.5).unwrap();
        assert_eq!(word_count(out.source.as_deref().unwrap()), 2000);
        assert_eq!(word_count(&out.candidates[0]), 48);
    }

    #[test]
    fn long_record_respects_max_len() {
        let mut p = CandidatePool::from_texts(&words(4000, "w"), &[words(900, "g"), words(900, "h")], Some("t"));
        p.id = "long".into();
        let r = build_record(&p, &BuildOptions::default()).unwrap();
        assert!(r.meta.truncated);
        assert!(word_count(&r.input_text) <= 2048);
        assert_eq!(r.target_text, "t");
    }

    #[test]
    fn parse_inverts_render() {
        let parts = InputParts {
            source: Some("the source: text".into()),
            candidates: vec!["one".into(), "".into(), "three candidate4: x".into()],
        };
        assert_eq!(InputParts::parse(&parts.render()), parts);
        let no_src = InputParts { source: None, candidates: vec!["x".into()] };
        assert_eq!(InputParts::parse(&no_src.render()), no_src);
    }

    fn records(n: usize) -> Vec<CorrectorRecord> {
        (0..n)
            .map(|i| {
                let mut p = CandidatePool::from_texts(&format!("s{i}"), &["c"], Some("t"));
                p.id = i.to_string();
                build_record(&p, &BuildOptions::default()).unwrap()
            })
            .collect()
    }

    #[test]
    fn split_is_deterministic() {
        let recs = records(10);
        let ratios = SplitRatios { train: 0.8, validation: 0.2 };
        let (a, b) = split_records(&recs, ratios, 1).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        assert_eq!(split_records(&recs, ratios, 1).unwrap(), (a, b));
    }

    #[test]
    fn split_edge_cases() {
        let recs = records(4);
        let (a, b) = split_records(&recs, SplitRatios { train: 1.0, validation: 0.0 }, 3).unwrap();
        assert_eq!((a.len(), b.len()), (4, 0));
        assert!(matches!(split_records(&[], SplitRatios::default(), 0), Err(Error::EmptyDataset)));
        assert!(matches!(
            split_records(&recs, SplitRatios { train: 0.7, validation: 0.2 }, 0),
            Err(Error::InvalidSplit(_))
        ));
    }

    #[test]
    fn different_seed_same_multiset() {
        let recs = records(20);
        let ratios = SplitRatios { train: 0.5, validation: 0.5 };
        let (a1, b1) = split_records(&recs, ratios, 1).unwrap();
        let (a2, b2) = split_records(&recs, ratios, 2).unwrap();
        let mut all1: Vec<String> = a1.iter().chain(&b1).map(|r| r.meta.pool_id.clone()).collect();
        let mut all2: Vec<String> = a2.iter().chain(&b2).map(|r| r.meta.pool_id.clone()).collect();
        all1.sort();
        all2.sort();
        assert_eq!(all1, all2);
        assert_ne!(a1, a2);
    }

    #[test]
    fn emit_writes_two_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = emit_dataset(&records(10), SplitRatios { train: 0.8, validation: 0.2 }, 1, dir.path()).unwrap();
        let train = std::fs::read_to_string(&out.train_path).unwrap();
        assert_eq!(train.lines().count(), 8);
        let first: serde_json::Value = serde_json::from_str(train.lines().next().unwrap()).unwrap();
        assert!(first.get("input").is_some() && first.get("target").is_some() && first.get("meta").is_some());
    }
}
