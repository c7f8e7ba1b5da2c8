//! MaxMatch-style GEC scoring ("M2-lite").
//!
//! System edits come from a plain Levenshtein alignment of source and
//! hypothesis, with adjacent changed tokens merged into one edit. Each system
//! edit counts as a true positive when a gold edit has identical offsets and
//! replacement. Per sentence, the annotator that maximizes the running corpus
//! F0.5 is chosen, in corpus order.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Prf;
use crate::alignment::align_slices;
use crate::error::{Error, Result};
use crate::tokenize::TokenSeq;

pub const M2_BETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_label: Option<String>,
}

impl Edit {
    pub fn new<S: Into<String>>(start: usize, end: usize, replacement: impl IntoIterator<Item = S>) -> Self {
        Edit {
            start,
            end,
            replacement: replacement.into_iter().map(Into::into).collect(),
            type_label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.type_label = Some(label.into());
        self
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    /// Offsets and replacement equal; the type label is ignored.
    pub fn same_change(&self, other: &Edit) -> bool {
        self.start == other.start && self.end == other.end && self.replacement == other.replacement
    }

    fn is_noop_on(&self, source: &[String]) -> bool {
        source[self.start..self.end] == self.replacement[..]
    }
}

/// Edits turning `source` into `hypothesis`: every maximal run of adjacent
/// non-match alignment operations becomes one edit.
pub fn extract_edits(source: &TokenSeq, hypothesis: &TokenSeq) -> Vec<Edit> {
    let script = align_slices(&source.tokens, &hypothesis.tokens);
    script
        .change_runs()
        .into_iter()
        .map(|run| {
            let src = script.source_span(run.clone());
            let tgt = script.target_span(run);
            Edit::new(src.start, src.end, hypothesis.tokens[tgt].iter().cloned())
        })
        .filter(|e| !e.is_noop_on(&source.tokens))
        .collect()
}

/// Applies non-overlapping edits (in source coordinates) to `source`.
pub fn apply_edits(source: &[String], edits: &[Edit]) -> Result<Vec<String>> {
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| (e.start, e.end));
    let mut out = Vec::with_capacity(source.len());
    let mut cursor = 0;
    for e in sorted {
        if e.start < cursor || e.end < e.start || e.end > source.len() {
            return Err(Error::InvalidCounts(format!(
                "edit {}..{} overlaps another edit or falls outside a {}-token source",
                e.start,
                e.end,
                source.len()
            )));
        }
        out.extend_from_slice(&source[cursor..e.start]);
        out.extend(e.replacement.iter().cloned());
        cursor = e.end;
    }
    out.extend_from_slice(&source[cursor..]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotator: usize,
    pub edits: Vec<Edit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M2Sentence {
    pub source: TokenSeq,
    /// Sorted by annotator id; never empty.
    pub annotations: Vec<Annotation>,
}

impl M2Sentence {
    /// Source with the given annotator's edits applied.
    pub fn corrected(&self, annotation_index: usize) -> Result<Vec<String>> {
        apply_edits(&self.source.tokens, &self.annotations[annotation_index].edits)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct M2Document {
    pub sentences: Vec<M2Sentence>,
}

impl M2Document {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses CoNLL-style M2 text. `-NONE-` corrections are deletions; `noop`
    /// edits (or offsets of -1) register the annotator with no edits.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut current: Option<(TokenSeq, Vec<Annotation>)> = None;

        let finish = |cur: Option<(TokenSeq, Vec<Annotation>)>, out: &mut Vec<M2Sentence>| {
            if let Some((source, mut annotations)) = cur {
                if annotations.is_empty() {
                    annotations.push(Annotation { annotator: 0, edits: Vec::new() });
                }
                annotations.sort_by_key(|a| a.annotator);
                out.push(M2Sentence { source, annotations });
            }
        };

        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                finish(current.take(), &mut sentences);
            } else if let Some(rest) = line.strip_prefix("S ").or(if line == "S" { Some("") } else { None }) {
                finish(current.take(), &mut sentences);
                current = Some((TokenSeq::from_tokens(rest.split_whitespace()), Vec::new()));
            } else if let Some(rest) = line.strip_prefix("A ") {
                let (source, annotations) = current.as_mut().ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "annotation line before any S line".into(),
                })?;
                let (annotator, edit) = parse_annotation(rest, source, line_no)?;
                let slot = match annotations.iter().position(|a| a.annotator == annotator) {
                    Some(i) => i,
                    None => {
                        annotations.push(Annotation { annotator, edits: Vec::new() });
                        annotations.len() - 1
                    }
                };
                if let Some(edit) = edit {
                    annotations[slot].edits.push(edit);
                }
            } else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected an S or A line, got {line:?}"),
                });
            }
        }
        finish(current.take(), &mut sentences);
        Ok(M2Document { sentences })
    }

    pub fn to_m2_string(&self) -> String {
        let mut out = String::new();
        for (i, sentence) in self.sentences.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "S {}", sentence.source.tokens.join(" "));
            for ann in &sentence.annotations {
                if ann.edits.is_empty() {
                    let _ = writeln!(
                        out,
                        "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{}",
                        ann.annotator
                    );
                }
                for e in &ann.edits {
                    let correction = if e.replacement.is_empty() {
                        "-NONE-".to_string()
                    } else {
                        e.replacement.join(" ")
                    };
                    let _ = writeln!(
                        out,
                        "A {} {}|||{}|||{}|||REQUIRED|||-NONE-|||{}",
                        e.start,
                        e.end,
                        e.type_label.as_deref().unwrap_or("UNK"),
                        correction,
                        ann.annotator
                    );
                }
            }
        }
        out
    }
}

fn parse_annotation(rest: &str, source: &TokenSeq, line: usize) -> Result<(usize, Option<Edit>)> {
    let bad = |message: String| Error::Parse { line, message };
    let fields: Vec<&str> = rest.split("|||").collect();
    if fields.len() < 3 {
        return Err(bad(format!("expected at least 3 |||-separated fields, got {}", fields.len())));
    }
    let annotator = match fields.get(5) {
        Some(a) => a
            .trim()
            .parse::<usize>()
            .map_err(|_| bad(format!("bad annotator id {a:?}")))?,
        None => 0,
    };
    let mut offsets = fields[0].split_whitespace();
    let (Some(start), Some(end), None) = (offsets.next(), offsets.next(), offsets.next()) else {
        return Err(bad(format!("bad offsets {:?}", fields[0])));
    };
    let start: i64 = start.parse().map_err(|_| bad(format!("bad start offset {start:?}")))?;
    let end: i64 = end.parse().map_err(|_| bad(format!("bad end offset {end:?}")))?;
    let type_label = fields[1].trim();
    if type_label.eq_ignore_ascii_case("noop") || start < 0 {
        return Ok((annotator, None));
    }
    let (start, end) = (start as usize, end.max(0) as usize);
    if start > end || end > source.len() {
        return Err(bad(format!(
            "offsets {start}..{end} invalid for a {}-token sentence",
            source.len()
        )));
    }
    let correction = fields[2].trim();
    let replacement: Vec<String> = if correction == "-NONE-" || correction.is_empty() {
        Vec::new()
    } else {
        correction.split_whitespace().map(str::to_string).collect()
    };
    let edit = Edit {
        start,
        end,
        replacement,
        type_label: Some(type_label.to_string()),
    };
    Ok((annotator, (!edit.is_noop_on(&source.tokens)).then_some(edit)))
}

/// Per-sentence outcome of the annotator choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceStats {
    pub annotator: usize,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M2Score {
    pub corpus: Prf,
    pub sentences: Vec<SentenceStats>,
}

fn count_matches(system: &[Edit], gold: &[Edit]) -> (u64, u64, u64) {
    let mut used = vec![false; gold.len()];
    let mut tp = 0;
    for s in system {
        if let Some(g) = (0..gold.len()).find(|&g| !used[g] && gold[g].same_change(s)) {
            used[g] = true;
            tp += 1;
        }
    }
    let fp = system.len() as u64 - tp;
    let fn_ = gold.len() as u64 - tp;
    (tp, fp, fn_)
}

/// Scores whitespace-tokenized `hypotheses` against `gold`, one per sentence.
pub fn m2_score<S: AsRef<str>>(hypotheses: &[S], gold: &M2Document) -> Result<M2Score> {
    if hypotheses.len() != gold.sentences.len() {
        return Err(Error::CorpusMismatch(format!(
            "{} hypotheses for {} gold sentences",
            hypotheses.len(),
            gold.sentences.len()
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    let mut sentences = Vec::with_capacity(hypotheses.len());
    for (hyp, sentence) in hypotheses.iter().zip(&gold.sentences) {
        let hyp = TokenSeq::from_tokens(hyp.as_ref().split_whitespace());
        let system = extract_edits(&sentence.source, &hyp);

        // highest cumulative F, then more tp, fewer fp, fewer fn, lower id
        let mut best: Option<(SentenceStats, f64)> = None;
        for ann in &sentence.annotations {
            let (t, p, n) = count_matches(&system, &ann.edits);
            let f = Prf::from_counts(tp + t, fp + p, fn_ + n, M2_BETA).f_beta;
            let better = match &best {
                None => true,
                Some((b, bf)) => {
                    (f, t, std::cmp::Reverse(p), std::cmp::Reverse(n))
                        > (*bf, b.tp, std::cmp::Reverse(b.fp), std::cmp::Reverse(b.fn_))
                }
            };
            if better {
                best = Some((SentenceStats { annotator: ann.annotator, tp: t, fp: p, fn_: n }, f));
            }
        }
        let (stats, _) = best.expect("every sentence has an annotation");
        tp += stats.tp;
        fp += stats.fp;
        fn_ += stats.fn_;
        sentences.push(stats);
    }
    Ok(M2Score {
        corpus: Prf::from_counts(tp, fp, fn_, M2_BETA),
        sentences,
    })
}
