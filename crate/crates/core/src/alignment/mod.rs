//! Dynamic-programming primitives: Levenshtein distance, longest common
//! subsequence, minimum-cost edit scripts and multi-candidate span diffing.
//!
//! The slice-level functions are generic over any `PartialEq` element so the
//! same code serves token and character granularity.

mod segment;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::tokenize::TokenSeq;

pub use segment::{segment_pool, Segment, SegmentedPool};

/// Unit over which edit distance is counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Token,
    #[default]
    Character,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Token => "token",
            Granularity::Character => "character",
        }
    }
}

/// Unit-cost Levenshtein distance, two-row formulation.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn edit_distance(a: &TokenSeq, b: &TokenSeq, granularity: Granularity) -> usize {
    match granularity {
        Granularity::Token => levenshtein(&a.tokens, &b.tokens),
        Granularity::Character => levenshtein(&a.chars(), &b.chars()),
    }
}

pub fn lcs_length(a: &TokenSeq, b: &TokenSeq) -> usize {
    lcs_len(&a.tokens, &b.tokens)
}

/// `2·LCS(a, b) / (|a| + |b|)` over tokens; two empty sequences are identical.
pub fn sim_lcs(a: &TokenSeq, b: &TokenSeq) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * lcs_length(a, b) as f64 / total as f64
}

/// Description of the similarity normalization, recorded in run manifests.
pub const SIM_LCS_FORM: &str = "2*lcs/(|a|+|b|), token level, sim(empty,empty)=1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Match,
    Substitute,
    Insert,
    Delete,
}

/// One unit operation: `source` and `target` are half-open ranges covering
/// at most one element each.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: OpKind,
    pub source: Range<usize>,
    pub target: Range<usize>,
}

impl EditOp {
    pub fn is_match(&self) -> bool {
        self.kind == OpKind::Match
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    /// Number of non-match operations, i.e. the cost of the script.
    pub fn cost(&self) -> usize {
        self.ops.iter().filter(|op| !op.is_match()).count()
    }

    /// Maximal runs of consecutive non-match operations, as index ranges into
    /// `ops`.
    pub fn change_runs(&self) -> Vec<Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, op) in self.ops.iter().enumerate() {
            match (op.is_match(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    runs.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..self.ops.len());
        }
        runs
    }

    /// Source-side span covered by `ops[run]`.
    pub fn source_span(&self, run: Range<usize>) -> Range<usize> {
        let ops = &self.ops[run];
        ops.first().map_or(0, |o| o.source.start)..ops.last().map_or(0, |o| o.source.end)
    }

    /// Target-side span covered by `ops[run]`.
    pub fn target_span(&self, run: Range<usize>) -> Range<usize> {
        let ops = &self.ops[run];
        ops.first().map_or(0, |o| o.target.start)..ops.last().map_or(0, |o| o.target.end)
    }
}

/// Minimum-cost alignment of two slices.
///
/// Ties between equally cheap scripts are broken left to right, preferring
/// match, then substitute, then delete, then insert.
pub fn align_slices<T: PartialEq>(a: &[T], b: &[T]) -> EditScript {
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    // suffix[i * w + j] = distance between a[i..] and b[j..]
    let mut suffix = vec![0usize; (n + 1) * w];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            suffix[i * w + j] = if i == n {
                m - j
            } else if j == m {
                n - i
            } else {
                let diag = suffix[(i + 1) * w + j + 1] + usize::from(a[i] != b[j]);
                diag.min(suffix[(i + 1) * w + j] + 1)
                    .min(suffix[i * w + j + 1] + 1)
            };
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = suffix[i * w + j];
        let kind = if i < n && j < m && a[i] == b[j] && here == suffix[(i + 1) * w + j + 1] {
            OpKind::Match
        } else if i < n && j < m && here == suffix[(i + 1) * w + j + 1] + 1 {
            OpKind::Substitute
        } else if i < n && here == suffix[(i + 1) * w + j] + 1 {
            OpKind::Delete
        } else {
            OpKind::Insert
        };
        let (di, dj) = match kind {
            OpKind::Match | OpKind::Substitute => (1, 1),
            OpKind::Delete => (1, 0),
            OpKind::Insert => (0, 1),
        };
        ops.push(EditOp {
            kind,
            source: i..i + di,
            target: j..j + dj,
        });
        i += di;
        j += dj;
    }
    EditScript { ops }
}

pub fn align(a: &TokenSeq, b: &TokenSeq) -> EditScript {
    align_slices(&a.tokens, &b.tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::tokenize;

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq::from_tokens(tokens.iter().copied())
    }

    fn chars(s: &str) -> TokenSeq {
        TokenSeq::from_tokens(s.chars().map(|c| c.to_string()))
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance(&tokenize(""), &tokenize(""), Granularity::Character), 0);
        assert_eq!(
            edit_distance(&tokenize("kitten"), &tokenize("sitting"), Granularity::Character),
            3
        );
        assert_eq!(
            edit_distance(&seq(&["he", "go"]), &seq(&["he", "goes"]), Granularity::Token),
            1
        );
        assert_eq!(
            edit_distance(&seq(&["he", "go"]), &seq(&["he", "goes"]), Granularity::Character),
            2
        );
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_length(&seq(&["a", "b"]), &seq(&["a", "b"])), 2);
        assert_eq!(lcs_length(&chars("ABCBDAB"), &chars("BDCABA")), 4);
        assert_eq!(lcs_length(&seq(&["a", "b"]), &seq(&[])), 0);
    }

    #[test]
    fn sim_lcs_examples() {
        let s = seq(&["x", "y"]);
        assert_eq!(sim_lcs(&s, &s), 1.0);
        let v = sim_lcs(&seq(&["a", "b", "c"]), &seq(&["a", "x", "c"]));
        assert!((v - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(sim_lcs(&seq(&["a"]), &seq(&["b"])), 0.0);
        assert_eq!(sim_lcs(&seq(&[]), &seq(&[])), 1.0);
        assert_eq!(sim_lcs(&seq(&["a"]), &seq(&[])), 0.0);
    }

    #[test]
    fn align_identity_is_all_match() {
        let s = seq(&["a", "b", "c"]);
        let script = align(&s, &s);
        assert_eq!(script.ops.len(), 3);
        assert!(script.ops.iter().all(EditOp::is_match));
    }

    #[test]
    fn align_substitution() {
        let script = align(&seq(&["he", "go"]), &seq(&["he", "goes"]));
        assert_eq!(
            script.ops,
            vec![
                EditOp { kind: OpKind::Match, source: 0..1, target: 0..1 },
                EditOp { kind: OpKind::Substitute, source: 1..2, target: 1..2 },
            ]
        );
    }

    #[test]
    fn align_insert_into_empty() {
        let script = align(&seq(&[]), &seq(&["x"]));
        assert_eq!(
            script.ops,
            vec![EditOp { kind: OpKind::Insert, source: 0..0, target: 0..1 }]
        );
    }

    #[test]
    fn substitute_preferred_on_tie() {
        // "a b" -> "b a" costs 2 either as two substitutions or delete+insert
        let script = align(&seq(&["a", "b"]), &seq(&["b", "a"]));
        assert_eq!(script.cost(), 2);
        assert_eq!(script.ops[0].kind, OpKind::Substitute);
    }

    #[test]
    fn change_runs_group_adjacent_edits() {
        let script = align(&seq(&["a", "b", "c", "d"]), &seq(&["a", "x", "y", "d", "e"]));
        let runs = script.change_runs();
        assert_eq!(runs.len(), 2);
        assert_eq!(script.source_span(runs[0].clone()), 1..3);
        assert_eq!(script.target_span(runs[0].clone()), 1..3);
        assert_eq!(script.source_span(runs[1].clone()), 4..4);
        assert_eq!(script.target_span(runs[1].clone()), 4..5);
    }
}
