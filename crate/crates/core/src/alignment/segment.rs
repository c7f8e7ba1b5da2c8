use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{align_slices, EditScript, OpKind};
use crate::error::{Error, Result};
use crate::tokenize::TokenSeq;

/// A stretch of the candidate pool, expressed in pivot (candidate 0)
/// coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Tokens every candidate agrees on.
    Shared {
        pivot: Range<usize>,
        tokens: Vec<String>,
    },
    /// Divergent region; `spans[i]` is candidate `i`'s tokens here. The pivot
    /// range may be empty when candidates only insert at that point.
    Variant {
        pivot: Range<usize>,
        spans: Vec<Vec<String>>,
    },
}

impl Segment {
    pub fn pivot(&self) -> &Range<usize> {
        match self {
            Segment::Shared { pivot, .. } | Segment::Variant { pivot, .. } => pivot,
        }
    }

    pub fn is_variant(&self) -> bool {
        matches!(self, Segment::Variant { .. })
    }

    /// Tokens contributed by `candidate` to this segment.
    pub fn tokens_for(&self, candidate: usize) -> &[String] {
        match self {
            Segment::Shared { tokens, .. } => tokens,
            Segment::Variant { spans, .. } => &spans[candidate],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedPool {
    pub segments: Vec<Segment>,
    pub candidates: usize,
}

impl SegmentedPool {
    /// Reassembles candidate `index` from its path through the segments.
    pub fn reconstruct(&self, index: usize) -> Vec<String> {
        self.segments
            .iter()
            .flat_map(|s| s.tokens_for(index).iter().cloned())
            .collect()
    }

    pub fn variant_count(&self) -> usize {
        self.segments.iter().filter(|s| s.is_variant()).count()
    }

    /// Distributes the target side of a pivot-to-other alignment over the
    /// segments.
    ///
    /// Tokens aligned to pivot token `i` go to the segment containing `i`.
    /// Inserted tokens at pivot position `p` go to a variant segment whose
    /// range touches `p` when one exists, otherwise to the segment that
    /// contains or ends at `p`.
    pub fn project(&self, script: &EditScript, other: &[String]) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.segments.len()];
        if self.segments.is_empty() {
            return out;
        }
        for op in &script.ops {
            let seg = match op.kind {
                OpKind::Insert => self.segment_for_insertion(op.source.start),
                _ => self.segment_containing(op.source.start),
            };
            out[seg].extend(other[op.target.clone()].iter().cloned());
        }
        out
    }

    fn segment_containing(&self, pivot_index: usize) -> usize {
        self.segments
            .iter()
            .position(|s| s.pivot().contains(&pivot_index))
            .expect("pivot index inside a segment")
    }

    fn segment_for_insertion(&self, position: usize) -> usize {
        let touches = |s: &Segment| s.pivot().start <= position && position <= s.pivot().end;
        self.segments
            .iter()
            .position(|s| s.is_variant() && touches(s))
            .or_else(|| self.segments.iter().position(touches))
            .unwrap_or(self.segments.len() - 1)
    }
}

/// Splits a pool into shared and divergent spans using candidate 0 as the
/// pivot.
///
/// Every other candidate is aligned to the pivot; the pivot ranges covered by
/// non-match runs are unioned, and overlapping or touching ranges are merged
/// into maximal variant segments. Whatever lies between them is shared.
pub fn segment_pool(candidates: &[TokenSeq]) -> Result<SegmentedPool> {
    if candidates.len() < 2 {
        return Err(Error::PoolTooSmall {
            required: 2,
            actual: candidates.len(),
        });
    }
    let pivot = &candidates[0].tokens;
    let scripts: Vec<EditScript> = candidates[1..]
        .iter()
        .map(|c| align_slices(pivot, &c.tokens))
        .collect();

    let mut regions: Vec<Range<usize>> = scripts
        .iter()
        .flat_map(|s| s.change_runs().into_iter().map(move |r| s.source_span(r)))
        .collect();
    regions.sort_by_key(|r| (r.start, r.end));
    let mut merged: Vec<Range<usize>> = Vec::new();
    for r in regions {
        match merged.last_mut() {
            Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
            _ => merged.push(r),
        }
    }

    let mut segments = Vec::new();
    let mut cursor = 0;
    for region in merged {
        if cursor < region.start {
            segments.push(Segment::Shared {
                pivot: cursor..region.start,
                tokens: pivot[cursor..region.start].to_vec(),
            });
        }
        cursor = region.end;
        segments.push(Segment::Variant {
            pivot: region,
            spans: Vec::new(),
        });
    }
    if cursor < pivot.len() {
        segments.push(Segment::Shared {
            pivot: cursor..pivot.len(),
            tokens: pivot[cursor..].to_vec(),
        });
    }

    let mut pool = SegmentedPool {
        segments,
        candidates: candidates.len(),
    };
    let mut per_candidate: Vec<Vec<Vec<String>>> = Vec::with_capacity(candidates.len());
    per_candidate.push(
        pool.segments
            .iter()
            .map(|s| pivot[s.pivot().clone()].to_vec())
            .collect(),
    );
    for (script, cand) in scripts.iter().zip(&candidates[1..]) {
        per_candidate.push(pool.project(script, &cand.tokens));
    }
    for (seg_index, segment) in pool.segments.iter_mut().enumerate() {
        if let Segment::Variant { spans, .. } = segment {
            *spans = per_candidate
                .iter_mut()
                .map(|c| std::mem::take(&mut c[seg_index]))
                .collect();
        }
    }
    Ok(pool)
}
