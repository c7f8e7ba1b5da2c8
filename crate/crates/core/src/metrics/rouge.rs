use std::collections::HashMap;

use super::Prf;
use crate::alignment::lcs_len;
use crate::tokenize::TokenSeq;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// ROUGE-N with clipped n-gram overlap, case-folded, no stemming. F1 is in
/// `f_beta`.
pub fn rouge_n(hyp: &TokenSeq, reference: &TokenSeq, n: usize) -> Prf {
    assert!(n >= 1, "rouge_n needs n >= 1");
    let hyp = hyp.lowercased();
    let reference = reference.lowercased();
    let h = ngram_counts(&hyp.tokens, n);
    let r = ngram_counts(&reference.tokens, n);
    let overlap: u64 = h
        .iter()
        .map(|(gram, &c)| c.min(r.get(gram).copied().unwrap_or(0)))
        .sum();
    let hyp_total: u64 = h.values().sum();
    let ref_total: u64 = r.values().sum();
    Prf::from_counts(overlap, hyp_total - overlap, ref_total - overlap, 1.0)
}

/// ROUGE-L from the token LCS, case-folded.
pub fn rouge_l(hyp: &TokenSeq, reference: &TokenSeq) -> Prf {
    let hyp = hyp.lowercased();
    let reference = reference.lowercased();
    let lcs = lcs_len(&hyp.tokens, &reference.tokens) as u64;
    Prf::from_counts(
        lcs,
        hyp.len() as u64 - lcs,
        reference.len() as u64 - lcs,
        1.0,
    )
}
