use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::MetricKind;
use crate::error::{Error, Result};
use crate::generation::PoolInput;
use crate::metrics::m2::M2_BETA;
use crate::metrics::{m2_score, rouge_l, rouge_n, M2Document, Prf};
use crate::tokenize::tokenize;

/// Output of scoring one system output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    /// In [0, 1]. Tables print it multiplied by 100.
    pub corpus_score: f64,
    pub details: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_item_scores: Option<Vec<f64>>,
    pub config: Value,
    /// Fraction of items that had a real system output rather than the
    /// source-text fallback.
    pub coverage: f64,
}

pub fn metric_config(metric: MetricKind) -> Value {
    match metric {
        MetricKind::M2F05 => json!({
            "beta": M2_BETA,
            "scorer": "m2-lite",
            "hypothesis_tokenization": "whitespace",
        }),
        MetricKind::Rouge => json!({
            "headline": "rougeL_f1",
            "lowercase": true,
            "stemming": false,
            "stopwords": false,
        }),
    }
}

/// Scores `outputs` (one per input, in order).
pub fn score_outputs(
    metric: MetricKind,
    outputs: &[String],
    inputs: &[PoolInput],
    gold: Option<&M2Document>,
    coverage: f64,
) -> Result<MetricReport> {
    if outputs.len() != inputs.len() {
        return Err(Error::CorpusMismatch(format!(
            "{} outputs for {} inputs",
            outputs.len(),
            inputs.len()
        )));
    }
    let (corpus_score, details, per_item) = match metric {
        MetricKind::M2F05 => {
            let gold = gold.ok_or_else(|| Error::Config("metric m2_f05 needs an M2 gold file".into()))?;
            let score = m2_score(outputs, gold)?;
            let per_item = score
                .sentences
                .iter()
                .map(|s| Prf::from_counts(s.tp, s.fp, s.fn_, M2_BETA).f_beta)
                .collect();
            (score.corpus.f_beta, serde_json::to_value(score.corpus)?, per_item)
        }
        MetricKind::Rouge => {
            let mut sums = [0.0f64; 3];
            let mut per_item = Vec::with_capacity(outputs.len());
            for (out, input) in outputs.iter().zip(inputs) {
                let target = input
                    .target
                    .as_deref()
                    .ok_or_else(|| Error::MissingTarget(Some(input.id.clone())))?;
                let (h, r) = (tokenize(out), tokenize(target));
                let scores = [rouge_n(&h, &r, 1).f_beta, rouge_n(&h, &r, 2).f_beta, rouge_l(&h, &r).f_beta];
                for (s, v) in sums.iter_mut().zip(scores) {
                    *s += v;
                }
                per_item.push(scores[2]);
            }
            let n = outputs.len().max(1) as f64;
            let [r1, r2, rl] = sums.map(|s| s / n);
            (rl, json!({"rouge1_f1": r1, "rouge2_f1": r2, "rougeL_f1": rl}), per_item)
        }
    };
    Ok(MetricReport {
        metric: metric.as_str().to_string(),
        corpus_score,
        details,
        per_item_scores: Some(per_item),
        config: metric_config(metric),
        coverage,
    })
}

pub(crate) fn points(score: f64) -> String {
    format!("{:.2}", score * 100.0)
}

/// Plain-text table with right-aligned columns after the first.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let mut out = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out += &line(&rule);
    for row in rows {
        out += &line(row);
    }
    out
}
