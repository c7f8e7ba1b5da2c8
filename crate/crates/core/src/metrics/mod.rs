//! Evaluation metrics: MaxMatch-style F0.5 for grammatical error correction,
//! ROUGE-N / ROUGE-L for generation tasks, and score aggregation.

pub mod m2;
mod rouge;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use m2::{
    apply_edits, extract_edits, m2_score, Edit, M2Document, M2Score, M2Sentence, SentenceStats,
};
pub use rouge::{rouge_l, rouge_n};

/// Precision / recall / F-measure together with the counts they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub beta: f64,
}

impl Prf {
    /// Precision and recall default to 1 when their denominator is 0.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, beta: f64) -> Prf {
        let precision = ratio_or_one(tp, tp + fp);
        let recall = ratio_or_one(tp, tp + fn_);
        Prf {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f_beta: f_measure(precision, recall, beta),
            beta,
        }
    }
}

fn ratio_or_one(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// `(1+β²)·P·R / (β²·P + R)`, 0 when both P and R are 0.
pub fn f_measure(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// F-beta from raw counts.
pub fn f_beta(tp: i64, fp: i64, fn_: i64, beta: f64) -> Result<f64> {
    if tp < 0 || fp < 0 || fn_ < 0 {
        return Err(Error::InvalidCounts(format!(
            "tp={tp}, fp={fp}, fn={fn_} must all be non-negative"
        )));
    }
    Ok(Prf::from_counts(tp as u64, fp as u64, fn_ as u64, beta).f_beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation (divides by n).
    pub std: f64,
    /// Sample standard deviation (divides by n - 1; 0 for a single value).
    pub sample_std: f64,
}

pub fn aggregate(scores: &[f64]) -> Result<Aggregate> {
    if scores.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let n = scores.len();
    // Shifting by the first value keeps the mean exact for constant input.
    let first = scores[0];
    let mean = first + scores.iter().map(|x| x - first).sum::<f64>() / n as f64;
    let ss: f64 = scores.iter().map(|x| (x - mean).powi(2)).sum();
    Ok(Aggregate {
        n,
        mean,
        std: (ss / n as f64).sqrt(),
        sample_std: if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 },
    })
}
