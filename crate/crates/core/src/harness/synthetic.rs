//! Synthetic grammatical error correction benchmark.
//!
//! Clean sentences come from a small template grammar. Each sentence then
//! receives one to three corruptions (subject-verb agreement, article,
//! spelling) at target positions at least three tokens apart, and the M2 gold
//! is written straight from the corruptions that were applied.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use super::mock::MockLlmSpec;
use crate::generation::Demonstration;
use crate::metrics::m2::{Annotation, M2Document, M2Sentence};
use crate::metrics::Edit;
use crate::tokenize::TokenSeq;

pub const DEFAULT_SIZE: usize = 500;
pub const DEFAULT_SEED: u64 = 2024;
/// Mock qualities attached to the three shipped prompt sets.
pub const PROMPT_SET_QUALITIES: [f64; 3] = [0.9, 0.7, 0.5];
const MIN_GAP: usize = 3;

const NOUNS: &[&str] = &[
    "teacher", "student", "doctor", "farmer", "driver", "writer", "painter", "baker", "manager",
    "neighbor", "scientist", "musician", "engineer", "officer", "artist", "athlete", "editor",
    "architect", "author", "owner",
];
const ADJECTIVES: &[&str] = &[
    "young", "old", "busy", "careful", "quiet", "friendly", "tired", "clever", "angry", "eager",
    "elderly", "important", "unusual", "patient",
];
// (base, third person singular, past participle, present participle)
const VERBS: &[(&str, &str, &str, &str)] = &[
    ("repair", "repairs", "repaired", "repairing"),
    ("clean", "cleans", "cleaned", "cleaning"),
    ("visit", "visits", "visited", "visiting"),
    ("carry", "carries", "carried", "carrying"),
    ("watch", "watches", "watched", "watching"),
    ("open", "opens", "opened", "opening"),
    ("paint", "paints", "painted", "painting"),
    ("prepare", "prepares", "prepared", "preparing"),
    ("deliver", "delivers", "delivered", "delivering"),
    ("check", "checks", "checked", "checking"),
    ("sell", "sells", "sold", "selling"),
    ("borrow", "borrows", "borrowed", "borrowing"),
    ("describe", "describes", "described", "describing"),
    ("find", "finds", "found", "finding"),
];
const OBJECTS: &[&str] = &[
    "letter", "book", "car", "window", "house", "report", "bicycle", "package", "computer",
    "umbrella", "apple", "envelope", "picture", "basket", "ladder", "engine", "invoice",
];
const PLACES: &[&str] = &[
    "office", "station", "market", "library", "school", "hospital", "park", "kitchen", "museum",
    "harbor", "airport", "garden", "village",
];
const TIMES: &[&str] = &["morning", "evening", "week", "weekend", "month", "summer"];
const ADVERBS: &[&str] = &["recently", "again", "twice", "carefully", "quickly"];
const NAMES: &[&str] = &[
    "Maria", "John", "Aisha", "Kenji", "Lucas", "Priya", "Omar", "Elena", "David", "Sofia",
];
const PRONOUNS: &[&str] = &["He", "She"];
const PREPOSITIONS: &[&str] = &["in", "at", "near"];

/// How a target token can be corrupted.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Fixed,
    /// Article that is not sentence-initial.
    Article,
    /// Finite verb; the payload is the wrong-agreement form.
    Agreement(&'static str),
    /// Content word eligible for a spelling error.
    Content,
}

#[derive(Debug, Clone, PartialEq)]
enum Corruption {
    Replace(String, &'static str),
    Delete(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSentence {
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// Gold edits in source coordinates.
    pub edits: Vec<Edit>,
}

impl SyntheticSentence {
    pub fn source_text(&self) -> String {
        self.source.join(" ")
    }

    pub fn target_text(&self) -> String {
        self.target.join(" ")
    }
}

fn starts_with_vowel(word: &str) -> bool {
    matches!(word.chars().next(), Some('a' | 'e' | 'i' | 'o' | 'u'))
}

fn indefinite(next: &str) -> &'static str {
    if starts_with_vowel(next) {
        "an"
    } else {
        "a"
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

struct Builder {
    tokens: Vec<(String, Slot)>,
}

impl Builder {
    fn new() -> Self {
        Builder { tokens: Vec::new() }
    }

    fn push(&mut self, word: &str, slot: Slot) -> &mut Self {
        self.tokens.push((word.to_string(), slot));
        self
    }

    /// Article followed by an optional adjective and a noun.
    fn noun_phrase<R: Rng>(&mut self, rng: &mut R, noun: &str, adjective: Option<&str>, initial: bool) -> &mut Self {
        let head = adjective.unwrap_or(noun);
        let article = if rng.gen_bool(0.5) { "the" } else { indefinite(head) };
        if initial {
            self.push(&capitalize(article), Slot::Fixed);
        } else {
            self.push(article, Slot::Article);
        }
        if let Some(adj) = adjective {
            self.push(adj, Slot::Content);
        }
        self.push(noun, Slot::Content)
    }

    fn finish(&mut self) -> Vec<(String, Slot)> {
        self.push(".", Slot::Fixed);
        std::mem::take(&mut self.tokens)
    }
}

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty lexicon")
}

fn clean_sentence<R: Rng>(rng: &mut R) -> Vec<(String, Slot)> {
    let mut b = Builder::new();
    let verb = *VERBS.choose(rng).expect("non-empty lexicon");
    let (base, third, participle, progressive) = verb;
    match rng.gen_range(0..6) {
        0 => {
            // The young teacher repairs a car in the garden .
            let adj = pick(rng, ADJECTIVES);
            let noun = pick(rng, NOUNS);
            b.noun_phrase(rng, noun, Some(adj), true);
            b.push(third, Slot::Agreement(base));
            let obj = pick(rng, OBJECTS);
            b.noun_phrase(rng, obj, None, false);
            b.push(pick(rng, PREPOSITIONS), Slot::Fixed);
            b.push("the", Slot::Article).push(pick(rng, PLACES), Slot::Content);
        }
        1 => {
            // She checks the old report every morning .
            b.push(pick(rng, PRONOUNS), Slot::Fixed);
            b.push(third, Slot::Agreement(base));
            b.push("the", Slot::Article);
            if rng.gen_bool(0.5) {
                b.push(pick(rng, ADJECTIVES), Slot::Content);
            }
            b.push(pick(rng, OBJECTS), Slot::Content);
            b.push("every", Slot::Fixed).push(pick(rng, TIMES), Slot::Content);
        }
        2 => {
            // The driver is painting a picture in the kitchen .
            let noun = pick(rng, NOUNS);
            b.noun_phrase(rng, noun, None, true);
            b.push("is", Slot::Agreement("are"));
            b.push(progressive, Slot::Content);
            let obj = pick(rng, OBJECTS);
            b.noun_phrase(rng, obj, None, false);
            b.push(pick(rng, PREPOSITIONS), Slot::Fixed);
            b.push("the", Slot::Article).push(pick(rng, PLACES), Slot::Content);
        }
        3 => {
            // Maria has borrowed the ladder again .
            b.push(pick(rng, NAMES), Slot::Fixed);
            b.push("has", Slot::Agreement("have"));
            b.push(participle, Slot::Content);
            let obj = pick(rng, OBJECTS);
            let adj = rng.gen_bool(0.4).then(|| pick(rng, ADJECTIVES));
            b.noun_phrase(rng, obj, adj, false);
            b.push(pick(rng, ADVERBS), Slot::Content);
        }
        4 => {
            // The busy farmers sell the apple at the market .
            let adj = pick(rng, ADJECTIVES);
            let noun = format!("{}s", pick(rng, NOUNS));
            b.push("The", Slot::Fixed).push(adj, Slot::Content).push(&noun, Slot::Content);
            b.push(base, Slot::Agreement(third));
            b.push("the", Slot::Article).push(pick(rng, OBJECTS), Slot::Content);
            b.push(pick(rng, PREPOSITIONS), Slot::Fixed);
            b.push("the", Slot::Article).push(pick(rng, PLACES), Slot::Content);
        }
        _ => {
            // Omar and Elena visit the museum every summer .
            let first = pick(rng, NAMES);
            let second = loop {
                let n = pick(rng, NAMES);
                if n != first {
                    break n;
                }
            };
            b.push(first, Slot::Fixed).push("and", Slot::Fixed).push(second, Slot::Fixed);
            b.push(base, Slot::Agreement(third));
            let obj = pick(rng, OBJECTS);
            b.noun_phrase(rng, obj, None, false);
            b.push("every", Slot::Fixed).push(pick(rng, TIMES), Slot::Content);
        }
    }
    b.finish()
}

fn misspell<R: Rng>(rng: &mut R, word: &str) -> Option<String> {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() < 5 {
        return None;
    }
    for _ in 0..8 {
        let mut out = chars.clone();
        let i = rng.gen_range(1..chars.len() - 1);
        match rng.gen_range(0..3) {
            0 => out.swap(i, i + 1),
            1 => {
                out.remove(i);
            }
            _ => out.insert(i, chars[i]),
        }
        let out: String = out.into_iter().collect();
        if out != word {
            return Some(out);
        }
    }
    None
}

fn corruption_for<R: Rng>(rng: &mut R, word: &str, slot: Slot) -> Option<Corruption> {
    match slot {
        Slot::Fixed => None,
        Slot::Agreement(wrong) => Some(Corruption::Replace(wrong.to_string(), "SVA")),
        Slot::Article => match word {
            "the" => Some(Corruption::Delete("ArtOrDet")),
            "a" | "an" if rng.gen_bool(0.5) => Some(Corruption::Delete("ArtOrDet")),
            "a" => Some(Corruption::Replace("an".into(), "ArtOrDet")),
            "an" => Some(Corruption::Replace("a".into(), "ArtOrDet")),
            _ => None,
        },
        Slot::Content => misspell(rng, word).map(|w| Corruption::Replace(w, "Spell")),
    }
}

fn corrupt<R: Rng>(rng: &mut R, clean: Vec<(String, Slot)>) -> SyntheticSentence {
    let n_errors = *[1usize, 1, 2, 2, 3].choose(rng).expect("non-empty");
    let mut candidates: Vec<usize> = (0..clean.len()).filter(|&i| clean[i].1 != Slot::Fixed).collect();
    candidates.shuffle(rng);

    let mut chosen: Vec<(usize, Corruption)> = Vec::new();
    for i in candidates {
        if chosen.len() == n_errors {
            break;
        }
        if chosen.iter().any(|(j, _)| i.abs_diff(*j) < MIN_GAP) {
            continue;
        }
        if let Some(c) = corruption_for(rng, &clean[i].0, clean[i].1) {
            chosen.push((i, c));
        }
    }
    chosen.sort_by_key(|(i, _)| *i);

    let target: Vec<String> = clean.into_iter().map(|(w, _)| w).collect();
    let mut source = Vec::with_capacity(target.len());
    let mut edits = Vec::with_capacity(chosen.len());
    let mut next = chosen.into_iter().peekable();
    for (t, word) in target.iter().enumerate() {
        match next.next_if(|(i, _)| *i == t) {
            Some((_, Corruption::Replace(wrong, label))) => {
                let at = source.len();
                edits.push(Edit::new(at, at + 1, vec![word.clone()]).with_label(label));
                source.push(wrong);
            }
            Some((_, Corruption::Delete(label))) => {
                let at = source.len();
                edits.push(Edit::new(at, at, vec![word.clone()]).with_label(label));
            }
            None => source.push(word.clone()),
        }
    }
    SyntheticSentence { source, target, edits }
}

/// `n` corrupted sentences, fully determined by `seed`.
pub fn generate(n: usize, seed: u64) -> Vec<SyntheticSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let clean = clean_sentence(&mut rng);
            corrupt(&mut rng, clean)
        })
        .collect()
}

pub fn to_m2(sentences: &[SyntheticSentence]) -> M2Document {
    M2Document {
        sentences: sentences
            .iter()
            .map(|s| M2Sentence {
                source: TokenSeq::from_tokens(s.source.iter().cloned()),
                annotations: vec![Annotation {
                    annotator: 0,
                    edits: s.edits.clone(),
                }],
            })
            .collect(),
    }
}

/// Demonstration sets drawn from a different seed than the benchmark, one per
/// entry of [`PROMPT_SET_QUALITIES`].
pub fn demonstration_sets(seed: u64, per_set: usize) -> Vec<Vec<Demonstration>> {
    let pool = generate(per_set * PROMPT_SET_QUALITIES.len(), seed.wrapping_add(1));
    pool.chunks(per_set)
        .map(|chunk| {
            chunk
                .iter()
                .map(|s| Demonstration {
                    input: s.source_text(),
                    output: s.target_text(),
                })
                .collect()
        })
        .collect()
}

/// Writes `source.txt`, `target.txt`, `gold.m2` and `config.json` into `dir`.
pub fn write_benchmark(dir: &Path, n: usize, seed: u64) -> Result<Vec<SyntheticSentence>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let sentences = generate(n, seed);
    let lines = |f: fn(&SyntheticSentence) -> String| {
        let mut out: String = sentences.iter().map(|s| f(s) + "\n").collect();
        if out.is_empty() {
            out.push('\n');
        }
        out
    };
    let write = |name: &str, content: String| {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))
    };
    write("source.txt", lines(SyntheticSentence::source_text))?;
    write("target.txt", lines(SyntheticSentence::target_text))?;
    write("gold.m2", to_m2(&sentences).to_m2_string())?;
    let config = serde_json::to_string_pretty(&benchmark_config(seed))?;
    write("config.json", config + "\n")?;
    Ok(sentences)
}

#[derive(Serialize, Deserialize)]
struct PromptSetJson {
    name: String,
    demonstrations: Vec<Demonstration>,
    mock_quality: f64,
}

/// The experiment config shipped next to the benchmark.
pub fn benchmark_config(seed: u64) -> serde_json::Value {
    let sets: Vec<PromptSetJson> = demonstration_sets(seed, 5)
        .into_iter()
        .zip(PROMPT_SET_QUALITIES)
        .enumerate()
        .map(|(i, (demonstrations, q))| PromptSetJson {
            name: format!("set_{}", i + 1),
            demonstrations,
            mock_quality: q,
        })
        .collect();
    serde_json::json!({
        "task": {
            "name": "synthetic_gec",
            "description": "Correct the grammatical and spelling errors in the sentence. Change as little as possible.",
            "input_format": "Input: {input}",
            "output_format": "Output: {output}",
            "stop": ["\n"]
        },
        "data": {
            "inputs": "source.txt",
            "targets": "target.txt",
            "m2_gold": "gold.m2"
        },
        "generation": {
            "model_id": "mock",
            "k": 10,
            "temperature": 0.7,
            "max_new_tokens": 64,
            "include_greedy": true
        },
        "prompt_sets": sets,
        "models": [
            {"id": "mock-weak", "mock_quality": 0.5},
            {"id": "mock-strong", "mock_quality": 0.9}
        ],
        "endpoints": {},
        "cache_path": "runs/cache.jsonl",
        "metric": "m2_f05",
        "output_dir": "runs/latest",
        "mock": MockLlmSpec::default(),
    })
}
