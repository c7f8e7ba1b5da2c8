//! Reference implementations used only by the tests. Written independently
//! of the library: plain recursion with memo tables, brute force where the
//! library uses dynamic programming or alignment.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;

use candrefine::alignment::{EditScript, OpKind};

pub fn lev<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j + 1, memo)
                .min(go(a, b, i + 1, j, memo))
                .min(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn lcs<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Distance with insertions and deletions only.
pub fn indel<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo).min(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn chars(tokens: &[String]) -> Vec<char> {
    tokens.join(" ").chars().collect()
}

/// Character-level distance between token lists, the library default.
pub fn char_lev(a: &[String], b: &[String]) -> usize {
    lev(&chars(a), &chars(b))
}

/// Checks that `script` is a well-formed edit script from `a` to `b`:
/// contiguous coverage of both sides, op kinds consistent with their ranges,
/// matches on equal tokens, substitutions on different ones. Returns the
/// non-match count.
pub fn check_script(script: &EditScript, a: &[String], b: &[String]) -> Result<usize, String> {
    let (mut i, mut j, mut cost) = (0, 0, 0);
    for op in &script.ops {
        if op.source.start != i || op.target.start != j {
            return Err(format!("gap before {op:?}"));
        }
        let (ds, dt) = (op.source.len(), op.target.len());
        match op.kind {
            OpKind::Match | OpKind::Substitute => {
                if (ds, dt) != (1, 1) {
                    return Err(format!("bad ranges {op:?}"));
                }
                let equal = a[i] == b[j];
                if equal != (op.kind == OpKind::Match) {
                    return Err(format!("{op:?} on {:?}/{:?}", a[i], b[j]));
                }
            }
            OpKind::Delete if (ds, dt) != (1, 0) => return Err(format!("bad ranges {op:?}")),
            OpKind::Insert if (ds, dt) != (0, 1) => return Err(format!("bad ranges {op:?}")),
            _ => {}
        }
        if op.kind != OpKind::Match {
            cost += 1;
        }
        i += ds;
        j += dt;
    }
    if (i, j) != (a.len(), b.len()) {
        return Err(format!("script covers ({i},{j}) of ({},{})", a.len(), b.len()));
    }
    Ok(cost)
}

pub fn toks(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

/// Copies the shipped benchmark into `dir`.
pub fn copy_benchmark(dir: &Path) {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_gec");
    for name in ["source.txt", "target.txt", "gold.m2", "config.json"] {
        std::fs::copy(src.join(name), dir.join(name)).unwrap();
    }
}
