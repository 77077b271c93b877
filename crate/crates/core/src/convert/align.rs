//! Locating tokenizer output in the raw text it came from.

use std::collections::HashSet;

use super::transform::TokenTransformTable;
use crate::error::{Error, Result};
use crate::text::is_whitespace;

/// Characters a tokenizer may silently drop.
pub fn is_untokenizable(c: char) -> bool {
    is_whitespace(c)
        || c.is_control()
        || matches!(c,
            '\u{200B}'..='\u{200F}'
            | '\u{2060}'..='\u{2064}'
            | '\u{FEFF}'
            | '\u{FE00}'..='\u{FE0F}'
            | '\u{E0100}'..='\u{E01EF}'
            | '\u{00AD}')
}

fn matches_at(raw: &[char], at: usize, form: &str) -> Option<usize> {
    let mut end = at;
    for c in form.chars() {
        if raw.get(end) != Some(&c) {
            return None;
        }
        end += 1;
    }
    Some(end)
}

/// Candidate `(start, end)` placements of `token` from `pos` on, leftmost
/// first and, at one start, the literal form before table alternatives.
fn candidates(raw: &[char], pos: usize, token: &str, table: &TokenTransformTable) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut q = pos;
    while q < raw.len() {
        for form in std::iter::once(token).chain(table.alternatives(token).iter().map(String::as_str)) {
            if let Some(end) = matches_at(raw, q, form) {
                if !out.contains(&(q, end)) {
                    out.push((q, end));
                }
            }
        }
        if !is_untokenizable(raw[q]) {
            break;
        }
        q += 1;
    }
    out
}

struct Frame {
    token: usize,
    pos: usize,
    cands: Vec<(usize, usize)>,
    next: usize,
}

/// Raw `(start, end)` for every token such that each token equals its raw
/// slice literally or through `table`, and only whitespace or untokenizable
/// characters lie outside the assigned ranges. Among consistent
/// assignments the leftmost-greedy one is returned; failed `(token, pos)`
/// states are remembered so the backtracking stays polynomial.
pub fn align_tokens_to_raw(
    raw: &[char],
    tokens: &[String],
    table: &TokenTransformTable,
) -> Result<Vec<(usize, usize)>> {
    let n = tokens.len();
    let mut failed: HashSet<(usize, usize)> = HashSet::new();
    let mut offsets: Vec<(usize, usize)> = Vec::with_capacity(n);
    let new_frame = |token: usize, pos: usize| Frame {
        token,
        pos,
        cands: if token < n {
            candidates(raw, pos, &tokens[token], table)
        } else {
            Vec::new()
        },
        next: 0,
    };
    let mut stack = vec![new_frame(0, 0)];
    let mut deepest = (0usize, 0usize);
    while let Some(frame) = stack.last_mut() {
        if frame.token == n {
            if raw[frame.pos..].iter().all(|&c| is_untokenizable(c)) {
                return Ok(offsets);
            }
        } else if frame.next < frame.cands.len() {
            let (s, e) = frame.cands[frame.next];
            frame.next += 1;
            let key = (frame.token + 1, e);
            if !failed.contains(&key) {
                offsets.push((s, e));
                if key.0 > deepest.0 || (key.0 == deepest.0 && e > deepest.1) {
                    deepest = key;
                }
                stack.push(new_frame(key.0, key.1));
            }
            continue;
        }
        failed.insert((frame.token, frame.pos));
        stack.pop();
        offsets.pop();
    }
    let (index, pos) = deepest;
    let (index, pos) = if index == n { (n - 1, pos) } else { (index, pos) };
    let lo = pos.saturating_sub(10);
    let hi = (pos + 20).min(raw.len());
    Err(Error::TokenAlignment {
        index,
        token: tokens.get(index).cloned().unwrap_or_default(),
        context: raw[lo..hi].iter().collect(),
    })
}
