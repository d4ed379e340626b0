use alloc::string::String;
use alloc::vec::Vec;

use super::{VerifierConfig, VerifierError};

/// Normalization switches of `text_verify`; all off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TextFlags {
    pub use_latex: bool,
    pub ignore_space: bool,
    pub ignore_punc: bool,
    pub ignore_case: bool,
    pub ignore_st: bool,
}

/// Default leading/trailing markers removed under `ignore_st`: markdown
/// emphasis, quotes, brackets and sentence punctuation wrapped around a value.
pub const DEFAULT_ST_MARKERS: &[&str] = &[
    "**", "__", "*", "_", "`", "\"", "'", "\u{201c}", "\u{201d}", "\u{2018}", "\u{2019}", "\u{300c}", "\u{300d}",
    "\u{300a}", "\u{300b}", "(", ")", "[", "]", "{", "}", "<", ">", ".", "\u{3002}", ",", "\u{ff0c}", ":", "\u{ff1a}",
    ";", "!", "?",
];

pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Strips math delimiters and spacing commands and unifies fraction macros.
pub fn canonical_latex(s: &str) -> String {
    let mut t = String::from(s);
    for (from, to) in [
        ("\\displaystyle", ""),
        ("\\dfrac", "\\frac"),
        ("\\tfrac", "\\frac"),
        ("\\,", ""),
        ("\\!", ""),
        ("\\;", ""),
        ("\\:", ""),
        ("\\quad", " "),
        ("\\(", ""),
        ("\\)", ""),
        ("\\[", ""),
        ("\\]", ""),
        ("$", ""),
    ] {
        if t.contains(from) {
            t = t.replace(from, to);
        }
    }
    for cmd in ["\\left", "\\right"] {
        t = strip_sizing_command(&t, cmd);
    }
    // Collapse whitespace and drop it next to non-word characters.
    let chars: Vec<char> = t.split_whitespace().flat_map(|w| w.chars().chain(core::iter::once(' '))).collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == ' ' {
            let prev = out.chars().last();
            let next = chars.get(i + 1).copied();
            let wordish = |x: Option<char>| x.is_some_and(|x| x.is_alphanumeric());
            if wordish(prev) && wordish(next) {
                out.push(' ');
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Removes `\left` / `\right` but leaves longer macros such as `\leftarrow`.
fn strip_sizing_command(s: &str, cmd: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find(cmd) {
        let after = &rest[i + cmd.len()..];
        out.push_str(&rest[..i]);
        if after.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            out.push_str(cmd);
        }
        rest = after;
    }
    out.push_str(rest);
    out
}

fn strip_markers<'a>(mut s: &'a str, markers: &[String]) -> &'a str {
    loop {
        let before = s.len();
        s = s.trim();
        for m in markers {
            if m.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix(m.as_str()) {
                s = rest;
            }
            if let Some(rest) = s.strip_suffix(m.as_str()) {
                s = rest;
            }
        }
        if s.len() == before {
            return s;
        }
    }
}

/// Unicode punctuation outside ASCII, by block.
fn is_punctuation(c: char) -> bool {
    if c.is_ascii_punctuation() {
        return true;
    }
    matches!(c as u32,
        0x00A1 | 0x00A7 | 0x00AB | 0x00B6 | 0x00B7 | 0x00BB | 0x00BF
        | 0x2010..=0x2027 | 0x2030..=0x205E
        | 0x3001..=0x3003 | 0x3008..=0x3011 | 0x3014..=0x301F
        | 0xFE10..=0xFE19 | 0xFE30..=0xFE4F | 0xFE50..=0xFE6B
        | 0xFF01..=0xFF0F | 0xFF1A..=0xFF20 | 0xFF3B..=0xFF40 | 0xFF5B..=0xFF65)
}

pub fn normalize(s: &str, flags: TextFlags, cfg: &VerifierConfig) -> Vec<char> {
    let mut t = if flags.use_latex { canonical_latex(s) } else { String::from(s) };
    if flags.ignore_st {
        t = String::from(strip_markers(&t, &cfg.st_markers));
    }
    if flags.ignore_case {
        t = t.to_lowercase();
    }
    t.chars()
        .filter(|c| !(flags.ignore_punc && is_punctuation(*c)))
        .filter(|c| !(flags.ignore_space && c.is_whitespace()))
        .collect()
}

/// `1 - levenshtein / max_len` over the normalized strings; 1 when both are empty.
pub fn text_similarity(a: &str, b: &str, flags: TextFlags, cfg: &VerifierConfig) -> f64 {
    let a = normalize(a, flags, cfg);
    let b = normalize(b, flags, cfg);
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    if a == b {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / longest as f64
}

#[derive(Debug, Clone, PartialEq)]
pub enum TextTarget {
    Single(String),
    Candidates(Vec<String>),
}

impl TextTarget {
    pub fn from_parts(target: Option<String>, candidates: Option<Vec<String>>) -> Result<Self, VerifierError> {
        match (target, candidates) {
            (Some(t), None) => Ok(TextTarget::Single(t)),
            (None, Some(c)) if !c.is_empty() => Ok(TextTarget::Candidates(c)),
            (None, Some(_)) => Err(VerifierError::Argument("candidates must be non-empty")),
            (Some(_), Some(_)) => Err(VerifierError::Argument("give exactly one of target or candidates")),
            (None, None) => Err(VerifierError::Argument("one of target or candidates is required")),
        }
    }
}

pub fn text_verify(target: &TextTarget, predict: &str, flags: TextFlags, cfg: &VerifierConfig) -> f64 {
    match target {
        TextTarget::Single(t) => text_similarity(t, predict, flags, cfg),
        TextTarget::Candidates(cs) => cs.iter().map(|c| text_similarity(c, predict, flags, cfg)).fold(0.0, f64::max),
    }
}
