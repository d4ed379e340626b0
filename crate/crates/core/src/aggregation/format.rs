//! Hard format constraints: repetition loops and script mixing.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRule {
    /// Character n-gram length.
    pub ngram: usize,
    /// Largest share of the response the most frequent n-gram may cover.
    pub max_fraction: f64,
    /// Responses shorter than this (in characters) are never flagged.
    pub min_chars: usize,
}

impl Default for RepetitionRule {
    fn default() -> Self {
        Self { ngram: 20, max_fraction: 0.3, min_chars: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    Latin,
    Cyrillic,
    /// Han ideographs and Japanese kana.
    Cjk,
    Hangul,
    Arabic,
    Hebrew,
    Devanagari,
    Thai,
    Other,
}

/// Script of an alphabetic character; `None` for characters that do not
/// count towards mixing (non-letters and Greek, which reads as math notation).
pub fn script_of(c: char) -> Option<Script> {
    if !c.is_alphabetic() {
        return None;
    }
    let cp = c as u32;
    Some(match cp {
        0x0370..=0x03FF | 0x1F00..=0x1FFF => return None,
        0x0000..=0x024F | 0x1E00..=0x1EFF | 0x2C60..=0x2C7F | 0xA720..=0xA7FF | 0xFF21..=0xFF5A => Script::Latin,
        0x0400..=0x052F | 0x1C80..=0x1C8F | 0x2DE0..=0x2DFF | 0xA640..=0xA69F => Script::Cyrillic,
        0x0590..=0x05FF | 0xFB1D..=0xFB4F => Script::Hebrew,
        0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF => Script::Arabic,
        0x0900..=0x097F => Script::Devanagari,
        0x0E00..=0x0E7F => Script::Thai,
        0x1100..=0x11FF | 0x3130..=0x318F | 0xAC00..=0xD7AF => Script::Hangul,
        0x2E80..=0x2FDF
        | 0x3005..=0x3007
        | 0x3040..=0x30FF
        | 0x31F0..=0x31FF
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0xFF66..=0xFF9F
        | 0x20000..=0x2FA1F => Script::Cjk,
        _ => Script::Other,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectedScript {
    /// The response's own dominant script.
    #[default]
    Auto,
    Fixed(Script),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanguageRule {
    pub expected: ExpectedScript,
    /// Largest allowed share of counted letters outside the expected script.
    pub max_foreign_fraction: f64,
}

impl Default for LanguageRule {
    fn default() -> Self {
        Self { expected: ExpectedScript::Auto, max_foreign_fraction: 0.2 }
    }
}

/// Enabled detectors; a `None` rule is off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormatRuleSet {
    pub repetition: Option<RepetitionRule>,
    pub language: Option<LanguageRule>,
}

impl Default for FormatRuleSet {
    fn default() -> Self {
        Self { repetition: Some(RepetitionRule::default()), language: Some(LanguageRule::default()) }
    }
}

impl FormatRuleSet {
    pub const DISABLED: Self = Self { repetition: None, language: None };
}

/// Share of the response covered by occurrences of its most frequent
/// n-gram (ties broken by coverage). 0 when no n-gram repeats.
pub fn repetition_coverage(text: &str, n: usize) -> f64 {
    let chars: Vec<char> = text.chars().collect();
    if n == 0 || chars.len() < n {
        return 0.0;
    }
    let mut seen: BTreeMap<&[char], Vec<usize>> = BTreeMap::new();
    for (i, w) in chars.windows(n).enumerate() {
        seen.entry(w).or_default().push(i);
    }
    let top = seen.values().map(Vec::len).max().unwrap_or(0);
    if top < 2 {
        return 0.0;
    }
    seen.values()
        .filter(|p| p.len() == top)
        .map(|starts| {
            // Union of [start, start + n) over possibly overlapping hits.
            let (mut covered, mut reach) = (0usize, 0usize);
            for &s in starts {
                let end = s + n;
                covered += end - s.max(reach).min(end);
                reach = reach.max(end);
            }
            covered as f64 / chars.len() as f64
        })
        .fold(0.0, f64::max)
}

/// Removes fenced and inline code plus `$…$`, `$$…$$`, `\(…\)` and `\[…\]`
/// formula spans; an unterminated opener leaves the rest untouched.
pub fn strip_exempt_spans(text: &str) -> alloc::string::String {
    const PAIRS: [(&str, &str); 6] =
        [("```", "```"), ("$$", "$$"), ("\\[", "\\]"), ("\\(", "\\)"), ("`", "`"), ("$", "$")];
    let mut out = alloc::string::String::with_capacity(text.len());
    let mut rest = text;
    'outer: while !rest.is_empty() {
        for (open, close) in PAIRS {
            if let Some(after) = rest.strip_prefix(open) {
                if let Some(end) = after.find(close) {
                    rest = &after[end + close.len()..];
                    out.push(' ');
                    continue 'outer;
                }
            }
        }
        let c = rest.chars().next().unwrap_or(' ');
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    out
}

/// Fraction of counted letters outside the expected script, after removing
/// code and formula spans. 0 when no letter counts.
pub fn foreign_fraction(text: &str, expected: ExpectedScript) -> f64 {
    let cleaned = strip_exempt_spans(text);
    let mut counts: BTreeMap<Script, usize> = BTreeMap::new();
    for s in cleaned.chars().filter_map(script_of) {
        *counts.entry(s).or_default() += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    let home = match expected {
        ExpectedScript::Fixed(s) => s,
        ExpectedScript::Auto => {
            counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(s, _)| *s).unwrap_or(Script::Latin)
        }
    };
    let native = counts.get(&home).copied().unwrap_or(0);
    (total - native) as f64 / total as f64
}

/// 0 if any enabled detector fires, else 1.
pub fn format_mask(response: &str, rules: &FormatRuleSet) -> u8 {
    if let Some(rep) = rules.repetition {
        if response.chars().count() >= rep.min_chars && repetition_coverage(response, rep.ngram) > rep.max_fraction {
            return 0;
        }
    }
    if let Some(lang) = rules.language {
        if foreign_fraction(response, lang.expected) > lang.max_foreign_fraction {
            return 0;
        }
    }
    1
}
