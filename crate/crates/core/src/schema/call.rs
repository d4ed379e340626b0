//! Keyword-only call expressions such as `text_verify(target='Export Volume', ignore_case=True)`.
//!
//! The grammar is deliberately small:
//!
//! ```text
//! call    := name '(' [arg (',' arg)* [',']] ')'
//! arg     := ident '=' literal
//! literal := string | integer | 'True' | 'False' | list
//! list    := '[' [literal (',' literal)* [',']] ']'      (nesting depth <= 2)
//! string  := ['r'|'R'] ( '...' | "..." )
//! ```
//!
//! Inside non-raw strings only `\\`, `\'` and `\"` are escapes; any other
//! backslash is kept verbatim so LaTeX such as `'\frac{4}{6}'` survives.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const MAX_LIST_DEPTH: usize = 2;

const TEXT_ARGS: &[ArgSpec] = &[
    ArgSpec::new("target", Side::Target, ArgType::Str),
    ArgSpec::new("candidates", Side::Target, ArgType::StrList),
    ArgSpec::new("use_latex", Side::Target, ArgType::Bool),
    ArgSpec::new("ignore_space", Side::Target, ArgType::Bool),
    ArgSpec::new("ignore_punc", Side::Target, ArgType::Bool),
    ArgSpec::new("ignore_case", Side::Target, ArgType::Bool),
    ArgSpec::new("ignore_st", Side::Target, ArgType::Bool),
    ArgSpec::new("predict", Side::Predict, ArgType::Str),
];
const EXPR_ARGS: &[ArgSpec] =
    &[ArgSpec::new("target", Side::Target, ArgType::Str), ArgSpec::new("predict", Side::Predict, ArgType::Str)];
const TIME_ARGS: &[ArgSpec] = &[
    ArgSpec::new("target", Side::Target, ArgType::Str),
    ArgSpec::new("tformat", Side::Target, ArgType::Str),
    ArgSpec::new("predict", Side::Predict, ArgType::Str),
    ArgSpec::new("pformat", Side::Predict, ArgType::Str),
];
const LIST_ARGS: &[ArgSpec] = &[
    ArgSpec::new("target", Side::Target, ArgType::StrList),
    ArgSpec::new("candidates", Side::Target, ArgType::StrListList),
    ArgSpec::new("predict", Side::Predict, ArgType::StrList),
];
// Coordinate predictions keep whatever shape the response had; the verifier
// decides whether it is usable.
const COORD_ARGS: &[ArgSpec] =
    &[ArgSpec::new("target", Side::Target, ArgType::IntListList), ArgSpec::new("predict", Side::Predict, ArgType::Any)];

/// The six deterministic verifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VerifierName {
    Text,
    Expr,
    Time,
    List,
    BBox,
    Point,
}

impl VerifierName {
    pub const ALL: [VerifierName; 6] = [
        VerifierName::Text,
        VerifierName::Expr,
        VerifierName::Time,
        VerifierName::List,
        VerifierName::BBox,
        VerifierName::Point,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VerifierName::Text => "text_verify",
            VerifierName::Expr => "expr_verify",
            VerifierName::Time => "time_verify",
            VerifierName::List => "list_verify",
            VerifierName::BBox => "bbox_verify",
            VerifierName::Point => "point_verify",
        }
    }

    pub fn from_ident(ident: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == ident)
    }

    /// Verifiers whose score is always 0 or 1.
    pub fn is_binary(self) -> bool {
        matches!(self, VerifierName::Expr | VerifierName::Time)
    }

    pub fn args(self) -> &'static [ArgSpec] {
        match self {
            VerifierName::Text => TEXT_ARGS,
            VerifierName::Expr => EXPR_ARGS,
            VerifierName::Time => TIME_ARGS,
            VerifierName::List => LIST_ARGS,
            VerifierName::BBox | VerifierName::Point => COORD_ARGS,
        }
    }

    pub fn arg(self, name: &str) -> Option<&'static ArgSpec> {
        self.args().iter().find(|a| a.name == name)
    }

    /// Python-style signature of the rubric-side call.
    pub fn target_signature(self) -> &'static str {
        match self {
            VerifierName::Text => "text_verify(target: str = None, candidates: List[str] = None, use_latex: bool = False, ignore_space: bool = False, ignore_punc: bool = False, ignore_case: bool = False, ignore_st: bool = False)",
            VerifierName::Expr => "expr_verify(target: str)",
            VerifierName::Time => "time_verify(target: str, tformat: str)",
            VerifierName::List => "list_verify(target: List[str] = None, candidates: List[List[str]] = None)",
            VerifierName::BBox => "bbox_verify(target: List[List[int]])",
            VerifierName::Point => "point_verify(target: List[List[int]])",
        }
    }

    /// Python-style signature of the scoring-side call.
    pub fn predict_signature(self) -> &'static str {
        match self {
            VerifierName::Text => "text_verify(predict: str)",
            VerifierName::Expr => "expr_verify(predict: str)",
            VerifierName::Time => "time_verify(predict: str, pformat: str)",
            VerifierName::List => "list_verify(predict: List[str])",
            VerifierName::BBox => "bbox_verify(predict: List[List[int]])",
            VerifierName::Point => "point_verify(predict: List[List[int]])",
        }
    }
}

impl fmt::Display for VerifierName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which stage of the two-stage interface supplies an argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Written into the rubric `reference` and hidden from the extractor.
    Target,
    /// Emitted by the reward model in the scoring `credit` field.
    Predict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgType {
    Str,
    Bool,
    StrList,
    StrListList,
    IntListList,
    Any,
}

impl ArgType {
    fn accepts(self, lit: &Literal) -> bool {
        fn all<F: Fn(&Literal) -> bool>(lit: &Literal, f: F) -> bool {
            matches!(lit, Literal::List(items) if items.iter().all(f))
        }
        match self {
            ArgType::Str => matches!(lit, Literal::Str(_)),
            ArgType::Bool => matches!(lit, Literal::Bool(_)),
            ArgType::StrList => all(lit, |l| matches!(l, Literal::Str(_))),
            ArgType::StrListList => all(lit, |l| all(l, |x| matches!(x, Literal::Str(_)))),
            ArgType::IntListList => all(lit, |l| all(l, |x| matches!(x, Literal::Int(_)))),
            ArgType::Any => true,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            ArgType::Str => "str",
            ArgType::Bool => "bool",
            ArgType::StrList => "List[str]",
            ArgType::StrListList => "List[List[str]]",
            ArgType::IntListList => "List[List[int]]",
            ArgType::Any => "literal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArgSpec {
    pub name: &'static str,
    pub side: Side,
    pub ty: ArgType,
}

impl ArgSpec {
    const fn new(name: &'static str, side: Side, ty: ArgType) -> Self {
        Self { name, side, ty }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Bool(bool),
    List(Vec<Literal>),
}

impl Literal {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Literal::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Literal::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Literal]> {
        match self {
            Literal::List(items) => Some(items),
            _ => None,
        }
    }

    /// Every string contained in this literal, depth first.
    pub fn strings(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn walk<'a>(lit: &'a Literal, out: &mut Vec<&'a str>) {
            match lit {
                Literal::Str(s) => out.push(s),
                Literal::List(items) => items.iter().for_each(|i| walk(i, out)),
                _ => {}
            }
        }
        walk(self, &mut out);
        out
    }

    /// True for `''` and `[]`, the conventional "nothing found" predictions.
    pub fn is_empty_value(&self) -> bool {
        match self {
            Literal::Str(s) => s.is_empty(),
            Literal::List(items) => items.is_empty(),
            _ => false,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => {
                f.write_str("'")?;
                for c in s.chars() {
                    match c {
                        '\\' => f.write_str("\\\\")?,
                        '\'' => f.write_str("\\'")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("'")
            }
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Bool(true) => f.write_str("True"),
            Literal::Bool(false) => f.write_str("False"),
            Literal::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A parsed verifier call: name plus keyword arguments in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifierCall {
    pub name: VerifierName,
    pub args: Vec<(String, Literal)>,
}

impl VerifierCall {
    pub fn new(name: VerifierName) -> Self {
        Self { name, args: Vec::new() }
    }

    pub fn with_arg(mut self, key: &str, value: Literal) -> Self {
        self.args.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Literal> {
        self.args.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn args_on(&self, side: Side) -> impl Iterator<Item = &(String, Literal)> {
        let name = self.name;
        self.args.iter().filter(move |(k, _)| name.arg(k).is_some_and(|s| s.side == side))
    }

    pub fn target_args(&self) -> impl Iterator<Item = &(String, Literal)> {
        self.args_on(Side::Target)
    }

    pub fn predict_args(&self) -> impl Iterator<Item = &(String, Literal)> {
        self.args_on(Side::Predict)
    }

    pub fn has_target_args(&self) -> bool {
        self.target_args().next().is_some()
    }

    pub fn has_predict_args(&self) -> bool {
        self.predict_args().next().is_some()
    }
}

impl fmt::Display for VerifierCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, (k, v)) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for VerifierCall {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VerifierCall {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_call(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CallErrorKind {
    #[error("unknown verifier `{0}`")]
    UnknownVerifier(String),
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("unbalanced brackets")]
    Unbalanced,
    #[error("positional arguments are not allowed")]
    Positional,
    #[error("duplicate keyword `{0}`")]
    DuplicateKeyword(String),
    #[error("unsupported literal")]
    UnsupportedLiteral,
    #[error("integer out of range")]
    IntegerOverflow,
    #[error("lists nest at most {MAX_LIST_DEPTH} levels")]
    NestingTooDeep,
    #[error("trailing input after call")]
    TrailingInput,
    #[error("`{verifier}` has no argument `{arg}`")]
    UnknownArgument { verifier: VerifierName, arg: String },
    #[error("argument `{arg}` must be {expected}")]
    ArgumentType { arg: String, expected: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} (byte {offset})")]
pub struct CallParseError {
    pub offset: usize,
    pub kind: CallErrorKind,
}

/// True when `text` is shaped like a call to one of the known verifiers,
/// i.e. a verifier name followed by an opening parenthesis.
pub fn looks_like_call(text: &str) -> bool {
    let t = text.trim_start();
    VerifierName::ALL.iter().any(|n| t.strip_prefix(n.as_str()).is_some_and(|rest| rest.trim_start().starts_with('(')))
}

/// Parses and type-checks a call expression against the verifier signatures.
pub fn parse_call(text: &str) -> Result<VerifierCall, CallParseError> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    let name_start = p.pos;
    let ident = p.ident().ok_or(p.err(CallErrorKind::Expected("verifier name")))?;
    let name = VerifierName::from_ident(ident)
        .ok_or(CallParseError { offset: name_start, kind: CallErrorKind::UnknownVerifier(ident.to_string()) })?;
    p.skip_ws();
    p.expect(b'(', "`(`")?;
    let mut call = VerifierCall::new(name);
    loop {
        p.skip_ws();
        match p.peek() {
            None => return Err(p.err(CallErrorKind::Unbalanced)),
            Some(b')') => {
                p.pos += 1;
                break;
            }
            _ => {}
        }
        let key_start = p.pos;
        let Some(key) = p.ident() else {
            // A literal in argument position is a positional argument.
            return Err(CallParseError {
                offset: key_start,
                kind: if p.literal(0).is_ok() {
                    CallErrorKind::Positional
                } else {
                    CallErrorKind::Expected("keyword argument")
                },
            });
        };
        p.skip_ws();
        if p.peek() != Some(b'=') {
            return Err(CallParseError { offset: key_start, kind: CallErrorKind::Positional });
        }
        p.pos += 1;
        p.skip_ws();
        let value_start = p.pos;
        let value = p.literal(0)?;
        if call.get(key).is_some() {
            return Err(CallParseError { offset: key_start, kind: CallErrorKind::DuplicateKeyword(key.to_string()) });
        }
        let spec = name.arg(key).ok_or_else(|| CallParseError {
            offset: key_start,
            kind: CallErrorKind::UnknownArgument { verifier: name, arg: key.to_string() },
        })?;
        if !spec.ty.accepts(&value) {
            return Err(CallParseError {
                offset: value_start,
                kind: CallErrorKind::ArgumentType { arg: key.to_string(), expected: spec.ty.describe() },
            });
        }
        call.args.push((key.to_string(), value));
        p.skip_ws();
        match p.peek() {
            Some(b',') => p.pos += 1,
            Some(b')') => {}
            None => return Err(p.err(CallErrorKind::Unbalanced)),
            Some(_) => return Err(p.err(CallErrorKind::Expected("`,` or `)`"))),
        }
    }
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.err(CallErrorKind::TrailingInput));
    }
    Ok(call)
}

/// Parses a bare literal (used for coordinate predictions given as strings).
pub fn parse_literal(text: &str) -> Result<Literal, CallParseError> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    let lit = p.literal(0)?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.err(CallErrorKind::TrailingInput));
    }
    Ok(lit)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, kind: CallErrorKind) -> CallParseError {
        CallParseError { offset: self.pos, kind }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, byte: u8, what: &'static str) -> Result<(), CallParseError> {
        match self.peek() {
            Some(b) if b == byte => {
                self.pos += 1;
                Ok(())
            }
            None => Err(self.err(CallErrorKind::UnexpectedEnd)),
            Some(_) => Err(self.err(CallErrorKind::Expected(what))),
        }
    }

    /// `[A-Za-z_][A-Za-z0-9_]*`, not consuming a raw-string prefix.
    fn ident(&mut self) -> Option<&'a str> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        match bytes.get(start) {
            Some(c) if c.is_ascii_alphabetic() || *c == b'_' => {}
            _ => return None,
        }
        if matches!(bytes.get(start), Some(b'r' | b'R')) && matches!(bytes.get(start + 1), Some(b'\'' | b'"')) {
            return None;
        }
        let mut end = start + 1;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        let word = &self.src[start..end];
        if matches!(word, "True" | "False") {
            return None;
        }
        self.pos = end;
        Some(word)
    }

    fn literal(&mut self, depth: usize) -> Result<Literal, CallParseError> {
        let bytes = self.src.as_bytes();
        match self.peek() {
            None => Err(self.err(CallErrorKind::UnexpectedEnd)),
            Some(b'\'' | b'"') => self.string(false),
            Some(b'r' | b'R') if matches!(bytes.get(self.pos + 1), Some(b'\'' | b'"')) => {
                self.pos += 1;
                self.string(true)
            }
            Some(b'[') => self.list(depth),
            Some(c) if c == b'-' || c.is_ascii_digit() => self.integer(),
            Some(_) => {
                let rest = &self.src[self.pos..];
                for (word, value) in [("True", true), ("False", false)] {
                    if let Some(after) = rest.strip_prefix(word) {
                        let boundary = after.bytes().next().is_none_or(|b| !(b.is_ascii_alphanumeric() || b == b'_'));
                        if boundary {
                            self.pos += word.len();
                            return Ok(Literal::Bool(value));
                        }
                    }
                }
                Err(self.err(CallErrorKind::UnsupportedLiteral))
            }
        }
    }

    fn string(&mut self, raw: bool) -> Result<Literal, CallParseError> {
        let start = self.pos;
        let quote = self.src.as_bytes()[self.pos];
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((i, c)) = chars.next() {
            if c as u32 == quote as u32 {
                self.pos += i + 1;
                return Ok(Literal::Str(out));
            }
            if c == '\\' {
                match chars.clone().next() {
                    Some((_, next)) if !raw && (next == '\\' || next == '\'' || next == '"') => {
                        chars.next();
                        out.push(next);
                    }
                    Some((_, next)) if raw && next as u32 == quote as u32 => {
                        // r'..\'..' keeps the backslash but does not terminate.
                        chars.next();
                        out.push('\\');
                        out.push(next);
                    }
                    _ => out.push('\\'),
                }
                continue;
            }
            out.push(c);
        }
        Err(CallParseError { offset: start, kind: CallErrorKind::UnterminatedString })
    }

    fn integer(&mut self) -> Result<Literal, CallParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        if bytes[end] == b'-' {
            end += 1;
        }
        let digits_start = end;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        if end == digits_start {
            return Err(self.err(CallErrorKind::UnsupportedLiteral));
        }
        if matches!(bytes.get(end), Some(b'.' | b'e' | b'E' | b'_' | b'x' | b'j'))
            || bytes.get(end).is_some_and(|b| b.is_ascii_alphabetic())
        {
            return Err(self.err(CallErrorKind::UnsupportedLiteral));
        }
        let value = self.src[start..end].parse::<i64>().map_err(|_| self.err(CallErrorKind::IntegerOverflow))?;
        self.pos = end;
        Ok(Literal::Int(value))
    }

    fn list(&mut self, depth: usize) -> Result<Literal, CallParseError> {
        if depth >= MAX_LIST_DEPTH {
            return Err(self.err(CallErrorKind::NestingTooDeep));
        }
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(self.err(CallErrorKind::Unbalanced)),
                Some(b']') => {
                    self.pos += 1;
                    return Ok(Literal::List(items));
                }
                _ => {}
            }
            items.push(self.literal(depth + 1)?);
            self.skip_ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b']') => {}
                None => return Err(self.err(CallErrorKind::Unbalanced)),
                Some(b')') => return Err(self.err(CallErrorKind::Unbalanced)),
                Some(_) => return Err(self.err(CallErrorKind::Expected("`,` or `]`"))),
            }
        }
    }
}
