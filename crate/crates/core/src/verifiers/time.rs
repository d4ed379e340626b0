//! Python `strptime`-style parsing for a directive subset, and partial-field
//! comparison of the results.
//!
//! Supported: `%Y %y %m %d %H %I %M %S %f %p %b %h %B %a %A %%`. Numeric
//! directives accept one or two digits (four for `%Y`, up to six for `%f`),
//! whitespace in the format matches one or more whitespace characters and
//! literal characters match case-insensitively.

use alloc::vec::Vec;

use super::VerifierError;

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];
const WEEKDAYS: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];

/// Fields populated by a parse; `None` means the format did not mention it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TimeFields {
    pub year: Option<i32>,
    pub month: Option<u32>,
    pub day: Option<u32>,
    pub hour: Option<Hour>,
    pub minute: Option<u32>,
    pub second: Option<u32>,
    pub microsecond: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hour {
    /// From `%H`, or `%I` together with `%p`.
    Clock24(u32),
    /// `%I` without `%p`: known only modulo 12.
    Clock12(u32),
}

impl Hour {
    fn agrees(self, other: Hour) -> bool {
        match (self, other) {
            (Hour::Clock24(a), Hour::Clock24(b)) => a == b,
            (Hour::Clock24(a), Hour::Clock12(b)) | (Hour::Clock12(b), Hour::Clock24(a)) => a % 12 == b % 12,
            (Hour::Clock12(a), Hour::Clock12(b)) => a % 12 == b % 12,
        }
    }
}

impl TimeFields {
    fn populated(&self) -> [bool; 7] {
        [
            self.year.is_some(),
            self.month.is_some(),
            self.day.is_some(),
            self.hour.is_some(),
            self.minute.is_some(),
            self.second.is_some(),
            self.microsecond.is_some(),
        ]
    }

    pub fn is_empty(&self) -> bool {
        !self.populated().iter().any(|p| *p)
    }

    /// Agreement on the fields populated by both sides; `None` if no field is shared.
    pub fn agrees_on_common(&self, other: &TimeFields) -> Option<bool> {
        fn cmp<T: PartialEq>(a: Option<T>, b: Option<T>, shared: &mut bool) -> bool {
            match (a, b) {
                (Some(x), Some(y)) => {
                    *shared = true;
                    x == y
                }
                _ => true,
            }
        }
        let mut shared = false;
        let mut ok = cmp(self.year, other.year, &mut shared)
            & cmp(self.month, other.month, &mut shared)
            & cmp(self.day, other.day, &mut shared)
            & cmp(self.minute, other.minute, &mut shared)
            & cmp(self.second, other.second, &mut shared)
            & cmp(self.microsecond, other.microsecond, &mut shared);
        if let (Some(a), Some(b)) = (self.hour, other.hour) {
            shared = true;
            ok &= a.agrees(b);
        }
        shared.then_some(ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    Literal(char),
    Space,
    Year4,
    Year2,
    Month,
    Day,
    Hour24,
    Hour12,
    Minute,
    Second,
    Micro,
    AmPm,
    MonthAbbr,
    MonthName,
    WeekdayAbbr,
    WeekdayName,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimeFormatError {
    #[error("unsupported directive %{0}")]
    UnsupportedDirective(char),
    #[error("format ends with a bare %")]
    DanglingPercent,
    #[error("value does not match format")]
    NoMatch,
    #[error("field out of range")]
    OutOfRange,
}

fn compile(format: &str) -> Result<Vec<Item>, TimeFormatError> {
    let mut items = Vec::new();
    let mut chars = format.chars();
    while let Some(c) = chars.next() {
        let item = match c {
            '%' => match chars.next().ok_or(TimeFormatError::DanglingPercent)? {
                'Y' => Item::Year4,
                'y' => Item::Year2,
                'm' => Item::Month,
                'd' => Item::Day,
                'H' => Item::Hour24,
                'I' => Item::Hour12,
                'M' => Item::Minute,
                'S' => Item::Second,
                'f' => Item::Micro,
                'p' => Item::AmPm,
                'b' | 'h' => Item::MonthAbbr,
                'B' => Item::MonthName,
                'a' => Item::WeekdayAbbr,
                'A' => Item::WeekdayName,
                '%' => Item::Literal('%'),
                other => return Err(TimeFormatError::UnsupportedDirective(other)),
            },
            c if c.is_whitespace() => {
                if items.last() == Some(&Item::Space) {
                    continue;
                }
                Item::Space
            }
            c => Item::Literal(c),
        };
        items.push(item);
    }
    Ok(items)
}

#[derive(Debug, Clone, Copy, Default)]
struct Raw {
    fields: TimeFields,
    hour12: Option<u32>,
    pm: Option<bool>,
}

fn digit_widths(item: Item) -> (usize, usize) {
    match item {
        Item::Year4 => (4, 4),
        Item::Micro => (1, 6),
        _ => (1, 2),
    }
}

fn set_numeric(mut raw: Raw, item: Item, text: &str) -> Option<Raw> {
    let v: u32 = text.parse().ok()?;
    let f = &mut raw.fields;
    match item {
        Item::Year4 => f.year = Some(v as i32),
        Item::Year2 => f.year = Some(if v < 69 { 2000 + v as i32 } else { 1900 + v as i32 }),
        Item::Month if (1..=12).contains(&v) => f.month = Some(v),
        Item::Day if (1..=31).contains(&v) => f.day = Some(v),
        Item::Hour24 if v < 24 => f.hour = Some(Hour::Clock24(v)),
        Item::Hour12 if (1..=12).contains(&v) => raw.hour12 = Some(v),
        Item::Minute if v < 60 => f.minute = Some(v),
        Item::Second if v <= 61 => f.second = Some(v),
        Item::Micro => {
            // Right-pad to six digits like Python does.
            let mut micro = v;
            for _ in text.len()..6 {
                micro *= 10;
            }
            f.microsecond = Some(micro);
        }
        _ => return None,
    }
    Some(raw)
}

fn match_name<'a>(input: &'a str, names: &[&str], abbreviated: bool) -> Vec<(usize, &'a str)> {
    let lower_prefix = |n: usize| -> Option<alloc::string::String> { input.get(..n).map(|s| s.to_lowercase()) };
    let mut hits = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let candidate = if abbreviated { &name[..3] } else { name };
        if lower_prefix(candidate.len()).as_deref() == Some(candidate) {
            hits.push((i, &input[candidate.len()..]));
        }
    }
    hits
}

fn matches(items: &[Item], input: &str, raw: Raw) -> Option<Raw> {
    let Some((&item, rest_items)) = items.split_first() else {
        return input.is_empty().then_some(raw);
    };
    match item {
        Item::Literal(c) => {
            let mut it = input.chars();
            let got = it.next()?;
            let same = got == c || (got.to_lowercase().eq(c.to_lowercase()));
            if same {
                matches(rest_items, it.as_str(), raw)
            } else {
                None
            }
        }
        Item::Space => {
            let trimmed = input.trim_start();
            if trimmed.len() == input.len() {
                return None;
            }
            matches(rest_items, trimmed, raw)
        }
        Item::AmPm => {
            let lower = input.get(..2)?.to_lowercase();
            let pm = match lower.as_str() {
                "am" => false,
                "pm" => true,
                _ => return None,
            };
            matches(rest_items, &input[2..], Raw { pm: Some(pm), ..raw })
        }
        Item::MonthAbbr | Item::MonthName => {
            for (i, rest) in match_name(input, &MONTHS, item == Item::MonthAbbr) {
                let mut next = raw;
                next.fields.month = Some(i as u32 + 1);
                if let Some(done) = matches(rest_items, rest, next) {
                    return Some(done);
                }
            }
            None
        }
        Item::WeekdayAbbr | Item::WeekdayName => {
            // Weekdays are accepted but never compared.
            match_name(input, &WEEKDAYS, item == Item::WeekdayAbbr)
                .into_iter()
                .find_map(|(_, rest)| matches(rest_items, rest, raw))
        }
        numeric => {
            let (min, max) = digit_widths(numeric);
            let available = input.bytes().take_while(u8::is_ascii_digit).count().min(max);
            (min..=available).rev().find_map(|w| {
                let next = set_numeric(raw, numeric, &input[..w])?;
                matches(rest_items, &input[w..], next)
            })
        }
    }
}

fn days_in_month(year: Option<i32>, month: u32) -> u32 {
    match month {
        4 | 6 | 9 | 11 => 30,
        2 => match year {
            Some(y) if !((y % 4 == 0 && y % 100 != 0) || y % 400 == 0) => 28,
            _ => 29,
        },
        _ => 31,
    }
}

/// Parses `value` with `format`, reporting which fields were populated.
pub fn parse_time(value: &str, format: &str) -> Result<TimeFields, TimeFormatError> {
    let items = compile(format)?;
    let raw = matches(&items, value.trim(), Raw::default()).ok_or(TimeFormatError::NoMatch)?;
    let mut fields = raw.fields;
    if let Some(h) = raw.hour12 {
        fields.hour = Some(match raw.pm {
            Some(pm) => Hour::Clock24(h % 12 + if pm { 12 } else { 0 }),
            None => Hour::Clock12(h),
        });
    }
    if let (Some(m), Some(d)) = (fields.month, fields.day) {
        if d > days_in_month(fields.year, m) {
            return Err(TimeFormatError::OutOfRange);
        }
    }
    Ok(fields)
}

/// 1.0 iff both sides parse, share at least one field and agree on every shared field.
///
/// A target that fails to parse is a rubric defect and is reported as an
/// error; a prediction that fails to parse scores 0.
pub fn time_verify(target: &str, tformat: &str, predict: &str, pformat: &str) -> Result<f64, VerifierError> {
    let t = parse_time(target, tformat).map_err(VerifierError::Format)?;
    if t.is_empty() {
        return Err(VerifierError::Format(TimeFormatError::NoMatch));
    }
    let Ok(p) = parse_time(predict, pformat) else {
        return Ok(0.0);
    };
    Ok(match t.agrees_on_common(&p) {
        Some(true) => 1.0,
        _ => 0.0,
    })
}
