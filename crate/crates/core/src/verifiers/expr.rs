//! Expression equivalence for option letters, numbers and a small LaTeX subset.
//!
//! Values are evaluated with exact `i128` rationals where possible; square
//! roots of non-squares and overflowing arithmetic fall back to `f64` with a
//! relative tolerance. Anything that does not evaluate compares as a
//! whitespace-free string.

use alloc::string::String;
use alloc::vec::Vec;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};

type Rational = Ratio<i128>;

const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ExprValue {
    Letter(char),
    Exact(Rational),
    Approx(f64),
    Symbolic(String),
}

impl ExprValue {
    fn to_f64(&self) -> Option<f64> {
        match self {
            ExprValue::Exact(r) => Some(r.numer().to_f64()? / r.denom().to_f64()?),
            ExprValue::Approx(v) => Some(*v),
            _ => None,
        }
    }

    pub fn equivalent(&self, other: &ExprValue) -> bool {
        match (self, other) {
            (ExprValue::Letter(a), ExprValue::Letter(b)) => a == b,
            (ExprValue::Exact(a), ExprValue::Exact(b)) => a == b,
            (ExprValue::Symbolic(a), ExprValue::Symbolic(b)) => a == b,
            (a, b) => match (a.to_f64(), b.to_f64()) {
                (Some(x), Some(y)) => {
                    let scale = libm::fabs(x).max(libm::fabs(y));
                    libm::fabs(x - y) <= REL_TOL * scale
                }
                _ => false,
            },
        }
    }
}

/// 1.0 iff both sides evaluate and are equivalent.
pub fn expr_verify(target: &str, predict: &str) -> f64 {
    match (parse_expr(target), parse_expr(predict)) {
        (Some(t), Some(p)) if t.equivalent(&p) => 1.0,
        _ => 0.0,
    }
}

pub fn parse_expr(text: &str) -> Option<ExprValue> {
    let cleaned = preprocess(text);
    if cleaned.is_empty() {
        return None;
    }
    if let Some(letter) = option_letter(&cleaned) {
        return Some(ExprValue::Letter(letter));
    }
    let chars: Vec<char> = cleaned.chars().collect();
    let mut p = Eval { s: &chars, pos: 0 };
    if let Some(v) = p.expr() {
        if p.pos == chars.len() {
            return Some(v.into_value());
        }
    }
    Some(ExprValue::Symbolic(cleaned))
}

fn option_letter(s: &str) -> Option<char> {
    let mut t = s.strip_suffix('.').unwrap_or(s);
    if let Some(inner) = t.strip_prefix('(').and_then(|x| x.strip_suffix(')')) {
        t = inner;
    }
    let mut it = t.chars();
    match (it.next(), it.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => Some(c.to_ascii_uppercase()),
        _ => None,
    }
}

fn strip_wrapper<'a>(s: &'a str, open: &str, close: &str) -> Option<&'a str> {
    s.strip_prefix(open)?.strip_suffix(close)
}

fn preprocess(text: &str) -> String {
    let mut s = text.trim();
    loop {
        let before = s;
        for (open, close) in [("$$", "$$"), ("$", "$"), ("\\(", "\\)"), ("\\[", "\\]"), ("\\boxed{", "}")] {
            if let Some(inner) = strip_wrapper(s, open, close) {
                s = inner.trim();
            }
        }
        if s == before {
            break;
        }
    }
    let mut t = String::from(s);
    for (from, to) in [
        ("\\displaystyle", ""),
        ("\\dfrac", "\\frac"),
        ("\\tfrac", "\\frac"),
        ("\\left", ""),
        ("\\right", ""),
        ("\\,", ""),
        ("\\!", ""),
        ("\\;", ""),
        ("\\ ", ""),
        ("\\times", "*"),
        ("\\cdot", "*"),
        ("\\div", "/"),
        ("\\%", "%"),
        ("\u{00d7}", "*"),
        ("\u{00b7}", "*"),
        ("\u{00f7}", "/"),
        ("\u{2212}", "-"),
    ] {
        if t.contains(from) {
            t = t.replace(from, to);
        }
    }
    t.chars().filter(|c| !c.is_whitespace()).collect()
}

#[derive(Debug, Clone, Copy)]
enum Num {
    Exact(Rational),
    Approx(f64),
}

impl Num {
    fn f(self) -> f64 {
        match self {
            Num::Exact(r) => r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN),
            Num::Approx(v) => v,
        }
    }

    fn into_value(self) -> ExprValue {
        match self {
            Num::Exact(r) => ExprValue::Exact(r),
            Num::Approx(v) => ExprValue::Approx(v),
        }
    }

    fn binary(
        self,
        rhs: Num,
        exact: impl Fn(&Rational, &Rational) -> Option<Rational>,
        approx: impl Fn(f64, f64) -> f64,
    ) -> Option<Num> {
        if let (Num::Exact(a), Num::Exact(b)) = (self, rhs) {
            if let Some(r) = exact(&a, &b) {
                return Some(Num::Exact(r));
            }
        }
        let v = approx(self.f(), rhs.f());
        v.is_finite().then_some(Num::Approx(v))
    }

    fn add(self, rhs: Num) -> Option<Num> {
        self.binary(rhs, |a, b| a.checked_add(b), |a, b| a + b)
    }

    fn sub(self, rhs: Num) -> Option<Num> {
        self.binary(rhs, |a, b| a.checked_sub(b), |a, b| a - b)
    }

    fn mul(self, rhs: Num) -> Option<Num> {
        self.binary(rhs, |a, b| a.checked_mul(b), |a, b| a * b)
    }

    fn div(self, rhs: Num) -> Option<Num> {
        if rhs.f() == 0.0 {
            return None;
        }
        self.binary(rhs, |a, b| a.checked_div(b), |a, b| a / b)
    }

    fn neg(self) -> Num {
        match self {
            Num::Exact(r) if *r.numer() != i128::MIN => Num::Exact(-r),
            other => Num::Approx(-other.f()),
        }
    }

    fn pow(self, exp: Num) -> Option<Num> {
        if let (Num::Exact(base), Num::Exact(e)) = (self, exp) {
            if e.is_integer() && e.numer().abs() <= 512 {
                let n = *e.numer();
                let mut acc = Rational::from_integer(1);
                let mut ok = true;
                for _ in 0..n.abs() {
                    match acc.checked_mul(&base) {
                        Some(v) => acc = v,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    if n < 0 {
                        if acc.is_zero() {
                            return None;
                        }
                        acc = acc.recip();
                    }
                    return Some(Num::Exact(acc));
                }
            }
        }
        let v = libm::pow(self.f(), exp.f());
        v.is_finite().then_some(Num::Approx(v))
    }

    fn sqrt(self) -> Option<Num> {
        if self.f() < 0.0 {
            return None;
        }
        if let Num::Exact(r) = self {
            if let (Some(n), Some(d)) = (isqrt_exact(*r.numer()), isqrt_exact(*r.denom())) {
                return Some(Num::Exact(Rational::new(n, d)));
            }
        }
        Some(Num::Approx(libm::sqrt(self.f())))
    }
}

fn isqrt_exact(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    let guess = libm::sqrt(n as f64) as i128;
    (guess.saturating_sub(2)..=guess + 2).find(|g| *g >= 0 && i128::checked_mul(*g, *g) == Some(n))
}

struct Eval<'a> {
    s: &'a [char],
    pos: usize,
}

impl Eval<'_> {
    fn peek(&self) -> Option<char> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_command(&mut self, name: &str) -> bool {
        let n = name.chars().count();
        if self.s.len() < self.pos + n || !self.s[self.pos..self.pos + n].iter().copied().eq(name.chars()) {
            return false;
        }
        // Reject prefixes of longer macro names.
        if self.s.get(self.pos + n).is_some_and(|c| c.is_ascii_alphabetic()) {
            return false;
        }
        self.pos += n;
        true
    }

    fn expr(&mut self) -> Option<Num> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(self.term()?)?;
            } else if self.eat('-') {
                acc = acc.sub(self.term()?)?;
            } else {
                return Some(acc);
            }
        }
    }

    fn term(&mut self) -> Option<Num> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(self.unary()?)?;
            } else if self.eat('/') {
                acc = acc.div(self.unary()?)?;
            } else if self.starts_primary() {
                // Juxtaposition such as 2\sqrt{4} or 3(1+1).
                acc = acc.mul(self.power()?)?;
            } else {
                return Some(acc);
            }
        }
    }

    fn starts_primary(&self) -> bool {
        matches!(self.peek(), Some('(' | '{' | '\\'))
    }

    fn unary(&mut self) -> Option<Num> {
        if self.eat('-') {
            return Some(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Option<Num> {
        let base = self.postfix()?;
        if self.eat('^') {
            let exp = if self.peek() == Some('{') { self.group()? } else { self.unary()? };
            return base.pow(exp);
        }
        Some(base)
    }

    fn postfix(&mut self) -> Option<Num> {
        let mut v = self.primary()?;
        while self.eat('%') {
            v = v.div(Num::Exact(Rational::from_integer(100)))?;
        }
        Some(v)
    }

    fn group(&mut self) -> Option<Num> {
        if !self.eat('{') {
            // \frac12 style single-digit arguments.
            let c = self.peek()?;
            let d = c.to_digit(10)?;
            self.pos += 1;
            return Some(Num::Exact(Rational::from_integer(d as i128)));
        }
        let v = self.expr()?;
        self.eat('}').then_some(v)
    }

    fn primary(&mut self) -> Option<Num> {
        match self.peek()? {
            '(' => {
                self.pos += 1;
                let v = self.expr()?;
                self.eat(')').then_some(v)
            }
            '{' => self.group(),
            '\\' => {
                if self.eat_command("\\frac") {
                    let n = self.group()?;
                    let d = self.group()?;
                    n.div(d)
                } else if self.eat_command("\\sqrt") {
                    self.group()?.sqrt()
                } else {
                    None
                }
            }
            c if c.is_ascii_digit() || c == '.' => self.number(),
            _ => None,
        }
    }

    fn number(&mut self) -> Option<Num> {
        let start = self.pos;
        let mut digits = String::new();
        let mut frac_len = 0u32;
        let mut seen_dot = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                digits.push(c);
                if seen_dot {
                    frac_len += 1;
                }
            } else if c == '.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits.is_empty() {
            self.pos = start;
            return None;
        }
        let mut exp10: i32 = 0;
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            let neg = if self.eat('-') {
                true
            } else {
                self.eat('+');
                false
            };
            let mut e = String::new();
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                e.push(c);
                self.pos += 1;
            }
            match e.parse::<i32>() {
                Ok(v) if !e.is_empty() => exp10 = if neg { -v } else { v },
                _ => self.pos = save,
            }
        }
        let scale = exp10 - frac_len as i32;
        if let Ok(mantissa) = digits.parse::<i128>() {
            if let Some(r) = scaled(mantissa, scale) {
                return Some(Num::Exact(r));
            }
        }
        let text: String = self.s[start..self.pos].iter().collect();
        let v: f64 = text.parse().ok()?;
        v.is_finite().then_some(Num::Approx(v))
    }
}

fn scaled(mantissa: i128, scale: i32) -> Option<Rational> {
    let pow = 10i128.checked_pow(scale.unsigned_abs())?;
    if scale >= 0 {
        Some(Rational::from_integer(mantissa.checked_mul(pow)?))
    } else {
        Some(Rational::new(mantissa, pow))
    }
}
