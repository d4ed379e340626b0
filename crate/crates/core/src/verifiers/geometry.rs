//! Box and point verifiers on the 0–1000 normalized image grid.

use alloc::vec::Vec;

use super::{assignment_total, hungarian};
use crate::schema::{parse_literal, Literal};

const GRID_MAX: i64 = 1000;

fn clamp(v: i64) -> i64 {
    v.clamp(0, GRID_MAX)
}

/// Axis-aligned box with `x1 <= x2`, `y1 <= y2`, all within the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

impl BBox {
    /// Sorts corners and clamps them to the grid.
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Self {
        let (x1, x2) = (clamp(x1.min(x2)), clamp(x1.max(x2)));
        let (y1, y2) = (clamp(y1.min(y2)), clamp(y1.max(y2)));
        Self { x1, y1, x2, y2 }
    }

    pub fn area(&self) -> f64 {
        ((self.x2 - self.x1) * (self.y2 - self.y1)) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub fn new(x: i64, y: i64) -> Self {
        Self { x: clamp(x), y: clamp(y) }
    }
}

/// Intersection over union; a zero-area box only matches an identical box.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    if a.area() == 0.0 || b.area() == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    let w = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0);
    let h = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0);
    let inter = (w * h) as f64;
    inter / (a.area() + b.area() - inter)
}

/// `max(0, 1 - d / scale)` for Euclidean distance `d`.
pub fn point_proximity(a: &Point, b: &Point, scale: f64) -> f64 {
    let (dx, dy) = ((a.x - b.x) as f64, (a.y - b.y) as f64);
    let d = libm::sqrt(dx * dx + dy * dy);
    (1.0 - d / scale).max(0.0)
}

/// Integer tuples of width `arity`. Accepts a list of tuples, a single flat
/// tuple, or a string holding either form; anything else is `None`.
fn tuples(lit: &Literal, arity: usize, allow_string: bool) -> Option<Vec<Vec<i64>>> {
    let ints = |items: &[Literal]| -> Option<Vec<i64>> {
        items.iter().map(|l| if let Literal::Int(i) = l { Some(*i) } else { None }).collect()
    };
    match lit {
        Literal::Str(s) if allow_string => tuples(&parse_literal(s.trim()).ok()?, arity, false),
        Literal::List(items) if items.is_empty() => Some(Vec::new()),
        Literal::List(items) if items.iter().all(|l| matches!(l, Literal::Int(_))) => {
            let flat = ints(items)?;
            (flat.len() == arity).then(|| alloc::vec![flat])
        }
        Literal::List(items) => items.iter().map(|l| ints(l.as_list()?).filter(|t| t.len() == arity)).collect(),
        _ => None,
    }
}

pub fn parse_boxes(lit: &Literal) -> Option<Vec<BBox>> {
    Some(tuples(lit, 4, true)?.into_iter().map(|t| BBox::new(t[0], t[1], t[2], t[3])).collect())
}

pub fn parse_points(lit: &Literal) -> Option<Vec<Point>> {
    Some(tuples(lit, 2, true)?.into_iter().map(|t| Point::new(t[0], t[1])).collect())
}

fn matched<T>(target: &[T], predict: &[T], score: impl Fn(&T, &T) -> f64) -> f64 {
    if target.is_empty() || predict.is_empty() {
        return 0.0;
    }
    let m: Vec<Vec<f64>> = target.iter().map(|t| predict.iter().map(|p| score(t, p)).collect()).collect();
    let total = assignment_total(&m, &hungarian(&m));
    (total / target.len().max(predict.len()) as f64).clamp(0.0, 1.0)
}

pub fn bbox_verify(target: &[BBox], predict: &[BBox]) -> f64 {
    matched(target, predict, iou)
}

pub fn point_verify(target: &[Point], predict: &[Point], scale: f64) -> f64 {
    matched(target, predict, |a, b| point_proximity(a, b, scale))
}
