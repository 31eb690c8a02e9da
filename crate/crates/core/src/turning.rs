//! Turning functions of polygons and the L2 turning distance.
//!
//! A turning function maps normalized arc length `s ∈ [0, 1)` to the
//! direction of the polygon boundary at `s`. It is a step function with one
//! step per vertex and is extended cyclically by `Θ(s + 1) = Θ(s) + 2π`.
//! The distance between two polygons is the L2 distance between their
//! turning functions, minimized over a rotation offset and over the shift of
//! the reference point.
//!
//! For `p = 2` the optimal rotation at a fixed shift has a closed form, and
//! the squared distance is concave in the shift between consecutive
//! breakpoint coincidences, so the minimum over shifts is attained at one of
//! the `m·n` shifts that align a breakpoint of one function with a
//! breakpoint of the other. Every such shift is evaluated exactly.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Polygon};

/// Distances at or below this are treated as zero.
pub const EPS_TURN: f64 = 1e-9;

/// Cells of the merged partition narrower than this come from breakpoints
/// that coincide up to rounding and are skipped. Kept, a cell of width
/// `1e-16` under a jump of `π` alone contributes `3e-8` to the distance.
const SLIVER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Break {
    /// Normalized arc length where this step starts.
    pub s: f64,
    /// Boundary direction in radians on `[s, next s)`.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurningFunction {
    breaks: Vec<Break>,
}

impl TurningFunction {
    /// Turning function of a counterclockwise polygon, with the reference
    /// point at the lexicographically smallest vertex.
    pub fn from_polygon(poly: &Polygon) -> Result<Self> {
        let start = poly
            .vertices
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.lex_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Self::from_polygon_at(poly, start)
    }

    /// Turning function with the reference point at vertex `start`.
    pub fn from_polygon_at(poly: &Polygon, start: usize) -> Result<Self> {
        let n = poly.len();
        if n < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "turning function needs at least 3 vertices, got {n}"
            )));
        }
        let v = |i: usize| poly.vertices[(start + i) % n];
        let edges: Vec<Point2> = (0..n)
            .map(|i| {
                let (a, b) = (v(i), v(i + 1));
                Point2::new(b.x - a.x, b.y - a.y)
            })
            .collect();
        let lengths: Vec<f64> = edges.iter().map(|e| e.x.hypot(e.y)).collect();
        let perimeter: f64 = lengths.iter().sum();
        if !(perimeter > 0.0) || lengths.contains(&0.0) {
            return Err(Error::DegeneratePolygon(
                "polygon has a zero-length edge".into(),
            ));
        }

        let mut breaks = Vec::with_capacity(n);
        let mut angle = edges[0].y.atan2(edges[0].x);
        let mut arc = 0.0;
        breaks.push(Break { s: 0.0, angle });
        for i in 1..n {
            let (prev, cur) = (edges[i - 1], edges[i]);
            angle += (prev.x * cur.y - prev.y * cur.x).atan2(prev.x * cur.x + prev.y * cur.y);
            arc += lengths[i - 1];
            breaks.push(Break {
                s: arc / perimeter,
                angle,
            });
        }
        Ok(Self { breaks })
    }

    pub fn breaks(&self) -> &[Break] {
        &self.breaks
    }

    pub fn len(&self) -> usize {
        self.breaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breaks.is_empty()
    }

    /// Turn accumulated over one full traversal, `2π` for a simple CCW
    /// polygon.
    pub fn total_turn(&self) -> f64 {
        let first = self.breaks[0].angle;
        let last = self.breaks[self.breaks.len() - 1].angle;
        // closing turn from the last edge back to the first
        let d = first - last;
        last - first + d.sin().atan2(d.cos())
    }

    /// Value at `s`, using the cyclic extension outside `[0, 1)`.
    pub fn eval(&self, s: f64) -> f64 {
        let wraps = s.floor();
        let local = s - wraps;
        let idx = self.breaks.partition_point(|b| b.s <= local).max(1) - 1;
        self.breaks[idx].angle + TAU * wraps
    }

    /// Debug dump, one `s,angle_radians` row per step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,angle_radians\n");
        for b in &self.breaks {
            out.push_str(&format!("{},{}\n", b.s, b.angle));
        }
        out
    }

    /// Pieces of `s ↦ Θ(s + shift)` on `[0, 1)` as `(start, value)` pairs in
    /// increasing `start`, the first one starting at 0. `shift ∈ [0, 1)`.
    fn shifted_pieces(&self, shift: f64) -> Vec<(f64, f64)> {
        let k = self.breaks.partition_point(|b| b.s <= shift).max(1);
        let mut pieces = Vec::with_capacity(self.breaks.len() + 1);
        pieces.push((0.0, self.breaks[k - 1].angle));
        for b in &self.breaks[k..] {
            pieces.push((b.s - shift, b.angle));
        }
        for b in &self.breaks[..k] {
            let start = b.s + 1.0 - shift;
            if start < 1.0 {
                pieces.push((start, b.angle + TAU));
            }
        }
        pieces
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftDistance {
    /// Optimal rotation added to the shifted function.
    pub theta_star: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningDistanceResult {
    pub distance: f64,
    /// Shift of the reference point of the first polygon, in `[0, 1)`.
    pub best_shift: f64,
    /// Rotation in radians added to the first function at the best shift.
    pub best_rotation: f64,
}

impl TurningDistanceResult {
    pub fn is_zero(&self) -> bool {
        self.distance <= EPS_TURN
    }
}

/// Only `p = 2` is supported.
fn check_norm(p: u32) -> Result<()> {
    if p == 2 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "only the L2 turning distance is implemented, got p = {p}"
        )))
    }
}

/// L2 distance between `s ↦ f(s + shift) + θ` and `g`, with `θ` chosen
/// optimally in closed form.
pub fn distance_at_shift(
    f: &TurningFunction,
    g: &TurningFunction,
    shift: f64,
    p: u32,
) -> Result<ShiftDistance> {
    check_norm(p)?;
    Ok(distance_at_shift_l2(f, g, shift))
}

fn distance_at_shift_l2(f: &TurningFunction, g: &TurningFunction, shift: f64) -> ShiftDistance {
    let fp = f.shifted_pieces(shift.rem_euclid(1.0));
    let gp: Vec<(f64, f64)> = g.breaks.iter().map(|b| (b.s, b.angle)).collect();

    // h = f_shifted - g is constant on each cell of the merged partition
    let mut cells: Vec<(f64, f64)> = Vec::with_capacity(fp.len() + gp.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos = 0.0;
    while pos < 1.0 {
        let next_f = fp.get(i + 1).map_or(1.0, |p| p.0);
        let next_g = gp.get(j + 1).map_or(1.0, |p| p.0);
        let end = next_f.min(next_g).min(1.0);
        if end - pos > SLIVER {
            cells.push((end - pos, fp[i].1 - gp[j].1));
        }
        if next_f <= end && i + 1 < fp.len() {
            i += 1;
        }
        if next_g <= end && j + 1 < gp.len() {
            j += 1;
        }
        pos = end;
    }
    // centered second pass; the raw second moment cancels badly when the
    // functions differ by a large constant
    let mean: f64 = cells.iter().map(|&(w, h)| w * h).sum();
    let d2: f64 = cells
        .iter()
        .map(|&(w, h)| w * (h - mean) * (h - mean))
        .sum();
    let theta_star = -mean;
    ShiftDistance {
        theta_star,
        distance: d2.sqrt(),
    }
}

/// Turning distance minimized over rotation and reference-point shift.
pub fn turning_distance(
    f: &TurningFunction,
    g: &TurningFunction,
    p: u32,
) -> Result<TurningDistanceResult> {
    check_norm(p)?;
    let mut best: Option<TurningDistanceResult> = None;
    for bf in &f.breaks {
        for bg in &g.breaks {
            let mut shift = (bf.s - bg.s).rem_euclid(1.0);
            if shift >= 1.0 {
                shift = 0.0;
            }
            let at = distance_at_shift_l2(f, g, shift);
            if best.is_none_or(|b| at.distance < b.distance) {
                best = Some(TurningDistanceResult {
                    distance: at.distance,
                    best_shift: shift,
                    best_rotation: at.theta_star,
                });
            }
        }
    }
    best.ok_or_else(|| Error::DegeneratePolygon("empty turning function".into()))
}

/// Convenience wrapper building both turning functions.
pub fn polygon_distance(a: &Polygon, b: &Polygon, p: u32) -> Result<TurningDistanceResult> {
    turning_distance(
        &TurningFunction::from_polygon(a)?,
        &TurningFunction::from_polygon(b)?,
        p,
    )
}
