//! Planar convex hulls and convex layers (onion peeling).
//!
//! Hulls are strict: vertices lying on the interior of a hull edge are not
//! hull vertices and stay behind for deeper layers.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};

/// Orientation tolerance in squared-pixel units.
pub const EPS_GEOM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Lexicographic `(x, y)` order.
    pub fn lex_cmp(&self, other: &Point2) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

/// Twice the signed area of triangle `(a, b, c)`; positive for a
/// counterclockwise turn.
#[inline]
pub fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// A closed polygon given by its vertices in counterclockwise order, without
/// repeating the first vertex at the end.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        0.5 * acc
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].dist(&self.vertices[(i + 1) % n]))
            .sum()
    }
}

/// One ring of the onion decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layer {
    pub depth: usize,
    /// Counterclockwise ring; the innermost layer may hold only 1 or 2 points.
    pub ring: Vec<Point2>,
}

impl Layer {
    /// Rings with fewer than three vertices have no interior.
    pub fn is_proper(&self) -> bool {
        self.ring.len() >= 3
    }

    pub fn polygon(&self) -> Polygon {
        Polygon::new(self.ring.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvexLayers {
    pub layers: Vec<Layer>,
}

impl ConvexLayers {
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn proper(&self) -> impl DoubleEndedIterator<Item = &Layer> {
        self.layers.iter().filter(|l| l.is_proper())
    }

    /// Debug dump, one `depth,x,y` row per ring vertex.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,x,y\n");
        for layer in &self.layers {
            for p in &layer.ring {
                out.push_str(&format!("{},{},{}\n", layer.depth, p.x, p.y));
            }
        }
        out
    }
}

/// Sorts lexicographically and removes exact duplicates.
fn sorted_unique(points: &[Point2]) -> Result<Vec<Point2>> {
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite coordinate ({}, {})",
            p.x, p.y
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup();
    Ok(pts)
}

/// Monotone chain over lexicographically sorted, duplicate-free points.
fn monotone_chain(pts: &[Point2]) -> Vec<Point2> {
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() + 1);
    // lower chain
    for &p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= EPS_GEOM {
            hull.pop();
        }
        hull.push(p);
    }
    // upper chain
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= EPS_GEOM
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Strict counterclockwise convex hull starting at the lexicographically
/// smallest point. Inputs of at most two distinct points come back sorted
/// and deduplicated; an all-collinear input yields its two extremes.
pub fn convex_hull(points: &[Point2]) -> Result<Vec<Point2>> {
    let pts = sorted_unique(points)?;
    Ok(monotone_chain(&pts))
}

/// Peels the point set into nested convex layers, outermost first.
pub fn convex_layers(points: &[Point2]) -> Result<ConvexLayers> {
    let mut remaining = sorted_unique(points)?;
    let mut layers = Vec::new();
    while !remaining.is_empty() {
        let ring = monotone_chain(&remaining);
        // `remaining` stays sorted, so removal is a merge against the sorted ring.
        let mut on_ring = ring.clone();
        on_ring.sort_by(|a, b| a.lex_cmp(b));
        let mut k = 0;
        remaining.retain(|p| {
            if k < on_ring.len() && on_ring[k] == *p {
                k += 1;
                false
            } else {
                true
            }
        });
        layers.push(Layer {
            depth: layers.len(),
            ring,
        });
    }
    Ok(ConvexLayers { layers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

/// Classifies `q` against a convex counterclockwise polygon.
pub fn point_in_convex(poly: &Polygon, q: Point2) -> Result<Containment> {
    let n = poly.len();
    if n < 3 || poly.signed_area() <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "polygon with {n} vertices and area {} is not a proper CCW polygon",
            poly.signed_area()
        )));
    }
    let mut on_edge = false;
    for i in 0..n {
        let c = cross(poly.vertices[i], poly.vertices[(i + 1) % n], q);
        if c < -EPS_GEOM {
            return Ok(Containment::Outside);
        }
        if c <= EPS_GEOM {
            on_edge = true;
        }
    }
    Ok(if on_edge {
        Containment::Boundary
    } else {
        Containment::Inside
    })
}
