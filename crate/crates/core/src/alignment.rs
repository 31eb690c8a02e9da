//! Rigid alignment of two minutia sets and tolerance-based pairing.
//!
//! Every ordered pair `(m_i, m'_j)` proposes the rotation and translation
//! that lands `m_i` exactly on `m'_j`. Each hypothesis is verified by a
//! greedy one-to-one matching; the hypothesis with the most pairs wins.

use rayon::prelude::*;
use serde::Serialize;

use crate::imgproc::{normalize_degrees, Minutia, MinutiaSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transform {
    pub s: f64,
    /// Degrees.
    pub dtheta: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        s: 1.0,
        dtheta: 0.0,
        dx: 0.0,
        dy: 0.0,
    };

    pub fn new(s: f64, dtheta: f64, dx: f64, dy: f64) -> Self {
        Self { s, dtheta, dx, dy }
    }

    /// Scales, rotates by `dtheta` about the origin, then translates.
    pub fn apply_point(&self, x: f64, y: f64) -> (f64, f64) {
        let (sin, cos) = self.dtheta.to_radians().sin_cos();
        (
            self.s * (cos * x - sin * y) + self.dx,
            self.s * (sin * x + cos * y) + self.dy,
        )
    }

    pub fn inverse(&self) -> Transform {
        let (sin, cos) = (-self.dtheta).to_radians().sin_cos();
        let (tx, ty) = (-self.dx / self.s, -self.dy / self.s);
        Transform {
            s: 1.0 / self.s,
            dtheta: normalize_degrees(-self.dtheta),
            dx: cos * tx - sin * ty,
            dy: sin * tx + cos * ty,
        }
    }
}

pub fn apply_transform(tr: &Transform, m: &Minutia) -> Minutia {
    let (x, y) = tr.apply_point(m.x, m.y);
    Minutia::new(x, y, m.theta + tr.dtheta, m.kind)
}

/// Angular difference on the circle, in `[0, 180]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 360.0;
    d.min(360.0 - d)
}

/// Both tolerances are inclusive. Kinds are not compared.
pub fn within_tolerance(a: &Minutia, b: &Minutia, r0: f64, theta0: f64) -> bool {
    a.dist(b) <= r0 && angle_diff(a.theta, b.theta) <= theta0
}

/// Transform landing `a` exactly on `b`.
pub fn pair_transform(a: &Minutia, b: &Minutia) -> Transform {
    let dtheta = normalize_degrees(b.theta - a.theta);
    let rot = Transform::new(1.0, dtheta, 0.0, 0.0);
    let (rx, ry) = rot.apply_point(a.x, a.y);
    Transform::new(1.0, dtheta, b.x - rx, b.y - ry)
}

/// One hypothesis per pair, `i`-major.
pub fn candidate_transforms(input: &MinutiaSet, template: &MinutiaSet) -> Vec<Transform> {
    input
        .iter()
        .flat_map(|a| template.iter().map(move |b| pair_transform(a, b)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedPair {
    pub i: usize,
    pub j: usize,
    /// Spatial distance after alignment.
    pub sd: f64,
    /// Angular distance after alignment, degrees.
    pub dd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub transform: Transform,
    /// Sorted by input index.
    pub pairs: Vec<MatchedPair>,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub score: f64,
}

impl MatchResult {
    pub fn input_points<'a>(
        &'a self,
        input: &'a MinutiaSet,
    ) -> impl Iterator<Item = &'a Minutia> + 'a {
        self.pairs.iter().map(|p| &input.minutiae()[p.i])
    }

    pub fn template_points<'a>(
        &'a self,
        template: &'a MinutiaSet,
    ) -> impl Iterator<Item = &'a Minutia> + 'a {
        self.pairs.iter().map(|p| &template.minutiae()[p.j])
    }

    /// Match dump, one `i,j,xi,yi,xj,yj,sd,dd` row per pair. `xi, yi` are
    /// the untransformed input coordinates.
    pub fn to_csv(&self, input: &MinutiaSet, template: &MinutiaSet) -> String {
        let mut out = String::from("i,j,xi,yi,xj,yj,sd,dd\n");
        for p in &self.pairs {
            let (a, b) = (&input.minutiae()[p.i], &template.minutiae()[p.j]);
            out.push_str(&format!(
                "{},{},{:.3},{:.3},{:.3},{:.3},{:.6},{:.6}\n",
                p.i, p.j, a.x, a.y, b.x, b.y, p.sd, p.dd
            ));
        }
        out
    }
}

/// `k / ((m + n) / 2)`, and 0 when both sets are empty.
pub fn minutiae_score(k: usize, m: usize, n: usize) -> f64 {
    if m + n == 0 {
        0.0
    } else {
        2.0 * k as f64 / (m + n) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub r0: f64,
    pub theta0: f64,
    pub strict_type: bool,
}

impl Tolerance {
    pub fn new(r0: f64, theta0: f64) -> Self {
        Self {
            r0,
            theta0,
            strict_type: false,
        }
    }

    fn accepts(&self, a: &Minutia, b: &Minutia) -> bool {
        within_tolerance(a, b, self.r0, self.theta0) && (!self.strict_type || a.kind == b.kind)
    }
}

/// Template minutiae bucketed on a dense square grid with cell size `r0`
/// over their bounding box, so the partners of a point are found in its 3×3
/// cell neighborhood.
struct Grid {
    cell: f64,
    x0: f64,
    y0: f64,
    cols: i64,
    rows: i64,
    /// Start offsets into `items`, one per cell plus a sentinel.
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl Grid {
    const MAX_CELLS: f64 = 1e6;

    fn new(template: &[Minutia], r0: f64) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for m in template {
            x0 = x0.min(m.x);
            y0 = y0.min(m.y);
            x1 = x1.max(m.x);
            y1 = y1.max(m.y);
        }
        if template.is_empty() {
            (x0, y0, x1, y1) = (0.0, 0.0, 0.0, 0.0);
        }
        // never finer than needed to keep the table small
        let extent = (x1 - x0 + 1.0) * (y1 - y0 + 1.0);
        let cell = r0.max((extent / Self::MAX_CELLS).sqrt()).max(1e-6);
        let cols = ((x1 - x0) / cell).floor() as i64 + 1;
        let rows = ((y1 - y0) / cell).floor() as i64 + 1;
        let mut grid = Grid {
            cell,
            x0,
            y0,
            cols,
            rows,
            starts: vec![0; (cols * rows) as usize + 1],
            items: vec![0; template.len()],
        };
        let keys: Vec<usize> = template
            .iter()
            .map(|m| {
                let (cx, cy) = grid.key(m.x, m.y);
                (cy * cols + cx) as usize
            })
            .collect();
        for &k in &keys {
            grid.starts[k + 1] += 1;
        }
        for k in 1..grid.starts.len() {
            grid.starts[k] += grid.starts[k - 1];
        }
        let mut fill = grid.starts.clone();
        for (j, &k) in keys.iter().enumerate() {
            grid.items[fill[k]] = j;
            fill[k] += 1;
        }
        grid
    }

    fn key(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.x0) / self.cell).floor() as i64,
            ((y - self.y0) / self.cell).floor() as i64,
        )
    }

    /// Candidate partners of `(x, y)` in ascending cell order.
    fn near(&self, x: f64, y: f64, out: &mut Vec<usize>) {
        out.clear();
        let (cx, cy) = self.key(x, y);
        for gy in (cy - 1).max(0)..=(cy + 1).min(self.rows - 1) {
            for gx in (cx - 1).max(0)..=(cx + 1).min(self.cols - 1) {
                let k = (gy * self.cols + gx) as usize;
                out.extend_from_slice(&self.items[self.starts[k]..self.starts[k + 1]]);
            }
        }
    }
}

/// Greedy one-to-one matching of already aligned input minutiae against the
/// template: tolerance-passing pairs are taken in `(sd, i, j)` order while
/// both ends are free.
fn greedy(
    aligned: &[Minutia],
    template: &[Minutia],
    grid: &Grid,
    tol: &Tolerance,
) -> Vec<MatchedPair> {
    let mut cand: Vec<MatchedPair> = Vec::new();
    let mut near = Vec::new();
    for (i, a) in aligned.iter().enumerate() {
        grid.near(a.x, a.y, &mut near);
        for &j in &near {
            let b = &template[j];
            if tol.accepts(a, b) {
                cand.push(MatchedPair {
                    i,
                    j,
                    sd: a.dist(b),
                    dd: angle_diff(a.theta, b.theta),
                });
            }
        }
    }
    cand.sort_by(|p, q| {
        p.sd.total_cmp(&q.sd)
            .then(p.i.cmp(&q.i))
            .then(p.j.cmp(&q.j))
    });
    let mut used_i = vec![false; aligned.len()];
    let mut used_j = vec![false; template.len()];
    let mut pairs = Vec::new();
    for p in cand {
        if !used_i[p.i] && !used_j[p.j] {
            used_i[p.i] = true;
            used_j[p.j] = true;
            pairs.push(p);
        }
    }
    pairs
}

/// Matching under a fixed transform.
pub fn match_with_transform(
    input: &MinutiaSet,
    template: &MinutiaSet,
    tr: &Transform,
    tol: &Tolerance,
) -> Vec<MatchedPair> {
    let grid = Grid::new(template.minutiae(), tol.r0);
    let aligned: Vec<Minutia> = input.iter().map(|m| apply_transform(tr, m)).collect();
    let mut pairs = greedy(&aligned, template.minutiae(), &grid, tol);
    pairs.sort_by_key(|p| p.i);
    pairs
}

/// Best alignment of `input` onto `template`: most pairs, then smallest
/// summed spatial distance, then earliest hypothesis. The result does not
/// depend on the number of threads.
pub fn match_minutiae_with(
    input: &MinutiaSet,
    template: &MinutiaSet,
    tol: &Tolerance,
) -> MatchResult {
    let (m, n) = (input.len(), template.len());
    let grid = Grid::new(template.minutiae(), tol.r0);
    let hyps = candidate_transforms(input, template);

    let best = hyps
        .par_iter()
        .enumerate()
        .map(|(idx, tr)| {
            let aligned: Vec<Minutia> = input.iter().map(|mu| apply_transform(tr, mu)).collect();
            let pairs = greedy(&aligned, template.minutiae(), &grid, tol);
            let sum: f64 = pairs.iter().map(|p| p.sd).sum();
            (pairs.len(), sum, idx, pairs)
        })
        .reduce_with(|a, b| {
            let a_wins = a.0 > b.0 || (a.0 == b.0 && (a.1 < b.1 || (a.1 == b.1 && a.2 < b.2)));
            if a_wins {
                a
            } else {
                b
            }
        });

    let (transform, mut pairs) = match best {
        Some((_, _, idx, pairs)) => (hyps[idx], pairs),
        None => (Transform::IDENTITY, Vec::new()),
    };
    pairs.sort_by_key(|p| p.i);
    let k = pairs.len();
    MatchResult {
        transform,
        pairs,
        k,
        m,
        n,
        score: minutiae_score(k, m, n),
    }
}

pub fn match_minutiae(
    input: &MinutiaSet,
    template: &MinutiaSet,
    r0: f64,
    theta0: f64,
) -> MatchResult {
    match_minutiae_with(input, template, &Tolerance::new(r0, theta0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::MinutiaKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mu(x: f64, y: f64, t: f64) -> Minutia {
        Minutia::new(x, y, t, MinutiaKind::Ending)
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize, size: f64) -> MinutiaSet {
        MinutiaSet::new(
            (0..n)
                .map(|_| {
                    let kind = if rng.random_bool(0.5) {
                        MinutiaKind::Ending
                    } else {
                        MinutiaKind::Bifurcation
                    };
                    Minutia::new(
                        rng.random_range(0.0..size),
                        rng.random_range(0.0..size),
                        rng.random_range(0.0..360.0),
                        kind,
                    )
                })
                .collect(),
        )
    }

    fn moved(set: &MinutiaSet, tr: &Transform) -> MinutiaSet {
        set.iter().map(|m| apply_transform(tr, m)).collect()
    }

    #[test]
    fn identity_and_quarter_turn() {
        let m = mu(3.0, 4.0, 10.0);
        assert_eq!(apply_transform(&Transform::IDENTITY, &m), m);
        let q = apply_transform(&Transform::new(1.0, 90.0, 0.0, 0.0), &mu(1.0, 0.0, 10.0));
        assert!(q.x.abs() < 1e-12 && (q.y - 1.0).abs() < 1e-12);
        assert_eq!(q.theta, 100.0);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let tr = Transform::new(
                rng.random_range(0.5..2.0),
                rng.random_range(0.0..360.0),
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            );
            let m = mu(
                rng.random_range(0.0..500.0),
                rng.random_range(0.0..500.0),
                rng.random_range(0.0..360.0),
            );
            let back = apply_transform(&tr.inverse(), &apply_transform(&tr, &m));
            assert!((back.x - m.x).abs() < 1e-9 && (back.y - m.y).abs() < 1e-9);
            assert!(angle_diff(back.theta, m.theta) < 1e-9);
        }
    }

    #[test]
    fn tolerance_edges() {
        assert!(within_tolerance(
            &mu(0.0, 0.0, 5.0),
            &mu(0.0, 0.0, 355.0),
            15.0,
            10.0
        ));
        assert!(!within_tolerance(
            &mu(0.0, 0.0, 5.0),
            &mu(0.0, 0.0, 354.0),
            15.0,
            10.0
        ));
        assert!(within_tolerance(
            &mu(0.0, 0.0, 0.0),
            &mu(9.0, 12.0, 0.0),
            15.0,
            10.0
        ));
        assert!(!within_tolerance(
            &mu(0.0, 0.0, 0.0),
            &mu(15.01, 0.0, 0.0),
            15.0,
            10.0
        ));
        // kinds are ignored
        let b = Minutia::new(0.0, 0.0, 0.0, MinutiaKind::Bifurcation);
        assert!(within_tolerance(&mu(0.0, 0.0, 0.0), &b, 1.0, 1.0));
    }

    #[test]
    fn candidates_contain_the_generating_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let set = random_set(&mut rng, 8, 300.0);
        let cands = candidate_transforms(&set, &set);
        assert_eq!(cands.len(), 64);
        assert!(cands.contains(&Transform::IDENTITY));

        let shifted = moved(&set, &Transform::new(1.0, 0.0, 10.0, 5.0));
        assert!(candidate_transforms(&set, &shifted)
            .iter()
            .any(|t| t.dtheta == 0.0 && (t.dx - 10.0).abs() < 1e-9 && (t.dy - 5.0).abs() < 1e-9));

        let rot = Transform::new(1.0, 30.0, 0.0, 0.0);
        let turned = moved(&set, &rot);
        let exact = candidate_transforms(&set, &turned).into_iter().any(|t| {
            set.iter()
                .all(|m| turned.iter().any(|q| apply_transform(&t, m).dist(q) < 1e-9))
        });
        assert!(exact);
        assert!(candidate_transforms(&set, &MinutiaSet::default()).is_empty());
    }

    #[test]
    fn self_match_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = random_set(&mut rng, 10, 400.0);
        let r = match_minutiae(&set, &set, 15.0, 10.0);
        assert_eq!((r.k, r.score), (10, 1.0));
        assert_eq!(r.transform, Transform::IDENTITY);
    }

    #[test]
    fn score_arithmetic() {
        assert_eq!(minutiae_score(5, 10, 10), 0.5);
        assert_eq!(minutiae_score(0, 0, 0), 0.0);
        assert_eq!(minutiae_score(0, 3, 0), 0.0);
        let empty = match_minutiae(&MinutiaSet::default(), &MinutiaSet::default(), 15.0, 10.0);
        assert_eq!((empty.k, empty.score), (0, 0.0));
    }

    #[test]
    fn strict_type_only_pairs_equal_kinds() {
        let a = MinutiaSet::new(vec![mu(10.0, 10.0, 0.0)]);
        let b = MinutiaSet::new(vec![Minutia::new(
            10.0,
            10.0,
            0.0,
            MinutiaKind::Bifurcation,
        )]);
        assert_eq!(match_minutiae(&a, &b, 15.0, 10.0).k, 1);
        let strict = Tolerance {
            strict_type: true,
            ..Tolerance::new(15.0, 10.0)
        };
        assert_eq!(match_minutiae_with(&a, &b, &strict).k, 0);
    }

    #[test]
    fn dump_has_one_row_per_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let set = random_set(&mut rng, 4, 200.0);
        let r = match_minutiae(&set, &set, 15.0, 10.0);
        let csv = r.to_csv(&set, &set);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("i,j,xi,yi,xj,yj,sd,dd\n0,0,"));
    }

    #[test]
    fn greedy_order_prefers_the_closest_pair() {
        // one template point within range of two input points
        let input = MinutiaSet::new(vec![mu(0.0, 0.0, 0.0), mu(6.0, 0.0, 0.0)]);
        let template = MinutiaSet::new(vec![mu(4.0, 0.0, 0.0)]);
        let pairs = match_with_transform(
            &input,
            &template,
            &Transform::IDENTITY,
            &Tolerance::new(15.0, 10.0),
        );
        assert_eq!(pairs.len(), 1);
        assert_eq!((pairs[0].i, pairs[0].j, pairs[0].sd), (1, 0, 2.0));
    }
}
