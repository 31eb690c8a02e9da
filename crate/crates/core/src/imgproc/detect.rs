use crate::error::{Error, Result};

use super::{first_thick_pixel, Minutia, MinutiaKind, Skeleton, RING};

/// Steps traced along a ridge to estimate a minutia orientation.
pub const TRACE_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    /// Degrees in `[0, 360)`.
    pub degrees: f64,
    /// Set when the ridge could not be traced for at least 2 pixels; the
    /// angle is then 0.
    pub low_confidence: bool,
}

type Px = (i64, i64);

/// Ring neighbors in tracing preference: 4-neighbors first, then diagonals,
/// each group clockwise from north.
const TRACE_ORDER: [usize; 8] = [0, 2, 4, 6, 1, 3, 5, 7];

/// Walks along the skeleton starting with the step `from → first`, never
/// entering `blocked` or revisiting a pixel. Returns the last pixel reached
/// and the number of steps taken.
fn trace(sk: &Skeleton, from: Px, first: Px, blocked: &[Px], max_steps: usize) -> (Px, usize) {
    let img = sk.image();
    let mut visited: Vec<Px> = Vec::with_capacity(max_steps + blocked.len() + 2);
    visited.extend_from_slice(blocked);
    visited.push(from);
    visited.push(first);
    let (mut cur, mut steps) = (first, 1);
    while steps < max_steps {
        let next = TRACE_ORDER
            .iter()
            .map(|&k| (cur.0 + RING[k].0, cur.1 + RING[k].1))
            .find(|&p| img.at(p.0, p.1) && !visited.contains(&p));
        match next {
            Some(p) => {
                visited.push(p);
                cur = p;
                steps += 1;
            }
            None => break,
        }
    }
    (cur, steps)
}

fn direction_deg(from: Px, to: Px) -> f64 {
    super::normalize_degrees(
        ((to.1 - from.1) as f64)
            .atan2((to.0 - from.0) as f64)
            .to_degrees(),
    )
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 360.0;
    d.min(360.0 - d)
}

/// Mid-direction of `a` and `b` along the shorter arc.
fn bisector(a: f64, b: f64) -> f64 {
    let (ar, br) = (a.to_radians(), b.to_radians());
    let (sx, sy) = (ar.cos() + br.cos(), ar.sin() + br.sin());
    if sx.hypot(sy) < 1e-12 {
        return super::normalize_degrees(a + 90.0);
    }
    super::normalize_degrees(sy.atan2(sx).to_degrees())
}

/// Groups the foreground ring neighbors of `p` into branches (cyclic runs of
/// consecutive ring positions) and returns one start pixel per branch,
/// preferring a 4-neighbor within each run.
fn branch_starts(sk: &Skeleton, p: Px) -> Vec<Px> {
    let ring = sk.image().ring(p.0, p.1);
    if ring.iter().all(|&b| b) {
        return vec![];
    }
    // rotate so the scan starts right after a background position
    let start = (0..8).find(|&k| !ring[k]).unwrap_or(0);
    let mut runs: Vec<Vec<usize>> = Vec::new();
    let mut in_run = false;
    for off in 1..=8 {
        let k = (start + off) % 8;
        if ring[k] {
            if !in_run {
                runs.push(Vec::new());
                in_run = true;
            }
            runs.last_mut().unwrap().push(k);
        } else {
            in_run = false;
        }
    }
    let mut starts: Vec<(usize, Px)> = runs
        .into_iter()
        .map(|run| {
            let k = run.iter().copied().find(|k| k % 2 == 0).unwrap_or(run[0]);
            (k, (p.0 + RING[k].0, p.1 + RING[k].1))
        })
        .collect();
    starts.sort_by_key(|&(k, _)| k);
    starts.into_iter().map(|(_, px)| px).collect()
}

/// Orientation of the minutia at pixel `p` of the skeleton.
///
/// An ending points along its ridge: the direction from `p` to the pixel
/// reached after [`TRACE_LEN`] steps. A bifurcation takes the bisector of the
/// two angularly closest branches; with three branches this points away from
/// the third one. Angles follow the image frame: 0° is `+x`, 90° is `+y`
/// (down the screen).
pub fn estimate_orientation(sk: &Skeleton, p: (usize, usize), kind: MinutiaKind) -> Orientation {
    let p = (p.0 as i64, p.1 as i64);
    let low = Orientation {
        degrees: 0.0,
        low_confidence: true,
    };
    let starts = branch_starts(sk, p);
    match kind {
        MinutiaKind::Ending => {
            let Some(&first) = starts.first() else {
                return low;
            };
            let (end, steps) = trace(sk, p, first, &[], TRACE_LEN);
            if steps < 2 {
                return low;
            }
            Orientation {
                degrees: direction_deg(p, end),
                low_confidence: false,
            }
        }
        MinutiaKind::Bifurcation => {
            let ring: Vec<Px> = RING
                .iter()
                .map(|d| (p.0 + d.0, p.1 + d.1))
                .filter(|q| sk.image().at(q.0, q.1))
                .collect();
            let traced: Vec<(f64, usize)> = starts
                .iter()
                .map(|&s| {
                    let blocked: Vec<Px> = ring.iter().copied().filter(|&q| q != s).collect();
                    let (end, steps) = trace(sk, p, s, &blocked, TRACE_LEN);
                    (direction_deg(p, end), steps)
                })
                .collect();
            if traced.iter().all(|&(_, steps)| steps < 2) {
                return low;
            }
            let mut dirs: Vec<f64> = traced.iter().map(|&(d, _)| d).collect();
            let degrees = match dirs.len() {
                0 => return low,
                1 => dirs[0],
                _ => {
                    dirs.sort_by(f64::total_cmp);
                    let n = dirs.len();
                    // reverse lexicographic pair order: with three branches the
                    // excluded branch is visited in increasing angle
                    let mut best: Option<(f64, usize, usize)> = None;
                    for i in (0..n).rev() {
                        for j in ((i + 1)..n).rev() {
                            let gap = angular_gap(dirs[i], dirs[j]);
                            if best.is_none_or(|(g, _, _)| gap < g - 1e-9) {
                                best = Some((gap, i, j));
                            }
                        }
                    }
                    let (_, i, j) = best.unwrap();
                    bisector(dirs[i], dirs[j])
                }
            };
            Orientation {
                degrees,
                low_confidence: false,
            }
        }
    }
}

/// Classifies skeleton pixels by their 8-neighbor count: one neighbor is a
/// ridge ending, more than two a bifurcation. Output is in raster order.
pub fn detect_minutiae(sk: &Skeleton) -> Result<Vec<Minutia>> {
    if let Some((x, y)) = first_thick_pixel(sk.image()) {
        return Err(Error::Precondition(format!(
            "skeleton is not one pixel wide at ({x}, {y})"
        )));
    }
    let img = sk.image();
    let mut out = Vec::new();
    for (x, y) in img.foreground() {
        let kind = match img.neighbor_count(x as i64, y as i64) {
            1 => MinutiaKind::Ending,
            n if n > 2 => MinutiaKind::Bifurcation,
            _ => continue,
        };
        let o = estimate_orientation(sk, (x, y), kind);
        out.push(Minutia::new(x as f64, y as f64, o.degrees, kind));
    }
    Ok(out)
}
