//! Zhang–Suen thinning.
//!
//! The classic parallel formulation deletes all flagged pixels of a
//! sub-iteration at once, which erases 2×2 blocks and two-pixel-thick
//! diagonals entirely. Here flagged pixels are deleted one at a time in
//! raster order and only while they are still simple (their removal does not
//! change 8-connectivity) and not end points. A final pass removes the
//! remaining simple non-end pixels, which are the staircase corners Zhang–Suen
//! leaves behind. The result is a fixed point of the whole procedure.

use super::{BinaryImage, Skeleton};

/// 8-connectivity Yokoi number over the clockwise ring starting at north.
/// A foreground pixel with value 1 is simple.
#[inline]
fn yokoi8(ring: &[bool; 8]) -> u32 {
    let bg = |k: usize| u32::from(!ring[k % 8]);
    [0usize, 2, 4, 6]
        .iter()
        .map(|&k| bg(k) - bg(k) * bg(k + 1) * bg(k + 2))
        .sum()
}

/// Number of background→foreground transitions around the ring.
#[inline]
fn transitions(ring: &[bool; 8]) -> usize {
    (0..8).filter(|&k| !ring[k] && ring[(k + 1) % 8]).count()
}

#[inline]
pub(crate) fn deletable(img: &BinaryImage, x: i64, y: i64) -> bool {
    let ring = img.ring(x, y);
    ring.iter().filter(|&&b| b).count() >= 2 && yokoi8(&ring) == 1
}

fn flagged(img: &BinaryImage, x: i64, y: i64, first: bool) -> bool {
    let r = img.ring(x, y);
    let b = r.iter().filter(|&&v| v).count();
    if !(2..=6).contains(&b) || transitions(&r) != 1 {
        return false;
    }
    let (n, e, s, w) = (r[0], r[2], r[4], r[6]);
    if first {
        !(n && e && s) && !(e && s && w)
    } else {
        !(n && e && w) && !(n && s && w)
    }
}

fn sub_iteration(img: &mut BinaryImage, first: bool) -> bool {
    let marked: Vec<(usize, usize)> = img
        .foreground()
        .filter(|&(x, y)| flagged(img, x as i64, y as i64, first))
        .collect();
    let mut changed = false;
    for (x, y) in marked {
        if deletable(img, x as i64, y as i64) {
            img.set(x, y, false);
            changed = true;
        }
    }
    changed
}

fn prune_simple(img: &mut BinaryImage) -> bool {
    let mut changed = false;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) && deletable(img, x as i64, y as i64) {
                img.set(x, y, false);
                changed = true;
            }
        }
    }
    changed
}

/// Reduces every foreground component to a one-pixel-wide skeleton while
/// preserving its 8-connectivity.
pub fn thin(bin: &BinaryImage) -> Skeleton {
    let mut img = bin.clone();
    loop {
        let a = sub_iteration(&mut img, true);
        let b = sub_iteration(&mut img, false);
        if !a && !b {
            break;
        }
    }
    while prune_simple(&mut img) {}
    Skeleton(img)
}
