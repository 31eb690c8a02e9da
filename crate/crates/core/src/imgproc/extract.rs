use crate::config::BinarizeMethod;
use crate::error::Result;

use super::{
    binarize, detect_minutiae, merge_close, thin, BinaryImage, GrayImage, Minutia, MinutiaSet,
};

/// Side of the square blocks used to build the foreground mask.
pub const MASK_BLOCK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    pub binarize: BinarizeMethod,
    /// Minutiae closer than this to the mask boundary are dropped.
    pub border_margin: f64,
    /// Merge radius.
    pub rm: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            binarize: BinarizeMethod::Otsu,
            border_margin: 12.0,
            rm: 5.0,
        }
    }
}

/// Block-level region of the print: a [`MASK_BLOCK`] block belongs to the
/// mask if it holds any ridge pixel or is enclosed by such blocks (holes are
/// filled). Returned per pixel.
pub fn foreground_mask(bin: &BinaryImage) -> BinaryImage {
    let bw = bin.width().div_ceil(MASK_BLOCK);
    let bh = bin.height().div_ceil(MASK_BLOCK);
    let mut blocks = vec![false; bw * bh];
    for (x, y) in bin.foreground() {
        blocks[(y / MASK_BLOCK) * bw + x / MASK_BLOCK] = true;
    }
    // flood the outside from the block-grid border through empty blocks
    let mut outside = vec![false; bw * bh];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for by in 0..bh {
        for bx in 0..bw {
            if (bx == 0 || by == 0 || bx + 1 == bw || by + 1 == bh) && !blocks[by * bw + bx] {
                outside[by * bw + bx] = true;
                stack.push((bx, by));
            }
        }
    }
    while let Some((bx, by)) = stack.pop() {
        let mut visit = |nx: usize, ny: usize| {
            let i = ny * bw + nx;
            if !blocks[i] && !outside[i] {
                outside[i] = true;
                stack.push((nx, ny));
            }
        };
        if bx > 0 {
            visit(bx - 1, by);
        }
        if by > 0 {
            visit(bx, by - 1);
        }
        if bx + 1 < bw {
            visit(bx + 1, by);
        }
        if by + 1 < bh {
            visit(bx, by + 1);
        }
    }
    let mut mask = BinaryImage::empty(bin.width(), bin.height());
    for y in 0..bin.height() {
        for x in 0..bin.width() {
            mask.set(x, y, !outside[(y / MASK_BLOCK) * bw + x / MASK_BLOCK]);
        }
    }
    mask
}

/// True if some pixel outside the mask (or outside the image) lies at
/// Euclidean distance `< margin` from `m`.
fn near_mask_boundary(mask: &BinaryImage, m: &Minutia, margin: f64) -> bool {
    if margin <= 0.0 {
        return false;
    }
    let r = margin.ceil() as i64;
    let (cx, cy) = (m.x.round() as i64, m.y.round() as i64);
    for y in (cy - r)..=(cy + r) {
        for x in (cx - r)..=(cx + r) {
            let d = (x as f64 - m.x).hypot(y as f64 - m.y);
            if d < margin && !mask.at(x, y) {
                return true;
            }
        }
    }
    false
}

/// Snaps to the 1/1000 grid of the minutiae text format so that a set
/// written to disk and read back is identical.
fn quantize(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Full extraction: binarize, thin, detect, drop minutiae near the print
/// boundary, merge close minutiae.
pub fn extract(img: &GrayImage, cfg: &ExtractConfig) -> Result<MinutiaSet> {
    let bin = binarize(img, cfg.binarize)?;
    let sk = thin(&bin);
    let raw = detect_minutiae(&sk)?;
    let mask = foreground_mask(&bin);
    let kept: Vec<Minutia> = raw
        .into_iter()
        .filter(|m| !near_mask_boundary(&mask, m, cfg.border_margin))
        .collect();
    let merged = merge_close(&kept, cfg.rm)?;
    Ok(merged
        .into_iter()
        .map(|m| Minutia::new(quantize(m.x), quantize(m.y), quantize(m.theta), m.kind))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::MinutiaKind;

    fn no_border() -> ExtractConfig {
        ExtractConfig {
            border_margin: 0.0,
            ..ExtractConfig::default()
        }
    }

    fn draw_disk(img: &mut GrayImage, cx: f64, cy: f64, r: f64) {
        for y in 0..img.height() {
            for x in 0..img.width() {
                if (x as f64 - cx).hypot(y as f64 - cy) <= r {
                    img.set(x, y, 20);
                }
            }
        }
    }

    fn draw_stroke(img: &mut GrayImage, a: (f64, f64), b: (f64, f64)) {
        let steps = ((b.0 - a.0).hypot(b.1 - a.1) * 2.0).ceil() as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            draw_disk(img, a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1), 1.6);
        }
    }

    #[test]
    fn background_image_has_no_minutiae() {
        let img = GrayImage::filled(64, 64, 230).unwrap();
        assert!(extract(&img, &ExtractConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn straight_ridge_has_two_endings() {
        let mut img = GrayImage::filled(80, 40, 230).unwrap();
        draw_stroke(&mut img, (15.0, 20.0), (65.0, 20.0));
        let set = extract(&img, &no_border()).unwrap();
        assert_eq!(set.len(), 2, "{set:?}");
        assert!(set.iter().all(|m| m.kind == MinutiaKind::Ending));
        // left end points right along the ridge, right end points left
        let (left, right) = if set.minutiae()[0].x < set.minutiae()[1].x {
            (set.minutiae()[0], set.minutiae()[1])
        } else {
            (set.minutiae()[1], set.minutiae()[0])
        };
        assert!(
            crate::alignment::angle_diff(left.theta, 0.0) < 10.0,
            "{left:?}"
        );
        assert!(
            crate::alignment::angle_diff(right.theta, 180.0) < 10.0,
            "{right:?}"
        );
    }

    #[test]
    fn y_ridge_has_three_endings_and_a_bifurcation() {
        let mut img = GrayImage::filled(100, 100, 230).unwrap();
        let c = (50.0, 50.0);
        for deg in [90.0f64, 210.0, 330.0] {
            let r = deg.to_radians();
            draw_stroke(&mut img, c, (c.0 + 35.0 * r.cos(), c.1 + 35.0 * r.sin()));
        }
        let set = extract(&img, &no_border()).unwrap();
        let endings = set.iter().filter(|m| m.kind == MinutiaKind::Ending).count();
        let bifs: Vec<_> = set
            .iter()
            .filter(|m| m.kind == MinutiaKind::Bifurcation)
            .collect();
        assert_eq!((endings, bifs.len()), (3, 1), "{set:?}");
        assert!(bifs[0].dist(&Minutia::new(50.0, 50.0, 0.0, MinutiaKind::Bifurcation)) < 3.0);

        // the default margin removes the endings at the tips of the print
        let bordered = extract(&img, &ExtractConfig::default()).unwrap();
        assert!(bordered.len() < set.len());
    }

    #[test]
    fn extraction_is_deterministic() {
        let mut img = GrayImage::filled(100, 100, 230).unwrap();
        draw_stroke(&mut img, (10.0, 10.0), (90.0, 70.0));
        draw_stroke(&mut img, (10.0, 80.0), (60.0, 30.0));
        let a = extract(&img, &no_border()).unwrap();
        let b = extract(&img.clone(), &no_border()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mask_fills_holes() {
        let mut bin = BinaryImage::empty(80, 80);
        for i in 0..80 {
            bin.set(i, 0, true);
            bin.set(i, 79, true);
            bin.set(0, i, true);
            bin.set(79, i, true);
        }
        let mask = foreground_mask(&bin);
        assert!(mask.get(40, 40));
        let lone = BinaryImage::from_rows(&[
            "",
            "",
            "",
            "",
            "",
            "",
            "",
            "",
            "",
            "",
            "00000000000000000001",
        ]);
        let m = foreground_mask(&lone);
        assert!(m.get(19, 10) && !m.get(0, 0));
    }
}
