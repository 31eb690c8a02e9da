//! Image side of the pipeline: grayscale input to a cleaned minutia set.
//!
//! Coordinates are screen coordinates with the origin at the top-left pixel
//! and `y` growing downward. Minutia orientations are measured in degrees
//! from `+x` towards `+y` of that same frame, which is the frame the rigid
//! alignment rotates in.

mod binarize;
mod detect;
mod extract;
mod merge;
pub mod minutiae_file;
pub mod pgm;
mod thin;

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};

pub use binarize::{binarize, otsu_threshold};
pub use detect::{detect_minutiae, estimate_orientation, Orientation, TRACE_LEN};
pub use extract::{extract, foreground_mask, ExtractConfig, MASK_BLOCK};
pub use merge::merge_close;
pub use thin::thin;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} samples for a {width}x{height} image",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.samples[y * self.width + x] = v;
    }
}

/// Row-major bitmap; `true` is foreground (ridge).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} bits for a {width}x{height} image",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    /// Parses rows of `'1'`/`'#'` (foreground) and anything else
    /// (background). Handy for tests and fixtures.
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut img = Self::empty(width, height);
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.bytes().enumerate() {
                if c == b'1' || c == b'#' {
                    img.set(x, y, true);
                }
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Out-of-bounds reads are background.
    #[inline]
    pub fn at(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    /// The 8 neighbors clockwise from north: N, NE, E, SE, S, SW, W, NW.
    #[inline]
    pub fn ring(&self, x: i64, y: i64) -> [bool; 8] {
        let mut out = [false; 8];
        for (k, (dx, dy)) in RING.iter().enumerate() {
            out[k] = self.at(x + dx, y + dy);
        }
        out
    }

    pub fn neighbor_count(&self, x: i64, y: i64) -> usize {
        self.ring(x, y).iter().filter(|&&b| b).count()
    }
}

/// Offsets of the 8-neighborhood clockwise from north (screen coordinates).
pub(crate) const RING: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Output of [`thin`]: a binary image whose ridges are one pixel wide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton(pub(crate) BinaryImage);

impl Skeleton {
    /// Wraps an arbitrary bitmap; [`detect_minutiae`] re-checks thinness.
    pub fn from_binary(img: BinaryImage) -> Self {
        Self(img)
    }

    pub fn image(&self) -> &BinaryImage {
        &self.0
    }

    pub fn into_image(self) -> BinaryImage {
        self.0
    }

    /// True when every pixel of a fully foreground 2×2 block is a junction,
    /// i.e. removing it would change connectivity.
    pub fn is_one_pixel_wide(&self) -> bool {
        first_thick_pixel(&self.0).is_none()
    }
}

/// First pixel (raster order) that sits in a fully foreground 2×2 block and
/// could be removed without changing connectivity.
pub(crate) fn first_thick_pixel(img: &BinaryImage) -> Option<(usize, usize)> {
    for y in 0..img.height().saturating_sub(1) {
        for x in 0..img.width().saturating_sub(1) {
            if img.get(x, y) && img.get(x + 1, y) && img.get(x, y + 1) && img.get(x + 1, y + 1) {
                for (px, py) in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
                    if thin::deletable(img, px as i64, py as i64) {
                        return Some((px, py));
                    }
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MinutiaKind {
    Ending,
    Bifurcation,
}

impl MinutiaKind {
    pub fn code(self) -> char {
        match self {
            MinutiaKind::Ending => 'E',
            MinutiaKind::Bifurcation => 'B',
        }
    }

    pub fn from_code(c: &str) -> Option<Self> {
        match c {
            "E" => Some(MinutiaKind::Ending),
            "B" => Some(MinutiaKind::Bifurcation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minutia {
    pub x: f64,
    pub y: f64,
    /// Degrees in `[0, 360)`.
    pub theta: f64,
    pub kind: MinutiaKind,
}

impl Minutia {
    pub fn new(x: f64, y: f64, theta: f64, kind: MinutiaKind) -> Self {
        Self {
            x,
            y,
            theta: normalize_degrees(theta),
            kind,
        }
    }

    pub fn dist(&self, other: &Minutia) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Deterministic `(y, x, kind)` order.
    pub fn order(&self, other: &Minutia) -> Ordering {
        self.y
            .total_cmp(&other.y)
            .then_with(|| self.x.total_cmp(&other.x))
            .then_with(|| self.kind.cmp(&other.kind))
    }
}

/// Maps any angle in degrees into `[0, 360)`.
pub fn normalize_degrees(theta: f64) -> f64 {
    let t = theta.rem_euclid(360.0);
    if t >= 360.0 {
        0.0
    } else {
        t
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MinutiaSet {
    minutiae: Vec<Minutia>,
    pub source: Option<String>,
}

impl MinutiaSet {
    /// Sorts by `(y, x, kind)` and drops later minutiae sharing an exact
    /// position with an earlier one.
    pub fn new(mut minutiae: Vec<Minutia>) -> Self {
        minutiae.sort_by(|a, b| a.order(b));
        minutiae.dedup_by(|b, a| a.x == b.x && a.y == b.y);
        Self {
            minutiae,
            source: None,
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn minutiae(&self) -> &[Minutia] {
        &self.minutiae
    }

    pub fn len(&self) -> usize {
        self.minutiae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutiae.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Minutia> {
        self.minutiae.iter()
    }
}

impl FromIterator<Minutia> for MinutiaSet {
    fn from_iter<I: IntoIterator<Item = Minutia>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_shape_is_validated() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 4]).is_ok());
        assert!(BinaryImage::new(2, 2, vec![false; 5]).is_err());
    }

    #[test]
    fn set_is_sorted_and_deduplicated() {
        let set = MinutiaSet::new(vec![
            Minutia::new(5.0, 2.0, 10.0, MinutiaKind::Ending),
            Minutia::new(1.0, 2.0, 10.0, MinutiaKind::Bifurcation),
            Minutia::new(9.0, 1.0, 10.0, MinutiaKind::Ending),
            Minutia::new(5.0, 2.0, 99.0, MinutiaKind::Bifurcation),
        ]);
        let xy: Vec<_> = set.iter().map(|m| (m.x, m.y)).collect();
        assert_eq!(xy, vec![(9.0, 1.0), (1.0, 2.0), (5.0, 2.0)]);
        assert_eq!(set.minutiae()[2].kind, MinutiaKind::Ending);
    }

    #[test]
    fn degrees_wrap() {
        assert_eq!(normalize_degrees(370.0), 10.0);
        assert_eq!(normalize_degrees(-90.0), 270.0);
        assert_eq!(normalize_degrees(-1e-20), 0.0);
        assert_eq!(
            Minutia::new(0.0, 0.0, 720.0, MinutiaKind::Ending).theta,
            0.0
        );
    }

    #[test]
    fn full_block_detection() {
        let thick = Skeleton::from_binary(BinaryImage::from_rows(&["0110", "0110"]));
        assert!(!thick.is_one_pixel_wide());
        let thin = Skeleton::from_binary(BinaryImage::from_rows(&["0100", "0110"]));
        assert!(thin.is_one_pixel_wide());
        // an X crossing through a 2x2 core cannot be thinned further
        let cross = Skeleton::from_binary(BinaryImage::from_rows(&[
            "100001", "010010", "001100", "001100", "010010", "100001",
        ]));
        assert!(cross.is_one_pixel_wide());
    }
}
