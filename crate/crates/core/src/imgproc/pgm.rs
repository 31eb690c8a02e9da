//! PGM (`P2` ASCII and `P5` binary) reading and writing.

use std::path::Path;

use crate::error::{Error, Result};

use super::GrayImage;

pub fn looks_like_pgm(bytes: &[u8]) -> bool {
    bytes.starts_with(b"P2") || bytes.starts_with(b"P5")
}

fn bad(reason: impl Into<String>) -> Error {
    Error::format("pgm", reason.into())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&[u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| !c.is_ascii_whitespace() && *c != b'#')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token().ok_or_else(|| bad(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("invalid {what} `{}`", String::from_utf8_lossy(tok))))
    }
}

/// Decodes a PGM image. Samples are rescaled to `0..=255` when `maxval` is
/// below 255.
pub fn decode(bytes: &[u8]) -> Result<GrayImage> {
    let mut h = Header { bytes, pos: 0 };
    let binary = match h.token() {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(bad("magic number must be P2 or P5")),
    };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(bad(format!("empty image {width}x{height}")));
    }
    if !(1..=255).contains(&maxval) {
        return Err(bad(format!("maxval {maxval} outside 1..=255")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| bad("image dimensions overflow"))?;
    let mut raw = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates maxval from the raster
        let start = h.pos + 1;
        let data = bytes.get(start..).unwrap_or(&[]);
        if data.len() < count {
            return Err(bad(format!(
                "truncated raster: {} of {count} samples",
                data.len()
            )));
        }
        raw.extend_from_slice(&data[..count]);
    } else {
        for i in 0..count {
            let v = h
                .token()
                .ok_or_else(|| bad(format!("truncated raster: {i} of {count} samples")))?;
            let v: usize = std::str::from_utf8(v)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(format!("invalid sample `{}`", String::from_utf8_lossy(v))))?;
            if v > 255 {
                return Err(bad(format!("sample {v} exceeds maxval {maxval}")));
            }
            raw.push(v as u8);
        }
    }
    if let Some(&v) = raw.iter().find(|&&v| v as usize > maxval) {
        return Err(bad(format!("sample {v} exceeds maxval {maxval}")));
    }
    if maxval != 255 {
        for v in &mut raw {
            *v = ((*v as usize * 255 + maxval / 2) / maxval) as u8;
        }
    }
    GrayImage::new(width, height, raw)
}

pub fn read(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| e.in_file(path))
}

/// Binary `P5` with maxval 255.
pub fn encode(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.samples());
    out
}

pub fn write(path: &Path, img: &GrayImage) -> Result<()> {
    std::fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}
