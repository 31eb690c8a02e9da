//! Synthetic fingers and impressions.
//!
//! A finger is a random minutia set; an impression is a rigidly moved copy
//! with Gaussian jitter on positions and orientations, some minutiae lost and
//! some spurious ones added. Everything is driven by a seeded ChaCha8 stream,
//! so a seed fixes the whole database.
//!
//! [`render_print`] draws a ridge image instead: a plane wave of ridges whose
//! phase winds around a few random singular points, each of which forks a
//! ridge.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::alignment::{apply_transform, Transform};
use crate::evaluation::FingerId;
use crate::imgproc::{GrayImage, Minutia, MinutiaKind, MinutiaSet};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub fingers: u32,
    pub impressions: u32,
    pub min_minutiae: usize,
    pub max_minutiae: usize,
    /// Minutiae are placed in `[0, width) × [0, height)`.
    pub width: f64,
    pub height: f64,
    /// Minimum distance between minutiae of one finger.
    pub min_spacing: f64,
    /// Rotation is uniform in `±max_rotation` degrees about the print
    /// center, translation uniform in `±max_translation` per axis.
    pub max_rotation: f64,
    pub max_translation: f64,
    pub position_sigma: f64,
    pub theta_sigma: f64,
    pub delete_fraction: f64,
    pub insert_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            fingers: 20,
            impressions: 4,
            min_minutiae: 30,
            max_minutiae: 60,
            width: 300.0,
            height: 400.0,
            min_spacing: 10.0,
            max_rotation: 30.0,
            max_translation: 30.0,
            position_sigma: 3.0,
            theta_sigma: 5.0,
            delete_fraction: 0.1,
            insert_fraction: 0.1,
        }
    }
}

fn random_minutia(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Minutia {
    let kind = if rng.random_bool(0.5) {
        MinutiaKind::Ending
    } else {
        MinutiaKind::Bifurcation
    };
    Minutia::new(
        rng.random_range(0.0..cfg.width),
        rng.random_range(0.0..cfg.height),
        rng.random_range(0.0..360.0),
        kind,
    )
}

/// Random master minutiae with the configured spacing. Gives up on spacing
/// for a point after a bounded number of rejections.
pub fn finger(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> MinutiaSet {
    let n = rng.random_range(cfg.min_minutiae..=cfg.max_minutiae);
    let mut ms: Vec<Minutia> = Vec::with_capacity(n);
    while ms.len() < n {
        let mut cand = random_minutia(rng, cfg);
        for _ in 0..100 {
            if ms.iter().all(|m| m.dist(&cand) >= cfg.min_spacing) {
                break;
            }
            cand = random_minutia(rng, cfg);
        }
        ms.push(cand);
    }
    MinutiaSet::new(ms)
}

/// One noisy impression of `master`.
pub fn impression(rng: &mut ChaCha8Rng, master: &MinutiaSet, cfg: &SynthConfig) -> MinutiaSet {
    let pos = Normal::new(0.0, cfg.position_sigma).expect("finite sigma");
    let ang = Normal::new(0.0, cfg.theta_sigma).expect("finite sigma");

    // rotate about the print center, then translate
    let dtheta = rng.random_range(-cfg.max_rotation..=cfg.max_rotation);
    let (cx, cy) = (cfg.width / 2.0, cfg.height / 2.0);
    let rot = Transform::new(1.0, dtheta, 0.0, 0.0);
    let (rx, ry) = rot.apply_point(cx, cy);
    let tr = Transform::new(
        1.0,
        dtheta,
        cx - rx + rng.random_range(-cfg.max_translation..=cfg.max_translation),
        cy - ry + rng.random_range(-cfg.max_translation..=cfg.max_translation),
    );

    let n = master.len();
    let deletions = (n as f64 * cfg.delete_fraction).round() as usize;
    let mut keep = vec![true; n];
    for i in sample(rng, n, deletions.min(n)).iter() {
        keep[i] = false;
    }
    let mut out: Vec<Minutia> = master
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(m, _)| {
            let q = apply_transform(&tr, m);
            Minutia::new(
                q.x + pos.sample(rng),
                q.y + pos.sample(rng),
                q.theta + ang.sample(rng),
                q.kind,
            )
        })
        .collect();
    let insertions = (n as f64 * cfg.insert_fraction).round() as usize;
    for _ in 0..insertions {
        let m = random_minutia(rng, cfg);
        out.push(apply_transform(&tr, &m));
    }
    MinutiaSet::new(out)
}

/// `fingers × impressions` sets ordered by `(finger, impression)`, ids
/// starting at 1.
pub fn database(seed: u64, cfg: &SynthConfig) -> Vec<(FingerId, MinutiaSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for f in 1..=cfg.fingers {
        let master = finger(&mut rng, cfg);
        for i in 1..=cfg.impressions {
            let set = impression(&mut rng, &master, cfg).with_source(format!("{f:03}_{i}"));
            out.push((FingerId::new(f, i), set));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    /// Ridge period in pixels.
    pub period: f64,
    pub singularities: usize,
    /// Impressions of a rendered finger are rotated by up to this many
    /// degrees and shifted by up to `max_translation` pixels per axis.
    pub max_rotation: f64,
    pub max_translation: f64,
    /// Standard deviation of additive intensity noise in impressions.
    pub noise_sigma: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 240,
            height: 300,
            period: 9.0,
            singularities: 6,
            max_rotation: 10.0,
            max_translation: 10.0,
            noise_sigma: 12.0,
        }
    }
}

/// Ridge field of one synthetic finger.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgePattern {
    width: f64,
    height: f64,
    /// Wave vector of the ridges, cycles per pixel.
    k: (f64, f64),
    /// `(x, y, ±1)` phase singularities.
    singularities: Vec<(f64, f64, f64)>,
}

impl RidgePattern {
    pub fn random(rng: &mut ChaCha8Rng, cfg: &RenderConfig) -> Self {
        let (w, h) = (cfg.width as f64, cfg.height as f64);
        let dir = rng.random_range(0.0..std::f64::consts::PI);
        let singularities = (0..cfg.singularities)
            .map(|_| {
                let charge = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (
                    rng.random_range(0.25 * w..0.75 * w),
                    rng.random_range(0.25 * h..0.75 * h),
                    charge,
                )
            })
            .collect();
        Self {
            width: w,
            height: h,
            k: (dir.cos() / cfg.period, dir.sin() / cfg.period),
            singularities,
        }
    }

    /// Intensity at finger coordinates, or `None` outside the print.
    fn intensity(&self, x: f64, y: f64) -> Option<f64> {
        let (w, h) = (self.width, self.height);
        let (ex, ey) = ((x - w / 2.0) / (0.45 * w), (y - h / 2.0) / (0.45 * h));
        if ex * ex + ey * ey > 1.0 {
            return None;
        }
        let mut phase = std::f64::consts::TAU * (self.k.0 * x + self.k.1 * y);
        for &(sx, sy, q) in &self.singularities {
            phase += q * (y - sy).atan2(x - sx);
        }
        Some(128.0 + 100.0 * phase.cos())
    }

    /// Image of the finger placed by `view` (finger to image coordinates),
    /// with Gaussian intensity noise.
    pub fn render(&self, view: &Transform, noise_sigma: f64, rng: &mut ChaCha8Rng) -> GrayImage {
        let (w, h) = (self.width as usize, self.height as usize);
        let back = view.inverse();
        let noise = Normal::new(0.0, noise_sigma.max(0.0)).expect("finite sigma");
        let mut img = GrayImage::filled(w, h, 230).expect("nonzero size");
        for y in 0..h {
            for x in 0..w {
                let (fx, fy) = back.apply_point(x as f64, y as f64);
                let base = self.intensity(fx, fy).unwrap_or(230.0);
                let v = if noise_sigma > 0.0 {
                    base + noise.sample(rng)
                } else {
                    base
                };
                img.set(x, y, v.round().clamp(0.0, 255.0) as u8);
            }
        }
        img
    }
}

/// Noise-free image of a random finger in its own frame.
pub fn render_print(rng: &mut ChaCha8Rng, cfg: &RenderConfig) -> GrayImage {
    RidgePattern::random(rng, cfg).render(&Transform::IDENTITY, 0.0, rng)
}

/// `fingers × impressions` rendered images; each impression views the
/// finger under its own small rotation about the image center, shift and
/// noise.
pub fn image_database(
    seed: u64,
    fingers: u32,
    impressions: u32,
    cfg: &RenderConfig,
) -> Vec<(FingerId, GrayImage)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cx, cy) = (cfg.width as f64 / 2.0, cfg.height as f64 / 2.0);
    let mut out = Vec::new();
    for f in 1..=fingers {
        let pattern = RidgePattern::random(&mut rng, cfg);
        for i in 1..=impressions {
            let dtheta = rng.random_range(-cfg.max_rotation..=cfg.max_rotation);
            let (rx, ry) = Transform::new(1.0, dtheta, 0.0, 0.0).apply_point(cx, cy);
            let view = Transform::new(
                1.0,
                dtheta,
                cx - rx + rng.random_range(-cfg.max_translation..=cfg.max_translation),
                cy - ry + rng.random_range(-cfg.max_translation..=cfg.max_translation),
            );
            out.push((
                FingerId::new(f, i),
                pattern.render(&view, cfg.noise_sigma, &mut rng),
            ));
        }
    }
    out
}
