use crate::config::BinarizeMethod;
use crate::error::Result;

use super::{BinaryImage, GrayImage};

/// Ridges are dark: a pixel is foreground iff its intensity is below the
/// threshold.
pub fn binarize(img: &GrayImage, method: BinarizeMethod) -> Result<BinaryImage> {
    let threshold = match method {
        BinarizeMethod::Fixed(t) => u16::from(t),
        BinarizeMethod::Otsu => otsu_threshold(img),
    };
    let bits = img
        .samples()
        .iter()
        .map(|&v| u16::from(v) < threshold)
        .collect();
    BinaryImage::new(img.width(), img.height(), bits)
}

/// Threshold `t ∈ [0, 256]` maximizing the between-class variance of the
/// partition `{v < t}` / `{v ≥ t}`; ties go to the smaller threshold. A
/// single-valued histogram yields 0 (nothing is foreground).
pub fn otsu_threshold(img: &GrayImage) -> u16 {
    let mut hist = [0u64; 256];
    for &v in img.samples() {
        hist[v as usize] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let (mut n0, mut sum0) = (0u64, 0u64);
    let (mut best_t, mut best_var) = (0u16, 0.0f64);
    for t in 1..=256u16 {
        let v = (t - 1) as usize;
        n0 += hist[v];
        sum0 += v as u64 * hist[v];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let mu0 = sum0 as f64 / n0 as f64;
        let mu1 = (total_sum - sum0) as f64 / n1 as f64;
        let w0 = n0 as f64 / total as f64;
        let var = w0 * (1.0 - w0) * (mu0 - mu1) * (mu0 - mu1);
        if var > best_var {
            best_var = var;
            best_t = t;
        }
    }
    best_t
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Between-class variance of every threshold, computed directly from the
    /// two pixel classes.
    fn exhaustive_best(samples: &[u8]) -> u16 {
        let mut best = (0u16, 0.0f64);
        for t in 0..=256u16 {
            let lo: Vec<f64> = samples
                .iter()
                .filter(|&&v| u16::from(v) < t)
                .map(|&v| v as f64)
                .collect();
            let hi: Vec<f64> = samples
                .iter()
                .filter(|&&v| u16::from(v) >= t)
                .map(|&v| v as f64)
                .collect();
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let n = samples.len() as f64;
            let m_lo = lo.iter().sum::<f64>() / lo.len() as f64;
            let m_hi = hi.iter().sum::<f64>() / hi.len() as f64;
            let var = (lo.len() as f64 / n) * (hi.len() as f64 / n) * (m_lo - m_hi).powi(2);
            if var > best.1 + 1e-9 {
                best = (t, var);
            }
        }
        best.0
    }

    #[test]
    fn uniform_bright_image_is_background() {
        let img = GrayImage::filled(8, 8, 200).unwrap();
        assert_eq!(
            binarize(&img, BinarizeMethod::Fixed(128)).unwrap().count(),
            0
        );
        assert_eq!(binarize(&img, BinarizeMethod::Otsu).unwrap().count(), 0);
    }

    #[test]
    fn checkerboard_fixed() {
        let samples: Vec<u8> = (0..36)
            .map(|i| if (i % 6 + i / 6) % 2 == 0 { 0 } else { 255 })
            .collect();
        let img = GrayImage::new(6, 6, samples.clone()).unwrap();
        let bin = binarize(&img, BinarizeMethod::Fixed(128)).unwrap();
        for (b, s) in bin.bits().iter().zip(&samples) {
            assert_eq!(*b, *s == 0);
        }
    }

    #[test]
    fn otsu_matches_exhaustive_search_on_bimodal() {
        let samples: Vec<u8> = (0..400)
            .map(|i| if i % 2 == 0 { 50 } else { 200 })
            .collect();
        let img = GrayImage::new(20, 20, samples.clone()).unwrap();
        let t = otsu_threshold(&img);
        let oracle = exhaustive_best(&samples);
        assert_eq!(t, oracle);
        assert_eq!(t, 51);
        let bin = binarize(&img, BinarizeMethod::Otsu).unwrap();
        for (b, s) in bin.bits().iter().zip(&samples) {
            assert_eq!(*b, *s == 50);
        }
    }

    #[test]
    fn otsu_matches_exhaustive_search_on_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let samples: Vec<u8> = (0..256)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        rng.random_range(20..90)
                    } else {
                        rng.random_range(120..240)
                    }
                })
                .collect();
            let img = GrayImage::new(16, 16, samples.clone()).unwrap();
            let t = otsu_threshold(&img);
            let o = exhaustive_best(&samples);
            // same partition even when the argmax sits on an empty bin run
            let part = |t: u16| {
                samples
                    .iter()
                    .map(|&v| u16::from(v) < t)
                    .collect::<Vec<_>>()
            };
            assert_eq!(part(t), part(o));
        }
    }
}
