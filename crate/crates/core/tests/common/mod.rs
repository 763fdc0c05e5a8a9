//! Scene builders and independent reference implementations shared by the
//! integration suites. Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use dofauto::{DepthMap, Raster, SaliencyMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random RGB texture.
pub fn noise_rgb(w: usize, h: usize, seed: u64) -> Raster {
    let mut r = rng(seed);
    let data = (0..w * h * 3).map(|_| r.gen()).collect();
    Raster::new(w, h, 3, data).unwrap()
}

pub fn grid<T>(w: usize, h: usize, f: impl Fn(usize, usize) -> T) -> Vec<T> {
    (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect()
}

pub fn depth(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> DepthMap {
    DepthMap::new(w, h, grid(w, h, f)).unwrap()
}

/// Binary external saliency: 1 where `f` holds, 0 elsewhere.
pub fn binary_saliency(w: usize, h: usize, f: impl Fn(usize, usize) -> bool) -> SaliencyMap {
    SaliencyMap::new(w, h, grid(w, h, |x, y| if f(x, y) { 1.0 } else { 0.0 })).unwrap()
}

/// Exhaustive Otsu: every split recomputed from raw counts, smallest maximizer
/// within a 1e-12 relative tie band, lowest populated bin when no split separates.
pub fn otsu_oracle(counts: &[u64; 256]) -> u8 {
    let total: u64 = counts.iter().sum();
    let mut scores = [0f64; 256];
    for (k, score) in scores.iter_mut().enumerate() {
        let (mut n0, mut n1, mut s0, mut s1) = (0u64, 0u64, 0u64, 0u64);
        for (level, &c) in counts.iter().enumerate() {
            if level <= k {
                n0 += c;
                s0 += c * level as u64;
            } else {
                n1 += c;
                s1 += c * level as u64;
            }
        }
        if n0 > 0 && n1 > 0 {
            let w0 = n0 as f64 / total as f64;
            let w1 = n1 as f64 / total as f64;
            let d = s0 as f64 / n0 as f64 - s1 as f64 / n1 as f64;
            *score = w0 * w1 * d * d;
        }
    }
    let best = scores.iter().copied().fold(0.0, f64::max);
    if best == 0.0 {
        return counts.iter().position(|&c| c > 0).unwrap() as u8;
    }
    scores.iter().position(|&s| s >= best * (1.0 - 1e-12)).unwrap() as u8
}

/// Random histogram with a random number of modes, spread and sparsity.
pub fn random_histogram(r: &mut ChaCha8Rng) -> [u64; 256] {
    let mut counts = [0u64; 256];
    match r.gen_range(0..4) {
        // a few isolated spikes
        0 => {
            for _ in 0..r.gen_range(1..6) {
                counts[r.gen_range(0..256)] += r.gen_range(1..500);
            }
        }
        // mixture of gaussian-ish bumps
        1 => {
            for _ in 0..r.gen_range(1..4) {
                let center: f64 = r.gen_range(0.0..255.0);
                let spread: f64 = r.gen_range(1.0..40.0);
                let mass = r.gen_range(10..2000);
                for _ in 0..mass {
                    let u: f64 = (0..6).map(|_| r.gen_range(-1.0..1.0)).sum::<f64>() / 6.0_f64.sqrt();
                    let v = (center + u * spread).round().clamp(0.0, 255.0) as usize;
                    counts[v] += 1;
                }
            }
        }
        // dense uniform noise
        2 => {
            for c in counts.iter_mut() {
                *c = r.gen_range(0..100);
            }
        }
        // sparse random support
        _ => {
            for c in counts.iter_mut() {
                if r.gen_bool(0.05) {
                    *c = r.gen_range(1..1000);
                }
            }
        }
    }
    if counts.iter().all(|&c| c == 0) {
        counts[r.gen_range(0..256)] = 1;
    }
    counts
}

/// Gaussian weights built directly from the definition (truncate at ceil(3σ), normalize).
pub fn reference_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Edge-reflecting index: -1 -> 1, n -> n - 2, applied repeatedly.
pub fn reflect(mut i: i64, n: i64) -> usize {
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// Direct 2-D convolution with the outer-product Gaussian, no separability.
pub fn brute_force_blur(img: &Raster, sigma: f64) -> Raster {
    let k = reference_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h, c) = (img.width() as i64, img.height() as i64, img.channels());
    let mut out = Vec::with_capacity(img.data().len());
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = reflect(x + dx, w);
                        let sy = reflect(y + dy, h);
                        let v = img.data()[(sy * w as usize + sx) * c + ch];
                        acc += k[(dx + r) as usize] * k[(dy + r) as usize] * f64::from(v);
                    }
                }
                out.push(acc.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Raster::new(img.width(), img.height(), c, out).unwrap()
}

/// Mean absolute 4-neighbour Laplacian over the pixels where `keep` holds
/// and all four neighbours are inside the frame.
pub fn laplacian_energy(img: &Raster, keep: impl Fn(usize, usize) -> bool) -> f64 {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let at = |x: usize, y: usize, ch: usize| f64::from(img.data()[(y * w + x) * c + ch]);
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if !keep(x, y) {
                continue;
            }
            for ch in 0..c {
                sum += (4.0 * at(x, y, ch) - at(x - 1, y, ch) - at(x + 1, y, ch) - at(x, y - 1, ch) - at(x, y + 1, ch))
                    .abs();
                n += 1;
            }
        }
    }
    sum / n as f64
}
