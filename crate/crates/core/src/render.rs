//! Spatially varying Gaussian defocus.
//!
//! Every distinct sigma in the defocus map gets one full-frame separable blur;
//! each output pixel is then taken from the layer matching its own sigma.
//! Pixels with `t = 0` are copied from the input untouched.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::defocus::{DefocusMap, SigmaTable};
use crate::raster::Raster;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("sigma must be positive and finite, got {0}")]
    NonPositiveSigma(f64),
    #[error("no sigma for blur level {0}")]
    MissingSigmaLevel(u8),
    #[error("image is {image:?} but defocus map is {map:?}")]
    DimensionMismatch { image: (usize, usize), map: (usize, usize) },
}

/// Reflects an out-of-range index into `0..len` about the edge samples
/// (`-1 -> 1`, `len -> len - 2`), repeating as often as needed.
pub fn mirror_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    (if m < len as isize { m } else { period - m }) as usize
}

/// Normalized 1-D Gaussian truncated at `ceil(3 sigma)` taps per side.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    weights: Vec<f64>,
}

impl GaussianKernel {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub fn gaussian_kernel(sigma: f64) -> Result<GaussianKernel, RenderError> {
    if sigma.is_nan() || sigma <= 0.0 || sigma.is_infinite() {
        return Err(RenderError::NonPositiveSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let mut weights: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x / denom).exp()
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    Ok(GaussianKernel { sigma, radius, weights })
}

/// Separable Gaussian blur, horizontal then vertical, with mirrored borders.
/// Intermediate values stay in floating point; `sigma == 0` copies the input.
pub fn blur_uniform(img: &Raster, sigma: f64) -> Result<Raster, RenderError> {
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma)?;
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let r = kernel.radius as isize;
    let src = img.data();

    // index lookups are hoisted so the inner loops stay branch-free
    let cols: Vec<Vec<usize>> = (0..w as isize).map(|x| (-r..=r).map(|k| mirror_index(x + k, w)).collect()).collect();
    let rows: Vec<Vec<usize>> = (0..h as isize).map(|y| (-r..=r).map(|k| mirror_index(y + k, h)).collect()).collect();

    let mut horiz = vec![0.0f64; w * h * c];
    horiz.par_chunks_mut(w * c).enumerate().for_each(|(y, row)| {
        let line = &src[y * w * c..(y + 1) * w * c];
        for x in 0..w {
            for ch in 0..c {
                row[x * c + ch] =
                    kernel.weights.iter().zip(&cols[x]).map(|(wt, &sx)| wt * f64::from(line[sx * c + ch])).sum();
            }
        }
    });

    let mut out = vec![0u8; w * h * c];
    out.par_chunks_mut(w * c).enumerate().for_each(|(y, row)| {
        for (i, px) in row.iter_mut().enumerate() {
            let v: f64 = kernel.weights.iter().zip(&rows[y]).map(|(wt, &sy)| wt * horiz[sy * w * c + i]).sum();
            *px = v.round().clamp(0.0, 255.0) as u8;
        }
    });
    Ok(Raster::new(w, h, c, out).expect("dimensions copied from a valid raster"))
}

/// Renders the defocus: one blurred layer per distinct sigma, hard per-pixel selection.
pub fn composite_defocus(img: &Raster, dm: &DefocusMap, st: &SigmaTable) -> Result<Raster, RenderError> {
    if (img.width(), img.height()) != (dm.width(), dm.height()) {
        return Err(RenderError::DimensionMismatch {
            image: (img.width(), img.height()),
            map: (dm.width(), dm.height()),
        });
    }

    // sigma bits -> pixel indices; BTreeMap keeps the layer order fixed
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &t) in dm.levels().iter().enumerate() {
        if t == 0 {
            continue;
        }
        let sigma = st.get(t).ok_or(RenderError::MissingSigmaLevel(t))?;
        if sigma > 0.0 {
            groups.entry(sigma.to_bits()).or_default().push(i);
        }
    }

    let c = img.channels();
    let layers: Vec<(Vec<usize>, Vec<u8>)> = groups
        .into_par_iter()
        .map(|(bits, pixels)| {
            let layer = blur_uniform(img, f64::from_bits(bits))?;
            let samples = pixels.iter().flat_map(|&p| layer.data()[p * c..(p + 1) * c].iter().copied()).collect();
            Ok((pixels, samples))
        })
        .collect::<Result<_, RenderError>>()?;

    let mut out = img.data().to_vec();
    for (pixels, samples) in layers {
        for (&p, px) in pixels.iter().zip(samples.chunks_exact(c)) {
            out[p * c..(p + 1) * c].copy_from_slice(px);
        }
    }
    Ok(Raster::new(img.width(), img.height(), c, out).expect("dimensions copied from a valid raster"))
}

/// Mean absolute 4-neighbour Laplacian over interior pixels, averaged across channels.
///
/// When `mask` is given only pixels flagged `true` are counted. Returns 0 when
/// no pixel qualifies.
pub fn mean_abs_laplacian(img: &Raster, mask: Option<&[bool]>) -> f64 {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let d = img.data();
    let at = |x: usize, y: usize, ch: usize| f64::from(d[(y * w + x) * c + ch]);
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            if mask.is_some_and(|m| !m[y * w + x]) {
                continue;
            }
            for ch in 0..c {
                let lap =
                    4.0 * at(x, y, ch) - at(x - 1, y, ch) - at(x + 1, y, ch) - at(x, y - 1, ch) - at(x, y + 1, ch);
                sum += lap.abs();
            }
            n += c;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
