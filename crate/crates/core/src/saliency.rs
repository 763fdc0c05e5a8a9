//! Center-surround saliency and saliency thresholding.
//!
//! The built-in detector is a small Itti-style difference-of-Gaussians
//! pyramid on the intensity channel. Any other detector can be used by
//! loading its output as a map with [`SaliencyMap::from_raster`].

use thiserror::Error;

use crate::histogram::{build_histogram, otsu_threshold};
use crate::raster::Raster;
use crate::render::mirror_index as mirror;

/// Smallest width or height the five-level pyramid accepts.
pub const MIN_DIMENSION: usize = 16;

const PYRAMID_LEVELS: usize = 5;
const CENTER_LEVELS: [usize; 2] = [0, 1];
const SURROUND_OFFSETS: [usize; 2] = [2, 3];
const BINOMIAL_5: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

#[derive(Debug, Error, PartialEq)]
pub enum SaliencyError {
    #[error("image is {width}x{height}; saliency needs at least {MIN_DIMENSION} pixels per side")]
    ImageTooSmall { width: usize, height: usize },
    #[error("saliency input must be single-channel, got {0} channels")]
    NotGrayscale(usize),
    #[error("saliency value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("fixed threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("saliency map has {actual} values, expected {expected}")]
    SizeMismatch { expected: usize, actual: usize },
}

/// Per-pixel salience in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, SaliencyError> {
        if values.len() != width * height {
            return Err(SaliencyError::SizeMismatch { expected: width * height, actual: values.len() });
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SaliencyError::OutOfRange(bad));
        }
        Ok(Self { width, height, values })
    }

    /// Interprets 8-bit samples as salience `v / 255`.
    pub fn from_raster(r: &Raster) -> Result<Self, SaliencyError> {
        if r.channels() != 1 {
            return Err(SaliencyError::NotGrayscale(r.channels()));
        }
        let values = r.data().iter().map(|&v| f64::from(v) / 255.0).collect();
        Ok(Self { width: r.width(), height: r.height(), values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Quantized 8-bit view, `round(255 v)`.
    pub fn to_raster(&self) -> Raster {
        let data = self.values.iter().map(|v| quantize(*v)).collect();
        Raster::new(self.width, self.height, 1, data).expect("dimensions already validated")
    }
}

/// Binarized saliency; `true` marks a salient pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SalientMask {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl SalientMask {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Result<Self, SaliencyError> {
        if flags.len() != width * height {
            return Err(SaliencyError::SizeMismatch { expected: width * height, actual: flags.len() });
        }
        Ok(Self { width, height, flags })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn salient_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdPolicy {
    Otsu,
    /// Pixels with salience strictly above the value are salient.
    Fixed(f64),
}

impl std::str::FromStr for ThresholdPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("otsu") {
            return Ok(Self::Otsu);
        }
        let v = s
            .strip_prefix("fixed:")
            .ok_or_else(|| format!("expected 'otsu' or 'fixed:V', got '{s}'"))?
            .parse::<f64>()
            .map_err(|e| format!("bad fixed threshold: {e}"))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("fixed threshold {v} outside [0, 1]"));
        }
        Ok(Self::Fixed(v))
    }
}

impl std::fmt::Display for ThresholdPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Otsu => write!(f, "otsu"),
            Self::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Single-channel floating point plane used inside the pyramid.
#[derive(Clone, Debug)]
struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

fn smooth_and_halve(p: &Plane) -> Plane {
    let (w, h) = (p.width, p.height);
    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            horiz[y * w + x] = BINOMIAL_5
                .iter()
                .enumerate()
                .map(|(k, wt)| wt * p.data[y * w + mirror(x as isize + k as isize - 2, w)])
                .sum();
        }
    }
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    let mut data = Vec::with_capacity(nw * nh);
    for ny in 0..nh {
        let y = 2 * ny;
        for nx in 0..nw {
            let x = 2 * nx;
            let v: f64 = BINOMIAL_5
                .iter()
                .enumerate()
                .map(|(k, wt)| wt * horiz[mirror(y as isize + k as isize - 2, h) * w + x])
                .sum();
            data.push(v);
        }
    }
    Plane { width: nw, height: nh, data }
}

/// Multi-scale center-surround saliency of a gray image, min-max normalized to `[0, 1]`.
///
/// Centers are pyramid levels 0 and 1, surrounds sit 2 and 3 levels coarser.
/// A flat response yields an all-zero map.
pub fn compute_saliency(gray: &Raster) -> Result<SaliencyMap, SaliencyError> {
    if gray.channels() != 1 {
        return Err(SaliencyError::NotGrayscale(gray.channels()));
    }
    let (width, height) = (gray.width(), gray.height());
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(SaliencyError::ImageTooSmall { width, height });
    }

    let mut pyramid = Vec::with_capacity(PYRAMID_LEVELS);
    pyramid.push(Plane { width, height, data: gray.data().iter().map(|&v| f64::from(v)).collect() });
    for level in 1..PYRAMID_LEVELS {
        let next = smooth_and_halve(&pyramid[level - 1]);
        pyramid.push(next);
    }

    let mut total = vec![0.0; width * height];
    for &c in &CENTER_LEVELS {
        let center = &pyramid[c];
        let mut acc = vec![0.0; center.width * center.height];
        for &offset in &SURROUND_OFFSETS {
            let surround = &pyramid[c + offset];
            for y in 0..center.height {
                for x in 0..center.width {
                    let s = surround.at(x >> offset, y >> offset);
                    acc[y * center.width + x] += (center.at(x, y) - s).abs();
                }
            }
        }
        for y in 0..height {
            let row = (y >> c) * center.width;
            for x in 0..width {
                total[y * width + x] += acc[row + (x >> c)];
            }
        }
    }

    let (lo, hi) = total.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let values = if hi > lo {
        total.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.0; width * height]
    };
    Ok(SaliencyMap { width, height, values })
}

/// Binarizes a saliency map. A map whose values are all equal marks every pixel salient.
///
/// Under [`ThresholdPolicy::Otsu`] values are quantized to 256 bins and a map
/// whose quantized values all coincide is likewise treated as all-salient.
pub fn threshold_saliency(s: &SaliencyMap, policy: ThresholdPolicy) -> Result<SalientMask, SaliencyError> {
    let all_equal = s.values.windows(2).all(|w| w[0] == w[1]);
    let flags = if all_equal {
        vec![true; s.values.len()]
    } else {
        match policy {
            ThresholdPolicy::Otsu => {
                let bins: Vec<u8> = s.values.iter().map(|&v| quantize(v)).collect();
                if bins.windows(2).all(|w| w[0] == w[1]) {
                    vec![true; bins.len()]
                } else {
                    let k = otsu_threshold(&build_histogram(&bins).expect("map is nonempty"));
                    bins.iter().map(|&b| b > k).collect()
                }
            }
            ThresholdPolicy::Fixed(v) => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(SaliencyError::InvalidThreshold(v));
                }
                s.values.iter().map(|&x| x > v).collect()
            }
        }
    };
    Ok(SalientMask { width: s.width, height: s.height, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> Raster {
        let data = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Raster::new(w, h, 1, data).unwrap()
    }

    #[test]
    fn mirror_indexing() {
        assert_eq!(mirror(-1, 5), 1);
        assert_eq!(mirror(-2, 5), 2);
        assert_eq!(mirror(5, 5), 3);
        assert_eq!(mirror(9, 5), 1);
        assert_eq!(mirror(-7, 3), 1);
        assert_eq!(mirror(3, 1), 0);
    }

    #[test]
    fn constant_image_is_not_salient() {
        let s = compute_saliency(&gray(32, 20, |_, _| 77)).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bright_square_stands_out() {
        let img = gray(64, 64, |x, y| if (24..40).contains(&x) && (24..40).contains(&y) { 230 } else { 20 });
        let s = compute_saliency(&img).unwrap();
        let (mut inside, mut n_in, mut outside, mut n_out) = (0.0, 0, 0.0, 0);
        for y in 0..64 {
            for x in 0..64 {
                let v = s.values()[y * 64 + x];
                if (24..40).contains(&x) && (24..40).contains(&y) {
                    inside += v;
                    n_in += 1;
                } else {
                    outside += v;
                    n_out += 1;
                }
            }
        }
        assert!(inside / n_in as f64 > outside / n_out as f64);
    }

    #[test]
    fn too_small() {
        assert_eq!(
            compute_saliency(&gray(15, 40, |_, _| 0)),
            Err(SaliencyError::ImageTooSmall { width: 15, height: 40 })
        );
    }

    #[test]
    fn rejects_color() {
        let img = Raster::filled(16, 16, 3, 0).unwrap();
        assert_eq!(compute_saliency(&img), Err(SaliencyError::NotGrayscale(3)));
    }

    #[test]
    fn odd_dimensions_work() {
        let img = gray(17, 23, |x, y| ((x * 7 + y * 13) % 256) as u8);
        let s = compute_saliency(&img).unwrap();
        assert_eq!(s.values().len(), 17 * 23);
    }

    #[test]
    fn otsu_splits_bimodal_map() {
        let values: Vec<f64> = (0..100).map(|i| if i < 50 { 0.1 } else { 0.9 }).collect();
        let s = SaliencyMap::new(10, 10, values.clone()).unwrap();
        let m = threshold_saliency(&s, ThresholdPolicy::Otsu).unwrap();
        for (flag, v) in m.flags().iter().zip(&values) {
            assert_eq!(*flag, *v == 0.9);
        }
    }

    #[test]
    fn constant_map_is_all_salient() {
        let s = SaliencyMap::new(3, 3, vec![0.4; 9]).unwrap();
        for policy in [ThresholdPolicy::Otsu, ThresholdPolicy::Fixed(0.9)] {
            assert_eq!(threshold_saliency(&s, policy).unwrap().salient_count(), 9);
        }
    }

    #[test]
    fn fixed_is_strict() {
        let s = SaliencyMap::new(3, 1, vec![0.4, 0.6, 0.5]).unwrap();
        let m = threshold_saliency(&s, ThresholdPolicy::Fixed(0.5)).unwrap();
        assert_eq!(m.flags(), &[false, true, false]);
    }

    #[test]
    fn external_map_scaling() {
        let r = Raster::new(2, 1, 1, vec![0, 255]).unwrap();
        let s = SaliencyMap::from_raster(&r).unwrap();
        assert_eq!(s.values(), &[0.0, 1.0]);
        assert_eq!(s.to_raster(), r);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("otsu".parse(), Ok(ThresholdPolicy::Otsu));
        assert_eq!("fixed:0.25".parse(), Ok(ThresholdPolicy::Fixed(0.25)));
        assert!("fixed:1.5".parse::<ThresholdPolicy>().is_err());
        assert!("median".parse::<ThresholdPolicy>().is_err());
    }

    proptest! {
        #[test]
        fn output_in_unit_interval(seed in proptest::collection::vec(any::<u8>(), 16 * 18)) {
            let img = Raster::new(16, 18, 1, seed).unwrap();
            let s = compute_saliency(&img).unwrap();
            prop_assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn shift_invariant(seed in proptest::collection::vec(0u8..200, 20 * 16), shift in 1u8..55) {
            let a = Raster::new(20, 16, 1, seed.clone()).unwrap();
            let b = Raster::new(20, 16, 1, seed.iter().map(|v| v + shift).collect()).unwrap();
            let (sa, sb) = (compute_saliency(&a).unwrap(), compute_saliency(&b).unwrap());
            for (x, y) in sa.values().iter().zip(sb.values()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn fixed_threshold_monotone(values in proptest::collection::vec(0.0f64..=1.0, 1..50),
                                    a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s = SaliencyMap::new(values.len(), 1, values).unwrap();
            let m_lo = threshold_saliency(&s, ThresholdPolicy::Fixed(lo)).unwrap();
            let m_hi = threshold_saliency(&s, ThresholdPolicy::Fixed(hi)).unwrap();
            for (l, h) in m_lo.flags().iter().zip(m_hi.flags()) {
                prop_assert!(!*h || *l);
            }
        }
    }
}
