//! Depths of interest: cluster the depth levels found under salient pixels and
//! pick the range that should stay in focus.
//!
//! The distinct salient depth levels are sorted, their forward differences are
//! normalized to 8 bits and split by Otsu into "small" and "large" gaps. The
//! largest small gap becomes the proximity threshold; the sorted levels are then
//! cut into runs wherever a gap exceeds it.

use thiserror::Error;

use crate::histogram::{build_histogram, otsu_threshold};
use crate::raster::DepthMap;
use crate::saliency::SalientMask;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DepthRoiError {
    #[error("salient mask selects no pixels")]
    NoSalientPixels,
    #[error("depth map is {depth:?} but mask is {mask:?}")]
    DimensionMismatch { depth: (usize, usize), mask: (usize, usize) },
    #[error("salient depth levels must be strictly increasing with positive counts")]
    InvalidSalientDepths,
}

/// Distinct depth levels under the salient mask, ascending, with pixel counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SalientDepths {
    levels: Vec<u8>,
    pixel_counts: Vec<u64>,
}

impl SalientDepths {
    pub fn new(levels: Vec<u8>, pixel_counts: Vec<u64>) -> Result<Self, DepthRoiError> {
        let increasing = levels.windows(2).all(|w| w[0] < w[1]);
        if levels.is_empty() || levels.len() != pixel_counts.len() || !increasing || pixel_counts.contains(&0) {
            return Err(DepthRoiError::InvalidSalientDepths);
        }
        Ok(Self { levels, pixel_counts })
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn pixel_counts(&self) -> &[u64] {
        &self.pixel_counts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ClusterPolicy {
    /// Run holding the most salient pixels; ties go to the shallower run.
    #[default]
    Largest,
    /// Run containing the smallest depth level.
    First,
}

impl std::str::FromStr for ClusterPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "largest" => Ok(Self::Largest),
            "first" => Ok(Self::First),
            _ => Err(format!("expected 'largest' or 'first', got '{s}'")),
        }
    }
}

impl std::fmt::Display for ClusterPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Largest => "largest",
            Self::First => "first",
        })
    }
}

/// Closed range of in-focus depth levels plus the proximity threshold that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthOfInterest {
    pub f_min: u8,
    pub f_max: u8,
    /// Absent when there was only one salient level.
    pub t_p: Option<f64>,
}

impl DepthOfInterest {
    pub fn contains(&self, level: u8) -> bool {
        (self.f_min..=self.f_max).contains(&level)
    }
}

pub fn collect_salient_depths(d: &DepthMap, m: &SalientMask) -> Result<SalientDepths, DepthRoiError> {
    if (d.width(), d.height()) != (m.width(), m.height()) {
        return Err(DepthRoiError::DimensionMismatch { depth: (d.width(), d.height()), mask: (m.width(), m.height()) });
    }
    let mut counts = [0u64; 256];
    for (&level, &salient) in d.levels().iter().zip(m.flags()) {
        if salient {
            counts[level as usize] += 1;
        }
    }
    let (levels, pixel_counts): (Vec<u8>, Vec<u64>) =
        counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(l, &c)| (l as u8, c)).unzip();
    if levels.is_empty() {
        return Err(DepthRoiError::NoSalientPixels);
    }
    Ok(SalientDepths { levels, pixel_counts })
}

/// Gaps between consecutive salient levels; all strictly positive.
pub fn forward_differences(sd: &SalientDepths) -> Vec<u8> {
    sd.levels.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Gap size separating "near" from "far" consecutive levels, in depth-level units.
///
/// Gaps are scaled to `round(255 g / g_max)` and thresholded with Otsu; the
/// result is the largest original gap falling at or below the Otsu level, so
/// `g > t_p` holds exactly for the gaps Otsu put in the upper class.
pub fn proximity_threshold(gaps: &[u8]) -> Option<f64> {
    let &g_max = gaps.iter().max()?;
    if gaps.iter().all(|&g| g == g_max) {
        return Some(f64::from(g_max));
    }
    let normalized: Vec<u8> = gaps.iter().map(|&g| (255.0 * f64::from(g) / f64::from(g_max)).round() as u8).collect();
    let k = otsu_threshold(&build_histogram(&normalized).expect("gaps are nonempty"));
    gaps.iter().zip(&normalized).filter(|(_, &n)| n <= k).map(|(&g, _)| g).max().map(f64::from)
}

/// Splits the sorted levels at gaps strictly greater than `t_p` and picks one run.
pub fn select_depth_range(sd: &SalientDepths, t_p: Option<f64>, policy: ClusterPolicy) -> DepthOfInterest {
    let runs = split_runs(sd, t_p);
    let (start, end) = match policy {
        ClusterPolicy::First => runs[0],
        ClusterPolicy::Largest => {
            let mut best = runs[0];
            let mut best_mass = 0u64;
            for &(s, e) in &runs {
                let mass: u64 = sd.pixel_counts[s..=e].iter().sum();
                // runs are ascending, so strict ">" keeps the shallower run on ties
                if mass > best_mass {
                    best = (s, e);
                    best_mass = mass;
                }
            }
            best
        }
    };
    DepthOfInterest { f_min: sd.levels[start], f_max: sd.levels[end], t_p }
}

/// Index ranges `(first, last)` of each maximal run, ascending.
pub fn split_runs(sd: &SalientDepths, t_p: Option<f64>) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for (i, w) in sd.levels.windows(2).enumerate() {
        let gap = f64::from(w[1] - w[0]);
        if t_p.is_some_and(|t| gap > t) {
            runs.push((start, i));
            start = i + 1;
        }
    }
    runs.push((start, sd.levels.len() - 1));
    runs
}
