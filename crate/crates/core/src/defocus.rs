//! Defocus map: linear blur levels, their distribution, the blur adjustment
//! factor and the per-level Gaussian sigma.
//!
//! A pixel's linear blur level `t` is its depth distance to the in-focus
//! range. The adjustment factor `alpha` is the mean positive `t`, divided by
//! 255. Each level then gets `sigma_t = alpha * t`, divided by `gamma` when
//! `alpha >= beta`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth_roi::DepthOfInterest;
use crate::raster::{DepthMap, Raster};

pub const DEFAULT_BETA: f64 = 0.2;
pub const DEFAULT_GAMMA: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum DefocusError {
    #[error("gamma must exceed 1.0, got {0}")]
    InvalidGamma(f64),
    #[error("beta must lie in (0, 1), got {0}")]
    InvalidBeta(f64),
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
}

/// Per-pixel linear blur level, 0 inside the in-focus range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefocusMap {
    width: usize,
    height: usize,
    t_grid: Vec<u8>,
}

impl DefocusMap {
    pub fn from_levels(width: usize, height: usize, t_grid: Vec<u8>) -> Option<Self> {
        (t_grid.len() == width * height).then_some(Self { width, height, t_grid })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> &[u8] {
        &self.t_grid
    }

    pub fn is_all_in_focus(&self) -> bool {
        self.t_grid.iter().all(|&t| t == 0)
    }

    /// The map as an 8-bit gray raster of `t` values.
    pub fn to_raster(&self) -> Raster {
        Raster::new(self.width, self.height, 1, self.t_grid.clone()).expect("map dimensions are valid")
    }
}

/// Pixel counts for each distinct positive blur level.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlurHistogram {
    entries: BTreeMap<u8, u64>,
    total: u64,
}

impl BlurHistogram {
    pub fn from_entries(entries: impl IntoIterator<Item = (u8, u64)>) -> Self {
        let mut h = Self::default();
        for (t, c) in entries {
            if t > 0 && c > 0 {
                *h.entries.entry(t).or_default() += c;
                h.total += c;
            }
        }
        h
    }

    pub fn entries(&self) -> &BTreeMap<u8, u64> {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefocusParams {
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl DefocusParams {
    pub fn new(beta: f64, gamma: f64, alpha: f64) -> Result<Self, DefocusError> {
        let p = Self { beta, gamma, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DefocusError> {
        validate_beta_gamma(self.beta, self.gamma)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(DefocusError::InvalidAlpha(self.alpha));
        }
        Ok(())
    }

    /// Whether the slope is divided by gamma (`alpha >= beta`).
    pub fn is_damped(&self) -> bool {
        self.alpha >= self.beta
    }

    pub fn sigma_for(&self, t: u8) -> f64 {
        let undamped = self.alpha * f64::from(t);
        if self.is_damped() {
            undamped / self.gamma
        } else {
            undamped
        }
    }
}

pub fn validate_beta_gamma(beta: f64, gamma: f64) -> Result<(), DefocusError> {
    if gamma.is_nan() || gamma <= 1.0 || gamma.is_infinite() {
        return Err(DefocusError::InvalidGamma(gamma));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(DefocusError::InvalidBeta(beta));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaEntry {
    pub t: u8,
    pub sigma: f64,
}

/// Gaussian sigma for each blur level present, always including `t = 0 -> 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaTable {
    sigmas: BTreeMap<u8, f64>,
    damped: bool,
}

impl SigmaTable {
    pub fn get(&self, t: u8) -> Option<f64> {
        self.sigmas.get(&t).copied()
    }

    pub fn is_damped(&self) -> bool {
        self.damped
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn entries(&self) -> Vec<SigmaEntry> {
        self.sigmas.iter().map(|(&t, &sigma)| SigmaEntry { t, sigma }).collect()
    }
}

/// Distance from each pixel's depth to the closed range `[f_min, f_max]`.
pub fn build_defocus_map(d: &DepthMap, roi: &DepthOfInterest) -> DefocusMap {
    let t_grid =
        d.levels().iter().map(|&level| roi.f_min.saturating_sub(level).max(level.saturating_sub(roi.f_max))).collect();
    DefocusMap { width: d.width(), height: d.height(), t_grid }
}

pub fn build_blur_histogram(dm: &DefocusMap) -> BlurHistogram {
    let mut counts = [0u64; 256];
    for &t in &dm.t_grid {
        counts[t as usize] += 1;
    }
    BlurHistogram::from_entries(counts.iter().enumerate().skip(1).map(|(t, &c)| (t as u8, c)))
}

/// Mean positive blur level over 255; 0 when nothing is out of focus.
pub fn compute_alpha(bh: &BlurHistogram) -> f64 {
    if bh.total == 0 {
        return 0.0;
    }
    let weighted: u64 = bh.entries.iter().map(|(&t, &c)| u64::from(t) * c).sum();
    weighted as f64 / bh.total as f64 / 255.0
}

pub fn build_sigma_table(bh: &BlurHistogram, params: &DefocusParams) -> Result<SigmaTable, DefocusError> {
    params.validate()?;
    let mut sigmas = BTreeMap::new();
    sigmas.insert(0, 0.0);
    for &t in bh.entries.keys() {
        sigmas.insert(t, params.sigma_for(t));
    }
    Ok(SigmaTable { sigmas, damped: params.is_damped() })
}
