//! Gaussian scale space, Difference-of-Gaussians stack and keypoint
//! detection for 1-D signals.
//!
//! A single octave is kept at full resolution: positions in every level are
//! positions in the raw signal, so no coordinate mapping is needed when
//! descriptors are anchored back onto the samples. Levels use blurs
//! `sigma0 * k^i` and are built incrementally; the number of levels is
//! bounded by the largest Gaussian kernel that still fits inside the
//! signal.

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Minimum scale levels: 4 levels give 3 DoG levels, the least that leaves
/// one level with both scale neighbors for the extremum test.
pub const MIN_LEVELS: usize = 4;

/// Parameters of the scale-space pyramid.
#[derive(Debug, Clone)]
pub struct ScaleSpaceParams {
    /// Base blur of level 0.
    pub sigma0: f64,
    /// Multiplicative scale step between levels; must exceed 1.
    pub k: f64,
    /// Optional cap on the number of levels.
    pub max_levels: Option<usize>,
    /// Keypoints need |DoG| strictly above this.
    pub contrast_threshold: f64,
}

impl Default for ScaleSpaceParams {
    fn default() -> Self {
        Self {
            sigma0: 1.6,
            k: 2f64.powf(0.25),
            max_levels: None,
            contrast_threshold: 0.0,
        }
    }
}

impl ScaleSpaceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::InvalidParam(format!(
                "sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        if !(self.k.is_finite() && self.k > 1.0) {
            return Err(Error::InvalidParam(format!(
                "k must be > 1, got {}",
                self.k
            )));
        }
        if !(self.contrast_threshold.is_finite() && self.contrast_threshold >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "contrast_threshold must be non-negative, got {}",
                self.contrast_threshold
            )));
        }
        Ok(())
    }

    /// Blur of level `i`.
    pub fn sigma_at(&self, i: usize) -> f64 {
        self.sigma0 * self.k.powi(i as i32)
    }
}

/// One blurred level.
#[derive(Debug, Clone)]
pub struct ScaleLevel {
    pub sigma: f64,
    pub samples: Vec<f64>,
}

/// The Gaussian pyramid (single octave, full resolution).
#[derive(Debug, Clone)]
pub struct ScaleSpace {
    pub levels: Vec<ScaleLevel>,
}

/// One DoG level: the difference between two adjacent blurred levels.
#[derive(Debug, Clone)]
pub struct DoGLevel {
    /// Blur of the upper of the two differenced levels.
    pub sigma_hi: f64,
    pub diff: Vec<f64>,
}

/// Stack of DoG levels; level `i` is `levels[i+1] - levels[i]`.
#[derive(Debug, Clone)]
pub struct DoGStack {
    pub levels: Vec<DoGLevel>,
}

/// Extremum polarity in the DoG stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Maximum,
    Minimum,
}

/// A scale-space extremum, located in raw signal coordinates.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Keypoint {
    /// Sample index in the original signal.
    pub position: usize,
    /// DoG level index.
    pub scale_index: usize,
    /// Nominal blur of the keypoint's DoG level (the lower differenced level).
    pub sigma: f64,
    pub dog_value: f64,
    pub polarity: Polarity,
}

/// Builds the normalized Gaussian kernel for `sigma`.
///
/// Radius is `ceil(4 * sigma)`; the truncated tail mass is below 1e-4 and
/// renormalization removes the residual. The result is symmetric and sums
/// to 1 within 1e-12.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    debug_assert!(sigma > 0.0);
    let radius = (4.0 * sigma).ceil() as usize;
    let len = 2 * radius + 1;
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    let mut weights: Vec<f64> = (0..len)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x * inv_two_sigma2).exp()
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    weights
}

/// Kernel length `2 * ceil(4 sigma) + 1` without materializing the kernel.
pub fn kernel_len(sigma: f64) -> usize {
    2 * (4.0 * sigma).ceil() as usize + 1
}

/// Same-length convolution with reflected boundaries (index -i maps to i,
/// index len-1+i maps to len-1-i).
pub fn convolve_reflect(samples: &[f64], kernel: &[f64]) -> Result<Vec<f64>> {
    assert!(kernel.len() % 2 == 1, "kernel length must be odd");
    let n = samples.len() as isize;
    let radius = (kernel.len() / 2) as isize;
    if radius >= n {
        return Err(Error::KernelTooLong {
            kernel_len: kernel.len(),
            signal_len: samples.len(),
        });
    }
    let mut out = Vec::with_capacity(samples.len());
    for x in 0..n {
        let mut acc = 0.0;
        for (j, w) in kernel.iter().enumerate() {
            let mut idx = x + j as isize - radius;
            if idx < 0 {
                idx = -idx;
            } else if idx >= n {
                idx = 2 * (n - 1) - idx;
            }
            acc += w * samples[idx as usize];
        }
        out.push(acc);
    }
    Ok(out)
}

/// Builds the Gaussian pyramid.
///
/// Level 0 is the signal blurred at `sigma0`; level `i` adds the semigroup
/// increment `sqrt(sigma_i^2 - sigma_{i-1}^2)` on top of level `i-1`, so
/// each level's effective blur is exactly `sigma0 * k^i`. Levels stop when
/// the next level's full kernel would no longer fit inside the signal.
pub fn build_scale_space(signal: &Signal, params: &ScaleSpaceParams) -> Result<ScaleSpace> {
    params.validate()?;
    let len = signal.len();
    let mut n_levels = 0usize;
    while kernel_len(params.sigma_at(n_levels)) <= len {
        n_levels += 1;
        if let Some(cap) = params.max_levels {
            if n_levels >= cap {
                break;
            }
        }
    }
    if n_levels < MIN_LEVELS {
        return Err(Error::TooFewLevels {
            levels: n_levels,
            required: MIN_LEVELS,
        });
    }

    let mut levels: Vec<ScaleLevel> = Vec::with_capacity(n_levels);
    let base = convolve_reflect(&signal.samples, &gaussian_kernel(params.sigma0))?;
    levels.push(ScaleLevel {
        sigma: params.sigma0,
        samples: base,
    });
    for i in 1..n_levels {
        let sigma_i = params.sigma_at(i);
        let sigma_prev = params.sigma_at(i - 1);
        let sigma_inc = (sigma_i * sigma_i - sigma_prev * sigma_prev).sqrt();
        let samples = convolve_reflect(&levels[i - 1].samples, &gaussian_kernel(sigma_inc))?;
        levels.push(ScaleLevel {
            sigma: sigma_i,
            samples,
        });
    }
    Ok(ScaleSpace { levels })
}

/// Differences adjacent pyramid levels.
pub fn build_dog(space: &ScaleSpace) -> Result<DoGStack> {
    if space.levels.len() < 2 {
        return Err(Error::TooFewDogLevels {
            levels: space.levels.len(),
            required: 2,
        });
    }
    let levels = space
        .levels
        .windows(2)
        .map(|w| DoGLevel {
            sigma_hi: w[1].sigma,
            diff: w[1]
                .samples
                .iter()
                .zip(&w[0].samples)
                .map(|(hi, lo)| hi - lo)
                .collect(),
        })
        .collect();
    Ok(DoGStack { levels })
}

/// Finds 8-neighbor extrema of the DoG stack.
///
/// A point qualifies when its value is strictly above (maximum) or strictly
/// below (minimum) its two spatial neighbors and the three neighbors in
/// each adjacent DoG level, and `|value|` exceeds the contrast threshold.
/// Boundary samples and the first/last DoG level never qualify. Output is
/// sorted by position, then scale index.
pub fn detect_keypoints(dog: &DoGStack, params: &ScaleSpaceParams) -> Result<Vec<Keypoint>> {
    if dog.levels.len() < 3 {
        return Err(Error::TooFewDogLevels {
            levels: dog.levels.len(),
            required: 3,
        });
    }
    let len = dog.levels[0].diff.len();
    let mut keypoints = Vec::new();
    for k in 1..dog.levels.len() - 1 {
        let below = &dog.levels[k - 1].diff;
        let here = &dog.levels[k].diff;
        let above = &dog.levels[k + 1].diff;
        for x in 1..len - 1 {
            let v = here[x];
            if v.abs() <= params.contrast_threshold {
                continue;
            }
            let neighbors = [
                here[x - 1],
                here[x + 1],
                below[x - 1],
                below[x],
                below[x + 1],
                above[x - 1],
                above[x],
                above[x + 1],
            ];
            let polarity = if neighbors.iter().all(|&n| v > n) {
                Some(Polarity::Maximum)
            } else if neighbors.iter().all(|&n| v < n) {
                Some(Polarity::Minimum)
            } else {
                None
            };
            if let Some(polarity) = polarity {
                keypoints.push(Keypoint {
                    position: x,
                    scale_index: k,
                    sigma: params.sigma_at(k),
                    dog_value: v,
                    polarity,
                });
            }
        }
    }
    keypoints.sort_by(|a, b| {
        a.position
            .cmp(&b.position)
            .then(a.scale_index.cmp(&b.scale_index))
    });
    Ok(keypoints)
}
