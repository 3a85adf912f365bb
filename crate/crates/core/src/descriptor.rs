//! Shape-extrema detection and the slope-ratio keypoint descriptor.
//!
//! A shape extremum is a peak or valley of the signal itself that passes
//! the monotonicity test: the signal must be strictly monotone for at
//! least `min_neighborhood` samples on both sides (single repeated values
//! are tolerated, longer plateaus break a run). Each keypoint is then
//! described by the slope ratios around its `n_extrema` nearest shape
//! extrema: for segment lengths `i * neighbor_step`, `i = 1..m_segments`,
//! the ratio of the right-side to left-side secant slope is recorded, with
//! the absolute value taken at peaks. The resulting `N*M` vector encodes
//! the local "hilliness" in a way that is stable under time dilation,
//! amplitude scaling and vertical offset.

use std::fmt;

use crate::error::{Error, Result};
use crate::scale_space::{gaussian_kernel, Keypoint};
use crate::signal::Signal;

/// Near-zero left slopes clamp the ratio to +-RATIO_CLAMP instead of
/// producing infinities.
const RATIO_CLAMP: f64 = 1e6;
const SLOPE_EPS: f64 = 1e-12;

/// Descriptor construction parameters.
#[derive(Debug, Clone)]
pub struct DescriptorParams {
    /// Number of extrema per keypoint (even, half on each side).
    pub n_extrema: usize,
    /// Segments per extremum side.
    pub m_segments: usize,
    /// Sample spacing between successive slope endpoints.
    pub neighbor_step: usize,
    /// Minimum monotone run, in samples, on both sides of an extremum.
    pub min_neighborhood: usize,
    /// When set, extrema and slopes are computed on a copy of the signal
    /// blurred at this sigma instead of the raw samples.
    pub smooth_sigma: Option<f64>,
}

impl Default for DescriptorParams {
    fn default() -> Self {
        Self {
            n_extrema: 4,
            m_segments: 4,
            neighbor_step: 5,
            min_neighborhood: 20,
            smooth_sigma: None,
        }
    }
}

impl DescriptorParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_extrema < 2 || self.n_extrema % 2 != 0 {
            return Err(Error::InvalidParam(format!(
                "n_extrema must be even and >= 2, got {}",
                self.n_extrema
            )));
        }
        if self.m_segments < 1 {
            return Err(Error::InvalidParam("m_segments must be >= 1".into()));
        }
        if self.neighbor_step < 1 {
            return Err(Error::InvalidParam("neighbor_step must be >= 1".into()));
        }
        if self.min_neighborhood < 2 {
            return Err(Error::InvalidParam(
                "min_neighborhood must be >= 2".into(),
            ));
        }
        if let Some(s) = self.smooth_sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "smooth_sigma must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Descriptor vector length.
    pub fn descriptor_len(&self) -> usize {
        self.n_extrema * self.m_segments
    }
}

/// Peak or valley of the signal shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Peak,
    Valley,
}

/// An accepted shape extremum with its monotone run lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeExtremum {
    pub index: usize,
    pub kind: ExtremumKind,
    /// Steps of the monotone run ending at `index`.
    pub left_run: usize,
    /// Steps of the monotone run starting at `index`.
    pub right_run: usize,
}

/// The N*M slope-ratio vector attached to a keypoint.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Descriptor {
    pub keypoint: Keypoint,
    /// Source extrema positions, left to right.
    pub extrema_indices: Vec<usize>,
    /// Slope ratios, extrema left to right, segments innermost first.
    pub values: Vec<f64>,
}

fn step_sign(d: f64) -> i8 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

/// Length in steps of the monotone run with direction `dir` ending just
/// before `from` (walking left) or starting at `from` (walking right).
/// A single zero step inside the run is tolerated; two consecutive zeros
/// or an opposing step terminate it. Zero steps only count when bracketed
/// by a real step of the run's direction.
fn run_length(diffs: &[f64], from: usize, dir: i8, leftward: bool) -> usize {
    let mut run = 0usize;
    let mut pending_zero = false;
    let indices: Box<dyn Iterator<Item = usize>> = if leftward {
        Box::new((0..from).rev())
    } else {
        Box::new(from..diffs.len())
    };
    for j in indices {
        match step_sign(diffs[j]) {
            s if s == dir => {
                run += 1 + usize::from(pending_zero);
                pending_zero = false;
            }
            0 => {
                if pending_zero {
                    break;
                }
                pending_zero = true;
            }
            _ => break,
        }
    }
    run
}

/// Finds shape extrema passing the monotonicity test.
///
/// Candidates are sign changes of the first difference (single zero steps
/// are transparent); a candidate is accepted when the strictly monotone
/// runs on both sides each span at least `min_neighborhood` samples.
pub fn find_shape_extrema(
    samples: &[f64],
    params: &DescriptorParams,
) -> Result<Vec<ShapeExtremum>> {
    params.validate()?;
    let d = params.min_neighborhood;
    if samples.len() <= 2 * d {
        return Err(Error::SignalTooShort {
            len: samples.len(),
            min: 2 * d + 1,
        });
    }
    let diffs: Vec<f64> = samples.windows(2).map(|w| w[1] - w[0]).collect();

    let mut out = Vec::new();
    let mut prev_dir: i8 = 0;
    let mut zeros = 0usize;
    for (j, &diff) in diffs.iter().enumerate() {
        let dir = step_sign(diff);
        if dir == 0 {
            zeros += 1;
            if zeros >= 2 {
                prev_dir = 0;
            }
            continue;
        }
        let kind = match (prev_dir, dir) {
            (1, -1) => Some(ExtremumKind::Peak),
            (-1, 1) => Some(ExtremumKind::Valley),
            _ => None,
        };
        if let Some(kind) = kind {
            // the extremum sample is where the new run starts
            let idx = j;
            let (into, outof) = match kind {
                ExtremumKind::Peak => (1, -1),
                ExtremumKind::Valley => (-1, 1),
            };
            let left_run = run_length(&diffs, idx, into, true);
            let right_run = run_length(&diffs, idx, outof, false);
            if left_run >= d && right_run >= d {
                out.push(ShapeExtremum {
                    index: idx,
                    kind,
                    left_run,
                    right_run,
                });
            }
        }
        prev_dir = dir;
        zeros = 0;
    }
    Ok(out)
}

/// Builds one keypoint descriptor, or `None` when the keypoint lacks
/// enough context (fewer than N/2 accepted extrema on a side, or a slope
/// endpoint falling outside the signal).
pub fn build_descriptor(
    samples: &[f64],
    extrema: &[ShapeExtremum],
    keypoint: &Keypoint,
    params: &DescriptorParams,
) -> Option<Descriptor> {
    let half = params.n_extrema / 2;
    let pos = keypoint.position;

    // extrema are sorted by index; nearest on each side of the keypoint
    let split = extrema.partition_point(|e| e.index < pos);
    let left = &extrema[..split];
    let right_start = extrema[split..]
        .iter()
        .position(|e| e.index > pos)
        .map(|o| split + o)
        .unwrap_or(extrema.len());
    let right = &extrema[right_start..];
    if left.len() < half || right.len() < half {
        return None;
    }
    let selected: Vec<&ShapeExtremum> = left[left.len() - half..]
        .iter()
        .chain(right[..half].iter())
        .collect();

    let mut values = Vec::with_capacity(params.descriptor_len());
    for e in &selected {
        let center = samples[e.index];
        for i in 1..=params.m_segments {
            let offset = i * params.neighbor_step;
            if e.index < offset || e.index + offset >= samples.len() {
                return None;
            }
            let li = e.index - offset;
            let ri = e.index + offset;
            let slope_l = (samples[li] - center) / -(offset as f64);
            let slope_r = (samples[ri] - center) / (offset as f64);
            let raw = slope_r / slope_l;
            let mut ratio = if slope_l.abs() < SLOPE_EPS * slope_r.abs().max(1.0) {
                match e.kind {
                    ExtremumKind::Peak => RATIO_CLAMP,
                    ExtremumKind::Valley => {
                        if raw.is_nan() {
                            -RATIO_CLAMP
                        } else {
                            RATIO_CLAMP.copysign(raw)
                        }
                    }
                }
            } else {
                raw
            };
            if e.kind == ExtremumKind::Peak {
                ratio = ratio.abs();
            }
            values.push(ratio);
        }
    }
    debug_assert_eq!(values.len(), params.descriptor_len());
    Some(Descriptor {
        keypoint: keypoint.clone(),
        extrema_indices: selected.iter().map(|e| e.index).collect(),
        values,
    })
}

/// Extrema-and-slope source samples for descriptor construction.
fn descriptor_samples(signal: &Signal, params: &DescriptorParams) -> Result<Vec<f64>> {
    match params.smooth_sigma {
        None => Ok(signal.samples.clone()),
        Some(sigma) => {
            crate::scale_space::convolve_reflect(&signal.samples, &gaussian_kernel(sigma))
        }
    }
}

/// Describes every keypoint that has enough context; extrema are computed
/// once and shared. Output order follows the keypoint order.
pub fn describe_all(
    signal: &Signal,
    keypoints: &[Keypoint],
    params: &DescriptorParams,
) -> Result<Vec<Descriptor>> {
    let samples = descriptor_samples(signal, params)?;
    let extrema = match find_shape_extrema(&samples, params) {
        Ok(e) => e,
        // too short for the monotonicity window: no extrema, no descriptors
        Err(Error::SignalTooShort { .. }) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    Ok(keypoints
        .iter()
        .filter_map(|kp| build_descriptor(&samples, &extrema, kp, params))
        .collect())
}

/// Outcome of the closeness test over the descriptor's dilation model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SweepResult {
    pub total_cases: u64,
    pub close_cases: u64,
    pub close_fraction: f64,
}

impl fmt::Display for SweepResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "close={} total={} fraction={:.4}",
            self.close_cases, self.total_cases, self.close_fraction
        )
    }
}

/// Inclusive arithmetic progression `a, a+h, ..` up to the largest value
/// `<= b + h * 1e-9`; empty when the step is not positive.
pub fn colon_range(a: f64, h: f64, b: f64) -> Vec<f64> {
    if h <= 0.0 {
        return Vec::new();
    }
    let limit = b + h * 1e-9;
    let mut out = Vec::new();
    let mut j = 0u32;
    loop {
        let v = a + f64::from(j) * h;
        if v > limit {
            break;
        }
        out.push(v);
        j += 1;
    }
    out
}

fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

/// Slope-ratio of a cap with flank angles (`theta1`, `theta2`), measured
/// from the vertical: `-cot(theta2) / cot(theta1)`.
pub fn cap_ratio(theta1: f64, theta2: f64) -> f64 {
    -cot(theta2) / cot(theta1)
}

/// Whether dilating a (`theta1`, `theta2`) cap by `s` keeps the slope
/// ratio within a factor of [2/3, 3/2] of the original.
pub fn closeness_predicate(theta1: f64, theta2: f64, s: f64) -> bool {
    let r1 = cap_ratio(theta1, theta2);
    let r2 = cap_ratio(s * theta1, s * theta2);
    let r = r2 / r1;
    (2.0 / 3.0..=1.5).contains(&r)
}

/// Sweeps cap angles and dilation factors over the reference grid
/// (`theta1` in `[0.05:0.005:0.45]*pi`, `theta2` from `theta1` to
/// `0.45*pi` in 100 steps, `s` in `[1.25:0.05:0.45*pi/theta2]`) and counts
/// how often the dilated slope ratio stays close.
pub fn closeness_sweep() -> SweepResult {
    let pi = std::f64::consts::PI;
    let hi = 0.45 * pi;
    let mut total = 0u64;
    let mut close = 0u64;
    for theta1 in colon_range(0.05 * pi, 0.005 * pi, hi) {
        for theta2 in colon_range(theta1, (hi - theta1) / 100.0, hi) {
            for s in colon_range(1.25, 0.05, hi / theta2) {
                total += 1;
                if closeness_predicate(theta1, theta2, s) {
                    close += 1;
                }
            }
        }
    }
    SweepResult {
        total_cases: total,
        close_cases: close,
        close_fraction: if total == 0 {
            0.0
        } else {
            close as f64 / total as f64
        },
    }
}
