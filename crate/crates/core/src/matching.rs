//! Descriptor matching, consensus filtering and pairwise scoring.
//!
//! Matching proceeds in two stages: a nearest-neighbor search with a
//! distance-ratio test proposes candidate correspondences, then RANSAC
//! keeps the largest subset consistent with a positive-slope linear time
//! map `query_pos = a * pattern_pos + b` — the transform a uniform time
//! dilation plus offset induces on keypoint positions. The surviving
//! match count (M), the normalized DTW alignment cost of the descriptor
//! sequences (D), and their quotient (R) form the score triple used by
//! the classifiers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::descriptor::{describe_all, Descriptor, DescriptorParams};
use crate::dtw::{dtw, euclidean};
use crate::error::Result;
use crate::scale_space::{build_dog, build_scale_space, detect_keypoints, ScaleSpaceParams};
use crate::signal::Signal;

/// Floor applied to the normalized DTW cost when forming R, capping the
/// self-match score at 1e9.
pub const DTW_EPSILON: f64 = 1e-9;

/// Normalized DTW cost reported when either side has no descriptors;
/// keeps the distance metric finite while ranking such pairs last.
pub const EMPTY_DTW_NORM: f64 = 1e9;

/// A proposed correspondence between one pattern and one query
/// descriptor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CandidateMatch {
    pub pattern_idx: usize,
    pub query_idx: usize,
    /// Euclidean distance between the descriptor vectors.
    pub distance: f64,
    /// Second-nearest / nearest distance (may be +infinity, so it is
    /// kept out of the JSON form).
    #[serde(skip, default = "infinity")]
    pub ratio: f64,
}

fn infinity() -> f64 {
    f64::INFINITY
}

/// The consensus model: `query_pos = a * pattern_pos + b` with `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearTimeMap {
    pub a: f64,
    pub b: f64,
}

impl LinearTimeMap {
    pub const IDENTITY: LinearTimeMap = LinearTimeMap { a: 1.0, b: 0.0 };

    pub fn apply(&self, pattern_pos: f64) -> f64 {
        self.a * pattern_pos + self.b
    }
}

/// Consensus-filtered matches between two signals.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MatchSet {
    pub model: LinearTimeMap,
    pub inliers: Vec<CandidateMatch>,
    pub rejected: Vec<CandidateMatch>,
    /// Set when no valid model could be hypothesized (all candidate
    /// pairs shared a pattern position).
    #[serde(skip)]
    pub degenerate: bool,
}

impl MatchSet {
    /// The M metric: surviving match count.
    pub fn m_raw(&self) -> usize {
        self.inliers.len()
    }
}

/// Matching-stage parameters.
#[derive(Debug, Clone)]
pub struct MatchParams {
    /// Minimum second-nearest / nearest distance ratio.
    pub ratio_threshold: f64,
    pub ransac_iterations: usize,
    /// Inlier tolerance as a fraction of the query length, in samples.
    pub tolerance_fraction: f64,
    /// Tolerance floor, samples.
    pub min_tolerance: f64,
    pub rng_seed: u64,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            ratio_threshold: 1.5,
            ransac_iterations: 500,
            tolerance_fraction: 0.02,
            min_tolerance: 3.0,
            rng_seed: 42,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error::InvalidParam;
        if !(self.ratio_threshold > 1.0) {
            return Err(InvalidParam(format!(
                "ratio_threshold must be > 1, got {}",
                self.ratio_threshold
            )));
        }
        if self.ransac_iterations < 1 {
            return Err(InvalidParam("ransac_iterations must be >= 1".into()));
        }
        if !(self.tolerance_fraction > 0.0) || !(self.min_tolerance > 0.0) {
            return Err(InvalidParam("inlier tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Effective inlier tolerance for a query of `query_len` samples.
    pub fn inlier_tolerance(&self, query_len: usize) -> f64 {
        (self.tolerance_fraction * query_len as f64).max(self.min_tolerance)
    }
}

/// Proposes at most one candidate per pattern descriptor: its nearest
/// query descriptor, kept when the second-nearest distance is at least
/// `ratio_threshold` times larger. A zero nearest distance passes only
/// while the second-nearest is strictly larger (identical twins tie and
/// fail); a single-descriptor query cannot form a ratio and always
/// passes.
pub fn nn_match(
    pattern: &[Descriptor],
    query: &[Descriptor],
    params: &MatchParams,
) -> Result<Vec<CandidateMatch>> {
    params.validate()?;
    let mut out = Vec::new();
    for (pi, pd) in pattern.iter().enumerate() {
        let mut nearest: Option<(usize, f64)> = None;
        let mut second: Option<f64> = None;
        for (qi, qd) in query.iter().enumerate() {
            let dist = euclidean(&pd.values, &qd.values)?;
            if nearest.map_or(true, |(_, nd)| dist < nd) {
                second = nearest.map(|(_, nd)| nd); // old best demotes
                nearest = Some((qi, dist));
            } else if second.map_or(true, |s| dist < s) {
                second = Some(dist);
            }
        }
        let Some((qi, nd)) = nearest else { continue };
        let ratio = match second {
            None => f64::INFINITY,
            Some(sd) if nd == 0.0 && sd == 0.0 => 1.0, // identical twins
            Some(_) if nd == 0.0 => f64::INFINITY,
            Some(sd) => sd / nd,
        };
        if ratio >= params.ratio_threshold {
            out.push(CandidateMatch {
                pattern_idx: pi,
                query_idx: qi,
                distance: nd,
                ratio,
            });
        }
    }
    Ok(out)
}

fn positions(
    candidates: &[CandidateMatch],
    pattern: &[Descriptor],
    query: &[Descriptor],
) -> Vec<(f64, f64)> {
    candidates
        .iter()
        .map(|c| {
            (
                pattern[c.pattern_idx].keypoint.position as f64,
                query[c.query_idx].keypoint.position as f64,
            )
        })
        .collect()
}

fn least_squares(points: &[(f64, f64)]) -> Option<LinearTimeMap> {
    let n = points.len() as f64;
    let mean_p = points.iter().map(|&(p, _)| p).sum::<f64>() / n;
    let mean_q = points.iter().map(|&(_, q)| q).sum::<f64>() / n;
    let mut var = 0.0;
    let mut cov = 0.0;
    for &(p, q) in points {
        var += (p - mean_p) * (p - mean_p);
        cov += (p - mean_p) * (q - mean_q);
    }
    if var <= 0.0 {
        return None;
    }
    let a = cov / var;
    if !(a.is_finite() && a > 0.0) {
        return None;
    }
    Some(LinearTimeMap {
        a,
        b: mean_q - a * mean_p,
    })
}

/// Filters candidates down to the largest consensus set under a
/// positive-slope linear time map. With fewer than two candidates there
/// is nothing to vote on: everything passes with an identity-slope
/// model. Deterministic for a given `rng_seed`.
pub fn ransac_filter(
    candidates: &[CandidateMatch],
    pattern: &[Descriptor],
    query: &[Descriptor],
    query_len: usize,
    params: &MatchParams,
) -> MatchSet {
    let pts = positions(candidates, pattern, query);
    if candidates.len() < 2 {
        let b = pts.iter().map(|&(p, q)| q - p).sum::<f64>() / pts.len().max(1) as f64;
        return MatchSet {
            model: LinearTimeMap { a: 1.0, b },
            inliers: candidates.to_vec(),
            rejected: Vec::new(),
            degenerate: false,
        };
    }

    let tol = params.inlier_tolerance(query_len);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    // (inlier count, inlier residual sum, model)
    let mut best: Option<(usize, f64, LinearTimeMap)> = None;
    for _ in 0..params.ransac_iterations {
        let i = rng.gen_range(0..pts.len());
        let j = rng.gen_range(0..pts.len());
        if i == j {
            continue;
        }
        let (p1, q1) = pts[i];
        let (p2, q2) = pts[j];
        if p1 == p2 {
            continue;
        }
        let a = (q2 - q1) / (p2 - p1);
        if !(a.is_finite() && a > 0.0) {
            continue;
        }
        let model = LinearTimeMap { a, b: q1 - a * p1 };
        let mut count = 0usize;
        let mut resid_sum = 0.0f64;
        for &(p, q) in &pts {
            let r = (model.apply(p) - q).abs();
            if r <= tol {
                count += 1;
                resid_sum += r;
            }
        }
        let better = match best {
            None => true,
            Some((bc, bs, _)) => count > bc || (count == bc && resid_sum < bs),
        };
        if better {
            best = Some((count, resid_sum, model));
        }
    }

    let Some((_, _, sampled)) = best else {
        return MatchSet {
            model: LinearTimeMap::IDENTITY,
            inliers: Vec::new(),
            rejected: candidates.to_vec(),
            degenerate: true,
        };
    };

    // refit on the winning inliers, then recompute membership
    let winners: Vec<(f64, f64)> = pts
        .iter()
        .copied()
        .filter(|&(p, q)| (sampled.apply(p) - q).abs() <= tol)
        .collect();
    let model = least_squares(&winners).unwrap_or(sampled);
    let (mut inliers, mut rejected) = (Vec::new(), Vec::new());
    for (c, &(p, q)) in candidates.iter().zip(&pts) {
        if (model.apply(p) - q).abs() <= tol {
            inliers.push(*c);
        } else {
            rejected.push(*c);
        }
    }
    MatchSet {
        model,
        inliers,
        rejected,
        degenerate: false,
    }
}

/// Similarity scores for one (pattern, query) pair.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScoreTriple {
    /// Surviving matches over the smaller descriptor count.
    pub m_norm: f64,
    /// DTW cost of the descriptor sequences over the alignment length.
    pub dtw_norm: f64,
    /// m_norm / max(dtw_norm, 1e-9).
    pub r: f64,
}

/// A signal reduced to what matching needs: its descriptor sequence (in
/// keypoint order) and its length. Computing this once per signal is
/// what makes many-to-one comparisons cheap.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub descriptors: Vec<Descriptor>,
    pub signal_len: usize,
}

/// Runs the detection and description stages once for a signal.
pub fn prepare(
    signal: &Signal,
    ss_params: &ScaleSpaceParams,
    d_params: &DescriptorParams,
) -> Result<Prepared> {
    let space = build_scale_space(signal, ss_params)?;
    let dog = build_dog(&space)?;
    let keypoints = detect_keypoints(&dog, ss_params)?;
    let descriptors = describe_all(signal, &keypoints, d_params)?;
    Ok(Prepared {
        descriptors,
        signal_len: signal.samples.len(),
    })
}

/// Matches two prepared signals and scores the result.
pub fn match_prepared(
    pattern: &Prepared,
    query: &Prepared,
    m_params: &MatchParams,
) -> Result<(MatchSet, ScoreTriple)> {
    let (np, nq) = (pattern.descriptors.len(), query.descriptors.len());
    if np == 0 || nq == 0 {
        let set = MatchSet {
            model: LinearTimeMap::IDENTITY,
            inliers: Vec::new(),
            rejected: Vec::new(),
            degenerate: false,
        };
        let triple = ScoreTriple {
            m_norm: 0.0,
            dtw_norm: EMPTY_DTW_NORM,
            r: 0.0,
        };
        return Ok((set, triple));
    }

    let candidates = nn_match(&pattern.descriptors, &query.descriptors, m_params)?;
    let set = ransac_filter(
        &candidates,
        &pattern.descriptors,
        &query.descriptors,
        query.signal_len,
        m_params,
    );
    let m_norm = set.m_raw() as f64 / np.min(nq) as f64;

    let seq_p: Vec<Vec<f64>> = pattern.descriptors.iter().map(|d| d.values.clone()).collect();
    let seq_q: Vec<Vec<f64>> = query.descriptors.iter().map(|d| d.values.clone()).collect();
    let (score, path_len) = dtw(&seq_p, &seq_q)?;
    let dtw_norm = score / path_len as f64;
    let r = m_norm / dtw_norm.max(DTW_EPSILON);
    Ok((set, ScoreTriple { m_norm, dtw_norm, r }))
}

/// Scores two prepared signals.
pub fn score_prepared(
    pattern: &Prepared,
    query: &Prepared,
    m_params: &MatchParams,
) -> Result<ScoreTriple> {
    match_prepared(pattern, query, m_params).map(|(_, t)| t)
}

/// End-to-end pairwise score: detect, describe, match, align.
pub fn score_pair(
    pattern_sig: &Signal,
    query_sig: &Signal,
    ss_params: &ScaleSpaceParams,
    d_params: &DescriptorParams,
    m_params: &MatchParams,
) -> Result<ScoreTriple> {
    let pattern = prepare(pattern_sig, ss_params, d_params)?;
    let query = prepare(query_sig, ss_params, d_params)?;
    score_prepared(&pattern, &query, m_params)
}
