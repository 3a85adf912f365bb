//! Time-scale-invariant event description and classification for 1-D
//! sensor signals.
//!
//! The pipeline mirrors SIFT's structure, transplanted to time series:
//!
//! 1. [`scale_space`] builds a Gaussian pyramid and difference-of-Gaussian
//!    stack, and picks keypoints as strict extrema over position and
//!    scale.
//! 2. [`descriptor`] characterizes each keypoint by slope ratios around
//!    its nearest shape extrema — a representation invariant to amplitude
//!    scaling, vertical offset, and (approximately) uniform time
//!    dilation.
//! 3. [`matching`] pairs descriptors across two signals via a ratio-tested
//!    nearest-neighbor search, prunes them with RANSAC under a linear
//!    time map, and scores the pair by match count (M), normalized DTW
//!    cost (D) and their quotient (R).
//! 4. [`classifier`] turns pairwise scores into class decisions with
//!    per-class averaging, plus leave-one-out evaluation.
//!
//! [`signal`] handles CSV I/O and resampling, [`synth`] generates the
//! multi-scale benchmark corpus, and [`render`] emits SVG artifacts.

pub mod classifier;
pub mod descriptor;
pub mod dtw;
pub mod error;
pub mod matching;
pub mod render;
pub mod scale_space;
pub mod signal;
pub mod synth;

pub use classifier::{
    classify, evaluate_loocv, evaluate_resubstitution, fit, ClassificationResult, EvalReport,
    Metric, Model, PipelineParams, Prediction, TrainingEntry, TrainingSet,
};
pub use descriptor::{
    build_descriptor, closeness_predicate, closeness_sweep, describe_all, find_shape_extrema,
    Descriptor, DescriptorParams, ExtremumKind, ShapeExtremum, SweepResult,
};
pub use dtw::dtw;
pub use error::{Error, Result};
pub use matching::{
    match_prepared, nn_match, prepare, ransac_filter, score_pair, score_prepared, CandidateMatch,
    LinearTimeMap, MatchParams, MatchSet, Prepared, ScoreTriple,
};
pub use render::{render_match_svg, render_similarity_svg};
pub use scale_space::{
    build_dog, build_scale_space, detect_keypoints, DoGStack, Keypoint, Polarity, ScaleSpace,
    ScaleSpaceParams,
};
pub use signal::{load_signal_csv, resample_linear, save_signal_csv, Signal};
pub use synth::{generate_dataset, synth_event, BaseShape, SynthSpec};
