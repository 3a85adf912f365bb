//! `sicr` - one binary with a subcommand per pipeline stage.
//!
//! Every subcommand is deterministic given its flags; outputs are written
//! atomically (temp file in the target directory, then rename) and a single
//! machine-readable `key=value` summary line goes to stdout. Exit status is
//! 0 on success, 2 on usage errors (malformed flags), 1 on runtime errors.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sicr_core::*;

/// Default sample rate assumed for single-column CSV input.
const DEFAULT_RATE_HZ: f64 = 100.0;

/// Unit-scale duration used by `synth`, in samples.
const SYNTH_DURATION: usize = 500;

#[derive(Parser)]
#[command(name = "sicr", version, about = "Scale-invariant signal matching and classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect scale-space keypoints in a signal.
    Keypoints {
        /// Input signal CSV (one value per line, or time,value pairs).
        #[arg(long)]
        input: PathBuf,
        /// Sample rate for single-column input.
        #[arg(long, default_value_t = DEFAULT_RATE_HZ)]
        rate: f64,
        /// Base blur of the first pyramid level.
        #[arg(long, default_value_t = 1.6)]
        sigma0: f64,
        /// Multiplicative blur step between levels.
        #[arg(long, default_value_t = 2f64.powf(0.25))]
        k: f64,
        /// Minimum |DoG| for a keypoint.
        #[arg(long, default_value_t = 0.0)]
        contrast: f64,
        /// Output JSON path (array of keypoints).
        #[arg(long)]
        out: PathBuf,
    },
    /// Build slope-ratio descriptors for a signal's keypoints.
    Describe {
        /// Input signal CSV.
        #[arg(long)]
        input: PathBuf,
        /// Reuse keypoints from a previous `keypoints` run instead of
        /// re-detecting with default parameters.
        #[arg(long)]
        keypoints: Option<PathBuf>,
        /// Shape extrema per descriptor (half per side).
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Slope samples per extremum side.
        #[arg(long, default_value_t = 4)]
        m: usize,
        /// Sample spacing between slope endpoints.
        #[arg(long, default_value_t = 5)]
        delta: usize,
        /// Minimum monotone run on both sides of an extremum.
        #[arg(long = "min-neigh", default_value_t = 20)]
        min_neigh: usize,
        /// Output JSON path (array of descriptors).
        #[arg(long)]
        out: PathBuf,
    },
    /// Match a pattern signal against a query signal.
    Match {
        /// Pattern signal CSV.
        #[arg(long)]
        pattern: PathBuf,
        /// Query signal CSV.
        #[arg(long)]
        query: PathBuf,
        /// Nearest-neighbor ratio-test threshold.
        #[arg(long, default_value_t = 1.5)]
        ratio: f64,
        /// RANSAC iteration count.
        #[arg(long = "ransac-iters", default_value_t = 500)]
        ransac_iters: usize,
        /// Inlier tolerance as a fraction of query length.
        #[arg(long = "tol-frac", default_value_t = 0.02)]
        tol_frac: f64,
        /// RANSAC sampling seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output JSON path (match set).
        #[arg(long)]
        out: PathBuf,
        /// Optional SVG rendering of the match.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Classify a query signal against a labeled training set.
    Classify {
        /// Training data: a directory containing manifest.json, or a
        /// manifest path directly.
        #[arg(long)]
        train: PathBuf,
        /// Query signal CSV.
        #[arg(long)]
        query: PathBuf,
        /// Similarity metric: r, m, or d.
        #[arg(long, default_value = "r")]
        metric: String,
        /// Output JSON path (classification result).
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate classification accuracy over a labeled dataset.
    Evaluate {
        /// Dataset manifest (JSON list of {path, label}).
        #[arg(long)]
        dataset: PathBuf,
        /// Similarity metric: r, m, or d.
        #[arg(long, default_value = "r")]
        metric: String,
        /// Leave-one-out cross-validation instead of resubstitution.
        #[arg(long)]
        loocv: bool,
        /// Output JSON path (evaluation report).
        #[arg(long)]
        out: PathBuf,
        /// Optional SVG rendering of the similarity matrix.
        #[arg(long = "matrix-svg")]
        matrix_svg: Option<PathBuf>,
    },
    /// Run the descriptor closeness parameter sweep.
    Sweep,
    /// Generate a synthetic labeled dataset.
    Synth {
        /// Number of classes.
        #[arg(long)]
        classes: usize,
        /// Instances per class.
        #[arg(long)]
        instances: usize,
        /// Lower bound of the dilation range.
        #[arg(long = "scale-min")]
        scale_min: f64,
        /// Upper bound of the dilation range.
        #[arg(long = "scale-max")]
        scale_max: f64,
        /// Additive Gaussian noise standard deviation.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Master seed for scales and per-instance noise.
        #[arg(long)]
        seed: u64,
        /// Output directory (CSV files plus manifest.json).
        #[arg(long)]
        out: PathBuf,
    },
}

/// A runtime failure, tagged with the stage that produced it.
struct StageError {
    stage: String,
    message: String,
}

type CliResult<T> = std::result::Result<T, StageError>;

/// Tags an error with its pipeline stage for the exit message.
fn stage<T, E: Display>(name: &str, result: std::result::Result<T, E>) -> CliResult<T> {
    result.map_err(|e| StageError {
        stage: name.to_string(),
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.stage, e.message);
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Keypoints {
            input,
            rate,
            sigma0,
            k,
            contrast,
            out,
        } => {
            let signal = load_csv(&input, rate)?;
            let params = ScaleSpaceParams {
                sigma0,
                k,
                max_levels: None,
                contrast_threshold: contrast,
            };
            let space = stage("scale-space", build_scale_space(&signal, &params))?;
            let dog = stage("scale-space", build_dog(&space))?;
            let keypoints = stage("keypoints", detect_keypoints(&dog, &params))?;
            write_json(&out, &keypoints)?;
            println!(
                "keypoints={} levels={} out={}",
                keypoints.len(),
                space.levels.len(),
                out.display()
            );
            Ok(())
        }
        Command::Describe {
            input,
            keypoints,
            n,
            m,
            delta,
            min_neigh,
            out,
        } => {
            let signal = load_csv(&input, DEFAULT_RATE_HZ)?;
            let d_params = DescriptorParams {
                n_extrema: n,
                m_segments: m,
                neighbor_step: delta,
                min_neighborhood: min_neigh,
                smooth_sigma: None,
            };
            stage("describe", d_params.validate())?;
            let kps: Vec<Keypoint> = match keypoints {
                Some(path) => read_json(&path)?,
                None => {
                    let ss = ScaleSpaceParams::default();
                    let space = stage("scale-space", build_scale_space(&signal, &ss))?;
                    let dog = stage("scale-space", build_dog(&space))?;
                    stage("keypoints", detect_keypoints(&dog, &ss))?
                }
            };
            let descriptors = stage("describe", describe_all(&signal, &kps, &d_params))?;
            write_json(&out, &descriptors)?;
            println!(
                "descriptors={} keypoints={} out={}",
                descriptors.len(),
                kps.len(),
                out.display()
            );
            Ok(())
        }
        Command::Match {
            pattern,
            query,
            ratio,
            ransac_iters,
            tol_frac,
            seed,
            out,
            svg,
        } => {
            let pattern_sig = load_csv(&pattern, DEFAULT_RATE_HZ)?;
            let query_sig = load_csv(&query, DEFAULT_RATE_HZ)?;
            let m_params = MatchParams {
                ratio_threshold: ratio,
                ransac_iterations: ransac_iters,
                tolerance_fraction: tol_frac,
                rng_seed: seed,
                ..MatchParams::default()
            };
            stage("match", m_params.validate())?;
            let ss = ScaleSpaceParams::default();
            let dp = DescriptorParams::default();
            let prepared_p = stage("describe", prepare(&pattern_sig, &ss, &dp))?;
            let prepared_q = stage("describe", prepare(&query_sig, &ss, &dp))?;
            let (set, triple) =
                stage("match", match_prepared(&prepared_p, &prepared_q, &m_params))?;
            write_json(&out, &set)?;
            let mut summary = format!(
                "inliers={} rejected={} a={:.6} b={:.3} m_norm={:.4} dtw_norm={:.4} r={:.4} out={}",
                set.inliers.len(),
                set.rejected.len(),
                set.model.a,
                set.model.b,
                triple.m_norm,
                triple.dtw_norm,
                triple.r,
                out.display()
            );
            if let Some(svg_path) = svg {
                let doc = render_match_svg(
                    &pattern_sig,
                    &query_sig,
                    &prepared_p.descriptors,
                    &prepared_q.descriptors,
                    &set,
                );
                write_bytes(&svg_path, doc.as_bytes())?;
                summary.push_str(&format!(" svg={}", svg_path.display()));
            }
            println!("{summary}");
            Ok(())
        }
        Command::Classify {
            train,
            query,
            metric,
            out,
        } => {
            let metric = stage("classify", Metric::parse(&metric))?;
            let training = load_manifest_set(&train)?;
            let query_sig = load_csv(&query, DEFAULT_RATE_HZ)?;
            let params = PipelineParams::default();
            let model = stage("classify", fit(&training, &params))?;
            let result = stage("classify", classify(&model, &query_sig, metric))?;
            write_json(&out, &result)?;
            println!(
                "predicted={} metric={} classes={} out={}",
                result.predicted,
                result.metric,
                result.per_class_scores.len(),
                out.display()
            );
            Ok(())
        }
        Command::Evaluate {
            dataset,
            metric,
            loocv,
            out,
            matrix_svg,
        } => {
            let metric = stage("evaluate", Metric::parse(&metric))?;
            let training = load_manifest_set(&dataset)?;
            let params = PipelineParams::default();
            let report = if loocv {
                stage("evaluate", evaluate_loocv(&training, metric, &params))?
            } else {
                stage("evaluate", evaluate_resubstitution(&training, metric, &params))?
            };
            write_json(&out, &report)?;
            let mut summary = format!(
                "accuracy={:.4} correct={} total={} metric={} mode={} out={}",
                report.accuracy,
                report.correct,
                report.total,
                report.metric,
                if loocv { "loocv" } else { "resub" },
                out.display()
            );
            if let Some(svg_path) = matrix_svg {
                let doc = render_similarity_svg(&report);
                write_bytes(&svg_path, doc.as_bytes())?;
                summary.push_str(&format!(" svg={}", svg_path.display()));
            }
            println!("{summary}");
            Ok(())
        }
        Command::Sweep => {
            let result = closeness_sweep();
            println!("{result}");
            Ok(())
        }
        Command::Synth {
            classes,
            instances,
            scale_min,
            scale_max,
            noise,
            seed,
            out,
        } => {
            let pairs = stage(
                "synth",
                synth::generate_dataset(
                    classes,
                    instances,
                    (scale_min, scale_max),
                    noise,
                    seed,
                    SYNTH_DURATION,
                ),
            )?;
            stage("synth", fs::create_dir_all(&out))?;
            let mut manifest = Vec::with_capacity(pairs.len());
            for (idx, (signal, label)) in pairs.iter().enumerate() {
                let name = format!("c{:02}_i{:02}_{}.csv", idx / instances, idx % instances, label);
                let mut body = Vec::new();
                stage("synth", save_signal_csv(signal, &mut body))?;
                write_bytes(&out.join(&name), &body)?;
                manifest.push(ManifestEntry {
                    path: name,
                    label: label.clone(),
                });
            }
            write_json(&out.join("manifest.json"), &manifest)?;
            println!(
                "written={} classes={} instances={} out={}",
                pairs.len(),
                classes,
                instances,
                out.display()
            );
            Ok(())
        }
    }
}

/// One dataset manifest row.
#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    path: String,
    label: String,
}

/// Loads a signal CSV, tagging parse failures with the file name.
fn load_csv(path: &Path, rate: f64) -> CliResult<Signal> {
    let file = stage("load", fs::File::open(path).map_err(|e| format!("{}: {e}", path.display())))?;
    stage(
        "load",
        load_signal_csv(file, rate).map_err(|e| format!("{}: {e}", path.display())),
    )
}

/// Loads a training set from a manifest path or a directory holding
/// `manifest.json`; signal paths resolve relative to the manifest.
fn load_manifest_set(train: &Path) -> CliResult<TrainingSet> {
    let manifest_path = if train.is_dir() {
        train.join("manifest.json")
    } else {
        train.to_path_buf()
    };
    let entries: Vec<ManifestEntry> = read_json(&manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut set = TrainingSet::default();
    for entry in entries {
        let signal = load_csv(&base.join(&entry.path), DEFAULT_RATE_HZ)?;
        set.push(signal, entry.label, entry.path);
    }
    Ok(set)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let bytes = stage(
        "load",
        fs::read(path).map_err(|e| format!("{}: {e}", path.display())),
    )?;
    stage(
        "load",
        serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display())),
    )
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let body = stage("write", serde_json::to_vec_pretty(value))?;
    write_bytes(path, &body)
}

/// Writes via a temp file in the target directory plus rename, so readers
/// never observe a partial file.
fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    stage(
        "write",
        fs::write(&tmp, bytes).map_err(|e| format!("{}: {e}", tmp.display())),
    )?;
    stage(
        "write",
        fs::rename(&tmp, path).map_err(|e| format!("{}: {e}", path.display())),
    )
}
