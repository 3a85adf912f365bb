//! Event classification over a labeled training set.
//!
//! A query is scored against every training signal; per-class arithmetic
//! means of the chosen metric pick the winner. Three metrics are
//! supported: M (normalized match count, higher is better), D
//! (normalized DTW cost, lower is better) and R (their quotient, higher
//! is better). Leave-one-out evaluation reuses one pairwise score matrix
//! across folds, which is exactly equivalent to refitting per fold
//! because scoring is pure.

use std::fmt;

use crate::descriptor::DescriptorParams;
use crate::error::{Error, Result};
use crate::matching::{prepare, score_prepared, MatchParams, Prepared, ScoreTriple};
use crate::scale_space::ScaleSpaceParams;
use crate::signal::Signal;

/// All tunables of the detect-describe-match pipeline in one place.
#[derive(Debug, Clone, Default)]
pub struct PipelineParams {
    pub scale_space: ScaleSpaceParams,
    pub descriptor: DescriptorParams,
    pub matching: MatchParams,
}

/// Which similarity drives classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    M,
    D,
    R,
}

impl Metric {
    pub fn parse(text: &str) -> Result<Metric> {
        match text.to_ascii_lowercase().as_str() {
            "m" => Ok(Metric::M),
            "d" => Ok(Metric::D),
            "r" => Ok(Metric::R),
            other => Err(Error::InvalidParam(format!(
                "unknown metric {other:?}, expected one of r, m, d"
            ))),
        }
    }

    /// The triple component this metric reads.
    pub fn component(&self, t: &ScoreTriple) -> f64 {
        match self {
            Metric::M => t.m_norm,
            Metric::D => t.dtw_norm,
            Metric::R => t.r,
        }
    }

    /// Whether `candidate` beats `incumbent` (strictly; ties keep the
    /// incumbent). D is a distance, so smaller wins.
    fn improves(&self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Metric::D => candidate < incumbent,
            Metric::M | Metric::R => candidate > incumbent,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::M => write!(f, "m"),
            Metric::D => write!(f, "d"),
            Metric::R => write!(f, "r"),
        }
    }
}

/// One labeled training instance.
#[derive(Debug, Clone)]
pub struct TrainingEntry {
    pub signal: Signal,
    pub label: String,
    /// Free-form instance identifier carried into reports (file path,
    /// index, ...).
    pub id: String,
}

/// Labeled signals with a canonical (first-appearance) class order.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    pub entries: Vec<TrainingEntry>,
}

impl TrainingSet {
    /// Builds a set from (signal, label) pairs, using positions as ids.
    pub fn new(pairs: Vec<(Signal, String)>) -> TrainingSet {
        let entries = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (signal, label))| TrainingEntry {
                signal,
                label,
                id: i.to_string(),
            })
            .collect();
        TrainingSet { entries }
    }

    pub fn push(&mut self, signal: Signal, label: impl Into<String>, id: impl Into<String>) {
        self.entries.push(TrainingEntry {
            signal,
            label: label.into(),
            id: id.into(),
        });
    }

    /// Class labels in first-appearance order.
    pub fn class_order(&self) -> Vec<String> {
        let mut order: Vec<String> = Vec::new();
        for e in &self.entries {
            if !order.contains(&e.label) {
                order.push(e.label.clone());
            }
        }
        order
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if let Some(e) = self.entries.iter().find(|e| e.label.is_empty()) {
            return Err(Error::InvalidParam(format!(
                "training entry {:?} has an empty class label",
                e.id
            )));
        }
        Ok(())
    }

    /// Counts instances per class, canonical order.
    fn class_counts(&self) -> Vec<(String, usize)> {
        self.class_order()
            .into_iter()
            .map(|c| {
                let n = self.entries.iter().filter(|e| e.label == c).count();
                (c, n)
            })
            .collect()
    }
}

#[derive(Debug)]
struct FittedEntry {
    label: String,
    prepared: Prepared,
}

/// An immutable fitted classifier: per-signal pipeline results cached at
/// fit time, shareable across concurrent classify calls.
#[derive(Debug)]
pub struct Model {
    entries: Vec<FittedEntry>,
    class_order: Vec<String>,
    params: PipelineParams,
}

impl Model {
    pub fn class_order(&self) -> &[String] {
        &self.class_order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Runs detection and description for every training signal once.
pub fn fit(training: &TrainingSet, params: &PipelineParams) -> Result<Model> {
    training.validate()?;
    let mut entries = Vec::with_capacity(training.entries.len());
    for (index, e) in training.entries.iter().enumerate() {
        let prepared =
            prepare(&e.signal, &params.scale_space, &params.descriptor).map_err(|source| {
                Error::TrainingEntry {
                    index,
                    label: e.label.clone(),
                    source: Box::new(source),
                }
            })?;
        entries.push(FittedEntry {
            label: e.label.clone(),
            prepared,
        });
    }
    Ok(Model {
        entries,
        class_order: training.class_order(),
        params: params.clone(),
    })
}

/// The per-class averages and the verdict for one query.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassificationResult {
    pub metric: Metric,
    pub predicted: String,
    /// (class label, average score), canonical class order.
    pub per_class_scores: Vec<(String, f64)>,
}

/// Picks the winning class: maximum average for M and R, minimum for D;
/// ties resolve to the earliest class in the given (canonical) order.
fn select_best(per_class: &[(String, f64)], metric: Metric) -> String {
    let mut best = &per_class[0];
    for entry in &per_class[1..] {
        if metric.improves(entry.1, best.1) {
            best = entry;
        }
    }
    best.0.clone()
}

fn averages_from_scores(
    class_order: &[String],
    labels: &[&str],
    scores: &[f64],
) -> Vec<(String, f64)> {
    class_order
        .iter()
        .map(|c| {
            let vals: Vec<f64> = labels
                .iter()
                .zip(scores)
                .filter(|(l, _)| **l == *c)
                .map(|(_, s)| *s)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
            (c.clone(), mean)
        })
        .collect()
}

/// Scores the query against every cached training signal and averages
/// per class.
pub fn classify(model: &Model, query: &Signal, metric: Metric) -> Result<ClassificationResult> {
    let prepared_query = prepare(query, &model.params.scale_space, &model.params.descriptor)?;
    classify_prepared(model, &prepared_query, metric)
}

fn classify_prepared(
    model: &Model,
    query: &Prepared,
    metric: Metric,
) -> Result<ClassificationResult> {
    let mut labels = Vec::with_capacity(model.entries.len());
    let mut scores = Vec::with_capacity(model.entries.len());
    for e in &model.entries {
        let triple = score_prepared(&e.prepared, query, &model.params.matching)?;
        labels.push(e.label.as_str());
        scores.push(metric.component(&triple));
    }
    let per_class_scores = averages_from_scores(&model.class_order, &labels, &scores);
    let predicted = select_best(&per_class_scores, metric);
    Ok(ClassificationResult {
        metric,
        predicted,
        per_class_scores,
    })
}

/// One evaluated instance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Prediction {
    pub id: String,
    pub true_label: String,
    pub predicted: String,
}

/// Evaluation outcome with the raw class-by-instance similarity matrix
/// (rows follow `class_labels`, columns follow the dataset order; cells
/// are the instance's per-class average scores).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalReport {
    pub metric: Metric,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub class_labels: Vec<String>,
    pub similarity_matrix: Vec<Vec<f64>>,
    pub predictions: Vec<Prediction>,
}

/// All-pairs score components: `matrix[i][j]` scores training signal `i`
/// as pattern against instance `j` as query.
fn pairwise_components(
    prepared: &[Prepared],
    metric: Metric,
    m_params: &MatchParams,
) -> Result<Vec<Vec<f64>>> {
    let n = prepared.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let triple = score_prepared(&prepared[i], &prepared[j], m_params)?;
            matrix[i][j] = metric.component(&triple);
        }
    }
    Ok(matrix)
}

fn prepare_all(dataset: &TrainingSet, params: &PipelineParams) -> Result<Vec<Prepared>> {
    dataset
        .entries
        .iter()
        .enumerate()
        .map(|(index, e)| {
            prepare(&e.signal, &params.scale_space, &params.descriptor).map_err(|source| {
                Error::TrainingEntry {
                    index,
                    label: e.label.clone(),
                    source: Box::new(source),
                }
            })
        })
        .collect()
}

fn report_from_folds(
    dataset: &TrainingSet,
    metric: Metric,
    class_order: &[String],
    per_instance_averages: Vec<Vec<(String, f64)>>,
) -> EvalReport {
    let mut correct = 0usize;
    let mut predictions = Vec::with_capacity(dataset.entries.len());
    let mut matrix = vec![Vec::with_capacity(dataset.entries.len()); class_order.len()];
    for (e, averages) in dataset.entries.iter().zip(&per_instance_averages) {
        let predicted = select_best(averages, metric);
        if predicted == e.label {
            correct += 1;
        }
        predictions.push(Prediction {
            id: e.id.clone(),
            true_label: e.label.clone(),
            predicted,
        });
        for (row, (_, score)) in matrix.iter_mut().zip(averages) {
            row.push(*score);
        }
    }
    let total = dataset.entries.len();
    EvalReport {
        metric,
        accuracy: correct as f64 / total as f64,
        correct,
        total,
        class_labels: class_order.to_vec(),
        similarity_matrix: matrix,
        predictions,
    }
}

/// Leave-one-out cross-validation: each instance is classified by the
/// model fitted on all the others. Every class needs at least two
/// instances. Folds share one pairwise score matrix; because scoring is
/// pure this matches per-fold refitting exactly.
pub fn evaluate_loocv(
    dataset: &TrainingSet,
    metric: Metric,
    params: &PipelineParams,
) -> Result<EvalReport> {
    dataset.validate()?;
    if let Some((label, _)) = dataset.class_counts().iter().find(|(_, n)| *n < 2) {
        return Err(Error::SingleInstanceClass {
            label: label.clone(),
        });
    }
    let class_order = dataset.class_order();
    let prepared = prepare_all(dataset, params)?;
    let components = pairwise_components(&prepared, metric, &params.matching)?;

    let folds = (0..dataset.entries.len())
        .map(|q| {
            let mut labels = Vec::new();
            let mut scores = Vec::new();
            for (t, e) in dataset.entries.iter().enumerate() {
                if t != q {
                    labels.push(e.label.as_str());
                    scores.push(components[t][q]);
                }
            }
            averages_from_scores(&class_order, &labels, &scores)
        })
        .collect();
    Ok(report_from_folds(dataset, metric, &class_order, folds))
}

/// Resubstitution evaluation: the model is fitted on the full dataset
/// and every instance (training data included) is classified against
/// it. An optimistic baseline, mostly useful as a smoke test.
pub fn evaluate_resubstitution(
    dataset: &TrainingSet,
    metric: Metric,
    params: &PipelineParams,
) -> Result<EvalReport> {
    dataset.validate()?;
    let class_order = dataset.class_order();
    let prepared = prepare_all(dataset, params)?;
    let components = pairwise_components(&prepared, metric, &params.matching)?;

    let labels: Vec<&str> = dataset.entries.iter().map(|e| e.label.as_str()).collect();
    let folds = (0..dataset.entries.len())
        .map(|q| {
            let scores: Vec<f64> = (0..dataset.entries.len()).map(|t| components[t][q]).collect();
            averages_from_scores(&class_order, &labels, &scores)
        })
        .collect();
    Ok(report_from_folds(dataset, metric, &class_order, folds))
}
