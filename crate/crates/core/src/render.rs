//! Minimal SVG emission for match and similarity-matrix inspection.
//!
//! Hand-rolled string assembly: the documents are two polylines plus
//! connector lines, or a grid of rectangles — too little structure to
//! justify an XML dependency, and keeping element counts predictable
//! makes the output testable.

use std::fmt::Write as _;

use crate::classifier::{EvalReport, Metric};
use crate::descriptor::Descriptor;
use crate::matching::MatchSet;
use crate::signal::Signal;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 20.0;

/// Maps a sample index into the horizontal plot span.
fn map_x(position: f64, len: usize) -> f64 {
    MARGIN + position / (len - 1) as f64 * (WIDTH - 2.0 * MARGIN)
}

/// Maps a sample value into a horizontal band; a flat signal sits
/// mid-band.
fn map_y(value: f64, min: f64, max: f64, band_top: f64, band_height: f64) -> f64 {
    let unit = if max > min {
        (value - min) / (max - min)
    } else {
        0.5
    };
    band_top + (1.0 - unit) * band_height
}

fn polyline(samples: &[f64], band_top: f64, band_height: f64, color: &str) -> String {
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut points = String::new();
    for (i, &v) in samples.iter().enumerate() {
        let x = map_x(i as f64, samples.len());
        let y = map_y(v, min, max, band_top, band_height);
        let _ = write!(points, "{x:.2},{y:.2} ");
    }
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" points=\"{}\"/>\n",
        points.trim_end()
    )
}

/// Renders both signals (query band on top, pattern band below) with one
/// straight connector line per inlier, drawn between the matched
/// keypoint positions on the two polylines. A self-match under the
/// identity map therefore shows vertical connectors.
pub fn render_match_svg(
    pattern: &Signal,
    query: &Signal,
    pattern_descs: &[Descriptor],
    query_descs: &[Descriptor],
    matches: &MatchSet,
) -> String {
    let band_height = (HEIGHT - 3.0 * MARGIN) / 2.0;
    let query_top = MARGIN;
    let pattern_top = 2.0 * MARGIN + band_height;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    );
    svg.push_str(&polyline(&query.samples, query_top, band_height, "darkorange"));
    svg.push_str(&polyline(&pattern.samples, pattern_top, band_height, "steelblue"));

    let extent = |samples: &[f64]| {
        (
            samples.iter().copied().fold(f64::INFINITY, f64::min),
            samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let (qmin, qmax) = extent(&query.samples);
    let (pmin, pmax) = extent(&pattern.samples);
    for inlier in &matches.inliers {
        let ppos = pattern_descs[inlier.pattern_idx].keypoint.position;
        let qpos = query_descs[inlier.query_idx].keypoint.position;
        let x1 = map_x(qpos as f64, query.samples.len());
        let y1 = map_y(query.samples[qpos], qmin, qmax, query_top, band_height);
        let x2 = map_x(ppos as f64, pattern.samples.len());
        let y2 = map_y(pattern.samples[ppos], pmin, pmax, pattern_top, band_height);
        let _ = write!(
            svg,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" \
             stroke=\"seagreen\" stroke-width=\"1\" opacity=\"0.7\"/>\n"
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Renders the similarity matrix as a grayscale grid: rows are classes,
/// columns are instances, each column normalized to [0,1] so that white
/// marks the most likely class for that instance. For the distance
/// metric D the shade is inverted (smaller cost renders whiter), keeping
/// the white-is-likely reading across metrics.
pub fn render_similarity_svg(report: &EvalReport) -> String {
    let rows = report.class_labels.len();
    let cols = report
        .similarity_matrix
        .first()
        .map_or(0, |row| row.len());
    let label_w = 130.0;
    let (cell_w, cell_h) = (28.0, 24.0);
    let width = label_w + cols as f64 * cell_w + MARGIN;
    let height = 2.0 * MARGIN + rows as f64 * cell_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    );
    for (i, label) in report.class_labels.iter().enumerate() {
        let y = MARGIN + i as f64 * cell_h + cell_h * 0.7;
        let _ = write!(
            svg,
            "<text x=\"{:.2}\" y=\"{y:.2}\" font-family=\"monospace\" font-size=\"12\">{}</text>\n",
            8.0,
            xml_escape(label)
        );
    }
    for j in 0..cols {
        let column: Vec<f64> = (0..rows).map(|i| report.similarity_matrix[i][j]).collect();
        let min = column.iter().copied().fold(f64::INFINITY, f64::min);
        let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, &v) in column.iter().enumerate() {
            let mut unit = if max > min { (v - min) / (max - min) } else { 0.5 };
            if report.metric == Metric::D {
                unit = 1.0 - unit;
            }
            let g = (unit * 255.0).round() as u8;
            let x = label_w + j as f64 * cell_w;
            let y = MARGIN + i as f64 * cell_h;
            let _ = write!(
                svg,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell_w}\" height=\"{cell_h}\" \
                 fill=\"rgb({g},{g},{g})\" stroke=\"gray\" stroke-width=\"0.5\"/>\n"
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
