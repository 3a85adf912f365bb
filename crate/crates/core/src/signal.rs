//! Signal representation, CSV ingestion and linear resampling.
//!
//! The CSV contract: UTF-8 text, LF or CRLF line endings, one sample per
//! line either as `<value>` or `<time>,<value>`. Lines starting with `#`
//! and empty lines are ignored, and a single `time,value`-style header is
//! tolerated. Two-column input must have strictly increasing, uniformly
//! spaced times; the sample rate is then inferred from the time column.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

/// Relative tolerance for the uniform-spacing check on two-column input.
const SPACING_REL_TOL: f64 = 1e-6;

/// A uniformly sampled real-valued 1-D time series.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Signal {
    /// Builds a signal, validating length, rate and finiteness.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples {
                found: samples.len(),
            });
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSampleRate {
                rate: sample_rate_hz,
            });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { line: i + 1 });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

enum LineKind {
    Value(f64),
    TimeValue(f64, f64),
}

fn parse_data_line(line: &str, line_no: usize) -> Result<LineKind> {
    let mut fields = line.split(',').map(str::trim);
    let first = fields.next().unwrap_or("");
    let second = fields.next();
    if fields.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            message: "more than 2 comma-separated fields".into(),
        });
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("cannot parse `{s}` as a number"),
        })
    };
    match second {
        None => Ok(LineKind::Value(parse(first)?)),
        Some(s) => Ok(LineKind::TimeValue(parse(first)?, parse(s)?)),
    }
}

/// True for a line like `time,value` or `value`: non-numeric tokens only.
fn looks_like_header(line: &str) -> bool {
    !line.is_empty()
        && line
            .split(',')
            .map(str::trim)
            .all(|tok| !tok.is_empty() && tok.parse::<f64>().is_err())
}

/// Reads a signal from CSV text.
///
/// `sample_rate_hz` applies to single-column input; two-column input
/// overrides it with the rate inferred from the (uniform) time column.
pub fn load_signal_csv<R: Read>(source: R, sample_rate_hz: f64) -> Result<Signal> {
    let reader = BufReader::new(source);
    let mut values: Vec<f64> = Vec::new();
    let mut times: Vec<(usize, f64)> = Vec::new();
    let mut columns: Option<usize> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if columns.is_none() && looks_like_header(line) {
            continue; // optional header row
        }
        let parsed = parse_data_line(line, line_no)?;
        match parsed {
            LineKind::Value(v) => {
                if columns.get_or_insert(1) != &1 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "expected `time,value`, got a single column".into(),
                    });
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite { line: line_no });
                }
                values.push(v);
            }
            LineKind::TimeValue(t, v) => {
                if columns.get_or_insert(2) != &2 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "expected a single value, got `time,value`".into(),
                    });
                }
                if !t.is_finite() || !v.is_finite() {
                    return Err(Error::NonFinite { line: line_no });
                }
                times.push((line_no, t));
                values.push(v);
            }
        }
    }

    if values.len() < 2 {
        return Err(Error::TooFewSamples {
            found: values.len(),
        });
    }

    let rate = if times.is_empty() {
        sample_rate_hz
    } else {
        infer_uniform_rate(&times)?
    };
    Signal::new(values, rate)
}

/// Checks times are strictly increasing and uniform, returns the inferred rate.
fn infer_uniform_rate(times: &[(usize, f64)]) -> Result<f64> {
    let dt0 = times[1].1 - times[0].1;
    if dt0 <= 0.0 {
        return Err(Error::NonUniformSpacing {
            line: times[1].0,
            expected: dt0,
            found: dt0,
        });
    }
    for w in times.windows(2).skip(1) {
        let dt = w[1].1 - w[0].1;
        if !((dt / dt0) - 1.0).abs().le(&SPACING_REL_TOL) {
            return Err(Error::NonUniformSpacing {
                line: w[1].0,
                expected: dt0,
                found: dt,
            });
        }
    }
    // Average step over the whole span is less sensitive to rounding in
    // the individual time stamps than 1/dt0.
    let span = times.last().unwrap().1 - times[0].1;
    Ok((times.len() - 1) as f64 / span)
}

/// Writes a signal back as single-column CSV at 17 significant digits,
/// enough for f64 values to round-trip bit-exact.
pub fn save_signal_csv<W: Write>(signal: &Signal, mut out: W) -> Result<()> {
    for v in &signal.samples {
        writeln!(out, "{:.16e}", v)?;
    }
    Ok(())
}

/// Linearly resamples a signal by `factor`.
///
/// The output has `floor(len * factor)` samples taken at positions
/// `i / factor` on the input index axis; positions past the final sample
/// extrapolate the last segment. The sample rate is kept, so the event
/// occupies `factor` times its original duration.
pub fn resample_linear(signal: &Signal, factor: f64) -> Result<Signal> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidParam(format!(
            "resample factor must be positive, got {factor}"
        )));
    }
    let out_len = (signal.len() as f64 * factor).floor() as usize;
    if out_len < 2 {
        return Err(Error::ResampleTooShort {
            output_len: out_len,
        });
    }
    let src = &signal.samples;
    let last_seg = src.len() - 2;
    let samples = (0..out_len)
        .map(|i| {
            let q = i as f64 / factor;
            let j = (q.floor() as usize).min(last_seg);
            let frac = q - j as f64;
            src[j] + frac * (src[j + 1] - src[j])
        })
        .collect();
    let mut out = Signal::new(samples, signal.sample_rate_hz)?;
    out.label = signal.label.clone();
    Ok(out)
}
