//! Gaussian-exponent regression on heat kernel samples.

use heatlab::finsler::DistanceField;
use heatlab::heatkernel::{HeatKernelField, KernelSample};
use heatlab::symbol::{self, gaussian_variable};
use thiserror::Error;

/// Samples at or below this magnitude are treated as underflow.
pub const UNDERFLOW_FLOOR: f64 = 1e-250;
pub const MIN_DISTANCES: usize = 8;
pub const MIN_TIMES: usize = 3;
/// Fits whose residual exceeds this fraction of the regression range carry
/// no verdict.
pub const VERDICT_RESIDUAL_LIMIT: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {need} distinct {what}, found {got}")]
    Insufficient { what: &'static str, got: usize, need: usize },
    #[error("{underflowed} of {total} samples in the window are below {UNDERFLOW_FLOOR:e}")]
    Underflow { underflowed: usize, total: usize },
    #[error("sample source {0:?} does not match the distance field source")]
    Source(Vec<f64>),
    #[error("empty time window [{0}, {1}]")]
    Window(f64, f64),
}

/// Which samples enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    All,
    /// Local maxima of `|K|` in `d` that also sit on the running maximum
    /// taken in decreasing-`d` order.
    EnvelopePeaks,
}

impl Selection {
    pub fn for_order(m: u32) -> Self {
        if m >= 2 {
            Selection::EnvelopePeaks
        } else {
            Selection::All
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Selection::All => "all-samples",
            Selection::EnvelopePeaks => "envelope-peaks",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub sigma_eff: f64,
    pub intercept: f64,
    /// Root-mean-square residual divided by the range of the regressand.
    pub residual: f64,
    pub t_window: (f64, f64),
    pub distance_method: String,
    pub selection: Selection,
    pub sigma_m: f64,
    /// `σ_m − σ_eff`.
    pub margin: f64,
    pub used: usize,
}

impl FitReport {
    pub fn has_verdict(&self) -> bool {
        self.residual <= VERDICT_RESIDUAL_LIMIT
    }
}

/// One regression point before selection.
#[derive(Debug, Clone, Copy)]
struct Point {
    t: f64,
    d: f64,
    abs: f64,
}

fn distance_of(sample: &KernelSample, distances: &DistanceField) -> Result<f64, FitError> {
    let off: f64 = sample
        .x
        .iter()
        .zip(&distances.source)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if off > 1e-9 * (1.0 + distances.source.iter().fold(0.0_f64, |m, v| m.max(v.abs()))) {
        return Err(FitError::Source(sample.x.clone()));
    }
    Ok(distances.nearest(&sample.y))
}

fn envelope_peaks(mut row: Vec<Point>) -> Vec<Point> {
    row.sort_by(|a, b| b.d.total_cmp(&a.d));
    let mut running = 0.0_f64;
    let mut on_envelope = vec![false; row.len()];
    for (k, p) in row.iter().enumerate() {
        if p.abs >= running {
            running = p.abs;
            on_envelope[k] = true;
        }
    }
    (1..row.len().saturating_sub(1))
        .filter(|&k| on_envelope[k] && row[k].abs >= row[k - 1].abs && row[k].abs >= row[k + 1].abs)
        .map(|k| row[k])
        .collect()
}

/// Ordinary least squares of `log|K| + (n/2m) log t` against
/// `d^{2m/(2m−1)} t^{−1/(2m−1)}`; the slope is `−σ_eff`.
pub fn fit_gaussian_exponent(
    field: &HeatKernelField,
    distances: &DistanceField,
    m: u32,
    n: usize,
    t_window: (f64, f64),
) -> Result<FitReport, FitError> {
    fit_with_selection(field, distances, m, n, t_window, Selection::for_order(m))
}

pub fn fit_with_selection(
    field: &HeatKernelField,
    distances: &DistanceField,
    m: u32,
    n: usize,
    t_window: (f64, f64),
    selection: Selection,
) -> Result<FitReport, FitError> {
    let (t_lo, t_hi) = t_window;
    if !(t_lo > 0.0 && t_lo <= t_hi) {
        return Err(FitError::Window(t_lo, t_hi));
    }
    let in_window = |t: f64| t >= t_lo * (1.0 - 1e-12) && t <= t_hi * (1.0 + 1e-12);
    let mut points = Vec::new();
    let mut underflowed = 0;
    for s in field.samples.iter().filter(|s| in_window(s.t)) {
        let d = distance_of(s, distances)?;
        if s.value.abs() <= UNDERFLOW_FLOOR {
            underflowed += 1;
            continue;
        }
        points.push(Point { t: s.t, d, abs: s.value.abs() });
    }
    let total = points.len() + underflowed;
    if underflowed * 2 > total {
        return Err(FitError::Underflow { underflowed, total });
    }

    let mut times: Vec<f64> = points.iter().map(|p| p.t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut used = Vec::new();
    for &t in &times {
        let row: Vec<Point> = points.iter().filter(|p| p.t == t).copied().collect();
        match selection {
            Selection::All => used.extend(row),
            Selection::EnvelopePeaks => used.extend(envelope_peaks(row)),
        }
    }
    let mut ds: Vec<f64> = used.iter().map(|p| p.d).collect();
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    if ds.len() < MIN_DISTANCES {
        return Err(FitError::Insufficient { what: "distances", got: ds.len(), need: MIN_DISTANCES });
    }
    let mut ts: Vec<f64> = used.iter().map(|p| p.t).collect();
    ts.dedup();
    if ts.len() < MIN_TIMES {
        return Err(FitError::Insufficient { what: "times", got: ts.len(), need: MIN_TIMES });
    }

    let p = n as f64 / f64::from(2 * m);
    let xy: Vec<(f64, f64)> = used
        .iter()
        .map(|q| (gaussian_variable(m, q.d, q.t), q.abs.ln() + p * q.t.ln()))
        .collect();
    let nf = xy.len() as f64;
    let mx = xy.iter().map(|v| v.0).sum::<f64>() / nf;
    let my = xy.iter().map(|v| v.1).sum::<f64>() / nf;
    let sxx: f64 = xy.iter().map(|v| (v.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xy.iter().map(|v| (v.1 - intercept - slope * v.0).powi(2)).sum::<f64>() / nf).sqrt();
    let ymin = xy.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let ymax = xy.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let range = ymax - ymin;
    let sigma_m = symbol::sharp_constants(m).sigma_m;
    let sigma_eff = -slope;
    Ok(FitReport {
        sigma_eff,
        intercept,
        residual: if range > 0.0 { rms / range } else { f64::INFINITY },
        t_window,
        distance_method: distance_tag(distances),
        selection,
        sigma_m,
        margin: sigma_m - sigma_eff,
        used: xy.len(),
    })
}

pub fn distance_tag(distances: &DistanceField) -> String {
    match distances.parameter {
        Some(mb) => format!("{}(M={mb})", distances.method.tag()),
        None => distances.method.tag().to_string(),
    }
}
