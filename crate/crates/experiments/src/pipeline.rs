//! Assembly of a configured problem and the two end-to-end verdicts.

use heatlab::discretize::{assemble, sample_potential, DiscreteOperator, Grid};
use heatlab::field::CoefficientField;
use heatlab::finsler::{self, DistanceField};
use heatlab::heatkernel::{eigendecompose, HeatKernelField, KernelSample, SpectralData};
use heatlab::kato::{form_bound_sweep, negative_part, FormBoundReport};
use heatlab::symbol::{self, gaussian_variable, is_strongly_convex, SymbolSpec, DEFAULT_PSD_TOL};
use heatlab::twist::{self, StabilityReport, TwistProfile, TwistReport};
use nalgebra::DVector;
use thiserror::Error;

use crate::config::RunConfig;
use crate::fit::{fit_gaussian_exponent, FitReport};

/// Spectral samples below this fraction of the largest `|K|` at the same
/// time are at the level of rounding and are left out.
pub const RESOLUTION_FLOOR: f64 = 1e-10;
/// Sample points for the strong convexity check.
const CONVEXITY_POINTS: usize = 33;

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError { stage, message: e.to_string() }
}

/// Symbol, free operator, full operator and the sampled potential.
pub struct Problem {
    pub spec: SymbolSpec,
    pub grid: Grid,
    pub op0: DiscreteOperator,
    pub op: DiscreteOperator,
    pub potential: Option<DVector<f64>>,
}

impl Problem {
    pub fn build(cfg: &RunConfig) -> Result<Self, PipelineError> {
        Self::build_with(cfg, &cfg.coefficient)
    }

    pub fn build_with(cfg: &RunConfig, a: &CoefficientField) -> Result<Self, PipelineError> {
        let spec = cfg.build_symbol_with(a).map_err(stage("symbol"))?;
        let grid = Grid::new(&cfg.domain, &cfg.points).map_err(stage("grid"))?;
        let op0 = assemble(&spec, None, None, &grid).map_err(stage("assemble"))?;
        let potential = match &cfg.potential {
            Some(v) => Some(sample_potential(&grid, v).map_err(stage("potential"))?.0),
            None => None,
        };
        let op = match &potential {
            Some(v) => op0.with_added_potential(v),
            None => op0.clone(),
        };
        Ok(Problem { spec, grid, op0, op, potential })
    }

    /// `V₋` from the `kato.vminus` override or from the potential.
    pub fn vminus(&self, cfg: &RunConfig) -> Result<DVector<f64>, PipelineError> {
        if let Some(f) = &cfg.kato.vminus {
            return Ok(sample_potential(&self.grid, f).map_err(stage("kato"))?.0);
        }
        Ok(match &self.potential {
            Some(v) => negative_part(v),
            None => DVector::zeros(self.grid.len()),
        })
    }
}

/// Kernel samples from one source node to every node within the offset.
pub struct KernelSweep {
    pub field: HeatKernelField,
    pub source: usize,
    pub targets: Vec<usize>,
    /// Samples removed by the resolution floor.
    pub dropped: usize,
}

pub fn kernel_sweep(sd: &SpectralData, cfg: &RunConfig) -> Result<KernelSweep, PipelineError> {
    let grid = sd.grid();
    let source = grid.nearest(&cfg.source());
    let x = grid.node(source);
    let reach = cfg.max_offset();
    let targets: Vec<usize> = (0..grid.len())
        .filter(|&j| {
            let y = grid.node(j);
            y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= reach * (1.0 + 1e-12)
        })
        .collect();
    let pairs: Vec<(usize, usize)> = targets.iter().map(|&j| (source, j)).collect();
    let raw = HeatKernelField::spectral(sd, &cfg.times(), &pairs).map_err(stage("kernel"))?;
    let mut samples = Vec::with_capacity(raw.samples.len());
    let mut dropped = 0;
    for chunk in raw.samples.chunks(pairs.len()) {
        let peak = chunk.iter().map(|s| s.value.abs()).fold(0.0, f64::max);
        for s in chunk {
            if s.value.abs() >= RESOLUTION_FLOOR * peak {
                samples.push(s.clone());
            } else {
                dropped += 1;
            }
        }
    }
    Ok(KernelSweep {
        field: HeatKernelField { method: raw.method, samples },
        source,
        targets,
        dropped,
    })
}

/// The Finsler-optimal profile for `n = 1`, or the configured one.
pub fn twist_profile(cfg: &RunConfig, spec: &SymbolSpec, grid: &Grid) -> Result<TwistProfile, PipelineError> {
    if let Some(f) = &cfg.twist.profile {
        return TwistProfile::from_field(spec, grid, f).map_err(stage("twist"));
    }
    if spec.has_constant_coefficients() && matches!(cfg.coefficient, CoefficientField::Constant(c) if c == 1.0) {
        return TwistProfile::coordinate(spec, grid, 0).map_err(stage("twist"));
    }
    if spec.n() != 1 {
        return Err(PipelineError {
            stage: "twist",
            message: "variable coefficients need an explicit `twist.profile` for n = 2".into(),
        });
    }
    let lo = spec.domain().lo[0];
    let failure = std::cell::RefCell::new(None);
    let profile = TwistProfile::from_fn(spec, grid, |x| match finsler::distance_1d(spec, lo, x[0]) {
        Ok(d) => d,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e.to_string());
            f64::NAN
        }
    });
    if let Some(message) = failure.into_inner() {
        return Err(PipelineError { stage: "twist", message });
    }
    profile.map_err(stage("twist"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The fit residual is too large for any conclusion.
    NoVerdict,
    /// Failure at a perturbation size beyond the calibrated range.
    OutOfRegime,
}

impl Verdict {
    pub fn tag(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NoVerdict => "NO-VERDICT",
            Verdict::OutOfRegime => "OUT-OF-REGIME",
        }
    }
}

/// One kernel sample with the bound it is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub abs_k: f64,
    pub d: f64,
    pub bound: f64,
}

impl WorstSample {
    pub fn ratio(&self) -> f64 {
        self.abs_k / self.bound
    }
}

#[derive(Debug, Clone)]
pub struct Theorem1Report {
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub fit: FitReport,
    /// `max(0, σ_m − σ_eff)`.
    pub epsilon: f64,
    pub tolerance: f64,
    pub gamma: f64,
    /// The sample attaining the fitted `Γ`.
    pub worst: WorstSample,
    /// Every sample with its `d_M` and the bound at the fitted `Γ`.
    pub checked: Vec<WorstSample>,
    pub m_bound: f64,
    pub samples: usize,
    pub dropped: usize,
    pub convexity_worst: f64,
    pub certificate: FormBoundReport,
    pub twist: TwistReport,
    pub prefactor: f64,
    /// Worst `|K|` over the twisting bound.
    pub bound_worst: WorstSample,
    pub slack: f64,
}

impl Theorem1Report {
    pub fn bound_ratio(&self) -> f64 {
        self.bound_worst.ratio()
    }
}

/// Smallest `Γ` with `ln Γ + Γt ≥ r`.
fn solve_gamma(r: f64, t: f64) -> f64 {
    let g = |l: f64| l + l.exp() * t;
    let (mut lo, mut hi) = (-1000.0_f64, r.max(0.0) + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= r {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.exp()
}

/// `Γ t^{−n/2m} exp{−σ u + Γt}`.
pub fn gaussian_bound(gamma: f64, sigma: f64, m: u32, n: usize, d: f64, t: f64) -> f64 {
    let p = n as f64 / f64::from(2 * m);
    gamma * t.powf(-p) * (-sigma * gaussian_variable(m, d, t) + gamma * t).exp()
}

/// Fitted `Γ` for the exponent `σ` over the samples, with the sample that
/// fixes it.
pub fn fitted_gamma(samples: &[(KernelSample, f64)], sigma: f64, m: u32, n: usize) -> (f64, usize) {
    let p = n as f64 / f64::from(2 * m);
    let mut best = (0.0, 0);
    for (k, (s, d)) in samples.iter().enumerate() {
        let r = s.value.abs().ln() + p * s.t.ln() + sigma * gaussian_variable(m, *d, s.t);
        let g = solve_gamma(r, s.t);
        if g > best.0 {
            best = (g, k);
        }
    }
    best
}

fn distances_for(spec: &SymbolSpec, m_bound: f64, x: f64, ys: &[f64]) -> Result<DistanceField, PipelineError> {
    DistanceField::dm_1d(spec, m_bound, x, ys).map_err(stage("distance"))
}

/// Assemble, diagonalize, sample the kernel, measure `d_M`, fit the exponent
/// and test the Gaussian bound with the fitted `Γ`.
pub fn verify_theorem1(cfg: &RunConfig) -> Result<Theorem1Report, PipelineError> {
    verify_with(cfg, &cfg.coefficient, symbol::sharp_constants(cfg.m).sigma_m)
}

fn verify_with(cfg: &RunConfig, a: &CoefficientField, target: f64) -> Result<Theorem1Report, PipelineError> {
    if cfg.n != 1 {
        return Err(PipelineError { stage: "config", message: "verification uses d_M, which is one-dimensional".into() });
    }
    let problem = Problem::build_with(cfg, a)?;
    let (m, n) = (cfg.m, cfg.n);
    let mut reasons = Vec::new();

    let pts: Vec<Vec<f64>> = (0..CONVEXITY_POINTS)
        .map(|k| {
            let s = k as f64 / (CONVEXITY_POINTS - 1) as f64;
            vec![cfg.domain.lo[0] + s * (cfg.domain.hi[0] - cfg.domain.lo[0])]
        })
        .collect();
    let convexity = is_strongly_convex(&problem.spec, &pts, DEFAULT_PSD_TOL).map_err(stage("symbol"))?;
    if !convexity.is_convex() {
        return Err(PipelineError {
            stage: "symbol",
            message: format!("not strongly convex near x = {:?}", convexity.witness),
        });
    }
    let vminus = problem.vminus(cfg)?;
    let certificate = form_bound_sweep(&problem.op0, &vminus, &cfg.kato.epsilons).map_err(stage("kato"))?;
    if !certificate.pass {
        return Err(PipelineError { stage: "kato", message: "form bound for the negative part not certified".into() });
    }

    let sd = eigendecompose(&problem.op).map_err(stage("spectral"))?;
    let sweep = kernel_sweep(&sd, cfg)?;
    let x = problem.grid.coord(0, sweep.source);
    let ys: Vec<f64> = sweep.targets.iter().map(|&j| problem.grid.coord(0, j)).collect();
    let m_bound = cfg.distance.m_values.iter().copied().fold(0.0, f64::max);
    let dm = distances_for(&problem.spec, m_bound, x, &ys)?;
    let fit = fit_gaussian_exponent(&sweep.field, &dm, m, n, cfg.t_window()).map_err(stage("fit"))?;

    let epsilon = (target - fit.sigma_eff).max(0.0);
    let sigma = target - epsilon;
    let paired: Vec<(KernelSample, f64)> = sweep
        .field
        .samples
        .iter()
        .map(|s| (s.clone(), dm.nearest(&s.y)))
        .collect();
    let (gamma, at) = fitted_gamma(&paired, sigma, m, n);
    log::debug!("Γ = {gamma} fixed by sample {at}");
    let checked: Vec<WorstSample> = paired
        .iter()
        .map(|(s, d)| WorstSample {
            t: s.t,
            x: s.x.clone(),
            y: s.y.clone(),
            abs_k: s.value.abs(),
            d: *d,
            bound: gaussian_bound(gamma, sigma, m, n, *d, s.t),
        })
        .collect();
    let worst = checked
        .iter()
        .max_by(|a, b| a.ratio().total_cmp(&b.ratio()))
        .cloned()
        .ok_or_else(|| PipelineError { stage: "kernel", message: "no samples".into() })?;

    let profile = twist_profile(cfg, &problem.spec, &problem.grid)?;
    let report = twist::growth_fit(&problem.op, &profile, &cfg.lambda_grid()).map_err(stage("twist"))?;
    let phi = profile.values();
    let phi_x = phi[sweep.source];
    let mut raw = Vec::with_capacity(paired.len());
    for (s, _) in &paired {
        let j = problem.grid.nearest(&s.y);
        let d = (phi[j] - phi_x).abs();
        let b = twist::assemble_gaussian_bound(&report, d, s.t, 1.0, n).map_err(stage("twist"))?;
        raw.push((d, b.value));
    }
    // calibrated on the diagonal at every time and on every pair at the
    // smallest time; all other samples are checked against it
    let t_first = sweep.field.times()[0];
    let prefactor = paired
        .iter()
        .zip(&raw)
        .filter(|((s, _), _)| s.x == s.y || s.t == t_first)
        .map(|((s, _), (_, b))| s.value.abs() / b)
        .fold(0.0, f64::max);
    let mut bound_worst = None::<WorstSample>;
    for ((s, _), (d, b)) in paired.iter().zip(&raw) {
        let w = WorstSample { t: s.t, x: s.x.clone(), y: s.y.clone(), abs_k: s.value.abs(), d: *d, bound: prefactor * b };
        if bound_worst.as_ref().is_none_or(|c| w.ratio() > c.ratio()) {
            bound_worst = Some(w);
        }
    }
    let bound_worst = bound_worst.expect("samples checked above");

    let verdict = if !fit.has_verdict() {
        reasons.push(format!("fit residual {:.3} exceeds the verdict limit", fit.residual));
        Verdict::NoVerdict
    } else {
        if epsilon > cfg.verify.tolerance {
            reasons.push(format!("epsilon {epsilon:.4} exceeds tolerance {}", cfg.verify.tolerance));
        }
        if !(gamma.is_finite() && worst.abs_k <= worst.bound * (1.0 + 1e-9)) {
            reasons.push("fitted Gamma does not bound every sample".into());
        }
        if bound_worst.ratio() > 1.0 + cfg.verify.slack {
            reasons.push(format!(
                "twisting bound exceeded by {:.2}% at t = {}",
                100.0 * (bound_worst.ratio() - 1.0),
                bound_worst.t
            ));
        }
        if reasons.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    };
    Ok(Theorem1Report {
        verdict,
        reasons,
        epsilon,
        tolerance: cfg.verify.tolerance,
        gamma,
        worst,
        checked,
        m_bound,
        samples: paired.len(),
        dropped: sweep.dropped,
        convexity_worst: convexity.worst_eigenvalue,
        certificate,
        twist: report,
        prefactor,
        bound_worst,
        slack: cfg.verify.slack,
        fit,
    })
}

#[derive(Debug, Clone)]
pub struct Theorem2Report {
    pub stability: StabilityReport,
    /// Growth coefficient drift per unit `δ` used for the degraded constant.
    pub c_kappa: f64,
    pub c_emp: f64,
    pub delta: f64,
    /// `σ_m − c_emp·δ`.
    pub target: f64,
    pub verdict: Verdict,
    pub perturbed: Theorem1Report,
}

/// Growth drift of `a + δ·p` over the configured `δ` list, twisted by `x`.
pub fn stability_for(cfg: &RunConfig) -> Result<StabilityReport, PipelineError> {
    let reference = Problem::build(cfg)?;
    let mut perturbed = Vec::with_capacity(cfg.verify.deltas.len());
    for &delta in &cfg.verify.deltas {
        let a = cfg.perturbed_coefficient(delta).map_err(stage("config"))?;
        perturbed.push((delta, Problem::build_with(cfg, &a)?.op));
    }
    let phi = TwistProfile::coordinate(&reference.spec, &reference.grid, 0).map_err(stage("twist"))?;
    twist::perturbation_stability(&reference.op, &perturbed, &phi, &cfg.lambda_grid()).map_err(stage("twist"))
}

/// Runs the first verdict on `a + δ·p` against `σ_m − c_emp·δ`, with `c_emp`
/// calibrated from the growth drift of the same perturbation family.
pub fn verify_theorem2(cfg: &RunConfig) -> Result<Theorem2Report, PipelineError> {
    let stability = stability_for(cfg)?;
    verify_theorem2_with(cfg, stability)
}

pub fn verify_theorem2_with(cfg: &RunConfig, stability: StabilityReport) -> Result<Theorem2Report, PipelineError> {
    let delta = cfg.verify.delta;
    let c_kappa = stability.c_upper;
    let c_emp = twist::sigma_degradation_rate(cfg.m, c_kappa, stability.reference.kappa);
    let sigma_m = symbol::sharp_constants(cfg.m).sigma_m;
    let target = sigma_m - c_emp * delta;
    let a = cfg.perturbed_coefficient(delta).map_err(stage("config"))?;
    let perturbed = verify_with(cfg, &a, target)?;
    let calibrated = cfg.verify.deltas.iter().copied().fold(0.0, f64::max);
    let verdict = match perturbed.verdict {
        Verdict::Pass => Verdict::Pass,
        Verdict::NoVerdict => Verdict::NoVerdict,
        _ if delta > calibrated => Verdict::OutOfRegime,
        v => v,
    };
    Ok(Theorem2Report { stability, c_kappa, c_emp, delta, target, verdict, perturbed })
}

/// Paired fits of one kernel sweep against the Finsler distance and against
/// `|x − y|`.
#[derive(Debug, Clone)]
pub struct AblationReport {
    pub finsler: FitReport,
    pub euclidean: FitReport,
}

impl AblationReport {
    /// Loss of verdict margin when the Euclidean distance replaces `d`.
    pub fn margin_loss(&self) -> f64 {
        self.euclidean.margin - self.finsler.margin
    }
}

pub fn distance_ablation(cfg: &RunConfig) -> Result<AblationReport, PipelineError> {
    if cfg.n != 1 {
        return Err(PipelineError { stage: "config", message: "the ablation uses the closed-form distance (n = 1)".into() });
    }
    let problem = Problem::build(cfg)?;
    let sd = eigendecompose(&problem.op).map_err(stage("spectral"))?;
    let sweep = kernel_sweep(&sd, cfg)?;
    let x = problem.grid.coord(0, sweep.source);
    let ys: Vec<f64> = sweep.targets.iter().map(|&j| problem.grid.coord(0, j)).collect();
    let finsler_d = DistanceField::closed_form_1d(&problem.spec, x, &ys).map_err(stage("distance"))?;
    let flat = cfg
        .build_symbol_with(&CoefficientField::Constant(1.0))
        .map_err(stage("symbol"))?;
    let euclid_d = DistanceField::closed_form_1d(&flat, x, &ys).map_err(stage("distance"))?;
    let fit = |d: &DistanceField| fit_gaussian_exponent(&sweep.field, d, cfg.m, cfg.n, cfg.t_window()).map_err(stage("fit"));
    Ok(AblationReport { finsler: fit(&finsler_d)?, euclidean: fit(&euclid_d)? })
}
