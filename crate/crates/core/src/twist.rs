//! Exponentially twisted forms `Q_{λφ}(u, v) = Q(e^{λφ}u, e^{−λφ}v)`, their
//! lower bounds `k(λ)`, the `λ^{2m}` growth law and the Gaussian bound
//! obtained by optimizing over `λ`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::discretize::{DiscreteOperator, Grid};
use crate::field::{CoefficientField, FieldError};
use crate::kato::FormBoundReport;
use crate::linalg;
use crate::symbol::{self, MultiIndex, SymbolError, SymbolSpec};

/// Largest admissible exponent in a twisted entry.
pub const EXPONENT_GUARD: f64 = 600.0;
/// `δ` in the bound `exp{−λd + (1+δ)k(λ)t}`.
pub const BOUND_DELTA: f64 = 0.01;
/// A fit is unreliable when its worst residual exceeds this fraction of
/// `k(λ_max)`.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.05;
/// Relative tolerance on the sampled feasibility constraints.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwistError {
    #[error("lambda * phi increment {0} exceeds the overflow guard")]
    Overflow(f64),
    #[error("lambda must be non-negative and finite, got {0}")]
    Lambda(f64),
    #[error("eigensolver: {0}")]
    Eigen(String),
    #[error("profile has {got} values, grid has {need}")]
    Length { got: usize, need: usize },
    #[error("profile: {0}")]
    Field(#[from] FieldError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("{0}")]
    Precondition(String),
    #[error("fit needs at least two lambda values spanning a decade")]
    Grid,
}

/// `φ` sampled at the nodes with derivatives `D^α φ` for `1 ≤ |α| ≤ m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistProfile {
    values: Vec<f64>,
    /// `(α, samples)` for every `1 ≤ |α| ≤ m`.
    derivatives: Vec<(MultiIndex, Vec<f64>)>,
    /// `max_x A(x, ∇φ)`.
    pub symbol_max: f64,
    /// `max |D^α φ|` over `2 ≤ |α| ≤ m`.
    pub higher_max: f64,
    /// `max |∇φ|` component-wise.
    pub gradient_max: f64,
}

impl TwistProfile {
    /// Sample `f` at the nodes; derivatives from central differences of `f`
    /// with step equal to the grid spacing.
    pub fn from_fn(spec: &SymbolSpec, grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self, TwistError> {
        let n = grid.dim();
        let m = spec.m();
        let nodes = grid.nodes();
        let values: Vec<f64> = nodes.iter().map(|x| f(x)).collect();
        let mut derivatives = Vec::new();
        for order in 1..=m {
            for alpha in MultiIndex::enumerate(n, order) {
                let samples = nodes
                    .iter()
                    .map(|x| central_derivative(&f, x, &alpha, grid.spacing()))
                    .collect();
                derivatives.push((alpha, samples));
            }
        }
        Self::finish(spec, grid, values, derivatives)
    }

    pub fn from_field(spec: &SymbolSpec, grid: &Grid, field: &CoefficientField) -> Result<Self, TwistError> {
        let nodes = grid.nodes();
        for x in &nodes {
            field.eval(x)?;
        }
        Self::from_fn(spec, grid, |x| field.eval(x).unwrap_or(f64::NAN))
    }

    /// `φ(x) = x_axis` with exact derivatives.
    pub fn coordinate(spec: &SymbolSpec, grid: &Grid, axis: usize) -> Result<Self, TwistError> {
        let n = grid.dim();
        let nodes = grid.nodes();
        let values = nodes.iter().map(|x| x[axis]).collect();
        let mut derivatives = Vec::new();
        for order in 1..=spec.m() {
            for alpha in MultiIndex::enumerate(n, order) {
                let c = if alpha == MultiIndex::axis(n, axis, 1) { 1.0 } else { 0.0 };
                derivatives.push((alpha, vec![c; nodes.len()]));
            }
        }
        Self::finish(spec, grid, values, derivatives)
    }

    fn finish(spec: &SymbolSpec, grid: &Grid, values: Vec<f64>, derivatives: Vec<(MultiIndex, Vec<f64>)>) -> Result<Self, TwistError> {
        if values.len() != grid.len() {
            return Err(TwistError::Length {
                got: values.len(),
                need: grid.len(),
            });
        }
        let n = grid.dim();
        let nodes = grid.nodes();
        let mut symbol_max: f64 = 0.0;
        let mut gradient_max: f64 = 0.0;
        let mut higher_max: f64 = 0.0;
        for (k, x) in nodes.iter().enumerate() {
            let grad: Vec<f64> = (0..n)
                .map(|a| {
                    let e = MultiIndex::axis(n, a, 1);
                    derivatives.iter().find(|(al, _)| *al == e).map(|(_, s)| s[k]).unwrap_or(0.0)
                })
                .collect();
            gradient_max = grad.iter().fold(gradient_max, |mx, g| mx.max(g.abs()));
            symbol_max = symbol_max.max(symbol::eval_symbol(spec, x, &grad)?);
        }
        for (alpha, s) in &derivatives {
            if alpha.order() >= 2 {
                higher_max = s.iter().fold(higher_max, |mx, v| mx.max(v.abs()));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TwistError::Precondition("profile has non-finite samples".into()));
        }
        Ok(Self {
            values,
            derivatives,
            symbol_max,
            higher_max,
            gradient_max,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative(&self, alpha: &MultiIndex) -> Option<&[f64]> {
        self.derivatives.iter().find(|(a, _)| a == alpha).map(|(_, s)| s.as_slice())
    }

    /// `A(x, ∇φ) ≤ 1` at every node.
    pub fn satisfies_symbol_bound(&self) -> bool {
        self.symbol_max <= 1.0 + FEASIBILITY_TOL
    }

    /// Member of the class with `A(x,∇φ) ≤ 1` and `|D^αφ| ≤ M` for `2 ≤ |α| ≤ m`.
    pub fn in_symbol_class(&self, m_bound: f64) -> bool {
        self.satisfies_symbol_bound() && self.higher_max <= m_bound * (1.0 + FEASIBILITY_TOL)
    }

    /// Member of the class with `|D^αφ| ≤ M` for `1 ≤ |α| ≤ m`.
    pub fn in_uniform_class(&self, m_bound: f64) -> bool {
        let tol = m_bound * (1.0 + FEASIBILITY_TOL);
        self.gradient_max <= tol && self.higher_max <= tol
    }

    /// `−φ`.
    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            derivatives: self
                .derivatives
                .iter()
                .map(|(a, s)| (a.clone(), s.iter().map(|v| -v).collect()))
                .collect(),
            ..self.clone()
        }
    }
}

fn central_derivative(f: &impl Fn(&[f64]) -> f64, x: &[f64], alpha: &MultiIndex, h: &[f64]) -> f64 {
    // tensor product of 1D central stencils of order α_k
    let mut terms: Vec<(Vec<f64>, f64)> = vec![(x.to_vec(), 1.0)];
    for (k, &c) in alpha.entries().iter().enumerate() {
        if c == 0 {
            continue;
        }
        let (offsets, weights) = central_stencil(c);
        let mut next = Vec::with_capacity(terms.len() * offsets.len());
        for (p, w) in &terms {
            for (o, cw) in offsets.iter().zip(&weights) {
                let mut q = p.clone();
                q[k] += o * h[k];
                next.push((q, w * cw / h[k].powi(c as i32)));
            }
        }
        terms = next;
    }
    terms.iter().map(|(p, w)| w * f(p)).sum()
}

/// Central stencil of order `c` on unit spacing: offsets and weights.
fn central_stencil(c: u32) -> (Vec<f64>, Vec<f64>) {
    match c {
        1 => (vec![-1.0, 1.0], vec![-0.5, 0.5]),
        _ if c % 2 == 0 => {
            let j = c / 2;
            let mut w = vec![1.0];
            for _ in 0..j {
                let mut next = vec![0.0; w.len() + 2];
                for (i, v) in w.iter().enumerate() {
                    next[i] += v;
                    next[i + 1] -= 2.0 * v;
                    next[i + 2] += v;
                }
                w = next;
            }
            let offsets = (0..w.len()).map(|i| i as f64 - j as f64).collect();
            (offsets, w)
        }
        _ => {
            let (o_even, w_even) = central_stencil(c - 1);
            let mut offsets = Vec::new();
            let mut weights = Vec::new();
            for (o, w) in o_even.iter().zip(&w_even) {
                offsets.push(o - 1.0);
                weights.push(-0.5 * w);
                offsets.push(o + 1.0);
                weights.push(0.5 * w);
            }
            (offsets, weights)
        }
    }
}

/// `E⁻¹ F E` with `E = diag(e^{λφ})`, computed entrywise so only nonzero
/// entries need representable exponents.
pub fn twisted_full(op: &DiscreteOperator, phi: &TwistProfile, lambda: f64) -> Result<DMatrix<f64>, TwistError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(TwistError::Lambda(lambda));
    }
    let form = op.form();
    let p = phi.values();
    if p.len() != form.nrows() {
        return Err(TwistError::Length {
            got: p.len(),
            need: form.nrows(),
        });
    }
    let size = form.nrows();
    let mut out = DMatrix::zeros(size, size);
    for j in 0..size {
        for i in 0..size {
            let f = form[(i, j)];
            if f == 0.0 {
                continue;
            }
            let e = lambda * (p[j] - p[i]);
            if e.abs() > EXPONENT_GUARD {
                return Err(TwistError::Overflow(e.abs()));
            }
            out[(i, j)] = f * e.exp();
        }
    }
    Ok(out)
}

/// Symmetric part of the twisted form matrix.
pub fn twisted_form(op: &DiscreteOperator, phi: &TwistProfile, lambda: f64) -> Result<DMatrix<f64>, TwistError> {
    let full = twisted_full(op, phi, lambda)?;
    Ok((&full + full.transpose()) * 0.5)
}

/// `k(λ) = −λ_min` of the symmetric twisted operator, in operator units.
pub fn lower_bound_k(op: &DiscreteOperator, phi: &TwistProfile, lambda: f64) -> Result<f64, TwistError> {
    let sym = twisted_form(op, phi, lambda)?;
    let lmin = linalg::min_eigenvalue(&sym).map_err(TwistError::Eigen)?;
    Ok(-lmin / op.weight())
}

/// `per_decade` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=count)
        .map(|i| lo * 10f64.powf(decades * i as f64 / count as f64))
        .collect()
}

/// Default sweep: 40 points per decade over `[10⁰, 10^2.5]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1.0, 10f64.powf(2.5), 40)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistReport {
    pub m: u32,
    pub lambdas: Vec<f64>,
    pub k: Vec<f64>,
    /// `k(0) = −λ_min(H)`.
    pub k0: f64,
    /// Leading coefficient of `k ≈ κλ^{2m} + c` on the top decade.
    pub kappa: f64,
    pub intercept: f64,
    /// Worst fit residual on the fitted window divided by `k(λ_max)`.
    pub residual: f64,
    pub reliable: bool,
    pub k_m: f64,
    /// `κ/k_m − 1`.
    pub excess: f64,
}

impl TwistReport {
    pub fn model(&self, lambda: f64) -> f64 {
        self.kappa * lambda.powi(2 * self.m as i32) + self.intercept
    }

    /// Measured `k` at `λ`, with `k(0)` at zero.
    fn k_at(&self, idx: Option<usize>) -> f64 {
        idx.map_or(self.k0, |i| self.k[i])
    }
}

/// Least-squares fit of `k = κλ^{2m} + c` over `λ ≥ λ_max/10`.
fn fit_growth(m: u32, lambdas: &[f64], k: &[f64]) -> Result<(f64, f64, f64), TwistError> {
    let lmax = lambdas.iter().copied().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(k)
        .filter(|(l, _)| **l >= lmax / 10.0 * (1.0 - 1e-12))
        .map(|(l, kv)| (l.powi(2 * m as i32), *kv))
        .collect();
    if pts.len() < 2 {
        return Err(TwistError::Grid);
    }
    let nf = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let kappa = sxy / sxx;
    let c = my - kappa * mx;
    let kmax = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let worst = pts.iter().map(|p| (p.1 - kappa * p.0 - c).abs()).fold(0.0, f64::max);
    Ok((kappa, c, worst / kmax))
}

pub fn growth_fit(op: &DiscreteOperator, phi: &TwistProfile, lambdas: &[f64]) -> Result<TwistReport, TwistError> {
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().copied().fold(0.0, f64::max);
    if lambdas.len() < 2 || !(hi >= 10.0 * lo * (1.0 - 1e-12)) {
        return Err(TwistError::Grid);
    }
    let k = lambdas
        .iter()
        .map(|&l| lower_bound_k(op, phi, l))
        .collect::<Result<Vec<_>, _>>()?;
    let k0 = lower_bound_k(op, phi, 0.0)?;
    let (kappa, intercept, residual) = fit_growth(op.m(), lambdas, &k)?;
    let k_m = symbol::sharp_constants(op.m()).k_m;
    let reliable = residual <= FIT_RESIDUAL_LIMIT;
    if !reliable {
        log::warn!("growth fit residual {residual:.3} exceeds {FIT_RESIDUAL_LIMIT}");
    }
    Ok(TwistReport {
        m: op.m(),
        lambdas: lambdas.to_vec(),
        k,
        k0,
        kappa,
        intercept,
        residual,
        reliable,
        k_m,
        excess: kappa / k_m - 1.0,
    })
}

/// Fits with and without the potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTwistReport {
    pub with_potential: TwistReport,
    pub without: TwistReport,
    /// `|κ_V − κ₀| / κ₀`.
    pub leading_shift: f64,
    /// `c_V − c₀`.
    pub intercept_shift: f64,
}

impl PotentialTwistReport {
    pub fn leading_unchanged(&self, tol: f64) -> bool {
        self.leading_shift <= tol
    }
}

/// Growth fit on `H = H₀ + V` next to `H₀`; requires a certified form bound
/// for `V₋`.
pub fn growth_fit_with_potential(
    op_v: &DiscreteOperator,
    op0: &DiscreteOperator,
    phi: &TwistProfile,
    lambdas: &[f64],
    certificate: &FormBoundReport,
) -> Result<PotentialTwistReport, TwistError> {
    if !certificate.pass {
        return Err(TwistError::Precondition("form bound for the negative part not certified".into()));
    }
    let with_potential = growth_fit(op_v, phi, lambdas)?;
    let without = growth_fit(op0, phi, lambdas)?;
    Ok(PotentialTwistReport {
        leading_shift: (with_potential.kappa - without.kappa).abs() / without.kappa,
        intercept_shift: with_potential.intercept - without.intercept,
        with_potential,
        without,
    })
}

/// `−σ(κ) d^{2m/(2m−1)} t^{−1/(2m−1)}`, the value of `inf_λ(−λd + κλ^{2m}t)`.
pub fn closed_form_exponent(m: u32, kappa: f64, d: f64, t: f64) -> f64 {
    let mf = f64::from(m);
    -symbol::sigma_for_growth(m, kappa) * d.powf(2.0 * mf / (2.0 * mf - 1.0)) * t.powf(-1.0 / (2.0 * mf - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBound {
    /// `prefactor·t^{−n/2m}·inf_λ exp{−λd + (1+δ)k(λ)t}` over the measured sweep.
    pub value: f64,
    pub grid_exponent: f64,
    pub grid_lambda: f64,
    /// Exponent at `λ*` using the fitted model.
    pub closed_exponent: f64,
    pub lambda_star: f64,
    /// `λ*` lies outside the sweep; the grid infimum is then not comparable.
    pub extend_grid: bool,
    /// Relative gap between the two exponents.
    pub exponent_gap: f64,
}

impl GaussianBound {
    /// Grid and closed form agree within 0.5% when `λ*` is interior.
    pub fn agrees(&self) -> bool {
        self.extend_grid || self.exponent_gap <= 5e-3
    }
}

pub fn assemble_gaussian_bound(report: &TwistReport, d: f64, t: f64, prefactor: f64, n: usize) -> Result<GaussianBound, TwistError> {
    if !(report.kappa > 0.0) {
        return Err(TwistError::Precondition(format!("leading coefficient {} not positive", report.kappa)));
    }
    if !(t > 0.0) || d < 0.0 {
        return Err(TwistError::Precondition(format!("need t > 0 and d >= 0 (t = {t}, d = {d})")));
    }
    let m = report.m;
    let grow = 1.0 + BOUND_DELTA;
    let mut best = (grow * report.k_at(None) * t, 0.0);
    for (i, &l) in report.lambdas.iter().enumerate() {
        let e = -l * d + grow * report.k_at(Some(i)) * t;
        if e < best.0 {
            best = (e, l);
        }
    }
    let mf = f64::from(m);
    let lambda_star = symbol::optimal_lambda(m, report.kappa * grow, d, t);
    let closed = -lambda_star * d + grow * (report.kappa * lambda_star.powf(2.0 * mf) + report.intercept) * t;
    let lo = report.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = report.lambdas.iter().copied().fold(0.0, f64::max);
    let extend_grid = d > 0.0 && !(lambda_star >= lo && lambda_star <= hi);
    let exponent_gap = if closed != 0.0 { (best.0 - closed).abs() / closed.abs() } else { (best.0 - closed).abs() };
    Ok(GaussianBound {
        value: prefactor * t.powf(-(n as f64) / (2.0 * mf)) * best.0.exp(),
        grid_exponent: best.0,
        grid_lambda: best.1,
        closed_exponent: closed,
        lambda_star,
        extend_grid,
        exponent_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityEntry {
    pub delta: f64,
    pub kappa: f64,
    pub delta_kappa: f64,
    /// `Δκ/δ`.
    pub ratio: f64,
    /// Intercept difference to the reference, the sub-leading drift.
    pub intercept_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub reference: TwistReport,
    pub entries: Vec<StabilityEntry>,
    /// Least-squares slope of `Δκ` against `δ` through the origin.
    pub slope: f64,
    /// `max_δ Δκ/δ`, the smallest `c` with `Δκ ≤ cδ` on the samples.
    pub c_upper: f64,
    /// `max/min` of `Δκ/δ` over the nonzero `δ`.
    pub ratio_spread: f64,
}

/// Compares the growth coefficient of perturbed operators with the
/// reference; `perturbed` pairs each coefficient gap `δ` with its operator.
pub fn perturbation_stability(
    reference: &DiscreteOperator,
    perturbed: &[(f64, DiscreteOperator)],
    phi: &TwistProfile,
    lambdas: &[f64],
) -> Result<StabilityReport, TwistError> {
    let base = growth_fit(reference, phi, lambdas)?;
    let mut entries = Vec::with_capacity(perturbed.len());
    for (delta, op) in perturbed {
        let r = growth_fit(op, phi, lambdas)?;
        let dk = (r.kappa - base.kappa).abs();
        entries.push(StabilityEntry {
            delta: *delta,
            kappa: r.kappa,
            delta_kappa: dk,
            ratio: if *delta > 0.0 { dk / delta } else { 0.0 },
            intercept_drift: r.intercept - base.intercept,
        });
    }
    let nonzero: Vec<&StabilityEntry> = entries.iter().filter(|e| e.delta > 0.0).collect();
    let sxx: f64 = nonzero.iter().map(|e| e.delta * e.delta).sum();
    let sxy: f64 = nonzero.iter().map(|e| e.delta * e.delta_kappa).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c_upper = nonzero.iter().map(|e| e.ratio).fold(0.0, f64::max);
    let rmin = nonzero.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min);
    let ratio_spread = if rmin > 0.0 && rmin.is_finite() { c_upper / rmin } else { f64::INFINITY };
    Ok(StabilityReport {
        reference: base,
        entries,
        slope,
        c_upper,
        ratio_spread,
    })
}

/// The degraded constant `σ_m − c·δ` implied by a growth slope `c_κ`:
/// `σ(κ̂ + c_κδ) ≈ σ_m (1 − c_κδ/((2m−1)κ̂))`, so `c = σ_m c_κ/((2m−1)κ̂)`.
pub fn sigma_degradation_rate(m: u32, slope: f64, kappa_hat: f64) -> f64 {
    symbol::sharp_constants(m).sigma_m * slope / kappa_hat / f64::from(2 * m - 1)
}
