//! Smallness of the negative part of a potential relative to `H₀`: form
//! bounds, resolvent `ℓ¹` norms, weighted `ℓ²` norms and the integrated
//! semigroup condition.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::discretize::DiscreteOperator;
use crate::heatkernel::SpectralData;
use crate::linalg;
use crate::quadrature::GaussLegendre;

/// Slack allowed on matrix inequalities, relative to the form's scale.
pub const MATRIX_SLACK: f64 = 1e-10;
/// Random trial vectors in [`consequence_q0q`].
pub const RANDOM_TRIALS: usize = 1000;
const MIYADERA_RULE: usize = 32;
const MIYADERA_PANELS: usize = 8;
const MIYADERA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KatoError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("potential must be non-negative and finite (entry {index} = {value})")]
    Potential { index: usize, value: f64 },
    #[error("potential has {got} samples, grid has {need}")]
    Length { got: usize, need: usize },
    #[error("operator must be built without a potential")]
    HasPotential,
    #[error("resolvent at lambda = {0} is singular or indefinite")]
    Singular(f64),
    #[error("delta must be positive, got {0}")]
    Delta(f64),
    #[error("eigensolver: {0}")]
    Eigen(String),
}

/// `V₋ = max(−V, 0)` entrywise.
pub fn negative_part(v: &DVector<f64>) -> DVector<f64> {
    v.map(|x| (-x).max(0.0))
}

fn check_potential(op0: &DiscreteOperator, v: &DVector<f64>) -> Result<(), KatoError> {
    if v.len() != op0.grid().len() {
        return Err(KatoError::Length {
            got: v.len(),
            need: op0.grid().len(),
        });
    }
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !(**x >= 0.0) || !x.is_finite()) {
        return Err(KatoError::Potential { index, value });
    }
    Ok(())
}

/// Smallest `c_ε ≥ 0` with `Σ V₋|u|² hⁿ ≤ εQ₀(u) + c_ε‖u‖²` for all grid
/// vectors.
pub fn form_bound(op0: &DiscreteOperator, vminus: &DVector<f64>, eps: f64) -> Result<f64, KatoError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(KatoError::Epsilon(eps));
    }
    if op0.potential().is_some() {
        return Err(KatoError::HasPotential);
    }
    check_potential(op0, vminus)?;
    let w = op0.weight();
    let mut m = op0.form() * (-eps);
    for i in 0..m.nrows() {
        m[(i, i)] += vminus[i] * w;
    }
    let lmax = linalg::max_eigenvalue(&m).map_err(KatoError::Eigen)?;
    Ok((lmax / w).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormBoundReport {
    pub epsilons: Vec<f64>,
    pub c_eps: Vec<f64>,
    pub pass: bool,
}

impl FormBoundReport {
    pub fn is_non_increasing(&self) -> bool {
        self.c_eps.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12)
    }
}

pub fn form_bound_sweep(op0: &DiscreteOperator, vminus: &DVector<f64>, epsilons: &[f64]) -> Result<FormBoundReport, KatoError> {
    let c_eps = epsilons
        .iter()
        .map(|&e| form_bound(op0, vminus, e))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = c_eps.iter().all(|c| c.is_finite());
    Ok(FormBoundReport {
        epsilons: epsilons.to_vec(),
        c_eps,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Q0qReport {
    /// `λ_min((Q + c_ε‖·‖²)/(1−ε) − Q₀)` divided by `max|Q₀|`.
    pub scaled_min_eigenvalue: f64,
    /// Smallest `uᵀMu / (|u|²·max|Q₀|)` over the random trials.
    pub scaled_random_min: f64,
    pub holds: bool,
}

/// Checks `Q₀(u) ≤ (Q(u) + c_ε‖u‖²)/(1−ε)` as a matrix inequality and on
/// seeded random vectors.
pub fn consequence_q0q(
    op_v: &DiscreteOperator,
    op0: &DiscreteOperator,
    eps: f64,
    c_eps: f64,
    seed: u64,
) -> Result<Q0qReport, KatoError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(KatoError::Epsilon(eps));
    }
    let w = op0.weight();
    let mut m = op_v.form().clone();
    for i in 0..m.nrows() {
        m[(i, i)] += c_eps * w;
    }
    let m = m / (1.0 - eps) - op0.form();
    let scale = op0.form().amax();
    let lmin = linalg::min_eigenvalue(&m).map_err(KatoError::Eigen)? / scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = m.nrows();
    let mut random_min = f64::INFINITY;
    for _ in 0..RANDOM_TRIALS {
        let u = DVector::from_iterator(size, (0..size).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        let q = u.dot(&(&m * &u)) / (u.norm_squared() * scale);
        random_min = random_min.min(q);
    }
    Ok(Q0qReport {
        scaled_min_eigenvalue: lmin,
        scaled_random_min: random_min,
        holds: lmin >= -MATRIX_SLACK && random_min >= -MATRIX_SLACK,
    })
}

/// Resolvent `(H₀ + λ)⁻¹` of the nodal operator.
pub fn resolvent(op0: &DiscreteOperator, lambda: f64) -> Result<DMatrix<f64>, KatoError> {
    linalg::spd_shifted_inverse(&op0.operator_matrix(), lambda).map_err(|_| KatoError::Singular(lambda))
}

/// `‖V₋(H₀+λ)⁻¹‖₁→₁` along a λ sweep, with the dual `∞→∞` norm of
/// `(H₀+λ)⁻¹V₋` computed from rows.
#[derive(Debug, Clone, PartialEq)]
pub struct KatoCurve {
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub dual_norms: Vec<f64>,
}

impl KatoCurve {
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.norms.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn max_duality_gap(&self) -> f64 {
        self.norms
            .iter()
            .zip(&self.dual_norms)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Column sums `max_j Σ_i V_i |R_ij|`, i.e. the kernel `R/hⁿ` integrated
/// against `V₋` with quadrature weight `hⁿ`.
fn kato_norm_from(r: &DMatrix<f64>, v: &DVector<f64>) -> (f64, f64) {
    let n = r.nrows();
    let col = (0..n)
        .map(|j| (0..n).map(|i| v[i] * r[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let row = (0..n)
        .map(|i| (0..n).map(|j| (r[(i, j)] * v[j]).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    (col, row)
}

pub fn kato_norm_curve(op0: &DiscreteOperator, vminus: &DVector<f64>, lambdas: &[f64]) -> Result<KatoCurve, KatoError> {
    check_potential(op0, vminus)?;
    let mut norms = Vec::with_capacity(lambdas.len());
    let mut dual_norms = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let r = resolvent(op0, lambda)?;
        let (col, row) = kato_norm_from(&r, vminus);
        norms.push(col);
        dual_norms.push(row);
    }
    Ok(KatoCurve {
        lambdas: lambdas.to_vec(),
        norms,
        dual_norms,
    })
}

/// Default sweep `10⁰, 10¹, …, 10⁵`.
pub fn default_lambdas() -> Vec<f64> {
    (0..=5).map(|k| 10f64.powi(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedL2Report {
    pub status: CheckStatus,
    pub lambda: f64,
    pub weighted_norm: f64,
    pub kato_norm: f64,
}

/// Norm of `(H₀+λ)⁻¹V₋` on `ℓ²(V₋hⁿ)` restricted to `{V₋ > 0}`, compared
/// with the `ℓ¹` norm.
pub fn weighted_l2_check(op0: &DiscreteOperator, vminus: &DVector<f64>, lambda: f64) -> Result<WeightedL2Report, KatoError> {
    check_potential(op0, vminus)?;
    let support: Vec<usize> = (0..vminus.len()).filter(|&i| vminus[i] > 0.0).collect();
    if support.is_empty() {
        return Ok(WeightedL2Report {
            status: CheckStatus::Vacuous,
            lambda,
            weighted_norm: 0.0,
            kato_norm: 0.0,
        });
    }
    let r = resolvent(op0, lambda)?;
    let (kato_norm, _) = kato_norm_from(&r, vminus);
    let k = support.len();
    let mut t = DMatrix::zeros(k, k);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            t[(a, b)] = vminus[i].sqrt() * 0.5 * (r[(i, j)] + r[(j, i)]) * vminus[j].sqrt();
        }
    }
    let weighted_norm = linalg::sym_spectral_norm(&t).map_err(KatoError::Eigen)?;
    let status = if weighted_norm <= kato_norm + 1e-8 {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(WeightedL2Report {
        status,
        lambda,
        weighted_norm,
        kato_norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiyaderaReport {
    pub delta: f64,
    /// `∫₀^δ ‖V₋e^{−tH₀}u‖₁ dt` with the refined panel count.
    pub value: f64,
    /// `value / ‖u‖₁`.
    pub ratio: f64,
    /// Relative change between the base and the doubled panel count.
    pub refinement_change: f64,
    pub converged: bool,
}

/// Integrated condition by composite Gauss–Legendre in `t` over the
/// spectral representation of `e^{−tH₀}`.
pub fn miyadera_integral(sd0: &SpectralData, vminus: &DVector<f64>, delta: f64, u: &DVector<f64>) -> Result<MiyaderaReport, KatoError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(KatoError::Delta(delta));
    }
    if vminus.len() != sd0.len() || u.len() != sd0.len() {
        return Err(KatoError::Length {
            got: vminus.len().min(u.len()),
            need: sd0.len(),
        });
    }
    let w = sd0.weight();
    let vecs = sd0.vectors();
    let coeff = vecs.transpose() * u * w;
    let lam = sd0.eigenvalues();
    let integrand = |t: f64| {
        let c = DVector::from_iterator(coeff.len(), (0..coeff.len()).map(|k| (-lam[k] * t).exp() * coeff[k]));
        let f = vecs * c;
        w * f.iter().zip(vminus.iter()).map(|(a, v)| (a * v).abs()).sum::<f64>()
    };
    let rule = GaussLegendre::new(MIYADERA_RULE);
    let coarse = rule.composite(0.0, delta, MIYADERA_PANELS, integrand);
    let fine = rule.composite(0.0, delta, 2 * MIYADERA_PANELS, integrand);
    let change = if fine != 0.0 { (fine - coarse).abs() / fine.abs() } else { (fine - coarse).abs() };
    let u1 = w * u.iter().map(|x| x.abs()).sum::<f64>();
    Ok(MiyaderaReport {
        delta,
        value: fine,
        ratio: if u1 > 0.0 { fine / u1 } else { 0.0 },
        refinement_change: change,
        converged: change <= MIYADERA_TOL,
    })
}
