//! Heat kernels: spectral evaluation for discretized operators and a
//! Fourier-integral oracle for constant-coefficient symbols on the line.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::discretize::{DiscreteOperator, Grid};
use crate::linalg;
use crate::quadrature::GaussLegendre;

/// The oracle integrand `e^{−aξ^{2m}t}` is below `e^{−750}` past the cutoff.
pub const ORACLE_EXPONENT_CUTOFF: f64 = 750.0;
/// Absolute tolerance for the oracle's panel-doubling estimate.
pub const ORACLE_TOL: f64 = 1e-10;
const ORACLE_RULE: usize = 32;
const ORACLE_MAX_DOUBLINGS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeatKernelError {
    #[error("operator is not elliptic (sampled ellipticity constant {0})")]
    NotElliptic(f64),
    #[error("eigensolver: {0}")]
    Eigen(String),
    #[error("time must be positive, got {0}")]
    Time(f64),
    #[error("quadrature did not converge: change {change:e} after {panels} panels")]
    Quadrature { change: f64, panels: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Eigenpairs of `H = form/hⁿ`, eigenvectors normalized so that
/// `Σ_i v(x_i)² hⁿ = 1`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    grid: Grid,
    eigenvalues: DVector<f64>,
    vectors: DMatrix<f64>,
}

pub fn eigendecompose(op: &DiscreteOperator) -> Result<SpectralData, HeatKernelError> {
    if op.ellipticity() <= 0.0 {
        return Err(HeatKernelError::NotElliptic(op.ellipticity()));
    }
    let (eigenvalues, vectors) = linalg::sym_eigen(&op.operator_matrix()).map_err(HeatKernelError::Eigen)?;
    let vectors = vectors / op.weight().sqrt();
    Ok(SpectralData {
        grid: op.grid().clone(),
        eigenvalues,
        vectors,
    })
}

impl SpectralData {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Eigenvectors as columns, weighted normalization.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.grid.weight()
    }

    /// `max_k ‖Hv_k − λ_k v_k‖ / ((|λ_k| + 1)‖v_k‖)`.
    pub fn max_residual(&self, op: &DiscreteOperator) -> f64 {
        let hv = op.operator_matrix() * &self.vectors;
        (0..self.len())
            .map(|k| {
                let v = self.vectors.column(k);
                let r = hv.column(k) - v * self.eigenvalues[k];
                r.norm() / ((self.eigenvalues[k].abs() + 1.0) * v.norm())
            })
            .fold(0.0, f64::max)
    }

    /// `max |VᵀV hⁿ − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors * self.weight();
        (g - DMatrix::identity(self.len(), self.len())).amax()
    }

    fn decay(&self, t: f64) -> DVector<f64> {
        self.eigenvalues.map(|l| (-l * t).exp())
    }

    /// `K(t, x_i, x_j) = Σ_k e^{−λ_k t} v_k(x_i) v_k(x_j)`.
    pub fn kernel(&self, t: f64, i: usize, j: usize) -> Result<f64, HeatKernelError> {
        check_time(t)?;
        let e = self.decay(t);
        Ok((0..self.len())
            .map(|k| e[k] * self.vectors[(i, k)] * self.vectors[(j, k)])
            .sum())
    }

    /// `K(t, x_i, ·)` at every node.
    pub fn kernel_row(&self, t: f64, i: usize) -> Result<DVector<f64>, HeatKernelError> {
        check_time(t)?;
        let e = self.decay(t);
        let coeff = DVector::from_iterator(self.len(), (0..self.len()).map(|k| e[k] * self.vectors[(i, k)]));
        Ok(&self.vectors * coeff)
    }

    /// Full kernel matrix `V diag(e^{−λt}) Vᵀ`.
    pub fn kernel_matrix(&self, t: f64) -> Result<DMatrix<f64>, HeatKernelError> {
        check_time(t)?;
        let e = self.decay(t);
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= e[k];
        }
        Ok(scaled * self.vectors.transpose())
    }

    /// `(Σ_i K(t,i,i) hⁿ, Σ_k e^{−λ_k t})`.
    pub fn trace(&self, t: f64) -> Result<(f64, f64), HeatKernelError> {
        check_time(t)?;
        let e = self.decay(t);
        let w = self.weight();
        let diag: f64 = (0..self.len())
            .map(|i| (0..self.len()).map(|k| e[k] * self.vectors[(i, k)].powi(2)).sum::<f64>())
            .sum::<f64>()
            * w;
        Ok((diag, e.sum()))
    }
}

fn check_time(t: f64) -> Result<(), HeatKernelError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(HeatKernelError::Time(t))
    }
}

/// Chapman–Kolmogorov defect `max_{i,j} |Σ_z K(t,i,z)K(s,z,j)hⁿ − K(t+s,i,j)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupDefect {
    pub defect: f64,
    pub max_abs_kernel: f64,
}

pub fn semigroup_check(sd: &SpectralData, t: f64, s: f64) -> Result<SemigroupDefect, HeatKernelError> {
    let kt = sd.kernel_matrix(t)?;
    let ks = sd.kernel_matrix(s)?;
    let kts = sd.kernel_matrix(t + s)?;
    let composed = kt * ks * sd.weight();
    Ok(SemigroupDefect {
        defect: (composed - &kts).amax(),
        max_abs_kernel: kts.amax(),
    })
}

/// `K₀(t,0,r) = (1/π)∫₀^Ξ e^{−aξ^{2m}t} cos(ξr) dξ` for `A(ξ) = aξ^{2m}` on the line.
pub fn fourier_oracle(m: u32, a: f64, t: f64, r: f64) -> Result<f64, HeatKernelError> {
    if m == 0 || !(a > 0.0) {
        return Err(HeatKernelError::Argument(format!("need m >= 1 and a > 0 (m = {m}, a = {a})")));
    }
    check_time(t)?;
    let two_m = 2 * m as i32;
    let cutoff = (ORACLE_EXPONENT_CUTOFF / (a * t)).powf(1.0 / f64::from(2 * m));
    let max_width = PI / (4.0 * r.abs() + 1.0);
    let mut panels = ((cutoff / max_width).ceil() as usize).max(4);
    let rule = GaussLegendre::new(ORACLE_RULE);
    let f = |xi: f64| (-a * xi.powi(two_m) * t).exp() * (xi * r).cos();
    let mut prev = rule.composite(0.0, cutoff, panels, f);
    for _ in 0..ORACLE_MAX_DOUBLINGS {
        panels *= 2;
        let next = rule.composite(0.0, cutoff, panels, f);
        let change = (next - prev).abs();
        if change <= ORACLE_TOL * PI {
            return Ok(next / PI);
        }
        prev = next;
    }
    let change = (rule.composite(0.0, cutoff, panels * 2, f) - prev).abs() / PI;
    Err(HeatKernelError::Quadrature { change, panels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    Spectral,
    FourierOracle,
}

impl KernelMethod {
    pub fn tag(self) -> &'static str {
        match self {
            KernelMethod::Spectral => "spectral",
            KernelMethod::FourierOracle => "fourier-oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
}

/// Kernel values over a set of times and point pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelField {
    pub method: KernelMethod,
    pub samples: Vec<KernelSample>,
}

impl HeatKernelField {
    /// Spectral samples at node pairs `(i, j)` for each time.
    pub fn spectral(sd: &SpectralData, times: &[f64], pairs: &[(usize, usize)]) -> Result<Self, HeatKernelError> {
        let grid = sd.grid();
        let mut samples = Vec::with_capacity(times.len() * pairs.len());
        for &t in times {
            check_time(t)?;
            let e = sd.decay(t);
            for &(i, j) in pairs {
                let value = (0..sd.len()).map(|k| e[k] * sd.vectors[(i, k)] * sd.vectors[(j, k)]).sum();
                samples.push(KernelSample {
                    t,
                    x: grid.node(i),
                    y: grid.node(j),
                    value,
                });
            }
        }
        Ok(Self {
            method: KernelMethod::Spectral,
            samples,
        })
    }

    /// Oracle samples `K₀(t, 0, r)` with `x = 0`, `y = r`.
    pub fn oracle(m: u32, a: f64, times: &[f64], offsets: &[f64]) -> Result<Self, HeatKernelError> {
        let mut samples = Vec::with_capacity(times.len() * offsets.len());
        for &t in times {
            for &r in offsets {
                samples.push(KernelSample {
                    t,
                    x: vec![0.0],
                    y: vec![r],
                    value: fourier_oracle(m, a, t, r)?,
                });
            }
        }
        Ok(Self {
            method: KernelMethod::FourierOracle,
            samples,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

/// On-diagonal constant `c₁ = max |K(t,x,x)|·t^{n/2m}` and the spread
/// `max/min` of the scaled values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnDiagonalBound {
    pub c1: f64,
    pub spread: f64,
    pub samples: usize,
}

pub fn ondiag_bound(field: &HeatKernelField, m: u32, n: usize) -> Result<OnDiagonalBound, HeatKernelError> {
    let p = n as f64 / f64::from(2 * m);
    let scaled: Vec<f64> = field
        .samples
        .iter()
        .filter(|s| s.x == s.y)
        .map(|s| s.value.abs() * s.t.powf(p))
        .collect();
    if scaled.is_empty() {
        return Err(HeatKernelError::Argument("no on-diagonal samples".into()));
    }
    let max = scaled.iter().copied().fold(0.0, f64::max);
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OnDiagonalBound {
        c1: max,
        spread: max / min,
        samples: scaled.len(),
    })
}

/// Largest drift between two kernel sample sets over the same points,
/// relative to the largest magnitude of the first.
pub fn relative_drift(reference: &[f64], other: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    reference
        .iter()
        .zip(other)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::assemble;
    use crate::field::{CoefficientField, DomainSpec};
    use crate::symbol::SymbolSpec;

    fn op(m: u32, lo: f64, hi: f64, n: usize) -> DiscreteOperator {
        let dom = DomainSpec::interval(lo, hi);
        let spec = SymbolSpec::scalar_1d(m, 1.0.into(), dom.clone()).unwrap();
        assemble(&spec, None, None, &Grid::new(&dom, &[n]).unwrap()).unwrap()
    }

    fn heat(t: f64, r: f64) -> f64 {
        (4.0 * PI * t).powf(-0.5) * (-r * r / (4.0 * t)).exp()
    }

    #[test]
    fn dirichlet_modes_are_sines() {
        let o = op(1, 0.0, 1.0, 200);
        let sd = eigendecompose(&o).unwrap();
        let v = sd.vectors().column(1);
        let sign = v[50].signum() * (2.0 * PI * o.grid().coord(0, 50)).sin().signum();
        for i in 0..200 {
            let x = o.grid().coord(0, i);
            let exact = 2f64.sqrt() * (2.0 * PI * x).sin();
            assert!((sign * v[i] - exact).abs() < 1e-3);
        }
        assert!(sd.orthonormality_defect() < 1e-8);
        assert!(sd.max_residual(&o) < 1e-8);
    }

    #[test]
    fn zero_symbol_rejected() {
        let dom = DomainSpec::interval(0.0, 1.0);
        let spec = SymbolSpec::scalar_1d(1, 0.0.into(), dom.clone()).unwrap();
        let v = CoefficientField::parse("1 + x", 1).unwrap();
        let o = assemble(&spec, None, Some(&v), &Grid::new(&dom, &[10]).unwrap()).unwrap();
        assert!(matches!(eigendecompose(&o), Err(HeatKernelError::NotElliptic(_))));
    }

    #[test]
    fn biharmonic_eigenvalues() {
        let sd = eigendecompose(&op(2, 0.0, 1.0, 400)).unwrap();
        for k in 1..=5 {
            let exact = (k as f64 * PI).powi(4);
            assert!((sd.eigenvalues()[k - 1] - exact).abs() < 1e-3 * exact);
        }
        assert!(sd.eigenvalues().as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn large_time_is_ground_state() {
        let o = op(1, 0.0, 1.0, 100);
        let sd = eigendecompose(&o).unwrap();
        let l1 = sd.eigenvalues()[0];
        let t = 50.0 / l1;
        let k = sd.kernel(t, 30, 60).unwrap();
        let lead = (-l1 * t).exp() * sd.vectors()[(30, 0)] * sd.vectors()[(60, 0)];
        assert!((k / lead - 1.0).abs() < 1e-6);
        assert_eq!(sd.kernel(0.1, 30, 60).unwrap(), sd.kernel(0.1, 60, 30).unwrap());
    }

    #[test]
    fn rows_and_matrix_agree() {
        let sd = eigendecompose(&op(2, 0.0, 1.0, 30)).unwrap();
        let km = sd.kernel_matrix(1e-3).unwrap();
        let row = sd.kernel_row(1e-3, 7).unwrap();
        for j in 0..30 {
            assert!((km[(7, j)] - row[j]).abs() < 1e-12 * km.amax());
        }
        assert!((km[(7, 11)] - sd.kernel(1e-3, 7, 11).unwrap()).abs() < 1e-12 * km.amax());
        assert!(sd.kernel(0.0, 1, 1).is_err());
    }

    #[test]
    fn oracle_matches_gaussian() {
        for t in [0.1, 1.0] {
            for r in [0.0, 1.0, 2.0] {
                let k = fourier_oracle(1, 1.0, t, r).unwrap();
                assert!((k - heat(t, r)).abs() < 1e-8, "t={t} r={r}");
            }
        }
    }

    #[test]
    fn oracle_biharmonic_scaling_and_sign_change() {
        let k1 = fourier_oracle(2, 1.0, 0.01, 0.0).unwrap();
        let k16 = fourier_oracle(2, 1.0, 0.16, 0.0).unwrap();
        assert!((k1 / k16 - 2.0).abs() < 1e-8);
        let t: f64 = 0.01;
        let rmax = 6.0 * t.powf(0.25);
        let negative = (1..=200).any(|i| fourier_oracle(2, 1.0, t, rmax * i as f64 / 200.0).unwrap() < 0.0);
        assert!(negative);
    }

    #[test]
    fn ondiag_constant_for_oracles() {
        let ts = [1e-3, 1e-2, 1e-1];
        let f1 = HeatKernelField::oracle(1, 1.0, &ts, &[0.0]).unwrap();
        let b = ondiag_bound(&f1, 1, 1).unwrap();
        assert!((b.c1 - (4.0 * PI).powf(-0.5)).abs() < 1e-8);
        assert!(b.spread - 1.0 < 1e-8);
        let f2 = HeatKernelField::oracle(2, 1.0, &ts, &[0.0]).unwrap();
        assert!(ondiag_bound(&f2, 2, 1).unwrap().spread - 1.0 < 1e-8);
    }

    #[test]
    fn ondiag_dirichlet_midpoint() {
        let o = op(1, 0.0, 1.0, 199);
        let sd = eigendecompose(&o).unwrap();
        let mid = 99;
        let ts: Vec<f64> = (0..9).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
        let f = HeatKernelField::spectral(&sd, &ts, &[(mid, mid)]).unwrap();
        assert!(ondiag_bound(&f, 1, 1).unwrap().spread <= 2.0);
    }

    #[test]
    fn semigroup_and_trace() {
        let sd = eigendecompose(&op(2, -1.0, 1.0, 60)).unwrap();
        for (t, s) in [(0.1, 0.1), (1e-3, 1e-3)] {
            let d = semigroup_check(&sd, t, s).unwrap();
            assert!(d.defect <= 1e-8 * d.max_abs_kernel, "{d:?}");
        }
        assert!(semigroup_check(&sd, 0.0, 0.1).is_err());
        let (lhs, rhs) = sd.trace(1e-3).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn heat_positivity_second_order() {
        let sd = eigendecompose(&op(1, 0.0, 1.0, 80)).unwrap();
        for t in [1e-4, 1e-2, 1.0] {
            assert!(sd.kernel_matrix(t).unwrap().min() >= -1e-12);
        }
    }
}
