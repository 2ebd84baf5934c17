//! Principal symbols `A(x, ξ) = Σ a_{αβ}(x) ξ^{α+β}` of order `2m`, the
//! sharp constants `σ_m` and `k_m`, the `a_γ` coefficients and the
//! strong-convexity matrix.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::field::{CoefficientField, DomainSpec, FieldError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        assert!(!entries.is_empty(), "multi-index needs dimension >= 1");
        MultiIndex(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `k`-th unit index scaled by `c`.
    pub fn axis(n: usize, k: usize, c: u32) -> Self {
        let mut e = vec![0; n];
        e[k] = c;
        MultiIndex(e)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `ξ^α`.
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.0.iter().zip(xi).map(|(&a, &x)| x.powi(a as i32)).product()
    }

    /// `|α|! / (α_1! ⋯ α_n!)`.
    pub fn multinomial(&self) -> f64 {
        let mut c = factorial(self.order());
        for &a in &self.0 {
            c /= factorial(a);
        }
        c
    }

    /// All indices of the given order in `n` variables, lexicographically
    /// descending: `(2,0), (1,1), (0,2)` for `n = 2`, order 2.
    pub fn enumerate(n: usize, order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fill(&mut cur, 0, order, &mut out);
        out
    }
}

fn fill(cur: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        fill(cur, pos + 1, remaining - v, out);
    }
    cur[pos] = 0;
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolError {
    #[error("coefficient a{alpha}{beta}: {source}")]
    Field {
        alpha: MultiIndex,
        beta: MultiIndex,
        source: FieldError,
    },
    #[error("invalid symbol: {0}")]
    Invalid(String),
}

/// Principal coefficient matrix `{a_{αβ}}` with `|α| = |β| = m`. Storage is
/// kept symmetric: setting `(α, β)` also sets `(β, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSpec {
    m: u32,
    n: usize,
    coefficients: BTreeMap<(MultiIndex, MultiIndex), CoefficientField>,
    domain: DomainSpec,
}

impl SymbolSpec {
    pub fn new(m: u32, domain: DomainSpec) -> Result<Self, SymbolError> {
        if m == 0 {
            return Err(SymbolError::Invalid("half-order m must be >= 1".into()));
        }
        let n = domain.dim();
        Ok(Self {
            m,
            n,
            coefficients: BTreeMap::new(),
            domain,
        })
    }

    pub fn set(&mut self, alpha: MultiIndex, beta: MultiIndex, field: CoefficientField) -> Result<(), SymbolError> {
        for idx in [&alpha, &beta] {
            if idx.dim() != self.n || idx.order() != self.m {
                return Err(SymbolError::Invalid(format!(
                    "index {idx} is not of order {} in {} variables",
                    self.m, self.n
                )));
            }
        }
        if alpha != beta {
            self.coefficients.insert((beta.clone(), alpha.clone()), field.clone());
        }
        self.coefficients.insert((alpha, beta), field);
        Ok(())
    }

    /// `A(x, ξ) = a(x) ξ^{2m}` on an interval.
    pub fn scalar_1d(m: u32, a: CoefficientField, domain: DomainSpec) -> Result<Self, SymbolError> {
        if domain.dim() != 1 {
            return Err(SymbolError::Invalid("scalar_1d needs a one-dimensional domain".into()));
        }
        let mut s = Self::new(m, domain)?;
        let idx = MultiIndex::new(vec![m]);
        s.set(idx.clone(), idx, a)?;
        Ok(s)
    }

    /// `A(x, ξ) = a(x) |ξ|^{2m}`, realized as `Σ_{|μ|=m} C(m, μ) a |D^μ u|²`.
    pub fn laplacian_power(m: u32, a: CoefficientField, domain: DomainSpec) -> Result<Self, SymbolError> {
        let mut s = Self::new(m, domain)?;
        for mu in MultiIndex::enumerate(s.n, m) {
            let c = mu.multinomial();
            let field = if c == 1.0 { a.clone() } else { scaled(&a, c) };
            s.set(mu.clone(), mu, field)?;
        }
        Ok(s)
    }

    /// `A(ξ) = Σ_k w_k ξ_k^{2m}` (constant coefficients, no cross terms).
    pub fn separable(m: u32, weights: &[f64], domain: DomainSpec) -> Result<Self, SymbolError> {
        if weights.len() != domain.dim() {
            return Err(SymbolError::Invalid("one weight per axis required".into()));
        }
        let n = domain.dim();
        let mut s = Self::new(m, domain)?;
        for (k, &w) in weights.iter().enumerate() {
            let idx = MultiIndex::axis(n, k, m);
            s.set(idx.clone(), idx, CoefficientField::Constant(w))?;
        }
        Ok(s)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, &CoefficientField)> {
        self.coefficients.iter().map(|((a, b), f)| (a, b, f))
    }

    pub fn has_constant_coefficients(&self) -> bool {
        self.coefficients.values().all(CoefficientField::is_constant)
    }

    /// Values of every stored `a_{αβ}` at `x`.
    pub fn coefficients_at(&self, x: &[f64]) -> Result<Vec<(&MultiIndex, &MultiIndex, f64)>, SymbolError> {
        self.coefficients
            .iter()
            .map(|((a, b), f)| {
                f.eval(x)
                    .map(|v| (a, b, v))
                    .map_err(|source| SymbolError::Field {
                        alpha: a.clone(),
                        beta: b.clone(),
                        source,
                    })
            })
            .collect()
    }

    /// One-dimensional leading coefficient `a(x) = A(x, 1)`.
    pub fn leading_1d(&self, x: f64) -> Result<f64, SymbolError> {
        eval_symbol(self, &[x], &[1.0])
    }
}

fn scaled(field: &CoefficientField, c: f64) -> CoefficientField {
    match field {
        CoefficientField::Constant(v) => CoefficientField::Constant(c * v),
        CoefficientField::Expr { source, expr } => {
            let e = crate::expr::Expr::Binary(
                crate::expr::BinOp::Mul,
                Box::new(crate::expr::Expr::Num(c)),
                Box::new(expr.clone()),
            );
            CoefficientField::Expr {
                source: format!("{c}*({source})"),
                expr: e,
            }
        }
        CoefficientField::Tabulated(t) => CoefficientField::Tabulated(t.scaled(c)),
    }
}

/// `A(x, ξ)`.
pub fn eval_symbol(spec: &SymbolSpec, x: &[f64], xi: &[f64]) -> Result<f64, SymbolError> {
    let mut acc = 0.0;
    for (a, b, v) in spec.coefficients_at(x)? {
        acc += v * a.add(b).monomial(xi);
    }
    Ok(acc)
}

/// `a_γ(x)` for every `|γ| = 2m`, defined by `A = Σ C(2m, γ) a_γ ξ^γ`.
pub fn gamma_coefficients(spec: &SymbolSpec, x: &[f64]) -> Result<BTreeMap<MultiIndex, f64>, SymbolError> {
    let mut out: BTreeMap<MultiIndex, f64> = MultiIndex::enumerate(spec.n, 2 * spec.m)
        .into_iter()
        .map(|g| (g, 0.0))
        .collect();
    for (a, b, v) in spec.coefficients_at(x)? {
        *out.get_mut(&a.add(b)).expect("order 2m index") += v;
    }
    for (g, v) in out.iter_mut() {
        *v /= g.multinomial();
    }
    Ok(out)
}

/// The matrix `(a_{α+β}(x))` over `|α| = |β| = m`.
#[derive(Debug, Clone)]
pub struct GammaForm {
    pub x: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub index_order: Vec<MultiIndex>,
}

pub fn gamma_form(spec: &SymbolSpec, x: &[f64]) -> Result<GammaForm, SymbolError> {
    let coeffs = gamma_coefficients(spec, x)?;
    let order = MultiIndex::enumerate(spec.n, spec.m);
    let k = order.len();
    let matrix = DMatrix::from_fn(k, k, |i, j| coeffs[&order[i].add(&order[j])]);
    Ok(GammaForm {
        x: x.to_vec(),
        matrix,
        index_order: order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    StronglyConvex,
    NotStronglyConvex,
    /// Eigen-solver did not converge at some point; never reported as false.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct ConvexityReport {
    pub verdict: Convexity,
    pub worst_eigenvalue: f64,
    pub witness: Vec<f64>,
    /// `(point, smallest eigenvalue)`; `None` where the solver failed.
    pub per_point: Vec<(Vec<f64>, Option<f64>)>,
}

impl ConvexityReport {
    pub fn is_convex(&self) -> bool {
        self.verdict == Convexity::StronglyConvex
    }
}

pub const DEFAULT_PSD_TOL: f64 = 1e-10;

pub fn is_strongly_convex(spec: &SymbolSpec, points: &[Vec<f64>], tol: f64) -> Result<ConvexityReport, SymbolError> {
    if tol < 0.0 || points.is_empty() {
        return Err(SymbolError::Invalid("need tol >= 0 and at least one sample point".into()));
    }
    let mut worst = f64::INFINITY;
    let mut witness = points[0].clone();
    let mut failed_threshold = false;
    let mut inconclusive = false;
    let mut per_point = Vec::with_capacity(points.len());
    for x in points {
        let g = gamma_form(spec, x)?;
        let scale = g.matrix.amax();
        match SymmetricEigen::try_new(g.matrix, 1e-14, 10_000) {
            Some(eig) => {
                let min = eig.eigenvalues.min();
                if min < worst {
                    worst = min;
                    witness = x.clone();
                }
                if min < -tol * (1.0 + scale) {
                    failed_threshold = true;
                }
                per_point.push((x.clone(), Some(min)));
            }
            None => {
                inconclusive = true;
                per_point.push((x.clone(), None));
            }
        }
    }
    let verdict = if failed_threshold {
        Convexity::NotStronglyConvex
    } else if inconclusive {
        Convexity::Inconclusive
    } else {
        Convexity::StronglyConvex
    };
    Ok(ConvexityReport {
        verdict,
        worst_eigenvalue: worst,
        witness,
        per_point,
    })
}

/// `σ_m` and `k_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpConstants {
    pub m: u32,
    pub sigma_m: f64,
    pub k_m: f64,
}

/// `sin(π/(4m−2))`, exact where the value is rational.
fn sharp_sine(m: u32) -> f64 {
    match m {
        1 => 1.0,
        2 => 0.5,
        _ => (PI / (4.0 * f64::from(m) - 2.0)).sin(),
    }
}

pub fn sharp_constants(m: u32) -> SharpConstants {
    assert!(m >= 1, "m must be >= 1");
    let mf = f64::from(m);
    let s = sharp_sine(m);
    let sigma_m = (2.0 * mf - 1.0) * (2.0 * mf).powf(-2.0 * mf / (2.0 * mf - 1.0)) * s;
    let k_m = s.powf(1.0 - 2.0 * mf);
    SharpConstants { m, sigma_m, k_m }
}

impl SharpConstants {
    /// Gaussian constant obtained from a growth law `k(λ) = κ λ^{2m}`:
    /// `inf_λ (−λd + κλ^{2m}t) = −σ(κ) d^{2m/(2m−1)} t^{−1/(2m−1)}`.
    pub fn sigma_for_growth(&self, kappa: f64) -> f64 {
        sigma_for_growth(self.m, kappa)
    }
}

pub fn sigma_for_growth(m: u32, kappa: f64) -> f64 {
    let mf = f64::from(m);
    (2.0 * mf - 1.0) * (2.0 * mf).powf(-2.0 * mf / (2.0 * mf - 1.0)) * kappa.powf(-1.0 / (2.0 * mf - 1.0))
}

/// `d^{2m/(2m−1)} t^{−1/(2m−1)}`, the Gaussian scaling variable.
pub fn gaussian_variable(m: u32, d: f64, t: f64) -> f64 {
    let q = 2.0 * f64::from(m) - 1.0;
    d.powf(2.0 * f64::from(m) / q) * t.powf(-1.0 / q)
}

/// Minimizer `λ* = (d / (2m κ t))^{1/(2m−1)}` of `−λd + κλ^{2m}t`.
pub fn optimal_lambda(m: u32, kappa: f64, d: f64, t: f64) -> f64 {
    let mf = f64::from(m);
    (d / (2.0 * mf * kappa * t)).powf(1.0 / (2.0 * mf - 1.0))
}

/// Unit directions: `±1` in 1D, equally spaced angles in 2D, a Fibonacci
/// lattice in 3D.
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count.max(1))
            .map(|k| {
                let th = 2.0 * PI * k as f64 / count.max(1) as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            let c = count.max(2);
            (0..c)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / c as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => {
            // axis directions and diagonals; coarse but dimension-agnostic
            let mut dirs = Vec::new();
            for k in 0..n {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; n];
                    v[k] = s;
                    dirs.push(v);
                }
            }
            dirs.push(vec![1.0 / (n as f64).sqrt(); n]);
            dirs
        }
    }
}

/// Sampled lower estimate of `min A(x, ξ)/|ξ|^{2m}`.
pub fn ellipticity_constant(spec: &SymbolSpec, points: &[Vec<f64>], sphere_samples: usize) -> Result<f64, SymbolError> {
    if sphere_samples == 0 {
        return Err(SymbolError::Invalid("need at least one sphere sample".into()));
    }
    let dirs = sphere_directions(spec.n, sphere_samples);
    let mut best = f64::INFINITY;
    for x in points {
        for xi in &dirs {
            best = best.min(eval_symbol(spec, x, xi)?);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bilaplacian_2d() -> SymbolSpec {
        SymbolSpec::laplacian_power(2, 1.0.into(), DomainSpec::square(0.0, 1.0)).unwrap()
    }

    #[test]
    fn enumerate_order() {
        let idx = MultiIndex::enumerate(2, 2);
        let e: Vec<_> = idx.iter().map(|i| i.entries().to_vec()).collect();
        assert_eq!(e, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(MultiIndex::enumerate(3, 2).len(), 6);
        assert_eq!(MultiIndex::enumerate(1, 3).len(), 1);
    }

    #[test]
    fn eval_symbol_examples() {
        let s = SymbolSpec::scalar_1d(1, 1.0.into(), DomainSpec::interval(-1.0, 1.0)).unwrap();
        assert_eq!(eval_symbol(&s, &[0.0], &[3.0]).unwrap(), 9.0);
        let s = SymbolSpec::scalar_1d(2, 1.0.into(), DomainSpec::interval(-1.0, 1.0)).unwrap();
        assert_eq!(eval_symbol(&s, &[0.0], &[2.0]).unwrap(), 16.0);
        // (ξ1² + ξ2²)² at (1, 1)
        assert_eq!(eval_symbol(&bilaplacian_2d(), &[0.5, 0.5], &[1.0, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn gamma_coefficients_bilaplacian() {
        let g = gamma_coefficients(&bilaplacian_2d(), &[0.5, 0.5]).unwrap();
        let at = |a, b| g[&MultiIndex::new(vec![a, b])];
        assert!((at(4, 0) - 1.0).abs() < 1e-15);
        assert!((at(2, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(at(3, 1), 0.0);
        let s = SymbolSpec::scalar_1d(1, 1.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
        assert_eq!(gamma_coefficients(&s, &[0.5]).unwrap()[&MultiIndex::new(vec![2])], 1.0);
    }

    #[test]
    fn gamma_form_bilaplacian() {
        let g = gamma_form(&bilaplacian_2d(), &[0.5, 0.5]).unwrap();
        let third = 1.0 / 3.0;
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, third, 0.0, third, 0.0, third, 0.0, 1.0]);
        assert!((g.matrix - expected).amax() < 1e-15);
        let s = SymbolSpec::scalar_1d(2, 1.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
        assert_eq!(gamma_form(&s, &[0.5]).unwrap().matrix, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn reconstruction_matches_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dom = DomainSpec::square(0.0, 1.0);
        let mut s = SymbolSpec::new(2, dom).unwrap();
        let idx = MultiIndex::enumerate(2, 2);
        s.set(idx[0].clone(), idx[0].clone(), CoefficientField::parse("2 + x1", 2).unwrap()).unwrap();
        s.set(idx[0].clone(), idx[2].clone(), CoefficientField::parse("0.3*sin(x2)", 2).unwrap()).unwrap();
        s.set(idx[1].clone(), idx[1].clone(), 1.5.into()).unwrap();
        s.set(idx[2].clone(), idx[2].clone(), CoefficientField::parse("1 + x1*x2", 2).unwrap()).unwrap();
        for _ in 0..5 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let g = gamma_coefficients(&s, &x).unwrap();
            for _ in 0..100 {
                let xi = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let direct = eval_symbol(&s, &x, &xi).unwrap();
                let rebuilt: f64 = g.iter().map(|(gm, v)| gm.multinomial() * v * gm.monomial(&xi)).sum();
                assert!((direct - rebuilt).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn homogeneity() {
        let s = bilaplacian_2d();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let sc: f64 = rng.gen_range(0.1..5.0);
            let a = eval_symbol(&s, &[0.1, 0.2], &xi).unwrap();
            let b = eval_symbol(&s, &[0.1, 0.2], &[sc * xi[0], sc * xi[1]]).unwrap();
            assert!((b - sc.powi(4) * a).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn strong_convexity_examples() {
        let pts = vec![vec![0.5, 0.5]];
        let r = is_strongly_convex(&bilaplacian_2d(), &pts, DEFAULT_PSD_TOL).unwrap();
        assert!(r.is_convex());
        assert!((r.worst_eigenvalue - 1.0 / 3.0).abs() < 1e-12);

        let s = SymbolSpec::scalar_1d(1, 1.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
        let r = is_strongly_convex(&s, &[vec![0.5]], DEFAULT_PSD_TOL).unwrap();
        assert!(r.is_convex());
        assert!((r.worst_eigenvalue - 1.0).abs() < 1e-15);

        let s = SymbolSpec::separable(2, &[1.0, 1.0], DomainSpec::square(0.0, 1.0)).unwrap();
        let r = is_strongly_convex(&s, &pts, DEFAULT_PSD_TOL).unwrap();
        assert!(r.is_convex());
        assert!(r.worst_eigenvalue.abs() < 1e-15);
    }

    #[test]
    fn non_convex_symbol_detected() {
        // A = ξ1⁴ + ξ2⁴ − c ξ1²ξ2² with a_(2,2) = −c/6 < 0 but still elliptic for small c
        let dom = DomainSpec::square(0.0, 1.0);
        let mut s = SymbolSpec::separable(2, &[1.0, 1.0], dom).unwrap();
        let mid = MultiIndex::new(vec![1, 1]);
        s.set(mid.clone(), mid, (-0.5).into()).unwrap();
        let r = is_strongly_convex(&s, &[vec![0.3, 0.3]], DEFAULT_PSD_TOL).unwrap();
        assert_eq!(r.verdict, Convexity::NotStronglyConvex);
        assert!(ellipticity_constant(&s, &[vec![0.3, 0.3]], 64).unwrap() > 0.0);
    }

    #[test]
    fn sharp_constant_values() {
        let c1 = sharp_constants(1);
        assert_eq!(c1.sigma_m, 0.25);
        assert_eq!(c1.k_m, 1.0);
        let c2 = sharp_constants(2);
        assert_eq!(c2.k_m, 8.0);
        let expected = 3.0 * 4f64.powf(-4.0 / 3.0) * 0.5;
        assert!((c2.sigma_m - expected).abs() < 1e-15);
        assert!((c2.sigma_m - 0.236_235_196_855_288_7).abs() < 1e-15);
        let sigmas: Vec<f64> = (1..=6).map(|m| sharp_constants(m).sigma_m).collect();
        assert!(sigmas.windows(2).all(|w| w[1] < w[0]), "{sigmas:?}");
        for m in 1..=4 {
            let c = sharp_constants(m);
            assert!((c.sigma_for_growth(c.k_m) - c.sigma_m).abs() < 1e-14);
        }
    }

    #[test]
    fn ellipticity_examples() {
        let s = SymbolSpec::scalar_1d(2, 1.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
        assert_eq!(ellipticity_constant(&s, &[vec![0.5]], 1).unwrap(), 1.0);
        let c = ellipticity_constant(&bilaplacian_2d(), &[vec![0.5, 0.5]], 64).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        let s = SymbolSpec::separable(2, &[1.0, 1.0], DomainSpec::square(0.0, 1.0)).unwrap();
        let c = ellipticity_constant(&s, &[vec![0.5, 0.5]], 64).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn set_rejects_wrong_order() {
        let mut s = SymbolSpec::new(2, DomainSpec::interval(0.0, 1.0)).unwrap();
        assert!(s.set(MultiIndex::new(vec![1]), MultiIndex::new(vec![2]), 1.0.into()).is_err());
        assert!(SymbolSpec::new(0, DomainSpec::interval(0.0, 1.0)).is_err());
    }
}
