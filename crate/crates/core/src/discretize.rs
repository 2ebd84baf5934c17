//! Form-based finite-difference discretization of `Q(u) = Q₀(u) + ∫V|u|²`
//! on uniform grids with Dirichlet truncation.
//!
//! Each term `a_{αβ} D^α u D^β u` is assembled as `(D^α)ᵀ diag(a) D^β · hⁿ`.
//! Per axis, a pair whose derivative counts are both even is evaluated at
//! the grid nodes using powers of the second difference; otherwise the pair
//! lives on the staggered half-points, where odd counts use the forward
//! difference and even counts are averaged onto the half-points. The pair
//! `(β, α)` is then exactly the transpose of `(α, β)`, and for `m = 1` the
//! form is the usual three-point Laplacian.
//!
//! [`difference_operator`] exposes the node-centred `D^α` (central first
//! differences, effective spacing `2h`), used for derivative checks.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{CoefficientField, DomainSpec, FieldError};
use crate::linalg;
use crate::sparse::CsrMatrix;
use crate::symbol::{self, MultiIndex, SymbolError, SymbolSpec};

/// Potential samples with `|V| ≥ CLIP` are clipped and reported.
pub const POTENTIAL_CLIP: f64 = 1e12;

/// Directions per point when sampling ellipticity during assembly.
pub const ELLIPTICITY_DIRECTIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscretizeError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("stencil of order {order} does not fit {points} interior points (need >= {need})")]
    StencilTooWide { order: u32, points: usize, need: usize },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("potential: {0}")]
    Potential(FieldError),
    #[error("lower-order coefficient a{alpha}{beta}: {source}")]
    LowerOrder {
        alpha: MultiIndex,
        beta: MultiIndex,
        source: FieldError,
    },
    #[error("{0}")]
    Precondition(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

/// Uniform grid of interior points; `h_k = (hi_k − lo_k)/(N_k + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    points: Vec<usize>,
    h: Vec<f64>,
}

impl Grid {
    pub fn new(domain: &DomainSpec, points: &[usize]) -> Result<Self, DiscretizeError> {
        let n = domain.dim();
        if !(1..=2).contains(&n) {
            return Err(DiscretizeError::Grid(format!("dimension {n} unsupported (1 or 2)")));
        }
        let points: Vec<usize> = match points.len() {
            1 => vec![points[0]; n],
            k if k == n => points.to_vec(),
            k => return Err(DiscretizeError::Grid(format!("{k} point counts for dimension {n}"))),
        };
        if points.iter().any(|&p| p < 1) {
            return Err(DiscretizeError::Grid("need at least one interior point per axis".into()));
        }
        let h = (0..n)
            .map(|k| (domain.hi[k] - domain.lo[k]) / (points[k] + 1) as f64)
            .collect();
        Ok(Self {
            lo: domain.lo.clone(),
            hi: domain.hi.clone(),
            points,
            h,
        })
    }

    pub fn uniform_1d(lo: f64, hi: f64, points: usize) -> Result<Self, DiscretizeError> {
        Self::new(&DomainSpec::new(vec![lo], vec![hi]).map_err(|e| DiscretizeError::Grid(e.to_string()))?, &[points])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn domain(&self) -> DomainSpec {
        DomainSpec {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
        }
    }

    /// Total number of unknowns.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight `Π h_k`.
    pub fn weight(&self) -> f64 {
        self.h.iter().product()
    }

    /// Coordinate of interior index `i` (zero-based) on axis `k`.
    pub fn coord(&self, k: usize, i: usize) -> f64 {
        self.lo[k] + (i as f64 + 1.0) * self.h[k]
    }

    /// Coordinate of staggered index `s ∈ 0..=N` (between nodes `s−1`, `s`).
    pub fn half_coord(&self, k: usize, s: usize) -> f64 {
        self.lo[k] + (s as f64 + 0.5) * self.h[k]
    }

    /// Per-axis indices of flat index `flat` (axis 0 slowest).
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.points[k];
            flat /= self.points[k];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.points).fold(0, |acc, (&i, &p)| acc * p + i)
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.coord(k, i))
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|f| self.node(f)).collect()
    }

    /// Flat index of the node closest to `x`.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = (0..self.dim())
            .map(|k| {
                let s = (x[k] - self.lo[k]) / self.h[k] - 1.0;
                s.round().clamp(0.0, (self.points[k] - 1) as f64) as usize
            })
            .collect();
        self.flatten(&idx)
    }

    /// Sample a field at every node.
    pub fn sample(&self, field: &CoefficientField) -> Result<DVector<f64>, FieldError> {
        let mut v = DVector::zeros(self.len());
        for f in 0..self.len() {
            v[f] = field.eval(&self.node(f))?;
        }
        Ok(v)
    }

    fn check_fits(&self, order: u32) -> Result<(), DiscretizeError> {
        let need = 2 * order as usize + 1;
        for &p in &self.points {
            if p < need {
                return Err(DiscretizeError::StencilTooWide { order, points: p, need });
            }
        }
        Ok(())
    }
}

/// Stencil as coefficients over consecutive offsets starting at `start`.
#[derive(Debug, Clone, PartialEq)]
struct Stencil {
    start: i64,
    coeffs: Vec<f64>,
}

impl Stencil {
    fn convolve(&self, other: &Stencil) -> Stencil {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Stencil {
            start: self.start + other.start,
            coeffs,
        }
    }

    fn scale(mut self, s: f64) -> Stencil {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
        self
    }
}

fn second_difference_power(j: u32, h: f64) -> Stencil {
    let base = Stencil {
        start: -1,
        coeffs: vec![1.0, -2.0, 1.0],
    };
    let mut s = Stencil {
        start: 0,
        coeffs: vec![1.0],
    };
    for _ in 0..j {
        s = s.convolve(&base);
    }
    s.scale(h.powi(-2 * j as i32))
}

/// Where a 1D factor is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Placement {
    /// Rows at interior nodes, N rows.
    Node,
    /// Rows at half-points, N+1 rows; offset −1 refers to the node left of
    /// the half-point.
    Half,
}

fn axis_stencil(count: u32, placement: Placement, centred_odd: bool, h: f64) -> Stencil {
    let even = second_difference_power(count / 2, h);
    match (placement, count % 2 == 1) {
        (Placement::Node, false) => even,
        (Placement::Node, true) => {
            debug_assert!(centred_odd);
            let c = Stencil {
                start: -1,
                coeffs: vec![-0.5 / h, 0.0, 0.5 / h],
            };
            c.convolve(&even)
        }
        (Placement::Half, true) => {
            let f = Stencil {
                start: -1,
                coeffs: vec![-1.0 / h, 1.0 / h],
            };
            f.convolve(&even)
        }
        (Placement::Half, false) => {
            let p = Stencil {
                start: -1,
                coeffs: vec![0.5, 0.5],
            };
            p.convolve(&even)
        }
    }
}

/// 1D matrix of a stencil with exterior values set to zero.
fn axis_matrix(stencil: &Stencil, placement: Placement, n: usize) -> CsrMatrix {
    let rows = match placement {
        Placement::Node => n,
        Placement::Half => n + 1,
    };
    let mut trip = Vec::new();
    for r in 0..rows {
        for (k, &c) in stencil.coeffs.iter().enumerate() {
            let col = r as i64 + stencil.start + k as i64;
            if col >= 0 && (col as usize) < n && c != 0.0 {
                trip.push((r, col as usize, c));
            }
        }
    }
    CsrMatrix::from_triplets(rows, n, trip)
}

fn tensor(factors: &[CsrMatrix]) -> CsrMatrix {
    let mut it = factors.iter();
    let first = it.next().expect("at least one axis").clone();
    it.fold(first, |acc, f| acc.kron(f))
}

/// Node-centred `D^α`: powers of the second difference for even counts,
/// central first difference composed with them for odd counts.
pub fn difference_operator(grid: &Grid, alpha: &MultiIndex) -> Result<CsrMatrix, DiscretizeError> {
    if alpha.dim() != grid.dim() {
        return Err(DiscretizeError::Grid("multi-index dimension differs from grid".into()));
    }
    for (k, &c) in alpha.entries().iter().enumerate() {
        let need = c as usize + 1;
        if grid.points[k] < need {
            return Err(DiscretizeError::StencilTooWide {
                order: c,
                points: grid.points[k],
                need,
            });
        }
    }
    let factors: Vec<CsrMatrix> = alpha
        .entries()
        .iter()
        .enumerate()
        .map(|(k, &c)| axis_matrix(&axis_stencil(c, Placement::Node, true, grid.h[k]), Placement::Node, grid.points[k]))
        .collect();
    Ok(tensor(&factors))
}

/// Paired operators for the term `a_{αβ} D^α u D^β u` together with the
/// coordinates of their common rows.
fn form_pair(grid: &Grid, alpha: &MultiIndex, beta: &MultiIndex) -> (CsrMatrix, CsrMatrix, Vec<Vec<f64>>) {
    let n = grid.dim();
    let mut fa = Vec::with_capacity(n);
    let mut fb = Vec::with_capacity(n);
    let mut axis_coords: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let (ca, cb) = (alpha.entries()[k], beta.entries()[k]);
        let placement = if ca % 2 == 0 && cb % 2 == 0 {
            Placement::Node
        } else {
            Placement::Half
        };
        let h = grid.h[k];
        fa.push(axis_matrix(&axis_stencil(ca, placement, false, h), placement, grid.points[k]));
        fb.push(axis_matrix(&axis_stencil(cb, placement, false, h), placement, grid.points[k]));
        axis_coords.push(match placement {
            Placement::Node => (0..grid.points[k]).map(|i| grid.coord(k, i)).collect(),
            Placement::Half => (0..=grid.points[k]).map(|s| grid.half_coord(k, s)).collect(),
        });
    }
    let da = tensor(&fa);
    let db = tensor(&fb);
    let rows = da.rows();
    let mut coords = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut rem = r;
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let len = axis_coords[k].len();
            x[k] = axis_coords[k][rem % len];
            rem /= len;
        }
        coords.push(x);
    }
    (da, db, coords)
}

/// Accumulate `(Dα)ᵀ diag(coef) Dβ · w` into `form`.
fn accumulate(form: &mut DMatrix<f64>, da: &CsrMatrix, db: &CsrMatrix, coef: &[f64], w: f64) {
    for (r, &c) in coef.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let s = c * w;
        for (i, va) in da.row(r) {
            for (j, vb) in db.row(r) {
                form[(i, j)] += va * s * vb;
            }
        }
    }
}

/// Symmetric lower-order coefficients `a_{αβ}` with `|α|, |β| ≤ m`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LowerOrderTerms {
    terms: BTreeMap<(MultiIndex, MultiIndex), CoefficientField>,
}

impl LowerOrderTerms {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, alpha: MultiIndex, beta: MultiIndex, field: CoefficientField) {
        if alpha != beta {
            self.terms.insert((beta.clone(), alpha.clone()), field.clone());
        }
        self.terms.insert((alpha, beta), field);
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// The discretized form of `H`; `form` already contains `diag(V)·hⁿ`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Grid,
    m: u32,
    form: DMatrix<f64>,
    potential: Option<DVector<f64>>,
    ellipticity: f64,
    symmetry_defect: f64,
    provenance: String,
    warnings: Vec<String>,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.grid.dim()
    }

    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn weight(&self) -> f64 {
        self.grid.weight()
    }

    /// Matrix of `H` acting on nodal values: `form / hⁿ`.
    pub fn operator_matrix(&self) -> DMatrix<f64> {
        &self.form / self.weight()
    }

    pub fn potential(&self) -> Option<&DVector<f64>> {
        self.potential.as_ref()
    }

    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Symmetry defect `max|M − Mᵀ| / max|M|` measured before symmetrization.
    pub fn symmetry_defect(&self) -> f64 {
        self.symmetry_defect
    }

    /// `Q(u) = uᵀ form u`.
    pub fn quadratic_form(&self, u: &DVector<f64>) -> f64 {
        u.dot(&(&self.form * u))
    }

    /// `‖u‖² = hⁿ Σ u_i²`.
    pub fn l2_norm_sq(&self, u: &DVector<f64>) -> f64 {
        self.weight() * u.norm_squared()
    }

    /// Same operator with `diag(v)·hⁿ` added to the form.
    pub fn with_added_potential(&self, v: &DVector<f64>) -> DiscreteOperator {
        let w = self.weight();
        let mut out = self.clone();
        for i in 0..v.len() {
            out.form[(i, i)] += v[i] * w;
        }
        out.potential = Some(match &self.potential {
            Some(p) => p + v,
            None => v.clone(),
        });
        out
    }

    pub fn summary(&self) -> OperatorSummary {
        let (lo, hi) = linalg::gershgorin_bounds(&self.operator_matrix());
        OperatorSummary {
            dim: self.grid.dim(),
            points: self.grid.points.clone(),
            spacing: self.grid.h.clone(),
            m: self.m,
            unknowns: self.grid.len(),
            symmetry_defect: self.symmetry_defect,
            gershgorin_low: lo,
            gershgorin_high: hi,
            provenance: self.provenance.clone(),
        }
    }
}

/// Text manifest of a discretization.
#[derive(Debug, Clone)]
pub struct OperatorSummary {
    pub dim: usize,
    pub points: Vec<usize>,
    pub spacing: Vec<f64>,
    pub m: u32,
    pub unknowns: usize,
    pub symmetry_defect: f64,
    pub gershgorin_low: f64,
    pub gershgorin_high: f64,
    pub provenance: String,
}

impl fmt::Display for OperatorSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dimension = {}", self.dim)?;
        writeln!(f, "order = {}", 2 * self.m)?;
        writeln!(f, "points = {:?}", self.points)?;
        writeln!(f, "spacing = {:?}", self.spacing)?;
        writeln!(f, "unknowns = {}", self.unknowns)?;
        writeln!(f, "symmetry_defect = {:e}", self.symmetry_defect)?;
        writeln!(f, "eigenvalue_lower_estimate = {:e}", self.gershgorin_low)?;
        writeln!(f, "eigenvalue_upper_estimate = {:e}", self.gershgorin_high)?;
        writeln!(f, "coefficients = {}", self.provenance)
    }
}

/// Assemble the form matrix of `H = H₀ + V` on `grid`.
pub fn assemble(
    spec: &SymbolSpec,
    lower_order: Option<&LowerOrderTerms>,
    potential: Option<&CoefficientField>,
    grid: &Grid,
) -> Result<DiscreteOperator, DiscretizeError> {
    if spec.n() != grid.dim() {
        return Err(DiscretizeError::Grid(format!(
            "symbol has dimension {}, grid {}",
            spec.n(),
            grid.dim()
        )));
    }
    let m = spec.m();
    grid.check_fits(m)?;
    let size = grid.len();
    let w = grid.weight();
    let mut form = DMatrix::zeros(size, size);
    let mut provenance = Vec::new();

    for (alpha, beta, field) in spec.coefficients() {
        let (da, db, coords) = form_pair(grid, alpha, beta);
        let coef = coords
            .iter()
            .map(|x| field.eval(x))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|source| {
                DiscretizeError::Symbol(SymbolError::Field {
                    alpha: alpha.clone(),
                    beta: beta.clone(),
                    source,
                })
            })?;
        accumulate(&mut form, &da, &db, &coef, w);
        provenance.push(format!("a{alpha}{beta}={}", field.describe()));
    }

    if let Some(lower) = lower_order {
        for ((alpha, beta), field) in &lower.terms {
            if alpha.dim() != grid.dim() || alpha.order() > m || beta.order() > m {
                return Err(DiscretizeError::Precondition(format!(
                    "lower-order index pair {alpha}{beta} invalid for m = {m}"
                )));
            }
            let (da, db, coords) = form_pair(grid, alpha, beta);
            let coef = coords
                .iter()
                .map(|x| field.eval(x))
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|source| DiscretizeError::LowerOrder {
                    alpha: alpha.clone(),
                    beta: beta.clone(),
                    source,
                })?;
            accumulate(&mut form, &da, &db, &coef, w);
            provenance.push(format!("a{alpha}{beta}={}", field.describe()));
        }
    }

    let symmetry_defect = {
        let scale = form.amax().max(f64::MIN_POSITIVE);
        (&form - form.transpose()).amax() / scale
    };
    let form = (&form + form.transpose()) * 0.5;

    let nodes = grid.nodes();
    let ellipticity = symbol::ellipticity_constant(spec, &nodes, ELLIPTICITY_DIRECTIONS)?;

    let mut op = DiscreteOperator {
        grid: grid.clone(),
        m,
        form,
        potential: None,
        ellipticity,
        symmetry_defect,
        provenance: provenance.join("; "),
        warnings: Vec::new(),
    };
    if let Some(vfield) = potential {
        let (v, warnings) = sample_potential(grid, vfield)?;
        op = op.with_added_potential(&v);
        op.warnings = warnings;
        op.provenance.push_str(&format!("; V={}", vfield.describe()));
    }
    Ok(op)
}

/// Sample `V` at the nodes, clipping `|V| ≥ POTENTIAL_CLIP`.
pub fn sample_potential(grid: &Grid, field: &CoefficientField) -> Result<(DVector<f64>, Vec<String>), DiscretizeError> {
    let mut v = grid.sample(field).map_err(DiscretizeError::Potential)?;
    let mut warnings = Vec::new();
    for i in 0..v.len() {
        if v[i].abs() >= POTENTIAL_CLIP {
            let msg = format!(
                "potential sample {:e} at {:?} clipped to ±{POTENTIAL_CLIP:e}",
                v[i],
                grid.node(i)
            );
            log::warn!("{msg}");
            warnings.push(msg);
            v[i] = v[i].signum() * POTENTIAL_CLIP;
        }
    }
    Ok((v, warnings))
}

#[derive(Debug, Clone)]
pub struct GardingReport {
    pub c1: f64,
    pub c2: f64,
    pub ellipticity: f64,
    pub notes: String,
}

/// Discrete H^m Gram matrix (seminorm `Σ C(m,μ)|D^μ u|²` plus L² part).
pub fn sobolev_gram(grid: &Grid, m: u32) -> Result<DMatrix<f64>, DiscretizeError> {
    let spec = SymbolSpec::laplacian_power(m, 1.0.into(), grid.domain())?;
    let op = assemble(&spec, None, None, grid)?;
    let mut g = op.form;
    let w = grid.weight();
    for i in 0..g.nrows() {
        g[(i, i)] += w;
    }
    Ok(g)
}

/// Gårding constants with the trial choice `c₁ = ½·ellipticity` and
/// `c₂ = max(0, −λ_min(Q₀ − c₁S_m)/hⁿ)`.
pub fn garding_check(op: &DiscreteOperator) -> Result<GardingReport, DiscretizeError> {
    if op.potential.is_some() {
        return Err(DiscretizeError::Precondition("garding_check needs an operator without potential".into()));
    }
    if op.ellipticity <= 0.0 {
        return Err(DiscretizeError::Precondition(format!(
            "symbol not elliptic (sampled constant {})",
            op.ellipticity
        )));
    }
    let c1 = 0.5 * op.ellipticity;
    let gram = sobolev_gram(&op.grid, op.m)?;
    let diff = &op.form - gram * c1;
    let lmin = linalg::min_eigenvalue(&diff).map_err(DiscretizeError::Eigen)?;
    let c2 = (-lmin / op.weight()).max(0.0);
    Ok(GardingReport {
        c1,
        c2,
        ellipticity: op.ellipticity,
        notes: format!(
            "c1 = ellipticity/2 with ellipticity sampled at {} nodes x {} directions; c2 from the smallest eigenvalue of Q0 - c1*S_m",
            op.grid.len(),
            ELLIPTICITY_DIRECTIONS
        ),
    })
}

/// `‖u‖_∞ / ((Q₀(u) + ‖u‖²)^{n/4m} ‖u‖^{1−n/2m})`.
pub fn sobolev_quotient(op: &DiscreteOperator, u: &DVector<f64>) -> f64 {
    let n = op.n() as f64;
    let m = f64::from(op.m);
    let q = op.quadratic_form(u);
    let l2 = op.l2_norm_sq(u);
    let sup = u.amax();
    sup / ((q + l2).powf(n / (4.0 * m)) * l2.sqrt().powf(1.0 - n / (2.0 * m)))
}

/// Largest Sobolev quotient over seeded random smooth trial functions
/// (low-frequency sine series and Gaussian bumps). The trial functions are
/// defined on the continuum, so the value is comparable across resolutions.
pub fn sobolev_ratio(op: &DiscreteOperator, trials: usize, seed: u64) -> Result<f64, DiscretizeError> {
    if 2 * op.m as usize <= op.n() {
        return Err(DiscretizeError::Precondition("sobolev_ratio needs 2m > n".into()));
    }
    if op.potential.is_some() {
        return Err(DiscretizeError::Precondition("sobolev_ratio needs an operator without potential".into()));
    }
    let grid = &op.grid;
    let nodes = grid.nodes();
    let n = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for trial in 0..trials {
        let u: DVector<f64> = if trial % 2 == 0 {
            let terms: Vec<(Vec<u32>, f64)> = (0..6)
                .map(|_| {
                    let k: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
                    let norm: f64 = k.iter().map(|&v| f64::from(v * v)).sum::<f64>().sqrt();
                    (k, rng.gen_range(-1.0..1.0) / norm.powi(op.m as i32 + 1))
                })
                .collect();
            DVector::from_iterator(
                nodes.len(),
                nodes.iter().map(|x| {
                    terms
                        .iter()
                        .map(|(k, c)| {
                            c * (0..n)
                                .map(|a| {
                                    let s = (x[a] - grid.lo[a]) / (grid.hi[a] - grid.lo[a]);
                                    (f64::from(k[a]) * std::f64::consts::PI * s).sin()
                                })
                                .product::<f64>()
                        })
                        .sum()
                }),
            )
        } else {
            let centre: Vec<f64> = (0..n)
                .map(|a| grid.lo[a] + rng.gen_range(0.2..0.8) * (grid.hi[a] - grid.lo[a]))
                .collect();
            let width = rng.gen_range(0.03..0.3) * (grid.hi[0] - grid.lo[0]);
            DVector::from_iterator(
                nodes.len(),
                nodes.iter().map(|x| {
                    let r2: f64 = x.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum();
                    (-r2 / (2.0 * width * width)).exp()
                }),
            )
        };
        if u.amax() > 0.0 {
            best = best.max(sobolev_quotient(op, &u));
        }
    }
    Ok(best)
}
