//! Finsler length element `p(x, η) = sup_ξ ⟨ξ, η⟩ / A(x, ξ)^{1/2m}`, the
//! induced distance and the derivative-constrained distances `d_M`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::discretize::Grid;
use crate::quadrature::simpson;
use crate::symbol::{MultiIndex, SymbolError, SymbolSpec};

/// Unit directions scanned before golden-section refinement.
pub const SCAN_DIRECTIONS: usize = 512;
/// Simpson panels for the 1D distance integral.
pub const SIMPSON_PANELS: usize = 2048;
/// Slope cells used by the `d_M` program.
pub const DM_CELLS: usize = 256;
pub const DM_MAX_ITER: usize = 10_000;
pub const DM_FEASIBILITY_TOL: f64 = 1e-8;
const GOLDEN_ITERS: usize = 80;
/// `A` below this fraction of its maximum over the circle counts as zero.
const DEGENERACY_RATIO: f64 = 1e-12;
const DYKSTRA_SWEEPS: usize = 5000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinslerError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("symbol degenerate at {x:?}: A = {value} in direction {xi:?}")]
    Degenerate { x: Vec<f64>, xi: Vec<f64>, value: f64 },
    #[error("zero direction")]
    ZeroDirection,
    #[error("{0}")]
    Argument(String),
}

/// Principal symbol frozen at one point: `A(ξ) = Σ c_γ ξ^γ`.
#[derive(Debug, Clone)]
struct FrozenSymbol {
    m: u32,
    terms: Vec<(MultiIndex, f64)>,
}

impl FrozenSymbol {
    fn at(spec: &SymbolSpec, x: &[f64]) -> Result<Self, SymbolError> {
        let mut terms: Vec<(MultiIndex, f64)> = Vec::new();
        for (a, b, v) in spec.coefficients_at(x)? {
            let g = a.add(b);
            match terms.iter_mut().find(|(h, _)| *h == g) {
                Some((_, c)) => *c += v,
                None => terms.push((g, v)),
            }
        }
        Ok(Self { m: spec.m(), terms })
    }

    fn eval(&self, xi: &[f64]) -> f64 {
        self.terms.iter().map(|(g, c)| c * g.monomial(xi)).sum()
    }

    /// `⟨ξ, η⟩ / A(ξ)^{1/2m}` with `ξ` at angle `th`.
    fn ratio_2d(&self, th: f64, eta: &[f64]) -> Option<f64> {
        let xi = [th.cos(), th.sin()];
        let a = self.eval(&xi);
        (a > 0.0).then(|| (xi[0] * eta[0] + xi[1] * eta[1]) / a.powf(1.0 / f64::from(2 * self.m)))
    }
}

/// `p(x, η)` for a symbol specification.
#[derive(Debug, Clone)]
pub struct LengthElement<'a> {
    spec: &'a SymbolSpec,
}

impl<'a> LengthElement<'a> {
    pub fn new(spec: &'a SymbolSpec) -> Self {
        Self { spec }
    }

    pub fn eval(&self, x: &[f64], eta: &[f64]) -> Result<f64, FinslerError> {
        length_element(self.spec, x, eta)
    }
}

pub fn length_element(spec: &SymbolSpec, x: &[f64], eta: &[f64]) -> Result<f64, FinslerError> {
    if eta.iter().all(|&e| e == 0.0) {
        return Err(FinslerError::ZeroDirection);
    }
    if eta.len() != spec.n() {
        return Err(FinslerError::Argument(format!("direction has {} components, symbol {}", eta.len(), spec.n())));
    }
    let frozen = FrozenSymbol::at(spec, x)?;
    frozen_length(&frozen, x, eta)
}

fn frozen_length(frozen: &FrozenSymbol, x: &[f64], eta: &[f64]) -> Result<f64, FinslerError> {
    let two_m = f64::from(2 * frozen.m);
    match eta.len() {
        1 => {
            let a = frozen.eval(&[1.0]);
            if a <= 0.0 {
                return Err(FinslerError::Degenerate {
                    x: x.to_vec(),
                    xi: vec![1.0],
                    value: a,
                });
            }
            Ok(eta[0].abs() * a.powf(-1.0 / two_m))
        }
        2 => {
            let step = 2.0 * PI / SCAN_DIRECTIONS as f64;
            let values: Vec<f64> = (0..SCAN_DIRECTIONS)
                .map(|k| {
                    let th = k as f64 * step;
                    frozen.eval(&[th.cos(), th.sin()])
                })
                .collect();
            let amax = values.iter().copied().fold(0.0, f64::max);
            if let Some(k) = values.iter().position(|&a| a <= DEGENERACY_RATIO * amax) {
                let th = k as f64 * step;
                return Err(FinslerError::Degenerate {
                    x: x.to_vec(),
                    xi: vec![th.cos(), th.sin()],
                    value: values[k],
                });
            }
            let mut best = f64::NEG_INFINITY;
            let mut best_k = 0;
            for (k, a) in values.iter().enumerate() {
                let th = k as f64 * step;
                let r = (th.cos() * eta[0] + th.sin() * eta[1]) / a.powf(1.0 / two_m);
                if r > best {
                    best = r;
                    best_k = k;
                }
            }
            let f = |th: f64| frozen.ratio_2d(th, eta).unwrap_or(f64::NEG_INFINITY);
            let centre = best_k as f64 * step;
            let refined = golden_max(f, centre - step, centre + step);
            Ok(best.max(refined))
        }
        _ => Err(FinslerError::Argument("length element implemented for n <= 2".into())),
    }
}

/// Maximum of a unimodal function on `[a, b]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

fn leading_scale(spec: &SymbolSpec, x: f64) -> Result<f64, FinslerError> {
    let a = spec.leading_1d(x)?;
    if a <= 0.0 {
        return Err(FinslerError::Degenerate {
            x: vec![x],
            xi: vec![1.0],
            value: a,
        });
    }
    Ok(a.powf(-1.0 / f64::from(2 * spec.m())))
}

/// `|∫_{y1}^{y2} a(x)^{−1/2m} dx|` by composite Simpson.
pub fn distance_1d(spec: &SymbolSpec, y1: f64, y2: f64) -> Result<f64, FinslerError> {
    if spec.n() != 1 {
        return Err(FinslerError::Argument("distance_1d needs n = 1".into()));
    }
    if y1 == y2 {
        return Ok(0.0);
    }
    let (lo, hi) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
    let h = (hi - lo) / SIMPSON_PANELS as f64;
    let mut samples = Vec::with_capacity(SIMPSON_PANELS + 1);
    for i in 0..=SIMPSON_PANELS {
        samples.push(leading_scale(spec, lo + i as f64 * h)?);
    }
    Ok(simpson(lo, hi, SIMPSON_PANELS, |x| {
        samples[(((x - lo) / h).round() as usize).min(SIMPSON_PANELS)]
    }))
}

/// The 1D maximizer `φ(x) = ∫_{lo}^{x} a^{−1/2m}` on the given points.
pub fn optimal_potential_1d(spec: &SymbolSpec, points: &[f64]) -> Result<Vec<f64>, FinslerError> {
    let lo = spec.domain().lo[0];
    points.iter().map(|&x| distance_1d(spec, lo, x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMethod {
    ClosedForm1d,
    LatticeDijkstra,
    DmConvexProgram,
}

impl DistanceMethod {
    pub fn tag(self) -> &'static str {
        match self {
            DistanceMethod::ClosedForm1d => "closed-form-1d",
            DistanceMethod::LatticeDijkstra => "lattice-dijkstra",
            DistanceMethod::DmConvexProgram => "dM-convex-program",
        }
    }
}

/// Distances from one source to a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub source: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
    pub method: DistanceMethod,
    pub parameter: Option<f64>,
}

impl DistanceField {
    pub fn closed_form_1d(spec: &SymbolSpec, source: f64, points: &[f64]) -> Result<Self, FinslerError> {
        let distances = points
            .iter()
            .map(|&y| distance_1d(spec, source, y))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            source: vec![source],
            points: points.iter().map(|&y| vec![y]).collect(),
            distances,
            method: DistanceMethod::ClosedForm1d,
            parameter: None,
        })
    }

    pub fn dm_1d(spec: &SymbolSpec, m_bound: f64, source: f64, points: &[f64]) -> Result<Self, FinslerError> {
        let distances = points
            .iter()
            .map(|&y| distance_dm_1d(spec, m_bound, source, y).map(|r| r.value))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            source: vec![source],
            points: points.iter().map(|&y| vec![y]).collect(),
            distances,
            method: DistanceMethod::DmConvexProgram,
            parameter: Some(m_bound),
        })
    }

    /// Distance to the sample point closest to `x`.
    pub fn nearest(&self, x: &[f64]) -> f64 {
        let dist2 = |p: &Vec<f64>| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let (k, _) = self
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| dist2(a.1).total_cmp(&dist2(b.1)))
            .expect("non-empty field");
        self.distances[k]
    }
}

/// Lattice neighbourhood: primitive offsets `(p, q)` with `max(|p|,|q|) ≤ r`.
/// Radius 2 gives 16 neighbours, radius 3 gives 32.
pub fn lattice_offsets(radius: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for p in -radius..=radius {
        for q in -radius..=radius {
            if (p, q) != (0, 0) && gcd(p.unsigned_abs(), q.unsigned_abs()) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Neighbourhood size for [`distance_lattice_2d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbourhood {
    Sixteen,
    ThirtyTwo,
}

impl Neighbourhood {
    pub fn offsets(self) -> Vec<(i64, i64)> {
        match self {
            Neighbourhood::Sixteen => lattice_offsets(2),
            Neighbourhood::ThirtyTwo => lattice_offsets(3),
        }
    }
}

impl Default for Neighbourhood {
    fn default() -> Self {
        Neighbourhood::ThirtyTwo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest paths on the grid graph whose edges join nodes differing by a
/// neighbourhood offset, weighted by `p(midpoint, edge vector)`.
pub fn distance_lattice_2d(
    spec: &SymbolSpec,
    grid: &Grid,
    source: usize,
    neighbourhood: Neighbourhood,
) -> Result<DistanceField, FinslerError> {
    if spec.n() != 2 || grid.dim() != 2 {
        return Err(FinslerError::Argument("lattice distance needs n = 2".into()));
    }
    if source >= grid.len() {
        return Err(FinslerError::Argument(format!("source {source} outside grid")));
    }
    let offsets = neighbourhood.offsets();
    let h = grid.spacing().to_vec();
    let (nx, ny) = (grid.points()[0] as i64, grid.points()[1] as i64);
    let constant = spec.has_constant_coefficients();
    let fixed: Option<Vec<f64>> = if constant {
        let frozen = FrozenSymbol::at(spec, &grid.node(0))?;
        Some(
            offsets
                .iter()
                .map(|&(p, q)| frozen_length(&frozen, &grid.node(0), &[p as f64 * h[0], q as f64 * h[1]]))
                .collect::<Result<_, _>>()?,
        )
    } else {
        None
    };

    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem { dist: 0.0, node: source });
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        let idx = grid.unflatten(node);
        let (i, j) = (idx[0] as i64, idx[1] as i64);
        for (k, &(p, q)) in offsets.iter().enumerate() {
            let (a, b) = (i + p, j + q);
            if a < 0 || b < 0 || a >= nx || b >= ny {
                continue;
            }
            let next = grid.flatten(&[a as usize, b as usize]);
            if done[next] {
                continue;
            }
            let w = match &fixed {
                Some(ws) => ws[k],
                None => {
                    let mid = [
                        grid.coord(0, i as usize) + 0.5 * p as f64 * h[0],
                        grid.coord(1, j as usize) + 0.5 * q as f64 * h[1],
                    ];
                    length_element(spec, &mid, &[p as f64 * h[0], q as f64 * h[1]])?
                }
            };
            let cand = d + w;
            if cand < dist[next] {
                dist[next] = cand;
                heap.push(HeapItem { dist: cand, node: next });
            }
        }
    }
    Ok(DistanceField {
        source: grid.node(source),
        points: grid.nodes(),
        distances: dist,
        method: DistanceMethod::LatticeDijkstra,
        parameter: None,
    })
}

/// First-order constraint of the `d_M` program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeBound {
    /// `A(x, φ′) ≤ 1`, i.e. `|φ′| ≤ a(x)^{−1/2m}`.
    Symbol,
    /// `|φ′| ≤ M`, as in the class where every derivative of order
    /// `1..=m` is bounded by `M`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmResult {
    /// Objective `φ(y2) − φ(y1)` at the best feasible point.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest constraint violation before the feasibility rescaling.
    pub violation: f64,
    /// Slopes of the returned feasible `φ` on the cells.
    pub slopes: Vec<f64>,
}

/// `d_M(y1, y2)` with the slope bound from the symbol.
pub fn distance_dm_1d(spec: &SymbolSpec, m_bound: f64, y1: f64, y2: f64) -> Result<DmResult, FinslerError> {
    distance_dm_1d_with(spec, m_bound, y1, y2, SlopeBound::Symbol, DM_CELLS)
}

/// Maximizes `Σ g_i h` over cell slopes `g` subject to the slope bound and
/// `|Δ^{k−1} g| ≤ M h^{k−1}` for `2 ≤ k ≤ m`, by projected gradient ascent
/// whose projection is computed with Dykstra's algorithm. The last iterate
/// is rescaled towards zero until every constraint holds, which is always
/// possible since the feasible set is symmetric and contains zero.
pub fn distance_dm_1d_with(
    spec: &SymbolSpec,
    m_bound: f64,
    y1: f64,
    y2: f64,
    slope_bound: SlopeBound,
    cells: usize,
) -> Result<DmResult, FinslerError> {
    if spec.n() != 1 {
        return Err(FinslerError::Argument("d_M is implemented for n = 1".into()));
    }
    if !(m_bound > 0.0) {
        return Err(FinslerError::Argument(format!("M must be positive, got {m_bound}")));
    }
    if y1 == y2 {
        return Ok(DmResult {
            value: 0.0,
            iterations: 0,
            converged: true,
            violation: 0.0,
            slopes: Vec::new(),
        });
    }
    let (lo, hi) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
    let h = (hi - lo) / cells as f64;
    let bounds: Vec<f64> = match slope_bound {
        SlopeBound::Symbol => (0..cells)
            .map(|i| leading_scale(spec, lo + (i as f64 + 0.5) * h))
            .collect::<Result<_, _>>()?,
        SlopeBound::Uniform => vec![m_bound; cells],
    };
    let sets = ConstraintSets::new(bounds, spec.m(), m_bound, h);
    // ascent step in slope units, kept away from zero on short intervals
    let b_mean = sets.bounds.iter().sum::<f64>() / cells as f64;
    let step = 0.5 * h.max(b_mean / cells as f64);

    // start from the largest feasible multiple of the slope bounds
    let theta0 = sets.feasible_scale(&sets.bounds);
    let mut g: Vec<f64> = sets.bounds.iter().map(|b| b * theta0).collect();
    let mut duals = sets.zero_duals();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=DM_MAX_ITER {
        iterations = it;
        let z: Vec<f64> = g.iter().map(|v| v + step).collect();
        let next = sets.project(&z, &mut duals, DYKSTRA_SWEEPS);
        let change = next.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        g = next;
        if change < 0.1 * DM_FEASIBILITY_TOL && sets.violation(&g) <= 0.1 * DM_FEASIBILITY_TOL {
            converged = true;
            break;
        }
    }
    let violation = sets.violation(&g);
    let theta = sets.feasible_scale(&g);
    let slopes: Vec<f64> = g.iter().map(|v| v * theta).collect();
    let value = slopes.iter().sum::<f64>() * h;
    if !converged {
        log::warn!("d_M program hit {DM_MAX_ITER} iterations (M = {m_bound}); returning best feasible point");
    }
    Ok(DmResult {
        value,
        iterations,
        converged,
        violation,
        slopes,
    })
}

/// Box `|g_i| ≤ b_i` and slabs `|⟨c, g_{j..j+k}⟩| ≤ M h^{k−1}` grouped so
/// that each family has disjoint windows.
struct ConstraintSets {
    bounds: Vec<f64>,
    /// `(stencil, limit, window starts)` per family.
    families: Vec<(Vec<f64>, f64, Vec<usize>)>,
}

fn difference_stencil(order: usize) -> Vec<f64> {
    let mut c = vec![1.0];
    for _ in 0..order {
        let mut next = vec![0.0; c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] -= v;
            next[i + 1] += v;
        }
        c = next;
    }
    c
}

impl ConstraintSets {
    fn new(bounds: Vec<f64>, m: u32, m_bound: f64, h: f64) -> Self {
        let cells = bounds.len();
        let mut families = Vec::new();
        for k in 2..=m as usize {
            let stencil = difference_stencil(k - 1);
            let width = stencil.len();
            if width > cells {
                continue;
            }
            let limit = m_bound * h.powi(k as i32 - 1);
            for r in 0..width {
                let starts: Vec<usize> = (r..=cells - width).step_by(width).collect();
                if !starts.is_empty() {
                    families.push((stencil.clone(), limit, starts));
                }
            }
        }
        Self { bounds, families }
    }

    fn project_box(&self, g: &mut [f64]) {
        for (v, b) in g.iter_mut().zip(&self.bounds) {
            *v = v.clamp(-b, *b);
        }
    }

    fn project_family(g: &mut [f64], stencil: &[f64], limit: f64, starts: &[usize]) {
        let norm2: f64 = stencil.iter().map(|c| c * c).sum();
        for &s in starts {
            let val: f64 = stencil.iter().enumerate().map(|(i, c)| c * g[s + i]).sum();
            let excess = if val > limit {
                val - limit
            } else if val < -limit {
                val + limit
            } else {
                continue;
            };
            for (i, c) in stencil.iter().enumerate() {
                g[s + i] -= excess * c / norm2;
            }
        }
    }

    fn zero_duals(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.bounds.len()]; 1 + self.families.len()]
    }

    /// Dykstra projection onto the intersection. The increments are the
    /// dual variables of the projection problem; reusing them across
    /// nearby points `z` makes successive projections cheap.
    fn project(&self, z: &[f64], duals: &mut [Vec<f64>], max_sweeps: usize) -> Vec<f64> {
        let mut x: Vec<f64> = z.to_vec();
        for d in duals.iter() {
            for (xi, di) in x.iter_mut().zip(d) {
                *xi -= di;
            }
        }
        for _ in 0..max_sweeps {
            let before = x.clone();
            for (s, incr) in duals.iter_mut().enumerate() {
                let y: Vec<f64> = x.iter().zip(incr.iter()).map(|(a, b)| a + b).collect();
                let mut p = y.clone();
                if s == 0 {
                    self.project_box(&mut p);
                } else {
                    let (st, lim, starts) = &self.families[s - 1];
                    Self::project_family(&mut p, st, *lim, starts);
                }
                for i in 0..p.len() {
                    incr[i] = y[i] - p[i];
                }
                x = p;
            }
            let change = x.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change < 1e-14 && self.violation(&x) <= 1e-3 * DM_FEASIBILITY_TOL {
                break;
            }
        }
        x
    }

    fn violation(&self, g: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, b) in g.iter().zip(&self.bounds) {
            worst = worst.max(v.abs() - b);
        }
        for (st, lim, _) in &self.families {
            for s in 0..=g.len() - st.len() {
                let val: f64 = st.iter().enumerate().map(|(i, c)| c * g[s + i]).sum();
                worst = worst.max(val.abs() - lim);
            }
        }
        worst
    }

    /// Largest `θ ∈ [0, 1]` with `θ·g` feasible.
    fn feasible_scale(&self, g: &[f64]) -> f64 {
        let mut theta: f64 = 1.0;
        for (v, b) in g.iter().zip(&self.bounds) {
            if v.abs() > *b {
                theta = theta.min(b / v.abs());
            }
        }
        for (st, lim, _) in &self.families {
            for s in 0..=g.len() - st.len() {
                let val: f64 = st.iter().enumerate().map(|(i, c)| c * g[s + i]).sum::<f64>().abs();
                if val > *lim {
                    theta = theta.min(lim / val);
                }
            }
        }
        theta
    }
}

/// Ratios `d_M/d` over pairs and an increasing list of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DmConvergence {
    pub m_values: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub distances: Vec<f64>,
    /// `ratios[p][k]` for pair `p` and `M = m_values[k]`.
    pub ratios: Vec<Vec<f64>>,
    pub all_converged: bool,
}

impl DmConvergence {
    /// Ratios non-decreasing in `M` up to `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.ratios.iter().all(|r| r.windows(2).all(|w| w[1] >= w[0] - tol))
    }

    pub fn final_min(&self) -> f64 {
        self.ratios
            .iter()
            .filter_map(|r| r.last().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn dm_convergence_check(spec: &SymbolSpec, pairs: &[(f64, f64)], m_values: &[f64]) -> Result<DmConvergence, FinslerError> {
    let mut distances = Vec::with_capacity(pairs.len());
    let mut ratios = Vec::with_capacity(pairs.len());
    let mut all_converged = true;
    for &(y1, y2) in pairs {
        let d = distance_1d(spec, y1, y2)?;
        let mut row = Vec::with_capacity(m_values.len());
        for &mb in m_values {
            let r = distance_dm_1d(spec, mb, y1, y2)?;
            all_converged &= r.converged;
            row.push(if d > 0.0 { r.value / d } else { 1.0 });
        }
        distances.push(d);
        ratios.push(row);
    }
    Ok(DmConvergence {
        m_values: m_values.to_vec(),
        pairs: pairs.to_vec(),
        distances,
        ratios,
        all_converged,
    })
}

/// `max p(x, η)/p̂(x, η)` over sample points and directions; distances then
/// satisfy `d̂ ≥ d / ratio`.
pub fn length_ratio_bound(spec: &SymbolSpec, reference: &SymbolSpec, points: &[Vec<f64>], directions: &[Vec<f64>]) -> Result<f64, FinslerError> {
    let mut worst: f64 = 0.0;
    for x in points {
        for eta in directions {
            worst = worst.max(length_element(spec, x, eta)? / length_element(reference, x, eta)?);
        }
    }
    Ok(worst)
}
