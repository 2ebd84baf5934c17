use heatlab::discretize::Grid;
use heatlab::field::{CoefficientField, DomainSpec};
use heatlab::finsler::{
    distance_1d, distance_dm_1d, distance_dm_1d_with, distance_lattice_2d, dm_convergence_check, length_element,
    length_ratio_bound, optimal_potential_1d, DistanceField, Neighbourhood, SlopeBound,
};
use heatlab::symbol::{eval_symbol, MultiIndex, SymbolSpec};
use proptest::prelude::*;

fn quartic_1d(a: &str) -> SymbolSpec {
    SymbolSpec::scalar_1d(2, CoefficientField::parse(a, 1).unwrap(), DomainSpec::interval(0.0, 1.0)).unwrap()
}

fn bilaplacian_2d(lo: f64, hi: f64) -> SymbolSpec {
    SymbolSpec::laplacian_power(2, 1.0.into(), DomainSpec::square(lo, hi)).unwrap()
}

#[test]
fn length_element_examples() {
    let s1 = SymbolSpec::scalar_1d(1, 1.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
    assert_eq!(length_element(&s1, &[0.3], &[-2.5]).unwrap(), 2.5);
    let s2 = SymbolSpec::scalar_1d(2, 16.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
    assert!((length_element(&s2, &[0.3], &[3.0]).unwrap() - 1.5).abs() < 1e-15);
    let b = bilaplacian_2d(0.0, 1.0);
    for th in [0.0, 0.3, 1.1, 2.0, 4.0] {
        let eta = [2.0 * f64::cos(th), 2.0 * f64::sin(th)];
        assert!((length_element(&b, &[0.5, 0.5], &eta).unwrap() - 2.0).abs() < 1e-10);
    }
    assert!(length_element(&b, &[0.5, 0.5], &[0.0, 0.0]).is_err());
}

#[test]
fn degenerate_symbol_rejected() {
    let dom = DomainSpec::square(0.0, 1.0);
    let mut spec = SymbolSpec::new(1, dom).unwrap();
    spec.set(MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![1, 0]), 1.0.into()).unwrap();
    assert!(length_element(&spec, &[0.5, 0.5], &[1.0, 0.0]).is_err());
}

proptest! {
    #[test]
    fn length_element_homogeneous_positive(x in 0.0..1.0f64, y in 0.0..1.0f64, th in 0.0..6.28f64, s in 0.01..50.0f64) {
        let dom = DomainSpec::square(0.0, 1.0);
        let mut spec = SymbolSpec::new(2, dom).unwrap();
        let idx = MultiIndex::enumerate(2, 2);
        spec.set(idx[0].clone(), idx[0].clone(), CoefficientField::parse("1 + x1^2", 2).unwrap()).unwrap();
        spec.set(idx[1].clone(), idx[1].clone(), 1.0.into()).unwrap();
        spec.set(idx[2].clone(), idx[2].clone(), CoefficientField::parse("2 + sin(x2)", 2).unwrap()).unwrap();
        let eta = [th.cos(), th.sin()];
        let p = length_element(&spec, &[x, y], &eta).unwrap();
        let ps = length_element(&spec, &[x, y], &[s * eta[0], s * eta[1]]).unwrap();
        prop_assert!(p > 0.0);
        prop_assert!((ps - s * p).abs() <= 1e-9 * ps);
    }
}

#[test]
fn distance_1d_examples() {
    let flat = SymbolSpec::scalar_1d(2, 1.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
    assert!((distance_1d(&flat, 0.2, 0.9).unwrap() - 0.7).abs() < 1e-14);
    let s16 = SymbolSpec::scalar_1d(2, 16.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
    assert!((distance_1d(&s16, 0.9, 0.2).unwrap() - 0.35).abs() < 1e-14);
    let s = quartic_1d("(1+x)^4");
    assert!((distance_1d(&s, 0.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-8);
    assert_eq!(distance_1d(&s, 0.3, 0.7).unwrap(), distance_1d(&s, 0.7, 0.3).unwrap());
}

#[test]
fn maximizer_saturates_the_symbol() {
    let s = quartic_1d("(1+x)^4");
    let xs: Vec<f64> = (1..50).map(|i| i as f64 / 50.0).collect();
    let phi = optimal_potential_1d(&s, &xs).unwrap();
    // φ′ = 1/(1+x) analytically; check A(x, φ′) = 1 through the exact antiderivative
    for (x, p) in xs.iter().zip(&phi) {
        assert!((p - (1.0 + x).ln()).abs() < 1e-10);
        let slope = 1.0 / (1.0 + x);
        assert!((eval_symbol(&s, &[*x], &[slope]).unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn dm_constant_coefficient_is_euclidean() {
    let flat = SymbolSpec::scalar_1d(2, 1.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
    for mb in [0.01, 1.0, 10.0] {
        let r = distance_dm_1d(&flat, mb, 0.1, 0.8).unwrap();
        assert!((r.value - 0.7).abs() < 1e-9, "{mb}: {}", r.value);
    }
}

/// For m = 2 the discrete optimum is the largest `Mh`-Lipschitz minorant of
/// the slope bounds: `g_i = min_j (b_j + M h |i − j|)`.
#[test]
fn dm_matches_lipschitz_envelope_oracle() {
    let s = quartic_1d("(1+x)^4");
    let cells = 200;
    for mb in [0.1, 0.5, 2.0] {
        let r = distance_dm_1d_with(&s, mb, 0.0, 1.0, SlopeBound::Symbol, cells).unwrap();
        let h = 1.0 / cells as f64;
        let b: Vec<f64> = (0..cells).map(|i| 1.0 / (1.0 + (i as f64 + 0.5) * h)).collect();
        let oracle: f64 = (0..cells)
            .map(|i| (0..cells).map(|j| b[j] + mb * h * (i as f64 - j as f64).abs()).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            * h;
        assert!(r.converged, "M = {mb}");
        assert!((r.value - oracle).abs() < 1e-6, "M = {mb}: {} vs {oracle}", r.value);
    }
}

#[test]
fn dm_examples_and_monotonicity() {
    let s = quartic_1d("(1+x)^4");
    let d = distance_1d(&s, 0.0, 1.0).unwrap();
    let at1 = distance_dm_1d(&s, 1.0, 0.0, 1.0).unwrap();
    assert!(at1.value >= 0.98 * d && at1.value <= d + 1e-6);
    let small = distance_dm_1d(&s, 1e-3, 0.0, 1.0).unwrap();
    assert!(small.value < d - 1e-3);
    let table = dm_convergence_check(&s, &[(0.0, 1.0), (0.2, 0.6)], &[0.1, 0.5, 1.0, 5.0]).unwrap();
    assert!(table.is_monotone(1e-3), "{:?}", table.ratios);
    assert!(table.final_min() >= 0.98);
    for row in &table.ratios {
        assert!(row.iter().all(|r| *r <= 1.0 + 1e-6));
    }
}

#[test]
fn uniform_class_bounds_every_derivative() {
    let flat = SymbolSpec::scalar_1d(2, 1.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
    let r = distance_dm_1d_with(&flat, 0.5, 0.0, 1.0, SlopeBound::Uniform, 100).unwrap();
    assert!((r.value - 0.5).abs() < 1e-9);
}

#[test]
fn lattice_euclidean_accuracy() {
    let spec = bilaplacian_2d(-1.0, 1.0);
    let grid = Grid::new(spec.domain(), &[64]).unwrap();
    let src = grid.nearest(&[0.0, 0.0]);
    let centre = grid.node(src);
    let mut worst = [0.0f64; 2];
    for (k, nb) in [Neighbourhood::Sixteen, Neighbourhood::ThirtyTwo].into_iter().enumerate() {
        let field = distance_lattice_2d(&spec, &grid, src, nb).unwrap();
        assert_eq!(field.distances[src], 0.0);
        for (p, d) in field.points.iter().zip(&field.distances) {
            let e = ((p[0] - centre[0]).powi(2) + (p[1] - centre[1]).powi(2)).sqrt();
            if e > 0.0 {
                assert!(*d >= e * (1.0 - 1e-9));
                worst[k] = worst[k].max(d / e - 1.0);
            }
        }
    }
    assert!(worst[1] <= 0.015, "32-neighbour error {}", worst[1]);
    assert!(worst[0] > worst[1]);
}

#[test]
fn lattice_axis_anisotropy() {
    let dom = DomainSpec::square(0.0, 1.0);
    let spec = SymbolSpec::separable(2, &[16.0, 1.0], dom.clone()).unwrap();
    let grid = Grid::new(&dom, &[21]).unwrap();
    let src = grid.flatten(&[0, 0]);
    let field = distance_lattice_2d(&spec, &grid, src, Neighbourhood::default()).unwrap();
    let dx = field.distances[grid.flatten(&[20, 0])];
    let dy = field.distances[grid.flatten(&[0, 20])];
    assert!((dx / dy - 0.5).abs() < 1e-12);
}

#[test]
fn lattice_triangle_inequality() {
    let dom = DomainSpec::square(0.0, 1.0);
    let mut spec = SymbolSpec::new(2, dom.clone()).unwrap();
    let idx = MultiIndex::enumerate(2, 2);
    spec.set(idx[0].clone(), idx[0].clone(), CoefficientField::parse("1 + x1", 2).unwrap()).unwrap();
    spec.set(idx[1].clone(), idx[1].clone(), 2.0.into()).unwrap();
    spec.set(idx[2].clone(), idx[2].clone(), 1.0.into()).unwrap();
    let grid = Grid::new(&dom, &[15]).unwrap();
    let fields: Vec<DistanceField> = [0, 100, 200]
        .iter()
        .map(|&s| distance_lattice_2d(&spec, &grid, s, Neighbourhood::default()).unwrap())
        .collect();
    // graph distances are symmetric here because the symbol is even in ξ
    let d = |a: usize, b: usize| fields[a].distances[[0, 100, 200][b]];
    for (a, b, c) in [(0, 1, 2), (1, 0, 2), (0, 2, 1)] {
        assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
    }
}

#[test]
fn perturbed_distances_scale_with_length_ratio() {
    let reference = quartic_1d("1");
    let perturbed = quartic_1d("1 + 0.1*sin(2*pi*x)");
    let xs: Vec<Vec<f64>> = (0..=40).map(|i| vec![i as f64 / 40.0]).collect();
    let ratio = length_ratio_bound(&perturbed, &reference, &xs, &[vec![1.0]]).unwrap();
    for mb in [0.5, 5.0] {
        let d = distance_dm_1d(&perturbed, mb, 0.0, 1.0).unwrap().value;
        let dhat = distance_dm_1d(&reference, mb, 0.0, 1.0).unwrap().value;
        assert!(dhat >= d / ratio - 1e-6);
    }
}

#[test]
fn dm_exact_for_constant_coefficient_at_short_range() {
    // linear profiles are admissible for every M, so d_M = d
    let spec = SymbolSpec::scalar_1d(2, 1.0.into(), DomainSpec::interval(-4.0, 4.0)).unwrap();
    for k in 1..=6 {
        let gap = 0.01 * k as f64;
        let r = distance_dm_1d(&spec, 5.0, 0.1, 0.1 + gap).unwrap();
        assert!(r.converged);
        assert!((r.value - gap).abs() < 1e-9 * gap, "{gap}: {}", r.value);
    }
}
