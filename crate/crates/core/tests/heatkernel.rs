use heatlab::discretize::{assemble, Grid};
use heatlab::field::{CoefficientField, DomainSpec};
use heatlab::heatkernel::{
    eigendecompose, fourier_oracle, ondiag_bound, relative_drift, semigroup_check, HeatKernelError, HeatKernelField,
    KernelMethod, SpectralData,
};
use heatlab::symbol::SymbolSpec;
use heatlab::DiscreteOperator;
use proptest::prelude::*;
use std::sync::OnceLock;

fn op_1d(m: u32, a: &str, v: Option<&str>, lo: f64, hi: f64, n: usize) -> DiscreteOperator {
    let dom = DomainSpec::interval(lo, hi);
    let spec = SymbolSpec::scalar_1d(m, CoefficientField::parse(a, 1).unwrap(), dom.clone()).unwrap();
    let pot = v.map(|s| CoefficientField::parse(s, 1).unwrap());
    assemble(&spec, None, pot.as_ref(), &Grid::new(&dom, &[n]).unwrap()).unwrap()
}

fn bilaplacian_line() -> &'static (DiscreteOperator, SpectralData) {
    static CELL: OnceLock<(DiscreteOperator, SpectralData)> = OnceLock::new();
    CELL.get_or_init(|| {
        let op = op_1d(2, "1", None, -4.0, 4.0, 399);
        let sd = eigendecompose(&op).unwrap();
        (op, sd)
    })
}

/// Worst `|K_spectral − K_oracle|` over pairs around the centre, relative to
/// the oracle's peak at that time.
fn cross_validation_error(sd: &SpectralData, m: u32, t: f64, centre: usize, max_offset: f64) -> f64 {
    let grid = sd.grid();
    let x0 = grid.coord(0, centre);
    let mut worst: f64 = 0.0;
    let peak = fourier_oracle(m, 1.0, t, 0.0).unwrap().abs();
    for j in 0..grid.len() {
        let r = grid.coord(0, j) - x0;
        if r.abs() > max_offset {
            continue;
        }
        let spectral = sd.kernel(t, centre, j).unwrap();
        let oracle = fourier_oracle(m, 1.0, t, r).unwrap();
        worst = worst.max((spectral - oracle).abs() / peak);
    }
    worst
}

#[test]
fn spectral_matches_oracle_second_order() {
    let op = op_1d(1, "1", None, -8.0, 8.0, 399);
    let sd = eigendecompose(&op).unwrap();
    // |x − y| ≤ L/8 = 2 and t ≤ (L/8)²/16
    for t in [0.05, 0.1, 0.25] {
        let err = cross_validation_error(&sd, 1, t, 199, 2.0);
        assert!(err < 0.02, "t = {t}: {err}");
    }
}

#[test]
fn spectral_matches_oracle_fourth_order() {
    let (_, sd) = bilaplacian_line();
    // L = 8: |x − y| ≤ 1 and t ≤ 1/16
    for t in [0.01, 0.03, 0.0625] {
        let err = cross_validation_error(sd, 2, t, 199, 1.0);
        assert!(err < 0.02, "t = {t}: {err}");
    }
}

#[test]
fn fine_grid_heat_kernel_at_origin() {
    let op = op_1d(1, "1", None, -8.0, 8.0, 800);
    let sd = eigendecompose(&op).unwrap();
    let i = op.grid().nearest(&[0.0]);
    let x = op.grid().coord(0, i);
    for t in [0.05, 0.1, 0.5] {
        let k = sd.kernel(t, i, i).unwrap();
        let want = (4.0 * std::f64::consts::PI * t).sqrt().recip();
        assert!((k - want).abs() < 0.01 * want, "t = {t}: {k} vs {want} at x = {x}");
    }
}

#[test]
fn spectral_data_invariants() {
    let (op, sd) = bilaplacian_line();
    let scale = sd.eigenvalues().amax();
    assert!(sd.orthonormality_defect() < 1e-8);
    // residuals scale with ‖H‖ for the dense solver
    assert!(sd.max_residual(op) < 1e-8 * scale, "{}", sd.max_residual(op));
    assert!(sd.eigenvalues().as_slice().windows(2).all(|w| w[0] <= w[1]));
    let small = op_1d(1, "1 + x^2", Some("cos(x)"), 0.0, 1.0, 200);
    let sds = eigendecompose(&small).unwrap();
    assert!(sds.max_residual(&small) < 1e-8 * (sds.eigenvalues().amax() + 1.0));
}

#[test]
fn chapman_kolmogorov_and_trace() {
    let op = op_1d(2, "1 + 0.5*sin(3*x)", Some("x^2"), -1.0, 1.0, 150);
    let sd = eigendecompose(&op).unwrap();
    for (t, s) in [(0.1, 0.1), (1e-3, 1e-3), (1e-4, 0.02)] {
        let d = semigroup_check(&sd, t, s).unwrap();
        assert!(d.defect <= 1e-8 * d.max_abs_kernel, "({t},{s}): {d:?}");
    }
    for t in [1e-4, 1e-2, 1.0] {
        let (diag, sum) = sd.trace(t).unwrap();
        assert!((diag - sum).abs() <= 1e-9 * sum, "{t}: {diag} {sum}");
    }
    assert!(matches!(semigroup_check(&sd, 0.0, 0.1), Err(HeatKernelError::Time(_))));
}

#[test]
fn two_dimensional_kernel() {
    let dom = DomainSpec::square(0.0, 1.0);
    let spec = SymbolSpec::laplacian_power(2, 1.0.into(), dom.clone()).unwrap();
    let op = assemble(&spec, None, None, &Grid::new(&dom, &[14, 14]).unwrap()).unwrap();
    let sd = eigendecompose(&op).unwrap();
    let k = sd.kernel_matrix(1e-3).unwrap();
    assert!((&k - k.transpose()).amax() <= 1e-10 * k.amax());
    let d = semigroup_check(&sd, 1e-3, 2e-3).unwrap();
    assert!(d.defect <= 1e-8 * d.max_abs_kernel);
    let negative = [1e-4, 1e-3, 1e-2]
        .iter()
        .any(|&t| sd.kernel_matrix(t).unwrap().iter().any(|v| *v < -1e-12));
    assert!(negative, "fourth-order kernel changes sign");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_symmetric(i in 0usize..399, j in 0usize..399, t in 1e-4..1.0f64) {
        let (_, sd) = bilaplacian_line();
        let a = sd.kernel(t, i, j).unwrap();
        let b = sd.kernel(t, j, i).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300));
    }

    #[test]
    fn second_order_kernel_nonnegative(i in 0usize..120, j in 0usize..120, t in 1e-4..1.0f64) {
        let op = op_1d(1, "1 + 0.5*cos(4*x)", Some("2*x"), 0.0, 1.0, 120);
        let sd = eigendecompose(&op).unwrap();
        prop_assert!(sd.kernel(t, i, j).unwrap() >= -1e-12);
    }
}

#[test]
fn boundary_contamination_guard() {
    let short = op_1d(1, "1", None, -4.0, 4.0, 399);
    let long = op_1d(1, "1", None, -8.0, 8.0, 799);
    let a = eigendecompose(&short).unwrap();
    let b = eigendecompose(&long).unwrap();
    let (ca, cb) = (199, 399);
    let pairs_a: Vec<(usize, usize)> = (0..=40).map(|k| (ca, ca + k)).collect();
    let pairs_b: Vec<(usize, usize)> = (0..=40).map(|k| (cb, cb + k)).collect();
    let fa = HeatKernelField::spectral(&a, &[0.05, 0.2], &pairs_a).unwrap();
    let fb = HeatKernelField::spectral(&b, &[0.05, 0.2], &pairs_b).unwrap();
    assert_eq!(fa.method, KernelMethod::Spectral);
    let va: Vec<f64> = fa.samples.iter().map(|s| s.value).collect();
    let vb: Vec<f64> = fb.samples.iter().map(|s| s.value).collect();
    assert!(relative_drift(&vb, &va) < 0.01);
    // at t = 8 the shorter interval's walls dominate
    let fa = HeatKernelField::spectral(&a, &[8.0], &pairs_a).unwrap();
    let fb = HeatKernelField::spectral(&b, &[8.0], &pairs_b).unwrap();
    let va: Vec<f64> = fa.samples.iter().map(|s| s.value).collect();
    let vb: Vec<f64> = fb.samples.iter().map(|s| s.value).collect();
    assert!(relative_drift(&vb, &va) > 0.01);
}

#[test]
fn ondiag_constant_fourth_order_dirichlet() {
    let (op, sd) = bilaplacian_line();
    let c = op.grid().nearest(&[0.0]);
    let times: Vec<f64> = (0..=8).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
    let field = HeatKernelField::spectral(sd, &times, &[(c, c)]).unwrap();
    let b = ondiag_bound(&field, 2, 1).unwrap();
    assert!(b.spread <= 2.0, "{b:?}");
    let oracle = ondiag_bound(&HeatKernelField::oracle(2, 1.0, &times, &[0.0]).unwrap(), 2, 1).unwrap();
    assert!((b.c1 - oracle.c1).abs() < 0.05 * oracle.c1);
}
