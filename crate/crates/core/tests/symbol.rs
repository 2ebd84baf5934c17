use heatlab::field::{CoefficientField, DomainSpec};
use heatlab::symbol::{
    eval_symbol, gamma_coefficients, gamma_form, is_strongly_convex, sharp_constants, MultiIndex, SymbolSpec,
    DEFAULT_PSD_TOL,
};
use proptest::prelude::*;

/// `min_λ (−λd + κλ^{2m}t)` by a 10⁴-point log scan followed by golden
/// section inside the bracketing cell.
fn numeric_infimum(m: u32, kappa: f64, d: f64, t: f64) -> f64 {
    let f = |l: f64| -l * d + kappa * l.powi(2 * m as i32) * t;
    let (lo, hi) = (-8.0f64, 8.0f64);
    let count = 10_000;
    let lambda = |i: usize| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64);
    let best = (0..count).min_by(|&a, &b| f(lambda(a)).total_cmp(&f(lambda(b)))).unwrap();
    let (mut a, mut b) = (lambda(best.saturating_sub(1)), lambda((best + 1).min(count - 1)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if f(c) < f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

#[test]
fn infimum_identity_on_log_grid() {
    for m in 1..=4u32 {
        let c = sharp_constants(m);
        let q = f64::from(2 * m - 1);
        for i in 0..10 {
            for j in 0..10 {
                let d = 10f64.powf(-1.0 + 2.0 * i as f64 / 9.0);
                let t = 10f64.powf(-3.0 + 3.0 * j as f64 / 9.0);
                let want = -c.sigma_m * d.powf(2.0 * f64::from(m) / q) * t.powf(-1.0 / q);
                let got = numeric_infimum(m, c.k_m, d, t);
                assert!((got - want).abs() <= 1e-6 * want.abs(), "m={m} d={d} t={t}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn exact_constants() {
    assert_eq!(sharp_constants(1).sigma_m, 0.25);
    assert_eq!(sharp_constants(1).k_m, 1.0);
    assert_eq!(sharp_constants(2).k_m, 8.0);
    assert!((sharp_constants(2).sigma_m - 0.2362).abs() < 5e-5);
}

fn mixed_quartic(a: f64, b: f64, c: f64) -> SymbolSpec {
    // a ξ₁⁴ + b ξ₁²ξ₂² + c ξ₂⁴ through the diagonal pairs
    let mut s = SymbolSpec::new(2, DomainSpec::square(0.0, 1.0)).unwrap();
    let idx = MultiIndex::enumerate(2, 2);
    s.set(idx[0].clone(), idx[0].clone(), a.into()).unwrap();
    s.set(idx[1].clone(), idx[1].clone(), b.into()).unwrap();
    s.set(idx[2].clone(), idx[2].clone(), c.into()).unwrap();
    s
}

#[test]
fn convexity_verdicts_for_worked_symbols() {
    let pts = vec![vec![0.5, 0.5]];
    let bilap = SymbolSpec::laplacian_power(2, 1.0.into(), DomainSpec::square(0.0, 1.0)).unwrap();
    let r = is_strongly_convex(&bilap, &pts, DEFAULT_PSD_TOL).unwrap();
    assert!(r.is_convex());
    assert!((r.worst_eigenvalue - 1.0 / 3.0).abs() < 1e-12);

    let sq = SymbolSpec::scalar_1d(1, 1.0.into(), DomainSpec::interval(0.0, 1.0)).unwrap();
    let r = is_strongly_convex(&sq, &[vec![0.5]], DEFAULT_PSD_TOL).unwrap();
    assert!(r.is_convex() && (r.worst_eigenvalue - 1.0).abs() < 1e-14);

    let sep = mixed_quartic(1.0, 0.0, 1.0);
    let r = is_strongly_convex(&sep, &pts, DEFAULT_PSD_TOL).unwrap();
    assert!(r.is_convex());
    assert!(r.worst_eigenvalue.abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn homogeneous_of_degree_2m(x in 0.0..1.0f64, y in 0.0..1.0f64, a in -3.0..3.0f64, b in -3.0..3.0f64, s in 0.01..20.0f64) {
        let mut spec = SymbolSpec::new(2, DomainSpec::square(0.0, 1.0)).unwrap();
        let idx = MultiIndex::enumerate(2, 2);
        spec.set(idx[0].clone(), idx[0].clone(), CoefficientField::parse("1 + x1*x2", 2).unwrap()).unwrap();
        spec.set(idx[0].clone(), idx[2].clone(), CoefficientField::parse("0.3*sin(x1)", 2).unwrap()).unwrap();
        spec.set(idx[1].clone(), idx[2].clone(), 0.2.into()).unwrap();
        spec.set(idx[2].clone(), idx[2].clone(), 2.0.into()).unwrap();
        let base = eval_symbol(&spec, &[x, y], &[a, b]).unwrap();
        let scaled = eval_symbol(&spec, &[x, y], &[s * a, s * b]).unwrap();
        prop_assert!((scaled - s.powi(4) * base).abs() <= 1e-12 * scaled.abs().max(1e-300));
    }

    #[test]
    fn gamma_reconstruction(a in 0.1..3.0f64, b in -2.0..2.0f64, c in 0.1..3.0f64, xi in proptest::collection::vec(-2.0..2.0f64, 2)) {
        let spec = mixed_quartic(a, b, c);
        let g = gamma_coefficients(&spec, &[0.5, 0.5]).unwrap();
        let rebuilt: f64 = g.iter().map(|(gamma, v)| gamma.multinomial() * v * gamma.monomial(&xi)).sum();
        let direct = eval_symbol(&spec, &[0.5, 0.5], &xi).unwrap();
        prop_assert!((rebuilt - direct).abs() <= 1e-12 * direct.abs().max(1e-12));
    }

    #[test]
    fn psd_gamma_form_gives_nonnegative_quadratic(a in 0.0..3.0f64, b in -1.0..6.0f64, c in 0.0..3.0f64, xi in proptest::collection::vec(-2.0..2.0f64, 2)) {
        let spec = mixed_quartic(a, b, c);
        let g = gamma_form(&spec, &[0.5, 0.5]).unwrap();
        let report = is_strongly_convex(&spec, &[vec![0.5, 0.5]], 0.0).unwrap();
        let p: Vec<f64> = g.index_order.iter().map(|alpha| alpha.monomial(&xi)).collect();
        let mut q = 0.0;
        for i in 0..p.len() {
            for j in 0..p.len() {
                q += g.matrix[(i, j)] * p[i] * p[j];
            }
        }
        if report.is_convex() {
            prop_assert!(q >= -1e-12);
        }
        prop_assert_eq!(&g.matrix, &g.matrix.transpose());
    }
}
