use heatlab::field::DomainSpec;
use heatlab::finsler::DistanceField;
use heatlab::heatkernel::{HeatKernelField, KernelMethod, KernelSample};
use heatlab::symbol::SymbolSpec;
use heatlab_experiments::fit::{fit_gaussian_exponent, fit_with_selection, FitError, Selection};
use proptest::prelude::*;

fn line(m: u32) -> SymbolSpec {
    SymbolSpec::scalar_1d(m, 1.0.into(), DomainSpec::interval(-10.0, 10.0)).unwrap()
}

/// `c t^{−n/2m} exp(−σ d^{2m/(2m−1)} t^{−1/(2m−1)})` sampled on a grid.
fn synthetic(m: u32, sigma: f64, c: f64, times: &[f64], offsets: &[f64]) -> HeatKernelField {
    let q = f64::from(2 * m - 1);
    let mut samples = Vec::new();
    for &t in times {
        for &r in offsets {
            let u = r.abs().powf(2.0 * f64::from(m) / q) * t.powf(-1.0 / q);
            samples.push(KernelSample {
                t,
                x: vec![0.0],
                y: vec![r],
                value: c * t.powf(-0.5 / f64::from(m)) * (-sigma * u).exp(),
            });
        }
    }
    HeatKernelField { method: KernelMethod::Spectral, samples }
}

fn offsets(count: usize) -> Vec<f64> {
    (0..count).map(|k| 0.1 * k as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recovers_exact_exponent(m in 1u32..4, sigma in 0.05..0.5f64, c in 0.1..10.0f64) {
        let ts = [0.01, 0.02, 0.05, 0.1];
        let xs = offsets(20);
        let field = synthetic(m, sigma, c, &ts, &xs);
        let d = DistanceField::closed_form_1d(&line(m), 0.0, &xs).unwrap();
        let fit = fit_with_selection(&field, &d, m, 1, (0.01, 0.1), Selection::All).unwrap();
        prop_assert!((fit.sigma_eff - sigma).abs() < 1e-9 * sigma);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
        prop_assert!(fit.residual < 1e-10);
        prop_assert!(fit.has_verdict());
        prop_assert_eq!(fit.used, 80);
    }
}

#[test]
fn window_restricts_times() {
    let xs = offsets(20);
    let field = synthetic(1, 0.25, 1.0, &[0.01, 0.02, 0.05, 0.1, 1.0], &xs);
    let d = DistanceField::closed_form_1d(&line(1), 0.0, &xs).unwrap();
    let fit = fit_gaussian_exponent(&field, &d, 1, 1, (0.02, 1.0)).unwrap();
    assert_eq!(fit.used, 80);
    assert_eq!(fit.t_window, (0.02, 1.0));
    assert!((fit.margin).abs() < 1e-9);
}

#[test]
fn too_few_distances_or_times() {
    let d = DistanceField::closed_form_1d(&line(1), 0.0, &offsets(20)).unwrap();
    let few = synthetic(1, 0.25, 1.0, &[0.01, 0.02, 0.05], &offsets(5));
    assert_eq!(
        fit_gaussian_exponent(&few, &d, 1, 1, (0.01, 0.05)),
        Err(FitError::Insufficient { what: "distances", got: 5, need: 8 })
    );
    let short = synthetic(1, 0.25, 1.0, &[0.01, 0.02], &offsets(20));
    assert_eq!(
        fit_gaussian_exponent(&short, &d, 1, 1, (0.01, 0.05)),
        Err(FitError::Insufficient { what: "times", got: 2, need: 3 })
    );
    assert_eq!(fit_gaussian_exponent(&short, &d, 1, 1, (0.05, 0.01)), Err(FitError::Window(0.05, 0.01)));
}

#[test]
fn underflow_majority_is_an_error() {
    let xs = offsets(20);
    let d = DistanceField::closed_form_1d(&line(1), 0.0, &xs).unwrap();
    let mut field = synthetic(1, 0.25, 1.0, &[0.01, 0.02, 0.05], &xs);
    for s in field.samples.iter_mut().skip(20) {
        s.value = 0.0;
    }
    assert_eq!(fit_gaussian_exponent(&field, &d, 1, 1, (0.01, 0.05)), Err(FitError::Underflow { underflowed: 40, total: 60 }));
}

#[test]
fn source_mismatch_detected() {
    let xs = offsets(20);
    let d = DistanceField::closed_form_1d(&line(1), 0.5, &xs).unwrap();
    let field = synthetic(1, 0.25, 1.0, &[0.01, 0.02, 0.05], &xs);
    assert!(matches!(fit_gaussian_exponent(&field, &d, 1, 1, (0.01, 0.05)), Err(FitError::Source(_))));
}

#[test]
fn envelope_peaks_ignore_oscillation_troughs() {
    // an oscillating kernel whose envelope is the synthetic Gaussian
    let xs: Vec<f64> = (0..400).map(|k| 0.01 * k as f64).collect();
    let mut field = synthetic(2, 0.3, 1.0, &[0.01, 0.02, 0.04], &xs);
    for s in &mut field.samples {
        s.value *= (8.0 * s.y[0]).cos().abs();
    }
    let d = DistanceField::closed_form_1d(&line(2), 0.0, &xs).unwrap();
    let peaks = fit_with_selection(&field, &d, 2, 1, (0.01, 0.04), Selection::EnvelopePeaks).unwrap();
    assert!((peaks.sigma_eff - 0.3).abs() < 0.02, "{}", peaks.sigma_eff);
    assert_eq!(Selection::for_order(2), Selection::EnvelopePeaks);
    assert_eq!(Selection::for_order(1), Selection::All);
}
