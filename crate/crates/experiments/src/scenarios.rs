//! One runner per subcommand; each returns its tables and verdict lines.

use heatlab::field::CoefficientField;
use heatlab::finsler::{self, DistanceField, Neighbourhood};
use heatlab::heatkernel::{eigendecompose, fourier_oracle, ondiag_bound, HeatKernelField};
use heatlab::kato::{
    consequence_q0q, form_bound_sweep, kato_norm_curve, miyadera_integral, weighted_l2_check, CheckStatus,
};
use heatlab::symbol::{self, sharp_constants};
use heatlab::twist;
use nalgebra::DVector;

use crate::config::{RunConfig, Scenario};
use crate::fit::{fit_gaussian_exponent, FitReport};
use crate::output::{Cell, Csv, Outputs};
use crate::pipeline::{
    distance_ablation, kernel_sweep, stability_for, twist_profile, verify_theorem1, verify_theorem2_with,
    PipelineError, Problem, Theorem1Report, Verdict, WorstSample,
};

pub fn run(cfg: &RunConfig) -> Result<Outputs, PipelineError> {
    let mut out = Outputs::default();
    out.line(format!("scenario: {}", cfg.scenario));
    match cfg.scenario {
        Scenario::Constants => constants(&mut out),
        Scenario::Kernel => kernel(cfg, &mut out)?,
        Scenario::Distance => distance(cfg, &mut out)?,
        Scenario::Kato => kato(cfg, &mut out)?,
        Scenario::Twist => twist_scenario(cfg, &mut out)?,
        Scenario::Verify => verify(cfg, &mut out)?,
    }
    Ok(out)
}

/// `min_λ(−λd + κλ^{2m}t)` by a logarithmic scan refined with golden
/// section search.
pub fn numeric_infimum(m: u32, kappa: f64, d: f64, t: f64) -> f64 {
    let f = |l: f64| -l * d + kappa * l.powi(2 * m as i32) * t;
    let count = 4000;
    let at = |i: usize| 10f64.powf(-8.0 + 16.0 * i as f64 / (count - 1) as f64);
    let best = (0..count).min_by(|&a, &b| f(at(a)).total_cmp(&f(at(b)))).unwrap_or(0);
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(count - 1)));
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

fn constants(out: &mut Outputs) {
    let mut table = Csv::new("constants", &["m", "sigma_m", "k_m"]);
    let mut identity = Csv::new("identity", &["m", "d", "t", "closed_form", "numeric", "relative_error"]);
    let mut worst: f64 = 0.0;
    for m in 1..=4u32 {
        let c = sharp_constants(m);
        table.row(&[Cell::I(i64::from(m)), Cell::F(c.sigma_m), Cell::F(c.k_m)]);
        for i in 0..10 {
            for j in 0..10 {
                let d = 10f64.powf(-1.0 + 2.0 * i as f64 / 9.0);
                let t = 10f64.powf(-3.0 + 3.0 * j as f64 / 9.0);
                let closed = twist::closed_form_exponent(m, c.k_m, d, t);
                let numeric = numeric_infimum(m, c.k_m, d, t);
                let rel = (numeric - closed).abs() / closed.abs();
                worst = worst.max(rel);
                identity.row(&[Cell::I(i64::from(m)), Cell::F(d), Cell::F(t), Cell::F(closed), Cell::F(numeric), Cell::F(rel)]);
            }
        }
    }
    out.line(format!("infimum identity worst relative error: {worst:e}"));
    out.line(format!("verdict: {}", if worst <= 1e-6 { "PASS" } else { "FAIL" }));
    out.tables.push(table);
    out.tables.push(identity);
}

fn fit_lines(out: &mut Outputs, label: &str, fit: &FitReport) {
    out.line(format!(
        "{label}: sigma_eff = {} (target {}, margin {}), residual {}, {} samples, t in [{}, {}], distance {}, selection {}",
        fit.sigma_eff,
        fit.sigma_m,
        fit.margin,
        fit.residual,
        fit.used,
        fit.t_window.0,
        fit.t_window.1,
        fit.distance_method,
        fit.selection.tag()
    ));
    if !fit.has_verdict() {
        out.line(format!("{label}: residual above the verdict limit, no verdict"));
    }
}

fn kernel(cfg: &RunConfig, out: &mut Outputs) -> Result<(), PipelineError> {
    let problem = Problem::build(cfg)?;
    let sd = eigendecompose(&problem.op).map_err(|e| PipelineError { stage: "spectral", message: e.to_string() })?;
    let sweep = kernel_sweep(&sd, cfg)?;
    let oracle_a = match (&cfg.coefficient, &cfg.potential, cfg.n) {
        (CoefficientField::Constant(a), None, 1) => Some(*a),
        _ => None,
    };
    let mut table = Csv::new("kernel", &["t", "x", "y", "value", "oracle"]);
    let mut worst: f64 = 0.0;
    for s in &sweep.field.samples {
        let oracle = match oracle_a {
            Some(a) => Some(
                fourier_oracle(cfg.m, a, s.t, s.y[0] - s.x[0])
                    .map_err(|e| PipelineError { stage: "oracle", message: e.to_string() })?,
            ),
            None => None,
        };
        if let Some(o) = oracle {
            worst = worst.max((s.value - o).abs());
        }
        table.row(&[
            Cell::F(s.t),
            Cell::S(join(&s.x)),
            Cell::S(join(&s.y)),
            Cell::F(s.value),
            oracle.map_or(Cell::Empty, Cell::F),
        ]);
    }
    out.line(format!("samples: {} (dropped below resolution: {})", sweep.field.samples.len(), sweep.dropped));
    if oracle_a.is_some() {
        out.line(format!("largest deviation from the whole-line oracle: {worst:e}"));
    }
    let diagonal = HeatKernelField {
        method: sweep.field.method,
        samples: sweep.field.samples.iter().filter(|s| s.x == s.y).cloned().collect(),
    };
    if let Ok(b) = ondiag_bound(&diagonal, cfg.m, cfg.n) {
        out.line(format!("on-diagonal constant c1 = {}, spread {}", b.c1, b.spread));
    }
    if cfg.n == 1 {
        let x = problem.grid.coord(0, sweep.source);
        let ys: Vec<f64> = sweep.targets.iter().map(|&j| problem.grid.coord(0, j)).collect();
        let d = DistanceField::closed_form_1d(&problem.spec, x, &ys)
            .map_err(|e| PipelineError { stage: "distance", message: e.to_string() })?;
        match fit_gaussian_exponent(&sweep.field, &d, cfg.m, cfg.n, cfg.t_window()) {
            Ok(fit) => {
                fit_lines(out, "fit", &fit);
                out.tables.push(fit_table(&[("finsler", &fit)]));
            }
            Err(e) => out.line(format!("fit: not available ({e})")),
        }
    }
    out.tables.push(table);
    Ok(())
}

fn fit_table(rows: &[(&str, &FitReport)]) -> Csv {
    let mut t = Csv::new(
        "fit",
        &["distance", "sigma_eff", "intercept", "residual", "t_min", "t_max", "sigma_m", "margin", "samples"],
    );
    for (name, f) in rows {
        t.row(&[
            Cell::S(format!("{name}:{}", f.distance_method)),
            Cell::F(f.sigma_eff),
            Cell::F(f.intercept),
            Cell::F(f.residual),
            Cell::F(f.t_window.0),
            Cell::F(f.t_window.1),
            Cell::F(f.sigma_m),
            Cell::F(f.margin),
            Cell::I(f.used as i64),
        ]);
    }
    t
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| crate::output::float(*x)).collect::<Vec<_>>().join(" ")
}

fn distance(cfg: &RunConfig, out: &mut Outputs) -> Result<(), PipelineError> {
    let problem = Problem::build(cfg)?;
    let err = |e: finsler::FinslerError| PipelineError { stage: "distance", message: e.to_string() };
    if cfg.n == 2 {
        let nb = if cfg.distance.neighbourhood == 32 { Neighbourhood::ThirtyTwo } else { Neighbourhood::Sixteen };
        let source = problem.grid.nearest(&cfg.source());
        let field = finsler::distance_lattice_2d(&problem.spec, &problem.grid, source, nb).map_err(err)?;
        let mut t = Csv::new("distance", &["x1", "x2", "d"]);
        for (p, d) in field.points.iter().zip(&field.distances) {
            t.row(&[Cell::F(p[0]), Cell::F(p[1]), Cell::F(*d)]);
        }
        out.line(format!("lattice distance from {:?} with {} neighbours", field.source, cfg.distance.neighbourhood));
        out.tables.push(t);
        return Ok(());
    }
    if !cfg.distance.pairs.is_empty() {
        let conv = finsler::dm_convergence_check(&problem.spec, &cfg.distance.pairs, &cfg.distance.m_values).map_err(err)?;
        let mut t = Csv::new("dm_ratios", &["y1", "y2", "d", "M", "ratio"]);
        for (p, (&(y1, y2), d)) in conv.pairs.iter().zip(&conv.distances).enumerate() {
            for (k, mb) in conv.m_values.iter().enumerate() {
                t.row(&[Cell::F(y1), Cell::F(y2), Cell::F(*d), Cell::F(*mb), Cell::F(conv.ratios[p][k])]);
            }
        }
        out.line(format!(
            "d_M/d monotone in M: {}, smallest ratio at the largest M: {}, all converged: {}",
            conv.is_monotone(1e-6),
            conv.final_min(),
            conv.all_converged
        ));
        out.tables.push(t);
    }
    let ablation = distance_ablation(cfg)?;
    fit_lines(out, "finsler fit", &ablation.finsler);
    fit_lines(out, "euclidean fit", &ablation.euclidean);
    out.line(format!("margin lost with |x - y|: {}", ablation.margin_loss()));
    out.tables.push(fit_table(&[("finsler", &ablation.finsler), ("euclidean", &ablation.euclidean)]));
    Ok(())
}

fn kato(cfg: &RunConfig, out: &mut Outputs) -> Result<(), PipelineError> {
    let problem = Problem::build(cfg)?;
    let err = |e: heatlab::kato::KatoError| PipelineError { stage: "kato", message: e.to_string() };
    let vminus = problem.vminus(cfg)?;
    let sweep = form_bound_sweep(&problem.op0, &vminus, &cfg.kato.epsilons).map_err(err)?;
    let mut fb = Csv::new("form_bound", &["eps", "c_eps"]);
    for (e, c) in sweep.epsilons.iter().zip(&sweep.c_eps) {
        fb.row(&[Cell::F(*e), Cell::F(*c)]);
    }
    out.line(format!("form bound finite: {}, non-increasing: {}", sweep.pass, sweep.is_non_increasing()));

    let curve = kato_norm_curve(&problem.op0, &vminus, &cfg.kato.lambdas).map_err(err)?;
    let mut kc = Csv::new("kato_curve", &["lambda", "kato_norm", "weighted_l2_norm"]);
    let mut all_pass = true;
    for (l, k) in curve.lambdas.iter().zip(&curve.norms) {
        let w = weighted_l2_check(&problem.op0, &vminus, *l).map_err(err)?;
        all_pass &= w.status != CheckStatus::Fail;
        kc.row(&[Cell::F(*l), Cell::F(*k), Cell::F(w.weighted_norm)]);
    }
    let first = curve.norms.first().copied().unwrap_or(0.0);
    let last = curve.norms.last().copied().unwrap_or(0.0);
    out.line(format!(
        "Kato norm non-increasing: {}, final/initial: {}, duality gap: {:e}",
        curve.is_non_increasing(1e-10),
        if first > 0.0 { last / first } else { 0.0 },
        curve.max_duality_gap()
    ));
    out.line(format!("weighted L2 check passes at every lambda: {all_pass}"));

    let sd0 = eigendecompose(&problem.op0).map_err(|e| PipelineError { stage: "spectral", message: e.to_string() })?;
    let centre = problem.grid.nearest(&cfg.source());
    let mut u = DVector::zeros(problem.grid.len());
    u[centre] = 1.0 / problem.op0.weight();
    let mut mt = Csv::new("miyadera", &["delta", "value", "ratio", "converged"]);
    for &delta in &cfg.kato.deltas {
        let r = miyadera_integral(&sd0, &vminus, delta, &u).map_err(err)?;
        mt.row(&[Cell::F(delta), Cell::F(r.value), Cell::F(r.ratio), Cell::I(i64::from(r.converged))]);
    }

    if problem.potential.is_some() {
        let eps = cfg.kato.epsilons[cfg.kato.epsilons.len() / 2];
        let c = heatlab::kato::form_bound(&problem.op0, &vminus, eps).map_err(err)?;
        let q = consequence_q0q(&problem.op, &problem.op0, eps, c, cfg.seed).map_err(err)?;
        out.line(format!("Q0 <= (Q + c)/(1 - eps) at eps = {eps}: {} (seed {})", q.holds, cfg.seed));
    }
    out.tables.push(fb);
    out.tables.push(kc);
    out.tables.push(mt);
    Ok(())
}

fn twist_scenario(cfg: &RunConfig, out: &mut Outputs) -> Result<(), PipelineError> {
    let problem = Problem::build(cfg)?;
    let err = |e: twist::TwistError| PipelineError { stage: "twist", message: e.to_string() };
    let phi = twist_profile(cfg, &problem.spec, &problem.grid)?;
    let r = twist::growth_fit(&problem.op, &phi, &cfg.lambda_grid()).map_err(err)?;
    let mut t = Csv::new("twist", &["lambda", "k", "model_fit"]);
    for (l, k) in r.lambdas.iter().zip(&r.k) {
        t.row(&[Cell::F(*l), Cell::F(*k), Cell::F(r.model(*l))]);
    }
    out.line(format!(
        "kappa = {} (k_m = {}, excess {}), intercept {}, residual {}, reliable: {}",
        r.kappa, r.k_m, r.excess, r.intercept, r.residual, r.reliable
    ));
    out.line(format!(
        "sigma(kappa) = {} against sigma_m = {}",
        symbol::sigma_for_growth(cfg.m, r.kappa),
        sharp_constants(cfg.m).sigma_m
    ));
    out.tables.push(t);
    Ok(())
}

fn sample_line(label: &str, w: &WorstSample) -> String {
    format!(
        "{label}: t = {}, x = {}, y = {}, |K| = {}, d = {}, bound = {}, ratio = {}",
        crate::output::float(w.t),
        join(&w.x),
        join(&w.y),
        crate::output::float(w.abs_k),
        crate::output::float(w.d),
        crate::output::float(w.bound),
        crate::output::float(w.ratio())
    )
}

fn theorem1_lines(out: &mut Outputs, r: &Theorem1Report, target: f64) {
    fit_lines(out, "fit", &r.fit);
    out.line(format!("strong convexity: smallest gamma-form eigenvalue {}", r.convexity_worst));
    out.line(format!("form bound certified over eps = {:?}", r.certificate.epsilons));
    out.line(format!(
        "epsilon = {} (tolerance {}), sigma used = {}, Gamma = {}, M = {}",
        crate::output::float(r.epsilon),
        r.tolerance,
        crate::output::float(target - r.epsilon),
        crate::output::float(r.gamma),
        r.m_bound
    ));
    out.line(format!("samples: {} (dropped below resolution: {})", r.samples, r.dropped));
    out.line(sample_line("worst sample", &r.worst));
    out.line(format!(
        "twisting: kappa = {}, residual {}, prefactor {}",
        r.twist.kappa, r.twist.residual, r.prefactor
    ));
    out.line(sample_line("worst sample against the twisting bound", &r.bound_worst));
    for reason in &r.reasons {
        out.line(format!("reason: {reason}"));
    }
}

fn samples_table(r: &Theorem1Report) -> Csv {
    let mut t = Csv::new("samples", &["t", "x", "y", "abs_k", "d_m", "bound"]);
    for w in &r.checked {
        t.row(&[Cell::F(w.t), Cell::F(w.x[0]), Cell::F(w.y[0]), Cell::F(w.abs_k), Cell::F(w.d), Cell::F(w.bound)]);
    }
    t
}

fn verify(cfg: &RunConfig, out: &mut Outputs) -> Result<(), PipelineError> {
    let sigma_m = sharp_constants(cfg.m).sigma_m;
    if cfg.verify.perturbation.is_none() {
        let r = verify_theorem1(cfg)?;
        out.line(format!("Gaussian bound with sharp constant: {}", r.verdict.tag()));
        theorem1_lines(out, &r, sigma_m);
        out.tables.push(samples_table(&r));
        return Ok(());
    }
    let stability = stability_for(cfg)?;
    let mut st = Csv::new("stability", &["delta", "kappa", "delta_kappa", "ratio", "intercept_drift"]);
    for e in &stability.entries {
        st.row(&[Cell::F(e.delta), Cell::F(e.kappa), Cell::F(e.delta_kappa), Cell::F(e.ratio), Cell::F(e.intercept_drift)]);
    }
    let r = verify_theorem2_with(cfg, stability)?;
    out.line(format!("perturbed Gaussian bound: {}", r.verdict.tag()));
    if r.verdict == Verdict::OutOfRegime {
        out.line(format!(
            "delta = {} lies beyond the calibrated range {:?}",
            r.delta, cfg.verify.deltas
        ));
    }
    out.line(format!(
        "reference kappa {}, c_kappa {}, spread {}, c_emp {}, delta {}, target sigma {}",
        r.stability.reference.kappa, r.c_kappa, r.stability.ratio_spread, r.c_emp, r.delta, r.target
    ));
    theorem1_lines(out, &r.perturbed, r.target);
    out.tables.push(st);
    out.tables.push(samples_table(&r.perturbed));
    Ok(())
}
