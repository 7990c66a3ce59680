use std::f64::consts::PI;

use biyb_core::algebra::{CMat, LieContext, RVec};
use biyb_core::group::{inverse, matrix_exp};
use biyb_core::lax::{lax_field, BiYangBaxter, SpectralValue, ZakharovMikhailov};
use biyb_core::model::{FieldPoint, FieldState, InitialDataSpec, ModelParams, SigmaModel, Worldsheet};
use biyb_core::spectral::{
    conserved_trace_drift, monodromy, path_mismatch, run_cascade, transport_checked, transport_extended,
    CascadeOptions, CascadeParams, MonodromyOptions, Patch, PathOrder, SeedLax,
};
use num_complex::Complex64;

fn max_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn su2() -> LieContext {
    LieContext::su(2).unwrap()
}

fn run(n: usize, params: ModelParams, t_final: f64) -> (SigmaModel, biyb_core::model::History) {
    let model = SigmaModel::new(su2(), params, Worldsheet::new(n, 2.0 * PI, 2.0 / n as f64).unwrap());
    let initial = model.make_initial_data(&InitialDataSpec::default()).unwrap();
    let history = model.evolve(initial, t_final).unwrap();
    (model, history)
}

/// `g = exp(phi H)` with `phi = f(tau + sigma) + h(tau - sigma)`, sampled
/// directly on a small block.
fn cartan_patch(ctx: &LieContext, h_step: f64, rows: usize, cols: usize) -> (Patch, RVec) {
    let basis = &ctx.basis;
    let e = basis.unit(basis.cartan_index(0));
    let x = basis.to_matrix(e.as_slice());
    let point = |tau: f64, sigma: f64| {
        let (u, v) = (tau + sigma, tau - sigma);
        let phi = 0.7 * u.sin() + 0.4 * (2.0 * v).cos();
        FieldPoint {
            g: matrix_exp(&(&x * Complex64::new(phi, 0.0))),
            a_plus: &e * (0.7 * u.cos()),
            a_minus: &e * (-0.8 * (2.0 * v).sin()),
        }
    };
    let patch = Patch {
        tau0: 0.0,
        dt: h_step,
        dsigma: h_step,
        rows: (0..rows)
            .map(|k| (0..cols).map(|j| point(k as f64 * h_step, j as f64 * h_step)).collect())
            .collect(),
    };
    (patch, e)
}

#[test]
fn abelian_transport_matches_closed_form() {
    let ctx = su2();
    let h = 1.0 / 128.0;
    let (patch, e) = cartan_patch(&ctx, h, 9, 65);
    let x = ctx.basis.to_matrix(e.as_slice());
    let zeta = SpectralValue::new(0.3, 0.6);
    let z = zeta.finite().unwrap();
    let one = Complex64::new(1.0, 0.0);
    // l^-1 d_± l = A_± / (1 ± zeta)
    let psi = |tau: f64, sigma: f64| {
        let (u, v) = (tau + sigma, tau - sigma);
        one * (0.7 * u.sin()) / (one + z) + one * (0.4 * (2.0 * v).cos()) / (one - z)
    };
    for order in [PathOrder::SigmaFirst, PathOrder::TauFirst] {
        let sol = transport_extended(&ZakharovMikhailov, &ctx, &patch, zeta, order).unwrap();
        let mut err: f64 = 0.0;
        for (k, row) in sol.l.iter().enumerate() {
            for (j, l) in row.iter().enumerate() {
                let d = psi(k as f64 * h, j as f64 * h) - psi(0.0, 0.0);
                err = err.max(max_diff(l, &matrix_exp(&(&x * d))));
            }
        }
        assert!(err < 1e-8, "{order:?}: {err:.3e}");
    }
}

#[test]
fn flat_zero_connection_transports_to_identity() {
    let ctx = su2();
    let vac = FieldState::vacuum(&ctx, 16);
    let model = SigmaModel::new(ctx.clone(), ModelParams::pcm(), Worldsheet::new(16, 1.0, 0.01).unwrap());
    let patch = Patch {
        tau0: 0.0,
        dt: 0.01,
        dsigma: 1.0 / 16.0,
        rows: vec![model.field_points(&vac); 5],
    };
    let (sol, mismatch) = transport_checked(&ZakharovMikhailov, &ctx, &patch, SpectralValue::new(0.2, 0.1), 0.0).unwrap();
    assert_eq!(mismatch, 0.0);
    let id = CMat::identity(2, 2);
    assert!(sol.l.iter().flatten().all(|l| *l == id));
}

#[test]
fn pcm_transport_at_zero_recovers_the_field() {
    // l = g(base)^-1 g when zeta = 0
    let errs: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| {
            let (model, history) = run(n, ModelParams::pcm(), 0.25);
            let patch = Patch::from_history(&model, &history, 0..history.len()).unwrap();
            let sol = transport_extended(&ZakharovMikhailov, &model.ctx, &patch, SpectralValue::real(0.0), PathOrder::SigmaFirst)
                .unwrap();
            let base = inverse(&patch.at(0, 0).g);
            let mut err: f64 = 0.0;
            for (k, row) in sol.l.iter().enumerate() {
                for (j, l) in row.iter().enumerate() {
                    err = err.max(max_diff(l, &(&base * &patch.at(k, j).g)));
                }
            }
            err
        })
        .collect();
    assert!(errs[1] < 1e-5, "{errs:?}");
    assert!(errs[0] / errs[1] > 8.0, "{errs:?}");
}

#[test]
fn curved_connection_fails_the_flatness_check() {
    let (model, history) = run(64, ModelParams::new(0.3, 0.2).unwrap(), 0.25);
    let patch = Patch::from_history(&model, &history, 0..history.len()).unwrap();
    let zeta = SpectralValue::new(0.4, 0.3);
    let good = BiYangBaxter::new(model.params);
    let bad = BiYangBaxter::perturbed(model.params);
    let a = transport_extended(&good, &model.ctx, &patch, zeta, PathOrder::SigmaFirst).unwrap();
    let b = transport_extended(&good, &model.ctx, &patch, zeta, PathOrder::TauFirst).unwrap();
    let flat = path_mismatch(&a, &b);
    assert!(flat < 1e-4, "{flat:.3e}");
    let err = transport_checked(&bad, &model.ctx, &patch, zeta, 100.0 * flat).unwrap_err();
    assert!(err.to_string().contains("path mismatch"), "{err}");
}

#[test]
fn monodromy_trace_is_independent_of_the_base_point() {
    let (model, history) = run(64, ModelParams::new(0.3, 0.2).unwrap(), 0.05);
    let pair = BiYangBaxter::new(model.params);
    let points = model.field_points(history.last());
    let sample = lax_field(&pair, &model.ctx, &points, SpectralValue::new(0.5, 0.2)).unwrap();
    let opts = MonodromyOptions::default();
    let (m0, _) = monodromy(&model.ctx, &model.grid, &sample, 0, &opts).unwrap();
    let (m5, _) = monodromy(&model.ctx, &model.grid, &sample, 5, &opts).unwrap();
    let d = (m0.trace() - m5.trace()).norm();
    assert!(d < 1e-10, "{d:.3e}");
    let tight = MonodromyOptions {
        max_substeps: 2,
        ..opts
    };
    assert!(monodromy(&model.ctx, &model.grid, &sample, 0, &tight).is_err());
}

#[test]
fn vacuum_trace_does_not_drift() {
    let model = SigmaModel::new(su2(), ModelParams::new(0.3, 0.2).unwrap(), Worldsheet::new(16, 2.0 * PI, 0.1).unwrap());
    let history = model.evolve(FieldState::vacuum(&model.ctx, 16), 0.5).unwrap();
    let pair = BiYangBaxter::new(model.params);
    let drift = conserved_trace_drift(&model, &history, &pair, &[SpectralValue::new(0.5, 0.0)], &MonodromyOptions::default())
        .unwrap();
    assert_eq!(drift.max_drift(), 0.0);
    assert!((drift.traces[0][0][0] - 2.0).abs() < 1e-14);
}

#[test]
fn zero_deformation_cascade_returns_the_input_up_to_a_constant() {
    let (model, history) = run(64, ModelParams::pcm(), 0.5);
    let patch = Patch::from_history(&model, &history, 0..history.len()).unwrap();
    let params = CascadeParams::new(0.0, 0.0).unwrap();
    let (report, s1, s2) = run_cascade(&model.ctx, &patch, params, &CascadeOptions::default()).unwrap();
    assert_eq!((report.alpha, report.beta), (0.0, 0.0));
    for out in [&s1.output, &s2.output] {
        // out = C g or (C g)^-1 with a constant C
        let spread = |f: &dyn Fn(&CMat, &CMat) -> CMat| {
            let c: Vec<CMat> = out
                .rows
                .iter()
                .flatten()
                .zip(patch.rows.iter().flatten())
                .map(|(o, p)| f(&o.g, &p.g))
                .collect();
            c.iter().map(|x| max_diff(x, &c[0])).fold(0.0, f64::max)
        };
        let left = spread(&|o, g| o * inverse(g));
        let right = spread(&|o, g| g * o);
        assert!(left.min(right) < 1e-4, "{left:.3e} {right:.3e}");
    }
}

#[test]
fn dressed_seed_is_reported_without_identities() {
    let (model, history) = run(32, ModelParams::pcm(), 0.5);
    let patch = Patch::from_history(&model, &history, 0..history.len()).unwrap();
    let opts = CascadeOptions {
        seed_lax: SeedLax::Dressed,
        ..CascadeOptions::default()
    };
    let (report, _, s2) = run_cascade(&model.ctx, &patch, CascadeParams::new(0.3, 0.2).unwrap(), &opts).unwrap();
    assert!(s2.diagnostics.identity.is_none());
    assert!(report.identity_residuals.final_.is_none());
    assert!(report.eom_residuals.output.is_finite());
}
