use std::f64::consts::PI;

use biyb_core::algebra::{CMat, LieContext, RMat};
use biyb_core::group::matrix_exp;
use biyb_core::model::snapshot::Snapshot;
use biyb_core::model::{invert_solution, FieldState, InitialDataSpec, ModelParams, SigmaModel, Worldsheet};
use num_complex::Complex64;

fn max_diff(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Left- plus right-moving wave in the Cartan direction.
fn phi(tau: f64, sigma: f64) -> (f64, f64) {
    let v = 0.4 * (sigma - tau).sin() + 0.3 * (2.0 * (sigma + tau)).cos();
    let dt = -0.4 * (sigma - tau).cos() - 0.6 * (2.0 * (sigma + tau)).sin();
    (v, dt)
}

fn model(n: usize, dt: f64, params: ModelParams) -> SigmaModel {
    let ctx = LieContext::su(2).unwrap();
    SigmaModel::new(ctx, params, Worldsheet::new(n, 2.0 * PI, dt).unwrap())
}

fn abelian_profile(model: &SigmaModel, tau: f64) -> (Vec<CMat>, RMat) {
    let basis = &model.ctx.basis;
    let h = basis.unit(basis.cartan_index(0));
    let x = basis.to_matrix(h.as_slice());
    let n = model.sheet.n_sigma;
    let mut velocity = RMat::zeros(model.ctx.dim(), n);
    let g = (0..n)
        .map(|j| {
            let (v, dv) = phi(tau, j as f64 * model.sheet.dsigma());
            velocity.set_column(j, &(&h * dv));
            matrix_exp(&(&x * Complex64::new(v, 0.0)))
        })
        .collect();
    (g, velocity)
}

#[test]
fn cartan_waves_evolve_exactly() {
    let params = ModelParams::new(0.3, 0.2).unwrap();
    let m = model(32, 1.0 / 256.0, params);
    let (g0, v0) = abelian_profile(&m, 0.0);
    let initial = m.state_from_profiles(0.0, g0, &v0).unwrap();
    let history = m.evolve(initial, 0.5).unwrap();
    let last = history.last();
    let (exact, _) = abelian_profile(&m, last.tau);
    let err = max_diff(&last.g, &exact);
    assert!(err < 1e-8, "abelian evolution error {err:.3e}");
}

#[test]
fn vacuum_stays_put() {
    let m = model(16, 0.05, ModelParams::new(0.5, 0.5).unwrap());
    let vac = FieldState::vacuum(&m.ctx, 16);
    let history = m.evolve(vac.clone(), 0.5).unwrap();
    assert_eq!(history.last().g, vac.g);
    assert_eq!(history.last().j_plus, vac.j_plus);
}

#[test]
fn inverted_run_solves_the_swapped_model() {
    let params = ModelParams::new(0.3, 0.2).unwrap();
    let m = model(32, 1.0 / 64.0, params);
    let initial = m.make_initial_data(&InitialDataSpec::default()).unwrap();
    let direct = m.evolve(initial.clone(), 0.25).unwrap();

    let (inv0, swapped) = invert_solution(&m.ctx, &params, &initial);
    assert_eq!(swapped, ModelParams::new(0.2, 0.3).unwrap());
    let ms = m.with_params(swapped);
    let other = ms.evolve(inv0, 0.25).unwrap();

    let (mapped, _) = invert_solution(&m.ctx, &params, direct.last());
    let err = max_diff(&mapped.g, &other.last().g);
    assert!(err < 1e-6, "inverted trajectory differs by {err:.3e}");
    assert!(ms.constraint_drift(other.last()).unwrap() < 1e-6);
}

#[test]
fn snapshots_round_trip_bit_for_bit() {
    let m = model(16, 0.05, ModelParams::new(0.3, 0.2).unwrap());
    let state = m.make_initial_data(&InitialDataSpec::default()).unwrap();
    let snap = Snapshot {
        length: m.sheet.length,
        state,
    };
    assert_eq!(Snapshot::from_json(&snap.to_json().unwrap()).unwrap(), snap);
    let mut bytes = Vec::new();
    snap.write_binary(&mut bytes).unwrap();
    assert_eq!(Snapshot::read_binary(bytes.as_slice()).unwrap(), snap);
    bytes[0] ^= 1;
    assert!(Snapshot::read_binary(bytes.as_slice()).is_err());
}

#[test]
fn bad_worldsheets_are_rejected() {
    assert!(Worldsheet::new(12, 1.0, 0.01).is_err());
    assert!(Worldsheet::new(16, 1.0, 1.0).is_err());
    assert!(ModelParams::new(-0.1, 0.2).is_err());
}
