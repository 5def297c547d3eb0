use std::f64::consts::TAU;

use proptest::prelude::*;
use qreadout::burgers_tsr::{
    chain_norms2, continuous_norm2, expmv, initial_condition, pite_emulated_step, reference_solution, reference_step,
    spectral_derivative, tsr_run_with_reference, BurgersConfig, Generator, ReferenceKind,
};
use qreadout::gridfn::{GridFunction, GridSpec};
use qreadout::readout_sampling::Method;

fn small() -> BurgersConfig {
    BurgersConfig {
        qubits: 3,
        steps: 5,
        shots: None,
        ..BurgersConfig::default()
    }
}

#[test]
fn spectral_derivative_of_resolved_modes() {
    let spec = GridSpec::new(&[4, 4], &[TAU, TAU]).unwrap();
    let f = GridFunction::from_fn(spec.clone(), |x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos()).unwrap();
    let dx = spectral_derivative(&f, 0);
    let dy = spectral_derivative(&f, 1);
    for flat in 0..spec.len() {
        let p = spec.point(flat);
        assert!((dx[flat] - 3.0 * (3.0 * p[0]).cos() * (2.0 * p[1]).cos()).abs() < 1e-12);
        assert!((dy[flat] + 2.0 * (3.0 * p[0]).sin() * (2.0 * p[1]).sin()).abs() < 1e-12);
    }
}

#[test]
fn initial_energy() {
    let cfg = BurgersConfig::default();
    let u0 = initial_condition(&cfg).unwrap();
    // 2 * (1/2pi)^2 * int sin^2 = 2 * (1/2pi)^2 * 2 pi^2 = 1
    assert!((continuous_norm2(&u0) - 1.0).abs() < 1e-12);
}

#[test]
fn reference_chain_dissipates_energy() {
    let cfg = BurgersConfig {
        qubits: 4,
        ..BurgersConfig::default()
    };
    let chain = reference_solution(&cfg, ReferenceKind::MatrixFree).unwrap();
    let norms = chain_norms2(&cfg, &chain).unwrap();
    assert_eq!(norms.len(), cfg.steps + 1);
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn dense_and_matrix_free_references_agree() {
    let cfg = small();
    let a = reference_solution(&cfg, ReferenceKind::Dense).unwrap();
    let b = reference_solution(&cfg, ReferenceKind::MatrixFree).unwrap();
    for (x, y) in a.iter().zip(&b) {
        for (p, q) in x.iter().zip(y) {
            assert!((p - q).abs() < 1e-11);
        }
    }
}

#[test]
fn exact_pipeline_tracks_reference() {
    let cfg = small();
    let reference = reference_solution(&cfg, ReferenceKind::MatrixFree).unwrap();
    let trace = tsr_run_with_reference(&cfg, &reference).unwrap();
    assert!(trace.final_error() < 1e-10);
    assert!(trace.uniformity() < 1.5);
    let mut csv = Vec::new();
    trace.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("step,p_k,cumulative,l2ns_error,shots\n"));
    assert_eq!(text.lines().count(), cfg.steps + 1);
}

#[test]
fn sampled_runs_are_reproducible_and_noisier_in_real_space() {
    let base = BurgersConfig {
        qubits: 4,
        steps: 4,
        shots: Some(20_000),
        ..BurgersConfig::default()
    };
    let reference = reference_solution(&base, ReferenceKind::MatrixFree).unwrap();
    let fsr = tsr_run_with_reference(&base, &reference).unwrap();
    let again = tsr_run_with_reference(&base, &reference).unwrap();
    assert_eq!(fsr.final_error(), again.final_error());
    let rsr = tsr_run_with_reference(
        &BurgersConfig {
            method: Method::Rsr,
            ..base.clone()
        },
        &reference,
    )
    .unwrap();
    assert!(rsr.final_error() > fsr.final_error());
    assert!(fsr.total_shots() > 0.0);
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        BurgersConfig { dt: -0.1, ..BurgersConfig::default() },
        BurgersConfig { kappa: 0.0, ..BurgersConfig::default() },
        BurgersConfig { qubits: 1, ..BurgersConfig::default() },
        BurgersConfig { method: Method::Fsqae, ..BurgersConfig::default() },
    ] {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pite_step_is_normalized_with_consistent_probability(seed in prop::collection::vec(-1.0..1.0f64, 32)) {
        let cfg = BurgersConfig { qubits: 2, ..BurgersConfig::default() };
        let gen = Generator::new(&initial_condition(&BurgersConfig { qubits: 2, ..cfg.clone() }).unwrap(), cfg.nu);
        let n = seed.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let psi: Vec<f64> = seed.iter().map(|v| v / n).collect();
        let (next, p) = pite_emulated_step(&psi, &gen, cfg.dt, cfg.kappa).unwrap();
        let raw = reference_step(&gen, &psi, cfg.dt);
        let norm2: f64 = raw.iter().map(|v| v * v).sum();
        prop_assert!((p - cfg.kappa * norm2).abs() < 1e-10);
        prop_assert!((next.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-10);
        let mv = expmv(&gen, &psi, cfg.dt);
        for (a, b) in mv.iter().zip(&raw) {
            prop_assert!((a - b).abs() < 1e-11);
        }
    }
}
