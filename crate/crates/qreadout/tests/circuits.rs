use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use qreadout::gridfn::{dft_coefficients, encode, fftn, GridFunction, GridSpec};
use qreadout::readout_qae::{build_shift_oracle, exact_target, grover_apply, KnownAmplitude, AmplitudeOracle, OracleKind, SimulatedOracle};
use qreadout::readout_sampling::extended_coefficients;
use qreadout::statevec::{Backend, Circuit, Control, Gate, Op, QubitSlice, StateVector};

fn normalized(v: Vec<(f64, f64)>) -> Vec<Complex64> {
    let z: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
    let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1e-3);
    z.into_iter().map(|c| c / n).collect()
}

fn state_strategy(n: usize) -> impl Strategy<Value = StateVector<f64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n).prop_filter_map("nonzero", |v| {
        if v.iter().all(|(a, b)| a.abs() + b.abs() < 1e-3) {
            return None;
        }
        StateVector::from_amplitudes(normalized(v)).ok()
    })
}

fn op_strategy(n: usize) -> impl Strategy<Value = Op<f64>> {
    (0..n, 1..=n, 0..7u8, prop::collection::vec(0..3u8, n), -3.0..3.0f64, 0..64usize, any::<bool>()).prop_flat_map(
        move |(start, len, kind, ctl, angle, j, inv)| {
            let len = len.min(n - start);
            let slice = QubitSlice::new(start, len);
            let controls: Vec<Control> = (0..n)
                .filter(|q| *q < start || *q >= start + len)
                .filter_map(|q| match ctl[q] {
                    1 => Some(Control::on(q)),
                    2 => Some(Control::off(q)),
                    _ => None,
                })
                .collect();
            let psi = prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << len);
            psi.prop_map(move |p| match kind {
                0 => Op::Gate {
                    gate: [Gate::H, Gate::X, Gate::Z, Gate::Ry(angle), Gate::Phase(angle)][j % 5],
                    target: start,
                    controls: controls.clone(),
                },
                1 => Op::Qft {
                    slice,
                    inverse: inv,
                    controls: controls.clone(),
                },
                2 => Op::ModAdd {
                    slice,
                    j: j % slice.size(),
                    inverse: inv,
                    controls: controls.clone(),
                },
                3 => Op::Increment {
                    slice,
                    inverse: inv,
                    controls: controls.clone(),
                },
                4 => Op::StatePrep {
                    qubits: slice.qubits(),
                    psi: Arc::new(normalized(p)),
                    inverse: inv,
                    controls: controls.clone(),
                },
                5 => Op::ReflectZero { qubits: slice.qubits() },
                _ => Op::GlobalPhase {
                    phase: angle,
                    controls: controls.clone(),
                },
            })
        },
    )
}

fn circuit_and_state() -> impl Strategy<Value = (Circuit<f64>, StateVector<f64>)> {
    (1..=6usize).prop_flat_map(|n| {
        (prop::collection::vec(op_strategy(n), 1..8), state_strategy(n)).prop_map(|(ops, s)| {
            let mut c = Circuit::new();
            for op in ops {
                c.push(op);
            }
            (c, s)
        })
    })
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backends_agree_and_preserve_norm((c, s) in circuit_and_state()) {
        let (mut a, mut b) = (s.clone(), s);
        c.apply(&mut a, Backend::GateLevel).unwrap();
        c.apply(&mut b, Backend::Fast).unwrap();
        prop_assert!(max_diff(a.amplitudes(), b.amplitudes()) < 1e-10);
        prop_assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circuit_then_inverse_is_identity((c, s) in circuit_and_state()) {
        let mut a = s.clone();
        c.apply(&mut a, Backend::Fast).unwrap();
        c.inverse().apply(&mut a, Backend::Fast).unwrap();
        prop_assert!(max_diff(a.amplitudes(), s.amplitudes()) < 1e-10);
    }

    #[test]
    fn inverse_qft_is_orthonormal_dft(s in (1..=7usize).prop_flat_map(state_strategy)) {
        let n = s.n_qubits();
        let mut expect = s.amplitudes().to_vec();
        fftn(&mut expect, &[1 << n], false);
        for backend in [Backend::GateLevel, Backend::Fast] {
            let mut t = s.clone();
            t.qft(QubitSlice::new(0, n), true, backend).unwrap();
            prop_assert!(max_diff(t.amplitudes(), &expect) < 1e-10);
        }
    }

    #[test]
    fn adders_compose(n in 1..=6usize, j1 in 0..64usize, j2 in 0..64usize, k in 0..64usize) {
        let size = 1usize << n;
        let (j1, j2, k) = (j1 % size, j2 % size, k % size);
        for backend in [Backend::GateLevel, Backend::Fast] {
            let mut s = StateVector::<f64>::basis(n, k).unwrap();
            s.modular_add(QubitSlice::new(0, n), j1, false, backend).unwrap();
            s.modular_add(QubitSlice::new(0, n), j2, false, backend).unwrap();
            prop_assert!((s.amplitude((k + j1 + j2) % size).re - 1.0).abs() < 1e-10);
            s.modular_add(QubitSlice::new(0, n), j1, true, backend).unwrap();
            prop_assert!((s.amplitude((k + j2) % size).re - 1.0).abs() < 1e-10);
            s.increment(QubitSlice::new(0, n), &[], backend).unwrap();
            prop_assert!((s.amplitude((k + j2 + 1) % size).re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn even_extension_has_real_spectrum(v in prop::collection::vec(-1.0..1.0f64, 16), q in 1..=4usize) {
        let n = 1usize << q;
        prop_assume!(v[..n].iter().any(|x| x.abs() > 1e-3));
        let f = GridFunction::new(GridSpec::unit(&[q]).unwrap(), v[..n].to_vec()).unwrap();
        let state = encode(&f).unwrap();
        let (_, chat, imag) = extended_coefficients(&state).unwrap();
        prop_assert!(imag < 1e-12);
        for backend in [Backend::GateLevel, Backend::Fast] {
            let mut s = StateVector::embed_real(q + 1, state.amplitudes()).unwrap();
            s.even_extension(QubitSlice::new(0, q), q, backend).unwrap();
            s.qft(QubitSlice::new(0, q + 1), true, backend).unwrap();
            for (a, c) in s.amplitudes().iter().zip(&chat) {
                prop_assert!((a - Complex64::new(*c, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn grover_law_holds_on_circuits(v in prop::collection::vec(0.05..1.0f64, 8), b in -0.9..0.9f64, k in 0..4u64, idx in 0..8usize, kind in 0..4u8) {
        let state = encode(&GridFunction::new(GridSpec::unit(&[3]).unwrap(), v).unwrap()).unwrap();
        let (kind, index) = match kind {
            0 => (OracleKind::RealSpace, vec![idx]),
            1 => (OracleKind::FourierRe, vec![idx]),
            2 => (OracleKind::FourierIm, vec![idx]),
            _ => (OracleKind::Extended, vec![idx * 2]),
        };
        let a = exact_target(&state, kind, &index).unwrap();
        let o = build_shift_oracle(&state, kind, &index, b).unwrap();
        let want = ((2 * k + 1) as f64 * ((a + b) / 2.0).asin()).sin();
        for backend in [Backend::GateLevel, Backend::Fast] {
            let mut sv = StateVector::zero(o.n_qubits()).unwrap();
            o.circuit().apply(&mut sv, backend).unwrap();
            grover_apply(&o, &mut sv, k, backend).unwrap();
            prop_assert!((sv.amplitude(0) - Complex64::new(want, 0.0)).norm() < 1e-10);
        }
        let mut sim = SimulatedOracle { oracle: o, backend: Backend::Fast };
        let p = sim.good_probability(b, k).unwrap();
        prop_assert!((p - KnownAmplitude(a).good_probability(b, k).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn post_selection_matches_marginal(s in (2..=5usize).prop_flat_map(state_strategy), outcome in any::<bool>()) {
        let p = s.probabilities(&[0]).unwrap();
        let (post, prob) = s.post_select(&[0], usize::from(outcome)).unwrap();
        prop_assert!((prob - p[usize::from(outcome)]).abs() < 1e-12);
        prop_assert!((post.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_deterministic(s in (1..=4usize).prop_flat_map(state_strategy), seed in any::<u64>()) {
        let all: Vec<usize> = (0..s.n_qubits()).collect();
        let a = s.sample(&all, 500, seed).unwrap();
        let b = s.sample(&all, 500, seed).unwrap();
        prop_assert_eq!(a.counts(), b.counts());
        prop_assert_eq!(a.shots(), 500);
    }
}

#[test]
fn magnitude_oracle_targets_are_dft_parts() {
    let f = GridFunction::from_fn(GridSpec::unit(&[2, 2]).unwrap(), |x: &[f64]| 1.0 + x[0] - 0.5 * x[1] * x[1]).unwrap();
    let state = encode(&f).unwrap();
    let c = dft_coefficients(&state);
    for k in 0..16 {
        let idx = [k % 4, k / 4];
        assert_eq!(exact_target(&state, OracleKind::FourierRe, &idx).unwrap(), c.coeffs()[k].re);
        assert_eq!(exact_target(&state, OracleKind::FourierIm, &idx).unwrap(), c.coeffs()[k].im);
    }
}
