use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use tripartite_dce::dynamics::*;
use tripartite_dce::model::build_h0;
use tripartite_dce::operators::{CMatrix, CVector, HilbertConfig};
use tripartite_dce::spectrum::{transition_point, DressedSpectrum, Transition};
use tripartite_dce::{Coupling, SystemParams};

fn fig1(n_tr: usize) -> SystemParams {
    SystemParams { omega0: 0.95, omega_a: 0.6, g: 0.05, h: 0.05, eps: 0.095, eta: 1.586, n_tr, ..Default::default() }
}

fn fixed(steps: usize) -> EvolveOptions {
    EvolveOptions { steps_per_period: steps, richardson: false, ..Default::default() }
}

fn ground(p: &SystemParams) -> CVector {
    bare_state(&p.hilbert().unwrap(), 0, 0, 0).unwrap()
}

fn field_state(h: &HilbertConfig, amps: &[f64]) -> CVector {
    let mut v = CVector::zeros(h.dim());
    for (n, a) in amps.iter().enumerate() {
        v[h.index(0, 0, n)] = Complex64::new(*a, 0.0);
    }
    v
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn coherent_light_is_poissonian() {
    let h = HilbertConfig::new(30).unwrap();
    // |α|² = 1
    let amps: Vec<f64> = (0..=30).map(|n| (-0.5f64).exp() / factorial(n).sqrt()).collect();
    let psi = field_state(&h, &amps);
    let rho = QuantumState::Mixed(pure_density(&psi));
    let o = observables(&rho, &h, &[], MandelForm::Standard).unwrap();
    assert!((o.n_avg - 1.0).abs() < 1e-10);
    assert!(o.q_mandel.abs() < 1e-3, "Q = {}", o.q_mandel);
}

#[test]
fn squeezed_vacuum_is_super_poissonian() {
    let h = HilbertConfig::new(30).unwrap();
    let r: f64 = 0.3;
    let mut amps = vec![0.0; 31];
    for m in 0..=15 {
        amps[2 * m] = (-r.tanh()).powi(m as i32) * factorial(2 * m).sqrt()
            / (2f64.powi(m as i32) * factorial(m))
            / r.cosh().sqrt();
    }
    let o = observables(&QuantumState::Pure(field_state(&h, &amps)), &h, &[], MandelForm::Standard).unwrap();
    assert!((o.n_avg - r.sinh().powi(2)).abs() < 1e-10);
    let expected = 1.0 + 2.0 * o.n_avg;
    assert!(((o.q_mandel - expected) / expected).abs() < 0.02, "Q = {} vs {expected}", o.q_mandel);
}

#[test]
fn isolated_qubit_decay() {
    let gamma = 0.01;
    let p = SystemParams { g: 0.0, h: 0.0, eps: 0.0, eta: 0.0, gamma, n_tr: 2, ..Default::default() };
    let psi0 = bare_state(&p.hilbert().unwrap(), 1, 0, 0).unwrap();
    let tr = evolve_lindblad(&p, &pure_density(&psi0), 200.0, 5.0, &[], &[], &EvolveOptions::default()).unwrap();
    for (t, o) in tr.times.iter().zip(&tr.records) {
        assert!((o.se_t - (-gamma * t).exp()).abs() < 1e-6, "t = {t}: {}", o.se_t);
    }
}

#[test]
fn energy_conserved_without_modulation() {
    let p = SystemParams { eps: 0.0, eta: 20.0, ..fig1(6) };
    let hil = p.hilbert().unwrap();
    let mut psi = CVector::zeros(hil.dim());
    psi[hil.index(0, 0, 2)] = Complex64::new(0.6, 0.0);
    psi[hil.index(1, 0, 0)] = Complex64::new(0.0, 0.8);
    let h0 = build_h0(&p).unwrap();
    let energy = |v: &CVector| v.dotc(&(&h0 * v)).re;
    // 50 periods of 200 steps
    let period = 2.0 * PI / p.eta;
    let tr = evolve_schrodinger(&p, &psi, 50.0 * period, 10.0 * period, &[], &fixed(200)).unwrap();
    let QuantumState::Pure(last) = &tr.final_state else { panic!("pure run") };
    assert!((energy(last) - energy(&psi)).abs() < 1e-8);
}

#[test]
fn stationary_dressed_state_without_modulation() {
    let p = SystemParams { eps: 0.0, ..fig1(6) };
    let spec = DressedSpectrum::compute(&p, Coupling::Full).unwrap();
    let targets = fidelity_targets(&spec, &["A1,1".parse().unwrap(), "A0,0".parse().unwrap()]).unwrap();
    let tr = evolve_schrodinger(&p, &targets[0].state, 400.0, 40.0, &targets, &EvolveOptions::default()).unwrap();
    for o in &tr.records {
        assert!((o.fidelities[0] - 1.0).abs() < 1e-8);
        assert!(o.fidelities[1] < 1e-8);
    }
}

#[test]
fn dressed_full_mode_matches_lab_frame() {
    let p = fig1(4);
    let spec = DressedSpectrum::compute(&p, Coupling::Full).unwrap();
    let period = 2.0 * PI / p.eta;
    let mut a0 = CVector::zeros(spec.dim());
    a0[0] = Complex64::new(1.0, 0.0);
    let opts = EvolveOptions { steps_per_period: 400, ..Default::default() };
    let amp =
        evolve_dressed_amplitudes(&spec, p.eps, p.eta, &a0, 200.0 * period, 20.0 * period, AmplitudeMode::Full, &opts)
            .unwrap();
    let targets: Vec<FidelityTarget> =
        (0..spec.dim()).map(|l| FidelityTarget { label: format!("l{l}"), state: spec.state(l) }).collect();
    let psi0 = spec.state(0);
    let tr = evolve_schrodinger(&p, &psi0, 200.0 * period, 20.0 * period, &targets, &EvolveOptions::default()).unwrap();
    assert_eq!(tr.times.len(), amp.times.len());
    for (k, o) in tr.records.iter().enumerate() {
        assert!((tr.times[k] - amp.times[k]).abs() < 1e-9);
        for l in 0..spec.dim() {
            let d = (o.fidelities[l] - amp.amplitudes[k][l].norm_sqr()).abs();
            assert!(d < 1e-6, "sample {k}, level {l}: {d:e}");
        }
    }
}

fn resonance(p: &SystemParams) -> (DressedSpectrum, usize, usize, f64, f64) {
    let spec = DressedSpectrum::compute(p, Coupling::Full).unwrap();
    let t = Transition::new("A0,0".parse().unwrap(), "A1,1".parse().unwrap());
    let pt = transition_point(&spec, &t, p.eps).unwrap();
    (spec, pt.source.index, pt.target.index, pt.rate, pt.eta_r)
}

#[test]
fn two_level_rwa_rabi_oscillation() {
    // weak drive: off-resonant levels shift the Rabi frequency only at second order in eps
    let p = SystemParams { eps: 0.019, ..fig1(2) };
    let (spec, m, l, r, eta) = resonance(&p);
    let mut a0 = CVector::zeros(spec.dim());
    a0[m] = Complex64::new(1.0, 0.0);
    let t_end = PI / r;
    let amp = evolve_dressed_amplitudes(
        &spec,
        p.eps,
        eta,
        &a0,
        t_end,
        t_end / 200.0,
        AmplitudeMode::Rwa,
        &EvolveOptions::default(),
    )
    .unwrap();
    let (pm, pl) = (amp.probability(m), amp.probability(l));
    for (k, t) in amp.times.iter().enumerate() {
        assert!((pm[k] - (r * t).cos().powi(2)).abs() < 0.02, "t = {t}: {} vs cos²", pm[k]);
        assert!((pl[k] - (r * t).sin().powi(2)).abs() < 0.02, "t = {t}: {} vs sin²", pl[k]);
    }
}

#[test]
fn rwa_amplitudes_follow_schrodinger_in_fig1_regime() {
    let p = fig1(4);
    let (spec, m, l, r, eta) = resonance(&p);
    let p = SystemParams { eta, ..p };
    let t_end = PI / r;
    let sample = 25.0 * 2.0 * PI / eta;
    let mut a0 = CVector::zeros(spec.dim());
    a0[m] = Complex64::new(1.0, 0.0);
    let amp =
        evolve_dressed_amplitudes(&spec, p.eps, eta, &a0, t_end, sample, AmplitudeMode::Rwa, &EvolveOptions::default())
            .unwrap();
    let targets = vec![
        FidelityTarget { label: "m".into(), state: spec.state(m) },
        FidelityTarget { label: "l".into(), state: spec.state(l) },
    ];
    let tr = evolve_schrodinger(&p, &spec.state(m), t_end, sample, &targets, &EvolveOptions::default()).unwrap();
    let n = tr.times.len().min(amp.times.len());
    for k in 0..n {
        assert!((tr.times[k] - amp.times[k]).abs() < 1e-6 * tr.times[k].max(1.0));
        let o = &tr.records[k];
        assert!((o.fidelities[0] - amp.probability(m)[k]).abs() < 0.05);
        assert!((o.fidelities[1] - amp.probability(l)[k]).abs() < 0.05);
    }
}

#[test]
fn rwa_mode_rejects_strong_modulation() {
    let p = fig1(2);
    let spec = DressedSpectrum::compute(&p, Coupling::Full).unwrap();
    let mut a0 = CVector::zeros(spec.dim());
    a0[0] = Complex64::new(1.0, 0.0);
    let res = evolve_dressed_amplitudes(&spec, 1.0, 1.0, &a0, 10.0, 1.0, AmplitudeMode::Rwa, &EvolveOptions::default());
    assert!(res.is_err());
}

#[test]
fn zero_modulation_keeps_amplitudes() {
    let p = fig1(3);
    let spec = DressedSpectrum::compute(&p, Coupling::Full).unwrap();
    let mut a0 = CVector::zeros(spec.dim());
    a0[1] = Complex64::new(0.6, 0.0);
    a0[2] = Complex64::new(0.0, 0.8);
    for mode in [AmplitudeMode::Full, AmplitudeMode::Rwa] {
        let amp =
            evolve_dressed_amplitudes(&spec, 0.0, p.eta, &a0, 100.0, 10.0, mode, &EvolveOptions::default()).unwrap();
        for a in &amp.amplitudes {
            assert!((a - &a0).norm() < 1e-14);
        }
    }
}

#[test]
fn lindblad_with_reference_rates_stays_physical() {
    let p = SystemParams { eta: 1.5864, ..fig1(3) }.with_reference_dissipation();
    let rho0 = pure_density(&ground(&p));
    let tr = evolve_lindblad(&p, &rho0, 2000.0, 50.0, &[], &[], &EvolveOptions::default()).unwrap();
    let d = &tr.diagnostics;
    assert!(d.max_drift < 1e-8);
    assert!(d.min_eigenvalue.unwrap() >= -1e-8);
    assert!(d.max_hermitian_deviation.unwrap() < 1e-10);
    assert!(d.richardson_change.unwrap() < 1e-6);
}

fn random_params() -> impl Strategy<Value = SystemParams> {
    (0.5..1.5f64, 0.5..1.5f64, 0.0..0.1f64, 0.0..0.1f64, 0.0..0.2f64, 1.0..3.0f64).prop_map(
        |(omega0, omega_a, g, h, eps, eta)| SystemParams {
            omega0,
            omega_a,
            g,
            h,
            eps,
            eta,
            n_tr: 3,
            ..Default::default()
        },
    )
}

fn random_state(dim: usize, seed: &[f64]) -> CVector {
    let v = CVector::from_iterator(
        dim,
        (0..dim).map(|i| Complex64::new(seed[i % seed.len()] + 0.1 * i as f64, seed[(i + 1) % seed.len()])),
    );
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn unitary_limit_of_lindblad(p in random_params(), seed in proptest::collection::vec(-1.0..1.0f64, 4)) {
        let psi0 = random_state(p.hilbert().unwrap().dim(), &seed);
        let t_end = 10.0 * 2.0 * PI / p.eta;
        let opts = fixed(3000);
        let spec = DressedSpectrum::compute(&p, Coupling::Full).unwrap();
        let targets = fidelity_targets(&spec, &["A0,0".parse().unwrap(), "A1,1".parse().unwrap()]).unwrap();
        let pure = evolve_schrodinger(&p, &psi0, t_end, t_end / 10.0, &targets, &opts).unwrap();
        let mixed = evolve_lindblad(&p, &pure_density(&psi0), t_end, t_end / 10.0, &targets, &[], &opts).unwrap();
        prop_assert_eq!(pure.times.len(), mixed.times.len());
        for (a, b) in pure.records.iter().zip(&mixed.records) {
            prop_assert!((a.n_avg - b.n_avg).abs() < 1e-7);
            prop_assert!((a.se_t - b.se_t).abs() < 1e-7);
            prop_assert!((a.se_a - b.se_a).abs() < 1e-7);
            prop_assert!((a.q_mandel - b.q_mandel).abs() < 1e-7 * (1.0 + 1.0 / a.n_avg.max(1e-3)));
            for (x, y) in a.fidelities.iter().zip(&b.fidelities) {
                prop_assert!((x - y).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn lindblad_invariants(
        p in random_params(),
        rates in proptest::collection::vec(0.0..0.05f64, 4),
        kappa in 0.0..0.02f64,
    ) {
        let p = SystemParams { gamma: rates[0], gamma_ph: rates[1], gamma_a: rates[2], gamma_ph_a: rates[3], ..p };
        let extra = [tripartite_dce::model::cavity_decay(&p, kappa).unwrap()];
        let t_end = 5.0 * 2.0 * PI / p.eta;
        let rho0 = pure_density(&bare_state(&p.hilbert().unwrap(), 1, 1, 1).unwrap());
        let tr = evolve_lindblad(&p, &rho0, t_end, t_end / 5.0, &[], &extra, &fixed(200)).unwrap();
        let d = &tr.diagnostics;
        prop_assert!(d.max_drift < 1e-8);
        prop_assert!(d.min_eigenvalue.unwrap() >= -1e-8);
        prop_assert!(d.max_hermitian_deviation.unwrap() < 1e-10);
        let QuantumState::Mixed(rho) = &tr.final_state else { panic!("mixed run") };
        let trace: Complex64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
        prop_assert!((trace.re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn total_excitation_identity(p in random_params(), seed in proptest::collection::vec(-1.0..1.0f64, 4)) {
        let psi0 = random_state(p.hilbert().unwrap().dim(), &seed);
        let tr = evolve_schrodinger(&p, &psi0, 4.0 * 2.0 * PI / p.eta, 2.0 * PI / p.eta, &[], &fixed(200)).unwrap();
        for o in &tr.records {
            prop_assert!((o.n_tot - o.n_avg - o.se_t - o.se_a).abs() < 1e-14);
            // populations sum to the squared norm, whose drift is bounded by the integrator check
            prop_assert!((o.populations.iter().sum::<f64>() - 1.0).abs() < 2.0 * DRIFT_TOL + 1e-12);
        }
    }
}

#[test]
fn mixed_and_pure_fidelity_agree() {
    let h = HilbertConfig::new(2).unwrap();
    let psi = random_state(h.dim(), &[0.3, -0.2, 0.7]);
    let target = random_state(h.dim(), &[0.1, 0.5]);
    let pure = QuantumState::Pure(psi.clone()).fidelity(&target);
    let mixed = QuantumState::Mixed(pure_density(&psi)).fidelity(&target);
    assert!((pure - mixed).abs() < 1e-14);
    let rho: CMatrix = pure_density(&psi);
    let re: DMatrix<f64> = rho.map(|z| z.re);
    assert!((re.trace() - 1.0).abs() < 1e-14);
}
