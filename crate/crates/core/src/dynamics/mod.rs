//! Time evolution under the modulated Hamiltonian: Schrödinger and Lindblad propagation in the
//! product basis, and the amplitude equations in the dressed basis.
//!
//! Propagation uses classical RK4 with a fixed step `h = T/S`, `T = 2π/η`. Because `H(t)` is
//! T-periodic and every interval starts at phase 0, the RK4 map over one period is the same
//! for every period; it is built once and applied repeatedly when that is cheaper than
//! stepping. Samples are therefore taken at whole periods: `sample_dt` is rounded to the
//! nearest positive multiple of `T` and `t_end` to the nearest multiple of the sampling
//! interval. Without a drive (`η = 0`) the interval is `sample_dt` itself.

mod observables;
mod propagate;

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

pub use observables::{
    bare_state, fidelity_targets, mandel_q, observables, FidelityTarget, InitialState, MandelForm, Observables,
    QuantumState,
};

use crate::error::{Error, Result};
use crate::model::{build_h0_real, lindblad_dissipators, Coupling, Dissipator, SystemParams};
use crate::operators::{eig_real_symmetric, CMatrix, CVector, HilbertConfig};
use crate::spectrum::DressedSpectrum;
use propagate::{Drive, HermitianCoords, Lindblad, SparseReal};

/// Minimum number of RK4 steps per drive period.
pub const MIN_STEPS_PER_PERIOD: usize = 200;
/// Tolerated drift of the norm (pure states) or trace (density operators).
pub const DRIFT_TOL: f64 = 1e-6;
/// Tolerated change of the final fidelities when the step is halved.
pub const RICHARDSON_TOL: f64 = 1e-6;
/// Most negative eigenvalue tolerated in a propagated density operator.
pub const POSITIVITY_TOL: f64 = 1e-6;

/// Step-size and verification policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvolveOptions {
    /// Initial RK4 steps per drive period (raised to at least [`MIN_STEPS_PER_PERIOD`]).
    pub steps_per_period: usize,
    /// Re-run at half step and require final fidelities to agree within [`RICHARDSON_TOL`].
    pub richardson: bool,
    /// How many times the step may be halved when a check fails.
    pub max_refinements: usize,
    pub mandel: MandelForm,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            steps_per_period: MIN_STEPS_PER_PERIOD,
            richardson: true,
            max_refinements: 5,
            mandel: MandelForm::Standard,
        }
    }
}

/// Integration diagnostics of an accepted run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub steps_per_interval: usize,
    pub step: f64,
    /// Largest |‖ψ‖ − 1| or |Tr ρ − 1| over the samples.
    pub max_drift: f64,
    /// Final-fidelity change against the run at twice the step, when checked.
    pub richardson_change: Option<f64>,
    /// Smallest eigenvalue of ρ over the samples (Lindblad runs).
    pub min_eigenvalue: Option<f64>,
    /// Largest |ρ − ρ†| over the samples (Lindblad runs).
    pub max_hermitian_deviation: Option<f64>,
}

/// Sampled observables of one evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub records: Vec<Observables>,
    pub fidelity_labels: Vec<String>,
    pub final_state: QuantumState,
    pub diagnostics: Diagnostics,
}

/// Number of photon-population columns in trajectory CSV files.
pub const CSV_POPULATIONS: usize = 9;

impl Trajectory {
    pub fn series(&self, f: impl Fn(&Observables) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn fidelity(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.fidelity_labels.iter().position(|l| l == label)?;
        Some(self.series(|o| o.fidelities[i]))
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> =
            ["t", "n_avg", "se_t", "se_a", "n_tot", "q_mandel"].iter().map(|s| s.to_string()).collect();
        h.extend((0..CSV_POPULATIONS).map(|n| format!("p{n}")));
        h.extend(self.fidelity_labels.iter().map(|l| format!("f_{}", l.replace(',', "_"))));
        h
    }

    /// Writes `t, n_avg, se_t, se_a, n_tot, q_mandel, p0..p8, f_<label>...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        for (t, o) in self.times.iter().zip(&self.records) {
            let mut row = vec![t.to_string(), o.n_avg.to_string(), o.se_t.to_string(), o.se_a.to_string()];
            row.push(o.n_tot.to_string());
            row.push(o.q_mandel.to_string());
            row.extend((0..CSV_POPULATIONS).map(|n| o.populations.get(n).copied().unwrap_or(0.0).to_string()));
            row.extend(o.fidelities.iter().map(|f| f.to_string()));
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Plan {
    interval: f64,
    n_intervals: usize,
    sample_every: usize,
    periodic: bool,
}

impl Plan {
    fn new(p: &SystemParams, t_end: f64, sample_dt: f64) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("t_end must be > 0, got {t_end}")));
        }
        if !(sample_dt > 0.0) || !sample_dt.is_finite() {
            return Err(Error::InvalidParameter(format!("sample_dt must be > 0, got {sample_dt}")));
        }
        let periodic = p.eta > 0.0;
        let interval = if periodic { 2.0 * PI / p.eta } else { sample_dt };
        let sample_every = ((sample_dt / interval).round() as usize).max(1);
        let samples = ((t_end / (interval * sample_every as f64)).round() as usize).max(1);
        Ok(Self { interval, n_intervals: samples * sample_every, sample_every, periodic })
    }

    fn sample_times(&self) -> Vec<f64> {
        (0..=self.n_intervals / self.sample_every).map(|k| (k * self.sample_every) as f64 * self.interval).collect()
    }

    fn initial_steps(&self, opts: &EvolveOptions, bound: f64) -> usize {
        let base =
            if self.periodic { opts.steps_per_period.max(MIN_STEPS_PER_PERIOD) } else { opts.steps_per_period.max(1) };
        // keep h·|H| well inside the RK4 stability region
        base.max((self.interval * bound / 0.5).ceil() as usize)
    }
}

fn shifted_drive(p: &SystemParams) -> Result<Drive> {
    p.validate()?;
    let mut h0 = build_h0_real(p, Coupling::Full)?;
    let (energies, _) = eig_real_symmetric(&h0)?;
    for i in 0..h0.nrows() {
        h0[(i, i)] -= energies[0];
    }
    let hilbert = p.hilbert()?;
    let se = (0..hilbert.dim()).map(|i| hilbert.decompose(i).0 as f64).collect();
    Ok(Drive { h0: SparseReal::from_dense(&h0), se, eps: p.eps, eta: p.eta })
}

struct Run {
    records: Vec<Observables>,
    final_state: QuantumState,
    diagnostics: Diagnostics,
}

fn final_signature(run: &Run) -> Vec<f64> {
    let last = run.records.last().expect("at least one sample");
    if last.fidelities.is_empty() {
        run.final_state.weights()
    } else {
        last.fidelities.clone()
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// Runs with increasing resolution until the drift (and optionally Richardson) checks pass.
fn refine<F>(plan: &Plan, first: usize, opts: &EvolveOptions, run: F) -> Result<Run>
where
    F: Fn(usize) -> Result<Run>,
{
    let mut steps = first;
    let mut current = run(steps)?;
    let mut last_problem = String::new();
    for _ in 0..=opts.max_refinements {
        if opts.richardson {
            let finer = run(2 * steps)?;
            let change = max_diff(&final_signature(&current), &final_signature(&finer));
            let ok = change < RICHARDSON_TOL && finer_ok(&finer, &mut last_problem);
            steps *= 2;
            if ok {
                let mut accepted = finer;
                accepted.diagnostics.richardson_change = Some(change);
                return Ok(accepted);
            }
            if change >= RICHARDSON_TOL {
                last_problem = format!("final fidelities changed by {change:e} when halving the step");
            }
            current = finer;
        } else {
            if finer_ok(&current, &mut last_problem) {
                return Ok(current);
            }
            steps *= 2;
            current = run(steps)?;
        }
    }
    Err(Error::StepSize(format!(
        "{last_problem} (step {:e} after {} refinements)",
        plan.interval / steps as f64,
        opts.max_refinements
    )))
}

fn finer_ok(run: &Run, problem: &mut String) -> bool {
    let d = &run.diagnostics;
    if d.max_drift > DRIFT_TOL {
        *problem = format!("norm/trace drift {:e} exceeds {DRIFT_TOL:e}", d.max_drift);
        return false;
    }
    if let Some(m) = d.min_eigenvalue {
        if m < -POSITIVITY_TOL {
            *problem = format!("density operator eigenvalue {m:e} below -{POSITIVITY_TOL:e}");
            return false;
        }
    }
    true
}

fn run_pure(
    drive: &Drive,
    hilbert: &HilbertConfig,
    psi0: &CVector,
    plan: &Plan,
    steps: usize,
    targets: &[FidelityTarget],
    form: MandelForm,
) -> Result<Run> {
    let h = plan.interval / steps as f64;
    let dim = psi0.len();
    let floquet = plan.n_intervals > dim;
    let u = if floquet { Some(drive.propagator(h, steps)) } else { None };
    let mut psi = CMatrix::from_column_slice(dim, 1, psi0.as_slice());
    let mut records = Vec::new();
    let mut drift: f64 = 0.0;
    let mut record = |psi: &CMatrix| -> Result<()> {
        let state = QuantumState::Pure(psi.column(0).into_owned());
        drift = drift.max((psi.norm() - 1.0).abs());
        records.push(observables(&state, hilbert, targets, form)?);
        Ok(())
    };
    record(&psi)?;
    for k in 1..=plan.n_intervals {
        match &u {
            Some(u) => psi = u * &psi,
            None => drive.evolve_pure(0.0, h, steps, &mut psi),
        }
        if k % plan.sample_every == 0 {
            record(&psi)?;
        }
    }
    Ok(Run {
        records,
        final_state: QuantumState::Pure(psi.column(0).into_owned()),
        diagnostics: Diagnostics { steps_per_interval: steps, step: h, max_drift: drift, ..Default::default() },
    })
}

fn check_targets(hilbert: &HilbertConfig, targets: &[FidelityTarget]) -> Result<()> {
    for t in targets {
        if t.state.len() != hilbert.dim() {
            return Err(Error::DimensionMismatch(format!("fidelity target {} has wrong dimension", t.label)));
        }
    }
    Ok(())
}

/// Schrödinger evolution under `H0 + ε sin(ηt) σe` from `psi0` (bare basis, normalized).
pub fn evolve_schrodinger(
    p: &SystemParams,
    psi0: &CVector,
    t_end: f64,
    sample_dt: f64,
    targets: &[FidelityTarget],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let hilbert = p.hilbert()?;
    if psi0.len() != hilbert.dim() {
        return Err(Error::DimensionMismatch(format!("psi0 has length {}, expected {}", psi0.len(), hilbert.dim())));
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("psi0 is not normalized (norm {})", psi0.norm())));
    }
    check_targets(&hilbert, targets)?;
    let plan = Plan::new(p, t_end, sample_dt)?;
    let drive = shifted_drive(p)?;
    let first = plan.initial_steps(opts, drive.norm_bound());
    let run = refine(&plan, first, opts, |s| run_pure(&drive, &hilbert, psi0, &plan, s, targets, opts.mandel))?;
    Ok(Trajectory {
        times: plan.sample_times(),
        records: run.records,
        fidelity_labels: targets.iter().map(|t| t.label.clone()).collect(),
        final_state: run.final_state,
        diagnostics: run.diagnostics,
    })
}

fn run_mixed(
    lindblad: &Lindblad,
    hilbert: &HilbertConfig,
    rho0: &CMatrix,
    plan: &Plan,
    steps: usize,
    targets: &[FidelityTarget],
    form: MandelForm,
) -> Result<Run> {
    let h = plan.interval / steps as f64;
    let dim = rho0.nrows();
    let coords = HermitianCoords::new(dim);
    let floquet = plan.n_intervals > coords.len();
    let p = if floquet { Some(lindblad.propagator(h, steps)) } else { None };
    let mut rho = rho0.clone();
    let mut x = coords.to_coords(rho0);
    let mut records = Vec::new();
    let mut diag = Diagnostics {
        steps_per_interval: steps,
        step: h,
        min_eigenvalue: Some(f64::INFINITY),
        max_hermitian_deviation: Some(0.0),
        ..Default::default()
    };
    let mut record = |rho: &CMatrix, diag: &mut Diagnostics| -> Result<()> {
        let trace: f64 = (0..dim).map(|i| rho[(i, i)].re).sum();
        diag.max_drift = diag.max_drift.max((trace - 1.0).abs());
        let herm = propagate::amax(&(rho - rho.adjoint()));
        diag.max_hermitian_deviation = diag.max_hermitian_deviation.map(|m| m.max(herm));
        let min_eig = rho.clone().symmetric_eigenvalues().min();
        diag.min_eigenvalue = diag.min_eigenvalue.map(|m| m.min(min_eig));
        records.push(observables(&QuantumState::Mixed(rho.clone()), hilbert, targets, form)?);
        Ok(())
    };
    record(&rho, &mut diag)?;
    for k in 1..=plan.n_intervals {
        match &p {
            Some(p) => x = p * &x,
            None => lindblad.evolve(0.0, h, steps, &mut rho),
        }
        if k % plan.sample_every == 0 || k == plan.n_intervals {
            if p.is_some() {
                rho = coords.to_matrix(&x);
            }
            if k % plan.sample_every == 0 {
                record(&rho, &mut diag)?;
            }
        }
    }
    Ok(Run { records, final_state: QuantumState::Mixed(rho), diagnostics: diag })
}

/// Lindblad evolution with the four qubit channels of `p` plus any `extra` channels.
pub fn evolve_lindblad(
    p: &SystemParams,
    rho0: &CMatrix,
    t_end: f64,
    sample_dt: f64,
    targets: &[FidelityTarget],
    extra: &[Dissipator],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let hilbert = p.hilbert()?;
    let dim = hilbert.dim();
    if rho0.nrows() != dim || rho0.ncols() != dim {
        return Err(Error::DimensionMismatch(format!("rho0 must be {dim}x{dim}")));
    }
    let trace: f64 = (0..dim).map(|i| rho0[(i, i)].re).sum();
    let herm = propagate::amax(&(rho0 - rho0.adjoint()));
    let min_eig = rho0.clone().symmetric_eigenvalues().min();
    if (trace - 1.0).abs() > 1e-10 || herm > 1e-12 || min_eig < -1e-12 {
        return Err(Error::InvalidParameter(format!(
            "rho0 is not a density operator (trace {trace}, hermiticity {herm:e}, min eigenvalue {min_eig:e})"
        )));
    }
    check_targets(&hilbert, targets)?;
    let plan = Plan::new(p, t_end, sample_dt)?;
    let mut channels = lindblad_dissipators(p)?;
    channels.extend_from_slice(extra);
    let lindblad = Lindblad::new(shifted_drive(p)?, &channels)?;
    let first = plan.initial_steps(opts, lindblad.norm_bound() / 2.0);
    let run = refine(&plan, first, opts, |s| run_mixed(&lindblad, &hilbert, rho0, &plan, s, targets, opts.mandel))?;
    Ok(Trajectory {
        times: plan.sample_times(),
        records: run.records,
        fidelity_labels: targets.iter().map(|t| t.label.clone()).collect(),
        final_state: run.final_state,
        diagnostics: run.diagnostics,
    })
}

/// Which form of the dressed-basis amplitude equations to integrate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum AmplitudeMode {
    /// `iȦ_m = ε sin(ηt) Σ_l A_l e^{−iE_lm t}⟨φ_m|σe|φ_l⟩`.
    #[default]
    Full,
    /// Only the terms rotating at `|E_lm| − η`, with rates `R_{m;l}`.
    Rwa,
}

/// Dressed-basis amplitudes `A_l(t)` of `|ψ⟩ = Σ e^{−iE_l t} A_l |φ_l⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeTrajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<CVector>,
    pub step: f64,
}

impl AmplitudeTrajectory {
    /// |A_l(t)|² at every sample.
    pub fn probability(&self, l: usize) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a[l].norm_sqr()).collect()
    }

    /// Lab-frame state (bare basis) at sample `k`, up to a global phase.
    pub fn lab_state(&self, spec: &DressedSpectrum, k: usize) -> CVector {
        let t = self.times[k];
        let e0 = spec.energies[0];
        let a = &self.amplitudes[k];
        let mut psi = CVector::zeros(spec.dim());
        for l in 0..spec.dim() {
            let c = a[l] * Complex64::from_polar(1.0, -(spec.energies[l] - e0) * t);
            psi += spec.state(l) * c;
        }
        psi
    }
}

/// Integrates the amplitude equations with RK4.
///
/// The step is `min(T/S, 0.5/ω_max)` with `ω_max` the fastest phase in the equations, then
/// shortened so that `sample_dt` is a whole number of steps.
pub fn evolve_dressed_amplitudes(
    spec: &DressedSpectrum,
    eps: f64,
    eta: f64,
    a0: &CVector,
    t_end: f64,
    sample_dt: f64,
    mode: AmplitudeMode,
    opts: &EvolveOptions,
) -> Result<AmplitudeTrajectory> {
    let dim = spec.dim();
    if a0.len() != dim {
        return Err(Error::DimensionMismatch(format!("A0 has length {}, expected {dim}", a0.len())));
    }
    if (a0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("A0 is not normalized (norm {})", a0.norm())));
    }
    if !(t_end > 0.0) || !(sample_dt > 0.0) || !t_end.is_finite() || !sample_dt.is_finite() {
        return Err(Error::InvalidParameter("t_end and sample_dt must be positive".into()));
    }
    if !eps.is_finite() || !eta.is_finite() || eta < 0.0 {
        return Err(Error::InvalidParameter(format!("invalid drive eps = {eps}, eta = {eta}")));
    }
    if mode == AmplitudeMode::Rwa && eps.abs() > 0.5 * eta {
        return Err(Error::InvalidParameter(format!(
            "RWA amplitude equations need eps << eta (eps = {eps}, eta = {eta})"
        )));
    }
    let e0 = spec.energies[0];
    let energies: Vec<f64> = spec.energies.iter().map(|e| e - e0).collect();
    let spread = energies[dim - 1];
    let sigma = spec.sigma_e_matrix();
    let omega_max = match mode {
        AmplitudeMode::Full => spread + eta,
        AmplitudeMode::Rwa => (spread - eta).abs().max(eta),
    };
    let mut h = 0.5 / omega_max.max(1e-300);
    if eta > 0.0 {
        h = h.min(2.0 * PI / eta / opts.steps_per_period.max(MIN_STEPS_PER_PERIOD) as f64);
    }
    let per_sample = (sample_dt / h).ceil() as usize;
    let h = sample_dt / per_sample as f64;
    let samples = ((t_end / sample_dt).round() as usize).max(1);

    let rhs = |t: f64, a: &CMatrix, out: &mut CMatrix| {
        let b: DVector<Complex64> =
            DVector::from_iterator(dim, (0..dim).map(|l| a[(l, 0)] * Complex64::from_polar(1.0, -energies[l] * t)));
        match mode {
            AmplitudeMode::Full => {
                let c = eps * (eta * t).sin();
                for m in 0..dim {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for l in 0..dim {
                        acc += b[l] * sigma[(m, l)];
                    }
                    out[(m, 0)] = Complex64::new(0.0, -c) * Complex64::from_polar(1.0, energies[m] * t) * acc;
                }
            }
            AmplitudeMode::Rwa => {
                let up = Complex64::from_polar(1.0, eta * t);
                let r = eps / 2.0;
                for m in 0..dim {
                    let (mut above, mut below) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                    for l in 0..dim {
                        if energies[l] > energies[m] {
                            above += b[l] * sigma[(m, l)];
                        } else if energies[l] < energies[m] {
                            below += b[l] * sigma[(m, l)];
                        }
                    }
                    out[(m, 0)] = Complex64::from_polar(r, energies[m] * t) * (below * up.conj() - above * up);
                }
            }
        }
    };

    let mut a = CMatrix::from_column_slice(dim, 1, a0.as_slice());
    let mut times = vec![0.0];
    let mut amplitudes = vec![a0.clone()];
    let mut step = 0usize;
    let mut work = propagate::Rk4::new(dim, 1);
    for k in 1..=samples {
        for _ in 0..per_sample {
            work.step(&rhs, step as f64 * h, h, &mut a);
            step += 1;
        }
        times.push(k as f64 * sample_dt);
        amplitudes.push(a.column(0).into_owned());
    }
    Ok(AmplitudeTrajectory { times, amplitudes, step: h })
}

/// Starts a run from a pure state; convenience for the Lindblad propagator.
pub fn pure_density(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::ONE;

    fn small() -> SystemParams {
        SystemParams {
            omega0: 0.95,
            omega_a: 0.6,
            g: 0.05,
            h: 0.05,
            eps: 0.095,
            eta: 1.586,
            n_tr: 4,
            ..Default::default()
        }
    }

    #[test]
    fn plan_rounds_to_periods() {
        let p = small();
        let t = 2.0 * PI / p.eta;
        let plan = Plan::new(&p, 10.3 * t, 2.4 * t).unwrap();
        assert_eq!(plan.sample_every, 2);
        assert_eq!(plan.n_intervals, 10);
        assert_eq!(plan.sample_times().len(), 6);
        assert!(Plan::new(&p, 0.0, 1.0).is_err());
    }

    #[test]
    fn schrodinger_rejects_bad_input() {
        let p = small();
        let hilbert = p.hilbert().unwrap();
        let psi = bare_state(&hilbert, 0, 0, 0).unwrap() * (ONE * 2.0);
        assert!(evolve_schrodinger(&p, &psi, 10.0, 1.0, &[], &EvolveOptions::default()).is_err());
        let short = CVector::zeros(3);
        assert!(evolve_schrodinger(&p, &short, 10.0, 1.0, &[], &EvolveOptions::default()).is_err());
    }
}
