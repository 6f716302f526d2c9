use std::path::Path;

use dce::analytic;
use dce::dynamics::{self, EvolveOptions, InitialState};
use dce::experiments;
use dce::model::CONFIG_KEYS;
use dce::spectrum::{self, DressedSpectrum, ScanOptions, StateSelector, Transition};
use dce::Coupling;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn coupling(rwa: bool) -> Coupling {
    if rwa {
        Coupling::Rwa
    } else {
        Coupling::Full
    }
}

/// Model constants in units of the cavity frequency.
#[pyclass(name = "SystemParams", from_py_object)]
#[derive(Clone)]
struct PySystemParams {
    inner: dce::SystemParams,
}

#[pymethods]
impl PySystemParams {
    /// Keyword arguments override the defaults, e.g. `SystemParams(omega0=0.95, omega_a=0.6)`.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = Self { inner: dce::SystemParams::default() };
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                p.set(&key, &v.str()?.to_string())?;
            }
        }
        p.inner.validate().map_err(err)?;
        Ok(p)
    }

    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        Ok(Self { inner: dce::SystemParams::from_config(text).map_err(err)? })
    }

    fn to_config(&self) -> String {
        self.inner.to_config()
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(PyKeyError::new_err)
    }

    fn get(&self, key: &str) -> PyResult<f64> {
        self.inner.get(key).ok_or_else(|| PyKeyError::new_err(key.to_string()))
    }

    #[staticmethod]
    fn keys() -> Vec<&'static str> {
        CONFIG_KEYS.to_vec()
    }

    fn with_reference_dissipation(&self) -> Self {
        Self { inner: self.inner.clone().with_reference_dissipation() }
    }

    fn __getattr__(&self, key: &str) -> PyResult<f64> {
        self.get(key)
    }

    fn __repr__(&self) -> String {
        let fields: Vec<String> = CONFIG_KEYS.iter().map(|k| format!("{k}={}", self.inner.get(k).unwrap())).collect();
        format!("SystemParams({})", fields.join(", "))
    }
}

/// Eigenpairs of the static Hamiltonian with conjoint labels.
#[pyclass(name = "DressedSpectrum")]
struct PySpectrum {
    inner: DressedSpectrum,
}

#[pymethods]
impl PySpectrum {
    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies.clone()
    }

    /// `(k, n, overlap)` for every dressed state, in energy order.
    #[getter]
    fn labels(&self) -> Vec<(usize, usize, f64)> {
        self.inner.labels.iter().map(|l| (l.k, l.n, l.overlap)).collect()
    }

    /// Real eigenvector `l` in the bare product basis.
    fn state(&self, l: usize) -> PyResult<Vec<f64>> {
        if l >= self.inner.dim() {
            return Err(err(format!("state index {l} out of range")));
        }
        Ok(self.inner.states.column(l).iter().copied().collect())
    }

    /// Index of the dressed state selected by a label like `A0,2` or `phi2,3`.
    fn resolve(&self, label: &str) -> PyResult<usize> {
        let sel: StateSelector = label.parse().map_err(err)?;
        Ok(self.inner.resolve(&sel).map_err(err)?.index)
    }

    fn transition_rate(&self, m: usize, l: usize, eps: f64) -> PyResult<f64> {
        spectrum::transition_rate(&self.inner, m, l, eps).map_err(err)
    }

    fn resonant_frequency(&self, m: usize, l: usize) -> PyResult<f64> {
        spectrum::resonant_frequency(&self.inner, m, l).map_err(err)
    }

    /// `(|R|/nu, eta_r)` for a transition written `src:dst`.
    fn transition(&self, transition: &str) -> PyResult<(f64, f64)> {
        let t: Transition = transition.parse().map_err(err)?;
        let point = spectrum::transition_point(&self.inner, &t, self.inner.params.eps).map_err(err)?;
        Ok((point.rate, point.eta_r))
    }

    fn __len__(&self) -> usize {
        self.inner.dim()
    }
}

/// Labeled spectrum; with `check_truncation` the low states are compared against a larger Fock space.
#[pyfunction]
#[pyo3(signature = (params, rwa = false, check_truncation = true))]
fn dressed_spectrum(params: &PySystemParams, rwa: bool, check_truncation: bool) -> PyResult<PySpectrum> {
    let p = &params.inner;
    let inner = if check_truncation {
        spectrum::dressed_spectrum_with(p, coupling(rwa), p.n_tr / 2)
    } else {
        DressedSpectrum::compute(p, coupling(rwa))
    };
    Ok(PySpectrum { inner: inner.map_err(err)? })
}

#[pyfunction]
fn ferrari_roots(b: f64, c: f64, d: f64, e: f64) -> PyResult<[f64; 4]> {
    analytic::ferrari_roots(b, c, d, e).map_err(err)
}

#[pyfunction]
fn perturbative_energy(params: &PySystemParams, n: usize) -> f64 {
    analytic::perturbative_energy(&params.inner, n)
}

/// Four-state block of the `n`-excitation subspace: roots, amplitude rows and energies.
#[pyfunction]
#[pyo3(signature = (params, n, corrected = true))]
fn subspace_matrix<'py>(
    py: Python<'py>,
    params: &PySystemParams,
    n: usize,
    corrected: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let sol = analytic::subspace_matrix(&params.inner, n, corrected).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("roots", sol.roots)?;
    d.set_item("amplitudes", sol.amplitudes.iter().map(|r| r.to_vec()).collect::<Vec<_>>())?;
    d.set_item("energies", sol.energies)?;
    d.set_item("offset", sol.offset)?;
    Ok(d)
}

/// One row per grid point and transition: `(omega0, transition_id, rate, eta_r, flag)`.
#[pyfunction]
#[pyo3(signature = (params, grid, transitions, rwa = false))]
fn scan_omega0(
    params: &PySystemParams,
    grid: Vec<f64>,
    transitions: Vec<String>,
    rwa: bool,
) -> PyResult<Vec<(f64, String, f64, f64, String)>> {
    let ts: Vec<Transition> = transitions.iter().map(|t| t.parse()).collect::<Result<_, _>>().map_err(err)?;
    let rows =
        spectrum::scan_omega0(&params.inner, &grid, &ts, ScanOptions { coupling: coupling(rwa), eps_ratio: None })
            .map_err(err)?;
    Ok(rows.into_iter().map(|r| (r.omega0, r.transition_id, r.rate, r.eta_r, r.flag)).collect())
}

/// Evolves from `initial` (bare ket `g,ga,0` or dressed label) and returns the sampled observables.
#[pyfunction]
#[pyo3(signature = (params, t_end, sample_dt, initial = "g,ga,0", lindblad = false, fidelity = Vec::new()))]
fn evolve<'py>(
    py: Python<'py>,
    params: &PySystemParams,
    t_end: f64,
    sample_dt: f64,
    initial: &str,
    lindblad: bool,
    fidelity: Vec<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = &params.inner;
    let spec = DressedSpectrum::compute(p, Coupling::Full).map_err(err)?;
    let psi0 = initial.parse::<InitialState>().map_err(err)?.vector(&spec).map_err(err)?;
    let selectors: Vec<StateSelector> = fidelity.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(err)?;
    let targets = dynamics::fidelity_targets(&spec, &selectors).map_err(err)?;
    let opts = EvolveOptions::default();
    let tr = py
        .detach(|| {
            if lindblad {
                dynamics::evolve_lindblad(p, &dynamics::pure_density(&psi0), t_end, sample_dt, &targets, &[], &opts)
            } else {
                dynamics::evolve_schrodinger(p, &psi0, t_end, sample_dt, &targets, &opts)
            }
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("t", tr.times.clone())?;
    d.set_item("n_avg", tr.series(|o| o.n_avg))?;
    d.set_item("se_t", tr.series(|o| o.se_t))?;
    d.set_item("se_a", tr.series(|o| o.se_a))?;
    d.set_item("n_tot", tr.series(|o| o.n_tot))?;
    d.set_item("q_mandel", tr.series(|o| o.q_mandel))?;
    d.set_item("populations", tr.records.iter().map(|o| o.populations.clone()).collect::<Vec<_>>())?;
    let fid = PyDict::new(py);
    for label in &tr.fidelity_labels {
        fid.set_item(label, tr.fidelity(label).unwrap())?;
    }
    d.set_item("fidelity", fid)?;
    d.set_item("max_drift", tr.diagnostics.max_drift)?;
    d.set_item("step", tr.diagnostics.step)?;
    Ok(d)
}

#[pyfunction]
fn preset_ids() -> Vec<&'static str> {
    experiments::PRESET_IDS.to_vec()
}

/// Writes a preset's CSV and SVG files under `out_dir/<id>/` and returns their paths.
#[pyfunction]
fn run_preset(py: Python<'_>, id: &str, out_dir: &str) -> PyResult<Vec<String>> {
    let manifest = py.detach(|| experiments::run_preset(id, Path::new(out_dir))).map_err(err)?;
    Ok(manifest.files.iter().map(|f| f.display().to_string()).collect())
}

/// Report entries `(target, cited, measured, tolerance, pass)`; also written to report.json.
#[pyfunction]
fn verify_preset(id: &str, out_dir: &str) -> PyResult<Vec<(String, String, f64, String, bool)>> {
    let report = experiments::verify_preset(id, Path::new(out_dir)).map_err(err)?;
    Ok(report.into_iter().map(|e| (e.target, e.cited, e.measured, e.tolerance, e.pass)).collect())
}

#[pymodule]
fn tripartite_dce(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(dressed_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(ferrari_roots, m)?)?;
    m.add_function(wrap_pyfunction!(perturbative_energy, m)?)?;
    m.add_function(wrap_pyfunction!(subspace_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(scan_omega0, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(preset_ids, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    m.add_function(wrap_pyfunction!(verify_preset, m)?)?;
    Ok(())
}
