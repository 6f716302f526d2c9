//! Photon statistics, qubit populations and dressed-state fidelities of pure or mixed states.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{CMatrix, CVector, HilbertConfig, ONE, ZERO};
use crate::spectrum::{DressedSpectrum, StateSelector};

/// Which bracket is used for Mandel's Q.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum MandelForm {
    /// (⟨n²⟩ − ⟨n⟩² − ⟨n⟩)/⟨n⟩: 0 for coherent light, 1 + 2⟨n⟩ for squeezed vacuum.
    #[default]
    Standard,
    /// (⟨(Δn)²⟩ − ⟨n⟩²)/⟨n⟩, kept for comparison only.
    Printed,
}

impl FromStr for MandelForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "printed" => Ok(Self::Printed),
            _ => Err(Error::InvalidParameter(format!("unknown Mandel form '{s}' (standard|printed)"))),
        }
    }
}

/// Mandel's Q from the first two moments; 0 for the vacuum.
pub fn mandel_q(n_avg: f64, n2_avg: f64, form: MandelForm) -> f64 {
    if n_avg <= 1e-14 {
        return 0.0;
    }
    let variance = n2_avg - n_avg * n_avg;
    match form {
        MandelForm::Standard => (variance - n_avg) / n_avg,
        MandelForm::Printed => (variance - n_avg * n_avg) / n_avg,
    }
}

/// A pure state or a density operator in the bare product basis.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(CVector),
    Mixed(CMatrix),
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Mixed(m) => m.nrows(),
        }
    }

    /// Diagonal of the density operator.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Self::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            Self::Mixed(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
        }
    }

    /// ⟨φ|ρ|φ⟩ for normalized φ.
    pub fn fidelity(&self, target: &CVector) -> f64 {
        match self {
            Self::Pure(v) => target.dotc(v).norm_sqr(),
            Self::Mixed(m) => target.dotc(&(m * target)).re,
        }
    }

    pub fn density(&self) -> CMatrix {
        match self {
            Self::Pure(v) => v * v.adjoint(),
            Self::Mixed(m) => m.clone(),
        }
    }
}

/// A dressed state whose overlap with the evolving state is recorded.
#[derive(Clone, Debug, PartialEq)]
pub struct FidelityTarget {
    pub label: String,
    pub state: CVector,
}

impl fmt::Display for FidelityTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Resolves selectors against a spectrum; labels are the selector strings.
pub fn fidelity_targets(spec: &DressedSpectrum, selectors: &[StateSelector]) -> Result<Vec<FidelityTarget>> {
    selectors
        .iter()
        .map(|s| {
            let r = spec.resolve(s)?;
            Ok(FidelityTarget { label: s.to_string(), state: spec.state(r.index) })
        })
        .collect()
}

/// Observables of one sampled state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observables {
    pub n_avg: f64,
    pub se_t: f64,
    pub se_a: f64,
    pub n_tot: f64,
    pub q_mandel: f64,
    /// P_n for n = 0..=n_tr.
    pub populations: Vec<f64>,
    /// One entry per fidelity target.
    pub fidelities: Vec<f64>,
}

pub fn observables(
    state: &QuantumState,
    hilbert: &HilbertConfig,
    targets: &[FidelityTarget],
    form: MandelForm,
) -> Result<Observables> {
    if state.dim() != hilbert.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, expected {}",
            state.dim(),
            hilbert.dim()
        )));
    }
    if let Some(t) = targets.iter().find(|t| t.state.len() != hilbert.dim()) {
        return Err(Error::DimensionMismatch(format!("fidelity target {} has wrong dimension", t.label)));
    }
    let w = state.weights();
    let mut populations = vec![0.0; hilbert.fock_dim()];
    let (mut se_t, mut se_a) = (0.0, 0.0);
    for (i, wi) in w.iter().enumerate() {
        let (q, qa, n) = hilbert.decompose(i);
        populations[n] += wi;
        se_t += q as f64 * wi;
        se_a += qa as f64 * wi;
    }
    let n_avg: f64 = populations.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let n2_avg: f64 = populations.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum();
    Ok(Observables {
        n_avg,
        se_t,
        se_a,
        n_tot: n_avg + se_t + se_a,
        q_mandel: mandel_q(n_avg, n2_avg, form),
        populations,
        fidelities: targets.iter().map(|t| state.fidelity(&t.state)).collect(),
    })
}

/// |q, q_a, n⟩ with q, q_a ∈ {0 (ground), 1 (excited)}.
pub fn bare_state(hilbert: &HilbertConfig, q: usize, q_a: usize, n: usize) -> Result<CVector> {
    if q > 1 || q_a > 1 || n > hilbert.n_tr() {
        return Err(Error::InvalidParameter(format!("bare state ({q}, {q_a}, {n}) outside the truncated space")));
    }
    let mut v = CVector::from_element(hilbert.dim(), ZERO);
    v[hilbert.index(q, q_a, n)] = ONE;
    Ok(v)
}

/// Initial condition: a bare product ket like `g,ga,0` / `e,ea,3`, or a dressed-state label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    Bare { q: usize, q_a: usize, n: usize },
    Dressed(StateSelector),
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() == 3 {
            let q = match parts[0] {
                "g" => Some(0),
                "e" => Some(1),
                _ => None,
            };
            let q_a = match parts[1] {
                "g" | "ga" => Some(0),
                "e" | "ea" => Some(1),
                _ => None,
            };
            if let (Some(q), Some(q_a), Ok(n)) = (q, q_a, parts[2].parse()) {
                return Ok(Self::Bare { q, q_a, n });
            }
            return Err(Error::BadLabel(s.to_string()));
        }
        Ok(Self::Dressed(s.parse()?))
    }
}

impl InitialState {
    pub fn vector(&self, spec: &DressedSpectrum) -> Result<CVector> {
        match *self {
            Self::Bare { q, q_a, n } => bare_state(&spec.params.hilbert()?, q, q_a, n),
            Self::Dressed(sel) => Ok(spec.state(spec.resolve(&sel)?.index)),
        }
    }
}
