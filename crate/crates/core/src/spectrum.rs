//! Exact diagonalization of the static Hamiltonian, dressed-state labels, transition rates and
//! scans over the t-qubit frequency.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::subspace_matrix;
use crate::error::{Error, Result};
use crate::model::{build_h0_real, AtomicBasis, Coupling, SystemParams};
use crate::operators::{eig_real_symmetric, CVector, ONE};

/// Tolerance on energy changes when the Fock space is enlarged by five photons.
pub const TRUNCATION_TOL: f64 = 1e-6;

/// Dominant conjoint component |A_k^n⟩ of a dressed state and its weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateLabel {
    pub k: usize,
    pub n: usize,
    pub overlap: f64,
}

impl StateLabel {
    /// No single conjoint component carries half of the weight.
    pub fn is_mixed(&self) -> bool {
        self.overlap < 0.5
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{},{}", self.k, self.n)
    }
}

/// Eigenpairs of the static Hamiltonian in the truncated product space.
#[derive(Clone, Debug)]
pub struct DressedSpectrum {
    pub params: SystemParams,
    pub coupling: Coupling,
    pub basis: AtomicBasis,
    /// Ascending energies.
    pub energies: Vec<f64>,
    /// Real orthonormal eigenvectors as columns, bare product basis.
    pub states: DMatrix<f64>,
    /// The same eigenvectors in the conjoint basis; row `k*(n_tr+1) + n` is |A_k^n⟩.
    pub conjoint: DMatrix<f64>,
    pub labels: Vec<StateLabel>,
}

fn to_conjoint(basis: &AtomicBasis, fock: usize, bare: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::<f64>::zeros(bare.nrows(), bare.ncols());
    for l in 0..bare.ncols() {
        for k in 0..4 {
            for pair in 0..4 {
                let amp = basis.states[k][pair];
                if amp == 0.0 {
                    continue;
                }
                for n in 0..fock {
                    out[(k * fock + n, l)] += amp * bare[(pair * fock + n, l)];
                }
            }
        }
    }
    out
}

impl DressedSpectrum {
    /// Diagonalizes without the truncation check.
    pub fn compute(p: &SystemParams, coupling: Coupling) -> Result<Self> {
        let h0 = build_h0_real(p, coupling)?;
        let (energies, states) = eig_real_symmetric(&h0)?;
        let basis = AtomicBasis::new(p);
        let fock = p.n_tr + 1;
        let conjoint = to_conjoint(&basis, fock, &states);
        let labels = (0..energies.len())
            .map(|l| {
                let mut best = (0, 0.0);
                for row in 0..conjoint.nrows() {
                    let w = conjoint[(row, l)].powi(2);
                    // rows are ordered by k then n; on exact ties prefer the smaller photon index
                    let better =
                        w > best.1 * (1.0 + 1e-12) || (w >= best.1 * (1.0 - 1e-12) && row % fock < best.0 % fock);
                    if better {
                        best = (row, w);
                    }
                }
                StateLabel { k: best.0 / fock, n: best.0 % fock, overlap: best.1 }
            })
            .collect();
        Ok(Self { params: p.clone(), coupling, basis, energies, states, conjoint, labels })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn fock_dim(&self) -> usize {
        self.params.n_tr + 1
    }

    /// Dressed state `l` as a complex vector in the bare basis.
    pub fn state(&self, l: usize) -> CVector {
        self.states.column(l).map(|x| ONE * x)
    }

    fn check_index(&self, l: usize) -> Result<()> {
        if l >= self.dim() {
            return Err(Error::InvalidParameter(format!("state index {l} out of range (dimension {})", self.dim())));
        }
        Ok(())
    }

    /// Index of the dressed state with the largest weight on |A_k^n⟩, and that weight.
    pub fn find_conjoint(&self, k: usize, n: usize) -> Result<(usize, f64)> {
        if k > 3 || n > self.params.n_tr {
            return Err(Error::UnresolvedState(format!("A{k},{n} (outside the truncated space)")));
        }
        let row = k * self.fock_dim() + n;
        Ok(self.best_overlap(|l| self.conjoint[(row, l)].powi(2)))
    }

    /// Index of the dressed state with the largest |⟨v|φ_l⟩|² for a conjoint-basis vector v.
    pub fn find_vector(&self, v: &DVector<f64>) -> (usize, f64) {
        let norm2 = v.norm_squared();
        self.best_overlap(|l| self.conjoint.column(l).dot(v).powi(2) / norm2)
    }

    fn best_overlap(&self, weight: impl Fn(usize) -> f64) -> (usize, f64) {
        let mut best = (0, -1.0);
        for l in 0..self.dim() {
            let w = weight(l);
            if w > best.1 {
                best = (l, w);
            }
        }
        best
    }

    /// ⟨φ_m|σe|φ_l⟩ for the modulated qubit.
    pub fn sigma_e_element(&self, m: usize, l: usize) -> f64 {
        let half = 2 * self.fock_dim();
        (half..self.dim()).map(|i| self.states[(i, m)] * self.states[(i, l)]).sum()
    }

    /// σe in the dressed basis.
    pub fn sigma_e_matrix(&self) -> DMatrix<f64> {
        let half = 2 * self.fock_dim();
        let upper = self.states.rows(half, self.dim() - half);
        upper.transpose() * upper
    }

    pub fn resolve(&self, selector: &StateSelector) -> Result<Resolved> {
        match *selector {
            StateSelector::Conjoint { k, n } => {
                let (index, overlap) = self.find_conjoint(k, n)?;
                Ok(Resolved { index, overlap })
            }
            StateSelector::Block { n, i } => {
                let v = block_state_vector(&self.params, n, i)?;
                let (index, overlap) = self.find_vector(&v);
                Ok(Resolved { index, overlap })
            }
        }
    }
}

/// A dressed state picked out by a selector, with the weight of the selector's reference
/// vector in it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolved {
    pub index: usize,
    pub overlap: f64,
}

/// Conjoint-basis vector of the corrected analytic block state |φ_{n,i}⟩ (i counted from 1).
pub fn block_state_vector(p: &SystemParams, n: usize, i: usize) -> Result<DVector<f64>> {
    if !(1..=4).contains(&i) {
        return Err(Error::BadLabel(format!("phi{n},{i}")));
    }
    if n > p.n_tr {
        return Err(Error::UnresolvedState(format!("phi{n},{i} (outside the truncated space)")));
    }
    let sol = subspace_matrix(p, n, true)?;
    let fock = p.n_tr + 1;
    let mut v = DVector::<f64>::zeros(4 * fock);
    for (c, (k, m)) in sol.members().iter().enumerate() {
        v[k * fock + m] = sol.amplitudes[i - 1][c];
    }
    Ok(v)
}

/// Largest energy change of the states with photon label ≤ `max_photons` when the Fock space
/// is enlarged by five photons.
pub fn truncation_change(p: &SystemParams, coupling: Coupling, max_photons: usize) -> Result<f64> {
    let small = DressedSpectrum::compute(p, coupling)?;
    let large = DressedSpectrum::compute(&SystemParams { n_tr: p.n_tr + 5, ..p.clone() }, coupling)?;
    let mut worst: f64 = 0.0;
    for (e, label) in small.energies.iter().zip(&small.labels) {
        if label.n > max_photons {
            continue;
        }
        let nearest = large.energies.iter().map(|x| (x - e).abs()).fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    Ok(worst)
}

/// Labeled spectrum of the full static Hamiltonian, verified against a run with five more
/// photons for all states whose label has at most n_tr/2 photons.
pub fn dressed_spectrum(p: &SystemParams) -> Result<DressedSpectrum> {
    dressed_spectrum_with(p, Coupling::Full, p.n_tr / 2)
}

pub fn dressed_spectrum_with(p: &SystemParams, coupling: Coupling, max_photons: usize) -> Result<DressedSpectrum> {
    let change = truncation_change(p, coupling, max_photons)?;
    if change > TRUNCATION_TOL {
        return Err(Error::TruncationNotConverged { n_tr: p.n_tr, change, tolerance: TRUNCATION_TOL });
    }
    DressedSpectrum::compute(p, coupling)
}

/// `R_{m;l} = (ε/2)⟨φ_m|σe|φ_l⟩` (signed; report |R|/ν as the dimensionless rate).
pub fn transition_rate(spec: &DressedSpectrum, m: usize, l: usize, eps: f64) -> Result<f64> {
    spec.check_index(m)?;
    spec.check_index(l)?;
    if m == l {
        return Err(Error::InvalidParameter("a transition needs two different states".into()));
    }
    Ok(eps / 2.0 * spec.sigma_e_element(m, l))
}

/// |E_l − E_m|.
pub fn resonant_frequency(spec: &DressedSpectrum, m: usize, l: usize) -> Result<f64> {
    spec.check_index(m)?;
    spec.check_index(l)?;
    if m == l {
        return Err(Error::InvalidParameter("a transition needs two different states".into()));
    }
    Ok((spec.energies[l] - spec.energies[m]).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionRow {
    pub m: usize,
    pub l: usize,
    /// E_l − E_m
    pub e_lm: f64,
    pub rate: f64,
    pub label_m: String,
    pub label_l: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TransitionTable {
    pub rows: Vec<TransitionRow>,
}

/// Transitions from state `m` to every other state below index `limit`.
pub fn transition_table(spec: &DressedSpectrum, m: usize, eps: f64, limit: usize) -> Result<TransitionTable> {
    spec.check_index(m)?;
    let rows = (0..limit.min(spec.dim()))
        .filter(|&l| l != m)
        .map(|l| TransitionRow {
            m,
            l,
            e_lm: spec.energies[l] - spec.energies[m],
            rate: eps / 2.0 * spec.sigma_e_element(m, l),
            label_m: spec.labels[m].to_string(),
            label_l: spec.labels[l].to_string(),
        })
        .collect();
    Ok(TransitionTable { rows })
}

/// Names a dressed state either by its dominant conjoint component (`A0,2`) or by an analytic
/// four-state block eigenstate (`phi2,3`, root index counted from 1 in ascending energy).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateSelector {
    Conjoint { k: usize, n: usize },
    Block { n: usize, i: usize },
}

impl FromStr for StateSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::BadLabel(s.to_string());
        let (head, rest) = if let Some(r) = t.strip_prefix("phi") {
            ("phi", r)
        } else if let Some(r) = t.strip_prefix('A') {
            ("A", r)
        } else {
            return Err(bad());
        };
        let (a, b) = rest.split_once(',').ok_or_else(bad)?;
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        match head {
            "A" if a <= 3 => Ok(StateSelector::Conjoint { k: a, n: b }),
            "phi" if a >= 2 && (1..=4).contains(&b) => Ok(StateSelector::Block { n: a, i: b }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for StateSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSelector::Conjoint { k, n } => write!(f, "A{k},{n}"),
            StateSelector::Block { n, i } => write!(f, "phi{n},{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub source: StateSelector,
    pub target: StateSelector,
}

impl Transition {
    pub fn new(source: StateSelector, target: StateSelector) -> Self {
        Self { source, target }
    }

    pub fn id(&self) -> String {
        format!("{}:{}", self.source, self.target)
    }
}

impl FromStr for Transition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once(':').ok_or_else(|| Error::BadLabel(s.to_string()))?;
        Ok(Self { source: a.parse()?, target: b.parse()? })
    }
}

/// Rate and resonance of one transition in a single spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionPoint {
    /// |R|/ν
    pub rate: f64,
    pub eta_r: f64,
    pub source: Resolved,
    pub target: Resolved,
}

impl TransitionPoint {
    pub fn is_mixed(&self) -> bool {
        self.source.overlap < 0.5 || self.target.overlap < 0.5
    }
}

pub fn transition_point(spec: &DressedSpectrum, t: &Transition, eps: f64) -> Result<TransitionPoint> {
    let source = spec.resolve(&t.source)?;
    let target = spec.resolve(&t.target)?;
    let rate = if source.index == target.index {
        0.0
    } else {
        (eps / 2.0 * spec.sigma_e_element(source.index, target.index)).abs() / spec.params.nu
    };
    let eta_r = (spec.energies[target.index] - spec.energies[source.index]).abs();
    Ok(TransitionPoint { rate, eta_r, source, target })
}

/// One grid point of one transition in an Ω₀ scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub omega0: f64,
    pub transition_id: String,
    /// |R|/ν
    pub rate: f64,
    pub eta_r: f64,
    /// `ok`; `mixed` when a selector's best overlap is below 1/2; `switch` when the resolved
    /// state differs from the continuation of the previous grid point.
    pub flag: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub coupling: Coupling,
    /// When set, the modulation amplitude follows eps = ratio · omega0 at every grid point.
    pub eps_ratio: Option<f64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { coupling: Coupling::Full, eps_ratio: None }
    }
}

struct PointResult {
    rate: f64,
    eta: f64,
    mixed: bool,
    vectors: [DVector<f64>; 2],
}

/// Re-diagonalizes at every grid point (in parallel) and reports the rate and resonance of
/// each transition. Rows are ordered by grid point, then by transition.
pub fn scan_omega0(
    p_base: &SystemParams,
    grid: &[f64],
    transitions: &[Transition],
    options: ScanOptions,
) -> Result<Vec<ScanRow>> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("omega0 grid must be strictly increasing".into()));
    }
    let points: Vec<Vec<PointResult>> = grid
        .par_iter()
        .map(|&omega0| {
            let mut p = SystemParams { omega0, ..p_base.clone() };
            if let Some(ratio) = options.eps_ratio {
                p.eps = ratio * omega0;
            }
            let spec = DressedSpectrum::compute(&p, options.coupling)?;
            transitions
                .iter()
                .map(|t| {
                    let point = transition_point(&spec, t, p.eps)?;
                    Ok(PointResult {
                        rate: point.rate,
                        eta: point.eta_r,
                        mixed: point.is_mixed(),
                        vectors: [
                            spec.conjoint.column(point.source.index).into_owned(),
                            spec.conjoint.column(point.target.index).into_owned(),
                        ],
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(grid.len() * transitions.len());
    for (j, &omega0) in grid.iter().enumerate() {
        for (t, transition) in transitions.iter().enumerate() {
            let here = &points[j][t];
            let switched = j > 0 && {
                let prev = &points[j - 1][t];
                (0..2).any(|s| prev.vectors[s].dot(&here.vectors[s]).powi(2) < 0.5)
            };
            let flag = if here.mixed {
                "mixed"
            } else if switched {
                "switch"
            } else {
                "ok"
            };
            rows.push(ScanRow {
                omega0,
                transition_id: transition.id(),
                rate: here.rate,
                eta_r: here.eta,
                flag: flag.to_string(),
            });
        }
    }
    Ok(rows)
}

/// Writes scan rows as CSV with the header `omega0,transition_id,rate,eta_r,flag`.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega0", "transition_id", "rate", "eta_r", "flag"])?;
    for r in rows {
        w.write_record([
            format!("{}", r.omega0),
            r.transition_id.clone(),
            format!("{:e}", r.rate),
            format!("{}", r.eta_r),
            r.flag.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Static Hamiltonian with a chosen ancilla-field coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticHamiltonian {
    pub params: SystemParams,
    pub coupling: Coupling,
}

impl StaticHamiltonian {
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        build_h0_real(&self.params, self.coupling)
    }

    pub fn spectrum(&self) -> Result<DressedSpectrum> {
        DressedSpectrum::compute(&self.params, self.coupling)
    }
}

/// The static Hamiltonian without the ancilla-field counter-rotating term g(a σ₋^(a) + h.c.).
pub fn rwa_toggle(p: &SystemParams) -> StaticHamiltonian {
    StaticHamiltonian { params: p.clone(), coupling: Coupling::Rwa }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> SystemParams {
        SystemParams { omega0: 0.95, omega_a: 0.6, g: 0.05, h: 0.05, eps: 0.095, n_tr: 8, ..Default::default() }
    }

    #[test]
    fn uncoupled_spectrum_is_exactly_labeled() {
        let p = SystemParams { g: 0.0, ..fig1() };
        let spec = DressedSpectrum::compute(&p, Coupling::Full).unwrap();
        let basis = AtomicBasis::new(&p);
        for (e, label) in spec.energies.iter().zip(&spec.labels) {
            assert!((label.overlap - 1.0).abs() < 1e-12);
            assert!((e - basis.energies[label.k] - label.n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn selectors_parse() {
        assert_eq!("A0,2".parse::<StateSelector>().unwrap(), StateSelector::Conjoint { k: 0, n: 2 });
        assert_eq!("phi2,3".parse::<StateSelector>().unwrap(), StateSelector::Block { n: 2, i: 3 });
        for bad in ["A4,0", "phi1,1", "phi2,5", "B0,0", "A0", "A0,x"] {
            assert!(bad.parse::<StateSelector>().is_err(), "{bad}");
        }
        let t: Transition = "A0,0:A1,1".parse().unwrap();
        assert_eq!(t.id(), "A0,0:A1,1");
    }

    #[test]
    fn rate_symmetry_and_linearity() {
        let spec = DressedSpectrum::compute(&fig1(), Coupling::Full).unwrap();
        let r1 = transition_rate(&spec, 0, 5, 0.1).unwrap();
        assert_eq!(r1, transition_rate(&spec, 5, 0, 0.1).unwrap());
        assert_eq!(2.0 * r1, transition_rate(&spec, 0, 5, 0.2).unwrap());
        assert!(transition_rate(&spec, 3, 3, 0.1).is_err());
        assert!(resonant_frequency(&spec, 3, 3).is_err());
        let table = transition_table(&spec, 0, 0.1, 10).unwrap();
        assert_eq!(table.rows.len(), 9);
        for row in table.rows {
            assert!((row.e_lm - (spec.energies[row.l] - spec.energies[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_e_matrix_matches_elements() {
        let spec = DressedSpectrum::compute(&fig1(), Coupling::Full).unwrap();
        let m = spec.sigma_e_matrix();
        assert!((m[(0, 4)] - spec.sigma_e_element(0, 4)).abs() < 1e-14);
    }

    #[test]
    fn uncoupled_scan_has_no_photon_changing_rates() {
        let p = SystemParams { g: 0.0, ..fig1() };
        let t = [Transition::new(StateSelector::Conjoint { k: 0, n: 0 }, StateSelector::Conjoint { k: 0, n: 2 })];
        let rows = scan_omega0(&p, &[0.8, 0.9, 1.0], &t, ScanOptions::default()).unwrap();
        for r in &rows {
            assert!(r.rate < 1e-14, "{r:?}");
        }
        assert!(scan_omega0(&p, &[0.9, 0.8], &t, ScanOptions::default()).is_err());
    }
}
