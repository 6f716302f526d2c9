//! Physical parameters, the conjoint two-atom basis, Hamiltonians and dissipators.
//!
//! Every quantity is measured in units of the cavity frequency `nu`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{fock_annihilation, qubit_operators, tensor3, CMatrix, HilbertConfig, ONE};

/// Keys accepted by the flat `key = value` configuration format, in serialization order.
pub const CONFIG_KEYS: [&str; 12] =
    ["nu", "omega0", "omega_a", "g", "h", "eps", "eta", "gamma", "gamma_ph", "gamma_a", "gamma_ph_a", "n_tr"];

/// One-line description of each configuration key, used by help texts.
pub const CONFIG_KEY_HELP: [(&str, &str); 12] = [
    ("nu", "cavity frequency (the unit of all frequencies, normally 1)"),
    ("omega0", "bare t-qubit frequency"),
    ("omega_a", "ancilla frequency"),
    ("g", "ancilla-field coupling"),
    ("h", "t-qubit-ancilla coupling"),
    ("eps", "modulation amplitude"),
    ("eta", "modulation frequency"),
    ("gamma", "t-qubit relaxation rate"),
    ("gamma_ph", "t-qubit pure dephasing rate"),
    ("gamma_a", "ancilla relaxation rate"),
    ("gamma_ph_a", "ancilla pure dephasing rate"),
    ("n_tr", "maximum photon number kept in the Fock space"),
];

/// All physical constants of the model, in units of `nu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub nu: f64,
    pub omega0: f64,
    pub omega_a: f64,
    pub g: f64,
    pub h: f64,
    pub eps: f64,
    pub eta: f64,
    pub gamma: f64,
    pub gamma_ph: f64,
    pub gamma_a: f64,
    pub gamma_ph_a: f64,
    pub n_tr: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            omega0: 1.0,
            omega_a: 1.0,
            g: 0.05,
            h: 0.05,
            eps: 0.1,
            eta: 2.0,
            gamma: 0.0,
            gamma_ph: 0.0,
            gamma_a: 0.0,
            gamma_ph_a: 0.0,
            n_tr: 15,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("nu", self.nu),
            ("omega0", self.omega0),
            ("omega_a", self.omega_a),
            ("g", self.g),
            ("h", self.h),
            ("eps", self.eps),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("gamma_ph", self.gamma_ph),
            ("gamma_a", self.gamma_a),
            ("gamma_ph_a", self.gamma_ph_a),
        ];
        for (name, value) in named {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be finite and non-negative, got {value}")));
            }
        }
        if self.nu <= 0.0 {
            return Err(Error::InvalidParameter("nu must be positive".into()));
        }
        if self.g >= self.nu || self.h >= self.nu {
            return Err(Error::InvalidParameter(format!(
                "couplings must stay below nu (g = {}, h = {})",
                self.g, self.h
            )));
        }
        HilbertConfig::new(self.n_tr)?;
        Ok(())
    }

    /// Soft warnings that do not prevent a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.eps > 0.5 * self.eta {
            out.push(format!(
                "modulation amplitude eps = {} exceeds half the modulation frequency eta = {}; \
                 the weak-modulation picture does not apply",
                self.eps, self.eta
            ));
        }
        out
    }

    pub fn hilbert(&self) -> Result<HilbertConfig> {
        HilbertConfig::new(self.n_tr)
    }

    /// Sets the damping rates used throughout the numerical examples:
    /// gamma = 5e-3 g, gamma_ph = gamma/2, gamma_a = gamma/5, gamma_ph_a = gamma_ph/5.
    pub fn with_reference_dissipation(mut self) -> Self {
        self.gamma = 5e-3 * self.g;
        self.gamma_ph = self.gamma / 2.0;
        self.gamma_a = self.gamma / 5.0;
        self.gamma_ph_a = self.gamma_ph / 5.0;
        self
    }

    pub fn without_dissipation(mut self) -> Self {
        self.gamma = 0.0;
        self.gamma_ph = 0.0;
        self.gamma_a = 0.0;
        self.gamma_ph_a = 0.0;
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "nu" => self.nu,
            "omega0" => self.omega0,
            "omega_a" => self.omega_a,
            "g" => self.g,
            "h" => self.h,
            "eps" => self.eps,
            "eta" => self.eta,
            "gamma" => self.gamma,
            "gamma_ph" => self.gamma_ph,
            "gamma_a" => self.gamma_a,
            "gamma_ph_a" => self.gamma_ph_a,
            "n_tr" => self.n_tr as f64,
            _ => return None,
        })
    }

    /// Assigns one configuration key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(format!("unknown key '{key}' (accepted: {})", CONFIG_KEYS.join(", ")));
        }
        if key == "n_tr" {
            self.n_tr = value.parse().map_err(|_| format!("n_tr expects a non-negative integer, got '{value}'"))?;
            return Ok(());
        }
        let x: f64 = value.parse().map_err(|_| format!("{key} expects a number, got '{value}'"))?;
        let slot = match key {
            "nu" => &mut self.nu,
            "omega0" => &mut self.omega0,
            "omega_a" => &mut self.omega_a,
            "g" => &mut self.g,
            "h" => &mut self.h,
            "eps" => &mut self.eps,
            "eta" => &mut self.eta,
            "gamma" => &mut self.gamma,
            "gamma_ph" => &mut self.gamma_ph,
            "gamma_a" => &mut self.gamma_a,
            "gamma_ph_a" => &mut self.gamma_ph_a,
            _ => unreachable!(),
        };
        *slot = x;
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#` comments are ignored.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config { line: i + 1, message: format!("expected key = value, got '{line}'") })?;
            self.set(key.trim(), value).map_err(|message| Error::Config { line: i + 1, message })?;
        }
        Ok(())
    }

    /// Parses a configuration document on top of the defaults and validates the result.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut p = Self::default();
        p.apply_config(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            if key == "n_tr" {
                let _ = writeln!(out, "n_tr = {}", self.n_tr);
            } else {
                let _ = writeln!(out, "{key} = {}", self.get(key).unwrap());
            }
        }
        out
    }
}

/// Eigenstates of the uncoupled-from-field two-atom Hamiltonian
/// `omega0 σe + omega_a σe^(a) + h σx σx^(a)`.
///
/// State vectors are stored as rows over the ordered basis
/// (|g,g_a⟩, |g,e_a⟩, |e,g_a⟩, |e,e_a⟩).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomicBasis {
    pub states: [[f64; 4]; 4],
    pub energies: [f64; 4],
    pub w_plus: f64,
    pub w_minus: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    /// Normalization constants of the unnormalized expansions; `norms[3]` diverges at h = 0.
    pub norms: [f64; 4],
    pub sigma01: f64,
    pub sigma02: f64,
    /// Ancilla σx in this basis, `⟨A_i|σx^(a)|A_j⟩`.
    pub sigma_x_a: [[f64; 4]; 4],
    /// t-qubit σe in this basis, `⟨A_i|σe|A_j⟩`.
    pub sigma_e: [[f64; 4]; 4],
}

const GG: usize = 0;
const GE: usize = 1;
const EG: usize = 2;
const EE: usize = 3;

fn normalized2(u: f64, v: f64) -> (f64, f64) {
    let r = u.hypot(v);
    (u / r, v / r)
}

fn project(states: &[[f64; 4]; 4], op: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s += states[i][a] * op[a][b] * states[j][b];
                }
            }
            out[i][j] = s;
        }
    }
    out
}

/// Two-atom Hamiltonian as a real 4×4 matrix in the (gg, ge, eg, ee) basis.
pub fn atomic_hamiltonian(p: &SystemParams) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    m[GE][GE] = p.omega_a;
    m[EG][EG] = p.omega0;
    m[EE][EE] = p.omega0 + p.omega_a;
    m[GG][EE] = p.h;
    m[EE][GG] = p.h;
    m[GE][EG] = p.h;
    m[EG][GE] = p.h;
    m
}

impl AtomicBasis {
    /// Builds the four eigenstates with the sign structure of their closed-form expansions:
    /// A0 ∝ (W₊+D₊)|g,g_a⟩ − h|e,e_a⟩, A1 ∝ (W₋−D₋)|g,e_a⟩ + h|e,g_a⟩,
    /// A2 ∝ (W₋+D₋)|g,e_a⟩ + h|e,g_a⟩, A3 ∝ (W₊−D₊)|g,g_a⟩ − h|e,e_a⟩.
    ///
    /// The components are evaluated in cancellation-free form. When h = 0 and the atoms are
    /// resonant, A1 and A2 become the antisymmetric and symmetric combinations.
    pub fn new(p: &SystemParams) -> Self {
        let h = p.h;
        let w_plus = (p.omega_a + p.omega0) / 2.0;
        let w_minus = (p.omega_a - p.omega0) / 2.0;
        let d_plus = w_plus.hypot(h);
        let d_minus = w_minus.hypot(h);

        let mut states = [[0.0; 4]; 4];
        let (u, v) = if w_plus + d_plus > 0.0 { normalized2(w_plus + d_plus, -h) } else { (1.0, 0.0) };
        states[0][GG] = u;
        states[0][EE] = v;

        let (u, v) = if h > 0.0 { normalized2(-h / (w_plus + d_plus), -1.0) } else { (0.0, -1.0) };
        states[3][GG] = u;
        states[3][EE] = v;

        let (ge, eg) = if w_minus > 0.0 {
            normalized2(-h / (w_minus + d_minus), 1.0)
        } else if w_minus < 0.0 {
            normalized2(w_minus - d_minus, h)
        } else {
            normalized2(-1.0, 1.0)
        };
        states[1][GE] = ge;
        states[1][EG] = eg;

        let (ge, eg) = if w_minus < 0.0 {
            normalized2(h / (d_minus - w_minus), 1.0)
        } else if w_minus > 0.0 {
            normalized2(w_minus + d_minus, h)
        } else {
            normalized2(1.0, 1.0)
        };
        states[2][GE] = ge;
        states[2][EG] = eg;

        let norms = [
            1.0 / (w_plus + d_plus).hypot(h),
            1.0 / (w_minus - d_minus).hypot(h),
            1.0 / (w_minus + d_minus).hypot(h),
            1.0 / (h * h / (w_plus + d_plus)).hypot(h),
        ];

        let mut sx = [[0.0; 4]; 4];
        sx[GG][GE] = 1.0;
        sx[GE][GG] = 1.0;
        sx[EG][EE] = 1.0;
        sx[EE][EG] = 1.0;
        let mut se = [[0.0; 4]; 4];
        se[EG][EG] = 1.0;
        se[EE][EE] = 1.0;
        let sigma_x_a = project(&states, &sx);
        let sigma_e = project(&states, &se);

        Self {
            states,
            energies: [w_plus - d_plus, w_plus - d_minus, w_plus + d_minus, w_plus + d_plus],
            w_plus,
            w_minus,
            d_plus,
            d_minus,
            norms,
            sigma01: sigma_x_a[0][1],
            sigma02: sigma_x_a[0][2],
            sigma_x_a,
            sigma_e,
        }
    }
}

pub fn conjoint_basis(p: &SystemParams) -> AtomicBasis {
    AtomicBasis::new(p)
}

/// Unitary whose columns are the conjoint states |A_k⟩⊗|n⟩ expressed in the bare product
/// basis; column `k*(n_tr+1) + n` holds |A_k^n⟩.
pub fn conjoint_transform(basis: &AtomicBasis, hilbert: &HilbertConfig) -> CMatrix {
    let f = hilbert.fock_dim();
    let mut u = CMatrix::zeros(hilbert.dim(), hilbert.dim());
    for k in 0..4 {
        for pair in 0..4 {
            let amp = basis.states[k][pair];
            if amp == 0.0 {
                continue;
            }
            for n in 0..f {
                u[(pair * f + n, k * f + n)] = ONE * amp;
            }
        }
    }
    u
}

/// Which ancilla-field coupling is kept in the static Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Coupling {
    /// g (a + a†) σx^(a)
    #[default]
    Full,
    /// g (a σ₊^(a) + a† σ₋^(a)); the term g (a σ₋^(a) + a† σ₊^(a)) is dropped.
    Rwa,
}

/// Static Hamiltonian assembled in the bare product basis.
pub fn build_h0(p: &SystemParams) -> Result<CMatrix> {
    build_h0_with(p, Coupling::Full)
}

pub fn build_h0_with(p: &SystemParams, coupling: Coupling) -> Result<CMatrix> {
    p.validate()?;
    let q = qubit_operators();
    let a = fock_annihilation(p.n_tr)?;
    let i2 = CMatrix::identity(2, 2);
    let i_f = CMatrix::identity(p.n_tr + 1, p.n_tr + 1);
    let n_op = a.adjoint() * &a;
    let mut h = tensor3(&i2, &i2, &n_op)? * (ONE * p.nu)
        + tensor3(&q.sigma_e, &i2, &i_f)? * (ONE * p.omega0)
        + tensor3(&i2, &q.sigma_e, &i_f)? * (ONE * p.omega_a)
        + tensor3(&q.sigma_x, &q.sigma_x, &i_f)? * (ONE * p.h);
    let field = match coupling {
        Coupling::Full => tensor3(&i2, &q.sigma_x, &(&a + a.adjoint()))?,
        Coupling::Rwa => tensor3(&i2, &q.sigma_plus, &a)? + tensor3(&i2, &q.sigma_minus, &a.adjoint())?,
    };
    h += field * (ONE * p.g);
    Ok(h)
}

/// Real symmetric form of the static Hamiltonian in the bare product basis (the Hamiltonian
/// has only real entries in this basis).
pub fn build_h0_real(p: &SystemParams, coupling: Coupling) -> Result<DMatrix<f64>> {
    p.validate()?;
    let hil = p.hilbert()?;
    let mut m = DMatrix::<f64>::zeros(hil.dim(), hil.dim());
    for i in 0..hil.dim() {
        let (q, qa, n) = hil.decompose(i);
        m[(i, i)] = p.nu * n as f64 + p.omega0 * q as f64 + p.omega_a * qa as f64;
        // h σx σx^(a)
        m[(hil.index(1 - q, 1 - qa, n), i)] += p.h;
        if n < p.n_tr {
            let amp = p.g * ((n + 1) as f64).sqrt();
            // a† σx^(a) and its adjoint; in RWA only a† σ₋^(a) survives
            if coupling == Coupling::Full || qa == 1 {
                let j = hil.index(q, 1 - qa, n + 1);
                m[(j, i)] += amp;
                m[(i, j)] += amp;
            }
        }
    }
    Ok(m)
}

/// Static Hamiltonian assembled from the conjoint form
/// `ν n + Σ λ_i |A_i⟩⟨A_i| + g (a + a†) σx^(a)` and returned in the bare product basis.
pub fn build_h0_conjoint(p: &SystemParams) -> Result<CMatrix> {
    p.validate()?;
    let hilbert = p.hilbert()?;
    let basis = AtomicBasis::new(p);
    let f = hilbert.fock_dim();
    let mut hc = CMatrix::zeros(hilbert.dim(), hilbert.dim());
    for k in 0..4 {
        for n in 0..f {
            hc[(k * f + n, k * f + n)] = ONE * (p.nu * n as f64 + basis.energies[k]);
        }
    }
    for i in 0..4 {
        for j in 0..4 {
            let s = basis.sigma_x_a[i][j];
            if s == 0.0 {
                continue;
            }
            for n in 1..f {
                let x = ONE * (p.g * s * (n as f64).sqrt());
                hc[(i * f + n - 1, j * f + n)] += x;
                hc[(i * f + n, j * f + n - 1)] += x;
            }
        }
    }
    let u = conjoint_transform(&basis, &hilbert);
    Ok(&u * hc * u.adjoint())
}

/// The modulated operator σe ⊗ I ⊗ I.
pub fn modulation_operator(p: &SystemParams) -> Result<CMatrix> {
    let q = qubit_operators();
    let i2 = CMatrix::identity(2, 2);
    tensor3(&q.sigma_e, &i2, &CMatrix::identity(p.n_tr + 1, p.n_tr + 1))
}

/// Time-dependent Hamiltonian `H0 + eps sin(eta t) σe`.
pub fn build_h(p: &SystemParams, t: f64) -> Result<CMatrix> {
    let h0 = build_h0(p)?;
    Ok(h0 + modulation_operator(p)? * (ONE * (p.eps * (p.eta * t).sin())))
}

/// A Lindblad channel `rate · D[jump]` with `D[J]ρ = JρJ† − ½{J†J, ρ}`.
#[derive(Clone, Debug)]
pub struct Dissipator {
    pub name: &'static str,
    pub rate: f64,
    pub jump: CMatrix,
}

/// Zero-temperature relaxation and dephasing of both qubits:
/// (γ, σ₋), (γ_ph/2, σz), (γ_a, σ₋^(a)), (γ_ph_a/2, σz^(a)).
pub fn lindblad_dissipators(p: &SystemParams) -> Result<Vec<Dissipator>> {
    p.validate()?;
    let q = qubit_operators();
    let i2 = CMatrix::identity(2, 2);
    let i_f = CMatrix::identity(p.n_tr + 1, p.n_tr + 1);
    Ok(vec![
        Dissipator { name: "relaxation", rate: p.gamma, jump: tensor3(&q.sigma_minus, &i2, &i_f)? },
        Dissipator { name: "dephasing", rate: p.gamma_ph / 2.0, jump: tensor3(&q.sigma_z, &i2, &i_f)? },
        Dissipator { name: "ancilla_relaxation", rate: p.gamma_a, jump: tensor3(&i2, &q.sigma_minus, &i_f)? },
        Dissipator { name: "ancilla_dephasing", rate: p.gamma_ph_a / 2.0, jump: tensor3(&i2, &q.sigma_z, &i_f)? },
    ])
}

/// Optional photon loss channel (κ, a). Not part of the default dissipator set.
pub fn cavity_decay(p: &SystemParams, kappa: f64) -> Result<Dissipator> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::InvalidParameter(format!("cavity decay rate must be >= 0, got {kappa}")));
    }
    let i2 = CMatrix::identity(2, 2);
    Ok(Dissipator { name: "cavity_decay", rate: kappa, jump: tensor3(&i2, &i2, &fock_annihilation(p.n_tr)?)? })
}
