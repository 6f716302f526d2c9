//! Second-order (in g) expansion of the dressed state |A0, n⟩ far from degeneracies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AtomicBasis, SystemParams};

/// Coefficients Ξ⁽¹⁾..Ξ⁽⁵⁾ of the second-order terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XiCoefficients {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub xi4: f64,
    pub xi5: f64,
}

/// One term c·|A_k^m⟩ of the expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Term {
    pub k: usize,
    pub photons: i64,
    pub coefficient: f64,
}

/// Non-normalized expansion of |A0, n⟩ in the conjoint basis and its energy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbativeState {
    pub n: usize,
    /// Terms on A0ⁿ, A1ⁿ⁻¹, A1ⁿ⁺¹, A2ⁿ⁻¹, A2ⁿ⁺¹, A0ⁿ⁻², A3ⁿ⁻², A0ⁿ⁺², A3ⁿ⁺², A3ⁿ;
    /// entries with negative photon number have coefficient exactly 0.
    pub terms: [Term; 10],
    pub xi: XiCoefficients,
    pub energy: f64,
}

impl PerturbativeState {
    pub fn coefficient(&self, k: usize, photons: usize) -> f64 {
        self.terms.iter().filter(|t| t.k == k && t.photons == photons as i64).map(|t| t.coefficient).sum()
    }
}

pub fn xi_coefficients(p: &SystemParams, n: usize) -> XiCoefficients {
    let b = AtomicBasis::new(p);
    let (nu, dp, dm, s01, s02) = (p.nu, b.d_plus, b.d_minus, b.sigma01, b.sigma02);
    let nf = n as f64;
    XiCoefficients {
        xi1: (s01 * s01 / (nu - dp + dm) + s02 * s02 / (nu - dp - dm)) / (2.0 * nu),
        xi2: (s01 * s01 / (nu + dp - dm) + s02 * s02 / (nu + dp + dm)) / (2.0 * nu),
        xi3: -s01 * s02 * dm / dp
            * (nf / ((nu - dp + dm) * (nu - dp - dm)) + (nf + 1.0) / ((nu + dp + dm) * (nu + dp - dm))),
        xi4: s01 * s02 * dm / ((nu - dp) * (nu - dp - dm) * (nu - dp + dm)),
        xi5: -s01 * s02 * dm / ((nu + dp) * (nu + dp + dm) * (nu + dp - dm)),
    }
}

/// Second-order energy λ0,n of |A0, n⟩ (no degeneracy guard).
pub fn perturbative_energy(p: &SystemParams, n: usize) -> f64 {
    let b = AtomicBasis::new(p);
    let (nu, dp, dm, s01, s02) = (p.nu, b.d_plus, b.d_minus, b.sigma01, b.sigma02);
    let nf = n as f64;
    // terms proportional to n are dropped explicitly so that n = 0 never divides by a
    // vanishing lower-branch denominator
    let lower = if n == 0 { 0.0 } else { s01 * s01 * nf / (nu - dp + dm) + s02 * s02 * nf / (nu - dp - dm) };
    let upper = -s01 * s01 * (nf + 1.0) / (nu + dp - dm) - s02 * s02 * (nf + 1.0) / (nu + dp + dm);
    b.energies[0] + nu * nf + p.g * p.g * (lower + upper)
}

/// Expansion of |A0, n⟩ to second order in g.
///
/// Rejects parameters where a denominator that actually enters the expansion is smaller than
/// `5 g √(n+1)`; use the four-state block solution there instead.
pub fn perturbative_state(p: &SystemParams, n: usize) -> Result<PerturbativeState> {
    p.validate()?;
    let b = AtomicBasis::new(p);
    let (nu, dp, dm, s01, s02, g) = (p.nu, b.d_plus, b.d_minus, b.sigma01, b.sigma02, p.g);

    let guard = 5.0 * g * ((n + 1) as f64).sqrt();
    let mut denominators = vec![nu + dp - dm, nu + dp + dm];
    if n >= 1 {
        denominators.extend([nu - dp + dm, nu - dp - dm]);
    }
    if n >= 2 {
        denominators.push(nu - dp);
    }
    if g > 0.0 {
        for den in denominators {
            if den.abs() <= guard {
                return Err(Error::NearDegeneracy { denominator: den.abs(), guard });
            }
        }
    }

    let nf = n as f64;
    let xi = xi_coefficients(p, n);
    let sq_n = nf.sqrt();
    let sq_n1 = (nf + 1.0).sqrt();
    let low2 = (nf * (nf - 1.0)).max(0.0).sqrt();
    let high2 = ((nf + 1.0) * (nf + 2.0)).sqrt();
    let ni = n as i64;
    let g2 = g * g;
    let lower_ok = n >= 1;
    let term = |k: usize, photons: i64, c: f64| Term { k, photons, coefficient: if photons < 0 { 0.0 } else { c } };
    let terms = [
        term(0, ni, 1.0),
        term(1, ni - 1, if lower_ok { g * s01 * sq_n / (nu - dp + dm) } else { 0.0 }),
        term(1, ni + 1, -g * s01 * sq_n1 / (nu + dp - dm)),
        term(2, ni - 1, if lower_ok { g * s02 * sq_n / (nu - dp - dm) } else { 0.0 }),
        term(2, ni + 1, -g * s02 * sq_n1 / (nu + dp + dm)),
        term(0, ni - 2, if n >= 2 { g2 * low2 * xi.xi1 } else { 0.0 }),
        term(3, ni - 2, if n >= 2 { g2 * low2 * xi.xi4 } else { 0.0 }),
        term(0, ni + 2, g2 * high2 * xi.xi2),
        term(3, ni + 2, g2 * high2 * xi.xi5),
        term(3, ni, if lower_ok { g2 * xi.xi3 } else { g2 * n0_xi3(p, &b) }),
    ];
    Ok(PerturbativeState { n, terms, xi, energy: perturbative_energy(p, n) })
}

// Ξ⁽³⁾ at n = 0, without the n/((ν−D₊+D₋)(ν−D₊−D₋)) term that vanishes identically.
fn n0_xi3(p: &SystemParams, b: &AtomicBasis) -> f64 {
    let (nu, dp, dm) = (p.nu, b.d_plus, b.d_minus);
    -b.sigma01 * b.sigma02 * dm / dp / ((nu + dp + dm) * (nu + dp - dm))
}
