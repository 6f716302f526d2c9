//! Closed-form transition rates between the ground state and the four-state block solutions.
//!
//! Root indices are 0-based positions in the ascending root list of a [`SubspaceSolution`].
//! All rates are signed matrix elements in units of ν; report `|R|/ν` for comparisons.

use super::perturbative::{perturbative_energy, xi_coefficients};
use super::subspace::SubspaceSolution;
use crate::error::{Error, Result};
use crate::model::{AtomicBasis, SystemParams};

fn check_block(sol: &SubspaceSolution, n: usize, i: usize) -> Result<()> {
    if sol.n != n {
        return Err(Error::InvalidParameter(format!("expected the n = {n} block, got n = {}", sol.n)));
    }
    if i >= 4 {
        return Err(Error::InvalidParameter(format!("root index {i} out of range 0..4")));
    }
    Ok(())
}

/// Rate of |A0,0⟩ → |φ2,i⟩ to first order in g:
/// `(ε h²/2) [N0 N3 φ⁽³⁾ − g T_i]`.
///
/// The products N_i N_j h² are evaluated as the σe matrix elements ⟨A_i|σe|A_j⟩, which stay
/// finite at h = 0.
pub fn analytic_rate_2exc(p: &SystemParams, sol: &SubspaceSolution, i: usize) -> Result<f64> {
    check_block(sol, 2, i)?;
    let b = AtomicBasis::new(p);
    let phi = sol.amplitudes[i];
    let se = b.sigma_e;
    let t = b.sigma01 / (p.nu + b.d_plus - b.d_minus) * (se[1][1] * phi[1] + se[1][2] * phi[2])
        + b.sigma02 / (p.nu + b.d_plus + b.d_minus) * (se[2][1] * phi[1] + se[2][2] * phi[2]);
    Ok(p.eps / 2.0 * (se[0][3] * phi[3] - p.g * t))
}

/// Rate between |φn,i⟩ and |φn+2,j⟩: `(ε/2) N0 N3 h² φn,i⁽⁰⁾ φn+2,j⁽³⁾`.
pub fn analytic_rate_ladder(
    p: &SystemParams,
    sol_n: &SubspaceSolution,
    i: usize,
    sol_np2: &SubspaceSolution,
    j: usize,
) -> Result<f64> {
    check_block(sol_n, sol_n.n, i)?;
    check_block(sol_np2, sol_n.n + 2, j)?;
    let b = AtomicBasis::new(p);
    Ok(p.eps / 2.0 * b.sigma_e[0][3] * sol_n.amplitudes[i][0] * sol_np2.amplitudes[j][3])
}

/// Order-of-magnitude (strongly underestimating) rate of |A0,0⟩ → |φ4,i⟩:
/// `√2 (ε/2) h² g² φ⁽³⁾ N3 (N0 Ξ0⁽²⁾ + N3 Ξ0⁽⁵⁾)`.
pub fn analytic_rate_4exc(p: &SystemParams, sol: &SubspaceSolution, i: usize) -> Result<f64> {
    check_block(sol, 4, i)?;
    let b = AtomicBasis::new(p);
    let xi = xi_coefficients(p, 0);
    let se = b.sigma_e;
    Ok(2f64.sqrt() * p.eps / 2.0 * p.g * p.g * sol.amplitudes[i][3] * (se[0][3] * xi.xi2 + se[3][3] * xi.xi5))
}

/// Resonant modulation frequency λφ₂,ᵢ − λ0,0 of the two-excitation transition.
pub fn analytic_resonance_2exc(p: &SystemParams, sol: &SubspaceSolution, i: usize) -> Result<f64> {
    check_block(sol, 2, i)?;
    Ok(sol.energies[i] - perturbative_energy(p, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::subspace::subspace_matrix;

    fn params() -> SystemParams {
        SystemParams { omega0: 1.05, omega_a: 1.0, g: 0.05, h: 0.05, eps: 0.105, ..Default::default() }
    }

    #[test]
    fn vanishes_without_modulation_or_coupling() {
        let p = SystemParams { eps: 0.0, ..params() };
        let s2 = subspace_matrix(&p, 2, true).unwrap();
        let s4 = subspace_matrix(&p, 4, true).unwrap();
        assert_eq!(analytic_rate_2exc(&p, &s2, 1).unwrap(), 0.0);
        assert_eq!(analytic_rate_ladder(&p, &s2, 1, &s4, 1).unwrap(), 0.0);
        assert_eq!(analytic_rate_4exc(&p, &s4, 1).unwrap(), 0.0);

        let p = SystemParams { h: 0.0, ..params() };
        let s2 = subspace_matrix(&p, 2, true).unwrap();
        for i in 0..4 {
            assert_eq!(analytic_rate_2exc(&p, &s2, i).unwrap().abs(), 0.0);
        }

        let p = SystemParams { g: 0.0, ..params() };
        let s4 = subspace_matrix(&p, 4, true).unwrap();
        assert_eq!(analytic_rate_4exc(&p, &s4, 0).unwrap(), 0.0);
    }

    #[test]
    fn resonant_ancilla_point() {
        let p = params();
        let sol = subspace_matrix(&p, 2, true).unwrap();
        let r = analytic_rate_2exc(&p, &sol, 1).unwrap().abs();
        assert!((r - 8.4e-4).abs() / 8.4e-4 < 0.05, "{r}");
        let eta = analytic_resonance_2exc(&p, &sol, 1).unwrap();
        assert!((eta - 2.002).abs() < 1e-3, "{eta}");
    }

    #[test]
    fn wrong_block_rejected() {
        let p = params();
        let s4 = subspace_matrix(&p, 4, true).unwrap();
        assert!(analytic_rate_2exc(&p, &s4, 0).is_err());
        let s2 = subspace_matrix(&p, 2, true).unwrap();
        assert!(analytic_rate_2exc(&p, &s2, 4).is_err());
    }
}
