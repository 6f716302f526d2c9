//! Closed-form diagonalization of the four-state blocks
//! 𝒜ₙ = {A0ⁿ, A1ⁿ⁻¹, A2ⁿ⁻¹, A3ⁿ⁻²} near degeneracies, with Bloch–Siegert shifts taken from
//! the neighbouring blocks ℬₙ = {A0ⁿ⁻², A1ⁿ⁻¹, A2ⁿ⁻¹, A3ⁿ}.

use serde::Serialize;

use super::quartic::{ferrari_roots, Quartic};
use crate::error::{Error, Result};
use crate::model::{AtomicBasis, SystemParams};
use crate::operators::eig_symmetric4;

/// Entries of the symmetric matrix
/// ```text
/// | 0  a  b  0 |
/// | a  x  0 -c |
/// | b  0  y  d |
/// | 0 -c  d  z |
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockEntries {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlockEntries {
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let BlockEntries { a, b, c, d, x, y, z } = *self;
        [[0.0, a, b, 0.0], [a, x, 0.0, -c], [b, 0.0, y, d], [0.0, -c, d, z]]
    }

    /// Characteristic polynomial coefficients of the block.
    pub fn quartic(&self) -> Quartic {
        let BlockEntries { a, b, c, d, x, y, z } = *self;
        let (a2, b2, c2, d2) = (a * a, b * b, c * c, d * d);
        Quartic {
            b: -(x + y + z),
            c: x * y + (x + y) * z - a2 - b2 - c2 - d2,
            d: (a2 + c2) * y + (b2 + d2) * x + (a2 + b2) * z - x * y * z,
            e: 2.0 * a * b * c * d + a2 * d2 + b2 * c2 - a2 * y * z - b2 * x * z,
        }
    }

    fn scale(&self) -> f64 {
        [self.a, self.b, self.c, self.d, self.x, self.y, self.z]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE)
    }
}

/// Eigenvalues of a block, ascending: Ferrari first, dense eigensolver if the resolvent is
/// degenerate.
pub fn block_eigenvalues(entries: &BlockEntries) -> [f64; 4] {
    if [entries.a, entries.b, entries.c, entries.d].iter().all(|v| *v == 0.0) {
        let mut diag = [0.0, entries.x, entries.y, entries.z];
        diag.sort_by(f64::total_cmp);
        return diag;
    }
    let q = entries.quartic();
    match ferrari_roots(q.b, q.c, q.d, q.e) {
        Ok(roots) => roots,
        Err(_) => eig_symmetric4(&entries.matrix()).0,
    }
}

/// Frequency shifts of the states of ℬₙ caused by the counter-rotating couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochSiegertShifts {
    pub n: usize,
    /// shift of A0ⁿ⁻²
    pub delta_0_nm2: f64,
    /// shift of A1ⁿ⁻¹
    pub delta_1_nm1: f64,
    /// shift of A2ⁿ⁻¹
    pub delta_2_nm1: f64,
    /// shift of A3ⁿ
    pub delta_3_n: f64,
}

/// Shifts from the eigenvalues of the ℬₙ block.
///
/// For n < 2 some members of ℬₙ have negative photon number; their couplings vanish and they
/// are carried as decoupled entries, so e.g. `delta_3_n` is exactly 0 for n = 0.
pub fn bloch_siegert_shifts(p: &SystemParams, n: usize) -> BlochSiegertShifts {
    let basis = AtomicBasis::new(p);
    let (dp, dm, nu) = (basis.d_plus, basis.d_minus, p.nu);
    let lower = p.g * (n as f64 - 1.0).max(0.0).sqrt();
    let upper = p.g * (n as f64).sqrt();
    let entries = BlockEntries {
        a: lower * basis.sigma01,
        b: lower * basis.sigma02,
        c: upper * basis.sigma02,
        d: upper * basis.sigma01,
        x: nu + dp - dm,
        y: nu + dp + dm,
        z: 2.0 * (nu + dp),
    };
    let l = block_eigenvalues(&entries);
    BlochSiegertShifts {
        n,
        delta_0_nm2: l[0],
        delta_1_nm1: l[1] - entries.x,
        delta_2_nm1: l[2] - entries.y,
        delta_3_n: l[3] - entries.z,
    }
}

/// Closed-form solution of one 𝒜ₙ block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubspaceSolution {
    pub n: usize,
    /// Energy offset X (νn + λ0, plus δ0ⁿ when corrected).
    pub offset: f64,
    pub entries: BlockEntries,
    pub quartic: Quartic,
    /// Λ in ascending order.
    pub roots: [f64; 4],
    /// `amplitudes[i][k]`: weight of A_k (A0ⁿ, A1ⁿ⁻¹, A2ⁿ⁻¹, A3ⁿ⁻²) in eigenstate i.
    pub amplitudes: [[f64; 4]; 4],
    /// X + Λᵢ
    pub energies: [f64; 4],
    pub bs_corrected: bool,
    /// False when the printed amplitude formulas were singular and the dense solver was used.
    pub closed_form: bool,
}

/// Builds the 𝒜ₙ block and solves it.
pub fn subspace_matrix(p: &SystemParams, n: usize, corrected: bool) -> Result<SubspaceSolution> {
    p.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("the four-state block needs n >= 2, got {n}")));
    }
    let basis = AtomicBasis::new(p);
    let (dp, dm, nu) = (basis.d_plus, basis.d_minus, p.nu);
    let sn = p.g * (n as f64).sqrt();
    let sn1 = p.g * (n as f64 - 1.0).sqrt();
    let mut entries = BlockEntries {
        a: sn * basis.sigma01,
        b: sn * basis.sigma02,
        c: sn1 * basis.sigma02,
        d: sn1 * basis.sigma01,
        x: dp - dm - nu,
        y: dp + dm - nu,
        z: 2.0 * (dp - nu),
    };
    let mut offset = nu * n as f64 + basis.energies[0];
    if corrected {
        let d0 = bloch_siegert_shifts(p, n + 2).delta_0_nm2;
        let here = bloch_siegert_shifts(p, n);
        let d3 = bloch_siegert_shifts(p, n - 2).delta_3_n;
        offset += d0;
        entries.x += here.delta_1_nm1 - d0;
        entries.y += here.delta_2_nm1 - d0;
        entries.z += d3 - d0;
    }
    Ok(solve_block(n, offset, entries, corrected))
}

fn solve_block(n: usize, offset: f64, entries: BlockEntries, bs_corrected: bool) -> SubspaceSolution {
    let quartic = entries.quartic();
    let roots = block_eigenvalues(&entries);
    let (amplitudes, closed_form) = m1_eigenstates(&entries, &roots);
    SubspaceSolution {
        n,
        offset,
        entries,
        quartic,
        roots,
        amplitudes,
        energies: roots.map(|l| offset + l),
        bs_corrected,
        closed_form,
    }
}

fn closed_form_amplitude(e: &BlockEntries, l: f64) -> Option<[f64; 4]> {
    let BlockEntries { a, b, c, d, x, y: _, z } = *e;
    let (xl, zl) = (x - l, z - l);
    let num = (c - xl * zl / c) * l / a - a * zl / c;
    let den = b + (l * xl * d / a + a * d) / c;
    let big_phi = num / den;
    let t1 = d * big_phi + zl;
    let t2 = c * c - xl * zl - xl * d * big_phi;
    let theta = (1.0 + big_phi * big_phi + t1 * t1 / (c * c) + t2 * t2 / (a * a * c * c)).powf(-0.5);
    let v = [theta / a * (c - xl / c * (zl + d * big_phi)), theta / c * t1, theta * big_phi, theta];
    v.iter().all(|x| x.is_finite()).then_some(v)
}

fn residual(m: &[[f64; 4]; 4], v: &[f64; 4], l: f64) -> f64 {
    (0..4).map(|i| ((0..4).map(|j| m[i][j] * v[j]).sum::<f64>() - l * v[i]).abs()).fold(0.0, f64::max)
}

/// Eigenvectors of the block for the given (ascending) roots.
///
/// Uses the closed-form amplitudes, whose sign convention makes the A3 weight positive.
/// When a or c vanish, or the closed form is ill-conditioned for some root, all four vectors
/// come from the dense solver instead, with the same sign convention (falling back to a
/// positive largest component when the A3 weight is zero). The flag reports which path ran.
pub fn m1_eigenstates(entries: &BlockEntries, roots: &[f64; 4]) -> ([[f64; 4]; 4], bool) {
    let m = entries.matrix();
    let tol = 1e-8 * entries.scale();
    if entries.a != 0.0 && entries.c != 0.0 {
        let mut rows = [[0.0; 4]; 4];
        let mut ok = true;
        for (i, &l) in roots.iter().enumerate() {
            match closed_form_amplitude(entries, l) {
                Some(v) if residual(&m, &v, l) <= tol => rows[i] = v,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && orthonormal(&rows, 1e-8) {
            return (rows, true);
        }
    }
    let (_, vectors) = eig_symmetric4(&m);
    let mut rows = [[0.0; 4]; 4];
    for (i, row) in rows.iter_mut().enumerate() {
        for k in 0..4 {
            row[k] = vectors[k][i];
        }
        let pivot =
            if row[3].abs() > 1e-12 { row[3] } else { *row.iter().max_by(|p, q| p.abs().total_cmp(&q.abs())).unwrap() };
        if pivot < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    (rows, false)
}

fn orthonormal(rows: &[[f64; 4]; 4], tol: f64) -> bool {
    (0..4).all(|i| {
        (0..4).all(|j| {
            let dot: f64 = (0..4).map(|k| rows[i][k] * rows[j][k]).sum();
            (dot - if i == j { 1.0 } else { 0.0 }).abs() <= tol
        })
    })
}

impl SubspaceSolution {
    /// Index of the eigenstate whose weight on component `k` is largest in magnitude;
    /// ties go to the lower energy.
    pub fn dominant_root(&self, k: usize) -> usize {
        let mut best = 0;
        for i in 1..4 {
            if self.amplitudes[i][k].abs() > self.amplitudes[best][k].abs() * (1.0 + 1e-12) {
                best = i;
            }
        }
        best
    }

    /// Conjoint labels (k, photon number) of the four block members.
    pub fn members(&self) -> [(usize, usize); 4] {
        [(0, self.n), (1, self.n - 1), (2, self.n - 1), (3, self.n - 2)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_params(omega0: f64) -> SystemParams {
        SystemParams { omega0, omega_a: 1.0, g: 0.05, h: 0.05, n_tr: 10, ..Default::default() }
    }

    #[test]
    fn uncoupled_block_is_diagonal() {
        let p = SystemParams { g: 0.0, ..table_params(0.9) };
        let sol = subspace_matrix(&p, 2, false).unwrap();
        let e = sol.entries;
        assert_eq!((e.a, e.b, e.c, e.d), (0.0, 0.0, 0.0, 0.0));
        let mut diag = [0.0, e.x, e.y, e.z];
        diag.sort_by(f64::total_cmp);
        for (r, v) in sol.roots.iter().zip(diag) {
            assert!((r - v).abs() < 1e-12);
        }
        assert!((sol.quartic.d + e.x * e.y * e.z).abs() < 1e-15);
        assert!(!sol.closed_form);
        for row in sol.amplitudes {
            let nonzero: Vec<f64> = row.iter().copied().filter(|v| v.abs() > 1e-12).collect();
            assert_eq!(nonzero.len(), 1);
            assert!((nonzero[0].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn double_degeneracy_at_resonance() {
        let p = SystemParams { h: 1e-9, omega0: 1.0, ..table_params(1.0) };
        let e = subspace_matrix(&p, 2, false).unwrap().entries;
        assert!(e.x.abs() < 1e-8 && e.y.abs() < 1e-8);
    }

    #[test]
    fn small_n_rejected() {
        assert!(subspace_matrix(&table_params(0.9), 1, true).is_err());
    }

    #[test]
    fn closed_form_matches_dense_solver() {
        for omega0 in [0.5, 0.9, 0.95, 1.05, 1.3] {
            for corrected in [false, true] {
                let sol = subspace_matrix(&table_params(omega0), 2, corrected).unwrap();
                assert!(sol.closed_form);
                let (values, vectors) = eig_symmetric4(&sol.entries.matrix());
                for i in 0..4 {
                    assert!((sol.roots[i] - values[i]).abs() < 1e-12);
                    let dot: f64 = (0..4).map(|k| sol.amplitudes[i][k] * vectors[k][i]).sum();
                    assert!((dot.abs() - 1.0).abs() < 1e-10);
                    assert!(sol.amplitudes[i][3] > 0.0);
                }
            }
        }
    }

    #[test]
    fn shifts_vanish_without_coupling_and_scale_quadratically() {
        let p = SystemParams { g: 0.0, ..table_params(1.05) };
        let s = bloch_siegert_shifts(&p, 3);
        assert_eq!([s.delta_0_nm2, s.delta_1_nm1, s.delta_2_nm1, s.delta_3_n], [0.0; 4]);
        let at = |g: f64| bloch_siegert_shifts(&SystemParams { g, ..table_params(1.05) }, 3);
        let (s1, s2) = (at(0.005), at(0.01));
        for (a, b) in [
            (s1.delta_0_nm2, s2.delta_0_nm2),
            (s1.delta_1_nm1, s2.delta_1_nm1),
            (s1.delta_2_nm1, s2.delta_2_nm1),
            (s1.delta_3_n, s2.delta_3_n),
        ] {
            assert!((b / a - 4.0).abs() < 0.2, "{a} {b}");
        }
        assert_eq!(bloch_siegert_shifts(&table_params(1.05), 0).delta_3_n, 0.0);
    }

    #[test]
    fn dominant_root_picks_largest_weight() {
        let sol = subspace_matrix(&table_params(1.5), 2, true).unwrap();
        let i = sol.dominant_root(1);
        for j in 0..4 {
            assert!(sol.amplitudes[i][1].abs() >= sol.amplitudes[j][1].abs());
        }
    }
}
