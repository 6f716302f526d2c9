//! Fixed-step RK4 kernels for the driven Hamiltonian and the Lindblad generator, plus
//! one-interval propagators that are reused when the drive is periodic.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::Dissipator;
use crate::operators::{CMatrix, I, ZERO};

/// Row-compressed real matrix.
#[derive(Clone, Debug, Default)]
pub(crate) struct SparseReal {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseReal {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
            .collect();
        Self { rows }
    }

    pub fn from_complex(m: &CMatrix) -> Result<Self> {
        if m.iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidParameter("jump operators must be real in the product basis".into()));
        }
        Ok(Self::from_dense(&m.map(|z| z.re)))
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Row-sum bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        self.rows.iter().map(|r| r.iter().map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `out = self · x`
    fn mul(&self, x: &CMatrix, out: &mut CMatrix) {
        let n = self.dim();
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for j in 0..x.ncols() {
            let col = &xs[j * n..(j + 1) * n];
            for (i, row) in self.rows.iter().enumerate() {
                let mut acc = ZERO;
                for &(k, v) in row {
                    acc += col[k] * v;
                }
                os[j * n + i] = acc;
            }
        }
    }

    fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.dim()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                rows[k].push((i, v));
            }
        }
        Self { rows }
    }

    fn mul_sparse(&self, other: &Self) -> Self {
        let n = self.dim();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = vec![0.0; n];
                for &(k, v) in row {
                    for &(j, w) in &other.rows[k] {
                        acc[j] += v * w;
                    }
                }
                acc.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect()
            })
            .collect();
        Self { rows }
    }
}

/// `H(t) = H0 + eps sin(eta t) diag(se)` with H0 already shifted by a constant.
#[derive(Clone, Debug)]
pub(crate) struct Drive {
    pub h0: SparseReal,
    pub se: Vec<f64>,
    pub eps: f64,
    pub eta: f64,
}

impl Drive {
    fn coefficient(&self, t: f64) -> f64 {
        self.eps * (self.eta * t).sin()
    }

    /// `out = H(t) x`
    fn apply(&self, t: f64, x: &CMatrix, out: &mut CMatrix) {
        self.h0.mul(x, out);
        let c = self.coefficient(t);
        if c != 0.0 {
            let n = self.h0.dim();
            let xs = x.as_slice();
            let os = out.as_mut_slice();
            for j in 0..x.ncols() {
                for i in 0..n {
                    if self.se[i] != 0.0 {
                        os[j * n + i] += xs[j * n + i] * (c * self.se[i]);
                    }
                }
            }
        }
    }

    /// Bound on |H(t)|.
    pub fn norm_bound(&self) -> f64 {
        self.h0.norm_bound() + self.eps.abs()
    }
}

pub(crate) struct Rk4 {
    k1: CMatrix,
    k2: CMatrix,
    k3: CMatrix,
    k4: CMatrix,
    tmp: CMatrix,
}

impl Rk4 {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        let z = CMatrix::zeros(nrows, ncols);
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    pub fn step<F>(&mut self, f: &F, t: f64, h: f64, y: &mut CMatrix)
    where
        F: Fn(f64, &CMatrix, &mut CMatrix),
    {
        rk4_step(f, t, h, y, self);
    }
}

/// `y += a·x`
pub(crate) fn axpy(y: &mut CMatrix, a: Complex64, x: &CMatrix) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}

/// Largest entry modulus.
pub(crate) fn amax(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn rk4_step<F>(f: &F, t: f64, h: f64, y: &mut CMatrix, w: &mut Rk4)
where
    F: Fn(f64, &CMatrix, &mut CMatrix),
{
    let half = Complex64::new(h / 2.0, 0.0);
    f(t, y, &mut w.k1);
    w.tmp.copy_from(y);
    axpy(&mut w.tmp, half, &w.k1);
    f(t + h / 2.0, &w.tmp, &mut w.k2);
    w.tmp.copy_from(y);
    axpy(&mut w.tmp, half, &w.k2);
    f(t + h / 2.0, &w.tmp, &mut w.k3);
    w.tmp.copy_from(y);
    axpy(&mut w.tmp, Complex64::new(h, 0.0), &w.k3);
    f(t + h, &w.tmp, &mut w.k4);
    let ys = y.as_mut_slice();
    let (k1, k2, k3, k4) = (w.k1.as_slice(), w.k2.as_slice(), w.k3.as_slice(), w.k4.as_slice());
    let c = h / 6.0;
    for i in 0..ys.len() {
        ys[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * c;
    }
}

/// `dy/dt = f(t, y)` over `[t0, t0 + steps·h]`.
fn integrate<F>(f: &F, t0: f64, h: f64, steps: usize, y: &mut CMatrix)
where
    F: Fn(f64, &CMatrix, &mut CMatrix),
{
    let mut w = Rk4::new(y.nrows(), y.ncols());
    for s in 0..steps {
        rk4_step(f, t0 + s as f64 * h, h, y, &mut w);
    }
}

impl Drive {
    fn schrodinger_rhs(&self) -> impl Fn(f64, &CMatrix, &mut CMatrix) + '_ {
        move |t, x, out| {
            self.apply(t, x, out);
            out.iter_mut().for_each(|z| *z *= -I);
        }
    }

    /// Propagates the columns of `y` from `t0` by `steps` RK4 steps of size `h`.
    pub fn evolve_pure(&self, t0: f64, h: f64, steps: usize, y: &mut CMatrix) {
        integrate(&self.schrodinger_rhs(), t0, h, steps, y);
    }

    /// RK4 propagator from 0 to `steps·h`.
    pub fn propagator(&self, h: f64, steps: usize) -> CMatrix {
        let mut u = CMatrix::identity(self.h0.dim(), self.h0.dim());
        self.evolve_pure(0.0, h, steps, &mut u);
        u
    }
}

/// Zero-temperature Lindblad generator in the product basis.
#[derive(Clone, Debug)]
pub(crate) struct Lindblad {
    pub drive: Drive,
    jumps: Vec<(f64, SparseReal)>,
    /// H0 − (i/2) Σ rate J†J, row-compressed
    effective: Vec<Vec<(usize, Complex64)>>,
    damping_bound: f64,
    scratch: RefCell<CMatrix>,
}

impl Lindblad {
    pub fn new(drive: Drive, dissipators: &[Dissipator]) -> Result<Self> {
        let n = drive.h0.dim();
        let mut jumps = Vec::new();
        let mut eff = vec![vec![ZERO; n]; n];
        for (i, row) in drive.h0.rows.iter().enumerate() {
            for &(k, v) in row {
                eff[i][k] += v;
            }
        }
        let mut damping = vec![vec![0.0; n]; n];
        for d in dissipators {
            if d.rate == 0.0 {
                continue;
            }
            if d.jump.nrows() != n || d.jump.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "jump '{}' is {}x{}, expected {n}x{n}",
                    d.name,
                    d.jump.nrows(),
                    d.jump.ncols()
                )));
            }
            let j = SparseReal::from_complex(&d.jump)?;
            for (i, row) in j.transpose().mul_sparse(&j).rows.iter().enumerate() {
                for &(k, v) in row {
                    damping[i][k] += d.rate * v;
                    eff[i][k] += Complex64::new(0.0, -0.5 * d.rate * v);
                }
            }
            jumps.push((d.rate, j));
        }
        let damping_bound = damping.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let effective =
            eff.into_iter().map(|r| r.into_iter().enumerate().filter(|(_, v)| *v != ZERO).collect()).collect();
        Ok(Self { drive, jumps, effective, damping_bound, scratch: RefCell::new(CMatrix::zeros(n, n)) })
    }

    pub fn norm_bound(&self) -> f64 {
        2.0 * self.drive.norm_bound() + 2.0 * self.damping_bound
    }

    // dρ/dt for Hermitian ρ: −i(Aρ − (Aρ)†) + Σ r JρJ†, A = H − (i/2)Σ r J†J
    fn rhs(&self) -> impl Fn(f64, &CMatrix, &mut CMatrix) + '_ {
        let n = self.drive.h0.dim();
        move |t, rho, out| {
            let c = self.drive.coefficient(t);
            let mut scratch = self.scratch.borrow_mut();
            let a = scratch.as_mut_slice();
            let r = rho.as_slice();
            for j in 0..n {
                let col = &r[j * n..(j + 1) * n];
                for (i, row) in self.effective.iter().enumerate() {
                    let mut acc = col[i] * (c * self.drive.se[i]);
                    for &(k, v) in row {
                        acc += col[k] * v;
                    }
                    a[j * n + i] = acc;
                }
            }
            let o = out.as_mut_slice();
            for j in 0..n {
                for i in 0..n {
                    o[j * n + i] = -I * (a[j * n + i] - a[i * n + j].conj());
                }
            }
            for (rate, jump) in &self.jumps {
                for (j, row_j) in jump.rows.iter().enumerate() {
                    for (i, row_i) in jump.rows.iter().enumerate() {
                        let mut acc = ZERO;
                        for &(k, x) in row_i {
                            for &(l, y) in row_j {
                                acc += r[l * n + k] * (x * y);
                            }
                        }
                        o[j * n + i] += acc * *rate;
                    }
                }
            }
        }
    }

    pub fn evolve(&self, t0: f64, h: f64, steps: usize, rho: &mut CMatrix) {
        integrate(&self.rhs(), t0, h, steps, rho);
    }

    /// Real matrix of the RK4 map over `[0, steps·h]` acting on Hermitian coordinates.
    pub fn propagator(&self, h: f64, steps: usize) -> DMatrix<f64> {
        let n = self.drive.h0.dim();
        let coords = HermitianCoords::new(n);
        let m = coords.len();
        let mut p = DMatrix::<f64>::zeros(m, m);
        let mut unit = DVector::<f64>::zeros(m);
        for b in 0..m {
            unit[b] = 1.0;
            let mut rho = coords.to_matrix(&unit);
            unit[b] = 0.0;
            self.evolve(0.0, h, steps, &mut rho);
            p.set_column(b, &coords.to_coords(&rho));
        }
        p
    }
}

/// Real coordinates of Hermitian matrices: diagonal entries, then (Re, Im) of the strict upper
/// triangle row by row.
#[derive(Clone, Debug)]
pub(crate) struct HermitianCoords {
    n: usize,
}

impl HermitianCoords {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn to_coords(&self, rho: &CMatrix) -> DVector<f64> {
        let n = self.n;
        let mut x = DVector::<f64>::zeros(n * n);
        for i in 0..n {
            x[i] = rho[(i, i)].re;
        }
        let mut idx = n;
        for i in 0..n {
            for j in i + 1..n {
                let z = (rho[(i, j)] + rho[(j, i)].conj()) * 0.5;
                x[idx] = z.re;
                x[idx + 1] = z.im;
                idx += 2;
            }
        }
        x
    }

    pub fn to_matrix(&self, x: &DVector<f64>) -> CMatrix {
        let n = self.n;
        let mut rho = CMatrix::zeros(n, n);
        for i in 0..n {
            rho[(i, i)] = Complex64::new(x[i], 0.0);
        }
        let mut idx = n;
        for i in 0..n {
            for j in i + 1..n {
                let z = Complex64::new(x[idx], x[idx + 1]);
                rho[(i, j)] = z;
                rho[(j, i)] = z.conj();
                idx += 2;
            }
        }
        rho
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::ONE;

    fn two_level(eps: f64) -> Drive {
        let mut h0 = DMatrix::<f64>::zeros(2, 2);
        h0[(1, 1)] = 1.0;
        Drive { h0: SparseReal::from_dense(&h0), se: vec![0.0, 1.0], eps, eta: 1.0 }
    }

    #[test]
    fn static_phase_is_fourth_order() {
        let d = two_level(0.0);
        let mut errs = Vec::new();
        for steps in [50, 100] {
            let mut y = CMatrix::from_column_slice(2, 1, &[ONE * 0.0, ONE]);
            d.evolve_pure(0.0, 1.0 / steps as f64, steps, &mut y);
            errs.push((y[(1, 0)] - Complex64::new(0.0, -1.0).exp()).norm());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 4.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn coordinates_round_trip() {
        let c = HermitianCoords::new(3);
        let x = DVector::from_iterator(9, (0..9).map(|i| i as f64 * 0.3 - 1.0));
        assert_eq!(c.to_coords(&c.to_matrix(&x)), x);
    }

    #[test]
    fn lindblad_unitary_limit_matches_pure() {
        let d = two_level(0.3);
        let l = Lindblad::new(d.clone(), &[]).unwrap();
        let mut psi = CMatrix::from_column_slice(2, 1, &[ONE * 0.6, ONE * 0.8]);
        let mut rho = &psi * psi.adjoint();
        d.evolve_pure(0.0, 0.01, 300, &mut psi);
        l.evolve(0.0, 0.01, 300, &mut rho);
        let diff = amax(&(&psi * psi.adjoint() - rho));
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn propagator_matches_stepping() {
        let d = two_level(0.3);
        let l = Lindblad::new(
            d,
            &[Dissipator { name: "decay", rate: 0.1, jump: CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]) }],
        )
        .unwrap();
        let c = HermitianCoords::new(2);
        let p = l.propagator(0.02, 50);
        let mut rho = CMatrix::from_row_slice(2, 2, &[ONE * 0.3, ONE * 0.2, ONE * 0.2, ONE * 0.7]);
        let x = &p * c.to_coords(&rho);
        l.evolve(0.0, 0.02, 50, &mut rho);
        assert!((c.to_coords(&rho) - &x).amax() < 1e-14);
        let trace: f64 = x[0] + x[1];
        assert!((trace - 1.0).abs() < 1e-14);
    }
}
