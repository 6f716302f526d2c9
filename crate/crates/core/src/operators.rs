//! Dense complex matrices and the operator algebra of the qubit ⊗ qubit ⊗ cavity space.
//!
//! Tensor factors are always ordered t-qubit ⊗ ancilla ⊗ field. Qubit matrices use the
//! ordered basis (|g⟩, |e⟩).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative tolerance used when checking Hermiticity.
pub const HERMITIAN_TOL: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Photon-number truncation of the cavity and the index map of the product basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertConfig {
    n_tr: usize,
}

impl HilbertConfig {
    pub fn new(n_tr: usize) -> Result<Self> {
        if n_tr < 2 {
            return Err(Error::InvalidParameter(format!("photon truncation n_tr must be at least 2, got {n_tr}")));
        }
        Ok(Self { n_tr })
    }

    pub fn n_tr(&self) -> usize {
        self.n_tr
    }

    pub fn fock_dim(&self) -> usize {
        self.n_tr + 1
    }

    pub fn dim(&self) -> usize {
        4 * (self.n_tr + 1)
    }

    /// Index of |q, q_a, n⟩ where `q`, `q_a` are 0 for ground and 1 for excited.
    pub fn index(&self, q: usize, q_a: usize, n: usize) -> usize {
        debug_assert!(q < 2 && q_a < 2 && n <= self.n_tr);
        (2 * q + q_a) * self.fock_dim() + n
    }

    /// Inverse of [`HilbertConfig::index`].
    pub fn decompose(&self, index: usize) -> (usize, usize, usize) {
        let pair = index / self.fock_dim();
        (pair / 2, pair % 2, index % self.fock_dim())
    }
}

/// Truncated annihilation operator with ⟨n−1|â|n⟩ = √n.
pub fn fock_annihilation(n_tr: usize) -> Result<CMatrix> {
    if n_tr == 0 {
        return Err(Error::InvalidParameter("annihilation operator needs n_tr >= 1".into()));
    }
    let dim = n_tr + 1;
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    Ok(a)
}

/// The single-qubit operators in the basis (|g⟩, |e⟩).
#[derive(Clone, Debug)]
pub struct QubitOperators {
    pub sigma_e: CMatrix,
    pub sigma_z: CMatrix,
    pub sigma_minus: CMatrix,
    pub sigma_plus: CMatrix,
    pub sigma_x: CMatrix,
}

pub fn qubit_operators() -> QubitOperators {
    let sigma_minus = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
    let sigma_plus = sigma_minus.adjoint();
    QubitOperators {
        sigma_e: CMatrix::from_diagonal(&CVector::from_vec(vec![ZERO, ONE])),
        sigma_z: CMatrix::from_diagonal(&CVector::from_vec(vec![-ONE, ONE])),
        sigma_x: &sigma_plus + &sigma_minus,
        sigma_minus,
        sigma_plus,
    }
}

/// Kronecker product `op_t ⊗ op_a ⊗ op_f`.
pub fn tensor3(op_t: &CMatrix, op_a: &CMatrix, op_f: &CMatrix) -> Result<CMatrix> {
    for (name, op) in [("t-qubit", op_t), ("ancilla", op_a)] {
        if op.shape() != (2, 2) {
            return Err(Error::DimensionMismatch(format!("{name} factor must be 2x2, got {:?}", op.shape())));
        }
    }
    if !op_f.is_square() || op_f.nrows() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "field factor must be square with dimension >= 2, got {:?}",
            op_f.shape()
        )));
    }
    Ok(op_t.kronecker(op_a).kronecker(op_f))
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry magnitude of `M − M†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(m: &CMatrix) -> bool {
    m.is_square() && hermitian_deviation(m) <= HERMITIAN_TOL * max_abs(m).max(f64::MIN_POSITIVE)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, l: usize) -> CVector {
        self.vectors.column(l).into_owned()
    }
}

fn dominant_index(v: impl Iterator<Item = Complex64>) -> usize {
    let mut best = (0, -1.0);
    for (i, z) in v.enumerate() {
        // strict comparison keeps the first index among equal magnitudes
        if z.norm() > best.1 * (1.0 + 1e-12) {
            best = (i, z.norm());
        }
    }
    best.0
}

/// Diagonalizes a Hermitian matrix.
///
/// Eigenvalues come out ascending; exact ties (within 1e-12 of the matrix scale) are ordered
/// by the index of each vector's dominant component. Every eigenvector is rotated so that its
/// largest-magnitude component is real and positive.
pub fn eig_hermitian(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("eigensolver needs a square matrix, got {:?}", m.shape())));
    }
    let scale = max_abs(m);
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { deviation, scale });
    }
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<(f64, usize, usize)> = (0..n)
        .map(|k| {
            let dom = dominant_index(eig.eigenvectors.column(k).iter().copied());
            (eig.eigenvalues[k], dom, k)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tie = 1e-12 * scale.max(1e-300);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && order[end].0 - order[end - 1].0 <= tie {
            end += 1;
        }
        order[start..end].sort_by_key(|entry| entry.1);
        start = end;
    }

    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &(value, dom, k)) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v[dom];
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { ONE };
        for row in 0..n {
            vectors[(row, col)] = v[row] * phase;
        }
        values.push(value);
    }
    Ok(HermitianEigen { values, vectors })
}

/// Real symmetric counterpart of [`eig_hermitian`] with the same ordering and sign rules
/// (largest-magnitude component positive). Returns ascending values and column vectors.
pub fn eig_real_symmetric(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("eigensolver needs a square matrix, got {:?}", m.shape())));
    }
    let scale = m.amax();
    let deviation = (m - m.transpose()).amax();
    if deviation > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { deviation, scale });
    }
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<(f64, usize, usize)> = (0..n)
        .map(|k| {
            let dom = dominant_index(eig.eigenvectors.column(k).iter().map(|&x| c(x)));
            (eig.eigenvalues[k], dom, k)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tie = 1e-12 * scale.max(1e-300);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && order[end].0 - order[end - 1].0 <= tie {
            end += 1;
        }
        order[start..end].sort_by_key(|entry| entry.1);
        start = end;
    }
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    let values = order.iter().map(|o| o.0).collect();
    for (col, &(_, dom, k)) in order.iter().enumerate() {
        let sign = if eig.eigenvectors[(dom, k)] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..n {
            vectors[(row, col)] = sign * eig.eigenvectors[(row, k)];
        }
    }
    Ok((values, vectors))
}

/// Applies the eigenvector phase convention to a single vector in place.
pub fn fix_phase(v: &mut CVector) {
    let dom = dominant_index(v.iter().copied());
    let pivot = v[dom];
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Real 4×4 symmetric eigen-decomposition; ascending values, vectors as columns.
pub(crate) fn eig_symmetric4(m: &[[f64; 4]; 4]) -> ([f64; 4], [[f64; 4]; 4]) {
    let mat = nalgebra::Matrix4::from_fn(|i, j| m[i][j]);
    let eig = SymmetricEigen::new(mat);
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = [0.0; 4];
    let mut vectors = [[0.0; 4]; 4];
    for (col, &k) in idx.iter().enumerate() {
        values[col] = eig.eigenvalues[k];
        for row in 0..4 {
            vectors[row][col] = eig.eigenvectors[(row, k)];
        }
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&x| c(x))))
    }

    #[test]
    fn annihilation_small() {
        let a = fock_annihilation(1).unwrap();
        assert_eq!(a, CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]));
        assert!(fock_annihilation(0).is_err());
    }

    #[test]
    fn number_operator_and_truncated_commutator() {
        let a = fock_annihilation(3).unwrap();
        assert!(max_abs(&(a.adjoint() * &a - real_diag(&[0.0, 1.0, 2.0, 3.0]))) < 1e-15);

        let a = fock_annihilation(5).unwrap();
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        let expected = real_diag(&[1.0, 1.0, 1.0, 1.0, 1.0, -5.0]);
        assert!(max_abs(&(comm - expected)) < 1e-14);
    }

    #[test]
    fn qubit_matrices() {
        let q = qubit_operators();
        assert_eq!(q.sigma_e, real_diag(&[0.0, 1.0]));
        assert_eq!(q.sigma_z, real_diag(&[-1.0, 1.0]));
        assert_eq!(q.sigma_x, CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]));
        assert_eq!(q.sigma_plus, q.sigma_minus.adjoint());
    }

    #[test]
    fn tensor_identity_trace_and_mismatch() {
        let q = qubit_operators();
        let i2 = CMatrix::identity(2, 2);
        let i_f = CMatrix::identity(4, 4);
        assert_eq!(tensor3(&i2, &i2, &i_f).unwrap(), CMatrix::identity(16, 16));
        assert!(is_hermitian(&tensor3(&q.sigma_x, &i2, &i_f).unwrap()));

        let a = fock_annihilation(2).unwrap();
        let n = a.adjoint() * &a;
        let t = tensor3(&q.sigma_e, &q.sigma_e, &n).unwrap();
        assert!((t.trace() - c(3.0)).norm() < 1e-14);

        assert!(tensor3(&n, &i2, &i_f).is_err());
        assert!(tensor3(&i2, &i2, &CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let h = HilbertConfig::new(4).unwrap();
        assert_eq!(h.dim(), 20);
        let mut seen = vec![false; h.dim()];
        for q in 0..2 {
            for qa in 0..2 {
                for n in 0..=4 {
                    let idx = h.index(q, qa, n);
                    assert!(!seen[idx]);
                    seen[idx] = true;
                    assert_eq!(h.decompose(idx), (q, qa, n));
                }
            }
        }
        assert!(HilbertConfig::new(1).is_err());
    }

    #[test]
    fn index_matches_kronecker_layout() {
        // |e, g_a, 2⟩ as a Kronecker product of basis vectors
        let h = HilbertConfig::new(3).unwrap();
        let e = CMatrix::from_row_slice(2, 1, &[ZERO, ONE]);
        let g = CMatrix::from_row_slice(2, 1, &[ONE, ZERO]);
        let mut f = CMatrix::zeros(4, 1);
        f[(2, 0)] = ONE;
        let ket = e.kronecker(&g).kronecker(&f);
        assert_eq!(ket[(h.index(1, 0, 2), 0)], ONE);
    }

    #[test]
    fn eig_diagonal_and_sigma_x() {
        let eig = eig_hermitian(&real_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);

        let eig = eig_hermitian(&qubit_operators().sigma_x).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14 && (eig.values[1] - 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        let v0 = eig.vector(0);
        // (1, -1)/√2 up to the phase rule: first of two equal magnitudes is made positive
        assert!((v0[0] - c(s)).norm() < 1e-12 && (v0[1] + c(s)).norm() < 1e-12);
        let v1 = eig.vector(1);
        assert!((v1[0] - c(s)).norm() < 1e-12 && (v1[1] - c(s)).norm() < 1e-12);
    }

    #[test]
    fn eig_ties_ordered_by_dominant_index() {
        let m = real_diag(&[1.0, 0.0, 1.0, 0.0]);
        let eig = eig_hermitian(&m).unwrap();
        let doms: Vec<usize> = (0..4).map(|l| dominant_index(eig.vectors.column(l).iter().copied())).collect();
        assert_eq!(doms, vec![1, 3, 0, 2]);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }
}
