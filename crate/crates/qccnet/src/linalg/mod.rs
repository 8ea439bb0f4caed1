//! Dense complex linear algebra: the ground layer for everything else.
//!
//! Matrices are row-major over `num_complex::Complex64`. All routines are
//! pure functions of their inputs and deterministic.

mod decomp;
mod random;

pub use decomp::{operator_norm, qr_orthonormalize, solve, Lu};
pub use random::random_gaussian_matrix;

use crate::error::{Error, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = Complex64::new(0.0, 0.0);
pub const ONE: C64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dims must be positive");
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "entry count {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector::from_fn(self.rows, |i| self.at(i, j))
    }

    pub fn set_column(&mut self, j: usize, v: &CVector) {
        assert_eq!(v.dim(), self.rows);
        for i in 0..self.rows {
            self.set(i, j, v[i]);
        }
    }

    /// Hermitian conjugate: (a*)_{ij} = conj(a_{ji}).
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(other)?;
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(other)?;
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    fn check_same_shape(&self, other: &CMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖a*a − I‖_F ≤ tol. Columns must be orthonormal; `a` need not be square
    /// (Stiefel check for rectangular heads uses the same test).
    pub fn is_orthonormal_cols(&self, tol: f64) -> bool {
        let gram = matmul(&self.adjoint(), self).expect("dims");
        let mut dev = 0.0;
        for i in 0..gram.rows {
            for j in 0..gram.cols {
                let target = if i == j { ONE } else { ZERO };
                dev += (gram.at(i, j) - target).norm_sqr();
            }
        }
        dev.sqrt() <= tol
    }
}

/// True iff `a` is square and ‖a*a − I‖_F ≤ tol.
pub fn is_unitary(a: &CMatrix, tol: f64) -> bool {
    a.is_square() && a.is_orthonormal_cols(tol)
}

impl CVector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dim must be positive");
        CVector { data: vec![ZERO; dim] }
    }

    /// Standard basis vector e_k (zero-based index).
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v.data[k] = ONE;
        v
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize) -> C64) -> Self {
        CVector { data: (0..dim).map(|i| f(i)).collect() }
    }

    pub fn from_vec(data: Vec<C64>) -> Self {
        assert!(!data.is_empty(), "vector dim must be positive");
        CVector { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector { data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &CVector) -> Result<CVector> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(CVector {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn add_assign(&mut self, other: &CVector) {
        assert_eq!(self.dim(), other.dim());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

impl std::ops::Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

/// ⟨p|q⟩ = Σ_k conj(p_k)·q_k, conjugate-linear in the first argument.
pub fn inner(p: &CVector, q: &CVector) -> Result<C64> {
    if p.dim() != q.dim() {
        return Err(Error::Shape(format!("inner: {} vs {}", p.dim(), q.dim())));
    }
    Ok(p.data
        .iter()
        .zip(&q.data)
        .map(|(a, b)| a.conj() * b)
        .fold(ZERO, |acc, z| acc + z))
}

/// Euclidean norm ‖q‖ = sqrt(⟨q|q⟩).
pub fn norm2(q: &CVector) -> f64 {
    q.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Matrix–vector product.
pub fn mat_vec(a: &CMatrix, v: &CVector) -> Result<CVector> {
    if a.cols != v.dim() {
        return Err(Error::Shape(format!(
            "mat_vec: {}x{} by {}",
            a.rows,
            a.cols,
            v.dim()
        )));
    }
    let mut out = Vec::with_capacity(a.rows);
    for i in 0..a.rows {
        let row = a.row(i);
        let mut acc = ZERO;
        for (aij, vj) in row.iter().zip(&v.data) {
            acc += aij * vj;
        }
        out.push(acc);
    }
    Ok(CVector { data: out })
}

/// Matrix product. Internally operates on split real/imaginary planes with an
/// i-k-j loop order so the inner loops stream over contiguous rows.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul: {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let (m, _k, n) = (a.rows, a.cols, b.cols);
    let br: Vec<f64> = b.data.iter().map(|z| z.re).collect();
    let bi: Vec<f64> = b.data.iter().map(|z| z.im).collect();
    let mut cr = vec![0.0f64; m * n];
    let mut ci = vec![0.0f64; m * n];
    let k_dim = a.cols;
    // blocks of four output rows share each pass over B, so the B planes are
    // streamed m/4 times instead of m times; the accumulator rows stay in L1
    let mut i = 0;
    while i + 3 < m {
        let (c01, c23) = cr[i * n..(i + 4) * n].split_at_mut(2 * n);
        let (c0, c1) = c01.split_at_mut(n);
        let (c2, c3) = c23.split_at_mut(n);
        let (d01, d23) = ci[i * n..(i + 4) * n].split_at_mut(2 * n);
        let (d0, d1) = d01.split_at_mut(n);
        let (d2, d3) = d23.split_at_mut(n);
        for kk in 0..k_dim {
            let a0 = a.data[i * k_dim + kk];
            let a1 = a.data[(i + 1) * k_dim + kk];
            let a2 = a.data[(i + 2) * k_dim + kk];
            let a3 = a.data[(i + 3) * k_dim + kk];
            let brow = &br[kk * n..(kk + 1) * n];
            let birow = &bi[kk * n..(kk + 1) * n];
            // real parts use hardware FMAs; imaginary parts stay unfused so
            // the per-term rounding is symmetric under (a,b) → (b*,a*) and
            // involution identities like (ab)* = b*a* hold bit-for-bit
            for j in 0..n {
                let (re, im) = (brow[j], birow[j]);
                c0[j] = (-a0.im).mul_add(im, a0.re.mul_add(re, c0[j]));
                d0[j] += a0.re * im + a0.im * re;
                c1[j] = (-a1.im).mul_add(im, a1.re.mul_add(re, c1[j]));
                d1[j] += a1.re * im + a1.im * re;
                c2[j] = (-a2.im).mul_add(im, a2.re.mul_add(re, c2[j]));
                d2[j] += a2.re * im + a2.im * re;
                c3[j] = (-a3.im).mul_add(im, a3.re.mul_add(re, c3[j]));
                d3[j] += a3.re * im + a3.im * re;
            }
        }
        i += 4;
    }
    while i < m {
        let crow = &mut cr[i * n..(i + 1) * n];
        let cirow = &mut ci[i * n..(i + 1) * n];
        for kk in 0..k_dim {
            let (ar, ai) = (a.data[i * k_dim + kk].re, a.data[i * k_dim + kk].im);
            let brow = &br[kk * n..(kk + 1) * n];
            let birow = &bi[kk * n..(kk + 1) * n];
            for j in 0..n {
                crow[j] = (-ai).mul_add(birow[j], ar.mul_add(brow[j], crow[j]));
                cirow[j] += ar * birow[j] + ai * brow[j];
            }
        }
        i += 1;
    }
    let data = cr
        .into_iter()
        .zip(ci)
        .map(|(re, im)| Complex64::new(re, im))
        .collect();
    Ok(CMatrix { rows: m, cols: n, data })
}

/// Outer-product accumulation: g += w · xᴴ. Hot path of the backward pass.
pub fn accumulate_outer(g: &mut CMatrix, w: &CVector, x: &CVector) {
    assert_eq!(g.rows, w.dim());
    assert_eq!(g.cols, x.dim());
    let n = g.cols;
    for i in 0..g.rows {
        let wi = w[i];
        let grow = &mut g.data[i * n..(i + 1) * n];
        for (gij, xj) in grow.iter_mut().zip(x.data()) {
            *gij += wi * xj.conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn matmul_identity_and_nilpotent() {
        let a = CMatrix::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.3));
        let id = CMatrix::identity(2);
        assert_eq!(matmul(&id, &a).unwrap(), a);

        let n = CMatrix::from_vec(2, 2, vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        let nn = matmul(&n, &n).unwrap();
        assert!(nn.data().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn matmul_matches_triple_loop_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_gaussian_matrix(3, 4, 1.0, &mut rng);
        let b = random_gaussian_matrix(4, 2, 1.0, &mut rng);
        let fast = matmul(&a, &b).unwrap();
        // independent naive oracle
        for i in 0..3 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += a.at(i, k) * b.at(k, j);
                }
                assert!((fast.at(i, j) - acc).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_shape_error() {
        let a = CMatrix::zeros(2, 3);
        let b = CMatrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn adjoint_cases() {
        // real symmetric is self-adjoint
        let a = CMatrix::from_vec(2, 2, vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(5.0, 0.0)])
            .unwrap();
        assert_eq!(a.adjoint(), a);
        // 1x1 conjugation
        let b = CMatrix::from_vec(1, 1, vec![c(0.0, 1.0)]).unwrap();
        assert_eq!(b.adjoint().at(0, 0), c(0.0, -1.0));
        // involution
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_gaussian_matrix(3, 5, 1.0, &mut rng);
        assert_eq!(r.adjoint().adjoint(), r);
    }

    #[test]
    fn mat_vec_cases() {
        let v = CVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0), c(4.0, 4.0)]);
        assert_eq!(mat_vec(&CMatrix::identity(4), &v).unwrap(), v);
        let z = CMatrix::zeros(4, 4);
        assert!(mat_vec(&z, &v).unwrap().data().iter().all(|x| *x == ZERO));
        // double-loop reference
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_gaussian_matrix(4, 4, 1.0, &mut rng);
        let got = mat_vec(&a, &v).unwrap();
        for i in 0..4 {
            let mut acc = ZERO;
            for j in 0..4 {
                acc += a.at(i, j) * v[j];
            }
            assert!((got[i] - acc).norm() < 1e-12);
        }
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let e1 = CVector::basis(2, 0);
        let e2 = CVector::basis(2, 1);
        assert_eq!(inner(&e1, &e1).unwrap(), ONE);
        assert_eq!(inner(&e1, &e2).unwrap(), ZERO);
        let p = CVector::from_vec(vec![c(0.0, 1.0), ZERO]);
        let q = CVector::from_vec(vec![ONE, ZERO]);
        assert_eq!(inner(&p, &q).unwrap(), c(0.0, -1.0));
    }

    #[test]
    fn norm2_cases() {
        assert_eq!(norm2(&CVector::basis(3, 0)), 1.0);
        assert_eq!(norm2(&CVector::zeros(3)), 0.0);
        let v = CVector::from_vec(vec![c(3.0, 0.0), c(0.0, 4.0)]);
        assert!((norm2(&v) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn unitarity_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_gaussian_matrix(6, 6, 1.0, &mut rng);
        let u = qr_orthonormalize(&g).unwrap();
        assert!(is_unitary(&u, 1e-10));
        let v = CVector::from_fn(6, |i| c(i as f64 - 2.5, 0.7 * i as f64));
        let uv = mat_vec(&u, &v).unwrap();
        assert!((norm2(&uv) - norm2(&v)).abs() <= 1e-8 * norm2(&v));
    }

    #[test]
    fn is_unitary_cases() {
        assert!(is_unitary(&CMatrix::identity(3), 1e-12));
        assert!(!is_unitary(&CMatrix::identity(3).scale(c(2.0, 0.0)), 1e-12));
    }

    #[test]
    fn accumulate_outer_matches_definition() {
        let w = CVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.25)]);
        let x = CVector::from_vec(vec![c(0.5, -1.0), c(2.0, 0.0), c(0.0, 3.0)]);
        let mut g = CMatrix::zeros(2, 3);
        accumulate_outer(&mut g, &w, &x);
        for i in 0..2 {
            for j in 0..3 {
                assert!((g.at(i, j) - w[i] * x[j].conj()).norm() < 1e-15);
            }
        }
    }
}
