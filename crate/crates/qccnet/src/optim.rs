//! Optimizers: Euclidean Adam for unconstrained parameters and a
//! Cayley-transform Adam that keeps unitary blocks and measurement heads on
//! the Stiefel manifold.
//!
//! The manifold step uses a scalar second moment ‖G‖²_F (per-entry scaling
//! would leave the tangent space) and the exact Cayley retraction
//! U ← (I + λ/2·A)⁻¹(I − λ/2·A)U via an LU solve.

use crate::error::{Error, Result};
use crate::linalg::{matmul, qr_orthonormalize, CMatrix, Lu, C64};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// How often Cayley-Adam re-projects its parameter with QR to scrub
/// accumulated floating-point drift.
pub const REORTHONORMALIZE_EVERY: u64 = 1000;

// ---------------------------------------------------------------------------
// Euclidean Adam
// ---------------------------------------------------------------------------

/// Standard Adam state over a flat real parameter vector. Complex parameters
/// are stepped as independent (re, im) pairs.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }
}

/// One Adam step with bias correction, in place. `lr = 0` leaves `theta`
/// bit-unchanged (the moment accumulators still advance).
pub fn euclidean_adam_step(
    state: &mut AdamState,
    theta: &mut [f64],
    g: &[f64],
    lr: f64,
) -> Result<()> {
    if theta.len() != state.m.len() || g.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam: parameter {} / gradient {} vs state {}",
            theta.len(),
            g.len(),
            state.m.len()
        )));
    }
    if g.iter().any(|x| !x.is_finite()) || !lr.is_finite() {
        return Err(Error::Numeric("non-finite gradient or rate in adam step".into()));
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for i in 0..g.len() {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
        if lr != 0.0 {
            let mhat = state.m[i] / bc1;
            let vhat = state.v[i] / bc2;
            theta[i] -= lr * mhat / (vhat.sqrt() + state.eps);
        }
    }
    Ok(())
}

/// Flatten a complex matrix to interleaved (re, im) reals for Adam.
pub fn complex_to_reals(a: &CMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * a.data().len());
    for z in a.data() {
        out.push(z.re);
        out.push(z.im);
    }
    out
}

/// Inverse of [`complex_to_reals`]; shape is taken from `template`.
pub fn reals_to_complex(v: &[f64], template: &CMatrix) -> Result<CMatrix> {
    if v.len() != 2 * template.data().len() {
        return Err(Error::Shape(format!(
            "{} reals vs {} complex entries",
            v.len(),
            template.data().len()
        )));
    }
    let data = v.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
    CMatrix::from_vec(template.rows(), template.cols(), data)
}

/// Conjugate-Wirtinger gradient G → partials for the real pair view:
/// ∂ℓ/∂re = 2·re(G), ∂ℓ/∂im = 2·im(G).
pub fn wirtinger_to_real_pairs(g: &CMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * g.data().len());
    for z in g.data() {
        out.push(2.0 * z.re);
        out.push(2.0 * z.im);
    }
    out
}

// ---------------------------------------------------------------------------
// Cayley-transform Adam on the Stiefel manifold
// ---------------------------------------------------------------------------

/// A = G·U* − U·G*, the skew-Hermitian ambient-gradient projection used by
/// the manifold step. Exactly skew by construction: with S = G·U* the result
/// is S − S*, so A_ij = −conj(A_ji) holds bit for bit.
pub fn skew_update_matrix(g: &CMatrix, u: &CMatrix) -> Result<CMatrix> {
    if g.rows() != u.rows() || g.cols() != u.cols() {
        return Err(Error::Shape(format!(
            "skew_update_matrix: G is {}x{}, U is {}x{}",
            g.rows(),
            g.cols(),
            u.rows(),
            u.cols()
        )));
    }
    let s = matmul(g, &u.adjoint())?;
    // A_ij = S_ij − conj(S_ji), built in one pass
    let n = s.rows();
    let mut a = s.clone();
    let (ad, sd) = (a.data_mut(), s.data());
    for i in 0..n {
        for j in 0..n {
            ad[i * n + j] = sd[i * n + j] - sd[j * n + i].conj();
        }
    }
    Ok(a)
}

/// Exact Cayley retraction U ← (I + λ/2·A)⁻¹(I − λ/2·A)U, computed as
/// 2·(I + λ/2·A)⁻¹U − U (one LU solve, one right-hand side block).
/// λ = 0 returns U bit-identically.
pub fn cayley_retract(u: &CMatrix, a: &CMatrix, lambda: f64) -> Result<CMatrix> {
    if !a.is_square() || a.rows() != u.rows() {
        return Err(Error::Shape(format!(
            "cayley_retract: A is {}x{}, U has {} rows",
            a.rows(),
            a.cols(),
            u.rows()
        )));
    }
    let n = a.rows();
    let c = C64::new(lambda / 2.0, 0.0);
    // single pass: skew-defect/norm accumulators plus the I + λ/2·A system
    let mut lhs = a.scale(c);
    let (mut defect2, mut norm2) = (0.0f64, 0.0f64);
    {
        let ad = a.data();
        let ld = lhs.data_mut();
        for i in 0..n {
            for j in i..n {
                let zij = ad[i * n + j];
                let zji = ad[j * n + i];
                let s = zij + zji.conj();
                if i == j {
                    norm2 += zij.norm_sqr();
                    defect2 += s.norm_sqr();
                } else {
                    norm2 += zij.norm_sqr() + zji.norm_sqr();
                    defect2 += 2.0 * s.norm_sqr();
                }
            }
            ld[i * n + i] += C64::new(1.0, 0.0);
        }
    }
    let skew_defect = defect2.sqrt();
    if skew_defect > 1e-10 * norm2.sqrt().max(1.0) {
        return Err(Error::Invariant(format!(
            "cayley_retract: A not skew-Hermitian, ‖A+A*‖ = {skew_defect:.3e}"
        )));
    }
    if lambda == 0.0 {
        return Ok(u.clone());
    }
    // (I+cA) has no eigenvalue at 0 for skew-Hermitian A and real λ
    let lu = Lu::factor(&lhs).map_err(|e| {
        Error::Numeric(format!("cayley_retract: singular (I + λ/2·A) cannot occur: {e}"))
    })?;
    let x = lu.solve(u)?;
    let mut out = x.scale(C64::new(2.0, 0.0));
    for (o, &z) in out.data_mut().iter_mut().zip(u.data()) {
        *o -= z;
    }
    Ok(out)
}

/// Momentum matrix, scalar second moment, and step counter for one
/// Stiefel-constrained parameter.
#[derive(Debug, Clone)]
pub struct CayleyAdamState {
    pub m_mat: CMatrix,
    pub v: f64,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl CayleyAdamState {
    /// `rows` is the ambient dimension m of the managed m×C parameter.
    pub fn new(rows: usize) -> Self {
        CayleyAdamState {
            m_mat: CMatrix::zeros(rows, rows),
            v: 0.0,
            t: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }
}

/// One Cayley-Adam step:
///   t += 1;  M ← β₁M + skew_update_matrix(G, U);  v ← β₂v + (1−β₂)‖G‖²_F;
///   λ̂ = λ·√(1−β₂ᵗ) / ((1−β₁ᵗ)·(√(v/(1−β₂ᵗ)) + ε));
///   W = (M − M*)/2;  U ← cayley_retract(U, W, λ̂).
/// Every [`REORTHONORMALIZE_EVERY`] steps the result is re-projected by QR.
pub fn cayley_adam_step(
    state: &mut CayleyAdamState,
    u: &CMatrix,
    g: &CMatrix,
    lambda: f64,
) -> Result<CMatrix> {
    if g.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || !lambda.is_finite() {
        return Err(Error::Numeric("non-finite gradient or rate in cayley-adam step".into()));
    }
    state.t += 1;
    let a = skew_update_matrix(g, u)?;
    let b1 = C64::new(state.beta1, 0.0);
    for (m, &z) in state.m_mat.data_mut().iter_mut().zip(a.data()) {
        *m = *m * b1 + z;
    }
    let gn2 = g.frobenius_norm().powi(2);
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * gn2;
    let t = state.t as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let vhat = state.v / bc2;
    let lr = lambda * bc2.sqrt() / (bc1 * (vhat.sqrt() + state.eps));
    // numerical hygiene: project momentum to exact skew before retracting
    let rows = state.m_mat.rows();
    let mut w = state.m_mat.clone();
    {
        let (wd, md) = (w.data_mut(), state.m_mat.data());
        let half = C64::new(0.5, 0.0);
        for i in 0..rows {
            for j in 0..rows {
                wd[i * rows + j] = (md[i * rows + j] - md[j * rows + i].conj()) * half;
            }
        }
    }
    let mut next = cayley_retract(u, &w, lr)?;
    if state.t % REORTHONORMALIZE_EVERY == 0 {
        next = qr_orthonormalize(&next)?;
    }
    if next.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite parameter after cayley-adam step".into()));
    }
    Ok(next)
}
