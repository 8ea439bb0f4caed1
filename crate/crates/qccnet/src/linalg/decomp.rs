//! LU with partial pivoting, Gram-Schmidt orthonormalization, and the
//! power-iteration operator norm.

use super::{inner, mat_vec, norm2, C64, CMatrix, CVector, ONE, ZERO};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting. Reusable across multiple
/// right-hand sides (the Cayley retraction factors once per step).
///
/// Stored planar (separate re/im arrays) so the row-axpy elimination and
/// substitution loops vectorize like the planar matmul.
pub struct Lu {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    piv: Vec<usize>,
}

/// rows[r] -= f · rows[k] over a planar row pair, the shared hot loop of
/// elimination and substitution.
#[inline]
fn planar_row_axpy(
    (fre, fim): (f64, f64),
    (kre, kim): (&[f64], &[f64]),
    (rre, rim): (&mut [f64], &mut [f64]),
) {
    for i in 0..rre.len() {
        let (kr, ki) = (kre[i], kim[i]);
        rre[i] = fim.mul_add(ki, (-fre).mul_add(kr, rre[i]));
        rim[i] = (-fim).mul_add(kr, (-fre).mul_add(ki, rim[i]));
    }
}

/// rows[r] -= Σ_t f[t] · rows[k_t] in one pass: the panel form of the axpy,
/// applying `P` pivot rows per sweep over the target so each target row is
/// streamed once per panel instead of once per pivot.
#[inline]
fn planar_panel_axpy<const P: usize>(
    f: [C64; P],
    kre: [&[f64]; P],
    kim: [&[f64]; P],
    rre: &mut [f64],
    rim: &mut [f64],
) {
    for i in 0..rre.len() {
        let mut xr = rre[i];
        let mut xi = rim[i];
        for t in 0..P {
            let (kr, ki) = (kre[t][i], kim[t][i]);
            xr = f[t].im.mul_add(ki, (-f[t].re).mul_add(kr, xr));
            xi = (-f[t].im).mul_add(kr, (-f[t].re).mul_add(ki, xi));
        }
        rre[i] = xr;
        rim[i] = xi;
    }
}

/// Split one row `r` mutably from the planar storage together with an
/// immutable view of row `k` (requires k != r).
#[inline]
fn planar_rows<'a>(
    re: &'a mut [f64],
    im: &'a mut [f64],
    n: usize,
    k: usize,
    r: usize,
    lo: usize,
    hi: usize,
) -> ((&'a [f64], &'a [f64]), (&'a mut [f64], &'a mut [f64])) {
    debug_assert_ne!(k, r);
    let (kre, rre) = if k < r {
        let (h, t) = re.split_at_mut(r * n);
        (&h[k * n + lo..k * n + hi], &mut t[lo..hi])
    } else {
        let (h, t) = re.split_at_mut(k * n);
        let kr = &t[lo..hi];
        (&*kr, &mut h[r * n + lo..r * n + hi])
    };
    let (kim, rim) = if k < r {
        let (h, t) = im.split_at_mut(r * n);
        (&h[k * n + lo..k * n + hi], &mut t[lo..hi])
    } else {
        let (h, t) = im.split_at_mut(k * n);
        let ki = &t[lo..hi];
        (&*ki, &mut h[r * n + lo..r * n + hi])
    };
    ((kre, kim), (rre, rim))
}

impl Lu {
    /// Pivot threshold: entries below 1e-14·max|a_ij| are treated as zero.
    pub fn factor(a: &CMatrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::Shape(format!("LU needs square, got {}x{}", a.rows(), a.cols())));
        }
        let n = a.rows();
        let scale = a.max_abs();
        let tol = 1e-14 * scale;
        let mut re: Vec<f64> = a.data().iter().map(|z| z.re).collect();
        let mut im: Vec<f64> = a.data().iter().map(|z| z.im).collect();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // partial pivot: largest magnitude in column k at or below row k
            let mag2 = |r: usize| re[r * n + k] * re[r * n + k] + im[r * n + k] * im[r * n + k];
            let mut best = k;
            let mut best_mag2 = mag2(k);
            for r in k + 1..n {
                let m2 = mag2(r);
                if m2 > best_mag2 {
                    best = r;
                    best_mag2 = m2;
                }
            }
            let best_mag = best_mag2.sqrt();
            if best_mag <= tol {
                return Err(Error::Singular(format!(
                    "pivot {:.3e} below {:.3e} at column {}",
                    best_mag, tol, k
                )));
            }
            if best != k {
                for j in 0..n {
                    re.swap(k * n + j, best * n + j);
                    im.swap(k * n + j, best * n + j);
                }
                piv.swap(k, best);
            }
            let pivot = C64::new(re[k * n + k], im[k * n + k]);
            for r in k + 1..n {
                let factor = C64::new(re[r * n + k], im[r * n + k]) / pivot;
                re[r * n + k] = factor.re;
                im[r * n + k] = factor.im;
                let (krow, rrow) = planar_rows(&mut re, &mut im, n, k, r, k + 1, n);
                planar_row_axpy((factor.re, factor.im), krow, rrow);
            }
        }
        Ok(Lu { n, re, im, piv })
    }

    #[inline]
    fn entry(&self, r: usize, c: usize) -> C64 {
        C64::new(self.re[r * self.n + c], self.im[r * self.n + c])
    }

    /// Solve a·X = B for a matrix right-hand side.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        if b.rows() != self.n {
            return Err(Error::Shape(format!(
                "solve: LU is {}x{}, rhs has {} rows",
                self.n,
                self.n,
                b.rows()
            )));
        }
        let n = self.n;
        let w = b.cols();
        // apply row permutation into planar working storage
        let mut xre = vec![0.0f64; n * w];
        let mut xim = vec![0.0f64; n * w];
        for i in 0..n {
            for (j, z) in b.row(self.piv[i]).iter().enumerate() {
                xre[i * w + j] = z.re;
                xim[i * w + j] = z.im;
            }
        }
        // forward substitution (unit lower triangular), panels of 4 pivots
        const NB: usize = 4;
        let mut lo = 0;
        while lo < n {
            let hi = (lo + NB).min(n);
            // finish the small triangle inside the panel
            for k in lo..hi {
                for r in k + 1..hi {
                    let factor = self.entry(r, k);
                    if factor == ZERO {
                        continue;
                    }
                    let (krow, rrow) = planar_rows(&mut xre, &mut xim, w, k, r, 0, w);
                    planar_row_axpy((factor.re, factor.im), krow, rrow);
                }
            }
            // sweep the trailing rows once with all panel pivots
            let (hre, tre) = xre.split_at_mut(hi * w);
            let (him, tim) = xim.split_at_mut(hi * w);
            if hi - lo == NB {
                let kre = std::array::from_fn(|t| &hre[(lo + t) * w..(lo + t + 1) * w]);
                let kim = std::array::from_fn(|t| &him[(lo + t) * w..(lo + t + 1) * w]);
                for r in hi..n {
                    let f: [C64; NB] = std::array::from_fn(|t| self.entry(r, lo + t));
                    let rre = &mut tre[(r - hi) * w..(r - hi + 1) * w];
                    let rim = &mut tim[(r - hi) * w..(r - hi + 1) * w];
                    planar_panel_axpy(f, kre, kim, rre, rim);
                }
            } else {
                for k in lo..hi {
                    let krow = (&hre[k * w..(k + 1) * w], &him[k * w..(k + 1) * w]);
                    for r in hi..n {
                        let factor = self.entry(r, k);
                        if factor == ZERO {
                            continue;
                        }
                        let rre = &mut tre[(r - hi) * w..(r - hi + 1) * w];
                        let rim = &mut tim[(r - hi) * w..(r - hi + 1) * w];
                        planar_row_axpy((factor.re, factor.im), krow, (rre, rim));
                    }
                }
            }
            lo = hi;
        }
        // backward substitution, panels of 4 pivots from the bottom up
        let mut hi = n;
        while hi > 0 {
            let lo = hi.saturating_sub(NB);
            for k in (lo..hi).rev() {
                let inv = ONE / self.entry(k, k);
                for j in k * w..(k + 1) * w {
                    let v = C64::new(xre[j], xim[j]) * inv;
                    xre[j] = v.re;
                    xim[j] = v.im;
                }
                for r in (lo..k).rev() {
                    let factor = self.entry(r, k);
                    if factor == ZERO {
                        continue;
                    }
                    let (krow, rrow) = planar_rows(&mut xre, &mut xim, w, k, r, 0, w);
                    planar_row_axpy((factor.re, factor.im), krow, rrow);
                }
            }
            let (hre, tre) = xre.split_at_mut(lo * w);
            let (him, tim) = xim.split_at_mut(lo * w);
            if hi - lo == NB {
                // pivots applied in descending k order, matching the sweep above
                let kre = std::array::from_fn(|t| &tre[(hi - 1 - t - lo) * w..(hi - t - lo) * w]);
                let kim = std::array::from_fn(|t| &tim[(hi - 1 - t - lo) * w..(hi - t - lo) * w]);
                for r in (0..lo).rev() {
                    let f: [C64; NB] = std::array::from_fn(|t| self.entry(r, hi - 1 - t));
                    let rre = &mut hre[r * w..(r + 1) * w];
                    let rim = &mut him[r * w..(r + 1) * w];
                    planar_panel_axpy(f, kre, kim, rre, rim);
                }
            } else {
                for k in (lo..hi).rev() {
                    let krow = (&tre[(k - lo) * w..(k - lo + 1) * w], &tim[(k - lo) * w..(k - lo + 1) * w]);
                    for r in (0..lo).rev() {
                        let factor = self.entry(r, k);
                        if factor == ZERO {
                            continue;
                        }
                        let rre = &mut hre[r * w..(r + 1) * w];
                        let rim = &mut him[r * w..(r + 1) * w];
                        planar_row_axpy((factor.re, factor.im), krow, (rre, rim));
                    }
                }
            }
            hi = lo;
        }
        let x: Vec<C64> = xre.iter().zip(&xim).map(|(&r, &i)| C64::new(r, i)).collect();
        CMatrix::from_vec(n, w, x)
    }
}

/// Solve a·x = b by LU with partial pivoting.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    Lu::factor(a)?.solve(b)
}

/// Orthonormalize the columns of `a` by modified Gram-Schmidt with
/// reorthogonalization. The implicit R factor has a positive real diagonal,
/// which pins the column phases for reproducible initialization.
pub fn qr_orthonormalize(a: &CMatrix) -> Result<CMatrix> {
    if a.rows() < a.cols() {
        return Err(Error::Shape(format!(
            "qr_orthonormalize needs rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut q = CMatrix::zeros(a.rows(), a.cols());
    let mut cols: Vec<CVector> = (0..a.cols()).map(|j| a.column(j)).collect();
    for j in 0..a.cols() {
        let col_norm0 = norm2(&cols[j]);
        // two Gram-Schmidt passes keep orthogonality near machine precision
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let r = inner(&qi, &cols[j])?;
                let proj = qi.scale(r);
                for k in 0..cols[j].dim() {
                    cols[j][k] -= proj[k];
                }
            }
        }
        let r_jj = norm2(&cols[j]);
        if col_norm0 == 0.0 || r_jj < 1e-12 * col_norm0 {
            return Err(Error::RankDeficient(format!(
                "column {} pivot {:.3e} below threshold",
                j, r_jj
            )));
        }
        let qj = cols[j].scale(C64::new(1.0 / r_jj, 0.0));
        q.set_column(j, &qj);
    }
    Ok(q)
}

/// Largest singular value by power iteration on a*a.
///
/// Deterministic all-ones start vector; stops when the Rayleigh quotient
/// changes by less than 1e-10 relative, capped at 10,000 iterations.
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "operator_norm needs square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let astar = a.adjoint();
    let mut v = CVector::from_fn(n, |_| C64::new(1.0 / (n as f64).sqrt(), 0.0));
    let mut lambda_prev = -1.0f64;
    for _ in 0..10_000 {
        let w = mat_vec(&astar, &mat_vec(a, &v)?)?;
        let lambda = inner(&v, &w)?.re;
        let wn = norm2(&w);
        if wn == 0.0 {
            return Ok(0.0);
        }
        v = w.scale(C64::new(1.0 / wn, 0.0));
        if (lambda - lambda_prev).abs() <= 1e-10 * lambda.abs().max(1e-300) {
            return Ok(lambda.max(0.0).sqrt());
        }
        lambda_prev = lambda;
    }
    Ok(lambda_prev.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::super::{is_unitary, matmul, random_gaussian_matrix};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solve_trivial_cases() {
        let id = CMatrix::identity(3);
        let b = CMatrix::from_fn(3, 2, |i, j| C64::new(i as f64, j as f64 + 0.5));
        assert_eq!(solve(&id, &b).unwrap(), b);
        let two = id.scale(C64::new(2.0, 0.0));
        let x = solve(&two, &id).unwrap();
        for i in 0..3 {
            assert!((x.at(i, i) - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn solve_residual_on_random_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_gaussian_matrix(8, 8, 1.0, &mut rng);
        let b = random_gaussian_matrix(8, 3, 1.0, &mut rng);
        let x = solve(&a, &b).unwrap();
        let resid = matmul(&a, &x).unwrap().sub(&b).unwrap().frobenius_norm();
        assert!(resid <= 1e-10 * b.frobenius_norm(), "residual {resid}");
    }

    #[test]
    fn solve_roundtrip_recovers_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_gaussian_matrix(6, 6, 1.0, &mut rng);
        let x = random_gaussian_matrix(6, 2, 1.0, &mut rng);
        let b = matmul(&a, &x).unwrap();
        let x2 = solve(&a, &b).unwrap();
        let err = x2.sub(&x).unwrap().frobenius_norm() / x.frobenius_norm();
        assert!(err <= 1e-8, "relative error {err}");
    }

    #[test]
    fn solve_singular_is_detected() {
        let a = CMatrix::zeros(3, 3);
        assert!(matches!(solve(&a, &CMatrix::identity(3)), Err(Error::Singular(_))));
    }

    #[test]
    fn qr_normalizes_single_column() {
        let a = CMatrix::from_vec(2, 1, vec![C64::new(2.0, 0.0), ZERO]).unwrap();
        let q = qr_orthonormalize(&a).unwrap();
        assert!((q.at(0, 0) - ONE).norm() < 1e-15);
        assert!(q.at(1, 0).norm() < 1e-15);
    }

    #[test]
    fn qr_fixed_point_on_orthonormal_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = qr_orthonormalize(&random_gaussian_matrix(5, 5, 1.0, &mut rng)).unwrap();
        let q = qr_orthonormalize(&u).unwrap();
        assert!(q.sub(&u).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn qr_gives_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_gaussian_matrix(6, 6, 1.0, &mut rng);
        let q = qr_orthonormalize(&a).unwrap();
        assert!(q.is_orthonormal_cols(1e-12));
        assert!(is_unitary(&q, 1e-10));
    }

    #[test]
    fn qr_rank_deficiency_detected() {
        let mut a = CMatrix::zeros(3, 2);
        a.set(0, 0, ONE);
        a.set(0, 1, ONE); // second column parallel to first
        assert!(matches!(qr_orthonormalize(&a), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn operator_norm_cases() {
        assert!((operator_norm(&CMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-8);
        let d = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                C64::new(if i == 0 { 3.0 } else { 4.0 }, 0.0)
            } else {
                ZERO
            }
        });
        assert!((operator_norm(&d).unwrap() - 4.0).abs() < 1e-8);
        // [[0,1],[0,0]]: a*a = diag(0,1), largest singular value 1
        let n = CMatrix::from_vec(2, 2, vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        assert!((operator_norm(&n).unwrap() - 1.0).abs() < 1e-8);
    }
}
