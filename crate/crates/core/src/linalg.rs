//! Dense complex linear-algebra helpers shared by the beamforming modules.
//!
//! nalgebra's generic matmul is fine for the small precoder/combiner
//! matrices, but the IRS paths multiply matrices with hundreds of rows, so
//! products are routed through a packed GEMM kernel.

use crate::scalar::{real, SimScalar};
use crate::{CMatrix, CVector};
use nalgebra::ComplexField;
use num_complex::Complex;
use rand::SeedableRng;

/// c = a * b through the packed complex GEMM kernel.
pub fn gemm<T: SimScalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "gemm: inner dimensions differ ({k} vs {k2})");
    let mut c = CMatrix::<T>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    unsafe {
        T::complex_gemm_raw(
            m,
            k,
            n,
            a.as_slice().as_ptr(),
            1,
            m as isize,
            b.as_slice().as_ptr(),
            1,
            k as isize,
            c.as_mut_slice().as_mut_ptr(),
            1,
            m as isize,
        );
    }
    c
}

/// y = a * x.
pub fn gemv<T: SimScalar>(a: &CMatrix<T>, x: &CVector<T>) -> CVector<T> {
    let (m, k) = a.shape();
    assert_eq!(k, x.len(), "gemv: dimension mismatch");
    let mut y = CVector::<T>::zeros(m);
    if m == 0 || k == 0 {
        return y;
    }
    unsafe {
        T::complex_gemm_raw(
            m,
            k,
            1,
            a.as_slice().as_ptr(),
            1,
            m as isize,
            x.as_slice().as_ptr(),
            1,
            k as isize,
            y.as_mut_slice().as_mut_ptr(),
            1,
            m as isize,
        );
    }
    y
}

/// a * diag(phi): column j scaled by phi[j]. The diagonal never
/// materializes as a dense matrix.
pub fn scale_cols<T: SimScalar>(a: &CMatrix<T>, phi: &CVector<T>) -> CMatrix<T> {
    assert_eq!(a.ncols(), phi.len(), "scale_cols: dimension mismatch");
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let p = phi[j];
        for v in col.iter_mut() {
            *v *= p;
        }
    }
    out
}

/// diag(phi) * a: row i scaled by phi[i].
pub fn scale_rows<T: SimScalar>(phi: &CVector<T>, a: &CMatrix<T>) -> CMatrix<T> {
    assert_eq!(a.nrows(), phi.len(), "scale_rows: dimension mismatch");
    let mut out = a.clone();
    for j in 0..out.ncols() {
        for i in 0..out.nrows() {
            out[(i, j)] *= phi[i];
        }
    }
    out
}

/// Force exact Hermitian symmetry: m <- (m + m^H)/2.
pub fn hermitianize<T: SimScalar>(m: &mut CMatrix<T>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let half = real::<T>(0.5);
    for i in 0..n {
        m[(i, i)] = Complex::new(m[(i, i)].re, T::zero());
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * half;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Entry-wise (Schur) product.
pub fn schur<T: SimScalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    assert_eq!(a.shape(), b.shape(), "schur: dimension mismatch");
    a.zip_map(b, |x, y| x * y)
}

/// diag(a * b) for a: n x k, b: k x n, without forming the product.
pub fn diag_of_product<T: SimScalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CVector<T> {
    assert_eq!(a.ncols(), b.nrows(), "diag_of_product: dimension mismatch");
    assert_eq!(a.nrows(), b.ncols(), "diag_of_product: result not square");
    let n = a.nrows();
    let k = a.ncols();
    CVector::from_fn(n, |i, _| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for j in 0..k {
            acc += a[(i, j)] * b[(j, i)];
        }
        acc
    })
}

/// ln det of a Hermitian positive-definite matrix via Cholesky.
pub fn ln_det_hpd<T: SimScalar>(m: &CMatrix<T>) -> Option<T> {
    let chol = m.clone().cholesky()?;
    let l = chol.l();
    let mut acc = T::zero();
    for i in 0..l.nrows() {
        let d = l[(i, i)].re;
        if d <= T::zero() {
            return None;
        }
        acc += d.ln();
    }
    Some(acc + acc)
}

/// Solve m * x = rhs for Hermitian positive-definite m.
pub fn solve_hpd<T: SimScalar>(m: &CMatrix<T>, rhs: &CMatrix<T>) -> Option<CMatrix<T>> {
    Some(m.clone().cholesky()?.solve(rhs))
}

/// Factor c of a Hermitian PSD matrix with c^H c = w (small matrices).
///
/// Built from the eigendecomposition so that rank-deficient weights
/// (e.g. a zero rate weight) are handled without special cases.
pub fn psd_sqrt_factor<T: SimScalar>(w: &CMatrix<T>) -> CMatrix<T> {
    let n = w.nrows();
    if n == 0 {
        return w.clone();
    }
    let eig = w.clone().symmetric_eigen();
    let mut factor = eig.eigenvectors.adjoint();
    for i in 0..n {
        let lam = if eig.eigenvalues[i] > T::zero() {
            eig.eigenvalues[i]
        } else {
            T::zero()
        };
        let s = lam.sqrt();
        for j in 0..n {
            factor[(i, j)] *= Complex::new(s, T::zero());
        }
    }
    factor
}

/// Gershgorin upper bound on the largest eigenvalue of a Hermitian matrix.
pub fn gershgorin_upper<T: SimScalar>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut bound = T::zero();
    for i in 0..n {
        let mut row = m[(i, i)].re;
        for j in 0..n {
            if j != i {
                row += m[(i, j)].modulus();
            }
        }
        if i == 0 || row > bound {
            bound = row;
        }
    }
    bound
}

/// Largest eigenvalue of a Hermitian PSD matrix.
///
/// Block subspace iteration with a Rayleigh-Ritz step; returns a slightly
/// conservative estimate (Ritz value plus residual, capped by the
/// Gershgorin bound) so it remains a valid majorizer constant even when
/// the iteration stops early.
pub fn lambda_max_hermitian<T: SimScalar>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    if n == 0 {
        return T::zero();
    }
    if n == 1 {
        return m[(0, 0)].re;
    }
    let gersh = gershgorin_upper(m);
    if gersh <= T::zero() {
        // PSD input means everything is numerically zero.
        return T::zero();
    }

    let block = 4.min(n);
    // Deterministic pseudo-random start basis; structured inputs can be
    // nearly orthogonal to patterned starts, which would certify a
    // non-extremal Ritz pair.
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x1b8_e541);
    let mut basis =
        CMatrix::<T>::from_fn(n, block, |_, _| crate::scalar::complex_gaussian(&mut rng));

    let tol = real::<T>(1e-10);
    let max_sweeps = 300;
    let mut top = T::zero();
    let mut residual = gersh;
    for _ in 0..max_sweeps {
        let q = basis.qr().q();
        let mq = gemm(m, &q);
        // Rayleigh-Ritz on the block.
        let mut small = gemm(&q.adjoint(), &mq);
        hermitianize(&mut small);
        let eig = small.symmetric_eigen();
        let mut best = 0;
        for i in 0..block {
            if eig.eigenvalues[i] > eig.eigenvalues[best] {
                best = i;
            }
        }
        top = eig.eigenvalues[best];
        let dir = eig.eigenvectors.column(best).into_owned();
        let ritz_vec = gemv(&q, &dir);
        let m_ritz = gemv(&mq, &dir);
        residual = (&m_ritz - &ritz_vec * Complex::new(top, T::zero())).norm();
        basis = mq;
        if residual <= tol * top.max(real(1e-30)) {
            break;
        }
    }
    let safe = top + residual;
    if safe < gersh {
        safe
    } else {
        gersh
    }
}

/// Squared Frobenius norm.
pub fn frob_norm_sq<T: SimScalar>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}
