//! Digital transceiver updates of the alternating optimizer: MMSE
//! combiners, error covariances, rate-weight matrices, the regularized
//! precoder solve with its bisection power search, and the weighted
//! sum-rate objective.
//!
//! Node naming: node l decodes the stream sent by node r and vice versa,
//! so the combiner/error/weight of node i are sized by the *other* node's
//! stream count.

use crate::effective::EffectiveChannels;
use crate::error::{Error, Result};
use crate::linalg::{gemm, hermitianize, ln_det_hpd, solve_hpd};
use crate::scalar::{real, SimScalar};
use crate::{CMatrix, NodeId};
use num_complex::Complex;

/// Per-node pieces the combiner/error computations need.
struct RxView<'a, T: SimScalar> {
    /// Channel carrying the desired stream into this node.
    desired: &'a CMatrix<T>,
    /// Effective self-interference channel of this node.
    self_interference: &'a CMatrix<T>,
    /// Precoder of the desired stream (other node's transmitter).
    desired_precoder: &'a CMatrix<T>,
    /// This node's own precoder (drives the self-interference).
    own_precoder: &'a CMatrix<T>,
}

fn rx_view<'a, T: SimScalar>(
    eff: &'a EffectiveChannels<T>,
    precoder_l: &'a CMatrix<T>,
    precoder_r: &'a CMatrix<T>,
    node: NodeId,
) -> RxView<'a, T> {
    match node {
        NodeId::L => RxView {
            desired: &eff.l_from_r,
            self_interference: &eff.l_from_l,
            desired_precoder: precoder_r,
            own_precoder: precoder_l,
        },
        NodeId::R => RxView {
            desired: &eff.r_from_l,
            self_interference: &eff.r_from_r,
            desired_precoder: precoder_l,
            own_precoder: precoder_r,
        },
    }
}

fn gram<T: SimScalar>(channel: &CMatrix<T>, precoder: &CMatrix<T>) -> CMatrix<T> {
    let hv = gemm(channel, precoder);
    gemm(&hv, &hv.adjoint())
}

/// Interference-plus-noise covariance at the node: self-interference part
/// plus the noise diagonal.
fn interference_covariance<T: SimScalar>(view: &RxView<'_, T>, noise_var: T) -> CMatrix<T> {
    let n = view.desired.nrows();
    let mut cov = gram(view.self_interference, view.own_precoder);
    for i in 0..n {
        cov[(i, i)] += Complex::new(noise_var, T::zero());
    }
    hermitianize(&mut cov);
    cov
}

/// MMSE combiner of the node: matched filter against the total receive
/// covariance (desired + self-interference + noise).
pub fn mmse_combiner<T: SimScalar>(
    eff: &EffectiveChannels<T>,
    precoder_l: &CMatrix<T>,
    precoder_r: &CMatrix<T>,
    node: NodeId,
    noise_var: T,
) -> CMatrix<T> {
    let view = rx_view(eff, precoder_l, precoder_r, node);
    let mut total = interference_covariance(&view, noise_var);
    total += gram(view.desired, view.desired_precoder);
    hermitianize(&mut total);
    let hv = gemm(view.desired, view.desired_precoder);
    // F = V^H H^H (HVV^H H^H + R_int)^{-1}; the noise diagonal keeps the
    // covariance invertible.
    let solved = solve_hpd(&total, &hv).expect("receive covariance is positive definite");
    solved.adjoint()
}

/// Error covariance of the node's stream estimate at the MMSE point:
/// E = (I + V^H H^H Rbar^{-1} H V)^{-1}.
pub fn error_covariance<T: SimScalar>(
    eff: &EffectiveChannels<T>,
    precoder_l: &CMatrix<T>,
    precoder_r: &CMatrix<T>,
    node: NodeId,
    noise_var: T,
) -> CMatrix<T> {
    let view = rx_view(eff, precoder_l, precoder_r, node);
    let d = view.desired_precoder.ncols();
    let rbar = interference_covariance(&view, noise_var);
    let hv = gemm(view.desired, view.desired_precoder);
    let whitened = solve_hpd(&rbar, &hv).expect("interference covariance is positive definite");
    let mut inner = gemm(&hv.adjoint(), &whitened);
    for i in 0..d {
        inner[(i, i)] += Complex::new(T::one(), T::zero());
    }
    hermitianize(&mut inner);
    let mut err = inner
        .try_inverse()
        .expect("error covariance inner matrix is positive definite");
    hermitianize(&mut err);
    err
}

/// Rate weight of one node: (w / ln 2) * E^{-1}.
pub fn weight_matrix<T: SimScalar>(error_cov: &CMatrix<T>, rate_weight: T) -> CMatrix<T> {
    if rate_weight == T::zero() {
        return CMatrix::zeros(error_cov.nrows(), error_cov.ncols());
    }
    let mut inv = error_cov
        .clone()
        .try_inverse()
        .expect("error covariance is positive definite");
    hermitianize(&mut inv);
    let scale = rate_weight / real::<T>(std::f64::consts::LN_2);
    inv * Complex::new(scale, T::zero())
}

/// Rate weights of both nodes.
pub fn weight_matrices<T: SimScalar>(
    error_cov_l: &CMatrix<T>,
    error_cov_r: &CMatrix<T>,
    rate_weight_l: T,
    rate_weight_r: T,
) -> (CMatrix<T>, CMatrix<T>) {
    (
        weight_matrix(error_cov_l, rate_weight_l),
        weight_matrix(error_cov_r, rate_weight_r),
    )
}

/// Transmit power Tr(V V^H) as a function of the multiplier, in the
/// eigenbasis of the regularized normal matrix.
fn power_at<T: SimScalar>(gains: &[T], eigenvalues: &[T], mu: T) -> T {
    let mut acc = T::zero();
    for (g, lam) in gains.iter().zip(eigenvalues) {
        let denom = *lam + mu;
        if denom <= T::zero() {
            if *g > T::zero() {
                return T::max_value().unwrap_or(T::one() / T::default_epsilon());
            }
            continue;
        }
        acc += *g / (denom * denom);
    }
    acc
}

/// Precoder update of one node under its sum-power budget.
///
/// Solves (X + mu I) V = H^H F^H W, where X stacks the quadratic terms of
/// the node's own link and of the self-interference it causes; mu = 0 when
/// the unconstrained solution fits the budget, otherwise the unique root of
/// the power equation found by bisection on the eigen form.
pub fn update_precoder<T: SimScalar>(
    eff: &EffectiveChannels<T>,
    combiner_l: &CMatrix<T>,
    combiner_r: &CMatrix<T>,
    weight_l: &CMatrix<T>,
    weight_r: &CMatrix<T>,
    node: NodeId,
    power_budget: T,
) -> Result<(CMatrix<T>, T)> {
    if power_budget <= T::zero() {
        return Err(Error::InvalidConfig("power budget must be positive".into()));
    }
    // Own transmission is received at the other node.
    let (fwd, si, fwd_combiner, fwd_weight, own_combiner, own_weight) = match node {
        NodeId::L => (
            &eff.r_from_l,
            &eff.l_from_l,
            combiner_r,
            weight_r,
            combiner_l,
            weight_l,
        ),
        NodeId::R => (
            &eff.l_from_r,
            &eff.r_from_r,
            combiner_l,
            weight_l,
            combiner_r,
            weight_r,
        ),
    };
    let m = fwd.ncols();

    // X = H_fwd^H Ff^H Wf Ff H_fwd + H_si^H Fo^H Wo Fo H_si.
    let ff_fwd = gemm(fwd_combiner, fwd);
    let ff_own = gemm(own_combiner, si);
    let mut normal = gemm(&ff_fwd.adjoint(), &gemm(fwd_weight, &ff_fwd))
        + gemm(&ff_own.adjoint(), &gemm(own_weight, &ff_own));
    hermitianize(&mut normal);

    // Right-hand side B = H_fwd^H Ff^H Wf.
    let rhs = gemm(&gemm(fwd_combiner, fwd).adjoint(), fwd_weight);
    if rhs.norm() == T::zero() {
        return Ok((CMatrix::zeros(m, rhs.ncols()), T::zero()));
    }

    let eig = normal.symmetric_eigen();
    let eigenvalues: Vec<T> = eig.eigenvalues.iter().map(|l| l.max(T::zero())).collect();
    let rotated = gemm(&eig.eigenvectors.adjoint(), &rhs);
    let gains: Vec<T> = (0..m)
        .map(|k| {
            let mut acc = T::zero();
            for j in 0..rotated.ncols() {
                acc += rotated[(k, j)].norm_sqr();
            }
            acc
        })
        .collect();

    let scale = eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b));
    let lam_floor = scale * real::<T>(1e-14);
    let unconstrained_power = {
        let mut acc = T::zero();
        let mut unbounded = false;
        for (g, lam) in gains.iter().zip(&eigenvalues) {
            if *lam <= lam_floor {
                if *g > real::<T>(1e-28) * rhs.norm() {
                    unbounded = true;
                }
            } else {
                acc += *g / (*lam * *lam);
            }
        }
        if unbounded {
            None
        } else {
            Some(acc)
        }
    };

    // Far tighter than the 1e-6 contract: residual power error shows up
    // directly as rate jitter near convergence.
    let tol = real::<T>(1e-9) * power_budget;
    let mu = match unconstrained_power {
        Some(p0) if p0 <= power_budget + tol => T::zero(),
        _ => {
            // Bracket: power(mu) <= Tr(G)/mu^2, so sqrt(Tr(G)/p) bounds the
            // root from above; double defensively until it does.
            let total_gain = gains.iter().fold(T::zero(), |a, &b| a + b);
            let mut hi = (total_gain / power_budget).sqrt().max(real(1e-30));
            let mut guard = 0;
            while power_at(&gains, &eigenvalues, hi) > power_budget && guard < 200 {
                hi = hi + hi;
                guard += 1;
            }
            let mut lo = T::zero();
            let mut mid = hi;
            for _ in 0..200 {
                mid = (lo + hi) * real(0.5);
                let p = power_at(&gains, &eigenvalues, mid);
                if (p - power_budget).abs() <= tol {
                    break;
                }
                if p > power_budget {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            mid
        }
    };

    // V = U diag(1/(lambda + mu)) U^H B.
    let mut scaled = rotated;
    for k in 0..m {
        let denom = eigenvalues[k] + mu;
        let inv = if denom > lam_floor {
            T::one() / denom
        } else {
            T::zero()
        };
        for j in 0..scaled.ncols() {
            scaled[(k, j)] *= Complex::new(inv, T::zero());
        }
    }
    let precoder = gemm(&eig.eigenvectors, &scaled);
    Ok((precoder, mu))
}

/// Weighted sum rate in natural-log units:
/// sum_k w_k * ln det(Rbar_k^{-1} R_k).
///
/// Reported rates in bits/s/Hz divide this by ln 2 at the output boundary.
pub fn weighted_sum_rate<T: SimScalar>(
    eff: &EffectiveChannels<T>,
    precoder_l: &CMatrix<T>,
    precoder_r: &CMatrix<T>,
    rate_weight_l: T,
    rate_weight_r: T,
    noise_var_l: T,
    noise_var_r: T,
) -> T {
    let mut acc = T::zero();
    for (node, w, noise) in [
        (NodeId::L, rate_weight_l, noise_var_l),
        (NodeId::R, rate_weight_r, noise_var_r),
    ] {
        if w == T::zero() {
            continue;
        }
        let view = rx_view(eff, precoder_l, precoder_r, node);
        let rbar = interference_covariance(&view, noise);
        let mut total = rbar.clone() + gram(view.desired, view.desired_precoder);
        hermitianize(&mut total);
        let ln_det_total = ln_det_hpd(&total).expect("receive covariance is positive definite");
        let ln_det_rbar = ln_det_hpd(&rbar).expect("interference covariance is positive definite");
        acc += w * (ln_det_total - ln_det_rbar);
    }
    acc
}

/// Mutable optimizer state: precoders, combiners, weights, error
/// covariances, power multipliers and the objective trajectory.
#[derive(Debug, Clone)]
pub struct SolverState<T: SimScalar> {
    pub precoder_l: CMatrix<T>,
    pub precoder_r: CMatrix<T>,
    pub combiner_l: CMatrix<T>,
    pub combiner_r: CMatrix<T>,
    pub weight_l: CMatrix<T>,
    pub weight_r: CMatrix<T>,
    pub error_cov_l: CMatrix<T>,
    pub error_cov_r: CMatrix<T>,
    pub multiplier_l: T,
    pub multiplier_r: T,
    /// Weighted sum rate (bits/s/Hz) after each outer iteration.
    pub wsr_history: Vec<T>,
}

impl<T: SimScalar> SolverState<T> {
    /// Dimension-consistent zero state (combiners/weights start empty and
    /// are filled by the first outer iteration).
    pub fn new(
        tx_l: usize,
        tx_r: usize,
        rx_l: usize,
        rx_r: usize,
        streams_l: usize,
        streams_r: usize,
    ) -> Self {
        SolverState {
            precoder_l: CMatrix::zeros(tx_l, streams_l),
            precoder_r: CMatrix::zeros(tx_r, streams_r),
            combiner_l: CMatrix::zeros(streams_r, rx_l),
            combiner_r: CMatrix::zeros(streams_l, rx_r),
            weight_l: CMatrix::zeros(streams_r, streams_r),
            weight_r: CMatrix::zeros(streams_l, streams_l),
            error_cov_l: CMatrix::identity(streams_r, streams_r),
            error_cov_r: CMatrix::identity(streams_l, streams_l),
            multiplier_l: T::zero(),
            multiplier_r: T::zero(),
            wsr_history: Vec::new(),
        }
    }
}

/// Deterministic precoder initialization: dominant right singular subspace
/// of the node's forward channel, equal power per stream summing to the
/// budget.
pub fn init_precoder<T: SimScalar>(forward: &CMatrix<T>, streams: usize, power: T) -> CMatrix<T> {
    let m = forward.ncols();
    // Right singular vectors via the Hermitian eigendecomposition of H^H H;
    // avoids any SVD ordering/convention concerns.
    let mut gram = gemm(&forward.adjoint(), forward);
    hermitianize(&mut gram);
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let per_stream = (power / real(streams as f64)).sqrt();
    let mut precoder = CMatrix::zeros(m, streams);
    for (col, &idx) in order.iter().take(streams).enumerate() {
        let v = eig.eigenvectors.column(idx);
        for row in 0..m {
            precoder[(row, col)] = v[row] * Complex::new(per_stream, T::zero());
        }
    }
    precoder
}

/// Transmit power of a precoder.
pub fn precoder_power<T: SimScalar>(precoder: &CMatrix<T>) -> T {
    precoder.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}
