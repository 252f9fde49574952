//! Shared oracle implementations for the integration tests.
//!
//! Everything here evaluates the model through independent routes (dense
//! diagonal products, definition-level error covariances, waterfilling,
//! finite differences) so the production code paths are checked against
//! textbook formulas rather than against themselves.

#![allow(dead_code)]

use fdirs_core::channel::ChannelSet;
use fdirs_core::effective::EffectiveChannels;
use fdirs_core::{CMatrix, CVector, Cx, NodeId};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Mat = CMatrix<f64>;
pub type Vect = CVector<f64>;

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| fdirs_core::scalar::complex_gaussian(rng))
}

pub fn random_hpd(n: usize, rng: &mut ChaCha12Rng) -> Mat {
    let b = random_matrix(n, n, rng);
    let mut m = &b * b.adjoint();
    for i in 0..n {
        m[(i, i)] += Cx::new(0.5, 0.0);
    }
    fdirs_core::linalg::hermitianize(&mut m);
    m
}

pub fn random_psd(n: usize, rng: &mut ChaCha12Rng) -> Mat {
    let b = random_matrix(n, n, rng);
    let mut m = &b * b.adjoint();
    fdirs_core::linalg::hermitianize(&mut m);
    m
}

pub fn random_unit_phases(n: usize, rng: &mut ChaCha12Rng) -> Vect {
    use fdirs_core::SimScalar;
    Vect::from_fn(n, |_, _| {
        fdirs_core::scalar::unit_phasor(f64::uniform_in(rng, -3.1, 3.1))
    })
}

pub fn seeded(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Random channel set over arbitrary dimensions:
/// (rx_l, tx_l), (rx_r, tx_r), surface element counts (el, er).
pub fn random_channel_set(
    (rx_l, tx_l): (usize, usize),
    (rx_r, tx_r): (usize, usize),
    (el, er): (usize, usize),
    rng: &mut ChaCha12Rng,
) -> ChannelSet<f64> {
    let cross = random_matrix(er, el, rng);
    ChannelSet {
        l_from_r: random_matrix(rx_l, tx_r, rng),
        r_from_l: random_matrix(rx_r, tx_l, rng),
        l_from_l: random_matrix(rx_l, tx_l, rng),
        r_from_r: random_matrix(rx_r, tx_r, rng),
        irs_l_from_l: random_matrix(el, tx_l, rng),
        l_from_irs_l: random_matrix(rx_l, el, rng),
        irs_r_from_r: random_matrix(er, tx_r, rng),
        r_from_irs_r: random_matrix(rx_r, er, rng),
        irs_r_from_l: random_matrix(er, tx_l, rng),
        l_from_irs_r: random_matrix(rx_l, er, rng),
        irs_l_from_r: random_matrix(el, tx_r, rng),
        r_from_irs_l: random_matrix(rx_r, el, rng),
        irs_l_from_irs_r: cross.transpose(),
        irs_r_from_irs_l: cross,
    }
}

/// Dense reference composition of the effective channels with materialized
/// diagonal phase matrices (independent of the production composition).
pub fn dense_effective(
    ch: &ChannelSet<f64>,
    phi_l: &Vect,
    phi_r: &Vect,
    include_double: bool,
) -> EffectiveChannels<f64> {
    let dl = Mat::from_diagonal(phi_l);
    let dr = Mat::from_diagonal(phi_r);
    let dbl = |m: Mat| {
        if include_double {
            m
        } else {
            m * Cx::new(0.0, 0.0)
        }
    };
    EffectiveChannels {
        l_from_r: &ch.l_from_r
            + &ch.l_from_irs_r * &dr * &ch.irs_r_from_r
            + &ch.l_from_irs_l * &dl * &ch.irs_l_from_r
            + dbl(&ch.l_from_irs_l * &dl * &ch.irs_l_from_irs_r * &dr * &ch.irs_r_from_r),
        r_from_l: &ch.r_from_l
            + &ch.r_from_irs_l * &dl * &ch.irs_l_from_l
            + &ch.r_from_irs_r * &dr * &ch.irs_r_from_l
            + dbl(&ch.r_from_irs_r * &dr * &ch.irs_r_from_irs_l * &dl * &ch.irs_l_from_l),
        l_from_l: &ch.l_from_l
            + &ch.l_from_irs_l * &dl * &ch.irs_l_from_l
            + &ch.l_from_irs_r * &dr * &ch.irs_r_from_l
            + dbl(&ch.l_from_irs_r * &dr * &ch.irs_r_from_irs_l * &dl * &ch.irs_l_from_l),
        r_from_r: &ch.r_from_r
            + &ch.r_from_irs_r * &dr * &ch.irs_r_from_r
            + &ch.r_from_irs_l * &dl * &ch.irs_l_from_r
            + dbl(&ch.r_from_irs_l * &dl * &ch.irs_l_from_irs_r * &dr * &ch.irs_r_from_r),
    }
}

/// Definition-level error covariance at an arbitrary combiner:
/// E = (F Hd Vd - I)(F Hd Vd - I)^H + F Hsi Vown Vown^H Hsi^H F^H
///   + noise * F F^H.
pub fn mse_direct(
    eff: &EffectiveChannels<f64>,
    combiner: &Mat,
    precoder_l: &Mat,
    precoder_r: &Mat,
    node: NodeId,
    noise_var: f64,
) -> Mat {
    let (desired, si, v_desired, v_own) = match node {
        NodeId::L => (&eff.l_from_r, &eff.l_from_l, precoder_r, precoder_l),
        NodeId::R => (&eff.r_from_l, &eff.r_from_r, precoder_l, precoder_r),
    };
    let d = v_desired.ncols();
    let cross = combiner * desired * v_desired - Mat::identity(d, d);
    let leak = combiner * si * v_own;
    &cross * cross.adjoint()
        + &leak * leak.adjoint()
        + combiner * combiner.adjoint() * Cx::new(noise_var, 0.0)
}

/// True weighted MSE as a function of both phase vectors (any magnitude)
/// with all digital variables frozen.
#[allow(clippy::too_many_arguments)]
pub fn weighted_mse(
    ch: &ChannelSet<f64>,
    phi_l: &Vect,
    phi_r: &Vect,
    precoder_l: &Mat,
    precoder_r: &Mat,
    combiner_l: &Mat,
    combiner_r: &Mat,
    weight_l: &Mat,
    weight_r: &Mat,
    noise_var_l: f64,
    noise_var_r: f64,
    include_double: bool,
) -> f64 {
    let eff = dense_effective(ch, phi_l, phi_r, include_double);
    let e_l = mse_direct(
        &eff,
        combiner_l,
        precoder_l,
        precoder_r,
        NodeId::L,
        noise_var_l,
    );
    let e_r = mse_direct(
        &eff,
        combiner_r,
        precoder_l,
        precoder_r,
        NodeId::R,
        noise_var_r,
    );
    ((weight_l * e_l).trace() + (weight_r * e_r).trace()).re
}

/// Reconstruct (Sigma, s, c) of a quadratic-plus-linear functional by
/// probing it at canonical points.
pub fn reconstruct_quadratic(mut probe: impl FnMut(&Vect) -> f64, n: usize) -> (Mat, Vect, f64) {
    let zero = Vect::zeros(n);
    let c = probe(&zero);
    let unit = |k: usize, z: Cx<f64>| {
        let mut v = Vect::zeros(n);
        v[k] = z;
        v
    };
    let mut sigma = Mat::zeros(n, n);
    let mut s = Vect::zeros(n);
    for k in 0..n {
        let jp = probe(&unit(k, Cx::new(1.0, 0.0)));
        let jm = probe(&unit(k, Cx::new(-1.0, 0.0)));
        let ji = probe(&unit(k, Cx::new(0.0, 1.0)));
        let quad_kk = 0.5 * (jp + jm) - c;
        sigma[(k, k)] = Cx::new(quad_kk, 0.0);
        let re_s = 0.5 * (jp - quad_kk - c);
        let im_s = -0.5 * (ji - quad_kk - c);
        s[k] = Cx::new(re_s, im_s);
    }
    for k in 0..n {
        for j in (k + 1)..n {
            let mut v = Vect::zeros(n);
            v[k] = Cx::new(1.0, 0.0);
            v[j] = Cx::new(1.0, 0.0);
            let j1 = probe(&v);
            let mut v2 = Vect::zeros(n);
            v2[k] = Cx::new(1.0, 0.0);
            v2[j] = Cx::new(0.0, 1.0);
            let j2 = probe(&v2);
            let base = sigma[(k, k)].re + sigma[(j, j)].re + c;
            let re_kj = 0.5 * (j1 - base - 2.0 * (s[k].re + s[j].re));
            let im_kj = -0.5 * (j2 - base - 2.0 * (s[k].re - s[j].im));
            sigma[(k, j)] = Cx::new(re_kj, im_kj);
            sigma[(j, k)] = Cx::new(re_kj, -im_kj);
        }
    }
    (sigma, s, c)
}

/// Waterfilling rate (natural log) over the top `streams` modes of a
/// single link under a sum-power budget.
pub fn waterfilling_rate_nats(h: &Mat, power: f64, noise_var: f64, streams: usize) -> f64 {
    let mut gains: Vec<f64> = h
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s * s)
        .collect();
    gains.sort_by(|a, b| b.partial_cmp(a).unwrap());
    gains.truncate(streams);
    for active in (1..=gains.len()).rev() {
        let inv_sum: f64 = gains[..active].iter().map(|g| noise_var / g).sum();
        let level = (power + inv_sum) / active as f64;
        if level >= noise_var / gains[active - 1] {
            return gains[..active]
                .iter()
                .map(|g| (level * g / noise_var).ln())
                .sum();
        }
    }
    0.0
}

/// Numerical gradient of a real function of a complex matrix, stacked as
/// [d/dRe; d/dIm], via central differences.
pub fn matrix_gradient(mut f: impl FnMut(&Mat) -> f64, at: &Mat, step: f64) -> Vec<f64> {
    let mut grads = Vec::with_capacity(2 * at.len());
    for part in 0..2 {
        for idx in 0..at.len() {
            let mut plus = at.clone();
            let mut minus = at.clone();
            let bump = if part == 0 {
                Cx::new(step, 0.0)
            } else {
                Cx::new(0.0, step)
            };
            plus[idx] += bump;
            minus[idx] -= bump;
            grads.push((f(&plus) - f(&minus)) / (2.0 * step));
        }
    }
    grads
}
