//! Scalar abstraction: the whole simulator is generic over the real scalar
//! type (f32 or f64), with complex arithmetic built on `num_complex`.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::FromPrimitive;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real scalar usable by the simulator: f32 or f64.
///
/// Besides the field operations from `RealField`, implementations provide
/// random sampling and a raw complex matrix-multiply kernel so that generic
/// code never has to thread distribution bounds around.
pub trait SimScalar:
    RealField + Copy + Default + FromPrimitive + num_traits::ToPrimitive + Send + Sync + 'static
{
    /// One draw from the standard normal distribution N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from the uniform distribution on [lo, hi).
    fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;

    /// Raw complex GEMM kernel: c = a * b with column strides as given.
    ///
    /// # Safety
    /// Pointers must reference buffers of at least m*k, k*n and m*n
    /// elements with the given strides.
    #[allow(clippy::too_many_arguments)]
    unsafe fn complex_gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Complex<Self>,
        rsa: isize,
        csa: isize,
        b: *const Complex<Self>,
        rsb: isize,
        csb: isize,
        c: *mut Complex<Self>,
        rsc: isize,
        csc: isize,
    );
}

impl SimScalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        if lo == hi {
            return lo;
        }
        rng.random_range(lo..hi)
    }

    unsafe fn complex_gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Complex<Self>,
        rsa: isize,
        csa: isize,
        b: *const Complex<Self>,
        rsb: isize,
        csb: isize,
        c: *mut Complex<Self>,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a as *const [f64; 2],
            rsa,
            csa,
            b as *const [f64; 2],
            rsb,
            csb,
            [0.0, 0.0],
            c as *mut [f64; 2],
            rsc,
            csc,
        );
    }
}

impl SimScalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        if lo == hi {
            return lo;
        }
        rng.random_range(lo..hi)
    }

    unsafe fn complex_gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Complex<Self>,
        rsa: isize,
        csa: isize,
        b: *const Complex<Self>,
        rsb: isize,
        csb: isize,
        c: *mut Complex<Self>,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::cgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a as *const [f32; 2],
            rsa,
            csa,
            b as *const [f32; 2],
            rsb,
            csb,
            [0.0, 0.0],
            c as *mut [f32; 2],
            rsc,
            csc,
        );
    }
}

/// Convert an f64 literal into the working scalar type.
#[inline]
pub fn real<T: SimScalar>(x: f64) -> T {
    T::from_f64(x).expect("finite literal")
}

/// Unit-magnitude phasor e^{i theta}.
#[inline]
pub fn unit_phasor<T: SimScalar>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Circularly-symmetric complex Gaussian draw with unit variance,
/// i.e. real and imaginary parts each N(0, 1/2).
#[inline]
pub fn complex_gaussian<T: SimScalar, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let half = real::<T>(0.5).sqrt();
    Complex::new(
        T::standard_normal(rng) * half,
        T::standard_normal(rng) * half,
    )
}

/// splitmix64 step, used to derive stable sub-stream seeds.
#[inline]
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministically mix a base seed with a sequence of tags.
///
/// Adding new tagged streams never perturbs existing ones, so every
/// channel / trial / sweep point draws from an independent, reproducible
/// sub-stream.
pub fn mix_seed(base: u64, tags: &[u64]) -> u64 {
    let mut acc = splitmix64(base);
    for &t in tags {
        acc = splitmix64(acc ^ splitmix64(t));
    }
    acc
}

/// Stable 64-bit FNV-1a hash of a name, for tagging seed sub-streams.
pub fn name_tag(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
