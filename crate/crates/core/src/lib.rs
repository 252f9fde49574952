//! Link-level simulator for a point-to-point full-duplex mmWave MIMO system
//! assisted by two near-field intelligent reflecting surfaces (IRSs).
//!
//! The library models the 14 channels of the link (direct, self-interference
//! and every node/IRS combination), composes the IRS-controlled effective
//! channels, and maximizes the weighted sum rate by alternating between
//! digital WMMSE transceiver updates and majorization-minimization phase
//! updates for each surface. A seeded Monte-Carlo harness reproduces SNR and
//! IRS-distance sweeps as CSV tables.
//!
//! All numeric code is generic over the real scalar type ([`SimScalar`],
//! f32 or f64); the concrete aliases below fix the default f64 lane used by
//! the CLI.

pub mod channel;
pub mod config;
pub mod effective;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod irs;
pub mod linalg;
pub mod scalar;
pub mod solver;
pub mod wmmse;

pub use error::{Error, Result};
pub use scalar::SimScalar;

/// Complex number over the working scalar.
pub type Cx<T> = num_complex::Complex<T>;
/// Dynamically sized complex matrix.
pub type CMatrix<T> = nalgebra::DMatrix<Cx<T>>;
/// Dynamically sized complex column vector.
pub type CVector<T> = nalgebra::DVector<Cx<T>>;
/// 3-D point in meters.
pub type Point3<T> = nalgebra::Point3<T>;

/// Default-precision aliases (f64 lane).
pub type Real = f64;
pub type CMat = CMatrix<Real>;
pub type CVec = CVector<Real>;

/// Single-precision aliases.
pub type CMat32 = CMatrix<f32>;
pub type CVec32 = CVector<f32>;

/// One of the two full-duplex nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeId {
    L,
    R,
}

impl NodeId {
    pub fn other(self) -> NodeId {
        match self {
            NodeId::L => NodeId::R,
            NodeId::R => NodeId::L,
        }
    }
}

/// One of the two reflecting surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IrsId {
    L,
    R,
}

impl IrsId {
    pub fn other(self) -> IrsId {
        match self {
            IrsId::L => IrsId::R,
            IrsId::R => IrsId::L,
        }
    }
}
