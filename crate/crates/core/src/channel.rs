//! Sampling of the 14 link channels.
//!
//! Three channel families: clustered far-field fading for everything that
//! propagates over a long range, Rician mixtures for the self-interference
//! loops, and deterministic spherical-wavefront line-of-sight matrices for
//! the short node-to-own-surface hops where planar steering vectors stop
//! being valid.

use crate::error::{Error, Result};
use crate::geometry::{steering_vector, LinkGeometry, LinkId};
use crate::scalar::{complex_gaussian, mix_seed, name_tag, real, unit_phasor, SimScalar};
use crate::{CMatrix, Cx, NodeId, Point3};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::io::{BufRead, Write};

/// Cluster/ray statistics of the far-field model plus the Rician factor of
/// the self-interference loops.
#[derive(Debug, Clone)]
pub struct ClusterParams<T: SimScalar> {
    pub n_clusters: usize,
    pub n_rays: usize,
    /// Cluster angles are uniform on [-angle_half_range, angle_half_range].
    pub angle_half_range: T,
    /// Per-ray angular jitter around the cluster angle.
    pub ray_jitter: T,
    pub rician_kappa: T,
}

impl<T: SimScalar> Default for ClusterParams<T> {
    fn default() -> Self {
        ClusterParams {
            n_clusters: 3,
            n_rays: 3,
            angle_half_range: real(30f64.to_radians()),
            ray_jitter: real(2f64.to_radians()),
            rician_kappa: T::one(),
        }
    }
}

impl<T: SimScalar> ClusterParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.n_rays == 0 {
            return Err(Error::InvalidConfig(
                "cluster and ray counts must be at least 1".into(),
            ));
        }
        if self.rician_kappa < T::zero() {
            return Err(Error::InvalidConfig("rician_kappa must be >= 0".into()));
        }
        if self.angle_half_range < T::zero() || self.ray_jitter < T::zero() {
            return Err(Error::InvalidConfig("angle ranges must be >= 0".into()));
        }
        Ok(())
    }
}

/// One propagation path of the far-field model.
#[derive(Debug, Clone, Copy)]
pub struct FfPath<T: SimScalar> {
    pub gain: Cx<T>,
    pub aoa: T,
    pub aod: T,
}

/// Deterministic assembly of a far-field channel from explicit paths.
///
/// `path_norm` is the nominal cluster*ray count the amplitude is normalized
/// by; with unit-variance path gains the mean squared Frobenius norm comes
/// out as `beta * rows * cols`.
pub fn ff_channel_from_paths<T: SimScalar>(
    rows: usize,
    cols: usize,
    beta: T,
    path_norm: usize,
    paths: &[FfPath<T>],
) -> CMatrix<T> {
    let mut h = CMatrix::<T>::zeros(rows, cols);
    let half = real::<T>(0.5);
    for path in paths {
        let rx = steering_vector(path.aoa, rows, half);
        let tx = steering_vector(path.aod, cols, half);
        h.ger(path.gain, &rx, &tx, Complex::new(T::one(), T::zero()));
    }
    // Unit-magnitude steering entries carry rows*cols energy per path; the
    // normalization keeps the moment at beta*rows*cols.
    let scale = (beta / real(path_norm as f64)).sqrt();
    h * Complex::new(scale, T::zero())
}

/// Draw one clustered far-field channel.
pub fn sample_ff_channel<T: SimScalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    beta: T,
    params: &ClusterParams<T>,
    rng: &mut R,
) -> CMatrix<T> {
    let mut paths = Vec::with_capacity(params.n_clusters * params.n_rays);
    let range = params.angle_half_range;
    let jitter = params.ray_jitter;
    for _ in 0..params.n_clusters {
        let aoa_cluster = T::uniform_in(rng, -range, range);
        let aod_cluster = T::uniform_in(rng, -range, range);
        for _ in 0..params.n_rays {
            let aoa = aoa_cluster + T::uniform_in(rng, -jitter, jitter);
            let aod = aod_cluster + T::uniform_in(rng, -jitter, jitter);
            paths.push(FfPath {
                gain: complex_gaussian(rng),
                aoa,
                aod,
            });
        }
    }
    ff_channel_from_paths(rows, cols, beta, params.n_clusters * params.n_rays, &paths)
}

/// Deterministic spherical-wavefront line-of-sight channel.
///
/// Entry (m, n) is rho/d_mn * exp(-i 2 pi d_mn / wavelength) with d_mn the
/// element-to-element distance; rho normalizes the squared Frobenius norm
/// to exactly rows*cols.
pub fn nf_los_channel<T: SimScalar>(
    rx_positions: &[Point3<T>],
    tx_positions: &[Point3<T>],
    wavelength: T,
) -> Result<CMatrix<T>> {
    let rows = rx_positions.len();
    let cols = tx_positions.len();
    if rows == 0 || cols == 0 {
        return Err(Error::DegenerateGeometry("empty element list".into()));
    }
    let tiny = wavelength * real(1e-12);
    let mut h = CMatrix::<T>::zeros(rows, cols);
    let mut inv_sq_sum = T::zero();
    let k = -T::two_pi() / wavelength;
    for n in 0..cols {
        for m in 0..rows {
            let d = (rx_positions[m] - tx_positions[n]).norm();
            if d <= tiny {
                return Err(Error::DegenerateGeometry(format!(
                    "rx element {m} coincides with tx element {n}"
                )));
            }
            let amp = T::one() / d;
            inv_sq_sum += amp * amp;
            h[(m, n)] = unit_phasor(k * d) * Complex::new(amp, T::zero());
        }
    }
    let rho = (real::<T>((rows * cols) as f64) / inv_sq_sum).sqrt();
    Ok(h * Complex::new(rho, T::zero()))
}

/// Rician mixture of a line-of-sight part and a reflected part.
pub fn si_channel_from_parts<T: SimScalar>(
    h_los: &CMatrix<T>,
    h_reflected: &CMatrix<T>,
    kappa: T,
    beta: T,
) -> CMatrix<T> {
    let denom = kappa + T::one();
    let w_los = (kappa / denom).sqrt();
    let w_ref = (T::one() / denom).sqrt();
    let root_beta = beta.sqrt();
    h_los * Complex::new(root_beta * w_los, T::zero())
        + h_reflected * Complex::new(root_beta * w_ref, T::zero())
}

/// Draw the self-interference channel of one node: spherical-wavefront
/// line-of-sight plus clustered reflections, mixed by the Rician factor and
/// scaled by the loop's distance factor.
pub fn sample_si_channel<T: SimScalar, R: Rng + ?Sized>(
    geometry: &LinkGeometry<T>,
    node: NodeId,
    params: &ClusterParams<T>,
    rng: &mut R,
) -> Result<CMatrix<T>> {
    let link = match node {
        NodeId::L => LinkId::LFromL,
        NodeId::R => LinkId::RFromR,
    };
    let rx = geometry.positions(link.receiver());
    let tx = geometry.positions(link.transmitter());
    let h_los = nf_los_channel(rx, tx, geometry.wavelength)?;
    let h_ref = sample_ff_channel(rx.len(), tx.len(), T::one(), params, rng);
    Ok(si_channel_from_parts(
        &h_los,
        &h_ref,
        params.rician_kappa,
        geometry.beta(link),
    ))
}

/// The 14 channel matrices, each (receiver elements) x (transmitter
/// elements), named receiver-from-transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T: SimScalar> {
    pub l_from_r: CMatrix<T>,
    pub r_from_l: CMatrix<T>,
    pub l_from_l: CMatrix<T>,
    pub r_from_r: CMatrix<T>,
    pub irs_l_from_l: CMatrix<T>,
    pub l_from_irs_l: CMatrix<T>,
    pub irs_r_from_r: CMatrix<T>,
    pub r_from_irs_r: CMatrix<T>,
    pub irs_r_from_l: CMatrix<T>,
    pub l_from_irs_r: CMatrix<T>,
    pub irs_l_from_r: CMatrix<T>,
    pub r_from_irs_l: CMatrix<T>,
    pub irs_r_from_irs_l: CMatrix<T>,
    pub irs_l_from_irs_r: CMatrix<T>,
}

impl<T: SimScalar> ChannelSet<T> {
    pub fn get(&self, link: LinkId) -> &CMatrix<T> {
        match link {
            LinkId::LFromR => &self.l_from_r,
            LinkId::RFromL => &self.r_from_l,
            LinkId::LFromL => &self.l_from_l,
            LinkId::RFromR => &self.r_from_r,
            LinkId::IrsLFromL => &self.irs_l_from_l,
            LinkId::LFromIrsL => &self.l_from_irs_l,
            LinkId::IrsRFromR => &self.irs_r_from_r,
            LinkId::RFromIrsR => &self.r_from_irs_r,
            LinkId::IrsRFromL => &self.irs_r_from_l,
            LinkId::LFromIrsR => &self.l_from_irs_r,
            LinkId::IrsLFromR => &self.irs_l_from_r,
            LinkId::RFromIrsL => &self.r_from_irs_l,
            LinkId::IrsRFromIrsL => &self.irs_r_from_irs_l,
            LinkId::IrsLFromIrsR => &self.irs_l_from_irs_r,
        }
    }

    pub fn get_mut(&mut self, link: LinkId) -> &mut CMatrix<T> {
        match link {
            LinkId::LFromR => &mut self.l_from_r,
            LinkId::RFromL => &mut self.r_from_l,
            LinkId::LFromL => &mut self.l_from_l,
            LinkId::RFromR => &mut self.r_from_r,
            LinkId::IrsLFromL => &mut self.irs_l_from_l,
            LinkId::LFromIrsL => &mut self.l_from_irs_l,
            LinkId::IrsRFromR => &mut self.irs_r_from_r,
            LinkId::RFromIrsR => &mut self.r_from_irs_r,
            LinkId::IrsRFromL => &mut self.irs_r_from_l,
            LinkId::LFromIrsR => &mut self.l_from_irs_r,
            LinkId::IrsLFromR => &mut self.irs_l_from_r,
            LinkId::RFromIrsL => &mut self.r_from_irs_l,
            LinkId::IrsRFromIrsL => &mut self.irs_r_from_irs_l,
            LinkId::IrsLFromIrsR => &mut self.irs_l_from_irs_r,
        }
    }

    /// Zero every channel that touches a surface, keeping the direct and
    /// self-interference links. Useful for surface-removal ablations.
    pub fn zero_irs_links(&mut self) {
        for link in LinkId::ALL {
            if !link.is_direct() && !link.is_self_interference() {
                let m = self.get_mut(link);
                *m = CMatrix::zeros(m.nrows(), m.ncols());
            }
        }
    }
}

/// Sample all 14 channels from deterministic per-link sub-streams of the
/// given seed. Adding or removing links never perturbs the other draws, and
/// the surface-to-surface pair is reciprocal by construction.
pub fn build_channel_set<T: SimScalar>(
    geometry: &LinkGeometry<T>,
    params: &ClusterParams<T>,
    seed: u64,
) -> Result<ChannelSet<T>> {
    params.validate()?;
    let rng_for = |link: LinkId| {
        ChaCha12Rng::seed_from_u64(mix_seed(
            seed,
            &[name_tag("channel"), name_tag(link.name())],
        ))
    };
    let lambda = geometry.wavelength;
    let ff = |link: LinkId, rng: &mut ChaCha12Rng| {
        let rows = geometry.positions(link.receiver()).len();
        let cols = geometry.positions(link.transmitter()).len();
        sample_ff_channel(rows, cols, geometry.beta(link), params, rng)
    };

    // Every channel carries its distance scale factor; for the
    // deterministic near-field links it multiplies the unit-moment
    // line-of-sight shape, same as inside the Rician loops.
    let nf = |link: LinkId| -> Result<CMatrix<T>> {
        let shape = nf_los_channel(
            geometry.positions(link.receiver()),
            geometry.positions(link.transmitter()),
            lambda,
        )?;
        let amp = geometry.beta(link).sqrt();
        Ok(shape * Complex::new(amp, T::zero()))
    };

    let irs_r_from_irs_l = ff(LinkId::IrsRFromIrsL, &mut rng_for(LinkId::IrsRFromIrsL));
    let irs_l_from_irs_r = irs_r_from_irs_l.transpose();

    Ok(ChannelSet {
        l_from_r: ff(LinkId::LFromR, &mut rng_for(LinkId::LFromR)),
        r_from_l: ff(LinkId::RFromL, &mut rng_for(LinkId::RFromL)),
        l_from_l: sample_si_channel(geometry, NodeId::L, params, &mut rng_for(LinkId::LFromL))?,
        r_from_r: sample_si_channel(geometry, NodeId::R, params, &mut rng_for(LinkId::RFromR))?,
        irs_l_from_l: nf(LinkId::IrsLFromL)?,
        l_from_irs_l: nf(LinkId::LFromIrsL)?,
        irs_r_from_r: nf(LinkId::IrsRFromR)?,
        r_from_irs_r: nf(LinkId::RFromIrsR)?,
        irs_r_from_l: ff(LinkId::IrsRFromL, &mut rng_for(LinkId::IrsRFromL)),
        l_from_irs_r: ff(LinkId::LFromIrsR, &mut rng_for(LinkId::LFromIrsR)),
        irs_l_from_r: ff(LinkId::IrsLFromR, &mut rng_for(LinkId::IrsLFromR)),
        r_from_irs_l: ff(LinkId::RFromIrsL, &mut rng_for(LinkId::RFromIrsL)),
        irs_r_from_irs_l,
        irs_l_from_irs_r,
    })
}

/// Write every channel as a text block: a header line `<link> <rows> <cols>`
/// followed by row-major lines of interleaved real/imag pairs.
pub fn write_channel_dump<T: SimScalar, W: Write>(set: &ChannelSet<T>, out: &mut W) -> Result<()> {
    let ctx = "writing channel dump";
    for link in LinkId::ALL {
        let m = set.get(link);
        writeln!(out, "{} {} {}", link.name(), m.nrows(), m.ncols())
            .map_err(|e| Error::io(ctx, e))?;
        for r in 0..m.nrows() {
            let mut line = String::new();
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                if c > 0 {
                    line.push(' ');
                }
                let re = z.re.to_f64().unwrap_or(f64::NAN);
                let im = z.im.to_f64().unwrap_or(f64::NAN);
                line.push_str(&format!("{re} {im}"));
            }
            writeln!(out, "{line}").map_err(|e| Error::io(ctx, e))?;
        }
    }
    Ok(())
}

/// Read a dump produced by [`write_channel_dump`].
pub fn read_channel_dump<T: SimScalar, R: BufRead>(input: R) -> Result<ChannelSet<T>> {
    let mut blocks: Vec<(String, CMatrix<T>)> = Vec::new();
    let mut lines = input.lines().enumerate();
    while let Some((idx, line)) = lines.next() {
        let line = line.map_err(|e| Error::io("reading channel dump", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let header_line = idx + 1;
        let mut parts = line.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| Error::Parse {
                line: header_line,
                message: "missing link name".into(),
            })?
            .to_string();
        let dims: Vec<usize> = parts
            .map(|p| {
                p.parse().map_err(|_| Error::Parse {
                    line: header_line,
                    message: format!("bad dimension `{p}`"),
                })
            })
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: header_line,
                message: "expected `<link> <rows> <cols>`".into(),
            });
        }
        let (rows, cols) = (dims[0], dims[1]);
        let mut m = CMatrix::<T>::zeros(rows, cols);
        for r in 0..rows {
            let (idx, row) = lines.next().ok_or_else(|| Error::Parse {
                line: header_line,
                message: format!("truncated block for `{name}`"),
            })?;
            let row = row.map_err(|e| Error::io("reading channel dump", e))?;
            let values: Vec<f64> = row
                .split_whitespace()
                .map(|v| {
                    v.parse().map_err(|_| Error::Parse {
                        line: idx + 1,
                        message: format!("bad value `{v}`"),
                    })
                })
                .collect::<Result<_>>()?;
            if values.len() != 2 * cols {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!(
                        "expected {} values for `{name}`, found {}",
                        2 * cols,
                        values.len()
                    ),
                });
            }
            for c in 0..cols {
                m[(r, c)] = Complex::new(real(values[2 * c]), real(values[2 * c + 1]));
            }
        }
        blocks.push((name, m));
    }

    let mut take = |wanted: &str| -> Result<CMatrix<T>> {
        blocks
            .iter()
            .position(|(n, _)| n == wanted)
            .map(|i| blocks.remove(i).1)
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("dump is missing link `{wanted}`"),
            })
    };

    Ok(ChannelSet {
        l_from_r: take("l_from_r")?,
        r_from_l: take("r_from_l")?,
        l_from_l: take("l_from_l")?,
        r_from_r: take("r_from_r")?,
        irs_l_from_l: take("irs_l_from_l")?,
        l_from_irs_l: take("l_from_irs_l")?,
        irs_r_from_r: take("irs_r_from_r")?,
        r_from_irs_r: take("r_from_irs_r")?,
        irs_r_from_l: take("irs_r_from_l")?,
        l_from_irs_r: take("l_from_irs_r")?,
        irs_l_from_r: take("irs_l_from_r")?,
        r_from_irs_l: take("r_from_irs_l")?,
        irs_r_from_irs_l: take("irs_r_from_irs_l")?,
        irs_l_from_irs_r: take("irs_l_from_irs_r")?,
    })
}
