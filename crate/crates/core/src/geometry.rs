//! Element placement for the two node arrays and the two IRS grids, plus
//! the distance-derived quantities every channel model needs.
//!
//! Conventions: both node ULAs and both IRS grids step along +x in
//! half-wavelength increments. A node's receive array sits `array_separation`
//! further along +y than its transmit array, facing the opposite node. IRS
//! grids lie at the surface standoff distance on the link axis, rows along
//! +x and columns along +z, flattened row-major.

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::scalar::{real, unit_phasor, SimScalar};
use crate::{CVector, Point3};

/// An endpoint array: one of the four node-side ULAs or one of the grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    NodeLTx,
    NodeLRx,
    NodeRTx,
    NodeRRx,
    IrsL,
    IrsR,
}

/// One of the 14 modeled channels, named receiver-from-transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkId {
    /// Direct cross link, received at node l.
    LFromR,
    /// Direct cross link, received at node r.
    RFromL,
    /// Self-interference at node l.
    LFromL,
    /// Self-interference at node r.
    RFromR,
    IrsLFromL,
    LFromIrsL,
    IrsRFromR,
    RFromIrsR,
    IrsRFromL,
    LFromIrsR,
    IrsLFromR,
    RFromIrsL,
    IrsRFromIrsL,
    IrsLFromIrsR,
}

impl LinkId {
    pub const ALL: [LinkId; 14] = [
        LinkId::LFromR,
        LinkId::RFromL,
        LinkId::LFromL,
        LinkId::RFromR,
        LinkId::IrsLFromL,
        LinkId::LFromIrsL,
        LinkId::IrsRFromR,
        LinkId::RFromIrsR,
        LinkId::IrsRFromL,
        LinkId::LFromIrsR,
        LinkId::IrsLFromR,
        LinkId::RFromIrsL,
        LinkId::IrsRFromIrsL,
        LinkId::IrsLFromIrsR,
    ];

    /// Receiving terminal of the link.
    pub fn receiver(self) -> Terminal {
        match self {
            LinkId::LFromR | LinkId::LFromL | LinkId::LFromIrsL | LinkId::LFromIrsR => {
                Terminal::NodeLRx
            }
            LinkId::RFromL | LinkId::RFromR | LinkId::RFromIrsR | LinkId::RFromIrsL => {
                Terminal::NodeRRx
            }
            LinkId::IrsLFromL | LinkId::IrsLFromR | LinkId::IrsLFromIrsR => Terminal::IrsL,
            LinkId::IrsRFromR | LinkId::IrsRFromL | LinkId::IrsRFromIrsL => Terminal::IrsR,
        }
    }

    /// Transmitting terminal of the link.
    pub fn transmitter(self) -> Terminal {
        match self {
            LinkId::RFromL | LinkId::LFromL | LinkId::IrsLFromL | LinkId::IrsRFromL => {
                Terminal::NodeLTx
            }
            LinkId::LFromR | LinkId::RFromR | LinkId::IrsRFromR | LinkId::IrsLFromR => {
                Terminal::NodeRTx
            }
            LinkId::LFromIrsL | LinkId::RFromIrsL | LinkId::IrsRFromIrsL => Terminal::IrsL,
            LinkId::LFromIrsR | LinkId::RFromIrsR | LinkId::IrsLFromIrsR => Terminal::IrsR,
        }
    }

    /// The two cross links between the nodes.
    pub fn is_direct(self) -> bool {
        matches!(self, LinkId::LFromR | LinkId::RFromL)
    }

    /// The two self-interference links.
    pub fn is_self_interference(self) -> bool {
        matches!(self, LinkId::LFromL | LinkId::RFromR)
    }

    /// Links between a node and its own surface, modeled as deterministic
    /// near-field line-of-sight channels.
    pub fn is_near_field(self) -> bool {
        matches!(
            self,
            LinkId::IrsLFromL | LinkId::LFromIrsL | LinkId::IrsRFromR | LinkId::RFromIrsR
        )
    }

    /// Stable name, used in dump headers and seed derivation.
    pub fn name(self) -> &'static str {
        match self {
            LinkId::LFromR => "l_from_r",
            LinkId::RFromL => "r_from_l",
            LinkId::LFromL => "l_from_l",
            LinkId::RFromR => "r_from_r",
            LinkId::IrsLFromL => "irs_l_from_l",
            LinkId::LFromIrsL => "l_from_irs_l",
            LinkId::IrsRFromR => "irs_r_from_r",
            LinkId::RFromIrsR => "r_from_irs_r",
            LinkId::IrsRFromL => "irs_r_from_l",
            LinkId::LFromIrsR => "l_from_irs_r",
            LinkId::IrsLFromR => "irs_l_from_r",
            LinkId::RFromIrsL => "r_from_irs_l",
            LinkId::IrsRFromIrsL => "irs_r_from_irs_l",
            LinkId::IrsLFromIrsR => "irs_l_from_irs_r",
        }
    }
}

/// Element positions of every terminal plus the scenario distances.
#[derive(Debug, Clone)]
pub struct LinkGeometry<T: SimScalar> {
    pub node_l_tx_positions: Vec<Point3<T>>,
    pub node_l_rx_positions: Vec<Point3<T>>,
    pub node_r_tx_positions: Vec<Point3<T>>,
    pub node_r_rx_positions: Vec<Point3<T>>,
    /// Row-major over the grid of IRS l.
    pub irs_l_positions: Vec<Point3<T>>,
    /// Row-major over the grid of IRS r.
    pub irs_r_positions: Vec<Point3<T>>,
    pub wavelength: T,
    pub inter_node_distance: T,
    pub irs_standoff: T,
    pub array_separation: T,
    pub array_relative_angle: T,
}

impl<T: SimScalar> LinkGeometry<T> {
    pub fn positions(&self, terminal: Terminal) -> &[Point3<T>] {
        match terminal {
            Terminal::NodeLTx => &self.node_l_tx_positions,
            Terminal::NodeLRx => &self.node_l_rx_positions,
            Terminal::NodeRTx => &self.node_r_tx_positions,
            Terminal::NodeRRx => &self.node_r_rx_positions,
            Terminal::IrsL => &self.irs_l_positions,
            Terminal::IrsR => &self.irs_r_positions,
        }
    }

    /// Geometric center of a terminal's elements.
    pub fn center(&self, terminal: Terminal) -> Point3<T> {
        let pts = self.positions(terminal);
        let n = real::<T>(pts.len() as f64);
        let mut acc = nalgebra::Vector3::zeros();
        for p in pts {
            acc += p.coords;
        }
        Point3::from(acc / n)
    }

    /// Center-to-center distance of the link's endpoint arrays.
    ///
    /// The two direct cross links use the nominal node separation by
    /// definition: it is the reference every scale factor is measured
    /// against, so its own factor is exactly one.
    pub fn center_distance(&self, link: LinkId) -> T {
        if link.is_direct() {
            return self.inter_node_distance;
        }
        let rx = self.center(link.receiver());
        let tx = self.center(link.transmitter());
        (rx - tx).norm()
    }

    /// Distance-dependent amplitude scale of a link: reference distance
    /// over the link's own center distance (>= 1 for every modeled link).
    pub fn beta(&self, link: LinkId) -> T {
        self.inter_node_distance / self.center_distance(link)
    }
}

fn ula_positions<T: SimScalar>(anchor: Point3<T>, n: usize, step: T) -> Vec<Point3<T>> {
    (0..n)
        .map(|k| {
            let mut p = anchor;
            p.coords.x += step * real(k as f64);
            p
        })
        .collect()
}

fn grid_positions<T: SimScalar>(
    anchor: Point3<T>,
    rows: usize,
    cols: usize,
    step: T,
) -> Vec<Point3<T>> {
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut p = anchor;
            p.coords.x += step * real(c as f64);
            p.coords.z += step * real(r as f64);
            out.push(p);
        }
    }
    out
}

/// Place every element of the scenario and validate the distances.
pub fn build_geometry<T: SimScalar>(config: &ScenarioConfig<T>) -> Result<LinkGeometry<T>> {
    config.validate()?;
    let half = config.wavelength / real(2.0);
    let zero = T::zero();
    let d_lr = config.inter_node_distance;
    let d_irs = config.irs_standoff;
    let d_b = config.array_separation;

    if d_irs >= d_lr / real(2.0) {
        return Err(Error::InvalidConfig(format!(
            "irs_standoff {:?} must be below half the inter-node distance {:?}",
            d_irs.to_f64(),
            d_lr.to_f64()
        )));
    }
    if d_b >= d_lr / real(2.0) {
        return Err(Error::InvalidConfig(
            "array_separation must be below half the inter-node distance".into(),
        ));
    }

    let geometry = LinkGeometry {
        node_l_tx_positions: ula_positions(Point3::new(zero, zero, zero), config.node_l_tx, half),
        node_l_rx_positions: ula_positions(Point3::new(zero, d_b, zero), config.node_l_rx, half),
        node_r_tx_positions: ula_positions(Point3::new(zero, d_lr, zero), config.node_r_tx, half),
        node_r_rx_positions: ula_positions(
            Point3::new(zero, d_lr - d_b, zero),
            config.node_r_rx,
            half,
        ),
        irs_l_positions: grid_positions(
            Point3::new(zero, d_irs, zero),
            config.irs_l_dims.0,
            config.irs_l_dims.1,
            half,
        ),
        irs_r_positions: grid_positions(
            Point3::new(zero, d_lr - d_irs, zero),
            config.irs_r_dims.0,
            config.irs_r_dims.1,
            half,
        ),
        wavelength: config.wavelength,
        inter_node_distance: d_lr,
        irs_standoff: d_irs,
        array_separation: d_b,
        array_relative_angle: config.array_relative_angle,
    };

    // Every modeled link must stay within the reference distance so each
    // scale factor is >= 1.
    for link in LinkId::ALL {
        let d = geometry.center_distance(link);
        if d <= T::zero() {
            return Err(Error::DegenerateGeometry(format!(
                "link {} has non-positive center distance",
                link.name()
            )));
        }
        if d > d_lr * real(1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "link {} spans {:?} m, beyond the reference distance",
                link.name(),
                d.to_f64()
            )));
        }
    }
    Ok(geometry)
}

/// ULA response for a plane wave at the given angle: entry k has unit
/// magnitude and phase -2*pi*spacing_over_wavelength*k*sin(angle).
pub fn steering_vector<T: SimScalar>(
    angle: T,
    n_elements: usize,
    spacing_over_wavelength: T,
) -> CVector<T> {
    let rate = -T::two_pi() * spacing_over_wavelength * angle.sin();
    CVector::from_fn(n_elements, |k, _| unit_phasor(rate * real(k as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn iv_config() -> ScenarioConfig<f64> {
        ScenarioConfig::default()
    }

    #[test]
    fn anchors_match_scenario_defaults() {
        // lambda = 10 mm, 200 m separation, 3 m standoff, 20x10 antennas,
        // 10x10 surfaces.
        let g = build_geometry(&iv_config()).unwrap();
        assert_eq!(g.node_l_tx_positions[0], Point3::new(0.0, 0.0, 0.0));
        assert_eq!(g.irs_l_positions[0], Point3::new(0.0, 3.0, 0.0));
        assert_eq!(g.node_r_tx_positions[0], Point3::new(0.0, 200.0, 0.0));
        assert_eq!(g.irs_r_positions[0], Point3::new(0.0, 197.0, 0.0));
        assert_eq!(g.node_l_rx_positions[0], Point3::new(0.0, 0.2, 0.0));
        assert_eq!(g.node_r_rx_positions[0], Point3::new(0.0, 199.8, 0.0));
    }

    #[test]
    fn ula_spacing_is_half_wavelength() {
        let g = build_geometry(&iv_config()).unwrap();
        let tx = &g.node_l_tx_positions;
        // 4-element slice: element k at x = k * 5 mm, pairwise gaps 5/10/15 mm.
        for k in 0..4 {
            assert!((tx[k].x - 0.005 * k as f64).abs() < 1e-15);
        }
        let mut gaps = Vec::new();
        for a in 0..4 {
            for b in (a + 1)..4 {
                gaps.push((tx[b] - tx[a]).norm());
            }
        }
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        gaps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(gaps.len(), 3);
        for (g, want) in gaps.iter().zip([0.005, 0.010, 0.015]) {
            assert!((g - want).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_single_element_arrays() {
        let mut c = iv_config();
        c.node_l_tx = 1;
        c.node_l_rx = 1;
        c.node_r_tx = 1;
        c.node_r_rx = 1;
        c.streams_l = 1;
        c.streams_r = 1;
        c.irs_l_dims = (1, 1);
        c.irs_r_dims = (1, 1);
        let g = build_geometry(&c).unwrap();
        for link in LinkId::ALL {
            assert!(g.center_distance(link) > 0.0);
        }
        // Node l side: tx at origin, rx 0.2 m away, surface 3 m away.
        assert!((g.center_distance(LinkId::LFromL) - 0.2).abs() < 1e-12);
        assert!((g.center_distance(LinkId::IrsLFromL) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn direct_link_scale_factor_is_one() {
        let g = build_geometry(&iv_config()).unwrap();
        assert_eq!(g.beta(LinkId::LFromR), 1.0);
        assert_eq!(g.beta(LinkId::RFromL), 1.0);
    }

    #[test]
    fn near_field_scale_factor_matches_standoff() {
        let g = build_geometry(&iv_config()).unwrap();
        let beta = g.beta(LinkId::IrsLFromL);
        // 200 m / ~3 m, up to the small in-plane center offsets.
        assert!((beta - 200.0 / 3.0).abs() / (200.0 / 3.0) < 1e-3, "{beta}");
        assert!(beta <= 200.0 / 3.0);
    }

    #[test]
    fn all_scale_factors_at_least_one() {
        let g = build_geometry(&iv_config()).unwrap();
        for link in LinkId::ALL {
            assert!(g.beta(link) >= 1.0, "{}", link.name());
        }
    }

    #[test]
    fn rejects_surface_crossing_mid_link() {
        let mut c = iv_config();
        c.irs_standoff = 100.0;
        assert!(matches!(
            build_geometry(&c),
            Err(crate::Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn beta_is_scale_invariant() {
        let g1 = build_geometry(&iv_config()).unwrap();
        let mut c = iv_config();
        let factor = 3.7;
        c.wavelength *= factor;
        c.inter_node_distance *= factor;
        c.irs_standoff *= factor;
        c.array_separation *= factor;
        let g2 = build_geometry(&c).unwrap();
        for link in LinkId::ALL {
            let b1 = g1.beta(link);
            let b2 = g2.beta(link);
            assert!((b1 - b2).abs() < 1e-9 * b1, "{}: {b1} vs {b2}", link.name());
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let g1 = build_geometry(&iv_config()).unwrap();
        let g2 = build_geometry(&iv_config()).unwrap();
        assert_eq!(g1.irs_r_positions, g2.irs_r_positions);
        assert_eq!(g1.node_r_rx_positions, g2.node_r_rx_positions);
    }

    #[test]
    fn steering_vector_broadside_is_all_ones() {
        let v = steering_vector(0.0_f64, 6, 0.5);
        for z in v.iter() {
            assert!((z - num_complex::Complex::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn steering_vector_phase_closed_form() {
        // angle pi/6, half-wavelength spacing: -2*pi*(1/2)*k*sin(pi/6)
        // evaluates to -pi*k/2.
        let v = steering_vector(std::f64::consts::FRAC_PI_6, 4, 0.5);
        for (k, z) in v.iter().enumerate() {
            let want = -std::f64::consts::PI * k as f64 / 2.0;
            let diff = (z.arg() - want).rem_euclid(2.0 * std::f64::consts::PI);
            assert!(diff < 1e-12 || diff > 2.0 * std::f64::consts::PI - 1e-12);
        }
    }

    #[test]
    fn steering_vector_entries_unit_magnitude() {
        for seed in 0..20 {
            let angle = -0.6 + 0.07 * seed as f64;
            let v = steering_vector(angle, 9, 0.5);
            for z in v.iter() {
                assert!((z.norm() - 1.0).abs() < 1e-14);
            }
        }
    }
}
