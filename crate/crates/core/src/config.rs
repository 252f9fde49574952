//! Scenario description and the flat `key = value` config format.

use crate::channel::ClusterParams;
use crate::error::{Error, Result};
use crate::scalar::{real, SimScalar};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Benchmark schemes: IRS-assisted full-duplex at three surface sizes, plus
/// massive-MIMO full-duplex and half-duplex references without surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    FdIrs10,
    FdIrs20,
    FdIrs30,
    Fd100x50,
    Hd100x50,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::FdIrs10,
        Scheme::FdIrs20,
        Scheme::FdIrs30,
        Scheme::Fd100x50,
        Scheme::Hd100x50,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FdIrs10 => "fd_irs_10",
            Scheme::FdIrs20 => "fd_irs_20",
            Scheme::FdIrs30 => "fd_irs_30",
            Scheme::Fd100x50 => "fd_100x50",
            Scheme::Hd100x50 => "hd_100x50",
        }
    }

    pub fn uses_irs(self) -> bool {
        matches!(self, Scheme::FdIrs10 | Scheme::FdIrs20 | Scheme::FdIrs30)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fd_irs_10" => Ok(Scheme::FdIrs10),
            "fd_irs_20" => Ok(Scheme::FdIrs20),
            "fd_irs_30" => Ok(Scheme::FdIrs30),
            "fd_100x50" => Ok(Scheme::Fd100x50),
            "hd_100x50" => Ok(Scheme::Hd100x50),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

/// Full scenario description. Defaults reproduce the reference setup:
/// 30 GHz carrier, 200 m node separation, 20x10 antennas with 2 streams,
/// 10x10 surfaces 3 m from their nodes, unit noise, 30 dB SNR.
#[derive(Debug, Clone)]
pub struct ScenarioConfig<T: SimScalar> {
    pub node_l_tx: usize,
    pub node_l_rx: usize,
    pub node_r_tx: usize,
    pub node_r_rx: usize,
    pub streams_l: usize,
    pub streams_r: usize,
    /// (rows, cols) of surface l.
    pub irs_l_dims: (usize, usize),
    /// (rows, cols) of surface r.
    pub irs_r_dims: (usize, usize),
    /// Transmit power budgets, linear scale.
    pub power_l: T,
    pub power_r: T,
    pub noise_var_l: T,
    pub noise_var_r: T,
    pub rate_weight_l: T,
    pub rate_weight_r: T,
    /// Carrier wavelength in meters.
    pub wavelength: T,
    pub inter_node_distance: T,
    pub irs_standoff: T,
    pub array_separation: T,
    /// Relative orientation of a node's tx/rx arrays, radians.
    pub array_relative_angle: T,
    pub cluster: ClusterParams<T>,
    /// Relative objective tolerance of the per-surface phase optimization.
    pub eps_inner: T,
    pub max_inner: usize,
    /// Relative WSR tolerance of the outer alternating loop.
    pub eps_outer: T,
    pub max_outer: usize,
    /// Include the surface-to-surface double-reflection terms.
    pub double_reflection: bool,
    pub master_seed: u64,
    pub n_trials: usize,
    /// Operating SNR (dB) used where a sweep does not provide one.
    pub snr_db: f64,
    pub snr_grid_db: Vec<f64>,
    pub distance_grid_m: Vec<f64>,
    pub schemes: Vec<Scheme>,
}

impl<T: SimScalar> Default for ScenarioConfig<T> {
    fn default() -> Self {
        let snr_db = 30.0;
        let power = real::<T>(10f64.powf(snr_db / 10.0));
        ScenarioConfig {
            node_l_tx: 20,
            node_l_rx: 10,
            node_r_tx: 20,
            node_r_rx: 10,
            streams_l: 2,
            streams_r: 2,
            irs_l_dims: (10, 10),
            irs_r_dims: (10, 10),
            power_l: power,
            power_r: power,
            noise_var_l: T::one(),
            noise_var_r: T::one(),
            rate_weight_l: T::one(),
            rate_weight_r: T::one(),
            wavelength: real(0.01),
            inter_node_distance: real(200.0),
            irs_standoff: real(3.0),
            array_separation: real(0.2),
            array_relative_angle: T::pi(),
            cluster: ClusterParams::default(),
            eps_inner: real(1e-4),
            max_inner: 50,
            eps_outer: real(1e-4),
            max_outer: 100,
            double_reflection: true,
            master_seed: 1,
            n_trials: 100,
            snr_db,
            snr_grid_db: vec![0.0, 10.0, 20.0, 30.0, 40.0],
            distance_grid_m: vec![3.0, 10.0, 20.0, 40.0, 60.0, 90.0],
            schemes: Scheme::ALL.to_vec(),
        }
    }
}

impl<T: SimScalar> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("tx_antennas_l", self.node_l_tx),
            ("rx_antennas_l", self.node_l_rx),
            ("tx_antennas_r", self.node_r_tx),
            ("rx_antennas_r", self.node_r_rx),
            ("streams_l", self.streams_l),
            ("streams_r", self.streams_r),
            ("irs_l_rows", self.irs_l_dims.0),
            ("irs_l_cols", self.irs_l_dims.1),
            ("irs_r_rows", self.irs_r_dims.0),
            ("irs_r_cols", self.irs_r_dims.1),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.streams_l > self.node_l_tx.min(self.node_r_rx) {
            return Err(Error::InvalidConfig(
                "streams_l cannot exceed tx_antennas_l or rx_antennas_r".into(),
            ));
        }
        if self.streams_r > self.node_r_tx.min(self.node_l_rx) {
            return Err(Error::InvalidConfig(
                "streams_r cannot exceed tx_antennas_r or rx_antennas_l".into(),
            ));
        }
        let zero = T::zero();
        let positives = [
            ("wavelength", self.wavelength),
            ("inter_node_distance", self.inter_node_distance),
            ("irs_standoff", self.irs_standoff),
            ("array_separation", self.array_separation),
            ("power_l", self.power_l),
            ("power_r", self.power_r),
            ("noise_var_l", self.noise_var_l),
            ("noise_var_r", self.noise_var_r),
        ];
        for (name, v) in positives {
            if v <= zero {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.rate_weight_l < zero || self.rate_weight_r < zero {
            return Err(Error::InvalidConfig("rate weights must be >= 0".into()));
        }
        self.cluster.validate()?;
        Ok(())
    }

    /// Set both powers so that power / noise variance equals the given SNR.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        let lin = real::<T>(10f64.powf(snr_db / 10.0));
        self.power_l = self.noise_var_l * lin;
        self.power_r = self.noise_var_r * lin;
        self.snr_db = snr_db;
        self
    }

    pub fn with_irs_standoff(mut self, meters: f64) -> Self {
        self.irs_standoff = real(meters);
        self
    }

    /// Specialize the scenario for a benchmark scheme.
    ///
    /// IRS-assisted schemes keep the configured antenna counts and set the
    /// square surface size; the massive-MIMO references switch to 100x50
    /// antennas per node and carry no surfaces (placeholder 1x1 grids keep
    /// the geometry valid; the reference solvers never touch them).
    pub fn scheme_variant(&self, scheme: Scheme) -> Self {
        let mut c = self.clone();
        match scheme {
            Scheme::FdIrs10 => {
                c.irs_l_dims = (10, 10);
                c.irs_r_dims = (10, 10);
            }
            Scheme::FdIrs20 => {
                c.irs_l_dims = (20, 20);
                c.irs_r_dims = (20, 20);
            }
            Scheme::FdIrs30 => {
                c.irs_l_dims = (30, 30);
                c.irs_r_dims = (30, 30);
            }
            Scheme::Fd100x50 | Scheme::Hd100x50 => {
                c.node_l_tx = 100;
                c.node_r_tx = 100;
                c.node_l_rx = 50;
                c.node_r_rx = 50;
                c.irs_l_dims = (1, 1);
                c.irs_r_dims = (1, 1);
            }
        }
        c
    }
}

fn parse_value<V: FromStr>(key: &str, value: &str, line: usize) -> Result<V> {
    value.trim().parse::<V>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid value `{}` for key `{key}`", value.trim()),
    })
}

fn parse_list<V: FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<V>> {
    value
        .split(',')
        .map(|item| parse_value::<V>(key, item, line))
        .collect()
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "on" => Ok(true),
        "false" | "0" | "off" => Ok(false),
        other => Err(Error::Parse {
            line,
            message: format!("invalid value `{other}` for key `{key}` (expected true/false)"),
        }),
    }
}

/// Parse the flat UTF-8 config format: one `key = value` per line,
/// `#` starts a comment, unknown keys are errors. Every key has a default,
/// so an empty file yields the reference scenario.
pub fn parse_config<T: SimScalar>(text: &str) -> Result<ScenarioConfig<T>> {
    let mut c = ScenarioConfig::<T>::default();
    let mut power_l_set = false;
    let mut power_r_set = false;
    let mut snr_set = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(Error::Parse {
                line,
                message: format!("expected `key = value`, found `{stripped}`"),
            });
        };
        let key = key.trim();
        match key {
            "tx_antennas_l" => c.node_l_tx = parse_value(key, value, line)?,
            "rx_antennas_l" => c.node_l_rx = parse_value(key, value, line)?,
            "tx_antennas_r" => c.node_r_tx = parse_value(key, value, line)?,
            "rx_antennas_r" => c.node_r_rx = parse_value(key, value, line)?,
            "streams_l" => c.streams_l = parse_value(key, value, line)?,
            "streams_r" => c.streams_r = parse_value(key, value, line)?,
            "irs_l_rows" => c.irs_l_dims.0 = parse_value(key, value, line)?,
            "irs_l_cols" => c.irs_l_dims.1 = parse_value(key, value, line)?,
            "irs_r_rows" => c.irs_r_dims.0 = parse_value(key, value, line)?,
            "irs_r_cols" => c.irs_r_dims.1 = parse_value(key, value, line)?,
            "power_l" => {
                c.power_l = real(parse_value::<f64>(key, value, line)?);
                power_l_set = true;
            }
            "power_r" => {
                c.power_r = real(parse_value::<f64>(key, value, line)?);
                power_r_set = true;
            }
            "noise_var_l" => c.noise_var_l = real(parse_value::<f64>(key, value, line)?),
            "noise_var_r" => c.noise_var_r = real(parse_value::<f64>(key, value, line)?),
            "rate_weight_l" => c.rate_weight_l = real(parse_value::<f64>(key, value, line)?),
            "rate_weight_r" => c.rate_weight_r = real(parse_value::<f64>(key, value, line)?),
            "wavelength" => c.wavelength = real(parse_value::<f64>(key, value, line)?),
            "inter_node_distance" => {
                c.inter_node_distance = real(parse_value::<f64>(key, value, line)?)
            }
            "irs_standoff" => c.irs_standoff = real(parse_value::<f64>(key, value, line)?),
            "array_separation" => c.array_separation = real(parse_value::<f64>(key, value, line)?),
            "array_relative_angle_deg" => {
                c.array_relative_angle = real(parse_value::<f64>(key, value, line)?.to_radians());
            }
            "clusters" => c.cluster.n_clusters = parse_value(key, value, line)?,
            "rays" => c.cluster.n_rays = parse_value(key, value, line)?,
            "angle_range_deg" => {
                c.cluster.angle_half_range =
                    real(parse_value::<f64>(key, value, line)?.to_radians());
            }
            "ray_jitter_deg" => {
                c.cluster.ray_jitter = real(parse_value::<f64>(key, value, line)?.to_radians());
            }
            "rician_kappa" => c.cluster.rician_kappa = real(parse_value::<f64>(key, value, line)?),
            "eps_inner" => c.eps_inner = real(parse_value::<f64>(key, value, line)?),
            "max_inner" => c.max_inner = parse_value(key, value, line)?,
            "eps_outer" => c.eps_outer = real(parse_value::<f64>(key, value, line)?),
            "max_outer" => c.max_outer = parse_value(key, value, line)?,
            "double_reflection" => c.double_reflection = parse_bool(key, value, line)?,
            "master_seed" => c.master_seed = parse_value(key, value, line)?,
            "n_trials" => c.n_trials = parse_value(key, value, line)?,
            "snr_db" => {
                c.snr_db = parse_value::<f64>(key, value, line)?;
                snr_set = true;
            }
            "snr_grid_db" => c.snr_grid_db = parse_list(key, value, line)?,
            "distance_grid_m" => c.distance_grid_m = parse_list(key, value, line)?,
            "schemes" => {
                c.schemes = value
                    .split(',')
                    .map(|item| {
                        item.trim()
                            .parse::<Scheme>()
                            .map_err(|e| Error::Parse { line, message: e })
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }

    // A specified SNR pins both budgets unless powers were set explicitly,
    // in which case they must agree with it.
    let lin = real::<T>(10f64.powf(c.snr_db / 10.0));
    if !power_l_set {
        c.power_l = c.noise_var_l * lin;
    }
    if !power_r_set {
        c.power_r = c.noise_var_r * lin;
    }
    if snr_set && (power_l_set || power_r_set) {
        let tol = real::<T>(1e-9);
        let bad_l = power_l_set && (c.power_l - c.noise_var_l * lin).abs() > tol * c.power_l.abs();
        let bad_r = power_r_set && (c.power_r - c.noise_var_r * lin).abs() > tol * c.power_r.abs();
        if bad_l || bad_r {
            return Err(Error::InvalidConfig(
                "explicit powers disagree with the specified snr_db".into(),
            ));
        }
    }
    c.validate()?;
    Ok(c)
}

/// Read and parse a config file.
pub fn load_config<T: SimScalar>(path: &Path) -> Result<ScenarioConfig<T>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
    parse_config(&text)
}
