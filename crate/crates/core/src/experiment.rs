//! Monte-Carlo sweep harness: seeded trials over SNR and surface-standoff
//! grids, scheme dispatch, and the CSV result format.
//!
//! Every trial seed mixes the master seed with the scheme name, both sweep
//! coordinates, and the trial index. A sweep point is therefore
//! reproducible in isolation, and the same (scheme, snr, distance, trial)
//! coordinate yields the same channels no matter which sweep visits it.

use crate::channel::build_channel_set;
use crate::config::{ScenarioConfig, Scheme};
use crate::error::{Error, Result};
use crate::geometry::build_geometry;
use crate::scalar::{mix_seed, name_tag, SimScalar};
use crate::solver::{solve_fd_irs, solve_fd_no_irs, solve_hd, SolveReport};
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

/// One CSV record. `trial >= 0` rows are individual trials; a `trial = -1`
/// row is the per-point aggregate (mean rate, rounded mean iterations,
/// converged only if every trial converged, seed 0).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub distance_m: f64,
    pub trial: i64,
    pub seed: u64,
    pub wsr_bits: f64,
    pub outer_iters: u64,
    pub converged: bool,
}

/// Ordered collection of result rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Mean rate of the aggregate row at a sweep point.
    pub fn mean_wsr(&self, scheme: Scheme, snr_db: f64, distance_m: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.trial == -1
                    && r.scheme == scheme
                    && r.snr_db == snr_db
                    && r.distance_m == distance_m
            })
            .map(|r| r.wsr_bits)
    }

    pub fn trial_rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.trial >= 0)
    }
}

pub const CSV_HEADER: &str = "scheme,snr_db,distance_m,trial,seed,wsr_bits,outer_iters,converged";

/// Derive the seed of one trial from its full coordinate.
pub fn trial_seed(master: u64, scheme: Scheme, snr_db: f64, distance_m: f64, trial: u64) -> u64 {
    mix_seed(
        master,
        &[
            name_tag(scheme.name()),
            snr_db.to_bits(),
            distance_m.to_bits(),
            trial,
        ],
    )
}

/// Run one seeded trial of a scheme at the given sweep coordinate.
pub fn run_trial<T: SimScalar>(
    base: &ScenarioConfig<T>,
    scheme: Scheme,
    snr_db: f64,
    distance_m: f64,
    trial: u64,
) -> Result<ResultRow> {
    let config = base
        .scheme_variant(scheme)
        .with_snr_db(snr_db)
        .with_irs_standoff(distance_m);
    let geometry = build_geometry(&config)?;
    let seed = trial_seed(base.master_seed, scheme, snr_db, distance_m, trial);
    let channels = build_channel_set(&geometry, &config.cluster, seed)?;
    let report: SolveReport<T> = match scheme {
        Scheme::FdIrs10 | Scheme::FdIrs20 | Scheme::FdIrs30 => solve_fd_irs(&channels, &config)?,
        Scheme::Fd100x50 => solve_fd_no_irs(&channels, &config)?,
        Scheme::Hd100x50 => solve_hd(&channels, &config)?,
    };
    Ok(ResultRow {
        scheme,
        snr_db,
        distance_m,
        trial: trial as i64,
        seed,
        wsr_bits: report.final_wsr.to_f64().unwrap_or(f64::NAN),
        outer_iters: report.outer_iterations as u64,
        converged: report.converged,
    })
}

fn aggregate(rows: &[ResultRow]) -> ResultRow {
    let n = rows.len().max(1) as f64;
    let mean_wsr = rows.iter().map(|r| r.wsr_bits).sum::<f64>() / n;
    let mean_iters = rows.iter().map(|r| r.outer_iters as f64).sum::<f64>() / n;
    ResultRow {
        scheme: rows[0].scheme,
        snr_db: rows[0].snr_db,
        distance_m: rows[0].distance_m,
        trial: -1,
        seed: 0,
        wsr_bits: mean_wsr,
        outer_iters: mean_iters.round() as u64,
        converged: rows.iter().all(|r| r.converged),
    }
}

fn run_points<T: SimScalar>(
    base: &ScenarioConfig<T>,
    points: &[(Scheme, f64, f64)],
    n_trials: usize,
) -> Result<ResultTable> {
    let mut rows = Vec::with_capacity(points.len() * (n_trials + 1));
    for &(scheme, snr_db, distance_m) in points {
        let mut trial_rows = (0..n_trials as u64)
            .into_par_iter()
            .map(|trial| run_trial(base, scheme, snr_db, distance_m, trial))
            .collect::<Result<Vec<_>>>()?;
        trial_rows.sort_by_key(|r| r.trial);
        let agg = aggregate(&trial_rows);
        eprintln!(
            "{} snr={snr_db} dB standoff={distance_m} m: mean wsr {:.3} bits/s/Hz over {n_trials} trials",
            scheme.name(),
            agg.wsr_bits
        );
        rows.extend(trial_rows);
        rows.push(agg);
    }
    Ok(ResultTable { rows })
}

/// Sweep the SNR grid for the requested schemes at the configured surface
/// standoff. Emits per-trial rows plus one aggregate row per point.
pub fn run_snr_sweep<T: SimScalar>(
    config: &ScenarioConfig<T>,
    snr_grid_db: &[f64],
    schemes: &[Scheme],
) -> Result<ResultTable> {
    if snr_grid_db.is_empty() {
        return Err(Error::InvalidConfig("empty SNR grid".into()));
    }
    if schemes.is_empty() {
        return Err(Error::InvalidConfig("empty scheme list".into()));
    }
    let standoff = config.irs_standoff.to_f64().unwrap_or(f64::NAN);
    let mut points = Vec::new();
    for &scheme in schemes {
        for &snr in snr_grid_db {
            if !snr.is_finite() {
                return Err(Error::InvalidConfig("non-finite SNR point".into()));
            }
            points.push((scheme, snr, standoff));
        }
    }
    run_points(config, &points, config.n_trials)
}

/// Sweep the surface standoff distance at the configured SNR for the
/// surface-bearing schemes in the config.
pub fn run_distance_sweep<T: SimScalar>(
    config: &ScenarioConfig<T>,
    distance_grid_m: &[f64],
) -> Result<ResultTable> {
    if distance_grid_m.is_empty() {
        return Err(Error::InvalidConfig("empty distance grid".into()));
    }
    let half_span = config.inter_node_distance.to_f64().unwrap_or(0.0) / 2.0;
    let schemes: Vec<Scheme> = config
        .schemes
        .iter()
        .copied()
        .filter(|s| s.uses_irs())
        .collect();
    if schemes.is_empty() {
        return Err(Error::InvalidConfig(
            "distance sweep needs at least one surface-bearing scheme".into(),
        ));
    }
    let mut points = Vec::new();
    for &scheme in &schemes {
        for &d in distance_grid_m {
            if !(d > 0.0 && d < half_span) {
                return Err(Error::InvalidConfig(format!(
                    "standoff {d} m outside (0, {half_span})"
                )));
            }
            points.push((scheme, config.snr_db, d));
        }
    }
    run_points(config, &points, config.n_trials)
}

/// Serialize a table in the stable CSV schema.
pub fn results_to_csv(table: &ResultTable) -> String {
    let mut out = String::with_capacity(64 * (table.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.scheme,
            r.snr_db,
            r.distance_m,
            r.trial,
            r.seed,
            r.wsr_bits,
            r.outer_iters,
            r.converged
        ));
    }
    out
}

/// Parse a table emitted by [`results_to_csv`].
pub fn results_from_csv(text: &str) -> Result<ResultTable> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let parse_err = |what: &str, v: &str| Error::Parse {
            line: line_no,
            message: format!("invalid {what} `{v}`"),
        };
        rows.push(ResultRow {
            scheme: fields[0].parse::<Scheme>().map_err(|e| Error::Parse {
                line: line_no,
                message: e,
            })?,
            snr_db: fields[1]
                .parse()
                .map_err(|_| parse_err("snr_db", fields[1]))?,
            distance_m: fields[2]
                .parse()
                .map_err(|_| parse_err("distance_m", fields[2]))?,
            trial: fields[3]
                .parse()
                .map_err(|_| parse_err("trial", fields[3]))?,
            seed: fields[4]
                .parse()
                .map_err(|_| parse_err("seed", fields[4]))?,
            wsr_bits: fields[5]
                .parse()
                .map_err(|_| parse_err("wsr_bits", fields[5]))?,
            outer_iters: fields[6]
                .parse()
                .map_err(|_| parse_err("outer_iters", fields[6]))?,
            converged: fields[7]
                .parse()
                .map_err(|_| parse_err("converged", fields[7]))?,
        });
    }
    Ok(ResultTable { rows })
}

/// Write a result table to disk.
pub fn emit_results(table: &ResultTable, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    file.write_all(results_to_csv(table).as_bytes())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Read a result table from disk.
pub fn load_results(path: &Path) -> Result<ResultTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    results_from_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ScenarioConfig<f64> {
        let mut c = ScenarioConfig::default();
        c.node_l_tx = 4;
        c.node_r_tx = 4;
        c.node_l_rx = 3;
        c.node_r_rx = 3;
        c.irs_l_dims = (2, 2);
        c.irs_r_dims = (2, 2);
        c.n_trials = 2;
        c.max_outer = 15;
        c
    }

    #[test]
    fn seed_depends_on_full_coordinate() {
        let s = trial_seed(1, Scheme::FdIrs10, 30.0, 3.0, 0);
        assert_eq!(s, trial_seed(1, Scheme::FdIrs10, 30.0, 3.0, 0));
        assert_ne!(s, trial_seed(1, Scheme::FdIrs10, 30.0, 3.0, 1));
        assert_ne!(s, trial_seed(1, Scheme::FdIrs10, 20.0, 3.0, 0));
        assert_ne!(s, trial_seed(1, Scheme::FdIrs10, 30.0, 4.0, 0));
        assert_ne!(s, trial_seed(1, Scheme::FdIrs20, 30.0, 3.0, 0));
        assert_ne!(s, trial_seed(2, Scheme::FdIrs10, 30.0, 3.0, 0));
    }

    #[test]
    fn csv_round_trip_preserves_rows() {
        let config = tiny_config();
        let table = run_snr_sweep(&config, &[10.0], &[Scheme::FdIrs10]).unwrap();
        let csv = results_to_csv(&table);
        let back = results_from_csv(&csv).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn row_count_is_grid_times_schemes_times_trials_plus_aggregates() {
        let config = tiny_config();
        let grid = [0.0, 10.0];
        let schemes = [Scheme::FdIrs10];
        let table = run_snr_sweep(&config, &grid, &schemes).unwrap();
        let expected = grid.len() * schemes.len() * config.n_trials + grid.len() * schemes.len();
        assert_eq!(table.rows.len(), expected);
        assert_eq!(table.trial_rows().count(), grid.len() * config.n_trials);
    }

    #[test]
    fn sweep_is_deterministic() {
        let config = tiny_config();
        let a = results_to_csv(&run_snr_sweep(&config, &[10.0], &[Scheme::FdIrs10]).unwrap());
        let b = results_to_csv(&run_snr_sweep(&config, &[10.0], &[Scheme::FdIrs10]).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn snr_and_distance_sweeps_agree_at_shared_coordinate() {
        let mut config = tiny_config();
        config.snr_db = 10.0;
        let snr_table = run_snr_sweep(&config, &[10.0], &[Scheme::FdIrs10]).unwrap();
        config.schemes = vec![Scheme::FdIrs10];
        let dist_table = run_distance_sweep(&config, &[3.0]).unwrap();
        let a = snr_table.mean_wsr(Scheme::FdIrs10, 10.0, 3.0).unwrap();
        let b = dist_table.mean_wsr(Scheme::FdIrs10, 10.0, 3.0).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn distance_sweep_rejects_out_of_range_points() {
        let config = tiny_config();
        assert!(run_distance_sweep(&config, &[150.0]).is_err());
        assert!(run_distance_sweep(&config, &[0.0]).is_err());
    }

    #[test]
    fn malformed_csv_reports_line() {
        let text = format!("{CSV_HEADER}\nfd_irs_10,10,3,0,1,nan_oops,5,true\n");
        let err = results_from_csv(&text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
