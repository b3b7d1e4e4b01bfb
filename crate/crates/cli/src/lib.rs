//! Batch experiment runner for `leocap`.
//!
//! An [`ExperimentSpec`] is resolved from command defaults, an optional JSON
//! config and command-line overrides, in that order. [`run`] writes one CSV
//! with unit-bearing column names and a JSON sidecar holding the resolved spec,
//! which can be fed back through `--config` to reproduce the CSV exactly.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use leocap::assoc::optimize_shuffle;
use leocap::montecarlo::{run_planar_vs_spherical, run_reuse_experiment, PlanarDrop};
use leocap::regular::{beam_region_upper_bound, count_in_beam_region, RegularAnalysis, Truncation};
use leocap::{per_1000_km2, BeamPattern, EarthModel, FadingParams, FadingRegime, PatternKind, RngStream, Scenario};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical convergence error: {0}")]
    Convergence(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Convergence(_) => EXIT_CONVERGENCE,
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }
}

impl From<leocap::Error> for CliError {
    fn from(e: leocap::Error) -> Self {
        match e {
            leocap::Error::Convergence(msg) => CliError::Convergence(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    RegularSweep,
    RandomSweep,
    ShuffleCompare,
    PlanarVsSpherical,
    ReuseTable,
    BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub altitude_km: f64,
    pub alpha: f64,
    pub sat_beamwidth_deg: f64,
    pub gs_beamwidth_deg: f64,
    pub pattern: PatternKind,
    /// `psd_max h^{-α}/σ²`, or `P_max h^{-α}/(Bσ²)` when `power_limited`.
    pub snr_db: f64,
    pub power_limited: bool,
    /// `psd_max = factor · P_max / B` when power limited; `None` leaves the PSD unconstrained.
    pub psd_factor: Option<f64>,
    pub gamma_s_deg: f64,
    pub gamma_g_deg: f64,
    pub fading: FadingRegime,
    /// Replaces the bundled fading table.
    pub fading_file: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            altitude_km: 550.0,
            alpha: 2.5,
            sat_beamwidth_deg: 10.0,
            gs_beamwidth_deg: 20.0,
            pattern: PatternKind::Bessel,
            snr_db: 10.0,
            power_limited: false,
            psd_factor: None,
            gamma_s_deg: 90.0,
            gamma_g_deg: 90.0,
            fading: FadingRegime::None,
            fading_file: None,
        }
    }
}

impl ScenarioConfig {
    pub fn build(&self, spherical: bool) -> Result<Scenario> {
        let earth = if spherical {
            EarthModel::spherical(self.altitude_km)?
        } else {
            EarthModel::planar(self.altitude_km)?
        };
        let sat = BeamPattern::new(self.pattern, self.sat_beamwidth_deg.to_radians())?;
        let gs = BeamPattern::new(self.pattern, self.gs_beamwidth_deg.to_radians())?;
        let s = if self.power_limited {
            Scenario::power_limited(earth, self.alpha, sat, gs, self.snr_db, self.psd_factor)?
        } else {
            Scenario::from_serving_snr(earth, self.alpha, sat, gs, self.snr_db)?
        };
        Ok(s.with_beam_regions(self.gamma_s_deg.to_radians(), self.gamma_g_deg.to_radians())?)
    }

    pub fn fading_params(&self) -> Result<FadingParams> {
        Ok(match &self.fading_file {
            Some(p) => FadingParams::from_file(p, self.fading)?,
            None => FadingParams::bundled(self.fading)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub log: bool,
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !(self.lo > 0.0) || self.hi < self.lo || !self.hi.is_finite() {
            return Err(CliError::Config(format!(
                "grid needs 0 < lo ≤ hi and at least one point (got lo = {}, hi = {}, points = {})",
                self.lo, self.hi, self.points
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.lo]);
        }
        let t = |k: usize| k as f64 / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| {
                if self.log {
                    (self.lo.ln() + (self.hi / self.lo).ln() * t(k)).exp()
                } else {
                    self.lo + (self.hi - self.lo) * t(k)
                }
            })
            .collect())
    }
}

/// Either an explicit list of spacings or a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSweep {
    List(Vec<f64>),
    Grid(Grid),
}

impl DeltaSweep {
    fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            DeltaSweep::List(v) => v.clone(),
            DeltaSweep::Grid(g) => g.values()?,
        };
        if v.is_empty() || v.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(CliError::Config("sweep.deltas_km must be a non-empty list of positive spacings".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub deltas_km: DeltaSweep,
    pub subbands: Vec<u32>,
    /// Reuse-distance grid in units of `Δ`.
    pub reuse_grid: Grid,
    pub satellites: Vec<usize>,
    pub window_cols: usize,
    pub window_rows: usize,
    pub beams_per_satellite: usize,
    pub trials: usize,
    /// Exact-summation radius for shuffled associations, in units of `Δ`.
    pub shuffle_radius: f64,
    pub truncation: Truncation,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            deltas_km: DeltaSweep::Grid(Grid { lo: 5.0, hi: 500.0, points: 100, log: true }),
            subbands: vec![1],
            reuse_grid: Grid { lo: 0.5, hi: 6.0, points: 32, log: true },
            satellites: vec![50, 100, 200, 400],
            window_cols: 10,
            window_rows: 10,
            beams_per_satellite: 1,
            trials: 200,
            shuffle_radius: 40.0,
            truncation: Truncation::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
    pub stream: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { master: 2024, stream: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Command,
    pub scenario: ScenarioConfig,
    pub sweep: SweepConfig,
    pub seeds: Seeds,
    pub output: PathBuf,
}

impl ExperimentSpec {
    /// Defaults for `command`.
    pub fn defaults(command: Command) -> Self {
        let mut scenario = ScenarioConfig::default();
        let mut sweep = SweepConfig::default();
        match command {
            Command::RegularSweep => {}
            Command::RandomSweep => {
                sweep.deltas_km = DeltaSweep::List(vec![25.0, 50.0, 100.0, 200.0, 400.0]);
                sweep.trials = 100;
            }
            Command::ReuseTable => {
                scenario.snr_db = 8.0;
                scenario.power_limited = true;
                sweep.deltas_km = DeltaSweep::List(vec![50.0, 200.0]);
                sweep.subbands = vec![1, 4, 7, 12, 19];
            }
            Command::PlanarVsSpherical => {
                scenario.snr_db = 8.0;
            }
            Command::ShuffleCompare | Command::BoundReport => {
                scenario.sat_beamwidth_deg = 5.0;
                scenario.gs_beamwidth_deg = 10.0;
                scenario.gamma_s_deg = 40.0;
                scenario.gamma_g_deg = 40.0;
                sweep.deltas_km = DeltaSweep::Grid(Grid { lo: 10.0, hi: 200.0, points: 40, log: true });
            }
        }
        let output = PathBuf::from(format!("{}.csv", command_slug(command)));
        Self { command, scenario, sweep, seeds: Seeds::default(), output }
    }

    /// Command defaults overlaid with a JSON config document. A `command` field
    /// in the document must agree with `command`.
    pub fn from_json(command: Command, text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        if let Some(c) = doc.get("command") {
            let given: Command =
                serde_json::from_value(c.clone()).map_err(|e| CliError::Config(format!("field `command`: {e}")))?;
            if given != command {
                return Err(CliError::Config(format!("config is for {given:?} but the subcommand is {command:?}")));
            }
        }
        let mut base = serde_json::to_value(Self::defaults(command)).expect("defaults serialise");
        merge(&mut base, doc, "")?;
        serde_json::from_value(base).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(command: Command, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(command, &text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn sidecar_path(&self) -> PathBuf {
        self.output.with_extension("json")
    }

    /// Checks everything that can be checked before computing.
    pub fn validate(&self) -> Result<()> {
        self.scenario.build(self.command == Command::PlanarVsSpherical)?;
        self.scenario.fading_params()?;
        self.sweep.deltas_km.values()?;
        let s = &self.sweep;
        let needs_trials = matches!(self.command, Command::RandomSweep | Command::ReuseTable | Command::PlanarVsSpherical);
        if needs_trials && s.trials == 0 {
            return Err(CliError::Config("sweep.trials must be at least 1".into()));
        }
        if matches!(self.command, Command::RandomSweep | Command::ReuseTable) {
            if s.subbands.is_empty() {
                return Err(CliError::Config("sweep.subbands must not be empty".into()));
            }
            for &m in &s.subbands {
                leocap::spectrum::reuse_shift(m)?;
            }
            s.reuse_grid.values()?;
            if s.window_cols == 0 || s.window_rows == 0 || s.beams_per_satellite == 0 {
                return Err(CliError::Config("window size and beams per satellite must be positive".into()));
            }
        }
        if self.command == Command::PlanarVsSpherical && (s.satellites.is_empty() || s.satellites.contains(&0)) {
            return Err(CliError::Config("sweep.satellites must be a non-empty list of positive counts".into()));
        }
        if matches!(self.command, Command::ShuffleCompare | Command::BoundReport) && !(s.shuffle_radius >= 1.0) {
            return Err(CliError::Config("sweep.shuffle_radius must be at least 1 (units of Δ)".into()));
        }
        if !(s.truncation.cutoff_radius_multiplier >= 2.0 && s.truncation.tail_tolerance > 0.0) {
            return Err(CliError::Config("truncation needs cutoff_radius_multiplier ≥ 2 and tail_tolerance > 0".into()));
        }
        Ok(())
    }
}

pub fn command_slug(c: Command) -> &'static str {
    match c {
        Command::RegularSweep => "regular_sweep",
        Command::RandomSweep => "random_sweep",
        Command::ShuffleCompare => "shuffle_compare",
        Command::PlanarVsSpherical => "planar_vs_spherical",
        Command::ReuseTable => "reuse_table",
        Command::BoundReport => "bound_report",
    }
}

fn merge(base: &mut Value, patch: Value, path: &str) -> Result<()> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v, &here)?,
                    Some(slot) => *slot = v,
                    None => return Err(CliError::Config(format!("unknown field `{here}`"))),
                }
            }
            Ok(())
        }
        (b, p) => {
            *b = p;
            Ok(())
        }
    }
}

/// A result table: column names carry their units.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn num(x: f64) -> String {
    format!("{x:.9e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub const REGULAR_HEADER: [&str; 5] =
    ["delta_km", "eta", "sinr", "rate_bits_per_s_per_hz", "efficiency_bits_per_s_per_hz_per_1000km2"];
pub const RANDOM_HEADER: [&str; 6] = [
    "delta_km",
    "subbands",
    "reuse_distance_km",
    "efficiency_bits_per_s_per_hz_per_1000km2",
    "std_error_bits_per_s_per_hz_per_1000km2",
    "trials",
];
pub const SHUFFLE_HEADER: [&str; 9] = [
    "delta_km",
    "identity_efficiency_bits_per_s_per_hz_per_1000km2",
    "shuffled_efficiency_bits_per_s_per_hz_per_1000km2",
    "relative_gain",
    "block_x_exp",
    "block_y_exp",
    "rounds_x",
    "rounds_y",
    "candidates",
];
pub const PLANAR_HEADER: [&str; 6] = [
    "satellites",
    "spherical_rate_bits_per_s_per_hz",
    "spherical_std_error_bits_per_s_per_hz",
    "planar_rate_bits_per_s_per_hz",
    "planar_std_error_bits_per_s_per_hz",
    "relative_difference",
];
pub const BOUND_HEADER: [&str; 5] = [
    "delta_km",
    "regular_efficiency_bits_per_s_per_hz_per_1000km2",
    "shuffled_efficiency_bits_per_s_per_hz_per_1000km2",
    "upper_bound_bits_per_s_per_hz_per_1000km2",
    "interferers_in_region",
];

/// Computes the table for `spec` without touching the filesystem.
pub fn compute(spec: &ExperimentSpec) -> Result<Table> {
    spec.validate()?;
    let scen = spec.scenario.build(spec.command == Command::PlanarVsSpherical)?;
    let sw = &spec.sweep;
    let stream = RngStream::new(spec.seeds.master, spec.seeds.stream);
    match spec.command {
        Command::RegularSweep => {
            let mut t = Table::new(REGULAR_HEADER.to_vec());
            for d in sw.deltas_km.values()? {
                let a = RegularAnalysis::new(scen.clone(), d, sw.truncation)?;
                let eta = a.eta(scen.psd_max)?;
                let sinr = a.gamma(scen.psd_max) / (eta + 1.0);
                let r = a.r_reg(scen.psd_max)?;
                t.push(vec![num(d), num(eta), num(sinr), num(sinr.ln_1p() / std::f64::consts::LN_2), num(per_1000_km2(r))]);
            }
            Ok(t)
        }
        Command::RandomSweep | Command::ReuseTable => {
            let fading = spec.scenario.fading_params()?;
            let mut t = Table::new(RANDOM_HEADER.to_vec());
            for (k, d) in sw.deltas_km.values()?.into_iter().enumerate() {
                let drop = PlanarDrop {
                    delta: d,
                    cols: sw.window_cols,
                    rows: sw.window_rows,
                    n_beams: sw.beams_per_satellite,
                    layout: leocap::montecarlo::Layout::Random,
                };
                let grid: Vec<f64> = sw.reuse_grid.values()?.into_iter().map(|f| f * d).collect();
                let rows = run_reuse_experiment(&scen, &drop, &sw.subbands, &grid, &fading, sw.trials, stream.substream(k as u64))?;
                for r in rows {
                    t.push(vec![
                        num(d),
                        r.num_subbands.to_string(),
                        opt(r.reuse_distance),
                        num(per_1000_km2(r.mean)),
                        num(per_1000_km2(r.std_error)),
                        r.trials.to_string(),
                    ]);
                }
            }
            Ok(t)
        }
        Command::ShuffleCompare => {
            let mut t = Table::new(SHUFFLE_HEADER.to_vec());
            for d in sw.deltas_km.values()? {
                let o = optimize_shuffle(&scen, d, None, sw.shuffle_radius * d)?;
                t.push(vec![
                    num(d),
                    num(per_1000_km2(o.identity_efficiency)),
                    num(per_1000_km2(o.efficiency)),
                    num(o.relative_gain()),
                    o.plan.block_x_exp.to_string(),
                    o.plan.block_y_exp.to_string(),
                    o.plan.rounds_x.to_string(),
                    o.plan.rounds_y.to_string(),
                    o.candidates_evaluated.to_string(),
                ]);
            }
            Ok(t)
        }
        Command::PlanarVsSpherical => {
            let mut t = Table::new(PLANAR_HEADER.to_vec());
            for (k, &n) in sw.satellites.iter().enumerate() {
                let c = run_planar_vs_spherical(&scen, n, sw.trials, stream.substream(k as u64))?;
                t.push(vec![
                    n.to_string(),
                    num(c.spherical.mean),
                    num(c.spherical.std_error),
                    num(c.planar.mean),
                    num(c.planar.std_error),
                    num(c.relative_difference),
                ]);
            }
            Ok(t)
        }
        Command::BoundReport => {
            let mut t = Table::new(BOUND_HEADER.to_vec());
            for d in sw.deltas_km.values()? {
                let a = RegularAnalysis::new(scen.clone(), d, sw.truncation)?;
                let o = optimize_shuffle(&scen, d, None, sw.shuffle_radius * d)?;
                let x = count_in_beam_region(d, scen.earth.altitude_km, scen.gamma_g)?;
                t.push(vec![
                    num(d),
                    num(per_1000_km2(a.r_reg(scen.psd_max)?)),
                    num(per_1000_km2(o.efficiency)),
                    num(per_1000_km2(beam_region_upper_bound(&scen, d)?)),
                    x.to_string(),
                ]);
            }
            Ok(t)
        }
    }
}

pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

/// Computes, then writes the CSV and the sidecar. Returns the table.
pub fn run(spec: &ExperimentSpec) -> Result<Table> {
    let table = compute(spec)?;
    write_csv(&table, &spec.output)?;
    let sidecar = spec.sidecar_path();
    let text = serde_json::to_string_pretty(spec).expect("spec serialises");
    fs::write(&sidecar, text + "\n").map_err(|source| CliError::Io { path: sidecar, source })?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        let g = Grid { lo: 1.0, hi: 100.0, points: 3, log: true };
        let v = g.values().unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12 && (v[2] - 100.0).abs() < 1e-12);
        let g = Grid { lo: 2.0, hi: 4.0, points: 3, log: false };
        assert_eq!(g.values().unwrap(), vec![2.0, 3.0, 4.0]);
        assert!(Grid { lo: 0.0, hi: 1.0, points: 3, log: true }.values().is_err());
    }

    #[test]
    fn config_overlays_defaults() {
        let s = ExperimentSpec::from_json(Command::RegularSweep, r#"{"scenario": {"snr_db": 3.0}}"#).unwrap();
        assert_eq!(s.scenario.snr_db, 3.0);
        assert_eq!(s.scenario.alpha, 2.5);
        assert_eq!(s.sweep, SweepConfig::default());
    }

    #[test]
    fn unknown_and_mistyped_fields_are_named() {
        let e = ExperimentSpec::from_json(Command::RegularSweep, r#"{"scenario": {"snr": 3.0}}"#).unwrap_err();
        assert!(e.to_string().contains("scenario.snr"), "{e}");
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        let e = ExperimentSpec::from_json(Command::RegularSweep, "{\n  \"scenario\": {\"alpha\": }\n}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = ExperimentSpec::from_json(Command::RegularSweep, r#"{"command": "BoundReport"}"#).unwrap_err();
        assert!(e.to_string().contains("BoundReport"));
    }

    #[test]
    fn infeasible_values_rejected_before_compute() {
        let mut s = ExperimentSpec::defaults(Command::RegularSweep);
        s.scenario.alpha = 1.5;
        assert_eq!(compute(&s).unwrap_err().exit_code(), EXIT_CONFIG);
        let mut s = ExperimentSpec::defaults(Command::ReuseTable);
        s.sweep.subbands = vec![5];
        assert_eq!(compute(&s).unwrap_err().exit_code(), EXIT_CONFIG);
        let mut s = ExperimentSpec::defaults(Command::RandomSweep);
        s.sweep.deltas_km = DeltaSweep::List(vec![]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn convergence_maps_to_its_exit_code() {
        let mut s = ExperimentSpec::defaults(Command::RegularSweep);
        s.scenario.alpha = 2.0;
        s.sweep.deltas_km = DeltaSweep::List(vec![100.0]);
        assert_eq!(compute(&s).unwrap_err().exit_code(), EXIT_CONVERGENCE);
    }

    #[test]
    fn defaults_follow_command() {
        let t = ExperimentSpec::defaults(Command::ReuseTable);
        assert!(t.scenario.power_limited && t.scenario.snr_db == 8.0);
        assert_eq!(t.sweep.subbands, vec![1, 4, 7, 12, 19]);
        let b = ExperimentSpec::defaults(Command::BoundReport);
        assert_eq!((b.scenario.gamma_g_deg, b.scenario.sat_beamwidth_deg), (40.0, 5.0));
        assert_eq!(t.sidecar_path(), PathBuf::from("reuse_table.json"));
    }
}
