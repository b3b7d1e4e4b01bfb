//! Monte Carlo drops: random and regular planar windows, the spherical probe
//! experiment, fading, and trial statistics.
//!
//! Every trial owns an independent [`RngStream`] derived from the experiment's
//! stream and trial index, so results do not depend on scheduling.

pub mod sampling;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assoc::min_distance_association_on;
use crate::error::{Error, Result};
use crate::geometry::{
    field_of_view_angle, project_to_plane, EarthModel, Layer, LatticeIndex, Point3, SurfaceMode, Torus,
};
use crate::link::{log2_1p, sinr, Constellation, GainMatrix, Scenario};
use crate::spectrum::reuse_efficiency_curve;

pub use sampling::{
    planar_count, sample_bpp_spherical, sample_cap, sample_shadowed_rician, sample_uniform_count,
    sample_uniform_planar, FadingParams, FadingRegime, RngStream, ShadowedRician,
};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Recursive pairwise summation; the split points depend only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Standard error of the mean; zero for a single sample.
    pub std_error: f64,
    pub n: usize,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { mean: f64::NAN, std_error: f64::NAN, n };
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return Summary { mean, std_error: 0.0, n };
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    Summary { mean, std_error: (var / n as f64).sqrt(), n }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// Uniform satellites and terminals at the lattice-matched density.
    Random,
    /// The matched hexagonal lattices with identity association.
    Regular,
}

/// A planar torus window of `cols·Δ × rows·Δ√3` holding `2·cols·rows` satellites
/// (the same count as the hexagonal lattice of spacing `Δ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarDrop {
    pub delta: f64,
    pub cols: usize,
    pub rows: usize,
    /// Terminals served per satellite; co-located beams are independent links.
    pub n_beams: usize,
    pub layout: Layout,
}

impl PlanarDrop {
    pub fn random(delta: f64, cols: usize, rows: usize) -> Self {
        Self { delta, cols, rows, n_beams: 1, layout: Layout::Random }
    }

    pub fn regular(delta: f64, cols: usize, rows: usize) -> Self {
        Self { delta, cols, rows, n_beams: 1, layout: Layout::Regular }
    }

    pub fn window(&self) -> Result<Torus> {
        Torus::for_lattice(self.cols, 2 * self.rows, self.delta)
    }

    pub fn satellite_count(&self) -> usize {
        2 * self.cols * self.rows
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || self.cols == 0 || self.rows == 0 || self.n_beams == 0 {
            return Err(Error::param("planar drop needs Δ > 0 and positive window and beam counts"));
        }
        if self.layout == Layout::Regular && self.n_beams != 1 {
            return Err(Error::param("regular drops carry one beam per satellite"));
        }
        Ok(())
    }

    /// Positions, association and aligned look directions for one trial.
    pub fn draw<R: rand::Rng + ?Sized>(&self, scen: &Scenario, rng: &mut R) -> Result<Constellation> {
        self.validate()?;
        let earth = with_mode(&scen.earth, SurfaceMode::Planar);
        let window = self.window()?;
        let psd = scen.full_band_psd();
        match self.layout {
            Layout::Regular => {
                let mut sats = Vec::with_capacity(self.satellite_count());
                let mut terms = Vec::with_capacity(self.satellite_count());
                for j in 0..2 * self.rows as i64 {
                    for m in 0..self.cols as i64 {
                        let idx = LatticeIndex::new(2 * m + j % 2, j)?;
                        let (x, y) = idx.planar_offset(self.delta);
                        sats.push(Point3::new(x, y, earth.orbit_radius_km()));
                        terms.push(Point3::new(x, y, earth.earth_radius_km));
                    }
                }
                let n = sats.len();
                Constellation::nadir(&sats, &terms, (0..n).collect(), psd, &earth, Some(window))
            }
            Layout::Random => {
                let n = self.satellite_count();
                let sats = sample_uniform_count(n, &window, earth.orbit_radius_km(), rng);
                let terms = sample_uniform_count(n * self.n_beams, &window, earth.earth_radius_km, rng);
                let beams: Vec<Point3> = sats.iter().flat_map(|&s| std::iter::repeat_n(s, self.n_beams)).collect();
                let a = min_distance_association_on(&beams, &terms, Some(&window))?;
                Constellation::aligned(&beams, &terms, a.mapping, psd, &earth, Some(window))
            }
        }
    }
}

fn with_mode(earth: &EarthModel, mode: SurfaceMode) -> EarthModel {
    EarthModel { mode, ..*earth }
}

fn faded_gains<R: rand::Rng + ?Sized>(
    scen: &Scenario,
    c: &Constellation,
    fading: &FadingParams,
    rng: &mut R,
) -> Result<GainMatrix> {
    let mut g = GainMatrix::compute(scen, c)?;
    if fading.regime != FadingRegime::None {
        let s = ShadowedRician::new(fading)?;
        g.apply_fading(|| s.sample(rng));
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Allocator {
    FullReuse,
    /// Hexagonal reuse with `num_subbands` labels; the reuse distance is chosen
    /// from `reuse_grid` to maximise the mean over trials.
    Hexagonal { num_subbands: u32, reuse_grid: Vec<f64> },
}

/// One aggregated sweep point, efficiency in bits/s/Hz/km².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub num_subbands: u32,
    pub reuse_distance: Option<f64>,
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::param("at least one trial is required"));
    }
    Ok(())
}

/// Mean and standard error of the window spectral efficiency over `trials` drops.
pub fn run_random_experiment(
    scen: &Scenario,
    drop: &PlanarDrop,
    allocator: &Allocator,
    fading: &FadingParams,
    trials: usize,
    stream: RngStream,
) -> Result<SweepRow> {
    check_trials(trials)?;
    match allocator {
        Allocator::FullReuse => {
            let values: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream.substream(t as u64).rng();
                    let c = drop.draw(scen, &mut rng)?;
                    let g = faded_gains(scen, &c, fading, &mut rng)?;
                    let psd = vec![scen.full_band_psd(); c.satellites.len()];
                    Ok(g.sum_rate(&c.association, &psd, scen.noise_sigma2) / c.reference_area(&scen.earth))
                })
                .collect::<Result<_>>()?;
            let s = summarize(&values);
            Ok(SweepRow {
                delta: drop.delta,
                num_subbands: 1,
                reuse_distance: None,
                mean: s.mean,
                std_error: s.std_error,
                trials,
            })
        }
        Allocator::Hexagonal { num_subbands, reuse_grid } => {
            let mut rows = run_reuse_experiment(scen, drop, &[*num_subbands], reuse_grid, fading, trials, stream)?;
            Ok(rows.remove(0))
        }
    }
}

/// Hexagonal reuse for several `M` on common drops. For each `M` the reuse
/// distance maximising the trial mean is reported.
pub fn run_reuse_experiment(
    scen: &Scenario,
    drop: &PlanarDrop,
    m_values: &[u32],
    reuse_grid: &[f64],
    fading: &FadingParams,
    trials: usize,
    stream: RngStream,
) -> Result<Vec<SweepRow>> {
    check_trials(trials)?;
    if m_values.is_empty() || reuse_grid.is_empty() {
        return Err(Error::param("reuse experiment needs subband counts and a reuse-distance grid"));
    }
    for &m in m_values {
        crate::spectrum::reuse_shift(m)?;
    }
    // per trial: [M][L] efficiencies
    let per_trial: Vec<Vec<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream.substream(t as u64).rng();
            let c = drop.draw(scen, &mut rng)?;
            let g = faded_gains(scen, &c, fading, &mut rng)?;
            m_values
                .iter()
                .map(|&m| reuse_efficiency_curve(scen, &c, &g, m, reuse_grid, (0.0, 0.0)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(m_values.len());
    for (mi, &m) in m_values.iter().enumerate() {
        let summaries: Vec<Summary> = (0..reuse_grid.len())
            .map(|li| summarize(&per_trial.iter().map(|t| t[mi][li]).collect::<Vec<_>>()))
            .collect();
        let (best, s) = summaries
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean).then(b.0.cmp(&a.0)))
            .expect("non-empty grid");
        rows.push(SweepRow {
            delta: drop.delta,
            num_subbands: m,
            reuse_distance: if m == 1 { None } else { Some(reuse_grid[best]) },
            mean: s.mean,
            std_error: s.std_error,
            trials,
        });
    }
    Ok(rows)
}

/// Probe-terminal rate (bits/s/Hz) with the exact spherical geometry and with
/// the planar projection of the same drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeComparison {
    pub n: usize,
    pub spherical: Summary,
    pub planar: Summary,
    /// `|planar − spherical| / spherical` of the means.
    pub relative_difference: f64,
}

/// One spherical drop: the probe at `(0, 0, r_e)` plus `n − 1` terminals and `n`
/// satellites uniform in the visible caps, Hungarian association, aligned looks.
/// Returns the probe's rate on the sphere and after planar projection.
pub fn probe_rates<R: rand::Rng + ?Sized>(scen: &Scenario, n: usize, rng: &mut R) -> Result<(f64, f64)> {
    let sph = with_mode(&scen.earth, SurfaceMode::Spherical);
    let flat = with_mode(&scen.earth, SurfaceMode::Planar);
    let theta_f = field_of_view_angle(&sph);
    let sats = sample_bpp_spherical(n, &sph, rng)?;
    let mut terms = vec![Point3::new(0.0, 0.0, sph.earth_radius_km)];
    terms.extend(sample_cap(n - 1, sph.earth_radius_km, theta_f, rng));
    let a = min_distance_association_on(&sats, &terms, None)?;
    let psd = scen.full_band_psd();

    let scen_s = Scenario { earth: sph, ..scen.clone() };
    let c = Constellation::aligned(&sats, &terms, a.mapping.clone(), psd, &sph, None)?;
    let r_sph = log2_1p(sinr(&scen_s, &c, 0)?);

    let ps: Vec<Point3> = sats.iter().map(|&s| project_to_plane(s, &flat, Layer::Satellite)).collect::<Result<_>>()?;
    let pt: Vec<Point3> = terms.iter().map(|&g| project_to_plane(g, &flat, Layer::Terminal)).collect::<Result<_>>()?;
    let scen_p = Scenario { earth: flat, ..scen.clone() };
    let cp = Constellation::aligned(&ps, &pt, a.mapping, psd, &flat, None)?;
    let r_flat = log2_1p(sinr(&scen_p, &cp, 0)?);
    Ok((r_sph, r_flat))
}

pub fn run_planar_vs_spherical(scen: &Scenario, n: usize, trials: usize, stream: RngStream) -> Result<ProbeComparison> {
    check_trials(trials)?;
    if n == 0 {
        return Err(Error::param("probe experiment needs at least one satellite"));
    }
    let pairs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| probe_rates(scen, n, &mut stream.substream(t as u64).rng()))
        .collect::<Result<_>>()?;
    let spherical = summarize(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let planar = summarize(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(ProbeComparison {
        n,
        spherical,
        planar,
        relative_difference: (planar.mean - spherical.mean).abs() / spherical.mean,
    })
}

/// Equivalent spacing of `n` satellites spread over the visible cap.
pub fn cap_equivalent_spacing(earth: &EarthModel, n: usize) -> f64 {
    let theta_f = field_of_view_angle(earth);
    let area = 2.0 * std::f64::consts::PI * earth.earth_radius_km.powi(2) * (1.0 - theta_f.cos());
    (2.0 * area / (SQRT3 * n as f64)).sqrt()
}
