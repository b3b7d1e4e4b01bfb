//! Link gains, SINR and spectral efficiency for arbitrary constellations.
//!
//! The frequency-dependent gain ψ is normalised to 1 and folded into the noise
//! PSD `σ²`, so a link gain is `c = d^{-α} w_s(θ) w_g(φ)`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::antenna::BeamPattern;
use crate::error::{Error, Result};
use crate::geometry::{field_of_view_angle, EarthModel, Point3, SurfaceMode, Torus};
use crate::spectrum::SpectrumPlan;

mod serde_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Physical and algorithmic parameters of one experiment.
///
/// Angles are radians. `psd_max` may be `+∞` (serialised as `null`) when only the
/// total-power constraint binds. The beam regions `gamma_s`, `gamma_g` are full
/// cone apex angles: a boresight may deviate from nadir (zenith) by at most half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub earth: EarthModel,
    pub alpha: f64,
    pub sat_pattern: BeamPattern,
    pub gs_pattern: BeamPattern,
    #[serde(with = "serde_inf")]
    pub psd_max: f64,
    pub p_max: f64,
    pub noise_sigma2: f64,
    pub gamma_s: f64,
    pub gamma_g: f64,
    pub bandwidth: f64,
}

impl Scenario {
    /// Unit noise PSD and bandwidth; `psd_max` set so the serving-link SNR
    /// `psd_max h^{-α} / σ²` equals `snr_db`. `P_max = psd_max · B`, so neither
    /// constraint is slack on a single full-band channel.
    pub fn from_serving_snr(
        earth: EarthModel,
        alpha: f64,
        sat_pattern: BeamPattern,
        gs_pattern: BeamPattern,
        snr_db: f64,
    ) -> Result<Self> {
        let psd_max = crate::db_to_linear(snr_db) * earth.altitude_km.powf(alpha);
        let s = Self {
            earth,
            alpha,
            sat_pattern,
            gs_pattern,
            psd_max,
            p_max: psd_max,
            noise_sigma2: 1.0,
            gamma_s: FRAC_PI_2,
            gamma_g: FRAC_PI_2,
            bandwidth: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    /// Total-power-limited setup: `P_max h^{-α} / (B σ²)` equals `snr_db` and
    /// `psd_max = factor · P_max / B` (`None`: the PSD cap never binds).
    pub fn power_limited(
        earth: EarthModel,
        alpha: f64,
        sat_pattern: BeamPattern,
        gs_pattern: BeamPattern,
        snr_db: f64,
        psd_factor: Option<f64>,
    ) -> Result<Self> {
        let mut s = Self::from_serving_snr(earth, alpha, sat_pattern, gs_pattern, snr_db)?;
        s.p_max = s.psd_max * s.bandwidth;
        s.psd_max = psd_factor.map_or(f64::INFINITY, |f| f * s.p_max / s.bandwidth);
        s.validate()?;
        Ok(s)
    }

    pub fn with_beam_regions(mut self, gamma_s: f64, gamma_g: f64) -> Result<Self> {
        self.gamma_s = gamma_s;
        self.gamma_g = gamma_g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_patterns(mut self, sat: BeamPattern, gs: BeamPattern) -> Self {
        self.sat_pattern = sat;
        self.gs_pattern = gs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be positive, got {v}")))
            }
        };
        if !(self.alpha >= 2.0 && self.alpha.is_finite()) {
            return Err(Error::param(format!("path-loss exponent must be at least 2, got {}", self.alpha)));
        }
        positive("psd_max", self.psd_max)?;
        positive("p_max", self.p_max)?;
        positive("noise_sigma2", self.noise_sigma2)?;
        positive("bandwidth", self.bandwidth)?;
        if !self.p_max.is_finite() || !self.noise_sigma2.is_finite() || !self.bandwidth.is_finite() {
            return Err(Error::param("p_max, noise_sigma2 and bandwidth must be finite"));
        }
        for (name, g) in [("gamma_s", self.gamma_s), ("gamma_g", self.gamma_g)] {
            if !(g > 0.0 && g <= std::f64::consts::PI) {
                return Err(Error::param(format!("{name} must lie in (0°, 180°], got {}°", g.to_degrees())));
            }
        }
        Ok(())
    }

    /// `psd_max h^{-α} / σ²`.
    pub fn serving_snr(&self) -> f64 {
        self.psd_max * self.earth.altitude_km.powf(-self.alpha) / self.noise_sigma2
    }

    /// Largest PSD a single full-band link may use: `min(psd_max, P_max / B)`.
    pub fn full_band_psd(&self) -> f64 {
        self.psd_max.min(self.p_max / self.bandwidth)
    }

    /// Link gain for a satellite→terminal displacement `v` and the two boresights.
    #[inline]
    pub(crate) fn gain_for(&self, v: Point3, sat_look: Point3, term_look: Point3) -> Result<f64> {
        let d2 = v.norm_sq();
        if !(d2 > 0.0) {
            return Err(Error::DegenerateGeometry("satellite and terminal coincide"));
        }
        let d = d2.sqrt();
        let cos_sat = sat_look.dot(v) / d;
        let cos_gs = -term_look.dot(v) / d;
        Ok(d.powf(-self.alpha) * self.sat_pattern.gain_from_cos(cos_sat) * self.gs_pattern.gain_from_cos(cos_gs))
    }
}

/// Dimensionless attenuation `c = d^{-α} w_s w_g`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LinkGain(pub f64);

impl LinkGain {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn link_gain(
    scen: &Scenario,
    sat_pos: Point3,
    sat_look: Point3,
    term_pos: Point3,
    term_look: Point3,
) -> Result<LinkGain> {
    let sat_look = sat_look.normalized()?;
    let term_look = term_look.normalized()?;
    scen.gain_for(term_pos - sat_pos, sat_look, term_look).map(LinkGain)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Satellite {
    pub position: Point3,
    /// Unit boresight.
    pub look: Point3,
    pub psd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub position: Point3,
    pub look: Point3,
}

/// Satellites, terminals and the association `terminal k → satellite association[k]`.
/// With `wrap` set, horizontal displacements use the torus minimum image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub satellites: Vec<Satellite>,
    pub terminals: Vec<Terminal>,
    pub association: Vec<usize>,
    pub wrap: Option<Torus>,
}

fn vertical(p: Point3, earth: &EarthModel) -> Point3 {
    match earth.mode {
        SurfaceMode::Planar => Point3::new(0.0, 0.0, 1.0),
        SurfaceMode::Spherical => p.normalized().unwrap_or(Point3::new(0.0, 0.0, 1.0)),
    }
}

impl Constellation {
    fn check_association(n_sat: usize, n_term: usize, association: &[usize]) -> Result<()> {
        if association.len() != n_term {
            return Err(Error::param(format!(
                "association has {} entries for {n_term} terminals",
                association.len()
            )));
        }
        if let Some(&bad) = association.iter().find(|&&s| s >= n_sat) {
            return Err(Error::param(format!("association references satellite {bad} of {n_sat}")));
        }
        Ok(())
    }

    #[inline]
    pub fn displacement(&self, from: Point3, to: Point3) -> Point3 {
        let d = to - from;
        match &self.wrap {
            Some(t) => t.wrap(d),
            None => d,
        }
    }

    /// Every link's boresights point at each other. A satellite serving several
    /// terminals looks at the first; an idle satellite looks to nadir.
    pub fn aligned(
        sat_positions: &[Point3],
        term_positions: &[Point3],
        association: Vec<usize>,
        psd: f64,
        earth: &EarthModel,
        wrap: Option<Torus>,
    ) -> Result<Self> {
        Self::check_association(sat_positions.len(), term_positions.len(), &association)?;
        let mut c = Constellation {
            satellites: sat_positions
                .iter()
                .map(|&p| Satellite { position: p, look: -vertical(p, earth), psd })
                .collect(),
            terminals: term_positions
                .iter()
                .map(|&p| Terminal { position: p, look: vertical(p, earth) })
                .collect(),
            association,
            wrap,
        };
        let mut pointed = vec![false; c.satellites.len()];
        for k in 0..c.terminals.len() {
            let i = c.association[k];
            let v = c.displacement(c.satellites[i].position, c.terminals[k].position).normalized()?;
            c.terminals[k].look = -v;
            if !pointed[i] {
                c.satellites[i].look = v;
                pointed[i] = true;
            }
        }
        Ok(c)
    }

    /// Satellites look to nadir and terminals to zenith.
    pub fn nadir(
        sat_positions: &[Point3],
        term_positions: &[Point3],
        association: Vec<usize>,
        psd: f64,
        earth: &EarthModel,
        wrap: Option<Torus>,
    ) -> Result<Self> {
        Self::check_association(sat_positions.len(), term_positions.len(), &association)?;
        Ok(Constellation {
            satellites: sat_positions
                .iter()
                .map(|&p| Satellite { position: p, look: -vertical(p, earth), psd })
                .collect(),
            terminals: term_positions
                .iter()
                .map(|&p| Terminal { position: p, look: vertical(p, earth) })
                .collect(),
            association,
            wrap,
        })
    }

    pub fn is_bijective(&self) -> bool {
        if self.satellites.len() != self.terminals.len() {
            return false;
        }
        let mut seen = vec![false; self.satellites.len()];
        self.association.iter().all(|&i| !std::mem::replace(&mut seen[i], true))
    }

    pub fn set_uniform_psd(&mut self, psd: f64) {
        for s in &mut self.satellites {
            s.psd = psd;
        }
    }

    /// Links whose boresights leave the beam regions (half-angles `γ_s/2`, `γ_g/2`
    /// around nadir/zenith). Returns the offending terminal indices.
    pub fn beam_region_violations(&self, scen: &Scenario, earth: &EarthModel) -> Vec<usize> {
        let cs = (0.5 * scen.gamma_s).cos();
        let cg = (0.5 * scen.gamma_g).cos();
        (0..self.terminals.len())
            .filter(|&k| {
                let t = &self.terminals[k];
                let s = &self.satellites[self.association[k]];
                let sat_ok = s.look.dot(-vertical(s.position, earth)) >= cs - 1e-12;
                let term_ok = t.look.dot(vertical(t.position, earth)) >= cg - 1e-12;
                !(sat_ok && term_ok)
            })
            .collect()
    }

    /// Reference area for spectral efficiency: the torus window, else the whole
    /// Earth surface.
    pub fn reference_area(&self, earth: &EarthModel) -> f64 {
        self.wrap.map_or_else(|| earth.surface_area_km2(), |t| t.area())
    }
}

/// Whether satellite `i` is above the horizon of terminal `k`. Planar mode has
/// an infinite horizon.
pub fn is_visible(earth: &EarthModel, sat: Point3, term: Point3) -> bool {
    match earth.mode {
        SurfaceMode::Planar => true,
        SurfaceMode::Spherical => {
            let c = sat.dot(term) / (sat.norm() * term.norm());
            c.clamp(-1.0, 1.0).acos() < field_of_view_angle(earth)
        }
    }
}

pub fn interferer_set(constellation: &Constellation, terminal_k: usize, earth: &EarthModel) -> Vec<usize> {
    let server = constellation.association[terminal_k];
    let g = constellation.terminals[terminal_k].position;
    (0..constellation.satellites.len())
        .filter(|&i| i != server && is_visible(earth, constellation.satellites[i].position, g))
        .collect()
}

/// All satellite→terminal gains with horizon masking applied (invisible pairs
/// are zero). Row-major by satellite.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    n_sat: usize,
    n_term: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn compute(scen: &Scenario, c: &Constellation) -> Result<Self> {
        let n_sat = c.satellites.len();
        let n_term = c.terminals.len();
        let mut data = vec![0.0; n_sat * n_term];
        for (i, s) in c.satellites.iter().enumerate() {
            for (k, t) in c.terminals.iter().enumerate() {
                if is_visible(&scen.earth, s.position, t.position) {
                    let v = c.displacement(s.position, t.position);
                    data[i * n_term + k] = scen.gain_for(v, s.look, t.look)?;
                }
            }
        }
        Ok(Self { n_sat, n_term, data })
    }

    #[inline]
    pub fn get(&self, sat: usize, term: usize) -> f64 {
        self.data[sat * self.n_term + term]
    }

    pub fn n_satellites(&self) -> usize {
        self.n_sat
    }

    pub fn n_terminals(&self) -> usize {
        self.n_term
    }

    /// Multiplies every entry by an independent draw from `sample`.
    pub fn apply_fading<F: FnMut() -> f64>(&mut self, mut sample: F) {
        for v in &mut self.data {
            *v *= sample();
        }
    }

    /// Per-terminal SINR for single-channel transmission with per-satellite PSDs.
    pub fn sinrs(&self, association: &[usize], psd: &[f64], noise: f64) -> Vec<f64> {
        let mut total = vec![0.0; self.n_term];
        for (i, &p) in psd.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let row = &self.data[i * self.n_term..(i + 1) * self.n_term];
            for (t, &g) in total.iter_mut().zip(row) {
                *t += p * g;
            }
        }
        association
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let signal = psd[i] * self.get(i, k);
                signal / ((total[k] - signal).max(0.0) + noise)
            })
            .collect()
    }

    /// Σ_k log₂(1 + SINR_k).
    pub fn sum_rate(&self, association: &[usize], psd: &[f64], noise: f64) -> f64 {
        self.sinrs(association, psd, noise).iter().map(|s| s.log2_1p()).sum()
    }
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    #[inline]
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

#[inline]
pub(crate) fn log2_1p(x: f64) -> f64 {
    x.log2_1p()
}

pub fn sinr(scen: &Scenario, constellation: &Constellation, terminal_k: usize) -> Result<f64> {
    let c = constellation;
    let t = &c.terminals[terminal_k];
    let server = c.association[terminal_k];
    let gain = |i: usize| {
        let s = &c.satellites[i];
        scen.gain_for(c.displacement(s.position, t.position), s.look, t.look)
    };
    let signal = c.satellites[server].psd * gain(server)?;
    let mut interference = 0.0;
    for i in interferer_set(c, terminal_k, &scen.earth) {
        interference += c.satellites[i].psd * gain(i)?;
    }
    Ok(signal / (interference + scen.noise_sigma2))
}

fn psd_vector(c: &Constellation) -> Vec<f64> {
    c.satellites.iter().map(|s| s.psd).collect()
}

/// Σ_k log₂(1 + SINR_k) over all terminals, single channel.
pub fn sum_rate(scen: &Scenario, constellation: &Constellation) -> Result<f64> {
    let g = GainMatrix::compute(scen, constellation)?;
    Ok(g.sum_rate(&constellation.association, &psd_vector(constellation), scen.noise_sigma2))
}

/// Single-channel efficiency normalised by the Earth's surface area.
pub fn spectral_efficiency_spherical(scen: &Scenario, constellation: &Constellation) -> Result<f64> {
    if constellation.terminals.is_empty() {
        return Ok(0.0);
    }
    Ok(sum_rate(scen, constellation)? / scen.earth.surface_area_km2())
}

/// Single-channel efficiency normalised by the constellation's reference area
/// (torus window when present).
pub fn spectral_efficiency(scen: &Scenario, constellation: &Constellation) -> Result<f64> {
    if constellation.terminals.is_empty() {
        return Ok(0.0);
    }
    Ok(sum_rate(scen, constellation)? / constellation.reference_area(&scen.earth))
}

/// Multi-subband efficiency with equal subbands of width `B/M`.
pub fn spectral_efficiency_wideband(
    scen: &Scenario,
    constellation: &Constellation,
    plan: &SpectrumPlan,
) -> Result<f64> {
    let g = GainMatrix::compute(scen, constellation)?;
    Ok(wideband_sum_rate(&g, &constellation.association, plan, scen.noise_sigma2)?
        / constellation.reference_area(&scen.earth))
}

/// Σ_k Σ_{m ∈ G_k} (1/M) log₂(1 + SINR_{k,m}).
pub fn wideband_sum_rate(g: &GainMatrix, association: &[usize], plan: &SpectrumPlan, noise: f64) -> Result<f64> {
    let m_total = plan.num_subbands as usize;
    if plan.per_terminal_subbands.len() != g.n_terminals() || plan.per_satellite_subbands.len() != g.n_satellites() {
        return Err(Error::param("spectrum plan does not match the constellation size"));
    }
    let mut active: Vec<Vec<usize>> = vec![Vec::new(); m_total];
    for (i, set) in plan.per_satellite_subbands.iter().enumerate() {
        if plan.per_satellite_psd[i] > 0.0 {
            for &m in set {
                active[(m - 1) as usize].push(i);
            }
        }
    }
    let frac = 1.0 / m_total as f64;
    let mut rate = 0.0;
    for (k, set) in plan.per_terminal_subbands.iter().enumerate() {
        let server = association[k];
        for &m in set {
            let mut interference = 0.0;
            for &i in &active[(m - 1) as usize] {
                if i != server {
                    interference += plan.per_satellite_psd[i] * g.get(i, k);
                }
            }
            let signal = plan.per_satellite_psd[server] * g.get(server, k);
            rate += frac * log2_1p(signal / (interference + noise));
        }
    }
    Ok(rate)
}

/// Outcome of the three symmetry conditions under which uniform full power is
/// sum-rate optimal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub equal_interferer_counts: bool,
    pub equal_direct_gains: bool,
    pub equal_interferer_multisets: bool,
}

impl SymmetryReport {
    pub fn holds(&self) -> bool {
        self.equal_interferer_counts && self.equal_direct_gains && self.equal_interferer_multisets
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + f64::MIN_POSITIVE
}

pub fn symmetry_conditions(scen: &Scenario, constellation: &Constellation) -> Result<SymmetryReport> {
    const REL: f64 = 1e-9;
    let g = GainMatrix::compute(scen, constellation)?;
    let n = constellation.terminals.len();
    let mut counts = Vec::with_capacity(n);
    let mut direct = Vec::with_capacity(n);
    let mut multisets: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let set = interferer_set(constellation, k, &scen.earth);
        counts.push(set.len());
        direct.push(g.get(constellation.association[k], k));
        let mut m: Vec<f64> = set.iter().map(|&i| g.get(i, k)).collect();
        m.sort_by(f64::total_cmp);
        multisets.push(m);
    }
    let equal_interferer_counts = counts.windows(2).all(|w| w[0] == w[1]);
    let equal_direct_gains = direct.windows(2).all(|w| close(w[0], w[1], REL));
    let equal_interferer_multisets = equal_interferer_counts
        && multisets.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| close(*a, *b, REL) || (a - b).abs() < 1e-300));
    Ok(SymmetryReport { equal_interferer_counts, equal_direct_gains, equal_interferer_multisets })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCheck {
    /// Uniform `psd_max` beat or tied every competitor.
    pub full_power_optimal: bool,
    pub full_power_sum_rate: f64,
    pub best_competitor: Vec<f64>,
    pub best_competitor_sum_rate: f64,
    pub symmetry: SymmetryReport,
}

/// Compares the uniform full-PSD sum rate against `trials` random feasible PSD
/// vectors drawn uniformly from `[0, psd_max]^N`.
pub fn full_power_is_optimal_check<R: Rng + ?Sized>(
    scen: &Scenario,
    constellation: &Constellation,
    trials: usize,
    rng: &mut R,
) -> Result<PowerCheck> {
    let cap = scen.full_band_psd();
    if !cap.is_finite() {
        return Err(Error::param("full-power check needs a finite PSD cap"));
    }
    let symmetry = symmetry_conditions(scen, constellation)?;
    let g = GainMatrix::compute(scen, constellation)?;
    let n = constellation.satellites.len();
    let assoc = &constellation.association;
    let full = g.sum_rate(assoc, &vec![cap; n], scen.noise_sigma2);
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut p = vec![0.0; n];
    for _ in 0..trials {
        for v in &mut p {
            *v = cap * rng.random::<f64>();
        }
        let r = g.sum_rate(assoc, &p, scen.noise_sigma2);
        if r > best.1 {
            best = (p.clone(), r);
        }
    }
    Ok(PowerCheck {
        full_power_optimal: best.1 <= full * (1.0 + 1e-12),
        full_power_sum_rate: full,
        best_competitor: best.0,
        best_competitor_sum_rate: best.1,
        symmetry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::PatternKind;
    use crate::geometry::{lattice_patch, regular_satellite_position, regular_terminal_position, LatticeIndex};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const H: f64 = 550.0;

    fn planar() -> EarthModel {
        EarthModel::planar(H).unwrap()
    }

    fn scen(snr_db: f64) -> Scenario {
        Scenario::from_serving_snr(
            planar(),
            2.5,
            BeamPattern::bessel_deg(10.0).unwrap(),
            BeamPattern::bessel_deg(20.0).unwrap(),
            snr_db,
        )
        .unwrap()
    }

    fn sat(x: f64, y: f64) -> Point3 {
        Point3::new(x, y, 6378.0 + H)
    }

    fn term(x: f64, y: f64) -> Point3 {
        Point3::new(x, y, 6378.0)
    }

    #[test]
    fn aligned_nadir_link() {
        let s = scen(10.0);
        let down = Point3::new(0.0, 0.0, -1.0);
        let g = link_gain(&s, sat(0.0, 0.0), down, term(0.0, 0.0), -down).unwrap();
        assert_abs_diff_eq!(g.value(), H.powf(-2.5), epsilon = 1e-20);
        // doubling the distance along the boresight scales by 2^-α
        let far = Point3::new(0.0, 0.0, 6378.0 + 2.0 * H);
        let g2 = link_gain(&s, far, down, term(0.0, 0.0), -down).unwrap();
        assert_abs_diff_eq!(g2.value() / g.value(), 2f64.powf(-2.5), epsilon = 1e-12);
        assert!(link_gain(&s, sat(0.0, 0.0), down, sat(0.0, 0.0), down).is_err());
    }

    #[test]
    fn terminal_first_null_without_sidelobes() {
        let mut s = scen(10.0);
        s.gs_pattern = s.gs_pattern.with_kind(PatternKind::NoSidelobe);
        let down = Point3::new(0.0, 0.0, -1.0);
        let x = H * 20f64.to_radians().tan();
        let g = link_gain(&s, sat(x, 0.0), term(0.0, 0.0) - sat(x, 0.0), term(0.0, 0.0), -down).unwrap();
        assert_eq!(g.value(), 0.0);
    }

    #[test]
    fn interferer_sets() {
        let e = planar();
        let c = Constellation::nadir(&[sat(0.0, 0.0)], &[term(0.0, 0.0)], vec![0], 1.0, &e, None).unwrap();
        assert!(interferer_set(&c, 0, &e).is_empty());

        let delta = 80.0;
        let idx: Vec<LatticeIndex> = lattice_patch(LatticeIndex::ORIGIN, 3).collect();
        let sats: Vec<Point3> = idx.iter().map(|&i| regular_satellite_position(i, delta, &e).unwrap()).collect();
        let terms: Vec<Point3> = idx.iter().map(|&i| regular_terminal_position(i, delta, &e).unwrap()).collect();
        let origin = idx.iter().position(|&i| i == LatticeIndex::ORIGIN).unwrap();
        let c = Constellation::nadir(&sats, &terms, (0..idx.len()).collect(), 1.0, &e, None).unwrap();
        assert_eq!(interferer_set(&c, origin, &e).len(), 48);
    }

    #[test]
    fn spherical_horizon_mask() {
        let e = EarthModel::spherical(H).unwrap();
        let fov = field_of_view_angle(&e);
        let r = e.orbit_radius_km();
        let on_cap = |zeta: f64| Point3::new(r * zeta.sin(), 0.0, r * zeta.cos());
        let sats = [on_cap(0.0), on_cap(fov - 1f64.to_radians()), on_cap(fov + 1f64.to_radians())];
        let terms = [Point3::new(0.0, 0.0, e.earth_radius_km)];
        let c = Constellation::nadir(&sats, &terms, vec![0], 1.0, &e, None).unwrap();
        assert_eq!(interferer_set(&c, 0, &e), vec![1]);
    }

    #[test]
    fn snr_only_link() {
        let s = scen(10.0);
        let e = planar();
        let mut c = Constellation::nadir(&[sat(0.0, 0.0)], &[term(0.0, 0.0)], vec![0], 0.0, &e, None).unwrap();
        c.set_uniform_psd(s.psd_max);
        assert_abs_diff_eq!(sinr(&s, &c, 0).unwrap(), 10.0, epsilon = 1e-9);
        let se = spectral_efficiency_spherical(&s, &c).unwrap();
        assert_abs_diff_eq!(se, 11f64.log2() / (4.0 * std::f64::consts::PI * 6378f64.powi(2)), epsilon = 1e-18);
        let empty = Constellation::nadir(&[], &[], vec![], 0.0, &e, None).unwrap();
        assert_eq!(spectral_efficiency_spherical(&s, &empty).unwrap(), 0.0);
    }

    #[test]
    fn two_link_hand_computed() {
        let s = scen(10.0);
        let e = planar();
        let c = Constellation::nadir(
            &[sat(0.0, 0.0), sat(60.0, 0.0)],
            &[term(0.0, 0.0), term(60.0, 0.0)],
            vec![0, 1],
            s.psd_max,
            &e,
            None,
        )
        .unwrap();
        let d = (60.0f64 * 60.0 + H * H).sqrt();
        let theta = (H / d).acos();
        let w = s.sat_pattern.gain(theta).unwrap() * s.gs_pattern.gain(theta).unwrap();
        let expected = s.psd_max * H.powf(-2.5) / (s.psd_max * d.powf(-2.5) * w + 1.0);
        assert_abs_diff_eq!(sinr(&s, &c, 0).unwrap(), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(sinr(&s, &c, 1).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn relabelling_invariance() {
        let s = scen(8.0);
        let e = planar();
        let sats = [sat(0.0, 0.0), sat(40.0, 10.0), sat(-35.0, 50.0)];
        let terms = [term(5.0, 0.0), term(38.0, 4.0), term(-30.0, 45.0)];
        let c = Constellation::aligned(&sats, &terms, vec![0, 1, 2], s.psd_max, &e, None).unwrap();
        let se = spectral_efficiency_spherical(&s, &c).unwrap();
        // permute satellites by (2, 0, 1) and terminals by (1, 2, 0)
        let sp = [sats[2], sats[0], sats[1]];
        let tp = [terms[1], terms[2], terms[0]];
        let assoc = vec![2, 0, 1];
        let c2 = Constellation::aligned(&sp, &tp, assoc, s.psd_max, &e, None).unwrap();
        assert_abs_diff_eq!(spectral_efficiency_spherical(&s, &c2).unwrap(), se, epsilon = 1e-18);
    }

    #[test]
    fn log_law_bound() {
        let s = scen(10.0);
        let e = planar();
        let sats = [sat(0.0, 0.0), sat(30.0, 0.0)];
        let terms = [term(0.0, 0.0), term(30.0, 0.0)];
        let c = Constellation::nadir(&sats, &terms, vec![0, 1], s.psd_max, &e, None).unwrap();
        let g = GainMatrix::compute(&s, &c).unwrap();
        let base = g.sinrs(&c.association, &[s.psd_max; 2], 1.0);
        for sv in base {
            assert!((1.0 + 2.0 * sv).log2() - (1.0 + sv).log2() <= 1.0);
        }
    }

    proptest::proptest! {
        #[test]
        fn sinr_monotone_in_psds(p0 in 0.1f64..2.0, p1 in 0.0f64..2.0, bump in 0.0f64..1.0) {
            let s = scen(10.0);
            let e = planar();
            let sats = [sat(0.0, 0.0), sat(45.0, 12.0), sat(-20.0, -60.0)];
            let terms = [term(3.0, 2.0), term(40.0, 10.0), term(-22.0, -55.0)];
            let c = Constellation::aligned(&sats, &terms, vec![0, 1, 2], 1.0, &e, None).unwrap();
            let g = GainMatrix::compute(&s, &c).unwrap();
            let scale = s.psd_max;
            let base = g.sinrs(&c.association, &[p0 * scale, p1 * scale, scale], 1.0)[0];
            let more_interf = g.sinrs(&c.association, &[p0 * scale, (p1 + bump) * scale, scale], 1.0)[0];
            let more_signal = g.sinrs(&c.association, &[(p0 + bump) * scale, p1 * scale, scale], 1.0)[0];
            proptest::prop_assert!(more_interf <= base * (1.0 + 1e-12));
            proptest::prop_assert!(more_signal >= base * (1.0 - 1e-12));
        }
    }

    #[test]
    fn symmetric_patch_full_power() {
        let s = scen(10.0);
        let e = planar();
        let torus = Torus::for_lattice(4, 4, 60.0).unwrap();
        let mut sats = Vec::new();
        let mut terms = Vec::new();
        for j in 0..4i64 {
            for m in 0..4i64 {
                let idx = LatticeIndex::new(2 * m + j % 2, j).unwrap();
                sats.push(regular_satellite_position(idx, 60.0, &e).unwrap());
                terms.push(regular_terminal_position(idx, 60.0, &e).unwrap());
            }
        }
        let c = Constellation::nadir(&sats, &terms, (0..16).collect(), s.psd_max, &e, Some(torus)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let check = full_power_is_optimal_check(&s, &c, 200, &mut rng).unwrap();
        assert!(check.symmetry.holds());
        assert!(check.full_power_optimal);

        let single = Constellation::nadir(&[sat(0.0, 0.0)], &[term(0.0, 0.0)], vec![0], 1.0, &e, None).unwrap();
        assert!(full_power_is_optimal_check(&s, &single, 50, &mut rng).unwrap().full_power_optimal);
    }

    #[test]
    fn asymmetric_case_flagged() {
        let s = scen(10.0);
        let e = planar();
        let sats = [sat(0.0, 0.0), sat(100.0, 0.0), sat(250.0, 30.0)];
        let terms = [term(0.0, 0.0), term(130.0, 0.0), term(250.0, 0.0)];
        let c = Constellation::aligned(&sats, &terms, vec![0, 1, 2], s.psd_max, &e, None).unwrap();
        let rep = symmetry_conditions(&s, &c).unwrap();
        assert!(!rep.equal_direct_gains);
        assert!(!rep.holds());
    }

    #[test]
    fn beam_region_check() {
        let s = scen(10.0).with_beam_regions(40f64.to_radians(), 40f64.to_radians()).unwrap();
        let e = planar();
        let off = H * 25f64.to_radians().tan();
        let c = Constellation::aligned(&[sat(0.0, 0.0)], &[term(off, 0.0)], vec![0], 1.0, &e, None).unwrap();
        assert_eq!(c.beam_region_violations(&s, &e), vec![0]);
        let ok = Constellation::aligned(&[sat(0.0, 0.0)], &[term(50.0, 0.0)], vec![0], 1.0, &e, None).unwrap();
        assert!(ok.beam_region_violations(&s, &e).is_empty());
    }

    #[test]
    fn scenario_validation_and_serde() {
        let mut s = scen(10.0);
        s.alpha = 1.5;
        assert!(s.validate().is_err());
        let pl = Scenario::power_limited(
            planar(),
            2.5,
            BeamPattern::bessel_deg(10.0).unwrap(),
            BeamPattern::bessel_deg(20.0).unwrap(),
            8.0,
            None,
        )
        .unwrap();
        assert!(pl.psd_max.is_infinite());
        let json = serde_json::to_string(&pl).unwrap();
        assert!(json.contains("\"psd_max\":null"));
        let back: Scenario = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pl);
    }
}
