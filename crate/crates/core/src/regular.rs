//! Closed-form analytics of the regular configuration.
//!
//! Satellites sit on the hexagonal lattice at height `h` looking to nadir and the
//! terminals sit on the matched ground lattice looking to zenith, so each
//! interferer is seen under the same off-axis angle by both antennas. The
//! interference sum is split with a smooth radial cutoff `χ`: sites with
//! `ρ < 2R_c` are summed directly with weight `1 − χ(ρ)` and the remainder is
//! replaced by the density-weighted continuum integral of `f χ`. Because `χ` is
//! C∞ the lattice/continuum difference of the tail is far below the tolerance.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::PatternKind;
use crate::error::{Error, Result};
use crate::geometry::{lattice_density, LatticeIndex};
use crate::link::{log2_1p, Scenario};
use crate::quad::gauss_legendre;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Direct-sum radius in units of `Δ`.
    pub cutoff_radius_multiplier: f64,
    /// Relative change allowed between successive doublings of the cutoff.
    pub tail_tolerance: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { cutoff_radius_multiplier: 24.0, tail_tolerance: 1e-8 }
    }
}

const MAX_DOUBLINGS: usize = 4;
const TAIL_PANELS: usize = 1024;

/// Off-axis angle of lattice site `idx` seen from the origin terminal.
pub fn theta_reg(idx: LatticeIndex, delta: f64, h: f64) -> f64 {
    let (x, y) = idx.planar_offset(delta);
    (h / (x * x + y * y + h * h).sqrt()).clamp(-1.0, 1.0).acos()
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, C∞ in between.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularAnalysis {
    pub scen: Scenario,
    pub delta: f64,
    pub truncation: Truncation,
}

impl RegularAnalysis {
    pub fn new(scen: Scenario, delta: f64, truncation: Truncation) -> Result<Self> {
        scen.validate()?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param(format!("lattice spacing must be positive, got {delta}")));
        }
        if !(truncation.tail_tolerance > 0.0) || !(truncation.cutoff_radius_multiplier >= 2.0) {
            return Err(Error::param("truncation needs tail_tolerance > 0 and cutoff multiplier ≥ 2"));
        }
        Ok(Self { scen, delta, truncation })
    }

    pub fn with_defaults(scen: Scenario, delta: f64) -> Result<Self> {
        Self::new(scen, delta, Truncation::default())
    }

    fn h(&self) -> f64 {
        self.scen.earth.altitude_km
    }

    /// Path gain times combined pattern for an interferer at horizontal distance² `rho2`.
    #[inline]
    fn kernel(&self, rho2: f64) -> f64 {
        let h = self.h();
        let d2 = rho2 + h * h;
        let u = h / d2.sqrt();
        d2.powf(-0.5 * self.scen.alpha) * self.scen.sat_pattern.gain_from_cos(u) * self.scen.gs_pattern.gain_from_cos(u)
    }

    fn far_field_gain(&self) -> f64 {
        self.scen.sat_pattern.gain_from_cos(0.0) * self.scen.gs_pattern.gain_from_cos(0.0)
    }

    /// `λ ∫ f χ dA` with the cutoff starting at `r_c` and reaching one at `2 r_c`.
    fn continuum_tail(&self, r_c: f64) -> Result<f64> {
        let lambda = lattice_density(self.delta);
        let r_b = 2.0 * r_c;
        let band = gauss_legendre(
            |rho| self.kernel(rho * rho) * smooth_step((rho - r_c) / r_c) * 2.0 * PI * rho,
            r_c,
            r_b,
            64,
        );
        Ok(lambda * band + self.far_tail_beyond(r_b)?)
    }

    /// `λ ∫_{ρ > r} f dA`, unnormalised, for nadir/zenith pointing.
    pub(crate) fn far_tail_beyond(&self, r: f64) -> Result<f64> {
        let h = self.h();
        let alpha = self.scen.alpha;
        let lambda = lattice_density(self.delta);
        // substitute u = h/d: ∫ρ f dρ = h^{2-α} ∫ u^{α-3} W(u) du
        let u_b = h / (r * r + h * h).sqrt();
        let w = |u: f64| self.scen.sat_pattern.gain_from_cos(u) * self.scen.gs_pattern.gain_from_cos(u);
        let far = if alpha - 2.0 > 1e-9 {
            let e = alpha - 2.0;
            let s_b = u_b.powf(e);
            gauss_legendre(|s| w(s.powf(1.0 / e)), 0.0, s_b, TAIL_PANELS) / e
        } else {
            if self.far_field_gain() > 0.0 {
                return Err(Error::Convergence(
                    "path-loss exponent 2 with a pattern that does not vanish at the horizon".into(),
                ));
            }
            let null = [&self.scen.sat_pattern, &self.scen.gs_pattern]
                .iter()
                .filter(|p| p.kind() == PatternKind::NoSidelobe)
                .map(|p| p.first_null_beamwidth())
                .fold(f64::INFINITY, f64::min);
            let u_lo = null.cos().min(u_b);
            gauss_legendre(|u| w(u) / u, u_lo, u_b, TAIL_PANELS)
        };
        Ok(lambda * 2.0 * PI * h.powf(2.0 - alpha) * far)
    }

    /// `Σ_{sites ≠ origin} (1 − χ) f` around a terminal at horizontal offset `(x, y)`.
    fn direct_sum(&self, x: f64, y: f64, r_c: f64) -> f64 {
        let delta = self.delta;
        let r_b = 2.0 * r_c;
        let row = delta * SQRT3 / 2.0;
        let j_lo = ((y - r_b) / row).floor() as i64;
        let j_hi = ((y + r_b) / row).ceil() as i64;
        let mut total = 0.0;
        for j in j_lo..=j_hi {
            let dy = j as f64 * row - y;
            let span2 = r_b * r_b - dy * dy;
            if span2 < 0.0 {
                continue;
            }
            let span = span2.sqrt();
            let half = delta / 2.0;
            let mut i = ((x - span) / half).floor() as i64;
            if (i - j).rem_euclid(2) != 0 {
                i -= 1;
            }
            let i_hi = ((x + span) / half).ceil() as i64;
            while i <= i_hi {
                if !(i == 0 && j == 0) {
                    let dx = i as f64 * half - x;
                    let rho2 = dx * dx + dy * dy;
                    if rho2 < r_b * r_b {
                        let rho = rho2.sqrt();
                        total += self.kernel(rho2) * (1.0 - smooth_step((rho - r_c) / r_c));
                    }
                }
                i += 2;
            }
        }
        total
    }

    /// Unnormalised interference `Σ d^{-α} W` at offset `(x, y)` for a given cutoff.
    fn interference_sum(&self, x: f64, y: f64, r_c: f64, tail: f64) -> f64 {
        self.direct_sum(x, y, r_c) + tail
    }

    /// Converged cutoff radius and the matching continuum tail.
    fn converged_cutoff(&self) -> Result<(f64, f64)> {
        let mut r_c = self.truncation.cutoff_radius_multiplier * self.delta;
        let tail = self.continuum_tail(r_c)?;
        let mut prev = self.interference_sum(0.0, 0.0, r_c, tail);
        for _ in 0..MAX_DOUBLINGS {
            let r2 = 2.0 * r_c;
            let t2 = self.continuum_tail(r2)?;
            let next = self.interference_sum(0.0, 0.0, r2, t2);
            let scale = next.abs().max(f64::MIN_POSITIVE);
            if (next - prev).abs() <= self.truncation.tail_tolerance * scale || next == 0.0 {
                return Ok((r2, t2));
            }
            prev = next;
            r_c = r2;
        }
        Err(Error::Convergence(format!(
            "interference sum did not settle to {} after {MAX_DOUBLINGS} cutoff doublings (Δ = {} km)",
            self.truncation.tail_tolerance, self.delta
        )))
    }

    /// Interference-to-noise ratio at the origin terminal for PSD `psd`.
    pub fn eta(&self, psd: f64) -> Result<f64> {
        if psd == 0.0 {
            return Ok(0.0);
        }
        let (r_c, tail) = self.converged_cutoff()?;
        Ok(psd / self.scen.noise_sigma2 * self.interference_sum(0.0, 0.0, r_c, tail))
    }

    /// Serving-link SNR `γ(p) = p h^{-α} / σ²`.
    pub fn gamma(&self, psd: f64) -> f64 {
        psd / self.scen.noise_sigma2 * self.h().powf(-self.scen.alpha)
    }

    /// Spectral efficiency in bits/s/Hz/km².
    pub fn r_reg(&self, psd: f64) -> Result<f64> {
        let eta = self.eta(psd)?;
        Ok(lattice_density(self.delta) * log2_1p(self.gamma(psd) / (eta + 1.0)))
    }

    /// SINR of a terminal displaced by `(x, y)` from beneath its serving satellite,
    /// all satellites nadir-pointing and the terminal zenith-pointing.
    ///
    /// Sites within the base cutoff are summed exactly at every grid point; the
    /// remainder is evaluated once at the cell centre, where its gradient vanishes
    /// by lattice symmetry.
    pub fn sinr_grid(&self, psd: f64, n: usize) -> Result<SinrGrid> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::param("SINR grid needs an odd point count of at least 3"));
        }
        let (r_full, tail_full) = self.converged_cutoff()?;
        let r_c = self.truncation.cutoff_radius_multiplier * self.delta;
        let tail = self.interference_sum(0.0, 0.0, r_full, tail_full) - self.direct_sum(0.0, 0.0, r_c);
        let hx = self.delta / 2.0;
        let hy = self.delta * SQRT3 / 2.0;
        let coord = |k: usize, half: f64| -half + 2.0 * half * k as f64 / (n - 1) as f64;
        let values: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (a, b) = (idx / n, idx % n);
                let (x, y) = (coord(b, hx), coord(a, hy));
                let signal = psd * self.kernel(x * x + y * y);
                let interf = psd * self.interference_sum(x, y, r_c, tail);
                signal / (interf + self.scen.noise_sigma2)
            })
            .collect();
        Ok(SinrGrid { n, half_x: hx, half_y: hy, values })
    }

    /// Smallest second difference of `W_ij / W_00` along x, y and both diagonals
    /// over an `n × n` grid of the fundamental cell, for sites within `rings`
    /// lattice rings of the origin.
    pub fn ratio_convexity(&self, n: usize, rings: i64) -> Result<f64> {
        let hx = self.delta / 2.0;
        let hy = self.delta * SQRT3 / 2.0;
        let h = self.h();
        let w = |dx: f64, dy: f64| {
            let u = h / (dx * dx + dy * dy + h * h).sqrt();
            self.scen.sat_pattern.gain_from_cos(u) * self.scen.gs_pattern.gain_from_cos(u)
        };
        let step_x = 2.0 * hx / (n - 1) as f64;
        let step_y = 2.0 * hy / (n - 1) as f64;
        let mut worst = f64::INFINITY;
        for idx in crate::geometry::lattice_patch(LatticeIndex::ORIGIN, rings) {
            if idx == LatticeIndex::ORIGIN {
                continue;
            }
            let (sx, sy) = idx.planar_offset(self.delta);
            let ratio = |x: f64, y: f64| w(sx - x, sy - y) / w(-x, -y);
            for a in 1..n - 1 {
                for b in 1..n - 1 {
                    let x = -hx + b as f64 * step_x;
                    let y = -hy + a as f64 * step_y;
                    let c = ratio(x, y);
                    let scale = c.abs().max(f64::MIN_POSITIVE);
                    for (ex, ey) in [(step_x, 0.0), (0.0, step_y), (step_x, step_y), (step_x, -step_y)] {
                        let d2 = ratio(x + ex, y + ey) - 2.0 * c + ratio(x - ex, y - ey);
                        worst = worst.min(d2 / scale);
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// SINR samples over the fundamental cell `[−Δ/2, Δ/2] × [−Δ√3/2, Δ√3/2]`, row-major in y.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrGrid {
    pub n: usize,
    pub half_x: f64,
    pub half_y: f64,
    pub values: Vec<f64>,
}

impl SinrGrid {
    /// Grid offsets `(column, row)` of the maximiser from the centre point.
    pub fn argmax_offset(&self) -> (i64, i64) {
        let best = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let c = (self.n / 2) as i64;
        ((best % self.n) as i64 - c, (best / self.n) as i64 - c)
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.n + col]
    }
}

pub fn eta(psd: f64, delta: f64, scen: &Scenario) -> Result<f64> {
    RegularAnalysis::with_defaults(scen.clone(), delta)?.eta(psd)
}

pub fn r_reg(psd: f64, delta: f64, scen: &Scenario) -> Result<f64> {
    RegularAnalysis::with_defaults(scen.clone(), delta)?.r_reg(psd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaOptimum {
    pub delta: f64,
    pub rate: f64,
    /// Set when the best grid point is an end of the search range.
    pub boundary: Option<Boundary>,
}

const GRID_POINTS: usize = 128;

/// Log-spaced grid search followed by golden-section refinement in `ln Δ`.
pub fn optimize_delta(psd: f64, scen: &Scenario, range: (f64, f64)) -> Result<DeltaOptimum> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::param(format!("Δ range must be positive and increasing, got [{lo}, {hi}]")));
    }
    let (ll, lh) = (lo.ln(), hi.ln());
    let at = |k: usize| (ll + (lh - ll) * k as f64 / (GRID_POINTS - 1) as f64).exp();
    let rates: Vec<f64> = (0..GRID_POINTS)
        .into_par_iter()
        .map(|k| r_reg(psd, at(k), scen))
        .collect::<Result<_>>()?;
    let best = rates
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if best == 0 || best == GRID_POINTS - 1 {
        let boundary = if best == 0 { Boundary::Lower } else { Boundary::Upper };
        return Ok(DeltaOptimum { delta: at(best), rate: rates[best], boundary: Some(boundary) });
    }
    let f = |x: f64| r_reg(psd, x.exp(), scen);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (at(best - 1).ln(), at(best + 1).ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a) > 1e-7 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let rate = f(x)?;
    let (delta, rate) = if rate >= rates[best] { (x.exp(), rate) } else { (at(best), rates[best]) };
    Ok(DeltaOptimum { delta, rate, boundary: None })
}

/// One piece of a piecewise-constant PSD profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePiece {
    /// Share of the total bandwidth, in `(0, 1]`.
    pub fraction: f64,
    pub psd_max: f64,
}

/// Bandwidth-weighted average of the per-piece optimised regular efficiency.
pub fn wideband_upper_bound(scen: &Scenario, profile: &[ProfilePiece], range: (f64, f64)) -> Result<f64> {
    let total: f64 = profile.iter().map(|p| p.fraction).sum();
    if profile.is_empty() || (total - 1.0).abs() > 1e-9 || profile.iter().any(|p| !(p.fraction > 0.0)) {
        return Err(Error::param("PSD profile fractions must be positive and sum to one"));
    }
    let mut acc = 0.0;
    for piece in profile {
        if piece.psd_max < 0.0 {
            return Err(Error::param("PSD levels must be non-negative"));
        }
        if piece.psd_max > 0.0 {
            acc += piece.fraction * optimize_delta(piece.psd_max, scen, range)?.rate;
        }
    }
    Ok(acc)
}

/// Number of same-parity lattice sites `(i, j) ≠ 0` with `i² + 3j² ≤ 4h² tan²(γ_g/2) / Δ²`.
pub fn count_in_beam_region(delta: f64, h: f64, gamma_g: f64) -> Result<u64> {
    if !(delta > 0.0 && h > 0.0 && gamma_g > 0.0 && gamma_g < PI) {
        return Err(Error::param("beam-region count needs Δ, h > 0 and γ_g in (0°, 180°)"));
    }
    let t = (0.5 * gamma_g).tan();
    Ok(count_within_quad_norm(4.0 * h * h * t * t / (delta * delta)))
}

/// Same-parity pairs `(i, j) ≠ 0` with `i² + 3j² ≤ threshold`.
pub fn count_within_quad_norm(threshold: f64) -> u64 {
    if threshold < 1.0 {
        return 0;
    }
    let t = threshold * (1.0 + 1e-12);
    let j_max = (t / 3.0).sqrt().floor() as i64;
    let mut count = 0u64;
    for j in -j_max..=j_max {
        let rem = t - 3.0 * (j * j) as f64;
        let i_max = rem.sqrt().floor() as i64;
        let mut i = -i_max;
        if (i - j).rem_euclid(2) != 0 {
            i += 1;
        }
        while i <= i_max {
            if !(i == 0 && j == 0) {
                count += 1;
            }
            i += 2;
        }
    }
    count
}

/// Regular efficiency when every in-region interferer contributes only the
/// minimum in-region power and all others nothing.
pub fn beam_region_upper_bound(scen: &Scenario, delta: f64) -> Result<f64> {
    scen.validate()?;
    if !(scen.gamma_s < PI && scen.gamma_g < PI) {
        return Err(Error::param("beam-region bound needs γ_s, γ_g below 180°"));
    }
    let psd = scen.full_band_psd();
    if !psd.is_finite() {
        return Err(Error::param("beam-region bound needs a finite PSD"));
    }
    let h = scen.earth.altitude_km;
    let alpha = scen.alpha;
    let t = (0.5 * scen.gamma_g).tan();
    let i_min = psd
        * (h * h * (1.0 + t * t)).powf(-0.5 * alpha)
        * scen.sat_pattern.gain(scen.gamma_s)?
        * scen.gs_pattern.gain(scen.gamma_g)?;
    let x = count_in_beam_region(delta, h, scen.gamma_g)? as f64;
    let snr_num = psd * h.powf(-alpha);
    Ok(lattice_density(delta) * log2_1p(snr_num / (x * i_min + scen.noise_sigma2)))
}
