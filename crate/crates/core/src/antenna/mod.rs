//! Unit-peak beam patterns.
//!
//! The base pattern is `g(θ) = 4 |J₁(K sin θ) / (K sin θ)|²` with `K` fixed by the
//! first-null beamwidth `B` through `sin B = 3.8317 / K`. The pattern is defined
//! on `[0°, 90°]`; larger off-axis angles take the 90° value.

pub mod bessel;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use bessel::{j1_over_x, j2, J1_FIRST_ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternKind {
    /// The Bessel pattern itself, sidelobes included.
    Bessel,
    /// Running maximum of the Bessel pattern over `[θ, 90°]`: the tightest
    /// non-increasing upper envelope.
    MonotoneEnvelope,
    /// Main lobe only; zero from the first null outward.
    NoSidelobe,
}

/// Pattern description as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternConfig {
    pub kind: PatternKind,
    pub first_null_beamwidth_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PatternConfig", into = "PatternConfig")]
pub struct BeamPattern {
    kind: PatternKind,
    beamwidth: f64,
    k: f64,
    null_sin: f64,
    /// Sidelobe maxima `(x, g)` for `0 < x ≤ K`, ascending in `x` (and descending in `g`).
    peaks: Vec<(f64, f64)>,
}

impl TryFrom<PatternConfig> for BeamPattern {
    type Error = Error;
    fn try_from(c: PatternConfig) -> Result<Self> {
        BeamPattern::new(c.kind, c.first_null_beamwidth_deg.to_radians())
    }
}

impl From<BeamPattern> for PatternConfig {
    fn from(p: BeamPattern) -> Self {
        PatternConfig { kind: p.kind, first_null_beamwidth_deg: p.beamwidth.to_degrees() }
    }
}

#[inline]
fn bessel_value(x: f64) -> f64 {
    let r = j1_over_x(x);
    4.0 * r * r
}

impl BeamPattern {
    /// `first_null_beamwidth` in radians, within `(0, π/2]`.
    pub fn new(kind: PatternKind, first_null_beamwidth: f64) -> Result<Self> {
        if !(first_null_beamwidth > 0.0 && first_null_beamwidth <= FRAC_PI_2 + 1e-15) {
            return Err(Error::param(format!(
                "first-null beamwidth must lie in (0°, 90°], got {}°",
                first_null_beamwidth.to_degrees()
            )));
        }
        let null_sin = first_null_beamwidth.sin();
        let k = J1_FIRST_ZERO / null_sin;
        let peaks = if kind == PatternKind::MonotoneEnvelope { sidelobe_peaks(k) } else { Vec::new() };
        Ok(Self { kind, beamwidth: first_null_beamwidth, k, null_sin, peaks })
    }

    pub fn bessel_deg(first_null_deg: f64) -> Result<Self> {
        Self::new(PatternKind::Bessel, first_null_deg.to_radians())
    }

    pub fn with_kind(&self, kind: PatternKind) -> Self {
        Self::new(kind, self.beamwidth).expect("beamwidth already validated")
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    /// First-null beamwidth in radians.
    pub fn first_null_beamwidth(&self) -> f64 {
        self.beamwidth
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Gain at off-axis angle `theta` (radians). Angles past 90° take the 90° value.
    pub fn gain(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(Error::Domain(format!("off-axis angle must be non-negative, got {theta}")));
        }
        Ok(self.gain_at_sin(theta.min(FRAC_PI_2).sin()))
    }

    /// Gain from the cosine of the off-axis angle; `cos θ ≤ 0` maps to the 90° value.
    #[inline]
    pub fn gain_from_cos(&self, cos_theta: f64) -> f64 {
        let s = if cos_theta <= 0.0 { 1.0 } else { (1.0 - cos_theta * cos_theta).max(0.0).sqrt() };
        self.gain_at_sin(s)
    }

    #[inline]
    fn gain_at_sin(&self, s: f64) -> f64 {
        let x = self.k * s;
        match self.kind {
            PatternKind::Bessel => bessel_value(x),
            PatternKind::NoSidelobe => {
                if s >= self.null_sin {
                    0.0
                } else {
                    bessel_value(x)
                }
            }
            PatternKind::MonotoneEnvelope => {
                let mut v = bessel_value(x).max(bessel_value(self.k));
                let next = self.peaks.partition_point(|&(px, _)| px < x);
                if let Some(&(_, pv)) = self.peaks.get(next) {
                    v = v.max(pv);
                }
                v
            }
        }
    }

    /// Off-axis angle of the half-power point on the main lobe, by bisection.
    pub fn half_power_angle(&self) -> f64 {
        let (mut lo, mut hi) = (0.0, self.beamwidth);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if bessel_value(self.k * mid.sin()) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Local maxima of `|J₁(x)/x|²` on `(0, K]`: the zeros of J₂.
fn sidelobe_peaks(k: f64) -> Vec<(f64, f64)> {
    let step = 0.05;
    let mut peaks = Vec::new();
    let mut a = J1_FIRST_ZERO;
    let mut fa = j2(a);
    while a < k {
        let b = (a + step).min(k);
        let fb = j2(b);
        if fa == 0.0 {
            peaks.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = j2(mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            peaks.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    peaks.into_iter().map(|x| (x, bessel_value(x))).collect()
}

/// Product `w_s(θ_sat) · w_g(θ_gs)`.
pub fn combined_gain(sat: &BeamPattern, gs: &BeamPattern, theta_sat: f64, theta_gs: f64) -> Result<f64> {
    Ok(sat.gain(theta_sat)? * gs.gain(theta_gs)?)
}
