//! Random streams, point processes and fading draws.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{field_of_view_angle, lattice_density, EarthModel, Point3, Torus};

/// A reproducible random stream keyed by `(master_seed, stream_id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master_seed);
        r.set_stream(self.stream_id);
        r
    }

    /// Child stream for trial `index`; independent of the parent and its siblings.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream { master_seed: self.master_seed, stream_id: splitmix64(self.stream_id ^ splitmix64(index)) }
    }
}

/// `n` i.i.d. uniform points on the sphere of radius `radius`, restricted to the
/// cap of half-angle `theta_max` around `+z`.
pub fn sample_cap<R: Rng + ?Sized>(n: usize, radius: f64, theta_max: f64, rng: &mut R) -> Vec<Point3> {
    let span = 1.0 - theta_max.cos();
    (0..n)
        .map(|_| {
            let zeta = (1.0 - rng.random::<f64>() * span).clamp(-1.0, 1.0).acos();
            let phi = 2.0 * PI * rng.random::<f64>();
            Point3::new(radius * zeta.sin() * phi.cos(), radius * zeta.sin() * phi.sin(), radius * zeta.cos())
        })
        .collect()
}

/// `n` satellites uniform in the shell cap visible from the terminal at `(0, 0, r_e)`.
pub fn sample_bpp_spherical<R: Rng + ?Sized>(n: usize, earth: &EarthModel, rng: &mut R) -> Result<Vec<Point3>> {
    if n == 0 {
        return Err(Error::param("BPP needs at least one point"));
    }
    Ok(sample_cap(n, earth.orbit_radius_km(), field_of_view_angle(earth), rng))
}

/// Points uniform on the torus window at height `z`, count matched to the
/// hexagonal density for spacing `delta`.
pub fn sample_uniform_planar<R: Rng + ?Sized>(delta: f64, window: &Torus, z: f64, rng: &mut R) -> Result<Vec<Point3>> {
    if !(delta > 0.0) {
        return Err(Error::param(format!("expected spacing must be positive, got {delta}")));
    }
    let n = planar_count(delta, window);
    Ok(sample_uniform_count(n, window, z, rng))
}

pub fn planar_count(delta: f64, window: &Torus) -> usize {
    (window.area() * lattice_density(delta)).round() as usize
}

pub fn sample_uniform_count<R: Rng + ?Sized>(n: usize, window: &Torus, z: f64, rng: &mut R) -> Vec<Point3> {
    (0..n)
        .map(|_| Point3::new(rng.random::<f64>() * window.width, rng.random::<f64>() * window.height, z))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FadingRegime {
    None,
    Light,
    Average,
    Heavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    pub b: f64,
    pub m: f64,
    pub omega: f64,
    pub regime: FadingRegime,
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct RegimeEntry {
    b: f64,
    m: f64,
    omega: f64,
}

#[derive(Debug, Deserialize)]
struct FadingFile {
    regimes: BTreeMap<FadingRegime, RegimeEntry>,
}

const BUNDLED_FADING: &str = include_str!("../../data/fading.json");

impl FadingParams {
    pub const NONE: FadingParams = FadingParams { b: 0.0, m: 1.0, omega: 0.0, regime: FadingRegime::None };

    pub fn new(b: f64, m: f64, omega: f64, regime: FadingRegime) -> Result<Self> {
        let p = Self { b, m, omega, regime };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.regime != FadingRegime::None && !(self.b > 0.0 && self.m > 0.0 && self.omega >= 0.0) {
            return Err(Error::param(format!(
                "fading needs b > 0, m > 0, omega ≥ 0 (got b = {}, m = {}, omega = {})",
                self.b, self.m, self.omega
            )));
        }
        Ok(())
    }

    /// Regime values from the bundled parameter file.
    pub fn bundled(regime: FadingRegime) -> Result<Self> {
        Self::from_json(BUNDLED_FADING, regime)
    }

    pub fn from_json(text: &str, regime: FadingRegime) -> Result<Self> {
        if regime == FadingRegime::None {
            return Ok(Self::NONE);
        }
        let file: FadingFile =
            serde_json::from_str(text).map_err(|e| Error::param(format!("fading parameter file: {e}")))?;
        let e = file
            .regimes
            .get(&regime)
            .ok_or_else(|| Error::param(format!("fading parameter file lacks regime {regime:?}")))?;
        Self::new(e.b, e.m, e.omega, regime)
    }

    pub fn from_file(path: &Path, regime: FadingRegime) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::param(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, regime)
    }

    /// `E[ξ] = 2b + ω`.
    pub fn mean_power(&self) -> f64 {
        if self.regime == FadingRegime::None {
            1.0
        } else {
            2.0 * self.b + self.omega
        }
    }
}

/// Power gain `ξ = |A + Z|²`: `A²` is Gamma with shape `m` and mean `ω`, `Z` is
/// circular complex Gaussian with `E|Z|² = 2b`. Regime `None` gives 1.
pub fn sample_shadowed_rician<R: Rng + ?Sized>(params: &FadingParams, rng: &mut R) -> Result<f64> {
    Ok(ShadowedRician::new(params)?.sample(rng))
}

/// Reusable sampler; the Gamma law is set up once.
pub struct ShadowedRician {
    los: Option<Gamma<f64>>,
    sigma: f64,
}

impl ShadowedRician {
    pub fn new(params: &FadingParams) -> Result<Self> {
        params.validate()?;
        if params.regime == FadingRegime::None {
            return Ok(Self { los: None, sigma: 0.0 });
        }
        let los = Gamma::new(params.m, params.omega / params.m)
            .map_err(|e| Error::param(format!("fading Gamma law: {e}")))?;
        Ok(Self { los: Some(los), sigma: params.b.sqrt() })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.los {
            None => 1.0,
            Some(g) => {
                let a = g.sample(rng).sqrt();
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                let x = a + self.sigma * re;
                let y = self.sigma * im;
                x * x + y * y
            }
        }
    }
}
