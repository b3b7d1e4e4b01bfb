//! Coordinates, hexagonal lattice placement, off-axis angles and the planar
//! projection.
//!
//! Positions are Cartesian kilometres with the Earth's centre at the origin. In
//! planar mode the two layers are the horizontal planes `z = r_e` (terminals)
//! and `z = r_e + h` (satellites), so only the height difference `h` enters any
//! distance.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6378.0;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurfaceMode {
    Spherical,
    Planar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel {
    pub earth_radius_km: f64,
    pub altitude_km: f64,
    pub mode: SurfaceMode,
}

impl EarthModel {
    pub fn new(earth_radius_km: f64, altitude_km: f64, mode: SurfaceMode) -> Result<Self> {
        if !(earth_radius_km > 0.0 && earth_radius_km.is_finite()) {
            return Err(Error::param(format!("earth radius must be positive, got {earth_radius_km}")));
        }
        if !(altitude_km > 0.0 && altitude_km.is_finite()) {
            return Err(Error::param(format!("altitude must be positive, got {altitude_km}")));
        }
        Ok(Self { earth_radius_km, altitude_km, mode })
    }

    pub fn planar(altitude_km: f64) -> Result<Self> {
        Self::new(EARTH_RADIUS_KM, altitude_km, SurfaceMode::Planar)
    }

    pub fn spherical(altitude_km: f64) -> Result<Self> {
        Self::new(EARTH_RADIUS_KM, altitude_km, SurfaceMode::Spherical)
    }

    /// Radius of the satellite shell (or height of the satellite plane).
    #[inline]
    pub fn orbit_radius_km(&self) -> f64 {
        self.earth_radius_km + self.altitude_km
    }

    #[inline]
    pub fn surface_area_km2(&self) -> f64 {
        4.0 * PI * self.earth_radius_km * self.earth_radius_km
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Result<Point3> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::DegenerateGeometry("zero-length direction"));
        }
        Ok(self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Index pair `(i, j)` of a hexagonal lattice site; always `i ≡ j (mod 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeIndex {
    i: i64,
    j: i64,
}

impl LatticeIndex {
    pub fn new(i: i64, j: i64) -> Result<Self> {
        if (i - j).rem_euclid(2) != 0 {
            return Err(Error::InvalidIndex { i, j });
        }
        Ok(Self { i, j })
    }

    pub const ORIGIN: LatticeIndex = LatticeIndex { i: 0, j: 0 };

    #[inline]
    pub fn i(self) -> i64 {
        self.i
    }

    #[inline]
    pub fn j(self) -> i64 {
        self.j
    }

    /// Horizontal offset `(iΔ/2, jΔ√3/2)` of the site.
    #[inline]
    pub fn planar_offset(self, delta: f64) -> (f64, f64) {
        (self.i as f64 * delta / 2.0, self.j as f64 * delta * SQRT3 / 2.0)
    }

    /// Squared horizontal distance to the origin in units of `(Δ/2)²`: `i² + 3j²`.
    #[inline]
    pub fn quad_norm(self) -> i64 {
        self.i * self.i + 3 * self.j * self.j
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("lattice spacing must be positive, got {delta}")))
    }
}

pub fn regular_satellite_position(idx: LatticeIndex, delta: f64, earth: &EarthModel) -> Result<Point3> {
    check_delta(delta)?;
    let (x, y) = idx.planar_offset(delta);
    Ok(Point3::new(x, y, earth.orbit_radius_km()))
}

pub fn regular_terminal_position(idx: LatticeIndex, delta: f64, earth: &EarthModel) -> Result<Point3> {
    check_delta(delta)?;
    let (x, y) = idx.planar_offset(delta);
    Ok(Point3::new(x, y, earth.earth_radius_km))
}

/// Angle between a beam's boresight and the direction from the beam origin to
/// `target`, in `[0, π]`.
pub fn off_axis_angle(beam_origin: Point3, look_dir: Point3, target: Point3) -> Result<f64> {
    let look = look_dir.normalized()?;
    let to_target = (target - beam_origin).normalized()?;
    Ok(look.dot(to_target).clamp(-1.0, 1.0).acos())
}

/// Earth-central half-angle of the cap of satellites above a terminal's horizon.
pub fn field_of_view_angle(earth: &EarthModel) -> f64 {
    (earth.earth_radius_km / earth.orbit_radius_km()).acos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    Satellite,
    Terminal,
}

/// Radial projection onto the planar layer: `(x, y, z) -> ρ(x, y, z)` with
/// `ρ = layer height / z`.
pub fn project_to_plane(p: Point3, earth: &EarthModel, layer: Layer) -> Result<Point3> {
    if !(p.z > 0.0) {
        return Err(Error::BelowHorizon(p.z));
    }
    let height = match layer {
        Layer::Satellite => earth.orbit_radius_km(),
        Layer::Terminal => earth.earth_radius_km,
    };
    let rho = height / p.z;
    Ok(Point3::new(p.x * rho, p.y * rho, height))
}

/// Sites per km² of a hexagonal lattice with nearest-neighbour spacing `delta`.
pub fn lattice_density(delta: f64) -> f64 {
    2.0 / (SQRT3 * delta * delta)
}

/// The `(2r+1)²` lattice sites around `center`: rows `cj-r..=cj+r`, each with
/// `2r+1` columns. Generated on demand.
pub fn lattice_patch(center: LatticeIndex, radius: i64) -> impl Iterator<Item = LatticeIndex> {
    let (ci, cj) = (center.i, center.j);
    (cj - radius..=cj + radius).flat_map(move |j| {
        let shift = (j - cj).rem_euclid(2);
        (-radius..=radius).map(move |k| LatticeIndex { i: ci + shift + 2 * k, j })
    })
}

/// Periodic planar window `[0, width) × [0, height)`. Displacements use the
/// minimum image, which removes edge effects when a finite window stands in for
/// the infinite plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Torus {
    pub width: f64,
    pub height: f64,
}

impl Torus {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::param(format!("window must have positive extent, got {width} x {height}")));
        }
        Ok(Self { width, height })
    }

    /// Window holding `cols × rows` lattice cells: width `cols·Δ`, height `rows·Δ√3/2`.
    /// `rows` must be even so the window respects the lattice period.
    pub fn for_lattice(cols: usize, rows: usize, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if cols == 0 || rows == 0 || !rows.is_multiple_of(2) {
            return Err(Error::param(format!(
                "lattice window needs cols > 0 and an even, positive row count (got {cols} x {rows})"
            )));
        }
        Self::new(cols as f64 * delta, rows as f64 * delta * SQRT3 / 2.0)
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    #[inline]
    fn wrap_component(d: f64, period: f64) -> f64 {
        d - period * (d / period).round()
    }

    /// Minimum-image horizontal displacement; `z` is left untouched.
    #[inline]
    pub fn wrap(&self, d: Point3) -> Point3 {
        Point3::new(
            Self::wrap_component(d.x, self.width),
            Self::wrap_component(d.y, self.height),
            d.z,
        )
    }

    /// Maps a point into the fundamental window.
    pub fn canonical(&self, p: Point3) -> Point3 {
        Point3::new(p.x.rem_euclid(self.width), p.y.rem_euclid(self.height), p.z)
    }
}
