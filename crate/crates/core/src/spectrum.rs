//! Hexagonal subband reuse.
//!
//! The band is split into `M = m² + mn + n²` equal subbands. Frequency-cell
//! centres form a triangular lattice of spacing `L/√M` (flat-top hexagons of side
//! `L/√(3M)`); a centre's label is its coset modulo the co-channel sublattice
//! spanned by the `(m, n)` shift and its 60° rotation, so equal labels repeat at
//! distance `L`. Each centre is won by its nearest terminal and a terminal uses
//! the labels it wins.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Torus};
use crate::link::{wideband_sum_rate, Constellation, GainMatrix, Scenario};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// All `m² + mn + n² ≤ max_m` with `m, n ≥ 0`, `(m, n) ≠ (0, 0)`, ascending.
pub fn valid_reuse_numbers(max_m: u32) -> Vec<u32> {
    let mut set = BTreeSet::new();
    let mut m = 0u32;
    while m * m <= max_m {
        let mut n = 0u32;
        while m * m + m * n + n * n <= max_m {
            if m + n > 0 {
                set.insert(m * m + m * n + n * n);
            }
            n += 1;
        }
        m += 1;
    }
    set.into_iter().collect()
}

/// The shift `(m, n)`, `m ≥ n`, realising reuse number `big_m`.
pub fn reuse_shift(big_m: u32) -> Result<(u32, u32)> {
    let mut m = 0u32;
    while m * m <= big_m {
        for n in 0..=m {
            if m * m + m * n + n * n == big_m {
                return Ok((m, n));
            }
        }
        m += 1;
    }
    let valid = valid_reuse_numbers(big_m.saturating_mul(2).saturating_add(8));
    let below = valid.iter().copied().rfind(|&v| v < big_m);
    let above = valid.iter().copied().find(|&v| v > big_m).unwrap_or(big_m + 1);
    Err(Error::InvalidReuse { m: big_m, below, above })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HexCenter {
    pub x: f64,
    pub y: f64,
    /// Subband label in `1..=M`.
    pub label: u32,
}

/// Frequency-cell centres with labels, covering `window`.
///
/// Centres are `offset + p·a₁ + q·a₂` with `a₁ = s(√3/2, 1/2)`, `a₂ = s(0, 1)`,
/// `s = L/√M`. A window smaller than one cell still receives the centre nearest
/// to its middle.
pub fn hex_layout(big_m: u32, reuse_distance: f64, window: &Torus, offset: (f64, f64)) -> Result<Vec<HexCenter>> {
    let (m, n) = reuse_shift(big_m)?;
    if !(reuse_distance > 0.0 && reuse_distance.is_finite()) {
        return Err(Error::param(format!("reuse distance must be positive, got {reuse_distance}")));
    }
    let s = reuse_distance / (big_m as f64).sqrt();
    let (ax, ay) = (s * SQRT3 / 2.0, s / 2.0);
    let (ox, oy) = (offset.0.rem_euclid(window.width), offset.1.rem_euclid(window.height));
    let big = big_m as i64;
    let (mi, ni) = (m as i64, n as i64);
    let key = |p: i64, q: i64| ((p * (mi + ni) + q * ni).rem_euclid(big), (q * mi - p * ni).rem_euclid(big));
    // labels follow the lexicographic order of the M coset keys
    let mut keys: Vec<(i64, i64)> = Vec::with_capacity(big_m as usize);
    for p in 0..big {
        for q in 0..big {
            keys.push(key(p, q));
        }
    }
    keys.sort_unstable();
    keys.dedup();
    debug_assert_eq!(keys.len(), big_m as usize);
    let label = |p: i64, q: i64| keys.binary_search(&key(p, q)).expect("coset key enumerated") as u32 + 1;

    let p_lo = ((-ox) / ax).floor() as i64 - 1;
    let p_hi = ((window.width - ox) / ax).ceil() as i64 + 1;
    let mut centers = Vec::new();
    for p in p_lo..=p_hi {
        let x = ox + p as f64 * ax;
        if x < 0.0 || x >= window.width {
            continue;
        }
        let base = oy + p as f64 * ay;
        let q_lo = ((-base) / s).floor() as i64 - 1;
        let q_hi = ((window.height - base) / s).ceil() as i64 + 1;
        for q in q_lo..=q_hi {
            let y = base + q as f64 * s;
            if (0.0..window.height).contains(&y) {
                centers.push(HexCenter { x, y, label: label(p, q) });
            }
        }
    }
    if centers.is_empty() {
        let (cx, cy) = (window.width / 2.0 - ox, window.height / 2.0 - oy);
        let p = (cx / ax).round() as i64;
        let q = ((cy - p as f64 * ay) / s).round() as i64;
        let c = window.canonical(Point3::new(ox + p as f64 * ax, oy + p as f64 * ay + q as f64 * s, 0.0));
        centers.push(HexCenter { x: c.x, y: c.y, label: label(p, q) });
    }
    Ok(centers)
}

/// Bucket grid over a torus for nearest-terminal queries.
struct CellGrid<'a> {
    torus: Torus,
    nx: usize,
    ny: usize,
    cw: f64,
    ch: f64,
    cells: Vec<Vec<usize>>,
    pts: &'a [(f64, f64)],
}

impl<'a> CellGrid<'a> {
    fn new(torus: Torus, pts: &'a [(f64, f64)]) -> Self {
        let target = (pts.len() as f64 / 2.0).max(1.0);
        let aspect = torus.width / torus.height;
        let nx = ((target * aspect).sqrt().floor() as usize).max(1);
        let ny = ((target / aspect).sqrt().floor() as usize).max(1);
        let (cw, ch) = (torus.width / nx as f64, torus.height / ny as f64);
        let mut cells = vec![Vec::new(); nx * ny];
        for (k, &(x, y)) in pts.iter().enumerate() {
            let cx = ((x.rem_euclid(torus.width) / cw) as usize).min(nx - 1);
            let cy = ((y.rem_euclid(torus.height) / ch) as usize).min(ny - 1);
            cells[cy * nx + cx].push(k);
        }
        Self { torus, nx, ny, cw, ch, cells, pts }
    }

    fn nearest(&self, x: f64, y: f64) -> usize {
        let cx = ((x.rem_euclid(self.torus.width) / self.cw) as usize).min(self.nx - 1) as i64;
        let cy = ((y.rem_euclid(self.torus.height) / self.ch) as usize).min(self.ny - 1) as i64;
        let mut best = (f64::INFINITY, usize::MAX);
        let max_ring = self.nx.max(self.ny) as i64;
        for ring in 0..=max_ring {
            // everything in rings beyond `ring` lies at least this far away
            let reach = (ring as f64 - 1.0) * self.cw.min(self.ch);
            if best.0.is_finite() && best.0.sqrt() < reach {
                break;
            }
            let mut visit = |gx: i64, gy: i64| {
                let ix = gx.rem_euclid(self.nx as i64) as usize;
                let iy = gy.rem_euclid(self.ny as i64) as usize;
                for &k in &self.cells[iy * self.nx + ix] {
                    let d = self.torus.wrap(Point3::new(self.pts[k].0 - x, self.pts[k].1 - y, 0.0));
                    let d2 = d.x * d.x + d.y * d.y;
                    if d2 < best.0 || (d2 == best.0 && k < best.1) {
                        best = (d2, k);
                    }
                }
            };
            if ring == 0 {
                visit(cx, cy);
                continue;
            }
            let span_x = ring.min(self.nx as i64);
            let span_y = ring.min(self.ny as i64);
            let mut seen = BTreeSet::new();
            for dx in -span_x..=span_x {
                for dy in [-span_y, span_y] {
                    seen.insert(((cx + dx).rem_euclid(self.nx as i64), (cy + dy).rem_euclid(self.ny as i64)));
                }
            }
            for dy in -span_y..=span_y {
                for dx in [-span_x, span_x] {
                    seen.insert(((cx + dx).rem_euclid(self.nx as i64), (cy + dy).rem_euclid(self.ny as i64)));
                }
            }
            for (gx, gy) in seen {
                visit(gx, gy);
            }
        }
        best.1
    }
}

/// Labels won by each terminal: every centre goes to its nearest terminal
/// (minimum image on `wrap`, lowest index on ties). Sets are sorted.
pub fn voronoi_assign(terminals: &[(f64, f64)], centers: &[HexCenter], wrap: Option<&Torus>) -> Result<Vec<Vec<u32>>> {
    if terminals.is_empty() {
        return Err(Error::param("Voronoi assignment needs at least one terminal"));
    }
    let mut sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); terminals.len()];
    match wrap {
        Some(t) => {
            let grid = CellGrid::new(*t, terminals);
            for c in centers {
                sets[grid.nearest(c.x, c.y)].insert(c.label);
            }
        }
        None => {
            for c in centers {
                let mut best = (f64::INFINITY, 0usize);
                for (k, &(x, y)) in terminals.iter().enumerate() {
                    let d2 = (x - c.x).powi(2) + (y - c.y).powi(2);
                    if d2 < best.0 {
                        best = (d2, k);
                    }
                }
                sets[best.1].insert(c.label);
            }
        }
    }
    Ok(sets.into_iter().map(|s| s.into_iter().collect()).collect())
}

/// Constant PSD per satellite: `min(psd_max, P_max M / (|S_i| B))`, zero if idle.
pub fn psd_levels(scen: &Scenario, big_m: u32, satellite_subbands: &[Vec<u32>]) -> Vec<f64> {
    satellite_subbands
        .iter()
        .map(|s| {
            if s.is_empty() {
                0.0
            } else {
                let share = s.len() as f64 * scen.bandwidth / big_m as f64;
                scen.psd_max.min(scen.p_max / share)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPlan {
    pub num_subbands: u32,
    pub reuse_shift: (u32, u32),
    /// `None` for explicit or full-reuse plans.
    pub reuse_distance: Option<f64>,
    pub offset: (f64, f64),
    pub centers: Vec<HexCenter>,
    /// `G_k`, sorted labels.
    pub per_terminal_subbands: Vec<Vec<u32>>,
    /// `S_i = ∪_{F(k)=i} G_k`.
    pub per_satellite_subbands: Vec<Vec<u32>>,
    pub per_satellite_psd: Vec<f64>,
}

fn union_per_satellite(n_sat: usize, association: &[usize], g: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut s: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n_sat];
    for (k, set) in g.iter().enumerate() {
        s[association[k]].extend(set.iter().copied());
    }
    s.into_iter().map(|x| x.into_iter().collect()).collect()
}

impl SpectrumPlan {
    /// Every terminal on the whole band.
    pub fn full_reuse(scen: &Scenario, constellation: &Constellation) -> Self {
        let g = vec![vec![1u32]; constellation.terminals.len()];
        Self::from_sets(scen, constellation, 1, (1, 0), None, (0.0, 0.0), Vec::new(), g)
    }

    /// Hexagonal reuse plan on the constellation's torus window. `M = 1` is full
    /// reuse whatever `L`.
    pub fn hexagonal(
        scen: &Scenario,
        constellation: &Constellation,
        big_m: u32,
        reuse_distance: f64,
        offset: (f64, f64),
    ) -> Result<Self> {
        let shift = reuse_shift(big_m)?;
        if constellation.terminals.is_empty() {
            return Err(Error::param("spectrum plan needs at least one terminal"));
        }
        if big_m == 1 {
            let mut p = Self::full_reuse(scen, constellation);
            p.reuse_distance = Some(reuse_distance);
            return Ok(p);
        }
        let window = constellation
            .wrap
            .ok_or_else(|| Error::param("hexagonal plans need a torus window on the constellation"))?;
        let centers = hex_layout(big_m, reuse_distance, &window, offset)?;
        let pts: Vec<(f64, f64)> = constellation.terminals.iter().map(|t| (t.position.x, t.position.y)).collect();
        let g = voronoi_assign(&pts, &centers, Some(&window))?;
        Ok(Self::from_sets(scen, constellation, big_m, shift, Some(reuse_distance), offset, centers, g))
    }

    #[allow(clippy::too_many_arguments)]
    fn from_sets(
        scen: &Scenario,
        c: &Constellation,
        big_m: u32,
        shift: (u32, u32),
        reuse_distance: Option<f64>,
        offset: (f64, f64),
        centers: Vec<HexCenter>,
        g: Vec<Vec<u32>>,
    ) -> Self {
        let s = union_per_satellite(c.satellites.len(), &c.association, &g);
        let psd = psd_levels(scen, big_m, &s);
        Self {
            num_subbands: big_m,
            reuse_shift: shift,
            reuse_distance,
            offset,
            centers,
            per_terminal_subbands: g,
            per_satellite_subbands: s,
            per_satellite_psd: psd,
        }
    }

    /// Explicit per-terminal sets; satellite sets and PSDs follow.
    pub fn from_terminal_sets(
        scen: &Scenario,
        constellation: &Constellation,
        big_m: u32,
        per_terminal: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let shift = reuse_shift(big_m)?;
        if per_terminal.len() != constellation.terminals.len() {
            return Err(Error::param("one subband set per terminal required"));
        }
        if per_terminal.iter().flatten().any(|&m| m == 0 || m > big_m) {
            return Err(Error::param(format!("subband labels must lie in 1..={big_m}")));
        }
        let g = per_terminal
            .into_iter()
            .map(|s| s.into_iter().collect::<BTreeSet<_>>().into_iter().collect())
            .collect();
        Ok(Self::from_sets(scen, constellation, big_m, shift, None, (0.0, 0.0), Vec::new(), g))
    }

    /// Consistency of the sets with an association: `G_k ⊆ S_{F(k)}` and `S_i`
    /// is exactly the union of its terminals' sets.
    pub fn is_consistent(&self, association: &[usize]) -> bool {
        let expect = union_per_satellite(self.per_satellite_subbands.len(), association, &self.per_terminal_subbands);
        expect == self.per_satellite_subbands
    }

    /// Largest per-satellite transmit power `q_i |S_i| B / M`.
    pub fn max_satellite_power(&self, bandwidth: f64) -> f64 {
        self.per_satellite_subbands
            .iter()
            .zip(&self.per_satellite_psd)
            .map(|(s, &q)| q * s.len() as f64 * bandwidth / self.num_subbands as f64)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::param(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReuseOptimum {
    pub reuse_distance: f64,
    pub efficiency: f64,
}

/// Wideband efficiency (bits/s/Hz/km²) for each reuse distance in `grid`.
pub fn reuse_efficiency_curve(
    scen: &Scenario,
    constellation: &Constellation,
    gains: &GainMatrix,
    big_m: u32,
    grid: &[f64],
    offset: (f64, f64),
) -> Result<Vec<f64>> {
    let area = constellation.reference_area(&scen.earth);
    if big_m == 1 {
        let plan = SpectrumPlan::full_reuse(scen, constellation);
        let v = wideband_sum_rate(gains, &constellation.association, &plan, scen.noise_sigma2)? / area;
        return Ok(vec![v; grid.len()]);
    }
    grid.iter()
        .map(|&l| {
            let plan = SpectrumPlan::hexagonal(scen, constellation, big_m, l, offset)?;
            Ok(wideband_sum_rate(gains, &constellation.association, &plan, scen.noise_sigma2)? / area)
        })
        .collect()
}

/// Grid search over the reuse distance.
pub fn optimize_reuse_distance(
    scen: &Scenario,
    constellation: &Constellation,
    big_m: u32,
    grid: &[f64],
) -> Result<ReuseOptimum> {
    if grid.is_empty() {
        return Err(Error::param("reuse-distance grid is empty"));
    }
    let gains = GainMatrix::compute(scen, constellation)?;
    let curve = reuse_efficiency_curve(scen, constellation, &gains, big_m, grid, (0.0, 0.0))?;
    let (k, &efficiency) = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    Ok(ReuseOptimum { reuse_distance: grid[k], efficiency })
}
