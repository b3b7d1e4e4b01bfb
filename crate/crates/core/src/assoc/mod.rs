//! Satellite/terminal association: minimum-distance matching and shuffling.

pub mod hungarian;
pub mod shuffle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lattice_density, Point3, Torus};
use crate::link::{log2_1p, Scenario};
use crate::regular::{RegularAnalysis, Truncation};

pub use shuffle::{shuffle_1d, shuffle_2d, shuffle_composed, unshuffle_2d, ShufflePlan};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Terminal `k` is served by satellite `mapping[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub mapping: Vec<usize>,
    /// `Σ_k ‖s_{F(k)} − g_k‖²`.
    pub cost: f64,
}

fn squared_distance(a: Point3, b: Point3, wrap: Option<&Torus>) -> f64 {
    let d = b - a;
    match wrap {
        Some(t) => t.wrap(d).norm_sq(),
        None => d.norm_sq(),
    }
}

/// Bijection minimising the total squared satellite/terminal distance.
pub fn min_distance_association(satellites: &[Point3], terminals: &[Point3]) -> Result<Assignment> {
    min_distance_association_on(satellites, terminals, None)
}

/// As [`min_distance_association`] with minimum-image distances on `wrap`.
pub fn min_distance_association_on(
    satellites: &[Point3],
    terminals: &[Point3],
    wrap: Option<&Torus>,
) -> Result<Assignment> {
    if satellites.len() != terminals.len() {
        return Err(Error::Cardinality { satellites: satellites.len(), terminals: terminals.len() });
    }
    let n = terminals.len();
    let mut cost = vec![0.0; n * n];
    for (k, &g) in terminals.iter().enumerate() {
        for (i, &s) in satellites.iter().enumerate() {
            cost[k * n + i] = squared_distance(s, g, wrap);
        }
    }
    let mapping = hungarian::solve(&cost, n);
    let total = mapping.iter().enumerate().map(|(k, &i)| cost[k * n + i]).sum();
    Ok(Assignment { mapping, cost: total })
}

pub fn assignment_cost(mapping: &[usize], satellites: &[Point3], terminals: &[Point3], wrap: Option<&Torus>) -> f64 {
    mapping.iter().enumerate().map(|(k, &i)| squared_distance(satellites[i], terminals[k], wrap)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleCheck {
    pub holds: bool,
    /// Terminal pairs `(a, b)`, `a < b`, whose satellites are within `Δ_s` while
    /// the terminals are within `Δ_g`.
    pub violations: Vec<(usize, usize)>,
}

/// Checks `‖s_{F(a)} − s_{F(b)}‖ ≤ Δ_s ⟹ ‖g_a − g_b‖ > Δ_g` over all terminal pairs.
pub fn check_association_rule(
    mapping: &[usize],
    satellites: &[Point3],
    terminals: &[Point3],
    delta_s: f64,
    delta_g: f64,
) -> RuleCheck {
    let tol = 1.0 + 1e-9;
    let mut violations = Vec::new();
    for a in 0..terminals.len() {
        for b in a + 1..terminals.len() {
            let ds = satellites[mapping[a]].distance(satellites[mapping[b]]);
            let dg = terminals[a].distance(terminals[b]);
            if ds <= delta_s * tol && dg <= delta_g * tol {
                violations.push((a, b));
            }
        }
    }
    RuleCheck { holds: violations.is_empty(), violations }
}

/// `(D_x Δ)² + (D_y Δ√3/2)² ≤ reach²` for block exponents `(n_x, n_y)`.
pub fn block_is_feasible(delta: f64, reach: f64, nx: u32, ny: u32) -> bool {
    let dx = (1u64 << nx) as f64 * delta;
    let dy = (1u64 << ny) as f64 * delta * SQRT3 / 2.0;
    dx * dx + dy * dy <= reach * reach * (1.0 + 1e-12)
}

/// Every plan with a feasible block and `0 ≤ ℓ ≤ n − 1` on each axis, the
/// identity first and without duplicates.
pub fn candidate_plans(delta: f64, reach: f64) -> Vec<ShufflePlan> {
    let mut plans = vec![ShufflePlan::IDENTITY];
    for nx in 0..=20u32 {
        if !block_is_feasible(delta, reach, nx, 0) {
            break;
        }
        for ny in 0..=20u32 {
            if !block_is_feasible(delta, reach, nx, ny) {
                break;
            }
            for rx in 0..nx.max(1) {
                for ry in 0..ny.max(1) {
                    if rx == 0 && ry == 0 {
                        continue;
                    }
                    // a zero-round axis carries no block information; keep it canonical
                    let plan = ShufflePlan {
                        block_x_exp: if rx == 0 { 0 } else { nx },
                        block_y_exp: if ry == 0 { 0 } else { ny },
                        rounds_x: rx,
                        rounds_y: ry,
                    };
                    if !plans.contains(&plan) {
                        plans.push(plan);
                    }
                }
            }
        }
    }
    plans
}

/// Efficiency of the regular lattice under a periodic shuffled association on the
/// infinite plane.
///
/// One period of terminals is evaluated. Look directions are aligned along every
/// link. Satellites within `radius` of a terminal are summed exactly and the rest
/// are represented by the nadir-pointing continuum tail.
pub fn shuffled_efficiency(scen: &Scenario, delta: f64, plan: &ShufflePlan, radius: f64) -> Result<f64> {
    scen.validate()?;
    if !(delta > 0.0 && radius > 0.0) {
        return Err(Error::param("shuffle evaluation needs positive Δ and radius"));
    }
    let psd = scen.full_band_psd();
    if !psd.is_finite() {
        return Err(Error::param("shuffle evaluation needs a finite PSD"));
    }
    let tail = RegularAnalysis::new(scen.clone(), delta, Truncation::default())?.far_tail_beyond(radius)?;
    let (re, rs) = (scen.earth.earth_radius_km, scen.earth.orbit_radius_km());
    let row = delta * SQRT3 / 2.0;
    let pos = |m: i64, j: i64, z: f64| Point3::new(m as f64 * delta + j.rem_euclid(2) as f64 * delta / 2.0, j as f64 * row, z);
    let (px, py) = plan.period();
    let mut terminals = Vec::new();
    for j in 1..=py {
        for m in 1..=px {
            terminals.push((m, j));
        }
    }
    let rates: Vec<f64> = terminals
        .par_iter()
        .map(|&(mt, jt)| -> Result<f64> {
            let g = pos(mt, jt, re);
            let (ms, js) = (plan.inverse_x(mt), plan.inverse_y(jt));
            let server = pos(ms, js, rs);
            let term_look = (server - g).normalized()?;
            let signal = psd * scen.gain_for(g - server, -term_look, term_look)?;
            let j_lo = ((g.y - radius) / row).floor() as i64;
            let j_hi = ((g.y + radius) / row).ceil() as i64;
            let mut interference = 0.0;
            for j in j_lo..=j_hi {
                let dy = j as f64 * row - g.y;
                let span2 = radius * radius - dy * dy;
                if span2 < 0.0 {
                    continue;
                }
                let shift = j.rem_euclid(2) as f64 * delta / 2.0;
                let span = span2.sqrt();
                let m_lo = ((g.x - span - shift) / delta).floor() as i64;
                let m_hi = ((g.x + span - shift) / delta).ceil() as i64;
                let fy = plan.map_y(j);
                for m in m_lo..=m_hi {
                    if m == ms && j == js {
                        continue;
                    }
                    let s = pos(m, j, rs);
                    let v = g - s;
                    if v.x * v.x + v.y * v.y > radius * radius {
                        continue;
                    }
                    let target = pos(plan.map_x(m), fy, re);
                    let sat_look = (target - s).normalized()?;
                    interference += psd * scen.gain_for(v, sat_look, term_look)?;
                }
            }
            Ok(log2_1p(signal / (interference + psd * tail + scen.noise_sigma2)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    Ok(lattice_density(delta) * mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleOutcome {
    pub plan: ShufflePlan,
    pub efficiency: f64,
    pub identity_efficiency: f64,
    pub candidates_evaluated: usize,
}

impl ShuffleOutcome {
    /// `(shuffled − identity) / identity`.
    pub fn relative_gain(&self) -> f64 {
        (self.efficiency - self.identity_efficiency) / self.identity_efficiency
    }
}

/// Exhaustive search over feasible shuffles. `reach` defaults to
/// `h tan(γ_g/2)`; `radius` is the exact-summation radius.
pub fn optimize_shuffle(scen: &Scenario, delta: f64, reach: Option<f64>, radius: f64) -> Result<ShuffleOutcome> {
    let reach = reach.unwrap_or_else(|| scen.earth.altitude_km * (0.5 * scen.gamma_g).tan());
    let plans = candidate_plans(delta, reach);
    let scores: Vec<f64> = plans
        .iter()
        .map(|p| shuffled_efficiency(scen, delta, p, radius))
        .collect::<Result<_>>()?;
    let identity_efficiency = scores[0];
    let (best, &efficiency) = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("identity always present");
    Ok(ShuffleOutcome { plan: plans[best], efficiency, identity_efficiency, candidates_evaluated: plans.len() })
}
