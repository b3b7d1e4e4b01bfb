//! Block shuffling of satellite/terminal associations.
//!
//! Indices are 1-based inside a block `{1, …, 2^j}` and extend periodically to all
//! integers, so the maps act on unbounded lattice coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LatticeIndex;

fn check_exponent(j: u32) -> Result<i64> {
    if j == 0 || j > 40 {
        return Err(Error::param(format!("block exponent must lie in 1..=40, got {j}")));
    }
    Ok(1i64 << j)
}

/// Block offset `D·⌊(k−1)/D⌋` and the 1-based position inside the block.
#[inline]
fn split(k: i64, d: i64) -> (i64, i64) {
    let base = d * (k - 1).div_euclid(d);
    (base, k - base)
}

#[inline]
fn within_block(r: i64, d: i64) -> i64 {
    if r % 2 == 1 {
        (r + d + 1) / 2
    } else {
        r / 2
    }
}

#[inline]
fn within_block_inverse(y: i64, d: i64) -> i64 {
    if y <= d / 2 {
        2 * y
    } else {
        2 * y - d - 1
    }
}

/// One shuffle round with block `2^j`: odd `k ↦ (k + 2^j + 1)/2`, even `k ↦ k/2`
/// inside the block, extended periodically.
pub fn shuffle_1d(k: i64, j: u32) -> Result<i64> {
    let d = check_exponent(j)?;
    let (base, r) = split(k, d);
    Ok(base + within_block(r, d))
}

pub fn shuffle_1d_inverse(k: i64, j: u32) -> Result<i64> {
    let d = check_exponent(j)?;
    let (base, r) = split(k, d);
    Ok(base + within_block_inverse(r, d))
}

fn check_rounds(n: u32, rounds: u32) -> Result<()> {
    if rounds > 0 && (n < 2 || rounds > n - 1) {
        return Err(Error::param(format!("rounds must satisfy 1 ≤ ℓ ≤ n − 1 (n = {n}, ℓ = {rounds})")));
    }
    Ok(())
}

/// `f^{(n−ℓ+1)} ∘ ⋯ ∘ f^{(n)}`, applied innermost `f^{(n)}` first; `ℓ = 0` is the identity.
pub fn shuffle_composed(k: i64, n: u32, rounds: u32) -> Result<i64> {
    check_rounds(n, rounds)?;
    let mut x = k;
    for j in ((n - rounds + 1)..=n).rev() {
        x = shuffle_1d(x, j)?;
    }
    Ok(x)
}

pub fn shuffle_composed_inverse(k: i64, n: u32, rounds: u32) -> Result<i64> {
    check_rounds(n, rounds)?;
    let mut x = k;
    for j in (n - rounds + 1)..=n {
        x = shuffle_1d_inverse(x, j)?;
    }
    Ok(x)
}

/// Block sizes `D_x = 2^{n_x}`, `D_y = 2^{n_y}` and round counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShufflePlan {
    pub block_x_exp: u32,
    pub block_y_exp: u32,
    pub rounds_x: u32,
    pub rounds_y: u32,
}

impl ShufflePlan {
    pub const IDENTITY: ShufflePlan = ShufflePlan { block_x_exp: 0, block_y_exp: 0, rounds_x: 0, rounds_y: 0 };

    pub fn new(block_x_exp: u32, block_y_exp: u32, rounds_x: u32, rounds_y: u32) -> Result<Self> {
        check_rounds(block_x_exp, rounds_x)?;
        check_rounds(block_y_exp, rounds_y)?;
        Ok(Self { block_x_exp, block_y_exp, rounds_x, rounds_y })
    }

    pub fn block_x(&self) -> i64 {
        1 << self.block_x_exp
    }

    pub fn block_y(&self) -> i64 {
        1 << self.block_y_exp
    }

    pub fn is_identity(&self) -> bool {
        self.rounds_x == 0 && self.rounds_y == 0
    }

    /// Period of the association in `(m, j)` coordinates, `m = (i − i mod 2)/2`.
    pub fn period(&self) -> (i64, i64) {
        let px = if self.rounds_x == 0 { 1 } else { self.block_x() };
        let py = if self.rounds_y == 0 { 1 } else { self.block_y() };
        (px, py)
    }

    #[inline]
    pub fn map_x(&self, m: i64) -> i64 {
        if self.rounds_x == 0 {
            m
        } else {
            shuffle_composed(m, self.block_x_exp, self.rounds_x).expect("plan validated")
        }
    }

    #[inline]
    pub fn map_y(&self, j: i64) -> i64 {
        if self.rounds_y == 0 {
            j
        } else {
            shuffle_composed(j, self.block_y_exp, self.rounds_y).expect("plan validated")
        }
    }

    #[inline]
    pub fn inverse_x(&self, m: i64) -> i64 {
        if self.rounds_x == 0 {
            m
        } else {
            shuffle_composed_inverse(m, self.block_x_exp, self.rounds_x).expect("plan validated")
        }
    }

    #[inline]
    pub fn inverse_y(&self, j: i64) -> i64 {
        if self.rounds_y == 0 {
            j
        } else {
            shuffle_composed_inverse(j, self.block_y_exp, self.rounds_y).expect("plan validated")
        }
    }
}

/// Terminal served by the satellite at `idx`: `(2F_x((i−q)/2) + r, F_y(j))` with
/// `q = i mod 2`, `r = F_y(j) mod 2`.
pub fn shuffle_2d(idx: LatticeIndex, plan: &ShufflePlan) -> Result<LatticeIndex> {
    let (i, j) = (idx.i(), idx.j());
    let q = i.rem_euclid(2);
    let fy = plan.map_y(j);
    let r = fy.rem_euclid(2);
    LatticeIndex::new(2 * plan.map_x((i - q) / 2) + r, fy)
}

/// Satellite serving the terminal at `idx` (inverse of [`shuffle_2d`]).
pub fn unshuffle_2d(idx: LatticeIndex, plan: &ShufflePlan) -> Result<LatticeIndex> {
    let (i, j) = (idx.i(), idx.j());
    let q = i.rem_euclid(2);
    let gy = plan.inverse_y(j);
    let r = gy.rem_euclid(2);
    LatticeIndex::new(2 * plan.inverse_x((i - q) / 2) + r, gy)
}
