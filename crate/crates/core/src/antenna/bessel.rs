//! Bessel functions of the first kind, orders 0 and 1.
//!
//! Ascending series below [`SERIES_LIMIT`], Hankel asymptotic expansion above.
//! At the split the largest series term is below 1e5, so cancellation costs at
//! most ~1e-11 absolute; the asymptotic remainder there is below 1e-13.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 15.0;

/// First positive zero of J₁ as used for the beamwidth relation `sin B = 3.8317 / K`.
pub const J1_FIRST_ZERO: f64 = 3.8317;

/// Σ_k (-1)^k (x/2)^{2k} / (k! (k+n)!), i.e. J_n(x) / (x/2)^n.
fn reduced_series(x: f64, n: u32) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    for m in 1..=n {
        term /= m as f64;
    }
    let mut sum = term;
    let mut k = 1u32;
    loop {
        term *= -q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) || k > 200 {
            break;
        }
        k += 1;
    }
    sum
}

/// Hankel expansion: returns (P, Q) for order `n`.
fn hankel_pq(x: f64, n: u32) -> (f64, f64) {
    let mu = 4.0 * (n * n) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    // a_k = prod_{l=1..k} (mu - (2l-1)^2) / (k! 8^k x^k)
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60u32 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() > prev || a.abs() < 1e-18 {
            break;
        }
        prev = a.abs();
        // P collects even k with sign (-1)^{k/2}, Q odd k with sign (-1)^{(k-1)/2}
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
    }
    (p, q)
}

fn asymptotic(x: f64, n: u32) -> f64 {
    let chi = x - (0.5 * n as f64 + 0.25) * PI;
    let (p, q) = hankel_pq(x, n);
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_LIMIT {
        reduced_series(ax, 0)
    } else {
        asymptotic(ax, 0)
    }
}

pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_LIMIT {
        0.5 * ax * reduced_series(ax, 1)
    } else {
        asymptotic(ax, 1)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// J₁(x)/x without the removable singularity at 0 (equals 1/2 there).
pub fn j1_over_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_LIMIT {
        0.5 * reduced_series(ax, 1)
    } else {
        asymptotic(ax, 1) / ax
    }
}

pub fn j2(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    2.0 * j1_over_x(x) - j0(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_libm_reference() {
        let mut worst: f64 = 0.0;
        let mut x = -60.0;
        while x <= 60.0 {
            worst = worst.max((j0(x) - libm::j0(x)).abs());
            worst = worst.max((j1(x) - libm::j1(x)).abs());
            x += 0.0137;
        }
        assert!(worst <= 1e-10, "worst absolute error {worst}");
    }

    #[test]
    fn split_point_is_continuous() {
        for delta in [-1e-9, 1e-9] {
            let x = SERIES_LIMIT + delta;
            assert!((j1(x) - libm::j1(x)).abs() < 1e-11);
            assert!((j0(x) - libm::j0(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn known_values() {
        assert!((j0(0.0) - 1.0).abs() < 1e-16);
        assert_eq!(j1(0.0), 0.0);
        assert!(j1(3.831_705_970_207_512).abs() < 1e-13);
        assert!(j2(5.135_622_301_840_683).abs() < 1e-13);
        assert!((j1_over_x(0.0) - 0.5).abs() < 1e-16);
        assert!((j1_over_x(1e-4) - (0.5 - 1e-8 / 16.0)).abs() < 1e-16);
    }
}
