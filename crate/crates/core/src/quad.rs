//! Composite Gauss–Legendre quadrature.

const NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

const WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_7,
    0.222_381_034_453_374_3,
    0.313_706_645_877_887,
    0.362_683_783_378_361_8,
    0.362_683_783_378_361_8,
    0.313_706_645_877_887,
    0.222_381_034_453_374_3,
    0.101_228_536_290_376_7,
];

/// Integrates `f` over `[a, b]` with `panels` equal 8-point Gauss–Legendre panels.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    if panels == 0 || a == b {
        return 0.0;
    }
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let mut acc = 0.0;
        for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}
