//! Gamma-family helpers and closed-form volumes.

use std::f64::consts::PI;

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `ln B(a, b)`, stable for large arguments.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Exact binomial coefficient; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Volume of the unit ball in `R^d`, `pi^{d/2} / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: u32) -> f64 {
    let d = d as f64;
    (0.5 * d * PI.ln() - ln_gamma(0.5 * d + 1.0)).exp()
}

/// Surface area of the unit sphere `S^d` in `R^{d+1}`.
pub fn unit_sphere_area(d: u32) -> f64 {
    let n = d as f64 + 1.0;
    2.0 * (0.5 * n * PI.ln() - ln_gamma(0.5 * n)).exp()
}
