//! Plane-wave synthesis on `T^d = R^d / (2 pi Z)^d`.
//!
//! Modes are `e_n(x) = e^{i n.x} / (2 pi)^{d/2}`, orthonormal in `L^2(T^d)`.
//! Grids are the uniform tensor grids `x_j = 2 pi j / p`, flattened with the
//! last axis fastest.

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub fn mode_normalization(d: usize) -> f64 {
    (2.0 * PI).powf(-(d as f64) / 2.0)
}

/// `sum_j c_j e_{n_j}(x)` by direct summation.
pub fn eval_direct(modes: &[Vec<i32>], coeffs: &[Complex64], x: &[f64]) -> Result<Complex64> {
    if modes.len() != coeffs.len() {
        return Err(Error::DimensionMismatch { expected: modes.len(), got: coeffs.len() });
    }
    let norm = mode_normalization(x.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, c) in modes.iter().zip(coeffs) {
        if n.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: n.len() });
        }
        let phase: f64 = n.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum();
        acc += c * Complex64::from_polar(1.0, phase);
    }
    Ok(acc * norm)
}

/// Uniform tensor grid with `p` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    pub d: usize,
    pub p: usize,
}

impl TorusGrid {
    pub fn new(d: usize, p: usize) -> Result<Self> {
        if d == 0 || p == 0 {
            return Err(invalid("torus grid needs d >= 1 and p >= 1"));
        }
        if p.checked_pow(d as u32).is_none_or(|n| n > 1 << 28) {
            return Err(invalid(format!("torus grid {p}^{d} is too large")));
        }
        Ok(Self { d, p })
    }

    pub fn len(&self) -> usize {
        self.p.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of every node, `(2 pi)^d / p^d`.
    pub fn weight(&self) -> f64 {
        (2.0 * PI / self.p as f64).powi(self.d as i32)
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let h = 2.0 * PI / self.p as f64;
        let mut x = vec![0.0; self.d];
        for axis in (0..self.d).rev() {
            x[axis] = (index % self.p) as f64 * h;
            index /= self.p;
        }
        x
    }

    /// Flat index of the frequency `n` after wrapping modulo `p`.
    pub fn wrap_index(&self, n: &[i32]) -> usize {
        n.iter().fold(0, |acc, &k| acc * self.p + k.rem_euclid(self.p as i32) as usize)
    }
}

/// In-place multidimensional FFT over a `p^d` array, last axis fastest.
///
/// `inverse = true` computes `sum_k c_k e^{+i k.x_j}` without normalization.
pub fn fftn(data: &mut [Complex64], grid: TorusGrid, inverse: bool) {
    let TorusGrid { d, p } = grid;
    assert_eq!(data.len(), grid.len());
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(p) } else { planner.plan_fft_forward(p) };
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::new(0.0, 0.0); p];
    for axis in 0..d {
        let stride = p.pow((d - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_mut(p) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * p;
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Field values on the `p^d` grid through one inverse FFT.
pub fn synthesize_fft(modes: &[Vec<i32>], coeffs: &[Complex64], grid: TorusGrid) -> Result<Vec<Complex64>> {
    if modes.len() != coeffs.len() {
        return Err(Error::DimensionMismatch { expected: modes.len(), got: coeffs.len() });
    }
    let extent = modes.iter().flat_map(|n| n.iter().map(|k| k.unsigned_abs() as usize)).max().unwrap_or(0);
    if grid.p < 2 * extent + 1 {
        return Err(invalid(format!("{} points per axis alias frequency {extent}", grid.p)));
    }
    let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (n, c) in modes.iter().zip(coeffs) {
        if n.len() != grid.d {
            return Err(Error::DimensionMismatch { expected: grid.d, got: n.len() });
        }
        data[grid.wrap_index(n)] += c;
    }
    fftn(&mut data, grid, true);
    let norm = mode_normalization(grid.d);
    data.iter_mut().for_each(|v| *v *= norm);
    Ok(data)
}

/// Smallest FFT-friendly size `>= n` of the form `2^a 3^b 5^c`.
pub fn fft_size_at_least(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for f in [2, 3, 5] {
            while r % f == 0 {
                r /= f;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn random_modes(d: usize, m: i32, count: usize, rng: &mut RngStream) -> Vec<Vec<i32>> {
        (0..count)
            .map(|_| (0..d).map(|_| rng.below(2 * m as u64 + 1) as i32 - m).collect())
            .collect()
    }

    #[test]
    fn fft_matches_direct_summation() {
        let mut rng = RngStream::new(1, 2);
        for d in 1..=3 {
            let modes = random_modes(d, 5, 20, &mut rng);
            let coeffs: Vec<Complex64> = (0..20).map(|_| Complex64::new(rng.gaussian(), rng.gaussian())).collect();
            let grid = TorusGrid::new(d, 12).unwrap();
            let fast = synthesize_fft(&modes, &coeffs, grid).unwrap();
            let scale = coeffs.iter().map(|c| c.norm()).sum::<f64>();
            for (i, f) in fast.iter().enumerate() {
                let direct = eval_direct(&modes, &coeffs, &grid.point(i)).unwrap();
                assert!((direct - f).norm() <= 1e-10 * scale, "d={d} i={i}");
            }
        }
    }

    #[test]
    fn aliasing_grids_are_rejected() {
        let modes = vec![vec![4]];
        let c = vec![Complex64::new(1.0, 0.0)];
        assert!(synthesize_fft(&modes, &c, TorusGrid::new(1, 8).unwrap()).is_err());
        assert!(synthesize_fft(&modes, &c, TorusGrid::new(1, 9).unwrap()).is_ok());
        assert!(eval_direct(&modes, &[], &[0.0]).is_err());
    }

    #[test]
    fn forward_then_inverse_is_scaled_identity() {
        let grid = TorusGrid::new(2, 6).unwrap();
        let mut rng = RngStream::new(3, 3);
        let orig: Vec<Complex64> = (0..36).map(|_| Complex64::new(rng.gaussian(), 0.0)).collect();
        let mut v = orig.clone();
        fftn(&mut v, grid, false);
        fftn(&mut v, grid, true);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a / 36.0 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn fft_sizes() {
        assert_eq!(fft_size_at_least(7), 8);
        assert_eq!(fft_size_at_least(11), 12);
        assert_eq!(fft_size_at_least(121), 125);
    }
}
