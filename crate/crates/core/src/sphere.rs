//! Real orthonormal spherical harmonics on `S^2`, Gauss-Legendre product grids
//! and ring-by-ring synthesis.
//!
//! Harmonics of degree `k` are ordered `m = -k..=k`:
//! `Y_{k,0} = P_k^0`, `Y_{k,m} = sqrt(2) P_k^m cos(m phi)` and
//! `Y_{k,-m} = sqrt(2) P_k^m sin(m phi)` for `m > 0`, where `P_k^m` are the
//! associated Legendre functions normalized so that `Y_{k,0}` has unit `L^2` norm.

use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

/// Index of `(l, m)`, `0 <= m <= l`, in a triangular Legendre table.
#[inline]
pub fn lm_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Normalized associated Legendre values `P_l^m(cos theta)` for `0 <= m <= l <= lmax`.
///
/// Uses the sectoral recurrence for `P_m^m` followed by the three-term
/// recurrence in `l` at fixed `m`; every step is normalized, so no factorials
/// appear and the recursion is stable well past degree 100.
pub fn legendre_table(lmax: usize, theta: f64) -> Vec<f64> {
    let (s, x) = theta.sin_cos();
    let s = s.abs();
    let mut p = vec![0.0; lm_index(lmax, lmax) + 1];
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        p[lm_index(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mf = m as f64;
        let mut prev2 = pmm;
        let mut prev1 = (2.0 * mf + 3.0).sqrt() * x * pmm;
        p[lm_index(m + 1, m)] = prev1;
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lm1 = lf - 1.0;
            let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
            let cur = a * (x * prev1 - b * prev2);
            p[lm_index(l, m)] = cur;
            prev2 = prev1;
            prev1 = cur;
        }
    }
    p
}

/// Normalized `P_k^m(cos theta)` for one degree, `m = 0..=k`.
pub fn legendre_row(k: usize, theta: f64) -> Vec<f64> {
    let t = legendre_table(k, theta);
    (0..=k).map(|m| t[lm_index(k, m)]).collect()
}

/// The `2k + 1` real harmonics of degree `k` at `(theta, phi)`, ordered `m = -k..=k`.
pub fn eval_basis(k: u32, theta: f64, phi: f64) -> Result<Vec<f64>> {
    if !(theta.is_finite() && phi.is_finite()) {
        return Err(invalid(format!("non-finite point ({theta}, {phi})")));
    }
    let k = k as usize;
    let row = legendre_row(k, theta);
    let mut out = vec![0.0; 2 * k + 1];
    out[k] = row[0];
    for m in 1..=k {
        let (sn, cs) = (m as f64 * phi).sin_cos();
        out[k + m] = SQRT_2 * row[m] * cs;
        out[k - m] = SQRT_2 * row[m] * sn;
    }
    Ok(out)
}

/// Harmonics of several degrees at one point, concatenated in degree order.
pub fn eval_degrees(degrees: &[u32], theta: f64, phi: f64) -> Result<Vec<f64>> {
    if !(theta.is_finite() && phi.is_finite()) {
        return Err(invalid(format!("non-finite point ({theta}, {phi})")));
    }
    let lmax = degrees.iter().copied().max().unwrap_or(0) as usize;
    let table = legendre_table(lmax, theta);
    let trig: Vec<(f64, f64)> = (0..=lmax).map(|m| (m as f64 * phi).sin_cos()).collect();
    let mut out = Vec::with_capacity(degrees.iter().map(|&k| 2 * k as usize + 1).sum());
    for &k in degrees {
        let k = k as usize;
        for mm in -(k as i64)..=(k as i64) {
            let m = mm.unsigned_abs() as usize;
            let p = table[lm_index(k, m)];
            out.push(match mm.signum() {
                0 => p,
                1 => SQRT_2 * p * trig[m].1,
                _ => SQRT_2 * p * trig[m].0,
            });
        }
    }
    Ok(out)
}

/// Tensor grid: `L + 1` Gauss-Legendre nodes in `cos theta` times `2L + 1`
/// equispaced azimuths. Integrates every polynomial of degree `<= 2L + 1`
/// restricted to the sphere exactly, in particular products of two
/// harmonics of degree `<= L`.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    band_limit: usize,
    thetas: Vec<f64>,
    ring_weights: Vec<f64>,
    nphi: usize,
}

impl SphereGrid {
    pub fn new(band_limit: usize) -> Self {
        let (x, w) = gauss_legendre(band_limit + 1);
        let nphi = 2 * band_limit + 1;
        let dphi = 2.0 * PI / nphi as f64;
        // north pole first
        let thetas = x.iter().rev().map(|x| x.acos()).collect();
        let ring_weights = w.iter().rev().map(|w| w * dphi).collect();
        Self { band_limit, thetas, ring_weights, nphi }
    }

    /// Smallest grid integrating `|u|^q` exactly for even `q` and `u` of degree `<= k`.
    pub fn for_power(k: usize, q: usize) -> Self {
        Self::new((q * k).div_ceil(2).max(k))
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn nphi(&self) -> usize {
        self.nphi
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.nphi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(theta, phi, weight)` in ring-major order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let dphi = 2.0 * PI / self.nphi as f64;
        self.thetas.iter().zip(&self.ring_weights).flat_map(move |(&t, &w)| {
            (0..self.nphi).map(move |j| (t, j as f64 * dphi, w))
        })
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.ring_weights.iter().flat_map(move |&w| std::iter::repeat_n(w, self.nphi))
    }

    pub fn total_weight(&self) -> f64 {
        self.ring_weights.iter().sum::<f64>() * self.nphi as f64
    }

    /// Quadrature of ring-major samples.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len());
        values
            .chunks(self.nphi)
            .zip(&self.ring_weights)
            .map(|(ring, w)| w * ring.iter().sum::<f64>())
            .sum()
    }
}

/// Equispaced grid for `L^inf` estimates: `4k + 1` colatitudes including both
/// poles and `8k` azimuths, a fourfold oversampling of degree `k`.
#[derive(Clone, Debug)]
pub struct LinfGrid {
    thetas: Vec<f64>,
    nphi: usize,
}

impl LinfGrid {
    pub fn new(k: usize) -> Self {
        let k = k.max(1);
        let nt = 4 * k + 1;
        let thetas = (0..nt).map(|i| PI * i as f64 / (nt - 1) as f64).collect();
        Self { thetas, nphi: 8 * k }
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn nphi(&self) -> usize {
        self.nphi
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.nphi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest distance from any point of `S^2` to the grid.
    pub fn mesh_radius(&self) -> f64 {
        let dt = PI / (self.thetas.len() - 1) as f64;
        let dp = 2.0 * PI / self.nphi as f64;
        0.5 * (dt * dt + dp * dp).sqrt()
    }
}

/// Fast synthesis of block fields on a ring grid.
///
/// For each colatitude the Fourier series in `phi` is assembled from the
/// Legendre table and inverted with one FFT, costing `O(K^2 + nphi log nphi)`
/// per ring instead of `O(K^2 nphi)`.
#[derive(Clone)]
pub struct RingSynthesizer {
    degrees: Vec<u32>,
    offsets: Vec<usize>,
    dim: usize,
    lmax: usize,
    nphi: usize,
    /// `rings x degrees x (m = 0..=k)` normalized Legendre values.
    table: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RingSynthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RingSynthesizer")
            .field("degrees", &self.degrees)
            .field("rings", &self.table.len())
            .field("nphi", &self.nphi)
            .finish()
    }
}

impl RingSynthesizer {
    pub fn new(degrees: &[u32], thetas: &[f64], nphi: usize) -> Result<Self> {
        if degrees.is_empty() {
            return Err(invalid("no degrees to synthesize"));
        }
        if !degrees.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("degrees must be strictly increasing"));
        }
        let lmax = *degrees.last().unwrap() as usize;
        if nphi <= 2 * lmax {
            return Err(invalid(format!("{nphi} azimuths alias degree {lmax}")));
        }
        let mut offsets = Vec::with_capacity(degrees.len());
        let mut dim = 0;
        for &k in degrees {
            offsets.push(dim);
            dim += 2 * k as usize + 1;
        }
        let table = thetas
            .iter()
            .map(|&t| {
                let full = legendre_table(lmax, t);
                let mut row = Vec::new();
                for &k in degrees {
                    let k = k as usize;
                    row.extend((0..=k).map(|m| full[lm_index(k, m)]));
                }
                row
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_inverse(nphi);
        Ok(Self { degrees: degrees.to_vec(), offsets, dim, lmax, nphi, table, fft })
    }

    pub fn for_grid(degrees: &[u32], grid: &SphereGrid) -> Result<Self> {
        Self::new(degrees, grid.thetas(), grid.nphi())
    }

    pub fn for_linf(degrees: &[u32], grid: &LinfGrid) -> Result<Self> {
        Self::new(degrees, grid.thetas(), grid.nphi())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len() * self.nphi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Field values in ring-major order for complex coefficients.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.dim {
            return Err(crate::Error::DimensionMismatch { expected: self.dim, got: coeffs.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let n = self.nphi;
        for (legendre, ring) in self.table.iter().zip(out.chunks_mut(n)) {
            ring.fill(Complex64::new(0.0, 0.0));
            let mut base = 0;
            for (di, &k) in self.degrees.iter().enumerate() {
                let k = k as usize;
                let c = &coeffs[self.offsets[di]..self.offsets[di] + 2 * k + 1];
                let p = &legendre[base..base + k + 1];
                ring[0] += c[k] * p[0];
                for m in 1..=k {
                    // sqrt2 p (A cos + B sin) = sqrt2 p ((A - iB)/2 e^{im} + (A + iB)/2 e^{-im})
                    let a = c[k + m] * (SQRT_2 * p[m]);
                    let b = c[k - m] * (SQRT_2 * p[m]);
                    let ib = Complex64::new(-b.im, b.re);
                    ring[m] += (a - ib) * 0.5;
                    ring[n - m] += (a + ib) * 0.5;
                }
                base += k + 1;
            }
            self.fft.process_with_scratch(ring, &mut scratch);
        }
        debug_assert!(self.lmax < n);
        Ok(out)
    }

    /// Field values in ring-major order for real coefficients.
    pub fn synthesize_real(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Ok(self.synthesize(&c)?.into_iter().map(|z| z.re).collect())
    }
}
