//! Evaluation of block fields `u = sum_j z_j e_j` at points and on grids.

use crate::error::{invalid, Error, Result};
use crate::geometry::{ManifoldKind, ModeId, SpectralBlock};
use crate::sphere::{eval_degrees, LinfGrid, RingSynthesizer, SphereGrid};
use crate::torus::{self, fft_size_at_least, TorusGrid};
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    /// Colatitude and azimuth on `S^2`.
    Sphere { theta: f64, phi: f64 },
    Torus(Vec<f64>),
}

fn lattice_modes(block: &SpectralBlock) -> Vec<Vec<i32>> {
    block
        .modes()
        .iter()
        .filter_map(|m| match &m.id {
            ModeId::Lattice(n) => Some(n.clone()),
            _ => None,
        })
        .collect()
}

fn require_s2(block: &SpectralBlock) -> Result<()> {
    match block.manifold().kind() {
        ManifoldKind::Sphere(2) => Ok(()),
        ManifoldKind::Sphere(d) => Err(invalid(format!("harmonics on S^{d} are only counted, not evaluated"))),
        ManifoldKind::Torus(_) => Ok(()),
    }
}

/// Values of all block modes at a point, in block order.
pub fn mode_values(block: &SpectralBlock, point: &Point) -> Result<Vec<Complex64>> {
    require_s2(block)?;
    match (block.manifold().kind(), point) {
        (ManifoldKind::Sphere(_), Point::Sphere { theta, phi }) => {
            Ok(eval_degrees(&block.degrees(), *theta, *phi)?.into_iter().map(|y| Complex64::new(y, 0.0)).collect())
        }
        (ManifoldKind::Torus(d), Point::Torus(x)) if x.len() == d as usize => {
            let norm = torus::mode_normalization(x.len());
            Ok(lattice_modes(block)
                .iter()
                .map(|n| {
                    let phase: f64 = n.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum();
                    Complex64::from_polar(norm, phase)
                })
                .collect())
        }
        _ => Err(invalid("point does not lie on the block's manifold")),
    }
}

/// Diagonal of the spectral projector, `e_{x,h} = sum_j |e_j(x)|^2`.
///
/// On `S^d`, `d >= 3`, the value `N / Vol` follows from rotation invariance
/// and is returned without evaluating harmonics.
pub fn kernel_e_xh(block: &SpectralBlock, point: &Point) -> Result<f64> {
    match block.manifold().kind() {
        ManifoldKind::Sphere(d) if d >= 3 => Ok(block.dim() as f64 / block.manifold().volume()),
        _ => Ok(mode_values(block, point)?.iter().map(|v| v.norm_sqr()).sum()),
    }
}

/// `u(x) = sum_j c_j e_j(x)` at each point by direct summation.
pub fn synthesize(block: &SpectralBlock, coeffs: &[Complex64], points: &[Point]) -> Result<Vec<Complex64>> {
    if coeffs.len() != block.dim() {
        return Err(Error::DimensionMismatch { expected: block.dim(), got: coeffs.len() });
    }
    points
        .iter()
        .map(|p| Ok(mode_values(block, p)?.iter().zip(coeffs).map(|(e, c)| e * c).sum()))
        .collect()
}

enum Backend {
    Sphere(RingSynthesizer),
    Torus { modes: Vec<Vec<i32>>, grid: TorusGrid },
}

/// A block paired with a grid on which whole fields are synthesized at once.
///
/// Quadrature grids integrate `|u|^q` exactly for even `q`; sup grids
/// oversample the top frequency fourfold for `L^inf` estimates.
pub struct FieldGrid {
    backend: Backend,
    weights: Vec<f64>,
    dim: usize,
}

impl FieldGrid {
    /// Grid on which `sum_i w_i |u(x_i)|^q` is exact for even `q`.
    pub fn quadrature(block: &SpectralBlock, q: usize) -> Result<Self> {
        require_s2(block)?;
        if block.is_empty() {
            return Err(invalid("empty block"));
        }
        let q = q.max(2);
        match block.manifold().kind() {
            ManifoldKind::Sphere(_) => {
                let degrees = block.degrees();
                let kmax = *degrees.last().unwrap() as usize;
                let grid = SphereGrid::for_power(kmax, q);
                let synth = RingSynthesizer::for_grid(&degrees, &grid)?;
                Ok(Self { backend: Backend::Sphere(synth), weights: grid.weights().collect(), dim: block.dim() })
            }
            ManifoldKind::Torus(d) => {
                let m = block.lattice_extent() as usize;
                let grid = TorusGrid::new(d as usize, fft_size_at_least(q * m + 1))?;
                let weights = vec![grid.weight(); grid.len()];
                Ok(Self { backend: Backend::Torus { modes: lattice_modes(block), grid }, weights, dim: block.dim() })
            }
        }
    }

    /// Fourfold oversampled grid for sup norms.
    pub fn sup(block: &SpectralBlock) -> Result<Self> {
        require_s2(block)?;
        if block.is_empty() {
            return Err(invalid("empty block"));
        }
        match block.manifold().kind() {
            ManifoldKind::Sphere(_) => {
                let degrees = block.degrees();
                let grid = LinfGrid::new(*degrees.last().unwrap() as usize);
                let synth = RingSynthesizer::for_linf(&degrees, &grid)?;
                Ok(Self { backend: Backend::Sphere(synth), weights: Vec::new(), dim: block.dim() })
            }
            ManifoldKind::Torus(d) => {
                let m = block.lattice_extent().max(1) as usize;
                let grid = TorusGrid::new(d as usize, fft_size_at_least(8 * m))?;
                Ok(Self { backend: Backend::Torus { modes: lattice_modes(block), grid }, weights: Vec::new(), dim: block.dim() })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        match &self.backend {
            Backend::Sphere(s) => s.len(),
            Backend::Torus { grid, .. } => grid.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weights, empty for sup grids.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        match &self.backend {
            Backend::Sphere(s) => s.synthesize(coeffs),
            Backend::Torus { modes, grid } => torus::synthesize_fft(modes, coeffs, *grid),
        }
    }

    pub fn synthesize_real(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Ok(self.synthesize(&c)?.into_iter().map(|z| z.re).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FrequencyWindow, SpectralBlock};
    use crate::rng::RngStream;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn torus_kernel_is_flat() {
        let b = SpectralBlock::torus_shell(2, 25).unwrap();
        for x in [[0.0, 0.0], [1.0, 2.5], [6.0, 0.1]] {
            let e = kernel_e_xh(&b, &Point::Torus(x.to_vec())).unwrap();
            assert_relative_eq!(e, 12.0 / (4.0 * PI * PI), max_relative = 1e-14);
        }
    }

    #[test]
    fn sphere_kernels_follow_addition_theorem() {
        let mut rng = RngStream::new(2, 2);
        let single = SpectralBlock::sphere_degree(2, 7).unwrap();
        let union = SpectralBlock::sphere_degrees(2, 3, 5).unwrap();
        for _ in 0..50 {
            let p = Point::Sphere { theta: PI * rng.uniform(), phi: 2.0 * PI * rng.uniform() };
            assert_relative_eq!(kernel_e_xh(&single, &p).unwrap(), 15.0 / (4.0 * PI), max_relative = 1e-10);
            assert_relative_eq!(kernel_e_xh(&union, &p).unwrap(), 27.0 / (4.0 * PI), max_relative = 1e-10);
        }
        let s3 = SpectralBlock::sphere_degree(3, 4).unwrap();
        let e = kernel_e_xh(&s3, &Point::Sphere { theta: 0.0, phi: 0.0 }).unwrap();
        assert_relative_eq!(e, 25.0 / (2.0 * PI * PI), max_relative = 1e-13);
    }

    #[test]
    fn one_hot_and_peak_function() {
        let b = SpectralBlock::torus_shell(2, 25).unwrap();
        let n = b.dim();
        let x = Point::Torus(vec![0.3, -1.2]);
        let mut e1 = vec![Complex64::new(0.0, 0.0); n];
        e1[0] = Complex64::new(1.0, 0.0);
        let v = synthesize(&b, &e1, std::slice::from_ref(&x)).unwrap()[0];
        assert_relative_eq!(v.re, mode_values(&b, &x).unwrap()[0].re, max_relative = 1e-15);
        let peak = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
        let v0 = synthesize(&b, &peak, &[Point::Torus(vec![0.0, 0.0])]).unwrap()[0];
        assert_relative_eq!(v0.re, (n as f64).sqrt() / (2.0 * PI), max_relative = 1e-13);
        assert!(synthesize(&b, &peak[1..], &[x]).is_err());
    }

    #[test]
    fn quadrature_grids_recover_unit_l2_norm() {
        let mut rng = RngStream::new(4, 4);
        let blocks = [
            SpectralBlock::sphere_degree(2, 10).unwrap(),
            SpectralBlock::sphere_degrees(2, 4, 6).unwrap(),
            SpectralBlock::torus(2, FrequencyWindow::new(0.25, 1.0, 2.0).unwrap()).unwrap(),
        ];
        for b in &blocks {
            let g = FieldGrid::quadrature(b, 2).unwrap();
            let mut c: Vec<Complex64> = (0..b.dim()).map(|_| Complex64::new(rng.gaussian(), rng.gaussian())).collect();
            let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            c.iter_mut().for_each(|z| *z /= norm);
            let u = g.synthesize(&c).unwrap();
            let l2: f64 = u.iter().zip(g.weights()).map(|(u, w)| w * u.norm_sqr()).sum();
            assert!((l2 - 1.0).abs() < 1e-8, "l2 = {l2}");
        }
    }

    #[test]
    fn grid_synthesis_is_linear() {
        let b = SpectralBlock::sphere_degree(2, 6).unwrap();
        let g = FieldGrid::sup(&b).unwrap();
        let mut rng = RngStream::new(6, 6);
        let c1: Vec<f64> = (0..13).map(|_| rng.gaussian()).collect();
        let c2: Vec<f64> = (0..13).map(|_| rng.gaussian()).collect();
        let mix: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| 0.7 * a - 1.9 * b).collect();
        let (u1, u2, um) = (g.synthesize_real(&c1).unwrap(), g.synthesize_real(&c2).unwrap(), g.synthesize_real(&mix).unwrap());
        for i in 0..um.len() {
            assert!((um[i] - (0.7 * u1[i] - 1.9 * u2[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn higher_spheres_are_not_evaluated() {
        let b = SpectralBlock::sphere_degree(3, 2).unwrap();
        assert!(FieldGrid::quadrature(&b, 2).is_err());
        assert!(mode_values(&b, &Point::Sphere { theta: 0.0, phi: 0.0 }).is_err());
    }
}
