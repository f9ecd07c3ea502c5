//! Norms of block fields, the closed-form moments `A_{q,h}`, and the
//! Monte-Carlo experiments built on them.

mod experiments;

pub use experiments::*;

use crate::ensembles::Field;
use crate::error::{invalid, Result};
use crate::fields::FieldGrid;
use crate::geometry::{ManifoldKind, SpectralBlock};
use crate::special::ln_gamma;
use num_complex::Complex64;

/// `(sum_i w_i |u_i|^q)^{1/q}` for samples on a quadrature grid.
pub fn lq_norm(values: &[Complex64], weights: &[f64], q: f64) -> Result<f64> {
    Ok(lq_power(values, weights, q)?.powf(1.0 / q))
}

/// `sum_i w_i |u_i|^q`, i.e. `||u||_q^q`.
pub fn lq_power(values: &[Complex64], weights: &[f64], q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(invalid(format!("L^q exponent {q} must lie in [1, inf)")));
    }
    if values.len() != weights.len() {
        return Err(crate::Error::DimensionMismatch { expected: weights.len(), got: values.len() });
    }
    let even = q.fract() == 0.0 && (q as u64) % 2 == 0;
    Ok(values
        .iter()
        .zip(weights)
        .map(|(u, w)| {
            let a2 = u.norm_sqr();
            w * if even { a2.powi((q / 2.0) as i32) } else { a2.powf(q / 2.0) }
        })
        .sum())
}

/// Grid supremum of `|u|`.
pub fn grid_sup(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `L^inf` estimate on a fourfold oversampled grid.
///
/// The grid maximum is a lower bound for the true supremum; the gap is at
/// most the grid mesh radius times `sup |grad u|`, which for a block field of
/// top frequency `w` is of order `w ||u||_inf`.
pub struct LinfEvaluator {
    grid: FieldGrid,
}

impl LinfEvaluator {
    pub fn new(block: &SpectralBlock) -> Result<Self> {
        Ok(Self { grid: FieldGrid::sup(block)? })
    }

    pub fn eval(&self, coeffs: &[Complex64]) -> Result<f64> {
        Ok(grid_sup(&self.grid.synthesize(coeffs)?))
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }
}

pub fn linf_norm(block: &SpectralBlock, coeffs: &[Complex64]) -> Result<f64> {
    LinfEvaluator::new(block)?.eval(coeffs)
}

/// `ln E|<a, e_1>|^q` for `a` uniform on the unit sphere of `C^N` or `R^N`.
pub fn ln_coordinate_moment(q: f64, n: usize, field: Field) -> f64 {
    let n = n as f64;
    match field {
        // q int_0^1 z^{q-1} (1 - z^2)^{N-1} dz = q Gamma(q/2) Gamma(N) / (2 Gamma(q/2 + N))
        Field::Complex => q.ln() + ln_gamma(q / 2.0) + ln_gamma(n) - 2f64.ln() - ln_gamma(q / 2.0 + n),
        Field::Real => ln_gamma((q + 1.0) / 2.0) + ln_gamma(n / 2.0) - 0.5 * std::f64::consts::PI.ln() - ln_gamma((q + n) / 2.0),
    }
}

/// `A_{q,h}` for a block whose projector diagonal `e_{x,h}` is the constant `N / Vol`.
///
/// `A^q = E ||u||_q^q = (int_M e_{x,h}^{q/2} dx) E|<a, e_1>|^q` with the
/// coordinate moment taken on the complex or real coefficient sphere. The
/// real variant needs a real orthonormal basis, so it is only available on
/// spheres.
pub fn a_qh_closed_form(q: f64, block: &SpectralBlock, field: Field) -> Result<f64> {
    if field == Field::Real && block.manifold().is_torus() {
        return Err(invalid("the real ensemble needs a real eigenbasis; torus blocks use complex exponentials"));
    }
    if matches!(block.manifold().kind(), ManifoldKind::Sphere(1)) {
        return Err(invalid("S^1 blocks are handled as T^1"));
    }
    a_qh_constant_profile(q, block.dim(), block.manifold().volume(), field)
}

/// `A_{q,h}` from `q`, `N` and `Vol(M)` when `e_{x,h} = N / Vol` everywhere.
pub fn a_qh_constant_profile(q: f64, n: usize, volume: f64, field: Field) -> Result<f64> {
    if !(q >= 2.0 && q.is_finite()) {
        return Err(invalid(format!("A_(q,h) is defined for q >= 2, got {q}")));
    }
    if n == 0 {
        return Err(invalid("empty block"));
    }
    let half = q / 2.0;
    if half.fract() == 0.0 && half <= 256.0 {
        // even q: the Gamma ratios collapse to products of terms close to 1
        let nn = n as f64;
        let aq = match field {
            Field::Complex => {
                let g: f64 = (1..half as usize).map(|j| j as f64).product();
                half * g * (0..half as usize).map(|j| nn / (nn + j as f64)).product::<f64>()
            }
            Field::Real => {
                let dfact: f64 = (0..half as usize).map(|j| (2 * j + 1) as f64).product();
                dfact * (0..half as usize).map(|j| nn / (nn + 2.0 * j as f64)).product::<f64>()
            }
        };
        return Ok((aq * volume.powf(1.0 - half)).powf(1.0 / q));
    }
    let ln_e = (n as f64).ln() - volume.ln();
    let ln_aq = volume.ln() + half * ln_e + ln_coordinate_moment(q, n, field);
    Ok((ln_aq / q).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::sample_sphere_uniform;
    use crate::geometry::{FrequencyWindow, ModeId};
    use crate::parallel::MonteCarlo;
    use crate::quadrature::adaptive_simpson;
    use crate::special::gamma;
    use crate::stats::MeanEstimate;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_norms() {
        let block = SpectralBlock::sphere_degrees(2, 1, 2).unwrap();
        let grid = FieldGrid::quadrature(&block, 4).unwrap();
        let c = vec![Complex64::new(-0.7, 0.0); grid.len()];
        for q in [1.0, 2.0, 3.5, 6.0] {
            assert_relative_eq!(lq_norm(&c, grid.weights(), q).unwrap(), 0.7 * (4.0 * PI).powf(1.0 / q), max_relative = 1e-12);
        }
        assert!(lq_norm(&c, grid.weights(), 0.5).is_err());
    }

    #[test]
    fn single_torus_mode_norms() {
        let block = SpectralBlock::torus(2, FrequencyWindow::new(1.0, 2.9, 3.0).unwrap()).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); block.dim()];
        c[1] = Complex64::new(1.0, 0.0);
        for q in [2.0, 4.0, 5.0] {
            let g = FieldGrid::quadrature(&block, q as usize).unwrap();
            let u = g.synthesize(&c).unwrap();
            assert_relative_eq!(lq_norm(&u, g.weights(), q).unwrap(), (2.0 * PI).powf(2.0 / q - 1.0), max_relative = 1e-10);
        }
        assert_relative_eq!(linf_norm(&block, &c).unwrap(), 1.0 / (2.0 * PI), max_relative = 1e-10);
    }

    #[test]
    fn zonal_and_peak_sup_values() {
        let block = SpectralBlock::sphere_degree(2, 10).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 21];
        c[10] = Complex64::new(1.0, 0.0);
        assert_relative_eq!(linf_norm(&block, &c).unwrap(), (21.0 / (4.0 * PI)).sqrt(), max_relative = 1e-6);

        let shell = SpectralBlock::torus_shell(2, 25).unwrap();
        let peak = vec![Complex64::new(1.0 / 12f64.sqrt(), 0.0); 12];
        assert_relative_eq!(linf_norm(&shell, &peak).unwrap(), 12f64.sqrt() / (2.0 * PI), max_relative = 1e-10);
    }

    #[test]
    fn a2_is_one() {
        for k in [5, 10, 20] {
            let b = SpectralBlock::sphere_degree(2, k).unwrap();
            for field in [Field::Complex, Field::Real] {
                assert_relative_eq!(a_qh_closed_form(2.0, &b, field).unwrap(), 1.0, max_relative = 1e-13);
            }
        }
        let t = SpectralBlock::torus(2, FrequencyWindow::new(0.1, 1.0, 2.0).unwrap()).unwrap();
        assert_relative_eq!(a_qh_closed_form(2.0, &t, Field::Complex).unwrap(), 1.0, max_relative = 1e-13);
        assert!(a_qh_closed_form(1.5, &t, Field::Complex).is_err());
        assert!(a_qh_closed_form(4.0, &t, Field::Real).is_err());
    }

    #[test]
    fn coordinate_moment_matches_beta_integral() {
        for (q, n) in [(4.0, 21usize), (3.0, 5), (6.5, 40)] {
            let nn = n as f64;
            let integral = adaptive_simpson(|z| z.powf(q - 1.0) * (1.0 - z * z).powf(nn - 1.0), 0.0, 1.0, 1e-14).unwrap();
            assert_relative_eq!(ln_coordinate_moment(q, n, Field::Complex).exp(), q * integral, max_relative = 1e-8);
            // real coordinate: density of a_1 is (1 - t^2)^{(N-3)/2} / B(1/2, (N-1)/2) on [-1, 1]
            let b = gamma(0.5) * gamma((nn - 1.0) / 2.0) / gamma(nn / 2.0);
            let real = 2.0 * adaptive_simpson(|t| t.powf(q) * (1.0 - t * t).powf((nn - 3.0) / 2.0), 0.0, 1.0, 1e-14).unwrap() / b;
            assert_relative_eq!(ln_coordinate_moment(q, n, Field::Real).exp(), real, max_relative = 1e-8);
        }
    }

    #[test]
    fn sphere_formula_form() {
        // A = N^{1/2} Vol^{1/q - 1/2} (q Gamma(q/2) Gamma(N) / (2 Gamma(q/2 + N)))^{1/q}
        let (q, n): (f64, f64) = (4.0, 21.0);
        let vol = 4.0 * PI;
        let want = n.sqrt() * vol.powf(1.0 / q - 0.5) * (q * gamma(q / 2.0) * gamma(n) / (2.0 * gamma(q / 2.0 + n))).powf(1.0 / q);
        let b = SpectralBlock::sphere_degree(2, 10).unwrap();
        assert_relative_eq!(a_qh_closed_form(q, &b, Field::Complex).unwrap(), want, max_relative = 1e-12);
    }

    #[test]
    fn large_n_limit() {
        let vol = 4.0 * PI;
        let n = 1_000_000;
        for q in [6.0, 10.0] {
            let a = a_qh_constant_profile(q, n, vol, Field::Complex).unwrap();
            // Gamma(N) / Gamma(N + q/2) -> N^{-q/2}
            let limit = (gamma(q / 2.0 + 1.0) * vol.powf(1.0 - q / 2.0)).powf(1.0 / q);
            assert_relative_eq!(a, limit, max_relative = 1e-4);
        }
        // the normalized ratio approaches 1 as q grows with N
        let ratio = |q: f64| a_qh_constant_profile(q, 10usize.pow(12), vol, Field::Complex).unwrap() / (q / (2.0 * std::f64::consts::E * vol)).sqrt();
        let r: Vec<f64> = [6.0, 12.0, 24.0, 27.0].iter().map(|&q| ratio(q)).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
        assert!(r[3] < 1.2);
    }

    #[test]
    fn monte_carlo_fourth_moment() {
        let b = SpectralBlock::sphere_degree(2, 10).unwrap();
        let g = FieldGrid::quadrature(&b, 4).unwrap();
        let mc = MonteCarlo::serial(3);
        let xs = mc.map(0, 4000, |_, rng| {
            let c = sample_sphere_uniform(21, Field::Complex, rng).unwrap();
            lq_power(&g.synthesize(&c).unwrap(), g.weights(), 4.0).unwrap()
        });
        let est = MeanEstimate::from_samples(&xs);
        assert!(est.z_score(a_qh_closed_form(4.0, &b, Field::Complex).unwrap().powi(4)) < 3.5);
    }

    #[test]
    fn lattice_blocks_only_carry_lattice_ids() {
        let b = SpectralBlock::torus_shell(3, 1).unwrap();
        assert!(b.modes().iter().all(|m| matches!(m.id, ModeId::Lattice(_))));
    }
}
