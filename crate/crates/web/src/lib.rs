//! Browser bindings: a random spherical harmonic field, the tail law of one
//! coefficient, and the energy of a damped wave on the flat torus.

use randwave::ensembles::{sample_sphere_uniform, Field};
use randwave::geometry::FrequencyWindow;
use randwave::normlab::coordinate_survival;
use randwave::rng::RngStream;
use randwave::sphere::RingSynthesizer;
use randwave::wave::{energy_curve, sample_unit_energy, DampingProfile, DampingStep, StrangStepper, WaveSpace};
use std::f64::consts::PI;
use wasm_bindgen::prelude::*;

fn js_err(e: randwave::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Real random field of degree `k` on `S^2` sampled on a `height x width`
/// latitude-longitude grid, row-major from the north pole.
#[wasm_bindgen]
pub fn sphere_field_image(k: u32, seed: u64, width: usize, height: usize) -> Result<Vec<f32>, JsError> {
    if width < 2 || height < 2 {
        return Err(JsError::new("image needs at least 2 x 2 pixels"));
    }
    let thetas: Vec<f64> = (0..height).map(|i| PI * (i as f64 + 0.5) / height as f64).collect();
    let synth = RingSynthesizer::new(&[k], &thetas, width).map_err(js_err)?;
    let mut rng = RngStream::new(seed, 0);
    let coeffs: Vec<f64> = sample_sphere_uniform(synth.dim(), Field::Real, &mut rng).map_err(js_err)?.iter().map(|z| z.re).collect();
    let values = synth.synthesize_real(&coeffs).map_err(js_err)?;
    Ok(values.into_iter().map(|v| v as f32).collect())
}

/// `[t, empirical P(|a_1| > t), exact P(|a_1| > t)]` triples for `a` uniform
/// on the unit sphere of `C^n`, at `points` thresholds in `[0, 1]`.
#[wasm_bindgen]
pub fn coefficient_tail(n: usize, samples: usize, points: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    if samples == 0 || points < 2 {
        return Err(JsError::new("need samples > 0 and at least two thresholds"));
    }
    let mut rng = RngStream::new(seed, 1);
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        draws.push(sample_sphere_uniform(n, Field::Complex, &mut rng).map_err(js_err)?[0].norm());
    }
    draws.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let above = samples - draws.partition_point(|&v| v <= t);
        out.extend([t, above as f64 / samples as f64, coordinate_survival(t, n, Field::Complex)]);
    }
    Ok(out)
}

/// Energy every `tau` up to `t_max` for unit-energy data on the block
/// `h |n| in (1, 1.5]` of `T^2`, damped by `a0 ((1 + cos x_1)/2)^2`.
#[wasm_bindgen]
pub fn damped_energy_curve(a0: f64, h: f64, tau: f64, t_max: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    if !(tau > 0.0 && t_max >= 0.0 && t_max / tau <= 1e5) {
        return Err(JsError::new("need tau > 0 and at most 1e5 samples"));
    }
    let window = FrequencyWindow::new(h, 1.0, 1.5).map_err(js_err)?;
    let space = WaveSpace::new(2, 1.5 / h + 4.0).map_err(js_err)?;
    let block = space.block_indices(&window);
    let substeps = (tau * 2.0 * space.cutoff()).ceil() as usize;
    let damping = DampingProfile::strip(2, a0, 2).map_err(js_err)?;
    let mut rng = RngStream::new(seed, 2);
    let state = sample_unit_energy(&space, &block, &mut rng).map_err(js_err)?;
    let stepper = StrangStepper::new(space, &damping, tau / substeps as f64, DampingStep::Galerkin).map_err(js_err)?;
    energy_curve(&stepper, &state, substeps, (t_max / tau).round() as usize).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_has_requested_shape() {
        let img = sphere_field_image(6, 1, 32, 16).unwrap();
        assert_eq!(img.len(), 512);
        assert!(img.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn tail_curve_starts_at_one() {
        let c = coefficient_tail(8, 500, 11, 3).unwrap();
        assert_eq!(c.len(), 33);
        assert_eq!((c[1], c[2]), (1.0, 1.0));
        assert_eq!(c[31], 0.0);
    }

    #[test]
    fn energy_curve_decreases() {
        let e = damped_energy_curve(2.0, 0.25, 0.1, 2.0, 4).unwrap();
        assert_eq!(e.len(), 21);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-9) && e[20] < 0.5);
    }
}
