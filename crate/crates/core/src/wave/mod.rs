//! Spectral Galerkin solver for the damped wave equation
//! `u_tt - Laplace u + 2 a(x) u_t = 0` on `T^d`, `d in {1, 2}`.
//!
//! States hold the coefficients of `(u, u_t)` on the orthonormal exponentials
//! `e_n`, `|n| <= cutoff`. Time stepping is Strang splitting of two exactly
//! solvable flows: the free wave rotation and the damping flow `v' = -2 a v`.

mod experiments;

pub use experiments::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::FrequencyWindow;
use crate::torus::{fft_size_at_least, fftn, TorusGrid};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Lattice modes `|n| <= cutoff` of `T^d`, lexicographic.
#[derive(Clone, Debug)]
pub struct WaveSpace {
    d: usize,
    cutoff: f64,
    extent: i32,
    modes: Vec<[i32; 2]>,
    freqs: Vec<f64>,
    lookup: Vec<usize>,
}

impl WaveSpace {
    pub fn new(d: usize, cutoff: f64) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(invalid(format!("wave solver supports T^1 and T^2, got d = {d}")));
        }
        if !(cutoff >= 1.0 && cutoff.is_finite()) {
            return Err(invalid(format!("cutoff {cutoff} must be finite and >= 1")));
        }
        let extent = cutoff.floor() as i32;
        let side = (2 * extent + 1) as usize;
        let mut lookup = vec![usize::MAX; side.pow(d as u32)];
        let mut modes = Vec::new();
        let mut freqs = Vec::new();
        let r2max = (cutoff * cutoff * (1.0 + 1e-14)).floor() as i64;
        let second = if d == 2 { -extent..=extent } else { 0..=0 };
        for n1 in -extent..=extent {
            for n2 in second.clone() {
                let r2 = (n1 as i64).pow(2) + (n2 as i64).pow(2);
                if r2 <= r2max {
                    let n = [n1, n2];
                    lookup[Self::slot(d, extent, n)] = modes.len();
                    modes.push(n);
                    freqs.push((r2 as f64).sqrt());
                }
            }
        }
        Ok(Self { d, cutoff, extent, modes, freqs, lookup })
    }

    fn slot(d: usize, extent: i32, n: [i32; 2]) -> usize {
        let side = 2 * extent + 1;
        let a = (n[0] + extent) as usize;
        if d == 1 {
            a
        } else {
            a * side as usize + (n[1] + extent) as usize
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[[i32; 2]] {
        &self.modes
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn max_frequency(&self) -> f64 {
        self.freqs.iter().copied().fold(0.0, f64::max)
    }

    pub fn index(&self, n: [i32; 2]) -> Option<usize> {
        if n[0].abs() > self.extent || n[1].abs() > self.extent || (self.d == 1 && n[1] != 0) {
            return None;
        }
        let i = self.lookup[Self::slot(self.d, self.extent, n)];
        (i != usize::MAX).then_some(i)
    }

    /// Indices of modes with `h |n|` in the window.
    pub fn block_indices(&self, window: &FrequencyWindow) -> Vec<usize> {
        (0..self.dim()).filter(|&i| window.contains(self.freqs[i])).collect()
    }

    /// Position of mode `i` evaluated at `x`, normalized exponential.
    pub fn mode_value(&self, i: usize, x: &[f64]) -> Complex64 {
        let n = self.modes[i];
        let phase: f64 = (0..self.d).map(|a| n[a] as f64 * x[a]).sum();
        Complex64::from_polar((2.0 * PI).powf(-(self.d as f64) / 2.0), phase)
    }
}

/// Coefficients of `(u, u_t)` at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveState {
    pub u0: Vec<Complex64>,
    pub u1: Vec<Complex64>,
    pub t: f64,
}

impl WaveState {
    pub fn zeros(space: &WaveSpace) -> Self {
        Self { u0: vec![ZERO; space.dim()], u1: vec![ZERO; space.dim()], t: 0.0 }
    }

    fn check(&self, space: &WaveSpace) -> Result<()> {
        if self.u0.len() != space.dim() || self.u1.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: self.u0.len().min(self.u1.len()) });
        }
        Ok(())
    }

    /// `u_1 -> -u_1`, the time reversal that realizes the energy adjoint.
    pub fn flip(&mut self) {
        self.u1.iter_mut().for_each(|z| *z = -*z);
    }
}

/// `E = (1/2) sum (|n|^2 |u0_n|^2 + |u1_n|^2)`; the zero mode of `u0` carries no energy.
pub fn energy(space: &WaveSpace, state: &WaveState) -> f64 {
    0.5 * space
        .freqs
        .iter()
        .zip(state.u0.iter().zip(&state.u1))
        .map(|(w, (a, b))| w * w * a.norm_sqr() + b.norm_sqr())
        .sum::<f64>()
}

/// Energy carried by a subset of modes.
pub fn partial_energy(space: &WaveSpace, state: &WaveState, indices: &[usize]) -> f64 {
    0.5 * indices
        .iter()
        .map(|&i| space.freqs[i].powi(2) * state.u0[i].norm_sqr() + state.u1[i].norm_sqr())
        .sum::<f64>()
}

fn rotate(w: f64, c: f64, s: f64, u0: &mut Complex64, u1: &mut Complex64) {
    let (a, b) = (*u0, *u1);
    *u0 = a * c + b * (s / w);
    *u1 = b * c - a * (w * s);
}

/// Exact free flow over time `t`; zero mode drifts as `u0 + t u1`.
pub fn free_propagator(space: &WaveSpace, state: &WaveState, t: f64) -> Result<WaveState> {
    state.check(space)?;
    let mut out = state.clone();
    for (i, &w) in space.freqs.iter().enumerate() {
        if w == 0.0 {
            out.u0[i] += out.u1[i] * t;
        } else {
            let (s, c) = (w * t).sin_cos();
            rotate(w, c, s, &mut out.u0[i], &mut out.u1[i]);
        }
    }
    out.t += t;
    Ok(out)
}

/// Nonnegative damping `a(x) = sum_k a_k e^{i k.x}` with finitely many terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DampingProfile {
    d: usize,
    terms: Vec<([i32; 2], Complex64)>,
    min_value: f64,
    max_value: f64,
}

impl DampingProfile {
    /// Validates reality (`a_{-k} = conj(a_k)`) and nonnegativity on a fine grid;
    /// values in `[-1e-12, 0)` are accepted as round-off.
    pub fn new(d: usize, terms: Vec<([i32; 2], Complex64)>) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(invalid("damping profiles live on T^1 or T^2"));
        }
        let mut merged: Vec<([i32; 2], Complex64)> = Vec::new();
        for (k, c) in terms {
            if d == 1 && k[1] != 0 {
                return Err(invalid("T^1 damping terms must have k_2 = 0"));
            }
            match merged.iter_mut().find(|(j, _)| *j == k) {
                Some(e) => e.1 += c,
                None => merged.push((k, c)),
            }
        }
        merged.retain(|(_, c)| c.norm() > 0.0);
        merged.sort_by_key(|(k, _)| *k);
        for (k, c) in &merged {
            let partner = merged.iter().find(|(j, _)| *j == [-k[0], -k[1]]).map(|(_, c)| *c).unwrap_or(ZERO);
            if (partner - c.conj()).norm() > 1e-13 * (1.0 + c.norm()) {
                return Err(invalid(format!("damping coefficients at {k:?} break reality")));
            }
        }
        let kmax = merged.iter().map(|(k, _)| k[0].abs().max(k[1].abs())).max().unwrap_or(0) as usize;
        let p = fft_size_at_least((16 * kmax + 64).max(64));
        let grid = TorusGrid::new(d, p)?;
        let mut data = vec![ZERO; grid.len()];
        for (k, c) in &merged {
            data[grid.wrap_index(&k[..d])] += c;
        }
        fftn(&mut data, grid, true);
        let min_value = data.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let max_value = data.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if min_value < -1e-12 {
            return Err(invalid(format!("damping takes the negative value {min_value}")));
        }
        Ok(Self { d, terms: merged, min_value: min_value.max(0.0), max_value })
    }

    pub fn zero(d: usize) -> Result<Self> {
        Self::new(d, Vec::new())
    }

    pub fn constant(d: usize, a0: f64) -> Result<Self> {
        Self::new(d, vec![([0, 0], Complex64::new(a0, 0.0))])
    }

    /// `a0 ((1 + cos x_1) / 2)^p`, vanishing only on the line `x_1 = pi`.
    pub fn strip(d: usize, a0: f64, p: u32) -> Result<Self> {
        let p = p as i64;
        let scale = a0 * 4f64.powi(-(p as i32));
        let terms = (0..=2 * p)
            .map(|j| {
                let c = crate::special::binomial((2 * p) as u64, j as u64) as f64;
                ([(p - j) as i32, 0], Complex64::new(scale * c, 0.0))
            })
            .collect();
        Self::new(d, terms)
    }

    /// `a0 (1 - r^2) / (1 - 2 r cos x_1 + r^2) = a0 sum_k r^{|k|} e^{i k x_1}`,
    /// smooth and positive, truncated once `r^{|k|} < 1e-17`.
    pub fn poisson(d: usize, a0: f64, r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(invalid(format!("Poisson radius {r} must lie in [0, 1)")));
        }
        let kmax = if r == 0.0 { 0 } else { (-17.0 / r.log10()).ceil() as i32 };
        let terms = (-kmax..=kmax).map(|k| ([k, 0], Complex64::new(a0 * r.powi(k.abs()), 0.0))).collect();
        Self::new(d, terms)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[([i32; 2], Complex64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.terms.iter().filter(|(k, _)| *k == [0, 0]).map(|(_, c)| c.re).sum()
    }

    /// Grid minimum found by the nonnegativity certificate (clipped at 0).
    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let phase: f64 = (0..self.d).map(|a| k[a] as f64 * x[a]).sum();
                (c * Complex64::from_polar(1.0, phase)).re
            })
            .sum()
    }

    /// `(1/t) int_0^t a(x + s dir) ds`, integrated term by term.
    pub fn birkhoff_average(&self, x: &[f64], dir: &[f64], t: f64) -> Result<f64> {
        self.check_ray(x, dir)?;
        if t <= 0.0 {
            return Ok(self.eval(x));
        }
        Ok(self
            .terms
            .iter()
            .map(|(k, c)| {
                let kx: f64 = (0..self.d).map(|a| k[a] as f64 * x[a]).sum();
                let kappa: f64 = (0..self.d).map(|a| k[a] as f64 * dir[a]).sum();
                let z = kappa * t;
                // (e^{iz} - 1) / (iz)
                let factor = if z.abs() < 1e-8 {
                    Complex64::new(1.0 - z * z / 6.0, z / 2.0)
                } else {
                    (Complex64::from_polar(1.0, z) - 1.0) / Complex64::new(0.0, z)
                };
                (c * Complex64::from_polar(1.0, kx) * factor).re
            })
            .sum())
    }

    /// `lim_{t -> inf}` of the Birkhoff average: only terms with `k.dir = 0` survive.
    pub fn birkhoff_limit_estimate(&self, x: &[f64], dir: &[f64]) -> Result<f64> {
        self.check_ray(x, dir)?;
        Ok(self
            .terms
            .iter()
            .filter(|(k, _)| (0..self.d).map(|a| k[a] as f64 * dir[a]).sum::<f64>().abs() < 1e-12)
            .map(|(k, c)| {
                let kx: f64 = (0..self.d).map(|a| k[a] as f64 * x[a]).sum();
                (c * Complex64::from_polar(1.0, kx)).re
            })
            .sum())
    }

    fn check_ray(&self, x: &[f64], dir: &[f64]) -> Result<()> {
        if x.len() != self.d || dir.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len().min(dir.len()) });
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("direction must be a unit vector, |dir| = {norm}")));
        }
        Ok(())
    }
}

/// Sparse operator `v -> P (f v)` on a wave space, for a multiplier `f` given
/// by Fourier coefficients.
#[derive(Clone, Debug)]
struct Stencil {
    offsets: Vec<usize>,
    entries: Vec<(usize, Complex64)>,
}

impl Stencil {
    fn new(space: &WaveSpace, terms: &[([i32; 2], Complex64)]) -> Self {
        let mut offsets = Vec::with_capacity(space.dim() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for n in space.modes() {
            for (k, c) in terms {
                if let Some(j) = space.index([n[0] - k[0], n[1] - k[1]]) {
                    entries.push((j, *c));
                }
            }
            offsets.push(entries.len());
        }
        Self { offsets, entries }
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.entries[self.offsets[i]..self.offsets[i + 1]].iter().map(|(j, c)| c * v[*j]).sum();
        }
    }

    fn is_scalar(&self) -> Option<Complex64> {
        let first = self.entries.first()?;
        let all_diag = (0..self.offsets.len() - 1).all(|i| {
            let row = &self.entries[self.offsets[i]..self.offsets[i + 1]];
            row.len() == 1 && row[0].0 == i && row[0].1 == first.1
        });
        all_diag.then_some(first.1)
    }
}

/// How the damping sub-flow `v' = -2 a v` is realized on the Galerkin space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
pub enum DampingStep {
    /// Exact flow of the projected equation, `exp(-2 dt P a P)`, summed as a
    /// Taylor series to round-off.
    #[default]
    Galerkin,
    /// `P (e^{-2 a dt} v)`: pointwise factor applied through its Fourier
    /// coefficients, computed on a grid padded to twice the stencil width.
    Pointwise,
}

enum DampingApply {
    None,
    Scalar(Complex64),
    Taylor(Stencil, f64),
    Multiplier(Stencil),
}

/// Second-order Strang stepper `F(dt/2) D(dt) F(dt/2)`.
pub struct StrangStepper {
    space: WaveSpace,
    dt: f64,
    half: Vec<(f64, f64)>,
    damping: DampingApply,
    rate_op: Option<Stencil>,
}

impl StrangStepper {
    pub fn new(space: WaveSpace, damping: &DampingProfile, dt: f64, mode: DampingStep) -> Result<Self> {
        if damping.d() != space.d() {
            return Err(Error::DimensionMismatch { expected: space.d(), got: damping.d() });
        }
        let limit = 0.5 / space.cutoff();
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(Error::UnstableStep { dt, limit });
        }
        let half = space.freqs.iter().map(|w| (w * dt / 2.0).sin_cos()).collect();
        let rate_op = (!damping.is_zero()).then(|| Stencil::new(&space, damping.terms()));
        let apply = match (&rate_op, mode) {
            (None, _) => DampingApply::None,
            (Some(op), DampingStep::Galerkin) => match op.is_scalar() {
                Some(a) => DampingApply::Scalar((-2.0 * dt * a).exp()),
                None => DampingApply::Taylor(op.clone(), dt),
            },
            (Some(_), DampingStep::Pointwise) => {
                let terms = multiplier_coefficients(&space, damping, dt)?;
                let st = Stencil::new(&space, &terms);
                match st.is_scalar() {
                    Some(m) => DampingApply::Scalar(m),
                    None => DampingApply::Multiplier(st),
                }
            }
        };
        Ok(Self { space, dt, half, damping: apply, rate_op })
    }

    pub fn space(&self) -> &WaveSpace {
        &self.space
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn half_free(&self, s: &mut WaveState) {
        for (i, (&w, &(sn, cs))) in self.space.freqs.iter().zip(&self.half).enumerate() {
            if w == 0.0 {
                s.u0[i] += s.u1[i] * (self.dt / 2.0);
            } else {
                rotate(w, cs, sn, &mut s.u0[i], &mut s.u1[i]);
            }
        }
    }

    fn damp(&self, v: &mut [Complex64]) {
        match &self.damping {
            DampingApply::None => {}
            DampingApply::Scalar(m) => v.iter_mut().for_each(|z| *z *= m),
            DampingApply::Multiplier(st) => {
                let mut out = vec![ZERO; v.len()];
                st.apply(v, &mut out);
                v.copy_from_slice(&out);
            }
            DampingApply::Taylor(st, dt) => {
                let scale = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if scale == 0.0 {
                    return;
                }
                let mut term = v.to_vec();
                let mut next = vec![ZERO; v.len()];
                for j in 1..60 {
                    st.apply(&term, &mut next);
                    let f = -2.0 * dt / j as f64;
                    let mut size = 0.0;
                    for (t, n) in term.iter_mut().zip(&next) {
                        *t = n * f;
                        size += t.norm_sqr();
                    }
                    v.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
                    if size.sqrt() <= 1e-18 * scale {
                        break;
                    }
                }
            }
        }
    }

    pub fn step(&self, s: &mut WaveState) {
        self.half_free(s);
        self.damp(&mut s.u1);
        self.half_free(s);
        s.t += self.dt;
    }

    /// Instantaneous dissipation `2 int a |u_t|^2`.
    pub fn dissipation_rate(&self, s: &WaveState) -> f64 {
        match &self.rate_op {
            None => 0.0,
            Some(op) => {
                let mut av = vec![ZERO; s.u1.len()];
                op.apply(&s.u1, &mut av);
                2.0 * s.u1.iter().zip(&av).map(|(v, a)| (v.conj() * a).re).sum::<f64>()
            }
        }
    }

    pub fn energy(&self, s: &WaveState) -> f64 {
        energy(&self.space, s)
    }
}

/// Fourier coefficients of `e^{-2 a dt}` with `|k_i| <= 2 * extent`,
/// negligible ones dropped.
fn multiplier_coefficients(space: &WaveSpace, damping: &DampingProfile, dt: f64) -> Result<Vec<([i32; 2], Complex64)>> {
    let d = space.d();
    let reach = 2 * space.extent;
    let p = fft_size_at_least(2 * (2 * reach as usize + 1));
    let grid = TorusGrid::new(d, p)?;
    let mut vals: Vec<Complex64> = (0..grid.len())
        .map(|i| Complex64::new((-2.0 * dt * damping.eval(&grid.point(i))).exp(), 0.0))
        .collect();
    fftn(&mut vals, grid, false);
    let norm = 1.0 / grid.len() as f64;
    let biggest = vals.iter().map(|z| z.norm()).fold(0.0, f64::max) * norm;
    let mut out = Vec::new();
    let second = if d == 2 { -reach..=reach } else { 0..=0 };
    for k1 in -reach..=reach {
        for k2 in second.clone() {
            let k = [k1, k2];
            let c = vals[grid.wrap_index(&k[..d])] * norm;
            if c.norm() > 1e-15 * biggest {
                out.push((k, c));
            }
        }
    }
    Ok(out)
}

/// Energies and dissipation rates at every step, plus strided snapshots.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub rates: Vec<f64>,
    pub states: Vec<WaveState>,
}

impl Trajectory {
    pub fn final_energy(&self) -> f64 {
        *self.energies.last().unwrap()
    }
}

/// Evolve to `t_final` with `ceil(t_final / dt)` equal steps (so the step used
/// never exceeds `dt`), keeping every `stride`-th state (`stride = 0` keeps
/// only the endpoints).
pub fn damped_evolve(space: &WaveSpace, damping: &DampingProfile, state: &WaveState, t_final: f64, dt: f64, stride: usize, mode: DampingStep) -> Result<Trajectory> {
    state.check(space)?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(invalid("final time must be finite and >= 0"));
    }
    let limit = 0.5 / space.cutoff();
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::UnstableStep { dt, limit });
    }
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let h = if t_final == 0.0 { dt } else { t_final / steps as f64 };
    let steps = if t_final == 0.0 { 0 } else { steps };
    let stepper = StrangStepper::new(space.clone(), damping, h, mode)?;
    let mut s = state.clone();
    let mut traj = Trajectory {
        dt: h,
        times: vec![s.t],
        energies: vec![stepper.energy(&s)],
        rates: vec![stepper.dissipation_rate(&s)],
        states: vec![s.clone()],
    };
    for i in 1..=steps {
        stepper.step(&mut s);
        traj.times.push(s.t);
        traj.energies.push(stepper.energy(&s));
        traj.rates.push(stepper.dissipation_rate(&s));
        if (stride > 0 && i % stride == 0) || i == steps {
            traj.states.push(s.clone());
        }
    }
    Ok(traj)
}

/// `|E(0) - E(T) - int_0^T 2 int a |u_t|^2|` with the time integral by trapezoid.
pub fn dissipation_residual(traj: &Trajectory) -> f64 {
    let integral: f64 = traj.times.windows(2).zip(traj.rates.windows(2)).map(|(t, r)| 0.5 * (t[1] - t[0]) * (r[0] + r[1])).sum();
    (traj.energies[0] - traj.final_energy() - integral).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;

    fn random_state(space: &WaveSpace, rng: &mut RngStream) -> WaveState {
        let mut s = WaveState::zeros(space);
        for i in 0..space.dim() {
            let decay = (-(space.freqs()[i] / 4.0).powi(2)).exp();
            s.u0[i] = Complex64::new(rng.gaussian(), rng.gaussian()) * decay / (1.0 + space.freqs()[i]);
            s.u1[i] = Complex64::new(rng.gaussian(), rng.gaussian()) * decay;
        }
        s
    }

    #[test]
    fn energy_examples() {
        let space = WaveSpace::new(2, 5.0).unwrap();
        let mut s = WaveState::zeros(&space);
        assert_eq!(energy(&space, &s), 0.0);
        let i = space.index([3, 4]).unwrap();
        s.u0[i] = Complex64::new(1.0, 0.0);
        assert_relative_eq!(energy(&space, &s), 12.5);
        let mut z = WaveState::zeros(&space);
        z.u1[space.index([0, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        assert_relative_eq!(energy(&space, &z), 0.5);
    }

    #[test]
    fn space_enumeration() {
        let s1 = WaveSpace::new(1, 3.5).unwrap();
        assert_eq!(s1.dim(), 7);
        let s2 = WaveSpace::new(2, 5.0).unwrap();
        assert_eq!(s2.dim() as u64, crate::geometry::lattice_ball_count(2, 25));
        assert!(s2.index([5, 1]).is_none());
        assert!(WaveSpace::new(3, 4.0).is_err());
    }

    #[test]
    fn free_flow_properties() {
        let space = WaveSpace::new(2, 8.0).unwrap();
        let mut rng = RngStream::new(1, 1);
        let s = random_state(&space, &mut rng);
        let same = free_propagator(&space, &s, 0.0).unwrap();
        assert_eq!(same.u0, s.u0);
        let later = free_propagator(&space, &s, 10.0).unwrap();
        assert!((energy(&space, &later) - energy(&space, &s)).abs() <= 1e-12 * energy(&space, &s).max(1.0));
        let back = free_propagator(&space, &later, -10.0).unwrap();
        for (a, b) in back.u0.iter().chain(&back.u1).zip(s.u0.iter().chain(&s.u1)) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut m = WaveState::zeros(&space);
        let i = space.index([3, 0]).unwrap();
        m.u0[i] = Complex64::new(1.0, 0.0);
        let half = free_propagator(&space, &m, PI / 3.0).unwrap();
        assert!((half.u0[i] + 1.0).norm() < 1e-14 && half.u1[i].norm() < 1e-14);
    }

    #[test]
    fn zero_damping_matches_free_flow() {
        let space = WaveSpace::new(2, 6.0).unwrap();
        let mut rng = RngStream::new(2, 2);
        let s = random_state(&space, &mut rng);
        let traj = damped_evolve(&space, &DampingProfile::zero(2).unwrap(), &s, 3.0, 0.05, 0, DampingStep::Galerkin).unwrap();
        let exact = free_propagator(&space, &s, 3.0).unwrap();
        let last = traj.states.last().unwrap();
        for (a, b) in last.u0.iter().chain(&last.u1).zip(exact.u0.iter().chain(&exact.u1)) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!(dissipation_residual(&traj) < 1e-10);
    }

    #[test]
    fn unstable_steps_are_rejected() {
        let space = WaveSpace::new(1, 10.0).unwrap();
        let s = WaveState::zeros(&space);
        let a = DampingProfile::constant(1, 0.1).unwrap();
        assert!(matches!(damped_evolve(&space, &a, &s, 1.0, 0.06, 0, DampingStep::Galerkin), Err(Error::UnstableStep { .. })));
    }

    fn oscillator_energy(w: f64, a: f64, t: f64) -> f64 {
        // u(0) = 1, u'(0) = 0
        let beta = (w * w - a * a).sqrt();
        let (s, c) = (beta * t).sin_cos();
        let e = (-a * t).exp();
        let u = e * (c + a / beta * s);
        let du = e * (-(w * w) / beta * s);
        0.5 * (w * w * u * u + du * du)
    }

    #[test]
    fn constant_damping_matches_oscillator() {
        let (a0, w) = (0.1, 5.0);
        let space = WaveSpace::new(1, 5.0).unwrap();
        let mut s = WaveState::zeros(&space);
        s.u0[space.index([5, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        let damping = DampingProfile::constant(1, a0).unwrap();
        let coarse = damped_evolve(&space, &damping, &s, 10.0, 0.01, 0, DampingStep::Galerkin).unwrap();
        let fine = damped_evolve(&space, &damping, &s, 10.0, 0.005, 0, DampingStep::Galerkin).unwrap();
        for (i, &t) in coarse.times.iter().enumerate() {
            let rich = (4.0 * fine.energies[2 * i] - coarse.energies[i]) / 3.0;
            let exact = oscillator_energy(w, a0, t);
            assert!(((rich - exact) / exact).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn dissipation_residual_is_second_order() {
        let space = WaveSpace::new(1, 5.0).unwrap();
        let mut s = WaveState::zeros(&space);
        s.u0[space.index([5, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        let damping = DampingProfile::constant(1, 0.1).unwrap();
        let r: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&dt| dissipation_residual(&damped_evolve(&space, &damping, &s, 10.0, dt, 0, DampingStep::Galerkin).unwrap()))
            .collect();
        for w in r.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order} from {r:?}");
        }
    }

    #[test]
    fn strip_damping_energy_accounting() {
        let space = WaveSpace::new(2, 16.0).unwrap();
        let mut rng = RngStream::new(3, 3);
        let mut s = random_state(&space, &mut rng);
        let e0 = energy(&space, &s);
        s.u0.iter_mut().chain(s.u1.iter_mut()).for_each(|z| *z /= e0.sqrt());
        let damping = DampingProfile::strip(2, 1.0, 2).unwrap();
        for mode in [DampingStep::Galerkin, DampingStep::Pointwise] {
            let traj = damped_evolve(&space, &damping, &s, 2.0, 1e-3, 0, mode).unwrap();
            assert!(traj.energies.windows(2).all(|e| e[1] <= e[0] + 1e-9));
            let res = dissipation_residual(&traj);
            assert!(res <= 1e-4, "{mode:?} residual {res}");
        }
    }

    #[test]
    fn damping_variants_agree_for_constant_damping() {
        let space = WaveSpace::new(2, 6.0).unwrap();
        let mut rng = RngStream::new(4, 4);
        let s = random_state(&space, &mut rng);
        let a = DampingProfile::constant(2, 0.3).unwrap();
        let g = damped_evolve(&space, &a, &s, 1.0, 0.02, 0, DampingStep::Galerkin).unwrap();
        let p = damped_evolve(&space, &a, &s, 1.0, 0.02, 0, DampingStep::Pointwise).unwrap();
        assert!((g.final_energy() - p.final_energy()).abs() < 1e-12);
    }

    #[test]
    fn constant_in_u0_is_invisible() {
        let space = WaveSpace::new(2, 6.0).unwrap();
        let mut rng = RngStream::new(5, 5);
        let s = random_state(&space, &mut rng);
        let mut shifted = s.clone();
        shifted.u0[space.index([0, 0]).unwrap()] += Complex64::new(3.0, -1.0);
        let a = DampingProfile::strip(2, 1.0, 1).unwrap();
        let e1 = damped_evolve(&space, &a, &s, 1.0, 0.05, 0, DampingStep::Galerkin).unwrap();
        let e2 = damped_evolve(&space, &a, &shifted, 1.0, 0.05, 0, DampingStep::Galerkin).unwrap();
        assert_eq!(e1.energies, e2.energies);
    }

    #[test]
    fn damping_certificate() {
        assert!(DampingProfile::new(1, vec![([0, 0], Complex64::new(0.5, 0.0)), ([1, 0], Complex64::new(0.5, 0.0)), ([-1, 0], Complex64::new(0.5, 0.0))]).is_err());
        assert!(DampingProfile::new(1, vec![([1, 0], Complex64::new(0.5, 0.0))]).is_err());
        let s = DampingProfile::strip(2, 2.0, 2).unwrap();
        assert!(s.min_value() >= 0.0 && s.min_value() < 1e-12);
        assert_relative_eq!(s.max_value(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(s.mean(), 0.75, max_relative = 1e-14);
        for x in [0.0, 1.0, 2.5, PI] {
            assert_relative_eq!(s.eval(&[x, 0.3]), 2.0 * ((1.0 + x.cos()) / 2.0).powi(2), epsilon = 1e-14);
        }
    }

    #[test]
    fn poisson_profile() {
        let (a0, r) = (1.5, 0.3);
        let p = DampingProfile::poisson(2, a0, r).unwrap();
        for x in [0.0, 1.0, PI] {
            let want = a0 * (1.0 - r * r) / (1.0 - 2.0 * r * x.cos() + r * r);
            assert_relative_eq!(p.eval(&[x, 0.7]), want, max_relative = 1e-14);
        }
        assert_relative_eq!(p.min_value(), a0 * (1.0 - r) / (1.0 + r), max_relative = 1e-12);
        assert!(DampingProfile::poisson(1, 1.0, 1.0).is_err());
    }

    #[test]
    fn birkhoff_examples() {
        let c = DampingProfile::constant(2, 0.7).unwrap();
        assert_relative_eq!(c.birkhoff_average(&[1.0, 2.0], &[0.6, 0.8], 13.0).unwrap(), 0.7, max_relative = 1e-14);
        let a = DampingProfile::new(2, vec![([0, 0], Complex64::new(1.0, 0.0)), ([1, 0], Complex64::new(0.5, 0.0)), ([-1, 0], Complex64::new(0.5, 0.0))]).unwrap();
        let x1: f64 = 0.4;
        for t in [1.0, 10.0, 100.0] {
            let want = 1.0 + ((x1 + t).sin() - x1.sin()) / t;
            assert_relative_eq!(a.birkhoff_average(&[x1, 0.0], &[1.0, 0.0], t).unwrap(), want, max_relative = 1e-12);
        }
        let strip = DampingProfile::strip(2, 1.0, 2).unwrap();
        for t in [1.0, 50.0] {
            assert!(strip.birkhoff_average(&[PI, 0.2], &[0.0, 1.0], t).unwrap().abs() < 1e-15);
        }
        assert!(strip.birkhoff_limit_estimate(&[PI, 0.0], &[0.0, 1.0]).unwrap().abs() < 1e-15);
        assert!(a.birkhoff_average(&[0.0, 0.0], &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn birkhoff_irrational_slope_converges() {
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let n = (1.0 + g * g).sqrt();
        let dir = [1.0 / n, g / n];
        let a = DampingProfile::new(2, vec![
            ([0, 0], Complex64::new(1.0, 0.0)),
            ([1, 1], Complex64::new(0.25, 0.1)),
            ([-1, -1], Complex64::new(0.25, -0.1)),
            ([0, 2], Complex64::new(0.2, 0.0)),
            ([0, -2], Complex64::new(0.2, 0.0)),
        ])
        .unwrap();
        assert_relative_eq!(a.birkhoff_limit_estimate(&[0.3, 0.1], &dir).unwrap(), 1.0);
        let errs: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&t| (a.birkhoff_average(&[0.3, 0.1], &dir, t).unwrap() - 1.0).abs()).collect();
        for (e, t) in errs.iter().zip([1e2, 1e3, 1e4]) {
            assert!(*e <= 5.0 / t, "err {e} at t {t}");
        }
        assert!(errs[2] < errs[0]);
    }
}
