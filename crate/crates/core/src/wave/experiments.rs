//! Monte-Carlo experiments on random unit-energy wave data.

use super::{energy, partial_energy, DampingProfile, DampingStep, StrangStepper, WaveSpace, WaveState};
use crate::ensembles::{sample_full_field, sample_sphere_uniform, Field, MeasureSpec};
use crate::error::{invalid, Error, Result};
use crate::geometry::FrequencyWindow;
use crate::parallel::MonteCarlo;
use crate::rng::RngStream;
use crate::special::gamma;
use crate::stats::{linear_fit, lower_median, Proportion};
use crate::torus::{fft_size_at_least, fftn, TorusGrid};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::SQRT_2;

const PILOT: u64 = 0x7069;
const DECAY: u64 = 0x6463;
const LEAKAGE: u64 = 0x6c6b;
const RATE: u64 = 0x7274;
const SPACETIME: u64 = 0x7374;

/// Uniform draw on the unit-energy sphere of the modes `indices`, through
/// `v0 = (w u0 - i u1)/sqrt 2`, `v1 = (w u0 + i u1)/sqrt 2` with `(v0, v1)`
/// uniform on the sphere of radius `sqrt 2` in `C^{2N}`.
pub fn sample_unit_energy(space: &WaveSpace, indices: &[usize], rng: &mut RngStream) -> Result<WaveState> {
    if indices.is_empty() {
        return Err(invalid("cannot sample on an empty block"));
    }
    if indices.iter().any(|&i| space.freqs()[i] == 0.0) {
        return Err(invalid("unit-energy data cannot live on the zero mode"));
    }
    let n = indices.len();
    let v = sample_sphere_uniform(2 * n, Field::Complex, rng)?;
    let mut s = WaveState::zeros(space);
    for (j, &i) in indices.iter().enumerate() {
        let (v0, v1) = (v[j] * SQRT_2, v[n + j] * SQRT_2);
        s.u0[i] = (v0 + v1) / (SQRT_2 * space.freqs()[i]);
        s.u1[i] = Complex64::new(0.0, -1.0) * (v1 - v0) / SQRT_2;
    }
    Ok(s)
}

/// Growth of the energy over one step that counts as a broken invariant.
pub const ENERGY_GROWTH_TOL: f64 = 1e-9;

/// Energies at the grid times, `substeps` steps apart, `n + 1` values.
pub fn energy_curve(stepper: &StrangStepper, state: &WaveState, substeps: usize, n: usize) -> Result<Vec<f64>> {
    let mut s = state.clone();
    let mut out = Vec::with_capacity(n + 1);
    let mut last = stepper.energy(&s);
    out.push(last);
    for _ in 0..n {
        for _ in 0..substeps {
            stepper.step(&mut s);
            let e = stepper.energy(&s);
            if e > last + ENERGY_GROWTH_TOL {
                return Err(Error::Invariant(format!("energy grew from {last} to {e} at t = {}", s.t)));
            }
            last = e;
        }
        out.push(last);
    }
    Ok(out)
}

/// Block `h * |n| in (lower, upper]` on `T^d`, resolved up to `upper/h + margin`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveBlockSetup {
    pub d: usize,
    pub lower: f64,
    pub upper: f64,
    pub margin: f64,
    pub damping: DampingProfile,
    pub mode: DampingStep,
}

struct PreparedBlock {
    stepper: StrangStepper,
    indices: Vec<usize>,
    substeps: usize,
}

impl WaveBlockSetup {
    fn validate(&self) -> Result<()> {
        if self.damping.d() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: self.damping.d() });
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(invalid("cutoff margin must be finite and >= 0"));
        }
        Ok(())
    }

    fn prepare(&self, h: f64, tau: f64) -> Result<PreparedBlock> {
        self.validate()?;
        let window = FrequencyWindow::new(h, self.lower, self.upper)?;
        let space = WaveSpace::new(self.d, (self.upper / h + self.margin).max(1.0))?;
        let indices = space.block_indices(&window);
        if indices.is_empty() {
            return Err(invalid(format!("block at h = {h} holds no lattice modes")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid("time grid step must be positive"));
        }
        let substeps = (tau * 2.0 * space.cutoff()).ceil().max(1.0) as usize;
        let stepper = StrangStepper::new(space, &self.damping, tau / substeps as f64, self.mode)?;
        Ok(PreparedBlock { stepper, indices, substeps })
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    Ok(())
}

fn grid_len(tau: f64, t: f64) -> Result<usize> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("time horizon must be finite and >= 0"));
    }
    let n = (t / tau - 1e-9).ceil().max(0.0);
    Ok(n as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub h: f64,
    pub block_dim: usize,
    pub cutoff: f64,
    pub below: Proportion,
    pub median_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub t: f64,
    pub epsilon: f64,
    pub rows: Vec<DecayRow>,
}

impl DecayReport {
    pub fn min_lower_bound(&self) -> f64 {
        self.rows.iter().map(|r| r.below.lo).fold(1.0, f64::min)
    }
}

/// Fraction of unit-energy block data with `E(U(T) u) < epsilon`, per `h`.
pub fn decay_probability_experiment(setup: &WaveBlockSetup, hs: &[f64], t: f64, epsilon: f64, trials: usize, mc: &MonteCarlo) -> Result<DecayReport> {
    check_trials(trials)?;
    let tau = 0.05;
    let n = grid_len(tau, t)?;
    let tau = if n == 0 { tau } else { t / n as f64 };
    let mut rows = Vec::new();
    for (b, &h) in hs.iter().enumerate() {
        let block = setup.prepare(h, tau)?;
        let finals = run_curves(&block, n, trials, mc, DECAY + ((b as u64) << 16), |c| *c.last().unwrap())?;
        let below = finals.iter().filter(|&&e| e < epsilon).count();
        rows.push(DecayRow {
            h,
            block_dim: block.indices.len(),
            cutoff: block.stepper.space().cutoff(),
            below: Proportion::wilson(below, trials),
            median_energy: lower_median(&finals),
        });
    }
    Ok(DecayReport { t, epsilon, rows })
}

fn run_curves<T: Send>(block: &PreparedBlock, n: usize, trials: usize, mc: &MonteCarlo, family: u64, reduce: impl Fn(&[f64]) -> T + Sync + Send) -> Result<Vec<T>> {
    mc.map(family, trials, |_, rng| {
        let s = sample_unit_energy(block.stepper.space(), &block.indices, rng)?;
        Ok(reduce(&energy_curve(&block.stepper, &s, block.substeps, n)?))
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PilotResult {
    /// Chosen time, `None` when the search cap was reached.
    pub t: Option<f64>,
    /// First grid time meeting the target, before the safety factor.
    pub first_hit: Option<f64>,
    pub tau: f64,
    pub t_max: f64,
    pub trials: usize,
}

/// Smallest grid time `i * tau <= t_max` where every block has the Wilson lower
/// bound of `P(E < epsilon)` at least `1 - alpha`, scaled by `safety`.
#[allow(clippy::too_many_arguments)]
pub fn pilot_decay_time(setup: &WaveBlockSetup, hs: &[f64], epsilon: f64, alpha: f64, tau: f64, t_max: f64, safety: f64, trials: usize, mc: &MonteCarlo) -> Result<PilotResult> {
    check_trials(trials)?;
    if !(0.0..1.0).contains(&alpha) || !(safety >= 1.0) {
        return Err(invalid("alpha must lie in [0, 1) and the safety factor must be >= 1"));
    }
    let n = grid_len(tau, t_max)?;
    let mut counts = vec![trials; n + 1];
    for (b, &h) in hs.iter().enumerate() {
        let block = setup.prepare(h, tau)?;
        let curves = run_curves(&block, n, trials, mc, PILOT + ((b as u64) << 16), |c| c.to_vec())?;
        for (i, count) in counts.iter_mut().enumerate() {
            let below = curves.iter().filter(|c| c[i] < epsilon).count();
            *count = (*count).min(below);
        }
    }
    let hit = (0..=n).find(|&i| Proportion::wilson(counts[i], trials).lo >= 1.0 - alpha);
    let first_hit = hit.map(|i| i as f64 * tau);
    Ok(PilotResult { t: first_hit.map(|t| (t * safety / tau).ceil() * tau), first_hit, tau, t_max, trials })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeakageRow {
    pub h: f64,
    pub h_source: f64,
    pub estimate: f64,
    pub target_dim: usize,
    pub source_dim: usize,
}

/// Norm of `Pi_h U(t) i_{h'}` in the energy space for each `h`, with
/// `h' = h / ratio`. Random starts are refined by power iteration using the
/// adjoint `U(t)* = S U(t) S`, `S (u0, u1) = (u0, -u1)`.
#[allow(clippy::too_many_arguments)]
pub fn block_leakage(setup: &WaveBlockSetup, hs: &[f64], ratio: f64, t: f64, starts: usize, iterations: usize, mc: &MonteCarlo) -> Result<Vec<LeakageRow>> {
    check_trials(starts)?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid("h / h' must lie in (0, 1)"));
    }
    let mut rows = Vec::new();
    for (b, &h) in hs.iter().enumerate() {
        let hs_src = h / ratio;
        if !(setup.lower / h > setup.upper / hs_src) {
            return Err(invalid(format!("windows at h = {h} and h' = {hs_src} overlap")));
        }
        let target = setup.prepare(h, t.max(1e-3))?;
        let space = target.stepper.space();
        let source = space.block_indices(&FrequencyWindow::new(hs_src.min(1.0), setup.lower, setup.upper)?);
        if source.is_empty() {
            return Err(invalid(format!("source block at h' = {hs_src} holds no modes")));
        }
        let steps = if t == 0.0 { 0 } else { target.substeps };
        let evolve = |s: &mut WaveState| {
            for _ in 0..steps {
                target.stepper.step(s);
            }
        };
        let keep = |s: &mut WaveState, idx: &[usize]| {
            let mut out = WaveState::zeros(space);
            for &i in idx {
                out.u0[i] = s.u0[i];
                out.u1[i] = s.u1[i];
            }
            *s = out;
        };
        let estimates = mc.map(LEAKAGE + ((b as u64) << 16), starts, |_, rng| -> Result<f64> {
            let mut u = sample_unit_energy(space, &source, rng)?;
            let mut best = 0.0f64;
            for _ in 0..=iterations {
                let mut v = u.clone();
                evolve(&mut v);
                keep(&mut v, &target.indices);
                let norm = partial_energy(space, &v, &target.indices).sqrt();
                best = best.max(norm);
                if norm == 0.0 {
                    break;
                }
                v.flip();
                evolve(&mut v);
                v.flip();
                keep(&mut v, &source);
                let e = energy(space, &v).sqrt();
                if e == 0.0 {
                    break;
                }
                v.u0.iter_mut().chain(v.u1.iter_mut()).for_each(|z| *z /= e);
                v.t = 0.0;
                u = v;
            }
            Ok(best)
        });
        let estimate = estimates.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
        rows.push(LeakageRow { h, h_source: hs_src, estimate, target_dim: target.indices.len(), source_dim: source.len() });
    }
    Ok(rows)
}

/// Step function `f(t) = 1` before `T_0` and `2^{-j/2}` on `[T_j, T_{j+1})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRate {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// Worst block exceedance at each breakpoint.
    pub exceedance: Vec<Proportion>,
    pub tau: f64,
    pub trials: usize,
    /// The search hit `t_max` before the last requested level.
    pub capped: bool,
}

impl DecayRate {
    pub fn eval(&self, t: f64) -> f64 {
        match self.breakpoints.iter().rposition(|&tj| tj <= t) {
            None => 1.0,
            Some(j) => self.values[j],
        }
    }
}

/// For `j = 0..=j_max`, the smallest grid time after `T_{j-1}` where every block
/// has the Wilson upper bound of `P(E(U(T) u) > 2^{-j})` at most `2^{-j}`.
pub fn decay_rate_builder(setup: &WaveBlockSetup, hs: &[f64], j_max: u32, tau: f64, t_max: f64, trials: usize, mc: &MonteCarlo) -> Result<DecayRate> {
    check_trials(trials)?;
    let n = grid_len(tau, t_max)?;
    let mut curves = Vec::new();
    for (b, &h) in hs.iter().enumerate() {
        let block = setup.prepare(h, tau)?;
        curves.push(run_curves(&block, n, trials, mc, RATE + ((b as u64) << 16), |c| c.to_vec())?);
    }
    let worst = |i: usize, thr: f64| {
        curves
            .iter()
            .map(|block| Proportion::wilson(block.iter().filter(|c| c[i] > thr).count(), trials))
            .max_by(|a, b| a.successes.cmp(&b.successes))
            .unwrap()
    };
    let mut rate = DecayRate { breakpoints: vec![], values: vec![], thresholds: vec![], exceedance: vec![], tau, trials, capped: false };
    let mut from = 1;
    for j in 0..=j_max {
        let thr = 0.5f64.powi(j as i32);
        let ok = |i: usize| worst(i, thr).hi <= thr;
        if from > n || !ok(n) {
            rate.capped = true;
            break;
        }
        let (mut lo, mut hi) = (from, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        rate.breakpoints.push(lo as f64 * tau);
        rate.values.push(0.5f64.powf(j as f64 / 2.0));
        rate.thresholds.push(thr);
        rate.exceedance.push(worst(lo, thr));
        from = lo + 1;
    }
    Ok(rate)
}

/// Dyadic blocks on `T^1`: block 0 is `|n| <= 1`, block `k >= 1` is `2^{k-1} < |n| <= 2^k`.
pub fn dyadic_torus_blocks(k_max: usize) -> Vec<Vec<i32>> {
    (0..k_max)
        .map(|k| {
            let (lo, hi) = if k == 0 { (-1, 1) } else { (1 << (k - 1), 1 << k) };
            if k == 0 {
                (lo..=hi).collect()
            } else {
                (-hi..=-lo - 1).chain(lo + 1..=hi).collect()
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpacetimeNorm {
    pub value: f64,
    pub t_grid: f64,
    pub steps: usize,
    /// Bound on the neglected `int_{T_grid}^inf <t>^{-delta p} dt`, relative to the full weight mass.
    pub tail_fraction: f64,
}

/// Neglected weight mass allowed beyond the time grid.
pub const SPACETIME_TAIL_TOL: f64 = 1e-7;
const MAX_TIME_STEPS: usize = 20_000_000;

/// `|| <t>^{-delta} cos(t sqrt(-Laplace)) u ||_{L^p(R x T^1)}` for `u = sum c_n e_n`.
///
/// Space: FFT grid, exact for even integer `p`. Time: composite Simpson on
/// `[0, T_grid]` with `dt <= 1/(40 w_max)`, doubled for `t < 0`.
pub fn weighted_spacetime_norm(modes: &[i32], coeffs: &[Complex64], delta: f64, p: f64) -> Result<SpacetimeNorm> {
    if modes.len() != coeffs.len() {
        return Err(Error::DimensionMismatch { expected: modes.len(), got: coeffs.len() });
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("p must be finite and >= 1"));
    }
    if !(delta * p > 1.0) {
        return Err(invalid(format!("need delta > 1/p, got delta = {delta}, p = {p}")));
    }
    let dp = delta * p;
    let mass = std::f64::consts::PI.sqrt() * gamma((dp - 1.0) / 2.0) / (2.0 * gamma(dp / 2.0));
    let t_grid = (SPACETIME_TAIL_TOL * mass * (dp - 1.0)).powf(1.0 / (1.0 - dp)).max(1.0);
    let tail_fraction = t_grid.powf(1.0 - dp) / (dp - 1.0) / mass;
    if coeffs.iter().all(|c| c.norm() == 0.0) {
        return Ok(SpacetimeNorm { value: 0.0, t_grid, steps: 0, tail_fraction });
    }
    let extent = modes.iter().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0);
    let w_max = (extent as f64).max(1.0);
    let mut steps = (t_grid * 40.0 * w_max).ceil() as usize;
    steps += steps % 2;
    if steps > MAX_TIME_STEPS {
        return Err(invalid(format!("time grid needs {steps} steps; raise delta * p")));
    }
    let dt = t_grid / steps as f64;
    let size = fft_size_at_least(((p.ceil() as usize) * extent + 1).max(2 * extent + 1).max(8 * extent + 1));
    let grid = TorusGrid::new(1, size)?;
    let slots: Vec<usize> = modes.iter().map(|&n| grid.wrap_index(&[n])).collect();
    let freqs: Vec<f64> = modes.iter().map(|&n| (n as f64).abs()).collect();
    let norm = (2.0 * std::f64::consts::PI).powf(-0.5);
    let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut total = 0.0;
    for i in 0..=steps {
        let t = i as f64 * dt;
        data.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for ((slot, c), w) in slots.iter().zip(coeffs).zip(&freqs) {
            data[*slot] += c * (w * t).cos() * norm;
        }
        fftn(&mut data, grid, true);
        let space: f64 = data.iter().map(|z| z.norm().powf(p)).sum::<f64>() * grid.weight();
        let simpson = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        total += simpson * (1.0 + t * t).powf(-dp / 2.0) * space;
    }
    let value = (2.0 * total * dt / 3.0).powf(1.0 / p);
    Ok(SpacetimeNorm { value, t_grid, steps, tail_fraction })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpacetimeTailRow {
    pub lambda: f64,
    pub exceedance: Proportion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpacetimeTailReport {
    pub delta: f64,
    pub p: f64,
    pub trials: usize,
    pub median: f64,
    pub std_dev: f64,
    pub rows: Vec<SpacetimeTailRow>,
    /// Slope of `log(-log P(N > lambda))` against `log lambda`.
    pub fitted_exponent: Option<f64>,
    /// `gamma / (gamma + 1)` from the radial law.
    pub bound_exponent: f64,
    pub t_grid: f64,
    pub tail_fraction: f64,
}

/// Norms of random fields drawn from a measure on the dyadic `T^1` blocks and
/// their tail on `[median, median + 4 sigma]`.
pub fn spacetime_tail_experiment(measure: &MeasureSpec, delta: f64, p: f64, trials: usize, mc: &MonteCarlo) -> Result<SpacetimeTailReport> {
    if trials < 20 {
        return Err(invalid("tail fits need at least 20 trials"));
    }
    let blocks = dyadic_torus_blocks(measure.k_max());
    if blocks.iter().map(Vec::len).ne(measure.dims.iter().copied()) {
        return Err(invalid("measure block dimensions must match the dyadic torus blocks"));
    }
    let modes = blocks.concat();
    let results = mc.map(SPACETIME, trials, |_, rng| {
        let coeffs = sample_full_field(measure, rng)?.flatten();
        weighted_spacetime_norm(&modes, &coeffs, delta, p)
    });
    let norms = results.into_iter().collect::<Result<Vec<_>>>()?;
    let (t_grid, tail_fraction) = (norms[0].t_grid, norms[0].tail_fraction);
    let values: Vec<f64> = norms.iter().map(|n| n.value).collect();
    let median = lower_median(&values);
    let mean = values.iter().sum::<f64>() / trials as f64;
    let std_dev = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
    let rows: Vec<SpacetimeTailRow> = (0..=12)
        .map(|i| {
            let lambda = median + 4.0 * std_dev * i as f64 / 12.0;
            SpacetimeTailRow { lambda, exceedance: Proportion::wilson(values.iter().filter(|&&v| v > lambda).count(), trials) }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.exceedance.successes >= 10 && r.exceedance.successes < trials && r.lambda > 0.0)
        .map(|r| (r.lambda.ln(), (-r.exceedance.estimate.ln()).ln()))
        .unzip();
    let bound_exponent = measure.laws.iter().map(|l| l.tail_gamma()).fold(f64::INFINITY, f64::min);
    Ok(SpacetimeTailReport {
        delta,
        p,
        trials,
        median,
        std_dev,
        rows,
        fitted_exponent: linear_fit(&xs, &ys).map(|f| f.slope),
        bound_exponent: if bound_exponent.is_infinite() { 1.0 } else { bound_exponent / (bound_exponent + 1.0) },
        t_grid,
        tail_fraction,
    })
}
