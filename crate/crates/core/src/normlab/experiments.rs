use super::{a_qh_closed_form, lq_power, LinfEvaluator};
use crate::ensembles::{sample_sphere_uniform, Field};
use crate::error::{invalid, Result};
use crate::fields::{kernel_e_xh, mode_values, FieldGrid, Point};
use crate::geometry::{lattice_ball_count, liouville_average, representation_count, ModeId, Observable, SpectralBlock, Symbol};
use crate::parallel::MonteCarlo;
use crate::sphere::{eval_basis, SphereGrid};
use crate::stats::{linear_fit, lower_median, slope_through_origin, LinearFit, MeanEstimate, Proportion};
use crate::torus::{fft_size_at_least, synthesize_fft, TorusGrid};
use num_complex::Complex64;
use serde::Serialize;
use statrs::function::beta::beta_reg;
use std::collections::HashMap;

const TAILS: u64 = 0x7441;
const MOMENTS: u64 = 0x6d6f;
const MEDIANS: u64 = 0x6d65;
const DEFECT: u64 = 0x6466;

/// The quantity whose distribution is studied.
#[derive(Clone, Debug, PartialEq)]
pub enum TailStatistic {
    /// `|u(x)|` at a fixed point.
    Pointwise(Point),
    /// Grid estimate of `||u||_inf`.
    Linf,
    /// `||u||_q`.
    Lq(f64),
    /// `| ||u||_q - median |`.
    LqDeviation(f64),
}

impl TailStatistic {
    pub fn label(&self) -> String {
        match self {
            TailStatistic::Pointwise(_) => "pointwise".into(),
            TailStatistic::Linf => "linf".into(),
            TailStatistic::Lq(q) => format!("l{q}"),
            TailStatistic::LqDeviation(q) => format!("l{q}_deviation"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub threshold: f64,
    pub exceedance: Proportion,
    /// Reference curve at this threshold (exact law, union bound, or fitted shape).
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub statistic: String,
    pub block_dim: usize,
    pub trials: usize,
    pub rows: Vec<TailRow>,
    /// Median of the sampled statistic (before centering for deviations).
    pub median: f64,
    pub std_dev: f64,
    /// `c` in `P ~ C e^{-c s Lambda^2}` fitted over thresholds with `0 < P < 1`,
    /// where `s` is `N^{2/q}` for deviations and 1 otherwise.
    pub fitted_rate: Option<f64>,
    /// Rate of a Gaussian with the sample standard deviation, same scaling.
    pub gaussian_rate: f64,
    pub bound_kind: &'static str,
}

/// Sampled values of the statistic, one per trial, trial order.
pub fn sample_statistic(block: &SpectralBlock, field: Field, stat: &TailStatistic, trials: usize, mc: &MonteCarlo) -> Result<Vec<f64>> {
    let n = block.dim();
    if n == 0 {
        return Err(invalid("empty block"));
    }
    let values = match stat {
        TailStatistic::Pointwise(x) => {
            let e = mode_values(block, x)?;
            mc.map(TAILS, trials, |_, rng| {
                let a = sample_sphere_uniform(n, field, rng).expect("n > 0");
                a.iter().zip(&e).map(|(a, e)| a * e).sum::<Complex64>().norm()
            })
        }
        TailStatistic::Linf => {
            let ev = LinfEvaluator::new(block)?;
            mc.map(TAILS, trials, |_, rng| ev.eval(&sample_sphere_uniform(n, field, rng).expect("n > 0")).expect("dims match"))
        }
        TailStatistic::Lq(q) | TailStatistic::LqDeviation(q) => {
            let g = FieldGrid::quadrature(block, q.ceil() as usize + (q.ceil() as usize % 2))?;
            let q = *q;
            lq_power(&[], &[], q)?;
            mc.map(TAILS, trials, |_, rng| {
                let u = g.synthesize(&sample_sphere_uniform(n, field, rng).expect("n > 0")).expect("dims match");
                lq_power(&u, g.weights(), q).expect("valid q").powf(1.0 / q)
            })
        }
    };
    Ok(values)
}

/// Exceedance probabilities of a block statistic with Wilson intervals.
///
/// Reference curves: the exact coordinate law for pointwise values, the union
/// bound over the sup grid for `L^inf`, and the fitted Gaussian shape
/// `2 e^{-c N^{2/q} Lambda^2}` for `L^q` deviations.
pub fn tail_experiment(block: &SpectralBlock, field: Field, stat: &TailStatistic, thresholds: &[f64], trials: usize, mc: &MonteCarlo) -> Result<TailReport> {
    if trials < 100 {
        return Err(invalid("tail experiments need at least 100 trials"));
    }
    let raw = sample_statistic(block, field, stat, trials, mc)?;
    let median = lower_median(&raw);
    let values: Vec<f64> = match stat {
        TailStatistic::LqDeviation(_) => raw.iter().map(|v| (v - median).abs()).collect(),
        _ => raw.clone(),
    };
    let sd = MeanEstimate::from_samples(&raw).stderr * (trials as f64).sqrt();
    let n = block.dim();
    let scale = match stat {
        TailStatistic::LqDeviation(q) | TailStatistic::Lq(q) => (n as f64).powf(2.0 / q),
        _ => 1.0,
    };
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let count_above = |t: f64| trials - sorted.partition_point(|v| *v <= t);

    let props: Vec<Proportion> = thresholds.iter().map(|&t| Proportion::wilson(count_above(t), trials)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = thresholds
        .iter()
        .zip(&props)
        .filter(|(_, p)| p.successes >= 5 && p.successes < trials)
        .map(|(&t, p)| {
            let lead = if matches!(stat, TailStatistic::LqDeviation(_)) { 2.0 } else { 1.0 };
            (scale * t * t, -(p.estimate / lead).ln())
        })
        .unzip();
    let fitted_rate = match stat {
        TailStatistic::LqDeviation(_) => slope_through_origin(&xs, &ys),
        _ => linear_fit(&xs, &ys).map(|f| f.slope),
    };
    let gaussian_rate = 1.0 / (2.0 * sd * sd * scale);

    let (bound_kind, bounds): (&'static str, Vec<f64>) = match stat {
        TailStatistic::Pointwise(x) => {
            let e = kernel_e_xh(block, x)?;
            ("exact_coordinate_law", thresholds.iter().map(|&t| coordinate_survival(t / e.sqrt(), n, field)).collect())
        }
        TailStatistic::Linf => {
            let grid_len = LinfEvaluator::new(block)?.grid_len() as f64;
            let e = n as f64 / block.manifold().volume();
            ("grid_union_bound", thresholds.iter().map(|&t| (grid_len * coordinate_survival(t / e.sqrt(), n, field)).min(1.0)).collect())
        }
        TailStatistic::LqDeviation(_) => {
            let c = fitted_rate.unwrap_or(gaussian_rate);
            ("fitted_gaussian_shape", thresholds.iter().map(|&t| (2.0 * (-c * scale * t * t).exp()).min(1.0)).collect())
        }
        TailStatistic::Lq(_) => {
            let c = fitted_rate.unwrap_or(gaussian_rate);
            ("fitted_gaussian_shape", thresholds.iter().map(|&t| if t <= median { 1.0 } else { (-c * scale * (t - median).powi(2)).exp() }).collect())
        }
    };
    let rows = thresholds
        .iter()
        .zip(props)
        .zip(bounds)
        .map(|((&threshold, exceedance), bound)| TailRow { threshold, exceedance, bound })
        .collect();
    Ok(TailReport {
        statistic: stat.label(),
        block_dim: n,
        trials,
        rows,
        median,
        std_dev: sd,
        fitted_rate,
        gaussian_rate,
        bound_kind,
    })
}

/// `P(|<a, e_1>| > t)` for `a` uniform on the unit sphere of `C^N` or `R^N`.
pub fn coordinate_survival(t: f64, n: usize, field: Field) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let nn = n as f64;
    match field {
        Field::Complex => (1.0 - t * t).powf(nn - 1.0),
        // a_1^2 ~ Beta(1/2, (N-1)/2)
        Field::Real if n == 1 => 0.0,
        Field::Real => beta_reg((nn - 1.0) / 2.0, 0.5, 1.0 - t * t),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub q: f64,
    pub block_dim: usize,
    pub closed_form_a: f64,
    /// Monte-Carlo `E ||u||_q^q`.
    pub mc_power: MeanEstimate,
    /// Monte-Carlo `E ||u||_q`.
    pub mc_norm: MeanEstimate,
    pub mc_median: f64,
    /// Largest sampled `||u||_q`.
    pub mc_max: f64,
}

/// Closed form `A_{q,h}` next to Monte-Carlo moments and the median of `||u||_q`.
pub fn moment_experiment(block: &SpectralBlock, field: Field, q: f64, trials: usize, mc: &MonteCarlo) -> Result<MomentReport> {
    if trials < 2 {
        return Err(invalid("need at least two trials"));
    }
    let closed_form_a = a_qh_closed_form(q, block, field)?;
    let g = FieldGrid::quadrature(block, q.ceil() as usize + (q.ceil() as usize % 2))?;
    let n = block.dim();
    let powers = mc.map(MOMENTS, trials, |_, rng| {
        let u = g.synthesize(&sample_sphere_uniform(n, field, rng).expect("n > 0")).expect("dims match");
        lq_power(&u, g.weights(), q).expect("q >= 2")
    });
    let norms: Vec<f64> = powers.iter().map(|p| p.powf(1.0 / q)).collect();
    Ok(MomentReport {
        q,
        block_dim: n,
        closed_form_a,
        mc_power: MeanEstimate::from_samples(&powers),
        mc_norm: MeanEstimate::from_samples(&norms),
        mc_median: lower_median(&norms),
        mc_max: norms.iter().copied().fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MedianRow {
    pub label: String,
    pub dim: usize,
    pub median: f64,
    pub sqrt_log_n: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MedianScaling {
    pub rows: Vec<MedianRow>,
    /// Least squares `median = slope sqrt(log N) + intercept`; `None` when degenerate.
    pub fit: Option<LinearFit>,
    pub band: (f64, f64),
    pub strictly_increasing: bool,
    pub degenerate: bool,
}

/// Empirical medians of `||u||_inf` across blocks against `sqrt(log N)`.
pub fn linf_median_scaling(blocks: &[SpectralBlock], field: Field, trials: usize, mc: &MonteCarlo) -> Result<MedianScaling> {
    if blocks.is_empty() {
        return Err(invalid("no blocks"));
    }
    let mut rows = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        if b.dim() < 2 {
            return Err(invalid("median scaling needs blocks with N >= 2"));
        }
        let ev = LinfEvaluator::new(b)?;
        let n = b.dim();
        let family = MEDIANS + ((i as u64) << 16);
        let sups = mc.map(family, trials, |_, rng| ev.eval(&sample_sphere_uniform(n, field, rng).expect("n > 0")).expect("dims match"));
        let median = lower_median(&sups);
        let sqrt_log_n = (n as f64).ln().sqrt();
        let label = match b.degrees().as_slice() {
            [k] => format!("k={k}"),
            _ => format!("N={n}"),
        };
        rows.push(MedianRow { label, dim: n, median, sqrt_log_n, ratio: median / sqrt_log_n });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.sqrt_log_n).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let degenerate = rows.len() < 4;
    let fit = if rows.len() >= 2 { linear_fit(&xs, &ys) } else { None };
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(MedianScaling { strictly_increasing: ys.windows(2).all(|w| w[1] > w[0]), rows, fit, band: (lo, hi), degenerate })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    /// Monte-Carlo mean of `(Au|u)`.
    pub mc: MeanEstimate,
    pub liouville: f64,
    /// `tr(Pi A Pi) / N`.
    pub trace_exact: f64,
}

/// Expected quadratic form `(Au|u)` over the block's unit sphere.
pub fn observable_average_experiment(block: &SpectralBlock, observable: &Observable, field: Field, trials: usize, mc: &MonteCarlo) -> Result<DefectReport> {
    let n = block.dim();
    if n == 0 {
        return Err(invalid("empty block"));
    }
    let liouville = liouville_average(observable, block.manifold(), block.window())?;
    let form = QuadraticForm::new(block, observable)?;
    let trace_exact = form.trace() / n as f64;
    let xs = mc.map(DEFECT, trials, |_, rng| form.eval(&sample_sphere_uniform(n, field, rng).expect("n > 0")));
    Ok(DefectReport { mc: MeanEstimate::from_samples(&xs), liouville, trace_exact })
}

enum QuadraticForm {
    Diagonal(Vec<f64>),
    /// `sum_k a_k sum_m conj(u_{m+k}) u_m` over pairs `(index of m+k, index of m)`.
    Fourier(Vec<(Complex64, Vec<(usize, usize)>)>, f64),
    /// `int a |u|^2` on an exact sphere grid.
    SphereGrid { grid: FieldGrid, a: Vec<f64>, trace: f64 },
}

impl QuadraticForm {
    fn new(block: &SpectralBlock, observable: &Observable) -> Result<Self> {
        match observable {
            Observable::RadialMultiplier(b) => {
                let h = block.window().h;
                let diag = block.modes().iter().map(|m| b.eval(h * m.frequency)).collect::<Result<Vec<_>>>()?;
                Ok(QuadraticForm::Diagonal(diag))
            }
            Observable::Multiplication(Symbol::Fourier(terms)) => {
                if !block.manifold().is_torus() {
                    return Err(invalid("Fourier symbols act on torus blocks"));
                }
                let index: HashMap<&[i32], usize> = block
                    .modes()
                    .iter()
                    .enumerate()
                    .filter_map(|(i, m)| match &m.id {
                        ModeId::Lattice(n) => Some((n.as_slice(), i)),
                        _ => None,
                    })
                    .collect();
                let mut out = Vec::new();
                let mut trace = 0.0;
                for (k, c) in terms {
                    let mut pairs = Vec::new();
                    for (m, &j) in &index {
                        let shifted: Vec<i32> = m.iter().zip(k).map(|(a, b)| a + b).collect();
                        if let Some(&i) = index.get(shifted.as_slice()) {
                            pairs.push((i, j));
                        }
                    }
                    pairs.sort_unstable();
                    if k.iter().all(|&x| x == 0) {
                        trace += c.re * block.dim() as f64;
                    }
                    out.push((*c, pairs));
                }
                Ok(QuadraticForm::Fourier(out, trace))
            }
            Observable::Multiplication(Symbol::Harmonic(terms)) => {
                let la = terms.iter().map(|t| t.0).max().unwrap_or(0) as usize;
                let kmax = *block.degrees().last().ok_or_else(|| invalid("harmonic symbols act on S^2 blocks"))? as usize;
                // a |u|^2 has degree <= la + 2 kmax; a grid exact for degree 2L+1 suffices
                let power = (la + 2 * kmax).div_ceil(kmax.max(1));
                let grid = FieldGrid::quadrature(block, power.max(2))?;
                let sg = SphereGrid::for_power(kmax, power.max(2));
                let mut a = Vec::with_capacity(grid.len());
                for (t, p, _) in sg.points() {
                    let mut v = 0.0;
                    for &(l, m, c) in terms {
                        if m.unsigned_abs() > l {
                            return Err(invalid(format!("harmonic index ({l}, {m}) out of range")));
                        }
                        v += c * eval_basis(l, t, p)?[(l as i64 + m as i64) as usize];
                    }
                    a.push(v);
                }
                let mean = Symbol::Harmonic(terms.clone()).mean();
                Ok(QuadraticForm::SphereGrid { grid, a, trace: mean * block.dim() as f64 })
            }
        }
    }

    fn trace(&self) -> f64 {
        match self {
            QuadraticForm::Diagonal(d) => d.iter().sum(),
            QuadraticForm::Fourier(_, t) => *t,
            QuadraticForm::SphereGrid { trace, .. } => *trace,
        }
    }

    fn eval(&self, u: &[Complex64]) -> f64 {
        match self {
            QuadraticForm::Diagonal(d) => d.iter().zip(u).map(|(d, u)| d * u.norm_sqr()).sum(),
            QuadraticForm::Fourier(terms, _) => terms
                .iter()
                .map(|(c, pairs)| c * pairs.iter().map(|&(i, j)| u[i].conj() * u[j]).sum::<Complex64>())
                .sum::<Complex64>()
                .re,
            QuadraticForm::SphereGrid { grid, a, .. } => {
                let v = grid.synthesize(u).expect("dims match");
                v.iter().zip(a).zip(grid.weights()).map(|((v, a), w)| w * a * v.norm_sqr()).sum()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundRow {
    pub k: u64,
    pub dim: usize,
    pub linf: f64,
    pub l2: f64,
    pub lr: f64,
    /// `||u||_inf / sqrt(N)`, equal to `(2 pi)^{-d/2}` for the peak function.
    pub linf_over_sqrt_n: f64,
    /// `||u||_r / lambda^{(d-2)/2 - d/r}` with `lambda = sqrt(k)`.
    pub lr_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub d: u32,
    pub r: f64,
    pub rows: Vec<LowerBoundRow>,
    /// Shells with no lattice points.
    pub skipped: Vec<u64>,
}

/// Peak functions `u = N^{-1/2} sum_{|n|^2 = k} e_n` and their norms.
pub fn torus_lower_bound_experiment(d: u32, ks: &[u64], r: f64) -> Result<LowerBoundReport> {
    if d < 2 {
        return Err(invalid("torus lower bounds need d >= 2"));
    }
    if !(r >= 2.0 && r.is_finite()) {
        return Err(invalid("exponent r must be finite and >= 2"));
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &k in ks {
        if k == 0 || representation_count(d, k) == 0 {
            log::info!("no lattice points with |n|^2 = {k} in dimension {d}; skipped");
            skipped.push(k);
            continue;
        }
        let block = SpectralBlock::torus_shell(d, k)?;
        let n = block.dim();
        let c = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
        let m = block.lattice_extent() as usize;
        let rq = r.ceil() as usize + (r.ceil() as usize % 2);
        let grid = TorusGrid::new(d as usize, fft_size_at_least(rq * m + 1))?;
        let modes: Vec<Vec<i32>> = block
            .modes()
            .iter()
            .filter_map(|md| match &md.id {
                ModeId::Lattice(v) => Some(v.clone()),
                _ => None,
            })
            .collect();
        let u = synthesize_fft(&modes, &c, grid)?;
        let w = vec![grid.weight(); grid.len()];
        let linf = super::grid_sup(&u);
        let l2 = lq_power(&u, &w, 2.0)?.sqrt();
        let lr = lq_power(&u, &w, r)?.powf(1.0 / r);
        let expo = (d as f64 - 2.0) / 2.0 - d as f64 / r;
        rows.push(LowerBoundRow {
            k,
            dim: n,
            linf,
            l2,
            lr,
            linf_over_sqrt_n: linf / (n as f64).sqrt(),
            lr_ratio: lr / (k as f64).sqrt().powf(expo),
        });
    }
    Ok(LowerBoundReport { d, r, rows, skipped })
}

/// Weyl count ratio `#{|n| <= lambda} / (pi lambda^2)` on `T^2`, a cheap sanity row for reports.
pub fn torus2_weyl_ratio(lambda: f64) -> f64 {
    lattice_ball_count(2, (lambda * lambda).floor() as u64) as f64 / (std::f64::consts::PI * lambda * lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FrequencyWindow, RadialProfile};
    use crate::stats::ks_distance;
    use std::f64::consts::PI;

    #[test]
    fn thresholds_below_minimum_give_probability_one() {
        let b = SpectralBlock::sphere_degree(2, 4).unwrap();
        let mc = MonteCarlo::serial(1);
        let r = tail_experiment(&b, Field::Complex, &TailStatistic::Lq(4.0), &[0.0, 1e-3], 200, &mc).unwrap();
        assert!(r.rows.iter().all(|row| row.exceedance.estimate == 1.0));
        assert!(tail_experiment(&b, Field::Complex, &TailStatistic::Linf, &[1.0], 50, &mc).is_err());
    }

    #[test]
    fn pointwise_tail_follows_exact_law() {
        let b = SpectralBlock::torus(2, FrequencyWindow::new(0.2, 1.0, 1.8).unwrap()).unwrap();
        let n = b.dim();
        assert!(n >= 40, "n = {n}");
        let x = Point::Torus(vec![0.4, 1.1]);
        let e = kernel_e_xh(&b, &x).unwrap();
        let thresholds: Vec<f64> = (1..12).map(|i| i as f64 * 0.25 * e.sqrt() / (n as f64).sqrt()).collect();
        let mc = MonteCarlo::serial(8);
        let r = tail_experiment(&b, Field::Complex, &TailStatistic::Pointwise(x.clone()), &thresholds, 20_000, &mc).unwrap();
        // simultaneous coverage over all thresholds: Bonferroni-adjusted Wilson intervals
        for row in &r.rows {
            let p = Proportion::wilson_z(row.exceedance.successes, row.exceedance.trials, 3.3);
            assert!(p.lo <= row.bound && row.bound <= p.hi, "{row:?}");
        }
        let rate = r.fitted_rate.unwrap();
        let theory = (n as f64 - 1.0) / e;
        assert!((rate / theory - 1.0).abs() < 0.15, "fitted {rate} vs {theory}");
        let vals = sample_statistic(&b, Field::Complex, &TailStatistic::Pointwise(x), 20_000, &mc).unwrap();
        assert!(ks_distance(&vals, |t| 1.0 - coordinate_survival(t / e.sqrt(), n, Field::Complex)) < 0.015);
    }

    #[test]
    fn real_coordinate_survival_matches_samples() {
        let mc = MonteCarlo::serial(4);
        let xs = mc.map(0, 20_000, |_, rng| crate::ensembles::sample_real_sphere(9, rng).unwrap()[0].abs());
        assert!(ks_distance(&xs, |t| 1.0 - coordinate_survival(t, 9, Field::Real)) < 0.015);
    }

    #[test]
    fn lq_deviation_has_gaussian_shape() {
        let b = SpectralBlock::sphere_degree(2, 12).unwrap();
        let mc = MonteCarlo::serial(21);
        let n = b.dim() as f64;
        let probe = sample_statistic(&b, Field::Complex, &TailStatistic::Lq(4.0), 400, &mc).unwrap();
        let sd = MeanEstimate::from_samples(&probe).stderr * 20.0;
        let thresholds: Vec<f64> = (1..=8).map(|i| i as f64 * 0.4 * sd).collect();
        let r = tail_experiment(&b, Field::Complex, &TailStatistic::LqDeviation(4.0), &thresholds, 3000, &mc).unwrap();
        let ratio = r.fitted_rate.unwrap() / r.gaussian_rate;
        assert!((1.0 / 3.0..=3.0).contains(&ratio), "ratio {ratio}");
        assert!(r.rows.windows(2).all(|w| w[1].exceedance.estimate <= w[0].exceedance.estimate));
        assert!((r.gaussian_rate * n.sqrt()).is_finite());
    }

    #[test]
    fn median_scaling_flags_single_block() {
        let mc = MonteCarlo::serial(1);
        let r = linf_median_scaling(&[SpectralBlock::sphere_degree(2, 3).unwrap()], Field::Complex, 100, &mc).unwrap();
        assert!(r.degenerate);
        assert!(r.fit.is_none());
    }

    #[test]
    fn defect_identity_examples() {
        let mc = MonteCarlo::serial(5);
        let t2 = SpectralBlock::torus(2, FrequencyWindow::new(0.25, 1.0, 2.0).unwrap()).unwrap();
        let one = observable_average_experiment(&t2, &Observable::Multiplication(Symbol::torus_constant(2, 1.0)), Field::Complex, 200, &mc).unwrap();
        assert!((one.mc.mean - 1.0).abs() < 1e-12 && (one.trace_exact - 1.0).abs() < 1e-12 && one.liouville == 1.0);

        let cos = observable_average_experiment(&t2, &Observable::Multiplication(Symbol::cos_x1(2)), Field::Complex, 4000, &mc).unwrap();
        assert_eq!(cos.trace_exact, 0.0);
        assert!(cos.mc.z_score(0.0) < 4.0);

        let radial = Observable::RadialMultiplier(RadialProfile::identity(0.5, 3.0));
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let b = SpectralBlock::torus(2, FrequencyWindow::new(h, 1.0, 2.0).unwrap()).unwrap();
            let rep = observable_average_experiment(&b, &radial, Field::Complex, 2000, &mc).unwrap();
            assert!((rep.trace_exact - 14.0 / 9.0).abs() < 2.0 * h, "h={h} trace={}", rep.trace_exact);
            assert!(rep.mc.z_score(rep.trace_exact) < 4.0);
            assert!((rep.liouville - 14.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_multiplication_form() {
        let b = SpectralBlock::sphere_degree(2, 5).unwrap();
        let mc = MonteCarlo::serial(2);
        // a = 1 + Y_{2,0}: trace/N = mean(a) = 1
        let sym = Symbol::Harmonic(vec![(0, 0, (4.0 * PI).sqrt()), (2, 0, 1.0)]);
        let rep = observable_average_experiment(&b, &Observable::Multiplication(sym), Field::Complex, 3000, &mc).unwrap();
        assert!((rep.trace_exact - 1.0).abs() < 1e-12);
        assert!(rep.mc.z_score(1.0) < 4.0, "{:?}", rep.mc);
    }

    #[test]
    fn peak_function_identities() {
        let r = torus_lower_bound_experiment(3, &[1, 2, 3, 5, 6, 7, 9], 4.0).unwrap();
        assert_eq!(r.skipped, vec![7]);
        let first = &r.rows[0];
        assert_eq!(first.dim, 6);
        assert!((first.linf - 6f64.sqrt() / (2.0 * PI).powf(1.5)).abs() < 1e-12);
        for row in &r.rows {
            assert!((row.l2 - 1.0).abs() < 1e-10);
            assert!((row.linf_over_sqrt_n - (2.0 * PI).powf(-1.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn weyl_ratio_row() {
        assert!((torus2_weyl_ratio(200.0) - 1.0).abs() < 5.0 / 200.0);
    }
}
