//! One runner per experiment kind: rows for the CSV plus a full JSON report.

use super::config::{DampingChoice, ExperimentConfig, ManifoldChoice, ObservableChoice, Params, Perturbation, StatisticChoice};
use super::Row;
use crate::ensembles::{kakutani_product, MeasureSpec};
use crate::error::{invalid, Error, Result};
use crate::fields::Point;
use crate::geometry::{weyl_count, weyl_prediction, FrequencyWindow, ManifoldSpec, Observable, RadialProfile, SpectralBlock, Symbol};
use crate::normlab::{linf_median_scaling, moment_experiment, observable_average_experiment, tail_experiment, torus_lower_bound_experiment, TailStatistic};
use crate::parallel::MonteCarlo;
use crate::sphere::{eval_basis, SphereGrid};
use crate::stats::Z95;
use crate::wave::{block_leakage, decay_probability_experiment, decay_rate_builder, dyadic_torus_blocks, pilot_decay_time, spacetime_tail_experiment, DampingProfile, WaveBlockSetup};
use serde_json::{json, Value};
use std::f64::consts::PI;

type Output = Result<(Vec<Row>, Value)>;

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn block(p: &Params) -> Result<SpectralBlock> {
    match p.manifold {
        ManifoldChoice::Sphere => SpectralBlock::sphere_degree(p.dim, p.degree),
        ManifoldChoice::Torus => SpectralBlock::torus(p.dim, FrequencyWindow::new(p.h, p.lower, p.upper)?),
    }
}

fn probe_point(p: &Params) -> Point {
    match p.manifold {
        ManifoldChoice::Sphere => Point::Sphere { theta: 0.7, phi: 0.3 },
        ManifoldChoice::Torus => Point::Torus(vec![0.5; p.dim as usize]),
    }
}

pub(super) fn run(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Output {
    use super::config::ExperimentKind::*;
    match cfg.kind {
        Tails => tails(cfg, mc),
        Medians => medians(cfg, mc),
        Defect => defect(cfg, mc),
        SphereBasis => sphere_basis(cfg, mc),
        TorusGrowth => torus_growth(cfg),
        Kakutani => kakutani(cfg),
        WaveDecay => wave_decay(cfg, mc),
        Leakage => leakage(cfg, mc),
        RateBuilder => rate_builder(cfg, mc),
        SpacetimeTails => spacetime(cfg, mc),
    }
}

fn tails(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Output {
    let p = &cfg.params;
    let b = block(p)?;
    let stat = match p.statistic {
        StatisticChoice::Pointwise => TailStatistic::Pointwise(probe_point(p)),
        StatisticChoice::Linf => TailStatistic::Linf,
        StatisticChoice::Lq => TailStatistic::Lq(p.q),
        StatisticChoice::LqDeviation => TailStatistic::LqDeviation(p.q),
    };
    let r = tail_experiment(&b, p.field, &stat, &p.thresholds, cfg.trials, mc)?;
    let mut rows = Vec::new();
    for row in &r.rows {
        rows.push(Row::ci("exceedance", &r.statistic, row.threshold, row.exceedance.estimate, row.exceedance.lo, row.exceedance.hi));
        rows.push(Row::new("reference", r.bound_kind, row.threshold, row.bound));
    }
    rows.push(Row::new("median", &r.statistic, r.block_dim, r.median));
    rows.push(Row::new("std_dev", &r.statistic, r.block_dim, r.std_dev));
    if let Some(c) = r.fitted_rate {
        rows.push(Row::new("fitted_rate", &r.statistic, r.block_dim, c));
    }
    rows.push(Row::new("gaussian_rate", &r.statistic, r.block_dim, r.gaussian_rate));
    Ok((rows, to_json(&r)))
}

fn medians(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Output {
    let p = &cfg.params;
    let b = block(p)?;
    let r = moment_experiment(&b, p.field, p.q, cfg.trials, mc)?;
    let n = r.block_dim;
    let mean_row = |metric: &str, m: &crate::stats::MeanEstimate| Row::ci(metric, p.q, n, m.mean, m.mean - Z95 * m.stderr, m.mean + Z95 * m.stderr);
    let mut rows = vec![
        Row::new("closed_form_A_qh", p.q, n, r.closed_form_a),
        Row::new("closed_form_A_qh_power", p.q, n, r.closed_form_a.powf(p.q)),
        mean_row("mc_mean_power", &r.mc_power),
        mean_row("mc_mean_norm", &r.mc_norm),
        Row::new("mc_median", p.q, n, r.mc_median),
        Row::new("mc_max", p.q, n, r.mc_max),
    ];
    let mut report = json!({ "moments": to_json(&r) });
    if !p.linf_degrees.is_empty() {
        let blocks = p.linf_degrees.iter().map(|&k| SpectralBlock::sphere_degree(2, k)).collect::<Result<Vec<_>>>()?;
        let s = linf_median_scaling(&blocks, p.field, cfg.trials, mc)?;
        for (row, k) in s.rows.iter().zip(&p.linf_degrees) {
            rows.push(Row::new("linf_median", k, row.dim, row.median));
            rows.push(Row::new("linf_median_over_sqrt_log_n", k, row.dim, row.ratio));
        }
        rows.push(Row::new("linf_band_ratio", "", "", s.band.1 / s.band.0));
        rows.push(Row::new("linf_strictly_increasing", "", "", f64::from(u8::from(s.strictly_increasing))));
        report["linf_scaling"] = to_json(&s);
    }
    Ok((rows, report))
}

fn defect(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Output {
    let p = &cfg.params;
    let b = block(p)?;
    let obs = match (p.observable, p.manifold) {
        (ObservableChoice::CosX1, ManifoldChoice::Torus) => Observable::Multiplication(Symbol::cos_x1(p.dim)),
        (ObservableChoice::CosX1, ManifoldChoice::Sphere) => Observable::Multiplication(Symbol::Harmonic(vec![(1, 0, 1.0)])),
        (ObservableChoice::Constant(v), ManifoldChoice::Torus) => Observable::Multiplication(Symbol::torus_constant(p.dim, v)),
        (ObservableChoice::Constant(v), ManifoldChoice::Sphere) => Observable::Multiplication(Symbol::sphere_constant(v)),
        (ObservableChoice::RadialIdentity, _) => {
            let w = b.window();
            Observable::RadialMultiplier(RadialProfile::identity(w.lower, w.upper))
        }
    };
    let r = observable_average_experiment(&b, &obs, p.field, cfg.trials, mc)?;
    let label = p.observable.render_label();
    let rows = vec![
        Row::ci("mc_average", &label, b.dim(), r.mc.mean, r.mc.mean - Z95 * r.mc.stderr, r.mc.mean + Z95 * r.mc.stderr),
        Row::new("mc_stderr", &label, b.dim(), r.mc.stderr),
        Row::new("trace_exact", &label, b.dim(), r.trace_exact),
        Row::new("liouville", &label, b.dim(), r.liouville),
    ];
    Ok((rows, to_json(&r)))
}

impl ObservableChoice {
    fn render_label(&self) -> String {
        super::config::ConfigValue::render(self)
    }
}

fn sphere_basis(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Output {
    let p = &cfg.params;
    if p.degrees.is_empty() || p.points == 0 {
        return Err(invalid("sphere-basis needs degrees and a positive point count"));
    }
    let mut rows = Vec::new();
    let mut report = Vec::new();
    for (i, &k) in p.degrees.iter().enumerate() {
        let errs = mc.map(0x7362 + ((i as u64) << 16), p.points, |_, rng| {
            let theta = (1.0 - 2.0 * rng.uniform()).acos();
            let phi = 2.0 * PI * rng.uniform();
            let sum: f64 = eval_basis(k, theta, phi).expect("valid point").iter().map(|y| y * y).sum();
            let want = (2 * k + 1) as f64 / (4.0 * PI);
            ((sum - want) / want).abs()
        });
        let addition = errs.iter().copied().fold(0.0, f64::max);
        let grid = SphereGrid::new(k as usize);
        let nb = 2 * k as usize + 1;
        let mut gram = vec![0.0; nb * nb];
        for (theta, phi, w) in grid.points() {
            let y = eval_basis(k, theta, phi)?;
            for a in 0..nb {
                for b in 0..nb {
                    gram[a * nb + b] += w * y[a] * y[b];
                }
            }
        }
        let gram_err = (0..nb * nb).map(|ab| (gram[ab] - f64::from(u8::from(ab / nb == ab % nb))).abs()).fold(0.0, f64::max);
        rows.push(Row::new("addition_theorem_max_rel_err", k, p.points, addition));
        rows.push(Row::new("gram_max_err", k, grid.len(), gram_err));
        report.push(json!({ "degree": k, "addition_theorem_max_rel_err": addition, "gram_max_err": gram_err }));
        if addition > p.tolerance || gram_err > p.tolerance {
            return Err(Error::Invariant(format!("degree {k}: addition theorem error {addition:e}, Gram error {gram_err:e} exceed tolerance {:e}", p.tolerance)));
        }
    }
    Ok((rows, Value::Array(report)))
}

fn torus_growth(cfg: &ExperimentConfig) -> Output {
    let p = &cfg.params;
    let r = torus_lower_bound_experiment(p.dim, &p.shells, p.r)?;
    let mut rows = Vec::new();
    for row in &r.rows {
        rows.push(Row::new("linf_over_sqrt_n", row.k, row.dim, row.linf_over_sqrt_n));
        rows.push(Row::new("lr_ratio", row.k, p.r, row.lr_ratio));
    }
    let torus = ManifoldSpec::torus(p.dim)?;
    let mut weyl = Vec::new();
    for &lambda in &p.lambdas {
        let count = weyl_count(&torus, lambda) as f64;
        let pred = weyl_prediction(&torus, lambda);
        let remainder = (count - pred).abs() / lambda.powi(p.dim as i32 - 1);
        rows.push(Row::new("weyl_count", lambda, p.dim, count));
        rows.push(Row::new("weyl_prediction", lambda, p.dim, pred));
        rows.push(Row::new("weyl_normalized_remainder", lambda, p.dim, remainder));
        weyl.push(json!({ "lambda": lambda, "count": count, "prediction": pred, "normalized_remainder": remainder }));
    }
    Ok((rows, json!({ "lower_bounds": to_json(&r), "weyl": weyl })))
}

/// The measure pair of a kakutani run: dyadic scales, `alpha_{k,1} = 2^{-decay k}`.
pub fn kakutani_measures(p: &Params) -> Result<(MeasureSpec, MeasureSpec)> {
    let w1: Vec<f64> = (0..p.k_max).map(|k| 2f64.powf(-p.decay * k as f64)).collect();
    let w2 = w1
        .iter()
        .enumerate()
        .map(|(k, a)| match p.perturbation {
            Perturbation::Identical => *a,
            Perturbation::Harmonic => a * (1.0 + 1.0 / (k + 1) as f64),
            Perturbation::DoubleEven if k % 2 == 0 => 2.0 * a,
            Perturbation::DoubleEven => *a,
            Perturbation::Scale(c) => a * c,
        })
        .collect();
    let dims = vec![1; p.k_max];
    let m1 = MeasureSpec::dyadic(w1, p.law, dims.clone(), 0.0, p.field)?;
    let m2 = MeasureSpec::dyadic(w2, p.law, dims, 0.0, p.field)?;
    Ok((m1, m2))
}

fn kakutani(cfg: &ExperimentConfig) -> Output {
    let p = &cfg.params;
    let (m1, m2) = kakutani_measures(p)?;
    let r = kakutani_product(&m1, &m2, p.tail_tol)?;
    let verdict = r.verdict.to_string();
    let rows = vec![
        Row::new("partial_product", &verdict, r.k_max, r.partial_product),
        Row::new("tail_defect", &verdict, r.k_max, r.tail_defect),
    ];
    Ok((rows, to_json(&r)))
}

fn wave_setup(p: &Params) -> Result<WaveBlockSetup> {
    let d = p.dim as usize;
    let damping = match p.damping {
        DampingChoice::Zero => DampingProfile::zero(d)?,
        DampingChoice::Constant(a) => DampingProfile::constant(d, a)?,
        DampingChoice::Strip(a, q) => DampingProfile::strip(d, a, q)?,
        DampingChoice::Poisson(a, r) => DampingProfile::poisson(d, a, r)?,
    };
    Ok(WaveBlockSetup { d, lower: p.lower, upper: p.upper, margin: p.margin, damping, mode: p.damping_step })
}

fn wave_decay(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Output {
    let p = &cfg.params;
    let setup = wave_setup(p)?;
    if setup.damping.is_zero() {
        return Err(invalid("decay experiments need a damping that is not identically zero"));
    }
    let mut rows = Vec::new();
    let (t, pilot) = if p.time > 0.0 {
        (Some(p.time), None)
    } else {
        let pilot = pilot_decay_time(&setup, &p.hs, p.epsilon, p.alpha, p.tau, p.t_max, p.safety, p.pilot_trials, mc)?;
        (pilot.t, Some(pilot))
    };
    if let Some(pl) = &pilot {
        rows.push(Row::new("pilot_found", p.t_max, pl.trials, f64::from(u8::from(pl.t.is_some()))));
        if let (Some(first), Some(t)) = (pl.first_hit, pl.t) {
            rows.push(Row::new("pilot_first_hit", p.epsilon, p.alpha, first));
            rows.push(Row::new("decay_time", p.epsilon, p.alpha, t));
        }
    }
    let report = match t {
        Some(t) => {
            let r = decay_probability_experiment(&setup, &p.hs, t, p.epsilon, cfg.trials, mc)?;
            for row in &r.rows {
                rows.push(Row::ci("fraction_below_epsilon", row.h, t, row.below.estimate, row.below.lo, row.below.hi));
                rows.push(Row::new("median_energy", row.h, t, row.median_energy));
                rows.push(Row::new("block_dim", row.h, row.cutoff, row.block_dim as f64));
            }
            Some(r)
        }
        None => None,
    };
    Ok((rows, json!({ "pilot": pilot.as_ref().map(to_json), "decay": report.as_ref().map(to_json) })))
}

fn leakage(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Output {
    let p = &cfg.params;
    let setup = wave_setup(p)?;
    let r = block_leakage(&setup, &p.hs, p.ratio, p.time, cfg.trials, p.iterations, mc)?;
    let rows = r.iter().map(|row| Row::new("leakage_norm", row.h, row.h_source, row.estimate)).collect();
    Ok((rows, to_json(&r)))
}

fn rate_builder(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Output {
    let p = &cfg.params;
    let setup = wave_setup(p)?;
    let r = decay_rate_builder(&setup, &p.hs, p.j_max, p.tau, p.t_max, cfg.trials, mc)?;
    let mut rows = Vec::new();
    for (j, ((t, thr), e)) in r.breakpoints.iter().zip(&r.thresholds).zip(&r.exceedance).enumerate() {
        rows.push(Row::new("breakpoint", j, thr, *t));
        rows.push(Row::ci("exceedance", j, thr, e.estimate, e.lo, e.hi));
        rows.push(Row::new("rate_value", j, t, r.values[j]));
    }
    rows.push(Row::new("capped", p.j_max, p.t_max, f64::from(u8::from(r.capped))));
    Ok((rows, to_json(&r)))
}

fn spacetime(cfg: &ExperimentConfig, mc: &MonteCarlo) -> Output {
    let p = &cfg.params;
    let dims: Vec<usize> = dyadic_torus_blocks(p.k_max).iter().map(Vec::len).collect();
    let weights = (0..p.k_max).map(|k| 2f64.powf(-p.decay * k as f64)).collect();
    let measure = MeasureSpec::dyadic(weights, p.law, dims, 0.0, p.field)?;
    let r = spacetime_tail_experiment(&measure, p.delta, p.p, cfg.trials, mc)?;
    let mut rows = vec![
        Row::new("median", p.delta, p.p, r.median),
        Row::new("std_dev", p.delta, p.p, r.std_dev),
        Row::new("t_grid", p.delta, p.p, r.t_grid),
        Row::new("tail_fraction", p.delta, p.p, r.tail_fraction),
        Row::new("bound_exponent", p.delta, p.p, r.bound_exponent),
    ];
    if let Some(e) = r.fitted_exponent {
        rows.push(Row::new("fitted_exponent", p.delta, p.p, e));
    }
    for row in &r.rows {
        rows.push(Row::ci("exceedance", row.lambda, p.p, row.exceedance.estimate, row.exceedance.lo, row.exceedance.hi));
    }
    Ok((rows, to_json(&r)))
}
