//! Probability measures on coefficient spaces.
//!
//! * uniform laws on the unit sphere of `R^N` or `C^N`,
//! * Haar-distributed orthonormal bases of `O(N)` and `U(N)`,
//! * product measures `P = (x)_k nu_k` where `nu_k` is the image of a scaled
//!   radial law times the uniform law on the sphere of block `k`,
//!
//! together with the Hellinger-affinity test deciding whether two product
//! measures are equivalent or mutually singular.

use crate::error::{invalid, Result};
use crate::geometry::SpectralBlock;
use crate::parallel::MonteCarlo;
use crate::rng::RngStream;
use crate::stats::MeanEstimate;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Field {
    Real,
    Complex,
}

/// Uniform point on the unit sphere of `R^n`.
pub fn sample_real_sphere(n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("sphere dimension N must be positive"));
    }
    let mut g = vec![0.0; n];
    loop {
        rng.fill_gaussian(&mut g);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            g.iter_mut().for_each(|x| *x /= norm);
            return Ok(g);
        }
    }
}

/// Uniform point on the unit sphere of `R^N` (imaginary parts zero) or `C^N`.
///
/// The complex sphere is sampled as the real sphere of dimension `2N` whose
/// consecutive coordinates are paired into real and imaginary parts.
pub fn sample_sphere_uniform(n: usize, field: Field, rng: &mut RngStream) -> Result<Vec<Complex64>> {
    match field {
        Field::Real => Ok(sample_real_sphere(n, rng)?.into_iter().map(|x| Complex64::new(x, 0.0)).collect()),
        Field::Complex => {
            if n == 0 {
                return Err(invalid("sphere dimension N must be positive"));
            }
            let v = sample_real_sphere(2 * n, rng)?;
            Ok(v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
        }
    }
}

/// Haar-random orthonormal basis, returned as the columns of an `N x N` matrix.
///
/// A Gaussian matrix is QR factorized and each column of `Q` is multiplied by
/// the phase of the matching diagonal entry of `R`, which makes the factor
/// unique and its law invariant.
pub fn sample_haar_basis(n: usize, field: Field, rng: &mut RngStream) -> Result<DMatrix<Complex64>> {
    if n == 0 {
        return Err(invalid("basis dimension N must be positive"));
    }
    match field {
        Field::Real => {
            let g = DMatrix::from_fn(n, n, |_, _| rng.gaussian());
            let qr = g.qr();
            let (mut q, r) = (qr.q(), qr.r());
            for j in 0..n {
                if r[(j, j)] < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            Ok(q.map(|x| Complex64::new(x, 0.0)))
        }
        Field::Complex => {
            let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gaussian(), rng.gaussian()));
            let qr = g.qr();
            let (mut q, r) = (qr.q(), qr.r());
            for j in 0..n {
                let d = r[(j, j)];
                if d.norm() > 0.0 {
                    let phase = d / d.norm();
                    q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
                }
            }
            Ok(q)
        }
    }
}

/// Law of the block amplitude `r` before scaling by the block weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RadialLaw {
    /// Point mass at `r0 >= 0`.
    Dirac(f64),
    /// Density `sqrt(2/pi) e^{-r^2/2}` on `r >= 0`.
    HalfGaussian,
}

impl RadialLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadialLaw::Dirac(r0) if !(*r0 >= 0.0 && r0.is_finite()) => Err(invalid(format!("Dirac radius {r0} must be finite and >= 0"))),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            RadialLaw::Dirac(r0) => *r0,
            RadialLaw::HalfGaussian => rng.gaussian().abs(),
        }
    }

    /// Tail class `gamma` in `P(r > rho) <= C e^{-c rho^gamma}`; infinite for compact support.
    pub fn tail_gamma(&self) -> f64 {
        match self {
            RadialLaw::Dirac(_) => f64::INFINITY,
            RadialLaw::HalfGaussian => 2.0,
        }
    }

    /// Declared `(C, c)` of the tail bound, `None` for compactly supported laws.
    pub fn tail_constants(&self) -> Option<(f64, f64)> {
        match self {
            RadialLaw::Dirac(_) => None,
            RadialLaw::HalfGaussian => Some((1.0, 0.5)),
        }
    }

    /// Exact `P(r > rho)`.
    pub fn survival(&self, rho: f64) -> f64 {
        match self {
            RadialLaw::Dirac(r0) => f64::from(u8::from(*r0 > rho)),
            RadialLaw::HalfGaussian => {
                if rho <= 0.0 {
                    1.0
                } else {
                    statrs::function::erf::erfc(rho / std::f64::consts::SQRT_2)
                }
            }
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            RadialLaw::Dirac(r0) => r0 * r0,
            RadialLaw::HalfGaussian => 1.0,
        }
    }
}

/// A product measure over blocks `k = 0..K_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureSpec {
    /// Frequency scales `a_k`, strictly increasing.
    pub scales: Vec<f64>,
    /// Weights `alpha_k >= 0`.
    pub weights: Vec<f64>,
    pub laws: Vec<RadialLaw>,
    /// Block dimensions `N_k`.
    pub dims: Vec<usize>,
    /// Sobolev index used for the reported norm.
    pub s: f64,
    pub field: Field,
}

impl MeasureSpec {
    pub fn new(scales: Vec<f64>, weights: Vec<f64>, laws: Vec<RadialLaw>, dims: Vec<usize>, s: f64, field: Field) -> Result<Self> {
        let k = scales.len();
        if weights.len() != k || laws.len() != k || dims.len() != k {
            return Err(invalid("scales, weights, laws and dims must have equal length"));
        }
        if !scales.windows(2).all(|w| w[0] < w[1]) || scales.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(invalid("block scales must be finite, nonnegative and strictly increasing"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("block weights must be finite and nonnegative"));
        }
        if dims.contains(&0) {
            return Err(invalid("every block needs at least one mode"));
        }
        if !s.is_finite() {
            return Err(invalid("Sobolev index must be finite"));
        }
        for law in &laws {
            law.validate()?;
        }
        Ok(Self { scales, weights, laws, dims, s, field })
    }

    /// Dyadic scales `a_k = 2^k`, one law for every block.
    pub fn dyadic(weights: Vec<f64>, law: RadialLaw, dims: Vec<usize>, s: f64, field: Field) -> Result<Self> {
        let scales = (0..weights.len()).map(|k| 2f64.powi(k as i32)).collect();
        let laws = vec![law; weights.len()];
        Self::new(scales, weights, laws, dims, s, field)
    }

    pub fn k_max(&self) -> usize {
        self.scales.len()
    }

    /// `sum_k alpha_k^2 (1 + a_k^2)^s`.
    pub fn weight_norm_sq(&self, s: f64) -> f64 {
        self.weights.iter().zip(&self.scales).map(|(a, sc)| a * a * (1.0 + sc * sc).powf(s)).sum()
    }

    /// `E ||u||_{L^2}^2 = sum_k alpha_k^2 E r_k^2`.
    pub fn expected_l2_sq(&self) -> f64 {
        self.weights.iter().zip(&self.laws).map(|(a, l)| a * a * l.second_moment()).sum()
    }
}

/// Coefficients of a sampled field, one vector per block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomFieldCoeffs {
    pub blocks: Vec<Vec<Complex64>>,
}

impl RandomFieldCoeffs {
    pub fn block_norms_sq(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.iter().map(|z| z.norm_sqr()).sum()).collect()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.block_norms_sq().iter().sum()
    }

    pub fn flatten(&self) -> Vec<Complex64> {
        self.blocks.concat()
    }
}

/// `r alpha omega` with `r ~ law` and `omega` uniform on the coefficient sphere of dimension `n`.
pub fn sample_block_coeffs(n: usize, alpha: f64, law: &RadialLaw, field: Field, rng: &mut RngStream) -> Result<Vec<Complex64>> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("block weight {alpha} must be finite and >= 0")));
    }
    let omega = sample_sphere_uniform(n, field, rng)?;
    let r = law.sample(rng) * alpha;
    Ok(omega.into_iter().map(|z| z * r).collect())
}

pub fn sample_block_field(block: &SpectralBlock, alpha: f64, law: &RadialLaw, field: Field, rng: &mut RngStream) -> Result<RandomFieldCoeffs> {
    if block.is_empty() {
        return Err(invalid("cannot sample on an empty block"));
    }
    Ok(RandomFieldCoeffs { blocks: vec![sample_block_coeffs(block.dim(), alpha, law, field, rng)?] })
}

/// Independent draws on every block `k < K_max`; the truncation stands in
/// for the infinite product.
pub fn sample_full_field(measure: &MeasureSpec, rng: &mut RngStream) -> Result<RandomFieldCoeffs> {
    let blocks = (0..measure.k_max())
        .map(|k| sample_block_coeffs(measure.dims[k], measure.weights[k], &measure.laws[k], measure.field, rng))
        .collect::<Result<_>>()?;
    Ok(RandomFieldCoeffs { blocks })
}

/// Block-weighted squared Sobolev norm `sum_k (1 + a_k^2)^s ||u_k||^2`.
pub fn sobolev_norm(coeffs: &RandomFieldCoeffs, scales: &[f64], s: f64) -> Result<f64> {
    if coeffs.blocks.len() != scales.len() {
        return Err(crate::Error::DimensionMismatch { expected: scales.len(), got: coeffs.blocks.len() });
    }
    Ok(coeffs.block_norms_sq().iter().zip(scales).map(|(n, a)| n * (1.0 + a * a).powf(s)).sum())
}

/// A radial law scaled by its block weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledLaw {
    pub law: RadialLaw,
    pub alpha: f64,
}

enum Effective {
    Point(f64),
    Gaussian(f64),
}

impl ScaledLaw {
    fn effective(&self) -> Effective {
        match self.law {
            RadialLaw::Dirac(r0) => Effective::Point(r0 * self.alpha),
            RadialLaw::HalfGaussian if self.alpha == 0.0 => Effective::Point(0.0),
            RadialLaw::HalfGaussian => Effective::Gaussian(self.alpha),
        }
    }
}

/// Hellinger affinity `int sqrt(dq1 dq2)` of two scaled radial laws.
pub fn kakutani_affinity_term(q1: ScaledLaw, q2: ScaledLaw) -> f64 {
    match (q1.effective(), q2.effective()) {
        (Effective::Gaussian(a), Effective::Gaussian(b)) => (2.0 * a * b / (a * a + b * b)).sqrt(),
        (Effective::Point(x), Effective::Point(y)) => {
            if (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0) {
                1.0
            } else {
                0.0
            }
        }
        // an atom and a density share no mass
        _ => 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KakutaniVerdict {
    Equivalent,
    Singular,
    Undecided,
}

impl std::fmt::Display for KakutaniVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KakutaniVerdict::Equivalent => "equivalent",
            KakutaniVerdict::Singular => "singular",
            KakutaniVerdict::Undecided => "undecided",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KakutaniReport {
    pub verdict: KakutaniVerdict,
    pub partial_product: f64,
    /// `sum (1 - term_k)` over the upper half `k >= K_max / 2`.
    pub tail_defect: f64,
    pub k_max: usize,
    pub terms: Vec<f64>,
}

pub const SINGULAR_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_TAIL_TOL: f64 = 1e-2;

/// Truncated Kakutani product over the common blocks of two measures.
///
/// Singular when some term vanishes or the partial product drops below
/// `1e-8`; equivalent when the tail defect is below `tol`; undecided otherwise.
pub fn kakutani_product(spec1: &MeasureSpec, spec2: &MeasureSpec, tol: f64) -> Result<KakutaniReport> {
    if spec1.k_max() != spec2.k_max() {
        return Err(invalid("both measures must be truncated at the same K_max"));
    }
    let k_max = spec1.k_max();
    if k_max == 0 {
        return Err(invalid("K_max must be positive"));
    }
    let terms: Vec<f64> = (0..k_max)
        .map(|k| {
            kakutani_affinity_term(
                ScaledLaw { law: spec1.laws[k], alpha: spec1.weights[k] },
                ScaledLaw { law: spec2.laws[k], alpha: spec2.weights[k] },
            )
        })
        .collect();
    let partial_product: f64 = terms.iter().product();
    let tail_defect: f64 = terms[k_max / 2..].iter().map(|t| 1.0 - t).sum();
    let verdict = if terms.contains(&0.0) || partial_product < SINGULAR_THRESHOLD {
        KakutaniVerdict::Singular
    } else if tail_defect < tol {
        KakutaniVerdict::Equivalent
    } else {
        KakutaniVerdict::Undecided
    };
    Ok(KakutaniReport { verdict, partial_product, tail_defect, k_max, terms })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentCheck {
    pub q: u32,
    /// Estimate of `E (sum u_k)^{2q}`.
    pub lhs: MeanEstimate,
    /// Estimate of `q^q E (sum u_k^2)^q`.
    pub rhs: MeanEstimate,
    pub holds: bool,
}

/// Monte-Carlo check of `E (sum u_k)^{2q} <= q^q E (sum u_k^2)^q` for
/// independent symmetric `u_k` produced by `sample` (one vector per trial).
pub fn moment_inequality_check<F>(sample: F, q: u32, trials: usize, mc: &MonteCarlo) -> Result<MomentCheck>
where
    F: Fn(&mut RngStream) -> Vec<f64> + Sync + Send,
{
    if q == 0 {
        return Err(invalid("q must be at least 1"));
    }
    if trials < 2 {
        return Err(invalid("need at least two trials"));
    }
    let qq = (q as f64).powi(q as i32);
    let pairs = mc.map(0x4d4f, trials, |_, rng| {
        let u = sample(rng);
        let s: f64 = u.iter().sum();
        let s2: f64 = u.iter().map(|x| x * x).sum();
        (s.powi(2 * q as i32), qq * s2.powi(q as i32))
    });
    let (l, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let lhs = MeanEstimate::from_samples(&l);
    let rhs = MeanEstimate::from_samples(&r);
    let combined = (lhs.stderr.powi(2) + rhs.stderr.powi(2)).sqrt();
    Ok(MomentCheck { q, lhs, rhs, holds: lhs.mean <= rhs.mean + 3.0 * combined })
}

/// Exact `(E (sum u)^{2q}, q^q E (sum u^2)^q)` for `K` Rademacher signs.
pub fn rademacher_moments_exact(k: u32, q: u32) -> Result<(f64, f64)> {
    if k == 0 || k > 24 {
        return Err(invalid("exact enumeration supports 1 <= K <= 24"));
    }
    let patterns = 1u64 << k;
    let total: f64 = (0..patterns)
        .map(|bits| {
            let s = 2 * bits.count_ones() as i64 - k as i64;
            (s as f64).powi(2 * q as i32)
        })
        .sum();
    let lhs = total / patterns as f64;
    let rhs = (q as f64).powi(q as i32) * (k as f64).powi(q as i32);
    Ok((lhs, rhs))
}
