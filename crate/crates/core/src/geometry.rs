//! Model manifolds and the bookkeeping of their Laplace spectra.
//!
//! Everything here is closed form: sphere degrees `k` carry frequency
//! `sqrt(k (k + d - 1))` with multiplicity given by the harmonic-polynomial
//! dimension formula, and torus modes are lattice points `n` with frequency `|n|`.

use crate::error::{invalid, Result};
use crate::quadrature::adaptive_simpson;
use crate::special::{binomial, unit_ball_volume, unit_sphere_area};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Default for the constant `D` in the block-width condition `b - a >= D h`.
pub const DEFAULT_WIDTH_CONSTANT: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ManifoldKind {
    Sphere(u32),
    Torus(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    volume: f64,
}

impl ManifoldSpec {
    /// Unit round sphere `S^d`.
    pub fn sphere(d: u32) -> Result<Self> {
        if d < 1 {
            return Err(invalid("sphere dimension must be at least 1"));
        }
        Ok(Self { kind: ManifoldKind::Sphere(d), volume: unit_sphere_area(d) })
    }

    /// Flat torus `R^d / (2 pi Z)^d`.
    pub fn torus(d: u32) -> Result<Self> {
        if d < 1 {
            return Err(invalid("torus dimension must be at least 1"));
        }
        Ok(Self { kind: ManifoldKind::Torus(d), volume: (2.0 * PI).powi(d as i32) })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dim(&self) -> u32 {
        match self.kind {
            ManifoldKind::Sphere(d) | ManifoldKind::Torus(d) => d,
        }
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.kind, ManifoldKind::Sphere(_))
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, ManifoldKind::Torus(_))
    }
}

/// Rescaled frequency window `h * omega in (lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrequencyWindow {
    pub h: f64,
    pub lower: f64,
    pub upper: f64,
}

impl FrequencyWindow {
    pub fn new(h: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(invalid(format!("window scale h = {h} must lie in (0, 1]")));
        }
        if !(lower >= 0.0 && lower.is_finite()) {
            return Err(invalid(format!("window lower bound {lower} must be a finite nonnegative number")));
        }
        if !(upper > lower && upper.is_finite()) {
            return Err(invalid(format!("window upper bound {upper} must exceed the lower bound {lower}")));
        }
        Ok(Self { h, lower, upper })
    }

    fn tol(&self) -> f64 {
        1e-12 * self.upper.max(1.0)
    }

    /// Half-open membership; a frequency exactly at the upper edge belongs.
    pub fn contains(&self, frequency: f64) -> bool {
        let x = self.h * frequency;
        x > self.lower + self.tol() && x <= self.upper + self.tol()
    }

    /// Largest unscaled frequency the window admits.
    pub fn max_frequency(&self) -> f64 {
        (self.upper + self.tol()) / self.h
    }

    pub fn satisfies_width(&self, width_constant: f64) -> bool {
        self.upper - self.lower >= width_constant * self.h
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ModeId {
    /// Degree and order; on `S^2` the order runs over `-k..=k`, on higher
    /// spheres it is an index into an unspecified orthonormal basis.
    Harmonic { degree: u32, order: i32 },
    Lattice(Vec<i32>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mode {
    pub id: ModeId,
    pub frequency: f64,
}

/// The span of eigenfunctions with rescaled frequency inside a window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralBlock {
    manifold: ManifoldSpec,
    window: FrequencyWindow,
    modes: Vec<Mode>,
}

impl SpectralBlock {
    /// All lattice points with `h |n|` in the window, lexicographic order.
    pub fn torus(d: u32, window: FrequencyWindow) -> Result<Self> {
        let block = torus_modes_in_window(d, window)?;
        block.warn_if_narrow(DEFAULT_WIDTH_CONSTANT);
        Ok(block)
    }

    /// All spherical harmonics whose degree frequency lies in the window.
    pub fn sphere(d: u32, window: FrequencyWindow) -> Result<Self> {
        let manifold = ManifoldSpec::sphere(d)?;
        if d < 2 {
            return Err(invalid("spherical harmonic blocks need d >= 2 (S^1 is the torus T^1)"));
        }
        let mut modes = Vec::new();
        let mut k = 0u32;
        loop {
            let w = sphere_eigen_frequency(d, k);
            if w > window.max_frequency() {
                break;
            }
            if window.contains(w) {
                push_degree(&mut modes, d, k)?;
            }
            k += 1;
        }
        let block = Self { manifold, window, modes };
        block.warn_if_narrow(DEFAULT_WIDTH_CONSTANT);
        Ok(block)
    }

    /// The block holding exactly the degree-`k` harmonics, `k >= 1`.
    ///
    /// Uses `h = 1/k` and the window `(h (w_{k-1} + w_k) / 2, h w_k]`.
    pub fn sphere_degree(d: u32, k: u32) -> Result<Self> {
        if d < 2 {
            return Err(invalid("spherical harmonic blocks need d >= 2"));
        }
        if k == 0 {
            return Err(invalid("degree 0 has frequency 0 and lies in no window (a, b] with a >= 0"));
        }
        let h = 1.0 / k as f64;
        let wk = sphere_eigen_frequency(d, k);
        let wprev = sphere_eigen_frequency(d, k - 1);
        let window = FrequencyWindow::new(h, h * 0.5 * (wprev + wk), h * wk)?;
        let manifold = ManifoldSpec::sphere(d)?;
        let mut modes = Vec::new();
        push_degree(&mut modes, d, k)?;
        Ok(Self { manifold, window, modes })
    }

    /// Union of consecutive sphere degrees `lo..=hi`, `lo >= 1`.
    pub fn sphere_degrees(d: u32, lo: u32, hi: u32) -> Result<Self> {
        if lo == 0 || hi < lo {
            return Err(invalid("need 1 <= lo <= hi"));
        }
        let wl = sphere_eigen_frequency(d, lo);
        let wprev = sphere_eigen_frequency(d, lo - 1);
        let wh = sphere_eigen_frequency(d, hi);
        let h = 1.0 / hi as f64;
        Self::sphere(d, FrequencyWindow::new(h, h * 0.5 * (wprev + wl), h * wh)?)
    }

    /// Lattice points on the sphere `|n|^2 = k`, `k >= 1`.
    pub fn torus_shell(d: u32, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("the shell |n|^2 = 0 has frequency 0 and lies in no window"));
        }
        let kf = k as f64;
        let window = FrequencyWindow::new(1.0, (kf - 0.5).sqrt(), kf.sqrt())?;
        torus_modes_in_window(d, window)
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn window(&self) -> &FrequencyWindow {
        &self.window
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Distinct sphere degrees in ascending order (empty for torus blocks).
    pub fn degrees(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for m in &self.modes {
            if let ModeId::Harmonic { degree, .. } = m.id {
                if out.last() != Some(&degree) {
                    out.push(degree);
                }
            }
        }
        out
    }

    /// Largest `|n_i|` over lattice modes (0 for sphere blocks).
    pub fn lattice_extent(&self) -> i32 {
        self.modes
            .iter()
            .filter_map(|m| match &m.id {
                ModeId::Lattice(n) => n.iter().map(|x| x.abs()).max(),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Largest frequency in the block.
    pub fn max_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.frequency).fold(0.0, f64::max)
    }

    /// Message describing a violation of `b - a >= D h`, if any.
    pub fn width_warning(&self, width_constant: f64) -> Option<String> {
        if self.window.satisfies_width(width_constant) {
            None
        } else {
            Some(format!(
                "window width {} is below D h = {} (D = {width_constant})",
                self.window.upper - self.window.lower,
                width_constant * self.window.h
            ))
        }
    }

    fn warn_if_narrow(&self, width_constant: f64) {
        if let Some(msg) = self.width_warning(width_constant) {
            log::warn!("{msg}");
        }
    }
}

fn push_degree(modes: &mut Vec<Mode>, d: u32, k: u32) -> Result<()> {
    let frequency = sphere_eigen_frequency(d, k);
    if d == 2 {
        for order in -(k as i32)..=(k as i32) {
            modes.push(Mode { id: ModeId::Harmonic { degree: k, order }, frequency });
        }
    } else {
        let n = sphere_harmonic_dim(d, k)?;
        let n = i32::try_from(n).map_err(|_| invalid("harmonic space too large to enumerate"))?;
        for order in 0..n {
            modes.push(Mode { id: ModeId::Harmonic { degree: k, order }, frequency });
        }
    }
    Ok(())
}

/// Dimension of the degree-`k` harmonics on `S^d`: `C(k+d, d) - C(k+d-2, d)`.
pub fn sphere_harmonic_dim(d: u32, k: u32) -> Result<u64> {
    if d < 2 {
        return Err(invalid("sphere_harmonic_dim needs d >= 2 (S^1 is handled as the torus T^1)"));
    }
    let (d, k) = (d as u64, k as u64);
    let top = binomial(k + d, d);
    let low = if k >= 2 { binomial(k + d - 2, d) } else { 0 };
    u64::try_from(top - low).map_err(|_| invalid("harmonic dimension overflows u64"))
}

/// `sqrt(k (k + d - 1))`, the square root of the degree-`k` eigenvalue of `-Laplace` on `S^d`.
pub fn sphere_eigen_frequency(d: u32, k: u32) -> f64 {
    let k = k as f64;
    (k * (k + d as f64 - 1.0)).sqrt()
}

/// Enumerate lattice points with `h |n|` in the window, lexicographically.
pub fn torus_modes_in_window(d: u32, window: FrequencyWindow) -> Result<SpectralBlock> {
    let manifold = ManifoldSpec::torus(d)?;
    let bound = window.max_frequency().ceil() as i32;
    let mut modes = Vec::new();
    for_each_lattice_point(d as usize, bound, |n| {
        let r2: i64 = n.iter().map(|&x| (x as i64) * (x as i64)).sum();
        let w = (r2 as f64).sqrt();
        if window.contains(w) {
            modes.push(Mode { id: ModeId::Lattice(n.to_vec()), frequency: w });
        }
    });
    Ok(SpectralBlock { manifold, window, modes })
}

/// Visit every `n` in `[-bound, bound]^d` in lexicographic order.
pub(crate) fn for_each_lattice_point<F: FnMut(&[i32])>(d: usize, bound: i32, mut f: F) {
    if d == 0 {
        return;
    }
    let mut n = vec![-bound; d];
    loop {
        f(&n);
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if n[i] < bound {
                n[i] += 1;
                break;
            }
            n[i] = -bound;
        }
    }
}

/// Number of `n in Z^d` with `|n|^2 = k`.
pub fn representation_count(d: u32, k: u64) -> u64 {
    match d {
        0 => u64::from(k == 0),
        1 => match isqrt_exact(k) {
            Some(0) => 1,
            Some(_) => 2,
            None => 0,
        },
        _ => {
            let m = isqrt(k);
            (-(m as i64)..=(m as i64))
                .map(|n| representation_count(d - 1, k - (n * n) as u64))
                .sum()
        }
    }
}

/// Number of `n in Z^d` with `|n|^2 <= r2`.
pub fn lattice_ball_count(d: u32, r2: u64) -> u64 {
    match d {
        0 => 1,
        1 => 2 * isqrt(r2) + 1,
        _ => {
            let m = isqrt(r2);
            (-(m as i64)..=(m as i64))
                .map(|n| lattice_ball_count(d - 1, r2 - (n * n) as u64))
                .sum()
        }
    }
}

pub(crate) fn isqrt(k: u64) -> u64 {
    let mut r = (k as f64).sqrt() as u64;
    while r * r > k {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= k {
        r += 1;
    }
    r
}

fn isqrt_exact(k: u64) -> Option<u64> {
    let r = isqrt(k);
    (r * r == k).then_some(r)
}

/// Exact number of eigenfrequencies `<= lambda`, with multiplicity.
pub fn weyl_count(manifold: &ManifoldSpec, lambda: f64) -> u64 {
    if lambda < 0.0 {
        return 0;
    }
    match manifold.kind() {
        ManifoldKind::Torus(d) => {
            // |n| <= lambda  <=>  |n|^2 <= floor(lambda^2) for integer |n|^2
            let r2 = (lambda * lambda * (1.0 + 1e-15)).floor() as u64;
            lattice_ball_count(d, r2)
        }
        ManifoldKind::Sphere(d) => {
            let mut total = 0u64;
            let mut k = 0u32;
            while sphere_eigen_frequency(d, k) <= lambda {
                total += if d >= 2 { sphere_harmonic_dim(d, k).unwrap_or(0) } else if k == 0 { 1 } else { 2 };
                k += 1;
            }
            total
        }
    }
}

/// Leading Weyl term `c_d Vol(M) lambda^d / (2 pi)^d`.
pub fn weyl_prediction(manifold: &ManifoldSpec, lambda: f64) -> f64 {
    let d = manifold.dim();
    unit_ball_volume(d) * manifold.volume() * (lambda / (2.0 * PI)).powi(d as i32)
}

/// A smooth function given by a finite expansion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Symbol {
    /// `a(x) = sum c_k e^{i k.x}` on `T^d`.
    Fourier(Vec<(Vec<i32>, Complex64)>),
    /// `a = sum c_{l,m} Y_{l,m}` in the real orthonormal harmonics of `S^2`.
    Harmonic(Vec<(u32, i32, f64)>),
}

impl Symbol {
    pub fn torus_constant(d: u32, value: f64) -> Self {
        Symbol::Fourier(vec![(vec![0; d as usize], Complex64::new(value, 0.0))])
    }

    /// `cos(x_1)` on `T^d`.
    pub fn cos_x1(d: u32) -> Self {
        let mut plus = vec![0; d as usize];
        let mut minus = vec![0; d as usize];
        plus[0] = 1;
        minus[0] = -1;
        Symbol::Fourier(vec![(plus, Complex64::new(0.5, 0.0)), (minus, Complex64::new(0.5, 0.0))])
    }

    pub fn sphere_constant(value: f64) -> Self {
        Symbol::Harmonic(vec![(0, 0, value * (4.0 * PI).sqrt())])
    }

    /// Mean of the function over the manifold.
    pub fn mean(&self) -> f64 {
        match self {
            Symbol::Fourier(terms) => terms
                .iter()
                .filter(|(k, _)| k.iter().all(|&x| x == 0))
                .map(|(_, c)| c.re)
                .sum(),
            Symbol::Harmonic(terms) => terms
                .iter()
                .filter(|(l, _, _)| *l == 0)
                .map(|(_, _, c)| c / (4.0 * PI).sqrt())
                .sum(),
        }
    }

    /// True when the expansion describes a real-valued function.
    pub fn is_real(&self) -> bool {
        match self {
            Symbol::Harmonic(_) => true,
            Symbol::Fourier(terms) => terms.iter().all(|(k, c)| {
                let neg: Vec<i32> = k.iter().map(|x| -x).collect();
                let partner: Complex64 = terms.iter().filter(|(j, _)| *j == neg).map(|(_, c)| *c).sum();
                let own: Complex64 = terms.iter().filter(|(j, _)| j == k).map(|(_, c)| *c).sum();
                let _ = c;
                (partner - own.conj()).norm() <= 1e-14 * (1.0 + own.norm())
            }),
        }
    }

    /// Evaluate a Fourier symbol at a torus point.
    pub fn eval_torus(&self, x: &[f64]) -> Option<Complex64> {
        match self {
            Symbol::Fourier(terms) => Some(
                terms
                    .iter()
                    .map(|(k, c)| {
                        let phase: f64 = k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum();
                        c * Complex64::from_polar(1.0, phase)
                    })
                    .sum(),
            ),
            Symbol::Harmonic(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Interpolation {
    Linear,
    /// Piecewise constant, value of the left knot.
    Step,
}

/// A scalar profile `b(rho)` given by samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    knots: Vec<f64>,
    values: Vec<f64>,
    rule: Interpolation,
}

impl RadialProfile {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, rule: Interpolation) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(invalid("radial profile needs at least two (knot, value) pairs"));
        }
        if !knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("radial profile knots must be strictly increasing"));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("radial profile must be finite"));
        }
        Ok(Self { knots, values, rule })
    }

    /// `b(rho) = rho` sampled on `[lo, hi]`; exact under linear interpolation.
    pub fn identity(lo: f64, hi: f64) -> Self {
        Self { knots: vec![lo, hi], values: vec![lo, hi], rule: Interpolation::Linear }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    pub fn eval(&self, rho: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        let eps = 1e-12 * hi.abs().max(1.0);
        if !(rho >= lo - eps && rho <= hi + eps) {
            return Err(invalid(format!("radial profile evaluated at {rho} outside its support [{lo}, {hi}]")));
        }
        let rho = rho.clamp(lo, hi);
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&rho)) {
            Ok(i) => return Ok(self.values[i]),
            Err(i) => i - 1,
        };
        Ok(match self.rule {
            Interpolation::Step => self.values[i],
            Interpolation::Linear => {
                let t = (rho - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
                self.values[i] * (1.0 - t) + self.values[i + 1] * t
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Observable {
    /// Multiplication by a smooth function (symbol independent of xi).
    Multiplication(Symbol),
    /// Semiclassical Fourier multiplier `b(h |D|)`.
    RadialMultiplier(RadialProfile),
}

/// Normalized Liouville average of the observable's symbol over `|xi| in I`.
///
/// `I = (window.lower, window.upper)`; when the two bounds coincide the point
/// limit is returned.
pub fn liouville_average(observable: &Observable, manifold: &ManifoldSpec, window: &FrequencyWindow) -> Result<f64> {
    match observable {
        Observable::Multiplication(symbol) => {
            match (symbol, manifold.kind()) {
                (Symbol::Fourier(_), ManifoldKind::Torus(_)) | (Symbol::Harmonic(_), ManifoldKind::Sphere(2)) => {}
                _ => return Err(invalid("symbol expansion does not match the manifold")),
            }
            Ok(symbol.mean())
        }
        Observable::RadialMultiplier(profile) => {
            let (a, b) = (window.lower, window.upper);
            let d = manifold.dim() as i32;
            if (b - a).abs() <= 1e-15 * b.max(1.0) {
                return profile.eval(a);
            }
            let weight = |r: f64| r.powi(d - 1);
            let num = adaptive_simpson(|r| profile.eval(r).map(|v| v * weight(r)).unwrap_or(f64::NAN), a, b, 1e-13)?;
            let den = adaptive_simpson(weight, a, b, 1e-13)?;
            Ok(num / den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn manifold_volumes() {
        assert_relative_eq!(ManifoldSpec::sphere(2).unwrap().volume(), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(ManifoldSpec::torus(3).unwrap().volume(), (2.0 * PI).powi(3), max_relative = 1e-14);
        assert!(ManifoldSpec::sphere(0).is_err());
        assert!(ManifoldSpec::torus(0).is_err());
    }

    #[test]
    fn harmonic_dimension_examples() {
        assert_eq!(sphere_harmonic_dim(2, 0).unwrap(), 1);
        assert_eq!(sphere_harmonic_dim(2, 3).unwrap(), 7);
        let n = sphere_harmonic_dim(3, 100).unwrap();
        assert_eq!(n, 101 * 101);
        assert!((n as f64 - 10_000.0).abs() <= 500.0);
        assert!(sphere_harmonic_dim(1, 3).is_err());
    }

    #[test]
    fn harmonic_dimension_on_s2_is_odd_sequence() {
        for k in 0..=1000 {
            assert_eq!(sphere_harmonic_dim(2, k).unwrap(), 2 * k as u64 + 1);
        }
    }

    #[test]
    fn eigen_frequencies() {
        assert_eq!(sphere_eigen_frequency(2, 0), 0.0);
        assert_relative_eq!(sphere_eigen_frequency(2, 3), 12f64.sqrt());
        assert_relative_eq!(sphere_eigen_frequency(3, 1), 3f64.sqrt());
    }

    #[test]
    fn torus_window_examples() {
        let b = torus_modes_in_window(1, FrequencyWindow::new(1.0, 0.5, 2.5).unwrap()).unwrap();
        let ns: Vec<ModeId> = b.modes().iter().map(|m| m.id.clone()).collect();
        assert_eq!(
            ns,
            vec![
                ModeId::Lattice(vec![-2]),
                ModeId::Lattice(vec![-1]),
                ModeId::Lattice(vec![1]),
                ModeId::Lattice(vec![2])
            ]
        );
        let b = torus_modes_in_window(2, FrequencyWindow::new(1.0, 4.9, 5.0).unwrap()).unwrap();
        assert_eq!(b.dim(), 12);
        assert!(b.modes().iter().all(|m| (m.frequency - 5.0).abs() < 1e-15));
        let empty = torus_modes_in_window(2, FrequencyWindow::new(1.0, 2.0, 2.0 + 1e-9).unwrap()).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn window_edges_are_half_open() {
        let w = FrequencyWindow::new(1.0, 1.0, 2.0).unwrap();
        assert!(!w.contains(1.0));
        assert!(w.contains(2.0));
        assert!(FrequencyWindow::new(0.0, 1.0, 2.0).is_err());
        assert!(FrequencyWindow::new(0.5, 2.0, 2.0).is_err());
    }

    #[test]
    fn representation_examples() {
        assert_eq!(representation_count(1, 4), 2);
        assert_eq!(representation_count(2, 25), 12);
        assert_eq!(representation_count(2, 3), 0);
        assert_eq!(representation_count(3, 1), 6);
        assert_eq!(representation_count(4, 1), 8);
    }

    #[test]
    fn representation_count_matches_shell_enumeration() {
        for d in 1..=3 {
            for k in 1..=200u64 {
                let shell = SpectralBlock::torus_shell(d, k).unwrap();
                assert_eq!(shell.dim() as u64, representation_count(d, k), "d={d} k={k}");
            }
        }
    }

    #[test]
    fn sphere_degree_blocks_isolate_one_degree() {
        for d in 2..=5 {
            for k in 1..=60 {
                let b = SpectralBlock::sphere_degree(d, k).unwrap();
                let again = SpectralBlock::sphere(d, *b.window()).unwrap();
                assert_eq!(again.degrees(), vec![k]);
                assert_eq!(again.dim() as u64, sphere_harmonic_dim(d, k).unwrap());
            }
        }
        assert!(SpectralBlock::sphere_degree(2, 0).is_err());
        let union = SpectralBlock::sphere_degrees(2, 3, 5).unwrap();
        assert_eq!(union.degrees(), vec![3, 4, 5]);
        assert_eq!(union.dim(), 7 + 9 + 11);
    }

    #[test]
    fn weyl_examples() {
        let t2 = ManifoldSpec::torus(2).unwrap();
        assert_eq!(weyl_count(&t2, 0.0), 1);
        let s2 = ManifoldSpec::sphere(2).unwrap();
        for k in 0..=100u64 {
            assert_eq!(weyl_count(&s2, k as f64 + 0.6), (k + 1) * (k + 1));
        }
        let lambda = 200.0;
        let c = weyl_count(&t2, lambda) as f64;
        assert_relative_eq!(weyl_prediction(&t2, lambda), PI * lambda * lambda, max_relative = 1e-13);
        assert!((c - PI * lambda * lambda).abs() <= 10.0 * lambda);
    }

    #[test]
    fn weyl_ratio_and_monotonicity() {
        let t2 = ManifoldSpec::torus(2).unwrap();
        for lambda in [50.0, 100.0, 200.0] {
            let ratio = weyl_count(&t2, lambda) as f64 / weyl_prediction(&t2, lambda);
            assert!((ratio - 1.0).abs() <= 5.0 / lambda, "lambda={lambda} ratio={ratio}");
        }
        let mut prev = 0;
        for i in 0..400 {
            let c = weyl_count(&t2, i as f64 * 0.137);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn liouville_examples() {
        let t2 = ManifoldSpec::torus(2).unwrap();
        let w = FrequencyWindow::new(0.25, 1.0, 2.0).unwrap();
        let one = Observable::Multiplication(Symbol::torus_constant(2, 1.0));
        assert_relative_eq!(liouville_average(&one, &t2, &w).unwrap(), 1.0);
        let cos = Observable::Multiplication(Symbol::cos_x1(2));
        assert_eq!(liouville_average(&cos, &t2, &w).unwrap(), 0.0);
        let radial = Observable::RadialMultiplier(RadialProfile::identity(0.5, 3.0));
        assert_relative_eq!(liouville_average(&radial, &t2, &w).unwrap(), 14.0 / 9.0, max_relative = 1e-12);
        let point = FrequencyWindow { h: 1.0, lower: 1.5, upper: 1.5 };
        assert_relative_eq!(liouville_average(&radial, &t2, &point).unwrap(), 1.5);
        let outside = Observable::RadialMultiplier(RadialProfile::identity(1.2, 3.0));
        assert!(liouville_average(&outside, &t2, &w).is_err());
    }

    #[test]
    fn multiplication_average_ignores_window() {
        let t2 = ManifoldSpec::torus(2).unwrap();
        let sym = Symbol::Fourier(vec![
            (vec![0, 0], Complex64::new(0.7, 0.0)),
            (vec![1, 2], Complex64::new(0.1, 0.2)),
            (vec![-1, -2], Complex64::new(0.1, -0.2)),
        ]);
        assert!(sym.is_real());
        let obs = Observable::Multiplication(sym);
        for (lo, hi) in [(0.1, 0.5), (1.0, 2.0), (3.0, 9.0)] {
            let w = FrequencyWindow::new(0.5, lo, hi).unwrap();
            assert_relative_eq!(liouville_average(&obs, &t2, &w).unwrap(), 0.7);
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        let w = FrequencyWindow::new(0.125, 1.0, 1.5).unwrap();
        let a = torus_modes_in_window(2, w).unwrap();
        let b = torus_modes_in_window(2, w).unwrap();
        assert_eq!(a, b);
    }
}
