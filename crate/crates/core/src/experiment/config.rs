//! INI-style experiment configuration.
//!
//! One `[kind]` section holds `key = value` lines; `#` starts a comment and
//! lists are comma separated. Keys that the kind does not use are rejected.

use crate::ensembles::{Field, RadialLaw};
use serde::Serialize;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    pub(crate) fn new(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Tails,
    Medians,
    Defect,
    SphereBasis,
    TorusGrowth,
    Kakutani,
    WaveDecay,
    Leakage,
    RateBuilder,
    SpacetimeTails,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        Self::Tails,
        Self::Medians,
        Self::Defect,
        Self::SphereBasis,
        Self::TorusGrowth,
        Self::Kakutani,
        Self::WaveDecay,
        Self::Leakage,
        Self::RateBuilder,
        Self::SpacetimeTails,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tails => "tails",
            Self::Medians => "medians",
            Self::Defect => "defect",
            Self::SphereBasis => "sphere-basis",
            Self::TorusGrowth => "torus-growth",
            Self::Kakutani => "kakutani",
            Self::WaveDecay => "wave-decay",
            Self::Leakage => "leakage",
            Self::RateBuilder => "rate-builder",
            Self::SpacetimeTails => "spacetime-tails",
        }
    }

    /// Keys accepted in this kind's section besides `seed`, `trials` and `out`.
    pub fn keys(self) -> &'static [&'static str] {
        const BLOCK: [&str; 7] = ["manifold", "dim", "degree", "h", "lower", "upper", "field"];
        const WAVE: [&str; 8] = ["dim", "lower", "upper", "margin", "damping", "damping_step", "hs", "time"];
        macro_rules! join {
            ($base:expr, $($extra:literal),*) => {{
                const N: usize = $base.len() + [$($extra),*].len();
                const OUT: [&str; N] = {
                    let mut out = [""; N];
                    let mut i = 0;
                    while i < $base.len() {
                        out[i] = $base[i];
                        i += 1;
                    }
                    let extra = [$($extra),*];
                    let mut j = 0;
                    while j < extra.len() {
                        out[i + j] = extra[j];
                        j += 1;
                    }
                    out
                };
                &OUT
            }};
        }
        match self {
            Self::Tails => join!(BLOCK, "statistic", "q", "thresholds"),
            Self::Medians => join!(BLOCK, "q", "linf_degrees"),
            Self::Defect => join!(BLOCK, "observable"),
            Self::SphereBasis => &["degrees", "points", "tolerance"],
            Self::TorusGrowth => &["dim", "shells", "r", "lambdas"],
            Self::Kakutani => &["k_max", "decay", "law", "perturbation", "tail_tol"],
            Self::WaveDecay => join!(WAVE, "epsilon", "alpha", "pilot_trials", "tau", "t_max", "safety"),
            Self::Leakage => join!(WAVE, "ratio", "iterations"),
            Self::RateBuilder => join!(WAVE, "j_max", "tau", "t_max"),
            Self::SpacetimeTails => &["k_max", "decay", "law", "field", "delta", "p"],
        }
    }

    fn default_trials(self) -> usize {
        match self {
            Self::SphereBasis | Self::TorusGrowth | Self::Kakutani => 1,
            Self::Leakage => 4,
            Self::WaveDecay => 200,
            Self::RateBuilder => 200,
            Self::SpacetimeTails => 400,
            _ => 1000,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

/// Text form of a configuration value.
pub trait ConfigValue: Sized {
    fn parse_value(s: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! number_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse_value(s: &str) -> Result<Self, String> {
                s.parse().map_err(|_| format!("`{s}` is not a valid {}", stringify!($t)))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

number_value!(f64, u32, u64, usize);

impl<T: ConfigValue> ConfigValue for Vec<T> {
    fn parse_value(s: &str) -> Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|p| T::parse_value(p.trim())).collect()
    }

    fn render(&self) -> String {
        self.iter().map(T::render).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldChoice {
    Sphere,
    Torus,
}

impl ConfigValue for ManifoldChoice {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "torus" => Ok(Self::Torus),
            _ => Err(format!("manifold must be sphere or torus, got `{s}`")),
        }
    }

    fn render(&self) -> String {
        match self {
            Self::Sphere => "sphere".into(),
            Self::Torus => "torus".into(),
        }
    }
}

impl ConfigValue for Field {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            _ => Err(format!("field must be real or complex, got `{s}`")),
        }
    }

    fn render(&self) -> String {
        match self {
            Field::Real => "real".into(),
            Field::Complex => "complex".into(),
        }
    }
}

impl ConfigValue for RadialLaw {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "half-gaussian" => Ok(RadialLaw::HalfGaussian),
            Some(("dirac", r)) => {
                let law = RadialLaw::Dirac(f64::parse_value(r)?);
                law.validate().map_err(|e| e.to_string())?;
                Ok(law)
            }
            _ => Err(format!("law must be half-gaussian or dirac:<radius>, got `{s}`")),
        }
    }

    fn render(&self) -> String {
        match self {
            RadialLaw::HalfGaussian => "half-gaussian".into(),
            RadialLaw::Dirac(r) => format!("dirac:{r}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticChoice {
    Pointwise,
    Linf,
    Lq,
    LqDeviation,
}

impl ConfigValue for StatisticChoice {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "pointwise" => Ok(Self::Pointwise),
            "linf" => Ok(Self::Linf),
            "lq" => Ok(Self::Lq),
            "lq-deviation" => Ok(Self::LqDeviation),
            _ => Err(format!("statistic must be pointwise, linf, lq or lq-deviation, got `{s}`")),
        }
    }

    fn render(&self) -> String {
        match self {
            Self::Pointwise => "pointwise",
            Self::Linf => "linf",
            Self::Lq => "lq",
            Self::LqDeviation => "lq-deviation",
        }
        .into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableChoice {
    /// Multiplication by `cos x_1` (torus) or by the zonal `Y_{1,0}` (sphere).
    CosX1,
    /// The multiplier `h |D|` on the block.
    RadialIdentity,
    Constant(f64),
}

impl ConfigValue for ObservableChoice {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "cos-x1" => Ok(Self::CosX1),
            None if s == "radial-identity" => Ok(Self::RadialIdentity),
            Some(("constant", v)) => Ok(Self::Constant(f64::parse_value(v)?)),
            _ => Err(format!("observable must be cos-x1, radial-identity or constant:<value>, got `{s}`")),
        }
    }

    fn render(&self) -> String {
        match self {
            Self::CosX1 => "cos-x1".into(),
            Self::RadialIdentity => "radial-identity".into(),
            Self::Constant(v) => format!("constant:{v}"),
        }
    }
}

/// How the second Kakutani measure is derived from the first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    Identical,
    /// `alpha_{k,2} = (1 + 1/(k+1)) alpha_{k,1}`.
    Harmonic,
    /// `alpha_{k,2} = 2 alpha_{k,1}` on even `k`.
    DoubleEven,
    /// `alpha_{k,2} = c alpha_{k,1}` on every block.
    Scale(f64),
}

impl ConfigValue for Perturbation {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "identical" => Ok(Self::Identical),
            None if s == "harmonic" => Ok(Self::Harmonic),
            None if s == "double-even" => Ok(Self::DoubleEven),
            Some(("scale", c)) => Ok(Self::Scale(f64::parse_value(c)?)),
            _ => Err(format!("perturbation must be identical, harmonic, double-even or scale:<c>, got `{s}`")),
        }
    }

    fn render(&self) -> String {
        match self {
            Self::Identical => "identical".into(),
            Self::Harmonic => "harmonic".into(),
            Self::DoubleEven => "double-even".into(),
            Self::Scale(c) => format!("scale:{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DampingChoice {
    Zero,
    Constant(f64),
    /// `a0 ((1 + cos x_1)/2)^p`.
    Strip(f64, u32),
    /// Poisson kernel `a0 sum r^{|k|} e^{i k x_1}`.
    Poisson(f64, f64),
}

impl ConfigValue for DampingChoice {
    fn parse_value(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["zero"] => Ok(Self::Zero),
            ["constant", a] => Ok(Self::Constant(f64::parse_value(a)?)),
            ["strip", a, p] => Ok(Self::Strip(f64::parse_value(a)?, u32::parse_value(p)?)),
            ["poisson", a, r] => Ok(Self::Poisson(f64::parse_value(a)?, f64::parse_value(r)?)),
            _ => Err(format!("damping must be zero, constant:<a0>, strip:<a0>:<p> or poisson:<a0>:<r>, got `{s}`")),
        }
    }

    fn render(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Constant(a) => format!("constant:{a}"),
            Self::Strip(a, p) => format!("strip:{a}:{p}"),
            Self::Poisson(a, r) => format!("poisson:{a}:{r}"),
        }
    }
}

impl ConfigValue for crate::wave::DampingStep {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "galerkin" => Ok(Self::Galerkin),
            "pointwise" => Ok(Self::Pointwise),
            _ => Err(format!("damping_step must be galerkin or pointwise, got `{s}`")),
        }
    }

    fn render(&self) -> String {
        match self {
            Self::Galerkin => "galerkin".into(),
            Self::Pointwise => "pointwise".into(),
        }
    }
}

macro_rules! params {
    ($($field:ident : $ty:ty = $default:expr),* $(,)?) => {
        /// Every tunable parameter; each kind reads the subset named by [`ExperimentKind::keys`].
        #[derive(Clone, Debug, PartialEq, Serialize)]
        pub struct Params {
            $(pub $field: $ty,)*
        }

        impl Default for Params {
            fn default() -> Self {
                Self { $($field: $default,)* }
            }
        }

        impl Params {
            fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
                match key {
                    $(stringify!($field) => self.$field = <$ty>::parse_value(value)?,)*
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            }

            fn get(&self, key: &str) -> String {
                match key {
                    $(stringify!($field) => self.$field.render(),)*
                    _ => unreachable!("key lists only name declared parameters"),
                }
            }
        }
    };
}

params! {
    manifold: ManifoldChoice = ManifoldChoice::Sphere,
    dim: u32 = 2,
    degree: u32 = 10,
    h: f64 = 0.05,
    lower: f64 = 1.0,
    upper: f64 = 1.5,
    field: Field = Field::Complex,
    statistic: StatisticChoice = StatisticChoice::Pointwise,
    q: f64 = 4.0,
    thresholds: Vec<f64> = vec![0.2, 0.4, 0.6, 0.8, 1.0, 1.2],
    linf_degrees: Vec<u32> = Vec::new(),
    observable: ObservableChoice = ObservableChoice::CosX1,
    degrees: Vec<u32> = vec![1, 5, 10, 20, 50],
    points: usize = 1000,
    tolerance: f64 = 1e-8,
    shells: Vec<u64> = vec![25, 50, 65, 85, 125],
    r: f64 = 6.0,
    lambdas: Vec<f64> = vec![50.0, 100.0, 200.0],
    k_max: usize = 100,
    decay: f64 = 0.5,
    law: RadialLaw = RadialLaw::HalfGaussian,
    perturbation: Perturbation = Perturbation::Identical,
    tail_tol: f64 = crate::ensembles::DEFAULT_TAIL_TOL,
    margin: f64 = 4.0,
    damping: DampingChoice = DampingChoice::Strip(2.0, 2),
    damping_step: crate::wave::DampingStep = crate::wave::DampingStep::Galerkin,
    hs: Vec<f64> = vec![0.125, 0.0625],
    time: f64 = 0.0,
    epsilon: f64 = 0.3,
    alpha: f64 = 0.2,
    pilot_trials: usize = 100,
    tau: f64 = 0.1,
    t_max: f64 = 8.0,
    safety: f64 = 1.25,
    ratio: f64 = 0.25,
    iterations: usize = 6,
    j_max: u32 = 4,
    delta: f64 = 1.5,
    p: f64 = 4.0,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    pub out: PathBuf,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        let mut params = Params::default();
        if matches!(kind, ExperimentKind::Leakage) {
            params.damping = DampingChoice::Poisson(1.0, 0.3);
            params.hs = vec![0.125, 0.0625, 0.03125];
            params.upper = 2.0;
            params.dim = 1;
            params.time = 1.0;
        }
        if matches!(kind, ExperimentKind::SpacetimeTails) {
            params.k_max = 4;
        }
        Self { kind, seed: 0, trials: kind.default_trials(), out: PathBuf::from("results"), params }
    }

    /// `key = value` pairs of this kind, in canonical order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("seed".to_string(), self.seed.to_string()),
            ("trials".to_string(), self.trials.to_string()),
            ("out".to_string(), self.out.display().to_string()),
        ];
        out.extend(self.kind.keys().iter().map(|k| (k.to_string(), self.params.get(k))));
        out
    }

    pub fn to_ini(&self) -> String {
        let mut s = format!("[{}]\n", self.kind);
        for (k, v) in self.entries() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = u64::parse_value(value)?,
            "trials" => {
                let t: i64 = value.parse().map_err(|_| format!("`{value}` is not a valid trial count"))?;
                if t <= 0 {
                    return Err("trials must be positive".into());
                }
                self.trials = t as usize;
            }
            "out" => self.out = PathBuf::from(value),
            _ if self.kind.keys().contains(&key) => self.params.set(key, value)?,
            _ => return Err(format!("unknown key `{key}` for kind {}", self.kind)),
        }
        Ok(())
    }
}

/// Parse configuration text. The single section header names the kind; a
/// `kind = ...` line before it may name it instead.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut config: Option<ExperimentConfig> = None;
    let mut pending: Vec<(usize, String, String)> = Vec::new();
    let mut declared: Option<(usize, ExperimentKind)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::at(line_no, "unterminated section header"))?.trim();
            let kind: ExperimentKind = name.parse().map_err(|e: String| ConfigError::at(line_no, e))?;
            if config.is_some() {
                return Err(ConfigError::at(line_no, "only one experiment section is allowed"));
            }
            if let Some((l, k)) = declared {
                if k != kind {
                    return Err(ConfigError::at(l, format!("kind = {k} contradicts section [{kind}]")));
                }
            }
            let mut c = ExperimentConfig::new(kind);
            for (l, k, v) in pending.drain(..) {
                c.set(&k, &v).map_err(|e| ConfigError::at(l, e))?;
            }
            config = Some(c);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::at(line_no, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::at(line_no, "empty key"));
        }
        match (&mut config, key) {
            (None, "kind") => declared = Some((line_no, value.parse().map_err(|e: String| ConfigError::at(line_no, e))?)),
            (None, _) => pending.push((line_no, key.to_string(), value.to_string())),
            (Some(c), "kind") if value == c.kind.name() => {}
            (Some(_), "kind") => return Err(ConfigError::at(line_no, "kind must match the section header")),
            (Some(c), _) => c.set(key, value).map_err(|e| ConfigError::at(line_no, e))?,
        }
    }
    match (config, declared) {
        (Some(c), _) => Ok(c),
        (None, Some((_, kind))) => {
            let mut c = ExperimentConfig::new(kind);
            for (l, k, v) in pending {
                c.set(&k, &v).map_err(|e| ConfigError::at(l, e))?;
            }
            Ok(c)
        }
        (None, None) => Err(ConfigError::new("missing mandatory `kind` (a [kind] section or a kind = ... line)")),
    }
}
