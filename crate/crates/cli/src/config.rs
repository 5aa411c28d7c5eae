//! JSON run configuration: parsing with field-path diagnostics and validation against the
//! preconditions of the numerical operations.

use std::fmt;

use finsler_core::directions::DirectionGrid;
use finsler_core::report::CheckTolerance;
use finsler_core::{MeasureSpec, MetricSpec, MultiIndex};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// JSON path of the offending entry, e.g. `points[1].y`.
    pub path: String,
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl ConfigError {
    pub fn at(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: path.into(),
            message: message.into(),
            line: None,
            column: None,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if !self.path.is_empty() {
            write!(f, " at {}", self.path)?;
        }
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " (line {l}, column {c})")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricConfig {
    Euclidean {
        n: usize,
    },
    PoincareBall {
        n: usize,
        #[serde(default = "minus_one")]
        curvature: f64,
    },
    StereographicSphere {
        n: usize,
        #[serde(default = "one")]
        curvature: f64,
    },
    MinkowskiQuartic {
        n: usize,
        epsilon: f64,
    },
    Randers {
        n: usize,
        b: Vec<f64>,
        /// Rows of the Riemannian part; identity when absent.
        #[serde(default)]
        alpha: Option<Vec<Vec<f64>>>,
    },
    Funk {
        n: usize,
    },
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

fn two() -> f64 {
    2.0
}

fn inner_fraction() -> f64 {
    0.2
}

impl MetricConfig {
    pub fn build(&self) -> finsler_core::Result<MetricSpec> {
        match self {
            MetricConfig::Euclidean { n } => MetricSpec::euclidean(*n),
            MetricConfig::PoincareBall { n, curvature } => MetricSpec::poincare_ball(*n, *curvature),
            MetricConfig::StereographicSphere { n, curvature } => {
                MetricSpec::stereographic_sphere(*n, *curvature)
            }
            MetricConfig::MinkowskiQuartic { n, epsilon } => MetricSpec::minkowski_quartic(*n, *epsilon),
            MetricConfig::Randers { n, b, alpha: None } => MetricSpec::randers(*n, b.clone()),
            MetricConfig::Randers {
                n,
                b,
                alpha: Some(rows),
            } => {
                if rows.len() != *n || rows.iter().any(|r| r.len() != *n) {
                    return Err(finsler_core::Error::Parameter(format!("alpha must be {n}×{n}")));
                }
                MetricSpec::randers_with_alpha(*n, rows.concat(), b.clone())
            }
            MetricConfig::Funk { n } => MetricSpec::funk(*n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exponents: Vec<u8>,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    Lebesgue,
    #[default]
    BusemannHausdorff,
    /// e^{−|x|²/2} dx.
    Gaussian,
    /// e^{−P(x)} dx with P = Σ coefficient · x^exponents.
    PolyLogDensity {
        terms: Vec<Term>,
    },
}

impl MeasureConfig {
    pub fn build(&self, n: usize) -> MeasureSpec {
        match self {
            MeasureConfig::Lebesgue => MeasureSpec::Lebesgue,
            MeasureConfig::BusemannHausdorff => MeasureSpec::BusemannHausdorff,
            MeasureConfig::Gaussian => MeasureSpec::gaussian(n),
            MeasureConfig::PolyLogDensity { terms } => MeasureSpec::PolyLogDensity {
                terms: terms
                    .iter()
                    .map(|t| (MultiIndex::new(&t.exponents), t.coefficient))
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// [m] angles for n = 2, [m_t, m_ψ] for n = 3; the polar default when absent.
    #[serde(default)]
    pub directions: Option<Vec<usize>>,
    pub h: f64,
    pub r_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolConfig {
    pub abs: f64,
    pub rel: f64,
}

/// One checker of the suite. `k` defaults to the metric's space-form curvature (0 otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckConfig {
    Riccati {
        #[serde(default)]
        k: Option<f64>,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    LaplacianComparison {
        p: f64,
        #[serde(default)]
        k: Option<f64>,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    VolumeComparison {
        p: f64,
        #[serde(default)]
        k: Option<f64>,
        #[serde(default)]
        theta: f64,
        r: f64,
        #[serde(rename = "R")]
        big_r: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    BishopGromov {
        #[serde(default)]
        k: Option<f64>,
        #[serde(default)]
        theta: f64,
        #[serde(rename = "R")]
        big_r: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    Doubling {
        p: f64,
        #[serde(default)]
        k: Option<f64>,
        #[serde(default)]
        theta: f64,
        #[serde(default = "two")]
        xi: f64,
        r1: f64,
        r2: f64,
        #[serde(rename = "R")]
        big_r: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    RelativeVolume {
        p: f64,
        #[serde(default)]
        k: Option<f64>,
        #[serde(default)]
        theta: f64,
        r1: f64,
        r2: f64,
        #[serde(rename = "R1")]
        big_r1: f64,
        #[serde(rename = "R2")]
        big_r2: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    VolumeGrowth {
        p: f64,
        #[serde(rename = "R")]
        big_r: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    NormRelation {
        p: f64,
        #[serde(default)]
        k: Option<f64>,
        #[serde(default)]
        theta: f64,
        #[serde(default = "two")]
        xi: f64,
        r1: f64,
        r2: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    IsoBound {
        #[serde(default)]
        theta: f64,
        #[serde(default = "two")]
        xi: f64,
        #[serde(rename = "R")]
        big_r: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    Coarea {
        t: f64,
        eps: Vec<f64>,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    Lambda1 {
        #[serde(default)]
        theta: f64,
        #[serde(default = "two")]
        xi: f64,
        #[serde(rename = "R")]
        big_r: f64,
        #[serde(default)]
        tol: Option<TolConfig>,
    },
    GradientScaling {
        radii: Vec<f64>,
        #[serde(default = "inner_fraction")]
        inner_fraction: f64,
    },
}

impl CheckConfig {
    pub fn id(&self) -> &'static str {
        match self {
            CheckConfig::Riccati { .. } => "riccati",
            CheckConfig::LaplacianComparison { .. } => "laplacian_comparison",
            CheckConfig::VolumeComparison { .. } => "volume_comparison",
            CheckConfig::BishopGromov { .. } => "bishop_gromov",
            CheckConfig::Doubling { .. } => "doubling",
            CheckConfig::RelativeVolume { .. } => "relative_volume",
            CheckConfig::VolumeGrowth { .. } => "volume_growth",
            CheckConfig::NormRelation { .. } => "norm_relation",
            CheckConfig::IsoBound { .. } => "iso_bound",
            CheckConfig::Coarea { .. } => "coarea",
            CheckConfig::Lambda1 { .. } => "lambda1",
            CheckConfig::GradientScaling { .. } => "gradient_scaling",
        }
    }

    /// The checker reads Ric̲_∞ from the polar field.
    pub fn needs_curvature(&self) -> bool {
        !matches!(self, CheckConfig::Coarea { .. } | CheckConfig::GradientScaling { .. })
    }

    pub fn tol(&self) -> Option<TolConfig> {
        match self {
            CheckConfig::Riccati { tol, .. }
            | CheckConfig::LaplacianComparison { tol, .. }
            | CheckConfig::VolumeComparison { tol, .. }
            | CheckConfig::BishopGromov { tol, .. }
            | CheckConfig::Doubling { tol, .. }
            | CheckConfig::RelativeVolume { tol, .. }
            | CheckConfig::VolumeGrowth { tol, .. }
            | CheckConfig::NormRelation { tol, .. }
            | CheckConfig::IsoBound { tol, .. }
            | CheckConfig::Coarea { tol, .. }
            | CheckConfig::Lambda1 { tol, .. } => *tol,
            CheckConfig::GradientScaling { .. } => None,
        }
    }

    /// Radii that must be nodes of the radial grid.
    fn node_radii(&self) -> Vec<f64> {
        match self {
            CheckConfig::IsoBound { big_r, .. } | CheckConfig::Lambda1 { big_r, .. } => vec![*big_r],
            CheckConfig::GradientScaling {
                radii,
                inner_fraction,
            } => radii.iter().flat_map(|r| [*r, r * inner_fraction]).collect(),
            _ => Vec::new(),
        }
    }

    /// Radii that must not exceed r_max.
    fn radii(&self) -> Vec<f64> {
        match self {
            CheckConfig::VolumeComparison { r, big_r, .. } => vec![*r, *big_r],
            CheckConfig::BishopGromov { big_r, .. } | CheckConfig::VolumeGrowth { big_r, .. } => vec![*big_r],
            CheckConfig::Doubling { r1, r2, big_r, .. } => vec![*r1, *r2, *big_r],
            CheckConfig::RelativeVolume {
                r1, r2, big_r1, big_r2, ..
            } => vec![*r1, *r2, *big_r1, *big_r2],
            CheckConfig::NormRelation { r1, r2, .. } => vec![*r1, *r2],
            CheckConfig::Coarea { t, eps, .. } => {
                let e = eps.iter().cloned().fold(0.0, f64::max);
                vec![t + e]
            }
            _ => self.node_radii(),
        }
    }

    fn p(&self) -> Option<f64> {
        match self {
            CheckConfig::LaplacianComparison { p, .. }
            | CheckConfig::VolumeComparison { p, .. }
            | CheckConfig::Doubling { p, .. }
            | CheckConfig::RelativeVolume { p, .. }
            | CheckConfig::VolumeGrowth { p, .. }
            | CheckConfig::NormRelation { p, .. } => Some(*p),
            _ => None,
        }
    }

    fn xi(&self) -> Option<f64> {
        match self {
            CheckConfig::Doubling { xi, .. }
            | CheckConfig::NormRelation { xi, .. }
            | CheckConfig::IsoBound { xi, .. }
            | CheckConfig::Lambda1 { xi, .. } => Some(*xi),
            _ => None,
        }
    }

    fn theta(&self) -> Option<f64> {
        match self {
            CheckConfig::Riccati { theta, .. }
            | CheckConfig::LaplacianComparison { theta, .. }
            | CheckConfig::VolumeComparison { theta, .. }
            | CheckConfig::BishopGromov { theta, .. }
            | CheckConfig::Doubling { theta, .. }
            | CheckConfig::RelativeVolume { theta, .. }
            | CheckConfig::NormRelation { theta, .. }
            | CheckConfig::IsoBound { theta, .. }
            | CheckConfig::Lambda1 { theta, .. } => Some(*theta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            formats: all_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub metric: MetricConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    /// Chart center plus four off-center points when absent.
    #[serde(default)]
    pub base_points: Option<Vec<Vec<f64>>>,
    pub grids: GridConfig,
    /// (x, y) pairs for `compute`.
    #[serde(default)]
    pub points: Vec<PointConfig>,
    /// The default suite when absent.
    #[serde(default)]
    pub suite: Option<Vec<CheckConfig>>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A validated configuration with the core objects built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub metric: MetricSpec,
    pub measure: MeasureSpec,
    pub base_points: Vec<Vec<f64>>,
    pub grid: DirectionGrid,
    pub suite: Vec<CheckConfig>,
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            path: if path == "." { String::new() } else { path },
            message: inner.to_string(),
            line: Some(inner.line()),
            column: Some(inner.column()),
        }
    })
}

fn on_grid(r: f64, h: f64) -> bool {
    let q = r / h;
    (q - q.round()).abs() < 1e-9 && q.round() >= 1.0
}

/// Chart center plus ±ρ/4 along the first two axes, ρ the chart sample radius.
pub fn default_base_points(metric: &MetricSpec) -> Vec<Vec<f64>> {
    let rho = metric.chart.sample_radius();
    let mut pts = vec![vec![0.0; metric.n]];
    for axis in 0..2 {
        for s in [1.0, -1.0] {
            let mut x = vec![0.0; metric.n];
            x[axis] = s * 0.25 * rho;
            pts.push(x);
        }
    }
    pts
}

/// Default suite: every checker at parameters valid for any catalog entry with the given grid.
pub fn default_suite(metric: &MetricSpec, h: f64, r_max: f64) -> Vec<CheckConfig> {
    let k = metric.space_form_curvature().unwrap_or(0.0);
    let cap = if k > 0.0 { std::f64::consts::PI / (2.0 * k.sqrt()) } else { f64::INFINITY };
    let snap = |r: f64| ((r / h + 1e-9).floor() * h).max(h);
    let big_r = snap(r_max.min(cap));
    let unit = snap(big_r.min(1.0));
    let p = metric.n as f64;
    let eps: Vec<f64> = [4.0, 2.0, 1.0].iter().map(|m| m * h).collect();
    vec![
        CheckConfig::Riccati {
            k: Some(k),
            theta: 0.0,
            tol: None,
        },
        CheckConfig::LaplacianComparison {
            p,
            k: Some(k),
            theta: 0.0,
            tol: None,
        },
        CheckConfig::VolumeComparison {
            p,
            k: Some(k),
            theta: 0.0,
            r: snap(big_r / 2.0),
            big_r,
            tol: None,
        },
        CheckConfig::BishopGromov {
            k: Some(k),
            theta: 0.0,
            big_r,
            tol: None,
        },
        CheckConfig::Doubling {
            p,
            k: Some(k),
            theta: 0.0,
            xi: 2.0,
            r1: snap(big_r / 4.0),
            r2: snap(big_r / 2.0),
            big_r,
            tol: None,
        },
        CheckConfig::NormRelation {
            p,
            k: Some(k),
            theta: 0.0,
            xi: 2.0,
            r1: snap(big_r / 4.0),
            r2: snap(big_r / 2.0),
            tol: None,
        },
        CheckConfig::IsoBound {
            theta: 0.0,
            xi: 2.0,
            big_r: unit,
            tol: None,
        },
        CheckConfig::Coarea {
            t: snap(big_r / 2.0),
            eps,
            tol: None,
        },
        CheckConfig::Lambda1 {
            theta: 0.0,
            xi: 2.0,
            big_r: unit,
            tol: None,
        },
    ]
}

fn check_params(i: usize, c: &CheckConfig, n: usize, h: f64, r_max: f64) -> Result<(), ConfigError> {
    let at = |field: &str| format!("suite[{i}].{field}");
    if let Some(p) = c.p() {
        if !(p > n as f64 / 2.0) {
            return Err(ConfigError::at(at("p"), format!("p = {p} must exceed n/2 = {}", n as f64 / 2.0)));
        }
    }
    if let Some(xi) = c.xi() {
        if !(xi > 1.0) {
            return Err(ConfigError::at(at("xi"), format!("Ξ = {xi} must exceed 1")));
        }
    }
    if let Some(theta) = c.theta() {
        if !(theta >= 0.0) {
            return Err(ConfigError::at(at("theta"), format!("ϑ = {theta} must be non-negative")));
        }
    }
    for r in c.radii() {
        if !(r > 0.0) || r > r_max * (1.0 + 1e-12) {
            return Err(ConfigError::at(at("radii"), format!("radius {r} outside (0, r_max = {r_max}]")));
        }
    }
    for r in c.node_radii() {
        if !on_grid(r, h) {
            return Err(ConfigError::at(at("radii"), format!("radius {r} is not a multiple of h = {h}")));
        }
    }
    match c {
        CheckConfig::Coarea { t, eps, .. } => {
            if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0) || *e > *t) {
                return Err(ConfigError::at(at("eps"), "need at least two ε values in (0, t]"));
            }
        }
        CheckConfig::GradientScaling { radii, inner_fraction } => {
            if radii.is_empty() || !(*inner_fraction > 0.0 && *inner_fraction < 1.0) {
                return Err(ConfigError::at(at("inner_fraction"), "need radii and 0 < inner_fraction < 1"));
            }
        }
        CheckConfig::IsoBound { big_r, .. } | CheckConfig::Lambda1 { big_r, .. } if *big_r > 1.0 => {
            return Err(ConfigError::at(at("R"), format!("R = {big_r} must be at most 1")));
        }
        _ => {}
    }
    Ok(())
}

pub fn validate(config: RunConfig) -> Result<Resolved, ConfigError> {
    let metric = config
        .metric
        .build()
        .map_err(|e| ConfigError::at("metric", e.to_string()))?;
    let n = metric.n;
    if n > 3 {
        return Err(ConfigError::at("metric.n", "polar sweeps support n = 2 and n = 3"));
    }
    if let MeasureConfig::PolyLogDensity { terms } = &config.measure {
        for (i, t) in terms.iter().enumerate() {
            if t.exponents.len() != n {
                return Err(ConfigError::at(
                    format!("measure.terms[{i}].exponents"),
                    format!("expected {n} exponents"),
                ));
            }
        }
    }
    let measure = config.measure.build(n);
    let g = &config.grids;
    if !(g.h > 0.0) || !(g.r_max > 0.0) || !on_grid(g.r_max, g.h) || g.r_max / g.h < 2.0 {
        return Err(ConfigError::at("grids", "need h > 0 and r_max a multiple (≥ 2) of h"));
    }
    if g.r_max > metric.injectivity_cap {
        return Err(ConfigError::at(
            "grids.r_max",
            format!("r_max exceeds the injectivity cap {}", metric.injectivity_cap),
        ));
    }
    let grid = match &g.directions {
        Some(shape) => DirectionGrid::with_shape(n, shape),
        None => DirectionGrid::polar_default(n),
    }
    .map_err(|e| ConfigError::at("grids.directions", e.to_string()))?;
    let base_points = config.base_points.clone().unwrap_or_else(|| default_base_points(&metric));
    if base_points.is_empty() {
        return Err(ConfigError::at("base_points", "need at least one base point"));
    }
    for (i, x) in base_points.iter().enumerate() {
        metric
            .check_point(x)
            .map_err(|e| ConfigError::at(format!("base_points[{i}]"), e.to_string()))?;
    }
    for (i, p) in config.points.iter().enumerate() {
        metric
            .check_point(&p.x)
            .map_err(|e| ConfigError::at(format!("points[{i}].x"), e.to_string()))?;
        if p.y.len() != n {
            return Err(ConfigError::at(format!("points[{i}].y"), format!("expected {n} components")));
        }
        if p.y.iter().all(|v| *v == 0.0) {
            return Err(ConfigError::at(format!("points[{i}].y"), "tangent vector y must be nonzero"));
        }
    }
    let suite = config
        .suite
        .clone()
        .unwrap_or_else(|| default_suite(&metric, g.h, g.r_max));
    for (i, c) in suite.iter().enumerate() {
        check_params(i, c, n, g.h, g.r_max)?;
        if let Some(t) = c.tol() {
            if !(t.abs >= 0.0 && t.rel >= 0.0) {
                return Err(ConfigError::at(format!("suite[{i}].tol"), "tolerances must be non-negative"));
            }
        }
    }
    Ok(Resolved {
        config,
        metric,
        measure,
        base_points,
        grid,
        suite,
    })
}

impl TolConfig {
    pub fn to_tolerance(self) -> CheckTolerance {
        CheckTolerance::new(self.abs, self.rel)
    }
}
