//! Catalog Finsler metrics, each given by a closed formula valid in one global chart.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::jets::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Euclidean,
    /// Conformal ball model F = 2|y|/(1 + K|x|²), K < 0.
    PoincareBall { curvature: f64 },
    /// Stereographic chart F = 2|y|/(1 + K|x|²), K > 0.
    StereographicSphere { curvature: f64 },
    /// F² = |y|² + ε Σ y_i⁴ / |y|².
    MinkowskiQuartic { epsilon: f64 },
    /// F = √(a_ij y^i y^j) + b_i y^i with constant a (row-major) and b.
    Randers { alpha: Vec<f64>, b: Vec<f64> },
    /// Funk metric of the Euclidean unit ball.
    Funk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartDomain {
    Whole,
    Ball { radius: f64 },
}

impl ChartDomain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ChartDomain::Whole => x.iter().all(|v| v.is_finite()),
            ChartDomain::Ball { radius } => x.iter().map(|v| v * v).sum::<f64>() < radius * radius,
        }
    }

    /// Radius used when sampling the chart (the whole plane is sampled in the unit ball).
    pub fn sample_radius(&self) -> f64 {
        match self {
            ChartDomain::Whole => 1.0,
            ChartDomain::Ball { radius } => *radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceConstants {
    pub flag_curvature: Option<f64>,
    pub reversibility: Option<f64>,
    /// S = c·F for the Busemann–Hausdorff measure.
    pub s_coefficient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub family: Family,
    pub n: usize,
    pub reversed: bool,
    pub chart: ChartDomain,
    pub injectivity_cap: f64,
}

const FLAT_CAP: f64 = 10.0;

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("dimension must be at least 2, got {n}")));
    }
    Ok(())
}

impl MetricSpec {
    pub fn euclidean(n: usize) -> Result<MetricSpec> {
        check_dim(n)?;
        Ok(MetricSpec {
            family: Family::Euclidean,
            n,
            reversed: false,
            chart: ChartDomain::Whole,
            injectivity_cap: FLAT_CAP,
        })
    }

    pub fn poincare_ball(n: usize, curvature: f64) -> Result<MetricSpec> {
        check_dim(n)?;
        if !(curvature < 0.0) {
            return Err(Error::Parameter("poincare_ball needs K < 0".into()));
        }
        let c = (-curvature).sqrt();
        Ok(MetricSpec {
            family: Family::PoincareBall { curvature },
            n,
            reversed: false,
            chart: ChartDomain::Ball { radius: 1.0 / c },
            injectivity_cap: 2.0 * 0.9f64.atanh() / c,
        })
    }

    pub fn stereographic_sphere(n: usize, curvature: f64) -> Result<MetricSpec> {
        check_dim(n)?;
        if !(curvature > 0.0) {
            return Err(Error::Parameter("stereographic_sphere needs K > 0".into()));
        }
        Ok(MetricSpec {
            family: Family::StereographicSphere { curvature },
            n,
            reversed: false,
            chart: ChartDomain::Whole,
            injectivity_cap: 2.0 / curvature.sqrt(),
        })
    }

    pub fn minkowski_quartic(n: usize, epsilon: f64) -> Result<MetricSpec> {
        check_dim(n)?;
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::Parameter(format!(
                "minkowski_quartic epsilon must lie in [0, 0.5), got {epsilon}"
            )));
        }
        Ok(MetricSpec {
            family: Family::MinkowskiQuartic { epsilon },
            n,
            reversed: false,
            chart: ChartDomain::Whole,
            injectivity_cap: FLAT_CAP,
        })
    }

    pub fn randers(n: usize, b: Vec<f64>) -> Result<MetricSpec> {
        let mut alpha = vec![0.0; n * n];
        for i in 0..n {
            alpha[i * n + i] = 1.0;
        }
        MetricSpec::randers_with_alpha(n, alpha, b)
    }

    pub fn randers_with_alpha(n: usize, alpha: Vec<f64>, b: Vec<f64>) -> Result<MetricSpec> {
        check_dim(n)?;
        if alpha.len() != n * n || b.len() != n {
            return Err(Error::Parameter("randers parameter sizes do not match n".into()));
        }
        let a = nalgebra::DMatrix::from_row_slice(n, n, &alpha);
        if (&a - a.transpose()).amax() > 1e-14 {
            return Err(Error::Parameter("randers alpha must be symmetric".into()));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Parameter("randers alpha must be positive definite".into()))?;
        let bv = nalgebra::DVector::from_column_slice(&b);
        let norm = bv.dot(&chol.solve(&bv)).sqrt();
        if norm >= 1.0 {
            return Err(Error::Parameter(format!(
                "randers one-form has alpha-norm {norm} >= 1"
            )));
        }
        Ok(MetricSpec {
            family: Family::Randers { alpha, b },
            n,
            reversed: false,
            chart: ChartDomain::Whole,
            injectivity_cap: FLAT_CAP,
        })
    }

    pub fn funk(n: usize) -> Result<MetricSpec> {
        check_dim(n)?;
        Ok(MetricSpec {
            family: Family::Funk,
            n,
            reversed: false,
            chart: ChartDomain::Ball { radius: 1.0 },
            injectivity_cap: 10f64.ln(),
        })
    }

    pub fn with_cap(mut self, cap: f64) -> MetricSpec {
        self.injectivity_cap = cap;
        self
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Euclidean => "euclidean",
            Family::PoincareBall { .. } => "poincare_ball",
            Family::StereographicSphere { .. } => "stereographic_sphere",
            Family::MinkowskiQuartic { .. } => "minkowski_quartic",
            Family::Randers { .. } => "randers",
            Family::Funk => "funk",
        }
    }

    pub fn is_riemannian(&self) -> bool {
        matches!(
            self.family,
            Family::Euclidean | Family::PoincareBall { .. } | Family::StereographicSphere { .. }
        ) || matches!(self.family, Family::MinkowskiQuartic { epsilon } if epsilon == 0.0)
    }

    /// F(x, y) does not depend on x.
    pub fn is_translation_invariant(&self) -> bool {
        matches!(
            self.family,
            Family::Euclidean | Family::MinkowskiQuartic { .. } | Family::Randers { .. }
        )
    }

    pub fn is_reversible(&self) -> bool {
        match &self.family {
            Family::Randers { b, .. } => b.iter().all(|v| *v == 0.0),
            Family::Funk => false,
            _ => true,
        }
    }

    /// Sectional curvature of the space-form entries.
    pub fn space_form_curvature(&self) -> Option<f64> {
        match self.family {
            Family::Euclidean => Some(0.0),
            Family::PoincareBall { curvature } | Family::StereographicSphere { curvature } => {
                Some(curvature)
            }
            _ => None,
        }
    }

    pub fn reference(&self) -> ReferenceConstants {
        let n = self.n as f64;
        match &self.family {
            Family::Euclidean | Family::MinkowskiQuartic { .. } => ReferenceConstants {
                flag_curvature: Some(0.0),
                reversibility: Some(1.0),
                s_coefficient: Some(0.0),
            },
            Family::PoincareBall { curvature } | Family::StereographicSphere { curvature } => {
                ReferenceConstants {
                    flag_curvature: Some(*curvature),
                    reversibility: Some(1.0),
                    s_coefficient: Some(0.0),
                }
            }
            Family::Randers { alpha, b } => {
                let a = nalgebra::DMatrix::from_row_slice(self.n, self.n, alpha);
                let bv = nalgebra::DVector::from_column_slice(b);
                let nb = bv.dot(&a.cholesky().expect("validated").solve(&bv)).sqrt();
                ReferenceConstants {
                    flag_curvature: Some(0.0),
                    reversibility: Some((1.0 + nb) / (1.0 - nb)),
                    s_coefficient: Some(0.0),
                }
            }
            Family::Funk => ReferenceConstants {
                flag_curvature: Some(-0.25),
                reversibility: Some((1.0 + 0.9) / (1.0 - 0.9)),
                s_coefficient: Some((n + 1.0) / 2.0),
            },
        }
    }

    /// Deterministic sample set: the chart center plus rings at 0.3, 0.6, 0.9 of the sample radius.
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        let rho = self.chart.sample_radius();
        let mut pts = vec![vec![0.0; self.n]];
        let dirs: Vec<Vec<f64>> = if self.n == 2 {
            (0..8)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / 8.0;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        } else {
            let mut d = Vec::new();
            for i in 0..self.n {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; self.n];
                    e[i] = s;
                    d.push(e);
                }
            }
            let diag = 1.0 / (self.n as f64).sqrt();
            d.push(vec![diag; self.n]);
            d.push(vec![-diag; self.n]);
            d
        };
        for frac in [0.3, 0.6, 0.9] {
            for d in &dirs {
                pts.push(d.iter().map(|v| v * frac * rho).collect());
            }
        }
        pts
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Domain(format!(
                "point has {} components, metric dimension is {}",
                x.len(),
                self.n
            )));
        }
        if !self.chart.contains(x) {
            return Err(Error::Domain(format!("point {x:?} lies outside the chart")));
        }
        Ok(())
    }

    /// F(x, y) for plain floats or jets.
    pub fn finsler<T: Scalar>(&self, x: &[T], y: &[T]) -> Result<T> {
        let xv: Vec<f64> = x.iter().map(|v| v.value()).collect();
        self.check_point(&xv)?;
        if y.len() != self.n || y.iter().all(|v| v.value() == 0.0) {
            return Err(Error::Domain("F needs a nonzero tangent vector".into()));
        }
        if self.reversed {
            let ny: Vec<T> = y.iter().map(|v| -v.clone()).collect();
            self.eval_forward(x, &ny)
        } else {
            self.eval_forward(x, y)
        }
    }

    pub fn f(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.finsler(x, y)
    }

    fn eval_forward<T: Scalar>(&self, x: &[T], y: &[T]) -> Result<T> {
        let sq = |v: &[T]| {
            v.iter()
                .skip(1)
                .fold(v[0].clone() * v[0].clone(), |acc, t| acc + t.clone() * t.clone())
        };
        let dot = |a: &[T], b: &[T]| {
            a.iter()
                .zip(b)
                .skip(1)
                .fold(a[0].clone() * b[0].clone(), |acc, (p, q)| acc + p.clone() * q.clone())
        };
        Ok(match &self.family {
            Family::Euclidean => sq(y).sqrt()?,
            Family::PoincareBall { curvature } | Family::StereographicSphere { curvature } => {
                let denom = sq(x) * *curvature + 1.0;
                if denom.value() <= 0.0 {
                    return Err(Error::Domain("point outside the conformal chart".into()));
                }
                sq(y).sqrt()? * 2.0 * denom.recip()?
            }
            Family::MinkowskiQuartic { epsilon } => {
                let s = sq(y);
                let q = y.iter().skip(1).fold(
                    {
                        let t = y[0].clone() * y[0].clone();
                        t.clone() * t
                    },
                    |acc, v| {
                        let t = v.clone() * v.clone();
                        acc + t.clone() * t
                    },
                );
                (s.clone() + q.checked_div(&s)? * *epsilon).sqrt()?
            }
            Family::Randers { alpha, b } => {
                let n = self.n;
                let mut quad = y[0].lift(0.0);
                let mut lin = y[0].lift(0.0);
                for i in 0..n {
                    lin = lin + y[i].clone() * b[i];
                    for j in 0..n {
                        let a = alpha[i * n + j];
                        if a != 0.0 {
                            quad = quad + y[i].clone() * y[j].clone() * a;
                        }
                    }
                }
                quad.sqrt()? + lin
            }
            Family::Funk => {
                let a = -sq(x) + 1.0;
                if a.value() <= 0.0 {
                    return Err(Error::Domain("point outside the Funk ball".into()));
                }
                let xy = dot(x, y);
                let root = (a.clone() * sq(y) + xy.clone() * xy.clone()).sqrt()?;
                (root + xy).checked_div(&a)?
            }
        })
    }
}

/// F̄(x, y) = F(x, −y).
pub fn reverse_metric(metric: &MetricSpec) -> MetricSpec {
    let mut m = metric.clone();
    m.reversed = !m.reversed;
    m
}
