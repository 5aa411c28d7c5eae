//! Smooth measures dm = σ_m(x) dx on the chart.

use std::f64::consts::PI;

use crate::directions::DirectionGrid;
use crate::error::{Error, Result};
use crate::jets::{Jet, JetSpace, MultiIndex, Scalar};
use crate::metric::MetricSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Lebesgue,
    BusemannHausdorff,
    /// σ_m = exp(−P(x)) with P = Σ c_α x^α.
    PolyLogDensity { terms: Vec<(MultiIndex, f64)> },
}

/// Euclidean volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// Euclidean measure of S^{n−1}.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

const BH_REL_TOL: f64 = 1e-12;

impl MeasureSpec {
    /// P(x) = |x|²/2.
    pub fn gaussian(n: usize) -> MeasureSpec {
        MeasureSpec::PolyLogDensity {
            terms: (0..n)
                .map(|i| {
                    let mut e = vec![0u8; n];
                    e[i] = 2;
                    (MultiIndex(e), 0.5)
                })
                .collect(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MeasureSpec::Lebesgue => "lebesgue",
            MeasureSpec::BusemannHausdorff => "busemann_hausdorff",
            MeasureSpec::PolyLogDensity { .. } => "poly_log_density",
        }
    }

    /// ln σ_m(x) for plain floats or jets.
    pub fn log_density<T: Scalar>(&self, metric: &MetricSpec, x: &[T]) -> Result<T> {
        let xv: Vec<f64> = x.iter().map(|v| v.value()).collect();
        metric.check_point(&xv)?;
        match self {
            MeasureSpec::Lebesgue => Ok(x[0].lift(0.0)),
            MeasureSpec::PolyLogDensity { terms } => {
                let mut p = x[0].lift(0.0);
                for (idx, c) in terms {
                    if idx.0.len() != x.len() {
                        return Err(Error::Parameter("polynomial exponent arity mismatch".into()));
                    }
                    let mut mono = x[0].lift(*c);
                    for (xi, &e) in x.iter().zip(&idx.0) {
                        for _ in 0..e {
                            mono = mono * xi.clone();
                        }
                    }
                    p = p + mono;
                }
                Ok(-p)
            }
            MeasureSpec::BusemannHausdorff => {
                let v = indicatrix_volume(metric, x)?;
                Ok(-v.ln()? + unit_ball_volume(metric.n).ln())
            }
        }
    }

    /// ln σ_m as a jet of the given order in the n position variables.
    pub fn log_density_jet(&self, metric: &MetricSpec, x: &[f64], order: usize) -> Result<Jet> {
        let space = JetSpace::get(metric.n, order)?;
        let xs: Vec<Jet> = x.iter().enumerate().map(|(i, &v)| Jet::variable(&space, i, v)).collect();
        self.log_density(metric, &xs)
    }

    pub fn density(&self, metric: &MetricSpec, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(metric, x)?.exp())
    }

    /// True when this measure is the Riemannian volume of a Riemannian metric.
    pub fn is_riemannian_volume(&self, metric: &MetricSpec) -> bool {
        matches!(self, MeasureSpec::BusemannHausdorff) && metric.is_riemannian()
            || matches!(self, MeasureSpec::Lebesgue)
                && matches!(metric.family, crate::metric::Family::Euclidean)
    }
}

/// Euclidean volume of {y : F(x, y) < 1} = (1/n) ∫_{S^{n−1}} F(x, u)^{−n} du, refined until stable.
/// Translation-invariant families are integrated in plain floats and lifted as constants.
pub fn indicatrix_volume<T: Scalar>(metric: &MetricSpec, x: &[T]) -> Result<T> {
    if metric.is_translation_invariant() {
        let xv: Vec<f64> = x.iter().map(|v| v.value()).collect();
        let v: f64 = indicatrix_quadrature(metric, &xv)?;
        return Ok(x[0].lift(v));
    }
    indicatrix_quadrature(metric, x)
}

fn indicatrix_quadrature<T: Scalar>(metric: &MetricSpec, x: &[T]) -> Result<T> {
    let n = metric.n;
    let term = |u: &[f64]| -> Result<T> {
        let y: Vec<T> = u.iter().map(|&v| x[0].lift(v)).collect();
        Ok(metric.finsler(x, &y)?.powi(-(n as i32))?)
    };
    let converged = |v: &T, p: &T| (v.value() - p.value()).abs() <= BH_REL_TOL * v.value().abs();
    match n {
        2 => {
            // nested trapezoid rule on the circle: each level adds the midpoints
            let mut m = 8usize;
            let mut sum = x[0].lift(0.0);
            for k in 0..m {
                let th = 2.0 * PI * k as f64 / m as f64;
                sum = sum + term(&[th.cos(), th.sin()])?;
            }
            let mut prev = sum.clone() * (PI / m as f64);
            for _ in 0..10 {
                for k in 0..m {
                    let th = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    sum = sum + term(&[th.cos(), th.sin()])?;
                }
                m *= 2;
                let v = sum.clone() * (PI / m as f64);
                if converged(&v, &prev) {
                    return Ok(v);
                }
                prev = v;
            }
        }
        3 => {
            let mut prev: Option<T> = None;
            for level in 0..6 {
                let grid = DirectionGrid::product(4 << level, 8 << level);
                let mut acc = x[0].lift(0.0);
                for node in &grid.nodes {
                    acc = acc + term(&node.u)? * node.weight;
                }
                let v = acc / 3.0;
                if let Some(p) = &prev {
                    if converged(&v, p) {
                        return Ok(v);
                    }
                }
                prev = Some(v);
            }
        }
        _ => return Err(Error::BadDimension(n)),
    }
    Err(Error::Quadrature(format!(
        "indicatrix volume at {:?} not stable after refinement",
        x.iter().map(|v| v.value()).collect::<Vec<_>>()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_examples() {
        let e = MetricSpec::euclidean(2).unwrap();
        assert_eq!(MeasureSpec::Lebesgue.density(&e, &[0.4, 0.1]).unwrap(), 1.0);
        let bh = MeasureSpec::BusemannHausdorff.density(&e, &[0.4, 0.1]).unwrap();
        assert!((bh - 1.0).abs() < 1e-14);
        let g = MeasureSpec::gaussian(2).density(&e, &[1.0, 0.0]).unwrap();
        assert!((g - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn busemann_hausdorff_closed_forms() {
        // Riemannian entries: σ_BH = √det g
        let p = MetricSpec::poincare_ball(2, -1.0).unwrap();
        let x = [0.3, -0.2];
        let lam = 2.0 / (1.0 - 0.13);
        let d = MeasureSpec::BusemannHausdorff.density(&p, &x).unwrap();
        assert!((d - lam * lam).abs() < 1e-12 * lam * lam);
        let s3 = MetricSpec::stereographic_sphere(3, 1.0).unwrap();
        let lam3: f64 = 2.0 / (1.0 + 0.13);
        let d3 = MeasureSpec::BusemannHausdorff.density(&s3, &[0.3, -0.2, 0.0]).unwrap();
        assert!((d3 - lam3.powi(3)).abs() < 1e-12);
        // Funk indicatrix is the unit ball translated, so σ_BH = 1
        let f = MetricSpec::funk(2).unwrap();
        for x in [[0.0, 0.0], [0.5, 0.3], [-0.8, 0.1]] {
            let d = MeasureSpec::BusemannHausdorff.density(&f, &x).unwrap();
            assert!((d - 1.0).abs() < 1e-10, "{x:?}: {d}");
        }
        // constant-b Randers: σ_BH = (1 − |b|²)^{(n+1)/2}
        let r = MetricSpec::randers(2, vec![0.3, 0.0]).unwrap();
        let d = MeasureSpec::BusemannHausdorff.density(&r, &[0.0, 0.0]).unwrap();
        assert!((d - (1.0f64 - 0.09).powf(1.5)).abs() < 1e-12);
    }
}
