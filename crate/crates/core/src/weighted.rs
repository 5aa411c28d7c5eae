//! Distortion, S-curvature, Ṡ and the weighted Ricci curvatures.

use crate::curvature::{analyze, analyze_with, fundamental_tensor};
use crate::jets::Jet;
use crate::directions::{DirectionGrid, SphereSearch};
use crate::error::{Error, Result};
use crate::measure::MeasureSpec;
use crate::metric::MetricSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRicci {
    pub n: usize,
    pub ric: f64,
    pub s: f64,
    pub s_dot: f64,
    pub ric_inf: f64,
}

impl WeightedRicci {
    /// Ric_N = Ric_∞ − S²/(N − n).
    pub fn ric_n(&self, big_n: f64) -> Result<f64> {
        if big_n == self.n as f64 {
            return Err(Error::BadN);
        }
        Ok(self.ric_inf - self.s * self.s / (big_n - self.n as f64))
    }
}

/// τ = ln(√det g_y / σ_m).
pub fn distortion(metric: &MetricSpec, measure: &MeasureSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let ft = fundamental_tensor(metric, x, y)?;
    Ok(0.5 * ft.g.determinant().ln() - measure.log_density(metric, x)?)
}

pub fn s_curvature(metric: &MetricSpec, measure: &MeasureSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(analyze(metric, Some(measure), x, y)?.s.expect("measure given"))
}

pub fn s_dot(metric: &MetricSpec, measure: &MeasureSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(analyze(metric, Some(measure), x, y)?.s_dot.expect("measure given"))
}

pub fn weighted_ricci(
    metric: &MetricSpec,
    measure: &MeasureSpec,
    x: &[f64],
    y: &[f64],
) -> Result<WeightedRicci> {
    let pg = analyze(metric, Some(measure), x, y)?;
    let s = pg.s.expect("measure given");
    let s_dot = pg.s_dot.expect("measure given");
    Ok(WeightedRicci {
        n: metric.n,
        ric: pg.curvature.ricci,
        s,
        s_dot,
        ric_inf: pg.curvature.ricci + s_dot,
    })
}

/// Ric_∞(x, u)/F(x, u)², the value on the F-unit vector in direction u.
pub fn unit_ric_inf(metric: &MetricSpec, measure: &MeasureSpec, x: &[f64], u: &[f64]) -> Result<f64> {
    unit_ric_inf_with(metric, &measure.log_density_jet(metric, x, 2)?, x, u)
}

fn unit_ric_inf_with(metric: &MetricSpec, log_density: &Jet, x: &[f64], u: &[f64]) -> Result<f64> {
    let pg = analyze_with(metric, Some(log_density), x, u)?;
    Ok((pg.curvature.ricci + pg.s_dot.expect("measure given")) / (pg.f * pg.f))
}

/// Direction search used for Ric̲_∞; refinement stops at parameter width 1e-4,
/// which puts the minimum value within 1e-6 for the smooth catalog integrands.
pub fn ric_search_default(n: usize) -> Result<SphereSearch> {
    Ok(SphereSearch::new(DirectionGrid::search_default(n)?, 1e-4))
}

/// Coarser scan used when Ric̲_∞ is needed at every node of a polar grid: 32 angles, or 6×12 in
/// dimension 3, followed by the same local refinement.
pub fn ric_search_sweep(n: usize) -> Result<SphereSearch> {
    let grid = match n {
        2 => DirectionGrid::circle(32),
        3 => DirectionGrid::product(6, 12),
        _ => return Err(Error::BadDimension(n)),
    };
    Ok(SphereSearch::new(grid, 1e-4))
}

pub fn ric_inf_lower(metric: &MetricSpec, measure: &MeasureSpec, x: &[f64]) -> Result<f64> {
    ric_inf_lower_with(metric, measure, x, &ric_search_default(metric.n)?)
}

pub fn ric_inf_lower_with(
    metric: &MetricSpec,
    measure: &MeasureSpec,
    x: &[f64],
    search: &SphereSearch,
) -> Result<f64> {
    let ld = measure.log_density_jet(metric, x, 2)?;
    Ok(search.minimize(|u| unit_ric_inf_with(metric, &ld, x, u))?.0)
}

/// Ric^K_∞(x) = max{(n−1)K − Ric̲_∞(x), 0}.
pub fn excess_from_lower(n: usize, k: f64, lower: f64) -> f64 {
    ((n as f64 - 1.0) * k - lower).max(0.0)
}

pub fn ric_excess(metric: &MetricSpec, measure: &MeasureSpec, x: &[f64], k: f64) -> Result<f64> {
    Ok(excess_from_lower(metric.n, k, ric_inf_lower(metric, measure, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Vec<f64> {
        let f = metric.f(x, y).unwrap();
        y.iter().map(|v| v / f).collect()
    }

    #[test]
    fn flat_lebesgue_vanishes() {
        let e = MetricSpec::euclidean(2).unwrap();
        let w = weighted_ricci(&e, &MeasureSpec::Lebesgue, &[0.3, 0.2], &[0.5, 1.0]).unwrap();
        assert!(w.ric.abs() < 1e-13 && w.s.abs() < 1e-13 && w.s_dot.abs() < 1e-13);
        assert!(distortion(&e, &MeasureSpec::Lebesgue, &[0.3, 0.2], &[0.5, 1.0]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn gaussian_weight_closed_forms() {
        let e = MetricSpec::euclidean(2).unwrap();
        let g = MeasureSpec::gaussian(2);
        let (x, y) = ([0.4, -0.7], [1.1, 0.3]);
        let w = weighted_ricci(&e, &g, &x, &y).unwrap();
        assert!((w.s - (x[0] * y[0] + x[1] * y[1])).abs() < 1e-12);
        assert!((w.s_dot - (y[0] * y[0] + y[1] * y[1])).abs() < 1e-12);
        let tau = distortion(&e, &g, &x, &y).unwrap();
        assert!((tau - 0.5 * (x[0] * x[0] + x[1] * x[1])).abs() < 1e-14);
        let u = unit(&e, &x, &y);
        assert!((weighted_ricci(&e, &g, &x, &u).unwrap().ric_inf - 1.0).abs() < 1e-12);
        assert!((ric_inf_lower(&e, &g, &x).unwrap() - 1.0).abs() < 1e-9);
        assert!(ric_excess(&e, &g, &x, 1.0).unwrap() < 1e-9);
    }

    #[test]
    fn sphere_with_own_volume() {
        let s = MetricSpec::stereographic_sphere(2, 1.0).unwrap();
        let x = [0.3, -0.5];
        let u = unit(&s, &x, &[0.2, 1.0]);
        let w = weighted_ricci(&s, &MeasureSpec::BusemannHausdorff, &x, &u).unwrap();
        assert!(w.s.abs() < 1e-10 && w.s_dot.abs() < 1e-10);
        assert!((w.ric_inf - 1.0).abs() < 1e-10);
    }

    #[test]
    fn funk_weighted_pipeline() {
        let f = MetricSpec::funk(2).unwrap();
        let x = [0.25, -0.1];
        let u = unit(&f, &x, &[0.3, 0.8]);
        let w = weighted_ricci(&f, &MeasureSpec::BusemannHausdorff, &x, &u).unwrap();
        assert!((w.s - 1.5).abs() < 1e-3 * 1.5, "S = {}", w.s);
        assert!(w.s_dot.abs() < 1e-3, "S' = {}", w.s_dot);
    }

    #[test]
    fn ric_n_limit_and_bad_n() {
        let e = MetricSpec::euclidean(2).unwrap();
        let w = weighted_ricci(&e, &MeasureSpec::gaussian(2), &[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((w.ric_n(1e6).unwrap() - w.ric_inf + w.s * w.s / (1e6 - 2.0)).abs() < 1e-12);
        assert!(matches!(w.ric_n(2.0), Err(Error::BadN)));
    }

    #[test]
    fn hyperbolic_lebesgue_lower_is_negative() {
        let p = MetricSpec::poincare_ball(2, -1.0).unwrap();
        let v = ric_inf_lower(&p, &MeasureSpec::Lebesgue, &[0.2, 0.1]).unwrap();
        assert!(v < 0.0);
    }

    #[test]
    fn constant_excess() {
        let e = MetricSpec::euclidean(3).unwrap();
        let v = ric_excess(&e, &MeasureSpec::Lebesgue, &[0.0; 3], 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }
}
