//! Dual norm, Legendre transform, reversibility and uniformity constants.

use nalgebra::{DMatrix, DVector};

use crate::curvature::fundamental_tensor;
use crate::directions::{DirectionGrid, SphereSearch};
use crate::error::{Error, Result};
use crate::jets::{Jet, JetSpace};
use crate::metric::MetricSpec;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// F*(x, ξ) = sup_{F(x,y)=1} ξ(y).
pub fn dual_norm(metric: &MetricSpec, x: &[f64], xi: &[f64]) -> Result<f64> {
    dual_norm_with(metric, x, xi, &SphereSearch::default_for(metric.n)?)
}

pub fn dual_norm_with(metric: &MetricSpec, x: &[f64], xi: &[f64], search: &SphereSearch) -> Result<f64> {
    if xi.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let (v, _) = search.maximize(|u| Ok(dot(xi, u) / metric.f(x, u)?))?;
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::Convergence {
            what: "dual norm ascent".into(),
            residual: v,
        });
    }
    Ok(v)
}

/// ξ_i = g_ij(x, y) y^j = ½ ∂F²/∂y^i.
pub fn legendre(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Ok(legendre_with_jacobian(metric, x, y)?.0)
}

fn legendre_with_jacobian(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = metric.n;
    if y.iter().all(|v| *v == 0.0) {
        return Ok((vec![0.0; n], DMatrix::zeros(n, n)));
    }
    let space = JetSpace::get(n, 2)?;
    let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(&space, v)).collect();
    let ys: Vec<Jet> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(&space, i, v))
        .collect();
    let f = metric.finsler(&xs, &ys)?;
    let e = &f * &f;
    let xi = (0..n).map(|i| 0.5 * e.d(&[i])).collect();
    let g = DMatrix::from_fn(n, n, |i, j| 0.5 * e.d(&[i, j]));
    Ok((xi, g))
}

/// The unique y with g_y(y, ·) = ξ, by damped Newton iteration.
pub fn legendre_inverse(metric: &MetricSpec, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let n = metric.n;
    if xi.iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; n]);
    }
    // start from the coarse-grid maximizer of ξ(u)/F(u), scaled to F = F*(ξ)
    let coarse = SphereSearch::new(
        match n {
            2 => DirectionGrid::circle(64),
            _ => DirectionGrid::product(8, 16),
        },
        1e-3,
    );
    let (dual, u) = coarse.maximize(|u| Ok(dot(xi, u) / metric.f(x, u)?))?;
    let fu = metric.f(x, &u)?;
    let mut y: Vec<f64> = u.iter().map(|v| v * dual / fu).collect();
    let scale = norm(xi).max(1.0);
    let residual = |y: &[f64]| -> Result<(Vec<f64>, f64, DMatrix<f64>)> {
        let (l, g) = legendre_with_jacobian(metric, x, y)?;
        let r: Vec<f64> = xi.iter().zip(&l).map(|(a, b)| a - b).collect();
        let rn = norm(&r);
        Ok((r, rn, g))
    };
    let (mut r, mut rn, mut g) = residual(&y)?;
    for _ in 0..100 {
        if rn <= 1e-12 * scale {
            return Ok(y);
        }
        let step = g
            .clone()
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .ok_or_else(|| Error::SingularMatrix("Legendre Jacobian".into()))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            if let Ok((r2, rn2, g2)) = residual(&cand) {
                if rn2 < rn {
                    y = cand;
                    r = r2;
                    rn = rn2;
                    g = g2;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rn <= 1e-12 * scale {
        return Ok(y);
    }
    Err(Error::Convergence {
        what: "Legendre inverse Newton".into(),
        residual: rn,
    })
}

/// Λ_F = sup F(x, −y)/F(x, y) over the sample points.
pub fn reversibility_constant(metric: &MetricSpec, samples: &[Vec<f64>]) -> Result<f64> {
    let search = SphereSearch::new(DirectionGrid::search_default(metric.n)?, 1e-9);
    let mut best: f64 = 1.0;
    for x in samples {
        let (v, _) = search.maximize(|u| {
            let nu: Vec<f64> = u.iter().map(|v| -v).collect();
            Ok(metric.f(x, &nu)? / metric.f(x, u)?)
        })?;
        best = best.max(v);
    }
    Ok(best)
}

fn quad_ratio(metric: &MetricSpec, x: &[f64], g: &DMatrix<f64>, w: &[f64]) -> Result<f64> {
    let wv = DVector::from_column_slice(w);
    let f = metric.f(x, w)?;
    Ok(wv.dot(&(g * &wv)) / (f * f))
}

/// (κ, κ*) = (sup, inf) of g_V(W, W)/F²(W) over sample points and directions V, W.
pub fn uniformity_constants(metric: &MetricSpec, samples: &[Vec<f64>]) -> Result<(f64, f64)> {
    let n = metric.n;
    let (outer, inner) = match n {
        2 => (
            SphereSearch::new(DirectionGrid::circle(64), 1e-7),
            SphereSearch::new(DirectionGrid::circle(64), 1e-9),
        ),
        _ => (
            SphereSearch::new(DirectionGrid::product(8, 16), 1e-5),
            SphereSearch::new(DirectionGrid::product(16, 32), 1e-8),
        ),
    };
    let mut kappa: f64 = 1.0;
    let mut kappa_star: f64 = 1.0;
    for x in samples {
        let sup_for = |v: &[f64]| -> Result<f64> {
            let g = fundamental_tensor(metric, x, v)?.g;
            Ok(inner.maximize(|w| quad_ratio(metric, x, &g, w))?.0)
        };
        let inf_for = |v: &[f64]| -> Result<f64> {
            let g = fundamental_tensor(metric, x, v)?.g;
            Ok(inner.minimize(|w| quad_ratio(metric, x, &g, w))?.0)
        };
        kappa = kappa.max(outer.maximize(sup_for)?.0);
        kappa_star = kappa_star.min(outer.minimize(inf_for)?.0);
    }
    Ok((kappa, kappa_star))
}

/// g*^{ij}(x, ξ): the inverse fundamental tensor at y = L⁻¹(ξ).
pub fn dual_fundamental_tensor(metric: &MetricSpec, x: &[f64], xi: &[f64]) -> Result<DMatrix<f64>> {
    let y = legendre_inverse(metric, x, xi)?;
    Ok(fundamental_tensor(metric, x, &y)?.g_inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_norm_examples() {
        let e = MetricSpec::euclidean(2).unwrap();
        assert!((dual_norm(&e, &[0.0, 0.0], &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(dual_norm(&e, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        // Randers F = |y| + b·y has F*(ξ) = (√((1−b²)|ξ|² + ⟨b,ξ⟩²) − ⟨b,ξ⟩)/(1−b²)
        let r = MetricSpec::randers(2, vec![0.5, 0.0]).unwrap();
        let closed = |xi: [f64; 2]| {
            let bx = 0.5 * xi[0];
            ((0.75 * (xi[0] * xi[0] + xi[1] * xi[1]) + bx * bx).sqrt() - bx) / 0.75
        };
        for xi in [[1.0, 0.0], [-1.0, 0.0], [0.3, -0.8]] {
            let d = dual_norm(&r, &[0.0, 0.0], &xi).unwrap();
            assert!((d - closed(xi)).abs() < 1e-10, "{xi:?}");
        }
        assert!((dual_norm(&r, &[0.0, 0.0], &[-1.0, 0.0]).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_examples() {
        let e = MetricSpec::euclidean(2).unwrap();
        assert_eq!(legendre(&e, &[0.0, 0.0], &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        let r = MetricSpec::randers(2, vec![0.5, 0.0]).unwrap();
        let xi = legendre(&r, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((xi[0] - 2.25).abs() < 1e-13 && xi[1].abs() < 1e-14);
        let y = legendre_inverse(&r, &[0.0, 0.0], &xi).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
        assert_eq!(legendre_inverse(&r, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn reversibility_examples() {
        let e = MetricSpec::euclidean(2).unwrap();
        let l = reversibility_constant(&e, &e.sample_points()).unwrap();
        assert!((l - 1.0).abs() < 1e-14);
        let r = MetricSpec::randers(2, vec![0.3, 0.0]).unwrap();
        let l = reversibility_constant(&r, &r.sample_points()).unwrap();
        assert!((l - 1.3 / 0.7).abs() < 1e-9, "{l}");
        let p = MetricSpec::poincare_ball(2, -1.0).unwrap();
        let l = reversibility_constant(&p, &p.sample_points()).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniformity_examples() {
        let p = MetricSpec::poincare_ball(2, -1.0).unwrap();
        let (k, ks) = uniformity_constants(&p, &[vec![0.1, 0.2]]).unwrap();
        assert!((k - 1.0).abs() < 1e-10 && (ks - 1.0).abs() < 1e-10);
        let r = MetricSpec::randers(2, vec![0.3, 0.0]).unwrap();
        let (k, ks) = uniformity_constants(&r, &[vec![0.0, 0.0]]).unwrap();
        assert!(k > 1.0 && ks < 1.0 && ks > 0.0);
        let l = reversibility_constant(&r, &[vec![0.0, 0.0]]).unwrap();
        assert!(l <= k.sqrt().min(1.0 / ks.sqrt()) + 1e-6);
    }
}
