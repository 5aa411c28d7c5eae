//! Fundamental tensor, Cartan tensor, spray and Riemann curvature from jets of F².

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jets::{Jet, JetSpace, Scalar};
use crate::linalg;
use crate::measure::MeasureSpec;
use crate::metric::MetricSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTensor {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SprayDerivatives {
    pub g: Vec<f64>,
    /// (i, k) = ∂G^i/∂x^k
    pub dx: DMatrix<f64>,
    /// (i, k) = ∂G^i/∂y^k
    pub dy: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub y: Vec<f64>,
    pub g: DMatrix<f64>,
    /// R^i_k, row i, column k.
    pub r: DMatrix<f64>,
    pub ricci: f64,
}

impl CurvatureData {
    pub fn flag(&self, w: &[f64]) -> Result<f64> {
        let y = DVector::from_column_slice(&self.y);
        let w = DVector::from_column_slice(w);
        let gyy = y.dot(&(&self.g * &y));
        let gww = w.dot(&(&self.g * &w));
        let gyw = y.dot(&(&self.g * &w));
        let denom = gyy * gww - gyw * gyw;
        if denom <= 1e-12 * gyy * gww {
            return Err(Error::DegenerateFlag);
        }
        let rw = &self.r * &w;
        Ok(w.dot(&(&self.g * rw)) / denom)
    }
}

/// Everything the weighted theory needs at one (x, y).
#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry {
    pub f: f64,
    pub spray: Vec<f64>,
    pub curvature: CurvatureData,
    pub tau: Option<f64>,
    pub s: Option<f64>,
    pub s_dot: Option<f64>,
}

fn check_y(y: &[f64]) -> Result<()> {
    if y.iter().all(|v| *v == 0.0) {
        return Err(Error::Domain("zero tangent vector".into()));
    }
    Ok(())
}

/// Jet of F² in the fiber variables only.
fn fiber_jet(metric: &MetricSpec, x: &[f64], y: &[f64], order: usize) -> Result<Jet> {
    check_y(y)?;
    let space = JetSpace::get(metric.n, order)?;
    let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(&space, v)).collect();
    let ys: Vec<Jet> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(&space, i, v))
        .collect();
    let f = metric.finsler(&xs, &ys)?;
    Ok(&f * &f)
}

/// Jet of F² in (x, y): variables 0..n are positions, n..2n fibers.
fn mixed_jet(metric: &MetricSpec, x: &[f64], y: &[f64], order: usize) -> Result<(Jet, Vec<Jet>)> {
    check_y(y)?;
    let n = metric.n;
    let space = JetSpace::get(2 * n, order)?;
    let xs: Vec<Jet> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(&space, i, v))
        .collect();
    let ys: Vec<Jet> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(&space, n + i, v))
        .collect();
    let f = metric.finsler(&xs, &ys)?;
    Ok((&f * &f, ys))
}

/// From the mixed jet of F² of order d: g_ij and G^i as jets of order d − 2.
/// G^i = ¼ g^{il}((F²)_{x^k y^l} y^k − (F²)_{x^l}).
fn spray_jets(e: &Jet, n: usize, ys: &[Jet]) -> Result<(Vec<Vec<Jet>>, Vec<Jet>)> {
    let d = e.order();
    let ey: Vec<Jet> = (0..n).map(|l| e.derivative(n + l)).collect();
    let g: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| ey[i].derivative(n + j) * 0.5).collect())
        .collect();
    let yt: Vec<Jet> = ys.iter().map(|v| v.truncate(d - 2)).collect();
    let rhs: Vec<Jet> = (0..n)
        .map(|l| {
            let mut acc = e.derivative(l).truncate(d - 2) * -1.0;
            for k in 0..n {
                acc = acc + &ey[l].derivative(k) * &yt[k];
            }
            acc * 0.25
        })
        .collect();
    let sol = linalg::solve(g.clone(), rhs)?;
    Ok((g, sol))
}

fn to_matrix(g: &[Vec<Jet>]) -> DMatrix<f64> {
    let n = g.len();
    DMatrix::from_fn(n, n, |i, j| g[i][j].value())
}

pub fn fundamental_tensor(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<FundamentalTensor> {
    let e = fiber_jet(metric, x, y, 2)?;
    let n = metric.n;
    let g = DMatrix::from_fn(n, n, |i, j| 0.5 * e.d(&[i, j]));
    let g_inv = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("fundamental tensor is not positive definite".into()))?
        .inverse();
    Ok(FundamentalTensor { g, g_inv })
}

pub fn cartan_tensor(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    let e = fiber_jet(metric, x, y, 3)?;
    let n = metric.n;
    let mut data = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                data.push(0.25 * e.d(&[i, j, k]));
            }
        }
    }
    Ok(Tensor3 { n, data })
}

pub fn spray_coefficients(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let (e, ys) = mixed_jet(metric, x, y, 2)?;
    let (_, g) = spray_jets(&e, metric.n, &ys)?;
    Ok(g.iter().map(|v| v.value()).collect())
}

pub fn spray_with_derivatives(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<SprayDerivatives> {
    Ok(spray_and_s(metric, None, x, y)?.0)
}

/// ln σ_m(x) in the position variables, embedded in the mixed (x, y) jet space of `like`.
fn mixed_log_density(log_density: &Jet, like: &Jet) -> Jet {
    let vars: Vec<usize> = (0..log_density.nvars()).collect();
    log_density.embed(like.space(), &vars)
}

/// Spray with first derivatives and, given ln σ_m as a position jet of order ≥ 1, S(x, y);
/// one order-3 jet evaluation.
pub fn spray_and_s(
    metric: &MetricSpec,
    log_density: Option<&Jet>,
    x: &[f64],
    y: &[f64],
) -> Result<(SprayDerivatives, Option<f64>)> {
    let n = metric.n;
    let (e, ys) = mixed_jet(metric, x, y, 3)?;
    let (g, spray) = spray_jets(&e, n, &ys)?;
    let c = |i: usize, v: usize| spray[i].coeffs()[1 + v];
    let sd = SprayDerivatives {
        g: spray.iter().map(|v| v.value()).collect(),
        dx: DMatrix::from_fn(n, n, |i, k| c(i, k)),
        dy: DMatrix::from_fn(n, n, |i, k| c(i, n + k)),
    };
    let s = match log_density {
        None => None,
        Some(ld) => {
            let t = linalg::det(&g)?.ln()? * 0.5 - mixed_log_density(ld, &g[0][0]);
            let mut s = 0.0;
            for i in 0..n {
                s += y[i] * t.d(&[i]) - 2.0 * sd.g[i] * t.d(&[n + i]);
            }
            Some(s)
        }
    };
    Ok((sd, s))
}

/// Berwald formula R^i_k = 2∂_{x^k}G^i − y^j ∂²G^i/∂x^j∂y^k + 2G^j ∂²G^i/∂y^j∂y^k − ∂G^i/∂y^j ∂G^j/∂y^k.
fn berwald(g_jets: &[Jet], y: &[f64]) -> DMatrix<f64> {
    let n = y.len();
    let gv: Vec<f64> = g_jets.iter().map(|v| v.value()).collect();
    let dy = DMatrix::from_fn(n, n, |i, j| g_jets[i].d(&[n + j]));
    DMatrix::from_fn(n, n, |i, k| {
        let mut r = 2.0 * g_jets[i].d(&[k]);
        for j in 0..n {
            r -= y[j] * g_jets[i].d(&[j, n + k]);
            r += 2.0 * gv[j] * g_jets[i].d(&[n + j, n + k]);
            r -= dy[(i, j)] * dy[(j, k)];
        }
        r
    })
}

pub fn riemann_endomorphism(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<CurvatureData> {
    Ok(analyze(metric, None, x, y)?.curvature)
}

/// One order-4 jet evaluation yielding spray, curvature and (given a measure) τ, S, Ṡ.
pub fn analyze(
    metric: &MetricSpec,
    measure: Option<&MeasureSpec>,
    x: &[f64],
    y: &[f64],
) -> Result<PointGeometry> {
    let ld = match measure {
        Some(m) => Some(m.log_density_jet(metric, x, 2)?),
        None => None,
    };
    analyze_with(metric, ld.as_ref(), x, y)
}

/// As `analyze`, with ln σ_m supplied as a position jet of order ≥ 2.
pub fn analyze_with(metric: &MetricSpec, log_density: Option<&Jet>, x: &[f64], y: &[f64]) -> Result<PointGeometry> {
    let n = metric.n;
    let (e, ys) = mixed_jet(metric, x, y, 4)?;
    let (g, spray) = spray_jets(&e, n, &ys)?;
    let r = berwald(&spray, y);
    let ricci = r.trace();
    let curvature = CurvatureData {
        y: y.to_vec(),
        g: to_matrix(&g),
        r,
        ricci,
    };
    let (mut tau, mut s, mut s_dot) = (None, None, None);
    if let Some(ld) = log_density {
        let t = linalg::det(&g)?.ln()? * 0.5 - mixed_log_density(ld, &g[0][0]);
        let y1: Vec<Jet> = ys.iter().map(|v| v.truncate(1)).collect();
        let sp1: Vec<Jet> = spray.iter().map(|v| v.truncate(1)).collect();
        let mut sj = t.derivative(0).lift(0.0);
        for i in 0..n {
            sj = sj + &y1[i] * &t.derivative(i) - &sp1[i] * &t.derivative(n + i) * 2.0;
        }
        let mut sd = 0.0;
        for i in 0..n {
            sd += y[i] * sj.d(&[i]) - 2.0 * spray[i].value() * sj.d(&[n + i]);
        }
        tau = Some(t.value());
        s = Some(sj.value());
        s_dot = Some(sd);
    }
    Ok(PointGeometry {
        f: e.value().sqrt(),
        spray: spray.iter().map(|v| v.value()).collect(),
        curvature,
        tau,
        s,
        s_dot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_tensor_examples() {
        let e = MetricSpec::euclidean(3).unwrap();
        let ft = fundamental_tensor(&e, &[0.1, 0.2, 0.3], &[1.0, -2.0, 0.5]).unwrap();
        assert!((ft.g.clone() - DMatrix::identity(3, 3)).amax() < 1e-14);
        let p = MetricSpec::poincare_ball(2, -1.0).unwrap();
        let ft = fundamental_tensor(&p, &[0.0, 0.0], &[0.3, 0.7]).unwrap();
        assert!((ft.g.clone() - DMatrix::identity(2, 2) * 4.0).amax() < 1e-13);
        let r = MetricSpec::randers(2, vec![0.5, 0.0]).unwrap();
        let ft = fundamental_tensor(&r, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((ft.g[(0, 0)] - 2.25).abs() < 1e-13);
        assert!((&ft.g * &ft.g_inv - DMatrix::identity(2, 2)).amax() < 1e-13);
    }

    #[test]
    fn spray_examples() {
        let e = MetricSpec::euclidean(2).unwrap();
        let g = spray_coefficients(&e, &[0.3, 0.1], &[1.0, 2.0]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));
        let p = MetricSpec::poincare_ball(2, -1.0).unwrap();
        let g = spray_coefficients(&p, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));
        let f = MetricSpec::funk(2).unwrap();
        let (x, y) = ([0.3, -0.4], [0.7, 0.2]);
        let g = spray_coefficients(&f, &x, &y).unwrap();
        let fv = f.f(&x, &y).unwrap();
        for i in 0..2 {
            assert!((g[i] - 0.5 * fv * y[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn curvature_examples() {
        let e = MetricSpec::euclidean(2).unwrap();
        let c = riemann_endomorphism(&e, &[0.3, 0.1], &[1.0, 2.0]).unwrap();
        assert!(c.r.amax() < 1e-13 && c.ricci.abs() < 1e-13);
        for n in [2, 3] {
            let s = MetricSpec::stereographic_sphere(n, 1.0).unwrap();
            let x = vec![0.2; n];
            let mut y = vec![0.0; n];
            y[0] = 1.0;
            let f = s.f(&x, &y).unwrap();
            let y: Vec<f64> = y.iter().map(|v| v / f).collect();
            let c = riemann_endomorphism(&s, &x, &y).unwrap();
            assert!((c.ricci - (n as f64 - 1.0)).abs() < 1e-10, "n={n}: {}", c.ricci);
        }
        let f = MetricSpec::funk(2).unwrap();
        let x = [0.2, 0.1];
        let c = riemann_endomorphism(&f, &x, &[0.6, -0.3]).unwrap();
        assert!((c.flag(&[0.1, 1.0]).unwrap() + 0.25).abs() < 1e-3);
        assert!(matches!(c.flag(&[1.2, -0.6]), Err(Error::DegenerateFlag)));
    }
}
