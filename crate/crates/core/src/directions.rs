//! Quadrature grids on the Euclidean unit sphere and deterministic searches over it.
//!
//! n = 2 uses the angle θ; n = 3 uses (t, ψ) with u = (√(1−t²)cos ψ, √(1−t²)sin ψ, t),
//! whose parameter measure dt dψ is exactly the area measure of S².

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SphereNode {
    pub params: Vec<f64>,
    pub u: Vec<f64>,
    /// ∂u/∂(param a), one vector per parameter.
    pub du: Vec<Vec<f64>>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid {
    pub n: usize,
    pub shape: Vec<usize>,
    pub nodes: Vec<SphereNode>,
}

pub fn sphere_point(n: usize, params: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    match n {
        2 => {
            let (s, c) = params[0].sin_cos();
            (vec![c, s], vec![vec![-s, c]])
        }
        3 => {
            let t = params[0].clamp(-1.0, 1.0);
            let (sp, cp) = params[1].sin_cos();
            let s = (1.0 - t * t).max(0.0).sqrt();
            let u = vec![s * cp, s * sp, t];
            let dt = if s > 0.0 {
                vec![-t / s * cp, -t / s * sp, 1.0]
            } else {
                vec![0.0, 0.0, 1.0]
            };
            let dpsi = vec![-s * sp, s * cp, 0.0];
            (u, vec![dt, dpsi])
        }
        _ => panic!("sphere parametrization only for n = 2, 3"),
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

impl DirectionGrid {
    pub fn circle(m: usize) -> DirectionGrid {
        let nodes = (0..m)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / m as f64;
                let (u, du) = sphere_point(2, &[th]);
                SphereNode {
                    params: vec![th],
                    u,
                    du,
                    weight: 2.0 * PI / m as f64,
                }
            })
            .collect();
        DirectionGrid {
            n: 2,
            shape: vec![m],
            nodes,
        }
    }

    pub fn product(nt: usize, npsi: usize) -> DirectionGrid {
        let (ts, ws) = gauss_legendre(nt);
        let mut nodes = Vec::with_capacity(nt * npsi);
        for (t, wt) in ts.iter().zip(&ws) {
            for j in 0..npsi {
                let psi = 2.0 * PI * j as f64 / npsi as f64;
                let (u, du) = sphere_point(3, &[*t, psi]);
                nodes.push(SphereNode {
                    params: vec![*t, psi],
                    u,
                    du,
                    weight: wt * 2.0 * PI / npsi as f64,
                });
            }
        }
        DirectionGrid {
            n: 3,
            shape: vec![nt, npsi],
            nodes,
        }
    }

    pub fn with_shape(n: usize, shape: &[usize]) -> Result<DirectionGrid> {
        match (n, shape) {
            (2, [m]) if *m >= 4 => Ok(DirectionGrid::circle(*m)),
            (3, [nt, np]) if *nt >= 2 && *np >= 4 => Ok(DirectionGrid::product(*nt, *np)),
            _ => Err(Error::Parameter(format!(
                "direction grid shape {shape:?} invalid for n = {n}"
            ))),
        }
    }

    /// Default grid for polar sweeps: 64 angles, or 16×32 in dimension 3.
    pub fn polar_default(n: usize) -> Result<DirectionGrid> {
        match n {
            2 => Ok(DirectionGrid::circle(64)),
            3 => Ok(DirectionGrid::product(16, 32)),
            _ => Err(Error::BadDimension(n)),
        }
    }

    /// Default grid for sup/inf functionals: 64 angles, or 32×64 in dimension 3.
    pub fn search_default(n: usize) -> Result<DirectionGrid> {
        match n {
            2 => Ok(DirectionGrid::circle(64)),
            3 => Ok(DirectionGrid::product(32, 64)),
            _ => Err(Error::BadDimension(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    fn spacing(&self) -> Vec<f64> {
        match self.n {
            2 => vec![2.0 * PI / self.shape[0] as f64],
            _ => vec![2.0 / self.shape[0] as f64, 2.0 * PI / self.shape[1] as f64],
        }
    }
}

/// Grid scan followed by local refinement around the best node.
#[derive(Debug, Clone)]
pub struct SphereSearch {
    pub grid: DirectionGrid,
    /// Parameter-space width at which refinement stops.
    pub tol: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

impl SphereSearch {
    pub fn new(grid: DirectionGrid, tol: f64) -> SphereSearch {
        SphereSearch { grid, tol }
    }

    pub fn default_for(n: usize) -> Result<SphereSearch> {
        Ok(SphereSearch::new(DirectionGrid::search_default(n)?, 1e-9))
    }

    /// Maximizes f(u) over Euclidean unit vectors u; returns (value, maximizing u).
    pub fn maximize<F>(&self, f: F) -> Result<(f64, Vec<f64>)>
    where
        F: Fn(&[f64]) -> Result<f64>,
    {
        let n = self.grid.n;
        let g = |p: &[f64]| -> Result<f64> { f(&sphere_point(n, p).0) };
        let mut best = f64::NEG_INFINITY;
        let mut best_p = self.grid.nodes[0].params.clone();
        for node in &self.grid.nodes {
            let v = f(&node.u)?;
            if v > best {
                best = v;
                best_p = node.params.clone();
            }
        }
        let h = self.grid.spacing();
        let (v, p) = if n == 2 {
            golden_max(&g, best_p[0] - h[0], best_p[0] + h[0], self.tol, best, best_p[0])?
        } else {
            compass_max(&g, best_p, best, h, self.tol)?
        };
        Ok((v, sphere_point(n, &p).0))
    }

    pub fn minimize<F>(&self, f: F) -> Result<(f64, Vec<f64>)>
    where
        F: Fn(&[f64]) -> Result<f64>,
    {
        let (v, u) = self.maximize(|u| f(u).map(|x| -x))?;
        Ok((-v, u))
    }
}

fn golden_max<G>(g: &G, mut a: f64, mut b: f64, tol: f64, seed_v: f64, seed: f64) -> Result<(f64, Vec<f64>)>
where
    G: Fn(&[f64]) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = g(&[c])?;
    let mut fd = g(&[d])?;
    let (mut best_v, mut best_p) = (seed_v, seed);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(&[c])?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(&[d])?;
        }
        for (v, p) in [(fc, c), (fd, d)] {
            if v > best_v {
                best_v = v;
                best_p = p;
            }
        }
    }
    Ok((best_v, vec![best_p]))
}

fn compass_max<G>(g: &G, mut p: Vec<f64>, mut v: f64, mut h: Vec<f64>, tol: f64) -> Result<(f64, Vec<f64>)>
where
    G: Fn(&[f64]) -> Result<f64>,
{
    let mut iters = 0;
    while h.iter().any(|&s| s > tol) && iters < 10_000 {
        iters += 1;
        let mut moved = false;
        for k in 0..p.len() {
            for sign in [1.0, -1.0] {
                let mut q = p.clone();
                q[k] += sign * h[k];
                if k == 0 {
                    q[0] = q[0].clamp(-1.0, 1.0);
                }
                let w = g(&q)?;
                if w > v {
                    v = w;
                    p = q;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            for s in &mut h {
                *s *= 0.5;
            }
        }
    }
    Ok((v, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // exact up to degree 15
        let i14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i14 - 2.0 / 15.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn weights_sum_to_sphere_measure() {
        assert!((DirectionGrid::circle(64).total_weight() - 2.0 * PI).abs() < 1e-13);
        assert!((DirectionGrid::product(16, 32).total_weight() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn parametrization_area_element_is_one() {
        for p in [[0.3, 1.1], [-0.8, 4.0], [0.0, 0.0]] {
            let (u, du) = sphere_point(3, &p);
            let m = nalgebra::Matrix3::from_columns(&[
                nalgebra::Vector3::from_column_slice(&u),
                nalgebra::Vector3::from_column_slice(&du[0]),
                nalgebra::Vector3::from_column_slice(&du[1]),
            ]);
            assert!((m.determinant().abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn search_finds_smooth_maxima() {
        let s = SphereSearch::default_for(2).unwrap();
        let target = 0.123f64;
        let (v, u) = s.maximize(|u| Ok(u[0] * target.cos() + u[1] * target.sin())).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!((u[1].atan2(u[0]) - target).abs() < 1e-7);

        let s3 = SphereSearch::new(DirectionGrid::product(8, 16), 1e-9);
        let a: [f64; 3] = [0.2, -0.5, 0.7];
        let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let (v, _) = s3.maximize(|u| Ok(a[0] * u[0] + a[1] * u[1] + a[2] * u[2])).unwrap();
        assert!((v - na).abs() < 1e-12);
        let (m, _) = s3.minimize(|u| Ok(a[0] * u[0] + a[1] * u[1] + a[2] * u[2])).unwrap();
        assert!((m + na).abs() < 1e-12);
    }
}
