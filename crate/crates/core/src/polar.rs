//! Geodesics, geodesic polar coordinates and the polar volume density.
//!
//! Each direction node θ carries the F-unit initial vector y(θ) = u/F(u). The geodesic is
//! integrated together with its variation J_a = ∂γ/∂θ^a (J_a' = W_a,
//! W_a' = −2(∂G/∂x·J_a + ∂G/∂y·W_a)), so that σ = σ_m(γ)·|det[γ', J]| and
//! Δr = ∂_r ln σ = ⟨∇ ln σ_m, γ'⟩ + tr(A⁻¹A') with A = [γ', J], A' = [−2G, W].

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::curvature::{fundamental_tensor, spray_and_s};
use crate::directions::{DirectionGrid, SphereNode, SphereSearch};
use crate::error::{Error, Result};
use crate::functionals::{dual_norm_with, legendre};
use crate::measure::MeasureSpec;
use crate::metric::MetricSpec;
use crate::ode::{self, Control, Tolerance};
use crate::quad;
use crate::weighted::{ric_inf_lower_with, ric_search_sweep};

/// Ratio of the Jacobian density to its running maximum below which a conjugate point is declared.
const CONJUGATE_RATIO: f64 = 1e-3;

fn as_chart_exit(e: Error, t: f64) -> Error {
    match e {
        Error::Domain(_) => Error::ChartExit { t },
        other => other,
    }
}

/// Geodesic samples at the requested times.
#[derive(Debug, Clone)]
pub struct GeodesicSamples {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// max |F(γ, γ') − F(x, y)| / F(x, y) over the samples.
    pub speed_drift: f64,
}

/// Solves γ'' = −2G(γ, γ') with γ(0) = x, γ'(0) = y, sampled at `times` (ascending, ≥ 0).
pub fn integrate_geodesic(
    metric: &MetricSpec,
    x: &[f64],
    y: &[f64],
    times: &[f64],
    tol: Tolerance,
) -> Result<GeodesicSamples> {
    let n = metric.n;
    metric.check_point(x)?;
    let f0 = metric.f(x, y)?;
    let t_max = times.last().copied().unwrap_or(0.0);
    if t_max * f0 > metric.injectivity_cap * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "geodesic length {} exceeds the injectivity cap {}",
            t_max * f0,
            metric.injectivity_cap
        )));
    }
    let mut y0 = x.to_vec();
    y0.extend_from_slice(y);
    let rhs = |t: f64, s: &[f64], ds: &mut [f64]| -> Result<()> {
        let g = crate::curvature::spray_coefficients(metric, &s[..n], &s[n..]).map_err(|e| as_chart_exit(e, t))?;
        for i in 0..n {
            ds[i] = s[n + i];
            ds[n + i] = -2.0 * g[i];
        }
        Ok(())
    };
    let states = ode::integrate_at(rhs, 0.0, &y0, times, tol)?;
    let mut drift: f64 = 0.0;
    let mut positions = Vec::with_capacity(states.len());
    let mut velocities = Vec::with_capacity(states.len());
    for s in states {
        let f = metric.f(&s[..n], &s[n..])?;
        drift = drift.max((f - f0).abs() / f0);
        positions.push(s[..n].to_vec());
        velocities.push(s[n..].to_vec());
    }
    Ok(GeodesicSamples {
        times: times.to_vec(),
        positions,
        velocities,
        speed_drift: drift,
    })
}

#[derive(Debug, Clone)]
pub struct PolarOptions {
    /// Radial step.
    pub h: f64,
    pub r_max: f64,
    pub tol: Tolerance,
    /// Store Ric̲_∞ at every node, minimized with this search.
    pub ric_search: Option<SphereSearch>,
}

impl PolarOptions {
    pub fn new(h: f64, r_max: f64) -> PolarOptions {
        PolarOptions {
            h,
            r_max,
            tol: Tolerance::default(),
            ric_search: None,
        }
    }

    pub fn with_curvature(mut self, n: usize) -> Result<PolarOptions> {
        self.ric_search = Some(ric_search_sweep(n)?);
        Ok(self)
    }

    pub fn with_ric_search(mut self, search: SphereSearch) -> PolarOptions {
        self.ric_search = Some(search);
        self
    }

    pub fn steps(&self) -> usize {
        (self.r_max / self.h).round() as usize
    }
}

/// Radial samples along one direction, at r = h, 2h, …, r_max.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub sigma: Vec<f64>,
    pub delta_r: Vec<f64>,
    pub s_along: Vec<f64>,
    /// F*(−dr) with dr = L(γ').
    pub dual_minus: Vec<f64>,
    pub position: Vec<Vec<f64>>,
    pub velocity: Vec<Vec<f64>>,
    /// dr as the first row of A⁻¹, independent of the Legendre transform.
    pub dr: Vec<Vec<f64>>,
    pub ric_lower: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct PolarField {
    pub base: Vec<f64>,
    pub n: usize,
    pub grid: DirectionGrid,
    pub h: f64,
    pub radii: Vec<f64>,
    pub rays: Vec<Ray>,
    pub measure_kind: &'static str,
}

/// Search used for F* at polar nodes.
pub fn polar_dual_search(n: usize) -> Result<SphereSearch> {
    match n {
        2 => Ok(SphereSearch::new(DirectionGrid::circle(32), 1e-10)),
        3 => Ok(SphereSearch::new(DirectionGrid::product(8, 16), 1e-10)),
        _ => Err(Error::BadDimension(n)),
    }
}

/// Integrates one direction node.
pub fn trace_ray(
    metric: &MetricSpec,
    measure: &MeasureSpec,
    base: &[f64],
    node: &SphereNode,
    opts: &PolarOptions,
) -> Result<Ray> {
    let n = metric.n;
    let m = n - 1;
    let f0 = metric.f(base, &node.u)?;
    let xi0 = legendre(metric, base, &node.u)?;
    let y: Vec<f64> = node.u.iter().map(|v| v / f0).collect();
    let mut state = base.to_vec();
    state.extend_from_slice(&y);
    state.extend(std::iter::repeat(0.0).take(m * n));
    for a in 0..m {
        // ∂_a (u/F(u)) with F_y(u) = L(u)/F(u)
        let fy_du: f64 = xi0.iter().zip(&node.du[a]).map(|(p, q)| p * q).sum::<f64>() / f0;
        for i in 0..n {
            state.push(node.du[a][i] / f0 - node.u[i] * fy_du / (f0 * f0));
        }
    }
    let rhs = |t: f64, s: &[f64], ds: &mut [f64]| -> Result<()> {
        let (x, v) = (&s[..n], &s[n..2 * n]);
        let (sd, _) = spray_and_s(metric, None, x, v).map_err(|e| as_chart_exit(e, t))?;
        for i in 0..n {
            ds[i] = v[i];
            ds[n + i] = -2.0 * sd.g[i];
        }
        for a in 0..m {
            let j = &s[2 * n + a * n..2 * n + (a + 1) * n];
            let w = &s[2 * n + m * n + a * n..2 * n + m * n + (a + 1) * n];
            for i in 0..n {
                ds[2 * n + a * n + i] = w[i];
                let mut acc = 0.0;
                for k in 0..n {
                    acc += sd.dx[(i, k)] * j[k] + sd.dy[(i, k)] * w[k];
                }
                ds[2 * n + m * n + a * n + i] = -2.0 * acc;
            }
        }
        Ok(())
    };
    let steps = opts.steps();
    let radii: Vec<f64> = (1..=steps).map(|k| k as f64 * opts.h).collect();
    let jac = |s: &[f64]| -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, c| if c == 0 { s[n + i] } else { s[2 * n + (c - 1) * n + i] })
    };
    let density = |s: &[f64]| -> Result<f64> {
        let g = fundamental_tensor(metric, &s[..n], &s[n..2 * n])?.g;
        Ok(g.determinant().sqrt() * jac(s).determinant().abs())
    };
    let mut running_max: f64 = 0.0;
    let mut out = Vec::with_capacity(steps);
    let mut next = 0;
    ode::integrate(rhs, 0.0, &state, opts.r_max, opts.tol, |step| {
        let q = density(step.y1)?;
        if q < CONJUGATE_RATIO * running_max {
            // bisect the crossing on the dense output
            let (mut lo, mut hi) = (step.t0, step.t1());
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if density(&step.dense(mid))? < CONJUGATE_RATIO * running_max {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Err(Error::DegenerateJacobian { radius: 0.5 * (lo + hi) });
        }
        running_max = running_max.max(q);
        while next < radii.len() && radii[next] <= step.t1() + 1e-12 * opts.h {
            let s = if (radii[next] - step.t1()).abs() <= 1e-12 * opts.h {
                step.y1.to_vec()
            } else {
                step.dense(radii[next])
            };
            out.push(s);
            next += 1;
        }
        Ok(Control::Continue)
    })?;
    let dual_search = polar_dual_search(n)?;
    let mut ray = Ray {
        sigma: Vec::with_capacity(steps),
        delta_r: Vec::with_capacity(steps),
        s_along: Vec::with_capacity(steps),
        dual_minus: Vec::with_capacity(steps),
        position: Vec::with_capacity(steps),
        velocity: Vec::with_capacity(steps),
        dr: Vec::with_capacity(steps),
        ric_lower: None,
    };
    for (k, s) in out.iter().enumerate() {
        let (x, v) = (&s[..n], &s[n..2 * n]);
        let ld = measure.log_density_jet(metric, x, 1).map_err(|e| as_chart_exit(e, radii[k]))?;
        let (sd, sval) = spray_and_s(metric, Some(&ld), x, v).map_err(|e| as_chart_exit(e, radii[k]))?;
        let a = jac(s);
        let ap = DMatrix::from_fn(n, n, |i, c| {
            if c == 0 {
                -2.0 * sd.g[i]
            } else {
                s[2 * n + m * n + (c - 1) * n + i]
            }
        });
        let ainv = a
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateJacobian { radius: radii[k] })?;
        let dlog: f64 = (0..n).map(|i| ld.d(&[i]) * v[i]).sum();
        let dens = ld.value().exp();
        ray.sigma.push(dens * a.determinant().abs());
        ray.delta_r.push(dlog + (&ainv * &ap).trace());
        ray.s_along.push(sval.expect("measure given"));
        let dr = legendre(metric, x, v)?;
        let dm = if metric.is_reversible() {
            1.0
        } else {
            let neg: Vec<f64> = dr.iter().map(|c| -c).collect();
            dual_norm_with(metric, x, &neg, &dual_search)?
        };
        ray.dual_minus.push(dm);
        ray.dr.push((0..n).map(|c| ainv[(0, c)]).collect());
        ray.position.push(x.to_vec());
        ray.velocity.push(v.to_vec());
    }
    Ok(ray)
}

/// Polar field from `base` over the direction grid. Rays are computed in parallel and stored in
/// node order, so the result does not depend on the number of worker threads.
pub fn polar_field(
    metric: &MetricSpec,
    measure: &MeasureSpec,
    base: &[f64],
    grid: &DirectionGrid,
    opts: &PolarOptions,
) -> Result<PolarField> {
    metric.check_point(base)?;
    if grid.n != metric.n {
        return Err(Error::Parameter("direction grid dimension differs from the metric".into()));
    }
    if opts.h <= 0.0 || opts.r_max <= 0.0 {
        return Err(Error::Parameter("radial step and r_max must be positive".into()));
    }
    if opts.r_max > metric.injectivity_cap * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "r_max {} exceeds the injectivity cap {}",
            opts.r_max, metric.injectivity_cap
        )));
    }
    let steps = opts.steps();
    if steps < 2 || ((steps as f64) * opts.h - opts.r_max).abs() > 1e-9 * opts.r_max {
        return Err(Error::Parameter("r_max must be a multiple (≥ 2) of the radial step".into()));
    }
    let mut rays: Vec<Ray> = grid
        .nodes
        .par_iter()
        .map(|node| trace_ray(metric, measure, base, node, opts))
        .collect::<Result<_>>()?;
    if let Some(search) = &opts.ric_search {
        let tasks: Vec<(usize, usize)> = (0..rays.len())
            .flat_map(|i| (0..steps).map(move |k| (i, k)))
            .collect();
        let values: Vec<f64> = tasks
            .par_iter()
            .map(|&(i, k)| ric_inf_lower_with(metric, measure, &rays[i].position[k], search))
            .collect::<Result<_>>()?;
        for (i, ray) in rays.iter_mut().enumerate() {
            ray.ric_lower = Some(values[i * steps..(i + 1) * steps].to_vec());
        }
    }
    Ok(PolarField {
        base: base.to_vec(),
        n: metric.n,
        grid: grid.clone(),
        h: opts.h,
        radii: (1..=steps).map(|k| k as f64 * opts.h).collect(),
        rays,
        measure_kind: measure.kind_name(),
    })
}

/// Samples [0, v_1, …, v_N] on the grid r = kh, with the value at r = 0 prepended.
pub fn with_origin(values: &[f64], at_zero: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(values.len() + 1);
    v.push(at_zero);
    v.extend_from_slice(values);
    v
}

/// ∫_0^R of samples on r = kh (k = 0..) with quadratic interpolation in the last partial cell.
pub fn integrate_to(values: &[f64], h: f64, r: f64) -> f64 {
    let cum = quad::cumulative(values, h);
    let last = values.len() - 1;
    let pos = (r / h).max(0.0);
    let k = (pos.floor() as usize).min(last);
    let frac = pos - k as f64;
    if frac <= 1e-12 || k == last {
        return cum[k];
    }
    // quadratic through nodes k0, k0+1, k0+2 containing [k, k+1]
    let k0 = k.min(last.saturating_sub(2));
    let (f0, f1, f2) = (values[k0], values[k0 + 1], values[k0 + 2]);
    let s0 = (k - k0) as f64;
    let prim = |s: f64| {
        // ∫ of the Lagrange quadratic in the local variable s (nodes 0, 1, 2)
        let l0 = s * s * s / 6.0 - 3.0 * s * s / 4.0 + s;
        let l1 = -s * s * s / 3.0 + s * s;
        let l2 = s * s * s / 6.0 - s * s / 4.0;
        f0 * l0 + f1 * l1 + f2 * l2
    };
    cum[k] + h * (prim(s0 + frac) - prim(s0))
}

/// Four-point Lagrange interpolation of samples on r = kh (k = 0..).
pub fn interpolate(values: &[f64], h: f64, r: f64) -> f64 {
    let last = values.len() - 1;
    let pos = r / h;
    let k = pos.round();
    if (pos - k).abs() < 1e-9 && (k as usize) <= last {
        return values[k as usize];
    }
    let base = (pos.floor() as isize - 1).clamp(0, last as isize - 3) as usize;
    let mut acc = 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if i != j {
                l *= (pos - (base + j) as f64) / (i as f64 - j as f64);
            }
        }
        acc += l * values[base + i];
    }
    acc
}

impl PolarField {
    pub fn r_max(&self) -> f64 {
        *self.radii.last().expect("non-empty radial grid")
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if r < 0.0 || r > self.r_max() * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "radius {r} outside [0, {}]",
                self.r_max()
            )));
        }
        Ok(())
    }

    /// Σ_θ w_θ f(ray, k) at every radial node, prefixed by the value 0 at r = 0.
    pub fn angular_sum<F: Fn(&Ray, usize) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = vec![0.0; self.radii.len() + 1];
        for (node, ray) in self.grid.nodes.iter().zip(&self.rays) {
            for (k, o) in out.iter_mut().skip(1).enumerate() {
                *o += node.weight * f(ray, k);
            }
        }
        out
    }

    /// Σ_θ w_θ σ(r, θ) on the radial grid including r = 0.
    pub fn area_profile(&self) -> Vec<f64> {
        self.angular_sum(|ray, k| ray.sigma[k])
    }

    /// m(B_R⁺).
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(integrate_to(&self.area_profile(), self.h, r))
    }

    /// m(B_r⁺) at every radial node including r = 0.
    pub fn volume_profile(&self) -> Vec<f64> {
        quad::cumulative(&self.area_profile(), self.h)
    }

    /// (ν₊, ν₋) of the geodesic sphere of radius r.
    pub fn sphere_measures(&self, r: f64) -> Result<(f64, f64)> {
        self.check_radius(r)?;
        let plus = self.area_profile();
        let minus = self.angular_sum(|ray, k| ray.dual_minus[k] * ray.sigma[k]);
        Ok((interpolate(&plus, self.h, r), interpolate(&minus, self.h, r)))
    }

    /// Σ w_θ ∫_0^R g(ray, k) σ dr with g evaluated at the nodes (g·σ vanishes at r = 0).
    pub fn weighted_integral<F: Fn(&Ray, usize) -> f64>(&self, r: f64, g: F) -> Result<f64> {
        self.check_radius(r)?;
        let prof = self.angular_sum(|ray, k| g(ray, k) * ray.sigma[k]);
        Ok(integrate_to(&prof, self.h, r))
    }

    /// CSV with columns theta_index, r, sigma, delta_r, s_along.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta_index,r,sigma,delta_r,s_along")?;
        for (i, ray) in self.rays.iter().enumerate() {
            for (k, r) in self.radii.iter().enumerate() {
                writeln!(
                    w,
                    "{i},{r:.16e},{:.16e},{:.16e},{:.16e}",
                    ray.sigma[k], ray.delta_r[k], ray.s_along[k]
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub theta: f64,
    pub ok: bool,
    /// min over the grid of S(∇r) + ϑ.
    pub worst_margin: f64,
    pub worst_theta_index: usize,
    pub worst_r: f64,
}

/// Checks S(∇r) ≥ −ϑ on the whole (r, θ) grid up to radius `r_limit`.
pub fn hypothesis_s(field: &PolarField, theta: f64, r_limit: f64, tol: f64) -> HypothesisReport {
    let mut worst = f64::INFINITY;
    let (mut wi, mut wr) = (0, 0.0);
    for (i, ray) in field.rays.iter().enumerate() {
        for (k, r) in field.radii.iter().enumerate() {
            if *r > r_limit * (1.0 + 1e-12) {
                break;
            }
            let m = ray.s_along[k] + theta;
            if m < worst {
                worst = m;
                wi = i;
                wr = *r;
            }
        }
    }
    HypothesisReport {
        theta,
        ok: worst >= -tol,
        worst_margin: worst,
        worst_theta_index: wi,
        worst_r: wr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn field(metric: &MetricSpec, measure: &MeasureSpec, base: &[f64], r_max: f64) -> PolarField {
        let grid = DirectionGrid::polar_default(metric.n).unwrap();
        polar_field(metric, measure, base, &grid, &PolarOptions::new(0.01, r_max)).unwrap()
    }

    #[test]
    fn euclidean_geodesics_are_lines() {
        let e = MetricSpec::euclidean(2).unwrap();
        let ts: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let g = integrate_geodesic(&e, &[0.1, 0.2], &[0.6, -0.8], &ts, Tolerance::default()).unwrap();
        for (t, p) in ts.iter().zip(&g.positions) {
            assert!((p[0] - (0.1 + 0.6 * t)).abs() < 1e-12 && (p[1] - (0.2 - 0.8 * t)).abs() < 1e-12);
        }
        assert!(g.speed_drift < 1e-12);
    }

    #[test]
    fn poincare_radial_geodesic_stays_on_ray() {
        let p = MetricSpec::poincare_ball(2, -1.0).unwrap();
        let ts: Vec<f64> = (1..=15).map(|k| k as f64 * 0.1).collect();
        let g = integrate_geodesic(&p, &[0.0, 0.0], &[0.3, 0.4], &ts, Tolerance::default()).unwrap();
        for q in &g.positions {
            assert!((q[0] * 0.4 - q[1] * 0.3).abs() < 1e-12);
        }
        assert!(g.speed_drift < 1e-8);
    }

    #[test]
    fn sphere_great_circles() {
        // unit sphere in the chart x ↦ 2x/(1+|x|²): from 0 along e1 the geodesic is tan(t/2)·e1
        let s = MetricSpec::stereographic_sphere(2, 1.0).unwrap();
        let ts: Vec<f64> = (1..=20).map(|k| k as f64 * 0.1).collect();
        let g = integrate_geodesic(&s, &[0.0, 0.0], &[0.5, 0.0], &ts, Tolerance::default()).unwrap();
        for (t, q) in ts.iter().zip(&g.positions) {
            assert!((q[0] - (t / 2.0).tan()).abs() < 1e-8 && q[1].abs() < 1e-12, "t={t}");
        }
        assert!(g.speed_drift < 1e-8);
    }

    #[test]
    fn euclidean_polar_coordinates() {
        let e = MetricSpec::euclidean(2).unwrap();
        let f = field(&e, &MeasureSpec::Lebesgue, &[0.3, -0.2], 1.0);
        for ray in &f.rays {
            for (k, r) in f.radii.iter().enumerate() {
                assert!((ray.sigma[k] - r).abs() < 1e-10 * r);
                assert!((ray.delta_r[k] - 1.0 / r).abs() < 1e-8 / r);
            }
        }
        assert!((f.ball_volume(1.0).unwrap() - PI).abs() < 1e-8);
        let (p, m) = f.sphere_measures(0.5).unwrap();
        assert!((p - PI).abs() < 1e-8 && (m - PI).abs() < 1e-8);
        let v1 = f.ball_volume(0.5).unwrap();
        let v2 = f.ball_volume(0.555).unwrap();
        assert!((v2 - PI * 0.555 * 0.555).abs() < 1e-10 && v2 > v1);
    }

    #[test]
    fn sphere_polar_density() {
        let s = MetricSpec::stereographic_sphere(2, 1.0).unwrap();
        let f = field(&s, &MeasureSpec::BusemannHausdorff, &[0.0, 0.0], 2.0);
        for ray in f.rays.iter().step_by(7) {
            for (k, r) in f.radii.iter().enumerate().skip(9) {
                assert!((ray.sigma[k] / r.sin() - 1.0).abs() < 1e-5);
                assert!((ray.delta_r[k] - 1.0 / r.tan()).abs() < 1e-5 * (1.0 / r.tan()).abs().max(1.0));
            }
        }
        let v = f.ball_volume(1.0).unwrap();
        assert!((v - 2.0 * PI * (1.0 - 1f64.cos())).abs() < 1e-5);
    }

    #[test]
    fn gaussian_laplacian_of_distance() {
        let e = MetricSpec::euclidean(2).unwrap();
        let f = field(&e, &MeasureSpec::gaussian(2), &[0.0, 0.0], 1.0);
        for ray in f.rays.iter().step_by(5) {
            for (k, r) in f.radii.iter().enumerate() {
                assert!((ray.delta_r[k] - (1.0 / r - r)).abs() < 1e-4);
                assert!((ray.s_along[k] - r).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn s_hypothesis_examples() {
        let e = MetricSpec::euclidean(2).unwrap();
        let flat = field(&e, &MeasureSpec::Lebesgue, &[0.0, 0.0], 0.5);
        let h = hypothesis_s(&flat, 0.0, 0.5, 1e-9);
        assert!(h.ok && h.worst_margin.abs() < 1e-12);
        // off-center Gaussian: S(∇r) = ⟨x0, u⟩ + r is negative for inward directions
        let g = field(&e, &MeasureSpec::gaussian(2), &[0.5, 0.0], 1.0);
        assert!(!hypothesis_s(&g, 0.0, 1.0, 1e-9).ok);
        assert!(hypothesis_s(&g, 1.5, 1.0, 1e-9).ok);
    }

    #[test]
    fn randers_inward_density() {
        // F = |y| + b·y: F*(−L(y)) = (1 + 2⟨b, ŷ⟩ + |b|²)/(1 − |b|²) pointwise, yet its
        // ν₊-average is exactly 1, so the totals agree for constant b
        let r = MetricSpec::randers(2, vec![0.3, 0.0]).unwrap();
        let f = field(&r, &MeasureSpec::BusemannHausdorff, &[0.0, 0.0], 0.5);
        for ray in &f.rays {
            let v = &ray.velocity[10];
            let c = 0.3 * v[0] / (v[0] * v[0] + v[1] * v[1]).sqrt();
            let want = (1.0 + 2.0 * c + 0.09) / 0.91;
            assert!((ray.dual_minus[10] - want).abs() < 1e-9);
        }
        let (p, m) = f.sphere_measures(0.5).unwrap();
        assert!((p - PI).abs() < 1e-8 && (m - PI).abs() < 1e-8, "{p} {m}");
    }

    #[test]
    fn funk_sphere_measures() {
        let fk = MetricSpec::funk(2).unwrap();
        let f = field(&fk, &MeasureSpec::BusemannHausdorff, &[0.0, 0.0], 0.5);
        let (p, m) = f.sphere_measures(0.5).unwrap();
        assert!(p > 0.0 && m > 0.0);
        let spread = f
            .rays
            .iter()
            .flat_map(|r| r.dual_minus.iter())
            .fold(0.0f64, |a, d| a.max((d - 1.0).abs()));
        assert!(spread > 1e-3);
    }

    #[test]
    fn conjugate_point_on_sphere() {
        // from (0.5, 0) the antipode is (−2, 0); the ray towards it meets the conjugate locus at π
        let s = MetricSpec::stereographic_sphere(2, 1.0).unwrap().with_cap(4.0);
        let node = DirectionGrid::circle(2).nodes[1].clone();
        let opts = PolarOptions::new(0.01, 3.5);
        match trace_ray(&s, &MeasureSpec::BusemannHausdorff, &[0.5, 0.0], &node, &opts) {
            Err(Error::DegenerateJacobian { radius }) => assert!((radius - PI).abs() < 1e-2, "{radius}"),
            other => panic!("expected a conjugate point, got {other:?}"),
        }
    }

    #[test]
    fn chart_exit_is_reported() {
        // the reversed Funk metric reaches the unit sphere at distance ln 2 from the origin
        let f = crate::metric::reverse_metric(&MetricSpec::funk(2).unwrap());
        let r = integrate_geodesic(&f, &[0.0, 0.0], &[1.0, 0.0], &[1.0], Tolerance::default());
        assert!(matches!(r, Err(Error::ChartExit { .. })), "{r:?}");
    }

    #[test]
    fn deterministic_and_parallel_invariant() {
        let r = MetricSpec::randers(2, vec![0.3, 0.0]).unwrap();
        let grid = DirectionGrid::circle(16);
        let opts = PolarOptions::new(0.05, 0.5);
        let a = polar_field(&r, &MeasureSpec::BusemannHausdorff, &[0.0, 0.0], &grid, &opts).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool
            .install(|| polar_field(&r, &MeasureSpec::BusemannHausdorff, &[0.0, 0.0], &grid, &opts))
            .unwrap();
        assert_eq!(a.rays, b.rays);
    }
}
