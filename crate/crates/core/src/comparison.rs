//! Model comparison functions, integral curvature norms, and checkers for the Riccati
//! inequality, the Laplacian and volume comparisons, doubling, relative volume, volume
//! growth and the norm relation between radii.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::sphere_area;
use crate::polar::{hypothesis_s, integrate_to, with_origin, HypothesisReport, PolarField, Ray};
use crate::quad;
use crate::report::{worst_per_radius, CheckTolerance, ComparisonReport, Row, Threshold};

const MODEL_QUAD_TOL: f64 = 1e-10;

/// Curvature shortfalls below this are treated as zero: the grid values of Ric̲_∞ carry
/// errors of order 1e-10 from the direction search and the jet arithmetic.
pub const EXCESS_ZERO_TOL: f64 = 1e-8;

/// Slack on S(∇r) + ϑ ≥ 0 when certifying the S-hypothesis on the grid.
pub const HYPOTHESIS_TOL: f64 = 1e-9;

/// Default tolerance of the Riccati checker, which differentiates φ on the radial grid.
pub const RICCATI_TOL: CheckTolerance = CheckTolerance { abs: 1e-4, rel: 1e-6 };

/// Tolerance multiplier on rows where φ has a kink.
pub const KINK_TOL_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelFunctions {
    pub n: usize,
    pub k: f64,
    pub theta: f64,
}

impl ModelFunctions {
    pub fn new(n: usize, k: f64, theta: f64) -> Result<ModelFunctions> {
        if n < 2 {
            return Err(Error::BadDimension(n));
        }
        if !k.is_finite() || !theta.is_finite() || theta < 0.0 {
            return Err(Error::Parameter(format!("need finite K and ϑ ≥ 0, got K = {k}, ϑ = {theta}")));
        }
        Ok(ModelFunctions { n, k, theta })
    }

    pub fn s(&self, t: f64) -> f64 {
        if self.k > 0.0 {
            let q = self.k.sqrt();
            (q * t).sin() / q
        } else if self.k < 0.0 {
            let q = (-self.k).sqrt();
            (q * t).sinh() / q
        } else {
            t
        }
    }

    pub fn ds(&self, t: f64) -> f64 {
        if self.k > 0.0 {
            (self.k.sqrt() * t).cos()
        } else if self.k < 0.0 {
            ((-self.k).sqrt() * t).cosh()
        } else {
            1.0
        }
    }

    /// H_K = (n−1) s_K′/s_K.
    pub fn h(&self, t: f64) -> Result<f64> {
        let scale = if self.k > 0.0 { 1.0 / self.k.sqrt() } else { t.abs().max(1.0) };
        let s = self.s(t);
        if t <= 0.0 || s <= 1e-12 * scale {
            return Err(Error::Pole(t));
        }
        Ok((self.n as f64 - 1.0) * self.ds(t) / s)
    }

    /// First zero of s_K (+∞ for K ≤ 0).
    pub fn first_zero(&self) -> f64 {
        if self.k > 0.0 {
            PI / self.k.sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Radius cap π/(2√K) for K > 0.
    pub fn radius_cap(&self) -> f64 {
        radius_cap(self.k)
    }

    fn density(&self, t: f64) -> f64 {
        (self.theta * t).exp() * self.s(t).powi(self.n as i32 - 1)
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t < 0.0 || t > self.first_zero() * (1.0 + 1e-12) {
            return Err(Error::Pole(t));
        }
        Ok(())
    }

    /// v(n, K, t, ϑ) = Vol(S^{n−1}) ∫_0^t e^{ϑτ} s_K^{n−1}(τ) dτ.
    pub fn v(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        // t^n ∫_0^1 e^{ϑtu} (s_K(tu)/t)^{n−1} du keeps the integrand of order one
        let m = self.n as i32 - 1;
        let j = quad::integrate(
            |u| (self.theta * t * u).exp() * (self.s(t * u) / t).powi(m),
            0.0,
            1.0,
            MODEL_QUAD_TOL,
        )?;
        Ok(sphere_area(self.n) * t.powi(self.n as i32) * j)
    }

    /// v(n, K, a, b, ϑ) = Vol(S^{n−1}) ∫_a^b e^{ϑτ} s_K^{n−1}(τ) dτ.
    pub fn v_annulus(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::Parameter(format!("annulus [{a}, {b}] is reversed")));
        }
        if a == 0.0 {
            return self.v(b);
        }
        self.check_t(a)?;
        self.check_t(b)?;
        let scale = self.density(a).max(self.density(b));
        let j = quad::integrate(|u| self.density(a + (b - a) * u) / scale, 0.0, 1.0, MODEL_QUAD_TOL)?;
        Ok(sphere_area(self.n) * (b - a) * scale * j)
    }
}

pub fn radius_cap(k: f64) -> f64 {
    if k > 0.0 {
        PI / (2.0 * k.sqrt())
    } else {
        f64::INFINITY
    }
}

fn require_p(n: usize, p: f64) -> Result<()> {
    if p.is_finite() && p > n as f64 / 2.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p = {p} must exceed n/2 = {}", n as f64 / 2.0)))
    }
}

fn require_radius(field: &PolarField, k: f64, r: f64) -> Result<()> {
    if !(r > 0.0) || r > field.r_max() * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!("radius {r} outside (0, {}]", field.r_max())));
    }
    if r > radius_cap(k) * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "radius {r} exceeds π/(2√K) = {} for K = {k}",
            radius_cap(k)
        )));
    }
    Ok(())
}

/// ((n−1)(2p−1)/(2p−n))^{1/2}.
pub fn c_np(n: usize, p: f64) -> f64 {
    let n = n as f64;
    ((n - 1.0) * (2.0 * p - 1.0) / (2.0 * p - n)).sqrt()
}

fn ric_lower(ray: &Ray) -> Result<&[f64]> {
    ray.ric_lower
        .as_deref()
        .ok_or_else(|| Error::Parameter("polar field was built without curvature samples".into()))
}

/// Ric^K_∞ from a sampled Ric̲_∞, with shortfalls below `EXCESS_ZERO_TOL` set to zero.
pub fn excess(n: usize, k: f64, lower: f64) -> f64 {
    let e = (n as f64 - 1.0) * k - lower;
    if e <= EXCESS_ZERO_TOL * (1.0 + ((n as f64 - 1.0) * k).abs()) {
        0.0
    } else {
        e
    }
}

/// Checks S(∇r) ≥ −ϑ on the field up to `r_limit`.
pub fn s_hypothesis(field: &PolarField, theta: f64, r_limit: f64) -> HypothesisReport {
    hypothesis_s(field, theta, r_limit, HYPOTHESIS_TOL)
}

fn hypothesis_note(h: &HypothesisReport) -> String {
    format!(
        "S(∇r) ≥ −ϑ with ϑ = {}: worst S + ϑ = {:.6e} at r = {} (direction {})",
        h.theta, h.worst_margin, h.worst_r, h.worst_theta_index
    )
}

/// Radii a, then the grid radii in (a, b], then b.
fn radii_between(field: &PolarField, a: f64, b: f64) -> Vec<f64> {
    let mut out = vec![a];
    for &r in &field.radii {
        if r > a * (1.0 + 1e-12) + 1e-14 && r < b * (1.0 - 1e-12) {
            out.push(r);
        }
    }
    if b > a {
        out.push(b);
    }
    out
}

/// Angular sums of ∫_0^r (Ric^K_∞)^p e^{−ϑt} σ dt and of the area, for norm evaluation at any radius.
#[derive(Debug, Clone)]
pub struct NormProfile {
    pub p: f64,
    pub k: f64,
    pub theta: f64,
    h: f64,
    integrand: Vec<f64>,
    area: Vec<f64>,
    /// Largest Ric^K_∞ on the grid.
    pub max_excess: f64,
}

impl NormProfile {
    pub fn new(field: &PolarField, p: f64, k: f64, theta: f64) -> Result<NormProfile> {
        require_p(field.n, p)?;
        for ray in &field.rays {
            ric_lower(ray)?;
        }
        let n = field.n;
        let radii = &field.radii;
        let integrand = field.angular_sum(|ray, i| {
            let e = excess(n, k, ray.ric_lower.as_ref().expect("checked")[i]);
            e.powf(p) * (-theta * radii[i]).exp() * ray.sigma[i]
        });
        let mut max_excess: f64 = 0.0;
        for ray in &field.rays {
            for &l in ray.ric_lower.as_ref().expect("checked") {
                max_excess = max_excess.max(excess(n, k, l));
            }
        }
        Ok(NormProfile {
            p,
            k,
            theta,
            h: field.h,
            integrand,
            area: field.area_profile(),
            max_excess,
        })
    }

    /// Σ_θ w_θ ∫_0^r (Ric^K_∞)^p e^{−ϑt} σ dt.
    pub fn integral(&self, r: f64) -> f64 {
        integrate_to(&self.integrand, self.h, r)
    }

    pub fn volume(&self, r: f64) -> f64 {
        integrate_to(&self.area, self.h, r)
    }

    /// The averaged norm (1/m(B_r) · Σ_θ w_θ ∫_0^r (Ric^K_∞)^p e^{−ϑt} σ dt)^{1/p}.
    pub fn norm_bar(&self, r: f64) -> f64 {
        let i = self.integral(r);
        if i <= 0.0 {
            return 0.0;
        }
        (i / self.volume(r)).powf(1.0 / self.p)
    }

    /// Largest Ric^K_∞ over the nodes with radius ≤ r.
    pub fn max_excess_within(field: &PolarField, k: f64, r: f64) -> Result<f64> {
        let mut m: f64 = 0.0;
        for ray in &field.rays {
            let l = ric_lower(ray)?;
            for (i, &rad) in field.radii.iter().enumerate() {
                if rad > r * (1.0 + 1e-12) {
                    break;
                }
                m = m.max(excess(field.n, k, l[i]));
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralNorms {
    pub p: f64,
    pub r: f64,
    pub theta: f64,
    pub k: f64,
    pub norm_bar: f64,
    /// r²·(averaged norm with K = 0).
    pub kbar: f64,
}

pub fn integral_norms(field: &PolarField, p: f64, r: f64, theta: f64, k: f64) -> Result<IntegralNorms> {
    require_p(field.n, p)?;
    if !(r > 0.0) || r > field.r_max() * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!("radius {r} outside (0, {}]", field.r_max())));
    }
    let norm_bar = NormProfile::new(field, p, k, theta)?.norm_bar(r);
    let flat = if k == 0.0 { norm_bar } else { NormProfile::new(field, p, 0.0, theta)?.norm_bar(r) };
    Ok(IntegralNorms {
        p,
        r,
        theta,
        k,
        norm_bar,
        kbar: r * r * flat,
    })
}

/// φ = (Δr − H_K − ϑ)₊ and the sign-carrying Δr − H_K − ϑ along one ray, for radii ≤ `limit`.
fn phi_along(ray: &Ray, radii: &[f64], mf: &ModelFunctions, limit: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut g = Vec::with_capacity(limit);
    for i in 0..limit {
        g.push(ray.delta_r[i] - mf.h(radii[i])? - mf.theta);
    }
    let phi = g.iter().map(|v| v.max(0.0)).collect();
    Ok((phi, g))
}

fn rows_limit(field: &PolarField, k: f64) -> usize {
    let cap = radius_cap(k);
    field.radii.iter().take_while(|r| **r <= cap * (1.0 + 1e-12)).count()
}

/// ∂φ/∂r + φ²/(n−1) + 2φH_K/(n−1) ≤ Ric^K_∞ along every ray. Central differences, with
/// one-sided second-order stencils and a widened tolerance where Δr − H_K − ϑ changes sign.
pub fn riccati_check(field: &PolarField, mf: &ModelFunctions, tol: CheckTolerance) -> Result<ComparisonReport> {
    if mf.n != field.n {
        return Err(Error::Parameter("model dimension differs from the field".into()));
    }
    let limit = rows_limit(field, mf.k);
    if limit < 3 {
        return Err(Error::Parameter("fewer than three radial nodes below the radius cap".into()));
    }
    let mut report = ComparisonReport::new("riccati", &field.base, tol);
    let hyp = s_hypothesis(field, mf.theta, field.radii[limit - 1]);
    report.hypothesis_ok = hyp.ok;
    report.note(hypothesis_note(&hyp));
    let n1 = field.n as f64 - 1.0;
    let h = field.h;
    let radii = &field.radii;
    let per_ray: Vec<Vec<Row>> = field
        .rays
        .par_iter()
        .map(|ray| -> Result<Vec<Row>> {
            let lower = ric_lower(ray)?;
            let (phi, g) = phi_along(ray, radii, mf, limit)?;
            let pos = |i: usize| g[i] > 0.0;
            let same = |a: usize, b: usize, c: usize| pos(a) == pos(b) && pos(b) == pos(c);
            let fwd = |i: usize| (-3.0 * phi[i] + 4.0 * phi[i + 1] - phi[i + 2]) / (2.0 * h);
            let bwd = |i: usize| (3.0 * phi[i] - 4.0 * phi[i - 1] + phi[i - 2]) / (2.0 * h);
            let mut rows = Vec::with_capacity(limit);
            for i in 0..limit {
                let interior = i >= 1 && i + 1 < limit;
                let kink = interior && !same(i - 1, i, i + 1);
                let d = if !interior {
                    if i == 0 { fwd(0) } else { bwd(i) }
                } else if !kink {
                    (phi[i + 1] - phi[i - 1]) / (2.0 * h)
                } else if i + 2 < limit && same(i, i + 1, i + 2) {
                    fwd(i)
                } else if i >= 2 && same(i - 2, i - 1, i) {
                    bwd(i)
                } else {
                    (phi[i + 1] - phi[i - 1]) / (2.0 * h)
                };
                let hk = mf.h(radii[i])?;
                let lhs = d + phi[i] * phi[i] / n1 + 2.0 * phi[i] * hk / n1;
                let rhs = excess(field.n, mf.k, lower[i]);
                let row = Row::new(radii[i], lhs, rhs);
                rows.push(if kink { row.with_tol_scale(KINK_TOL_SCALE) } else { row });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let kinks = per_ray.iter().flatten().filter(|r| r.tol_scale > 1.0).count();
    report.note(format!("{kinks} kink rows checked with {KINK_TOL_SCALE}× tolerance"));
    report.rows = worst_per_radius(&per_ray, &tol);
    Ok(report)
}

/// Both Laplacian comparison inequalities per direction, for every radius up to r_max
/// (and up to π/(2√K) when K > 0):
/// ∫_0^r φ^{2p} e^{−ϑt} σ ≤ C(n,p)^{2p} ∫_0^r (Ric^K_∞)^p e^{−ϑt} σ and
/// φ^{2p−1} e^{−ϑr} σ ≤ (2p−1)^p ((n−1)/(2p−n))^{p−1} ∫_0^r (Ric^K_∞)^p e^{−ϑt} σ.
/// Rows keep the worse of the two at each radius.
pub fn check_laplacian_comparison(
    field: &PolarField,
    p: f64,
    k: f64,
    theta: f64,
    tol: CheckTolerance,
) -> Result<ComparisonReport> {
    let n = field.n;
    require_p(n, p)?;
    let mf = ModelFunctions::new(n, k, theta)?;
    let limit = rows_limit(field, k);
    if limit < 3 {
        return Err(Error::Parameter("fewer than three radial nodes below the radius cap".into()));
    }
    let mut report = ComparisonReport::new("laplacian_comparison", &field.base, tol);
    let hyp = s_hypothesis(field, theta, field.radii[limit - 1]);
    report.note(hypothesis_note(&hyp));
    if !hyp.ok {
        report.hypothesis_ok = false;
        return Ok(report);
    }
    let nf = n as f64;
    let ca = c_np(n, p).powf(2.0 * p);
    let cb = (2.0 * p - 1.0).powf(p) * ((nf - 1.0) / (2.0 * p - nf)).powf(p - 1.0);
    let h = field.h;
    let radii = &field.radii;
    let per_ray: Vec<(Vec<Row>, Vec<Row>)> = field
        .rays
        .par_iter()
        .map(|ray| -> Result<(Vec<Row>, Vec<Row>)> {
            let lower = ric_lower(ray)?;
            let (phi, _) = phi_along(ray, radii, &mf, limit)?;
            let w: Vec<f64> = (0..limit).map(|i| (-theta * radii[i]).exp() * ray.sigma[i]).collect();
            let lhs_int: Vec<f64> = (0..limit).map(|i| phi[i].powf(2.0 * p) * w[i]).collect();
            let ric_int: Vec<f64> = (0..limit).map(|i| excess(n, k, lower[i]).powf(p) * w[i]).collect();
            let cum_l = quad::cumulative(&with_origin(&lhs_int, 0.0), h);
            let cum_r = quad::cumulative(&with_origin(&ric_int, 0.0), h);
            let a = (0..limit).map(|i| Row::new(radii[i], cum_l[i + 1], ca * cum_r[i + 1])).collect();
            let b = (0..limit)
                .map(|i| Row::new(radii[i], phi[i].powf(2.0 * p - 1.0) * w[i], cb * cum_r[i + 1]))
                .collect();
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let (a, b): (Vec<Vec<Row>>, Vec<Vec<Row>>) = per_ray.into_iter().unzip();
    let wa = worst_per_radius(&a, &tol);
    let wb = worst_per_radius(&b, &tol);
    let worst = |rows: &[Row]| rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    report.note(format!("integral inequality worst margin {:.6e}", worst(&wa)));
    report.note(format!("pointwise inequality worst margin {:.6e}", worst(&wb)));
    report.rows = wa
        .into_iter()
        .zip(wb)
        .map(|(x, y)| if x.slack(&tol) <= y.slack(&tol) { x } else { y })
        .collect();
    Ok(report)
}

/// C(n,p,ϑ,K,R) = (1/2p) C(n,p) m(B_R)^{1/2p} Vol(S^{n−1}) ∫_0^R t e^{(1+1/2p)ϑt} s_K^{n−1}(t) v(t)^{−(2p+1)/2p} dt.
pub fn constant_c_volume(n: usize, p: f64, theta: f64, k: f64, r: f64, m_ball: f64) -> Result<f64> {
    require_p(n, p)?;
    let mf = ModelFunctions::new(n, k, theta)?;
    if r > mf.radius_cap() * (1.0 + 1e-12) {
        return Err(Error::Pole(r));
    }
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("radius {r} must be positive")));
    }
    let e = 1.0 + 1.0 / (2.0 * p);
    let nf = n as f64;
    // integrand ~ t^{−n/2p} near 0
    let f = |t: f64| {
        let v = mf.v(t).unwrap_or(f64::NAN);
        t * (e * theta * t).exp() * mf.s(t).powi(n as i32 - 1) * v.powf(-e)
    };
    let integral = quad::integrate_endpoint_singular(f, 0.0, r, nf / (2.0 * p), MODEL_QUAD_TOL)?;
    Ok(c_np(n, p) / (2.0 * p) * m_ball.powf(1.0 / (2.0 * p)) * sphere_area(n) * integral)
}

/// (m(B_R)/v(R))^{1/2p} − (m(B_t)/v(t))^{1/2p} ≤ C(n,p,ϑ,K,R)·(averaged norm at R)^{1/2}
/// for the radii t in [r, R].
pub fn check_volume_comparison(
    field: &PolarField,
    p: f64,
    k: f64,
    theta: f64,
    r: f64,
    big_r: f64,
    tol: CheckTolerance,
) -> Result<ComparisonReport> {
    let n = field.n;
    require_p(n, p)?;
    require_radius(field, k, big_r)?;
    if !(r > 0.0 && r <= big_r) {
        return Err(Error::Parameter(format!("need 0 < r ≤ R, got r = {r}, R = {big_r}")));
    }
    let mut report = ComparisonReport::new("volume_comparison", &field.base, tol);
    let hyp = s_hypothesis(field, theta, big_r);
    report.note(hypothesis_note(&hyp));
    if !hyp.ok {
        report.hypothesis_ok = false;
        return Ok(report);
    }
    let mf = ModelFunctions::new(n, k, theta)?;
    let prof = NormProfile::new(field, p, k, theta)?;
    let m_r = prof.volume(big_r);
    let c = constant_c_volume(n, p, theta, k, big_r, m_r)?;
    let nb = prof.norm_bar(big_r);
    let e = 1.0 / (2.0 * p);
    let top = (m_r / mf.v(big_r)?).powf(e);
    let rhs = c * nb.sqrt();
    for t in radii_between(field, r, big_r) {
        let lhs = top - (prof.volume(t) / mf.v(t)?).powf(e);
        report.rows.push(Row::new(t, lhs, rhs).with_scale(top));
    }
    report.note(format!("C = {c:.16e}, averaged norm = {nb:.16e}"));
    if nb == 0.0 {
        report.note("averaged norm vanishes: rows are the monotonicity statement lhs ≤ 0");
    }
    Ok(report)
}

/// m(B_t)/v(n,K,t,ϑ) non-increasing on the grid up to R; asserted only when the grid certifies
/// Ric_∞ ≥ (n−1)K (zero shortfall) and S ≥ −ϑ. Rows compare consecutive radii.
pub fn check_bishop_gromov(
    field: &PolarField,
    k: f64,
    theta: f64,
    big_r: f64,
    tol: CheckTolerance,
) -> Result<ComparisonReport> {
    let n = field.n;
    require_radius(field, k, big_r)?;
    let mut report = ComparisonReport::new("bishop_gromov", &field.base, tol);
    let hyp = s_hypothesis(field, theta, big_r);
    report.note(hypothesis_note(&hyp));
    report.hypothesis_ok = hyp.ok;
    let max_ex = NormProfile::max_excess_within(field, k, big_r)?;
    report.threshold = Some(Threshold {
        value: max_ex,
        limit: f64::MIN_POSITIVE,
    });
    let mf = ModelFunctions::new(n, k, theta)?;
    let vol = field.volume_profile();
    let mut prev: Option<(f64, f64)> = None;
    for (i, &t) in field.radii.iter().enumerate() {
        if t > big_r * (1.0 + 1e-12) {
            break;
        }
        let ratio = vol[i + 1] / mf.v(t)?;
        if let Some((_, pr)) = prev {
            report.rows.push(Row::new(t, ratio, pr));
        }
        prev = Some((t, ratio));
    }
    Ok(report)
}

/// ε₁ and ε₂ from the doubling argument at radius R: the averaged norm must stay below ε₁ and
/// its square root below ε₂. Returns (ε₁, ε₂, C(R), v(R)/m(B_R)).
fn doubling_thresholds(
    n: usize,
    p: f64,
    k: f64,
    theta: f64,
    xi: f64,
    big_r: f64,
    m_r: f64,
) -> Result<(f64, f64, f64, f64)> {
    let mf = ModelFunctions::new(n, k, theta)?;
    let c = constant_c_volume(n, p, theta, k, big_r, m_r)?;
    let q = mf.v(big_r)? / m_r;
    let eps1 = (2.0 * c).powi(-2) * q.powf(-1.0 / p);
    let eps2 = (1.0 - xi.powf(-1.0 / (2.0 * p))) / (2.0 * c) * q.powf(-1.0 / (2.0 * p));
    Ok((eps1, eps2, c, q))
}

fn doubling_threshold(
    report: &mut ComparisonReport,
    prof: &NormProfile,
    n: usize,
    xi: f64,
    big_r: f64,
) -> Result<()> {
    let m_r = prof.volume(big_r);
    let (eps1, eps2, c, q) = doubling_thresholds(n, prof.p, prof.k, prof.theta, xi, big_r, m_r)?;
    let nb = prof.norm_bar(big_r);
    report.threshold = Some(Threshold {
        value: nb,
        limit: eps1.min(eps2 * eps2),
    });
    report.note(format!(
        "threshold at R = {big_r}: ε₁ = {eps1:.6e}, ε₂ = {eps2:.6e} (on the square root), C(R) = {c:.6e}, v/m = {q:.6e}"
    ));
    Ok(())
}

/// m(B_{r2})/m(B_t) ≤ Ξ v(r2)/v(t) ≤ Ξ e^{(ϑ+(n−1)√|K|) r2} (r2/t)^n for t in [r1, r2],
/// asserted when the averaged norm at R is below the explicit threshold.
#[allow(clippy::too_many_arguments)]
pub fn check_doubling(
    field: &PolarField,
    p: f64,
    k: f64,
    theta: f64,
    xi: f64,
    r1: f64,
    r2: f64,
    big_r: f64,
    tol: CheckTolerance,
) -> Result<ComparisonReport> {
    let n = field.n;
    require_p(n, p)?;
    require_radius(field, k, big_r)?;
    if !(xi > 1.0) {
        return Err(Error::Parameter(format!("Ξ = {xi} must exceed 1")));
    }
    if !(r1 > 0.0 && r1 <= r2 && r2 <= big_r) {
        return Err(Error::Parameter(format!("need 0 < r1 ≤ r2 ≤ R, got {r1}, {r2}, {big_r}")));
    }
    let mut report = ComparisonReport::new("doubling", &field.base, tol);
    let hyp = s_hypothesis(field, theta, big_r);
    report.note(hypothesis_note(&hyp));
    if !hyp.ok {
        report.hypothesis_ok = false;
        return Ok(report);
    }
    let mf = ModelFunctions::new(n, k, theta)?;
    let prof = NormProfile::new(field, p, k, theta)?;
    doubling_threshold(&mut report, &prof, n, xi, big_r)?;
    let m2 = prof.volume(r2);
    let v2 = mf.v(r2)?;
    let growth = ((theta + (n as f64 - 1.0) * k.abs().sqrt()) * r2).exp();
    let (mut first, mut second) = (f64::INFINITY, f64::INFINITY);
    for t in radii_between(field, r1, r2) {
        let a = Row::new(t, m2 / prof.volume(t), xi * v2 / mf.v(t)?);
        let b = Row::new(t, a.rhs, xi * growth * (r2 / t).powi(n as i32));
        first = first.min(a.margin);
        second = second.min(b.margin);
        report.rows.push(if a.slack(&tol) <= b.slack(&tol) { a } else { b });
    }
    report.note(format!("volume ratio worst margin {first:.6e}; model bound worst margin {second:.6e}"));
    Ok(report)
}

/// The annulus comparison between B_{r1,R1} and B_{r2,R2} with its explicit two-integral constant.
#[allow(clippy::too_many_arguments)]
pub fn check_relative_volume(
    field: &PolarField,
    p: f64,
    k: f64,
    theta: f64,
    r1: f64,
    r2: f64,
    big_r1: f64,
    big_r2: f64,
    tol: CheckTolerance,
) -> Result<ComparisonReport> {
    let n = field.n;
    require_p(n, p)?;
    require_radius(field, k, big_r2)?;
    if !(0.0 <= r1 && r1 <= r2 && r2 < big_r1 && big_r1 <= big_r2) {
        return Err(Error::Parameter(format!(
            "need 0 ≤ r1 ≤ r2 < R1 ≤ R2, got {r1}, {r2}, {big_r1}, {big_r2}"
        )));
    }
    let mut report = ComparisonReport::new("relative_volume", &field.base, tol);
    let hyp = s_hypothesis(field, theta, big_r2);
    report.note(hypothesis_note(&hyp));
    if !hyp.ok {
        report.hypothesis_ok = false;
        return Ok(report);
    }
    let mf = ModelFunctions::new(n, k, theta)?;
    let prof = NormProfile::new(field, p, k, theta)?;
    let c = constant_c_relative(&mf, p, r1, r2, big_r1, big_r2, prof.volume(big_r2))?;
    let e = 1.0 / (2.0 * p);
    let outer = (prof.volume(big_r2) - prof.volume(r2)) / mf.v_annulus(r2, big_r2)?;
    let inner = (prof.volume(big_r1) - prof.volume(r1)) / mf.v_annulus(r1, big_r1)?;
    let nb = prof.norm_bar(big_r2);
    report
        .rows
        .push(Row::new(big_r2, outer.powf(e) - inner.powf(e), c * nb.sqrt()).with_scale(outer.powf(e)));
    report.note(format!("C̃ = {c:.16e}, averaged norm = {nb:.16e}"));
    Ok(report)
}

/// (1/2p) C(n,p) Vol(S^{n−1}) m(B_{R2})^{1/2p} [R1 e^{(1+1/2p)ϑR1} s_K^{n−1}(R1) ∫_{r1}^{r2} v(t,R1)^{−(2p+1)/2p} dt
/// + ∫_{R1}^{R2} s_K^{n−1}(t) t e^{(1+1/2p)ϑt} v(r2,t)^{−(2p+1)/2p} dt].
pub fn constant_c_relative(
    mf: &ModelFunctions,
    p: f64,
    r1: f64,
    r2: f64,
    big_r1: f64,
    big_r2: f64,
    m_ball: f64,
) -> Result<f64> {
    require_p(mf.n, p)?;
    let e = 1.0 + 1.0 / (2.0 * p);
    let m = mf.n as i32 - 1;
    let first = if r2 > r1 {
        let i = quad::integrate(
            |t| mf.v_annulus(t, big_r1).map_or(f64::NAN, |v| v.powf(-e)),
            r1,
            r2,
            MODEL_QUAD_TOL,
        )?;
        big_r1 * (e * mf.theta * big_r1).exp() * mf.s(big_r1).powi(m) * i
    } else {
        0.0
    };
    let second = if big_r2 > big_r1 {
        quad::integrate(
            |t| {
                mf.v_annulus(r2, t)
                    .map_or(f64::NAN, |v| mf.s(t).powi(m) * t * (e * mf.theta * t).exp() * v.powf(-e))
            },
            big_r1,
            big_r2,
            MODEL_QUAD_TOL,
        )?
    } else {
        0.0
    };
    Ok(c_np(mf.n, p) / (2.0 * p) * sphere_area(mf.n) * m_ball.powf(1.0 / (2.0 * p)) * (first + second))
}

/// C₅(n,p) = 2^{2p−1}(2^n + C(n,p)^{2p}) with C(n,p) = (n/p)((n−1)(2p−1)/(2p−n))^{1/2}.
pub fn growth_constant(n: usize, p: f64) -> f64 {
    let c = n as f64 / p * c_np(n, p);
    2f64.powf(2.0 * p - 1.0) * (2f64.powi(n as i32) + c.powf(2.0 * p))
}

/// Largest admissible scale-invariant curvature at radius R + 1: (R(R+1)^{(2p+1)n})^{−1/p}.
pub fn growth_threshold(n: usize, p: f64, big_r: f64) -> f64 {
    (big_r * (big_r + 1.0).powf((2.0 * p + 1.0) * n as f64)).powf(-1.0 / p)
}

/// (m(B_{t+1}) − m(B_{t−1}))/m(B_{t+1}) ≤ C₅/t for t in [1, R] (K = 0, ϑ = 0), with the
/// threshold on the scale-invariant curvature at t + 1 checked row by row.
pub fn check_volume_growth(field: &PolarField, p: f64, big_r: f64, tol: CheckTolerance) -> Result<ComparisonReport> {
    let n = field.n;
    require_p(n, p)?;
    if !(big_r >= 1.0) {
        return Err(Error::Parameter(format!("R = {big_r} must be at least 1")));
    }
    require_radius(field, 0.0, big_r + 1.0)?;
    let mut report = ComparisonReport::new("volume_growth", &field.base, tol);
    let hyp = s_hypothesis(field, 0.0, big_r + 1.0);
    report.note(hypothesis_note(&hyp));
    if !hyp.ok {
        report.hypothesis_ok = false;
        return Ok(report);
    }
    let prof = NormProfile::new(field, p, 0.0, 0.0)?;
    let c5 = growth_constant(n, p);
    let mut worst_ratio: f64 = 0.0;
    for t in radii_between(field, 1.0, big_r) {
        let hi = prof.volume(t + 1.0);
        let lo = prof.volume(t - 1.0);
        report.rows.push(Row::new(t, (hi - lo) / hi, c5 / t));
        let kbar = (t + 1.0).powi(2) * prof.norm_bar(t + 1.0);
        worst_ratio = worst_ratio.max(kbar / growth_threshold(n, p, t));
    }
    report.threshold = Some(Threshold {
        value: worst_ratio,
        limit: 1.0,
    });
    report.note(format!(
        "C5 = {c5:.16e}; threshold value is max over rows of curvature / (t(t+1)^((2p+1)n))^(-1/p)"
    ));
    report.note(format!("linear growth witness m(B_R)/R = {:.16e}", prof.volume(big_r) / big_r));
    Ok(report)
}

/// t²·norm(t) ≤ Ξ^{1/p} e^{(ϑ+(n−1)√|K|) r2/p} (t/r2)^{2−n/p} r2²·norm(r2) ≤ Ξ^{1/p} e^{…} r2²·norm(r2)
/// for t in [r1, r2], asserted when the doubling threshold at r2 is met.
#[allow(clippy::too_many_arguments)]
pub fn check_norm_relation(
    field: &PolarField,
    p: f64,
    k: f64,
    theta: f64,
    xi: f64,
    r1: f64,
    r2: f64,
    tol: CheckTolerance,
) -> Result<ComparisonReport> {
    let n = field.n;
    require_p(n, p)?;
    require_radius(field, k, r2)?;
    if !(xi > 1.0) {
        return Err(Error::Parameter(format!("Ξ = {xi} must exceed 1")));
    }
    if !(r1 > 0.0 && r1 <= r2) {
        return Err(Error::Parameter(format!("need 0 < r1 ≤ r2, got {r1}, {r2}")));
    }
    let mut report = ComparisonReport::new("norm_relation", &field.base, tol);
    let hyp = s_hypothesis(field, theta, r2);
    report.note(hypothesis_note(&hyp));
    if !hyp.ok {
        report.hypothesis_ok = false;
        return Ok(report);
    }
    let prof = NormProfile::new(field, p, k, theta)?;
    doubling_threshold(&mut report, &prof, n, xi, r2)?;
    let nf = n as f64;
    let factor = xi.powf(1.0 / p) * ((theta + (nf - 1.0) * k.abs().sqrt()) * r2 / p).exp();
    let top = factor * r2 * r2 * prof.norm_bar(r2);
    for t in radii_between(field, r1, r2) {
        let mid = factor * (t / r2).powf(2.0 - nf / p) * r2 * r2 * prof.norm_bar(r2);
        let a = Row::new(t, t * t * prof.norm_bar(t), mid);
        let b = Row::new(t, mid, top);
        report.rows.push(if a.slack(&tol) <= b.slack(&tol) { a } else { b });
    }
    Ok(report)
}
