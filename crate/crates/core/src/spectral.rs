//! Isoperimetric profiles of concentric balls, the isoperimetric and Sobolev constants, the
//! co-area cutoff limits, the radial Dirichlet eigenvalue and radial harmonic functions.

use std::io::Write;

use crate::comparison::NormProfile;
use crate::error::{Error, Result};
use crate::polar::{integrate_to, interpolate, PolarField};
use crate::quad;
use crate::report::{fmt_num, CheckTolerance, ComparisonReport, Row, Threshold};

/// One concentric ball B_t of the profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoRow {
    pub t: f64,
    pub volume: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    /// min{ν₊, ν₋}/m(B_t)^{(n−1)/n}.
    pub ratio: f64,
    /// ratio / m(B_R)^{1/n}.
    pub normalized: f64,
}

/// Isoperimetric ratios of the balls B_t, t ≤ R, around the field's base point. Their infimum
/// is an upper bound for the Dirichlet isoperimetric constant of B_R; the infimum over all
/// domains is not computed.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoProfile {
    pub n: usize,
    pub big_r: f64,
    pub rows: Vec<IsoRow>,
}

impl IsoProfile {
    pub fn min_normalized(&self) -> f64 {
        self.rows.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,volume,nu_plus,nu_minus,ratio,normalized")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_num(r.t),
                fmt_num(r.volume),
                fmt_num(r.nu_plus),
                fmt_num(r.nu_minus),
                fmt_num(r.ratio),
                fmt_num(r.normalized)
            )?;
        }
        Ok(())
    }
}

fn node_index(field: &PolarField, r: f64) -> Result<usize> {
    let pos = r / field.h;
    let k = pos.round();
    if (pos - k).abs() > 1e-9 || k < 1.0 || k as usize > field.radii.len() {
        return Err(Error::Parameter(format!(
            "radius {r} is not a node of the radial grid (step {}, r_max {})",
            field.h,
            field.r_max()
        )));
    }
    Ok(k as usize)
}

/// Σ_θ w_θ F*(−dr) σ, including the value 0 at r = 0.
fn minus_area(field: &PolarField) -> Vec<f64> {
    field.angular_sum(|ray, k| ray.dual_minus[k] * ray.sigma[k])
}

pub fn iso_profile(field: &PolarField, big_r: f64) -> Result<IsoProfile> {
    let last = node_index(field, big_r)?;
    let n = field.n as f64;
    let plus = field.area_profile();
    let minus = minus_area(field);
    let vol = field.volume_profile();
    let norm = vol[last].powf(1.0 / n);
    let rows = (1..=last)
        .map(|k| {
            let ratio = plus[k].min(minus[k]) / vol[k].powf((n - 1.0) / n);
            IsoRow {
                t: field.radii[k - 1],
                volume: vol[k],
                nu_plus: plus[k],
                nu_minus: minus[k],
                ratio,
                normalized: ratio / norm,
            }
        })
        .collect();
    Ok(IsoProfile {
        n: field.n,
        big_r,
        rows,
    })
}

/// Constants of the isoperimetric estimate for given n, reversibility Λ, ϑ and Ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoConstants {
    pub n: usize,
    pub lambda: f64,
    pub theta: f64,
    pub xi: f64,
    /// (1 − a₀)/(1 + a₀) = (3/4)^{1/n}.
    pub a0: f64,
    pub k: u64,
    pub r0: f64,
    /// Fixed-point iterations used for k ↔ r₀.
    pub iterations: usize,
    pub c_iso: f64,
    /// Constant of the L¹ Sobolev inequality; equal to `c_iso`.
    pub c_sd: f64,
}

const K_FIXED_POINT_CAP: usize = 50;

/// Smallest k ≥ 2 with (1 − ½e^{−ϑ r₁})^{k−1} ≤ ½.
fn halving_count(theta: f64, r1: f64) -> Option<u64> {
    let base = 1.0 - 0.5 * (-theta * r1).exp();
    if base <= 0.5 {
        return Some(2);
    }
    let steps = (0.5f64.ln() / base.ln()).ceil();
    if !steps.is_finite() || steps > 1e15 {
        return None;
    }
    Some((steps as u64).max(1) + 1)
}

/// a₀, k, r₀ and C_iso. k and r₀ depend on each other through r₁ = 1/r₀; starting from k = 2 the
/// map k → r₀(k) → k(1/r₀) is iterated to a fixed point (at most 50 rounds).
pub fn r0_and_constants(n: usize, lambda: f64, theta: f64, xi: f64) -> Result<IsoConstants> {
    if n < 2 {
        return Err(Error::BadDimension(n));
    }
    if !(lambda >= 1.0) || !(theta >= 0.0) || !(xi > 1.0) {
        return Err(Error::Parameter(format!(
            "need Λ ≥ 1, ϑ ≥ 0, Ξ > 1; got Λ = {lambda}, ϑ = {theta}, Ξ = {xi}"
        )));
    }
    let nf = n as f64;
    let q = 0.75f64.powf(1.0 / nf);
    let a0 = (1.0 - q) / (1.0 + q);
    let l = lambda;
    let r0_of = |k: u64| (a0 / (l * (l + 2.0))).powf(k as f64 - 1.0) / (5.0 * l * (l + 2.0) * (l + 1.0));
    let mut k = 2u64;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let r0 = r0_of(k);
        let next = match halving_count(theta, 1.0 / r0) {
            Some(v) if r0 > 0.0 => v,
            _ => {
                return Err(Error::Convergence {
                    what: "k ↔ r₀ fixed point".into(),
                    residual: f64::INFINITY,
                })
            }
        };
        if next == k {
            break;
        }
        if iterations >= K_FIXED_POINT_CAP {
            return Err(Error::Convergence {
                what: "k ↔ r₀ fixed point".into(),
                residual: (next as f64 - k as f64).abs(),
            });
        }
        k = next;
    }
    let r0 = r0_of(k);
    let c_iso = 10f64.powi(n as i32 + 1)
        * (1.0 + l * l).powf(nf - 1.0)
        * (l + 2.0).powf(2.0 * nf + 1.0)
        * xi
        * (theta / r0 * (2.0 * l * l + 1.0 / nf)).exp()
        / r0;
    Ok(IsoConstants {
        n,
        lambda,
        theta,
        xi,
        a0,
        k,
        r0,
        iterations,
        c_iso,
        c_sd: c_iso,
    })
}

impl IsoConstants {
    /// C̃ = (2(n−1)/(n−2))²·C_SD², defined for n > 2.
    pub fn c_tilde(&self) -> Result<f64> {
        if self.n <= 2 {
            return Err(Error::BadDimension(self.n));
        }
        let nf = self.n as f64;
        Ok((2.0 * (nf - 1.0) / (nf - 2.0)).powi(2) * self.c_sd * self.c_sd)
    }
}

/// Threshold status from the grid: met iff Ric_∞ ≥ 0 at every node of the field.
pub fn curvature_threshold(field: &PolarField) -> Result<Threshold> {
    Ok(Threshold {
        value: NormProfile::max_excess_within(field, 0.0, field.r_max())?,
        limit: f64::MIN_POSITIVE,
    })
}

/// Necessary condition for the isoperimetric estimate on B_r: every concentric ball B_t ⊂ B_r has
/// normalized ratio ≥ C_iso⁻¹ r⁻¹. A pass certifies only the concentric family.
pub fn check_iso_bound(
    profile: &IsoProfile,
    constants: &IsoConstants,
    base: &[f64],
    threshold: Threshold,
    tol: CheckTolerance,
) -> Result<ComparisonReport> {
    let r = profile.big_r;
    if r > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!("radius {r} must be at most 1")));
    }
    let mut report = ComparisonReport::new("iso_bound", base, tol);
    report.threshold = Some(threshold);
    let bound = 1.0 / (constants.c_iso * r);
    for row in &profile.rows {
        report.rows.push(Row::new(row.t, bound, row.normalized));
    }
    report.note(format!(
        "a0 = {:.16e}, k = {}, r0 = {:.16e}, C_iso = {:.16e}; concentric balls only",
        constants.a0, constants.k, constants.r0, constants.c_iso
    ));
    Ok(report)
}

/// Limit of the cutoff totals ∫F*(df_ε) dm for Ω = B_t.
#[derive(Debug, Clone, PartialEq)]
pub struct CoareaReport {
    pub t: f64,
    pub eps: Vec<f64>,
    /// (1/ε)∫_{t−ε}^t Σ_θ w_θ F*(−dr) σ dr for each ε.
    pub inner_totals: Vec<f64>,
    /// (1/ε)∫_t^{t+ε} Σ_θ w_θ σ dr for each ε.
    pub outer_totals: Vec<f64>,
    pub nu_minus_limit: f64,
    pub nu_plus_limit: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
}

impl CoareaReport {
    pub fn max_relative_error(&self) -> f64 {
        let a = (self.nu_minus_limit - self.nu_minus).abs() / self.nu_minus.abs();
        let b = (self.nu_plus_limit - self.nu_plus).abs() / self.nu_plus.abs();
        a.max(b)
    }
}

/// Polynomial extrapolation of (x_i, y_i) to x = 0 (Neville).
fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let m = x.len();
    for level in 1..m {
        for i in 0..m - level {
            let j = i + level;
            p[i] = (x[j] * p[i] - x[i] * p[i + 1]) / (x[j] - x[i]);
        }
    }
    p[0]
}

/// The inner cutoff f_ε = min{(t − r)/ε, 1} on B_t has F*(df_ε) = F*(−dr)/ε in the collar, so its
/// total tends to ν₋(∂B_t); the outer cutoff 1 − (r − t)/ε tends to ν₊(∂B_t) under the reverse
/// dual norm. The three totals are extrapolated to ε = 0.
pub fn coarea_consistency(field: &PolarField, t: f64, eps: &[f64]) -> Result<CoareaReport> {
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Parameter("need at least two positive ε values".into()));
    }
    let emax = eps.iter().cloned().fold(0.0, f64::max);
    if t - emax < 0.0 || t + emax > field.r_max() * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "collars around t = {t} of width {emax} leave [0, {}]",
            field.r_max()
        )));
    }
    let plus = field.area_profile();
    let minus = minus_area(field);
    let h = field.h;
    let inner: Vec<f64> = eps
        .iter()
        .map(|e| (integrate_to(&minus, h, t) - integrate_to(&minus, h, t - e)) / e)
        .collect();
    let outer: Vec<f64> = eps
        .iter()
        .map(|e| (integrate_to(&plus, h, t + e) - integrate_to(&plus, h, t)) / e)
        .collect();
    let (nu_plus, nu_minus) = field.sphere_measures(t)?;
    Ok(CoareaReport {
        t,
        eps: eps.to_vec(),
        nu_minus_limit: extrapolate_to_zero(eps, &inner),
        nu_plus_limit: extrapolate_to_zero(eps, &outer),
        inner_totals: inner,
        outer_totals: outer,
        nu_minus,
        nu_plus,
    })
}

/// Radial grid function with derivative samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    /// u vanishes at the last radius.
    pub dirichlet: bool,
    /// +1 increasing, −1 decreasing, 0 neither.
    pub monotone: i8,
}

impl RadialFunction {
    fn new(radii: Vec<f64>, values: Vec<f64>, derivatives: Vec<f64>, dirichlet: bool) -> RadialFunction {
        let monotone = if derivatives.iter().all(|d| *d >= 0.0) {
            1
        } else if derivatives.iter().all(|d| *d <= 0.0) {
            -1
        } else {
            0
        };
        RadialFunction {
            radii,
            values,
            derivatives,
            dirichlet,
            monotone,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r,u,du")?;
        for i in 0..self.radii.len() {
            writeln!(
                w,
                "{},{},{}",
                fmt_num(self.radii[i]),
                fmt_num(self.values[i]),
                fmt_num(self.derivatives[i])
            )?;
        }
        Ok(())
    }
}

/// Relative change of λ₁ allowed between the 2h and h discretizations.
pub const LAMBDA_REFINEMENT_TOL: f64 = 1e-3;
const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Lambda1 {
    pub big_r: f64,
    pub lambda1: f64,
    /// λ₁ from every other radial node.
    pub lambda1_coarse: f64,
    /// First eigenprofile, normalized to max 1, with u(R) = 0.
    pub profile: RadialFunction,
}

/// Number of eigenvalues of the symmetric tridiagonal (d, e) below x.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = d[i] - x - if i == 0 { 0.0 } else { off / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn smallest_eigenvalue(d: &[f64], e: &[f64]) -> f64 {
    let m = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let rad = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < m { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - rad);
        hi = hi.max(d[i] + rad);
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves (T − s I) x = b for symmetric tridiagonal T.
fn tridiagonal_solve(d: &[f64], e: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    let m = d.len();
    let mut c = vec![0.0; m];
    let mut x = vec![0.0; m];
    let guard = |v: f64| if v.abs() < 1e-300 { 1e-300 } else { v };
    let mut diag = guard(d[0] - s);
    x[0] = b[0] / diag;
    for i in 1..m {
        c[i - 1] = e[i - 1] / diag;
        diag = guard(d[i] - s - e[i - 1] * c[i - 1]);
        x[i] = (b[i] - e[i - 1] * x[i - 1]) / diag;
    }
    for i in (0..m - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// P1 elements on nodes 0, h, …, R with u(R) = 0: stiffness from w = Σ w_θ F*(−dr)² σ (trapezoid
/// per element), lumped mass from A = Σ w_θ σ. Returns (λ₁, nodal u on 0..R).
fn radial_eigen(w: &[f64], a: &[f64], h: f64) -> (f64, Vec<f64>) {
    let nodes = w.len();
    let m = nodes - 1;
    let mut kd = vec![0.0; m];
    let mut ke = vec![0.0; m.saturating_sub(1)];
    let mut mass = vec![0.0; m];
    for el in 0..nodes - 1 {
        let c = 0.5 * (w[el] + w[el + 1]) / h;
        let (i, j) = (el, el + 1);
        if i < m {
            kd[i] += c;
            mass[i] += h * (2.0 * a[i] + a[j]) / 6.0;
        }
        if j < m {
            kd[j] += c;
            mass[j] += h * (2.0 * a[j] + a[i]) / 6.0;
            ke[i] -= c;
        }
    }
    let s: Vec<f64> = mass.iter().map(|v| 1.0 / v.sqrt()).collect();
    let d: Vec<f64> = (0..m).map(|i| kd[i] * s[i] * s[i]).collect();
    let e: Vec<f64> = (0..m.saturating_sub(1)).map(|i| ke[i] * s[i] * s[i + 1]).collect();
    let lambda = smallest_eigenvalue(&d, &e);
    let shift = lambda - 1e-9 * lambda.abs().max(1.0);
    let mut y = vec![1.0; m];
    for _ in 0..4 {
        y = tridiagonal_solve(&d, &e, shift, &y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
    }
    let mut u: Vec<f64> = (0..m).map(|i| y[i] * s[i]).collect();
    u.push(0.0);
    let peak = u.iter().cloned().fold(0.0, |acc: f64, v| if v.abs() > acc.abs() { v } else { acc });
    u.iter_mut().for_each(|v| *v /= peak);
    (lambda, u)
}

/// First Dirichlet eigenvalue of B_R over radial functions; fails with `GridTooCoarse` when the
/// 2h and h discretizations differ by more than 0.1%.
pub fn lambda1_radial(field: &PolarField, big_r: f64) -> Result<Lambda1> {
    let last = node_index(field, big_r)?;
    if last < 8 {
        return Err(Error::Parameter("need at least 8 radial nodes inside the ball".into()));
    }
    let w_all = field.angular_sum(|ray, k| ray.dual_minus[k].powi(2) * ray.sigma[k]);
    let a_all = field.area_profile();
    let w = &w_all[..=last];
    let a = &a_all[..=last];
    let (lambda, u) = radial_eigen(w, a, field.h);
    let coarse_nodes = if last % 2 == 0 { last } else { last - 1 };
    let lambda_coarse = if coarse_nodes == last {
        let wc: Vec<f64> = w.iter().step_by(2).cloned().collect();
        let ac: Vec<f64> = a.iter().step_by(2).cloned().collect();
        radial_eigen(&wc, &ac, 2.0 * field.h).0
    } else {
        // odd node count: coarsen the ball of the nearest even radius and rescale by (R'/R)²
        let wc: Vec<f64> = w[..=coarse_nodes].iter().step_by(2).cloned().collect();
        let ac: Vec<f64> = a[..=coarse_nodes].iter().step_by(2).cloned().collect();
        let (lc, _) = radial_eigen(&wc, &ac, 2.0 * field.h);
        let (lf, _) = radial_eigen(&w[..=coarse_nodes], &a[..=coarse_nodes], field.h);
        lambda * lc / lf
    };
    let change = ((lambda - lambda_coarse) / lambda).abs();
    if change > LAMBDA_REFINEMENT_TOL {
        return Err(Error::GridTooCoarse { relative_change: change });
    }
    let radii: Vec<f64> = (0..=last).map(|k| k as f64 * field.h).collect();
    let du = grid_derivative(&u, field.h);
    Ok(Lambda1 {
        big_r,
        lambda1: lambda,
        lambda1_coarse: lambda_coarse,
        profile: RadialFunction::new(radii, u, du, true),
    })
}

/// Second-order differences, one-sided at the ends.
fn grid_derivative(u: &[f64], h: f64) -> Vec<f64> {
    let m = u.len();
    (0..m)
        .map(|i| {
            if i == 0 {
                (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
            } else if i == m - 1 {
                (3.0 * u[i] - 4.0 * u[i - 1] + u[i - 2]) / (2.0 * h)
            } else {
                (u[i + 1] - u[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// λ₁ ≥ C̃⁻¹ R⁻² for R ≤ 1 (needs n > 2 for C̃; reported as informational otherwise).
pub fn check_lambda1_bound(
    lambda: &Lambda1,
    constants: &IsoConstants,
    base: &[f64],
    threshold: Threshold,
    tol: CheckTolerance,
) -> Result<ComparisonReport> {
    let r = lambda.big_r;
    if r > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!("radius {r} must be at most 1")));
    }
    let mut report = ComparisonReport::new("lambda1_bound", base, tol);
    report.threshold = Some(threshold);
    match constants.c_tilde() {
        Ok(ct) => {
            report.rows.push(Row::new(r, 1.0 / (ct * r * r), lambda.lambda1));
            report.note(format!("C̃ = {ct:.16e}; radial upper bound for λ₁"));
        }
        Err(_) => {
            report.informational = true;
            report.rows.push(Row::new(r, f64::NAN, lambda.lambda1));
            report.note(format!("n = {}: C̃ needs n > 2; λ₁ recorded only", constants.n));
        }
    }
    Ok(report)
}

/// The L^{2n/(n−2)} Sobolev inequality with constant C̃ m(B_R)^{−2/n} R² evaluated on the
/// first eigenprofile (n > 2).
pub fn check_sobolev_profile(
    field: &PolarField,
    lambda: &Lambda1,
    constants: &IsoConstants,
    threshold: Threshold,
    tol: CheckTolerance,
) -> Result<ComparisonReport> {
    let ct = constants.c_tilde()?;
    let n = field.n as f64;
    let last = lambda.profile.radii.len() - 1;
    let a = field.area_profile();
    let w = field.angular_sum(|ray, k| ray.dual_minus[k].powi(2) * ray.sigma[k]);
    let u = &lambda.profile.values;
    let du = &lambda.profile.derivatives;
    let q = 2.0 * n / (n - 2.0);
    let lp: Vec<f64> = (0..=last).map(|k| u[k].abs().powf(q) * a[k]).collect();
    let grad: Vec<f64> = (0..=last).map(|k| du[k] * du[k] * w[k]).collect();
    let big_r = lambda.big_r;
    let m = quad::simpson(&a[..=last], field.h);
    let lhs = quad::simpson(&lp, field.h).powf(1.0 / q * 2.0);
    let rhs = ct * m.powf(-2.0 / n) * big_r * big_r * quad::simpson(&grad, field.h);
    let mut report = ComparisonReport::new("sobolev_profile", &field.base, tol);
    report.threshold = Some(threshold);
    report.rows.push(Row::new(big_r, lhs, rhs));
    Ok(report)
}

/// Increasing radial harmonic function on the annulus [r_inner, R] with its gradient ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialHarmonic {
    pub function: RadialFunction,
    /// c with A(r) u′(r) = c.
    pub flux: f64,
    /// max |(A u′)′| / c on the grid.
    pub residual: f64,
    /// sup over the middle half of the annulus of F²(∇u)·R²·m(B_R)/‖u‖²_{L²}.
    pub q: f64,
}

/// u′ = c/A with A = Σ w_θ σ, u(r_inner) = 0, u(R) = 1.
pub fn radial_harmonic(field: &PolarField, r_inner: f64, big_r: f64) -> Result<RadialHarmonic> {
    let i0 = node_index(field, r_inner)?;
    let i1 = node_index(field, big_r)?;
    if i1 < i0 + 4 {
        return Err(Error::Parameter("annulus needs at least four radial steps".into()));
    }
    let a = field.area_profile();
    let inv: Vec<f64> = a[i0..=i1].iter().map(|v| 1.0 / v).collect();
    let cum = quad::cumulative(&inv, field.h);
    let total = *cum.last().expect("non-empty");
    let c = 1.0 / total;
    let values: Vec<f64> = cum.iter().map(|v| v * c).collect();
    let derivatives: Vec<f64> = inv.iter().map(|v| v * c).collect();
    let flux: Vec<f64> = (0..derivatives.len()).map(|k| a[i0 + k] * derivatives[k]).collect();
    let residual = flux
        .windows(2)
        .map(|p| ((p[1] - p[0]) / field.h).abs() / c)
        .fold(0.0, f64::max);
    let radii: Vec<f64> = (i0..=i1).map(|k| k as f64 * field.h).collect();
    let u2: Vec<f64> = (0..values.len()).map(|k| values[k] * values[k] * a[i0 + k]).collect();
    let l2 = quad::simpson(&u2, field.h);
    let m = integrate_to(&a, field.h, big_r);
    let (lo, hi) = (r_inner + 0.25 * (big_r - r_inner), big_r - 0.25 * (big_r - r_inner));
    let sup = radii
        .iter()
        .zip(&derivatives)
        .filter(|(r, _)| **r >= lo - 1e-12 && **r <= hi + 1e-12)
        .map(|(_, d)| d * d)
        .fold(0.0, f64::max);
    Ok(RadialHarmonic {
        function: RadialFunction::new(radii, values, derivatives, false),
        flux: c,
        residual,
        q: sup * big_r * big_r * m / l2,
    })
}

/// Value of a radial function at r by four-point interpolation.
pub fn radial_value(f: &RadialFunction, r: f64) -> f64 {
    let h = f.radii[1] - f.radii[0];
    interpolate(&f.values, h, r - f.radii[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::DirectionGrid;
    use crate::measure::MeasureSpec;
    use crate::metric::MetricSpec;
    use crate::polar::{polar_field, PolarOptions};
    use std::f64::consts::PI;

    fn field(metric: &MetricSpec, h: f64, r_max: f64, dirs: usize, curvature: bool) -> PolarField {
        let grid = if metric.n == 2 {
            DirectionGrid::circle(dirs)
        } else {
            DirectionGrid::product(dirs / 2, dirs)
        };
        let mut opts = PolarOptions::new(h, r_max);
        if curvature {
            opts = opts.with_curvature(metric.n).unwrap();
        }
        polar_field(metric, &MeasureSpec::Lebesgue, &vec![0.0; metric.n], &grid, &opts).unwrap()
    }

    #[test]
    fn constants_oracles() {
        let c = r0_and_constants(2, 1.0, 0.0, 2.0).unwrap();
        assert!((c.a0 - 0.071797).abs() < 1e-6);
        assert_eq!(c.k, 2);
        let expected_r0 = c.a0 / 3.0 / 30.0;
        assert!((c.r0 - expected_r0).abs() < 1e-15);
        let c2 = r0_and_constants(2, 1.5, 0.0, 2.0).unwrap();
        let c3 = r0_and_constants(2, 1.0, 0.0, 3.0).unwrap();
        assert!(c2.c_iso > c.c_iso && c3.c_iso > c.c_iso);
        assert!(matches!(c.c_tilde(), Err(Error::BadDimension(2))));
        let c3d = r0_and_constants(3, 1.0, 0.0, 2.0).unwrap();
        assert!((c3d.c_tilde().unwrap() - 16.0 * c3d.c_sd * c3d.c_sd).abs() < 1e-6 * c3d.c_tilde().unwrap());
        assert!(r0_and_constants(2, 1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn euclidean_iso_ratios() {
        let e = MetricSpec::euclidean(2).unwrap();
        let f = field(&e, 0.01, 1.0, 16, false);
        let prof = iso_profile(&f, 1.0).unwrap();
        for row in &prof.rows {
            assert!((row.ratio - 2.0 * PI.sqrt()).abs() < 1e-6, "{row:?}");
            assert!((row.nu_plus - row.nu_minus).abs() < 1e-8);
        }
        let e3 = MetricSpec::euclidean(3).unwrap();
        let f3 = field(&e3, 0.02, 1.0, 8, false);
        let prof = iso_profile(&f3, 1.0).unwrap();
        let target = 4.0 * PI / (4.0 * PI / 3.0f64).powf(2.0 / 3.0);
        assert!((target - 4.83598).abs() < 1e-5);
        for row in &prof.rows[2..] {
            assert!((row.ratio - target).abs() < 1e-5 * target, "{row:?}");
        }
    }

    #[test]
    fn coarea_limits_on_flat_space() {
        let e = MetricSpec::euclidean(2).unwrap();
        let f = field(&e, 0.01, 1.0, 16, false);
        let rep = coarea_consistency(&f, 0.5, &[0.08, 0.04, 0.02]).unwrap();
        assert!((rep.nu_minus_limit - PI).abs() < 1e-6);
        assert!((rep.nu_plus_limit - PI).abs() < 1e-6);
        assert!(rep.max_relative_error() < 1e-6);
    }

    #[test]
    fn euclidean_lambda1() {
        let e = MetricSpec::euclidean(2).unwrap();
        let f = field(&e, 0.01, 2.0, 8, false);
        let l = lambda1_radial(&f, 1.0).unwrap();
        let j01: f64 = 2.404_825_557_695_773;
        assert!((l.lambda1 / (j01 * j01) - 1.0).abs() < 5e-3, "{}", l.lambda1);
        assert!((l.profile.values[0] - 1.0).abs() < 1e-12);
        assert_eq!(l.profile.monotone, -1);
        let l2 = lambda1_radial(&f, 2.0).unwrap();
        assert!((l2.lambda1 * 4.0 / l.lambda1 - 1.0).abs() < 5e-3);
        let e3 = MetricSpec::euclidean(3).unwrap();
        let f3 = field(&e3, 0.01, 1.0, 8, false);
        let l3 = lambda1_radial(&f3, 1.0).unwrap();
        assert!((l3.lambda1 / (PI * PI) - 1.0).abs() < 5e-3, "{}", l3.lambda1);
    }

    #[test]
    fn tridiagonal_eigen_matches_dense() {
        let d = [2.0, 3.0, 1.5, 4.0];
        let e = [0.5, -0.7, 0.2];
        let lambda = smallest_eigenvalue(&d, &e);
        let mut m = nalgebra::DMatrix::<f64>::zeros(4, 4);
        for i in 0..4 {
            m[(i, i)] = d[i];
            if i < 3 {
                m[(i, i + 1)] = e[i];
                m[(i + 1, i)] = e[i];
            }
        }
        let ev = m.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((lambda - ev).abs() < 1e-9);
        assert!((extrapolate_to_zero(&[0.4, 0.2, 0.1], &[1.4 + 0.16, 1.2 + 0.04, 1.1 + 0.01]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_harmonic_flat() {
        let e = MetricSpec::euclidean(2).unwrap();
        let f = field(&e, 0.005, 2.0, 8, false);
        let h = radial_harmonic(&f, 0.2, 1.0).unwrap();
        assert!(h.residual < 1e-8);
        for (r, u) in h.function.radii.iter().zip(&h.function.values) {
            assert!((u - (r / 0.2).ln() / 5f64.ln()).abs() < 1e-6);
        }
        let e3 = MetricSpec::euclidean(3).unwrap();
        let f3 = field(&e3, 0.01, 1.0, 8, false);
        let h3 = radial_harmonic(&f3, 0.2, 1.0).unwrap();
        for (r, u) in h3.function.radii.iter().zip(&h3.function.values) {
            assert!((u - (1.0 / 0.2 - 1.0 / r) / 4.0).abs() < 1e-6);
        }
        let qs: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|r| radial_harmonic(&f, r / 5.0, *r).unwrap().q)
            .collect();
        let (lo, hi) = qs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), q| (a.min(*q), b.max(*q)));
        assert!(hi / lo - 1.0 < 0.05, "{qs:?}");
    }

    #[test]
    fn iso_and_lambda_bounds_on_flat_space() {
        let e = MetricSpec::euclidean(3).unwrap();
        let f = field(&e, 0.02, 1.0, 8, true);
        let th = curvature_threshold(&f).unwrap();
        assert!(th.met());
        let c = r0_and_constants(3, 1.0, 0.0, 2.0).unwrap();
        let rep = check_iso_bound(&iso_profile(&f, 1.0).unwrap(), &c, &f.base, th, CheckTolerance::default()).unwrap();
        assert!(rep.pass());
        assert!(matches!(lambda1_radial(&f, 1.0), Err(Error::GridTooCoarse { .. })));
        let fine = field(&e, 0.01, 1.0, 8, false);
        let l = lambda1_radial(&fine, 1.0).unwrap();
        assert!(check_lambda1_bound(&l, &c, &f.base, th, CheckTolerance::default()).unwrap().pass());
        assert!(check_sobolev_profile(&fine, &l, &c, th, CheckTolerance::default()).unwrap().pass());
    }
}
