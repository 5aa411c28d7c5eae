//! Runs the configured checkers at every base point.

use finsler_core::comparison::{
    check_bishop_gromov, check_doubling, check_laplacian_comparison, check_norm_relation,
    check_relative_volume, check_volume_comparison, check_volume_growth, riccati_check, ModelFunctions,
    RICCATI_TOL,
};
use finsler_core::polar::{polar_field, PolarField, PolarOptions};
use finsler_core::report::{CheckTolerance, ComparisonReport, Row};
use finsler_core::spectral::{
    check_iso_bound, check_lambda1_bound, check_sobolev_profile, coarea_consistency, curvature_threshold,
    iso_profile, lambda1_radial, r0_and_constants, radial_harmonic,
};
use rayon::prelude::*;

use crate::config::{CheckConfig, Resolved};

/// Relative agreement required between cutoff limits and the sphere measures.
pub const COAREA_TOL: CheckTolerance = CheckTolerance { abs: 0.0, rel: 1e-4 };

/// Extra CSV produced by a checker: (file-name suffix, contents).
pub type Extra = (String, Vec<u8>);

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub index: usize,
    pub check: &'static str,
    pub base_index: usize,
    pub report: Result<ComparisonReport, String>,
    pub extras: Vec<Extra>,
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn default_tol(check: &CheckConfig) -> CheckTolerance {
    match check {
        CheckConfig::Riccati { .. } => RICCATI_TOL,
        CheckConfig::Coarea { .. } => COAREA_TOL,
        _ => CheckTolerance::default(),
    }
}

pub fn tolerance(check: &CheckConfig, scale: f64) -> CheckTolerance {
    check
        .tol()
        .map_or_else(|| default_tol(check), |t| t.to_tolerance())
        .scaled(scale)
}

/// Reversibility used in the isoperimetric constants.
fn reversibility(res: &Resolved) -> f64 {
    res.metric.reference().reversibility.unwrap_or(1.0)
}

fn run_check(
    res: &Resolved,
    field: &PolarField,
    check: &CheckConfig,
    tol: CheckTolerance,
) -> finsler_core::Result<(ComparisonReport, Vec<Extra>)> {
    let n = field.n;
    let kdef = res.metric.space_form_curvature().unwrap_or(0.0);
    let kk = |k: &Option<f64>| k.unwrap_or(kdef);
    let mut extras = Vec::new();
    let report = match check {
        CheckConfig::Riccati { k, theta, .. } => {
            riccati_check(field, &ModelFunctions::new(n, kk(k), *theta)?, tol)?
        }
        CheckConfig::LaplacianComparison { p, k, theta, .. } => {
            check_laplacian_comparison(field, *p, kk(k), *theta, tol)?
        }
        CheckConfig::VolumeComparison {
            p, k, theta, r, big_r, ..
        } => check_volume_comparison(field, *p, kk(k), *theta, *r, *big_r, tol)?,
        CheckConfig::BishopGromov { k, theta, big_r, .. } => {
            check_bishop_gromov(field, kk(k), *theta, *big_r, tol)?
        }
        CheckConfig::Doubling {
            p,
            k,
            theta,
            xi,
            r1,
            r2,
            big_r,
            ..
        } => check_doubling(field, *p, kk(k), *theta, *xi, *r1, *r2, *big_r, tol)?,
        CheckConfig::RelativeVolume {
            p,
            k,
            theta,
            r1,
            r2,
            big_r1,
            big_r2,
            ..
        } => check_relative_volume(field, *p, kk(k), *theta, *r1, *r2, *big_r1, *big_r2, tol)?,
        CheckConfig::VolumeGrowth { p, big_r, .. } => check_volume_growth(field, *p, *big_r, tol)?,
        CheckConfig::NormRelation {
            p, k, theta, xi, r1, r2, ..
        } => check_norm_relation(field, *p, kk(k), *theta, *xi, *r1, *r2, tol)?,
        CheckConfig::IsoBound { theta, xi, big_r, .. } => {
            let profile = iso_profile(field, *big_r)?;
            extras.push(("profile".to_string(), csv_bytes(|b| profile.write_csv(b))));
            let threshold = curvature_threshold(field)?;
            match r0_and_constants(n, reversibility(res), *theta, *xi) {
                Ok(c) => check_iso_bound(&profile, &c, &field.base, threshold, tol)?,
                Err(e) => unavailable("iso_bound", field, threshold, tol, e),
            }
        }
        CheckConfig::Coarea { t, eps, .. } => {
            let c = coarea_consistency(field, *t, eps)?;
            let mut report = ComparisonReport::new("coarea", &field.base, tol);
            report
                .rows
                .push(Row::new(*t, (c.nu_minus_limit - c.nu_minus).abs(), 0.0).with_scale(c.nu_minus));
            report
                .rows
                .push(Row::new(*t, (c.nu_plus_limit - c.nu_plus).abs(), 0.0).with_scale(c.nu_plus));
            report.note(format!(
                "rows: |limit − ν₋|, |limit − ν₊|; ν₋ = {:.16e} (limit {:.16e}), ν₊ = {:.16e} (limit {:.16e})",
                c.nu_minus, c.nu_minus_limit, c.nu_plus, c.nu_plus_limit
            ));
            report
        }
        CheckConfig::Lambda1 { theta, xi, big_r, .. } => {
            let l = lambda1_radial(field, *big_r)?;
            extras.push(("eigenprofile".to_string(), csv_bytes(|b| l.profile.write_csv(b))));
            let threshold = curvature_threshold(field)?;
            match r0_and_constants(n, reversibility(res), *theta, *xi) {
                Ok(c) => {
                    let mut report = check_lambda1_bound(&l, &c, &field.base, threshold, tol)?;
                    if n > 2 {
                        let sob = check_sobolev_profile(field, &l, &c, threshold, tol)?;
                        report.rows.extend(sob.rows);
                        report.note("second row: Sobolev inequality on the eigenprofile");
                    }
                    report.note(format!(
                        "λ₁ = {:.16e}, coarse-grid λ₁ = {:.16e}",
                        l.lambda1, l.lambda1_coarse
                    ));
                    report
                }
                Err(e) => unavailable("lambda1_bound", field, threshold, tol, e),
            }
        }
        CheckConfig::GradientScaling { radii, inner_fraction } => {
            let mut report = ComparisonReport::new("gradient_scaling", &field.base, tol);
            report.informational = true;
            let mut qs = Vec::new();
            for r in radii {
                let hf = radial_harmonic(field, r * inner_fraction, *r)?;
                extras.push((format!("harmonic_R{r}"), csv_bytes(|b| hf.function.write_csv(b))));
                report.rows.push(Row::new(*r, hf.q, hf.q));
                report.note(format!("R = {r}: Q = {:.16e}, flux residual {:.3e}", hf.q, hf.residual));
                qs.push(hf.q);
            }
            let lo = qs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = qs.iter().cloned().fold(0.0, f64::max);
            report.note(format!("max Q / min Q − 1 = {:.16e}", hi / lo - 1.0));
            report
        }
    };
    Ok((report, extras))
}

fn unavailable(
    id: &str,
    field: &PolarField,
    threshold: finsler_core::report::Threshold,
    tol: CheckTolerance,
    e: finsler_core::Error,
) -> ComparisonReport {
    let mut report = ComparisonReport::new(id, &field.base, tol);
    report.threshold = Some(threshold);
    report.hypothesis_ok = false;
    report.note(format!("constants unavailable: {e}"));
    report
}

/// Runs the suite at every base point. Rayon's current pool sets the parallelism; results are
/// ordered by (base point, suite index).
pub fn run_suite(res: &Resolved, tol_scale: f64) -> Vec<CheckOutcome> {
    let needs_curvature = res.suite.iter().any(|c| c.needs_curvature());
    let g = &res.config.grids;
    let mut out = Vec::new();
    for (j, base) in res.base_points.iter().enumerate() {
        let opts = PolarOptions::new(g.h, g.r_max);
        let opts = if needs_curvature { opts.with_curvature(res.metric.n) } else { Ok(opts) };
        let field = opts.and_then(|opts| polar_field(&res.metric, &res.measure, base, &res.grid, &opts));
        let outcomes: Vec<CheckOutcome> = res
            .suite
            .par_iter()
            .enumerate()
            .map(|(i, check)| {
                let (report, extras) = match &field {
                    Ok(f) => match run_check(res, f, check, tolerance(check, tol_scale)) {
                        Ok((r, x)) => (Ok(r), x),
                        Err(e) => (Err(e.to_string()), Vec::new()),
                    },
                    Err(e) => (Err(format!("polar field: {e}")), Vec::new()),
                };
                CheckOutcome {
                    index: i,
                    check: check.id(),
                    base_index: j,
                    report,
                    extras,
                }
            })
            .collect();
        out.extend(outcomes);
    }
    out
}
