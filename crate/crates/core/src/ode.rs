//! Dormand–Prince 5(4) with continuous output.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-11,
            atol: 1e-13,
        }
    }
}

/// One accepted step with its interpolant.
pub struct Step<'a> {
    pub t0: f64,
    pub h: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    rcont: &'a [Vec<f64>; 5],
}

impl Step<'_> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn dense(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = self.rcont;
        (0..self.y0.len())
            .map(|i| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i]))))
            .collect()
    }
}

/// What the step observer wants the integrator to do next.
pub enum Control {
    Continue,
    Stop,
}

/// Integrates y' = f(t, y) from t0 to t_end, calling `observe` after every accepted step.
/// A right-hand side error is treated as a rejected step; repeated rejection down to a
/// negligible step raises the last error (or `StepFailure`).
pub fn integrate<F, O>(mut f: F, t0: f64, y0: &[f64], t_end: f64, tol: Tolerance, mut observe: O) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(&Step) -> Result<Control>,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    f(t, &y, &mut k[0])?;
    let span = t_end - t0;
    let mut h = (span.abs() * 1e-3).max(1e-6).min(span.abs());
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut rcont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    let mut last_err: Option<Error> = None;
    let mut rejected_in_row = 0;
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        if h <= 1e-14 * (1.0 + t.abs()) {
            return Err(last_err.unwrap_or(Error::StepFailure { t }));
        }
        let mut stage_ok = true;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                ytmp[i] = acc;
            }
            if let Err(e) = f(t + C[s] * h, &ytmp, &mut k[s]) {
                last_err = Some(e);
                stage_ok = false;
                break;
            }
        }
        if !stage_ok {
            h *= 0.25;
            rejected_in_row += 1;
            if rejected_in_row > 60 {
                return Err(last_err.unwrap_or(Error::StepFailure { t }));
            }
            continue;
        }
        ynew.copy_from_slice(&ytmp);
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
            err += (h * e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            rejected_in_row += 1;
            continue;
        }
        if err <= 1.0 {
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k[0][i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k[6][i] - bspl;
                let mut d = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    d += D[j] * kj[i];
                }
                rcont[4][i] = h * d;
            }
            let step = Step {
                t0: t,
                h,
                y0: &y,
                y1: &ynew,
                rcont: &rcont,
            };
            let ctl = observe(&step)?;
            t += h;
            y.copy_from_slice(&ynew);
            let k6 = k[6].clone();
            k[0].copy_from_slice(&k6);
            rejected_in_row = 0;
            if let Control::Stop = ctl {
                return Ok(y);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            rejected_in_row += 1;
        }
    }
    Ok(y)
}

/// Integrates and samples the solution at the (ascending) output times.
pub fn integrate_at<F>(f: F, t0: f64, y0: &[f64], outputs: &[f64], tol: Tolerance) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let t_end = outputs.last().copied().unwrap_or(t0);
    let mut out = Vec::with_capacity(outputs.len());
    let mut next = 0;
    while next < outputs.len() && outputs[next] <= t0 {
        out.push(y0.to_vec());
        next += 1;
    }
    if next == outputs.len() {
        return Ok(out);
    }
    integrate(f, t0, y0, t_end, tol, |s| {
        while next < outputs.len() && outputs[next] <= s.t1() {
            if outputs[next] >= s.t1() - 1e-15 * s.t1().abs().max(1.0) {
                out.push(s.y1.to_vec());
            } else {
                out.push(s.dense(outputs[next]));
            }
            next += 1;
        }
        Ok(Control::Continue)
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_dense_output() {
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.07).collect();
        let ys = integrate_at(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[0.0, 1.0],
            &ts,
            Tolerance::default(),
        )
        .unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-9, "t={t}");
            assert!((y[1] - t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn rhs_errors_shrink_then_fail() {
        let r = integrate(
            |t, _, dy| {
                if t > 0.5 {
                    return Err(Error::ChartExit { t });
                }
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            1.0,
            Tolerance::default(),
            |_| Ok(Control::Continue),
        );
        assert!(matches!(r, Err(Error::ChartExit { .. })));
    }
}
