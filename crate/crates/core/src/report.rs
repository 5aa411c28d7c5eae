//! Per-radius comparison tables, their pass/fail status and CSV/JSON emission.

use std::io::Write;

use serde::Serialize;
use serde_json::value::RawValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    HypothesisUnmet,
    Informational,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::HypothesisUnmet => "hypothesis_unmet",
            Status::Informational => "informational",
        }
    }
}

/// Allowed violation abs + rel·max(|lhs|, |rhs|, row scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckTolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for CheckTolerance {
    fn default() -> Self {
        CheckTolerance { abs: 1e-8, rel: 1e-6 }
    }
}

impl CheckTolerance {
    pub fn new(abs: f64, rel: f64) -> CheckTolerance {
        CheckTolerance { abs, rel }
    }

    pub fn scaled(self, s: f64) -> CheckTolerance {
        CheckTolerance {
            abs: self.abs * s,
            rel: self.rel * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Multiplier on the tolerance for this row (10 on Riccati kink rows).
    pub tol_scale: f64,
    /// Magnitude of the terms behind lhs and rhs, for the relative tolerance when the
    /// sides are differences of larger quantities.
    pub scale: f64,
}

impl Row {
    pub fn new(r: f64, lhs: f64, rhs: f64) -> Row {
        Row {
            r,
            lhs,
            rhs,
            margin: rhs - lhs,
            tol_scale: 1.0,
            scale: 0.0,
        }
    }

    pub fn with_scale(mut self, s: f64) -> Row {
        self.scale = s.abs();
        self
    }

    pub fn with_tol_scale(mut self, s: f64) -> Row {
        self.tol_scale = s;
        self
    }

    pub fn allowed(&self, tol: &CheckTolerance) -> f64 {
        self.tol_scale * (tol.abs + tol.rel * self.lhs.abs().max(self.rhs.abs()).max(self.scale))
    }

    /// margin + allowed; non-negative iff the row passes. NaN rows fail.
    pub fn slack(&self, tol: &CheckTolerance) -> f64 {
        let s = self.margin + self.allowed(tol);
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    }
}

/// Keeps, at every radius index, the row with the smallest slack across directions.
pub fn worst_per_radius(per_direction: &[Vec<Row>], tol: &CheckTolerance) -> Vec<Row> {
    let len = per_direction.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .filter_map(|k| {
            per_direction
                .iter()
                .filter_map(|rows| rows.get(k))
                .min_by(|a, b| a.slack(tol).total_cmp(&b.slack(tol)))
                .copied()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// Measured curvature quantity.
    pub value: f64,
    /// Required strict upper bound.
    pub limit: f64,
}

impl Threshold {
    pub fn met(&self) -> bool {
        self.value < self.limit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub check: String,
    pub base: Vec<f64>,
    pub hypothesis_ok: bool,
    pub threshold: Option<Threshold>,
    /// The inequality is recorded without asserting it.
    pub informational: bool,
    pub rows: Vec<Row>,
    pub tol: CheckTolerance,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn new(check: &str, base: &[f64], tol: CheckTolerance) -> ComparisonReport {
        ComparisonReport {
            check: check.to_string(),
            base: base.to_vec(),
            hypothesis_ok: true,
            threshold: None,
            informational: false,
            rows: Vec::new(),
            tol,
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn threshold_met(&self) -> bool {
        self.threshold.map_or(true, |t| t.met())
    }

    pub fn rows_pass(&self) -> bool {
        self.rows.iter().all(|r| r.slack(&self.tol) >= 0.0)
    }

    pub fn status(&self) -> Status {
        if !self.hypothesis_ok || !self.threshold_met() {
            Status::HypothesisUnmet
        } else if self.informational {
            Status::Informational
        } else if self.rows_pass() {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn pass(&self) -> bool {
        self.status() == Status::Pass
    }

    /// Smallest margin over all rows (+∞ for an empty table).
    pub fn worst_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| if r.margin.is_nan() { f64::NEG_INFINITY } else { r.margin })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn worst_row(&self) -> Option<&Row> {
        self.rows
            .iter()
            .min_by(|a, b| a.slack(&self.tol).total_cmp(&b.slack(&self.tol)))
    }

    /// CSV with columns r, lhs, rhs, margin.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r,lhs,rhs,margin")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_num(row.r),
                fmt_num(row.lhs),
                fmt_num(row.rhs),
                fmt_num(row.margin)
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> Summary {
        Summary {
            theorem: self.check.clone(),
            base: self.base.iter().map(|v| num(*v)).collect(),
            hypothesis_ok: self.hypothesis_ok,
            threshold_met: self.threshold.map(|t| t.met()),
            threshold_value: self.threshold.map(|t| num(t.value)),
            threshold_limit: self.threshold.map(|t| num(t.limit)),
            status: self.status().as_str(),
            worst_margin: num(self.worst_margin()),
            pass: self.pass(),
            tol_abs: num(self.tol.abs),
            tol_rel: num(self.tol.rel),
            rows: self.rows.len(),
            notes: self.notes.clone(),
        }
    }
}

/// JSON summary record; numbers carry the same 17-significant-digit formatting as the CSVs.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub theorem: String,
    pub base: Vec<Box<RawValue>>,
    pub hypothesis_ok: bool,
    pub threshold_met: Option<bool>,
    pub threshold_value: Option<Box<RawValue>>,
    pub threshold_limit: Option<Box<RawValue>>,
    pub status: &'static str,
    pub worst_margin: Box<RawValue>,
    pub pass: bool,
    pub tol_abs: Box<RawValue>,
    pub tol_rel: Box<RawValue>,
    pub rows: usize,
    pub notes: Vec<String>,
}

/// `{:.16e}`; non-finite values become `nan`, `inf`, `-inf`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// A JSON number in `{:.16e}` form; non-finite values become null.
pub fn num(v: f64) -> Box<RawValue> {
    let s = if v.is_finite() { format!("{v:.16e}") } else { "null".into() };
    RawValue::from_string(s).expect("formatted float is valid JSON")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_rows_and_hypotheses() {
        let mut r = ComparisonReport::new("demo", &[0.0, 0.0], CheckTolerance::default());
        r.rows.push(Row::new(0.5, 1.0, 1.0 - 5e-7));
        assert_eq!(r.status(), Status::Pass);
        r.rows.push(Row::new(1.0, 1.0, 0.99));
        assert_eq!(r.status(), Status::Fail);
        assert!((r.worst_margin() + 0.01).abs() < 1e-15);
        r.threshold = Some(Threshold { value: 2.0, limit: 1.0 });
        assert_eq!(r.status(), Status::HypothesisUnmet);
        r.threshold = None;
        r.informational = true;
        assert_eq!(r.status(), Status::Informational);
        r.hypothesis_ok = false;
        assert_eq!(r.status(), Status::HypothesisUnmet);
    }

    #[test]
    fn kink_rows_get_wider_tolerance() {
        let tol = CheckTolerance::new(1e-4, 0.0);
        let row = Row::new(0.1, 5e-4, 0.0);
        assert!(row.slack(&tol) < 0.0);
        assert!(row.with_tol_scale(10.0).slack(&tol) > 0.0);
    }

    #[test]
    fn worst_per_radius_picks_smallest_slack() {
        let tol = CheckTolerance::default();
        let a = vec![Row::new(1.0, 0.0, 1.0), Row::new(2.0, 0.0, -1.0)];
        let b = vec![Row::new(1.0, 0.0, 0.5), Row::new(2.0, 0.0, 3.0)];
        let w = worst_per_radius(&[a, b], &tol);
        assert_eq!(w[0].rhs, 0.5);
        assert_eq!(w[1].rhs, -1.0);
    }

    #[test]
    fn csv_and_json_formatting() {
        let mut r = ComparisonReport::new("demo", &[0.25, 0.0], CheckTolerance::default());
        r.rows.push(Row::new(0.1, 0.0, 1.0));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "r,lhs,rhs,margin\n1.0000000000000001e-1,0.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0\n"
        );
        let json = serde_json::to_string(&r.summary()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["pass"], true);
        assert_eq!(v["status"], "pass");
        assert_eq!(v["worst_margin"].as_f64(), Some(1.0));
        assert!(json.contains("\"base\":[2.5000000000000000e-1,0.0000000000000000e0]"));
    }
}
