//! Small dense linear algebra over jets (Gaussian elimination with value pivoting).

use crate::error::{Error, Result};
use crate::jets::{Jet, Scalar};

fn pivot_row(a: &[Vec<Jet>], col: usize) -> Result<usize> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter().map(|v| v.value().abs()))
        .fold(0.0, f64::max);
    let (row, best) = (col..a.len())
        .map(|r| (r, a[r][col].value().abs()))
        .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if best <= 1e-14 * scale || best == 0.0 {
        return Err(Error::SingularMatrix(format!("pivot {best:e} in column {col}")));
    }
    Ok(row)
}

/// Solves A x = b for jet-valued A and b.
pub fn solve(mut a: Vec<Vec<Jet>>, mut b: Vec<Jet>) -> Result<Vec<Jet>> {
    let n = b.len();
    for col in 0..n {
        let p = pivot_row(&a, col)?;
        a.swap(col, p);
        b.swap(col, p);
        let inv = a[col][col].recip()?;
        for r in col + 1..n {
            if a[r][col].coeffs().iter().all(|v| *v == 0.0) {
                continue;
            }
            let f = &a[r][col] * &inv;
            for c in col..n {
                let t = &f * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
            let t = &f * &b[col];
            b[r] = &b[r] - &t;
        }
    }
    let mut x: Vec<Jet> = b.clone();
    for i in (0..n).rev() {
        let mut s = b[i].clone();
        for j in i + 1..n {
            s = s - &a[i][j] * &x[j];
        }
        x[i] = s.checked_div(&a[i][i])?;
    }
    Ok(x)
}

pub fn det(a: &[Vec<Jet>]) -> Result<Jet> {
    let mut a = a.to_vec();
    let n = a.len();
    let mut sign = 1.0;
    let mut d = a[0][0].lift(1.0);
    for col in 0..n {
        let p = pivot_row(&a, col)?;
        if p != col {
            a.swap(col, p);
            sign = -sign;
        }
        let inv = a[col][col].recip()?;
        for r in col + 1..n {
            let f = &a[r][col] * &inv;
            for c in col..n {
                let t = &f * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
        }
        d = &d * &a[col][col];
    }
    Ok(d * sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::JetSpace;

    #[test]
    fn solve_and_det_match_closed_form_2x2() {
        let s = JetSpace::get(1, 3).unwrap();
        let t = Jet::variable(&s, 0, 0.4);
        let one = t.lift(1.0);
        // A = [[1 + t, t], [t^2, 2]]
        let a = vec![
            vec![&one + &t, t.clone()],
            vec![&t * &t, one.clone() * 2.0],
        ];
        let d = det(&a).unwrap();
        let expect = |t: f64| 2.0 * (1.0 + t) - t * t * t;
        assert!((d.value() - expect(0.4)).abs() < 1e-14);
        // d/dt = 2 - 3t^2
        assert!((d.d(&[0]) - (2.0 - 3.0 * 0.16)).abs() < 1e-14);
        let b = vec![one.clone(), t.clone()];
        let x = solve(a.clone(), b).unwrap();
        // check A x = b coefficientwise
        let r0 = &(&a[0][0] * &x[0]) + &(&a[0][1] * &x[1]);
        let r1 = &(&a[1][0] * &x[0]) + &(&a[1][1] * &x[1]);
        for (u, v) in r0.coeffs().iter().zip(one.coeffs()) {
            assert!((u - v).abs() < 1e-13);
        }
        for (u, v) in r1.coeffs().iter().zip(t.coeffs()) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_detected() {
        let s = JetSpace::get(1, 1).unwrap();
        let z = Jet::constant(&s, 0.0);
        let o = Jet::constant(&s, 1.0);
        let a = vec![vec![o.clone(), o.clone()], vec![o.clone(), o.clone()]];
        assert!(matches!(solve(a, vec![o.clone(), z]), Err(Error::SingularMatrix(_))));
    }
}
