//! Truncated multivariate Taylor jets holding raw partial derivatives.
//!
//! Coefficients are stored densely in graded order, so the jet of order `d - 1`
//! over the same variables is a prefix of the jet of order `d`.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

pub const MAX_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("jet order {requested} exceeds supported maximum {max}")]
    Order { requested: usize, max: usize },
    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    Index { degree: usize, order: usize },
}

fn domain(msg: impl Into<String>) -> JetError {
    JetError::Domain(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: &[u8]) -> Self {
        MultiIndex(exponents.to_vec())
    }

    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        MultiIndex(e)
    }

    /// Index with the listed variables each incremented once (repeats allowed).
    pub fn from_vars(nvars: usize, vars: &[usize]) -> Self {
        let mut e = vec![0u8; nvars];
        for &v in vars {
            e[v] += 1;
        }
        MultiIndex(e)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }
}

/// Index tables shared by every jet with the same variable count and order.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    // len_upto[d] = number of indices of degree <= d
    len_upto: Vec<usize>,
    // row i holds (j, k, binomial factor) with out[k] += f * a[i] * b[j]
    mul_rows: Vec<(u32, u32)>,
    mul: Vec<(u32, u32, f64)>,
    // by_vars[d][v1 * nvars^(d-1) + ...] = position of the index with those variables, d <= 4
    by_vars: Vec<Vec<u32>>,
    // shift[v][k] = position of indices[k] + e_v, for k < len_upto[order - 1]
    shift: Vec<Vec<u32>>,
}

static SPACES: Lazy<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn binom(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn enumerate(nvars: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == nvars {
        prefix.push(degree as u8);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for e in (0..=degree).rev() {
        prefix.push(e as u8);
        enumerate(nvars, degree - e, prefix, out);
        prefix.pop();
    }
}

impl JetSpace {
    pub fn get(nvars: usize, order: usize) -> Result<Arc<JetSpace>, JetError> {
        if order > MAX_ORDER {
            return Err(JetError::Order {
                requested: order,
                max: MAX_ORDER,
            });
        }
        let mut cache = SPACES.lock().expect("jet space cache poisoned");
        Ok(cache
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, order)))
            .clone())
    }

    fn build(nvars: usize, order: usize) -> JetSpace {
        let mut indices = Vec::new();
        let mut len_upto = Vec::with_capacity(order + 1);
        for d in 0..=order {
            if nvars == 0 {
                if d == 0 {
                    indices.push(MultiIndex(vec![]));
                }
            } else {
                enumerate(nvars, d, &mut Vec::new(), &mut indices);
            }
            len_upto.push(indices.len());
        }
        let lookup: HashMap<MultiIndex, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();

        let degs: Vec<usize> = indices.iter().map(|m| m.degree()).collect();
        let mut mul = Vec::new();
        let mut mul_rows = Vec::with_capacity(indices.len());
        for (i, a) in indices.iter().enumerate() {
            let start = mul.len() as u32;
            for (j, b) in indices.iter().enumerate() {
                if degs[i] + degs[j] > order {
                    continue;
                }
                let sum: Vec<u8> = a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect();
                let f: f64 = a
                    .0
                    .iter()
                    .zip(&sum)
                    .map(|(&ai, &si)| binom(si as usize, ai as usize))
                    .product();
                let k = lookup[&MultiIndex(sum)];
                mul.push((j as u32, k as u32, f));
            }
            mul_rows.push((start, mul.len() as u32));
        }

        let by_vars = (0..=order.min(4))
            .map(|d| {
                let count = nvars.pow(d as u32);
                (0..count)
                    .map(|mut code| {
                        let mut e = vec![0u8; nvars];
                        for _ in 0..d {
                            e[code % nvars] += 1;
                            code /= nvars;
                        }
                        lookup[&MultiIndex(e)] as u32
                    })
                    .collect()
            })
            .collect();

        let lower = if order == 0 { 0 } else { len_upto[order - 1] };
        let shift = (0..nvars)
            .map(|v| {
                (0..lower)
                    .map(|k| {
                        let mut e = indices[k].0.clone();
                        e[v] += 1;
                        lookup[&MultiIndex(e)] as u32
                    })
                    .collect()
            })
            .collect();

        JetSpace {
            nvars,
            order,
            indices,
            lookup,
            len_upto,
            mul_rows,
            mul,
            by_vars,
            shift,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, idx: &MultiIndex) -> Option<usize> {
        self.lookup.get(idx).copied()
    }
}

#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, value: f64) -> Jet {
        let mut c = vec![0.0; space.len()];
        c[0] = value;
        Jet {
            space: space.clone(),
            c,
        }
    }

    pub fn variable(space: &Arc<JetSpace>, var: usize, value: f64) -> Jet {
        let mut j = Jet::constant(space, value);
        if space.order >= 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Raw partial derivative for `idx`.
    pub fn extract(&self, idx: &MultiIndex) -> Result<f64, JetError> {
        let degree = idx.degree();
        if degree > self.space.order || idx.0.len() != self.space.nvars {
            return Err(JetError::Index {
                degree,
                order: self.space.order,
            });
        }
        Ok(self.c[self.space.lookup[idx]])
    }

    /// Partial derivative along the listed variables (repeats allowed).
    pub fn d(&self, vars: &[usize]) -> f64 {
        if let Some(table) = self.space.by_vars.get(vars.len()) {
            let code = vars.iter().rev().fold(0, |acc, &v| acc * self.space.nvars + v);
            return self.c[table[code] as usize];
        }
        let idx = MultiIndex::from_vars(self.space.nvars, vars);
        self.c[self.space.lookup[&idx]]
    }

    /// The jet of ∂f/∂x_var, one order lower.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.space.order >= 1, "cannot differentiate an order-0 jet");
        let space = JetSpace::get(self.space.nvars, self.space.order - 1).expect("lower order");
        let c = self.space.shift[var]
            .iter()
            .map(|&k| self.c[k as usize])
            .collect();
        Jet { space, c }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.space.order {
            return self.clone();
        }
        let space = JetSpace::get(self.space.nvars, order).expect("lower order");
        let c = self.c[..self.space.len_upto[order]].to_vec();
        Jet { space, c }
    }

    pub fn lift(&self, value: f64) -> Jet {
        Jet::constant(&self.space, value)
    }

    /// Re-expresses this jet in `space` (truncating to its order), with variable i renamed to `vars[i]`.
    pub fn embed(&self, space: &Arc<JetSpace>, vars: &[usize]) -> Jet {
        assert_eq!(vars.len(), self.space.nvars, "one target variable per source variable");
        assert!(self.space.order >= space.order, "embedding cannot raise the order");
        let mut c = vec![0.0; space.len()];
        let top = self.space.order.min(space.order);
        for (k, idx) in self.space.indices[..self.space.len_upto[top]].iter().enumerate() {
            let mut e = vec![0u8; space.nvars];
            for (i, &p) in idx.0.iter().enumerate() {
                e[vars[i]] += p;
            }
            c[space.lookup[&MultiIndex(e)]] = self.c[k];
        }
        Jet {
            space: space.clone(),
            c,
        }
    }

    fn same_space(&self, other: &Jet) {
        debug_assert!(
            self.space.nvars == other.space.nvars && self.space.order == other.space.order,
            "jet spaces differ"
        );
    }

    fn mul_ref(&self, other: &Jet) -> Jet {
        self.same_space(other);
        let mut out = vec![0.0; self.c.len()];
        let nz = |c: &[f64]| c.iter().filter(|v| **v != 0.0).count();
        let (a, b) = if nz(&self.c) <= nz(&other.c) {
            (&self.c, &other.c)
        } else {
            (&other.c, &self.c)
        };
        for (i, &(start, end)) in self.space.mul_rows.iter().enumerate() {
            let ai = a[i];
            if ai == 0.0 {
                continue;
            }
            for &(j, k, f) in &self.space.mul[start as usize..end as usize] {
                out[k as usize] += f * ai * b[j as usize];
            }
        }
        Jet {
            space: self.space.clone(),
            c: out,
        }
    }

    /// φ∘f given φ^(k)(f0) for k = 0..=order.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let d = self.space.order;
        let mut h = self.clone();
        h.c[0] = 0.0;
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let mut acc = self.lift(derivs[d] / fact(d));
        for k in (0..d).rev() {
            acc = acc.mul_ref(&h);
            acc.c[0] += derivs[k] / fact(k);
        }
        acc
    }

    fn power_derivs(&self, a: f64) -> Vec<f64> {
        let f0 = self.c[0];
        let mut out = Vec::with_capacity(self.space.order + 1);
        let mut fall = 1.0;
        for k in 0..=self.space.order {
            out.push(fall * f0.powf(a - k as f64));
            fall *= a - k as f64;
        }
        out
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Jet) -> bool {
        self.space.nvars == other.space.nvars
            && self.space.order == other.space.order
            && self.c == other.c
    }
}

/// Arithmetic shared by plain floats and jets so metric formulas are written once.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    fn lift(&self, c: f64) -> Self;
    fn sqrt(&self) -> Result<Self, JetError>;
    fn exp(&self) -> Self;
    fn ln(&self) -> Result<Self, JetError>;
    fn powf(&self, a: f64) -> Result<Self, JetError>;
    fn powi(&self, k: i32) -> Result<Self, JetError>;
    fn recip(&self) -> Result<Self, JetError>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;

    fn checked_div(&self, other: &Self) -> Result<Self, JetError> {
        Ok(self.clone() * other.recip()?)
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> f64 {
        c
    }
    fn sqrt(&self) -> Result<f64, JetError> {
        if *self < 0.0 {
            return Err(domain(format!("sqrt of negative value {self}")));
        }
        Ok(f64::sqrt(*self))
    }
    fn exp(&self) -> f64 {
        f64::exp(*self)
    }
    fn ln(&self) -> Result<f64, JetError> {
        if *self <= 0.0 {
            return Err(domain(format!("ln of non-positive value {self}")));
        }
        Ok(f64::ln(*self))
    }
    fn powf(&self, a: f64) -> Result<f64, JetError> {
        if *self < 0.0 || (*self == 0.0 && a < 0.0) {
            return Err(domain(format!("pow({self}, {a})")));
        }
        Ok(f64::powf(*self, a))
    }
    fn powi(&self, k: i32) -> Result<f64, JetError> {
        if *self == 0.0 && k < 0 {
            return Err(domain("negative power of zero"));
        }
        Ok(f64::powi(*self, k))
    }
    fn recip(&self) -> Result<f64, JetError> {
        if *self == 0.0 {
            return Err(domain("division by zero"));
        }
        Ok(1.0 / self)
    }
    fn sin(&self) -> f64 {
        f64::sin(*self)
    }
    fn cos(&self) -> f64 {
        f64::cos(*self)
    }
    fn sinh(&self) -> f64 {
        f64::sinh(*self)
    }
    fn cosh(&self) -> f64 {
        f64::cosh(*self)
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.c[0]
    }

    fn lift(&self, c: f64) -> Jet {
        Jet::lift(self, c)
    }

    fn sqrt(&self) -> Result<Jet, JetError> {
        let f0 = self.c[0];
        if f0 < 0.0 || (f0 == 0.0 && self.space.order > 0) {
            return Err(domain(format!("sqrt at {f0}")));
        }
        if self.space.order == 0 {
            return Ok(self.lift(f0.sqrt()));
        }
        Ok(self.compose(&self.power_derivs(0.5)))
    }

    fn exp(&self) -> Jet {
        let e = self.c[0].exp();
        self.compose(&vec![e; self.space.order + 1])
    }

    fn ln(&self) -> Result<Jet, JetError> {
        let f0 = self.c[0];
        if f0 <= 0.0 {
            return Err(domain(format!("ln at {f0}")));
        }
        let mut d = vec![f0.ln()];
        let mut fact = 1.0;
        for k in 1..=self.space.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            d.push(sign * fact / f0.powi(k as i32));
            fact *= k as f64;
        }
        Ok(self.compose(&d))
    }

    fn powf(&self, a: f64) -> Result<Jet, JetError> {
        let f0 = self.c[0];
        if f0 < 0.0 || (f0 == 0.0 && (a < self.space.order as f64 || a.fract() != 0.0)) {
            return Err(domain(format!("pow({f0}, {a})")));
        }
        Ok(self.compose(&self.power_derivs(a)))
    }

    fn powi(&self, k: i32) -> Result<Jet, JetError> {
        let f0 = self.c[0];
        if f0 == 0.0 && k < 0 {
            return Err(domain("negative power of zero"));
        }
        let mut d = Vec::with_capacity(self.space.order + 1);
        let mut fall = 1.0;
        for j in 0..=self.space.order {
            let e = k - j as i32;
            d.push(if fall == 0.0 { 0.0 } else { fall * f0.powi(e) });
            fall *= e as f64;
        }
        Ok(self.compose(&d))
    }

    fn recip(&self) -> Result<Jet, JetError> {
        if self.c[0] == 0.0 {
            return Err(domain("division by zero"));
        }
        self.powi(-1)
    }

    fn sin(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        let cyc = [s, c, -s, -c];
        self.compose(&(0..=self.space.order).map(|k| cyc[k % 4]).collect::<Vec<_>>())
    }

    fn cos(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        let cyc = [c, -s, -c, s];
        self.compose(&(0..=self.space.order).map(|k| cyc[k % 4]).collect::<Vec<_>>())
    }

    fn sinh(&self) -> Jet {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        let cyc = [s, c];
        self.compose(&(0..=self.space.order).map(|k| cyc[k % 2]).collect::<Vec<_>>())
    }

    fn cosh(&self) -> Jet {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        let cyc = [c, s];
        self.compose(&(0..=self.space.order).map(|k| cyc[k % 2]).collect::<Vec<_>>())
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.same_space(&rhs);
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self.same_space(&rhs);
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a -= b;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_ref(&rhs)
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
        out
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&rhs.c) {
            *a -= b;
        }
        out
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_ref(rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for a in &mut self.c {
            *a = -*a;
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for a in &mut self.c {
            *a *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(mut self, rhs: f64) -> Jet {
        for a in &mut self.c {
            *a /= rhs;
        }
        self
    }
}

/// Evaluates `program` on seeded variables at `point`, returning all partials up to `order`.
pub fn jet_eval<E, P>(point: &[f64], order: usize, program: P) -> Result<Jet, E>
where
    E: From<JetError>,
    P: FnOnce(&[Jet]) -> Result<Jet, E>,
{
    let space = JetSpace::get(point.len(), order)?;
    let vars: Vec<Jet> = point
        .iter()
        .enumerate()
        .map(|(i, &p)| Jet::variable(&space, i, p))
        .collect();
    program(&vars)
}

pub fn jet_extract(jet: &Jet, idx: &MultiIndex) -> Result<f64, JetError> {
    jet.extract(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(point: &[f64], order: usize, f: impl FnOnce(&[Jet]) -> Jet) -> Jet {
        jet_eval::<JetError, _>(point, order, |v| Ok(f(v))).unwrap()
    }

    #[test]
    fn embed_renames_variables() {
        let j = eval(&[2.0, 3.0], 3, |v| &v[0] * &(&v[1] * &v[1]));
        let wide = JetSpace::get(4, 3).unwrap();
        let e = j.embed(&wide, &[1, 3]);
        assert_eq!(e.d(&[1, 3]), 6.0);
        assert_eq!(e.d(&[1, 3, 3]), 2.0);
        assert_eq!(e.d(&[0]), 0.0);
        assert_eq!(e.value(), 18.0);
    }

    #[test]
    fn square_partials() {
        let j = eval(&[3.0], 2, |v| &v[0] * &v[0]);
        assert_eq!(j.coeffs(), &[9.0, 6.0, 2.0]);
    }

    #[test]
    fn mixed_partial_of_x_y_squared() {
        let j = eval(&[2.0, 3.0], 3, |v| &v[0] * &(&v[1] * &v[1]));
        assert_eq!(j.extract(&MultiIndex::new(&[1, 1])).unwrap(), 6.0);
        assert_eq!(j.extract(&MultiIndex::new(&[1, 2])).unwrap(), 2.0);
        assert_eq!(j.extract(&MultiIndex::new(&[0, 2])).unwrap(), 4.0);
    }

    #[test]
    fn fourth_power_third_derivative() {
        let j = eval(&[1.0], 4, |v| v[0].powi(4).unwrap());
        assert_eq!(j.d(&[0, 0, 0]), 24.0);
        let k = eval(&[1.0], 4, |v| {
            let s = &v[0] * &v[0];
            &s * &s
        });
        assert_eq!(k.d(&[0, 0, 0]), 24.0);
        assert_eq!(k.d(&[0, 0, 0, 0]), 24.0);
    }

    #[test]
    fn extract_examples() {
        let j = eval(&[3.0], 2, |v| &v[0] * &v[0]);
        assert_eq!(jet_extract(&j, &MultiIndex::new(&[2])).unwrap(), 2.0);
        let e = eval(&[0.0], 3, |v| v[0].exp());
        assert_eq!(jet_extract(&e, &MultiIndex::new(&[3])).unwrap(), 1.0);
        let s = eval(&[1.0], 2, |v| v[0].sinh());
        assert!((s.d(&[0]) - 1.0f64.cosh()).abs() < 1e-15);
        assert!((s.d(&[0]) - 1.5430806).abs() < 1e-7);
    }

    #[test]
    fn index_error_on_high_degree() {
        let j = eval(&[1.0], 2, |v| v[0].clone());
        assert!(matches!(
            j.extract(&MultiIndex::new(&[3])),
            Err(JetError::Index { .. })
        ));
    }

    #[test]
    fn order_and_domain_errors() {
        let r = jet_eval::<JetError, _>(&[1.0], MAX_ORDER + 1, |v| Ok(v[0].clone()));
        assert!(matches!(r, Err(JetError::Order { .. })));
        let r = jet_eval::<JetError, _>(&[-1.0], 2, |v| v[0].sqrt());
        assert!(matches!(r, Err(JetError::Domain(_))));
        let r = jet_eval::<JetError, _>(&[0.0], 2, |v| v[0].recip());
        assert!(matches!(r, Err(JetError::Domain(_))));
        let r = jet_eval::<JetError, _>(&[0.0], 2, |v| v[0].ln());
        assert!(matches!(r, Err(JetError::Domain(_))));
    }

    #[test]
    fn dimension_counts_match_binomials() {
        for (nv, d) in [(2, 4), (4, 4), (6, 4), (3, 2)] {
            let s = JetSpace::get(nv, d).unwrap();
            let expect = (1..=d).fold(1usize, |acc, k| acc * (nv + k) / k);
            assert_eq!(s.len(), expect);
        }
    }

    #[test]
    fn univariate_primitives_match_closed_forms() {
        let x0 = 0.7;
        let cases: Vec<(Box<dyn Fn(&Jet) -> Jet>, Box<dyn Fn(f64, usize) -> f64>)> = vec![
            (
                Box::new(|x: &Jet| x.sin()),
                Box::new(|x: f64, k| [x.sin(), x.cos(), -x.sin(), -x.cos()][k % 4]),
            ),
            (
                Box::new(|x: &Jet| x.cos()),
                Box::new(|x: f64, k| [x.cos(), -x.sin(), -x.cos(), x.sin()][k % 4]),
            ),
            (
                Box::new(|x: &Jet| x.cosh()),
                Box::new(|x: f64, k| if k % 2 == 0 { x.cosh() } else { x.sinh() }),
            ),
            (
                Box::new(|x: &Jet| x.ln().unwrap()),
                Box::new(|x: f64, k| match k {
                    0 => x.ln(),
                    1 => 1.0 / x,
                    2 => -1.0 / (x * x),
                    3 => 2.0 / x.powi(3),
                    _ => -6.0 / x.powi(4),
                }),
            ),
            (
                Box::new(|x: &Jet| x.sqrt().unwrap()),
                Box::new(|x: f64, k| match k {
                    0 => x.sqrt(),
                    1 => 0.5 * x.powf(-0.5),
                    2 => -0.25 * x.powf(-1.5),
                    3 => 0.375 * x.powf(-2.5),
                    _ => -0.9375 * x.powf(-3.5),
                }),
            ),
        ];
        for (f, df) in &cases {
            let j = eval(&[x0], 4, |v| f(&v[0]));
            for k in 0..=4 {
                let got = j.coeffs()[k];
                let want = df(x0, k);
                assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()), "k={k}");
            }
        }
    }

    #[test]
    fn chain_rule_on_polynomials_is_exact() {
        // f(g(x, y)) with g = x + 2xy, f(t) = t^3 - t, compared to the expanded polynomial
        let p = [0.5, -1.25];
        let composed = eval(&p, 4, |v| {
            let g = &v[0] + &((&v[0] * &v[1]) * 2.0);
            let g3 = &(&g * &g) * &g;
            g3 - g
        });
        let expanded = eval(&p, 4, |v| {
            let x = &v[0];
            let y = &v[1];
            let one = x.lift(1.0);
            let t = &one + &(y.clone() * 2.0);
            let x3 = &(x * x) * x;
            let t3 = &(&t * &t) * &t;
            &x3 * &t3 - x * &t
        });
        for (a, b) in composed.coeffs().iter().zip(expanded.coeffs()) {
            assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn division_and_derivative_prefix() {
        let j = eval(&[1.5, 0.5], 3, |v| v[0].checked_div(&v[1]).unwrap());
        // d/dy (x/y) = -x/y^2
        assert!((j.d(&[1]) + 1.5 / 0.25).abs() < 1e-12);
        let dy = j.derivative(1);
        assert_eq!(dy.order(), 2);
        assert!((dy.value() - j.d(&[1])).abs() < 1e-15);
        assert!((dy.d(&[1]) - j.d(&[1, 1])).abs() < 1e-15);
        assert!((dy.d(&[0, 1]) - j.d(&[0, 1, 1])).abs() < 1e-15);
        let t = j.truncate(1);
        assert_eq!(t.coeffs(), &j.coeffs()[..3]);
    }

    proptest! {
        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, x in 0.2f64..2.0, y in -1.0f64..1.0) {
            let f = |v: &[Jet]| (&v[0] * &v[1]).exp() + v[0].sqrt().unwrap();
            let g = |v: &[Jet]| v[1].sin() * v[0].ln().unwrap();
            let fj = eval(&[x, y], 3, |v| f(v));
            let gj = eval(&[x, y], 3, |v| g(v));
            let hj = eval(&[x, y], 3, |v| f(v) * a + g(v) * b);
            for k in 0..hj.coeffs().len() {
                let lin = a * fj.coeffs()[k] + b * gj.coeffs()[k];
                prop_assert!((hj.coeffs()[k] - lin).abs() <= 1e-12 * (1.0 + lin.abs()));
            }
        }

        #[test]
        fn first_partials_match_central_differences(x in 0.3f64..2.0, y in -1.0f64..1.0) {
            let f = |x: f64, y: f64| (x * y).cosh() / (1.0 + x * x).sqrt() + (x + y * y).ln();
            let j = eval(&[x, y], 2, |v| {
                let one = v[0].lift(1.0);
                let num = (&v[0] * &v[1]).cosh();
                let den = (&one + &(&v[0] * &v[0])).sqrt().unwrap();
                num.checked_div(&den).unwrap() + (&v[0] + &(&v[1] * &v[1])).ln().unwrap()
            });
            let h = 1e-5;
            let fx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
            let fy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
            prop_assert!((j.d(&[0]) - fx).abs() < 1e-8 * (1.0 + fx.abs()));
            prop_assert!((j.d(&[1]) - fy).abs() < 1e-8 * (1.0 + fy.abs()));
            let fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
            prop_assert!((j.d(&[0, 1]) - fxy).abs() < 1e-5 * (1.0 + fxy.abs()));
        }
    }
}
