//! Symmetric elliptic coefficient fields `a_{jk}(t, y)` with analytic first
//! derivatives.
//!
//! Fields are evaluated pointwise and return small dense matrices. Composite
//! fields (pull-backs through a change of variables, the weighted global
//! transform) propagate derivatives by the chain rule so that symbol
//! gradients stay exact.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Dense row-major `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Matrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.data.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.get(i, j) * v[i] * v[j];
            }
        }
        acc
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in 0..i {
                let (a, b) = (self.get(i, j), self.get(j, i));
                if (a - b).abs() > tol * (1.0 + a.abs().max(b.abs())) {
                    return false;
                }
            }
        }
        true
    }

    /// `B^T self B`.
    pub fn congruence(&self, b: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    let bk_i = b.get(k, i);
                    if bk_i == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        acc += bk_i * self.get(k, l) * b.get(l, j);
                    }
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A symmetric coefficient field with a declared ellipticity constant `delta`
/// and exact first derivatives.
pub trait CoeffField: Send + Sync {
    fn dim(&self) -> usize;

    fn delta(&self) -> f64;

    fn eval(&self, t: f64, x: &[f64]) -> Matrix;

    fn d_t(&self, t: f64, x: &[f64]) -> Matrix;

    /// Derivative with respect to `x[j]`.
    fn d_x(&self, t: f64, x: &[f64], j: usize) -> Matrix;

    /// True when every entry is independent of `t`.
    fn time_independent(&self) -> bool {
        false
    }

    /// `delta |xi|^2 <= a xi . xi <= delta^{-1} |xi|^2` at one point.
    fn ellipticity_holds(&self, t: f64, x: &[f64], xi: &[f64]) -> bool {
        let q = self.eval(t, x).quadratic_form(xi);
        let n2: f64 = xi.iter().map(|v| v * v).sum();
        let d = self.delta();
        let slack = 1e-12 * n2;
        q >= d * n2 - slack && q <= n2 / d + slack
    }
}

impl<F: CoeffField + ?Sized> CoeffField for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn delta(&self) -> f64 {
        (**self).delta()
    }
    fn eval(&self, t: f64, x: &[f64]) -> Matrix {
        (**self).eval(t, x)
    }
    fn d_t(&self, t: f64, x: &[f64]) -> Matrix {
        (**self).d_t(t, x)
    }
    fn d_x(&self, t: f64, x: &[f64], j: usize) -> Matrix {
        (**self).d_x(t, x, j)
    }
    fn time_independent(&self) -> bool {
        (**self).time_independent()
    }
}

/// Checks symmetry and the ellipticity bounds on a set of sample points.
pub fn verify_field(
    field: &dyn CoeffField,
    points: impl IntoIterator<Item = (f64, Vec<f64>)>,
) -> Result<()> {
    let n = field.dim();
    let mut probes: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    probes.push(vec![1.0; n]);
    probes.push((0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
    for (t, x) in points {
        let a = field.eval(t, &x);
        if !a.is_symmetric(1e-12) {
            return Err(Error::Precondition(format!(
                "coefficient matrix not symmetric at t={t}, x={x:?}"
            )));
        }
        for xi in &probes {
            if !field.ellipticity_holds(t, &x, xi) {
                return Err(Error::Precondition(format!(
                    "ellipticity with delta={} fails at t={t}, x={x:?}",
                    field.delta()
                )));
            }
        }
    }
    Ok(())
}

/// Constant coefficients.
#[derive(Debug, Clone)]
pub struct ConstantField {
    a: Matrix,
    delta: f64,
}

impl ConstantField {
    pub fn new(a: Matrix, delta: f64) -> Result<Self> {
        let f = Self { a, delta };
        verify_field(&f, [(0.0, vec![0.0; f.a.dim()])])?;
        Ok(f)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            a: Matrix::identity(n),
            delta: 1.0,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }
}

impl CoeffField for ConstantField {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn eval(&self, _t: f64, _x: &[f64]) -> Matrix {
        self.a.clone()
    }
    fn d_t(&self, _t: f64, _x: &[f64]) -> Matrix {
        Matrix::zeros(self.a.dim())
    }
    fn d_x(&self, _t: f64, _x: &[f64], _j: usize) -> Matrix {
        Matrix::zeros(self.a.dim())
    }
    fn time_independent(&self) -> bool {
        true
    }
}

/// `a_jj = 1 + 0.25 sin(pi y_j) + 0.1 sin(t)`, off-diagonals zero.
#[derive(Debug, Clone)]
pub struct DiagonalVariable {
    n: usize,
}

impl DiagonalVariable {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl CoeffField for DiagonalVariable {
    fn dim(&self) -> usize {
        self.n
    }
    fn delta(&self) -> f64 {
        0.6
    }
    fn eval(&self, t: f64, x: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(self.n);
        for j in 0..self.n {
            m.set(j, j, 1.0 + 0.25 * (PI * x[j]).sin() + 0.1 * t.sin());
        }
        m
    }
    fn d_t(&self, t: f64, _x: &[f64]) -> Matrix {
        Matrix::identity(self.n).scaled(0.1 * t.cos())
    }
    fn d_x(&self, _t: f64, x: &[f64], j: usize) -> Matrix {
        let mut m = Matrix::zeros(self.n);
        m.set(j, j, 0.25 * PI * (PI * x[j]).cos());
        m
    }
}

/// Eigenvalues 1.5 and 0.75 in a frame rotating in the `(y_1, y_2)` plane,
/// angle `0.3 + 0.5 t + 0.8 y_1 + 0.4 y_n`; remaining diagonal entries 1.
/// In one dimension the field is the `(1,1)` entry of the planar version.
#[derive(Debug, Clone)]
pub struct RotatingAnisotropic {
    n: usize,
}

impl RotatingAnisotropic {
    const L1: f64 = 1.5;
    const L2: f64 = 0.75;

    pub fn new(n: usize) -> Self {
        Self { n }
    }

    fn angle(&self, t: f64, x: &[f64]) -> f64 {
        0.3 + 0.5 * t + 0.8 * x[0] + 0.4 * x[self.n - 1]
    }

    fn angle_dx(&self, j: usize) -> f64 {
        let mut d = 0.0;
        if j == 0 {
            d += 0.8;
        }
        if j == self.n - 1 {
            d += 0.4;
        }
        d
    }

    fn planar(&self, theta: f64) -> [f64; 3] {
        let (s, c) = theta.sin_cos();
        [
            Self::L1 * c * c + Self::L2 * s * s,
            (Self::L1 - Self::L2) * c * s,
            Self::L1 * s * s + Self::L2 * c * c,
        ]
    }

    fn planar_dtheta(&self, theta: f64) -> [f64; 3] {
        let (s2, c2) = (2.0 * theta).sin_cos();
        let d = Self::L1 - Self::L2;
        [-d * s2, d * c2, d * s2]
    }

    fn assemble(&self, p: [f64; 3], rest: f64) -> Matrix {
        let mut m = Matrix::zeros(self.n);
        m.set(0, 0, p[0]);
        if self.n >= 2 {
            m.set(0, 1, p[1]);
            m.set(1, 0, p[1]);
            m.set(1, 1, p[2]);
        }
        for j in 2..self.n {
            m.set(j, j, rest);
        }
        m
    }
}

impl CoeffField for RotatingAnisotropic {
    fn dim(&self) -> usize {
        self.n
    }
    fn delta(&self) -> f64 {
        0.6
    }
    fn eval(&self, t: f64, x: &[f64]) -> Matrix {
        self.assemble(self.planar(self.angle(t, x)), 1.0)
    }
    fn d_t(&self, t: f64, x: &[f64]) -> Matrix {
        self.assemble(self.planar_dtheta(self.angle(t, x)), 0.0)
            .scaled(0.5)
    }
    fn d_x(&self, t: f64, x: &[f64], j: usize) -> Matrix {
        self.assemble(self.planar_dtheta(self.angle(t, x)), 0.0)
            .scaled(self.angle_dx(j))
    }
}

/// `coef * t^t_pow * prod_i y_i^{y_pows[i]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    #[serde(default)]
    pub t_pow: u32,
    #[serde(default)]
    pub y_pows: Vec<u32>,
}

impl Monomial {
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let mut v = self.coef * t.powi(self.t_pow as i32);
        for (xi, p) in x.iter().zip(&self.y_pows) {
            v *= xi.powi(*p as i32);
        }
        v
    }

    fn d_t(&self, t: f64, x: &[f64]) -> f64 {
        if self.t_pow == 0 {
            return 0.0;
        }
        let lowered = Monomial {
            coef: self.coef * self.t_pow as f64,
            t_pow: self.t_pow - 1,
            y_pows: self.y_pows.clone(),
        };
        lowered.eval(t, x)
    }

    fn d_x(&self, t: f64, x: &[f64], j: usize) -> f64 {
        let p = self.y_pows.get(j).copied().unwrap_or(0);
        if p == 0 {
            return 0.0;
        }
        let mut pows = self.y_pows.clone();
        pows[j] -= 1;
        Monomial {
            coef: self.coef * p as f64,
            t_pow: self.t_pow,
            y_pows: pows,
        }
        .eval(t, x)
    }
}

/// One upper-triangular entry `(row, col)` of a polynomial table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyEntry {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<Monomial>,
}

/// Polynomial coefficient table; unlisted entries are zero and the lower
/// triangle mirrors the upper one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialField {
    pub n: usize,
    pub delta: f64,
    pub entries: Vec<PolyEntry>,
}

impl PolynomialField {
    /// Validates indices and checks ellipticity on a `5^n x 3` lattice over
    /// `[-1, 1]^n x [0, 1]`.
    pub fn validated(self) -> Result<Self> {
        if self.n == 0 {
            return Err(domain("polynomial field needs n >= 1"));
        }
        for e in &self.entries {
            if e.row >= self.n || e.col >= self.n || e.row > e.col {
                return Err(domain(format!(
                    "polynomial entry ({}, {}) must satisfy row <= col < n",
                    e.row, e.col
                )));
            }
        }
        let mut pts = Vec::new();
        let levels = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let count = 5usize.pow(self.n as u32);
        for t in [0.0, 0.5, 1.0] {
            for idx in 0..count {
                let mut k = idx;
                let x: Vec<f64> = (0..self.n)
                    .map(|_| {
                        let v = levels[k % 5];
                        k /= 5;
                        v
                    })
                    .collect();
                pts.push((t, x));
            }
        }
        verify_field(&self, pts)?;
        Ok(self)
    }

    fn build(&self, f: impl Fn(&Monomial) -> f64) -> Matrix {
        let mut m = Matrix::zeros(self.n);
        for e in &self.entries {
            let v: f64 = e.terms.iter().map(&f).sum();
            m.add_to(e.row, e.col, v);
            if e.row != e.col {
                m.add_to(e.col, e.row, v);
            }
        }
        m
    }
}

impl CoeffField for PolynomialField {
    fn dim(&self) -> usize {
        self.n
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn eval(&self, t: f64, x: &[f64]) -> Matrix {
        self.build(|m| m.eval(t, x))
    }
    fn d_t(&self, t: f64, x: &[f64]) -> Matrix {
        self.build(|m| m.d_t(t, x))
    }
    fn d_x(&self, t: f64, x: &[f64], j: usize) -> Matrix {
        self.build(|m| m.d_x(t, x, j))
    }
    fn time_independent(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.terms.iter().all(|m| m.t_pow == 0))
    }
}

/// Serializable description of a coefficient field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoeffPreset {
    Identity { n: usize },
    DiagonalVariable { n: usize },
    RotatingAnisotropic { n: usize },
    Constant { rows: Vec<Vec<f64>>, delta: f64 },
    Polynomial(PolynomialField),
}

impl CoeffPreset {
    pub fn build(&self) -> Result<Arc<dyn CoeffField>> {
        let check_n = |n: usize| {
            if n == 0 || n > 3 {
                Err(domain(format!("spatial dimension must be 1, 2 or 3, got {n}")))
            } else {
                Ok(n)
            }
        };
        Ok(match self {
            CoeffPreset::Identity { n } => Arc::new(ConstantField::identity(check_n(*n)?)),
            CoeffPreset::DiagonalVariable { n } => Arc::new(DiagonalVariable::new(check_n(*n)?)),
            CoeffPreset::RotatingAnisotropic { n } => {
                Arc::new(RotatingAnisotropic::new(check_n(*n)?))
            }
            CoeffPreset::Constant { rows, delta } => {
                Arc::new(ConstantField::new(Matrix::from_rows(rows)?, *delta)?)
            }
            CoeffPreset::Polynomial(p) => {
                check_n(p.n)?;
                Arc::new(p.clone().validated()?)
            }
        })
    }
}

/// A smooth change of variables `y = phi(t, x)` used to pull fields back.
pub trait PointMap: Send + Sync {
    fn map(&self, t: f64, x: &[f64]) -> Vec<f64>;

    /// `dy_i / dx_j` as a matrix with row `i`, column `j`.
    fn jacobian(&self, t: f64, x: &[f64]) -> Matrix;

    /// `dy_i / dt`.
    fn time_derivative(&self, t: f64, x: &[f64]) -> Vec<f64>;
}

/// `x -> a(t, phi(t, x))`.
pub struct Pullback<F, M> {
    pub field: F,
    pub map: M,
}

impl<F: CoeffField, M: PointMap> CoeffField for Pullback<F, M> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn delta(&self) -> f64 {
        self.field.delta()
    }
    fn eval(&self, t: f64, x: &[f64]) -> Matrix {
        self.field.eval(t, &self.map.map(t, x))
    }
    fn d_t(&self, t: f64, x: &[f64]) -> Matrix {
        let y = self.map.map(t, x);
        let mut out = self.field.d_t(t, &y);
        for (i, dyi) in self.map.time_derivative(t, x).iter().enumerate() {
            if *dyi != 0.0 {
                out.axpy(*dyi, &self.field.d_x(t, &y, i));
            }
        }
        out
    }
    fn d_x(&self, t: f64, x: &[f64], j: usize) -> Matrix {
        let y = self.map.map(t, x);
        let jac = self.map.jacobian(t, x);
        let mut out = Matrix::zeros(self.dim());
        for i in 0..self.dim() {
            let dyi = jac.get(i, j);
            if dyi != 0.0 {
                out.axpy(dyi, &self.field.d_x(t, &y, i));
            }
        }
        out
    }
    fn time_independent(&self) -> bool {
        false
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn fd_check(field: &dyn CoeffField, t: f64, x: &[f64]) {
        let h = 1e-6;
        let n = field.dim();
        let ft = |tt: f64| field.eval(tt, x);
        let dt = field.d_t(t, x);
        for i in 0..n {
            for j in 0..n {
                let fd = (ft(t + h).get(i, j) - ft(t - h).get(i, j)) / (2.0 * h);
                assert!((fd - dt.get(i, j)).abs() < 1e-7, "d_t ({i},{j}): {fd} vs {}", dt.get(i, j));
            }
        }
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let d = field.d_x(t, x, k);
            let (ap, am) = (field.eval(t, &xp), field.eval(t, &xm));
            for i in 0..n {
                for j in 0..n {
                    let fd = (ap.get(i, j) - am.get(i, j)) / (2.0 * h);
                    assert!((fd - d.get(i, j)).abs() < 1e-7, "d_x{k} ({i},{j}): {fd} vs {}", d.get(i, j));
                }
            }
        }
    }

    #[test]
    fn presets_have_consistent_derivatives() {
        for n in 1..=3 {
            let x: Vec<f64> = (0..n).map(|i| 0.1 + 0.2 * i as f64).collect();
            fd_check(&DiagonalVariable::new(n), 0.3, &x);
            fd_check(&RotatingAnisotropic::new(n), 0.3, &x);
            fd_check(&ConstantField::identity(n), 0.3, &x);
        }
    }

    #[test]
    fn presets_are_elliptic() {
        for n in 1..=3 {
            let pts = (0..50).map(|k| {
                let s = k as f64 / 49.0;
                (s, (0..n).map(|i| 2.0 * s - 1.0 + 0.1 * i as f64).collect::<Vec<_>>())
            });
            verify_field(&RotatingAnisotropic::new(n), pts.clone()).unwrap();
            verify_field(&DiagonalVariable::new(n), pts).unwrap();
        }
    }

    #[test]
    fn polynomial_table() {
        let json = r#"{"n":2,"delta":0.5,"entries":[
            {"row":0,"col":0,"terms":[{"coef":1.0},{"coef":0.2,"y_pows":[2,0]}]},
            {"row":0,"col":1,"terms":[{"coef":0.1,"t_pow":1,"y_pows":[0,1]}]},
            {"row":1,"col":1,"terms":[{"coef":1.0}]}]}"#;
        let p: PolynomialField = serde_json::from_str(json).unwrap();
        let p = p.validated().unwrap();
        let a = p.eval(0.5, &[0.5, 1.0]);
        assert!((a.get(0, 0) - 1.05).abs() < 1e-15);
        assert!((a.get(1, 0) - 0.05).abs() < 1e-15);
        fd_check(&p, 0.4, &[0.3, -0.2]);
        assert!(!p.time_independent());
    }

    #[test]
    fn polynomial_rejects_non_elliptic() {
        let json = r#"{"n":1,"delta":0.5,"entries":[
            {"row":0,"col":0,"terms":[{"coef":1.0,"y_pows":[1]}]}]}"#;
        let p: PolynomialField = serde_json::from_str(json).unwrap();
        assert!(matches!(p.validated(), Err(Error::Precondition(_))));
    }

    #[test]
    fn preset_json_rejects_unknown_fields() {
        let bad = serde_json::from_str::<CoeffPreset>(r#"{"preset":"identity","n":2,"extra":1}"#);
        assert!(bad.is_err());
        let ok: CoeffPreset = serde_json::from_str(r#"{"preset":"rotating-anisotropic","n":2}"#).unwrap();
        assert_eq!(ok.build().unwrap().dim(), 2);
    }

    #[test]
    fn congruence_matches_direct_form() {
        let a = Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 0.4], vec![0.0, 1.0]]).unwrap();
        let m = a.congruence(&b);
        let xi = [0.7, -1.3];
        let eta = b.matvec(&xi);
        assert!((m.quadratic_form(&xi) - a.quadratic_form(&eta)).abs() < 1e-14);
        assert!(m.is_symmetric(1e-15));
    }
}
