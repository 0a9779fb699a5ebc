//! Symbols of the conjugated multi-term operator in Holmgren coordinates,
//! their exact partial derivatives and Poisson brackets.
//!
//! The weighted principal symbol is written through the complex covector
//! `zeta = B xi + i |sigma| (x_n - 2X) e`, where `B` is the chain-rule matrix
//! of the Holmgren map and `e = (2c x', 1)`. Then
//! `p_psi = sum_l q_l (1 + i tau)^{alpha_l} + zeta^T A zeta`.

mod bracket;
mod sampling;

pub use bracket::{
    bracket, poisson_bracket, principal_closed_form, tangential_correction, BracketMode, BracketReport, RealGradient,
};
pub use sampling::*;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoeffField;
use crate::error::{domain, Error, Result};
use crate::fractional::MultiTermSpec;
use crate::geometry::HolmgrenMap;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// A cotangent sample `(t, x, tau, xi, sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub tau: f64,
    pub xi: Vec<f64>,
    pub sigma: f64,
}

impl PhasePoint {
    pub fn new(t: f64, x: Vec<f64>, tau: f64, xi: Vec<f64>, sigma: f64) -> Result<Self> {
        let p = Self { t, x, tau, xi, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(domain("phase point needs at least one spatial coordinate"));
        }
        if self.x.len() != self.xi.len() {
            return Err(Error::Shape {
                expected: self.x.len(),
                got: self.xi.len(),
            });
        }
        let finite = self.t.is_finite()
            && self.tau.is_finite()
            && self.sigma.is_finite()
            && self.x.iter().chain(&self.xi).all(|v| v.is_finite());
        if !finite {
            return Err(domain("phase point has non-finite components"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn xi_norm2(&self) -> f64 {
        self.xi.iter().map(|v| v * v).sum()
    }

    /// `|xi|^2 + sigma^2 + |tau|^alpha`.
    pub fn scale_base(&self, alpha: f64) -> f64 {
        self.xi_norm2() + self.sigma * self.sigma + self.tau.abs().powf(alpha)
    }
}

/// Weight `psi(x_n) = (x_n - 2X)^2 / 2 + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanWeight {
    #[serde(rename = "X")]
    pub x_thick: f64,
    #[serde(default)]
    pub shift: f64,
}

impl CarlemanWeight {
    pub fn new(x_thick: f64) -> Result<Self> {
        if !(x_thick > 0.0 && x_thick.is_finite()) {
            return Err(domain(format!("layer thickness must be positive, got {x_thick}")));
        }
        Ok(Self {
            x_thick,
            shift: 0.0,
        })
    }

    pub fn shifted(self, shift: f64) -> Self {
        Self { shift, ..self }
    }

    /// `x_n - 2X`.
    pub fn x_tilde(&self, xn: f64) -> f64 {
        xn - 2.0 * self.x_thick
    }

    pub fn psi(&self, xn: f64) -> f64 {
        let d = self.x_tilde(xn);
        0.5 * d * d + self.shift
    }
}

/// Exact first partials of a complex symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Partials {
    pub d_tau: C,
    pub d_t: C,
    pub d_xi: Vec<C>,
    pub d_x: Vec<C>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolValue {
    pub value: C,
    pub partials: Option<Partials>,
}

/// Factor multiplying `q_l (speed) xi_n` in the lower-order transport term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowerOrderFactor {
    /// `i^{alpha_l} (tau - i)^{alpha_l - 1}`, which equals `i (1 + i tau)^{alpha_l - 1}`.
    #[default]
    PerTerm,
    /// `i^{alpha_1} (tau - i)^{alpha_l - 1}` with the leading order in the first power.
    LeadingPower,
    Off,
}

/// `((1 + |xi|^2)^{1/alpha} + i tau)^{m alpha / 2}` on the principal branch.
pub fn lambda_symbol(m: f64, alpha: f64, tau: f64, xi: &[f64]) -> C {
    let re = (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).powf(1.0 / alpha);
    C::new(re, tau).powf(m * alpha / 2.0)
}

/// `(1 + i tau)^a` in polar form; `arg(1 + i tau) = atan(tau)` lies in
/// `(-pi/2, pi/2)`.
pub fn one_plus_i_tau_pow(a: f64, tau: f64) -> C {
    let r = (1.0 + tau * tau).powf(0.5 * a);
    let th = a * tau.atan();
    C::new(r * th.cos(), r * th.sin())
}

/// `min(sqrt(2)/2, sin(pi (1 - alpha/2)))`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(domain(format!("order must lie in (0,2), got {alpha}")));
    }
    Ok((0.5f64.sqrt()).min((std::f64::consts::PI * (1.0 - alpha / 2.0)).sin()))
}

/// `cos(alpha pi / 4)`, a lower bound for `Re (1+i tau)^alpha / |1+i tau|^alpha`
/// on `|tau| <= 1`.
pub fn epsilon_zero(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(domain(format!("order must lie in (0,2), got {alpha}")));
    }
    Ok((alpha * std::f64::consts::FRAC_PI_4).cos())
}

/// `sum_l q_l (1 + i tau)^{alpha_l}` and its `tau` derivative.
pub fn fractional_part(spec: &MultiTermSpec, tau: f64) -> (C, C) {
    let mut v = C::new(0.0, 0.0);
    let mut d = C::new(0.0, 0.0);
    for (q, a) in spec.terms() {
        v += q * one_plus_i_tau_pow(a, tau);
        d += q * a * I * one_plus_i_tau_pow(a - 1.0, tau);
    }
    (v, d)
}

fn lower_order_factor(kind: LowerOrderFactor, alpha_l: f64, alpha_1: f64, tau: f64) -> C {
    let i_pow = |a: f64| C::from_polar(1.0, a * std::f64::consts::FRAC_PI_2);
    let shifted = C::new(tau, -1.0).powf(alpha_l - 1.0);
    match kind {
        LowerOrderFactor::PerTerm => i_pow(alpha_l) * shifted,
        LowerOrderFactor::LeadingPower => i_pow(alpha_1) * shifted,
        LowerOrderFactor::Off => C::new(0.0, 0.0),
    }
}

fn check_dims(point: &PhasePoint, coeffs: &dyn CoeffField) -> Result<()> {
    point.validate()?;
    if coeffs.dim() != point.dim() {
        return Err(Error::Shape {
            expected: point.dim(),
            got: coeffs.dim(),
        });
    }
    Ok(())
}

/// Total symbol of the conjugated operator in Holmgren coordinates at
/// `sigma = 0`, with `coeffs` already expressed in those coordinates.
pub fn total_symbol(
    point: &PhasePoint,
    spec: &MultiTermSpec,
    coeffs: &dyn CoeffField,
    map: &HolmgrenMap,
    factor: LowerOrderFactor,
) -> Result<SymbolValue> {
    check_dims(point, coeffs)?;
    if map.dim() != point.dim() {
        return Err(Error::Shape {
            expected: point.dim(),
            got: map.dim(),
        });
    }
    if point.sigma != 0.0 {
        return Err(domain("the total symbol is evaluated at sigma = 0"));
    }
    let n = point.dim();
    let (x, xi) = (&point.x, &point.xi);
    let a = coeffs.eval(point.t, x);
    let c = map.c;
    let xn = xi[n - 1];
    let tangential = |j: usize| xi[j] + 2.0 * c * x[j] * xn;
    let mut quad = a.get(n - 1, n - 1) * xn * xn;
    for j in 0..n - 1 {
        quad += 2.0 * a.get(j, n - 1) * xn * tangential(j);
        for k in 0..n - 1 {
            quad += a.get(j, k) * tangential(j) * tangential(k);
        }
    }
    let (frac, _) = fractional_part(spec, point.tau);
    let alpha_1 = spec.alpha();
    let mut lower = C::new(0.0, 0.0);
    for (q, al) in spec.terms() {
        lower += q * map.speed() * lower_order_factor(factor, al, alpha_1, point.tau) * xn;
    }
    Ok(SymbolValue {
        value: frac + quad + lower,
        partials: None,
    })
}

/// Evaluation context for the weighted principal symbol.
#[derive(Clone, Copy)]
pub struct WeightedSymbol<'a> {
    pub spec: &'a MultiTermSpec,
    pub coeffs: &'a dyn CoeffField,
    pub weight: CarlemanWeight,
    pub c: f64,
}

impl<'a> WeightedSymbol<'a> {
    pub fn new(
        spec: &'a MultiTermSpec,
        coeffs: &'a dyn CoeffField,
        weight: CarlemanWeight,
        c: f64,
    ) -> Self {
        Self {
            spec,
            coeffs,
            weight,
            c,
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    /// `zeta = B xi + i |sigma| X~ e`.
    fn zeta(&self, p: &PhasePoint) -> Vec<C> {
        let n = p.dim();
        let w = C::new(p.xi[n - 1], p.sigma.abs() * self.weight.x_tilde(p.x[n - 1]));
        let mut z: Vec<C> = (0..n - 1)
            .map(|j| p.xi[j] + 2.0 * self.c * p.x[j] * w)
            .collect();
        z.push(w);
        z
    }

    fn value_unchecked(&self, p: &PhasePoint) -> C {
        let z = self.zeta(p);
        let a = self.coeffs.eval(p.t, &p.x);
        fractional_part(self.spec, p.tau).0 + quad_c(&a, &z)
    }

    pub fn value(&self, p: &PhasePoint) -> Result<C> {
        check_dims(p, self.coeffs)?;
        Ok(self.value_unchecked(p))
    }

    /// `(p1, p2)` with `p1 = Q(xi', xi_n + i|sigma|X~)` and `p2` the exact
    /// remainder, assembled term by term.
    pub fn split(&self, p: &PhasePoint) -> Result<(C, C)> {
        check_dims(p, self.coeffs)?;
        let n = p.dim();
        let a = self.coeffs.eval(p.t, &p.x);
        let w = C::new(p.xi[n - 1], p.sigma.abs() * self.weight.x_tilde(p.x[n - 1]));
        let mut z1: Vec<C> = p.xi[..n - 1].iter().map(|v| C::new(*v, 0.0)).collect();
        z1.push(w);
        let p1 = quad_c(&a, &z1);
        let d: Vec<C> = (0..n - 1).map(|j| 2.0 * self.c * p.x[j] * w).collect();
        let mut p2 = fractional_part(self.spec, p.tau).0;
        for j in 0..n - 1 {
            p2 += 2.0 * a.get(j, n - 1) * d[j] * w;
            for k in 0..n - 1 {
                p2 += a.get(j, k) * d[j] * (p.xi[k] + d[k]);
                p2 += a.get(j, k) * p.xi[j] * d[k];
            }
        }
        Ok((p1, p2))
    }

    pub fn gradients(&self, p: &PhasePoint) -> Result<SymbolValue> {
        check_dims(p, self.coeffs)?;
        let n = p.dim();
        let s = p.sigma.abs();
        let z = self.zeta(p);
        let w = z[n - 1];
        let a = self.coeffs.eval(p.t, &p.x);
        let az: Vec<C> = (0..n)
            .map(|r| (0..n).map(|k| a.get(r, k) * z[k]).sum())
            .collect();
        let quad: C = z.iter().zip(&az).map(|(zi, ai)| zi * ai).sum();
        let (frac, d_tau) = fractional_part(self.spec, p.tau);

        let mut d_xi: Vec<C> = az.iter().map(|v| 2.0 * v).collect();
        let mut extra = C::new(0.0, 0.0);
        for j in 0..n - 1 {
            extra += 2.0 * az[j] * 2.0 * self.c * p.x[j];
        }
        d_xi[n - 1] += extra;

        let mut d_x = Vec::with_capacity(n);
        for k in 0..n {
            let mut v = quad_c(&self.coeffs.d_x(p.t, &p.x, k), &z);
            if k < n - 1 {
                v += 2.0 * az[k] * 2.0 * self.c * w;
            } else {
                // d zeta / d x_n = i|sigma| d zeta / d xi_n
                v += I * s * d_xi[n - 1];
            }
            d_x.push(v);
        }
        let d_t = quad_c(&self.coeffs.d_t(p.t, &p.x), &z);
        Ok(SymbolValue {
            value: frac + quad,
            partials: Some(Partials {
                d_tau,
                d_t,
                d_xi,
                d_x,
            }),
        })
    }
}

/// `z^T A z` for complex `z` and real symmetric `A`.
fn quad_c(a: &crate::coeffs::Matrix, z: &[C]) -> C {
    let n = z.len();
    let mut acc = C::new(0.0, 0.0);
    for i in 0..n {
        let mut row = C::new(0.0, 0.0);
        for j in 0..n {
            row += a.get(i, j) * z[j];
        }
        acc += z[i] * row;
    }
    acc
}

pub fn weighted_principal_symbol(
    point: &PhasePoint,
    spec: &MultiTermSpec,
    coeffs: &dyn CoeffField,
    weight: CarlemanWeight,
    c: f64,
) -> Result<SymbolValue> {
    let v = WeightedSymbol::new(spec, coeffs, weight, c).value(point)?;
    Ok(SymbolValue {
        value: v,
        partials: None,
    })
}

pub fn symbol_gradients(
    point: &PhasePoint,
    spec: &MultiTermSpec,
    coeffs: &dyn CoeffField,
    weight: CarlemanWeight,
    c: f64,
) -> Result<SymbolValue> {
    WeightedSymbol::new(spec, coeffs, weight, c).gradients(point)
}

/// Largest relative deviation between the analytic partials and central
/// differences. Each deviation is measured against the larger of the
/// analytic partial and `|p| / h`, where `h` is the natural scale of the
/// perturbed component (1 for `t, x`; `|xi| + |sigma X~|` for `xi`;
/// `max(1, |tau|)` for `tau`).
pub fn gradient_fd_error(sym: &WeightedSymbol<'_>, p: &PhasePoint) -> Result<f64> {
    let g = sym.gradients(p)?;
    let parts = g.partials.expect("gradients always carry partials");
    let pv = g.value.norm();
    let n = p.dim();
    let xi_scale = p.xi_norm2().sqrt() + (p.sigma * sym.weight.x_tilde(p.x[n - 1])).abs();
    let mut worst: f64 = 0.0;
    let mut probe = |scale: f64, analytic: C, set: &dyn Fn(&mut PhasePoint, f64)| {
        let h = 1e-5 * scale;
        let mut pp = p.clone();
        set(&mut pp, h);
        let mut pm = p.clone();
        set(&mut pm, -h);
        let fd = (sym.value_unchecked(&pp) - sym.value_unchecked(&pm)) / (2.0 * h);
        let denom = analytic.norm().max(pv / scale);
        worst = worst.max((fd - analytic).norm() / denom);
    };
    probe(1.0, parts.d_t, &|q, h| q.t += h);
    probe(p.tau.abs().max(1.0), parts.d_tau, &|q, h| q.tau += h);
    for k in 0..n {
        probe(1.0, parts.d_x[k], &|q, h| q.x[k] += h);
        probe(xi_scale.max(1e-3), parts.d_xi[k], &|q, h| q.xi[k] += h);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{ConstantField, DiagonalVariable, Matrix, RotatingAnisotropic};
    use crate::geometry::holmgren_coefficients;
    use std::sync::Arc;

    fn spec1(a: f64) -> MultiTermSpec {
        MultiTermSpec::single(a).unwrap()
    }

    #[test]
    fn lambda_examples() {
        assert!((lambda_symbol(0.0, 0.7, 3.0, &[1.0, 2.0]) - 1.0).norm() < 1e-15);
        assert!((lambda_symbol(1.3, 0.7, 0.0, &[0.0]) - 1.0).norm() < 1e-15);
        assert!((lambda_symbol(2.0, 1.0, 3.0, &[0.0]) - C::new(1.0, 3.0)).norm() < 1e-14);
    }

    #[test]
    fn c_alpha_examples() {
        assert!((c_alpha(1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((c_alpha(1.8).unwrap() - (0.1 * std::f64::consts::PI).sin()).abs() < 1e-15);
        assert!((c_alpha(0.5).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(c_alpha(2.0).is_err());
        assert!(c_alpha(0.0).is_err());
    }

    #[test]
    fn total_symbol_examples() {
        let map = HolmgrenMap::centered(1, 3.0, 0.1, 1.0, 1).unwrap();
        let a = ConstantField::identity(1);
        let spec = MultiTermSpec::new(vec![1.0], vec![1.0]).unwrap();
        let pt = PhasePoint::new(0.2, vec![0.05], 0.0, vec![2.0], 0.0).unwrap();
        let v = total_symbol(&pt, &spec, &a, &map, LowerOrderFactor::Off).unwrap();
        assert!((v.value - C::new(5.0, 0.0)).norm() < 1e-14);

        let spec2 = MultiTermSpec::new(vec![1.5, 0.5], vec![1.0, 2.0]).unwrap();
        let map2 = HolmgrenMap::centered(2, 1.0, 0.1, 1.0, 1).unwrap();
        let a2 = ConstantField::identity(2);
        let z = PhasePoint::new(0.0, vec![0.3, 0.0], 0.0, vec![0.0, 0.0], 0.0).unwrap();
        let v = total_symbol(&z, &spec2, &a2, &map2, LowerOrderFactor::Off).unwrap();
        assert!((v.value - C::new(3.0, 0.0)).norm() < 1e-14);

        let sigma = PhasePoint::new(0.0, vec![0.0], 0.0, vec![1.0], 1.0).unwrap();
        assert!(total_symbol(&sigma, &spec, &a, &map, LowerOrderFactor::Off).is_err());
    }

    #[test]
    fn total_symbol_quadratic_homogeneity_and_congruence() {
        let map = HolmgrenMap::centered(3, 1.5, 0.1, 1.0, 1).unwrap();
        let a = RotatingAnisotropic::new(3);
        let spec = spec1(0.6);
        let pt = PhasePoint::new(0.3, vec![0.1, -0.2, 0.04], 2.5, vec![0.7, -1.1, 0.4], 0.0).unwrap();
        let frac = fractional_part(&spec, pt.tau).0;
        let q1 = total_symbol(&pt, &spec, &a, &map, LowerOrderFactor::Off).unwrap().value - frac;
        let mut p2 = pt.clone();
        p2.xi.iter_mut().for_each(|v| *v *= 2.0);
        let q2 = total_symbol(&p2, &spec, &a, &map, LowerOrderFactor::Off).unwrap().value - frac;
        assert!((q2 - 4.0 * q1).norm() < 1e-12 * q1.norm());
        let m = a.eval(pt.t, &pt.x).congruence(&map.chain_matrix(&pt.x));
        assert!((q1.re - m.quadratic_form(&pt.xi)).abs() < 1e-12);
    }

    #[test]
    fn lower_order_factor_matches_conjugated_form() {
        for al in [0.3, 0.9, 1.0, 1.4, 1.9] {
            for tau in [-50.0, -1.0, 0.0, 0.3, 7.0] {
                let lhs = lower_order_factor(LowerOrderFactor::PerTerm, al, al, tau);
                let rhs = I * one_plus_i_tau_pow(al - 1.0, tau);
                assert!((lhs - rhs).norm() < 1e-13 * rhs.norm().max(1.0), "{al} {tau}");
            }
        }
    }

    #[test]
    fn weighted_reduces_to_total_at_zero_sigma() {
        let map = HolmgrenMap::centered(2, 1.0, 0.1, 1.0, 1).unwrap();
        let a = DiagonalVariable::new(2);
        let spec = MultiTermSpec::new(vec![1.2, 0.4], vec![1.0, 0.3]).unwrap();
        let pt = PhasePoint::new(0.4, vec![0.2, 0.05], -3.0, vec![1.3, 0.8], 0.0).unwrap();
        let total = total_symbol(&pt, &spec, &a, &map, LowerOrderFactor::Off).unwrap().value;
        let w = weighted_principal_symbol(&pt, &spec, &a, CarlemanWeight::new(0.1).unwrap(), 1.0)
            .unwrap()
            .value;
        assert!((total - w).norm() < 1e-13);
    }

    #[test]
    fn weighted_hand_value() {
        let a = ConstantField::identity(1);
        let pt = PhasePoint::new(0.0, vec![0.0], 0.0, vec![1.0], 1.0).unwrap();
        let v = weighted_principal_symbol(&pt, &spec1(0.5), &a, CarlemanWeight::new(0.1).unwrap(), 1.0)
            .unwrap()
            .value;
        assert!((v - C::new(1.96, -0.4)).norm() < 1e-14);
    }

    #[test]
    fn split_and_constant_gradients() {
        let a = ConstantField::identity(1);
        let spec = spec1(0.5);
        let wt = CarlemanWeight::new(0.1).unwrap();
        let sym = WeightedSymbol::new(&spec, &a, wt, 1.0);
        let pt = PhasePoint::new(0.0, vec![0.03], 0.0, vec![0.7], 2.0).unwrap();
        let g = sym.gradients(&pt).unwrap();
        let d = g.partials.unwrap();
        let xt = wt.x_tilde(0.03);
        assert!((d.d_xi[0].re - 1.4).abs() < 1e-14);
        assert!((d.d_xi[0].im - 4.0 * xt).abs() < 1e-14);
        assert!((d.d_tau - C::new(0.0, 0.5)).norm() < 1e-15);
        let zero_sigma = PhasePoint { sigma: 0.0, ..pt.clone() };
        let d0 = sym.gradients(&zero_sigma).unwrap().partials.unwrap();
        assert_eq!(d0.d_x[0].im, 0.0);
        let (p1, p2) = sym.split(&pt).unwrap();
        assert!((p1 + p2 - g.value).norm() < 1e-14);
    }

    #[test]
    fn split_sums_with_tangential_terms() {
        let map = HolmgrenMap::centered(3, 2.0, 0.1, 1.0, 1).unwrap();
        let base: Arc<dyn CoeffField> = Arc::new(RotatingAnisotropic::new(3));
        let field = holmgren_coefficients(base, &map);
        let spec = MultiTermSpec::new(vec![1.5, 0.7], vec![1.0, 0.25]).unwrap();
        let sym = WeightedSymbol::new(&spec, &field, CarlemanWeight::new(0.05).unwrap(), 2.0);
        let pt = PhasePoint::new(0.7, vec![0.2, -0.1, 0.03], 4.0, vec![1.0, -2.0, 0.5], 3.0).unwrap();
        let (p1, p2) = sym.split(&pt).unwrap();
        let v = sym.value(&pt).unwrap();
        assert!((p1 + p2 - v).norm() < 1e-13 * v.norm());
    }

    #[test]
    fn gradients_match_differences() {
        let map = HolmgrenMap::centered(2, 1.0, 0.1, 1.0, 1).unwrap();
        let base: Arc<dyn CoeffField> = Arc::new(RotatingAnisotropic::new(2));
        let field = holmgren_coefficients(base, &map);
        let spec = MultiTermSpec::new(vec![1.3, 0.6], vec![1.0, 0.5]).unwrap();
        let sym = WeightedSymbol::new(&spec, &field, CarlemanWeight::new(0.1).unwrap(), 1.0);
        let pt = PhasePoint::new(0.35, vec![0.15, 0.06], 2.2, vec![0.9, -1.7], 1.3).unwrap();
        let err = gradient_fd_error(&sym, &pt).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn shape_errors() {
        let a = ConstantField::new(Matrix::identity(2), 1.0).unwrap();
        let pt = PhasePoint::new(0.0, vec![0.0], 0.0, vec![1.0], 0.0).unwrap();
        let spec = spec1(0.5);
        assert!(weighted_principal_symbol(&pt, &spec, &a, CarlemanWeight::new(0.1).unwrap(), 1.0).is_err());
        assert!(PhasePoint::new(0.0, vec![0.0, 1.0], 0.0, vec![1.0], 0.0).is_err());
    }
}
