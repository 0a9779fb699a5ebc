use serde::{Deserialize, Serialize};

use super::{PhasePoint, WeightedSymbol};
use crate::coeffs::CoeffField;
use crate::error::Result;
use crate::fractional::MultiTermSpec;

use super::CarlemanWeight;

/// Real-valued gradient in `(t, x, tau, xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGradient {
    pub d_tau: f64,
    pub d_t: f64,
    pub d_xi: Vec<f64>,
    pub d_x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BracketMode {
    /// Spatial pairs plus the `(tau, t)` pair.
    Full,
    /// Spatial pairs only.
    Principal,
}

/// `{f, g} = sum_j (f_xi_j g_x_j - f_x_j g_xi_j) [+ f_tau g_t - f_t g_tau]`.
pub fn bracket(f: &RealGradient, g: &RealGradient, mode: BracketMode) -> f64 {
    let mut acc = 0.0;
    for j in 0..f.d_xi.len() {
        acc += f.d_xi[j] * g.d_x[j] - f.d_x[j] * g.d_xi[j];
    }
    if mode == BracketMode::Full {
        acc += f.d_tau * g.d_t - f.d_t * g.d_tau;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    /// Full bracket `{Re p, Im p}`.
    pub bracket: f64,
    /// Spatial part of the bracket.
    pub principal: f64,
    /// `(|xi|^2 + sigma^2 + |tau|^alpha)^{3/2}`.
    pub scale: f64,
    /// Selected bracket divided by `scale`.
    pub ratio: f64,
}

impl<'a> WeightedSymbol<'a> {
    /// Real and imaginary gradients of the weighted symbol, with its value.
    pub fn split_gradients(&self, p: &PhasePoint) -> Result<(num_complex::Complex64, RealGradient, RealGradient)> {
        let g = self.gradients(p)?;
        let d = g.partials.expect("gradients always carry partials");
        let re = RealGradient {
            d_tau: d.d_tau.re,
            d_t: d.d_t.re,
            d_xi: d.d_xi.iter().map(|v| v.re).collect(),
            d_x: d.d_x.iter().map(|v| v.re).collect(),
        };
        let im = RealGradient {
            d_tau: d.d_tau.im,
            d_t: d.d_t.im,
            d_xi: d.d_xi.iter().map(|v| v.im).collect(),
            d_x: d.d_x.iter().map(|v| v.im).collect(),
        };
        Ok((g.value, re, im))
    }

    pub fn bracket_report(&self, p: &PhasePoint, mode: BracketMode) -> Result<BracketReport> {
        let (_, re, im) = self.split_gradients(p)?;
        let full = bracket(&re, &im, BracketMode::Full);
        let principal = bracket(&re, &im, BracketMode::Principal);
        let scale = p.scale_base(self.spec.alpha()).powf(1.5);
        let chosen = match mode {
            BracketMode::Full => full,
            BracketMode::Principal => principal,
        };
        Ok(BracketReport {
            bracket: full,
            principal,
            scale,
            ratio: chosen / scale,
        })
    }
}

pub fn poisson_bracket(
    point: &PhasePoint,
    spec: &MultiTermSpec,
    coeffs: &dyn CoeffField,
    weight: CarlemanWeight,
    c: f64,
    mode: BracketMode,
) -> Result<BracketReport> {
    WeightedSymbol::new(spec, coeffs, weight, c).bracket_report(point, mode)
}

/// `4|sigma| (sum_j a_jn xi_j)^2 + 4 a_nn^2 |sigma|^3 X~^2`, the principal
/// bracket of the normal pair for constant coefficients at `x' = 0`.
pub fn principal_closed_form(a: &crate::coeffs::Matrix, p: &PhasePoint, weight: CarlemanWeight) -> f64 {
    let n = p.dim();
    let s = p.sigma.abs();
    let xt = weight.x_tilde(p.x[n - 1]);
    let m: f64 = (0..n).map(|j| a.get(j, n - 1) * p.xi[j]).sum();
    let ann = a.get(n - 1, n - 1);
    4.0 * s * m * m + 4.0 * ann * ann * s.powi(3) * xt * xt
}

/// Extra principal-bracket contribution of the tangential pairs at `x' = 0`
/// for constant coefficients: `8 c |sigma| X~ sum_{j<n} |(A zeta)_j|^2`.
pub fn tangential_correction(
    a: &crate::coeffs::Matrix,
    p: &PhasePoint,
    weight: CarlemanWeight,
    c: f64,
) -> f64 {
    let n = p.dim();
    let s = p.sigma.abs();
    let xt = weight.x_tilde(p.x[n - 1]);
    let mut acc = 0.0;
    for j in 0..n - 1 {
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..n {
            re += a.get(j, k) * p.xi[k];
        }
        im += a.get(j, n - 1) * s * xt;
        acc += re * re + im * im;
    }
    8.0 * c * s * xt * acc
}
