//! Holmgren-type changes of variables, smooth cutoffs, the global cube
//! diffeomorphism and the staged continuation schedule.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoeffField, Matrix, PointMap, Pullback};
use crate::error::{domain, Result};
use crate::fractional::MultiTermSpec;

/// `x' = y' - y_hat'`, `x_n = y_n + c|y' - y_hat'|^2 + s X t / T - (s - 1) X`.
///
/// Stage 1 is the plain Holmgren transform; later stages shift the layer by
/// one thickness per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolmgrenMap {
    pub y_hat: Vec<f64>,
    pub c: f64,
    #[serde(rename = "X")]
    pub x_thick: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "one")]
    pub stage: u32,
}

fn one() -> u32 {
    1
}

impl HolmgrenMap {
    pub fn new(y_hat: Vec<f64>, c: f64, x_thick: f64, horizon: f64, stage: u32) -> Result<Self> {
        let m = Self {
            y_hat,
            c,
            x_thick,
            horizon,
            stage,
        };
        m.validate()?;
        Ok(m)
    }

    /// Base point at the origin.
    pub fn centered(n: usize, c: f64, x_thick: f64, horizon: f64, stage: u32) -> Result<Self> {
        Self::new(vec![0.0; n], c, x_thick, horizon, stage)
    }

    pub fn validate(&self) -> Result<()> {
        if self.y_hat.is_empty() {
            return Err(domain("base point must have at least one coordinate"));
        }
        if self.y_hat[self.y_hat.len() - 1] != 0.0 {
            return Err(domain("base point must lie on y_n = 0"));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(domain(format!("convexification constant must be >= 0, got {}", self.c)));
        }
        if !(self.x_thick > 0.0 && self.x_thick.is_finite()) {
            return Err(domain(format!("layer thickness must be positive, got {}", self.x_thick)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(domain(format!("time horizon must be positive, got {}", self.horizon)));
        }
        if self.stage < 1 {
            return Err(domain("stage must be >= 1"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.y_hat.len()
    }

    /// Rate `d x_n / d t` at fixed `y`.
    pub fn speed(&self) -> f64 {
        self.stage as f64 * self.x_thick / self.horizon
    }

    /// `s X t / T - (s - 1) X`.
    pub fn offset(&self, t: f64) -> f64 {
        let s = self.stage as f64;
        s * self.x_thick * t / self.horizon - (s - 1.0) * self.x_thick
    }

    /// The same map at another stage.
    pub fn at_stage(&self, stage: u32) -> Self {
        Self {
            stage,
            ..self.clone()
        }
    }

    pub fn forward(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        let mut r2 = 0.0;
        for j in 0..n - 1 {
            x[j] = y[j] - self.y_hat[j];
            r2 += x[j] * x[j];
        }
        x[n - 1] = y[n - 1] + self.c * r2 + self.offset(t);
        x
    }

    pub fn inverse(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        let mut r2 = 0.0;
        for j in 0..n - 1 {
            y[j] = x[j] + self.y_hat[j];
            r2 += x[j] * x[j];
        }
        y[n - 1] = x[n - 1] - self.c * r2 - self.offset(t);
        y
    }

    /// Chain-rule matrix `B` with `(B xi)_j = xi_j + 2 c x_j xi_n` for `j < n`
    /// and `(B xi)_n = xi_n`.
    pub fn chain_matrix(&self, x: &[f64]) -> Matrix {
        let n = self.dim();
        let mut b = Matrix::identity(n);
        for j in 0..n - 1 {
            b.set(j, n - 1, 2.0 * self.c * x[j]);
        }
        b
    }
}

/// The inverse Holmgren map `x -> y` as a point map for pull-backs.
#[derive(Debug, Clone)]
pub struct HolmgrenInverse(pub HolmgrenMap);

impl PointMap for HolmgrenInverse {
    fn map(&self, t: f64, x: &[f64]) -> Vec<f64> {
        self.0.inverse(t, x)
    }

    fn jacobian(&self, _t: f64, x: &[f64]) -> Matrix {
        let n = self.0.dim();
        let mut j = Matrix::identity(n);
        for k in 0..n - 1 {
            j.set(n - 1, k, -2.0 * self.0.c * x[k]);
        }
        j
    }

    fn time_derivative(&self, _t: f64, _x: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.0.dim()];
        d[self.0.dim() - 1] = -self.0.speed();
        d
    }
}

/// `a(t, y)` expressed in Holmgren coordinates: `x -> a(t, y(t, x))`.
pub fn holmgren_coefficients(
    coeffs: Arc<dyn CoeffField>,
    map: &HolmgrenMap,
) -> Pullback<Arc<dyn CoeffField>, HolmgrenInverse> {
    Pullback {
        field: coeffs,
        map: HolmgrenInverse(map.clone()),
    }
}

/// The effective second-order coefficient matrix `B^T A B` of the operator
/// in Holmgren coordinates. Its ellipticity constant is not the one of `A`,
/// so `delta` reports a bound valid for `|x'| <= r`.
pub struct HolmgrenQuadratic<F> {
    pub field: F,
    pub map: HolmgrenMap,
    delta: f64,
}

impl<F: CoeffField> HolmgrenQuadratic<F> {
    /// `field` must already be expressed in Holmgren coordinates.
    pub fn new(field: F, map: HolmgrenMap, transverse_radius: f64) -> Self {
        // B has unit diagonal and one off-diagonal column bounded by 2 c r,
        // so its singular values lie in [1/(1+b), 1+b] with b = 2 c r sqrt(n-1).
        let b = 2.0 * map.c * transverse_radius * ((map.dim() - 1) as f64).sqrt();
        let s_max = 1.0 + b;
        let delta = (field.delta() / (s_max * s_max)).min(field.delta());
        Self { field, map, delta }
    }
}

impl<F: CoeffField> CoeffField for HolmgrenQuadratic<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn eval(&self, t: f64, x: &[f64]) -> Matrix {
        self.field.eval(t, x).congruence(&self.map.chain_matrix(x))
    }
    fn d_t(&self, t: f64, x: &[f64]) -> Matrix {
        self.field.d_t(t, x).congruence(&self.map.chain_matrix(x))
    }
    fn d_x(&self, t: f64, x: &[f64], j: usize) -> Matrix {
        let n = self.dim();
        let b = self.map.chain_matrix(x);
        let mut out = self.field.d_x(t, x, j).congruence(&b);
        if j + 1 < n {
            // dB/dx_j = 2c E_{j,n}; add (dB)^T A B + B^T A dB
            let a = self.field.eval(t, x);
            let two_c = 2.0 * self.map.c;
            let mut ab = Matrix::zeros(n);
            for r in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += a.get(r, l) * b.get(l, k);
                    }
                    ab.set(r, k, acc);
                }
            }
            for k in 0..n {
                let v = two_c * ab.get(j, k);
                out.add_to(n - 1, k, v);
                out.add_to(k, n - 1, v);
            }
        }
        out
    }
}

/// Coefficient data of the multi-term operator after the Holmgren change of
/// variables, ready for symbol evaluation and discretization.
pub struct PushedForward {
    /// `a_{jk}(t, y(t, x))`; the symbol applies the chain rule itself.
    pub coeffs: Arc<dyn CoeffField>,
    /// `B^T A B`, the second-order coefficients of the transformed operator.
    pub second_order: Arc<dyn CoeffField>,
    pub map: HolmgrenMap,
    pub spec: MultiTermSpec,
    /// Rate multiplying the fractional-order transport term `d/dx_n`.
    pub transport_speed: f64,
}

impl PushedForward {
    /// First-order drift produced by the chain rule: `b_n = 2c sum_{j<n} a_jj`.
    pub fn drift(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let n = self.map.dim();
        let a = self.coeffs.eval(t, x);
        let mut b = vec![0.0; n];
        b[n - 1] = 2.0 * self.map.c * (0..n - 1).map(|j| a.get(j, j)).sum::<f64>();
        b
    }
}

pub fn pushforward_operator(
    coeffs: Arc<dyn CoeffField>,
    spec: &MultiTermSpec,
    map: &HolmgrenMap,
    transverse_radius: f64,
) -> Result<PushedForward> {
    map.validate()?;
    if coeffs.dim() != map.dim() {
        return Err(crate::Error::Shape {
            expected: map.dim(),
            got: coeffs.dim(),
        });
    }
    let pulled: Arc<dyn CoeffField> = Arc::new(holmgren_coefficients(coeffs, map));
    let second: Arc<dyn CoeffField> = Arc::new(HolmgrenQuadratic::new(
        pulled.clone(),
        map.clone(),
        transverse_radius,
    ));
    Ok(PushedForward {
        coeffs: pulled,
        second_order: second,
        map: map.clone(),
        spec: spec.clone(),
        transport_speed: map.speed(),
    })
}

/// `h(s) = exp(-1/s)` for `s > 0`, else 0.
fn flat(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// C-infinity step: 0 for `s <= 0`, 1 for `s >= 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = flat(s);
        a / (a + flat(1.0 - s))
    }
}

/// 1 on `[inner_lo, inner_hi]`, 0 outside `(outer_lo, outer_hi)`.
fn plateau(v: f64, outer_lo: f64, inner_lo: f64, inner_hi: f64, outer_hi: f64) -> f64 {
    smooth_step((v - outer_lo) / (inner_lo - outer_lo))
        * (1.0 - smooth_step((v - inner_hi) / (outer_hi - inner_hi)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    pub zeta: f64,
    pub epsilon: f64,
    #[serde(default = "default_depth")]
    pub l: f64,
    #[serde(rename = "X")]
    pub x_thick: f64,
}

fn default_depth() -> f64 {
    0.5
}

impl CutoffSpec {
    pub fn new(zeta: f64, epsilon: f64, l: f64, x_thick: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(domain(format!("epsilon must lie in (0,1), got {epsilon}")));
        }
        if !(zeta >= 1.0) {
            return Err(domain(format!("zeta must be >= 1, got {zeta}")));
        }
        if !(l > 0.0 && x_thick > 0.0) {
            return Err(domain("box depth and thickness must be positive"));
        }
        Ok(Self {
            zeta,
            epsilon,
            l,
            x_thick,
        })
    }

    /// `chi(x_n)`: 1 for `x_n <= (1-eps) X`, 0 for `x_n >= X`.
    pub fn chi(&self, xn: f64) -> f64 {
        let x = self.x_thick;
        1.0 - smooth_step((xn - (1.0 - self.epsilon) * x) / (self.epsilon * x))
    }

    /// `kappa_zeta(y)` around base point `y_hat`: 1 on the inner box
    /// `|y_j - y_hat_j| <= sqrt X`, `-l/3 <= y_n <= zeta X`, and 0 outside
    /// `|y_j - y_hat_j| < 2 sqrt X`, `-2l/3 < y_n < (zeta + 1) X`.
    pub fn kappa(&self, y_hat: &[f64], y: &[f64]) -> f64 {
        let n = y.len();
        let r = self.x_thick.sqrt();
        let mut v = plateau(
            y[n - 1],
            -2.0 * self.l / 3.0,
            -self.l / 3.0,
            self.zeta * self.x_thick,
            (self.zeta + 1.0) * self.x_thick,
        );
        for j in 0..n - 1 {
            let d = (y[j] - y_hat[j]).abs();
            v *= 1.0 - smooth_step((d - r) / r);
        }
        v
    }

    pub fn in_inner_box(&self, y_hat: &[f64], y: &[f64]) -> bool {
        let n = y.len();
        let r = self.x_thick.sqrt();
        y[n - 1] >= -self.l / 3.0
            && y[n - 1] <= self.zeta * self.x_thick
            && (0..n - 1).all(|j| (y[j] - y_hat[j]).abs() <= r)
    }

    pub fn in_outer_box(&self, y_hat: &[f64], y: &[f64]) -> bool {
        let n = y.len();
        let r = self.x_thick.sqrt();
        y[n - 1] > -2.0 * self.l / 3.0
            && y[n - 1] < (self.zeta + 1.0) * self.x_thick
            && (0..n - 1).all(|j| (y[j] - y_hat[j]).abs() < 2.0 * r)
    }
}

/// Cube-to-space map `y_j -> y_j / sqrt(1 - y_j^2)`.
pub fn global_diffeo(y: &[f64]) -> Result<Vec<f64>> {
    y.iter()
        .map(|&v| {
            if v.abs() < 1.0 {
                Ok(v / (1.0 - v * v).sqrt())
            } else {
                Err(domain(format!("coordinate {v} is outside the open cube")))
            }
        })
        .collect()
}

pub fn global_diffeo_inverse(yt: &[f64]) -> Vec<f64> {
    yt.iter().map(|&v| v / (1.0 + v * v).sqrt()).collect()
}

/// Diagonal Jacobian `d yt_j / d y_j = (1 - y_j^2)^{-3/2}`.
pub fn global_diffeo_jacobian(y: &[f64]) -> Result<Vec<f64>> {
    y.iter()
        .map(|&v| {
            if v.abs() < 1.0 {
                Ok((1.0 - v * v).powf(-1.5))
            } else {
                Err(domain(format!("coordinate {v} is outside the open cube")))
            }
        })
        .collect()
}

/// `(1 + yt^2)^{3/2}`, the factor relating `d/dy` and `d/dyt`.
pub fn stretch(yt: f64) -> f64 {
    (1.0 + yt * yt).powf(1.5)
}

/// `a~_{jk}(t, yt) = a_{jk}(t, y(yt)) (1 + yt_j^2)^{3/2} (1 + yt_k^2)^{3/2}`.
pub struct GlobalWeighted<F> {
    pub field: F,
}

impl<F: CoeffField> CoeffField for GlobalWeighted<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    /// Weighted ellipticity holds with the base constant for the stretched
    /// covector; see [`weighted_ellipticity_holds`].
    fn delta(&self) -> f64 {
        self.field.delta()
    }
    fn eval(&self, t: f64, yt: &[f64]) -> Matrix {
        let y = global_diffeo_inverse(yt);
        let w: Vec<f64> = yt.iter().map(|v| stretch(*v)).collect();
        let a = self.field.eval(t, &y);
        let mut out = Matrix::zeros(self.dim());
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                out.set(j, k, a.get(j, k) * w[j] * w[k]);
            }
        }
        out
    }
    fn d_t(&self, t: f64, yt: &[f64]) -> Matrix {
        let y = global_diffeo_inverse(yt);
        let w: Vec<f64> = yt.iter().map(|v| stretch(*v)).collect();
        let a = self.field.d_t(t, &y);
        let mut out = Matrix::zeros(self.dim());
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                out.set(j, k, a.get(j, k) * w[j] * w[k]);
            }
        }
        out
    }
    fn d_x(&self, t: f64, yt: &[f64], i: usize) -> Matrix {
        let n = self.dim();
        let y = global_diffeo_inverse(yt);
        let w: Vec<f64> = yt.iter().map(|v| stretch(*v)).collect();
        let dw_i = 3.0 * yt[i] * (1.0 + yt[i] * yt[i]).sqrt();
        let dy_i = 1.0 / w[i];
        let a = self.field.eval(t, &y);
        let da = self.field.d_x(t, &y, i);
        let mut out = Matrix::zeros(n);
        for j in 0..n {
            for k in 0..n {
                let mut v = da.get(j, k) * dy_i * w[j] * w[k];
                let mut dww = 0.0;
                if j == i {
                    dww += dw_i * w[k];
                }
                if k == i {
                    dww += w[j] * dw_i;
                }
                v += a.get(j, k) * dww;
                out.set(j, k, v);
            }
        }
        out
    }
}

/// `delta |eta~|^2 <= a~ eta . eta <= delta^{-1} |eta~|^2` with
/// `eta~_j = (1 + yt_j^2)^{3/2} eta_j`.
pub fn weighted_ellipticity_holds(
    field: &dyn CoeffField,
    delta: f64,
    t: f64,
    yt: &[f64],
    eta: &[f64],
) -> bool {
    let q = field.eval(t, yt).quadratic_form(eta);
    let n2: f64 = eta
        .iter()
        .zip(yt)
        .map(|(e, y)| {
            let v = stretch(*y) * e;
            v * v
        })
        .sum();
    let slack = 1e-12 * n2;
    q >= delta * n2 - slack && q <= n2 / delta + slack
}

/// `E_s = {(t, yt) : 0 < t < T, yt_n + s X t / T < s X, |yt'| < sqrt X}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRegion {
    pub stage: u32,
    #[serde(rename = "X")]
    pub x_thick: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

/// Linear inequality `coef_t * t + coef_yn * yt_n < rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearInequality {
    pub coef_t: f64,
    pub coef_yn: f64,
    pub rhs: f64,
}

impl ContinuationRegion {
    pub fn contains(&self, t: f64, yt: &[f64]) -> bool {
        let n = yt.len();
        let s = self.stage as f64;
        let r2: f64 = yt[..n - 1].iter().map(|v| v * v).sum();
        t > 0.0
            && t < self.horizon
            && yt[n - 1] + s * self.x_thick * t / self.horizon < s * self.x_thick
            && r2 < self.x_thick
    }

    pub fn inequality(&self) -> LinearInequality {
        let s = self.stage as f64;
        LinearInequality {
            coef_t: s * self.x_thick / self.horizon,
            coef_yn: 1.0,
            rhs: s * self.x_thick,
        }
    }

    pub fn transverse_radius(&self) -> f64 {
        self.x_thick.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStage {
    pub stage: u32,
    pub map: HolmgrenMap,
    pub region: ContinuationRegion,
    pub inequality: LinearInequality,
    pub time_interval: [f64; 2],
    pub transverse_radius: f64,
}

pub fn continuation_schedule(
    n: usize,
    c: f64,
    horizon: f64,
    x_thick: f64,
    s_max: u32,
) -> Result<Vec<ScheduleStage>> {
    if s_max < 1 {
        return Err(domain("schedule needs at least one stage"));
    }
    (1..=s_max)
        .map(|s| {
            let map = HolmgrenMap::centered(n, c, x_thick, horizon, s)?;
            let region = ContinuationRegion {
                stage: s,
                x_thick,
                horizon,
            };
            Ok(ScheduleStage {
                stage: s,
                inequality: region.inequality(),
                time_interval: [0.0, horizon],
                transverse_radius: region.transverse_radius(),
                map,
                region,
            })
        })
        .collect()
}

/// Worst-case errors of the coordinate maps over random points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub samples: usize,
    /// `max |inverse(forward(y)) - y|` and `max |forward(inverse(x)) - x|` over all stages.
    pub holmgren: f64,
    /// `max |y(yt(y)) - y|` on the cube `|y_j| <= 0.9`.
    pub global: f64,
    /// `max |x_{s,n} - x_{s-1,n} - (X t / T - X)|` for `s = 2..=s_max`.
    pub stage_identity: f64,
}

impl RoundTripReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.holmgren <= tol && self.global <= tol && self.stage_identity <= tol
    }
}

/// Samples `t in [0, T]`, `|y'| <= sqrt X` per coordinate and
/// `y_n in [-X, s_max X]`, and measures the map identities.
pub fn geometry_roundtrip_check(
    n: usize,
    c: f64,
    x_thick: f64,
    horizon: f64,
    s_max: u32,
    count: usize,
    seed: u64,
) -> Result<RoundTripReport> {
    use rand::Rng;
    if n == 0 || s_max < 1 {
        return Err(domain("round trip needs n >= 1 and s_max >= 1"));
    }
    let maps: Vec<HolmgrenMap> = (1..=s_max)
        .map(|s| HolmgrenMap::centered(n, c, x_thick, horizon, s))
        .collect::<Result<_>>()?;
    let r = x_thick.sqrt();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
    let mut rep = RoundTripReport {
        samples: count,
        holmgren: 0.0,
        global: 0.0,
        stage_identity: 0.0,
    };
    for i in 0..count {
        let mut rng = crate::symbol::sample_rng(seed, i as u64);
        let t = rng.gen_range(0.0..=horizon);
        let mut y: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-r..=r)).collect();
        y.push(rng.gen_range(-x_thick..=s_max as f64 * x_thick));
        let cube: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.9..=0.9)).collect();
        let back = global_diffeo_inverse(&global_diffeo(&cube)?);
        rep.global = rep.global.max(dist(&back, &cube));
        let mut prev: Option<f64> = None;
        for m in &maps {
            let x = m.forward(t, &y);
            rep.holmgren = rep.holmgren.max(dist(&m.inverse(t, &x), &y));
            rep.holmgren = rep.holmgren.max(dist(&m.forward(t, &m.inverse(t, &y)), &y));
            if let Some(p) = prev {
                let gap = x[n - 1] - p - (x_thick * t / horizon - x_thick);
                rep.stage_identity = rep.stage_identity.max(gap.abs());
            }
            prev = Some(x[n - 1]);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::tests::fd_check;
    use crate::coeffs::{ConstantField, RotatingAnisotropic};

    #[test]
    fn forward_examples() {
        let m = HolmgrenMap::centered(2, 1.0, 0.1, 1.0, 1).unwrap();
        let x = m.forward(0.5, &[0.2, 0.05]);
        assert!((x[0] - 0.2).abs() < 1e-15);
        assert!((x[1] - 0.14).abs() < 1e-15);
        let x2 = m.at_stage(2).forward(0.5, &[0.2, 0.05]);
        assert!((x2[1] - 0.09).abs() < 1e-15);
        let y = m.inverse(0.5, &x);
        assert!((y[0] - 0.2).abs() < 1e-15 && (y[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(HolmgrenMap::new(vec![0.0, 0.1], 1.0, 0.1, 1.0, 1).is_err());
        assert!(HolmgrenMap::centered(2, 1.0, 0.0, 1.0, 1).is_err());
        assert!(HolmgrenMap::centered(2, 1.0, 0.1, 1.0, 0).is_err());
    }

    #[test]
    fn quadratic_form_pushforward() {
        let map = HolmgrenMap::centered(2, 1.0, 0.1, 1.0, 1).unwrap();
        let base: Arc<dyn CoeffField> = Arc::new(ConstantField::identity(2));
        let pf = pushforward_operator(base, &MultiTermSpec::single(0.5).unwrap(), &map, 1.0).unwrap();
        let m = pf.second_order.eval(0.2, &[0.3, 0.05]);
        assert!((m.get(1, 1) - (1.0 + 4.0 * 0.09)).abs() < 1e-15);
        assert!(m.is_symmetric(0.0));
        assert!((pf.drift(0.0, &[0.3, 0.0])[1] - 2.0).abs() < 1e-15);
        let c0 = HolmgrenMap::centered(2, 0.0, 0.1, 1.0, 1).unwrap();
        let q = HolmgrenQuadratic::new(ConstantField::identity(2), c0, 1.0);
        assert_eq!(q.eval(0.0, &[0.3, 0.1]), Matrix::identity(2));
    }

    #[test]
    fn pushed_fields_have_consistent_derivatives() {
        let map = HolmgrenMap::new(vec![0.1, -0.2, 0.0], 1.5, 0.1, 1.0, 2).unwrap();
        let base: Arc<dyn CoeffField> = Arc::new(RotatingAnisotropic::new(3));
        let pulled = holmgren_coefficients(base.clone(), &map);
        fd_check(&pulled, 0.4, &[0.1, 0.05, 0.03]);
        let q = HolmgrenQuadratic::new(holmgren_coefficients(base.clone(), &map), map.clone(), 0.5);
        fd_check(&q, 0.4, &[0.1, 0.05, 0.03]);
        let g = GlobalWeighted { field: base };
        fd_check(&g, 0.4, &[0.3, -0.7, 0.2]);
    }

    #[test]
    fn cutoff_values() {
        let cs = CutoffSpec::new(1.0, 0.5, 0.5, 0.1).unwrap();
        assert_eq!(cs.chi(0.025), 1.0);
        assert_eq!(cs.chi(0.2), 0.0);
        let mid = cs.chi(0.075);
        assert!(mid > 0.0 && mid < 1.0);
        let h = [0.0, 0.0];
        assert_eq!(cs.kappa(&h, &[0.0, 0.05]), 1.0);
        assert_eq!(cs.kappa(&h, &[0.0, 0.25]), 0.0);
        assert_eq!(cs.kappa(&h, &[0.7, 0.05]), 0.0);
        let k = cs.kappa(&h, &[0.45, 0.05]);
        assert!(k > 0.0 && k < 1.0);
        assert!(CutoffSpec::new(1.0, 1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn global_map() {
        assert_eq!(global_diffeo(&[0.0]).unwrap(), vec![0.0]);
        assert!((global_diffeo(&[0.6]).unwrap()[0] - 0.75).abs() < 1e-15);
        assert!(global_diffeo(&[1.0]).is_err());
        let back = global_diffeo_inverse(&[0.75]);
        assert!((back[0] - 0.6).abs() < 1e-15);
        let a = ConstantField::identity(2);
        let g = GlobalWeighted { field: a };
        assert_eq!(g.eval(0.0, &[0.0, 0.0]), Matrix::identity(2));
    }

    #[test]
    fn schedule_and_regions() {
        let sched = continuation_schedule(2, 1.0, 1.0, 0.1, 3).unwrap();
        assert_eq!(sched.len(), 3);
        for st in &sched {
            let s = st.stage as f64;
            assert!(st.region.contains(0.5, &[0.0, 0.4 * s * 0.1]));
            assert!(!st.region.contains(0.5, &[0.0, 0.6 * s * 0.1]));
        }
        let json = serde_json::to_string(&sched).unwrap();
        let back: Vec<ScheduleStage> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sched);
        assert!(continuation_schedule(2, 1.0, 1.0, 0.1, 0).is_err());
    }

    #[test]
    fn round_trips_are_exact_to_rounding() {
        let rep = geometry_roundtrip_check(3, 1.0, 0.05, 1.0, 5, 2000, 4).unwrap();
        assert!(rep.pass(1e-14), "{rep:?}");
    }
}
