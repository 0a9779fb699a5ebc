//! Caputo derivatives and the multi-term time-fractional operator on uniform
//! time grids.
//!
//! The discrete derivative of order `alpha` in `(0, 1)` is the L1 scheme
//! (piecewise-linear interpolation inside the memory integral). For
//! `alpha` in `(1, 2)` the L1 scheme of order `alpha - 1` is applied to the
//! backward first differences `(u_j - u_{j-1}) / dt`, with the difference
//! before the first node taken as zero (functions are supported on
//! `t >= 0`).
//!
//! Every discrete operator here is a lower-triangular convolution, exposed
//! through [`TimeOperator::node_weights`] so that implicit solvers can split
//! the current-node weight from the history.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::quadrature;

/// Orders `alpha_1 > ... > alpha_m` and weights `q_j` of the multi-term
/// operator `sum_j q_j d_t^{alpha_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMultiTerm", into = "RawMultiTerm")]
pub struct MultiTermSpec {
    orders: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMultiTerm {
    orders: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawMultiTerm> for MultiTermSpec {
    type Error = Error;

    fn try_from(raw: RawMultiTerm) -> Result<Self> {
        MultiTermSpec::new(raw.orders, raw.weights)
    }
}

impl From<MultiTermSpec> for RawMultiTerm {
    fn from(spec: MultiTermSpec) -> Self {
        RawMultiTerm {
            orders: spec.orders,
            weights: spec.weights,
        }
    }
}

impl MultiTermSpec {
    pub fn new(orders: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if orders.is_empty() {
            return Err(domain("at least one fractional order is required"));
        }
        if orders.len() != weights.len() {
            return Err(Error::Shape {
                expected: orders.len(),
                got: weights.len(),
            });
        }
        if !(orders[0] < 2.0) {
            return Err(domain(format!("leading order {} must be < 2", orders[0])));
        }
        for pair in orders.windows(2) {
            if !(pair[0] > pair[1]) {
                return Err(domain(format!(
                    "orders must be strictly decreasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if !(orders[orders.len() - 1] > 0.0) {
            return Err(domain("all orders must be positive"));
        }
        if weights[0] != 1.0 {
            return Err(domain(format!("q_1 must equal 1, got {}", weights[0])));
        }
        if let Some(q) = weights.iter().find(|q| !(**q > 0.0 && q.is_finite())) {
            return Err(domain(format!("weights must be positive, got {q}")));
        }
        Ok(Self { orders, weights })
    }

    pub fn single(alpha: f64) -> Result<Self> {
        Self::new(vec![alpha], vec![1.0])
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// The leading order `alpha = alpha_1`.
    pub fn alpha(&self) -> f64 {
        self.orders[0]
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(q_l, alpha_l)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights.iter().copied().zip(self.orders.iter().copied())
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Uniform grid `t_k = k * dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain(format!("dt must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(domain("n_steps must be positive"));
        }
        Ok(Self { dt, n_steps })
    }

    /// Grid covering `[0, horizon]` with `n_steps` steps.
    pub fn spanning(horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(domain("n_steps must be positive"));
        }
        Self::new(horizon / n_steps as f64, n_steps)
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.node(self.n_steps)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |k| self.node(k))
    }
}

/// Samples `u(t_k)` aligned with a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(grid: &TimeGrid) -> Self {
        Self::new(vec![0.0; grid.len()])
    }

    pub fn sample(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::new(grid.nodes().map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("series is never empty")
    }
}

/// How much of the memory integral is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum History {
    #[default]
    Full,
    /// Keep only the most recent `window` intervals.
    Truncated { window: usize },
}

/// Discrete time-nonlocal operators sharing the convolution structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeOperator {
    /// Caputo derivative of order in `(0, 2)`. Order 1 degenerates to the
    /// backward difference.
    Caputo(f64),
    /// Riemann-Liouville integral of order in `(0, 1)`, product trapezoidal rule.
    Integral(f64),
    Identity,
}

impl TimeOperator {
    /// The operator with symbol `(1 + i tau)^{alpha - 1}` after conjugation,
    /// i.e. `d_t^{alpha - 1}` read as an integral when `alpha < 1`.
    pub fn reduced_order(alpha: f64) -> Self {
        if alpha < 1.0 {
            TimeOperator::Integral(1.0 - alpha)
        } else if alpha == 1.0 {
            TimeOperator::Identity
        } else {
            TimeOperator::Caputo(alpha - 1.0)
        }
    }

    /// Weights `w_j`, `j = 0..=n`, with `(D u)(t_n) = sum_j w_j u_j`.
    pub fn node_weights(&self, n: usize, dt: f64, history: History) -> Vec<f64> {
        let mut w = vec![0.0; n + 1];
        if n == 0 {
            if let TimeOperator::Identity = self {
                w[0] = 1.0;
            }
            return w;
        }
        match *self {
            TimeOperator::Identity => w[n] = 1.0,
            TimeOperator::Caputo(alpha) => {
                // D = sum_{j=1}^{n} d_j (u_j - u_{j-1})
                let d = caputo_difference_weights(alpha, n, dt);
                let first = match history {
                    History::Full => 1,
                    History::Truncated { window } => n.saturating_sub(window.max(1)) + 1,
                };
                for j in first..=n {
                    w[j] += d[j];
                    w[j - 1] -= d[j];
                }
            }
            TimeOperator::Integral(mu) => {
                let scale = dt.powf(mu) / gamma(mu + 2.0);
                let nf = n as f64;
                let p = mu + 1.0;
                let first = match history {
                    History::Full => 0,
                    History::Truncated { window } => n.saturating_sub(window.max(1)),
                };
                for (j, wj) in w.iter_mut().enumerate().skip(first) {
                    let a = if j == 0 {
                        (nf - 1.0).powf(p) - (nf - 1.0 - mu) * nf.powf(mu)
                    } else if j == n {
                        1.0
                    } else {
                        let k = (n - j) as f64;
                        (k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).powf(p)
                    };
                    *wj = scale * a;
                }
            }
        }
        w
    }

    /// Weight of the newest node `u_n` (independent of `n >= 1`).
    pub fn current_weight(&self, dt: f64) -> f64 {
        match *self {
            TimeOperator::Identity => 1.0,
            TimeOperator::Caputo(alpha) if alpha < 1.0 => dt.powf(-alpha) / gamma(2.0 - alpha),
            TimeOperator::Caputo(alpha) if alpha == 1.0 => 1.0 / dt,
            TimeOperator::Caputo(alpha) => dt.powf(-alpha) / gamma(3.0 - alpha),
            TimeOperator::Integral(mu) => dt.powf(mu) / gamma(mu + 2.0),
        }
    }

    /// Applies the operator at every node of `values`.
    pub fn apply(&self, values: &[f64], dt: f64, history: History) -> Vec<f64> {
        (0..values.len())
            .map(|n| {
                self.node_weights(n, dt, history)
                    .iter()
                    .zip(values)
                    .map(|(w, u)| w * u)
                    .sum()
            })
            .collect()
    }
}

/// `d_j`, `j = 0..=n` (`d_0` unused), for the difference form of the L1
/// family.
fn caputo_difference_weights(alpha: f64, n: usize, dt: f64) -> Vec<f64> {
    let mut d = vec![0.0; n + 1];
    if alpha < 1.0 {
        let norm = dt.powf(-alpha) / gamma(2.0 - alpha);
        let e = 1.0 - alpha;
        for (j, dj) in d.iter_mut().enumerate().skip(1) {
            let i = (n - j) as f64;
            *dj = norm * ((i + 1.0).powf(e) - i.powf(e));
        }
    } else if alpha == 1.0 {
        d[n] = 1.0 / dt;
    } else {
        // L1 of order alpha-1 on g_j = (u_j - u_{j-1})/dt with g_0 = 0:
        // K sum_j a_{n-j} (g_j - g_{j-1}) = K sum_j (a_{n-j} - a_{n-j-1}) g_j
        let k = dt.powf(1.0 - alpha) / gamma(3.0 - alpha) / dt;
        let e = 2.0 - alpha;
        let a = |i: isize| -> f64 {
            if i < 0 {
                0.0
            } else {
                let i = i as f64;
                (i + 1.0).powf(e) - i.powf(e)
            }
        };
        for (j, dj) in d.iter_mut().enumerate().skip(1) {
            let i = (n - j) as isize;
            *dj = k * (a(i) - a(i - 1));
        }
    }
    d
}

fn check_caputo_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) || alpha == 1.0 {
        return Err(domain(format!(
            "Caputo order must lie in (0,1) or (1,2), got {alpha}"
        )));
    }
    Ok(())
}

/// Discrete Caputo derivative at every grid node (full history).
pub fn caputo_apply(series: &Series, alpha: f64, grid: &TimeGrid) -> Result<Series> {
    caputo_apply_with(series, alpha, grid, History::Full)
}

pub fn caputo_apply_with(
    series: &Series,
    alpha: f64,
    grid: &TimeGrid,
    history: History,
) -> Result<Series> {
    check_caputo_order(alpha)?;
    if series.len() != grid.len() {
        return Err(Error::Shape {
            expected: grid.len(),
            got: series.len(),
        });
    }
    if series.values[0] != 0.0 {
        return Err(Error::Precondition(format!(
            "series must vanish at t = 0 (support convention), got {}",
            series.values[0]
        )));
    }
    Ok(Series::new(TimeOperator::Caputo(alpha).apply(
        &series.values,
        grid.dt,
        history,
    )))
}

/// `sum_j q_j d_t^{alpha_j} u` on the grid. An order equal to 1 is the
/// classical first derivative (backward difference, the L1 limit).
pub fn multiterm_apply(series: &Series, spec: &MultiTermSpec, grid: &TimeGrid) -> Result<Series> {
    if series.len() != grid.len() {
        return Err(Error::Shape {
            expected: grid.len(),
            got: series.len(),
        });
    }
    if series.values[0] != 0.0 {
        return Err(Error::Precondition(format!(
            "series must vanish at t = 0 (support convention), got {}",
            series.values[0]
        )));
    }
    let mut out = vec![0.0; grid.len()];
    for (q, alpha) in spec.terms() {
        let d = TimeOperator::Caputo(alpha).apply(&series.values, grid.dt, History::Full);
        for (o, v) in out.iter_mut().zip(&d) {
            *o += q * v;
        }
    }
    Ok(Series::new(out))
}

/// Caputo derivative of a smooth function by direct quadrature.
///
/// `kth_derivative` is `u^{(k)}` with `k = ceil(alpha)`. The substitution
/// `t - eta = t r^{1/(k - alpha)}` absorbs the weakly singular kernel, leaving
/// `t^{k-alpha} / Gamma(k-alpha+1) * int_0^1 u^{(k)}(t - t r^{1/(k-alpha)}) dr`.
pub fn caputo_oracle(
    kth_derivative: &dyn Fn(f64) -> f64,
    alpha: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    check_caputo_order(alpha)?;
    if !(t > 0.0) {
        return Err(domain(format!("oracle time must be positive, got {t}")));
    }
    let k = alpha.ceil();
    let beta = k - alpha;
    let inv = 1.0 / beta;
    let integral = quadrature::tanh_sinh(|r| kth_derivative(t - t * r.powf(inv)), 0.0, 1.0, tol)?;
    Ok(t.powf(beta) / gamma(beta + 1.0) * integral.value)
}

/// Closed-form Caputo derivative of `t^p` (`p > ceil(alpha) - 1`).
pub fn power_rule(p: f64, alpha: f64, t: f64) -> f64 {
    gamma(p + 1.0) / gamma(p + 1.0 - alpha) * t.powf(p - alpha)
}
