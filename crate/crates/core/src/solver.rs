//! Finite-difference solver for multi-term time-fractional diffusion in one
//! or two space dimensions.
//!
//! The operator is
//! `sum_l q_l d_t^{alpha_l} u + mu sum_l q_l D^{alpha_l - 1} d_{x_n} u
//!  - sum_{jk} m_jk d_j d_k u - sum_j b_j d_j u - b_0 u`,
//! where the transport term (speed `mu`) appears only for operators written
//! in Holmgren coordinates. With conjugation on, every time-nonlocal part
//! acts as `e^{-t} K (e^{t} u)`.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoeffField, Matrix};
use crate::error::{domain, Error, Result};
use crate::fractional::{History, MultiTermSpec, TimeGrid, TimeOperator};
use crate::geometry::{HolmgrenInverse, PushedForward};
use crate::linalg::{solve_refined, BandMatrix};

pub type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Uniform grid on `[lo, hi]` with `intervals` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub intervals: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, intervals: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(domain(format!("axis needs lo < hi, got [{lo}, {hi}]")));
        }
        if intervals < 4 {
            return Err(domain(format!(
                "axis needs at least 3 interior nodes, got {} intervals",
                intervals
            )));
        }
        Ok(Self { lo, hi, intervals })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.intervals as f64
    }

    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub axes: Vec<Axis>,
    pub time: TimeGrid,
}

impl SpaceTimeGrid {
    pub fn new(axes: Vec<Axis>, time: TimeGrid) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(domain(format!("solver supports 1 or 2 space dimensions, got {}", axes.len())));
        }
        for a in &axes {
            Axis::new(a.lo, a.hi, a.intervals)?;
        }
        Ok(Self { axes, time })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn space_len(&self) -> usize {
        self.axes.iter().map(Axis::nodes).product()
    }

    /// Flat index stride of axis `k` (the last axis is contiguous).
    pub fn stride(&self, k: usize) -> usize {
        self.axes[k + 1..].iter().map(Axis::nodes).product()
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        self.axes
            .iter()
            .enumerate()
            .map(|(k, a)| (idx / self.stride(k)) % a.nodes())
            .collect()
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .zip(&self.axes)
            .map(|(i, a)| a.coord(*i))
            .collect()
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.multi_index(idx)
            .iter()
            .zip(&self.axes)
            .any(|(i, a)| *i == 0 || *i == a.intervals)
    }

    /// Volume element of the space grid.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::step).product()
    }
}

/// `l_1 u = sum_j b_j d_j u + b_0 u`.
#[derive(Clone, Default)]
pub struct LowerOrderTerm {
    pub drift: Option<VectorFn>,
    pub potential: Option<ScalarFn>,
}

impl LowerOrderTerm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(b: Vec<f64>, b0: f64) -> Self {
        Self {
            drift: Some(Arc::new(move |_, _| b.clone())),
            potential: Some(Arc::new(move |_, _| b0)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.drift.is_none() && self.potential.is_none()
    }

    fn drift_at(&self, t: f64, y: &[f64]) -> Option<Vec<f64>> {
        self.drift.as_ref().map(|f| f(t, y))
    }

    fn potential_at(&self, t: f64, y: &[f64]) -> f64 {
        self.potential.as_ref().map_or(0.0, |f| f(t, y))
    }
}

#[derive(Clone, Default)]
pub enum Source {
    #[default]
    Zero,
    Function(ScalarFn),
    /// Values on the full grid, time-major.
    Sampled(Arc<Vec<f64>>),
}

impl Source {
    fn at(&self, grid: &SpaceTimeGrid, n: usize, idx: usize, y: &[f64]) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Function(f) => f(grid.time.node(n), y),
            Source::Sampled(v) => v[n * grid.space_len() + idx],
        }
    }

    fn describe(&self) -> &'static str {
        match self {
            Source::Zero => "zero",
            Source::Function(_) => "function",
            Source::Sampled(_) => "sampled",
        }
    }
}

#[derive(Clone, Default)]
pub enum Boundary {
    #[default]
    Homogeneous,
    Function(ScalarFn),
}

impl Boundary {
    fn at(&self, t: f64, y: &[f64]) -> f64 {
        match self {
            Boundary::Homogeneous => 0.0,
            Boundary::Function(g) => g(t, y),
        }
    }

    fn describe(&self) -> &'static str {
        match self {
            Boundary::Homogeneous => "dirichlet-homogeneous",
            Boundary::Function(_) => "dirichlet-function",
        }
    }
}

/// A discrete space-time operator of the form described in the module docs.
#[derive(Clone)]
pub struct Operator {
    pub spec: MultiTermSpec,
    pub second: Arc<dyn CoeffField>,
    pub lower: LowerOrderTerm,
    /// Speed of the fractional transport term along the last axis.
    pub transport: Option<f64>,
    pub conjugate: bool,
    pub history: History,
    pub check_ellipticity: bool,
}

impl Operator {
    /// `sum_l q_l d_t^{alpha_l} - sum a_jk d_j d_k`.
    pub fn new(spec: MultiTermSpec, coeffs: Arc<dyn CoeffField>) -> Self {
        Self {
            spec,
            second: coeffs,
            lower: LowerOrderTerm::zero(),
            transport: None,
            conjugate: false,
            history: History::Full,
            check_ellipticity: true,
        }
    }

    pub fn with_lower(mut self, lower: LowerOrderTerm) -> Self {
        self.lower = lower;
        self
    }

    pub fn conjugated(mut self, on: bool) -> Self {
        self.conjugate = on;
        self
    }

    pub fn with_transport(mut self, speed: f64) -> Self {
        self.transport = Some(speed);
        self
    }

    /// The conjugated operator in Holmgren coordinates. When `l1` is given,
    /// its coefficients (in original coordinates) are carried through the
    /// chain rule and added to the drift produced by the change of variables.
    pub fn holmgren(pf: &PushedForward, l1: Option<LowerOrderTerm>) -> Self {
        let map = pf.map.clone();
        let coeffs = pf.coeffs.clone();
        let c = map.c;
        let inverse = HolmgrenInverse(map.clone());
        let l1 = l1.filter(|l| !l.is_zero());
        let l1_drift = l1.as_ref().and_then(|l| l.drift.clone());
        let drift: VectorFn = Arc::new(move |t, x| {
            let n = x.len();
            let a = coeffs.eval(t, x);
            let mut b = vec![0.0; n];
            b[n - 1] = 2.0 * c * (0..n - 1).map(|j| a.get(j, j)).sum::<f64>();
            if let Some(f) = &l1_drift {
                let y = crate::coeffs::PointMap::map(&inverse, t, x);
                let by = f(t, &y);
                for j in 0..n - 1 {
                    b[j] += by[j];
                    b[n - 1] += 2.0 * c * x[j] * by[j];
                }
                b[n - 1] += by[n - 1];
            }
            b
        });
        let potential = l1.and_then(|l| l.potential).map(|p| {
            let inverse = HolmgrenInverse(map.clone());
            let f: ScalarFn = Arc::new(move |t, x| {
                let y = crate::coeffs::PointMap::map(&inverse, t, x);
                p(t, &y)
            });
            f
        });
        Self {
            spec: pf.spec.clone(),
            second: pf.second_order.clone(),
            lower: LowerOrderTerm {
                drift: Some(drift),
                potential,
            },
            transport: Some(pf.transport_speed),
            conjugate: true,
            history: History::Full,
            check_ellipticity: true,
        }
    }

    fn check_dims(&self, grid: &SpaceTimeGrid) -> Result<()> {
        if self.second.dim() != grid.dim() {
            return Err(Error::Shape {
                expected: grid.dim(),
                got: self.second.dim(),
            });
        }
        Ok(())
    }

    /// Combined time weights at step `n`, including the conjugation factors.
    fn step_kernel(&self, grid: &SpaceTimeGrid, n: usize) -> StepKernel {
        let dt = grid.time.dt;
        let mut total = vec![0.0; n + 1];
        let mut transport = self.transport.map(|_| vec![0.0; n + 1]);
        for (q, a) in self.spec.terms() {
            let w = TimeOperator::Caputo(a).node_weights(n, dt, self.history);
            for (acc, wj) in total.iter_mut().zip(&w) {
                *acc += q * wj;
            }
            if let (Some(mu), Some(tr)) = (self.transport, transport.as_mut()) {
                let wd = TimeOperator::reduced_order(a).node_weights(n, dt, self.history);
                for (acc, wj) in tr.iter_mut().zip(&wd) {
                    *acc += mu * q * wj;
                }
            }
        }
        let tn = grid.time.node(n);
        let factor = (0..=n)
            .map(|j| {
                if self.conjugate {
                    (grid.time.node(j) - tn).exp()
                } else {
                    1.0
                }
            })
            .collect();
        StepKernel {
            total,
            transport,
            factor,
        }
    }
}

struct StepKernel {
    total: Vec<f64>,
    transport: Option<Vec<f64>>,
    factor: Vec<f64>,
}

/// A grid function on a `SpaceTimeGrid`, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub grid: SpaceTimeGrid,
    pub values: Vec<f64>,
    pub boundary: String,
    pub source: String,
}

impl SolutionField {
    pub fn zeros(grid: SpaceTimeGrid) -> Self {
        let len = grid.time.len() * grid.space_len();
        Self {
            grid,
            values: vec![0.0; len],
            boundary: "none".into(),
            source: "none".into(),
        }
    }

    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn(f64, &[f64]) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        let m = out.grid.space_len();
        for n in 0..out.grid.time.len() {
            let t = out.grid.time.node(n);
            for i in 0..m {
                let y = out.grid.coords(i);
                out.values[n * m + i] = f(t, &y);
            }
        }
        out.source = "sampled".into();
        out
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let m = self.grid.space_len();
        &self.values[n * m..(n + 1) * m]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise product with `g(t, y)`.
    pub fn multiplied(&self, g: impl Fn(f64, &[f64]) -> f64) -> Self {
        let mut out = self.clone();
        let m = self.grid.space_len();
        for n in 0..self.grid.time.len() {
            let t = self.grid.time.node(n);
            for i in 0..m {
                let y = self.grid.coords(i);
                out.values[n * m + i] *= g(t, &y);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Largest max-norm residual of the linear systems over all steps.
    pub max_step_residual: f64,
    /// Smallest pivot ratio over all steps.
    pub min_pivot_ratio: f64,
}

fn second_order_at(
    grid: &SpaceTimeGrid,
    u: &[f64],
    idx: usize,
    m: &Matrix,
    b: Option<&[f64]>,
) -> f64 {
    let d = grid.dim();
    let mut acc = 0.0;
    for j in 0..d {
        let s = grid.stride(j);
        let h = grid.axes[j].step();
        acc += m.get(j, j) * (u[idx + s] - 2.0 * u[idx] + u[idx - s]) / (h * h);
        if let Some(b) = b {
            acc += b[j] * (u[idx + s] - u[idx - s]) / (2.0 * h);
        }
    }
    if d == 2 {
        let (s0, s1) = (grid.stride(0), grid.stride(1));
        let (h0, h1) = (grid.axes[0].step(), grid.axes[1].step());
        let cross = u[idx + s0 + s1] - u[idx + s0 - s1] - u[idx - s0 + s1] + u[idx - s0 - s1];
        acc += (m.get(0, 1) + m.get(1, 0)) * cross / (4.0 * h0 * h1);
    }
    acc
}

fn last_axis_derivative(grid: &SpaceTimeGrid, u: &[f64], idx: usize) -> f64 {
    let k = grid.dim() - 1;
    let s = grid.stride(k);
    (u[idx + s] - u[idx - s]) / (2.0 * grid.axes[k].step())
}

fn ellipticity_probe(m: &Matrix, delta: f64) -> bool {
    let n = m.dim();
    let mut probes: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    if n == 2 {
        probes.push(vec![1.0, 1.0]);
        probes.push(vec![1.0, -1.0]);
    }
    probes.iter().all(|v| {
        let q = m.quadratic_form(v);
        let n2: f64 = v.iter().map(|x| x * x).sum();
        q >= delta * n2 * (1.0 - 1e-12) && q <= n2 / delta * (1.0 + 1e-12)
    })
}

/// Time-nonlocal part at step `n`, interior node `idx`; node `n` itself is
/// included only when `include_current` is set.
fn history_at(
    grid: &SpaceTimeGrid,
    values: &[f64],
    kernel: &StepKernel,
    n: usize,
    idx: usize,
    include_current: bool,
) -> f64 {
    let m = grid.space_len();
    let upto = if include_current { n + 1 } else { n };
    let mut acc = 0.0;
    for j in 0..upto {
        let level = &values[j * m..(j + 1) * m];
        let mut v = kernel.total[j] * level[idx];
        if let Some(tr) = &kernel.transport {
            if tr[j] != 0.0 {
                v += tr[j] * last_axis_derivative(grid, level, idx);
            }
        }
        acc += kernel.factor[j] * v;
    }
    acc
}

/// Implicit time stepping from `u(0) = 0` with Dirichlet data.
pub fn solve(
    op: &Operator,
    source: &Source,
    grid: &SpaceTimeGrid,
    bc: &Boundary,
) -> Result<(SolutionField, SolveReport)> {
    op.check_dims(grid)?;
    let m = grid.space_len();
    let nt = grid.time.n_steps;
    let mut values = vec![0.0; (nt + 1) * m];
    let (kl, ku) = if grid.dim() == 1 {
        (1, 1)
    } else {
        let s = grid.stride(0);
        (s + 1, s + 1)
    };
    let coords: Vec<Vec<f64>> = (0..m).map(|i| grid.coords(i)).collect();
    let boundary: Vec<bool> = (0..m).map(|i| grid.is_boundary(i)).collect();
    let last = grid.dim() - 1;
    let (s_last, h_last) = (grid.stride(last), grid.axes[last].step());
    let mut report = SolveReport {
        max_step_residual: 0.0,
        min_pivot_ratio: f64::INFINITY,
    };
    for n in 1..=nt {
        let t = grid.time.node(n);
        let kernel = op.step_kernel(grid, n);
        let diag_time = kernel.total[n];
        let diag_transport = kernel.transport.as_ref().map_or(0.0, |tr| tr[n]);
        let mut a = BandMatrix::zeros(m, kl, ku);
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let y = &coords[i];
            if boundary[i] {
                a.add(i, i, 1.0);
                rhs[i] = bc.at(t, y);
                continue;
            }
            let mm = op.second.eval(t, y);
            if op.check_ellipticity && !ellipticity_probe(&mm, op.second.delta()) {
                return Err(Error::Precondition(format!(
                    "coefficients fail ellipticity with delta={} at t={t}, y={y:?}",
                    op.second.delta()
                )));
            }
            let b = op.lower.drift_at(t, y);
            let b0 = op.lower.potential_at(t, y);
            a.add(i, i, diag_time - b0);
            for j in 0..grid.dim() {
                let s = grid.stride(j);
                let h = grid.axes[j].step();
                let c2 = mm.get(j, j) / (h * h);
                let c1 = b.as_ref().map_or(0.0, |b| b[j]) / (2.0 * h);
                a.add(i, i, 2.0 * c2);
                a.add(i, i + s, -c2 - c1);
                a.add(i, i - s, -c2 + c1);
            }
            if grid.dim() == 2 {
                let (s0, s1) = (grid.stride(0), grid.stride(1));
                let (h0, h1) = (grid.axes[0].step(), grid.axes[1].step());
                let cc = (mm.get(0, 1) + mm.get(1, 0)) / (4.0 * h0 * h1);
                a.add(i, i + s0 + s1, -cc);
                a.add(i, i + s0 - s1, cc);
                a.add(i, i - s0 + s1, cc);
                a.add(i, i - s0 - s1, -cc);
            }
            if diag_transport != 0.0 {
                let ct = diag_transport / (2.0 * h_last);
                a.add(i, i + s_last, ct);
                a.add(i, i - s_last, -ct);
            }
            rhs[i] = source.at(grid, n, i, y) - history_at(grid, &values, &kernel, n, i, false);
        }
        let (x, res, piv) = solve_refined(&a, &rhs, 1).map_err(|e| match e {
            Error::LinearSolve {
                reason, pivot_ratio, ..
            } => Error::LinearSolve {
                step: n,
                reason,
                pivot_ratio,
            },
            other => other,
        })?;
        report.max_step_residual = report.max_step_residual.max(res);
        report.min_pivot_ratio = report.min_pivot_ratio.min(piv);
        values[n * m..(n + 1) * m].copy_from_slice(&x);
    }
    Ok((
        SolutionField {
            grid: grid.clone(),
            values,
            boundary: bc.describe().into(),
            source: source.describe().into(),
        },
        report,
    ))
}

/// `(operator u - f)` at interior nodes for `n >= 1`; zero elsewhere.
pub fn apply_discrete_operator(u: &SolutionField, op: &Operator, source: &Source) -> Result<SolutionField> {
    let grid = &u.grid;
    op.check_dims(grid)?;
    let m = grid.space_len();
    if u.values.len() != grid.time.len() * m {
        return Err(Error::Shape {
            expected: grid.time.len() * m,
            got: u.values.len(),
        });
    }
    let mut out = SolutionField::zeros(grid.clone());
    out.source = "residual".into();
    let coords: Vec<Vec<f64>> = (0..m).map(|i| grid.coords(i)).collect();
    for n in 1..grid.time.len() {
        let t = grid.time.node(n);
        let kernel = op.step_kernel(grid, n);
        let level = u.slice(n);
        for i in 0..m {
            if grid.is_boundary(i) {
                continue;
            }
            let y = &coords[i];
            let mm = op.second.eval(t, y);
            let b = op.lower.drift_at(t, y);
            let time = history_at(grid, &u.values, &kernel, n, i, true);
            let space = second_order_at(grid, level, i, &mm, b.as_deref());
            let b0 = op.lower.potential_at(t, y);
            out.values[n * m + i] = time - space - b0 * level[i] - source.at(grid, n, i, y);
        }
    }
    Ok(out)
}

const MAGIC: &[u8; 4] = b"FRLB";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub format: String,
    pub dims: Vec<usize>,
    pub dt: f64,
    pub dy: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub boundary: String,
    pub source: String,
    pub max_abs: f64,
}

impl SolutionField {
    pub fn sidecar(&self) -> FieldSidecar {
        let mut dims = vec![self.grid.time.len()];
        dims.extend(self.grid.axes.iter().map(Axis::nodes));
        FieldSidecar {
            format: "f64-le row-major, time slowest".into(),
            dims,
            dt: self.grid.time.dt,
            dy: self.grid.axes.iter().map(Axis::step).collect(),
            lo: self.grid.axes.iter().map(|a| a.lo).collect(),
            hi: self.grid.axes.iter().map(|a| a.hi).collect(),
            boundary: self.boundary.clone(),
            source: self.source.clone(),
            max_abs: self.max_abs(),
        }
    }

    /// Header: magic, `u32` space dimension, `u64` node counts (time first),
    /// `f64` dt, then per axis `f64` lo and dy; payload row-major `f64`.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(64 + 8 * self.values.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.grid.dim() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.grid.time.len() as u64).to_le_bytes());
        for a in &self.grid.axes {
            buf.extend_from_slice(&(a.nodes() as u64).to_le_bytes());
        }
        buf.extend_from_slice(&self.grid.time.dt.to_le_bytes());
        for a in &self.grid.axes {
            buf.extend_from_slice(&a.lo.to_le_bytes());
            buf.extend_from_slice(&a.step().to_le_bytes());
        }
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut pos = 0usize;
        let mut take = |k: usize| -> Result<&[u8]> {
            if pos + k > bytes.len() {
                return Err(domain("truncated field file"));
            }
            let s = &bytes[pos..pos + k];
            pos += k;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(domain("not a field file"));
        }
        let dim = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        if dim == 0 || dim > 2 {
            return Err(domain(format!("unsupported dimension {dim}")));
        }
        let u64_at = |s: &[u8]| u64::from_le_bytes(s.try_into().expect("8 bytes")) as usize;
        let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().expect("8 bytes"));
        let nt = u64_at(take(8)?);
        let nodes: Vec<usize> = (0..dim).map(|_| take(8).map(u64_at)).collect::<Result<_>>()?;
        let dt = f64_at(take(8)?);
        let mut axes = Vec::with_capacity(dim);
        for nn in &nodes {
            let lo = f64_at(take(8)?);
            let dy = f64_at(take(8)?);
            let intervals = nn.saturating_sub(1);
            axes.push(Axis::new(lo, lo + dy * intervals as f64, intervals)?);
        }
        if nt == 0 {
            return Err(domain("field has no time levels"));
        }
        let grid = SpaceTimeGrid::new(axes, TimeGrid::new(dt, nt - 1)?)?;
        let len = nt * grid.space_len();
        let values: Vec<f64> = (0..len).map(|_| take(8).map(f64_at)).collect::<Result<_>>()?;
        Ok(Self {
            grid,
            values,
            boundary: "unknown".into(),
            source: "file".into(),
        })
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.sidecar())?)?;
        Ok(())
    }

    /// CSV with coordinate columns and `u` at time level `n`.
    pub fn write_slice_csv(&self, path: &Path, n: usize) -> Result<()> {
        if n >= self.grid.time.len() {
            return Err(domain(format!("time level {n} out of range")));
        }
        let mut s = String::new();
        let names = ["y1", "y2"];
        s.push_str(&names[..self.grid.dim()].join(","));
        s.push_str(",u\n");
        for (i, v) in self.slice(n).iter().enumerate() {
            for c in self.grid.coords(i) {
                s.push_str(&format!("{c:.16e},"));
            }
            s.push_str(&format!("{v:.16e}\n"));
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Smooth compactly supported source `amplitude * t * bump(|y - center| / width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl SourceSpec {
    pub fn eval(&self, t: f64, y: &[f64]) -> f64 {
        let r2: f64 = y
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / (self.width * self.width);
        if r2 >= 1.0 {
            0.0
        } else {
            self.amplitude * t * (1.0 - r2).powi(4)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcpRow {
    pub source: usize,
    pub distance: f64,
    pub norm_omega: f64,
    pub norm_total: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcpReport {
    pub rows: Vec<UcpRow>,
    pub floor: f64,
    pub min_nontrivial_ratio: Option<f64>,
}

impl UcpReport {
    /// No nontrivial solution has a relative norm on `omega` below the floor.
    pub fn pass(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.norm_total > 0.0)
            .all(|r| r.ratio > self.floor)
    }
}

/// Observation box `omega` and time window `(0, t_prime)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcpGeometry {
    pub omega_lo: Vec<f64>,
    pub omega_hi: Vec<f64>,
    pub t_prime: f64,
}

impl UcpGeometry {
    fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.omega_lo.iter().zip(&self.omega_hi))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn distance(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(self.omega_lo.iter().zip(&self.omega_hi))
            .map(|(v, (lo, hi))| {
                let d = (lo - v).max(v - hi).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Solves with each source and compares the norm of the solution on
/// `omega x (0, t_prime)` with the norm on the full cylinder.
pub fn ucp_experiment(
    op: &Operator,
    grid: &SpaceTimeGrid,
    geometry: &UcpGeometry,
    sources: &[SourceSpec],
) -> Result<UcpReport> {
    use rayon::prelude::*;
    if geometry.omega_lo.len() != grid.dim() || geometry.omega_hi.len() != grid.dim() {
        return Err(Error::Shape {
            expected: grid.dim(),
            got: geometry.omega_lo.len(),
        });
    }
    for s in sources {
        let support_hits_omega = geometry.distance(&s.center) < s.width;
        if support_hits_omega || s.center.len() != grid.dim() {
            return Err(Error::Precondition(
                "each source must be supported away from the observation set".into(),
            ));
        }
    }
    let m = grid.space_len();
    let rows: Result<Vec<UcpRow>> = sources
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let spec = s.clone();
            let src = Source::Function(Arc::new(move |t, y| spec.eval(t, y)));
            let (u, _) = solve(op, &src, grid, &Boundary::Homogeneous)?;
            let (mut omega, mut total) = (0.0, 0.0);
            for n in 1..grid.time.len() {
                let t = grid.time.node(n);
                for i in 0..m {
                    let v = u.values[n * m + i];
                    total += v * v;
                    if t <= geometry.t_prime && geometry.contains(&grid.coords(i)) {
                        omega += v * v;
                    }
                }
            }
            let w = grid.cell_volume() * grid.time.dt;
            let (no, nt) = ((omega * w).sqrt(), (total * w).sqrt());
            Ok(UcpRow {
                source: k,
                distance: geometry.distance(&s.center),
                norm_omega: no,
                norm_total: nt,
                ratio: if nt > 0.0 { no / nt } else { 0.0 },
            })
        })
        .collect();
    let rows = rows?;
    let min_nontrivial_ratio = rows
        .iter()
        .filter(|r| r.norm_total > 0.0)
        .map(|r| r.ratio)
        .reduce(f64::min);
    Ok(UcpReport {
        rows,
        floor: 1e3 * f64::EPSILON,
        min_nontrivial_ratio,
    })
}
