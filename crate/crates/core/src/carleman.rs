//! Discrete evaluation of both sides of the weighted Carleman inequality
//! and sweeps over the large parameter `beta`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::PushedForward;
use crate::solver::{apply_discrete_operator, LowerOrderTerm, Operator, SolutionField, Source, SpaceTimeGrid};
use crate::symbol::CarlemanWeight;

/// Which left side applies: the time-derivative term enters for `alpha >= 4/3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "branch")]
pub enum AlphaBranch {
    Low,
    High { alpha: f64 },
}

impl AlphaBranch {
    pub fn for_alpha(alpha: f64) -> Self {
        if alpha >= 4.0 / 3.0 {
            AlphaBranch::High { alpha }
        } else {
            AlphaBranch::Low
        }
    }

    fn time_power(&self) -> Option<f64> {
        match self {
            AlphaBranch::Low => None,
            AlphaBranch::High { alpha } => Some(3.0 - 4.0 / alpha),
        }
    }
}

/// `prod_j (1 - ((x_j - c_j) / r_j)^2)_+^4` times `256 (s (1 - s))^4` with
/// `s = (t - t_on) / (t_off - t_on)` on the window and zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
    pub t_on: f64,
    pub t_off: f64,
}

impl BumpSpec {
    pub fn validate(&self, grid: &SpaceTimeGrid) -> Result<()> {
        if self.center.len() != grid.dim() || self.radius.len() != grid.dim() {
            return Err(Error::Shape {
                expected: grid.dim(),
                got: self.center.len(),
            });
        }
        if !(self.t_on >= 0.0 && self.t_off > self.t_on && self.t_off <= grid.time.horizon() + 1e-12) {
            return Err(domain(format!(
                "time window [{}, {}] must lie in [0, {}]",
                self.t_on,
                self.t_off,
                grid.time.horizon()
            )));
        }
        for ((c, r), a) in self.center.iter().zip(&self.radius).zip(&grid.axes) {
            if !(*r > 0.0) || c - r <= a.lo || c + r >= a.hi {
                return Err(domain(format!(
                    "bump [{}, {}] must sit strictly inside [{}, {}]",
                    c - r,
                    c + r,
                    a.lo,
                    a.hi
                )));
            }
        }
        Ok(())
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        let s = (t - self.t_on) / (self.t_off - self.t_on);
        if s <= 0.0 || s >= 1.0 {
            0.0
        } else {
            256.0 * (s * (1.0 - s)).powi(4)
        }
    }

    pub fn space_factor(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.center.iter().zip(&self.radius))
            .map(|(x, (c, r))| {
                let q = (x - c) / r;
                let b = 1.0 - q * q;
                if b <= 0.0 {
                    0.0
                } else {
                    b.powi(4)
                }
            })
            .product()
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.time_factor(t) * self.space_factor(x)
    }

    pub fn sample(&self, grid: &SpaceTimeGrid) -> SolutionField {
        let mut f = SolutionField::from_fn(grid.clone(), |t, x| self.eval(t, x));
        f.source = "bump".into();
        f
    }
}

fn trapezoid(n_nodes: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n_nodes];
    w[0] *= 0.5;
    w[n_nodes - 1] *= 0.5;
    w
}

/// Pointwise `|v|^2`, `|grad v|^2` and `|D_t v|^2` at all grid nodes.
struct Densities {
    v2: Vec<f64>,
    grad2: Vec<f64>,
    dt2: Vec<f64>,
}

fn derivative(values: &[f64], stride: usize, pos: usize, nodes: usize, h: f64, at: usize) -> f64 {
    if pos == 0 {
        (values[at + stride] - values[at]) / h
    } else if pos + 1 == nodes {
        (values[at] - values[at - stride]) / h
    } else {
        (values[at + stride] - values[at - stride]) / (2.0 * h)
    }
}

fn densities(v: &SolutionField) -> Densities {
    let g = &v.grid;
    let m = g.space_len();
    let nt = g.time.len();
    let total = nt * m;
    let mut d = Densities {
        v2: vec![0.0; total],
        grad2: vec![0.0; total],
        dt2: vec![0.0; total],
    };
    for n in 0..nt {
        let level = v.slice(n);
        for i in 0..m {
            let k = n * m + i;
            d.v2[k] = level[i] * level[i];
            let mi = g.multi_index(i);
            let mut s = 0.0;
            for (j, axis) in g.axes.iter().enumerate() {
                let dj = derivative(level, g.stride(j), mi[j], axis.nodes(), axis.step(), i);
                s += dj * dj;
            }
            d.grad2[k] = s;
            let dtv = derivative(&v.values, m, n, nt, g.time.dt, k);
            d.dt2[k] = dtv * dtv;
        }
    }
    d
}

/// Trapezoidal `int e^{2 beta psi} f` over the space-time grid.
fn weighted_integral(grid: &SpaceTimeGrid, density: &[f64], beta: f64, weight: &CarlemanWeight) -> f64 {
    let m = grid.space_len();
    let wt = trapezoid(grid.time.len(), grid.time.dt);
    let axis_w: Vec<Vec<f64>> = grid.axes.iter().map(|a| trapezoid(a.nodes(), a.step())).collect();
    let last = grid.dim() - 1;
    let space_w: Vec<f64> = (0..m)
        .map(|i| {
            let mi = grid.multi_index(i);
            let xn = grid.axes[last].coord(mi[last]);
            let base: f64 = mi.iter().enumerate().map(|(j, k)| axis_w[j][*k]).product();
            base * (2.0 * beta * weight.psi(xn)).exp()
        })
        .collect();
    let mut acc = 0.0;
    for (n, w) in wt.iter().enumerate() {
        let row = &density[n * m..(n + 1) * m];
        acc += w * row.iter().zip(&space_w).map(|(f, s)| f * s).sum::<f64>();
    }
    acc
}

fn lhs_from(d: &Densities, grid: &SpaceTimeGrid, beta: f64, weight: &CarlemanWeight, branch: AlphaBranch) -> f64 {
    let mut lhs = beta.powi(3) * weighted_integral(grid, &d.v2, beta, weight)
        + beta * weighted_integral(grid, &d.grad2, beta, weight);
    if let Some(p) = branch.time_power() {
        lhs += beta.powf(p) * weighted_integral(grid, &d.dt2, beta, weight);
    }
    lhs
}

/// `beta^3 int e^{2 beta psi}|v|^2 + beta int e^{2 beta psi}|grad v|^2`, plus
/// `beta^{3-4/alpha} int e^{2 beta psi}|D_t v|^2` on the high branch.
pub fn carleman_lhs(v: &SolutionField, beta: f64, weight: &CarlemanWeight, branch: AlphaBranch) -> f64 {
    lhs_from(&densities(v), &v.grid, beta, weight, branch)
}

/// The conjugated operator in Holmgren coordinates applied to `v`.
pub fn holmgren_residual(v: &SolutionField, pf: &PushedForward, l1: Option<LowerOrderTerm>) -> Result<SolutionField> {
    let op = Operator::holmgren(pf, l1);
    apply_discrete_operator(v, &op, &Source::Zero)
}

/// `int e^{2 beta psi} |P v|^2`.
pub fn carleman_rhs(
    v: &SolutionField,
    beta: f64,
    weight: &CarlemanWeight,
    pf: &PushedForward,
    l1: Option<LowerOrderTerm>,
) -> Result<f64> {
    let r = holmgren_residual(v, pf, l1)?;
    let r2: Vec<f64> = r.values.iter().map(|x| x * x).collect();
    Ok(weighted_integral(&v.grid, &r2, beta, weight))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSweepConfig {
    pub betas: Vec<f64>,
    pub bumps: Vec<BumpSpec>,
    pub weight: CarlemanWeight,
    pub branch: AlphaBranch,
}

impl BetaSweepConfig {
    pub fn validate(&self, grid: &SpaceTimeGrid) -> Result<()> {
        if self.betas.len() < 2 || self.betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(domain("beta grid needs at least two positive values"));
        }
        if self.betas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("beta grid must be increasing"));
        }
        if self.betas[self.betas.len() - 1] < 10.0 * self.betas[0] {
            return Err(domain("beta grid must span at least one decade"));
        }
        if self.bumps.is_empty() {
            return Err(domain("sweep needs at least one test function"));
        }
        for b in &self.bumps {
            b.validate(grid)?;
        }
        Ok(())
    }
}

/// One sweep entry. `lhs` and `rhs` are both divided by `exp(log_scale)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub test_id: usize,
    pub log_scale: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Empirical constant: the largest ratio over the sweep.
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub spread: f64,
    /// Test ids whose ratio increases strictly across the top half of the grid.
    pub diverging: Vec<usize>,
    pub flags: Vec<String>,
}

impl SweepReport {
    pub fn pass(&self) -> bool {
        self.flags.is_empty() && self.diverging.is_empty() && self.spread.is_finite() && self.spread <= 100.0
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("beta,lhs,rhs,ratio,test_id\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.beta, r.lhs, r.rhs, r.ratio, r.test_id
            ));
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Runs every test function against every `beta`. To keep the weight in
/// floating-point range each row is normalized by `exp(2 beta max psi)`
/// over the grid; the ratio is unaffected.
pub fn beta_sweep(
    config: &BetaSweepConfig,
    grid: &SpaceTimeGrid,
    pf: &PushedForward,
    l1: Option<LowerOrderTerm>,
) -> Result<SweepReport> {
    config.validate(grid)?;
    if pf.map.dim() != grid.dim() {
        return Err(Error::Shape {
            expected: grid.dim(),
            got: pf.map.dim(),
        });
    }
    let last = grid.axes[grid.dim() - 1];
    let psi_max = (0..last.nodes())
        .map(|k| config.weight.psi(last.coord(k)))
        .fold(f64::NEG_INFINITY, f64::max);
    let prepared: Result<Vec<(Densities, Vec<f64>)>> = config
        .bumps
        .par_iter()
        .map(|b| {
            let v = b.sample(grid);
            let r = holmgren_residual(&v, pf, l1.clone())?;
            let r2 = r.values.iter().map(|x| x * x).collect();
            Ok((densities(&v), r2))
        })
        .collect();
    let prepared = prepared?;
    let mut rows = Vec::new();
    let mut flags = Vec::new();
    for (id, (d, r2)) in prepared.iter().enumerate() {
        for &beta in &config.betas {
            let w = config.weight.shifted(config.weight.shift - psi_max);
            let lhs = lhs_from(d, grid, beta, &w, config.branch);
            let rhs = weighted_integral(grid, r2, beta, &w);
            let flagged = !(rhs > 0.0) && lhs > 0.0;
            if flagged {
                flags.push(format!("test {id}: rhs vanishes at beta={beta} while lhs > 0"));
            }
            let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
            if !ratio.is_finite() && !flagged {
                flags.push(format!("test {id}: non-finite ratio at beta={beta}"));
            }
            rows.push(SweepRow {
                beta,
                lhs,
                rhs,
                ratio,
                test_id: id,
                log_scale: 2.0 * beta * (psi_max - config.weight.shift),
                flagged,
            });
        }
    }
    let finite: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    let max_ratio = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let nb = config.betas.len();
    let diverging = (0..config.bumps.len())
        .filter(|id| {
            let top = &rows[id * nb + nb / 2..(id + 1) * nb];
            top.windows(2).all(|w| w[1].ratio > w[0].ratio)
        })
        .collect();
    Ok(SweepReport {
        rows,
        max_ratio,
        min_ratio,
        spread: max_ratio / min_ratio,
        diverging,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::ConstantField;
    use crate::fractional::{MultiTermSpec, TimeGrid};
    use crate::geometry::{pushforward_operator, HolmgrenMap};
    use crate::quadrature::tanh_sinh;
    use crate::solver::Axis;
    use std::sync::Arc;

    fn setup(alpha: f64, x: f64, nx: usize, nt: usize) -> (SpaceTimeGrid, PushedForward, CarlemanWeight) {
        let grid = SpaceTimeGrid::new(vec![Axis::new(0.0, x, nx).unwrap()], TimeGrid::spanning(1.0, nt).unwrap()).unwrap();
        let map = HolmgrenMap::centered(1, 1.0, x, 1.0, 1).unwrap();
        let spec = MultiTermSpec::single(alpha).unwrap();
        let pf = pushforward_operator(Arc::new(ConstantField::identity(1)), &spec, &map, 0.0).unwrap();
        (grid, pf, CarlemanWeight::new(x).unwrap())
    }

    fn bump(c: f64, r: f64) -> BumpSpec {
        BumpSpec {
            center: vec![c],
            radius: vec![r],
            t_on: 0.1,
            t_off: 0.9,
        }
    }

    #[test]
    fn zero_function_gives_zero() {
        let (g, pf, w) = setup(0.5, 0.1, 16, 8);
        let v = SolutionField::zeros(g);
        assert_eq!(carleman_lhs(&v, 50.0, &w, AlphaBranch::Low), 0.0);
        assert_eq!(carleman_rhs(&v, 50.0, &w, &pf, None).unwrap(), 0.0);
    }

    #[test]
    fn lhs_matches_separable_quadrature() {
        let (g, _, w) = setup(0.5, 0.1, 10000, 16);
        let b = bump(0.05, 0.03);
        let v = b.sample(&g);
        let beta = 50.0;
        let lhs = carleman_lhs(&v, beta, &w, AlphaBranch::Low);
        let (c, r) = (0.05, 0.03);
        let bx = |x: f64| {
            let q = (x - c) / r;
            (1.0 - q * q).powi(4)
        };
        let dbx = |x: f64| {
            let q = (x - c) / r;
            -8.0 * q / r * (1.0 - q * q).powi(3)
        };
        let tint = tanh_sinh(|t| b.time_factor(t).powi(2), 0.1, 0.9, 1e-14).unwrap().value;
        let xint = tanh_sinh(
            |x| (2.0 * beta * w.psi(x)).exp() * (beta.powi(3) * bx(x).powi(2) + beta * dbx(x).powi(2)),
            c - r,
            c + r,
            1e-14,
        )
        .unwrap()
        .value;
        let oracle = tint * xint;
        assert!(((lhs - oracle) / oracle).abs() < 1e-6, "{lhs} vs {oracle}");
    }

    #[test]
    fn rhs_is_quadratic_and_ratio_is_shift_invariant() {
        let (g, pf, w) = setup(0.5, 0.5, 64, 16);
        let v = bump(0.25, 0.1).sample(&g);
        let mut v2 = v.clone();
        v2.values.iter_mut().for_each(|x| *x *= 2.0);
        let r1 = carleman_rhs(&v, 20.0, &w, &pf, None).unwrap();
        let r2 = carleman_rhs(&v2, 20.0, &w, &pf, None).unwrap();
        assert!((r2 - 4.0 * r1).abs() <= 1e-12 * r2);
        let ws = w.shifted(0.37);
        let ratio = carleman_lhs(&v, 20.0, &w, AlphaBranch::Low) / r1;
        let ratio_s = carleman_lhs(&v, 20.0, &ws, AlphaBranch::Low) / carleman_rhs(&v, 20.0, &ws, &pf, None).unwrap();
        assert!(((ratio - ratio_s) / ratio).abs() < 1e-12);
    }

    #[test]
    fn high_branch_adds_time_term() {
        let (g, _, w) = setup(1.5, 0.5, 32, 16);
        let v = bump(0.25, 0.1).sample(&g);
        assert_eq!(AlphaBranch::for_alpha(1.5), AlphaBranch::High { alpha: 1.5 });
        assert_eq!(AlphaBranch::for_alpha(1.0), AlphaBranch::Low);
        assert!(carleman_lhs(&v, 30.0, &w, AlphaBranch::for_alpha(1.5)) > carleman_lhs(&v, 30.0, &w, AlphaBranch::Low));
    }

    #[test]
    fn refinement_changes_both_sides_little() {
        let sides = |nx: usize, nt: usize| {
            let (g, pf, w) = setup(0.5, 1.0, nx, nt);
            let v = bump(0.5, 0.25).sample(&g);
            (
                carleman_lhs(&v, 10.0, &w, AlphaBranch::Low),
                carleman_rhs(&v, 10.0, &w, &pf, None).unwrap(),
            )
        };
        let (l1, r1) = sides(200, 40);
        let (l2, r2) = sides(400, 80);
        assert!(((l1 - l2) / l2).abs() < 0.01);
        assert!(((r1 - r2) / r2).abs() < 0.01, "{r1} {r2}");
    }

    #[test]
    fn sweep_rejects_bad_grids_and_reports_rows() {
        let (g, pf, w) = setup(0.5, 1.0, 200, 20);
        let mut cfg = BetaSweepConfig {
            betas: vec![5.0, 10.0, 20.0, 40.0, 80.0],
            bumps: vec![bump(0.5, 0.25), bump(0.6, 0.2)],
            weight: w,
            branch: AlphaBranch::Low,
        };
        let rep = beta_sweep(&cfg, &g, &pf, None).unwrap();
        assert_eq!(rep.rows.len(), 10);
        assert!(rep.rows.iter().all(|r| r.ratio.is_finite() && r.lhs >= 0.0 && r.rhs >= 0.0));
        assert!(rep.max_ratio >= rep.min_ratio);
        cfg.betas = vec![5.0, 10.0];
        assert!(beta_sweep(&cfg, &g, &pf, None).is_err());
        cfg.betas = vec![50.0, 10.0, 500.0];
        assert!(beta_sweep(&cfg, &g, &pf, None).is_err());
    }
}
