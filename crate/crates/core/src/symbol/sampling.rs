//! Samplers over phase space and the sampled lower-bound checks built on
//! them.
//!
//! Near-characteristic points are constructed rather than searched for:
//! with `xi = lambda * xi_hat` the weighted symbol reads
//! `F(tau) + lambda^2 A1 + 2 i lambda |sigma| X~ A2 - sigma^2 X~^2 A3`,
//! so the imaginary equation fixes `lambda` and the real one becomes a
//! scalar equation in `tau` that is even and changes sign once
//! `|sigma| > sqrt(sum q / (X~^2 A3))`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    c_alpha, epsilon_zero, fractional_part, one_plus_i_tau_pow, BracketMode,
    PhasePoint, WeightedSymbol,
};
use crate::coeffs::CoeffField;
use crate::error::{domain, Error, Result};
use crate::geometry::{stretch, weighted_ellipticity_holds, HolmgrenMap};

/// Independent, reproducible stream for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sampling box in Holmgren coordinates: `t` in `t_range`,
/// `|x'| <= transverse_radius`, `x_n` in `xn_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaRegion {
    pub t_range: [f64; 2],
    pub transverse_radius: f64,
    pub xn_range: [f64; 2],
}

impl LemmaRegion {
    /// `t in [0, T]`, `|x'| <= sqrt X`, `0 <= x_n <= X`.
    pub fn standard(x_thick: f64, horizon: f64) -> Self {
        Self {
            t_range: [0.0, horizon],
            transverse_radius: x_thick.sqrt(),
            xn_range: [0.0, x_thick],
        }
    }

    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        let n = x.len();
        let r2: f64 = x[..n - 1].iter().map(|v| v * v).sum();
        t >= self.t_range[0]
            && t <= self.t_range[1]
            && r2 <= self.transverse_radius * self.transverse_radius
            && x[n - 1] >= self.xn_range[0]
            && x[n - 1] <= self.xn_range[1]
    }

    pub fn sample(&self, rng: &mut impl Rng, n: usize) -> (f64, Vec<f64>) {
        let t = uniform(rng, self.t_range[0], self.t_range[1]);
        let r = self.transverse_radius;
        let mut x = vec![0.0; n];
        loop {
            for v in x.iter_mut().take(n - 1) {
                *v = uniform(rng, -r, r);
            }
            if x[..n - 1].iter().map(|v| v * v).sum::<f64>() <= r * r {
                break;
            }
        }
        x[n - 1] = uniform(rng, self.xn_range[0], self.xn_range[1]);
        (t, x)
    }
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r2: f64 = v.iter().map(|x| x * x).sum();
        if r2 > 1e-4 && r2 <= 1.0 {
            let r = r2.sqrt();
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharSampleConfig {
    pub n_samples: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Seeds tried before giving up, as a multiple of `n_samples`.
    #[serde(default = "default_budget")]
    pub budget_factor: usize,
    /// `|sigma| = sigma_min (1 + 10^u)` with `u` uniform in this range.
    #[serde(default = "default_log_excess")]
    pub log_excess: [f64; 2],
}

fn default_tol() -> f64 {
    1e-8
}
fn default_budget() -> usize {
    4
}
fn default_log_excess() -> [f64; 2] {
    [-2.0, 3.0]
}

impl CharSampleConfig {
    pub fn new(n_samples: usize) -> Self {
        Self {
            n_samples,
            tol: default_tol(),
            budget_factor: default_budget(),
            log_excess: default_log_excess(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharSample {
    pub points: Vec<PhasePoint>,
    pub requested: usize,
    pub attempts: usize,
    /// Largest `(|xi|^2 + |1 + i tau|^alpha) / (sigma^2 X^2)` over the points.
    pub k_max: f64,
    /// Largest `|p_psi| / (|xi|^2 + sigma^2 + |tau|^alpha)` over the points.
    pub max_residual: f64,
}

impl CharSample {
    pub fn complete(&self) -> bool {
        self.points.len() >= self.requested
    }
}

struct Reduced {
    a1: f64,
    a2: f64,
    a3: f64,
    xt: f64,
    s: f64,
}

impl Reduced {
    fn residual(&self, f: Complex64, lambda: f64) -> Complex64 {
        let sx = self.s * self.xt;
        f + Complex64::new(lambda * lambda * self.a1 - sx * sx * self.a3, 2.0 * lambda * sx * self.a2)
    }

    fn lambda(&self, f: Complex64) -> f64 {
        -f.im / (2.0 * self.s * self.xt * self.a2)
    }

    fn g(&self, f: Complex64) -> f64 {
        self.residual(f, self.lambda(f)).re
    }
}

fn try_characteristic(
    sym: &WeightedSymbol<'_>,
    region: &LemmaRegion,
    cfg: &CharSampleConfig,
    rng: &mut ChaCha8Rng,
) -> Option<PhasePoint> {
    let n = sym.dim();
    let (t, x) = region.sample(rng, n);
    let dir = unit_vector(rng, n);
    let flip = rng.gen::<bool>();
    let u = uniform(rng, cfg.log_excess[0], cfg.log_excess[1]);

    let a = sym.coeffs.eval(t, &x);
    let mut bd = dir.clone();
    let mut e = vec![0.0; n];
    for j in 0..n - 1 {
        bd[j] += 2.0 * sym.c * x[j] * dir[n - 1];
        e[j] = 2.0 * sym.c * x[j];
    }
    e[n - 1] = 1.0;
    let ae = a.matvec(&e);
    let a1 = a.quadratic_form(&bd);
    let a2: f64 = bd.iter().zip(&ae).map(|(b, v)| b * v).sum();
    let a3: f64 = e.iter().zip(&ae).map(|(b, v)| b * v).sum();
    let xt = sym.weight.x_tilde(x[n - 1]);
    if xt == 0.0 || a2.abs() < 1e-10 * (a1 * a3).sqrt() {
        return None;
    }
    let s_min = (sym.spec.weight_sum() / (xt * xt * a3)).sqrt();
    let s = s_min * (1.0 + 10f64.powf(u));
    let red = Reduced { a1, a2, a3, xt, s };
    let g = |tau: f64| red.g(fractional_part(sym.spec, tau).0);

    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e200 {
            return None;
        }
    }
    // bisection in v = ln(1 + tau)
    let (mut lo_v, mut hi_v) = (0.0, hi.ln_1p());
    for _ in 0..300 {
        let mid = 0.5 * (lo_v + hi_v);
        if mid <= lo_v || mid >= hi_v {
            break;
        }
        if g(mid.exp_m1()) <= 0.0 {
            lo_v = mid;
        } else {
            hi_v = mid;
        }
    }
    let mut tau = (0.5 * (lo_v + hi_v)).exp_m1();
    let mut lambda = red.lambda(fractional_part(sym.spec, tau).0);

    // Newton polish on the complex equation in (tau, lambda)
    let sx = s * xt;
    for _ in 0..8 {
        let (f, df) = fractional_part(sym.spec, tau);
        let r = red.residual(f, lambda);
        let (j11, j12, j21, j22) = (df.re, 2.0 * lambda * a1, df.im, 2.0 * sx * a2);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dtau = (r.re * j22 - j12 * r.im) / det;
        let dlam = (j11 * r.im - j21 * r.re) / det;
        let (nt, nl) = (tau - dtau, lambda - dlam);
        let nr = red.residual(fractional_part(sym.spec, nt).0, nl);
        if !(nr.norm() < r.norm()) {
            break;
        }
        tau = nt;
        lambda = nl;
    }
    if flip {
        tau = -tau;
        lambda = -lambda;
    }
    let xi: Vec<f64> = dir.iter().map(|d| lambda * d).collect();
    let p = PhasePoint {
        t,
        x,
        tau,
        xi,
        sigma: s,
    };
    let v = sym.value(&p).ok()?;
    if v.norm() <= cfg.tol * p.scale_base(sym.spec.alpha()) {
        Some(p)
    } else {
        None
    }
}

/// Points of the region where the weighted principal symbol vanishes to
/// relative tolerance `cfg.tol`, built in seed order and in parallel.
pub fn char_set_sample(
    sym: &WeightedSymbol<'_>,
    region: &LemmaRegion,
    cfg: &CharSampleConfig,
    seed: u64,
) -> Result<CharSample> {
    if !(cfg.tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let budget = cfg.n_samples.saturating_mul(cfg.budget_factor.max(1));
    let mut points = Vec::with_capacity(cfg.n_samples);
    let mut next = 0usize;
    while points.len() < cfg.n_samples && next < budget {
        let want = cfg.n_samples - points.len();
        let end = (next + want.max(64)).min(budget);
        let batch: Vec<Option<PhasePoint>> = (next..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i as u64);
                try_characteristic(sym, region, cfg, &mut rng)
            })
            .collect();
        next = end;
        for p in batch.into_iter().flatten() {
            if points.len() < cfg.n_samples {
                points.push(p);
            }
        }
    }
    let alpha = sym.spec.alpha();
    let xx = sym.weight.x_thick;
    let mut k_max: f64 = 0.0;
    let mut max_residual: f64 = 0.0;
    for p in &points {
        let num = p.xi_norm2() + (1.0 + p.tau * p.tau).powf(0.5 * alpha);
        k_max = k_max.max(num / (p.sigma * p.sigma * xx * xx));
        let v = sym.value(p)?;
        max_residual = max_residual.max(v.norm() / p.scale_base(alpha));
    }
    Ok(CharSample {
        points,
        requested: cfg.n_samples,
        attempts: next,
        k_max,
        max_residual,
    })
}

/// Samples over the region with log-uniform covector magnitudes:
/// `|xi|, sigma in [1e-2, 1e3]`, `|tau| in [1e-3, 1e6]`.
pub fn full_region_sample(region: &LemmaRegion, n: usize, count: usize, seed: u64) -> Vec<PhasePoint> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let (t, x) = region.sample(&mut rng, n);
            let dir = unit_vector(&mut rng, n);
            let mag = 10f64.powf(rng.gen_range(-2.0..=3.0));
            let sigma = 10f64.powf(rng.gen_range(-2.0..=3.0));
            let tau_mag = 10f64.powf(rng.gen_range(-3.0..=6.0));
            let tau = if rng.gen::<bool>() { tau_mag } else { -tau_mag };
            PhasePoint {
                t,
                x,
                tau,
                xi: dir.into_iter().map(|d| d * mag).collect(),
                sigma,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: usize,
    pub count: usize,
}

impl RatioReport {
    pub fn pass(&self) -> bool {
        self.min_ratio > 0.0
    }
}

fn reduce_ratios(ratios: &[f64]) -> Result<RatioReport> {
    if ratios.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut argmin = 0;
    let mut max_ratio = f64::NEG_INFINITY;
    for (i, r) in ratios.iter().enumerate() {
        if r.is_nan() {
            return Err(domain(format!("ratio is NaN at sample {i}")));
        }
        if *r < ratios[argmin] {
            argmin = i;
        }
        max_ratio = max_ratio.max(*r);
    }
    Ok(RatioReport {
        min_ratio: ratios[argmin],
        max_ratio,
        argmin,
        count: ratios.len(),
    })
}

fn require_nonzero_scale(samples: &[PhasePoint], alpha: f64) -> Result<()> {
    for (i, p) in samples.iter().enumerate() {
        if p.scale_base(alpha) == 0.0 {
            return Err(domain(format!("sample {i} is the phase-space origin")));
        }
    }
    Ok(())
}

/// `min principal bracket / (|xi|^2 + sigma^2 + |tau|^alpha)^{3/2}`.
pub fn lemma21_check(samples: &[PhasePoint], sym: &WeightedSymbol<'_>) -> Result<RatioReport> {
    require_nonzero_scale(samples, sym.spec.alpha())?;
    let ratios: Result<Vec<f64>> = samples
        .par_iter()
        .map(|p| Ok(sym.bracket_report(p, BracketMode::Principal)?.ratio))
        .collect();
    reduce_ratios(&ratios?)
}

/// Per-sample `(A, B)` with ratio `varpi * A + B`:
/// `A = |p|^2 / S^2`, `B = 2 {Re p, Im p} / S^{3/2}`.
pub fn garding_terms(samples: &[PhasePoint], sym: &WeightedSymbol<'_>) -> Result<Vec<(f64, f64)>> {
    let alpha = sym.spec.alpha();
    require_nonzero_scale(samples, alpha)?;
    samples
        .par_iter()
        .map(|p| {
            let (v, re, im) = sym.split_gradients(p)?;
            let s = p.scale_base(alpha);
            let full = super::bracket(&re, &im, BracketMode::Full);
            Ok((v.norm_sqr() / (s * s), 2.0 * full / s.powf(1.5)))
        })
        .collect()
}

fn garding_min(terms: &[(f64, f64)], varpi: f64) -> f64 {
    terms
        .iter()
        .map(|(a, b)| varpi * a + b)
        .fold(f64::INFINITY, f64::min)
}

/// `min [varpi S^{-1/2} |p|^2 + 2 {Re p, Im p}] / S^{3/2}`.
pub fn garding_precondition_check(
    samples: &[PhasePoint],
    varpi: f64,
    sym: &WeightedSymbol<'_>,
) -> Result<RatioReport> {
    if !(varpi > 0.0) {
        return Err(domain("varpi must be positive"));
    }
    let terms = garding_terms(samples, sym)?;
    let ratios: Vec<f64> = terms.iter().map(|(a, b)| varpi * a + b).collect();
    reduce_ratios(&ratios)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarpiSearch {
    /// Smallest positive-minimum `varpi` found by bisection.
    pub varpi_star: f64,
    /// `2 varpi_star`, at which the certificate is evaluated.
    pub certified_varpi: f64,
    pub report: RatioReport,
    pub iterations: usize,
}

/// Bisection in `log varpi` over `[lo, hi]` for the smallest `varpi` giving a
/// positive minimum ratio, then the check at twice that value.
pub fn garding_varpi_search(
    samples: &[PhasePoint],
    sym: &WeightedSymbol<'_>,
    lo: f64,
    hi: f64,
) -> Result<VarpiSearch> {
    if !(lo > 0.0 && hi > lo) {
        return Err(domain("varpi search needs 0 < lo < hi"));
    }
    let terms = garding_terms(samples, sym)?;
    if terms.is_empty() {
        return Err(Error::EmptySamples);
    }
    let positive = |w: f64| garding_min(&terms, w) > 0.0;
    let mut iterations = 0;
    let varpi_star = if positive(lo) {
        lo
    } else if !positive(hi) {
        hi
    } else {
        let (mut l, mut h) = (lo.ln(), hi.ln());
        while h - l > 1e-10 && iterations < 200 {
            let m = 0.5 * (l + h);
            if positive(m.exp()) {
                h = m;
            } else {
                l = m;
            }
            iterations += 1;
        }
        h.exp()
    };
    let certified = 2.0 * varpi_star;
    let ratios: Vec<f64> = terms.iter().map(|(a, b)| certified * a + b).collect();
    Ok(VarpiSearch {
        varpi_star,
        certified_varpi: certified,
        report: reduce_ratios(&ratios)?,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma61Report {
    pub ratios: RatioReport,
    pub ellipticity_checked: usize,
    pub ellipticity_failures: usize,
}

impl Lemma61Report {
    pub fn pass(&self) -> bool {
        self.ratios.pass() && self.ellipticity_failures == 0
    }
}

/// Stage-`s` check with the weighted scale
/// `(1 + yt_n^2)^{3/2} (|eta~|^2 + sigma~^2 + |tau|^alpha)^{3/2}`.
///
/// `sym.coeffs` is the globally weighted field expressed in stage-`s`
/// Holmgren coordinates; `global` is the same field in `yt` coordinates and
/// is used for the weighted ellipticity test with constant `delta`.
pub fn lemma61_check(
    samples: &[PhasePoint],
    sym: &WeightedSymbol<'_>,
    global: &dyn CoeffField,
    map: &HolmgrenMap,
    delta: f64,
) -> Result<Lemma61Report> {
    let alpha = sym.spec.alpha();
    require_nonzero_scale(samples, alpha)?;
    let per: Result<Vec<(f64, bool)>> = samples
        .par_iter()
        .map(|p| {
            let yt = map.inverse(p.t, &p.x);
            let ok = weighted_ellipticity_holds(global, delta, p.t, &yt, &p.xi);
            let n = yt.len();
            let eta2: f64 = p
                .xi
                .iter()
                .zip(&yt)
                .map(|(e, y)| {
                    let v = stretch(*y) * e;
                    v * v
                })
                .sum();
            let sig = stretch(yt[n - 1]) * p.sigma;
            let base = eta2 + sig * sig + p.tau.abs().powf(alpha);
            let scale = stretch(yt[n - 1]) * base.powf(1.5);
            let principal = sym.bracket_report(p, BracketMode::Principal)?.principal;
            Ok((principal / scale, ok))
        })
        .collect();
    let per = per?;
    let ratios: Vec<f64> = per.iter().map(|(r, _)| *r).collect();
    Ok(Lemma61Report {
        ratios: reduce_ratios(&ratios)?,
        ellipticity_checked: per.len(),
        ellipticity_failures: per.iter().filter(|(_, ok)| !ok).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub alpha: f64,
    pub constant: f64,
    /// Smallest sampled value of the normalized quantity.
    pub min_normalized: f64,
    pub samples: usize,
}

impl CertificateReport {
    /// Both bounds are attained exactly (at `|tau| = 1` or in the limit),
    /// so the comparison allows a few ulps of rounding.
    pub fn pass(&self) -> bool {
        self.min_normalized >= self.constant * (1.0 - 8.0 * f64::EPSILON)
    }
}

fn certificate(
    alpha: f64,
    constant: f64,
    taus: Vec<f64>,
    normalized: impl Fn(Complex64, f64) -> f64 + Sync,
) -> CertificateReport {
    let min = taus
        .par_iter()
        .map(|&tau| {
            let v = one_plus_i_tau_pow(alpha, tau);
            normalized(v, (1.0 + tau * tau).powf(0.5 * alpha))
        })
        .reduce(|| f64::INFINITY, f64::min);
    CertificateReport {
        alpha,
        constant,
        min_normalized: min,
        samples: taus.len(),
    }
}

/// `|Im (1 + i tau)^alpha| >= C_alpha |1 + i tau|^alpha` on `|tau| in [1, 1e6]`,
/// sampled log-uniformly with both endpoints included.
pub fn c_alpha_certificate(alpha: f64, count: usize, seed: u64) -> Result<CertificateReport> {
    let constant = c_alpha(alpha)?;
    let mut taus: Vec<f64> = (0..count.saturating_sub(2))
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let m = 10f64.powf(rng.gen_range(0.0..=6.0));
            if rng.gen::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    taus.extend([1.0, -1e6]);
    Ok(certificate(alpha, constant, taus, |v, m| v.im.abs() / m))
}

/// `Re (1 + i tau)^alpha >= cos(alpha pi / 4) |1 + i tau|^alpha` on `|tau| <= 1`.
pub fn epsilon_zero_certificate(alpha: f64, count: usize, seed: u64) -> Result<CertificateReport> {
    let constant = epsilon_zero(alpha)?;
    let mut taus: Vec<f64> = (0..count.saturating_sub(2))
        .map(|i| sample_rng(seed, i as u64).gen_range(-1.0..=1.0))
        .collect();
    taus.extend([1.0, -1.0]);
    Ok(certificate(alpha, constant, taus, |v, m| v.re / m))
}

/// `inf_{|tau| >= 1} |sin(alpha arg(1 + i tau))|`, attained at `|tau| = 1`
/// for `alpha <= 1` and as `|tau| -> inf` otherwise.
pub fn im_ratio_infimum(alpha: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    (alpha * FRAC_PI_4).sin().min((alpha * FRAC_PI_2).sin())
}

/// `principal bracket(rho) / rho^3` under `(xi, sigma) -> rho (xi, sigma)`,
/// `tau -> rho^{2/alpha} tau`.
pub fn homogeneity_profile(sym: &WeightedSymbol<'_>, p: &PhasePoint, rhos: &[f64]) -> Result<Vec<f64>> {
    let alpha = sym.spec.alpha();
    rhos.iter()
        .map(|&rho| {
            let q = PhasePoint {
                t: p.t,
                x: p.x.clone(),
                tau: p.tau * rho.powf(2.0 / alpha),
                xi: p.xi.iter().map(|v| v * rho).collect(),
                sigma: p.sigma * rho,
            };
            Ok(sym.bracket_report(&q, BracketMode::Principal)?.principal / rho.powi(3))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{ConstantField, RotatingAnisotropic};
    use crate::fractional::MultiTermSpec;
    use crate::geometry::{holmgren_coefficients, GlobalWeighted};
    use crate::symbol::CarlemanWeight;
    use std::sync::Arc;

    #[test]
    fn characteristic_points_certified() {
        let a = ConstantField::identity(1);
        let spec = MultiTermSpec::single(0.5).unwrap();
        let w = CarlemanWeight::new(0.05).unwrap();
        let sym = WeightedSymbol::new(&spec, &a, w, 1.0);
        let region = LemmaRegion::standard(0.05, 1.0);
        let out = char_set_sample(&sym, &region, &CharSampleConfig::new(500), 7).unwrap();
        assert!(out.complete());
        assert!(out.max_residual <= 1e-8);
        for p in &out.points {
            assert!(p.sigma > 0.0);
            assert!(region.contains(p.t, &p.x));
        }
        let rep = lemma21_check(&out.points, &sym).unwrap();
        assert!(rep.pass(), "{rep:?}");
        let again = char_set_sample(&sym, &region, &CharSampleConfig::new(500), 7).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn garding_reduces_on_characteristic_points() {
        let map = HolmgrenMap::centered(2, 1.0, 0.05, 1.0, 1).unwrap();
        let base: Arc<dyn CoeffField> = Arc::new(RotatingAnisotropic::new(2));
        let field = holmgren_coefficients(base, &map);
        let spec = MultiTermSpec::new(vec![1.5, 0.75], vec![1.0, 0.5]).unwrap();
        let sym = WeightedSymbol::new(&spec, &field, CarlemanWeight::new(0.05).unwrap(), 1.0);
        let region = LemmaRegion::standard(0.05, 1.0);
        let cs = char_set_sample(&sym, &region, &CharSampleConfig::new(200), 3).unwrap();
        let l21 = lemma21_check(&cs.points, &sym).unwrap();
        assert!(l21.pass());
        let terms = garding_terms(&cs.points, &sym).unwrap();
        for (a, _) in &terms {
            assert!(*a < 1e-15);
        }
        let full = full_region_sample(&region, 2, 2000, 11);
        let s = garding_varpi_search(&full, &sym, 1e-6, 1e6).unwrap();
        assert!(s.report.pass(), "{s:?}");
        let r1 = garding_precondition_check(&full, s.certified_varpi, &sym).unwrap();
        let r2 = garding_precondition_check(&full, 2.0 * s.certified_varpi, &sym).unwrap();
        assert!(r2.min_ratio >= r1.min_ratio);
        assert!(matches!(lemma21_check(&[], &sym), Err(Error::EmptySamples)));
    }

    #[test]
    fn lemma61_at_origin_matches_lemma21() {
        let base: Arc<dyn CoeffField> = Arc::new(ConstantField::identity(1));
        let global: Arc<dyn CoeffField> = Arc::new(GlobalWeighted { field: base });
        let map = HolmgrenMap::centered(1, 1.0, 0.05, 1.0, 1).unwrap();
        let field = holmgren_coefficients(global.clone(), &map);
        let spec = MultiTermSpec::single(0.5).unwrap();
        let sym = WeightedSymbol::new(&spec, &field, CarlemanWeight::new(0.05).unwrap(), 1.0);
        // yt = x - X t / T vanishes at x = 0, t = 0
        let p = PhasePoint::new(0.0, vec![0.0], 0.5, vec![0.3], 2.0).unwrap();
        let r61 = lemma61_check(&[p.clone()], &sym, global.as_ref(), &map, 1.0).unwrap();
        let r21 = lemma21_check(&[p], &sym).unwrap();
        assert!((r61.ratios.min_ratio - r21.min_ratio).abs() < 1e-14);
        assert_eq!(r61.ellipticity_failures, 0);
    }

    #[test]
    fn certificates() {
        let e = epsilon_zero_certificate(1.5, 1000, 1).unwrap();
        assert!(e.pass());
        let c = c_alpha_certificate(1.5, 1000, 1).unwrap();
        assert!(c.pass());
        let low = c_alpha_certificate(0.5, 1000, 1).unwrap();
        assert!((low.min_normalized - im_ratio_infimum(0.5)).abs() < 1e-12);
    }

    #[test]
    fn homogeneity_is_cubic() {
        let a = RotatingAnisotropic::new(2);
        let spec = MultiTermSpec::single(0.8).unwrap();
        let sym = WeightedSymbol::new(&spec, &a, CarlemanWeight::new(0.05).unwrap(), 1.0);
        let p = PhasePoint::new(0.2, vec![0.1, 0.02], 1.0, vec![0.3, -0.2], 1.0).unwrap();
        let prof = homogeneity_profile(&sym, &p, &[10.0, 100.0, 1000.0]).unwrap();
        assert!((prof[2] - prof[1]).abs() <= 1e-9 * prof[1].abs());
    }
}
