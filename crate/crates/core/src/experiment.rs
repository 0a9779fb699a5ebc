//! Experiment configurations, runners and artifact emission used by the
//! `fraclab` binary. Every runner is deterministic for a fixed seed.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::carleman::{beta_sweep, AlphaBranch, BetaSweepConfig, BumpSpec};
use crate::coeffs::{CoeffField, CoeffPreset, ConstantField, Matrix};
use crate::error::{domain, Error, Result};
use crate::fractional::{caputo_apply, caputo_oracle, power_rule, MultiTermSpec, Series, TimeGrid};
use crate::geometry::{
    continuation_schedule, geometry_roundtrip_check, holmgren_coefficients, pushforward_operator, GlobalWeighted,
    HolmgrenMap,
};
use crate::solver::{
    apply_discrete_operator, solve, Axis, Boundary, LowerOrderTerm, Operator, SolutionField, Source, SourceSpec,
    SpaceTimeGrid, UcpGeometry,
};
use crate::symbol::{
    char_set_sample, full_region_sample, garding_varpi_search, gradient_fd_error, lemma21_check, lemma61_check,
    principal_closed_form, tangential_correction, BracketMode, CarlemanWeight, CharSampleConfig, LemmaRegion,
    PhasePoint, WeightedSymbol,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

/// One thresholded quantity of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::Lt => value < threshold,
            Relation::Le => value <= threshold,
            Relation::Gt => value > threshold,
            Relation::Ge => value >= threshold,
        };
        Self {
            name: name.into(),
            value,
            relation,
            threshold,
            pass,
        }
    }
}

/// CSV table; numbers are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Whitespace-separated plot data with a `#` header line.
#[derive(Debug, Clone, PartialEq)]
pub struct XySeries {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl XySeries {
    pub fn to_text(&self) -> String {
        let mut s = format!("# {}\n", self.header.join(" "));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub seed: u64,
    pub status: String,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub tables: Vec<Table>,
    pub series: Vec<XySeries>,
    pub fields: Vec<(String, SolutionField)>,
}

impl Outcome {
    fn new(command: &str, seed: u64, checks: Vec<Check>, details: serde_json::Value) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            summary: Summary {
                command: command.into(),
                seed,
                status: if pass { "PASS" } else { "FAIL" }.into(),
                checks,
                details,
            },
            tables: Vec::new(),
            series: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.summary.checks.iter().all(|c| c.pass)
    }

    /// Writes `summary.json`, `<table>.csv`, `<series>.xy` and, for fields,
    /// `<name>.bin`, `<name>.json` and a CSV of the last time level.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.summary)?)?;
        for t in &self.tables {
            std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
        }
        for s in &self.series {
            std::fs::write(dir.join(format!("{}.xy", s.name)), s.to_text())?;
        }
        for (name, f) in &self.fields {
            f.write_binary(&dir.join(format!("{name}.bin")))?;
            f.write_sidecar(&dir.join(format!("{name}.json")))?;
            f.write_slice_csv(&dir.join(format!("{name}_final.csv")), f.grid.time.len() - 1)?;
        }
        Ok(())
    }
}

/// Parses a JSON config, reporting the path of the first offending field.
/// Blank input is treated as `{}`.
pub fn parse_config<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

// ---------------------------------------------------------------- caputo

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaputoConfig {
    pub alphas: Vec<f64>,
    pub n_steps: usize,
    #[serde(default = "one")]
    pub t_end: f64,
    /// Test function `u = t^power`.
    #[serde(default = "two")]
    pub power: f64,
    #[serde(default = "five_percent")]
    pub l1_tolerance: f64,
    #[serde(default = "oracle_tol")]
    pub oracle_tolerance: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn two() -> f64 {
    2.0
}
fn five_percent() -> f64 {
    0.05
}
fn oracle_tol() -> f64 {
    1e-8
}

pub fn run_caputo_check(cfg: &CaputoConfig, seed: u64) -> Result<Outcome> {
    let grid = TimeGrid::spanning(cfg.t_end, cfg.n_steps)?;
    let p = cfg.power;
    let series = Series::sample(&grid, |t| t.powf(p));
    let mut checks = Vec::new();
    let mut table = Table::new("caputo", &["alpha", "l1", "oracle", "exact", "rel_err_l1", "rel_err_oracle"]);
    let mut series_out = Vec::new();
    for &alpha in &cfg.alphas {
        let k = alpha.ceil();
        if p < k {
            return Err(domain(format!("power {p} must be at least ceil(alpha) = {k}")));
        }
        let d = caputo_apply(&series, alpha, &grid)?;
        let falling: f64 = (0..k as usize).map(|i| p - i as f64).product();
        let kth = move |t: f64| falling * t.powf(p - k);
        let oracle = caputo_oracle(&kth, alpha, cfg.t_end, 1e-13)?;
        let exact = power_rule(p, alpha, cfg.t_end);
        let (e1, e2) = (((d.last() - exact) / exact).abs(), ((oracle - exact) / exact).abs());
        table.rows.push(vec![alpha, d.last(), oracle, exact, e1, e2]);
        checks.push(Check::new(format!("l1[alpha={alpha}].rel_err"), e1, Relation::Le, cfg.l1_tolerance));
        checks.push(Check::new(
            format!("oracle[alpha={alpha}].rel_err"),
            e2,
            Relation::Le,
            cfg.oracle_tolerance,
        ));
        let stride = (cfg.n_steps / 256).max(1);
        series_out.push(XySeries {
            name: format!("caputo_alpha_{alpha}"),
            header: vec!["t".into(), "l1".into(), "exact".into()],
            rows: (1..grid.len())
                .step_by(stride)
                .map(|i| {
                    let t = grid.node(i);
                    vec![t, d.values[i], power_rule(p, alpha, t)]
                })
                .collect(),
        });
    }
    let mut out = Outcome::new("caputo-check", seed, checks, json!({ "n_steps": cfg.n_steps, "power": p }));
    out.tables.push(table);
    out.series = series_out;
    Ok(out)
}

// ---------------------------------------------------------------- symbol grid

/// Named coefficient families that exist in every dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffFamily {
    Identity,
    DiagonalVariable,
    RotatingAnisotropic,
}

impl CoeffFamily {
    pub fn build(self, n: usize) -> Result<Arc<dyn CoeffField>> {
        match self {
            CoeffFamily::Identity => CoeffPreset::Identity { n },
            CoeffFamily::DiagonalVariable => CoeffPreset::DiagonalVariable { n },
            CoeffFamily::RotatingAnisotropic => CoeffPreset::RotatingAnisotropic { n },
        }
        .build()
    }
}

fn default_family() -> CoeffFamily {
    CoeffFamily::RotatingAnisotropic
}

fn default_ones() -> Vec<usize> {
    vec![1]
}

/// Parameter grid for the symbol-level checks. Term count `m` uses orders
/// `alpha / 2^k` with weights `2^{-k}`, `k = 0..m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolGrid {
    pub alphas: Vec<f64>,
    #[serde(default = "default_ones")]
    pub term_counts: Vec<usize>,
    #[serde(default = "default_ones")]
    pub dims: Vec<usize>,
    #[serde(default = "default_family")]
    pub coeffs: CoeffFamily,
    /// Overrides `coeffs`; its dimension must match every entry of `dims`.
    #[serde(default)]
    pub preset: Option<CoeffPreset>,
    #[serde(rename = "X")]
    pub x_thick: f64,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    #[serde(default = "one")]
    pub c: f64,
    /// Express coefficients in Holmgren coordinates.
    #[serde(default = "yes")]
    pub holmgren: bool,
}

pub struct SymbolCase {
    pub label: String,
    pub alpha: f64,
    pub terms: usize,
    pub n: usize,
    pub spec: MultiTermSpec,
    pub base: Arc<dyn CoeffField>,
    /// The field seen by the symbol (pulled back when `holmgren` is set).
    pub field: Arc<dyn CoeffField>,
    pub map: HolmgrenMap,
    pub weight: CarlemanWeight,
    pub c: f64,
    /// Set when the coefficients are constant in `(t, x)`.
    pub constant: Option<Matrix>,
}

impl SymbolCase {
    pub fn symbol(&self) -> WeightedSymbol<'_> {
        WeightedSymbol::new(&self.spec, self.field.as_ref(), self.weight, self.c)
    }

    pub fn region(&self) -> LemmaRegion {
        LemmaRegion::standard(self.weight.x_thick, self.map.horizon)
    }
}

pub fn multiterm_for(alpha: f64, terms: usize) -> Result<MultiTermSpec> {
    if terms == 0 {
        return Err(domain("term count must be positive"));
    }
    let orders = (0..terms).map(|k| alpha / 2f64.powi(k as i32)).collect();
    let weights = (0..terms).map(|k| 0.5f64.powi(k as i32)).collect();
    MultiTermSpec::new(orders, weights)
}

impl SymbolGrid {
    pub fn cases(&self) -> Result<Vec<SymbolCase>> {
        if self.alphas.is_empty() || self.term_counts.is_empty() || self.dims.is_empty() {
            return Err(domain("alphas, term_counts and dims must be non-empty"));
        }
        let weight = CarlemanWeight::new(self.x_thick)?;
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for &m in &self.term_counts {
                for &n in &self.dims {
                    let spec = multiterm_for(alpha, m)?;
                    let (base, constant) = match &self.preset {
                        Some(p) => {
                            let f = p.build()?;
                            if f.dim() != n {
                                return Err(Error::Shape { expected: n, got: f.dim() });
                            }
                            let constant = match p {
                                CoeffPreset::Identity { n } => Some(Matrix::identity(*n)),
                                CoeffPreset::Constant { rows, .. } => Some(Matrix::from_rows(rows)?),
                                _ => None,
                            };
                            (f, constant)
                        }
                        None => (
                            self.coeffs.build(n)?,
                            (self.coeffs == CoeffFamily::Identity).then(|| Matrix::identity(n)),
                        ),
                    };
                    let map = HolmgrenMap::centered(n, self.c, self.x_thick, self.horizon, 1)?;
                    let field: Arc<dyn CoeffField> = if self.holmgren {
                        Arc::new(holmgren_coefficients(base.clone(), &map))
                    } else {
                        base.clone()
                    };
                    out.push(SymbolCase {
                        label: format!("a{alpha}_m{m}_n{n}"),
                        alpha,
                        terms: m,
                        n,
                        spec,
                        base,
                        field,
                        map,
                        weight,
                        c: self.c,
                        constant,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Distinct seed per case so that cases do not share sample streams.
pub fn case_seed(seed: u64, case: usize) -> u64 {
    seed.wrapping_add((case as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn point_row(p: &PhasePoint) -> Vec<f64> {
    let mut r = vec![p.t];
    r.extend(&p.x);
    r.push(p.tau);
    r.extend(&p.xi);
    r.push(p.sigma);
    r
}

fn point_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|j| format!("x{j}")));
    h.push("tau".into());
    h.extend((1..=n).map(|j| format!("xi{j}")));
    h.push("sigma".into());
    h
}

// ---------------------------------------------------------------- symbol-bracket

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketConfig {
    pub grid: SymbolGrid,
    pub points: usize,
    #[serde(default = "grad_tol")]
    pub gradient_tolerance: f64,
    #[serde(default = "closed_tol")]
    pub closed_form_tolerance: f64,
    #[serde(default = "principal_mode")]
    pub mode: BracketMode,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn grad_tol() -> f64 {
    1e-6
}
fn closed_tol() -> f64 {
    1e-12
}
fn principal_mode() -> BracketMode {
    BracketMode::Principal
}

/// Worst relative gap between the principal bracket and its closed form at
/// `x' = 0`. The tangential correction is included unless `n = 1` or `c = 0`,
/// where it vanishes.
pub fn closed_form_gap(case: &SymbolCase, points: &[PhasePoint], with_tangential: bool) -> Result<f64> {
    let a = case
        .constant
        .as_ref()
        .ok_or_else(|| Error::Precondition("closed form needs constant coefficients".into()))?;
    let sym = case.symbol();
    let mut worst: f64 = 0.0;
    for p in points {
        let mut q = p.clone();
        let n = q.dim();
        q.x[..n - 1].iter_mut().for_each(|v| *v = 0.0);
        let got = sym.bracket_report(&q, BracketMode::Principal)?.principal;
        let mut want = principal_closed_form(a, &q, case.weight);
        if with_tangential {
            want += tangential_correction(a, &q, case.weight, case.c);
        }
        worst = worst.max((got - want).abs() / want.abs());
    }
    Ok(worst)
}

pub fn run_symbol_bracket(cfg: &BracketConfig, seed: u64) -> Result<Outcome> {
    let cases = cfg.grid.cases()?;
    let mut checks = Vec::new();
    let mut details = Vec::new();
    let mut tables = Vec::new();
    for (k, case) in cases.iter().enumerate() {
        let sym = case.symbol();
        let pts = full_region_sample(&case.region(), case.n, cfg.points, case_seed(seed, k));
        let mut header = point_header(case.n);
        header.extend(["re_p", "im_p", "bracket", "principal", "ratio", "fd_error"].map(String::from));
        let mut table = Table {
            name: format!("bracket_{}", case.label),
            header,
            rows: Vec::new(),
        };
        let mut worst_fd: f64 = 0.0;
        for p in &pts {
            let v = sym.value(p)?;
            let rep = sym.bracket_report(p, cfg.mode)?;
            let fd = gradient_fd_error(&sym, p)?;
            worst_fd = worst_fd.max(fd);
            let mut row = point_row(p);
            row.extend([v.re, v.im, rep.bracket, rep.principal, rep.ratio, fd]);
            table.rows.push(row);
        }
        checks.push(Check::new(
            format!("{}.gradient_fd_error", case.label),
            worst_fd,
            Relation::Lt,
            cfg.gradient_tolerance,
        ));
        let mut gap = serde_json::Value::Null;
        if case.constant.is_some() {
            let tangential = case.n > 1 && case.c != 0.0;
            let g = closed_form_gap(case, &pts, tangential)?;
            checks.push(Check::new(
                format!("{}.closed_form_gap", case.label),
                g,
                Relation::Le,
                cfg.closed_form_tolerance,
            ));
            gap = json!({ "value": g, "tangential_term_included": tangential });
        }
        details.push(json!({ "case": case.label, "max_fd_error": worst_fd, "closed_form": gap }));
        tables.push(table);
    }
    let mut out = Outcome::new("symbol-bracket", seed, checks, json!({ "cases": details }));
    out.tables = tables;
    Ok(out)
}

// ---------------------------------------------------------------- sampling configs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub grid: SymbolGrid,
    pub samples: usize,
    #[serde(default = "sample_tol")]
    pub tol: f64,
    #[serde(default = "budget")]
    pub budget_factor: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn sample_tol() -> f64 {
    1e-8
}
fn budget() -> usize {
    4
}

impl LemmaConfig {
    fn sampler(&self) -> CharSampleConfig {
        CharSampleConfig {
            tol: self.tol,
            budget_factor: self.budget_factor,
            ..CharSampleConfig::new(self.samples)
        }
    }
}

pub fn run_char_sample(cfg: &LemmaConfig, seed: u64) -> Result<Outcome> {
    let cases = cfg.grid.cases()?;
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    let mut details = Vec::new();
    for (k, case) in cases.iter().enumerate() {
        let s = char_set_sample(&case.symbol(), &case.region(), &cfg.sampler(), case_seed(seed, k))?;
        checks.push(Check::new(
            format!("{}.count", case.label),
            s.points.len() as f64,
            Relation::Ge,
            cfg.samples as f64,
        ));
        checks.push(Check::new(format!("{}.max_residual", case.label), s.max_residual, Relation::Le, cfg.tol));
        details.push(json!({
            "case": case.label, "count": s.points.len(), "attempts": s.attempts,
            "k_max": s.k_max, "max_residual": s.max_residual,
        }));
        let hdr = point_header(case.n);
        tables.push(Table {
            name: format!("char_{}", case.label),
            header: hdr,
            rows: s.points.iter().map(point_row).collect(),
        });
    }
    let mut out = Outcome::new("char-sample", seed, checks, json!({ "cases": details }));
    out.tables = tables;
    Ok(out)
}

pub fn run_lemma21(cfg: &LemmaConfig, seed: u64) -> Result<Outcome> {
    let cases = cfg.grid.cases()?;
    let mut checks = Vec::new();
    let mut table = Table::new(
        "lemma21",
        &["alpha", "terms", "n", "count", "min_ratio", "max_ratio", "k_max", "max_residual"],
    );
    let mut details = Vec::new();
    for (k, case) in cases.iter().enumerate() {
        let sym = case.symbol();
        let s = char_set_sample(&sym, &case.region(), &cfg.sampler(), case_seed(seed, k))?;
        checks.push(Check::new(
            format!("{}.count", case.label),
            s.points.len() as f64,
            Relation::Ge,
            cfg.samples as f64,
        ));
        let rep = lemma21_check(&s.points, &sym)?;
        checks.push(Check::new(format!("{}.min_ratio", case.label), rep.min_ratio, Relation::Gt, 0.0));
        table.rows.push(vec![
            case.alpha,
            case.terms as f64,
            case.n as f64,
            s.points.len() as f64,
            rep.min_ratio,
            rep.max_ratio,
            s.k_max,
            s.max_residual,
        ]);
        details.push(json!({
            "case": case.label, "min_ratio": rep.min_ratio, "max_ratio": rep.max_ratio,
            "argmin": s.points.get(rep.argmin), "k_max": s.k_max,
        }));
    }
    let min_ratio = table.rows.iter().map(|r| r[4]).fold(f64::INFINITY, f64::min);
    let mut out = Outcome::new("lemma21", seed, checks, json!({ "min_ratio": min_ratio, "cases": details }));
    out.series.push(XySeries {
        name: "lemma21_min_ratio".into(),
        header: vec!["alpha".into(), "terms".into(), "n".into(), "min_ratio".into()],
        rows: table.rows.iter().map(|r| vec![r[0], r[1], r[2], r[4]]).collect(),
    });
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GardingConfig {
    pub grid: SymbolGrid,
    pub samples: usize,
    #[serde(default = "varpi_range")]
    pub varpi_range: [f64; 2],
    #[serde(default)]
    pub seed: Option<u64>,
}

fn varpi_range() -> [f64; 2] {
    [1e-6, 1e6]
}

pub fn run_garding(cfg: &GardingConfig, seed: u64) -> Result<Outcome> {
    let cases = cfg.grid.cases()?;
    let mut checks = Vec::new();
    let mut table = Table::new("garding", &["alpha", "terms", "n", "varpi_star", "certified_varpi", "min_ratio"]);
    for (k, case) in cases.iter().enumerate() {
        let sym = case.symbol();
        let pts = full_region_sample(&case.region(), case.n, cfg.samples, case_seed(seed, k));
        let s = garding_varpi_search(&pts, &sym, cfg.varpi_range[0], cfg.varpi_range[1])?;
        checks.push(Check::new(format!("{}.min_ratio", case.label), s.report.min_ratio, Relation::Gt, 0.0));
        table.rows.push(vec![
            case.alpha,
            case.terms as f64,
            case.n as f64,
            s.varpi_star,
            s.certified_varpi,
            s.report.min_ratio,
        ]);
    }
    let details = json!({ "samples_per_case": cfg.samples, "varpi_range": cfg.varpi_range });
    let mut out = Outcome::new("garding", seed, checks, details);
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma61Config {
    pub grid: SymbolGrid,
    pub stages: Vec<u32>,
    pub samples: usize,
    #[serde(default = "sample_tol")]
    pub tol: f64,
    #[serde(default = "budget")]
    pub budget_factor: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub fn run_lemma61(cfg: &Lemma61Config, seed: u64) -> Result<Outcome> {
    let cases = cfg.grid.cases()?;
    let mut checks = Vec::new();
    let mut table = Table::new(
        "lemma61",
        &["alpha", "terms", "n", "stage", "count", "min_ratio", "ellipticity_failures"],
    );
    let sampler = CharSampleConfig {
        tol: cfg.tol,
        budget_factor: cfg.budget_factor,
        ..CharSampleConfig::new(cfg.samples)
    };
    let mut k = 0usize;
    for case in &cases {
        let global: Arc<dyn CoeffField> = Arc::new(GlobalWeighted { field: case.base.clone() });
        for &s in &cfg.stages {
            let map = case.map.at_stage(s);
            map.validate()?;
            let field = holmgren_coefficients(global.clone(), &map);
            let sym = WeightedSymbol::new(&case.spec, &field, case.weight, case.c);
            let pts = char_set_sample(&sym, &case.region(), &sampler, case_seed(seed, k))?;
            k += 1;
            let rep = lemma61_check(&pts.points, &sym, global.as_ref(), &map, case.base.delta())?;
            let label = format!("{}_s{s}", case.label);
            checks.push(Check::new(
                format!("{label}.count"),
                pts.points.len() as f64,
                Relation::Ge,
                cfg.samples as f64,
            ));
            checks.push(Check::new(format!("{label}.min_ratio"), rep.ratios.min_ratio, Relation::Gt, 0.0));
            checks.push(Check::new(
                format!("{label}.ellipticity_failures"),
                rep.ellipticity_failures as f64,
                Relation::Le,
                0.0,
            ));
            table.rows.push(vec![
                case.alpha,
                case.terms as f64,
                case.n as f64,
                s as f64,
                rep.ellipticity_checked as f64,
                rep.ratios.min_ratio,
                rep.ellipticity_failures as f64,
            ]);
        }
    }
    let mut out = Outcome::new("lemma61", seed, checks, json!({ "stages": cfg.stages }));
    out.tables.push(table);
    Ok(out)
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    Zero,
    Bumps { bumps: Vec<SourceSpec> },
    /// `f` for the exact solution `t^2 sin(pi y)` on `[0, 1]` with constant
    /// coefficients in one dimension.
    Manufactured,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig::Zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerConfig {
    pub drift: Vec<f64>,
    #[serde(default)]
    pub potential: f64,
}

impl LowerConfig {
    fn build(&self) -> LowerOrderTerm {
        LowerOrderTerm::constant(self.drift.clone(), self.potential)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub spec: MultiTermSpec,
    pub coeffs: CoeffPreset,
    pub axes: Vec<Axis>,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub lower: Option<LowerConfig>,
    #[serde(default = "residual_tol")]
    pub residual_tolerance: f64,
    #[serde(default = "error_tol")]
    pub error_tolerance: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn residual_tol() -> f64 {
    1e-10
}
fn error_tol() -> f64 {
    1e-2
}

/// Source and exact solution `t^2 sin(pi y)` for a 1D constant-coefficient
/// problem with diffusion `a` and potential `b0`.
pub fn manufactured_problem(spec: &MultiTermSpec, a: f64, b0: f64) -> (Source, impl Fn(f64, &[f64]) -> f64) {
    let spec = spec.clone();
    let f = Source::Function(Arc::new(move |t, y: &[f64]| {
        let s = (PI * y[0]).sin();
        let time: f64 = spec.terms().map(|(q, al)| q * power_rule(2.0, al, t)).sum();
        time * s + (a * PI * PI - b0) * t * t * s
    }));
    (f, |t: f64, y: &[f64]| t * t * (PI * y[0]).sin())
}

/// Max nodal error of the manufactured problem with `u = t^2 sin(pi y)`.
pub fn manufactured_error(spec: &MultiTermSpec, n_t: usize, n_y: usize) -> Result<f64> {
    let grid = SpaceTimeGrid::new(vec![Axis::new(0.0, 1.0, n_y)?], TimeGrid::spanning(1.0, n_t)?)?;
    let op = Operator::new(spec.clone(), Arc::new(ConstantField::identity(1)));
    let (src, exact) = manufactured_problem(spec, 1.0, 0.0);
    let (u, _) = solve(&op, &src, &grid, &Boundary::Homogeneous)?;
    let m = grid.space_len();
    let mut err: f64 = 0.0;
    for n in 0..grid.time.len() {
        let t = grid.time.node(n);
        for i in 0..m {
            err = err.max((u.values[n * m + i] - exact(t, &grid.coords(i))).abs());
        }
    }
    Ok(err)
}

pub fn run_solve(cfg: &SolveConfig, seed: u64) -> Result<Outcome> {
    let coeffs = cfg.coeffs.build()?;
    let grid = SpaceTimeGrid::new(cfg.axes.clone(), TimeGrid::spanning(cfg.horizon, cfg.n_steps)?)?;
    let lower = cfg.lower.as_ref().map(LowerConfig::build).unwrap_or_default();
    let op = Operator::new(cfg.spec.clone(), coeffs.clone()).with_lower(lower);
    let mut checks = Vec::new();
    let mut details = json!({});
    let (src, exact): (Source, Option<Box<dyn Fn(f64, &[f64]) -> f64>>) = match &cfg.source {
        SourceConfig::Zero => (Source::Zero, None),
        SourceConfig::Bumps { bumps } => {
            let bumps = bumps.clone();
            (
                Source::Function(Arc::new(move |t, y| bumps.iter().map(|b| b.eval(t, y)).sum())),
                None,
            )
        }
        SourceConfig::Manufactured => {
            let a = coeffs.eval(0.0, &[0.5]);
            let unit = grid.dim() == 1 && grid.axes[0].lo == 0.0 && grid.axes[0].hi == 1.0;
            if !unit || !coeffs.time_independent() || cfg.lower.as_ref().is_some_and(|l| l.drift.iter().any(|b| *b != 0.0))
            {
                return Err(Error::Precondition(
                    "manufactured source needs 1D [0, 1], constant coefficients and no drift".into(),
                ));
            }
            let b0 = cfg.lower.as_ref().map_or(0.0, |l| l.potential);
            let (f, e) = manufactured_problem(&cfg.spec, a.get(0, 0), b0);
            (f, Some(Box::new(e)))
        }
    };
    let (u, rep) = solve(&op, &src, &grid, &Boundary::Homogeneous)?;
    checks.push(Check::new("max_step_residual", rep.max_step_residual, Relation::Le, cfg.residual_tolerance));
    let r = apply_discrete_operator(&u, &op, &src)?;
    checks.push(Check::new("discrete_residual", r.max_abs(), Relation::Le, cfg.residual_tolerance));
    if let Some(e) = exact {
        let ex = SolutionField::from_fn(grid.clone(), |t, y| e(t, y));
        let err = u.values.iter().zip(&ex.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        checks.push(Check::new("max_error", err, Relation::Le, cfg.error_tolerance));
        details["max_error"] = json!(err);
    }
    details["min_pivot_ratio"] = json!(rep.min_pivot_ratio);
    details["max_abs"] = json!(u.max_abs());
    let mut out = Outcome::new("solve", seed, checks, details);
    if grid.dim() == 1 {
        let m = grid.space_len();
        let mid = m / 2;
        out.series.push(XySeries {
            name: "solve_midpoint".into(),
            header: vec!["t".into(), format!("u(y={})", grid.coords(mid)[0])],
            rows: (0..grid.time.len())
                .map(|n| vec![grid.time.node(n), u.values[n * m + mid]])
                .collect(),
        });
    }
    out.fields.push(("u".into(), u));
    Ok(out)
}

// ---------------------------------------------------------------- carleman-sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanSweepConfig {
    pub spec: MultiTermSpec,
    pub coeffs: CoeffPreset,
    #[serde(rename = "X")]
    pub x_thick: f64,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    #[serde(default = "one")]
    pub c: f64,
    pub axes: Vec<Axis>,
    pub n_steps: usize,
    pub betas: Vec<f64>,
    pub bumps: Vec<BumpSpec>,
    /// Lower-order terms of the original operator, carried into `P`.
    #[serde(default)]
    pub lower: Option<LowerConfig>,
    #[serde(default = "max_spread")]
    pub max_spread: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn max_spread() -> f64 {
    100.0
}

pub fn run_carleman_sweep(cfg: &CarlemanSweepConfig, seed: u64) -> Result<Outcome> {
    let coeffs = cfg.coeffs.build()?;
    let n = coeffs.dim();
    let grid = SpaceTimeGrid::new(cfg.axes.clone(), TimeGrid::spanning(cfg.horizon, cfg.n_steps)?)?;
    let map = HolmgrenMap::centered(n, cfg.c, cfg.x_thick, cfg.horizon, 1)?;
    let transverse = cfg.axes[..n - 1]
        .iter()
        .map(|a| a.lo.abs().max(a.hi.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let pf = pushforward_operator(coeffs, &cfg.spec, &map, transverse)?;
    let sweep = BetaSweepConfig {
        betas: cfg.betas.clone(),
        bumps: cfg.bumps.clone(),
        weight: CarlemanWeight::new(cfg.x_thick)?,
        branch: AlphaBranch::for_alpha(cfg.spec.alpha()),
    };
    let rep = beta_sweep(&sweep, &grid, &pf, cfg.lower.as_ref().map(LowerConfig::build))?;
    let checks = vec![
        Check::new("flagged_rows", rep.flags.len() as f64, Relation::Le, 0.0),
        Check::new("spread", rep.spread, Relation::Le, cfg.max_spread),
        Check::new("diverging_tests", rep.diverging.len() as f64, Relation::Le, 0.0),
    ];
    let details = json!({
        "max_ratio": rep.max_ratio, "min_ratio": rep.min_ratio, "spread": rep.spread,
        "diverging": rep.diverging, "flags": rep.flags, "branch": sweep.branch,
    });
    let mut out = Outcome::new("carleman-sweep", seed, checks, details);
    let mut table = Table::new("carleman_sweep", &["beta", "lhs", "rhs", "ratio", "test_id"]);
    table.rows = rep
        .rows
        .iter()
        .map(|r| vec![r.beta, r.lhs, r.rhs, r.ratio, r.test_id as f64])
        .collect();
    out.series.push(XySeries {
        name: "carleman_ratio".into(),
        header: vec!["beta".into(), "ratio".into(), "test_id".into()],
        rows: rep.rows.iter().map(|r| vec![r.beta, r.ratio, r.test_id as f64]).collect(),
    });
    out.tables.push(table);
    Ok(out)
}

// ---------------------------------------------------------------- ucp-demo

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcpDemoConfig {
    pub spec: MultiTermSpec,
    pub coeffs: CoeffPreset,
    pub axes: Vec<Axis>,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    pub n_steps: usize,
    pub omega: UcpGeometry,
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub fn run_ucp_demo(cfg: &UcpDemoConfig, seed: u64) -> Result<Outcome> {
    let grid = SpaceTimeGrid::new(cfg.axes.clone(), TimeGrid::spanning(cfg.horizon, cfg.n_steps)?)?;
    let op = Operator::new(cfg.spec.clone(), cfg.coeffs.build()?);
    let rep = crate::solver::ucp_experiment(&op, &grid, &cfg.omega, &cfg.sources)?;
    let worst = rep.min_nontrivial_ratio.unwrap_or(f64::INFINITY);
    let checks = vec![Check::new("min_nontrivial_ratio", worst, Relation::Gt, rep.floor)];
    let mut out = Outcome::new("ucp-demo", seed, checks, serde_json::to_value(&rep)?);
    let mut table = Table::new("ucp", &["source", "distance", "norm_omega", "norm_total", "ratio"]);
    table.rows = rep
        .rows
        .iter()
        .map(|r| vec![r.source as f64, r.distance, r.norm_omega, r.norm_total, r.ratio])
        .collect();
    out.series.push(XySeries {
        name: "ucp_ratio_vs_distance".into(),
        header: vec!["distance".into(), "ratio".into()],
        rows: rep.rows.iter().map(|r| vec![r.distance, r.ratio]).collect(),
    });
    out.tables.push(table);
    Ok(out)
}

// ---------------------------------------------------------------- continuation-plan

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(rename = "X")]
    pub x_thick: f64,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    pub s_max: u32,
    #[serde(default = "plan_samples")]
    pub samples: usize,
    #[serde(default = "plan_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn plan_samples() -> usize {
    10_000
}
fn plan_tol() -> f64 {
    1e-14
}

pub fn run_continuation_plan(cfg: &PlanConfig, seed: u64) -> Result<Outcome> {
    let plan = continuation_schedule(cfg.n, cfg.c, cfg.horizon, cfg.x_thick, cfg.s_max)?;
    let rt = geometry_roundtrip_check(cfg.n, cfg.c, cfg.x_thick, cfg.horizon, cfg.s_max, cfg.samples, seed)?;
    let checks = vec![
        Check::new("holmgren_roundtrip", rt.holmgren, Relation::Le, cfg.tolerance),
        Check::new("global_roundtrip", rt.global, Relation::Le, cfg.tolerance),
        Check::new("stage_identity", rt.stage_identity, Relation::Le, cfg.tolerance),
    ];
    let mut out = Outcome::new("continuation-plan", seed, checks, json!({ "schedule": plan, "round_trip": rt }));
    let mut table = Table::new("continuation_plan", &["stage", "coef_t", "coef_yn", "rhs", "speed", "transverse_radius"]);
    for st in &plan {
        table.rows.push(vec![
            st.stage as f64,
            st.inequality.coef_t,
            st.inequality.coef_yn,
            st.inequality.rhs,
            st.map.speed(),
            st.transverse_radius,
        ]);
    }
    out.tables.push(table);
    out.series.push(XySeries {
        name: "continuation_boundaries".into(),
        header: vec!["t".into(), "stage".into(), "yn_bound".into()],
        rows: plan
            .iter()
            .flat_map(|st| {
                (0..=32).map(move |k| {
                    let t = st.region.horizon * k as f64 / 32.0;
                    let q = &st.inequality;
                    vec![t, st.stage as f64, (q.rhs - q.coef_t * t) / q.coef_yn]
                })
            })
            .collect(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_names_first_missing_field() {
        let e = parse_config::<CaputoConfig>("").unwrap_err();
        match e {
            Error::Config { message, .. } => assert!(message.contains("alphas"), "{message}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_field_reports_path() {
        let e = parse_config::<LemmaConfig>(r#"{"grid": {"alphas": [0.5], "X": 0.05, "bogus": 1}, "samples": 3}"#)
            .unwrap_err();
        match e {
            Error::Config { path, message } => {
                assert!(path.starts_with("grid"), "{path}");
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn caputo_runner_and_csv_precision() {
        let cfg: CaputoConfig = parse_config(r#"{"alphas": [0.5, 1.5], "n_steps": 256}"#).unwrap();
        let out = run_caputo_check(&cfg, 0).unwrap();
        assert!(out.pass());
        let csv = out.tables[0].to_csv();
        let first = csv.lines().nth(1).unwrap().split(',').next().unwrap();
        assert_eq!(first, "5.0000000000000000e-1");
    }

    #[test]
    fn lemma21_runner_is_deterministic() {
        let cfg: LemmaConfig = parse_config(r#"{"grid": {"alphas": [0.5], "dims": [1, 2], "X": 0.05}, "samples": 100}"#).unwrap();
        let a = run_lemma21(&cfg, 9).unwrap();
        let b = run_lemma21(&cfg, 9).unwrap();
        assert!(a.pass());
        assert_eq!(a.tables[0].to_csv(), b.tables[0].to_csv());
        assert_eq!(a.summary.status, "PASS");
    }

    #[test]
    fn closed_form_runner() {
        let cfg: BracketConfig = parse_config(
            r#"{"grid": {"alphas": [0.7], "dims": [1, 2], "X": 0.05, "coeffs": "identity"}, "points": 50}"#,
        )
        .unwrap();
        let out = run_symbol_bracket(&cfg, 1).unwrap();
        assert!(out.pass(), "{:?}", out.summary.checks);
    }

    #[test]
    fn plan_runner() {
        let cfg: PlanConfig = parse_config(r#"{"n": 2, "X": 0.05, "s_max": 3, "samples": 500}"#).unwrap();
        let out = run_continuation_plan(&cfg, 2).unwrap();
        assert!(out.pass());
        assert_eq!(out.tables[0].rows.len(), 3);
    }

    #[test]
    fn solve_runner_manufactured() {
        let cfg: SolveConfig = parse_config(
            r#"{"spec": {"orders": [0.5], "weights": [1.0]}, "coeffs": {"preset": "identity", "n": 1},
                "axes": [{"lo": 0.0, "hi": 1.0, "intervals": 32}], "n_steps": 32,
                "source": {"kind": "manufactured"}, "error_tolerance": 0.05}"#,
        )
        .unwrap();
        let out = run_solve(&cfg, 0).unwrap();
        assert!(out.pass(), "{:?}", out.summary.checks);
        let dir = tempfile::tempdir().unwrap();
        out.write(dir.path()).unwrap();
        assert!(dir.path().join("u.bin").exists());
        assert!(dir.path().join("summary.json").exists());
    }
}
