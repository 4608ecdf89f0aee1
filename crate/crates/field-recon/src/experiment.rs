//! Configuration-driven experiment runner.
//!
//! An experiment is one sweep (over `beta`, measurement SNR, or position
//! SNR) evaluated for a set of filters, producing one CSV row per
//! (sweep point x filter). Output is deterministic for a fixed seed,
//! independent of how work is scheduled across threads.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::filters::FilterKind;
use crate::model::ScenarioParams;
use crate::mse::{
    asymptotic_mse, empirical_mse, sample_eigenvalues, AsymptoticMse, EigenSample, EmpiricalSpec,
    LayoutMode, Model, MseReport,
};
use crate::rng;
use crate::theory::{
    expected_fourier, expected_gram, displacement_series, phi_functional_check, PhiFunction,
};

fn default_eigen_m() -> usize {
    200
}
fn default_eigen_realizations() -> usize {
    50
}

/// One experiment: a single sweep axis, a filter set, and fixed remaining
/// parameters. Parsed from TOML; see the README for the schema.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// "A" (known positions) or "B" (jittered positions).
    pub model: String,
    /// Any of "mf", "zf", "lmmse", "lmmse_jitter", "interp".
    pub filters: Vec<String>,
    /// Harmonic half-count M of the Monte Carlo runs.
    pub m: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Harmonic half-count of the eigenvalue pools behind the asymptotic
    /// columns.
    #[serde(default = "default_eigen_m")]
    pub eigen_m: usize,
    #[serde(default = "default_eigen_realizations")]
    pub eigen_realizations: usize,
    /// CSV destination; None prints to standard output only.
    #[serde(default)]
    pub output: Option<String>,
    pub sweep: Sweep,
    #[serde(default)]
    pub fixed: Fixed,
}

/// Exactly one axis must be present and non-empty. SNRs are accepted in dB
/// (`_db` suffix) or linear.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub beta: Option<Vec<f64>>,
    pub snr_m_db: Option<Vec<f64>>,
    pub snr_m: Option<Vec<f64>>,
    pub snr_x_db: Option<Vec<f64>>,
    pub snr_x: Option<Vec<f64>>,
}

/// Values held fixed across the sweep. Each quantity accepts exactly one
/// spelling: measurement noise as `snr_m_db`, `snr_m`, or `alpha`; position
/// spread as `snr_x_db`, `snr_x`, or `omega`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixed {
    pub beta: Option<f64>,
    pub snr_m_db: Option<f64>,
    pub snr_m: Option<f64>,
    pub alpha: Option<f64>,
    pub snr_x_db: Option<f64>,
    pub snr_x: Option<f64>,
    pub omega: Option<f64>,
}

impl Fixed {
    fn alpha(&self) -> Result<Option<f64>> {
        let given = [
            self.snr_m_db.map(|db| 10f64.powf(-db / 10.0)),
            self.snr_m.map(|s| 1.0 / s),
            self.alpha,
        ];
        exactly_one("snr_m_db/snr_m/alpha", &given)
    }

    fn omega(&self) -> Result<Option<f64>> {
        let given = [
            self.snr_x_db.map(omega_from_snr_x_db),
            self.snr_x.map(|s| if s.is_infinite() { 0.0 } else { (1.0 / s).sqrt() }),
            self.omega,
        ];
        exactly_one("snr_x_db/snr_x/omega", &given)
    }
}

fn exactly_one(what: &str, given: &[Option<f64>; 3]) -> Result<Option<f64>> {
    let set: Vec<f64> = given.iter().flatten().copied().collect();
    match set.len() {
        0 => Ok(None),
        1 => Ok(Some(set[0])),
        _ => Err(Error::Config(format!(
            "give at most one of {what}, not {}",
            set.len()
        ))),
    }
}

fn omega_from_snr_x_db(db: f64) -> f64 {
    if db.is_infinite() && db > 0.0 {
        0.0
    } else {
        10f64.powf(-db / 20.0)
    }
}

/// One CSV row: a (sweep point, filter) result.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub model: Model,
    pub kind: FilterKind,
    pub params: ScenarioParams,
    pub m: usize,
    pub r: usize,
    pub trials: usize,
    pub seed: u64,
    pub mse_emp: f64,
    pub stderr: f64,
    pub mse_trace: Option<f64>,
    pub mse_asym: Option<AsymptoticMse>,
    pub lower_bound: f64,
}

pub const CSV_HEADER: &str =
    "model,filter,beta,alpha,snr_m_db,omega,snr_x_db,m,r,trials,seed,mse_emp,stderr,mse_trace,mse_asym,lower_bound";

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        let asym = match self.mse_asym {
            None => String::new(),
            Some(AsymptoticMse::Value(v)) => fmt_f64(v),
            Some(AsymptoticMse::Divergent) => "divergent".into(),
            Some(AsymptoticMse::BoundOnly(_)) => "bound_only".into(),
        };
        let trace = self.mse_trace.map(fmt_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model.label(),
            self.kind.label(),
            fmt_f64(self.params.beta),
            fmt_f64(self.params.alpha),
            fmt_f64(self.params.snr_m_db()),
            fmt_f64(self.params.omega),
            fmt_f64(self.params.snr_x_db()),
            self.m,
            self.r,
            self.trials,
            self.seed,
            fmt_f64(self.mse_emp),
            fmt_f64(self.stderr),
            trace,
            asym,
            fmt_f64(self.lower_bound),
        )
    }
}

pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for row in rows {
        let _ = writeln!(s, "{}", row.to_csv());
    }
    s
}

fn parse_model(s: &str) -> Result<Model> {
    match s {
        "A" | "a" => Ok(Model::A),
        "B" | "b" => Ok(Model::B),
        other => Err(Error::Config(format!("unknown model `{other}`"))),
    }
}

/// A validated, fully resolved experiment plan.
#[derive(Debug, Clone)]
pub struct Plan {
    pub model: Model,
    pub kinds: Vec<FilterKind>,
    pub points: Vec<ScenarioParams>,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub eigen_m: usize,
    pub eigen_realizations: usize,
}

impl ExperimentConfig {
    /// Validate and resolve into a concrete sweep plan.
    pub fn plan(&self) -> Result<Plan> {
        let model = parse_model(&self.model)?;
        if self.filters.is_empty() {
            return Err(Error::Config("filter set is empty".into()));
        }
        let kinds: Vec<FilterKind> = self
            .filters
            .iter()
            .map(|s| s.parse::<FilterKind>())
            .collect::<Result<_>>()?;
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if model == Model::A
            && kinds.contains(&FilterKind::LmmseJitter) {
                return Err(Error::Config(
                    "the jitter-aware filter applies to model B only".into(),
                ));
            }

        let fixed_alpha = self.fixed.alpha()?;
        let fixed_omega = self.fixed.omega()?;
        let fixed_beta = self.fixed.beta;

        let axes = [
            self.sweep.beta.is_some(),
            self.sweep.snr_m_db.is_some() || self.sweep.snr_m.is_some(),
            self.sweep.snr_x_db.is_some() || self.sweep.snr_x.is_some(),
        ];
        if axes.iter().filter(|&&a| a).count() != 1
            || (self.sweep.snr_m_db.is_some() && self.sweep.snr_m.is_some())
            || (self.sweep.snr_x_db.is_some() && self.sweep.snr_x.is_some())
        {
            return Err(Error::Config(
                "exactly one sweep axis must be given (beta, snr_m[_db], or snr_x[_db])".into(),
            ));
        }

        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("missing fixed parameter `{name}`")))
        };
        let points: Vec<ScenarioParams> = if let Some(betas) = &self.sweep.beta {
            let alpha = need(fixed_alpha, "snr_m (or alpha)")?;
            let omega = fixed_omega.unwrap_or(0.0);
            betas
                .iter()
                .map(|&b| ScenarioParams::new(b, alpha, omega))
                .collect::<Result<_>>()?
        } else if self.sweep.snr_m_db.is_some() || self.sweep.snr_m.is_some() {
            let alphas: Vec<f64> = match (&self.sweep.snr_m_db, &self.sweep.snr_m) {
                (Some(dbs), None) => dbs.iter().map(|&db| 10f64.powf(-db / 10.0)).collect(),
                (None, Some(lin)) => lin.iter().map(|&s| 1.0 / s).collect(),
                _ => unreachable!(),
            };
            let beta = need(fixed_beta, "beta")?;
            let omega = fixed_omega.unwrap_or(0.0);
            alphas
                .iter()
                .map(|&a| ScenarioParams::new(beta, a, omega))
                .collect::<Result<_>>()?
        } else {
            let omegas: Vec<f64> = match (&self.sweep.snr_x_db, &self.sweep.snr_x) {
                (Some(dbs), None) => dbs.iter().map(|&db| omega_from_snr_x_db(db)).collect(),
                (None, Some(lin)) => lin
                    .iter()
                    .map(|&s| if s.is_infinite() { 0.0 } else { (1.0 / s).sqrt() })
                    .collect(),
                _ => unreachable!(),
            };
            let beta = need(fixed_beta, "beta")?;
            let alpha = need(fixed_alpha, "snr_m (or alpha)")?;
            omegas
                .iter()
                .map(|&w| ScenarioParams::new(beta, alpha, w))
                .collect::<Result<_>>()?
        };
        if points.is_empty() {
            return Err(Error::Config("sweep list is empty".into()));
        }
        if model == Model::A
            && points.iter().any(|p| p.omega != 0.0) {
                return Err(Error::Config(
                    "model A has exactly known positions; set model B for omega > 0".into(),
                ));
            }

        Ok(Plan {
            model,
            kinds,
            points,
            m: self.m,
            trials: self.trials,
            seed: self.seed,
            eigen_m: self.eigen_m,
            eigen_realizations: self.eigen_realizations,
        })
    }
}

/// Parse a TOML experiment configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn needs_pool(model: Model, kind: FilterKind, alpha: f64) -> bool {
    match (model, kind) {
        (_, FilterKind::Zf) => true,
        (Model::A, FilterKind::Lmmse) => alpha > 0.0,
        (Model::B, FilterKind::Lmmse) => true,
        _ => false,
    }
}

/// Run the full sweep and return one row per (sweep point x filter), in
/// sweep order. Deterministic for a fixed seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let plan = config.plan()?;
    run_plan(&plan)
}

pub fn run_plan(plan: &Plan) -> Result<Vec<ResultRow>> {
    // Eigenvalue pools are shared across sweep points with equal beta.
    let mut pools: HashMap<u64, EigenSample> = HashMap::new();
    for point in &plan.points {
        if plan
            .kinds
            .iter()
            .any(|&k| needs_pool(plan.model, k, point.alpha))
        {
            pools.entry(point.beta.to_bits()).or_insert(sample_eigenvalues(
                point.beta,
                plan.eigen_m,
                plan.eigen_realizations,
                plan.seed,
            )?);
        }
    }

    let mut rows = Vec::with_capacity(plan.points.len() * plan.kinds.len());
    for (pi, point) in plan.points.iter().enumerate() {
        let point_seed = rng::derive(plan.seed, pi as u64);
        for &kind in &plan.kinds {
            let spec = EmpiricalSpec {
                model: plan.model,
                kind,
                m: plan.m,
                params: *point,
                trials: plan.trials,
                seed: point_seed,
                layout: LayoutMode::Random,
                cond_threshold: None,
            };
            let report: MseReport = empirical_mse(&spec)?;
            let mse_asym = if kind == FilterKind::Interp {
                None
            } else {
                let pool = pools.get(&point.beta.to_bits());
                Some(asymptotic_mse(plan.model, kind, point, pool)?)
            };
            rows.push(ResultRow {
                model: plan.model,
                kind,
                params: *point,
                m: plan.m,
                r: report.r,
                trials: plan.trials,
                seed: point_seed,
                mse_emp: report.mse_empirical,
                stderr: report.std_error,
                mse_trace: report.mse_trace,
                mse_asym,
                lower_bound: report.lower_bound,
            });
        }
    }
    Ok(rows)
}

/// Named figure presets. Each preset expands to one config per curve family
/// (the source figures overlay several parameter sets in one plot).
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    let snr_m_axis: Vec<f64> = (0..=8).map(|i| 5.0 * i as f64).collect();
    let beta_axis: Vec<f64> = (1..=18).map(|i| 0.05 * i as f64).collect();
    let base = |model: &str, filters: &[&str], m: usize| ExperimentConfig {
        model: model.into(),
        filters: filters.iter().map(|s| s.to_string()).collect(),
        m,
        trials: 100,
        seed: 42,
        eigen_m: default_eigen_m(),
        eigen_realizations: default_eigen_realizations(),
        output: None,
        sweep: Sweep::default(),
        fixed: Fixed::default(),
    };
    let snr_sweep = |mut c: ExperimentConfig, beta: f64, snr_x_db: Option<f64>| {
        c.sweep.snr_m_db = Some(snr_m_axis.clone());
        c.fixed.beta = Some(beta);
        c.fixed.snr_x_db = snr_x_db;
        c
    };
    let configs = match name {
        // Model A, MSE vs beta at alpha = 1/2, M = 40.
        "fig1" => {
            let mut c = base("A", &["mf", "zf", "lmmse"], 40);
            c.sweep.beta = Some(beta_axis);
            c.fixed.alpha = Some(0.5);
            vec![c]
        }
        // Model A, MSE vs SNR_m at beta = 0.2, M = 10, with the
        // interpolation baseline.
        "fig2" => vec![snr_sweep(
            base("A", &["mf", "zf", "lmmse", "interp"], 10),
            0.2,
            None,
        )],
        // Model A, LMMSE vs SNR_m for several beta.
        "fig3" => [0.1, 0.2, 0.4, 0.6, 0.8]
            .iter()
            .map(|&b| snr_sweep(base("A", &["lmmse"], 10), b, None))
            .collect(),
        // Model B, ZF vs SNR_m at beta = 0.2 for SNR_x in {10, 20, inf} dB.
        "fig4" => [10.0, 20.0, f64::INFINITY]
            .iter()
            .map(|&sx| snr_sweep(base("B", &["zf"], 10), 0.2, Some(sx)))
            .collect(),
        // Model B, displacement-agnostic LMMSE, same axes.
        "fig5" => [10.0, 20.0, f64::INFINITY]
            .iter()
            .map(|&sx| snr_sweep(base("B", &["lmmse"], 10), 0.2, Some(sx)))
            .collect(),
        // Model B, jitter-aware LMMSE vs its lower bound.
        "fig6" => [10.0, 20.0, f64::INFINITY]
            .iter()
            .map(|&sx| snr_sweep(base("B", &["lmmse_jitter"], 10), 0.2, Some(sx)))
            .collect(),
        // Model B, jitter-aware vs displacement-agnostic LMMSE.
        "fig7" => [10.0, 20.0, f64::INFINITY]
            .iter()
            .map(|&sx| {
                snr_sweep(base("B", &["lmmse", "lmmse_jitter"], 10), 0.2, Some(sx))
            })
            .collect(),
        // Model B, displacement-agnostic LMMSE over beta and SNR_x.
        "fig8" => {
            let mut v = Vec::new();
            for &sx in &[10.0, 20.0] {
                for &b in &[0.1, 0.2, 0.4] {
                    v.push(snr_sweep(base("B", &["lmmse"], 10), b, Some(sx)));
                }
            }
            v
        }
        // Model B, both LMMSE variants at SNR_x = 10 dB over beta.
        "fig9" => [0.1, 0.2, 0.4]
            .iter()
            .map(|&b| {
                snr_sweep(base("B", &["lmmse", "lmmse_jitter"], 10), b, Some(10.0))
            })
            .collect(),
        // The beta = 0.4, SNR_x = 10 dB slice used by the sizing example:
        // the jitter-aware LMMSE flattens to its floor at high SNR_m.
        "fig10" => vec![snr_sweep(
            base("B", &["lmmse", "lmmse_jitter"], 10),
            0.4,
            Some(10.0),
        )],
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (expected fig1..fig10)"
            )))
        }
    };
    Ok(configs)
}

pub fn preset_names() -> Vec<String> {
    (1..=10).map(|i| format!("fig{i}")).collect()
}

/// One verification check outcome.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Quick,
    Full,
}

fn check(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed,
        detail,
    }
}

/// Run the identity/reduction checks. `Quick` keeps every check under a few
/// seconds; `Full` adds the large eigenvalue-pool moment checks.
pub fn verify(level: VerifyLevel) -> Result<Vec<CheckOutcome>> {
    use crate::filters::{char_matrix, gamma_param};
    use crate::model::{apply_jitter, draw_layout, fourier_matrix, harmonic_count};
    use crate::mse::{nu, trace_mse_model_a, trace_mse_model_b};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    let mut out = Vec::new();

    // 1. Series expansion of the Fourier matrix around mean positions.
    {
        let m = 10;
        let r = 20;
        let mut rs = rng::root_stream(1001);
        let base = draw_layout(r, &mut rs)?;
        let jittered = apply_jitter(&base, 1e-3, &mut rs)?;
        let delta: Vec<f64> = jittered
            .actual_positions
            .iter()
            .zip(&jittered.mean_positions)
            .map(|(&a, &b)| {
                let d = a - b;
                if d > 0.5 {
                    d - 1.0
                } else if d < -0.5 {
                    d + 1.0
                } else {
                    d
                }
            })
            .collect();
        let g_hat = fourier_matrix(&jittered.mean_positions, m)?;
        let g_exact = fourier_matrix(&jittered.actual_positions, m)?;
        let err = max_entry(&(displacement_series(&g_hat, &delta, 50)? - &g_exact.entries));
        out.push(check(
            "series expansion (N=50, M=10, r=20, sigma=1e-3)",
            err < 1e-10,
            format!("max entry error {err:.3e}, tolerance 1e-10"),
        ));
    }

    // 2-3. Mean Fourier matrix and mean Gram matrix under displacements.
    {
        let m = 5;
        let r = 10;
        let sigma_delta = 0.02;
        let draws = match level {
            VerifyLevel::Quick => 20_000,
            VerifyLevel::Full => 100_000,
        };
        let mut rs = rng::root_stream(1002);
        let base = draw_layout(r, &mut rs)?;
        let g_hat = fourier_matrix(&base.mean_positions, m)?;
        let c = char_matrix(m, sigma_delta)?;
        let n = harmonic_count(m);
        let mut mean_g = DMatrix::<Complex64>::zeros(n, r);
        let mut mean_gram = DMatrix::<Complex64>::zeros(r, r);
        for _ in 0..draws {
            let j = apply_jitter(&base, sigma_delta, &mut rs)?;
            let g = fourier_matrix(&j.actual_positions, m)?;
            mean_gram += g.entries.adjoint() * &g.entries;
            mean_g += g.entries;
        }
        mean_g /= Complex64::new(draws as f64, 0.0);
        mean_gram /= Complex64::new(draws as f64, 0.0);
        let tol_g = 3.0 / ((n as f64).sqrt() * (draws as f64).sqrt());
        let err_g = max_entry(&(mean_g - expected_fourier(&g_hat, &c)?));
        out.push(check(
            "mean Fourier matrix = C G (Monte Carlo)",
            err_g < tol_g,
            format!("max residual {err_g:.3e}, 3-sigma bound {tol_g:.3e}, {draws} draws"),
        ));
        let tol_gram = 3.0 / (draws as f64).sqrt();
        let err_gram = max_entry(&(mean_gram - expected_gram(&g_hat, &c)?));
        out.push(check(
            "mean Gram matrix identity (Monte Carlo)",
            err_gram < tol_gram,
            format!("max residual {err_gram:.3e}, 3-sigma bound {tol_gram:.3e}, {draws} draws"),
        ));
    }

    // 4. Trace-functional duality for polynomial and resolvent functions.
    {
        let (m_large, realizations) = match level {
            VerifyLevel::Quick => (30, 10),
            VerifyLevel::Full => (100, 20),
        };
        for (f, name) in [
            (PhiFunction::Identity, "identity"),
            (PhiFunction::Square, "square"),
            (PhiFunction::LmmseKernel { alpha_beta: 0.1 }, "resolvent"),
        ] {
            let (mat, eig) = phi_functional_check(f, 0.2, m_large, realizations, 1003)?;
            let err = (mat - eig).abs() / mat.abs().max(1e-30);
            out.push(check(
                &format!("trace functional vs eigenvalue mean ({name})"),
                err < 1e-8,
                format!("matrix side {mat:.6e}, eigenvalue side {eig:.6e}"),
            ));
        }
    }

    // 5. Zero-displacement reduction of the jittered-model formulas.
    {
        let m = 8;
        let alpha = 0.4;
        let mut rs = rng::root_stream(1004);
        let layout = draw_layout(85, &mut rs)?;
        let g = fourier_matrix(&layout.mean_positions, m)?;
        let c = char_matrix(m, 0.0)?;
        let gamma = gamma_param(alpha, &c);
        let mut worst = 0.0f64;
        for kind in [FilterKind::Mf, FilterKind::Zf, FilterKind::Lmmse] {
            let a = trace_mse_model_a(kind, &g, alpha, None)?;
            let b = trace_mse_model_b(kind, &g, alpha, &c, gamma, None)?;
            worst = worst.max(max_entry(&(a.matrix - b.matrix)));
        }
        let a = trace_mse_model_a(FilterKind::Lmmse, &g, alpha, None)?;
        let b = trace_mse_model_b(FilterKind::LmmseJitter, &g, alpha, &c, gamma, None)?;
        worst = worst.max(max_entry(&(a.matrix - b.matrix)));
        out.push(check(
            "zero-displacement reduction of finite-size formulas",
            worst < 1e-10,
            format!("max entry difference {worst:.3e}, tolerance 1e-10"),
        ));

        // Asymptotic reduction at omega = 0 (uses nu(0) = 1 exactly).
        let pool = sample_eigenvalues(0.2, 40, 5, 1005)?;
        let p0 = ScenarioParams::new(0.2, 0.4, 0.0)?;
        let mut worst = 0.0f64;
        for kind in [FilterKind::Mf, FilterKind::Zf, FilterKind::Lmmse] {
            let va = asymptotic_mse(Model::A, kind, &p0, Some(&pool))?;
            let vb = asymptotic_mse(Model::B, kind, &p0, Some(&pool))?;
            if let (Some(a), Some(b)) = (va.value(), vb.value()) {
                worst = worst.max((a - b).abs());
            }
        }
        out.push(check(
            "zero-jitter reduction of asymptotic formulas",
            worst < 1e-12,
            format!("max difference {worst:.3e}, tolerance 1e-12"),
        ));
        // nu at the origin must be exact for the reduction to hold.
        out.push(check(
            "nu(0) = 1 exactly",
            nu(0.0)? == 1.0,
            format!("nu(0) = {}", nu(0.0)?),
        ));
    }

    // 6. Full level: large-pool spectral moments.
    if level == VerifyLevel::Full {
        for &beta in &[0.1, 0.2, 0.5] {
            let pool = sample_eigenvalues(beta, 200, 50, 1006)?;
            let n = harmonic_count(200);
            let mut worst_mean = 0.0f64;
            for chunk in pool.values.chunks(n) {
                let mean = chunk.iter().sum::<f64>() / n as f64;
                worst_mean = worst_mean.max((mean - 1.0).abs());
            }
            let second = pool.mean_of(|l| l * l);
            let target = 1.0 + beta;
            let rel = (second - target).abs() / target;
            out.push(check(
                &format!("spectral moments at beta = {beta}"),
                worst_mean < 1e-10 && rel < 0.02,
                format!(
                    "per-realization mean error {worst_mean:.3e}; E[l^2] = {second:.4} vs {target:.4} ({:.2}%)",
                    100.0 * rel
                ),
            ));
        }
    }

    Ok(out)
}

fn max_entry(m: &nalgebra::DMatrix<num_complex::Complex64>) -> f64 {
    use crate::linalg::MaxAbs;
    m.max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML_A: &str = r#"
model = "A"
filters = ["mf", "lmmse"]
m = 10
trials = 20
seed = 7

[sweep]
beta = [0.1, 0.2]

[fixed]
snr_m_db = 3.0
"#;

    #[test]
    fn parse_and_plan() {
        let cfg = parse_config(TOML_A).unwrap();
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.model, Model::A);
        assert_eq!(plan.kinds, vec![FilterKind::Mf, FilterKind::Lmmse]);
        assert_eq!(plan.points.len(), 2);
        assert!((plan.points[0].alpha - 10f64.powf(-0.3)).abs() < 1e-12);
    }

    #[test]
    fn config_validation_errors() {
        // Empty filter set.
        let bad = TOML_A.replace("[\"mf\", \"lmmse\"]", "[]");
        assert!(parse_config(&bad).unwrap().plan().is_err());
        // Two sweep axes.
        let bad = TOML_A.replace(
            "beta = [0.1, 0.2]",
            "beta = [0.1]\nsnr_m_db = [1.0]",
        );
        assert!(parse_config(&bad).unwrap().plan().is_err());
        // Conflicting noise spellings.
        let bad = TOML_A.replace("snr_m_db = 3.0", "snr_m_db = 3.0\nalpha = 0.5");
        assert!(parse_config(&bad).unwrap().plan().is_err());
        // Jitter-aware filter under model A.
        let bad = TOML_A.replace("\"lmmse\"", "\"lmmse_jitter\"");
        assert!(parse_config(&bad).unwrap().plan().is_err());
        // Unknown key.
        let bad = format!("{TOML_A}\nbogus = 1\n");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn linear_and_db_spellings_agree() {
        let db = parse_config(TOML_A).unwrap().plan().unwrap();
        let lin = parse_config(&TOML_A.replace(
            "snr_m_db = 3.0",
            "snr_m = 1.9952623149688795",
        ))
        .unwrap()
        .plan()
        .unwrap();
        assert!((db.points[0].alpha - lin.points[0].alpha).abs() < 1e-12);
    }

    #[test]
    fn run_is_deterministic_and_ordered() {
        let cfg = parse_config(TOML_A).unwrap();
        let rows_a = run_experiment(&cfg).unwrap();
        let rows_b = run_experiment(&cfg).unwrap();
        assert_eq!(csv_string(&rows_a), csv_string(&rows_b));
        assert_eq!(rows_a.len(), 4); // 2 points x 2 filters
        assert_eq!(rows_a[0].params.beta, 0.1);
        assert_eq!(rows_a[0].kind, FilterKind::Mf);
        assert_eq!(rows_a[3].params.beta, 0.2);
        // Same draws across filters at one sweep point.
        assert_eq!(rows_a[0].seed, rows_a[1].seed);
        assert_ne!(rows_a[0].seed, rows_a[2].seed);
    }

    #[test]
    fn csv_shape_and_sentinels() {
        let mut cfg = parse_config(TOML_A).unwrap();
        cfg.filters = vec!["zf".into(), "interp".into()];
        cfg.sweep.beta = Some(vec![0.5]);
        cfg.eigen_m = 20;
        cfg.eigen_realizations = 4;
        let rows = run_experiment(&cfg).unwrap();
        let csv = csv_string(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let zf_row = lines.next().unwrap();
        assert_eq!(zf_row.split(',').count(), 16);
        // ZF at beta = 0.5 is past the critical ratio.
        assert!(zf_row.contains("divergent"), "{zf_row}");
        let interp_row = lines.next().unwrap();
        let fields: Vec<&str> = interp_row.split(',').collect();
        assert_eq!(fields[1], "interp");
        assert_eq!(fields[13], ""); // no trace formula
        assert_eq!(fields[14], ""); // no asymptotic formula
    }

    #[test]
    fn presets_exist_and_plan() {
        for name in preset_names() {
            let configs = preset(&name).unwrap();
            assert!(!configs.is_empty(), "{name} is empty");
            for c in configs {
                c.plan().unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
        assert!(preset("fig11").is_err());
    }

    #[test]
    fn verify_quick_passes() {
        let outcomes = verify(VerifyLevel::Quick).unwrap();
        assert!(outcomes.len() >= 7);
        for o in &outcomes {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }
}
