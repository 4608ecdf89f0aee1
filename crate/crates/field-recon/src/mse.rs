//! MSE evaluation three ways: empirical Monte Carlo, finite-size trace
//! formulas, and asymptotic closed forms driven by sampled eigenvalue
//! distributions of the scaled Gram matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::{
    build_lmmse, build_lmmse_jitter, build_mf, build_zf, char_matrix, estimate, gamma_param,
    interp_estimate, CharMatrix, FilterKind,
};
use crate::linalg::{check_condition, hermitian_eigen, hermitian_eigenvalues, trace_re};
use crate::model::{
    apply_jitter, draw_layout, draw_spectrum, fourier_matrix, harmonic_count, measure,
    regular_layout, sample_field, FourierMatrix, ScenarioParams, SensorLayout,
};
use crate::rng;

/// Critical ratio above which `E[1/lambda]` diverges and ZF reconstruction
/// fails asymptotically.
pub const BETA_STAR: f64 = 0.35;

const DOMAIN_TRIAL: u64 = 1;
const DOMAIN_EIGEN: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    A,
    B,
}

impl Model {
    pub fn label(&self) -> &'static str {
        match self {
            Model::A => "A",
            Model::B => "B",
        }
    }
}

/// Normalized error covariance of the spectrum estimate;
/// `MSE = Tr{Psi}/(2M+1)`.
#[derive(Debug, Clone)]
pub struct PsiMatrix {
    pub matrix: DMatrix<Complex64>,
    pub model: Model,
    pub kind: FilterKind,
}

impl PsiMatrix {
    pub fn normalized_mse(&self) -> f64 {
        trace_re(&self.matrix) / self.matrix.nrows() as f64
    }
}

/// Eigenvalues of `beta R` pooled over independent uniform layouts.
#[derive(Debug, Clone)]
pub struct EigenSample {
    pub beta: f64,
    pub m_used: usize,
    pub realizations: usize,
    pub values: Vec<f64>,
}

impl EigenSample {
    pub fn mean_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().map(|&l| f(l)).sum::<f64>() / self.values.len() as f64
    }

    /// `E[1/lambda]`, with a stability check: the estimate from the first
    /// half of the pool must agree with the full pool within 20%.
    pub fn mean_inverse(&self) -> Result<f64> {
        let full = self.mean_of(|l| 1.0 / l);
        let half = &self.values[..self.values.len() / 2];
        let half_est = half.iter().map(|&l| 1.0 / l).sum::<f64>() / half.len() as f64;
        if !full.is_finite() || (half_est - full).abs() > 0.2 * full {
            return Err(Error::Divergent { beta: self.beta });
        }
        Ok(full)
    }
}

/// Asymptotic MSE result; formulas with `E[1/lambda]` report `Divergent`
/// past the critical ratio, and the jitter-aware LMMSE (which has no closed
/// form) reports its lower bound flagged `BoundOnly`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticMse {
    Value(f64),
    Divergent,
    BoundOnly(f64),
}

impl AsymptoticMse {
    pub fn value(&self) -> Option<f64> {
        match self {
            AsymptoticMse::Value(v) | AsymptoticMse::BoundOnly(v) => Some(*v),
            AsymptoticMse::Divergent => None,
        }
    }
}

/// Per-configuration MSE record.
#[derive(Debug, Clone)]
pub struct MseReport {
    pub model: Model,
    pub kind: FilterKind,
    pub params: ScenarioParams,
    pub m: usize,
    pub r: usize,
    pub trials: usize,
    /// Trials rejected for ill conditioning (counted, not averaged).
    pub failures: usize,
    pub mse_empirical: f64,
    pub std_error: f64,
    /// Mean of the per-layout trace-formula MSE over the same layouts.
    pub mse_trace: Option<f64>,
    pub mse_asymptotic: Option<AsymptoticMse>,
    pub lower_bound: f64,
}

/// How layouts are produced across trials.
#[derive(Debug, Clone)]
pub enum LayoutMode {
    /// Fresh uniform layout per trial (averages over layouts).
    Random,
    /// Regular grid, fixed across trials.
    Regular,
    /// A caller-supplied layout, fixed across trials (per-layout MSE).
    Fixed(SensorLayout),
}

/// Specification of an empirical Monte Carlo run.
#[derive(Debug, Clone)]
pub struct EmpiricalSpec {
    pub model: Model,
    pub kind: FilterKind,
    pub m: usize,
    pub params: ScenarioParams,
    pub trials: usize,
    pub seed: u64,
    pub layout: LayoutMode,
    pub cond_threshold: Option<f64>,
}

/// `nu(x) = sqrt(pi/4) erf(pi x) / (pi x)`, continuously extended to
/// `nu(0) = 1`.
pub fn nu(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid("x", "must be >= 0"));
    }
    let z = std::f64::consts::PI * x;
    if z < 1e-2 {
        // Taylor series of erf(z)/z scaled by sqrt(pi)/2; error O(z^8).
        let z2 = z * z;
        Ok(1.0 - z2 / 3.0 + z2 * z2 / 10.0 - z2 * z2 * z2 / 42.0)
    } else {
        Ok(0.5 * std::f64::consts::PI.sqrt() * libm::erf(z) / z)
    }
}

/// Finite-size trace formula for Model A.
pub fn trace_mse_model_a(
    kind: FilterKind,
    g: &FourierMatrix,
    alpha: f64,
    cond_threshold: Option<f64>,
) -> Result<PsiMatrix> {
    let n = harmonic_count(g.m);
    let beta = g.beta();
    let gram = g.gram();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let threshold = cond_threshold.unwrap_or(crate::linalg::DEFAULT_COND_THRESHOLD);
    let matrix = match kind {
        FilterKind::Mf => {
            let br = &gram * Complex64::new(beta, 0.0);
            let d = &br - &eye;
            &d * &d + br * Complex64::new(alpha * beta, 0.0)
        }
        FilterKind::Zf => {
            let eig = hermitian_eigen(&gram);
            check_condition(&eig.eigenvalues, 0.0, threshold)?;
            eig.apply_function(|l| alpha / l, &eye)
        }
        FilterKind::Lmmse => {
            let eig = hermitian_eigen(&gram);
            check_condition(&eig.eigenvalues, alpha, threshold)?;
            eig.apply_function(|l| alpha / (l + alpha), &eye)
        }
        other => {
            return Err(Error::Config(format!(
                "no Model-A trace formula for filter `{}`",
                other.label()
            )))
        }
    };
    Ok(PsiMatrix {
        matrix,
        model: Model::A,
        kind,
    })
}

/// Hermitian part `(X + X^H)/2`.
fn herm_part(x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (x + x.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Finite-size trace formula for Model B, built from the mean positions.
pub fn trace_mse_model_b(
    kind: FilterKind,
    g_hat: &FourierMatrix,
    alpha: f64,
    c: &CharMatrix,
    gamma: f64,
    cond_threshold: Option<f64>,
) -> Result<PsiMatrix> {
    if c.m != g_hat.m {
        return Err(Error::DimensionMismatch(format!(
            "char matrix M = {} but Fourier matrix M = {}",
            c.m, g_hat.m
        )));
    }
    let n = harmonic_count(g_hat.m);
    let beta = g_hat.beta();
    let gram = g_hat.gram();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let threshold = cond_threshold.unwrap_or(crate::linalg::DEFAULT_COND_THRESHOLD);
    let matrix = match kind {
        FilterKind::Mf => {
            let c2r = c.scale_rows(&c.scale_rows(&gram)); // C^2 R
            let cr = c.scale_rows(&gram); // C R
            let t1 = (&gram * &c2r) * Complex64::new(beta * beta, 0.0); // beta^2 R C^2 R
            let t2 = &gram * Complex64::new(gamma * beta * beta, 0.0);
            let t3 = herm_part(&cr) * Complex64::new(2.0 * beta, 0.0);
            t1 + t2 - t3 + eye
        }
        FilterKind::Zf => {
            let eig = hermitian_eigen(&gram);
            check_condition(&eig.eigenvalues, 0.0, threshold)?;
            let mut psi = eig.apply_function(|l| gamma / l, &eye);
            for (i, &ck) in c.diagonal.iter().enumerate() {
                psi[(i, i)] += Complex64::new((ck - 1.0) * (ck - 1.0), 0.0);
            }
            psi
        }
        FilterKind::Lmmse => {
            // A = R + alpha I; Psi = A^{-1}(R C^2 R + gamma R)A^{-1}
            //                        - 2 Herm{C R A^{-1}} + I.
            let eig = hermitian_eigen(&gram);
            check_condition(&eig.eigenvalues, alpha, threshold)?;
            let c2r = c.scale_rows(&c.scale_rows(&gram));
            let core = &gram * &c2r + &gram * Complex64::new(gamma, 0.0);
            let ainv_core = eig.apply_function(|l| 1.0 / (l + alpha), &core);
            let t1 = eig.apply_function(|l| 1.0 / (l + alpha), &ainv_core.adjoint());
            let ra_inv = eig.apply_function(|l| l / (l + alpha), &eye);
            let cra = c.scale_rows(&ra_inv);
            herm_part(&t1) - herm_part(&cra) * Complex64::new(2.0, 0.0) + eye
        }
        FilterKind::LmmseJitter => {
            if !(gamma > 0.0) {
                return Err(Error::invalid("gamma", "must be > 0"));
            }
            let crc = c.sandwich(&gram);
            let eig = hermitian_eigen(&crc);
            eig.apply_function(|l| gamma / (l + gamma), &eye)
        }
        other => {
            return Err(Error::Config(format!(
                "no Model-B trace formula for filter `{}`",
                other.label()
            )))
        }
    };
    Ok(PsiMatrix {
        matrix,
        model: Model::B,
        kind,
    })
}

/// Pool eigenvalues of `beta R` over independent uniform layouts with
/// `r = round((2M+1)/beta)` sensors.
pub fn sample_eigenvalues(
    beta: f64,
    m_large: usize,
    realizations: usize,
    seed: u64,
) -> Result<EigenSample> {
    if m_large < 1 {
        return Err(Error::invalid("m_large", "must be >= 1"));
    }
    if realizations < 1 {
        return Err(Error::invalid("realizations", "must be >= 1"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", "must be finite and > 0"));
    }
    let n = harmonic_count(m_large);
    let r = (n as f64 / beta).round().max(1.0) as usize;
    let beta_actual = n as f64 / r as f64;
    let pools: Vec<Vec<f64>> = (0..realizations)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng::stream(seed, DOMAIN_EIGEN, i as u64);
            let layout = draw_layout(r, &mut stream).expect("r >= 1");
            let g = fourier_matrix(&layout.actual_positions, m_large).expect("positions in range");
            let scaled = g.gram() * Complex64::new(beta_actual, 0.0);
            hermitian_eigenvalues(&scaled)
                .into_iter()
                .map(|l| if l < 0.0 { 0.0 } else { l }) // clamp numerical floor
                .collect()
        })
        .collect();
    let values = pools.into_iter().flatten().collect();
    Ok(EigenSample {
        beta,
        m_used: m_large,
        realizations,
        values,
    })
}

/// Asymptotic MSE closed forms; expectations over the eigenvalue law are
/// evaluated as sample means over the supplied pool.
pub fn asymptotic_mse(
    model: Model,
    kind: FilterKind,
    params: &ScenarioParams,
    eigen: Option<&EigenSample>,
) -> Result<AsymptoticMse> {
    let beta = params.beta;
    let alpha = params.alpha;
    let omega = params.omega;
    let need_pool = || {
        eigen.ok_or_else(|| Error::Config("eigenvalue sample required for this formula".into()))
    };
    let e_inv = |pool: &EigenSample| -> Result<Option<f64>> {
        if beta >= BETA_STAR {
            return Ok(None);
        }
        match pool.mean_inverse() {
            Ok(v) => Ok(Some(v)),
            Err(Error::Divergent { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    match (model, kind) {
        (Model::A, FilterKind::Mf) => Ok(AsymptoticMse::Value(beta * (alpha + 1.0))),
        (Model::A, FilterKind::Zf) => {
            let pool = need_pool()?;
            Ok(match e_inv(pool)? {
                Some(v) => AsymptoticMse::Value(alpha * beta * v),
                None => AsymptoticMse::Divergent,
            })
        }
        (Model::A, FilterKind::Lmmse) => {
            if alpha == 0.0 {
                return Ok(AsymptoticMse::Value(0.0));
            }
            let pool = need_pool()?;
            let ab = alpha * beta;
            Ok(AsymptoticMse::Value(pool.mean_of(|l| ab / (l + ab))))
        }
        (Model::B, FilterKind::Mf) => {
            let n1 = nu(beta * omega)?;
            let n2 = nu(beta * omega / std::f64::consts::SQRT_2)?;
            Ok(AsymptoticMse::Value(
                beta * (1.0 + alpha) + n1 - 2.0 * n2 + 1.0,
            ))
        }
        (Model::B, FilterKind::Zf) => {
            let pool = need_pool()?;
            let n1 = nu(beta * omega)?;
            let n2 = nu(beta * omega / std::f64::consts::SQRT_2)?;
            Ok(match e_inv(pool)? {
                Some(v) => AsymptoticMse::Value(
                    beta * (1.0 + alpha - n1) * v + 1.0 + n1 - 2.0 * n2,
                ),
                None => AsymptoticMse::Divergent,
            })
        }
        (Model::B, FilterKind::Lmmse) => {
            let pool = need_pool()?;
            let n1 = nu(beta * omega)?;
            let n2 = nu(beta * omega / std::f64::consts::SQRT_2)?;
            let ab = alpha * beta;
            let e_sq = pool.mean_of(|l| {
                let d = l + ab;
                if d == 0.0 {
                    0.0
                } else {
                    (l / d) * (l / d)
                }
            });
            let e_lin = pool.mean_of(|l| {
                let d = l + ab;
                if d == 0.0 {
                    0.0
                } else {
                    l / (d * d)
                }
            });
            Ok(AsymptoticMse::Value(
                1.0 + (n1 - 2.0 * n2) * e_sq + beta * (1.0 + alpha - n1 - 2.0 * alpha * n2) * e_lin,
            ))
        }
        (Model::B, FilterKind::LmmseJitter) => {
            Ok(AsymptoticMse::BoundOnly(lower_bound_model_b(params)?))
        }
        (_, FilterKind::Interp) => Err(Error::Config(
            "no asymptotic closed form for the interpolation baseline".into(),
        )),
        (Model::A, FilterKind::LmmseJitter) => Err(Error::Config(
            "jitter-aware LMMSE is a Model-B filter".into(),
        )),
    }
}

/// `alpha beta / (1 + alpha beta)`: lower bound on all linear reconstruction
/// techniques for Model A.
pub fn lower_bound_model_a(params: &ScenarioParams) -> f64 {
    let ab = params.alpha * params.beta;
    ab / (1.0 + ab)
}

/// Model-B lower bound
/// `beta (1 + alpha - nu(beta omega)) / (beta (1 + alpha) + nu(beta omega)(1 - beta))`.
pub fn lower_bound_model_b(params: &ScenarioParams) -> Result<f64> {
    let n1 = nu(params.beta * params.omega)?;
    let beta = params.beta;
    let alpha = params.alpha;
    Ok(beta * (1.0 + alpha - n1) / (beta * (1.0 + alpha) + n1 * (1.0 - beta)))
}

fn trial_layout(mode: &LayoutMode, r: usize, stream: &mut impl rand::Rng) -> SensorLayout {
    match mode {
        LayoutMode::Random => draw_layout(r, stream).expect("r >= 1"),
        LayoutMode::Regular => regular_layout(r).expect("r >= 1"),
        LayoutMode::Fixed(l) => l.clone(),
    }
}

/// Monte Carlo MSE: mean of `|a_hat - a|^2 / ((2M+1) sigma_a^2)` over
/// independent trials (fresh spectrum, noise, layout, and displacements per
/// trial), with standard error, alongside the matching trace-formula mean
/// over the same layouts.
pub fn empirical_mse(spec: &EmpiricalSpec) -> Result<MseReport> {
    if spec.trials < 1 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    let m = spec.m;
    let n = harmonic_count(m);
    let r = spec.params.sensor_count(m);
    let alpha = spec.params.alpha;
    let sigma_delta = spec.params.sigma_delta(r);

    // Unit field power: sigma_a^2 = 1, sigma_n^2 = alpha.
    let outcomes: Vec<Result<(f64, Option<f64>)>> = (0..spec.trials)
        .into_par_iter()
        .map(|i| -> Result<(f64, Option<f64>)> {
            let mut stream = rng::stream(spec.seed, DOMAIN_TRIAL, i as u64);
            let base = trial_layout(&spec.layout, r, &mut stream);
            let (layout, g_filter, g_actual) = match spec.model {
                Model::A => {
                    let g = fourier_matrix(&base.actual_positions, m)?;
                    (base, g.clone(), g)
                }
                Model::B => {
                    let jittered = apply_jitter(&base, sigma_delta, &mut stream)?;
                    let g_hat = fourier_matrix(&jittered.mean_positions, m)?;
                    let g_x = fourier_matrix(&jittered.actual_positions, m)?;
                    (jittered, g_hat, g_x)
                }
            };
            let a = draw_spectrum(m, 1.0, &mut stream)?;
            let s = sample_field(&a, &g_actual)?;
            let p = measure(&s, alpha, &mut stream)?;

            let (a_hat, trace) = match spec.kind {
                FilterKind::Interp => {
                    let est = match spec.model {
                        Model::A => interp_estimate(&p, &layout, m)?,
                        // Model B: the sink only knows the mean positions.
                        Model::B => {
                            let known = SensorLayout {
                                mean_positions: layout.mean_positions.clone(),
                                actual_positions: layout.mean_positions.clone(),
                                displacement_std: 0.0,
                            };
                            interp_estimate(&p, &known, m)?
                        }
                    };
                    (est, None)
                }
                kind => {
                    let (filter, psi) = match spec.model {
                        Model::A => {
                            let filter = match kind {
                                FilterKind::Mf => build_mf(&g_filter),
                                FilterKind::Zf => build_zf(&g_filter, spec.cond_threshold)?,
                                FilterKind::Lmmse => {
                                    build_lmmse(&g_filter, alpha, spec.cond_threshold)?
                                }
                                _ => {
                                    return Err(Error::Config(format!(
                                        "filter `{}` is not a Model-A filter",
                                        kind.label()
                                    )))
                                }
                            };
                            let psi =
                                trace_mse_model_a(kind, &g_filter, alpha, spec.cond_threshold)?;
                            (filter, psi)
                        }
                        Model::B => {
                            let c = char_matrix(m, sigma_delta)?;
                            let gamma = gamma_param(alpha, &c);
                            let filter = match kind {
                                FilterKind::Mf => build_mf(&g_filter),
                                FilterKind::Zf => build_zf(&g_filter, spec.cond_threshold)?,
                                FilterKind::Lmmse => {
                                    build_lmmse(&g_filter, alpha, spec.cond_threshold)?
                                }
                                FilterKind::LmmseJitter => {
                                    build_lmmse_jitter(&g_filter, &c, gamma)?
                                }
                                FilterKind::Interp => unreachable!(),
                            };
                            let psi = trace_mse_model_b(
                                kind,
                                &g_filter,
                                alpha,
                                &c,
                                gamma,
                                spec.cond_threshold,
                            )?;
                            (filter, psi)
                        }
                    };
                    (estimate(&filter, &p)?, Some(psi.normalized_mse()))
                }
            };

            let err = (a_hat - &a.coefficients).norm_squared() / n as f64;
            Ok((err, trace))
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut trace_sum = 0.0;
    let mut trace_count = 0usize;
    let mut successes = 0usize;
    let mut failures = 0usize;
    let mut fatal: Option<Error> = None;
    for outcome in outcomes {
        match outcome {
            Ok((err, trace)) => {
                successes += 1;
                sum += err;
                sum_sq += err * err;
                if let Some(t) = trace {
                    trace_sum += t;
                    trace_count += 1;
                }
            }
            Err(Error::IllConditioned { .. }) => failures += 1,
            Err(e) => fatal = Some(e),
        }
    }
    if let Some(e) = fatal {
        return Err(e);
    }

    let (mse_empirical, std_error) = if successes > 0 {
        let mean = sum / successes as f64;
        let var = (sum_sq / successes as f64 - mean * mean).max(0.0);
        let se = if successes > 1 {
            (var / (successes - 1) as f64).sqrt()
        } else {
            0.0
        };
        (mean, se)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };

    let lower_bound = match spec.model {
        Model::A => lower_bound_model_a(&spec.params),
        Model::B => lower_bound_model_b(&spec.params)?,
    };
    Ok(MseReport {
        model: spec.model,
        kind: spec.kind,
        params: spec.params,
        m,
        r,
        trials: spec.trials,
        failures,
        mse_empirical,
        std_error,
        mse_trace: (trace_count > 0).then(|| trace_sum / trace_count as f64),
        mse_asymptotic: None,
        lower_bound,
    })
}
