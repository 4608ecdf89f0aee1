//! Numerical verification of the identities behind the analysis: the series
//! expansion of the Fourier matrix around the mean positions, the first and
//! second moments under Gaussian displacements, and the trace-functional /
//! eigenvalue-distribution duality.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::CharMatrix;
use crate::linalg::{hermitian_eigenvalues, trace_re};
use crate::model::{draw_layout, fourier_matrix, harmonic_count, FourierMatrix};
use crate::mse::BETA_STAR;
use crate::rng;

const DOMAIN_PHI: u64 = 3;

/// Diagonal operators of the series expansion
/// `G_x = sum_n (1/n!) W^n G_xhat Delta^n` with `W = diag(-j 2 pi k)` and
/// `Delta = diag(delta_q)`.
#[derive(Debug, Clone)]
pub struct SeriesExpansion {
    pub order: usize,
    pub w_diag: Vec<Complex64>,
    pub delta_diag: Vec<f64>,
}

impl SeriesExpansion {
    pub fn new(m: usize, delta: &[f64], order: usize) -> Self {
        let w_diag = (-(m as i64)..=m as i64)
            .map(|k| Complex64::new(0.0, -2.0 * std::f64::consts::PI * k as f64))
            .collect();
        SeriesExpansion {
            order,
            w_diag,
            delta_diag: delta.to_vec(),
        }
    }
}

/// Truncated series `sum_{n=0}^{N} (1/n!) W^n G_xhat Delta^n`.
///
/// Both `W` and `Delta` are diagonal, so the sum acts entry-wise: entry
/// `(k, q)` of the result is `ghat_{kq} sum_n z^n / n!` with
/// `z = -j 2 pi k delta_q`. Terms are accumulated iteratively
/// (`term *= z / n`), which keeps magnitudes bounded where an explicit
/// `(2 pi M)^n / n!` split would overflow before it underflows.
pub fn displacement_series(
    g_hat: &FourierMatrix,
    delta: &[f64],
    order: usize,
) -> Result<DMatrix<Complex64>> {
    if delta.len() != g_hat.r {
        return Err(Error::DimensionMismatch(format!(
            "{} displacements but {} sensors",
            delta.len(),
            g_hat.r
        )));
    }
    let series = SeriesExpansion::new(g_hat.m, delta, order);
    let n_rows = harmonic_count(g_hat.m);
    Ok(DMatrix::from_fn(n_rows, g_hat.r, |row, col| {
        let z = series.w_diag[row] * series.delta_diag[col];
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..=order {
            term *= z / n as f64;
            sum += term;
        }
        g_hat.entries[(row, col)] * sum
    }))
}

/// Expected Fourier matrix under Gaussian displacements: `C G_xhat`.
pub fn expected_fourier(g_hat: &FourierMatrix, c: &CharMatrix) -> Result<DMatrix<Complex64>> {
    if c.m != g_hat.m {
        return Err(Error::DimensionMismatch(format!(
            "char matrix M = {} but Fourier matrix M = {}",
            c.m, g_hat.m
        )));
    }
    Ok(c.scale_rows(&g_hat.entries))
}

/// Expected sample Gram matrix under Gaussian displacements:
/// `E[G_x^H G_x] = G_xhat^H C^2 G_xhat + (1 - Tr{C^2}/(2M+1)) I`, an r x r
/// matrix.
pub fn expected_gram(g_hat: &FourierMatrix, c: &CharMatrix) -> Result<DMatrix<Complex64>> {
    if c.m != g_hat.m {
        return Err(Error::DimensionMismatch(format!(
            "char matrix M = {} but Fourier matrix M = {}",
            c.m, g_hat.m
        )));
    }
    let n = harmonic_count(g_hat.m);
    let cg = c.scale_rows(&g_hat.entries);
    let mut out = cg.adjoint() * &cg; // G^H C^2 G
    let shift = 1.0 - c.trace_sq() / n as f64;
    for i in 0..g_hat.r {
        out[(i, i)] += Complex64::new(shift, 0.0);
    }
    Ok(out)
}

/// Scalar test functions for the trace-functional check, analytic on the
/// positive axis.
#[derive(Debug, Clone, Copy)]
pub enum PhiFunction {
    /// g(x) = x
    Identity,
    /// g(x) = x^2
    Square,
    /// g(x) = 1/x (diverges past the critical ratio)
    Inverse,
    /// g(x) = ab / (x + ab) with ab = alpha * beta
    LmmseKernel { alpha_beta: f64 },
}

impl PhiFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PhiFunction::Identity => x,
            PhiFunction::Square => x * x,
            PhiFunction::Inverse => 1.0 / x,
            PhiFunction::LmmseKernel { alpha_beta } => alpha_beta / (x + alpha_beta),
        }
    }
}

/// Check `Tr{g(X)}/(2M+1) = E[g(lambda)]` for `X = beta R` over random
/// layouts, evaluating the two sides by genuinely different routes: the
/// matrix side forms `g(X)` with matrix products / LU solves and takes the
/// normalized trace, the eigenvalue side averages `g` over the spectrum.
///
/// Returns `(matrix_side, eigenvalue_side)` averaged over realizations.
pub fn phi_functional_check(
    f: PhiFunction,
    beta: f64,
    m_large: usize,
    realizations: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if realizations < 1 {
        return Err(Error::invalid("realizations", "must be >= 1"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", "must be finite and > 0"));
    }
    if matches!(f, PhiFunction::Inverse) && beta >= BETA_STAR {
        return Err(Error::Divergent { beta });
    }
    let n = harmonic_count(m_large);
    let r = (n as f64 / beta).round().max(1.0) as usize;
    let beta_actual = n as f64 / r as f64;
    let sides: Vec<Result<(f64, f64)>> = (0..realizations)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let mut stream = rng::stream(seed, DOMAIN_PHI, i as u64);
            let layout = draw_layout(r, &mut stream)?;
            let g = fourier_matrix(&layout.actual_positions, m_large)?;
            let x = g.gram() * Complex64::new(beta_actual, 0.0);
            let eye = DMatrix::<Complex64>::identity(n, n);
            let matrix_side = match f {
                PhiFunction::Identity => trace_re(&x),
                PhiFunction::Square => trace_re(&(&x * &x)),
                PhiFunction::Inverse => {
                    let inv = x
                        .clone()
                        .lu()
                        .solve(&eye)
                        .ok_or(Error::Divergent { beta })?;
                    trace_re(&inv)
                }
                PhiFunction::LmmseKernel { alpha_beta } => {
                    let shifted = &x + &eye * Complex64::new(alpha_beta, 0.0);
                    let inv = shifted
                        .lu()
                        .solve(&eye)
                        .ok_or(Error::Divergent { beta })?;
                    alpha_beta * trace_re(&inv)
                }
            } / n as f64;
            let eigs = hermitian_eigenvalues(&x);
            let eig_side = eigs.iter().map(|&l| f.eval(l.max(0.0))).sum::<f64>() / n as f64;
            Ok((matrix_side, eig_side))
        })
        .collect();
    let mut mat_sum = 0.0;
    let mut eig_sum = 0.0;
    for s in sides {
        let (m_side, e_side) = s?;
        mat_sum += m_side;
        eig_sum += e_side;
    }
    Ok((
        mat_sum / realizations as f64,
        eig_sum / realizations as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::MaxAbs;
    use crate::filters::char_matrix;
    use crate::model::apply_jitter;
    use crate::rng::root_stream;

    #[test]
    fn w_diag_purely_imaginary_antisymmetric() {
        let s = SeriesExpansion::new(7, &[0.0; 3], 10);
        let n = s.w_diag.len();
        assert_eq!(n, 15);
        for (i, w) in s.w_diag.iter().enumerate() {
            assert_eq!(w.re, 0.0);
            assert_eq!(w.im, -s.w_diag[n - 1 - i].im);
        }
    }

    #[test]
    fn series_zero_displacement_is_exact() {
        let mut rs = root_stream(40);
        let layout = draw_layout(8, &mut rs).unwrap();
        let g = fourier_matrix(&layout.mean_positions, 4).unwrap();
        for order in [0, 1, 50] {
            let t = displacement_series(&g, &[0.0; 8], order).unwrap();
            assert!((t - &g.entries).max_abs() == 0.0);
        }
    }

    #[test]
    fn series_order_zero_is_ghat() {
        let mut rs = root_stream(41);
        let layout = draw_layout(8, &mut rs).unwrap();
        let g = fourier_matrix(&layout.mean_positions, 4).unwrap();
        let delta: Vec<f64> = (0..8).map(|q| 1e-3 * (q as f64 - 3.5)).collect();
        let t = displacement_series(&g, &delta, 0).unwrap();
        assert!((t - &g.entries).max_abs() == 0.0);
    }

    #[test]
    fn series_matches_direct_matrix() {
        // M=10, r=20, sigma_delta = 1e-3, N=50: entries are 1-periodic in
        // position, so comparing against the wrapped positions is exact.
        let m = 10;
        let r = 20;
        let mut rs = root_stream(42);
        let base = draw_layout(r, &mut rs).unwrap();
        let jittered = apply_jitter(&base, 1e-3, &mut rs).unwrap();
        let delta: Vec<f64> = jittered
            .actual_positions
            .iter()
            .zip(&jittered.mean_positions)
            .map(|(&a, &b)| {
                let d = a - b; // undo the mod-1 wrap
                if d > 0.5 {
                    d - 1.0
                } else if d < -0.5 {
                    d + 1.0
                } else {
                    d
                }
            })
            .collect();
        let g_hat = fourier_matrix(&jittered.mean_positions, m).unwrap();
        let g_exact = fourier_matrix(&jittered.actual_positions, m).unwrap();
        let t = displacement_series(&g_hat, &delta, 50).unwrap();
        assert!((t - &g_exact.entries).max_abs() < 1e-10);
    }

    #[test]
    fn series_error_decreases_with_order() {
        let m = 10;
        let r = 20;
        let mut rs = root_stream(43);
        let base = draw_layout(r, &mut rs).unwrap();
        let delta: Vec<f64> = (0..r).map(|q| 2e-3 * ((q * 7 % 11) as f64 / 11.0 - 0.5)).collect();
        let positions: Vec<f64> = base
            .mean_positions
            .iter()
            .zip(&delta)
            .map(|(&x, &d)| (x + d).rem_euclid(1.0))
            .collect();
        let g_hat = fourier_matrix(&base.mean_positions, m).unwrap();
        let g_exact = fourier_matrix(&positions, m).unwrap();
        let max_arg = 2.0 * std::f64::consts::PI
            * m as f64
            * delta.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
        let start = max_arg.ceil() as usize;
        let mut last = f64::INFINITY;
        for order in start..start + 10 {
            let err = (displacement_series(&g_hat, &delta, order).unwrap() - &g_exact.entries).max_abs();
            assert!(err <= last + 1e-15, "order {order}: {err} > {last}");
            last = err;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn expected_fourier_identity_and_dc_row() {
        let m = 5;
        let mut rs = root_stream(44);
        let layout = draw_layout(10, &mut rs).unwrap();
        let g = fourier_matrix(&layout.mean_positions, m).unwrap();
        let c0 = char_matrix(m, 0.0).unwrap();
        assert!((expected_fourier(&g, &c0).unwrap() - &g.entries).max_abs() == 0.0);
        let c = char_matrix(m, 0.05).unwrap();
        let e = expected_fourier(&g, &c).unwrap();
        // DC row (k = 0, index m) is unchanged by any displacement spread.
        for q in 0..10 {
            assert_eq!(e[(m, q)], g.entries[(m, q)]);
        }
    }

    #[test]
    fn expected_fourier_monte_carlo() {
        let m = 5;
        let r = 10;
        let draws = 20_000;
        let mut rs = root_stream(45);
        let base = draw_layout(r, &mut rs).unwrap();
        let sigma_delta = 0.02;
        let g_hat = fourier_matrix(&base.mean_positions, m).unwrap();
        let c = char_matrix(m, sigma_delta).unwrap();
        let expected = expected_fourier(&g_hat, &c).unwrap();
        let n = harmonic_count(m);
        let mut mean = DMatrix::<Complex64>::zeros(n, r);
        for _ in 0..draws {
            let j = apply_jitter(&base, sigma_delta, &mut rs).unwrap();
            mean += fourier_matrix(&j.actual_positions, m).unwrap().entries;
        }
        mean /= Complex64::new(draws as f64, 0.0);
        // Entry std <= 1/sqrt(2M+1); 3 standard errors of the mean.
        let tol = 3.0 / ((n as f64).sqrt() * (draws as f64).sqrt());
        assert!(
            (mean - expected).max_abs() < tol,
            "residual exceeds 3 standard errors"
        );
    }

    #[test]
    fn expected_gram_monte_carlo() {
        let m = 5;
        let r = 10;
        let draws = 20_000;
        let mut rs = root_stream(46);
        let base = draw_layout(r, &mut rs).unwrap();
        let sigma_delta = 0.02;
        let g_hat = fourier_matrix(&base.mean_positions, m).unwrap();
        let c = char_matrix(m, sigma_delta).unwrap();
        let expected = expected_gram(&g_hat, &c).unwrap();
        let mut mean = DMatrix::<Complex64>::zeros(r, r);
        for _ in 0..draws {
            let j = apply_jitter(&base, sigma_delta, &mut rs).unwrap();
            let g = fourier_matrix(&j.actual_positions, m).unwrap();
            mean += g.entries.adjoint() * &g.entries;
        }
        mean /= Complex64::new(draws as f64, 0.0);
        let tol = 3.0 / (draws as f64).sqrt();
        assert!(
            (mean - expected).max_abs() < tol,
            "residual exceeds 3 standard errors"
        );
    }

    #[test]
    fn expected_gram_zero_jitter() {
        let m = 5;
        let mut rs = root_stream(47);
        let layout = draw_layout(12, &mut rs).unwrap();
        let g = fourier_matrix(&layout.mean_positions, m).unwrap();
        let c = char_matrix(m, 0.0).unwrap();
        let e = expected_gram(&g, &c).unwrap();
        let direct = g.entries.adjoint() * &g.entries;
        assert!((e - direct).max_abs() < 1e-14);
    }

    #[test]
    fn phi_identity_and_square() {
        let (mat, eig) = phi_functional_check(PhiFunction::Identity, 0.2, 20, 5, 50).unwrap();
        assert!((mat - 1.0).abs() < 1e-10, "matrix side {mat}");
        assert!((eig - 1.0).abs() < 1e-10, "eigen side {eig}");
        let (mat, eig) = phi_functional_check(PhiFunction::Square, 0.2, 20, 20, 51).unwrap();
        assert!((mat - eig).abs() < 1e-8, "sides disagree: {mat} vs {eig}");
        // E[lambda^2] = 1 + beta, loosely at small M.
        assert!((eig - 1.2).abs() < 0.15, "E[l^2] = {eig}");
    }

    #[test]
    fn phi_lmmse_kernel_dual_route() {
        let f = PhiFunction::LmmseKernel { alpha_beta: 0.1 };
        let (mat, eig) = phi_functional_check(f, 0.2, 20, 10, 52).unwrap();
        assert!(
            (mat - eig).abs() < 1e-8 * mat.abs().max(1.0),
            "sides disagree: {mat} vs {eig}"
        );
    }

    #[test]
    fn phi_inverse_divergence_flag() {
        assert!(matches!(
            phi_functional_check(PhiFunction::Inverse, 0.5, 20, 2, 53),
            Err(Error::Divergent { .. })
        ));
        let (mat, eig) = phi_functional_check(PhiFunction::Inverse, 0.1, 20, 5, 54).unwrap();
        assert!((mat - eig).abs() < 1e-6 * mat, "sides disagree: {mat} vs {eig}");
    }
}
