//! Linear reconstruction filters.
//!
//! Each filter is an `r x (2M+1)` matrix `B`; the spectrum estimate is
//! `a_hat = B^H p`. Four linear filters are provided (matched filter,
//! zero forcing, LMMSE, and the jitter-aware LMMSE built from the mean
//! positions), plus a linear-interpolation baseline.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{check_condition, hermitian_eigen, DEFAULT_COND_THRESHOLD};
use crate::model::{harmonic_count, FourierMatrix, MeasurementSet, SensorLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Mf,
    Zf,
    Lmmse,
    LmmseJitter,
    Interp,
}

impl FilterKind {
    pub fn label(&self) -> &'static str {
        match self {
            FilterKind::Mf => "mf",
            FilterKind::Zf => "zf",
            FilterKind::Lmmse => "lmmse",
            FilterKind::LmmseJitter => "lmmse_jitter",
            FilterKind::Interp => "interp",
        }
    }
}

impl std::str::FromStr for FilterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mf" => Ok(FilterKind::Mf),
            "zf" => Ok(FilterKind::Zf),
            "lmmse" => Ok(FilterKind::Lmmse),
            "lmmse_jitter" | "lmmse-jitter" => Ok(FilterKind::LmmseJitter),
            "interp" => Ok(FilterKind::Interp),
            other => Err(Error::Config(format!("unknown filter kind `{other}`"))),
        }
    }
}

/// A built reconstruction filter; `matrix_b` is `r x (2M+1)`.
#[derive(Debug, Clone)]
pub struct Filter {
    pub matrix_b: DMatrix<Complex64>,
    pub kind: FilterKind,
}

impl Filter {
    pub fn r(&self) -> usize {
        self.matrix_b.nrows()
    }

    pub fn harmonics(&self) -> usize {
        self.matrix_b.ncols()
    }
}

/// Diagonal of the displacement characteristic-function matrix `C`,
/// entry `k = exp(-2 pi^2 k^2 sigma_delta^2)` for Gaussian jitter.
#[derive(Debug, Clone)]
pub struct CharMatrix {
    pub diagonal: Vec<f64>,
    pub sigma_delta: f64,
    pub m: usize,
}

impl CharMatrix {
    /// Entry for harmonic index `k` in `-M..M`.
    pub fn entry(&self, k: i64) -> f64 {
        self.diagonal[(k + self.m as i64) as usize]
    }

    /// `Tr{C^2}`.
    pub fn trace_sq(&self) -> f64 {
        self.diagonal.iter().map(|c| c * c).sum()
    }

    /// Scale row `k+M` of a `(2M+1) x n` matrix by the corresponding entry.
    pub fn scale_rows(&self, matrix: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = matrix.clone();
        for (i, &c) in self.diagonal.iter().enumerate() {
            for v in out.row_mut(i).iter_mut() {
                *v *= c;
            }
        }
        out
    }

    /// `C X C` for a `(2M+1) x (2M+1)` matrix `X`.
    pub fn sandwich(&self, matrix: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.diagonal.len();
        DMatrix::from_fn(n, n, |i, j| {
            matrix[(i, j)] * (self.diagonal[i] * self.diagonal[j])
        })
    }
}

pub fn char_matrix(m: usize, sigma_delta: f64) -> Result<CharMatrix> {
    if !(sigma_delta >= 0.0) {
        return Err(Error::invalid("sigma_delta", "must be >= 0"));
    }
    let diagonal = (-(m as i64)..=m as i64)
        .map(|k| {
            let kk = (k * k) as f64;
            (-2.0 * std::f64::consts::PI.powi(2) * kk * sigma_delta * sigma_delta).exp()
        })
        .collect();
    Ok(CharMatrix {
        diagonal,
        sigma_delta,
        m,
    })
}

/// `gamma = 1 + alpha - Tr{C^2}/(2M+1)`.
///
/// The sign of the trace term is fixed by two consistency requirements:
/// `gamma = alpha` at `sigma_delta = 0`, and the asymptotic limit
/// `1 + alpha - nu(beta omega)`.
pub fn gamma_param(alpha: f64, c: &CharMatrix) -> f64 {
    1.0 + alpha - c.trace_sq() / harmonic_count(c.m) as f64
}

/// Matched filter `B^H = beta G`; no inversion involved.
pub fn build_mf(g: &FourierMatrix) -> Filter {
    let beta = g.beta();
    Filter {
        matrix_b: g.entries.adjoint() * Complex64::new(beta, 0.0),
        kind: FilterKind::Mf,
    }
}

/// Zero-forcing filter `B^H = R^{-1} G`.
pub fn build_zf(g: &FourierMatrix, cond_threshold: Option<f64>) -> Result<Filter> {
    let threshold = cond_threshold.unwrap_or(DEFAULT_COND_THRESHOLD);
    let eig = hermitian_eigen(&g.gram());
    check_condition(&eig.eigenvalues, 0.0, threshold)?;
    let b_dagger = eig.apply_function(|l| 1.0 / l, &g.entries);
    Ok(Filter {
        matrix_b: b_dagger.adjoint(),
        kind: FilterKind::Zf,
    })
}

/// LMMSE filter `B^H = (R + alpha I)^{-1} G`.
pub fn build_lmmse(g: &FourierMatrix, alpha: f64, cond_threshold: Option<f64>) -> Result<Filter> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha", "must be >= 0"));
    }
    let threshold = cond_threshold.unwrap_or(DEFAULT_COND_THRESHOLD);
    let eig = hermitian_eigen(&g.gram());
    check_condition(&eig.eigenvalues, alpha, threshold)?;
    let b_dagger = eig.apply_function(|l| 1.0 / (l + alpha), &g.entries);
    Ok(Filter {
        matrix_b: b_dagger.adjoint(),
        kind: FilterKind::Lmmse,
    })
}

/// Jitter-aware LMMSE filter `B^H = (C R C + gamma I)^{-1} C G`, built from
/// the mean positions only.
pub fn build_lmmse_jitter(g_hat: &FourierMatrix, c: &CharMatrix, gamma: f64) -> Result<Filter> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be > 0"));
    }
    if c.m != g_hat.m {
        return Err(Error::DimensionMismatch(format!(
            "char matrix M = {} but Fourier matrix M = {}",
            c.m, g_hat.m
        )));
    }
    let crc = c.sandwich(&g_hat.gram());
    let eig = hermitian_eigen(&crc);
    let cg = c.scale_rows(&g_hat.entries);
    let b_dagger = eig.apply_function(|l| 1.0 / (l + gamma), &cg);
    Ok(Filter {
        matrix_b: b_dagger.adjoint(),
        kind: FilterKind::LmmseJitter,
    })
}

/// Apply a filter: `a_hat = B^H p`.
pub fn estimate(filter: &Filter, p: &MeasurementSet) -> Result<DVector<Complex64>> {
    if p.values.len() != filter.r() {
        return Err(Error::DimensionMismatch(format!(
            "measurement length {} but filter expects {}",
            p.values.len(),
            filter.r()
        )));
    }
    Ok(filter.matrix_b.ad_mul(&p.values))
}

/// Linear-interpolation baseline: interpolate the measures onto the regular
/// grid `x'_q = (q-1)/r` with periodic wrap-around, then apply
/// `a_hat = beta G_{x'} p'`.
pub fn interp_estimate(
    p: &MeasurementSet,
    layout: &SensorLayout,
    m: usize,
) -> Result<DVector<Complex64>> {
    let r = layout.r();
    if r < 2 {
        return Err(Error::invalid("layout", "interpolation needs >= 2 sensors"));
    }
    if p.values.len() != r {
        return Err(Error::DimensionMismatch(format!(
            "measurement length {} but layout has {} sensors",
            p.values.len(),
            r
        )));
    }

    // Sort by position; coincident sensors are averaged.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| layout.actual_positions[a].total_cmp(&layout.actual_positions[b]));
    let mut xs: Vec<f64> = Vec::with_capacity(r);
    let mut vs: Vec<Complex64> = Vec::with_capacity(r);
    let mut counts: Vec<f64> = Vec::with_capacity(r);
    for &q in &order {
        let x = layout.actual_positions[q];
        let v = p.values[q];
        match xs.last() {
            Some(&last) if last == x => {
                // Running average of coincident measures.
                let n = vs.len() - 1;
                counts[n] += 1.0;
                let correction = (v - vs[n]) / counts[n];
                vs[n] += correction;
            }
            _ => {
                xs.push(x);
                vs.push(v);
                counts.push(1.0);
            }
        }
    }
    let k = xs.len();
    if k == 1 {
        // All sensors coincide; constant interpolant.
        let grid = crate::model::regular_layout(r)?;
        let g = crate::model::fourier_matrix(&grid.actual_positions, m)?;
        let p_prime = DVector::from_element(r, vs[0]);
        return Ok(&g.entries * p_prime * Complex64::new(g.beta(), 0.0));
    }

    // Piecewise-linear, period-1 periodic interpolation onto the grid.
    let mut p_prime = DVector::from_element(r, Complex64::new(0.0, 0.0));
    let mut seg = 0usize; // grid points visit [0,1) in order, so sweep segments
    for q in 0..r {
        let gx = q as f64 / r as f64;
        // Advance to the segment [xs[seg], xs[seg+1]) containing gx, where the
        // last segment wraps from xs[k-1] through 1 to xs[0].
        while seg + 1 < k && xs[seg + 1] <= gx {
            seg += 1;
        }
        let (x0, v0, x1, v1) = if gx < xs[0] {
            // Before the first node: wrapped segment ending at xs[0].
            (xs[k - 1] - 1.0, vs[k - 1], xs[0], vs[0])
        } else if seg + 1 < k {
            (xs[seg], vs[seg], xs[seg + 1], vs[seg + 1])
        } else {
            // After the last node: wrapped segment to xs[0] + 1.
            (xs[k - 1], vs[k - 1], xs[0] + 1.0, vs[0])
        };
        let w = (gx - x0) / (x1 - x0);
        p_prime[q] = v0 + (v1 - v0) * Complex64::new(w, 0.0);
    }

    let grid = crate::model::regular_layout(r)?;
    let g = crate::model::fourier_matrix(&grid.actual_positions, m)?;
    Ok(&g.entries * p_prime * Complex64::new(g.beta(), 0.0))
}
