//! System model: bandlimited fields, sensor layouts, generalized Fourier
//! matrices and noisy measurements.
//!
//! A field over one period `[0, 1)` is described by `2M+1` complex harmonic
//! amplitudes `a`, sampled at `r` sensor positions through the generalized
//! Fourier matrix `G` with entries `(1/sqrt(2M+1)) exp(-j 2 pi k x_q)`. Two
//! regimes are modeled: fixed known positions with noisy measures (Model A)
//! and Gaussian-jittered positions of which only the mean is known (Model B).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Number of harmonics for a given half-count `m`.
pub fn harmonic_count(m: usize) -> usize {
    2 * m + 1
}

/// Complex harmonic amplitudes of a bandlimited field.
#[derive(Debug, Clone)]
pub struct FieldSpectrum {
    /// Coefficients indexed k = -M..M (row k + M).
    pub coefficients: DVector<Complex64>,
    pub m: usize,
    /// Per-coefficient power sigma_a^2.
    pub variance: f64,
}

impl FieldSpectrum {
    pub fn new(coefficients: DVector<Complex64>, m: usize, variance: f64) -> Result<Self> {
        if coefficients.len() != harmonic_count(m) {
            return Err(Error::DimensionMismatch(format!(
                "spectrum length {} != 2M+1 = {}",
                coefficients.len(),
                harmonic_count(m)
            )));
        }
        if !(variance > 0.0) {
            return Err(Error::invalid("variance", "must be > 0"));
        }
        Ok(Self {
            coefficients,
            m,
            variance,
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Sensor positions on the unit circle `[0, 1)`.
///
/// `mean_positions` are the nominal locations known to the sink;
/// `actual_positions` include the per-sensor displacement.
#[derive(Debug, Clone)]
pub struct SensorLayout {
    pub mean_positions: Vec<f64>,
    pub actual_positions: Vec<f64>,
    /// Displacement standard deviation sigma_delta.
    pub displacement_std: f64,
}

impl SensorLayout {
    pub fn r(&self) -> usize {
        self.mean_positions.len()
    }
}

/// Generalized Fourier matrix, `(2M+1) x r`, entry
/// `(k, q) = exp(-j 2 pi k x_q) / sqrt(2M+1)` with `k = -M..M`.
#[derive(Debug, Clone)]
pub struct FourierMatrix {
    pub entries: DMatrix<Complex64>,
    pub m: usize,
    pub r: usize,
    positions: Vec<f64>,
}

impl FourierMatrix {
    /// Ratio (2M+1)/r of this matrix.
    pub fn beta(&self) -> f64 {
        harmonic_count(self.m) as f64 / self.r as f64
    }

    /// Gram matrix `R = G G^H`, `(2M+1) x (2M+1)`.
    ///
    /// `R_{kh} = t_{k-h} / (2M+1)` with `t_d = sum_q exp(-j 2 pi d x_q)`, so R
    /// is Toeplitz and is assembled from the `4M+1` power sums instead of a
    /// full matrix product.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let n = harmonic_count(self.m);
        let mut t = vec![Complex64::new(0.0, 0.0); 2 * self.m + 1]; // t_0 .. t_2M
        for &x in &self.positions {
            let z = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * x);
            let mut p = Complex64::new(1.0, 0.0);
            for td in t.iter_mut() {
                *td += p;
                p *= z;
            }
        }
        DMatrix::from_fn(n, n, |row, col| {
            let d = row as isize - col as isize;
            let v = if d >= 0 {
                t[d as usize]
            } else {
                t[(-d) as usize].conj()
            };
            v / n as f64
        })
    }
}

/// Vector of noisy field measurements.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub values: DVector<Complex64>,
    pub noise_variance: f64,
}

/// Dimensionless scenario parameters.
///
/// `beta = (2M+1)/r`, `alpha = sigma_n^2 / sigma_a^2 = 1/SNR_m`,
/// `omega = sigma_delta * r` so that `SNR_x = 1/omega^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub beta: f64,
    pub alpha: f64,
    pub omega: f64,
}

impl ScenarioParams {
    pub fn new(beta: f64, alpha: f64, omega: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", "must be finite and > 0"));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite and >= 0"));
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::invalid("omega", "must be finite and >= 0"));
        }
        Ok(Self { beta, alpha, omega })
    }

    /// Sensor count for a given harmonic half-count: `r = round((2M+1)/beta)`.
    pub fn sensor_count(&self, m: usize) -> usize {
        (harmonic_count(m) as f64 / self.beta).round().max(1.0) as usize
    }

    /// Displacement standard deviation for `r` sensors: `sigma_delta = omega / r`.
    pub fn sigma_delta(&self, r: usize) -> f64 {
        self.omega / r as f64
    }

    pub fn snr_m_db(&self) -> f64 {
        -10.0 * self.alpha.log10()
    }

    pub fn snr_x_db(&self) -> f64 {
        -20.0 * self.omega.log10()
    }

    pub fn with_snr_m_db(mut self, db: f64) -> Self {
        self.alpha = 10f64.powf(-db / 10.0);
        self
    }

    pub fn with_snr_x_db(mut self, db: f64) -> Self {
        self.omega = if db.is_infinite() {
            0.0
        } else {
            10f64.powf(-db / 20.0)
        };
        self
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, total_variance: f64) -> Complex64 {
    let s = (total_variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draw a spectrum of `2M+1` i.i.d. circularly symmetric complex Gaussian
/// coefficients, each with total variance `variance`.
pub fn draw_spectrum<R: Rng + ?Sized>(
    m: usize,
    variance: f64,
    rng: &mut R,
) -> Result<FieldSpectrum> {
    if !(variance > 0.0) {
        return Err(Error::invalid("variance", "must be > 0"));
    }
    let n = harmonic_count(m);
    let coefficients = DVector::from_fn(n, |_, _| complex_gaussian(rng, variance));
    FieldSpectrum::new(coefficients, m, variance)
}

/// Draw `r` sensor positions i.i.d. uniform on `[0, 1)`; no displacement.
pub fn draw_layout<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Result<SensorLayout> {
    if r == 0 {
        return Err(Error::invalid("r", "sensor count must be >= 1"));
    }
    let mean: Vec<f64> = (0..r).map(|_| rng.random::<f64>()).collect();
    Ok(SensorLayout {
        actual_positions: mean.clone(),
        mean_positions: mean,
        displacement_std: 0.0,
    })
}

/// Regular grid `x_q = (q-1)/r`, the baseline layout.
pub fn regular_layout(r: usize) -> Result<SensorLayout> {
    if r == 0 {
        return Err(Error::invalid("r", "sensor count must be >= 1"));
    }
    let mean: Vec<f64> = (0..r).map(|q| q as f64 / r as f64).collect();
    Ok(SensorLayout {
        actual_positions: mean.clone(),
        mean_positions: mean,
        displacement_std: 0.0,
    })
}

/// Displace each sensor by an independent Gaussian of standard deviation
/// `sigma_delta`, wrapped back onto `[0, 1)`. Mean positions are preserved.
pub fn apply_jitter<R: Rng + ?Sized>(
    layout: &SensorLayout,
    sigma_delta: f64,
    rng: &mut R,
) -> Result<SensorLayout> {
    if !(sigma_delta >= 0.0) {
        return Err(Error::invalid("sigma_delta", "must be >= 0"));
    }
    let actual = layout
        .mean_positions
        .iter()
        .map(|&x| {
            if sigma_delta == 0.0 {
                x
            } else {
                let d: f64 = rng.sample(StandardNormal);
                (x + sigma_delta * d).rem_euclid(1.0)
            }
        })
        .collect();
    Ok(SensorLayout {
        mean_positions: layout.mean_positions.clone(),
        actual_positions: actual,
        displacement_std: sigma_delta,
    })
}

/// Generalized Fourier matrix at the given positions.
pub fn fourier_matrix(positions: &[f64], m: usize) -> Result<FourierMatrix> {
    if positions.iter().any(|&x| !(0.0..1.0).contains(&x)) {
        return Err(Error::invalid("positions", "must lie in [0, 1)"));
    }
    let n = harmonic_count(m);
    let r = positions.len();
    let amp = 1.0 / (n as f64).sqrt();
    let mut entries = DMatrix::zeros(n, r);
    for (q, &x) in positions.iter().enumerate() {
        // Column q: amp * z^k for k = -M..M with z = exp(-j 2 pi x),
        // built by recurrence from k = 0 outwards.
        let z = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * x);
        let mut up = Complex64::new(amp, 0.0);
        let mut down = Complex64::new(amp, 0.0);
        entries[(m, q)] = up;
        for k in 1..=m {
            up *= z;
            down *= z.conj();
            entries[(m + k, q)] = up;
            entries[(m - k, q)] = down;
        }
    }
    Ok(FourierMatrix {
        entries,
        m,
        r,
        positions: positions.to_vec(),
    })
}

/// Field samples `s = G^H a`.
pub fn sample_field(spectrum: &FieldSpectrum, g: &FourierMatrix) -> Result<DVector<Complex64>> {
    if spectrum.m != g.m {
        return Err(Error::DimensionMismatch(format!(
            "spectrum M = {} but matrix M = {}",
            spectrum.m, g.m
        )));
    }
    Ok(g.entries.adjoint() * &spectrum.coefficients)
}

/// Add circularly symmetric complex Gaussian noise of per-entry total
/// variance `sigma_n2` to the samples.
pub fn measure<R: Rng + ?Sized>(
    s: &DVector<Complex64>,
    sigma_n2: f64,
    rng: &mut R,
) -> Result<MeasurementSet> {
    if !(sigma_n2 >= 0.0) {
        return Err(Error::invalid("sigma_n2", "must be >= 0"));
    }
    let values = if sigma_n2 == 0.0 {
        s.clone()
    } else {
        DVector::from_fn(s.len(), |i, _| s[i] + complex_gaussian(rng, sigma_n2))
    };
    Ok(MeasurementSet {
        values,
        noise_variance: sigma_n2,
    })
}
