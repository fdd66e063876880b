//! Compressed-sensing reconstruction: masked orthonormal measurements of an
//! image with a SCAD penalty on its Haar coefficients.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::seeded_rng;
use super::transforms::{CenteredDct2, HaarTransform2};
use crate::error::{Error, Result};
use crate::oracle::{Point, SmoothOracle};
use crate::prox::{ScadParams, ScadPenalty, TransformedProx};

/// SCAD applied to Haar wavelet coefficients.
pub type WaveletScad = TransformedProx<HaarTransform2, ScadPenalty>;

/// `q(X) = ½‖M ⊙ F(X) − Y‖²_F` on column-major flattened images.
#[derive(Debug, Clone)]
pub struct CsMriOracle {
    transform: CenteredDct2,
    mask: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl CsMriOracle {
    pub fn new(transform: CenteredDct2, mask: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        let n = transform.side();
        if mask.shape() != (n, n) || y.shape() != (n, n) {
            return Err(Error::InvalidInput(format!("mask and data must be {n}x{n}")));
        }
        Ok(Self { transform, mask, y })
    }

    pub fn side(&self) -> usize {
        self.transform.side()
    }

    pub fn transform(&self) -> &CenteredDct2 {
        &self.transform
    }

    fn image(&self, x: &Point) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.side(), self.side(), x.as_slice())
    }

    fn residual(&self, x: &Point) -> DMatrix<f64> {
        self.transform.forward_image(&self.image(x)).component_mul(&self.mask) - &self.y
    }

    fn adjoint(&self, r: &DMatrix<f64>) -> Point {
        let img = self.transform.inverse_image(&r.component_mul(&self.mask));
        Point::from_column_slice(img.as_slice())
    }
}

impl SmoothOracle for CsMriOracle {
    fn dimension(&self) -> usize {
        self.side() * self.side()
    }

    fn value(&self, x: &Point) -> f64 {
        0.5 * self.residual(x).norm_squared()
    }

    fn gradient(&self, x: &Point) -> Point {
        self.adjoint(&self.residual(x))
    }

    fn value_and_gradient(&self, x: &Point) -> (f64, Point) {
        let r = self.residual(x);
        (0.5 * r.norm_squared(), self.adjoint(&r))
    }

    fn hvp(&self, _x: &Point, w: &Point) -> Point {
        self.adjoint(&self.transform.forward_image(&self.image(w)))
    }
}

/// Instance parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CsMriParams {
    pub center_fraction: f64,
    pub p_outside: f64,
    /// `None` leaves the measurements noiseless.
    pub snr_db: Option<f64>,
    pub scad: ScadParams,
    pub wavelet_levels: usize,
    pub seed: u64,
}

impl CsMriParams {
    /// Sampling and noise defaults: 30% central disk, probability 1/4 outside,
    /// 25 dB, SCAD `a = 3.7` with `λ = 0.05` (for a unit-peak 64×64 image), three
    /// Haar levels.
    pub fn desk_defaults(seed: u64) -> Self {
        Self {
            center_fraction: 0.3,
            p_outside: 0.25,
            snr_db: Some(25.0),
            scad: ScadParams { lambda: 0.05, a: 3.7 },
            wavelet_levels: 3,
            seed,
        }
    }
}

/// A ready-to-solve reconstruction problem.
pub struct CsMriInstance {
    pub oracle: CsMriOracle,
    pub prox: WaveletScad,
    pub mask: DMatrix<f64>,
    pub clean: DMatrix<f64>,
    /// Masked noisy measurements.
    pub y: DMatrix<f64>,
    pub params: CsMriParams,
}

impl CsMriInstance {
    pub fn side(&self) -> usize {
        self.oracle.side()
    }

    /// Zero-filled reconstruction `F*(Y)`, shared by all solvers.
    pub fn initial_point(&self) -> Point {
        Point::from_column_slice(self.oracle.transform().inverse_image(&self.y).as_slice())
    }

    pub fn to_image(&self, x: &Point) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.side(), self.side(), x.as_slice())
    }
}

/// Builds the masked measurement model of `clean` (square, side a power of 2).
pub fn make_csmri(clean: &DMatrix<f64>, params: &CsMriParams) -> Result<CsMriInstance> {
    let n = clean.nrows();
    if n != clean.ncols() || n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "image must be square with a power-of-two side, got {}x{}",
            n,
            clean.ncols()
        )));
    }
    if !(0.0..=1.0).contains(&params.center_fraction) || !(0.0..=1.0).contains(&params.p_outside) {
        return Err(Error::InvalidInput("sampling fractions must lie in [0, 1]".into()));
    }
    let scad = ScadParams::new(params.scad.lambda, params.scad.a)?;
    let transform = CenteredDct2::new(n)?;
    let mask = generate_mask(n, params.center_fraction, params.p_outside, params.seed);
    let measured = transform.forward_image(clean).component_mul(&mask);
    let y = if measured.norm() > 0.0 {
        add_noise_snr(&measured, params.snr_db, params.seed ^ 0x9e37_79b9_7f4a_7c15, Some(&mask))?
    } else {
        measured
    };
    let oracle = CsMriOracle::new(transform, mask.clone(), y.clone())?;
    let prox = TransformedProx::new(HaarTransform2::new(n, params.wavelet_levels)?, ScadPenalty { params: scad }, n * n)?;
    Ok(CsMriInstance { oracle, prox, mask, clean: clean.clone(), y, params: params.clone() })
}

/// Binary sampling pattern: every entry within `center_fraction·N/2` of the
/// grid center `(N/2, N/2)` is sampled; the rest are Bernoulli(`p_outside`).
pub fn generate_mask(n: usize, center_fraction: f64, p_outside: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = seeded_rng(seed);
    let c = (n / 2) as f64;
    let radius = center_fraction * n as f64 / 2.0;
    DMatrix::from_fn(n, n, |i, j| {
        let (di, dj) = (i as f64 - c, j as f64 - c);
        let draw: f64 = rng.random();
        if di * di + dj * dj <= radius * radius || draw < p_outside {
            1.0
        } else {
            0.0
        }
    })
}

/// Adds Gaussian noise scaled so that `10 log₁₀(‖Y‖² / ‖noise‖²) = snr_db`
/// exactly for the realized draw. Noise is confined to `support` when given.
pub fn add_noise_snr(
    y: &DMatrix<f64>,
    snr_db: Option<f64>,
    seed: u64,
    support: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let Some(snr_db) = snr_db else {
        return Ok(y.clone());
    };
    let signal = y.norm();
    if !(signal > 0.0) {
        return Err(Error::InvalidInput("cannot set an SNR for an all-zero signal".into()));
    }
    let mut rng = seeded_rng(seed);
    let noise = DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| {
        let v: f64 = StandardNormal.sample(&mut rng);
        match support {
            Some(m) if m[(i, j)] == 0.0 => 0.0,
            _ => v,
        }
    });
    let nn = noise.norm();
    if nn == 0.0 {
        return Err(Error::InvalidInput("noise support is empty".into()));
    }
    let sigma = signal / (nn * 10f64.powf(snr_db / 20.0));
    Ok(y + noise * sigma)
}

/// `10 log₁₀(I_max² · #pixels / ‖X_true − X_rec‖²_F)` with `I_max` the peak of
/// `X_true`; `+∞` for an exact reconstruction.
pub fn psnr(x_true: &DMatrix<f64>, x_rec: &DMatrix<f64>) -> Result<f64> {
    if x_true.shape() != x_rec.shape() {
        return Err(Error::InvalidInput("PSNR needs images of equal shape".into()));
    }
    let err = (x_true - x_rec).norm_squared();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = x_true.max();
    let pixels = (x_true.nrows() * x_true.ncols()) as f64;
    Ok(10.0 * (peak * peak * pixels / err).log10())
}

/// Modified Shepp-Logan phantom on an `n×n` grid, values in `[0, 1]`.
pub fn phantom(n: usize) -> DMatrix<f64> {
    // (intensity, semi-axis a, semi-axis b, center x, center y, angle in degrees)
    const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
        (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
        (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
        (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
        (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
        (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
        (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
        (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
        (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
        (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
        (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
    ];
    let nf = n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        let x = (j as f64 + 0.5) * 2.0 / nf - 1.0;
        let y = 1.0 - (i as f64 + 0.5) * 2.0 / nf;
        let mut v = 0.0;
        for &(amp, a, b, x0, y0, deg) in &ELLIPSES {
            let (s, c) = deg.to_radians().sin_cos();
            let (dx, dy) = (x - x0, y - y0);
            let u = dx * c + dy * s;
            let w = -dx * s + dy * c;
            if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
                v += amp;
            }
        }
        v
    })
}
