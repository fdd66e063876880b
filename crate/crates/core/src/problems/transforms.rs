//! Real orthonormal transforms: multilevel 2-D Haar and a 2-D DCT-II whose
//! frequencies are laid out with DC at the grid center.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::oracle::Point;
use crate::prox::OrthonormalTransform;

fn check_haar_size(x: &DMatrix<f64>, levels: usize) -> Result<()> {
    let n = x.nrows();
    if n != x.ncols() {
        return Err(Error::InvalidInput(format!("Haar transform needs a square image, got {}x{}", n, x.ncols())));
    }
    if levels >= usize::BITS as usize || n == 0 || n % (1usize << levels) != 0 {
        return Err(Error::InvalidInput(format!("image side {n} is not divisible by 2^{levels}")));
    }
    Ok(())
}

fn haar_forward_1d(buf: &mut [f64], tmp: &mut [f64]) {
    let half = buf.len() / 2;
    for i in 0..half {
        let (a, b) = (buf[2 * i], buf[2 * i + 1]);
        tmp[i] = (a + b) * std::f64::consts::FRAC_1_SQRT_2;
        tmp[half + i] = (a - b) * std::f64::consts::FRAC_1_SQRT_2;
    }
    buf.copy_from_slice(&tmp[..buf.len()]);
}

fn haar_inverse_1d(buf: &mut [f64], tmp: &mut [f64]) {
    let half = buf.len() / 2;
    for i in 0..half {
        let (s, d) = (buf[i], buf[half + i]);
        tmp[2 * i] = (s + d) * std::f64::consts::FRAC_1_SQRT_2;
        tmp[2 * i + 1] = (s - d) * std::f64::consts::FRAC_1_SQRT_2;
    }
    buf.copy_from_slice(&tmp[..buf.len()]);
}

fn apply_block(x: &mut DMatrix<f64>, size: usize, step: fn(&mut [f64], &mut [f64]), columns_first: bool) {
    let mut line = vec![0.0; size];
    let mut tmp = vec![0.0; size];
    let mut columns = |x: &mut DMatrix<f64>| {
        for j in 0..size {
            for i in 0..size {
                line[i] = x[(i, j)];
            }
            step(&mut line, &mut tmp);
            for i in 0..size {
                x[(i, j)] = line[i];
            }
        }
    };
    let mut line2 = vec![0.0; size];
    let mut tmp2 = vec![0.0; size];
    let mut rows = |x: &mut DMatrix<f64>| {
        for i in 0..size {
            for j in 0..size {
                line2[j] = x[(i, j)];
            }
            step(&mut line2, &mut tmp2);
            for j in 0..size {
                x[(i, j)] = line2[j];
            }
        }
    };
    if columns_first {
        columns(x);
        rows(x);
    } else {
        rows(x);
        columns(x);
    }
}

/// Orthonormal multilevel 2-D Haar analysis. The approximation band sits in
/// the top-left `N/2^levels` block.
pub fn haar_dwt2(x: &DMatrix<f64>, levels: usize) -> Result<DMatrix<f64>> {
    check_haar_size(x, levels)?;
    let mut out = x.clone();
    let mut size = x.nrows();
    for _ in 0..levels {
        apply_block(&mut out, size, haar_forward_1d, true);
        size /= 2;
    }
    Ok(out)
}

/// Inverse of [`haar_dwt2`].
pub fn haar_idwt2(x: &DMatrix<f64>, levels: usize) -> Result<DMatrix<f64>> {
    check_haar_size(x, levels)?;
    let mut out = x.clone();
    let n = x.nrows();
    for l in (0..levels).rev() {
        apply_block(&mut out, n >> l, haar_inverse_1d, false);
    }
    Ok(out)
}

/// Haar transform acting on column-major flattened `N×N` images.
#[derive(Debug, Clone, Copy)]
pub struct HaarTransform2 {
    pub side: usize,
    pub levels: usize,
}

impl HaarTransform2 {
    pub fn new(side: usize, levels: usize) -> Result<Self> {
        check_haar_size(&DMatrix::zeros(side, side), levels)?;
        Ok(Self { side, levels })
    }

    fn as_image(&self, x: &Point) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.side, self.side, x.as_slice())
    }
}

impl OrthonormalTransform for HaarTransform2 {
    fn forward(&self, x: &Point) -> Point {
        let y = haar_dwt2(&self.as_image(x), self.levels).expect("size checked at construction");
        Point::from_column_slice(y.as_slice())
    }

    fn inverse(&self, x: &Point) -> Point {
        let y = haar_idwt2(&self.as_image(x), self.levels).expect("size checked at construction");
        Point::from_column_slice(y.as_slice())
    }
}

/// Orthonormal DCT-II matrix, `C[k, j] = s_k cos(π(2j + 1)k / 2N)`.
#[derive(Debug, Clone)]
pub struct DctMatrix(pub DMatrix<f64>);

impl DctMatrix {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        DctMatrix(DMatrix::from_fn(n, n, |k, j| {
            let s = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            s * (std::f64::consts::PI * (2.0 * j as f64 + 1.0) * k as f64 / (2.0 * nf)).cos()
        }))
    }
}

/// Grid index of DCT frequency `k`: DC at `N/2`, odd frequencies to the left
/// and even ones to the right, so the distance from the center grows with `k`.
pub fn centered_dct_position(k: usize, n: usize) -> usize {
    if k % 2 == 1 {
        n / 2 - (k + 1) / 2
    } else {
        n / 2 + k / 2
    }
}

/// 2-D orthonormal DCT-II with DC moved to the grid center, the real
/// stand-in for a centered 2-D Fourier transform.
#[derive(Debug, Clone)]
pub struct CenteredDct2 {
    side: usize,
    /// Row-permuted DCT matrix `P·C`.
    basis: DMatrix<f64>,
}

impl CenteredDct2 {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 || side % 2 != 0 {
            return Err(Error::InvalidInput(format!("image side must be even and >= 2, got {side}")));
        }
        let c = DctMatrix::new(side).0;
        let mut basis = DMatrix::zeros(side, side);
        for k in 0..side {
            basis.set_row(centered_dct_position(k, side), &c.row(k));
        }
        Ok(Self { side, basis })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// `B X Bᵀ`.
    pub fn forward_image(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.basis * x * self.basis.transpose()
    }

    /// `Bᵀ Y B`.
    pub fn inverse_image(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.basis.transpose() * y * &self.basis
    }
}

impl OrthonormalTransform for CenteredDct2 {
    fn forward(&self, x: &Point) -> Point {
        let img = DMatrix::from_column_slice(self.side, self.side, x.as_slice());
        Point::from_column_slice(self.forward_image(&img).as_slice())
    }

    fn inverse(&self, x: &Point) -> Point {
        let img = DMatrix::from_column_slice(self.side, self.side, x.as_slice());
        Point::from_column_slice(self.inverse_image(&img).as_slice())
    }
}
