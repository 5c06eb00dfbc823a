//! Image-quality metrics.
//!
//! Full-reference: `mse`, `psnr`, `ssim` over pixel-aligned luma grids.
//! No-reference: `nr_features` (sharpness, contrast, colorfulness) combined
//! by `nr_score` against a calibration. `zscore` normalizes a score row.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{exp, log10, sqrt};
use crate::render::{luma, DisplayImage};

/// Row-major grid of real-valued luma, nominally in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LumaGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LumaGrid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "luma grid size mismatch");
        LumaGrid {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IqaError {
    /// Reference and test are not pixel-aligned.
    DimensionMismatch {
        reference: (usize, usize),
        test: (usize, usize),
    },
    TooSmall {
        size: (usize, usize),
        min: usize,
    },
    Params(&'static str),
    Calibration(&'static str),
    EmptyScores,
}

impl fmt::Display for IqaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IqaError::DimensionMismatch { reference, test } => write!(
                f,
                "dimension mismatch: reference is {}x{}, test is {}x{}",
                reference.0, reference.1, test.0, test.1
            ),
            IqaError::TooSmall { size, min } => write!(
                f,
                "image too small: {}x{}, need at least {min}x{min}",
                size.0, size.1
            ),
            IqaError::Params(msg) => write!(f, "invalid SSIM parameters: {msg}"),
            IqaError::Calibration(msg) => write!(f, "invalid calibration: {msg}"),
            IqaError::EmptyScores => f.write_str("cannot normalize an empty score list"),
        }
    }
}

impl core::error::Error for IqaError {}

fn aligned(reference: &LumaGrid, test: &LumaGrid) -> Result<(), IqaError> {
    if reference.width != test.width || reference.height != test.height {
        return Err(IqaError::DimensionMismatch {
            reference: (reference.width, reference.height),
            test: (test.width, test.height),
        });
    }
    Ok(())
}

pub fn mse(reference: &LumaGrid, test: &LumaGrid) -> Result<f64, IqaError> {
    aligned(reference, test)?;
    let sum: f64 = reference
        .data
        .iter()
        .zip(&test.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.data.len() as f64)
}

/// Peak signal-to-noise ratio in dB for an 8-bit peak; `+inf` when the grids
/// are identical.
pub fn psnr(reference: &LumaGrid, test: &LumaGrid) -> Result<f64, IqaError> {
    let err = mse(reference, test)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * log10(255.0 * 255.0 / err))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    pub window_size: usize,
    pub gaussian_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window_size: 11,
            gaussian_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimParams {
    pub fn check(&self) -> Result<(), IqaError> {
        if self.window_size < 3 || self.window_size.is_multiple_of(2) {
            return Err(IqaError::Params("window_size must be odd and >= 3"));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.gaussian_sigma)
            && positive(self.k1)
            && positive(self.k2)
            && positive(self.dynamic_range))
        {
            return Err(IqaError::Params("sigma, k1, k2 and dynamic_range must be > 0"));
        }
        Ok(())
    }

    /// Normalized 2D Gaussian window, row-major.
    pub fn window(&self) -> Vec<f64> {
        let n = self.window_size;
        let c = (n / 2) as f64;
        let two_s2 = 2.0 * self.gaussian_sigma * self.gaussian_sigma;
        let mut w = vec![0.0; n * n];
        for y in 0..n {
            for x in 0..n {
                let (dx, dy) = (x as f64 - c, y as f64 - c);
                w[y * n + x] = exp(-(dx * dx + dy * dy) / two_s2);
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        w
    }

    pub fn c1(&self) -> f64 {
        let v = self.k1 * self.dynamic_range;
        v * v
    }

    pub fn c2(&self) -> f64 {
        let v = self.k2 * self.dynamic_range;
        v * v
    }
}

/// Mean SSIM over every window that lies fully inside the image.
///
/// Evaluated sequentially; the result is bit-identical across calls and
/// exactly symmetric in its arguments.
pub fn ssim(reference: &LumaGrid, test: &LumaGrid, params: &SsimParams) -> Result<f64, IqaError> {
    params.check()?;
    aligned(reference, test)?;
    let n = params.window_size;
    if reference.width < n || reference.height < n {
        return Err(IqaError::TooSmall {
            size: (reference.width, reference.height),
            min: n,
        });
    }
    let window = params.window();
    let (c1, c2) = (params.c1(), params.c2());
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=reference.height - n {
        for x0 in 0..=reference.width - n {
            total += ssim_window(reference, test, &window, n, x0, y0, c1, c2);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[allow(clippy::too_many_arguments)]
fn ssim_window(
    a: &LumaGrid,
    b: &LumaGrid,
    w: &[f64],
    n: usize,
    x0: usize,
    y0: usize,
    c1: f64,
    c2: f64,
) -> f64 {
    let (mut mu_a, mut mu_b) = (0.0, 0.0);
    for dy in 0..n {
        for dx in 0..n {
            let k = w[dy * n + dx];
            mu_a += k * a.get(x0 + dx, y0 + dy);
            mu_b += k * b.get(x0 + dx, y0 + dy);
        }
    }
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for dy in 0..n {
        for dx in 0..n {
            let k = w[dy * n + dx];
            let da = a.get(x0 + dx, y0 + dy) - mu_a;
            let db = b.get(x0 + dx, y0 + dy) - mu_b;
            var_a += k * da * da;
            var_b += k * db * db;
            cov += k * (da * db);
        }
    }
    ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
        / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
}

/// No-reference features of a display image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NrFeatures {
    /// Variance of the 3x3 Laplacian (4 center, -1 edge neighbours) of luma,
    /// over interior pixels.
    pub sharpness: f64,
    /// RMS deviation of luma from its mean.
    pub contrast: f64,
    /// Hasler-Suesstrunk colorfulness on the display RGB values.
    pub colorfulness: f64,
}

impl NrFeatures {
    pub fn as_array(&self) -> [f64; 3] {
        [self.sharpness, self.contrast, self.colorfulness]
    }
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, sqrt(ss / n as f64))
}

pub fn nr_features(image: &DisplayImage) -> Result<NrFeatures, IqaError> {
    let (w, h) = (image.width as usize, image.height as usize);
    if w < 3 || h < 3 {
        return Err(IqaError::TooSmall {
            size: (w, h),
            min: 3,
        });
    }
    let y = luma(image);
    let laplacian = (1..h - 1).flat_map(|j| {
        let y = &y;
        (1..w - 1).map(move |i| {
            4.0 * y.get(i, j) - y.get(i - 1, j) - y.get(i + 1, j) - y.get(i, j - 1) - y.get(i, j + 1)
        })
    });
    let (_, lap_std) = mean_and_std(laplacian);
    let (_, contrast) = mean_and_std(y.data().iter().copied());

    let rg = image.pixels.iter().map(|p| p[0] as f64 - p[1] as f64);
    let yb = image
        .pixels
        .iter()
        .map(|p| 0.5 * (p[0] as f64 + p[1] as f64) - p[2] as f64);
    let (mu_rg, sd_rg) = mean_and_std(rg);
    let (mu_yb, sd_yb) = mean_and_std(yb);
    let colorfulness =
        sqrt(sd_rg * sd_rg + sd_yb * sd_yb) + 0.3 * sqrt(mu_rg * mu_rg + mu_yb * mu_yb);

    Ok(NrFeatures {
        sharpness: lap_std * lap_std,
        contrast,
        colorfulness,
    })
}

/// Per-feature `(mean, stddev)` reference statistics for `nr_score`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NrCalibration {
    pub sharpness: (f64, f64),
    pub contrast: (f64, f64),
    pub colorfulness: (f64, f64),
}

impl NrCalibration {
    /// Feature statistics over a corpus (population standard deviation).
    pub fn from_features(features: &[NrFeatures]) -> Result<Self, IqaError> {
        if features.is_empty() {
            return Err(IqaError::Calibration("empty corpus"));
        }
        let stat = |k: usize| mean_and_std(features.iter().map(move |f| f.as_array()[k]));
        let cal = NrCalibration {
            sharpness: stat(0),
            contrast: stat(1),
            colorfulness: stat(2),
        };
        cal.check()?;
        Ok(cal)
    }

    pub fn check(&self) -> Result<(), IqaError> {
        for (mean, sd) in [self.sharpness, self.contrast, self.colorfulness] {
            if !mean.is_finite() || !(sd > 0.0 && sd.is_finite()) {
                return Err(IqaError::Calibration("stddev must be > 0"));
            }
        }
        Ok(())
    }
}

/// Mean of the three feature z-scores; higher is better.
pub fn nr_score(features: &NrFeatures, calibration: &NrCalibration) -> Result<f64, IqaError> {
    calibration.check()?;
    let z = |v: f64, (mean, sd): (f64, f64)| (v - mean) / sd;
    Ok((z(features.sharpness, calibration.sharpness)
        + z(features.contrast, calibration.contrast)
        + z(features.colorfulness, calibration.colorfulness))
        / 3.0)
}

/// `(v - mean) / population_std` per element; all zeros when every value is
/// equal.
pub fn zscore(values: &[f64]) -> Result<Vec<f64>, IqaError> {
    if values.is_empty() {
        return Err(IqaError::EmptyScores);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    // The mean is rounded to the nearest double, which matters when the
    // spread is tiny next to the values themselves; centring the residuals
    // once more removes that rounding.
    let mut centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let shift = centred.iter().sum::<f64>() / n;
    centred.iter_mut().for_each(|d| *d -= shift);
    let sd = sqrt(centred.iter().map(|d| d * d).sum::<f64>() / n);
    if sd == 0.0 || values.iter().all(|v| *v == values[0]) {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(centred.into_iter().map(|d| d / sd).collect())
}
