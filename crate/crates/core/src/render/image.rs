use alloc::vec::Vec;

use crate::iqa::LumaGrid;
use crate::math::{powf, round};

/// Linear radiance buffer, row-major, top row first.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[f32; 3]>,
}

impl LinearImage {
    pub fn new(width: u32, height: u32) -> Self {
        LinearImage {
            width,
            height,
            pixels: alloc::vec![[0.0; 3]; width as usize * height as usize],
        }
    }

    /// Mean over all pixels and channels.
    pub fn mean(&self) -> f64 {
        let sum: f64 = self
            .pixels
            .iter()
            .map(|p| p[0] as f64 + p[1] as f64 + p[2] as f64)
            .sum();
        sum / (3 * self.pixels.len()) as f64
    }

    /// Mean Rec. 709 luminance of the linear values.
    pub fn mean_luminance(&self) -> f64 {
        let sum: f64 = self.pixels.iter().map(|p| linear_luminance(*p)).sum();
        sum / self.pixels.len() as f64
    }
}

#[inline]
pub fn linear_luminance(p: [f32; 3]) -> f64 {
    0.2126 * p[0] as f64 + 0.7152 * p[1] as f64 + 0.0722 * p[2] as f64
}

/// 8-bit sRGB-encoded buffer, row-major, top row first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisplayImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[u8; 3]>,
}

impl DisplayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Self {
        assert_eq!(pixels.len(), width as usize * height as usize);
        DisplayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn uniform(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        DisplayImage::new(
            width,
            height,
            alloc::vec![rgb; width as usize * height as usize],
        )
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }
}

/// sRGB transfer of one linear value after exposure, quantized to 8 bits.
pub fn encode_channel(linear: f64, exposure: f64) -> u8 {
    let v = (linear * exposure).clamp(0.0, 1.0);
    let encoded = if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * powf(v, 1.0 / 2.4) - 0.055
    };
    round(encoded * 255.0) as u8
}

pub fn encode_display(image: &LinearImage, exposure: f64) -> DisplayImage {
    let pixels = image
        .pixels
        .iter()
        .map(|p| p.map(|c| encode_channel(c as f64, exposure)))
        .collect();
    DisplayImage::new(image.width, image.height, pixels)
}

/// Rec. 709 weighted sum of the display-encoded channels, unquantized.
pub fn luma(image: &DisplayImage) -> LumaGrid {
    // Written relative to G so gray pixels map to their value exactly.
    let data = image
        .pixels
        .iter()
        .map(|p| {
            let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
            g + 0.2126 * (r - g) + 0.0722 * (b - g)
        })
        .collect();
    LumaGrid::new(image.width as usize, image.height as usize, data)
}
