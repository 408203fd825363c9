//! Spectral-residual saliency.
//!
//! The image is reduced to a small working resolution, its log-amplitude
//! spectrum is compared against a locally averaged copy, and the residual is
//! transformed back with the original phase. Squared magnitude, Gaussian
//! smoothing and upsampling give the saliency field, normalized to `[0, 1]`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{dft2d_forward, dft2d_inverse, ComplexGrid};
use crate::filter::{box_filter, gaussian_blur, resize_bilinear};
use crate::geometry::BBox;
use crate::raster::{ImageBuffer, Plane, SaliencyMap};

/// Smallest image side (and region side after padding) accepted.
pub const MIN_SIDE: usize = 8;

/// Working images whose intensity range is at most this are treated as flat.
const FLAT_RANGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    /// Width of the working image; height follows the aspect ratio.
    pub working_width: usize,
    /// Added to the amplitude before taking the log.
    pub log_epsilon: f64,
    /// Side of the box filter applied to the log-amplitude spectrum.
    pub smooth_kernel: usize,
    /// Gaussian sigma, in working-resolution pixels, applied to the map.
    pub postblur_sigma: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            working_width: 64,
            log_epsilon: 1e-8,
            smooth_kernel: 3,
            postblur_sigma: 2.5,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.working_width < MIN_SIDE {
            return Err(Error::InvalidConfig(format!(
                "working_width must be at least {MIN_SIDE}, got {}",
                self.working_width
            )));
        }
        if self.smooth_kernel.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "smooth_kernel must be odd, got {}",
                self.smooth_kernel
            )));
        }
        if !(self.log_epsilon > 0.0 && self.log_epsilon.is_finite()) {
            return Err(Error::InvalidConfig("log_epsilon must be positive".into()));
        }
        if !(self.postblur_sigma >= 0.0 && self.postblur_sigma.is_finite()) {
            return Err(Error::InvalidConfig("postblur_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Saliency of a whole image. RGB input is reduced to luma first.
pub fn spectral_residual(img: &ImageBuffer, cfg: &SpectralConfig) -> Result<SaliencyMap> {
    cfg.validate()?;
    spectral_residual_gray(&img.to_gray(), cfg)
}

/// Same as [`spectral_residual`] on an already-gray plane.
pub fn spectral_residual_gray(gray: &Plane, cfg: &SpectralConfig) -> Result<SaliencyMap> {
    let (w, h) = (gray.width(), gray.height());
    if w.min(h) < MIN_SIDE {
        return Err(Error::ImageTooSmall { width: w, height: h });
    }

    let work_w = cfg.working_width;
    let work_h = ((h as f64 * work_w as f64 / w as f64).round() as usize).max(1);
    let small = resize_bilinear(gray, work_w, work_h);

    let (lo, hi) = small.min_max();
    if hi - lo <= FLAT_RANGE {
        return Ok(SaliencyMap::zeros(w, h));
    }

    let spectrum = dft2d_forward(&small);
    let log_amplitude = Plane::new(
        work_w,
        work_h,
        spectrum.data.iter().map(|c| (c.norm() + cfg.log_epsilon).ln()).collect(),
    )?;
    let smoothed = box_filter(&log_amplitude, cfg.smooth_kernel);

    let residual = ComplexGrid {
        width: work_w,
        height: work_h,
        data: spectrum
            .data
            .iter()
            .zip(log_amplitude.data().iter().zip(smoothed.data()))
            .map(|(c, (l, s))| Complex64::from_polar((l - s).exp(), c.arg()))
            .collect(),
    };
    let back = dft2d_inverse(residual);
    let energy = Plane::new(work_w, work_h, back.data.iter().map(|c| c.norm_sqr()).collect())?;

    let blurred = gaussian_blur(&energy, cfg.postblur_sigma);
    let full = resize_bilinear(&blurred, w, h);
    Ok(SaliencyMap::normalized(full))
}

/// Integer pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PixelRect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl PixelRect {
    /// Pixels touched by `b`, clamped to the frame; `None` if nothing remains.
    fn covering(b: &BBox, width: usize, height: usize) -> Option<PixelRect> {
        let x0 = b.x().floor().max(0.0) as usize;
        let y0 = b.y().floor().max(0.0) as usize;
        let x1 = (b.x_max().ceil().max(0.0) as usize).min(width);
        let y1 = (b.y_max().ceil().max(0.0) as usize).min(height);
        (x1 > x0 && y1 > y0).then_some(PixelRect { x0, y0, x1, y1 })
    }

    /// Grows each side to at least `min` around the center, shifted to stay
    /// inside the frame.
    fn padded(&self, min: usize, width: usize, height: usize) -> PixelRect {
        fn grow(a: usize, b: usize, min: usize, limit: usize) -> (usize, usize) {
            let len = b - a;
            if len >= min {
                return (a, b);
            }
            let start = a.saturating_sub((min - len) / 2);
            let start = start.min(limit - min);
            (start, start + min)
        }
        let (x0, x1) = grow(self.x0, self.x1, min, width);
        let (y0, y1) = grow(self.y0, self.y1, min, height);
        PixelRect { x0, y0, x1, y1 }
    }
}

/// Saliency restricted to `regions`: zero outside their union; inside, each
/// region carries the saliency of its own crop. Overlaps take the pointwise
/// maximum and the result is rescaled so its peak is 1.
pub fn region_saliency(img: &ImageBuffer, regions: &[BBox], cfg: &SpectralConfig) -> Result<SaliencyMap> {
    cfg.validate()?;
    let (w, h) = (img.width(), img.height());
    if regions.is_empty() {
        return Ok(SaliencyMap::zeros(w, h));
    }
    if w.min(h) < MIN_SIDE {
        return Err(Error::ImageTooSmall { width: w, height: h });
    }
    let gray = img.to_gray();

    let rects: Vec<PixelRect> = regions.iter().filter_map(|b| PixelRect::covering(b, w, h)).collect();
    let patches = rects
        .par_iter()
        .map(|r| {
            let c = r.padded(MIN_SIDE, w, h);
            let crop = gray.crop(c.x0, c.y0, c.x1 - c.x0, c.y1 - c.y0);
            spectral_residual_gray(&crop, cfg).map(|m| (*r, c, m))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Plane::filled(w, h, 0.0);
    for (r, c, map) in &patches {
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                let v = map.get(x - c.x0, y - c.y0);
                if v > out.get(x, y) {
                    out.set(x, y, v);
                }
            }
        }
    }

    let (_, peak) = out.min_max();
    if peak > 0.0 {
        out.data_mut().iter_mut().for_each(|v| *v /= peak);
    }
    SaliencyMap::new(out)
}
