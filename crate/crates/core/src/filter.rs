//! Spatial filters on [`Plane`]s.

use crate::raster::Plane;

/// Mean over a `size x size` window, replicating edge samples.
pub fn box_filter(src: &Plane, size: usize) -> Plane {
    assert!(size % 2 == 1, "box filter size must be odd");
    let r = (size / 2) as isize;
    let norm = 1.0 / (size * size) as f64;
    Plane::from_fn(src.width(), src.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                acc += src.get_clamped(x + dx, y + dy);
            }
        }
        acc * norm
    })
}

/// Normalized 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(src: &Plane, sigma: f64) -> Plane {
    let taps = gaussian_kernel(sigma);
    if taps.len() == 1 {
        return src.clone();
    }
    let r = (taps.len() / 2) as isize;
    let horiz = Plane::from_fn(src.width(), src.height(), |x, y| {
        taps.iter()
            .enumerate()
            .map(|(i, t)| t * src.get_clamped(x as isize + i as isize - r, y as isize))
            .sum()
    });
    Plane::from_fn(src.width(), src.height(), |x, y| {
        taps.iter()
            .enumerate()
            .map(|(i, t)| t * horiz.get_clamped(x as isize, y as isize + i as isize - r))
            .sum()
    })
}

/// Bilinear resampling with pixel-center alignment.
pub fn resize_bilinear(src: &Plane, width: usize, height: usize) -> Plane {
    assert!(width > 0 && height > 0, "empty resize target");
    if width == src.width() && height == src.height() {
        return src.clone();
    }
    let sx = src.width() as f64 / width as f64;
    let sy = src.height() as f64 / height as f64;
    let max_x = (src.width() - 1) as f64;
    let max_y = (src.height() - 1) as f64;
    Plane::from_fn(width, height, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(src.width() - 1), (y0 + 1).min(src.height() - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let top = src.get(x0, y0) * (1.0 - tx) + src.get(x1, y0) * tx;
        let bottom = src.get(x0, y1) * (1.0 - tx) + src.get(x1, y1) * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

/// 2-D cross-correlation with an odd square kernel and zero padding.
///
/// `out(x, y) = sum_{i,j} k(i, j) * src(x + i - r, y + j - r)`; the output has
/// the size of `src`.
pub fn cross_correlate(src: &Plane, kernel: &Plane) -> Plane {
    assert!(
        kernel.width() % 2 == 1 && kernel.height() == kernel.width(),
        "kernel must be square with odd size"
    );
    let r = (kernel.width() / 2) as isize;
    if r == 0 {
        let k = kernel.get(0, 0);
        return src.map(|v| k * v);
    }
    Plane::from_fn(src.width(), src.height(), |x, y| {
        let mut acc = 0.0;
        for j in 0..kernel.height() {
            for i in 0..kernel.width() {
                acc += kernel.get(i, j)
                    * src.get_or_zero(x as isize + i as isize - r, y as isize + j as isize - r);
            }
        }
        acc
    })
}
