//! In-memory image and scalar-field types.

use crate::error::{Error, Result};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// A dense row-major grid of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty plane {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "plane {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Plane { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
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

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with coordinates clamped into the grid.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Sample with zeros outside the grid.
    #[inline]
    pub fn get_or_zero(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            0.0
        } else {
            self.get(x as usize, y as usize)
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Index of the largest value as `(x, y)`; the first one wins on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width)
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Plane {
        assert!(x0 + w <= self.width && y0 + h <= self.height, "crop out of bounds");
        Plane::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// An H x W x C image with intensities in `[0, 1]`, interleaved row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!("{channels} channels, expected 1 or 3")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "{width}x{height}x{channels} image needs {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_gray(plane: &Plane) -> Result<Self> {
        ImageBuffer::new(plane.width(), plane.height(), 1, plane.data().to_vec())
    }

    /// Interleaves three planes of equal size into an RGB image.
    pub fn from_rgb_planes(planes: [&Plane; 3]) -> Result<Self> {
        let (w, h) = (planes[0].width(), planes[0].height());
        if planes.iter().any(|p| p.width() != w || p.height() != h) {
            return Err(Error::InvalidImage("channel planes differ in size".into()));
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            for p in &planes {
                data.push(p.data()[i]);
            }
        }
        ImageBuffer::new(w, h, 3, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> Plane {
        assert!(c < self.channels, "channel index out of range");
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Luma (0.299, 0.587, 0.114) for RGB; a copy for grayscale.
    pub fn to_gray(&self) -> Plane {
        let data = if self.channels == 1 {
            self.data.clone()
        } else {
            self.data
                .chunks_exact(3)
                .map(|px| LUMA[0] * px[0] + LUMA[1] * px[1] + LUMA[2] * px[2])
                .collect()
        };
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Replicates a grayscale image into three channels.
    pub fn to_rgb(&self) -> ImageBuffer {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }
}

/// A saliency field with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap(Plane);

impl SaliencyMap {
    pub fn new(plane: Plane) -> Result<Self> {
        if let Some(bad) = plane.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("saliency value {bad} outside [0, 1]")));
        }
        Ok(SaliencyMap(plane))
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        SaliencyMap(Plane::filled(width, height, 0.0))
    }

    /// Min-max normalization to `[0, 1]`; a constant field becomes all zeros.
    pub fn normalized(mut plane: Plane) -> Self {
        let (lo, hi) = plane.min_max();
        let range = hi - lo;
        if !(range > 0.0) || !range.is_finite() {
            plane.data_mut().iter_mut().for_each(|v| *v = 0.0);
        } else {
            plane
                .data_mut()
                .iter_mut()
                .for_each(|v| *v = ((*v - lo) / range).clamp(0.0, 1.0));
        }
        SaliencyMap(plane)
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }

    pub fn data(&self) -> &[f64] {
        self.0.data()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0.get(x, y)
    }
}
