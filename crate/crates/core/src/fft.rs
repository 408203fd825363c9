//! Two-dimensional discrete Fourier transform for arbitrary sizes.
//!
//! Rows and then columns are transformed with `rustfft`, which picks a
//! mixed-radix, Rader or Bluestein plan per length. The inverse is scaled by
//! `1 / (width * height)` so that `inverse(forward(x)) == x`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::raster::Plane;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn from_real(p: &Plane) -> Self {
        ComplexGrid {
            width: p.width(),
            height: p.height(),
            data: p.data().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    pub fn re(&self) -> Plane {
        Plane::new(self.width, self.height, self.data.iter().map(|c| c.re).collect())
            .expect("grid shape is consistent")
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn transform(grid: &mut ComplexGrid, dir: Direction) {
    let (w, h) = (grid.width, grid.height);
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = match dir {
        Direction::Forward => (planner.plan_fft_forward(w), planner.plan_fft_forward(h)),
        Direction::Inverse => (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h)),
    };

    for row in grid.data.chunks_exact_mut(w) {
        row_fft.process(row);
    }

    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for (y, c) in column.iter_mut().enumerate() {
            *c = grid.data[y * w + x];
        }
        col_fft.process(&mut column);
        for (y, c) in column.iter().enumerate() {
            grid.data[y * w + x] = *c;
        }
    }

    if let Direction::Inverse = dir {
        let scale = 1.0 / (w * h) as f64;
        grid.data.iter_mut().for_each(|c| *c *= scale);
    }
}

/// Unnormalized forward transform: `F(u, v) = sum x(m, n) e^{-2 pi i (um/W + vn/H)}`.
pub fn dft2d_forward(img: &Plane) -> ComplexGrid {
    let mut grid = ComplexGrid::from_real(img);
    transform(&mut grid, Direction::Forward);
    grid
}

pub fn dft2d_forward_complex(mut grid: ComplexGrid) -> ComplexGrid {
    transform(&mut grid, Direction::Forward);
    grid
}

/// Inverse transform, scaled by `1 / (W H)`.
pub fn dft2d_inverse(mut spectrum: ComplexGrid) -> ComplexGrid {
    transform(&mut spectrum, Direction::Inverse);
    spectrum
}
