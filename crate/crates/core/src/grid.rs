//! Dense row-major grids and the difference operators the pipeline is built on.
//!
//! [`Frame`] is a full H×W sensor-sized grid. Spatial differences are kept at
//! their natural reduced size: [`DxMap`] is H×(W−1) and [`DyMap`] is (H−1)×W,
//! so there is never an ambiguous padded column or row.

use std::ops::Deref;

use crate::error::{NucError, Result};

/// Row-major grid of `f64` values with no shape constraints beyond non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(NucError::InvalidDimensions {
                height,
                width,
                reason: "grid must be non-empty",
            });
        }
        if data.len() != height * width {
            return Err(NucError::InvalidDimensions {
                height,
                width,
                reason: "data length does not match dimensions",
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(NucError::NonFinite {
                row: k / width,
                col: k % width,
            });
        }
        Ok(Grid {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Grid::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut f = f;
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Grid::new(height, width, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Grid {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.width {
            for i in 0..self.height {
                data.push(self.get(i, j));
            }
        }
        Grid {
            height: self.width,
            width: self.height,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Grid> {
        Grid::new(
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Cell-wise combination of two same-shaped grids.
    pub fn zip_with(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Grid> {
        self.ensure_same_dims(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Grid::new(self.height, self.width, data)
    }

    pub fn ensure_same_dims(&self, other: &Grid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(NucError::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Arithmetic mean and population standard deviation (two passes).
    pub fn stats(&self) -> (f64, f64) {
        let mean = self.mean();
        let var = self
            .data
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / self.data.len() as f64;
        (mean, var.sqrt())
    }

    pub fn max_abs_diff(&self, other: &Grid) -> Result<f64> {
        self.ensure_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn rms_diff(&self, other: &Grid) -> Result<f64> {
        self.ensure_same_dims(other)?;
        let ss: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((ss / self.data.len() as f64).sqrt())
    }
}

macro_rules! grid_newtype {
    ($name:ident) => {
        impl Deref for $name {
            type Target = Grid;

            fn deref(&self) -> &Grid {
                &self.0
            }
        }

        impl $name {
            pub fn into_grid(self) -> Grid {
                self.0
            }
        }
    };
}

/// Full-size sensor grid: raw readout, gain-compensated readout, or scene radiance.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame(Grid);
grid_newtype!(Frame);

impl Frame {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        Frame::from_grid(Grid::new(height, width, data)?)
    }

    pub fn from_grid(grid: Grid) -> Result<Self> {
        if grid.height < 2 || grid.width < 2 {
            return Err(NucError::InvalidDimensions {
                height: grid.height,
                width: grid.width,
                reason: "frames need at least two samples per axis",
            });
        }
        Ok(Frame(grid))
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Frame::from_grid(Grid::filled(height, width, value)?)
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Frame::filled(height, width, 0.0)
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        Frame::from_grid(Grid::from_fn(height, width, f)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn transpose(&self) -> Frame {
        Frame(self.0.transpose())
    }

    pub fn zip_with(&self, other: &Frame, f: impl Fn(f64, f64) -> f64) -> Result<Frame> {
        Ok(Frame(self.0.zip_with(&other.0, f)?))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Frame> {
        Ok(Frame(self.0.map(f)?))
    }
}

/// Horizontal differences, H×(W−1).
#[derive(Debug, Clone, PartialEq)]
pub struct DxMap(Grid);
grid_newtype!(DxMap);

impl DxMap {
    /// Wraps a grid of horizontal differences for a frame of `frame_width` columns.
    pub fn new(grid: Grid, frame_width: usize) -> Result<Self> {
        if grid.width + 1 != frame_width {
            return Err(NucError::DimensionMismatch {
                expected: (grid.height, frame_width.saturating_sub(1)),
                found: grid.dims(),
            });
        }
        Ok(DxMap(grid))
    }

    /// Dimensions of the frame this map was (or could have been) derived from.
    pub fn frame_dims(&self) -> (usize, usize) {
        (self.0.height, self.0.width + 1)
    }

    pub fn transpose(&self) -> DyMap {
        DyMap(self.0.transpose())
    }
}

/// Vertical differences, (H−1)×W.
#[derive(Debug, Clone, PartialEq)]
pub struct DyMap(Grid);
grid_newtype!(DyMap);

impl DyMap {
    pub fn new(grid: Grid, frame_height: usize) -> Result<Self> {
        if grid.height + 1 != frame_height {
            return Err(NucError::DimensionMismatch {
                expected: (frame_height.saturating_sub(1), grid.width),
                found: grid.dims(),
            });
        }
        Ok(DyMap(grid))
    }

    pub fn frame_dims(&self) -> (usize, usize) {
        (self.0.height + 1, self.0.width)
    }

    pub fn transpose(&self) -> DxMap {
        DxMap(self.0.transpose())
    }
}

/// `out(i,j) = f(i,j+1) − f(i,j)`.
pub fn forward_diff_x(f: &Frame) -> DxMap {
    let (h, w) = f.dims();
    let mut data = Vec::with_capacity(h * (w - 1));
    for i in 0..h {
        data.extend(f.row(i).windows(2).map(|p| p[1] - p[0]));
    }
    DxMap(Grid {
        height: h,
        width: w - 1,
        data,
    })
}

/// `out(i,j) = f(i+1,j) − f(i,j)`.
pub fn forward_diff_y(f: &Frame) -> DyMap {
    let (h, w) = f.dims();
    let mut data = Vec::with_capacity((h - 1) * w);
    for i in 0..h - 1 {
        data.extend(f.row(i + 1).iter().zip(f.row(i)).map(|(b, a)| b - a));
    }
    DyMap(Grid {
        height: h - 1,
        width: w,
        data,
    })
}

/// Frame `b` (captured later) minus frame `a`.
pub fn temporal_diff(a: &Frame, b: &Frame) -> Result<Frame> {
    a.zip_with(b, |x, y| y - x)
}

/// Mean and population standard deviation of a frame.
pub fn frame_stats(f: &Frame) -> (f64, f64) {
    f.stats()
}
