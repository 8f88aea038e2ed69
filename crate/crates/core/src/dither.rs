//! Offset-derivative estimation from one-pixel dither pairs.
//!
//! A cycle captures a base frame, then a frame after the array has moved one
//! pixel along an axis so that detector `(i,j)` sees the scene point that
//! detector `(i,j+1)` saw before. With gain-compensated frames
//! `base = φ + o` and `shifted(i,j) = φ'(i,j+1) + o(i,j)`:
//!
//! ```text
//! Δx(base) − Δt = base(i,j+1) − shifted(i,j) = Δx(o)(i,j) − [φ'(i,j+1) − φ(i,j+1)]
//! ```
//!
//! The scene term changes from cycle to cycle while `Δx(o)` does not, so a
//! per-cell median over cycles isolates the offset derivative.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NucError, Result};
use crate::grid::{forward_diff_x, forward_diff_y, DxMap, DyMap, Frame, Grid};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

impl Axis {
    pub fn index(self) -> u64 {
        match self {
            Axis::Horizontal => 0,
            Axis::Vertical => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::Horizontal => "x",
            Axis::Vertical => "y",
        }
    }
}

/// One cycle's `Δ(R) − Δt(R)` map, or a median of several.
#[derive(Debug, Clone, PartialEq)]
pub enum DifferenceSample {
    Horizontal(DxMap),
    Vertical(DyMap),
}

impl DifferenceSample {
    pub fn axis(&self) -> Axis {
        match self {
            DifferenceSample::Horizontal(_) => Axis::Horizontal,
            DifferenceSample::Vertical(_) => Axis::Vertical,
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            DifferenceSample::Horizontal(m) => m,
            DifferenceSample::Vertical(m) => m,
        }
    }

    pub fn frame_dims(&self) -> (usize, usize) {
        match self {
            DifferenceSample::Horizontal(m) => m.frame_dims(),
            DifferenceSample::Vertical(m) => m.frame_dims(),
        }
    }

    fn from_grid(axis: Axis, grid: Grid, frame_dims: (usize, usize)) -> Result<Self> {
        Ok(match axis {
            Axis::Horizontal => DifferenceSample::Horizontal(DxMap::new(grid, frame_dims.1)?),
            Axis::Vertical => DifferenceSample::Vertical(DyMap::new(grid, frame_dims.0)?),
        })
    }
}

/// Per-cycle difference sample from a base frame and its +1 pixel dithered partner.
///
/// Only the first `W−1` columns (horizontal) or `H−1` rows (vertical) of
/// `shifted` are read; its last column/row sees scene content outside the
/// base frame.
pub fn cycle_difference(base: &Frame, shifted: &Frame, axis: Axis) -> Result<DifferenceSample> {
    base.ensure_same_dims(shifted)?;
    let (h, w) = base.dims();
    Ok(match axis {
        Axis::Horizontal => {
            let mut data = Vec::with_capacity(h * (w - 1));
            for i in 0..h {
                let b = base.row(i);
                let s = shifted.row(i);
                data.extend((0..w - 1).map(|j| b[j + 1] - s[j]));
            }
            DifferenceSample::Horizontal(DxMap::new(Grid::new(h, w - 1, data)?, w)?)
        }
        Axis::Vertical => {
            let mut data = Vec::with_capacity((h - 1) * w);
            for i in 0..h - 1 {
                let b = base.row(i + 1);
                let s = shifted.row(i);
                data.extend(b.iter().zip(s).map(|(x, y)| x - y));
            }
            DifferenceSample::Vertical(DyMap::new(Grid::new(h - 1, w, data)?, h)?)
        }
    })
}

/// Median of a scratch buffer; even counts average the two middle order statistics.
fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (left, &mut upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) * 0.5
    }
}

/// Per-cell temporal median across samples of one axis.
pub fn aggregate_median(samples: &[DifferenceSample], axis: Axis) -> Result<DifferenceSample> {
    let first = samples.first().ok_or(NucError::EmptySamples)?;
    if samples.iter().any(|s| s.axis() != axis) {
        return Err(NucError::MixedAxes);
    }
    let dims = first.grid().dims();
    for s in samples {
        if s.grid().dims() != dims {
            return Err(NucError::DimensionMismatch {
                expected: dims,
                found: s.grid().dims(),
            });
        }
    }
    if samples.len() == 1 {
        return Ok(first.clone());
    }
    let (h, w) = dims;
    let mut data = vec![0.0; h * w];
    data.par_chunks_mut(w).enumerate().for_each(|(i, out_row)| {
        let mut buf = Vec::with_capacity(samples.len());
        for (j, out) in out_row.iter_mut().enumerate() {
            buf.clear();
            buf.extend(samples.iter().map(|s| s.grid().get(i, j)));
            *out = median_in_place(&mut buf);
        }
    });
    DifferenceSample::from_grid(axis, Grid::new(h, w, data)?, first.frame_dims())
}

/// Estimated offset gradient `(Δx(o), Δy(o))` on a common H×W frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    dx: DxMap,
    dy: DyMap,
    cycles_x: usize,
    cycles_y: usize,
}

impl GradientField {
    pub fn new(dx: DxMap, dy: DyMap, cycles_x: usize, cycles_y: usize) -> Result<Self> {
        if dx.frame_dims() != dy.frame_dims() {
            return Err(NucError::DimensionMismatch {
                expected: dx.frame_dims(),
                found: dy.frame_dims(),
            });
        }
        let (h, w) = dx.frame_dims();
        if h < 2 || w < 2 {
            return Err(NucError::InvalidDimensions {
                height: h,
                width: w,
                reason: "gradient field needs a frame of at least 2x2",
            });
        }
        if cycles_x == 0 || cycles_y == 0 {
            return Err(NucError::InvalidParameter(
                "cycle counts must be >= 1".into(),
            ));
        }
        Ok(GradientField {
            dx,
            dy,
            cycles_x,
            cycles_y,
        })
    }

    /// Exact forward-difference gradient of a frame.
    pub fn of_frame(f: &Frame) -> Self {
        GradientField {
            dx: forward_diff_x(f),
            dy: forward_diff_y(f),
            cycles_x: 1,
            cycles_y: 1,
        }
    }

    pub fn dx(&self) -> &DxMap {
        &self.dx
    }

    pub fn dy(&self) -> &DyMap {
        &self.dy
    }

    pub fn cycles_x(&self) -> usize {
        self.cycles_x
    }

    pub fn cycles_y(&self) -> usize {
        self.cycles_y
    }

    pub fn frame_dims(&self) -> (usize, usize) {
        self.dx.frame_dims()
    }

    /// `a·self + b·other`, used for linearity checks.
    pub fn combine(&self, a: f64, other: &GradientField, b: f64) -> Result<GradientField> {
        let dx = self.dx.zip_with(&other.dx, |x, y| a * x + b * y)?;
        let dy = self.dy.zip_with(&other.dy, |x, y| a * x + b * y)?;
        let (h, w) = self.frame_dims();
        GradientField::new(
            DxMap::new(dx, w)?,
            DyMap::new(dy, h)?,
            self.cycles_x,
            self.cycles_y,
        )
    }
}

pub fn estimate_gradient(
    x_samples: &[DifferenceSample],
    y_samples: &[DifferenceSample],
) -> Result<GradientField> {
    let dx = match aggregate_median(x_samples, Axis::Horizontal)? {
        DifferenceSample::Horizontal(m) => m,
        DifferenceSample::Vertical(_) => unreachable!("axis checked by aggregate_median"),
    };
    let dy = match aggregate_median(y_samples, Axis::Vertical)? {
        DifferenceSample::Vertical(m) => m,
        DifferenceSample::Horizontal(_) => unreachable!("axis checked by aggregate_median"),
    };
    GradientField::new(dx, dy, x_samples.len(), y_samples.len())
}

/// A persisted sample plus the bookkeeping needed to resume an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample: DifferenceSample,
    pub cycle: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    axis: Axis,
    cycle: usize,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    height: usize,
    width: usize,
    samples: Vec<ManifestEntry>,
}

pub const SAMPLE_MANIFEST: &str = "manifest.json";

/// Writes samples as `<axis>_<cycle>.pfm` files plus `manifest.json`.
///
/// PFM stores `f32`, so reloaded samples carry single-precision rounding.
pub fn save_samples(dir: &Path, records: &[SampleRecord]) -> Result<()> {
    let first = records.first().ok_or(NucError::EmptySamples)?;
    let (height, width) = first.sample.frame_dims();
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(records.len());
    for r in records {
        if r.sample.frame_dims() != (height, width) {
            return Err(NucError::DimensionMismatch {
                expected: (height, width),
                found: r.sample.frame_dims(),
            });
        }
        let file = format!("{}_{:04}.pfm", r.sample.axis().label(), r.cycle);
        io::write_pfm(dir.join(&file), r.sample.grid())?;
        entries.push(ManifestEntry {
            file,
            axis: r.sample.axis(),
            cycle: r.cycle,
            seed: r.seed,
        });
    }
    let manifest = Manifest {
        height,
        width,
        samples: entries,
    };
    fs::write(
        dir.join(SAMPLE_MANIFEST),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}

pub fn load_samples(dir: &Path) -> Result<Vec<SampleRecord>> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(SAMPLE_MANIFEST))?)?;
    manifest
        .samples
        .into_iter()
        .map(|e| {
            let grid = io::read_pfm(dir.join(&e.file))?;
            let sample =
                DifferenceSample::from_grid(e.axis, grid, (manifest.height, manifest.width))?;
            Ok(SampleRecord {
                sample,
                cycle: e.cycle,
                seed: e.seed,
            })
        })
        .collect()
}
