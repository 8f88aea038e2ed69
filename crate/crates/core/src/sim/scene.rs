//! Synthetic scene video and sub-pixel resampling.
//!
//! The generator is periodic over the frame (a torus), so a whole-pixel
//! global drift permutes pixels exactly and leaves the per-frame statistics
//! unchanged. Frames are normalized to zero mean and unit standard deviation.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NucError, Result};
use crate::grid::Frame;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlobModel {
    pub count: usize,
    /// Peak amplitude range; each blob also gets a random sign.
    pub amplitude: [f64; 2],
    /// Gaussian width range in pixels.
    pub width: [f64; 2],
    /// Per-axis drift velocity range in pixels/frame.
    pub velocity: [f64; 2],
}

impl Default for BlobModel {
    fn default() -> Self {
        BlobModel {
            count: 24,
            amplitude: [0.5, 2.0],
            width: [1.5, 4.0],
            velocity: [-0.02, 0.02],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneModel {
    pub height: usize,
    pub width: usize,
    /// Amplitude of the smooth low-frequency background.
    pub background: f64,
    pub background_modes: usize,
    pub blobs: BlobModel,
    /// Whole-scene drift `(vx, vy)` in pixels/frame.
    pub global_drift: [f64; 2],
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SceneModel {
    fn default() -> Self {
        SceneModel {
            height: 240,
            width: 320,
            background: 0.1,
            background_modes: 6,
            blobs: BlobModel::default(),
            global_drift: [0.031, 0.019],
            seed: 0,
        }
    }
}

impl SceneModel {
    /// No blobs and no drift: every frame is the same.
    pub fn static_scene(height: usize, width: usize) -> Self {
        SceneModel {
            height,
            width,
            blobs: BlobModel {
                count: 0,
                ..BlobModel::default()
            },
            global_drift: [0.0, 0.0],
            ..SceneModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height < 16 || self.width < 16 {
            return Err(NucError::InvalidDimensions {
                height: self.height,
                width: self.width,
                reason: "synthetic scenes need at least 16 pixels per axis",
            });
        }
        let b = &self.blobs;
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !ordered(b.amplitude) || !ordered(b.width) || !ordered(b.velocity) {
            return Err(NucError::InvalidParameter(
                "blob ranges must be finite [low, high]".into(),
            ));
        }
        if b.width[0] < 1.0 {
            return Err(NucError::InvalidParameter(
                "blob width must be >= 1 pixel".into(),
            ));
        }
        if !self.background.is_finite() || !self.global_drift.iter().all(|v| v.is_finite()) {
            return Err(NucError::InvalidParameter(
                "scene parameters must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Anything that can hand out scene frames by index.
pub trait SceneSource: Sync {
    fn dims(&self) -> (usize, usize);
    fn frame(&self, t: u64) -> Frame;
}

struct Mode {
    kx: f64,
    ky: f64,
    amplitude: f64,
    phase: f64,
}

struct Blob {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    amplitude: f64,
    kappa_x: f64,
    kappa_y: f64,
}

/// Frame generator for a [`SceneModel`] with its random layout drawn once.
pub struct SyntheticScene {
    height: usize,
    width: usize,
    background: f64,
    drift: [f64; 2],
    modes: Vec<Mode>,
    blobs: Vec<Blob>,
}

impl SyntheticScene {
    pub fn new(model: &SceneModel) -> Result<Self> {
        model.validate()?;
        let (h, w) = (model.height as f64, model.width as f64);
        let mut rng = rng::stream(model.seed, &[0]);

        let mut modes = Vec::with_capacity(model.background_modes);
        while modes.len() < model.background_modes {
            let kx = rng.random_range(-3i32..=3);
            let ky = rng.random_range(-3i32..=3);
            if kx == 0 && ky == 0 {
                continue;
            }
            let norm = ((kx * kx + ky * ky) as f64).sqrt();
            modes.push(Mode {
                kx: kx as f64,
                ky: ky as f64,
                amplitude: rng.random_range(0.5..1.0) / norm,
                phase: rng.random_range(0.0..TAU),
            });
        }

        let b = &model.blobs;
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, r: [f64; 2]| {
            if r[0] == r[1] {
                r[0]
            } else {
                rng.random_range(r[0]..r[1])
            }
        };
        let blobs = (0..b.count)
            .map(|_| {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let sigma = draw(&mut rng, b.width);
                Blob {
                    x: rng.random_range(0.0..w),
                    y: rng.random_range(0.0..h),
                    vx: draw(&mut rng, b.velocity),
                    vy: draw(&mut rng, b.velocity),
                    amplitude: sign * draw(&mut rng, b.amplitude),
                    kappa_x: (w / (TAU * sigma)).powi(2),
                    kappa_y: (h / (TAU * sigma)).powi(2),
                }
            })
            .collect();

        Ok(SyntheticScene {
            height: model.height,
            width: model.width,
            background: model.background,
            drift: model.global_drift,
            modes,
            blobs,
        })
    }

    /// Unnormalized scene value grid at frame `t`.
    fn raw(&self, t: u64) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        let (hf, wf) = (h as f64, w as f64);
        let t = t as f64;
        let (gx, gy) = (self.drift[0] * t, self.drift[1] * t);
        let mut out = vec![0.0; h * w];

        // cos(a_j + b_i) = cos a cos b − sin a sin b keeps every mode separable
        let mut col_c = vec![0.0; w];
        let mut col_s = vec![0.0; w];
        for m in &self.modes {
            for (j, (c, s)) in col_c.iter_mut().zip(col_s.iter_mut()).enumerate() {
                let a = TAU * m.kx * (j as f64 - gx) / wf;
                *c = a.cos();
                *s = a.sin();
            }
            let amp = self.background * m.amplitude;
            for i in 0..h {
                let b = TAU * m.ky * (i as f64 - gy) / hf + m.phase;
                let (rc, rs) = (amp * b.cos(), amp * b.sin());
                let row = &mut out[i * w..(i + 1) * w];
                for j in 0..w {
                    row[j] += col_c[j] * rc - col_s[j] * rs;
                }
            }
        }

        // periodic von Mises bumps, Gaussian of the given width near the centre
        let mut col = vec![0.0; w];
        for blob in &self.blobs {
            let cx = blob.x + (blob.vx + self.drift[0]) * t;
            let cy = blob.y + (blob.vy + self.drift[1]) * t;
            for (j, c) in col.iter_mut().enumerate() {
                *c = (blob.kappa_x * ((TAU * (j as f64 - cx) / wf).cos() - 1.0)).exp();
            }
            for i in 0..h {
                let r = blob.amplitude
                    * (blob.kappa_y * ((TAU * (i as f64 - cy) / hf).cos() - 1.0)).exp();
                let row = &mut out[i * w..(i + 1) * w];
                for j in 0..w {
                    row[j] += r * col[j];
                }
            }
        }
        out
    }
}

impl SceneSource for SyntheticScene {
    fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn frame(&self, t: u64) -> Frame {
        let frame =
            Frame::new(self.height, self.width, self.raw(t)).expect("scene values are finite");
        normalize(&frame)
    }
}

/// Zero mean, unit standard deviation. Flat frames normalize to zero.
pub fn normalize(frame: &Frame) -> Frame {
    let (mean, std) = frame.stats();
    let scale = if std > 0.0 { 1.0 / std } else { 0.0 };
    frame
        .map(|v| (v - mean) * scale)
        .expect("normalization keeps values finite")
}

pub fn gen_scene_frame(model: &SceneModel, t: u64) -> Result<Frame> {
    Ok(SyntheticScene::new(model)?.frame(t))
}

/// A user-supplied frame sequence, looped and normalized per frame.
pub struct FrameSequence {
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or(NucError::Degenerate("empty frame sequence"))?;
        for f in &frames {
            first.ensure_same_dims(f)?;
        }
        Ok(FrameSequence {
            frames: frames.iter().map(normalize).collect(),
        })
    }
}

impl SceneSource for FrameSequence {
    fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    fn frame(&self, t: u64) -> Frame {
        self.frames[(t % self.frames.len() as u64) as usize].clone()
    }
}

/// A resampled frame plus which cells had their source inside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedFrame {
    pub frame: Frame,
    pub valid: Vec<bool>,
}

pub const MAX_SHIFT: f64 = 4.0;

/// Bilinear resample: `out(i,j) = f(i + dy, j + dx)`, clamped at the border.
pub fn resample_bilinear(f: &Frame, dx: f64, dy: f64) -> Result<ShiftedFrame> {
    if !(dx.abs() <= MAX_SHIFT && dy.abs() <= MAX_SHIFT) {
        return Err(NucError::ShiftOutOfBounds { dx, dy });
    }
    let (h, w) = f.dims();
    let (hmax, wmax) = ((h - 1) as f64, (w - 1) as f64);
    // per-column and per-row interpolation weights are shared by all lines
    let cols: Vec<(usize, f64, bool)> = (0..w)
        .map(|j| {
            let x = j as f64 + dx;
            let inside = (0.0..=wmax).contains(&x);
            let x = x.clamp(0.0, wmax);
            let j0 = (x.floor() as usize).min(w - 2);
            (j0, x - j0 as f64, inside)
        })
        .collect();
    let mut valid = Vec::with_capacity(h * w);
    let mut data = Vec::with_capacity(h * w);
    for i in 0..h {
        let y = i as f64 + dy;
        let row_inside = (0.0..=hmax).contains(&y);
        let y = y.clamp(0.0, hmax);
        let i0 = (y.floor() as usize).min(h - 2);
        let fy = y - i0 as f64;
        let (r0, r1) = (f.row(i0), f.row(i0 + 1));
        for &(j0, fx, col_inside) in &cols {
            let top = (1.0 - fx) * r0[j0] + fx * r0[j0 + 1];
            let bottom = (1.0 - fx) * r1[j0] + fx * r1[j0 + 1];
            data.push((1.0 - fy) * top + fy * bottom);
            valid.push(row_inside && col_inside);
        }
    }
    Ok(ShiftedFrame {
        frame: Frame::new(h, w, data)?,
        valid,
    })
}

/// Scene frame `t` as seen by an array displaced by `shift = (dx, dy)` pixels.
pub fn sample_shifted(source: &dyn SceneSource, t: u64, shift: (f64, f64)) -> Result<ShiftedFrame> {
    if !(shift.0.abs() <= MAX_SHIFT && shift.1.abs() <= MAX_SHIFT) {
        return Err(NucError::ShiftOutOfBounds {
            dx: shift.0,
            dy: shift.1,
        });
    }
    resample_bilinear(&source.frame(t), shift.0, shift.1)
}
