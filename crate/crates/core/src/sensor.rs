//! Forward imaging model and gain compensation.
//!
//! A pixel reads `scene·gain + offset + noise`. Dividing by the (known) gain
//! leaves the purely additive model `scene + offset/gain` that the derivative
//! estimator works on.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{NucError, Result};
use crate::grid::{Frame, Grid};
use crate::rng;

/// Per-pixel detector gain; every value strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMap(Frame);

impl GainMap {
    pub fn new(frame: Frame) -> Result<Self> {
        let w = frame.width();
        if let Some(k) = frame.as_slice().iter().position(|&g| g <= 0.0) {
            return Err(NucError::NonPositiveGain {
                row: k / w,
                col: k % w,
                value: frame.as_slice()[k],
            });
        }
        Ok(GainMap(frame))
    }

    pub fn uniform(height: usize, width: usize, value: f64) -> Result<Self> {
        GainMap::new(Frame::filled(height, width, value)?)
    }

    pub fn frame(&self) -> &Frame {
        &self.0
    }
}

/// Whether an offset map is in raw readout units or already divided by gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetKind {
    Raw,
    GainCompensated,
}

impl OffsetKind {
    fn name(self) -> &'static str {
        match self {
            OffsetKind::Raw => "raw",
            OffsetKind::GainCompensated => "gain-compensated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetMap {
    values: Frame,
    kind: OffsetKind,
}

impl OffsetMap {
    pub fn new(values: Frame, kind: OffsetKind) -> Self {
        OffsetMap { values, kind }
    }

    pub fn raw(values: Frame) -> Self {
        OffsetMap::new(values, OffsetKind::Raw)
    }

    pub fn compensated(values: Frame) -> Self {
        OffsetMap::new(values, OffsetKind::GainCompensated)
    }

    pub fn kind(&self) -> OffsetKind {
        self.kind
    }

    pub fn frame(&self) -> &Frame {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    pub fn into_frame(self) -> Frame {
        self.values
    }

    /// Raw offset `õ = o·g` for a gain-compensated map `o`.
    pub fn to_raw(&self, gain: &GainMap) -> Result<OffsetMap> {
        self.expect_kind(OffsetKind::GainCompensated)?;
        Ok(OffsetMap::raw(
            self.values.zip_with(gain.frame(), |o, g| o * g)?,
        ))
    }

    fn expect_kind(&self, kind: OffsetKind) -> Result<()> {
        if self.kind != kind {
            return Err(NucError::OffsetKind {
                expected: kind.name(),
                found: self.kind.name(),
            });
        }
        Ok(())
    }
}

/// Zero-mean i.i.d. Gaussian read noise, addressed by `(seed, draw_index)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalNoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

impl TemporalNoiseModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(NucError::InvalidParameter(format!(
                "temporal noise sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(TemporalNoiseModel { sigma, seed })
    }

    pub fn silent() -> Self {
        TemporalNoiseModel {
            sigma: 0.0,
            seed: 0,
        }
    }

    /// Noise field for one frame. The same `draw_index` always yields the same field.
    pub fn draw(&self, height: usize, width: usize, draw_index: u64) -> Vec<f64> {
        if self.sigma == 0.0 {
            return vec![0.0; height * width];
        }
        let mut rng = rng::stream(self.seed, &[draw_index]);
        (0..height * width)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.sigma * z
            })
            .collect()
    }
}

/// Raw readout `scene·gain + offset_raw + η`.
pub fn capture(
    scene: &Frame,
    gain: &GainMap,
    offset_raw: &OffsetMap,
    noise: &TemporalNoiseModel,
    draw_index: u64,
) -> Result<Frame> {
    offset_raw.expect_kind(OffsetKind::Raw)?;
    scene.ensure_same_dims(gain.frame())?;
    scene.ensure_same_dims(offset_raw.grid())?;
    let (h, w) = scene.dims();
    let eta = noise.draw(h, w, draw_index);
    let data = scene
        .as_slice()
        .iter()
        .zip(gain.frame().as_slice())
        .zip(offset_raw.grid().as_slice())
        .zip(&eta)
        .map(|(((&s, &g), &o), &n)| s * g + o + n)
        .collect();
    Frame::new(h, w, data)
}

/// Divides a raw readout by the calibrated gain.
pub fn gain_compensate(raw: &Frame, gain: &GainMap) -> Result<Frame> {
    raw.zip_with(gain.frame(), |r, g| r / g)
}

/// Subtracts a gain-compensated offset estimate from a gain-compensated frame.
pub fn compensate_offset(frame: &Frame, offset_estimate: &OffsetMap) -> Result<Frame> {
    offset_estimate.expect_kind(OffsetKind::GainCompensated)?;
    frame.zip_with(offset_estimate.frame(), |f, o| f - o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seeded(h: usize, w: usize, seed: u64, lo: f64, hi: f64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Frame::from_fn(h, w, |_, _| rng.random_range(lo..hi)).unwrap()
    }

    #[test]
    fn identity_sensor() {
        let scene = seeded(5, 6, 1, -1.0, 1.0);
        let out = capture(
            &scene,
            &GainMap::uniform(5, 6, 1.0).unwrap(),
            &OffsetMap::raw(Frame::zeros(5, 6).unwrap()),
            &TemporalNoiseModel::silent(),
            0,
        )
        .unwrap();
        assert_eq!(out, scene);
    }

    #[test]
    fn dark_capture_is_offset() {
        let off = seeded(4, 4, 2, -1.0, 1.0);
        let gain = GainMap::new(seeded(4, 4, 3, 0.5, 1.5)).unwrap();
        let out = capture(
            &Frame::zeros(4, 4).unwrap(),
            &gain,
            &OffsetMap::raw(off.clone()),
            &TemporalNoiseModel::silent(),
            0,
        )
        .unwrap();
        assert_eq!(out, off);
    }

    #[test]
    fn affine_capture_matches_loop() {
        let scene = seeded(4, 4, 4, -2.0, 2.0);
        let out = capture(
            &scene,
            &GainMap::uniform(4, 4, 2.0).unwrap(),
            &OffsetMap::raw(Frame::filled(4, 4, 0.5).unwrap()),
            &TemporalNoiseModel::silent(),
            9,
        )
        .unwrap();
        for k in 0..16 {
            assert_eq!(out.as_slice()[k], 2.0 * scene.as_slice()[k] + 0.5);
        }
    }

    #[test]
    fn capture_rejects_compensated_offset_and_bad_dims() {
        let scene = Frame::zeros(3, 3).unwrap();
        let gain = GainMap::uniform(3, 3, 1.0).unwrap();
        let noise = TemporalNoiseModel::silent();
        let comp = OffsetMap::compensated(Frame::zeros(3, 3).unwrap());
        assert!(matches!(
            capture(&scene, &gain, &comp, &noise, 0),
            Err(NucError::OffsetKind { .. })
        ));
        let small = OffsetMap::raw(Frame::zeros(3, 2).unwrap());
        assert!(matches!(
            capture(&scene, &gain, &small, &noise, 0),
            Err(NucError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gain_map_rejects_non_positive() {
        let mut data = vec![1.0; 4];
        data[3] = 0.0;
        assert!(matches!(
            GainMap::new(Frame::new(2, 2, data).unwrap()),
            Err(NucError::NonPositiveGain { row: 1, col: 1, .. })
        ));
        assert!(GainMap::uniform(2, 2, -1.0).is_err());
    }

    #[test]
    fn gain_compensation_cases() {
        let raw = seeded(3, 3, 5, -1.0, 1.0);
        assert_eq!(
            gain_compensate(&raw, &GainMap::uniform(3, 3, 1.0).unwrap()).unwrap(),
            raw
        );
        let six = Frame::filled(3, 3, 6.0).unwrap();
        let out = gain_compensate(&six, &GainMap::uniform(3, 3, 2.0).unwrap()).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn compensated_capture_round_trip() {
        let phi = seeded(8, 8, 6, -1.0, 1.0);
        let gain = GainMap::new(seeded(8, 8, 7, 0.5, 2.0)).unwrap();
        let off_raw = seeded(8, 8, 8, -0.3, 0.3);
        let raw = capture(
            &phi,
            &gain,
            &OffsetMap::raw(off_raw.clone()),
            &TemporalNoiseModel::silent(),
            0,
        )
        .unwrap();
        let comp = gain_compensate(&raw, &gain).unwrap();
        for k in 0..64 {
            let o = off_raw.as_slice()[k] / gain.frame().as_slice()[k];
            assert!((comp.as_slice()[k] - phi.as_slice()[k] - o).abs() < 1e-12);
        }
    }

    #[test]
    fn offset_compensation_cases() {
        let phi = seeded(4, 5, 9, -1.0, 1.0);
        let o = seeded(4, 5, 10, -0.5, 0.5);
        let zero = OffsetMap::compensated(Frame::zeros(4, 5).unwrap());
        assert_eq!(compensate_offset(&phi, &zero).unwrap(), phi);

        let frame = phi.zip_with(&o, |a, b| a + b).unwrap();
        let out = compensate_offset(&frame, &OffsetMap::compensated(o.clone())).unwrap();
        assert!(out.max_abs_diff(&phi).unwrap() < 1e-15);

        let shifted = OffsetMap::compensated(o.map(|v| v + 0.75).unwrap());
        let out = compensate_offset(&frame, &shifted).unwrap();
        for k in 0..20 {
            assert!((out.as_slice()[k] - (phi.as_slice()[k] - 0.75)).abs() < 1e-12);
        }

        assert!(compensate_offset(&phi, &OffsetMap::raw(o)).is_err());
        let wrong = OffsetMap::compensated(Frame::zeros(5, 4).unwrap());
        assert!(matches!(
            compensate_offset(&phi, &wrong),
            Err(NucError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn noise_is_reproducible_and_calibrated() {
        let noise = TemporalNoiseModel::new(0.25, 42).unwrap();
        let a = noise.draw(64, 64, 3);
        assert_eq!(a, noise.draw(64, 64, 3));
        let b = noise.draw(64, 64, 4);

        let n = a.len() as f64;
        let mean_a = a.iter().sum::<f64>() / n;
        let mean_b = b.iter().sum::<f64>() / n;
        let sd_a = (a.iter().map(|v| (v - mean_a).powi(2)).sum::<f64>() / n).sqrt();
        let sd_b = (b.iter().map(|v| (v - mean_b).powi(2)).sum::<f64>() / n).sqrt();
        let cov = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - mean_a) * (y - mean_b))
            .sum::<f64>()
            / n;
        assert!((cov / (sd_a * sd_b)).abs() < 0.05);
        assert!((sd_a / 0.25 - 1.0).abs() < 0.05);
    }

    #[test]
    fn capture_noise_std_through_sensor() {
        let sigma = 0.01;
        let out = capture(
            &Frame::zeros(64, 64).unwrap(),
            &GainMap::uniform(64, 64, 1.0).unwrap(),
            &OffsetMap::raw(Frame::zeros(64, 64).unwrap()),
            &TemporalNoiseModel::new(sigma, 5).unwrap(),
            0,
        )
        .unwrap();
        let (_, sd) = out.stats();
        assert!((sd / sigma - 1.0).abs() < 0.05);
        assert!(TemporalNoiseModel::new(-1.0, 0).is_err());
    }
}
