use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{NucError, Result};
use crate::grid::Frame;
use crate::rng;
use crate::sensor::OffsetMap;

/// Synthetic offset pattern: smooth shading plus column/checker structure plus
/// a per-pixel constant, rescaled to a target standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpnModel {
    pub structured_amplitude: f64,
    pub pixel_noise_amplitude: f64,
    /// Standard deviation of the final map, relative to the unit-std scene.
    pub strength: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for FpnModel {
    fn default() -> Self {
        FpnModel {
            structured_amplitude: 1.0,
            pixel_noise_amplitude: 0.5,
            strength: 0.1,
            seed: 0,
        }
    }
}

fn unit_std(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 { 1.0 / sd } else { 0.0 };
    v.iter_mut().for_each(|x| *x = (*x - mean) * scale);
}

/// Gain-compensated offset map with zero mean and `std = strength`.
pub fn gen_fpn(model: &FpnModel, height: usize, width: usize) -> Result<OffsetMap> {
    let finite = [
        model.structured_amplitude,
        model.pixel_noise_amplitude,
        model.strength,
    ];
    if !finite.iter().all(|v| v.is_finite()) || model.strength < 0.0 {
        return Err(NucError::InvalidParameter(
            "FPN amplitudes must be finite and strength >= 0".into(),
        ));
    }
    let n = height * width;
    if model.strength == 0.0 {
        return Ok(OffsetMap::compensated(Frame::zeros(height, width)?));
    }
    let mut rng = rng::stream(model.seed, &[0]);
    let (hf, wf) = (height as f64, width as f64);

    let mut low = vec![0.0; n];
    for _ in 0..4 {
        let fx = rng.random_range(-2.0..2.0);
        let fy = rng.random_range(-2.0..2.0);
        let amp = rng.random_range(0.5..1.0);
        let phase = rng.random_range(0.0..TAU);
        for i in 0..height {
            for j in 0..width {
                low[i * width + j] +=
                    amp * (TAU * (fx * j as f64 / wf + fy * i as f64 / hf) + phase).sin();
            }
        }
    }
    unit_std(&mut low);

    let columns: Vec<f64> = (0..width)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut high = vec![0.0; n];
    for i in 0..height {
        for j in 0..width {
            let checker = if (i + j) % 2 == 0 { 0.5 } else { -0.5 };
            high[i * width + j] = columns[j] + checker;
        }
    }
    unit_std(&mut high);

    let mut map: Vec<f64> = low
        .iter()
        .zip(&high)
        .map(|(l, h)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            model.structured_amplitude * (l + h) + model.pixel_noise_amplitude * z
        })
        .collect();
    unit_std(&mut map);
    map.iter_mut().for_each(|v| *v *= model.strength);
    Ok(OffsetMap::compensated(Frame::new(height, width, map)?))
}
