//! Two-parameter experiment grids with seeded replicates.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NucError, Result};
use crate::rng::{self, Stage};
use crate::sim::experiment::{run_experiment, ExperimentConfig};

/// Environment variable that caps sweep worker threads.
pub const THREADS_ENV: &str = "NUC_FORGE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    FpnStrength,
    TemporalSigma,
    CyclesPerAxis,
    ShiftMeanLongitudinal,
    ShiftSigmaLongitudinal,
    ShiftSigmaTransverse,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::FpnStrength,
        SweepParam::TemporalSigma,
        SweepParam::CyclesPerAxis,
        SweepParam::ShiftMeanLongitudinal,
        SweepParam::ShiftSigmaLongitudinal,
        SweepParam::ShiftSigmaTransverse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::FpnStrength => "fpn.strength",
            SweepParam::TemporalSigma => "temporal_sigma",
            SweepParam::CyclesPerAxis => "cycles_per_axis",
            SweepParam::ShiftMeanLongitudinal => "shift_error.mean_longitudinal",
            SweepParam::ShiftSigmaLongitudinal => "shift_error.sigma_longitudinal",
            SweepParam::ShiftSigmaTransverse => "shift_error.sigma_transverse",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| NucError::UnknownParameter(name.to_string()))
    }

    pub fn get(self, cfg: &ExperimentConfig) -> f64 {
        match self {
            SweepParam::FpnStrength => cfg.fpn.strength,
            SweepParam::TemporalSigma => cfg.temporal_sigma,
            SweepParam::CyclesPerAxis => cfg.cycles_per_axis as f64,
            SweepParam::ShiftMeanLongitudinal => cfg.shift_error.mean_longitudinal,
            SweepParam::ShiftSigmaLongitudinal => cfg.shift_error.sigma_longitudinal,
            SweepParam::ShiftSigmaTransverse => cfg.shift_error.sigma_transverse,
        }
    }

    pub fn apply(self, cfg: &mut ExperimentConfig, value: f64) -> Result<()> {
        match self {
            SweepParam::FpnStrength => cfg.fpn.strength = value,
            SweepParam::TemporalSigma => cfg.temporal_sigma = value,
            SweepParam::CyclesPerAxis => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(NucError::InvalidParameter(format!(
                        "cycles_per_axis must be a positive integer, got {value}"
                    )));
                }
                cfg.cycles_per_axis = value as usize;
            }
            SweepParam::ShiftMeanLongitudinal => cfg.shift_error.mean_longitudinal = value,
            SweepParam::ShiftSigmaLongitudinal => cfg.shift_error.sigma_longitudinal = value,
            SweepParam::ShiftSigmaTransverse => cfg.shift_error.sigma_transverse = value,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: ParamSpec,
    /// Second parameter; one line per value. Absent means a single line at
    /// the base configuration's strength.
    #[serde(default)]
    pub family: Option<ParamSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
}

fn default_seeds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub family_value: f64,
    pub median_error: f64,
    pub iqr_low: f64,
    pub iqr_high: f64,
    pub corrupted_error: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis_param: String,
    pub family_param: String,
    /// Family-major, then axis order.
    pub rows: Vec<SweepRow>,
}

/// Seed for one sweep cell. Cell `(0, 0, 0)` reuses the master seed so a
/// degenerate sweep reproduces a plain experiment.
pub fn cell_seed(master: u64, row: usize, column: usize, replicate: usize) -> u64 {
    if (row, column, replicate) == (0, 0, 0) {
        master
    } else {
        rng::derive_seed(
            master,
            &[
                Stage::SweepCell as u64,
                row as u64,
                column as u64,
                replicate as u64,
            ],
        )
    }
}

/// Linear-interpolated percentile of sorted data, `p` in `[0, 1]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

pub fn sweep(base: &ExperimentConfig, spec: &SweepSpec) -> Result<SweepTable> {
    sweep_with_threads(base, spec, threads_from_env())
}

/// Runs the grid on a dedicated pool. Results do not depend on `threads`.
pub fn sweep_with_threads(
    base: &ExperimentConfig,
    spec: &SweepSpec,
    threads: Option<usize>,
) -> Result<SweepTable> {
    let axis = SweepParam::parse(&spec.axis.param)?;
    let (family, family_values) = match &spec.family {
        Some(f) => (SweepParam::parse(&f.param)?, f.values.clone()),
        None => (SweepParam::FpnStrength, vec![base.fpn.strength]),
    };
    if spec.axis.values.is_empty() || family_values.is_empty() || spec.seeds == 0 {
        return Err(NucError::InvalidParameter(
            "sweep needs at least one value per parameter and one seed".into(),
        ));
    }

    let mut jobs = Vec::new();
    for (row, &fv) in family_values.iter().enumerate() {
        for (column, &av) in spec.axis.values.iter().enumerate() {
            for replicate in 0..spec.seeds {
                let mut cfg = base.clone();
                family.apply(&mut cfg, fv)?;
                axis.apply(&mut cfg, av)?;
                cfg.master_seed = cell_seed(base.master_seed, row, column, replicate);
                cfg.validate()?;
                jobs.push(cfg);
            }
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| NucError::InvalidParameter(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<(f64, f64)>> = pool.install(|| {
        jobs.par_iter()
            .map(|cfg| run_experiment(cfg).map(|r| (r.normalized_error, r.corrupted_error)))
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut chunks = outcomes.chunks(spec.seeds);
    for &fv in &family_values {
        for &av in &spec.axis.values {
            let chunk = chunks.next().expect("one chunk per grid point");
            let mut errs: Vec<f64> = chunk.iter().map(|c| c.0).collect();
            let mut corrupted: Vec<f64> = chunk.iter().map(|c| c.1).collect();
            errs.sort_by(f64::total_cmp);
            corrupted.sort_by(f64::total_cmp);
            rows.push(SweepRow {
                axis_value: av,
                family_value: fv,
                median_error: percentile(&errs, 0.5),
                iqr_low: percentile(&errs, 0.25),
                iqr_high: percentile(&errs, 0.75),
                corrupted_error: percentile(&corrupted, 0.5),
                replicates: chunk.len(),
            });
        }
    }
    Ok(SweepTable {
        axis_param: axis.name().to_string(),
        family_param: family.name().to_string(),
        rows,
    })
}

const TAIL_COLUMNS: [&str; 5] = [
    "median_error",
    "iqr_low",
    "iqr_high",
    "corrupted_error",
    "replicates",
];

impl SweepTable {
    /// CSV with the two parameter names as the first two headers.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec![self.axis_param.as_str(), self.family_param.as_str()];
        header.extend(TAIL_COLUMNS);
        wtr.write_record(&header)?;
        for r in &self.rows {
            wtr.write_record(&[
                r.axis_value.to_string(),
                r.family_value.to_string(),
                r.median_error.to_string(),
                r.iqr_low.to_string(),
                r.iqr_high.to_string(),
                r.corrupted_error.to_string(),
                r.replicates.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.len() != 7 || headers.iter().skip(2).ne(TAIL_COLUMNS) {
            return Err(NucError::format("sweep CSV", "unexpected header"));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| NucError::format("sweep CSV", format!("bad number `{s}`")))
        };
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(SweepRow {
                axis_value: num(&rec[0])?,
                family_value: num(&rec[1])?,
                median_error: num(&rec[2])?,
                iqr_low: num(&rec[3])?,
                iqr_high: num(&rec[4])?,
                corrupted_error: num(&rec[5])?,
                replicates: num(&rec[6])? as usize,
            });
        }
        Ok(SweepTable {
            axis_param: headers[0].to_string(),
            family_param: headers[1].to_string(),
            rows,
        })
    }
}
