//! JSON configuration documents for the command-line front end.
//!
//! Experiment fields live at the top level. Subcommand-specific settings go in
//! optional `sweep`, `correct`, `gen_scene` and `plot` sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{NucError, Result};
use crate::sim::{ExperimentConfig, SweepSpec};

/// Inputs for `correct`: a frame directory plus either a known offset map or a
/// directory of raw dither pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectSpec {
    pub frames_dir: PathBuf,
    #[serde(default)]
    pub offset: Option<PathBuf>,
    /// Directory with `pairs.json` listing base/shifted frame files.
    #[serde(default)]
    pub dither_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSceneSpec {
    pub frames: usize,
    pub start: u64,
    pub step: u64,
}

impl Default for GenSceneSpec {
    fn default() -> Self {
        GenSceneSpec {
            frames: 16,
            start: 0,
            step: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotSpec {
    /// Sweep table to plot; `plot` falls back to `sweep.csv` in the output directory.
    pub csv: Option<PathBuf>,
    pub title: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub experiment: ExperimentConfig,
    pub sweep: Option<SweepSpec>,
    pub correct: Option<CorrectSpec>,
    pub gen_scene: GenSceneSpec,
    pub plot: PlotSpec,
}

fn section<T: for<'de> Deserialize<'de>>(
    obj: &mut Map<String, Value>,
    key: &str,
) -> Result<Option<T>> {
    match obj.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v)
            .map(Some)
            .map_err(|e| NucError::InvalidParameter(format!("{key}: {e}"))),
    }
}

impl Document {
    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(mut obj) = value else {
            return Err(NucError::InvalidParameter(
                "config must be a JSON object".into(),
            ));
        };
        let sweep = section(&mut obj, "sweep")?;
        let correct = section(&mut obj, "correct")?;
        let gen_scene = section(&mut obj, "gen_scene")?.unwrap_or_default();
        let plot = section(&mut obj, "plot")?.unwrap_or_default();
        let experiment = serde_json::from_value(Value::Object(obj))
            .map_err(|e| NucError::InvalidParameter(e.to_string()))?;
        Ok(Document {
            experiment,
            sweep,
            correct,
            gen_scene,
            plot,
        })
    }

    /// Fully populated form, with every default written out.
    pub fn to_value(&self) -> Result<Value> {
        let Value::Object(mut obj) = serde_json::to_value(&self.experiment)? else {
            unreachable!("experiment config serializes to an object");
        };
        if let Some(s) = &self.sweep {
            obj.insert("sweep".into(), serde_json::to_value(s)?);
        }
        if let Some(c) = &self.correct {
            obj.insert("correct".into(), serde_json::to_value(c)?);
        }
        obj.insert("gen_scene".into(), serde_json::to_value(&self.gen_scene)?);
        obj.insert("plot".into(), serde_json::to_value(&self.plot)?);
        Ok(Value::Object(obj))
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_value()?)? + "\n")
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies `key=value` overrides with dotted keys, e.g. `fpn.strength=0.2`.
    ///
    /// Keys must name an existing field of the populated document. Values are
    /// parsed as JSON, falling back to a plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut root = self.to_value()?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item.split_once('=').ok_or_else(|| {
                NucError::InvalidParameter(format!("override `{item}` is not key=value"))
            })?;
            let value =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut root, key, value)?;
        }
        Self::from_value(root)
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        if let Some(c) = &self.correct {
            if c.offset.is_some() == c.dither_dir.is_some() {
                return Err(NucError::InvalidParameter(
                    "correct needs exactly one of `offset` or `dither_dir`".into(),
                ));
            }
        }
        Ok(())
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let unknown = || NucError::UnknownParameter(key.to_string());
    let mut parts = key.split('.').peekable();
    let mut node = root;
    while let Some(part) = parts.next() {
        let obj = node.as_object_mut().ok_or_else(unknown)?;
        let slot = obj.get_mut(part).ok_or_else(unknown)?;
        if parts.peek().is_none() {
            *slot = value;
            return Ok(());
        }
        node = slot;
    }
    Err(unknown())
}
