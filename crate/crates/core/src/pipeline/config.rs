//! The JSON run-config file and `key=value` overrides.
//!
//! Precedence, lowest to highest: built-in defaults, config file, `--set`
//! overrides, dedicated flags (applied by the caller).

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::augments::{AugmentConfig, Direction, Strategy};
use crate::error::{Error, Result};
use crate::maskgen::MaskConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub mask: MaskConfig,
    pub direction: Direction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fill_value: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixup_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    pub apply_probability: f64,
    pub copies_per_sample: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::CopyBlend,
            mask: MaskConfig::default(),
            direction: Direction::Random,
            fill_value: None,
            mixup_alpha: None,
            noise_sigma: None,
            apply_probability: 1.0,
            copies_per_sample: 1,
            seed: None,
        }
    }
}

fn describe(err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = err.path().to_string();
    let inner = err.into_inner();
    if path == "." || path.is_empty() {
        Error::config(inner.to_string())
    } else {
        Error::config(format!("field `{path}`: {inner}"))
    }
}

impl RunConfig {
    /// Parses config text; errors name the offending field and position.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(&mut *de).map_err(describe)?;
        de.end().map_err(|e| Error::config(e.to_string()))?;
        Ok(cfg)
    }

    /// Config text (or `{}` when absent) with `key=value` overrides applied.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Self::from_json_str(text.unwrap_or("{}"));
        }
        // Parse once strictly first, so positions in diagnostics refer to the file.
        if let Some(t) = text {
            Self::from_json_str(t)?;
        }
        let mut value: Value = serde_json::from_str(text.unwrap_or("{}"))
            .map_err(|e| Error::config(e.to_string()))?;
        apply_overrides(&mut value, overrides)?;
        let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(format!("override of `{path}`: {}", e.into_inner()))
        })?;
        Ok(cfg)
    }

    /// The augmentation part, with strategy defaults filled and validated.
    pub fn augment_config(&self) -> Result<AugmentConfig> {
        let mut cfg = AugmentConfig {
            strategy: self.strategy,
            mask: self.mask,
            direction: self.direction,
            fill_value: self.fill_value,
            mixup_alpha: self.mixup_alpha,
            noise_sigma: self.noise_sigma,
            apply_probability: self.apply_probability,
        };
        cfg.fill_missing_defaults();
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Applies dotted `key=value` assignments to a JSON object. Values parse as
/// JSON when possible and fall back to plain strings, so `strategy=cut_out`
/// and `mask.mp_max=0.3` both work.
pub fn apply_overrides(root: &mut Value, overrides: &[String]) -> Result<()> {
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override {ov:?} is not key=value")))?;
        let parts: Vec<&str> = key.trim().split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::config(format!("override {ov:?} has an empty key segment")));
        }
        let value = serde_json::from_str(raw.trim())
            .unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        let mut cur = &mut *root;
        for part in &parts[..parts.len() - 1] {
            if !cur.is_object() {
                return Err(Error::config(format!(
                    "override {ov:?}: `{part}` is inside a non-object value"
                )));
            }
            cur = cur
                .as_object_mut()
                .expect("checked")
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
        }
        match cur.as_object_mut() {
            Some(obj) => {
                obj.insert(parts[parts.len() - 1].to_string(), value);
            }
            None => {
                return Err(Error::config(format!(
                    "override {ov:?} targets a non-object value"
                )))
            }
        }
    }
    Ok(())
}

/// Comma-separated mp_max values; must be strictly increasing within (0, 1].
pub fn parse_scales(list: &str) -> Result<Vec<f64>> {
    let scales = list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::config(format!("bad scale {s:?}: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    check_scales(&scales)?;
    Ok(scales)
}

pub(crate) fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::config("scale list is empty"));
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
        return Err(Error::config(format!("scale {s} outside (0, 1]")));
    }
    if let Some(w) = scales.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::config(format!(
            "scales must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Comma-separated strategy names, without duplicates.
pub fn parse_strategies(list: &str) -> Result<Vec<Strategy>> {
    let mut out: Vec<Strategy> = Vec::new();
    for s in list.split(',') {
        let st: Strategy = s.trim().parse()?;
        if out.contains(&st) {
            return Err(Error::config(format!("strategy {st} listed twice")));
        }
        out.push(st);
    }
    Ok(out)
}
