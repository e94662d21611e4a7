//! JSON scenario and instance files.
//!
//! A scenario file drives a Monte Carlo sweep:
//!
//! ```json
//! {"seed": 7, "instances": 5000, "m_values": [1, 2, 3],
//!  "supply": {"total": 1, "split": {"mode": "fixed", "n1_fraction": 0.5}},
//!  "value_dist": {"lo": 18, "hi": 20}, "budget_dist": {"lo": 2, "hi": 6},
//!  "rho_dist": {"lo": 0.5, "hi": 0.9}}
//! ```
//!
//! An instance file lists advertisers explicitly:
//!
//! ```json
//! {"supply": {"total": 1}, "advertisers": [{"v": 1, "B": 2, "rho": 1}]}
//! ```
//!
//! Only `supply` is required in a scenario; the rest default to the
//! baseline scenario. Unknown keys are rejected, and every error names the
//! offending key path.

use std::path::Path;

use serde_json::{Map, Value};

use crate::exante::Uniform;
use crate::model::{Advertiser, AdvertiserPool, Supply};
use crate::simulation::{ScenarioConfig, SupplySplit};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required key: {0}")]
    Missing(String),
    #[error("unknown key: {0}")]
    Unknown(String),
    #[error("{path}: expected {expected}")]
    Type {
        path: String,
        expected: &'static str,
    },
    #[error("{path}: {reason}")]
    Range { path: String, reason: String },
}

/// An explicit market: supply, its split, and the advertisers.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceConfig {
    pub supply_total: f64,
    pub supply_split: SupplySplit,
    pub pool: AdvertiserPool,
}

impl InstanceConfig {
    pub fn supply(&self) -> Supply {
        Supply::new(self.supply_total).expect("validated supply")
    }

    /// Scenario carrying this instance's supply settings, for reuse of the
    /// simulation bookkeeping on a single pool.
    pub fn as_scenario(&self, rho_dist: Option<Uniform>) -> ScenarioConfig {
        let base = ScenarioConfig::baseline(0);
        ScenarioConfig {
            instances: 1,
            m_values: vec![self.pool.len()],
            supply_total: self.supply_total,
            supply_split: self.supply_split,
            rho_dist: rho_dist.unwrap_or(base.rho_dist),
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigDocument {
    Scenario(ScenarioConfig),
    Instance(InstanceConfig),
}

/// Reads a scenario or instance file; files with an `advertisers` key are
/// instances.
pub fn parse_config(path: &Path) -> Result<ConfigDocument, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_document(&text)
}

pub fn parse_document(text: &str) -> Result<ConfigDocument, ConfigError> {
    let value = to_value(text)?;
    let is_instance = value
        .as_object()
        .is_some_and(|o| o.contains_key("advertisers"));
    if is_instance {
        instance_from_value(value).map(ConfigDocument::Instance)
    } else {
        scenario_from_value(value).map(ConfigDocument::Scenario)
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    scenario_from_value(to_value(text)?)
}

pub fn parse_instance(text: &str) -> Result<InstanceConfig, ConfigError> {
    instance_from_value(to_value(text)?)
}

fn to_value(text: &str) -> Result<Value, ConfigError> {
    if text.trim().is_empty() {
        return Ok(Value::Object(Map::new()));
    }
    Ok(serde_json::from_str(text)?)
}

/// A JSON object being consumed key by key.
struct Fields {
    path: String,
    map: Map<String, Value>,
}

impl Fields {
    fn new(value: Value, path: &str) -> Result<Self, ConfigError> {
        match value {
            Value::Object(map) => Ok(Self {
                path: path.to_string(),
                map,
            }),
            _ => Err(ConfigError::Type {
                path: display(path),
                expected: "an object",
            }),
        }
    }

    fn child(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn required(&mut self, key: &str) -> Result<(String, Value), ConfigError> {
        let path = self.child(key);
        match self.map.remove(key) {
            Some(v) => Ok((path, v)),
            None => Err(ConfigError::Missing(path)),
        }
    }

    fn optional(&mut self, key: &str) -> Option<(String, Value)> {
        let path = self.child(key);
        self.map.remove(key).map(|v| (path, v))
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.map.keys().next() {
            Some(key) => Err(ConfigError::Unknown(self.child(key))),
            None => Ok(()),
        }
    }
}

fn display(path: &str) -> String {
    if path.is_empty() {
        "<root>".to_string()
    } else {
        path.to_string()
    }
}

fn number(path: &str, v: &Value) -> Result<f64, ConfigError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::Type {
            path: path.to_string(),
            expected: "a number",
        })
}

fn count(path: &str, v: &Value) -> Result<u64, ConfigError> {
    v.as_u64().ok_or_else(|| ConfigError::Type {
        path: path.to_string(),
        expected: "a non-negative integer",
    })
}

fn range_error(path: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn parse_range(path: &str, v: Value, min: f64, max: f64) -> Result<Uniform, ConfigError> {
    let mut f = Fields::new(v, path)?;
    let (lo_path, lo) = f.required("lo")?;
    let (hi_path, hi) = f.required("hi")?;
    f.finish()?;
    let lo = number(&lo_path, &lo)?;
    let hi = number(&hi_path, &hi)?;
    if lo < min {
        return Err(range_error(&lo_path, format!("must be at least {min}")));
    }
    if hi > max {
        return Err(range_error(&hi_path, format!("must be at most {max}")));
    }
    Uniform::new(lo, hi).map_err(|_| range_error(path, "lo must not exceed hi"))
}

fn parse_split(path: &str, v: Value) -> Result<SupplySplit, ConfigError> {
    let mut f = Fields::new(v, path)?;
    let (mode_path, mode) = f.required("mode")?;
    let split = match mode.as_str() {
        Some("fixed") => {
            let (p, n1) = f.required("n1_fraction")?;
            let n1 = number(&p, &n1)?;
            if !(0.0..=1.0).contains(&n1) {
                return Err(range_error(&p, "must lie in [0, 1]"));
            }
            SupplySplit::Fixed { n1_fraction: n1 }
        }
        Some("hotelling") => {
            let (zp, zeta) = f.required("zeta")?;
            let (qp, q) = f.required("q")?;
            let zeta = number(&zp, &zeta)?;
            let q = number(&qp, &q)?;
            if !(0.0..=1.0).contains(&zeta) {
                return Err(range_error(&zp, "must lie in [0, 1]"));
            }
            if q <= 0.0 {
                return Err(range_error(&qp, "must be positive"));
            }
            SupplySplit::Hotelling { zeta, q }
        }
        _ => {
            return Err(ConfigError::Type {
                path: mode_path,
                expected: "\"fixed\" or \"hotelling\"",
            })
        }
    };
    f.finish()?;
    Ok(split)
}

fn parse_supply(root: &mut Fields) -> Result<(f64, SupplySplit), ConfigError> {
    let (path, v) = root.required("supply")?;
    let mut f = Fields::new(v, &path)?;
    let (total_path, total) = f.required("total")?;
    let total = number(&total_path, &total)?;
    if total <= 0.0 {
        return Err(range_error(&total_path, "must be positive"));
    }
    let split = match f.optional("split") {
        Some((p, v)) => parse_split(&p, v)?,
        None => SupplySplit::Fixed { n1_fraction: 0.5 },
    };
    f.finish()?;
    Ok((total, split))
}

fn scenario_from_value(value: Value) -> Result<ScenarioConfig, ConfigError> {
    let mut root = Fields::new(value, "")?;
    let (supply_total, supply_split) = parse_supply(&mut root)?;
    let mut config = ScenarioConfig {
        supply_total,
        supply_split,
        ..ScenarioConfig::baseline(0)
    };
    if let Some((p, v)) = root.optional("seed") {
        config.seed = count(&p, &v)?;
    }
    if let Some((p, v)) = root.optional("instances") {
        config.instances = count(&p, &v)? as usize;
        if config.instances == 0 {
            return Err(range_error(&p, "must be positive"));
        }
    }
    if let Some((p, v)) = root.optional("m_values") {
        let items = v.as_array().ok_or_else(|| ConfigError::Type {
            path: p.clone(),
            expected: "an array of advertiser counts",
        })?;
        if items.is_empty() {
            return Err(range_error(&p, "must not be empty"));
        }
        config.m_values = items
            .iter()
            .enumerate()
            .map(|(i, item)| count(&format!("{p}[{i}]"), item).map(|m| m as usize))
            .collect::<Result<_, _>>()?;
    }
    if let Some((p, v)) = root.optional("value_dist") {
        config.value_dist = parse_range(&p, v, 0.0, f64::MAX)?;
    }
    if let Some((p, v)) = root.optional("budget_dist") {
        config.budget_dist = parse_range(&p, v, 0.0, f64::MAX)?;
    }
    if let Some((p, v)) = root.optional("rho_dist") {
        config.rho_dist = parse_range(&p, v, 0.0, 1.0)?;
    }
    root.finish()?;
    config
        .validate()
        .map_err(|e| range_error("<root>", e.to_string()))?;
    Ok(config)
}

fn instance_from_value(value: Value) -> Result<InstanceConfig, ConfigError> {
    let mut root = Fields::new(value, "")?;
    let (supply_total, supply_split) = parse_supply(&mut root)?;
    let (path, list) = root.required("advertisers")?;
    root.finish()?;
    let items = match list {
        Value::Array(items) => items,
        _ => {
            return Err(ConfigError::Type {
                path,
                expected: "an array of advertisers",
            })
        }
    };
    let mut advertisers = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let item_path = format!("{path}[{i}]");
        let mut f = Fields::new(item, &item_path)?;
        let (vp, v) = f.required("v")?;
        let (bp, b) = f.required("B")?;
        let rho = f.optional("rho");
        f.finish()?;
        let value = number(&vp, &v)?;
        let budget = number(&bp, &b)?;
        if value < 0.0 {
            return Err(range_error(&vp, "negative value"));
        }
        if budget < 0.0 {
            return Err(range_error(&bp, "negative budget"));
        }
        let discount = match rho {
            Some((rp, r)) => {
                let r = number(&rp, &r)?;
                if !(0.0..=1.0).contains(&r) {
                    return Err(range_error(&rp, "discount must lie in [0, 1]"));
                }
                r
            }
            None => 1.0,
        };
        advertisers.push(Advertiser::new(i, value, budget, discount));
    }
    Ok(InstanceConfig {
        supply_total,
        supply_split,
        pool: AdvertiserPool::from_advertisers(advertisers),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASELINE: &str = r#"{
        "seed": 7, "instances": 5000, "m_values": [1, 2, 3],
        "supply": {"total": 1, "split": {"mode": "fixed", "n1_fraction": 0.5}},
        "value_dist": {"lo": 18, "hi": 20},
        "budget_dist": {"lo": 2, "hi": 6},
        "rho_dist": {"lo": 0.5, "hi": 0.9}
    }"#;

    #[test]
    fn baseline_file() {
        let c = parse_scenario(BASELINE).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.m_values, vec![1, 2, 3]);
        assert_eq!(c.budget_dist.mean(), 4.0);
        assert_eq!(c.engine_supplies().0.total(), 0.5);
    }

    #[test]
    fn low_discount_file() {
        let c = parse_scenario(r#"{"supply": {"total": 1}, "rho_dist": {"lo": 0.1, "hi": 0.5}}"#)
            .unwrap();
        assert_eq!((c.rho_dist.lo(), c.rho_dist.hi()), (0.1, 0.5));
        assert_eq!(c.instances, 5000);
    }

    #[test]
    fn empty_file_misses_supply() {
        let err = parse_scenario("").unwrap_err();
        assert_eq!(err.to_string(), "missing required key: supply");
    }

    #[test]
    fn errors_are_path_qualified() {
        let err = parse_scenario(r#"{"supply": {}}"#).unwrap_err();
        assert_eq!(err.to_string(), "missing required key: supply.total");

        let err = parse_scenario(r#"{"supply": {"total": 1, "extra": 2}}"#).unwrap_err();
        assert_eq!(err.to_string(), "unknown key: supply.extra");

        let err = parse_scenario(r#"{"supply": {"total": 1}, "rho_dist": {"lo": 0.1, "hi": 1.5}}"#)
            .unwrap_err();
        assert!(err.to_string().starts_with("rho_dist.hi:"), "{err}");

        let err = parse_scenario(
            r#"{"supply": {"total": 1, "split": {"mode": "hotelling", "zeta": 2, "q": 1}}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("supply.split.zeta:"), "{err}");

        let err = parse_scenario(r#"{"supply": {"total": 1}, "m_values": [1, -2]}"#).unwrap_err();
        assert!(err.to_string().starts_with("m_values[1]:"), "{err}");
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(
            parse_scenario("{supply"),
            Err(ConfigError::Json(_))
        ));
    }

    #[test]
    fn instance_file() {
        let doc = parse_document(
            r#"{"supply": {"total": 1}, "advertisers": [{"v": 1, "B": 2, "rho": 1}, {"v": 4, "B": 2, "rho": 0}]}"#,
        )
        .unwrap();
        let ConfigDocument::Instance(inst) = doc else {
            panic!("expected an instance")
        };
        assert_eq!(inst.pool.len(), 2);
        assert_eq!(
            inst.pool.entries()[1].advertiser,
            Advertiser::new(1, 4.0, 2.0, 0.0)
        );
    }

    #[test]
    fn instance_errors() {
        let err = parse_instance(r#"{"supply": {"total": 1}, "advertisers": [{"v": -1, "B": 2}]}"#)
            .unwrap_err();
        assert_eq!(err.to_string(), "advertisers[0].v: negative value");
        let err =
            parse_instance(r#"{"supply": {"total": 1}, "advertisers": [{"v": 1}]}"#).unwrap_err();
        assert_eq!(err.to_string(), "missing required key: advertisers[0].B");
    }

    #[test]
    fn hotelling_split() {
        let c = parse_scenario(
            r#"{"supply": {"total": 2, "split": {"mode": "hotelling", "zeta": 0.9, "q": 0.5}}}"#,
        )
        .unwrap();
        let (s1, s2) = c.engine_supplies();
        assert!((s1.total() - 1.2).abs() < 1e-12 && (s2.total() - 0.8).abs() < 1e-12);
    }
}
