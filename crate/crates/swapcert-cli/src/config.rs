//! Flat key=value configuration files with command-line overrides.
//!
//! Lines are `key=value`; blank lines and `#` comments are ignored.
//! Recognized keys mirror the flag names: scenario, noise, v, p, angle,
//! theta, from, to, step, seed, out, expect.

use std::collections::HashMap;
use std::path::Path;

use swapcert::certify::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Bsm,
    Tilted,
    Ghz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    Werner,
    PovmNoise,
    Misalign,
}

#[derive(Debug, Default)]
pub struct ConfigMap {
    values: HashMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "scenario", "noise", "v", "p", "angle", "theta", "from", "to", "step", "seed", "out",
    "expect",
];

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or(format!(
                    "config line {} is not key=value: '{line}'",
                    lineno + 1
                ))?;
                let key = key.trim().to_string();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    return Err(format!("unknown config key '{key}'"));
                }
                values.insert(key, value.trim().to_string());
            }
        }
        Ok(Self { values })
    }

    pub fn override_str(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
        }
    }

    pub fn override_f64(&mut self, key: &str, value: Option<f64>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn override_u64(&mut self, key: &str, value: Option<u64>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| format!("config value {key}={s} is not a number")),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, String> {
        self.get_f64(key)?
            .ok_or(format!("missing required parameter '{key}'"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, String> {
        Ok(self.get_f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, String> {
        match self.values.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| format!("config value {key}={s} is not an integer")),
        }
    }

    pub fn scenario(&self) -> Result<ScenarioKind, String> {
        match self.values.get("scenario").map(String::as_str) {
            Some("bsm") | None => Ok(ScenarioKind::Bsm),
            Some("tilted") => Ok(ScenarioKind::Tilted),
            Some("ghz") => Ok(ScenarioKind::Ghz),
            Some(other) => Err(format!(
                "unknown scenario '{other}' (expected bsm | tilted | ghz)"
            )),
        }
    }

    pub fn noise(&self) -> Result<NoiseKind, String> {
        match self.values.get("noise").map(String::as_str) {
            Some("none") | None => Ok(NoiseKind::None),
            Some("werner") => Ok(NoiseKind::Werner),
            Some("povm-noise") => Ok(NoiseKind::PovmNoise),
            Some("misalign") => Ok(NoiseKind::Misalign),
            Some(other) => Err(format!(
                "unknown noise model '{other}' (expected none | werner | povm-noise | misalign)"
            )),
        }
    }

    pub fn expect(&self) -> Result<Verdict, String> {
        match self.values.get("expect").map(String::as_str) {
            None => Ok(Verdict::EntangledCertified),
            Some(s) => crate::parse_verdict(s),
        }
    }
}
