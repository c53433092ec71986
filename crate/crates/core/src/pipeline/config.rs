//! Run configuration: flat dotted-key JSON on disk, nested structs in memory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::detect::{ClippingConvention, PhotonConvention};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig2,
    Fig5a,
    Fig5b,
    Fig5c,
    Fig6,
    Fig7,
    Mie,
    Ports,
    #[default]
    Mmd,
    Montecarlo,
}

impl Scenario {
    pub const ALL: [Scenario; 10] = [
        Scenario::Fig2,
        Scenario::Fig5a,
        Scenario::Fig5b,
        Scenario::Fig5c,
        Scenario::Fig6,
        Scenario::Fig7,
        Scenario::Mie,
        Scenario::Ports,
        Scenario::Mmd,
        Scenario::Montecarlo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Fig2 => "fig2",
            Scenario::Fig5a => "fig5a",
            Scenario::Fig5b => "fig5b",
            Scenario::Fig5c => "fig5c",
            Scenario::Fig6 => "fig6",
            Scenario::Fig7 => "fig7",
            Scenario::Mie => "mie",
            Scenario::Ports => "ports",
            Scenario::Mmd => "mmd",
            Scenario::Montecarlo => "montecarlo",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| config_error("scenario", format!("unknown scenario `{name}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub wavelength: f64,
    pub waist: f64,
    /// Defaults to `waist`.
    pub waist_x: Option<f64>,
    pub waist_y: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            wavelength: 125e-6,
            waist: 150e-6,
            waist_x: None,
            waist_y: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereConfig {
    pub radius: f64,
    pub index_re: f64,
    pub index_im: f64,
}

impl Default for SphereConfig {
    fn default() -> Self {
        Self {
            radius: 125e-6,
            index_re: 2.19,
            index_im: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferometerConfig {
    /// Explicit phases; when absent they follow from the postselection probabilities.
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub postselection_1: f64,
    pub postselection_2: f64,
}

impl Default for InterferometerConfig {
    fn default() -> Self {
        Self {
            theta: None,
            phi: None,
            postselection_1: 0.005,
            postselection_2: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub probe_power: f64,
    pub resolution_bandwidth: f64,
    pub lo_power: f64,
    /// Defaults to the probe wavelength.
    pub lo_wavelength: Option<f64>,
    pub probe_n: usize,
    pub probe_m: usize,
    pub photon_convention: PhotonConvention,
    pub clipping: ClippingConvention,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            probe_power: 5e-6,
            resolution_bandwidth: 1.0,
            lo_power: 1e-3,
            lo_wavelength: None,
            probe_n: 0,
            probe_m: 0,
            photon_convention: PhotonConvention::Paper,
            clipping: ClippingConvention::Amplitude,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeformationConfig {
    pub d_waist_x: f64,
    pub d_waist_y: f64,
    pub d_z: f64,
}

/// Sweep axis; unset fields take per-scenario defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: Option<String>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: Option<usize>,
    pub log: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisherConfig {
    pub sigma: f64,
    /// Interferometer phase used by `fig6` and `fig7` when none is configured.
    pub phase: f64,
}

impl Default for FisherConfig {
    fn default() -> Self {
        Self {
            sigma: 1e-4,
            phase: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub samples: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { samples: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MieConfig {
    pub angles: usize,
    pub distance: f64,
    pub temperature: f64,
}

impl Default for MieConfig {
    fn default() -> Self {
        Self {
            angles: 181,
            distance: 0.1,
            temperature: 300.0,
        }
    }
}

/// Everything a scenario run needs. SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub geometry: GeometryConfig,
    pub sphere: SphereConfig,
    pub interferometer: InterferometerConfig,
    pub detection: DetectionConfig,
    pub deformation: DeformationConfig,
    pub sweep: SweepConfig,
    pub fisher: FisherConfig,
    pub montecarlo: MonteCarloConfig,
    pub mie: MieConfig,
    /// Mode-space truncation for exact decompositions and port states.
    pub cutoff: usize,
    pub seed: u64,
    pub output_path: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            geometry: Default::default(),
            sphere: Default::default(),
            interferometer: Default::default(),
            detection: Default::default(),
            deformation: Default::default(),
            sweep: Default::default(),
            fisher: Default::default(),
            montecarlo: Default::default(),
            mie: Default::default(),
            cutoff: 20,
            seed: 0,
            output_path: None,
        }
    }
}

/// Key written into sidecars and ignored when reading a config.
pub const VERSION_KEY: &str = "version";

pub(crate) fn config_error(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::ConfigInvalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn flatten_into(prefix: &str, value: &Value, out: &mut BTreeMap<String, Value>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_into(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

impl RunConfig {
    /// Dotted-key view of the config.
    pub fn to_flat(&self) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        let value = serde_json::to_value(self).expect("config serializes");
        flatten_into("", &value, &mut out);
        out
    }

    /// Build from dotted keys layered over the defaults.
    pub fn from_flat(flat: &BTreeMap<String, Value>) -> Result<Self> {
        let known = Self::default().to_flat();
        let mut root = serde_json::to_value(Self::default()).expect("config serializes");
        for (key, value) in flat {
            if key == VERSION_KEY {
                continue;
            }
            if !known.contains_key(key) {
                return Err(config_error(key, "unknown key"));
            }
            set_path(&mut root, key, value.clone());
            if let Err(e) = serde_json::from_value::<RunConfig>(root.clone()) {
                return Err(config_error(key, e.to_string()));
            }
        }
        Ok(serde_json::from_value(root)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| config_error("<file>", e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(config_error("<file>", "top level must be an object of dotted keys"));
        };
        let mut flat = BTreeMap::new();
        for (k, v) in map {
            // nested objects are accepted too and flattened
            flatten_into(&k, &v, &mut flat);
        }
        Self::from_flat(&flat)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("--config", format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Apply a `key=value` override; the value is parsed as JSON, else taken as a string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| config_error(assignment, "expected key=value"))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut flat = self.to_flat();
        flat.insert(key.trim().to_string(), value);
        *self = Self::from_flat(&flat)?;
        Ok(())
    }

    /// Sidecar JSON: the flat config plus the code version.
    pub fn sidecar_json(&self) -> String {
        let mut flat = self.to_flat();
        flat.insert(VERSION_KEY.into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        let mut text = serde_json::to_string_pretty(&flat).expect("sidecar serializes");
        text.push('\n');
        text
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        if !node.get(*part).is_some_and(Value::is_object) {
            node[*part] = Value::Object(Map::new());
        }
        node = node.get_mut(*part).expect("just inserted");
    }
    node[parts[parts.len() - 1]] = value;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_round_trip() {
        let mut c = RunConfig::default();
        c.geometry.waist_x = Some(160e-6);
        c.detection.photon_convention = PhotonConvention::Physical;
        c.scenario = Scenario::Fig2;
        let back = RunConfig::from_flat(&c.to_flat()).unwrap();
        assert_eq!(back, c);
        let sidecar = RunConfig::from_json_str(&c.sidecar_json()).unwrap();
        assert_eq!(sidecar, c);
    }

    #[test]
    fn dotted_keys_and_overrides() {
        let c = RunConfig::from_json_str(r#"{"geometry.waist": 1e-4, "detection.probe_n": 2, "scenario": "fig5b"}"#).unwrap();
        assert_eq!(c.geometry.waist, 1e-4);
        assert_eq!(c.detection.probe_n, 2);
        assert_eq!(c.scenario, Scenario::Fig5b);
        let mut c = c;
        c.set("sweep.points=5").unwrap();
        c.set("detection.clipping=intensity").unwrap();
        assert_eq!(c.sweep.points, Some(5));
        assert_eq!(c.detection.clipping, ClippingConvention::Intensity);
    }

    #[test]
    fn errors_name_the_field() {
        let err = RunConfig::from_json_str(r#"{"geometry.wasit": 1.0}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field == "geometry.wasit"));
        let err = RunConfig::from_json_str(r#"{"detection.probe_power": "lots"}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field == "detection.probe_power"));
        assert!(RunConfig::from_json_str("[1, 2]").is_err());
        assert!(Scenario::parse("fig9").is_err());
        assert_eq!(Scenario::parse("montecarlo").unwrap(), Scenario::Montecarlo);
    }
}
