//! Scenario runner behind the command-line tool: resolves a [`RunConfig`],
//! evaluates one scenario and writes its CSV tables plus a JSON sidecar.

mod config;
mod scenarios;

use std::path::{Path, PathBuf};

pub use config::{
    DeformationConfig, DetectionConfig, FisherConfig, GeometryConfig, InterferometerConfig, MieConfig,
    MonteCarloConfig, RunConfig, Scenario, SphereConfig, SweepConfig, VERSION_KEY,
};
pub use scenarios::{check, render, resolve_sweep, ResolvedSweep};

use crate::deform::LINEAR_REGIME;
use crate::error::Result;

/// One CSV file: header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Appended to the output stem, e.g. `_angles`; empty for the main table.
    pub suffix: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(suffix: &str, header: &[&str]) -> Self {
        Self {
            suffix: suffix.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Shortest lossless form: 17 significant digits in exponent notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Main CSV path for a config: `output_path`, or `<scenario>.csv`.
pub fn output_path(config: &RunConfig) -> PathBuf {
    config
        .output_path
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", config.scenario.name())))
}

fn table_path(main: &Path, suffix: &str) -> PathBuf {
    if suffix.is_empty() {
        return main.to_path_buf();
    }
    let stem = main.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = main.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    main.with_file_name(format!("{stem}{suffix}.{ext}"))
}

/// Sidecar path: the main CSV path with a `.json` extension.
pub fn sidecar_path(main: &Path) -> PathBuf {
    main.with_extension("json")
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Check, evaluate and write one scenario.
pub fn run_scenario(config: &RunConfig) -> Result<RunSummary> {
    let warnings = validate(config);
    for w in &warnings {
        log::warn!("{w}");
    }
    let tables = render(config)?;
    let main = output_path(config);
    if let Some(dir) = main.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut files = Vec::new();
    for table in &tables {
        let path = table_path(&main, &table.suffix);
        std::fs::write(&path, table.to_csv_string()?)?;
        files.push(path);
    }
    let sidecar = sidecar_path(&main);
    std::fs::write(&sidecar, config.sidecar_json())?;
    files.push(sidecar);
    Ok(RunSummary { files, warnings })
}

/// Soft problems with a config. Never fails; hard errors come from [`check`].
pub fn validate(config: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    let g = &config.geometry;
    let wx = g.waist_x.unwrap_or(g.waist);
    let wy = g.waist_y.unwrap_or(g.waist);

    if let Ok(geom) = scenarios::geometry(config) {
        let d = &config.deformation;
        let rel = [
            ("deformation.d_waist_x", d.d_waist_x / wx),
            ("deformation.d_waist_y", d.d_waist_y / wy),
            ("deformation.d_z", d.d_z / geom.rayleigh()),
        ];
        for (key, r) in rel {
            if r.abs() > LINEAR_REGIME {
                out.push(format!(
                    "{key}: relative size {r:.3} is outside the linear regime (|x| <= {LINEAR_REGIME})"
                ));
            }
        }
    }

    if let Ok(ifm) = scenarios::interferometer(config) {
        for (name, v) in [("theta", ifm.theta()), ("phi", ifm.phi())] {
            if v < 1e-3 || std::f64::consts::PI - v < 1e-3 {
                out.push(format!("interferometer.{name} = {v:.3e} is within 1e-3 of 0 or pi"));
            }
        }
    }

    if wx.min(wy) < config.sphere.radius {
        out.push(format!(
            "probe waist smaller than sphere: waist {:.3e} m < radius {:.3e} m",
            wx.min(wy),
            config.sphere.radius
        ));
    }

    let det = &config.detection;
    if det.photon_convention != Default::default() {
        out.push(format!(
            "detection.photon_convention = {}: photon numbers, and every MMD and Fisher entry, differ from the default convention",
            det.photon_convention.label()
        ));
    }
    if det.clipping != Default::default() {
        out.push(format!(
            "detection.clipping = {}: scattered power differs from the default convention",
            det.clipping.label()
        ));
    }
    out
}
