use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{config_error, RunConfig, Scenario};
use super::{format_float as f, Table};
use crate::deform::{
    exact_waist_scaling_coefficients, exact_waist_shift_coefficients, firstorder_decomposition, Axis, Deformation,
    FirstOrderOptions, GouyBookkeeping,
};
use crate::detect::{mmd, mmd_conventions, DetectionSetting, MmdResult, PhotonConvention};
use crate::error::Result;
use crate::fisher::{
    cfi_ad, cfi_bhd, flip_overlap_factor, monte_carlo_estimation, qfi, sigma_from_waist, Detector, FisherMatrix,
    FisherParams,
};
use crate::hgbasis::{BeamGeometry, ModeIndex, ModeVector};
use crate::mie::{amplitude_functions, mie_coefficient_series, MieMedium};
use crate::weakmeas::{port_states, weak_values, InterferometerSetting};

/// Sweep axis after per-scenario defaults are filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSweep {
    pub variable: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl ResolvedSweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                if self.log {
                    (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + t * (self.max - self.min)
                }
            })
            .collect()
    }
}

fn sweep_defaults(scenario: Scenario) -> Option<(&'static [&'static str], f64, f64, usize, bool)> {
    Some(match scenario {
        Scenario::Fig2 => (&["epsilon_x", "epsilon_y", "dz"], -0.3, 0.3, 121, false),
        Scenario::Fig5a => (&["postselection"], 1e-4, 0.1, 61, true),
        Scenario::Fig5b => (&["probe_power"], 1e-7, 1e-4, 61, true),
        Scenario::Fig5c => (&["nm", "n", "m"], 0.0, 6.0, 7, false),
        Scenario::Fig6 => (&["order", "deformation"], 0.0, 6.0, 7, false),
        Scenario::Fig7 => (&["deformation", "order"], 0.0, 1e-11, 11, false),
        _ => return None,
    })
}

/// Fill in the sweep defaults of the configured scenario.
pub fn resolve_sweep(config: &RunConfig) -> Result<Option<ResolvedSweep>> {
    let Some((vars, min, max, points, log)) = sweep_defaults(config.scenario) else {
        return Ok(None);
    };
    let s = &config.sweep;
    let variable = s.variable.clone().unwrap_or_else(|| vars[0].to_string());
    if !vars.contains(&variable.as_str()) {
        return Err(config_error(
            "sweep.variable",
            format!("`{variable}` is not one of {vars:?} for scenario {}", config.scenario.name()),
        ));
    }
    // the order sweeps and the deformation axis of fig7 have their own ranges
    let (min, max, points) = match (config.scenario, variable.as_str()) {
        (Scenario::Fig6, "deformation") => (0.0, 1e-11, 11),
        (Scenario::Fig7, "order") => (0.0, 6.0, 7),
        _ => (min, max, points),
    };
    let r = ResolvedSweep {
        min: s.min.unwrap_or(min),
        max: s.max.unwrap_or(max),
        points: s.points.unwrap_or(points),
        log: s.log.unwrap_or(log),
        variable,
    };
    if r.points == 0 {
        return Err(config_error("sweep.points", "must be at least 1"));
    }
    if !(r.min.is_finite() && r.max.is_finite()) || r.min > r.max {
        return Err(config_error("sweep.min", "need finite min <= max"));
    }
    if r.log && !(r.min > 0.0) {
        return Err(config_error("sweep.log", "log sweeps need min > 0"));
    }
    let integral = matches!(r.variable.as_str(), "nm" | "n" | "m" | "order");
    if integral && (r.min < 0.0 || r.min.fract() != 0.0 || r.max.fract() != 0.0) {
        return Err(config_error("sweep.min", "mode-order sweeps need non-negative integer bounds"));
    }
    Ok(Some(r))
}

pub(crate) fn geometry(config: &RunConfig) -> Result<BeamGeometry> {
    let g = &config.geometry;
    BeamGeometry::new(
        g.wavelength,
        g.waist_x.unwrap_or(g.waist),
        g.waist_y.unwrap_or(g.waist),
    )
    .map_err(|e| config_error("geometry", e.to_string()))
}

pub(crate) fn interferometer(config: &RunConfig) -> Result<InterferometerSetting> {
    let i = &config.interferometer;
    let (theta, phi) = match (config.scenario, i.theta, i.phi) {
        (Scenario::Fig6 | Scenario::Fig7, None, None) => (config.fisher.phase, config.fisher.phase),
        (_, Some(t), Some(p)) => (t, p),
        (_, t, p) => {
            let derived = InterferometerSetting::from_postselection(i.postselection_1, i.postselection_2)
                .map_err(|e| config_error("interferometer.postselection_1", e.to_string()))?;
            (t.unwrap_or(derived.theta()), p.unwrap_or(derived.phi()))
        }
    };
    InterferometerSetting::new(theta, phi).map_err(|e| config_error("interferometer.theta", e.to_string()))
}

fn probe(config: &RunConfig) -> ModeIndex {
    ModeIndex::new(config.detection.probe_n, config.detection.probe_m)
}

fn detection(config: &RunConfig) -> Result<DetectionSetting> {
    let d = &config.detection;
    let mut s = DetectionSetting::new(d.probe_power, config.geometry.wavelength, d.resolution_bandwidth)
        .map_err(|e| config_error("detection", e.to_string()))?
        .with_probe_order(probe(config))
        .with_convention(d.photon_convention)
        .with_clipping(d.clipping);
    s.lo_power = [d.lo_power; 3];
    s.lo_wavelength = [d.lo_wavelength.unwrap_or(config.geometry.wavelength); 3];
    s.validate().map_err(|e| config_error("detection", e.to_string()))?;
    Ok(s)
}

fn deformation(config: &RunConfig, geom: &BeamGeometry) -> Result<Deformation> {
    let d = &config.deformation;
    Deformation::new(d.d_waist_x, d.d_waist_y, d.d_z, geom).map_err(|e| config_error("deformation", e.to_string()))
}

/// Scenario-specific checks that run before any computation.
pub fn check(config: &RunConfig) -> Result<()> {
    let geom = geometry(config)?;
    detection(config)?;
    interferometer(config)?;
    deformation(config, &geom)?;
    resolve_sweep(config)?;
    let p = probe(config);
    match config.scenario {
        Scenario::Fig2 | Scenario::Ports if config.cutoff < p.nu() + 2 => {
            return Err(config_error(
                "cutoff",
                format!("must be at least {} for probe {p}", p.nu() + 2),
            ));
        }
        Scenario::Montecarlo if config.montecarlo.samples < 10_000 => {
            return Err(config_error("montecarlo.samples", "need at least 10^4 samples"));
        }
        Scenario::Mie => {
            if !(config.sphere.radius > 0.0) {
                return Err(config_error("sphere.radius", "must be positive"));
            }
            if config.sphere.index_im < 0.0 {
                return Err(config_error("sphere.index_im", "must be >= 0"));
            }
            if config.mie.angles < 2 {
                return Err(config_error("mie.angles", "need at least 2 angles"));
            }
        }
        Scenario::Fig6 | Scenario::Fig7 if !(config.fisher.sigma > 0.0) => {
            return Err(config_error("fisher.sigma", "must be positive"));
        }
        _ => {}
    }
    Ok(())
}

/// Evaluate a scenario into its tables without touching the file system.
pub fn render(config: &RunConfig) -> Result<Vec<Table>> {
    check(config)?;
    match config.scenario {
        Scenario::Fig2 => fig2(config),
        Scenario::Fig5a | Scenario::Fig5b | Scenario::Fig5c => fig5(config),
        Scenario::Fig6 | Scenario::Fig7 => fisher_sweep(config),
        Scenario::Mie => mie(config),
        Scenario::Ports => ports(config),
        Scenario::Mmd => mmd_table(config),
        Scenario::Montecarlo => montecarlo(config),
    }
}

fn complex_cells(c: Complex64) -> [String; 2] {
    [f(c.re), f(c.im)]
}

fn fig2(config: &RunConfig) -> Result<Vec<Table>> {
    let geom = geometry(config)?;
    let sweep = resolve_sweep(config)?.expect("fig2 has a sweep");
    let p = probe(config);
    let (target, axis) = match sweep.variable.as_str() {
        "epsilon_y" => (ModeIndex::new(p.n, p.m + 2), Some(Axis::Y)),
        "epsilon_x" => (ModeIndex::new(p.n + 2, p.m), Some(Axis::X)),
        _ => (ModeIndex::new(p.n + 2, p.m), None),
    };
    let opts = FirstOrderOptions {
        bookkeeping: if p == ModeIndex::new(0, 0) {
            GouyBookkeeping::FieldTable
        } else {
            GouyBookkeeping::PointerState
        },
        shift_couplings: true,
        cutoff: p.nu() + 2,
    };
    let label = format!("c{}{}", target.n, target.m);
    let rows: Vec<Vec<Vec<String>>> = sweep
        .values()
        .into_par_iter()
        .map(|v| -> Result<Vec<Vec<String>>> {
            let def = match axis {
                Some(Axis::X) => Deformation::new(v * geom.waist_x(), 0.0, 0.0, &geom)?,
                Some(Axis::Y) => Deformation::new(0.0, v * geom.waist_y(), 0.0, &geom)?,
                None => Deformation::new(0.0, 0.0, v * geom.rayleigh(), &geom)?,
            };
            let first = firstorder_decomposition(&def, &geom, p, &opts)?.get(target);
            let exact = match axis {
                Some(a) => exact_waist_scaling_coefficients(v, a, p, &geom, config.cutoff)?.get(target),
                None => exact_waist_shift_coefficients(def.d_z, &geom, p, config.cutoff)?
                    .content
                    .get(target),
            };
            Ok([("firstorder", first), ("exact", exact)]
                .into_iter()
                .map(|(model, c)| {
                    let [re, im] = complex_cells(c);
                    vec![f(v), re, im, label.clone(), model.to_string()]
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new("", &["epsilon_or_dz", "re_c", "im_c", "nm_label", "model"]);
    t.rows = rows.into_iter().flatten().collect();
    Ok(vec![t])
}

fn mmd_cells(m: &MmdResult) -> [String; 3] {
    [f(m.d_waist_x_min), f(m.d_waist_y_min), f(m.d_z_min)]
}

fn fig5(config: &RunConfig) -> Result<Vec<Table>> {
    let geom = geometry(config)?;
    let base = detection(config)?;
    let ifm = interferometer(config)?;
    let sweep = resolve_sweep(config)?.expect("fig5 has a sweep");
    let values = sweep.values();
    let rows: Vec<Vec<Vec<String>>> = values
        .par_iter()
        .map(|&v| -> Result<Vec<Vec<String>>> {
            let mut setting = base.clone();
            let mut ifm = ifm;
            match sweep.variable.as_str() {
                "postselection" => ifm = InterferometerSetting::from_postselection(v, v)?,
                "probe_power" => setting.probe_power = v,
                order => {
                    let k = v.round() as usize;
                    let probe = match order {
                        "n" => ModeIndex::new(k, 0),
                        "m" => ModeIndex::new(0, k),
                        _ => ModeIndex::new(k, k),
                    };
                    setting = setting.with_probe_order(probe);
                }
            }
            PhotonConvention::ALL
                .into_iter()
                .map(|conv| {
                    let m = mmd(&setting.clone().with_convention(conv), &ifm, &geom)?;
                    let [x, y, z] = mmd_cells(&m);
                    Ok(vec![f(v), x, y, z, conv.label().to_string()])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new("", &["sweep_value", "mmd_x_m", "mmd_y_m", "mmd_z_m", "convention"]);
    t.rows = rows.into_iter().flatten().collect();
    Ok(vec![t])
}

fn fisher_params(config: &RunConfig, probe: ModeIndex) -> Result<FisherParams> {
    let geom = geometry(config)?;
    let setting = detection(config)?.with_probe_order(probe);
    let wv = weak_values(&interferometer(config)?);
    Ok(FisherParams {
        probe,
        weak_value: wv.a_w1.norm(),
        postselection: wv.p_s1,
        photons: setting.scattered_photons(&geom),
        sigma: config.fisher.sigma,
        wavenumber: geom.wavenumber(),
    })
}

fn fisher_sweep(config: &RunConfig) -> Result<Vec<Table>> {
    let sweep = resolve_sweep(config)?.expect("fisher scenarios have a sweep");
    let kinds: &[fn(FisherParams) -> Result<FisherMatrix>] = match config.scenario {
        Scenario::Fig6 => &[qfi],
        _ => &[cfi_bhd, cfi_ad],
    };
    let mut t = Table::new("", &["order_or_g", "entry_11", "entry_22", "entry_33", "kind"]);
    for v in sweep.values() {
        let probe = if sweep.variable == "order" {
            let k = v.round() as usize;
            ModeIndex::new(k, k)
        } else {
            // the printed matrices do not depend on the deformation itself
            probe(config)
        };
        let params = fisher_params(config, probe)?;
        for build in kinds {
            let m = build(params)?;
            let [a, b, c] = m.diagonal();
            t.rows.push(vec![f(v), f(a), f(b), f(c), m.kind.label().to_string()]);
        }
    }
    Ok(vec![t])
}

fn mie(config: &RunConfig) -> Result<Vec<Table>> {
    let s = &config.sphere;
    let medium = MieMedium::new(s.radius, Complex64::new(s.index_re, s.index_im), config.geometry.wavelength)?;
    let mut coeffs = Table::new("", &["iota", "re_a", "im_a", "re_b", "im_b"]);
    for c in mie_coefficient_series(&medium)? {
        let [ar, ai] = complex_cells(c.a);
        let [br, bi] = complex_cells(c.b);
        coeffs.rows.push(vec![c.order.to_string(), ar, ai, br, bi]);
    }
    let n = config.mie.angles;
    let rows: Vec<Vec<String>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<String>> {
            // pin the last angle so rounding never leaves [0, pi]
            let theta = if i + 1 == n {
                std::f64::consts::PI
            } else {
                std::f64::consts::PI * i as f64 / (n - 1) as f64
            };
            let (s1, s2) = amplitude_functions(theta, &medium)?;
            let [r1, i1] = complex_cells(s1);
            let [r2, i2] = complex_cells(s2);
            Ok(vec![f(theta), r1, i1, r2, i2])
        })
        .collect::<Result<_>>()?;
    let mut angles = Table::new("_angles", &["theta", "re_s1", "im_s1", "re_s2", "im_s2"]);
    angles.rows = rows;
    Ok(vec![coeffs, angles])
}

fn ports(config: &RunConfig) -> Result<Vec<Table>> {
    let geom = geometry(config)?;
    let def = deformation(config, &geom)?;
    let ifm = interferometer(config)?;
    let probe = ModeVector::basis(probe(config), config.cutoff)?;
    let mut t = Table::new(
        "",
        &["port", "n", "m", "re_c", "im_c", "prefactor_re", "prefactor_im", "gouy_phase"],
    );
    for p in port_states(&probe, &def, &ifm, &geom)? {
        for (idx, c) in p.state.iter() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let [re, im] = complex_cells(c);
            let [pr, pi] = complex_cells(p.prefactor);
            t.rows.push(vec![
                p.port.label().to_string(),
                idx.n.to_string(),
                idx.m.to_string(),
                re,
                im,
                pr,
                pi,
                f(p.global_gouy_phase),
            ]);
        }
    }
    Ok(vec![t])
}

fn mmd_table(config: &RunConfig) -> Result<Vec<Table>> {
    let geom = geometry(config)?;
    let setting = detection(config)?;
    let ifm = interferometer(config)?;
    let mut header = Vec::new();
    let mut row = Vec::new();
    for conv in PhotonConvention::ALL {
        let m = mmd(&setting.clone().with_convention(conv), &ifm, &geom)?;
        for (axis, cell) in ["x", "y", "z"].into_iter().zip(mmd_cells(&m)) {
            header.push(format!("mmd_{axis}_{}_m", conv.label()));
            row.push(cell);
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut main = Table::new("", &header);
    main.rows.push(row);

    let mut all = Table::new(
        "_conventions",
        &["photon_convention", "clipping", "mmd_x_m", "mmd_y_m", "mmd_z_m"],
    );
    for (photon, clip, m) in mmd_conventions(&setting, &ifm, &geom)? {
        let [x, y, z] = mmd_cells(&m);
        all.rows
            .push(vec![photon.label().to_string(), clip.label().to_string(), x, y, z]);
    }
    Ok(vec![main, all])
}

fn montecarlo(config: &RunConfig) -> Result<Vec<Table>> {
    let geom = geometry(config)?;
    let setting = detection(config)?;
    let ifm = interferometer(config)?;
    let truth = deformation(config, &geom)?;
    let wv = weak_values(&ifm);
    let photons = setting.scattered_photons(&geom);
    let flip = flip_overlap_factor()?;
    let names = ["d_waist_y", "d_waist_x", "d_z"];
    let waists = [geom.waist_y(), geom.waist_x(), geom.waist_x()];

    let mut t = Table::new(
        "",
        &["detector", "parameter", "mean", "variance", "cramer_rao_bound", "ratio"],
    );
    for (label, detector) in [("bhd", Detector::Bhd), ("ad", Detector::ArrayDetection { flip })] {
        let r = monte_carlo_estimation(
            &truth,
            &setting,
            &ifm,
            &geom,
            detector,
            config.montecarlo.samples,
            config.seed,
        )?;
        let means = [r.mean.d_waist_y, r.mean.d_waist_x, r.mean.d_z];
        for j in 0..3 {
            let (a_w, p_s) = wv.port(j + 1);
            let params = FisherParams {
                probe: setting.probe_order,
                weak_value: a_w.norm(),
                postselection: p_s,
                photons,
                sigma: sigma_from_waist(waists[j]),
                wavenumber: geom.wavenumber(),
            };
            let fisher = match detector {
                Detector::Bhd => cfi_bhd(params)?,
                Detector::ArrayDetection { .. } => cfi_ad(params)?,
            };
            let bound = fisher.cramer_rao_bounds()[j];
            t.rows.push(vec![
                label.to_string(),
                names[j].to_string(),
                f(means[j]),
                f(r.variance[j]),
                f(bound),
                f(r.variance[j] / bound),
            ]);
        }
    }
    Ok(vec![t])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: Scenario) -> RunConfig {
        RunConfig {
            scenario: s,
            ..Default::default()
        }
    }

    #[test]
    fn fig2_default_sweep() {
        let t = &render(&cfg(Scenario::Fig2)).unwrap()[0];
        assert_eq!(t.rows.len(), 121 * 2);
        let mid = &t.rows[120];
        assert_eq!(mid[0], f(0.0));
        assert_eq!(mid[3], "c20");
        assert_eq!(mid[1].parse::<f64>().unwrap(), 0.0);
        let mid_exact = &t.rows[121];
        assert_eq!(mid_exact[4], "exact");
        assert!(mid_exact[1].parse::<f64>().unwrap().abs() < 1e-12);
    }

    #[test]
    fn sweep_resolution() {
        let mut c = cfg(Scenario::Fig5b);
        let s = resolve_sweep(&c).unwrap().unwrap();
        let v = s.values();
        assert_eq!(v.len(), 61);
        assert!((v[0] - 1e-7).abs() < 1e-20 && (v[60] - 1e-4).abs() < 1e-16);
        c.sweep.variable = Some("banana".into());
        assert!(resolve_sweep(&c).is_err());
        assert!(resolve_sweep(&cfg(Scenario::Mmd)).unwrap().is_none());
        let mut c = cfg(Scenario::Fig5a);
        c.sweep.min = Some(0.0);
        assert!(resolve_sweep(&c).is_err());
    }

    #[test]
    fn mmd_has_both_conventions() {
        let tables = render(&cfg(Scenario::Mmd)).unwrap();
        assert_eq!(tables[0].rows.len(), 1);
        assert_eq!(tables[0].header.len(), 6);
        assert_eq!(tables[1].rows.len(), 4);
        let x: f64 = tables[0].rows[0][0].parse().unwrap();
        assert!(x > 0.875e-12 && x < 3.5e-12, "{x}");
    }

    #[test]
    fn fisher_scenarios() {
        let t = &render(&cfg(Scenario::Fig6)).unwrap()[0];
        assert_eq!(t.rows.len(), 7);
        let e: Vec<f64> = t.rows.iter().map(|r| r[1].parse().unwrap()).collect();
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        let t = &render(&cfg(Scenario::Fig7)).unwrap()[0];
        assert_eq!(t.rows.len(), 22);
        assert_eq!(t.rows[0][1], t.rows[2][1]);
    }

    #[test]
    fn small_scenarios_render() {
        let mie = render(&cfg(Scenario::Mie)).unwrap();
        assert_eq!(mie[1].rows.len(), 181);
        assert!(!mie[0].rows.is_empty());
        let mut c = cfg(Scenario::Ports);
        c.deformation.d_waist_x = 1e-12;
        c.cutoff = 6;
        let p = &render(&c).unwrap()[0];
        assert!(p.rows.iter().any(|r| r[0] == "dark2" && r[1] == "2"));
        let mut c = cfg(Scenario::Ports);
        c.cutoff = 1;
        assert!(matches!(render(&c), Err(crate::Error::ConfigInvalid { .. })));
    }
}
