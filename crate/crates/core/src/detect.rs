//! Balanced homodyne readout of the three ports and the resulting minimum
//! measurable deformations (MMDs).
//!
//! Photon numbers are available in two conventions: `Paper` uses
//! `N = P lambda / (hbar c tau_r)` and `Physical` uses the photon energy
//! `2 pi hbar c / lambda`, so the two differ by exactly `2 pi`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::deform::Deformation;
use crate::error::{invalid, Error, Result};
use crate::hgbasis::{BeamGeometry, ModeIndex};
use crate::weakmeas::{weak_values, InterferometerSetting, Port, PortState, WeakValueSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhotonConvention {
    #[default]
    Paper,
    Physical,
}

impl PhotonConvention {
    pub const ALL: [PhotonConvention; 2] = [PhotonConvention::Paper, PhotonConvention::Physical];

    pub fn label(&self) -> &'static str {
        match self {
            PhotonConvention::Paper => "paper",
            PhotonConvention::Physical => "physical",
        }
    }
}

/// How the fraction of the probe hitting the sphere is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClippingConvention {
    /// Integral of the field amplitude `u00` over the waist box.
    #[default]
    Amplitude,
    /// Integral of `|u00|^2`.
    Intensity,
}

impl ClippingConvention {
    pub const ALL: [ClippingConvention; 2] = [ClippingConvention::Amplitude, ClippingConvention::Intensity];

    pub fn label(&self) -> &'static str {
        match self {
            ClippingConvention::Amplitude => "amplitude",
            ClippingConvention::Intensity => "intensity",
        }
    }
}

/// Probe, local oscillators and detector bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSetting {
    pub probe_power: f64,
    pub probe_wavelength: f64,
    pub resolution_bandwidth: f64,
    pub lo_power: [f64; 3],
    pub lo_wavelength: [f64; 3],
    /// Local-oscillator modes of BHD-1..3.
    pub lo_modes: [ModeIndex; 3],
    pub probe_order: ModeIndex,
    pub photon_convention: PhotonConvention,
    pub clipping: ClippingConvention,
}

impl Default for DetectionSetting {
    fn default() -> Self {
        Self::new(5e-6, 125e-6, 1.0).expect("valid defaults")
    }
}

impl DetectionSetting {
    /// Probe of order (0,0), 1 mW local oscillators at the probe wavelength.
    pub fn new(probe_power: f64, probe_wavelength: f64, resolution_bandwidth: f64) -> Result<Self> {
        let s = Self {
            probe_power,
            probe_wavelength,
            resolution_bandwidth,
            lo_power: [1e-3; 3],
            lo_wavelength: [probe_wavelength; 3],
            lo_modes: signal_modes(ModeIndex::new(0, 0)),
            probe_order: ModeIndex::new(0, 0),
            photon_convention: PhotonConvention::Paper,
            clipping: ClippingConvention::Amplitude,
        };
        s.validate()?;
        Ok(s)
    }

    /// Change the probe order and retune the local oscillators to match.
    pub fn with_probe_order(mut self, probe: ModeIndex) -> Self {
        self.probe_order = probe;
        self.lo_modes = signal_modes(probe);
        self
    }

    pub fn with_convention(mut self, convention: PhotonConvention) -> Self {
        self.photon_convention = convention;
        self
    }

    pub fn with_clipping(mut self, clipping: ClippingConvention) -> Self {
        self.clipping = clipping;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.probe_power >= 0.0 && self.probe_power.is_finite()) {
            return Err(invalid("probe_power", "must be >= 0"));
        }
        if !(self.probe_wavelength > 0.0) {
            return Err(invalid("probe_wavelength", "must be positive"));
        }
        if !(self.resolution_bandwidth > 0.0) {
            return Err(invalid("resolution_bandwidth", "must be positive"));
        }
        if self.lo_power.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(invalid("lo_power", "must be >= 0"));
        }
        if self.lo_wavelength.iter().any(|l| !(*l > 0.0)) {
            return Err(invalid("lo_wavelength", "must be positive"));
        }
        Ok(())
    }

    /// Photons scattered into the detection path per resolution time.
    pub fn scattered_photons(&self, geom: &BeamGeometry) -> f64 {
        photon_number(
            scattered_power(self.probe_power, geom, self.clipping),
            self.probe_wavelength,
            self.resolution_bandwidth,
            self.photon_convention,
        )
    }

    pub fn lo_photons(&self, which: usize) -> f64 {
        photon_number(
            self.lo_power[which - 1],
            self.lo_wavelength[which - 1],
            self.resolution_bandwidth,
            self.photon_convention,
        )
    }
}

/// Signal modes of BHD-1..3 for a given probe: (n, m+2), (n+2, m), (n, m).
pub fn signal_modes(probe: ModeIndex) -> [ModeIndex; 3] {
    [
        ModeIndex::new(probe.n, probe.m + 2),
        ModeIndex::new(probe.n + 2, probe.m),
        probe,
    ]
}

/// Sensing gains `(n^2+n+1, m^2+m+1, nu^2+nu+1)` with `nu = max(n, m)`.
pub fn sensing_gains(probe: ModeIndex) -> (f64, f64, f64) {
    let g = |j: usize| (j * j + j + 1) as f64;
    (g(probe.n), g(probe.m), g(probe.nu()))
}

/// Fraction of the probe power intercepted by the sphere, over the box `|x| <= w_x, |y| <= w_y`.
pub fn clipping_ratio(clipping: ClippingConvention) -> f64 {
    match clipping {
        // u00 ~ exp(-x^2/w^2): erf(1) per axis
        ClippingConvention::Amplitude => libm::erf(1.0).powi(2),
        // |u00|^2 ~ exp(-2x^2/w^2): erf(sqrt 2) per axis
        ClippingConvention::Intensity => libm::erf(SQRT_2).powi(2),
    }
}

/// Power of the scattered beam, `P_in` times the clipping ratio. The ratio
/// is scale free, so it does not depend on the waists in `geom`.
pub fn scattered_power(probe_power: f64, _geom: &BeamGeometry, clipping: ClippingConvention) -> f64 {
    probe_power * clipping_ratio(clipping)
}

/// Photons per resolution time `1 / tau_r`.
pub fn photon_number(power: f64, wavelength: f64, resolution_bandwidth: f64, convention: PhotonConvention) -> f64 {
    let paper = power * wavelength / (HBAR * SPEED_OF_LIGHT * resolution_bandwidth);
    match convention {
        PhotonConvention::Paper => paper,
        PhotonConvention::Physical => paper / (2.0 * PI),
    }
}

/// Mean photon-number difference and its shot-noise standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BhdSignal {
    pub mean: f64,
    pub noise_std: f64,
}

impl BhdSignal {
    pub fn snr(&self) -> f64 {
        (self.mean / self.noise_std).powi(2)
    }
}

/// Photon-number difference of BHD-`which` reading `port`.
///
/// The mean is the printed linear signal, scaled by the probe's sensing gain:
/// `sqrt(N_LO) d_w |A_W| sqrt(N P_s gain) / (sqrt2 w)` for the waists and
/// `sqrt(N_LO) 5 d_z |A_W| sqrt(N P_s gain) / (4 z_R)` for the shift.
/// The noise is `sqrt(N_LO) / 2` (coherent light, unit quadrature variance).
pub fn bhd_signal(
    port: &PortState,
    which: usize,
    setting: &DetectionSetting,
    wv: &WeakValueSet,
    def: &Deformation,
    geom: &BeamGeometry,
) -> Result<BhdSignal> {
    if !(1..=3).contains(&which) {
        return Err(invalid("which", "BHD index must be 1, 2 or 3"));
    }
    if port.port.number() != which {
        return Err(invalid("which", format!("BHD-{which} cannot read port {}", port.port.label())));
    }
    let expected = signal_modes(setting.probe_order)[which - 1];
    let got = setting.lo_modes[which - 1];
    if got != expected {
        return Err(Error::LoMismatch { which, expected, got });
    }
    let n_lo = setting.lo_photons(which);
    let n = setting.scattered_photons(geom);
    let (gx, gy, gz) = sensing_gains(setting.probe_order);
    let (a_w, p_s) = wv.port(which);
    let core = a_w.norm() * (n * p_s).sqrt();
    let signal = match port.port {
        Port::Dark1 => def.d_waist_y * core * gy.sqrt() / (SQRT_2 * geom.waist_y()),
        Port::Dark2 => def.d_waist_x * core * gx.sqrt() / (SQRT_2 * geom.waist_x()),
        Port::Bright2 => 5.0 * def.d_z * core * gz.sqrt() / (4.0 * geom.rayleigh()),
    };
    Ok(BhdSignal {
        mean: n_lo.sqrt() * signal,
        noise_std: n_lo.sqrt() / 2.0,
    })
}

/// Minimum measurable deformations (SNR = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmdResult {
    pub d_waist_x_min: f64,
    pub d_waist_y_min: f64,
    pub d_z_min: f64,
    /// `(n^2+n+1, m^2+m+1, nu^2+nu+1)`.
    pub gains: (f64, f64, f64),
}

/// MMDs for a setting, from the weak values of `ifm` and the scattered photon number.
pub fn mmd(setting: &DetectionSetting, ifm: &InterferometerSetting, geom: &BeamGeometry) -> Result<MmdResult> {
    setting.validate()?;
    let n = setting.scattered_photons(geom);
    if !(n > 0.0) {
        return Err(invalid("probe_power", "no scattered photons; MMDs are unbounded"));
    }
    let wv = weak_values(ifm);
    let gains = sensing_gains(setting.probe_order);
    Ok(MmdResult {
        d_waist_y_min: geom.waist_y() / wv.a_w1.norm() / (2.0 * n * wv.p_s1).sqrt() / gains.1.sqrt(),
        d_waist_x_min: geom.waist_x() / wv.a_w2.norm() / (2.0 * n * wv.p_s2).sqrt() / gains.0.sqrt(),
        d_z_min: 2.0 * geom.rayleigh() / wv.a_w3.norm() / (5.0 * (n * wv.p_s3).sqrt()) / gains.2.sqrt(),
        gains,
    })
}

/// MMDs under every photon/clipping convention pair.
pub fn mmd_conventions(
    setting: &DetectionSetting,
    ifm: &InterferometerSetting,
    geom: &BeamGeometry,
) -> Result<Vec<(PhotonConvention, ClippingConvention, MmdResult)>> {
    let mut out = Vec::new();
    for photon in PhotonConvention::ALL {
        for clip in ClippingConvention::ALL {
            let s = setting.clone().with_convention(photon).with_clipping(clip);
            out.push((photon, clip, mmd(&s, ifm, geom)?));
        }
    }
    Ok(out)
}
