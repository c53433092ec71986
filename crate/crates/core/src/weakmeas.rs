//! Preselection, postselection and the three monitored output ports.
//!
//! MZI-1 (phase difference `theta`) is read at its dark port for the y-waist
//! change. Its bright port feeds MZI-2 (phase `phi`), whose dark port carries
//! the x-waist change and whose bright port the waist shift.

use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::deform::{firstorder_decomposition, Deformation, FirstOrderOptions, GouyBookkeeping};
use crate::error::{invalid, Error, Result};
use crate::hgbasis::{evolve, BeamGeometry, GeneratorKind, ModeIndex, ModeVector};

/// Largest amplified flow exponent accepted at a dark port.
pub const MAX_FLOW_EXPONENT: f64 = 0.2;

/// Phase differences of the two interferometers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerSetting {
    theta: f64,
    phi: f64,
}

impl InterferometerSetting {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("phi", phi)] {
            if !(v > 0.0 && v < std::f64::consts::PI) {
                return Err(invalid(name, format!("{v} is outside (0, pi)")));
            }
        }
        Ok(Self { theta, phi })
    }

    /// Setting whose dark ports postselect with probabilities `p1` and `p2`.
    pub fn from_postselection(p1: f64, p2: f64) -> Result<Self> {
        if !(p1 > 0.0 && p2 > 0.0 && p1 + p2 < 1.0) {
            return Err(invalid("postselection", "need p1, p2 > 0 and p1 + p2 < 1"));
        }
        let theta = 2.0 * p1.sqrt().asin();
        let phi = 2.0 * (p2 / (1.0 - p1)).sqrt().asin();
        Self::new(theta, phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Weak values and postselection probabilities of the three ports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValueSet {
    pub a_w1: Complex64,
    pub a_w2: Complex64,
    pub a_w3: Complex64,
    pub p_s1: f64,
    pub p_s2: f64,
    pub p_s3: f64,
}

impl WeakValueSet {
    /// `(A_W, P_s)` of port `j` in 1..=3.
    pub fn port(&self, j: usize) -> (Complex64, f64) {
        match j {
            1 => (self.a_w1, self.p_s1),
            2 => (self.a_w2, self.p_s2),
            _ => (self.a_w3, self.p_s3),
        }
    }
}

// Two-path states in the (counterclockwise, clockwise) basis; two interferometers
// use the product basis (ccw1 ccw2, ccw1 cw2, cw1 ccw2, cw1 cw2).
type Path2 = [Complex64; 2];
type Path4 = [Complex64; 4];

fn product(a: Path2, b: Path2) -> Path4 {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

fn braket<const N: usize>(f: &[Complex64; N], op: &[f64; N], i: &[Complex64; N]) -> Complex64 {
    f.iter().zip(op).zip(i).map(|((f, o), i)| f.conj() * o * i).sum()
}

fn postselection_amplitudes(setting: &InterferometerSetting) -> [(Complex64, Complex64); 3] {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let e = |a: f64| Complex64::from_polar(half, a / 2.0);
    let plus: Path2 = [Complex64::new(half, 0.0); 2];
    let (t, p) = (setting.theta, setting.phi);
    let f1: Path2 = [e(t), -e(-t)];
    let bright1: Path2 = [e(t), e(-t)];
    let dark2: Path2 = [e(p), -e(-p)];
    let bright2: Path2 = [e(p), e(-p)];

    // A1 = sigma_z on path 1; A2 = sigma_z on path 2; A3 = identity
    let a1 = [1.0, -1.0];
    let a2 = [1.0, -1.0, 1.0, -1.0];
    let a3 = [1.0; 4];
    let i12 = product(plus, plus);
    let f2 = product(bright1, dark2);
    let f3 = product(bright1, bright2);
    [
        (braket(&f1, &a1, &plus), braket(&f1, &[1.0, 1.0], &plus)),
        (braket(&f2, &a2, &i12), braket(&f2, &a3, &i12)),
        (braket(&f3, &a3, &i12), braket(&f3, &a3, &i12)),
    ]
}

/// Weak values `<f|A|i> / <f|i>` from the explicit path states.
pub fn weak_values(setting: &InterferometerSetting) -> WeakValueSet {
    let [(n1, d1), (n2, d2), (n3, d3)] = postselection_amplitudes(setting);
    WeakValueSet {
        a_w1: n1 / d1,
        a_w2: n2 / d2,
        a_w3: n3 / d3,
        p_s1: d1.norm_sqr(),
        p_s2: d2.norm_sqr(),
        p_s3: d3.norm_sqr(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    Dark1,
    Dark2,
    Bright2,
}

impl Port {
    pub const ALL: [Port; 3] = [Port::Dark1, Port::Dark2, Port::Bright2];

    pub fn label(&self) -> &'static str {
        match self {
            Port::Dark1 => "dark1",
            Port::Dark2 => "dark2",
            Port::Bright2 => "bright2",
        }
    }

    /// 1, 2, 3 in the order the deformations are read out.
    pub fn number(&self) -> usize {
        match self {
            Port::Dark1 => 1,
            Port::Dark2 => 2,
            Port::Bright2 => 3,
        }
    }
}

/// Field leaving one port: `prefactor * exp(i global_gouy_phase) * state`.
#[derive(Debug, Clone, PartialEq)]
pub struct PortState {
    pub port: Port,
    pub prefactor: Complex64,
    pub state: ModeVector,
    pub global_gouy_phase: f64,
}

impl PortState {
    /// The full output amplitude vector with prefactor and phase applied.
    pub fn field(&self) -> ModeVector {
        self.state
            .scaled(self.prefactor * Complex64::from_polar(1.0, self.global_gouy_phase))
    }

    /// Power leaving the port, relative to the input.
    pub fn power(&self) -> f64 {
        self.prefactor.norm_sqr() * self.state.norm_sqr()
    }
}

/// Postselection amplitudes, as multiplying the outgoing field.
fn prefactors(setting: &InterferometerSetting) -> [Complex64; 3] {
    let amps = postselection_amplitudes(setting);
    [amps[0].1.conj(), amps[1].1.conj(), amps[2].1.conj()]
}

fn check_flow(port: &'static str, exponent: f64) -> Result<()> {
    if exponent.abs() > MAX_FLOW_EXPONENT {
        return Err(Error::AmplifiedFlowDiverged { port, exponent });
    }
    Ok(())
}

fn check_probe(probe: &ModeVector) -> Result<()> {
    if !probe.is_normalized() {
        return Err(invalid("probe", format!("norm {} is not 1", probe.norm())));
    }
    Ok(())
}

fn cot(a: f64) -> f64 {
    1.0 / a.tan()
}

/// Gouy rate `(n + 1/2)/z_Rx + (m + 1/2)/z_Ry` of one mode.
fn gouy_rate(idx: ModeIndex, geom: &BeamGeometry) -> f64 {
    (idx.n as f64 + 0.5) / geom.rayleigh_x() + (idx.m as f64 + 0.5) / geom.rayleigh_y()
}

/// Apply the Gouy evolution `exp(-i d_z rate(n, m))` mode by mode, split into a
/// global phase (the rate of the probe's strongest mode) and the relative rest.
fn split_gouy(probe: &ModeVector, state: &ModeVector, d_z: f64, geom: &BeamGeometry) -> (ModeVector, f64) {
    let reference = probe
        .iter()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(idx, _)| gouy_rate(idx, geom))
        .unwrap_or_default();
    let mut out = state.clone();
    for (idx, c) in state.iter() {
        let phase = -d_z * (gouy_rate(idx, geom) - reference);
        if phase != 0.0 {
            let _ = out.set(idx, c * Complex64::from_polar(1.0, phase));
        }
    }
    (out, -d_z * reference)
}

/// Output states at dark port 1, dark port 2 and bright port 2.
///
/// The dark-port flows are the full exponentials with the amplified
/// exponents `eps_y cot(theta/2)` and `eps_x cot(phi/2)`.
pub fn port_states(
    probe: &ModeVector,
    def: &Deformation,
    setting: &InterferometerSetting,
    geom: &BeamGeometry,
) -> Result<[PortState; 3]> {
    check_probe(probe)?;
    let [p1, p2, p3] = prefactors(setting);
    let e1 = def.epsilon_y(geom) * cot(setting.theta / 2.0);
    let e2 = def.epsilon_x(geom) * cot(setting.phi / 2.0);
    check_flow("dark1", e1)?;
    check_flow("dark2", e2)?;
    let dark1 = evolve(GeneratorKind::ScaleY, geom, e1, probe)?.state;
    let dark2 = evolve(GeneratorKind::ScaleX, geom, e2, probe)?.state;
    let shifted = evolve(GeneratorKind::Shear, geom, def.d_z, probe)?.state;
    let (bright2, gouy) = split_gouy(probe, &shifted, def.d_z, geom);
    Ok([
        PortState {
            port: Port::Dark1,
            prefactor: p1,
            state: dark1,
            global_gouy_phase: 0.0,
        },
        PortState {
            port: Port::Dark2,
            prefactor: p2,
            state: dark2,
            global_gouy_phase: 0.0,
        },
        PortState {
            port: Port::Bright2,
            prefactor: p3,
            state: bright2,
            global_gouy_phase: gouy,
        },
    ])
}

/// Port states for a single higher-order probe mode `u_nm`.
pub fn higher_order_port_states(
    probe: ModeIndex,
    def: &Deformation,
    setting: &InterferometerSetting,
    geom: &BeamGeometry,
    cutoff: usize,
) -> Result<[PortState; 3]> {
    port_states(&ModeVector::basis(probe, cutoff)?, def, setting, geom)
}

/// The same ports built by expanding the scattered field to first order
/// mode by mode, with the Gouy phase folded into the diagonal.
pub fn field_route_port_states(
    probe: &ModeVector,
    def: &Deformation,
    setting: &InterferometerSetting,
    geom: &BeamGeometry,
) -> Result<[PortState; 3]> {
    check_probe(probe)?;
    let [p1, p2, p3] = prefactors(setting);
    let e1 = def.epsilon_y(geom) * cot(setting.theta / 2.0);
    let e2 = def.epsilon_x(geom) * cot(setting.phi / 2.0);
    check_flow("dark1", e1)?;
    check_flow("dark2", e2)?;
    let expand = |d: Deformation| -> Result<ModeVector> {
        let cutoff = probe.cutoff() + 2;
        let opts = FirstOrderOptions {
            bookkeeping: GouyBookkeeping::PointerState,
            shift_couplings: true,
            cutoff,
        };
        let mut out = ModeVector::zeros(cutoff);
        for (idx, c) in probe.iter() {
            if c == Complex64::default() {
                continue;
            }
            let piece = firstorder_decomposition(&d, geom, idx, &opts)?;
            for (j, v) in piece.iter() {
                out.add_to(j, c * v)?;
            }
        }
        Ok(out.with_cutoff(probe.cutoff()))
    };
    let raw = |dwx: f64, dwy: f64, dz: f64| Deformation {
        d_waist_x: dwx,
        d_waist_y: dwy,
        d_z: dz,
    };
    let d1 = expand(raw(0.0, e1 * geom.waist_y(), 0.0))?;
    let d2 = expand(raw(e2 * geom.waist_x(), 0.0, 0.0))?;
    let b2 = expand(raw(0.0, 0.0, def.d_z))?;
    Ok([
        PortState {
            port: Port::Dark1,
            prefactor: p1,
            state: d1,
            global_gouy_phase: 0.0,
        },
        PortState {
            port: Port::Dark2,
            prefactor: p2,
            state: d2,
            global_gouy_phase: 0.0,
        },
        PortState {
            port: Port::Bright2,
            prefactor: p3,
            state: b2,
            global_gouy_phase: 0.0,
        },
    ])
}

/// Mode converter acting as a sign flip on one mode's amplitude.
///
/// `fidelity = 1` is the ideal flip; `0` leaves the state untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeConverter {
    fidelity: f64,
}

impl ModeConverter {
    pub fn new(fidelity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fidelity) {
            return Err(invalid("fidelity", "must lie in [0, 1]"));
        }
        Ok(Self { fidelity })
    }

    pub fn ideal() -> Self {
        Self { fidelity: 1.0 }
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn apply(&self, state: &ModeVector, target: ModeIndex) -> ModeVector {
        let mut out = state.clone();
        let c = out.get(target);
        // out of range targets are left alone
        let _ = out.set(target, c * (1.0 - 2.0 * self.fidelity));
        out
    }
}

#[cfg(test)]
fn bright1(
    probe: &ModeVector,
    def: &Deformation,
    setting: &InterferometerSetting,
    geom: &BeamGeometry,
) -> Result<PortState> {
    let amp = Complex64::new((setting.theta / 2.0).cos(), 0.0);
    let e = -def.epsilon_y(geom) * (setting.theta / 2.0).tan();
    let state = evolve(GeneratorKind::ScaleY, geom, e, probe)?.state;
    Ok(PortState {
        port: Port::Bright2,
        prefactor: amp,
        state,
        global_gouy_phase: 0.0,
    })
}
