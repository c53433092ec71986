//! Mode content induced by a deformation of the sphere.
//!
//! A deformation is reduced to three numbers: the change of the waist radius
//! along x and y, and an axial shift of the waist. Positive `d_z` means the
//! waist moved forward along the propagation direction, so the reference
//! plane sees the beam `d_z` further downstream: `u(x, y, d_z)`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hgbasis::{
    axis_factor, mode_profiles_1d, BeamGeometry, GaussHermite, ModeIndex, ModeVector,
    DEFAULT_QUADRATURE_NODES,
};

/// Relative size beyond which a deformation is rejected outright.
pub const HARD_CAP: f64 = 0.5;
/// Relative size up to which the first-order model is trusted.
pub const LINEAR_REGIME: f64 = 0.05;

/// Waist-size changes and waist shift, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub d_waist_x: f64,
    pub d_waist_y: f64,
    pub d_z: f64,
}

impl Deformation {
    /// Checks the hard cap against `geom`.
    pub fn new(d_waist_x: f64, d_waist_y: f64, d_z: f64, geom: &BeamGeometry) -> Result<Self> {
        let def = Self {
            d_waist_x,
            d_waist_y,
            d_z,
        };
        for (name, v) in [
            ("d_waist_x", def.epsilon_x(geom)),
            ("d_waist_y", def.epsilon_y(geom)),
            ("d_z", def.tau(geom)),
        ] {
            if !v.is_finite() || v.abs() >= HARD_CAP {
                return Err(invalid(name, format!("relative size {v:.3} is outside (-0.5, 0.5)")));
            }
        }
        Ok(def)
    }

    pub fn zero() -> Self {
        Self {
            d_waist_x: 0.0,
            d_waist_y: 0.0,
            d_z: 0.0,
        }
    }

    pub fn epsilon_x(&self, geom: &BeamGeometry) -> f64 {
        self.d_waist_x / geom.waist_x()
    }

    pub fn epsilon_y(&self, geom: &BeamGeometry) -> f64 {
        self.d_waist_y / geom.waist_y()
    }

    /// `d_z / z_R` with the geometric-mean Rayleigh range.
    pub fn tau(&self, geom: &BeamGeometry) -> f64 {
        self.d_z / geom.rayleigh()
    }

    /// All three relative sizes within 0.05.
    pub fn in_linear_regime(&self, geom: &BeamGeometry) -> bool {
        [self.epsilon_x(geom), self.epsilon_y(geom), self.tau(geom)]
            .iter()
            .all(|v| v.abs() <= LINEAR_REGIME)
    }
}

/// Where the `d_z` phase on the diagonal is booked in the first-order model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GouyBookkeeping {
    /// `c00 = 1 - 5i d_z / (4 z_R)`; defined for the (0,0) probe only.
    FieldTable,
    /// `-i d_z [3/2 (2n+1)/(k w_x^2) + 3/2 (2m+1)/(k w_y^2)]` for any probe.
    PointerState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderOptions {
    pub bookkeeping: GouyBookkeeping,
    /// Keep the `i d_z` couplings to (n +- 2, m) and (n, m +- 2).
    pub shift_couplings: bool,
    pub cutoff: usize,
}

impl Default for FirstOrderOptions {
    fn default() -> Self {
        Self {
            bookkeeping: GouyBookkeeping::FieldTable,
            shift_couplings: true,
            cutoff: 4,
        }
    }
}

/// First-order mode content of the scattered field for a `probe` mode.
pub fn firstorder_decomposition(
    def: &Deformation,
    geom: &BeamGeometry,
    probe: ModeIndex,
    opts: &FirstOrderOptions,
) -> Result<ModeVector> {
    let required = probe.n.max(probe.m) + 2;
    if opts.cutoff < required {
        return Err(Error::CutoffTooSmall {
            cutoff: opts.cutoff,
            required,
        });
    }
    if !def.in_linear_regime(geom) {
        log::debug!("deformation is outside the linear regime; first-order coefficients are unreliable");
    }
    let ex = def.epsilon_x(geom);
    let ey = def.epsilon_y(geom);
    let k = geom.wavenumber();
    let sx = def.d_z / (2.0 * k * geom.waist_x().powi(2));
    let sy = def.d_z / (2.0 * k * geom.waist_y().powi(2));
    let i = Complex64::new(0.0, 1.0);
    let (n, m) = (probe.n, probe.m);
    let nf = n as f64;
    let mf = m as f64;

    let mut out = ModeVector::zeros(opts.cutoff);
    let diag = match opts.bookkeeping {
        GouyBookkeeping::FieldTable => {
            if probe != ModeIndex::new(0, 0) {
                return Err(invalid("bookkeeping", "the field-table form exists only for the (0,0) probe"));
            }
            -i * 5.0 * def.d_z / (4.0 * geom.rayleigh())
        }
        GouyBookkeeping::PointerState => -i * 3.0 * ((2.0 * nf + 1.0) * sx + (2.0 * mf + 1.0) * sy),
    };
    out.set(probe, Complex64::new(1.0, 0.0) + diag)?;

    let shift = if opts.shift_couplings { 1.0 } else { 0.0 };
    let up = |j: f64| ((j + 1.0) * (j + 2.0)).sqrt();
    let down = |j: f64| (j * (j - 1.0)).sqrt();
    out.add_to(ModeIndex::new(n + 2, m), up(nf) * (ex / 2.0 + i * shift * sx))?;
    out.add_to(ModeIndex::new(n, m + 2), up(mf) * (ey / 2.0 + i * shift * sy))?;
    if n >= 2 {
        out.add_to(ModeIndex::new(n - 2, m), down(nf) * (-ex / 2.0 + i * shift * sx))?;
    }
    if m >= 2 {
        out.add_to(ModeIndex::new(n, m - 2), down(mf) * (-ey / 2.0 + i * shift * sy))?;
    }
    Ok(out)
}

/// Power split of the `d_z`-induced first-order terms for the (0,0) probe:
/// `(fraction in (0,0), fraction in (2,0) and (0,2))`.
pub fn shift_power_split() -> (f64, f64) {
    let diag: f64 = 5.0 / 4.0;
    let off = 1.0 / (2.0 * SQRT_2);
    let total = diag * diag + 2.0 * off * off;
    (diag * diag / total, 2.0 * off * off / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

/// `<X_j | f>` for `j <= n_max` over one transverse axis, with a node-doubling check.
fn project_1d(
    f: &dyn Fn(f64) -> Complex64,
    waist: f64,
    n_max: usize,
) -> Result<Vec<Complex64>> {
    let run = |nodes: usize| {
        let rule = GaussHermite::cached(nodes);
        let (xs, ws) = rule.scaled(waist / SQRT_2);
        let mut c = vec![Complex64::default(); n_max + 1];
        let mut norm = 0.0;
        for (&x, &w) in xs.iter().zip(&ws) {
            let fx = f(x);
            norm += w * fx.norm_sqr();
            for (cj, pj) in c.iter_mut().zip(mode_profiles_1d(n_max, x, waist)) {
                *cj += w * pj * fx;
            }
        }
        (c, norm.sqrt())
    };
    let (coarse, norm) = run(DEFAULT_QUADRATURE_NODES);
    let (fine, _) = run(2 * DEFAULT_QUADRATURE_NODES);
    let change = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let rel_change = change / norm.max(f64::MIN_POSITIVE);
    if rel_change > 1e-9 {
        return Err(Error::QuadratureUnconverged { rel_change });
    }
    Ok(fine)
}

/// Mode content of the field whose waist along `axis` is rescaled by `1 + epsilon`:
/// `u_probe(x / (1 + epsilon), y) / sqrt(1 + epsilon)` for the x axis.
pub fn exact_waist_scaling_coefficients(
    epsilon: f64,
    axis: Axis,
    probe: ModeIndex,
    geom: &BeamGeometry,
    cutoff: usize,
) -> Result<ModeVector> {
    if !epsilon.is_finite() || epsilon.abs() >= HARD_CAP {
        return Err(invalid("epsilon", "relative waist change must lie in (-0.5, 0.5)"));
    }
    if probe.nu() > cutoff {
        return Err(Error::CutoffTooSmall {
            cutoff,
            required: probe.nu(),
        });
    }
    let (order, waist) = match axis {
        Axis::X => (probe.n, geom.waist_x()),
        Axis::Y => (probe.m, geom.waist_y()),
    };
    let s = 1.0 + epsilon;
    let f = move |x: f64| Complex64::new(mode_profiles_1d(order, x / s, waist)[order] / s.sqrt(), 0.0);
    let c = project_1d(&f, waist, cutoff)?;
    let mut out = ModeVector::zeros(cutoff);
    for (j, cj) in c.into_iter().enumerate() {
        let idx = match axis {
            Axis::X => ModeIndex::new(j, probe.m),
            Axis::Y => ModeIndex::new(probe.n, j),
        };
        out.set(idx, cj)?;
    }
    Ok(out)
}

/// Exact decomposition of a waist shift.
#[derive(Debug, Clone)]
pub struct ShiftDecomposition {
    /// Content of `u_probe(x, y, d_z)` in the waist basis at z = 0; equals
    /// `exp(-i d_z P^2 / 2k) u_probe`.
    pub content: ModeVector,
    /// `-[(n + 1/2) atan(d_z / z_Rx) + (m + 1/2) atan(d_z / z_Ry)]`, the phase
    /// of the probe's own Gouy evolution, reported on its own.
    pub global_gouy_phase: f64,
}

/// Mode content after the waist moves by `d_z` along the axis.
pub fn exact_waist_shift_coefficients(
    d_z: f64,
    geom: &BeamGeometry,
    probe: ModeIndex,
    cutoff: usize,
) -> Result<ShiftDecomposition> {
    if !d_z.is_finite() || d_z.abs() >= geom.rayleigh() {
        return Err(invalid("d_z", "waist shift must be smaller than the Rayleigh range"));
    }
    if probe.nu() > cutoff {
        return Err(Error::CutoffTooSmall {
            cutoff,
            required: probe.nu(),
        });
    }
    let k = geom.wavenumber();
    let (wx, zx) = (geom.waist_x(), geom.rayleigh_x());
    let (wy, zy) = (geom.waist_y(), geom.rayleigh_y());
    let fx = move |x: f64| axis_factor(probe.n, x, d_z, wx, zx, k);
    let fy = move |y: f64| axis_factor(probe.m, y, d_z, wy, zy, k);
    let cx = project_1d(&fx, wx, cutoff)?;
    let cy = project_1d(&fy, wy, cutoff)?;
    let mut content = ModeVector::zeros(cutoff);
    for (n, a) in cx.iter().enumerate() {
        for (m, b) in cy.iter().enumerate() {
            content.set(ModeIndex::new(n, m), a * b)?;
        }
    }
    let global_gouy_phase = -((probe.n as f64 + 0.5) * (d_z / zx).atan()
        + (probe.m as f64 + 0.5) * (d_z / zy).atan());
    Ok(ShiftDecomposition {
        content,
        global_gouy_phase,
    })
}

/// Relative error of the linear model `Im c20 = tau / (2 sqrt2)` against the
/// exact shift for the (0,0) probe, at `tau = d_z / z_R`.
pub fn shift_linear_model_error(tau: f64, geom: &BeamGeometry) -> Result<f64> {
    let exact = exact_waist_shift_coefficients(tau * geom.rayleigh_x(), geom, ModeIndex::new(0, 0), 4)?
        .content
        .get(ModeIndex::new(2, 0))
        .im;
    let linear = tau / (2.0 * SQRT_2);
    Ok((exact - linear).abs() / exact.abs())
}
