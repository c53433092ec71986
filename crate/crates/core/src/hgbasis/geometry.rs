use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Probe beam geometry at the reference plane.
///
/// The waists may differ along x and y; each axis carries its own Rayleigh
/// length, curvature and Gouy phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    wavelength: f64,
    waist_x: f64,
    waist_y: f64,
    wavenumber: f64,
    rayleigh_x: f64,
    rayleigh_y: f64,
}

impl BeamGeometry {
    pub fn new(wavelength: f64, waist_x: f64, waist_y: f64) -> Result<Self> {
        for (name, v) in [
            ("wavelength", wavelength),
            ("waist_x", waist_x),
            ("waist_y", waist_y),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and positive, got {v}")));
            }
        }
        Ok(Self {
            wavelength,
            waist_x,
            waist_y,
            wavenumber: 2.0 * PI / wavelength,
            rayleigh_x: PI * waist_x * waist_x / wavelength,
            rayleigh_y: PI * waist_y * waist_y / wavelength,
        })
    }

    pub fn isotropic(wavelength: f64, waist: f64) -> Result<Self> {
        Self::new(wavelength, waist, waist)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn waist_x(&self) -> f64 {
        self.waist_x
    }

    pub fn waist_y(&self) -> f64 {
        self.waist_y
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn rayleigh_x(&self) -> f64 {
        self.rayleigh_x
    }

    pub fn rayleigh_y(&self) -> f64 {
        self.rayleigh_y
    }

    /// Geometric mean of the two Rayleigh lengths; equals z_R for a round beam.
    pub fn rayleigh(&self) -> f64 {
        (self.rayleigh_x * self.rayleigh_y).sqrt()
    }

    pub fn radius_x(&self, z: f64) -> f64 {
        beam_radius(self.waist_x, self.rayleigh_x, z)
    }

    pub fn radius_y(&self, z: f64) -> f64 {
        beam_radius(self.waist_y, self.rayleigh_y, z)
    }

    /// Wavefront curvature radius along x; infinite at the waist.
    pub fn curvature_x(&self, z: f64) -> f64 {
        curvature(self.rayleigh_x, z)
    }

    pub fn curvature_y(&self, z: f64) -> f64 {
        curvature(self.rayleigh_y, z)
    }

    pub fn gouy_x(&self, z: f64) -> f64 {
        (z / self.rayleigh_x).atan()
    }

    pub fn gouy_y(&self, z: f64) -> f64 {
        (z / self.rayleigh_y).atan()
    }
}

fn beam_radius(waist: f64, rayleigh: f64, z: f64) -> f64 {
    waist * (1.0 + (z / rayleigh).powi(2)).sqrt()
}

fn curvature(rayleigh: f64, z: f64) -> f64 {
    if z == 0.0 {
        f64::INFINITY
    } else {
        z + rayleigh * rayleigh / z
    }
}

/// Focal length of the cylindrical-lens mode converter for a given waist,
/// together with the lens separation (sqrt(2) f).
pub fn converter_focal_length(waist: f64, wavelength: f64) -> Result<(f64, f64)> {
    if !(waist.is_finite() && waist > 0.0) {
        return Err(invalid("waist", "must be finite and positive"));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(invalid("wavelength", "must be finite and positive"));
    }
    let rayleigh = PI * waist * waist / wavelength;
    let f = rayleigh / (1.0 + std::f64::consts::FRAC_1_SQRT_2);
    Ok((f, std::f64::consts::SQRT_2 * f))
}
