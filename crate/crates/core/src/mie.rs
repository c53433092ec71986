//! Mie scattering by a homogeneous sphere.
//!
//! Riccati-Bessel functions follow the second-kind Hankel convention:
//! `Phi_l(x) = sqrt(pi x / 2) J_{l+1/2}(x)` and
//! `Psi_l(x) = sqrt(pi x / 2) H^(2)_{l+1/2}(x) = Phi_l + i chi_l` with
//! `chi_0 = cos x`. Their Wronskian `Phi Psi' - Phi' Psi` is `-i`.
//!
//! With this convention the coefficients are the complex conjugates of the
//! usual `exp(-i w t)` ones. The relative index is conjugated internally
//! so that `Im(relative_index) >= 0` still means an absorbing sphere.
//!
//! The scattered-field prefactor [`scattered_prefactor`] carries an unusual
//! `sqrt(hbar w / (2 eps0 c T))` factor with `T` the environment
//! temperature. It is evaluated as written and used only for field
//! magnitude reports; every ratio downstream is independent of it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{invalid, Error, Result};

/// Sphere, surrounding-relative index and probe wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MieMedium {
    radius: f64,
    relative_index: Complex64,
    wavelength: f64,
    size_parameter: f64,
}

impl MieMedium {
    pub fn new(radius: f64, relative_index: Complex64, wavelength: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", "must be positive and finite"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(invalid("wavelength", "must be positive and finite"));
        }
        if !(relative_index.norm() > 0.0) || !relative_index.is_finite() {
            return Err(invalid("relative_index", "must be finite and nonzero"));
        }
        if relative_index.im < 0.0 {
            return Err(invalid("relative_index", "imaginary part must be >= 0 (gain media are not supported)"));
        }
        Ok(Self {
            radius,
            relative_index,
            wavelength,
            size_parameter: 2.0 * PI * radius / wavelength,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn relative_index(&self) -> Complex64 {
        self.relative_index
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// `2 pi r / lambda`.
    pub fn size_parameter(&self) -> f64 {
        self.size_parameter
    }

    /// Number of terms summed in the amplitude series.
    pub fn order_cutoff(&self) -> usize {
        order_cutoff(self.size_parameter)
    }
}

/// Mie coefficients of one multipole order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MieCoefficients {
    pub order: usize,
    pub a: Complex64,
    pub b: Complex64,
}

/// `ceil(x + 4 x^(1/3) + 2)`.
pub fn order_cutoff(x: f64) -> usize {
    (x + 4.0 * x.cbrt() + 2.0).ceil() as usize
}

/// Riccati-Bessel values and derivatives `(Phi, Phi', Psi, Psi')` of order `order`.
pub fn riccati_bessel(order: usize, x: Complex64) -> Result<(Complex64, Complex64, Complex64, Complex64)> {
    if !(x.norm() > 0.0) || !x.is_finite() {
        return Err(invalid("x", "must be finite and nonzero"));
    }
    let limit = order_cutoff(x.norm()) + 20;
    if order > limit {
        return Err(Error::OrderOverflow { order, limit });
    }
    let phi = phi_table(order, x);
    let chi = chi_table(order, x);
    let i = Complex64::new(0.0, 1.0);
    let psi = |l: usize| phi[l] + i * chi[l];
    Ok(riccati_at(order, x, &phi, &psi))
}

fn riccati_at(
    order: usize,
    x: Complex64,
    phi: &[Complex64],
    psi: &dyn Fn(usize) -> Complex64,
) -> (Complex64, Complex64, Complex64, Complex64) {
    let l = order as f64;
    if order == 0 {
        // Phi_0' = cos x; Psi_0 = sin x + i cos x has derivative cos x - i sin x
        let i = Complex64::new(0.0, 1.0);
        return (phi[0], x.cos(), psi(0), x.cos() - i * x.sin());
    }
    let dphi = phi[order - 1] - phi[order] * l / x;
    let dpsi = psi(order - 1) - psi(order) * l / x;
    (phi[order], dphi, psi(order), dpsi)
}

/// `Phi_0..=Phi_n` by Miller's downward recurrence.
fn phi_table(n: usize, x: Complex64) -> Vec<Complex64> {
    let ax = x.norm();
    let start = (n as f64).max(ax) as usize + (4.0 * ax.cbrt()).ceil() as usize + 30;
    let mut out = vec![Complex64::default(); n + 1];
    let mut next = Complex64::default();
    let mut cur = Complex64::new(1.0, 0.0);
    for l in (1..=start).rev() {
        // Phi_{l-1} = (2l+1)/x Phi_l - Phi_{l+1}
        let prev = cur * (2 * l + 1) as f64 / x - next;
        next = cur;
        cur = prev;
        if l - 1 <= n {
            out[l - 1] = cur;
        }
        if l <= n {
            out[l] = next;
        }
        let big = cur.norm();
        if big > 1e100 {
            let s = 1.0 / big;
            cur *= s;
            next *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    // cur = Phi_0 and next = Phi_1 up to a common factor
    let sin = x.sin();
    let phi1 = sin / x - x.cos();
    let scale = if sin.norm() >= phi1.norm() {
        sin / cur
    } else {
        phi1 / next
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// `chi_0..=chi_n` by upward recurrence from `cos x` and `cos x / x + sin x`.
fn chi_table(n: usize, x: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(x.cos());
    if n >= 1 {
        out.push(x.cos() / x + x.sin());
    }
    for l in 1..n {
        let v = out[l] * (2 * l + 1) as f64 / x - out[l - 1];
        out.push(v);
    }
    out
}

/// Mie coefficients `a_l`, `b_l` of one order.
pub fn mie_coefficients(order: usize, medium: &MieMedium) -> Result<MieCoefficients> {
    if order == 0 {
        return Err(invalid("order", "Mie orders start at 1"));
    }
    let limit = medium.order_cutoff();
    if order > limit {
        return Err(Error::OrderOverflow { order, limit });
    }
    Ok(all_coefficients(medium, order)?.pop().expect("non-empty"))
}

/// Coefficients for orders `1..=medium.order_cutoff()`.
pub fn mie_coefficient_series(medium: &MieMedium) -> Result<Vec<MieCoefficients>> {
    all_coefficients(medium, medium.order_cutoff())
}

fn all_coefficients(medium: &MieMedium, n_max: usize) -> Result<Vec<MieCoefficients>> {
    let alpha = Complex64::new(medium.size_parameter, 0.0);
    let m = medium.relative_index.conj();
    let inner = m * alpha;
    let phi_out = phi_table(n_max, alpha);
    let chi_out = chi_table(n_max, alpha);
    let phi_in = phi_table(n_max, inner);
    let i = Complex64::new(0.0, 1.0);
    let psi_out = |l: usize| phi_out[l] + i * chi_out[l];
    let no_psi = |_: usize| Complex64::default();
    let mut out = Vec::with_capacity(n_max);
    for l in 1..=n_max {
        let (p, dp, s, ds) = riccati_at(l, alpha, &phi_out, &psi_out);
        let (pm, dpm, _, _) = riccati_at(l, inner, &phi_in, &no_psi);
        let a_num = p * dpm - m * dp * pm;
        let a_den = s * dpm - m * ds * pm;
        let b_num = m * p * dpm - dp * pm;
        let b_den = m * s * dpm - ds * pm;
        if a_den.norm() < 1e-30 || b_den.norm() < 1e-30 {
            return Err(Error::DegenerateDenominator { order: l });
        }
        out.push(MieCoefficients {
            order: l,
            a: a_num / a_den,
            b: b_num / b_den,
        });
    }
    Ok(out)
}

/// Angular functions `pi_l(cos t)` and `tau_l(cos t)` for `l = 1..=n`
/// (index 0 holds `pi_0 = 0`, `tau_0 = 0`).
pub fn angular_functions(n: usize, theta: f64) -> (Vec<f64>, Vec<f64>) {
    let mu = theta.cos();
    let mut pi = vec![0.0; n + 1];
    let mut tau = vec![0.0; n + 1];
    if n >= 1 {
        pi[1] = 1.0;
        tau[1] = mu;
    }
    for l in 2..=n {
        let lf = l as f64;
        pi[l] = (2.0 * lf - 1.0) / (lf - 1.0) * mu * pi[l - 1] - lf / (lf - 1.0) * pi[l - 2];
        tau[l] = lf * mu * pi[l] - (lf + 1.0) * pi[l - 1];
    }
    (pi, tau)
}

/// Amplitude functions `(s1, s2)` at scattering angle `theta` in [0, pi].
pub fn amplitude_functions(theta: f64, medium: &MieMedium) -> Result<(Complex64, Complex64)> {
    amplitude_functions_to(theta, medium, medium.order_cutoff())
}

/// As [`amplitude_functions`] but summing exactly `n_max` orders.
pub fn amplitude_functions_to(theta: f64, medium: &MieMedium, n_max: usize) -> Result<(Complex64, Complex64)> {
    if !(0.0..=PI).contains(&theta) {
        return Err(invalid("theta", "scattering angle must lie in [0, pi]"));
    }
    let coeffs = all_coefficients(medium, n_max)?;
    let (pi, tau) = angular_functions(n_max, theta);
    let mut s1 = Complex64::default();
    let mut s2 = Complex64::default();
    for c in &coeffs {
        let l = c.order;
        let w = (2 * l + 1) as f64 / (l * (l + 1)) as f64;
        s1 += (c.a * pi[l] + c.b * tau[l]) * w;
        s2 += (c.a * tau[l] + c.b * pi[l]) * w;
    }
    Ok((s1, s2))
}

/// Scattered-field prefactor
/// `M = i sqrt(hbar w / (2 eps0 c T)) (lambda / (2 pi z)) (|s1| + |s2|) / 2`.
pub fn scattered_prefactor(
    medium: &MieMedium,
    distance: f64,
    theta: f64,
    probe_frequency: f64,
    temperature: f64,
) -> Result<Complex64> {
    if !(distance > 0.0) {
        return Err(invalid("distance", "must be positive"));
    }
    if !(temperature > 0.0) {
        return Err(invalid("temperature", "must be positive"));
    }
    if !(probe_frequency > 0.0) {
        return Err(invalid("probe_frequency", "must be positive"));
    }
    let (s1, s2) = amplitude_functions(theta, medium)?;
    let root = (HBAR * probe_frequency / (2.0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * temperature)).sqrt();
    let magnitude = root * medium.wavelength / (2.0 * PI * distance) * 0.5 * (s1.norm() + s2.norm());
    Ok(Complex64::new(0.0, magnitude))
}
