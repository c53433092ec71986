//! Hermite-Gaussian modes, Gauss-Hermite overlaps and the scaling/shear
//! generators acting on truncated mode vectors.
//!
//! Transverse modes follow
//!
//! ```text
//! u_nm(x,y,z) = X_n(x,z) Y_m(y,z)
//! X_n(x,z)    = (2/pi)^(1/4) / sqrt(2^n n! w_x(z)) H_n(sqrt2 x / w_x(z)) exp(-x^2/w_x(z)^2)
//!               * exp(i k x^2 / (2 R_x(z))) * exp(-i (n + 1/2) atan(z / z_Rx))
//! ```
//!
//! which is the round-beam mode with its Gouy phase split per axis. The
//! paraxial convention is `d/dz u = (i / 2k) laplacian u`, so propagating a
//! field by `dz` is `exp(-i dz P^2 / 2k)` with `P = -i grad`.

mod generator;
mod geometry;
mod modes;
mod quadrature;

use num_complex::Complex64;

pub use generator::{
    apply_evolution, cached_generator, evolve, generator, Evolution, GeneratorKind,
    GeneratorMatrix,
};
pub use geometry::{converter_focal_length, BeamGeometry};
pub use modes::{ModeIndex, ModeVector};
pub use quadrature::{adaptive_simpson, GaussHermite};

use crate::error::{Error, Result};

/// Default Gauss-Hermite node count per axis.
pub const DEFAULT_QUADRATURE_NODES: usize = 80;
/// Default mode-space truncation.
pub const DEFAULT_CUTOFF: usize = 40;

/// Physicists' Hermite polynomial H_n(x) by the three-term recurrence.
pub fn hermite(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Normalized 1D mode profiles X_0..=X_nmax at the waist (real, unit L2 norm).
pub fn mode_profiles_1d(n_max: usize, x: f64, waist: f64) -> Vec<f64> {
    let t = std::f64::consts::SQRT_2 * x / waist;
    let scale = (std::f64::consts::SQRT_2 / waist).sqrt();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    out.push(scale * cur);
    for j in 0..n_max {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * t * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(scale * cur);
    }
    out
}

pub fn mode_profile_1d(n: usize, x: f64, waist: f64) -> f64 {
    mode_profiles_1d(n, x, waist)[n]
}

/// One transverse factor of u_nm at axial position z.
pub(crate) fn axis_factor(order: usize, x: f64, z: f64, waist: f64, rayleigh: f64, k: f64) -> Complex64 {
    let w = waist * (1.0 + (z / rayleigh).powi(2)).sqrt();
    let amp = mode_profile_1d(order, x, w);
    let curvature_phase = if z == 0.0 {
        0.0
    } else {
        let r = z + rayleigh * rayleigh / z;
        k * x * x / (2.0 * r)
    };
    let gouy = (order as f64 + 0.5) * (z / rayleigh).atan();
    Complex64::from_polar(amp, curvature_phase - gouy)
}

/// Evaluate u_nm(x, y, z).
pub fn mode_amplitude(idx: ModeIndex, x: f64, y: f64, z: f64, geom: &BeamGeometry) -> Complex64 {
    let k = geom.wavenumber();
    axis_factor(idx.n, x, z, geom.waist_x(), geom.rayleigh_x(), k)
        * axis_factor(idx.m, y, z, geom.waist_y(), geom.rayleigh_y(), k)
}

/// A transverse field at the reference plane z = 0.
#[derive(Clone, Copy)]
pub enum Field<'a> {
    Sampled(&'a (dyn Fn(f64, f64) -> Complex64 + Sync)),
    Modes(&'a ModeVector),
}

impl Field<'_> {
    /// Field values on the tensor grid xs x ys, row-major in x.
    fn sample(&self, xs: &[f64], ys: &[f64], geom: &BeamGeometry) -> Vec<Complex64> {
        match self {
            Field::Sampled(f) => xs
                .iter()
                .flat_map(|&x| ys.iter().map(move |&y| f(x, y)))
                .collect(),
            Field::Modes(v) => {
                let cutoff = v.cutoff();
                let px: Vec<Vec<f64>> = xs
                    .iter()
                    .map(|&x| mode_profiles_1d(cutoff, x, geom.waist_x()))
                    .collect();
                let py: Vec<Vec<f64>> = ys
                    .iter()
                    .map(|&y| mode_profiles_1d(cutoff, y, geom.waist_y()))
                    .collect();
                // partial[n][j] = sum_m c_nm Y_m(y_j)
                let partial: Vec<Vec<Complex64>> = (0..=cutoff)
                    .map(|n| {
                        py.iter()
                            .map(|ym| {
                                (0..=cutoff)
                                    .map(|m| v.get(ModeIndex::new(n, m)) * ym[m])
                                    .sum()
                            })
                            .collect()
                    })
                    .collect();
                let mut out = Vec::with_capacity(xs.len() * ys.len());
                for xn in &px {
                    for j in 0..ys.len() {
                        out.push((0..=cutoff).map(|n| partial[n][j] * xn[n]).sum());
                    }
                }
                out
            }
        }
    }
}

struct OverlapParts {
    value: Complex64,
    norm_f: f64,
    norm_g: f64,
}

fn overlap_parts(f: Field, g: Field, geom: &BeamGeometry, nodes: usize) -> OverlapParts {
    let rule = GaussHermite::cached(nodes);
    // |u|^2 ~ exp(-2x^2/w^2), so x = w t / sqrt2 makes the Gaussian weight exact
    let (xs, wx) = rule.scaled(geom.waist_x() / std::f64::consts::SQRT_2);
    let (ys, wy) = rule.scaled(geom.waist_y() / std::f64::consts::SQRT_2);
    let fv = f.sample(&xs, &ys, geom);
    let gv = g.sample(&xs, &ys, geom);
    let mut value = Complex64::default();
    let mut norm_f = 0.0;
    let mut norm_g = 0.0;
    for (i, wxi) in wx.iter().enumerate() {
        for (j, wyj) in wy.iter().enumerate() {
            let w = wxi * wyj;
            let a = fv[i * ys.len() + j];
            let b = gv[i * ys.len() + j];
            value += w * a.conj() * b;
            norm_f += w * a.norm_sqr();
            norm_g += w * b.norm_sqr();
        }
    }
    OverlapParts {
        value,
        norm_f,
        norm_g,
    }
}

/// <f|g> over the transverse plane with the default node count.
pub fn overlap(f: Field, g: Field, geom: &BeamGeometry) -> Result<Complex64> {
    overlap_with_nodes(f, g, geom, DEFAULT_QUADRATURE_NODES)
}

/// <f|g> with `nodes` Gauss-Hermite points per axis, scaled to the waist.
///
/// The result is rejected if doubling the node count moves it by more than
/// 1e-9 relative to max(|<f|g>|, ||f|| ||g||).
pub fn overlap_with_nodes(
    f: Field,
    g: Field,
    geom: &BeamGeometry,
    nodes: usize,
) -> Result<Complex64> {
    let coarse = overlap_parts(f, g, geom, nodes);
    let fine = overlap_parts(f, g, geom, 2 * nodes);
    let scale = coarse
        .value
        .norm()
        .max(fine.value.norm())
        .max((coarse.norm_f * coarse.norm_g).sqrt())
        .max(f64::MIN_POSITIVE);
    let rel_change = (fine.value - coarse.value).norm() / scale;
    if rel_change > 1e-9 {
        return Err(Error::QuadratureUnconverged { rel_change });
    }
    Ok(coarse.value)
}

/// Decompose a sampled field at z = 0 into modes up to `cutoff`.
pub fn decompose(
    field: &(dyn Fn(f64, f64) -> Complex64 + Sync),
    geom: &BeamGeometry,
    cutoff: usize,
    nodes: usize,
) -> Result<ModeVector> {
    let check = |rule_nodes: usize| {
        let rule = GaussHermite::cached(rule_nodes);
        let (xs, wx) = rule.scaled(geom.waist_x() / std::f64::consts::SQRT_2);
        let (ys, wy) = rule.scaled(geom.waist_y() / std::f64::consts::SQRT_2);
        let fv = Field::Sampled(field).sample(&xs, &ys, geom);
        let px: Vec<Vec<f64>> = xs
            .iter()
            .map(|&x| mode_profiles_1d(cutoff, x, geom.waist_x()))
            .collect();
        let py: Vec<Vec<f64>> = ys
            .iter()
            .map(|&y| mode_profiles_1d(cutoff, y, geom.waist_y()))
            .collect();
        let mut out = ModeVector::zeros(cutoff);
        // partial[i][m] = sum_j w_j Y_m(y_j) f(x_i, y_j)
        for (i, wxi) in wx.iter().enumerate() {
            let mut partial = vec![Complex64::default(); cutoff + 1];
            for (j, wyj) in wy.iter().enumerate() {
                let v = fv[i * ys.len() + j] * *wyj;
                for (m, p) in partial.iter_mut().enumerate() {
                    *p += v * py[j][m];
                }
            }
            for n in 0..=cutoff {
                let xn = px[i][n] * wxi;
                for (m, p) in partial.iter().enumerate() {
                    out.add_to(ModeIndex::new(n, m), p * xn)
                        .expect("index within cutoff");
                }
            }
        }
        out
    };
    let coarse = check(nodes);
    let fine = check(2 * nodes);
    let scale = coarse.norm().max(fine.norm()).max(f64::MIN_POSITIVE);
    let rel_change = coarse.max_abs_diff(&fine) / scale;
    if rel_change > 1e-9 {
        return Err(Error::QuadratureUnconverged { rel_change });
    }
    Ok(coarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn geom() -> BeamGeometry {
        BeamGeometry::isotropic(125e-6, 150e-6).unwrap()
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 3.7), 1.0);
        assert_eq!(hermite(2, 1.0), 2.0);
        // explicit polynomial 8x^3 - 12x
        let x = 0.5;
        assert!((hermite(3, x) - (8.0 * x * x * x - 12.0 * x)).abs() < 1e-15);
        assert_eq!(hermite(3, 0.5), -5.0);
        // 16x^4 - 48x^2 + 12
        let x: f64 = 1.3;
        let h4 = 16.0 * x.powi(4) - 48.0 * x * x + 12.0;
        assert!((hermite(4, x) - h4).abs() < 1e-12);
    }

    #[test]
    fn normalized_profiles_match_explicit_form() {
        let w = 2.0;
        for n in 0..8 {
            for &x in &[-1.7, 0.0, 0.4, 2.5] {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                let explicit = (2.0 / PI).powf(0.25) / (2f64.powi(n as i32) * fact * w).sqrt()
                    * hermite(n, 2f64.sqrt() * x / w)
                    * (-x * x / (w * w)).exp();
                assert!((mode_profile_1d(n, x, w) - explicit).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn fundamental_peak_amplitude() {
        let g = geom();
        let u = mode_amplitude(ModeIndex::new(0, 0), 0.0, 0.0, 0.0, &g);
        let expected = (2.0 / PI).sqrt() / 150e-6;
        assert!((u.norm() - expected).abs() / expected < 1e-14);
        assert!((expected - 5319.2).abs() < 0.1);
        assert_eq!(u.arg(), 0.0);
        assert_eq!(mode_amplitude(ModeIndex::new(1, 0), 0.0, 3e-5, 0.0, &g).norm(), 0.0);
    }

    #[test]
    fn fundamental_is_normalized_and_modes_orthogonal() {
        let g = geom();
        let u00 = ModeVector::basis(ModeIndex::new(0, 0), 2).unwrap();
        let u20 = ModeVector::basis(ModeIndex::new(2, 0), 2).unwrap();
        let u02 = ModeVector::basis(ModeIndex::new(0, 2), 2).unwrap();
        let one = overlap(Field::Modes(&u00), Field::Modes(&u00), &g).unwrap();
        assert!((one - 1.0).norm() < 1e-12);
        let zero = overlap(Field::Modes(&u20), Field::Modes(&u02), &g).unwrap();
        assert!(zero.norm() < 1e-12);
        let sampled = |x: f64, y: f64| mode_amplitude(ModeIndex::new(0, 0), x, y, 0.0, &g);
        let one = overlap(Field::Sampled(&sampled), Field::Sampled(&sampled), &g).unwrap();
        assert!((one - 1.0).norm() < 1e-12);
    }

    #[test]
    fn scaled_fundamental_overlap() {
        let g = geom();
        let s = 1.1;
        let scaled = move |x: f64, y: f64| {
            mode_amplitude(ModeIndex::new(0, 0), x / s, y, 0.0, &g) / s.sqrt()
        };
        let u20 = ModeVector::basis(ModeIndex::new(2, 0), 2).unwrap();
        let c = overlap(Field::Modes(&u20), Field::Sampled(&scaled), &g).unwrap();
        let r = f64::ln(s);
        let closed = r.tanh() / 2f64.sqrt() / r.cosh().sqrt();
        assert!((c.re - closed).abs() < 1e-12, "{c} vs {closed}");
        assert!((c.re - 0.06703).abs() < 1e-5);
    }

    #[test]
    fn mode_vector_overlap_equals_inner_product() {
        let g = BeamGeometry::new(125e-6, 150e-6, 110e-6).unwrap();
        let mut a = ModeVector::zeros(6);
        let mut b = ModeVector::zeros(6);
        for (k, (idx, _)) in ModeVector::zeros(6).iter().enumerate() {
            let t = k as f64;
            a.set(idx, Complex64::new((0.3 * t).sin(), (0.7 * t).cos()) / 7.0).unwrap();
            b.set(idx, Complex64::new((1.1 * t).cos(), (0.2 * t).sin()) / 7.0).unwrap();
        }
        let q = overlap(Field::Modes(&a), Field::Modes(&b), &g).unwrap();
        assert!((q - a.inner(&b)).norm() < 1e-10);
    }

    #[test]
    fn unconverged_quadrature_is_reported() {
        let g = geom();
        // a field far narrower than the waist cannot be resolved by waist-scaled nodes
        let spike = |x: f64, y: f64| {
            let s = 150e-6 / 25.0;
            let x = x - 0.013e-6;
            Complex64::new((-(x * x + y * y) / (s * s)).exp(), 0.0)
        };
        let u00 = ModeVector::basis(ModeIndex::new(0, 0), 0).unwrap();
        let err = overlap(Field::Modes(&u00), Field::Sampled(&spike), &g).unwrap_err();
        assert!(matches!(err, Error::QuadratureUnconverged { .. }));
    }

    #[test]
    fn decomposition_recovers_mode_vector() {
        let g = geom();
        let mut v = ModeVector::zeros(5);
        v.set(ModeIndex::new(0, 0), Complex64::new(0.8, 0.0)).unwrap();
        v.set(ModeIndex::new(2, 1), Complex64::new(0.0, 0.6)).unwrap();
        let field = |x: f64, y: f64| {
            v.iter()
                .map(|(idx, c)| c * mode_amplitude(idx, x, y, 0.0, &g))
                .sum::<Complex64>()
        };
        let back = decompose(&field, &g, 5, 40).unwrap();
        assert!(back.max_abs_diff(&v) < 1e-12);
    }
}
