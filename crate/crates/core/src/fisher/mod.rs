//! Fisher information of the three-parameter estimate
//! `g = (d_waist_y, d_waist_x, d_z)`.
//!
//! All three matrices share the prefactor `|A_W|^2 P_s N` and differ only in
//! their diagonals:
//!
//! | kind    | (1,1)              | (2,2)              | (3,3)                        |
//! |---------|--------------------|--------------------|------------------------------|
//! | QFI     | (m^2+m+1)/s^2      | (n^2+n+1)/s^2      | 4(nu^2+nu+1)/((2k)^2 s^4)    |
//! | CFI BHD | 1/s^2              | 1/s^2              | 1/(k^2 s^4)                  |
//! | CFI AD  | F/s^2              | F/s^2              | 1/(k^2 s^4)                  |
//!
//! `F` is the flip-overlap factor of the array detector, see
//! [`flip_overlap_factor`]. The width `s` relates to the waist as
//! `w = sqrt(2) s` ([`sigma_from_waist`]).

mod montecarlo;

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hgbasis::{adaptive_simpson, mode_profile_1d, ModeIndex};

pub use montecarlo::{monte_carlo_estimation, Detector, MonteCarloResult, CHUNK_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherKind {
    Qfi,
    CfiBhd,
    CfiAd,
}

impl FisherKind {
    pub fn label(&self) -> &'static str {
        match self {
            FisherKind::Qfi => "qfi",
            FisherKind::CfiBhd => "cfi_bhd",
            FisherKind::CfiAd => "cfi_ad",
        }
    }
}

/// Inputs shared by all three matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherParams {
    pub probe: ModeIndex,
    /// `|A_W|`.
    pub weak_value: f64,
    /// Postselection probability `|<f|i>|^2`.
    pub postselection: f64,
    pub photons: f64,
    /// Transverse width `s` (m).
    pub sigma: f64,
    /// Wavenumber (1/m).
    pub wavenumber: f64,
}

impl FisherParams {
    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma", "must be positive"));
        }
        if !(self.wavenumber > 0.0 && self.wavenumber.is_finite()) {
            return Err(invalid("wavenumber", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.postselection) {
            return Err(invalid("postselection", "must lie in [0, 1]"));
        }
        if !(self.photons >= 0.0) || !(self.weak_value >= 0.0) {
            return Err(invalid("photons", "photon number and |A_W| must be >= 0"));
        }
        Ok(())
    }

    fn prefactor(&self) -> f64 {
        self.weak_value.powi(2) * self.postselection * self.photons
    }
}

/// Gaussian width `s` belonging to a waist `w`, `w / sqrt2`.
///
/// With this width the QFI diagonal above is exactly `4 Var(generator)` for
/// the scaling and free-propagation generators of the fundamental mode.
pub fn sigma_from_waist(waist: f64) -> f64 {
    waist / SQRT_2
}

/// Diagonal 3x3 Fisher matrix over `(d_waist_y, d_waist_x, d_z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub kind: FisherKind,
    pub params: FisherParams,
    entries: [[f64; 3]; 3],
}

impl FisherMatrix {
    fn build(kind: FisherKind, params: FisherParams, flip: f64) -> Result<Self> {
        params.validate()?;
        let diag = |p: &FisherParams| -> [f64; 3] {
            let s2 = p.sigma * p.sigma;
            let k2 = p.wavenumber * p.wavenumber;
            let g = |j: usize| (j * j + j + 1) as f64;
            let pre = p.prefactor();
            match kind {
                FisherKind::Qfi => [
                    pre * g(p.probe.m) / s2,
                    pre * g(p.probe.n) / s2,
                    pre * 4.0 * g(p.probe.nu()) / (4.0 * k2 * s2 * s2),
                ],
                FisherKind::CfiBhd => [pre / s2, pre / s2, pre / (k2 * s2 * s2)],
                FisherKind::CfiAd => [pre * flip / s2, pre * flip / s2, pre / (k2 * s2 * s2)],
            }
        };
        let d = diag(&params);
        // every entry must carry length^-2: rescale lengths by 2 and compare
        let scaled = diag(&FisherParams {
            sigma: 2.0 * params.sigma,
            wavenumber: params.wavenumber / 2.0,
            ..params
        });
        for (a, b) in d.iter().zip(&scaled) {
            if *a != 0.0 && ((b / a) - 0.25).abs() > 1e-12 {
                return Err(invalid("fisher", "entry failed the length^-2 dimension audit"));
            }
        }
        let mut entries = [[0.0; 3]; 3];
        for (i, v) in d.into_iter().enumerate() {
            entries[i][i] = v;
        }
        Ok(Self {
            kind,
            params,
            entries,
        })
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    pub fn diagonal(&self) -> [f64; 3] {
        [self.entries[0][0], self.entries[1][1], self.entries[2][2]]
    }

    pub fn is_diagonal(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| i == j || self.entries[i][j] == 0.0))
    }

    /// Cramer-Rao bound `1 / F_ii` per parameter.
    pub fn cramer_rao_bounds(&self) -> [f64; 3] {
        self.diagonal().map(|v| 1.0 / v)
    }
}

pub fn qfi(params: FisherParams) -> Result<FisherMatrix> {
    FisherMatrix::build(FisherKind::Qfi, params, 1.0)
}

pub fn cfi_bhd(params: FisherParams) -> Result<FisherMatrix> {
    FisherMatrix::build(FisherKind::CfiBhd, params, 1.0)
}

pub fn cfi_ad(params: FisherParams) -> Result<FisherMatrix> {
    FisherMatrix::build(FisherKind::CfiAd, params, flip_overlap_factor()?)
}

/// `sqrt(2 sqrt(2/e) / pi)`.
pub fn flip_overlap_closed_form() -> f64 {
    (2.0 * (2.0 / std::f64::consts::E).sqrt() / PI).sqrt()
}

const WAIST: f64 = 1.0;
const TAIL: f64 = 12.0;

fn masked_integral(boundary: f64, integrand: &dyn Fn(f64) -> f64) -> Result<f64> {
    let tol = 1e-13;
    if boundary >= TAIL {
        return adaptive_simpson(integrand, -TAIL, TAIL, tol).map(|v| -v);
    }
    let left = adaptive_simpson(integrand, -TAIL, -boundary, tol)?;
    let middle = adaptive_simpson(integrand, -boundary, boundary, tol)?;
    let right = adaptive_simpson(integrand, boundary, TAIL, tol)?;
    Ok(left + right - middle)
}

/// Overlap of `u00` and `u20` under a pi-flip mask at `+-boundary` (in units
/// of the waist), taken along the line `y = 0` with the 2D mode normalization,
/// scaled by the waist and square-rooted:
/// `sqrt(| w * integral M(x) u00(x,0) u20(x,0) dx |)`.
///
/// Pass `f64::INFINITY` for an unmasked detector.
pub fn flip_overlap_at(boundary: f64) -> Result<f64> {
    if !(boundary >= 0.0) {
        return Err(invalid("boundary", "must be >= 0"));
    }
    let y0 = mode_profile_1d(0, 0.0, WAIST);
    let f = |x: f64| mode_profile_1d(0, x, WAIST) * y0 * mode_profile_1d(2, x, WAIST) * y0;
    Ok((WAIST * masked_integral(boundary * WAIST, &f)?).abs().sqrt())
}

/// The array-detector factor `F`: [`flip_overlap_at`] with the mask at half the waist.
pub fn flip_overlap_factor() -> Result<f64> {
    flip_overlap_at(0.5)
}

/// Masked overlap `| integral M(x) X_0(x) X_2(x) dx |` of the unit-norm 1D
/// profiles, for comparison with [`flip_overlap_at`].
pub fn normalized_flip_overlap_at(boundary: f64) -> Result<f64> {
    if !(boundary >= 0.0) {
        return Err(invalid("boundary", "must be >= 0"));
    }
    let f = |x: f64| mode_profile_1d(0, x, WAIST) * mode_profile_1d(2, x, WAIST);
    Ok(masked_integral(boundary * WAIST, &f)?.abs())
}
