use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BeamGeometry, ModeIndex, ModeVector};
use crate::error::{invalid, Error, Result};

/// Which deformation generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// (X P_x + P_x X) / 2, the waist-size flow along x.
    ScaleX,
    /// (Y P_y + P_y Y) / 2.
    ScaleY,
    /// P^2 / 2k, free propagation (waist shift).
    Shear,
}

/// Hermitian generator G over the truncated HG basis, stored by rows.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    kind: GeneratorKind,
    cutoff: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
    /// Parameter magnitude that corresponds to a unit relative deformation.
    parameter_scale: f64,
}

impl GeneratorMatrix {
    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn flat(&self, idx: ModeIndex) -> usize {
        idx.n * (self.cutoff + 1) + idx.m
    }

    /// Matrix element <row|G|col>.
    pub fn element(&self, row: ModeIndex, col: ModeIndex) -> Complex64 {
        if row.nu() > self.cutoff || col.nu() > self.cutoff {
            return Complex64::default();
        }
        let c = self.flat(col);
        self.rows[self.flat(row)]
            .iter()
            .find(|(j, _)| *j == c)
            .map(|(_, v)| *v)
            .unwrap_or_default()
    }

    /// Largest |G_ij - conj(G_ji)| over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let stride = self.cutoff + 1;
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                let back = self.element(
                    ModeIndex::new(i / stride, i % stride),
                    ModeIndex::new(j / stride, j % stride),
                );
                let transposed = self.element(
                    ModeIndex::new(j / stride, j % stride),
                    ModeIndex::new(i / stride, i % stride),
                );
                worst = worst.max((back - v).norm()).max((v - transposed.conj()).norm());
            }
        }
        worst
    }

    fn matvec(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, g)| g * v[j]).sum();
        }
    }

    fn max_row_sum(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, g)| g.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Build the generator of `kind` for modes with n, m <= cutoff.
///
/// For the scaling flows, `-iG` is real and antisymmetric:
/// `(-iG) psi_nm = 1/2 sqrt((n+1)(n+2)) psi_{n+2,m} - 1/2 sqrt(n(n-1)) psi_{n-2,m}`.
/// The shear is real symmetric with diagonal `(2n+1)/(2k w_x^2) + (2m+1)/(2k w_y^2)`
/// and couplings `-sqrt((n+1)(n+2))/(2k w_x^2)` to (n+2, m) (and the m analogue).
pub fn generator(kind: GeneratorKind, geom: &BeamGeometry, cutoff: usize) -> Result<GeneratorMatrix> {
    if cutoff < 2 {
        return Err(Error::CutoffTooSmall {
            cutoff,
            required: 2,
        });
    }
    let stride = cutoff + 1;
    let flat = |n: usize, m: usize| n * stride + m;
    let mut rows = vec![Vec::new(); stride * stride];
    let up = |j: usize| 0.5 * (((j + 1) * (j + 2)) as f64).sqrt();
    let i = Complex64::new(0.0, 1.0);
    match kind {
        GeneratorKind::ScaleX | GeneratorKind::ScaleY => {
            for n in 0..=cutoff {
                for m in 0..=cutoff {
                    let j = if kind == GeneratorKind::ScaleX { n } else { m };
                    if j + 2 > cutoff {
                        continue;
                    }
                    let (lo, hi) = if kind == GeneratorKind::ScaleX {
                        (flat(n, m), flat(n + 2, m))
                    } else {
                        (flat(n, m), flat(n, m + 2))
                    };
                    // -iG has +up(j) at (hi, lo) and -up(j) at (lo, hi); G = i(-iG)
                    rows[hi].push((lo, i * up(j)));
                    rows[lo].push((hi, -i * up(j)));
                }
            }
        }
        GeneratorKind::Shear => {
            let k = geom.wavenumber();
            let ax = 1.0 / (2.0 * k * geom.waist_x().powi(2));
            let ay = 1.0 / (2.0 * k * geom.waist_y().powi(2));
            for n in 0..=cutoff {
                for m in 0..=cutoff {
                    let d = (2 * n + 1) as f64 * ax + (2 * m + 1) as f64 * ay;
                    rows[flat(n, m)].push((flat(n, m), Complex64::new(d, 0.0)));
                    if n + 2 <= cutoff {
                        let v = Complex64::new(-2.0 * up(n) * ax, 0.0);
                        rows[flat(n + 2, m)].push((flat(n, m), v));
                        rows[flat(n, m)].push((flat(n + 2, m), v));
                    }
                    if m + 2 <= cutoff {
                        let v = Complex64::new(-2.0 * up(m) * ay, 0.0);
                        rows[flat(n, m + 2)].push((flat(n, m), v));
                        rows[flat(n, m)].push((flat(n, m + 2), v));
                    }
                }
            }
        }
    }
    for row in rows.iter_mut() {
        row.sort_by_key(|(j, _)| *j);
    }
    let parameter_scale = match kind {
        GeneratorKind::Shear => geom.rayleigh_x().min(geom.rayleigh_y()),
        _ => 1.0,
    };
    Ok(GeneratorMatrix {
        kind,
        cutoff,
        rows,
        parameter_scale,
    })
}

type CacheKey = (GeneratorKind, u64, u64, u64, usize);

/// Memoized [`generator`]; safe for concurrent readers.
pub fn cached_generator(
    kind: GeneratorKind,
    geom: &BeamGeometry,
    cutoff: usize,
) -> Result<Arc<GeneratorMatrix>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<GeneratorMatrix>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    // the scaling flows do not depend on geometry
    let key = match kind {
        GeneratorKind::Shear => (
            kind,
            geom.wavelength().to_bits(),
            geom.waist_x().to_bits(),
            geom.waist_y().to_bits(),
            cutoff,
        ),
        _ => (kind, 0, 0, 0, cutoff),
    };
    if let Some(g) = cache.read().unwrap().get(&key) {
        return Ok(g.clone());
    }
    let g = Arc::new(generator(kind, geom, cutoff)?);
    Ok(cache.write().unwrap().entry(key).or_insert(g).clone())
}

/// Output of [`apply_evolution`].
#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: ModeVector,
    /// Set when the relative parameter exceeds 0.2, outside the regime the
    /// deformation model is meant for.
    pub beyond_validity: bool,
}

/// `exp(-i * parameter * G) state` by a scaled, truncated Taylor series.
///
/// The generator's mode space is the working space; the result is projected
/// back onto the state's cutoff, so any weight pushed past that cutoff shows
/// up as lost norm. Use a generator with a larger cutoff than the state to
/// make leakage observable.
pub fn apply_evolution(
    gen: &GeneratorMatrix,
    parameter: f64,
    state: &ModeVector,
) -> Result<Evolution> {
    if !parameter.is_finite() {
        return Err(invalid("parameter", "must be finite"));
    }
    if gen.cutoff < state.cutoff() {
        return Err(Error::CutoffTooSmall {
            cutoff: gen.cutoff,
            required: state.cutoff(),
        });
    }
    let beyond_validity = parameter.abs() / gen.parameter_scale > 0.2;
    if beyond_validity {
        log::warn!(
            "{:?} evolution with relative parameter {:.3} is outside |x| <= 0.2",
            gen.kind,
            parameter / gen.parameter_scale
        );
    }
    let work = state.with_cutoff(gen.cutoff);
    let mut v: Vec<Complex64> = work.as_slice().to_vec();
    let input_norm = state.norm();
    if parameter != 0.0 && input_norm > 0.0 {
        // split so that each step has ||parameter * G|| <= 1/2
        let steps = ((parameter.abs() * gen.max_row_sum()) / 0.5).ceil().max(1.0) as usize;
        let dt = parameter / steps as f64;
        let factor = Complex64::new(0.0, -dt);
        let mut term = vec![Complex64::default(); v.len()];
        let mut scratch = vec![Complex64::default(); v.len()];
        for _ in 0..steps {
            term.copy_from_slice(&v);
            let mut acc = v.clone();
            for k in 1..=60 {
                gen.matvec(&term, &mut scratch);
                let inv_k = 1.0 / k as f64;
                for (t, s) in term.iter_mut().zip(&scratch) {
                    *t = s * factor * inv_k;
                }
                let mut term_norm = 0.0;
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += t;
                    term_norm += t.norm_sqr();
                }
                if term_norm.sqrt() < 1e-16 * input_norm {
                    break;
                }
            }
            v = acc;
        }
    }
    let out = ModeVector::from_raw(gen.cutoff, v).with_cutoff(state.cutoff());
    let deviation = (out.norm() - input_norm).abs();
    if deviation > 1e-4 * input_norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NormLeakage { deviation });
    }
    Ok(Evolution {
        state: out,
        beyond_validity,
    })
}

/// Convenience: evolve with a cached generator two orders wider than the state.
pub fn evolve(
    kind: GeneratorKind,
    geom: &BeamGeometry,
    parameter: f64,
    state: &ModeVector,
) -> Result<Evolution> {
    let gen = cached_generator(kind, geom, state.cutoff().max(2) + 2)?;
    apply_evolution(&gen, parameter, state)
}
