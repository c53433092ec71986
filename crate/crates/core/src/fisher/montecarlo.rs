//! Monte Carlo check of the Cramer-Rao bound for the linear homodyne model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deform::Deformation;
use crate::detect::{bhd_signal, DetectionSetting};
use crate::error::{invalid, Result};
use crate::hgbasis::{BeamGeometry, ModeVector};
use crate::weakmeas::{port_states, weak_values, InterferometerSetting};

/// Samples per independent random stream.
pub const CHUNK_SIZE: usize = 1 << 16;

/// Detector reading the waist signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Detector {
    /// Homodyne detection with mode-matched local oscillators.
    Bhd,
    /// Pi-flip array detector: the waist signals keep only `sqrt(flip)` of
    /// their amplitude, so their information drops by `flip`.
    ArrayDetection { flip: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub mean: Deformation,
    /// Estimator variances of `(d_waist_y, d_waist_x, d_z)`.
    pub variance: [f64; 3],
    pub samples: usize,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: [f64; 3],
    m2: [f64; 3],
}

impl Moments {
    fn push(&mut self, x: [f64; 3]) {
        self.count += 1.0;
        for i in 0..3 {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / self.count;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    fn merge(self, other: Moments) -> Moments {
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let mut out = Moments {
            count,
            ..Default::default()
        };
        for i in 0..3 {
            let d = other.mean[i] - self.mean[i];
            out.mean[i] = self.mean[i] + d * other.count / count;
            out.m2[i] = self.m2[i] + other.m2[i] + d * d * self.count * other.count / count;
        }
        out
    }
}

/// Simulate `samples` homodyne records at `truth`, invert the linear signal
/// model for each and return the empirical mean and variance.
///
/// Stream `c` of the ChaCha8 generator seeded by `seed` draws chunk `c`, and
/// chunks are merged in order, so the result does not depend on threading.
pub fn monte_carlo_estimation(
    truth: &Deformation,
    setting: &DetectionSetting,
    ifm: &InterferometerSetting,
    geom: &BeamGeometry,
    detector: Detector,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    if samples < 10_000 {
        return Err(invalid("samples", "need at least 10^4 samples"));
    }
    let amplitude = match detector {
        Detector::Bhd => 1.0,
        Detector::ArrayDetection { flip } => {
            if !(flip > 0.0 && flip <= 1.0) {
                return Err(invalid("flip", "must lie in (0, 1]"));
            }
            flip.sqrt()
        }
    };
    let wv = weak_values(ifm);
    let probe = ModeVector::basis(setting.probe_order, setting.probe_order.nu() + 4)?;
    let ports = port_states(&probe, &Deformation::zero(), ifm, geom)?;
    let unit = [
        Deformation { d_waist_x: 0.0, d_waist_y: 1.0, d_z: 0.0 },
        Deformation { d_waist_x: 1.0, d_waist_y: 0.0, d_z: 0.0 },
        Deformation { d_waist_x: 0.0, d_waist_y: 0.0, d_z: 1.0 },
    ];
    let truth_g = [truth.d_waist_y, truth.d_waist_x, truth.d_z];
    let mut slope = [0.0; 3];
    let mut noise = [0.0; 3];
    for j in 0..3 {
        let s = bhd_signal(&ports[j], j + 1, setting, &wv, &unit[j], geom)?;
        let gain = if j < 2 { amplitude } else { 1.0 };
        slope[j] = s.mean * gain;
        noise[j] = s.noise_std;
        if !(slope[j] != 0.0) {
            return Err(invalid("setting", "a port carries no signal"));
        }
    }

    let chunks = samples.div_ceil(CHUNK_SIZE);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK_SIZE.min(samples - c * CHUNK_SIZE);
            let mut m = Moments::default();
            for _ in 0..n {
                let mut est = [0.0; 3];
                for j in 0..3 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let record = slope[j] * truth_g[j] + noise[j] * z;
                    est[j] = record / slope[j];
                }
                m.push(est);
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let variance = total.m2.map(|v| v / (total.count - 1.0));
    Ok(MonteCarloResult {
        mean: Deformation {
            d_waist_y: total.mean[0],
            d_waist_x: total.mean[1],
            d_z: total.mean[2],
        },
        variance,
        samples,
    })
}
