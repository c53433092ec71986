//! Gauss-Hermite rules and a small adaptive integrator.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};

/// Gauss-Hermite rule with weights premultiplied by `exp(t^2)`, so that
/// `sum w_i f(t_i)` approximates the plain integral of `f` over the real line.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Build an `n`-point rule by Newton iteration on the normalized
    /// Hermite functions (no overflow for n in the hundreds).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let mut positive: Vec<(f64, f64)> = Vec::with_capacity(n.div_ceil(2));
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * positive[0].0,
                3 => 1.91 * z - 0.91 * positive[1].0,
                _ => 2.0 * z - positive[i - 2].0,
            };
            for _ in 0..100 {
                let (pn, pn1) = hermite_function_pair(n, z);
                let step = pn / ((2.0 * nf).sqrt() * pn1 - z * pn);
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, prev) = hermite_function_pair(n, z);
            positive.push((z, 1.0 / (nf * prev * prev)));
        }
        // roots come out largest first; mirror them into ascending order
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for (i, &(t, w)) in positive.iter().enumerate() {
            let t = if n % 2 == 1 && i == n / 2 { 0.0 } else { t };
            nodes[i] = -t;
            nodes[n - 1 - i] = t;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared rule for `n` nodes; rules are built once per process.
    pub fn cached(n: usize) -> Arc<Self> {
        static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.read().unwrap().get(&n) {
            return rule.clone();
        }
        let rule = Arc::new(Self::new(n));
        cache.write().unwrap().entry(n).or_insert(rule).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights including the `exp(t^2)` factor.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights for `x = scale * t`, integrating plain functions of `x`.
    pub fn scaled(&self, scale: f64) -> (Vec<f64>, Vec<f64>) {
        (
            self.nodes.iter().map(|t| t * scale).collect(),
            self.weights.iter().map(|w| w * scale).collect(),
        )
    }
}

/// Normalized Hermite functions phi_n(t) and phi_{n-1}(t).
fn hermite_function_pair(n: usize, t: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    for j in 0..n {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * t * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Adaptive Simpson integration to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_DEPTH: u32 = 48;
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::QuadratureUnconverged {
                rel_change: delta.abs() / (left + right).abs().max(f64::MIN_POSITIVE),
            });
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn small_rules_match_tabulated_values() {
        // n = 2: nodes +-1/sqrt(2), weights sqrt(pi)/2 (before the exp(t^2) factor)
        let r = GaussHermite::new(2);
        assert_eq!(r.len(), 2);
        let t = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.nodes()[1] - t).abs() < 1e-15);
        let w = PI.sqrt() / 2.0 * (t * t).exp();
        assert!((r.weights()[0] - w).abs() < 1e-14);
        let r3 = GaussHermite::new(3);
        assert_eq!(r3.len(), 3);
        assert_eq!(r3.nodes()[1], 0.0);
        assert!((r3.nodes()[2] - 1.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn integrates_gaussian_moments() {
        for n in [20, 80, 81, 160] {
            let r = GaussHermite::new(n);
            assert_eq!(r.len(), n);
            let m0: f64 = r
                .nodes()
                .iter()
                .zip(r.weights())
                .map(|(t, w)| w * (-t * t).exp())
                .sum();
            assert!((m0 - PI.sqrt()).abs() < 1e-12, "n={n}: {m0}");
            let m4: f64 = r
                .nodes()
                .iter()
                .zip(r.weights())
                .map(|(t, w)| w * t.powi(4) * (-t * t).exp())
                .sum();
            assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-12, "n={n}: {m4}");
        }
    }

    #[test]
    fn simpson_matches_closed_form() {
        let v = adaptive_simpson(|x| (-x * x).exp(), -8.0, 8.0, 1e-14).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-12);
    }
}
