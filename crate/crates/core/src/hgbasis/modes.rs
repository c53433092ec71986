use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Hermite-Gaussian mode label (n along x, m along y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub n: usize,
    pub m: usize,
}

impl ModeIndex {
    pub const fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    /// Total order n + m.
    pub fn order(&self) -> usize {
        self.n + self.m
    }

    /// max(n, m), the order that sets the axial-shift gain.
    pub fn nu(&self) -> usize {
        self.n.max(self.m)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.m)
    }
}

/// Complex amplitudes over all modes with n, m <= cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl ModeVector {
    pub fn zeros(cutoff: usize) -> Self {
        Self {
            cutoff,
            coeffs: vec![Complex64::new(0.0, 0.0); (cutoff + 1) * (cutoff + 1)],
        }
    }

    /// Unit amplitude in a single mode.
    pub fn basis(idx: ModeIndex, cutoff: usize) -> Result<Self> {
        let mut v = Self::zeros(cutoff);
        v.set(idx, Complex64::new(1.0, 0.0))?;
        Ok(v)
    }

    pub(crate) fn from_raw(cutoff: usize, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), (cutoff + 1) * (cutoff + 1));
        Self { cutoff, coeffs }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub(crate) fn flat_index(&self, idx: ModeIndex) -> Option<usize> {
        (idx.n <= self.cutoff && idx.m <= self.cutoff).then(|| idx.n * (self.cutoff + 1) + idx.m)
    }

    pub(crate) fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Amplitude of `idx`; zero outside the stored range.
    pub fn get(&self, idx: ModeIndex) -> Complex64 {
        self.flat_index(idx)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn set(&mut self, idx: ModeIndex, value: Complex64) -> Result<()> {
        match self.flat_index(idx) {
            Some(i) => {
                self.coeffs[i] = value;
                Ok(())
            }
            None => Err(Error::CutoffTooSmall {
                cutoff: self.cutoff,
                required: idx.nu(),
            }),
        }
    }

    pub fn add_to(&mut self, idx: ModeIndex, value: Complex64) -> Result<()> {
        let cur = self.get(idx);
        self.set(idx, cur + value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, Complex64)> + '_ {
        let stride = self.cutoff + 1;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (ModeIndex::new(i / stride, i % stride), c))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < 1e-10
    }

    /// <self|other>, conjugating `self`. Cutoffs may differ.
    pub fn inner(&self, other: &ModeVector) -> Complex64 {
        self.iter()
            .filter(|(_, c)| *c != Complex64::default())
            .map(|(idx, c)| c.conj() * other.get(idx))
            .sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            cutoff: self.cutoff,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Copy into a space with a different cutoff, dropping modes that do not fit.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut out = Self::zeros(cutoff);
        for (idx, c) in self.iter() {
            if let Some(i) = out.flat_index(idx) {
                out.coeffs[i] = c;
            }
        }
        out
    }

    /// Largest absolute difference between corresponding coefficients.
    pub fn max_abs_diff(&self, other: &ModeVector) -> f64 {
        let cutoff = self.cutoff.max(other.cutoff);
        let mut worst: f64 = 0.0;
        for n in 0..=cutoff {
            for m in 0..=cutoff {
                let idx = ModeIndex::new(n, m);
                worst = worst.max((self.get(idx) - other.get(idx)).norm());
            }
        }
        worst
    }

    /// Canonical CSV form: header `n,m,re,im`, one row per stored mode in (n,m) order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "m", "re", "im"])?;
        for (idx, c) in self.iter() {
            w.write_record([
                idx.n.to_string(),
                idx.m.to_string(),
                format!("{:.16e}", c.re),
                format!("{:.16e}", c.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is ASCII"))
    }

    /// Parse the canonical CSV form. The cutoff is the largest index present.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        let mut cutoff = 0;
        for record in csv::Reader::from_reader(reader).records() {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("").trim().to_owned();
            let parse_usize = |i: usize| {
                field(i)
                    .parse::<usize>()
                    .map_err(|e| invalid("mode csv", format!("bad index {:?}: {e}", field(i))))
            };
            let parse_f64 = |i: usize| {
                field(i)
                    .parse::<f64>()
                    .map_err(|e| invalid("mode csv", format!("bad value {:?}: {e}", field(i))))
            };
            let idx = ModeIndex::new(parse_usize(0)?, parse_usize(1)?);
            cutoff = cutoff.max(idx.nu());
            rows.push((idx, Complex64::new(parse_f64(2)?, parse_f64(3)?)));
        }
        let mut v = Self::zeros(cutoff);
        for (idx, c) in rows {
            v.set(idx, c)?;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basis_and_access() {
        let v = ModeVector::basis(ModeIndex::new(2, 0), 4).unwrap();
        assert_eq!(v.get(ModeIndex::new(2, 0)), Complex64::new(1.0, 0.0));
        assert_eq!(v.get(ModeIndex::new(9, 9)), Complex64::default());
        assert!(v.is_normalized());
        assert!(ModeVector::basis(ModeIndex::new(5, 0), 4).is_err());
    }

    #[test]
    fn inner_product_across_cutoffs() {
        let mut a = ModeVector::zeros(2);
        a.set(ModeIndex::new(0, 0), Complex64::new(0.0, 1.0)).unwrap();
        let b = ModeVector::basis(ModeIndex::new(0, 0), 6).unwrap();
        assert_eq!(a.inner(&b), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn csv_is_sorted_with_header() {
        let v = ModeVector::basis(ModeIndex::new(1, 0), 1).unwrap();
        let s = v.to_csv_string().unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "n,m,re,im");
        assert_eq!(lines.len(), 5);
        assert!(lines[3].starts_with("1,0,1.0000000000000000e0"));
    }

    proptest! {
        #[test]
        fn csv_round_trip(values in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 16)) {
            let coeffs = values.into_iter().map(|(r, i)| Complex64::new(r, i)).collect();
            let v = ModeVector::from_raw(3, coeffs);
            let back = ModeVector::read_csv(v.to_csv_string().unwrap().as_bytes()).unwrap();
            prop_assert_eq!(back, v);
        }
    }
}
