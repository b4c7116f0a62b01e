//! Finitely supported ℂⁿ-valued sequences indexed by ℤ.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::spaces::C64;

/// A finitely supported sequence. Zero blocks are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSeq {
    dim: usize,
    entries: BTreeMap<i64, Vec<C64>>,
}

fn is_zero(v: &[C64]) -> bool {
    v.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

impl SparseSeq {
    pub fn zero(dim: usize) -> Self {
        SparseSeq {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// The sequence with a single block `x` at index `k`.
    pub fn delta(k: i64, x: Vec<C64>) -> Self {
        let mut s = SparseSeq::zero(x.len());
        s.insert(k, x);
        s
    }

    /// Blocks placed at `lo, lo+1, ...`.
    pub fn from_blocks(dim: usize, lo: i64, blocks: &[Vec<C64>]) -> Result<Self> {
        let mut s = SparseSeq::zero(dim);
        for (i, b) in blocks.iter().enumerate() {
            check_dim(dim, b.len())?;
            s.insert(lo + i as i64, b.clone());
        }
        Ok(s)
    }

    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (i64, Vec<C64>)>) -> Result<Self> {
        let mut s = SparseSeq::zero(dim);
        for (k, b) in pairs {
            check_dim(dim, b.len())?;
            if s.entries.contains_key(&k) {
                return Err(Error::InvalidInput(format!("duplicate index {k}")));
            }
            s.insert(k, b);
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Set block `k`, dropping it if it is zero.
    pub fn insert(&mut self, k: i64, block: Vec<C64>) {
        debug_assert_eq!(block.len(), self.dim);
        if is_zero(&block) {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, block);
        }
    }

    /// Add `block` onto index `k`.
    pub fn add_at(&mut self, k: i64, block: &[C64]) {
        let cur = self
            .entries
            .remove(&k)
            .unwrap_or_else(|| vec![C64::new(0.0, 0.0); self.dim]);
        let sum: Vec<C64> = cur.iter().zip(block).map(|(a, b)| a + b).collect();
        self.insert(k, sum);
    }

    pub fn get(&self, k: i64) -> Option<&[C64]> {
        self.entries.get(&k).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &[C64])> {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> Vec<i64> {
        self.entries.keys().copied().collect()
    }

    /// Smallest and largest index of the support.
    pub fn bounds(&self) -> Option<(i64, i64)> {
        Some((*self.entries.keys().next()?, *self.entries.keys().next_back()?))
    }

    /// Number of indices between the support endpoints, inclusive.
    pub fn width(&self) -> usize {
        self.bounds().map_or(0, |(a, b)| (b - a + 1) as usize)
    }

    /// Largest `|k|` over the support.
    pub fn radius(&self) -> i64 {
        self.bounds().map_or(0, |(a, b)| a.abs().max(b.abs()))
    }

    /// `Σ_k x_k`.
    pub fn sum(&self) -> Vec<C64> {
        let mut s = vec![C64::new(0.0, 0.0); self.dim];
        for b in self.entries.values() {
            for (a, x) in s.iter_mut().zip(b) {
                *a += x;
            }
        }
        s
    }

    /// `(x_{k-m})_k`: the block at `k` moves to `k + m`.
    pub fn translate(&self, m: i64) -> Self {
        SparseSeq {
            dim: self.dim,
            entries: self.entries.iter().map(|(k, v)| (k + m, v.clone())).collect(),
        }
    }

    /// `(x_{-k})_k`.
    pub fn reflect(&self) -> Self {
        SparseSeq {
            dim: self.dim,
            entries: self.entries.iter().map(|(k, v)| (-k, v.clone())).collect(),
        }
    }

    /// Restriction to `lo..=hi`.
    pub fn truncate(&self, lo: i64, hi: i64) -> Self {
        SparseSeq {
            dim: self.dim,
            entries: self
                .entries
                .range(lo..=hi)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// `C_n s = (1/(n+1)) Σ_{m=0}^{n} 1_{[-m,m]} s`. Block `k` is scaled by
    /// `(n + 1 - |k|)₊ / (n + 1)`, a Fejér weight.
    pub fn cesaro(&self, n: u64) -> Self {
        let n1 = n as f64 + 1.0;
        self.scale_by(|k| ((n1 - k.unsigned_abs() as f64) / n1).max(0.0))
    }

    /// Blockwise scaling `(c(k)·x_k)_k`.
    pub fn scale_by(&self, c: impl Fn(i64) -> f64) -> Self {
        let mut out = SparseSeq::zero(self.dim);
        for (k, v) in &self.entries {
            let f = c(*k);
            out.insert(*k, v.iter().map(|z| z * f).collect());
        }
        out
    }

    pub fn scale(&self, a: C64) -> Self {
        let mut out = SparseSeq::zero(self.dim);
        for (k, v) in &self.entries {
            out.insert(*k, v.iter().map(|z| z * a).collect());
        }
        out
    }

    /// Blockwise `x_k ↦ f(k, x_k)`; the output dimension may differ.
    pub fn map_blocks(&self, out_dim: usize, f: impl Fn(i64, &[C64]) -> Vec<C64>) -> Self {
        let mut out = SparseSeq::zero(out_dim);
        for (k, v) in &self.entries {
            out.insert(*k, f(*k, v));
        }
        out
    }

    pub fn add(&self, other: &SparseSeq) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.entries {
            out.add_at(*k, v);
        }
        out
    }

    pub fn sub(&self, other: &SparseSeq) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Dense blocks for indices `lo..=hi`; indices outside the support are zero.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<Vec<C64>> {
        (lo..=hi)
            .map(|k| {
                self.get(k)
                    .map(|b| b.to_vec())
                    .unwrap_or_else(|| vec![C64::new(0.0, 0.0); self.dim])
            })
            .collect()
    }

    /// Largest block entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|v| v.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    k: i64,
    re: Vec<f64>,
    #[serde(default)]
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSeq {
    dim: usize,
    entries: Vec<RawEntry>,
}

impl Serialize for SparseSeq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawSeq {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| RawEntry {
                    k: *k,
                    re: v.iter().map(|z| z.re).collect(),
                    im: v.iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseSeq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSeq::deserialize(d)?;
        let pairs = raw
            .entries
            .into_iter()
            .map(|e| {
                let im = if e.im.is_empty() { vec![0.0; e.re.len()] } else { e.im };
                if im.len() != e.re.len() {
                    return Err(serde::de::Error::custom(format!(
                        "entry {}: re and im lengths differ",
                        e.k
                    )));
                }
                Ok((e.k, e.re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect()))
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        SparseSeq::from_pairs(raw.dim, pairs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(pairs: &[(i64, f64)]) -> SparseSeq {
        SparseSeq::from_pairs(1, pairs.iter().map(|&(k, v)| (k, vec![C64::new(v, 0.0)]))).unwrap()
    }

    #[test]
    fn translate_delta() {
        assert_eq!(s(&[(0, 2.0)]).translate(3), s(&[(3, 2.0)]));
    }

    #[test]
    fn reflect_twice_is_identity() {
        let a = s(&[(-2, 1.0), (0, 3.0), (5, -1.0)]);
        assert_eq!(a.reflect().reflect(), a);
        assert_eq!(a.reflect().bounds(), Some((-5, 2)));
    }

    #[test]
    fn cesaro_n1_halves_the_neighbours() {
        let a = s(&[(-1, 2.0), (0, 3.0), (1, 4.0)]);
        assert_eq!(a.cesaro(1), s(&[(-1, 1.0), (0, 3.0), (1, 2.0)]));
    }

    #[test]
    fn cesaro_n0_keeps_index_zero() {
        let a = s(&[(-1, 2.0), (0, 3.0), (1, 4.0)]);
        assert_eq!(a.cesaro(0), s(&[(0, 3.0)]));
    }

    #[test]
    fn cesaro_defect_decays_like_one_over_n() {
        let a = s(&[(-2, 1.0), (3, 1.0)]);
        for n in [5u64, 50, 500] {
            let d = a.sub(&a.cesaro(n));
            assert!((d.get(3).unwrap()[0].re - 3.0 / (n as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_blocks_are_dropped() {
        let mut a = s(&[(1, 1.0)]);
        a.add_at(1, &[C64::new(-1.0, 0.0)]);
        assert!(a.is_empty());
    }

    #[test]
    fn json_roundtrip() {
        let a = SparseSeq::from_pairs(
            2,
            [(-1, vec![C64::new(1.0, 2.0), C64::new(0.0, -1.0)]), (4, vec![C64::new(3.0, 0.0), C64::new(0.0, 0.0)])],
        )
        .unwrap();
        let j = serde_json::to_string(&a).unwrap();
        assert!(j.starts_with(r#"{"dim":2,"entries":[{"k":-1,"re":[1.0,0.0],"im":[2.0,-1.0]}"#));
        let b: SparseSeq = serde_json::from_str(&j).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_indices_rejected() {
        assert!(SparseSeq::from_pairs(1, [(0, vec![C64::new(1.0, 0.0)]), (0, vec![C64::new(1.0, 0.0)])]).is_err());
    }
}
