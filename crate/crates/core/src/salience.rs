//! Position salience over the visible field.
//!
//! A profile assigns each position `i` of an `n`-long field a weight
//! `s(i, n)`; weights are positive and sum to one. Three shapes are provided:
//!
//! * `uniform`: `s = 1/n`.
//! * `u_shaped`: normalized `ε·q^d(i) + a·e^{-k(i-1)} + b·e^{-k(n-i)}`, where
//!   `d(i)` is the distance to the nearer end and `q = e^{-1/span}`. Primacy
//!   and recency peaks sit on a floor that thins with distance from either
//!   end, so the interior trough deepens as the field grows. With
//!   `span = ∞` the floor is the constant `ε`.
//! * `recency_dominant`: normalized `ε·q^{n-i} + b·e^{-k(n-i)}`.
//!
//! Every term is geometric in `i`, so span masses and the normalizer have
//! closed forms and cost O(1) regardless of `n`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Uniform,
    UShaped,
    RecencyDominant,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SalienceError {
    #[error("position {i} outside 1..={n}")]
    Position { i: usize, n: usize },
    #[error("invalid salience parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SalienceProfile {
    pub kind: ProfileKind,
    /// Primacy weight `a`.
    #[serde(default = "defaults::weight")]
    pub a: f64,
    /// Recency weight `b`.
    #[serde(default = "defaults::weight")]
    pub b: f64,
    /// Peak decay rate `k` per position.
    #[serde(default = "defaults::decay")]
    pub k: f64,
    /// Floor weight `ε`.
    #[serde(default = "defaults::floor")]
    pub floor: f64,
    /// Distance (positions) over which the floor thins by a factor `e`.
    #[serde(default = "defaults::span", with = "span_serde")]
    pub span: f64,
}

mod defaults {
    pub fn weight() -> f64 {
        1.0
    }
    pub fn decay() -> f64 {
        0.05
    }
    pub fn floor() -> f64 {
        0.2
    }
    pub fn span() -> f64 {
        4096.0
    }
}

/// `span = "inf"` (or any non-finite) round-trips as the string `"inf"`.
mod span_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad span `{s}`"))),
        }
    }
}

impl Default for SalienceProfile {
    fn default() -> Self {
        Self::u_shaped()
    }
}

impl SalienceProfile {
    pub fn uniform() -> Self {
        Self { kind: ProfileKind::Uniform, ..Self::u_shaped() }
    }

    pub fn u_shaped() -> Self {
        Self {
            kind: ProfileKind::UShaped,
            a: defaults::weight(),
            b: defaults::weight(),
            k: defaults::decay(),
            floor: defaults::floor(),
            span: defaults::span(),
        }
    }

    pub fn recency_dominant() -> Self {
        Self { kind: ProfileKind::RecencyDominant, ..Self::u_shaped() }
    }

    pub fn validate(&self) -> Result<(), SalienceError> {
        let bad = |m: &str| Err(SalienceError::Parameter(m.to_owned()));
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return bad("a must be a finite value >= 0");
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return bad("b must be a finite value >= 0");
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad("k must be > 0");
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return bad("floor must lie in (0, 1)");
        }
        if self.span.is_nan() || self.span <= 0.0 {
            return bad("span must be > 0");
        }
        Ok(())
    }

    /// Unnormalized weight of position `i` (1-based) in an `n`-long field.
    pub fn raw(&self, i: usize, n: usize) -> f64 {
        let (i, n) = (i as f64, n as f64);
        match self.kind {
            ProfileKind::Uniform => 1.0,
            ProfileKind::UShaped => {
                let d = (i - 1.0).min(n - i);
                self.floor * (-d / self.span).exp()
                    + self.a * (-self.k * (i - 1.0)).exp()
                    + self.b * (-self.k * (n - i)).exp()
            }
            ProfileKind::RecencyDominant => {
                self.floor * (-(n - i) / self.span).exp() + self.b * (-self.k * (n - i)).exp()
            }
        }
    }

    /// Sum of raw weights over positions `lo..=hi` (1-based, inclusive).
    pub fn raw_mass(&self, lo: usize, hi: usize, n: usize) -> f64 {
        if lo > hi {
            return 0.0;
        }
        match self.kind {
            ProfileKind::Uniform => (hi - lo + 1) as f64,
            ProfileKind::UShaped => {
                let peaks = self.a * geom(self.k, lo - 1, hi - 1) + self.b * geom(self.k, n - hi, n - lo);
                // Left half: d = i-1 for i <= (n+1)/2; right half: d = n-i.
                let mid = n.div_ceil(2);
                let mut floor = 0.0;
                if lo <= mid {
                    floor += geom(1.0 / self.span, lo - 1, hi.min(mid) - 1);
                }
                if hi > mid {
                    let l = lo.max(mid + 1);
                    floor += geom(1.0 / self.span, n - hi, n - l);
                }
                peaks + self.floor * floor
            }
            ProfileKind::RecencyDominant => {
                self.floor * geom(1.0 / self.span, n - hi, n - lo) + self.b * geom(self.k, n - hi, n - lo)
            }
        }
    }

    pub fn normalizer(&self, n: usize) -> f64 {
        self.raw_mass(1, n, n)
    }

    /// `s(i, n)`.
    pub fn salience(&self, i: usize, n: usize) -> Result<f64, SalienceError> {
        if i == 0 || i > n {
            return Err(SalienceError::Position { i, n });
        }
        Ok(match self.kind {
            ProfileKind::Uniform => 1.0 / n as f64,
            _ => self.raw(i, n) / self.normalizer(n),
        })
    }

    /// Mean of `n·s(i, n)` over `lo..=hi`: salience of a span relative to the
    /// uniform baseline (1.0 means "as salient as ideal attention").
    pub fn relative_span(&self, lo: usize, hi: usize, n: usize) -> Result<f64, SalienceError> {
        if lo == 0 || hi > n || lo > hi {
            return Err(SalienceError::Position { i: lo.max(hi), n });
        }
        let mass = self.raw_mass(lo, hi, n) / self.normalizer(n);
        Ok(n as f64 * mass / (hi - lo + 1) as f64)
    }

    /// All `n` weights, by direct evaluation.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (1..=n).map(|i| self.raw(i, n)).collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / z).collect()
    }

    pub fn diagnostics(&self, n: usize, threshold: f64) -> Result<SalienceDiagnostics, SalienceError> {
        if n < 2 {
            return Err(SalienceError::Parameter("diagnostics need n >= 2".into()));
        }
        let w = self.weights(n);
        let entropy: f64 = -w.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>();
        let normalized_entropy = match self.kind {
            ProfileKind::Uniform => 1.0,
            _ => (entropy / (n as f64).ln()).clamp(0.0, 1.0),
        };
        let cut = threshold / n as f64;
        let effective_positions = w.iter().filter(|p| **p >= cut).count();
        Ok(SalienceDiagnostics { entropy, normalized_entropy, effective_positions })
    }
}

/// `Σ_{m=m0}^{m1} e^{-rate·m}`; `rate = 0` counts terms.
fn geom(rate: f64, m0: usize, m1: usize) -> f64 {
    if m0 > m1 {
        return 0.0;
    }
    if rate == 0.0 {
        return (m1 - m0 + 1) as f64;
    }
    let first = (-rate * m0 as f64).exp();
    let past = (-rate * (m1 + 1) as f64).exp();
    (first - past) / -(-rate).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SalienceDiagnostics {
    /// Shannon entropy (nats) of the weight distribution.
    pub entropy: f64,
    /// Entropy divided by `ln n`.
    pub normalized_entropy: f64,
    /// Positions whose weight is at least `threshold / n`.
    pub effective_positions: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_mass(p: &SalienceProfile, lo: usize, hi: usize, n: usize) -> f64 {
        (lo..=hi).map(|i| p.raw(i, n)).sum()
    }

    #[test]
    fn uniform_is_one_over_n() {
        let p = SalienceProfile::uniform();
        assert_eq!(p.salience(3, 10).unwrap(), 0.1);
    }

    #[test]
    fn out_of_range_position() {
        let p = SalienceProfile::u_shaped();
        assert_eq!(p.salience(0, 5), Err(SalienceError::Position { i: 0, n: 5 }));
        assert_eq!(p.salience(6, 5), Err(SalienceError::Position { i: 6, n: 5 }));
    }

    #[test]
    fn closed_form_mass_matches_direct_sum() {
        let mut inf = SalienceProfile::u_shaped();
        inf.span = f64::INFINITY;
        for p in [SalienceProfile::u_shaped(), SalienceProfile::recency_dominant(), SalienceProfile::uniform(), inf] {
            for n in [1usize, 2, 3, 7, 8, 64, 513, 5000] {
                for (lo, hi) in [(1, n), (1, 1), (n, n), (n.div_ceil(2), n), (1.max(n / 3), (2 * n / 3).max(1))] {
                    if lo > hi {
                        continue;
                    }
                    let a = p.raw_mass(lo, hi, n);
                    let b = direct_mass(&p, lo, hi, n);
                    assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{:?} n={n} [{lo},{hi}] {a} vs {b}", p.kind);
                }
            }
        }
    }

    #[test]
    fn u_shape_defaults_at_100() {
        let p = SalienceProfile::u_shaped();
        let mid = p.salience(50, 100).unwrap();
        assert!(p.salience(1, 100).unwrap() > mid);
        assert!(p.salience(100, 100).unwrap() > mid);
        let total: f64 = (1..=100).map(|i| p.salience(i, 100).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_entropy_is_maximal() {
        let d = SalienceProfile::uniform().diagnostics(16, 0.5).unwrap();
        assert_eq!(d.normalized_entropy, 1.0);
        assert_eq!(d.effective_positions, 16);
    }

    #[test]
    fn u_shaped_entropy_grows() {
        let p = SalienceProfile::u_shaped();
        let h64 = p.diagnostics(64, 0.5).unwrap().entropy;
        let h1024 = p.diagnostics(1024, 0.5).unwrap().entropy;
        assert!(h1024 > h64);
        let mut prev = 0.0;
        let mut n = 8;
        while n <= 4096 {
            let h = p.diagnostics(n, 0.5).unwrap().entropy;
            assert!(h >= prev, "entropy dropped at n={n}");
            prev = h;
            n *= 2;
        }
    }

    #[test]
    fn recency_dominant_concentrates() {
        let d = SalienceProfile::recency_dominant().diagnostics(64, 0.5).unwrap();
        assert!(d.effective_positions < 64);
        assert!(d.normalized_entropy < 1.0);
    }

    #[test]
    fn trough_deepens_with_length() {
        let p = SalienceProfile::u_shaped();
        let rel = |n: usize| p.relative_span(n / 2, n / 2, n).unwrap();
        assert!(rel(512) > 0.5);
        assert!(rel(32768) < 0.1);
        assert!(rel(32768) < rel(8192));
    }

    #[test]
    fn validation() {
        let mut p = SalienceProfile::u_shaped();
        p.floor = 1.0;
        assert!(p.validate().is_err());
        p.floor = 0.2;
        p.k = 0.0;
        assert!(p.validate().is_err());
        assert!(SalienceProfile::u_shaped().validate().is_ok());
    }

    #[test]
    fn span_inf_parses() {
        let p: SalienceProfile = toml::from_str("kind = \"u_shaped\"\nspan = \"inf\"").unwrap();
        assert!(p.span.is_infinite());
        let p: SalienceProfile = toml::from_str("kind = \"uniform\"").unwrap();
        assert_eq!(p.span, 4096.0);
    }
}
