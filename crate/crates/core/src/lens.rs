//! Lens spaces `L_k^{2n-1}(w)`: validation, deck group phases, the Reeb
//! period and rounding to multiples of it.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{diagonal_unitary, CMatrix};

/// Values within `SNAP_TOLERANCE · max(1, |x|)` of a multiple of the Reeb
/// period are treated as that multiple.
pub const SNAP_TOLERANCE: f64 = 1e-9;

/// An angle of the exact form `2π · num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactAngle {
    pub num: i64,
    pub den: i64,
}

impl ExactAngle {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den > 0, "denominator must be positive");
        Self { num, den }
    }

    pub fn zero(den: i64) -> Self {
        Self { num: 0, den }
    }

    pub fn value(&self) -> f64 {
        TAU * self.num as f64 / self.den as f64
    }

    /// Serializable triple `{num, den, approx}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "num": self.num, "den": self.den, "approx": self.value() })
    }
}

impl PartialOrd for ExactAngle {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactAngle {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundMode {
    Ceil,
    Floor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LensSpec", into = "LensSpec")]
pub struct LensSpace {
    k: u32,
    weights: Vec<u32>,
    k_prime: u32,
    /// The Reeb period is `2π · reeb_steps / k`.
    reeb_steps: u32,
}

/// Wire form of a lens space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LensSpec {
    pub k: i64,
    pub weights: Vec<i64>,
}

impl TryFrom<LensSpec> for LensSpace {
    type Error = Error;

    fn try_from(spec: LensSpec) -> Result<Self> {
        LensSpace::new(spec.k, &spec.weights)
    }
}

impl From<LensSpace> for LensSpec {
    fn from(l: LensSpace) -> Self {
        LensSpec {
            k: l.k as i64,
            weights: l.weights.iter().map(|&w| w as i64).collect(),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn smallest_prime_factor(k: u32) -> u32 {
    (2..=k).find(|d| k.is_multiple_of(*d)).unwrap_or(k)
}

/// Least `r ∈ {1, …, k}` such that `2π r / k` is the time of a Reeb orbit
/// closing up in the quotient: there is `m` with `m·w_j ≡ r (mod k)` for all
/// `j` simultaneously (`r = k` always works via `m = 0`).
fn reeb_steps(k: u32, weights: &[u32]) -> u32 {
    let k64 = k as u64;
    let mut best = k;
    for m in 0..k64 {
        let r = (m * weights[0] as u64) % k64;
        if r == 0 {
            continue;
        }
        if weights.iter().all(|&w| (m * w as u64) % k64 == r) {
            best = best.min(r as u32);
        }
    }
    best
}

impl LensSpace {
    pub fn new(k: i64, weights: &[i64]) -> Result<Self> {
        if k < 2 {
            return Err(Error::OrderTooSmall(k));
        }
        if k > u32::MAX as i64 {
            return Err(Error::OrderTooSmall(k));
        }
        if weights.is_empty() {
            return Err(Error::EmptyWeights);
        }
        let mut ws = Vec::with_capacity(weights.len());
        for (index, &weight) in weights.iter().enumerate() {
            if weight < 1 || weight > u32::MAX as i64 {
                return Err(Error::NonPositiveWeight { index, weight });
            }
            if gcd(weight as u64, k as u64) != 1 {
                return Err(Error::NotCoprime { index, weight, k });
            }
            ws.push(weight as u32);
        }
        let k = k as u32;
        Ok(Self {
            k,
            k_prime: smallest_prime_factor(k),
            reeb_steps: reeb_steps(k, &ws),
            weights: ws,
        })
    }

    /// `L_k(1, …, 1)` in complex dimension `n`.
    pub fn standard(k: i64, n: usize) -> Result<Self> {
        Self::new(k, &vec![1; n])
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Complex dimension of the ambient space.
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn k_prime(&self) -> u32 {
        self.k_prime
    }

    /// The quotient circle; allowed but of little interest.
    pub fn is_degenerate(&self) -> bool {
        self.n() == 1
    }

    pub fn has_equal_weights(&self) -> bool {
        let w0 = self.weights[0] % self.k;
        self.weights.iter().all(|&w| w % self.k == w0)
    }

    /// Angles `2π w_j / k` of the deck generator.
    pub fn generator_phases(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|&w| TAU * (w % self.k) as f64 / self.k as f64)
            .collect()
    }

    /// Angles `2π w_j / k'` of the generator of the `Z_{k'}` subgroup that
    /// acts on generating functions.
    pub fn form_phases(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|&w| TAU * (w % self.k_prime) as f64 / self.k_prime as f64)
            .collect()
    }

    /// The deck generator `g = diag(e^{2πi w_j / k})`.
    pub fn deck_generator(&self) -> CMatrix {
        diagonal_unitary(&self.generator_phases())
    }

    /// `g^m`.
    pub fn deck_power(&self, m: i64) -> CMatrix {
        let k = self.k as i64;
        let phases: Vec<f64> = self
            .weights
            .iter()
            .map(|&w| TAU * ((w as i64 * m).rem_euclid(k)) as f64 / k as f64)
            .collect();
        diagonal_unitary(&phases)
    }

    /// Minimal period of closed Reeb orbits on the quotient, `2π/k`.
    pub fn minimal_orbit_period(&self) -> f64 {
        TAU / self.k as f64
    }

    pub fn reeb_period_exact(&self) -> ExactAngle {
        ExactAngle::new(self.reeb_steps as i64, self.k as i64)
    }

    pub fn reeb_period(&self) -> f64 {
        self.reeb_period_exact().value()
    }

    /// Number of Reeb periods in one full turn `2π`.
    pub fn periods_per_turn(&self) -> i64 {
        (self.k / self.reeb_steps) as i64
    }

    /// `⌈x / T_w⌉` or `⌊x / T_w⌋`, snapping values that are within tolerance
    /// of a multiple.
    pub fn period_count(&self, x: f64, mode: RoundMode) -> i64 {
        let t = self.reeb_period();
        let q = x / t;
        let nearest = q.round();
        if (x - nearest * t).abs() <= SNAP_TOLERANCE * x.abs().max(1.0) {
            return nearest as i64;
        }
        match mode {
            RoundMode::Ceil => q.ceil() as i64,
            RoundMode::Floor => q.floor() as i64,
        }
    }

    /// Exact value of `count · T_w`.
    pub fn period_multiple(&self, count: i64) -> ExactAngle {
        ExactAngle::new(count * self.reeb_steps as i64, self.k as i64)
    }

    pub fn round_exact(&self, x: f64, mode: RoundMode) -> ExactAngle {
        self.period_multiple(self.period_count(x, mode))
    }

    pub fn round_to_period(&self, x: f64, mode: RoundMode) -> f64 {
        self.round_exact(x, mode).value()
    }

    pub fn ceil_to_period(&self, x: f64) -> f64 {
        self.round_to_period(x, RoundMode::Ceil)
    }

    pub fn floor_to_period(&self, x: f64) -> f64 {
        self.round_to_period(x, RoundMode::Floor)
    }
}
