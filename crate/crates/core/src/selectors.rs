//! Spectral selectors `c_j`, the pair `c_±` and the time function `τ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lens::LensSpace;
use crate::maslov::{evaluate_step_with, MaslovEvaluation, MaslovOptions};
use crate::path::UnitaryPath;

/// Selectors of one path, backed by a single window of the Maslov step
/// function and extended to every `j` by periodicity.
#[derive(Debug, Clone)]
pub struct SpectralSelectors {
    evaluation: MaslovEvaluation,
}

impl SpectralSelectors {
    pub fn compute(p: &UnitaryPath) -> Result<Self> {
        Self::compute_with(p, &MaslovOptions::default(), 0.0)
    }

    pub fn compute_with(p: &UnitaryPath, opts: &MaslovOptions, window_base: f64) -> Result<Self> {
        let evaluation = evaluate_step_with(p, window_base, opts)?;
        if !evaluation.is_consistent() {
            return Err(Error::SelfCheck(
                "Maslov step function does not drop by twice the multiplicity at each spectrum point".into(),
            ));
        }
        Ok(Self { evaluation })
    }

    pub fn evaluation(&self) -> &MaslovEvaluation {
        &self.evaluation
    }

    pub fn n(&self) -> usize {
        self.evaluation.n
    }

    /// `c_j = min{T : μ(r̃_{−T}·φ̃) ≤ −j}`.
    pub fn c(&self, j: i64) -> f64 {
        self.evaluation.selector(j).0
    }

    /// `c_+ = c_0`.
    pub fn c_plus(&self) -> f64 {
        self.c(0)
    }

    /// `c_− = c_{−2n+1}`.
    pub fn c_minus(&self) -> f64 {
        self.c(1 - 2 * self.n() as i64)
    }

    /// `c_j` with the spectrum point it equals.
    pub fn value(&self, j: i64) -> SelectorValue {
        let (value, i) = self.evaluation.selector(j);
        let point = &self.evaluation.points[i];
        SelectorValue {
            j,
            value,
            phase: point.phase,
            multiplicity: point.multiplicity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectorValue {
    pub j: i64,
    pub value: f64,
    /// The member of `Ā` mod `2π` that `value` represents.
    pub phase: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectorReport {
    pub lens: LensSpace,
    pub j_lo: i64,
    pub j_hi: i64,
    pub values: Vec<SelectorValue>,
    pub c_plus: f64,
    pub c_minus: f64,
    pub step: MaslovEvaluation,
}

impl SelectorReport {
    pub fn get(&self, j: i64) -> Option<f64> {
        self.values.iter().find(|v| v.j == j).map(|v| v.value)
    }
}

pub fn selector(p: &UnitaryPath, j: i64) -> Result<f64> {
    Ok(SpectralSelectors::compute(p)?.c(j))
}

pub fn selector_range(p: &UnitaryPath, j_lo: i64, j_hi: i64) -> Result<SelectorReport> {
    selector_range_with(p, j_lo, j_hi, &MaslovOptions::default(), 0.0)
}

pub fn selector_range_with(
    p: &UnitaryPath,
    j_lo: i64,
    j_hi: i64,
    opts: &MaslovOptions,
    window_base: f64,
) -> Result<SelectorReport> {
    if j_lo > j_hi {
        return Err(Error::InvalidInterval(j_lo as f64, j_hi as f64));
    }
    let sel = SpectralSelectors::compute_with(p, opts, window_base)?;
    Ok(SelectorReport {
        lens: p.lens().clone(),
        j_lo,
        j_hi,
        values: (j_lo..=j_hi).map(|j| sel.value(j)).collect(),
        c_plus: sel.c_plus(),
        c_minus: sel.c_minus(),
        step: sel.evaluation,
    })
}

/// Truncated time function: the average of `c_0(φ̃·ψ̃_j)` over the first
/// `cap` basis elements with weights `1 / (2^j · max(1, |c_0(ψ̃_j)|))`.
pub fn time_function(p: &UnitaryPath, basis: &[UnitaryPath], cap: usize) -> Result<f64> {
    if basis.is_empty() || cap == 0 || cap > basis.len() {
        return Err(Error::SelfCheck(format!(
            "time function needs 1 ≤ cap ≤ {} basis elements, got {cap}",
            basis.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, psi) in basis[..cap].iter().enumerate() {
        let w = 1.0 / (2f64.powi(j as i32 + 1) * selector(psi, 0)?.abs().max(1.0));
        num += w * selector(&p.product(psi)?, 0)?;
        den += w;
    }
    Ok(num / den)
}
