//! The Maslov index of a unitary path via based families of quadratic
//! generating functions, and its step function under Reeb shifts.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::path::UnitaryPath;
use crate::quadratic::{cayley_gf, InvariantQuadraticForm, NULLITY_TOLERANCE};

/// Largest phase travel allowed inside one factor of a based family.
pub const DEFAULT_ARC: f64 = FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaslovOptions {
    /// Relative nullity tolerance for indices.
    pub tol: f64,
    /// Maximal phase travel per subdivision interval, in `(0, π/2]`.
    pub arc: f64,
}

impl Default for MaslovOptions {
    fn default() -> Self {
        Self {
            tol: NULLITY_TOLERANCE,
            arc: DEFAULT_ARC,
        }
    }
}

/// Breakpoints with phase travel at most `π/2` on every interval.
pub fn subdivide(p: &UnitaryPath) -> Vec<f64> {
    subdivide_with_arc(p, DEFAULT_ARC)
}

/// Breakpoints `0 = s_0 < … < s_N = 1` such that `∫ ‖A_t‖ dt ≤ arc` on each
/// interval, which bounds every eigenphase of `U_t U_{s_i}⁻¹` by `arc`.
pub fn subdivide_with_arc(p: &UnitaryPath, arc: f64) -> Vec<f64> {
    let arc = arc.clamp(1e-6, FRAC_PI_2);
    let starts = p.breakpoints();
    let speeds = p.speeds();
    let total: f64 = speeds
        .iter()
        .enumerate()
        .map(|(i, v)| v * (starts[i + 1] - starts[i]))
        .sum();
    let pieces = (total / arc).ceil().max(1.0) as usize;
    let step = total / pieces as f64;
    let mut out = vec![0.0];
    let mut travelled = 0.0;
    let mut next = step;
    for (i, &v) in speeds.iter().enumerate() {
        let (a, b) = (starts[i], starts[i + 1]);
        let len = v * (b - a);
        while v > 0.0 && out.len() < pieces && next <= travelled + len {
            let t = a + (next - travelled) / v;
            if t > out[out.len() - 1] && t < 1.0 {
                out.push(t);
            }
            next += step;
        }
        travelled += len;
    }
    out.push(1.0);
    out
}

/// `t ↦ F_t = C(V_0(t)) ♯ … ♯ C(V_{N−1}(t))` with
/// `V_i(t) = U_{clamp(t, s_i, s_{i+1})} U_{s_i}⁻¹`.
#[derive(Debug, Clone)]
pub struct BasedFamily<'a> {
    path: &'a UnitaryPath,
    breakpoints: Vec<f64>,
    node_inverses: Vec<CMatrix>,
}

impl<'a> BasedFamily<'a> {
    pub fn new(path: &'a UnitaryPath, breakpoints: Vec<f64>) -> Result<Self> {
        let ok = breakpoints.len() >= 2
            && breakpoints[0] == 0.0
            && breakpoints[breakpoints.len() - 1] == 1.0
            && breakpoints.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::SelfCheck("breakpoints must increase from 0 to 1".into()));
        }
        let node_inverses = breakpoints[..breakpoints.len() - 1]
            .iter()
            .map(|&s| path.at(s).adjoint())
            .collect();
        Ok(Self {
            path,
            breakpoints,
            node_inverses,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn factor_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Real dimension of every `F_t`.
    pub fn dim(&self) -> usize {
        let n = self.path.dim();
        2 * n + 4 * n * (self.factor_count() - 1)
    }

    pub fn factor(&self, i: usize, t: f64) -> CMatrix {
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let tc = t.clamp(a, b);
        if tc == a {
            let n = self.path.dim();
            return CMatrix::identity(n, n);
        }
        self.path.at(tc) * &self.node_inverses[i]
    }

    pub fn form_at(&self, t: f64) -> Result<InvariantQuadraticForm> {
        let lens = self.path.lens();
        let mut acc = cayley_gf(&self.factor(0, t), lens)?;
        for i in 1..self.factor_count() {
            acc = acc.sharp(&cayley_gf(&self.factor(i, t), lens)?)?;
        }
        Ok(acc)
    }

    pub fn index_at(&self, t: f64, tol: f64) -> Result<usize> {
        Ok(self.form_at(t)?.index(tol))
    }

    /// `ind(F_0)`. It depends only on `(n, N)` and the tolerance, so it is
    /// computed once per configuration.
    pub fn initial_index(&self, tol: f64) -> Result<usize> {
        // (n, N, tolerance bits) -> index
        type Cache = Mutex<HashMap<(usize, usize, u64), usize>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let key = (self.path.dim(), self.factor_count(), tol.to_bits());
        let cache = CACHE.get_or_init(Default::default);
        if let Some(&i) = cache.lock().expect("index cache poisoned").get(&key) {
            return Ok(i);
        }
        let i = self.index_at(0.0, tol)?;
        cache.lock().expect("index cache poisoned").insert(key, i);
        Ok(i)
    }

    /// `ind(F_0) − ind(F_1)`, checking `ind(F_0) = 2nN` on the way.
    pub fn maslov(&self, tol: f64) -> Result<i64> {
        let i0 = self.initial_index(tol)?;
        let expected = 2 * self.path.dim() * self.factor_count();
        if i0 != expected {
            return Err(Error::SelfCheck(format!(
                "index of the initial form is {i0}, expected {expected}"
            )));
        }
        let i1 = self.index_at(1.0, tol)?;
        Ok(i0 as i64 - i1 as i64)
    }
}

pub fn maslov_index(p: &UnitaryPath) -> Result<i64> {
    maslov_index_with(p, &MaslovOptions::default())
}

pub fn maslov_index_with(p: &UnitaryPath, opts: &MaslovOptions) -> Result<i64> {
    maslov_index_with_breakpoints(p, subdivide_with_arc(p, opts.arc), opts.tol)
}

/// Maslov index from a caller-chosen subdivision. Fails with a Cayley-domain
/// error if some factor reaches eigenvalue `−1`.
pub fn maslov_index_with_breakpoints(p: &UnitaryPath, breakpoints: Vec<f64>, tol: f64) -> Result<i64> {
    BasedFamily::new(p, breakpoints)?.maslov(tol)
}

/// `μ(r̃_{−T} · φ̃)`.
pub fn maslov_shifted(p: &UnitaryPath, time: f64) -> Result<i64> {
    maslov_shifted_with(p, time, &MaslovOptions::default())
}

pub fn maslov_shifted_with(p: &UnitaryPath, time: f64, opts: &MaslovOptions) -> Result<i64> {
    if !time.is_finite() {
        return Err(Error::NonFinite("shift time"));
    }
    maslov_index_with(&p.reeb_shift(time), opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepPoint {
    /// Position in `[window_base, window_base + 2π)`.
    pub position: f64,
    /// Canonical eigenphase in `[0, 2π)` the position represents.
    pub phase: f64,
    pub multiplicity: usize,
    /// Midpoint of the gap `(position, next position)`.
    pub sample: f64,
    /// `μ(r̃_{−T}·φ̃)` on the gap starting at this point.
    pub value: i64,
    /// Value just right of the point.
    pub value_right: i64,
    /// Value on the previous gap minus `value`.
    pub drop: i64,
}

/// The step function `T ↦ μ(r̃_{−T}·φ̃)` over one window of length `2π`;
/// outside the window it extends by `μ(T + 2π) = μ(T) − 2n`.
#[derive(Debug, Clone, Serialize)]
pub struct MaslovEvaluation {
    pub n: usize,
    pub window_base: f64,
    pub points: Vec<StepPoint>,
}

impl MaslovEvaluation {
    pub fn period_drop(&self) -> i64 {
        2 * self.n as i64
    }

    /// Step value at `T`, using periodicity outside the window.
    pub fn value(&self, time: f64) -> i64 {
        let mut m = ((time - self.window_base) / TAU).floor() as i64;
        let mut local = time - TAU * m as f64;
        // rounding can leave `local` just outside the window
        if local >= self.window_base + TAU {
            local -= TAU;
            m += 1;
        } else if local < self.window_base {
            local += TAU;
            m -= 1;
        }
        let shift = -self.period_drop() * m;
        match self.points.iter().rposition(|p| p.position <= local) {
            Some(i) => self.points[i].value + shift,
            None => self.points[self.points.len() - 1].value + self.period_drop() + shift,
        }
    }

    /// `min{T : μ(r̃_{−T}·φ̃) ≤ −j}`, returned together with the index of
    /// the spectrum point it sits on.
    pub fn selector(&self, j: i64) -> (f64, usize) {
        let two_n = self.period_drop();
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let m = (p.value + j).div_euclid(two_n) + i64::from((p.value + j).rem_euclid(two_n) != 0);
                (p.position + TAU * m as f64, i)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("spectrum is non-empty")
    }

    /// Whether drops equal twice the multiplicities, values are
    /// non-increasing and right-continuous.
    pub fn is_consistent(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.drop == 2 * p.multiplicity as i64 && p.value_right == p.value && p.drop >= 0)
    }
}

/// Evaluates the step function on one window `[base, base + 2π)`: once per
/// gap of `Ā` at its midpoint and once just right of each spectrum point.
pub fn evaluate_step(p: &UnitaryPath, window_base: f64) -> Result<MaslovEvaluation> {
    evaluate_step_with(p, window_base, &MaslovOptions::default())
}

pub fn evaluate_step_with(p: &UnitaryPath, window_base: f64, opts: &MaslovOptions) -> Result<MaslovEvaluation> {
    if !window_base.is_finite() {
        return Err(Error::NonFinite("window base"));
    }
    let spectrum = p.action_spectrum();
    let mut pts: Vec<(f64, f64, usize)> = spectrum
        .phases_sphere
        .iter()
        .map(|s| {
            let mut pos = s.phase + TAU * ((window_base - s.phase) / TAU).ceil();
            if pos >= window_base + TAU {
                pos -= TAU;
            }
            (pos, s.phase, s.multiplicity)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let count = pts.len();

    let samples: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let here = pts[i].0;
            let next = if i + 1 < count { pts[i + 1].0 } else { pts[0].0 + TAU };
            let gap = next - here;
            (0.5 * (here + next), here + (0.01 * gap).min(1e-5))
        })
        .collect();
    let two_n = 2 * p.dim() as i64;
    // Evaluate at the 2π-translate closest to the mean phase of the path,
    // where the shifted path is shortest, and undo the translation with
    // μ(T + 2πm) = μ(T) − 2nm.
    let center = p.det_phase_lift() / p.dim() as f64;
    let recentered = |time: f64| -> Result<i64> {
        let m = ((center - time) / TAU).round();
        Ok(maslov_shifted_with(p, time + TAU * m, opts)? + two_n * m as i64)
    };
    let values: Vec<(i64, i64)> = samples
        .par_iter()
        .map(|&(mid, right)| Ok((recentered(mid)?, recentered(right)?)))
        .collect::<Result<_>>()?;

    let points = (0..count)
        .map(|i| {
            let before = if i == 0 {
                values[count - 1].0 + two_n
            } else {
                values[i - 1].0
            };
            StepPoint {
                position: pts[i].0,
                phase: pts[i].1,
                multiplicity: pts[i].2,
                sample: samples[i].0,
                value: values[i].0,
                value_right: values[i].1,
                drop: before - values[i].0,
            }
        })
        .collect();
    Ok(MaslovEvaluation {
        n: p.dim(),
        window_base,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lens::LensSpace;
    use crate::linalg::{frobenius, hermitian_norm, unitary_phases};
    use crate::path::Segment;
    use crate::random::{diagonal_generator, random_path, trial_rng};
    use std::f64::consts::PI;

    /// Oracle independent of generating functions: lift the eigenphases of
    /// `U_1` so that they sum to the continuous lift of `arg det`, then
    /// count `2 Σ ⌈θ_j / 2π⌉`.
    fn phase_count_oracle(p: &UnitaryPath) -> i64 {
        let phases = unitary_phases(p.endpoint());
        let extra = ((p.det_phase_lift() - phases.iter().sum::<f64>()) / TAU).round() as i64;
        let ceil = |x: f64| -> i64 {
            let q = x / TAU;
            if (q - q.round()).abs() < 1e-9 {
                q.round() as i64
            } else {
                q.ceil() as i64
            }
        };
        2 * (phases.iter().map(|&x| ceil(x)).sum::<i64>() + extra)
    }

    fn reeb_mu(n: usize, t: f64) -> i64 {
        2 * n as i64 * (t / TAU).ceil() as i64
    }

    #[test]
    fn subdivision_respects_arc() {
        let l = LensSpace::new(2, &[1, 1]).unwrap();
        assert_eq!(subdivide(&UnitaryPath::reeb(&l, PI / 2.0)), vec![0.0, 1.0]);
        assert!(subdivide(&UnitaryPath::reeb(&l, TAU)).len() > 4);
        assert_eq!(subdivide(&UnitaryPath::identity(&l)), vec![0.0, 1.0]);
        let mut rng = trial_rng(3, 0);
        for _ in 0..20 {
            let p = random_path(&mut rng, &l, 4, 6.0);
            let bp = subdivide(&p);
            for w in bp.windows(2) {
                let v = p.at(w[1]) * p.at(w[0]).adjoint();
                let worst = unitary_phases(&v).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(worst <= FRAC_PI_2 + 1e-9);
            }
        }
    }

    #[test]
    fn reeb_values_small_grid() {
        for (k, n) in [(2, 1), (3, 2), (5, 3)] {
            let l = LensSpace::standard(k, n).unwrap();
            for t in [-0.1, 0.0, 0.01, 1.0, PI, TAU - 1e-6, TAU, TAU + 1e-6, 6.0 * PI, -7.0] {
                let mu = maslov_index(&UnitaryPath::reeb(&l, t)).unwrap();
                let want = if t == 0.0 { 0 } else { reeb_mu(n, t) };
                assert_eq!(mu, want, "k={k} n={n} T={t}");
            }
        }
    }

    #[test]
    fn agrees_with_phase_oracle_on_random_paths() {
        let mut rng = trial_rng(11, 0);
        for (k, w) in [(2, vec![1, 1]), (3, vec![1, 2]), (4, vec![1, 3, 1]), (6, vec![1, 5])] {
            let l = LensSpace::new(k, &w).unwrap();
            for _ in 0..25 {
                let p = random_path(&mut rng, &l, 3, 5.0);
                assert_eq!(maslov_index(&p).unwrap(), phase_count_oracle(&p));
            }
        }
    }

    #[test]
    fn shift_periodicity() {
        let mut rng = trial_rng(12, 0);
        let l = LensSpace::new(3, &[1, 1]).unwrap();
        for _ in 0..10 {
            let p = random_path(&mut rng, &l, 2, 3.0);
            let t = 0.37;
            let a = maslov_shifted(&p, t).unwrap();
            let b = maslov_shifted(&p, t + TAU).unwrap();
            assert_eq!(b, a - 4);
            assert_eq!(maslov_shifted(&p, 0.0).unwrap(), maslov_index(&p).unwrap());
        }
        let id = UnitaryPath::identity(&l);
        for t in [-3.0, 0.5, 7.0] {
            assert_eq!(maslov_shifted(&id, t).unwrap(), reeb_mu(2, -t));
        }
    }

    #[test]
    fn coarse_breakpoints_are_rejected() {
        let l = LensSpace::new(2, &[1, 1]).unwrap();
        let p = UnitaryPath::reeb(&l, PI);
        assert!(matches!(
            maslov_index_with_breakpoints(&p, vec![0.0, 1.0], NULLITY_TOLERANCE),
            Err(Error::CayleyDomain(_))
        ));
        assert!(maslov_index_with_breakpoints(&p, vec![0.0, 0.5, 0.5, 1.0], NULLITY_TOLERANCE).is_err());
    }

    #[test]
    fn family_dimension_is_constant() {
        let l = LensSpace::new(3, &[1, 1, 1]).unwrap();
        let p = UnitaryPath::reeb(&l, 9.0);
        let fam = BasedFamily::new(&p, subdivide(&p)).unwrap();
        let d = fam.dim();
        for t in [0.0, 0.3, 0.71, 1.0] {
            assert_eq!(fam.form_at(t).unwrap().dim(), d);
        }
        assert_eq!(fam.index_at(0.0, NULLITY_TOLERANCE).unwrap(), 6 * fam.factor_count());
        assert!(frobenius(&(fam.factor(0, 0.0) - CMatrix::identity(3, 3))) == 0.0);
    }

    #[test]
    fn step_for_diagonal_path() {
        let l = LensSpace::new(2, &[1, 1]).unwrap();
        let (a, b) = (0.9, 2.5);
        let p = UnitaryPath::from_segments(&l, vec![Segment::new(diagonal_generator(&[a, b]), 1.0)]).unwrap();
        let ev = evaluate_step(&p, 0.0).unwrap();
        assert!(ev.is_consistent());
        assert_eq!(ev.points.len(), 2);
        assert!(ev.points.iter().all(|p| p.drop == 2));
        let r = UnitaryPath::reeb(&l, 4.0);
        let ev = evaluate_step(&r, -1.0).unwrap();
        assert_eq!(ev.points.len(), 1);
        assert_eq!(ev.points[0].drop, 4);
        assert!((ev.points[0].position - 4.0).abs() < 1e-12);
        assert_eq!(ev.value(4.0), maslov_shifted(&r, 4.0).unwrap());
        assert_eq!(ev.value(3.9), maslov_shifted(&r, 3.9).unwrap());
        assert_eq!(ev.value(-20.0), maslov_shifted(&r, -20.0).unwrap());
        // the right end of a window sits one period below its left end
        let base = 5.6043511649485405;
        let ev = evaluate_step(&r, base).unwrap();
        assert_eq!(ev.value(base + TAU), ev.value(base) - 4);
        let id = evaluate_step(&UnitaryPath::identity(&l), -0.5).unwrap();
        assert_eq!(id.points[0].position, 0.0);
        assert_eq!(id.points[0].drop, 4);
    }

    #[test]
    fn generator_norm_bound_holds_after_shift() {
        let l = LensSpace::new(2, &[1, 1]).unwrap();
        let p = UnitaryPath::reeb(&l, 1.0).reeb_shift(3.0);
        assert!((hermitian_norm(&p.segments()[0].generator) - 2.0).abs() < 1e-12);
    }
}
