//! Spectral norms `ν`, `ν′`, `ν*`, bounds for the discriminant and
//! oscillation norms, and the Reeb geodesic report.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lens::{ExactAngle, LensSpace, RoundMode};
use crate::linalg::{distance_from_identity, hermitian_eigenvalues, CMatrix};
use crate::path::{Embeddedness, Segment, UnitaryPath, EMBEDDING_GRID};
use crate::selectors::SpectralSelectors;
use crate::tolerances::Tolerances;

const IDENTITY_TOLERANCE: f64 = 1e-9;
const BISECTION_STEPS: usize = 50;

/// `count · T_w`, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PeriodMultiple {
    pub count: i64,
    pub angle: ExactAngle,
}

impl PeriodMultiple {
    pub fn new(lens: &LensSpace, count: i64) -> Self {
        Self {
            count,
            angle: lens.period_multiple(count),
        }
    }

    pub fn value(&self) -> f64 {
        self.angle.value()
    }
}

impl Serialize for PeriodMultiple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PeriodMultiple", 4)?;
        st.serialize_field("periods", &self.count)?;
        st.serialize_field("num", &self.angle.num)?;
        st.serialize_field("den", &self.angle.den)?;
        st.serialize_field("approx", &self.angle.value())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NuVariant {
    Plain,
    Prime,
}

/// `⌈c_+⌉_{T_w}` and `⌊c_−⌋_{T_w}` in units of `T_w`.
fn rounded_pair(lens: &LensSpace, sel: &SpectralSelectors) -> (i64, i64) {
    (
        lens.period_count(sel.c_plus(), RoundMode::Ceil),
        lens.period_count(sel.c_minus(), RoundMode::Floor),
    )
}

/// Whether the selectors and the endpoint certify the identity class:
/// `c_+ = c_− = 0` and `U_1 = I`.
pub fn is_identity_class(p: &UnitaryPath, sel: &SpectralSelectors) -> bool {
    sel.c_plus().abs() <= IDENTITY_TOLERANCE
        && sel.c_minus().abs() <= IDENTITY_TOLERANCE
        && distance_from_identity(p.endpoint()) <= IDENTITY_TOLERANCE
}

pub fn nu(p: &UnitaryPath, variant: NuVariant) -> Result<PeriodMultiple> {
    let sel = SpectralSelectors::compute(p)?;
    Ok(nu_from(p, &sel, variant))
}

pub fn nu_from(p: &UnitaryPath, sel: &SpectralSelectors, variant: NuVariant) -> PeriodMultiple {
    let lens = p.lens();
    let (up, down) = rounded_pair(lens, sel);
    let plain = up.max(-down);
    let count = match variant {
        NuVariant::Plain => plain,
        NuVariant::Prime if is_identity_class(p, sel) => 0,
        NuVariant::Prime => plain.max(1),
    };
    PeriodMultiple::new(lens, count)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuStar {
    pub value: PeriodMultiple,
    /// Reeb shift `N` attaining the minimum.
    pub shift: PeriodMultiple,
}

/// `min_N ν(r̃_{−N}·φ̃)` over `N ∈ T_w·Z`. Shifting by `N` moves every
/// selector by `−N`, so `ν(r̃_{−N}·φ̃) = max(⌈c_+⌉ − N, N − ⌊c_−⌋)`.
pub fn nu_star(p: &UnitaryPath) -> Result<NuStar> {
    let sel = SpectralSelectors::compute(p)?;
    nu_star_from(p, &sel)
}

pub fn nu_star_from(p: &UnitaryPath, sel: &SpectralSelectors) -> Result<NuStar> {
    let lens = p.lens();
    let (up, down) = rounded_pair(lens, sel);
    let turn = lens.periods_per_turn();
    let (best, shift) = (down - turn..=up + turn)
        .map(|n| ((up - n).max(n - down), n))
        .min()
        .expect("window is non-empty");
    if best > turn + 1 {
        return Err(Error::SelfCheck(format!("descended norm {best}·T_w exceeds 2π + T_w")));
    }
    Ok(NuStar {
        value: PeriodMultiple::new(lens, best),
        shift: PeriodMultiple::new(lens, shift),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    /// Number of embedded pieces found.
    pub count: usize,
    pub breakpoints: Vec<f64>,
    /// False when a piece could not be extended past a negligible length.
    pub complete: bool,
    /// Number of embeddedness queries that came back indeterminate.
    pub indeterminate: usize,
    /// Every generator is semidefinite of one common sign.
    pub sign_definite: bool,
}

fn is_zero_generator(s: &Segment) -> bool {
    s.generator.iter().all(|z| z.norm() <= 1e-14)
}

/// Greedy cover of the path by maximal embedded prefixes. Constant pieces
/// are removed first since they can be reparametrized away.
pub fn greedy_embedded_decomposition(p: &UnitaryPath) -> Result<Decomposition> {
    greedy_embedded_decomposition_with(p, EMBEDDING_GRID)
}

pub fn greedy_embedded_decomposition_with(p: &UnitaryPath, grid: usize) -> Result<Decomposition> {
    let kept: Vec<Segment> = p.segments().iter().filter(|s| !is_zero_generator(s)).cloned().collect();
    if kept.is_empty() {
        return Ok(Decomposition {
            count: 1,
            breakpoints: vec![0.0, 1.0],
            complete: true,
            indeterminate: 0,
            sign_definite: true,
        });
    }
    let sign_definite = {
        let signs: Vec<i8> = kept.iter().map(|s| generator_sign(&s.generator)).collect();
        signs[0] != 0 && signs.iter().all(|&x| x == signs[0])
    };
    let q = UnitaryPath::from_segments(p.lens(), kept)?;

    let mut indeterminate = 0;
    let mut embedded = |a: f64, b: f64| -> Result<bool> {
        match q.is_embedded_with(a, b, grid)? {
            Embeddedness::Embedded { .. } => Ok(true),
            Embeddedness::NotEmbedded { .. } => Ok(false),
            Embeddedness::Indeterminate { .. } => {
                indeterminate += 1;
                Ok(false)
            }
        }
    };

    let mut breakpoints = vec![0.0];
    let mut a = 0.0;
    loop {
        if embedded(a, 1.0)? {
            breakpoints.push(1.0);
            break;
        }
        let (mut lo, mut hi) = (a, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= a {
                break;
            }
            if embedded(a, mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo - a <= 1e-12 {
            breakpoints.push(1.0);
            return Ok(Decomposition {
                count: breakpoints.len() - 1,
                breakpoints,
                complete: false,
                indeterminate,
                sign_definite,
            });
        }
        breakpoints.push(lo);
        a = lo;
    }
    Ok(Decomposition {
        count: breakpoints.len() - 1,
        breakpoints,
        complete: true,
        indeterminate,
        sign_definite,
    })
}

fn generator_sign(a: &CMatrix) -> i8 {
    let ev = hermitian_eigenvalues(a);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo > 0.0 {
        1
    } else if hi < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminantRule {
    /// No positive information; the bound is 0.
    Trivial,
    /// `⌊c_0(φ̃)/T_w⌋ + 1`.
    ForwardSelector,
    /// `⌊c_0(φ̃⁻¹)/T_w⌋ + 1`, using invariance of the norm under inversion.
    InverseSelector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LowerBounds {
    pub dis: i64,
    pub dis_rule: DiscriminantRule,
    pub osc: i64,
    /// `ν / T_w`, one of the two ingredients of `osc`.
    pub osc_from_nu: i64,
}

/// Selector-based lower bounds. Each embedded piece contributes less than
/// `T_w` to `c_0`, so `N` pieces force `c_0 < N·T_w`; the oscillation norm
/// dominates both this count and `ν/T_w`.
pub fn selector_lower_bounds(p: &UnitaryPath) -> Result<LowerBounds> {
    let sel = SpectralSelectors::compute(p)?;
    let inv = SpectralSelectors::compute(&p.inverse())?;
    Ok(lower_bounds_from(p, &sel, &inv))
}

fn lower_bounds_from(p: &UnitaryPath, sel: &SpectralSelectors, inv: &SpectralSelectors) -> LowerBounds {
    let lens = p.lens();
    let chain = |c: f64| {
        if c > IDENTITY_TOLERANCE {
            lens.period_count(c, RoundMode::Floor) + 1
        } else {
            0
        }
    };
    let fwd = chain(sel.c_plus());
    let back = chain(inv.c_plus());
    let (dis, dis_rule) = if fwd == 0 && back == 0 {
        (0, DiscriminantRule::Trivial)
    } else if fwd >= back {
        (fwd, DiscriminantRule::ForwardSelector)
    } else {
        (back, DiscriminantRule::InverseSelector)
    };
    let osc_from_nu = nu_from(p, sel, NuVariant::Plain).count;
    LowerBounds {
        dis,
        dis_rule,
        osc: dis.max(osc_from_nu),
        osc_from_nu,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicVerdict {
    Certified,
    Gap,
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub lens: LensSpace,
    pub c_plus: f64,
    pub c_minus: f64,
    pub nu: PeriodMultiple,
    pub nu_prime: PeriodMultiple,
    pub nu_star: NuStar,
    pub identity_class: bool,
    pub dis_lower: i64,
    pub dis_rule: DiscriminantRule,
    pub dis_upper: Option<usize>,
    pub osc_lower: i64,
    pub osc_upper: Option<usize>,
    pub decomposition: Decomposition,
    pub equal_weights: bool,
    pub verdict: GeodesicVerdict,
}

pub fn norm_report(p: &UnitaryPath) -> Result<NormReport> {
    norm_report_with(p, &Tolerances::default())
}

pub fn norm_report_with(p: &UnitaryPath, tol: &Tolerances) -> Result<NormReport> {
    let lens = p.lens();
    let sel = SpectralSelectors::compute_with(p, &tol.maslov(), tol.window_base)?;
    let inv = SpectralSelectors::compute_with(&p.inverse(), &tol.maslov(), tol.window_base)?;
    let bounds = lower_bounds_from(p, &sel, &inv);
    let decomposition = greedy_embedded_decomposition_with(p, tol.grid)?;
    let dis_upper = decomposition.complete.then_some(decomposition.count);
    let osc_upper = dis_upper.filter(|_| decomposition.sign_definite);
    Ok(NormReport {
        lens: lens.clone(),
        c_plus: sel.c_plus(),
        c_minus: sel.c_minus(),
        nu: nu_from(p, &sel, NuVariant::Plain),
        nu_prime: nu_from(p, &sel, NuVariant::Prime),
        nu_star: nu_star_from(p, &sel)?,
        identity_class: is_identity_class(p, &sel),
        dis_lower: bounds.dis,
        dis_rule: bounds.dis_rule,
        dis_upper,
        osc_lower: bounds.osc,
        osc_upper,
        decomposition,
        equal_weights: lens.has_equal_weights(),
        verdict: GeodesicVerdict::NotApplicable,
    })
}

/// `⌊kT/2π⌋ + 1`, the length of the Reeb flow `{r_t}_{t ∈ [0,T]}` cut at
/// multiples of the minimal orbit period.
pub fn reeb_length(lens: &LensSpace, time: f64) -> i64 {
    let q = time / lens.minimal_orbit_period();
    let r = q.round();
    let floor = if (q - r).abs() <= crate::lens::SNAP_TOLERANCE * q.abs().max(1.0) {
        r
    } else {
        q.floor()
    };
    floor as i64 + 1
}

/// Norm report for the Reeb flow up to time `T ≥ 0`. With equal weights the
/// selector lower bounds must meet the greedy upper bound; otherwise the
/// verdict records whether a gap remains between them.
pub fn geodesic_report(lens: &LensSpace, time: f64) -> Result<NormReport> {
    geodesic_report_with(lens, time, &Tolerances::default())
}

pub fn geodesic_report_with(lens: &LensSpace, time: f64, tol: &Tolerances) -> Result<NormReport> {
    if !(time.is_finite() && time >= 0.0) {
        return Err(Error::InvalidInterval(0.0, time));
    }
    let p = UnitaryPath::reeb(lens, time);
    let mut report = norm_report_with(&p, tol)?;
    if time == 0.0 {
        // the constant path: no selector information to compare against
        return Ok(report);
    }
    let upper = report
        .dis_upper
        .ok_or_else(|| Error::SelfCheck("greedy decomposition of the Reeb flow did not finish".into()))?;
    let expected = reeb_length(lens, time);
    if upper as i64 != expected {
        return Err(Error::SelfCheck(format!(
            "greedy decomposition has {upper} pieces, expected {expected}"
        )));
    }
    if lens.has_equal_weights() {
        if report.dis_lower != expected || report.osc_lower != expected {
            return Err(Error::SelfCheck(format!(
                "lower bounds ({}, {}) do not meet {expected}",
                report.dis_lower, report.osc_lower
            )));
        }
        report.verdict = GeodesicVerdict::Certified;
    } else {
        report.verdict = if report.dis_lower < expected {
            GeodesicVerdict::Gap
        } else {
            GeodesicVerdict::Certified
        };
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_path, random_path_in, trial_rng};
    use std::f64::consts::{PI, TAU};

    #[test]
    fn nu_of_reeb_multiples() {
        for (k, w) in [(2, vec![1, 1]), (3, vec![1, 1, 1]), (5, vec![1, 2])] {
            let l = LensSpace::new(k, &w).unwrap();
            let tw = l.reeb_period();
            for m in [1, 2, 5] {
                let p = UnitaryPath::reeb(&l, m as f64 * tw);
                let v = nu(&p, NuVariant::Plain).unwrap();
                assert_eq!(v.count, m);
                assert_eq!(v.angle, l.period_multiple(m));
                assert_eq!(nu_star(&p).unwrap().value.count, 0);
            }
        }
    }

    #[test]
    fn identity_norms() {
        let l = LensSpace::new(3, &[1, 2]).unwrap();
        let id = UnitaryPath::identity(&l);
        assert_eq!(nu(&id, NuVariant::Plain).unwrap().count, 0);
        assert_eq!(nu(&id, NuVariant::Prime).unwrap().count, 0);
        assert_eq!(nu_star(&id).unwrap().value.count, 0);
        let b = selector_lower_bounds(&id).unwrap();
        assert_eq!((b.dis, b.osc), (0, 0));
        assert_eq!(greedy_embedded_decomposition(&id).unwrap().count, 1);
        // a full turn is the identity downstairs but not in the universal cover
        let turn = UnitaryPath::reeb(&l, TAU);
        assert_eq!(nu(&turn, NuVariant::Prime).unwrap().count, l.periods_per_turn());
    }

    #[test]
    fn nu_star_matches_explicit_shifts() {
        let mut rng = trial_rng(21, 0);
        let l = LensSpace::new(4, &[1, 3]).unwrap();
        for _ in 0..5 {
            let p = random_path(&mut rng, &l, 2, 4.0);
            let star = nu_star(&p).unwrap();
            let tw = l.reeb_period();
            let brute = (-8..=8)
                .map(|n| nu(&p.reeb_shift(n as f64 * tw), NuVariant::Plain).unwrap().count)
                .min()
                .unwrap();
            assert_eq!(star.value.count, brute);
            let at = nu(&p.reeb_shift(star.shift.value()), NuVariant::Plain).unwrap();
            assert_eq!(at.count, star.value.count);
        }
    }

    #[test]
    fn greedy_reeb_counts() {
        for k in [2i64, 3, 5] {
            let l = LensSpace::new(k, &[1, 1]).unwrap();
            for t in [0.1, 0.5 * TAU / k as f64, TAU, 6.0 * PI, 7.3] {
                let d = greedy_embedded_decomposition(&UnitaryPath::reeb(&l, t)).unwrap();
                assert!(d.complete && d.sign_definite);
                assert_eq!(d.count as i64, reeb_length(&l, t), "k={k} T={t}");
            }
        }
    }

    #[test]
    fn geodesic_examples() {
        let l = LensSpace::new(3, &[1, 1]).unwrap();
        let r = geodesic_report(&l, 4.0 * PI).unwrap();
        assert_eq!(r.verdict, GeodesicVerdict::Certified);
        assert_eq!(r.dis_lower, 7);
        let l = LensSpace::new(2, &[1, 1, 1]).unwrap();
        let r = geodesic_report(&l, 0.1).unwrap();
        assert_eq!(
            (r.verdict, r.dis_lower, r.dis_upper),
            (GeodesicVerdict::Certified, 1, Some(1))
        );
        let g = LensSpace::new(5, &[1, 2]).unwrap();
        let r = geodesic_report(&g, 6.0 * PI).unwrap();
        assert_eq!(r.verdict, GeodesicVerdict::Gap);
        assert_eq!(r.dis_lower, 4);
        assert_eq!(r.dis_upper, Some(16));
        assert!(geodesic_report(&g, -1.0).is_err());
    }

    #[test]
    fn pseudonorm_axioms_on_samples() {
        let mut rng = trial_rng(22, 0);
        let l = LensSpace::new(2, &[1, 1]).unwrap();
        for _ in 0..10 {
            let p = random_path(&mut rng, &l, 2, 3.0);
            let q = random_path(&mut rng, &l, 2, 3.0);
            let np = nu(&p, NuVariant::Plain).unwrap().count;
            let nq = nu(&q, NuVariant::Plain).unwrap().count;
            assert!(np >= 0);
            assert_eq!(np, nu(&p.inverse(), NuVariant::Plain).unwrap().count);
            assert!(nu(&p.product(&q).unwrap(), NuVariant::Plain).unwrap().count <= np + nq);
            assert_eq!(nu(&p.conjugate_by(&q).unwrap(), NuVariant::Plain).unwrap().count, np);
        }
    }

    #[test]
    fn lower_bounds_do_not_exceed_greedy_on_positive_paths() {
        let mut rng = trial_rng(23, 0);
        let l = LensSpace::new(3, &[1, 1]).unwrap();
        for _ in 0..10 {
            let p = random_path_in(&mut rng, &l, 2, 0.5, 4.0);
            let r = norm_report(&p).unwrap();
            let upper = r.dis_upper.unwrap() as i64;
            assert!(r.dis_lower <= upper);
            assert!(r.osc_lower <= r.osc_upper.unwrap() as i64);
        }
    }
}
