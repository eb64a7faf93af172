//! Seeded property suites. Every check runs independent trials, each with
//! its own random stream, and records the worst margin observed; a margin
//! below zero is a violation.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lens::{LensSpace, RoundMode};
use crate::linalg::{
    complex_gaussian, distance_from_identity, exp_i_hermitian, hermitian_eigenvalues, realify, unitary_phases, I,
};
use crate::maslov::{evaluate_step_with, maslov_index_with, MaslovOptions};
use crate::norms::{geodesic_report_with, nu_from, nu_star_from, reeb_length, GeodesicVerdict, NuVariant};
use crate::path::{circle_distance, Level, UnitaryPath};
use crate::quadratic::{cayley_gf, InvariantQuadraticForm};
use crate::random::{random_generator, random_path, trial_rng};
use crate::selectors::SpectralSelectors;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Thm1,
    MaslovProps,
    Norms,
    Geodesic,
    QuadraticCore,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Thm1,
        Suite::MaslovProps,
        Suite::Norms,
        Suite::Geodesic,
        Suite::QuadraticCore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm1 => "thm1",
            Suite::MaslovProps => "maslov_props",
            Suite::Norms => "norms",
            Suite::Geodesic => "geodesic",
            Suite::QuadraticCore => "quadratic_core",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            format!("unknown suite '{s}' (expected one of thm1, maslov_props, norms, geodesic, quadratic_core)")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub property: &'static str,
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub passed: bool,
    /// First failure message, if any.
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| match &c.detail {
                Some(d) => format!("{}: {d}", c.property),
                None => format!("{}: {} violations", c.property, c.violations),
            })
            .collect()
    }
}

/// Lenses the random trials cycle through.
pub fn default_lenses() -> Vec<LensSpace> {
    [
        (2, vec![1, 1]),
        (3, vec![1, 1]),
        (4, vec![1, 3]),
        (5, vec![1, 2]),
        (3, vec![1, 1, 2]),
    ]
    .into_iter()
    .map(|(k, w)| LensSpace::new(k, &w).expect("valid lens"))
    .collect()
}

fn name_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

/// Runs `trials` independent trials in parallel. Each returns a margin or
/// an error; both a negative margin and an error count as violations.
fn run_check<F>(property: &'static str, lenses: &[LensSpace], trials: usize, seed: u64, f: F) -> CheckResult
where
    F: Fn(&mut ChaCha8Rng, &LensSpace) -> Result<f64> + Sync,
{
    let base = seed ^ name_hash(property);
    let outcomes: Vec<std::result::Result<f64, String>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(base, t as u64);
            let lens = &lenses[t % lenses.len()];
            f(&mut rng, lens).map_err(|e| format!("trial {t} on {lens:?}: {e}"))
        })
        .collect();
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    let mut detail = None;
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(m) => {
                worst = worst.min(m);
                if m < 0.0 {
                    violations += 1;
                    detail.get_or_insert_with(|| format!("trial {t}: margin {m:.3e}"));
                }
            }
            Err(e) => {
                violations += 1;
                worst = f64::NEG_INFINITY;
                detail.get_or_insert(e);
            }
        }
    }
    CheckResult {
        property,
        trials,
        violations,
        worst_margin: if worst.is_finite() {
            worst
        } else if worst > 0.0 {
            0.0
        } else {
            -1.0
        },
        passed: violations == 0,
        detail,
    }
}

/// Margin `0` for an exact match, `−1` otherwise.
fn exact(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        -1.0
    }
}

fn sample_path(rng: &mut ChaCha8Rng, lens: &LensSpace) -> UnitaryPath {
    let segs = rng.random_range(1..=3);
    random_path(rng, lens, segs, 4.0)
}

struct Ctx {
    tol: Tolerances,
}

impl Ctx {
    fn sel(&self, p: &UnitaryPath) -> Result<SpectralSelectors> {
        SpectralSelectors::compute_with(p, &self.tol.maslov(), self.tol.window_base)
    }

    fn mu(&self, p: &UnitaryPath) -> Result<i64> {
        maslov_index_with(p, &self.tol.maslov())
    }
}

pub fn verify_suite(suite: Suite, trials: usize, seed: u64) -> VerifyReport {
    verify_suite_with(suite, trials, seed, &Tolerances::default())
}

pub fn verify_suite_with(suite: Suite, trials: usize, seed: u64, tol: &Tolerances) -> VerifyReport {
    let ctx = Ctx { tol: *tol };
    let checks = match suite {
        Suite::Thm1 => thm1(&ctx, trials, seed),
        Suite::MaslovProps => maslov_props(&ctx, trials, seed),
        Suite::Norms => norms(&ctx, trials, seed),
        Suite::Geodesic => geodesic(&ctx, seed),
        Suite::QuadraticCore => quadratic_core(&ctx, trials, seed),
    };
    let passed = checks.iter().all(|c| c.passed);
    VerifyReport {
        suite,
        trials,
        seed,
        checks,
        passed,
    }
}

fn n_of(lens: &LensSpace) -> i64 {
    lens.n() as i64
}

fn thm1(ctx: &Ctx, trials: usize, seed: u64) -> Vec<CheckResult> {
    let lenses = default_lenses();
    let pd_lenses: Vec<LensSpace> = lenses[..3].to_vec();
    vec![
        run_check("spectrality", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let sel = ctx.sel(&p)?;
            let spec = p.action_spectrum();
            let n = n_of(lens);
            let worst = (-2 * n..=2 * n)
                .map(|j| spec.distance_to_sphere_spectrum(sel.c(j)))
                .fold(0.0, f64::max);
            Ok(1e-9 - worst)
        }),
        run_check("normalization", &lenses, lenses.len(), seed, |rng, lens| {
            let sel = ctx.sel(&UnitaryPath::identity(lens))?;
            let n = n_of(lens);
            let table = (-4 * n + 1..=2 * n)
                .map(|j| (sel.c(j) - TAU * (j as f64 / (2 * n) as f64).ceil()).abs())
                .fold(0.0, f64::max);
            let t = rng.random_range(-10.0..10.0);
            let reeb = (ctx.sel(&UnitaryPath::reeb(lens, t))?.c(0) - t).abs();
            Ok(1e-9 - table.max(reeb))
        }),
        run_check("translated_points", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let sel = ctx.sel(&p)?;
            let n = n_of(lens);
            let spec = p.action_spectrum();
            let mut ok = true;
            for ph in &spec.phases_sphere {
                let hits = (0..2 * n)
                    .filter(|&j| circle_distance(sel.c(j), ph.phase) <= 1e-9)
                    .count();
                ok &= hits == 2 * ph.multiplicity;
                ok &= p.translated_points(ph.phase, Level::Sphere).dimension() == ph.multiplicity;
            }
            Ok(exact(ok))
        }),
        run_check("non_degeneracy", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let looped = p.product(&p.inverse())?;
            let mut ok = true;
            for q in [&p, &looped] {
                let sel = ctx.sel(q)?;
                if sel.c_plus().abs() <= 1e-9 && sel.c_minus().abs() <= 1e-9 {
                    ok &= distance_from_identity(q.endpoint()) <= 1e-9;
                }
            }
            let sel = ctx.sel(&looped)?;
            ok &= sel.c_plus().abs() <= 1e-9 && sel.c_minus().abs() <= 1e-9;
            Ok(exact(ok))
        }),
        run_check("reeb_composition", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let t = rng.random_range(-7.0..7.0);
            let a = ctx.sel(&p)?;
            let b = ctx.sel(&p.reeb_shift(-t))?;
            let n = n_of(lens);
            let worst = (-2 * n..=2 * n)
                .map(|j| (b.c(j) - a.c(j) - t).abs())
                .fold(0.0, f64::max);
            Ok(1e-9 - worst)
        }),
        run_check("periodicity", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let s = ctx.sel(&p)?;
            let n = n_of(lens);
            let worst = (-2 * n..=2 * n)
                .map(|j| (s.c(j + 2 * n) - s.c(j) - TAU).abs())
                .fold(0.0, f64::max);
            Ok(1e-9 - worst)
        }),
        run_check("monotonicity", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let d = rng.random_range(0.1..1.0);
            let q = p.then(random_generator(rng, lens, 0.0, 2.0), d)?;
            let (a, b) = (ctx.sel(&p)?, ctx.sel(&q)?);
            let n = n_of(lens);
            Ok((-2 * n..=2 * n)
                .map(|j| b.c(j) - a.c(j) + 1e-9)
                .fold(f64::INFINITY, f64::min))
        }),
        run_check("continuity", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let d = rng.random_range(0.1..1.0);
            let a_gen = random_generator(rng, lens, -2.0, 2.0);
            let ev = hermitian_eigenvalues(&a_gen);
            let (lo, hi) = (d * ev[0], d * ev[ev.len() - 1]);
            let q = p.then(a_gen, d)?;
            let (a, b) = (ctx.sel(&p)?, ctx.sel(&q)?);
            let n = n_of(lens);
            Ok((-2 * n..=2 * n)
                .map(|j| {
                    let delta = b.c(j) - a.c(j);
                    (delta - lo).min(hi - delta) + 1e-8
                })
                .fold(f64::INFINITY, f64::min))
        }),
        run_check("triangle_inequality", &pd_lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let q = sample_path(rng, lens);
            let pq = p.product(&q)?;
            let (sp, sq, spq) = (ctx.sel(&p)?, ctx.sel(&q)?, ctx.sel(&pq)?);
            let n = n_of(lens);
            let mut worst = f64::INFINITY;
            for j in -2 * n..=2 * n {
                if lens.k() % 2 == 1 && j % 2 != 0 {
                    continue;
                }
                for l in -2 * n..=2 * n {
                    let rhs_exact = sp.c(j) + lens.ceil_to_period(sq.c(l));
                    worst = worst.min(rhs_exact - spq.c(j + l) + 1e-9);
                    let lhs = lens.period_count(spq.c(j + l), RoundMode::Ceil);
                    let rhs = lens.period_count(sp.c(j), RoundMode::Ceil) + lens.period_count(sq.c(l), RoundMode::Ceil);
                    worst = worst.min(exact(lhs <= rhs));
                }
            }
            Ok(worst)
        }),
        run_check("conjugation_invariance", &pd_lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let psi = sample_path(rng, lens);
            let conj = p.conjugate_by(&psi)?;
            let (a, b) = (ctx.sel(&p)?, ctx.sel(&conj)?);
            let n = n_of(lens);
            let ok = (-2 * n..=2 * n)
                .all(|j| lens.period_count(a.c(j), RoundMode::Ceil) == lens.period_count(b.c(j), RoundMode::Ceil));
            Ok(exact(ok))
        }),
        run_check("poincare_duality", &pd_lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let (a, b) = (ctx.sel(&p)?, ctx.sel(&p.inverse())?);
            let n = n_of(lens);
            let ok = (-2 * n..=2 * n).all(|j| {
                lens.period_count(a.c(j), RoundMode::Ceil)
                    == -lens.period_count(b.c(-j - (2 * n - 1)), RoundMode::Floor)
            });
            Ok(exact(ok))
        }),
    ]
}

fn reeb_grid() -> Vec<f64> {
    use std::f64::consts::PI;
    vec![-0.1, 0.1, 1.0, PI, TAU - 1e-6, TAU, TAU + 1e-6, 6.0 * PI, 20.0 * PI]
}

/// `⌈T/2π⌉` with the same snapping as period rounding.
fn turns_ceil(t: f64) -> i64 {
    let q = t / TAU;
    if (q - q.round()).abs() <= crate::lens::SNAP_TOLERANCE * q.abs().max(1.0) {
        q.round() as i64
    } else {
        q.ceil() as i64
    }
}

fn maslov_props(ctx: &Ctx, trials: usize, seed: u64) -> Vec<CheckResult> {
    let lenses = default_lenses();
    let reeb_lenses: Vec<LensSpace> = [2, 3, 5]
        .into_iter()
        .flat_map(|k| (1..=3).map(move |n| LensSpace::standard(k, n).expect("valid lens")))
        .collect();
    vec![
        run_check("reeb_values", &reeb_lenses, reeb_lenses.len(), seed, |_, lens| {
            let n = n_of(lens);
            let mut ok = true;
            for t in reeb_grid() {
                ok &= ctx.mu(&UnitaryPath::reeb(lens, t))? == 2 * n * turns_ceil(t);
            }
            Ok(exact(ok))
        }),
        run_check("subdivision_invariance", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let values = [1.0, 2.0 / 3.0, 2.0 / 7.0]
                .into_iter()
                .map(|f| {
                    let opts = MaslovOptions {
                        tol: ctx.tol.null,
                        arc: ctx.tol.arc * f,
                    };
                    maslov_index_with(&p, &opts)
                })
                .collect::<Result<Vec<i64>>>()?;
            Ok(exact(values.windows(2).all(|w| w[0] == w[1])))
        }),
        run_check("quasimorphism", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let q = sample_path(rng, lens);
            let defect = (ctx.mu(&p.product(&q)?)? - ctx.mu(&p)? - ctx.mu(&q)?).abs();
            let bound = 2 * n_of(lens) + i64::from(lens.k() % 2 == 1);
            Ok((bound - defect) as f64)
        }),
        run_check("maslov_triangle_inequality", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let q = sample_path(rng, lens);
            let (a, b) = (ctx.mu(&p)?, ctx.mu(&q)?);
            let slack = if lens.k() % 2 == 0 || a % 2 == 0 || b % 2 == 0 {
                0
            } else {
                1
            };
            Ok((a + b + slack - ctx.mu(&p.product(&q)?)?) as f64)
        }),
        run_check("maslov_monotonicity", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let d = rng.random_range(0.1..1.0);
            let q = p.then(random_generator(rng, lens, 0.0, 2.0), d)?;
            Ok((ctx.mu(&q)? - ctx.mu(&p)?) as f64)
        }),
        run_check("maslov_poincare_duality", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let near_one = unitary_phases(p.endpoint()).iter().any(|x| x.abs() < 1e-6);
            if near_one {
                return Ok(0.0);
            }
            Ok(exact(ctx.mu(&p)? + ctx.mu(&p.inverse())? == 2 * n_of(lens)))
        }),
        run_check("step_function", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let base = rng.random_range(-TAU..TAU);
            let ev = evaluate_step_with(&p, base, &ctx.tol.maslov())?;
            let total: i64 = ev.points.iter().map(|x| x.drop).sum();
            Ok(exact(ev.is_consistent() && total == ev.period_drop()))
        }),
    ]
}

fn norms(ctx: &Ctx, trials: usize, seed: u64) -> Vec<CheckResult> {
    let lenses = default_lenses();
    vec![
        run_check("stable_unboundedness", &lenses, lenses.len(), seed, |_, lens| {
            let tw = lens.reeb_period();
            let mut ok = true;
            for m in 1..=20 {
                let p = UnitaryPath::reeb(lens, m as f64 * tw);
                let v = nu_from(&p, &ctx.sel(&p)?, NuVariant::Plain);
                ok &= v.count == m && v.angle == lens.period_multiple(m);
            }
            Ok(exact(ok))
        }),
        run_check("descended_norm_bound", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let sel = ctx.sel(&p)?;
            let star = nu_star_from(&p, &sel)?;
            let width =
                lens.period_count(sel.c_plus(), RoundMode::Ceil) - lens.period_count(sel.c_minus(), RoundMode::Floor);
            let bound = lens.periods_per_turn() + 1;
            Ok((bound - star.value.count).min(bound - width) as f64)
        }),
        run_check("nonnegativity_and_symmetry", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let a = nu_from(&p, &ctx.sel(&p)?, NuVariant::Plain).count;
            let inv = p.inverse();
            let b = nu_from(&inv, &ctx.sel(&inv)?, NuVariant::Plain).count;
            Ok(exact(a >= 0 && a == b))
        }),
        run_check("norm_triangle_inequality", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let q = sample_path(rng, lens);
            let pq = p.product(&q)?;
            let f = |x: &UnitaryPath| -> Result<i64> { Ok(nu_from(x, &ctx.sel(x)?, NuVariant::Plain).count) };
            Ok((f(&p)? + f(&q)? - f(&pq)?) as f64)
        }),
        run_check("norm_conjugation_invariance", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let psi = sample_path(rng, lens);
            let c = p.conjugate_by(&psi)?;
            let a = nu_from(&p, &ctx.sel(&p)?, NuVariant::Plain);
            let b = nu_from(&c, &ctx.sel(&c)?, NuVariant::Plain);
            Ok(exact(a == b))
        }),
        run_check("order_compatibility", &lenses, trials, seed, |rng, lens| {
            let d1 = rng.random_range(0.1..1.0);
            let p = UnitaryPath::identity(lens).then(random_generator(rng, lens, 0.0, 3.0), d1)?;
            let d2 = rng.random_range(0.1..1.0);
            let q = p.then(random_generator(rng, lens, 0.0, 3.0), d2)?;
            let a = nu_from(&p, &ctx.sel(&p)?, NuVariant::Plain).count;
            let b = nu_from(&q, &ctx.sel(&q)?, NuVariant::Plain).count;
            Ok((b - a) as f64)
        }),
        run_check("prime_norm", &lenses, trials, seed, |rng, lens| {
            let p = sample_path(rng, lens);
            let sel = ctx.sel(&p)?;
            let plain = nu_from(&p, &sel, NuVariant::Plain).count;
            let prime = nu_from(&p, &sel, NuVariant::Prime).count;
            let id = UnitaryPath::identity(lens);
            let id_prime = nu_from(&id, &ctx.sel(&id)?, NuVariant::Prime).count;
            Ok(exact(prime == plain.max(1) && id_prime == 0))
        }),
    ]
}

fn geodesic(ctx: &Ctx, seed: u64) -> Vec<CheckResult> {
    use std::f64::consts::PI;
    let equal: Vec<LensSpace> = [(2, 1), (3, 1), (3, 2), (5, 1), (5, 3)]
        .into_iter()
        .flat_map(|(k, w)| (1..=3).map(move |n| LensSpace::new(k, &vec![w; n]).expect("valid lens")))
        .collect();
    let general = vec![
        LensSpace::new(5, &[1, 2]).expect("valid lens"),
        LensSpace::new(7, &[1, 3]).expect("valid lens"),
    ];
    vec![
        run_check("reeb_geodesic_equal_weights", &equal, equal.len(), seed, |_, lens| {
            let mut ok = true;
            for t in [0.1, TAU, 6.0 * PI, 20.0 * PI] {
                let r = geodesic_report_with(lens, t, &ctx.tol)?;
                let want = reeb_length(lens, t);
                ok &= r.verdict == GeodesicVerdict::Certified
                    && r.dis_lower == want
                    && r.osc_lower == want
                    && r.dis_upper == Some(want as usize)
                    && r.osc_upper == Some(want as usize);
            }
            Ok(exact(ok))
        }),
        run_check("reeb_gap_general_weights", &general, general.len(), seed, |_, lens| {
            let t = 20.0 * PI;
            let r = geodesic_report_with(lens, t, &ctx.tol)?;
            let lower = lens.period_count(t, RoundMode::Floor) + 1;
            Ok(exact(
                r.verdict == GeodesicVerdict::Gap
                    && r.dis_lower == lower
                    && r.dis_upper == Some(reeb_length(lens, t) as usize),
            ))
        }),
    ]
}

fn random_form(rng: &mut ChaCha8Rng, phases: &[f64], order: u32) -> Result<InvariantQuadraticForm> {
    let d = 2 * phases.len();
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    InvariantQuadraticForm::symmetrized(&m, d, phases.to_vec(), order)
}

fn quadratic_core(ctx: &Ctx, trials: usize, seed: u64) -> Vec<CheckResult> {
    let lenses: Vec<LensSpace> = [
        (2, vec![1, 1]),
        (3, vec![1, 2, 1]),
        (5, vec![1, 2, 3]),
        (9, vec![1, 2]),
        (4, vec![1, 3, 1]),
    ]
    .into_iter()
    .map(|(k, w)| LensSpace::new(k, &w).expect("valid lens"))
    .collect();
    let tol = ctx.tol.null;
    vec![
        run_check("index_duality", &lenses, trials, seed, |rng, lens| {
            let q = random_form(rng, &lens.form_phases(), lens.k_prime())?;
            if !q.is_nondegenerate(1e-6) {
                return Ok(0.0);
            }
            Ok(exact(q.index(tol) + q.negated().index(tol) == q.dim()))
        }),
        run_check("index_evenness", &lenses, trials, seed, |rng, lens| {
            let q = random_form(rng, &lens.form_phases(), lens.k_prime())?;
            Ok(exact(lens.k_prime() == 2 || q.index(tol) % 2 == 0))
        }),
        run_check("direct_sum_law", &lenses, trials, seed, |rng, lens| {
            let a = random_form(rng, &lens.form_phases(), lens.k_prime())?;
            let b = random_form(rng, &lens.form_phases(), lens.k_prime())?;
            let sum = a.direct_sum(&b)?.index(tol) as i64;
            let parts = (a.index(tol) + b.index(tol)) as i64;
            let exact_case = lens.k_prime() == 2 || a.index(tol) % 2 == 0 || b.index(tol) % 2 == 0;
            Ok(exact((sum - parts).abs() <= 1 && (!exact_case || sum == parts)))
        }),
        run_check("sharp_injection", &lenses, trials, seed, |rng, lens| {
            let a = random_form(rng, &lens.form_phases(), lens.k_prime())?;
            let b = random_form(rng, &lens.form_phases(), lens.k_prime())?;
            let sharp = a.sharp(&b)?;
            let sum = a.direct_sum(&b)?;
            let iota = a.sharp_injection(&b);
            let pulled = iota.transpose() * sharp.matrix() * &iota;
            let err = (pulled - sum.matrix()).abs().max();
            Ok((1e-12 - err).min(exact(sum.index(tol) <= sharp.index(tol))))
        }),
        run_check("cayley_residual", &lenses, trials, seed, |rng, lens| {
            let u = exp_i_hermitian(&random_generator(rng, lens, -2.5, 2.5), 1.0);
            let w = cayley_gf(&u, lens)?;
            let n = lens.n();
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let z = complex_gaussian(rng, n, 1);
                let z: DVector<Complex64> = z.column(0).into_owned();
                let uz = &u * &z;
                let q = (&z + &uz) * Complex64::new(0.5, 0.0);
                let want = (&z - &uz) * I;
                let got = w.gradient(&realify(&q));
                worst = worst.max((got - realify(&want)).abs().max());
            }
            Ok(1e-9 - worst)
        }),
        run_check("based_family_self_check", &lenses, trials, seed, |rng, lens| {
            // maslov_index_with fails with a self-check error if ind(F_0) ≠ 2nN
            let p = sample_path(rng, lens);
            ctx.mu(&p)?;
            Ok(0.0)
        }),
    ]
}
