//! JSON jobs and reports.
//!
//! Complex matrices are nested arrays of `[re, im]` pairs. Parse errors
//! carry the JSON path of the offending field.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::lens::{LensSpace, LensSpec};
use crate::linalg::CMatrix;
use crate::maslov::{subdivide_with_arc, BasedFamily};
use crate::norms::{geodesic_report_with, norm_report_with, NormReport};
use crate::path::{Segment, SpectrumWindow, UnitaryPath};
use crate::random::{random_path, trial_rng};
use crate::selectors::{selector_range_with, SelectorReport};
use crate::tolerances::Tolerances;
use crate::verify::{verify_suite_with, Suite, VerifyReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct JobError {
    /// JSON path of the offending field, e.g. `lens.weights[0]`.
    pub path: String,
    pub message: String,
}

impl JobError {
    fn at(path: impl Into<String>, message: impl ToString) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    /// Optional only for `verify`, which draws its own lenses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lens: Option<LensSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSpec>,
    pub task: TaskSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSpec {
    Reeb(f64),
    Identity {},
    PiecewiseHermitian(Vec<SegmentSpec>),
    Random(RandomSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    pub segments: usize,
    /// Bound on the operator norm of each generator.
    pub norm: f64,
}

fn default_trials() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSpec {
    Maslov {},
    Selectors {
        #[serde(default)]
        j_lo: Option<i64>,
        #[serde(default)]
        j_hi: Option<i64>,
    },
    Spectrum {},
    Norms {},
    Geodesic {
        #[serde(rename = "T", alias = "time")]
        time: f64,
    },
    Verify {
        suite: Suite,
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Maslov {} => "maslov",
            TaskSpec::Selectors { .. } => "selectors",
            TaskSpec::Spectrum {} => "spectrum",
            TaskSpec::Norms {} => "norms",
            TaskSpec::Geodesic { .. } => "geodesic",
            TaskSpec::Verify { .. } => "verify",
        }
    }

    fn needs_lens(&self) -> bool {
        !matches!(self, TaskSpec::Verify { .. })
    }

    fn needs_path(&self) -> bool {
        !matches!(self, TaskSpec::Geodesic { .. } | TaskSpec::Verify { .. })
    }
}

/// A validated job.
#[derive(Debug, Clone)]
pub struct Job {
    pub spec: JobSpec,
    pub lens: Option<LensSpace>,
    pub path: Option<UnitaryPath>,
}

pub fn parse_job(bytes: &[u8]) -> Result<Job, JobError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let spec: JobSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        JobError::at(if path == "." { "$".to_string() } else { path }, e.into_inner())
    })?;
    validate(spec)
}

pub fn validate(spec: JobSpec) -> Result<Job, JobError> {
    let lens = match &spec.lens {
        Some(l) => Some(LensSpace::new(l.k, &l.weights).map_err(|e| match e {
            Error::OrderTooSmall(_) => JobError::at("lens.k", e),
            Error::NonPositiveWeight { index, .. } | Error::NotCoprime { index, .. } => {
                JobError::at(format!("lens.weights[{index}]"), e)
            }
            _ => JobError::at("lens.weights", e),
        })?),
        None if spec.task.needs_lens() => {
            return Err(JobError::at(
                "lens",
                format!("task '{}' needs a lens", spec.task.name()),
            ));
        }
        None => None,
    };
    check_tolerances(&spec.tolerances)?;
    check_task(&spec.task)?;
    let path = match (&spec.path, &lens) {
        (Some(p), Some(l)) => Some(build_path(l, p)?),
        (Some(_), None) => return Err(JobError::at("path", "a path needs a lens")),
        (None, _) if spec.task.needs_path() => {
            return Err(JobError::at(
                "path",
                format!("task '{}' needs a path", spec.task.name()),
            ));
        }
        (None, _) => None,
    };
    Ok(Job { spec, lens, path })
}

fn check_tolerances(t: &Tolerances) -> Result<(), JobError> {
    if !(t.null.is_finite() && t.null > 0.0) {
        return Err(JobError::at("tolerances.null", "must be finite and positive"));
    }
    if t.grid == 0 {
        return Err(JobError::at("tolerances.grid", "must be at least 1"));
    }
    if !t.window_base.is_finite() {
        return Err(JobError::at("tolerances.window_base", "must be finite"));
    }
    if !(t.arc > 0.0 && t.arc <= FRAC_PI_2) {
        return Err(JobError::at("tolerances.arc", "must lie in (0, π/2]"));
    }
    Ok(())
}

fn check_task(task: &TaskSpec) -> Result<(), JobError> {
    match *task {
        TaskSpec::Selectors {
            j_lo: Some(lo),
            j_hi: Some(hi),
        } if lo > hi => Err(JobError::at(
            "task.selectors",
            format!("j_lo = {lo} exceeds j_hi = {hi}"),
        )),
        TaskSpec::Geodesic { time } if !(time.is_finite() && time >= 0.0) => {
            Err(JobError::at("task.geodesic.T", "must be finite and non-negative"))
        }
        TaskSpec::Verify { trials: 0, .. } => Err(JobError::at("task.verify.trials", "must be at least 1")),
        _ => Ok(()),
    }
}

fn build_path(lens: &LensSpace, spec: &PathSpec) -> Result<UnitaryPath, JobError> {
    match spec {
        PathSpec::Reeb(t) if !t.is_finite() => Err(JobError::at("path.reeb", "must be finite")),
        PathSpec::Reeb(t) => Ok(UnitaryPath::reeb(lens, *t)),
        PathSpec::Identity {} => Ok(UnitaryPath::identity(lens)),
        PathSpec::Random(r) => {
            if r.segments == 0 {
                return Err(JobError::at("path.random.segments", "must be at least 1"));
            }
            if !(r.norm.is_finite() && r.norm > 0.0) {
                return Err(JobError::at("path.random.norm", "must be finite and positive"));
            }
            Ok(random_path(&mut trial_rng(r.seed, 0), lens, r.segments, r.norm))
        }
        PathSpec::PiecewiseHermitian(segs) => {
            if segs.is_empty() {
                return Err(JobError::at("path.piecewise_hermitian", "needs at least one segment"));
            }
            let n = lens.n();
            let mut out = Vec::with_capacity(segs.len());
            for (i, s) in segs.iter().enumerate() {
                let at = |field: &str| format!("path.piecewise_hermitian[{i}].{field}");
                if s.matrix.len() != n || s.matrix.iter().any(|row| row.len() != n) {
                    let cols = s.matrix.iter().map(Vec::len).max().unwrap_or(0);
                    return Err(JobError::at(
                        at("matrix"),
                        Error::Shape {
                            expected: n,
                            rows: s.matrix.len(),
                            cols,
                        },
                    ));
                }
                let m = CMatrix::from_fn(n, n, |r, c| {
                    let [re, im] = s.matrix[r][c];
                    Complex64::new(re, im)
                });
                out.push(Segment::new(m, s.duration));
                // validate one segment at a time so errors point at it
                UnitaryPath::from_segments(lens, vec![out[i].clone()]).map_err(|e| match e {
                    Error::BadDuration(_) => JobError::at(at("duration"), e),
                    _ => JobError::at(at("matrix"), e),
                })?;
            }
            UnitaryPath::from_segments(lens, out).map_err(|e| JobError::at("path.piecewise_hermitian", e))
        }
    }
}

/// Which property or definition a reported quantity instantiates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub quantity: &'static str,
    pub property: &'static str,
}

fn prov(quantity: &'static str, property: &'static str) -> Provenance {
    Provenance { quantity, property }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TaskResult {
    Maslov {
        mu: i64,
        factors: usize,
        dimension: usize,
        initial_index: usize,
    },
    Selectors {
        report: SelectorReport,
        monotone: bool,
        periodic: bool,
    },
    Spectrum {
        spectrum: SpectrumWindow,
        reeb_period: crate::lens::ExactAngle,
    },
    Norms {
        report: NormReport,
    },
    Geodesic {
        report: NormReport,
    },
    Verify {
        report: VerifyReport,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub job: JobSpec,
    pub tolerances: Tolerances,
    /// Set for `n = 1`, the quotient circle.
    pub degenerate: bool,
    pub result: TaskResult,
    pub provenance: Vec<Provenance>,
    pub passed: bool,
    pub failures: Vec<String>,
}

pub fn run_job(job: &Job) -> crate::Result<Report> {
    let tol = job.spec.tolerances;
    let path = || job.path.as_ref().expect("validated job has a path");
    let lens = || job.lens.as_ref().expect("validated job has a lens");
    let degenerate = job.lens.as_ref().is_some_and(LensSpace::is_degenerate);
    let (result, provenance, failures) = match &job.spec.task {
        TaskSpec::Maslov {} => {
            let p = path();
            let fam = BasedFamily::new(p, subdivide_with_arc(p, tol.arc))?;
            let mu = fam.maslov(tol.null)?;
            (
                TaskResult::Maslov {
                    mu,
                    factors: fam.factor_count(),
                    dimension: fam.dim(),
                    initial_index: fam.initial_index(tol.null)?,
                },
                vec![
                    prov("mu", "maslov_index: ind(F_0) - ind(F_1) of a based family"),
                    prov("initial_index", "based_family_self_check: ind(F_0) = 2nN"),
                ],
                vec![],
            )
        }
        TaskSpec::Selectors { j_lo, j_hi } => {
            let n = lens().n() as i64;
            let (lo, hi) = (j_lo.unwrap_or(1 - 2 * n), j_hi.unwrap_or(0));
            let report = selector_range_with(path(), lo, hi, &tol.maslov(), tol.window_base)?;
            let monotone = report.values.windows(2).all(|w| w[0].value <= w[1].value);
            let periodic = report
                .values
                .iter()
                .all(|v| (report.step.selector(v.j + 2 * n).0 - v.value - std::f64::consts::TAU).abs() <= 1e-9);
            let mut failures = vec![];
            if !monotone {
                failures.push("selectors are not non-decreasing in j".into());
            }
            if !periodic {
                failures.push("c_{j+2n} differs from c_j + 2π".into());
            }
            (
                TaskResult::Selectors {
                    report,
                    monotone,
                    periodic,
                },
                vec![
                    prov("values", "spectral_selector: min{T : μ(r_{-T}·φ) ≤ -j}"),
                    prov("c_plus", "c_+ = c_0"),
                    prov("c_minus", "c_- = c_{-2n+1}"),
                    prov("periodic", "periodicity: c_{j+2n} = c_j + 2π"),
                ],
                failures,
            )
        }
        TaskSpec::Spectrum {} => (
            TaskResult::Spectrum {
                spectrum: path().action_spectrum(),
                reeb_period: lens().reeb_period_exact(),
            },
            vec![
                prov("phases_sphere", "action spectrum of the lift: eigenphases of U_1"),
                prov("phases_lens", "action spectrum: eigenphases of g^{-m} U_1 over all m"),
            ],
            vec![],
        ),
        TaskSpec::Norms {} => (
            TaskResult::Norms {
                report: norm_report_with(path(), &tol)?,
            },
            norm_provenance(),
            vec![],
        ),
        TaskSpec::Geodesic { time } => (
            TaskResult::Geodesic {
                report: geodesic_report_with(lens(), *time, &tol)?,
            },
            {
                let mut p = norm_provenance();
                p.push(prov(
                    "verdict",
                    "reeb_geodesic: selector lower bound against greedy upper bound",
                ));
                p
            },
            vec![],
        ),
        TaskSpec::Verify { suite, trials, seed } => {
            let report = verify_suite_with(*suite, *trials, *seed, &tol);
            let failures = report.failures();
            (
                TaskResult::Verify { report },
                vec![prov("checks", "one entry per property, worst margin over all trials")],
                failures,
            )
        }
    };
    Ok(Report {
        job: job.spec.clone(),
        tolerances: tol,
        degenerate,
        result,
        provenance,
        passed: failures.is_empty(),
        failures,
    })
}

fn norm_provenance() -> Vec<Provenance> {
    vec![
        prov("nu", "spectral pseudonorm: max(⌈c_+⌉_{T_w}, -⌊c_-⌋_{T_w})"),
        prov("nu_prime", "norm: max(ν, T_w) off the identity class"),
        prov("nu_star", "descended norm: min over Reeb shifts N ∈ T_w·Z"),
        prov(
            "dis_lower",
            "discriminant bound: each embedded piece adds less than T_w to c_0",
        ),
        prov("dis_upper", "greedy embedded decomposition"),
        prov("osc_lower", "oscillation bound: max(discriminant bound, ν/T_w)"),
    ]
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Aligned plain-text summary.
    pub fn table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![("task".into(), self.job.task.name().into())];
        match &self.result {
            TaskResult::Maslov {
                mu,
                factors,
                dimension,
                initial_index,
            } => {
                rows.push(("mu".into(), mu.to_string()));
                rows.push(("factors".into(), factors.to_string()));
                rows.push(("dimension".into(), dimension.to_string()));
                rows.push(("ind(F_0)".into(), initial_index.to_string()));
            }
            TaskResult::Selectors { report, .. } => {
                for v in &report.values {
                    rows.push((format!("c_{}", v.j), format!("{:.12}", v.value)));
                }
            }
            TaskResult::Spectrum { spectrum, .. } => {
                for p in &spectrum.phases_sphere {
                    rows.push(("sphere".into(), format!("{:.12} (x{})", p.phase, p.multiplicity)));
                }
                for p in &spectrum.phases_lens {
                    rows.push(("lens".into(), format!("{:.12} (x{})", p.phase, p.multiplicity)));
                }
            }
            TaskResult::Norms { report } | TaskResult::Geodesic { report } => {
                rows.push(("c_+".into(), format!("{:.12}", report.c_plus)));
                rows.push(("c_-".into(), format!("{:.12}", report.c_minus)));
                rows.push(("nu".into(), format!("{} T_w", report.nu.count)));
                rows.push(("nu'".into(), format!("{} T_w", report.nu_prime.count)));
                rows.push(("nu*".into(), format!("{} T_w", report.nu_star.value.count)));
                rows.push((
                    "dis".into(),
                    format!("[{}, {}]", report.dis_lower, opt(report.dis_upper)),
                ));
                rows.push((
                    "osc".into(),
                    format!("[{}, {}]", report.osc_lower, opt(report.osc_upper)),
                ));
                rows.push(("verdict".into(), format!("{:?}", report.verdict).to_lowercase()));
            }
            TaskResult::Verify { report } => {
                for c in &report.checks {
                    let status = if c.passed { "pass" } else { "FAIL" };
                    rows.push((
                        c.property.into(),
                        format!("{status}  worst margin {:.3e}", c.worst_margin),
                    ));
                }
            }
        }
        rows.push(("passed".into(), self.passed.to_string()));
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

fn opt(x: Option<usize>) -> String {
    x.map_or_else(|| "?".into(), |v| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(s: &str) -> Report {
        run_job(&parse_job(s.as_bytes()).unwrap()).unwrap()
    }

    #[test]
    fn parses_minimal_job() {
        let j = parse_job(br#"{"lens":{"k":2,"weights":[1,1]},"path":{"reeb":6.2832},"task":{"maslov":{}}}"#).unwrap();
        assert_eq!(j.lens.unwrap().n(), 2);
        assert!(j.path.is_some());
    }

    #[test]
    fn reports_field_paths() {
        let e =
            parse_job(br#"{"lens":{"k":4,"weights":[2,1]},"path":{"identity":{}},"task":{"maslov":{}}}"#).unwrap_err();
        assert_eq!(e.path, "lens.weights[0]");
        let e = parse_job(br#"{"lens":{"k":2,"weights":[1,"x"]},"path":{"identity":{}},"task":{"maslov":{}}}"#)
            .unwrap_err();
        assert_eq!(e.path, "lens.weights[1]");
        let bad = r#"{"lens":{"k":2,"weights":[1,1]},
            "path":{"piecewise_hermitian":[{"matrix":[[[1,0],[0,1]],[[0,0],[1,0]]],"duration":1}]},
            "task":{"maslov":{}}}"#;
        let e = parse_job(bad.as_bytes()).unwrap_err();
        assert_eq!(e.path, "path.piecewise_hermitian[0].matrix");
        assert!(e.message.contains("asymmetry"));
        let e = parse_job(br#"{"lens":{"k":2,"weights":[1,1]},"task":{"norms":{}}}"#).unwrap_err();
        assert_eq!(e.path, "path");
        assert!(parse_job(b"\xff").is_err());
    }

    #[test]
    fn run_job_examples() {
        let r = run(r#"{"lens":{"k":2,"weights":[1,1]},"path":{"reeb":6.283185307179586},"task":{"maslov":{}}}"#);
        assert!(matches!(r.result, TaskResult::Maslov { mu: 4, .. }));
        let r =
            run(r#"{"lens":{"k":2,"weights":[1,1]},"path":{"identity":{}},"task":{"selectors":{"j_lo":-3,"j_hi":0}}}"#);
        match r.result {
            TaskResult::Selectors { report, .. } => assert!(report.values.iter().all(|v| v.value == 0.0)),
            other => panic!("{other:?}"),
        }
        let r = run(r#"{"lens":{"k":3,"weights":[1,1]},"path":{"reeb":6.283185307179586},"task":{"norms":{}}}"#);
        match r.result {
            TaskResult::Norms { report } => {
                assert_eq!(report.nu.count, 3);
                assert_eq!(report.nu_star.value.count, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn verify_needs_no_lens() {
        let j = parse_job(br#"{"task":{"verify":{"suite":"quadratic_core","trials":2,"seed":1}}}"#).unwrap();
        let r = run_job(&j).unwrap();
        assert!(r.passed, "{:?}", r.failures);
        assert_eq!(parse_job(br#"{"task":{"norms":{}}}"#).unwrap_err().path, "lens");
    }

    #[test]
    fn piecewise_path_round_trip() {
        let s = r#"{"lens":{"k":3,"weights":[1,2]},
            "path":{"piecewise_hermitian":[
                {"matrix":[[[0.5,0],[0,0]],[[0,0],[1.5,0]]],"duration":0.5},
                {"matrix":[[[-1,0],[0,0]],[[0,0],[2,0]]],"duration":0.5}]},
            "task":{"spectrum":{}},
            "tolerances":{"grid":64}}"#;
        let r = run(s);
        assert!(r.passed);
        assert!(r.table().contains("sphere"));
        let json = r.to_json();
        assert!(json.contains("\"phases_lens\""));
    }
}
