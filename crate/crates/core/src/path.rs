//! Contact isotopies of lens spaces generated by unitary matrices.
//!
//! A [`UnitaryPath`] is a piecewise one-parameter path starting at the
//! identity: on segment `i` it is `t ↦ exp(i A_i (t − t_i)) · U_{t_i}`. The
//! time interval is always `[0, 1]`; generators are scaled accordingly, so
//! the phase travelled on a segment is bounded by `‖A_i‖ · duration_i`.
//! The path lives upstairs on the sphere, so it represents the lifted class
//! directly.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lens::LensSpace;
use crate::linalg::{
    canonical_phase, exp_i_hermitian, frobenius, hermitian_defect, hermitian_eigenvalues, hermitian_norm,
    hermitian_part, unitary_eigen, unitary_log, unitary_phases, CMatrix,
};

/// Eigenphases closer than this are the same spectral value.
pub const CLUSTER_TOLERANCE: f64 = 1e-9;

const HERMITIAN_TOLERANCE: f64 = 1e-10;
const COMMUTATION_TOLERANCE: f64 = 1e-10;

/// Default sweep resolution for embeddedness checks, in points per unit time.
pub const EMBEDDING_GRID: usize = 512;

#[derive(Debug, Clone)]
pub struct Segment {
    pub generator: CMatrix,
    pub duration: f64,
}

impl Segment {
    pub fn new(generator: CMatrix, duration: f64) -> Self {
        Self { generator, duration }
    }
}

#[derive(Debug, Clone)]
pub struct UnitaryPath {
    lens: LensSpace,
    segments: Vec<Segment>,
    /// Start time of each segment, followed by 1.
    starts: Vec<f64>,
    /// `U` at each segment start, followed by the endpoint.
    nodes: Vec<CMatrix>,
}

fn check_generator(lens: &LensSpace, a: &CMatrix) -> Result<()> {
    let n = lens.n();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Shape {
            expected: n,
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("generator entries"));
    }
    let scale = frobenius(a);
    let asym = hermitian_defect(a);
    if asym > HERMITIAN_TOLERANCE * scale + 1e-14 {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let g = lens.deck_generator();
    let residual = frobenius(&(a * &g - &g * a));
    if residual > COMMUTATION_TOLERANCE * scale + 1e-14 {
        return Err(Error::NotCommuting { residual });
    }
    Ok(())
}

impl UnitaryPath {
    /// Builds a path from segments, validating each generator and
    /// rescaling time so the total duration is 1.
    pub fn from_segments(lens: &LensSpace, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Ok(Self::identity(lens));
        }
        for s in &segments {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::BadDuration(s.duration));
            }
            check_generator(lens, &s.generator)?;
        }
        let total: f64 = segments.iter().map(|s| s.duration).sum();
        let segments = segments
            .into_iter()
            .map(|s| Segment {
                generator: hermitian_part(&s.generator) * Complex64::new(total, 0.0),
                duration: s.duration / total,
            })
            .collect();
        Ok(Self::assemble(lens.clone(), segments))
    }

    fn assemble(lens: LensSpace, segments: Vec<Segment>) -> Self {
        let n = lens.n();
        let mut starts = Vec::with_capacity(segments.len() + 1);
        let mut nodes = Vec::with_capacity(segments.len() + 1);
        let mut t = 0.0;
        let mut u = CMatrix::identity(n, n);
        for s in &segments {
            starts.push(t);
            nodes.push(u.clone());
            u = exp_i_hermitian(&s.generator, s.duration) * u;
            t += s.duration;
        }
        starts.push(1.0);
        nodes.push(u);
        Self {
            lens,
            segments,
            starts,
            nodes,
        }
    }

    /// The constant path at the identity.
    pub fn identity(lens: &LensSpace) -> Self {
        let n = lens.n();
        Self::assemble(lens.clone(), vec![Segment::new(CMatrix::zeros(n, n), 1.0)])
    }

    /// The Reeb flow `t ↦ e^{iTt}`.
    pub fn reeb(lens: &LensSpace, time: f64) -> Self {
        let n = lens.n();
        let a = CMatrix::identity(n, n) * Complex64::new(time, 0.0);
        Self::assemble(lens.clone(), vec![Segment::new(a, 1.0)])
    }

    pub fn lens(&self) -> &LensSpace {
        &self.lens
    }

    pub fn dim(&self) -> usize {
        self.lens.n()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment boundaries `0 = t_0 < … < t_m = 1`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.starts
    }

    pub fn endpoint(&self) -> &CMatrix {
        self.nodes.last().expect("path has at least one node")
    }

    /// Distance between the cached endpoint and the product of segment
    /// exponentials.
    pub fn endpoint_defect(&self) -> f64 {
        let n = self.dim();
        let mut u = CMatrix::identity(n, n);
        for s in &self.segments {
            u = exp_i_hermitian(&s.generator, s.duration) * u;
        }
        frobenius(&(u - self.endpoint()))
    }

    fn locate(&self, t: f64) -> usize {
        let m = self.segments.len();
        match self.starts[..m].binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// `U_t` for `t ∈ [0, 1]` (clamped).
    pub fn at(&self, t: f64) -> CMatrix {
        let t = t.clamp(0.0, 1.0);
        if t >= 1.0 {
            return self.endpoint().clone();
        }
        let i = self.locate(t);
        let dt = t - self.starts[i];
        if dt == 0.0 {
            return self.nodes[i].clone();
        }
        exp_i_hermitian(&self.segments[i].generator, dt) * &self.nodes[i]
    }

    /// Operator norm of the generator on each segment.
    pub fn speeds(&self) -> Vec<f64> {
        self.segments.iter().map(|s| hermitian_norm(&s.generator)).collect()
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds().into_iter().fold(0.0, f64::max)
    }

    /// Continuous lift of `arg det U_t` at `t = 1`, i.e. `Σ tr(A_i)·d_i`.
    pub fn det_phase_lift(&self) -> f64 {
        self.segments.iter().map(|s| s.generator.trace().re * s.duration).sum()
    }

    /// Lower and upper bounds `∫ λ_min(A_t) dt`, `∫ λ_max(A_t) dt` of the
    /// contact Hamiltonian `z ↦ ⟨z, A_t z⟩` over the sphere.
    pub fn hamiltonian_bounds(&self) -> (f64, f64) {
        self.segments.iter().fold((0.0, 0.0), |(lo, hi), s| {
            let ev = hermitian_eigenvalues(&s.generator);
            (lo + ev[0] * s.duration, hi + ev[ev.len() - 1] * s.duration)
        })
    }

    /// Whether every generator is positive semidefinite.
    pub fn is_nonnegative(&self) -> bool {
        self.segments.iter().all(|s| {
            let ev = hermitian_eigenvalues(&s.generator);
            ev[0] >= -1e-12 * ev[ev.len() - 1].abs().max(1.0)
        })
    }

    /// `r_{−T} · φ`: the path `t ↦ e^{−iTt} U_t`.
    pub fn reeb_shift(&self, time: f64) -> Self {
        let n = self.dim();
        let shift = CMatrix::identity(n, n) * Complex64::new(time, 0.0);
        let segments = self
            .segments
            .iter()
            .map(|s| Segment::new(&s.generator - &shift, s.duration))
            .collect();
        let nodes = self
            .nodes
            .iter()
            .zip(&self.starts)
            .map(|(u, &t)| u * Complex64::from_polar(1.0, -time * t))
            .collect();
        Self {
            lens: self.lens.clone(),
            segments,
            starts: self.starts.clone(),
            nodes,
        }
    }

    /// `t ↦ U_t⁻¹`, exactly: on each segment
    /// `(e^{iAs} N)⁻¹ = e^{−i N*AN s} N*`.
    pub fn inverse(&self) -> Self {
        let segments = self
            .segments
            .iter()
            .zip(&self.nodes)
            .map(|(s, node)| {
                let g = node.adjoint() * &s.generator * node * Complex64::new(-1.0, 0.0);
                Segment::new(hermitian_part(&g), s.duration)
            })
            .collect();
        let nodes = self.nodes.iter().map(|u| u.adjoint()).collect();
        Self {
            lens: self.lens.clone(),
            segments,
            starts: self.starts.clone(),
            nodes,
        }
    }

    /// Pointwise product `t ↦ U_t V_t`, refit as one-parameter pieces on a
    /// grid fine enough that each piece moves by less than `π/4`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.lens != other.lens {
            return Err(Error::LensMismatch);
        }
        let mut grid: Vec<f64> = self.starts.iter().chain(&other.starts).copied().collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let speed_a = self.speeds();
        let speed_b = other.speeds();

        let mut times = vec![0.0];
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let v = speed_a[self.locate(mid)] + speed_b[other.locate(mid)];
            let pieces = ((v * (b - a)) / FRAC_PI_4).ceil().max(1.0) as usize;
            for j in 1..=pieces {
                times.push(if j == pieces {
                    b
                } else {
                    a + (b - a) * j as f64 / pieces as f64
                });
            }
        }
        let nodes: Vec<CMatrix> = times.iter().map(|&t| self.at(t) * other.at(t)).collect();
        let mut segments = Vec::with_capacity(times.len() - 1);
        for i in 0..times.len() - 1 {
            let dt = times[i + 1] - times[i];
            let step = &nodes[i + 1] * nodes[i].adjoint();
            let h = unitary_log(&step) * Complex64::new(1.0 / dt, 0.0);
            segments.push(Segment::new(h, dt));
        }
        let mut starts: Vec<f64> = times[..times.len() - 1].to_vec();
        starts.push(1.0);
        Ok(Self {
            lens: self.lens.clone(),
            segments,
            starts,
            nodes,
        })
    }

    /// `ψ · φ · ψ⁻¹` with `ψ = other`.
    pub fn conjugate_by(&self, other: &Self) -> Result<Self> {
        other.product(self)?.product(&other.inverse())
    }

    /// Appends a segment after the endpoint; the result represents
    /// `[e^{iAs}] · φ`.
    pub fn then(&self, generator: CMatrix, duration: f64) -> Result<Self> {
        let mut segs: Vec<Segment> = self.segments.clone();
        segs.push(Segment::new(generator, duration));
        Self::from_segments(&self.lens, segs)
    }

    /// Eigenphases of `U_1` and of the deck translates `g^{−m} U_1`.
    pub fn action_spectrum(&self) -> SpectrumWindow {
        self.action_spectrum_with(CLUSTER_TOLERANCE)
    }

    pub fn action_spectrum_with(&self, tol: f64) -> SpectrumWindow {
        let u = self.endpoint();
        let sphere = cluster_phases(unitary_phases(u), tol);
        let mut all = Vec::new();
        for m in 0..self.lens.k() as i64 {
            let shifted = self.lens.deck_power(-m) * u;
            all.extend(unitary_phases(&shifted));
        }
        SpectrumWindow {
            phases_sphere: sphere,
            phases_lens: cluster_phases(all, tol),
        }
    }

    /// Eigenvectors of translation `T`: the sphere-level eigenspace of `U_1`
    /// for `e^{iT}`, or at lens level the eigenspaces of `g^{−m} U_1` for
    /// every deck power `m`.
    pub fn translated_points(&self, time: f64, level: Level) -> TranslatedPoints {
        let u = self.endpoint();
        let powers: Vec<i64> = match level {
            Level::Sphere => vec![0],
            Level::Lens => (0..self.lens.k() as i64).collect(),
        };
        let target = canonical_phase(time);
        let mut components = Vec::new();
        for m in powers {
            let mat = if m == 0 {
                u.clone()
            } else {
                self.lens.deck_power(-m) * u
            };
            let (phases, q) = unitary_eigen(&mat);
            let cols: Vec<usize> = phases
                .iter()
                .enumerate()
                .filter(|(_, &p)| circle_distance(p, target) <= CLUSTER_TOLERANCE)
                .map(|(i, _)| i)
                .collect();
            if cols.is_empty() {
                continue;
            }
            let basis = CMatrix::from_fn(q.nrows(), cols.len(), |r, c| q[(r, cols[c])]);
            components.push(EigenspaceComponent {
                deck_power: m as u32,
                dimension: cols.len(),
                basis,
            });
        }
        TranslatedPoints {
            translation: time,
            level,
            components,
        }
    }

    /// Decides whether `{U_t}_{t ∈ [t0, t1]}` is embedded: no `g^{−m} U_t U_s⁻¹`
    /// with `s < t` in the window has eigenvalue 1.
    pub fn is_embedded(&self, t0: f64, t1: f64) -> Result<Embeddedness> {
        self.is_embedded_with(t0, t1, EMBEDDING_GRID)
    }

    pub fn is_embedded_with(&self, t0: f64, t1: f64, grid: usize) -> Result<Embeddedness> {
        if !(0.0 <= t0 && t0 < t1 && t1 <= 1.0) {
            return Err(Error::InvalidInterval(t0, t1));
        }
        let period = self.lens.minimal_orbit_period();
        let first = self.locate(t0);
        let last = self.locate(t1 - f64::EPSILON * 4.0).max(first);

        // Pieces of segments inside the window.
        let pieces: Vec<(usize, f64, f64)> = (first..=last)
            .map(|i| (i, self.starts[i].max(t0), self.starts[i + 1].min(t1)))
            .filter(|(_, a, b)| b > a)
            .collect();

        let mut signs = Vec::with_capacity(pieces.len());
        for &(i, a, b) in &pieces {
            let ev = hermitian_eigenvalues(&self.segments[i].generator);
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            let scale = lo.abs().max(hi.abs()).max(1.0);
            let smallest = ev.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
            if smallest <= 1e-12 * scale {
                // U_t U_s⁻¹ = e^{iA(t−s)} fixes the kernel of A.
                return Ok(Embeddedness::NotEmbedded {
                    s: a,
                    t: b,
                    deck_power: 0,
                });
            }
            let fastest = lo.abs().max(hi.abs());
            if (b - a) * fastest >= period * (1.0 - 1e-12) {
                let t = a + period / fastest;
                return Ok(Embeddedness::NotEmbedded {
                    s: a,
                    t,
                    deck_power: self.witness_power(a, t),
                });
            }
            signs.push(if lo > 0.0 {
                1
            } else if hi < 0.0 {
                -1
            } else {
                0
            });
            if pieces.len() == 1 {
                return Ok(Embeddedness::Embedded {
                    margin: period - (b - a) * fastest,
                });
            }
        }

        let sign = signs[0];
        if sign == 0 || signs.iter().any(|&s| s != sign) {
            return Ok(Embeddedness::Indeterminate {
                reason: "generators are not sign-definite across segment boundaries".into(),
            });
        }

        // Sign-definite: eigenphases of U_t U_{t0}⁻¹ move monotonically away
        // from 0 and the worst pair is (t0, t1). Track them on a grid whose
        // step keeps the per-step motion below π/2.
        let speed = pieces
            .iter()
            .map(|&(i, _, _)| hermitian_norm(&self.segments[i].generator))
            .fold(0.0, f64::max);
        let mut steps = ((t1 - t0) * grid as f64).ceil().max(1.0) as usize;
        let needed = ((t1 - t0) * speed / (PI / 2.0)).ceil() as usize;
        steps = steps.max(needed).max(1);
        let base_inv = self.at(t0).adjoint();
        let crossed = |t: f64| -> (bool, f64) {
            let x = self.at(t) * &base_inv;
            let phases = unitary_phases(&x);
            let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
            for p in phases {
                let p = p * sign as f64;
                hi = hi.max(p);
                lo = lo.min(p);
            }
            (hi >= period * (1.0 - 1e-12) || lo < -PI / 2.0, hi)
        };
        let mut prev = t0;
        let mut last_hi = 0.0;
        for j in 1..=steps {
            let t = if j == steps {
                t1
            } else {
                t0 + (t1 - t0) * j as f64 / steps as f64
            };
            let (hit, hi) = crossed(t);
            if hit {
                let (mut a, mut b) = (prev, t);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if crossed(m).0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                return Ok(Embeddedness::NotEmbedded {
                    s: t0,
                    t: b,
                    deck_power: self.witness_power(t0, b),
                });
            }
            prev = t;
            last_hi = hi;
        }
        Ok(Embeddedness::Embedded {
            margin: period - last_hi,
        })
    }

    /// Deck power `m` for which `g^{−m} U_t U_s⁻¹` is closest to having
    /// eigenvalue 1.
    fn witness_power(&self, s: f64, t: f64) -> u32 {
        let x = self.at(t) * self.at(s).adjoint();
        (0..self.lens.k())
            .map(|m| {
                let y = self.lens.deck_power(-(m as i64)) * &x;
                let d = unitary_phases(&y)
                    .into_iter()
                    .map(|p| p.abs())
                    .fold(f64::INFINITY, f64::min);
                (m, d)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(m, _)| m)
            .unwrap_or(0)
    }
}

/// Distance on the circle `R / 2πZ`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPhase {
    /// Representative in `[0, 2π)`.
    pub phase: f64,
    pub multiplicity: usize,
}

/// Sorts phases into `[0, 2π)` and merges values within `tol`, including
/// across the wrap at `2π`.
pub fn cluster_phases(raw: Vec<f64>, tol: f64) -> Vec<SpectralPhase> {
    let mut ps: Vec<f64> = raw.into_iter().map(canonical_phase).collect();
    ps.sort_by(f64::total_cmp);
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for p in ps {
        match groups.last_mut() {
            Some(g) if p - g[g.len() - 1] <= tol => g.push(p),
            _ => groups.push(vec![p]),
        }
    }
    if groups.len() > 1 {
        let first = groups[0][0];
        let last_group = &groups[groups.len() - 1];
        if first + TAU - last_group[last_group.len() - 1] <= tol {
            let tail = groups.pop().unwrap();
            groups[0].extend(tail.into_iter().map(|p| p - TAU));
        }
    }
    let mut out: Vec<SpectralPhase> = groups
        .into_iter()
        .map(|g| SpectralPhase {
            phase: canonical_phase(g.iter().sum::<f64>() / g.len() as f64),
            multiplicity: g.len(),
        })
        .collect();
    out.sort_by(|a, b| a.phase.total_cmp(&b.phase));
    out
}

/// Action spectrum modulo `2π`: `Ā` from the sphere, `A` on the lens space.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumWindow {
    pub phases_sphere: Vec<SpectralPhase>,
    pub phases_lens: Vec<SpectralPhase>,
}

impl SpectrumWindow {
    pub fn sphere_contains(&self, phase: f64, tol: f64) -> bool {
        self.phases_sphere
            .iter()
            .any(|p| circle_distance(p.phase, phase) <= tol)
    }

    pub fn lens_contains(&self, phase: f64, tol: f64) -> bool {
        self.phases_lens.iter().any(|p| circle_distance(p.phase, phase) <= tol)
    }

    pub fn multiplicity_at(&self, phase: f64, tol: f64) -> usize {
        self.phases_sphere
            .iter()
            .filter(|p| circle_distance(p.phase, phase) <= tol)
            .map(|p| p.multiplicity)
            .sum()
    }

    /// Distance from `x` to `Ā + 2πZ`.
    pub fn distance_to_sphere_spectrum(&self, x: f64) -> f64 {
        self.phases_sphere
            .iter()
            .map(|p| circle_distance(p.phase, x))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Sphere,
    Lens,
}

#[derive(Debug, Clone)]
pub struct EigenspaceComponent {
    pub deck_power: u32,
    /// Complex dimension; the translated points form a projectivized
    /// eigenspace of cohomological index `2 · dimension`.
    pub dimension: usize,
    pub basis: CMatrix,
}

#[derive(Debug, Clone)]
pub struct TranslatedPoints {
    pub translation: f64,
    pub level: Level,
    pub components: Vec<EigenspaceComponent>,
}

impl TranslatedPoints {
    pub fn dimension(&self) -> usize {
        self.components.iter().map(|c| c.dimension).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Embeddedness {
    Embedded {
        margin: f64,
    },
    /// `g^{−m} U_t U_s⁻¹` has eigenvalue 1 (up to bisection accuracy).
    NotEmbedded {
        s: f64,
        t: f64,
        deck_power: u32,
    },
    Indeterminate {
        reason: String,
    },
}

impl Embeddedness {
    pub fn is_embedded(&self) -> bool {
        matches!(self, Embeddedness::Embedded { .. })
    }
}
