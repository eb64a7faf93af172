//! Quadratic conical generating functions invariant under a cyclic action.
//!
//! A form is stored as a real symmetric matrix `S` acting on interleaved
//! complex coordinates, with value `Q(v) = ½ vᵀ S v` (so `∇Q(v) = S v`).
//! The first `base_dim` real coordinates are the base of the bundle, the
//! rest are fibre coordinates.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lens::LensSpace;
use crate::linalg::{
    complex_structure, hermitian_part, real_representation, symmetric_eigenvalues, unitary_phases, CMatrix, RMatrix, I,
};
use num_complex::Complex64;

/// Default relative tolerance under which an eigenvalue counts as zero.
pub const NULLITY_TOLERANCE: f64 = 1e-8;

/// Minimum `|1 + λ|` over eigenvalues `λ` of a unitary fed to the Cayley
/// construction.
pub const CAYLEY_MARGIN: f64 = 1e-6;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const INVARIANCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantQuadraticForm {
    matrix: RMatrix,
    base_dim: usize,
    /// Rotation angle of the group generator on each complex coordinate.
    action_phases: Vec<f64>,
    /// Order `k'` of the acting cyclic group.
    order: u32,
}

fn max_abs(m: &RMatrix) -> f64 {
    m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// `Rᵀ S R` for the block rotation `R` given by `phases`.
fn rotate(s: &RMatrix, phases: &[f64]) -> RMatrix {
    let mut out = s.clone();
    // columns: S R
    for (j, &p) in phases.iter().enumerate() {
        let (sn, cs) = p.sin_cos();
        for r in 0..out.nrows() {
            let a = out[(r, 2 * j)];
            let b = out[(r, 2 * j + 1)];
            out[(r, 2 * j)] = a * cs + b * sn;
            out[(r, 2 * j + 1)] = -a * sn + b * cs;
        }
    }
    // rows: Rᵀ (S R)
    for (j, &p) in phases.iter().enumerate() {
        let (sn, cs) = p.sin_cos();
        for c in 0..out.ncols() {
            let a = out[(2 * j, c)];
            let b = out[(2 * j + 1, c)];
            out[(2 * j, c)] = a * cs + b * sn;
            out[(2 * j + 1, c)] = -a * sn + b * cs;
        }
    }
    out
}

impl InvariantQuadraticForm {
    /// Validates symmetry and invariance; does not symmetrize.
    pub fn new(matrix: RMatrix, base_dim: usize, action_phases: Vec<f64>, order: u32) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || dim != 2 * action_phases.len() || base_dim > dim || !base_dim.is_multiple_of(2) {
            return Err(Error::ActionMismatch(format!(
                "matrix {}x{}, base {}, {} phases",
                matrix.nrows(),
                matrix.ncols(),
                base_dim,
                action_phases.len()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("quadratic form entries"));
        }
        let scale = max_abs(&matrix).max(f64::MIN_POSITIVE);
        let asym = max_abs(&(&matrix - matrix.transpose()));
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NotSymmetric(asym));
        }
        let form = Self {
            matrix,
            base_dim,
            action_phases,
            order,
        };
        let defect = form.invariance_defect();
        if defect > INVARIANCE_TOLERANCE * scale {
            return Err(Error::NotInvariant(defect));
        }
        Ok(form)
    }

    pub fn zero(base_phases: &[f64], order: u32) -> Self {
        let d = 2 * base_phases.len();
        Self {
            matrix: RMatrix::zeros(d, d),
            base_dim: d,
            action_phases: base_phases.to_vec(),
            order,
        }
    }

    /// The zero-dimensional form; neutral for `⊕`.
    pub fn empty(order: u32) -> Self {
        Self::zero(&[], order)
    }

    /// Averages an arbitrary symmetric matrix over the group to produce an
    /// invariant form. Used for sampling.
    pub fn symmetrized(matrix: &RMatrix, base_dim: usize, action_phases: Vec<f64>, order: u32) -> Result<Self> {
        let sym = (matrix + matrix.transpose()) * 0.5;
        let mut acc = RMatrix::zeros(sym.nrows(), sym.ncols());
        for m in 0..order {
            let ph: Vec<f64> = action_phases.iter().map(|p| p * m as f64).collect();
            acc += rotate(&sym, &ph);
        }
        acc /= order as f64;
        let acc = (&acc + acc.transpose()) * 0.5;
        Self::new(acc, base_dim, action_phases, order)
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.dim() - self.base_dim
    }

    pub fn action_phases(&self) -> &[f64] {
        &self.action_phases
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn base_phases(&self) -> &[f64] {
        &self.action_phases[..self.base_dim / 2]
    }

    pub fn invariance_defect(&self) -> f64 {
        max_abs(&(rotate(&self.matrix, &self.action_phases) - &self.matrix))
    }

    pub fn value(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.matrix * v))
    }

    pub fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    pub fn negated(&self) -> Self {
        Self {
            matrix: -&self.matrix,
            ..self.clone()
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.matrix)
    }

    /// Cohomological index: number of eigenvalues `λ ≤ tol · ‖S‖`
    /// (nullity plus negative index).
    pub fn index(&self, tol: f64) -> usize {
        let eig = self.eigenvalues();
        count_nonpositive(&eig, tol)
    }

    /// `(negative, null, positive)` counts at the given tolerance.
    pub fn inertia(&self, tol: f64) -> (usize, usize, usize) {
        let eig = self.eigenvalues();
        let thr = tol * spectral_scale(&eig);
        let neg = eig.iter().filter(|&&x| x < -thr).count();
        let null = eig.iter().filter(|&&x| x.abs() <= thr).count();
        (neg, null, eig.len() - neg - null)
    }

    pub fn is_nondegenerate(&self, tol: f64) -> bool {
        self.inertia(tol).1 == 0
    }

    /// Block-diagonal sum; the base of `self` stays the base.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.order != other.order {
            return Err(Error::ActionMismatch(format!(
                "group orders {} and {}",
                self.order, other.order
            )));
        }
        let (d1, d2) = (self.dim(), other.dim());
        let mut m = RMatrix::zeros(d1 + d2, d1 + d2);
        m.view_mut((0, 0), (d1, d1)).copy_from(&self.matrix);
        m.view_mut((d1, d1), (d2, d2)).copy_from(&other.matrix);
        let mut phases = self.action_phases.clone();
        phases.extend_from_slice(&other.action_phases);
        Ok(Self {
            matrix: m,
            base_dim: self.base_dim,
            action_phases: phases,
            order: self.order,
        })
    }

    /// Composition form in the variables `(q; ζ1, ζ2, ν1, ν2)`:
    ///
    /// `F♯G = F(ζ1, ν1) + G(ζ2, ν2) − 2⟨ζ2 − q, i(ζ1 − q)⟩`.
    ///
    /// If `self` generates `Φ` and `other` generates `Ψ`, the result
    /// generates `Ψ ∘ Φ`.
    pub fn sharp(&self, other: &Self) -> Result<Self> {
        self.check_base_compatible(other)?;
        let b = self.base_dim;
        let n = b / 2;
        let (f1, f2) = (self.fiber_dim(), other.fiber_dim());
        let dim = 3 * b + f1 + f2;
        let q0 = 0;
        let z1 = b;
        let z2 = 2 * b;
        let nu1 = 3 * b;
        let nu2 = 3 * b + f1;

        let mut m = RMatrix::zeros(dim, dim);
        // F on (ζ1, ν1)
        let idx_f: Vec<usize> = (z1..z1 + b).chain(nu1..nu1 + f1).collect();
        for (a, &ia) in idx_f.iter().enumerate() {
            for (c, &ic) in idx_f.iter().enumerate() {
                m[(ia, ic)] += self.matrix[(a, c)];
            }
        }
        let idx_g: Vec<usize> = (z2..z2 + b).chain(nu2..nu2 + f2).collect();
        for (a, &ia) in idx_g.iter().enumerate() {
            for (c, &ic) in idx_g.iter().enumerate() {
                m[(ia, ic)] += other.matrix[(a, c)];
            }
        }

        // −2⟨b, J a⟩ with a = ζ1 − q, b = ζ2 − q has matrix
        // [[0, 2J], [−2J, 0]] in (a, b); pull back along (q, ζ1, ζ2) ↦ (a, b).
        let j = complex_structure(n);
        let mut lift = RMatrix::zeros(2 * b, dim);
        for r in 0..b {
            lift[(r, q0 + r)] = -1.0;
            lift[(r, z1 + r)] = 1.0;
            lift[(b + r, q0 + r)] = -1.0;
            lift[(b + r, z2 + r)] = 1.0;
        }
        let mut coupling = RMatrix::zeros(2 * b, 2 * b);
        coupling.view_mut((0, b), (b, b)).copy_from(&(&j * 2.0));
        coupling.view_mut((b, 0), (b, b)).copy_from(&(&j * -2.0));
        m += lift.transpose() * coupling * &lift;

        let base = self.base_phases().to_vec();
        let mut phases = Vec::with_capacity(dim / 2);
        phases.extend_from_slice(&base);
        phases.extend_from_slice(&base);
        phases.extend_from_slice(&base);
        phases.extend_from_slice(&self.action_phases[b / 2..]);
        phases.extend_from_slice(&other.action_phases[b / 2..]);

        let m = (&m + m.transpose()) * 0.5;
        Self::new(m, b, phases, self.order)
    }

    /// Linear injection `ι` with `(F♯G) ∘ ι = F ⊕ G`:
    /// `(x, ν1, y, ν2) ↦ (q = x; ζ1 = x, ζ2 = y, ν1, ν2)`.
    ///
    /// Columns are indexed by the coordinates of `F ⊕ G`.
    pub fn sharp_injection(&self, other: &Self) -> RMatrix {
        let b = self.base_dim;
        let (f1, f2) = (self.fiber_dim(), other.fiber_dim());
        let sharp_dim = 3 * b + f1 + f2;
        let sum_dim = self.dim() + other.dim();
        let mut iota = RMatrix::zeros(sharp_dim, sum_dim);
        for r in 0..b {
            iota[(r, r)] = 1.0; // q = x
            iota[(b + r, r)] = 1.0; // ζ1 = x
            iota[(2 * b + r, self.dim() + r)] = 1.0; // ζ2 = y
        }
        for r in 0..f1 {
            iota[(3 * b + r, b + r)] = 1.0;
        }
        for r in 0..f2 {
            iota[(3 * b + f1 + r, self.dim() + b + r)] = 1.0;
        }
        iota
    }

    /// Pull back along a linear map `x ↦ L x`: the form `Q(Lx)`.
    pub fn pullback(&self, map: &RMatrix, base_dim: usize, action_phases: Vec<f64>) -> Result<Self> {
        let m = map.transpose() * &self.matrix * map;
        let m = (&m + m.transpose()) * 0.5;
        Self::new(m, base_dim, action_phases, self.order)
    }

    /// Slope of the linear Lagrangian generated by the form: the Schur
    /// complement `S_bb − S_bf S_ff⁻¹ S_fb`, when the fibre block is
    /// invertible.
    pub fn generated_slope(&self) -> Option<RMatrix> {
        let b = self.base_dim;
        let f = self.fiber_dim();
        let sbb = self.matrix.view((0, 0), (b, b)).into_owned();
        if f == 0 {
            return Some(sbb);
        }
        let sbf = self.matrix.view((0, b), (b, f)).into_owned();
        let sfb = self.matrix.view((b, 0), (f, b)).into_owned();
        let sff = self.matrix.view((b, b), (f, f)).into_owned();
        let x = sff.lu().solve(&sfb)?;
        Some(sbb - sbf * x)
    }

    fn check_base_compatible(&self, other: &Self) -> Result<()> {
        if self.order != other.order {
            return Err(Error::ActionMismatch(format!(
                "group orders {} and {}",
                self.order, other.order
            )));
        }
        if self.base_dim != other.base_dim {
            return Err(Error::ActionMismatch(format!(
                "base dimensions {} and {}",
                self.base_dim, other.base_dim
            )));
        }
        let same = self
            .base_phases()
            .iter()
            .zip(other.base_phases())
            .all(|(a, b)| (a - b).abs() < 1e-12);
        if !same {
            return Err(Error::ActionMismatch("base action phases differ".into()));
        }
        Ok(())
    }
}

fn spectral_scale(eig: &[f64]) -> f64 {
    let s = eig.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

pub(crate) fn count_nonpositive(eig: &[f64], tol: f64) -> usize {
    let thr = tol * spectral_scale(eig);
    eig.iter().filter(|&&x| x <= thr).count()
}

/// Hermitian matrix `A = 2i (I − U)(I + U)⁻¹` of the Cayley generating
/// function of `U`.
pub fn cayley_hermitian(u: &CMatrix) -> Result<CMatrix> {
    let n = u.nrows();
    let margin = unitary_phases(u)
        .into_iter()
        .map(|p| (Complex64::from_polar(1.0, p) + 1.0).norm())
        .fold(f64::INFINITY, f64::min);
    if margin < CAYLEY_MARGIN {
        return Err(Error::CayleyDomain(margin));
    }
    let id = CMatrix::identity(n, n);
    let plus = &id + u;
    let minus = &id - u;
    // (I+U) and (I−U) commute, so solving on the left is the same product.
    let x = plus.lu().solve(&minus).ok_or(Error::CayleyDomain(margin))?;
    Ok(hermitian_part(&(x * (I * 2.0))))
}

/// Fibreless generating function `W(q) = ½ Re(q* A q)` of a unitary `U`
/// commuting with the lens action: for every `z`, `dW((z + Uz)/2) = i(z − Uz)`.
pub fn cayley_gf(u: &CMatrix, lens: &LensSpace) -> Result<InvariantQuadraticForm> {
    if u.nrows() != lens.n() || u.ncols() != lens.n() {
        return Err(Error::Shape {
            expected: lens.n(),
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    let a = cayley_hermitian(u)?;
    let s = real_representation(&a);
    let s = (&s + s.transpose()) * 0.5;
    InvariantQuadraticForm::new(s, 2 * lens.n(), lens.form_phases(), lens.k_prime())
}
