//! Dense complex/real helpers shared by the rest of the crate.
//!
//! Complex vectors of length `n` are identified with real vectors of length
//! `2n` by interleaving coordinates as `(x_1, y_1, x_2, y_2, ...)`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Maps an angle into `[0, 2π)`.
pub fn canonical_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance from `x` to the nearest point of the lattice `step·Z`.
pub fn lattice_distance(x: f64, step: f64) -> f64 {
    let r = x.rem_euclid(step);
    r.min(step - r)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max-modulus of `A - A*`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    hermitian_eigen(a).0
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn hermitian_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let v = hermitian_eigenvalues(a);
    v[0].abs().max(v[v.len() - 1].abs())
}

/// `exp(i·A·τ)` for Hermitian `A`.
pub fn exp_i_hermitian(a: &CMatrix, tau: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(a);
    let n = a.nrows();
    let mut scaled = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, lambda * tau);
        for r in 0..n {
            scaled[(r, c)] *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// Eigenphases and an orthonormal eigenbasis of a unitary matrix.
///
/// Phases are returned in `(-π, π]`. With `W = e^{−iθ}U` and `θ` chosen so
/// that `−1` stays away from the spectrum of `W`, the Cayley transform
/// `i(I − W)(I + W)⁻¹` is Hermitian with eigenvalues `tan((φ − θ)/2)`,
/// strictly monotone in `φ`, so one Hermitian eigensolve separates every
/// distinct phase. The complex QR iteration can stall near the identity.
pub fn unitary_eigen(u: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = u.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let id = CMatrix::identity(n, n);
    // 2n + 2 candidate rotations; one keeps all phases at least π/(2n+2)
    // away from the pole
    let candidates = 2 * n + 2;
    let (w, _) = (0..candidates)
        .map(|j| {
            let theta = TAU * j as f64 / candidates as f64;
            let w = u * Complex64::from_polar(1.0, -theta);
            let b = &id + &w;
            let margin = hermitian_eigenvalues(&(b.adjoint() * &b))[0];
            (w, margin)
        })
        .fold(
            (id.clone(), f64::NEG_INFINITY),
            |best, c| if c.1 > best.1 { c } else { best },
        );
    let inv = (&id + &w).try_inverse().expect("−1 is kept off the spectrum");
    let a = (&id - &w) * inv * Complex64::i();
    let (_, basis) = hermitian_eigen(&a);
    let phases = (0..n)
        .map(|i| {
            let col = basis.column(i);
            let p = (col.adjoint() * u * col)[(0, 0)].arg();
            if p <= -PI {
                PI
            } else {
                p
            }
        })
        .collect();
    (phases, basis)
}

pub fn unitary_phases(u: &CMatrix) -> Vec<f64> {
    unitary_eigen(u).0
}

/// Principal Hermitian logarithm: returns `H` with `exp(iH) = U` and
/// spectrum of `H` in `(-π, π]`.
pub fn unitary_log(u: &CMatrix) -> CMatrix {
    let (phases, q) = unitary_eigen(u);
    let n = u.nrows();
    let d = CMatrix::from_diagonal(&DVector::from_iterator(
        n,
        phases.iter().map(|&p| Complex64::new(p, 0.0)),
    ));
    hermitian_part(&(&q * d * q.adjoint()))
}

/// Operator norm of `U - I` for a unitary `U`, from its eigenphases.
pub fn distance_from_identity(u: &CMatrix) -> f64 {
    unitary_phases(u)
        .into_iter()
        .map(|p| (Complex64::from_polar(1.0, p) - 1.0).norm())
        .fold(0.0, f64::max)
}

/// Real `2n × 2n` matrix of complex multiplication by `A` in interleaved
/// coordinates.
pub fn real_representation(a: &CMatrix) -> RMatrix {
    let n = a.nrows();
    let mut r = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            r[(2 * i, 2 * j)] = z.re;
            r[(2 * i, 2 * j + 1)] = -z.im;
            r[(2 * i + 1, 2 * j)] = z.im;
            r[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    r
}

/// Interleaved real vector of a complex vector.
pub fn realify(z: &DVector<Complex64>) -> DVector<f64> {
    DVector::from_fn(2 * z.len(), |i, _| {
        let c = z[i / 2];
        if i % 2 == 0 {
            c.re
        } else {
            c.im
        }
    })
}

/// The standard complex structure `(x, y) ↦ (-y, x)` on `R^{2n}`.
pub fn complex_structure(n: usize) -> RMatrix {
    let mut j = RMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

pub fn symmetric_eigenvalues(s: &RMatrix) -> Vec<f64> {
    if s.nrows() == 0 {
        return Vec::new();
    }
    let sym = (s + s.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn diagonal_unitary(phases: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        phases.len(),
        phases.iter().map(|&p| Complex64::from_polar(1.0, p)),
    ))
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// phase correction on the diagonal of `R`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let z = complex_gaussian(rng, n, n);
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for c in 0..n {
        let d = r[(c, c)];
        let ph = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, c)] *= ph;
        }
    }
    q
}

/// Random Hermitian matrix with eigenvalues drawn uniformly from
/// `[lo, hi]` and Haar eigenvectors.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> CMatrix {
    let q = haar_unitary(rng, n);
    let d = DVector::from_fn(n, |_, _| Complex64::new(rng.random_range(lo..=hi), 0.0));
    hermitian_part(&(&q * CMatrix::from_diagonal(&d) * q.adjoint()))
}
