//! Random sampling of admissible generators and paths.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lens::LensSpace;
use crate::linalg::{random_hermitian, CMatrix};
use crate::path::{Segment, UnitaryPath};

/// Independent stream for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Coordinates grouped by `w_j mod k`; a matrix commutes with the deck
/// generator iff it is block diagonal for this partition.
pub fn weight_classes(lens: &LensSpace) -> Vec<Vec<usize>> {
    let k = lens.k();
    let mut classes: Vec<(u32, Vec<usize>)> = Vec::new();
    for (j, &w) in lens.weights().iter().enumerate() {
        let r = w % k;
        match classes.iter_mut().find(|(c, _)| *c == r) {
            Some((_, v)) => v.push(j),
            None => classes.push((r, vec![j])),
        }
    }
    classes.into_iter().map(|(_, v)| v).collect()
}

/// Hermitian generator commuting with the deck group, eigenvalues uniform
/// in `[lo, hi]`.
pub fn random_generator<R: Rng + ?Sized>(rng: &mut R, lens: &LensSpace, lo: f64, hi: f64) -> CMatrix {
    let n = lens.n();
    let mut a = CMatrix::zeros(n, n);
    for class in weight_classes(lens) {
        let block = random_hermitian(rng, class.len(), lo, hi);
        for (r, &i) in class.iter().enumerate() {
            for (c, &j) in class.iter().enumerate() {
                a[(i, j)] = block[(r, c)];
            }
        }
    }
    a
}

/// Piecewise path with `segments` pieces of random duration whose
/// generators have spectrum in `[−scale, scale]`.
pub fn random_path<R: Rng + ?Sized>(rng: &mut R, lens: &LensSpace, segments: usize, scale: f64) -> UnitaryPath {
    random_path_in(rng, lens, segments, -scale, scale)
}

/// Like [`random_path`] with generator spectrum in `[lo, hi]`; `lo ≥ 0`
/// gives a non-negative isotopy.
pub fn random_path_in<R: Rng + ?Sized>(
    rng: &mut R,
    lens: &LensSpace,
    segments: usize,
    lo: f64,
    hi: f64,
) -> UnitaryPath {
    let segs: Vec<Segment> = (0..segments.max(1))
        .map(|_| {
            let d = rng.random_range(0.2..1.0);
            Segment::new(random_generator(rng, lens, lo, hi), d)
        })
        .collect();
    UnitaryPath::from_segments(lens, segs).expect("sampled generators are admissible")
}

/// Diagonal generator with the given real entries.
pub fn diagonal_generator(entries: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        entries.len(),
        entries.iter().map(|&x| Complex64::new(x, 0.0)),
    ))
}
