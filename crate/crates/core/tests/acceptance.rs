//! Acceptance criteria. Each test prints one pass/fail line.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use lensspec::linalg::{complex_gaussian, exp_i_hermitian, hermitian_eigenvalues, realify, unitary_phases};
use lensspec::maslov::{maslov_index_with_breakpoints, subdivide_with_arc, BasedFamily};
use lensspec::norms::{greedy_embedded_decomposition, nu_from, nu_star_from, reeb_length};
use lensspec::random::{random_generator, random_path, trial_rng};
use lensspec::verify::{verify_suite, Suite};
use lensspec::{
    cayley_gf, geodesic_report, maslov_index, GeodesicVerdict, InvariantQuadraticForm, LensSpace, NuVariant, RoundMode,
    SpectralSelectors, UnitaryPath,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const NULL: f64 = 1e-8;

fn report(id: u32, name: &str, violations: usize, detail: String) {
    let status = if violations == 0 { "PASS" } else { "FAIL" };
    // written to stdout directly so the line shows without --nocapture
    let line = format!("criterion {id:>2} {name}: {status} ({detail})\n");
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    assert_eq!(violations, 0, "criterion {id} {name}: {detail}");
}

fn lens(k: i64, w: &[i64]) -> LensSpace {
    LensSpace::new(k, w).unwrap()
}

fn suite_lenses() -> Vec<LensSpace> {
    vec![
        lens(2, &[1, 1]),
        lens(3, &[1, 1]),
        lens(4, &[1, 3]),
        lens(5, &[1, 2]),
        lens(3, &[1, 1, 2]),
    ]
}

fn duality_lenses() -> Vec<LensSpace> {
    vec![lens(2, &[1, 1]), lens(3, &[1, 1]), lens(4, &[1, 3])]
}

fn sample(rng: &mut ChaCha8Rng, l: &LensSpace) -> UnitaryPath {
    let segments = rng.random_range(1..=3);
    random_path(rng, l, segments, 4.0)
}

fn sel(p: &UnitaryPath) -> SpectralSelectors {
    SpectralSelectors::compute(p).unwrap()
}

fn n_of(l: &LensSpace) -> i64 {
    l.n() as i64
}

#[test]
fn criterion_01_reeb_maslov_values() {
    // (T, ⌈T/2π⌉) with the ceiling written out by hand
    let grid = [
        (-0.1, 0),
        (0.1, 1),
        (1.0, 1),
        (PI, 1),
        (TAU - 1e-6, 1),
        (TAU, 1),
        (TAU + 1e-6, 2),
        (6.0 * PI, 3),
        (20.0 * PI, 10),
    ];
    let mut bad = 0;
    let mut cases = 0;
    for k in [2, 3, 5] {
        for n in 1..=3 {
            let l = LensSpace::standard(k, n).unwrap();
            for (t, turns) in grid {
                cases += 1;
                let mu = maslov_index(&UnitaryPath::reeb(&l, t)).unwrap();
                if mu != 2 * n as i64 * turns {
                    bad += 1;
                    eprintln!("k={k} n={n} T={t}: μ = {mu}, want {}", 2 * n as i64 * turns);
                }
            }
        }
    }
    report(1, "reeb_maslov_values", bad, format!("{cases} cases, exact"));
}

#[test]
fn criterion_02_normalization_table() {
    let mut bad = 0;
    let mut worst = 0.0f64;
    for l in suite_lenses() {
        let s = sel(&UnitaryPath::identity(&l));
        let n = n_of(&l);
        for j in -4 * n + 1..=2 * n {
            // blocks of 2n indices: (-4n, -2n] → -2π, (-2n, 0] → 0, (0, 2n] → 2π
            let want = if j <= -2 * n {
                -TAU
            } else if j <= 0 {
                0.0
            } else {
                TAU
            };
            let err = (s.c(j) - want).abs();
            worst = worst.max(err);
            bad += usize::from(err > 1e-9);
        }
    }
    report(2, "normalization_table", bad, format!("worst error {worst:.2e}"));
}

#[test]
fn criterion_03_reeb_c0_is_time() {
    let mut bad = 0;
    let mut worst = 0.0f64;
    for (i, l) in suite_lenses().iter().enumerate() {
        let mut rng = trial_rng(303, i as u64);
        for _ in 0..20 {
            let t = rng.random_range(-20.0..20.0);
            let err = (sel(&UnitaryPath::reeb(l, t)).c(0) - t).abs();
            worst = worst.max(err);
            bad += usize::from(err > 1e-9);
        }
    }
    report(
        3,
        "reeb_c0_is_time",
        bad,
        format!("20 T per lens, worst error {worst:.2e}"),
    );
}

#[test]
fn criterion_04_spectrality() {
    let mut bad = 0;
    let mut worst = 0.0f64;
    for (i, l) in suite_lenses().iter().enumerate() {
        let mut rng = trial_rng(404, i as u64);
        let n = n_of(l);
        for _ in 0..100 {
            let p = sample(&mut rng, l);
            let s = sel(&p);
            // the sphere spectrum from the endpoint phases directly
            let phases = unitary_phases(p.endpoint());
            for j in -2 * n..=2 * n {
                let c = s.c(j);
                let d = phases
                    .iter()
                    .map(|&x| {
                        let r = (c - x).rem_euclid(TAU);
                        r.min(TAU - r)
                    })
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
                bad += usize::from(d > 1e-9);
            }
        }
    }
    report(
        4,
        "spectrality",
        bad,
        format!("100 paths per lens, worst distance {worst:.2e}"),
    );
}

#[test]
fn criterion_05_periodicity_and_reeb_composition() {
    let mut bad = 0;
    let mut worst = 0.0f64;
    for (i, l) in suite_lenses().iter().enumerate() {
        let mut rng = trial_rng(505, i as u64);
        let n = n_of(l);
        for _ in 0..50 {
            let p = sample(&mut rng, l);
            let t = rng.random_range(-7.0..7.0);
            let a = sel(&p);
            let b = sel(&UnitaryPath::reeb(l, t).product(&p).unwrap());
            for j in -2 * n..=2 * n {
                let e = (a.c(j + 2 * n) - a.c(j) - TAU).abs().max((b.c(j) - a.c(j) - t).abs());
                worst = worst.max(e);
                bad += usize::from(e > 1e-9);
            }
        }
    }
    report(
        5,
        "periodicity_and_reeb_composition",
        bad,
        format!("50 trials per lens, worst error {worst:.2e}"),
    );
}

#[test]
fn criterion_06_lattice_properties() {
    let mut tri = 0;
    let mut conj = 0;
    let mut pd = 0;
    for (i, l) in duality_lenses().iter().enumerate() {
        let mut rng = trial_rng(606, i as u64);
        let n = n_of(l);
        let ceil = |x: f64| l.period_count(x, RoundMode::Ceil);
        let floor = |x: f64| l.period_count(x, RoundMode::Floor);
        for _ in 0..100 {
            let p = sample(&mut rng, l);
            let q = sample(&mut rng, l);
            let (sp, sq) = (sel(&p), sel(&q));
            let spq = sel(&p.product(&q).unwrap());
            for j in -2 * n..=2 * n {
                if l.k() % 2 == 1 && j % 2 != 0 {
                    continue;
                }
                for m in -2 * n..=2 * n {
                    tri += usize::from(ceil(spq.c(j + m)) > ceil(sp.c(j)) + ceil(sq.c(m)));
                }
            }
            let sc = sel(&p.conjugate_by(&q).unwrap());
            conj += (-2 * n..=2 * n).filter(|&j| ceil(sp.c(j)) != ceil(sc.c(j))).count();
            let si = sel(&p.inverse());
            pd += (-2 * n..=2 * n)
                .filter(|&j| ceil(sp.c(j)) != -floor(si.c(-j - (2 * n - 1))))
                .count();
        }
    }
    report(
        6,
        "triangle_conjugation_duality",
        tri + conj + pd,
        format!("100 trials per lens; violations: triangle {tri}, conjugation {conj}, duality {pd}"),
    );
}

#[test]
fn criterion_07_hamiltonian_continuity() {
    let mut bad = 0;
    let mut worst = f64::INFINITY;
    for (i, l) in suite_lenses().iter().enumerate() {
        let mut rng = trial_rng(707, i as u64);
        let n = n_of(l);
        for _ in 0..100 {
            let p = sample(&mut rng, l);
            let d = rng.random_range(0.1..1.0);
            let a = random_generator(&mut rng, l, -2.0, 2.0);
            let ev = hermitian_eigenvalues(&a);
            let (lo, hi) = (d * ev[0], d * ev[ev.len() - 1]);
            let q = p.then(a, d).unwrap();
            let (sp, sq) = (sel(&p), sel(&q));
            for j in -2 * n..=2 * n {
                let delta = sq.c(j) - sp.c(j);
                let margin = (delta - lo).min(hi - delta);
                worst = worst.min(margin);
                bad += usize::from(margin < -1e-8);
            }
        }
    }
    report(
        7,
        "hamiltonian_continuity",
        bad,
        format!("100 trials per lens, worst margin {worst:.2e}"),
    );
}

#[test]
fn criterion_08_maslov_quasimorphism_and_triangle() {
    let mut quasi = 0;
    let mut tri = 0;
    let mut worst_defect = 0;
    for (i, l) in suite_lenses().iter().enumerate() {
        let mut rng = trial_rng(808, i as u64);
        let bound = 2 * n_of(l) + i64::from(l.k() % 2 == 1);
        for _ in 0..200 {
            let p = sample(&mut rng, l);
            let q = sample(&mut rng, l);
            let (a, b) = (maslov_index(&p).unwrap(), maslov_index(&q).unwrap());
            let ab = maslov_index(&p.product(&q).unwrap()).unwrap();
            let defect = (ab - a - b).abs();
            worst_defect = worst_defect.max(defect);
            quasi += usize::from(defect > bound);
            tri += usize::from(ab > a + b + 1);
        }
    }
    report(
        8,
        "maslov_quasimorphism_and_triangle",
        quasi + tri,
        format!("200 pairs per lens, worst defect {worst_defect}; violations: quasimorphism {quasi}, triangle {tri}"),
    );
}

#[test]
fn criterion_09_maslov_poincare_duality() {
    let mut bad = 0;
    let mut tested = 0;
    for (i, l) in suite_lenses().iter().enumerate() {
        let mut rng = trial_rng(909, i as u64);
        for _ in 0..100 {
            let p = sample(&mut rng, l);
            if unitary_phases(p.endpoint()).iter().any(|x| x.abs() < 1e-6) {
                continue;
            }
            tested += 1;
            bad += usize::from(maslov_index(&p).unwrap() + maslov_index(&p.inverse()).unwrap() != 2 * n_of(l));
        }
    }
    report(
        9,
        "maslov_poincare_duality",
        bad,
        format!("{tested} paths without eigenvalue 1"),
    );
}

#[test]
fn criterion_10_subdivision_invariance() {
    let mut bad = 0;
    for (i, l) in suite_lenses().iter().enumerate() {
        let mut rng = trial_rng(1010, i as u64);
        for _ in 0..50 {
            let p = sample(&mut rng, l);
            let coarse = subdivide_with_arc(&p, PI / 2.0);
            // a refinement of the coarse partition with random extra points
            let mut refined = coarse.clone();
            for w in coarse.windows(2) {
                refined.push(rng.random_range(w[0]..w[1]));
            }
            refined.sort_by(f64::total_cmp);
            refined.dedup();
            let values: Vec<i64> = [coarse, subdivide_with_arc(&p, PI / 7.0), refined]
                .into_iter()
                .map(|b| maslov_index_with_breakpoints(&p, b, NULL).unwrap())
                .collect();
            bad += usize::from(values.windows(2).any(|w| w[0] != w[1]));
        }
    }
    report(
        10,
        "subdivision_invariance",
        bad,
        "50 paths per lens, three subdivisions".into(),
    );
}

fn random_form(rng: &mut ChaCha8Rng, l: &LensSpace) -> InvariantQuadraticForm {
    let d = 2 * l.n();
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    InvariantQuadraticForm::symmetrized(&m, d, l.form_phases(), l.k_prime()).unwrap()
}

#[test]
fn criterion_11_quadratic_core() {
    let lenses = [
        lens(2, &[1, 1]),
        lens(3, &[1, 2, 1]),
        lens(5, &[1, 2, 3]),
        lens(9, &[1, 2]),
        lens(4, &[1, 3, 1]),
    ];
    let (mut duality, mut evenness, mut self_check, mut cayley) = (0, 0, 0, 0);
    let mut worst_residual = 0.0f64;
    for (i, l) in lenses.iter().enumerate() {
        let mut rng = trial_rng(1111, i as u64);
        let n = l.n();
        for _ in 0..100 {
            let q = random_form(&mut rng, l);
            if q.is_nondegenerate(1e-6) {
                duality += usize::from(q.index(NULL) + q.negated().index(NULL) != 2 * n);
            }
            if l.k_prime() > 2 {
                evenness += usize::from(!q.index(NULL).is_multiple_of(2));
            }

            let p = sample(&mut rng, l);
            let fam = BasedFamily::new(&p, subdivide_with_arc(&p, PI / 2.0)).unwrap();
            self_check += usize::from(fam.initial_index(NULL).unwrap() != 2 * n * fam.factor_count());

            // the Cayley form has gradient i(z − Uz) at (z + Uz)/2
            let u = exp_i_hermitian(&random_generator(&mut rng, l, -2.5, 2.5), 1.0);
            let w = cayley_gf(&u, l).unwrap();
            let z: DVector<Complex64> = complex_gaussian(&mut rng, n, 1).column(0).into_owned();
            let uz = &u * &z;
            let base = realify(&((&z + &uz) * Complex64::new(0.5, 0.0)));
            let want = realify(&((&z - &uz) * Complex64::i()));
            let r = (w.matrix() * base - want).amax();
            worst_residual = worst_residual.max(r);
            cayley += usize::from(r > 1e-9);
        }
    }
    report(
        11,
        "quadratic_core",
        duality + evenness + self_check + cayley,
        format!(
            "100 trials per lens; violations: duality {duality}, evenness {evenness}, self-check {self_check}, \
             cayley {cayley}; worst residual {worst_residual:.2e}"
        ),
    );
}

#[test]
fn criterion_12_norms() {
    let (mut unbounded, mut descended, mut axioms) = (0, 0, 0);
    for (i, l) in suite_lenses().iter().enumerate() {
        let tw = l.reeb_period();
        for m in 1..=20 {
            let p = UnitaryPath::reeb(l, m as f64 * tw);
            let v = nu_from(&p, &sel(&p), NuVariant::Plain);
            unbounded += usize::from(v.count != m || v.angle != l.period_multiple(m));
        }
        let mut rng = trial_rng(1212, i as u64);
        let nu = |p: &UnitaryPath| nu_from(p, &sel(p), NuVariant::Plain).count;
        for _ in 0..100 {
            let p = sample(&mut rng, l);
            let q = sample(&mut rng, l);
            // 2π + T_w in units of T_w
            let star = nu_star_from(&p, &sel(&p)).unwrap();
            descended += usize::from(star.value.count > l.periods_per_turn() + 1);
            let a = nu(&p);
            axioms += usize::from(a < 0);
            axioms += usize::from(a != nu(&p.inverse()));
            axioms += usize::from(nu(&p.product(&q).unwrap()) > a + nu(&q));
            axioms += usize::from(nu(&p.conjugate_by(&q).unwrap()) != a);
        }
    }
    report(
        12,
        "norms",
        unbounded + descended + axioms,
        format!("violations: unboundedness {unbounded}, descended bound {descended}, axioms {axioms}"),
    );
}

#[test]
fn criterion_13_geodesic() {
    let mut bad = 0;
    let mut cases = 0;
    // ⌊kT/2π⌋ + 1 written out for T = 0.1, 2π, 6π, 20π
    let times = [(0.1, 0), (TAU, 1), (6.0 * PI, 3), (20.0 * PI, 10)];
    for (k, w) in [(2, 1), (3, 1), (3, 2), (5, 1), (5, 2)] {
        for n in 1..=3 {
            let l = lens(k, &vec![w; n]);
            for (t, turns) in times {
                cases += 1;
                let want = k * turns + 1;
                let greedy = greedy_embedded_decomposition(&UnitaryPath::reeb(&l, t)).unwrap().count as i64;
                let r = geodesic_report(&l, t).unwrap();
                let ok = greedy == want && r.dis_lower == want && r.verdict == GeodesicVerdict::Certified;
                if !ok {
                    eprintln!(
                        "L_{k}({w} x{n}) T={t}: greedy {greedy}, lower {}, want {want}",
                        r.dis_lower
                    );
                }
                bad += usize::from(!ok);
            }
        }
    }
    // L_5(1,2): the Reeb flow first descends to the identity at T_w = 2π
    let l = lens(5, &[1, 2]);
    let t = 20.0 * PI;
    let r = geodesic_report(&l, t).unwrap();
    let gap_ok =
        r.verdict == GeodesicVerdict::Gap && r.dis_lower == 11 && r.dis_upper == Some(reeb_length(&l, t) as usize);
    bad += usize::from(!gap_ok);
    report(
        13,
        "geodesic",
        bad,
        format!(
            "{cases} equal-weight cases certified; L_5(1,2) at 20π: {:?} with bounds [{}, {:?}]",
            r.verdict, r.dis_lower, r.dis_upper
        ),
    );
}

#[test]
fn criterion_14_determinism() {
    let mut bad = 0;
    for suite in Suite::ALL {
        let a = serde_json::to_vec(&verify_suite(suite, 4, 14)).unwrap();
        let b = serde_json::to_vec(&verify_suite(suite, 4, 14)).unwrap();
        bad += usize::from(a != b);
    }
    let job = br#"{"lens":{"k":3,"weights":[1,2]},"path":{"random":{"seed":14,"segments":3,"norm":3.0}},"task":{"norms":{}}}"#;
    let run = || lensspec::run_job(&lensspec::parse_job(job).unwrap()).unwrap().to_json();
    bad += usize::from(run() != run());
    report(
        14,
        "determinism",
        bad,
        "every suite and one job run twice, byte comparison".into(),
    );
}
