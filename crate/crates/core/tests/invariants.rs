use conic_condition::cones::Cone;
use conic_condition::linalg::{principal_angles, Subspace};
use conic_condition::measures::{dist, nu, nu_bar, odist, sigma, NormPair, FEASIBLE_TOL};
use conic_condition::norms::NormSpec;
use conic_condition::oracle::{sample_illposed, verify_suite, Instance};
use conic_condition::partition::{goldman_tucker, SUPPORT_TOL};
use conic_condition::renegar::{op_norms, precondition, LinearMap};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gauss(seed: u64, n: usize, m: usize) -> DMatrix<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, m, |_, _| r.sample(StandardNormal))
}

fn feasible(seed: u64, n: usize, m: usize) -> Subspace {
    let mut a = gauss(seed, n, m);
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    a.set_column(0, &DVector::from_fn(n, |_, _| 0.2 + r.random::<f64>()));
    Subspace::from_columns(&a).unwrap()
}

fn norm_of(i: u8) -> NormSpec {
    match i % 3 {
        0 => NormSpec::l1(),
        1 => NormSpec::l2(),
        _ => NormSpec::linf(),
    }
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (3usize..=5).prop_flat_map(|n| (Just(n), 1..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kappa_is_at_least_one(seed in any::<u64>(), (n, m) in dims(), d in 0u8..3, p in 0u8..3) {
        let np = NormPair::new(norm_of(p), norm_of(p));
        let a = LinearMap::new(gauss(seed, n, m), norm_of(d), np).unwrap();
        let ops = op_norms(&a).unwrap();
        prop_assert!(ops.kappa >= 1.0);
        prop_assert!(ops.norm * ops.inverse_norm >= 1.0 - 1e-9);
    }

    #[test]
    fn euclidean_dist_is_symmetric(seed in any::<u64>(), (n, m) in dims()) {
        let a = Subspace::from_columns(&gauss(seed, n, m)).unwrap();
        let b = Subspace::from_columns(&gauss(seed.wrapping_add(1), n, m)).unwrap();
        let np = NormPair::euclidean();
        let d1 = dist(&a, &b, &np).unwrap().value;
        let d2 = dist(&b, &a, &np).unwrap().value;
        let o = odist(&a, &b, &np).unwrap().value;
        let s = principal_angles(&a, &b).unwrap()[0].sin();
        prop_assert!((d1 - d2).abs() <= 1e-9 && (d1 - o).abs() <= 1e-9 && (d1 - s).abs() <= 1e-9);
    }

    #[test]
    fn nu_ignores_the_basis(seed in any::<u64>(), (n, m) in dims(), p in 0u8..3) {
        let l = feasible(seed, n, m);
        let mix = gauss(seed ^ 7, m, m) + DMatrix::identity(m, m) * 3.0;
        let l2 = Subspace::from_columns(&(l.basis() * mix)).unwrap();
        let np = NormPair::new(norm_of(p), norm_of(p));
        let k = Cone::Orthant(n);
        let a = nu(&l, &k, &np).unwrap();
        let b = nu(&l2, &k, &np).unwrap();
        prop_assert!(a.path.is_exact());
        prop_assert!((a.value - b.value).abs() <= 1e-7, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn exactly_one_side_is_positive(seed in any::<u64>(), (n, m) in dims()) {
        let l = Subspace::from_columns(&gauss(seed, n, m)).unwrap();
        let k = Cone::Orthant(n);
        let np = NormPair::euclidean();
        let a = nu(&l, &k, &np).unwrap().value;
        let b = nu_bar(&l, &k, &np).unwrap().value;
        prop_assert!(!(a > FEASIBLE_TOL && b > FEASIBLE_TOL));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a) && (0.0..=1.0 + 1e-12).contains(&b));
    }

    #[test]
    fn sigma_dominates_nu(seed in any::<u64>(), (n, m) in dims(), p in 0u8..3) {
        let l = feasible(seed, n, m);
        let k = Cone::Orthant(n);
        let np = NormPair::new(norm_of(p), norm_of(p));
        let a = nu(&l, &k, &np).unwrap();
        let s = sigma(&l, &k, &np).unwrap();
        prop_assume!(a.path.is_exact() && s.path.is_exact());
        prop_assert!(s.value >= a.value - 1e-7, "sigma {} < nu {}", s.value, a.value);
    }

    #[test]
    fn partition_is_permutation_equivariant(seed in any::<u64>(), (n, m) in dims()) {
        let basis = gauss(seed, n, m);
        let l = Subspace::from_columns(&basis).unwrap();
        let gt = goldman_tucker(&l).unwrap();
        let perm: Vec<usize> = (0..n).rev().collect();
        let permuted = DMatrix::from_fn(n, m, |i, j| basis[(perm[i], j)]);
        let gt2 = goldman_tucker(&Subspace::from_columns(&permuted).unwrap()).unwrap();
        let mut mapped: Vec<usize> = gt2.b.iter().map(|&i| perm[i]).collect();
        mapped.sort();
        prop_assert_eq!(mapped, gt.b.clone());
        for i in 0..n {
            let in_b = gt.b.contains(&i);
            prop_assert_eq!(gt.x_cert[i] > SUPPORT_TOL, in_b);
            prop_assert_eq!(gt.y_cert[i] > SUPPORT_TOL, !in_b);
        }
        prop_assert!(l.complement().project(&gt.x_cert).norm() <= 1e-9);
        prop_assert!(l.project(&gt.y_cert).norm() <= 1e-9);
    }

    #[test]
    fn preconditioned_map_is_balanced(seed in any::<u64>(), (n, m) in dims()) {
        let mut a = gauss(seed, n, m);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        a.set_column(0, &DVector::from_fn(n, |_, _| 0.1 + r.random::<f64>()));
        let p = precondition(&LinearMap::euclidean(a).unwrap(), &Cone::Orthant(n)).unwrap();
        let gram = p.balanced.transpose() * &p.balanced;
        prop_assert!((gram - DMatrix::identity(m, m)).amax() <= 1e-10);
        prop_assert!(p.holds);
    }

    #[test]
    fn illposed_samples_meet_both_cones(seed in any::<u64>(), (n, m) in dims()) {
        for k in [Cone::Orthant(n), Cone::SecondOrder(n)] {
            let samples = sample_illposed(&k, n, m, 5, seed).unwrap();
            prop_assert_eq!(samples.len(), 5);
            for s in &samples {
                prop_assert!(s.verify(&k));
            }
        }
    }
}

#[test]
fn suite_reports_are_deterministic() {
    let inst = Instance {
        cone: Cone::Orthant(3),
        subspace: feasible(3, 3, 2),
        norms: NormPair::euclidean(),
        map: None,
    };
    let a = serde_json::to_string(&verify_suite(&inst, 11)).unwrap();
    let b = serde_json::to_string(&verify_suite(&inst, 11)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sampling_is_deterministic_and_empty_for_zero_count() {
    let k = Cone::Psd(2);
    let a = sample_illposed(&k, 3, 1, 4, 9).unwrap();
    let b = sample_illposed(&k, 3, 1, 4, 9).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.subspace.basis(), y.subspace.basis());
    }
    assert!(sample_illposed(&k, 3, 1, 0, 9).unwrap().is_empty());
}
