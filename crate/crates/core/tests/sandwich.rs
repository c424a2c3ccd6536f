use conic_condition::cones::Cone;
use conic_condition::oracle::{rdist_estimate, OracleBudget};
use conic_condition::renegar::{op_norms, renegar_sandwich, LinearMap};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn oracle_estimates_stay_inside_the_sandwich() {
    let mut r = ChaCha8Rng::seed_from_u64(50);
    let ob = OracleBudget {
        subspace_samples: 0,
        directions: 16,
        bisection_steps: 30,
    };
    for i in 0..50 {
        let n = r.random_range(2..=6);
        let m = r.random_range(1..n.min(4));
        let mat = DMatrix::from_fn(n, m, |_, _| r.sample(StandardNormal));
        let a = LinearMap::euclidean(mat).unwrap();
        let k = Cone::Orthant(n);
        let s = renegar_sandwich(&a, &k).unwrap();
        let est = rdist_estimate(&a, &k, &ob, i).unwrap().value;
        assert!(
            s.contains(est, 1e-6),
            "instance {i}: {est} outside [{}, {}]",
            s.lower,
            s.upper
        );
    }
}

#[test]
fn kappa_is_one_exactly_for_isometries() {
    let mut r = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..20 {
        let g = DMatrix::from_fn(5, 2, |_, _| r.sample(StandardNormal));
        let q = g.clone().qr().q();
        let iso = op_norms(&LinearMap::euclidean(q).unwrap()).unwrap();
        assert!((iso.kappa - 1.0).abs() <= 1e-9);
        let gen = op_norms(&LinearMap::euclidean(g).unwrap()).unwrap();
        assert!(gen.kappa > 1.0 + 1e-9);
    }
}
