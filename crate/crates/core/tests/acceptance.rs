//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use conic_condition::cones::Cone;
use conic_condition::linalg::{principal_angles, projection_gap, Subspace};
use conic_condition::measures::{
    dist, nu, nu_bar, odist, sigma, sym, theta, NormPair, Path, FEASIBLE_TOL,
};
use conic_condition::norms::NormSpec;
use conic_condition::oracle::{dist_to_illposed_estimate, rdist_estimate, OracleBudget};
use conic_condition::partition::{
    block_decompose, goldman_tucker, partition_measures, SUPPORT_TOL,
};
use conic_condition::renegar::{precondition, renegar_sandwich, LinearMap};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss_vec(r: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.sample(StandardNormal))
}

fn gauss_mat(r: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| r.sample(StandardNormal))
}

fn positive_vec(r: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| 0.2 + r.random::<f64>())
}

fn line(x: &[f64]) -> Subspace {
    Subspace::from_vectors(&[DVector::from_vec(x.to_vec())]).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `L` of dimension `m` in `Rⁿ` meeting the open orthant.
fn feasible_subspace(r: &mut ChaCha8Rng, n: usize, m: usize) -> Subspace {
    let mut vecs = vec![positive_vec(r, n)];
    for _ in 1..m {
        vecs.push(gauss_vec(r, n));
    }
    Subspace::from_vectors(&vecs).unwrap()
}

/// `L` of dimension `m` in `Rⁿ` whose complement meets the open orthant.
fn infeasible_subspace(r: &mut ChaCha8Rng, n: usize, m: usize) -> Subspace {
    let mut vecs = vec![positive_vec(r, n)];
    for _ in 1..(n - m) {
        vecs.push(gauss_vec(r, n));
    }
    Subspace::from_vectors(&vecs).unwrap().complement()
}

fn c1_asymmetry() -> Outcome {
    let l1 = line(&[1.0, 0.0]);
    let l2 = line(&[1.0, 1.0]);
    let np = NormPair::new(NormSpec::l1(), NormSpec::l1());
    let vals = [
        (dist(&l1, &l2, &np).map_err(err)?.value, 1.0),
        (dist(&l2, &l1, &np).map_err(err)?.value, 0.5),
        (odist(&l1, &l2, &np).map_err(err)?.value, 0.5),
        (odist(&l2, &l1, &np).map_err(err)?.value, 1.0),
    ];
    for (i, (got, want)) in vals.iter().enumerate() {
        ensure((got - want).abs() <= 1e-9, || {
            format!("value {i}: {got} != {want}")
        })?;
    }
    Ok(format!(
        "dist = (1, 0.5), odist = (0.5, 1): {:?}",
        vals.map(|v| v.0)
    ))
}

fn c2_euclidean() -> Outcome {
    let mut r = rng(2);
    let np = NormPair::euclidean();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = Subspace::from_columns(&gauss_mat(&mut r, 6, 2)).map_err(err)?;
        let b = Subspace::from_columns(&gauss_mat(&mut r, 6, 2)).map_err(err)?;
        let d = dist(&a, &b, &np).map_err(err)?.value;
        let o = odist(&a, &b, &np).map_err(err)?.value;
        let gap = projection_gap(&a, &b).map_err(err)?;
        let ang = principal_angles(&a, &b)
            .map_err(err)?
            .into_iter()
            .fold(0.0f64, f64::max)
            .sin();
        let res = (d - o).abs().max((d - gap).abs()).max((d - ang).abs());
        worst = worst.max(res);
    }
    ensure(worst <= 1e-8, || format!("max residual {worst:e}"))?;
    Ok(format!("100 pairs in Gr(R^6,2), max residual {worst:.2e}"))
}

fn c3_feasible_side() -> Outcome {
    let mut r = rng(3);
    let np = NormPair::euclidean();
    let ob = OracleBudget::default();
    let mut worst_up = f64::NEG_INFINITY;
    let mut worst_down = f64::INFINITY;
    for i in 0..50 {
        let n = r.random_range(3..=6);
        let m = r.random_range(1..n);
        let l = feasible_subspace(&mut r, n, m);
        let k = Cone::Orthant(n);
        let nu = nu(&l, &k, &np).map_err(err)?;
        ensure(nu.path.is_exact(), || {
            format!("instance {i}: path {:?}", nu.path)
        })?;
        let b = dist_to_illposed_estimate(&l, &k, &np, &ob, i).map_err(err)?;
        let c = b
            .constructed
            .ok_or_else(|| format!("instance {i}: no critical subspace"))?;
        let s = b
            .sampled_min
            .ok_or_else(|| format!("instance {i}: no samples"))?;
        ensure(c <= nu.value + 1e-7, || {
            format!("instance {i}: constructed {c} > nu {}", nu.value)
        })?;
        ensure(s >= nu.value - 1e-6, || {
            format!("instance {i}: sample {s} < nu {}", nu.value)
        })?;
        worst_up = worst_up.max(c - nu.value);
        worst_down = worst_down.min(s - nu.value);
    }
    Ok(format!("50 instances, max(constructed - nu) = {worst_up:.2e}, min(sampled - nu) = {worst_down:.2e}"))
}

fn c4_infeasible_side() -> Outcome {
    let mut r = rng(4);
    let np = NormPair::euclidean();
    let ob = OracleBudget::default();
    let mut worst_up = f64::NEG_INFINITY;
    let mut worst_down = f64::INFINITY;
    for i in 0..50 {
        let n = r.random_range(3..=6);
        let m = r.random_range(1..n);
        let l = infeasible_subspace(&mut r, n, m);
        let k = Cone::Orthant(n);
        let nb = nu_bar(&l, &k, &np).map_err(err)?;
        ensure(nb.path.is_exact(), || {
            format!("instance {i}: path {:?}", nb.path)
        })?;
        let b = dist_to_illposed_estimate(&l, &k, &np, &ob, i).map_err(err)?;
        let c = b
            .constructed
            .ok_or_else(|| format!("instance {i}: no critical subspace"))?;
        let s = b
            .sampled_min
            .ok_or_else(|| format!("instance {i}: no samples"))?;
        ensure(c <= nb.value + 1e-7, || {
            format!("instance {i}: constructed {c} > nu_bar {}", nb.value)
        })?;
        ensure(s >= nb.value - 1e-6, || {
            format!("instance {i}: sample {s} < nu_bar {}", nb.value)
        })?;
        worst_up = worst_up.max(c - nb.value);
        worst_down = worst_down.min(s - nb.value);
    }
    Ok(format!("50 instances, max(constructed - nu_bar) = {worst_up:.2e}, min(sampled - nu_bar) = {worst_down:.2e}"))
}

fn c5_wedge() -> Outcome {
    let np = NormPair::euclidean();
    let l = line(&[0.0, 1.0]);
    let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1e-300);
    let mut worst = 0.0f64;
    for phi in [PI / 12.0, PI / 8.0, PI / 6.0] {
        let k = Cone::Wedge2d { half_angle: phi };
        let n = nu(&l, &k, &np).map_err(err)?.value;
        let s = sigma(&l, &k, &np).map_err(err)?.value;
        let t = theta(&k).map_err(err)?;
        for (got, want) in [
            (n, phi.sin()),
            (s, 1.0 / (2.0 * phi.cos())),
            (s / n, 1.0 / (2.0 * phi).sin()),
            (t, FRAC_PI_2 - 2.0 * phi),
        ] {
            let e = rel(got, want);
            ensure(e <= 1e-6, || format!("phi = {phi}: {got} vs {want}"))?;
            worst = worst.max(e);
        }
    }
    Ok(format!(
        "phi in {{pi/12, pi/8, pi/6}}, max relative error {worst:.2e}"
    ))
}

fn c6_nu_sigma() -> Outcome {
    let mut r = rng(6);
    let np = NormPair::euclidean();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = r.random_range(2..=6);
        let m = r.random_range(1..n);
        let l = feasible_subspace(&mut r, n, m);
        let k = Cone::Orthant(n);
        let a = nu(&l, &k, &np).map_err(err)?.value;
        let b = sigma(&l, &k, &np).map_err(err)?.value;
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-7, || format!("max |sigma - nu| = {worst:e}"))?;
    let mut lp_cases = 0;
    for i in 0..50 {
        let n = r.random_range(2..=6);
        let m = r.random_range(1..n);
        let l = feasible_subspace(&mut r, n, m);
        let k = Cone::Orthant(n);
        let primal = if i % 2 == 0 {
            NormSpec::l1()
        } else {
            NormSpec::linf()
        };
        let ip = NormPair::new(primal, NormSpec::induced_e(k.clone()));
        let a = nu(&l, &k, &ip).map_err(err)?;
        let b = sigma(&l, &k, &ip).map_err(err)?;
        ensure(a.path == Path::LpExact, || {
            format!("induced case path {:?}", a.path)
        })?;
        ensure(a.value == b.value, || {
            format!("induced case: nu {} != sigma {}", a.value, b.value)
        })?;
        lp_cases += 1;
    }
    Ok(format!("50 l2/l2 orthant instances, max |sigma - nu| = {worst:.2e}; {lp_cases} induced-norm LP instances with sigma = nu"))
}

fn c7_symmetry() -> Outcome {
    let mut r = rng(7);
    let mut worst = f64::INFINITY;
    let mut worst_eq = 0.0f64;
    let mut tested = 0;
    while tested < 50 {
        let n = r.random_range(2..=5);
        let m = r.random_range(1..n);
        let l = feasible_subspace(&mut r, n, m);
        let k = Cone::Orthant(n);
        let norm = NormSpec::l1();
        let s = sym(&l, &k, &norm).map_err(err)?.value;
        if s >= 1.0 - 1e-9 {
            continue;
        }
        tested += 1;
        let sg = sigma(&l, &k, &NormPair::new(norm.clone(), norm))
            .map_err(err)?
            .value;
        let slack = (sg - s / (1.0 + s)).min(s / (1.0 - s) - sg);
        worst = worst.min(slack);
        let ed = NormSpec::induced_e_dual(k.clone());
        let s2 = sym(&l, &k, &ed).map_err(err)?.value;
        let sg2 = sigma(&l, &k, &NormPair::new(ed.clone(), ed))
            .map_err(err)?
            .value;
        worst_eq = worst_eq.max((sg2 - s2 / (1.0 + s2)).abs());
    }
    ensure(worst >= -1e-7, || format!("bound slack {worst:e}"))?;
    ensure(worst_eq <= 1e-7, || {
        format!("equality branch residual {worst_eq:e}")
    })?;
    let l = line(&[2.0, 1.0]);
    let k = Cone::Orthant(2);
    let s = sym(&l, &k, &NormSpec::l1()).map_err(err)?.value;
    let sg = sigma(&l, &k, &NormPair::new(NormSpec::l1(), NormSpec::l1()))
        .map_err(err)?
        .value;
    ensure(
        (s - 0.5).abs() <= 1e-9 && (sg - 1.0 / 3.0).abs() <= 1e-9,
        || format!("regression Sym = {s}, sigma = {sg}"),
    )?;
    Ok(format!("50 instances, min slack {worst:.2e}, equality residual {worst_eq:.2e}, regression Sym = 0.5, sigma = 1/3"))
}

fn c8_renegar() -> Outcome {
    let mut r = rng(8);
    let ob = OracleBudget::default();
    let mut worst = f64::NEG_INFINITY;
    let mut worst_iso = 0.0f64;
    for i in 0..25 {
        let n = r.random_range(3..=5);
        let m = r.random_range(1..=2);
        let mat = gauss_mat(&mut r, n, m);
        let k = Cone::Orthant(n);
        let a = LinearMap::euclidean(mat.clone()).map_err(err)?;
        let s = renegar_sandwich(&a, &k).map_err(err)?;
        let est = rdist_estimate(&a, &k, &ob, i).map_err(err)?.value;
        ensure(s.contains(est, 1e-6), || {
            format!("instance {i}: {est} not in [{}, {}]", s.lower, s.upper)
        })?;
        worst = worst.max((s.lower - est).max(est - s.upper));
        let q = mat.qr().q();
        let iso = LinearMap::euclidean(q).map_err(err)?;
        let g = renegar_sandwich(&iso, &k).map_err(err)?.grassmann_value();
        let est = rdist_estimate(&iso, &k, &ob, i).map_err(err)?.value;
        let rel = (est - g).abs() / g;
        ensure(rel <= 0.05, || {
            format!("isometry {i}: estimate {est} vs {g}")
        })?;
        worst_iso = worst_iso.max(rel);
    }
    Ok(format!(
        "25 maps, max bracket excess {worst:.2e}; isometries max relative gap {worst_iso:.2e}"
    ))
}

fn c9_precondition() -> Outcome {
    let mut r = rng(9);
    let ob = OracleBudget {
        subspace_samples: 0,
        directions: 60,
        bisection_steps: 40,
    };
    let mut worst = f64::INFINITY;
    let mut worst_ratio = 0.0f64;
    for i in 0..25 {
        let (k, x0) = if i % 3 == 2 {
            let k = Cone::Psd(2);
            let x0 = k.sample_element(&mut r);
            (k, x0)
        } else {
            let n = r.random_range(2..=5);
            (Cone::Orthant(n), positive_vec(&mut r, n))
        };
        let n = k.dim();
        let m = r.random_range(1..n.min(3));
        let mut mat = gauss_mat(&mut r, n, m);
        mat.set_column(0, &x0);
        let a = LinearMap::euclidean(mat).map_err(err)?;
        let p = precondition(&a, &k).map_err(err)?;
        let lower = p.nu.bracket.map_or(p.nu.value, |(lo, _)| lo);
        ensure(lower >= p.bound - 1e-7, || {
            format!("instance {i}: nu(PL) = {lower} < {}", p.bound)
        })?;
        worst = worst.min(lower - p.bound);
        let bal = LinearMap::euclidean(p.balanced.clone()).map_err(err)?;
        let norm = bal.singular_values().0;
        let est = rdist_estimate(&bal, &k, &ob, i as u64).map_err(err)?.value;
        let ratio = norm / est;
        let cap = (k.rank() as f64).sqrt() * 1.05;
        ensure(ratio <= cap, || {
            format!("instance {i}: ||PAR||/Rdist = {ratio} > {cap}")
        })?;
        worst_ratio = worst_ratio.max(ratio / (k.rank() as f64).sqrt());
    }
    Ok(format!(
        "25 instances, min(nu(PL) - 1/sqrt r) = {worst:.2e}, max ratio/sqrt r = {worst_ratio:.4}"
    ))
}

fn c10_goldman_tucker() -> Outcome {
    let mut r = rng(10);
    let n = 6;
    let mut worst_rec = 0.0f64;
    let mut min_nu = f64::INFINITY;
    let mut mixed = 0;
    for i in 0..100 {
        let nb = r.random_range(0..=n);
        let mut idx: Vec<usize> = (0..n).collect();
        for j in (1..n).rev() {
            idx.swap(j, r.random_range(0..=j));
        }
        let mut b: Vec<usize> = idx[..nb].to_vec();
        let mut nn: Vec<usize> = idx[nb..].to_vec();
        b.sort();
        nn.sort();
        let mut y = DVector::zeros(n);
        for &j in &nn {
            y[j] = 0.2 + r.random::<f64>();
        }
        let mut vecs = Vec::new();
        if !b.is_empty() {
            let mut x = DVector::zeros(n);
            for &j in &b {
                x[j] = 0.2 + r.random::<f64>();
            }
            vecs.push(x);
        }
        while vecs.len() < 3 {
            let g = gauss_vec(&mut r, n);
            let g = if nn.is_empty() {
                g
            } else {
                &g - &y * (y.dot(&g) / y.dot(&y))
            };
            vecs.push(g);
        }
        let basis = DMatrix::from_columns(&vecs);
        let l = Subspace::from_columns(&basis).map_err(err)?;
        let gt = goldman_tucker(&l).map_err(err)?;
        ensure(gt.b == b && gt.n == nn, || {
            format!(
                "instance {i}: got ({:?}, {:?}), want ({b:?}, {nn:?})",
                gt.b, gt.n
            )
        })?;
        for j in 0..n {
            let (x, yv) = (gt.x_cert[j], gt.y_cert[j]);
            let in_b = b.contains(&j);
            ensure(
                if in_b {
                    x > SUPPORT_TOL && yv.abs() <= 1e-12
                } else {
                    yv > SUPPORT_TOL && x.abs() <= 1e-12
                },
                || format!("instance {i}: certificate supports wrong at {j}: x = {x}, y = {yv}"),
            )?;
        }
        let mix = gauss_mat(&mut r, 3, 3);
        let a = LinearMap::euclidean(&basis * mix).map_err(err)?;
        let bd = block_decompose(&a, &gt).map_err(err)?;
        worst_rec = worst_rec.max(bd.reconstruction_residual);
        let pm = partition_measures(&l, &NormPair::new(NormSpec::l1(), NormSpec::linf()))
            .map_err(err)?;
        for blk in pm.b.iter().chain(pm.n.iter()) {
            ensure(blk.nu.value > FEASIBLE_TOL, || {
                format!("instance {i}: block nu = {}", blk.nu.value)
            })?;
            min_nu = min_nu.min(blk.nu.value);
        }
        if gt.is_mixed() {
            mixed += 1;
        }
    }
    ensure(worst_rec <= 1e-9, || {
        format!("reconstruction residual {worst_rec:e}")
    })?;
    let l = line(&[1.0, 1.0, 0.0]);
    let gt = goldman_tucker(&l).map_err(err)?;
    ensure(gt.b == vec![0, 1] && gt.n == vec![2], || {
        format!("regression partition ({:?}, {:?})", gt.b, gt.n)
    })?;
    let pm =
        partition_measures(&l, &NormPair::new(NormSpec::l1(), NormSpec::linf())).map_err(err)?;
    let vb = pm.b.ok_or("regression: missing B block")?.nu.value;
    ensure((vb - 0.5).abs() <= 1e-9, || {
        format!("regression nu(L_B) = {vb}")
    })?;
    Ok(format!("100 subspaces ({mixed} mixed), reconstruction {worst_rec:.2e}, min block nu {min_nu:.3e}; regression B = {{1,2}}, N = {{3}}, nu(L_B) = 1/2"))
}

fn c11_jordan() -> Outcome {
    let cones = [
        Cone::Orthant(4),
        Cone::SecondOrder(4),
        Cone::Psd(3),
        Cone::Product(vec![Cone::Orthant(2), Cone::SecondOrder(3), Cone::Psd(2)]),
    ];
    let mut r = rng(11);
    let mut worst = 0.0f64;
    for k in &cones {
        let e = k.identity();
        let ne = NormSpec::induced_e(k.clone());
        let nd = NormSpec::induced_e_dual(k.clone());
        for _ in 0..1000 {
            let x = gauss_vec(&mut r, k.dim());
            let scale = 1.0 + x.norm();
            let sd = k.spectral(&x).map_err(err)?;
            let mut res = (sd.reconstruct() - &x).amax();
            let mut sum = DVector::zeros(k.dim());
            for (a, ca) in sd.frame.iter().enumerate() {
                sum += ca;
                for (b, cb) in sd.frame.iter().enumerate() {
                    let prod = k.jordan(ca, cb).map_err(err)?;
                    let want = if a == b {
                        ca.clone()
                    } else {
                        DVector::zeros(k.dim())
                    };
                    res = res.max((prod - want).amax() / scale);
                }
            }
            res = res.max((sum - &e).amax());
            let l2 = sd.eigenvalues.iter().map(|l| l * l).sum::<f64>().sqrt();
            let linf = sd.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
            let l1: f64 = sd.eigenvalues.iter().map(|l| l.abs()).sum();
            res = res.max((x.norm() - l2).abs() / scale);
            res = res.max((ne.eval(&x).map_err(err)? - linf).abs() / scale);
            res = res.max((nd.eval(&x).map_err(err)? - l1).abs() / scale);
            worst = worst.max(res);
        }
    }
    ensure(worst <= 1e-9, || format!("max residual {worst:e}"))?;
    Ok(format!(
        "4 cone kinds x 1000 elements, max residual {worst:.2e}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 11] = [
        ("asymmetry example", c1_asymmetry, Duration::from_secs(1)),
        (
            "Euclidean coincidence",
            c2_euclidean,
            Duration::from_secs(5),
        ),
        (
            "main theorem, feasible side",
            c3_feasible_side,
            Duration::from_secs(60),
        ),
        (
            "main theorem, infeasible side",
            c4_infeasible_side,
            Duration::from_secs(60),
        ),
        ("rotated-cone example", c5_wedge, Duration::from_secs(1)),
        ("nu/sigma corollary", c6_nu_sigma, Duration::from_secs(30)),
        ("symmetry theorem", c7_symmetry, Duration::from_secs(30)),
        ("Renegar sandwich", c8_renegar, Duration::from_secs(120)),
        ("preconditioning", c9_precondition, Duration::from_secs(120)),
        (
            "Goldman-Tucker partition",
            c10_goldman_tucker,
            Duration::from_secs(30),
        ),
        ("Jordan layer", c11_jordan, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let timing = if took <= *limit {
            format!("{:.2}s", took.as_secs_f64())
        } else {
            format!("{:.2}s over {}s limit", took.as_secs_f64(), limit.as_secs())
        };
        match out {
            Ok(detail) => println!("PASS {:>2} {name} [{timing}]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{timing}]: {detail}", i + 1)
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
