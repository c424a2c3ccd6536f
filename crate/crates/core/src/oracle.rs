//! Brute-force estimators used to check the measures independently.
//!
//! Every estimate is one-sided: upper bounds come from explicit ill-posed subspaces or
//! perturbations, lower bounds from certified measure values.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cones::{unit_gaussian, Cone};
use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::measures::kernels::{interior_margin, rng_for, FEASIBLE_TOL};
use crate::measures::{
    alignment_constant, critical_subspace_feasible, critical_subspace_infeasible, dist,
    nu_bar_with, nu_with, odist, sigma_with, sym_with, theta_with, Budget, MeasureCertificate,
    NormPair, Path,
};
use crate::norms::{NormKind, NormSpec};
use crate::partition::{
    block_decompose_with, goldman_tucker, partition_measures_with, SUPPORT_TOL,
};
use crate::renegar::{operator_norm, precondition_with, renegar_sandwich_with, LinearMap, Side};

const SALT_SAMPLE: u64 = 8;
const SALT_PERTURB: u64 = 9;
const MAX_REJECTIONS: usize = 100_000;
const WITNESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleBudget {
    pub subspace_samples: usize,
    pub directions: usize,
    pub bisection_steps: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            subspace_samples: 2_000,
            directions: 200,
            bisection_steps: 40,
        }
    }
}

/// An ill-posed subspace with its two witnesses.
#[derive(Debug, Clone)]
pub struct IllPosedSample {
    pub subspace: Subspace,
    /// `u ∈ K* ∖ {0}` orthogonal to the subspace.
    pub u: DVector<f64>,
    /// `v ∈ K ∖ {0}` inside the subspace.
    pub v: DVector<f64>,
}

impl IllPosedSample {
    /// Both witnesses verified to `1e-9` relative accuracy.
    pub fn verify(&self, k: &Cone) -> bool {
        let (nu, nv) = (self.u.norm(), self.v.norm());
        nu > 0.0
            && nv > 0.0
            && k.dual_contains(&self.u, WITNESS_TOL * nu)
            && k.contains(&self.v, WITNESS_TOL * nv)
            && self.subspace.project(&self.u).norm() <= WITNESS_TOL * nu
            && self.subspace.contains(&self.v, WITNESS_TOL * nv)
    }
}

/// Random members of `Σ_m`: pick a complementary pair `v ∈ K`, `u ∈ K*`, then span `v` and
/// `m − 1` random directions of `u⊥`.
pub fn sample_illposed(
    k: &Cone,
    n: usize,
    m: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<IllPosedSample>> {
    k.validate()?;
    if k.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: n,
        });
    }
    if m == 0 || m >= n {
        return Err(Error::Validation(format!(
            "need 0 < m < n, got m = {m}, n = {n}"
        )));
    }
    let mut rng = rng_for(seed, SALT_SAMPLE);
    let mut out = Vec::with_capacity(count);
    let mut rejections = 0;
    while out.len() < count {
        if rejections >= MAX_REJECTIONS {
            return Err(Error::SamplingExhausted(rejections));
        }
        let (v, u) = k.sample_boundary_pair(&mut rng)?;
        let uh = &u / u.norm();
        let mut vecs = vec![v.clone()];
        for _ in 1..m {
            let g = unit_gaussian(&mut rng, n);
            vecs.push(&g - &uh * uh.dot(&g));
        }
        let sample = Subspace::from_vectors(&vecs)
            .ok()
            .filter(|s| s.dim() == m)
            .map(|subspace| IllPosedSample { subspace, u, v })
            .filter(|s| s.verify(k));
        match sample {
            Some(s) => out.push(s),
            None => rejections += 1,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct DistBracket {
    pub side: Side,
    /// `ν(L)` on the feasible side, `ν̄(L)` on the infeasible side.
    pub measure: f64,
    /// Certified lower end of the measure.
    pub lo: f64,
    /// Smallest distance to any explicit ill-posed subspace.
    pub hi: f64,
    /// Distance to the critical subspace built from the measure's witnesses.
    pub constructed: Option<f64>,
    /// Smallest distance over the random ill-posed samples.
    pub sampled_min: Option<f64>,
    pub consistent: bool,
}

fn exact(c: MeasureCertificate, what: &str) -> Result<f64> {
    if c.path == Path::Sampled {
        return Err(Error::ApproximateOnly(what.into()));
    }
    Ok(c.value)
}

fn certified_lower(c: &MeasureCertificate) -> f64 {
    c.bracket.map_or(c.value, |(lo, _)| lo)
}

/// Brackets `dist(L, Σ_m)` on the feasible side, or `odist(Σ_m, L)` on the infeasible side.
pub fn dist_to_illposed_estimate(
    l: &Subspace,
    k: &Cone,
    np: &NormPair,
    budget: &OracleBudget,
    seed: u64,
) -> Result<DistBracket> {
    let mb = Budget::with_seed(seed);
    let nu = nu_with(l, k, np, &mb)?;
    let (side, cert) = if nu.value > FEASIBLE_TOL {
        (Side::Feasible, nu)
    } else {
        let nb = nu_bar_with(l, k, np, &mb)?;
        if nb.value <= FEASIBLE_TOL {
            return Err(Error::IllPosedInstance);
        }
        (Side::Infeasible, nb)
    };
    let gap = |lt: &Subspace| -> Result<f64> {
        match side {
            Side::Feasible => exact(dist(l, lt, np)?, "dist"),
            Side::Infeasible => exact(odist(lt, l, np)?, "odist"),
        }
    };
    let critical = match side {
        Side::Feasible => critical_subspace_feasible(l, k, np, &cert),
        Side::Infeasible => critical_subspace_infeasible(l, k, np, &cert),
    };
    let constructed = match critical {
        Ok(lt) => Some(gap(&lt)?),
        Err(Error::MissingWitnesses(_) | Error::DegenerateVbar { .. }) => None,
        Err(e) => return Err(e),
    };
    let samples = sample_illposed(k, l.ambient_dim(), l.dim(), budget.subspace_samples, seed)?;
    let gaps: Vec<f64> = samples
        .par_iter()
        .map(|s| gap(&s.subspace))
        .collect::<Result<_>>()?;
    let sampled_min = gaps.into_iter().reduce(f64::min);
    let hi = constructed
        .into_iter()
        .chain(sampled_min)
        .fold(f64::INFINITY, f64::min);
    let lo = certified_lower(&cert) - FEASIBLE_TOL;
    Ok(DistBracket {
        side,
        measure: cert.value,
        lo,
        hi,
        constructed,
        sampled_min,
        consistent: lo <= hi + 1e-6,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RdistEstimate {
    /// Upper bound on `Rdist(A, Σ)`.
    pub value: f64,
    pub side: Side,
    /// Flip magnitude along the perturbation built from the measure's witnesses.
    pub constructed: Option<f64>,
    /// Number of directions along which the status flipped.
    pub flipped: usize,
    pub tried: usize,
}

/// Whether the perturbed system keeps the strict status of `side`.
fn keeps_status(mat: &DMatrix<f64>, k: &Cone, side: Side) -> Result<bool> {
    let n = mat.nrows();
    let image = match Subspace::from_columns(mat) {
        Ok(s) => Some(s),
        Err(Error::DegenerateSubspace { rank, .. }) if rank >= n => {
            return Ok(side == Side::Feasible);
        }
        Err(Error::DegenerateSubspace { .. }) => None,
        Err(e) => return Err(e),
    };
    match (side, image) {
        (Side::Feasible, Some(s)) => Ok(interior_margin(&s, k)? > FEASIBLE_TOL),
        (Side::Feasible, None) => Ok(false),
        (Side::Infeasible, Some(s)) => {
            Ok(interior_margin(&s.complement(), &k.dual())? > FEASIBLE_TOL)
        }
        (Side::Infeasible, None) => Ok(true),
    }
}

/// `|||a||| · |b|*`, the operator norm of `a bᵀ`.
fn rank_one_norm(
    a: &DVector<f64>,
    b: &DVector<f64>,
    tri: &NormSpec,
    domain: &NormSpec,
) -> Result<f64> {
    Ok(tri.eval(a)? * domain.dual_eval(b)?)
}

/// Unit perturbation from the proof: it moves `A` onto `Σ` at magnitude `t*`.
fn constructed_direction(
    a: &LinearMap,
    side: Side,
    cert: &MeasureCertificate,
) -> Result<Option<(DMatrix<f64>, f64)>> {
    let mat = &a.matrix;
    match side {
        Side::Feasible => {
            let Some(u) = &cert.u else { return Ok(None) };
            let u = u / a.norms.tri.dual_eval(u)?;
            let v = a.norms.tri.dual_attainer(&u)?;
            let atu = mat.transpose() * &u;
            let mag = rank_one_norm(&v, &atu, &a.norms.tri, &a.domain_norm)?;
            if mag <= 1e-14 {
                return Ok(None);
            }
            Ok(Some((-(&v * atu.transpose()) / mag, mag)))
        }
        Side::Infeasible => {
            let (Some(x), Some(v)) = (&cert.x, &cert.v) else {
                return Ok(None);
            };
            let pinv = crate::linalg::pseudo_inverse(mat, 1e-14)?;
            let w = &pinv * x;
            let nw = a.domain_norm.eval(&w)?;
            if nw <= 1e-14 {
                return Ok(None);
            }
            let z = a.domain_norm.subgradient(&w)?;
            let d = (v - x) / nw;
            let mag = rank_one_norm(&d, &z, &a.norms.tri, &a.domain_norm)?;
            if mag <= 1e-14 {
                return Ok(None);
            }
            Ok(Some((&d * z.transpose() / mag, mag)))
        }
    }
}

/// Smallest `t ∈ (0, hi]` found by bisection where `A + tD` loses the status, if any.
fn flip_magnitude(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    k: &Cone,
    side: Side,
    start: f64,
    steps: usize,
) -> Result<Option<f64>> {
    let mut hi = start;
    let mut found = false;
    for _ in 0..12 {
        if !keeps_status(&(a + d * hi), k, side)? {
            found = true;
            break;
        }
        hi *= 2.0;
    }
    if !found {
        return Ok(None);
    }
    let mut lo = 0.0;
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if keeps_status(&(a + d * mid), k, side)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(hi))
}

/// Upper bound on `Rdist(A, Σ)` by bisecting the status flip along sampled perturbations.
pub fn rdist_estimate(
    a: &LinearMap,
    k: &Cone,
    budget: &OracleBudget,
    seed: u64,
) -> Result<RdistEstimate> {
    let mb = Budget::with_seed(seed);
    let report = renegar_sandwich_with(a, k, &mb)?;
    let side = report.side;
    if !keeps_status(&a.matrix, k, side)? {
        return Err(Error::NumericalFailure(
            "unperturbed map fails its own status test".into(),
        ));
    }
    let (n, m) = a.matrix.shape();
    let mut rng = rng_for(seed, SALT_PERTURB);
    let mut dirs: Vec<DMatrix<f64>> = Vec::with_capacity(budget.directions + 1);
    let constructed_dir = constructed_direction(a, side, &report.grassmann)?;
    if let Some((d, _)) = &constructed_dir {
        dirs.push(d.clone());
    }
    let dense_ok = operator_norm(
        &DMatrix::from_element(n, m, 1.0),
        &a.domain_norm,
        &a.norms.tri,
    )
    .is_ok();
    for i in 0..budget.directions {
        if i % 2 == 1 && dense_ok {
            let g = DMatrix::from_fn(n, m, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            let s = operator_norm(&g, &a.domain_norm, &a.norms.tri)?;
            if s > 1e-14 {
                dirs.push(g / s);
            }
        } else {
            let x = unit_gaussian(&mut rng, n);
            let w = unit_gaussian(&mut rng, m);
            let s = rank_one_norm(&x, &w, &a.norms.tri, &a.domain_norm)?;
            if s > 1e-14 {
                dirs.push(&x * w.transpose() / s);
            }
        }
    }
    let start = report.upper.max(1e-12) * (1.0 + 1e-9);
    let flips: Vec<Option<f64>> = dirs
        .par_iter()
        .map(|d| flip_magnitude(&a.matrix, d, k, side, start, budget.bisection_steps))
        .collect::<Result<_>>()?;
    let constructed = if constructed_dir.is_some() {
        flips[0]
    } else {
        None
    };
    let flipped = flips.iter().flatten().count();
    let value = flips
        .iter()
        .flatten()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| {
            Error::NumericalFailure("no perturbation direction changed the status".into())
        })?;
    Ok(RdistEstimate {
        value,
        side,
        constructed,
        flipped,
        tried: dirs.len(),
    })
}

/// A problem instance: cone, subspace, norms and optionally a defining map.
#[derive(Debug, Clone)]
pub struct Instance {
    pub cone: Cone,
    pub subspace: Subspace,
    pub norms: NormPair,
    pub map: Option<LinearMap>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, name: &str, pass: bool, residual: f64, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            residual,
            detail,
        });
    }

    /// A failed computation is recorded as a failing check.
    fn record<T>(&mut self, name: &str, r: Result<T>, f: impl FnOnce(&mut Self, T)) {
        match r {
            Ok(v) => f(self, v),
            Err(
                Error::Unsupported(_)
                | Error::ApproximateOnly(_)
                | Error::NotSymmetric(_)
                | Error::UnsupportedNorm(_),
            ) => {}
            Err(e) => self.push(name, false, f64::NAN, e.to_string()),
        }
    }
}

const CHECK_TOL: f64 = 1e-6;

/// Runs every theorem check that applies to the instance's cone and norms.
pub fn verify_suite(inst: &Instance, seed: u64) -> SuiteReport {
    verify_suite_with(
        inst,
        seed,
        &OracleBudget {
            subspace_samples: 200,
            directions: 50,
            bisection_steps: 40,
        },
    )
}

pub fn verify_suite_with(inst: &Instance, seed: u64, ob: &OracleBudget) -> SuiteReport {
    let mut rep = SuiteReport::default();
    let (k, l, np) = (&inst.cone, &inst.subspace, &inst.norms);
    let mb = Budget::with_seed(seed);
    let nu = match nu_with(l, k, np, &mb) {
        Ok(c) => c,
        Err(e) => {
            rep.push("nu", false, f64::NAN, e.to_string());
            return rep;
        }
    };
    let feasible = nu.value > FEASIBLE_TOL;
    let nu_bar = if feasible {
        None
    } else {
        nu_bar_with(l, k, np, &mb).ok()
    };
    let infeasible = nu_bar.as_ref().is_some_and(|c| c.value > FEASIBLE_TOL);

    if feasible {
        rep.push(
            "nu_positive",
            true,
            nu.alignment_residual,
            format!("nu = {}", nu.value),
        );
        feasible_checks(&mut rep, inst, &nu, seed, &mb, ob);
    } else if infeasible {
        let nb = nu_bar.clone().expect("present");
        rep.push(
            "nu_bar_positive",
            true,
            nb.alignment_residual,
            format!("nu_bar = {}", nb.value),
        );
        rep.record(
            "nu_bar_dual_form",
            nu_with(&l.complement(), &k.dual(), &np.dual_roles(), &mb),
            |r, d| {
                if nb.path.is_exact() && d.path.is_exact() {
                    let res = (d.value - nb.value).abs();
                    r.push(
                        "nu_bar_dual_form",
                        res <= CHECK_TOL,
                        res,
                        format!("nu(L^perp; K*) = {}", d.value),
                    );
                }
            },
        );
        rep.record(
            "odist_to_illposed",
            dist_to_illposed_estimate(l, k, np, ob, seed),
            |r, b| {
                let res = (b.lo - b.hi).max(0.0);
                r.push(
                    "odist_to_illposed",
                    b.consistent,
                    res,
                    format!("[{}, {}]", b.lo, b.hi),
                );
            },
        );
    } else {
        let res = nu.value.max(nu_bar.as_ref().map_or(0.0, |c| c.value));
        rep.push(
            "ill_posed",
            true,
            res,
            "nu and nu_bar vanish; feasible-side checks skipped".into(),
        );
    }

    if let Some(a) = &inst.map {
        if feasible || infeasible {
            rep.record(
                "renegar_sandwich",
                renegar_sandwich_with(a, k, &mb),
                |r, s| match rdist_estimate(a, k, ob, seed) {
                    Ok(est) => {
                        let res = (s.lower - est.value).max(est.value - s.upper).max(0.0);
                        let pass = s.contains(est.value, 1e-6);
                        r.push(
                            "renegar_sandwich",
                            pass,
                            res,
                            format!("{} in [{}, {}]", est.value, s.lower, s.upper),
                        );
                    }
                    Err(e) => r.push("renegar_sandwich", false, f64::NAN, e.to_string()),
                },
            );
        }
    }

    if matches!(k, Cone::Orthant(_)) {
        partition_checks(&mut rep, inst, &mb);
    }
    rep
}

fn feasible_checks(
    rep: &mut SuiteReport,
    inst: &Instance,
    nu: &MeasureCertificate,
    seed: u64,
    mb: &Budget,
    ob: &OracleBudget,
) {
    let (k, l, np) = (&inst.cone, &inst.subspace, &inst.norms);
    rep.record("sigma_over_nu", sigma_with(l, k, np, mb), |r, s| {
        let ratio = s.value / nu.value;
        let lower_res = (1.0 - ratio).max(0.0);
        match alignment_constant(k, np) {
            Ok(c) => {
                let res = lower_res.max(ratio - 1.0 / c);
                r.push(
                    "sigma_over_nu",
                    res <= CHECK_TOL,
                    res.max(0.0),
                    format!("sigma = {}, sigma/nu = {ratio}, bound {}", s.value, 1.0 / c),
                );
            }
            Err(_) => r.push(
                "sigma_over_nu",
                lower_res <= CHECK_TOL,
                lower_res,
                format!("sigma = {}, sigma/nu = {ratio}", s.value),
            ),
        }
        if np.tri.is_induced_e_for(k) {
            let res = (s.value - nu.value).abs();
            r.push(
                "sigma_equals_nu_induced",
                res == 0.0,
                res,
                "induced residual norm".into(),
            );
        }
    });
    rep.record("theta", theta_with(k, mb), |r, t| {
        if np.is_euclidean() && t.path.is_exact() {
            r.push("theta", true, 0.0, format!("Theta = {}", t.value));
        }
    });
    rep.record(
        "dist_to_illposed",
        dist_to_illposed_estimate(l, k, np, ob, seed),
        |r, b| {
            let res = (b.lo - b.hi).max(0.0);
            r.push(
                "dist_to_illposed",
                b.consistent,
                res,
                format!("[{}, {}]", b.lo, b.hi),
            );
        },
    );
    if k.is_orthant_like() && np.primal == np.tri {
        rep.record(
            "symmetry_bounds",
            sym_with(l, k, &np.primal, mb),
            |r, sy| {
                let s = sy.value;
                if s >= 1.0 - 1e-12 {
                    return;
                }
                if let Ok(sig) = sigma_with(l, k, np, mb) {
                    let lo = s / (1.0 + s);
                    let hi = s / (1.0 - s);
                    let res = (lo - sig.value).max(sig.value - hi).max(0.0);
                    r.push(
                        "symmetry_bounds",
                        res <= 1e-7,
                        res,
                        format!("Sym = {s}, sigma = {} in [{lo}, {hi}]", sig.value),
                    );
                    let equality = np.primal.is_induced_e_dual_for(k)
                        || (np.primal.kind == NormKind::L1 && matches!(k, Cone::Orthant(_)));
                    if equality {
                        let res = (sig.value - lo).abs();
                        r.push(
                            "symmetry_equality",
                            res <= 1e-7,
                            res,
                            format!("sigma = Sym/(1+Sym) = {lo}"),
                        );
                    }
                }
            },
        );
    }
    if let Some(a) = &inst.map {
        if a.norms.is_euclidean() && a.domain_norm.kind == NormKind::L2 && k.is_symmetric() {
            rep.record("precondition", precondition_with(a, k, mb), |r, p| {
                let res = (p.bound - certified_lower(&p.nu)).max(0.0);
                r.push(
                    "precondition",
                    p.holds,
                    res,
                    format!("nu(PL) = {} >= {}", p.nu.value, p.bound),
                );
                r.push(
                    "balanced",
                    p.balance_residual <= 1e-10,
                    p.balance_residual,
                    "(PAR)^T(PAR) = I".into(),
                );
            });
        }
    }
}

fn partition_checks(rep: &mut SuiteReport, inst: &Instance, mb: &Budget) {
    let l = &inst.subspace;
    rep.record("goldman_tucker", goldman_tucker(l), |r, gt| {
        let inner = gt.x_cert.dot(&gt.y_cert).abs();
        let x_in = l.project(&gt.x_cert) - &gt.x_cert;
        let y_in = l.complement().project(&gt.y_cert) - &gt.y_cert;
        let res = inner.max(x_in.amax()).max(y_in.amax());
        let supports = gt.b.iter().all(|&i| gt.x_cert[i] > SUPPORT_TOL)
            && gt.n.iter().all(|&i| gt.y_cert[i] > SUPPORT_TOL);
        r.push(
            "goldman_tucker",
            supports && res <= CHECK_TOL,
            res,
            format!("B = {:?}, N = {:?}", gt.b, gt.n),
        );
        if let Some(a) = &inst.map {
            r.record(
                "block_decomposition",
                block_decompose_with(a, &gt, mb),
                |r, bd| {
                    r.push(
                        "block_decomposition",
                        bd.reconstruction_residual <= 1e-9,
                        bd.reconstruction_residual,
                        "A_B U_N = 0".into(),
                    );
                },
            );
        }
    });
    let np = &inst.norms;
    rep.record(
        "partition_blocks",
        partition_measures_with(l, np, mb),
        |r, pm| {
            let vals: Vec<f64> = pm.b.iter().chain(pm.n.iter()).map(|b| b.nu.value).collect();
            let pass = vals.iter().all(|&v| v > FEASIBLE_TOL);
            let res = vals.iter().copied().fold(f64::INFINITY, f64::min);
            r.push(
                "partition_blocks",
                pass,
                res,
                format!("block nu values {vals:?}"),
            );
        },
    );
}
