//! Grassmann distances `dist` and `odist` between subspaces under a norm pair.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{min_norm_to_subspace, Subspace};
use crate::lp::{LpProblem, RowKind, Sense};
use crate::norms::{section_vertices, NormKind};

use super::kernels::*;
use super::{Budget, MeasureCertificate, NormPair, Path};

const SALT_DIST: u64 = 5;
const SALT_ODIST: u64 = 6;
const INNER_DIRECTIONS: usize = 200;

fn check_pair(l1: &Subspace, l2: &Subspace, np: &NormPair) -> Result<()> {
    if l1.ambient_dim() != l2.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: l1.ambient_dim(),
            found: l2.ambient_dim(),
        });
    }
    np.validate(l1.ambient_dim())
}

/// Extreme points of `{x ∈ L : ‖x‖ ≤ 1}` when finitely many suffice.
fn unit_section(l: &Subspace, np: &NormPair) -> Result<Option<Vec<DVector<f64>>>> {
    if l.dim() == 1 {
        let b = l.basis().column(0).into_owned();
        let x = &b / np.primal.eval(&b)?;
        return Ok(Some(vec![x.clone(), -x]));
    }
    if np.primal.is_polyhedral() {
        return Ok(Some(section_vertices(&np.primal, l.basis())?));
    }
    Ok(None)
}

pub fn dist(l1: &Subspace, l2: &Subspace, np: &NormPair) -> Result<MeasureCertificate> {
    dist_with(l1, l2, np, &Budget::default())
}

/// `dist(L1, L2) = max_{x∈L1, ‖x‖≤1} min_{v∈L2} |||x − v|||`.
pub fn dist_with(
    l1: &Subspace,
    l2: &Subspace,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    check_pair(l1, l2, np)?;
    let mut cert = if np.is_euclidean() {
        dist_euclidean(l1, l2)?
    } else if supports_min_norm(&np.tri) && unit_section(l1, np)?.is_some() {
        let verts = unit_section(l1, np)?.expect("checked");
        dist_over_points(l2, np, &verts, Path::Enumeration)?
    } else if np.tri.is_polyhedral() && supports_min_norm(&np.primal.dual()) {
        dist_dual_form(l1, l2, np)?
    } else if supports_min_norm(&np.tri) {
        dist_sampled(l1, l2, np, budget)?
    } else {
        return Err(Error::Unsupported(format!(
            "dist with |||.||| = {}",
            np.tri.name()
        )));
    };
    cert.alignment_residual = dist_residual(np, &cert)?;
    Ok(cert)
}

/// Witnesses from the top right singular vector of `(I − Π₂)B₁`.
fn dist_euclidean(l1: &Subspace, l2: &Subspace) -> Result<MeasureCertificate> {
    let b1 = l1.basis();
    let m = b1 - l2.projector() * b1;
    let svd = crate::linalg::checked_svd(&m)?;
    let vt = svd.v_t.expect("requested");
    let i = svd.singular_values.imax();
    let value = svd.singular_values[i].min(1.0);
    let x = b1 * vt.row(i).transpose();
    let v = l2.project(&x);
    let r = &x - &v;
    let rn = r.norm();
    let u = if rn > 1e-14 {
        r / rn
    } else {
        l2.complement().basis().column(0).into_owned()
    };
    Ok(MeasureCertificate::new(value, Path::ClosedForm)
        .with_x(x)
        .with_v(v)
        .with_u(u))
}

/// Maximizes the convex `x ↦ min_{v∈L2} |||x − v|||` over the given points.
fn dist_over_points(
    l2: &Subspace,
    np: &NormPair,
    points: &[DVector<f64>],
    path: Path,
) -> Result<MeasureCertificate> {
    let mut best: Option<(f64, usize)> = None;
    let certs = points
        .iter()
        .map(|x| min_norm_to_subspace(l2, x, &np.tri))
        .collect::<Result<Vec<_>>>()?;
    for (i, c) in certs.iter().enumerate() {
        if best.map_or(true, |(b, _)| c.value > b + 1e-12) {
            best = Some((c.value, i));
        }
    }
    let (value, i) = best.ok_or_else(|| Error::NumericalFailure("empty vertex set".into()))?;
    let c = &certs[i];
    Ok(MeasureCertificate::new(value, path)
        .with_x(points[i].clone())
        .with_v(c.minimizer.clone())
        .with_u(c.dual.clone()))
}

/// `dist = max_{u∈L2⊥, |||u|||*≤1} min_{y∈L1⊥} ‖u − y‖*`, a convex maximum over a polytope.
fn dist_dual_form(l1: &Subspace, l2: &Subspace, np: &NormPair) -> Result<MeasureCertificate> {
    let l1perp = l1.complement();
    let l2perp = l2.complement();
    let verts = section_vertices(&np.tri.dual(), l2perp.basis())?;
    let primal_star = np.primal.dual();
    let certs = verts
        .iter()
        .map(|u| min_norm_to_subspace(&l1perp, u, &primal_star))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, c) in certs.iter().enumerate() {
        if c.value > certs[best].value + 1e-12 {
            best = i;
        }
    }
    let value = certs[best].value;
    let x = certs[best].dual.clone();
    let v = min_norm_to_subspace(l2, &x, &np.tri)?.minimizer;
    Ok(MeasureCertificate::new(value, Path::Enumeration)
        .with_u(verts[best].clone())
        .with_x(x)
        .with_v(v))
}

fn dist_sampled(
    l1: &Subspace,
    l2: &Subspace,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    let mut rng = rng_for(budget.seed, SALT_DIST);
    let cands = subspace_directions(l1, &np.primal, budget.samples, &mut rng)?;
    let f =
        |x: &DVector<f64>| min_norm_to_subspace(l2, x, &np.tri).map_or(f64::INFINITY, |c| -c.value);
    let (i, v0) =
        par_argmin(&cands, f).ok_or_else(|| Error::NumericalFailure("no finite samples".into()))?;
    let project = |p: &DVector<f64>| {
        let q = l1.project(p);
        let nq = np.primal.eval(&q).ok()?;
        (nq > 1e-12).then(|| q / nq)
    };
    let (x, _) = refine_min(
        cands[i].clone(),
        v0,
        budget.refine_steps,
        &mut rng,
        f,
        project,
    );
    let mut cert = dist_over_points(l2, np, &[x], Path::Sampled)?;
    cert.bracket = MeasureCertificate::sampled_max(cert.value).bracket;
    Ok(cert)
}

/// Largest violation of `‖x̄‖ = 1`, `|||ū|||* = 1`, `|||x̄ − v̄||| = ⟨ū, x̄ − v̄⟩ = ⟨ū, x̄⟩ = dist`.
fn dist_residual(np: &NormPair, c: &MeasureCertificate) -> Result<f64> {
    let (Some(x), Some(v), Some(u)) = (&c.x, &c.v, &c.u) else {
        return Ok(0.0);
    };
    let d = x - v;
    Ok([
        (np.primal.eval(x)? - 1.0).abs(),
        (np.tri.dual_eval(u)? - 1.0).abs(),
        (np.tri.eval(&d)? - c.value).abs(),
        (u.dot(&d) - c.value).abs(),
        (u.dot(x) - c.value).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

/// `max_{x∈L1, x≠0} |||x||| / ‖x‖`, an upper bound for `dist(L1, ·)`.
pub fn dist_upper_bound(l1: &Subspace, np: &NormPair) -> Result<f64> {
    np.validate(l1.ambient_dim())?;
    if np.is_euclidean() {
        return Ok(1.0);
    }
    if let Some(verts) = unit_section(l1, np)? {
        return verts
            .iter()
            .try_fold(0.0f64, |a, x| Ok(a.max(np.tri.eval(x)?)));
    }
    if let Some(tk) = np.tri.polyhedral_kind()? {
        if supports_min_norm(&np.primal.dual()) {
            let n = l1.ambient_dim();
            let lperp = l1.complement();
            // |||x||| = max over vertices a of the dual ball of ⟨a, x⟩
            return dual_ball_vertices(n, tk)?
                .iter()
                .try_fold(0.0f64, |acc, a| {
                    Ok(acc.max(support_value(l1, &lperp, &np.primal, a)?.0))
                });
        }
    }
    Err(Error::Unsupported(format!(
        "dist upper bound for ({}, {})",
        np.primal.name(),
        np.tri.name()
    )))
}

pub fn odist(l1: &Subspace, l2: &Subspace, np: &NormPair) -> Result<MeasureCertificate> {
    odist_with(l1, l2, np, &Budget::default())
}

/// `odist(L1, L2) = max_{x∈L1∖0} inf_{v∈L2∖0} |||x − v||| / ‖v‖`.
pub fn odist_with(
    l1: &Subspace,
    l2: &Subspace,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    check_pair(l1, l2, np)?;
    if np.is_euclidean() {
        let mut cert = dist_euclidean(l1, l2)?;
        let cos = (1.0 - cert.value * cert.value).max(0.0).sqrt();
        cert.attained = cos > 1e-12;
        if cert.attained {
            let x = cert.x.as_ref().expect("set");
            cert.v = Some(l2.project(x) / (cos * cos));
        } else {
            cert.v = None;
        }
        return Ok(cert);
    }
    if np.is_polyhedral() {
        return odist_polyhedral(l1, l2, np, budget);
    }
    odist_sampled(l1, l2, np, budget)
}

struct RatioWitness {
    value: f64,
    tau: f64,
    v: DVector<f64>,
}

/// `inf_{v∈L2∖0} |||x − v||| / ‖v‖` via `min |||τx − B₂w|||` with `τ ≥ 0`, `⟨a, B₂w⟩ ≥ 1`, one LP per
/// vertex `a` of the dual primal ball.
fn ratio_inf(
    l2: &Subspace,
    np: &NormPair,
    x: &DVector<f64>,
    duals: &[DVector<f64>],
) -> Result<RatioWitness> {
    let b = l2.basis();
    let (n, m) = b.shape();
    let tk = np.tri.polyhedral_kind()?.expect("polyhedral");
    let mut best: Option<RatioWitness> = None;
    for a in duals {
        let bta = b.transpose() * a;
        if bta.amax() <= 1e-12 {
            continue;
        }
        let mut lp = LpProblem::new(Sense::Minimize, vec![]);
        let tau = lp.add_var(0.0, 0.0, f64::INFINITY);
        let w0 = add_free_vars(&mut lp, m);
        let exprs: Vec<Sparse> = (0..n)
            .map(|i| {
                let mut e: Sparse = vec![(tau, x[i])];
                e.extend((0..m).map(|j| (w0 + j, -b[(i, j)])));
                e
            })
            .collect();
        let form = add_norm_epigraph(&mut lp, &exprs, &vec![0.0; n], tk);
        set_objective(&mut lp, &form);
        let row: Sparse = (0..m).map(|j| (w0 + j, bta[j])).collect();
        lp.add_sparse_row(&row, RowKind::Ge, 1.0);
        let Some(sol) = solve_optimal(&lp)? else {
            continue;
        };
        if best
            .as_ref()
            .map_or(true, |bst| sol.objective < bst.value - 1e-12)
        {
            best = Some(RatioWitness {
                value: sol.objective,
                tau: sol.x[tau],
                v: b * sol.x.rows(w0, m),
            });
        }
    }
    best.ok_or_else(|| Error::NumericalFailure("all ratio LPs infeasible".into()))
}

fn odist_polyhedral(
    l1: &Subspace,
    l2: &Subspace,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    let n = l1.ambient_dim();
    let pk = np.primal.polyhedral_kind()?.expect("polyhedral");
    let duals = dual_ball_vertices(n, pk)?;
    let g = |x: &DVector<f64>| ratio_inf(l2, np, x, &duals);
    let (x, path) = if l1.dim() == 1 {
        // the inner value is even in x, so one direction decides
        let b = l1.basis().column(0).into_owned();
        (&b / np.primal.eval(&b)?, Path::LpExact)
    } else {
        let mut rng = rng_for(budget.seed, SALT_ODIST);
        let mut cands = unit_section(l1, np)?.unwrap_or_default();
        cands.extend(subspace_directions(
            l1,
            &np.primal,
            (budget.samples / 50).max(20),
            &mut rng,
        )?);
        let f = |x: &DVector<f64>| g(x).map_or(f64::INFINITY, |r| -r.value);
        let (i, v0) = par_argmin(&cands, f)
            .ok_or_else(|| Error::NumericalFailure("no finite samples".into()))?;
        let project = |p: &DVector<f64>| {
            let q = l1.project(p);
            let nq = np.primal.eval(&q).ok()?;
            (nq > 1e-12).then(|| q / nq)
        };
        let (x, _) = refine_min(
            cands[i].clone(),
            v0,
            budget.refine_steps,
            &mut rng,
            f,
            project,
        );
        (x, Path::Sampled)
    };
    let r = g(&x)?;
    let mut cert = if path == Path::Sampled {
        MeasureCertificate::sampled_max(r.value)
    } else {
        MeasureCertificate::new(r.value, path)
    };
    cert.attained = r.tau > 1e-12;
    if cert.attained {
        cert.v = Some(&r.v / r.tau);
    }
    cert.x = Some(x);
    Ok(cert)
}

/// Inner infimum by sampled directions `d ∈ L2` and a convex line search in `τ = 1/s`.
fn odist_sampled(
    l1: &Subspace,
    l2: &Subspace,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    let mut rng = rng_for(budget.seed, SALT_ODIST);
    let dirs = subspace_directions(l2, &np.primal, INNER_DIRECTIONS, &mut rng)?;
    let tri = &np.tri;
    let g = |x: &DVector<f64>| -> (f64, f64, usize) {
        let nx = tri.eval(x).unwrap_or(f64::INFINITY);
        let mut best = (f64::INFINITY, 0.0, 0);
        for (j, d) in dirs.iter().enumerate() {
            let nd = tri.eval(d).unwrap_or(f64::INFINITY);
            let h = |t: f64| tri.eval(&(x * t - d)).unwrap_or(f64::INFINITY);
            let (t, val) = golden_min(h, 0.0, if nx > 0.0 { 2.0 * nd / nx } else { 0.0 });
            if val < best.0 {
                best = (val, t, j);
            }
        }
        best
    };
    let count = (budget.samples / 50).max(20);
    let cands = subspace_directions(l1, &np.primal, count, &mut rng)?;
    let (i, _) = par_argmin(&cands, |x| -g(x).0)
        .ok_or_else(|| Error::NumericalFailure("no finite samples".into()))?;
    let x = cands[i].clone();
    let (value, tau, j) = g(&x);
    let mut cert = MeasureCertificate::sampled_max(value).with_x(x);
    cert.attained = tau > 1e-12;
    if cert.attained {
        cert.v = Some(&dirs[j] / tau);
    }
    Ok(cert)
}

fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..80 {
        if b - a <= 1e-12 * (1.0 + b.abs()) {
            break;
        }
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) <= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    let (ft, f0) = (f(t), f(lo));
    if f0 <= ft {
        (lo, f0)
    } else {
        (t, ft)
    }
}

/// `min_{v∈L2, v≠0} |||v||| / ‖v‖`, an upper bound for `odist(·, L2)`.
pub fn odist_upper_bound(l2: &Subspace, np: &NormPair) -> Result<f64> {
    np.validate(l2.ambient_dim())?;
    if np.is_euclidean() {
        return Ok(1.0);
    }
    let b = l2.basis();
    let (n, m) = b.shape();
    if m == 1 {
        let v = b.column(0).into_owned();
        return Ok(np.tri.eval(&v)? / np.primal.eval(&v)?);
    }
    let Some(pk) = np.primal.polyhedral_kind()? else {
        return Err(Error::Unsupported(format!(
            "odist upper bound with primal norm {}",
            np.primal.name()
        )));
    };
    let duals = dual_ball_vertices(n, pk)?;
    if np.tri.kind == NormKind::L2 {
        // min ‖v‖₂ subject to ⟨a, v⟩ ≥ 1 on L2 is 1/‖Π a‖
        let best = duals
            .iter()
            .map(|a| l2.project(a).norm())
            .fold(0.0, f64::max);
        return Ok(1.0 / best);
    }
    let tk = np.tri.polyhedral_kind()?.ok_or_else(|| {
        Error::Unsupported(format!(
            "odist upper bound with |||.||| = {}",
            np.tri.name()
        ))
    })?;
    let mut best = f64::INFINITY;
    for a in &duals {
        let bta = b.transpose() * a;
        if bta.amax() <= 1e-12 {
            continue;
        }
        let mut lp = LpProblem::new(Sense::Minimize, vec![]);
        let w0 = add_free_vars(&mut lp, m);
        let form = add_norm_epigraph(&mut lp, &basis_exprs(b, w0), &vec![0.0; n], tk);
        set_objective(&mut lp, &form);
        let row: Sparse = (0..m).map(|j| (w0 + j, bta[j])).collect();
        lp.add_sparse_row(&row, RowKind::Ge, 1.0);
        if let Some(sol) = solve_optimal(&lp)? {
            best = best.min(sol.objective);
        }
    }
    Ok(best)
}
