//! The sigma measure `σ(L) = min_{v∈K, |||v|||=1} max_{x∈L, ‖x‖≤1} λ_v(x)` and the
//! symmetry measure `Sym(L)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::lp::{solve_lp, LpProblem, LpStatus, RowKind, Sense};
use crate::lsq::ldp;
use crate::norms::{NormKind, NormSpec};

use super::kernels::*;
use super::{check_instance, inner_budget, nu_with, Budget, MeasureCertificate, NormPair, Path};

const SALT_SIGMA: u64 = 3;
const SALT_SYM: u64 = 4;

pub fn sigma(l: &Subspace, k: &Cone, np: &NormPair) -> Result<MeasureCertificate> {
    sigma_with(l, k, np, &Budget::default())
}

pub fn sigma_with(
    l: &Subspace,
    k: &Cone,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    check_instance(l, k, np)?;
    if np.tri.is_induced_e_for(k) {
        // σ = ν when |||·||| is the induced norm
        return nu_with(l, k, np, budget);
    }
    let (margin, _, margin_path) = max_lambda_e(l, k, &NormSpec::l2())?;
    if margin <= FEASIBLE_TOL {
        let mut c = MeasureCertificate::new(0.0, margin_path);
        c.infeasible_side = true;
        return Ok(c);
    }
    let primal_ok = np.primal.is_polyhedral() || np.primal.kind == NormKind::L2;
    if k.is_orthant_like() && np.tri.is_polyhedral() && primal_ok {
        return sigma_two_layer(l, np);
    }
    if np.is_euclidean() {
        if let Some(g) = k.generators() {
            return sigma_euclidean_simplicial(l, k, &g, np, budget);
        }
        if k.is_symmetric() && k.is_self_dual() {
            // Euclidean norms over a self-dual cone give σ = ν
            return nu_with(l, k, np, budget);
        }
    }
    if np.tri.is_induced_e_dual_for(k) && k.is_symmetric() {
        return sigma_idempotent(l, k, np, budget);
    }
    Err(Error::Unsupported(format!(
        "sigma with norms ({}, {}) on this cone",
        np.primal.name(),
        np.tri.name()
    )))
}

/// Inner value `ψ(v) = min{‖x‖ : x ∈ L, x ≥ v} = 1 / max_{x∈L,‖x‖≤1} λ_v(x)` with its minimizer,
/// and the dual value `min{‖u − y‖* : u ≥ 0, ⟨u, v⟩ = 1, y ∈ L⊥}` with witnesses.
struct Layer {
    psi: f64,
    x: DVector<f64>,
    dual: f64,
    u: DVector<f64>,
    y: DVector<f64>,
}

fn orthant_layer(l: &Subspace, lperp: &Subspace, np: &NormPair, v: &DVector<f64>) -> Result<Layer> {
    let b = l.basis();
    let (n, m) = b.shape();
    match np.primal.polyhedral_kind()? {
        None => {
            let s = ldp(b, v)?
                .ok_or_else(|| Error::NumericalFailure("sigma layer infeasible".into()))?;
            let psi = s.w.norm();
            let u = &s.multipliers / (psi * psi);
            let y = lperp.project(&u);
            let dual = (&u - &y).norm();
            Ok(Layer {
                psi,
                x: b * s.w,
                dual,
                u,
                y,
            })
        }
        Some(pk) => {
            let mut lp = LpProblem::new(Sense::Minimize, vec![]);
            let w0 = add_free_vars(&mut lp, m);
            let exprs = basis_exprs(b, w0);
            for (i, e) in exprs.iter().enumerate() {
                lp.add_sparse_row(e, RowKind::Ge, v[i]);
            }
            let form = add_norm_epigraph(&mut lp, &exprs, &vec![0.0; n], pk);
            set_objective(&mut lp, &form);
            let sol = solve_optimal(&lp)?
                .ok_or_else(|| Error::NumericalFailure("sigma layer infeasible".into()))?;
            let x = b * sol.x.rows(w0, m);
            let psi = np.primal.eval(&x)?;

            let c = lperp.basis();
            let q = c.ncols();
            let dk = np.primal.dual().polyhedral_kind()?.expect("polyhedral");
            let mut dlp = LpProblem::new(Sense::Minimize, vec![]);
            let u0 = dlp.num_vars();
            for _ in 0..n {
                dlp.add_var(0.0, 0.0, f64::INFINITY);
            }
            let vrow: Sparse = (0..n).map(|i| (u0 + i, v[i])).collect();
            dlp.add_sparse_row(&vrow, RowKind::Eq, 1.0);
            let z0 = add_free_vars(&mut dlp, q);
            let dexprs: Vec<Sparse> = (0..n)
                .map(|i| {
                    let mut e = vec![(u0 + i, 1.0)];
                    e.extend((0..q).map(|j| (z0 + j, -c[(i, j)])));
                    e
                })
                .collect();
            let dform = add_norm_epigraph(&mut dlp, &dexprs, &vec![0.0; n], dk);
            set_objective(&mut dlp, &dform);
            let dsol = solve_optimal(&dlp)?
                .ok_or_else(|| Error::NumericalFailure("sigma dual layer infeasible".into()))?;
            let u = dsol.x.rows(u0, n).into_owned();
            let y = c * dsol.x.rows(z0, q);
            let dual = np.primal.dual_eval(&(&u - &y))?;
            Ok(Layer { psi, x, dual, u, y })
        }
    }
}

/// Orthant with polyhedral `|||·|||`: the outer minimum sits at a vertex of `{v ≥ 0, |||v||| ≤ 1}`.
fn sigma_two_layer(l: &Subspace, np: &NormPair) -> Result<MeasureCertificate> {
    let n = l.ambient_dim();
    let lperp = l.complement();
    let tk = np.tri.polyhedral_kind()?.expect("polyhedral");
    let verts = orthant_ball_vertices(n, tk)?;
    let layers: Vec<Layer> = verts
        .par_iter()
        .map(|v| orthant_layer(l, &lperp, np, v))
        .collect::<Result<_>>()?;
    let mut arg = 0;
    for (i, layer) in layers.iter().enumerate() {
        if layer.psi > layers[arg].psi + 1e-12 {
            arg = i;
        }
    }
    let top = &layers[arg];
    let value = 1.0 / top.psi;
    let dual_value = layers.iter().map(|s| s.dual).fold(f64::INFINITY, f64::min);
    let path = if np.primal.is_polyhedral() {
        Path::LpExact
    } else {
        Path::ActiveSet
    };
    let mut cert = MeasureCertificate::new(value, path);
    cert.alignment_residual = (value - dual_value).abs();
    cert.x = Some(&top.x / top.psi);
    cert.v = Some(verts[arg].clone());
    cert.u = Some(top.u.clone());
    cert.y = Some(top.y.clone());
    Ok(cert)
}

/// Euclidean norms on a simplicial cone `K = G·Rⁿ₊`: each inner problem is a least-distance
/// program in `G⁻¹`-coordinates; the outer minimum over the sphere is searched.
fn sigma_euclidean_simplicial(
    l: &Subspace,
    k: &Cone,
    g: &DMatrix<f64>,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    let nu = nu_with(l, k, np, budget)?;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("singular generator matrix".into()))?;
    let b = l.basis();
    let gb = &ginv * b;
    let solve = |v: &DVector<f64>| ldp(&gb, &(&ginv * v)).ok().flatten();
    let f = |v: &DVector<f64>| solve(v).map_or(f64::INFINITY, |s| 1.0 / s.w.norm());

    let mut cands: Vec<DVector<f64>> = Vec::new();
    if let Some(u) = &nu.u {
        if k.contains(u, 1e-12) && u.norm() > 0.0 {
            cands.push(u.normalize());
        }
    }
    cands.extend(g.column_iter().map(|c| c.normalize()));
    let mut rng = rng_for(budget.seed, SALT_SIGMA);
    for _ in 0..budget.samples {
        cands.push(random_unit_in_cone(k, &NormSpec::l2(), &mut rng)?);
    }
    let (i, v0) = par_argmin(&cands, f)
        .ok_or_else(|| Error::NumericalFailure("no sigma candidates".into()))?;
    let project = |p: &DVector<f64>| {
        let q = k.project(p);
        let nq = q.norm();
        (nq > 1e-12).then(|| q / nq)
    };
    let (v, value) = refine_min(
        cands[i].clone(),
        v0,
        budget.refine_steps,
        &mut rng,
        f,
        project,
    );
    let s = solve(&v).ok_or_else(|| Error::NumericalFailure("sigma witness lost".into()))?;
    let psi = s.w.norm();
    let u = ginv.transpose() * &s.multipliers / (psi * psi);
    let y = l.complement().project(&u);
    let dual = (&u - &y).norm();

    let mut cert = if value - nu.value <= FEASIBLE_TOL {
        MeasureCertificate::new(value, nu.path)
    } else {
        let mut c = MeasureCertificate::sampled_min(value);
        c.bracket = Some((nu.value.max(value / 1.05), value));
        c
    };
    cert.alignment_residual = (value - dual).abs();
    cert.x = Some(b * &s.w / psi);
    cert.v = Some(v);
    cert.u = Some(u);
    cert.y = Some(y);
    Ok(cert)
}

/// `|||·||| = ‖·‖_e*`: `σ = min_{c primitive idempotent} max_{x∈L,‖x‖≤1} ⟨c, x⟩`.
fn sigma_idempotent(
    l: &Subspace,
    k: &Cone,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    let lperp = l.complement();
    let h =
        |c: &DVector<f64>| support_value(l, &lperp, &np.primal, c).map_or(f64::INFINITY, |r| r.0);
    if let Some(pis) = k.primitive_idempotents() {
        let (i, value) =
            par_argmin(&pis, h).ok_or_else(|| Error::NumericalFailure("no idempotents".into()))?;
        let (_, x, _) = support_value(l, &lperp, &np.primal, &pis[i])?;
        return Ok(MeasureCertificate::new(value, Path::Enumeration)
            .with_v(pis[i].clone())
            .with_x(x));
    }
    let mut rng = rng_for(budget.seed, SALT_SIGMA);
    let count = inner_budget(budget, supports_min_norm(&np.primal.dual()));
    let mut cands = Vec::with_capacity(count);
    for _ in 0..count {
        cands.push(k.sample_primitive_idempotent(&mut rng)?);
    }
    let (i, v0) =
        par_argmin(&cands, h).ok_or_else(|| Error::NumericalFailure("no finite samples".into()))?;
    let project = |p: &DVector<f64>| k.spectral(p).ok().map(|sd| sd.frame[0].clone());
    let (c, value) = refine_min(
        cands[i].clone(),
        v0,
        budget.refine_steps,
        &mut rng,
        h,
        project,
    );
    let (_, x, _) = support_value(l, &lperp, &np.primal, &c)?;
    Ok(MeasureCertificate::sampled_min(value).with_v(c).with_x(x))
}

pub fn sym(l: &Subspace, k: &Cone, norm: &NormSpec) -> Result<MeasureCertificate> {
    sym_with(l, k, norm, &Budget::default())
}

/// `Sym(L) = min_{v∈K,‖v‖=1} max{t : x + t v ∈ L, x ∈ K, ‖x‖ ≤ 1}`.
pub fn sym_with(
    l: &Subspace,
    k: &Cone,
    norm: &NormSpec,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    check_instance(l, k, &NormPair::new(norm.clone(), norm.clone()))?;
    let (margin, _, margin_path) = max_lambda_e(l, k, &NormSpec::l2())?;
    if margin <= FEASIBLE_TOL {
        let mut c = MeasureCertificate::new(0.0, margin_path);
        c.infeasible_side = true;
        return Ok(c);
    }
    if !k.is_orthant_like() {
        return Err(Error::Unsupported(
            "symmetry measure on a non-polyhedral cone".into(),
        ));
    }
    let constraint = l.complement().basis().transpose();
    match norm.polyhedral_kind()? {
        Some(kind) => sym_polyhedral(&constraint, kind),
        None if norm.kind == NormKind::L2 => sym_euclidean(l, k, budget),
        None => Err(Error::Unsupported(format!(
            "symmetry measure with norm {}",
            norm.name()
        ))),
    }
}

/// Same measure with `L = ker A`; the value depends only on the kernel.
pub fn sym_via_kernel_map(
    a: &DMatrix<f64>,
    k: &Cone,
    norm: &NormSpec,
) -> Result<MeasureCertificate> {
    k.validate()?;
    if a.ncols() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: a.ncols(),
        });
    }
    let kind = norm
        .polyhedral_kind()?
        .filter(|_| k.is_orthant_like())
        .ok_or_else(|| {
            Error::Unsupported("kernel-map symmetry needs an orthant and a polyhedral norm".into())
        })?;
    sym_polyhedral(a, kind)
}

/// `τ(v) = max{t : M(x + t v) = 0, x ≥ 0, ‖x‖ ≤ 1}`, minimized over the nonzero vertices of the ball.
fn sym_polyhedral(m: &DMatrix<f64>, kind: NormKind) -> Result<MeasureCertificate> {
    let n = m.ncols();
    let verts = orthant_ball_vertices(n, kind)?;
    let taus: Vec<Option<(f64, DVector<f64>)>> = verts
        .par_iter()
        .map(|v| {
            let mut lp = LpProblem::new(Sense::Maximize, vec![]);
            let x0 = lp.num_vars();
            for _ in 0..n {
                lp.add_var(0.0, 0.0, f64::INFINITY);
            }
            let t = lp.add_var(1.0, 0.0, f64::INFINITY);
            for r in 0..m.nrows() {
                let mut row: Sparse = (0..n).map(|j| (x0 + j, m[(r, j)])).collect();
                row.push((t, (m.row(r) * v)[0]));
                lp.add_sparse_row(&row, RowKind::Eq, 0.0);
            }
            let exprs: Vec<Sparse> = (0..n).map(|j| vec![(x0 + j, 1.0)]).collect();
            let form = add_norm_epigraph(&mut lp, &exprs, &vec![0.0; n], kind);
            lp.add_sparse_row(&form, RowKind::Le, 1.0);
            let sol = solve_lp(&lp)?;
            Ok(match sol.status {
                LpStatus::Optimal => Some((sol.objective, sol.x.rows(x0, n).into_owned())),
                LpStatus::Unbounded => None,
                LpStatus::Infeasible => {
                    return Err(Error::NumericalFailure("symmetry LP infeasible".into()))
                }
            })
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, f64, DVector<f64>)> = None;
    for (i, tau) in taus.into_iter().enumerate() {
        if let Some((t, x)) = tau {
            if best.as_ref().map_or(true, |b| t < b.1 - 1e-12) {
                best = Some((i, t, x));
            }
        }
    }
    let (i, value, x) = best
        .ok_or_else(|| Error::NumericalFailure("symmetry unbounded in every direction".into()))?;
    Ok(MeasureCertificate::new(value, Path::LpExact)
        .with_v(verts[i].clone())
        .with_x(x))
}

/// `τ(v) = 1/√(‖w‖² + ‖Π_{L⊥} v‖²)` with `w` the least-distance solution of `B w ≥ Π_{L⊥} v`.
fn sym_euclidean(l: &Subspace, k: &Cone, budget: &Budget) -> Result<MeasureCertificate> {
    let b = l.basis();
    let lperp = l.complement();
    let n = l.ambient_dim();
    let tau = |v: &DVector<f64>| -> f64 {
        let r = lperp.project(v);
        match ldp(b, &r) {
            Ok(Some(s)) => 1.0 / (s.w.norm_squared() + r.norm_squared()).sqrt(),
            _ => f64::INFINITY,
        }
    };
    let mut cands: Vec<DVector<f64>> = (0..n).map(|i| unit(n, i, 1.0)).collect();
    let mut rng = rng_for(budget.seed, SALT_SYM);
    for _ in 0..budget.samples {
        cands.push(random_unit_in_cone(k, &NormSpec::l2(), &mut rng)?);
    }
    let (i, v0) = par_argmin(&cands, tau)
        .ok_or_else(|| Error::NumericalFailure("no symmetry candidates".into()))?;
    let project = |p: &DVector<f64>| {
        let q = k.project(p);
        let nq = q.norm();
        (nq > 1e-12).then(|| q / nq)
    };
    let (v, value) = refine_min(
        cands[i].clone(),
        v0,
        budget.refine_steps,
        &mut rng,
        tau,
        project,
    );
    Ok(MeasureCertificate::sampled_min(value).with_v(v))
}
