//! Shared building blocks: LP norm epigraphs, eigenvalue maximization over
//! subspace sections, support functions and generator enumeration.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cones::{gauss, Cone};
use crate::convex::{maximize, Query};
use crate::error::{Error, Result};
use crate::linalg::{min_norm_to_subspace, Subspace};
use crate::lp::{combinations, solve_lp, LpProblem, LpSolution, LpStatus, RowKind, Sense};
use crate::lsq::ldp;
use crate::norms::{NormKind, NormSpec};

use super::Path;

pub(crate) const ENUM_LIMIT: usize = 10;
pub const FEASIBLE_TOL: f64 = 1e-9;
const ELLIPSOID_TOL: f64 = 1e-10;
const ELLIPSOID_CAP: usize = 200_000;

pub(crate) type Sparse = Vec<(usize, f64)>;

/// Adds epigraph variables for the polyhedral norm of `exprᵢ + constᵢ` and returns
/// a linear form that upper-bounds it (tight at optimality when minimized).
pub(crate) fn add_norm_epigraph(
    lp: &mut LpProblem,
    exprs: &[Sparse],
    consts: &[f64],
    kind: NormKind,
) -> Sparse {
    match kind {
        NormKind::LInf => {
            let s = lp.add_var(0.0, 0.0, f64::INFINITY);
            for (e, &c) in exprs.iter().zip(consts) {
                let mut row = e.clone();
                row.push((s, -1.0));
                lp.add_sparse_row(&row, RowKind::Le, -c);
                let mut neg: Sparse = e.iter().map(|&(j, a)| (j, -a)).collect();
                neg.push((s, -1.0));
                lp.add_sparse_row(&neg, RowKind::Le, c);
            }
            vec![(s, 1.0)]
        }
        _ => {
            let mut form = Vec::with_capacity(exprs.len());
            for (e, &c) in exprs.iter().zip(consts) {
                let t = lp.add_var(0.0, 0.0, f64::INFINITY);
                let mut row = e.clone();
                row.push((t, -1.0));
                lp.add_sparse_row(&row, RowKind::Le, -c);
                let mut neg: Sparse = e.iter().map(|&(j, a)| (j, -a)).collect();
                neg.push((t, -1.0));
                lp.add_sparse_row(&neg, RowKind::Le, c);
                form.push((t, 1.0));
            }
            form
        }
    }
}

pub(crate) fn set_objective(lp: &mut LpProblem, form: &Sparse) {
    for &(j, a) in form {
        lp.objective[j] += a;
    }
}

/// Rows `(B w)ᵢ` as sparse forms over variables `offset..offset+m`.
pub(crate) fn basis_exprs(b: &DMatrix<f64>, offset: usize) -> Vec<Sparse> {
    (0..b.nrows())
        .map(|i| (0..b.ncols()).map(|j| (offset + j, b[(i, j)])).collect())
        .collect()
}

pub(crate) fn add_free_vars(lp: &mut LpProblem, count: usize) -> usize {
    let first = lp.num_vars();
    for _ in 0..count {
        lp.add_var(0.0, f64::NEG_INFINITY, f64::INFINITY);
    }
    first
}

pub(crate) fn solve_optimal(lp: &LpProblem) -> Result<Option<LpSolution>> {
    let sol = solve_lp(lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(Some(sol)),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::NumericalFailure("auxiliary LP unbounded".into())),
    }
}

pub(crate) fn supports_min_norm(norm: &NormSpec) -> bool {
    norm.kind == NormKind::L2 || norm.is_polyhedral()
}

/// Nonzero vertices of `{v ≥ 0, ‖v‖ ≤ 1}` for a polyhedral kind.
pub(crate) fn orthant_ball_vertices(n: usize, kind: NormKind) -> Result<Vec<DVector<f64>>> {
    match kind {
        NormKind::LInf => {
            if n > 2 * ENUM_LIMIT {
                return Err(Error::DimensionTooLarge {
                    dim: n,
                    limit: 2 * ENUM_LIMIT,
                });
            }
            Ok((1u64..(1 << n))
                .map(|mask| DVector::from_fn(n, |i, _| ((mask >> i) & 1) as f64))
                .collect())
        }
        _ => Ok((0..n).map(|i| unit(n, i, 1.0)).collect()),
    }
}

/// Vertices of the ambient unit ball of the dual of a polyhedral kind.
pub(crate) fn dual_ball_vertices(n: usize, kind: NormKind) -> Result<Vec<DVector<f64>>> {
    match kind {
        // dual of ℓ1 is ℓ∞: sign vectors, modulo the global sign for symmetric problems
        NormKind::L1 => {
            if n > 2 * ENUM_LIMIT {
                return Err(Error::DimensionTooLarge {
                    dim: n,
                    limit: 2 * ENUM_LIMIT,
                });
            }
            Ok((0u64..(1 << n))
                .map(|mask| {
                    DVector::from_fn(n, |i, _| if (mask >> i) & 1 == 1 { -1.0 } else { 1.0 })
                })
                .collect())
        }
        _ => Ok((0..n)
            .flat_map(|i| [unit(n, i, 1.0), unit(n, i, -1.0)])
            .collect()),
    }
}

pub(crate) fn unit(n: usize, i: usize, s: f64) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = s;
    e
}

/// Radius of a Euclidean ball containing every unit ball of the supported norms.
fn unit_ball_radius(n: usize) -> f64 {
    (n as f64).sqrt()
}

/// `max f(B w)` over `‖B w‖ ≤ 1` and optionally `B w ∈ K`, by the ellipsoid method.
pub(crate) fn ellipsoid_section_max<F>(
    b: &DMatrix<f64>,
    norm: &NormSpec,
    in_cone: Option<&Cone>,
    f: F,
) -> Result<(f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let (n, m) = b.shape();
    norm.eval(&DVector::zeros(n))?;
    let res = maximize(
        DVector::zeros(m),
        unit_ball_radius(n),
        ELLIPSOID_TOL,
        ELLIPSOID_CAP,
        |w| {
            let x = b * w;
            let nx = norm.eval(&x).unwrap_or(f64::INFINITY);
            if nx > 1.0 {
                let g = norm.subgradient(&x).unwrap_or_else(|_| x.clone());
                return Query::Infeasible {
                    cut: b.transpose() * g,
                };
            }
            if let Some(k) = in_cone {
                let (lam, g) = k.lambda_e_with_gradient(&x);
                if lam < 0.0 {
                    return Query::Infeasible {
                        cut: -(b.transpose() * g),
                    };
                }
            }
            let (val, g) = f(&x);
            Query::Feasible {
                value: val,
                supergradient: b.transpose() * g,
            }
        },
    );
    match res.point {
        Some(w) => Ok((res.value, b * w)),
        None => Err(Error::NumericalFailure(
            "ellipsoid method found no feasible point".into(),
        )),
    }
}

/// `max_{x∈L, ‖x‖≤1} λ_e(x)` with its maximizer.
pub(crate) fn max_lambda_e(
    l: &Subspace,
    k: &Cone,
    norm: &NormSpec,
) -> Result<(f64, DVector<f64>, Path)> {
    let b = l.basis();
    let (n, m) = b.shape();
    if k.is_orthant_like() {
        if let Some(kind) = norm.polyhedral_kind()? {
            let mut lp = LpProblem::new(Sense::Maximize, vec![]);
            let w0 = add_free_vars(&mut lp, m);
            let t = lp.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
            let exprs = basis_exprs(b, w0);
            for e in &exprs {
                let mut row = e.clone();
                row.push((t, -1.0));
                lp.add_sparse_row(&row, RowKind::Ge, 0.0);
            }
            let form = add_norm_epigraph(&mut lp, &exprs, &vec![0.0; n], kind);
            lp.add_sparse_row(&form, RowKind::Le, 1.0);
            let sol = solve_optimal(&lp)?
                .ok_or_else(|| Error::NumericalFailure("lambda LP infeasible".into()))?;
            let x = b * sol.x.rows(w0, m);
            return Ok((sol.objective, x, Path::LpExact));
        }
        if norm.kind == NormKind::L2 {
            return Ok(match ldp(b, &DVector::from_element(n, 1.0))? {
                Some(s) => {
                    let nw = s.w.norm();
                    (1.0 / nw, b * (&s.w / nw), Path::ActiveSet)
                }
                None => (0.0, DVector::zeros(n), Path::ActiveSet),
            });
        }
    }
    let (val, x) = ellipsoid_section_max(b, norm, None, |x| k.lambda_e_with_gradient(x))?;
    if val <= 0.0 {
        return Ok((0.0, DVector::zeros(n), Path::Iterative));
    }
    Ok((val, x, Path::Iterative))
}

/// Largest `λ_e` over a unit ball of `L`; positive iff `L ∩ int K ≠ ∅`.
///
/// Orthant-like cones use the ℓ∞ ball, whose LP resolves margins far below the
/// `≈1e-6` floor of the least-distance solve.
pub(crate) fn interior_margin(l: &Subspace, k: &Cone) -> Result<f64> {
    let norm = if k.is_orthant_like() {
        NormSpec::linf()
    } else {
        NormSpec::l2()
    };
    Ok(max_lambda_e(l, k, &norm)?.0)
}

/// `h(u) = max_{x∈L, ‖x‖≤1} ⟨u, x⟩ = min_{y∈L⊥} ‖u − y‖*`, with maximizer and the optimal `y`.
pub(crate) fn support_value(
    l: &Subspace,
    lperp: &Subspace,
    norm: &NormSpec,
    u: &DVector<f64>,
) -> Result<(f64, DVector<f64>, Option<DVector<f64>>)> {
    let dual = norm.dual();
    if supports_min_norm(&dual) {
        let c = min_norm_to_subspace(lperp, u, &dual)?;
        return Ok((c.value, c.dual, Some(c.minimizer)));
    }
    let b = l.basis();
    let (val, x) = ellipsoid_section_max(b, norm, None, |x| (u.dot(x), u.clone()))?;
    Ok((val, x, None))
}

/// `min_{a ≥ 0, a ≠ 0} ‖P G a‖ / ‖G a‖` over a simplicial generator matrix `G`, with the
/// unit minimizer `G a / ‖G a‖`, by enumerating supports of `a`.
pub(crate) fn cone_rayleigh_min(g: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let q = g.ncols();
    if q > ENUM_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: q,
            limit: ENUM_LIMIT,
        });
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    for size in 1..=q {
        for support in combinations(q, size) {
            let mut gs = DMatrix::zeros(g.nrows(), size);
            for (c, &j) in support.iter().enumerate() {
                gs.set_column(c, &g.column(j));
            }
            let nmat = gs.transpose() * &gs;
            let mmat = gs.transpose() * p * &gs;
            let Some(chol) = nmat.cholesky() else {
                continue;
            };
            let Some(linv) = chol.l().try_inverse() else {
                continue;
            };
            let mut a = &linv * mmat * linv.transpose();
            a = (&a + a.transpose()) * 0.5;
            let eig = SymmetricEigen::new(a);
            for i in 0..size {
                let mut coef = linv.transpose() * eig.eigenvectors.column(i);
                if coef.sum() < 0.0 {
                    coef = -coef;
                }
                if coef.min() < -1e-10 * coef.amax() {
                    continue;
                }
                coef.iter_mut().for_each(|c| *c = c.max(0.0));
                let u = &gs * coef;
                let nu = u.norm();
                if nu == 0.0 {
                    continue;
                }
                let u = u / nu;
                let val = (p * &u).norm();
                if best.as_ref().map_or(true, |(b, _)| val < *b - 1e-15) {
                    best = Some((val, u));
                }
            }
        }
    }
    best.ok_or_else(|| Error::NumericalFailure("generator enumeration found no candidate".into()))
}

pub(crate) fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(salt);
    r
}

/// Index and value of the first minimum, evaluated in parallel.
pub(crate) fn par_argmin<F>(cands: &[DVector<f64>], f: F) -> Option<(usize, f64)>
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
{
    let vals: Vec<f64> = cands.par_iter().map(|c| f(c)).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in vals.into_iter().enumerate() {
        if v.is_finite() && best.map_or(true, |(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best
}

/// Random local search minimizing `f` from `start`; `project` maps proposals back to the domain.
pub(crate) fn refine_min<F, P>(
    start: DVector<f64>,
    start_val: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
    f: F,
    project: P,
) -> (DVector<f64>, f64)
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
    P: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let d = start.len();
    let mut x = start;
    let mut fx = start_val;
    let mut delta = 0.1;
    for _ in 0..steps {
        let props: Vec<DVector<f64>> = (0..4)
            .filter_map(|_| {
                let step = DVector::from_fn(d, |_, _| gauss(rng)) * (delta / (d as f64).sqrt());
                project(&(&x + step))
            })
            .collect();
        match par_argmin(&props, &f) {
            Some((i, v)) if v < fx => {
                x = props[i].clone();
                fx = v;
                delta = (delta * 1.5).min(0.5);
            }
            _ => delta *= 0.6,
        }
        if delta < 1e-12 {
            break;
        }
    }
    (x, fx)
}

/// Uniform-ish random directions of the subspace, normalized by `norm`.
pub(crate) fn subspace_directions(
    l: &Subspace,
    norm: &NormSpec,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DVector<f64>>> {
    let b = l.basis();
    let m = b.ncols();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = DVector::from_fn(m, |_, _| gauss(rng));
        let x = b * w;
        let nx = norm.eval(&x)?;
        if nx > 1e-12 {
            out.push(x / nx);
        }
    }
    Ok(out)
}

pub(crate) fn random_unit_in_cone(
    k: &Cone,
    norm: &NormSpec,
    rng: &mut ChaCha8Rng,
) -> Result<DVector<f64>> {
    loop {
        let v = k.sample_element(rng);
        let nv = norm.eval(&v)?;
        if nv > 1e-12 {
            return Ok(v / nv);
        }
    }
}
