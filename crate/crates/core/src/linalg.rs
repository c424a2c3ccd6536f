//! Subspaces of Rⁿ with orthonormal bases, principal angles and min-norm distances.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus, RowKind, Sense};
use crate::norms::{NormKind, NormSpec};

const RANK_TOL: f64 = 1e-10;

/// A proper nonzero subspace `0 < m < n`, stored by an orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

/// `min_{z∈L} ‖p − z‖` with primal minimizer and aligned dual `q ∈ L⊥`, `‖q‖* = 1`.
#[derive(Debug, Clone)]
pub struct MinNormCertificate {
    pub value: f64,
    pub minimizer: DVector<f64>,
    pub dual: DVector<f64>,
    pub dual_value: f64,
}

/// Householder QR with column pivoting; returns the full orthogonal factor and numerical rank.
fn pivoted_qr(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (n, k) = m.shape();
    let mut r = m.clone();
    let mut q = DMatrix::identity(n, n);
    let max_norm = (0..k).map(|j| m.column(j).norm()).fold(0.0, f64::max);
    let thr = RANK_TOL * max_norm;
    let mut rank = 0;
    for j in 0..k.min(n) {
        let (piv, pnorm) = (j..k).map(|c| (c, r.view((j, c), (n - j, 1)).norm())).fold(
            (j, -1.0),
            |acc, (c, v)| if v > acc.1 { (c, v) } else { acc },
        );
        if pnorm <= thr || max_norm == 0.0 {
            break;
        }
        r.swap_columns(j, piv);
        let x = r.view((j, j), (n - j, 1)).into_owned();
        let alpha = if x[0] >= 0.0 { -pnorm } else { pnorm };
        let mut v = x;
        v[0] -= alpha;
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
            let mut sub = r.view_mut((j, 0), (n - j, k));
            let proj = v.transpose() * &sub;
            sub -= 2.0 * &v * proj;
            let mut qs = q.view_mut((0, j), (n, n - j));
            let qp = &qs * &v;
            qs -= 2.0 * qp * v.transpose();
        }
        rank += 1;
    }
    (q, rank)
}

impl Subspace {
    /// Orthonormal basis of the span of the given columns.
    pub fn from_columns(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let (q, rank) = pivoted_qr(m);
        if rank == 0 || rank >= n {
            return Err(Error::DegenerateSubspace { rank, ambient: n });
        }
        Ok(Subspace {
            basis: q.columns(0, rank).into_owned(),
        })
    }

    pub fn from_vectors(vectors: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::DegenerateSubspace {
                rank: 0,
                ambient: 0,
            });
        };
        let n = first.len();
        if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Self::from_columns(&DMatrix::from_columns(vectors))
    }

    /// `ker A` for a `k × n` matrix.
    pub fn kernel_of(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.ncols();
        let (q, rank) = pivoted_qr(&a.transpose());
        if rank == 0 || rank >= n {
            return Err(Error::DegenerateSubspace {
                rank: n - rank,
                ambient: n,
            });
        }
        Ok(Subspace {
            basis: q.columns(rank, n - rank).into_owned(),
        })
    }

    /// Wraps a matrix already known to have orthonormal columns.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        let (n, m) = basis.shape();
        if m == 0 || m >= n {
            return Err(Error::DegenerateSubspace {
                rank: m,
                ambient: n,
            });
        }
        let gram_err = (basis.transpose() * &basis - DMatrix::identity(m, m)).amax();
        if gram_err > 1e-10 {
            return Err(Error::NumericalFailure(format!(
                "basis not orthonormal ({gram_err:e})"
            )));
        }
        Ok(Subspace { basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * x)
    }

    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim();
        let m = self.dim();
        let (q, _) = pivoted_qr(&self.basis);
        Subspace {
            basis: q.columns(m, n - m).into_owned(),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (x - self.project(x)).norm() <= tol * (1.0 + x.norm())
    }

    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient_dim() == other.ambient_dim()
            && (self.projector() - other.projector()).amax() <= tol
    }
}

pub fn orthonormal_basis(vectors: &[DVector<f64>]) -> Result<Subspace> {
    Subspace::from_vectors(vectors)
}

pub fn orth_complement(s: &Subspace) -> Subspace {
    s.complement()
}

fn check_same_ambient(s1: &Subspace, s2: &Subspace) -> Result<()> {
    if s1.ambient_dim() != s2.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: s1.ambient_dim(),
            found: s2.ambient_dim(),
        });
    }
    Ok(())
}

/// Thin SVD `M = U diag(s) Vᵀ` whose factors are checked against `M`.
///
/// nalgebra's SVD can return a wrong largest singular value when vectors are requested
/// and `M` has an exact zero singular value. The factorization is retried on the
/// triangular factor of `M` or `Mᵀ`, and finally assembled from the eigenvectors of `MᵀM`.
pub fn checked_svd(m: &DMatrix<f64>) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let tol = 1e-12 * (1.0 + m.amax()) * (m.nrows().max(m.ncols()) as f64);
    let ok = |svd: &nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>| {
        let (Some(u), Some(vt)) = (&svd.u, &svd.v_t) else {
            return false;
        };
        let rec = u * DMatrix::from_diagonal(&svd.singular_values) * vt;
        (rec - m).amax() <= tol
    };
    let direct = m.clone().svd(true, true);
    if ok(&direct) {
        return Ok(direct);
    }
    if m.nrows() >= m.ncols() {
        let qr = m.clone().qr();
        let inner = qr.r().svd(true, true);
        let mut out = inner.clone();
        out.u = inner.u.map(|u| qr.q() * u);
        if ok(&out) {
            return Ok(out);
        }
    } else {
        let qr = m.transpose().qr();
        let inner = qr.r().svd(true, true);
        let mut out = inner.clone();
        out.u = inner.v_t.as_ref().map(|vt| vt.transpose());
        out.v_t = inner.u.map(|u| (qr.q() * u).transpose());
        if ok(&out) {
            return Ok(out);
        }
    }
    // M = Σ (M vᵢ) vᵢᵀ for any orthonormal V; singular values below 1e-8·σ_max are not
    // resolved by the Gram matrix and are set to zero
    let eig = SymmetricEigen::new(m.transpose() * m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let k = m.nrows().min(m.ncols());
    let v = DMatrix::from_fn(m.ncols(), k, |r, c| eig.eigenvectors[(r, order[c])]);
    let mv = m * &v;
    let norms: Vec<f64> = mv.column_iter().map(|c| c.norm()).collect();
    let cut = 1e-8 * norms.iter().cloned().fold(0.0, f64::max);
    let mut u = DMatrix::zeros(m.nrows(), k);
    let mut sv = DVector::zeros(k);
    for j in 0..k {
        if norms[j] > cut && norms[j] > 0.0 {
            sv[j] = norms[j];
            u.set_column(j, &(mv.column(j) / norms[j]));
        }
    }
    Ok(nalgebra::SVD {
        u: Some(u),
        v_t: Some(v.transpose()),
        singular_values: sv,
    })
}

/// `A⁺` from [`checked_svd`], dropping singular values below `eps·σ_max`.
pub fn pseudo_inverse(m: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    let svd = checked_svd(m)?;
    let cut = eps * svd.singular_values.max();
    let inv = svd
        .singular_values
        .map(|s| if s > cut && s > 0.0 { 1.0 / s } else { 0.0 });
    let (u, vt) = (svd.u.expect("checked"), svd.v_t.expect("checked"));
    Ok(vt.transpose() * DMatrix::from_diagonal(&inv) * u.transpose())
}

/// Principal angles in nonincreasing order.
pub fn principal_angles(s1: &Subspace, s2: &Subspace) -> Result<Vec<f64>> {
    check_same_ambient(s1, s2)?;
    let c = s1.basis.transpose() * &s2.basis;
    let sv = c.svd(false, false).singular_values;
    let mut angles: Vec<f64> = sv.iter().map(|&s| s.clamp(0.0, 1.0).acos()).collect();
    angles.sort_by(|a, b| b.total_cmp(a));
    Ok(angles)
}

/// `‖Π₁ − Π₂‖₂`.
pub fn projection_gap(s1: &Subspace, s2: &Subspace) -> Result<f64> {
    check_same_ambient(s1, s2)?;
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch {
            expected: s1.dim(),
            found: s2.dim(),
        });
    }
    let d = s1.projector() - s2.projector();
    let eig = SymmetricEigen::new(d);
    Ok(eig.eigenvalues.amax())
}

/// `min_{z∈S} ‖p − z‖` together with a dual certificate from `S⊥`.
pub fn min_norm_to_subspace(
    s: &Subspace,
    p: &DVector<f64>,
    norm: &NormSpec,
) -> Result<MinNormCertificate> {
    if p.len() != s.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: s.ambient_dim(),
            found: p.len(),
        });
    }
    match norm.polyhedral_kind()? {
        Some(kind) => min_norm_polyhedral(s, p, kind),
        None if norm.kind == NormKind::L2 => Ok(min_norm_l2(s, p)),
        None => Err(Error::UnsupportedNorm(format!(
            "no min-norm solver for {}",
            norm.name()
        ))),
    }
}

fn min_norm_l2(s: &Subspace, p: &DVector<f64>) -> MinNormCertificate {
    let z = s.project(p);
    let r = p - &z;
    let value = r.norm();
    let dual = if value > 1e-14 * (1.0 + p.norm()) {
        r / value
    } else {
        s.complement().basis.column(0).into_owned()
    };
    let dual_value = dual.dot(p);
    MinNormCertificate {
        value,
        minimizer: z,
        dual,
        dual_value,
    }
}

fn min_norm_polyhedral(
    s: &Subspace,
    p: &DVector<f64>,
    kind: NormKind,
) -> Result<MinNormCertificate> {
    let n = s.ambient_dim();
    let m = s.dim();
    let b = &s.basis;
    // primal: variables w (m, free) then epigraph slacks
    let (primal_value, minimizer) = match kind {
        NormKind::L1 => {
            let mut obj = vec![0.0; m + n];
            obj[m..].iter_mut().for_each(|c| *c = 1.0);
            let mut lp = LpProblem::new(Sense::Minimize, obj);
            for j in 0..m {
                lp.set_free(j);
            }
            for i in 0..n {
                let mut row: Vec<(usize, f64)> = (0..m).map(|j| (j, b[(i, j)])).collect();
                row.push((m + i, 1.0));
                lp.add_sparse_row(&row, RowKind::Ge, p[i]);
                row.pop();
                row.push((m + i, -1.0));
                lp.add_sparse_row(&row, RowKind::Le, p[i]);
            }
            let sol = expect_optimal(solve_lp(&lp)?)?;
            (sol.objective, b * sol.x.rows(0, m))
        }
        _ => {
            let mut obj = vec![0.0; m + 1];
            obj[m] = 1.0;
            let mut lp = LpProblem::new(Sense::Minimize, obj);
            for j in 0..m {
                lp.set_free(j);
            }
            for i in 0..n {
                let mut row: Vec<(usize, f64)> = (0..m).map(|j| (j, b[(i, j)])).collect();
                row.push((m, 1.0));
                lp.add_sparse_row(&row, RowKind::Ge, p[i]);
                row.pop();
                row.push((m, -1.0));
                lp.add_sparse_row(&row, RowKind::Le, p[i]);
            }
            let sol = expect_optimal(solve_lp(&lp)?)?;
            (sol.objective, b * sol.x.rows(0, m))
        }
    };

    // dual: max ⟨q, p⟩ over q = C z ∈ S⊥ with ‖q‖* ≤ 1
    let c = s.complement().basis;
    let k = n - m;
    let (_, mut dual) = match kind {
        NormKind::L1 => {
            let obj: Vec<f64> = (0..k).map(|j| c.column(j).dot(p)).collect();
            let mut lp = LpProblem::new(Sense::Maximize, obj);
            for j in 0..k {
                lp.set_free(j);
            }
            for i in 0..n {
                let row: Vec<f64> = (0..k).map(|j| c[(i, j)]).collect();
                lp.add_row(row.clone(), RowKind::Le, 1.0);
                lp.add_row(row, RowKind::Ge, -1.0);
            }
            let sol = expect_optimal(solve_lp(&lp)?)?;
            (sol.objective, &c * sol.x.rows(0, k))
        }
        _ => {
            let mut obj: Vec<f64> = (0..k).map(|j| c.column(j).dot(p)).collect();
            obj.extend(std::iter::repeat(0.0).take(n));
            let mut lp = LpProblem::new(Sense::Maximize, obj);
            for j in 0..k {
                lp.set_free(j);
            }
            for i in 0..n {
                let mut row: Vec<(usize, f64)> = (0..k).map(|j| (j, c[(i, j)])).collect();
                row.push((k + i, -1.0));
                lp.add_sparse_row(&row, RowKind::Le, 0.0);
                for e in row.iter_mut().take(k) {
                    e.1 = -e.1;
                }
                lp.add_sparse_row(&row, RowKind::Le, 0.0);
            }
            let total: Vec<(usize, f64)> = (0..n).map(|i| (k + i, 1.0)).collect();
            lp.add_sparse_row(&total, RowKind::Le, 1.0);
            let sol = expect_optimal(solve_lp(&lp)?)?;
            (sol.objective, &c * sol.x.rows(0, k))
        }
    };
    let dual_norm = match kind {
        NormKind::L1 => dual.amax(),
        _ => dual.abs().sum(),
    };
    if dual_norm > 1e-12 {
        dual /= dual_norm;
    } else {
        let col = c.column(0).into_owned();
        let nrm = match kind {
            NormKind::L1 => col.amax(),
            _ => col.abs().sum(),
        };
        dual = col / nrm;
    }
    let dual_value = dual.dot(p);
    Ok(MinNormCertificate {
        value: primal_value,
        minimizer,
        dual,
        dual_value,
    })
}

fn expect_optimal(sol: crate::lp::LpSolution) -> Result<crate::lp::LpSolution> {
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        s => Err(Error::NumericalFailure(format!("auxiliary LP ended {s:?}"))),
    }
}
