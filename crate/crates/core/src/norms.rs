//! Norms on Rⁿ: ℓ1, ℓ2, ℓ∞ and the norm induced by a cone's identity, with duals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::lp::{combinations, enumerate_vertices, HalfSpace, MAX_ENUM_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L1,
    L2,
    LInf,
    /// `min{α : ±x + αe ∈ K}`, equal to `maxᵢ |λᵢ(x)|`.
    InducedE,
    /// Dual of `InducedE`, equal to `Σᵢ |λᵢ(x)|`.
    InducedEDual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSpec {
    pub kind: NormKind,
    pub cone: Option<Cone>,
}

impl NormSpec {
    pub fn l1() -> Self {
        NormSpec {
            kind: NormKind::L1,
            cone: None,
        }
    }

    pub fn l2() -> Self {
        NormSpec {
            kind: NormKind::L2,
            cone: None,
        }
    }

    pub fn linf() -> Self {
        NormSpec {
            kind: NormKind::LInf,
            cone: None,
        }
    }

    pub fn induced_e(cone: Cone) -> Self {
        NormSpec {
            kind: NormKind::InducedE,
            cone: Some(cone),
        }
    }

    pub fn induced_e_dual(cone: Cone) -> Self {
        NormSpec {
            kind: NormKind::InducedEDual,
            cone: Some(cone),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::LInf => "linf",
            NormKind::InducedE => "induced_e",
            NormKind::InducedEDual => "induced_e_dual",
        }
    }

    fn cone(&self) -> Result<&Cone> {
        match self.kind {
            NormKind::InducedE | NormKind::InducedEDual => {
                let c = self.cone.as_ref().ok_or(Error::MissingCone)?;
                if !c.is_symmetric() {
                    return Err(Error::NotSymmetric(
                        "induced norms need a symmetric cone".into(),
                    ));
                }
                Ok(c)
            }
            _ => Err(Error::MissingCone),
        }
    }

    pub fn dual(&self) -> NormSpec {
        let kind = match self.kind {
            NormKind::L1 => NormKind::LInf,
            NormKind::LInf => NormKind::L1,
            NormKind::L2 => NormKind::L2,
            NormKind::InducedE => NormKind::InducedEDual,
            NormKind::InducedEDual => NormKind::InducedE,
        };
        NormSpec {
            kind,
            cone: self.cone.clone(),
        }
    }

    /// `Some(L1 | LInf)` when the unit ball is the ℓ1 or ℓ∞ polytope.
    pub fn polyhedral_kind(&self) -> Result<Option<NormKind>> {
        Ok(match self.kind {
            NormKind::L1 | NormKind::LInf => Some(self.kind),
            NormKind::L2 => None,
            NormKind::InducedE | NormKind::InducedEDual => {
                let c = self.cone()?;
                match (c.is_orthant_like(), self.kind) {
                    (true, NormKind::InducedE) => Some(NormKind::LInf),
                    (true, _) => Some(NormKind::L1),
                    (false, _) => None,
                }
            }
        })
    }

    pub fn is_polyhedral(&self) -> bool {
        matches!(self.polyhedral_kind(), Ok(Some(_)))
    }

    /// True for `InducedE` and for ℓ∞ over an orthant-like cone (the same norm).
    pub fn is_induced_e_for(&self, k: &Cone) -> bool {
        match self.kind {
            NormKind::InducedE => self.cone.as_ref() == Some(k),
            NormKind::LInf => k.is_orthant_like(),
            _ => false,
        }
    }

    /// True for `InducedEDual` and for ℓ1 over an orthant-like cone.
    pub fn is_induced_e_dual_for(&self, k: &Cone) -> bool {
        match self.kind {
            NormKind::InducedEDual => self.cone.as_ref() == Some(k),
            NormKind::L1 => k.is_orthant_like(),
            _ => false,
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(match self.kind {
            NormKind::L1 => x.abs().sum(),
            NormKind::L2 => x.norm(),
            NormKind::LInf => x.amax(),
            NormKind::InducedE => self
                .cone()?
                .eigenvalues(x)?
                .iter()
                .fold(0.0, |a: f64, l| a.max(l.abs())),
            NormKind::InducedEDual => self.cone()?.eigenvalues(x)?.iter().map(|l| l.abs()).sum(),
        })
    }

    pub fn dual_eval(&self, u: &DVector<f64>) -> Result<f64> {
        self.dual().eval(u)
    }

    /// `q` with `‖q‖* = 1` and `⟨q, x⟩ = ‖x‖`.
    pub fn subgradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = x.len();
        let mut q = DVector::zeros(n);
        let fallback = |q: &mut DVector<f64>| q[0] = 1.0;
        match self.kind {
            NormKind::L1 => {
                if x.amax() == 0.0 {
                    q.fill(1.0);
                } else {
                    for i in 0..n {
                        q[i] = if x[i] > 0.0 {
                            1.0
                        } else if x[i] < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                    }
                }
            }
            NormKind::L2 => {
                let nx = x.norm();
                if nx == 0.0 {
                    fallback(&mut q);
                } else {
                    q = x / nx;
                }
            }
            NormKind::LInf => {
                let i = x.iamax();
                q[i] = if x[i] < 0.0 { -1.0 } else { 1.0 };
            }
            NormKind::InducedE => {
                let sd = self.cone()?.spectral(x)?;
                let (i, _) = sd
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .fold(
                        (0, -1.0),
                        |acc, (i, l)| if l.abs() > acc.1 { (i, l.abs()) } else { acc },
                    );
                let s = if sd.eigenvalues[i] < 0.0 { -1.0 } else { 1.0 };
                q = s * &sd.frame[i];
            }
            NormKind::InducedEDual => {
                let sd = self.cone()?.spectral(x)?;
                let tol = 1e-12 * sd.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
                for (l, c) in sd.eigenvalues.iter().zip(&sd.frame) {
                    if tol == 0.0 || *l > tol {
                        q += c;
                    } else if *l < -tol {
                        q -= c;
                    }
                }
            }
        }
        Ok(q)
    }

    /// `v` with `‖v‖ = 1` and `⟨u, v⟩ = ‖u‖*`.
    pub fn dual_attainer(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.dual().subgradient(u)
    }
}

pub fn norm_eval(spec: &NormSpec, x: &DVector<f64>) -> Result<f64> {
    spec.eval(x)
}

pub fn dual_norm_eval(spec: &NormSpec, u: &DVector<f64>) -> Result<f64> {
    spec.dual_eval(u)
}

/// Extreme points of `{x ∈ S : ‖x‖ ≤ 1}`.
pub fn ball_vertices(spec: &NormSpec, s: &Subspace) -> Result<Vec<DVector<f64>>> {
    section_vertices(spec, s.basis())
}

/// Extreme points of `{B w : ‖B w‖ ≤ 1}` for a basis matrix `B` with independent columns.
pub fn section_vertices(spec: &NormSpec, basis: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let (n, m) = basis.shape();
    let kind = spec
        .polyhedral_kind()?
        .ok_or_else(|| Error::NonPolyhedralNorm(spec.name().into()))?;
    if m > MAX_ENUM_DIM {
        return Err(Error::DimensionTooLarge {
            dim: m,
            limit: MAX_ENUM_DIM,
        });
    }
    match kind {
        NormKind::LInf => {
            let mut hs = Vec::with_capacity(2 * n);
            for i in 0..n {
                let row = basis.row(i).transpose();
                if row.amax() == 0.0 {
                    continue;
                }
                hs.push(HalfSpace::new(row.clone(), 1.0));
                hs.push(HalfSpace::new(-row, 1.0));
            }
            Ok(enumerate_vertices(&hs, m)?
                .into_iter()
                .map(|w| basis * w)
                .collect())
        }
        _ => {
            // vertices of a section of the cross-polytope are normalized circuits of B
            let mut out: Vec<DVector<f64>> = Vec::new();
            for zero_rows in combinations(n, m - 1) {
                let Some(w) = kernel_direction(basis, &zero_rows) else {
                    continue;
                };
                let x = basis * w;
                let l1 = x.abs().sum();
                if l1 <= 1e-12 {
                    continue;
                }
                let x = x / l1;
                for cand in [x.clone(), -x] {
                    if !out.iter().any(|y| (y - &cand).amax() <= 1e-8) {
                        out.push(cand);
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Unit `w` spanning the kernel of the selected rows, when that kernel is one-dimensional.
fn kernel_direction(basis: &DMatrix<f64>, rows: &[usize]) -> Option<DVector<f64>> {
    let m = basis.ncols();
    let mut sub = DMatrix::zeros(rows.len(), m);
    for (r, &i) in rows.iter().enumerate() {
        sub.set_row(r, &basis.row(i));
    }
    let gram = sub.transpose() * &sub;
    let scale = 1.0 + gram.amax();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if eig.eigenvalues[order[0]] > 1e-12 * scale {
        return None;
    }
    if m > 1 && eig.eigenvalues[order[1]] <= 1e-10 * scale {
        return None;
    }
    Some(eig.eigenvectors.column(order[0]).into_owned())
}
