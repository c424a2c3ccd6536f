//! Explicit ill-posed subspaces at distance `ν(L)` (resp. `ν̄(L)`) from `L`.

use nalgebra::{DMatrix, DVector};

use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::linalg::Subspace;

use super::kernels::FEASIBLE_TOL;
use super::{check_instance, odist_upper_bound, MeasureCertificate, NormPair};

const WITNESS_TOL: f64 = 1e-7;

/// Basis of `{w ∈ Rᵐ : ⟨h, w⟩ = 0}` as columns.
fn hyperplane_basis(h: &DVector<f64>) -> Result<DMatrix<f64>> {
    let m = h.len();
    if m == 1 {
        return Ok(DMatrix::zeros(1, 0));
    }
    if h.norm() <= 1e-14 {
        return Err(Error::NumericalFailure(
            "witness normal vanishes on L".into(),
        ));
    }
    let line = Subspace::from_vectors(std::slice::from_ref(h))?;
    Ok(line.complement().basis().clone())
}

fn span_of_dim(vectors: &[DVector<f64>], m: usize) -> Result<Subspace> {
    let s = Subspace::from_vectors(vectors)?;
    if s.dim() != m {
        return Err(Error::NumericalFailure(format!(
            "critical subspace has dimension {} instead of {m}",
            s.dim()
        )));
    }
    Ok(s)
}

/// `L̃ = span({x̄ − ν v̄} ∪ (L ∩ H))` with `H = {x : ⟨ū − ȳ, x⟩ = 0}`.
///
/// `ū ∈ L̃⊥ ∩ K*`, so `L̃` is ill-posed, and `dist(L, L̃) ≤ ν(L)`.
pub fn critical_subspace_feasible(
    l: &Subspace,
    k: &Cone,
    np: &NormPair,
    cert: &MeasureCertificate,
) -> Result<Subspace> {
    check_instance(l, k, np)?;
    let x = cert.x.as_ref().ok_or(Error::MissingWitnesses("x"))?;
    let u = cert.u.as_ref().ok_or(Error::MissingWitnesses("u"))?;
    let y = cert.y.as_ref().ok_or(Error::MissingWitnesses("y"))?;
    if cert.value <= FEASIBLE_TOL {
        return Err(Error::InfeasibleSide);
    }
    if !k.dual_contains(u, WITNESS_TOL * (1.0 + u.norm())) {
        return Err(Error::Validation(
            "witness u is not in the dual cone".into(),
        ));
    }
    let v = np.tri.dual_attainer(u)?;
    let b = l.basis();
    let w = hyperplane_basis(&(b.transpose() * (u - y)))?;
    let mut vecs = vec![x - cert.value * v];
    vecs.extend((b * w).column_iter().map(|c| c.into_owned()));
    span_of_dim(&vecs, l.dim())
}

/// `L̃ = span({v̄} ∪ (L ∩ H))` with `H = {x : ⟨ȳ, x⟩ = 0}`, `ȳ` a subgradient of `‖·‖` at `x̄`.
///
/// `v̄ ∈ L̃ ∩ K`, so `L̃` is ill-posed, and `odist(L̃, L) ≤ ν̄(L)`.
pub fn critical_subspace_infeasible(
    l: &Subspace,
    k: &Cone,
    np: &NormPair,
    cert: &MeasureCertificate,
) -> Result<Subspace> {
    check_instance(l, k, np)?;
    let x = cert.x.as_ref().ok_or(Error::MissingWitnesses("x"))?;
    let v = cert.v.as_ref().ok_or(Error::MissingWitnesses("v"))?;
    if cert.value <= FEASIBLE_TOL {
        return Err(Error::Validation(
            "nu_bar vanishes: L already meets K".into(),
        ));
    }
    if v.norm() <= 1e-12 {
        return Err(Error::DegenerateVbar {
            fallback: odist_upper_bound(l, np)?,
        });
    }
    let ybar = np.primal.subgradient(x)?;
    let b = l.basis();
    let w = hyperplane_basis(&(b.transpose() * ybar))?;
    let mut vecs = vec![v.clone()];
    vecs.extend((b * w).column_iter().map(|c| c.into_owned()));
    span_of_dim(&vecs, l.dim())
}
