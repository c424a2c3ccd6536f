//! Data-dependent conditioning of a map `A : Rᵐ → Rⁿ` with `L = Image(A)`.
//!
//! Operator norms use the domain norm `|·|` on `Rᵐ` and either `‖·‖` or `|||·|||` on `Rⁿ`.
//! The sandwich brackets Renegar's distance `Rdist(A, Σ)` between
//! `g/‖A⁻¹‖` and `g·‖A‖`, where `g` is `ν(L)` on the feasible side and `ν̄(L)` otherwise.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::measures::kernels::{dual_ball_vertices, max_lambda_e, FEASIBLE_TOL};
use crate::measures::{nu_bar_with, nu_with, Budget, MeasureCertificate, NormPair};
use crate::norms::{section_vertices, NormKind, NormSpec};

/// Smallest singular value below which a map is treated as not injective.
pub const INJECTIVITY_TOL: f64 = 1e-10;

/// Domain dimension limit for vertex enumeration of the domain ball.
const VERTEX_DIM_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    /// `n × m`.
    pub matrix: DMatrix<f64>,
    /// `|·|` on `Rᵐ`; ℓ1, ℓ2 or ℓ∞.
    pub domain_norm: NormSpec,
    pub norms: NormPair,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>, domain_norm: NormSpec, norms: NormPair) -> Result<Self> {
        let (n, m) = matrix.shape();
        if m == 0 || n == 0 {
            return Err(Error::Validation("map matrix must be nonempty".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "map matrix has non-finite entries".into(),
            ));
        }
        if domain_norm.cone.is_some() {
            return Err(Error::UnsupportedNorm(format!(
                "domain norm {}",
                domain_norm.name()
            )));
        }
        norms.validate(n)?;
        Ok(LinearMap {
            matrix,
            domain_norm,
            norms,
        })
    }

    /// ℓ2 on the domain and on both codomain roles.
    pub fn euclidean(matrix: DMatrix<f64>) -> Result<Self> {
        LinearMap::new(matrix, NormSpec::l2(), NormPair::euclidean())
    }

    pub fn codomain_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn singular_values(&self) -> (f64, f64) {
        let s = self.matrix.clone().svd(false, false).singular_values;
        (s.max(), s.min())
    }

    pub fn check_injective(&self) -> Result<()> {
        if self.domain_dim() > self.codomain_dim() {
            return Err(Error::NotInjective(0.0));
        }
        let (_, smin) = self.singular_values();
        if smin <= INJECTIVITY_TOL {
            return Err(Error::NotInjective(smin));
        }
        Ok(())
    }

    /// `Image(A)`; requires injectivity.
    pub fn image(&self) -> Result<Subspace> {
        self.check_injective()?;
        Subspace::from_columns(&self.matrix)
    }

    /// `A ↦ scale·A` with the same norms.
    pub fn scaled(&self, scale: f64) -> LinearMap {
        LinearMap {
            matrix: &self.matrix * scale,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpNorms {
    /// `max_{|w|=1} ‖Aw‖`.
    pub norm: f64,
    /// `max_{|w|=1} |||Aw|||`; absent when no exact method covers the norm combination.
    pub tri_norm: Option<f64>,
    /// `max_{x∈Image(A), ‖x‖=1} |A⁻¹x|`.
    pub inverse_norm: f64,
    pub kappa: f64,
}

/// `max_{|w|≤1} ‖Aw‖_cod`.
pub fn operator_norm(a: &DMatrix<f64>, domain: &NormSpec, codomain: &NormSpec) -> Result<f64> {
    let (n, m) = a.shape();
    if m == 1 {
        return codomain.eval(&a.column(0).into_owned());
    }
    match domain.polyhedral_kind()? {
        Some(NormKind::L1) => {
            let mut best = 0.0f64;
            for c in a.column_iter() {
                best = best.max(codomain.eval(&c.into_owned())?);
            }
            Ok(best)
        }
        Some(_) => {
            // vertices of the ℓ∞ ball are sign vectors; ±s give the same value
            if m > VERTEX_DIM_LIMIT {
                return Err(Error::DimensionTooLarge {
                    dim: m,
                    limit: VERTEX_DIM_LIMIT,
                });
            }
            let mut best = 0.0f64;
            for mask in 0..(1usize << (m - 1)) {
                let s = DVector::from_fn(m, |j, _| {
                    if j + 1 < m && mask >> j & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                });
                best = best.max(codomain.eval(&(a * s))?);
            }
            Ok(best)
        }
        None => match codomain.kind {
            NormKind::L2 => Ok(a.clone().svd(false, false).singular_values.max()),
            _ => match codomain.polyhedral_kind()? {
                // max_{|w|₂≤1} max_c ⟨c, Aw⟩ over vertices c of the dual ball
                Some(kind) => {
                    let mut best = 0.0f64;
                    for c in dual_ball_vertices(n, kind)? {
                        best = best.max((a.transpose() * c).norm());
                    }
                    Ok(best)
                }
                None => Err(Error::Unsupported(format!(
                    "operator norm from l2 into {}",
                    codomain.name()
                ))),
            },
        },
    }
}

/// `max_{x∈Image(A), ‖x‖≤1} |A⁺x|` for injective `A`.
pub fn inverse_norm(a: &DMatrix<f64>, domain: &NormSpec, codomain: &NormSpec) -> Result<f64> {
    let m = a.ncols();
    if m == 1 {
        return Ok(1.0 / codomain.eval(&a.column(0).into_owned())?);
    }
    let pinv = crate::linalg::pseudo_inverse(a, 1e-14)?;
    if codomain.is_polyhedral() {
        let mut best = 0.0f64;
        for x in section_vertices(codomain, a)? {
            best = best.max(domain.eval(&(&pinv * x))?);
        }
        return Ok(best);
    }
    if codomain.kind != NormKind::L2 {
        return Err(Error::Unsupported(format!(
            "inverse norm on {}",
            codomain.name()
        )));
    }
    match domain.polyhedral_kind()? {
        None => Ok(1.0 / a.clone().svd(false, false).singular_values.min()),
        // |w| = max_b ⟨b, w⟩ over vertices b of the dual domain ball, and max_{‖Aw‖₂≤1} ⟨b, w⟩ = ‖(A⁺)ᵀb‖₂
        Some(kind) => {
            if kind == NormKind::L1 && m > VERTEX_DIM_LIMIT {
                return Err(Error::DimensionTooLarge {
                    dim: m,
                    limit: VERTEX_DIM_LIMIT,
                });
            }
            let mut best = 0.0f64;
            for b in dual_ball_vertices(m, kind)? {
                best = best.max((pinv.transpose() * b).norm());
            }
            Ok(best)
        }
    }
}

pub fn op_norms(a: &LinearMap) -> Result<OpNorms> {
    a.check_injective()?;
    let norm = operator_norm(&a.matrix, &a.domain_norm, &a.norms.primal)?;
    let tri_norm = match operator_norm(&a.matrix, &a.domain_norm, &a.norms.tri) {
        Ok(v) => Some(v),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let inverse_norm = inverse_norm(&a.matrix, &a.domain_norm, &a.norms.primal)?;
    // ‖A‖·‖A⁻¹‖ ≥ ‖A A⁻¹‖ = 1; clamp the rounding on isometries
    let kappa = (norm * inverse_norm).max(1.0);
    Ok(OpNorms {
        norm,
        tri_norm,
        inverse_norm,
        kappa,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `Image(A) ∩ int K ≠ ∅`; bracket built from `ν`.
    Feasible,
    /// `Image(A)⊥ ∩ int K* ≠ ∅`; bracket built from `ν̄`.
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub side: Side,
    /// `ν(L)` or `ν̄(L)`, equal to the Grassmann distance to `Σ_m` on that side.
    pub grassmann: MeasureCertificate,
    pub op: OpNorms,
    /// `grassmann / ‖A⁻¹‖ ≤ Rdist`.
    pub lower: f64,
    /// `Rdist ≤ grassmann · ‖A‖`.
    pub upper: f64,
    pub rdist_estimate: Option<f64>,
}

impl SandwichReport {
    pub fn grassmann_value(&self) -> f64 {
        self.grassmann.value
    }

    /// Whether `estimate` lies in `[lower − slack, upper + slack]`.
    pub fn contains(&self, estimate: f64, slack: f64) -> bool {
        estimate >= self.lower - slack && estimate <= self.upper + slack
    }
}

pub fn renegar_sandwich(a: &LinearMap, k: &Cone) -> Result<SandwichReport> {
    renegar_sandwich_with(a, k, &Budget::default())
}

pub fn renegar_sandwich_with(a: &LinearMap, k: &Cone, budget: &Budget) -> Result<SandwichReport> {
    let l = a.image()?;
    let nu = nu_with(&l, k, &a.norms, budget)?;
    let (side, grassmann) = if nu.value > FEASIBLE_TOL {
        (Side::Feasible, nu)
    } else {
        let nb = nu_bar_with(&l, k, &a.norms, budget)?;
        if nb.value <= FEASIBLE_TOL {
            return Err(Error::IllPosedInstance);
        }
        (Side::Infeasible, nb)
    };
    let op = op_norms(a)?;
    let g = grassmann.value;
    Ok(SandwichReport {
        side,
        lower: g / op.inverse_norm,
        upper: g * op.norm,
        grassmann,
        op,
        rdist_estimate: None,
    })
}

#[derive(Debug, Clone)]
pub struct Preconditioned {
    /// Cone automorphism with `P x₀ = e`.
    pub p: DMatrix<f64>,
    /// Domain change with `(PAR)ᵀ(PAR) = I`.
    pub r: DMatrix<f64>,
    /// Interior point of `Image(A)` maximizing `λ_e` on the unit sphere, rescaled to `λ_min(x₀) = 1`.
    pub x0: DVector<f64>,
    /// `PAR`.
    pub balanced: DMatrix<f64>,
    /// `‖(PAR)ᵀ(PAR) − I‖_max`.
    pub balance_residual: f64,
    /// `ν(P·L)` under ℓ2/ℓ2.
    pub nu: MeasureCertificate,
    /// `1/√r`.
    pub bound: f64,
    /// `ν(P·L) ≥ 1/√r − 1e-7`, using the certified lower end when sampled.
    pub holds: bool,
}

pub fn precondition(a: &LinearMap, k: &Cone) -> Result<Preconditioned> {
    precondition_with(a, k, &Budget::default())
}

pub fn precondition_with(a: &LinearMap, k: &Cone, budget: &Budget) -> Result<Preconditioned> {
    if !a.norms.is_euclidean() || a.domain_norm.kind != NormKind::L2 {
        return Err(Error::UnsupportedNorm(
            "preconditioning needs l2 norms everywhere".into(),
        ));
    }
    if !k.is_symmetric() {
        return Err(Error::NotSymmetric(format!("{k:?}")));
    }
    let l = a.image()?;
    if l.ambient_dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: l.ambient_dim(),
        });
    }
    let (val, x, _) = max_lambda_e(&l, k, &NormSpec::l2())?;
    if val <= FEASIBLE_TOL {
        return Err(Error::InfeasibleSide);
    }
    let x0 = &x / k.lambda_e(&x);
    let p = k.automorphism_to_identity(&x0)?;
    let pa = &p * &a.matrix;
    let m = pa.ncols();
    let rtri = pa.clone().qr().r();
    let r = rtri
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("QR factor of PA is singular".into()))?;
    let balanced = &pa * &r;
    let balance_residual =
        (balanced.transpose() * &balanced - DMatrix::<f64>::identity(m, m)).amax();
    let pl = Subspace::from_columns(&balanced)?;
    let nu = nu_with(&pl, k, &NormPair::euclidean(), budget)?;
    let bound = 1.0 / (k.rank() as f64).sqrt();
    let certified = nu.bracket.map_or(nu.value, |(lo, _)| lo);
    let holds = certified >= bound - 1e-7;
    Ok(Preconditioned {
        p,
        r,
        x0,
        balanced,
        balance_residual,
        nu,
        bound,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn isometry_has_unit_condition() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = LinearMap::euclidean(m(3, 2, &[s, 0.0, s, 0.0, 0.0, 1.0])).unwrap();
        let op = op_norms(&a).unwrap();
        assert!((op.norm - 1.0).abs() < 1e-12);
        assert!((op.inverse_norm - 1.0).abs() < 1e-12);
        assert!((op.kappa - 1.0).abs() < 1e-9);
    }

    #[test]
    fn padded_diagonal() {
        let a = LinearMap::euclidean(m(3, 2, &[2.0, 0.0, 0.0, 1.0, 0.0, 0.0])).unwrap();
        let op = op_norms(&a).unwrap();
        assert!((op.norm - 2.0).abs() < 1e-12);
        assert!((op.inverse_norm - 1.0).abs() < 1e-12);
        assert!((op.kappa - 2.0).abs() < 1e-12);
    }

    #[test]
    fn column_into_l1() {
        let np = NormPair::new(NormSpec::l1(), NormSpec::l1());
        let a = LinearMap::new(m(2, 1, &[1.0, 1.0]), NormSpec::l2(), np).unwrap();
        let op = op_norms(&a).unwrap();
        assert_eq!(op.norm, 2.0);
        assert_eq!(op.inverse_norm, 0.5);
    }

    #[test]
    fn polyhedral_norms_agree_with_brute_force() {
        let a = m(3, 2, &[1.0, -2.0, 0.5, 1.0, -1.0, 3.0]);
        for (dom, cod) in [
            (NormSpec::l1(), NormSpec::linf()),
            (NormSpec::linf(), NormSpec::l1()),
            (NormSpec::l2(), NormSpec::l1()),
            (NormSpec::l2(), NormSpec::linf()),
            (NormSpec::linf(), NormSpec::l2()),
        ] {
            let exact = operator_norm(&a, &dom, &cod).unwrap();
            let inv = inverse_norm(&a, &dom, &cod).unwrap();
            let mut best = 0.0f64;
            let mut best_inv = 0.0f64;
            for i in 0..20000 {
                let t = i as f64 * std::f64::consts::TAU / 20000.0;
                let w = DVector::from_vec(vec![t.cos(), t.sin()]);
                let w = &w / dom.eval(&w).unwrap();
                let x = &a * &w;
                best = best.max(cod.eval(&x).unwrap());
                best_inv = best_inv.max(1.0 / cod.eval(&x).unwrap());
            }
            assert!(
                exact >= best - 1e-12 && exact <= best * (1.0 + 1e-3),
                "{exact} vs {best}"
            );
            assert!(
                inv >= best_inv - 1e-12 && inv <= best_inv * (1.0 + 1e-3),
                "{inv} vs {best_inv}"
            );
        }
    }

    #[test]
    fn rank_deficient_map_is_rejected() {
        let a = LinearMap::euclidean(m(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0])).unwrap();
        assert!(matches!(op_norms(&a), Err(Error::NotInjective(_))));
    }

    #[test]
    fn sandwich_of_isometry_collapses() {
        let a = LinearMap::euclidean(m(2, 1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2])).unwrap();
        let r = renegar_sandwich(&a, &Cone::Orthant(2)).unwrap();
        assert_eq!(r.side, Side::Feasible);
        assert!((r.lower - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((r.upper - FRAC_1_SQRT_2).abs() < 1e-12);
        // a scaled isometry still has κ = 1, so Rdist = 2ν is pinned exactly
        let r2 = renegar_sandwich(&a.scaled(2.0), &Cone::Orthant(2)).unwrap();
        assert!((r2.lower - 2.0 * FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((r2.upper - 2.0 * FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn sandwich_on_infeasible_side() {
        let a = LinearMap::euclidean(m(2, 1, &[1.0, -1.0])).unwrap();
        let r = renegar_sandwich(&a, &Cone::Orthant(2)).unwrap();
        assert_eq!(r.side, Side::Infeasible);
        assert!((r.grassmann_value() - FRAC_1_SQRT_2).abs() < 1e-12);
        let ill = LinearMap::euclidean(m(2, 1, &[1.0, 0.0])).unwrap();
        assert!(matches!(
            renegar_sandwich(&ill, &Cone::Orthant(2)),
            Err(Error::IllPosedInstance)
        ));
    }

    #[test]
    fn precondition_skew_line() {
        let a = LinearMap::euclidean(m(2, 1, &[2.0, 1.0])).unwrap();
        let p = precondition(&a, &Cone::Orthant(2)).unwrap();
        assert!((&p.x0 - DVector::from_vec(vec![2.0, 1.0])).amax() < 1e-9);
        assert!((&p.p - m(2, 2, &[0.5, 0.0, 0.0, 1.0])).amax() < 1e-9);
        assert!(p.balance_residual < 1e-10);
        assert!(p.holds);
        assert!((p.nu.value - FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn precondition_along_identity() {
        let a = LinearMap::euclidean(m(3, 1, &[1.0, 1.0, 1.0])).unwrap();
        let p = precondition(&a, &Cone::Orthant(3)).unwrap();
        assert!((&p.p - DMatrix::<f64>::identity(3, 3)).amax() < 1e-9);
        assert!((p.nu.value - 1.0 / 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn precondition_rejects_infeasible_image() {
        let a = LinearMap::euclidean(m(2, 1, &[1.0, -1.0])).unwrap();
        assert!(matches!(
            precondition(&a, &Cone::Orthant(2)),
            Err(Error::InfeasibleSide)
        ));
    }
}
