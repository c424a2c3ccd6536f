//! Goldman–Tucker partition for `K = Rⁿ₊` and the block structure it induces.
//!
//! Indices are 0-based. `B` collects coordinates that some `x ∈ L ∩ Rⁿ₊` makes positive,
//! `N` those that some `y ∈ L⊥ ∩ Rⁿ₊` makes positive; exactly one of the two holds per index.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::lp::{solve_lp, LpProblem, RowKind, Sense};
use crate::measures::kernels::{add_free_vars, basis_exprs, max_lambda_e, FEASIBLE_TOL};
use crate::measures::{nu_with, sigma_with, Budget, MeasureCertificate, NormPair, Path};
use crate::norms::{NormKind, NormSpec};
use crate::renegar::{renegar_sandwich_with, LinearMap, SandwichReport};

/// Strict positivity threshold separating `B` from `N`.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GtPartition {
    pub b: Vec<usize>,
    pub n: Vec<usize>,
    /// In `L ∩ Rⁿ₊`, support exactly `B`, entries summing to 1 (zero vector when `B = ∅`).
    pub x_cert: DVector<f64>,
    /// In `L⊥ ∩ Rⁿ₊`, support exactly `N`, entries summing to 1 (zero vector when `N = ∅`).
    pub y_cert: DVector<f64>,
}

impl GtPartition {
    pub fn dim(&self) -> usize {
        self.x_cert.len()
    }

    /// Both blocks nonempty, i.e. `L` is ill-posed.
    pub fn is_mixed(&self) -> bool {
        !self.b.is_empty() && !self.n.is_empty()
    }
}

/// `max xᵢ` over `x ∈ S ∩ Rⁿ₊`, `Σx ≤ 1`, with its maximizer.
fn index_lp(s: &Subspace, i: usize) -> Result<(f64, DVector<f64>)> {
    let b = s.basis();
    let m = b.ncols();
    let mut lp = LpProblem::new(Sense::Maximize, vec![]);
    let w0 = add_free_vars(&mut lp, m);
    let exprs = basis_exprs(b, w0);
    for e in &exprs {
        lp.add_sparse_row(e, RowKind::Ge, 0.0);
    }
    let total: Vec<(usize, f64)> = (0..m).map(|j| (w0 + j, b.column(j).sum())).collect();
    lp.add_sparse_row(&total, RowKind::Le, 1.0);
    for &(j, c) in &exprs[i] {
        lp.objective[j] = c;
    }
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Err(Error::NumericalFailure(format!(
            "support LP for index {i} is {:?}",
            sol.status
        )));
    }
    let x = (b * sol.x.rows(w0, m)).map(|v| v.max(0.0));
    Ok((sol.objective, x))
}

/// Support indices and normalized sum of per-index maximizers.
fn support_side(s: Option<&Subspace>, n: usize) -> Result<(Vec<usize>, DVector<f64>)> {
    let Some(s) = s else {
        return Ok((vec![], DVector::zeros(n)));
    };
    let sols: Vec<(f64, DVector<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| index_lp(s, i))
        .collect::<Result<_>>()?;
    let mut support = Vec::new();
    let mut cert = DVector::zeros(n);
    for (i, (val, x)) in sols.into_iter().enumerate() {
        if val > SUPPORT_TOL {
            support.push(i);
            cert += x;
        }
    }
    let total = cert.sum();
    if total > 0.0 {
        cert /= total;
    }
    Ok((support, cert))
}

pub fn goldman_tucker(l: &Subspace) -> Result<GtPartition> {
    let n = l.ambient_dim();
    let perp = l.complement();
    let (b, mut x_cert) = support_side(Some(l), n)?;
    let (nn, mut y_cert) = support_side((perp.dim() > 0).then_some(&perp), n)?;
    let mut seen = vec![0u8; n];
    for &i in &b {
        seen[i] += 1;
    }
    for &i in &nn {
        seen[i] += 1;
    }
    if let Some(i) = seen.iter().position(|&c| c != 1) {
        return Err(Error::NumericalFailure(format!(
            "index {i} is in {} blocks",
            seen[i]
        )));
    }
    for &i in &nn {
        if x_cert[i] > SUPPORT_TOL {
            return Err(Error::NumericalFailure(format!(
                "x certificate is positive on N index {i}"
            )));
        }
        x_cert[i] = 0.0;
    }
    for &i in &b {
        if y_cert[i] > SUPPORT_TOL {
            return Err(Error::NumericalFailure(format!(
                "y certificate is positive on B index {i}"
            )));
        }
        y_cert[i] = 0.0;
    }
    for &i in &b {
        if x_cert[i] <= SUPPORT_TOL {
            return Err(Error::NumericalFailure(format!(
                "x certificate vanishes on B index {i}"
            )));
        }
    }
    for &i in &nn {
        if y_cert[i] <= SUPPORT_TOL {
            return Err(Error::NumericalFailure(format!(
                "y certificate vanishes on N index {i}"
            )));
        }
    }
    Ok(GtPartition {
        b,
        n: nn,
        x_cert,
        y_cert,
    })
}

/// Norm of the same family on a coordinate block of dimension `d`.
fn restrict_norm(spec: &NormSpec, d: usize) -> NormSpec {
    match spec.kind {
        NormKind::InducedE => NormSpec::induced_e(Cone::Orthant(d)),
        NormKind::InducedEDual => NormSpec::induced_e_dual(Cone::Orthant(d)),
        _ => spec.clone(),
    }
}

fn restrict_pair(np: &NormPair, d: usize) -> NormPair {
    NormPair::new(restrict_norm(&np.primal, d), restrict_norm(&np.tri, d))
}

fn select_rows(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), a.ncols(), |r, j| a[(rows[r], j)])
}

/// A coordinate section of a subspace, which may fill its block.
#[derive(Debug, Clone)]
pub enum Section {
    Proper(Subspace),
    /// All of `R^d`.
    Full(usize),
}

/// `{x_I : x ∈ S, x_J = 0}` as a subspace of `R^I`, where `J` is the complement of `I`.
fn coordinate_section(s: &Subspace, keep: &[usize], zero: &[usize]) -> Result<Option<Section>> {
    let basis = s.basis();
    let rows = select_rows(basis, zero);
    // the basis is orthonormal, so an absolute cut separates vanishing rows
    let w = if zero.is_empty() || rows.amax() <= SUPPORT_TOL {
        DMatrix::identity(s.dim(), s.dim())
    } else {
        match Subspace::kernel_of(&rows) {
            Ok(k) => k.basis().clone(),
            Err(Error::DegenerateSubspace { rank, .. }) if rank == 0 => return Ok(None),
            // rows vanish identically: the kernel is everything
            Err(Error::DegenerateSubspace { .. }) => DMatrix::identity(s.dim(), s.dim()),
            Err(e) => return Err(e),
        }
    };
    let sec = select_rows(basis, keep) * w;
    match Subspace::from_columns(&sec) {
        Ok(sub) => Ok(Some(Section::Proper(sub))),
        Err(Error::DegenerateSubspace { rank, ambient }) if rank >= ambient && ambient > 0 => {
            Ok(Some(Section::Full(ambient)))
        }
        Err(Error::DegenerateSubspace { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `ν` and `σ` of the whole space `R^d` over `R^d₊`.
///
/// `ν = min{‖u‖* : u ≥ 0, |||u|||* = 1}` and `σ = 1/max{‖v‖ : v ≥ 0, |||v||| = 1}`; for the
/// permutation-invariant monotone norms used here both extremes sit at `e` or at `e₁`.
fn full_space_measures(
    d: usize,
    np: &NormPair,
) -> Result<(MeasureCertificate, MeasureCertificate)> {
    let e = DVector::from_element(d, 1.0);
    let mut e1 = DVector::zeros(d);
    e1[0] = 1.0;
    let nu = (np.primal.dual_eval(&e)? / np.tri.dual_eval(&e)?)
        .min(np.primal.dual_eval(&e1)? / np.tri.dual_eval(&e1)?);
    let ratio =
        (np.primal.eval(&e)? / np.tri.eval(&e)?).max(np.primal.eval(&e1)? / np.tri.eval(&e1)?);
    Ok((
        MeasureCertificate::new(nu, Path::ClosedForm),
        MeasureCertificate::new(1.0 / ratio, Path::ClosedForm),
    ))
}

#[derive(Debug, Clone)]
pub struct BlockMeasures {
    pub indices: Vec<usize>,
    /// `L_B ⊂ R^B` or `L_N ⊂ R^N`.
    pub section: Section,
    pub nu: MeasureCertificate,
    pub sigma: MeasureCertificate,
}

/// Measures of the two well-posed subproblems; an empty block is absent.
#[derive(Debug, Clone)]
pub struct PartitionMeasures {
    pub partition: GtPartition,
    pub b: Option<BlockMeasures>,
    pub n: Option<BlockMeasures>,
}

pub fn partition_measures(l: &Subspace, np: &NormPair) -> Result<PartitionMeasures> {
    partition_measures_with(l, np, &Budget::default())
}

pub fn partition_measures_with(
    l: &Subspace,
    np: &NormPair,
    budget: &Budget,
) -> Result<PartitionMeasures> {
    np.validate(l.ambient_dim())?;
    let gt = goldman_tucker(l)?;
    let block = |s: &Subspace, keep: &[usize], zero: &[usize]| -> Result<Option<BlockMeasures>> {
        if keep.is_empty() {
            return Ok(None);
        }
        let sub = coordinate_section(s, keep, zero)?.ok_or_else(|| {
            Error::NumericalFailure("nonempty block has a trivial section".into())
        })?;
        block_measures(keep, sub, np, budget).map(Some)
    };
    let b = block(l, &gt.b, &gt.n)?;
    let n = block(&l.complement(), &gt.n, &gt.b)?;
    Ok(PartitionMeasures {
        partition: gt,
        b,
        n,
    })
}

fn block_measures(
    keep: &[usize],
    section: Section,
    np: &NormPair,
    budget: &Budget,
) -> Result<BlockMeasures> {
    let d = keep.len();
    let k = Cone::Orthant(d);
    let pair = restrict_pair(np, d);
    let (nu, sigma) = match &section {
        Section::Proper(sub) => (
            nu_with(sub, &k, &pair, budget)?,
            sigma_with(sub, &k, &pair, budget)?,
        ),
        Section::Full(_) => full_space_measures(d, &pair)?,
    };
    Ok(BlockMeasures {
        indices: keep.to_vec(),
        section,
        nu,
        sigma,
    })
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub partition: GtPartition,
    /// Orthonormal basis of `Rᵐ_B = Image(A_Bᵀ)`, `m × k`.
    pub domain_b: DMatrix<f64>,
    /// Orthonormal basis of `Rᵐ_N = ker(A_B)`, `m × (m − k)`.
    pub domain_n: DMatrix<f64>,
    pub a_bb: Option<DMatrix<f64>>,
    pub a_nb: Option<DMatrix<f64>>,
    pub a_nn: Option<DMatrix<f64>>,
    /// `max |A[U_B U_N] − [[A_BB, 0], [A_NB, A_NN]]|` with rows ordered `B` then `N`.
    pub reconstruction_residual: f64,
    pub sandwich_b: Option<SandwichReport>,
    pub sandwich_n: Option<SandwichReport>,
}

fn orthonormal_split(ab: &DMatrix<f64>, m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    if ab.nrows() == 0 {
        return (DMatrix::zeros(m, 0), DMatrix::identity(m, m));
    }
    // right singular vectors split Rᵐ into the row space and kernel of A_B
    let svd = nalgebra::linalg::SVD::new(ab.transpose() * ab, true, false);
    let u = svd.u.expect("requested");
    let scale = svd.singular_values.max().max(1.0);
    let k = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-12 * scale)
        .count();
    (
        u.columns(0, k).into_owned(),
        u.columns(k, m - k).into_owned(),
    )
}

fn full_column_rank(a: &DMatrix<f64>) -> bool {
    a.ncols() == 0 || {
        let s = a.clone().svd(false, false).singular_values;
        s.min() > 1e-10 * s.max().max(1.0)
    }
}

pub fn block_decompose(a: &LinearMap, gt: &GtPartition) -> Result<BlockDecomposition> {
    block_decompose_with(a, gt, &Budget::default())
}

pub fn block_decompose_with(
    a: &LinearMap,
    gt: &GtPartition,
    budget: &Budget,
) -> Result<BlockDecomposition> {
    a.check_injective()?;
    let (n, m) = a.matrix.shape();
    if gt.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gt.dim(),
        });
    }
    let ab = select_rows(&a.matrix, &gt.b);
    let an = select_rows(&a.matrix, &gt.n);
    let (ub, un) = orthonormal_split(&ab, m);
    let nonempty = |x: DMatrix<f64>| (x.nrows() > 0 && x.ncols() > 0).then_some(x);
    let a_bb = nonempty(&ab * &ub);
    let a_nb = nonempty(&an * &ub);
    let a_nn = nonempty(&an * &un);
    if let Some(x) = &a_bb {
        if !full_column_rank(x) {
            return Err(Error::RankDeficientBlock("A_BB"));
        }
    }
    if let Some(x) = &a_nn {
        if !full_column_rank(x) {
            return Err(Error::RankDeficientBlock("A_NN"));
        }
    }
    let reconstruction_residual = if un.ncols() > 0 && ab.nrows() > 0 {
        (&ab * &un).amax()
    } else {
        0.0
    };
    let sub_map = |x: &DMatrix<f64>| {
        LinearMap::new(
            x.clone(),
            a.domain_norm.clone(),
            restrict_pair(&a.norms, x.nrows()),
        )
        .and_then(|map| renegar_sandwich_with(&map, &Cone::Orthant(x.nrows()), budget))
    };
    // a square block maps onto its whole coordinate space, where the sandwich is not defined
    let sandwich_b = a_bb
        .as_ref()
        .filter(|x| x.ncols() < x.nrows())
        .map(sub_map)
        .transpose()?;
    let sandwich_n = a_nn
        .as_ref()
        .filter(|x| x.ncols() < x.nrows())
        .map(sub_map)
        .transpose()?;
    Ok(BlockDecomposition {
        partition: gt.clone(),
        domain_b: ub,
        domain_n: un,
        a_bb,
        a_nb,
        a_nn,
        reconstruction_residual,
        sandwich_b,
        sandwich_n,
    })
}

#[derive(Debug, Clone)]
pub struct PartitionPreconditioned {
    /// Diagonal of `D`.
    pub d: DVector<f64>,
    pub r: DMatrix<f64>,
    /// `Â = D A R`.
    pub mapped: DMatrix<f64>,
    pub same_partition: bool,
    /// `ν((DL)_B)` under ℓ2/ℓ2 with its bound `1/√|B|`.
    pub nu_b: Option<(MeasureCertificate, f64)>,
    /// `ν((DL)_N)` under ℓ2/ℓ2 with its bound `1/√|N|`.
    pub nu_n: Option<(MeasureCertificate, f64)>,
    /// Both `1/ν ≤ √|block|` inequalities hold with `1e-7` slack.
    pub holds: bool,
}

/// Most interior point of a coordinate section, rescaled to minimum entry 1.
fn interior_point(section: &Section) -> Result<DVector<f64>> {
    let s = match section {
        Section::Full(d) => return Ok(DVector::from_element(*d, 1.0)),
        Section::Proper(s) => s,
    };
    let k = Cone::Orthant(s.ambient_dim());
    let (val, x, _) = max_lambda_e(s, &k, &NormSpec::l2())?;
    if val <= FEASIBLE_TOL {
        return Err(Error::NumericalFailure(
            "block section has no interior point".into(),
        ));
    }
    Ok(&x / x.min())
}

fn balance(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    x.clone()
        .qr()
        .r()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("QR factor of a block is singular".into()))
}

pub fn partition_precondition(a: &LinearMap) -> Result<PartitionPreconditioned> {
    partition_precondition_with(a, &Budget::default())
}

pub fn partition_precondition_with(
    a: &LinearMap,
    budget: &Budget,
) -> Result<PartitionPreconditioned> {
    if !a.norms.is_euclidean() || a.domain_norm.kind != NormKind::L2 {
        return Err(Error::UnsupportedNorm(
            "partition preconditioning needs l2 norms everywhere".into(),
        ));
    }
    let l = a.image()?;
    let (n, m) = a.matrix.shape();
    let gt = goldman_tucker(&l)?;
    let mut d = DVector::from_element(n, 1.0);
    if !gt.b.is_empty() {
        let lb = coordinate_section(&l, &gt.b, &gt.n)?.ok_or(Error::RankDeficientBlock("L_B"))?;
        let x0 = interior_point(&lb)?;
        for (r, &i) in gt.b.iter().enumerate() {
            d[i] = 1.0 / x0[r];
        }
    }
    if !gt.n.is_empty() {
        // (DL)⊥ = D⁻¹L⊥, so scaling by y₀ maps the interior point of L_N to the ones vector
        let ln = coordinate_section(&l.complement(), &gt.n, &gt.b)?
            .ok_or(Error::RankDeficientBlock("L_N"))?;
        let y0 = interior_point(&ln)?;
        for (r, &i) in gt.n.iter().enumerate() {
            d[i] = y0[r];
        }
    }
    let da = DMatrix::from_diagonal(&d) * &a.matrix;
    let ab = select_rows(&da, &gt.b);
    let an = select_rows(&da, &gt.n);
    let (ub, un) = orthonormal_split(&ab, m);
    let mut r = DMatrix::zeros(m, m);
    let k = ub.ncols();
    if k > 0 {
        r.columns_mut(0, k)
            .copy_from(&(&ub * balance(&(&ab * &ub))?));
    }
    if k < m {
        r.columns_mut(k, m - k)
            .copy_from(&(&un * balance(&(&an * &un))?));
    }
    let mapped = &da * &r;
    let dl = Subspace::from_columns(&mapped)?;
    let gt2 = goldman_tucker(&dl)?;
    let same_partition = gt2.b == gt.b && gt2.n == gt.n;
    let euclid = NormPair::euclidean();
    let measure = |s: &Subspace,
                   keep: &[usize],
                   zero: &[usize]|
     -> Result<Option<(MeasureCertificate, f64)>> {
        if keep.is_empty() {
            return Ok(None);
        }
        let nu = match coordinate_section(s, keep, zero)?
            .ok_or(Error::RankDeficientBlock("preconditioned block"))?
        {
            Section::Proper(sub) => nu_with(&sub, &Cone::Orthant(keep.len()), &euclid, budget)?,
            Section::Full(d) => full_space_measures(d, &euclid)?.0,
        };
        Ok(Some((nu, 1.0 / (keep.len() as f64).sqrt())))
    };
    let nu_b = measure(&dl, &gt.b, &gt.n)?;
    let nu_n = measure(&dl.complement(), &gt.n, &gt.b)?;
    let ok = |x: &Option<(MeasureCertificate, f64)>| {
        x.as_ref().map_or(true, |(c, bound)| {
            c.bracket.map_or(c.value, |(lo, _)| lo) >= bound - 1e-7
        })
    };
    let holds = same_partition && ok(&nu_b) && ok(&nu_n);
    Ok(PartitionPreconditioned {
        d,
        r,
        mapped,
        same_partition,
        nu_b,
        nu_n,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(x: &[f64]) -> Subspace {
        Subspace::from_vectors(&[DVector::from_vec(x.to_vec())]).unwrap()
    }

    fn l1_linf() -> NormPair {
        NormPair::new(NormSpec::l1(), NormSpec::linf())
    }

    #[test]
    fn mixed_partition_of_r3() {
        let gt = goldman_tucker(&line(&[1.0, 1.0, 0.0])).unwrap();
        assert_eq!(gt.b, vec![0, 1]);
        assert_eq!(gt.n, vec![2]);
        assert!((&gt.x_cert - DVector::from_vec(vec![0.5, 0.5, 0.0])).amax() < 1e-12);
        assert!((&gt.y_cert - DVector::from_vec(vec![0.0, 0.0, 1.0])).amax() < 1e-12);
        assert_eq!(gt.x_cert.dot(&gt.y_cert), 0.0);
    }

    #[test]
    fn section_keeps_dimension_when_zeroed_rows_vanish() {
        let basis = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, -1.0]);
        let s = Subspace::from_columns(&basis).unwrap();
        match coordinate_section(&s, &[1, 2, 3], &[0]).unwrap() {
            Some(Section::Proper(sec)) => assert_eq!(sec.dim(), 2),
            other => panic!("unexpected section {other:?}"),
        }
        let pm = partition_measures(&s, &l1_linf()).unwrap();
        assert!(pm.b.unwrap().nu.value > 1e-3);
    }

    #[test]
    fn one_sided_partitions() {
        let gt = goldman_tucker(&line(&[1.0, 1.0])).unwrap();
        assert_eq!((gt.b, gt.n), (vec![0, 1], vec![]));
        let gt = goldman_tucker(&line(&[1.0, -1.0])).unwrap();
        assert_eq!((gt.b, gt.n), (vec![], vec![0, 1]));
    }

    #[test]
    fn partitioned_measures_under_l1_linf() {
        let pm = partition_measures(&line(&[1.0, 1.0, 0.0]), &l1_linf()).unwrap();
        let b = pm.b.unwrap();
        let n = pm.n.unwrap();
        assert!((b.nu.value - 0.5).abs() < 1e-12, "{}", b.nu.value);
        assert!((n.nu.value - 1.0).abs() < 1e-12, "{}", n.nu.value);
        assert!((b.sigma.value - b.nu.value).abs() < 1e-9);
    }

    #[test]
    fn empty_block_is_absent() {
        let l = line(&[2.0, 1.0]);
        let pm = partition_measures(&l, &l1_linf()).unwrap();
        assert!(pm.n.is_none());
        let direct = nu_with(&l, &Cone::Orthant(2), &l1_linf(), &Budget::default()).unwrap();
        assert!((pm.b.unwrap().nu.value - direct.value).abs() < 1e-12);
    }

    #[test]
    fn block_slicing() {
        let a = LinearMap::euclidean(DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0])).unwrap();
        let gt = goldman_tucker(&a.image().unwrap()).unwrap();
        let bd = block_decompose(&a, &gt).unwrap();
        assert!(
            (bd.a_bb.as_ref().unwrap().abs() - DMatrix::from_row_slice(2, 1, &[1.0, 1.0])).amax()
                < 1e-12
        );
        assert!(bd.a_nn.is_none());
        assert!(bd.sandwich_b.is_some());
    }

    #[test]
    fn preconditioning_reduces_to_cone_scaling() {
        let a = LinearMap::euclidean(DMatrix::from_row_slice(2, 1, &[2.0, 1.0])).unwrap();
        let p = partition_precondition(&a).unwrap();
        assert!((&p.d - DVector::from_vec(vec![0.5, 1.0])).amax() < 1e-9);
        assert!(p.holds);
        let a = LinearMap::euclidean(DMatrix::from_row_slice(2, 1, &[1.0, -1.0])).unwrap();
        let p = partition_precondition(&a).unwrap();
        assert!((&p.d - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-9);
        assert!(p.holds);
    }

    #[test]
    fn preconditioning_mixed_example() {
        let a = LinearMap::euclidean(DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0])).unwrap();
        let p = partition_precondition(&a).unwrap();
        assert!(p.same_partition);
        assert!(p.holds);
        assert!(p.nu_b.is_some() && p.nu_n.is_some());
    }
}
