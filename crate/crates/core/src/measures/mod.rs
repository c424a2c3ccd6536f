//! Condition measures of the feasibility problem `x ∈ L ∩ K ∖ {0}` with witnesses.
//!
//! Every measure returns a [`MeasureCertificate`] recording the computation [`Path`].
//! Exact paths carry witnesses that satisfy the optimality conditions up to
//! `alignment_residual`; sampled paths carry a bracket around the reported value.

mod critical;
mod distance;
pub(crate) mod kernels;
mod sigma;

pub use critical::{critical_subspace_feasible, critical_subspace_infeasible};
pub use distance::{dist, dist_upper_bound, dist_with, odist, odist_upper_bound, odist_with};
pub use kernels::FEASIBLE_TOL;
pub use sigma::{sigma, sigma_with, sym, sym_via_kernel_map, sym_with};

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::linalg::{min_norm_to_subspace, Subspace};
use crate::lp::{LpProblem, RowKind, Sense};
use crate::lsq::ldp;
use crate::norms::{NormKind, NormSpec};

use kernels::*;

/// The primal norm `‖·‖` and the residual norm `|||·|||`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormPair {
    pub primal: NormSpec,
    pub tri: NormSpec,
}

impl NormPair {
    pub fn new(primal: NormSpec, tri: NormSpec) -> Self {
        NormPair { primal, tri }
    }

    pub fn euclidean() -> Self {
        NormPair::new(NormSpec::l2(), NormSpec::l2())
    }

    /// Both norms must be evaluable on `Rⁿ`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let z = DVector::zeros(n);
        self.primal.eval(&z)?;
        self.tri.eval(&z)?;
        Ok(())
    }

    /// `(|||·|||*, ‖·‖*)`: the pair under which the dual problem on `L⊥` mirrors this one.
    pub fn dual_roles(&self) -> NormPair {
        NormPair::new(self.tri.dual(), self.primal.dual())
    }

    pub fn is_euclidean(&self) -> bool {
        self.primal.kind == NormKind::L2 && self.tri.kind == NormKind::L2
    }

    pub fn is_polyhedral(&self) -> bool {
        self.primal.is_polyhedral() && self.tri.is_polyhedral()
    }
}

/// How a value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Path {
    ClosedForm,
    LpExact,
    /// Nonnegative least squares / least-distance active-set solve.
    ActiveSet,
    /// Finite enumeration of faces, vertices or stationary points.
    Enumeration,
    /// Convergent iteration (ellipsoid or bisection) to a fixed tolerance.
    Iterative,
    Sampled,
}

impl Path {
    pub fn is_exact(self) -> bool {
        self != Path::Sampled
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Value of a measure with optional witnesses `ū ∈ K*`, `ȳ ∈ L⊥`, `x̄ ∈ L`, `v̄ ∈ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCertificate {
    pub value: f64,
    pub path: Path,
    /// `[lo, hi]` containing the true value when the path is sampled or bounded.
    pub bracket: Option<(f64, f64)>,
    pub u: Option<DVector<f64>>,
    pub y: Option<DVector<f64>>,
    pub x: Option<DVector<f64>>,
    pub v: Option<DVector<f64>>,
    pub alignment_residual: f64,
    /// The instance lies on the other side of the ill-posed set (`L ∩ int K = ∅` for the primal measures).
    pub infeasible_side: bool,
    /// False when the defining infimum is approached but not attained.
    pub attained: bool,
}

impl MeasureCertificate {
    pub fn new(value: f64, path: Path) -> Self {
        MeasureCertificate {
            value,
            path,
            bracket: None,
            u: None,
            y: None,
            x: None,
            v: None,
            alignment_residual: 0.0,
            infeasible_side: false,
            attained: true,
        }
    }

    pub fn is_approximate(&self) -> bool {
        !self.path.is_exact()
    }

    /// Sampled minimization: the best value is an upper bound.
    pub(crate) fn sampled_min(value: f64) -> Self {
        let mut c = MeasureCertificate::new(value, Path::Sampled);
        c.bracket = Some((value / 1.05, value));
        c
    }

    /// Sampled maximization: the best value is a lower bound.
    pub(crate) fn sampled_max(value: f64) -> Self {
        let mut c = MeasureCertificate::new(value, Path::Sampled);
        c.bracket = Some((value, value * 1.05));
        c
    }

    fn with_u(mut self, u: DVector<f64>) -> Self {
        self.u = Some(u);
        self
    }
    fn with_y(mut self, y: DVector<f64>) -> Self {
        self.y = Some(y);
        self
    }
    fn with_x(mut self, x: DVector<f64>) -> Self {
        self.x = Some(x);
        self
    }
    fn with_v(mut self, v: DVector<f64>) -> Self {
        self.v = Some(v);
        self
    }
}

/// Sampling effort for paths without an exact method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub samples: usize,
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            samples: 10_000,
            refine_steps: 50,
            seed: 0,
        }
    }
}

impl Budget {
    pub fn with_seed(seed: u64) -> Self {
        Budget {
            seed,
            ..Budget::default()
        }
    }
}

// stream identifiers keep the random sequences of different measures independent
const SALT_NU: u64 = 1;
const SALT_NU_BAR: u64 = 2;
const SALT_THETA: u64 = 7;

pub(crate) fn check_instance(l: &Subspace, k: &Cone, np: &NormPair) -> Result<()> {
    k.validate()?;
    if l.ambient_dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: l.ambient_dim(),
        });
    }
    np.validate(k.dim())
}

/// Largest violation among the optimality conditions of `ν`:
/// `|||ū|||* = 1`, `‖x̄‖ = 1`, `⟨ū − ȳ, x̄⟩ = ⟨ū, x̄⟩ = ‖ū − ȳ‖* = ν`.
pub(crate) fn nu_residual(
    np: &NormPair,
    value: f64,
    u: &DVector<f64>,
    y: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<f64> {
    let d = u - y;
    Ok([
        (np.primal.dual_eval(&d)? - value).abs(),
        (d.dot(x) - value).abs(),
        (u.dot(x) - value).abs(),
        (np.tri.dual_eval(u)? - 1.0).abs(),
        (np.primal.eval(x)? - 1.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

pub fn nu(l: &Subspace, k: &Cone, np: &NormPair) -> Result<MeasureCertificate> {
    nu_with(l, k, np, &Budget::default())
}

/// `ν(L) = min{‖u − y‖* : u ∈ K*, |||u|||* = 1, y ∈ L⊥}`.
pub fn nu_with(
    l: &Subspace,
    k: &Cone,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    check_instance(l, k, np)?;
    let mut cert = if k.is_orthant_like() && np.is_polyhedral() {
        nu_polyhedral(l, np)?
    } else if np.tri.is_induced_e_for(k) {
        nu_induced(l, k, np)?
    } else if np.is_euclidean() {
        match k.dual().generators().filter(|g| g.ncols() <= ENUM_LIMIT) {
            Some(g) => nu_euclidean_polyhedral(l, &g)?,
            None if k.is_symmetric() => nu_euclidean_symmetric(l, k, budget)?,
            None => nu_sampled(l, k, np, budget)?,
        }
    } else {
        nu_sampled(l, k, np, budget)?
    };
    cert.infeasible_side = cert.value <= FEASIBLE_TOL;
    Ok(cert)
}

/// Facet LPs over `{u ≥ 0, |||u|||* = 1}`.
fn nu_polyhedral(l: &Subspace, np: &NormPair) -> Result<MeasureCertificate> {
    let n = l.ambient_dim();
    let lperp = l.complement();
    let c = lperp.basis();
    let q = c.ncols();
    let primal_star = np.primal.dual();
    let pk = primal_star.polyhedral_kind()?.expect("polyhedral");
    let tk = np.tri.dual().polyhedral_kind()?.expect("polyhedral");
    let facets: Vec<Option<usize>> = match tk {
        NormKind::L1 => vec![None],
        _ => (0..n).map(Some).collect(),
    };
    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    for facet in facets {
        let mut lp = LpProblem::new(Sense::Minimize, vec![]);
        let cap = if facet.is_some() { 1.0 } else { f64::INFINITY };
        let u0 = lp.num_vars();
        for _ in 0..n {
            lp.add_var(0.0, 0.0, cap);
        }
        match facet {
            Some(i) => {
                lp.set_bounds(u0 + i, 1.0, 1.0);
            }
            None => {
                let ones: Sparse = (0..n).map(|i| (u0 + i, 1.0)).collect();
                lp.add_sparse_row(&ones, RowKind::Eq, 1.0);
            }
        }
        let z0 = add_free_vars(&mut lp, q);
        let exprs: Vec<Sparse> = (0..n)
            .map(|i| {
                let mut e = vec![(u0 + i, 1.0)];
                e.extend((0..q).map(|j| (z0 + j, -c[(i, j)])));
                e
            })
            .collect();
        let form = add_norm_epigraph(&mut lp, &exprs, &vec![0.0; n], pk);
        set_objective(&mut lp, &form);
        let Some(sol) = solve_optimal(&lp)? else {
            continue;
        };
        if best.as_ref().map_or(true, |b| sol.objective < b.0 - 1e-12) {
            let u = sol.x.rows(u0, n).into_owned();
            let y = c * sol.x.rows(z0, q);
            best = Some((sol.objective, u, y));
        }
    }
    let (_, u, y) =
        best.ok_or_else(|| Error::NumericalFailure("all facet LPs infeasible".into()))?;
    let value = primal_star.eval(&(&u - &y))?;
    let mut cert = MeasureCertificate::new(value, Path::LpExact)
        .with_u(u.clone())
        .with_y(y.clone());
    if value > FEASIBLE_TOL {
        let x = min_norm_to_subspace(&lperp, &u, &primal_star)?.dual;
        cert.alignment_residual = nu_residual(np, value, &u, &y, &x)?;
        cert.x = Some(x);
    }
    Ok(cert)
}

/// `|||·||| = ‖·‖_e`: `ν` is the largest `λ_e` over the primal unit ball of `L`.
fn nu_induced(l: &Subspace, k: &Cone, np: &NormPair) -> Result<MeasureCertificate> {
    let n = l.ambient_dim();
    let lperp = l.complement();
    if k.is_orthant_like() && np.primal.kind == NormKind::L2 {
        let b = l.basis();
        return Ok(match ldp(b, &DVector::from_element(n, 1.0))? {
            Some(s) => {
                let nw = s.w.norm();
                let value = 1.0 / nw;
                let x = b * (&s.w / nw);
                let u = optimal_face_vertex(b, &(&s.multipliers / s.multipliers.sum()))?;
                let y = lperp.project(&u);
                let mut cert = MeasureCertificate::new(value, Path::ActiveSet);
                cert.alignment_residual = nu_residual(np, value, &u, &y, &x)?;
                cert.with_u(u).with_y(y).with_x(x)
            }
            None => {
                let u = simplex_point_in(&lperp)?;
                MeasureCertificate::new(0.0, Path::LpExact)
                    .with_y(u.clone())
                    .with_u(u)
            }
        });
    }
    let (value, x, path) = max_lambda_e(l, k, &np.primal)?;
    let mut cert = MeasureCertificate::new(value.max(0.0), path);
    if value <= FEASIBLE_TOL {
        return Ok(cert);
    }
    // the idempotent of the smallest eigenvalue of x̄ is the dual witness
    let (_, u) = k.lambda_e_with_gradient(&x);
    let y = match support_value(l, &lperp, &np.primal, &u)?.2 {
        Some(y) => y,
        None => lperp.project(&u),
    };
    cert.alignment_residual = nu_residual(np, value, &u, &y, &x)?;
    Ok(cert.with_u(u).with_y(y).with_x(x))
}

/// A vertex of `{u ≥ 0, Σu = 1, Bᵀu = Bᵀu₀}`; every such point shares the projection of `u₀`
/// onto `L`, and a vertex keeps the critical subspace construction nondegenerate.
fn optimal_face_vertex(b: &nalgebra::DMatrix<f64>, u0: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, m) = b.shape();
    let target = b.transpose() * u0;
    let mut lp = LpProblem::new(Sense::Minimize, (0..n).map(|i| (i + 1) as f64).collect());
    lp.add_row(vec![1.0; n], RowKind::Eq, 1.0);
    for j in 0..m {
        lp.add_row(
            b.column(j).iter().copied().collect(),
            RowKind::Eq,
            target[j],
        );
    }
    Ok(match solve_optimal(&lp)? {
        Some(sol) => sol.x.map(|v| v.max(0.0)),
        None => u0.clone(),
    })
}

/// A point of `S ∩ {u ≥ 0, Σu = 1}`; exists when `L ∩ int Rⁿ₊ = ∅`.
fn simplex_point_in(s: &Subspace) -> Result<DVector<f64>> {
    let b = s.basis();
    let (n, q) = b.shape();
    let mut lp = LpProblem::new(Sense::Minimize, vec![]);
    let z0 = add_free_vars(&mut lp, q);
    let mut total: Sparse = Vec::new();
    for i in 0..n {
        let row: Sparse = (0..q).map(|j| (z0 + j, b[(i, j)])).collect();
        lp.add_sparse_row(&row, RowKind::Ge, 0.0);
        total.extend(row);
    }
    lp.add_sparse_row(&total, RowKind::Eq, 1.0);
    let sol = solve_optimal(&lp)?
        .ok_or_else(|| Error::NumericalFailure("no simplex point in subspace".into()))?;
    Ok((b * sol.x.rows(z0, q)).map(|v| v.max(0.0)))
}

/// `min ‖Π_L u‖` over unit `u` in the simplicial dual cone.
fn nu_euclidean_polyhedral(
    l: &Subspace,
    gdual: &nalgebra::DMatrix<f64>,
) -> Result<MeasureCertificate> {
    let p = l.projector();
    let (value, u) = cone_rayleigh_min(gdual, &p)?;
    let pu = &p * &u;
    let y = &u - &pu;
    let mut cert = MeasureCertificate::new(value, Path::Enumeration)
        .with_u(u.clone())
        .with_y(y.clone());
    if value > FEASIBLE_TOL {
        let x = pu / value;
        cert.alignment_residual = nu_residual(&NormPair::euclidean(), value, &u, &y, &x)?;
        cert.x = Some(x);
    }
    Ok(cert)
}

/// Bounds on `min{‖Π_S u‖ : u ∈ K, ‖u‖ = 1}` for a self-dual symmetric cone.
///
/// The upper bound comes from sampled witnesses refined by projected gradient; the lower
/// bound is `max{λ_e(x) : x ∈ S, ‖x‖ ≤ 1}` since `‖Π_S u‖ ≥ ⟨u, x⟩ ≥ λ_e(x)·tr(u) ≥ λ_e(x)`.
pub(crate) struct ConeMin {
    pub upper: f64,
    pub lower: f64,
    pub u: DVector<f64>,
}

pub(crate) fn euclidean_cone_min(
    s: &Subspace,
    k: &Cone,
    budget: &Budget,
    salt: u64,
) -> Result<ConeMin> {
    let p = s.projector();
    let lower = max_lambda_e(s, k, &NormSpec::l2())?.0.max(0.0);
    let mut rng = rng_for(budget.seed, salt);
    let mut cands = Vec::with_capacity(budget.samples + 1);
    cands.push(k.identity().normalize());
    for i in 0..budget.samples {
        let v = if i % 2 == 0 {
            k.sample_element(&mut rng)
        } else {
            k.sample_primitive_idempotent(&mut rng)?
        };
        let nv = v.norm();
        if nv > 1e-12 {
            cands.push(v / nv);
        }
    }
    let f = |u: &DVector<f64>| (&p * u).norm();
    let (i, v0) =
        par_argmin(&cands, f).ok_or_else(|| Error::NumericalFailure("no samples".into()))?;
    let (mut u, mut best) = (cands[i].clone(), v0);
    let mut eta = 0.5;
    for _ in 0..budget.refine_steps * 20 {
        let q = k.project(&(&u - eta * (&p * &u)));
        let nq = q.norm();
        if nq <= 1e-14 {
            eta *= 0.5;
            continue;
        }
        let cand = q / nq;
        let val = f(&cand);
        if val < best {
            best = val;
            u = cand;
        } else {
            eta *= 0.5;
            if eta < 1e-12 {
                break;
            }
        }
    }
    let project = |x: &DVector<f64>| {
        let q = k.project(x);
        let nq = q.norm();
        (nq > 1e-12).then(|| q / nq)
    };
    let (u, best) = refine_min(u, best, budget.refine_steps, &mut rng, f, project);
    Ok(ConeMin {
        upper: best,
        lower: lower.min(best),
        u,
    })
}

fn cone_min_certificate(cm: &ConeMin) -> MeasureCertificate {
    let exact = cm.upper - cm.lower <= FEASIBLE_TOL;
    let mut cert = MeasureCertificate::new(
        cm.upper,
        if exact {
            Path::Iterative
        } else {
            Path::Sampled
        },
    );
    if !exact {
        cert.bracket = Some((cm.lower.max(cm.upper / 1.05), cm.upper));
    }
    cert
}

fn nu_euclidean_symmetric(l: &Subspace, k: &Cone, budget: &Budget) -> Result<MeasureCertificate> {
    let cm = euclidean_cone_min(l, k, budget, SALT_NU)?;
    let pu = l.project(&cm.u);
    let y = &cm.u - &pu;
    let mut cert = cone_min_certificate(&cm)
        .with_u(cm.u.clone())
        .with_y(y.clone());
    if cm.upper > FEASIBLE_TOL {
        let x = pu / cm.upper;
        cert.alignment_residual = nu_residual(&NormPair::euclidean(), cm.upper, &cm.u, &y, &x)?;
        cert.x = Some(x);
    }
    Ok(cert)
}

/// Effective sample count: paths whose inner problem needs the ellipsoid method get fewer samples.
fn inner_budget(budget: &Budget, cheap: bool) -> usize {
    if cheap {
        budget.samples
    } else {
        (budget.samples / 50).max(20)
    }
}

fn nu_sampled(
    l: &Subspace,
    k: &Cone,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    let (margin, _, path) = max_lambda_e(l, k, &NormSpec::l2())?;
    if margin <= FEASIBLE_TOL {
        return Ok(MeasureCertificate::new(0.0, path));
    }
    let lperp = l.complement();
    let kd = k.dual();
    let tri_star = np.tri.dual();
    let mut rng = rng_for(budget.seed, SALT_NU);
    let count = inner_budget(budget, supports_min_norm(&np.primal.dual()));
    let mut cands = Vec::with_capacity(count);
    for _ in 0..count {
        cands.push(random_unit_in_cone(&kd, &tri_star, &mut rng)?);
    }
    let f =
        |u: &DVector<f64>| support_value(l, &lperp, &np.primal, u).map_or(f64::INFINITY, |r| r.0);
    let (i, v0) =
        par_argmin(&cands, f).ok_or_else(|| Error::NumericalFailure("no finite samples".into()))?;
    let project = |p: &DVector<f64>| {
        let q = kd.project(p);
        let nq = tri_star.eval(&q).ok()?;
        (nq > 1e-12).then(|| q / nq)
    };
    let (u, value) = refine_min(
        cands[i].clone(),
        v0,
        budget.refine_steps,
        &mut rng,
        f,
        project,
    );
    let (_, x, y) = support_value(l, &lperp, &np.primal, &u)?;
    let mut cert = MeasureCertificate::sampled_min(value)
        .with_u(u.clone())
        .with_x(x.clone());
    if let Some(y) = y {
        cert.alignment_residual = nu_residual(np, value, &u, &y, &x)?;
        cert.y = Some(y);
    }
    Ok(cert)
}

pub fn nu_bar(l: &Subspace, k: &Cone, np: &NormPair) -> Result<MeasureCertificate> {
    nu_bar_with(l, k, np, &Budget::default())
}

/// `ν̄(L) = min{|||v − x||| : v ∈ K, x ∈ L, ‖x‖ = 1}`.
pub fn nu_bar_with(
    l: &Subspace,
    k: &Cone,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    check_instance(l, k, np)?;
    let mut cert = if k.is_orthant_like() && np.is_polyhedral() {
        nu_bar_polyhedral(l, np)?
    } else if np.is_euclidean() {
        match k.generators().filter(|g| g.ncols() <= ENUM_LIMIT) {
            Some(g) => {
                let p = nalgebra::DMatrix::identity(k.dim(), k.dim()) - l.projector();
                let (_, v) = cone_rayleigh_min(&g, &p)?;
                nu_bar_from_direction(l, &v, Path::Enumeration)
            }
            None if k.is_symmetric() => {
                let cm = euclidean_cone_min(&l.complement(), k, budget, SALT_NU_BAR)?;
                let mut cert = nu_bar_from_direction(l, &cm.u, Path::Iterative);
                let shape = cone_min_certificate(&cm);
                cert.path = shape.path;
                cert.bracket = shape.bracket;
                cert
            }
            None => nu_bar_sampled(l, k, np, budget)?,
        }
    } else {
        nu_bar_sampled(l, k, np, budget)?
    };
    cert.infeasible_side = cert.value > FEASIBLE_TOL;
    Ok(cert)
}

/// Euclidean witnesses from the unit `v* ∈ K` closest in angle to `L`.
fn nu_bar_from_direction(l: &Subspace, vstar: &DVector<f64>, path: Path) -> MeasureCertificate {
    let px = l.project(vstar);
    let c = px.norm();
    if c <= 1e-12 {
        let x = l.basis().column(0).into_owned();
        return MeasureCertificate::new(1.0, path)
            .with_x(x)
            .with_v(DVector::zeros(vstar.len()));
    }
    let x = px / c;
    let v = vstar * c;
    let value = (&x - &v).norm();
    MeasureCertificate::new(value, path).with_x(x).with_v(v)
}

/// One LP per vertex `a` of the dual primal ball: `min |||Bw − v|||`, `v ≥ 0`, `⟨a, Bw⟩ ≥ 1`.
fn nu_bar_polyhedral(l: &Subspace, np: &NormPair) -> Result<MeasureCertificate> {
    let b = l.basis();
    let (n, m) = b.shape();
    let pk = np.primal.polyhedral_kind()?.expect("polyhedral");
    let tk = np.tri.polyhedral_kind()?.expect("polyhedral");
    if pk == NormKind::L1 && n > ENUM_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: n,
            limit: ENUM_LIMIT,
        });
    }
    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    for a in dual_ball_vertices(n, pk)? {
        let bta = b.transpose() * &a;
        if bta.amax() <= 1e-12 {
            continue;
        }
        let mut lp = LpProblem::new(Sense::Minimize, vec![]);
        let w0 = add_free_vars(&mut lp, m);
        let v0 = lp.num_vars();
        for _ in 0..n {
            lp.add_var(0.0, 0.0, f64::INFINITY);
        }
        let exprs: Vec<Sparse> = (0..n)
            .map(|i| {
                let mut e: Sparse = (0..m).map(|j| (w0 + j, b[(i, j)])).collect();
                e.push((v0 + i, -1.0));
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
            .map_or(true, |bst| sol.objective < bst.0 - 1e-12)
        {
            let x = b * sol.x.rows(w0, m);
            let v = sol.x.rows(v0, n).into_owned();
            best = Some((sol.objective, x, v));
        }
    }
    let (_, x, v) =
        best.ok_or_else(|| Error::NumericalFailure("all vertex LPs infeasible".into()))?;
    let nx = np.primal.eval(&x)?;
    let (x, v) = (x / nx, v / nx);
    let value = np.tri.eval(&(&x - &v))?;
    Ok(MeasureCertificate::new(value, Path::LpExact)
        .with_x(x)
        .with_v(v))
}

/// `|||x − Π_K x|||` is the distance from `x` to `K` for these norm and cone combinations.
fn projection_is_nearest(k: &Cone, tri: &NormSpec) -> bool {
    tri.kind == NormKind::L2
        || (k.is_orthant_like() && tri.is_polyhedral())
        || ((tri.is_induced_e_for(k) || tri.is_induced_e_dual_for(k)) && k.is_symmetric())
}

fn nu_bar_sampled(
    l: &Subspace,
    k: &Cone,
    np: &NormPair,
    budget: &Budget,
) -> Result<MeasureCertificate> {
    if !projection_is_nearest(k, &np.tri) {
        return Err(Error::Unsupported(format!(
            "nu_bar with |||.||| = {} on this cone",
            np.tri.name()
        )));
    }
    let mut rng = rng_for(budget.seed, SALT_NU_BAR);
    let cands = subspace_directions(l, &np.primal, budget.samples, &mut rng)?;
    let f = |x: &DVector<f64>| np.tri.eval(&(x - k.project(x))).unwrap_or(f64::INFINITY);
    let (i, v0) =
        par_argmin(&cands, f).ok_or_else(|| Error::NumericalFailure("no finite samples".into()))?;
    let project = |p: &DVector<f64>| {
        let q = l.project(p);
        let nq = np.primal.eval(&q).ok()?;
        (nq > 1e-12).then(|| q / nq)
    };
    let (x, value) = refine_min(
        cands[i].clone(),
        v0,
        budget.refine_steps,
        &mut rng,
        f,
        project,
    );
    let v = k.project(&x);
    Ok(MeasureCertificate::sampled_min(value).with_x(x).with_v(v))
}

pub fn theta(k: &Cone) -> Result<f64> {
    Ok(theta_with(k, &Budget::default())?.value)
}

/// `Θ(K*, K) = max_{u ∈ K*} min_{v ∈ K} ∠(u, v)`.
pub fn theta_with(k: &Cone, budget: &Budget) -> Result<MeasureCertificate> {
    k.validate()?;
    if k.is_self_dual() {
        return Ok(MeasureCertificate::new(0.0, Path::ClosedForm));
    }
    if let Cone::Wedge2d { half_angle } = k {
        return Ok(MeasureCertificate::new(
            (FRAC_PI_2 - 2.0 * half_angle).max(0.0),
            Path::ClosedForm,
        ));
    }
    let kd = k.dual();
    let mut rng = rng_for(budget.seed, SALT_THETA);
    let mut cands: Vec<DVector<f64>> = kd
        .generators()
        .map(|g| g.column_iter().map(|c| c.normalize()).collect())
        .unwrap_or_default();
    for _ in 0..budget.samples {
        cands.push(random_unit_in_cone(&kd, &NormSpec::l2(), &mut rng)?);
    }
    let angle = |u: &DVector<f64>| k.project(u).norm().clamp(0.0, 1.0).acos();
    let (i, v0) = par_argmin(&cands, |u| -angle(u))
        .ok_or_else(|| Error::NumericalFailure("no samples".into()))?;
    let project = |p: &DVector<f64>| {
        let q = kd.project(p);
        let nq = q.norm();
        (nq > 1e-12).then(|| q / nq)
    };
    let (u, neg) = refine_min(
        cands[i].clone(),
        v0,
        budget.refine_steps,
        &mut rng,
        |u| -angle(u),
        project,
    );
    let mut cert = MeasureCertificate::sampled_max(-neg).with_u(u.clone());
    cert.bracket = Some((-neg, (-neg * 1.05).min(FRAC_PI_2)));
    cert.v = Some(k.project(&u));
    Ok(cert)
}

/// `min_{u ∈ K*, |||u|||* = 1} max_{v ∈ K, |||v||| = 1} ⟨u, v⟩`, the constant bounding `σ/ν`.
pub fn alignment_constant(k: &Cone, np: &NormPair) -> Result<f64> {
    if np.tri.kind == NormKind::L2 {
        return Ok(theta(k)?.cos());
    }
    if (np.tri.is_induced_e_for(k) || np.tri.is_induced_e_dual_for(k)) && k.is_symmetric() {
        return Ok(1.0);
    }
    Err(Error::Unsupported(format!(
        "alignment constant for |||.||| = {}",
        np.tri.name()
    )))
}
