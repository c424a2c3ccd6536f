//! Dense revised simplex and small-polytope vertex enumeration.
//!
//! Problems here are tiny (tens of rows, at most a few hundred columns), so the
//! solver keeps an explicit dense basis inverse, updates it with elementary row
//! operations and refactorizes it from scratch every [`REFACTOR_PERIOD`] pivots.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-10;
const REFACTOR_PERIOD: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `sense cᵀx` subject to linear rows and per-variable bounds.
///
/// Variables default to `[0, +inf)`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values (meaningful on `Optimal`).
    pub x: DVector<f64>,
    /// One multiplier per row, Lagrangian `cᵀx - yᵀ(Ax - b)` in the problem's own sense.
    pub y: DVector<f64>,
    pub objective: f64,
    /// On `Infeasible`: `y` with `yᵀA ≥ 0`, `yᵀb < 0` for the standard form.
    pub farkas: Option<DVector<f64>>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// `min cᵀx, Ax = b, x ≥ 0` together with the map back to structural variables.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub offset: f64,
    columns: Vec<VarMap>,
    num_user_rows: usize,
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = shift + x'
    Shifted { col: usize, shift: f64 },
    /// x = shift - x'
    Mirrored { col: usize, shift: f64 },
    /// x = x⁺ - x⁻
    Split { pos: usize, neg: usize },
}

impl LpProblem {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            sense,
            objective,
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[j] = lower;
        self.upper[j] = upper;
        self
    }

    pub fn set_free(&mut self, j: usize) -> &mut Self {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Appends a variable with the given cost and bounds; returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        for r in &mut self.rows {
            r.coeffs.push(0.0);
        }
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, kind: RowKind, rhs: f64) -> usize {
        assert_eq!(
            coeffs.len(),
            self.num_vars(),
            "row width must match variable count"
        );
        self.rows.push(Row { coeffs, kind, rhs });
        self.rows.len() - 1
    }

    /// Adds a row given as sparse `(column, coefficient)` pairs.
    pub fn add_sparse_row(&mut self, entries: &[(usize, f64)], kind: RowKind, rhs: f64) -> usize {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in entries {
            coeffs[j] += a;
        }
        self.add_row(coeffs, kind, rhs)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.lower.len(),
            });
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self
                .rows
                .iter()
                .all(|r| r.rhs.is_finite() && r.coeffs.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Validation("LP data must be finite".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j]
                || self.lower[j] == f64::INFINITY
                || self.upper[j] == f64::NEG_INFINITY
            {
                return Err(Error::Validation(format!(
                    "inconsistent bounds on variable {j}"
                )));
            }
        }
        Ok(())
    }

    pub fn standard_form(&self) -> StandardForm {
        let n = self.num_vars();
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut columns = Vec::with_capacity(n);
        let mut ncols = 0usize;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_finite() {
                columns.push(VarMap::Shifted {
                    col: ncols,
                    shift: lo,
                });
                if hi.is_finite() {
                    bound_rows.push((ncols, hi - lo));
                }
                ncols += 1;
            } else if hi.is_finite() {
                columns.push(VarMap::Mirrored {
                    col: ncols,
                    shift: hi,
                });
                ncols += 1;
            } else {
                columns.push(VarMap::Split {
                    pos: ncols,
                    neg: ncols + 1,
                });
                ncols += 2;
            }
        }
        let num_slacks = self.rows.iter().filter(|r| r.kind != RowKind::Eq).count();
        let first_slack = ncols;
        let total_cols = ncols + num_slacks + bound_rows.len();
        let total_rows = self.rows.len() + bound_rows.len();

        let mut a = DMatrix::zeros(total_rows, total_cols);
        let mut b = DVector::zeros(total_rows);
        let mut c = DVector::zeros(total_cols);
        let mut offset = 0.0;

        for (j, map) in columns.iter().enumerate() {
            let cj = sign * self.objective[j];
            match *map {
                VarMap::Shifted { col, shift } => {
                    c[col] += cj;
                    offset += cj * shift;
                }
                VarMap::Mirrored { col, shift } => {
                    c[col] -= cj;
                    offset += cj * shift;
                }
                VarMap::Split { pos, neg } => {
                    c[pos] += cj;
                    c[neg] -= cj;
                }
            }
        }

        let mut slack = first_slack;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rhs = row.rhs;
            for (j, map) in columns.iter().enumerate() {
                let aij = row.coeffs[j];
                if aij == 0.0 {
                    continue;
                }
                match *map {
                    VarMap::Shifted { col, shift } => {
                        a[(i, col)] += aij;
                        rhs -= aij * shift;
                    }
                    VarMap::Mirrored { col, shift } => {
                        a[(i, col)] -= aij;
                        rhs -= aij * shift;
                    }
                    VarMap::Split { pos, neg } => {
                        a[(i, pos)] += aij;
                        a[(i, neg)] -= aij;
                    }
                }
            }
            match row.kind {
                RowKind::Le => {
                    a[(i, slack)] = 1.0;
                    slack += 1;
                }
                RowKind::Ge => {
                    a[(i, slack)] = -1.0;
                    slack += 1;
                }
                RowKind::Eq => {}
            }
            b[i] = rhs;
        }
        for (k, &(col, width)) in bound_rows.iter().enumerate() {
            let i = self.rows.len() + k;
            a[(i, col)] = 1.0;
            a[(i, slack)] = 1.0;
            slack += 1;
            b[i] = width;
        }

        StandardForm {
            a,
            b,
            c,
            offset,
            columns,
            num_user_rows: self.rows.len(),
        }
    }
}

impl StandardForm {
    fn recover_x(&self, xs: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.columns.len(),
            self.columns.iter().map(|map| match *map {
                VarMap::Shifted { col, shift } => shift + xs[col],
                VarMap::Mirrored { col, shift } => shift - xs[col],
                VarMap::Split { pos, neg } => xs[pos] - xs[neg],
            }),
        )
    }
}

enum CoreOutcome {
    Optimal { x: DVector<f64>, y: DVector<f64> },
    Infeasible { farkas: DVector<f64> },
    Unbounded,
}

struct Simplex<'a> {
    a: &'a DMatrix<f64>,
    b: DVector<f64>,
    /// structural columns are `0..n`; artificial column `n + i` is the unit vector `e_i`.
    n: usize,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    xb: DVector<f64>,
    pivots: usize,
}

impl<'a> Simplex<'a> {
    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.n {
            self.a.column(j).into_owned()
        } else {
            let mut e = DVector::zeros(self.a.nrows());
            e[j - self.n] = 1.0;
            e
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.a.nrows();
        let mut bmat = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            bmat.set_column(k, &self.column(j));
        }
        self.binv = bmat
            .try_inverse()
            .ok_or_else(|| Error::NumericalFailure("singular simplex basis".into()))?;
        self.xb = &self.binv * &self.b;
        for v in self.xb.iter_mut() {
            if *v < 0.0 && *v > -PRIMAL_TOL {
                *v = 0.0;
            }
        }
        Ok(())
    }

    fn duals(&self, costs: &DVector<f64>) -> DVector<f64> {
        let cb = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&j| costs[j]));
        self.binv.transpose() * cb
    }

    fn pivot(&mut self, row: usize, col: usize, alpha: &DVector<f64>) {
        let m = self.binv.nrows();
        let ap = alpha[row];
        let theta = self.xb[row] / ap;
        for i in 0..m {
            if i != row {
                self.xb[i] -= theta * alpha[i];
                if self.xb[i] < 0.0 && self.xb[i] > -PRIMAL_TOL {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[row] = theta;
        let prow = self.binv.row(row) / ap;
        for i in 0..m {
            if i != row && alpha[i] != 0.0 {
                let f = alpha[i];
                for k in 0..m {
                    self.binv[(i, k)] -= f * prow[k];
                }
            }
        }
        self.binv.set_row(row, &prow);
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs primal simplex iterations on `costs`; columns `>= enter_limit` never enter.
    /// Returns `false` when an unbounded ray was found.
    fn optimize(&mut self, costs: &DVector<f64>, enter_limit: usize) -> Result<bool> {
        let m = self.a.nrows();
        let bland_after = 10 * (m + self.n);
        let max_iter = 200 * (m + self.n) + 1000;
        let cscale = 1.0 + costs.amax();
        let mut degenerate_run = 0usize;
        let mut is_basic = vec![false; self.n + m];
        for &j in &self.basis {
            is_basic[j] = true;
        }
        for _ in 0..max_iter {
            if self.pivots > 0 && self.pivots % REFACTOR_PERIOD == 0 {
                self.refactor()?;
            }
            let y = self.duals(costs);
            let bland = degenerate_run > bland_after;
            let mut entering = None;
            let mut best = -DUAL_TOL * cscale;
            for j in 0..enter_limit {
                if is_basic[j] {
                    continue;
                }
                let d = costs[j] - y.dot(&self.column(j));
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(true);
            };
            let alpha = &self.binv * self.column(q);
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                if alpha[i] > PIVOT_TOL {
                    let ratio = self.xb[i].max(0.0) / alpha[i];
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if ratio < best_ratio - 1e-12 {
                                true
                            } else if ratio <= best_ratio + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    alpha[i] > alpha[l]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        best_ratio = best_ratio.min(ratio);
                    }
                }
            }
            let Some(p) = leave else {
                return Ok(false);
            };
            if best_ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            is_basic[self.basis[p]] = false;
            is_basic[q] = true;
            self.pivot(p, q, &alpha);
        }
        Err(Error::NumericalFailure(
            "simplex iteration limit reached".into(),
        ))
    }
}

/// Two-phase revised simplex on `min cᵀx, Ax = b, x ≥ 0`.
fn solve_standard(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<CoreOutcome> {
    let (m, n) = a.shape();
    if m == 0 {
        // only bounds: optimal at 0 unless some cost is negative
        if c.iter().any(|&v| v < -DUAL_TOL) {
            return Ok(CoreOutcome::Unbounded);
        }
        return Ok(CoreOutcome::Optimal {
            x: DVector::zeros(n),
            y: DVector::zeros(0),
        });
    }
    let flip: Vec<f64> = b
        .iter()
        .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let mut af = a.clone();
    let mut bf = b.clone();
    for i in 0..m {
        if flip[i] < 0.0 {
            af.row_mut(i).neg_mut();
            bf[i] = -bf[i];
        }
    }
    let mut sx = Simplex {
        a: &af,
        b: bf.clone(),
        n,
        basis: (n..n + m).collect(),
        binv: DMatrix::identity(m, m),
        xb: bf.clone(),
        pivots: 0,
    };

    let mut phase1 = DVector::zeros(n + m);
    for i in 0..m {
        phase1[n + i] = 1.0;
    }
    sx.optimize(&phase1, n)?;
    sx.refactor()?;
    let infeas: f64 = sx
        .basis
        .iter()
        .zip(sx.xb.iter())
        .filter(|(&j, _)| j >= n)
        .map(|(_, &v)| v)
        .sum();
    if infeas > PRIMAL_TOL * (1.0 + bf.amax()) {
        let yhat = sx.duals(&phase1);
        let farkas = DVector::from_iterator(m, (0..m).map(|i| -flip[i] * yhat[i]));
        return Ok(CoreOutcome::Infeasible { farkas });
    }

    // drive zero-level artificials out of the basis where possible
    for p in 0..m {
        if sx.basis[p] < n {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if sx.basis.contains(&j) {
                continue;
            }
            let v = (sx.binv.row(p) * a_col(&af, j))[0].abs();
            if v > 1e-7 && best.map_or(true, |(_, bv)| v > bv) {
                best = Some((j, v));
            }
        }
        if let Some((j, _)) = best {
            let alpha = &sx.binv * a_col(&af, j);
            sx.pivot(p, j, &alpha);
        }
    }
    sx.refactor()?;

    let mut phase2 = DVector::zeros(n + m);
    for j in 0..n {
        phase2[j] = c[j];
    }
    if !sx.optimize(&phase2, n)? {
        return Ok(CoreOutcome::Unbounded);
    }
    sx.refactor()?;
    let mut x = DVector::zeros(n);
    for (k, &j) in sx.basis.iter().enumerate() {
        if j < n {
            x[j] = sx.xb[k].max(0.0);
        }
    }
    let yhat = sx.duals(&phase2);
    let y = DVector::from_iterator(m, (0..m).map(|i| flip[i] * yhat[i]));
    Ok(CoreOutcome::Optimal { x, y })
}

fn a_col(a: &DMatrix<f64>, j: usize) -> DVector<f64> {
    a.column(j).into_owned()
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let sf = p.standard_form();
    let nrows = p.rows.len();
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    match solve_standard(&sf.a, &sf.b, &sf.c)? {
        CoreOutcome::Optimal { x, y } => {
            let xs = sf.recover_x(&x);
            let objective = p.objective.iter().zip(xs.iter()).map(|(c, v)| c * v).sum();
            let y = DVector::from_iterator(nrows, (0..sf.num_user_rows).map(|i| sign * y[i]));
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x: xs,
                y,
                objective,
                farkas: None,
            })
        }
        CoreOutcome::Infeasible { farkas } => Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: DVector::zeros(p.num_vars()),
            y: DVector::zeros(nrows),
            objective: f64::NAN,
            farkas: Some(farkas),
        }),
        CoreOutcome::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: DVector::zeros(p.num_vars()),
            y: DVector::zeros(nrows),
            objective: sign * f64::NEG_INFINITY,
            farkas: None,
        }),
    }
}

/// Half-space `aᵀx ≤ b`.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: DVector<f64>, offset: f64) -> Self {
        HalfSpace { normal, offset }
    }
}

pub const MAX_ENUM_DIM: usize = 10;

/// All vertices of the bounded polytope `{x : aᵢᵀx ≤ bᵢ}` by basis enumeration.
pub fn enumerate_vertices(halfspaces: &[HalfSpace], dim: usize) -> Result<Vec<DVector<f64>>> {
    if dim > MAX_ENUM_DIM {
        return Err(Error::DimensionTooLarge {
            dim,
            limit: MAX_ENUM_DIM,
        });
    }
    if dim == 0 {
        return Err(Error::Validation(
            "polytope dimension must be positive".into(),
        ));
    }
    for h in halfspaces {
        if h.normal.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: h.normal.len(),
            });
        }
    }
    // bounded iff the recession cone {Ax ≤ 0} is trivial
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut obj = vec![0.0; dim];
            obj[i] = s;
            let mut lp = LpProblem::new(Sense::Maximize, obj);
            for j in 0..dim {
                lp.set_bounds(j, -1.0, 1.0);
            }
            for h in halfspaces {
                lp.add_row(h.normal.iter().copied().collect(), RowKind::Le, 0.0);
            }
            let sol = solve_lp(&lp)?;
            if sol.is_optimal() && sol.objective > 1e-9 {
                return Err(Error::UnboundedPolytope);
            }
        }
    }

    let mut out: Vec<DVector<f64>> = Vec::new();
    for subset in combinations(halfspaces.len(), dim) {
        let mut m = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        for (r, &k) in subset.iter().enumerate() {
            m.set_row(r, &halfspaces[k].normal.transpose());
            rhs[r] = halfspaces[k].offset;
        }
        let lu = m.clone().lu();
        if lu.determinant().abs() < 1e-12 * (1.0 + m.amax()).powi(dim as i32) {
            continue;
        }
        let Some(x) = lu.solve(&rhs) else { continue };
        let feasible = halfspaces
            .iter()
            .all(|h| h.normal.dot(&x) <= h.offset + 1e-9 * (1.0 + h.offset.abs()));
        if feasible && !out.iter().any(|v| (v - &x).amax() <= 1e-8) {
            out.push(x);
        }
    }
    Ok(out)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_kkt(p: &LpProblem, sol: &LpSolution) {
        // standard-form reduced costs must be nonnegative at the reported duals
        let sf = p.standard_form();
        let sign = if p.sense == Sense::Minimize {
            1.0
        } else {
            -1.0
        };
        let mut y = DVector::zeros(sf.a.nrows());
        for i in 0..p.rows.len() {
            y[i] = sign * sol.y[i];
        }
        // duals of bound rows are not reported; recompute primal feasibility instead
        for row in &p.rows {
            let lhs: f64 = row
                .coeffs
                .iter()
                .zip(sol.x.iter())
                .map(|(a, x)| a * x)
                .sum();
            match row.kind {
                RowKind::Le => assert!(lhs <= row.rhs + 1e-9),
                RowKind::Ge => assert!(lhs >= row.rhs - 1e-9),
                RowKind::Eq => assert!((lhs - row.rhs).abs() <= 1e-9),
            }
        }
        if p.upper.iter().all(|u| u.is_infinite()) {
            let red = &sf.c - sf.a.transpose() * &y;
            assert!(red.min() >= -1e-9, "dual infeasible: {red}");
            let bty: f64 = sf.b.dot(&y) + sf.offset;
            let val = sign * sol.objective;
            assert!(
                (bty - val).abs() <= 1e-8 * (1.0 + val.abs()),
                "gap {bty} vs {val}"
            );
        }
    }

    #[test]
    fn simple_max() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0, 1.0]);
        p.add_row(vec![1.0, 1.0], RowKind::Le, 1.0);
        let sol = solve_lp(&p).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective - 1.0).abs() < 1e-12);
        check_kkt(&p, &sol);
    }

    #[test]
    fn infeasible_has_farkas_certificate() {
        let mut p = LpProblem::new(Sense::Minimize, vec![0.0]);
        p.add_row(vec![1.0], RowKind::Le, -1.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        let y = sol.farkas.unwrap();
        let sf = p.standard_form();
        let ya = sf.a.transpose() * &y;
        assert!(ya.min() >= -1e-12);
        assert!(sf.b.dot(&y) < 0.0);
    }

    #[test]
    fn subspace_simplex_point() {
        // x in span{(1,1,0)}, x >= 0, sum x = 1
        let mut p = LpProblem::new(Sense::Minimize, vec![0.0, 0.0, 0.0, 0.0]);
        p.set_free(3);
        for (i, bi) in [1.0, 1.0, 0.0].iter().enumerate() {
            let mut row = vec![0.0; 4];
            row[i] = 1.0;
            row[3] = -bi;
            p.add_row(row, RowKind::Eq, 0.0);
        }
        p.add_row(vec![1.0, 1.0, 1.0, 0.0], RowKind::Eq, 1.0);
        let sol = solve_lp(&p).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.x[0] - 0.5).abs() < 1e-12);
        assert!((sol.x[1] - 0.5).abs() < 1e-12);
        assert!(sol.x[2].abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0, 0.0]);
        p.add_row(vec![1.0, -1.0], RowKind::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bounded_and_free_variables() {
        // min x - y, -2 <= x <= 3, y free, y <= 4, x + y >= -10
        let mut p = LpProblem::new(Sense::Minimize, vec![1.0, -1.0]);
        p.set_bounds(0, -2.0, 3.0);
        p.set_bounds(1, f64::NEG_INFINITY, 4.0);
        p.add_row(vec![1.0, 1.0], RowKind::Ge, -10.0);
        let sol = solve_lp(&p).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective - (-6.0)).abs() < 1e-12);
    }

    #[test]
    fn duals_match_objective_on_random_lps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.random_range(2..7);
            let m = rng.random_range(1..6);
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
            let mut p = LpProblem::new(Sense::Minimize, c);
            for _ in 0..m {
                let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
                let kind = if rng.random_bool(0.5) {
                    RowKind::Ge
                } else {
                    RowKind::Eq
                };
                p.add_row(row, kind, rng.random_range(0.0..1.0));
            }
            let sol = solve_lp(&p).unwrap();
            if sol.is_optimal() {
                check_kkt(&p, &sol);
                // perturb then restore
                let mut q = p.clone();
                q.objective[0] += 0.5;
                let _ = solve_lp(&q).unwrap();
                q.objective[0] -= 0.5;
                let again = solve_lp(&q).unwrap();
                assert!((again.objective - sol.objective).abs() <= 1e-9);
            } else if sol.status == LpStatus::Infeasible {
                let sf = p.standard_form();
                let y = sol.farkas.unwrap();
                assert!((sf.a.transpose() * &y).min() >= -1e-9);
                assert!(sf.b.dot(&y) < 0.0);
            }
        }
    }

    #[test]
    fn square_and_cross_polytope_vertices() {
        let mut hs = Vec::new();
        for i in 0..2 {
            for s in [1.0, -1.0] {
                let mut a = DVector::zeros(2);
                a[i] = s;
                hs.push(HalfSpace::new(a, 1.0));
            }
        }
        assert_eq!(enumerate_vertices(&hs, 2).unwrap().len(), 4);

        let mut cross = Vec::new();
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                cross.push(HalfSpace::new(DVector::from_vec(vec![s1, s2]), 1.0));
            }
        }
        let v = enumerate_vertices(&cross, 2).unwrap();
        assert_eq!(v.len(), 4);
        for x in &v {
            assert!((x.abs().sum() - 1.0).abs() < 1e-12);
            assert!(x.iter().filter(|c| c.abs() > 1e-12).count() == 1);
        }
    }

    #[test]
    fn segment_chart_endpoints() {
        // x = t(2,1), |2t| + |t| <= 1 in the 1-D chart t
        let hs = vec![
            HalfSpace::new(DVector::from_vec(vec![3.0]), 1.0),
            HalfSpace::new(DVector::from_vec(vec![-3.0]), 1.0),
        ];
        let mut v: Vec<f64> = enumerate_vertices(&hs, 1)
            .unwrap()
            .iter()
            .map(|x| x[0])
            .collect();
        v.sort_by(f64::total_cmp);
        assert!((v[0] + 1.0 / 3.0).abs() < 1e-12 && (v[1] - 1.0 / 3.0).abs() < 1e-12);
        // endpoints in R² are ±(2/3, 1/3)
        assert!((2.0 * v[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_polytope_rejected() {
        let hs = vec![HalfSpace::new(DVector::from_vec(vec![1.0, 0.0]), 1.0)];
        assert_eq!(enumerate_vertices(&hs, 2), Err(Error::UnboundedPolytope));
        assert!(matches!(
            enumerate_vertices(&hs[..0], 11),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }
}
