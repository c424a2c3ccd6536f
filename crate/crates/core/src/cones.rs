//! Regular cones: the symmetric family (orthant, second-order, PSD, products) with
//! their Euclidean Jordan algebra, plus the planar wedge used by the tight ν/σ example.
//!
//! Coordinates are chosen so that the plain dot product is the trace inner product
//! `⟨x, y⟩ = trace(x ∘ y)`:
//!
//! * PSD(k) uses `svec` order `(0,0), (0,1), (1,1), (0,2), …` with off-diagonals scaled by √2.
//! * SecondOrder(n) stores `√2·(x₀, x̄)` for the textbook point `(x₀, x̄)`; the cone is still
//!   `{x₀ ≥ ‖x̄‖₂}`, the identity is `(√2, 0, …, 0)` and `λ± = (x₀ ± ‖x̄‖)/√2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    Orthant(usize),
    /// Ambient dimension `n ≥ 2`.
    SecondOrder(usize),
    /// Order `k` matrices in `k(k+1)/2` coordinates.
    Psd(usize),
    Product(Vec<Cone>),
    /// `{x ∈ R² : cos φ·|x₁| ≤ sin φ·x₂}`, generated by `(±sin φ, cos φ)`, identity `(0, 1)`.
    Wedge2d {
        half_angle: f64,
    },
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Nonincreasing.
    pub eigenvalues: Vec<f64>,
    pub frame: Vec<DVector<f64>>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.frame[0].len());
        for (l, c) in self.eigenvalues.iter().zip(&self.frame) {
            x += *l * c;
        }
        x
    }
}

pub fn svec_len(k: usize) -> usize {
    k * (k + 1) / 2
}

fn svec_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

pub fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let k = m.nrows();
    let mut v = DVector::zeros(svec_len(k));
    for j in 0..k {
        for i in 0..=j {
            v[svec_index(i, j)] = if i == j {
                m[(i, j)]
            } else {
                SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)])
            };
        }
    }
    v
}

pub fn smat(k: usize, v: &DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(k, k);
    for j in 0..k {
        for i in 0..=j {
            let val = v[svec_index(i, j)];
            if i == j {
                m[(i, i)] = val;
            } else {
                m[(i, j)] = val / SQRT2;
                m[(j, i)] = val / SQRT2;
            }
        }
    }
    m
}

/// Order `k` with `k(k+1)/2 = n`, if any.
pub fn psd_order(n: usize) -> Option<usize> {
    (1..=n).find(|&k| svec_len(k) == n)
}

fn sorted_desc(mut pairs: Vec<(f64, DVector<f64>)>) -> SpectralDecomposition {
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (eigenvalues, frame) = pairs.into_iter().unzip();
    SpectralDecomposition { eigenvalues, frame }
}

impl Cone {
    pub fn validate(&self) -> Result<()> {
        match self {
            Cone::Orthant(n) if *n >= 1 => Ok(()),
            Cone::SecondOrder(n) if *n >= 2 => Ok(()),
            Cone::Psd(k) if *k >= 1 => Ok(()),
            Cone::Product(parts) if !parts.is_empty() => parts.iter().try_for_each(Cone::validate),
            Cone::Wedge2d { half_angle }
                if *half_angle > 0.0 && *half_angle < std::f64::consts::FRAC_PI_2 =>
            {
                Ok(())
            }
            other => Err(Error::Validation(format!("invalid cone {other:?}"))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Cone::Orthant(n) | Cone::SecondOrder(n) => *n,
            Cone::Psd(k) => svec_len(*k),
            Cone::Product(parts) => parts.iter().map(Cone::dim).sum(),
            Cone::Wedge2d { .. } => 2,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Cone::Orthant(n) => *n,
            Cone::SecondOrder(_) | Cone::Wedge2d { .. } => 2,
            Cone::Psd(k) => *k,
            Cone::Product(parts) => parts.iter().map(Cone::rank).sum(),
        }
    }

    /// Leaf cones with their coordinate offsets.
    pub fn leaves(&self) -> Vec<(usize, &Cone)> {
        fn walk<'a>(c: &'a Cone, off: &mut usize, out: &mut Vec<(usize, &'a Cone)>) {
            match c {
                Cone::Product(parts) => parts.iter().for_each(|p| walk(p, off, out)),
                leaf => {
                    out.push((*off, leaf));
                    *off += leaf.dim();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut 0, &mut out);
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.leaves()
            .iter()
            .all(|(_, c)| !matches!(c, Cone::Wedge2d { .. }))
    }

    /// Orthant, or a product of orthants.
    pub fn is_orthant_like(&self) -> bool {
        self.leaves()
            .iter()
            .all(|(_, c)| matches!(c, Cone::Orthant(_)))
    }

    pub fn is_polyhedral(&self) -> bool {
        self.leaves()
            .iter()
            .all(|(_, c)| matches!(c, Cone::Orthant(_) | Cone::Wedge2d { .. }))
    }

    pub fn is_self_dual(&self) -> bool {
        self.leaves().iter().all(|(_, c)| match c {
            Cone::Wedge2d { half_angle } => {
                (half_angle - std::f64::consts::FRAC_PI_4).abs() < 1e-15
            }
            _ => true,
        })
    }

    pub fn dual(&self) -> Cone {
        match self {
            Cone::Product(parts) => Cone::Product(parts.iter().map(Cone::dual).collect()),
            Cone::Wedge2d { half_angle } => Cone::Wedge2d {
                half_angle: std::f64::consts::FRAC_PI_2 - half_angle,
            },
            c => c.clone(),
        }
    }

    fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::NotSymmetric(format!(
                "{self:?} has no Jordan algebra structure here"
            )))
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim());
        for (off, leaf) in self.leaves() {
            match leaf {
                Cone::Orthant(n) => e.rows_mut(off, *n).fill(1.0),
                Cone::SecondOrder(_) => e[off] = SQRT2,
                Cone::Psd(k) => {
                    for i in 0..*k {
                        e[off + svec_index(i, i)] = 1.0;
                    }
                }
                Cone::Wedge2d { .. } => e[off + 1] = 1.0,
                Cone::Product(_) => unreachable!(),
            }
        }
        e
    }

    pub fn jordan(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.require_symmetric()?;
        self.check_dim(x)?;
        self.check_dim(y)?;
        let mut z = DVector::zeros(self.dim());
        for (off, leaf) in self.leaves() {
            let d = leaf.dim();
            let xb = x.rows(off, d);
            let yb = y.rows(off, d);
            match leaf {
                Cone::Orthant(_) => z.rows_mut(off, d).copy_from(&xb.component_mul(&yb)),
                Cone::SecondOrder(_) => {
                    z[off] = xb.dot(&yb) / SQRT2;
                    for i in 1..d {
                        z[off + i] = (xb[0] * yb[i] + yb[0] * xb[i]) / SQRT2;
                    }
                }
                Cone::Psd(k) => {
                    let xm = smat(*k, &xb.into_owned());
                    let ym = smat(*k, &yb.into_owned());
                    let p = (&xm * &ym + &ym * &xm) * 0.5;
                    z.rows_mut(off, d).copy_from(&svec(&p));
                }
                _ => unreachable!(),
            }
        }
        Ok(z)
    }

    /// Matrix of `y ↦ x ∘ y`.
    pub fn jordan_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut l = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut ej = DVector::zeros(n);
            ej[j] = 1.0;
            l.set_column(j, &self.jordan(x, &ej)?);
        }
        Ok(l)
    }

    /// `Q_x = 2L_x² − L_{x²}`.
    pub fn quadratic_representation(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let lx = self.jordan_matrix(x)?;
        let x2 = self.jordan(x, x)?;
        let lx2 = self.jordan_matrix(&x2)?;
        Ok(2.0 * &lx * &lx - lx2)
    }

    pub fn spectral(&self, x: &DVector<f64>) -> Result<SpectralDecomposition> {
        self.require_symmetric()?;
        self.check_dim(x)?;
        let n = self.dim();
        let mut pairs = Vec::with_capacity(self.rank());
        for (off, leaf) in self.leaves() {
            let d = leaf.dim();
            let xb = x.rows(off, d);
            let embed = |local: DVector<f64>| {
                let mut c = DVector::zeros(n);
                c.rows_mut(off, d).copy_from(&local);
                c
            };
            match leaf {
                Cone::Orthant(_) => {
                    for i in 0..d {
                        let mut c = DVector::zeros(d);
                        c[i] = 1.0;
                        pairs.push((xb[i], embed(c)));
                    }
                }
                Cone::SecondOrder(_) => {
                    let bar = xb.rows(1, d - 1).into_owned();
                    let a = bar.norm();
                    let dir = if a > 0.0 {
                        bar / a
                    } else {
                        let mut u = DVector::zeros(d - 1);
                        u[0] = 1.0;
                        u
                    };
                    for s in [1.0, -1.0] {
                        let mut c = DVector::zeros(d);
                        c[0] = 1.0 / SQRT2;
                        c.rows_mut(1, d - 1).copy_from(&(s / SQRT2 * &dir));
                        pairs.push(((xb[0] + s * a) / SQRT2, embed(c)));
                    }
                }
                Cone::Psd(k) => {
                    let eig = SymmetricEigen::new(smat(*k, &xb.into_owned()));
                    for i in 0..*k {
                        let v = eig.eigenvectors.column(i);
                        pairs.push((eig.eigenvalues[i], embed(svec(&(v * v.transpose())))));
                    }
                }
                _ => unreachable!(),
            }
        }
        Ok(sorted_desc(pairs))
    }

    pub fn eigenvalues(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        Ok(self.spectral(x)?.eigenvalues)
    }

    pub fn trace(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.eigenvalues(x)?.iter().sum())
    }

    /// `Σ f(λᵢ) cᵢ`.
    pub fn spectral_map(&self, x: &DVector<f64>, f: impl Fn(f64) -> f64) -> Result<DVector<f64>> {
        let sd = self.spectral(x)?;
        let mut out = DVector::zeros(self.dim());
        for (l, c) in sd.eigenvalues.iter().zip(&sd.frame) {
            out += f(*l) * c;
        }
        Ok(out)
    }

    /// `max{t : x − t e ∈ K}` with a supergradient.
    pub fn lambda_e_with_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.dim();
        let mut best = (f64::INFINITY, DVector::zeros(n));
        for (off, leaf) in self.leaves() {
            let d = leaf.dim();
            let xb = x.rows(off, d).into_owned();
            let (val, grad_local) = match leaf {
                Cone::Wedge2d { half_angle } => {
                    let cot = 1.0 / half_angle.tan();
                    let s = if xb[0] >= 0.0 { 1.0 } else { -1.0 };
                    (
                        xb[1] - xb[0].abs() * cot,
                        DVector::from_vec(vec![-s * cot, 1.0]),
                    )
                }
                sym => {
                    let sd = sym.spectral(&xb).expect("leaf is symmetric");
                    let r = sd.eigenvalues.len() - 1;
                    (sd.eigenvalues[r], sd.frame[r].clone())
                }
            };
            if val < best.0 {
                let mut g = DVector::zeros(n);
                g.rows_mut(off, d).copy_from(&grad_local);
                best = (val, g);
            }
        }
        best
    }

    pub fn lambda_e(&self, x: &DVector<f64>) -> f64 {
        self.lambda_e_with_gradient(x).0
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim() && self.lambda_e(x) >= -tol
    }

    pub fn dual_contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.dual().contains(x, tol)
    }

    /// `max{t : x − t v ∈ K}`, `−∞` when no `t` works.
    pub fn lambda_v(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(v)?;
        let vn = v.norm();
        if vn == 0.0 || !self.contains(v, 1e-12 * vn) {
            return Err(Error::VNotInCone);
        }
        if self.is_orthant_like() {
            let mut t = f64::INFINITY;
            for i in 0..x.len() {
                if v[i] > 1e-14 * vn {
                    t = t.min(x[i] / v[i]);
                } else if x[i] < 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
            }
            return Ok(t);
        }
        let e = self.identity();
        let ve = vn / e.norm();
        if (v - ve * &e).amax() <= 1e-15 * vn {
            return Ok(self.lambda_e(x) / ve);
        }
        let scale = (x.norm() / vn).max(1e-300);
        let feasible = |t: f64| self.contains(&(x - t * v), 1e-13 * (x.norm() + t.abs() * vn));
        let mut lo = -scale;
        let mut found = false;
        for _ in 0..200 {
            if feasible(lo) {
                found = true;
                break;
            }
            lo *= 2.0;
        }
        if !found {
            return Ok(f64::NEG_INFINITY);
        }
        let mut hi = scale.max(lo.abs());
        for _ in 0..200 {
            if !feasible(hi) {
                break;
            }
            hi *= 2.0;
        }
        while hi - lo > 1e-11 * (1.0 + lo.abs()) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// `P` with `P x₀ = e` and `PK = K`.
    pub fn automorphism_to_identity(&self, x0: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.require_symmetric()?;
        self.check_dim(x0)?;
        let lmin = self.lambda_e(x0);
        if lmin <= 1e-12 {
            return Err(Error::NotInterior(lmin));
        }
        let w = self.spectral_map(x0, |l| 1.0 / l.sqrt())?;
        self.quadratic_representation(&w)
    }

    /// Euclidean projection onto the cone.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (off, leaf) in self.leaves() {
            let d = leaf.dim();
            let xb = x.rows(off, d).into_owned();
            let pb = match leaf {
                Cone::Wedge2d { half_angle } => project_wedge(*half_angle, &xb),
                sym => sym
                    .spectral_map(&xb, |l| l.max(0.0))
                    .expect("leaf is symmetric"),
            };
            out.rows_mut(off, d).copy_from(&pb);
        }
        out
    }

    /// Square generator matrix (columns are extreme rays) for simplicial cones.
    pub fn generators(&self) -> Option<DMatrix<f64>> {
        if !self.is_polyhedral() {
            return None;
        }
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for (off, leaf) in self.leaves() {
            match leaf {
                Cone::Orthant(d) => {
                    for i in 0..*d {
                        g[(off + i, off + i)] = 1.0;
                    }
                }
                Cone::Wedge2d { half_angle } => {
                    let (s, c) = half_angle.sin_cos();
                    g[(off, off)] = s;
                    g[(off + 1, off)] = c;
                    g[(off, off + 1)] = -s;
                    g[(off + 1, off + 1)] = c;
                }
                _ => unreachable!(),
            }
        }
        Some(g)
    }

    /// Coordinate idempotents of an orthant-like cone.
    pub fn primitive_idempotents(&self) -> Option<Vec<DVector<f64>>> {
        if !self.is_orthant_like() {
            return None;
        }
        let n = self.dim();
        Some(
            (0..n)
                .map(|i| {
                    let mut c = DVector::zeros(n);
                    c[i] = 1.0;
                    c
                })
                .collect(),
        )
    }

    pub fn sample_primitive_idempotent<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        self.require_symmetric()?;
        let leaves = self.leaves();
        let (off, leaf) = leaves[rng.random_range(0..leaves.len())];
        let d = leaf.dim();
        let local = match leaf {
            Cone::Orthant(n) => {
                let mut c = DVector::zeros(*n);
                c[rng.random_range(0..*n)] = 1.0;
                c
            }
            Cone::SecondOrder(n) => {
                let dir = unit_gaussian(rng, n - 1);
                let mut c = DVector::zeros(*n);
                c[0] = 1.0 / SQRT2;
                c.rows_mut(1, n - 1).copy_from(&(dir / SQRT2));
                c
            }
            Cone::Psd(k) => {
                let a = unit_gaussian(rng, *k);
                svec(&(&a * a.transpose()))
            }
            _ => unreachable!(),
        };
        let mut c = DVector::zeros(self.dim());
        c.rows_mut(off, d).copy_from(&local);
        Ok(c)
    }

    /// Random element of the cone (interior with probability one).
    pub fn sample_element<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for (off, leaf) in self.leaves() {
            let d = leaf.dim();
            let local = match leaf {
                Cone::Orthant(n) => DVector::from_fn(*n, |_, _| gauss(rng).abs()),
                Cone::SecondOrder(n) => {
                    let bar = DVector::from_fn(n - 1, |_, _| gauss(rng));
                    let mut c = DVector::zeros(*n);
                    c[0] = bar.norm() + gauss(rng).abs();
                    c.rows_mut(1, n - 1).copy_from(&bar);
                    c
                }
                Cone::Psd(k) => {
                    let g = DMatrix::from_fn(*k, *k, |_, _| gauss(rng));
                    svec(&(&g * g.transpose()))
                }
                Cone::Wedge2d { half_angle } => {
                    let (s, c) = half_angle.sin_cos();
                    let (a, b) = (gauss(rng).abs(), gauss(rng).abs());
                    DVector::from_vec(vec![(a - b) * s, (a + b) * c])
                }
                _ => unreachable!(),
            };
            x.rows_mut(off, d).copy_from(&local);
        }
        x
    }

    /// `v ∈ K∖{0}`, `u ∈ K*∖{0}` with `⟨u, v⟩ = 0`.
    pub fn sample_boundary_pair<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let leaves = self.leaves();
        let eligible: Vec<usize> = (0..leaves.len())
            .filter(|&i| {
                leaves.len() > 1 || !matches!(leaves[i].1, Cone::Orthant(1) | Cone::Psd(1))
            })
            .collect();
        if eligible.is_empty() {
            return Err(Error::Validation(
                "cone has no nontrivial boundary pair".into(),
            ));
        }
        let chosen = eligible[rng.random_range(0..eligible.len())];
        let n = self.dim();
        let mut v = DVector::zeros(n);
        let mut u = DVector::zeros(n);
        for (idx, (off, leaf)) in leaves.iter().enumerate() {
            let d = leaf.dim();
            if idx != chosen {
                v.rows_mut(*off, d).copy_from(&leaf.sample_element(rng));
                continue;
            }
            let (vl, ul) = match leaf {
                Cone::Orthant(m) if *m == 1 => (DVector::zeros(1), DVector::from_element(1, 1.0)),
                Cone::Orthant(m) => {
                    let zeros = rng.random_range(1..*m);
                    let mut idxs: Vec<usize> = (0..*m).collect();
                    for i in (1..*m).rev() {
                        idxs.swap(i, rng.random_range(0..=i));
                    }
                    let mut vl = DVector::zeros(*m);
                    let mut ul = DVector::zeros(*m);
                    for (r, &i) in idxs.iter().enumerate() {
                        if r < zeros {
                            ul[i] = gauss(rng).abs() + 0.1;
                        } else {
                            vl[i] = gauss(rng).abs() + 0.1;
                        }
                    }
                    (vl, ul)
                }
                Cone::SecondOrder(m) => {
                    let dir = unit_gaussian(rng, m - 1);
                    let (a, b) = (gauss(rng).abs() + 0.1, gauss(rng).abs() + 0.1);
                    let mut vl = DVector::zeros(*m);
                    let mut ul = DVector::zeros(*m);
                    vl[0] = a;
                    ul[0] = b;
                    vl.rows_mut(1, m - 1).copy_from(&(a * &dir));
                    ul.rows_mut(1, m - 1).copy_from(&(-b * &dir));
                    (vl, ul)
                }
                Cone::Psd(k) if *k == 1 => (DVector::zeros(1), DVector::from_element(1, 1.0)),
                Cone::Psd(k) => {
                    let g = DMatrix::from_fn(*k, *k, |_, _| gauss(rng));
                    let q = g.qr().q();
                    let split = rng.random_range(1..*k);
                    let mut vm = DMatrix::zeros(*k, *k);
                    let mut um = DMatrix::zeros(*k, *k);
                    for i in 0..*k {
                        let col = q.column(i);
                        let w = gauss(rng).abs() + 0.1;
                        if i < split {
                            vm += w * col * col.transpose();
                        } else {
                            um += w * col * col.transpose();
                        }
                    }
                    (svec(&vm), svec(&um))
                }
                Cone::Wedge2d { half_angle } => {
                    let (s, c) = half_angle.sin_cos();
                    let (a, b) = (gauss(rng).abs() + 0.1, gauss(rng).abs() + 0.1);
                    if rng.random_bool(0.5) {
                        (
                            DVector::from_vec(vec![a * s, a * c]),
                            DVector::from_vec(vec![-b * c, b * s]),
                        )
                    } else {
                        (
                            DVector::from_vec(vec![-a * s, a * c]),
                            DVector::from_vec(vec![b * c, b * s]),
                        )
                    }
                }
                _ => unreachable!(),
            };
            v.rows_mut(*off, d).copy_from(&vl);
            u.rows_mut(*off, d).copy_from(&ul);
        }
        if v.norm() == 0.0 {
            return self.sample_boundary_pair(rng);
        }
        Ok((v, u))
    }
}

fn project_wedge(phi: f64, x: &DVector<f64>) -> DVector<f64> {
    let (s, c) = phi.sin_cos();
    if x[1] * s >= x[0].abs() * c {
        return x.clone();
    }
    // polar cone is the dual wedge reflected through the origin
    if -x[1] * c >= x[0].abs() * s {
        return DVector::zeros(2);
    }
    let g = if x[0] >= 0.0 {
        DVector::from_vec(vec![s, c])
    } else {
        DVector::from_vec(vec![-s, c])
    };
    g.dot(x).max(0.0) * g
}

pub(crate) fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub(crate) fn unit_gaussian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| gauss(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}
