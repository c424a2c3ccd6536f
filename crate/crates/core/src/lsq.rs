//! Nonnegative least squares and least-distance programming (active set).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `argmin ‖E x − f‖₂` subject to `x ≥ 0`.
pub fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
    let (_, q) = e.shape();
    let scale = 1.0 + e.amax() * (1.0 + f.amax());
    let tol = 1e-13 * scale * (e.nrows().max(q) as f64);
    let mut x = DVector::zeros(q);
    let mut passive = vec![false; q];
    let mut w = e.transpose() * (f - e * &x);
    let max_outer = 3 * q + 30;
    for _ in 0..max_outer {
        let candidate = (0..q)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(t) = candidate else {
            return Ok(x);
        };
        passive[t] = true;
        let mut inner = 0;
        loop {
            inner += 1;
            if inner > 3 * q + 30 {
                return Err(Error::NumericalFailure(
                    "NNLS inner loop did not converge".into(),
                ));
            }
            let z = passive_lsq(e, f, &passive)?;
            if (0..q).all(|j| !passive[j] || z[j] > tol) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for j in 0..q {
                if passive[j] && z[j] <= tol {
                    let denom = x[j] - z[j];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    } else {
                        alpha = 0.0f64.min(alpha);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            x += alpha * (&z - &x);
            for j in 0..q {
                if passive[j] && x[j] <= tol {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        w = e.transpose() * (f - e * &x);
        if (0..q).all(|j| passive[j]) {
            return Ok(x);
        }
    }
    Err(Error::NumericalFailure(
        "NNLS outer loop did not converge".into(),
    ))
}

fn passive_lsq(e: &DMatrix<f64>, f: &DVector<f64>, passive: &[bool]) -> Result<DVector<f64>> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let mut sub = DMatrix::zeros(e.nrows(), cols.len());
    for (k, &j) in cols.iter().enumerate() {
        sub.set_column(k, &e.column(j));
    }
    let zs = crate::linalg::pseudo_inverse(&sub, 1e-13)? * f;
    let mut z = DVector::zeros(passive.len());
    for (k, &j) in cols.iter().enumerate() {
        z[j] = zs[k];
    }
    Ok(z)
}

/// Solution of `min ‖w‖₂ s.t. G w ≥ h`.
#[derive(Debug, Clone)]
pub struct Ldp {
    pub w: DVector<f64>,
    /// Nonnegative multipliers with `w = Gᵀλ` and `λᵀ(Gw − h) = 0`.
    pub multipliers: DVector<f64>,
}

/// Least-distance program; `Ok(None)` when `G w ≥ h` is infeasible.
pub fn ldp(g: &DMatrix<f64>, h: &DVector<f64>) -> Result<Option<Ldp>> {
    let (r, m) = g.shape();
    if h.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: h.len(),
        });
    }
    if r == 0 || h.iter().all(|&v| v <= 0.0) {
        return Ok(Some(Ldp {
            w: DVector::zeros(m),
            multipliers: DVector::zeros(r),
        }));
    }
    let mut e = DMatrix::zeros(m + 1, r);
    e.view_mut((0, 0), (m, r)).copy_from(&g.transpose());
    e.row_mut(m).copy_from(&h.transpose());
    let mut f = DVector::zeros(m + 1);
    f[m] = 1.0;
    let u = nnls(&e, &f)?;
    let res = &e * &u - &f;
    let scale = 1.0 + g.amax() + h.amax();
    if res.norm() <= 1e-10 * scale || res[m].abs() <= 1e-12 {
        return Ok(None);
    }
    let w = -res.rows(0, m) / res[m];
    let multipliers = u / (-res[m]);
    let viol = (g * &w - h).min();
    if viol < -1e-7 * scale * (1.0 + w.norm()) {
        return Err(Error::NumericalFailure(format!(
            "LDP solution violates constraints by {viol:e}"
        )));
    }
    Ok(Some(Ldp { w, multipliers }))
}
