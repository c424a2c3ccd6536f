//! Central-cut ellipsoid method for `max f(z) s.t. g(z) ≤ 0` with `f` concave, `g` convex.

use nalgebra::{DMatrix, DVector};

/// Answer of the oracle at a query point.
pub enum Query {
    /// Point is feasible; `f` value and a supergradient.
    Feasible {
        value: f64,
        supergradient: DVector<f64>,
    },
    /// Point is infeasible; `cut` with `cutᵀ(z − query) ≤ 0` for all feasible `z`.
    Infeasible { cut: DVector<f64> },
}

#[derive(Debug, Clone)]
pub struct EllipsoidResult {
    pub value: f64,
    pub point: Option<DVector<f64>>,
    pub iterations: usize,
}

/// Maximizes over the ball of `radius` about `center`, stopping once the ellipsoid
/// volume ratio implies `tol` relative accuracy or `max_iter` is reached.
pub fn maximize<F>(
    center: DVector<f64>,
    radius: f64,
    tol: f64,
    max_iter: usize,
    mut oracle: F,
) -> EllipsoidResult
where
    F: FnMut(&DVector<f64>) -> Query,
{
    let d = center.len();
    let mut best = EllipsoidResult {
        value: f64::NEG_INFINITY,
        point: None,
        iterations: 0,
    };
    if d == 0 {
        if let Query::Feasible { value, .. } = oracle(&center) {
            best.value = value;
            best.point = Some(center);
        }
        return best;
    }
    if d == 1 {
        return bisect(
            center[0] - radius,
            center[0] + radius,
            tol,
            max_iter,
            oracle,
        );
    }
    let df = d as f64;
    let mut x = center;
    let mut p = DMatrix::identity(d, d) * (radius * radius);
    let default_cap =
        (2.0 * df * (df + 1.0) * ((radius / tol.max(1e-300)).ln().max(1.0))).ceil() as usize;
    let cap = max_iter.min(default_cap.max(50));
    for it in 0..cap {
        best.iterations = it + 1;
        let a = match oracle(&x) {
            Query::Feasible {
                value,
                supergradient,
            } => {
                if value > best.value {
                    best.value = value;
                    best.point = Some(x.clone());
                }
                // keep {z : gᵀ(z − x) ≥ 0}
                -supergradient
            }
            Query::Infeasible { cut } => cut,
        };
        let pa = &p * &a;
        let apa = a.dot(&pa);
        if !(apa > 1e-300) {
            break;
        }
        let b = pa / apa.sqrt();
        x -= &b / (df + 1.0);
        p = (&p - (&b * b.transpose()) * (2.0 / (df + 1.0))) * (df * df / (df * df - 1.0));
        p = (&p + p.transpose()) * 0.5;
        if p.trace().sqrt() < tol * 1e-3 {
            break;
        }
    }
    best
}

fn bisect<F>(mut lo: f64, mut hi: f64, tol: f64, max_iter: usize, mut oracle: F) -> EllipsoidResult
where
    F: FnMut(&DVector<f64>) -> Query,
{
    let mut best = EllipsoidResult {
        value: f64::NEG_INFINITY,
        point: None,
        iterations: 0,
    };
    for it in 0..max_iter.max(1) {
        best.iterations = it + 1;
        let mid = 0.5 * (lo + hi);
        let z = DVector::from_element(1, mid);
        let a = match oracle(&z) {
            Query::Feasible {
                value,
                supergradient,
            } => {
                if value > best.value {
                    best.value = value;
                    best.point = Some(z.clone());
                }
                -supergradient[0]
            }
            Query::Infeasible { cut } => cut[0],
        };
        if a > 0.0 {
            hi = mid;
        } else if a < 0.0 {
            lo = mid;
        } else {
            break;
        }
        if hi - lo < tol * 1e-3 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_quadratic_on_disc() {
        // max -(z1-0.3)² - (z2+0.2)² on the unit disc
        let res = maximize(DVector::zeros(2), 1.0, 1e-9, 5000, |z| {
            if z.norm() > 1.0 {
                Query::Infeasible { cut: z.clone() }
            } else {
                let t = DVector::from_vec(vec![0.3, -0.2]);
                let diff = z - &t;
                Query::Feasible {
                    value: -diff.norm_squared(),
                    supergradient: -2.0 * diff,
                }
            }
        });
        assert!(res.value > -1e-8);
    }

    #[test]
    fn linear_on_disc_attains_norm() {
        let c = DVector::from_vec(vec![1.0, 2.0, -2.0]);
        let res = maximize(DVector::zeros(3), 1.0, 1e-10, 20000, |z| {
            if z.norm() > 1.0 {
                Query::Infeasible { cut: z.clone() }
            } else {
                Query::Feasible {
                    value: c.dot(z),
                    supergradient: c.clone(),
                }
            }
        });
        assert!((res.value - 3.0).abs() < 1e-7, "{}", res.value);
    }

    #[test]
    fn one_dimensional_bisection() {
        let res = maximize(DVector::zeros(1), 2.0, 1e-12, 200, |z| {
            let t = z[0];
            Query::Feasible {
                value: -(t - 0.7).abs(),
                supergradient: DVector::from_element(1, if t < 0.7 { 1.0 } else { -1.0 }),
            }
        });
        assert!(res.value > -1e-10);
    }
}
