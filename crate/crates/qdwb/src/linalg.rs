//! Dense complex linear algebra: SVD, numerical rank, left null vectors,
//! least squares and equality-constrained quadratic minimisation.

use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative rank threshold used throughout the solver.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (k, s) in self.sigma.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.adjoint()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub tol: f64,
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// One-sided Jacobi on the columns of `a` (`rows >= cols`). Returns the
/// rotated columns (orthogonal, norms = singular values) and the unitary `V`.
fn jacobi(mut a: CMatrix) -> (CMatrix, CMatrix) {
    let n = a.ncols();
    let mut v = CMatrix::identity(n, n);
    // columns this small are roundoff; rotating them drifts into subnormals
    let floor = (f64::EPSILON * f64::EPSILON * a.norm()).powi(2);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || alpha <= floor || beta <= floor || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let ph = gamma / g;
                let ph = ph / ph.norm();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let xp = mat[(r, p)];
                        let xq = mat[(r, q)] * ph.conj();
                        mat[(r, p)] = xp * c - xq * s;
                        mat[(r, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (a, v)
}

/// Thin SVD `M = U Σ V*` with σ sorted descending, by one-sided Jacobi.
/// Columns of `U` for zero singular values are left zero.
pub fn svd(m: &CMatrix) -> Result<Svd> {
    check_finite(m)?;
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: CMatrix::zeros(rows, 0),
            sigma: vec![],
            v: CMatrix::zeros(cols, 0),
        });
    }
    if rows < cols {
        let t = svd(&m.adjoint())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let (w, v) = jacobi(m.clone());
    let norms: Vec<f64> = (0..cols).map(|c| w.column(c).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut su = CMatrix::zeros(rows, k);
    let mut sv = CMatrix::zeros(cols, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        if s > 0.0 {
            su.set_column(dst, &(w.column(src) / C64::new(s, 0.0)));
        }
        sv.set_column(dst, &v.column(src));
        sigma.push(s);
    }
    Ok(Svd { u: su, sigma, v: sv })
}

pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.sigma)
}

pub fn rank_of(sigma: &[f64], tol: f64) -> usize {
    match sigma.first() {
        Some(&top) if top > 0.0 => sigma.iter().filter(|&&s| s > tol * top).count(),
        _ => 0,
    }
}

pub fn numerical_rank(m: &CMatrix, tol: f64) -> Result<RankReport> {
    let singular_values = singular_values(m)?;
    let rank = rank_of(&singular_values, tol);
    Ok(RankReport {
        singular_values,
        rank,
        tol,
    })
}

/// Scales `v` to unit norm with its largest-magnitude entry real positive.
pub fn normalize_phase(v: &mut CVector) {
    let mut best = 0;
    for k in 1..v.len() {
        if v[k].norm() > v[best].norm() {
            best = k;
        }
    }
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let rot = v[best].conj() / v[best].norm();
    for z in v.iter_mut() {
        *z = *z * rot / norm;
    }
    v[best] = C64::new(v[best].norm(), 0.0);
}

/// Row vector `v` with `v M = 0`, for `M` of co-rank one in its rows.
/// Taken as the conjugated smallest right singular vector of `M*`.
pub fn left_null_vector(m: &CMatrix, tol: f64) -> Result<CVector> {
    check_finite(m)?;
    let rows = m.nrows();
    if rows == 0 {
        return Err(Error::NullSpace { rank: 0, rows });
    }
    let mut h = CMatrix::zeros(m.ncols().max(rows), rows);
    h.view_mut((0, 0), (m.ncols(), rows)).copy_from(&m.adjoint());
    let d = svd(&h)?;
    let rank = rank_of(&d.sigma, tol);
    if rank != rows - 1 {
        return Err(Error::NullSpace { rank, rows });
    }
    let mut v: CVector = d.v.column(rows - 1).map(|z| z.conj());
    normalize_phase(&mut v);
    Ok(v)
}

/// Minimum-norm least-squares solution of `M x = b`.
pub fn least_squares(m: &CMatrix, b: &CVector, tol: f64) -> Result<CVector> {
    check_finite(m)?;
    let d = svd(m)?;
    let top = d.sigma.first().copied().unwrap_or(0.0);
    let mut x = CVector::zeros(m.ncols());
    for (k, &s) in d.sigma.iter().enumerate() {
        if s > tol * top && s > 0.0 {
            let coef = d.u.column(k).dotc(b) / s;
            x += d.v.column(k) * coef;
        }
    }
    Ok(x)
}

/// Minimises `‖D x‖²` subject to `A x = b` through the bordered system
/// `[[D*D, A*], [A, 0]] [x; λ] = [0; b]`.
pub fn eq_constrained_quad_min(d: &CMatrix, a: &CMatrix, b: &CVector) -> Result<CVector> {
    check_finite(d)?;
    check_finite(a)?;
    let n = d.ncols();
    let m = a.nrows();
    if a.ncols() != n || b.len() != m {
        return Err(Error::Shape(format!(
            "D is {}x{}, A is {}x{}, b has {}",
            d.nrows(),
            n,
            m,
            a.ncols(),
            b.len()
        )));
    }
    let mut k = CMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(&(d.adjoint() * d));
    k.view_mut((0, n), (n, m)).copy_from(&a.adjoint());
    k.view_mut((n, 0), (m, n)).copy_from(a);
    let mut rhs = CVector::zeros(n + m);
    rhs.rows_mut(n, m).copy_from(b);

    let lu = k.clone().full_piv_lu();
    let diag: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmax == 0.0 || dmin <= dmax * 1e-14 {
        return Err(Error::SingularKkt(if dmin > 0.0 { dmax / dmin } else { f64::INFINITY }));
    }
    let mut sol = lu.solve(&rhs).ok_or(Error::SingularKkt(f64::INFINITY))?;
    let bnorm = b.norm().max(f64::MIN_POSITIVE);
    let x = sol.rows(0, n).into_owned();
    if (a * &x - b).norm() > 1e-12 * bnorm {
        let r = &rhs - &k * &sol;
        if let Some(dx) = lu.solve(&r) {
            sol += dx;
        }
    }
    Ok(sol.rows(0, n).into_owned())
}

/// Periodic forward difference on `n` points as a dense matrix.
pub fn periodic_difference(n: usize) -> CMatrix {
    let mut d = CMatrix::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = C64::new(-1.0, 0.0);
        d[(i, (i + 1) % n)] += C64::new(1.0, 0.0);
    }
    d
}
