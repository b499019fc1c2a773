//! Grid-structured equality-constrained quadratic minimisation
//!
//! `min ‖D x‖² + λ‖w∘x‖²  s.t.  A x = b`
//!
//! with `D` the stacked periodic forward differences on a `2N x 2N` grid and
//! `A` sparse with a handful of entries per row. The multipliers solve the
//! dense Schur system `A Q⁻¹ A* μ = b`. For `λ = 0` (or `w ≡ 0`) `Q` is the
//! periodic Laplacian, handled through its circulant pseudo-inverse plus the
//! constant mode; otherwise `Q` is factored by a banded Cholesky.

use crate::fft::fft2;
use crate::linalg::{CMatrix, CVector};
use crate::{Error, Result, C64};
use std::f64::consts::PI;

/// Sparse constraint rows over `ncols` unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, C64)>>,
}

impl SparseRows {
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(c, a)| a * x[c]).sum())
            .collect()
    }

    /// `A* μ`.
    pub fn apply_adjoint(&self, mu: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.ncols];
        for (r, &m) in self.rows.iter().zip(mu) {
            for &(c, a) in r {
                y[c] += a.conj() * m;
            }
        }
        y
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut a = CMatrix::zeros(self.rows.len(), self.ncols);
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                a[(i, c)] += v;
            }
        }
        a
    }

    pub fn residual(&self, x: &[C64], b: &[C64]) -> f64 {
        self.apply(x)
            .iter()
            .zip(b)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Dense stacked periodic gradient on an `m x m` grid (for small oracles).
pub fn gradient_matrix(m: usize) -> CMatrix {
    let n = m * m;
    let mut d = CMatrix::zeros(2 * n, n);
    for i in 0..m {
        for j in 0..m {
            let p = i * m + j;
            d[(p, p)] -= C64::new(1.0, 0.0);
            d[(p, i * m + (j + 1) % m)] += C64::new(1.0, 0.0);
            d[(n + p, p)] -= C64::new(1.0, 0.0);
            d[(n + p, ((i + 1) % m) * m + j)] += C64::new(1.0, 0.0);
        }
    }
    d
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: Vec<C64>,
    pub residual: f64,
    pub objective: f64,
}

/// `‖D x‖² + λ‖w∘x‖²` on the `m x m` periodic grid.
pub fn objective(x: &[C64], m: usize, weight: Option<(&[f64], f64)>) -> f64 {
    let mut e = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = i * m + j;
            e += (x[i * m + (j + 1) % m] - x[p]).norm_sqr();
            e += (x[((i + 1) % m) * m + j] - x[p]).norm_sqr();
        }
    }
    if let Some((w, lam)) = weight {
        e += lam * x.iter().zip(w).map(|(z, w)| w * w * z.norm_sqr()).sum::<f64>();
    }
    e
}

/// Solves the structured problem on an `m x m` grid.
pub fn solve(m: usize, a: &SparseRows, b: &[C64], weight: Option<(&[f64], f64)>) -> Result<QpSolution> {
    let n = m * m;
    if a.ncols != n || a.rows.len() != b.len() {
        return Err(Error::Shape(format!(
            "constraint has {} columns for {} unknowns",
            a.ncols, n
        )));
    }
    if m < 4 {
        return Err(Error::Shape("grid side must be at least 4".into()));
    }
    let weighted = match weight {
        Some((w, lam)) => lam > 0.0 && w.iter().any(|&v| v != 0.0),
        None => false,
    };
    let x = if weighted {
        let (w, lam) = weight.expect("weighted");
        solve_banded(m, a, b, w, lam)?
    } else {
        solve_circulant(m, a, b)?
    };
    let residual = a.residual(&x, b);
    let objective = objective(&x, m, weight);
    Ok(QpSolution { x, residual, objective })
}

fn dense_solve(s: CMatrix, rhs: CVector) -> Result<CVector> {
    let lu = s.lu();
    let diag: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmax == 0.0 || dmin <= 1e-14 * dmax {
        return Err(Error::SingularKkt(if dmin > 0.0 { dmax / dmin } else { f64::INFINITY }));
    }
    lu.solve(&rhs).ok_or(Error::SingularKkt(f64::INFINITY))
}

/// Symbol of the periodic Laplacian `DᵀD` on an `m x m` grid.
fn laplacian_symbol(m: usize) -> Vec<f64> {
    let t: Vec<f64> = (0..m)
        .map(|k| 2.0 - 2.0 * (2.0 * PI * k as f64 / m as f64).cos())
        .collect();
    let mut s = vec![0.0; m * m];
    for k1 in 0..m {
        for k2 in 0..m {
            s[k1 * m + k2] = t[k1] + t[k2];
        }
    }
    s
}

/// Kernel of the pseudo-inverse of the periodic Laplacian.
fn laplacian_pinv_kernel(m: usize) -> Vec<f64> {
    let sym = laplacian_symbol(m);
    let mut g: Vec<C64> = sym
        .iter()
        .map(|&l| C64::new(if l > 0.0 { 1.0 / l } else { 0.0 }, 0.0))
        .collect();
    g[0] = C64::new(0.0, 0.0);
    fft2(&mut g, m, true);
    g.iter().map(|z| z.re).collect()
}

fn solve_circulant(m: usize, a: &SparseRows, b: &[C64]) -> Result<Vec<C64>> {
    let n = m * m;
    let k = a.rows.len();
    let g = laplacian_pinv_kernel(m);
    let gk = |p: usize, q: usize| {
        let (pi, pj) = (p / m, p % m);
        let (qi, qj) = (q / m, q % m);
        g[((pi + m - qi) % m) * m + (pj + m - qj) % m]
    };
    // bordered Schur system [[A G A*, A1], [1ᵀA*, 0]]
    let mut s = CMatrix::zeros(k + 1, k + 1);
    for (i, ri) in a.rows.iter().enumerate() {
        for (l, rl) in a.rows.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &(p, ap) in ri {
                for &(q, aq) in rl {
                    acc += ap * gk(p, q) * aq.conj();
                }
            }
            s[(i, l)] = acc;
        }
        let rowsum: C64 = ri.iter().map(|&(_, v)| v).sum();
        s[(i, k)] = rowsum;
        s[(k, i)] = rowsum.conj();
    }
    let mut rhs = CVector::zeros(k + 1);
    for (i, v) in b.iter().enumerate() {
        rhs[i] = *v;
    }
    let sol = dense_solve(s, rhs)?;
    let mu: Vec<C64> = sol.iter().take(k).copied().collect();
    let c = sol[k];
    let mut y = a.apply_adjoint(&mu);
    fft2(&mut y, m, false);
    let sym = laplacian_symbol(m);
    for (z, &l) in y.iter_mut().zip(&sym) {
        *z = if l > 0.0 { *z / l } else { C64::new(0.0, 0.0) };
    }
    fft2(&mut y, m, true);
    debug_assert_eq!(y.len(), n);
    Ok(y.into_iter().map(|z| z + c).collect())
}

/// Lower band Cholesky factor of a real SPD matrix with half-bandwidth `bw`.
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// `entry(i, k)` for `i - bw <= k <= i` gives the lower band of the matrix.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        let at = |i: usize, k: usize| i * w + (i - k);
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut s = entry(j, j);
            for k in lo..j {
                s -= l[at(j, k)] * l[at(j, k)];
            }
            if s <= 0.0 {
                return Err(Error::SingularKkt(f64::INFINITY));
            }
            let d = s.sqrt();
            l[at(j, j)] = d;
            for i in j + 1..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = entry(i, j);
                for k in lo_i..j {
                    s -= l[at(i, k)] * l[at(j, k)];
                }
                l[at(i, j)] = s / d;
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn solve(&self, r: &mut [f64]) {
        let w = self.bw + 1;
        let at = |i: usize, k: usize| i * w + (i - k);
        for i in 0..self.n {
            let mut s = r[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l[at(i, k)] * r[k];
            }
            r[i] = s / self.l[at(i, i)];
        }
        for i in (0..self.n).rev() {
            let mut s = r[i];
            for k in i + 1..(i + self.bw + 1).min(self.n) {
                s -= self.l[at(k, i)] * r[k];
            }
            r[i] = s / self.l[at(i, i)];
        }
    }

    pub fn solve_complex(&self, r: &[C64]) -> Vec<C64> {
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        let mut im: Vec<f64> = r.iter().map(|z| z.im).collect();
        self.solve(&mut re);
        self.solve(&mut im);
        re.into_iter().zip(im).map(|(a, b)| C64::new(a, b)).collect()
    }
}

/// Row order `0, m-1, 1, m-2, ...` keeps periodic neighbours within two
/// positions, so the Laplacian has half-bandwidth `2m`.
fn interleaved_positions(m: usize) -> Vec<usize> {
    let mut pos = vec![0; m];
    for i in 0..m.div_ceil(2) {
        pos[i] = 2 * i;
        if m - 1 - i != i {
            pos[m - 1 - i] = 2 * i + 1;
        }
    }
    pos
}

fn solve_banded(m: usize, a: &SparseRows, b: &[C64], w: &[f64], lam: f64) -> Result<Vec<C64>> {
    let n = m * m;
    let pos = interleaved_positions(m);
    let mut inv = vec![0; m];
    for (i, &p) in pos.iter().enumerate() {
        inv[p] = i;
    }
    let node = |i: usize, j: usize| pos[i] * m + j;
    let grid_of = |p: usize| (inv[p / m], p % m);
    let entry = |r: usize, c: usize| -> f64 {
        let (ri, rj) = grid_of(r);
        let (ci, cj) = grid_of(c);
        let mut v = 0.0;
        if r == c {
            v += 4.0 + lam * w[ri * m + rj] * w[ri * m + rj];
        }
        for (di, dj) in [(1, 0), (m - 1, 0), (0, 1), (0, m - 1)] {
            if (ri + di) % m == ci && (rj + dj) % m == cj {
                v -= 1.0;
            }
        }
        v
    };
    let chol = BandCholesky::factor(n, 2 * m, entry)?;
    let to_band = |x: &[C64]| {
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..m {
            for j in 0..m {
                y[node(i, j)] = x[i * m + j];
            }
        }
        y
    };
    let from_band = |y: &[C64]| {
        let mut x = vec![C64::new(0.0, 0.0); n];
        for i in 0..m {
            for j in 0..m {
                x[i * m + j] = y[node(i, j)];
            }
        }
        x
    };
    let k = a.rows.len();
    let mut s = CMatrix::zeros(k, k);
    let mut col = vec![C64::new(0.0, 0.0); n];
    for (i, ri) in a.rows.iter().enumerate() {
        col.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for &(p, v) in ri {
            col[p] += v.conj();
        }
        let z = from_band(&chol.solve_complex(&to_band(&col)));
        for (l, rl) in a.rows.iter().enumerate() {
            s[(l, i)] = rl.iter().map(|&(q, v)| v * z[q]).sum();
        }
    }
    let mu = dense_solve(s, CVector::from_column_slice(b))?;
    let y = a.apply_adjoint(mu.as_slice());
    Ok(from_band(&chol.solve_complex(&to_band(&y))))
}
