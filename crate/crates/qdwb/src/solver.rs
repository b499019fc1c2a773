//! Biorthogonal completion of a dual high-pass bank.
//!
//! Steps, in order: rank screen of `M̃(ω)`, null-space solve for the low-pass
//! quadruple, periodic regularisation of `m_0`, constrained quadratic solve
//! for `m̃_0`, and per-point least squares for `m_1..m_6`. Also houses the
//! one- and two-dimensional optimisation oracles.

use crate::design::{DualPair, FilterBank, MFunction, Role};
use crate::lattice::{label_uv, FreqGrid, GAMMA1};
use crate::linalg::{self, CMatrix, CVector};
use crate::prcheck::{self, build_mtilde};
use crate::qp::{self, SparseRows};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::time::Instant;

/// How `m_0` is rescaled by a π-periodic field before `m̃_0` is solved for.
#[derive(Clone, Debug, PartialEq)]
pub enum Regularization {
    /// `m_0′ = 1/conj(t)` on C0 and zero elsewhere; `None` selects the
    /// tensor low-pass `cos²(ω₁/2)·cos²(ω₂/2)`.
    ReciprocalTarget(Option<Vec<C64>>),
    /// `m_0′ = c·m_0` for a user field `c`.
    CField(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub n: usize,
    /// Relative singular-value threshold for ranks and null spaces.
    pub rank_tol: f64,
    /// Bound on `‖v·M̃[even, 1..]‖` for the low-pass quadruple.
    pub null_tol: f64,
    /// Bound on the per-point least-squares residual.
    pub ls_tol: f64,
    /// Bound on the constraint residual of the quadratic solve.
    pub qp_tol: f64,
    pub regularization: Regularization,
    /// Weight of `‖w∘x‖²` in the two-dimensional oracle.
    pub lambda: f64,
}

impl SolverConfig {
    pub fn new(n: usize) -> Self {
        SolverConfig {
            n,
            rank_tol: linalg::RANK_TOL,
            null_tol: 1e-10,
            ls_tol: prcheck::TOL_SOLVER,
            qp_tol: 1e-10,
            regularization: Regularization::ReciprocalTarget(None),
            lambda: 600.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tols = [self.rank_tol, self.null_tol, self.ls_tol, self.qp_tol];
        if tols.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Invalid("λ must be non-negative".into()));
        }
        FreqGrid::new(self.n).map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: u8,
    pub name: &'static str,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveTrace {
    pub steps: Vec<StepRecord>,
    /// `rank M̃[:, 1..]` over the quadrant, row-major `N x N`.
    pub rank_full: Vec<u8>,
    /// `rank M̃[even, 1..]` over the quadrant.
    pub rank_even: Vec<u8>,
    /// Quadrant indices (into the full grid) failing the rank screen.
    pub infeasible: Vec<usize>,
}

impl SolveTrace {
    fn record(&mut self, step: u8, name: &'static str, residual: f64, t0: Instant) {
        self.steps.push(StepRecord {
            step,
            name,
            residual,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }

    /// Fraction of quadrant points with ranks `(6, 3)`.
    pub fn rank_pass_fraction(&self) -> f64 {
        let ok = self
            .rank_full
            .iter()
            .zip(&self.rank_even)
            .filter(|&(&f, &e)| f == 6 && e == 3)
            .count();
        ok as f64 / self.rank_full.len().max(1) as f64
    }

    /// `step name residual seconds` per executed step, then the rank summary.
    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .steps
            .iter()
            .map(|s| format!("step{} {} {:.3e} {:.3}", s.step, s.name, s.residual, s.seconds))
            .collect();
        out.push(format!(
            "ranks (6,3) {:.6} infeasible {}",
            self.rank_pass_fraction(),
            self.infeasible.len()
        ));
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankScreen {
    pub full: Vec<u8>,
    pub even: Vec<u8>,
    pub failures: Vec<usize>,
    pub pass: bool,
}

pub fn rank_screen(dual: &FilterBank, tol: f64) -> RankScreen {
    let g = dual.grid;
    let pts: Vec<usize> = g.quadrant().collect();
    let ranks: Vec<(u8, u8)> = pts
        .par_iter()
        .map(|&idx| {
            let mt = build_mtilde(dual, idx);
            let rank = |m: &CMatrix| linalg::numerical_rank(m, tol).map(|r| r.rank as u8).unwrap_or(0);
            (rank(&mt.highpass()), rank(&mt.highpass_even()))
        })
        .collect();
    let failures: Vec<usize> = pts
        .iter()
        .zip(&ranks)
        .filter(|(_, &(f, e))| f != 6 || e != 3)
        .map(|(&i, _)| i)
        .collect();
    RankScreen {
        full: ranks.iter().map(|r| r.0).collect(),
        even: ranks.iter().map(|r| r.1).collect(),
        pass: failures.is_empty(),
        failures,
    }
}

/// Low-pass `m_0` from the left null vectors of `M̃[even, 1..]`, one per
/// Γ0-orbit, broadcast to the four shifts. Returns the worst null residual.
pub fn solve_m0_quadruple(dual: &FilterBank, tol: f64) -> Result<(MFunction, f64)> {
    let g = dual.grid;
    let pts: Vec<usize> = g.quadrant().collect();
    let quads: Vec<Result<(CVector, f64)>> = pts
        .par_iter()
        .map(|&idx| {
            let e = build_mtilde(dual, idx).highpass_even();
            let v = linalg::left_null_vector(&e, tol)?;
            let res = (v.transpose() * &e).iter().map(|z| z.norm()).fold(0.0, f64::max);
            Ok((v, res))
        })
        .collect();
    let mut m0 = MFunction::zeros(g, 0, false);
    let mut worst = 0.0f64;
    for (&idx, q) in pts.iter().zip(quads) {
        let (v, res) = q?;
        worst = worst.max(res);
        for k in 0..4 {
            m0.values[g.shifted(idx, GAMMA1[2 * k])] = v[k];
        }
    }
    Ok((m0, worst))
}

/// Largest `|v·M̃[odd, 1..](ω)|` with `v = (m_0(ω+π_{2k+1}))_k`.
pub fn odd_null_residual(dual: &FilterBank, m0: &MFunction) -> f64 {
    let g = dual.grid;
    g.quadrant()
        .map(|idx| {
            let hp = build_mtilde(dual, idx).highpass();
            (0..6)
                .map(|c| {
                    (0..4)
                        .map(|k| m0.values[g.shifted(idx, GAMMA1[2 * k + 1])] * hp[(2 * k + 1, c)])
                        .sum::<C64>()
                        .norm()
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

pub fn in_c0(g: &FreqGrid, idx: usize) -> bool {
    let (u, v) = g.uv(idx);
    label_uv(g.n(), u, v) == 0
}

/// `cos²(ω₁/2)·cos²(ω₂/2)`.
pub fn tensor_lowpass(g: FreqGrid) -> Vec<C64> {
    (0..g.len())
        .map(|idx| {
            let (w1, w2) = g.omega_at(idx);
            C64::new((w1 / 2.0).cos().powi(2) * (w2 / 2.0).cos().powi(2), 0.0)
        })
        .collect()
}

/// Whether `c(ω+π_{2k}) = c(ω)` holds exactly for all Γ0 shifts.
pub fn is_pi_periodic(g: &FreqGrid, c: &[C64]) -> bool {
    (0..g.len()).all(|idx| GAMMA1.iter().step_by(2).all(|&s| c[g.shifted(idx, s)] == c[idx]))
}

/// Whether `c` is invariant under every Γ1 shift.
pub fn is_gamma1_periodic(g: &FreqGrid, c: &[C64]) -> bool {
    (0..g.len()).all(|idx| GAMMA1.iter().all(|&s| c[g.shifted(idx, s)] == c[idx]))
}

pub fn regularize_m0(m0: &MFunction, reg: &Regularization, tol: f64) -> Result<MFunction> {
    let g = m0.grid;
    let mut out = m0.clone();
    match reg {
        Regularization::CField(c) => {
            if c.len() != g.len() {
                return Err(Error::Shape("c-field size differs from the grid".into()));
            }
            if c.iter()
                .any(|z| z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite())
            {
                return Err(Error::Invalid("c-field has zeros".into()));
            }
            if !is_pi_periodic(&g, c) {
                return Err(Error::Invalid("c-field is not π-periodic".into()));
            }
            out.values.iter_mut().zip(c).for_each(|(m, c)| *m *= c);
        }
        Regularization::ReciprocalTarget(t) => {
            let target = t.clone().unwrap_or_else(|| tensor_lowpass(g));
            if target.len() != g.len() {
                return Err(Error::Shape("target size differs from the grid".into()));
            }
            for idx in 0..g.len() {
                let inside = in_c0(&g, idx);
                let dev = (m0.values[idx].norm() - if inside { 1.0 } else { 0.0 }).abs();
                if dev > tol {
                    return Err(Error::Invalid(format!(
                        "|m_0| deviates from the C0 indicator by {dev:.3e}"
                    )));
                }
                out.values[idx] = if inside {
                    if target[idx].norm() == 0.0 {
                        return Err(Error::Invalid("target low-pass vanishes on C0".into()));
                    }
                    1.0 / target[idx].conj()
                } else {
                    C64::new(0.0, 0.0)
                };
            }
        }
    }
    Ok(out)
}

/// Rows indexed by the quadrant; row `i` holds `m_0′(ω_i+π_{2k})` at the
/// four Γ0-shift columns (exact zeros dropped).
pub fn build_identity_constraint(m0p: &MFunction) -> (SparseRows, Vec<C64>) {
    let g = m0p.grid;
    let rows: Vec<Vec<(usize, C64)>> = g
        .quadrant()
        .map(|idx| {
            GAMMA1
                .iter()
                .step_by(2)
                .map(|&s| g.shifted(idx, s))
                .filter(|&q| m0p.values[q] != C64::new(0.0, 0.0))
                .map(|q| (q, m0p.values[q]))
                .collect()
        })
        .collect();
    let b = vec![C64::new(1.0, 0.0); rows.len()];
    (SparseRows { ncols: g.len(), rows }, b)
}

/// `m̃_0 = conj(x)` for the gradient-minimal `x` with `A x = b`.
pub fn solve_dual_scaling(
    g: FreqGrid,
    a: &SparseRows,
    b: &[C64],
    weight: Option<(&[f64], f64)>,
) -> Result<(MFunction, f64)> {
    if a.rows.iter().any(|r| r.is_empty()) {
        return Err(Error::Invalid("constraint has an empty row".into()));
    }
    let sol = qp::solve(g.side(), a, b, weight)?;
    let mut mt0 = MFunction::zeros(g, 0, true);
    mt0.values = sol.x.iter().map(|z| z.conj()).collect();
    Ok((mt0, sol.residual))
}

/// Per-point least squares `M̃[:, 1..](ω)·m = e_0 − m_0′(ω)·M̃[:, 0](ω)`.
/// `dual` must already carry `m̃_0`. Returns `m_1..m_6` and the worst residual.
pub fn solve_highpass(dual: &FilterBank, m0p: &MFunction, tol: f64) -> Result<(Vec<MFunction>, f64, usize)> {
    let g = dual.grid;
    let sols: Vec<Result<(CVector, f64)>> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let mt = build_mtilde(dual, idx);
            let hp = mt.highpass();
            let mut b = CVector::zeros(8);
            b[0] = C64::new(1.0, 0.0);
            for r in 0..8 {
                b[r] -= m0p.values[idx] * mt.m[(r, 0)];
            }
            let x = linalg::least_squares(&hp, &b, tol)?;
            let res = (&hp * &x - &b).iter().map(|z| z.norm()).fold(0.0, f64::max);
            Ok((x, res))
        })
        .collect();
    let mut ms: Vec<MFunction> = (1..7).map(|j| MFunction::zeros(g, j, false)).collect();
    let (mut worst, mut worst_idx) = (0.0f64, 0);
    for (idx, s) in sols.into_iter().enumerate() {
        let (x, res) = s?;
        if res > worst || res.is_nan() {
            worst = res;
            worst_idx = idx;
        }
        for j in 0..6 {
            ms[j].values[idx] = x[j];
        }
    }
    Ok((ms, worst, worst_idx))
}

fn step_err(step: u8, e: impl std::fmt::Display) -> Error {
    Error::Step {
        step,
        msg: e.to_string(),
    }
}

/// Runs steps 1 to 5. Input validation failures are reported as step 0.
pub fn run_algorithm1(inputs: &FilterBank, config: &SolverConfig) -> Result<(DualPair, SolveTrace)> {
    config.validate().map_err(|e| step_err(0, e))?;
    let g = inputs.grid;
    if g.n() != config.n {
        return Err(step_err(0, Error::GridMismatch(g.n(), config.n)));
    }
    let mut trace = SolveTrace::default();

    let t0 = Instant::now();
    let screen = rank_screen(inputs, config.rank_tol);
    trace.rank_full = screen.full.clone();
    trace.rank_even = screen.even.clone();
    trace.infeasible = screen.failures.clone();
    trace.record(1, "rank-screen", screen.failures.len() as f64, t0);
    if !screen.pass {
        let first = screen.failures[0];
        return Err(step_err(
            1,
            format!(
                "ranks differ from (6,3) at {} of {} points, first at {:?}",
                screen.failures.len(),
                screen.full.len(),
                g.uv(first)
            ),
        ));
    }

    let t0 = Instant::now();
    let (m0, null_res) = solve_m0_quadruple(inputs, config.rank_tol).map_err(|e| step_err(2, e))?;
    trace.record(2, "m0-quadruple", null_res, t0);
    if null_res > config.null_tol {
        return Err(step_err(2, format!("null-vector residual {null_res:.3e}")));
    }

    let t0 = Instant::now();
    let m0p = regularize_m0(&m0, &config.regularization, config.ls_tol).map_err(|e| step_err(3, e))?;
    trace.record(3, "regularize-m0", 0.0, t0);

    let t0 = Instant::now();
    let (a, b) = build_identity_constraint(&m0p);
    let (mt0, qp_res) = solve_dual_scaling(g, &a, &b, None).map_err(|e| step_err(4, e))?;
    trace.record(4, "dual-scaling", qp_res, t0);
    if qp_res > config.qp_tol {
        return Err(step_err(4, format!("constraint residual {qp_res:.3e}")));
    }

    let t0 = Instant::now();
    let mut dual = inputs.clone();
    dual.role = Role::BiorthDual;
    dual.m[0] = mt0;
    let (ms, ls_res, worst) = solve_highpass(&dual, &m0p, config.rank_tol).map_err(|e| step_err(5, e))?;
    trace.record(5, "highpass", ls_res, t0);
    if ls_res > config.ls_tol {
        return Err(step_err(
            5,
            format!("least-squares residual {ls_res:.3e} at {:?}", g.uv(worst)),
        ));
    }
    let mut primal = FilterBank::zeros(g, Role::BiorthPrimal);
    primal.phases = dual.phases;
    primal.m[0] = m0p;
    for (j, m) in ms.into_iter().enumerate() {
        primal.m[j + 1] = m;
    }
    Ok((DualPair::new(primal, dual)?, trace))
}

/// Largest `|Im(m_j·conj(m̃_j))|` over `j = 1..6` and the grid.
pub fn phase_mismatch(pair: &DualPair) -> f64 {
    (1..7)
        .flat_map(|j| (0..pair.primal.grid.len()).map(move |idx| (j, idx)))
        .map(|(j, idx)| (pair.primal.at(j, idx) * pair.dual.at(j, idx).conj()).im.abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// periodic rescalings

/// Canonical index of the Γ0-coset of a gridpoint.
fn gamma0_rep(g: &FreqGrid, idx: usize) -> usize {
    let (i, j) = g.coords(idx);
    g.index(i % g.n(), j % g.n())
}

/// Canonical index of the Γ1-coset of a gridpoint.
fn gamma1_rep(g: &FreqGrid, idx: usize) -> usize {
    let (n, h, m) = (g.n(), g.n() / 2, g.side());
    let (i, j) = g.coords(idx);
    let t = j / h;
    let i = (i + m - (t * h) % m) % m;
    g.index(i % n, j % h)
}

/// Field constant on cosets of the Γ0 (π-periodic) or Γ1 shift lattice,
/// with values `f(coset representative)`.
pub fn coset_field(g: FreqGrid, fine: bool, mut f: impl FnMut(usize) -> C64) -> Vec<C64> {
    let mut cache = std::collections::BTreeMap::new();
    (0..g.len())
        .map(|idx| {
            let r = if fine { gamma1_rep(&g, idx) } else { gamma0_rep(&g, idx) };
            *cache.entry(r).or_insert_with(|| f(r))
        })
        .collect()
}

/// `m_0 ← c·m_0`, `m̃_0 ← m̃_0 / conj(c)` for a π-periodic, nowhere-zero `c`.
pub fn rescale_lowpass(pair: &DualPair, c: &[C64]) -> Result<DualPair> {
    let g = pair.primal.grid;
    if c.len() != g.len() || c.iter().any(|z| z.norm() == 0.0) || !is_pi_periodic(&g, c) {
        return Err(Error::Invalid(
            "rescaling field must be π-periodic and nowhere zero".into(),
        ));
    }
    let mut out = pair.clone();
    for idx in 0..g.len() {
        out.primal.m[0].values[idx] *= c[idx];
        out.dual.m[0].values[idx] /= c[idx].conj();
    }
    Ok(out)
}

/// `m_j ← c_j·m_j`, `m̃_j ← m̃_j / conj(c_j)` for Γ1-periodic fields, `j = 1..6`.
pub fn rescale_highpass(pair: &DualPair, cs: &[Vec<C64>]) -> Result<DualPair> {
    let g = pair.primal.grid;
    if cs.len() != 6 {
        return Err(Error::Shape("six rescaling fields expected".into()));
    }
    let mut out = pair.clone();
    for (j, c) in cs.iter().enumerate() {
        if c.len() != g.len() || c.iter().any(|z| z.norm() == 0.0) || !is_gamma1_periodic(&g, c) {
            return Err(Error::Invalid(
                "rescaling field must be Γ1-periodic and nowhere zero".into(),
            ));
        }
        for idx in 0..g.len() {
            out.primal.m[j + 1].values[idx] *= c[idx];
            out.dual.m[j + 1].values[idx] /= c[idx].conj();
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// optimisation oracles

/// Spline-type low-pass pair on a `2n`-point circle with vanishing moments
/// 3 and 5: `m_0 = cos³(ξ/2)e^{iξ/2}`, `m̃_0 = cos⁵(ξ/2)e^{iξ/2}P(sin²(ξ/2))`,
/// `P(y) = Σ_{k<4} C(3+k, k) y^k`.
pub fn spline_pair_1d(n: usize) -> (Vec<C64>, Vec<C64>) {
    let p = |y: f64| 1.0 + 4.0 * y + 10.0 * y * y + 20.0 * y * y * y;
    let xi = |k: usize| (k as f64 - n as f64) * std::f64::consts::PI / n as f64;
    let m0 = (0..2 * n)
        .map(|k| C64::from_polar((xi(k) / 2.0).cos().powi(3), xi(k) / 2.0))
        .collect();
    let mt0 = (0..2 * n)
        .map(|k| {
            let (c, s) = ((xi(k) / 2.0).cos(), (xi(k) / 2.0).sin());
            C64::from_polar(c.powi(5) * p(s * s), xi(k) / 2.0)
        })
        .collect();
    (m0, mt0)
}

/// `max_k |m_0(ξ_k)conj(x)(ξ_k) + m_0(ξ_k+π)conj(x)(ξ_k+π) − 1|`.
pub fn identity_residual_1d(m0: &[C64], mt0: &[C64]) -> f64 {
    let n = m0.len() / 2;
    (0..n)
        .map(|k| (m0[k] * mt0[k].conj() + m0[k + n] * mt0[k + n].conj() - 1.0).norm())
        .fold(0.0, f64::max)
}

/// Second moment of spatial energy about the origin, periodic distance.
pub fn spatial_spread_1d(spec: &[C64]) -> f64 {
    let m = spec.len();
    let mut buf = spec.to_vec();
    // symbol samples start at ξ = -π; undo that offset so index 0 is ξ = 0
    buf.rotate_left(m / 2);
    rustfft::FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let e: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
    let s: f64 = buf
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let d = k.min(m - k) as f64;
            d * d * z.norm_sqr()
        })
        .sum();
    (s / e).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub residual: f64,
    pub truth_residual: Option<f64>,
    /// Relative L2 distance to the ground-truth dual.
    pub distance: Option<f64>,
    pub spread: f64,
    pub truth_spread: Option<f64>,
}

impl OracleReport {
    pub fn lines(&self, name: &str) -> Vec<String> {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
        vec![
            format!("{name} residual {:.3e}", self.residual),
            format!("{name} truth-residual {}", opt(self.truth_residual)),
            format!("{name} distance {}", opt(self.distance)),
            format!(
                "{name} spread {:.4} truth-spread {}",
                self.spread,
                opt(self.truth_spread)
            ),
        ]
    }
}

fn rel_distance(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `min ‖Dx‖² + ‖x‖²` subject to `m_0(ξ)x(ξ) + m_0(ξ+π)x(ξ+π) = 1`, with
/// the recovered dual `m̃_0 = conj(x)`.
pub fn oracle_1d(m0: &[C64], truth: Option<&[C64]>) -> Result<(Vec<C64>, OracleReport)> {
    let m = m0.len();
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::Shape("1D symbol needs an even number of samples".into()));
    }
    let n = m / 2;
    let mut d = CMatrix::zeros(2 * m, m);
    d.view_mut((0, 0), (m, m)).copy_from(&linalg::periodic_difference(m));
    for k in 0..m {
        d[(m + k, k)] = C64::new(1.0, 0.0);
    }
    let mut a = CMatrix::zeros(n, m);
    for k in 0..n {
        a[(k, k)] = m0[k];
        a[(k, k + n)] = m0[k + n];
    }
    let b = CVector::from_element(n, C64::new(1.0, 0.0));
    let x = linalg::eq_constrained_quad_min(&d, &a, &b)?;
    let mt0: Vec<C64> = x.iter().map(|z| z.conj()).collect();
    let report = OracleReport {
        residual: identity_residual_1d(m0, &mt0),
        truth_residual: truth.map(|t| identity_residual_1d(m0, t)),
        distance: truth.map(|t| rel_distance(&mt0, t)),
        spread: spatial_spread_1d(&mt0),
        truth_spread: truth.map(spatial_spread_1d),
    };
    Ok((mt0, report))
}

/// Tensor product of two 1D symbols sampled on the same circle.
pub fn tensor_2d(g: FreqGrid, s: &[C64]) -> Vec<C64> {
    (0..g.len())
        .map(|idx| {
            let (i, j) = g.coords(idx);
            s[i] * s[j]
        })
        .collect()
}

/// Weighted 2D oracle on the tensor spline pair, `w(ω) = |ω|`.
pub fn oracle_2d_tensor(n: usize, lambda: f64) -> Result<(MFunction, OracleReport)> {
    let g = FreqGrid::new(n)?;
    let (m0, mt0) = spline_pair_1d(n);
    let m0p = MFunction {
        grid: g,
        values: tensor_2d(g, &m0),
        label: 0,
        dual: false,
    };
    let truth = MFunction {
        grid: g,
        values: tensor_2d(g, &mt0),
        label: 0,
        dual: true,
    };
    let (a, b) = build_identity_constraint(&m0p);
    let w: Vec<f64> = (0..g.len())
        .map(|idx| {
            let (w1, w2) = g.omega_at(idx);
            w1.hypot(w2)
        })
        .collect();
    let (rec, residual) = solve_dual_scaling(g, &a, &b, Some((&w, lambda)))?;
    let conj = |v: &[C64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
    let report = OracleReport {
        residual,
        truth_residual: Some(a.residual(&conj(&truth.values), &b)),
        distance: Some(rel_distance(&rec.values, &truth.values)),
        spread: spatial_spread_2d(g, &rec.values),
        truth_spread: Some(spatial_spread_2d(g, &truth.values)),
    };
    Ok((rec, report))
}

/// Second moment of spatial energy about the origin for a 2D symbol.
pub fn spatial_spread_2d(g: FreqGrid, spec: &[C64]) -> f64 {
    let m = g.side();
    let mut buf = vec![C64::new(0.0, 0.0); m * m];
    for idx in 0..g.len() {
        let (i, j) = g.coords(idx);
        buf[((i + g.n()) % m) * m + (j + g.n()) % m] = spec[idx];
    }
    crate::fft::fft2(&mut buf, m, true);
    let e: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
    let s: f64 = buf
        .iter()
        .enumerate()
        .map(|(p, z)| {
            let (a, b) = (p / m, p % m);
            let (a, b) = (a.min(m - a) as f64, b.min(m - b) as f64);
            (a * a + b * b) * z.norm_sqr()
        })
        .sum();
    (s / e).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{corner_zero_witness, default_dual_inputs, shearlet_dual_amplitudes, DualProfile};
    use crate::lattice::PartitionMask;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> FreqGrid {
        FreqGrid::new(n).unwrap()
    }

    #[test]
    fn zero_duals_fail_rank_screen() {
        let g = grid(8);
        let s = rank_screen(&FilterBank::zeros(g, Role::BiorthDual), 1e-9);
        assert!(!s.pass);
        assert!(s.full.iter().all(|&r| r == 0));
        assert_eq!(s.failures.len(), 64);
    }

    #[test]
    fn default_inputs_pass_screen_and_give_indicator() {
        let g = grid(16);
        let d = default_dual_inputs(g).unwrap();
        let s = rank_screen(&d, 1e-9);
        assert!(s.pass, "{} failures", s.failures.len());
        let (m0, res) = solve_m0_quadruple(&d, 1e-9).unwrap();
        assert!(res <= 1e-10, "{res}");
        for idx in 0..g.len() {
            let want = if in_c0(&g, idx) { 1.0 } else { 0.0 };
            assert!((m0.values[idx].norm() - want).abs() < 1e-8);
        }
        assert!(odd_null_residual(&d, &m0) < 1e-10);
    }

    #[test]
    fn quadruple_rotates_under_row_permutation() {
        // M̃ at ω+π_2 is M̃ at ω with rows permuted, so its null quadruple is a
        // cyclic rotation of the one at ω, up to the phase normalisation.
        let g = grid(8);
        let d = default_dual_inputs(g).unwrap();
        let idx = g.index(1, 2);
        let at = |p: usize| linalg::left_null_vector(&build_mtilde(&d, p).highpass_even(), 1e-9).unwrap();
        let v = at(idx);
        let w = at(g.shifted(idx, GAMMA1[2]));
        let perm = prcheck::row_permutation(2);
        let rot = CVector::from_fn(4, |k, _| v[perm[2 * k] / 2]);
        let mut r = rot.clone();
        linalg::normalize_phase(&mut r);
        assert!((r - w).norm() < 1e-12);
    }

    #[test]
    fn witness_fails_near_corner() {
        let g = grid(16);
        let mask = PartitionMask::new(g);
        let amps = shearlet_dual_amplitudes(g, &mask, DualProfile::default()).unwrap();
        let wit = corner_zero_witness(g, &amps);
        let bank = crate::design::apply_phases(g, &wit, &crate::design::default_phases());
        let s = rank_screen(&bank, 1e-9);
        assert!(!s.pass);
        let near = s.failures.iter().any(|&idx| {
            let (w1, w2) = g.omega_at(idx);
            (w1 + std::f64::consts::FRAC_PI_2).abs() < 0.3 && (w2 + std::f64::consts::FRAC_PI_2).abs() < 0.3
        });
        assert!(near);
        let err = run_algorithm1(&bank, &SolverConfig::new(16)).unwrap_err();
        assert!(matches!(err, Error::Step { step: 1, .. }));
    }

    #[test]
    fn identity_c_field_keeps_m0() {
        let g = grid(8);
        let d = default_dual_inputs(g).unwrap();
        let (m0, _) = solve_m0_quadruple(&d, 1e-9).unwrap();
        let one = vec![C64::new(1.0, 0.0); g.len()];
        assert_eq!(regularize_m0(&m0, &Regularization::CField(one), 1e-8).unwrap(), m0);
    }

    #[test]
    fn reciprocal_target_is_exact_on_c0() {
        let g = grid(8);
        let d = default_dual_inputs(g).unwrap();
        let (m0, _) = solve_m0_quadruple(&d, 1e-9).unwrap();
        let t = tensor_lowpass(g);
        let m0p = regularize_m0(&m0, &Regularization::ReciprocalTarget(None), 1e-8).unwrap();
        for idx in 0..g.len() {
            let p = m0p.values[idx] * t[idx].conj();
            let want = if in_c0(&g, idx) { 1.0 } else { 0.0 };
            assert!((p - want).norm() < 1e-15);
        }
    }

    #[test]
    fn c_field_rejects_zeros_and_aperiodic() {
        let g = grid(8);
        let m0 = MFunction::zeros(g, 0, false);
        let mut c = vec![C64::new(1.0, 0.0); g.len()];
        c[5] = C64::new(2.0, 0.0);
        assert!(regularize_m0(&m0, &Regularization::CField(c.clone()), 1e-8).is_err());
        let z = vec![C64::new(0.0, 0.0); g.len()];
        assert!(regularize_m0(&m0, &Regularization::CField(z), 1e-8).is_err());
    }

    #[test]
    fn indicator_constraint_has_one_entry_per_row() {
        let g = grid(8);
        let ind: Vec<f64> = (0..g.len()).map(|i| if in_c0(&g, i) { 1.0 } else { 0.0 }).collect();
        let m0 = MFunction::from_real(g, 0, false, &ind);
        let (a, b) = build_identity_constraint(&m0);
        assert_eq!(a.rows.len(), 64);
        assert_eq!(a.ncols, 256);
        assert!(a.rows.iter().all(|r| r.len() == 1));
        let (mt0, res) = solve_dual_scaling(g, &a, &b, None).unwrap();
        assert!(res <= 1e-10);
        assert!(mt0.values.iter().all(|z| (z - 1.0).norm() < 1e-10));
    }

    #[test]
    fn indicator_lowpass_gives_zero_highpass_on_c0() {
        // with m_0 = m̃_0 = 𝟙_C0 the right side vanishes off the identity row
        // on C0, and the zero duals there force m_j = 0
        let g = grid(8);
        let mut d = default_dual_inputs(g).unwrap();
        let ind: Vec<f64> = (0..g.len()).map(|i| if in_c0(&g, i) { 1.0 } else { 0.0 }).collect();
        d.m[0] = MFunction::from_real(g, 0, true, &ind);
        let m0 = MFunction::from_real(g, 0, false, &ind);
        let (ms, res, _) = solve_highpass(&d, &m0, 1e-9).unwrap();
        assert!(res < 1e-10);
        for idx in (0..g.len()).filter(|&i| in_c0(&g, i)) {
            assert!(ms.iter().all(|m| m.values[idx].norm() < 1e-12));
        }
    }

    #[test]
    fn algorithm1_small_grid_certifies() {
        let g = grid(16);
        let d = default_dual_inputs(g).unwrap();
        let (pair, trace) = run_algorithm1(&d, &SolverConfig::new(16)).unwrap();
        assert_eq!(
            trace.steps.iter().map(|s| s.step).collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5]
        );
        assert_eq!(trace.rank_pass_fraction(), 1.0);
        for r in prcheck::biorth_conditions(&pair, 1e-8) {
            assert!(r.pass, "{r}");
        }
        let sc = prcheck::scaling_identity(&pair.primal.m[0], &pair.dual.m[0], 1e-10);
        assert!(sc.pass, "{sc}");
    }

    #[test]
    fn deterministic_reruns() {
        let g = grid(8);
        let d = default_dual_inputs(g).unwrap();
        let a = run_algorithm1(&d, &SolverConfig::new(8)).unwrap().0;
        let b = run_algorithm1(&d, &SolverConfig::new(8)).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn coset_fields_are_periodic() {
        let g = grid(8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c0 = coset_field(g, false, |_| C64::new(rng.gen(), rng.gen()));
        assert!(is_pi_periodic(&g, &c0));
        assert_eq!(
            c0.iter()
                .map(|z| z.re.to_bits())
                .collect::<std::collections::BTreeSet<_>>()
                .len(),
            64
        );
        let c1 = coset_field(g, true, |_| C64::new(rng.gen(), rng.gen()));
        assert!(is_gamma1_periodic(&g, &c1));
        assert_eq!(
            c1.iter()
                .map(|z| z.re.to_bits())
                .collect::<std::collections::BTreeSet<_>>()
                .len(),
            32
        );
    }

    #[test]
    fn rescalings_preserve_residuals() {
        let g = grid(8);
        let d = default_dual_inputs(g).unwrap();
        let pair = run_algorithm1(&d, &SolverConfig::new(8)).unwrap().0;
        let base: Vec<f64> = prcheck::biorth_conditions(&pair, 1e-8)
            .iter()
            .map(|r| r.global_max)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut field = |fine| {
            coset_field(g, fine, |_| {
                C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..6.3))
            })
        };
        let c = field(false);
        let cs: Vec<Vec<C64>> = (0..6).map(|_| field(true)).collect();
        let p2 = rescale_highpass(&rescale_lowpass(&pair, &c).unwrap(), &cs).unwrap();
        let now: Vec<f64> = prcheck::biorth_conditions(&p2, 1e-8)
            .iter()
            .map(|r| r.global_max)
            .collect();
        for (a, b) in base.iter().zip(&now) {
            assert!((a - b).abs() <= 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn spline_truth_satisfies_identity() {
        // oracle: cos⁸P(sin²) + sin⁸P(cos²) = 1 evaluated directly
        let p = |y: f64| {
            (0..4)
                .map(|k| [1.0, 4.0, 10.0, 20.0][k] * y.powi(k as i32))
                .sum::<f64>()
        };
        for k in 0..100 {
            let t = k as f64 * 0.0314;
            let (c, s) = (t.cos().powi(2), t.sin().powi(2));
            assert!((c.powi(4) * p(s) + s.powi(4) * p(c) - 1.0).abs() < 1e-13);
        }
        let (m0, mt0) = spline_pair_1d(32);
        assert!(identity_residual_1d(&m0, &mt0) <= 1e-12);
    }

    #[test]
    fn oracle_1d_solves() {
        let (m0, mt0) = spline_pair_1d(32);
        let (_, rep) = oracle_1d(&m0, Some(&mt0)).unwrap();
        assert!(rep.residual <= 1e-10);
        assert!(rep.truth_residual.unwrap() <= 1e-12);
        assert!(rep.distance.unwrap().is_finite());
    }

    #[test]
    fn oracle_1d_constant_case() {
        let m0 = vec![C64::new(1.0, 0.0); 16];
        let (x, rep) = oracle_1d(&m0, None).unwrap();
        assert!(rep.residual < 1e-12);
        assert!(x.iter().all(|z| (z - 0.5).norm() < 1e-12));
    }

    #[test]
    fn oracle_2d_runs_weighted_and_unweighted() {
        let (_, r0) = oracle_2d_tensor(8, 0.0).unwrap();
        let (_, r1) = oracle_2d_tensor(8, 600.0).unwrap();
        assert!(r0.residual <= 1e-10 && r1.residual <= 1e-10);
        assert!(r1.truth_residual.unwrap() <= 1e-12);
    }
}
