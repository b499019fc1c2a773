//! Pointwise residual reports for the reconstruction and solvability
//! conditions of banks and dual pairs.

use crate::design::{DualPair, FilterBank, MFunction};
use crate::lattice::{FreqGrid, GAMMA1};
use crate::linalg::{self, CMatrix, CVector};
use crate::{Result, C64};
use std::fmt;

/// Tolerance for banks that are exact by construction.
pub const TOL_EXACT: f64 = 1e-12;
/// Tolerance for solver outputs.
pub const TOL_SOLVER: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftResidual {
    pub shift: String,
    pub max: f64,
    pub worst: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub condition: String,
    pub per_shift: Vec<ShiftResidual>,
    pub global_max: f64,
    pub worst_index: usize,
    pub tol: f64,
    pub pass: bool,
}

impl VerificationReport {
    fn from_shifts(condition: &str, per_shift: Vec<ShiftResidual>, tol: f64) -> Self {
        let mut global_max = 0.0;
        let mut worst_index = 0;
        for s in &per_shift {
            if s.max > global_max || (global_max == 0.0 && s.max.is_nan()) {
                global_max = s.max;
                worst_index = s.worst;
            }
        }
        let pass = global_max <= tol;
        VerificationReport {
            condition: condition.into(),
            per_shift,
            global_max,
            worst_index,
            tol,
            pass,
        }
    }

    /// One line per shift: `condition shift max_residual worst_index pass`.
    pub fn lines(&self) -> Vec<String> {
        self.per_shift
            .iter()
            .map(|s| {
                format!(
                    "{} {} {:.3e} {} {}",
                    self.condition,
                    s.shift,
                    s.max,
                    s.worst,
                    if s.max <= self.tol { "PASS" } else { "FAIL" }
                )
            })
            .collect()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lines().join("\n"))
    }
}

fn shift_name(k: usize) -> String {
    format!("pi{k}")
}

/// Maximum of `|f(idx)|` over the grid with the first index attaining it.
fn field_max(len: usize, f: impl Fn(usize) -> f64) -> (f64, usize) {
    let mut best = (0.0, 0);
    for idx in 0..len {
        let v = f(idx);
        if v > best.0 || v.is_nan() {
            best = (v, idx);
            if v.is_nan() {
                break;
            }
        }
    }
    best
}

pub fn identity_summation(bank: &FilterBank, tol: f64) -> VerificationReport {
    let (max, worst) = field_max(bank.grid.len(), |idx| {
        let s: f64 = (0..7).map(|j| bank.at(j, idx).norm_sqr()).sum();
        (s - 1.0).abs()
    });
    VerificationReport::from_shifts(
        "identity-sum",
        vec![ShiftResidual {
            shift: shift_name(0),
            max,
            worst,
        }],
        tol,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Basis,
    Frame,
}

/// `Σ_j a_j(ω) conj(b_j(ω+π))` over the given columns.
fn cross_sum(a: &FilterBank, b: &FilterBank, cols: std::ops::Range<usize>, k: usize, idx: usize) -> C64 {
    let s = a.grid.shifted(idx, GAMMA1[k]);
    cols.map(|j| a.at(j, idx) * b.at(j, s).conj()).sum()
}

fn cancellation(a: &FilterBank, b: &FilterBank, mode: Mode, name: &str, tol: f64) -> VerificationReport {
    let g = a.grid;
    let mut per = Vec::new();
    for k in 1..8 {
        let coarse = k % 2 == 0;
        if !coarse && mode == Mode::Frame {
            continue;
        }
        let cols = if coarse { 0..7 } else { 1..7 };
        let (max, worst) = field_max(g.len(), |idx| cross_sum(a, b, cols.clone(), k, idx).norm());
        per.push(ShiftResidual {
            shift: shift_name(k),
            max,
            worst,
        });
    }
    VerificationReport::from_shifts(name, per, tol)
}

pub fn shift_cancellation(bank: &FilterBank, mode: Mode, tol: f64) -> VerificationReport {
    cancellation(bank, bank, mode, "shift-cancel", tol)
}

/// Biorthogonal identity and mixed shift cancellation for a pair.
pub fn biorth_conditions(pair: &DualPair, tol: f64) -> Vec<VerificationReport> {
    let (p, d) = (&pair.primal, &pair.dual);
    let (max, worst) = field_max(p.grid.len(), |idx| (cross_sum(p, d, 0..7, 0, idx) - 1.0).norm());
    vec![
        VerificationReport::from_shifts(
            "biorth-identity",
            vec![ShiftResidual {
                shift: shift_name(0),
                max,
                worst,
            }],
            tol,
        ),
        cancellation(p, d, Mode::Basis, "biorth-shift", tol),
    ]
}

/// `Σ_k m_0(ω+π_{2k}) conj(m̃_0(ω+π_{2k})) = 1`.
pub fn scaling_identity(m0: &MFunction, mt0: &MFunction, tol: f64) -> VerificationReport {
    let g = m0.grid;
    let (max, worst) = field_max(g.len(), |idx| {
        let s: C64 = GAMMA1
            .iter()
            .step_by(2)
            .map(|&sh| {
                let q = g.shifted(idx, sh);
                m0.values[q] * mt0.values[q].conj()
            })
            .sum();
        (s - 1.0).norm()
    });
    VerificationReport::from_shifts(
        "scaling-identity",
        vec![ShiftResidual {
            shift: shift_name(0),
            max,
            worst,
        }],
        tol,
    )
}

/// Nearest-grid index of `u / 2^k`, ties to the lower index.
pub fn contract_index(u: i64, k: u32) -> i64 {
    let d = 1i64 << k;
    // ceil(u/d - 1/2) = ceil((2u - d) / 2d)
    (2 * u - d).div_euclid(2 * d) + if (2 * u - d).rem_euclid(2 * d) != 0 { 1 } else { 0 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohenReport {
    pub min: f64,
    pub worst: (usize, u32),
    pub pass: bool,
}

/// Grid proxy for the Cohen-type condition: smallest `|m_0(D^{-k}ω)|` over
/// `k = 1..K` and all gridpoints, with nearest-grid sampling. A proxy only.
pub fn cohen_proxy_check(m0: &MFunction, depth: u32) -> CohenReport {
    let g = m0.grid;
    let mut rep = CohenReport {
        min: f64::INFINITY,
        worst: (0, 1),
        pass: false,
    };
    for k in 1..=depth {
        for idx in 0..g.len() {
            let (u, v) = g.uv(idx);
            let q = g.index_uv(contract_index(u, k), contract_index(v, k));
            let val = m0.values[q].norm();
            if val < rep.min {
                rep.min = val;
                rep.worst = (idx, k);
            }
        }
    }
    rep.pass = rep.min > 0.0;
    rep
}

/// `M̃(ω)`: row `i` holds `conj(m̃_j(ω + π_i))`, column 0 only on even rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MTildeMatrix {
    pub m: CMatrix,
    pub anchor: usize,
}

impl MTildeMatrix {
    /// Columns 1..6.
    pub fn highpass(&self) -> CMatrix {
        self.m.columns(1, 6).into_owned()
    }

    /// Even rows of columns 1..6.
    pub fn highpass_even(&self) -> CMatrix {
        CMatrix::from_fn(4, 6, |r, c| self.m[(2 * r, c + 1)])
    }
}

pub fn build_mtilde(dual: &FilterBank, idx: usize) -> MTildeMatrix {
    let g = dual.grid;
    let mut m = CMatrix::zeros(8, 7);
    for (r, &s) in GAMMA1.iter().enumerate() {
        let q = g.shifted(idx, s);
        for j in 0..7 {
            if j == 0 && r % 2 == 1 {
                continue;
            }
            m[(r, j)] = dual.at(j, q).conj();
        }
    }
    MTildeMatrix { m, anchor: idx }
}

/// Row permutation `perm[i] = k` such that `π_i + π_shift = π_k`.
pub fn row_permutation(shift: usize) -> [usize; 8] {
    let mut perm = [0; 8];
    for (i, s) in GAMMA1.iter().enumerate() {
        let t = crate::ShiftVec::new(
            s.quarter.0 + GAMMA1[shift].quarter.0,
            s.quarter.1 + GAMMA1[shift].quarter.1,
        );
        perm[i] = crate::design::gamma_index(t).expect("Γ1 is closed");
    }
    perm
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularityReport {
    pub d: CMatrix,
    /// `1 - ‖P m‖/‖m‖` for the projection `P` onto the row space of 𝔇.
    pub theta: f64,
    pub feasible: bool,
}

/// The antisymmetric 4×4 matrix of 6×6 minors of `M̃[:, 1..]` with two even
/// rows removed, and whether the quadruple `(m_0(ω+π_{2k}))_k` avoids its
/// row space.
pub fn singularity_matrix(dual: &FilterBank, idx: usize, m0: Option<&MFunction>) -> Result<SingularityReport> {
    let g = dual.grid;
    let hp = build_mtilde(dual, idx).highpass();
    let minor = |skip: [usize; 2]| {
        let rows: Vec<usize> = (0..8).filter(|r| !skip.contains(r)).collect();
        CMatrix::from_fn(6, 6, |r, c| hp[(rows[r], c)]).determinant()
    };
    let mut d = CMatrix::zeros(4, 4);
    for a in 0..4 {
        for b in a + 1..4 {
            let v = minor([2 * a, 2 * b]);
            d[(a, b)] = v;
            d[(b, a)] = -v;
        }
    }
    let quad: CVector = match m0 {
        Some(m) => CVector::from_fn(4, |k, _| m.values[g.shifted(idx, GAMMA1[2 * k])].conj()),
        None => CVector::from_element(4, C64::new(1.0, 0.0)),
    };
    let qn = quad.norm();
    let rows_t = d.transpose();
    let s = linalg::svd(&rows_t)?;
    let top = s.sigma.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(SingularityReport {
            d,
            theta: 0.0,
            feasible: false,
        });
    }
    let mut proj = CVector::zeros(4);
    for (k, &sv) in s.sigma.iter().enumerate() {
        if sv > linalg::RANK_TOL * top {
            let u = s.u.column(k);
            proj += u * u.dotc(&quad);
        }
    }
    let theta = if qn > 0.0 { 1.0 - proj.norm() / qn } else { 0.0 };
    Ok(SingularityReport {
        d,
        theta,
        feasible: theta > 1e-6,
    })
}

/// Distance of a bank from a reference on the grid (max modulus).
pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn grid_of(bank: &FilterBank) -> FreqGrid {
    bank.grid
}
