//! Filter families: Shannon indicator banks, smoothed tight frames and the
//! shearlet-style dual inputs with their phase factors.

use crate::lattice::{FreqGrid, PartitionMask, GAMMA1};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Orth,
    Frame,
    BiorthPrimal,
    BiorthDual,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseVector {
    pub eta: (i64, i64),
}

impl PhaseVector {
    pub const fn new(a: i64, b: i64) -> Self {
        PhaseVector { eta: (a, b) }
    }

    /// `e^{s·iη·ω}` at a gridpoint, `s = ±1`.
    pub fn factor(&self, g: &FreqGrid, idx: usize, s: f64) -> C64 {
        let (w1, w2) = g.omega_at(idx);
        C64::from_polar(1.0, s * (self.eta.0 as f64 * w1 + self.eta.1 as f64 * w2))
    }
}

/// One sampled symbol `m_j` or `m̃_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct MFunction {
    pub grid: FreqGrid,
    pub values: Vec<C64>,
    pub label: u8,
    pub dual: bool,
}

impl MFunction {
    pub fn zeros(grid: FreqGrid, label: u8, dual: bool) -> Self {
        MFunction {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.len()],
            label,
            dual,
        }
    }

    pub fn from_real(grid: FreqGrid, label: u8, dual: bool, r: &[f64]) -> Self {
        MFunction {
            grid,
            values: r.iter().map(|&x| C64::new(x, 0.0)).collect(),
            label,
            dual,
        }
    }
}

/// Seven symbols `m_0..m_6` on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    pub grid: FreqGrid,
    pub role: Role,
    pub phases: [PhaseVector; 7],
    pub m: Vec<MFunction>,
}

impl FilterBank {
    pub fn new(grid: FreqGrid, role: Role, symbols: Vec<Vec<C64>>) -> Result<Self> {
        if symbols.len() != 7 || symbols.iter().any(|s| s.len() != grid.len()) {
            return Err(Error::Shape("a bank needs seven symbols of 4N² samples".into()));
        }
        let dual = role == Role::BiorthDual;
        let m = symbols
            .into_iter()
            .enumerate()
            .map(|(j, values)| MFunction {
                grid,
                values,
                label: j as u8,
                dual,
            })
            .collect();
        Ok(FilterBank {
            grid,
            role,
            phases: [PhaseVector::default(); 7],
            m,
        })
    }

    pub fn zeros(grid: FreqGrid, role: Role) -> Self {
        FilterBank::new(grid, role, vec![vec![C64::new(0.0, 0.0); grid.len()]; 7]).expect("shape")
    }

    pub fn at(&self, j: usize, idx: usize) -> C64 {
        self.m[j].values[idx]
    }

    pub fn scaled(&self, f: f64) -> Self {
        let mut b = self.clone();
        for mf in &mut b.m {
            mf.values.iter_mut().for_each(|z| *z *= f);
        }
        b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualPair {
    pub primal: FilterBank,
    pub dual: FilterBank,
}

impl DualPair {
    pub fn new(primal: FilterBank, dual: FilterBank) -> Result<Self> {
        if primal.grid != dual.grid {
            return Err(Error::GridMismatch(primal.grid.n(), dual.grid.n()));
        }
        Ok(DualPair { primal, dual })
    }
}

pub fn shannon_bank(grid: FreqGrid, mask: &PartitionMask) -> FilterBank {
    let symbols = (0..7u8)
        .map(|j| {
            mask.labels
                .iter()
                .map(|&l| C64::new(if l == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    FilterBank::new(grid, Role::Orth, symbols).expect("shape")
}

// ---------------------------------------------------------------------------
// smoothed tight frame

/// Zone width is capped at `kappa` times the distance to the nearest vertex
/// of the Γ0-closed boundary graph so that zones never overlap.
pub const FRAME_KAPPA: f64 = 0.4;

/// Phases of the frame bank, `m_j = e^{iη_j·ω} r_j`.
pub const FRAME_PHASES: [PhaseVector; 7] = [
    PhaseVector::new(0, 0),
    PhaseVector::new(0, 0),
    PhaseVector::new(1, 1),
    PhaseVector::new(1, -1),
    PhaseVector::new(0, 2),
    PhaseVector::new(1, 1),
    PhaseVector::new(-1, 1),
];

#[derive(Clone, Copy, Debug)]
struct Segment {
    p0: [f64; 2],
    t: [f64; 2],
    n: [f64; 2],
    len: f64,
    a: u8,
    b: u8,
    inward: bool,
}

fn wrap(x: f64, p: f64) -> f64 {
    (x + p).rem_euclid(2.0 * p) - p
}

/// Region of a point in grid units (`π = p`), continuous geometry.
fn region(q: [f64; 2], p: f64) -> u8 {
    let (y, x) = (wrap(q[0], p), wrap(q[1], p));
    if y.abs() < p / 2.0 && x.abs() < p / 2.0 {
        return 0;
    }
    if y.abs() < x.abs() / 3.0 {
        return 2;
    }
    if y.abs() > 3.0 * x.abs() {
        return 5;
    }
    let same = (y > 0.0) == (x > 0.0);
    let small = y.abs() < x.abs();
    match (same, small) {
        (true, true) => 1,
        (true, false) => 6,
        (false, true) => 3,
        (false, false) => 4,
    }
}

fn boundary_segments(p: f64) -> (Vec<Segment>, Vec<[f64; 2]>) {
    let mut raw: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for c in [p / 2.0, -p / 2.0] {
        for (a, b) in [(-p / 2.0, -p / 6.0), (-p / 6.0, p / 6.0), (p / 6.0, p / 2.0)] {
            raw.push(([c, a], [c, b]));
            raw.push(([a, c], [b, c]));
        }
    }
    for d in [
        (1.0f64, 3.0f64),
        (1.0, 1.0),
        (3.0, 1.0),
        (-1.0, 3.0),
        (-1.0, 1.0),
        (-3.0, 1.0),
    ] {
        for s in [1.0, -1.0] {
            let (d0, d1) = (d.0 * s, d.1 * s);
            let m = f64::max(d0.abs(), d1.abs());
            raw.push(([d0 * p / 2.0 / m, d1 * p / 2.0 / m], [d0 * p / m, d1 * p / m]));
        }
    }
    for (a, b) in [(p / 3.0, p), (-p, -p / 3.0)] {
        raw.push(([a, p], [b, p]));
        raw.push(([p, a], [p, b]));
    }

    let mut verts: Vec<[f64; 2]> = Vec::new();
    for (q0, q1) in &raw {
        for q in [q0, q1] {
            for s in [(0.0, 0.0), (p, 0.0), (0.0, p), (p, p)] {
                let v = [wrap(q[0] + s.0, p), wrap(q[1] + s.1, p)];
                if !verts
                    .iter()
                    .any(|w| (w[0] - v[0]).abs() < 1e-9 && (w[1] - v[1]).abs() < 1e-9)
                {
                    verts.push(v);
                }
            }
        }
    }

    let mut segs = Vec::new();
    for (q0, q1) in raw {
        let d = [q1[0] - q0[0], q1[1] - q0[1]];
        let len = d[0].hypot(d[1]);
        let t = [d[0] / len, d[1] / len];
        let mut n = [-t[1], t[0]];
        let mid = [(q0[0] + q1[0]) / 2.0, (q0[1] + q1[1]) / 2.0];
        let mut a = region([mid[0] - 1e-7 * n[0], mid[1] - 1e-7 * n[1]], p);
        let mut b = region([mid[0] + 1e-7 * n[0], mid[1] + 1e-7 * n[1]], p);
        if a == b {
            continue;
        }
        let outer = |l: u8| matches!(l, 1 | 3 | 4 | 6);
        let mut inward = false;
        if a == 0 && outer(b) {
            inward = true;
        } else if b == 0 && outer(a) {
            n = [-n[0], -n[1]];
            std::mem::swap(&mut a, &mut b);
            inward = true;
        }
        segs.push(Segment {
            p0: q0,
            t,
            n,
            len,
            a,
            b,
            inward,
        });
    }
    (segs, verts)
}

fn vertex_distance(q: [f64; 2], verts: &[[f64; 2]], p: f64) -> f64 {
    verts
        .iter()
        .map(|v| {
            let mut d0 = (q[0] - v[0]).abs().rem_euclid(2.0 * p);
            let mut d1 = (q[1] - v[1]).abs().rem_euclid(2.0 * p);
            d0 = d0.min(2.0 * p - d0);
            d1 = d1.min(2.0 * p - d1);
            d0.hypot(d1)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Transition zones hit by each gridpoint: `(segment, t)` pairs.
fn frame_zones(grid: FreqGrid, eps: f64, kappa: f64) -> (Vec<Segment>, Vec<Vec<(usize, f64)>>) {
    let p = grid.n() as f64;
    let w_max = eps / grid.spacing();
    let (segs, verts) = boundary_segments(p);
    let side = grid.side();
    let mut hits = vec![Vec::new(); grid.len()];
    for i in 0..side {
        for j in 0..side {
            let pt = [-p + i as f64 + 0.5, -p + j as f64 + 0.5];
            let idx = grid.index(i, j);
            for (k, sg) in segs.iter().enumerate() {
                for sy in [-2.0 * p, 0.0, 2.0 * p] {
                    for sx in [-2.0 * p, 0.0, 2.0 * p] {
                        let q = [pt[0] + sy - sg.p0[0], pt[1] + sx - sg.p0[1]];
                        let s = q[0] * sg.t[0] + q[1] * sg.t[1];
                        if s < 0.0 || s > sg.len {
                            continue;
                        }
                        let x = q[0] * sg.n[0] + q[1] * sg.n[1];
                        let foot = [sg.p0[0] + s * sg.t[0], sg.p0[1] + s * sg.t[1]];
                        let w = w_max.min(kappa * vertex_distance(foot, &verts, p));
                        if w <= 0.0 {
                            continue;
                        }
                        if !sg.inward && x.abs() < w {
                            hits[idx].push((k, (x + w) / (2.0 * w)));
                        } else if sg.inward && -w < x && x < 0.0 {
                            hits[idx].push((k, (x + w) / w));
                        }
                    }
                }
            }
        }
    }
    (segs, hits)
}

/// Number of gridpoints falling into more than one transition zone.
pub fn frame_zone_overlaps(grid: FreqGrid, eps: f64, kappa: f64) -> usize {
    frame_zones(grid, eps, kappa).1.iter().filter(|h| h.len() > 1).count()
}

/// Real amplitudes `r_0..r_6` of the smoothed frame.
pub fn frame_amplitudes(grid: FreqGrid, mask: &PartitionMask, eps: f64, kappa: f64) -> Vec<Vec<f64>> {
    let (segs, hits) = frame_zones(grid, eps, kappa);
    let mut r = vec![vec![0.0; grid.len()]; 7];
    for idx in 0..grid.len() {
        match hits[idx].first() {
            Some(&(k, t)) => {
                let sg = &segs[k];
                r[sg.a as usize][idx] = (PI / 2.0 * t).cos();
                r[sg.b as usize][idx] = (PI / 2.0 * t).sin();
            }
            None => r[mask.labels[idx] as usize][idx] = 1.0,
        }
    }
    r
}

/// Tight frame with raised-cosine transitions of half-width `eps` radians
/// across every boundary of the partition.
pub fn smoothed_frame_bank(grid: FreqGrid, mask: &PartitionMask, eps: f64) -> FilterBank {
    let r = frame_amplitudes(grid, mask, eps, FRAME_KAPPA);
    let symbols = r
        .iter()
        .zip(FRAME_PHASES.iter())
        .map(|(rj, ph)| {
            (0..grid.len())
                .map(|idx| ph.factor(&grid, idx, 1.0) * rj[idx])
                .collect()
        })
        .collect();
    let mut b = FilterBank::new(grid, Role::Frame, symbols).expect("shape");
    b.phases = FRAME_PHASES;
    b
}

// ---------------------------------------------------------------------------
// dual inputs

/// Angular profile of `|m̃_2|` as a function of the slope `ω1/ω2`: value 1
/// for `|s| ≤ plateau`, raised-cosine decay to 0 at `|s| = support`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualProfile {
    pub plateau: f64,
    pub support: f64,
}

impl Default for DualProfile {
    fn default() -> Self {
        DualProfile {
            plateau: 1.0 / 9.0,
            support: 2.0 / 3.0,
        }
    }
}

impl DualProfile {
    pub fn eval(&self, s: f64) -> f64 {
        let a = s.abs();
        if a <= self.plateau {
            1.0
        } else if a <= self.support {
            (PI / 2.0 * (a - self.plateau) / (self.support - self.plateau)).cos()
        } else {
            0.0
        }
    }
}

/// `|m̃_1|..|m̃_6|`, zero on C0. `|m̃_1|` and `|m̃_3|` are the `|m̃_2|` profile
/// sheared to slopes `±2/3`; the rest follow by index reflection.
pub fn shearlet_dual_amplitudes(grid: FreqGrid, mask: &PartitionMask, profile: DualProfile) -> Result<Vec<Vec<f64>>> {
    if !(0.0 <= profile.plateau && profile.plateau < profile.support) {
        return Err(Error::Invalid("dual profile needs 0 <= plateau < support".into()));
    }
    let side = grid.side();
    let mut amps = vec![vec![0.0; grid.len()]; 6];
    for (col, centre) in [(0usize, 2.0 / 3.0), (1, 0.0), (2, -2.0 / 3.0)] {
        for idx in 0..grid.len() {
            if mask.labels[idx] == 0 {
                continue;
            }
            let (u, v) = grid.uv(idx);
            let s = (2 * u + 1) as f64 / (2 * v + 1) as f64;
            amps[col][idx] = profile.eval(s - centre);
        }
    }
    let r = |x: usize| side - 1 - x;
    for i in 0..side {
        for j in 0..side {
            let idx = grid.index(i, j);
            let tr = grid.index(j, i);
            amps[5][idx] = amps[0][tr];
            amps[4][idx] = amps[1][tr];
            amps[3][idx] = amps[2][grid.index(r(j), r(i))];
        }
    }
    let corner = grid.index(grid.n() + grid.n() / 2, grid.n() + grid.n() / 2);
    if amps[0][corner] == 0.0 || amps[5][corner] == 0.0 {
        return Err(Error::Invalid(
            "|m̃_1| and |m̃_6| must not vanish at (π/2, π/2); a corner-continuous design cannot give a unique solution"
                .into(),
        ));
    }
    Ok(amps)
}

/// Damps every amplitude to zero at the four corners of C0 so the inputs
/// become continuous there; the resulting bank must fail the rank screen.
pub fn corner_zero_witness(grid: FreqGrid, amps: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let corners = [(0.5, 0.5), (0.5, -0.5), (-0.5, 0.5), (-0.5, -0.5)];
    let damp: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let (w1, w2) = grid.omega_at(idx);
            let d = corners
                .iter()
                .map(|c| (w1 - c.0 * PI).hypot(w2 - c.1 * PI))
                .fold(f64::INFINITY, f64::min);
            (d / (PI / 4.0)).min(1.0)
        })
        .collect();
    amps.iter()
        .map(|a| a.iter().zip(&damp).map(|(x, d)| x * d).collect())
        .collect()
}

pub fn default_phases() -> [PhaseVector; 6] {
    [
        PhaseVector::new(0, 0),
        PhaseVector::new(-1, 1),
        PhaseVector::new(0, 2),
        PhaseVector::new(1, 0),
        PhaseVector::new(0, -1),
        PhaseVector::new(0, 1),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseReport {
    pub c11: bool,
    pub c12: bool,
    pub origin_det: bool,
}

impl PhaseReport {
    pub fn pass(&self) -> bool {
        self.c11 && self.c12 && self.origin_det
    }
}

/// Phase conditions on `η_1..η_6`, evaluated in quarter periods mod 4.
pub fn phase_constraint_check(ph: &[PhaseVector; 6]) -> PhaseReport {
    let d16 = (ph[0].eta.0 - ph[5].eta.0, ph[0].eta.1 - ph[5].eta.1);
    let d34 = (ph[2].eta.0 - ph[3].eta.0, ph[2].eta.1 - ph[3].eta.1);
    let q1 = (d16.0 + d16.1).rem_euclid(4);
    let q3 = (-d34.0 + d34.1).rem_euclid(4);
    PhaseReport {
        c11: q1 != 0,
        c12: q3 != 0,
        origin_det: q1 != 2 || q3 != 2,
    }
}

/// Dual bank with `m̃_j = e^{-iη_j·ω}|m̃_j|` and `m̃_0 = 0`.
pub fn apply_phases(grid: FreqGrid, amps: &[Vec<f64>], phases: &[PhaseVector; 6]) -> FilterBank {
    let mut symbols = vec![vec![C64::new(0.0, 0.0); grid.len()]];
    for (a, ph) in amps.iter().zip(phases) {
        symbols.push(
            (0..grid.len())
                .map(|idx| ph.factor(&grid, idx, -1.0) * a[idx])
                .collect(),
        );
    }
    let mut b = FilterBank::new(grid, Role::BiorthDual, symbols).expect("shape");
    b.phases[1..].copy_from_slice(phases);
    b
}

/// The default dual inputs: default profile and phases.
pub fn default_dual_inputs(grid: FreqGrid) -> Result<FilterBank> {
    let mask = PartitionMask::new(grid);
    let amps = shearlet_dual_amplitudes(grid, &mask, DualProfile::default())?;
    Ok(apply_phases(grid, &amps, &default_phases()))
}

// ---------------------------------------------------------------------------
// concentration

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConcentrationReport {
    /// Points of `Ω_j` outside `T_j`, per `j = 1..6`.
    pub domination: [usize; 6],
    /// Support points outside `T_{j-1}⁺ ∪ T_j ∪ T_{j+1}⁻`.
    pub support: [usize; 6],
    /// Cells of `T_j` whose mirror image across a side of `T_j` is not smaller.
    pub decay: [usize; 6],
    /// Points of `Ω_0` outside C0.
    pub omega0: usize,
}

impl ConcentrationReport {
    pub fn pass(&self) -> bool {
        self.domination
            .iter()
            .chain(&self.support)
            .chain(&self.decay)
            .all(|&c| c == 0)
            && self.omega0 == 0
    }
}

/// Slopes `ω1/ω2` of the two sides of `T_j` as direction vectors `(x, y)`.
fn triangle_sides(j: u8) -> [(f64, f64); 2] {
    match j {
        1 => [(3.0, 1.0), (1.0, 1.0)],
        2 => [(3.0, 1.0), (3.0, -1.0)],
        3 => [(1.0, -1.0), (3.0, -1.0)],
        4 => [(1.0, -3.0), (1.0, -1.0)],
        5 => [(1.0, 3.0), (1.0, -3.0)],
        _ => [(1.0, 1.0), (1.0, 3.0)],
    }
}

/// Magnitudes closer than this count as equal; phase factors perturb the
/// modulus in the last bits.
const TIE_TOL: f64 = 1e-12;

pub fn concentration_check(bank: &FilterBank, mask: &PartitionMask) -> ConcentrationReport {
    let g = bank.grid;
    let n = g.n() as i64;
    let mut rep = ConcentrationReport::default();
    let mag = |j: usize, idx: usize| bank.at(j, idx).norm();
    for idx in 0..g.len() {
        for j in 0..7usize {
            let mj = mag(j, idx);
            let dominant = (0..7).filter(|&i| i != j).all(|i| mj > mag(i, idx) + TIE_TOL);
            if !dominant {
                continue;
            }
            if j == 0 {
                if mask.labels[idx] != 0 {
                    rep.omega0 += 1;
                }
            } else if mask.triangles[idx] != j as u8 {
                rep.domination[j - 1] += 1;
            }
        }
        for j in 1..7u8 {
            if mag(j as usize, idx) > 0.0 && !mask.in_support_band(j, idx) {
                rep.support[j as usize - 1] += 1;
            }
        }
    }
    for j in 1..7u8 {
        for idx in 0..g.len() {
            if mask.triangles[idx] != j || mag(j as usize, idx) <= TIE_TOL {
                continue;
            }
            let (u, v) = g.uv(idx);
            let (y, x) = ((2 * u + 1) as f64, (2 * v + 1) as f64);
            for (dx, dy) in triangle_sides(j) {
                let norm = dx.hypot(dy);
                let (ex, ey) = (dx / norm, dy / norm);
                let dot = x * ex + y * ey;
                let (rx, ry) = (2.0 * dot * ex - x, 2.0 * dot * ey - y);
                let (ru, rv) = (((ry - 1.0) / 2.0).round() as i64, ((rx - 1.0) / 2.0).round() as i64);
                if (ru, rv) == (u, v) || ru < -n || ru >= n || rv < -n || rv >= n {
                    continue;
                }
                let ridx = g.index_uv(ru, rv);
                if mask.triangles[ridx] == j {
                    continue;
                }
                let (a, b) = (mag(j as usize, idx), mag(j as usize, ridx));
                if a > TIE_TOL && a <= b + TIE_TOL {
                    rep.decay[j as usize - 1] += 1;
                }
            }
        }
    }
    rep
}

/// Cyclic index shift of a real field on the grid by a multiple of `π/2`.
pub fn translate(grid: FreqGrid, values: &[C64], shift: crate::ShiftVec) -> Vec<C64> {
    (0..grid.len())
        .map(|idx| values[grid.shifted(idx, shift.neg())])
        .collect()
}

/// Γ1-index of a shift (`π_k`).
pub fn gamma_index(s: crate::ShiftVec) -> Option<usize> {
    let norm = |q: i64| (q + 1).rem_euclid(4) - 1;
    let q = (norm(s.quarter.0), norm(s.quarter.1));
    GAMMA1.iter().position(|t| (norm(t.quarter.0), norm(t.quarter.1)) == q)
}
