//! Sampled frequency square, the Γ0/Γ1 shift sets and the directional
//! partition into `C0..C6`, triangles `T1..T6` and their halves.
//!
//! Gridpoint `(i, j)` sits at `ω = (-π + iπ/N, -π + jπ/N)` with `ω1` along
//! rows. Region membership is decided at the cell centre `ω + (h/2, h/2)`,
//! written in odd integers `a = 2u + 1`, `b = 2v + 1` where `u = i - N` and
//! `v = j - N`. No cell centre lies on an edge of `C0` or on the `±π` seam,
//! so only the six cutting rays need a tie-break.

use crate::{Error, Result};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FreqGrid {
    n: usize,
}

impl FreqGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::BadGrid(n));
        }
        Ok(FreqGrid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Samples per axis (`2N`).
    pub fn side(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        4 * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        PI / self.n as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.side() + j
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.side(), idx % self.side())
    }

    /// Signed integer coordinates `(u, v)` with `ω = (u, v)·π/N`.
    pub fn uv(&self, idx: usize) -> (i64, i64) {
        let (i, j) = self.coords(idx);
        (i as i64 - self.n as i64, j as i64 - self.n as i64)
    }

    pub fn omega(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.spacing();
        (-PI + i as f64 * h, -PI + j as f64 * h)
    }

    pub fn omega_at(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.coords(idx);
        self.omega(i, j)
    }

    /// Index of the gridpoint at signed coordinates `(u, v)`, wrapped mod 2N.
    pub fn index_uv(&self, u: i64, v: i64) -> usize {
        let s = self.side() as i64;
        let i = (u + self.n as i64).rem_euclid(s) as usize;
        let j = (v + self.n as i64).rem_euclid(s) as usize;
        self.index(i, j)
    }

    /// Index of `ω + π` for a shift π.
    pub fn shifted(&self, idx: usize, s: ShiftVec) -> usize {
        let (u, v) = self.uv(idx);
        let (du, dv) = s.offset(self);
        self.index_uv(u + du, v + dv)
    }

    /// Gridpoints of the fundamental quadrant `[-π, 0)²` in row-major order.
    pub fn quadrant(&self) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).map(move |j| self.index(i, j)))
    }
}

/// A shift with components in `{0, ±π/2, π}`, stored in quarter periods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShiftVec {
    pub quarter: (i64, i64),
}

impl ShiftVec {
    pub const fn new(q1: i64, q2: i64) -> Self {
        ShiftVec { quarter: (q1, q2) }
    }

    pub fn value(&self) -> (f64, f64) {
        (self.quarter.0 as f64 * PI / 2.0, self.quarter.1 as f64 * PI / 2.0)
    }

    /// Index offset on the grid (not reduced).
    pub fn offset(&self, g: &FreqGrid) -> (i64, i64) {
        let h = g.n() as i64 / 2;
        (self.quarter.0 * h, self.quarter.1 * h)
    }

    pub fn neg(&self) -> Self {
        ShiftVec::new(-self.quarter.0, -self.quarter.1)
    }

    pub fn is_coarse(&self) -> bool {
        self.quarter.0 % 2 == 0 && self.quarter.1 % 2 == 0
    }
}

/// `π_0..π_7`; even entries form Γ0.
pub const GAMMA1: [ShiftVec; 8] = [
    ShiftVec::new(0, 0),
    ShiftVec::new(1, 1),
    ShiftVec::new(2, 0),
    ShiftVec::new(-1, 1),
    ShiftVec::new(0, 2),
    ShiftVec::new(1, -1),
    ShiftVec::new(2, 2),
    ShiftVec::new(-1, -1),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Coarse,
    Fine,
}

pub fn shift_set(level: Level) -> Vec<ShiftVec> {
    match level {
        Level::Coarse => GAMMA1.iter().step_by(2).copied().collect(),
        Level::Fine => GAMMA1.to_vec(),
    }
}

/// Membership of `α` in `DZ²` (coarse) or `QDZ²` (fine).
pub fn sublattice_indicator(alpha: (i64, i64), level: Level) -> bool {
    let even = alpha.0.rem_euclid(2) == 0 && alpha.1.rem_euclid(2) == 0;
    match level {
        Level::Coarse => even,
        Level::Fine => even && (alpha.0 + alpha.1).rem_euclid(4) == 0,
    }
}

/// `(1/|Γ|) Σ_π e^{iα·π}`, the exponential-sum form of the indicator.
pub fn sublattice_sum(alpha: (i64, i64), level: Level) -> crate::C64 {
    let set = shift_set(level);
    let mut acc = crate::C64::new(0.0, 0.0);
    for s in &set {
        let (p1, p2) = s.value();
        acc += crate::C64::from_polar(1.0, alpha.0 as f64 * p1 + alpha.1 as f64 * p2);
    }
    acc / set.len() as f64
}

/// `1/|D| + J/|QD| == 1` in exact integer arithmetic.
pub fn critical_sampling_check(j: u64, det_d: u64, det_qd: u64) -> bool {
    det_qd + j * det_d == det_d * det_qd
}

/// Sign of `αa + βb` at `(a + δ, b + ε)` with `0 < δ ≪ ε`.
pub fn psign(alpha: i64, beta: i64, a: i64, b: i64) -> i64 {
    let v = alpha * a + beta * b;
    if v != 0 {
        v.signum()
    } else if beta != 0 {
        beta.signum()
    } else {
        alpha.signum()
    }
}

/// Sector `1..=6` of a cell centre `(a, b)` (`a` along `ω1`).
pub fn sector(a: i64, b: i64) -> u8 {
    if psign(3, -1, a, b) != psign(3, 1, a, b) {
        return 2;
    }
    if psign(1, -3, a, b) == psign(1, 3, a, b) {
        return 5;
    }
    let small = psign(1, -1, a, b) != psign(1, 1, a, b);
    let same = (a > 0) == (b > 0);
    match (same, small) {
        (true, true) => 1,
        (true, false) => 6,
        (false, true) => 3,
        (false, false) => 4,
    }
}

/// Half tag of a cell centre inside its triangle: `-1` borders `T_{j-1}`,
/// `+1` borders `T_{j+1}` (indices cyclic in `1..=6`).
pub fn half(a: i64, b: i64) -> i8 {
    let j = sector(a, b);
    let (mut a, mut b) = (a, b);
    if j == 5 {
        let b = if a < 0 { -b } else { b };
        return if b > 0 { 1 } else { -1 };
    }
    if b < 0 {
        a = -a;
        b = -b;
    }
    let (p, q) = match j {
        1 => (3, -2),
        2 => (1, 0),
        3 => (3, 2),
        6 => (2, -3),
        _ => (2, 3),
    };
    if psign(p, q, a, b) > 0 {
        -1
    } else {
        1
    }
}

/// Label `0..=6` of gridpoint `(u, v)` on a grid with half-size `n`.
pub fn label_uv(n: usize, u: i64, v: i64) -> u8 {
    let (a, b) = (2 * u + 1, 2 * v + 1);
    let n = n as i64;
    if a.abs() < n && b.abs() < n {
        0
    } else {
        sector(a, b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryClass {
    Regular,
    Singular,
}

#[derive(Clone, Debug)]
pub struct PartitionMask {
    pub grid: FreqGrid,
    pub labels: Vec<u8>,
    pub triangles: Vec<u8>,
    pub halves: Vec<i8>,
    pub boundary: Vec<Option<BoundaryClass>>,
}

impl PartitionMask {
    pub fn new(grid: FreqGrid) -> Self {
        let n = grid.n();
        let mut labels = Vec::with_capacity(grid.len());
        let mut triangles = Vec::with_capacity(grid.len());
        let mut halves = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let (u, v) = grid.uv(idx);
            labels.push(label_uv(n, u, v));
            triangles.push(sector(2 * u + 1, 2 * v + 1));
            halves.push(half(2 * u + 1, 2 * v + 1));
        }
        PartitionMask {
            grid,
            labels,
            triangles,
            halves,
            boundary: vec![None; grid.len()],
        }
    }

    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Whether a point lies in `T_{j-1}⁺ ∪ T_j ∪ T_{j+1}⁻`.
    pub fn in_support_band(&self, j: u8, idx: usize) -> bool {
        let t = self.triangles[idx];
        let h = self.halves[idx];
        let prev = if j == 1 { 6 } else { j - 1 };
        let next = if j == 6 { 1 } else { j + 1 };
        t == j || (t == prev && h == 1) || (t == next && h == -1)
    }

    /// Fills the boundary classes from the continuous partition geometry.
    pub fn classify_boundary(mut self) -> Self {
        let g = self.grid;
        for idx in 0..g.len() {
            let (u, v) = g.uv(idx);
            self.boundary[idx] = boundary_class(g.n() as i64, u, v);
        }
        self
    }

    /// 8-bit raster of the C-labels.
    pub fn label_raster(&self) -> Vec<u8> {
        self.labels.iter().map(|&l| l * 36).collect()
    }
}

pub fn partition_mask(grid: FreqGrid) -> PartitionMask {
    PartitionMask::new(grid)
}

/// Boundary class of `ω = (u, v)·π/N` on the closed boundary lines of the
/// partition: edges of C0, the six cutting rays between C0 and the edge of
/// S0, and the parts of the `±π` seam separating different regions.
pub fn boundary_class(n: i64, u: i64, v: i64) -> Option<BoundaryClass> {
    let h = n / 2;
    let (au, av) = (u.abs(), v.abs());
    let corner_c0 = au == h && av == h;
    let corner_s0 = au == n && av == n;
    if corner_c0 || corner_s0 {
        return Some(BoundaryClass::Singular);
    }
    let on_c0_edge = (au == h && av <= h) || (av == h && au <= h);
    let in_ring = au.max(av) >= h;
    let on_ray = in_ring && (au == av || au == 3 * av || av == 3 * au);
    // only -π appears on the grid; the seam separates regions where the
    // other coordinate is at least π/3 in magnitude
    let on_seam = (u == -n && 3 * av >= n) || (v == -n && 3 * au >= n);
    if on_c0_edge || on_ray || on_seam {
        Some(BoundaryClass::Regular)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_cover(g: FreqGrid, m: &PartitionMask) -> usize {
        let mut bad = 0;
        for c in 0..7u8 {
            let shifts = if c == 0 {
                shift_set(Level::Coarse)
            } else {
                shift_set(Level::Fine)
            };
            for idx in 0..g.len() {
                let hits = shifts.iter().filter(|s| m.labels[g.shifted(idx, s.neg())] == c).count();
                if hits != 1 {
                    bad += 1;
                }
            }
        }
        bad
    }

    #[test]
    fn grid_basics() {
        let g = FreqGrid::new(2).unwrap();
        assert_eq!(g.side(), 4);
        assert_eq!(g.omega(2, 2), (0.0, 0.0));
        let g = FreqGrid::new(32).unwrap();
        assert_eq!(g.side(), 64);
        assert!((g.spacing() - PI / 32.0).abs() < 1e-15);
        assert!(FreqGrid::new(3).is_err());
        assert!(FreqGrid::new(0).is_err());
    }

    #[test]
    fn shift_sets() {
        let c = shift_set(Level::Coarse);
        let f = shift_set(Level::Fine);
        assert_eq!(c.len(), 4);
        assert_eq!(f.len(), 8);
        assert!(c.iter().all(|s| f.contains(s)));
        assert_eq!(c[1].value(), (PI, 0.0));
        assert_eq!(f[1].value(), (PI / 2.0, PI / 2.0));
        assert!(f.contains(&ShiftVec::new(-1, 1)));
    }

    #[test]
    fn shift_round_trip() {
        let g = FreqGrid::new(8).unwrap();
        for idx in 0..g.len() {
            for s in GAMMA1 {
                assert_eq!(g.shifted(g.shifted(idx, s), s.neg()), idx);
            }
        }
    }

    #[test]
    fn sublattice_matches_sum() {
        assert!(sublattice_indicator((2, 0), Level::Coarse));
        assert!(!sublattice_indicator((1, 1), Level::Fine));
        assert!(sublattice_indicator((2, 2), Level::Fine));
        assert!(sublattice_indicator((0, 0), Level::Fine));
        for a in -8..=8 {
            for b in -8..=8 {
                for lvl in [Level::Coarse, Level::Fine] {
                    let s = sublattice_sum((a, b), lvl);
                    let want = if sublattice_indicator((a, b), lvl) { 1.0 } else { 0.0 };
                    assert!((s.re - want).abs() < 1e-12 && s.im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn critical_sampling() {
        assert!(critical_sampling_check(6, 4, 8));
        assert!(!critical_sampling_check(6, 4, 4));
        assert!(critical_sampling_check(0, 1, 5));
    }

    #[test]
    fn central_square_is_half_open() {
        let g = FreqGrid::new(8).unwrap();
        let m = partition_mask(g);
        for idx in 0..g.len() {
            let (w1, w2) = g.omega_at(idx);
            let inside = (-PI / 2.0..PI / 2.0 - 1e-12).contains(&w1) && (-PI / 2.0..PI / 2.0 - 1e-12).contains(&w2);
            assert_eq!(m.labels[idx] == 0, inside, "{:?}", g.uv(idx));
        }
        assert_eq!(m.labels[g.index(8, 8)], 0);
    }

    #[test]
    fn tiling_small_grids() {
        for n in [2, 4, 8, 16] {
            let g = FreqGrid::new(n).unwrap();
            let m = partition_mask(g);
            assert_eq!(exact_cover(g, &m), 0, "N={n}");
            assert_eq!(m.count(0), n * n);
            for c in 1..7 {
                assert_eq!(m.count(c), n * n / 2);
            }
        }
    }

    #[test]
    fn regions_inside_triangles() {
        let g = FreqGrid::new(16).unwrap();
        let m = partition_mask(g);
        for idx in 0..g.len() {
            let l = m.labels[idx];
            if l > 0 {
                assert_eq!(m.triangles[idx], l);
            }
        }
    }

    #[test]
    fn sector_on_axes() {
        // ω2 axis is in T2, ω1 axis in T5, diagonals split 1|6 and 3|4
        assert_eq!(sector(1, 9), 2);
        assert_eq!(sector(9, 1), 5);
        assert_eq!(sector(5, 7), 1);
        assert_eq!(sector(7, 5), 6);
        assert_eq!(sector(-5, 7), 3);
        assert_eq!(sector(7, -5), 4);
    }

    #[test]
    fn halves_border_neighbours() {
        // T1 below its median borders T2, above it borders T6
        assert_eq!((sector(5, 9), half(5, 9)), (1, 1));
        assert_eq!((sector(7, 9), half(7, 9)), (1, -1));
        // T5 with ω1 > 0: ω2 > 0 side borders T6
        assert_eq!((sector(9, 1), half(9, 1)), (5, 1));
        assert_eq!((sector(9, -1), half(9, -1)), (5, -1));
    }

    #[test]
    fn boundary_examples() {
        let g = FreqGrid::new(8).unwrap();
        let m = partition_mask(g).classify_boundary();
        let at = |w1: f64, w2: f64| {
            let u = (w1 / g.spacing()).round() as i64;
            let v = (w2 / g.spacing()).round() as i64;
            m.boundary[g.index_uv(u, v)]
        };
        assert_eq!(at(PI / 2.0, PI / 2.0), Some(BoundaryClass::Singular));
        assert_eq!(at(-PI, -PI), Some(BoundaryClass::Singular));
        assert_eq!(at(PI / 2.0, 0.0), Some(BoundaryClass::Regular));
        assert_eq!(at(0.55 * PI, 0.8 * PI), None);
        assert_eq!(at(0.0, 0.0), None);
        assert_eq!(at(3.0 * PI / 4.0, 3.0 * PI / 4.0), Some(BoundaryClass::Regular));
    }
}
