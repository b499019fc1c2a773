//! Multi-level image transforms and wavelet atoms.
//!
//! Filtering is a pointwise product with sampled symbols in the DFT domain.
//! Decimation onto `DZ²` or `QDZ²` is an aliasing sum over `Γ0` or `Γ1`
//! followed by a gather of the lattice samples; the gathered samples carry
//! the factor `sqrt(|Γ|)` so that a bank satisfying its reconstruction
//! conditions gives a unitary (basis) or Parseval (frame) analysis.

use crate::design::{FilterBank, MFunction};
use crate::fft::fft2;
use crate::lattice::{FreqGrid, GAMMA1};
use crate::prcheck::contract_index;
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformMode {
    /// Wavelet bands on `QDZ²`.
    Critical,
    /// Wavelet bands on `DZ²`.
    Frame,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sublattice {
    D,
    QD,
}

impl Sublattice {
    /// Membership of `(x, y)` on an `m x m` periodic grid.
    pub fn contains(self, x: usize, y: usize) -> bool {
        match self {
            Sublattice::D => x.is_multiple_of(2) && y.is_multiple_of(2),
            Sublattice::QD => x.is_multiple_of(2) && y.is_multiple_of(2) && (x + y).is_multiple_of(4),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Sublattice::D => 4,
            Sublattice::QD => 8,
        }
    }

    /// Shape of the stored band for an `m x m` field.
    pub fn band_shape(self, m: usize) -> (usize, usize) {
        match self {
            Sublattice::D => (m / 2, m / 2),
            Sublattice::QD => (m / 2, m / 4),
        }
    }

    fn position(self, r: usize, c: usize) -> (usize, usize) {
        match self {
            Sublattice::D => (2 * r, 2 * c),
            Sublattice::QD => (2 * r, 4 * c + (2 * r) % 4),
        }
    }
}

/// `(1/|Γ|)·Σ_{π∈Γ} Y(ω+π)` on an `m x m` DFT grid.
pub fn alias_sum(spec: &[C64], m: usize, sub: Sublattice) -> Vec<C64> {
    let q = m / 4;
    let shifts: Vec<(usize, usize)> = GAMMA1
        .iter()
        .step_by(if sub == Sublattice::D { 2 } else { 1 })
        .map(|s| {
            let o = |k: i64| ((k * q as i64).rem_euclid(m as i64)) as usize;
            (o(s.quarter.0), o(s.quarter.1))
        })
        .collect();
    let w = 1.0 / shifts.len() as f64;
    let mut out = vec![C64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            let s: C64 = shifts.iter().map(|&(a, b)| spec[((i + a) % m) * m + (j + b) % m]).sum();
            out[i * m + j] = s * w;
        }
    }
    out
}

/// Spatial decimation: the field kept on the sublattice, zero elsewhere.
pub fn subsample_oracle(field: &[C64], m: usize, sub: Sublattice) -> Vec<C64> {
    (0..m * m)
        .map(|p| {
            if sub.contains(p / m, p % m) {
                field[p]
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// One stored band in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

fn gather(field: &[C64], m: usize, sub: Sublattice, scale: f64) -> Band {
    let (rows, cols) = sub.band_shape(m);
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = sub.position(r, c);
            data.push(field[x * m + y] * scale);
        }
    }
    Band { rows, cols, data }
}

fn scatter(band: &Band, m: usize, sub: Sublattice, scale: f64) -> Vec<C64> {
    let mut field = vec![C64::new(0.0, 0.0); m * m];
    for r in 0..band.rows {
        for c in 0..band.cols {
            let (x, y) = sub.position(r, c);
            field[x * m + y] = band.data[r * band.cols + c] * scale;
        }
    }
    field
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientPyramid {
    pub mode: TransformMode,
    /// Side of the original square image.
    pub side: usize,
    /// `levels[l][j-1]` holds band `j` at level `l+1`.
    pub levels: Vec<Vec<Band>>,
    pub low: Band,
}

impl CoefficientPyramid {
    pub fn count(&self) -> usize {
        self.levels.iter().flatten().map(|b| b.data.len()).sum::<usize>() + self.low.data.len()
    }

    /// Whether `count / side²` equals `1` (critical) or `2 − 4^{−L}` (frame),
    /// compared in integers.
    pub fn count_matches_mode(&self) -> bool {
        let px = (self.side * self.side) as u128;
        let c = self.count() as u128;
        match self.mode {
            TransformMode::Critical => c == px,
            TransformMode::Frame => {
                let f = 4u128.pow(self.levels.len() as u32);
                c * f == px * (2 * f - 1)
            }
        }
    }

    pub fn energy(&self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .chain(std::iter::once(&self.low))
            .flat_map(|b| b.data.iter())
            .map(|z| z.norm_sqr())
            .sum()
    }
}

fn band_lattice(mode: TransformMode, j: usize) -> Sublattice {
    if j == 0 || mode == TransformMode::Frame {
        Sublattice::D
    } else {
        Sublattice::QD
    }
}

/// Symbols of `bank` on the `m x m` DFT grid, `ω = 2πk/m`.
pub fn sample_symbols(bank: &FilterBank, m: usize) -> Result<Vec<Vec<C64>>> {
    let g = bank.grid;
    let two_n = g.side();
    if m == 0 || m > two_n || !two_n.is_multiple_of(m) {
        return Err(Error::Shape(format!(
            "{m}-point DFT grid does not subsample the {two_n}-point symbol grid"
        )));
    }
    let stride = two_n / m;
    let pos = |k: usize| (k * stride + g.n()) % two_n;
    Ok((0..7)
        .map(|j| {
            let vals = &bank.m[j].values;
            (0..m * m).map(|p| vals[g.index(pos(p / m), pos(p % m))]).collect()
        })
        .collect())
}

/// Checks image side against levels and the symbol grid.
pub fn check_shape(side: usize, levels: usize, grid: FreqGrid) -> Result<()> {
    if levels == 0 {
        return Err(Error::Shape("at least one level is required".into()));
    }
    let unit = 1usize.checked_shl(levels as u32 + 1).unwrap_or(0);
    if side == 0 || unit == 0 || !side.is_multiple_of(unit) {
        return Err(Error::Shape(format!(
            "side {side} is not divisible by 2^{}",
            levels + 1
        )));
    }
    if side > grid.side() || !grid.side().is_multiple_of(side) {
        return Err(Error::Shape(format!(
            "side {side} does not divide the symbol grid side {}",
            grid.side()
        )));
    }
    Ok(())
}

/// Analysis with `conj(m_j)` of `bank`.
pub fn analyze(
    image: &[C64],
    side: usize,
    bank: &FilterBank,
    levels: usize,
    mode: TransformMode,
) -> Result<CoefficientPyramid> {
    if image.len() != side * side {
        return Err(Error::Shape(format!(
            "image has {} samples, expected {}",
            image.len(),
            side * side
        )));
    }
    check_shape(side, levels, bank.grid)?;
    let mut x = image.to_vec();
    let mut m = side;
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let syms = sample_symbols(bank, m)?;
        let mut spec = x.clone();
        fft2(&mut spec, m, false);
        let mut bands: Vec<Band> = (0..7)
            .into_par_iter()
            .map(|j| {
                let sub = band_lattice(mode, j);
                let y: Vec<C64> = spec.iter().zip(&syms[j]).map(|(a, s)| s.conj() * a).collect();
                let mut z = alias_sum(&y, m, sub);
                fft2(&mut z, m, true);
                gather(&z, m, sub, (sub.index() as f64).sqrt())
            })
            .collect();
        let low = bands.remove(0);
        out.push(bands);
        x = low.data;
        m /= 2;
    }
    Ok(CoefficientPyramid {
        mode,
        side,
        levels: out,
        low: Band {
            rows: m,
            cols: m,
            data: x,
        },
    })
}

/// Synthesis with `m̃_j` of `bank`.
pub fn synthesize(pyr: &CoefficientPyramid, bank: &FilterBank) -> Result<Vec<C64>> {
    let levels = pyr.levels.len();
    check_shape(pyr.side, levels, bank.grid)?;
    let mut x = pyr.low.data.clone();
    for l in (0..levels).rev() {
        let m = pyr.side >> l;
        let bands = &pyr.levels[l];
        if bands.len() != 6 {
            return Err(Error::Shape("six bands per level expected".into()));
        }
        let syms = sample_symbols(bank, m)?;
        let low = Band {
            rows: m / 2,
            cols: m / 2,
            data: x,
        };
        let parts: Vec<Result<Vec<C64>>> = (0..7)
            .into_par_iter()
            .map(|j| {
                let band = if j == 0 { &low } else { &bands[j - 1] };
                let sub = band_lattice(pyr.mode, j);
                if (band.rows, band.cols) != sub.band_shape(m) || band.data.len() != band.rows * band.cols {
                    return Err(Error::Shape(format!("band {j} at level {} has the wrong shape", l + 1)));
                }
                let mut f = scatter(band, m, sub, (sub.index() as f64).sqrt());
                fft2(&mut f, m, false);
                Ok(f.iter().zip(&syms[j]).map(|(a, s)| a * s).collect())
            })
            .collect();
        let mut acc = vec![C64::new(0.0, 0.0); m * m];
        for p in parts {
            for (a, b) in acc.iter_mut().zip(p?) {
                *a += b;
            }
        }
        fft2(&mut acc, m, true);
        x = acc;
    }
    Ok(x)
}

/// `‖a − b‖ / ‖b‖`.
pub fn relative_error(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

// ---------------------------------------------------------------------------
// atoms

/// A symbol product on the refined grid `ω = (u, v)·π/N`, `u, v ∈ [−NR, NR)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletAtom {
    pub n: usize,
    pub refine: usize,
    pub label: u8,
    pub dual: bool,
    /// Row-major, side `2NR`, index 0 at `−Rπ`.
    pub spectrum: Vec<C64>,
}

impl WaveletAtom {
    pub fn side(&self) -> usize {
        2 * self.n * self.refine
    }
}

fn wrap_index(g: &FreqGrid, u: i64) -> usize {
    let n = g.n() as i64;
    ((u + n).rem_euclid(2 * n)) as usize
}

/// `φ̂(ω) = (2π)⁻¹·Π_{k=1..K} m_0(ω/2^k)`, off-grid arguments rounded to the
/// nearest gridpoint with ties to the lower index.
pub fn scaling_spectrum(m0: &MFunction, depth: u32, refine: usize) -> Result<WaveletAtom> {
    if depth == 0 {
        return Err(Error::Invalid("truncation depth must be at least 1".into()));
    }
    if refine == 0 || !refine.is_power_of_two() {
        return Err(Error::Invalid("refinement must be a power of two".into()));
    }
    let g = m0.grid;
    let half = (g.n() * refine) as i64;
    let side = 2 * half as usize;
    let mut spectrum = vec![C64::new(0.0, 0.0); side * side];
    for a in 0..side {
        let u = a as i64 - half;
        for b in 0..side {
            let v = b as i64 - half;
            let mut p = C64::new(1.0 / (2.0 * PI), 0.0);
            for k in 1..=depth {
                let i = wrap_index(&g, contract_index(u, k));
                let j = wrap_index(&g, contract_index(v, k));
                p *= m0.values[g.index(i, j)];
            }
            spectrum[a * side + b] = p;
        }
    }
    Ok(WaveletAtom {
        n: g.n(),
        refine,
        label: 0,
        dual: m0.dual,
        spectrum,
    })
}

/// `m_j(ω)·φ̂(ω)` for `j = 0..6`, i.e. `ψ̂ʲ(Dᵀω)` stored at `ω`.
pub fn wavelet_spectra(bank: &FilterBank, phi: &WaveletAtom) -> Result<Vec<WaveletAtom>> {
    let g = bank.grid;
    if g.n() != phi.n {
        return Err(Error::GridMismatch(g.n(), phi.n));
    }
    let side = phi.side();
    let half = (side / 2) as i64;
    Ok((0..7)
        .map(|j| {
            let spectrum = (0..side * side)
                .map(|p| {
                    let i = wrap_index(&g, (p / side) as i64 - half);
                    let k = wrap_index(&g, (p % side) as i64 - half);
                    bank.m[j].values[g.index(i, k)] * phi.spectrum[p]
                })
                .collect();
            WaveletAtom {
                n: phi.n,
                refine: phi.refine,
                label: j as u8,
                dual: phi.dual,
                spectrum,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialAtom {
    pub side: usize,
    /// Centred samples; the origin sits at `(side/2, side/2)`.
    pub samples: Vec<C64>,
    /// Radius (in samples) of the smallest centred disc holding 99% of the energy.
    pub decay_radius: f64,
}

/// Unitary centred inverse DFT of the atom spectrum.
pub fn spatial_atom(atom: &WaveletAtom) -> SpatialAtom {
    let m = atom.side();
    let h = m / 2;
    let mut buf = vec![C64::new(0.0, 0.0); m * m];
    for p in 0..m * m {
        let (a, b) = (p / m, p % m);
        buf[((a + h) % m) * m + (b + h) % m] = atom.spectrum[p];
    }
    fft2(&mut buf, m, true);
    let scale = m as f64;
    let mut samples = vec![C64::new(0.0, 0.0); m * m];
    for p in 0..m * m {
        let (a, b) = (p / m, p % m);
        samples[((a + h) % m) * m + (b + h) % m] = buf[p] * scale;
    }
    let decay_radius = decay_radius(&samples, m, 0.99);
    SpatialAtom {
        side: m,
        samples,
        decay_radius,
    }
}

/// Radius of the smallest centred disc holding `frac` of the energy.
pub fn decay_radius(samples: &[C64], m: usize, frac: f64) -> f64 {
    let h = (m / 2) as f64;
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .enumerate()
        .map(|(p, z)| (((p / m) as f64 - h).hypot((p % m) as f64 - h), z.norm_sqr()))
        .collect();
    let total: f64 = pts.iter().map(|p| p.1).sum();
    if total == 0.0 {
        return 0.0;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (r, e) in pts {
        acc += e;
        if acc >= frac * total {
            return r;
        }
    }
    h * std::f64::consts::SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{shannon_bank, smoothed_frame_bank};
    use crate::lattice::PartitionMask;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(m: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m * m).map(|_| C64::new(rng.gen(), 0.0)).collect()
    }

    fn shannon(n: usize) -> FilterBank {
        let g = FreqGrid::new(n).unwrap();
        shannon_bank(g, &PartitionMask::new(g))
    }

    #[test]
    fn qd_lattice_storage_covers_each_point_once() {
        let m = 16;
        let mut seen = vec![0; m * m];
        let (rows, cols) = Sublattice::QD.band_shape(m);
        for r in 0..rows {
            for c in 0..cols {
                let (x, y) = Sublattice::QD.position(r, c);
                assert!(Sublattice::QD.contains(x, y));
                seen[x * m + y] += 1;
            }
        }
        let on: usize = (0..m * m).filter(|&p| Sublattice::QD.contains(p / m, p % m)).count();
        assert_eq!(on, m * m / 8);
        assert_eq!(seen.iter().sum::<usize>(), on);
        assert!(seen.iter().all(|&s| s <= 1));
    }

    #[test]
    fn alias_sum_matches_spatial_decimation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = 16;
        for sub in [Sublattice::D, Sublattice::QD] {
            let f: Vec<C64> = (0..m * m).map(|_| C64::new(rng.gen(), rng.gen())).collect();
            let mut spec = f.clone();
            fft2(&mut spec, m, false);
            let want = alias_sum(&spec, m, sub);
            let mut got = subsample_oracle(&f, m, sub);
            fft2(&mut got, m, false);
            assert!(got.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-10));
        }
    }

    #[test]
    fn oracle_examples() {
        let m = 8;
        let mut delta = vec![C64::new(0.0, 0.0); m * m];
        delta[0] = C64::new(1.0, 0.0);
        for sub in [Sublattice::D, Sublattice::QD] {
            assert_eq!(subsample_oracle(&delta, m, sub), delta);
            let ones = vec![C64::new(1.0, 0.0); m * m];
            let band = gather(&subsample_oracle(&ones, m, sub), m, sub, 1.0);
            assert!(band.data.iter().all(|z| *z == C64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn shannon_critical_round_trip() {
        let bank = shannon(16);
        let x = random_image(32, 1);
        for levels in 1..=3 {
            let p = analyze(&x, 32, &bank, levels, TransformMode::Critical).unwrap();
            assert_eq!(p.count(), 32 * 32);
            assert!(p.count_matches_mode());
            let y = synthesize(&p, &bank).unwrap();
            assert!(relative_error(&y, &x) < 1e-12);
            let ex: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            assert!((p.energy() - ex).abs() < 1e-10 * ex);
        }
    }

    #[test]
    fn frame_round_trip_parseval_and_redundancy() {
        let g = FreqGrid::new(16).unwrap();
        let bank = smoothed_frame_bank(g, &PartitionMask::new(g), PI / 8.0);
        let x = random_image(32, 2);
        for levels in 1..=3 {
            let p = analyze(&x, 32, &bank, levels, TransformMode::Frame).unwrap();
            assert!(p.count_matches_mode());
            let f = 4usize.pow(levels as u32);
            assert_eq!(p.count() * f, 32 * 32 * (2 * f - 1));
            let y = synthesize(&p, &bank).unwrap();
            assert!(relative_error(&y, &x) < 1e-10);
            let ex: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            assert!((p.energy() - ex).abs() < 1e-10 * ex);
        }
    }

    #[test]
    fn zero_image_and_linearity() {
        let bank = shannon(8);
        let z = vec![C64::new(0.0, 0.0); 256];
        let p = analyze(&z, 16, &bank, 2, TransformMode::Critical).unwrap();
        assert!(p
            .levels
            .iter()
            .flatten()
            .all(|b| b.data.iter().all(|c| c.norm() == 0.0)));
        let (a, b) = (random_image(16, 5), random_image(16, 6));
        let (s, t) = (C64::new(0.7, -0.2), C64::new(-1.3, 0.4));
        let mix: Vec<C64> = a.iter().zip(&b).map(|(x, y)| s * x + t * y).collect();
        let pa = analyze(&a, 16, &bank, 2, TransformMode::Critical).unwrap();
        let pb = analyze(&b, 16, &bank, 2, TransformMode::Critical).unwrap();
        let pm = analyze(&mix, 16, &bank, 2, TransformMode::Critical).unwrap();
        for l in 0..2 {
            for j in 0..6 {
                for k in 0..pm.levels[l][j].data.len() {
                    let want = s * pa.levels[l][j].data[k] + t * pb.levels[l][j].data[k];
                    assert!((pm.levels[l][j].data[k] - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        let bank = shannon(8);
        let x = random_image(16, 3);
        assert!(analyze(&x, 16, &bank, 4, TransformMode::Critical).is_err());
        assert!(analyze(&x, 16, &bank, 0, TransformMode::Critical).is_err());
        assert!(analyze(&random_image(32, 3), 32, &bank, 1, TransformMode::Critical).is_err());
        assert!(analyze(&x[..100], 16, &bank, 1, TransformMode::Critical).is_err());
    }

    #[test]
    fn shannon_scaling_spectrum_is_indicator() {
        let bank = shannon(8);
        for depth in [1, 3, 8] {
            let phi = scaling_spectrum(&bank.m[0], depth, 4).unwrap();
            let side = phi.side();
            let half = side as i64 / 2;
            for p in 0..side * side {
                let (u, v) = ((p / side) as i64 - half, (p % side) as i64 - half);
                let base = (-8..8).contains(&u) && (-8..8).contains(&v);
                // the truncated product has period 2^K·2π, so the full refined
                // extent only matches once 2^K exceeds the refinement
                if base || depth > 2 {
                    let want = if base { 1.0 / (2.0 * PI) } else { 0.0 };
                    assert!((phi.spectrum[p].re - want).abs() < 1e-15, "{u} {v}");
                }
            }
            // dilated coordinates: φ̂(Dᵀω) = m_0(ω)φ̂(ω) is the C0 indicator on the base square
            let psi = wavelet_spectra(&bank, &phi).unwrap();
            for p in 0..side * side {
                let (u, v) = ((p / side) as i64 - half, (p % side) as i64 - half);
                if (-8..8).contains(&u) && (-8..8).contains(&v) {
                    let c0 = (2 * u + 1).abs() < 8 && (2 * v + 1).abs() < 8;
                    assert_eq!(psi[0].spectrum[p].re * 2.0 * PI, if c0 { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn product_is_monotone_in_depth() {
        let g = FreqGrid::new(8).unwrap();
        let bank = smoothed_frame_bank(g, &PartitionMask::new(g), PI / 8.0);
        let a = scaling_spectrum(&bank.m[0], 3, 2).unwrap();
        let b = scaling_spectrum(&bank.m[0], 4, 2).unwrap();
        assert!(a
            .spectrum
            .iter()
            .zip(&b.spectrum)
            .all(|(x, y)| y.norm() <= x.norm() + 1e-15));
    }

    #[test]
    fn wavelet_energy_splits() {
        let g = FreqGrid::new(8).unwrap();
        let bank = smoothed_frame_bank(g, &PartitionMask::new(g), PI / 8.0);
        let phi = scaling_spectrum(&bank.m[0], 6, 2).unwrap();
        let psi = wavelet_spectra(&bank, &phi).unwrap();
        for p in 0..phi.spectrum.len() {
            let s: f64 = psi.iter().map(|a| a.spectrum[p].norm_sqr()).sum();
            assert!((s - phi.spectrum[p].norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_spectrum_is_centred_delta() {
        let atom = WaveletAtom {
            n: 4,
            refine: 2,
            label: 0,
            dual: false,
            spectrum: vec![C64::new(1.0, 0.0); 256],
        };
        let s = spatial_atom(&atom);
        let c = 8 * 16 + 8;
        assert!((s.samples[c] - 16.0).norm() < 1e-12);
        assert!(s.samples.iter().enumerate().all(|(p, z)| p == c || z.norm() < 1e-12));
        assert_eq!(s.decay_radius, 0.0);
    }

    #[test]
    fn spatial_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spectrum: Vec<C64> = (0..1024).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let atom = WaveletAtom {
            n: 8,
            refine: 2,
            label: 1,
            dual: false,
            spectrum,
        };
        let s = spatial_atom(&atom);
        let a: f64 = atom.spectrum.iter().map(|z| z.norm_sqr()).sum();
        let b: f64 = s.samples.iter().map(|z| z.norm_sqr()).sum();
        assert!((a - b).abs() < 1e-10 * a);
    }
}
