//! Two-dimensional FFT helpers on square row-major arrays.

use crate::C64;
use rustfft::FftPlanner;

/// In-place 2D DFT of an `m x m` array; `inverse` applies `1/m²`.
pub fn fft2(data: &mut [C64], m: usize, inverse: bool) {
    assert_eq!(data.len(), m * m);
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    for row in data.chunks_mut(m) {
        plan.process(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); m];
    for j in 0..m {
        for i in 0..m {
            col[i] = data[i * m + j];
        }
        plan.process(&mut col);
        for i in 0..m {
            data[i * m + j] = col[i];
        }
    }
    if inverse {
        let s = 1.0 / (m * m) as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }
}
