//! Multi-dimensional complex FFT over row-major flat buffers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::Grid;

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, forward))
        .or_insert_with(|| {
            let dir = if forward { FftDirection::Forward } else { FftDirection::Inverse };
            FftPlanner::new().plan_fft(n, dir)
        })
        .clone()
}

fn transform(grid: &Grid, data: &mut [Complex64], forward: bool) {
    let n = grid.n();
    let dim = grid.dim();
    debug_assert_eq!(data.len(), grid.len());
    let fft = plan(n, forward);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // Last axis is contiguous.
    fft.process_with_scratch(data, &mut scratch);

    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim - 1 {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[start + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[start + i * stride] = *v;
                }
            }
        }
    }
}

/// Unscaled inverse transform of a single 1D line of any power-of-two length.
pub fn inverse_1d(data: &mut [Complex64]) {
    plan(data.len(), false).process(data);
}

/// Physical samples to coefficients; a pure mode `e^{ik·x}` maps to a unit coefficient.
pub fn forward(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, true);
    let scale = 1.0 / grid.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Coefficients to physical samples (unnormalized synthesis).
pub fn inverse(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, false);
}
