//! Multi-dimensional real-to-complex transform built from one-dimensional
//! plans: a real transform along the contiguous axis 0, then complex
//! transforms along the remaining axes.
//!
//! Convention: the forward transform is unnormalized, the inverse carries
//! the full `1/N^n` factor.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::GridSpec;

pub(crate) struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(points: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(points)
        .or_insert_with(|| {
            let mut real = RealFftPlanner::<f64>::new();
            let mut complex = FftPlanner::<f64>::new();
            Arc::new(Plans {
                r2c: real.plan_fft_forward(points),
                c2r: real.plan_fft_inverse(points),
                forward: complex.plan_fft_forward(points),
                inverse: complex.plan_fft_inverse(points),
            })
        })
        .clone()
}

/// Complex transform of every line along `axis` (1 or 2) of the
/// half-spectrum array.
fn transform_axis(data: &mut [Complex64], grid: &GridSpec, axis: usize, fft: &Arc<dyn Fft<f64>>) {
    let n = grid.points();
    let half = n / 2 + 1;
    let stride = half * n.pow(axis as u32 - 1);
    let block = stride * n;
    let outer_count = data.len() / block;

    let mut lines = vec![Complex64::new(0.0, 0.0); data.len()];
    for outer in 0..outer_count {
        let base = outer * block;
        for j in 0..n {
            let row = base + j * stride;
            for inner in 0..stride {
                lines[(outer * stride + inner) * n + j] = data[row + inner];
            }
        }
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(&mut lines, &mut scratch);
    for outer in 0..outer_count {
        let base = outer * block;
        for j in 0..n {
            let row = base + j * stride;
            for inner in 0..stride {
                data[row + inner] = lines[(outer * stride + inner) * n + j];
            }
        }
    }
}

pub(crate) fn forward(grid: &GridSpec, samples: &[f64]) -> Vec<Complex64> {
    let n = grid.points();
    let half = n / 2 + 1;
    let rows = samples.len() / n;
    let p = plans(n);

    let mut out = vec![Complex64::new(0.0, 0.0); half * rows];
    let mut row_in = vec![0.0; n];
    let mut scratch = p.r2c.make_scratch_vec();
    for (r, chunk) in samples.chunks_exact(n).enumerate() {
        row_in.copy_from_slice(chunk);
        p.r2c
            .process_with_scratch(&mut row_in, &mut out[r * half..(r + 1) * half], &mut scratch)
            .expect("r2c buffer sizes are fixed by the plan");
    }
    for axis in 1..grid.dim() {
        transform_axis(&mut out, grid, axis, &p.forward);
    }
    out
}

pub(crate) fn inverse(grid: &GridSpec, coeffs: &[Complex64]) -> Vec<f64> {
    let n = grid.points();
    let half = n / 2 + 1;
    let rows = coeffs.len() / half;
    let p = plans(n);

    let mut work = coeffs.to_vec();
    for axis in (1..grid.dim()).rev() {
        transform_axis(&mut work, grid, axis, &p.inverse);
    }
    let scale = 1.0 / grid.len() as f64;
    let mut out = vec![0.0; rows * n];
    let mut scratch = p.c2r.make_scratch_vec();
    for (r, row) in work.chunks_exact_mut(half).enumerate() {
        // DC and Nyquist bins of a real line are real; drop roundoff.
        row[0].im = 0.0;
        row[half - 1].im = 0.0;
        p.c2r
            .process_with_scratch(row, &mut out[r * n..(r + 1) * n], &mut scratch)
            .expect("c2r input has real DC and Nyquist bins");
    }
    for v in &mut out {
        *v *= scale;
    }
    out
}
