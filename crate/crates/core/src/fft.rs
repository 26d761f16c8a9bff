//! Square 2-D FFTs on `n × n` periodic grids with a shared plan cache.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

/// Smallest `2^a 3^b 5^c` that is at least `min`.
pub fn fft_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for f in [2, 3, 5] {
            while m % f == 0 {
                m /= f;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized 2-D transform of a row-major `n × n` array, in place.
///
/// Forward uses `e^{-i k·x}`, inverse `e^{+i k·x}`.
pub fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n * n);
    let p = plan(n, inverse);
    let mut scratch = vec![Complex64::ZERO; p.get_inplace_scratch_len()];
    p.process_with_scratch(data, &mut scratch);
    transpose(data, n);
    p.process_with_scratch(data, &mut scratch);
    transpose(data, n);
}
