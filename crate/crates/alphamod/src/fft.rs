//! Thin wrapper over `rustfft` for 1D and 2D square grids stored row-major.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn transform(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let fft = plan(n, inverse);
    match dim {
        1 => fft.process(data),
        2 => {
            // rows are contiguous
            fft.process(data);
            let mut column = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    column[i] = data[i * n + j];
                }
                fft.process(&mut column);
                for i in 0..n {
                    data[i * n + j] = column[i];
                }
            }
        }
        _ => unreachable!("grid dimension is validated on construction"),
    }
}

/// Unnormalized forward transform.
pub fn forward(data: &mut [Complex64], dim: usize, n: usize) {
    transform(data, dim, n, false);
}

/// Inverse transform including the `1/N^d` factor, so `inverse(forward(x)) == x`.
pub fn inverse(data: &mut [Complex64], dim: usize, n: usize) {
    transform(data, dim, n, true);
    let scale = 1.0 / (n as f64).powi(dim as i32);
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// Signed integer frequency index of FFT bin `m` on an axis of length `n`.
#[inline]
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let n = 8;
        let orig: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut data = orig.clone();
        forward(&mut data, 2, n);
        inverse(&mut data, 2, n);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn constant_maps_to_dc() {
        let mut data = vec![Complex64::new(1.0, 0.0); 16];
        forward(&mut data, 1, 16);
        assert!((data[0].re - 16.0).abs() < 1e-12);
        assert!(data[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn signed_indices() {
        assert_eq!(signed_index(0, 8), 0);
        assert_eq!(signed_index(3, 8), 3);
        assert_eq!(signed_index(4, 8), -4);
        assert_eq!(signed_index(7, 8), -1);
    }
}
