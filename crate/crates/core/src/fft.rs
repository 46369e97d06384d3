//! Square 2D complex FFTs over row-major buffers.
//!
//! Forward transforms are unnormalized; inverse transforms are scaled by
//! `1 / N^2`. The spectral layout is transposed: after [`Fft2::forward`] the
//! coefficient of `(kx, ky)` sits at `kx * n + ky`. This saves one transpose
//! per direction; callers index spectral arrays accordingly.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

const BLOCK: usize = 16;

pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch_len,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn workspace(&self) -> FftWorkspace {
        FftWorkspace {
            tmp: vec![Complex64::new(0.0, 0.0); self.n * self.n],
            scratch: vec![Complex64::new(0.0, 0.0); self.scratch_len],
        }
    }

    /// Spatial `[y][x]` to spectral `[kx][ky]`.
    pub fn forward(&self, data: &mut Vec<Complex64>, ws: &mut FftWorkspace) {
        self.forward.process_with_scratch(data, &mut ws.scratch);
        transpose(data, &mut ws.tmp, self.n);
        self.forward.process_with_scratch(&mut ws.tmp, &mut ws.scratch);
        std::mem::swap(data, &mut ws.tmp);
    }

    /// Spectral `[kx][ky]` back to spatial `[y][x]`, scaled by `1 / N^2`.
    pub fn inverse(&self, data: &mut Vec<Complex64>, ws: &mut FftWorkspace) {
        self.inverse.process_with_scratch(data, &mut ws.scratch);
        transpose(data, &mut ws.tmp, self.n);
        self.inverse.process_with_scratch(&mut ws.tmp, &mut ws.scratch);
        std::mem::swap(data, &mut ws.tmp);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

pub(crate) struct FftWorkspace {
    tmp: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for rb in (0..n).step_by(BLOCK) {
        for cb in (0..n).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(n) {
                for c in cb..(cb + BLOCK).min(n) {
                    dst[c * n + r] = src[r * n + c];
                }
            }
        }
    }
}

/// Signed integer frequency of DFT index `i` for length `n`, in `[-n/2, n/2)`.
pub(crate) fn signed_freq(i: usize, n: usize) -> i64 {
    if 2 * i >= n {
        i as i64 - n as i64
    } else {
        i as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft(data: &[Complex64], n: usize) -> Vec<Complex64> {
        // Output in the transposed [kx][ky] layout.
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for kx in 0..n {
            for ky in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..n {
                    for x in 0..n {
                        let phase = -2.0 * PI * ((kx * x + ky * y) as f64) / n as f64;
                        acc += data[y * n + x] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[kx * n + ky] = acc;
            }
        }
        out
    }

    fn sample(n: usize) -> Vec<Complex64> {
        (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [4, 6, 12, 20] {
            let plan = Fft2::new(n);
            let mut ws = plan.workspace();
            let input = sample(n);
            let mut data = input.clone();
            plan.forward(&mut data, &mut ws);
            let expected = naive_dft(&input, n);
            for (a, b) in data.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let n = 32;
        let plan = Fft2::new(n);
        let mut ws = plan.workspace();
        let input = sample(n);
        let mut data = input.clone();
        plan.forward(&mut data, &mut ws);
        plan.inverse(&mut data, &mut ws);
        for (a, b) in data.iter().zip(&input) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn signed_frequencies() {
        let f: Vec<i64> = (0..6).map(|i| signed_freq(i, 6)).collect();
        assert_eq!(f, vec![0, 1, 2, -3, -2, -1]);
        let f: Vec<i64> = (0..5).map(|i| signed_freq(i, 5)).collect();
        assert_eq!(f, vec![0, 1, 2, -2, -1]);
    }
}
