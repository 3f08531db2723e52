//! In-place radix-2 FFT, enough for the Schur-complement correlations.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;

pub(crate) struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two());
        let bits = n.trailing_zeros();
        let rev = (0..n).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) }).collect();
        let twiddles = (0..n / 2).map(|k| Complex64::cis(-TAU * k as f64 / n as f64)).collect();
        Fft { n, twiddles, rev }
    }

    /// Forward transform `X[k] = sum x[t] exp(-2 pi j k t / n)`, or its
    /// unnormalized inverse.
    pub fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let w = self.twiddles[k * step];
                    let w = if inverse { w.conj() } else { w };
                    let a = data[start + k];
                    let b = data[start + k + len / 2] * w;
                    data[start + k] = a + b;
                    data[start + k + len / 2] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// 2D transform of a row-major `n x n` block.
    pub fn run_2d(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        for row in data.chunks_mut(n) {
            self.run(row, inverse);
        }
        let mut col = alloc::vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = data[r * n + c];
            }
            self.run(&mut col, inverse);
            for r in 0..n {
                data[r * n + c] = col[r];
            }
        }
    }
}
