//! Iterative radix-2 Cooley-Tukey FFT with a direct-summation fallback for
//! even lengths that are not powers of two.

use std::f64::consts::TAU;

use num_complex::Complex64;

#[derive(Debug, Clone)]
enum Kernel {
    Radix2 { rev: Vec<usize> },
    Direct,
}

/// Unnormalized transform `X_n = sum_j x_j exp(-+ 2 pi i n j / len)`.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    /// `exp(-2 pi i k / len)` for `k < len`.
    roots: Vec<Complex64>,
    kernel: Kernel,
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "transform length must be positive");
        let roots = (0..len)
            .map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / len as f64))
            .collect();
        let kernel = if len.is_power_of_two() {
            let bits = len.trailing_zeros();
            let rev = (0..len)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect();
            Kernel::Radix2 { rev }
        } else {
            Kernel::Direct
        };
        FftPlan { len, roots, kernel }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_radix2(&self) -> bool {
        matches!(self.kernel, Kernel::Radix2 { .. })
    }

    /// In-place transform; `inverse` flips the exponent sign and does not
    /// rescale.
    pub fn process(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.kernel {
            Kernel::Radix2 { rev } => self.radix2(buf, rev, inverse),
            Kernel::Direct => self.direct(buf, inverse),
        }
    }

    fn root(&self, k: usize, inverse: bool) -> Complex64 {
        let w = self.roots[k];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    fn radix2(&self, buf: &mut [Complex64], rev: &[usize], inverse: bool) {
        let n = self.len;
        for i in 0..n {
            let j = rev[i];
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let w = self.root(k * stride, inverse);
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }

    fn direct(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        let input = buf.to_vec();
        for (k, out) in buf.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in input.iter().enumerate() {
                acc += x * self.root((k * j) % n, inverse);
            }
            *out = acc;
        }
    }
}
