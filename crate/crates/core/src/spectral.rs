//! FFT plumbing for periodic phase-space grids.
//!
//! Arrays are `(nx, nv)` row-major: rows are x-slices, contiguous in v.
//! Frequencies are stored in FFT order; index `i` of an `n`-point axis with
//! half-length `l` carries wavenumber `pi * m / l`, `m = signed_index(i, n)`.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

pub(crate) struct FftPlans<T: Real> {
    pub fx: Arc<dyn Fft<T>>,
    pub ix: Arc<dyn Fft<T>>,
    pub fv: Arc<dyn Fft<T>>,
    pub iv: Arc<dyn Fft<T>>,
}

impl<T: Real> FftPlans<T> {
    pub fn new(nx: usize, nv: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fx: planner.plan_fft_forward(nx),
            ix: planner.plan_fft_inverse(nx),
            fv: planner.plan_fft_forward(nv),
            iv: planner.plan_fft_inverse(nv),
        }
    }
}

/// Signed frequency index; the Nyquist index maps to `-n/2`.
pub fn signed_index(i: usize, n: usize) -> isize {
    if i < n / 2 {
        i as isize
    } else {
        i as isize - n as isize
    }
}

pub fn is_nyquist(i: usize, n: usize) -> bool {
    n % 2 == 0 && i == n / 2
}

pub fn wavenumber<T: Real>(i: usize, n: usize, l: T) -> T {
    T::PI() * T::of(signed_index(i, n) as f64) / l
}

pub(crate) fn complexify<T: Real>(a: &Array2<T>) -> Array2<Complex<T>> {
    a.mapv(|x| Complex::new(x, T::zero()))
}

pub(crate) fn real_part<T: Real>(a: &Array2<Complex<T>>) -> Array2<T> {
    a.mapv(|z| z.re)
}

fn run_rows<T: Real>(fft: &Arc<dyn Fft<T>>, data: &mut [Complex<T>], n: usize, scale: Option<T>) {
    let rows_per_task = 8;
    data.par_chunks_mut(n * rows_per_task).for_each(|chunk| {
        fft.process(chunk);
        if let Some(s) = scale {
            for z in chunk.iter_mut() {
                *z = *z * s;
            }
        }
    });
}

/// In-place transform along v (axis 1). The inverse is normalised by `1/nv`.
pub(crate) fn fft_v<T: Real>(plans: &FftPlans<T>, a: &mut Array2<Complex<T>>, inverse: bool) {
    let nv = a.ncols();
    let a = a.as_slice_mut().expect("standard layout");
    if inverse {
        run_rows(&plans.iv, a, nv, Some(T::one() / T::of(nv as f64)));
    } else {
        run_rows(&plans.fv, a, nv, None);
    }
}

/// In-place transform along x (axis 0). The inverse is normalised by `1/nx`.
pub(crate) fn fft_x<T: Real>(plans: &FftPlans<T>, a: &mut Array2<Complex<T>>, inverse: bool) {
    let nx = a.nrows();
    let mut t = a.t().as_standard_layout().into_owned();
    {
        let s = t.as_slice_mut().expect("standard layout");
        if inverse {
            run_rows(&plans.ix, s, nx, Some(T::one() / T::of(nx as f64)));
        } else {
            run_rows(&plans.fx, s, nx, None);
        }
    }
    a.assign(&t.t());
}

pub(crate) fn fft2<T: Real>(plans: &FftPlans<T>, a: &mut Array2<Complex<T>>, inverse: bool) {
    fft_v(plans, a, inverse);
    fft_x(plans, a, inverse);
}

/// Phase factor `exp(i k s)` with the Nyquist mode taken as `cos(k s)` so real data stay real.
pub(crate) fn shift_factor<T: Real>(i: usize, n: usize, k: T, s: T) -> Complex<T> {
    if is_nyquist(i, n) {
        Complex::new((k * s).cos(), T::zero())
    } else {
        Complex::new((k * s).cos(), (k * s).sin())
    }
}

/// Spectral first-derivative factor `i k`, zero at Nyquist.
pub(crate) fn deriv_factor<T: Real>(i: usize, n: usize, k: T) -> Complex<T> {
    if is_nyquist(i, n) {
        Complex::new(T::zero(), T::zero())
    } else {
        Complex::new(T::zero(), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_indices() {
        let v: Vec<isize> = (0..6).map(|i| signed_index(i, 6)).collect();
        assert_eq!(v, vec![0, 1, 2, -3, -2, -1]);
        assert!(is_nyquist(3, 6));
        assert!(!is_nyquist(2, 5));
    }

    #[test]
    fn fft2_roundtrip() {
        let plans = FftPlans::<f64>::new(8, 6);
        let a = Array2::from_shape_fn((8, 6), |(i, j)| ((i * 7 + j * 3) % 5) as f64 - 1.3);
        let mut c = complexify(&a);
        fft2(&plans, &mut c, false);
        fft2(&plans, &mut c, true);
        let b = real_part(&c);
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn fft_x_matches_direct_dft() {
        let plans = FftPlans::<f64>::new(5, 4);
        let a = Array2::from_shape_fn((5, 4), |(i, j)| (i as f64 + 1.0) * (j as f64 - 0.5));
        let mut c = complexify(&a);
        fft_x(&plans, &mut c, false);
        for k in 0..5 {
            for j in 0..4 {
                let mut s = Complex::new(0.0, 0.0);
                for i in 0..5 {
                    let ph = -2.0 * std::f64::consts::PI * (k * i) as f64 / 5.0;
                    s += a[(i, j)] * Complex::new(ph.cos(), ph.sin());
                }
                assert!((s - c[(k, j)]).norm() < 1e-12);
            }
        }
    }
}
