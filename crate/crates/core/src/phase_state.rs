//! Discretised Wigner functions on the periodic box `[-Lx, Lx) x [-Lv, Lv)` (d = 1).

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;
use crate::spectral::{self, FftPlans};

/// Magic bytes opening every snapshot file.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"WPFPSNP1";

#[derive(Debug, Error)]
pub enum StateError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("state contains non-finite values")]
    NonFinite,
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

/// Uniform periodic grid. `x_i = -Lx + i hx`, `v_j = -Lv + j hv`.
#[derive(Clone)]
pub struct PhaseGrid<T: Real> {
    nx: usize,
    nv: usize,
    lx: T,
    lv: T,
    pub(crate) plans: Arc<FftPlans<T>>,
}

impl<T: Real> fmt::Debug for PhaseGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseGrid")
            .field("nx", &self.nx)
            .field("nv", &self.nv)
            .field("lx", &self.lx)
            .field("lv", &self.lv)
            .finish()
    }
}

impl<T: Real> PartialEq for PhaseGrid<T> {
    fn eq(&self, o: &Self) -> bool {
        self.nx == o.nx && self.nv == o.nv && self.lx == o.lx && self.lv == o.lv
    }
}

impl<T: Real> PhaseGrid<T> {
    pub fn new(nx: usize, nv: usize, lx: T, lv: T) -> Result<Self, StateError> {
        if nx < 4 || nv < 4 || nx % 2 != 0 || nv % 2 != 0 {
            return Err(StateError::Grid(format!("point counts must be even and >= 4, got {nx} x {nv}")));
        }
        if !(lx.is_finite() && lv.is_finite() && lx > T::zero() && lv > T::zero()) {
            return Err(StateError::Grid("half-lengths must be positive and finite".into()));
        }
        Ok(Self { nx, nv, lx, lv, plans: Arc::new(FftPlans::new(nx, nv)) })
    }

    pub fn dim(&self) -> usize {
        1
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nv(&self) -> usize {
        self.nv
    }
    pub fn lx(&self) -> T {
        self.lx
    }
    pub fn lv(&self) -> T {
        self.lv
    }
    pub fn hx(&self) -> T {
        T::of(2.0) * self.lx / T::of(self.nx as f64)
    }
    pub fn hv(&self) -> T {
        T::of(2.0) * self.lv / T::of(self.nv as f64)
    }
    pub fn x(&self, i: usize) -> T {
        -self.lx + T::of(i as f64) * self.hx()
    }
    pub fn v(&self, j: usize) -> T {
        -self.lv + T::of(j as f64) * self.hv()
    }
    pub fn xs(&self) -> Array1<T> {
        Array1::from_shape_fn(self.nx, |i| self.x(i))
    }
    pub fn vs(&self) -> Array1<T> {
        Array1::from_shape_fn(self.nv, |j| self.v(j))
    }
    /// Wavenumber dual to x at FFT index `i`.
    pub fn kx(&self, i: usize) -> T {
        spectral::wavenumber(i, self.nx, self.lx)
    }
    /// Fourier variable dual to v at FFT index `j`.
    pub fn eta(&self, j: usize) -> T {
        spectral::wavenumber(j, self.nv, self.lv)
    }
    pub fn cell(&self) -> T {
        self.hx() * self.hv()
    }
}

/// Real-valued Wigner function samples with their time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerState<T: Real> {
    pub grid: PhaseGrid<T>,
    pub values: Array2<T>,
    pub time: T,
}

impl<T: Real> WignerState<T> {
    pub fn zeros(grid: &PhaseGrid<T>) -> Self {
        Self { grid: grid.clone(), values: Array2::zeros((grid.nx, grid.nv)), time: T::zero() }
    }

    pub fn from_fn(grid: &PhaseGrid<T>, f: impl Fn(T, T) -> T) -> Self {
        let values = Array2::from_shape_fn((grid.nx, grid.nv), |(i, j)| f(grid.x(i), grid.v(j)));
        Self { grid: grid.clone(), values, time: T::zero() }
    }

    pub fn with_values(&self, values: Array2<T>) -> Self {
        Self { grid: self.grid.clone(), values, time: self.time }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn check_finite(&self) -> Result<(), StateError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(StateError::NonFinite)
        }
    }

    /// `n(x) = int w dv` by the rectangle rule.
    pub fn density(&self) -> Array1<T> {
        let hv = self.grid.hv();
        self.values.rows().into_iter().map(|r| r.sum() * hv).collect()
    }

    pub fn mass(&self) -> T {
        self.values.sum() * self.grid.cell()
    }

    pub fn inner(&self, other: &Self) -> T {
        Zip::from(&self.values).and(&other.values).fold(T::zero(), |acc, &a, &b| acc + a * b) * self.grid.cell()
    }

    fn weighted_sq(&self, weight: impl Fn(T) -> T) -> T {
        let cell = self.grid.cell();
        let mut s = T::zero();
        for (j, col) in self.values.columns().into_iter().enumerate() {
            let wt = weight(self.grid.v(j));
            s = s + col.iter().map(|&x| x * x).sum::<T>() * wt * wt;
        }
        s * cell
    }

    pub fn norm_l2(&self) -> T {
        self.weighted_sq(|_| T::one()).sqrt()
    }

    /// `|| |v|^k w ||_2`.
    pub fn norm_weighted(&self, k: i32) -> T {
        self.weighted_sq(|v| v.abs().powi(k)).sqrt()
    }

    /// `|| (1 + v^2) w ||_2`.
    pub fn norm_x(&self) -> T {
        self.weighted_sq(|v| T::one() + v * v).sqrt()
    }

    /// `( ||w||_2^2 + ||v^2 w||_2^2 )^(1/2)`.
    pub fn norm_x_tilde(&self) -> T {
        (self.weighted_sq(|_| T::one()) + self.weighted_sq(|v| v * v)).sqrt()
    }

    /// Pointwise product with `v^k`.
    pub fn times_v_power(&self, k: i32) -> Self {
        let mut out = self.clone();
        for (j, mut col) in out.values.columns_mut().into_iter().enumerate() {
            let f = self.grid.v(j).powi(k);
            col.mapv_inplace(|x| x * f);
        }
        out
    }

    /// Unitary Fourier transform in v, `(2 pi)^(-1/2) int w e^{-i v eta} dv`, in FFT order of `eta`.
    pub fn fourier_v(&self) -> Array2<Complex<T>> {
        let g = &self.grid;
        let mut c = spectral::complexify(&self.values);
        spectral::fft_v(&g.plans, &mut c, false);
        let scale = g.hv() / T::TAU().sqrt();
        for (j, mut col) in c.columns_mut().into_iter().enumerate() {
            let sign = if spectral::signed_index(j, g.nv).rem_euclid(2) == 0 { scale } else { -scale };
            col.mapv_inplace(|z| z * sign);
        }
        c
    }

    /// Inverse of [`fourier_v`](Self::fourier_v); returns the real part.
    pub fn from_fourier_v(grid: &PhaseGrid<T>, hat: &Array2<Complex<T>>) -> Self {
        let mut c = hat.clone();
        let scale = T::TAU().sqrt() / grid.hv();
        for (j, mut col) in c.columns_mut().into_iter().enumerate() {
            let sign = if spectral::signed_index(j, grid.nv).rem_euclid(2) == 0 { scale } else { -scale };
            col.mapv_inplace(|z| z * sign);
        }
        spectral::fft_v(&grid.plans, &mut c, true);
        Self { grid: grid.clone(), values: spectral::real_part(&c), time: T::zero() }
    }

    /// Spectral `d/dv`.
    pub fn grad_v(&self) -> Self {
        let g = &self.grid;
        let mut c = spectral::complexify(&self.values);
        spectral::fft_v(&g.plans, &mut c, false);
        for (j, mut col) in c.columns_mut().into_iter().enumerate() {
            let f = spectral::deriv_factor(j, g.nv, g.eta(j));
            col.mapv_inplace(|z| z * f);
        }
        spectral::fft_v(&g.plans, &mut c, true);
        self.with_values(spectral::real_part(&c))
    }

    /// Spectral `d/dx`.
    pub fn grad_x(&self) -> Self {
        let g = &self.grid;
        let mut c = spectral::complexify(&self.values);
        spectral::fft_x(&g.plans, &mut c, false);
        for (i, mut row) in c.rows_mut().into_iter().enumerate() {
            let f = spectral::deriv_factor(i, g.nx, g.kx(i));
            row.mapv_inplace(|z| z * f);
        }
        spectral::fft_x(&g.plans, &mut c, true);
        self.with_values(spectral::real_part(&c))
    }

    /// `w(x - s v, v)` by exact phase shifts in x.
    pub fn shear(&self, s: T) -> Self {
        let g = &self.grid;
        let mut c = spectral::complexify(&self.values);
        spectral::fft_x(&g.plans, &mut c, false);
        for ((i, j), z) in c.indexed_iter_mut() {
            *z = *z * spectral::shift_factor(i, g.nx, g.kx(i), -s * g.v(j));
        }
        spectral::fft_x(&g.plans, &mut c, true);
        self.with_values(spectral::real_part(&c))
    }

    pub fn axpy(&self, a: T, other: &Self) -> Self {
        let mut out = self.clone();
        Zip::from(&mut out.values).and(&other.values).for_each(|x, &y| *x = *x + a * y);
        out
    }

    pub fn scale(&self, a: T) -> Self {
        self.with_values(self.values.mapv(|x| x * a))
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Binary snapshot: magic, then `dim, nx, nv` as u64 LE, then `lx, lv, time` and the
    /// row-major (x-major) samples as f64 LE.
    pub fn write_snapshot(&self, path: &Path) -> Result<(), StateError> {
        let mut buf = Vec::with_capacity(56 + 8 * self.values.len());
        buf.extend_from_slice(SNAPSHOT_MAGIC);
        for n in [1u64, self.grid.nx as u64, self.grid.nv as u64] {
            buf.extend_from_slice(&n.to_le_bytes());
        }
        for x in [self.grid.lx, self.grid.lv, self.time] {
            buf.extend_from_slice(&x.f64().to_le_bytes());
        }
        for x in self.values.iter() {
            buf.extend_from_slice(&x.f64().to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn read_snapshot(path: &Path) -> Result<Self, StateError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 56 || &buf[..8] != SNAPSHOT_MAGIC {
            return Err(StateError::Snapshot("bad magic or truncated header".into()));
        }
        let word = |k: usize| -> [u8; 8] { buf[8 + 8 * k..16 + 8 * k].try_into().unwrap() };
        let dim = u64::from_le_bytes(word(0));
        let nx = u64::from_le_bytes(word(1)) as usize;
        let nv = u64::from_le_bytes(word(2)) as usize;
        let lx = f64::from_le_bytes(word(3));
        let lv = f64::from_le_bytes(word(4));
        let time = f64::from_le_bytes(word(5));
        if dim != 1 {
            return Err(StateError::Snapshot(format!("unsupported dimension {dim}")));
        }
        if buf.len() != 56 + 8 * nx * nv {
            return Err(StateError::Snapshot("payload length does not match header".into()));
        }
        let grid = PhaseGrid::new(nx, nv, T::of(lx), T::of(lv))?;
        let values = Array2::from_shape_fn((nx, nv), |(i, j)| {
            let o = 56 + 8 * (i * nv + j);
            T::of(f64::from_le_bytes(buf[o..o + 8].try_into().unwrap()))
        });
        Ok(Self { grid, values, time: T::of(time) })
    }
}

/// `C` in `||n[w]||_2 <= C ||w||_X` on the grid: `( sum_j (1 + v_j^2)^-2 hv )^(1/2)`.
pub fn density_bound_constant<T: Real>(grid: &PhaseGrid<T>) -> T {
    (0..grid.nv())
        .map(|j| {
            let v = grid.v(j);
            (T::one() + v * v).powi(-2)
        })
        .sum::<T>()
        .sqrt()
        * grid.hv().sqrt()
}

/// Constant `c` with `||u||_X <= c ||u||_X~`: 4 in three dimensions, 2 in one.
pub fn norm_equivalence_constant(dim: usize) -> f64 {
    if dim == 3 {
        4.0
    } else {
        2.0
    }
}

/// Isotropic Gaussian bump `a exp(-((x-x0)^2 + (v-v0)^2) / (2 s^2))`.
pub fn gaussian<T: Real>(grid: &PhaseGrid<T>, a: T, x0: T, v0: T, sx: T, sv: T) -> WignerState<T> {
    let two = T::of(2.0);
    WignerState::from_fn(grid, |x, v| {
        a * (-(x - x0).powi(2) / (two * sx * sx) - (v - v0).powi(2) / (two * sv * sv)).exp()
    })
}
