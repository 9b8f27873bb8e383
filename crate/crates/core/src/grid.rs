//! Real-space grids, their discrete Fourier transforms, and the radial
//! ring/shell geometry on which every correlation metric is evaluated.
//!
//! Layout is row-major: the last entry of `dims` is the fastest-varying
//! axis. The Fourier origin (DC) sits at index 0 of every axis; signed
//! frequency `k` for index `i` on an axis of length `n` is `i` for
//! `i <= n/2` and `i - n` otherwise. In real space the geometric centre of
//! an axis is the sample at index `n/2`.
//!
//! The forward transform is unnormalised and the inverse carries the `1/N`
//! factor, so `inverse_transform(forward_transform(v)) == v` up to round-off.

use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::curve::{Curve, CurveKind, ShellFlags};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative tolerance applied when an input spectrum must be Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-6;

/// A real-valued 1D, 2D or 3D measurement sampled on a Cartesian grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    dims: Vec<usize>,
    step: T,
    data: Vec<T>,
}

impl<T: Real> Volume<T> {
    pub fn new(dims: &[usize], step: T, data: Vec<T>) -> Result<Self> {
        validate_dims(dims)?;
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        let n: usize = dims.iter().product();
        if data.len() != n {
            return Err(Error::InvalidGrid(format!(
                "data length {} does not match dims {:?} ({} samples)",
                data.len(),
                dims,
                n
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            step,
            data,
        })
    }

    pub fn zeros(dims: &[usize], step: T) -> Result<Self> {
        let n = dims.iter().product();
        Self::new(dims, step, vec![T::zero(); n])
    }

    /// Builds a volume by evaluating `f` at every grid coordinate.
    pub fn from_fn(dims: &[usize], step: T, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        validate_dims(dims)?;
        let n: usize = dims.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut coord = vec![0usize; dims.len()];
        for idx in 0..n {
            unravel(idx, dims, &mut coord);
            data.push(f(&coord));
        }
        Self::new(dims, step, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn min_dim(&self) -> usize {
        self.dims.iter().copied().min().unwrap_or(0)
    }

    /// Same samples reinterpreted at a different sampling step.
    pub fn with_step(mut self, step: T) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        self.step = step;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            dims: self.dims.clone(),
            step: self.step,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: T) -> Self {
        self.map(|v| v * factor)
    }

    /// Element-wise combination of two volumes on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        Ok(Self {
            dims: self.dims.clone(),
            step: self.step,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn mean(&self) -> T {
        self.data.iter().copied().sum::<T>() / T::of_usize(self.data.len())
    }

    /// Root mean square about zero.
    pub fn rms(&self) -> T {
        (self.data.iter().map(|&v| v * v).sum::<T>() / T::of_usize(self.data.len())).sqrt()
    }

    pub fn linear_index(&self, coord: &[usize]) -> usize {
        ravel(coord, &self.dims)
    }

    pub fn get(&self, coord: &[usize]) -> T {
        self.data[ravel(coord, &self.dims)]
    }

    /// Distance in samples of each grid point from the box centre (`n/2`).
    pub fn centered_radii(&self) -> Vec<T> {
        centered_radii(&self.dims)
    }
}

/// Complex Fourier grid of a [`Volume`]. DC is at index 0 of each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    dims: Vec<usize>,
    step: T,
    values: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    /// Wraps raw Fourier coefficients. `step` is the real-space step of
    /// the grid the coefficients belong to.
    pub fn new(dims: &[usize], step: T, values: Vec<Complex<T>>) -> Result<Self> {
        validate_dims(dims)?;
        if !(step > T::zero()) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        let n: usize = dims.iter().product();
        if values.len() != n {
            return Err(Error::InvalidGrid(format!(
                "spectrum length {} does not match dims {:?}",
                values.len(),
                dims
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            step,
            values,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    /// Frequency increment `1/(n * step)` along `axis`.
    pub fn step_freq(&self, axis: usize) -> T {
        T::one() / (T::of_usize(self.dims[axis]) * self.step)
    }

    /// Linear index of the cell holding frequency `-k` for the cell at `idx`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        conjugate_index(idx, &self.dims)
    }

    /// Largest `|F(k) - conj F(-k)|`, relative to the largest magnitude,
    /// together with the cell where it occurs.
    pub fn hermitian_deviation(&self) -> (usize, f64) {
        let scale = self
            .values
            .iter()
            .map(|c| c.norm())
            .fold(T::zero(), T::max);
        if scale == T::zero() {
            return (0, 0.0);
        }
        let mut worst = (0usize, T::zero());
        for idx in 0..self.values.len() {
            let j = self.conjugate_index(idx);
            let d = (self.values[idx] - self.values[j].conj()).norm();
            if d > worst.1 {
                worst = (idx, d);
            }
        }
        (worst.0, (worst.1 / scale).to_f64_lossy())
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        Ok(())
    }
}

/// Per-cell shell assignment for a grid, with per-shell cell counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialBins<T> {
    dims: Vec<usize>,
    step: T,
    shell_of: Vec<u32>,
    counts: Vec<usize>,
    overflow_count: usize,
    shell_width: T,
}

const OVERFLOW: u32 = u32::MAX;

impl<T: Real> RadialBins<T> {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn step(&self) -> T {
        self.step
    }

    /// Shell of the cell at linear index `idx`, `None` for corner cells
    /// beyond the inscribed Nyquist radius.
    #[inline]
    pub fn shell_of(&self, idx: usize) -> Option<usize> {
        match self.shell_of[idx] {
            OVERFLOW => None,
            s => Some(s as usize),
        }
    }

    /// `N(r)` for every shell.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn overflow_count(&self) -> usize {
        self.overflow_count
    }

    pub fn n_shells(&self) -> usize {
        self.counts.len()
    }

    /// Width of a shell in absolute frequency units (1/Å or Hz).
    pub fn shell_width(&self) -> T {
        self.shell_width
    }

    /// Absolute frequency at the centre of `shell`.
    pub fn frequency(&self, shell: usize) -> T {
        T::of_usize(shell) * self.shell_width
    }

    pub fn frequencies(&self) -> Vec<T> {
        (0..self.n_shells()).map(|s| self.frequency(s)).collect()
    }

    /// Nyquist frequency `1/(2 step)`.
    pub fn nyquist(&self) -> T {
        T::one() / (T::of(2.0) * self.step)
    }

    /// Empty curve on this shell axis.
    pub fn curve(&self, kind: CurveKind, values: Vec<T>) -> Curve<T> {
        Curve::new(kind, values, self.frequencies(), self.nyquist())
            .expect("shell axis and values have equal length")
    }

    /// Sums `f(idx)` over each shell in fixed index order; the second
    /// element is the overflow (corner) sum.
    pub fn accumulate<F>(&self, mut f: F) -> (Vec<T>, T)
    where
        F: FnMut(usize) -> T,
    {
        let mut sums = vec![T::zero(); self.n_shells()];
        let mut overflow = T::zero();
        for (idx, &s) in self.shell_of.iter().enumerate() {
            let v = f(idx);
            if s == OVERFLOW {
                overflow += v;
            } else {
                sums[s as usize] += v;
            }
        }
        (sums, overflow)
    }
}

/// Shell-resolved power of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellPower<T> {
    pub curve: Curve<T>,
    /// Power in the cells beyond the inscribed Nyquist radius.
    pub overflow: T,
}

/// Unnormalised forward DFT of a volume.
pub fn forward_transform<T: Real>(v: &Volume<T>) -> Result<Spectrum<T>> {
    if let Some(index) = v.data.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut buf: Vec<Complex<T>> = v.data.iter().map(|&x| Complex::new(x, T::zero())).collect();
    fft_nd(&mut buf, &v.dims, FftDirection::Forward);
    Spectrum::new(&v.dims, v.step, buf)
}

/// Inverse DFT with `1/N` normalisation. Rejects spectra that are not
/// Hermitian within [`HERMITIAN_TOLERANCE`].
pub fn inverse_transform<T: Real>(s: &Spectrum<T>) -> Result<Volume<T>> {
    let (cell, deviation) = s.hermitian_deviation();
    if deviation > HERMITIAN_TOLERANCE {
        let mut coord = vec![0; s.dims.len()];
        unravel(cell, &s.dims, &mut coord);
        return Err(Error::NotHermitian {
            cell: coord,
            deviation,
        });
    }
    let mut buf = s.values.clone();
    fft_nd(&mut buf, &s.dims, FftDirection::Inverse);
    let norm = T::one() / T::of_usize(buf.len());
    Volume::new(&s.dims, s.step, buf.into_iter().map(|c| c.re * norm).collect())
}

/// Shell geometry for a grid. Shell width is `1/(min_dim * step)`; each
/// cell goes to the nearest integer shell of its isotropic frequency radius,
/// and cells beyond the Nyquist radius of the shortest axis go to overflow.
pub fn radial_bins<T: Real>(dims: &[usize], step: T) -> Result<RadialBins<T>> {
    validate_dims(dims)?;
    let min_dim = dims.iter().copied().min().unwrap();
    let n_shells = min_dim / 2 + 1;
    let nyquist_radius = min_dim as f64 / 2.0;
    let n: usize = dims.iter().product();

    let mut shell_of = Vec::with_capacity(n);
    let mut counts = vec![0usize; n_shells];
    let mut overflow_count = 0;
    let mut coord = vec![0usize; dims.len()];
    for idx in 0..n {
        unravel(idx, dims, &mut coord);
        let r = shell_radius(&coord, dims, min_dim);
        let s = r.round() as usize;
        if r > nyquist_radius + 1e-9 || s >= n_shells {
            shell_of.push(OVERFLOW);
            overflow_count += 1;
        } else {
            shell_of.push(s as u32);
            counts[s] += 1;
        }
    }
    Ok(RadialBins {
        dims: dims.to_vec(),
        step,
        shell_of,
        counts,
        overflow_count,
        shell_width: T::one() / (T::of_usize(min_dim) * step),
    })
}

/// Per-shell sum of `|F|^2`.
pub fn shell_power<T: Real>(s: &Spectrum<T>, bins: &RadialBins<T>) -> Result<ShellPower<T>> {
    if s.dims != bins.dims {
        return Err(Error::DimMismatch {
            left: s.dims.clone(),
            right: bins.dims.clone(),
        });
    }
    let (sums, overflow) = bins.accumulate(|i| s.values[i].norm_sqr());
    let mut curve = bins.curve(CurveKind::Power, sums);
    for (shell, &c) in bins.counts().iter().enumerate() {
        if c == 0 {
            curve.flags[shell].insert(ShellFlags::EMPTY);
        }
    }
    Ok(ShellPower { curve, overflow })
}

/// Frequency radius of a cell measured in shell widths.
fn shell_radius(coord: &[usize], dims: &[usize], min_dim: usize) -> f64 {
    coord
        .iter()
        .zip(dims)
        .map(|(&i, &n)| {
            let k = signed_frequency(i, n) as f64 * min_dim as f64 / n as f64;
            k * k
        })
        .sum::<f64>()
        .sqrt()
}

/// Signed frequency index of array index `i` on an axis of length `n`.
#[inline]
pub fn signed_frequency(i: usize, n: usize) -> isize {
    if i <= n / 2 {
        i as isize
    } else {
        i as isize - n as isize
    }
}

/// Whether `i` is the unpaired Nyquist index of an even-length axis.
#[inline]
pub(crate) fn is_nyquist_index(i: usize, n: usize) -> bool {
    n % 2 == 0 && i == n / 2
}

pub(crate) fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > 3 {
        return Err(Error::InvalidGrid(format!(
            "expected 1 to 3 axes, got {}",
            dims.len()
        )));
    }
    if let Some(&bad) = dims.iter().find(|&&d| d < 2) {
        return Err(Error::InvalidGrid(format!(
            "every axis needs at least 2 samples, got {bad} in {dims:?}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn unravel(mut idx: usize, dims: &[usize], coord: &mut [usize]) {
    for a in (0..dims.len()).rev() {
        coord[a] = idx % dims[a];
        idx /= dims[a];
    }
}

#[inline]
pub(crate) fn ravel(coord: &[usize], dims: &[usize]) -> usize {
    coord
        .iter()
        .zip(dims)
        .fold(0, |acc, (&c, &n)| acc * n + c)
}

pub(crate) fn conjugate_index(idx: usize, dims: &[usize]) -> usize {
    let mut rem = idx;
    let mut out = 0;
    let mut mul = 1;
    for a in (0..dims.len()).rev() {
        let n = dims[a];
        let i = rem % n;
        rem /= n;
        out += ((n - i) % n) * mul;
        mul *= n;
    }
    out
}

pub(crate) fn centered_radii<T: Real>(dims: &[usize]) -> Vec<T> {
    let n: usize = dims.iter().product();
    let mut coord = vec![0usize; dims.len()];
    (0..n)
        .map(|idx| {
            unravel(idx, dims, &mut coord);
            let r2: f64 = coord
                .iter()
                .zip(dims)
                .map(|(&i, &d)| {
                    let x = i as f64 - (d / 2) as f64;
                    x * x
                })
                .sum();
            T::of(r2.sqrt())
        })
        .collect()
}

/// In-place N-D FFT along every axis.
pub(crate) fn fft_nd<T: Real>(buf: &mut [Complex<T>], dims: &[usize], direction: FftDirection) {
    let mut planner = FftPlanner::<T>::new();
    let total = buf.len();
    for axis in 0..dims.len() {
        let n = dims[axis];
        let fft = planner.plan_fft(n, direction);
        let inner: usize = dims[axis + 1..].iter().product();
        if inner == 1 {
            fft.process(buf);
            continue;
        }
        let outer = total / (n * inner);
        let mut lines = vec![Complex::new(T::zero(), T::zero()); n * inner];
        for o in 0..outer {
            let base = o * n * inner;
            for j in 0..inner {
                for i in 0..n {
                    lines[j * n + i] = buf[base + i * inner + j];
                }
            }
            fft.process(&mut lines);
            for j in 0..inner {
                for i in 0..n {
                    buf[base + i * inner + j] = lines[j * n + i];
                }
            }
        }
    }
}
