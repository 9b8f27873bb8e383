//! Preparation of two independently determined maps for cross-comparison:
//! Fourier resampling to a common step, relative magnification correction,
//! shell-wise amplitude matching, soft masking and translational alignment.
//!
//! Rotational alignment is not provided; inputs must already share an
//! orientation.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{
    centered_radii, forward_transform, inverse_transform, is_nyquist_index, signed_frequency, unravel, RadialBins,
    Spectrum, Volume,
};
use crate::scalar::Real;

/// Smallest axis length a resampled grid may have.
pub const MIN_RESAMPLED_DIM: usize = 8;

/// Target grid of a Fourier resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplePlan {
    pub src_step: f64,
    pub dst_step: f64,
    pub src_dims: Vec<usize>,
    pub dst_dims: Vec<usize>,
}

impl ResamplePlan {
    /// `dst = round(src * src_step / dst_step)` per axis, forced even.
    /// Equal steps give the identity plan.
    pub fn new(src_dims: &[usize], src_step: f64, dst_step: f64) -> Result<Self> {
        if !(dst_step > 0.0 && dst_step.is_finite()) || !(src_step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "steps must be positive, got {src_step} -> {dst_step}"
            )));
        }
        let dst_dims = if dst_step == src_step {
            src_dims.to_vec()
        } else {
            src_dims
                .iter()
                .map(|&n| {
                    let x = n as f64 * src_step / dst_step;
                    let d = x.round() as usize;
                    if d % 2 == 0 {
                        d
                    } else if x > d as f64 {
                        d + 1
                    } else {
                        d - 1
                    }
                })
                .collect()
        };
        if let Some(&bad) = dst_dims.iter().find(|&&d| d < MIN_RESAMPLED_DIM) {
            return Err(Error::InvalidParameter(format!(
                "resampled grid would have only {bad} samples on an axis (minimum {MIN_RESAMPLED_DIM})"
            )));
        }
        Ok(Self {
            src_step,
            dst_step,
            src_dims: src_dims.to_vec(),
            dst_dims,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.src_dims == self.dst_dims
    }
}

/// Resamples by zero-padding (finer step) or cropping (coarser step) the
/// spectrum about DC. Sample values keep their physical scale, so the mean
/// density is preserved.
pub fn fourier_resample<T: Real>(v: &Volume<T>, dst_step: T) -> Result<Volume<T>> {
    let plan = ResamplePlan::new(v.dims(), v.step().to_f64_lossy(), dst_step.to_f64_lossy())?;
    if plan.is_identity() {
        return v.clone().with_step(dst_step);
    }
    let spec = forward_transform(v)?;
    let mut dims = v.dims().to_vec();
    let mut buf = spec.into_values();
    for axis in 0..dims.len() {
        let (b, d) = resize_axis(&buf, &dims, axis, plan.dst_dims[axis]);
        buf = b;
        dims = d;
    }
    let n_src = v.len();
    let n_dst: usize = dims.iter().product();
    let out = inverse_transform(&Spectrum::new(&dims, dst_step, buf)?)?;
    Ok(out.scaled(T::of_usize(n_dst) / T::of_usize(n_src)))
}

/// Changes the length of one spectral axis, keeping frequencies common to
/// both lengths. An unpaired Nyquist coefficient is split evenly between
/// `±m/2` when padding and the `±m/2` pair is merged when cropping, which
/// keeps the result Hermitian.
fn resize_axis<T: Real>(buf: &[Complex<T>], dims: &[usize], axis: usize, m: usize) -> (Vec<Complex<T>>, Vec<usize>) {
    let n = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut new_dims = dims.to_vec();
    new_dims[axis] = m;
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; outer * m * inner];
    let half = T::of(0.5);
    for o in 0..outer {
        for j in 0..inner {
            let src = |i: usize| buf[(o * n + i) * inner + j];
            let mut dst = |i: usize, c: Complex<T>| out[(o * m + i) * inner + j] += c;
            if m >= n {
                for i in 0..n {
                    let k = signed_frequency(i, n);
                    if is_nyquist_index(i, n) && m > n {
                        dst(n / 2, src(i) * half);
                        dst(m - n / 2, src(i) * half);
                    } else {
                        dst(k.rem_euclid(m as isize) as usize, src(i));
                    }
                }
            } else {
                for i in 0..n {
                    let k = signed_frequency(i, n);
                    let lim = (m / 2) as isize;
                    if k.abs() < lim || (m % 2 == 1 && k.abs() <= lim) {
                        dst(k.rem_euclid(m as isize) as usize, src(i));
                    } else if m % 2 == 0 && k.abs() == lim {
                        dst(m / 2, src(i));
                    }
                }
            }
        }
    }
    (out, new_dims)
}

/// Isotropic magnification about the box centre at fixed grid size:
/// `out(x) = in(c + (x - c) / scale)`, evaluated by trigonometric (Fourier
/// series) interpolation along each axis.
pub fn magnification_scale<T: Real>(v: &Volume<T>, scale: f64) -> Result<Volume<T>> {
    if !(0.9..=1.1).contains(&scale) {
        return Err(Error::InvalidParameter(format!(
            "magnification scale must lie in [0.9, 1.1], got {scale}"
        )));
    }
    if scale == 1.0 {
        return Ok(v.clone());
    }
    let mut data: Vec<f64> = v.data().iter().map(|x| x.to_f64_lossy()).collect();
    let dims = v.dims().to_vec();
    for axis in 0..dims.len() {
        let n = dims[axis];
        let c = (n / 2) as f64;
        let positions: Vec<f64> = (0..n).map(|x| c + (x as f64 - c) / scale).collect();
        let w = interpolation_matrix(n, &positions);
        data = apply_along_axis(&data, &dims, axis, &w);
    }
    Volume::new(&dims, v.step(), data.into_iter().map(T::of).collect())
}

/// Rows of the periodic band-limited (Dirichlet) interpolation kernel.
fn interpolation_matrix(n: usize, positions: &[f64]) -> Vec<Vec<f64>> {
    let kmax = if n % 2 == 0 { n / 2 - 1 } else { (n - 1) / 2 };
    let two_pi = 2.0 * std::f64::consts::PI;
    positions
        .iter()
        .map(|&p| {
            (0..n)
                .map(|m| {
                    let t = p - m as f64;
                    let mut s = 1.0;
                    for k in 1..=kmax {
                        s += 2.0 * (two_pi * k as f64 * t / n as f64).cos();
                    }
                    if n % 2 == 0 {
                        s += (std::f64::consts::PI * t).cos();
                    }
                    s / n as f64
                })
                .collect()
        })
        .collect()
}

fn apply_along_axis(data: &[f64], dims: &[usize], axis: usize, w: &[Vec<f64>]) -> Vec<f64> {
    let n = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(n * inner).enumerate().for_each(|(o, block)| {
        debug_assert!(o < outer);
        let base = o * n * inner;
        for j in 0..inner {
            for (x, row) in w.iter().enumerate() {
                let mut acc = 0.0;
                for (m, &wm) in row.iter().enumerate() {
                    acc += wm * data[base + m * inner + j];
                }
                block[x * inner + j] = acc;
            }
        }
    });
    out
}

/// Result of shell-wise amplitude matching.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeMatch<T> {
    pub spectrum: Spectrum<T>,
    /// Multiplier applied to each shell of the source.
    pub scale_factors: Vec<T>,
    /// Shells with zero source power, left at zero.
    pub zero_power_shells: Vec<usize>,
}

/// Rescales each shell of `source` so its power equals that of `target`;
/// phases are untouched. Corner cells are matched as one extra shell.
pub fn amplitude_match<T: Real>(
    target: &Spectrum<T>,
    source: &Spectrum<T>,
    bins: &RadialBins<T>,
) -> Result<AmplitudeMatch<T>> {
    target.ensure_same_grid(source)?;
    if source.dims() != bins.dims() {
        return Err(Error::DimMismatch {
            left: source.dims().to_vec(),
            right: bins.dims().to_vec(),
        });
    }
    let (pt, ot) = bins.accumulate(|i| target.values()[i].norm_sqr());
    let (ps, os) = bins.accumulate(|i| source.values()[i].norm_sqr());
    let factor = |t: T, s: T| if s == T::zero() { T::zero() } else { (t / s).sqrt() };
    let scale_factors: Vec<T> = pt.iter().zip(&ps).map(|(&t, &s)| factor(t, s)).collect();
    let overflow_factor = factor(ot, os);
    let zero_power_shells = ps
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == T::zero())
        .map(|(i, _)| i)
        .collect();
    let values = source
        .values()
        .iter()
        .enumerate()
        .map(|(i, &c)| match bins.shell_of(i) {
            Some(s) => c * scale_factors[s],
            None => c * overflow_factor,
        })
        .collect();
    Ok(AmplitudeMatch {
        spectrum: Spectrum::new(source.dims(), source.step(), values)?,
        scale_factors,
        zero_power_shells,
    })
}

/// Radially symmetric soft mask value: 1 up to `r0`, Gaussian fall-off with
/// width `sigma` beyond.
pub fn soft_mask_profile(r: f64, r0: f64, sigma: f64) -> f64 {
    if r <= r0 {
        1.0
    } else {
        let z = (r - r0) / sigma;
        (-0.5 * z * z).exp()
    }
}

/// Multiplies a volume by a mask that is 1 inside `radius_frac * min_dim/2`
/// and falls off as a Gaussian of width `softness_frac * min_dim/2`.
pub fn soft_mask<T: Real>(v: &Volume<T>, radius_frac: f64, softness_frac: f64) -> Result<Volume<T>> {
    if !(radius_frac > 0.0 && radius_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mask radius must lie in (0, 1], got {radius_frac}"
        )));
    }
    if !(softness_frac > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mask softness must be positive, got {softness_frac}"
        )));
    }
    let h = v.min_dim() as f64 / 2.0;
    let (r0, sigma) = (radius_frac * h, softness_frac * h);
    let radii: Vec<T> = centered_radii(v.dims());
    let data = v
        .data()
        .iter()
        .zip(&radii)
        .map(|(&x, r)| x * T::of(soft_mask_profile(r.to_f64_lossy(), r0, sigma)))
        .collect();
    Volume::new(v.dims(), v.step(), data)
}

/// Translation found by [`translational_align`].
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment<T> {
    /// Shift (in samples, per axis) that maps `moving` onto `reference`.
    pub shift: Vec<f64>,
    pub aligned: Volume<T>,
    /// Peak of the circular cross-correlation.
    pub peak: f64,
}

/// Fourier phase shift: `out(x) = v(x - shift)` with circular boundaries.
pub fn shift_volume<T: Real>(v: &Volume<T>, shift: &[f64]) -> Result<Volume<T>> {
    if shift.len() != v.ndim() {
        return Err(Error::LengthMismatch {
            left: shift.len(),
            right: v.ndim(),
        });
    }
    let mut spec = forward_transform(v)?;
    let dims = v.dims().to_vec();
    let factors: Vec<Vec<Complex<f64>>> = dims
        .iter()
        .zip(shift)
        .map(|(&n, &d)| {
            (0..n)
                .map(|i| {
                    let k = signed_frequency(i, n) as f64;
                    let phase = -2.0 * std::f64::consts::PI * k * d / n as f64;
                    if is_nyquist_index(i, n) {
                        Complex::new(phase.cos(), 0.0)
                    } else {
                        Complex::new(phase.cos(), phase.sin())
                    }
                })
                .collect()
        })
        .collect();
    let mut coord = vec![0usize; dims.len()];
    for (idx, c) in spec.values_mut().iter_mut().enumerate() {
        unravel(idx, &dims, &mut coord);
        let mut f = Complex::new(1.0, 0.0);
        for (a, &i) in coord.iter().enumerate() {
            f *= factors[a][i];
        }
        *c = *c * Complex::new(T::of(f.re), T::of(f.im));
    }
    inverse_transform(&spec)
}

/// Finds the translation maximising the circular cross-correlation between
/// `reference` and `moving`, refines it per axis with a parabola through the
/// peak and its neighbours, and applies it to `moving`.
pub fn translational_align<T: Real>(reference: &Volume<T>, moving: &Volume<T>) -> Result<Alignment<T>> {
    if reference.dims() != moving.dims() {
        return Err(Error::DimMismatch {
            left: reference.dims().to_vec(),
            right: moving.dims().to_vec(),
        });
    }
    let zero = |v: &Volume<T>| v.data().iter().all(|&x| x == T::zero());
    if zero(reference) || zero(moving) {
        return Err(Error::ZeroInput);
    }
    let fr = forward_transform(reference)?;
    let fm = forward_transform(moving)?;
    let cross: Vec<Complex<T>> = fr
        .values()
        .iter()
        .zip(fm.values())
        .map(|(a, b)| a * b.conj())
        .collect();
    let dims = reference.dims().to_vec();
    let corr = inverse_transform(&Spectrum::new(&dims, reference.step(), cross)?)?;
    let data = corr.data();
    let (peak_idx, peak) = data
        .iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let mut coord = vec![0usize; dims.len()];
    unravel(peak_idx, &dims, &mut coord);

    let mut shift = Vec::with_capacity(dims.len());
    for axis in 0..dims.len() {
        let n = dims[axis];
        let at = |offset: isize| {
            let mut c = coord.clone();
            c[axis] = (coord[axis] as isize + offset).rem_euclid(n as isize) as usize;
            corr.get(&c).to_f64_lossy()
        };
        let (cm, c0, cp) = (at(-1), at(0), at(1));
        let denom = cm - 2.0 * c0 + cp;
        let delta = if denom.abs() > f64::EPSILON * c0.abs() && denom < 0.0 {
            (0.5 * (cm - cp) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        shift.push(signed_frequency(coord[axis], n) as f64 + delta);
    }
    let aligned = shift_volume(moving, &shift)?;
    Ok(Alignment {
        shift,
        aligned,
        peak: peak.to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::radial_bins;

    fn gaussian_blob(dims: &[usize], center: &[f64], sigma: f64) -> Volume<f64> {
        Volume::from_fn(dims, 1.0, |c| {
            let r2: f64 = c.iter().zip(center).map(|(&i, &m)| (i as f64 - m).powi(2)).sum();
            (-0.5 * r2 / (sigma * sigma)).exp()
        })
        .unwrap()
    }

    #[test]
    fn plan_arithmetic() {
        let p = ResamplePlan::new(&[256, 256, 256], 1.05, 0.84).unwrap();
        assert_eq!(p.dst_dims, vec![320, 320, 320]);
        let q = ResamplePlan::new(&[33, 33], 1.0, 1.0).unwrap();
        assert!(q.is_identity());
        let r = ResamplePlan::new(&[30], 1.0, 0.9).unwrap();
        assert_eq!(r.dst_dims[0] % 2, 0);
        assert!(ResamplePlan::new(&[16, 16], 1.0, 3.0).is_err());
        assert!(ResamplePlan::new(&[16, 16], 1.0, 0.0).is_err());
    }

    #[test]
    fn identity_resample_is_bit_exact() {
        let v = gaussian_blob(&[12, 10], &[6.0, 5.0], 2.0);
        let out = fourier_resample(&v, 1.0).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn resample_preserves_mean() {
        let v = gaussian_blob(&[16, 16, 16], &[8.0, 8.0, 8.0], 2.0).map(|x| x + 0.3);
        let up = fourier_resample(&v, 0.8).unwrap();
        assert_eq!(up.dims(), &[20, 20, 20]);
        assert!((up.mean() - v.mean()).abs() < 1e-9 * v.mean());
        let down = fourier_resample(&v, 1.6).unwrap();
        assert_eq!(down.dims(), &[10, 10, 10]);
        assert!((down.mean() - v.mean()).abs() < 1e-9 * v.mean());
    }

    #[test]
    fn magnification_bounds_and_identity() {
        let v = gaussian_blob(&[16, 16], &[8.0, 8.0], 2.0);
        assert!(magnification_scale(&v, 1.2).is_err());
        assert_eq!(magnification_scale(&v, 1.0).unwrap(), v);
    }

    #[test]
    fn magnification_preserves_band_limited_samples_at_unit_scale_positions() {
        // With positions equal to grid points the kernel reproduces the samples.
        let w = interpolation_matrix(10, &(0..10).map(|x| x as f64).collect::<Vec<_>>());
        for (i, row) in w.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn amplitude_match_zero_shell_stays_zero() {
        let dims = [16, 16];
        let bins = radial_bins(&dims, 1.0).unwrap();
        let t = forward_transform(&gaussian_blob(&dims, &[8.0, 8.0], 1.5)).unwrap();
        let s = Spectrum::new(&dims, 1.0, vec![Complex::new(0.0, 0.0); 256]).unwrap();
        let m = amplitude_match(&t, &s, &bins).unwrap();
        assert_eq!(m.zero_power_shells.len(), bins.n_shells());
        assert!(m.spectrum.values().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn amplitude_match_self_is_unity() {
        let dims = [16, 16];
        let bins = radial_bins(&dims, 1.0).unwrap();
        let t = forward_transform(&gaussian_blob(&dims, &[8.0, 8.0], 1.5)).unwrap();
        let m = amplitude_match(&t, &t, &bins).unwrap();
        assert!(m.scale_factors.iter().all(|&f| (f - 1.0).abs() < 1e-12));
    }

    #[test]
    fn soft_mask_profile_closed_form() {
        let v = Volume::new(&[32, 32], 1.0, vec![1.0f64; 1024]).unwrap();
        let m = soft_mask(&v, 0.5, 0.25).unwrap();
        // Flat zone ends at r = 8, sigma is 4 samples.
        let r = m.get(&[16, 16 + 15]);
        let expected = (-0.5 * ((15.0 - 8.0) / 4.0f64).powi(2)).exp();
        assert!((r - expected).abs() < 1e-12);
        assert!(soft_mask(&v, 0.0, 0.1).is_err());
        assert!(soft_mask(&v, 0.5, 0.0).is_err());
    }

    #[test]
    fn align_rejects_zero_and_mismatch() {
        let z = Volume::<f64>::zeros(&[8, 8], 1.0).unwrap();
        let b = gaussian_blob(&[8, 8], &[4.0, 4.0], 1.0);
        assert_eq!(translational_align(&z, &b).unwrap_err(), Error::ZeroInput);
        let c = gaussian_blob(&[8, 6], &[4.0, 3.0], 1.0);
        assert!(translational_align(&b, &c).is_err());
    }

    #[test]
    fn align_identity() {
        let b = gaussian_blob(&[16, 16, 16], &[7.0, 8.0, 9.0], 2.0);
        let a = translational_align(&b, &b).unwrap();
        assert!(a.shift.iter().all(|&s| s.abs() < 1e-9));
    }
}
