//! Fourier shell/ring correlation, the ½-bit threshold and resolution
//! read-out at the threshold crossing.

use serde::{Deserialize, Serialize};

use crate::curve::{Curve, CurveKind, ShellFlags};
use crate::error::{Error, Result};
use crate::grid::{RadialBins, Spectrum};
use crate::scalar::Real;

/// Parameters governing the effective number of independent cells per shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    /// Point-group multiplicity `S` (1 = no symmetry).
    pub symmetry_order: u32,
    /// Object linear extent over box extent, in (0, 1].
    pub fill_linear: f64,
    /// Power applied to `fill_linear` when scaling `N(r)`.
    pub n_eff_exponent: f64,
}

impl ThresholdParams {
    pub fn new(symmetry_order: u32, fill_linear: f64, n_eff_exponent: f64) -> Result<Self> {
        let p = Self {
            symmetry_order,
            fill_linear,
            n_eff_exponent,
        };
        p.validate()?;
        Ok(p)
    }

    /// No symmetry, full box, exponent 2 for 3D shells and 1 for 2D rings.
    pub fn for_dimensionality(ndim: usize) -> Self {
        Self {
            symmetry_order: 1,
            fill_linear: 1.0,
            n_eff_exponent: if ndim >= 3 { 2.0 } else { 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.symmetry_order < 1 {
            return Err(Error::InvalidParameter("symmetry order must be >= 1".into()));
        }
        if !(self.fill_linear > 0.0 && self.fill_linear <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "D/L must lie in (0, 1], got {}",
                self.fill_linear
            )));
        }
        if !(self.n_eff_exponent >= 0.0 && self.n_eff_exponent.is_finite()) {
            return Err(Error::InvalidParameter("n_eff exponent must be >= 0".into()));
        }
        Ok(())
    }

    /// `max(1, N(r) (D/L)^exponent / S)`.
    pub fn effective_count(&self, count: usize) -> f64 {
        let n = count as f64 * self.fill_linear.powf(self.n_eff_exponent) / self.symmetry_order as f64;
        n.max(1.0)
    }
}

/// Fourier shell correlation of two spectra on the same grid.
///
/// Shells where either power term vanishes get value 0 and
/// [`ShellFlags::EMPTY`].
pub fn fsc<T: Real>(a: &Spectrum<T>, b: &Spectrum<T>, bins: &RadialBins<T>) -> Result<Curve<T>> {
    a.ensure_same_grid(b)?;
    if a.dims() != bins.dims() {
        return Err(Error::DimMismatch {
            left: a.dims().to_vec(),
            right: bins.dims().to_vec(),
        });
    }
    if bins.n_shells() == 0 {
        return Err(Error::InvalidGrid("empty shell set".into()));
    }
    let (fa, fb) = (a.values(), b.values());
    let n = bins.n_shells();
    let mut num = vec![T::zero(); n];
    let mut pa = vec![T::zero(); n];
    let mut pb = vec![T::zero(); n];
    for idx in 0..fa.len() {
        if let Some(s) = bins.shell_of(idx) {
            let (x, y) = (fa[idx], fb[idx]);
            num[s] += x.re * y.re + x.im * y.im;
            pa[s] += x.norm_sqr();
            pb[s] += y.norm_sqr();
        }
    }
    let mut flags = vec![ShellFlags::none(); n];
    let values = (0..n)
        .map(|s| {
            if pa[s] == T::zero() || pb[s] == T::zero() {
                flags[s].insert(ShellFlags::EMPTY);
                T::zero()
            } else {
                let c = num[s] / (pa[s] * pb[s]).sqrt();
                c.max(-T::one()).min(T::one())
            }
        })
        .collect();
    let mut curve = bins.curve(CurveKind::Fsc, values);
    curve.flags = flags;
    Ok(curve)
}

/// ½-bit threshold for a single effective cell count.
///
/// Written as `1 - (1 - 1/sqrt(n)) / (1.2071 + 0.9102/sqrt(n))`, which is
/// algebraically `(0.2071 + 1.9102/sqrt(n)) / (1.2071 + 0.9102/sqrt(n))` and
/// evaluates to exactly 1 at `n = 1`.
pub fn half_bit_value<T: Real>(n_eff: T) -> T {
    let inv = T::one() / n_eff.max(T::one()).sqrt();
    T::one() - (T::one() - inv) / (T::of(1.2071) + T::of(0.9102) * inv)
}

/// The ½-bit information threshold curve for a shell geometry.
pub fn half_bit_threshold<T: Real>(bins: &RadialBins<T>, p: &ThresholdParams) -> Result<Curve<T>> {
    p.validate()?;
    let values = bins
        .counts()
        .iter()
        .map(|&c| half_bit_value(T::of(p.effective_count(c))))
        .collect();
    Ok(bins.curve(CurveKind::Threshold, values).with_label("half-bit"))
}

/// Fixed-value comparison overlay (e.g. 0.5 or 0.143). These constants
/// ignore the shell population and are labelled as non-endorsed.
pub fn fixed_threshold<T: Real>(bins: &RadialBins<T>, value: T) -> Curve<T> {
    bins.curve(CurveKind::Threshold, vec![value; bins.n_shells()])
        .with_label(format!("fixed {value} (non-endorsed)"))
}

/// Where an FSC curve drops below a threshold curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    /// Interpolated crossing frequency (absolute units).
    pub frequency: f64,
    /// `1 / frequency`.
    pub resolution: f64,
    /// Last shell at or above the threshold and first shell below it.
    pub shell_interval: (usize, usize),
    /// True when the curve never stays below the threshold; the report
    /// then carries the Nyquist frequency.
    pub no_crossing: bool,
}

/// First crossing of `fsc` below `thr` that persists for two consecutive
/// shells (or reaches the last shell). The DC shell is skipped. The crossing
/// frequency is linearly interpolated between the bracketing shells.
pub fn resolution_crossing<T: Real>(fsc: &Curve<T>, thr: &Curve<T>) -> Result<CrossingReport> {
    fsc.ensure_same_axis(thr)?;
    let n = fsc.n_shells();
    let below = |i: usize| fsc.values[i] < thr.values[i];
    for k in 1..n {
        if below(k) && (k + 1 == n || below(k + 1)) {
            let d0 = (fsc.values[k - 1] - thr.values[k - 1]).to_f64_lossy();
            let d1 = (fsc.values[k] - thr.values[k]).to_f64_lossy();
            let t = if d0 - d1 > 0.0 {
                (d0 / (d0 - d1)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let f0 = fsc.freq[k - 1].to_f64_lossy();
            let f1 = fsc.freq[k].to_f64_lossy();
            let frequency = f0 + t * (f1 - f0);
            return Ok(CrossingReport {
                frequency,
                resolution: 1.0 / frequency,
                shell_interval: (k - 1, k),
                no_crossing: false,
            });
        }
    }
    let nyq = fsc.nyquist.to_f64_lossy();
    Ok(CrossingReport {
        frequency: nyq,
        resolution: 1.0 / nyq,
        shell_interval: (n.saturating_sub(1), n.saturating_sub(1)),
        no_crossing: true,
    })
}
