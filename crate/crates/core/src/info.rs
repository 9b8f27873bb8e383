//! Fisher-transformed correlation information (FSI/FRI) in bits, its radial
//! weighting by shell population, and the band-integrated global information
//! content (GIC).

use serde::{Deserialize, Serialize};

use crate::curve::{Curve, CurveKind, ShellFlags};
use crate::error::{Error, Result};
use crate::grid::RadialBins;
use crate::scalar::Real;

pub const DEFAULT_CLAMP_EPS: f64 = 1e-7;
/// Default integration band, as fractions of Nyquist.
pub const DEFAULT_BAND: (f64, f64) = (0.2, 0.6);

/// Parameters of the information metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoParams {
    /// 2 for rings (FRI), 3 for shells (FSI).
    pub dimensionality: usize,
    /// Real-space filling degree κ, in (0, 1].
    pub kappa: f64,
    /// Linear filling D/L.
    pub d_over_l: f64,
    pub clamp_eps: f64,
    /// Constant K replacing the κ·r^(d−1) weighting.
    pub k_override: Option<f64>,
}

impl InfoParams {
    /// κ = (D/L)^d.
    pub fn from_fill(dimensionality: usize, d_over_l: f64) -> Result<Self> {
        let p = Self {
            dimensionality,
            kappa: d_over_l.powi(dimensionality as i32),
            d_over_l,
            clamp_eps: DEFAULT_CLAMP_EPS,
            k_override: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Explicit κ; D/L is derived as κ^(1/d).
    pub fn from_kappa(dimensionality: usize, kappa: f64) -> Result<Self> {
        let p = Self {
            dimensionality,
            kappa,
            d_over_l: kappa.powf(1.0 / dimensionality.max(1) as f64),
            clamp_eps: DEFAULT_CLAMP_EPS,
            k_override: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_clamp_eps(mut self, eps: f64) -> Result<Self> {
        self.clamp_eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_k_override(mut self, k: Option<f64>) -> Self {
        self.k_override = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.dimensionality, 2 | 3) {
            return Err(Error::InvalidParameter(format!(
                "dimensionality must be 2 or 3, got {}",
                self.dimensionality
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidParameter(format!("kappa must lie in [0, 1], got {}", self.kappa)));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 1e-3) {
            return Err(Error::InvalidParameter(format!(
                "clamp epsilon must lie in (0, 1e-3), got {}",
                self.clamp_eps
            )));
        }
        Ok(())
    }
}

/// `log2((1+c)/(1-c))` with `c` clamped to `[-1+eps, 1-eps]`. Evaluated as
/// `sign(c) * 2 atanh(|c|) / ln 2` so the result is exactly antisymmetric.
/// Returns the value and whether the clamp was active.
pub fn fisher_bits<T: Real>(c: T, eps: T) -> (T, bool) {
    let mag = c.abs();
    let cap = T::one() - eps;
    let saturated = mag >= cap;
    let m = if saturated { cap } else { mag };
    let bits = T::of(2.0) * m.atanh() / T::LN_2();
    (if c < T::zero() { -bits } else { bits }, saturated)
}

/// FSI/FRI: `K log2((1+c)/(1-c))` per shell.
pub fn fisher_information<T: Real>(fsc: &Curve<T>, k: T, eps: T) -> Curve<T> {
    let mut out = fsc.derived(CurveKind::Fsi, vec![T::zero(); fsc.n_shells()]);
    for (i, &c) in fsc.values.iter().enumerate() {
        let (bits, sat) = fisher_bits(c, eps);
        out.values[i] = k * bits;
        out.flags[i] = fsc.flags[i];
        if sat {
            out.flags[i].insert(ShellFlags::SATURATED);
        }
    }
    out
}

/// `K_r = κ r²` in 3D, `κ r` in 2D, with `r` in shell-index units, or the
/// constant override when one is set.
pub fn radial_weight<T: Real>(p: &InfoParams, shell: T) -> Result<T> {
    p.validate()?;
    if let Some(k) = p.k_override {
        return Ok(T::of(k));
    }
    let kappa = T::of(p.kappa);
    Ok(match p.dimensionality {
        3 => kappa * shell * shell,
        _ => kappa * shell,
    })
}

/// Radially weighted information FSI_r / FRI_r.
pub fn weighted_information<T: Real>(fsc: &Curve<T>, p: &InfoParams) -> Result<Curve<T>> {
    p.validate()?;
    let weights = (0..fsc.n_shells())
        .map(|s| radial_weight(p, T::of_usize(s)))
        .collect::<Result<Vec<T>>>()?;
    Ok(apply_weights(fsc, &weights, p.clamp_eps))
}

/// Variant weighting each shell by its actual cell count `N(r)`, scaled by
/// `1/(4π)` (3D) or `1/(2π)` (2D) so it tracks `κ r^(d−1)` on large grids.
/// The DC shell is always weighted 0.
pub fn weighted_information_by_counts<T: Real>(
    fsc: &Curve<T>,
    bins: &RadialBins<T>,
    p: &InfoParams,
) -> Result<Curve<T>> {
    p.validate()?;
    if bins.n_shells() != fsc.n_shells() {
        return Err(Error::LengthMismatch {
            left: fsc.n_shells(),
            right: bins.n_shells(),
        });
    }
    let norm = match p.dimensionality {
        3 => 4.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI,
    };
    let weights: Vec<T> = bins
        .counts()
        .iter()
        .enumerate()
        .map(|(s, &n)| if s == 0 { T::zero() } else { T::of(p.kappa * n as f64 / norm) })
        .collect();
    Ok(apply_weights(fsc, &weights, p.clamp_eps))
}

fn apply_weights<T: Real>(fsc: &Curve<T>, weights: &[T], eps: f64) -> Curve<T> {
    let eps = T::of(eps);
    let mut out = fsc.derived(CurveKind::Fsi, vec![T::zero(); fsc.n_shells()]);
    out.label = "fsi_r".into();
    for (i, (&c, &w)) in fsc.values.iter().zip(weights).enumerate() {
        let (bits, sat) = fisher_bits(c, eps);
        out.values[i] = w * bits;
        out.flags[i] = fsc.flags[i];
        if sat {
            out.flags[i].insert(ShellFlags::SATURATED);
        }
    }
    out
}

/// Shells whose centre frequency lies in `[lo, hi)` of Nyquist (`hi == 1`
/// includes the Nyquist shell).
pub fn band_shells<T: Real>(curve: &Curve<T>, lo: f64, hi: f64) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&lo) || !(hi > lo && hi <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "frequency band must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]"
        )));
    }
    let shells: Vec<usize> = (0..curve.n_shells())
        .filter(|&s| {
            let f = curve.fraction_of_nyquist(s).to_f64_lossy();
            let f_tol = 1e-9;
            f >= lo - f_tol && (f < hi - f_tol || (hi >= 1.0 && f <= 1.0 + f_tol))
        })
        .collect();
    if shells.is_empty() {
        return Err(Error::EmptyShellRange { lo, hi });
    }
    Ok(shells)
}

/// Global information content: sum of FSI_r over the band `[lo, hi)` of
/// Nyquist. Undefined shells are skipped.
pub fn integrated_information<T: Real>(fsi_r: &Curve<T>, lo: f64, hi: f64) -> Result<T> {
    let shells = band_shells(fsi_r, lo, hi)?;
    Ok(shells
        .into_iter()
        .filter(|&s| fsi_r.is_defined(s))
        .map(|s| fsi_r.values[s])
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(values: Vec<f64>) -> Curve<f64> {
        let n = values.len();
        let freq = (0..n).map(|i| i as f64 / (2.0 * (n - 1) as f64)).collect();
        Curve::new(CurveKind::Fsc, values, freq, 0.5).unwrap()
    }

    #[test]
    fn fisher_values() {
        let eps = DEFAULT_CLAMP_EPS;
        assert_eq!(fisher_bits(0.0, eps).0, 0.0);
        assert!((fisher_bits(0.99, eps).0 - 199f64.log2()).abs() < 1e-12);
        assert!((fisher_bits(-0.999, eps).0 + 1999f64.log2()).abs() < 1e-11);
        let (cap, sat) = fisher_bits(1.0, eps);
        assert!(sat);
        assert!((cap - ((2.0 - eps) / eps).log2()).abs() < 1e-6);
        assert_eq!(fisher_bits(-1.0, eps).0, -cap);
    }

    #[test]
    fn radial_weight_values() {
        let p = InfoParams::from_kappa(3, 0.1).unwrap();
        assert!((radial_weight(&p, 10.0).unwrap() - 10.0f64).abs() < 1e-12);
        assert_eq!(radial_weight(&p, 0.0f64).unwrap(), 0.0);
        let p2 = InfoParams::from_kappa(2, 0.5).unwrap();
        assert!((radial_weight(&p2, 4.0f64).unwrap() - 2.0).abs() < 1e-12);
        let fill = InfoParams::from_fill(3, 2.0 / 3.0).unwrap();
        assert!((fill.kappa - 8.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn bad_dimensionality_rejected() {
        assert!(InfoParams::from_kappa(1, 0.5).is_err());
        let mut p = InfoParams::from_kappa(3, 0.5).unwrap();
        p.dimensionality = 4;
        assert!(radial_weight(&p, 1.0f64).is_err());
    }

    #[test]
    fn weighted_constant_correlation() {
        let p = InfoParams::from_kappa(3, 1.0).unwrap();
        let w = weighted_information(&curve(vec![0.6; 9]), &p).unwrap();
        for (r, &v) in w.values.iter().enumerate() {
            assert!((v - 2.0 * (r * r) as f64).abs() < 1e-12);
        }
        let z = weighted_information(&curve(vec![0.0; 9]), &p).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dc_shell_is_zero_even_when_correlated() {
        let p = InfoParams::from_kappa(2, 0.7).unwrap();
        let w = weighted_information(&curve(vec![0.999, 0.2, 0.1]), &p).unwrap();
        assert_eq!(w.values[0], 0.0);
    }

    #[test]
    fn saturation_flagged() {
        let p = InfoParams::from_kappa(3, 1.0).unwrap();
        let w = weighted_information(&curve(vec![1.0; 5]), &p).unwrap();
        assert!(w.flags.iter().all(|f| f.contains(ShellFlags::SATURATED)));
    }

    #[test]
    fn band_integration() {
        // 31 shells: shell s sits at s/30 of Nyquist, [0.2, 0.6) holds shells 6..=17.
        let ones = curve(vec![1.0; 31]);
        assert_eq!(band_shells(&ones, 0.2, 0.6).unwrap(), (6..18).collect::<Vec<_>>());
        assert!((integrated_information(&ones, 0.2, 0.6).unwrap() - 12.0).abs() < 1e-12);
        assert_eq!(integrated_information(&curve(vec![0.0; 31]), 0.2, 0.6).unwrap(), 0.0);
        assert!(matches!(
            integrated_information(&curve(vec![1.0; 3]), 0.1, 0.2),
            Err(Error::EmptyShellRange { .. })
        ));
        assert!(integrated_information(&ones, 0.6, 0.2).is_err());
    }

    #[test]
    fn counts_weighting_zero_at_dc() {
        let bins = crate::grid::radial_bins::<f64>(&[32, 32, 32], 1.0).unwrap();
        let fsc = bins.curve(CurveKind::Fsc, vec![0.6; bins.n_shells()]);
        let p = InfoParams::from_kappa(3, 1.0).unwrap();
        let w = weighted_information_by_counts(&fsc, &bins, &p).unwrap();
        assert_eq!(w.values[0], 0.0);
        // Mid shells track κ r² within the lumpiness of small shells.
        let r = 10usize;
        let ratio = w.values[r] / (2.0 * (r * r) as f64);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }
}
