//! Signal-plus-noise model experiment: a known phantom `S` with independent
//! noise realisations `A = S + N1`, `B = S + N2`, and the split of the
//! correlation numerator of `A` and `B` into its four terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::curve::{Curve, CurveKind};
use crate::error::{Error, Result};
use crate::grid::{forward_transform, RadialBins, Volume};
use crate::metrics::fsc;
use crate::prep::soft_mask;
use crate::scalar::Real;

/// Default relative threshold defining the signal-comparable band.
pub const DEFAULT_BAND_RATIO: f64 = 0.5;
/// Soft-mask settings applied to generated phantoms.
pub const PHANTOM_MASK_RADIUS: f64 = 2.0 / 3.0;
pub const PHANTOM_MASK_SOFTNESS: f64 = 0.08;
/// Blob centres lie within this fraction of the inner radius.
const BLOB_PLACEMENT_RADIUS: f64 = 0.5;

/// Generated phantom; `is_empty` is set when no blobs were placed.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom<T> {
    pub volume: Volume<T>,
    pub is_empty: bool,
}

/// Sum of Gaussian blobs at random interior positions, soft-masked and with
/// zero mean; the exterior of the mask stays empty. Deterministic per seed.
pub fn generate_phantom<T: Real>(
    dims: &[usize],
    seed: u64,
    blob_count: usize,
    blob_sigma_range: (f64, f64),
) -> Result<Phantom<T>> {
    let (s_lo, s_hi) = blob_sigma_range;
    if !(s_lo > 0.0 && s_hi >= s_lo) {
        return Err(Error::InvalidParameter(format!(
            "blob sigma range must satisfy 0 < lo <= hi, got ({s_lo}, {s_hi})"
        )));
    }
    let zero = Volume::zeros(dims, T::one())?;
    if blob_count == 0 {
        return Ok(Phantom {
            volume: zero,
            is_empty: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ndim = dims.len();
    let h = zero.min_dim() as f64 / 2.0;
    let reach = BLOB_PLACEMENT_RADIUS * h;
    let centre: Vec<f64> = dims.iter().map(|&n| (n / 2) as f64).collect();
    let blobs: Vec<(Vec<f64>, f64, f64)> = (0..blob_count)
        .map(|_| {
            let offset = loop {
                let o: Vec<f64> = (0..ndim).map(|_| rng.random_range(-reach..=reach)).collect();
                if o.iter().map(|x| x * x).sum::<f64>() <= reach * reach {
                    break o;
                }
            };
            let pos = offset.iter().zip(&centre).map(|(o, c)| o + c).collect();
            let sigma = if s_hi > s_lo { rng.random_range(s_lo..=s_hi) } else { s_lo };
            let amp = rng.random_range(0.5..=1.5);
            (pos, sigma, amp)
        })
        .collect();
    let raw = Volume::from_fn(dims, T::one(), |c| {
        let v: f64 = blobs
            .iter()
            .map(|(p, s, a)| {
                let r2: f64 = c.iter().zip(p).map(|(&x, m)| (x as f64 - m).powi(2)).sum();
                a * (-0.5 * r2 / (s * s)).exp()
            })
            .sum();
        T::of(v)
    })?;
    let masked = soft_mask(&raw, PHANTOM_MASK_RADIUS, PHANTOM_MASK_SOFTNESS)?;
    // Remove the mean in the shape of the mask so the exterior stays empty.
    let support = soft_mask(&raw.map(|_| T::one()), PHANTOM_MASK_RADIUS, PHANTOM_MASK_SOFTNESS)?;
    let offset = masked.mean() / support.mean();
    Ok(Phantom {
        volume: masked.zip_with(&support, |x, m| x - offset * m)?,
        is_empty: false,
    })
}

/// The two noisy observations and the noise fields that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePair<T> {
    pub a: Volume<T>,
    pub b: Volume<T>,
    pub n1: Volume<T>,
    pub n2: Volume<T>,
}

/// Adds independent zero-mean Gaussian noise of standard deviation `sigma`.
/// `N1` and `N2` come from streams 1 and 2 of one seeded generator.
pub fn add_noise_pair<T: Real>(s: &Volume<T>, sigma: f64, seed: u64) -> Result<NoisePair<T>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let field = |stream: u64| -> Result<Volume<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let data = if sigma == 0.0 {
            vec![T::zero(); s.len()]
        } else {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            (0..s.len()).map(|_| T::of(normal.sample(&mut rng))).collect()
        };
        Volume::new(s.dims(), s.step(), data)
    };
    let n1 = field(1)?;
    let n2 = field(2)?;
    Ok(NoisePair {
        a: s.zip_with(&n1, |x, y| x + y)?,
        b: s.zip_with(&n2, |x, y| x + y)?,
        n1,
        n2,
    })
}

/// Per-shell correlation terms, each the real part of a shell sum divided by
/// the shell's cell count.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionCurves<T> {
    /// Normalized correlation of `A = S + N1` and `B = S + N2`.
    pub fsc_ab: Curve<T>,
    /// `S·S*`.
    pub t_ss: Curve<T>,
    /// `N1·S*`.
    pub t_sn1: Curve<T>,
    /// `S·N2*`.
    pub t_sn2: Curve<T>,
    /// `N1·N2*`.
    pub t_n1n2: Curve<T>,
    /// `A·B*`, computed directly.
    pub numerator: Curve<T>,
    /// `(|N1|² + |N2|²) / 2`.
    pub noise_power: Curve<T>,
    /// `sqrt(P_A P_B)` per shell, count-normalized.
    scale: Vec<f64>,
}

impl<T: Real> DecompositionCurves<T> {
    /// Largest additivity residual, relative to the shell's `sqrt(P_A P_B)/N`.
    pub fn additivity_residual(&self) -> f64 {
        (0..self.t_ss.n_shells())
            .map(|s| {
                let sum = self.t_ss.values[s] + self.t_sn1.values[s] + self.t_sn2.values[s] + self.t_n1n2.values[s];
                if self.scale[s] == 0.0 {
                    0.0
                } else {
                    (sum - self.numerator.values[s]).to_f64_lossy().abs() / self.scale[s]
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Splits the correlation numerator of `S + N1` and `S + N2` into its four
/// terms.
pub fn decompose<T: Real>(
    s: &Volume<T>,
    n1: &Volume<T>,
    n2: &Volume<T>,
    bins: &RadialBins<T>,
) -> Result<DecompositionCurves<T>> {
    for v in [n1, n2] {
        if v.dims() != s.dims() {
            return Err(Error::DimMismatch {
                left: s.dims().to_vec(),
                right: v.dims().to_vec(),
            });
        }
        if v.step() != s.step() {
            return Err(Error::GridMismatch("signal and noise steps differ".into()));
        }
    }
    let a = s.zip_with(n1, |x, y| x + y)?;
    let b = s.zip_with(n2, |x, y| x + y)?;
    let (fs, f1, f2) = (forward_transform(s)?, forward_transform(n1)?, forward_transform(n2)?);
    let (fa, fb) = (forward_transform(&a)?, forward_transform(&b)?);
    let fsc_ab = fsc(&fa, &fb, bins)?.with_label("fsc_ab");

    let counts = bins.counts();
    let shell_mean = |f: &dyn Fn(usize) -> T| -> Vec<T> {
        let (sums, _) = bins.accumulate(f);
        sums.iter()
            .zip(counts)
            .map(|(&v, &n)| if n == 0 { T::zero() } else { v / T::of_usize(n) })
            .collect()
    };
    let re_dot = |x: &[num_complex::Complex<T>], y: &[num_complex::Complex<T>], i: usize| {
        x[i].re * y[i].re + x[i].im * y[i].im
    };
    let (vs, v1, v2, va, vb) = (fs.values(), f1.values(), f2.values(), fa.values(), fb.values());
    let curve = |vals: Vec<T>, label: &str| bins.curve(CurveKind::Power, vals).with_label(label);
    let t_ss = curve(shell_mean(&|i| vs[i].norm_sqr()), "t_ss");
    let t_sn1 = curve(shell_mean(&|i| re_dot(v1, vs, i)), "t_sn1");
    let t_sn2 = curve(shell_mean(&|i| re_dot(vs, v2, i)), "t_sn2");
    let t_n1n2 = curve(shell_mean(&|i| re_dot(v1, v2, i)), "t_n1n2");
    let numerator = curve(shell_mean(&|i| re_dot(va, vb, i)), "numerator");
    let noise_power = curve(
        shell_mean(&|i| (v1[i].norm_sqr() + v2[i].norm_sqr()) * T::of(0.5)),
        "noise_power",
    );
    let pa = shell_mean(&|i| va[i].norm_sqr());
    let pb = shell_mean(&|i| vb[i].norm_sqr());
    let scale = pa
        .iter()
        .zip(&pb)
        .map(|(&x, &y)| (x * y).sqrt().to_f64_lossy())
        .collect();
    Ok(DecompositionCurves {
        fsc_ab,
        t_ss,
        t_sn1,
        t_sn2,
        t_n1n2,
        numerator,
        noise_power,
        scale,
    })
}

/// Aggregate reading of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// No noise at all; every ratio is 0/0.
    Trivial,
    /// Signal-noise cross terms exceed the noise-noise term in the
    /// signal-comparable band.
    CrossTermsDominant,
    /// No signal-comparable band, or no dominance there.
    NoiseNoiseComparable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Trivial => "trivial",
            Verdict::CrossTermsDominant => "cross-terms dominant",
            Verdict::NoiseNoiseComparable => "noise-noise comparable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// `|t_sn1 + t_sn2| / (|t_n1n2| + eps)` per shell; `None` for 0/0.
    pub ratios: Vec<Option<f64>>,
    /// Shells (excluding DC) where signal power is at least `band_ratio`
    /// times the noise power.
    pub band: Vec<usize>,
    pub band_ratio: f64,
    /// Mean of `|t_sn1 + t_sn2|` over the band.
    pub cross_mean: f64,
    /// Mean of `|t_n1n2|` over the band.
    pub noise_noise_mean: f64,
    pub verdict: Verdict,
}

const RATIO_EPS: f64 = 1e-300;

pub fn dominance_report<T: Real>(d: &DecompositionCurves<T>, band_ratio: f64) -> Result<DominanceReport> {
    if !(band_ratio >= 0.0) {
        return Err(Error::InvalidParameter(format!("band ratio must be >= 0, got {band_ratio}")));
    }
    let f = |c: &Curve<T>, s: usize| c.values[s].to_f64_lossy();
    let n = d.t_ss.n_shells();
    let ratios = (0..n)
        .map(|s| {
            let cross = (f(&d.t_sn1, s) + f(&d.t_sn2, s)).abs();
            let nn = f(&d.t_n1n2, s).abs();
            if cross == 0.0 && nn == 0.0 {
                None
            } else {
                Some(cross / (nn + RATIO_EPS))
            }
        })
        .collect();
    let noise_free = (0..n).all(|s| f(&d.noise_power, s) == 0.0);
    let band: Vec<usize> = (1..n)
        .filter(|&s| !noise_free && f(&d.t_ss, s) >= band_ratio * f(&d.noise_power, s))
        .collect();
    let mean = |g: &dyn Fn(usize) -> f64| {
        if band.is_empty() {
            0.0
        } else {
            band.iter().map(|&s| g(s)).sum::<f64>() / band.len() as f64
        }
    };
    let cross_mean = mean(&|s| (f(&d.t_sn1, s) + f(&d.t_sn2, s)).abs());
    let noise_noise_mean = mean(&|s| f(&d.t_n1n2, s).abs());
    let verdict = if noise_free {
        Verdict::Trivial
    } else if !band.is_empty() && cross_mean > noise_noise_mean {
        Verdict::CrossTermsDominant
    } else {
        Verdict::NoiseNoiseComparable
    };
    Ok(DominanceReport {
        ratios,
        band,
        band_ratio,
        cross_mean,
        noise_noise_mean,
        verdict,
    })
}

/// Parameters of one run of the model experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub seed: u64,
    pub blob_count: usize,
    pub blob_sigma_range: (f64, f64),
    /// Noise standard deviation relative to the phantom RMS.
    pub noise_to_signal: f64,
    pub band_ratio: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: vec![64, 64, 64],
            seed: 1,
            blob_count: 40,
            blob_sigma_range: (1.5, 3.0),
            noise_to_signal: 1.0,
            band_ratio: DEFAULT_BAND_RATIO,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult<T> {
    pub phantom: Phantom<T>,
    pub noise: NoisePair<T>,
    pub sigma: f64,
    pub curves: DecompositionCurves<T>,
    pub report: DominanceReport,
}

/// Phantom, noise pair, decomposition and dominance verdict in one call.
/// Noise streams are seeded from `seed + 1` so they differ from the phantom
/// generator.
pub fn run_experiment<T: Real>(cfg: &ExperimentConfig, bins: &RadialBins<T>) -> Result<ExperimentResult<T>> {
    let phantom = generate_phantom::<T>(&cfg.dims, cfg.seed, cfg.blob_count, cfg.blob_sigma_range)?;
    let sigma = cfg.noise_to_signal * phantom.volume.rms().to_f64_lossy();
    let noise = add_noise_pair(&phantom.volume, sigma, cfg.seed.wrapping_add(1))?;
    let curves = decompose(&phantom.volume, &noise.n1, &noise.n2, bins)?;
    let report = dominance_report(&curves, cfg.band_ratio)?;
    Ok(ExperimentResult {
        phantom,
        noise,
        sigma,
        curves,
        report,
    })
}
