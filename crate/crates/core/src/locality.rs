//! Local correlation metrics: local FSC in a Gaussian-apodized sub-volume and
//! the local (cross-)information density maps built from it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{Curve, ShellFlags};
use crate::error::{Error, Result};
use crate::grid::{forward_transform, radial_bins, ravel, unravel, RadialBins, Volume};
use crate::info::{band_shells, weighted_information, InfoParams};
use crate::metrics::fsc;
use crate::scalar::Real;

/// Relative step tolerance for cross-map comparisons.
pub const STEP_TOLERANCE: f64 = 1e-3;
/// Value written for cells that no window has evaluated when exporting.
pub const UNEVALUATED_FILL: f64 = -9999.0;
/// Default Gaussian mask σ as a fraction of the half window.
pub const DEFAULT_MASK_SIGMA_FRAC: f64 = 0.6;

/// Cubic (or square) sliding window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Edge length in samples.
    pub size: usize,
    /// Distance between neighbouring window centres.
    pub stride: usize,
    /// Gaussian σ as a fraction of `size/2`.
    pub mask_sigma_frac: f64,
}

impl WindowSpec {
    pub fn new(size: usize, stride: usize, mask_sigma_frac: f64) -> Result<Self> {
        let w = Self {
            size,
            stride,
            mask_sigma_frac,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 8 {
            return Err(Error::InvalidParameter(format!("window size must be >= 8, got {}", self.size)));
        }
        if self.stride < 1 {
            return Err(Error::InvalidParameter("window stride must be >= 1".into()));
        }
        if !(self.mask_sigma_frac > 0.0 && self.mask_sigma_frac <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mask sigma fraction must lie in (0, 1], got {}",
                self.mask_sigma_frac
            )));
        }
        Ok(())
    }

    /// Gaussian apodization mask on a `size^ndim` grid, centred on the
    /// window's geometric centre.
    pub fn mask(&self, ndim: usize) -> Vec<f64> {
        let dims = vec![self.size; ndim];
        let sigma = self.mask_sigma_frac * self.size as f64 / 2.0;
        let c = (self.size as f64 - 1.0) / 2.0;
        let n: usize = dims.iter().product();
        let mut coord = vec![0usize; ndim];
        (0..n)
            .map(|i| {
                unravel(i, &dims, &mut coord);
                let r2: f64 = coord.iter().map(|&x| (x as f64 - c).powi(2)).sum();
                (-0.5 * r2 / (sigma * sigma)).exp()
            })
            .collect()
    }

    /// Filling degree of the window: the mask's integral over the window
    /// volume.
    pub fn kappa(&self, ndim: usize) -> f64 {
        let m = self.mask(ndim);
        m.iter().sum::<f64>() / m.len() as f64
    }
}

/// Evaluation state of one InfoMap cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellState {
    Unevaluated,
    Evaluated,
    /// Evaluated, but at least one in-band shell hit the correlation clamp.
    Saturated,
}

/// Integrated local information per grid position.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMap<T> {
    dims: Vec<usize>,
    step: T,
    values: Vec<T>,
    state: Vec<CellState>,
}

impl<T: Real> InfoMap<T> {
    pub fn unevaluated(dims: &[usize], step: T) -> Self {
        let n = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            step,
            values: vec![T::zero(); n],
            state: vec![CellState::Unevaluated; n],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn states(&self) -> &[CellState] {
        &self.state
    }

    pub fn get(&self, coord: &[usize]) -> (T, CellState) {
        let i = ravel(coord, &self.dims);
        (self.values[i], self.state[i])
    }

    /// Mean over evaluated cells, `None` if nothing was evaluated.
    pub fn evaluated_mean(&self) -> Option<T> {
        let (sum, n) = self
            .values
            .iter()
            .zip(&self.state)
            .filter(|(_, s)| **s != CellState::Unevaluated)
            .fold((T::zero(), 0usize), |(a, n), (&v, _)| (a + v, n + 1));
        (n > 0).then(|| sum / T::of_usize(n))
    }

    /// Full-grid volume with unevaluated cells set to `fill`.
    pub fn to_volume(&self, fill: T) -> Result<Volume<T>> {
        let data = self
            .values
            .iter()
            .zip(&self.state)
            .map(|(&v, s)| if *s == CellState::Unevaluated { fill } else { v })
            .collect();
        Volume::new(&self.dims, self.step, data)
    }
}

/// Integrated information of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalValue<T> {
    pub bits: T,
    pub saturated: bool,
}

struct WindowContext<T> {
    spec: WindowSpec,
    mask: Vec<f64>,
    bins: RadialBins<T>,
    dims: Vec<usize>,
}

impl<T: Real> WindowContext<T> {
    fn new(spec: WindowSpec, ndim: usize, step: T) -> Result<Self> {
        spec.validate()?;
        let dims = vec![spec.size; ndim];
        Ok(Self {
            spec,
            mask: spec.mask(ndim),
            bins: radial_bins(&dims, step)?,
            dims,
        })
    }

    /// Masked sub-volume starting at `start`, with the mask-weighted mean
    /// removed before apodization.
    fn extract(&self, v: &Volume<T>, start: &[usize]) -> Result<Volume<T>> {
        let mut coord = vec![0usize; self.dims.len()];
        let mut abs = vec![0usize; self.dims.len()];
        let raw: Vec<f64> = (0..self.mask.len())
            .map(|i| {
                unravel(i, &self.dims, &mut coord);
                for a in 0..coord.len() {
                    abs[a] = start[a] + coord[a];
                }
                v.get(&abs).to_f64_lossy()
            })
            .collect();
        let wsum: f64 = self.mask.iter().sum();
        let mean = raw.iter().zip(&self.mask).map(|(x, m)| x * m).sum::<f64>() / wsum;
        let data = raw.iter().zip(&self.mask).map(|(x, m)| T::of((x - mean) * m)).collect();
        Volume::new(&self.dims, v.step(), data)
    }

    fn local_fsc(&self, a: &Volume<T>, b: &Volume<T>, start: &[usize]) -> Result<Curve<T>> {
        let fa = forward_transform(&self.extract(a, start)?)?;
        let fb = forward_transform(&self.extract(b, start)?)?;
        fsc(&fa, &fb, &self.bins)
    }

    fn local_information(
        &self,
        a: &Volume<T>,
        b: &Volume<T>,
        start: &[usize],
        p: &InfoParams,
        shells: &[usize],
    ) -> Result<LocalValue<T>> {
        let curve = self.local_fsc(a, b, start)?;
        let fsi_r = weighted_information(&curve, p)?;
        let mut bits = T::zero();
        let mut saturated = false;
        for &s in shells {
            if fsi_r.is_defined(s) {
                bits += fsi_r.values[s];
            }
            saturated |= fsi_r.flags[s].contains(ShellFlags::SATURATED);
        }
        Ok(LocalValue { bits, saturated })
    }

    fn start_for_center(&self, dims: &[usize], center: &[usize]) -> Result<Vec<usize>> {
        let half = self.spec.size / 2;
        let fits = center.len() == dims.len()
            && center
                .iter()
                .zip(dims)
                .all(|(&c, &n)| c >= half && c - half + self.spec.size <= n);
        if !fits {
            return Err(Error::WindowOutOfBounds {
                center: center.to_vec(),
                size: self.spec.size,
                dims: dims.to_vec(),
            });
        }
        Ok(center.iter().map(|&c| c - half).collect())
    }
}

fn check_pair<T: Real>(a: &Volume<T>, b: &Volume<T>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimMismatch {
            left: a.dims().to_vec(),
            right: b.dims().to_vec(),
        });
    }
    if a.ndim() < 2 {
        return Err(Error::InvalidGrid("local metrics need 2D or 3D volumes".into()));
    }
    Ok(())
}

/// κ of the window replaces the caller's κ unless a constant K is set.
fn local_params(p: &InfoParams, w: &WindowSpec, ndim: usize) -> Result<InfoParams> {
    if p.dimensionality != ndim {
        return Err(Error::InvalidParameter(format!(
            "information dimensionality {} does not match {ndim}D volumes",
            p.dimensionality
        )));
    }
    InfoParams::from_kappa(ndim, w.kappa(ndim))?
        .with_clamp_eps(p.clamp_eps)
        .map(|q| q.with_k_override(p.k_override))
}

/// FSC between the windows of `a` and `b` centred at `center` (window
/// occupies `[center - size/2, center - size/2 + size)` on each axis).
pub fn local_fsc<T: Real>(a: &Volume<T>, b: &Volume<T>, center: &[usize], w: &WindowSpec) -> Result<Curve<T>> {
    check_pair(a, b)?;
    let ctx = WindowContext::new(*w, a.ndim(), a.step())?;
    let start = ctx.start_for_center(a.dims(), center)?;
    ctx.local_fsc(a, b, &start)
}

/// Band-integrated, radially weighted information of a single window.
pub fn local_information<T: Real>(
    a: &Volume<T>,
    b: &Volume<T>,
    center: &[usize],
    w: &WindowSpec,
    p: &InfoParams,
    f_lo: f64,
    f_hi: f64,
) -> Result<LocalValue<T>> {
    check_pair(a, b)?;
    let ctx = WindowContext::new(*w, a.ndim(), a.step())?;
    let start = ctx.start_for_center(a.dims(), center)?;
    let lp = local_params(p, w, a.ndim())?;
    let probe = ctx.bins.curve(crate::curve::CurveKind::Fsc, vec![T::zero(); ctx.bins.n_shells()]);
    let shells = band_shells(&probe, f_lo, f_hi)?;
    ctx.local_information(a, b, &start, &lp, &shells)
}

/// Window start positions along one axis and the cell boundaries each
/// window's value is written to. Cells partition `[0, n)`.
fn axis_lattice(n: usize, size: usize, stride: usize) -> Vec<(usize, usize, usize)> {
    let starts: Vec<usize> = (0..).map(|i| i * stride).take_while(|&s| s + size <= n).collect();
    let m = starts.len();
    starts
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let lo = if i == 0 { 0 } else { s + size / 2 - stride / 2 };
            let hi = if i + 1 == m {
                n
            } else {
                starts[i + 1] + size / 2 - stride / 2
            };
            (s, lo, hi)
        })
        .collect()
}

/// Local information density between two half-maps: local FSC, radial
/// weighting with the window's filling degree, integration over
/// `[f_lo, f_hi)` of Nyquist. Each value fills its window's stride cell.
pub fn lid_map<T: Real>(
    a: &Volume<T>,
    b: &Volume<T>,
    w: &WindowSpec,
    p: &InfoParams,
    f_lo: f64,
    f_hi: f64,
) -> Result<InfoMap<T>> {
    check_pair(a, b)?;
    let dims = a.dims().to_vec();
    let ctx = WindowContext::new(*w, dims.len(), a.step())?;
    if dims.iter().any(|&n| n < w.size) {
        return Err(Error::WindowOutOfBounds {
            center: dims.iter().map(|&n| n / 2).collect(),
            size: w.size,
            dims: dims.clone(),
        });
    }
    let lp = local_params(p, w, dims.len())?;
    let probe = ctx.bins.curve(crate::curve::CurveKind::Fsc, vec![T::zero(); ctx.bins.n_shells()]);
    let shells = band_shells(&probe, f_lo, f_hi)?;

    let lattices: Vec<_> = dims.iter().map(|&n| axis_lattice(n, w.size, w.stride)).collect();
    let lens: Vec<usize> = lattices.iter().map(|l| l.len()).collect();
    let total: usize = lens.iter().product();
    let results: Vec<Result<LocalValue<T>>> = (0..total)
        .into_par_iter()
        .map(|wi| {
            let mut li = vec![0usize; lens.len()];
            unravel(wi, &lens, &mut li);
            let start: Vec<usize> = li.iter().enumerate().map(|(a, &i)| lattices[a][i].0).collect();
            ctx.local_information(a, b, &start, &lp, &shells)
        })
        .collect();

    let mut map = InfoMap::unevaluated(&dims, a.step());
    let mut li = vec![0usize; lens.len()];
    let mut coord = vec![0usize; dims.len()];
    for (wi, r) in results.into_iter().enumerate() {
        let lv = r?;
        unravel(wi, &lens, &mut li);
        let ranges: Vec<(usize, usize)> = li.iter().enumerate().map(|(a, &i)| (lattices[a][i].1, lattices[a][i].2)).collect();
        let cell_dims: Vec<usize> = ranges.iter().map(|(lo, hi)| hi - lo).collect();
        let cells: usize = cell_dims.iter().product();
        let state = if lv.saturated {
            CellState::Saturated
        } else {
            CellState::Evaluated
        };
        for c in 0..cells {
            unravel(c, &cell_dims, &mut coord);
            for (x, (lo, _)) in coord.iter_mut().zip(&ranges) {
                *x += lo;
            }
            let idx = ravel(&coord, &dims);
            map.values[idx] = lv.bits;
            map.state[idx] = state;
        }
    }
    Ok(map)
}

/// Local cross-information density between two independently determined
/// maps that have already been resampled, aligned and amplitude-matched.
pub fn lcid_map<T: Real>(
    m1: &Volume<T>,
    m2: &Volume<T>,
    w: &WindowSpec,
    p: &InfoParams,
    f_lo: f64,
    f_hi: f64,
) -> Result<InfoMap<T>> {
    let (s1, s2) = (m1.step().to_f64_lossy(), m2.step().to_f64_lossy());
    if ((s1 - s2) / s1).abs() > STEP_TOLERANCE {
        return Err(Error::GridMismatch(format!(
            "sampling steps {s1} and {s2} differ by more than {}%",
            STEP_TOLERANCE * 100.0
        )));
    }
    check_pair(m1, m2)?;
    lid_map(m1, m2, w, p, f_lo, f_hi)
}
