//! Transducer information efficiency: FRI_r accumulated over repeated
//! measurement pairs, output/input and output/output quotients, and upper
//! envelopes of oscillating curves.

use rayon::prelude::*;

use crate::curve::{Curve, CurveKind, ShellFlags};
use crate::error::{Error, Result};
use crate::grid::{forward_transform, radial_bins, Volume};
use crate::info::{weighted_information, InfoParams};
use crate::metrics::fsc;
use crate::scalar::Real;

/// Input information (bits) below which a quotient is left undefined.
pub const DEFAULT_INFO_FLOOR: f64 = 0.01;
/// Default envelope window, in shells.
pub const DEFAULT_ENVELOPE_WINDOW: usize = 5;
/// Accumulation grid: per-pair values are rounded to multiples of
/// `2^-QUANT_BITS` bits and summed as integers, so the total does not depend
/// on how a series is split or ordered.
const QUANT_BITS: i32 = 16;

/// Repeated image pairs of one test sample under identical conditions.
#[derive(Debug, Clone)]
pub struct MeasurementSeries<T> {
    pairs: Vec<(Volume<T>, Volume<T>)>,
    step: T,
}

impl<T: Real> MeasurementSeries<T> {
    pub fn new(pairs: Vec<(Volume<T>, Volume<T>)>, step: T) -> Result<Self> {
        let first = pairs
            .first()
            .ok_or_else(|| Error::InvalidParameter("a measurement series needs at least one pair".into()))?;
        let dims = first.0.dims().to_vec();
        if dims.len() != 2 {
            return Err(Error::InvalidGrid(format!("measurement series expects 2D images, got {}D", dims.len())));
        }
        for (a, b) in &pairs {
            for v in [a, b] {
                if v.dims() != dims.as_slice() {
                    return Err(Error::DimMismatch {
                        left: dims.clone(),
                        right: v.dims().to_vec(),
                    });
                }
                if v.step() != step {
                    return Err(Error::GridMismatch(format!(
                        "image step {} differs from series step {step}",
                        v.step()
                    )));
                }
            }
        }
        Ok(Self { pairs, step })
    }

    pub fn pairs(&self) -> &[(Volume<T>, Volume<T>)] {
        &self.pairs
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Concatenation of two series on the same grid.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut pairs = self.pairs.clone();
        pairs.extend(other.pairs.iter().cloned());
        Self::new(pairs, self.step)
    }
}

/// Sum of the per-pair FRI_r curves.
pub fn accumulate_fri<T: Real>(series: &MeasurementSeries<T>, p: &InfoParams) -> Result<Curve<T>> {
    if p.dimensionality != 2 {
        return Err(Error::InvalidParameter("FRI accumulation uses 2D weighting".into()));
    }
    let dims = series.pairs[0].0.dims().to_vec();
    let bins = radial_bins(&dims, series.step)?;
    let per_pair: Vec<Curve<T>> = series
        .pairs
        .par_iter()
        .map(|(a, b)| {
            let c = fsc(&forward_transform(a)?, &forward_transform(b)?, &bins)?;
            weighted_information(&c, p)
        })
        .collect::<Result<_>>()?;

    let scale = 2f64.powi(QUANT_BITS);
    let n = bins.n_shells();
    let mut sums = vec![0i64; n];
    let mut flags = vec![ShellFlags::none(); n];
    for c in &per_pair {
        for s in 0..n {
            sums[s] += (c.values[s].to_f64_lossy() * scale).round() as i64;
            flags[s].insert(c.flags[s]);
        }
    }
    let values = sums.iter().map(|&q| T::of(q as f64 / scale)).collect();
    let mut out = bins.curve(CurveKind::Fsi, values).with_label("accumulated fri_r");
    out.flags = flags;
    Ok(out)
}

fn quotient<T: Real>(num: &Curve<T>, den: &Curve<T>, floor: f64, label: &str) -> Result<Curve<T>> {
    num.ensure_same_axis(den)?;
    if !(floor >= 0.0) {
        return Err(Error::InvalidParameter(format!("information floor must be >= 0, got {floor}")));
    }
    let mut out = num.derived(CurveKind::Tie, vec![T::zero(); num.n_shells()]);
    out.label = label.into();
    for s in 0..num.n_shells() {
        let d = den.values[s];
        let undefined = !num.is_defined(s) || !den.is_defined(s) || !(d.abs().to_f64_lossy() >= floor) || d == T::zero();
        out.flags[s] = num.flags[s].union(den.flags[s]);
        if undefined {
            out.values[s] = T::nan();
            out.flags[s].insert(ShellFlags::UNDEFINED);
        } else {
            out.values[s] = num.values[s] / d;
        }
    }
    Ok(out)
}

/// TIE: `fri_out / fri_in` per shell; shells with `|fri_in| < floor` are
/// undefined.
pub fn tie<T: Real>(fri_out: &Curve<T>, fri_in: &Curve<T>) -> Result<Curve<T>> {
    tie_with_floor(fri_out, fri_in, DEFAULT_INFO_FLOOR)
}

pub fn tie_with_floor<T: Real>(fri_out: &Curve<T>, fri_in: &Curve<T>, floor: f64) -> Result<Curve<T>> {
    quotient(fri_out, fri_in, floor, "tie")
}

/// Relative TIE of two transducers measured on the same input:
/// `fri_out1 / fri_out2`.
pub fn relative_tie<T: Real>(fri_out1: &Curve<T>, fri_out2: &Curve<T>) -> Result<Curve<T>> {
    relative_tie_with_floor(fri_out1, fri_out2, DEFAULT_INFO_FLOOR)
}

pub fn relative_tie_with_floor<T: Real>(fri_out1: &Curve<T>, fri_out2: &Curve<T>, floor: f64) -> Result<Curve<T>> {
    quotient(fri_out1, fri_out2, floor, "relative tie")
}

/// Upper envelope: shells equal to the running maximum over a centred
/// window are taken as local maxima, joined by straight lines, and the
/// envelope is the larger of that line and the curve. Before the first and
/// after the last maximum the envelope follows the curve.
pub fn envelope<T: Real>(c: &Curve<T>, window_shells: usize) -> Result<Curve<T>> {
    if window_shells < 3 {
        return Err(Error::InvalidParameter(format!(
            "envelope window must be >= 3 shells, got {window_shells}"
        )));
    }
    let n = c.n_shells();
    let v: Vec<f64> = c.values.iter().map(|x| x.to_f64_lossy()).collect();
    let ok = |i: usize| c.is_defined(i) && v[i].is_finite();
    let half = window_shells / 2;
    let maxima: Vec<usize> = (0..n)
        .filter(|&i| {
            ok(i) && {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(n - 1);
                (lo..=hi).filter(|&j| ok(j)).all(|j| v[j] <= v[i])
            }
        })
        .collect();
    let mut out = c.derived(CurveKind::Other, c.values.clone());
    out.label = format!("{} envelope", c.label);
    out.flags = c.flags.clone();
    for pair in maxima.windows(2) {
        let (i0, i1) = (pair[0], pair[1]);
        for j in i0..=i1 {
            if !ok(j) {
                continue;
            }
            let t = (j - i0) as f64 / (i1 - i0) as f64;
            let line = v[i0] + t * (v[i1] - v[i0]);
            out.values[j] = T::of(line.max(v[j]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn image(seed: u64) -> Volume<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Volume::from_fn(&[32, 32], 1.0, |_| StandardNormal.sample(&mut rng)).unwrap()
    }

    fn curve(values: Vec<f64>) -> Curve<f64> {
        let n = values.len();
        let freq = (0..n).map(|i| i as f64 / (2.0 * (n - 1) as f64)).collect();
        Curve::new(CurveKind::Fsi, values, freq, 0.5).unwrap()
    }

    #[test]
    fn series_validation() {
        assert!(MeasurementSeries::<f64>::new(vec![], 1.0).is_err());
        let a = image(1);
        let b = Volume::<f64>::zeros(&[16, 16], 1.0).unwrap();
        assert!(MeasurementSeries::new(vec![(a.clone(), b)], 1.0).is_err());
        let c = a.clone().with_step(2.0).unwrap();
        assert!(MeasurementSeries::new(vec![(a.clone(), c)], 1.0).is_err());
    }

    #[test]
    fn identical_pair_saturates_and_dc_is_zero() {
        let a = image(2);
        let s = MeasurementSeries::new(vec![(a.clone(), a)], 1.0).unwrap();
        let p = InfoParams::from_kappa(2, 0.25).unwrap();
        let acc = accumulate_fri(&s, &p).unwrap();
        assert_eq!(acc.values[0], 0.0);
        assert!(acc.flags[1..].iter().all(|f| f.contains(ShellFlags::SATURATED)));
    }

    #[test]
    fn concatenation_is_additive() {
        let p = InfoParams::from_kappa(2, 0.25).unwrap();
        let mk = |s: u64| {
            let a = image(s);
            let b = a.zip_with(&image(s + 100), |x, y| x + 0.7 * y).unwrap();
            (a, b)
        };
        let s1 = MeasurementSeries::new(vec![mk(1), mk(2)], 1.0).unwrap();
        let s2 = MeasurementSeries::new(vec![mk(3)], 1.0).unwrap();
        let whole = accumulate_fri(&s1.concat(&s2).unwrap(), &p).unwrap();
        let parts = accumulate_fri(&s1, &p).unwrap().try_add(&accumulate_fri(&s2, &p).unwrap()).unwrap();
        assert_eq!(whole.values, parts.values);
    }

    #[test]
    fn tie_rules() {
        let fin = curve(vec![0.0, 0.005, 2.0, 4.0]);
        let t = tie(&fin, &fin).unwrap();
        assert!(t.values[0].is_nan() && t.flags[0].contains(ShellFlags::UNDEFINED));
        assert!(t.values[1].is_nan());
        assert_eq!(&t.values[2..], &[1.0, 1.0]);
        let dead = curve(vec![0.0; 4]);
        let z = tie(&dead, &fin).unwrap();
        assert_eq!(&z.values[2..], &[0.0, 0.0]);
        let other = Curve::new(CurveKind::Fsi, vec![0.0; 3], vec![0.0, 0.1, 0.2], 0.2).unwrap();
        assert!(tie(&other, &fin).is_err());
    }

    #[test]
    fn relative_tie_reciprocal_and_linear() {
        let a = curve(vec![0.0, 1.0, 3.0, 5.0]);
        let b = curve(vec![0.0, 2.0, 1.5, 0.5]);
        let ab = relative_tie(&a, &b).unwrap();
        let ba = relative_tie(&b, &a).unwrap();
        for s in 1..4 {
            assert!((ab.values[s] * ba.values[s] - 1.0).abs() < 1e-15);
        }
        let g = curve(a.values.iter().map(|x| 2.5 * x).collect());
        let r = relative_tie(&g, &a).unwrap();
        assert!(r.values[1..].iter().all(|&x| (x - 2.5).abs() < 1e-15));
    }

    #[test]
    fn envelope_basic_shapes() {
        let mono = curve((0..20).map(|i| i as f64).collect());
        assert_eq!(envelope(&mono, 5).unwrap().values, mono.values);
        let flat = curve(vec![3.0; 10]);
        assert_eq!(envelope(&flat, 5).unwrap().values, flat.values);
        assert!(envelope(&flat, 2).is_err());
    }

    #[test]
    fn envelope_bounds_oscillation() {
        let n = 200;
        let amp = |i: usize| 1.0 + i as f64 / n as f64;
        let c = curve((0..n).map(|i| amp(i) * (i as f64 * 0.25).sin().abs()).collect());
        let e = envelope(&c, 5).unwrap();
        for i in 0..n {
            assert!(e.values[i] >= c.values[i]);
        }
        for i in 20..n - 20 {
            assert!((e.values[i] - amp(i)).abs() / amp(i) < 0.02, "shell {i}");
        }
    }
}
