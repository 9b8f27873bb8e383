//! One-dimensional packet information content: cross-correlation
//! coefficients computed in real and Fourier space, the packet information
//! content (PIC) derived from them, packet averaging, and estimators for the
//! bandwidth `B` and support length `L` of a packet.

use num_complex::Complex;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::grid::fft_nd;
use crate::info::{fisher_bits, DEFAULT_CLAMP_EPS};
use crate::scalar::Real;

pub const MIN_PACKET_LEN: usize = 8;

/// A finite 1D measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet<T> {
    samples: Vec<T>,
    sample_step: T,
    /// Physical length of the signal-carrying region.
    pub support_l: Option<T>,
    /// Bandwidth in units of `1/sample_step`.
    pub bandwidth_b: Option<T>,
}

impl<T: Real> Packet<T> {
    pub fn new(samples: Vec<T>, sample_step: T) -> Result<Self> {
        if samples.len() < MIN_PACKET_LEN {
            return Err(Error::InvalidParameter(format!(
                "packet needs at least {MIN_PACKET_LEN} samples, got {}",
                samples.len()
            )));
        }
        if !(sample_step > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "sample step must be positive, got {sample_step}"
            )));
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_step,
            support_l: None,
            bandwidth_b: None,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample_step(&self) -> T {
        self.sample_step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Physical duration `len * step`.
    pub fn extent(&self) -> T {
        T::of_usize(self.samples.len()) * self.sample_step
    }
}

/// Whether the correlation sums are taken about zero (as printed) or about
/// each packet's mean (Pearson).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CccMode {
    #[default]
    Literal,
    Centered,
}

/// A correlation coefficient with a flag for zero-energy input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation<T> {
    pub value: T,
    /// At least one input had zero energy; `value` is 0.
    pub degenerate: bool,
    /// Imaginary part of the Fourier-space numerator relative to the
    /// denominator (zero for the real-space route).
    pub imaginary_residual: T,
}

/// Packet information content in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pic<T> {
    pub bits: T,
    pub correlation: T,
    pub saturated: bool,
}

fn check_lengths<T: Real>(x1: &Packet<T>, x2: &Packet<T>) -> Result<()> {
    if x1.len() != x2.len() {
        return Err(Error::LengthMismatch {
            left: x1.len(),
            right: x2.len(),
        });
    }
    Ok(())
}

fn prepared<T: Real>(p: &Packet<T>, mode: CccMode) -> Vec<T> {
    match mode {
        CccMode::Literal => p.samples.clone(),
        CccMode::Centered => {
            let mean = p.samples.iter().copied().sum::<T>() / T::of_usize(p.len());
            p.samples.iter().map(|&x| x - mean).collect()
        }
    }
}

/// Real-space cross-correlation coefficient `Σx₁x₂ / sqrt(Σx₁² Σx₂²)`.
pub fn ccc_real<T: Real>(x1: &Packet<T>, x2: &Packet<T>, mode: CccMode) -> Result<Correlation<T>> {
    check_lengths(x1, x2)?;
    let (a, b) = (prepared(x1, mode), prepared(x2, mode));
    let mut num = T::zero();
    let mut ea = T::zero();
    let mut eb = T::zero();
    for (&u, &v) in a.iter().zip(&b) {
        num += u * v;
        ea += u * u;
        eb += v * v;
    }
    Ok(finish(num, T::zero(), ea, eb))
}

/// Fourier-space coefficient: real part of `Σ F₁ F₂* / sqrt(Σ|F₁|² Σ|F₂|²)`
/// over the full transform.
pub fn ccc_fourier<T: Real>(x1: &Packet<T>, x2: &Packet<T>, mode: CccMode) -> Result<Correlation<T>> {
    check_lengths(x1, x2)?;
    let fa = spectrum_of(&prepared(x1, mode));
    let fb = spectrum_of(&prepared(x2, mode));
    let mut num = Complex::new(T::zero(), T::zero());
    let mut ea = T::zero();
    let mut eb = T::zero();
    for (u, v) in fa.iter().zip(&fb) {
        num += u * v.conj();
        ea += u.norm_sqr();
        eb += v.norm_sqr();
    }
    Ok(finish(num.re, num.im, ea, eb))
}

fn finish<T: Real>(num: T, num_im: T, ea: T, eb: T) -> Correlation<T> {
    if ea == T::zero() || eb == T::zero() {
        return Correlation {
            value: T::zero(),
            degenerate: true,
            imaginary_residual: T::zero(),
        };
    }
    let den = (ea * eb).sqrt();
    Correlation {
        value: (num / den).max(-T::one()).min(T::one()),
        degenerate: false,
        imaginary_residual: num_im / den,
    }
}

fn spectrum_of<T: Real>(x: &[T]) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    fft_nd(&mut buf, &[x.len()], FftDirection::Forward);
    buf
}

fn pic_from<T: Real>(c: Correlation<T>, scale: T, eps: T) -> Pic<T> {
    let (bits, saturated) = fisher_bits(c.value, eps);
    Pic {
        bits: scale * bits,
        correlation: c.value,
        saturated,
    }
}

fn positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Real-space PIC: `B log2((1+c)/(1-c))` with `c = ccc_real`.
pub fn pic_real<T: Real>(x1: &Packet<T>, x2: &Packet<T>, bandwidth: T, mode: CccMode) -> Result<Pic<T>> {
    positive("bandwidth B", bandwidth)?;
    Ok(pic_from(ccc_real(x1, x2, mode)?, bandwidth, T::of(DEFAULT_CLAMP_EPS)))
}

/// Fourier-space PIC: `L log2((1+c)/(1-c))` with `c = ccc_fourier`.
pub fn pic_fourier<T: Real>(x1: &Packet<T>, x2: &Packet<T>, length: T, mode: CccMode) -> Result<Pic<T>> {
    positive("support length L", length)?;
    Ok(pic_from(ccc_fourier(x1, x2, mode)?, length, T::of(DEFAULT_CLAMP_EPS)))
}

/// Element-wise mean of packets of equal length and step.
pub fn average_packets<T: Real>(ps: &[Packet<T>]) -> Result<Packet<T>> {
    let first = ps
        .first()
        .ok_or_else(|| Error::InvalidParameter("no packets to average".into()))?;
    let mut acc = vec![T::zero(); first.len()];
    for p in ps {
        check_lengths(first, p)?;
        if p.sample_step != first.sample_step {
            return Err(Error::GridMismatch(format!(
                "sample steps differ: {} vs {}",
                first.sample_step, p.sample_step
            )));
        }
        for (a, &x) in acc.iter_mut().zip(&p.samples) {
            *a += x;
        }
    }
    let m = T::of_usize(ps.len());
    let mut out = Packet::new(acc.into_iter().map(|v| v / m).collect(), first.sample_step)?;
    out.support_l = first.support_l;
    out.bandwidth_b = first.bandwidth_b;
    Ok(out)
}

/// Estimated bandwidth with a flag set when all power sits at DC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth<T> {
    pub bandwidth: T,
    pub dc_only: bool,
}

/// Smallest frequency below which `power_frac` of the non-DC power lies.
pub fn estimate_bandwidth<T: Real>(p: &Packet<T>, power_frac: f64) -> Result<Bandwidth<T>> {
    if !(power_frac > 0.0 && power_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "power fraction must lie in (0, 1], got {power_frac}"
        )));
    }
    if p.samples.iter().all(|&x| x == T::zero()) {
        return Err(Error::ZeroInput);
    }
    let n = p.len();
    let f = spectrum_of(&p.samples);
    // One-sided power: fold +k and -k together.
    let half = n / 2;
    let mut power = vec![T::zero(); half + 1];
    for (i, c) in f.iter().enumerate().skip(1) {
        let k = if i <= half { i } else { n - i };
        power[k] += c.norm_sqr();
    }
    let total: T = power.iter().copied().sum();
    let dc = f[0].norm_sqr();
    if total <= dc * T::of(1e-24) || total == T::zero() {
        return Ok(Bandwidth {
            bandwidth: T::zero(),
            dc_only: true,
        });
    }
    let target = total * T::of(power_frac);
    let df = T::one() / (T::of_usize(n) * p.sample_step);
    let mut cum = T::zero();
    for (k, &pw) in power.iter().enumerate().skip(1) {
        cum += pw;
        if cum >= target * (T::one() - T::of(1e-12)) {
            return Ok(Bandwidth {
                bandwidth: T::of_usize(k) * df,
                dc_only: false,
            });
        }
    }
    Ok(Bandwidth {
        bandwidth: T::of_usize(half) * df,
        dc_only: false,
    })
}

/// Physical length of the shortest contiguous region holding `var_frac` of
/// the packet's variance about its mean.
pub fn estimate_support<T: Real>(p: &Packet<T>, var_frac: f64) -> Result<T> {
    if !(var_frac > 0.0 && var_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "variance fraction must lie in (0, 1], got {var_frac}"
        )));
    }
    let n = p.len();
    let mean = p.samples.iter().copied().sum::<T>() / T::of_usize(n);
    let energy: Vec<T> = p.samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let total: T = energy.iter().copied().sum();
    if total == T::zero() {
        return Err(Error::ZeroInput);
    }
    let target = total * T::of(var_frac) * (T::one() - T::of(1e-12));
    let mut best = n;
    let mut lo = 0;
    let mut sum = T::zero();
    for hi in 0..n {
        sum += energy[hi];
        while lo <= hi && sum - energy[lo] >= target {
            sum -= energy[lo];
            lo += 1;
        }
        if sum >= target {
            best = best.min(hi - lo + 1);
        }
    }
    Ok(T::of_usize(best) * p.sample_step)
}

/// Channel throughput in bits per second: PIC times packet rate.
pub fn channel_throughput<T: Real>(pic_bits: T, packets_per_second: T) -> Result<T> {
    if packets_per_second < T::zero() || !packets_per_second.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "packet rate must be non-negative, got {packets_per_second}"
        )));
    }
    Ok(pic_bits * packets_per_second)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(v: Vec<f64>) -> Packet<f64> {
        Packet::new(v, 1.0).unwrap()
    }

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect()
    }

    #[test]
    fn construction_rules() {
        assert!(Packet::new(vec![0.0f64; 7], 1.0).is_err());
        assert!(Packet::new(vec![0.0f64; 8], 0.0).is_err());
        assert!(Packet::new(vec![f64::NAN; 8], 1.0).is_err());
    }

    #[test]
    fn self_and_negated() {
        let x = packet(ramp(64));
        let neg = packet(ramp(64).into_iter().map(|v| -v).collect());
        for mode in [CccMode::Literal, CccMode::Centered] {
            assert!((ccc_real(&x, &x, mode).unwrap().value - 1.0).abs() < 1e-12);
            assert!((ccc_real(&x, &neg, mode).unwrap().value + 1.0).abs() < 1e-12);
            assert!((ccc_fourier(&x, &x, mode).unwrap().value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_packet_is_degenerate() {
        let z = packet(vec![0.0; 16]);
        let x = packet(ramp(16));
        let c = ccc_real(&z, &x, CccMode::Literal).unwrap();
        assert!(c.degenerate && c.value == 0.0);
        assert!(ccc_fourier(&z, &x, CccMode::Literal).unwrap().degenerate);
    }

    #[test]
    fn length_mismatch() {
        assert!(ccc_real(&packet(ramp(16)), &packet(ramp(17)), CccMode::Literal).is_err());
        assert!(average_packets(&[packet(ramp(16)), packet(ramp(17))]).is_err());
    }

    #[test]
    fn pic_values() {
        let x = packet(ramp(32));
        let pic = pic_real(&x, &x, 2.0, CccMode::Literal).unwrap();
        assert!(pic.saturated);
        assert!(pic_real(&x, &x, 0.0, CccMode::Literal).is_err());
        assert!(pic_fourier(&x, &x, -1.0, CccMode::Literal).is_err());
    }

    #[test]
    fn averaging_single_packet_is_identity() {
        let x = packet(ramp(32));
        assert_eq!(average_packets(std::slice::from_ref(&x)).unwrap().samples(), x.samples());
    }

    #[test]
    fn bandwidth_of_cosine() {
        let n = 256;
        let f0_bin = 19;
        let step = 0.5;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * f0_bin as f64 * i as f64 / n as f64).cos())
            .collect();
        let p = Packet::new(x, step).unwrap();
        let b = estimate_bandwidth(&p, 0.99).unwrap();
        let f0 = f0_bin as f64 / (n as f64 * step);
        let df = 1.0 / (n as f64 * step);
        assert!((b.bandwidth - f0).abs() <= df + 1e-12);
        assert!(!b.dc_only);
    }

    #[test]
    fn bandwidth_of_dc_and_zero() {
        let b = estimate_bandwidth(&packet(vec![3.0; 32]), 0.99).unwrap();
        assert!(b.dc_only && b.bandwidth == 0.0);
        assert_eq!(estimate_bandwidth(&packet(vec![0.0; 32]), 0.99), Err(Error::ZeroInput));
    }

    #[test]
    fn support_of_localised_burst() {
        let mut x = vec![0.0f64; 100];
        for (i, v) in x.iter_mut().enumerate().skip(40).take(10) {
            *v = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let p = Packet::new(x, 0.1).unwrap();
        let l = estimate_support(&p, 0.99).unwrap();
        assert!((l - 1.0).abs() < 0.35, "support {l}");
    }

    #[test]
    fn throughput() {
        assert_eq!(channel_throughput(7.64f64, 0.0).unwrap(), 0.0);
        assert!((channel_throughput(7.64f64, 100.0).unwrap() - 764.0).abs() < 1e-9);
        assert!(channel_throughput(-2.0f64, 10.0).unwrap() < 0.0);
        assert!(channel_throughput(1.0f64, -1.0).is_err());
    }
}
