//! Per-shell curves (FSC, information, thresholds, power profiles).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// What a curve's values represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Fsc,
    Fsi,
    Threshold,
    Power,
    Tie,
    Other,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Fsc => "fsc",
            CurveKind::Fsi => "fsi",
            CurveKind::Threshold => "threshold",
            CurveKind::Power => "power",
            CurveKind::Tie => "tie",
            CurveKind::Other => "other",
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fsc" => CurveKind::Fsc,
            "fsi" => CurveKind::Fsi,
            "threshold" => CurveKind::Threshold,
            "power" => CurveKind::Power,
            "tie" => CurveKind::Tie,
            "other" => CurveKind::Other,
            _ => return Err(Error::InvalidParameter(format!("unknown curve kind {s:?}"))),
        })
    }
}

/// Per-shell annotations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShellFlags(u8);

impl ShellFlags {
    /// A denominator term was zero (masked or empty shell).
    pub const EMPTY: ShellFlags = ShellFlags(1);
    /// Correlation hit the clamp ceiling; information value is capped.
    pub const SATURATED: ShellFlags = ShellFlags(1 << 1);
    /// Value not defined (quotient with near-zero denominator).
    pub const UNDEFINED: ShellFlags = ShellFlags(1 << 2);
    /// Shell carried no power and was left untouched.
    pub const ZERO_POWER: ShellFlags = ShellFlags(1 << 3);

    const NAMES: [(ShellFlags, &'static str); 4] = [
        (Self::EMPTY, "empty"),
        (Self::SATURATED, "saturated"),
        (Self::UNDEFINED, "undefined"),
        (Self::ZERO_POWER, "zero_power"),
    ];

    pub const fn none() -> Self {
        ShellFlags(0)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, other: ShellFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: ShellFlags) {
        self.0 |= other.0;
    }

    pub fn union(self, other: ShellFlags) -> Self {
        ShellFlags(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for ShellFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        let mut first = true;
        for (flag, name) in Self::NAMES {
            if self.contains(flag) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl FromStr for ShellFlags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(ShellFlags::none());
        }
        let mut out = ShellFlags::none();
        for part in s.split('|') {
            let flag = Self::NAMES
                .iter()
                .find(|(_, n)| *n == part)
                .map(|(f, _)| *f)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown shell flag {part:?}")))?;
            out.insert(flag);
        }
        Ok(out)
    }
}

/// Values on a shell axis. Shells flagged [`ShellFlags::UNDEFINED`] hold NaN;
/// every other value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve<T> {
    pub kind: CurveKind,
    pub label: String,
    pub values: Vec<T>,
    /// Absolute frequency of each shell centre.
    pub freq: Vec<T>,
    /// Nyquist frequency in the same units as `freq`.
    pub nyquist: T,
    pub flags: Vec<ShellFlags>,
}

impl<T: Real> Curve<T> {
    pub fn new(kind: CurveKind, values: Vec<T>, freq: Vec<T>, nyquist: T) -> Result<Self> {
        if values.len() != freq.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: freq.len(),
            });
        }
        let n = values.len();
        Ok(Self {
            kind,
            label: kind.as_str().to_string(),
            values,
            freq,
            nyquist,
            flags: vec![ShellFlags::none(); n],
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn n_shells(&self) -> usize {
        self.values.len()
    }

    /// Frequency of `shell` as a fraction of Nyquist.
    pub fn fraction_of_nyquist(&self, shell: usize) -> T {
        self.freq[shell] / self.nyquist
    }

    /// Same values on a curve with identical axis but a new kind.
    pub fn derived(&self, kind: CurveKind, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            kind,
            label: kind.as_str().to_string(),
            values,
            freq: self.freq.clone(),
            nyquist: self.nyquist,
            flags: vec![ShellFlags::none(); self.freq.len()],
        }
    }

    pub fn is_defined(&self, shell: usize) -> bool {
        !self.flags[shell].contains(ShellFlags::UNDEFINED)
    }

    /// Errors unless both curves share one shell axis.
    pub fn ensure_same_axis(&self, other: &Self) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(Error::LengthMismatch {
                left: self.values.len(),
                right: other.values.len(),
            });
        }
        let tol = T::of(1e-9);
        let same = self
            .freq
            .iter()
            .zip(&other.freq)
            .all(|(&a, &b)| (a - b).abs() <= tol * a.abs().max(b.abs()).max(T::one()));
        if !same {
            return Err(Error::GridMismatch(
                "curves are sampled on different frequency axes".into(),
            ));
        }
        Ok(())
    }

    /// Shell-wise sum; flags are merged.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.ensure_same_axis(other)?;
        let mut out = self.clone();
        for i in 0..out.values.len() {
            out.values[i] = self.values[i] + other.values[i];
            out.flags[i] = self.flags[i].union(other.flags[i]);
        }
        Ok(out)
    }
}
