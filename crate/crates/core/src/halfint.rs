use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-negative or signed half-integer stored as twice its value, so that
/// spin labels `j` and magnetic numbers `m` are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt {
    twice: i64,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };
    pub const ONE: HalfInt = HalfInt { twice: 2 };

    pub const fn from_twice(twice: i64) -> Self {
        HalfInt { twice }
    }

    pub const fn integer(n: i64) -> Self {
        HalfInt { twice: 2 * n }
    }

    /// Spin of `n` spin-1/2 particles in the fully symmetric block.
    pub fn from_particles(n: usize) -> Self {
        HalfInt { twice: n as i64 }
    }

    /// Accepts only exact multiples of 1/2.
    pub fn from_f64(value: f64) -> Result<Self> {
        let twice = 2.0 * value;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpin(format!(
                "{value} is not a multiple of 1/2"
            )));
        }
        Ok(HalfInt {
            twice: twice.round() as i64,
        })
    }

    pub const fn twice(self) -> i64 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// `2j + 1`; only meaningful for `j >= 0`.
    pub fn dim(self) -> usize {
        debug_assert!(self.twice >= 0);
        (self.twice + 1) as usize
    }

    /// Magnetic numbers `j, j-1, ..., -j`, the basis order used everywhere.
    pub fn m_values(self) -> impl DoubleEndedIterator<Item = HalfInt> {
        let twice = self.twice;
        (0..=twice.max(-1)).map(move |k| HalfInt {
            twice: twice - 2 * k,
        })
    }

    /// Spin blocks `J, J-1, ..., 0 or 1/2` contained in `2J` spin-1/2 particles.
    pub fn blocks(self) -> impl Iterator<Item = HalfInt> {
        let twice = self.twice;
        (0..=twice / 2).map(move |k| HalfInt {
            twice: twice - 2 * k,
        })
    }
}

impl From<i64> for HalfInt {
    fn from(n: i64) -> Self {
        HalfInt::integer(n)
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt {
            twice: self.twice + rhs.twice,
        }
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt {
            twice: self.twice - rhs.twice,
        }
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    /// Parses `"3"`, `"3/2"` or `"1.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSpin(s.to_string()))?;
            match den.trim() {
                "1" => Ok(HalfInt::integer(num)),
                "2" => Ok(HalfInt::from_twice(num)),
                _ => Err(Error::InvalidSpin(s.to_string())),
            }
        } else {
            let v: f64 = s.parse().map_err(|_| Error::InvalidSpin(s.to_string()))?;
            HalfInt::from_f64(v)
        }
    }
}
