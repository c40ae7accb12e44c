//! Exact, non-negative time values.
//!
//! Durations are exact rationals. Task-set files usually hold decimal
//! literals, which render back as decimals; other values use `p/q`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedDiv, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// A duration or point in time measured in (possibly fractional) time units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(Ratio<i64>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimeParseError {
    #[error("empty duration")]
    Empty,
    #[error("invalid duration literal `{0}`")]
    Invalid(String),
    #[error("duration `{0}` has too many digits")]
    Overflow(String),
}

impl Time {
    pub const ZERO: Time = Time(Ratio::new_raw(0, 1));

    pub fn from_units(units: u32) -> Self {
        Time(Ratio::from_integer(i64::from(units)))
    }

    /// `numer / denom` time units. Panics if `denom` is zero.
    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        let r = Ratio::new(numer, denom);
        assert!(r >= Ratio::zero(), "time values are non-negative");
        Time(r)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Difference clamped at zero.
    pub fn saturating_sub(self, rhs: Time) -> Time {
        if rhs >= self {
            Time::ZERO
        } else {
            Time(self.0 - rhs.0)
        }
    }
}

impl FromStr for Time {
    type Err = TimeParseError;

    /// Parses `12`, `2.5`, `.5` or a quotient such as `1/3`. Signs and
    /// exponents are rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(TimeParseError::Empty);
        }
        if let Some((n, d)) = s.split_once('/') {
            let (n, d): (Time, Time) = (n.parse()?, d.parse()?);
            if d.is_zero() || s.matches('/').count() > 1 {
                return Err(TimeParseError::Invalid(s.to_string()));
            }
            return n
                .0
                .checked_div(&d.0)
                .map(Time)
                .ok_or_else(|| TimeParseError::Overflow(s.to_string()));
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((a, b)) => (a, b),
            None => (s, ""),
        };
        let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !digits_ok(int_part) || !digits_ok(frac_part) || (int_part.is_empty() && frac_part.is_empty()) {
            return Err(TimeParseError::Invalid(s.to_string()));
        }
        if s.ends_with('.') {
            return Err(TimeParseError::Invalid(s.to_string()));
        }
        let overflow = || TimeParseError::Overflow(s.to_string());
        let mut numer: i64 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            numer = numer
                .checked_mul(10)
                .and_then(|n| n.checked_add(i64::from(b - b'0')))
                .ok_or_else(overflow)?;
        }
        let denom = 10i64
            .checked_pow(u32::try_from(frac_part.len()).map_err(|_| overflow())?)
            .ok_or_else(overflow)?;
        Ok(Time(Ratio::new(numer, denom)))
    }
}

/// Exact decimal rendering when the denominator has only factors 2 and 5,
/// `p/q` otherwise.
impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let numer = *self.0.numer();
        let denom = *self.0.denom();
        if denom == 1 {
            return write!(f, "{numer}");
        }
        let mut d = denom;
        let (mut twos, mut fives) = (0u32, 0u32);
        while d % 2 == 0 {
            d /= 2;
            twos += 1;
        }
        while d % 5 == 0 {
            d /= 5;
            fives += 1;
        }
        if d != 1 {
            return write!(f, "{numer}/{denom}");
        }
        let places = twos.max(fives);
        let scale = 10i128.pow(places);
        let scaled = i128::from(numer) * (scale / i128::from(denom));
        let int = scaled / scale;
        let frac = scaled % scale;
        let frac = format!("{:0width$}", frac, width = places as usize);
        write!(f, "{int}.{}", frac.trim_end_matches('0'))
    }
}

/// Integers serialize as JSON integers, everything else as a float.
impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_integer() {
            serializer.serialize_i64(self.numer())
        } else {
            serializer.serialize_f64(self.to_f64())
        }
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl AddAssign for Time {
    fn add_assign(&mut self, rhs: Time) {
        self.0 += rhs.0;
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        debug_assert!(self >= rhs, "negative time: {self} - {rhs}");
        Time(self.0 - rhs.0)
    }
}

impl SubAssign for Time {
    fn sub_assign(&mut self, rhs: Time) {
        *self = *self - rhs;
    }
}

impl Sum for Time {
    fn sum<I: Iterator<Item = Time>>(iter: I) -> Time {
        iter.fold(Time::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Time> for Time {
    fn sum<I: Iterator<Item = &'a Time>>(iter: I) -> Time {
        iter.copied().sum()
    }
}

impl From<u32> for Time {
    fn from(units: u32) -> Self {
        Time::from_units(units)
    }
}
