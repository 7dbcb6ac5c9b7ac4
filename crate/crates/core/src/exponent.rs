//! Exact rational exponents: norm indices τ ∈ [1, ∞] and criterion powers p ≥ 1.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error};

pub type Rational = Ratio<u64>;

/// Parses `"2"`, `"3/2"` or a terminating decimal such as `"1.5"`.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    let s = s.trim();
    let bad = || invalid(format!("cannot parse {s:?} as a nonnegative rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 12 {
        return Err(bad());
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let mut num = int;
    let mut den = 1u64;
    for c in frac.chars() {
        let digit = c.to_digit(10).ok_or_else(bad)? as u64;
        num = num.checked_mul(10).and_then(|v| v.checked_add(digit)).ok_or_else(bad)?;
        den *= 10;
    }
    Ok(Ratio::new(num, den))
}

pub fn rational_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `x^p` with fast paths for the common integer and half-integer powers.
pub fn pow_rational(x: f64, p: Rational) -> f64 {
    if p.is_integer() {
        match *p.numer() {
            1 => x,
            2 => x * x,
            3 => x * x * x,
            k => x.powi(k as i32),
        }
    } else if *p.denom() == 2 && *p.numer() == 3 {
        x * x.sqrt()
    } else {
        x.powf(rational_f64(p))
    }
}

/// Index of an ℓτ norm, `1 ≤ τ ≤ ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

impl Exponent {
    pub fn new(tau: Rational) -> Result<Self, Error> {
        if tau < Rational::one() {
            return Err(invalid(format!("norm index {tau} is below 1")));
        }
        Ok(Exponent::Finite(tau))
    }

    pub fn integer(k: u64) -> Result<Self, Error> {
        Self::new(Rational::from_integer(k))
    }

    pub fn one() -> Self {
        Exponent::Finite(Rational::one())
    }

    pub fn two() -> Self {
        Exponent::Finite(Rational::from_integer(2))
    }

    /// The Hölder conjugate `ν` with `1/τ + 1/ν = 1`.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::Infinite => Exponent::one(),
            Exponent::Finite(t) if t.is_one() => Exponent::Infinite,
            Exponent::Finite(t) => Exponent::Finite(t / (t - Rational::one())),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Exponent::Finite(t) => rational_f64(t),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn is_one(self) -> bool {
        matches!(self, Exponent::Finite(t) if t.is_one())
    }

    pub fn is_infinite(self) -> bool {
        self == Exponent::Infinite
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => {
                let r = parse_rational(other)?;
                if r.is_zero() {
                    return Err(invalid("norm index 0"));
                }
                Exponent::new(r)
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(t) => write!(f, "{t}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}
