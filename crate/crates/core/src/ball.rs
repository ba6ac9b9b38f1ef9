//! Balls with rational centers and radii.

use std::fmt;

use num_rational::Rational64;
use thiserror::Error;

pub type Rational = Rational64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid rational literal `{0}`")]
    BadRational(String),
    #[error("ball radius must be positive, got {0}")]
    NonPositiveRadius(String),
    #[error("ball center must have at least one coordinate")]
    EmptyCenter,
    #[error("cannot represent {0} as a rational with bounded denominator")]
    Unrepresentable(f64),
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Formats as `p/q`, always with an explicit denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `p`, `p/q`, `-p/q` (surrounding whitespace ignored).
pub fn parse_rational(text: &str) -> Result<Rational, GeometryError> {
    let bad = || GeometryError::BadRational(text.to_string());
    let s = text.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: i64 = num.parse().map_err(|_| bad())?;
    let den: i64 = den.parse().map_err(|_| bad())?;
    if den == 0 {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Best rational approximation with denominator at most 10⁶; exact for the
/// decimal window bounds that appear in problem specs.
pub fn rational_from_f64(x: f64) -> Result<Rational, GeometryError> {
    if !x.is_finite() {
        return Err(GeometryError::Unrepresentable(x));
    }
    const MAX_DEN: i64 = 1_000_000;
    // continued fraction expansion
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            return Err(GeometryError::Unrepresentable(x));
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1).and_then(|t| t.checked_add(h0));
        let k2 = a.checked_mul(k1).and_then(|t| t.checked_add(k0));
        let (Some(h2), Some(k2)) = (h2, k2) else { break };
        if k2 > MAX_DEN {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = v - a as f64;
        if frac.abs() < 1e-12 || (h1 as f64 / k1 as f64 - x).abs() <= f64::EPSILON * x.abs() {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 == 0 {
        return Err(GeometryError::Unrepresentable(x));
    }
    Ok(Rational::new(h1, k1))
}

/// Open Euclidean ball with rational center and radius.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ball {
    center: Vec<Rational>,
    radius: Rational,
}

impl Ball {
    pub fn new(center: Vec<Rational>, radius: Rational) -> Result<Self, GeometryError> {
        if center.is_empty() {
            return Err(GeometryError::EmptyCenter);
        }
        if radius <= Rational::from_integer(0) {
            return Err(GeometryError::NonPositiveRadius(format_rational(&radius)));
        }
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[Rational] {
        &self.center
    }

    pub fn radius(&self) -> Rational {
        self.radius
    }

    pub fn center_f64(&self) -> Vec<f64> {
        self.center.iter().map(rational_to_f64).collect()
    }

    pub fn radius_f64(&self) -> f64 {
        rational_to_f64(&self.radius)
    }

    /// Same center, twice the radius.
    pub fn doubled(&self) -> Ball {
        Ball {
            center: self.center.clone(),
            radius: self.radius * 2,
        }
    }

    pub fn dist_sq(&self, p: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(p)
            .map(|(c, x)| {
                let d = x - rational_to_f64(c);
                d * d
            })
            .sum()
    }

    /// Strict (open ball) membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        let r = self.radius_f64();
        self.dist_sq(p) < r * r
    }

    /// Whether the closure of `inner` lies inside this open ball, up to
    /// floating point evaluation of the center distance.
    pub fn contains_ball(&self, inner: &Ball) -> bool {
        let d = self.dist_sq(&inner.center_f64()).sqrt();
        d + inner.radius_f64() < self.radius_f64()
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.center.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", format_rational(c))?;
        }
        write!(f, "],{}", format_rational(&self.radius))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_text_round_trip() {
        let r = parse_rational(" -3/12 ").unwrap();
        assert_eq!(r, Rational::new(-1, 4));
        assert_eq!(format_rational(&r), "-1/4");
        assert_eq!(parse_rational("7").unwrap(), Rational::from_integer(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn decimal_bounds_become_small_rationals() {
        assert_eq!(rational_from_f64(-1.0).unwrap(), Rational::from_integer(-1));
        assert_eq!(rational_from_f64(0.1).unwrap(), Rational::new(1, 10));
        assert_eq!(rational_from_f64(2.5).unwrap(), Rational::new(5, 2));
        assert!(rational_from_f64(f64::NAN).is_err());
    }

    #[test]
    fn doubling_is_exact_and_membership_is_strict() {
        let b = Ball::new(vec![Rational::new(1, 3)], Rational::new(1, 7)).unwrap();
        assert_eq!(b.doubled().radius(), Rational::new(2, 7));
        assert!(b.contains(&[1.0 / 3.0]));
        assert!(!b.contains(&[1.0 / 3.0 + 1.0 / 7.0 + 1e-12]));
        let unit = Ball::new(vec![Rational::from_integer(0)], Rational::from_integer(1)).unwrap();
        assert!(!unit.contains(&[1.0]));
        assert!(!unit.contains(&[-1.0]));
        assert!(Ball::new(vec![Rational::from_integer(0)], Rational::from_integer(0)).is_err());
    }
}
