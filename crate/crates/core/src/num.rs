//! Exact rational arithmetic for density comparisons, plus the frozen
//! integer thresholds used for irrational bounds of the form `alpha^{1/k} * m`.
//!
//! Density and degree comparisons are done with exact rationals so that ties
//! are decided consistently. Fractional powers have no exact representation;
//! they are evaluated in floating point once and frozen into integer counts
//! with a fixed tolerance, so that every later comparison in a run agrees.

use crate::error::{Error, Result};

pub type Ratio = num_rational::Ratio<i64>;

pub fn ratio(numer: i64, denom: i64) -> Ratio {
    Ratio::new(numer, denom)
}

pub fn ratio_to_f64(r: Ratio) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Tolerance applied before freezing a floating-point bound into a count.
const FREEZE_TOL: f64 = 1e-9;

/// Smallest integer count `c` with `c >= x`, up to the freeze tolerance.
pub fn count_at_least(x: f64) -> usize {
    let c = (x - FREEZE_TOL).ceil();
    if c <= 0.0 {
        0
    } else {
        c as usize
    }
}

/// Smallest integer count `c` with `c > x`, up to the freeze tolerance.
pub fn count_exceeding(x: f64) -> usize {
    let f = (x + FREEZE_TOL).floor();
    if f < 0.0 {
        0
    } else {
        f as usize + 1
    }
}

/// `r^{1/k}` as a float, for thresholds like `alpha^{1/14}`.
pub fn root_frac(r: Ratio, k: u32) -> f64 {
    ratio_to_f64(r).powf(1.0 / k as f64)
}

/// Parses a rational from either `p/q` or a decimal literal such as `0.2`.
pub fn parse_ratio(s: &str) -> Result<Ratio> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let numer: i64 = p
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("bad rational numerator '{p}'")))?;
        let denom: i64 = q
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("bad rational denominator '{q}'")))?;
        if denom == 0 {
            return Err(Error::parse("zero denominator"));
        }
        return Ok(Ratio::new(numer, denom));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int_part: i64 = if int.is_empty() {
            0
        } else {
            int.parse()
                .map_err(|_| Error::parse(format!("bad decimal '{s}'")))?
        };
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::parse(format!("bad decimal '{s}'")));
        }
        let denom = 10i64.pow(frac.len() as u32);
        let frac_part: i64 = frac.parse().unwrap();
        let sign = if s.trim_start().starts_with('-') {
            -1
        } else {
            1
        };
        return Ok(Ratio::new(int_part.abs(), 1) * sign + Ratio::new(sign * frac_part, denom));
    }
    let v: i64 = s
        .parse()
        .map_err(|_| Error::parse(format!("bad rational '{s}'")))?;
    Ok(Ratio::from_integer(v))
}

/// Renders a rational compactly (`3/7`, or `4` when integral).
pub fn ratio_string(r: Ratio) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
