//! Peak-shifted Soboleva-style hyperbolic tangent.
//!
//! The base function is `f(u) = (e^u - e^-u) / (e^{cu} + e^{-du})`. For `c > 1`
//! it rises from its negative-side asymptote, peaks at a single `u* > 0` and
//! decays back to zero. `usmht` evaluates `f(r·x + u*)`, which moves the peak
//! to `x = 0`.

use std::collections::HashMap;
use std::sync::{LazyLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// `r = +1`
    Forward,
    /// `r = -1`
    Reverse,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        }
    }
}

static SHIFT_CACHE: LazyLock<RwLock<HashMap<(u64, u64), f64>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

/// Location of the maximum of the base function for curvatures `(c, d)`.
///
/// Results are cached per `(c, d)`.
pub fn smht_shift(c: f64, d: f64) -> Result<f64> {
    check_curvatures(c, d)?;
    let key = (c.to_bits(), d.to_bits());
    if let Some(&shift) = SHIFT_CACHE.read().expect("shift cache poisoned").get(&key) {
        return Ok(shift);
    }
    let shift = solve_shift(c, d)?;
    SHIFT_CACHE
        .write()
        .expect("shift cache poisoned")
        .entry(key)
        .or_insert(shift);
    Ok(shift)
}

fn check_curvatures(c: f64, d: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid("c", format!("curvature must be finite and > 0, got {c}")));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::invalid("d", format!("curvature must be finite and > 0, got {d}")));
    }
    Ok(())
}

/// Logarithmic derivative of the base function on `u > 0`. Strictly
/// decreasing, from `+inf` at `0+` to `1 - c` at infinity.
fn log_slope(u: f64, c: f64, d: f64) -> f64 {
    let w = (-(c + d) * u).exp();
    1.0 / u.tanh() - (c - d * w) / (1.0 + w)
}

fn solve_shift(c: f64, d: f64) -> Result<f64> {
    // f > 0 on u > 0 and f < 0 on u < 0, so any maximum sits at u > 0. The
    // slope there tends to 1 - c, which leaves no finite maximum unless c > 1.
    if c <= 1.0 {
        return Err(Error::NoInteriorMaximum { c, d });
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while log_slope(hi, c, d) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoInteriorMaximum { c, d });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_slope(mid, c, d) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Base function evaluated in an exponent-normalized form that never
/// overflows for `d >= 1`.
pub fn base(u: f64, c: f64, d: f64) -> f64 {
    if u.is_infinite() {
        return if u > 0.0 {
            0.0
        } else if d == 1.0 {
            -1.0
        } else if d > 1.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
    }
    let w = (-(c + d) * u.abs()).exp();
    if u >= 0.0 {
        (((1.0 - c) * u).exp() - (-(1.0 + c) * u).exp()) / (1.0 + w)
    } else {
        let tail = if d == 1.0 { 1.0 } else { ((d - 1.0) * u).exp() };
        (((1.0 + d) * u).exp() - tail) / (1.0 + w)
    }
}

/// A usmht curve with its shift resolved once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Usmht {
    c: f64,
    d: f64,
    shift: f64,
}

impl Usmht {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        let shift = smht_shift(c, d)?;
        Ok(Self { c, d, shift })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    #[inline]
    pub fn eval(&self, x: f64, r: Direction) -> f64 {
        base(r.sign() * x + self.shift, self.c, self.d)
    }

    /// Value at `x = 0`, the global maximum.
    pub fn peak(&self) -> f64 {
        base(self.shift, self.c, self.d)
    }
}

pub fn usmht(x: f64, c: f64, d: f64, r: Direction) -> Result<f64> {
    Ok(Usmht::new(c, d)?.eval(x, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(u: f64, c: f64, d: f64) -> f64 {
        (u.exp() - (-u).exp()) / ((c * u).exp() + (-d * u).exp())
    }

    /// Grid scan of `direct` followed by bisection on its derivative sign.
    fn scan_argmax(c: f64, d: f64) -> f64 {
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut u = -20.0;
        while u <= 20.0 {
            let f = direct(u, c, d);
            if f > best.0 {
                best = (f, u);
            }
            u += 1e-4;
        }
        let slope = |u: f64| {
            let (n, np) = (u.exp() - (-u).exp(), u.exp() + (-u).exp());
            let (q, qp) = ((c * u).exp() + (-d * u).exp(), c * (c * u).exp() - d * (-d * u).exp());
            np * q - n * qp
        };
        let (mut lo, mut hi) = (best.1 - 2e-4, best.1 + 2e-4);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn tanh_case_has_no_interior_maximum() {
        assert!(matches!(smht_shift(1.0, 1.0), Err(Error::NoInteriorMaximum { .. })));
        assert!(matches!(smht_shift(0.5, 0.5), Err(Error::NoInteriorMaximum { .. })));
        assert!(usmht(0.0, 1.0, 1.0, Direction::Forward).is_err());
    }

    #[test]
    fn shift_is_a_stationary_point() {
        let shift = smht_shift(2.0, 1.0).unwrap();
        let h = 1e-5;
        let fp = (direct(shift + h, 2.0, 1.0) - direct(shift - h, 2.0, 1.0)) / (2.0 * h);
        assert!(fp.abs() < 1e-8, "f'(u*) = {fp}");
        assert!((shift - scan_argmax(2.0, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn symmetric_curvatures_give_odd_base() {
        let shift = smht_shift(3.0, 3.0).unwrap();
        assert!(shift > 0.0);
        assert!((base(-shift, 3.0, 3.0) + base(shift, 3.0, 3.0)).abs() < 1e-15);
    }

    #[test]
    fn far_negative_side_saturates_at_minus_one() {
        let v = usmht(-1e6, 2.0, 1.0, Direction::Forward).unwrap();
        assert!((v + 1.0).abs() < 1e-9);
        let v = usmht(1e6, 2.0, 1.0, Direction::Forward).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn peak_at_zero_matches_grid_maximum() {
        for (c, d) in [(2.0, 1.0), (3.0, 1.0), (1.3, 1.0), (4.0, 1000.0)] {
            let curve = Usmht::new(c, d).unwrap();
            let grid_max = (0..=200_000)
                .map(|i| direct(-10.0 + i as f64 * 1e-4, c, d))
                .filter(|v| v.is_finite())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((curve.peak() - grid_max).abs() < 1e-6, "c={c} d={d}");
            assert_eq!(curve.eval(0.0, Direction::Forward), curve.peak());
        }
    }

    #[test]
    fn reverse_direction_mirrors_argument() {
        for x in [-5.0, -0.3, 0.0, 0.7, 12.0] {
            let a = usmht(x, 2.5, 1.0, Direction::Reverse).unwrap();
            let b = usmht(-x, 2.5, 1.0, Direction::Forward).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn normalized_form_matches_direct_formula() {
        for (c, d) in [(2.0, 1.0), (5.0, 1.0), (3.0, 3.0), (1.5, 2.0)] {
            for i in 0..=1000 {
                let u = -50.0 + i as f64 * 0.1;
                let want = direct(u, c, d);
                let got = base(u, c, d);
                assert!((got - want).abs() < 1e-12, "c={c} d={d} u={u}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn infinite_inputs_hit_asymptotes() {
        let curve = Usmht::new(2.0, 1.0).unwrap();
        assert_eq!(curve.eval(f64::INFINITY, Direction::Forward), 0.0);
        assert_eq!(curve.eval(f64::NEG_INFINITY, Direction::Forward), -1.0);
        assert_eq!(curve.eval(f64::INFINITY, Direction::Reverse), -1.0);
    }

    #[test]
    fn cache_returns_identical_shift() {
        let a = smht_shift(7.25, 1.0).unwrap();
        let b = smht_shift(7.25, 1.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
