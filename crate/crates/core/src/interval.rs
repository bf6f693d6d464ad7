//! Outward-rounded interval arithmetic and the scaling-inequality certifier.
//!
//! Every operation returns an interval that contains the exact real result
//! for all points of its operands. Basic arithmetic is correctly rounded by
//! IEEE 754, so one ulp of outward widening per endpoint suffices; `log2`
//! comes from the platform libm and is widened by [`LIBM_SLACK_ULPS`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::RoundingFloat;

/// Outward widening applied to libm results, in ulps.
pub const LIBM_SLACK_ULPS: u32 = 4;

/// BEC scaling exponent used by the inequality.
pub const MU: f64 = 3.627;
/// Denominator constant paired with [`BETA_PRIME`].
pub const MU_PRIME: f64 = 4.0;
/// Exponent constant; the inequality uses `BETA_PRIME * MU_PRIME = 1/6`.
pub const BETA_PRIME: f64 = 1.0 / 24.0;

fn down<F: RoundingFloat>(x: F, ulps: u32) -> F {
    (0..ulps).fold(x, |v, _| v.step_down())
}

fn up<F: RoundingFloat>(x: F, ulps: u32) -> F {
    (0..ulps).fold(x, |v, _| v.step_up())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval<F = f64> {
    lo: F,
    hi: F,
}

impl<F: RoundingFloat> Interval<F> {
    pub fn new(lo: F, hi: F) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidParameter(format!("[{lo}, {hi}] is not a finite interval")))
        }
    }

    /// Degenerate interval holding a value that is exact in `F`.
    pub fn point(x: F) -> Self {
        Self { lo: x, hi: x }
    }

    /// One-ulp neighbourhood of `x`; encloses any real whose nearest `F` is `x`,
    /// e.g. a decimal literal such as `3.627`.
    pub fn around(x: F) -> Self {
        Self {
            lo: x.step_down(),
            hi: x.step_up(),
        }
    }

    pub fn lo(&self) -> F {
        self.lo
    }

    pub fn hi(&self) -> F {
        self.hi
    }

    pub fn width(&self) -> F {
        self.hi - self.lo
    }

    pub fn contains(&self, x: F) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Self) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(F::zero())
    }

    fn rounded(lo: F, hi: F, ulps: u32) -> Self {
        Self {
            lo: down(lo, ulps),
            hi: up(hi, ulps),
        }
    }

    fn hull4(products: [F; 4]) -> Self {
        let lo = products.iter().copied().fold(F::infinity(), F::min);
        let hi = products.iter().copied().fold(F::neg_infinity(), F::max);
        Self::rounded(lo, hi, 1)
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        if rhs.contains_zero() {
            return Err(Error::DivisionByZero(rhs.to_string()));
        }
        Ok(Self::hull4([
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ]))
    }

    pub fn log2(self) -> Result<Self> {
        if self.lo <= F::zero() {
            return Err(Error::IntervalDomain(format!("log2 of {self}")));
        }
        Ok(Self::rounded(self.lo.log2(), self.hi.log2(), LIBM_SLACK_ULPS))
    }

    /// Binary entropy on a subinterval of `(0, 1/2]`, where it is increasing.
    pub fn h2(self) -> Result<Self> {
        let half = F::from_f64_lossy(0.5);
        if self.lo <= F::zero() || self.hi > half {
            return Err(Error::IntervalDomain(format!("h2 of {self} (needs a subset of (0, 0.5])")));
        }
        let low = Self::h2_at(self.lo)?;
        let high = Self::h2_at(self.hi)?;
        Ok(Self {
            lo: low.lo,
            hi: high.hi,
        })
    }

    // enclosure of h2 at a single float
    fn h2_at(x: F) -> Result<Self> {
        let p = Self::point(x);
        let q = Self::point(F::one()) - p;
        Ok(-(p * p.log2()?) - q * q.log2()?)
    }
}

impl<F: RoundingFloat> Add for Interval<F> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::rounded(self.lo + rhs.lo, self.hi + rhs.hi, 1)
    }
}

impl<F: RoundingFloat> Sub for Interval<F> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self::rounded(self.lo - rhs.hi, self.hi - rhs.lo, 1)
    }
}

impl<F: RoundingFloat> Mul for Interval<F> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::hull4([
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ])
    }
}

impl<F: RoundingFloat> Neg for Interval<F> {
    type Output = Self;

    // exact
    fn neg(self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl<F: RoundingFloat> fmt::Display for Interval<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

pub fn interval_log2<F: RoundingFloat>(a: Interval<F>) -> Result<Interval<F>> {
    a.log2()
}

pub fn interval_h2<F: RoundingFloat>(a: Interval<F>) -> Result<Interval<F>> {
    a.h2()
}

/// Plain binary entropy `-x log2 x - (1 - x) log2 (1 - x)`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// `(1 - p) / (mu' - mu p) + h2(beta' mu' / (mu' - mu p))` in plain floats.
pub fn inequality_lhs(p: f64) -> f64 {
    let den = MU_PRIME - MU * p;
    (1.0 - p) / den + binary_entropy(BETA_PRIME * MU_PRIME / den)
}

/// Enclosure of [`inequality_lhs`] over every real `p` in `pi`.
pub fn inequality_lhs_enclosure(pi: Interval<f64>) -> Result<Interval<f64>> {
    let one = Interval::point(1.0);
    let mu = Interval::around(MU);
    let mu_prime = Interval::point(MU_PRIME);
    // beta' mu' = 1/6
    let numerator = one.checked_div(Interval::point(6.0))?;

    let den = mu_prime - mu * pi;
    let first = (one - pi).checked_div(den)?;
    let arg = numerator.checked_div(den)?;
    Ok(first + arg.h2()?)
}

/// Result of [`certify_inequality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub lo: f64,
    pub hi: f64,
    pub subdivisions: usize,
    pub verified: bool,
    /// Largest enclosure upper bound over all subintervals.
    pub max_upper: f64,
    /// Subintervals whose upper bound reached 1 or that left h2's domain.
    pub inconclusive: usize,
}

/// Splits `[lo, hi]` into `subdivisions` even pieces and checks that the
/// enclosure of the left-hand side stays strictly below 1 on each.
pub fn certify_inequality(lo: f64, hi: f64, subdivisions: usize) -> Result<Certificate> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= lo < hi <= 1, got lo = {lo}, hi = {hi}"
        )));
    }
    if subdivisions == 0 {
        return Err(Error::InvalidParameter("subdivisions must be at least 1".into()));
    }
    let k = subdivisions as f64;
    // adjacent pieces share the same float endpoint, so the union is [lo, hi]
    let knot = |i: usize| match i {
        0 => lo,
        i if i == subdivisions => hi,
        i => lo + (hi - lo) * (i as f64 / k),
    };
    let (max_upper, inconclusive) = (0..subdivisions)
        .into_par_iter()
        .map(|i| {
            let piece = Interval::new(knot(i), knot(i + 1)).expect("knots are ordered");
            match inequality_lhs_enclosure(piece) {
                Ok(v) if v.hi() < 1.0 => (v.hi(), 0usize),
                Ok(v) => (v.hi(), 1),
                Err(_) => (f64::INFINITY, 1),
            }
        })
        .reduce(|| (f64::NEG_INFINITY, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    Ok(Certificate {
        lo,
        hi,
        subdivisions,
        verified: inconclusive == 0,
        max_upper,
        inconclusive,
    })
}
