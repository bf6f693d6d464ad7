//! Single-step BEC mathematics.
//!
//! A binary erasure channel is fully described by its erasure probability,
//! which is also its Bhattacharyya parameter `Z`. One butterfly turns two
//! copies of `BEC(z)` into a risky child `BEC(1 - (1 - z)^2)` and a reliable
//! child `BEC(z^2)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Erasure probability of a BEC, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct ErasureRate<S = f64>(S);

impl<S: Scalar> ErasureRate<S> {
    pub fn new(z: S) -> Result<Self> {
        // NaN fails both comparisons.
        if z >= S::zero() && z <= S::one() {
            Ok(Self(z))
        } else {
            Err(Error::ErasureDomain(format!("{z}")))
        }
    }

    pub fn perfect() -> Self {
        Self(S::zero())
    }

    pub fn useless() -> Self {
        Self(S::one())
    }

    pub fn value(&self) -> &S {
        &self.0
    }

    pub fn into_inner(self) -> S {
        self.0
    }

    /// Capacity `I = 1 - Z`.
    pub fn capacity(&self) -> S {
        S::one() - self.0.clone()
    }

    /// The risky child `1 - (1 - z)^2`.
    pub fn flat(&self) -> Self {
        let c = S::one() - self.0.clone();
        Self(S::one() - c.clone() * c)
    }

    /// The reliable child `z^2`.
    pub fn sharp(&self) -> Self {
        Self(self.0.clone() * self.0.clone())
    }

    /// Distance from full polarization, `min(z, 1 - z)`.
    pub fn polarization_gap(&self) -> S {
        S::min_of(self.0.clone(), self.capacity())
    }
}

impl ErasureRate<f64> {
    pub fn to_f64(&self) -> f64 {
        self.0
    }
}

impl<S: Scalar> fmt::Display for ErasureRate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<'de> Deserialize<'de> for ErasureRate<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let z = f64::deserialize(d)?;
        ErasureRate::new(z).map_err(serde::de::Error::custom)
    }
}

pub fn transform_flat<S: Scalar>(z: &ErasureRate<S>) -> ErasureRate<S> {
    z.flat()
}

pub fn transform_sharp<S: Scalar>(z: &ErasureRate<S>) -> ErasureRate<S> {
    z.sharp()
}

pub fn y_param<S: Scalar>(z: &ErasureRate<S>) -> S {
    z.polarization_gap()
}
