//! Shared domain types: points of the underlying phase space and of the
//! observation space.

use crate::error::{Error, Result};

/// Which dynamical system a [`StateVector`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// Kuramoto–Sivashinsky: real collocation values on a uniform grid of `[0, 2π)`.
    Ks,
    /// Mackey–Glass: history samples `u(-τ + jΔt)`, `j = 0..=n_h`.
    MackeyGlass,
    /// Analytic test maps acting directly on `R^k`.
    Analytic,
}

/// A discretized point of the underlying phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub values: Vec<f64>,
    pub kind: SystemKind,
}

impl StateVector {
    pub fn new(values: Vec<f64>, kind: SystemKind) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("state contains non-finite entries".into()));
        }
        Ok(Self { values, kind })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A point `x ∈ R^k` produced by an observation map.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedPoint {
    pub coords: Vec<f64>,
}

impl ObservedPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Squared Euclidean distance to `other`.
    pub fn dist_sq(&self, other: &ObservedPoint) -> f64 {
        dist_sq(&self.coords, &other.coords)
    }
}

impl From<Vec<f64>> for ObservedPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}
