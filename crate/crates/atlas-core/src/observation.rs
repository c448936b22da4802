//! Observation maps `R: Y → R^k` and the snapshot-based POD basis.
//!
//! The POD basis consists of the leading left singular vectors of the
//! snapshot matrix under the trapezoidal `L²(0, 2π)` inner product, which on
//! a uniform periodic grid has the constant weight `2π/n`. Delay coordinates
//! sample a Mackey–Glass history at `k` equispaced offsets in `[-τ, 0]`,
//! using the same cubic Hermite interpolation as the integrator when an
//! offset falls between grid nodes.

use nalgebra::DMatrix;

use crate::dynamics::HistoryInterpolant;
use crate::error::{Error, Result};
use crate::state::{ObservedPoint, StateVector, SystemKind};

/// Orthonormal POD basis sampled on the collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    /// Basis functions ζ_1..ζ_k, each sampled on the grid.
    pub vectors: Vec<Vec<f64>>,
    /// Singular values of the weighted snapshot matrix, nonincreasing.
    pub singular_values: Vec<f64>,
    /// Quadrature weights of the inner product (uniform on the periodic grid).
    pub grid_weights: Vec<f64>,
}

impl PodBasis {
    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn grid_len(&self) -> usize {
        self.grid_weights.len()
    }

    /// Weighted inner product of two grid functions.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.grid_weights)
            .map(|((x, y), w)| w * x * y)
            .sum()
    }
}

/// Relative threshold below which singular values count as numerically zero.
/// The Gram route only resolves singular values down to sqrt(machine epsilon)
/// relative (~1e-8), so anything below 1e-6 is indistinguishable from noise.
const RANK_TOL: f64 = 1e-6;

/// Build the `k` leading POD modes from snapshots.
///
/// Deterministic sign convention: in each mode the first entry of largest
/// magnitude is made positive.
pub fn build_pod_basis(snapshots: &[StateVector], k: usize) -> Result<PodBasis> {
    if snapshots.len() < k {
        return Err(Error::RankDeficient { requested: k, available: snapshots.len() });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("requested an empty basis".into()));
    }
    let n = snapshots[0].len();
    for s in snapshots {
        if s.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: s.len() });
        }
    }
    let weight = 2.0 * std::f64::consts::PI / n as f64;

    // Weighted Gram matrix G = W^{1/2} A A^T W^{1/2}; its eigenvectors are the
    // left singular vectors of W^{1/2} A. n is the (small) grid size, so the
    // n×n route is much cheaper than an SVD over thousands of snapshots.
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for s in snapshots {
        for i in 0..n {
            let si = s.values[i];
            for j in i..n {
                gram[(i, j)] += si * s.values[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    gram *= weight;

    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let sigma_max = eig.eigenvalues[order[0]].max(0.0).sqrt();
    let mut vectors = Vec::with_capacity(k);
    let mut singular_values = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let sigma = eig.eigenvalues[idx].max(0.0).sqrt();
        if sigma <= RANK_TOL * sigma_max {
            return Err(Error::RankDeficient { requested: k, available: vectors.len() });
        }
        // map back from the W^{1/2}-space and apply the sign rule
        let mut zeta: Vec<f64> =
            eig.eigenvectors.column(idx).iter().map(|v| v / weight.sqrt()).collect();
        fix_sign(&mut zeta);
        vectors.push(zeta);
        singular_values.push(sigma);
    }

    Ok(PodBasis { vectors, singular_values, grid_weights: vec![weight; n] })
}

/// Flip the sign so the first entry of largest magnitude is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Project a state onto the POD coefficients `⟨u, ζ_i⟩`.
pub fn pod_observe(u: &StateVector, basis: &PodBasis) -> Result<ObservedPoint> {
    if u.len() != basis.grid_len() {
        return Err(Error::LengthMismatch { expected: basis.grid_len(), got: u.len() });
    }
    let coords = basis.vectors.iter().map(|z| basis.inner(&u.values, z)).collect();
    Ok(ObservedPoint::new(coords))
}

/// Delay-coordinate observation: `k` equispaced history samples from `-τ` to 0.
pub fn delay_observe(u: &StateVector, k: usize, tau: f64) -> Result<ObservedPoint> {
    if u.kind != SystemKind::MackeyGlass {
        return Err(Error::InvalidConfig("delay coordinates need a Mackey-Glass state".into()));
    }
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 delays, got {k}")));
    }
    let n_h = u.len() - 1;
    let interp = HistoryInterpolant::new(&u.values, tau)?;
    let mut coords = Vec::with_capacity(k);
    for j in 0..k {
        // sample exactly on grid nodes whenever the offsets line up
        let pos = j * n_h;
        if pos % (k - 1) == 0 {
            coords.push(u.values[pos / (k - 1)]);
        } else {
            let t = -tau + tau * j as f64 / (k - 1) as f64;
            coords.push(interp.eval(t));
        }
    }
    Ok(ObservedPoint::new(coords))
}

/// An observation map bundled with everything it needs, so covering code can
/// treat POD, delay and raw coordinates uniformly.
#[derive(Debug, Clone)]
pub enum Observer {
    Pod(PodBasis),
    Delay { k: usize, tau: f64 },
    /// States of analytic maps are already points of `R^k`.
    Identity,
}

impl Observer {
    pub fn observe(&self, u: &StateVector) -> Result<ObservedPoint> {
        match self {
            Observer::Pod(basis) => pod_observe(u, basis),
            Observer::Delay { k, tau } => delay_observe(u, *k, *tau),
            Observer::Identity => Ok(ObservedPoint::new(u.values.clone())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Observer::Pod(basis) => basis.k(),
            Observer::Delay { k, .. } => *k,
            Observer::Identity => 0,
        }
    }
}
