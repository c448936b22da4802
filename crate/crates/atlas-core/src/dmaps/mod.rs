//! Diffusion maps: kernel graph, α-normalized Markov matrix, spectral
//! embedding, and Nyström extension to out-of-sample points.
//!
//! The kernel is `exp(-‖x_i - x_j‖²/ε)` truncated at a cutoff radius, which
//! keeps the matrix sparse. Row/column sums raised to `α` divide the kernel
//! (α = 1 removes the sampling-density influence), the result is
//! row-normalized into a stochastic matrix `P`, and the top eigenpairs of
//! the symmetric conjugate `D^{1/2} P D^{-1/2}` give a real spectrum.

mod graph;
mod lanczos;

pub use graph::{GraphDiagnostics, KernelGraph, MarkovMatrix};

use crate::error::{Error, Result};
use crate::exec;
use crate::observation::fix_sign;
use crate::state::{dist_sq, ObservedPoint};

/// Kernel bandwidth and sparsity parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Bandwidth ε > 0.
    pub epsilon: f64,
    /// Density-normalization exponent α ∈ [0, 1].
    pub alpha: f64,
    /// Interaction cutoff radius r (Euclidean distance).
    pub cutoff_radius: f64,
    /// Minimum neighbor count an out-of-sample point must see before its
    /// weights are formed; the radius grows by 10% until this is met.
    pub min_neighbors: usize,
}

impl KernelParams {
    /// Defaults: α = 1, r = sqrt(2ε), N = 8.
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, alpha: 1.0, cutoff_radius: (2.0 * epsilon).sqrt(), min_neighbors: 8 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha must be in [0,1], got {}", self.alpha)));
        }
        if !(self.cutoff_radius > 0.0) {
            return Err(Error::InvalidConfig("cutoff radius must be > 0".into()));
        }
        if self.min_neighbors == 0 {
            return Err(Error::InvalidConfig("min_neighbors must be >= 1".into()));
        }
        Ok(())
    }
}

/// Truncated Gaussian kernel value between two points.
pub fn kernel(x1: &ObservedPoint, x2: &ObservedPoint, params: &KernelParams) -> f64 {
    let d2 = x1.dist_sq(x2);
    if d2 <= params.cutoff_radius * params.cutoff_radius {
        (-d2 / params.epsilon).exp()
    } else {
        0.0
    }
}

/// A built diffusion model: anchors, normalization state and spectrum.
#[derive(Debug, Clone)]
pub struct DiffusionModel {
    pub anchors: Vec<ObservedPoint>,
    pub params: KernelParams,
    /// Plain kernel row sums (diagonal included).
    pub q_tilde: Vec<f64>,
    /// α-normalized row sums.
    pub d_tilde: Vec<f64>,
    /// Eigenvalues of P, nonincreasing, λ_0 = 1.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors ψ_ℓ of P, each of length m, sign-normalized.
    pub eigenvectors: Vec<Vec<f64>>,
    pub diagnostics: GraphDiagnostics,
}

/// Number of radius growth steps after which extension gives up.
const MAX_RADIUS_GROWTH: usize = 200;

/// Floor below which an eigenvalue cannot divide a Nyström coordinate.
const LAMBDA_FLOOR: f64 = 1e-12;

/// Residual tolerance of the eigensolver.
const EIGEN_TOL: f64 = 1e-10;

/// Build the diffusion model on a set of anchor points.
///
/// `n_ev` eigenpairs are computed (clamped to `m`); `seed` fixes the
/// eigensolver start vectors so results are reproducible.
pub fn build_markov(
    anchors: &[ObservedPoint],
    params: &KernelParams,
    n_ev: usize,
    seed: u64,
) -> Result<DiffusionModel> {
    params.validate()?;
    if anchors.len() < 2 {
        return Err(Error::TooFewAnchors { needed: 2, got: anchors.len() });
    }
    let graph = KernelGraph::build(anchors, params)?;
    let markov = graph.markov(params.alpha);
    let diagnostics = graph.diagnostics();
    if diagnostics.components > 1 {
        log::warn!(
            "kernel graph is disconnected: {} components, {} isolated anchors",
            diagnostics.components,
            diagnostics.isolated
        );
    }

    // eigenpairs of the symmetric conjugate A = D^{-1/2} K_alpha D^{-1/2}
    let conjugate = markov.symmetric_conjugate();
    let m = anchors.len();
    let (values, conj_vectors) =
        lanczos::top_eigenpairs(|x| conjugate.matvec(x), m, n_ev.min(m), EIGEN_TOL, seed)?;

    let inv_sqrt_d: Vec<f64> = markov.d_tilde().iter().map(|d| 1.0 / d.sqrt()).collect();
    let eigenvectors: Vec<Vec<f64>> = conj_vectors
        .into_iter()
        .map(|v| {
            let mut psi: Vec<f64> = v.iter().zip(&inv_sqrt_d).map(|(x, s)| x * s).collect();
            let n = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in psi.iter_mut() {
                *x /= n;
            }
            fix_sign(&mut psi);
            psi
        })
        .collect();

    Ok(DiffusionModel {
        anchors: anchors.to_vec(),
        params: *params,
        q_tilde: graph.q_tilde().to_vec(),
        d_tilde: markov.d_tilde().to_vec(),
        eigenvalues: values,
        eigenvectors,
        diagnostics,
    })
}

/// Assemble the stochastic matrix itself (diagnostics and tests; the model
/// keeps only the spectral data).
pub fn markov_matrix(anchors: &[ObservedPoint], params: &KernelParams) -> Result<MarkovMatrix> {
    params.validate()?;
    if anchors.len() < 2 {
        return Err(Error::TooFewAnchors { needed: 2, got: anchors.len() });
    }
    Ok(KernelGraph::build(anchors, params)?.markov(params.alpha))
}

impl DiffusionModel {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn n_ev(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// In-sample diffusion coordinates `y_i^{(ℓ)} = λ_ℓ ψ_ℓ(x_i)`, ℓ = 1..=n_coords.
#[derive(Debug, Clone)]
pub struct DiffusionCoordinates {
    pub points: Vec<Vec<f64>>,
}

pub fn embed(model: &DiffusionModel, n_coords: usize) -> Result<DiffusionCoordinates> {
    if n_coords + 1 > model.n_ev() {
        return Err(Error::InvalidConfig(format!(
            "requested {n_coords} coordinates but only {} nontrivial eigenpairs exist",
            model.n_ev().saturating_sub(1)
        )));
    }
    let m = model.len();
    let points = (0..m)
        .map(|i| {
            (1..=n_coords)
                .map(|l| model.eigenvalues[l] * model.eigenvectors[l][i])
                .collect()
        })
        .collect();
    Ok(DiffusionCoordinates { points })
}

/// Result of a Nyström extension at one point.
#[derive(Debug, Clone)]
pub struct Extension {
    /// `y^{(ℓ)} = Σ_j p_j ψ_ℓ(x_j)` for every computed eigenpair (ℓ = 0 included).
    pub y: Vec<f64>,
    /// `ψ_ℓ(x) = y^{(ℓ)}/λ_ℓ`, zeroed where |λ_ℓ| is below the floor.
    pub psi: Vec<f64>,
    /// Flags marking coordinates hit by the eigenvalue floor.
    pub floored: Vec<bool>,
    /// Radius growth steps that were needed to reach `min_neighbors`.
    pub growth_steps: usize,
}

/// Extend the eigenvectors to an out-of-sample point.
pub fn nystrom_extend(model: &DiffusionModel, x: &ObservedPoint) -> Result<Extension> {
    let m = model.len();
    let eps = model.params.epsilon;
    let alpha = model.params.alpha;
    let want = model.params.min_neighbors.min(m);

    let d2: Vec<f64> = model.anchors.iter().map(|a| dist_sq(&x.coords, &a.coords)).collect();

    // grow the radius (ε unchanged) until enough anchors are reachable
    let mut radius = model.params.cutoff_radius;
    let mut growth_steps = 0;
    loop {
        let inside = d2.iter().filter(|&&d| d <= radius * radius).count();
        if inside >= want {
            break;
        }
        if growth_steps >= MAX_RADIUS_GROWTH {
            return Err(Error::ExtensionFailed { growth_steps });
        }
        radius *= 1.1;
        growth_steps += 1;
    }

    // Weights are invariant under a common kernel scaling, so shift the
    // exponent by the nearest distance to avoid total underflow far away.
    let r2 = radius * radius;
    let d2_min =
        d2.iter().copied().filter(|&d| d <= r2).fold(f64::INFINITY, f64::min);
    let k: Vec<f64> = d2
        .iter()
        .map(|&d| if d <= r2 { (-(d - d2_min) / eps).exp() } else { 0.0 })
        .collect();
    let q: f64 = k.iter().sum();
    let q_alpha = q.powf(alpha);
    let k_alpha: Vec<f64> = k
        .iter()
        .zip(&model.q_tilde)
        .map(|(kj, qj)| kj / (q_alpha * qj.powf(alpha)))
        .collect();
    let d: f64 = k_alpha.iter().sum();
    if !(d > 0.0) {
        return Err(Error::ExtensionFailed { growth_steps });
    }

    let n_ev = model.n_ev();
    let mut y = vec![0.0; n_ev];
    for (j, &ka) in k_alpha.iter().enumerate() {
        if ka == 0.0 {
            continue;
        }
        let p = ka / d;
        for (l, yl) in y.iter_mut().enumerate() {
            *yl += p * model.eigenvectors[l][j];
        }
    }
    let mut psi = vec![0.0; n_ev];
    let mut floored = vec![false; n_ev];
    for l in 0..n_ev {
        if model.eigenvalues[l].abs() < LAMBDA_FLOOR {
            floored[l] = true;
        } else {
            psi[l] = y[l] / model.eigenvalues[l];
        }
    }
    Ok(Extension { y, psi, floored, growth_steps })
}

/// Extend a batch of points in parallel, preserving order.
pub fn nystrom_extend_batch(
    model: &DiffusionModel,
    points: &[ObservedPoint],
) -> Result<Vec<Extension>> {
    exec::map_collect(points, |x| nystrom_extend(model, x))
        .into_iter()
        .collect()
}

/// One row of the spectral summary table.
#[derive(Debug, Clone)]
pub struct SpectralRow {
    pub index: usize,
    pub eigenvalue: f64,
    /// λ_ℓ / λ_{ℓ-1}; NaN for the first row.
    pub gap_ratio: f64,
    /// Residual of regressing ψ_ℓ on low-order polynomials of the earlier
    /// nontrivial eigenvectors; small values mark higher harmonics.
    pub harmonic_residual: f64,
}

/// Eigenvalue gaps plus a crude higher-harmonic indicator per eigenvector.
pub fn spectral_gap_report(model: &DiffusionModel) -> Vec<SpectralRow> {
    use nalgebra::DMatrix;

    let m = model.len();
    let n_ev = model.n_ev();
    let mut rows = Vec::with_capacity(n_ev);
    for l in 0..n_ev {
        // regressors: 1, psi_i, psi_i*psi_j for 1 <= i <= j < l
        let mut cols: Vec<Vec<f64>> = vec![vec![1.0; m]];
        for i in 1..l {
            cols.push(model.eigenvectors[i].clone());
        }
        for i in 1..l {
            for j in i..l {
                let prod: Vec<f64> = model.eigenvectors[i]
                    .iter()
                    .zip(&model.eigenvectors[j])
                    .map(|(a, b)| a * b)
                    .collect();
                cols.push(prod);
            }
        }
        let design = DMatrix::from_fn(m, cols.len(), |r, c| cols[c][r]);
        let target = DMatrix::from_fn(m, 1, |r, _| model.eigenvectors[l][r]);
        let svd = design.svd(true, true);
        let solution = svd.solve(&target, 1e-12).expect("least squares on a tall matrix");
        let fitted = DMatrix::from_fn(m, cols.len(), |r, c| cols[c][r]) * solution;
        let mut res = 0.0;
        let mut norm = 0.0;
        for r in 0..m {
            let e = model.eigenvectors[l][r] - fitted[(r, 0)];
            res += e * e;
            norm += model.eigenvectors[l][r] * model.eigenvectors[l][r];
        }
        rows.push(SpectralRow {
            index: l,
            eigenvalue: model.eigenvalues[l],
            gap_ratio: if l == 0 {
                f64::NAN
            } else {
                model.eigenvalues[l] / model.eigenvalues[l - 1]
            },
            harmonic_residual: (res / norm).sqrt(),
        });
    }
    rows
}
