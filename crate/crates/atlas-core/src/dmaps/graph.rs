//! Sparse kernel graph assembly and the α-normalized Markov matrix.

use crate::error::Result;
use crate::exec;
use crate::state::{dist_sq, ObservedPoint};

use super::KernelParams;

/// Connectivity summary of the kernel graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphDiagnostics {
    pub components: usize,
    /// Anchors whose only kernel interaction is with themselves.
    pub isolated: usize,
}

/// Symmetric sparse matrix in CSR form. Off-diagonal entries are mirrored
/// bitwise, diagonals are stored separately.
#[derive(Debug, Clone)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseSym {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// Row sums including the diagonal, each row accumulated in column order.
    pub fn row_sums(&self) -> Vec<f64> {
        exec::range_map_collect(self.n, |i| {
            let (_, vals) = self.row(i);
            self.diag[i] + vals.iter().sum::<f64>()
        })
    }

    /// `y = A x`, parallel over rows, deterministic.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        exec::range_map_collect(self.n, |i| {
            let (cols, vals) = self.row(i);
            let mut acc = self.diag[i] * x[i];
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            acc
        })
    }

    /// Scale entry (i, j) by `f(i) * f(j)`; the factor product is formed once
    /// per entry so symmetry survives bitwise.
    fn conjugate_by(&self, f: &[f64]) -> SparseSym {
        let vals: Vec<f64> = {
            let mut out = Vec::with_capacity(self.vals.len());
            for i in 0..self.n {
                let (cols, vals) = self.row(i);
                for (c, v) in cols.iter().zip(vals) {
                    out.push(v * (f[i] * f[*c as usize]));
                }
            }
            out
        };
        let diag = self.diag.iter().zip(f).map(|(d, fi)| d * (fi * fi)).collect();
        SparseSym { n: self.n, row_ptr: self.row_ptr.clone(), cols: self.cols.clone(), vals, diag }
    }
}

/// The truncated kernel matrix together with its plain row sums.
#[derive(Debug, Clone)]
pub struct KernelGraph {
    kernel: SparseSym,
    q_tilde: Vec<f64>,
}

impl KernelGraph {
    /// Brute-force neighbor scan; rows are built independently in parallel
    /// and the kernel of (i, j) equals that of (j, i) bitwise because the
    /// squared distance does.
    pub fn build(anchors: &[ObservedPoint], params: &KernelParams) -> Result<Self> {
        Self::build_scaled(anchors, params, 1.0)
    }

    /// Kernel scaled by a constant `c`; the normalization cancels the
    /// constant, which the scale-invariance tests verify.
    pub(crate) fn build_scaled(
        anchors: &[ObservedPoint],
        params: &KernelParams,
        c: f64,
    ) -> Result<Self> {
        let m = anchors.len();
        let r2 = params.cutoff_radius * params.cutoff_radius;
        let eps = params.epsilon;
        let rows: Vec<(Vec<u32>, Vec<f64>)> = exec::range_map_collect(m, |i| {
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            for j in 0..m {
                if j == i {
                    continue;
                }
                let d2 = dist_sq(&anchors[i].coords, &anchors[j].coords);
                if d2 <= r2 {
                    cols.push(j as u32);
                    vals.push(c * (-d2 / eps).exp());
                }
            }
            (cols, vals)
        });

        let mut row_ptr = Vec::with_capacity(m + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (rc, rv) in rows {
            cols.extend(rc);
            vals.extend(rv);
            row_ptr.push(cols.len());
        }
        let kernel = SparseSym { n: m, row_ptr, cols, vals, diag: vec![c; m] };
        let q_tilde = kernel.row_sums();
        Ok(Self { kernel, q_tilde })
    }

    pub fn q_tilde(&self) -> &[f64] {
        &self.q_tilde
    }

    /// α-normalize and row-normalize into the stochastic matrix.
    pub fn markov(&self, alpha: f64) -> MarkovMatrix {
        let scale: Vec<f64> = self.q_tilde.iter().map(|q| 1.0 / q.powf(alpha)).collect();
        let k_alpha = self.kernel.conjugate_by(&scale);
        let d_tilde = k_alpha.row_sums();
        MarkovMatrix { k_alpha, d_tilde }
    }

    pub fn diagnostics(&self) -> GraphDiagnostics {
        let m = self.kernel.n;
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut isolated = 0;
        for i in 0..m {
            let (cols, _) = self.kernel.row(i);
            if cols.is_empty() {
                isolated += 1;
            }
            for c in cols {
                let (a, b) = (find(&mut parent, i), find(&mut parent, *c as usize));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut roots: Vec<usize> = (0..m).map(|i| find(&mut parent, i)).collect();
        roots.sort_unstable();
        roots.dedup();
        GraphDiagnostics { components: roots.len(), isolated }
    }
}

/// Row-stochastic matrix `P = D^{-1} K_α` kept in factored sparse form.
#[derive(Debug, Clone)]
pub struct MarkovMatrix {
    k_alpha: SparseSym,
    d_tilde: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_kernel_factors_cancel_in_the_markov_matrix() {
        // multiplying the kernel by c > 0 must leave P unchanged up to 1e-14
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let anchors: Vec<ObservedPoint> = (0..60)
            .map(|_| ObservedPoint::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        for alpha in [0.0, 0.5, 1.0] {
            let params = KernelParams { alpha, ..KernelParams::new(0.4) };
            let base = KernelGraph::build(&anchors, &params).unwrap().markov(alpha);
            for c in [3.7, 0.02] {
                let scaled =
                    KernelGraph::build_scaled(&anchors, &params, c).unwrap().markov(alpha);
                for i in 0..anchors.len() {
                    for ((ja, va), (jb, vb)) in
                        base.row_entries(i).into_iter().zip(scaled.row_entries(i))
                    {
                        assert_eq!(ja, jb);
                        assert!(
                            (va - vb).abs() <= 1e-14 * va.abs().max(1e-300),
                            "P[{i}][{ja}] drifted: {va} vs {vb} at c = {c}"
                        );
                    }
                }
            }
        }
    }
}

impl MarkovMatrix {
    pub fn n(&self) -> usize {
        self.k_alpha.n()
    }

    pub fn d_tilde(&self) -> &[f64] {
        &self.d_tilde
    }

    /// Entries of row `i` of `P`, diagonal first.
    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        let inv = 1.0 / self.d_tilde[i];
        let (cols, vals) = self.k_alpha.row(i);
        let mut out = Vec::with_capacity(cols.len() + 1);
        out.push((i, self.k_alpha.diag(i) * inv));
        for (c, v) in cols.iter().zip(vals) {
            out.push((*c as usize, v * inv));
        }
        out
    }

    /// Row sums of `P` (1 up to roundoff).
    pub fn row_sums(&self) -> Vec<f64> {
        exec::range_map_collect(self.n(), |i| {
            self.row_entries(i).into_iter().map(|(_, v)| v).sum()
        })
    }

    /// `y = P x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.k_alpha.matvec(x);
        for (yi, d) in y.iter_mut().zip(&self.d_tilde) {
            *yi /= d;
        }
        y
    }

    /// The symmetric conjugate `D^{-1/2} K_α D^{-1/2}`, sharing P's spectrum.
    pub fn symmetric_conjugate(&self) -> SparseSym {
        let f: Vec<f64> = self.d_tilde.iter().map(|d| 1.0 / d.sqrt()).collect();
        self.k_alpha.conjugate_by(&f)
    }
}
