//! Fourier pseudospectral solver for the Kuramoto–Sivashinsky equation
//!
//! ```text
//! u_t + 4 u_xxxx + μ [ u_xx + ½ (u_x)² ] = 0,   x ∈ [0, 2π),  periodic
//! ```
//!
//! The stiff linear part (symbol `-4k⁴ + μk²`) is integrated exactly and the
//! quadratic nonlinearity explicitly with fourth-order exponential time
//! differencing (ETD-RK4). The φ-function coefficients are evaluated by
//! averaging over a complex contour around each `hL_k`, which avoids the
//! cancellation that direct formulas suffer for small `|hL_k|`. The
//! nonlinear term is formed in physical space with 2/3-rule dealiasing.
//!
//! Solutions are represented by their zero-average part. The spatial mean is
//! forced by `(u_x)²` but never feeds back into the other modes, so it is a
//! pure drift; dropping it keeps trajectories (and their projections onto
//! zero-mean basis functions) bounded.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::dynamics::check_finite;
use crate::error::{Error, Result};
use crate::state::{StateVector, SystemKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsConfig {
    /// Bifurcation parameter μ > 0.
    pub mu: f64,
    /// Collocation size; must be a power of two, at least 16.
    pub n_modes: usize,
    /// Internal ETD step.
    pub dt: f64,
}

impl KsConfig {
    pub fn new(mu: f64) -> Self {
        Self { mu, n_modes: 128, dt: 0.05 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidConfig(format!("mu must be positive, got {}", self.mu)));
        }
        if self.n_modes < 16 || !self.n_modes.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "n_modes must be a power of two >= 16, got {}",
                self.n_modes
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Per-mode ETD-RK4 coefficients for one step size.
struct EtdCoeffs {
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
}

/// Number of contour points for the φ-function averages.
const CONTOUR_POINTS: usize = 64;

pub struct KsSolver {
    cfg: KsConfig,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Signed integer wavenumbers in FFT order.
    wavenumbers: Vec<f64>,
    /// 2/3-rule mask (1.0 keep, 0.0 drop); the Nyquist mode is always dropped.
    dealias: Vec<f64>,
    /// Coefficients for the configured `dt`; partial steps build their own.
    coeffs: EtdCoeffs,
}

impl KsSolver {
    pub fn new(cfg: KsConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n_modes;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);

        let mut wavenumbers = vec![0.0; n];
        for (i, w) in wavenumbers.iter_mut().enumerate() {
            let k = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
            *w = k as f64;
        }
        // The mean mode is pinned to zero: it is forced by (u_x)² but feeds
        // back into no other mode, so the bounded dynamics lives on the
        // zero-average subspace and the mean is a decoupled drift we drop.
        let cutoff = n as f64 / 3.0;
        let dealias: Vec<f64> = wavenumbers
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                if i != 0 && i != n / 2 && k.abs() <= cutoff {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();

        let coeffs = Self::etd_coeffs(&wavenumbers, cfg.mu, cfg.dt);
        Ok(Self { cfg, fft, ifft, wavenumbers, dealias, coeffs })
    }

    pub fn config(&self) -> &KsConfig {
        &self.cfg
    }

    /// Linear growth rate of mode `k`: `-4k⁴ + μk²`.
    fn symbol(k: f64, mu: f64) -> f64 {
        -4.0 * k.powi(4) + mu * k * k
    }

    fn etd_coeffs(wavenumbers: &[f64], mu: f64, h: f64) -> EtdCoeffs {
        let n = wavenumbers.len();
        let mut c = EtdCoeffs {
            e: vec![0.0; n],
            e2: vec![0.0; n],
            q: vec![0.0; n],
            f1: vec![0.0; n],
            f2: vec![0.0; n],
            f3: vec![0.0; n],
        };
        for (i, &k) in wavenumbers.iter().enumerate() {
            let hl = h * Self::symbol(k, mu);
            c.e[i] = hl.exp();
            c.e2[i] = (0.5 * hl).exp();
            let (mut q, mut f1, mut f2, mut f3) = (0.0, 0.0, 0.0, 0.0);
            for s in 0..CONTOUR_POINTS {
                let theta = PI * (s as f64 + 0.5) / CONTOUR_POINTS as f64;
                let z = Complex::new(hl + theta.cos(), theta.sin());
                let ez = z.exp();
                let z2 = z * z;
                let z3 = z2 * z;
                q += (((z / 2.0).exp() - 1.0) / z).re;
                f1 += ((-4.0 - z + ez * (4.0 - 3.0 * z + z2)) / z3).re;
                f2 += ((2.0 + z + ez * (z - 2.0)) / z3).re;
                f3 += ((-4.0 - 3.0 * z - z2 + ez * (4.0 - z)) / z3).re;
            }
            let scale = h / CONTOUR_POINTS as f64;
            c.q[i] = q * scale;
            c.f1[i] = f1 * scale;
            c.f2[i] = f2 * scale;
            c.f3[i] = f3 * scale;
        }
        c
    }

    /// Nonlinear term `N(û) = -½μ F[(u_x)²]`, dealiased.
    fn nonlinear(&self, v: &[Complex<f64>], out: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
        let n = v.len() as f64;
        for (i, &vi) in v.iter().enumerate() {
            // derivative: multiply by ik
            scratch[i] = Complex::new(0.0, self.wavenumbers[i]) * vi;
        }
        self.ifft.process(scratch);
        for w in scratch.iter_mut() {
            // (u_x)² in physical space; the inverse transform is unnormalized,
            // so divide by n once per transform
            let ux = w.re / n;
            *w = Complex::new(ux * ux, 0.0);
        }
        self.fft.process(scratch);
        let g = -0.5 * self.cfg.mu;
        for i in 0..v.len() {
            out[i] = scratch[i] * (g * self.dealias[i]);
        }
    }

    /// Project onto conjugate-symmetric spectra (real physical fields). The
    /// asymmetric part sees only the linear propagator — the nonlinear term is
    /// formed from the real field — so without this projection roundoff in an
    /// unstable mode would grow at the full linear rate.
    fn symmetrize(v: &mut [Complex<f64>]) {
        let n = v.len();
        v[0].im = 0.0;
        v[n / 2].im = 0.0;
        for k in 1..n / 2 {
            let s = 0.5 * (v[k] + v[n - k].conj());
            v[k] = s;
            v[n - k] = s.conj();
        }
    }

    fn etd_step(&self, v: &mut [Complex<f64>], c: &EtdCoeffs, work: &mut StepBuffers) {
        let n = v.len();
        self.nonlinear(v, &mut work.nv, &mut work.scratch);
        for i in 0..n {
            work.a[i] = c.e2[i] * v[i] + c.q[i] * work.nv[i];
        }
        self.nonlinear(&work.a, &mut work.na, &mut work.scratch);
        for i in 0..n {
            work.b[i] = c.e2[i] * v[i] + c.q[i] * work.na[i];
        }
        self.nonlinear(&work.b, &mut work.nb, &mut work.scratch);
        for i in 0..n {
            work.cc[i] = c.e2[i] * work.a[i] + c.q[i] * (2.0 * work.nb[i] - work.nv[i]);
        }
        self.nonlinear(&work.cc, &mut work.nc, &mut work.scratch);
        for i in 0..n {
            v[i] = c.e[i] * v[i]
                + c.f1[i] * work.nv[i]
                + 2.0 * c.f2[i] * (work.na[i] + work.nb[i])
                + c.f3[i] * work.nc[i];
        }
    }

    /// Advance `u` by time `t`. `t/dt` is rounded to the nearest integer
    /// number of full steps when it is one to machine precision; otherwise a
    /// final partial step covers the exact remainder.
    pub fn advance(&self, u: &StateVector, t: f64) -> Result<StateVector> {
        if u.kind != SystemKind::Ks {
            return Err(Error::InvalidConfig("expected a KS state".into()));
        }
        if u.len() != self.cfg.n_modes {
            return Err(Error::LengthMismatch { expected: self.cfg.n_modes, got: u.len() });
        }
        if !(t >= 0.0) {
            return Err(Error::InvalidConfig(format!("horizon must be >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(u.clone());
        }
        check_finite(&u.values, 0)?;

        let rounded = (t / self.cfg.dt).round();
        let (n_full, remainder) = if (t - rounded * self.cfg.dt).abs() <= 1e-9 * t.max(1.0) {
            (rounded as usize, 0.0)
        } else {
            let f = (t / self.cfg.dt).floor();
            (f as usize, t - f * self.cfg.dt)
        };

        let n = self.cfg.n_modes;
        let mut v: Vec<Complex<f64>> =
            u.values.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fft.process(&mut v);
        for i in 0..n {
            v[i] *= self.dealias[i];
        }

        let mut work = StepBuffers::new(n);
        let spectral_cap = super::BLOWUP_THRESHOLD * n as f64;
        for step in 0..n_full {
            self.etd_step(&mut v, &self.coeffs, &mut work);
            Self::symmetrize(&mut v);
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm_sqr() > spectral_cap * spectral_cap) {
                return Err(Error::IntegrationDiverged { step: step + 1, threshold: super::BLOWUP_THRESHOLD });
            }
        }
        if remainder > 0.0 {
            let c = Self::etd_coeffs(&self.wavenumbers, self.cfg.mu, remainder);
            self.etd_step(&mut v, &c, &mut work);
            Self::symmetrize(&mut v);
        }

        self.ifft.process(&mut v);
        let values: Vec<f64> = v.iter().map(|z| z.re / n as f64).collect();
        check_finite(&values, n_full)?;
        Ok(StateVector { values, kind: SystemKind::Ks })
    }

    /// Collocation grid `x_j = 2π j / n`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.cfg.n_modes;
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }
}

struct StepBuffers {
    nv: Vec<Complex<f64>>,
    na: Vec<Complex<f64>>,
    nb: Vec<Complex<f64>>,
    nc: Vec<Complex<f64>>,
    a: Vec<Complex<f64>>,
    b: Vec<Complex<f64>>,
    cc: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl StepBuffers {
    fn new(n: usize) -> Self {
        let z = vec![Complex::new(0.0, 0.0); n];
        Self {
            nv: z.clone(),
            na: z.clone(),
            nb: z.clone(),
            nc: z.clone(),
            a: z.clone(),
            b: z.clone(),
            cc: z.clone(),
            scratch: z,
        }
    }
}

/// `L²(0, 2π)` norm of grid values under the uniform (trapezoidal) weights.
pub fn l2_norm(values: &[f64]) -> f64 {
    let w = 2.0 * PI / values.len() as f64;
    (values.iter().map(|v| w * v * v).sum::<f64>()).sqrt()
}

pub fn linf_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
