//! Method-of-steps integrator for the Mackey–Glass delay equation
//!
//! ```text
//! u'(t) = β u(t-τ) / (1 + u(t-τ)^η) - γ u(t)
//! ```
//!
//! The state is the history segment on `[-τ, 0]` sampled on a uniform grid
//! with spacing `dt = τ / n_h`. Each step advances by `dt` with classical
//! RK4; the delayed value at the half step is obtained by cubic Hermite
//! interpolation of stored (value, derivative) pairs. Derivatives of nodes
//! produced by the integrator come from the equation itself; derivatives of
//! a bare initial history are completed by fourth-order finite differences,
//! matching the RK4 order on the delayed argument.

use std::collections::VecDeque;

use crate::dynamics::check_finite;
use crate::error::{Error, Result};
use crate::state::{StateVector, SystemKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgConfig {
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub tau: f64,
    /// Grid spacing; must divide `tau` exactly.
    pub dt: f64,
}

impl MgConfig {
    /// The parameter set used throughout: β=2, γ=1, η=9.65, τ=2.
    pub fn standard() -> Self {
        Self { beta: 2.0, gamma: 1.0, eta: 9.65, tau: 2.0, dt: 0.02 }
    }

    pub fn history_len(&self) -> usize {
        (self.tau / self.dt).round() as usize + 1
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("tau", self.tau),
            ("dt", self.dt),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let ratio = self.tau / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "tau/dt must be an integer, got {ratio}"
            )));
        }
        if (ratio.round() as usize) < 4 {
            return Err(Error::InvalidConfig("need at least 4 history intervals".into()));
        }
        Ok(())
    }
}

/// Cubic Hermite interpolation on one grid cell of width `h`, evaluated at
/// the normalized position `s ∈ [0, 1]`.
pub fn hermite_segment(v0: f64, d0: f64, v1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1
}

/// Fourth-order finite-difference derivatives of uniformly sampled values.
pub(crate) fn fd_derivatives(values: &[f64], spacing: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "need at least 5 samples for 4th-order differences");
    let c = 1.0 / (12.0 * spacing);
    let mut d = vec![0.0; n];
    d[0] = c * (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3]
        - 3.0 * values[4]);
    d[1] = c * (-3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2] - 6.0 * values[3]
        + values[4]);
    for j in 2..n - 2 {
        d[j] = c * (values[j - 2] - 8.0 * values[j - 1] + 8.0 * values[j + 1] - values[j + 2]);
    }
    d[n - 2] = -c * (-3.0 * values[n - 1] - 10.0 * values[n - 2] + 18.0 * values[n - 3]
        - 6.0 * values[n - 4]
        + values[n - 5]);
    d[n - 1] = -c * (-25.0 * values[n - 1] + 48.0 * values[n - 2] - 36.0 * values[n - 3]
        + 16.0 * values[n - 4]
        - 3.0 * values[n - 5]);
    d
}

/// Hermite interpolant over a bare history segment on `[-τ, 0]`, with
/// finite-difference derivative completion. This is the same interpolation
/// rule the integrator applies to stored nodes.
pub struct HistoryInterpolant<'a> {
    values: &'a [f64],
    derivs: Vec<f64>,
    tau: f64,
    spacing: f64,
}

impl<'a> HistoryInterpolant<'a> {
    pub fn new(values: &'a [f64], tau: f64) -> Result<Self> {
        if values.len() < 5 {
            return Err(Error::InvalidConfig("history too short to interpolate".into()));
        }
        let spacing = tau / (values.len() - 1) as f64;
        Ok(Self { values, derivs: fd_derivatives(values, spacing), tau, spacing })
    }

    /// Evaluate at `t ∈ [-τ, 0]`.
    pub fn eval(&self, t: f64) -> f64 {
        let pos = (t + self.tau) / self.spacing;
        let n = self.values.len();
        let j = (pos.floor() as usize).min(n - 2);
        let s = pos - j as f64;
        if s == 0.0 {
            return self.values[j];
        }
        hermite_segment(
            self.values[j],
            self.derivs[j],
            self.values[j + 1],
            self.derivs[j + 1],
            self.spacing,
            s,
        )
    }
}

pub struct MgSolver {
    cfg: MgConfig,
    n_h: usize,
}

impl MgSolver {
    pub fn new(cfg: MgConfig) -> Result<Self> {
        cfg.validate()?;
        let n_h = (cfg.tau / cfg.dt).round() as usize;
        Ok(Self { cfg, n_h })
    }

    pub fn config(&self) -> &MgConfig {
        &self.cfg
    }

    fn rhs(&self, u: f64, u_delayed: f64) -> f64 {
        self.cfg.beta * u_delayed / (1.0 + u_delayed.powf(self.cfg.eta)) - self.cfg.gamma * u
    }

    fn check_state(&self, u: &StateVector) -> Result<()> {
        if u.kind != SystemKind::MackeyGlass {
            return Err(Error::InvalidConfig("expected a Mackey-Glass state".into()));
        }
        if u.len() != self.n_h + 1 {
            return Err(Error::LengthMismatch { expected: self.n_h + 1, got: u.len() });
        }
        Ok(())
    }

    /// One RK4 step of size `dt`, from a (value, derivative) window whose
    /// oldest two nodes bracket the delayed arguments.
    ///
    /// Node derivatives are right-derivatives. The initial present is the one
    /// node where the solution's derivative jumps (history slope on the left,
    /// equation value on the right), so while that seam node is the right
    /// endpoint of the interpolation cell the caller passes the history-side
    /// slope via `seam`.
    fn step_window(&self, window: &mut VecDeque<(f64, f64)>, seam: Option<f64>) -> f64 {
        let dt = self.cfg.dt;
        let (v0, d0) = window[0];
        let (v1, mut d1) = window[1];
        if let Some(left_slope) = seam {
            d1 = left_slope;
        }
        let u = window[self.n_h].0;
        let del_half = hermite_segment(v0, d0, v1, d1, dt, 0.5);

        let k1 = self.rhs(u, v0);
        let k2 = self.rhs(u + 0.5 * dt * k1, del_half);
        let k3 = self.rhs(u + 0.5 * dt * k2, del_half);
        let k4 = self.rhs(u + dt * k3, v1);
        let u_new = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let d_new = self.rhs(u_new, v1);
        window.pop_front();
        window.push_back((u_new, d_new));
        u_new
    }

    /// (window, history-side slope of the seam node).
    fn make_window(&self, u: &StateVector) -> (VecDeque<(f64, f64)>, f64) {
        let derivs = fd_derivatives(&u.values, self.cfg.dt);
        let seam_left = derivs[self.n_h];
        let mut window: VecDeque<(f64, f64)> =
            u.values.iter().copied().zip(derivs).collect();
        // right-derivative of the present comes from the equation itself
        window[self.n_h].1 = self.rhs(u.values[self.n_h], u.values[0]);
        (window, seam_left)
    }

    /// The seam node sits at window index `n_h - step` after `step` steps; it
    /// is the right endpoint of the interpolation cell exactly once.
    fn seam_for_step(&self, step: usize, seam_left: f64) -> Option<f64> {
        (step == self.n_h - 1).then_some(seam_left)
    }

    /// Advance the history by `t` (a multiple of `dt`) and return the new
    /// history segment relative to the new present.
    pub fn advance(&self, u: &StateVector, t: f64) -> Result<StateVector> {
        self.check_state(u)?;
        if !(t >= 0.0) {
            return Err(Error::InvalidConfig(format!("horizon must be >= 0, got {t}")));
        }
        let steps_f = t / self.cfg.dt;
        if (steps_f - steps_f.round()).abs() > 1e-9 * steps_f.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon {t} is not a multiple of dt {}",
                self.cfg.dt
            )));
        }
        let steps = steps_f.round() as usize;
        if steps == 0 {
            return Ok(u.clone());
        }
        check_finite(&u.values, 0)?;

        let (mut window, seam_left) = self.make_window(u);
        for step in 0..steps {
            let u_new = self.step_window(&mut window, self.seam_for_step(step, seam_left));
            if !u_new.is_finite() || u_new.abs() > super::BLOWUP_THRESHOLD {
                return Err(Error::IntegrationDiverged {
                    step: step + 1,
                    threshold: super::BLOWUP_THRESHOLD,
                });
            }
        }
        let values: Vec<f64> = window.iter().map(|&(v, _)| v).collect();
        Ok(StateVector { values, kind: SystemKind::MackeyGlass })
    }

    /// Integrate for `total` time units and return the scalar solution
    /// `u(j·dt)` for `j = 0..=steps`, starting at the present of `u0`.
    pub fn scalar_series(&self, u0: &StateVector, total: f64) -> Result<Vec<f64>> {
        self.check_state(u0)?;
        let steps_f = total / self.cfg.dt;
        if (steps_f - steps_f.round()).abs() > 1e-9 * steps_f.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "recording time {total} is not a multiple of dt {}",
                self.cfg.dt
            )));
        }
        check_finite(&u0.values, 0)?;
        let steps = steps_f.round() as usize;
        let (mut window, seam_left) = self.make_window(u0);
        let mut series = Vec::with_capacity(steps + 1);
        series.push(window[self.n_h].0);
        for step in 0..steps {
            let u_new = self.step_window(&mut window, self.seam_for_step(step, seam_left));
            if !u_new.is_finite() || u_new.abs() > super::BLOWUP_THRESHOLD {
                return Err(Error::IntegrationDiverged {
                    step: step + 1,
                    threshold: super::BLOWUP_THRESHOLD,
                });
            }
            series.push(u_new);
        }
        Ok(series)
    }

    /// Equilibrium value `(β/γ - 1)^(1/η)` when it exists.
    pub fn equilibrium(&self) -> Option<f64> {
        let r = self.cfg.beta / self.cfg.gamma - 1.0;
        (r > 0.0).then(|| r.powf(1.0 / self.cfg.eta))
    }
}
