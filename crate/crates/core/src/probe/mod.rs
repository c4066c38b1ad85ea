//! Outcome probabilities of a Ramsey interrogation.
//!
//! A probe is either a single uncorrelated atom or an N-atom GHZ state. After
//! the second π/2 pulse the excited-state probability is
//!
//! ```text
//! P(e) = (1 + cos(N·Δ·t + φ) · exp(-N·γ·t)) / 2,    Δ = ω₀ − ω
//! ```
//!
//! which covers the ideal single atom (N = 1, γ = 0), the dephased single
//! atom, and the ideal and dephased GHZ probe. An ensemble of N uncorrelated
//! atoms is N independent draws of the single-atom probe, never one config
//! with `n_atoms = N`.
//!
//! [`lindblad`] integrates the single-atom master equation numerically and is
//! only used to cross-check the closed form.

mod lindblad;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lindblad::{lindblad_ramsey_oracle, lindblad_ramsey_state, DensityMatrix2};

/// How the atoms of one probe are prepared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    Uncorrelated,
    Ghz,
}

/// One interrogation setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePulseConfig {
    /// Probe size N. Always 1 for [`Correlation::Uncorrelated`].
    pub n_atoms: u32,
    pub correlation: Correlation,
    /// Transition frequency ω₀ (rad/time).
    pub omega0: f64,
    /// Driving-field frequency ω (rad/time).
    pub omega_ref: f64,
    pub t_interrogation: f64,
    /// Collective phase added before readout (rad).
    pub phase_offset: f64,
    /// Single-atom dephasing rate γ (1/time).
    pub gamma: f64,
}

impl ProbePulseConfig {
    /// Single uncorrelated atom, ideal, zero reference frequency and no offset.
    pub fn single(omega0: f64, t_interrogation: f64) -> Self {
        Self {
            n_atoms: 1,
            correlation: Correlation::Uncorrelated,
            omega0,
            omega_ref: 0.0,
            t_interrogation,
            phase_offset: 0.0,
            gamma: 0.0,
        }
    }

    /// GHZ probe of `n_atoms`, ideal, zero reference frequency and no offset.
    pub fn ghz(n_atoms: u32, omega0: f64, t_interrogation: f64) -> Self {
        Self {
            n_atoms,
            correlation: Correlation::Ghz,
            ..Self::single(omega0, t_interrogation)
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_phase(mut self, phase_offset: f64) -> Self {
        self.phase_offset = phase_offset;
        self
    }

    pub fn with_omega_ref(mut self, omega_ref: f64) -> Self {
        self.omega_ref = omega_ref;
        self
    }

    pub fn with_omega0(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn detuning(&self) -> f64 {
        self.omega0 - self.omega_ref
    }

    /// Collective fringe argument N·Δ·t + φ.
    pub fn fringe_phase(&self) -> f64 {
        f64::from(self.n_atoms) * self.detuning() * self.t_interrogation + self.phase_offset
    }

    /// Fringe contrast exp(-N·γ·t).
    pub fn contrast(&self) -> f64 {
        (-f64::from(self.n_atoms) * self.gamma * self.t_interrogation).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms < 1 {
            return Err(Error::domain("n_atoms", "probe size must be at least 1"));
        }
        if self.correlation == Correlation::Uncorrelated && self.n_atoms != 1 {
            return Err(Error::domain(
                "n_atoms",
                format!(
                    "uncorrelated probes are per-atom (got n_atoms = {}); use independent configs",
                    self.n_atoms
                ),
            ));
        }
        if !(self.t_interrogation > 0.0) || !self.t_interrogation.is_finite() {
            return Err(Error::domain(
                "t_interrogation",
                format!("must be positive and finite, got {}", self.t_interrogation),
            ));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::domain(
                "gamma",
                format!("must be non-negative and finite, got {}", self.gamma),
            ));
        }
        for (field, v) in [
            ("omega0", self.omega0),
            ("omega_ref", self.omega_ref),
            ("phase_offset", self.phase_offset),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(field, format!("must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Probability of reading out the excited state.
pub fn p_excited(cfg: &ProbePulseConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(p_excited_unchecked(cfg))
}

/// Probability of reading out the ground state, `1 - p_excited`.
pub fn p_ground(cfg: &ProbePulseConfig) -> Result<f64> {
    p_excited(cfg).map(|p| 1.0 - p)
}

pub(crate) fn p_excited_unchecked(cfg: &ProbePulseConfig) -> f64 {
    let p = 0.5 * (1.0 + cfg.fringe_phase().cos() * cfg.contrast());
    p.clamp(0.0, 1.0)
}
