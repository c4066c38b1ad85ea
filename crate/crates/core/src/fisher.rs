//! Fisher information of the two-outcome Ramsey readout and the Cramér–Rao
//! uncertainty it implies.
//!
//! With x = N·Δ·t + φ and c = exp(−N·γ·t),
//!
//! ```text
//! F(ω₀) = N²t² c² sin²x / (1 − c² cos²x)
//! δω₀  ≥ 1 / √(ν F)
//! ```
//!
//! where ν counts the repetitions: ν = n_total·T/t for an uncorrelated
//! ensemble (every atom is its own trial) and ν = T/t for a GHZ probe.

use std::f64::consts::{E, FRAC_PI_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::{p_excited_unchecked, Correlation, ProbePulseConfig};

/// Fisher information, with the degenerate fringe extrema reported explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherInfo {
    pub value: f64,
    /// The operating point sits where P(e) ∈ {0, 1} or sin(N·Δ·t + φ) = 0.
    /// `value` then holds the analytic limit: 0 for γ > 0, N²t² for γ = 0.
    pub degenerate: bool,
}

pub fn fisher_information(cfg: &ProbePulseConfig) -> Result<FisherInfo> {
    cfg.validate()?;
    let n = f64::from(cfg.n_atoms);
    let t = cfg.t_interrogation;
    let scale = n * n * t * t;
    let x = cfg.fringe_phase();
    let (s, c) = x.sin_cos();
    let p = p_excited_unchecked(cfg);
    let degenerate = p == 0.0 || p == 1.0 || s == 0.0;

    if cfg.gamma == 0.0 {
        return Ok(FisherInfo {
            value: scale,
            degenerate,
        });
    }
    if degenerate {
        return Ok(FisherInfo {
            value: 0.0,
            degenerate,
        });
    }
    let decay = -2.0 * n * cfg.gamma * t;
    let contrast_sq = decay.exp();
    // 1 − c²cos²x written without cancellation.
    let denom = s * s + c * c * (-decay.exp_m1());
    Ok(FisherInfo {
        value: scale * contrast_sq * s * s / denom,
        degenerate,
    })
}

/// Model point plus the experiment-level resources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbQuery {
    pub cfg: ProbePulseConfig,
    /// Total experimental duration T.
    pub total_time: f64,
    /// Atoms per shot. Multiplies the repetitions of uncorrelated probes;
    /// ignored for GHZ probes, whose size is `cfg.n_atoms`.
    pub n_total: u32,
}

impl CrbQuery {
    pub fn repetitions(&self) -> f64 {
        let shots = self.total_time / self.cfg.t_interrogation;
        match self.cfg.correlation {
            Correlation::Uncorrelated => f64::from(self.n_total) * shots,
            Correlation::Ghz => shots,
        }
    }

    fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if !(self.total_time > 0.0) || !self.total_time.is_finite() {
            return Err(Error::domain("total_time", "must be positive and finite"));
        }
        if self.cfg.t_interrogation > self.total_time {
            return Err(Error::domain(
                "t_interrogation",
                format!(
                    "interrogation time {} exceeds total time {}",
                    self.cfg.t_interrogation, self.total_time
                ),
            ));
        }
        if self.n_total < 1 {
            return Err(Error::domain("n_total", "need at least one atom"));
        }
        Ok(())
    }
}

/// Cramér–Rao bound 1/√(ν F).
pub fn crb_uncertainty(q: &CrbQuery) -> Result<f64> {
    q.validate()?;
    let f = fisher_information(&q.cfg)?;
    if !(f.value > 0.0) {
        return Err(Error::UnboundedUncertainty);
    }
    Ok(1.0 / (q.repetitions() * f.value).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub t_opt: f64,
    /// Fringe argument N·Δ·t at the optimum (π/2 modulo π).
    pub fringe_phase: f64,
    pub detuning: f64,
    pub min_uncertainty: f64,
    /// The unconstrained optimum lies beyond `total_time`; `t_opt = total_time`.
    pub at_boundary: bool,
}

/// Minimizes the dephased Cramér–Rao bound over the interrogation time and
/// detuning.
///
/// The detuning optimum is analytic (the fringe sits at quadrature,
/// N·Δ·t = π/2), so only t is searched, by golden section over (0, T].
/// For uncorrelated ensembles `n_atoms` is the ensemble size and each probe is
/// a single atom; for GHZ it is the probe size.
pub fn optimal_operating_point(
    n_atoms: u32,
    correlation: Correlation,
    gamma: f64,
    total_time: f64,
) -> Result<OperatingPoint> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain(
            "gamma",
            "optimal interrogation time needs a positive dephasing rate",
        ));
    }
    if n_atoms < 1 {
        return Err(Error::domain("n_atoms", "need at least one atom"));
    }
    if !(total_time > 0.0) || !total_time.is_finite() {
        return Err(Error::domain("total_time", "must be positive and finite"));
    }
    let probe_size = match correlation {
        Correlation::Uncorrelated => 1,
        Correlation::Ghz => n_atoms,
    };
    let n = f64::from(probe_size);

    let uncertainty_at = |t: f64| -> f64 {
        let detuning = FRAC_PI_2 / (n * t);
        let cfg = ProbePulseConfig {
            n_atoms: probe_size,
            correlation,
            omega0: detuning,
            omega_ref: 0.0,
            t_interrogation: t,
            phase_offset: 0.0,
            gamma,
        };
        let q = CrbQuery {
            cfg,
            total_time,
            n_total: n_atoms,
        };
        crb_uncertainty(&q).unwrap_or(f64::INFINITY)
    };

    let t_opt = golden_section_min(uncertainty_at, 0.0, total_time, 1e-13 * total_time);
    // The bound is log-convex in t, so a minimizer hugging T means the
    // interior optimum is out of reach.
    let at_boundary = total_time < 1.0 / (2.0 * gamma * n);
    let t_opt = if at_boundary { total_time } else { t_opt };
    Ok(OperatingPoint {
        t_opt,
        fringe_phase: FRAC_PI_2,
        detuning: FRAC_PI_2 / (n * t_opt),
        min_uncertainty: uncertainty_at(t_opt),
        at_boundary,
    })
}

/// Closed-form minimum √(2γe/(N·T)), shared by uncorrelated and GHZ probes.
pub fn minimum_uncertainty_closed_form(n_atoms: u32, gamma: f64, total_time: f64) -> f64 {
    (2.0 * gamma * E / (f64::from(n_atoms) * total_time)).sqrt()
}

fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    if f(hi) < f(mid) {
        hi
    } else {
        mid
    }
}
