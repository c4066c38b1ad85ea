//! Probe-allocation schemes that avoid the fringe-period ambiguity.
//!
//! Both schemes interrogate for t = L, the longest time a single atom can use
//! without ambiguity inside the prior window `[0, π/L)`, and repeat every
//! block ν = T/t times.
//!
//! * Geometric ladder: GHZ blocks of 1, 2, 4, …, 2^(p−1) atoms. Even blocks
//!   get a −π/2 readout phase so that at the design point ω₀t = π/2 every
//!   block sits at P(e) = 1/2.
//! * Combination: N_u single atoms plus p copies of an odd GHZ-N_e block.
//!   The single atoms pin down the fringe period, the GHZ copies sharpen it.
//!   [`optimize_combination`] brute-forces (N_u, N_e, p) for a fixed budget.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{PosteriorGrid, PrecisionReport, PriorWindow, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::probe::{Correlation, ProbePulseConfig};
use crate::sampler::{expected_record, sample_record, TrialSeed};

pub const DEFAULT_N_E_MAX: u32 = 15;

/// Relative margin a candidate must win by to displace an earlier one.
const TIE_TOLERANCE: f64 = 1e-9;

/// Timing and noise shared by every block of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Interrogation time t.
    pub interrogation_time: f64,
    /// Prior half-period L; the prior window is `[0, π/L)`.
    pub prior_half_period: f64,
    /// Total experimental time T.
    pub total_time: f64,
    pub gamma: f64,
}

impl SchemeParams {
    /// t = L = 1 with ν = `repetitions`.
    pub fn unit(repetitions: f64, gamma: f64) -> Self {
        Self {
            interrogation_time: 1.0,
            prior_half_period: 1.0,
            total_time: repetitions,
            gamma,
        }
    }

    pub fn repetitions(&self) -> f64 {
        self.total_time / self.interrogation_time
    }

    /// The frequency the schemes are designed around, ω₀ = π/(2L).
    pub fn design_frequency(&self) -> f64 {
        FRAC_PI_2 / self.prior_half_period
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("interrogation_time", self.interrogation_time),
            ("prior_half_period", self.prior_half_period),
            ("total_time", self.total_time),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(
                    field,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::domain("gamma", "must be non-negative and finite"));
        }
        if self.interrogation_time > self.prior_half_period {
            return Err(Error::domain(
                "interrogation_time",
                format!(
                    "t = {} exceeds the prior half-period L = {}; single atoms would be ambiguous",
                    self.interrogation_time, self.prior_half_period
                ),
            ));
        }
        if self.interrogation_time > self.total_time {
            return Err(Error::domain(
                "total_time",
                "shorter than one interrogation",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub n_atoms: u32,
    pub correlation: Correlation,
    pub phase_offset: f64,
    pub repetitions: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemePlan {
    pub blocks: Vec<Block>,
    /// Atoms consumed by one repetition cycle.
    pub total_atoms: u32,
    pub interrogation_time: f64,
    pub prior_half_period: f64,
    pub total_time: f64,
    pub gamma: f64,
}

impl SchemePlan {
    /// Builds a plan from arbitrary blocks, e.g. mixed GHZ sizes.
    pub fn from_blocks(blocks: Vec<Block>, params: SchemeParams) -> Result<Self> {
        params.validate()?;
        if blocks.is_empty() {
            return Err(Error::domain("blocks", "plan needs at least one block"));
        }
        for b in &blocks {
            if b.n_atoms < 1 || (b.correlation == Correlation::Uncorrelated && b.n_atoms != 1) {
                return Err(Error::domain(
                    "n_atoms",
                    format!("invalid block size {}", b.n_atoms),
                ));
            }
            if !(b.repetitions > 0.0) || !b.repetitions.is_finite() {
                return Err(Error::domain("repetitions", "must be positive and finite"));
            }
        }
        Ok(Self {
            total_atoms: blocks.iter().map(|b| b.n_atoms).sum(),
            blocks,
            interrogation_time: params.interrogation_time,
            prior_half_period: params.prior_half_period,
            total_time: params.total_time,
            gamma: params.gamma,
        })
    }

    pub fn params(&self) -> SchemeParams {
        SchemeParams {
            interrogation_time: self.interrogation_time,
            prior_half_period: self.prior_half_period,
            total_time: self.total_time,
            gamma: self.gamma,
        }
    }

    pub fn prior_window(&self, grid_points: usize) -> Result<PriorWindow> {
        PriorWindow::from_half_period(self.prior_half_period, grid_points)
    }

    /// Σ N² over blocks, weighted by repetitions: the ideal Fisher information
    /// per t² at the design point.
    pub fn ideal_fisher_weight(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.repetitions * f64::from(b.n_atoms).powi(2))
            .sum()
    }

    fn probe(&self, block: &Block, omega_true: f64) -> ProbePulseConfig {
        ProbePulseConfig {
            n_atoms: block.n_atoms,
            correlation: block.correlation,
            omega0: omega_true,
            omega_ref: 0.0,
            t_interrogation: self.interrogation_time,
            phase_offset: block.phase_offset,
            gamma: self.gamma,
        }
    }
}

fn block(n_atoms: u32, phase_offset: f64, repetitions: f64) -> Block {
    Block {
        n_atoms,
        correlation: if n_atoms == 1 {
            Correlation::Uncorrelated
        } else {
            Correlation::Ghz
        },
        phase_offset,
        repetitions,
    }
}

/// GHZ blocks of 2^k atoms for k = 0..p_levels.
pub fn geometric_ladder(p_levels: u32, params: SchemeParams) -> Result<SchemePlan> {
    if !(1..=31).contains(&p_levels) {
        return Err(Error::domain(
            "p_levels",
            format!("must be in 1..=31, got {p_levels}"),
        ));
    }
    let nu = params.repetitions();
    let blocks = (0..p_levels)
        .map(|k| {
            let n = 1u32 << k;
            let phase = if n.is_multiple_of(2) { -FRAC_PI_2 } else { 0.0 };
            block(n, phase, nu)
        })
        .collect();
    SchemePlan::from_blocks(blocks, params)
}

/// Largest ladder whose 2^p − 1 atoms fit in `budget`.
pub fn largest_ladder_within(budget: u32, params: SchemeParams) -> Result<SchemePlan> {
    if budget < 1 {
        return Err(Error::domain("budget", "need at least one atom"));
    }
    let p_levels = (u64::from(budget) + 1).ilog2();
    geometric_ladder(p_levels, params)
}

/// `n_u` single atoms plus `p_copies` GHZ blocks of odd size `n_e`.
pub fn combination_plan(
    n_u: u32,
    n_e: u32,
    p_copies: u32,
    params: SchemeParams,
) -> Result<SchemePlan> {
    if n_e.is_multiple_of(2) {
        return Err(Error::domain(
            "n_e",
            format!("GHZ block size must be odd, got {n_e}; even blocks are degenerate at the design point"),
        ));
    }
    if u64::from(n_u) + u64::from(p_copies) * u64::from(n_e) < 1 {
        return Err(Error::domain("n_u", "plan needs at least one atom"));
    }
    let nu = params.repetitions();
    let mut blocks = vec![block(1, 0.0, nu); n_u as usize];
    blocks.extend((0..p_copies).map(|_| Block {
        n_atoms: n_e,
        correlation: Correlation::Ghz,
        phase_offset: 0.0,
        repetitions: nu,
    }));
    SchemePlan::from_blocks(blocks, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EvalMode {
    /// Expected counts ν·P at the true frequency.
    Asymptotic,
    /// Binomial counts; block i draws from stream i of `seed`.
    Sampled { seed: u64 },
}

/// Posterior of `plan` over `window` for data generated at `omega_true`.
///
/// Records of blocks with the same probe setting are merged by adding counts
/// before accumulation.
pub fn plan_posterior(
    plan: &SchemePlan,
    window: &PriorWindow,
    omega_true: f64,
    mode: EvalMode,
) -> Result<PosteriorGrid> {
    window.validate()?;
    if !window.contains(omega_true) {
        return Err(Error::domain(
            "omega_true",
            format!(
                "{omega_true} lies outside the prior window [{}, {}]",
                window.lower, window.upper
            ),
        ));
    }
    let mut records = Vec::with_capacity(plan.blocks.len());
    for (i, b) in plan.blocks.iter().enumerate() {
        let cfg = plan.probe(b, omega_true);
        let rec = match mode {
            EvalMode::Asymptotic => expected_record(&cfg, b.repetitions)?,
            EvalMode::Sampled { seed } => {
                if b.repetitions.fract() != 0.0 {
                    return Err(Error::domain(
                        "repetitions",
                        format!("sampling needs whole repetitions, got {}", b.repetitions),
                    ));
                }
                sample_record(&cfg, b.repetitions as u64, TrialSeed::new(seed, i as u64))?
            }
        };
        records.push(rec);
    }
    PosteriorGrid::flat(*window)?.accumulate_all(&records)
}

/// Report over the plan's own prior window `[0, π/L)` at the default resolution.
pub fn evaluate_plan(
    plan: &SchemePlan,
    omega_true: f64,
    mode: EvalMode,
) -> Result<PrecisionReport> {
    let window = plan.prior_window(DEFAULT_GRID_POINTS)?;
    evaluate_plan_on(plan, &window, omega_true, mode)
}

pub fn evaluate_plan_on(
    plan: &SchemePlan,
    window: &PriorWindow,
    omega_true: f64,
    mode: EvalMode,
) -> Result<PrecisionReport> {
    plan_posterior(plan, window, omega_true, mode)?.report()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationChoice {
    pub n_u: u32,
    pub n_e: u32,
    pub p_copies: u32,
    pub plan: SchemePlan,
    pub report: PrecisionReport,
    /// No unambiguous candidate existed; this is the pure single-atom plan.
    pub fallback: bool,
    pub candidates: usize,
}

/// Exhaustive search over odd n_e ≤ `n_e_max` and p ≤ ⌊n_total/n_e⌋ with
/// n_u = n_total − p·n_e, scored by asymptotic posterior width at the design
/// frequency. Ambiguous candidates are skipped; ties keep the smaller n_e,
/// then the smaller p.
pub fn optimize_combination(
    n_total: u32,
    params: SchemeParams,
    n_e_max: u32,
    grid_points: usize,
) -> Result<CombinationChoice> {
    if n_total < 1 {
        return Err(Error::domain("n_total", "need at least one atom"));
    }
    if n_e_max < 1 {
        return Err(Error::domain("n_e_max", "must be at least 1"));
    }
    params.validate()?;
    let window = PriorWindow::from_half_period(params.prior_half_period, grid_points)?;
    let omega_true = params.design_frequency();

    let candidates: Vec<(u32, u32, u32)> = (1..=n_e_max)
        .step_by(2)
        .flat_map(|n_e| (0..=n_total / n_e).map(move |p| (n_total - p * n_e, n_e, p)))
        .collect();

    let evaluated: Vec<(SchemePlan, PrecisionReport)> = candidates
        .par_iter()
        .map(|&(n_u, n_e, p)| {
            let plan = combination_plan(n_u, n_e, p, params)?;
            let report = evaluate_plan_on(&plan, &window, omega_true, EvalMode::Asymptotic)?;
            Ok((plan, report))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<usize> = None;
    for (i, (_, report)) in evaluated.iter().enumerate() {
        if report.ambiguous {
            continue;
        }
        let wins = match best {
            None => true,
            Some(b) => report.posterior_std < evaluated[b].1.posterior_std * (1.0 - TIE_TOLERANCE),
        };
        if wins {
            best = Some(i);
        }
    }

    let count = candidates.len();
    match best {
        Some(i) => {
            let (n_u, n_e, p_copies) = candidates[i];
            let (plan, report) = evaluated[i].clone();
            Ok(CombinationChoice {
                n_u,
                n_e,
                p_copies,
                plan,
                report,
                fallback: false,
                candidates: count,
            })
        }
        None => {
            let plan = combination_plan(n_total, 1, 0, params)?;
            let report = evaluate_plan_on(&plan, &window, omega_true, EvalMode::Asymptotic)?;
            Ok(CombinationChoice {
                n_u: n_total,
                n_e: 1,
                p_copies: 0,
                plan,
                report,
                fallback: true,
                candidates: count,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPhase {
    /// Readout phase in (−π, π].
    pub phase: f64,
    pub estimate: f64,
    /// The posterior the estimate came from was ambiguous.
    pub ambiguous: bool,
}

/// Phase φ that puts N·ω̂·t + φ at π/2, reduced to (−π, π].
pub fn quadrature_phase(estimate: f64, n_atoms: u32, t: f64) -> f64 {
    wrap_phase(FRAC_PI_2 - f64::from(n_atoms) * estimate * t)
}

/// Readout phase for the next block of `n_atoms`, from the current posterior's
/// maximum.
pub fn feedback_phase(post: &PosteriorGrid, n_atoms: u32, t: f64) -> Result<FeedbackPhase> {
    if n_atoms < 1 {
        return Err(Error::domain("n_atoms", "need at least one atom"));
    }
    if !(t > 0.0) {
        return Err(Error::domain("t_interrogation", "must be positive"));
    }
    let report = post.report()?;
    Ok(FeedbackPhase {
        phase: quadrature_phase(report.estimate, n_atoms, t),
        estimate: report.estimate,
        ambiguous: report.ambiguous,
    })
}

fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}
