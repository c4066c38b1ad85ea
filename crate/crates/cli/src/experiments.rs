//! One function per experiment kind. Each returns a [`Table`] with rows in a
//! fixed order plus a JSON summary for the manifest.

use std::f64::consts::FRAC_PI_2;

use ramsey_core::{
    combination_plan, crb_uncertainty, evaluate_plan_on, fisher_information, largest_ladder_within,
    lindblad_ramsey_oracle, optimal_operating_point, optimize_combination, p_excited,
    plan_posterior, Correlation, CrbQuery, EvalMode, ProbePulseConfig, SchemePlan,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::table::{Cell, Table};

pub struct ExperimentOutput {
    pub table: Table,
    pub summary: Value,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> ramsey_core::Result<ExperimentOutput> {
    match cfg.kind() {
        ExperimentKind::CrbSweep => crb_sweep(cfg),
        ExperimentKind::Posterior => posterior(cfg),
        ExperimentKind::SchemeOpt => scheme_opt(cfg),
        ExperimentKind::MonteCarlo => monte_carlo(cfg),
        ExperimentKind::OracleCheck => oracle_check(cfg),
    }
}

/// Bound at the quadrature point NΔt = π/2 with ν = T/t (uncorrelated:
/// N·T/t single-atom shots).
fn quadrature_crb(
    n: u32,
    correlation: Correlation,
    gamma: f64,
    t: f64,
    total: f64,
) -> ramsey_core::Result<f64> {
    let size = match correlation {
        Correlation::Uncorrelated => 1,
        Correlation::Ghz => n,
    };
    let cfg = ProbePulseConfig {
        n_atoms: size,
        correlation,
        omega0: FRAC_PI_2 / (f64::from(size) * t),
        omega_ref: 0.0,
        t_interrogation: t,
        phase_offset: 0.0,
        gamma,
    };
    crb_uncertainty(&CrbQuery {
        cfg,
        total_time: total,
        n_total: n,
    })
}

/// Optimal-t bound for γ > 0; without dephasing the bound keeps falling with
/// t, so the longest admissible t = T is used.
pub fn crb_min(n: u32, gamma: f64, total: f64) -> ramsey_core::Result<f64> {
    if gamma > 0.0 {
        Ok(optimal_operating_point(n, Correlation::Uncorrelated, gamma, total)?.min_uncertainty)
    } else {
        quadrature_crb(n, Correlation::Uncorrelated, 0.0, total, total)
    }
}

fn crb_sweep(cfg: &ExperimentConfig) -> ramsey_core::Result<ExperimentOutput> {
    let (t, total) = (cfg.interrogation_time, cfg.total_time);
    let keys: Vec<(f64, u32)> = cfg
        .gammas
        .iter()
        .flat_map(|&g| (cfg.n_min..=cfg.n_max).map(move |n| (g, n)))
        .collect();
    let rows = keys
        .par_iter()
        .map(|&(g, n)| {
            Ok(vec![
                Cell::Int(n.into()),
                Cell::Float(g),
                Cell::Float(quadrature_crb(n, Correlation::Uncorrelated, g, t, total)?),
                Cell::Float(quadrature_crb(n, Correlation::Ghz, g, t, total)?),
                Cell::Float(crb_min(n, g, total)?),
            ])
        })
        .collect::<ramsey_core::Result<Vec<_>>>()?;
    Ok(ExperimentOutput {
        table: Table::new(
            &["N", "gamma", "crb_uncorrelated", "crb_ghz", "crb_min"],
            rows,
        ),
        summary: json!({ "points": keys.len() }),
    })
}

fn posterior(cfg: &ExperimentConfig) -> ramsey_core::Result<ExperimentOutput> {
    let plan = cfg.scheme.build(cfg.params(cfg.gamma))?;
    let window = cfg.prior_window().map_err(|e| ramsey_core::Error::Domain {
        field: "window",
        reason: e.to_string(),
    })?;
    let mode = if cfg.sampled {
        EvalMode::Sampled { seed: cfg.seed }
    } else {
        EvalMode::Asymptotic
    };
    let post = plan_posterior(&plan, &window, cfg.omega_true(), mode)?.normalize()?;
    let density = post.density()?;
    let report = post.report()?;
    let rows = window
        .nodes()
        .zip(density)
        .map(|(w, d)| vec![Cell::Float(w), Cell::Float(d)])
        .collect();
    Ok(ExperimentOutput {
        table: Table::new(&["omega0", "posterior_density"], rows),
        summary: json!({ "total_atoms": plan.total_atoms, "report": report }),
    })
}

fn scheme_opt(cfg: &ExperimentConfig) -> ramsey_core::Result<ExperimentOutput> {
    let params = cfg.params(cfg.gamma);
    let window =
        ramsey_core::PriorWindow::from_half_period(params.prior_half_period, cfg.grid_points)?;
    let omega = params.design_frequency();
    let budgets: Vec<u32> = (cfg.budget_min..=cfg.budget_max).collect();
    let rows = budgets
        .par_iter()
        .map(|&n_t| {
            let best = optimize_combination(n_t, params, cfg.n_e_max, cfg.grid_points)?;
            let pure = combination_plan(n_t, 1, 0, params)?;
            let shot = evaluate_plan_on(&pure, &window, omega, EvalMode::Asymptotic)?;
            let ladder = largest_ladder_within(n_t, params)?;
            let ladder = evaluate_plan_on(&ladder, &window, omega, EvalMode::Asymptotic)?;
            Ok(vec![
                Cell::Int(n_t.into()),
                Cell::Int(best.n_u.into()),
                Cell::Int(best.n_e.into()),
                Cell::Int(best.p_copies.into()),
                Cell::Float(best.report.posterior_std),
                Cell::Float(shot.posterior_std),
                Cell::Float(ladder.posterior_std),
            ])
        })
        .collect::<ramsey_core::Result<Vec<_>>>()?;
    Ok(ExperimentOutput {
        table: Table::new(
            &[
                "N_T",
                "best_n_u",
                "best_n_e",
                "best_p",
                "posterior_std",
                "shotnoise_baseline",
                "ladder_std",
            ],
            rows,
        ),
        summary: json!({ "budgets": budgets.len(), "gamma": cfg.gamma }),
    })
}

/// Seed of trial `i`; distinct trials never share a ChaCha key.
pub fn trial_seed(seed: u64, trial: u32) -> u64 {
    seed.wrapping_add(u64::from(trial).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// 1/√(ν ΣF) over the plan's blocks at `omega`.
pub fn plan_crb(plan: &SchemePlan, omega: f64) -> ramsey_core::Result<f64> {
    let mut info = 0.0;
    for b in &plan.blocks {
        let cfg = ProbePulseConfig {
            n_atoms: b.n_atoms,
            correlation: b.correlation,
            omega0: omega,
            omega_ref: 0.0,
            t_interrogation: plan.interrogation_time,
            phase_offset: b.phase_offset,
            gamma: plan.gamma,
        };
        info += b.repetitions * fisher_information(&cfg)?.value;
    }
    if info > 0.0 {
        Ok(info.sqrt().recip())
    } else {
        Err(ramsey_core::Error::UnboundedUncertainty)
    }
}

fn monte_carlo(cfg: &ExperimentConfig) -> ramsey_core::Result<ExperimentOutput> {
    let plan = cfg.scheme.build(cfg.params(cfg.gamma))?;
    let window = cfg.prior_window().map_err(|e| ramsey_core::Error::Domain {
        field: "window",
        reason: e.to_string(),
    })?;
    let omega = cfg.omega_true();
    let reports = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mode = EvalMode::Sampled {
                seed: trial_seed(cfg.seed, i),
            };
            evaluate_plan_on(&plan, &window, omega, mode)
        })
        .collect::<ramsey_core::Result<Vec<_>>>()?;
    let n = reports.len() as f64;
    let rmse = (reports
        .iter()
        .map(|r| (r.estimate - omega).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let mean_std = reports.iter().map(|r| r.posterior_std).sum::<f64>() / n;
    let ambiguous = reports.iter().filter(|r| r.ambiguous).count();
    let crb = plan_crb(&plan, omega).ok();
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                Cell::Int(i as u64),
                Cell::Float(r.estimate),
                Cell::Float(r.estimate - omega),
                Cell::Float(r.half_width),
                Cell::Float(r.posterior_std),
                Cell::Bool(r.ambiguous),
            ]
        })
        .collect();
    Ok(ExperimentOutput {
        table: Table::new(
            &[
                "trial",
                "estimate",
                "error",
                "half_width",
                "posterior_std",
                "ambiguous",
            ],
            rows,
        ),
        summary: json!({
            "omega_true": omega,
            "rmse": rmse,
            "crb": crb,
            "mean_posterior_std": mean_std,
            "ambiguous_trials": ambiguous,
        }),
    })
}

/// Random (Δ, γ, t) drawn from the seed; Δ ∈ [−5, 5], γ ∈ [0, 2],
/// t ∈ [0.05, 3].
pub fn oracle_points(seed: u64, count: u32) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                rng.random_range(-5.0..=5.0),
                rng.random_range(0.0..=2.0),
                rng.random_range(0.05..=3.0),
            )
        })
        .collect()
}

fn oracle_check(cfg: &ExperimentConfig) -> ramsey_core::Result<ExperimentOutput> {
    let points = oracle_points(cfg.seed, cfg.points);
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, &(delta, gamma, t))| {
            let probe = ProbePulseConfig::single(delta, t).with_gamma(gamma);
            let closed = p_excited(&probe)?;
            let oracle = lindblad_ramsey_oracle(&probe)?;
            Ok(vec![
                Cell::Int(i as u64),
                Cell::Float(delta),
                Cell::Float(gamma),
                Cell::Float(t),
                Cell::Float(closed),
                Cell::Float(oracle),
                Cell::Float((closed - oracle).abs()),
            ])
        })
        .collect::<ramsey_core::Result<Vec<_>>>()?;
    let max_diff = rows
        .iter()
        .filter_map(|r: &Vec<Cell>| match r[6] {
            Cell::Float(d) => Some(d),
            _ => None,
        })
        .fold(0.0, f64::max);
    Ok(ExperimentOutput {
        table: Table::new(
            &[
                "index",
                "delta",
                "gamma",
                "t",
                "closed_form",
                "oracle",
                "abs_diff",
            ],
            rows,
        ),
        summary: json!({ "max_abs_diff": max_diff }),
    })
}
