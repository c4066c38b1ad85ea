use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use ramsey_core::{
    combination_plan, evaluate_plan, evaluate_plan_on, feedback_phase, geometric_ladder,
    optimize_combination, p_excited, plan_posterior, quadrature_phase, EvalMode, PriorWindow,
    ProbePulseConfig, SchemeParams,
};

fn full_period() -> PriorWindow {
    PriorWindow::new(-PI, PI, 10_000).unwrap()
}

#[test]
fn ideal_ladder_keeps_only_the_central_peak() {
    for nu in [10.0, 100.0] {
        for p in 1..=5 {
            let plan = geometric_ladder(p, SchemeParams::unit(nu, 0.0)).unwrap();
            // Full period around zero, and the design frequency inside [0, π/L].
            let cases = [
                (full_period(), 0.0),
                (plan.prior_window(10_000).unwrap(), FRAC_PI_2),
            ];
            for (window, omega) in cases {
                let r = evaluate_plan_on(&plan, &window, omega, EvalMode::Asymptotic).unwrap();
                assert_eq!(
                    r.peak_positions.len(),
                    1,
                    "ν={nu} p={p} ω={omega}: {:?}",
                    r.peak_positions
                );
                assert!(!r.ambiguous);
                assert!(
                    (r.estimate - omega).abs() < 1e-3,
                    "ν={nu} p={p} ω={omega}: {}",
                    r.estimate
                );
            }
        }
    }
}

/// Least-squares slope of log(std) against log(N_T).
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

#[test]
fn shot_noise_and_heisenberg_slopes() {
    let params = SchemeParams::unit(100.0, 0.0);
    let uncorrelated: Vec<(f64, f64)> = [4u32, 16, 64]
        .iter()
        .map(|&n| {
            let r = evaluate_plan(
                &combination_plan(n, 1, 0, params).unwrap(),
                FRAC_PI_2,
                EvalMode::Asymptotic,
            )
            .unwrap();
            (f64::from(n), r.posterior_std)
        })
        .collect();
    let slope = log_slope(&uncorrelated);
    assert!((slope + 0.5).abs() < 0.01, "shot-noise slope {slope}");

    let ladder: Vec<(f64, f64)> = (3..=6)
        .map(|p| {
            let plan = geometric_ladder(p, params).unwrap();
            let r = evaluate_plan(&plan, FRAC_PI_2, EvalMode::Asymptotic).unwrap();
            (f64::from(plan.total_atoms), r.posterior_std)
        })
        .collect();
    let slope = log_slope(&ladder);
    // Finite-ladder Fisher sum gives std ∝ 1/√(4^p − 1); the slope tends to −1.
    assert!((slope + 1.0).abs() < 0.1, "ladder slope {slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn optimizer_never_loses_to_pure_plan(n_total in 1u32..30, gamma in 0.0..0.15f64) {
        let params = SchemeParams::unit(100.0, gamma);
        let best = optimize_combination(n_total, params, 9, 2_000).unwrap();
        let window = PriorWindow::from_half_period(1.0, 2_000).unwrap();
        let pure = evaluate_plan_on(&combination_plan(n_total, 1, 0, params).unwrap(), &window, FRAC_PI_2, EvalMode::Asymptotic).unwrap();
        prop_assert!(best.report.posterior_std <= pure.posterior_std * (1.0 + 1e-12));
        prop_assert_eq!(best.n_u + best.p_copies * best.n_e, n_total);
        prop_assert!(!best.report.ambiguous || best.fallback);
    }
}

#[test]
fn optimized_width_degrades_with_dephasing() {
    for n_total in [10u32, 20, 40] {
        let stds: Vec<f64> = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2]
            .iter()
            .map(|&g| {
                optimize_combination(n_total, SchemeParams::unit(100.0, g), 15, 4_000)
                    .unwrap()
                    .report
                    .posterior_std
            })
            .collect();
        assert!(
            stds.windows(2).all(|w| w[0] <= w[1]),
            "N_T={n_total}: {stds:?}"
        );
    }
}

#[test]
fn single_atom_budget_has_no_entanglement() {
    let best = optimize_combination(1, SchemeParams::unit(100.0, 0.0), 15, 2_000).unwrap();
    assert_eq!((best.n_u, best.p_copies), (1, 0));
}

#[test]
fn sampled_error_matches_asymptotic_width() {
    let params = SchemeParams::unit(100.0, 0.0);
    let window = PriorWindow::from_half_period(1.0, 4_000).unwrap();
    let omega = FRAC_PI_2;
    for plan in [
        combination_plan(4, 1, 0, params).unwrap(),
        combination_plan(2, 3, 1, params).unwrap(),
        geometric_ladder(2, params).unwrap(),
    ] {
        let asymptotic = evaluate_plan_on(&plan, &window, omega, EvalMode::Asymptotic).unwrap();
        assert!(!asymptotic.ambiguous);
        let seeds = 1000u64;
        let mse = (0..seeds)
            .map(|s| {
                let r =
                    evaluate_plan_on(&plan, &window, omega, EvalMode::Sampled { seed: s }).unwrap();
                (r.estimate - omega).powi(2)
            })
            .sum::<f64>()
            / seeds as f64;
        let ratio = mse / asymptotic.posterior_std.powi(2);
        assert!(
            (ratio - 1.0).abs() < 0.15,
            "N_T={} ratio {ratio}",
            plan.total_atoms
        );
    }
}

#[test]
fn dephased_signal_leaves_a_flat_posterior() {
    let params = SchemeParams::unit(100.0, 5.0);
    let r = evaluate_plan(
        &combination_plan(3, 3, 1, params).unwrap(),
        FRAC_PI_2,
        EvalMode::Asymptotic,
    )
    .unwrap();
    assert!(r.ambiguous);
    let flat = PI / 12f64.sqrt();
    assert!(
        (r.posterior_std / flat - 1.0).abs() < 0.01,
        "{}",
        r.posterior_std
    );
}

#[test]
fn feedback_puts_next_probe_at_quadrature() {
    // Off-design frequency: after a first pass the feedback phase moves each
    // block's fringe back to P(e) = 1/2.
    let params = SchemeParams::unit(100.0, 0.0);
    let omega = 2.3;
    let plan = combination_plan(6, 3, 3, params).unwrap();
    let post = plan_posterior(
        &plan,
        &PriorWindow::from_half_period(1.0, 10_000).unwrap(),
        omega,
        EvalMode::Asymptotic,
    )
    .unwrap();
    for n in [1u32, 3, 5] {
        let fb = feedback_phase(&post, n, 1.0).unwrap();
        assert!(!fb.ambiguous);
        assert!(fb.phase > -PI && fb.phase <= PI);
        let cfg = if n == 1 {
            ProbePulseConfig::single(omega, 1.0)
        } else {
            ProbePulseConfig::ghz(n, omega, 1.0)
        };
        let p = p_excited(&cfg.with_phase(fb.phase)).unwrap();
        assert!(
            (p - 0.5).abs() < 0.5 * f64::from(n) * (fb.estimate - omega).abs() + 1e-9,
            "n={n} p={p}"
        );
    }
}

proptest! {
    #[test]
    fn quadrature_phase_is_wrapped(estimate in -10.0..10.0f64, n in 1u32..20, t in 0.1..3.0f64) {
        let phi = quadrature_phase(estimate, n, t);
        prop_assert!(phi > -PI && phi <= PI);
        let total = f64::from(n) * estimate * t + phi - FRAC_PI_2;
        let turns = total / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }
}
