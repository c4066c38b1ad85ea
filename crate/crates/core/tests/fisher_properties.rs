use std::f64::consts::{E, FRAC_PI_2, PI};

use proptest::prelude::*;
use ramsey_core::{
    crb_uncertainty, fisher_information, minimum_uncertainty_closed_form, optimal_operating_point,
    p_excited, Correlation, CrbQuery, ProbePulseConfig,
};

/// Σₓ (∂P(x)/∂ω₀)² / P(x) with central differences of the outcome
/// distribution, h = 1e-6·max(1, |ω₀|).
fn finite_difference_fisher(cfg: &ProbePulseConfig) -> f64 {
    let h = 1e-6 * cfg.omega0.abs().max(1.0);
    let up = p_excited(&cfg.with_omega0(cfg.omega0 + h)).unwrap();
    let down = p_excited(&cfg.with_omega0(cfg.omega0 - h)).unwrap();
    let p = p_excited(cfg).unwrap();
    let dp = (up - down) / (2.0 * h);
    dp * dp / p + dp * dp / (1.0 - p)
}

fn probe(n: u32, delta: f64, t: f64, gamma: f64) -> ProbePulseConfig {
    if n == 1 {
        ProbePulseConfig::single(delta, t).with_gamma(gamma)
    } else {
        ProbePulseConfig::ghz(n, delta, t).with_gamma(gamma)
    }
}

#[test]
fn analytic_fisher_matches_finite_differences_on_grid() {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..50 {
        for j in 0..50 {
            // Δt over (0, 2π), γt over [0, 2.45].
            let phase = 2.0 * PI * (f64::from(i) + 0.5) / 50.0;
            let decay = 0.05 * f64::from(j);
            let cfg = probe(1, phase, 1.0, decay);
            let p = p_excited(&cfg).unwrap();
            if p.min(1.0 - p) < 1e-3 || phase.sin().abs() < 1e-2 {
                continue;
            }
            let analytic = fisher_information(&cfg).unwrap();
            assert!(!analytic.degenerate);
            let rel = (analytic.value / finite_difference_fisher(&cfg) - 1.0).abs();
            worst = worst.max(rel);
            checked += 1;
        }
    }
    assert!(checked > 2000, "{checked}");
    assert!(worst < 1e-6, "worst relative error {worst:e}");
}

proptest! {
    #[test]
    fn ghz_fisher_matches_finite_differences(
        n in 2u32..12, phase in 0.1..3.0f64, t in 0.1..2.0f64, gamma in 0.0..0.2f64,
    ) {
        let cfg = probe(n, phase / (f64::from(n) * t), t, gamma);
        let p = p_excited(&cfg).unwrap();
        prop_assume!(p.min(1.0 - p) > 1e-3);
        let analytic = fisher_information(&cfg).unwrap().value;
        prop_assert!((analytic / finite_difference_fisher(&cfg) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fisher_peaks_at_half_probability(n in 1u32..8, t in 0.2..2.0f64, gamma in 0.01..1.0f64) {
        let at = |phase: f64| fisher_information(&probe(n, phase / (f64::from(n) * t), t, gamma)).unwrap().value;
        let best = at(FRAC_PI_2);
        let p = p_excited(&probe(n, FRAC_PI_2 / (f64::from(n) * t), t, gamma)).unwrap();
        prop_assert!((p - 0.5).abs() < 1e-12);
        for k in 1..200 {
            let phase = PI * f64::from(k) / 200.0;
            prop_assert!(at(phase) <= best * (1.0 + 1e-12), "phase {}", phase);
        }
    }

    #[test]
    fn ideal_bound_ignores_frequency(n in 1u32..20, delta in -5.0..5.0f64, t in 0.1..2.0f64, total in 10.0..200.0f64) {
        let cfg = probe(n, delta, t, 0.0);
        let q = CrbQuery { cfg, total_time: total, n_total: n };
        let nu = q.repetitions();
        let size = if n == 1 { 1.0 } else { f64::from(n) };
        let expect = 1.0 / (nu.sqrt() * size * t);
        prop_assert!((crb_uncertainty(&q).unwrap() / expect - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bound_grows_with_dephasing(n in 1u32..20, t in 0.1..2.0f64, g1 in 0.0..1.0f64, dg in 0.0..1.0f64) {
        let bound = |g: f64| {
            let cfg = probe(n, FRAC_PI_2 / (f64::from(n) * t), t, g);
            crb_uncertainty(&CrbQuery { cfg, total_time: 100.0, n_total: n }).unwrap()
        };
        prop_assert!(bound(g1) <= bound(g1 + dg));
    }
}

/// Brute-force minimum of the bound over a dense (t, Δ) grid followed by a
/// local refinement, used as an independent check on the golden section.
fn brute_force_minimum(n: u32, total: f64, gamma: f64) -> (f64, f64) {
    let bound = |t: f64, delta: f64| {
        let cfg = ProbePulseConfig::single(delta, t).with_gamma(gamma);
        crb_uncertainty(&CrbQuery {
            cfg,
            total_time: total,
            n_total: n,
        })
        .unwrap_or(f64::INFINITY)
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 1..=400 {
        let t = total * f64::from(i) / 400.0;
        for j in 1..40 {
            let delta = PI * f64::from(j) / 40.0 / t;
            let v = bound(t, delta);
            if v < best.0 {
                best = (v, t, delta);
            }
        }
    }
    let (mut v, mut t, mut d) = best;
    let (mut st, mut sd) = (total / 400.0, PI / 40.0 / t);
    for _ in 0..200 {
        let mut moved = false;
        for (dt, dd) in [(st, 0.0), (-st, 0.0), (0.0, sd), (0.0, -sd)] {
            let (nt, nd) = (t + dt, d + dd);
            if nt <= 0.0 || nt > total {
                continue;
            }
            let nv = bound(nt, nd);
            if nv < v {
                (v, t, d) = (nv, nt, nd);
                moved = true;
            }
        }
        if !moved {
            st /= 2.0;
            sd /= 2.0;
        }
    }
    (v, t)
}

#[test]
fn minimum_law_matches_brute_force() {
    for (n, total, gamma) in [(100u32, 100.0, 0.1), (10, 50.0, 0.05), (1, 20.0, 0.2)] {
        let law = (2.0 * gamma * E / (f64::from(n) * total)).sqrt();
        let (v, t) = brute_force_minimum(n, total, gamma);
        assert!(
            (v / law - 1.0).abs() < 1e-6,
            "{n} {total} {gamma}: {v} vs {law}"
        );
        assert!((t * 2.0 * gamma - 1.0).abs() < 1e-3, "t = {t}");
        let op = optimal_operating_point(n, Correlation::Uncorrelated, gamma, total).unwrap();
        assert!((op.min_uncertainty / law - 1.0).abs() < 1e-6);
        assert!(
            (op.min_uncertainty / minimum_uncertainty_closed_form(n, gamma, total) - 1.0).abs()
                < 1e-12
        );
    }
}

#[test]
fn ghz_and_uncorrelated_minima_coincide() {
    for (n, total, gamma) in [(100u32, 100.0, 0.1), (10, 50.0, 0.05), (3, 20.0, 0.2)] {
        let u = optimal_operating_point(n, Correlation::Uncorrelated, gamma, total).unwrap();
        let g = optimal_operating_point(n, Correlation::Ghz, gamma, total).unwrap();
        assert!((u.min_uncertainty - g.min_uncertainty).abs() < 1e-9);
        assert!((g.t_opt * 2.0 * gamma * f64::from(n) - 1.0).abs() < 1e-6);
    }
}
