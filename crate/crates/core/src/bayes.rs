//! Grid posterior over the transition frequency.
//!
//! The prior is flat on a bounded window, which is also the hard support of
//! the posterior. Each [`MeasurementRecord`] contributes
//! `count_e · ln P(e|ω₀) + count_g · ln P(g|ω₀)` to the log-weights at every
//! grid point, so accumulation commutes and identical records can be merged
//! by adding their counts. Normalization and quadrature use the trapezoidal
//! rule on the grid nodes, which include both window edges.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::ProbePulseConfig;

/// Mass inside the symmetric credible interval.
pub const CREDIBLE_MASS: f64 = 0.6827;
pub const DEFAULT_GRID_POINTS: usize = 10_000;
pub const MIN_GRID_POINTS: usize = 1_000;
/// Secondary peaks at or above this fraction of the global maximum make the
/// estimate ambiguous.
pub const PEAK_FRACTION: f64 = 0.5;
/// The credible mass must be reached within this many main-mode widths.
pub const MODE_WIDTHS: f64 = 3.0;

/// Bounded prior knowledge `[lower, upper]`, discretized into `grid_points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorWindow {
    pub lower: f64,
    pub upper: f64,
    pub grid_points: usize,
}

impl PriorWindow {
    pub fn new(lower: f64, upper: f64, grid_points: usize) -> Result<Self> {
        let w = Self {
            lower,
            upper,
            grid_points,
        };
        w.validate()?;
        Ok(w)
    }

    /// The window `[0, π/L)` implied by a prior half-period L.
    pub fn from_half_period(prior_half_period: f64, grid_points: usize) -> Result<Self> {
        if !(prior_half_period > 0.0) {
            return Err(Error::domain("prior_half_period", "must be positive"));
        }
        Self::new(0.0, PI / prior_half_period, grid_points)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lower.is_finite() || !self.upper.is_finite() || !(self.upper > self.lower) {
            return Err(Error::domain(
                "window",
                format!(
                    "need finite lower < upper, got [{}, {}]",
                    self.lower, self.upper
                ),
            ));
        }
        if self.grid_points < MIN_GRID_POINTS {
            return Err(Error::domain(
                "grid_points",
                format!("need at least {MIN_GRID_POINTS}, got {}", self.grid_points),
            ));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn spacing(&self) -> f64 {
        self.width() / (self.grid_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.grid_points {
            self.upper
        } else {
            self.lower + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.grid_points).map(move |i| self.node(i))
    }

    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.lower && omega <= self.upper
    }
}

/// Outcome counts for one probe configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Probe setting; `omega0` is the value the data were taken at and is
    /// replaced by each grid point during accumulation.
    pub cfg: ProbePulseConfig,
    pub count_excited: f64,
    pub count_ground: f64,
    /// Counts are expectations ν·P rather than observed integers.
    pub asymptotic: bool,
}

impl MeasurementRecord {
    pub fn observed(cfg: ProbePulseConfig, count_excited: u64, count_ground: u64) -> Self {
        Self {
            cfg,
            count_excited: count_excited as f64,
            count_ground: count_ground as f64,
            asymptotic: false,
        }
    }

    pub fn expected(cfg: ProbePulseConfig, count_excited: f64, count_ground: f64) -> Self {
        Self {
            cfg,
            count_excited,
            count_ground,
            asymptotic: true,
        }
    }

    pub fn repetitions(&self) -> f64 {
        self.count_excited + self.count_ground
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        for (field, c) in [
            ("count_excited", self.count_excited),
            ("count_ground", self.count_ground),
        ] {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::domain(
                    field,
                    format!("must be finite and >= 0, got {c}"),
                ));
            }
            if !self.asymptotic && c.fract() != 0.0 {
                return Err(Error::domain(
                    field,
                    format!("non-integer count {c} on a record not flagged asymptotic"),
                ));
            }
        }
        Ok(())
    }

    /// Same probe setting, so the two records can share one likelihood term.
    pub fn same_setting(&self, other: &Self) -> bool {
        let (a, b) = (&self.cfg, &other.cfg);
        a.n_atoms == b.n_atoms
            && a.correlation == b.correlation
            && a.omega_ref == b.omega_ref
            && a.t_interrogation == b.t_interrogation
            && a.phase_offset == b.phase_offset
            && a.gamma == b.gamma
    }
}

/// Discretized posterior. `log_weights` are unnormalized until
/// [`PosteriorGrid::normalize`] is called, after which `exp(log_weights)` is a
/// density whose trapezoidal integral over the window is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGrid {
    pub window: PriorWindow,
    pub log_weights: Vec<f64>,
    pub normalized: bool,
}

impl PosteriorGrid {
    /// Flat prior over the window.
    pub fn flat(window: PriorWindow) -> Result<Self> {
        window.validate()?;
        Ok(Self {
            window,
            log_weights: vec![0.0; window.grid_points],
            normalized: false,
        })
    }

    /// Adds the log-likelihood of `record` pointwise. Zero counts contribute
    /// nothing even where the outcome probability vanishes.
    pub fn accumulate(mut self, record: &MeasurementRecord) -> Result<Self> {
        record.validate()?;
        let cfg = &record.cfg;
        let n = f64::from(cfg.n_atoms);
        let t = cfg.t_interrogation;
        let contrast = cfg.contrast();
        let (ce, cg) = (record.count_excited, record.count_ground);
        for (lw, omega) in self.log_weights.iter_mut().zip(self.window.nodes()) {
            let c = contrast * (n * (omega - cfg.omega_ref) * t + cfg.phase_offset).cos();
            let mut term = 0.0;
            if ce > 0.0 {
                term += ce * (0.5 * (1.0 + c)).ln();
            }
            if cg > 0.0 {
                term += cg * (0.5 * (1.0 - c)).ln();
            }
            *lw += term;
        }
        self.normalized = false;
        Ok(self)
    }

    /// Accumulates a batch. Records sharing a probe setting are pooled by
    /// adding counts first, so k copies of a record give exactly the same
    /// weights as one record with k times the counts.
    pub fn accumulate_all<'a>(
        self,
        records: impl IntoIterator<Item = &'a MeasurementRecord>,
    ) -> Result<Self> {
        let mut pooled: Vec<MeasurementRecord> = Vec::new();
        for r in records {
            r.validate()?;
            match pooled.iter_mut().find(|g| g.same_setting(r)) {
                Some(g) => {
                    g.count_excited += r.count_excited;
                    g.count_ground += r.count_ground;
                    g.asymptotic |= r.asymptotic;
                }
                None => pooled.push(*r),
            }
        }
        pooled.iter().try_fold(self, |post, r| post.accumulate(r))
    }

    /// Pointwise sum of log-weights of two posteriors over the same window.
    pub fn merge(mut self, other: &PosteriorGrid) -> Result<Self> {
        if self.window != other.window {
            return Err(Error::domain(
                "window",
                "cannot merge posteriors over different grids",
            ));
        }
        for (a, b) in self.log_weights.iter_mut().zip(&other.log_weights) {
            *a += *b;
        }
        self.normalized = false;
        Ok(self)
    }

    pub fn normalize(mut self) -> Result<Self> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::InconsistentData);
        }
        let h = self.window.spacing();
        let shifted: Vec<f64> = self.log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let log_z = trapezoid(&shifted, h).ln();
        for lw in &mut self.log_weights {
            *lw -= max + log_z;
        }
        self.normalized = true;
        Ok(self)
    }

    /// Normalized density at each grid node.
    pub fn density(&self) -> Result<Vec<f64>> {
        let post = if self.normalized {
            self.clone()
        } else {
            self.clone().normalize()?
        };
        Ok(post.log_weights.iter().map(|lw| lw.exp()).collect())
    }

    pub fn report(&self) -> Result<PrecisionReport> {
        let density = self.density()?;
        Ok(summarize(&self.window, &density))
    }
}

/// Point estimate and uncertainty extracted from a posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    /// Maximum a posteriori; ties go to the node nearest the window center.
    pub estimate: f64,
    /// Half-width of the symmetric interval around `estimate` holding
    /// [`CREDIBLE_MASS`].
    pub half_width: f64,
    pub ambiguous: bool,
    /// Local maxima reaching [`PEAK_FRACTION`] of the global maximum.
    pub peak_positions: Vec<f64>,
    pub posterior_std: f64,
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Running trapezoidal integral with exact integration of the linear
/// interpolant inside a cell.
struct Cumulative<'a> {
    window: &'a PriorWindow,
    density: &'a [f64],
    at_node: Vec<f64>,
}

impl<'a> Cumulative<'a> {
    fn new(window: &'a PriorWindow, density: &'a [f64]) -> Self {
        let h = window.spacing();
        let mut at_node = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        at_node.push(0.0);
        for pair in density.windows(2) {
            acc += 0.5 * h * (pair[0] + pair[1]);
            at_node.push(acc);
        }
        Self {
            window,
            density,
            at_node,
        }
    }

    fn at(&self, x: f64) -> f64 {
        let w = self.window;
        let x = x.clamp(w.lower, w.upper);
        let h = w.spacing();
        let last = self.density.len() - 1;
        let i = (((x - w.lower) / h).floor() as usize).min(last - 1);
        let u = (x - w.node(i)).clamp(0.0, h);
        let (a, b) = (self.density[i], self.density[i + 1]);
        self.at_node[i] + a * u + (b - a) * u * u / (2.0 * h)
    }

    fn mass(&self, lo: f64, hi: f64) -> f64 {
        self.at(hi) - self.at(lo)
    }
}

fn summarize(window: &PriorWindow, density: &[f64]) -> PrecisionReport {
    let center = window.center();
    let mut best = 0usize;
    for (i, &d) in density.iter().enumerate() {
        let better = d > density[best]
            || (d == density[best]
                && (window.node(i) - center).abs() < (window.node(best) - center).abs());
        if better {
            best = i;
        }
    }
    let estimate = window.node(best);
    let peak = density[best];

    let h = window.spacing();
    let mean = trapezoid(
        &density
            .iter()
            .zip(window.nodes())
            .map(|(d, x)| d * x)
            .collect::<Vec<_>>(),
        h,
    );
    let second = trapezoid(
        &density
            .iter()
            .zip(window.nodes())
            .map(|(d, x)| d * (x - mean) * (x - mean))
            .collect::<Vec<_>>(),
        h,
    );
    let posterior_std = second.max(0.0).sqrt();

    let cumulative = Cumulative::new(window, density);
    let reach = (estimate - window.lower).max(window.upper - estimate);
    let half_width = smallest_half_width(&cumulative, estimate, reach, CREDIBLE_MASS);

    let peak_positions = significant_peaks(window, density, peak);
    let (mode_lo, mode_hi) = half_max_span(window, density, best, peak);
    let unlocalized = mode_lo <= window.lower && mode_hi >= window.upper;
    // FWHM of a Gaussian is 2√(2 ln 2) σ.
    let mode_sigma = (mode_hi - mode_lo) / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let reach_mode = MODE_WIDTHS * mode_sigma;
    let mode_mass = cumulative.mass(estimate - reach_mode, estimate + reach_mode);

    let ambiguous = peak_positions.len() > 1 || unlocalized || mode_mass < CREDIBLE_MASS;

    PrecisionReport {
        estimate,
        half_width,
        ambiguous,
        peak_positions,
        posterior_std,
    }
}

fn smallest_half_width(cum: &Cumulative<'_>, estimate: f64, reach: f64, target: f64) -> f64 {
    let mass = |d: f64| cum.mass(estimate - d, estimate + d);
    if mass(reach) < target {
        return reach;
    }
    let (mut lo, mut hi) = (0.0, reach);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * reach.max(1.0) {
            break;
        }
    }
    hi
}

/// Local maxima on the raw grid (3-point neighborhood; a run of equal values
/// counts once) that reach `PEAK_FRACTION` of the global maximum.
fn significant_peaks(window: &PriorWindow, density: &[f64], peak: f64) -> Vec<f64> {
    let n = density.len();
    let mut out = Vec::new();
    let mut j = 0;
    while j < n {
        let mut k = j;
        while k + 1 < n && density[k + 1] == density[j] {
            k += 1;
        }
        let v = density[j];
        let left_lower = j == 0 || density[j - 1] < v;
        let right_lower = k + 1 == n || density[k + 1] < v;
        if left_lower && right_lower && v >= PEAK_FRACTION * peak {
            out.push(0.5 * (window.node(j) + window.node(k)));
        }
        j = k + 1;
    }
    out
}

/// Interpolated half-maximum crossings around the node `best`.
fn half_max_span(window: &PriorWindow, density: &[f64], best: usize, peak: f64) -> (f64, f64) {
    let half = 0.5 * peak;
    let crossing = |inside: usize, outside: usize| -> f64 {
        let (a, b) = (density[inside], density[outside]);
        let frac = if a == b { 0.0 } else { (a - half) / (a - b) };
        window.node(inside) + frac * (window.node(outside) - window.node(inside))
    };
    let mut lo = best;
    while lo > 0 && density[lo - 1] >= half {
        lo -= 1;
    }
    let mut hi = best;
    while hi + 1 < density.len() && density[hi + 1] >= half {
        hi += 1;
    }
    let left = if lo == 0 {
        window.lower
    } else {
        crossing(lo, lo - 1)
    };
    let right = if hi + 1 == density.len() {
        window.upper
    } else {
        crossing(hi, hi + 1)
    };
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid_from_fn(window: PriorWindow, f: impl Fn(f64) -> f64) -> PosteriorGrid {
        PosteriorGrid {
            window,
            log_weights: window.nodes().map(f).collect(),
            normalized: false,
        }
    }

    #[test]
    fn window_validation() {
        assert!(PriorWindow::new(1.0, 0.0, 2000).is_err());
        assert!(PriorWindow::new(0.0, 1.0, 999).is_err());
        let w = PriorWindow::new(-1.0, 1.0, 1001).unwrap();
        assert_eq!(w.node(0), -1.0);
        assert_eq!(w.node(1000), 1.0);
        assert_relative_eq!(w.node(500), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn normalization_integrates_to_one() {
        let w = PriorWindow::new(0.0, PI, 4000).unwrap();
        let g = grid_from_fn(w, |x| 30.0 * x.sin().ln())
            .normalize()
            .unwrap();
        let d: Vec<f64> = g.log_weights.iter().map(|l| l.exp()).collect();
        assert!((trapezoid(&d, w.spacing()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_half_width_is_one_sigma() {
        let sigma = 0.01;
        let w = PriorWindow::new(0.0, PI, DEFAULT_GRID_POINTS).unwrap();
        let g = grid_from_fn(w, |x| -(x - PI / 2.0).powi(2) / (2.0 * sigma * sigma));
        let r = g.report().unwrap();
        assert_relative_eq!(r.half_width / sigma, 1.0, max_relative = 0.01);
        assert_relative_eq!(r.posterior_std / sigma, 1.0, max_relative = 0.01);
        assert!(!r.ambiguous);
        assert_eq!(r.peak_positions.len(), 1);
    }

    #[test]
    fn flat_posterior_is_ambiguous() {
        let w = PriorWindow::new(0.0, PI, DEFAULT_GRID_POINTS).unwrap();
        let r = PosteriorGrid::flat(w).unwrap().report().unwrap();
        assert!(r.ambiguous);
        assert_relative_eq!(r.estimate, PI / 2.0, max_relative = 1e-3);
        assert_relative_eq!(r.half_width, CREDIBLE_MASS * PI / 2.0, max_relative = 1e-6);
        assert_relative_eq!(r.posterior_std, PI / 12f64.sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn all_neg_inf_is_inconsistent() {
        let w = PriorWindow::new(0.0, PI, 1000).unwrap();
        let g = grid_from_fn(w, |_| f64::NEG_INFINITY);
        assert_eq!(g.report(), Err(Error::InconsistentData));
    }

    #[test]
    fn impossible_outcome_gives_neg_inf_but_stays_usable() {
        // Excited outcome at Δt = π has zero probability only at ω₀ = π.
        let w = PriorWindow::new(0.0, PI, 1000).unwrap();
        let rec = MeasurementRecord::observed(ProbePulseConfig::single(0.0, 1.0), 1, 0);
        let g = PosteriorGrid::flat(w).unwrap().accumulate(&rec).unwrap();
        assert_eq!(*g.log_weights.last().unwrap(), f64::NEG_INFINITY);
        assert!(g.report().is_ok());
    }

    #[test]
    fn zero_count_with_zero_probability_is_not_nan() {
        let w = PriorWindow::new(0.0, PI, 1000).unwrap();
        let rec = MeasurementRecord::observed(ProbePulseConfig::single(0.0, 1.0), 0, 3);
        let g = PosteriorGrid::flat(w).unwrap().accumulate(&rec).unwrap();
        assert!(g.log_weights.iter().all(|l| !l.is_nan()));
    }

    #[test]
    fn record_validation() {
        let cfg = ProbePulseConfig::single(0.0, 1.0);
        let mut r = MeasurementRecord::observed(cfg, 1, 1);
        r.count_excited = 0.5;
        assert!(r.validate().is_err());
        r.asymptotic = true;
        assert!(r.validate().is_ok());
        r.count_ground = -1.0;
        assert!(r.validate().is_err());
        r.count_ground = f64::NAN;
        assert!(r.validate().is_err());
    }

    #[test]
    fn two_separated_peaks_are_ambiguous() {
        let w = PriorWindow::new(-PI, PI, DEFAULT_GRID_POINTS).unwrap();
        let s2 = 2.0 * 0.05f64.powi(2);
        let g = grid_from_fn(w, |x| {
            ((-(x - 1.0).powi(2) / s2).exp() + 0.8 * (-(x + 1.0).powi(2) / s2).exp()).ln()
        });
        let r = g.report().unwrap();
        assert!(r.ambiguous);
        assert_eq!(r.peak_positions.len(), 2);
        assert_relative_eq!(r.estimate, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn tie_breaks_toward_center() {
        let w = PriorWindow::new(0.0, 10.0, 1001).unwrap();
        // Two equal spikes at 2 and 6; center is 5.
        let g = grid_from_fn(w, |x| {
            if (x - 2.0).abs() < 1e-9 || (x - 6.0).abs() < 1e-9 {
                0.0
            } else {
                -50.0
            }
        });
        assert_relative_eq!(g.report().unwrap().estimate, 6.0, epsilon = 1e-9);
    }

    #[test]
    fn merge_requires_same_window() {
        let a = PosteriorGrid::flat(PriorWindow::new(0.0, 1.0, 1000).unwrap()).unwrap();
        let b = PosteriorGrid::flat(PriorWindow::new(0.0, 2.0, 1000).unwrap()).unwrap();
        assert!(a.merge(&b).is_err());
    }
}
