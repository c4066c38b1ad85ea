//! Seeded generation of measurement records.
//!
//! Draws come from ChaCha8 keyed by `seed` with `stream` selecting the
//! substream, so draw `i` of a given `(seed, stream)` is fixed regardless of
//! which thread asks for it or what other streams were used before.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::bayes::MeasurementRecord;
use crate::error::{Error, Result};
use crate::probe::{p_excited, ProbePulseConfig};

/// Above this many repetitions the count is drawn by CDF inversion from a
/// single uniform instead of one Bernoulli draw per repetition.
pub const BERNOULLI_LIMIT: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialSeed {
    pub seed: u64,
    pub stream: u64,
}

impl TrialSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Binomial(repetitions, p_excited) outcome counts.
pub fn sample_record(
    cfg: &ProbePulseConfig,
    repetitions: u64,
    seed: TrialSeed,
) -> Result<MeasurementRecord> {
    if repetitions < 1 {
        return Err(Error::domain("repetitions", "need at least one repetition"));
    }
    let p = p_excited(cfg)?;
    let mut rng = seed.rng();
    let excited = if repetitions <= BERNOULLI_LIMIT {
        (0..repetitions).filter(|_| rng.random::<f64>() < p).count() as u64
    } else {
        binomial_inversion(repetitions, p, rng.random::<f64>())
    };
    Ok(MeasurementRecord::observed(
        *cfg,
        excited,
        repetitions - excited,
    ))
}

/// Expected counts ν·P(e), ν·P(g), flagged asymptotic.
pub fn expected_record(cfg: &ProbePulseConfig, repetitions: f64) -> Result<MeasurementRecord> {
    if !(repetitions > 0.0) || !repetitions.is_finite() {
        return Err(Error::domain("repetitions", "must be positive and finite"));
    }
    let p = p_excited(cfg)?;
    Ok(MeasurementRecord::expected(
        *cfg,
        repetitions * p,
        repetitions * (1.0 - p),
    ))
}

/// Smallest k with F(k) ≥ u, by bisection on the binomial CDF.
fn binomial_inversion(n: u64, p: f64, u: f64) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let dist = Binomial::new(p, n).expect("p in (0, 1)");
    let (mut lo, mut hi) = (0u64, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if dist.cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}
