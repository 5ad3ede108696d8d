//! Seeded Monte Carlo trials.
//!
//! Trial `i` draws from its own ChaCha8 stream seeded with `seed + i`, so the
//! report does not depend on how trials are scheduled across threads.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Chain, ProtocolSpec};
use crate::corrections::CollapseClass;
use crate::error::{Error, Result};
use crate::qutrit::PureState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub spec: ProtocolSpec,
    pub trials: usize,
    pub seed: u64,
    pub successes: usize,
    pub frequency: f64,
    /// Over successful trials only; absent when nothing succeeded.
    pub mean_fidelity: Option<f64>,
    pub min_fidelity: Option<f64>,
    /// Collapse classes met at GCTP recoveries, counted over all segments.
    pub class_counts: BTreeMap<CollapseClass, usize>,
}

impl MonteCarloReport {
    /// Binomial standard error at success probability `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// `(frequency − p) / σ`; zero when `p` is 0 or 1 and the frequency matches.
    pub fn z_score(&self, p: f64) -> f64 {
        let sigma = self.sigma(p);
        let diff = self.frequency - p;
        if sigma == 0.0 {
            if diff.abs() < 1e-15 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            }
        } else {
            diff / sigma
        }
    }
}

struct TrialSummary {
    success: bool,
    fidelity: Option<f64>,
    classes: Vec<CollapseClass>,
}

/// Runs `trials` independent trials in parallel and merges them in trial order.
pub fn simulate(
    chain: &Chain,
    spec: &ProtocolSpec,
    state: &PureState,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(Error::InvalidProtocol("trials must be at least 1".into()));
    }
    let summaries: Vec<TrialSummary> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            chain.run(spec, state, &mut rng).map(|r| TrialSummary {
                success: r.success,
                fidelity: r.fidelity,
                classes: r.recovery_classes,
            })
        })
        .collect::<Result<_>>()?;

    let mut successes = 0usize;
    let mut fid_sum = 0.0;
    let mut fid_min = f64::INFINITY;
    let mut class_counts: BTreeMap<CollapseClass, usize> = BTreeMap::new();
    for s in &summaries {
        for c in &s.classes {
            *class_counts.entry(*c).or_default() += 1;
        }
        if s.success {
            successes += 1;
            let f = s.fidelity.expect("successful trials carry a fidelity");
            fid_sum += f;
            fid_min = fid_min.min(f);
        }
    }
    Ok(MonteCarloReport {
        spec: *spec,
        trials,
        seed,
        successes,
        frequency: successes as f64 / trials as f64,
        mean_fidelity: (successes > 0).then(|| fid_sum / successes as f64),
        min_fidelity: (successes > 0).then_some(fid_min),
        class_counts,
    })
}
