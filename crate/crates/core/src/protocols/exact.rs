//! Exhaustive outcome-tree enumeration.
//!
//! Every classical history (GBM outcomes per hop, recovery success or
//! failure) becomes one leaf carrying its exact probability and the final
//! party's state. By default the three `n` outcomes of a fixed `m` are merged
//! into one branch once the correction has been checked to leave identical
//! states; `full_outcomes` keeps all nine.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Chain, ProtocolKind, ProtocolSpec};
use crate::corrections::{classify_collapse, resolve_correction, CollapseClass, Recovery};
use crate::error::{Error, Result};
use crate::measurement::{
    gbm_collapse, gbm_probabilities, kraus_branches, GbmOutcome, KrausPair, MIN_OUTCOME_PROBABILITY,
};
use crate::qutrit::{apply_operator, tensor, ChannelCoeffs, PureState, IDENTITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistoryStep {
    /// GBM result at `hop`; `n` is absent when the three `n` branches were merged.
    Hop { hop: usize, m: u8, n: Option<u8> },
    /// Kraus recovery at the end of `segment`. `class` is set for GCTP segments.
    Recovery {
        segment: usize,
        class: Option<CollapseClass>,
        success: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub history: Vec<HistoryStep>,
    pub probability: f64,
    /// Normalized state of the last party reached.
    pub post_state: PureState,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub spec: ProtocolSpec,
    pub entries: Vec<DistributionEntry>,
    pub total_success_probability: f64,
}

impl OutcomeDistribution {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Probability of reaching the recovery of `segment` in each collapse class.
    pub fn class_probabilities(&self, segment: usize) -> BTreeMap<CollapseClass, f64> {
        self.class_masses(segment, |_| true)
    }

    /// Probability of reaching `segment` in each class and recovering.
    pub fn class_success_probabilities(&self, segment: usize) -> BTreeMap<CollapseClass, f64> {
        self.class_masses(segment, |success| success)
    }

    fn class_masses(
        &self,
        segment: usize,
        keep: impl Fn(bool) -> bool,
    ) -> BTreeMap<CollapseClass, f64> {
        let mut out: BTreeMap<CollapseClass, f64> =
            CollapseClass::all().map(|c| (c, 0.0)).collect();
        for e in &self.entries {
            let hit = e.history.iter().find_map(|step| match *step {
                HistoryStep::Recovery {
                    segment: s,
                    class: Some(c),
                    success,
                } if s == segment => Some((c, success)),
                _ => None,
            });
            if let Some((c, success)) = hit {
                if keep(success) {
                    *out.get_mut(&c).expect("all classes present") += e.probability;
                }
            }
        }
        out
    }

    /// Probability of each `m`-triple of the first segment (GCTP only).
    pub fn m_triple_probabilities(&self) -> BTreeMap<[u8; 3], f64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            let ms: Vec<u8> = e
                .history
                .iter()
                .filter_map(|s| match *s {
                    HistoryStep::Hop { hop, m, .. } if hop < 3 => Some(m),
                    _ => None,
                })
                .collect();
            if let [a, b, c] = ms[..] {
                *out.entry([a, b, c]).or_insert(0.0) += e.probability;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EnumerationOptions {
    /// Keep all nine GBM outcomes per hop instead of merging over `n`.
    pub full_outcomes: bool,
    /// Override of the hop bound (default 12 merged, 6 full).
    pub max_hops: Option<usize>,
}

impl EnumerationOptions {
    pub fn full() -> Self {
        Self {
            full_outcomes: true,
            max_hops: None,
        }
    }

    fn hop_limit(&self) -> usize {
        self.max_hops
            .unwrap_or(if self.full_outcomes { 6 } else { 12 })
    }
}

struct HopBranch {
    m: u8,
    n: Option<u8>,
    probability: f64,
    state: PureState,
}

fn hop_branches(channel: &ChannelCoeffs, state: &PureState, full: bool) -> Result<Vec<HopBranch>> {
    let register = tensor(state, &channel.state());
    let probs = gbm_probabilities(&register, (0, 1))?;
    let mut out = Vec::with_capacity(if full { 9 } else { 3 });
    for m in 0..3u8 {
        let mut variants: Vec<(u8, f64, PureState)> = Vec::with_capacity(3);
        let family = GbmOutcome::new(m, 0).expect("trit")..=GbmOutcome::new(m, 2).expect("trit");
        for (&o, &p) in probs.range(family) {
            if p < MIN_OUTCOME_PROBABILITY {
                continue;
            }
            let rec = gbm_collapse(&register, (0, 1), o)?;
            let corrected = apply_operator(&resolve_correction(o)?, &rec.post_state, 0)?;
            variants.push((o.n(), p, corrected));
        }
        if variants.is_empty() {
            continue;
        }
        if full {
            out.extend(
                variants
                    .into_iter()
                    .map(|(n, probability, state)| HopBranch {
                        m,
                        n: Some(n),
                        probability,
                        state,
                    }),
            );
            continue;
        }
        let spread = variants
            .iter()
            .map(|(_, _, s)| s.max_abs_diff(&variants[0].2))
            .fold(0.0, f64::max);
        if spread > IDENTITY_TOL {
            return Err(Error::PhaseCancellation { m, spread });
        }
        let probability = variants.iter().map(|(_, p, _)| p).sum();
        let (_, _, state) = variants.swap_remove(0);
        out.push(HopBranch {
            m,
            n: None,
            probability,
            state,
        });
    }
    Ok(out)
}

struct Walker<'a> {
    chain: &'a Chain,
    spec: ProtocolSpec,
    full: bool,
    entries: Vec<DistributionEntry>,
}

impl Walker<'_> {
    fn leaf(&mut self, history: &[HistoryStep], probability: f64, state: PureState, success: bool) {
        self.entries.push(DistributionEntry {
            history: history.to_vec(),
            probability,
            post_state: state,
            success,
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn recover(
        &mut self,
        kraus: Option<KrausPair>,
        segment: usize,
        class: Option<CollapseClass>,
        state: PureState,
        probability: f64,
        history: &mut Vec<HistoryStep>,
        next_hop: usize,
    ) -> Result<()> {
        let Some(kraus) = kraus else {
            history.push(HistoryStep::Recovery {
                segment,
                class,
                success: false,
            });
            self.leaf(history, probability, state, false);
            history.pop();
            return Ok(());
        };
        for branch in kraus_branches(&state, 0, &kraus)? {
            let Some(post) = branch.post_state else {
                continue;
            };
            history.push(HistoryStep::Recovery {
                segment,
                class,
                success: branch.success,
            });
            let p = probability * branch.probability;
            if branch.success {
                self.hop(post, p, history, next_hop, Vec::new())?;
            } else {
                self.leaf(history, p, post, false);
            }
            history.pop();
        }
        Ok(())
    }

    fn hop(
        &mut self,
        state: PureState,
        probability: f64,
        history: &mut Vec<HistoryStep>,
        hop: usize,
        segment_ms: Vec<u8>,
    ) -> Result<()> {
        if hop == self.spec.hops() {
            self.leaf(history, probability, state, true);
            return Ok(());
        }
        let per_segment = self.spec.hops_per_segment();
        for branch in hop_branches(self.chain.channel(), &state, self.full)? {
            history.push(HistoryStep::Hop {
                hop,
                m: branch.m,
                n: branch.n,
            });
            let p = probability * branch.probability;
            let mut ms = segment_ms.clone();
            ms.push(branch.m);
            let segment = hop / per_segment;
            if ms.len() < per_segment {
                self.hop(branch.state, p, history, hop + 1, ms)?;
            } else if self.spec.kind() == ProtocolKind::Sctp {
                let kraus = self.chain.hop_recovery(branch.m)?;
                self.recover(kraus, segment, None, branch.state, p, history, hop + 1)?;
            } else {
                let class = classify_collapse(ms[0], ms[1], ms[2]);
                match self.chain.segment_recovery(class)? {
                    Some(Recovery::IdentityPass) => {
                        history.push(HistoryStep::Recovery {
                            segment,
                            class: Some(class),
                            success: true,
                        });
                        self.hop(branch.state, p, history, hop + 1, Vec::new())?;
                        history.pop();
                    }
                    Some(Recovery::Kraus(k)) => self.recover(
                        Some(k),
                        segment,
                        Some(class),
                        branch.state,
                        p,
                        history,
                        hop + 1,
                    )?,
                    None => self.recover(
                        None,
                        segment,
                        Some(class),
                        branch.state,
                        p,
                        history,
                        hop + 1,
                    )?,
                }
            }
            history.pop();
        }
        Ok(())
    }
}

impl Chain {
    /// Full outcome tree of `spec` starting from `state`.
    pub fn enumerate(
        &self,
        spec: &ProtocolSpec,
        state: &PureState,
        options: &EnumerationOptions,
    ) -> Result<OutcomeDistribution> {
        let limit = options.hop_limit();
        if spec.hops() > limit {
            return Err(Error::TooManyHops {
                hops: spec.hops(),
                limit,
            });
        }
        if state.n_qutrits() != 1 {
            return Err(Error::DimensionMismatch {
                left: state.n_qutrits(),
                right: 1,
            });
        }
        let mut walker = Walker {
            chain: self,
            spec: *spec,
            full: options.full_outcomes,
            entries: Vec::new(),
        };
        walker.hop(state.normalized()?, 1.0, &mut Vec::new(), 0, Vec::new())?;
        let total_success_probability = walker
            .entries
            .iter()
            .filter(|e| e.success)
            .map(|e| e.probability)
            .sum();
        Ok(OutcomeDistribution {
            spec: *spec,
            entries: walker.entries,
            total_success_probability,
        })
    }
}

/// Exhaustive outcome distribution with default options.
pub fn enumerate(
    spec: &ProtocolSpec,
    state: &PureState,
    channel: &ChannelCoeffs,
) -> Result<OutcomeDistribution> {
    Chain::new(*channel).enumerate(spec, state, &EnumerationOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutrit::{fidelity, haar_random_state, make_channel};

    fn generic() -> ChannelCoeffs {
        make_channel(0.5, 0.6, 0.39f64.sqrt()).unwrap()
    }

    #[test]
    fn single_step_total_is_three_a0_squared() {
        let ch = generic();
        let d = enumerate(&ProtocolSpec::sctp(1).unwrap(), &haar_random_state(1), &ch).unwrap();
        assert!((d.total_success_probability - 0.75).abs() < 1e-12);
        assert!((d.total_probability() - 1.0).abs() < 1e-12);
        // 3 families x {success, failure}
        assert_eq!(d.entries.len(), 6);
    }

    #[test]
    fn gctp_tree_has_27_triples() {
        let d = enumerate(&ProtocolSpec::gctp4(), &haar_random_state(2), &generic()).unwrap();
        let triples = d.m_triple_probabilities();
        assert_eq!(triples.len(), 27);
        assert!((triples.values().sum::<f64>() - 1.0).abs() < 1e-12);
        let classes = d.class_probabilities(0);
        assert_eq!(classes.len(), 10);
        assert!((classes.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merged_and_full_trees_agree() {
        let ch = generic();
        let psi = haar_random_state(3);
        let chain = Chain::new(ch);
        let spec = ProtocolSpec::gctp4();
        let merged = chain
            .enumerate(&spec, &psi, &EnumerationOptions::default())
            .unwrap();
        let full = chain
            .enumerate(&spec, &psi, &EnumerationOptions::full())
            .unwrap();
        assert!(full.entries.len() > merged.entries.len());
        assert!((merged.total_success_probability - full.total_success_probability).abs() < 1e-12);
        let (a, b) = (merged.class_probabilities(0), full.class_probabilities(0));
        for c in CollapseClass::all() {
            assert!((a[&c] - b[&c]).abs() < 1e-12);
        }
    }

    #[test]
    fn success_leaves_restore_input() {
        let psi = haar_random_state(4);
        for spec in [
            ProtocolSpec::sctp(2).unwrap(),
            ProtocolSpec::gctp4(),
            ProtocolSpec::pgctp(2).unwrap(),
        ] {
            let d = enumerate(&spec, &psi, &generic()).unwrap();
            for e in d.entries.iter().filter(|e| e.success) {
                assert!(fidelity(&e.post_state, &psi).unwrap() > 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn hop_bound_enforced() {
        let psi = haar_random_state(5);
        let err = enumerate(&ProtocolSpec::sctp(13).unwrap(), &psi, &generic()).unwrap_err();
        assert_eq!(
            err,
            Error::TooManyHops {
                hops: 13,
                limit: 12
            }
        );
        let chain = Chain::new(generic());
        assert!(chain
            .enumerate(
                &ProtocolSpec::pgctp(3).unwrap(),
                &psi,
                &EnumerationOptions::full()
            )
            .is_err());
    }
}
