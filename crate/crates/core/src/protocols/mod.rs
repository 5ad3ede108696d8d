//! Chain teleportation protocols.
//!
//! A chain of `hops + 1` parties shares identical channels between
//! neighbours. Each hop the holder of the state performs a GBM on the state
//! and its half of a fresh channel pair, then sends the 2-trit outcome to the
//! next party, who applies the matching correction unitary. What happens next
//! depends on the protocol:
//!
//! * SCTP recovers the state with a Kraus measurement after every hop.
//! * GCTP4 forwards the uncorrected state for three hops; the last party
//!   classifies the accumulated error and recovers once.
//! * PGCTP repeats GCTP4 segment by segment.
//!
//! Any failed recovery aborts the chain.

mod exact;
mod monte_carlo;

pub use exact::{
    enumerate, DistributionEntry, EnumerationOptions, HistoryStep, OutcomeDistribution,
};
pub use monte_carlo::{simulate, MonteCarloReport};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corrections::{
    classify_collapse, gctp_recovery, resolve_correction, single_step_recovery, CollapseClass,
    Recovery,
};
use crate::error::{Error, Result};
use crate::measurement::{
    apply_generalized_measurement, sample_gbm, GbmOutcome, KrausPair, RecordOutcome,
};
use crate::qutrit::{apply_operator, fidelity, tensor, ChannelCoeffs, PureState};

/// Success-conditioned states must match the input to this tolerance.
pub const FIDELITY_TOL: f64 = 1e-9;

/// Hops per GCTP segment.
pub const SEGMENT_HOPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Sctp,
    Gctp4,
    Pgctp,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Sctp => "sctp",
            ProtocolKind::Gctp4 => "gctp4",
            ProtocolKind::Pgctp => "pgctp",
        })
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sctp" => Ok(ProtocolKind::Sctp),
            "gctp4" | "gctp" => Ok(ProtocolKind::Gctp4),
            "pgctp" => Ok(ProtocolKind::Pgctp),
            other => Err(Error::InvalidProtocol(format!(
                "unknown protocol {other:?}"
            ))),
        }
    }
}

/// Which protocol to run and how long the chain is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    kind: ProtocolKind,
    segments: usize,
    steps: usize,
}

impl ProtocolSpec {
    /// SCTP over `steps` hops.
    pub fn sctp(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidProtocol(
                "SCTP needs at least one step".into(),
            ));
        }
        Ok(Self {
            kind: ProtocolKind::Sctp,
            segments: steps,
            steps,
        })
    }

    pub fn gctp4() -> Self {
        Self {
            kind: ProtocolKind::Gctp4,
            segments: 1,
            steps: SEGMENT_HOPS,
        }
    }

    /// PGCTP over `3 * segments + 1` parties.
    pub fn pgctp(segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::InvalidProtocol(
                "PGCTP needs at least one segment".into(),
            ));
        }
        Ok(Self {
            kind: ProtocolKind::Pgctp,
            segments,
            steps: SEGMENT_HOPS * segments,
        })
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    /// Recovery rounds: one per hop for SCTP, one per 3 hops otherwise.
    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn hops(&self) -> usize {
        self.steps
    }

    pub fn hops_per_segment(&self) -> usize {
        match self.kind {
            ProtocolKind::Sctp => 1,
            _ => SEGMENT_HOPS,
        }
    }

    /// Same protocol restricted to a single recovery segment.
    pub fn single_segment(&self) -> Self {
        match self.kind {
            ProtocolKind::Sctp => Self::sctp(1).expect("one step"),
            ProtocolKind::Gctp4 => *self,
            ProtocolKind::Pgctp => Self::pgctp(1).expect("one segment"),
        }
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ProtocolKind::Sctp => write!(f, "sctp(steps={})", self.steps),
            ProtocolKind::Gctp4 => write!(f, "gctp4"),
            ProtocolKind::Pgctp => write!(f, "pgctp(segments={})", self.segments),
        }
    }
}

/// 2-trit message sent from the party at `hop_index` to its successor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub hop_index: usize,
    pub outcome: GbmOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub success: bool,
    /// State held by the final party; present only on success.
    pub final_state: Option<PureState>,
    pub message_log: Vec<ClassicalMessage>,
    /// Collapse class seen at each attempted GCTP recovery.
    pub recovery_classes: Vec<CollapseClass>,
    /// Fidelity of `final_state` with the input.
    pub fidelity: Option<f64>,
}

/// A chain of identical channels plus the recovery operators it uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chain {
    channel: ChannelCoeffs,
    kraus_sign_fault: bool,
}

impl Chain {
    pub fn new(channel: ChannelCoeffs) -> Self {
        Self {
            channel,
            kraus_sign_fault: false,
        }
    }

    /// Negative control: flips the sign of the `|1⟩⟨1|` entry of every success
    /// operator. Completeness still holds but recovered states pick up a
    /// relative phase, so fidelity checks must fail.
    #[doc(hidden)]
    pub fn with_kraus_sign_fault(channel: ChannelCoeffs) -> Self {
        Self {
            channel,
            kraus_sign_fault: true,
        }
    }

    pub fn channel(&self) -> &ChannelCoeffs {
        &self.channel
    }

    fn faulted(&self, pair: KrausPair) -> KrausPair {
        if !self.kraus_sign_fault {
            return pair;
        }
        let mut entries = *pair.e_success.entries();
        entries[1][1] = -entries[1][1];
        KrausPair::new(
            crate::qutrit::QutritOperator::new(entries).expect("finite"),
            pair.e_failure,
        )
    }

    /// Recovery after one SCTP hop; `None` when the channel cannot recover (a0 = 0).
    pub(crate) fn hop_recovery(&self, family: u8) -> Result<Option<KrausPair>> {
        match single_step_recovery(&self.channel, family) {
            Ok(pair) => Ok(Some(self.faulted(pair))),
            Err(Error::DegenerateChannel) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Recovery at the end of a GCTP segment; `None` when unrecoverable.
    pub(crate) fn segment_recovery(&self, class: CollapseClass) -> Result<Option<Recovery>> {
        match gctp_recovery(&self.channel, class) {
            Ok(Recovery::Kraus(pair)) => Ok(Some(Recovery::Kraus(self.faulted(pair)))),
            Ok(pass) => Ok(Some(pass)),
            Err(Error::DegenerateChannel) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// One hop: GBM on the state and the sender's half of a fresh channel,
    /// then the receiver's correction. Returns the receiver's normalized qutrit.
    pub fn teleport_hop<R: Rng + ?Sized>(
        &self,
        state: &PureState,
        hop_index: usize,
        rng: &mut R,
    ) -> Result<(PureState, ClassicalMessage)> {
        if state.n_qutrits() != 1 {
            return Err(Error::DimensionMismatch {
                left: state.n_qutrits(),
                right: 1,
            });
        }
        let register = tensor(state, &self.channel.state());
        let record = sample_gbm(&register, (0, 1), rng)?;
        let RecordOutcome::Gbm(outcome) = record.outcome else {
            unreachable!("GBM yields a Bell outcome")
        };
        let corrected = apply_operator(&resolve_correction(outcome)?, &record.post_state, 0)?;
        Ok((corrected, ClassicalMessage { hop_index, outcome }))
    }

    fn finish(
        &self,
        input: &PureState,
        success: bool,
        state: PureState,
        message_log: Vec<ClassicalMessage>,
        recovery_classes: Vec<CollapseClass>,
    ) -> Result<TrialResult> {
        let (final_state, fid) = if success {
            let f = fidelity(input, &state)?;
            debug_assert!(
                self.kraus_sign_fault || f >= 1.0 - FIDELITY_TOL,
                "successful trial with fidelity {f}"
            );
            (Some(state), Some(f))
        } else {
            (None, None)
        };
        Ok(TrialResult {
            success,
            final_state,
            message_log,
            recovery_classes,
            fidelity: fid,
        })
    }

    pub fn run_sctp<R: Rng + ?Sized>(
        &self,
        state: &PureState,
        steps: usize,
        rng: &mut R,
    ) -> Result<TrialResult> {
        ProtocolSpec::sctp(steps)?;
        let mut current = state.clone();
        let mut log = Vec::with_capacity(steps);
        for hop in 0..steps {
            let (received, msg) = self.teleport_hop(&current, hop, rng)?;
            log.push(msg);
            let Some(kraus) = self.hop_recovery(msg.outcome.m())? else {
                return self.finish(state, false, received, log, Vec::new());
            };
            let rec = apply_generalized_measurement(&received, 0, &kraus, rng)?;
            if rec.outcome != (RecordOutcome::Kraus { success: true }) {
                return self.finish(state, false, rec.post_state, log, Vec::new());
            }
            current = rec.post_state;
        }
        self.finish(state, true, current, log, Vec::new())
    }

    /// One GCTP segment starting at `first_hop`; returns the recovered state
    /// on success.
    fn run_segment<R: Rng + ?Sized>(
        &self,
        state: &PureState,
        first_hop: usize,
        log: &mut Vec<ClassicalMessage>,
        classes: &mut Vec<CollapseClass>,
        rng: &mut R,
    ) -> Result<Option<PureState>> {
        let mut current = state.clone();
        let mut ms = [0u8; SEGMENT_HOPS];
        for (k, m) in ms.iter_mut().enumerate() {
            let (received, msg) = self.teleport_hop(&current, first_hop + k, rng)?;
            *m = msg.outcome.m();
            log.push(msg);
            current = received;
        }
        let class = classify_collapse(ms[0], ms[1], ms[2]);
        classes.push(class);
        match self.segment_recovery(class)? {
            None => Ok(None),
            Some(Recovery::IdentityPass) => Ok(Some(current)),
            Some(Recovery::Kraus(kraus)) => {
                let rec = apply_generalized_measurement(&current, 0, &kraus, rng)?;
                Ok((rec.outcome == RecordOutcome::Kraus { success: true })
                    .then_some(rec.post_state))
            }
        }
    }

    pub fn run_gctp4<R: Rng + ?Sized>(
        &self,
        state: &PureState,
        rng: &mut R,
    ) -> Result<TrialResult> {
        self.run_pgctp(state, 1, rng)
    }

    pub fn run_pgctp<R: Rng + ?Sized>(
        &self,
        state: &PureState,
        segments: usize,
        rng: &mut R,
    ) -> Result<TrialResult> {
        ProtocolSpec::pgctp(segments)?;
        let mut current = state.clone();
        let mut log = Vec::with_capacity(SEGMENT_HOPS * segments);
        let mut classes = Vec::with_capacity(segments);
        for seg in 0..segments {
            match self.run_segment(&current, seg * SEGMENT_HOPS, &mut log, &mut classes, rng)? {
                Some(next) => current = next,
                None => return self.finish(state, false, current, log, classes),
            }
        }
        self.finish(state, true, current, log, classes)
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        spec: &ProtocolSpec,
        state: &PureState,
        rng: &mut R,
    ) -> Result<TrialResult> {
        match spec.kind {
            ProtocolKind::Sctp => self.run_sctp(state, spec.steps, rng),
            ProtocolKind::Gctp4 => self.run_gctp4(state, rng),
            ProtocolKind::Pgctp => self.run_pgctp(state, spec.segments, rng),
        }
    }

    /// Exact success probability, composed segment by segment.
    ///
    /// Every successful recovery returns the input state, so each segment is
    /// enumerated once from the recovered state and the success masses
    /// multiply. Works for chains far beyond the full-tree enumeration bound.
    pub fn exact_success_probability(&self, spec: &ProtocolSpec, state: &PureState) -> Result<f64> {
        let segment = spec.single_segment();
        let mut current = state.clone();
        let mut total = 1.0;
        for _ in 0..spec.segments() {
            let dist = self.enumerate(&segment, &current, &EnumerationOptions::default())?;
            total *= dist.total_success_probability;
            if dist.total_success_probability == 0.0 {
                break;
            }
            let next = dist
                .entries
                .iter()
                .find(|e| e.success)
                .map(|e| e.post_state.clone())
                .expect("positive success mass has a success leaf");
            let f = fidelity(&current, &next)?;
            if f < 1.0 - FIDELITY_TOL {
                return Err(Error::FidelityLoss(f));
            }
            current = next;
        }
        Ok(total)
    }
}

/// Single hop over `channel` (hop index 0).
pub fn teleport_hop<R: Rng + ?Sized>(
    state: &PureState,
    channel: &ChannelCoeffs,
    rng: &mut R,
) -> Result<(PureState, ClassicalMessage)> {
    Chain::new(*channel).teleport_hop(state, 0, rng)
}

pub fn run_sctp<R: Rng + ?Sized>(
    state: &PureState,
    channel: &ChannelCoeffs,
    steps: usize,
    rng: &mut R,
) -> Result<TrialResult> {
    Chain::new(*channel).run_sctp(state, steps, rng)
}

pub fn run_gctp4<R: Rng + ?Sized>(
    state: &PureState,
    channel: &ChannelCoeffs,
    rng: &mut R,
) -> Result<TrialResult> {
    Chain::new(*channel).run_gctp4(state, rng)
}

pub fn run_pgctp<R: Rng + ?Sized>(
    state: &PureState,
    channel: &ChannelCoeffs,
    segments: usize,
    rng: &mut R,
) -> Result<TrialResult> {
    Chain::new(*channel).run_pgctp(state, segments, rng)
}

pub fn exact_success_probability(
    spec: &ProtocolSpec,
    state: &PureState,
    channel: &ChannelCoeffs,
) -> Result<f64> {
    Chain::new(*channel).exact_success_probability(spec, state)
}
