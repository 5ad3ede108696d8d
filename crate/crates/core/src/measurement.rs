//! Generalized Bell-basis measurement and two-outcome Kraus measurements.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qutrit::{apply_operator, dim, Amplitude, PureState, QutritOperator, ZERO};

/// Outcomes below this probability are never sampled or collapsed onto.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-15;

/// Label `(m, n)` of the Bell state `|Φ_mn⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GbmOutcome {
    m: u8,
    n: u8,
}

impl GbmOutcome {
    pub fn new(m: u8, n: u8) -> Option<Self> {
        (m < 3 && n < 3).then_some(Self { m, n })
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    /// Position in lexicographic `(m, n)` order.
    pub fn index(&self) -> usize {
        3 * self.m as usize + self.n as usize
    }

    /// All nine outcomes in lexicographic order.
    pub fn all() -> impl Iterator<Item = GbmOutcome> {
        (0..3u8).flat_map(|m| (0..3u8).map(move |n| GbmOutcome { m, n }))
    }
}

impl fmt::Display for GbmOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

/// `e^{2πik/3}`.
pub fn omega_pow(k: i64) -> Amplitude {
    Complex64::from_polar(1.0, 2.0 * PI * k.rem_euclid(3) as f64 / 3.0)
}

/// Components of `|Φ_mn⟩` as `(j, j⊕m, amplitude)`.
fn bell_terms(outcome: GbmOutcome) -> [(usize, usize, Amplitude); 3] {
    let norm = 1.0 / 3f64.sqrt();
    [0usize, 1, 2].map(|j| {
        (
            j,
            (j + outcome.m as usize) % 3,
            omega_pow((j * outcome.n as usize) as i64) * norm,
        )
    })
}

/// The nine generalized Bell states, `|Φ_mn⟩ = 3^{-1/2} Σ_j e^{2πijn/3} |j⟩|j⊕m⟩`.
pub fn gbm_basis() -> Vec<(GbmOutcome, PureState)> {
    GbmOutcome::all()
        .map(|o| {
            let mut amps = vec![ZERO; 9];
            for (j, k, a) in bell_terms(o) {
                amps[3 * j + k] = a;
            }
            (
                o,
                PureState::from_amplitudes(2, amps).expect("9 finite amplitudes"),
            )
        })
        .collect()
}

fn check_pair(register: &PureState, pair: (usize, usize)) -> Result<()> {
    let n = register.n_qutrits();
    for index in [pair.0, pair.1] {
        if index >= n {
            return Err(Error::IndexOutOfRange {
                index,
                n_qutrits: n,
            });
        }
    }
    if pair.0 == pair.1 {
        return Err(Error::DuplicateIndex(pair.0));
    }
    Ok(())
}

/// Flat index of each basis state of the unmeasured qutrits, with the
/// measured pair set to `|00⟩`.
fn residual_offsets(n: usize, pair: (usize, usize)) -> Vec<usize> {
    let rest: Vec<usize> = (0..n).filter(|&q| q != pair.0 && q != pair.1).collect();
    (0..dim(n - 2))
        .map(|r| {
            let mut rem = r;
            let mut idx = 0;
            for &q in rest.iter().rev() {
                idx += (rem % 3) * dim(n - 1 - q);
                rem /= 3;
            }
            idx
        })
        .collect()
}

/// Unnormalized `⟨Φ_mn|_{pair} register` for every outcome, measured qutrits removed.
fn project_all(register: &PureState, pair: (usize, usize)) -> Vec<(GbmOutcome, PureState)> {
    let n = register.n_qutrits();
    let amps = register.amplitudes();
    let offsets = residual_offsets(n, pair);
    let (s0, s1) = (dim(n - 1 - pair.0), dim(n - 1 - pair.1));
    GbmOutcome::all()
        .map(|o| {
            let terms = bell_terms(o);
            let residual = offsets
                .iter()
                .map(|&base| {
                    terms
                        .iter()
                        .map(|&(j, k, a)| a.conj() * amps[base + j * s0 + k * s1])
                        .sum()
                })
                .collect();
            (
                o,
                PureState::from_amplitudes(n - 2, residual).expect("projection keeps length"),
            )
        })
        .collect()
}

/// Probability of each GBM outcome on qutrits `pair` of `register`.
pub fn gbm_probabilities(
    register: &PureState,
    pair: (usize, usize),
) -> Result<BTreeMap<GbmOutcome, f64>> {
    check_pair(register, pair)?;
    let norm = register.norm_sqr();
    Ok(project_all(register, pair)
        .into_iter()
        .map(|(o, r)| (o, r.norm_sqr() / norm))
        .collect())
}

/// Which branch a measurement record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordOutcome {
    Gbm(GbmOutcome),
    Kraus { success: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub outcome: RecordOutcome,
    pub probability: f64,
    /// Normalized state after the measurement.
    pub post_state: PureState,
}

/// Projects onto `|Φ_outcome⟩`; the measured pair is dropped from the register.
pub fn gbm_collapse(
    register: &PureState,
    pair: (usize, usize),
    outcome: GbmOutcome,
) -> Result<MeasurementRecord> {
    check_pair(register, pair)?;
    let (_, residual) = project_all(register, pair).swap_remove(outcome.index());
    record_from_residual(outcome, residual, register.norm_sqr())
}

fn record_from_residual(
    outcome: GbmOutcome,
    residual: PureState,
    norm: f64,
) -> Result<MeasurementRecord> {
    let probability = residual.norm_sqr() / norm;
    if probability < MIN_OUTCOME_PROBABILITY {
        return Err(Error::ZeroProbabilityOutcome(outcome.to_string()));
    }
    Ok(MeasurementRecord {
        outcome: RecordOutcome::Gbm(outcome),
        probability,
        post_state: residual.normalized()?,
    })
}

/// Draws a GBM outcome by inverse CDF over the lexicographic order and collapses onto it.
pub fn sample_gbm<R: Rng + ?Sized>(
    register: &PureState,
    pair: (usize, usize),
    rng: &mut R,
) -> Result<MeasurementRecord> {
    check_pair(register, pair)?;
    let norm = register.norm_sqr();
    let mut residuals = project_all(register, pair);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, (_, r)) in residuals.iter().enumerate() {
        let p = r.norm_sqr() / norm;
        if p < MIN_OUTCOME_PROBABILITY {
            continue;
        }
        acc += p;
        chosen = Some(i);
        if u < acc {
            break;
        }
    }
    // rounding can leave u just above the final cumulative sum; the last
    // admissible outcome absorbs it
    let (outcome, residual) = residuals.swap_remove(chosen.ok_or(Error::ZeroVector)?);
    record_from_residual(outcome, residual, norm)
}

/// Success/failure operators of a two-outcome generalized measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrausPair {
    pub e_success: QutritOperator,
    pub e_failure: QutritOperator,
}

impl KrausPair {
    pub fn new(e_success: QutritOperator, e_failure: QutritOperator) -> Self {
        Self {
            e_success,
            e_failure,
        }
    }

    /// `(I, 0)`: always succeeds and leaves the state untouched.
    pub fn identity() -> Self {
        Self::new(QutritOperator::identity(), QutritOperator::zero())
    }

    /// `max |E_S†E_S + E_F†E_F − I|`.
    pub fn completeness_error(&self) -> f64 {
        let sum = (self.e_success.adjoint() * self.e_success)
            .add(&(self.e_failure.adjoint() * self.e_failure));
        sum.max_abs_diff(&QutritOperator::identity())
    }
}

/// Weight and normalized post-state of one Kraus branch.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausBranch {
    pub success: bool,
    pub probability: f64,
    /// Absent when the branch has (numerically) zero weight.
    pub post_state: Option<PureState>,
}

const KRAUS_INPUT_TOL: f64 = 1e-9;

/// Both branches of `kraus` acting on qutrit `target`, success first.
pub fn kraus_branches(
    state: &PureState,
    target: usize,
    kraus: &KrausPair,
) -> Result<[KrausBranch; 2]> {
    let deviation = kraus.completeness_error();
    if deviation > KRAUS_INPUT_TOL {
        return Err(Error::IncompleteKraus { deviation });
    }
    let norm = state.norm_sqr();
    let branch = |op: &QutritOperator, success: bool| -> Result<KrausBranch> {
        let out = apply_operator(op, state, target)?;
        let probability = out.norm_sqr() / norm;
        let post_state = if probability < MIN_OUTCOME_PROBABILITY {
            None
        } else {
            Some(out.normalized()?)
        };
        Ok(KrausBranch {
            success,
            probability,
            post_state,
        })
    };
    Ok([
        branch(&kraus.e_success, true)?,
        branch(&kraus.e_failure, false)?,
    ])
}

/// Samples the two-outcome measurement `kraus` on qutrit `target`.
pub fn apply_generalized_measurement<R: Rng + ?Sized>(
    state: &PureState,
    target: usize,
    kraus: &KrausPair,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let [success, failure] = kraus_branches(state, target, kraus)?;
    let u: f64 = rng.gen();
    let chosen = match (&success.post_state, &failure.post_state) {
        (Some(_), None) => success,
        (None, Some(_)) => failure,
        (Some(_), Some(_)) if u < success.probability => success,
        (Some(_), Some(_)) => failure,
        (None, None) => return Err(Error::ZeroVector),
    };
    Ok(MeasurementRecord {
        outcome: RecordOutcome::Kraus {
            success: chosen.success,
        },
        probability: chosen.probability,
        post_state: chosen.post_state.expect("chosen branch has weight"),
    })
}
