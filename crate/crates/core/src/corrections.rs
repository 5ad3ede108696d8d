//! Correction unitaries and recovery Kraus operators.
//!
//! The nine printed unitaries `U_mn` are kept verbatim. Which of them (or of
//! their adjoints) undoes a given GBM outcome is not taken on trust from the
//! subscripts; [`pairing_table`] derives it once by projecting a generic
//! register onto every Bell state and searching all 18 candidates.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{gbm_collapse, omega_pow, GbmOutcome, KrausPair};
use crate::qutrit::{
    make_channel, make_state, tensor, Amplitude, ChannelCoeffs, QutritOperator, ONE, ZERO,
};

/// Label of one of the ten states reachable after three uncorrected hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CollapseClass(u8);

impl CollapseClass {
    pub fn new(index: u8) -> Option<Self> {
        (1..=10).contains(&index).then_some(Self(index))
    }

    pub fn index(&self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = CollapseClass> {
        (1..=10).map(CollapseClass)
    }

    /// Class 10 needs no recovery: the accumulated coefficients are uniform.
    pub fn is_self_corrected(&self) -> bool {
        self.0 == 10
    }
}

impl fmt::Display for CollapseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi{}", self.0)
    }
}

/// `U_mn` exactly as printed.
pub fn correction_unitary(m: u8, n: u8) -> QutritOperator {
    assert!(m < 3 && n < 3, "trits out of range: ({m},{n})");
    let w1 = omega_pow(-1); // e^{-2πi/3}
    let w2 = omega_pow(-2); // e^{-4πi/3}
    let (p1, p2) = match n {
        0 => (ONE, ONE),
        1 => (w1, w2),
        _ => (w2, w1),
    };
    let entries = match m {
        0 => [[ONE, ZERO, ZERO], [ZERO, p1, ZERO], [ZERO, ZERO, p2]],
        // column layout [[0,0,x],[1,0,0],[0,y,0]]
        1 => [[ZERO, ZERO, p2], [ONE, ZERO, ZERO], [ZERO, p1, ZERO]],
        _ => [[ZERO, p1, ZERO], [ZERO, ZERO, p2], [ONE, ZERO, ZERO]],
    };
    QutritOperator::new(entries).expect("finite entries")
}

/// How a GBM outcome is undone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionChoice {
    pub outcome: GbmOutcome,
    /// Subscripts of the printed unitary that was selected.
    pub printed: (u8, u8),
    pub adjoint: bool,
    /// Global phase folded into `operator` so the corrected state matches the
    /// canonical family form exactly.
    pub phase: Amplitude,
    pub operator: QutritOperator,
}

const PAIRING_TOL: f64 = 1e-12;

fn reference_register() -> (Vec<Amplitude>, ChannelCoeffs) {
    let psi = make_state(
        Complex64::new(0.31, 0.12),
        Complex64::new(-0.47, 0.58),
        Complex64::new(0.22, -0.53),
    )
    .expect("nonzero reference");
    let channel = make_channel(0.3, 0.5, 0.66f64.sqrt()).expect("valid reference channel");
    (psi.into_amplitudes(), channel)
}

/// Searches `{U_mn, U_mn†}` for the operator that maps each collapse residual
/// onto `3^{-1/2} Σ_j c_j a_{j⊕m} |j⟩`.
pub fn derive_pairing() -> Result<[CorrectionChoice; 9]> {
    let (c, channel) = reference_register();
    let psi = make_state(c[0], c[1], c[2])?;
    let register = tensor(&psi, &channel.state());
    let inv_sqrt3 = 1.0 / 3f64.sqrt();

    let mut candidates = Vec::with_capacity(18);
    for adjoint in [false, true] {
        for m in 0..3u8 {
            for n in 0..3u8 {
                let u = correction_unitary(m, n);
                candidates.push(((m, n), adjoint, if adjoint { u.adjoint() } else { u }));
            }
        }
    }

    let mut table = Vec::with_capacity(9);
    for outcome in GbmOutcome::all() {
        let record = gbm_collapse(&register, (0, 1), outcome)?;
        let residual = record
            .post_state
            .scaled(Complex64::new(record.probability.sqrt(), 0.0));
        let m = outcome.m() as usize;
        let target: [Amplitude; 3] = [0, 1, 2].map(|j| c[j] * channel.coeff(j + m) * inv_sqrt3);
        let target_norm: f64 = target.iter().map(|a| a.norm_sqr()).sum();
        let res = residual.amplitudes();
        let res = [res[0], res[1], res[2]];

        let found = candidates.iter().find_map(|&(printed, adjoint, op)| {
            let w = op.apply_vec(&res);
            let overlap: Amplitude = target.iter().zip(&w).map(|(t, x)| t.conj() * x).sum();
            let lambda = overlap / target_norm;
            if (lambda.norm() - 1.0).abs() > PAIRING_TOL {
                return None;
            }
            let spread = (0..3)
                .map(|j| (w[j] - lambda * target[j]).norm())
                .fold(0.0, f64::max);
            (spread <= PAIRING_TOL).then(|| {
                let phase = lambda.conj() / lambda.norm();
                CorrectionChoice {
                    outcome,
                    printed,
                    adjoint,
                    phase,
                    operator: op.scaled(phase),
                }
            })
        });
        match found {
            Some(choice) => table.push(choice),
            None => {
                return Err(Error::NoValidPairing {
                    m: outcome.m(),
                    n: outcome.n(),
                })
            }
        }
    }
    Ok(table.try_into().expect("nine outcomes"))
}

/// The outcome-to-correction table, derived on first use.
pub fn pairing_table() -> Result<&'static [CorrectionChoice; 9]> {
    static TABLE: OnceLock<Result<[CorrectionChoice; 9]>> = OnceLock::new();
    TABLE
        .get_or_init(derive_pairing)
        .as_ref()
        .map_err(Clone::clone)
}

/// Unitary that undoes the phase/permutation error of `outcome`.
pub fn resolve_correction(outcome: GbmOutcome) -> Result<QutritOperator> {
    Ok(pairing_table()?[outcome.index()].operator)
}

fn ratio_sqrt(r: f64) -> f64 {
    (1.0 - r * r).max(0.0).sqrt()
}

/// Diagonal Kraus pair from the success ratios; the failure operator is the
/// complement `√(1 − r²)` on each component.
pub fn diagonal_pair(success: [f64; 3]) -> KrausPair {
    KrausPair::new(
        QutritOperator::diagonal(success),
        QutritOperator::diagonal(success.map(ratio_sqrt)),
    )
}

fn require_nondegenerate(channel: &ChannelCoeffs) -> Result<()> {
    if channel.is_degenerate() {
        Err(Error::DegenerateChannel)
    } else {
        Ok(())
    }
}

/// Recovery pair after a single hop of family `family` (outcome `m`).
pub fn single_step_recovery(channel: &ChannelCoeffs, family: u8) -> Result<KrausPair> {
    require_nondegenerate(channel)?;
    let [x, y, z] = channel.as_array();
    let d = match family {
        0 => [1.0, x / y, x / z],
        1 => [x / y, x / z, 1.0],
        2 => [x / z, 1.0, x / y],
        _ => {
            return Err(Error::InvalidProtocol(format!(
                "family {family} is not a trit"
            )))
        }
    };
    Ok(diagonal_pair(d))
}

/// Which recovery family applies to classes 7–9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSelector {
    /// `a0·a2 ≤ a1²`.
    pub primed: bool,
}

pub fn branch(channel: &ChannelCoeffs) -> BranchSelector {
    let [x, y, z] = channel.as_array();
    BranchSelector {
        primed: x * z <= y * y + 1e-12,
    }
}

/// Recovery action at the end of a three-hop segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)]
pub enum Recovery {
    Kraus(KrausPair),
    /// Class 10: the state is already exact.
    IdentityPass,
}

/// Success operator diagonal for classes 1–9 with the given branch.
fn gctp_success_diagonal(channel: &ChannelCoeffs, class: CollapseClass, primed: bool) -> [f64; 3] {
    let [x, y, z] = channel.as_array();
    let cube_y = (x / y).powi(3);
    let cube_z = (x / z).powi(3);
    let r_sq = x * x / (y * z); // a0²/(a1a2)
    let r_xy = x * y / (z * z); // a0a1/a2²
    let r_xz = x * z / (y * y); // a0a2/a1²
    let r_yy = y * y / (x * z); // a1²/(a0a2)
    match (class.0, primed) {
        (1, _) => [1.0, cube_y, cube_z],
        (2, _) => [cube_y, cube_z, 1.0],
        (3, _) => [cube_z, 1.0, cube_y],
        (4, _) => [1.0, r_sq, r_xy],
        (5, _) => [r_sq, r_xy, 1.0],
        (6, _) => [r_xy, 1.0, r_sq],
        (7, true) => [1.0, r_xz, r_sq],
        (8, true) => [r_xz, r_sq, 1.0],
        (9, true) => [r_sq, 1.0, r_xz],
        (7, false) => [r_yy, 1.0, r_xy],
        (8, false) => [1.0, r_xy, r_yy],
        (9, false) => [r_xy, r_yy, 1.0],
        _ => unreachable!("class 10 has no recovery operator"),
    }
}

/// Recovery for collapse class `class`, choosing the primed or double-primed
/// family for classes 7–9 according to [`branch`].
pub fn gctp_recovery(channel: &ChannelCoeffs, class: CollapseClass) -> Result<Recovery> {
    gctp_recovery_with_branch(channel, class, branch(channel))
}

/// As [`gctp_recovery`] with an explicit branch (used to compare both families).
pub fn gctp_recovery_with_branch(
    channel: &ChannelCoeffs,
    class: CollapseClass,
    selector: BranchSelector,
) -> Result<Recovery> {
    if class.is_self_corrected() {
        return Ok(Recovery::IdentityPass);
    }
    require_nondegenerate(channel)?;
    Ok(Recovery::Kraus(diagonal_pair(gctp_success_diagonal(
        channel,
        class,
        selector.primed,
    ))))
}

/// Class of the state after three hops with outcomes `m1, m2, m3`.
pub fn classify_collapse(m1: u8, m2: u8, m3: u8) -> CollapseClass {
    let mut counts = [0u8; 3];
    for m in [m1, m2, m3] {
        counts[(m % 3) as usize] += 1;
    }
    if let Some(v) = counts.iter().position(|&c| c == 3) {
        return CollapseClass(1 + v as u8);
    }
    let Some(doubled) = counts.iter().position(|&c| c == 2) else {
        return CollapseClass(10);
    };
    let single = counts.iter().position(|&c| c == 1).expect("2 + 1 split");
    if single == (doubled + 1) % 3 {
        CollapseClass(4 + doubled as u8)
    } else {
        CollapseClass(7 + doubled as u8)
    }
}

/// Coefficient multipliers `(w_0, w_1, w_2)` of `|φ_class⟩ = Σ_j w_j c_j |j⟩`.
pub fn class_pattern(channel: &ChannelCoeffs, class: CollapseClass) -> [f64; 3] {
    let [x, y, z] = channel.as_array();
    match class.0 {
        1 => [x.powi(3), y.powi(3), z.powi(3)],
        2 => [y.powi(3), z.powi(3), x.powi(3)],
        3 => [z.powi(3), x.powi(3), y.powi(3)],
        4 => [x * x * y, y * y * z, z * z * x],
        5 => [y * y * z, z * z * x, x * x * y],
        6 => [z * z * x, x * x * y, y * y * z],
        7 => [x * x * z, y * y * x, z * z * y],
        8 => [y * y * x, z * z * y, x * x * z],
        9 => [z * z * y, x * x * z, y * y * x],
        _ => [1.0, 1.0, 1.0],
    }
}
