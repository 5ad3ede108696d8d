//! Closed-form success probabilities and the `a0` sweeps built from them.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corrections::CollapseClass;
use crate::error::{Error, Result};
use crate::qutrit::{make_channel, ChannelCoeffs, PureState};

/// Largest admissible `a0` (maximal entanglement).
pub fn a0_max() -> f64 {
    1.0 / 3f64.sqrt()
}

/// Lower end of the ratio plots; weaker channels are impractical for long chains.
pub const RATIO_PLOT_A0_MIN: f64 = 0.5;

/// Default number of grid points per sweep.
pub const DEFAULT_GRID_POINTS: usize = 256;

/// Success probability of one hop plus recovery: `3a0²`.
pub fn p_single(channel: &ChannelCoeffs) -> f64 {
    3.0 * channel.a0().powi(2)
}

/// SCTP over `steps` hops: `(3a0²)^steps`.
pub fn p_sctp(channel: &ChannelCoeffs, steps: usize) -> f64 {
    p_single(channel).powi(steps as i32)
}

/// GCTP over three hops with the `min` resolved for the given branch:
/// the primed family contributes `9a0⁴a2²`, the double-primed `9a1⁴a0²`.
pub fn p_gctp4_branch(channel: &ChannelCoeffs, primed: bool) -> f64 {
    let [x, y, z] = channel.as_array().map(|a| a * a);
    let classes_7_to_9 = if primed {
        9.0 * x * x * z
    } else {
        9.0 * y * y * x
    };
    3.0 * x.powi(3) + 9.0 * x * x * y + classes_7_to_9 + 6.0 * x * y * z
}

/// `3a0⁶ + 9a0⁴a1² + 9·min{a0⁴a2², a1⁴a0²} + 6a0²a1²a2²`.
pub fn p_gctp4(channel: &ChannelCoeffs) -> f64 {
    p_gctp4_branch(channel, true).min(p_gctp4_branch(channel, false))
}

fn check_a0(a0: f64) -> Result<()> {
    if a0 > 0.0 && a0 <= a0_max() + 1e-12 {
        Ok(())
    } else {
        Err(Error::GridOutOfRange(a0))
    }
}

/// Lower envelope over channels with fixed `a0` (reached at `a1 = a0`): `6a0⁴ + 9a0⁶`.
pub fn p_gctp4_min(a0: f64) -> Result<f64> {
    check_a0(a0)?;
    Ok(6.0 * a0.powi(4) + 9.0 * a0.powi(6))
}

/// Upper envelope (reached at `a1 = a2`): `(3/2)a0² + 6a0⁴ − (9/2)a0⁶`.
pub fn p_gctp4_max(a0: f64) -> Result<f64> {
    check_a0(a0)?;
    Ok(1.5 * a0 * a0 + 6.0 * a0.powi(4) - 4.5 * a0.powi(6))
}

/// PGCTP over `3·segments + 1` parties: `P_G(4)^segments`.
pub fn p_pgctp(channel: &ChannelCoeffs, segments: usize) -> f64 {
    p_gctp4(channel).powi(segments as i32)
}

/// Closed-form probability of each GCTP collapse class for input `state`.
pub fn class_probabilities(
    channel: &ChannelCoeffs,
    state: &PureState,
) -> [(CollapseClass, f64); 10] {
    let [x, y, z] = channel.as_array().map(|a| a * a);
    let c = state.amplitudes();
    let [pa, pb, pc] = [c[0].norm_sqr(), c[1].norm_sqr(), c[2].norm_sqr()];
    let weighted = |w: [f64; 3]| w[0] * pa + w[1] * pb + w[2] * pc;
    let values = [
        weighted([x.powi(3), y.powi(3), z.powi(3)]),
        weighted([y.powi(3), z.powi(3), x.powi(3)]),
        weighted([z.powi(3), x.powi(3), y.powi(3)]),
        3.0 * weighted([x * x * y, y * y * z, z * z * x]),
        3.0 * weighted([y * y * z, z * z * x, x * x * y]),
        3.0 * weighted([z * z * x, x * x * y, y * y * z]),
        3.0 * weighted([x * x * z, y * y * x, z * z * y]),
        3.0 * weighted([y * y * x, z * z * y, x * x * z]),
        3.0 * weighted([z * z * y, x * x * z, y * y * x]),
        6.0 * x * y * z,
    ];
    let mut out = [(CollapseClass::new(1).expect("1..=10"), 0.0); 10];
    for (i, (slot, v)) in out.iter_mut().zip(values).enumerate() {
        *slot = (CollapseClass::new(i as u8 + 1).expect("1..=10"), v);
    }
    out
}

/// Which extreme of the `a1` range an envelope channel sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    /// `a1 = a0`.
    Min,
    /// `a1 = a2`.
    Max,
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Envelope::Min => "min",
            Envelope::Max => "max",
        })
    }
}

impl FromStr for Envelope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Envelope::Min),
            "max" => Ok(Envelope::Max),
            other => Err(Error::InvalidProtocol(format!(
                "unknown envelope {other:?}"
            ))),
        }
    }
}

/// Channel on the given envelope for smallest coefficient `a0`.
pub fn envelope_channel(a0: f64, envelope: Envelope) -> Result<ChannelCoeffs> {
    check_a0(a0)?;
    let a0 = a0.min(a0_max());
    let (a1, a2) = match envelope {
        Envelope::Min => (a0, (1.0 - 2.0 * a0 * a0).max(0.0).sqrt()),
        Envelope::Max => {
            let a = ((1.0 - a0 * a0) / 2.0).sqrt();
            (a, a)
        }
    };
    // at a0 = 1/√3 rounding can put a1, a2 an ulp below a0
    make_channel(a0, a1.max(a0), a2.max(a1.max(a0)))
}

/// One row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub a0: f64,
    pub envelope: Envelope,
    pub n_segments: usize,
    /// SCTP over `3·n_segments` hops.
    pub p_s: f64,
    pub p_pg: f64,
    /// `p_pg / p_s`; absent when `p_s = 0`.
    pub ratio: Option<f64>,
}

/// `points` evenly spaced values over `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Both envelope rows for every grid value, in grid order.
pub fn sweep(n_segments: usize, a0_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if n_segments == 0 {
        return Err(Error::InvalidProtocol(
            "n_segments must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(2 * a0_grid.len());
    for &a0 in a0_grid {
        for envelope in [Envelope::Min, Envelope::Max] {
            let channel = envelope_channel(a0, envelope)?;
            let p_s = p_sctp(&channel, 3 * n_segments);
            let p_pg = p_pgctp(&channel, n_segments);
            out.push(SweepPoint {
                a0: channel.a0(),
                envelope,
                n_segments,
                p_s,
                p_pg,
                ratio: (p_s > 0.0).then(|| p_pg / p_s),
            });
        }
    }
    Ok(out)
}

pub const SWEEP_CSV_HEADER: &str = "a0,envelope,n_segments,p_s,p_pg,ratio";

/// 17 significant digits, locale independent.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the sweep as CSV with LF line endings; an absent ratio is an empty field.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_sig17(p.a0),
            p.envelope,
            p.n_segments,
            format_sig17(p.p_s),
            format_sig17(p.p_pg),
            p.ratio.map(format_sig17).unwrap_or_default()
        )?;
    }
    Ok(())
}
