//! Flag parsing and validation. Nothing invalid gets past these functions.

use clap::{Args, ValueEnum};
use qutrit_chain::analysis::{envelope_channel, Envelope};
use qutrit_chain::protocols::ProtocolSpec;
use qutrit_chain::qutrit::{
    haar_random_state, make_channel, make_state, Amplitude, ChannelCoeffs, PureState,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolName {
    Sctp,
    Gctp4,
    Pgctp,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolName,
    /// SCTP hop count.
    #[arg(long)]
    pub steps: Option<usize>,
    /// PGCTP segment count.
    #[arg(long)]
    pub segments: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnvelopeName {
    Min,
    Max,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Smallest Schmidt coefficient.
    #[arg(long, allow_hyphen_values = true)]
    pub a0: f64,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "envelope")]
    pub a1: Option<f64>,
    /// Largest coefficient, or `auto` for sqrt(1 - a0^2 - a1^2).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "envelope")]
    pub a2: Option<String>,
    /// Derive a1 and a2 from a0 on the min or max envelope.
    #[arg(long, value_enum)]
    pub envelope: Option<EnvelopeName>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub fn protocol(args: &ProtocolArgs) -> Result<ProtocolSpec, CliError> {
    let spec = match args.protocol {
        ProtocolName::Sctp => {
            if args.segments.is_some() {
                return Err(invalid("--segments applies to pgctp only"));
            }
            ProtocolSpec::sctp(args.steps.unwrap_or(3))
        }
        ProtocolName::Gctp4 => {
            if args.steps.is_some() || args.segments.is_some() {
                return Err(invalid("gctp4 has a fixed length; drop --steps/--segments"));
            }
            Ok(ProtocolSpec::gctp4())
        }
        ProtocolName::Pgctp => {
            if args.steps.is_some() {
                return Err(invalid("--steps applies to sctp only"));
            }
            ProtocolSpec::pgctp(args.segments.unwrap_or(1))
        }
    };
    spec.map_err(|e| invalid(e.to_string()))
}

pub fn channel(args: &ChannelArgs) -> Result<ChannelCoeffs, CliError> {
    if let Some(env) = args.envelope {
        let env = match env {
            EnvelopeName::Min => Envelope::Min,
            EnvelopeName::Max => Envelope::Max,
        };
        return envelope_channel(args.a0, env).map_err(|e| invalid(e.to_string()));
    }
    let a1 = args
        .a1
        .ok_or_else(|| invalid("--a1 is required unless --envelope is given"))?;
    let a2_text = args
        .a2
        .as_deref()
        .ok_or_else(|| invalid("--a2 is required unless --envelope is given"))?;
    let explicit = a2_text != "auto";
    let a2 = if explicit {
        a2_text
            .parse::<f64>()
            .map_err(|_| invalid(format!("--a2 must be a number or `auto`, got {a2_text:?}")))?
    } else {
        let rest = 1.0 - args.a0 * args.a0 - a1 * a1;
        if rest < 0.0 {
            return Err(invalid(format!("a0^2 + a1^2 exceeds 1 by {}", -rest)));
        }
        rest.sqrt()
    };
    make_channel(args.a0, a1, a2).map_err(|e| {
        let hint = if explicit && matches!(e, qutrit_chain::Error::NotNormalized { .. }) {
            " (pass `--a2 auto` to complete the normalization)"
        } else {
            ""
        };
        invalid(format!("{e}{hint}"))
    })
}

/// `random` draws a Haar-random state from `seed`; otherwise six reals.
pub fn state(text: &str, seed: u64) -> Result<PureState, CliError> {
    if text == "random" {
        return Ok(haar_random_state(seed));
    }
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            invalid(format!(
                "--state must be `random` or six comma-separated reals, got {text:?}"
            ))
        })?;
    let [r0, i0, r1, i1, r2, i2] = parts[..] else {
        return Err(invalid(format!(
            "--state needs six reals, got {}",
            parts.len()
        )));
    };
    make_state(
        Amplitude::new(r0, i0),
        Amplitude::new(r1, i1),
        Amplitude::new(r2, i2),
    )
    .map_err(|e| invalid(e.to_string()))
}
