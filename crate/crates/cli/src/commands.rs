use std::collections::BTreeMap;

use qutrit_chain::analysis::{
    a0_max, format_sig17, p_gctp4, p_pgctp, p_sctp, sweep as sweep_points, uniform_grid,
    write_sweep_csv,
};
use qutrit_chain::corrections::CollapseClass;
use qutrit_chain::protocols::{
    simulate as run_trials, Chain, EnumerationOptions, ProtocolKind, ProtocolSpec,
};
use qutrit_chain::qutrit::{ChannelCoeffs, PureState};
use qutrit_chain::verify::{run_all, VerifyConfig, SCHEMA_VERSION};
use serde::Serialize;

use crate::{input, CliError, EnumerateArgs, Format, Outcome, SimulateArgs, SweepArgs, VerifyArgs};

#[derive(Serialize)]
struct ProtocolInfo {
    kind: ProtocolKind,
    hops: usize,
    segments: usize,
}

impl From<&ProtocolSpec> for ProtocolInfo {
    fn from(spec: &ProtocolSpec) -> Self {
        Self {
            kind: spec.kind(),
            hops: spec.hops(),
            segments: spec.segments(),
        }
    }
}

#[derive(Serialize)]
struct ChannelInfo {
    a0: f64,
    a1: f64,
    a2: f64,
}

impl From<&ChannelCoeffs> for ChannelInfo {
    fn from(c: &ChannelCoeffs) -> Self {
        Self {
            a0: c.a0(),
            a1: c.a1(),
            a2: c.a2(),
        }
    }
}

/// Amplitudes as `[re, im]` pairs.
fn state_info(s: &PureState) -> Vec<[f64; 2]> {
    s.amplitudes().iter().map(|a| [a.re, a.im]).collect()
}

fn closed_form(spec: &ProtocolSpec, channel: &ChannelCoeffs) -> f64 {
    match spec.kind() {
        ProtocolKind::Sctp => p_sctp(channel, spec.hops()),
        ProtocolKind::Gctp4 => p_gctp4(channel),
        ProtocolKind::Pgctp => p_pgctp(channel, spec.segments()),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct SimulateReport {
    schema_version: u32,
    command: &'static str,
    protocol: ProtocolInfo,
    channel: ChannelInfo,
    state: Vec<[f64; 2]>,
    trials: usize,
    seed: u64,
    successes: usize,
    frequency: f64,
    exact_probability: f64,
    sigma: f64,
    z_score: f64,
    mean_fidelity: Option<f64>,
    min_fidelity: Option<f64>,
    /// Empty for SCTP.
    class_counts: BTreeMap<String, usize>,
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let spec = input::protocol(&args.protocol)?;
    let channel = input::channel(&args.channel)?;
    let state = input::state(&args.state, args.seed)?;
    if args.trials == 0 {
        return Err(CliError::Validation("--trials must be at least 1".into()));
    }
    let chain = Chain::new(channel);
    let exact = chain.exact_success_probability(&spec, &state)?;
    let mc = run_trials(&chain, &spec, &state, args.trials, args.seed)?;
    let report = SimulateReport {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        protocol: (&spec).into(),
        channel: (&channel).into(),
        state: state_info(&state),
        trials: mc.trials,
        seed: mc.seed,
        successes: mc.successes,
        frequency: mc.frequency,
        exact_probability: exact,
        sigma: mc.sigma(exact),
        z_score: mc.z_score(exact),
        mean_fidelity: mc.mean_fidelity,
        min_fidelity: mc.min_fidelity,
        class_counts: mc
            .class_counts
            .iter()
            .map(|(c, n)| (c.to_string(), *n))
            .collect(),
    };
    Ok(Outcome {
        body: to_json(&report)?,
        ok: true,
    })
}

#[derive(Serialize)]
struct ClassRow {
    segment: usize,
    class: String,
    probability: f64,
    success_probability: f64,
}

#[derive(Serialize)]
struct EnumerateReport {
    schema_version: u32,
    command: &'static str,
    protocol: ProtocolInfo,
    channel: ChannelInfo,
    state: Vec<[f64; 2]>,
    branches: usize,
    total_probability: f64,
    total_success_probability: f64,
    closed_form_success_probability: f64,
    /// One row per collapse class and segment; empty for SCTP.
    classes: Vec<ClassRow>,
}

pub fn enumerate(args: &EnumerateArgs) -> Result<Outcome, CliError> {
    let spec = input::protocol(&args.protocol)?;
    let channel = input::channel(&args.channel)?;
    let state = input::state(&args.state, args.seed)?;
    let options = EnumerationOptions {
        full_outcomes: args.full_outcomes,
        max_hops: None,
    };
    let dist = Chain::new(channel)
        .enumerate(&spec, &state, &options)
        .map_err(|e| match e {
            qutrit_chain::Error::TooManyHops { .. } => CliError::Validation(e.to_string()),
            other => other.into(),
        })?;
    let mut classes = Vec::new();
    if spec.kind() != ProtocolKind::Sctp {
        for segment in 0..spec.segments() {
            let reached = dist.class_probabilities(segment);
            let recovered = dist.class_success_probabilities(segment);
            for c in CollapseClass::all() {
                classes.push(ClassRow {
                    segment,
                    class: c.to_string(),
                    probability: reached[&c],
                    success_probability: recovered[&c],
                });
            }
        }
    }
    let report = EnumerateReport {
        schema_version: SCHEMA_VERSION,
        command: "enumerate",
        protocol: (&spec).into(),
        channel: (&channel).into(),
        state: state_info(&state),
        branches: dist.entries.len(),
        total_probability: dist.total_probability(),
        total_success_probability: dist.total_success_probability,
        closed_form_success_probability: closed_form(&spec, &channel),
        classes,
    };
    let body = match args.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut s = String::from("segment,class,probability,success_probability\n");
            for r in &report.classes {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    r.segment,
                    r.class,
                    format_sig17(r.probability),
                    format_sig17(r.success_probability)
                ));
            }
            s.push_str(&format!(
                ",total,{},{}\n",
                format_sig17(report.total_probability),
                format_sig17(report.total_success_probability)
            ));
            s
        }
    };
    Ok(Outcome { body, ok: true })
}

pub fn sweep(args: &SweepArgs) -> Result<Outcome, CliError> {
    if args.segments == 0 {
        return Err(CliError::Validation("--segments must be at least 1".into()));
    }
    if args.points == 0 {
        return Err(CliError::Validation("--points must be at least 1".into()));
    }
    let hi = args.a0_max.unwrap_or_else(a0_max);
    if !(args.a0_min > 0.0 && args.a0_min <= hi && hi <= a0_max() + 1e-9) {
        return Err(CliError::Validation(format!(
            "need 0 < a0-min <= a0-max <= 1/sqrt(3), got [{}, {hi}]",
            args.a0_min
        )));
    }
    let points = sweep_points(args.segments, &uniform_grid(args.a0_min, hi, args.points))
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let body = match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&points, &mut buf)?;
            String::from_utf8(buf).map_err(|e| CliError::Internal(e.to_string()))?
        }
        Format::Json => {
            #[derive(Serialize)]
            struct SweepReport<'a> {
                schema_version: u32,
                command: &'static str,
                points: &'a [qutrit_chain::analysis::SweepPoint],
            }
            to_json(&SweepReport {
                schema_version: SCHEMA_VERSION,
                command: "sweep",
                points: &points,
            })?
        }
    };
    Ok(Outcome { body, ok: true })
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let mut cfg = VerifyConfig {
        inject_kraus_fault: args.inject_kraus_fault,
        ..VerifyConfig::default()
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(CliError::Validation("--trials must be at least 1".into()));
        }
        cfg.mc_trials = trials;
    }
    let report = run_all(&cfg);
    for c in &report.checks {
        eprintln!(
            "[{}] criterion {:2}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.name
        );
    }
    Ok(Outcome {
        body: to_json(&report)?,
        ok: report.passed,
    })
}
