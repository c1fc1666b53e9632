use std::path::Path;

use infogain_core::entropies::one_shot::{verify_d_max, verify_h_min, verify_i_max};
use infogain_core::entropies::{
    d_max, h0, h0_hmax_hr, h_max_cond, h_min, h_min_cond, i_max, smooth_h0, smooth_i_max, von_neumann_quantities,
    BoundKind, Certificate, CertificateCheck, Direction, EntropyResult, Partition,
};
use infogain_core::io::{self, csv_float, Csv, StateFile};
use infogain_core::protocols::{
    converse_bound, run_binned_splitting, run_merging, run_splitting, ProtocolTranscript, SplittingVariant,
};
use infogain_core::rates::{default_w_cap, feedback_region, info_gain, nonfeedback_region, OptimizerConfig};
use infogain_core::rng::{derive_seed, task_rng};
use infogain_core::typicality::{verify_typicality_properties, TypicalSpec};
use infogain_core::verify::{parse_suite, run_suite, SuiteConfig};
use infogain_core::{ClassicallyCoherentState, Error};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{
    Cli, Command, EntropyArgs, EntropyName, Format, InfoGainArgs, ProtocolArgs, RateRegionArgs, SandwichArgs,
    SimulateCommand, TypicalityArgs, TypicalityCommand, VerifyArgs,
};

pub struct Output {
    pub stdout: String,
    pub code: u8,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: 0 }
    }

    /// Exit code 1 when a checked property does not hold.
    fn checked(stdout: String, holds: bool) -> Self {
        Self { stdout, code: if holds { 0 } else { 1 } }
    }
}

#[derive(Debug)]
pub struct CliError(Error);

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self(e)
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self.0 {
            Error::Argument(_) | Error::DimensionMismatch { .. } | Error::Format(_) => 2,
            Error::Invariant(_) | Error::PremiseNotMet { .. } | Error::Numerical(_) => 1,
        }
    }

    pub fn diagnostic(&self) -> String {
        let kind = match self.0 {
            Error::Argument(_) => "argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Format(_) => "format",
            Error::Invariant(_) => "invariant",
            Error::PremiseNotMet { .. } => "premise_not_met",
            Error::Numerical(_) => "numerical",
        };
        let mut v = json!({ "error": kind, "message": self.0.to_string() });
        if let Error::PremiseNotMet { best_deviation, .. } = self.0 {
            v["best_deviation"] = json!(best_deviation);
        }
        v.to_string()
    }
}

type CmdResult = Result<Output, CliError>;

fn arg(msg: impl Into<String>) -> CliError {
    CliError(Error::Argument(msg.into()))
}

fn to_json(v: &impl serde::Serialize) -> Result<String, CliError> {
    let mut s = io::to_json_string(v)?;
    s.push('\n');
    Ok(s)
}

pub fn dispatch(cli: &Cli) -> CmdResult {
    let fmt = cli.format();
    match &cli.command {
        Command::Entropy(a) => entropy(a, fmt),
        Command::InfoGain(a) => info_gain_cmd(a, fmt, cli.seed),
        Command::RateRegion(a) => rate_region(a, fmt, cli.seed),
        Command::Simulate(SimulateCommand::Merge(a)) => simulate(a, fmt, cli.seed, Protocol::Merge),
        Command::Simulate(SimulateCommand::Split(a)) => {
            let variant = if a.classical { SplittingVariant::Classical } else { SplittingVariant::Coherent };
            simulate(&a.protocol, fmt, cli.seed, Protocol::Split(variant))
        }
        Command::Simulate(SimulateCommand::BinnedSplit(a)) => simulate(a, fmt, cli.seed, Protocol::Binned),
        Command::Simulate(SimulateCommand::Sandwich(a)) => sandwich(a, fmt, cli.seed),
        Command::Typicality(TypicalityCommand::Verify(a)) => typicality(a, fmt),
        Command::Verify(a) => verify(a, fmt, cli.seed),
    }
}

/// JSON has no infinities, so they are spelled out.
fn number(x: f64) -> Value {
    if x == f64::INFINITY {
        json!("infinite")
    } else if x == f64::NEG_INFINITY {
        json!("-infinite")
    } else {
        json!(x)
    }
}

fn text_number(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "infinite" } else { "-infinite" }.into()
    } else {
        // Twelve decimals hide last-digit noise such as 3e-16 for zero.
        format!("{:?}", (x * 1e12).round() / 1e12 + 0.0)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateInput {
    Pair { rho: StateFile, sigma: StateFile },
    Single(StateFile),
}

fn certificate_json(r: &EntropyResult, check: Option<CertificateCheck>) -> Value {
    let mut v = match &r.certificate {
        None => return Value::Null,
        Some(Certificate::DMax { lambda }) => json!({ "kind": "d_max", "lambda": lambda }),
        Some(Certificate::Conditioning { lambda, dual_lambda, .. }) => json!({
            "kind": "conditioning",
            "lambda": lambda,
            "dual_lambda": dual_lambda,
            "log_gap": r.certificate.as_ref().map(Certificate::log_gap),
        }),
    };
    if let Some(c) = check {
        v["verified"] = json!(c.passes());
        v["psd_slack"] = number(c.psd_slack);
        v["check_log_gap"] = number(c.log_gap);
    }
    v
}

fn entropy(a: &EntropyArgs, fmt: Format) -> CmdResult {
    let (rho, pair_sigma) = match io::read_json::<StateInput>(&a.state)? {
        StateInput::Pair { rho, sigma } => (rho.to_state()?, Some(sigma.to_state()?)),
        StateInput::Single(s) => (s.to_state()?, None),
    };
    let sigma = match (&a.sigma, pair_sigma) {
        (Some(p), _) => Some(io::read_state(p)?),
        (None, s) => s,
    };
    let multipartite = rho.dims().len() >= 2;
    let partition: Option<Partition> = match &a.partition {
        Some(s) => Some(s.parse()?),
        None if multipartite => Some(Partition::first_second()),
        None => None,
    };
    let need_partition =
        || partition.clone().ok_or_else(|| arg("this quantity needs a bipartite state or --partition"));
    let need_eps = || a.eps.ok_or_else(|| arg("this quantity needs --eps"));
    let exact = |value: f64| (value, BoundKind::Exact, Value::Null);
    let mut extra = Value::Null;
    let (value, bound_kind, certificate) = match a.name {
        EntropyName::DMax => {
            let sigma = sigma.ok_or_else(|| arg("d_max needs a second state: a {rho, sigma} file or --sigma"))?;
            let r = d_max(&rho, &sigma)?;
            let check = r.certificate.as_ref().map(|_| verify_d_max(&rho, &sigma, &r));
            (r.value, r.bound_kind, certificate_json(&r, check))
        }
        EntropyName::HMin => match &partition {
            Some(p) => {
                let r = h_min_cond(&rho, p)?;
                let check = verify_h_min(&rho, p, &r)?;
                (r.value, r.bound_kind, certificate_json(&r, Some(check)))
            }
            None => exact(h_min(&rho)),
        },
        EntropyName::HMax => match &partition {
            Some(p) => {
                let r = h_max_cond(&rho, p)?;
                (r.value, r.bound_kind, certificate_json(&r, None))
            }
            None => exact(h0_hmax_hr(&rho)?.h_max),
        },
        EntropyName::H0 => exact(h0(&rho)),
        EntropyName::HR => exact(h0_hmax_hr(&rho)?.h_r),
        EntropyName::IMax => {
            let p = need_partition()?;
            let r = i_max(&rho, &p, Direction::AB)?;
            let check = verify_i_max(&rho, &p, Direction::AB, &r)?;
            (r.value, r.bound_kind, certificate_json(&r, Some(check)))
        }
        EntropyName::SmoothH0 => {
            let (r, rep) = smooth_h0(&rho, need_eps()?)?;
            extra = serde_json::to_value(&rep).expect("serializable");
            (r.value, r.bound_kind, Value::Null)
        }
        EntropyName::SmoothIMax => {
            let (r, rep) = smooth_i_max(&rho, &need_partition()?, need_eps()?)?;
            extra = serde_json::to_value(&rep).expect("serializable");
            (r.value, r.bound_kind, Value::Null)
        }
        EntropyName::VonNeumann => {
            if let Some(p) = &partition {
                extra = serde_json::to_value(von_neumann_quantities(&rho, p)?).expect("serializable");
            }
            exact(infogain_core::entropies::entropy(&rho))
        }
    };
    let name = a.name_str();
    match fmt {
        Format::Csv => {
            let mut t = Csv::new(&["quantity", "value", "bound_kind"]);
            let bk = serde_json::to_value(bound_kind).expect("serializable");
            t.push(vec![name.into(), csv_float(value), bk.as_str().unwrap_or_default().into()]);
            Ok(Output::ok(t.render()))
        }
        _ => {
            let mut v = json!({
                "quantity": name,
                "value": number(value),
                "bound_kind": bound_kind,
                "certificate": certificate,
            });
            if let Some(p) = &partition {
                v["partition"] = json!(p.to_string());
            }
            if let Some(e) = a.eps {
                v["eps"] = json!(e);
            }
            if !extra.is_null() {
                v["details"] = extra;
            }
            to_json(&v).map(Output::ok)
        }
    }
}

impl EntropyArgs {
    fn name_str(&self) -> &'static str {
        match self.name {
            EntropyName::DMax => "d_max",
            EntropyName::HMin => "h_min",
            EntropyName::HMax => "h_max",
            EntropyName::H0 => "h0",
            EntropyName::HR => "h_r",
            EntropyName::IMax => "i_max",
            EntropyName::SmoothH0 => "smooth_h0",
            EntropyName::SmoothIMax => "smooth_i_max",
            EntropyName::VonNeumann => "von_neumann",
        }
    }
}

fn optimizer(restarts: usize, seed: u64) -> Result<OptimizerConfig, CliError> {
    if restarts == 0 {
        return Err(arg("--restarts must be at least 1"));
    }
    Ok(OptimizerConfig::with_seed(restarts, seed))
}

fn info_gain_cmd(a: &InfoGainArgs, fmt: Format, seed: u64) -> CmdResult {
    let m = io::read_measurement(&a.measurement)?;
    let best = info_gain(&m, &optimizer(a.restarts, seed)?);
    match fmt {
        Format::Default => Ok(Output::ok(format!("{}\n", text_number(best.value)))),
        Format::Csv => {
            let mut t = Csv::new(&["info_gain", "converged"]);
            t.push(vec![csv_float(best.value), best.converged.to_string()]);
            Ok(Output::ok(t.render()))
        }
        Format::Json => to_json(&json!({
            "info_gain": best.value,
            "outcomes": m.num_outcomes(),
            "log_outcomes": (m.num_outcomes() as f64).log2(),
            "converged": best.converged,
            "restart_values": best.restart_values,
            "optimal_state": StateFile::from_state(&best.state),
        }))
        .map(Output::ok),
    }
}

fn rate_region(a: &RateRegionArgs, fmt: Format, seed: u64) -> CmdResult {
    let m = io::read_measurement(&a.measurement)?;
    let cfg = optimizer(a.restarts, seed)?;
    let region = if a.feedback {
        if a.w_cap.is_some() {
            return Err(arg("--w-cap applies to --non-feedback only"));
        }
        feedback_region(&m, &cfg)
    } else {
        nonfeedback_region(&m, a.w_cap.unwrap_or_else(|| default_w_cap(&m)), true, &cfg)?
    };
    let witnesses: Vec<Value> = region
        .decompositions
        .iter()
        .enumerate()
        .map(|(id, w)| {
            json!({
                "id": id,
                "label": w.label,
                "size": w.size,
                "comm_rate": w.comm_rate,
                "sum_rate": w.sum_rate,
                "post": w.post,
                "inner": w.decomposition.inner.iter().map(io::matrix_to_json).collect::<Vec<_>>(),
            })
        })
        .collect();
    if fmt == Format::Json {
        let mut v = serde_json::to_value(&region).expect("serializable");
        v["decompositions"] = json!(witnesses);
        return to_json(&v).map(Output::ok);
    }
    io::write_json(&a.witness_out, &json!({ "kind": region.kind, "witnesses": witnesses }))?;
    let mut t = Csv::new(&["S", "C", "witness-id"]);
    for p in &region.curve {
        t.push(vec![csv_float(p.s), csv_float(p.c), p.witness.to_string()]);
    }
    Ok(Output::ok(t.render()))
}

enum Protocol {
    Merge,
    Split(SplittingVariant),
    Binned,
}

fn read_cc(path: &Path) -> Result<ClassicallyCoherentState, CliError> {
    Ok(io::read_coherent_state(path)?)
}

fn simulate(a: &ProtocolArgs, fmt: Format, seed: u64, protocol: Protocol) -> CmdResult {
    if fmt == Format::Csv {
        return Err(arg("protocol transcripts are JSON only"));
    }
    let state = read_cc(&a.state)?;
    let t: ProtocolTranscript = match protocol {
        Protocol::Merge | Protocol::Split(_) if a.eps2.is_some() => {
            return Err(arg("--eps2 applies to binned-split only"));
        }
        Protocol::Merge => run_merging(&state, a.eps, seed)?,
        Protocol::Split(v) => run_splitting(&state, a.eps, seed, v)?,
        Protocol::Binned => {
            let eps2 = a.eps2.ok_or_else(|| arg("binned-split needs --eps2"))?;
            run_binned_splitting(&state, a.eps, eps2, seed)?
        }
    };
    let holds = t.cost_checks_hold() && t.achieved_error <= t.error_bound + 1e-9;
    Ok(Output::checked(to_json(&t)?, holds))
}

fn sandwich(a: &SandwichArgs, fmt: Format, seed: u64) -> CmdResult {
    if a.trials == 0 || a.outcomes < 2 {
        return Err(arg("need at least one trial and two outcomes"));
    }
    let mut rows = Vec::with_capacity(a.trials);
    for trial in 0..a.trials as u64 {
        let mut rng = task_rng(seed, trial);
        let state = ClassicallyCoherentState::random(a.outcomes, 1, 2, &mut rng);
        let t = run_binned_splitting(&state, a.eps, a.eps2, derive_seed(seed, trial))?;
        let bound = converse_bound(&state, a.eps, a.eps2)?;
        let cost = t.qubits_or_bits_sent as f64;
        rows.push((cost, bound.value, cost - bound.value, bound.certified));
    }
    let holds = rows.iter().all(|r| r.2 >= -1e-9);
    let out = if fmt == Format::Json {
        let v: Vec<Value> = rows
            .iter()
            .map(|r| json!({ "achievable_c": r.0, "converse_bound": r.1, "gap": r.2, "certified": r.3 }))
            .collect();
        to_json(&v)?
    } else {
        let mut t = Csv::new(&["achievable_c", "converse_bound", "gap"]);
        for r in &rows {
            t.push(vec![csv_float(r.0), csv_float(r.1), csv_float(r.2)]);
        }
        t.render()
    };
    Ok(Output::checked(out, holds))
}

fn typicality(a: &TypicalityArgs, fmt: Format) -> CmdResult {
    let probs = io::read_distribution(&a.dist)?;
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(arg(format!("--eps {} must lie in (0, 1)", a.eps)));
    }
    let mut spec = TypicalSpec::new(probs, a.n, a.delta)?;
    if let Some(c) = a.c {
        spec = spec.with_c(c);
    }
    let report = verify_typicality_properties(&spec, a.eps)?;
    let out = if fmt == Format::Csv {
        let mut t = Csv::new(&["property", "holds", "value", "bound"]);
        for p in &report.properties {
            t.push(vec![p.name.clone(), p.holds.to_string(), csv_float(p.value), csv_float(p.bound)]);
        }
        t.render()
    } else {
        to_json(&report)?
    };
    Ok(Output::checked(out, report.all_hold))
}

fn verify(a: &VerifyArgs, fmt: Format, seed: u64) -> CmdResult {
    let suite = parse_suite(&a.suite)?;
    if !(a.scale > 0.0 && a.scale.is_finite()) {
        return Err(arg("--scale must be positive"));
    }
    let report = run_suite(suite, &SuiteConfig { seed, scale: a.scale })?;
    let out = if fmt == Format::Csv {
        let mut t = Csv::new(&["invariant", "trials", "passed", "errors", "worst_margin", "advisory"]);
        for i in &report.invariants {
            t.push(vec![
                i.name.clone(),
                i.trials.to_string(),
                i.passed.to_string(),
                i.errors.to_string(),
                csv_float(i.worst_margin),
                i.advisory.to_string(),
            ]);
        }
        t.render()
    } else {
        to_json(&report)?
    };
    Ok(Output::checked(out, report.all_pass))
}
