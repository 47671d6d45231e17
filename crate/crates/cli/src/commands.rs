//! Subcommand implementations. Each writes its report to `out` and returns a
//! [`CliError`] carrying the process exit code on failure.

use std::fs;
use std::io::Write;
use std::path::Path;

use bcst_core::bases::{bell_basis, controller_basis, entangled_basis, ControllerBasis, ControllerFamily};
use bcst_core::catalog::{self, candidate_bases, recognize, RecognizeError};
use bcst_core::census::{self, CensusError};
use bcst_core::channel::{build_channel, ChannelError, ChannelSpec, QubitLayout};
use bcst_core::protocol::{run_bcst, verify_control, BcstTranscript, ControlSides, ProtocolError};
use bcst_core::qstate::{fidelity_up_to_phase, StateVector};
use bcst_core::{ChannelKind, Complex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::amplitudes::{parse_amplitudes, render_amplitudes};
use crate::args::{CensusMode, Command};
use crate::document::{document_from_spec, parse_document, render_document, spec_from_document, DocumentError};

pub mod exit {
    pub const OK: u8 = 0;
    pub const INPUT: u8 = 1;
    pub const RULE_VIOLATION: u8 = 2;
    pub const INTRACTABLE: u8 = 3;
    pub const WRONG_KIND: u8 = 4;
    pub const CHECK_FAILED: u8 = 5;
    pub const NOT_RECOGNIZED: u8 = 6;
}

/// Environment variable overriding the input normalization tolerance.
pub const TOLERANCE_ENV: &str = "BCST_TOLERANCE";

/// Default tolerance for amplitude files and numeric custom amplitudes.
pub const DEFAULT_INPUT_TOLERANCE: f64 = 1e-9;

/// Simulation passes when every output fidelity reaches `1 - SIMULATION_SLACK`.
pub const SIMULATION_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self::new(exit::INPUT, message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

fn channel_error(e: ChannelError) -> CliError {
    let code = match &e {
        ChannelError::Selection(_) | ChannelError::DuplicateIndex(_) => exit::RULE_VIOLATION,
        ChannelError::WrongKind { .. } => exit::WRONG_KIND,
        _ => exit::INPUT,
    };
    CliError::new(code, e.to_string())
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Channel(c) => channel_error(c),
            other => CliError::input(other.to_string()),
        }
    }
}

fn protocol_error(e: ProtocolError) -> CliError {
    match e {
        ProtocolError::Channel(c) => channel_error(c),
        ProtocolError::WrongKind { .. } => CliError::new(exit::WRONG_KIND, e.to_string()),
        other => CliError::input(other.to_string()),
    }
}

fn census_error(e: CensusError) -> CliError {
    match e {
        CensusError::Intractable { .. } => CliError::new(exit::INTRACTABLE, e.to_string()),
        other => CliError::input(other.to_string()),
    }
}

/// Input tolerance, honouring [`TOLERANCE_ENV`].
pub fn input_tolerance() -> Result<f64, CliError> {
    match std::env::var(TOLERANCE_ENV) {
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
            _ => Err(CliError::input(format!(
                "{TOLERANCE_ENV}={v:?} is not a positive number"
            ))),
        },
        Err(_) => Ok(DEFAULT_INPUT_TOLERANCE),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn emit(text: &str, dest: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match dest {
        Some(p) => fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn load_spec(path: &Path) -> Result<(ChannelSpec<f64>, Option<QubitLayout>), CliError> {
    let text = read(path)?;
    let doc = parse_document(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(spec_from_document(&doc, input_tolerance()?)?)
}

pub fn run(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Build { spec, out: dest } => cmd_build(spec, dest.as_deref(), out),
        Command::Census { p, n, mode, json } => cmd_census(*p, *n, mode.mode(), *json, out),
        Command::Simulate {
            spec,
            seed,
            trials,
            alice_state,
            bob_state,
            require_both_controlled,
            transcript,
        } => cmd_simulate(
            spec,
            &SimulateOptions {
                seed: *seed,
                trials: *trials,
                alice_state: alice_state.as_deref(),
                bob_state: bob_state.as_deref(),
                require_both_controlled: *require_both_controlled,
                transcript: transcript.as_deref(),
            },
            out,
        ),
        Command::Catalog {
            verify,
            export,
            out: dest,
        } => match (verify, export) {
            (true, None) => cmd_catalog_verify(out),
            (false, Some(id)) => cmd_catalog_export(id, dest.as_deref(), out),
            _ => Err(CliError::input("give exactly one of --verify or --export <id>")),
        },
        Command::Recognize {
            amplitudes,
            layout,
            candidates,
            pair_basis,
            kind,
        } => cmd_recognize(
            amplitudes,
            layout.as_deref(),
            candidates.as_deref(),
            pair_basis,
            *kind,
            out,
        ),
    }
}

pub fn cmd_build(spec_path: &Path, dest: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let (spec, layout) = load_spec(spec_path)?;
    let (state, canonical) = build_channel(&spec).map_err(channel_error)?;
    let layout = layout.unwrap_or(canonical);
    let state = layout.arrange(&state).map_err(channel_error)?;
    emit(&render_amplitudes(&state), dest, out)?;
    if let Some(p) = dest {
        writeln!(
            out,
            "wrote {} amplitudes ({} qubits, layout {layout}) to {}",
            state.dim(),
            state.num_qubits(),
            p.display()
        )?;
    }
    Ok(())
}

pub fn cmd_census(p: u32, n: u64, mode: CensusMode, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let formula = census::formula_count(p, n).map_err(census_error)?;
    let l = census::min_controller_qubits(n);
    let multiplicity = census::multiplicity_factor(l, n).map_err(census_error)?;
    if mode == CensusMode::Formula {
        if json {
            let v = serde_json::json!({ "p": p, "n": n, "formula_value": formula.to_string(), "l": l,
                "multiplicity_factor": multiplicity.to_string() });
            writeln!(out, "{v}")?;
        } else {
            writeln!(out, "census p={p} n={n}")?;
            writeln!(out, "  formula       {formula}")?;
            writeln!(out, "  controller    l={l} multiplicity {multiplicity}")?;
        }
        return Ok(());
    }
    let report = census::census_report(p, n).map_err(census_error)?;
    if report.oracle_value.is_none() && report.constructive_value.is_none() {
        let side = 1usize << p;
        let work = census::enumerator_work(side, side, n as usize).map_err(census_error)?;
        return Err(CliError::new(
            exit::INTRACTABLE,
            format!(
                "independent count needs {work} steps, above the limit of {}",
                census::TRACTABLE_LIMIT
            ),
        ));
    }
    if json {
        #[derive(Serialize)]
        struct Row {
            p: u32,
            n: u64,
            formula_value: String,
            oracle_value: Option<u64>,
            constructive_value: Option<u64>,
            l: u32,
            multiplicity_factor: String,
            formula_matches: Option<bool>,
        }
        let row = Row {
            p,
            n,
            formula_value: report.formula_value.to_string(),
            oracle_value: report.oracle_value,
            constructive_value: report.constructive_value,
            l: report.l,
            multiplicity_factor: report.multiplicity_factor.to_string(),
            formula_matches: report.formula_matches,
        };
        writeln!(out, "{}", serde_json::to_string(&row).expect("plain struct"))?;
        return Ok(());
    }
    let show = |v: Option<u64>| v.map_or("intractable".to_string(), |x| x.to_string());
    writeln!(out, "census p={p} n={n}")?;
    if mode == CensusMode::Both {
        writeln!(out, "  formula       {}", report.formula_value)?;
    }
    writeln!(out, "  oracle        {}", show(report.oracle_value))?;
    writeln!(out, "  enumerated    {}", show(report.constructive_value))?;
    writeln!(
        out,
        "  controller    l={} multiplicity {}",
        report.l, report.multiplicity_factor
    )?;
    if report.counts_agree == Some(false) {
        writeln!(out, "  WARN oracle and enumerator disagree")?;
    }
    if mode == CensusMode::Both {
        let reference = report
            .oracle_value
            .or(report.constructive_value)
            .expect("checked above");
        match report.formula_matches {
            Some(true) => writeln!(out, "  MATCH")?,
            _ => writeln!(
                out,
                "  WARN formula {} differs from the rule-based count {reference}",
                report.formula_value
            )?,
        }
    }
    Ok(())
}

/// Named single-qubit states (`0`, `1`, `+`, `-`, `+i`, `-i`) or `re,im;re,im`.
pub fn parse_state(text: &str) -> Result<StateVector<f64>, CliError> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match text.trim() {
        "0" => vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
        "1" => vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
        "+" => vec![Complex::new(h, 0.0), Complex::new(h, 0.0)],
        "-" => vec![Complex::new(h, 0.0), Complex::new(-h, 0.0)],
        "+i" => vec![Complex::new(h, 0.0), Complex::new(0.0, h)],
        "-i" => vec![Complex::new(h, 0.0), Complex::new(0.0, -h)],
        other => other
            .split(';')
            .map(|pair| {
                let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
                match parts[..] {
                    [re, im] => Ok(Complex::new(
                        re.parse()
                            .map_err(|_| CliError::input(format!("bad real part {re:?}")))?,
                        im.parse()
                            .map_err(|_| CliError::input(format!("bad imaginary part {im:?}")))?,
                    )),
                    _ => Err(CliError::input(format!("bad amplitude {pair:?}; expected re,im"))),
                }
            })
            .collect::<Result<_, _>>()?,
    };
    if amps.len() != 2 {
        return Err(CliError::input(format!(
            "input state needs 2 amplitudes, got {}",
            amps.len()
        )));
    }
    StateVector::from_amplitudes_with_tolerance(amps, input_tolerance()?)
        .map_err(|e| CliError::input(format!("input state: {e}")))
}

pub struct SimulateOptions<'a> {
    pub seed: u64,
    pub trials: usize,
    pub alice_state: Option<&'a str>,
    pub bob_state: Option<&'a str>,
    pub require_both_controlled: bool,
    pub transcript: Option<&'a Path>,
}

#[derive(Serialize)]
struct TrialRecord<'a> {
    trial: usize,
    #[serde(flatten)]
    transcript: &'a BcstTranscript,
}

/// Transcript lines for `trials` seeded runs, plus min/mean fidelities per direction.
pub fn simulate_transcript(
    spec: &ChannelSpec<f64>,
    seed: u64,
    trials: usize,
    alice: Option<&StateVector<f64>>,
    bob: Option<&StateVector<f64>>,
) -> Result<(String, [(f64, f64); 2]), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    let mut stats = [(1.0f64, 0.0f64); 2];
    for trial in 0..trials {
        let a = match alice {
            Some(s) => s.clone(),
            None => StateVector::random(1, &mut rng).map_err(|e| CliError::input(e.to_string()))?,
        };
        let b = match bob {
            Some(s) => s.clone(),
            None => StateVector::random(1, &mut rng).map_err(|e| CliError::input(e.to_string()))?,
        };
        let mut outcome = run_bcst(spec, &a, &b, &mut rng).map_err(protocol_error)?;
        outcome.transcript.seed = Some(seed);
        let t = &outcome.transcript;
        for (slot, f) in stats.iter_mut().zip([t.fidelity_alice_to_bob, t.fidelity_bob_to_alice]) {
            slot.0 = slot.0.min(f);
            slot.1 += f / trials as f64;
        }
        text.push_str(&serde_json::to_string(&TrialRecord { trial, transcript: t }).expect("plain struct"));
        text.push('\n');
    }
    Ok((text, stats))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cmd_simulate(spec_path: &Path, opts: &SimulateOptions<'_>, out: &mut dyn Write) -> Result<(), CliError> {
    let (spec, _) = load_spec(spec_path)?;
    if spec.kind() != ChannelKind::Bcst {
        return Err(CliError::new(
            exit::WRONG_KIND,
            "simulate runs bidirectional teleportation; this is a dialogue spec",
        ));
    }
    if opts.trials == 0 {
        return Err(CliError::input("--trials must be at least 1"));
    }
    if let Err(e) = spec.validate() {
        writeln!(out, "WARN {e}")?;
    }
    let control = verify_control(&spec).map_err(protocol_error)?;
    writeln!(
        out,
        "control: {} (A1B1 purity {:.6}, A2B2 purity {:.6})",
        control.sides, control.directions[0].purity, control.directions[1].purity
    )?;
    if opts.require_both_controlled && control.sides != ControlSides::Both {
        return Err(CliError::new(
            exit::CHECK_FAILED,
            format!("controller gates {} teleportation direction(s) only", control.sides),
        ));
    }
    let alice = opts.alice_state.map(parse_state).transpose()?;
    let bob = opts.bob_state.map(parse_state).transpose()?;
    let (text, stats) = simulate_transcript(&spec, opts.seed, opts.trials, alice.as_ref(), bob.as_ref())?;
    if let Some(p) = opts.transcript {
        fs::write(p, &text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
    }
    writeln!(out, "trials: {}  seed: {}", opts.trials, opts.seed)?;
    writeln!(
        out,
        "alice->bob fidelity: min {:.15} mean {:.15}",
        stats[0].0, stats[0].1
    )?;
    writeln!(
        out,
        "bob->alice fidelity: min {:.15} mean {:.15}",
        stats[1].0, stats[1].1
    )?;
    writeln!(out, "transcript sha256: {}", sha256_hex(text.as_bytes()))?;
    let worst = stats[0].0.min(stats[1].0);
    if worst < 1.0 - SIMULATION_SLACK {
        return Err(CliError::new(
            exit::CHECK_FAILED,
            format!("minimum fidelity {worst} below 1 - {SIMULATION_SLACK}"),
        ));
    }
    Ok(())
}

/// Outcome of checking one catalog entry.
#[derive(Debug, Clone)]
pub struct CatalogCheck {
    pub id: &'static str,
    pub qubits: usize,
    pub rule_status: catalog::RuleStatus,
    pub expected: ControlSides,
    pub observed: ControlSides,
    /// Fidelity of the document round-trip rebuild with the reconstruction.
    pub document_fidelity: f64,
    /// Fidelity of the recognized spec's rebuild with the reconstruction.
    pub recognized_fidelity: Option<f64>,
}

impl CatalogCheck {
    pub fn reconstruction_ok(&self) -> bool {
        self.document_fidelity >= 1.0 - 1e-12 && self.recognized_fidelity.is_some_and(|f| f >= 1.0 - 1e-12)
    }

    pub fn control_ok(&self) -> bool {
        self.expected == self.observed
    }
}

pub fn check_catalog() -> Result<Vec<CatalogCheck>, CliError> {
    let mut rows = Vec::new();
    for entry in catalog::catalog_entries::<f64>() {
        let state = catalog::reconstruct(&entry).map_err(channel_error)?;
        let text = render_document(&document_from_spec(&entry.spec, None))?;
        let (spec, _) = spec_from_document(&parse_document(&text)?, DEFAULT_INPUT_TOLERANCE)?;
        let rebuilt = catalog::rebuild(&spec).map_err(channel_error)?;
        let document_fidelity = fidelity_up_to_phase(&rebuilt, &state).map_err(|e| CliError::input(e.to_string()))?;
        let layout = entry.spec.layout();
        let cands = candidate_bases(entry.spec.controller.l()).map_err(|e| CliError::input(e.to_string()))?;
        let recognized_fidelity = match recognize(&state, &layout, &cands, &bell_basis()) {
            Ok(found) => {
                let s = catalog::rebuild(&found).map_err(channel_error)?;
                Some(fidelity_up_to_phase(&s, &state).map_err(|e| CliError::input(e.to_string()))?)
            }
            Err(_) => None,
        };
        let observed = verify_control(&entry.spec).map_err(protocol_error)?.sides;
        rows.push(CatalogCheck {
            id: entry.id,
            qubits: entry.qubit_count,
            rule_status: entry.rule_status,
            expected: entry.control_sides,
            observed,
            document_fidelity,
            recognized_fidelity,
        });
    }
    Ok(rows)
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_catalog_verify(out: &mut dyn Write) -> Result<(), CliError> {
    let rows = check_catalog()?;
    writeln!(
        out,
        "{:<8} {:>6}  {:<24} {:<26} {:<14} control",
        "id", "qubits", "rules", "sides (expected)", "reconstruction"
    )?;
    let mut failures = 0;
    for r in &rows {
        let ok = r.reconstruction_ok() && r.control_ok();
        failures += usize::from(!ok);
        writeln!(
            out,
            "{:<8} {:>6}  {:<24} {:<26} {:<14} {}",
            r.id,
            r.qubits,
            r.rule_status.to_string(),
            format!("{} ({})", r.observed, r.expected),
            pass(r.reconstruction_ok()),
            pass(r.control_ok()),
        )?;
    }
    writeln!(out, "{} entries, {} failed", rows.len(), failures)?;
    if failures > 0 {
        return Err(CliError::new(
            exit::CHECK_FAILED,
            format!("{failures} catalog entries failed verification"),
        ));
    }
    Ok(())
}

pub fn cmd_catalog_export(id: &str, dest: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let entry = catalog::find_entry::<f64>(id).ok_or_else(|| {
        let known: Vec<&str> = catalog::catalog_entries::<f64>().iter().map(|e| e.id).collect();
        CliError::input(format!("unknown catalog entry {id:?}; known: {}", known.join(", ")))
    })?;
    let mut text = format!("# {} ({})\n", entry.id, entry.source_ref);
    if entry.is_flagged() {
        text.push_str(&format!("# {} as published\n", entry.rule_status));
    }
    text.push_str(&render_document(&document_from_spec(&entry.spec, None))?);
    emit(&text, dest, out)
}

fn parse_candidates(list: Option<&str>, l: usize) -> Result<Vec<ControllerBasis<f64>>, CliError> {
    let Some(list) = list else {
        return candidate_bases(l).map_err(|e| CliError::input(e.to_string()));
    };
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "mixed" {
            let all = candidate_bases(l).map_err(|e| CliError::input(e.to_string()))?;
            out.extend(
                all.into_iter()
                    .filter(|b| matches!(b.family(), ControllerFamily::Mixed(_))),
            );
            continue;
        }
        let family: ControllerFamily = name
            .parse()
            .map_err(|e: bcst_core::bases::BasisError| CliError::input(e.to_string()))?;
        match controller_basis(&family, l) {
            Ok(b) => out.push(b),
            // families that cannot exist on this register are skipped
            Err(_) if matches!(family, ControllerFamily::Ghz | ControllerFamily::Mixed(_)) => {}
            Err(e) => return Err(CliError::input(e.to_string())),
        }
    }
    if out.is_empty() {
        return Err(CliError::input(format!(
            "no usable candidate bases for {l} controller qubit(s)"
        )));
    }
    Ok(out)
}

pub fn cmd_recognize(
    path: &Path,
    layout: Option<&str>,
    candidates: Option<&str>,
    pair_basis: &str,
    kind: crate::args::KindArg,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let state = parse_amplitudes(&read(path)?, input_tolerance()?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let basis = entangled_basis::<f64>(pair_basis).map_err(|e| CliError::input(e.to_string()))?;
    let p = basis.p();
    let nq = state.num_qubits();
    let layout = match layout {
        Some(s) => s
            .parse::<QubitLayout>()
            .map_err(|e| CliError::input(format!("--layout: {e}")))?,
        None => {
            let pair_qubits = match kind {
                crate::args::KindArg::Bcst => 2 * p,
                crate::args::KindArg::Qd => p,
            };
            if nq <= pair_qubits {
                return Err(CliError::input(format!("{nq} qubits leave no controller qubits")));
            }
            match kind {
                crate::args::KindArg::Bcst => QubitLayout::bcst(p, nq - pair_qubits),
                crate::args::KindArg::Qd => QubitLayout::qd(p, nq - pair_qubits),
            }
        }
    };
    if layout.num_qubits() != nq {
        return Err(CliError::input(format!(
            "layout has {} roles for a {nq}-qubit state",
            layout.num_qubits()
        )));
    }
    let cands = parse_candidates(candidates, layout.controller_qubits())?;
    match recognize(&state, &layout, &cands, &basis) {
        Ok(spec) => {
            let text = render_document(&document_from_spec(&spec, Some(&layout)))?;
            out.write_all(text.as_bytes())?;
            Ok(())
        }
        Err(RecognizeError::NotRecognized { tried }) => {
            writeln!(out, "NOT-RECOGNIZED")?;
            Err(CliError::new(
                exit::NOT_RECOGNIZED,
                format!("no decomposition over {tried} candidate bases"),
            ))
        }
        Err(e) => Err(CliError::input(e.to_string())),
    }
}
