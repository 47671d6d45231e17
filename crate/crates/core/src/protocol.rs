//! Teleportation, controller disclosure, bidirectional runs, control
//! verification and quantum-dialogue rounds.

use std::fmt;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bases::{bell, bell_basis, BellKind};
use crate::channel::{
    build_bcst_channel_unchecked, build_qd_channel, charlie_collapse_targets, ChannelError, ChannelKind, ChannelSpec,
    QubitLayout, Terms,
};
use crate::qstate::{fidelity_up_to_phase, DensityMatrix, Operator, QubitSet, StateError, StateVector};
use crate::scalar::{c, Real};

/// Purity below `1 - CONTROL_SLACK` counts as mixed; fidelity below it counts as distinct.
pub const CONTROL_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("controller outcome {outcome} lies outside the channel's subset (probability {probability:e})")]
    OutsideSubset { outcome: usize, probability: f64 },
    #[error("{0} pair elements are not supported here; Bell pairs are required")]
    UnsupportedBasis(String),
    #[error("expected a {expected} channel")]
    WrongKind { expected: ChannelKind },
    #[error("message {0} does not fit in two bits")]
    InvalidBits(u8),
    #[error("input must be a single-qubit state, got {0} qubits")]
    InputSize(usize),
    #[error("no Pauli operator decodes the final state")]
    Undecodable,
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;

/// Pauli operators with `iY = [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PauliOp {
    I,
    X,
    #[serde(rename = "iY")]
    IY,
    Z,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::IY, PauliOp::Z];

    pub fn matrix<T: Real>(self) -> Operator<T> {
        let (a, b, cc, d) = match self {
            PauliOp::I => (1., 0., 0., 1.),
            PauliOp::X => (0., 1., 1., 0.),
            PauliOp::IY => (0., 1., -1., 0.),
            PauliOp::Z => (1., 0., 0., -1.),
        };
        Operator::from_rows(vec![vec![c(a, 0.), c(b, 0.)], vec![c(cc, 0.), c(d, 0.)]]).expect("2x2")
    }

    /// Dense-coding message carried by this operator: `00 -> I, 01 -> X, 10 -> iY, 11 -> Z`.
    pub fn message(self) -> u8 {
        self as u8
    }

    pub fn from_message(bits: u8) -> Result<Self> {
        Self::ALL
            .get(bits as usize)
            .copied()
            .ok_or(ProtocolError::InvalidBits(bits))
    }

    /// `a * b = phase * P`.
    pub fn multiply(a: PauliOp, b: PauliOp) -> (Phase, PauliOp) {
        let prod = a.matrix::<f64>().matmul(&b.matrix()).expect("2x2");
        for p in Self::ALL {
            let m = p.matrix::<f64>();
            // locate the phase from the first nonzero entry of m
            let (r, col) = if m.get(0, 0).norm() > 0.5 { (0, 0) } else { (0, 1) };
            let ratio = prod.get(r, col) / m.get(r, col);
            let matches = (0..2).all(|i| (0..2).all(|j| (prod.get(i, j) - ratio * m.get(i, j)).norm() < 1e-12));
            if matches {
                return (
                    Phase::from_complex(ratio).expect("Pauli products carry a fourth-root phase"),
                    p,
                );
            }
        }
        unreachable!("the Pauli set is closed up to phase")
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PauliOp::I => "I",
            PauliOp::X => "X",
            PauliOp::IY => "iY",
            PauliOp::Z => "Z",
        })
    }
}

/// Global phase in `{1, i, -1, -i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    One,
    I,
    MinusOne,
    MinusI,
}

impl Phase {
    fn from_complex(z: Complex<f64>) -> Option<Self> {
        [
            (Phase::One, 1., 0.),
            (Phase::I, 0., 1.),
            (Phase::MinusOne, -1., 0.),
            (Phase::MinusI, 0., -1.),
        ]
        .into_iter()
        .find(|&(_, re, im)| (z - Complex::new(re, im)).norm() < 1e-9)
        .map(|(p, _, _)| p)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::One => "+",
            Phase::I => "+i",
            Phase::MinusOne => "-",
            Phase::MinusI => "-i",
        })
    }
}

/// Multiplication table of a set of Paulis.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    pub ops: Vec<PauliOp>,
    /// `table[r][c] = ops[r] * ops[c]`.
    pub table: Vec<Vec<(Phase, PauliOp)>>,
    /// Every product lies in `ops` up to a global phase.
    pub closed: bool,
}

impl fmt::Display for ClosureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>4}", "*")?;
        for op in &self.ops {
            write!(f, " {op:>5}")?;
        }
        writeln!(f)?;
        for (a, row) in self.ops.iter().zip(&self.table) {
            write!(f, "{a:>4}")?;
            for (ph, p) in row {
                write!(f, " {:>5}", format!("{ph}{p}"))?;
            }
            writeln!(f)?;
        }
        write!(f, "closed: {}", self.closed)
    }
}

pub fn pauli_closure_check(ops: &[PauliOp]) -> ClosureReport {
    let mut set: Vec<PauliOp> = ops.to_vec();
    set.sort();
    set.dedup();
    let table: Vec<Vec<(Phase, PauliOp)>> = set
        .iter()
        .map(|&a| set.iter().map(|&b| PauliOp::multiply(a, b)).collect())
        .collect();
    let closed = table.iter().flatten().all(|(_, p)| set.contains(p));
    ClosureReport {
        ops: set,
        table,
        closed,
    }
}

/// Sender's two-bit Bell-measurement outcome.
///
/// `psi+ -> 00, phi+ -> 01, psi- -> 10, phi- -> 11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "String")]
pub struct Smo(u8);

impl Smo {
    pub const ALL: [Smo; 4] = [Smo(0), Smo(1), Smo(2), Smo(3)];

    pub fn new(bits: u8) -> Result<Self> {
        if bits > 3 {
            return Err(ProtocolError::InvalidBits(bits));
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn b1(self) -> u8 {
        self.0 >> 1
    }

    pub fn b2(self) -> u8 {
        self.0 & 1
    }

    pub fn from_bell(kind: BellKind) -> Self {
        Smo(match kind {
            BellKind::PsiPlus => 0b00,
            BellKind::PhiPlus => 0b01,
            BellKind::PsiMinus => 0b10,
            BellKind::PhiMinus => 0b11,
        })
    }
}

impl fmt::Display for Smo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.b1(), self.b2())
    }
}

impl From<Smo> for String {
    fn from(s: Smo) -> String {
        s.to_string()
    }
}

/// Receiver corrections indexed by the shared Bell state and the sender's outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionTable {
    /// `entries[shared.index()][smo.bits()]`.
    entries: [[PauliOp; 4]; 4],
}

impl CorrectionTable {
    /// The published table.
    pub fn standard() -> Self {
        use PauliOp::*;
        Self {
            entries: [
                // psi+: SMO 00, 01, 10, 11
                [I, X, Z, IY],
                // psi-
                [Z, IY, I, X],
                // phi+
                [X, I, IY, Z],
                // phi-
                [IY, Z, X, I],
            ],
        }
    }

    pub fn from_entries(entries: [[PauliOp; 4]; 4]) -> Self {
        Self { entries }
    }

    pub fn get(&self, shared: BellKind, smo: Smo) -> PauliOp {
        self.entries[shared.index()][smo.bits() as usize]
    }

    /// True iff every row and every column holds each Pauli once.
    pub fn is_latin(&self) -> bool {
        let rows = self.entries.iter().all(|r| {
            let mut v = r.to_vec();
            v.sort();
            v == PauliOp::ALL
        });
        let cols = (0..4).all(|c| {
            let mut v: Vec<PauliOp> = self.entries.iter().map(|r| r[c]).collect();
            v.sort();
            v == PauliOp::ALL
        });
        rows && cols
    }
}

impl fmt::Display for CorrectionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SMO")?;
        for k in BellKind::ALL {
            write!(f, " {:>5}", k.symbol())?;
        }
        for smo in Smo::ALL {
            write!(f, "\n{smo:>3}")?;
            for k in BellKind::ALL {
                write!(f, " {:>5}", self.get(k, smo).to_string())?;
            }
        }
        Ok(())
    }
}

/// Table entry for `(shared, smo)`.
pub fn correction(shared: BellKind, smo: Smo) -> PauliOp {
    CorrectionTable::standard().get(shared, smo)
}

/// Bell-basis measurement of `(qa, qb)`.
pub fn bell_measure<T: Real, R: Rng + ?Sized>(
    state: &StateVector<T>,
    qa: usize,
    qb: usize,
    rng: &mut R,
) -> Result<(Smo, StateVector<T>)> {
    let targets = QubitSet::new(&[qa, qb], state.num_qubits())?;
    let m = state.measure_in_basis(&targets, bell_basis::<T>().elements(), rng)?;
    let kind = BellKind::from_index(m.outcome).expect("four outcomes");
    Ok((Smo::from_bell(kind), m.collapsed))
}

fn apply_single<T: Real>(state: &StateVector<T>, op: PauliOp, qubit: usize) -> Result<StateVector<T>> {
    Ok(state.apply_unitary(&op.matrix(), &QubitSet::new(&[qubit], state.num_qubits())?)?)
}

/// Teleports `input` over a pre-shared `shared` pair, correcting with `choose(smo)`.
pub fn teleport_with<T: Real, R: Rng + ?Sized>(
    shared: BellKind,
    input: &StateVector<T>,
    rng: &mut R,
    choose: impl Fn(Smo) -> Option<PauliOp>,
) -> Result<(StateVector<T>, Smo)> {
    if input.num_qubits() != 1 {
        return Err(ProtocolError::InputSize(input.num_qubits()));
    }
    let register = input.tensor(&bell(shared))?;
    let (smo, collapsed) = bell_measure(&register, 0, 1, rng)?;
    let mut out = collapsed.extract_pure(&QubitSet::new(&[2], 3)?)?;
    if let Some(op) = choose(smo) {
        out = apply_single(&out, op, 0)?;
    }
    Ok((out, smo))
}

/// Standard teleportation with the published corrections.
pub fn teleport<T: Real, R: Rng + ?Sized>(
    shared: BellKind,
    input: &StateVector<T>,
    rng: &mut R,
) -> Result<(StateVector<T>, Smo)> {
    teleport_with(shared, input, rng, |smo| Some(correction(shared, smo)))
}

/// Correction table found purely by simulation, with the worst fidelity deviation observed.
#[derive(Debug, Clone)]
pub struct DerivedTable {
    pub table: Option<CorrectionTable>,
    /// `1 - min fidelity` over all accepted entries and inputs.
    pub max_deviation: f64,
    /// `(shared, smo)` cells where no Pauli (or more than one) restored every input.
    pub ambiguous: Vec<(BellKind, Smo)>,
}

/// Searches, for each shared state and outcome, the Pauli that restores
/// fidelity 1 on `inputs` Haar-random states.
///
/// The uncorrected output for a given outcome is obtained by post-selecting
/// the Bell measurement on that outcome.
pub fn derive_correction_table<R: Rng + ?Sized>(rng: &mut R, inputs: usize, threshold: f64) -> Result<DerivedTable> {
    let samples: Vec<StateVector<f64>> = (0..inputs)
        .map(|_| StateVector::random(1, rng))
        .collect::<Result<_, _>>()?;
    let bells = bell_basis::<f64>();
    let targets = QubitSet::new(&[0, 1], 3)?;
    let mut entries = [[PauliOp::I; 4]; 4];
    let mut ambiguous = Vec::new();
    let mut worst = 0.0f64;
    for shared in BellKind::ALL {
        for outcome in BellKind::ALL {
            let smo = Smo::from_bell(outcome);
            let raw: Vec<StateVector<f64>> = samples
                .iter()
                .map(|s| {
                    let reg = s.tensor(&bell(shared))?;
                    Ok(reg.project_out(&targets, &bells.elements()[outcome.index()])?.1)
                })
                .collect::<Result<_>>()?;
            let mut found = Vec::new();
            for op in PauliOp::ALL {
                let mut min_f = 1.0f64;
                for (s, r) in samples.iter().zip(&raw) {
                    let out = apply_single(r, op, 0)?;
                    min_f = min_f.min(fidelity_up_to_phase(s, &out)?);
                }
                if 1.0 - min_f <= threshold {
                    found.push((op, 1.0 - min_f));
                }
            }
            if let [(op, dev)] = found[..] {
                entries[shared.index()][smo.bits() as usize] = op;
                worst = worst.max(dev);
            } else {
                ambiguous.push((shared, smo));
            }
        }
    }
    Ok(DerivedTable {
        table: ambiguous.is_empty().then(|| CorrectionTable::from_entries(entries)),
        max_deviation: worst,
        ambiguous,
    })
}

/// Controller's announcement.
#[derive(Debug, Clone)]
pub struct Disclosure<T: Real> {
    /// Term index (zero-based) identified by the measurement.
    pub m: usize,
    pub probability: T,
    /// Register after the measurement, controller qubits collapsed.
    pub collapsed: StateVector<T>,
}

fn disclose_in_register<T: Real, R: Rng + ?Sized>(
    register: &StateVector<T>,
    spec: &ChannelSpec<T>,
    controller_positions: &[usize],
    rng: &mut R,
) -> Result<Disclosure<T>> {
    let targets = QubitSet::new(controller_positions, register.num_qubits())?;
    let meas = register.measure_in_basis(&targets, spec.controller.elements(), rng)?;
    let m = spec
        .subset
        .iter()
        .position(|&s| s == meas.outcome)
        .ok_or(ProtocolError::OutsideSubset {
            outcome: meas.outcome,
            probability: meas.probability.as_f64(),
        })?;
    Ok(Disclosure {
        m,
        probability: meas.probability,
        collapsed: meas.collapsed,
    })
}

/// Measures the controller qubits and returns the term index with the
/// remaining pair-qubit state (controller qubits removed).
pub fn charlie_disclose<T: Real, R: Rng + ?Sized>(
    channel: &StateVector<T>,
    spec: &ChannelSpec<T>,
    layout: &QubitLayout,
    rng: &mut R,
) -> Result<(usize, T, StateVector<T>)> {
    let positions = layout.controller_positions();
    let d = disclose_in_register(channel, spec, &positions, rng)?;
    let targets = charlie_collapse_targets(layout)?;
    let (_, pairs) = d.collapsed.project_out(&targets, spec.controller_state(d.m))?;
    Ok((d.m, d.probability, pairs))
}

/// Replayable record of one bidirectional run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcstTranscript {
    pub seed: Option<u64>,
    pub m: usize,
    pub disclosure_probability: f64,
    pub shared_first: String,
    pub shared_second: String,
    pub alice_smo: Smo,
    pub bob_smo: Smo,
    /// Applied by Bob to recover Alice's qubit.
    pub bob_correction: PauliOp,
    /// Applied by Alice to recover Bob's qubit.
    pub alice_correction: PauliOp,
    pub fidelity_alice_to_bob: f64,
    pub fidelity_bob_to_alice: f64,
}

#[derive(Debug, Clone)]
pub struct BcstOutcome<T: Real> {
    /// Bob's received copy of Alice's input.
    pub bob_out: StateVector<T>,
    /// Alice's received copy of Bob's input.
    pub alice_out: StateVector<T>,
    pub transcript: BcstTranscript,
}

fn bell_kind_of<T: Real>(spec: &ChannelSpec<T>, index: usize) -> Result<BellKind> {
    if !spec.basis.is_bell() {
        return Err(ProtocolError::UnsupportedBasis(spec.basis.name().to_string()));
    }
    BellKind::from_index(index - 1).ok_or(ProtocolError::UnsupportedBasis(spec.basis.name().to_string()))
}

/// Full bidirectional run on the register `channel ⊗ alice_in ⊗ bob_in`.
///
/// Control deficiencies do not stop the run; only structural checks apply.
pub fn run_bcst<T: Real, R: Rng + ?Sized>(
    spec: &ChannelSpec<T>,
    alice_in: &StateVector<T>,
    bob_in: &StateVector<T>,
    rng: &mut R,
) -> Result<BcstOutcome<T>> {
    let cells = match &spec.terms {
        Terms::Pairs(s) => s.cells().to_vec(),
        Terms::Singles(_) => {
            return Err(ProtocolError::WrongKind {
                expected: ChannelKind::Bcst,
            })
        }
    };
    if !spec.basis.is_bell() {
        return Err(ProtocolError::UnsupportedBasis(spec.basis.name().to_string()));
    }
    for s in [alice_in, bob_in] {
        if s.num_qubits() != 1 {
            return Err(ProtocolError::InputSize(s.num_qubits()));
        }
    }
    let (channel, layout) = build_bcst_channel_unchecked(spec)?;
    let nc = channel.num_qubits();
    let (alice_q, bob_q) = (nc, nc + 1);
    let register = channel.tensor(alice_in)?.tensor(bob_in)?;

    let d = disclose_in_register(&register, spec, &layout.controller_positions(), rng)?;
    let (i, j) = cells[d.m];
    let first = bell_kind_of(spec, i)?;
    let second = bell_kind_of(spec, j)?;
    let [a1, b1] = <[usize; 2]>::try_from(layout.pair_positions(1)).expect("Bell pair");
    let [a2, b2] = <[usize; 2]>::try_from(layout.pair_positions(2)).expect("Bell pair");

    // Alice -> Bob over (A1, B1)
    let (alice_smo, reg) = bell_measure(&d.collapsed, alice_q, a1, rng)?;
    let bob_correction = correction(first, alice_smo);
    let reg = apply_single(&reg, bob_correction, b1)?;

    // Bob -> Alice over (A2, B2), Bob holding the sending half B2
    let (bob_smo, reg) = bell_measure(&reg, bob_q, b2, rng)?;
    let alice_correction = correction(second, bob_smo);
    let reg = apply_single(&reg, alice_correction, a2)?;

    let n = reg.num_qubits();
    let bob_out = reg.extract_pure(&QubitSet::new(&[b1], n)?)?;
    let alice_out = reg.extract_pure(&QubitSet::new(&[a2], n)?)?;
    let transcript = BcstTranscript {
        seed: None,
        m: d.m,
        disclosure_probability: d.probability.as_f64(),
        shared_first: first.symbol().to_string(),
        shared_second: second.symbol().to_string(),
        alice_smo,
        bob_smo,
        bob_correction,
        alice_correction,
        fidelity_alice_to_bob: fidelity_up_to_phase(alice_in, &bob_out)?.as_f64(),
        fidelity_bob_to_alice: fidelity_up_to_phase(bob_in, &alice_out)?.as_f64(),
    };
    Ok(BcstOutcome {
        bob_out,
        alice_out,
        transcript,
    })
}

/// [`run_bcst`] with a ChaCha8 stream seeded by `seed`, recorded in the transcript.
pub fn run_bcst_seeded<T: Real>(
    spec: &ChannelSpec<T>,
    alice_in: &StateVector<T>,
    bob_in: &StateVector<T>,
    seed: u64,
) -> Result<BcstOutcome<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = run_bcst(spec, alice_in, bob_in, &mut rng)?;
    out.transcript.seed = Some(seed);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlSides {
    Both,
    FirstOnly,
    SecondOnly,
    Neither,
}

impl fmt::Display for ControlSides {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlSides::Both => "both",
            ControlSides::FirstOnly => "first-only",
            ControlSides::SecondOnly => "second-only",
            ControlSides::Neither => "neither",
        })
    }
}

/// Control assessment of one teleportation direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionControl {
    /// Purity of the direction's pair qubits before disclosure.
    pub purity: f64,
    /// The per-outcome pair states are not all equal up to phase.
    pub states_vary: bool,
    pub controlled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlReport {
    /// Directions 1 (A1B1, Alice to Bob) and 2 (A2B2, Bob to Alice).
    pub directions: [DirectionControl; 2],
    /// Trace distance between the pre-disclosure pair state and the uniform term mixture.
    pub mixture_distance: f64,
    pub mixture_ok: bool,
    pub sides: ControlSides,
}

/// Checks whether the controller gates each direction.
pub fn verify_control<T: Real>(spec: &ChannelSpec<T>) -> Result<ControlReport> {
    if spec.kind() != ChannelKind::Bcst {
        return Err(ProtocolError::WrongKind {
            expected: ChannelKind::Bcst,
        });
    }
    let (state, layout) = build_bcst_channel_unchecked(spec)?;
    let nq = state.num_qubits();
    let controller = charlie_collapse_targets(&layout)?;
    let p = spec.basis.p();
    let n = spec.n();

    let conditional: Vec<StateVector<T>> = (0..n)
        .map(|m| Ok(state.project_out(&controller, spec.controller_state(m))?.1))
        .collect::<Result<_>>()?;

    let mut directions = [DirectionControl {
        purity: 1.0,
        states_vary: false,
        controlled: false,
    }; 2];
    for (d, slot) in directions.iter_mut().enumerate() {
        let keep = QubitSet::new(&layout.pair_positions(d + 1), nq)?;
        let purity = state.partial_trace(&keep)?.purity().as_f64();
        let local = QubitSet::range(d * p, p, 2 * p)?;
        let per_m: Vec<StateVector<T>> = conditional
            .iter()
            .map(|s| Ok(s.extract_pure(&local)?))
            .collect::<Result<_>>()?;
        let mut states_vary = false;
        for a in &per_m {
            for b in &per_m {
                if fidelity_up_to_phase(a, b)?.as_f64() < 1.0 - CONTROL_SLACK {
                    states_vary = true;
                }
            }
        }
        *slot = DirectionControl {
            purity,
            states_vary,
            controlled: purity < 1.0 - CONTROL_SLACK && states_vary,
        };
    }

    let pairs = QubitSet::new(&controller.complement(nq), nq)?;
    let rho_ab = state.partial_trace(&pairs)?;
    let weight = T::one() / T::from_f64(n as f64);
    let terms: Vec<(T, StateVector<T>)> = (0..n)
        .map(|m| Ok((weight, spec.term_state(m)?)))
        .collect::<Result<_>>()?;
    let mixture = DensityMatrix::mixture(&terms)?;
    let mixture_distance = rho_ab.trace_distance(&mixture)?.as_f64();

    let sides = match (directions[0].controlled, directions[1].controlled) {
        (true, true) => ControlSides::Both,
        (true, false) => ControlSides::FirstOnly,
        (false, true) => ControlSides::SecondOnly,
        (false, false) => ControlSides::Neither,
    };
    Ok(ControlReport {
        directions,
        mixture_distance,
        mixture_ok: mixture_distance <= T::tolerance().as_f64(),
        sides,
    })
}

/// Result of one controlled dialogue round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QdOutcome {
    pub m: usize,
    pub initial: BellKind,
    pub final_state: BellKind,
    /// Alice's message as decoded by Bob.
    pub decoded_alice: u8,
    /// Bob's message as decoded by Alice.
    pub decoded_bob: u8,
}

fn pauli_on_first<T: Real>(state: &StateVector<T>, op: PauliOp) -> Result<StateVector<T>> {
    apply_single(state, op, 0)
}

/// Finds the unknown operator `x` with `(outer * x * inner) |initial> ≅ |final>` on the first qubit.
fn decode<T: Real>(initial: BellKind, final_state: BellKind, known: PauliOp, known_is_outer: bool) -> Result<u8> {
    let target = bell::<T>(final_state);
    let start = bell::<T>(initial);
    let mut hits = Vec::new();
    for x in PauliOp::ALL {
        let (first, second) = if known_is_outer { (x, known) } else { (known, x) };
        let s = pauli_on_first(&pauli_on_first(&start, first)?, second)?;
        if fidelity_up_to_phase(&s, &target)?.as_f64() > 1.0 - CONTROL_SLACK {
            hits.push(x);
        }
    }
    match hits[..] {
        [x] => Ok(x.message()),
        _ => Err(ProtocolError::Undecodable),
    }
}

/// One controlled dialogue round: disclosure, Bob's then Alice's encoding on
/// the first pair qubit, a Bell measurement, and decoding by both parties.
pub fn qd_round<T: Real, R: Rng + ?Sized>(
    spec: &ChannelSpec<T>,
    alice_bits: u8,
    bob_bits: u8,
    rng: &mut R,
) -> Result<QdOutcome> {
    let indices = match &spec.terms {
        Terms::Singles(v) => v.clone(),
        Terms::Pairs(_) => {
            return Err(ProtocolError::WrongKind {
                expected: ChannelKind::Qd,
            })
        }
    };
    if !spec.basis.is_bell() {
        return Err(ProtocolError::UnsupportedBasis(spec.basis.name().to_string()));
    }
    let u_alice = PauliOp::from_message(alice_bits)?;
    let u_bob = PauliOp::from_message(bob_bits)?;
    let (channel, layout) = build_qd_channel(spec)?;
    let (m, _, pair) = charlie_disclose(&channel, spec, &layout, rng)?;
    let initial = bell_kind_of(spec, indices[m])?;

    let encoded = pauli_on_first(&pauli_on_first(&pair, u_bob)?, u_alice)?;
    let meas = encoded.measure_in_basis(&QubitSet::new(&[0, 1], 2)?, bell_basis::<T>().elements(), rng)?;
    let final_state = BellKind::from_index(meas.outcome).expect("four outcomes");

    // Alice knows her outer operator; Bob knows his inner one.
    let decoded_bob = decode::<T>(initial, final_state, u_alice, false)?;
    let decoded_alice = decode::<T>(initial, final_state, u_bob, true)?;
    Ok(QdOutcome {
        m,
        initial,
        final_state,
        decoded_alice,
        decoded_bob,
    })
}

/// `{(U ⊗ I)|psi>}` over the four encodings, in message order.
pub fn encoded_family<T: Real>(kind: BellKind) -> Result<Vec<StateVector<T>>> {
    PauliOp::ALL
        .iter()
        .map(|&u| pauli_on_first(&bell::<T>(kind), u))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{controller_basis, ControllerFamily};
    use crate::channel::PairSelection;
    use crate::scalar::cone;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn bell_measure_eigenstates() {
        let mut r = rng(0);
        let (smo, _) = bell_measure(&bell::<f64>(BellKind::PsiPlus), 0, 1, &mut r).unwrap();
        assert_eq!(smo.to_string(), "00");
        let (smo, _) = bell_measure(&bell::<f64>(BellKind::PhiMinus), 0, 1, &mut r).unwrap();
        assert_eq!(smo.to_string(), "11");
    }

    #[test]
    fn bell_measure_product_is_uniform() {
        let reg = StateVector::<f64>::ket("0")
            .unwrap()
            .tensor(&bell(BellKind::PsiPlus))
            .unwrap();
        let probs = reg
            .outcome_probabilities(&QubitSet::new(&[0, 1], 3).unwrap(), bell_basis::<f64>().elements())
            .unwrap();
        for p in probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn table_entries() {
        assert_eq!(correction(BellKind::PsiPlus, Smo::new(0).unwrap()), PauliOp::I);
        assert_eq!(correction(BellKind::PhiPlus, Smo::new(1).unwrap()), PauliOp::I);
        assert_eq!(correction(BellKind::PsiMinus, Smo::new(3).unwrap()), PauliOp::X);
        assert!(CorrectionTable::standard().is_latin());
        assert!(Smo::new(4).is_err());
    }

    #[test]
    fn teleport_examples() {
        let mut r = rng(5);
        for _ in 0..8 {
            let (out, _) = teleport(BellKind::PsiPlus, &StateVector::<f64>::ket("0").unwrap(), &mut r).unwrap();
            assert!((fidelity_up_to_phase(&out, &StateVector::ket("0").unwrap()).unwrap() - 1.0).abs() < 1e-10);
        }
        let plus_i = StateVector::<f64>::normalized(vec![cone(), c(0.0, 1.0)]).unwrap();
        let mut seen = [false; 4];
        for _ in 0..64 {
            let (out, smo) = teleport(BellKind::PhiMinus, &plus_i, &mut r).unwrap();
            seen[smo.bits() as usize] = true;
            assert!((fidelity_up_to_phase(&out, &plus_i).unwrap() - 1.0).abs() < 1e-10);
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn skipping_a_required_correction_fails() {
        let plus_i = StateVector::<f64>::normalized(vec![cone(), c(0.0, 1.0)]).unwrap();
        let mut r = rng(11);
        let mut checked = false;
        for _ in 0..64 {
            let (out, smo) = teleport_with(BellKind::PsiPlus, &plus_i, &mut r, |_| None).unwrap();
            if smo.bits() == 0b01 {
                assert!(fidelity_up_to_phase(&out, &plus_i).unwrap() < 1.0 - 1e-6);
                checked = true;
            }
        }
        assert!(checked);
    }

    #[test]
    fn closure_examples() {
        let full = pauli_closure_check(&PauliOp::ALL);
        assert!(full.closed);
        assert_eq!(PauliOp::multiply(PauliOp::Z, PauliOp::X), (Phase::One, PauliOp::IY));
        assert_eq!(
            PauliOp::multiply(PauliOp::X, PauliOp::Z),
            (Phase::MinusOne, PauliOp::IY)
        );
        assert_eq!(
            PauliOp::multiply(PauliOp::IY, PauliOp::IY),
            (Phase::MinusOne, PauliOp::I)
        );
        assert!(pauli_closure_check(&[PauliOp::I, PauliOp::X]).closed);
        assert!(!pauli_closure_check(&[PauliOp::X, PauliOp::Z]).closed);
    }

    #[test]
    fn qd_examples() {
        let z1 = controller_basis::<f64>(&ControllerFamily::Computational, 1).unwrap();
        let spec = ChannelSpec::qd(bell_basis::<f64>(), vec![1, 2], z1);
        let mut r = rng(3);
        for _ in 0..20 {
            let out = qd_round(&spec, 0b11, 0b01, &mut r).unwrap();
            assert_eq!((out.decoded_alice, out.decoded_bob), (0b11, 0b01));
            if out.initial == BellKind::PsiPlus {
                assert_eq!(out.final_state, BellKind::PhiMinus);
            }
            let out = qd_round(&spec, 0, 0, &mut r).unwrap();
            assert_eq!(out.final_state, out.initial);
        }
        assert!(matches!(
            qd_round(&spec, 4, 0, &mut r),
            Err(ProtocolError::InvalidBits(4))
        ));
    }

    #[test]
    fn zha_disclosure() {
        let spec = ChannelSpec::bcst(
            bell_basis::<f64>(),
            PairSelection::new(vec![(1, 1), (2, 2)]),
            controller_basis(&ControllerFamily::HadamardProduct, 1).unwrap(),
        );
        let (state, layout) = crate::channel::build_bcst_channel(&spec).unwrap();
        let mut r = rng(8);
        for _ in 0..10 {
            let (m, p, pairs) = charlie_disclose(&state, &spec, &layout, &mut r).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
            let expect = spec.term_state(m).unwrap();
            assert!((fidelity_up_to_phase(&pairs, &expect).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
