//! Published channels expressed as [`ChannelSpec`]s, and a recognizer that
//! recovers a spec from a state vector given candidate controller bases.

use std::fmt;

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::bases::{bell_basis, controller_basis, BasisError, ControllerBasis, ControllerFamily, EntangledBasis};
use crate::channel::{
    build_bcst_channel, build_bcst_channel_unchecked, build_qd_channel, validate_selection, ChannelError, ChannelKind,
    ChannelSpec, PairSelection, QubitLayout, Role,
};
use crate::protocol::ControlSides;
use crate::qstate::{fidelity_up_to_phase, QubitSet, StateError, StateVector};
use crate::scalar::Real;

/// Squared-norm slack when matching controller weights to `1/n`.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Whether an entry's selection obeys the selection rules as printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleStatus {
    Satisfied,
    /// Violates the given rule (1 or 2).
    Violates(u8),
}

impl fmt::Display for RuleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleStatus::Satisfied => f.write_str("ok"),
            RuleStatus::Violates(r) => write!(f, "RULE-VIOLATION (rule {r})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry<T: Real> {
    pub id: &'static str,
    pub source_ref: &'static str,
    pub spec: ChannelSpec<T>,
    pub qubit_count: usize,
    pub control_sides: ControlSides,
    pub rule_status: RuleStatus,
}

impl<T: Real> CatalogEntry<T> {
    pub fn is_flagged(&self) -> bool {
        self.rule_status != RuleStatus::Satisfied
    }
}

fn named<T: Real>(family: ControllerFamily, l: usize) -> ControllerBasis<T> {
    controller_basis(&family, l).expect("catalog controller bases are well formed")
}

fn entry<T: Real>(
    id: &'static str,
    source_ref: &'static str,
    cells: &[(usize, usize)],
    controller: ControllerBasis<T>,
    signs: &[i8],
    subset: Option<Vec<usize>>,
    control_sides: ControlSides,
) -> CatalogEntry<T> {
    let selection = PairSelection::new(cells.to_vec());
    let mut spec = ChannelSpec::bcst(bell_basis(), selection.clone(), controller).with_signs(signs);
    if let Some(s) = subset {
        spec = spec.with_subset(s);
    }
    let rule_status = match validate_selection(&selection, 4) {
        Ok(()) => RuleStatus::Satisfied,
        Err(e) => RuleStatus::Violates(e.rule().unwrap_or(0)),
    };
    CatalogEntry {
        id,
        source_ref,
        qubit_count: spec.num_qubits(),
        spec,
        control_sides,
        rule_status,
    }
}

/// The nine published channels, in table order.
pub fn catalog_entries<T: Real>() -> Vec<CatalogEntry<T>> {
    use ControlSides::*;
    use ControllerFamily::*;
    let zx = || Mixed("zx".into());
    vec![
        entry(
            "zha5",
            "Zha et al., five-qubit channel",
            &[(1, 1), (2, 2)],
            named(HadamardProduct, 1),
            &[1, 1],
            None,
            Both,
        ),
        entry(
            "zha_ii5",
            "Zha et al. (II), five-qubit channel",
            &[(1, 1), (2, 4)],
            named(Computational, 1),
            &[1, -1],
            None,
            Both,
        ),
        entry(
            "li5",
            "Li et al., five-qubit channel",
            &[(1, 1), (2, 1)],
            named(HadamardProduct, 1),
            &[1, 1],
            None,
            FirstOnly,
        ),
        entry(
            "cqsdc5",
            "five-qubit controlled QSDC channel",
            &[(3, 1), (3, 2)],
            named(Computational, 1),
            &[1, 1],
            None,
            SecondOnly,
        ),
        entry(
            "six1",
            "six-qubit channel (I)",
            &[(1, 3), (3, 1)],
            named(Computational, 2),
            &[1, 1],
            Some(vec![0, 3]),
            Both,
        ),
        entry(
            "six3",
            "six-qubit channel (III)",
            &[(1, 1), (1, 2), (3, 3), (3, 4)],
            named(zx(), 2),
            &[1, 1, 1, -1],
            None,
            Both,
        ),
        entry(
            "six4a",
            "six-qubit channel (IV), first form",
            &[(1, 1), (1, 4), (4, 1), (4, 4)],
            named(HadamardProduct, 2),
            &[1, 1, 1, 1],
            None,
            Both,
        ),
        entry(
            "six4b",
            "six-qubit channel (IV), second form",
            &[(1, 3), (1, 3), (3, 1), (3, 1)],
            named(zx(), 2),
            &[1, 1, 1, -1],
            None,
            Both,
        ),
        entry(
            "seven",
            "seven-qubit channel",
            &[(1, 1), (2, 4), (3, 3), (4, 2)],
            named(Ghz, 3),
            &[1, -1, -1, -1],
            Some(vec![0, 4, 6, 2]),
            Both,
        ),
    ]
}

pub fn find_entry<T: Real>(id: &str) -> Option<CatalogEntry<T>> {
    catalog_entries().into_iter().find(|e| e.id == id)
}

/// Channel state of an entry; rule-violating entries skip the selection rules.
pub fn reconstruct<T: Real>(entry: &CatalogEntry<T>) -> Result<StateVector<T>, ChannelError> {
    let built = if entry.is_flagged() {
        build_bcst_channel_unchecked(&entry.spec)
    } else {
        build_bcst_channel(&entry.spec)
    };
    Ok(built?.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecognizeError {
    #[error("state is not a channel over any of the {tried} candidate controller bases")]
    NotRecognized { tried: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Named controller bases worth trying on `l` qubits: computational,
/// Hadamard products, every mixed Z/X pattern and, for three qubits, GHZ.
pub fn candidate_bases<T: Real>(l: usize) -> Result<Vec<ControllerBasis<T>>, BasisError> {
    let mut out = vec![
        controller_basis(&ControllerFamily::Computational, l)?,
        controller_basis(&ControllerFamily::HadamardProduct, l)?,
    ];
    for mask in 1..(1usize << l) - 1 {
        let pattern: String = (0..l)
            .map(|q| if mask >> (l - 1 - q) & 1 == 1 { 'x' } else { 'z' })
            .collect();
        out.push(controller_basis(&ControllerFamily::Mixed(pattern), l)?);
    }
    if l == 3 {
        out.push(controller_basis(&ControllerFamily::Ghz, l)?);
    }
    Ok(out)
}

fn kind_of(layout: &QubitLayout) -> ChannelKind {
    if layout.roles().iter().any(|r| matches!(r, Role::Pair { pair: 2, .. })) {
        ChannelKind::Bcst
    } else {
        ChannelKind::Qd
    }
}

/// A pair-register term: 1-based grid cell (column 0 for single elements) and its state.
type PairTerm<T> = ((usize, usize), StateVector<T>);

/// Recovered cells, phases and controller subset.
type Decomposition<T> = (Vec<(usize, usize)>, Vec<Complex<T>>, Vec<usize>);

/// Candidate terms of the pair register: grid products or single elements, with 1-based labels.
fn pair_terms<T: Real>(basis: &EntangledBasis<T>, kind: ChannelKind) -> Result<Vec<PairTerm<T>>, StateError> {
    let e = basis.elements();
    let mut out = Vec::new();
    for i in 0..e.len() {
        match kind {
            ChannelKind::Bcst => {
                for j in 0..e.len() {
                    out.push(((i + 1, j + 1), e[i].tensor(&e[j])?));
                }
            }
            ChannelKind::Qd => out.push(((i + 1, 0), e[i].clone())),
        }
    }
    Ok(out)
}

fn decompose<T: Real>(
    canonical: &StateVector<T>,
    controller: &QubitSet,
    basis: &ControllerBasis<T>,
    terms: &[PairTerm<T>],
) -> Result<Option<Decomposition<T>>, StateError> {
    let mut parts = Vec::new();
    for (k, element) in basis.elements().iter().enumerate() {
        let residual = canonical.contract(controller, element)?;
        let weight: f64 = residual.iter().map(|a| a.norm_sqr().as_f64()).sum();
        if weight > WEIGHT_TOLERANCE {
            parts.push((k, weight, residual));
        }
    }
    let n = parts.len();
    if n == 0
        || parts
            .iter()
            .any(|(_, w, _)| (w - 1.0 / n as f64).abs() > WEIGHT_TOLERANCE)
    {
        return Ok(None);
    }
    let scale = T::from_f64((n as f64).sqrt());
    let (mut cells, mut phases, mut subset) = (Vec::new(), Vec::new(), Vec::new());
    for (k, _, residual) in parts {
        let raw = StateVector::from_amplitudes_with_tolerance(
            residual.iter().map(|a| *a * scale).collect(),
            T::from_f64(1e-6),
        )?;
        let hit = terms.iter().find_map(|(label, t)| {
            let overlap = t.inner(&raw).ok()?;
            (overlap.norm().as_f64() >= 1.0 - WEIGHT_TOLERANCE).then(|| (*label, overlap / overlap.norm()))
        });
        let Some((label, phase)) = hit else { return Ok(None) };
        cells.push(label);
        phases.push(phase);
        subset.push(k);
    }
    Ok(Some((cells, phases, subset)))
}

/// Recovers a spec from `state` arranged per `layout`.
///
/// Each candidate is tried in order; the first decomposition that also
/// satisfies the selection rules wins, otherwise the first decomposition found.
pub fn recognize<T: Real>(
    state: &StateVector<T>,
    layout: &QubitLayout,
    candidates: &[ControllerBasis<T>],
    pair_basis: &EntangledBasis<T>,
) -> Result<ChannelSpec<T>, RecognizeError> {
    let canonical = layout.canonicalize(state)?;
    let kind = kind_of(layout);
    let l = layout.controller_qubits();
    let nq = canonical.num_qubits();
    let controller = QubitSet::range(nq - l, l, nq)?;
    let terms = pair_terms(pair_basis, kind)?;
    let mut fallback = None;
    for basis in candidates.iter().filter(|b| b.l() == l) {
        let Some((cells, phases, subset)) = decompose(&canonical, &controller, basis, &terms)? else {
            continue;
        };
        let spec = match kind {
            ChannelKind::Bcst => ChannelSpec::bcst(pair_basis.clone(), PairSelection::new(cells), basis.clone()),
            ChannelKind::Qd => ChannelSpec::qd(pair_basis.clone(), cells.iter().map(|c| c.0).collect(), basis.clone()),
        }
        .with_phases(phases)
        .with_subset(subset);
        if spec.validate().is_ok() {
            return Ok(spec);
        }
        fallback.get_or_insert(spec);
    }
    fallback.ok_or(RecognizeError::NotRecognized {
        tried: candidates.len(),
    })
}

/// Builds a spec in canonical order, skipping the selection rules for bidirectional specs.
pub fn rebuild<T: Real>(spec: &ChannelSpec<T>) -> Result<StateVector<T>, ChannelError> {
    Ok(match spec.kind() {
        ChannelKind::Bcst => build_bcst_channel_unchecked(spec)?.0,
        ChannelKind::Qd => build_qd_channel(spec)?.0,
    })
}

/// True iff both specs build the same state up to global phase.
pub fn equivalent<T: Real>(a: &ChannelSpec<T>, b: &ChannelSpec<T>) -> Result<bool, ChannelError> {
    let (sa, sb) = (rebuild(a)?, rebuild(b)?);
    if sa.num_qubits() != sb.num_qubits() {
        return Ok(false);
    }
    Ok(fidelity_up_to_phase(&sa, &sb)? >= T::one() - T::tolerance())
}
