//! Pair matrix, selection rules and channel assembly.
//!
//! A bidirectional channel is the superposition
//! `sum_m phase_m / sqrt(n) |psi_i>|psi_j>|a_m>` over `n` distinct cells `(i, j)`
//! of the pair matrix, where the `|a_m>` are orthonormal controller states.
//! Register order is `[first pair, second pair, controller]`; for Bell pairs
//! that reads `A1 B1 A2 B2 C1 ... Cl`.
//!
//! Cell indices are 1-based, matching row/column labels of the pair matrix.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use thiserror::Error;

use crate::bases::{BasisError, ControllerBasis, EntangledBasis};
use crate::qstate::{QubitSet, StateError, StateVector, MAX_QUBITS};
use crate::scalar::{cone, czero, Real};

/// Violation of the selection rules, or a malformed selection.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("a selection needs at least two terms, got {0}")]
    TooFew(usize),
    #[error("cell ({}, {}) lies outside the {grid}x{grid} pair matrix", .cell.0, .cell.1)]
    OutOfRange { cell: (usize, usize), grid: usize },
    #[error("Rule 1: all {n} terms lie in row {row}")]
    SameRow { row: usize, n: usize },
    #[error("Rule 1: all {n} terms lie in column {column}")]
    SameColumn { column: usize, n: usize },
    #[error("Rule 2: cell ({}, {}) is picked at terms {first} and {second}", .cell.0, .cell.1)]
    Duplicate {
        cell: (usize, usize),
        first: usize,
        second: usize,
    },
}

impl SelectionError {
    /// Which selection rule was broken, if any.
    pub fn rule(&self) -> Option<u8> {
        match self {
            SelectionError::SameRow { .. } | SelectionError::SameColumn { .. } => Some(1),
            SelectionError::Duplicate { .. } => Some(2),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("{n} terms need at least {n} controller states, but the controller has {capacity}")]
    TooManyTerms { n: usize, capacity: usize },
    #[error("controller subset has {found} entries for {n} terms")]
    SubsetLength { n: usize, found: usize },
    #[error("controller subset index {0} is out of range")]
    SubsetIndex(usize),
    #[error("controller subset repeats element {0}")]
    SubsetDuplicate(usize),
    #[error("{found} phases given for {n} terms")]
    PhaseCount { n: usize, found: usize },
    #[error("phase {index} has modulus {modulus}, expected 1")]
    NonUnitPhase { index: usize, modulus: f64 },
    #[error("basis index {0} is repeated; the outcome-to-state map must be a bijection")]
    DuplicateIndex(usize),
    #[error("basis index {index} is outside 1..={size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("a quantum dialogue channel needs at least two terms, got {0}")]
    TooFewTerms(usize),
    #[error("expected a {expected} channel")]
    WrongKind { expected: ChannelKind },
    #[error("layout does not match the channel: {0}")]
    Layout(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Ordered list of 1-based pair-matrix cells `(row, column)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairSelection {
    cells: Vec<(usize, usize)>,
}

impl PairSelection {
    pub fn new(cells: Vec<(usize, usize)>) -> Self {
        Self { cells }
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

impl fmt::Display for PairSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, (i, j)) in self.cells.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "({i},{j})")?;
        }
        write!(f, "]")
    }
}

/// Checks a selection on a `grid x grid` pair matrix; reports the first violation.
///
/// Rule 1 only fails when *every* term shares a row (or every term shares a
/// column); Rule 2 forbids picking a cell twice.
pub fn validate_selection(selection: &PairSelection, grid: usize) -> Result<(), SelectionError> {
    let cells = selection.cells();
    if cells.len() < 2 {
        return Err(SelectionError::TooFew(cells.len()));
    }
    if let Some(&cell) = cells.iter().find(|&&(i, j)| i == 0 || j == 0 || i > grid || j > grid) {
        return Err(SelectionError::OutOfRange { cell, grid });
    }
    let (r0, c0) = cells[0];
    if cells.iter().all(|&(i, _)| i == r0) {
        return Err(SelectionError::SameRow {
            row: r0,
            n: cells.len(),
        });
    }
    if cells.iter().all(|&(_, j)| j == c0) {
        return Err(SelectionError::SameColumn {
            column: c0,
            n: cells.len(),
        });
    }
    for (b, cell) in cells.iter().enumerate() {
        if let Some(a) = cells[..b].iter().position(|x| x == cell) {
            return Err(SelectionError::Duplicate {
                cell: *cell,
                first: a + 1,
                second: b + 1,
            });
        }
    }
    Ok(())
}

/// The `2^p x 2^p` grid whose cell `(i, j)` is the product `|psi_i>|psi_j>`.
#[derive(Debug, Clone, Copy)]
pub struct PairMatrix<'a, T: Real> {
    basis: &'a EntangledBasis<T>,
}

impl<'a, T: Real> PairMatrix<'a, T> {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// Ordered pair of cell `(i, j)`, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> Option<(&'a StateVector<T>, &'a StateVector<T>)> {
        let e = self.basis.elements();
        if i == 0 || j == 0 {
            return None;
        }
        Some((e.get(i - 1)?, e.get(j - 1)?))
    }

    /// `|psi_i> ⊗ |psi_j>` for cell `(i, j)`.
    pub fn product(&self, i: usize, j: usize) -> Option<StateVector<T>> {
        let (a, b) = self.entry(i, j)?;
        a.tensor(b).ok()
    }

    /// Symbolic label such as `psi+ phi-`.
    pub fn label(&self, i: usize, j: usize) -> String {
        format!(
            "{} {}",
            self.basis.element_symbol(i - 1),
            self.basis.element_symbol(j - 1)
        )
    }
}

pub fn pair_matrix<T: Real>(basis: &EntangledBasis<T>) -> PairMatrix<'_, T> {
    PairMatrix { basis }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// Two entangled pairs per term (bidirectional teleportation).
    Bcst,
    /// One entangled state per term (quantum dialogue).
    Qd,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Bcst => "bcst",
            ChannelKind::Qd => "qd",
        })
    }
}

/// Superposition terms of a channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Terms {
    Pairs(PairSelection),
    /// 1-based basis indices, one per term.
    Singles(Vec<usize>),
}

impl Terms {
    pub fn len(&self) -> usize {
        match self {
            Terms::Pairs(s) => s.len(),
            Terms::Singles(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Complete recipe for a channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec<T: Real> {
    pub basis: EntangledBasis<T>,
    pub terms: Terms,
    /// Unit-modulus coefficient of each term.
    pub phases: Vec<Complex<T>>,
    pub controller: ControllerBasis<T>,
    /// Indices into `controller.elements()`: term `m` carries `|a_m> = elements[subset[m]]`.
    pub subset: Vec<usize>,
}

impl<T: Real> ChannelSpec<T> {
    /// Bidirectional spec with unit phases and controller states `0..n`.
    pub fn bcst(basis: EntangledBasis<T>, selection: PairSelection, controller: ControllerBasis<T>) -> Self {
        let n = selection.len();
        Self {
            basis,
            terms: Terms::Pairs(selection),
            phases: vec![cone(); n],
            controller,
            subset: (0..n).collect(),
        }
    }

    /// Dialogue spec over 1-based basis indices, unit phases and controller states `0..n`.
    pub fn qd(basis: EntangledBasis<T>, indices: Vec<usize>, controller: ControllerBasis<T>) -> Self {
        let n = indices.len();
        Self {
            basis,
            terms: Terms::Singles(indices),
            phases: vec![cone(); n],
            controller,
            subset: (0..n).collect(),
        }
    }

    pub fn with_phases(mut self, phases: Vec<Complex<T>>) -> Self {
        self.phases = phases;
        self
    }

    /// Real `±1` phases.
    pub fn with_signs(self, signs: &[i8]) -> Self {
        let phases = signs
            .iter()
            .map(|&s| if s < 0 { -cone::<T>() } else { cone() })
            .collect();
        self.with_phases(phases)
    }

    pub fn with_subset(mut self, subset: Vec<usize>) -> Self {
        self.subset = subset;
        self
    }

    pub fn kind(&self) -> ChannelKind {
        match self.terms {
            Terms::Pairs(_) => ChannelKind::Bcst,
            Terms::Singles(_) => ChannelKind::Qd,
        }
    }

    pub fn n(&self) -> usize {
        self.terms.len()
    }

    pub fn selection(&self) -> Option<&PairSelection> {
        match &self.terms {
            Terms::Pairs(s) => Some(s),
            Terms::Singles(_) => None,
        }
    }

    /// Controller state of term `m` (zero-based).
    pub fn controller_state(&self, m: usize) -> &StateVector<T> {
        &self.controller.elements()[self.subset[m]]
    }

    /// Pair-qubit state of term `m`: `|psi_i>|psi_j>` or `|psi_i>`.
    pub fn term_state(&self, m: usize) -> Result<StateVector<T>, ChannelError> {
        let e = self.basis.elements();
        match &self.terms {
            Terms::Pairs(s) => {
                let (i, j) = s.cells()[m];
                Ok(e[i - 1].tensor(&e[j - 1])?)
            }
            Terms::Singles(v) => Ok(e[v[m] - 1].clone()),
        }
    }

    /// Qubits carried by entangled pairs.
    pub fn pair_qubits(&self) -> usize {
        match self.kind() {
            ChannelKind::Bcst => 2 * self.basis.p(),
            ChannelKind::Qd => self.basis.p(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.pair_qubits() + self.controller.l()
    }

    pub fn layout(&self) -> QubitLayout {
        match self.kind() {
            ChannelKind::Bcst => QubitLayout::bcst(self.basis.p(), self.controller.l()),
            ChannelKind::Qd => QubitLayout::qd(self.basis.p(), self.controller.l()),
        }
    }

    /// Structural checks shared by every build path (everything except the selection rules).
    fn check_structure(&self) -> Result<(), ChannelError> {
        let n = self.n();
        let capacity = self.controller.elements().len();
        if n > capacity {
            return Err(ChannelError::TooManyTerms { n, capacity });
        }
        if self.subset.len() != n {
            return Err(ChannelError::SubsetLength {
                n,
                found: self.subset.len(),
            });
        }
        for (k, &s) in self.subset.iter().enumerate() {
            if s >= capacity {
                return Err(ChannelError::SubsetIndex(s));
            }
            if self.subset[..k].contains(&s) {
                return Err(ChannelError::SubsetDuplicate(s));
            }
        }
        if self.phases.len() != n {
            return Err(ChannelError::PhaseCount {
                n,
                found: self.phases.len(),
            });
        }
        for (index, ph) in self.phases.iter().enumerate() {
            if (ph.norm() - T::one()).abs() > T::tolerance() {
                return Err(ChannelError::NonUnitPhase {
                    index,
                    modulus: ph.norm().as_f64(),
                });
            }
        }
        let size = self.basis.len();
        match &self.terms {
            Terms::Pairs(s) => {
                if let Some(&cell) = s
                    .cells()
                    .iter()
                    .find(|&&(i, j)| i == 0 || j == 0 || i > size || j > size)
                {
                    return Err(SelectionError::OutOfRange { cell, grid: size }.into());
                }
            }
            Terms::Singles(v) => {
                if let Some(&index) = v.iter().find(|&&i| i == 0 || i > size) {
                    return Err(ChannelError::IndexOutOfRange { index, size });
                }
            }
        }
        if self.num_qubits() > MAX_QUBITS {
            return Err(StateError::TooManyQubits(self.num_qubits()).into());
        }
        Ok(())
    }

    /// Full validation: structure plus the selection rules (or the bijection for dialogue specs).
    pub fn validate(&self) -> Result<(), ChannelError> {
        match &self.terms {
            Terms::Pairs(s) => {
                validate_selection(s, self.basis.len())?;
            }
            Terms::Singles(v) => {
                if v.len() < 2 {
                    return Err(ChannelError::TooFewTerms(v.len()));
                }
                for (k, i) in v.iter().enumerate() {
                    if v[..k].contains(i) {
                        return Err(ChannelError::DuplicateIndex(*i));
                    }
                }
            }
        }
        self.check_structure()
    }
}

/// Role of one register position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Qubit `offset` (zero-based) of entangled pair `pair` (1 or 2), each pair having `p` qubits.
    Pair { pair: usize, offset: usize, p: usize },
    /// Controller qubit `k` (zero-based).
    Controller(usize),
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Role::Pair { pair, offset, p: 2 } => write!(f, "{}{}", if offset == 0 { 'A' } else { 'B' }, pair),
            Role::Pair { pair, offset, .. } => write!(f, "P{}.{}", pair, offset + 1),
            Role::Controller(k) => write!(f, "C{}", k + 1),
        }
    }
}

/// Parses `A1`, `B2`, `P1.3`, `C2` and similar tags.
fn parse_role(s: &str, p: usize) -> Option<Role> {
    let s = s.trim();
    let num = |t: &str| t.parse::<usize>().ok().filter(|&x| x >= 1);
    if let Some(rest) = s.strip_prefix('C') {
        return num(rest).map(|k| Role::Controller(k - 1));
    }
    if let Some(rest) = s.strip_prefix('P') {
        let (a, b) = rest.split_once('.')?;
        return Some(Role::Pair {
            pair: num(a)?,
            offset: num(b)? - 1,
            p,
        });
    }
    if p == 2 {
        if let Some(rest) = s.strip_prefix('A') {
            return num(rest).map(|pair| Role::Pair { pair, offset: 0, p });
        }
        if let Some(rest) = s.strip_prefix('B') {
            return num(rest).map(|pair| Role::Pair { pair, offset: 1, p });
        }
    }
    None
}

/// Role tag of every register position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QubitLayout {
    roles: Vec<Role>,
}

impl QubitLayout {
    /// `[pair 1, pair 2, C1..Cl]`.
    pub fn bcst(p: usize, l: usize) -> Self {
        let mut roles = Vec::with_capacity(2 * p + l);
        for pair in 1..=2 {
            for offset in 0..p {
                roles.push(Role::Pair { pair, offset, p });
            }
        }
        roles.extend((0..l).map(Role::Controller));
        Self { roles }
    }

    /// `[pair 1, C1..Cl]`.
    pub fn qd(p: usize, l: usize) -> Self {
        let mut roles: Vec<Role> = (0..p).map(|offset| Role::Pair { pair: 1, offset, p }).collect();
        roles.extend((0..l).map(Role::Controller));
        Self { roles }
    }

    /// Parses role tags. The result must be a permutation of a canonical
    /// layout with the given pair size.
    pub fn parse(tags: &[&str], p: usize) -> Result<Self, ChannelError> {
        let roles = tags
            .iter()
            .map(|t| parse_role(t, p).ok_or_else(|| ChannelError::Layout(format!("unknown role {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let layout = Self { roles };
        let pairs = layout.roles.iter().filter(|r| matches!(r, Role::Pair { .. })).count();
        let l = layout.roles.len() - pairs;
        let canonical = if pairs == 2 * p {
            Self::bcst(p, l)
        } else {
            Self::qd(p, l)
        };
        let mut a = canonical.roles.clone();
        let mut b = layout.roles.clone();
        let key = |r: &Role| match *r {
            Role::Pair { pair, offset, .. } => (0, pair, offset),
            Role::Controller(k) => (1, k, 0),
        };
        a.sort_by_key(key);
        b.sort_by_key(key);
        if a != b {
            return Err(ChannelError::Layout(format!(
                "{layout} is not a permutation of {canonical}"
            )));
        }
        Ok(layout)
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn num_qubits(&self) -> usize {
        self.roles.len()
    }

    pub fn controller_qubits(&self) -> usize {
        self.roles.iter().filter(|r| matches!(r, Role::Controller(_))).count()
    }

    fn canonical(&self) -> Self {
        let l = self.controller_qubits();
        let pairs: Vec<&Role> = self.roles.iter().filter(|r| matches!(r, Role::Pair { .. })).collect();
        let p = match pairs.first() {
            Some(Role::Pair { p, .. }) => *p,
            _ => 0,
        };
        if pairs.len() == 2 * p {
            Self::bcst(p, l)
        } else {
            Self::qd(p, l)
        }
    }

    fn position_of(&self, role: &Role) -> usize {
        self.roles.iter().position(|r| r == role).expect("role present")
    }

    /// Controller positions in C1..Cl order.
    pub fn controller_positions(&self) -> Vec<usize> {
        let l = self.controller_qubits();
        (0..l).map(|k| self.position_of(&Role::Controller(k))).collect()
    }

    /// Register positions of pair `pair` (1 or 2), in qubit order.
    pub fn pair_positions(&self, pair: usize) -> Vec<usize> {
        let mut v: Vec<(usize, usize)> = self
            .roles
            .iter()
            .enumerate()
            .filter_map(|(pos, r)| match *r {
                Role::Pair { pair: q, offset, .. } if q == pair => Some((offset, pos)),
                _ => None,
            })
            .collect();
        v.sort();
        v.into_iter().map(|(_, pos)| pos).collect()
    }

    /// Rewrites a state built in canonical order into this layout's order.
    pub fn arrange<T: Real>(&self, canonical_state: &StateVector<T>) -> Result<StateVector<T>, ChannelError> {
        let canon = self.canonical();
        let order: Vec<usize> = self.roles.iter().map(|r| canon.position_of(r)).collect();
        Ok(canonical_state.permute(&order)?)
    }

    /// Inverse of [`QubitLayout::arrange`]: brings a state in this layout into canonical order.
    pub fn canonicalize<T: Real>(&self, state: &StateVector<T>) -> Result<StateVector<T>, ChannelError> {
        if state.num_qubits() != self.num_qubits() {
            return Err(ChannelError::Layout(format!(
                "{} roles for a {}-qubit state",
                self.num_qubits(),
                state.num_qubits()
            )));
        }
        let canon = self.canonical();
        let order: Vec<usize> = canon.roles.iter().map(|r| self.position_of(r)).collect();
        Ok(state.permute(&order)?)
    }
}

impl fmt::Display for QubitLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, r) in self.roles.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for QubitLayout {
    type Err = ChannelError;

    /// Comma-separated tags; Bell-pair naming is assumed unless `P` tags are used.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tags: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
        let p = if tags.iter().any(|t| t.starts_with('P')) {
            tags.iter().filter(|t| t.starts_with("P1.")).count()
        } else {
            2
        };
        Self::parse(&tags, p)
    }
}

fn assemble<T: Real>(spec: &ChannelSpec<T>) -> Result<(StateVector<T>, QubitLayout), ChannelError> {
    let norm = T::one() / T::from_f64(spec.n() as f64).sqrt();
    let mut amps = vec![czero::<T>(); 1usize << spec.num_qubits()];
    for m in 0..spec.n() {
        let term = spec.term_state(m)?.tensor(spec.controller_state(m))?;
        let coeff = spec.phases[m] * norm;
        for (a, t) in amps.iter_mut().zip(term.amplitudes()) {
            *a += coeff * *t;
        }
    }
    Ok((StateVector::from_amplitudes(amps)?, spec.layout()))
}

/// Builds `sum_m phase_m/sqrt(n) |psi_i>|psi_j>|a_m>` after full validation.
pub fn build_bcst_channel<T: Real>(spec: &ChannelSpec<T>) -> Result<(StateVector<T>, QubitLayout), ChannelError> {
    if spec.kind() != ChannelKind::Bcst {
        return Err(ChannelError::WrongKind {
            expected: ChannelKind::Bcst,
        });
    }
    spec.validate()?;
    assemble(spec)
}

/// As [`build_bcst_channel`] but without the selection rules.
///
/// Only for demonstrating what the rules guard against; structural checks
/// (phases, controller subset, ranges) still apply.
pub fn build_bcst_channel_unchecked<T: Real>(
    spec: &ChannelSpec<T>,
) -> Result<(StateVector<T>, QubitLayout), ChannelError> {
    if spec.kind() != ChannelKind::Bcst {
        return Err(ChannelError::WrongKind {
            expected: ChannelKind::Bcst,
        });
    }
    spec.check_structure()?;
    assemble(spec)
}

/// Builds `sum_m phase_m/sqrt(n) |psi_i>|a_m>` after validation.
pub fn build_qd_channel<T: Real>(spec: &ChannelSpec<T>) -> Result<(StateVector<T>, QubitLayout), ChannelError> {
    if spec.kind() != ChannelKind::Qd {
        return Err(ChannelError::WrongKind {
            expected: ChannelKind::Qd,
        });
    }
    spec.validate()?;
    assemble(spec)
}

/// Dispatches on the spec kind.
pub fn build_channel<T: Real>(spec: &ChannelSpec<T>) -> Result<(StateVector<T>, QubitLayout), ChannelError> {
    match spec.kind() {
        ChannelKind::Bcst => build_bcst_channel(spec),
        ChannelKind::Qd => build_qd_channel(spec),
    }
}

/// Controller positions, C1..Cl.
pub fn charlie_collapse_targets(layout: &QubitLayout) -> Result<QubitSet, ChannelError> {
    Ok(QubitSet::new(&layout.controller_positions(), layout.num_qubits())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{bell, bell_basis, controller_basis, ghz_basis, BellKind, ControllerFamily};
    use crate::qstate::fidelity_up_to_phase;

    type Sv = StateVector<f64>;

    fn sel(cells: &[(usize, usize)]) -> PairSelection {
        PairSelection::new(cells.to_vec())
    }

    #[test]
    fn pair_matrix_entries() {
        let basis = bell_basis::<f64>();
        let s = pair_matrix(&basis);
        let (a, b) = s.entry(1, 1).unwrap();
        assert_eq!((a, b), (&bell(BellKind::PsiPlus), &bell(BellKind::PsiPlus)));
        let (a, b) = s.entry(3, 4).unwrap();
        assert_eq!((a, b), (&bell(BellKind::PhiPlus), &bell(BellKind::PhiMinus)));
        assert_eq!(s.label(3, 4), "phi+ phi-");
        assert!(s.entry(0, 1).is_none() && s.entry(5, 1).is_none());
        let g = ghz_basis::<f64>();
        let gs = pair_matrix(&g);
        assert_eq!(gs.size(), 8);
        let count = (1..=8)
            .flat_map(|i| (1..=8).map(move |j| (i, j)))
            .filter(|&(i, j)| gs.entry(i, j).is_some())
            .count();
        assert_eq!(count, 64);
    }

    #[test]
    fn selection_rules() {
        assert_eq!(validate_selection(&sel(&[(1, 1), (2, 2)]), 4), Ok(()));
        assert_eq!(
            validate_selection(&sel(&[(1, 1), (1, 3)]), 4),
            Err(SelectionError::SameRow { row: 1, n: 2 })
        );
        assert_eq!(
            validate_selection(&sel(&[(1, 2), (3, 2)]), 4),
            Err(SelectionError::SameColumn { column: 2, n: 2 })
        );
        assert_eq!(
            validate_selection(&sel(&[(1, 1), (2, 2), (1, 1)]), 4),
            Err(SelectionError::Duplicate {
                cell: (1, 1),
                first: 1,
                second: 3
            })
        );
        assert_eq!(validate_selection(&sel(&[(1, 1), (1, 2), (3, 3), (3, 4)]), 4), Ok(()));
        assert_eq!(validate_selection(&sel(&[(1, 1)]), 4), Err(SelectionError::TooFew(1)));
        assert_eq!(
            validate_selection(&sel(&[(1, 1), (5, 2)]), 4),
            Err(SelectionError::OutOfRange { cell: (5, 2), grid: 4 })
        );
        assert!(SelectionError::SameRow { row: 1, n: 2 }
            .to_string()
            .starts_with("Rule 1"));
        assert!(SelectionError::Duplicate {
            cell: (1, 1),
            first: 1,
            second: 2
        }
        .to_string()
        .starts_with("Rule 2"));
    }

    #[test]
    fn zha_channel_literal() {
        let spec = ChannelSpec::bcst(
            bell_basis::<f64>(),
            sel(&[(1, 1), (2, 2)]),
            controller_basis(&ControllerFamily::HadamardProduct, 1).unwrap(),
        );
        let (state, layout) = build_bcst_channel(&spec).unwrap();
        assert_eq!(state.num_qubits(), 5);
        assert_eq!(layout.to_string(), "A1,B1,A2,B2,C1");
        let plus = Sv::normalized(vec![cone(), cone()]).unwrap();
        let minus = Sv::normalized(vec![cone(), -cone::<f64>()]).unwrap();
        let t1 = bell::<f64>(BellKind::PsiPlus)
            .tensor(&bell(BellKind::PsiPlus))
            .unwrap()
            .tensor(&plus)
            .unwrap();
        let t2 = bell::<f64>(BellKind::PsiMinus)
            .tensor(&bell(BellKind::PsiMinus))
            .unwrap()
            .tensor(&minus)
            .unwrap();
        let sum: Vec<_> = t1
            .amplitudes()
            .iter()
            .zip(t2.amplitudes())
            .map(|(a, b)| a + b)
            .collect();
        let expect = Sv::normalized(sum).unwrap();
        assert!((fidelity_up_to_phase(&state, &expect).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(charlie_collapse_targets(&layout).unwrap().positions(), &[4]);
    }

    #[test]
    fn build_rejects_bad_specs() {
        let basis = bell_basis::<f64>();
        let z1 = controller_basis::<f64>(&ControllerFamily::Computational, 1).unwrap();
        let row = ChannelSpec::bcst(basis.clone(), sel(&[(1, 1), (1, 2)]), z1.clone());
        assert!(matches!(
            build_bcst_channel(&row),
            Err(ChannelError::Selection(SelectionError::SameRow { .. }))
        ));
        assert!(build_bcst_channel_unchecked(&row).is_ok());

        let too_many = ChannelSpec::bcst(basis.clone(), sel(&[(1, 1), (2, 2), (3, 3)]), z1.clone());
        assert!(matches!(
            build_bcst_channel(&too_many),
            Err(ChannelError::TooManyTerms { n: 3, capacity: 2 })
        ));

        let phase = ChannelSpec::bcst(basis.clone(), sel(&[(1, 1), (2, 2)]), z1.clone())
            .with_phases(vec![cone(), Complex::new(0.5, 0.0)]);
        assert!(matches!(
            build_bcst_channel(&phase),
            Err(ChannelError::NonUnitPhase { index: 1, .. })
        ));

        let qd = ChannelSpec::qd(basis.clone(), vec![1, 1], z1.clone());
        assert_eq!(build_qd_channel(&qd), Err(ChannelError::DuplicateIndex(1)));
        assert!(matches!(build_bcst_channel(&qd), Err(ChannelError::WrongKind { .. })));
    }

    #[test]
    fn qd_channel_literal() {
        let z1 = controller_basis::<f64>(&ControllerFamily::Computational, 1).unwrap();
        let spec = ChannelSpec::qd(bell_basis::<f64>(), vec![1, 2], z1);
        let (state, layout) = build_qd_channel(&spec).unwrap();
        assert_eq!(layout.to_string(), "A1,B1,C1");
        let h = 0.5;
        // (psi+|0> + psi-|1>)/sqrt2 over A1 B1 C1
        let expect = [(0b000, h), (0b110, h), (0b001, h), (0b111, -h)];
        for (idx, v) in expect {
            assert!((state.amplitude(idx).re - v).abs() < 1e-12);
        }
        let z2 = controller_basis::<f64>(&ControllerFamily::Computational, 2).unwrap();
        let (four, _) = build_qd_channel(&ChannelSpec::qd(bell_basis::<f64>(), vec![1, 2, 3, 4], z2)).unwrap();
        assert_eq!(four.num_qubits(), 4);
        assert!((four.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_pair_channel_size() {
        let spec = ChannelSpec::bcst(
            ghz_basis::<f64>(),
            sel(&[(1, 2), (3, 8)]),
            controller_basis(&ControllerFamily::Computational, 1).unwrap(),
        );
        let (state, layout) = build_bcst_channel(&spec).unwrap();
        assert_eq!(state.num_qubits(), 7);
        assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(layout.to_string(), "P1.1,P1.2,P1.3,P2.1,P2.2,P2.3,C1");
        assert_eq!(layout.pair_positions(2), vec![3, 4, 5]);
    }

    #[test]
    fn layout_parse_and_arrange() {
        let layout: QubitLayout = "C1,A1,B1,A2,B2".parse().unwrap();
        assert_eq!(layout.controller_positions(), vec![0]);
        assert_eq!(layout.pair_positions(1), vec![1, 2]);
        assert!("A1,B1,A2,C1".parse::<QubitLayout>().is_err());
        assert!("A1,B1,A2,B2,X1".parse::<QubitLayout>().is_err());

        let s = Sv::ket("00001").unwrap();
        let moved = layout.arrange(&s).unwrap();
        assert_eq!(moved, Sv::ket("10000").unwrap());
        assert_eq!(layout.canonicalize(&moved).unwrap(), s);
    }
}
