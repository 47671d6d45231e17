//! Dense state-vector engine.
//!
//! Registers are ordered left to right: in the ket `|q0 q1 ... q(N-1)>` the
//! leftmost qubit `q0` is the most significant bit of the amplitude index.
//! All values are immutable; every operation returns a new value.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::scalar::{c, cone, czero, Real};

/// Largest register the dense engine accepts.
pub const MAX_QUBITS: usize = 12;

/// Smallest eigenvalue tolerated in a density matrix.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("empty bitstring")]
    EmptyBits,
    #[error("invalid character {0:?} in bitstring")]
    InvalidBit(char),
    #[error("register of {0} qubits exceeds the {MAX_QUBITS}-qubit limit")]
    TooManyQubits(usize),
    #[error("amplitude count {0} is not a positive power of two")]
    NotPowerOfTwo(usize),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("qubit {qubit} is outside a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("qubit set is empty")]
    EmptyQubitSet,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not unitary (max deviation {0:e})")]
    NonUnitary(f64),
    #[error("basis is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("basis is incomplete: {found} of {expected} elements")]
    IncompleteBasis { found: usize, expected: usize },
    #[error("reduced state is not pure (purity {0})")]
    NotPure(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
}

pub type Result<T, E = StateError> = std::result::Result<T, E>;

fn num_qubits_for(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(StateError::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(StateError::TooManyQubits(n));
    }
    Ok(n)
}

/// Ordered set of distinct qubit positions within a register.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QubitSet {
    positions: Vec<usize>,
}

impl QubitSet {
    pub fn new(positions: &[usize], num_qubits: usize) -> Result<Self> {
        if positions.is_empty() {
            return Err(StateError::EmptyQubitSet);
        }
        let mut seen = vec![false; num_qubits];
        for &q in positions {
            if q >= num_qubits {
                return Err(StateError::QubitOutOfRange { qubit: q, num_qubits });
            }
            if seen[q] {
                return Err(StateError::DuplicateQubit(q));
            }
            seen[q] = true;
        }
        Ok(Self {
            positions: positions.to_vec(),
        })
    }

    /// Consecutive positions `start..start + len`.
    pub fn range(start: usize, len: usize, num_qubits: usize) -> Result<Self> {
        let v: Vec<usize> = (start..start + len).collect();
        Self::new(&v, num_qubits)
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Positions not in this set, in register order.
    pub fn complement(&self, num_qubits: usize) -> Vec<usize> {
        (0..num_qubits).filter(|q| !self.positions.contains(q)).collect()
    }

    fn check_within(&self, num_qubits: usize) -> Result<()> {
        match self.positions.iter().find(|&&q| q >= num_qubits) {
            Some(&q) => Err(StateError::QubitOutOfRange { qubit: q, num_qubits }),
            None => Ok(()),
        }
    }
}

/// Bit of `index` that encodes qubit `q` in an `n`-qubit register.
#[inline]
fn bit_of(index: usize, q: usize, n: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}

/// Register index holding local index `local` on `qubits` and `rest_local` on `rest`.
#[inline]
fn scatter(local: usize, qubits: &[usize], rest_local: usize, rest: &[usize], n: usize) -> usize {
    let mut index = 0;
    let k = qubits.len();
    for (pos, &q) in qubits.iter().enumerate() {
        index |= ((local >> (k - 1 - pos)) & 1) << (n - 1 - q);
    }
    let r = rest.len();
    for (pos, &q) in rest.iter().enumerate() {
        index |= ((rest_local >> (r - 1 - pos)) & 1) << (n - 1 - q);
    }
    index
}

/// Small dense complex matrix acting on a handful of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<T: Real> {
    dim: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Real> Operator<T> {
    /// Builds an operator from row-major entries.
    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let dim = rows.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(StateError::NotPowerOfTwo(dim));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(StateError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![czero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = cone();
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![czero(); d * d];
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.get(i, j).conj();
            }
        }
        Self { dim: d, entries }
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(StateError::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        let d = self.dim;
        let mut entries = vec![czero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                for j in 0..d {
                    entries[i * d + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(Self { dim: d, entries })
    }

    /// Largest entrywise deviation of `U U^dagger` from the identity.
    pub fn unitarity_deviation(&self) -> T {
        let prod = self.matmul(&self.adjoint()).expect("square");
        let id = Self::identity(self.dim);
        prod.entries
            .iter()
            .zip(&id.entries)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() <= T::tolerance()
    }
}

/// Normalized pure state of a qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    num_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

/// Result of a projective measurement.
#[derive(Debug, Clone)]
pub struct Measurement<T: Real> {
    pub outcome: usize,
    pub probability: T,
    /// Full register after collapse, measured qubits set to the observed element.
    pub collapsed: StateVector<T>,
}

impl<T: Real> StateVector<T> {
    /// Computational basis state from a string of `0`/`1`.
    pub fn ket(bits: &str) -> Result<Self> {
        if bits.is_empty() {
            return Err(StateError::EmptyBits);
        }
        let n = bits.chars().count();
        if n > MAX_QUBITS {
            return Err(StateError::TooManyQubits(n));
        }
        let mut index = 0usize;
        for ch in bits.chars() {
            let b = match ch {
                '0' => 0,
                '1' => 1,
                other => return Err(StateError::InvalidBit(other)),
            };
            index = (index << 1) | b;
        }
        Ok(Self::basis_state(n, index))
    }

    /// Computational basis state `|index>`.
    pub fn basis_state(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![czero(); 1 << num_qubits];
        amplitudes[index] = cone();
        Self { num_qubits, amplitudes }
    }

    /// Wraps amplitudes that must already be normalized within the global tolerance.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        Self::from_amplitudes_with_tolerance(amplitudes, T::tolerance())
    }

    /// As [`StateVector::from_amplitudes`] with an explicit normalization tolerance.
    pub fn from_amplitudes_with_tolerance(amplitudes: Vec<Complex<T>>, tol: T) -> Result<Self> {
        let num_qubits = num_qubits_for(amplitudes.len())?;
        let norm_sqr = amplitudes.iter().map(|a| a.norm_sqr()).fold(T::zero(), |x, y| x + y);
        if (norm_sqr - T::one()).abs() > tol {
            return Err(StateError::NotNormalized(norm_sqr.as_f64()));
        }
        Ok(Self { num_qubits, amplitudes })
    }

    /// Scales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let num_qubits = num_qubits_for(amplitudes.len())?;
        let norm = amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |x, y| x + y)
            .sqrt();
        if norm <= T::tolerance() {
            return Err(StateError::NotNormalized(0.0));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self { num_qubits, amplitudes })
    }

    /// Haar-random state drawn from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(StateError::TooManyQubits(num_qubits));
        }
        let amps = (0..1usize << num_qubits)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c::<T>(re, im)
            })
            .collect();
        Self::normalized(amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex<T> {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |x, y| x + y)
    }

    /// Multiplies every amplitude by `factor` (normally a unit-modulus phase).
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self {
            num_qubits: self.num_qubits,
            amplitudes: self.amplitudes.iter().map(|a| *a * factor).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.dim() != other.dim() {
            return Err(StateError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * *b))
    }

    /// Tensor product; `self` occupies the more significant positions.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(StateError::TooManyQubits(n));
        }
        let mut amplitudes = Vec::with_capacity(1 << n);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(*a * *b);
            }
        }
        Ok(Self {
            num_qubits: n,
            amplitudes,
        })
    }

    /// Applies `u` to `targets` (first target is the operator's most significant qubit).
    pub fn apply_unitary(&self, u: &Operator<T>, targets: &QubitSet) -> Result<Self> {
        targets.check_within(self.num_qubits)?;
        if u.dim() != 1 << targets.len() {
            return Err(StateError::DimensionMismatch {
                expected: 1 << targets.len(),
                found: u.dim(),
            });
        }
        let dev = u.unitarity_deviation();
        if dev > T::tolerance() {
            return Err(StateError::NonUnitary(dev.as_f64()));
        }
        let n = self.num_qubits;
        let t = targets.positions();
        let rest = targets.complement(n);
        let k = 1usize << t.len();
        let mut out = vec![czero(); self.dim()];
        for r in 0..1usize << rest.len() {
            let idx: Vec<usize> = (0..k).map(|l| scatter(l, t, r, &rest, n)).collect();
            for row in 0..k {
                let mut acc = czero();
                for (col, &i) in idx.iter().enumerate() {
                    acc += u.get(row, col) * self.amplitudes[i];
                }
                out[idx[row]] = acc;
            }
        }
        Ok(Self {
            num_qubits: n,
            amplitudes: out,
        })
    }

    /// Unnormalized residual `(<bra|_targets ⊗ I) |self>` over the complementary qubits
    /// in register order. When every qubit is targeted the result has one entry.
    pub fn contract(&self, targets: &QubitSet, bra: &Self) -> Result<Vec<Complex<T>>> {
        targets.check_within(self.num_qubits)?;
        if bra.num_qubits != targets.len() {
            return Err(StateError::DimensionMismatch {
                expected: targets.len(),
                found: bra.num_qubits,
            });
        }
        let n = self.num_qubits;
        let t = targets.positions();
        let rest = targets.complement(n);
        let mut residual = vec![czero(); 1 << rest.len()];
        for (r, slot) in residual.iter_mut().enumerate() {
            let mut acc = czero();
            for (l, b) in bra.amplitudes.iter().enumerate() {
                acc += b.conj() * self.amplitudes[scatter(l, t, r, &rest, n)];
            }
            *slot = acc;
        }
        Ok(residual)
    }

    /// Normalized state of the qubits left after projecting `targets` onto `element`,
    /// together with the Born probability of that projection.
    pub fn project_out(&self, targets: &QubitSet, element: &Self) -> Result<(T, Self)> {
        if targets.len() == self.num_qubits {
            return Err(StateError::DimensionMismatch {
                expected: self.num_qubits - 1,
                found: targets.len(),
            });
        }
        let residual = self.contract(targets, element)?;
        let p = residual.iter().map(|a| a.norm_sqr()).fold(T::zero(), |x, y| x + y);
        let state = Self::normalized(residual)?;
        Ok((p, state))
    }

    /// Born probabilities of every element of `basis` on `targets`.
    pub fn outcome_probabilities(&self, targets: &QubitSet, basis: &[Self]) -> Result<Vec<T>> {
        check_complete_orthonormal(basis, targets.len())?;
        basis
            .iter()
            .map(|b| {
                Ok(self
                    .contract(targets, b)?
                    .iter()
                    .map(|a| a.norm_sqr())
                    .fold(T::zero(), |x, y| x + y))
            })
            .collect()
    }

    /// Projective measurement of `targets` in `basis`, sampled with `rng`.
    pub fn measure_in_basis<R: Rng + ?Sized>(
        &self,
        targets: &QubitSet,
        basis: &[Self],
        rng: &mut R,
    ) -> Result<Measurement<T>> {
        let probs = self.outcome_probabilities(targets, basis)?;
        let outcome = sample_index(&probs, rng);
        let probability = probs[outcome];
        let collapsed = self.collapse_onto(targets, &basis[outcome])?;
        Ok(Measurement {
            outcome,
            probability,
            collapsed,
        })
    }

    /// Projects `targets` onto `element` and renormalizes, keeping the full register.
    pub fn collapse_onto(&self, targets: &QubitSet, element: &Self) -> Result<Self> {
        let n = self.num_qubits;
        if targets.len() == n {
            return Ok(element.clone());
        }
        let residual = self.contract(targets, element)?;
        let norm = residual
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |x, y| x + y)
            .sqrt();
        if norm <= T::zero() {
            return Err(StateError::NotNormalized(0.0));
        }
        let t = targets.positions();
        let rest = targets.complement(n);
        let mut out = vec![czero(); self.dim()];
        for (l, b) in element.amplitudes.iter().enumerate() {
            for (r, a) in residual.iter().enumerate() {
                out[scatter(l, t, r, &rest, n)] = *b * *a / norm;
            }
        }
        Ok(Self {
            num_qubits: n,
            amplitudes: out,
        })
    }

    /// Reduced density matrix of `keep`, traced over everything else.
    pub fn partial_trace(&self, keep: &QubitSet) -> Result<DensityMatrix<T>> {
        keep.check_within(self.num_qubits)?;
        let n = self.num_qubits;
        let t = keep.positions();
        let rest = keep.complement(n);
        let d = 1usize << t.len();
        let mut rho = vec![czero(); d * d];
        for r in 0..1usize << rest.len() {
            let col: Vec<Complex<T>> = (0..d).map(|l| self.amplitudes[scatter(l, t, r, &rest, n)]).collect();
            for i in 0..d {
                for j in 0..d {
                    rho[i * d + j] += col[i] * col[j].conj();
                }
            }
        }
        Ok(DensityMatrix {
            num_qubits: t.len(),
            entries: rho,
        })
    }

    /// Pure state of `keep`, failing if that subsystem is entangled with the rest.
    pub fn extract_pure(&self, keep: &QubitSet) -> Result<Self> {
        let rho = self.partial_trace(keep)?;
        let purity = rho.purity();
        if purity < T::one() - pure_slack::<T>() {
            return Err(StateError::NotPure(purity.as_f64()));
        }
        let d = rho.dim();
        let k = (0..d)
            .max_by(|&a, &b| rho.get(a, a).re.partial_cmp(&rho.get(b, b).re).unwrap())
            .unwrap();
        let scale = rho.get(k, k).re.sqrt();
        let amps = (0..d).map(|i| rho.get(i, k) / scale).collect();
        Self::normalized(amps)
    }

    /// Reorders qubits: position `k` of the result holds qubit `order[k]` of `self`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let n = self.num_qubits;
        QubitSet::new(order, n)?;
        if order.len() != n {
            return Err(StateError::DimensionMismatch {
                expected: n,
                found: order.len(),
            });
        }
        let mut out = vec![czero(); self.dim()];
        for (new_index, slot) in out.iter_mut().enumerate() {
            let mut old = 0usize;
            for (k, &q) in order.iter().enumerate() {
                old |= bit_of(new_index, k, n) << (n - 1 - q);
            }
            *slot = self.amplitudes[old];
        }
        Ok(Self {
            num_qubits: n,
            amplitudes: out,
        })
    }

    /// Amplitudes converted to another precision.
    pub fn cast<U: Real>(&self) -> StateVector<U> {
        StateVector {
            num_qubits: self.num_qubits,
            amplitudes: self
                .amplitudes
                .iter()
                .map(|a| Complex::new(U::from_f64(a.re.as_f64()), U::from_f64(a.im.as_f64())))
                .collect(),
        }
    }
}

impl<T: Real> fmt::Display for StateVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() <= T::tolerance() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)|{:0width$b}>", a.re, a.im, i, width = self.num_qubits)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn pure_slack<T: Real>() -> T {
    T::tolerance() * T::from_f64(1e3)
}

fn sample_index<T: Real, R: Rng + ?Sized>(probs: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, p) in probs.iter().enumerate() {
        let p = p.as_f64();
        if p <= 0.0 {
            continue;
        }
        last_nonzero = i;
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_nonzero
}

/// Checks that `basis` is an orthonormal, complete basis of `k` qubits.
pub fn check_complete_orthonormal<T: Real>(basis: &[StateVector<T>], k: usize) -> Result<()> {
    let dim = 1usize << k;
    for b in basis {
        if b.num_qubits != k {
            return Err(StateError::DimensionMismatch {
                expected: k,
                found: b.num_qubits,
            });
        }
    }
    let dev = orthonormality_deviation(basis)?;
    if dev > T::tolerance() {
        return Err(StateError::NotOrthonormal(dev.as_f64()));
    }
    if basis.len() != dim {
        return Err(StateError::IncompleteBasis {
            found: basis.len(),
            expected: dim,
        });
    }
    Ok(())
}

/// Largest `| <a|b> - delta_ab |` over all pairs.
pub fn orthonormality_deviation<T: Real>(elements: &[StateVector<T>]) -> Result<T> {
    let mut worst = T::zero();
    for (i, a) in elements.iter().enumerate() {
        for (j, b) in elements.iter().enumerate().skip(i) {
            let ip = a.inner(b)?;
            let target = if i == j { cone() } else { czero() };
            worst = worst.max((ip - target).norm());
        }
    }
    Ok(worst)
}

/// `|<a|b>|`, equal to one iff the states coincide up to a global phase.
pub fn fidelity_up_to_phase<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<T> {
    Ok(a.inner(b)?.norm().min(T::one()))
}

/// Density matrix over a small register, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    num_qubits: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn from_pure(state: &StateVector<T>) -> Self {
        let d = state.dim();
        let mut entries = vec![czero(); d * d];
        for i in 0..d {
            for j in 0..d {
                entries[i * d + j] = state.amplitudes[i] * state.amplitudes[j].conj();
            }
        }
        Self {
            num_qubits: state.num_qubits,
            entries,
        }
    }

    /// Convex combination `sum_k w_k |s_k><s_k|`.
    pub fn mixture(weighted: &[(T, StateVector<T>)]) -> Result<Self> {
        let first = weighted.first().ok_or(StateError::EmptyQubitSet)?;
        let d = first.1.dim();
        let mut entries = vec![czero(); d * d];
        for (w, s) in weighted {
            if s.dim() != d {
                return Err(StateError::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
            let p = Self::from_pure(s);
            for (e, x) in entries.iter_mut().zip(p.entries) {
                *e += x * *w;
            }
        }
        Ok(Self {
            num_qubits: first.1.num_qubits,
            entries,
        })
    }

    /// Wraps row-major entries after validating Hermiticity, trace and positivity.
    pub fn from_entries(num_qubits: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        let d = 1usize << num_qubits;
        if entries.len() != d * d {
            return Err(StateError::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        let rho = Self { num_qubits, entries };
        rho.validate()?;
        Ok(rho)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim()).fold(czero(), |acc, i| acc + self.get(i, i))
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> T {
        // tr(rho^2) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho
        self.entries.iter().map(|e| e.norm_sqr()).fold(T::zero(), |x, y| x + y)
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(self.dim(), &self.entries)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let tol = T::tolerance();
        for i in 0..d {
            for j in i..d {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return Err(StateError::InvalidDensity(format!("not Hermitian at ({i},{j})")));
                }
            }
        }
        let tr = self.trace();
        if (tr - cone()).norm() > tol {
            return Err(StateError::InvalidDensity(format!("trace {} != 1", tr)));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(T::zero());
        if min.as_f64() < -PSD_TOLERANCE {
            return Err(StateError::InvalidDensity(format!("negative eigenvalue {min}")));
        }
        Ok(())
    }

    /// `<psi| rho |psi>`.
    pub fn expectation(&self, psi: &StateVector<T>) -> Result<T> {
        let d = self.dim();
        if psi.dim() != d {
            return Err(StateError::DimensionMismatch {
                expected: d,
                found: psi.dim(),
            });
        }
        let mut acc = czero();
        for i in 0..d {
            for j in 0..d {
                acc += psi.amplitudes[i].conj() * self.get(i, j) * psi.amplitudes[j];
            }
        }
        Ok(acc.re)
    }

    /// Half the sum of absolute eigenvalues of `self - other`.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(StateError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff: Vec<Complex<T>> = self.entries.iter().zip(&other.entries).map(|(a, b)| *a - *b).collect();
        Ok(hermitian_trace_norm(self.dim(), &diff) / T::from_f64(2.0))
    }
}

fn hermitian_matrix<T: Real>(dim: usize, entries: &[Complex<T>]) -> DMatrix<Complex<f64>> {
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        let e = entries[i * dim + j];
        Complex::new(e.re.as_f64(), e.im.as_f64())
    });
    // symmetrize to absorb rounding noise
    (&m + m.adjoint()) * Complex::new(0.5, 0.0)
}

fn hermitian_eigenvalues<T: Real>(dim: usize, entries: &[Complex<T>]) -> Vec<T> {
    let m = hermitian_matrix(dim, entries);
    let scale = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if scale == 0.0 {
        return vec![T::zero(); dim];
    }
    // the solver can return NaN on sparse matrices near zero; rescaling and
    // shifting by the identity keeps it in a well-conditioned range
    let shifted = m.map(|z| z / scale) + DMatrix::identity(dim, dim).map(|x: f64| Complex::new(2.0 * x, 0.0));
    let mut eig: Vec<f64> = shifted
        .symmetric_eigenvalues()
        .iter()
        .map(|x| (x - 2.0) * scale)
        .collect();
    eig.sort_by(f64::total_cmp);
    eig.into_iter().map(T::from_f64).collect()
}

/// Sum of absolute eigenvalues of a Hermitian matrix, via singular values.
fn hermitian_trace_norm<T: Real>(dim: usize, entries: &[Complex<T>]) -> T {
    T::from_f64(hermitian_matrix(dim, entries).singular_values().sum())
}

/// Purity of a density matrix; see [`DensityMatrix::purity`].
pub fn purity<T: Real>(rho: &DensityMatrix<T>) -> T {
    rho.purity()
}

/// Trace distance; see [`DensityMatrix::trace_distance`].
pub fn trace_distance<T: Real>(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> Result<T> {
    a.trace_distance(b)
}
