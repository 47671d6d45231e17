//! Bell and GHZ families and the controller's measurement bases.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{orthonormality_deviation, StateError, StateVector};
use crate::scalar::{cone, czero, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("GHZ label {0} is outside 0..=7")]
    GhzOutOfRange(u8),
    #[error("unsupported controller family {0:?}")]
    UnsupportedFamily(String),
    #[error("the ghz controller family needs exactly 3 qubits, got {0}")]
    GhzQubitCount(usize),
    #[error("controller must have at least one qubit")]
    NoQubits,
    #[error("mixed pattern {pattern:?} does not match {l} qubits")]
    PatternLength { pattern: String, l: usize },
    #[error("controller elements are not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),
    #[error(transparent)]
    State(#[from] StateError),
}

/// The four Bell states, in the fixed order used for pair-matrix indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellKind {
    /// (|00> + |11>)/sqrt 2
    PsiPlus,
    /// (|00> - |11>)/sqrt 2
    PsiMinus,
    /// (|01> + |10>)/sqrt 2
    PhiPlus,
    /// (|01> - |10>)/sqrt 2
    PhiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PsiPlus,
        BellKind::PsiMinus,
        BellKind::PhiPlus,
        BellKind::PhiMinus,
    ];

    /// Zero-based position in [`BellKind::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Two-qubit Bell state with real amplitudes `±1/sqrt 2`.
pub fn bell<T: Real>(kind: BellKind) -> StateVector<T> {
    let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let z = czero();
    let amps = match kind {
        BellKind::PsiPlus => vec![h, z, z, h],
        BellKind::PsiMinus => vec![h, z, z, -h],
        BellKind::PhiPlus => vec![z, h, h, z],
        BellKind::PhiMinus => vec![z, h, -h, z],
    };
    StateVector::from_amplitudes(amps).expect("Bell states are normalized")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// GHZ label `x±`: the binary expansion of `x` and its complement, joined with sign `±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GhzLabel {
    x: u8,
    sign: Sign,
}

impl GhzLabel {
    pub fn new(x: u8, sign: Sign) -> Result<Self, BasisError> {
        if x > 7 {
            return Err(BasisError::GhzOutOfRange(x));
        }
        Ok(Self { x, sign })
    }

    pub fn x(self) -> u8 {
        self.x
    }

    pub fn sign(self) -> Sign {
        self.sign
    }

    /// Equivalent label with `x` in `0..=3` (equal up to global phase).
    pub fn canonical(self) -> Self {
        if self.x >= 4 {
            Self {
                x: 7 - self.x,
                sign: self.sign,
            }
        } else {
            self
        }
    }

    /// Position of the canonical label in [`ghz_basis`].
    pub fn basis_index(self) -> usize {
        let c = self.canonical();
        2 * c.x as usize + usize::from(c.sign == Sign::Minus)
    }
}

impl fmt::Display for GhzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign == Sign::Plus { '+' } else { '-' };
        write!(f, "GHZ^{}{}", self.x, s)
    }
}

/// `(|b> ± |~b>)/sqrt 2` for the 3-bit expansion `b` of the label.
pub fn ghz<T: Real>(label: GhzLabel) -> StateVector<T> {
    let b = label.x as usize;
    let nb = 7 - b;
    let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let mut amps = vec![czero(); 8];
    amps[b] = h;
    amps[nb] = if label.sign == Sign::Plus { h } else { -h };
    StateVector::from_amplitudes(amps).expect("GHZ states are normalized")
}

/// Named orthonormal family of `p`-qubit maximally entangled states.
#[derive(Debug, Clone, PartialEq)]
pub struct EntangledBasis<T: Real> {
    name: String,
    p: usize,
    elements: Vec<StateVector<T>>,
}

impl<T: Real> EntangledBasis<T> {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Qubits per element.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn elements(&self) -> &[StateVector<T>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// True for the four-element Bell family.
    pub fn is_bell(&self) -> bool {
        self.name == "bell"
    }

    /// Human-readable symbol of element `i` (zero-based).
    pub fn element_symbol(&self, i: usize) -> String {
        if self.is_bell() {
            BellKind::from_index(i)
                .map(|k| k.symbol().to_string())
                .unwrap_or_default()
        } else {
            let sign = if i.is_multiple_of(2) { '+' } else { '-' };
            format!("GHZ^{}{}", i / 2, sign)
        }
    }
}

pub fn bell_basis<T: Real>() -> EntangledBasis<T> {
    EntangledBasis {
        name: "bell".into(),
        p: 2,
        elements: BellKind::ALL.iter().map(|&k| bell(k)).collect(),
    }
}

/// Canonical GHZ family ordered `0+, 0-, 1+, 1-, 2+, 2-, 3+, 3-`.
pub fn ghz_basis<T: Real>() -> EntangledBasis<T> {
    let mut elements = Vec::with_capacity(8);
    for x in 0..4u8 {
        for sign in [Sign::Plus, Sign::Minus] {
            elements.push(ghz(GhzLabel { x, sign }));
        }
    }
    EntangledBasis {
        name: "ghz".into(),
        p: 3,
        elements,
    }
}

/// Pair-element family selected by name (`bell` or `ghz`).
pub fn entangled_basis<T: Real>(name: &str) -> Result<EntangledBasis<T>, BasisError> {
    match name {
        "bell" => Ok(bell_basis()),
        "ghz" => Ok(ghz_basis()),
        other => Err(BasisError::UnsupportedFamily(other.to_string())),
    }
}

/// Named controller basis families.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ControllerFamily {
    /// All `|bits>` in counter order.
    Computational,
    /// Products of `|+>`/`|->`, with `|+>` standing for bit 0.
    HadamardProduct,
    /// The eight GHZ states; three qubits only.
    Ghz,
    /// Per-qubit choice of the Z (`z`) or X (`x`) eigenbasis, e.g. `zx` gives
    /// `|0+>, |0->, |1+>, |1->`.
    Mixed(String),
    /// Explicit element list.
    Custom,
}

impl fmt::Display for ControllerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControllerFamily::Computational => f.write_str("computational"),
            ControllerFamily::HadamardProduct => f.write_str("hadamard-product"),
            ControllerFamily::Ghz => f.write_str("ghz"),
            ControllerFamily::Mixed(p) => write!(f, "mixed:{p}"),
            ControllerFamily::Custom => f.write_str("custom"),
        }
    }
}

impl FromStr for ControllerFamily {
    type Err = BasisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "computational" => Ok(Self::Computational),
            "hadamard-product" => Ok(Self::HadamardProduct),
            "ghz" => Ok(Self::Ghz),
            "custom" => Ok(Self::Custom),
            _ => match s.strip_prefix("mixed:") {
                Some(p) if !p.is_empty() && p.chars().all(|c| c == 'z' || c == 'x') => Ok(Self::Mixed(p.to_string())),
                _ => Err(BasisError::UnsupportedFamily(s.to_string())),
            },
        }
    }
}

/// Complete orthonormal basis of the controller's `l` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerBasis<T: Real> {
    family: ControllerFamily,
    l: usize,
    elements: Vec<StateVector<T>>,
    /// Number of leading elements supplied by the caller (custom bases are
    /// completed with Gram-Schmidt vectors after these).
    supplied: usize,
}

impl<T: Real> ControllerBasis<T> {
    pub fn family(&self) -> &ControllerFamily {
        &self.family
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn elements(&self) -> &[StateVector<T>] {
        &self.elements
    }

    /// Elements that were given explicitly; equals `elements()` for named families.
    pub fn supplied(&self) -> &[StateVector<T>] {
        &self.elements[..self.supplied]
    }

    /// Orthonormal custom elements, completed to a full basis when fewer than `2^l`.
    pub fn custom(elements: Vec<StateVector<T>>) -> Result<Self, BasisError> {
        let report = validate_orthonormal(&elements)?;
        if !report.orthonormal {
            return Err(BasisError::NotOrthonormal(report.max_deviation));
        }
        let l = elements[0].num_qubits();
        let supplied = elements.len();
        let elements = complete_basis(elements)?;
        Ok(Self {
            family: ControllerFamily::Custom,
            l,
            elements,
            supplied,
        })
    }
}

fn plus_minus<T: Real>(bit: usize) -> [Complex<T>; 2] {
    let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    if bit == 0 {
        [h, h]
    } else {
        [h, -h]
    }
}

fn product_basis<T: Real>(pattern: &[u8]) -> Vec<StateVector<T>> {
    let l = pattern.len();
    (0..1usize << l)
        .map(|label| {
            let mut state: Option<StateVector<T>> = None;
            for (q, &kind) in pattern.iter().enumerate() {
                let bit = (label >> (l - 1 - q)) & 1;
                let amps = if kind == b'x' {
                    plus_minus::<T>(bit).to_vec()
                } else if bit == 0 {
                    vec![cone(), czero()]
                } else {
                    vec![czero(), cone()]
                };
                let single = StateVector::from_amplitudes(amps).expect("single-qubit basis state");
                state = Some(match state {
                    None => single,
                    Some(s) => s.tensor(&single).expect("controller register fits"),
                });
            }
            state.expect("l >= 1")
        })
        .collect()
}

/// Builds a named controller basis on `l` qubits.
pub fn controller_basis<T: Real>(family: &ControllerFamily, l: usize) -> Result<ControllerBasis<T>, BasisError> {
    if l == 0 {
        return Err(BasisError::NoQubits);
    }
    let elements = match family {
        ControllerFamily::Computational => product_basis(&vec![b'z'; l]),
        ControllerFamily::HadamardProduct => product_basis(&vec![b'x'; l]),
        ControllerFamily::Ghz => {
            if l != 3 {
                return Err(BasisError::GhzQubitCount(l));
            }
            ghz_basis::<T>().elements
        }
        ControllerFamily::Mixed(p) => {
            if p.len() != l {
                return Err(BasisError::PatternLength { pattern: p.clone(), l });
            }
            product_basis(p.as_bytes())
        }
        ControllerFamily::Custom => return Err(BasisError::UnsupportedFamily("custom".into())),
    };
    let supplied = elements.len();
    Ok(ControllerBasis {
        family: family.clone(),
        l,
        elements,
        supplied,
    })
}

/// Outcome of [`validate_orthonormal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthonormalityReport {
    /// All pairwise inner products equal the Kronecker delta within tolerance.
    pub orthonormal: bool,
    /// Element count equals the Hilbert-space dimension.
    pub complete: bool,
    pub max_deviation: f64,
    pub count: usize,
    pub dim: usize,
}

impl OrthonormalityReport {
    /// Orthonormal and complete.
    pub fn is_basis(&self) -> bool {
        self.orthonormal && self.complete
    }
}

pub fn validate_orthonormal<T: Real>(elements: &[StateVector<T>]) -> Result<OrthonormalityReport, BasisError> {
    let first = elements.first().ok_or(StateError::EmptyQubitSet)?;
    let n = first.num_qubits();
    if let Some(bad) = elements.iter().find(|e| e.num_qubits() != n) {
        return Err(StateError::DimensionMismatch {
            expected: n,
            found: bad.num_qubits(),
        }
        .into());
    }
    let dev = orthonormality_deviation(elements)?;
    let dim = 1usize << n;
    Ok(OrthonormalityReport {
        orthonormal: dev <= T::tolerance(),
        complete: elements.len() == dim,
        max_deviation: dev.as_f64(),
        count: elements.len(),
        dim,
    })
}

/// Extends orthonormal `elements` to a complete basis with Gram-Schmidt over
/// computational basis vectors.
pub fn complete_basis<T: Real>(mut elements: Vec<StateVector<T>>) -> Result<Vec<StateVector<T>>, BasisError> {
    let n = elements.first().ok_or(StateError::EmptyQubitSet)?.num_qubits();
    let dim = 1usize << n;
    let mut candidate = 0;
    while elements.len() < dim && candidate < dim {
        let e = StateVector::<T>::basis_state(n, candidate);
        candidate += 1;
        let mut v: Vec<Complex<T>> = e.amplitudes().to_vec();
        // two passes for numerical stability
        for _ in 0..2 {
            for b in &elements {
                let proj = b
                    .amplitudes()
                    .iter()
                    .zip(&v)
                    .fold(czero::<T>(), |acc, (x, y)| acc + x.conj() * *y);
                for (vi, bi) in v.iter_mut().zip(b.amplitudes()) {
                    *vi -= proj * *bi;
                }
            }
        }
        let norm = v.iter().map(|a| a.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        if norm > T::from_f64(1e-6) {
            elements.push(StateVector::normalized(v)?);
        }
    }
    Ok(elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{fidelity_up_to_phase, QubitSet};

    type Sv = StateVector<f64>;

    fn assert_close(a: &Sv, b: &Sv) {
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn bell_definitions() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi_plus = Sv::normalized(vec![cone(), czero(), czero(), cone()]).unwrap();
        assert_close(&bell(BellKind::PsiPlus), &psi_plus);
        let phi_minus = bell::<f64>(BellKind::PhiMinus);
        assert!((phi_minus.amplitude(1).re - h).abs() < 1e-15);
        assert!((phi_minus.amplitude(2).re + h).abs() < 1e-15);
        for a in BellKind::ALL {
            for b in BellKind::ALL {
                let ip = bell::<f64>(a).inner(&bell(b)).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip.re - expect).abs() < 1e-12 && ip.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ghz_definitions() {
        let g0 = ghz::<f64>(GhzLabel::new(0, Sign::Plus).unwrap());
        assert_close(
            &g0,
            &Sv::normalized({
                let mut v = vec![czero(); 8];
                v[0] = cone();
                v[7] = cone();
                v
            })
            .unwrap(),
        );
        let g1 = ghz::<f64>(GhzLabel::new(1, Sign::Plus).unwrap());
        assert!(g1.amplitude(0b001).re > 0.7 && g1.amplitude(0b110).re > 0.7);
        let g4 = ghz::<f64>(GhzLabel::new(4, Sign::Plus).unwrap());
        let g3 = ghz::<f64>(GhzLabel::new(3, Sign::Plus).unwrap());
        assert!((fidelity_up_to_phase(&g4, &g3).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(GhzLabel::new(8, Sign::Plus), Err(BasisError::GhzOutOfRange(8)));
        assert_eq!(
            GhzLabel::new(6, Sign::Minus).unwrap().canonical(),
            GhzLabel::new(1, Sign::Minus).unwrap()
        );
    }

    #[test]
    fn ghz_aliasing_and_orthogonality() {
        for x in 0..8u8 {
            for s in [Sign::Plus, Sign::Minus] {
                let a = ghz::<f64>(GhzLabel::new(x, s).unwrap());
                let b = ghz::<f64>(GhzLabel::new(7 - x, s).unwrap());
                assert!((fidelity_up_to_phase(&a, &b).unwrap() - 1.0).abs() < 1e-12);
            }
        }
        let basis = ghz_basis::<f64>();
        for (i, a) in basis.elements().iter().enumerate() {
            for (j, b) in basis.elements().iter().enumerate() {
                if i != j {
                    assert!(a.inner(b).unwrap().norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn basis_families() {
        let b = bell_basis::<f64>();
        assert_eq!(b.p(), 2);
        assert_eq!(b.elements()[0], bell(BellKind::PsiPlus));
        assert!(validate_orthonormal(b.elements()).unwrap().is_basis());
        let g = ghz_basis::<f64>();
        assert_eq!(g.p(), 3);
        assert_eq!(g.len(), 8);
        assert!(validate_orthonormal(g.elements()).unwrap().is_basis());
        assert_eq!(
            g.elements()[GhzLabel::new(2, Sign::Plus).unwrap().basis_index()],
            ghz(GhzLabel::new(2, Sign::Plus).unwrap())
        );
    }

    #[test]
    fn entangled_elements_are_maximally_entangled() {
        for basis in [bell_basis::<f64>(), ghz_basis::<f64>()] {
            for e in basis.elements() {
                for q in 0..e.num_qubits() {
                    let rho = e.partial_trace(&QubitSet::new(&[q], e.num_qubits()).unwrap()).unwrap();
                    assert!((rho.purity() - 0.5).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn controller_families() {
        let z = controller_basis::<f64>(&ControllerFamily::Computational, 1).unwrap();
        assert_eq!(z.elements(), &[Sv::ket("0").unwrap(), Sv::ket("1").unwrap()]);

        let h = controller_basis::<f64>(&ControllerFamily::HadamardProduct, 2).unwrap();
        let plus = Sv::normalized(vec![cone(), cone()]).unwrap();
        let minus = Sv::normalized(vec![cone(), -cone::<f64>()]).unwrap();
        assert_close(&h.elements()[1], &plus.tensor(&minus).unwrap());
        assert_close(&h.elements()[2], &minus.tensor(&plus).unwrap());

        let m = controller_basis::<f64>(&"mixed:zx".parse().unwrap(), 2).unwrap();
        assert_close(&m.elements()[1], &Sv::ket("0").unwrap().tensor(&minus).unwrap());
        assert_close(&m.elements()[2], &Sv::ket("1").unwrap().tensor(&plus).unwrap());

        assert_eq!(
            controller_basis::<f64>(&ControllerFamily::Ghz, 2),
            Err(BasisError::GhzQubitCount(2))
        );
        assert!(controller_basis::<f64>(&ControllerFamily::Ghz, 3).is_ok());
        assert!("bogus".parse::<ControllerFamily>().is_err());
        assert!("mixed:zy".parse::<ControllerFamily>().is_err());
        assert_eq!("mixed:xz".parse::<ControllerFamily>().unwrap().to_string(), "mixed:xz");
    }

    #[test]
    fn custom_mixed_products_accepted() {
        let plus = Sv::normalized(vec![cone(), cone()]).unwrap();
        let minus = Sv::normalized(vec![cone(), -cone::<f64>()]).unwrap();
        let zero = Sv::ket("0").unwrap();
        let one = Sv::ket("1").unwrap();
        let elems = vec![
            zero.tensor(&plus).unwrap(),
            zero.tensor(&minus).unwrap(),
            one.tensor(&plus).unwrap(),
            one.tensor(&minus).unwrap(),
        ];
        let basis = ControllerBasis::custom(elems).unwrap();
        assert_eq!(basis.l(), 2);
        assert_eq!(basis.elements().len(), 4);
    }

    #[test]
    fn custom_completion() {
        let plus = Sv::normalized(vec![cone(), cone()]).unwrap();
        let basis = ControllerBasis::custom(vec![plus]).unwrap();
        assert_eq!(basis.supplied().len(), 1);
        assert!(validate_orthonormal(basis.elements()).unwrap().is_basis());
        let bad = ControllerBasis::custom(vec![
            Sv::ket("0").unwrap(),
            Sv::normalized(vec![cone(), cone()]).unwrap(),
        ]);
        assert!(matches!(bad, Err(BasisError::NotOrthonormal(_))));
    }

    #[test]
    fn orthonormality_examples() {
        let zero = Sv::ket("0").unwrap();
        let one = Sv::ket("1").unwrap();
        let plus = Sv::normalized(vec![cone(), cone()]).unwrap();
        assert!(validate_orthonormal(&[zero.clone(), one]).unwrap().is_basis());
        let r = validate_orthonormal(&[zero.clone(), plus]).unwrap();
        assert!(!r.orthonormal);
        assert!((r.max_deviation - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let four: Vec<Sv> = (0..4u8).map(|x| ghz(GhzLabel::new(x, Sign::Plus).unwrap())).collect();
        let r = validate_orthonormal(&four).unwrap();
        assert!(r.orthonormal && !r.complete);
        assert!(validate_orthonormal(&[zero, Sv::ket("00").unwrap()]).is_err());
    }
}
