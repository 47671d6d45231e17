//! Literal ket expansions of the catalog channels, written out by hand.
//!
//! The oracle knows nothing about the builder: states are sums of products
//! of labelled factors, each factor a dictionary of bit strings.

use std::collections::BTreeMap;

use bcst_core::{Complex, StateVector};

pub const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A factor: qubit labels and `bits -> amplitude`.
pub struct Factor {
    qubits: Vec<&'static str>,
    amps: Vec<(&'static str, f64)>,
}

fn f(name: &str, qubits: &[&'static str]) -> Factor {
    let amps: Vec<(&'static str, f64)> = match name {
        "psi+" => vec![("00", H), ("11", H)],
        "psi-" => vec![("00", H), ("11", -H)],
        "phi+" => vec![("01", H), ("10", H)],
        "phi-" => vec![("01", H), ("10", -H)],
        "0" => vec![("0", 1.0)],
        "1" => vec![("1", 1.0)],
        "+" => vec![("0", H), ("1", H)],
        "-" => vec![("0", H), ("1", -H)],
        "GHZ0+" => vec![("000", H), ("111", H)],
        "GHZ1+" => vec![("001", H), ("110", H)],
        "GHZ2+" => vec![("010", H), ("101", H)],
        "GHZ3+" => vec![("011", H), ("100", H)],
        _ => panic!("unknown factor {name}"),
    };
    Factor {
        qubits: qubits.to_vec(),
        amps,
    }
}

/// `(|x>|y>)` over two single-qubit labels, e.g. `|0+>`.
fn two(a: &str, b: &str, qa: &'static str, qb: &'static str) -> Vec<Factor> {
    vec![f(a, &[qa]), f(b, &[qb])]
}

pub type Expr = Vec<(f64, Vec<Factor>)>;

/// Expands `sum coeff * prod factors` onto `order`, leftmost label most significant.
pub fn expand(expr: &Expr, order: &[&str]) -> Vec<Complex> {
    let mut amps = vec![Complex::new(0.0, 0.0); 1 << order.len()];
    for (coeff, factors) in expr {
        let mut partial: Vec<(BTreeMap<&str, char>, f64)> = vec![(BTreeMap::new(), *coeff)];
        for fac in factors {
            let mut next = Vec::new();
            for (assign, a) in &partial {
                for (bits, b) in &fac.amps {
                    let mut m = assign.clone();
                    for (q, ch) in fac.qubits.iter().zip(bits.chars()) {
                        assert!(m.insert(q, ch).is_none(), "qubit {q} assigned twice");
                    }
                    next.push((m, a * b));
                }
            }
            partial = next;
        }
        for (assign, a) in partial {
            assert_eq!(assign.len(), order.len());
            let idx = order
                .iter()
                .fold(0usize, |acc, q| (acc << 1) | (assign[q] == '1') as usize);
            amps[idx] += Complex::new(a, 0.0);
        }
    }
    amps
}

fn pairs(first: &str, second: &str) -> Vec<Factor> {
    vec![f(first, &["A1", "B1"]), f(second, &["A2", "B2"])]
}

fn with(mut a: Vec<Factor>, b: Vec<Factor>) -> Vec<Factor> {
    a.extend(b);
    a
}

pub fn literal(id: &str) -> (Expr, Vec<&'static str>) {
    let o5 = vec!["A1", "B1", "A2", "B2", "C1"];
    let o6 = vec!["A1", "B1", "A2", "B2", "C1", "C2"];
    let o7 = vec!["A1", "B1", "A2", "B2", "C1", "C2", "C3"];
    match id {
        "zha5" => (
            vec![
                (H, with(pairs("psi+", "psi+"), vec![f("+", &["C1"])])),
                (H, with(pairs("psi-", "psi-"), vec![f("-", &["C1"])])),
            ],
            o5,
        ),
        "zha_ii5" => (
            vec![
                (H, with(pairs("psi+", "psi+"), vec![f("0", &["C1"])])),
                (-H, with(pairs("psi-", "phi-"), vec![f("1", &["C1"])])),
            ],
            o5,
        ),
        // (psi+|+> + psi-|->)_{A1B1C1} psi+_{A2B2}, written factored
        "li5" => (
            vec![
                (
                    H,
                    vec![f("psi+", &["A1", "B1"]), f("+", &["C1"]), f("psi+", &["A2", "B2"])],
                ),
                (
                    H,
                    vec![f("psi-", &["A1", "B1"]), f("-", &["C1"]), f("psi+", &["A2", "B2"])],
                ),
            ],
            o5,
        ),
        "cqsdc5" => (
            vec![
                (
                    H,
                    vec![f("psi+", &["A2", "B2"]), f("0", &["C1"]), f("phi+", &["A1", "B1"])],
                ),
                (
                    H,
                    vec![f("psi-", &["A2", "B2"]), f("1", &["C1"]), f("phi+", &["A1", "B1"])],
                ),
            ],
            o5,
        ),
        "six1" => (
            vec![
                (H, with(pairs("psi+", "phi+"), two("0", "0", "C1", "C2"))),
                (H, with(pairs("phi+", "psi+"), two("1", "1", "C1", "C2"))),
            ],
            o6,
        ),
        "six3" => (
            vec![
                (0.5, with(pairs("psi+", "psi+"), two("0", "+", "C1", "C2"))),
                (0.5, with(pairs("psi+", "psi-"), two("0", "-", "C1", "C2"))),
                (0.5, with(pairs("phi+", "phi+"), two("1", "+", "C1", "C2"))),
                (-0.5, with(pairs("phi+", "phi-"), two("1", "-", "C1", "C2"))),
            ],
            o6,
        ),
        "six4a" => (
            vec![
                (0.5, with(pairs("psi+", "psi+"), two("+", "+", "C1", "C2"))),
                (0.5, with(pairs("psi+", "phi-"), two("+", "-", "C1", "C2"))),
                (0.5, with(pairs("phi-", "psi+"), two("-", "+", "C1", "C2"))),
                (0.5, with(pairs("phi-", "phi-"), two("-", "-", "C1", "C2"))),
            ],
            o6,
        ),
        "six4b" => (
            vec![
                (0.5, with(pairs("psi+", "phi+"), two("0", "+", "C1", "C2"))),
                (0.5, with(pairs("psi+", "phi+"), two("0", "-", "C1", "C2"))),
                (0.5, with(pairs("phi+", "psi+"), two("1", "+", "C1", "C2"))),
                (-0.5, with(pairs("phi+", "psi+"), two("1", "-", "C1", "C2"))),
            ],
            o6,
        ),
        "seven" => {
            let c = ["C1", "C2", "C3"];
            (
                vec![
                    (0.5, with(pairs("psi+", "psi+"), vec![f("GHZ0+", &c)])),
                    (-0.5, with(pairs("psi-", "phi-"), vec![f("GHZ2+", &c)])),
                    (-0.5, with(pairs("phi+", "phi+"), vec![f("GHZ3+", &c)])),
                    (-0.5, with(pairs("phi-", "psi-"), vec![f("GHZ1+", &c)])),
                ],
                o7,
            )
        }
        _ => panic!("no literal for {id}"),
    }
}

pub fn literal_state(id: &str) -> StateVector {
    let (expr, order) = literal(id);
    StateVector::from_amplitudes(expand(&expr, &order)).expect("literal expansions are normalized")
}
