//! Plain-text amplitude files: optional `#` comment lines, then one
//! `index re im` row per basis state with 17 significant digits.

use std::fmt::Write as _;

use bcst_core::qstate::{StateError, StateVector};
use bcst_core::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AmplitudeError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{rows} rows do not form a register (need a power of two, at least 2)")]
    RowCount { rows: usize },
    #[error("basis index {0} missing")]
    Missing(usize),
    #[error(transparent)]
    State(#[from] StateError),
}

pub fn render_amplitudes(state: &StateVector<f64>) -> String {
    let mut out = format!("# qubits {}\n", state.num_qubits());
    for (k, a) in state.amplitudes().iter().enumerate() {
        writeln!(out, "{k} {:.16e} {:.16e}", a.re, a.im).expect("writing to a String");
    }
    out
}

/// Parses an amplitude file, requiring normalization within `tol`.
pub fn parse_amplitudes(text: &str, tol: f64) -> Result<StateVector<f64>, AmplitudeError> {
    let mut rows: Vec<(usize, Complex)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| AmplitudeError::Line { line: n + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [idx, re, im] = fields[..] else {
            return Err(bad(format!("expected `index re im`, found {} fields", fields.len())));
        };
        let idx: usize = idx.parse().map_err(|e| bad(format!("index {idx:?}: {e}")))?;
        let re: f64 = re.parse().map_err(|e| bad(format!("real part {re:?}: {e}")))?;
        let im: f64 = im.parse().map_err(|e| bad(format!("imaginary part {im:?}: {e}")))?;
        if rows.iter().any(|&(k, _)| k == idx) {
            return Err(bad(format!("index {idx} repeated")));
        }
        rows.push((idx, Complex::new(re, im)));
    }
    let dim = rows.len();
    if dim < 2 || !dim.is_power_of_two() {
        return Err(AmplitudeError::RowCount { rows: dim });
    }
    let mut amps = vec![None; dim];
    for (k, z) in rows {
        if k >= dim {
            return Err(AmplitudeError::Missing(
                (0..dim).find(|i| amps[*i].is_none()).unwrap_or(0),
            ));
        }
        amps[k] = Some(z);
    }
    let amps: Vec<Complex> = amps
        .into_iter()
        .enumerate()
        .map(|(k, z)| z.ok_or(AmplitudeError::Missing(k)))
        .collect::<Result<_, _>>()?;
    Ok(StateVector::from_amplitudes_with_tolerance(amps, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::normalized(vec![
            Complex::new(h, 0.0),
            Complex::new(0.0, -0.0),
            Complex::new(0.1 * h, 0.3),
            Complex::new(0.0, 0.2),
        ])
        .unwrap();
        let back = parse_amplitudes(&render_amplitudes(&s), 1e-9).unwrap();
        for (a, b) in s.amplitudes().iter().zip(back.amplitudes()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_amplitudes("# qubits 1\n0 1.0 0.0\n1 x 0.0\n", 1e-9).unwrap_err();
        assert!(err.to_string().starts_with("line 3"), "{err}");
        assert!(matches!(
            parse_amplitudes("0 1 0\n1 0 0\n2 0 0\n", 1e-9),
            Err(AmplitudeError::RowCount { rows: 3 })
        ));
        assert!(matches!(
            parse_amplitudes("0 1 0\n1 1 0\n", 1e-9),
            Err(AmplitudeError::State(_))
        ));
    }
}
