//! Counting valid selections: the closed-form count, an exhaustive filter and
//! a constructive enumerator.
//!
//! The closed form is evaluated exactly as published and compared against the
//! two independent counts. Disagreement is reported, never reconciled.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{validate_selection, PairSelection};

/// Upper bound on the work (tuples to scan) accepted by the oracle and the enumerator.
pub const TRACTABLE_LIMIT: u128 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CensusError {
    #[error("invalid census arguments: {0}")]
    InvalidArgs(String),
    #[error("n = {n} exceeds the {max} cells of the pair matrix")]
    TooManyTerms { n: u64, max: u64 },
    #[error("{work} tuples exceed the tractability limit of {limit}")]
    Intractable { work: u128, limit: u128 },
    #[error("{n} terms need more than the {capacity} states of the controller")]
    ControllerTooSmall { n: u64, capacity: u64 },
    #[error("count overflows 128 bits")]
    Overflow,
}

pub type Result<T, E = CensusError> = std::result::Result<T, E>;

fn falling_factorial(top: u128, k: u64) -> Result<u128> {
    (0..k as u128).try_fold(1u128, |acc, i| acc.checked_mul(top - i).ok_or(CensusError::Overflow))
}

/// Closed-form count for `p`-qubit pair elements and `n` terms.
///
/// Uses `(2^{2p})!/(2^{2p}-n)!` for `n > 2^p` and `2^{pn}(2^{pn} - 2^{p+1} + 1)`
/// otherwise, including `n = 2^p`, which the printed formula leaves out.
pub fn formula_count(p: u32, n: u64) -> Result<u128> {
    if p == 0 || n < 2 {
        return Err(CensusError::InvalidArgs(format!(
            "need p >= 1 and n >= 2, got p = {p}, n = {n}"
        )));
    }
    let side = 1u128.checked_shl(p).ok_or(CensusError::Overflow)?;
    let cells = side.checked_mul(side).ok_or(CensusError::Overflow)?;
    if n as u128 > cells {
        return Err(CensusError::TooManyTerms { n, max: cells as u64 });
    }
    if n as u128 > side {
        falling_factorial(cells, n)
    } else {
        let exp = (p as u64)
            .checked_mul(n)
            .filter(|&e| e < 128)
            .ok_or(CensusError::Overflow)?;
        let base = 1u128 << exp;
        let inner = base
            .checked_sub(side * 2)
            .and_then(|x| x.checked_add(1))
            .ok_or(CensusError::Overflow)?;
        base.checked_mul(inner).ok_or(CensusError::Overflow)
    }
}

fn check_grid(rows: usize, cols: usize, n: usize) -> Result<u128> {
    if rows == 0 || cols == 0 || n < 2 {
        return Err(CensusError::InvalidArgs(format!(
            "need a nonempty grid and n >= 2, got {rows}x{cols}, n = {n}"
        )));
    }
    let cells = (rows * cols) as u128;
    if n as u128 > cells {
        return Err(CensusError::TooManyTerms {
            n: n as u64,
            max: cells as u64,
        });
    }
    Ok(cells)
}

/// Number of `(rows*cols)^n` tuples the oracle would scan.
pub fn oracle_work(rows: usize, cols: usize, n: usize) -> Result<u128> {
    let cells = check_grid(rows, cols, n)?;
    Ok(cells.checked_pow(n as u32).unwrap_or(u128::MAX))
}

/// Number of injective tuples the enumerator walks.
pub fn enumerator_work(rows: usize, cols: usize, n: usize) -> Result<u128> {
    let cells = check_grid(rows, cols, n)?;
    Ok(falling_factorial(cells, n as u64).unwrap_or(u128::MAX))
}

/// Counts ordered `n`-tuples of grid cells that pass the selection rules, by
/// filtering every one of the `(rows*cols)^n` tuples.
pub fn oracle_count(rows: usize, cols: usize, n: usize) -> Result<u64> {
    let work = oracle_work(rows, cols, n)?;
    if work > TRACTABLE_LIMIT {
        return Err(CensusError::Intractable {
            work,
            limit: TRACTABLE_LIMIT,
        });
    }
    let cells = rows * cols;
    let grid = rows.max(cols);
    let count = (0..work as u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rem = t as usize;
            let cells_of_tuple = (0..n)
                .map(|_| {
                    let k = rem % cells;
                    rem /= cells;
                    (k / cols + 1, k % cols + 1)
                })
                .collect();
            validate_selection(&PairSelection::new(cells_of_tuple), grid).is_ok()
        })
        .count() as u64;
    Ok(count)
}

/// Depth-first generator of valid selections in lexicographic order of the
/// flattened (row-major, zero-based) cell indices.
#[derive(Debug, Clone)]
pub struct Selections {
    rows: usize,
    cols: usize,
    n: usize,
    stack: Vec<usize>,
    used: Vec<bool>,
    cursor: usize,
    done: bool,
}

impl Selections {
    /// Rule 1 can only bite on the last slot: reject a cell that would put every
    /// term in one row or one column. Rule 2 is handled by `used`.
    fn allowed(&self, cell: usize) -> bool {
        if self.stack.len() + 1 < self.n {
            return true;
        }
        let row = cell / self.cols;
        let col = cell % self.cols;
        let same_row = self.stack.iter().all(|&c| c / self.cols == row);
        let same_col = self.stack.iter().all(|&c| c % self.cols == col);
        !(same_row || same_col)
    }

    fn emit(&self) -> PairSelection {
        PairSelection::new(
            self.stack
                .iter()
                .map(|&c| (c / self.cols + 1, c % self.cols + 1))
                .collect(),
        )
    }
}

impl Iterator for Selections {
    type Item = PairSelection;

    fn next(&mut self) -> Option<PairSelection> {
        let total = self.rows * self.cols;
        while !self.done {
            if self.cursor >= total {
                match self.stack.pop() {
                    None => self.done = true,
                    Some(c) => {
                        self.used[c] = false;
                        self.cursor = c + 1;
                    }
                }
                continue;
            }
            let c = self.cursor;
            if self.used[c] || !self.allowed(c) {
                self.cursor += 1;
                continue;
            }
            self.stack.push(c);
            if self.stack.len() == self.n {
                let out = self.emit();
                self.stack.pop();
                self.cursor = c + 1;
                return Some(out);
            }
            self.used[c] = true;
            self.cursor = 0;
        }
        None
    }
}

/// Streams every valid selection once, in lexicographic order.
pub fn enumerate_selections(rows: usize, cols: usize, n: usize) -> Result<Selections> {
    let work = enumerator_work(rows, cols, n)?;
    if work > TRACTABLE_LIMIT {
        return Err(CensusError::Intractable {
            work,
            limit: TRACTABLE_LIMIT,
        });
    }
    Ok(Selections {
        rows,
        cols,
        n,
        stack: Vec::with_capacity(n),
        used: vec![false; rows * cols],
        cursor: 0,
        done: false,
    })
}

/// Orderings of `n` controller states drawn from `2^l`: `(2^l)!/(2^l - n)!`.
pub fn multiplicity_factor(l: u32, n: u64) -> Result<u128> {
    let capacity = 1u128.checked_shl(l).filter(|_| l < 127).ok_or(CensusError::Overflow)?;
    if n as u128 > capacity {
        return Err(CensusError::ControllerTooSmall {
            n,
            capacity: capacity as u64,
        });
    }
    falling_factorial(capacity, n)
}

/// Smallest `l` with `2^l >= n`.
pub fn min_controller_qubits(n: u64) -> u32 {
    let mut l = 1;
    while (1u128 << l) < n as u128 {
        l += 1;
    }
    l
}

/// Formula vs. exhaustive vs. constructive counts for one `(p, n)` cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusReport {
    pub p: u32,
    pub n: u64,
    /// Closed form as published.
    pub formula_value: u128,
    /// Exhaustive filter; `None` when intractable.
    pub oracle_value: Option<u64>,
    /// Constructive enumeration; `None` when intractable.
    pub constructive_value: Option<u64>,
    /// Controller qubits used for the multiplicity factor (the minimum for `n`).
    pub l: u32,
    pub multiplicity_factor: u128,
    /// `Some(true)` when the formula agrees with the available independent count.
    pub formula_matches: Option<bool>,
    /// `Some(true)` when both independent counts are available and agree.
    pub counts_agree: Option<bool>,
}

pub fn census_report(p: u32, n: u64) -> Result<CensusReport> {
    let formula_value = formula_count(p, n)?;
    let side = 1usize << p;
    let n_us = n as usize;
    let oracle_value = match oracle_count(side, side, n_us) {
        Ok(v) => Some(v),
        Err(CensusError::Intractable { .. }) => None,
        Err(e) => return Err(e),
    };
    let constructive_value = match enumerate_selections(side, side, n_us) {
        Ok(it) => Some(it.count() as u64),
        Err(CensusError::Intractable { .. }) => None,
        Err(e) => return Err(e),
    };
    let l = min_controller_qubits(n);
    let multiplicity_factor = multiplicity_factor(l, n)?;
    let reference = oracle_value.or(constructive_value);
    Ok(CensusReport {
        p,
        n,
        formula_value,
        oracle_value,
        constructive_value,
        l,
        multiplicity_factor,
        formula_matches: reference.map(|r| r as u128 == formula_value),
        counts_agree: match (oracle_value, constructive_value) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        },
    })
}
