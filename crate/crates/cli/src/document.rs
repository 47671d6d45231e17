//! TOML channel-spec documents.
//!
//! ```toml
//! version = 1
//! kind = "bcst"
//! pair_basis = "bell"
//! selection = [[1, 1], [2, 2]]
//! phases = ["+", "-"]
//!
//! [controller]
//! family = "hadamard-product"
//! qubits = 1
//! ```
//!
//! Amplitudes of custom controller elements are either `[re, im]` or the
//! exact form `{ num = 1, den_sqrt2_power = 1 }` meaning `1/sqrt(2)`.

use std::f64::consts::FRAC_1_SQRT_2;

use bcst_core::bases::{controller_basis, entangled_basis, BasisError, ControllerBasis, ControllerFamily};
use bcst_core::channel::{ChannelError, ChannelSpec, PairSelection, QubitLayout};
use bcst_core::qstate::{StateError, StateVector};
use bcst_core::{ChannelKind, Complex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DOCUMENT_VERSION: u32 = 1;

/// Largest power tried when writing amplitudes back in exact form.
const MAX_EXACT_POWER: u32 = 12;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("cannot serialize document: {0}")]
    Render(#[from] toml::ser::Error),
}

fn field(field: &'static str, message: impl Into<String>) -> DocumentError {
    DocumentError::Field {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Bcst,
    Qd,
}

/// A term phase: `+1`/`-1`, `"+"`, `"-"`, `"+i"`, `"-i"`, or `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseRepr {
    Sign(i64),
    Symbol(String),
    Complex([f64; 2]),
}

/// `(num + i * num_im) / sqrt(2)^den_sqrt2_power`, or a numeric `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmplitudeRepr {
    Exact {
        num: i64,
        #[serde(default, skip_serializing_if = "is_zero")]
        num_im: i64,
        den_sqrt2_power: u32,
    },
    Numeric([f64; 2]),
}

fn is_zero(x: &i64) -> bool {
    *x == 0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<Vec<Vec<AmplitudeRepr>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecDocument {
    pub version: u32,
    pub kind: DocKind,
    pub pair_basis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<PhaseRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
    pub controller: ControllerDoc,
}

pub fn parse_document(text: &str) -> Result<ChannelSpecDocument, DocumentError> {
    Ok(toml::from_str(text)?)
}

pub fn render_document(doc: &ChannelSpecDocument) -> Result<String, DocumentError> {
    Ok(toml::to_string(doc)?)
}

fn sqrt2_power_inverse(p: u32) -> f64 {
    let half = 0.5f64.powi((p / 2) as i32);
    if p % 2 == 1 {
        FRAC_1_SQRT_2 * half
    } else {
        half
    }
}

impl AmplitudeRepr {
    pub fn value(&self) -> Complex {
        match *self {
            AmplitudeRepr::Exact {
                num,
                num_im,
                den_sqrt2_power,
            } => {
                let s = sqrt2_power_inverse(den_sqrt2_power);
                Complex::new(num as f64 * s, num_im as f64 * s)
            }
            AmplitudeRepr::Numeric([re, im]) => Complex::new(re, im),
        }
    }

    /// Exact form when `z` is an integer multiple of `1/sqrt(2)^p` reproduced bit for bit.
    pub fn from_value(z: Complex) -> Self {
        for p in 0..=MAX_EXACT_POWER {
            let s = sqrt2_power_inverse(p);
            let (re, im) = ((z.re / s).round(), (z.im / s).round());
            if re.abs() < 1e6 && im.abs() < 1e6 {
                let exact = AmplitudeRepr::Exact {
                    num: re as i64,
                    num_im: im as i64,
                    den_sqrt2_power: p,
                };
                if exact.value() == z {
                    return exact;
                }
            }
        }
        AmplitudeRepr::Numeric([z.re, z.im])
    }
}

impl PhaseRepr {
    pub fn value(&self) -> Result<Complex, DocumentError> {
        Ok(match self {
            PhaseRepr::Sign(1) => Complex::new(1.0, 0.0),
            PhaseRepr::Sign(-1) => Complex::new(-1.0, 0.0),
            PhaseRepr::Sign(s) => return Err(field("phases", format!("integer phase must be +1 or -1, got {s}"))),
            PhaseRepr::Symbol(s) => match s.as_str() {
                "+" | "+1" => Complex::new(1.0, 0.0),
                "-" | "-1" => Complex::new(-1.0, 0.0),
                "+i" | "i" => Complex::new(0.0, 1.0),
                "-i" => Complex::new(0.0, -1.0),
                _ => return Err(field("phases", format!("unknown phase symbol {s:?}"))),
            },
            PhaseRepr::Complex([re, im]) => Complex::new(*re, *im),
        })
    }

    pub fn from_value(z: Complex) -> Self {
        match (z.re, z.im) {
            (re, im) if re == 1.0 && im == 0.0 => PhaseRepr::Symbol("+".into()),
            (re, im) if re == -1.0 && im == 0.0 => PhaseRepr::Symbol("-".into()),
            (re, im) if re == 0.0 && im == 1.0 => PhaseRepr::Symbol("+i".into()),
            (re, im) if re == 0.0 && im == -1.0 => PhaseRepr::Symbol("-i".into()),
            (re, im) => PhaseRepr::Complex([re, im]),
        }
    }
}

fn controller_from_doc(doc: &ControllerDoc, tol: f64) -> Result<ControllerBasis<f64>, DocumentError> {
    match (&doc.family, &doc.custom) {
        (Some(_), Some(_)) => Err(field("controller", "give either `family` or `custom`, not both")),
        (None, None) => Err(field("controller", "missing `family` or `custom`")),
        (Some(name), None) => {
            let family: ControllerFamily = name
                .parse()
                .map_err(|e: BasisError| field("controller.family", e.to_string()))?;
            let l = match (&family, doc.qubits) {
                (_, Some(l)) => l,
                (ControllerFamily::Mixed(p), None) => p.len(),
                (ControllerFamily::Ghz, None) => 3,
                _ => return Err(field("controller.qubits", "required for this family")),
            };
            controller_basis(&family, l).map_err(|e| field("controller", e.to_string()))
        }
        (None, Some(rows)) => {
            if rows.is_empty() {
                return Err(field("controller.custom", "no elements"));
            }
            let mut elements = Vec::with_capacity(rows.len());
            for (k, row) in rows.iter().enumerate() {
                let amps: Vec<Complex> = row.iter().map(AmplitudeRepr::value).collect();
                StateVector::from_amplitudes_with_tolerance(amps.clone(), tol)
                    .map_err(|e| field("controller.custom", format!("element {k}: {e}")))?;
                elements.push(StateVector::normalized(amps)?);
            }
            if let Some(l) = doc.qubits {
                if elements[0].num_qubits() != l {
                    return Err(field(
                        "controller.qubits",
                        format!("custom elements have {} qubits", elements[0].num_qubits()),
                    ));
                }
            }
            ControllerBasis::custom(elements).map_err(|e| field("controller.custom", e.to_string()))
        }
    }
}

/// Builds the spec and optional layout described by `doc`.
///
/// `tol` bounds the normalization error of numeric custom amplitudes.
pub fn spec_from_document(
    doc: &ChannelSpecDocument,
    tol: f64,
) -> Result<(ChannelSpec<f64>, Option<QubitLayout>), DocumentError> {
    if doc.version != DOCUMENT_VERSION {
        return Err(field("version", format!("unsupported version {}", doc.version)));
    }
    let basis = entangled_basis::<f64>(&doc.pair_basis).map_err(|e| field("pair_basis", e.to_string()))?;
    let controller = controller_from_doc(&doc.controller, tol)?;
    let mut spec = match doc.kind {
        DocKind::Bcst => {
            if doc.indices.is_some() {
                return Err(field("indices", "only dialogue documents take `indices`"));
            }
            let cells = doc.selection.as_ref().ok_or_else(|| field("selection", "missing"))?;
            ChannelSpec::bcst(
                basis,
                PairSelection::new(cells.iter().map(|c| (c[0], c[1])).collect()),
                controller,
            )
        }
        DocKind::Qd => {
            if doc.selection.is_some() {
                return Err(field("selection", "dialogue documents take `indices`"));
            }
            let idx = doc.indices.as_ref().ok_or_else(|| field("indices", "missing"))?;
            ChannelSpec::qd(basis, idx.clone(), controller)
        }
    };
    if let Some(phases) = &doc.phases {
        spec = spec.with_phases(phases.iter().map(PhaseRepr::value).collect::<Result<_, _>>()?);
    }
    if let Some(subset) = &doc.controller.subset {
        spec = spec.with_subset(subset.clone());
    }
    let layout = match &doc.layout {
        Some(s) => {
            let layout: QubitLayout = s.parse().map_err(|e: ChannelError| field("layout", e.to_string()))?;
            if layout.num_qubits() != spec.num_qubits() {
                return Err(field(
                    "layout",
                    format!(
                        "{} roles for a {}-qubit channel",
                        layout.num_qubits(),
                        spec.num_qubits()
                    ),
                ));
            }
            Some(layout)
        }
        None => None,
    };
    Ok((spec, layout))
}

/// Document describing `spec`; named controller families stay symbolic.
pub fn document_from_spec(spec: &ChannelSpec<f64>, layout: Option<&QubitLayout>) -> ChannelSpecDocument {
    let (selection, indices) = match spec.kind() {
        ChannelKind::Bcst => (
            Some(
                spec.selection()
                    .expect("pairs")
                    .cells()
                    .iter()
                    .map(|&(i, j)| [i, j])
                    .collect(),
            ),
            None,
        ),
        ChannelKind::Qd => match &spec.terms {
            bcst_core::channel::Terms::Singles(v) => (None, Some(v.clone())),
            bcst_core::channel::Terms::Pairs(_) => unreachable!("kind is Qd"),
        },
    };
    let default_subset: Vec<usize> = (0..spec.n()).collect();
    let controller = match spec.controller.family() {
        ControllerFamily::Custom => ControllerDoc {
            family: None,
            qubits: Some(spec.controller.l()),
            subset: (spec.subset != default_subset).then(|| spec.subset.clone()),
            custom: Some(
                spec.controller
                    .supplied()
                    .iter()
                    .map(|e| e.amplitudes().iter().map(|&z| AmplitudeRepr::from_value(z)).collect())
                    .collect(),
            ),
        },
        family => ControllerDoc {
            family: Some(family.to_string()),
            qubits: Some(spec.controller.l()),
            subset: (spec.subset != default_subset).then(|| spec.subset.clone()),
            custom: None,
        },
    };
    let canonical = spec.layout();
    ChannelSpecDocument {
        version: DOCUMENT_VERSION,
        kind: match spec.kind() {
            ChannelKind::Bcst => DocKind::Bcst,
            ChannelKind::Qd => DocKind::Qd,
        },
        pair_basis: spec.basis.name().to_string(),
        selection,
        indices,
        phases: Some(spec.phases.iter().map(|&z| PhaseRepr::from_value(z)).collect()),
        layout: layout.filter(|l| **l != canonical).map(|l| l.to_string()),
        controller,
    }
}
