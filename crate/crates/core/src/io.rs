//! JSON forms of operators and decompositions.
//!
//! Numbers are written with 17 significant digits so that a decoded value is
//! bit-identical to the encoded one.

use std::io;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter};

use crate::deflation::{Decomposition, DecompositionKind, DeflationConfig, DeflationStep, Diagnostics};
use crate::error::{Error, Result};
use crate::operators::DenseOperator;
use crate::spaces::{Functional, NormSpec, SubspaceBasis, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
    pub source: NormSpec,
    pub target: NormSpec,
}

impl OperatorJson {
    pub fn from_operator(t: &DenseOperator) -> Self {
        let (rows, cols) = t.shape();
        Self {
            rows,
            cols,
            data: t.entries().transpose().iter().copied().collect(),
            source: *t.source(),
            target: *t.target(),
        }
    }

    pub fn into_operator(self) -> Result<DenseOperator> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: self.data.len(),
            });
        }
        let a = DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        DenseOperator::new(a, self.source, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepJson {
    pub index: usize,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub norm: f64,
    pub certificate_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub kind: DecompositionKind,
    pub source: NormSpec,
    pub target: NormSpec,
    pub steps: Vec<StepJson>,
    pub xi: Vec<Vec<f64>>,
    /// Column vectors spanning the kernel.
    pub kernel_basis: Vec<Vec<f64>>,
    #[serde(default)]
    pub config: DeflationConfig,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

impl DecompositionJson {
    pub fn from_decomposition(dec: &Decomposition) -> Self {
        Self {
            kind: dec.kind,
            source: dec.source,
            target: dec.target,
            steps: dec
                .steps
                .iter()
                .map(|s| StepJson {
                    index: s.index,
                    x: to_vec(s.x.entries()),
                    f: to_vec(s.f.entries()),
                    g: to_vec(s.g.entries()),
                    norm: s.norm,
                    certificate_gap: s.certificate_gap,
                    gamma: s.gamma,
                    lambda: s.lambda,
                })
                .collect(),
            xi: dec.xi.iter().map(|f| to_vec(f.entries())).collect(),
            kernel_basis: dec
                .kernel_basis
                .columns()
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
            config: dec.config,
            diagnostics: dec.diagnostics.clone(),
        }
    }

    pub fn into_decomposition(self) -> Result<Decomposition> {
        let (src, tgt) = (self.source, self.target);
        let steps = self
            .steps
            .into_iter()
            .map(|s| {
                Ok(DeflationStep {
                    index: s.index,
                    x: Vector::from_slice(&s.x, src)?,
                    f: Functional::from_slice(&s.f, src)?,
                    g: Functional::from_slice(&s.g, tgt)?,
                    norm: s.norm,
                    certificate_gap: s.certificate_gap,
                    gamma: s.gamma,
                    lambda: s.lambda,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let xi = self
            .xi
            .iter()
            .map(|v| Functional::from_slice(v, src))
            .collect::<Result<Vec<_>>>()?;
        let d = src.dim();
        for c in &self.kernel_basis {
            src.check_len(c.len())?;
        }
        let cols = DMatrix::from_fn(d, self.kernel_basis.len(), |i, j| self.kernel_basis[j][i]);
        // Keep an orthonormal basis bit-for-bit so re-serialization is stable.
        let gram_err = (cols.transpose() * &cols - DMatrix::identity(cols.ncols(), cols.ncols())).amax();
        let kernel_basis = if cols.ncols() > 0 && gram_err <= 1e-12 {
            SubspaceBasis::from_orthonormal(cols, src)
        } else {
            SubspaceBasis::from_columns(&cols, src)?
        };
        Ok(Decomposition {
            kind: self.kind,
            source: src,
            target: tgt,
            steps,
            xi,
            kernel_basis,
            config: self.config,
            diagnostics: self.diagnostics,
        })
    }
}

/// Compact JSON with every float written as `{:.16e}`.
struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        CompactFormatter.write_f64(writer, f64::from(value))
    }
}

/// Serialize with 17 significant digits per float.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn operator_from_json(s: &str) -> Result<DenseOperator> {
    serde_json::from_str::<OperatorJson>(s)
        .map_err(|e| Error::InvalidArgument(format!("operator JSON: {e}")))?
        .into_operator()
}

pub fn decomposition_from_json(s: &str) -> Result<Decomposition> {
    serde_json::from_str::<DecompositionJson>(s)
        .map_err(|e| Error::InvalidArgument(format!("decomposition JSON: {e}")))?
        .into_decomposition()
}

pub fn decomposition_to_json(dec: &Decomposition) -> Result<String> {
    to_json(&DecompositionJson::from_decomposition(dec))
}
