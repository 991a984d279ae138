//! JSON form of a [`StabilityCertificate`].
//!
//! Field order is fixed by the struct layout and every real is written with
//! 17 significant digits, so a certificate survives a write/read cycle bit
//! for bit.

use std::io;

use nalgebra::DMatrix;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::lmi::{DelaySystem, LkfVariables, XStructure};
use crate::sdp::{Margins, SolverStatus, StabilityCertificate};

/// Row-major matrix with explicit dimensions.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
            .collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self, name: &str) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "matrix {name}: {} entries for a {}x{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SystemDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "Ad")]
    pub ad: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct MatricesDoc {
    #[serde(rename = "P")]
    pub p: MatrixDoc,
    #[serde(rename = "Q1")]
    pub q1: MatrixDoc,
    #[serde(rename = "Q2")]
    pub q2: MatrixDoc,
    #[serde(rename = "R1")]
    pub r1: MatrixDoc,
    #[serde(rename = "R2")]
    pub r2: MatrixDoc,
    #[serde(rename = "S1")]
    pub s1: MatrixDoc,
    #[serde(rename = "S2")]
    pub s2: MatrixDoc,
    #[serde(rename = "X")]
    pub x: MatrixDoc,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct CertificateDoc {
    pub system: SystemDoc,
    pub h1: usize,
    pub h2: usize,
    pub x_structure: XStructure,
    pub matrices: MatricesDoc,
    pub margins: Margins,
    pub verified: bool,
    pub solver_status: SolverStatus,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    MatrixDoc::from_matrix(m).data
}

impl CertificateDoc {
    pub fn from_certificate(cert: &StabilityCertificate, name: Option<&str>) -> Self {
        let sys = &cert.system;
        let v = &cert.vars;
        let doc = MatrixDoc::from_matrix;
        Self {
            system: SystemDoc {
                name: name.map(str::to_owned),
                n: sys.n(),
                a: row_major(sys.a()),
                ad: row_major(sys.ad()),
            },
            h1: sys.h1(),
            h2: sys.h2(),
            x_structure: v.x_structure,
            matrices: MatricesDoc {
                p: doc(&v.p),
                q1: doc(&v.q1),
                q2: doc(&v.q2),
                r1: doc(&v.r1),
                r2: doc(&v.r2),
                s1: doc(&v.s1),
                s2: doc(&v.s2),
                x: doc(&v.x),
            },
            margins: cert.margins,
            verified: cert.verified,
            solver_status: cert.solver_status,
        }
    }

    pub fn system(&self) -> Result<DelaySystem> {
        let n = self.system.n;
        for (what, v) in [("A", &self.system.a), ("Ad", &self.system.ad)] {
            if v.len() != n * n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n * n,
                    found: v.len(),
                });
            }
        }
        DelaySystem::new(
            DMatrix::from_row_slice(n, n, &self.system.a),
            DMatrix::from_row_slice(n, n, &self.system.ad),
            self.h1,
            self.h2,
        )
    }

    pub fn vars(&self) -> Result<LkfVariables> {
        let m = &self.matrices;
        LkfVariables::new(
            m.p.to_matrix("P")?,
            m.q1.to_matrix("Q1")?,
            m.q2.to_matrix("Q2")?,
            m.r1.to_matrix("R1")?,
            m.r2.to_matrix("R2")?,
            m.s1.to_matrix("S1")?,
            m.s2.to_matrix("S2")?,
            m.x.to_matrix("X")?,
            self.x_structure,
        )
    }

    /// Rebuilds the certificate with the stored margins and verdict.
    pub fn to_certificate(&self) -> Result<StabilityCertificate> {
        let system = self.system()?;
        let vars = self.vars()?;
        if vars.n() != system.n() {
            return Err(Error::DimensionMismatch {
                what: "certificate matrices",
                expected: system.n(),
                found: vars.n(),
            });
        }
        Ok(StabilityCertificate {
            system,
            vars,
            margins: self.margins,
            verified: self.verified,
            solver_status: self.solver_status,
        })
    }

    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits::default());
        self.serialize(&mut ser)
            .expect("certificate serialization is infallible");
        out.push(b'\n');
        String::from_utf8(out).expect("serde_json writes UTF-8")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Pretty JSON with every `f64` written as `d.dddddddddddddddde±x`.
#[derive(Default)]
pub struct SignificantDigits {
    pretty: PrettyFormatter<'static>,
}

/// Seventeen significant digits, the round-trip width of an IEEE double.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(format_f64(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}
