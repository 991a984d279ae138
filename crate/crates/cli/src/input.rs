//! System description files and small argument parsers.

use std::path::Path;

use delaystab::simulate::DelaySequence;
use delaystab::DelaySystem;
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use thiserror::Error;

/// Anything the user got wrong; maps to exit code 2.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] delaystab::Error),
}

pub type Result<T> = std::result::Result<T, InputError>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default)]
    pub name: Option<String>,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "Ad")]
    pub ad: Vec<f64>,
    pub h1: i64,
    #[serde(default)]
    pub h2: Option<i64>,
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl SystemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let file: SystemFile = serde_json::from_str(&text).map_err(|e| InputError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        file.check()?;
        Ok(file)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(InputError::Invalid("n must be at least 1".into()));
        }
        for (what, v) in [("A", &self.a), ("Ad", &self.ad)] {
            if v.len() != self.n * self.n {
                return Err(InputError::Invalid(format!(
                    "{what} has {} entries, expected n^2 = {}",
                    v.len(),
                    self.n * self.n
                )));
            }
        }
        if self.h1 < 1 {
            return Err(InputError::Invalid(format!("h1 = {} must be at least 1", self.h1)));
        }
        if let Some(h2) = self.h2 {
            if h2 < self.h1 {
                return Err(InputError::Invalid(format!("h2 = {h2} is below h1 = {}", self.h1)));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn a(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.a)
    }

    pub fn ad(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.ad)
    }

    pub fn h1(&self) -> usize {
        self.h1 as usize
    }

    /// The system with the file's own delay interval; `h2` is required.
    pub fn system(&self) -> Result<DelaySystem> {
        let h2 = self
            .h2
            .ok_or_else(|| InputError::Invalid("the system file has no h2".into()))?;
        self.system_with(self.h1(), h2 as usize)
    }

    pub fn system_with(&self, h1: usize, h2: usize) -> Result<DelaySystem> {
        Ok(DelaySystem::new(self.a(), self.ad(), h1, h2)?)
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| InputError::Invalid(format!("{what}: cannot parse {s:?}")))
        })
        .collect()
}

pub fn parse_vector(text: &str, n: usize) -> Result<DVector<f64>> {
    let v: Vec<f64> = parse_list(text, "init")?;
    if v.len() != n {
        return Err(InputError::Invalid(format!(
            "init has {} entries, the system has n = {n}",
            v.len()
        )));
    }
    Ok(DVector::from_vec(v))
}

pub fn parse_delays(text: &str, h1: usize, h2: usize) -> Result<DelaySequence> {
    Ok(DelaySequence::from_spec(text, h1, h2)?)
}
