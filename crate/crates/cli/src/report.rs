use std::fmt;
use std::path::Path;

use gerbe_core::cocycle::CocycleError;
use gerbe_core::dirac::DiracError;
use gerbe_core::exform::FormError;
use gerbe_core::fock::FockError;
use gerbe_core::liegerbe::LieError;
use gerbe_core::verify::{Check, VerifyError};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh(pub usize, pub usize);

#[derive(Debug)]
pub enum CliError {
    /// Input does not match the expected schema.
    Schema(String),
    /// A numerical guard refused the computation.
    Guard(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Guard(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "schema: {m}"),
            CliError::Guard(m) => write!(f, "numerical guard: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl From<CocycleError> for CliError {
    fn from(e: CocycleError) -> Self {
        match e {
            CocycleError::Schema(_) | CocycleError::UnknownSource(_) | CocycleError::MissingParameter { .. } => {
                CliError::Schema(e.to_string())
            }
            CocycleError::Fock(f) => f.into(),
            _ => CliError::Guard(e.to_string()),
        }
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::InvalidCutoff { .. } | FockError::Direction(_) => CliError::Schema(e.to_string()),
            _ => CliError::Guard(e.to_string()),
        }
    }
}

impl From<DiracError> for CliError {
    fn from(e: DiracError) -> Self {
        match e {
            DiracError::InvalidMesh(_) | DiracError::UnknownField(_) | DiracError::Cutoffs | DiracError::Component(..) => {
                CliError::Schema(e.to_string())
            }
            _ => CliError::Guard(e.to_string()),
        }
    }
}

impl From<FormError> for CliError {
    fn from(e: FormError) -> Self {
        CliError::Schema(e.to_string())
    }
}

impl From<LieError> for CliError {
    fn from(e: LieError) -> Self {
        match e {
            LieError::Mesh(..) => CliError::Schema(e.to_string()),
            LieError::NotAMorphism(_) => CliError::Guard(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Cocycle(e) => e.into(),
            VerifyError::Fock(e) => e.into(),
            VerifyError::Dirac(e) => e.into(),
            VerifyError::Form(e) => e.into(),
            VerifyError::Lie(e) => e.into(),
            VerifyError::UnknownCriterion(_) => CliError::Schema(e.to_string()),
        }
    }
}

pub struct Report {
    pub command: String,
    pub config: Value,
    pub results: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Report { command: command.to_string(), config, results: json!({}), checks: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let v = json!({
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "checks": self.checks,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn split3(s: &str) -> Result<[&str; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    <[&str; 3]>::try_from(parts).map_err(|p| format!("expected three comma-separated values, got {}", p.len()))
}

pub fn parse_ivec(s: &str) -> Result<[i64; 3], String> {
    let p = split3(s)?;
    let mut out = [0; 3];
    for (o, x) in out.iter_mut().zip(p) {
        *o = x.parse().map_err(|e| format!("`{x}`: {e}"))?;
    }
    Ok(out)
}

pub fn parse_vec(s: &str) -> Result<[f64; 3], String> {
    let p = split3(s)?;
    let mut out = [0.0; 3];
    for (o, x) in out.iter_mut().zip(p) {
        *o = x.parse().map_err(|e| format!("`{x}`: {e}"))?;
    }
    Ok(out)
}

pub fn parse_mesh(s: &str) -> Result<Mesh, String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("mesh must look like 200x400")?;
    let a = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    Ok(Mesh(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_arguments() {
        assert_eq!(parse_ivec("1,-2, 3").unwrap(), [1, -2, 3]);
        assert!(parse_ivec("1,2").is_err());
        assert_eq!(parse_vec("0.5,0,-1e-3").unwrap(), [0.5, 0.0, -1e-3]);
        assert_eq!(parse_mesh("200x400").unwrap(), Mesh(200, 400));
        assert!(parse_mesh("200").is_err());
    }
}
