//! Criterion and residual settings as given on the command line.

use std::path::PathBuf;
use std::str::FromStr;

use hyperfit_core::{Criterion, Exponent, NormSpec, Preset};

use crate::error::CliError;
use crate::input::read_block_norm;

/// The aggregation criteria of the experiment grid, in table order.
pub const GRID_CRITERIA: [&str; 7] = ["SUM", "MAX", "MED", "kC", "AkC", "SOS", "1.5SUM"];
/// The residuals of the experiment grid, in table order.
pub const GRID_RESIDUALS: [&str; 6] = ["vertical", "l1", "linf", "ltau:3/2", "ltau:2", "ltau:3"];

#[derive(Debug, Clone, PartialEq)]
pub enum Residual {
    Vertical,
    LTau(Exponent),
    Block(PathBuf),
}

impl Residual {
    /// Accepts `vertical` (or `v`), `l1`, `linf`, `ltau:τ`, `l<τ>` and
    /// `block:<file>`. A bare `ltau` takes its index from `tau`.
    pub fn parse(s: &str, tau: Option<&str>) -> Result<Self, CliError> {
        let bad = |why: String| CliError::Input(format!("residual {s:?}: {why}"));
        let exponent = |t: &str| Exponent::from_str(t).map_err(|e| bad(e.to_string()));
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "vertical" | "v" => Residual::Vertical,
            "ltau" => Residual::LTau(exponent(tau.ok_or_else(|| bad("needs --tau".into()))?)?),
            _ if lower.starts_with("ltau:") => Residual::LTau(exponent(&lower[5..])?),
            _ if lower.starts_with("block:") => Residual::Block(PathBuf::from(&s.trim()[6..])),
            _ if lower.starts_with('l') => Residual::LTau(exponent(&lower[1..])?),
            _ => return Err(bad("expected vertical, l1, linf, ltau:τ or block:file".into())),
        })
    }

    /// Canonical label, which [`Residual::parse`] reads back.
    pub fn label(&self) -> String {
        match self {
            Residual::Vertical => "vertical".into(),
            Residual::LTau(t) if t.is_one() => "l1".into(),
            Residual::LTau(t) if t.is_infinite() => "linf".into(),
            Residual::LTau(t) => format!("ltau:{t}"),
            Residual::Block(p) => format!("block:{}", p.display()),
        }
    }

    pub fn norm(&self) -> Result<NormSpec, CliError> {
        Ok(match self {
            Residual::Vertical => NormSpec::Vertical,
            Residual::LTau(t) => NormSpec::LTau(*t),
            Residual::Block(p) => NormSpec::Block(read_block_norm(p)?),
        })
    }
}

/// A named criterion with its optional parameter, sized on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionSpec {
    pub preset: Preset,
}

impl CriterionSpec {
    pub fn parse(name: &str, param: Option<f64>) -> Result<Self, CliError> {
        Ok(Self { preset: Preset::parse(name, param)? })
    }

    pub fn name(&self) -> &'static str {
        self.preset.name()
    }

    pub fn param(&self) -> Option<f64> {
        self.preset.param()
    }

    pub fn build(&self, n: usize) -> Result<Criterion, CliError> {
        Ok(self.preset.instantiate(n)?)
    }
}
