//! Input schemas. Every file is TOML or JSON; unknown keys are rejected.
//! Defaults are filled in before the input is echoed, so the echo is the
//! effective input.

use std::path::Path;

use epsk1_core::k1::{LevelSign, LogForm};
use epsk1_core::reciprocity::{TowerSpec, UnitNormalization};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// A reciprocity datum: residue data, target group, and either explicit
/// images of the standard unit generators and of π, or nothing (a random
/// surjective datum is drawn from `--seed`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumInput {
    pub l: u64,
    pub d: u32,
    pub a: u32,
    pub p: u64,
    pub target: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_images: Option<Vec<Vec<u64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_image: Option<Vec<u64>>,
}

/// ψ(x) = ψ_std(unit_twist · π^level · x); unit_twist as coefficients in the residue ring basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiInput {
    #[serde(default)]
    pub level: i64,
    #[serde(default = "one")]
    pub unit_twist: Vec<i64>,
}

impl Default for PsiInput {
    fn default() -> Self {
        PsiInput { level: 0, unit_twist: one() }
    }
}

fn one() -> Vec<i64> {
    vec![1]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussSumInput {
    pub datum: DatumInput,
    #[serde(default)]
    pub psi: PsiInput,
    /// character exponent vectors; all characters when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characters: Option<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsAbelianInput {
    pub datum: DatumInput,
    #[serde(default)]
    pub psi: PsiInput,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertySuiteInput {
    pub datum: DatumInput,
    #[serde(default)]
    pub psi: PsiInput,
    #[serde(default = "six")]
    pub twists: usize,
    #[serde(default = "ten")]
    pub c_trials: usize,
}

fn six() -> usize {
    6
}

fn ten() -> usize {
    10
}

fn twenty() -> usize {
    20
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationChoice {
    Classical,
    Reversed,
    Both,
}

impl NormalizationChoice {
    pub fn expand(self) -> Vec<UnitNormalization> {
        match self {
            NormalizationChoice::Classical => vec![UnitNormalization::Classical],
            NormalizationChoice::Reversed => vec![UnitNormalization::Reversed],
            NormalizationChoice::Both => vec![UnitNormalization::Classical, UnitNormalization::Reversed],
        }
    }
}

fn both() -> NormalizationChoice {
    NormalizationChoice::Both
}

fn classical() -> NormalizationChoice {
    NormalizationChoice::Classical
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerVerifyInput {
    pub tower: TowerSpec,
    #[serde(default = "both")]
    pub normalization: NormalizationChoice,
    /// n(ψ) of the standard additive character on the base field
    #[serde(default)]
    pub psi_level: i64,
    #[serde(default)]
    pub sign: LevelSign,
}

/// The metabelian group (Z/p^s ⋊ Z/p^n) × Z/m_delta with action exponent e.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupInput {
    pub p: u64,
    pub s: u32,
    pub n: u32,
    pub e: u64,
    #[serde(default = "one_u64")]
    pub m_delta: u64,
}

fn one_u64() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaCheckInput {
    pub group: GroupInput,
    /// the residue characteristic, fixing the coefficient ring
    pub l: u64,
    /// explicit elements as lists of [class index, integer coefficient]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<Vec<(usize, i64)>>>,
    /// number of random class elements drawn from `--seed` when `elements` is absent
    #[serde(default = "twenty")]
    pub random: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogSource {
    /// the epsilon tuple of the tower
    Epsilon,
    /// θ-images of random certified units of J[G], drawn from `--seed`
    Random,
}

fn epsilon_source() -> LogSource {
    LogSource::Epsilon
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralLogInput {
    pub tower: TowerSpec,
    #[serde(default = "classical")]
    pub normalization: NormalizationChoice,
    #[serde(default)]
    pub psi_level: i64,
    #[serde(default)]
    pub sign: LevelSign,
    #[serde(default = "epsilon_source")]
    pub source: LogSource,
    /// number of random tuples for `source = "random"`
    #[serde(default = "twenty")]
    pub count: usize,
    #[serde(default = "ratio")]
    pub form: LogForm,
}

fn ratio() -> LogForm {
    LogForm::Ratio
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Toml,
    Json,
}

/// Read and validate an input file. The format follows the extension; other
/// extensions are tried as JSON, then TOML.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<(T, Format), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Schema(format!("cannot read {}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("toml") => parse_toml(&text).map(|t| (t, Format::Toml)),
        Some("json") => parse_json(&text).map(|t| (t, Format::Json)),
        _ => parse_json(&text).map(|t| (t, Format::Json)).or_else(|json_err| {
            parse_toml(&text).map(|t| (t, Format::Toml)).map_err(|toml_err| {
                Failure::Schema(format!("input is neither valid JSON ({json_err}) nor TOML ({toml_err})"))
            })
        }),
    }
}

fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T, Failure> {
    toml::from_str(text).map_err(|e| Failure::Schema(format!("TOML schema violation: {}", e.message())))
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Schema(format!("JSON schema violation: {e}")))
}
