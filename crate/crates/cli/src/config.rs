//! Strict JSON configuration: every run is described by one file, unknown
//! keys are rejected, and model violations are separated from malformed
//! input so the exit code tells the caller which side was wrong.

use std::collections::BTreeMap;
use std::path::Path;

use gyrostat_core::integrate::Method;
use gyrostat_core::models::{Family, ModelSpec};
use gyrostat_core::phase::{ModelKind, PhasePoint, Representation};
use gyrostat_core::skew::SkewMatrix;
use nalgebra::DVector;
use serde::Deserialize;

/// Failure modes with distinct exit codes: malformed input exits 2,
/// a well-formed but inconsistent model exits 3.
#[derive(Debug)]
pub enum CliError {
    Schema(String),
    Model(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Model(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Schema(m) | CliError::Model(m) => m,
        }
    }
}

/// A skew entry list `[[i, j, value], ...]` (1-based planes) or a plain
/// vector `[v1, ..., vn]`, depending on the family's phase space.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ArrayInit {
    Triples(Vec<(usize, usize, f64)>),
    Reals(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub momentum: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub field: Option<ArrayInit>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub family: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, rename = "J")]
    pub mass_diagonal: Option<Vec<f64>>,
    #[serde(default, rename = "I")]
    pub principal_moments: Option<Vec<f64>>,
    #[serde(default)]
    pub chi: Option<ArrayInit>,
    #[serde(default, rename = "L")]
    pub rotor: Option<ArrayInit>,
    #[serde(default)]
    pub representation: Option<String>,
    #[serde(default)]
    pub init: Option<InitSection>,
    #[serde(default)]
    pub integrator: Option<String>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default, rename = "T")]
    pub span: Option<f64>,
    #[serde(default)]
    pub m_transformed: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Option<BTreeMap<String, f64>>,
}

pub fn load(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

fn skew_from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<SkewMatrix, CliError> {
    let mut shifted = Vec::with_capacity(triples.len());
    for &(i, j, v) in triples {
        if i == 0 || j == 0 || i > n || j > n {
            return Err(CliError::Schema(format!(
                "plane [{i},{j}] is outside 1..={n}"
            )));
        }
        shifted.push((i - 1, j - 1, v));
    }
    SkewMatrix::from_triples(n, &shifted).map_err(|e| CliError::Schema(e.to_string()))
}

fn reals(v: &[f64], n: usize, what: &str) -> Result<DVector<f64>, CliError> {
    if v.len() != n {
        return Err(CliError::Schema(format!(
            "{what} needs {n} entries, got {}",
            v.len()
        )));
    }
    Ok(DVector::from_column_slice(v))
}

fn as_triples<'a>(
    a: &'a ArrayInit,
    what: &str,
) -> Result<&'a [(usize, usize, f64)], CliError> {
    match a {
        ArrayInit::Triples(t) => Ok(t),
        ArrayInit::Reals(r) if r.is_empty() => Ok(&[]),
        ArrayInit::Reals(_) => Err(CliError::Schema(format!(
            "{what} must be a list of [i, j, value] planes"
        ))),
    }
}

fn as_reals<'a>(a: &'a ArrayInit, what: &str) -> Result<&'a [f64], CliError> {
    match a {
        ArrayInit::Reals(r) => Ok(r),
        ArrayInit::Triples(t) if t.is_empty() => Ok(&[]),
        ArrayInit::Triples(_) => Err(CliError::Schema(format!(
            "{what} must be a flat list of reals"
        ))),
    }
}

fn alpha_pair(cfg: &Config) -> Result<(f64, f64), CliError> {
    match cfg.alpha.as_deref() {
        Some([a1, a2]) => Ok((*a1, *a2)),
        Some(other) => Err(CliError::Schema(format!(
            "alpha needs exactly two entries, got {}",
            other.len()
        ))),
        None => Err(CliError::Schema("alpha is required for this family".into())),
    }
}

fn alpha_single(cfg: &Config) -> Result<f64, CliError> {
    match cfg.alpha.as_deref() {
        Some([a1]) => Ok(*a1),
        Some(other) => Err(CliError::Schema(format!(
            "alpha needs exactly one entry for this family, got {}",
            other.len()
        ))),
        None => Err(CliError::Schema("alpha is required for this family".into())),
    }
}

fn required_n(cfg: &Config) -> Result<usize, CliError> {
    cfg.n
        .ok_or_else(|| CliError::Schema("n is required for this family".into()))
}

fn field_or_err<'a>(f: &'a Option<ArrayInit>, what: &str) -> Result<&'a ArrayInit, CliError> {
    f.as_ref()
        .ok_or_else(|| CliError::Schema(format!("{what} is required for this family")))
}

pub fn representation(cfg: &Config) -> Result<Representation, CliError> {
    match cfg.representation.as_deref() {
        None | Some("magnetic") => Ok(Representation::Magnetic),
        Some("standard") => Ok(Representation::Standard),
        Some(other) => Err(CliError::Schema(format!(
            "representation must be \"magnetic\" or \"standard\", got \"{other}\""
        ))),
    }
}

pub fn integrator(cfg: &Config) -> Result<Method, CliError> {
    match cfg.integrator.as_deref() {
        None => Ok(Method::Rk4),
        Some(tag) => Method::from_tag(tag).map_err(|e| CliError::Schema(e.to_string())),
    }
}

/// Step and span for trajectory commands; both are gated here so a bad
/// window never reaches the integrator.
pub fn window(cfg: &Config) -> Result<(f64, f64), CliError> {
    let dt = cfg
        .dt
        .ok_or_else(|| CliError::Schema("dt is required for this command".into()))?;
    let span = cfg
        .span
        .ok_or_else(|| CliError::Schema("T is required for this command".into()))?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CliError::Schema(format!("dt must be positive, got {dt}")));
    }
    if !(span >= dt) || !span.is_finite() {
        return Err(CliError::Schema(format!(
            "T must be at least dt, got T={span} dt={dt}"
        )));
    }
    Ok((dt, span))
}

/// Builds and validates the model. Constructor rejections and leftover
/// validation findings are model violations, not schema errors.
pub fn build_spec(cfg: &Config) -> Result<ModelSpec, CliError> {
    let family =
        Family::from_tag(&cfg.family).map_err(|e| CliError::Schema(e.to_string()))?;
    let repr = representation(cfg)?;
    let spec = match family {
        Family::LagrangeSoSo => {
            let n = required_n(cfg)?;
            let (a1, a2) = alpha_pair(cfg)?;
            let chi = skew_from_triples(n, as_triples(field_or_err(&cfg.chi, "chi")?, "chi")?)?;
            let rotor =
                skew_from_triples(n, as_triples(field_or_err(&cfg.rotor, "L")?, "L")?)?;
            ModelSpec::lagrange_so_so(n, a1, a2, chi, rotor, repr)
        }
        Family::Bitop => {
            if let Some(n) = cfg.n {
                if n != 4 {
                    return Err(CliError::Model(format!("bitop requires n=4, got n={n}")));
                }
            }
            let (a1, a2) = alpha_pair(cfg)?;
            let chi = skew_from_triples(4, as_triples(field_or_err(&cfg.chi, "chi")?, "chi")?)?;
            let rotor =
                skew_from_triples(4, as_triples(field_or_err(&cfg.rotor, "L")?, "L")?)?;
            ModelSpec::bitop(a1, a2, chi, rotor, repr)
        }
        Family::TotallySymmetric => {
            let n = required_n(cfg)?;
            let a1 = alpha_single(cfg)?;
            let chi = skew_from_triples(n, as_triples(field_or_err(&cfg.chi, "chi")?, "chi")?)?;
            let rotor =
                skew_from_triples(n, as_triples(field_or_err(&cfg.rotor, "L")?, "L")?)?;
            ModelSpec::totally_symmetric(n, a1, chi, rotor, repr)
        }
        Family::BelyaevEN => {
            let n = required_n(cfg)?;
            let (a1, a2) = alpha_pair(cfg)?;
            let chi = reals(as_reals(field_or_err(&cfg.chi, "chi")?, "chi")?, n, "chi")?;
            let rotor =
                skew_from_triples(n, as_triples(field_or_err(&cfg.rotor, "L")?, "L")?)?;
            ModelSpec::belyaev_e_n(n, a1, a2, chi, rotor, repr)
        }
        Family::ManakovGyro => {
            let j = cfg
                .mass_diagonal
                .as_deref()
                .ok_or_else(|| CliError::Schema("J is required for manakov_gyro".into()))?;
            if let Some(n) = cfg.n {
                if n != j.len() {
                    return Err(CliError::Schema(format!(
                        "n={n} disagrees with J of length {}",
                        j.len()
                    )));
                }
            }
            let n = j.len();
            let rotor =
                skew_from_triples(n, as_triples(field_or_err(&cfg.rotor, "L")?, "L")?)?;
            ModelSpec::manakov_gyro(DVector::from_column_slice(j), rotor, repr)
        }
        Family::Classical3Euler | Family::Classical3Lagrange | Family::Classical3Kowalevski => {
            if let Some(n) = cfg.n {
                if n != 3 {
                    return Err(CliError::Model(format!(
                        "{} requires n=3, got n={n}",
                        family.tag()
                    )));
                }
            }
            let inertia = cfg
                .principal_moments
                .as_deref()
                .ok_or_else(|| CliError::Schema("I is required for classical3 families".into()))?;
            let chi = match &cfg.chi {
                Some(a) => reals(as_reals(a, "chi")?, 3, "chi")?,
                None => DVector::zeros(3),
            };
            let rotor = reals(as_reals(field_or_err(&cfg.rotor, "L")?, "L")?, 3, "L")?;
            ModelSpec::classical3(family, reals(inertia, 3, "I")?, chi, rotor, repr)
        }
    }
    .map_err(|e| CliError::Model(e.to_string()))?;
    let findings = spec.validate();
    if !findings.is_empty() {
        return Err(CliError::Model(findings.join("; ")));
    }
    Ok(spec)
}

/// The configured initial state, in the spec's phase-space layout.
pub fn initial_point(cfg: &Config, spec: &ModelSpec) -> Result<PhasePoint, CliError> {
    let init = cfg
        .init
        .as_ref()
        .ok_or_else(|| CliError::Schema("init is required for this command".into()))?;
    let n = spec.n();
    let momentum = skew_from_triples(n, &init.momentum)?;
    let point = match spec.kind() {
        ModelKind::SoSo => {
            let field = skew_from_triples(
                n,
                as_triples(field_or_err(&init.field, "init.field")?, "init.field")?,
            )?;
            PhasePoint::so_so(momentum, field)
        }
        ModelKind::EN => {
            let field = reals(
                as_reals(field_or_err(&init.field, "init.field")?, "init.field")?,
                n,
                "init.field",
            )?;
            PhasePoint::e_n(momentum, field)
        }
        ModelKind::SoN => {
            if init.field.is_some() {
                return Err(CliError::Schema(
                    "init.field is not accepted on the free-body phase space".into(),
                ));
            }
            Ok(PhasePoint::so_n(momentum))
        }
    }
    .map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(point)
}
