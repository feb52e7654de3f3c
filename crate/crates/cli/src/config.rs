//! Run configuration: one section per subcommand, read from a TOML file (or the
//! `config` key of an earlier JSON report) and overridden field by field by flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use borp_core::besov::exponent_serde;
use borp_core::field::{FieldSpec, Profile};
use borp_core::path_gen::{Expression, FbmMethod};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// An integrability exponent that may be infinite (`inf`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl FromStr for Exponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        exponent_serde::parse_exponent(s).map(Exponent)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        exponent_serde::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        exponent_serde::deserialize(d).map(Exponent)
    }
}

/// Parses a snake_case enum through its serde representation.
fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_expression(s: &str) -> Result<Expression, String> {
    serde_enum(s)
}

fn parse_fbm_method(s: &str) -> Result<FbmMethod, String> {
    serde_enum(s)
}

/// `zero`, a profile name (`sin`, `cos`, `tanh`, `saturation`) or inline JSON.
pub fn parse_field(s: &str) -> Result<FieldSpec, String> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| e.to_string());
    }
    if s == "zero" {
        return Ok(FieldSpec::Zero);
    }
    serde_enum::<Profile>(s)
        .map(|profile| FieldSpec::Componentwise { profile, matrix: None })
        .map_err(|_| format!("unknown field {s:?}; use zero, sin, cos, tanh, saturation or a JSON object"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DriverKindName {
    Brownian,
    Fbm,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LiftMode {
    Stratonovich,
    Ito,
    Leftpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Picard,
    Onestep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    Flow,
}

/// Declares a config section whose fields are all optional, usable both as
/// clap arguments and as a TOML table, plus `resolve` to layer flags over the
/// file over the listed defaults.
macro_rules! section {
    ($(#[$m:meta])* $name:ident { $( $(#[$fm:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$fm])*
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            pub fn resolve(self, file: Option<Self>) -> Self {
                let file = file.unwrap_or_default();
                $name { $( $field: self.$field.or(file.$field).or_else(|| $default), )* }
            }
        }
    };
}

section! {
    SimulateConfig {
        #[arg(long, value_enum)]
        kind: DriverKindName = Some(DriverKindName::Brownian),
        /// Path dimension.
        #[arg(long)]
        n: usize = Some(1),
        #[arg(long)]
        steps: usize = Some(1024),
        #[arg(long)]
        horizon: f64 = Some(1.0),
        #[arg(long)]
        seed: u64 = Some(0),
        /// Hurst index, required for `--kind fbm`.
        #[arg(long)]
        hurst: f64 = None,
        /// linear, quadratic or sine, for `--kind deterministic`.
        #[arg(long, value_parser = parse_expression)]
        expression: Expression = None,
        /// circulant or cholesky.
        #[arg(long, value_parser = parse_fbm_method)]
        method: FbmMethod = Some(FbmMethod::Circulant),
        #[arg(long)]
        output: PathBuf = Some(PathBuf::from("path.csv")),
    }
}

section! {
    NormConfig {
        #[arg(long)]
        input: PathBuf = None,
        #[arg(long)]
        alpha: f64 = Some(0.5),
        #[arg(long)]
        beta: f64 = Some(2.0),
        #[arg(long)]
        q: Exponent = Some(Exponent(f64::INFINITY)),
        /// Also evaluate the integral form by quadrature.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        quadrature: bool = Some(false),
        #[arg(long)]
        report: PathBuf = Some(PathBuf::from("norm.json")),
    }
}

section! {
    LiftConfig {
        #[arg(long)]
        input: PathBuf = None,
        /// Defaults to stratonovich for scalar paths and leftpoint otherwise.
        #[arg(long, value_enum)]
        mode: LiftMode = None,
        #[arg(long)]
        alpha: f64 = Some(0.45),
        #[arg(long)]
        beta: f64 = Some(2.0),
        #[arg(long)]
        q: Exponent = Some(Exponent(f64::INFINITY)),
        /// Write the second level as `i,j,e1,..` rows (quadratic in the grid size).
        #[arg(long)]
        second_level: PathBuf = None,
        #[arg(long)]
        report: PathBuf = Some(PathBuf::from("lift.json")),
    }
}

section! {
    IntegrateConfig {
        #[arg(long)]
        input: PathBuf = None,
        #[arg(long, value_enum)]
        mode: LiftMode = None,
        /// Integrand `f(X)`; without it the driver is integrated against itself.
        #[arg(long, value_parser = parse_field)]
        integrand: FieldSpec = None,
        #[arg(long)]
        tol: f64 = Some(borp_core::sewing::SEWING_TOL),
        #[arg(long)]
        output: PathBuf = Some(PathBuf::from("integral.csv")),
        #[arg(long)]
        report: PathBuf = Some(PathBuf::from("integrate.json")),
    }
}

section! {
    SolveConfig {
        /// Driver CSV; without it a driver is simulated from the flags below.
        #[arg(long)]
        input: PathBuf = None,
        /// Driver dimension.
        #[arg(long)]
        n: usize = Some(1),
        #[arg(long)]
        steps: usize = Some(4096),
        #[arg(long)]
        horizon: f64 = Some(1.0),
        #[arg(long)]
        seed: u64 = Some(0),
        /// Simulate fractional Brownian motion with this Hurst index.
        #[arg(long)]
        hurst: f64 = None,
        #[arg(long, value_enum)]
        mode: LiftMode = None,
        /// zero, sin, cos, tanh, saturation, or a JSON field object.
        #[arg(long, value_parser = parse_field)]
        field: FieldSpec = Some(FieldSpec::Componentwise { profile: Profile::Sin, matrix: None }),
        /// Initial value, comma separated; its length is the state dimension.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y0: Vec<f64> = Some(vec![std::f64::consts::FRAC_PI_2]),
        #[arg(long)]
        alpha: f64 = Some(0.45),
        #[arg(long)]
        beta: f64 = Some(2.0),
        #[arg(long)]
        q: Exponent = Some(Exponent(f64::INFINITY)),
        #[arg(long, value_enum)]
        method: SolveMethod = Some(SolveMethod::Picard),
        #[arg(long)]
        tol: f64 = Some(1e-10),
        #[arg(long)]
        max_iter: usize = Some(200),
        #[arg(long)]
        initial_fraction: f64 = Some(1.0),
        #[arg(long)]
        max_halvings: u32 = Some(10),
        /// Compare against a closed-form solution.
        #[arg(long, value_enum)]
        oracle: Oracle = None,
        #[arg(long)]
        output: PathBuf = Some(PathBuf::from("solution.csv")),
        #[arg(long)]
        report: PathBuf = Some(PathBuf::from("solve.json")),
    }
}

section! {
    ProfileConfig {
        /// Number of seeds, starting at `--seed-start`.
        #[arg(long)]
        seeds: u64 = Some(20),
        #[arg(long)]
        seed_start: u64 = Some(0),
        #[arg(long)]
        min_level: u32 = Some(10),
        #[arg(long)]
        max_level: u32 = Some(14),
        #[arg(long)]
        horizon: f64 = Some(1.0),
        #[arg(long)]
        alpha: f64 = Some(0.5),
        #[arg(long)]
        beta: f64 = Some(2.0),
        #[arg(long, value_delimiter = ',')]
        qs: Vec<Exponent> = Some(vec![Exponent(1.0), Exponent(2.0), Exponent(f64::INFINITY)]),
        #[arg(long)]
        csv: PathBuf = Some(PathBuf::from("profile.csv")),
        #[arg(long)]
        report: PathBuf = Some(PathBuf::from("profile.json")),
    }
}

/// Contents of a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrate: Option<IntegrateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
}

impl RunConfig {
    /// Reads TOML, or the embedded `config` of a JSON report.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct Report {
                config: RunConfig,
            }
            let r: Report = serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Ok(r.config)
        } else {
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        }
    }
}

/// Flag, then `BORP_OUTPUT_DIR`, then the config file, then the working directory.
pub fn output_dir(flag: Option<PathBuf>, file: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("BORP_OUTPUT_DIR").map(PathBuf::from))
        .or(file)
        .unwrap_or_else(|| PathBuf::from("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let file = NormConfig { alpha: Some(0.3), beta: Some(1.0), ..Default::default() };
        let flags = NormConfig { alpha: Some(0.7), ..Default::default() };
        let r = flags.resolve(Some(file));
        assert_eq!(r.alpha, Some(0.7));
        assert_eq!(r.beta, Some(1.0));
        assert_eq!(r.q, Some(Exponent(f64::INFINITY)));
        assert_eq!(r.input, None);
    }

    #[test]
    fn toml_sections_parse() {
        let cfg: RunConfig = toml::from_str(
            r#"
            output_dir = "out"
            [profile]
            seeds = 3
            qs = [1.0, "inf"]
            [solve]
            y0 = [0.5]
            field = { type = "componentwise", profile = "tanh" }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.profile.unwrap().qs, Some(vec![Exponent(1.0), Exponent(f64::INFINITY)]));
        let solve = cfg.solve.unwrap();
        assert_eq!(solve.field, Some(FieldSpec::Componentwise { profile: Profile::Tanh, matrix: None }));
        assert!(toml::from_str::<RunConfig>("[norm]\nalhpa = 1.0").is_err());
    }

    #[test]
    fn field_shorthands() {
        assert_eq!(parse_field("zero").unwrap(), FieldSpec::Zero);
        assert!(matches!(parse_field("sin").unwrap(), FieldSpec::Componentwise { profile: Profile::Sin, .. }));
        assert!(matches!(parse_field(r#"{"type":"constant","value":[2.0]}"#).unwrap(), FieldSpec::Constant { .. }));
        assert!(parse_field("exp").is_err());
    }
}
