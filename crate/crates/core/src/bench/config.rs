//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Result as CoreResult;
use crate::linalg::Matrix;
use crate::model::{Assumption, InclusionProblem};
use crate::outer::{Algorithm, OuterParams};
use crate::point::Point;
use crate::problems::{
    make_affine, make_matrix_game, make_ratio_game, make_rotation, RatioGameSpec, Regularizer, RotationSpec,
};

/// A configuration problem with the offending field, if known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: Some(field.into()),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        ConfigError {
            field: None,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.field {
            Some(field) => write!(f, "field `{field}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn default_lipschitz() -> f64 {
    1.0
}

fn default_dim() -> usize {
    2
}

/// Problem families, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Rotation {
        #[serde(default = "default_lipschitz")]
        lipschitz: f64,
        theta: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    MatrixGame {
        a: Matrix,
        #[serde(default)]
        solution: Option<Point>,
    },
    RatioGame {
        r: Matrix,
        s: Matrix,
        #[serde(default)]
        rho: Option<f64>,
        #[serde(default)]
        solution: Option<Point>,
        #[serde(default)]
        lipschitz: Option<f64>,
    },
    ShippedRatioGame,
    Affine {
        m: Matrix,
        b: Vec<f64>,
        #[serde(default = "no_regularizer")]
        regularizer: Regularizer,
        #[serde(default)]
        solution: Option<Point>,
    },
}

fn no_regularizer() -> Regularizer {
    Regularizer::None
}

/// A problem family plus options shared by every family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Map<String, Value>", into = "Map<String, Value>")]
pub struct ProblemConfig {
    pub spec: ProblemSpec,
    /// Attaches a Gaussian oracle with `E‖F̃ − F‖² = σ²`.
    pub noise_sigma: Option<f64>,
    /// Structure constant to test in `verify`; defaults to the problem's own.
    pub claimed_rho: Option<f64>,
    /// Replaces the assumption tag produced by the factory.
    pub assumption: Option<Assumption>,
}

const SHARED_KEYS: [&str; 3] = ["noise_sigma", "claimed_rho", "assumption"];

impl TryFrom<Map<String, Value>> for ProblemConfig {
    type Error = String;

    fn try_from(mut map: Map<String, Value>) -> std::result::Result<Self, String> {
        let mut take = |key: &str| map.remove(key).filter(|v| !v.is_null());
        let noise_sigma = take("noise_sigma")
            .map(|v| v.as_f64().ok_or("`noise_sigma` must be a number"))
            .transpose()?;
        let claimed_rho = take("claimed_rho")
            .map(|v| v.as_f64().ok_or("`claimed_rho` must be a number"))
            .transpose()?;
        let assumption = take("assumption")
            .map(|v| serde_json::from_value(v).map_err(|e| format!("`assumption`: {e}")))
            .transpose()?;
        let spec = serde_json::from_value(Value::Object(map)).map_err(|e| e.to_string())?;
        Ok(ProblemConfig {
            spec,
            noise_sigma,
            claimed_rho,
            assumption,
        })
    }
}

impl From<ProblemConfig> for Map<String, Value> {
    fn from(c: ProblemConfig) -> Self {
        let mut map = match serde_json::to_value(&c.spec) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        let vals = [
            c.noise_sigma.map(Value::from),
            c.claimed_rho.map(Value::from),
            c.assumption.and_then(|a| serde_json::to_value(a).ok()),
        ];
        for (key, val) in SHARED_KEYS.iter().zip(vals) {
            if let Some(v) = val {
                map.insert((*key).to_string(), v);
            }
        }
        map
    }
}

impl ProblemConfig {
    pub fn build(&self) -> CoreResult<InclusionProblem> {
        let mut p = match &self.spec {
            ProblemSpec::Rotation { lipschitz, theta, dim } => {
                make_rotation(&RotationSpec::new(*lipschitz, *theta, *dim))?
            }
            ProblemSpec::MatrixGame { a, solution } => make_matrix_game(a, solution.clone())?,
            ProblemSpec::RatioGame {
                r,
                s,
                rho,
                solution,
                lipschitz,
            } => make_ratio_game(&RatioGameSpec {
                r: r.clone(),
                s: s.clone(),
                rho: *rho,
                solution: solution.clone(),
                lipschitz: *lipschitz,
            })?,
            ProblemSpec::ShippedRatioGame => make_ratio_game(&RatioGameSpec::shipped())?,
            ProblemSpec::Affine {
                m,
                b,
                regularizer,
                solution,
            } => {
                let p = make_affine(m, b, regularizer)?;
                match solution {
                    Some(s) => p.with_known_solution(s.clone())?,
                    None => p,
                }
            }
        };
        if let Some(a) = self.assumption {
            p = p.with_assumption(a)?;
        }
        if let Some(sigma) = self.noise_sigma {
            p = p.with_noise(sigma)?;
        }
        Ok(p)
    }

    /// `ρ` to test: the claimed value, else the problem's own.
    pub fn rho_for(&self, p: &InclusionProblem) -> f64 {
        self.claimed_rho.unwrap_or_else(|| p.assumption.rho())
    }
}

/// Initial point: an explicit vector, the origin, or `e_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0Spec {
    Named(X0Name),
    Explicit(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum X0Name {
    Zeros,
    E1,
}

impl Default for X0Spec {
    fn default() -> Self {
        X0Spec::Named(X0Name::E1)
    }
}

impl X0Spec {
    pub fn build(&self, dim: usize) -> std::result::Result<Point, ConfigError> {
        match self {
            X0Spec::Named(X0Name::Zeros) => Ok(Point::zeros(dim)),
            X0Spec::Named(X0Name::E1) => Ok(Point::unit(dim, 0)),
            X0Spec::Explicit(v) => {
                if v.len() != dim {
                    return Err(ConfigError::field(
                        "x0",
                        format!("expected {dim} entries, got {}", v.len()),
                    ));
                }
                Point::new(v.clone()).map_err(|e| ConfigError::field("x0", e.to_string()))
            }
        }
    }
}

fn default_scale() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    crate::verify::DEFAULT_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub algorithm: Algorithm,
    pub eta: f64,
    pub rho: f64,
    pub k_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_scale")]
    pub budget_scale: f64,
    #[serde(default)]
    pub x0: X0Spec,
    /// Output prefix; files are `<output>.csv` (or `<output>.seed<n>.csv`)
    /// and `<output>.summary.json`.
    pub output: PathBuf,
    #[serde(default = "default_tol")]
    pub residual_tol: f64,
    /// Fill the `wall_ns` column (makes CSVs run-dependent).
    #[serde(default)]
    pub timing: bool,
}

/// Everything a run needs, validated.
#[derive(Debug)]
pub struct ValidatedRun {
    pub config: RunConfig,
    pub problem: InclusionProblem,
    pub x0: Point,
    pub seeds: Vec<u64>,
}

impl RunConfig {
    /// Parses JSON, reporting line and column on syntax or schema errors.
    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        serde_json::from_str(text)
            .map_err(|e| ConfigError::general(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn from_path(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn seed_list(&self) -> std::result::Result<Vec<u64>, ConfigError> {
        match (&self.seed, &self.seeds) {
            (Some(_), Some(_)) => Err(ConfigError::field("seeds", "give either `seed` or `seeds`, not both")),
            (Some(s), None) => Ok(vec![*s]),
            (None, Some(v)) if v.is_empty() => Err(ConfigError::field("seeds", "must not be empty")),
            (None, Some(v)) => {
                let mut sorted = v.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != v.len() {
                    return Err(ConfigError::field("seeds", "contains duplicates"));
                }
                Ok(v.clone())
            }
            (None, None) => Ok(vec![0]),
        }
    }

    pub fn params(&self, seed: u64) -> OuterParams {
        OuterParams::new(self.eta, self.rho, self.k_max)
            .with_seed(seed)
            .with_budget_scale(self.budget_scale)
    }

    /// Checks every precondition a solve would check, before any compute.
    pub fn validate(self) -> std::result::Result<ValidatedRun, ConfigError> {
        let seeds = self.seed_list()?;
        let problem = self
            .problem
            .build()
            .map_err(|e| ConfigError::field("problem", e.to_string()))?;
        self.params(seeds[0])
            .validate(problem.lipschitz())
            .map_err(|e| ConfigError::field(error_field(&e), e.to_string()))?;
        if !(self.residual_tol > 0.0 && self.residual_tol.is_finite()) {
            return Err(ConfigError::field("residual_tol", "must be positive"));
        }
        let admissible = match self.algorithm {
            Algorithm::Halpern | Algorithm::HalpernStoch => problem.assumption.implies_cohypomonotone(),
            Algorithm::Km | Algorithm::KmMlmc => problem.assumption.is_classified(),
        };
        if !admissible {
            return Err(ConfigError::field(
                "algorithm",
                format!(
                    "{} does not apply to a problem tagged {:?}",
                    self.algorithm, problem.assumption
                ),
            ));
        }
        if self.algorithm.is_stochastic() && !problem.f.has_sampler() {
            return Err(ConfigError::field(
                "problem.noise_sigma",
                format!("{} needs a stochastic oracle", self.algorithm),
            ));
        }
        let x0 = self.x0.build(problem.dim())?;
        Ok(ValidatedRun {
            config: self,
            problem,
            x0,
            seeds,
        })
    }
}

fn error_field(e: &crate::error::Error) -> String {
    match e {
        crate::error::Error::InvalidParameter { name, .. } => (*name).to_string(),
        crate::error::Error::StepTooLarge { .. } => "eta".to_string(),
        _ => "params".to_string(),
    }
}
