use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use semiclassical::geometry::{Observable, PrequantumForm, ReferenceLagrangian};
use semiclassical::oracle::Grid;
use semiclassical::semiclassics::HessianMode;
use semiclassical::star::{PolynomialObservable, StarError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Toml(#[from] toml::de::Error),

    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Spectrum,
    Overlap,
    Probability,
    Cyclic,
    StarCheck,
    GlueCheck,
    Sweep,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Spectrum => "spectrum",
            ScenarioKind::Overlap => "overlap",
            ScenarioKind::Probability => "probability",
            ScenarioKind::Cyclic => "cyclic",
            ScenarioKind::StarCheck => "star-check",
            ScenarioKind::GlueCheck => "glue-check",
            ScenarioKind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Position,
    Momentum,
    Linear { a: f64, b: f64 },
    HarmonicOscillator,
    DisplacedOscillator { omega: f64, center: f64 },
    Pendulum,
    Polynomial { expr: String },
}

impl SystemSpec {
    pub fn observable(&self) -> Result<Observable, StarError> {
        Ok(match self {
            SystemSpec::Position => Observable::position(),
            SystemSpec::Momentum => Observable::momentum(),
            SystemSpec::Linear { a, b } => Observable::linear(*a, *b),
            SystemSpec::HarmonicOscillator => Observable::harmonic_oscillator(),
            SystemSpec::DisplacedOscillator { omega, center } => Observable::displaced_oscillator(*omega, *center),
            SystemSpec::Pendulum => Observable::pendulum(),
            SystemSpec::Polynomial { expr } => expr.parse::<PolynomialObservable>()?.to_observable()?,
        })
    }
}

/// `p = λ(q)`: either a slope or polynomial coefficients `λ₀, λ₁, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub slope: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec {
            slope: Some(1.0),
            coefficients: None,
        }
    }
}

impl ReferenceSpec {
    pub fn lagrangian(&self) -> ReferenceLagrangian {
        match (&self.coefficients, self.slope) {
            (Some(c), _) => ReferenceLagrangian::polynomial(c.clone()),
            (None, Some(k)) => ReferenceLagrangian::slope(k),
            (None, None) => ReferenceLagrangian::slope(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        let g = Grid::default();
        GridSpec {
            half_width: g.half_width,
            points: g.points,
        }
    }
}

/// A fiber label: an explicit level, a Bohr–Sommerfeld index, or the
/// Bohr–Sommerfeld level nearest to an energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum LevelSelector {
    Value(f64),
    Index { n: u32 },
    Energy { energy: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub label: Option<String>,
    pub systems: Vec<String>,
    #[serde(default)]
    pub levels: Vec<LevelSelector>,
    /// Range searched for Bohr–Sommerfeld levels.
    #[serde(default = "default_level_range")]
    pub level_range: [f64; 2],
    /// Intermediate label range for compositions.
    pub interval: Option<[f64; 2]>,
    /// Positions as fractions of the fiber's half-extent in `q`.
    #[serde(default)]
    pub positions: Vec<f64>,
    /// Move each position to the nearest point where the two-term
    /// interference cross term vanishes.
    #[serde(default)]
    pub snap: bool,
    /// Highest level index for spectra.
    pub max_level: Option<u32>,
    /// Emits a pass/fail check on the case's worst error.
    pub tolerance: Option<f64>,
    /// Accepted range of the fitted error slope (sweeps).
    pub slope_range: Option<[f64; 2]>,
}

fn default_level_range() -> [f64; 2] {
    [0.0, 4.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarSpec {
    /// Polynomials in the monomial syntax.
    pub expressions: Vec<String>,
    #[serde(default = "default_star_order")]
    pub order: usize,
    /// Also compare `Op(f⋆g)` with `Op(f)Op(g)` on the grid.
    #[serde(default)]
    pub operators: bool,
}

fn default_star_order() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Dump traced fibers as `fiber_*.csv`.
    #[serde(default)]
    pub fibers: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianSpec {
    #[default]
    FiniteDifference,
    Bracket,
}

impl From<HessianSpec> for HessianMode {
    fn from(s: HessianSpec) -> Self {
        match s {
            HessianSpec::FiniteDifference => HessianMode::FiniteDifference,
            HessianSpec::Bracket => HessianMode::Bracket,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub name: Option<String>,
    pub h: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub systems: BTreeMap<String, SystemSpec>,
    #[serde(default)]
    pub reference: ReferenceSpec,
    /// Gauge function `f` of `α = p dq + df`, in the monomial syntax.
    pub gauge: Option<String>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub hessian: HessianSpec,
    #[serde(default)]
    pub cases: Vec<CaseSpec>,
    pub star: Option<StarSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn observable(&self, name: &str) -> Result<Observable, ConfigError> {
        let spec = self
            .systems
            .get(name)
            .ok_or_else(|| invalid(format!("systems.{name}"), "undefined system"))?;
        spec.observable()
            .map_err(|e| invalid(format!("systems.{name}"), e.to_string()))
    }

    pub fn prequantum_form(&self) -> Result<PrequantumForm, ConfigError> {
        match &self.gauge {
            None => Ok(PrequantumForm::canonical()),
            Some(expr) => {
                let f = expr
                    .parse::<PolynomialObservable>()
                    .and_then(|f| f.to_observable())
                    .map_err(|e| invalid("gauge", e.to_string()))?;
                Ok(PrequantumForm::with_gauge(f))
            }
        }
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.grid.half_width, self.grid.points).map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.h.is_empty() {
            return Err(invalid("h", "at least one value is required"));
        }
        for (i, h) in self.h.iter().enumerate() {
            if !(*h > 0.0 && h.is_finite()) {
                return Err(invalid(format!("h[{i}]"), format!("{h} is not positive")));
            }
        }
        if self.scenario == ScenarioKind::Sweep {
            if self.h.len() < 3 {
                return Err(invalid("h", "a sweep needs at least three values"));
            }
            if self.h.windows(2).any(|w| w[1] >= w[0]) {
                return Err(invalid("h", "sweep values must be strictly decreasing"));
            }
        }
        for name in self.systems.keys() {
            self.observable(name)?;
        }
        if self.reference.slope.is_some() && self.reference.coefficients.is_some() {
            return Err(invalid("reference", "give either slope or coefficients"));
        }
        self.prequantum_form()?;
        self.grid()?;

        let (min_sys, max_sys, levels_needed) = match self.scenario {
            ScenarioKind::Spectrum => (1, 1, false),
            ScenarioKind::Overlap | ScenarioKind::Probability | ScenarioKind::Sweep => (2, 2, true),
            ScenarioKind::Cyclic => (2, 4, true),
            ScenarioKind::GlueCheck => (3, 3, true),
            ScenarioKind::StarCheck => (0, 0, false),
        };
        if self.scenario == ScenarioKind::StarCheck {
            let star = self.star.as_ref().ok_or_else(|| invalid("star", "required for star-check"))?;
            for (i, e) in star.expressions.iter().enumerate() {
                e.parse::<PolynomialObservable>()
                    .map_err(|err| invalid(format!("star.expressions[{i}]"), err.to_string()))?;
            }
            if star.order > semiclassical::star::MAX_ORDER {
                return Err(invalid("star.order", format!("at most {}", semiclassical::star::MAX_ORDER)));
            }
        } else if self.cases.is_empty() {
            return Err(invalid("cases", "at least one case is required"));
        }
        for (i, case) in self.cases.iter().enumerate() {
            let field = |f: &str| format!("cases[{i}].{f}");
            let n = case.systems.len();
            if n < min_sys || n > max_sys {
                return Err(invalid(
                    field("systems"),
                    format!("{} takes {min_sys}..={max_sys} systems, got {n}", self.scenario.name()),
                ));
            }
            for s in &case.systems {
                if !self.systems.contains_key(s) {
                    return Err(invalid(field("systems"), format!("undefined system '{s}'")));
                }
            }
            let want_levels = match self.scenario {
                ScenarioKind::GlueCheck => 2,
                ScenarioKind::Sweep => case.levels.len().max(1),
                _ => n,
            };
            if levels_needed && case.levels.len() != want_levels {
                return Err(invalid(
                    field("levels"),
                    format!("expected {want_levels} levels, got {}", case.levels.len()),
                ));
            }
            if !(case.level_range[0] < case.level_range[1]) {
                return Err(invalid(field("level_range"), "empty range"));
            }
            if self.scenario == ScenarioKind::GlueCheck && case.interval.is_none() {
                return Err(invalid(field("interval"), "required for glue-check"));
            }
            if let Some([lo, hi]) = case.interval {
                if !(lo < hi) {
                    return Err(invalid(field("interval"), "empty interval"));
                }
            }
            if self.scenario == ScenarioKind::Sweep && case.positions.is_empty() {
                return Err(invalid(field("positions"), "a sweep needs positions"));
            }
        }
        Ok(())
    }
}
