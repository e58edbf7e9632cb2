//! Run configuration: strict JSON parsing, defaults and validation.

use std::collections::BTreeMap;
use std::path::Path;

use bridgetail_core::kernel::RawKernel;
use bridgetail_core::models::{BathroomSpec, JacksonSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Jackson,
    Bathroom,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacksonBlock {
    pub lam1: f64,
    pub lam2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu1_star: f64,
    pub r12: f64,
    pub r21: f64,
}

impl From<JacksonBlock> for JacksonSpec {
    fn from(b: JacksonBlock) -> Self {
        JacksonSpec {
            lam1: b.lam1,
            lam2: b.lam2,
            mu1: b.mu1,
            mu2: b.mu2,
            mu1_star: b.mu1_star,
            r12: b.r12,
            r21: b.r21,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathroomBlock {
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl From<BathroomBlock> for BathroomSpec {
    fn from(b: BathroomBlock) -> Self {
        BathroomSpec {
            nu: b.nu,
            alpha: b.alpha,
            beta: b.beta,
        }
    }
}

/// Exponent string to weight, e.g. `{"-1": 0.25, "0": 0.5}`.
pub type PolyText = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericBlock {
    #[serde(rename = "P", default)]
    pub up: PolyText,
    #[serde(rename = "Q", default)]
    pub down: PolyText,
    #[serde(rename = "S", default)]
    pub stay: PolyText,
    #[serde(rename = "P0", default)]
    pub up0: PolyText,
    #[serde(rename = "S0", default)]
    pub stay0: PolyText,
    #[serde(default)]
    pub kappa: f64,
    /// The kernel is already the twisted kernel `I` at its bridge point.
    #[serde(default)]
    pub twisted: bool,
}

fn parse_poly(name: &str, text: &PolyText) -> Result<Vec<(i32, f64)>, CliError> {
    let mut out = Vec::with_capacity(text.len());
    for (key, &w) in text {
        let e: i32 = key.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "generic.{name}: exponent \"{key}\" is not a decimal integer"
            ))
        })?;
        if !w.is_finite() {
            return Err(CliError::Config(format!(
                "generic.{name}: weight at exponent {e} is not finite"
            )));
        }
        if w < 0.0 {
            return Err(CliError::Config(format!(
                "generic.{name}: negative weight {w} at exponent {e}"
            )));
        }
        out.push((e, w));
    }
    Ok(out)
}

impl GenericBlock {
    pub fn raw(&self) -> Result<RawKernel, CliError> {
        if !self.kappa.is_finite() || self.kappa < 0.0 {
            return Err(CliError::Config(format!(
                "generic.kappa = {} must be nonnegative",
                self.kappa
            )));
        }
        Ok(RawKernel {
            up: parse_poly("P", &self.up)?,
            down: parse_poly("Q", &self.down)?,
            stay: parse_poly("S", &self.stay)?,
            up0: parse_poly("P0", &self.up0)?,
            stay0: parse_poly("S0", &self.stay0)?,
            kappa: self.kappa,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsText {
    tol: Option<f64>,
    trunc_x: Option<usize>,
    trunc_y: Option<usize>,
    lmax: Option<usize>,
    ymax: Option<usize>,
    seed: Option<u64>,
    replications: Option<u64>,
    window: Option<[usize; 2]>,
    horizon_factor: Option<f64>,
    escape_level: Option<i64>,
    mc_horizon: Option<u64>,
    profile_level: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigText {
    model: Option<ModelName>,
    jackson: Option<JacksonBlock>,
    bathroom: Option<BathroomBlock>,
    generic: Option<GenericBlock>,
    #[serde(default)]
    options: OptionsText,
}

/// Options after defaults. Windows are derived from `lmax` and `trunc_x`
/// unless `window` is set, in which case it applies to both fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Options {
    pub tol: f64,
    pub trunc_x: usize,
    pub trunc_y: usize,
    pub lmax: usize,
    pub ymax: usize,
    pub seed: u64,
    pub replications: u64,
    pub window: Option<[usize; 2]>,
    pub horizon_factor: f64,
    pub escape_level: i64,
    pub mc_horizon: u64,
    pub profile_level: Option<usize>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            trunc_x: 320,
            trunc_y: 60,
            lmax: 400,
            ymax: 200,
            seed: 42,
            replications: 100_000,
            window: None,
            horizon_factor: 4.0,
            escape_level: 200,
            mc_horizon: 1_000_000,
            profile_level: None,
        }
    }
}

impl Options {
    /// Fit window for the Green's series.
    pub fn greens_window(&self) -> (usize, usize) {
        match self.window {
            Some([lo, hi]) => (lo, hi),
            None => (self.lmax / 4, 3 * self.lmax / 4),
        }
    }

    /// Fit window for the truncated stationary solve. The default ends a
    /// quarter of the grid away from the right edge.
    pub fn steady_window(&self) -> (usize, usize) {
        match self.window {
            Some([lo, hi]) => (lo, hi),
            None => (self.trunc_x / 4, 3 * self.trunc_x / 4),
        }
    }

    /// Level at which the phase profile of the stationary solve is compared.
    pub fn profile_level(&self) -> usize {
        self.profile_level
            .unwrap_or_else(|| 200.min(4 * self.trunc_x / 5))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str| Err(CliError::Config(format!("options.{what} must be positive")));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol");
        }
        if !(self.horizon_factor > 0.0 && self.horizon_factor.is_finite()) {
            return bad("horizon_factor");
        }
        for (name, v) in [
            ("trunc_x", self.trunc_x as u64),
            ("trunc_y", self.trunc_y as u64),
            ("lmax", self.lmax as u64),
            ("ymax", self.ymax as u64),
            ("replications", self.replications),
            ("mc_horizon", self.mc_horizon),
        ] {
            if v == 0 {
                return bad(name);
            }
        }
        if self.escape_level <= 0 {
            return bad("escape_level");
        }
        if let Some([lo, hi]) = self.window {
            if lo == 0 || hi < lo + 19 {
                return Err(CliError::Config(
                    "options.window must be [lo, hi] with lo >= 1 and at least 20 levels".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Jackson(JacksonBlock),
    Bathroom(BathroomBlock),
    Generic(GenericBlock),
}

impl Model {
    pub fn name(&self) -> ModelName {
        match self {
            Model::Jackson(_) => ModelName::Jackson,
            Model::Bathroom(_) => ModelName::Bathroom,
            Model::Generic(_) => ModelName::Generic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: Model,
    pub options: Options,
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: ConfigText = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{path}`: {}", e.into_inner()))
        })?;
        let mut blocks = Vec::new();
        if let Some(j) = raw.jackson {
            blocks.push(Model::Jackson(j));
        }
        if let Some(b) = raw.bathroom {
            blocks.push(Model::Bathroom(b));
        }
        if let Some(g) = raw.generic {
            blocks.push(Model::Generic(g));
        }
        if blocks.len() != 1 {
            return Err(CliError::Config(format!(
                "exactly one of jackson, bathroom, generic must be present (found {})",
                blocks.len()
            )));
        }
        let model = blocks.pop().unwrap();
        if let Some(name) = raw.model {
            if name != model.name() {
                return Err(CliError::Config(format!(
                    "model is {name:?} but the block present is {:?}",
                    model.name()
                )));
            }
        }
        if let Model::Generic(g) = &model {
            g.raw()?;
        }
        let d = Options::default();
        let o = raw.options;
        let options = Options {
            tol: o.tol.unwrap_or(d.tol),
            trunc_x: o.trunc_x.unwrap_or(d.trunc_x),
            trunc_y: o.trunc_y.unwrap_or(d.trunc_y),
            lmax: o.lmax.unwrap_or(d.lmax),
            ymax: o.ymax.unwrap_or(d.ymax),
            seed: o.seed.unwrap_or(d.seed),
            replications: o.replications.unwrap_or(d.replications),
            window: o.window,
            horizon_factor: o.horizon_factor.unwrap_or(d.horizon_factor),
            escape_level: o.escape_level.unwrap_or(d.escape_level),
            mc_horizon: o.mc_horizon.unwrap_or(d.mc_horizon),
            profile_level: o.profile_level,
        };
        options.validate()?;
        Ok(Self { model, options })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}
