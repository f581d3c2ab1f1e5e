//! Experiment configuration: one TOML file, every key optional, unknown
//! keys rejected. `--set section.key=value` edits the parsed document
//! before it is checked.

use std::path::Path;

use carleman_core::solver::Scheme;
use carleman_core::weights::{build_psi, PsiOptions, SubBox, Weight, WeightParams};
use carleman_core::GridSpec;
use serde::{Deserialize, Serialize};


use crate::LabError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    pub time: TimeConfig,
    pub weight: WeightConfig,
    pub domain: DomainConfig,
    pub coefficients: CoefficientConfig,
    pub verify_ops: VerifyOpsConfig,
    pub converge: ConvergeConfig,
    pub energy: EnergyConfig,
    pub carleman: CarlemanConfig,
    pub stability: StabilityConfig,
    pub reconstruct: ReconstructConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 20240917,
            workers: 0,
            time: TimeConfig::default(),
            weight: WeightConfig::default(),
            domain: DomainConfig::default(),
            coefficients: CoefficientConfig::default(),
            verify_ops: VerifyOpsConfig::default(),
            converge: ConvergeConfig::default(),
            energy: EnergyConfig::default(),
            carleman: CarlemanConfig::default(),
            stability: StabilityConfig::default(),
            reconstruct: ReconstructConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Trapezoidal,
    BackwardEuler,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Trapezoidal => Scheme::Trapezoidal,
            SchemeName::BackwardEuler => Scheme::BackwardEuler,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_final: f64,
    pub steps: usize,
    pub scheme: SchemeName,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t_final: 1.0, steps: 64, scheme: SchemeName::Trapezoidal }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WeightConfig {
    pub lambda: f64,
    /// `K = k_factor · sup psi`.
    pub k_factor: f64,
    pub tau: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub tau0: f64,
    /// Observation time; `T/2` when absent.
    pub vartheta: Option<f64>,
    pub psi_offset: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self { lambda: 2.0, k_factor: 1.1, tau: 3.0, delta: 0.4, epsilon: 0.5, tau0: 1.0, vartheta: None, psi_offset: 2.0 }
    }
}

/// Axis-aligned cube `center ± half_width` in every direction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CubeConfig {
    pub center: f64,
    pub half_width: f64,
}

impl CubeConfig {
    pub fn to_box(&self, dim: usize) -> Result<SubBox, LabError> {
        SubBox::cube(dim, self.center, self.half_width).map_err(|e| LabError::Schema(format!("domain: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub dim: usize,
    pub omega: CubeConfig,
    pub omega0: CubeConfig,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            omega: CubeConfig { center: 0.5, half_width: 0.2 },
            omega0: CubeConfig { center: 0.5, half_width: 0.1 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientConfig {
    pub drift: bool,
    pub evolving: bool,
    /// Sine modes per axis of random sources and initial data.
    pub modes: usize,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self { drift: true, evolving: true, modes: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyOpsConfig {
    pub cases: usize,
    pub dims: Vec<usize>,
    pub n_min: usize,
    pub n_max: usize,
    pub tol: f64,
}

impl Default for VerifyOpsConfig {
    fn default() -> Self {
        Self { cases: 200, dims: vec![1, 2, 3], n_min: 3, n_max: 20, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeConfig {
    pub spatial_grids: Vec<usize>,
    pub spatial_steps: usize,
    pub temporal_steps: Vec<usize>,
    pub temporal_n: usize,
    pub discrete_steps: usize,
    pub discrete_tol: f64,
    pub min_order: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            spatial_grids: vec![7, 15, 31],
            spatial_steps: 512,
            temporal_steps: vec![16, 32, 64],
            temporal_n: 15,
            discrete_steps: 4096,
            discrete_tol: 1e-9,
            min_order: 1.9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub runs: usize,
    pub dims: Vec<usize>,
    pub grids: Vec<usize>,
    /// Left ends `T0` of the checked intervals `[T0, T]`, as fractions of `T`.
    pub starts: Vec<f64>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self { runs: 100, dims: vec![1, 2], grids: vec![7, 11, 15], starts: vec![0.0, 0.25, 0.5] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CarlemanConfig {
    pub runs: usize,
    pub grids: Vec<usize>,
    pub powers: Vec<u32>,
    pub max_spread: f64,
    /// Runs per grid entering the feasibility map.
    pub feasibility_runs: usize,
    pub taus: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Time samples of the convexity check.
    pub samples: usize,
    /// `τ` values of the time-integral scaling fit.
    pub gauss_taus: Vec<f64>,
    pub slope_tol: f64,
}

impl Default for CarlemanConfig {
    fn default() -> Self {
        Self {
            runs: 50,
            grids: vec![15, 31],
            powers: vec![0, 1],
            max_spread: 2.0,
            feasibility_runs: 2,
            taus: vec![1.0, 2.0, 3.0, 5.0, 8.0],
            deltas: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            samples: 1000,
            gauss_taus: vec![50.0, 100.0, 200.0, 400.0, 800.0],
            slope_tol: 0.15,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub runs: usize,
    pub grids: Vec<usize>,
    pub max_spread: f64,
    /// Values of `1/h` for the error-term refinement.
    pub decay_grids: Vec<usize>,
    pub decay_runs: usize,
    /// `τ₁` and `ε₀` of the coupling `δ = τ₁ h / (T² ε₀)`.
    pub tau1: f64,
    pub eps0: f64,
    pub slope_tol: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            runs: 50,
            grids: vec![15, 31],
            max_spread: 2.0,
            decay_grids: vec![16, 32, 64],
            decay_runs: 1,
            tau1: 2.0,
            eps0: 0.5,
            slope_tol: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructConfig {
    pub n: usize,
    pub beta: f64,
    pub source_tol: f64,
    pub noise: f64,
    pub betas: Vec<f64>,
    pub coefficient_n: usize,
    pub coefficient_steps: usize,
    /// Mask threshold as a fraction of `max |y(ϑ)|`.
    pub mask_fraction: f64,
    pub coefficient_tol: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            n: 15,
            beta: 1e-12,
            source_tol: 5e-3,
            noise: 0.01,
            betas: vec![1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2],
            coefficient_n: 31,
            coefficient_steps: 1024,
            mask_fraction: 0.1,
            coefficient_tol: 1e-2,
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `path.to.key=value`; the value is read as a TOML literal and
/// falls back to a string.
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), LabError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| LabError::Schema(format!("override `{spec}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(LabError::Schema(format!("override `{spec}` has an empty key")));
    }
    let mut table = doc;
    for k in &keys[..keys.len() - 1] {
        let entry = table.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| LabError::Schema(format!("override `{spec}`: `{k}` is not a section")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl Config {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, LabError> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| LabError::Schema(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let merged = toml::to_string(&doc).map_err(|e| LabError::Schema(e.to_string()))?;
        let cfg: Config = toml::from_str(&merged).map_err(|e: toml::de::Error| LabError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, LabError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| LabError::Schema(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::parse(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |field: &str, why: &str| Err(LabError::Schema(format!("{field}: {why}")));
        let dims_ok = |d: &[usize]| !d.is_empty() && d.iter().all(|v| (1..=3).contains(v));
        if !(self.time.t_final > 0.0) {
            return bad("time.t_final", "must be positive");
        }
        if self.time.steps < 2 || !self.time.steps.is_multiple_of(2) {
            return bad("time.steps", "must be even and at least 2");
        }
        if !(1..=3).contains(&self.domain.dim) {
            return bad("domain.dim", "must be 1, 2 or 3");
        }
        for (name, c) in [("domain.omega", &self.domain.omega), ("domain.omega0", &self.domain.omega0)] {
            if !(c.half_width > 0.0 && c.center - c.half_width > 0.0 && c.center + c.half_width < 1.0) {
                return Err(LabError::Schema(format!("{name}: cube must lie strictly inside the unit box")));
            }
        }
        if let Some(v) = self.weight.vartheta {
            if !(v > 0.0 && v < self.time.t_final) {
                return bad("weight.vartheta", "must lie in (0, T)");
            }
        }
        if !(self.weight.k_factor > 1.0) {
            return bad("weight.k_factor", "must exceed 1");
        }
        self.weight_params(1.0).validate().map_err(|e| LabError::Schema(format!("weight: {e}")))?;
        if !dims_ok(&self.verify_ops.dims) {
            return bad("verify_ops.dims", "entries must be 1, 2 or 3");
        }
        if self.verify_ops.n_min < 1 || self.verify_ops.n_min > self.verify_ops.n_max {
            return bad("verify_ops.n_min", "need 1 <= n_min <= n_max");
        }
        if !dims_ok(&self.energy.dims) {
            return bad("energy.dims", "entries must be 1, 2 or 3");
        }
        if self.energy.starts.iter().any(|s| !(0.0..1.0).contains(s)) {
            return bad("energy.starts", "fractions must lie in [0, 1)");
        }
        let grids = [
            ("converge.spatial_grids", &self.converge.spatial_grids),
            ("energy.grids", &self.energy.grids),
            ("carleman.grids", &self.carleman.grids),
            ("stability.grids", &self.stability.grids),
        ];
        for (name, g) in grids {
            if g.len() < 2 && name != "energy.grids" || g.contains(&0) {
                return Err(LabError::Schema(format!("{name}: need at least two positive grid sizes")));
            }
        }
        if self.stability.decay_grids.len() < 3 || self.stability.decay_grids.iter().any(|&g| g < 2) {
            return bad("stability.decay_grids", "need at least three values of 1/h, each >= 2");
        }
        if self.carleman.powers.iter().any(|&p| p > 1) {
            return bad("carleman.powers", "only p = 0 and p = 1 are supported");
        }
        if self.carleman.gauss_taus.len() < 2 || self.carleman.gauss_taus.iter().any(|t| !(*t >= 1.0)) {
            return bad("carleman.gauss_taus", "need at least two values >= 1");
        }
        if self.carleman.deltas.iter().any(|d| !(*d > 0.0 && *d <= 0.5)) || self.carleman.taus.iter().any(|t| !(*t >= 1.0)) {
            return bad("carleman.deltas", "deltas must lie in (0, 1/2] and taus be >= 1");
        }
        if self.converge.temporal_steps.len() < 2 {
            return bad("converge.temporal_steps", "need at least two step counts");
        }
        if !self.reconstruct.coefficient_steps.is_multiple_of(2) {
            return bad("reconstruct.coefficient_steps", "must be even");
        }
        Ok(())
    }

    pub fn vartheta(&self) -> f64 {
        self.weight.vartheta.unwrap_or(0.5 * self.time.t_final)
    }

    pub fn scheme(&self) -> Scheme {
        self.time.scheme.into()
    }

    pub fn weight_params(&self, sup_psi: f64) -> WeightParams {
        WeightParams {
            lambda: self.weight.lambda,
            k_level: self.weight.k_factor * sup_psi,
            tau: self.weight.tau,
            delta: self.weight.delta,
            t_final: self.time.t_final,
            epsilon: self.weight.epsilon,
            tau0: self.weight.tau0,
            vartheta: self.vartheta(),
        }
    }

    pub fn omega(&self, dim: usize) -> Result<SubBox, LabError> {
        self.domain.omega.to_box(dim)
    }

    /// Weight built from `ω₀ ⊂⊂ ω` on `grid`, with the configured `τ`, `δ`.
    pub fn weight(&self, grid: &GridSpec) -> Result<Weight, LabError> {
        let d = grid.dim();
        let opts = PsiOptions { offset: self.weight.psi_offset, ..PsiOptions::default() };
        let (psi, _) = build_psi(grid, &self.domain.omega0.to_box(d)?, &self.omega(d)?, opts)?;
        Ok(Weight::new(self.weight_params(psi.sup()), psi)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(Config::parse("", &[]).unwrap(), Config::default());
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = Config::parse("seed = 5\n[weight]\ntau = 4.0\n", &["stability.decay_grids=[8,16,32]".into()]).unwrap();
        let back = Config::parse(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.stability.decay_grids, vec![8, 16, 32]);
    }

    #[test]
    fn overrides_are_typed() {
        let cfg = Config::parse("", &["weight.tau=5".into(), "time.scheme=backward-euler".into(), "workers=2".into()]).unwrap();
        assert_eq!(cfg.weight.tau, 5.0);
        assert_eq!(cfg.time.scheme, SchemeName::BackwardEuler);
        assert_eq!(cfg.workers, 2);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let e = Config::parse("[weight]\ntua = 3.0\n", &[]).unwrap_err();
        assert!(e.to_string().contains("tua"), "{e}");
        let e = Config::parse("[time]\nsteps = \"many\"\n", &[]).unwrap_err();
        assert!(e.to_string().contains("steps") || e.to_string().contains("many"), "{e}");
        let e = Config::parse("", &["time.steps=7".into()]).unwrap_err();
        assert!(e.to_string().contains("time.steps"), "{e}");
        assert!(matches!(Config::parse("", &["nonsense".into()]), Err(LabError::Schema(_))));
    }
}
