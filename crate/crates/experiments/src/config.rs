//! Experiment configuration. Every field has a default, so `{}` reproduces
//! the rank-1/2/3 plateau figure.

use std::path::{Path, PathBuf};

use irlab_core::spectral::SpectrumSpec;
use irlab_core::timing::{self, WindowParams};
use serde::{Deserialize, Serialize};

use crate::AppError;

/// Horizon used when the window of the largest rank cannot be evaluated.
pub const FALLBACK_HORIZON: usize = 20_000;
/// Upper limit on automatically chosen horizons.
pub const MAX_AUTO_HORIZON: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub depth: usize,
    pub eta: f64,
    pub alpha: f64,
    /// `None` picks `⌈2·T1⌉` for the largest configured rank, capped.
    pub max_iters: Option<usize>,
    pub record_every: usize,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self { depth: 2, eta: 0.005, alpha: 0.01, max_iters: None, record_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub eps: f64,
    pub eps_prime: f64,
    /// Ranks L whose windows are evaluated and drawn.
    pub ranks: Vec<usize>,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self { eps: 0.05, eps_prime: 0.1, ranks: vec![1, 2, 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Noise levels c; the entry standard deviation is `c/√n`.
    pub levels: Vec<f64>,
    /// Base seed. Every level of one run uses the same seed, so `E` scales
    /// linearly with c.
    pub seed: u64,
    /// Monte-Carlo seeds per level for stability reports (`seed..seed+seeds`).
    pub seeds: usize,
    /// Rank whose window the stability bounds refer to.
    pub rank: usize,
    pub delta_prime: f64,
    pub c_abs: f64,
    /// Accuracy for hitting-time based checks.
    pub eps_tilde: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            levels: vec![0.0, 0.05, 0.1, 0.2],
            seed: 0,
            seeds: 1,
            rank: 2,
            delta_prime: 0.05,
            c_abs: 1.0,
            eps_tilde: 1e-3,
        }
    }
}

/// The single parameter varied across the points of an `observe` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    #[default]
    None,
    Eta(Vec<f64>),
    Leading(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Csv,
    Svg,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spectrum: SpectrumSpec,
    pub dynamics: DynamicsSection,
    pub window: WindowSection,
    pub noise: NoiseSection,
    pub sweep: Sweep,
    pub output_dir: PathBuf,
    pub emit: Vec<Emit>,
    pub log_x: bool,
    /// Treat uncertified windows and failed hypotheses as errors.
    pub strict: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumSpec::default(),
            dynamics: DynamicsSection::default(),
            window: WindowSection::default(),
            noise: NoiseSection::default(),
            sweep: Sweep::None,
            output_dir: PathBuf::from("irlab-out"),
            emit: vec![Emit::Csv, Emit::Svg, Emit::Report],
            log_x: true,
            strict: false,
        }
    }
}

/// One point of a sweep: a label plus the two quantities that may vary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub label: String,
    pub eta: f64,
    pub leading: Vec<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let bad = |m: String| Err(AppError::Config(m));
        self.spectrum.validate().map_err(|e| AppError::Config(e.to_string()))?;
        for pt in self.sweep_points() {
            let spec = SpectrumSpec { leading: pt.leading.clone(), ..self.spectrum.clone() };
            spec.validate().map_err(|e| AppError::Config(format!("sweep point {}: {e}", pt.label)))?;
            self.window_params(1, pt.eta)
                .validate()
                .map_err(|e| AppError::Config(format!("sweep point {}: {e}", pt.label)))?;
        }
        if self.dynamics.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if self.dynamics.max_iters == Some(0) {
            return bad("max_iters must be at least 1".into());
        }
        if self.window.ranks.is_empty() {
            return bad("window.ranks must not be empty".into());
        }
        for &l in &self.window.ranks {
            if l == 0 || l >= self.spectrum.n {
                return bad(format!("rank {l} needs 1 <= L < n = {} so that λ_(L+1) exists", self.spectrum.n));
            }
        }
        let noise_rank = self.noise.rank;
        if noise_rank == 0 || noise_rank >= self.spectrum.n {
            return bad(format!("noise.rank {noise_rank} outside 1..{}", self.spectrum.n));
        }
        if self.noise.levels.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad("noise levels must be nonnegative".into());
        }
        if self.noise.seeds == 0 {
            return bad("noise.seeds must be at least 1".into());
        }
        match &self.sweep {
            Sweep::Eta(v) if v.is_empty() => bad("eta sweep is empty".into()),
            Sweep::Leading(v) if v.is_empty() => bad("leading sweep is empty".into()),
            _ => Ok(()),
        }
    }

    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let leading = self.spectrum.leading.clone();
        let eta = self.dynamics.eta;
        match &self.sweep {
            Sweep::None => vec![SweepPoint { label: format!("eta={eta}"), eta, leading }],
            Sweep::Eta(etas) => etas
                .iter()
                .map(|&e| SweepPoint { label: format!("eta={e}"), eta: e, leading: leading.clone() })
                .collect(),
            Sweep::Leading(sets) => sets
                .iter()
                .map(|s| {
                    let parts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                    SweepPoint { label: format!("leading={}", parts.join("/")), eta, leading: s.clone() }
                })
                .collect(),
        }
    }

    pub fn window_params(&self, rank: usize, eta: f64) -> WindowParams {
        WindowParams {
            rank,
            eps: self.window.eps,
            eps_prime: self.window.eps_prime,
            alpha: self.dynamics.alpha,
            eta,
            depth: self.dynamics.depth,
        }
    }

    /// Explicit `max_iters`, or `⌈2·T1⌉` of the largest configured rank
    /// (capped at [`MAX_AUTO_HORIZON`]).
    pub fn horizon(&self, spectrum: &[f64], eta: f64) -> usize {
        if let Some(h) = self.dynamics.max_iters {
            return h;
        }
        let l_max = self.window.ranks.iter().copied().max().unwrap_or(1);
        match spectrum.get(l_max).map(|&lam| timing::t1(lam, &self.window_params(l_max, eta))) {
            Some(Ok(t)) if t.is_finite() && t > 0.0 => ((2.0 * t).ceil() as usize).clamp(1, MAX_AUTO_HORIZON),
            _ => FALLBACK_HORIZON,
        }
    }

    pub fn emits(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
        assert_eq!(cfg.spectrum.leading, vec![10.0, 5.0, 1.0]);
        assert_eq!(cfg.spectrum.n, 20);
    }

    #[test]
    fn default_horizon_covers_rank_three_exit() {
        let cfg = ExperimentConfig::default();
        let s = cfg.spectrum.eigenvalues().unwrap();
        // 2·T1(λ_4 = 0.01) at η = 0.005.
        assert_eq!(cfg.horizon(&s, 0.005), 47_958);
    }

    #[test]
    fn rank_equal_to_dimension_is_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.window.ranks = vec![20];
        assert!(matches!(cfg.validate(), Err(AppError::Config(_))));
    }

    #[test]
    fn sweep_parsing() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"sweep": {"eta": [0.005, 0.1]}}"#).unwrap();
        let pts = cfg.sweep_points();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].label, "eta=0.1");
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"sweep": {"leading": [[10, 5, 1], [8, 2]]}}"#).unwrap();
        assert_eq!(cfg.sweep_points()[1].label, "leading=8/2");
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
