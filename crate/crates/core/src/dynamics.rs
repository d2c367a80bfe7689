//! Gradient descent on the deep factorization `W = W_N ··· W_1`.
//!
//! Two equivalent views are provided: the full factor chain, stepped with the
//! exact gradient of `½‖W_N···W_1 − W̃‖_F²`, and the per-eigenvalue scalar
//! channel `d ← d − η d^{N−1}(d^N − λ̃)` that the chain reduces to under the
//! identical initialization `W_j(0) = αI`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{effective_rank_of_spectrum, SymMatrix};

/// Magnitude past which an iterate is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;
/// Scalar channels stop once `|d^N − λ̃|` falls to this.
pub const SCALAR_STOP_RESIDUAL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsConfig {
    /// Number of factors N.
    pub depth: usize,
    pub eta: f64,
    pub alpha: f64,
    pub max_iters: usize,
    pub record_every: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self { depth: 2, eta: 0.005, alpha: 0.01, max_iters: 10_000, record_every: 1 }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::input("depth must be at least 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::input(format!("step size must be positive, got {}", self.eta)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::input(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::input("record_every must be at least 1"));
        }
        Ok(())
    }
}

/// One sampled iteration.
///
/// `diag` holds the diagonal of a single factor expressed in the target's
/// eigenbasis (for a scalar channel, the single value `d(k)`); the product
/// then has eigenvalues `d_i^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub k: usize,
    pub diag: Vec<f64>,
    pub loss: f64,
    pub eff_rank: Option<f64>,
}

/// The factors `W_1, …, W_N` (index 0 is `W_1`).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorChain {
    pub factors: Vec<DMatrix<f64>>,
}

impl FactorChain {
    /// `W_j = αI` for every j.
    pub fn identical(n: usize, cfg: &DynamicsConfig) -> Self {
        Self { factors: vec![DMatrix::identity(n, n) * cfg.alpha; cfg.depth] }
    }

    pub fn n(&self) -> usize {
        self.factors[0].nrows()
    }

    pub fn depth(&self) -> usize {
        self.factors.len()
    }

    /// `W = W_N ··· W_1`.
    pub fn product(&self) -> DMatrix<f64> {
        let mut p = self.factors[0].clone();
        for f in &self.factors[1..] {
            p = f * p;
        }
        p
    }

    /// `½‖W − target‖_F²`.
    pub fn loss(&self, target: &SymMatrix) -> f64 {
        0.5 * (self.product() - target.as_matrix()).norm_squared()
    }

    /// Gradient of the loss with respect to every factor:
    /// `(W_N···W_{j+1})ᵀ (W − target) (W_{j−1}···W_1)ᵀ`.
    pub fn gradients(&self, target: &SymMatrix) -> Result<Vec<DMatrix<f64>>> {
        self.check_target(target)?;
        let (prefix, w) = self.prefixes();
        let residual = w - target.as_matrix();
        Ok(self.gradients_from(&prefix, &residual))
    }

    /// Largest entrywise difference between any factor and `W_1`.
    pub fn max_factor_spread(&self) -> f64 {
        self.factors[1..].iter().map(|f| (f - &self.factors[0]).amax()).fold(0.0, f64::max)
    }

    fn check_target(&self, target: &SymMatrix) -> Result<()> {
        if target.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: target.n() });
        }
        Ok(())
    }

    /// `prefix[j] = W_j···W_1` with `prefix[0] = I`, plus the full product.
    fn prefixes(&self) -> (Vec<DMatrix<f64>>, DMatrix<f64>) {
        let n = self.n();
        let mut prefix = Vec::with_capacity(self.depth());
        let mut acc = DMatrix::identity(n, n);
        for f in &self.factors {
            prefix.push(acc.clone());
            acc = f * acc;
        }
        (prefix, acc)
    }

    fn gradients_from(&self, prefix: &[DMatrix<f64>], residual: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let n = self.n();
        let depth = self.depth();
        let mut grads = vec![DMatrix::zeros(n, n); depth];
        // suffix = W_N···W_{j+1}, built from the top down.
        let mut suffix = DMatrix::identity(n, n);
        for j in (0..depth).rev() {
            grads[j] = suffix.transpose() * residual * prefix[j].transpose();
            suffix = &suffix * &self.factors[j];
        }
        grads
    }

    /// One gradient step in place; returns the loss at the pre-step iterate.
    fn step(&mut self, target: &SymMatrix, eta: f64) -> f64 {
        let (prefix, w) = self.prefixes();
        let residual = w - target.as_matrix();
        let loss = 0.5 * residual.norm_squared();
        let grads = self.gradients_from(&prefix, &residual);
        for (f, g) in self.factors.iter_mut().zip(grads) {
            *f -= g * eta;
        }
        loss
    }

    fn diverged(&self) -> bool {
        self.factors.iter().flat_map(|f| f.iter()).any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
    }
}

/// One gradient-descent step of every factor.
pub fn factor_gd_step(chain: &FactorChain, target: &SymMatrix, cfg: &DynamicsConfig) -> Result<FactorChain> {
    chain.check_target(target)?;
    let mut next = chain.clone();
    next.step(target, cfg.eta);
    if next.diverged() {
        return Err(Error::Divergence { iteration: 1, partial: Vec::new() });
    }
    Ok(next)
}

/// Runs gradient descent from `W_j(0) = αI` for `cfg.max_iters` steps.
///
/// `observe(k, chain)` is called for every `k = 0..=max_iters` before the
/// k-th update is applied. The final chain is returned.
pub fn run_factor_gd<F>(target: &SymMatrix, cfg: &DynamicsConfig, mut observe: F) -> Result<FactorChain>
where
    F: FnMut(usize, &FactorChain),
{
    cfg.validate()?;
    let mut chain = FactorChain::identical(target.n(), cfg);
    for k in 0..cfg.max_iters {
        observe(k, &chain);
        chain.step(target, cfg.eta);
        if chain.diverged() {
            return Err(Error::Divergence { iteration: k + 1, partial: Vec::new() });
        }
    }
    observe(cfg.max_iters, &chain);
    Ok(chain)
}

/// Full-matrix simulation, sampled every `record_every` iterations.
///
/// `basis` is the eigenvector matrix of the target; each record's `diag` is
/// `diag(basisᵀ W_1(k) basis)`. Effective rank is computed from those
/// diagonals (`d_i^N`), which the identical initialization makes exact.
pub fn simulate_matrix(
    target: &SymMatrix,
    basis: &DMatrix<f64>,
    cfg: &DynamicsConfig,
) -> Result<Vec<TrajectoryRecord>> {
    let mut records = Vec::new();
    let depth = cfg.depth as i32;
    let out = run_factor_gd(target, cfg, |k, chain| {
        if k % cfg.record_every != 0 && k != cfg.max_iters {
            return;
        }
        let d = basis.transpose() * &chain.factors[0] * basis;
        let diag: Vec<f64> = (0..d.nrows()).map(|i| d[(i, i)]).collect();
        let eig: Vec<f64> = diag.iter().map(|v| v.powi(depth)).collect();
        records.push(TrajectoryRecord {
            k,
            eff_rank: effective_rank_of_spectrum(&eig).ok(),
            diag,
            loss: chain.loss(target),
        });
    });
    match out {
        Ok(_) => Ok(records),
        Err(Error::Divergence { iteration, .. }) => Err(Error::Divergence { iteration, partial: records }),
        Err(e) => Err(e),
    }
}

/// `d − η d^{N−1}(d^N − λ̃)`.
pub fn scalar_step(d: f64, lam_tilde: f64, cfg: &DynamicsConfig) -> Result<f64> {
    let n = cfg.depth as i32;
    let next = d - cfg.eta * d.powi(n - 1) * (d.powi(n) - lam_tilde);
    if !next.is_finite() || next.abs() > DIVERGENCE_LIMIT {
        return Err(Error::Divergence { iteration: 1, partial: Vec::new() });
    }
    Ok(next)
}

fn scalar_record(k: usize, d: f64, lam_tilde: f64, depth: i32) -> TrajectoryRecord {
    let r = d.powi(depth) - lam_tilde;
    TrajectoryRecord { k, diag: vec![d], loss: 0.5 * r * r, eff_rank: None }
}

/// Iterates the scalar channel from `d(0) = α`.
///
/// Stops after `max_iters` steps or once `|d^N − λ̃| ≤ 1e−14`; the last
/// iterate is always recorded.
pub fn scalar_simulate(lam_tilde: f64, cfg: &DynamicsConfig) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    let depth = cfg.depth as i32;
    let mut d = cfg.alpha;
    let mut records = vec![scalar_record(0, d, lam_tilde, depth)];
    for k in 1..=cfg.max_iters {
        d = match scalar_step(d, lam_tilde, cfg) {
            Ok(v) => v,
            Err(_) => return Err(Error::Divergence { iteration: k, partial: records }),
        };
        let done = (d.powi(depth) - lam_tilde).abs() <= SCALAR_STOP_RESIDUAL;
        if k % cfg.record_every == 0 || done || k == cfg.max_iters {
            records.push(scalar_record(k, d, lam_tilde, depth));
        }
        if done {
            break;
        }
    }
    Ok(records)
}

/// Final value of the scalar channel after `max_iters` steps (or early stop),
/// without keeping a trajectory.
pub fn scalar_final(lam_tilde: f64, cfg: &DynamicsConfig) -> Result<f64> {
    cfg.validate()?;
    let depth = cfg.depth as i32;
    let mut d = cfg.alpha;
    for k in 1..=cfg.max_iters {
        d = scalar_step(d, lam_tilde, cfg).map_err(|_| Error::Divergence { iteration: k, partial: Vec::new() })?;
        if (d.powi(depth) - lam_tilde).abs() <= SCALAR_STOP_RESIDUAL {
            break;
        }
    }
    Ok(d)
}

/// Smallest recorded `k` with `|d(k) − target_value| ≤ tol`.
pub fn hitting_time(trajectory: &[TrajectoryRecord], target_value: f64, tol: f64) -> Option<usize> {
    trajectory.iter().find(|r| (r.diag[0] - target_value).abs() <= tol).map(|r| r.k)
}

/// Streaming hitting time of the scalar channel driven by `lam_tilde`,
/// without materializing the trajectory. Does not stop early.
pub fn scalar_hitting_time(lam_tilde: f64, cfg: &DynamicsConfig, target_value: f64, tol: f64) -> Result<Option<usize>> {
    cfg.validate()?;
    let mut d = cfg.alpha;
    for k in 0..=cfg.max_iters {
        if (d - target_value).abs() <= tol {
            return Ok(Some(k));
        }
        if k < cfg.max_iters {
            d = scalar_step(d, lam_tilde, cfg)
                .map_err(|_| Error::Divergence { iteration: k + 1, partial: Vec::new() })?;
        }
    }
    Ok(None)
}

/// Which case of the convergence step-size condition applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSizeCase {
    Linear,
    Positive,
    NonPositiveAboveRoot,
    NegativeBelowRoot,
}

/// Admissible step-size thresholds for a scalar channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizeBounds {
    pub case: StepSizeCase,
    /// Threshold for convergence of the channel.
    pub convergence: f64,
    /// Stricter threshold used by the iteration-complexity estimates.
    pub complexity: f64,
}

pub fn step_size_bounds(lam_tilde: f64, cfg: &DynamicsConfig) -> StepSizeBounds {
    let n = cfg.depth as f64;
    let alpha = cfg.alpha;
    let root = lam_tilde.abs().powf(1.0 / n);
    let m = alpha.max(root);
    let m_pow = m.powf(2.0 * n - 2.0);
    let complexity = if lam_tilde >= 0.0 { 1.0 / (2.0 * n * m_pow) } else { 1.0 / ((3.0 * n - 2.0) * m_pow) };
    if cfg.depth == 1 {
        return StepSizeBounds { case: StepSizeCase::Linear, convergence: 1.0, complexity };
    }
    let (case, convergence) = if lam_tilde > 0.0 {
        (StepSizeCase::Positive, 1.0 / (n * m_pow))
    } else if alpha >= root {
        (StepSizeCase::NonPositiveAboveRoot, alpha.powf(2.0 - 2.0 * n))
    } else {
        (StepSizeCase::NegativeBelowRoot, 1.0 / ((3.0 * n - 2.0) * lam_tilde.abs().powf(2.0 - 2.0 / n)))
    };
    StepSizeBounds { case, convergence, complexity }
}

/// Predicted limit `λ̃₊^{1/N}` of the scalar channel.
pub fn scalar_limit(lam_tilde: f64, cfg: &DynamicsConfig) -> Result<f64> {
    cfg.validate()?;
    let bounds = step_size_bounds(lam_tilde, cfg);
    if cfg.eta >= bounds.convergence {
        return Err(Error::regime(format!(
            "step size {} not below convergence threshold {}",
            cfg.eta, bounds.convergence
        )));
    }
    if cfg.depth == 1 {
        return Ok(lam_tilde);
    }
    Ok(lam_tilde.max(0.0).powf(1.0 / cfg.depth as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigendecompose;

    fn cfg(depth: usize, eta: f64, alpha: f64) -> DynamicsConfig {
        DynamicsConfig { depth, eta, alpha, max_iters: 1000, record_every: 1 }
    }

    #[test]
    fn single_factor_is_linear_contraction() {
        let c = cfg(1, 0.1, 0.5);
        let target = SymMatrix::from_diagonal(&[2.0, -1.0]).unwrap();
        let mut chain = FactorChain::identical(2, &c);
        for k in 1..=20 {
            chain = factor_gd_step(&chain, &target, &c).unwrap();
            let w = chain.product();
            let q = 0.9f64.powi(k);
            assert!((w[(0, 0)] - (2.0 + q * (0.5 - 2.0))).abs() < 1e-12);
            assert!((w[(1, 1)] - (-1.0 + q * (0.5 + 1.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn two_factor_first_step_matches_scalar_formula() {
        let c = cfg(2, 0.005, 0.01);
        let lams = [10.0, 5.0, 1.0];
        let target = SymMatrix::from_diagonal(&lams).unwrap();
        let chain = factor_gd_step(&FactorChain::identical(3, &c), &target, &c).unwrap();
        for (i, lam) in lams.iter().enumerate() {
            let want = 0.01 - 0.005 * 0.01 * (0.0001 - lam);
            assert_eq!(chain.factors[0][(i, i)], want);
            assert_eq!(chain.factors[1][(i, i)], want);
        }
    }

    #[test]
    fn scalar_step_examples() {
        let c = cfg(2, 0.005, 0.01);
        // High-precision reference: 0.01 + 0.005*0.01*9.9999 = 0.010499995.
        assert!((scalar_step(0.01, 10.0, &c).unwrap() - 0.010499995).abs() < 1e-17);
        assert_eq!(scalar_step(0.3, 0.09, &c).unwrap(), 0.3);
        assert_eq!(scalar_step(0.0, 4.0, &c).unwrap(), 0.0);
        assert!(matches!(scalar_step(1e7, 0.0, &cfg(2, 1.0, 1.0)), Err(Error::Divergence { .. })));
    }

    #[test]
    fn fixed_point_trajectory_is_constant() {
        let c = cfg(3, 0.01, 0.5);
        let traj = scalar_simulate(0.125, &c).unwrap();
        assert!(traj.iter().all(|r| r.diag[0] == 0.5));
        assert_eq!(hitting_time(&traj, 0.5, 1e-3), Some(0));
    }

    #[test]
    fn positive_channel_rises_monotonically() {
        let c = DynamicsConfig { max_iters: 20_000, ..cfg(2, 0.005, 0.01) };
        let traj = scalar_simulate(1.0, &c).unwrap();
        let mut prev = 0.0;
        for r in &traj {
            let d = r.diag[0];
            assert!(d >= prev && (0.01..=1.0).contains(&d));
            prev = d;
        }
        assert!((prev - 1.0).abs() < 1e-10);
    }

    #[test]
    fn negative_channel_decays_to_zero() {
        let c = DynamicsConfig { max_iters: 200_000, ..cfg(2, 0.01, 0.01) };
        let d = scalar_final(-1.0, &c).unwrap();
        assert!((0.0..1e-3).contains(&d));
    }

    #[test]
    fn divergence_carries_partial_trajectory() {
        let c = cfg(2, 0.9, 3.0);
        match scalar_simulate(1.0, &c) {
            Err(Error::Divergence { iteration, partial }) => {
                assert!(iteration >= 1);
                assert_eq!(partial.len(), iteration);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn unreachable_target_has_no_hit() {
        let c = cfg(2, 0.01, 0.5);
        let traj = scalar_simulate(0.01, &c).unwrap();
        assert_eq!(hitting_time(&traj, 0.9, 1e-3), None);
    }

    #[test]
    fn step_size_examples() {
        let b = step_size_bounds(10.0, &cfg(2, 0.005, 0.01));
        assert_eq!(b.case, StepSizeCase::Positive);
        assert!((b.convergence - 0.05).abs() < 1e-15);
        assert!((b.complexity - 0.025).abs() < 1e-15);

        let b = step_size_bounds(0.0, &cfg(2, 0.005, 0.1));
        assert_eq!(b.case, StepSizeCase::NonPositiveAboveRoot);
        assert!((b.complexity - 25.0).abs() < 1e-12);
        assert!((b.convergence - 100.0).abs() < 1e-10);

        let b = step_size_bounds(-8.0, &cfg(3, 0.005, 1.0));
        assert_eq!(b.case, StepSizeCase::NegativeBelowRoot);
        assert!((b.convergence - 1.0 / 112.0).abs() < 1e-15);
        assert!((b.complexity - 1.0 / 112.0).abs() < 1e-15);
    }

    #[test]
    fn limits() {
        assert_eq!(scalar_limit(16.0, &cfg(2, 0.001, 0.01)).unwrap(), 4.0);
        assert_eq!(scalar_limit(-3.0, &cfg(2, 0.001, 0.01)).unwrap(), 0.0);
        assert!(matches!(scalar_limit(16.0, &cfg(2, 0.5, 0.01)), Err(Error::OutOfRegime(_))));
    }

    #[test]
    fn long_horizon_reaches_root() {
        let c = DynamicsConfig { max_iters: 1_000_000, ..cfg(2, 0.005, 0.01) };
        let d = scalar_final(10.0, &c).unwrap();
        assert!((d - 10f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn matrix_records_track_effective_rank() {
        let lams = [10.0, 5.0, 1.0, 0.01];
        let target = SymMatrix::from_diagonal(&lams).unwrap();
        let basis = eigendecompose(&target).unwrap().vectors().clone();
        let c = DynamicsConfig { max_iters: 50, record_every: 10, ..cfg(2, 0.005, 0.01) };
        let recs = simulate_matrix(&target, &basis, &c).unwrap();
        assert_eq!(recs.iter().map(|r| r.k).collect::<Vec<_>>(), vec![0, 10, 20, 30, 40, 50]);
        assert!((recs[0].eff_rank.unwrap() - 4.0).abs() < 1e-12);
    }
}
