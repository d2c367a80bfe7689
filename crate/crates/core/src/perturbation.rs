//! Noisy targets `W̃ = Ŵ + E` and the stability bounds that compare the
//! perturbed dynamics to the noiseless ones.
//!
//! Every bound takes the measured `‖E‖` (largest absolute eigenvalue of the
//! sampled noise); the probabilistic envelope [`e_norm_bound`] is only a
//! reference value because its absolute constant is unknown.
//!
//! Eigenvector-based bounds use the gap of the specific eigenvalue involved,
//! `min_{j≠i} |λ_i − λ_j|`, so that a repeated tail far away from the index
//! of interest does not make them vacuous.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_factor_gd, scalar_hitting_time, step_size_bounds, DynamicsConfig};
use crate::error::{Error, Result};
use crate::rng::GaussianStream;
use crate::spectral::{
    davis_kahan_bound, eigendecompose, eigvec_distance, eigvec_distance_bound, sin_theta, EigenDecomp, SymMatrix,
};
use crate::timing::{self, k_epsilon, WindowParams};

/// Symmetric Gaussian noise with i.i.d. `N(0, σ²)` entries on and above the
/// diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
    pub n: usize,
    /// Confidence parameter of the norm envelope.
    pub delta_prime: f64,
    /// Absolute constant of the norm envelope.
    pub c_abs: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64, seed: u64, n: usize) -> Self {
        Self { sigma, seed, n, delta_prime: 0.05, c_abs: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::input(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if self.n == 0 {
            return Err(Error::input("noise dimension must be positive"));
        }
        if !(self.delta_prime > 0.0 && self.delta_prime < 1.0) {
            return Err(Error::input("delta' must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Draws `E`: the upper triangle is filled row by row (`i ≤ j`) from a
/// [`GaussianStream`] seeded with `model.seed`, then mirrored.
pub fn sample_noise(model: &NoiseModel) -> Result<SymMatrix> {
    model.validate()?;
    let n = model.n;
    let mut g = GaussianStream::new(model.seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = g.normal(model.sigma);
        }
    }
    SymMatrix::from_upper(m)
}

/// `C·σ(√n + √ln(4/δ'))`, the high-probability envelope on `‖E‖`.
pub fn e_norm_bound(model: &NoiseModel) -> Result<f64> {
    model.validate()?;
    Ok(model.c_abs * model.sigma * ((model.n as f64).sqrt() + (4.0 / model.delta_prime).ln().sqrt()))
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// A noiseless target, its perturbation, and the derived spectral data.
#[derive(Debug, Clone)]
pub struct PerturbedProblem {
    pub w_hat: SymMatrix,
    pub e: SymMatrix,
    pub w_tilde: SymMatrix,
    pub decomp_hat: EigenDecomp,
    pub decomp_tilde: EigenDecomp,
    pub e_norm: f64,
    /// `|λ̃_{i,+}^{1/N} − λ_{i,+}^{1/N}|` per index.
    pub beta: Vec<f64>,
    /// `max{α, ‖W̃‖^{1/N}}`.
    pub m: f64,
    pub depth: usize,
    pub alpha: f64,
}

impl PerturbedProblem {
    pub fn new(w_hat: SymMatrix, e: SymMatrix, depth: usize, alpha: f64) -> Result<Self> {
        if depth == 0 || !(alpha > 0.0) {
            return Err(Error::input("depth must be >= 1 and alpha positive"));
        }
        let w_tilde = w_hat.add(&e)?;
        let decomp_hat = eigendecompose(&w_hat)?;
        let decomp_tilde = eigendecompose(&w_tilde)?;
        let e_norm = eigendecompose(&e)?.spectral_norm();
        let inv = 1.0 / depth as f64;
        let beta = decomp_hat
            .values()
            .iter()
            .zip(decomp_tilde.values())
            .map(|(&l, &lt)| (pos(lt).powf(inv) - pos(l).powf(inv)).abs())
            .collect();
        let m = alpha.max(decomp_tilde.spectral_norm().powf(inv));
        Ok(Self { w_hat, e, w_tilde, decomp_hat, decomp_tilde, e_norm, beta, m, depth, alpha })
    }

    /// Samples `E` from `noise` and builds the problem.
    pub fn sample(w_hat: SymMatrix, noise: &NoiseModel, depth: usize, alpha: f64) -> Result<Self> {
        if noise.n != w_hat.n() {
            return Err(Error::DimensionMismatch { expected: w_hat.n(), found: noise.n });
        }
        let e = sample_noise(noise)?;
        Self::new(w_hat, e, depth, alpha)
    }

    pub fn n(&self) -> usize {
        self.w_hat.n()
    }

    pub fn lam(&self) -> &[f64] {
        self.decomp_hat.values()
    }

    pub fn lam_tilde(&self) -> &[f64] {
        self.decomp_tilde.values()
    }

    pub fn lam_tilde_plus(&self) -> Vec<f64> {
        self.lam_tilde().iter().map(|&v| pos(v)).collect()
    }

    /// `min_{j≠i} |λ_i − λ_j|` for the noiseless target.
    pub fn gap_at(&self, i: usize) -> f64 {
        self.decomp_hat.index_gap(i)
    }

    fn check_params(&self, params: &WindowParams) -> Result<()> {
        if params.depth != self.depth || params.alpha != self.alpha {
            return Err(Error::input("window parameters disagree with the problem's depth/alpha"));
        }
        Ok(())
    }

    /// Per-index gap, refusing indices whose eigenvalue is repeated.
    fn nondegenerate_gap(&self, i: usize) -> Result<f64> {
        let gap = self.gap_at(i);
        if gap <= self.decomp_hat.degenerate_tol() {
            return Err(Error::DegenerateSpectrum { gap });
        }
        Ok(gap)
    }

    /// `r(W̃⁺_L)`.
    pub fn tilde_plus_rank_l(&self, rank: usize) -> Result<f64> {
        timing::truncated_effective_rank(&self.lam_tilde_plus(), rank)
    }
}

/// `(T̃0, T̃1)`: the window evaluated on the positive parts of the perturbed
/// spectrum.
pub fn perturbed_window(spectrum_tilde: &[f64], params: &WindowParams) -> Result<(f64, f64)> {
    let l = params.rank;
    if l == 0 || l >= spectrum_tilde.len() {
        return Err(Error::input(format!("rank {l} needs at least {} eigenvalues", l + 1)));
    }
    let plus: Vec<f64> = spectrum_tilde.iter().map(|&v| pos(v)).collect();
    if !(plus[l - 1] > 0.0) {
        return Err(Error::regime("(λ̃_L)₊ must be positive"));
    }
    let an = params.alpha.powi(params.depth as i32);
    if !(an < params.eps_prime * plus[l - 1]) {
        return Err(Error::regime(format!("α^N = {an:e} is not below ε'·(λ̃_L)₊")));
    }
    Ok((timing::t0(&plus[..l], params)?, timing::t1(plus[l], params)?))
}

fn shift_preconditions(lam_next: f64, e_norm: f64, params: &WindowParams) -> Result<()> {
    if params.depth != 2 {
        return Err(Error::regime("interval shift bounds need N = 2"));
    }
    if !(e_norm >= 0.0) {
        return Err(Error::input("operator norm must be nonnegative"));
    }
    let a2 = params.alpha * params.alpha;
    if !(lam_next - e_norm > a2) {
        return Err(Error::regime(format!("need λ_(L+1) − ‖E‖ > α², got {}", lam_next - e_norm)));
    }
    let q = 2.0 / 3.0 * params.eta * (lam_next + e_norm);
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::regime(format!("need 0 < (2/3)η(λ_(L+1) + ‖E‖) < 1, got {q}")));
    }
    Ok(())
}

/// `H(λ) = ln(λ/α² − 1)`.
fn h_of(lam: f64, alpha: f64) -> f64 {
    (lam / (alpha * alpha) - 1.0).ln()
}

fn shift_lead(lam: f64, e_norm: f64, params: &WindowParams, constant: f64) -> f64 {
    let a2 = params.alpha * params.alpha;
    let h = h_of(lam, params.alpha);
    e_norm / (2.0 * params.eta * (lam - e_norm)) * (1.0 / (lam - e_norm - a2) + (h - constant).abs() / lam)
}

/// Bound on `|T̃1 − T1|`.
pub fn t1_shift_bound(lam_next: f64, e_norm: f64, params: &WindowParams) -> Result<f64> {
    shift_preconditions(lam_next, e_norm, params)?;
    let c_eps = (1.0 / params.eps_prime - 1.0).ln();
    Ok(shift_lead(lam_next, e_norm, params, c_eps))
}

/// The four summands of the `|T̃0 − T0|` bound (the last one is the
/// constant 1 from the ceiling term).
pub fn t0_shift_components(lam_next: f64, e_norm: f64, params: &WindowParams) -> Result<[f64; 4]> {
    shift_preconditions(lam_next, e_norm, params)?;
    let k = k_epsilon(params.eps)?;
    let lam = lam_next;
    let first = shift_lead(lam, e_norm, params, std::f64::consts::LN_2);
    let second = e_norm / (3f64.sqrt() * params.alpha) / ((lam - e_norm).sqrt() + lam.sqrt());
    let third =
        9.0 * k * e_norm / (2.0 * params.eta * lam * (lam - e_norm) * (3.0 - 2.0 * params.eta * (lam + e_norm)).abs());
    Ok([first, second, third, 1.0])
}

/// Bound on `|T̃0 − T0|`.
pub fn t0_shift_bound(lam_next: f64, e_norm: f64, params: &WindowParams) -> Result<f64> {
    Ok(t0_shift_components(lam_next, e_norm, params)?.iter().sum())
}

fn stability_hypotheses(problem: &PerturbedProblem, params: &WindowParams) -> Result<()> {
    params.validate()?;
    problem.check_params(params)?;
    let l = params.rank;
    if l >= problem.n() {
        return Err(Error::input(format!("rank {l} needs at least {} eigenvalues", l + 1)));
    }
    let plus = problem.lam_tilde_plus();
    if !(plus[l - 1] > 0.0) {
        return Err(Error::regime("(λ̃_L)₊ must be positive"));
    }
    let an = params.alpha.powi(params.depth as i32);
    if !(an < params.eps_prime * plus[l - 1]) {
        return Err(Error::regime(format!(
            "α^N = {an:e} is not below ε'·(λ̃_L)₊ = {:e}",
            params.eps_prime * plus[l - 1]
        )));
    }
    let limit = params.step_size_limit(plus[0]);
    if !(params.eta < limit) {
        return Err(Error::regime(format!("η = {} is not below {limit}", params.eta)));
    }
    if !(problem.lam()[0] > 0.0) {
        return Err(Error::regime("λ_1 must be positive"));
    }
    Ok(())
}

/// Bound on `|r(Ŵ_L) − r(W(k))|` for `k ∈ [T̃0, T̃1]`:
/// `2L‖E‖/λ_1 + ε·r(W̃⁺_L) + (2(L'−L)/c_N)((λ̃_{L+1})₊/(λ̃_1)₊)ε' + (n−L')·2α^N/(ε'(λ̃_1)₊)`
/// with `L'` counted on the perturbed positive spectrum.
pub fn effective_rank_stability_bound(problem: &PerturbedProblem, params: &WindowParams) -> Result<f64> {
    stability_hypotheses(problem, params)?;
    let l = params.rank;
    let n = problem.n();
    let plus = problem.lam_tilde_plus();
    let (l_prime, _) = timing::rank_indices(&plus, params);
    let noise = 2.0 * l as f64 * problem.e_norm / problem.lam()[0];
    let rank_term = params.eps * problem.tilde_plus_rank_l(l)?;
    let mid = 2.0 * (l_prime as f64 - l as f64) / params.c_n() * plus[l] / plus[0] * params.eps_prime;
    let tail = (n - l_prime) as f64 * 2.0 * params.alpha.powi(params.depth as i32) / (params.eps_prime * plus[0]);
    Ok(noise + rank_term + mid + tail)
}

/// The `(ε', α)` pair under which the stability bound simplifies to
/// `2L‖E‖/λ_1 + 3ε·r(W̃⁺_L)`.
pub fn simplified_setting(problem: &PerturbedProblem, rank: usize, eps: f64, depth: usize) -> Result<(f64, f64)> {
    let n = problem.n();
    if rank == 0 || rank >= n {
        return Err(Error::input(format!("rank {rank} outside 1..{n}")));
    }
    let plus = problem.lam_tilde_plus();
    let nf = depth as f64;
    let c_n = (nf - 1.0) / (2.0 * nf - 1.0);
    let q = eps * problem.tilde_plus_rank_l(rank)? / (2.0 * (n - rank) as f64);
    let ratio = if plus[rank] > 0.0 { plus[0] / plus[rank] * q } else { f64::INFINITY };
    let eps_prime = c_n * ratio.min(1.0);
    let alpha = ((eps_prime * plus[0]).powf(1.0 / nf) * q.powf(1.0 / nf)).min((eps_prime * plus[rank]).powf(1.0 / nf));
    Ok((eps_prime, alpha))
}

/// `2L‖E‖/λ_1 + 3ε·r(W̃⁺_L)`, valid only when `params` carries the
/// simplified `(ε', α)`.
pub fn effective_rank_stability_bound_simplified(problem: &PerturbedProblem, params: &WindowParams) -> Result<f64> {
    let (eps_prime, alpha) = simplified_setting(problem, params.rank, params.eps, params.depth)?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !close(eps_prime, params.eps_prime) || !close(alpha, params.alpha) {
        return Err(Error::regime(format!(
            "simplified form needs ε' = {eps_prime} and α = {alpha}, got {} and {}",
            params.eps_prime, params.alpha
        )));
    }
    stability_hypotheses(problem, params)?;
    let l = params.rank;
    Ok(2.0 * l as f64 * problem.e_norm / problem.lam()[0] + 3.0 * params.eps * problem.tilde_plus_rank_l(l)?)
}

/// Bound on `|[VᵀW(k)V]_ii − (λ_i)₊|` once channel `i` (0-based) has reached
/// accuracy `eps_tilde`.
pub fn eigen_recovery_bound(
    problem: &PerturbedProblem,
    i: usize,
    eps_tilde: f64,
    params: &WindowParams,
) -> Result<f64> {
    problem.check_params(params)?;
    if i >= problem.n() {
        return Err(Error::input(format!("index {i} out of range")));
    }
    if !(problem.lam()[i] > 0.0) {
        return Err(Error::regime(format!("λ_{} = {} is not positive", i + 1, problem.lam()[i])));
    }
    let gap = problem.nondegenerate_gap(i)?;
    if problem.e_norm > gap / 2.0 {
        return Err(Error::regime(format!("‖E‖ = {} exceeds δ/2 = {}", problem.e_norm, gap / 2.0)));
    }
    let nf = params.depth as f64;
    let limit = 1.0 / ((3.0 * nf - 2.0) * problem.m.powf(2.0 * nf - 2.0));
    if !(params.eta < limit) {
        return Err(Error::regime(format!("η = {} is not below {limit}", params.eta)));
    }
    let lt = problem.lam_tilde()[i];
    let channel = if lt > 0.0 { eps_tilde * nf * lt.powf(1.0 - 1.0 / nf) } else { eps_tilde.powf(nf) };
    let mn = problem.m.powf(nf);
    Ok((4.0 * std::f64::consts::SQRT_2 * mn / gap + 1.0) * problem.e_norm + channel)
}

/// Which closed form the sandwich lower bound used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBranch {
    /// `α^N ≥ c_N λ̃`: evaluated in closed form.
    ClosedForm,
    /// `α^N < c_N λ̃`: needs a fitting-time term that is not available here.
    NeedsExternalTerm,
    /// `λ̃ ≤ α^N`: no lower bound is claimed.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub beta: f64,
    /// `T2Id(λ̃, ε̃)` (depth 2 only).
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub lower_branch: LowerBranch,
    /// Hitting time of `λ₊^{1/N}` within `ε̃ + β`.
    pub empirical_t: Option<usize>,
    /// Hitting time of `λ̃₊^{1/N}` within `ε̃`.
    pub empirical_t_tilde: Option<usize>,
    /// Hitting time of `λ̃₊^{1/N}` within `ε̃ + 2β`.
    pub empirical_t_tilde_2beta: Option<usize>,
}

/// Iteration counts of one scalar channel driven by `lam_tilde`, against
/// the noiseless root `λ₊^{1/N}` and the perturbed one, with their
/// closed-form upper and lower estimates. Simulates at most `horizon` steps.
pub fn iteration_sandwich(
    lam: f64,
    lam_tilde: f64,
    eps_tilde: f64,
    params: &WindowParams,
    horizon: usize,
) -> Result<Sandwich> {
    let n = params.depth;
    if n < 2 {
        return Err(Error::input("iteration sandwich needs N >= 2"));
    }
    let nf = n as f64;
    let alpha = params.alpha;
    let root_t = pos(lam_tilde).powf(1.0 / nf);
    let root = pos(lam).powf(1.0 / nf);
    let beta = (root_t - root).abs();
    if !(eps_tilde > 0.0 && eps_tilde < (alpha - root_t).abs()) {
        return Err(Error::regime(format!("ε̃ = {eps_tilde} outside (0, |α − λ̃₊^(1/N)|)")));
    }
    let cfg = DynamicsConfig { depth: n, eta: params.eta, alpha, max_iters: horizon.max(1), record_every: 1 };
    let limit = step_size_bounds(lam_tilde, &cfg).complexity;
    if !(params.eta < limit) {
        return Err(Error::regime(format!("η = {} is not below {limit}", params.eta)));
    }

    let upper = if n == 2 { timing::t2id(lam_tilde, eps_tilde, params).ok() } else { None };
    let an = alpha.powi(n as i32);
    let c_n = params.c_n();
    let (lower, lower_branch) = if lam_tilde <= an {
        (None, LowerBranch::NotApplicable)
    } else if an >= c_n * lam_tilde {
        let rate = (1.0 - params.eta * nf * (c_n * lam_tilde).powf(2.0 - 2.0 / nf)).ln().abs();
        (Some(((root_t - alpha) / (eps_tilde + 2.0 * beta)).ln() / rate), LowerBranch::ClosedForm)
    } else {
        (None, LowerBranch::NeedsExternalTerm)
    };

    let empirical_t = scalar_hitting_time(lam_tilde, &cfg, root, eps_tilde + beta)?;
    let empirical_t_tilde = scalar_hitting_time(lam_tilde, &cfg, root_t, eps_tilde)?;
    let empirical_t_tilde_2beta = scalar_hitting_time(lam_tilde, &cfg, root_t, eps_tilde + 2.0 * beta)?;
    Ok(Sandwich { beta, upper, lower, lower_branch, empirical_t, empirical_t_tilde, empirical_t_tilde_2beta })
}

/// Bound on `‖W(k)_L − Ŵ_L‖_F` for `k ∈ [T̃0, T̃1]`:
/// `(4√(2L)/δ·λ_1 + √L)‖E‖ + ε√L(λ_1 + ‖E‖)/4`, with δ the smallest
/// per-index gap among the top L eigenvalues.
pub fn approx_error_bound(problem: &PerturbedProblem, params: &WindowParams) -> Result<f64> {
    stability_hypotheses(problem, params)?;
    let l = params.rank;
    let mut delta = f64::INFINITY;
    for i in 0..l {
        delta = delta.min(problem.nondegenerate_gap(i)?);
    }
    if problem.e_norm > delta / 2.0 {
        return Err(Error::regime(format!("‖E‖ = {} exceeds δ/2 = {}", problem.e_norm, delta / 2.0)));
    }
    let lam1 = problem.lam()[0];
    let sl = (l as f64).sqrt();
    let e = problem.e_norm;
    Ok((4.0 * (2.0 * l as f64).sqrt() / delta * lam1 + sl) * e + params.eps * sl * (lam1 + e) / 4.0)
}

/// The two forms of the limit envelope `|d(∞) − λ₊^{1/N}|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// `(1/N)(min{λ̃₊, λ₊})^{1/N}‖E‖`.
    pub stated: f64,
    /// `(1/N)a^{1/N − 1}|λ̃₊ − λ₊|` with `a = min{λ̃₊, λ₊}`.
    pub mean_value: f64,
}

pub fn convergence_envelope(lam: f64, lam_tilde: f64, e_norm: f64, cfg: &DynamicsConfig) -> Result<Envelope> {
    cfg.validate()?;
    if cfg.depth < 2 {
        return Err(Error::input("use linear_envelope for N = 1"));
    }
    let limit = step_size_bounds(lam_tilde, cfg).convergence;
    if !(cfg.eta < limit) {
        return Err(Error::regime(format!("η = {} is not below {limit}", cfg.eta)));
    }
    let nf = cfg.depth as f64;
    let (lp, ltp) = (pos(lam), pos(lam_tilde));
    let a = lp.min(ltp);
    let stated = a.powf(1.0 / nf) * e_norm / nf;
    let diff = (ltp - lp).abs();
    let mean_value = if diff == 0.0 {
        0.0
    } else if a == 0.0 {
        f64::INFINITY
    } else {
        a.powf(1.0 / nf - 1.0) * diff / nf
    };
    Ok(Envelope { stated, mean_value })
}

/// `(1 − η)^k |α − λ̃| + ‖E‖`, the depth-1 envelope on `|d(k) − λ|`.
pub fn linear_envelope(k: usize, lam_tilde: f64, e_norm: f64, cfg: &DynamicsConfig) -> Result<f64> {
    if cfg.depth != 1 {
        return Err(Error::input("linear envelope is for N = 1"));
    }
    if !(cfg.eta > 0.0 && cfg.eta < 1.0) {
        return Err(Error::regime("need η ∈ (0, 1)"));
    }
    Ok((1.0 - cfg.eta).powi(k as i32) * (cfg.alpha - lam_tilde).abs() + e_norm)
}

/// Relative round-off allowance when comparing a measurement to a bound.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// The measured value must not exceed the bound.
    Upper,
    /// The measured value must not fall below the bound.
    Lower,
}

/// One theoretical bound against its measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub index: Option<usize>,
    pub kind: BoundKind,
    pub theoretical: f64,
    pub empirical: f64,
    pub hypothesis_ok: bool,
    /// False for quantities reported for information only.
    pub asserted: bool,
    /// Distance to the bound, positive when it holds.
    pub margin: f64,
    pub note: Option<String>,
}

impl BoundCheck {
    pub fn upper(name: &str, theoretical: f64, empirical: f64, hypothesis_ok: bool) -> Self {
        Self::build(name, BoundKind::Upper, theoretical, empirical, hypothesis_ok)
    }

    pub fn lower(name: &str, theoretical: f64, empirical: f64, hypothesis_ok: bool) -> Self {
        Self::build(name, BoundKind::Lower, theoretical, empirical, hypothesis_ok)
    }

    /// A bound that could not be evaluated; recorded with its reason.
    pub fn skipped(name: &str, reason: impl Into<String>) -> Self {
        let mut c = Self::build(name, BoundKind::Upper, f64::NAN, f64::NAN, false);
        c.note = Some(reason.into());
        c
    }

    fn build(name: &str, kind: BoundKind, theoretical: f64, empirical: f64, hypothesis_ok: bool) -> Self {
        let margin = match kind {
            BoundKind::Upper => theoretical - empirical,
            BoundKind::Lower => empirical - theoretical,
        };
        Self {
            name: name.to_string(),
            index: None,
            kind,
            theoretical,
            empirical,
            hypothesis_ok,
            asserted: true,
            margin,
            note: None,
        }
    }

    pub fn at(mut self, index: usize) -> Self {
        self.index = Some(index);
        self
    }

    pub fn informational(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// The bound holds up to floating-point round-off
    /// ([`BOUND_SLACK`] relative to the larger of 1 and both magnitudes).
    pub fn holds(&self) -> bool {
        let scale = 1f64.max(self.theoretical.abs()).max(self.empirical.abs());
        self.margin >= -BOUND_SLACK * scale
    }

    /// An asserted check whose hypotheses hold but whose bound fails.
    pub fn is_violation(&self) -> bool {
        self.asserted && self.hypothesis_ok && !self.holds()
    }
}

/// All bounds for one `(Ŵ, E, params)` instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub seed: u64,
    pub sigma: f64,
    pub e_norm: f64,
    /// Envelope `C·σ(√n + √ln(4/δ'))` for reference.
    pub e_norm_envelope: f64,
    pub rank: usize,
    pub eps_tilde: f64,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub t0_tilde: Option<f64>,
    pub t1_tilde: Option<f64>,
    pub horizon: usize,
    pub checks: Vec<BoundCheck>,
}

impl StabilityReport {
    pub fn violations(&self) -> Vec<&BoundCheck> {
        self.checks.iter().filter(|c| c.is_violation()).collect()
    }

    pub fn find(&self, name: &str) -> impl Iterator<Item = &BoundCheck> {
        let name = name.to_string();
        self.checks.iter().filter(move |c| c.name == name)
    }
}

/// Options for [`evaluate_stability`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// Accuracy used for hitting times in the recovery and sandwich checks.
    pub eps_tilde: f64,
    /// Extra iterations simulated past the last event of interest.
    pub pad: usize,
    /// Hard cap on the simulated horizon.
    pub max_horizon: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { eps_tilde: 1e-3, pad: 200, max_horizon: 100_000 }
    }
}

fn record<T>(checks: &mut Vec<BoundCheck>, name: &str, r: Result<T>, f: impl FnOnce(T) -> BoundCheck) {
    match r {
        Ok(v) => checks.push(f(v)),
        Err(e) => checks.push(BoundCheck::skipped(name, e.to_string())),
    }
}

/// Samples `E`, simulates gradient descent on `W̃ = Ŵ + E`, and compares
/// every bound with its measurement.
pub fn evaluate_stability(
    w_hat: &SymMatrix,
    noise: &NoiseModel,
    params: &WindowParams,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    params.validate()?;
    let problem = PerturbedProblem::sample(w_hat.clone(), noise, params.depth, params.alpha)?;
    evaluate_problem(&problem, noise, params, opts)
}

/// As [`evaluate_stability`] for an already constructed problem; `noise` is
/// used only for the metadata and the reference envelope.
pub fn evaluate_problem(
    problem: &PerturbedProblem,
    noise: &NoiseModel,
    params: &WindowParams,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    let n = problem.n();
    let l = params.rank;
    if l == 0 || l >= n {
        return Err(Error::input(format!("rank {l} outside 1..{n}")));
    }
    let lam = problem.lam().to_vec();
    let lam_t = problem.lam_tilde().to_vec();
    let e_norm = problem.e_norm;
    let nf = params.depth as f64;
    let mut checks = Vec::new();

    let weyl = lam.iter().zip(&lam_t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    checks.push(BoundCheck::upper("weyl", e_norm, weyl, true));

    for i in 0..n {
        let gap = problem.gap_at(i);
        let v = problem.decomp_hat.vector(i);
        let vt = problem.decomp_tilde.vector(i);
        let degenerate = gap <= problem.decomp_hat.degenerate_tol();
        let in_regime = !degenerate && e_norm <= gap / 2.0;
        let sin = sin_theta(&v, &vt)?;
        let dist = eigvec_distance(&v, &vt);
        if degenerate {
            checks.push(BoundCheck::skipped("davis_kahan", "repeated eigenvalue").at(i));
            checks.push(BoundCheck::skipped("eigvec_distance", "repeated eigenvalue").at(i));
            continue;
        }
        checks.push(BoundCheck::upper("davis_kahan", davis_kahan_bound(e_norm, gap)?, sin, in_regime).at(i));
        let chord = eigvec_distance_bound(e_norm, gap).unwrap_or(f64::NAN);
        checks.push(BoundCheck::upper("eigvec_distance", chord, dist, in_regime).at(i));
    }

    // Windows.
    let t0 = timing::t0(&lam[..l], params).ok();
    let t1 = timing::t1(lam[l], params).ok();
    let tilde = perturbed_window(&lam_t, params);
    let (t0_tilde, t1_tilde) = match &tilde {
        Ok((a, b)) => (Some(*a), Some(*b)),
        Err(_) => (None, None),
    };
    if let (Some(t0), Some(t1), Some(t0t), Some(t1t)) = (t0, t1, t0_tilde, t1_tilde) {
        record(&mut checks, "t1_shift", t1_shift_bound(lam[l], e_norm, params), |b| {
            BoundCheck::upper("t1_shift", b, (t1t - t1).abs(), true)
        });
        record(&mut checks, "t0_shift", t0_shift_bound(lam[l], e_norm, params), |b| {
            BoundCheck::upper("t0_shift", b, (t0t - t0).abs(), true)
        });
    } else {
        let why = tilde.as_ref().err().map_or("noiseless window undefined".to_string(), |e| e.to_string());
        checks.push(BoundCheck::skipped("t1_shift", why.clone()));
        checks.push(BoundCheck::skipped("t0_shift", why));
    }

    // Limit envelopes: the limit of channel i is exactly (λ̃_i)₊^{1/N}.
    let cfg =
        DynamicsConfig { depth: params.depth, eta: params.eta, alpha: params.alpha, max_iters: 1, record_every: 1 };
    for i in 0..n {
        let measured = problem.beta[i];
        match convergence_envelope(lam[i], lam_t[i], e_norm, &cfg) {
            Ok(env) => {
                checks.push(BoundCheck::upper("envelope_mean_value", env.mean_value, measured, true).at(i));
                checks.push(BoundCheck::upper("envelope_stated", env.stated, measured, true).at(i).informational());
            }
            Err(e) => checks.push(BoundCheck::skipped("envelope_mean_value", e.to_string()).at(i)),
        }
    }

    // Iteration sandwich on the leading channels.
    let sandwich_horizon = opts.max_horizon;
    for i in 0..l {
        match iteration_sandwich(lam[i], lam_t[i], opts.eps_tilde, params, sandwich_horizon) {
            Ok(s) => {
                if let (Some(t), Some(tt)) = (s.empirical_t, s.empirical_t_tilde) {
                    checks.push(BoundCheck::upper("sandwich_order", tt as f64, t as f64, true).at(i));
                }
                if let (Some(u), Some(tt)) = (s.upper, s.empirical_t_tilde) {
                    checks.push(BoundCheck::upper("sandwich_upper", u, tt as f64, u >= 0.0).at(i));
                }
                if let (Some(lo), Some(t2)) = (s.lower, s.empirical_t_tilde_2beta) {
                    checks.push(BoundCheck::lower("sandwich_lower", lo, t2 as f64, true).at(i));
                }
            }
            Err(e) => checks.push(BoundCheck::skipped("sandwich_upper", e.to_string()).at(i)),
        }
    }

    // Full simulation on W̃.
    let recover: Vec<usize> = (0..=l.min(n - 1)).collect();
    let hit_cfg = DynamicsConfig { max_iters: opts.max_horizon, ..cfg };
    let mut predicted_hits = Vec::new();
    for &i in &recover {
        let root = pos(lam_t[i]).powf(1.0 / nf);
        predicted_hits.push(scalar_hitting_time(lam_t[i], &hit_cfg, root, opts.eps_tilde)?);
    }
    let window = match (t0_tilde, t1_tilde) {
        (Some(a), Some(b)) if a < b && b.floor() >= a.max(0.0).ceil() => {
            Some((a.max(0.0).ceil() as usize, b.floor() as usize))
        }
        _ => None,
    };
    let mut horizon = predicted_hits.iter().flatten().copied().max().unwrap_or(0);
    if let Some((_, hi)) = window {
        horizon = horizon.max(hi);
    }
    let horizon = (horizon + opts.pad).min(opts.max_horizon);

    let basis_t = problem.decomp_tilde.vectors().clone();
    let roots_t: Vec<f64> = recover.iter().map(|&i| pos(lam_t[i]).powf(1.0 / nf)).collect();
    let mut measured_hit: Vec<Option<usize>> = vec![None; recover.len()];
    let mut recovery_err = vec![0.0f64; recover.len()];
    let r_hat_l = timing::truncated_effective_rank(&lam, l)?;
    let w_hat_l = crate::spectral::best_rank_l(&problem.decomp_hat, l)?;
    let mut rank_dev = f64::NEG_INFINITY;
    let mut approx_err = f64::NEG_INFINITY;
    let mut sim_error: Option<Error> = None;

    let sim_cfg = DynamicsConfig { max_iters: horizon.max(1), ..cfg };
    let run = run_factor_gd(&problem.w_tilde, &sim_cfg, |k, chain| {
        if sim_error.is_some() {
            return;
        }
        let w = chain.product();
        for (slot, &i) in recover.iter().enumerate() {
            if measured_hit[slot].is_none() {
                let vt = basis_t.column(i);
                let d = (vt.transpose() * &chain.factors[0] * vt)[(0, 0)];
                if (d - roots_t[slot]).abs() <= opts.eps_tilde {
                    measured_hit[slot] = Some(k);
                }
            }
            if measured_hit[slot].is_some() {
                let v = problem.decomp_hat.vectors().column(i);
                let val = (v.transpose() * &w * v)[(0, 0)];
                recovery_err[slot] = recovery_err[slot].max((val - pos(lam[i])).abs());
            }
        }
        if let Some((lo, hi)) = window {
            if k >= lo && k <= hi {
                let sym = match SymMatrix::from_upper(w) {
                    Ok(s) => s,
                    Err(e) => {
                        sim_error = Some(e);
                        return;
                    }
                };
                match eigendecompose(&sym) {
                    Ok(d) => {
                        if let Ok(r) = d.effective_rank() {
                            rank_dev = rank_dev.max((r_hat_l - r).abs());
                        }
                        if let Ok(wl) = crate::spectral::best_rank_l(&d, l) {
                            if let Ok(diff) = wl.sub(&w_hat_l) {
                                approx_err = approx_err.max(diff.frobenius_norm());
                            }
                        }
                    }
                    Err(e) => sim_error = Some(e),
                }
            }
        }
    });
    run?;
    if let Some(e) = sim_error {
        return Err(e);
    }

    for (slot, &i) in recover.iter().enumerate() {
        let name = "eigen_recovery";
        match (eigen_recovery_bound(problem, i, opts.eps_tilde, params), measured_hit[slot]) {
            (Ok(b), Some(k)) => checks.push(
                BoundCheck::upper(name, b, recovery_err[slot], true)
                    .at(i)
                    .with_note(format!("measured from k = {k} to {horizon}")),
            ),
            (Ok(_), None) => checks.push(BoundCheck::skipped(name, "channel did not reach accuracy").at(i)),
            (Err(e), _) => checks.push(BoundCheck::skipped(name, e.to_string()).at(i)),
        }
    }
    match window {
        Some((lo, hi)) => {
            let note = format!("k in [{lo}, {hi}]");
            record(&mut checks, "effective_rank", effective_rank_stability_bound(problem, params), |b| {
                BoundCheck::upper("effective_rank", b, rank_dev, true).with_note(note.clone())
            });
            record(&mut checks, "approx_error", approx_error_bound(problem, params), |b| {
                BoundCheck::upper("approx_error", b, approx_err, true).with_note(note.clone())
            });
        }
        None => {
            let why = "perturbed window is empty or undefined";
            checks.push(BoundCheck::skipped("effective_rank", why));
            checks.push(BoundCheck::skipped("approx_error", why));
        }
    }

    Ok(StabilityReport {
        seed: noise.seed,
        sigma: noise.sigma,
        e_norm,
        e_norm_envelope: e_norm_bound(noise)?,
        rank: l,
        eps_tilde: opts.eps_tilde,
        t0,
        t1,
        t0_tilde,
        t1_tilde,
        horizon,
        checks,
    })
}
