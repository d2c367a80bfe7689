//! The four pipelines behind the CLI subcommands. Each `run_*` function is
//! pure (config in, data out); [`execute`] adds file emission and the
//! manifest.

use std::fmt::Write as _;
use std::path::Path;

use irlab_core::dynamics::{run_factor_gd, simulate_matrix, DynamicsConfig, TrajectoryRecord};
use irlab_core::perturbation::{
    evaluate_problem, evaluate_stability, perturbed_window, sample_noise, NoiseModel, PerturbedProblem,
    StabilityOptions, StabilityReport,
};
use irlab_core::spectral::{effective_rank_of_spectrum, random_orthogonal, SpectrumSpec, SymMatrix};
use irlab_core::timing::{self, k_epsilon, window_verdict, WindowVerdict};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Emit, ExperimentConfig, Sweep, SweepPoint, MAX_AUTO_HORIZON};
use crate::output::{self, fmt_f64, slug, OutDir};
use crate::svg::{Band, Plot, Series};
use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Certify,
    Observe,
    Noise,
    Bounds,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Observe => "observe",
            Command::Noise => "noise",
            Command::Bounds => "bounds",
        }
    }
}

/// Target matrix of one sweep point together with its exact eigenpairs.
#[derive(Debug, Clone)]
pub struct Target {
    pub spectrum: Vec<f64>,
    pub basis: DMatrix<f64>,
    pub w_hat: SymMatrix,
}

pub fn build_target(cfg: &ExperimentConfig, leading: &[f64]) -> Result<Target, AppError> {
    let spec = SpectrumSpec { leading: leading.to_vec(), ..cfg.spectrum.clone() };
    let spectrum = spec.eigenvalues().map_err(|e| AppError::Config(e.to_string()))?;
    let basis = random_orthogonal(spec.n, spec.basis_seed);
    let w_hat = SymMatrix::from_eigenpairs(&basis, &spectrum).map_err(|e| AppError::Config(e.to_string()))?;
    Ok(Target { spectrum, basis, w_hat })
}

fn dynamics(cfg: &ExperimentConfig, eta: f64, horizon: usize) -> DynamicsConfig {
    DynamicsConfig {
        depth: cfg.dynamics.depth,
        eta,
        alpha: cfg.dynamics.alpha,
        max_iters: horizon,
        record_every: cfg.dynamics.record_every,
    }
}

// ---------------------------------------------------------------- observe

/// `|r(Ŵ_L) − r(W(k))|` over the recorded iterations inside `[⌈T0⌉, ⌊T1⌋]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Containment {
    pub first_k: usize,
    pub last_k: usize,
    pub checked: usize,
    pub max_deviation: f64,
    pub bound: f64,
    /// The window extends past the simulated horizon.
    pub truncated: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankVerdict {
    #[serde(flatten)]
    pub verdict: WindowVerdict,
    /// `r(Ŵ_L)`.
    pub target_eff_rank: f64,
    pub eff_rank_bound: Option<f64>,
    pub containment: Option<Containment>,
}

impl RankVerdict {
    /// Certified and confirmed on the trajectory.
    pub fn drawn_certified(&self) -> bool {
        self.verdict.certified && self.containment.as_ref().is_some_and(|c| c.pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservePoint {
    pub point: SweepPoint,
    pub horizon: usize,
    pub spectrum: Vec<f64>,
    #[serde(skip)]
    pub records: Vec<TrajectoryRecord>,
    pub verdicts: Vec<RankVerdict>,
}

fn containment(records: &[TrajectoryRecord], verdict: &WindowVerdict, target: f64, bound: f64) -> Option<Containment> {
    let (lo, hi) = verdict.iterations()?;
    let last_recorded = records.last().map_or(0, |r| r.k);
    let inside: Vec<f64> = records
        .iter()
        .filter(|r| r.k >= lo && r.k <= hi)
        .map(|r| r.eff_rank.map_or(f64::INFINITY, |e| (e - target).abs()))
        .collect();
    if inside.is_empty() {
        return None;
    }
    let max_deviation = inside.iter().copied().fold(0.0, f64::max);
    Some(Containment {
        first_k: lo,
        last_k: hi,
        checked: inside.len(),
        max_deviation,
        bound,
        truncated: hi > last_recorded,
        pass: max_deviation <= bound,
    })
}

pub fn observe_point(cfg: &ExperimentConfig, point: &SweepPoint) -> Result<ObservePoint, AppError> {
    let target = build_target(cfg, &point.leading)?;
    let horizon = cfg.horizon(&target.spectrum, point.eta);
    let dcfg = dynamics(cfg, point.eta, horizon);
    let records =
        simulate_matrix(&target.w_hat, &target.basis, &dcfg).map_err(|e| AppError::from_core(&point.label, e))?;
    let mut verdicts = Vec::new();
    for &rank in &cfg.window.ranks {
        let params = cfg.window_params(rank, point.eta);
        let verdict = window_verdict(&target.spectrum, &params).map_err(|e| AppError::from_core(&point.label, e))?;
        let target_eff_rank = timing::truncated_effective_rank(&target.spectrum, rank)
            .map_err(|e| AppError::from_core(&point.label, e))?;
        let eff_rank_bound = timing::effective_rank_bound(&target.spectrum, &params).ok();
        let containment = eff_rank_bound.and_then(|b| containment(&records, &verdict, target_eff_rank, b));
        verdicts.push(RankVerdict { verdict, target_eff_rank, eff_rank_bound, containment });
    }
    Ok(ObservePoint { point: point.clone(), horizon, spectrum: target.spectrum, records, verdicts })
}

/// Simulates every sweep point (in parallel) and evaluates its windows.
pub fn run_observability(cfg: &ExperimentConfig) -> Result<Vec<ObservePoint>, AppError> {
    cfg.validate()?;
    cfg.sweep_points().par_iter().map(|p| observe_point(cfg, p)).collect()
}

pub fn observe_csv(point: &ObservePoint, n: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ["sweep_id", "k", "eff_rank", "loss"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=n).map(|i| format!("d_{i}")));
    let rows = point
        .records
        .iter()
        .map(|r| {
            let mut row = vec![
                point.point.label.clone(),
                r.k.to_string(),
                r.eff_rank.map_or("NaN".into(), fmt_f64),
                fmt_f64(r.loss),
            ];
            row.extend(r.diag.iter().map(|&d| fmt_f64(d)));
            row
        })
        .collect();
    (header, rows)
}

fn window_bands(verdicts: &[RankVerdict]) -> Vec<Band> {
    verdicts
        .iter()
        .filter(|v| v.verdict.nonempty)
        .map(|v| {
            let status = if v.drawn_certified() { "certified" } else { "uncertified" };
            Band {
                x0: v.verdict.t0,
                x1: v.verdict.t1,
                label: format!("L={} [{:.0}, {:.0}] {status}", v.verdict.rank, v.verdict.t0, v.verdict.t1),
            }
        })
        .collect()
}

pub fn observe_svg(cfg: &ExperimentConfig, point: &ObservePoint) -> String {
    Plot {
        title: format!("Effective rank, {}", point.point.label),
        x_label: "iteration k".into(),
        y_label: "effective rank r(W(k))".into(),
        log_x: cfg.log_x,
        series: vec![Series {
            name: "r(W(k))".into(),
            points: point.records.iter().filter_map(|r| r.eff_rank.map(|e| (r.k as f64, e))).collect(),
        }],
        bands: window_bands(&point.verdicts),
    }
    .render()
}

// ------------------------------------------------------------------ noise

#[derive(Debug, Clone, Serialize)]
pub struct NoiseLevel {
    pub c: f64,
    pub sigma: f64,
    pub seed: u64,
    pub e_norm: f64,
    pub terminal_frob_err: f64,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub t0_tilde: Option<f64>,
    pub t1_tilde: Option<f64>,
    /// `λ_{L+1}` and `λ̃_{L+1}` for the report rank L.
    pub lam_next: f64,
    pub lam_next_tilde: f64,
    /// `λ̃_{L+1} > λ_{L+1}`: the case in which noise shortens the plateau.
    pub lam_next_moved_up: bool,
    pub stability: Option<StabilityReport>,
    pub stability_error: Option<String>,
    /// `(k, ‖W(k) − Ŵ‖_F, r(W(k)))`.
    #[serde(skip)]
    pub samples: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseReport {
    pub rank: usize,
    pub eta: f64,
    pub horizon: usize,
    pub levels: Vec<NoiseLevel>,
    /// Terminal `‖W(k) − Ŵ‖_F` strictly increases with c.
    pub frob_err_increasing: bool,
    /// `T̃1` strictly decreases across consecutive levels whose `λ̃_{L+1}`
    /// moved up (and lies below the noiseless `T1`).
    pub t1_tilde_decreasing: Option<bool>,
    /// Levels (c > 0) where `λ̃_{L+1}` moved down, so a later exit is expected.
    pub moved_down_levels: Vec<f64>,
}

impl NoiseReport {
    pub fn violations(&self) -> usize {
        self.levels.iter().filter_map(|l| l.stability.as_ref()).map(|s| s.violations().len()).sum()
    }
}

fn stability_options(cfg: &ExperimentConfig) -> StabilityOptions {
    StabilityOptions { eps_tilde: cfg.noise.eps_tilde, max_horizon: MAX_AUTO_HORIZON, ..StabilityOptions::default() }
}

fn noise_model(cfg: &ExperimentConfig, c: f64, seed: u64) -> NoiseModel {
    let n = cfg.spectrum.n;
    NoiseModel { sigma: c / (n as f64).sqrt(), seed, n, delta_prime: cfg.noise.delta_prime, c_abs: cfg.noise.c_abs }
}

fn noise_level(cfg: &ExperimentConfig, target: &Target, c: f64, horizon: usize) -> Result<NoiseLevel, AppError> {
    let label = format!("c={c}");
    let core = |e| AppError::from_core(&label, e);
    let seed = cfg.noise.seed;
    let model = noise_model(cfg, c, seed);
    let e = sample_noise(&model).map_err(core)?;
    let problem =
        PerturbedProblem::new(target.w_hat.clone(), e, cfg.dynamics.depth, cfg.dynamics.alpha).map_err(core)?;
    // Any eigenbasis of W̃ diagonalizes the iterates; without noise the
    // synthesis basis is reused so the trajectory matches `observe` exactly.
    let basis = if problem.e.is_zero() { target.basis.clone() } else { problem.decomp_tilde.vectors().clone() };

    let eta = cfg.dynamics.eta;
    let dcfg = dynamics(cfg, eta, horizon);
    let depth = dcfg.depth as i32;
    let mut samples = Vec::new();
    run_factor_gd(&problem.w_tilde, &dcfg, |k, chain| {
        if k % dcfg.record_every != 0 && k != dcfg.max_iters {
            return;
        }
        let err = (chain.product() - target.w_hat.as_matrix()).norm();
        let d = basis.transpose() * &chain.factors[0] * &basis;
        let eig: Vec<f64> = (0..d.nrows()).map(|i| d[(i, i)].powi(depth)).collect();
        samples.push((k, err, effective_rank_of_spectrum(&eig).unwrap_or(f64::NAN)));
    })
    .map_err(core)?;

    let rank = cfg.noise.rank;
    let params = cfg.window_params(rank, eta);
    let t0 = timing::t0(&target.spectrum[..rank], &params).ok();
    let t1 = timing::t1(target.spectrum[rank], &params).ok();
    let window_tilde = perturbed_window(problem.lam_tilde(), &params).ok();
    let (stability, stability_error) = match evaluate_problem(&problem, &model, &params, &stability_options(cfg)) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(NoiseLevel {
        c,
        sigma: model.sigma,
        seed,
        e_norm: problem.e_norm,
        terminal_frob_err: samples.last().map_or(f64::NAN, |s| s.1),
        t0,
        t1,
        t0_tilde: window_tilde.map(|w| w.0),
        t1_tilde: window_tilde.map(|w| w.1),
        lam_next: target.spectrum[rank],
        lam_next_tilde: problem.lam_tilde()[rank],
        lam_next_moved_up: problem.lam_tilde()[rank] > target.spectrum[rank],
        stability,
        stability_error,
        samples,
    })
}

/// Perturbed runs at every noise level (in parallel), all against the
/// noiseless target `Ŵ`.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<NoiseReport, AppError> {
    cfg.validate()?;
    if cfg.sweep != Sweep::None {
        return Err(AppError::Config("a noise sweep cannot be combined with an eta or leading sweep".into()));
    }
    if cfg.noise.levels.is_empty() {
        return Err(AppError::Config("noise.levels is empty".into()));
    }
    let target = build_target(cfg, &cfg.spectrum.leading)?;
    let eta = cfg.dynamics.eta;
    let horizon = cfg.horizon(&target.spectrum, eta);
    let levels: Vec<NoiseLevel> =
        cfg.noise.levels.par_iter().map(|&c| noise_level(cfg, &target, c, horizon)).collect::<Result<_, _>>()?;

    let mut by_c: Vec<&NoiseLevel> = levels.iter().collect();
    by_c.sort_by(|a, b| a.c.total_cmp(&b.c));
    let frob_err_increasing = by_c.windows(2).all(|w| w[1].terminal_frob_err > w[0].terminal_frob_err);
    let up: Vec<f64> = by_c.iter().filter(|l| l.c > 0.0 && l.lam_next_moved_up).filter_map(|l| l.t1_tilde).collect();
    let base_t1 = by_c.first().and_then(|l| l.t1);
    let t1_tilde_decreasing =
        (!up.is_empty()).then(|| up.windows(2).all(|w| w[1] < w[0]) && base_t1.is_none_or(|t| up[0] < t));
    let moved_down_levels = by_c.iter().filter(|l| l.c > 0.0 && !l.lam_next_moved_up).map(|l| l.c).collect();
    Ok(NoiseReport {
        rank: cfg.noise.rank,
        eta,
        horizon,
        levels,
        frob_err_increasing,
        t1_tilde_decreasing,
        moved_down_levels,
    })
}

pub fn noise_csvs(report: &NoiseReport) -> [(Vec<String>, Vec<Vec<String>>); 2] {
    let h = |c: &str| vec!["level".to_string(), "k".to_string(), c.to_string()];
    let mut frob = Vec::new();
    let mut rank = Vec::new();
    for l in &report.levels {
        for &(k, e, r) in &l.samples {
            frob.push(vec![fmt_f64(l.c), k.to_string(), fmt_f64(e)]);
            rank.push(vec![fmt_f64(l.c), k.to_string(), fmt_f64(r)]);
        }
    }
    [(h("frob_err"), frob), (h("eff_rank"), rank)]
}

fn noise_svg(cfg: &ExperimentConfig, report: &NoiseReport, which: usize) -> String {
    let (title, y_label) = match which {
        0 => ("Approximation error under noise", "‖W(k) − Ŵ‖_F"),
        _ => ("Effective rank under noise", "effective rank r(W(k))"),
    };
    let series = report
        .levels
        .iter()
        .map(|l| Series {
            name: format!("c = {}", l.c),
            points: l.samples.iter().map(|s| (s.0 as f64, if which == 0 { s.1 } else { s.2 })).collect(),
        })
        .collect();
    let bands = report
        .levels
        .iter()
        .filter_map(|l| Some((l, l.t0_tilde?, l.t1_tilde?)))
        .filter(|(_, a, b)| a < b)
        .map(|(l, a, b)| Band { x0: a, x1: b, label: format!("c={} L={} window", l.c, report.rank) })
        .collect();
    Plot {
        title: title.into(),
        x_label: "iteration k".into(),
        y_label: y_label.into(),
        log_x: cfg.log_x,
        series,
        bands,
    }
    .render()
}

// ---------------------------------------------------------------- certify

#[derive(Debug, Clone, Serialize)]
pub struct CertifyPoint {
    pub label: String,
    pub eta: f64,
    pub k_eps: f64,
    pub spectrum_head: Vec<f64>,
    pub verdicts: Vec<WindowVerdict>,
}

pub fn certify(cfg: &ExperimentConfig) -> Result<Vec<CertifyPoint>, AppError> {
    cfg.validate()?;
    let k_eps = k_epsilon(cfg.window.eps).map_err(|e| AppError::Config(e.to_string()))?;
    cfg.sweep_points()
        .iter()
        .map(|p| {
            let target = build_target(cfg, &p.leading)?;
            let verdicts = cfg
                .window
                .ranks
                .iter()
                .map(|&rank| {
                    window_verdict(&target.spectrum, &cfg.window_params(rank, p.eta))
                        .map_err(|e| AppError::from_core(&p.label, e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let head =
                target.spectrum.iter().take(cfg.window.ranks.iter().max().copied().unwrap_or(1) + 1).copied().collect();
            Ok(CertifyPoint { label: p.label.clone(), eta: p.eta, k_eps, spectrum_head: head, verdicts })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.6}"))
}

pub fn render_certify(points: &[CertifyPoint], cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    for p in points {
        let _ = writeln!(s, "== {} ==", p.label);
        let _ = writeln!(
            s,
            "eps = {}  eps' = {}  alpha = {}  eta = {}  K_eps = {:.6}",
            cfg.window.eps, cfg.window.eps_prime, cfg.dynamics.alpha, p.eta, p.k_eps
        );
        let _ = writeln!(s, "leading spectrum: {:?}", p.spectrum_head);
        for v in &p.verdicts {
            let _ = writeln!(s, "-- rank L = {} --", v.rank);
            for g in &v.gap_checks {
                let _ = writeln!(
                    s,
                    "  gap ({}, {}): actual {:.6}  required {:.6} (m = {})  {}",
                    g.lam_hi,
                    g.lam_lo,
                    g.actual,
                    g.required,
                    g.level_diff,
                    if g.pass { "ok" } else { "FAILS" }
                );
            }
            let _ = writeln!(
                s,
                "  alpha* = {}  (alpha*)^2 = {}  eta* = {}",
                opt(v.alpha_star),
                opt(v.alpha_star.map(|a| a * a)),
                opt(v.eta_star)
            );
            let _ = writeln!(s, "  T0 = {:.6}  T1 = {:.6}  L' = {}  L'' = {}", v.t0, v.t1, v.l_prime, v.l_dprime);
            let status = match (v.nonempty, v.certified) {
                (true, true) => "nonempty, certified",
                (true, false) => "nonempty, NOT certified",
                _ => "EMPTY",
            };
            let _ = writeln!(s, "  verdict: {status}");
            for r in &v.failure_reasons {
                let _ = writeln!(s, "  violated: {r}");
            }
        }
    }
    s
}

// ----------------------------------------------------------------- bounds

#[derive(Debug, Clone, Default, Serialize, PartialEq, Eq)]
pub struct BoundsSummary {
    pub runs: usize,
    pub checks: usize,
    pub asserted_with_hypotheses: usize,
    pub skipped: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub rank: usize,
    pub levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub summary: BoundsSummary,
    pub reports: Vec<StabilityReport>,
}

pub fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.noise.seeds as u64).map(|i| cfg.noise.seed + i).collect()
}

/// Stability reports for every `(c, seed)` with `c > 0`, in parallel.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<BoundsReport, AppError> {
    cfg.validate()?;
    let target = build_target(cfg, &cfg.spectrum.leading)?;
    let levels: Vec<f64> = cfg.noise.levels.iter().copied().filter(|&c| c > 0.0).collect();
    let seeds = seeds(cfg);
    let jobs: Vec<(f64, u64)> = levels.iter().flat_map(|&c| seeds.iter().map(move |&s| (c, s))).collect();
    let params = cfg.window_params(cfg.noise.rank, cfg.dynamics.eta);
    let opts = stability_options(cfg);
    let reports: Vec<StabilityReport> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            evaluate_stability(&target.w_hat, &noise_model(cfg, c, seed), &params, &opts)
                .map_err(|e| AppError::from_core(&format!("c={c} seed={seed}"), e))
        })
        .collect::<Result<_, _>>()?;
    let mut summary = BoundsSummary { runs: reports.len(), ..Default::default() };
    for r in &reports {
        summary.checks += r.checks.len();
        summary.asserted_with_hypotheses += r.checks.iter().filter(|c| c.asserted && c.hypothesis_ok).count();
        summary.skipped += r.checks.iter().filter(|c| c.theoretical.is_nan()).count();
        summary.violations += r.violations().len();
    }
    Ok(BoundsReport { rank: cfg.noise.rank, levels, seeds, summary, reports })
}

pub fn bounds_csv(report: &BoundsReport) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "seed",
        "sigma",
        "e_norm",
        "check",
        "index",
        "kind",
        "theoretical",
        "empirical",
        "hypothesis_ok",
        "asserted",
        "holds",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = Vec::new();
    for r in &report.reports {
        for c in &r.checks {
            rows.push(vec![
                r.seed.to_string(),
                fmt_f64(r.sigma),
                fmt_f64(r.e_norm),
                c.name.clone(),
                c.index.map_or(String::new(), |i| i.to_string()),
                format!("{:?}", c.kind).to_lowercase(),
                fmt_f64(c.theoretical),
                fmt_f64(c.empirical),
                c.hypothesis_ok.to_string(),
                c.asserted.to_string(),
                c.holds().to_string(),
            ]);
        }
    }
    (header, rows)
}

// ---------------------------------------------------------------- execute

/// Result of [`execute`]: text for stdout and the reasons a strict run fails.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub stdout: String,
    pub regime_failures: Vec<String>,
    pub files: Vec<String>,
}

/// Runs `command`, writes its outputs under `out_root` and finishes with
/// `manifest.json`.
pub fn execute(command: Command, cfg: &ExperimentConfig, out_root: &Path) -> Result<Outcome, AppError> {
    let started = chrono::Utc::now();
    cfg.validate()?;
    let mut out = OutDir::create(out_root)?;
    let mut outcome = Outcome::default();
    let mut horizon = None;
    let mut seeds_used = vec![cfg.spectrum.basis_seed];

    match command {
        Command::Certify => {
            let points = certify(cfg)?;
            outcome.stdout = render_certify(&points, cfg);
            for p in &points {
                for v in p.verdicts.iter().filter(|v| !v.certified) {
                    outcome.regime_failures.push(format!("{} L={}: window not certified", p.label, v.rank));
                }
            }
            if cfg.emits(Emit::Report) {
                output::write_json(&out.file("certify.json"), &points)?;
            }
        }
        Command::Observe => {
            let points = run_observability(cfg)?;
            let n = cfg.spectrum.n;
            for p in &points {
                let name = slug(&p.point.label);
                horizon = Some(horizon.map_or(p.horizon, |h: usize| h.max(p.horizon)));
                if cfg.emits(Emit::Csv) {
                    let (h, rows) = observe_csv(p, n);
                    output::write_csv(&out.file(&format!("observe_{name}.csv")), &h, &rows)?;
                }
                if cfg.emits(Emit::Report) {
                    output::write_json(&out.file(&format!("verdicts_{name}.json")), p)?;
                }
                if cfg.emits(Emit::Svg) {
                    output::write_text(&out.file(&format!("observe_{name}.svg")), &observe_svg(cfg, p))?;
                }
                let _ = writeln!(outcome.stdout, "{} (horizon {}):", p.point.label, p.horizon);
                for v in &p.verdicts {
                    let c = v.containment.as_ref();
                    let _ = writeln!(
                        outcome.stdout,
                        "  L={} T0={:.2} T1={:.2} nonempty={} certified={} containment={}",
                        v.verdict.rank,
                        v.verdict.t0,
                        v.verdict.t1,
                        v.verdict.nonempty,
                        v.verdict.certified,
                        c.map_or("n/a".to_string(), |c| format!(
                            "{} (max dev {:.3e} <= {:.3e})",
                            c.pass, c.max_deviation, c.bound
                        ))
                    );
                    if !v.verdict.certified {
                        outcome
                            .regime_failures
                            .push(format!("{} L={}: window not certified", p.point.label, v.verdict.rank));
                    } else if !v.drawn_certified() {
                        outcome.regime_failures.push(format!(
                            "{} L={}: certified window fails the containment cross-check",
                            p.point.label, v.verdict.rank
                        ));
                    }
                }
            }
        }
        Command::Noise => {
            let report = run_noise_sweep(cfg)?;
            horizon = Some(report.horizon);
            seeds_used.push(cfg.noise.seed);
            if cfg.emits(Emit::Csv) {
                let [(h1, r1), (h2, r2)] = noise_csvs(&report);
                output::write_csv(&out.file("noise_frob_err.csv"), &h1, &r1)?;
                output::write_csv(&out.file("noise_eff_rank.csv"), &h2, &r2)?;
            }
            if cfg.emits(Emit::Svg) {
                output::write_text(&out.file("noise_frob_err.svg"), &noise_svg(cfg, &report, 0))?;
                output::write_text(&out.file("noise_eff_rank.svg"), &noise_svg(cfg, &report, 1))?;
            }
            if cfg.emits(Emit::Report) {
                output::write_json(&out.file("noise_report.json"), &report)?;
            }
            for l in &report.levels {
                let _ = writeln!(
                    outcome.stdout,
                    "c={} ‖E‖={:.4} terminal err={:.6} T1~={} λ~_(L+1) moved {}",
                    l.c,
                    l.e_norm,
                    l.terminal_frob_err,
                    opt(l.t1_tilde),
                    if l.c == 0.0 {
                        "nowhere"
                    } else if l.lam_next_moved_up {
                        "up"
                    } else {
                        "down"
                    }
                );
            }
            let v = report.violations();
            if v > 0 {
                outcome.regime_failures.push(format!("{v} stability bound violations"));
            }
        }
        Command::Bounds => {
            let report = run_bounds(cfg)?;
            seeds_used.extend(&report.seeds);
            if cfg.emits(Emit::Csv) {
                let (h, rows) = bounds_csv(&report);
                output::write_csv(&out.file("bounds.csv"), &h, &rows)?;
            }
            if cfg.emits(Emit::Report) {
                output::write_json(&out.file("bounds.json"), &report)?;
            }
            let s = &report.summary;
            let _ = writeln!(
                outcome.stdout,
                "{} runs, {} checks ({} asserted with hypotheses, {} skipped), {} violations",
                s.runs, s.checks, s.asserted_with_hypotheses, s.skipped, s.violations
            );
            for r in &report.reports {
                for c in r.violations() {
                    outcome.regime_failures.push(format!(
                        "seed {} sigma {}: {}{} bound {:.6e} vs measured {:.6e}",
                        r.seed,
                        r.sigma,
                        c.name,
                        c.index.map_or(String::new(), |i| format!("[{i}]")),
                        c.theoretical,
                        c.empirical
                    ));
                }
            }
        }
    }

    output::write_manifest(&out, command.name(), cfg, seeds_used, horizon, started)?;
    outcome.files = out.written().to_vec();
    outcome.files.push("manifest.json".into());
    Ok(outcome)
}
