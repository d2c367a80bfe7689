//! Closed-form timing of the low-rank window for depth-2 factorizations.
//!
//! `T0` is the iteration after which the top-L eigenvalues have been fitted,
//! `T1` the iteration at which the (L+1)-th one starts to be picked up; the
//! iterate has effective rank close to that of the best rank-L approximation
//! for `k ∈ [T0, T1]`. This module evaluates both, the A/B/C decomposition
//! of the fitting time, the eigengap condition under which `T0` collapses to
//! its `λ_L` term, and the initialization / step-size thresholds `α*`, `η*`.
//!
//! All logarithms are natural. Spectra are passed in descending order and
//! indexed from 1 in the documentation (`λ_1` is `spectrum[0]`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|ln(1 − √(1/3))|`.
pub fn log_one_minus_inv_sqrt3() -> f64 {
    (1.0 - (1.0f64 / 3.0).sqrt()).ln().abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowParams {
    /// Target rank L.
    pub rank: usize,
    pub eps: f64,
    pub eps_prime: f64,
    pub alpha: f64,
    pub eta: f64,
    pub depth: usize,
}

impl Default for WindowParams {
    fn default() -> Self {
        Self { rank: 1, eps: 0.05, eps_prime: 0.1, alpha: 0.01, eta: 0.005, depth: 2 }
    }
}

impl WindowParams {
    /// `c_N = (N − 1)/(2N − 1)`.
    pub fn c_n(&self) -> f64 {
        let n = self.depth as f64;
        (n - 1.0) / (2.0 * n - 1.0)
    }

    pub fn with_rank(self, rank: usize) -> Self {
        Self { rank, ..self }
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::input("rank must be at least 1"));
        }
        if self.depth < 2 {
            return Err(Error::input("window analysis needs depth N >= 2"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::input(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.eps_prime > 0.0 && self.eps_prime < self.c_n()) {
            return Err(Error::input(format!("eps' must lie in (0, c_N = {}), got {}", self.c_n(), self.eps_prime)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::input("alpha must be positive"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::input("eta must be positive"));
        }
        Ok(())
    }

    fn alpha_n(&self) -> f64 {
        self.alpha.powi(self.depth as i32)
    }

    fn require_depth_two(&self) -> Result<()> {
        if self.depth != 2 {
            return Err(Error::regime(format!("closed-form timing needs N = 2, got N = {}", self.depth)));
        }
        Ok(())
    }

    /// Step-size hypothesis `η < 1/((3N−2)·max{α^{N−2}, λ_1^{2−2/N}})`.
    pub fn step_size_limit(&self, lam1: f64) -> f64 {
        let n = self.depth as f64;
        let m = self.alpha.powf(n - 2.0).max(lam1.max(0.0).powf(2.0 - 2.0 / n));
        1.0 / ((3.0 * n - 2.0) * m)
    }
}

/// `K_ε = ln(8/ε) − |ln(1 − √(1/3))|`.
pub fn k_epsilon(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::input(format!("eps must be positive, got {eps}")));
    }
    let k = (8.0 / eps).ln() - log_one_minus_inv_sqrt3();
    // Rounding can push the boundary value slightly below zero.
    if k < -1e-12 {
        return Err(Error::regime(format!("K_eps = {k} is negative for eps = {eps}")));
    }
    Ok(k.max(0.0))
}

/// `|ln(1 − 2ηλ/3)|`, requiring `0 < 2ηλ/3 < 1`.
fn log_contraction(eta: f64, lam: f64) -> Result<f64> {
    let q = 2.0 * eta * lam / 3.0;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::regime(format!("need 0 < (2/3)·η·λ < 1, got {q} for λ = {lam}")));
    }
    Ok((1.0 - q).ln().abs())
}

/// `⌈√(x/3)/α⌉`, the level z with `x ∈ I_z`.
pub fn level_index(x: f64, alpha: f64) -> u64 {
    ((x / 3.0).sqrt() / alpha).ceil() as u64
}

/// Fitting time of a single eigenvalue `λ` to accuracy `ε` (depth 2).
pub fn t2id(lam: f64, eps: f64, params: &WindowParams) -> Result<f64> {
    params.require_depth_two()?;
    let a2 = params.alpha * params.alpha;
    if !(lam > a2) {
        return Err(Error::regime(format!("need λ > α², got λ = {lam}, α² = {a2}")));
    }
    if !(eps > 0.0) {
        return Err(Error::input(format!("accuracy must be positive, got {eps}")));
    }
    let denom = log_contraction(params.eta, lam)?;
    let first = ((lam / a2 - 1.0).ln() - std::f64::consts::LN_2) / (2.0 * params.eta * lam);
    let middle = level_index(lam, params.alpha) as f64;
    let last = ((lam.sqrt() / eps).ln() - log_one_minus_inv_sqrt3()) / denom;
    Ok(first + middle + last)
}

/// `T(x) = t2id(x, √x·ε/8)`.
pub fn t_of_x(x: f64, params: &WindowParams) -> Result<f64> {
    t2id(x, x.sqrt() * params.eps / 8.0, params)
}

/// Candidates of the `T0` maximum: `t2id(λ_1, λ_1/2)` followed by
/// `T(λ_ℓ)` for `ℓ = 1..=L` where `L = leading.len()`.
pub fn t0_candidates(leading: &[f64], params: &WindowParams) -> Result<Vec<f64>> {
    if leading.is_empty() {
        return Err(Error::input("need at least one leading eigenvalue"));
    }
    if leading.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::input("leading eigenvalues must be strictly descending"));
    }
    let mut out = vec![t2id(leading[0], leading[0] / 2.0, params)?];
    for &lam in leading {
        out.push(t_of_x(lam, params)?);
    }
    Ok(out)
}

/// `T0({λ_ℓ}_{ℓ≤L})`: the maximum over all candidates.
pub fn t0(leading: &[f64], params: &WindowParams) -> Result<f64> {
    Ok(t0_candidates(leading, params)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// `T1(λ_{L+1}) = [ln(λ_{L+1}/α² − 1) − ln(1/ε' − 1)] / (2ηλ_{L+1})`.
pub fn t1(lam_next: f64, params: &WindowParams) -> Result<f64> {
    let a2 = params.alpha * params.alpha;
    if !(lam_next > a2) {
        return Err(Error::regime(format!("need λ_(L+1) > α², got {lam_next} ≤ {a2}")));
    }
    if !(params.eps_prime > 0.0 && params.eps_prime < 1.0) {
        return Err(Error::input("eps' must lie in (0, 1)"));
    }
    let h = (lam_next / a2 - 1.0).ln();
    let c = (1.0 / params.eps_prime - 1.0).ln();
    Ok((h - c) / (2.0 * params.eta * lam_next))
}

/// The three parts of `T(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub x: f64,
    pub a: f64,
    pub b: u64,
    pub c: f64,
    pub total: f64,
    pub level: u64,
    /// `x ∈ [α²/ε', 1/(4η)]`.
    pub domain_ok: bool,
}

/// `T(x) = A(x) + B(x) + C(x)` with domain flag; errors only when a term
/// is undefined.
pub fn decompose_t_unchecked(x: f64, params: &WindowParams) -> Result<TimingBreakdown> {
    params.require_depth_two()?;
    let a2 = params.alpha * params.alpha;
    if !(x > a2) {
        return Err(Error::regime(format!("need x > α², got {x}")));
    }
    let k = k_epsilon(params.eps)?;
    let a = ((x / a2 - 1.0).ln() - std::f64::consts::LN_2) / (2.0 * params.eta * x);
    let b = level_index(x, params.alpha);
    let c = k / log_contraction(params.eta, x)?;
    let lo = a2 / params.eps_prime;
    let hi = 1.0 / (4.0 * params.eta);
    Ok(TimingBreakdown { x, a, b, c, total: a + b as f64 + c, level: b, domain_ok: x >= lo && x <= hi })
}

/// As [`decompose_t_unchecked`] but refuses `x` outside `[α²/ε', 1/(4η)]`.
pub fn decompose_t(x: f64, params: &WindowParams) -> Result<TimingBreakdown> {
    let out = decompose_t_unchecked(x, params)?;
    if !out.domain_ok {
        return Err(Error::regime(format!(
            "x = {x} outside [{}, {}]",
            params.alpha * params.alpha / params.eps_prime,
            1.0 / (4.0 * params.eta)
        )));
    }
    Ok(out)
}

/// `κ = 2ηK_ε / (3(1 − (2/3)η·λ_lo)(ln(1 − (2/3)η·λ_hi))²)`.
pub fn kappa(lam_hi: f64, lam_lo: f64, params: &WindowParams) -> Result<f64> {
    let k = k_epsilon(params.eps)?;
    let l_hi = log_contraction(params.eta, lam_hi)?;
    log_contraction(params.eta, lam_lo)?;
    let q_lo = 2.0 * params.eta * lam_lo / 3.0;
    Ok(2.0 * params.eta * k / (3.0 * (1.0 - q_lo) * l_hi * l_hi))
}

/// Eigengap condition for one adjacent pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCheck {
    /// 1-based index ℓ of the upper eigenvalue.
    pub index: usize,
    pub lam_hi: f64,
    pub lam_lo: f64,
    pub actual: f64,
    pub level_diff: u64,
    pub required: f64,
    pub pass: bool,
}

/// Gap required between `lam_hi` and `lam_lo`: level difference over κ.
pub fn required_gap(lam_hi: f64, lam_lo: f64, params: &WindowParams) -> Result<(u64, f64)> {
    let m = level_index(lam_hi, params.alpha).saturating_sub(level_index(lam_lo, params.alpha));
    Ok((m, m as f64 / kappa(lam_hi, lam_lo, params)?))
}

/// Checks `λ_ℓ − λ_{ℓ+1} ≥ m_ℓ/κ` for `ℓ = 1..=L` (as far as the spectrum
/// reaches). A pair whose κ is undefined is reported as failing with an
/// infinite requirement.
pub fn check_gap_condition(spectrum: &[f64], params: &WindowParams) -> Vec<GapCheck> {
    let pairs = params.rank.min(spectrum.len().saturating_sub(1));
    (0..pairs)
        .map(|i| {
            let (hi, lo) = (spectrum[i], spectrum[i + 1]);
            let (level_diff, required) = required_gap(hi, lo, params).unwrap_or((0, f64::INFINITY));
            let actual = hi - lo;
            GapCheck { index: i + 1, lam_hi: hi, lam_lo: lo, actual, level_diff, required, pass: actual >= required }
        })
        .collect()
}

fn check_pair(lam_l: f64, lam_next: f64) -> Result<()> {
    if !(lam_next > 0.0) {
        return Err(Error::input(format!("λ_(L+1) must be positive, got {lam_next}")));
    }
    if lam_l == lam_next {
        return Err(Error::DegenerateSpectrum { gap: 0.0 });
    }
    if lam_l < lam_next {
        return Err(Error::input("need λ_L > λ_(L+1)"));
    }
    Ok(())
}

/// Initialization threshold α*.
pub fn alpha_star(lam_l: f64, lam_next: f64, params: &WindowParams) -> Result<f64> {
    check_pair(lam_l, lam_next)?;
    let k = k_epsilon(params.eps)?;
    let num = lam_l * (params.eps_prime * lam_next).ln() - lam_next * (lam_l.ln() - std::f64::consts::LN_2 - 3.0 * k);
    Ok((num / (2.0 * (lam_l - lam_next))).exp())
}

/// Numerator of η*: the `1/η`-free part of `T1 − T0` up to the level term.
pub fn eta_star_numerator(lam_l: f64, lam_next: f64, params: &WindowParams) -> Result<f64> {
    check_pair(lam_l, lam_next)?;
    let a2 = params.alpha * params.alpha;
    if !(lam_next > a2) {
        return Err(Error::regime("need λ_(L+1) > α²"));
    }
    let k = k_epsilon(params.eps)?;
    let g_next = ((lam_next / a2 - 1.0).ln() - (1.0 / params.eps_prime - 1.0).ln()) / lam_next;
    let g_l = ((lam_l / a2 - 1.0).ln() - std::f64::consts::LN_2 - 3.0 * k) / lam_l;
    Ok(g_next - g_l)
}

/// Step-size threshold η*.
pub fn eta_star(lam_l: f64, lam_next: f64, params: &WindowParams) -> Result<f64> {
    let g = eta_star_numerator(lam_l, lam_next, params)?;
    if !(g > 0.0) {
        return Err(Error::WindowImpossible(format!("η* numerator {g} is not positive")));
    }
    Ok(g / (2.0 * level_index(lam_l, params.alpha) as f64))
}

/// `L' = max{ℓ : ε'λ_ℓ > α^N}` and `L'' = max{ℓ : λ_ℓ > α^N}` (0 if empty).
pub fn rank_indices(spectrum: &[f64], params: &WindowParams) -> (usize, usize) {
    let an = params.alpha_n();
    let l_prime = spectrum.iter().rposition(|&l| params.eps_prime * l > an).map_or(0, |i| i + 1);
    let l_dprime = spectrum.iter().rposition(|&l| l > an).map_or(0, |i| i + 1);
    (l_prime, l_dprime)
}

/// `Σ_{i≤L}|λ_i| / max_{i≤L}|λ_i|` for a descending spectrum.
pub fn truncated_effective_rank(spectrum: &[f64], rank: usize) -> Result<f64> {
    crate::spectral::effective_rank_of_spectrum(&spectrum[..rank.min(spectrum.len())])
}

/// Bound on `|r(Ŵ_L) − r(W(k))|` inside the window:
/// `ε·r(Ŵ_L) + (2(L'−L)/c_N)(λ_{L+1}/λ_1)ε' + (n−L')·2α^N/(ε'λ_1)`.
/// For N = 2 the middle coefficient is `6(L'−L)`.
pub fn effective_rank_bound(spectrum: &[f64], params: &WindowParams) -> Result<f64> {
    let l = params.rank;
    if l >= spectrum.len() {
        return Err(Error::input(format!("rank {l} needs at least {} eigenvalues", l + 1)));
    }
    let n = spectrum.len();
    let lam1 = spectrum[0];
    if !(lam1 > 0.0) {
        return Err(Error::regime("λ_1 must be positive"));
    }
    let (l_prime, _) = rank_indices(spectrum, params);
    let r_l = truncated_effective_rank(spectrum, l)?;
    let mid = 2.0 * (l_prime as f64 - l as f64) / params.c_n() * spectrum[l] / lam1 * params.eps_prime;
    let tail = (n - l_prime) as f64 * 2.0 * params.alpha_n() / (params.eps_prime * lam1);
    Ok(params.eps * r_l + mid + tail)
}

/// `φ(t) = ln(t/2) − 1/t − 1`.
pub fn phi(t: f64) -> f64 {
    (t / 2.0).ln() - 1.0 / t - 1.0
}

/// Unique positive root of φ, by bisection on `(0, 2e + 1]`.
pub fn phi_root() -> f64 {
    let (mut lo, mut hi) = (1e-9, 2.0 * std::f64::consts::E + 1.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Outcome of the window analysis for one rank L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowVerdict {
    pub rank: usize,
    /// `T0` as the full maximum over all candidates.
    pub t0: f64,
    /// The single `λ_L` term, present when the gap hypotheses hold.
    pub t0_explicit: Option<f64>,
    pub t1: f64,
    /// `T0 < T1` by direct comparison.
    pub nonempty: bool,
    /// Nonempty and every hypothesis of the existence result holds.
    pub certified: bool,
    pub gap_checks: Vec<GapCheck>,
    pub alpha_star: Option<f64>,
    pub eta_star: Option<f64>,
    pub l_prime: usize,
    pub l_dprime: usize,
    pub failure_reasons: Vec<String>,
}

impl WindowVerdict {
    /// Integer iterations inside the window, `⌈T0⌉ ..= ⌊T1⌋`.
    pub fn iterations(&self) -> Option<(usize, usize)> {
        let lo = self.t0.max(0.0).ceil();
        let hi = self.t1.floor();
        (self.nonempty && hi >= lo).then_some((lo as usize, hi as usize))
    }
}

/// Evaluates `T0`, `T1` and every hypothesis of the window-existence result
/// for the full descending `spectrum` at rank `params.rank`.
pub fn window_verdict(spectrum: &[f64], params: &WindowParams) -> Result<WindowVerdict> {
    params.require_depth_two()?;
    let l = params.rank;
    if l == 0 || l >= spectrum.len() {
        return Err(Error::input(format!("rank L = {l} needs λ_(L+1): spectrum has {} eigenvalues", spectrum.len())));
    }
    let mut reasons = Vec::new();
    if let Err(e) = params.validate() {
        reasons.push(e.to_string());
    }
    let lam1 = spectrum[0];
    let lam_l = spectrum[l - 1];
    let lam_next = spectrum[l];
    let alpha = params.alpha;
    let an = params.alpha_n();

    if !(lam_next > 0.0) {
        reasons.push(format!("λ_(L+1) = {lam_next} is not positive"));
    }
    if !(an < params.eps_prime * lam_next) {
        reasons.push(format!("α^N = {an:e} is not below ε'·λ_(L+1) = {:e}", params.eps_prime * lam_next));
    }
    let eta_limit = params.step_size_limit(lam1);
    if !(params.eta < eta_limit) {
        reasons.push(format!("step size η = {} is not below {eta_limit}", params.eta));
    }
    if lam1 < 1.0 {
        reasons.push(format!("λ_1 = {lam1} is below 1"));
    }
    let floor = 2.0 * (std::f64::consts::E + 1.0) * alpha * alpha;
    if lam_l < floor {
        reasons.push(format!("λ_L = {lam_l} is below 2(e+1)α² = {floor}"));
    }

    let gap_checks = check_gap_condition(spectrum, params);
    let gaps_ok = gap_checks.iter().all(|g| g.pass);
    for g in gap_checks.iter().filter(|g| !g.pass) {
        reasons.push(format!(
            "gap condition fails at ℓ = {}: λ_ℓ − λ_(ℓ+1) = {} < required {}",
            g.index, g.actual, g.required
        ));
    }

    let alpha_star = alpha_star(lam_l, lam_next, params).ok();
    match alpha_star {
        Some(a) if alpha < a => {}
        Some(a) => reasons.push(format!("α = {alpha} is not below α* = {a}")),
        None => reasons.push("α* undefined".to_string()),
    }
    let eta_star = match eta_star(lam_l, lam_next, params) {
        Ok(e) => Some(e),
        Err(e) => {
            reasons.push(e.to_string());
            None
        }
    };
    if let Some(e) = eta_star {
        if !(params.eta < e) {
            reasons.push(format!("η = {} is not below η* = {e}", params.eta));
        }
    }

    let t0 = t0(&spectrum[..l], params)?;
    let t1 = t1(lam_next, params)?;
    let part_one = gaps_ok && lam1 >= 1.0 && lam_l >= floor;
    let t0_explicit = if part_one { Some(t_of_x(lam_l, params)?) } else { None };
    let nonempty = t0 < t1;
    if !nonempty {
        reasons.push(format!("window is empty: T0 = {t0} ≥ T1 = {t1}"));
    }
    let (l_prime, l_dprime) = rank_indices(spectrum, params);
    Ok(WindowVerdict {
        rank: l,
        t0,
        t0_explicit,
        t1,
        nonempty,
        certified: nonempty && reasons.is_empty(),
        gap_checks,
        alpha_star,
        eta_star,
        l_prime,
        l_dprime,
        failure_reasons: reasons,
    })
}
