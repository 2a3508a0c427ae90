//! Pair-approximation mean-field dynamics for the four strategy update
//! rules, with and without institutional incentives.
//!
//! Two levels of description are provided:
//!
//! * the **reduced** one-variable drift dp/dt = a(mu) * p(1-p), valid on the
//!   invariant manifold q_C|C = p + (1-p)/(k-1) to which pair correlations
//!   relax quickly under weak selection, and
//! * the **full pair** system in (p_C, q_C|C), whose p-velocity is
//!   omega * Psi and q-velocity Phi (leading order in the selection
//!   strength; higher-order remainders are truncated).
//!
//! With the optimal incentive the reduced system integrates to a logistic
//! curve with rate `beta`, which gives closed-form hitting times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameParams, IncentiveScheme, SelectionParams};

/// Endpoint guard for forming conditional pair probabilities: q_C|D has a
/// removable 0/0 at p = 1, so p is clamped this far inside (0,1).
const ENDPOINT_EPS: f64 = 1e-12;

/// Tolerance for declaring an integration state out of [0,1].
const STATE_TOL: f64 = 1e-9;

/// Strategy update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    /// Death-birth: a uniform node dies, neighbors compete by fitness.
    Db,
    /// Birth-death: fitness-proportional parent overwrites a uniform neighbor.
    Bd,
    /// Imitation: a uniform focal node imitates self-or-neighbor by fitness.
    Im,
    /// Pairwise comparison: Fermi adoption from a random neighbor.
    Pc,
}

impl UpdateRule {
    pub const ALL: [UpdateRule; 4] = [UpdateRule::Db, UpdateRule::Bd, UpdateRule::Im, UpdateRule::Pc];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "db" => Ok(UpdateRule::Db),
            "bd" => Ok(UpdateRule::Bd),
            "im" => Ok(UpdateRule::Im),
            "pc" => Ok(UpdateRule::Pc),
            other => Err(Error::InvalidParameter(format!(
                "unknown update rule '{other}' (expected db|bd|im|pc)"
            ))),
        }
    }
}

impl std::fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            UpdateRule::Db => "db",
            UpdateRule::Bd => "bd",
            UpdateRule::Im => "im",
            UpdateRule::Pc => "pc",
        };
        f.write_str(s)
    }
}

/// Parameters of the mean-field model: game, selection, regular degree k,
/// and population size N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub game: GameParams,
    pub selection: SelectionParams,
    pub degree: usize,
    pub population: usize,
}

impl ModelParams {
    pub fn new(game: GameParams, selection: SelectionParams, degree: usize, population: usize) -> Result<Self> {
        let p = ModelParams { game, selection, degree, population };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        self.selection.validate()?;
        if self.degree <= 2 {
            return Err(Error::InvalidParameter(format!(
                "the pair approximation requires degree k > 2, got {}",
                self.degree
            )));
        }
        if self.population < self.degree + 1 {
            return Err(Error::InvalidParameter(format!(
                "population N = {} too small for degree {}",
                self.population, self.degree
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> f64 {
        self.degree as f64
    }

    pub fn n(&self) -> f64 {
        self.population as f64
    }
}

/// Mean-field pair state: cooperator fraction p_C and conditional pair
/// probability q_C|C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairState {
    pub p_c: f64,
    pub q_cc: f64,
}

impl PairState {
    pub fn new(p_c: f64, q_cc: f64) -> Result<Self> {
        let s = PairState { p_c, q_cc };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_c) || !(0.0..=1.0).contains(&self.q_cc) {
            return Err(Error::InvalidParameter(format!(
                "pair state ({}, {}) outside the unit square",
                self.p_c, self.q_cc
            )));
        }
        // q_C|D = (1-q_cc) p / (1-p) must be a probability.
        if self.p_c < 1.0 && (1.0 - self.q_cc) * self.p_c > (1.0 - self.p_c) + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "pair state ({}, {}) implies q_C|D > 1",
                self.p_c, self.q_cc
            )));
        }
        Ok(())
    }

    /// State on the invariant manifold at cooperator fraction `p_c`.
    pub fn on_manifold(p_c: f64, degree: usize) -> Self {
        PairState { p_c, q_cc: slow_manifold_q(p_c, degree) }
    }
}

/// Conditional pair probabilities derived from (p_C, q_C|C).
#[derive(Debug, Clone, Copy)]
struct Conditionals {
    p: f64,
    q_cc: f64,
    q_dc: f64,
    q_cd: f64,
    q_dd: f64,
    p_cc: f64,
    p_cd: f64,
    p_dd: f64,
}

impl Conditionals {
    fn from_state(state: &PairState) -> Self {
        let p = state.p_c.clamp(ENDPOINT_EPS, 1.0 - ENDPOINT_EPS);
        let q_cc = state.q_cc.clamp(0.0, 1.0);
        let q_dc = 1.0 - q_cc;
        let p_cd = q_dc * p;
        let q_cd = (p_cd / (1.0 - p)).clamp(0.0, 1.0);
        let q_dd = 1.0 - q_cd;
        Conditionals {
            p,
            q_cc,
            q_dc,
            q_cd,
            q_dd,
            p_cc: q_cc * p,
            p_cd,
            p_dd: q_dd * (1.0 - p),
        }
    }
}

/// The q-weighted payoff-advantage bracket of a cooperator neighbor over a
/// defector neighbor, reward form.
fn eta_reward(c: &Conditionals, b: f64, cost: f64, mu: f64) -> f64 {
    (b - cost + mu) * c.q_cc + (mu - cost) * c.q_dc - b * c.q_cd
}

/// Same bracket written in the punishment form (algebraically equal to the
/// reward form; kept separate so each incentive sign evaluates its own
/// printed expression).
fn eta_punish(c: &Conditionals, b: f64, cost: f64, mu: f64) -> f64 {
    (b - cost) * c.q_cc - cost * c.q_dc + (mu - b) * c.q_cd + mu * c.q_dd
}

fn eta(c: &Conditionals, game: &GameParams, inc: &IncentiveScheme) -> f64 {
    match inc {
        IncentiveScheme::Punishment(mu) => eta_punish(c, game.benefit, game.cost, *mu),
        IncentiveScheme::Reward(mu) => eta_reward(c, game.benefit, game.cost, *mu),
        IncentiveScheme::NoIncentive => eta_reward(c, game.benefit, game.cost, 0.0),
    }
}

/// Mean population fitness entering the birth-death drift.
fn bd_mean_fitness(c: &Conditionals, params: &ModelParams, inc: &IncentiveScheme) -> f64 {
    let (b, cost) = (params.game.benefit, params.game.cost);
    let (k, w) = (params.k(), params.selection.omega);
    let pair_mean = match inc {
        IncentiveScheme::Punishment(mu) => {
            (b - cost) * c.p_cc - cost * c.p_cd + (b - mu) * c.p_cd - mu * c.p_dd
        }
        IncentiveScheme::Reward(mu) => (b - cost + mu) * c.p_cc + (mu - cost) * c.p_cd + b * c.p_cd,
        IncentiveScheme::NoIncentive => (b - cost) * c.p_cc + (-cost + b) * c.p_cd,
    };
    1.0 - w + w * k * pair_mean
}

/// Full pair dynamics: returns (dp_C/dt, dq_C|C/dt) = (omega*Psi, Phi).
///
/// Errors if p_C sits exactly on an endpoint, where q_C|D is undefined.
pub fn pair_drift(
    rule: UpdateRule,
    inc: &IncentiveScheme,
    state: &PairState,
    params: &ModelParams,
) -> Result<(f64, f64)> {
    if !(state.p_c > 0.0 && state.p_c < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "pair drift undefined at endpoint p_c = {}",
            state.p_c
        )));
    }
    Ok(pair_drift_clamped(rule, inc, state, params))
}

/// Non-erroring variant used inside the integrator; endpoint states are
/// nudged inward by the guard before forming conditionals.
pub(crate) fn pair_drift_clamped(
    rule: UpdateRule,
    inc: &IncentiveScheme,
    state: &PairState,
    params: &ModelParams,
) -> (f64, f64) {
    let c = Conditionals::from_state(state);
    let (b, cost) = (params.game.benefit, params.game.cost);
    let k = params.k();
    let w = params.selection.omega;
    let mu = inc.amount();
    let e = eta(&c, &params.game, inc);
    let cohesion = 1.0 + (k - 1.0) * (c.q_cd - c.q_cc);

    let (psi, phi) = match rule {
        UpdateRule::Db => {
            let psi = (k - 1.0) / k * c.p_cd * ((mu - cost) + (k - 1.0) * e) * (c.q_cc + c.q_dd);
            let phi = 2.0 * c.p_cd / (k * c.p) * cohesion;
            (psi, phi)
        }
        UpdateRule::Bd => {
            let fbar = bd_mean_fitness(&c, params, inc);
            let psi = c.p_cd / fbar * ((mu - cost - b) + (k - 1.0) * e);
            let phi = 2.0 * c.p_cd / (k * c.p) * cohesion;
            (psi, phi)
        }
        UpdateRule::Im => {
            let dq = c.q_cc - c.q_cd;
            let tail = (k - 1.0) * (k - 1.0) * (1.0 + dq) * ((mu - cost) + b * dq);
            let psi = k * c.p_cd / ((k + 1.0) * (k + 1.0))
                * (2.0 * (mu - cost - b)
                    + 2.0 * (k - 1.0) * e
                    + (k - 1.0) * (mu - cost) * (c.q_cc + c.q_dd)
                    + tail);
            let phi = 2.0 * c.p_cd / ((k + 1.0) * c.p) * cohesion;
            (psi, phi)
        }
        UpdateRule::Pc => {
            let psi = c.p_cd / 2.0 * ((mu - cost - b) + (k - 1.0) * e);
            let phi = c.p_cd / (k * c.p) * cohesion;
            (psi, phi)
        }
    };
    (w * psi, phi)
}

/// Transcribed imitation p-drift whose trailing bracket scales a bare
/// q_C|C term by (k+1)^2. Retained for comparison only: it does not
/// collapse to [`reduced_drift`] on the invariant manifold, so
/// [`pair_drift`] uses the consistent grouping instead (see the
/// `im_groupings` tests).
pub fn im_pair_drift_variant_qcc_tail(
    inc: &IncentiveScheme,
    state: &PairState,
    params: &ModelParams,
) -> f64 {
    let c = Conditionals::from_state(state);
    let (b, cost) = (params.game.benefit, params.game.cost);
    let k = params.k();
    let mu = inc.amount();
    let e = eta(&c, &params.game, inc);
    params.selection.omega * k * c.p_cd / ((k + 1.0) * (k + 1.0))
        * (2.0 * (mu - cost - b)
            + 2.0 * (k - 1.0) * e
            + (k - 1.0) * (mu - cost) * (c.q_cc + c.q_dd)
            + (k + 1.0) * (k + 1.0) * c.q_cc
            + c.q_dd * e)
}

/// Transcribed imitation p-drift whose trailing bracket multiplies
/// (q_C|C + q_D|D) by (k+1)^2. Retained for comparison only, as above.
pub fn im_pair_drift_variant_qsum_tail(
    inc: &IncentiveScheme,
    state: &PairState,
    params: &ModelParams,
) -> f64 {
    let c = Conditionals::from_state(state);
    let (b, cost) = (params.game.benefit, params.game.cost);
    let k = params.k();
    let mu = inc.amount();
    let e = eta(&c, &params.game, inc);
    params.selection.omega * k * c.p_cd / ((k + 1.0) * (k + 1.0))
        * (2.0 * ((mu - cost - b) + (k - 1.0) * e)
            + (k - 1.0) * (mu - cost) * (c.q_cc + c.q_dd)
            + (k + 1.0) * (k + 1.0) * (c.q_cc + c.q_dd) * e)
}

/// The mu-dependent rate a(mu) in the reduced drift a(mu) * p(1-p).
pub fn drift_coefficient(rule: UpdateRule, mu: f64, params: &ModelParams) -> f64 {
    let (b, c) = (params.game.benefit, params.game.cost);
    let k = params.k();
    let w = params.selection.omega;
    match rule {
        UpdateRule::Db => w * (k - 2.0) / (k - 1.0) * (b + k * (mu - c)),
        UpdateRule::Bd => w * k * (k - 2.0) / (k - 1.0) * (mu - c),
        UpdateRule::Im => {
            w * k * k * (k - 2.0) / ((k + 1.0) * (k + 1.0) * (k - 1.0)) * (b + (mu - c) * (k + 2.0))
        }
        UpdateRule::Pc => w * k * (k - 2.0) / (2.0 * (k - 1.0)) * (mu - c),
    }
}

/// Leading-order reduced drift dp_C/dt at incentive level mu (identical
/// for reward and punishment).
pub fn reduced_drift(rule: UpdateRule, p_c: f64, mu: f64, params: &ModelParams) -> f64 {
    drift_coefficient(rule, mu, params) * p_c * (1.0 - p_c)
}

/// Root of the fast q-dynamics: q_C|C = p + (1-p)/(k-1).
pub fn slow_manifold_q(p_c: f64, degree: usize) -> f64 {
    let k = degree as f64;
    p_c + (1.0 - p_c) / (k - 1.0)
}

/// Logistic rate under the optimal incentive protocol.
///
/// Errors when the rate is not positive (b/c at or above the rule's
/// critical ratio), where the optimal-protocol theory does not apply.
pub fn beta(rule: UpdateRule, params: &ModelParams) -> Result<f64> {
    let (b, c) = (params.game.benefit, params.game.cost);
    let k = params.k();
    let w = params.selection.omega;
    let value = match rule {
        UpdateRule::Db => w * (k - 2.0) * (c * k - b) / (k - 1.0),
        UpdateRule::Bd => w * k * (k - 2.0) * c / (k - 1.0),
        UpdateRule::Im => {
            w * k * k * (k - 2.0) * (c * (k + 2.0) - b) / ((k + 1.0) * (k + 1.0) * (k - 1.0))
        }
        UpdateRule::Pc => w * k * (k - 2.0) * c / (2.0 * (k - 1.0)),
    };
    if value <= 0.0 {
        return Err(Error::NoInteriorOptimum {
            rule,
            reason: format!(
                "logistic rate {value} is not positive (cooperation is already favored without incentives)"
            ),
        });
    }
    Ok(value)
}

/// Minimal incentive for cooperation to be favored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// Formula value, possibly negative when cooperation needs no incentive.
    pub raw: f64,
    /// Raw value clamped below at zero (incentives cannot be negative).
    pub effective: f64,
}

/// Minimal mu above which the full-cooperation state is stable.
pub fn cooperation_threshold(rule: UpdateRule, params: &ModelParams) -> Threshold {
    let (b, c) = (params.game.benefit, params.game.cost);
    let k = params.k();
    let raw = match rule {
        UpdateRule::Db => c - b / k,
        UpdateRule::Bd | UpdateRule::Pc => c,
        UpdateRule::Im => c - b / (k + 2.0),
    };
    Threshold { raw, effective: raw.max(0.0) }
}

/// Closed-form solution of the reduced dynamics at rate beta.
pub fn logistic_solution(t: f64, p0: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (1.0 - p0) / p0 * (-beta * t).exp())
}

/// Time at which the logistic reaches 1 - delta from p0.
pub fn hitting_time(p0: f64, delta: f64, beta: f64) -> f64 {
    ((1.0 - p0) * (1.0 - delta) / (p0 * delta)).ln() / beta
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Time between recorded samples (rounded to a whole number of steps).
    pub record_stride: f64,
    /// Terminate once p_C reaches this level; the crossing is located by
    /// bisection inside the final step and appended as the last sample.
    pub stop_at: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { dt: 0.01, t_max: 10_000.0, record_stride: 1.0, stop_at: None }
    }
}

impl IntegrateOptions {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_max > 0.0) || !(self.record_stride > 0.0) {
            return Err(Error::InvalidParameter(
                "integration requires dt > 0, t_max > 0, record_stride > 0".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded ODE sample; q_cc is present for pair trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSample {
    pub t: f64,
    pub p_c: f64,
    pub q_cc: Option<f64>,
}

/// Recorded ODE time series.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub samples: Vec<OdeSample>,
    /// Time at which the stop level was reached, if it was.
    pub reached_at: Option<f64>,
}

impl OdeTrajectory {
    /// CSV with header `t,p_c` (reduced) or `t,p_c,q_cc` (pair), 15
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let pair = self.samples.first().is_some_and(|s| s.q_cc.is_some());
        let mut out = String::from(if pair { "t,p_c,q_cc\n" } else { "t,p_c\n" });
        for s in &self.samples {
            match s.q_cc {
                Some(q) => out.push_str(&format!("{:.14e},{:.14e},{:.14e}\n", s.t, s.p_c, q)),
                None => out.push_str(&format!("{:.14e},{:.14e}\n", s.t, s.p_c)),
            }
        }
        out
    }
}

fn rk4_step<const D: usize>(y: [f64; D], h: f64, f: &impl Fn([f64; D]) -> [f64; D]) -> [f64; D] {
    let add = |a: [f64; D], b: [f64; D], s: f64| {
        let mut out = a;
        for i in 0..D {
            out[i] += s * b[i];
        }
        out
    };
    let k1 = f(y);
    let k2 = f(add(y, k1, h / 2.0));
    let k3 = f(add(y, k2, h / 2.0));
    let k4 = f(add(y, k3, h));
    let mut out = y;
    for i in 0..D {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn integrate<const D: usize>(
    y0: [f64; D],
    opts: &IntegrateOptions,
    rhs: impl Fn([f64; D]) -> [f64; D],
    record: &mut impl FnMut(f64, [f64; D]),
) -> Result<Option<f64>> {
    opts.validate()?;
    let stride_steps = (opts.record_stride / opts.dt).round().max(1.0) as u64;
    let mut y = y0;
    let mut t = 0.0;
    let mut step: u64 = 0;
    record(t, y);
    while t < opts.t_max {
        let h = opts.dt.min(opts.t_max - t);
        let y_next = rk4_step(y, h, &rhs);
        if y_next[0] < -STATE_TOL || y_next[0] > 1.0 + STATE_TOL {
            return Err(Error::StateOutOfBounds { t: t + h, value: y_next[0] });
        }
        if let Some(target) = opts.stop_at {
            if y_next[0] >= target {
                // Bisection for the crossing time inside [t, t+h].
                let (mut lo, mut hi) = (0.0f64, h);
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    let y_mid = rk4_step(y, mid, &rhs);
                    if y_mid[0] >= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo < 1e-14 {
                        break;
                    }
                }
                let y_cross = rk4_step(y, hi, &rhs);
                record(t + hi, y_cross);
                return Ok(Some(t + hi));
            }
        }
        y = y_next;
        t += h;
        step += 1;
        if step % stride_steps == 0 {
            record(t, y);
        }
    }
    if step % stride_steps != 0 {
        record(t, y);
    }
    Ok(None)
}

/// Integrates the reduced one-variable dynamics from p0.
pub fn integrate_reduced(
    rule: UpdateRule,
    mu: f64,
    p0: f64,
    params: &ModelParams,
    opts: &IntegrateOptions,
) -> Result<OdeTrajectory> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidParameter(format!("initial p_c = {p0} must be interior")));
    }
    params.validate()?;
    let a = drift_coefficient(rule, mu, params);
    let mut samples = Vec::new();
    let reached_at = integrate([p0], opts, |y| [a * y[0] * (1.0 - y[0])], &mut |t, y| {
        samples.push(OdeSample { t, p_c: y[0], q_cc: None });
    })?;
    Ok(OdeTrajectory { samples, reached_at })
}

/// Integrates the full pair dynamics from an interior state.
pub fn integrate_pair(
    rule: UpdateRule,
    inc: &IncentiveScheme,
    initial: PairState,
    params: &ModelParams,
    opts: &IntegrateOptions,
) -> Result<OdeTrajectory> {
    initial.validate()?;
    params.validate()?;
    if !(initial.p_c > 0.0 && initial.p_c < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "initial p_c = {} must be interior",
            initial.p_c
        )));
    }
    let mut samples = Vec::new();
    let reached_at = integrate(
        [initial.p_c, initial.q_cc],
        opts,
        |y| {
            let state = PairState { p_c: y[0], q_cc: y[1].clamp(0.0, 1.0) };
            let (dp, dq) = pair_drift_clamped(rule, inc, &state, params);
            [dp, dq]
        },
        &mut |t, y| {
            samples.push(OdeSample { t, p_c: y[0], q_cc: Some(y[1]) });
        },
    )?;
    Ok(OdeTrajectory { samples, reached_at })
}
