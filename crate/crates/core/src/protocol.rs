//! Optimal incentive protocols and cumulative-cost accounting.
//!
//! The institution pays an instantaneous outlay rate (k N p_i mu)^2 / 2,
//! where p_i is the cooperator fraction under reward and the defector
//! fraction under punishment. Minimizing the time integral of that rate
//! subject to the reduced dynamics, free terminal time, and the terminal
//! state p_C(t_f) = 1 - delta yields a constant, state-independent optimal
//! level mu* for every update rule, identical for reward and punishment:
//!
//! * death-birth:          mu* = 2(ck - b)/k        (requires b/c < k)
//! * birth-death:          mu* = 2c
//! * imitation:            mu* = 2[c(k+2) - b]/(k+2) (requires b/c < k+2)
//! * pairwise comparison:  mu* = 2c
//!
//! Along the induced logistic trajectory the cumulative cost has the
//! closed forms implemented by [`cost_constant`]; [`hjb_stationarity`]
//! exposes the stationarity residual of the underlying Hamiltonian as a
//! verification hook.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{
    beta, cooperation_threshold, drift_coefficient, hitting_time, integrate_reduced,
    IntegrateOptions, ModelParams, UpdateRule,
};

/// Which side of the population the institution pays for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncentiveKind {
    Reward,
    Punishment,
}

impl IncentiveKind {
    pub const BOTH: [IncentiveKind; 2] = [IncentiveKind::Reward, IncentiveKind::Punishment];
}

impl std::fmt::Display for IncentiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IncentiveKind::Reward => "reward",
            IncentiveKind::Punishment => "punish",
        })
    }
}

/// Initial cooperator fraction and terminal tolerance: the run ends when
/// p_C reaches 1 - delta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub p0: f64,
    pub delta: f64,
}

impl Target {
    pub fn new(p0: f64, delta: f64) -> Result<Self> {
        let t = Target { p0, delta };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0) || !(self.delta >= 0.0) || !(self.p0 + self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target requires p0 > 0, delta >= 0, p0 + delta < 1; got p0 = {}, delta = {}",
                self.p0, self.delta
            )));
        }
        Ok(())
    }

    pub fn terminal(&self) -> f64 {
        1.0 - self.delta
    }
}

/// Optimal constant incentive level mu*, identical for reward and
/// punishment.
///
/// Errors with [`Error::NoInteriorOptimum`] when the benefit-cost ratio
/// already favors cooperation (b/c >= k for death-birth, b/c >= k+2 for
/// imitation): there the cost functional has no interior stationary point
/// and arbitrarily small incentives suffice.
pub fn optimal_mu(rule: UpdateRule, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let th = cooperation_threshold(rule, params).raw;
    if th <= 0.0 {
        return Err(Error::NoInteriorOptimum {
            rule,
            reason: format!(
                "threshold {th} <= 0: cooperation is favored at mu = 0; any mu >= 0 sustains it"
            ),
        });
    }
    Ok(2.0 * th)
}

/// Bracket multiplying (kN mu)^2 / (2a) in the closed-form cost.
fn cost_bracket(kind: IncentiveKind, target: &Target) -> f64 {
    let (p0, delta) = (target.p0, target.delta);
    match kind {
        IncentiveKind::Reward => p0 + delta - 1.0 + ((1.0 - p0) / delta).ln(),
        IncentiveKind::Punishment => p0 + delta - 1.0 + ((1.0 - delta) / p0).ln(),
    }
}

/// Cumulative cost of holding a constant incentive mu until the target is
/// reached, evaluated in closed form along the reduced trajectory:
/// (kN mu)^2 / (2 a(mu)) times the kind-specific bracket.
pub fn cost_constant(
    rule: UpdateRule,
    kind: IncentiveKind,
    mu: f64,
    params: &ModelParams,
    target: &Target,
) -> Result<f64> {
    params.validate()?;
    target.validate()?;
    let a = drift_coefficient(rule, mu, params);
    if a <= 0.0 {
        return Err(Error::UnreachableTarget {
            rule,
            mu,
            threshold: cooperation_threshold(rule, params).raw,
        });
    }
    let kn_mu = params.k() * params.n() * mu;
    Ok(kn_mu * kn_mu / (2.0 * a) * cost_bracket(kind, target))
}

/// Cumulative cost at the optimal level mu*.
pub fn cost_closed_form(
    rule: UpdateRule,
    kind: IncentiveKind,
    params: &ModelParams,
    target: &Target,
) -> Result<f64> {
    let mu_star = optimal_mu(rule, params)?;
    // At mu* the drift coefficient equals beta by construction.
    let b = beta(rule, params)?;
    target.validate()?;
    let kn_mu = params.k() * params.n() * mu_star;
    Ok(kn_mu * kn_mu / (2.0 * b) * cost_bracket(kind, target))
}

/// Cost difference J_R* - J_P* at the optimum:
/// (kN mu*)^2 / (2 beta) * ln[p0(1-p0) / (delta(1-delta))].
///
/// Positive exactly when p0 > delta (punishing is cheaper), negative when
/// p0 < delta (rewarding is cheaper).
pub fn cost_difference(rule: UpdateRule, params: &ModelParams, target: &Target) -> Result<f64> {
    let mu_star = optimal_mu(rule, params)?;
    let b = beta(rule, params)?;
    target.validate()?;
    let (p0, delta) = (target.p0, target.delta);
    let kn_mu = params.k() * params.n() * mu_star;
    Ok(kn_mu * kn_mu / (2.0 * b) * (p0 * (1.0 - p0) / (delta * (1.0 - delta))).ln())
}

/// Same constant-mu cost computed by trapezoidal quadrature of the outlay
/// rate along the integrated reduced trajectory, as an independent check
/// of [`cost_constant`]. `dt` is the integration step; samples are taken
/// every `record_stride`.
pub fn cost_constant_quadrature(
    rule: UpdateRule,
    kind: IncentiveKind,
    mu: f64,
    params: &ModelParams,
    target: &Target,
    dt: f64,
    record_stride: f64,
) -> Result<f64> {
    params.validate()?;
    target.validate()?;
    let a = drift_coefficient(rule, mu, params);
    if a <= 0.0 {
        return Err(Error::UnreachableTarget {
            rule,
            mu,
            threshold: cooperation_threshold(rule, params).raw,
        });
    }
    // Generous horizon: the logistic hitting time at rate a.
    let t_hit = hitting_time(target.p0, target.delta.max(1e-12), a);
    let opts = IntegrateOptions {
        dt,
        t_max: 4.0 * t_hit.max(1.0),
        record_stride,
        stop_at: Some(target.terminal()),
    };
    let traj = integrate_reduced(rule, mu, target.p0, params, &opts)?;
    if traj.reached_at.is_none() {
        return Err(Error::UnreachableTarget {
            rule,
            mu,
            threshold: cooperation_threshold(rule, params).raw,
        });
    }
    let kn_mu = params.k() * params.n() * mu;
    let rate = |p: f64| {
        let share = match kind {
            IncentiveKind::Reward => p,
            IncentiveKind::Punishment => 1.0 - p,
        };
        let r = kn_mu * share;
        r * r / 2.0
    };
    let mut total = 0.0;
    for w in traj.samples.windows(2) {
        total += 0.5 * (rate(w[0].p_c) + rate(w[1].p_c)) * (w[1].t - w[0].t);
    }
    Ok(total)
}

/// Closed-form costate dJ*/dp entering the Hamiltonian, per rule and
/// incentive kind (the punishment costate mirrors the reward one with the
/// cooperator share p replaced by the defector share 1-p).
pub fn costate(rule: UpdateRule, kind: IncentiveKind, p_c: f64, params: &ModelParams) -> f64 {
    let (b, c) = (params.game.benefit, params.game.cost);
    let k = params.k();
    let n = params.n();
    let w = params.selection.omega;
    let share = match kind {
        IncentiveKind::Reward => p_c / (1.0 - p_c),
        IncentiveKind::Punishment => (1.0 - p_c) / p_c,
    };
    match rule {
        UpdateRule::Db => 2.0 * n * n * (k - 1.0) * (b - c * k) * share / (w * (k - 2.0)),
        UpdateRule::Bd => -2.0 * n * n * k * (k - 1.0) * c * share / (w * (k - 2.0)),
        UpdateRule::Im => {
            2.0 * n * n * (b - c * (k + 2.0)) * (k + 1.0) * (k + 1.0) * (k - 1.0) * share
                / (w * (k - 2.0) * (k + 2.0) * (k + 2.0))
        }
        UpdateRule::Pc => -4.0 * n * n * k * (k - 1.0) * c * share / (w * (k - 2.0)),
    }
}

/// Stationarity residual dH/dmu of the control Hamiltonian at incentive
/// level `mu`, using the closed-form costate. Zero (to rounding) at mu*
/// for interior p_C; strictly nonzero away from mu*.
pub fn hjb_stationarity(
    rule: UpdateRule,
    kind: IncentiveKind,
    p_c: f64,
    mu: f64,
    params: &ModelParams,
) -> f64 {
    let k = params.k();
    let n = params.n();
    let w = params.selection.omega;
    let share = match kind {
        IncentiveKind::Reward => p_c,
        IncentiveKind::Punishment => 1.0 - p_c,
    };
    // d/dmu of the outlay rate (kN p_i mu)^2 / 2
    let outlay_term = (k * n * share) * (k * n * share) * mu;
    // d/dmu of the drift coefficient a(mu), constant per rule
    let da_dmu = match rule {
        UpdateRule::Db | UpdateRule::Bd => w * k * (k - 2.0) / (k - 1.0),
        UpdateRule::Im => w * k * k * (k - 2.0) * (k + 2.0) / ((k + 1.0) * (k + 1.0) * (k - 1.0)),
        UpdateRule::Pc => w * k * (k - 2.0) / (2.0 * (k - 1.0)),
    };
    outlay_term + costate(rule, kind, p_c, params) * da_dmu * p_c * (1.0 - p_c)
}

/// Closed-form theory summary for one (rule, kind) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryResult {
    pub rule: UpdateRule,
    pub kind: IncentiveKind,
    pub threshold_raw: f64,
    pub threshold: f64,
    /// None when no interior optimum exists (cooperation free of charge).
    pub mu_star: Option<f64>,
    pub beta: Option<f64>,
    pub j_star: Option<f64>,
    pub t_f: Option<f64>,
    pub note: Option<String>,
}

/// Evaluates the full theory table entry for a rule and incentive kind.
pub fn theory_result(
    rule: UpdateRule,
    kind: IncentiveKind,
    params: &ModelParams,
    target: &Target,
) -> Result<TheoryResult> {
    params.validate()?;
    target.validate()?;
    let th = cooperation_threshold(rule, params);
    match optimal_mu(rule, params) {
        Ok(mu_star) => {
            let b = beta(rule, params)?;
            let j = cost_closed_form(rule, kind, params, target)?;
            Ok(TheoryResult {
                rule,
                kind,
                threshold_raw: th.raw,
                threshold: th.effective,
                mu_star: Some(mu_star),
                beta: Some(b),
                j_star: Some(j),
                t_f: Some(hitting_time(target.p0, target.delta, b)),
                note: None,
            })
        }
        Err(Error::NoInteriorOptimum { reason, .. }) => Ok(TheoryResult {
            rule,
            kind,
            threshold_raw: th.raw,
            threshold: th.effective,
            mu_star: None,
            beta: None,
            j_star: None,
            t_f: None,
            note: Some(format!("no interior optimum; {reason}")),
        }),
        Err(e) => Err(e),
    }
}

/// Verifies that mu* does not depend on the initial state, tolerance,
/// population size, or selection strength (it is a function of the game
/// and the degree only). Used by tests; exported because the property is
/// part of the protocol's contract.
pub fn mu_star_is_state_independent(rule: UpdateRule, params: &ModelParams) -> Result<bool> {
    let reference = optimal_mu(rule, params)?;
    for omega in [1e-4, 1e-3, 0.05] {
        for population in [50usize, 400, 10_000] {
            let mut p = *params;
            p.selection = crate::game::SelectionParams::new(omega)?;
            p.population = population;
            if (optimal_mu(rule, &p)? - reference).abs() > 1e-15 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameParams, SelectionParams};

    fn baseline() -> ModelParams {
        ModelParams::new(
            GameParams::new(2.0, 1.0).unwrap(),
            SelectionParams::new(0.01).unwrap(),
            4,
            100,
        )
        .unwrap()
    }

    fn fig_target() -> Target {
        Target::new(0.5, 0.01).unwrap()
    }

    #[test]
    fn optimal_levels() {
        let p = baseline();
        assert!((optimal_mu(UpdateRule::Db, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((optimal_mu(UpdateRule::Bd, &p).unwrap() - 2.0).abs() < 1e-15);
        assert!((optimal_mu(UpdateRule::Im, &p).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!((optimal_mu(UpdateRule::Pc, &p).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn no_interior_optimum_when_ratio_favors_cooperation() {
        let mut p = baseline();
        p.game.benefit = 6.0; // b/c = 6 > k = 4
        assert!(matches!(
            optimal_mu(UpdateRule::Db, &p),
            Err(Error::NoInteriorOptimum { .. })
        ));
        let r = theory_result(UpdateRule::Db, IncentiveKind::Reward, &p, &fig_target()).unwrap();
        assert!(r.mu_star.is_none() && r.note.is_some());

        p.game.benefit = 7.0; // b/c = 7 > k + 2 = 6
        assert!(matches!(
            optimal_mu(UpdateRule::Im, &p),
            Err(Error::NoInteriorOptimum { .. })
        ));
    }

    #[test]
    fn closed_form_cost_spot_values() {
        let p = baseline();
        let t = fig_target();
        let jr = cost_closed_form(UpdateRule::Db, IncentiveKind::Reward, &p, &t).unwrap();
        let jp = cost_closed_form(UpdateRule::Db, IncentiveKind::Punishment, &p, &t).unwrap();
        let expect_r = 6.0e6 * (-0.49 + 50.0f64.ln());
        let expect_p = 6.0e6 * (-0.49 + 1.98f64.ln());
        assert!((jr - expect_r).abs() <= 1e-12 * expect_r);
        assert!((jp - expect_p).abs() <= 1e-12 * expect_p);
    }

    #[test]
    fn cost_difference_matches_bracket_identity() {
        let p = baseline();
        for rule in UpdateRule::ALL {
            for (p0, delta) in [(0.5, 0.01), (0.1, 0.2), (0.3, 0.3)] {
                let t = Target::new(p0, delta).unwrap();
                let jr = cost_closed_form(rule, IncentiveKind::Reward, &p, &t).unwrap();
                let jp = cost_closed_form(rule, IncentiveKind::Punishment, &p, &t).unwrap();
                let diff = cost_difference(rule, &p, &t).unwrap();
                assert!((jr - jp - diff).abs() <= 1e-9 * jr.abs().max(jp.abs()));
                if (p0 - delta).abs() < 1e-15 {
                    assert!(diff.abs() <= 1e-9 * jr.abs());
                } else {
                    assert_eq!(diff > 0.0, p0 > delta);
                }
            }
        }
    }

    #[test]
    fn cost_constant_equals_closed_form_at_optimum() {
        let p = baseline();
        let t = fig_target();
        for rule in UpdateRule::ALL {
            let mu_star = optimal_mu(rule, &p).unwrap();
            for kind in IncentiveKind::BOTH {
                let a = cost_constant(rule, kind, mu_star, &p, &t).unwrap();
                let b = cost_closed_form(rule, kind, &p, &t).unwrap();
                assert!((a - b).abs() <= 1e-12 * b);
            }
        }
    }

    #[test]
    fn cost_blows_up_toward_threshold() {
        let p = baseline();
        let t = fig_target();
        let th = cooperation_threshold(UpdateRule::Db, &p).raw;
        let near = cost_constant(UpdateRule::Db, IncentiveKind::Reward, th + 1e-9, &p, &t).unwrap();
        let far = cost_constant(UpdateRule::Db, IncentiveKind::Reward, th + 0.5, &p, &t).unwrap();
        assert!(near > 1e3 * far);
        assert!(matches!(
            cost_constant(UpdateRule::Db, IncentiveKind::Reward, th, &p, &t),
            Err(Error::UnreachableTarget { .. })
        ));
    }

    #[test]
    fn quadrature_agrees_with_analytic() {
        let p = baseline();
        let t = fig_target();
        let analytic = cost_constant(UpdateRule::Db, IncentiveKind::Reward, 1.5, &p, &t).unwrap();
        let numeric = cost_constant_quadrature(
            UpdateRule::Db,
            IncentiveKind::Reward,
            1.5,
            &p,
            &t,
            0.01,
            0.01,
        )
        .unwrap();
        assert!(
            ((numeric - analytic) / analytic).abs() < 1e-6,
            "rel err {}",
            ((numeric - analytic) / analytic).abs()
        );
    }

    #[test]
    fn stationarity_zero_at_optimum_nonzero_away() {
        let p = baseline();
        let scale = (p.k() * p.n()) * (p.k() * p.n());
        for rule in UpdateRule::ALL {
            let mu_star = optimal_mu(rule, &p).unwrap();
            for kind in IncentiveKind::BOTH {
                for pc in [0.1, 0.3, 0.7, 0.9] {
                    let at_opt = hjb_stationarity(rule, kind, pc, mu_star, &p);
                    assert!(at_opt.abs() < 1e-9 * scale, "{rule} {kind} {pc}: {at_opt}");
                    let perturbed = hjb_stationarity(rule, kind, pc, 1.1 * mu_star, &p);
                    assert!(perturbed.abs() > 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn mu_star_state_independence() {
        let p = baseline();
        for rule in UpdateRule::ALL {
            assert!(mu_star_is_state_independent(rule, &p).unwrap());
        }
    }

    #[test]
    fn reward_and_punishment_share_the_optimum() {
        // mu* comes out of the reward and punishment Hamiltonians alike:
        // the stationarity residual vanishes for both kinds at the same mu.
        let p = baseline();
        for rule in UpdateRule::ALL {
            let mu = optimal_mu(rule, &p).unwrap();
            let r = hjb_stationarity(rule, IncentiveKind::Reward, 0.4, mu, &p);
            let q = hjb_stationarity(rule, IncentiveKind::Punishment, 0.4, mu, &p);
            assert!(r.abs() < 1e-6 && q.abs() < 1e-6);
        }
    }

    #[test]
    fn cost_decreases_in_initial_cooperation() {
        let p = baseline();
        for kind in IncentiveKind::BOTH {
            let mut prev = f64::INFINITY;
            for i in 1..9 {
                let t = Target::new(i as f64 / 10.0, 0.01).unwrap();
                let j = cost_closed_form(UpdateRule::Db, kind, &p, &t).unwrap();
                assert!(j < prev, "{kind}: J should strictly decrease in p0");
                prev = j;
            }
        }
    }

    #[test]
    fn target_validation() {
        assert!(Target::new(0.5, 0.01).is_ok());
        assert!(Target::new(0.0, 0.01).is_err());
        assert!(Target::new(0.9, 0.2).is_err());
        assert!(Target::new(0.5, -0.1).is_err());
    }
}
