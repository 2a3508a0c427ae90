//! Donation-game payoffs with institutional incentives, per-node payoff
//! accumulation, and the fitness map.
//!
//! Base payoff matrix (row = self, column = opponent):
//!
//! ```text
//!        C      D
//!   C  b - c   -c
//!   D    b      0
//! ```
//!
//! A reward scheme adds mu to both entries of the C row (a cooperator is
//! rewarded once per interaction); a punishment scheme subtracts mu from
//! both entries of the D row. Fitness is 1 - omega + omega * payoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Pure strategy in the one-shot game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Cooperate,
    Defect,
}

/// Benefit and cost of cooperation; requires 0 < c < b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub benefit: f64,
    pub cost: f64,
}

impl GameParams {
    pub fn new(benefit: f64, cost: f64) -> Result<Self> {
        let p = GameParams { benefit, cost };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.cost < self.benefit) {
            return Err(Error::InvalidParameter(format!(
                "game requires 0 < c < b, got b = {}, c = {}",
                self.benefit, self.cost
            )));
        }
        Ok(())
    }
}

/// Per-interaction institutional incentive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "mu", rename_all = "kebab-case")]
pub enum IncentiveScheme {
    NoIncentive,
    /// Cooperators receive `mu` per interaction.
    Reward(f64),
    /// Defectors are fined `mu` per interaction.
    Punishment(f64),
}

impl IncentiveScheme {
    pub fn validate(&self) -> Result<()> {
        if self.amount() < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "incentive amount must be >= 0, got {}",
                self.amount()
            )));
        }
        Ok(())
    }

    /// The incentive level mu (0 for `NoIncentive`).
    pub fn amount(&self) -> f64 {
        match *self {
            IncentiveScheme::NoIncentive => 0.0,
            IncentiveScheme::Reward(mu) | IncentiveScheme::Punishment(mu) => mu,
        }
    }
}

/// Selection strength omega in [0, 1]; the analytics hold in the
/// weak-selection regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub omega: f64,
}

impl SelectionParams {
    pub fn new(omega: f64) -> Result<Self> {
        let s = SelectionParams { omega };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::InvalidParameter(format!(
                "selection strength must be in [0,1], got {}",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn is_weak(&self) -> bool {
        self.omega <= 0.1
    }
}

/// Payoff of `s_self` against `s_other` under the incentive-modified matrix.
pub fn pair_payoff(
    s_self: Strategy,
    s_other: Strategy,
    game: &GameParams,
    incentive: &IncentiveScheme,
) -> f64 {
    use Strategy::*;
    let base = match (s_self, s_other) {
        (Cooperate, Cooperate) => game.benefit - game.cost,
        (Cooperate, Defect) => -game.cost,
        (Defect, Cooperate) => game.benefit,
        (Defect, Defect) => 0.0,
    };
    match (incentive, s_self) {
        (IncentiveScheme::Reward(mu), Cooperate) => base + mu,
        (IncentiveScheme::Punishment(mu), Defect) => base - mu,
        _ => base,
    }
}

/// Accumulated payoff of node `i`: sum of pair payoffs against all
/// neighbors under the current strategy assignment.
pub fn node_payoff(
    i: usize,
    strategies: &[Strategy],
    graph: &Graph,
    game: &GameParams,
    incentive: &IncentiveScheme,
) -> f64 {
    let s = strategies[i];
    graph
        .neighbors(i)
        .iter()
        .map(|&j| pair_payoff(s, strategies[j as usize], game, incentive))
        .sum()
}

/// Fitness map 1 - omega + omega * payoff.
pub fn fitness(payoff: f64, selection: &SelectionParams) -> f64 {
    1.0 - selection.omega + selection.omega * payoff
}

/// Fitness of node `i`, rejected if non-positive (proportional selection
/// would be corrupted by clamping).
pub fn checked_node_fitness(
    i: usize,
    strategies: &[Strategy],
    graph: &Graph,
    game: &GameParams,
    incentive: &IncentiveScheme,
    selection: &SelectionParams,
) -> Result<f64> {
    let f = fitness(node_payoff(i, strategies, graph, game, incentive), selection);
    if f <= 0.0 {
        return Err(Error::NonPositiveFitness { node: i, fitness: f });
    }
    Ok(f)
}
