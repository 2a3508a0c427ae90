//! Networked prisoner's dilemma with institutional reward and punishment:
//! graph generators, incentive-modified payoffs, pair-approximation
//! mean-field dynamics, closed-form optimal incentive protocols with
//! cumulative-cost accounting, and an agent-based Monte Carlo engine.

pub mod error;
pub mod game;
pub mod graph;
pub mod mc;
pub mod meanfield;
pub mod protocol;

pub use error::{Error, Result};
pub use game::{fitness, node_payoff, pair_payoff, GameParams, IncentiveScheme, SelectionParams, Strategy};
pub use graph::{generate, Graph, GraphFamily, GraphSpec};
pub use mc::{
    ensemble, run, EnsembleSummary, McSample, McTrajectory, Outcome, PopulationState,
    SimulationConfig,
};
pub use meanfield::{
    beta, cooperation_threshold, drift_coefficient, hitting_time, integrate_pair,
    integrate_reduced, logistic_solution, pair_drift, reduced_drift, slow_manifold_q,
    IntegrateOptions, ModelParams, OdeTrajectory, PairState, Threshold, UpdateRule,
};
pub use protocol::{
    cost_closed_form, cost_constant, cost_constant_quadrature, cost_difference, hjb_stationarity,
    optimal_mu, theory_result, IncentiveKind, Target, TheoryResult,
};
