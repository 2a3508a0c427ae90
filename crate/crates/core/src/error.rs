//! Error type shared across the crate.

use crate::meanfield::UpdateRule;

/// Errors produced by graph generation, dynamics, and simulation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter violates a documented invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Graph construction could not satisfy the family definition.
    #[error("graph generation failed: {0}")]
    GraphGeneration(String),

    /// A generated graph was not connected within the retry budget.
    #[error("could not generate a connected graph in {attempts} attempts")]
    Disconnected { attempts: usize },

    /// Malformed edge-list text.
    #[error("edge list, line {line}: {reason}")]
    EdgeList { line: usize, reason: String },

    /// A fitness value that must enter proportional selection is not positive.
    ///
    /// Clamping would silently distort selection probabilities, so the
    /// offending value is reported instead.
    #[error("non-positive fitness {fitness} at node {node}; proportional selection undefined")]
    NonPositiveFitness { node: usize, fitness: f64 },

    /// The incentive level cannot drive the population to the target state.
    #[error("target unreachable: mu = {mu} does not exceed the {rule} threshold {threshold}")]
    UnreachableTarget {
        rule: UpdateRule,
        mu: f64,
        threshold: f64,
    },

    /// Cooperation needs no interior incentive optimum (drift is already
    /// favorable at mu = 0, or the optimality case split does not apply).
    #[error("no interior optimum for {rule}: {reason}")]
    NoInteriorOptimum { rule: UpdateRule, reason: String },

    /// Numerical integration left the admissible state region.
    #[error("integration blow-up at t = {t}: state {value} outside [0,1] tolerance")]
    StateOutOfBounds { t: f64, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
