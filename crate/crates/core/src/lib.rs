//! Agent-based ride-sourcing fleet simulation paired with an analytic
//! M/M/c queueing toolkit for critical fleet sizing.

pub mod agents;
pub mod demand;
pub mod engine;
pub mod exec;
pub mod experiment;
pub mod network;
pub mod queueing;
pub mod seed;

/// Any error raised by the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] network::NetworkError),
    #[error(transparent)]
    Demand(#[from] demand::DemandError),
    #[error(transparent)]
    Agent(#[from] agents::AgentError),
    #[error(transparent)]
    Sim(#[from] engine::SimError),
    #[error(transparent)]
    Queue(#[from] queueing::QueueError),
    #[error(transparent)]
    Experiment(#[from] experiment::ExperimentError),
}

impl Error {
    /// True for bad inputs, false for failures while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Network(e) => e.is_validation(),
            Error::Demand(e) => e.is_validation(),
            Error::Agent(_) => false,
            Error::Sim(e) => e.is_validation(),
            Error::Queue(e) => !matches!(e, queueing::QueueError::BracketFailure { .. }),
            Error::Experiment(e) => e.is_validation(),
        }
    }
}
