//! Per-player learners and the realization driver.

mod noise;
mod round;
mod schedule;
mod sim;

pub use noise::NoiseModel;
pub use round::{LearnerState, PlayerRuntime, RoundEvents, SwitchProbabilities};
pub use schedule::StepsizeSchedule;
pub use sim::{initial_assignment, run_simulation, Algorithm, SimulationSpec, Trace, TraceRow, TraceSummary, TAIL_FRACTION};
