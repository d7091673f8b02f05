//! Norms, frequency responses, error bounds and time-domain simulation.

pub mod bounds;
pub mod hinf;
pub mod sim;

pub use bounds::{bound_gamma, bound_total, graph_only_bound, BoundCase, ErrorReport};
pub use hinf::{frequency_response, grid_peak, hinf_norm, log_grid, HinfResult};
pub use sim::{random_initial, simulate, simulate_network, sync_metric, SimResult};
