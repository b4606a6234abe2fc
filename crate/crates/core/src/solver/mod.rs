//! Dynamic programming over extended states: forward transitions, co-states,
//! the exact solver, stagewise verification and person-by-person iteration.

mod costate;
mod exact;
mod stagewise;
mod state;

pub use costate::{costate, costate_chain, pair_values, pull_back, pull_back_costate, stage_contributions, CoState};
pub use exact::{solve_exact, SolveOptions, SolveResult, DEFAULT_STATE_CAP};
pub use stagewise::{stagewise_iterate, verify_stagewise, StagewiseReport};
pub use state::{
    attach_final_action, initial_state, pair_cost, transition, ExtendedState, PathMeasure, StateKey, KEY_QUANTUM_BITS,
};
