//! Exact clearing for generalized barter exchanges.
//!
//! Participants are grouped into exchange clubs that donate externally only
//! in proportion to what they receive, offset by a carried debt. The crate
//! provides the domain model, operation-frame scheduling, an exact 0/1 ILP
//! core, the clearing formulations built on it, a position-indexed baseline
//! for classic pair/altruist pools, a set-packing reduction harness, and a
//! synthetic pool generator with an experiment driver.

pub mod clearing;
pub mod frames;
pub mod gadgets;
pub mod gen;
pub mod ilp;
pub mod model;
pub mod picef;
pub mod rational;
pub mod report;

pub use clearing::{
    build_capped, build_uncapped, limited_horizon, schedule_greedy, solve_capped,
    solve_capped_with, solve_cycle_limited, solve_uncapped, solve_uncapped_with, update_debts,
    CappedHints, CappedSolution, ClearingError, CycleLimited, FrameTemplate, HorizonResult,
    Matching, VarKey, VarMap,
};
pub use frames::{
    build_dag, total_order, validate_schedule, Assignment, Frame, FrameDag, FrameError, FrameId,
    Schedule, ValidationMode,
};
pub use gadgets::{
    brute_force_set_packing, reduce_set_packing, verify_reduction, GadgetError, SetPackingInstance,
};
pub use ilp::{
    brute_force_solve, solve, solve_from, IlpError, IlpModel, IlpSolution, Limits, Relation,
    SolveStatus,
};
pub use model::{
    from_standard, is_external, validate_instance, Club, ClubId, DonorId, Edge, Instance,
    ModelError, PatientId, StandardPool,
};
pub use picef::{
    enumerate_cycles, position_index_set, solve_picef, standard_batch_value, CompatGraph,
    PicefError, PicefSolution,
};
pub use rational::Rational;
pub use report::{ValidationReport, Violation};
