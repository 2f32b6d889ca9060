//! Planner synthesis over room compositions.
//!
//! Starting from a two-level model — a map of vertices labeled with reusable
//! rooms — this crate builds the composite planning MDP (one room copy per
//! committed crossing), collapses it to a succinct reachability model whose
//! transition probabilities are per-room traversal values, synthesizes an
//! optimal finite-memory planner from the succinct model, converts planners
//! to and from composite-MDP policies, lifts per-room abstraction
//! certificates to a bound on the global value gap, and rolls out the
//! finished two-level controller.

pub mod catalog;
pub mod edges;
pub mod error;
pub mod execute;
pub mod lifting;
pub mod oracle;
pub mod plan;
pub mod planner;
pub mod solve;
pub mod succinct;

pub use catalog::{RoomPolicies, TwoLevelController};
pub use edges::EdgeIndex;
pub use error::SynthesisError;
pub use execute::{execute_controller, RolloutStats};
pub use lifting::{
    entrance_loss, lifted_bound, plan_entrances, room_transition_loss_exact, training_room_mdp,
    EntranceLossReport, EntranceTerm, KappaMode, LiftedBound, PairReport,
};
pub use oracle::{CatalogOracle, RoomValueOracle, TableOracle};
pub use plan::{
    build_mdp_plan, improper_witness, is_proper, plan_value, plan_values, MdpPlan, PlanState,
    PlanStateKind,
};
pub use planner::{plan_policy_to_planner, planner_to_plan_policy, Planner};
pub use solve::{
    best_memoryless_value, evaluate_planner, forced_first_value, planner_commitments,
    solve_optimal, synthesize_planner, SolveInfo, SynthesizedPlanner,
};
pub use succinct::{build_succinct, SuccinctMdp, Traversal};

#[cfg(test)]
pub(crate) mod test_fixtures;
