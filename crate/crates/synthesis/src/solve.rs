//! Undiscounted reachability on the succinct model, and the transcription
//! of its optimal policy into a planner.
//!
//! Ordinary discounted solvers do not apply at discount 1, but every
//! transition of the succinct model succeeds with probability at most the
//! room discount, so the reachability Bellman operator contracts with that
//! factor and plain value iteration converges geometrically.

use mdp_core::{ActionId, StateId};
use two_level_model::{TwoLevelModel, VertexId};

use crate::error::SynthesisError;
use crate::planner::{normal_form_planner, Planner};
use crate::succinct::SuccinctMdp;

/// Convergence report of one value-iteration run on the succinct model.
#[derive(Clone, Copy, Debug)]
pub struct SolveInfo {
    /// Sweeps performed.
    pub iterations: usize,
    /// Final sup-norm change between sweeps.
    pub residual: f64,
    /// Contraction factor the convergence guarantee rests on — the largest
    /// transition probability in the model.
    pub contraction: f64,
    /// Requested sup-norm accuracy of the returned values.
    pub tol: f64,
}

/// A synthesized planner together with its predicted value and the solver
/// convergence report.
#[derive(Clone, Debug)]
pub struct SynthesizedPlanner {
    pub planner: Planner,
    /// Value of the run that starts at the declared entry crossing and is
    /// forced through the first commitment; 1 when the initial vertex is
    /// itself a target.
    pub predicted_value: f64,
    pub info: SolveInfo,
}

/// Per-state candidate commitments `(action, success probability)`; only
/// actions leaving the state's vertex are candidates, the rest fail
/// outright and are never worth taking.
fn jump_table(s: &SuccinctMdp) -> Vec<Vec<(ActionId, f64)>> {
    let edges = s.edges();
    (0..edges.n())
        .map(|i| {
            let (_, u) = edges.edge(i);
            edges
                .out_range(u)
                .map(|a| {
                    let p = s
                        .mdp()
                        .row(i, a)
                        .map(|row| row.prob(a))
                        .unwrap_or(0.0);
                    (a, p)
                })
                .collect()
        })
        .collect()
}

fn iteration_cap(contraction: f64, tol: f64) -> usize {
    if contraction <= 0.0 {
        return 2;
    }
    let needed = (tol * (1.0 - contraction)).max(f64::MIN_POSITIVE).ln() / contraction.ln();
    (needed.ceil() as usize).saturating_add(1000)
}

/// Jacobi sweeps of `V(s) <- max/eval over candidates of p * V(successor)`
/// with targets pinned at 1 and the failure state at 0. `sigma` fixes the
/// action per state (policy evaluation); `None` maximizes.
fn sweep_to_fixpoint(
    s: &SuccinctMdp,
    jumps: &[Vec<(ActionId, f64)>],
    sigma: Option<&[ActionId]>,
    tol: f64,
) -> (Vec<f64>, SolveInfo) {
    let n_edges = s.edges().n();
    let mut values = vec![0.0; s.n_states()];
    for &t in s.targets() {
        values[t] = 1.0;
    }
    let contraction = s.max_jump();
    let threshold = if contraction > 0.0 {
        tol * (1.0 - contraction) / contraction
    } else {
        f64::INFINITY
    };
    let cap = iteration_cap(contraction, tol);
    let mut next = values.clone();
    let mut residual: f64 = 0.0;
    let mut iterations = 0;
    for _ in 0..cap {
        iterations += 1;
        residual = 0.0;
        for i in 0..n_edges {
            if s.is_target(i) {
                continue;
            }
            let backed = match sigma {
                None => jumps[i]
                    .iter()
                    .map(|&(a, p)| p * values[a])
                    .fold(0.0, f64::max),
                Some(sigma) => {
                    let a = sigma[i];
                    // The successor of a commitment is the committed edge.
                    s.mdp()
                        .row(i, a)
                        .map(|row| row.prob(a) * values[a])
                        .unwrap_or(0.0)
                }
            };
            residual = residual.max((backed - values[i]).abs());
            next[i] = backed;
        }
        std::mem::swap(&mut values, &mut next);
        if residual <= threshold {
            break;
        }
    }
    (
        values,
        SolveInfo {
            iterations,
            residual,
            contraction,
            tol,
        },
    )
}

/// The value of the forced opening: from the entry crossing, take the
/// declared first commitment and continue with `values`; 1 outright when
/// the initial vertex is a target.
pub fn forced_first_value(s: &SuccinctMdp, values: &[f64]) -> f64 {
    let init = s.init_state();
    if s.is_target(init) {
        return 1.0;
    }
    let a = s.d1_action();
    s.mdp()
        .row(init, a)
        .map(|row| row.prob(a) * values[a])
        .unwrap_or(0.0)
}

/// Optimal values and a lowest-index-tie-break optimal commitment per
/// crossing state.
pub fn solve_optimal(s: &SuccinctMdp, tol: f64) -> (Vec<f64>, Vec<ActionId>, SolveInfo) {
    let jumps = jump_table(s);
    let (values, info) = sweep_to_fixpoint(s, &jumps, None, tol);
    let sigma: Vec<ActionId> = (0..s.edges().n())
        .map(|i| {
            let mut best = jumps[i][0];
            for &(a, p) in &jumps[i][1..] {
                if p * values[a] > best.1 * values[best.0] {
                    best = (a, p);
                }
            }
            best.0
        })
        .collect();
    (values, sigma, info)
}

/// Solves the succinct model and transcribes the optimal stationary policy
/// into the canonical vertex-memory planner.
pub fn synthesize_planner(
    s: &SuccinctMdp,
    h: &TwoLevelModel,
    tol: f64,
) -> Result<SynthesizedPlanner, SynthesisError> {
    let (values, sigma, info) = solve_optimal(s, tol);
    let next_target: Vec<VertexId> = sigma.iter().map(|&a| s.edges().edge(a).1).collect();
    let planner = normal_form_planner(h, s.edges(), &next_target)?;
    Ok(SynthesizedPlanner {
        planner,
        predicted_value: forced_first_value(s, &values),
        info,
    })
}

/// The succinct-state commitments a planner induces: after crossing
/// `(v, u)` its memory advances on the observation and it commits at `u`.
pub fn planner_commitments(
    s: &SuccinctMdp,
    planner: &Planner,
) -> Result<Vec<ActionId>, SynthesisError> {
    let edges = s.edges();
    if planner.n_vertices() != edges.n_vertices() {
        return Err(SynthesisError::PlannerInvariant {
            detail: format!(
                "planner covers {} vertices, succinct model covers {}",
                planner.n_vertices(),
                edges.n_vertices()
            ),
        });
    }
    (0..edges.n())
        .map(|i| {
            let (v, u) = edges.edge(i);
            let q = planner
                .observe(v, u, u)
                .ok_or_else(|| SynthesisError::PlannerInvariant {
                    detail: format!("planner does not recognize the crossing ({v}, {u})"),
                })?;
            let next = planner.commit(u, q);
            edges
                .index_of(next)
                .ok_or_else(|| SynthesisError::PlannerInvariant {
                    detail: format!(
                        "planner commits to ({}, {}), which is not a map edge",
                        next.0, next.1
                    ),
                })
        })
        .collect()
}

/// Evaluates a planner on the succinct model: the value of its induced
/// stationary commitments from the entry crossing, forced through the
/// declared first commitment.
pub fn evaluate_planner(
    s: &SuccinctMdp,
    planner: &Planner,
    tol: f64,
) -> Result<(f64, SolveInfo), SynthesisError> {
    let sigma = planner_commitments(s, planner)?;
    let jumps = jump_table(s);
    let (values, info) = sweep_to_fixpoint(s, &jumps, Some(&sigma), tol);
    Ok((forced_first_value(s, &values), info))
}

/// Brute-force the best memoryless planner: every map of vertices to
/// out-neighbors, evaluated as a planner whose commitment ignores where
/// the vertex was entered from. The declared first commitment stays
/// forced, consistent with `evaluate_planner`.
///
/// The search space is the product of vertex degrees — meant for the small
/// instances that separate memory from memorylessness, not for real maps.
pub fn best_memoryless_value(
    s: &SuccinctMdp,
    tol: f64,
) -> Result<(f64, Vec<StateId>), SynthesisError> {
    let edges = s.edges();
    let n_vertices = edges.n_vertices();
    let jumps = jump_table(s);
    let mut choice: Vec<usize> = vec![0; n_vertices];
    let mut best = (f64::NEG_INFINITY, choice.clone());
    loop {
        // A memoryless planner commits edge out(u)[choice[u]] whenever it
        // stands at u, regardless of the crossing that brought it there.
        let sigma: Vec<ActionId> = (0..edges.n())
            .map(|i| {
                let (_, u) = edges.edge(i);
                edges.out_range(u).start + choice[u]
            })
            .collect();
        let (values, _) = sweep_to_fixpoint(s, &jumps, Some(&sigma), tol);
        let value = forced_first_value(s, &values);
        if value > best.0 {
            best = (value, choice.clone());
        }
        // Next assignment in mixed-radix order.
        let mut v = 0;
        loop {
            if v == n_vertices {
                return Ok(best);
            }
            choice[v] += 1;
            if choice[v] < edges.out_range(v).len() {
                break;
            }
            choice[v] = 0;
            v += 1;
        }
    }
}
