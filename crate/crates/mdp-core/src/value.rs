//! Discounted reach-avoid value iteration: policy evaluation and optimal
//! control.

use crate::error::MdpError;
use crate::model::{ActionId, Mdp};
use crate::objective::{ReachAvoidObjective, StateCase, ValueVector};
use crate::policy::Policy;
use crate::tolerances;

/// Iteration cap: enough applications for the contraction to shrink any
/// initial error below 1e-12, plus a safety margin.
fn iteration_cap(gamma: f64) -> usize {
    ((1e-12f64).ln() / gamma.ln()).ceil() as usize + 1000
}

fn check_inputs(mdp: &Mdp, obj: &ReachAvoidObjective, tol: f64) -> Result<(), MdpError> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(MdpError::ToleranceNotPositive { tol });
    }
    if obj.n_states() != mdp.n_states() {
        return Err(MdpError::InvalidModel {
            detail: format!(
                "objective covers {} states, model has {}",
                obj.n_states(),
                mdp.n_states()
            ),
        });
    }
    mdp.verify_stochastic(tolerances::ROW_SUM)
}

/// Seeds the base cases: 0 on avoid states, 1 on target-minus-avoid states,
/// 0 elsewhere (the iteration start).
fn base_values(obj: &ReachAvoidObjective) -> Vec<f64> {
    (0..obj.n_states())
        .map(|s| match obj.case(s) {
            StateCase::Target => 1.0,
            _ => 0.0,
        })
        .collect()
}

/// One application of the three-case Bellman operator under a policy.
/// Terminal cases are pinned; interior states back up the discounted
/// expectation. Returns the sup-norm change.
pub fn bellman_backup(
    mdp: &Mdp,
    policy: &Policy,
    obj: &ReachAvoidObjective,
    values: &[f64],
    out: &mut [f64],
) -> f64 {
    let gamma = obj.gamma();
    let mut residual = 0.0f64;
    for s in 0..mdp.n_states() {
        let new = match obj.case(s) {
            StateCase::Avoid => 0.0,
            StateCase::Target => 1.0,
            StateCase::Interior => {
                let mut acc = 0.0;
                for (a, pa) in policy.action_probs(s) {
                    let row = mdp.row(s, a).expect("policy validated against model");
                    acc += pa * row.expect(|t| values[t]);
                }
                gamma * acc
            }
        };
        residual = residual.max((new - values[s]).abs());
        out[s] = new;
    }
    residual
}

/// One application of the max-variant Bellman operator. Returns the sup-norm
/// change.
fn bellman_backup_max(mdp: &Mdp, obj: &ReachAvoidObjective, values: &[f64], out: &mut [f64]) -> f64 {
    let gamma = obj.gamma();
    let mut residual = 0.0f64;
    for s in 0..mdp.n_states() {
        let new = match obj.case(s) {
            StateCase::Avoid => 0.0,
            StateCase::Target => 1.0,
            StateCase::Interior => {
                let mut best = f64::NEG_INFINITY;
                for (_, row) in mdp.enabled_rows(s) {
                    let q = row.expect(|t| values[t]);
                    if q > best {
                        best = q;
                    }
                }
                gamma * best
            }
        };
        residual = residual.max((new - values[s]).abs());
        out[s] = new;
    }
    residual
}

/// Evaluates `policy` on the reach-avoid objective: the unique fixed point of
/// the three-case Bellman operator, iterated until the sup-norm residual
/// drops below `tol`.
pub fn value_reach_avoid(
    mdp: &Mdp,
    policy: &Policy,
    obj: &ReachAvoidObjective,
    tol: f64,
) -> Result<ValueVector, MdpError> {
    value_reach_avoid_traced(mdp, policy, obj, tol).map(|(v, _)| v)
}

/// Like [`value_reach_avoid`], additionally returning the per-iteration
/// residuals (useful for convergence diagnostics).
pub fn value_reach_avoid_traced(
    mdp: &Mdp,
    policy: &Policy,
    obj: &ReachAvoidObjective,
    tol: f64,
) -> Result<(ValueVector, Vec<f64>), MdpError> {
    check_inputs(mdp, obj, tol)?;
    policy.validate_for(mdp)?;
    let mut values = base_values(obj);
    let mut next = vec![0.0; values.len()];
    let mut residuals = Vec::new();
    let cap = iteration_cap(obj.gamma());
    let mut iterations = 0;
    while iterations < cap {
        let residual = bellman_backup(mdp, policy, obj, &values, &mut next);
        std::mem::swap(&mut values, &mut next);
        iterations += 1;
        residuals.push(residual);
        if residual < tol {
            break;
        }
    }
    let vv = ValueVector {
        values,
        gamma: obj.gamma(),
        tol,
        iterations,
    };
    Ok((vv, residuals))
}

/// Computes the optimal value vector by max-variant value iteration and an
/// optimal deterministic stationary policy (argmax per state, ties broken by
/// the lowest action index).
pub fn optimal_value_and_policy(
    mdp: &Mdp,
    obj: &ReachAvoidObjective,
    tol: f64,
) -> Result<(ValueVector, Policy), MdpError> {
    check_inputs(mdp, obj, tol)?;
    let mut values = base_values(obj);
    let mut next = vec![0.0; values.len()];
    let cap = iteration_cap(obj.gamma());
    let mut iterations = 0;
    while iterations < cap {
        let residual = bellman_backup_max(mdp, obj, &values, &mut next);
        std::mem::swap(&mut values, &mut next);
        iterations += 1;
        if residual < tol {
            break;
        }
    }
    let policy = greedy_policy(mdp, &values);
    let vv = ValueVector {
        values,
        gamma: obj.gamma(),
        tol,
        iterations,
    };
    Ok((vv, policy))
}

/// The deterministic policy that is greedy with respect to `values`: per
/// state, the enabled action maximizing the expected successor value, ties
/// broken by the lowest action index (strict improvement required to switch).
fn greedy_policy(mdp: &Mdp, values: &[f64]) -> Policy {
    let choices: Vec<ActionId> = (0..mdp.n_states())
        .map(|s| {
            let rows = mdp.enabled_rows(s);
            let mut best_action = rows[0].0;
            let mut best_q = rows[0].1.expect(|t| values[t]);
            for (a, row) in &rows[1..] {
                let q = row.expect(|t| values[t]);
                if q > best_q {
                    best_q = q;
                    best_action = *a;
                }
            }
            best_action
        })
        .collect();
    Policy::Deterministic(choices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::SparseDist;

    fn obj(n: usize, t: &[usize], b: &[usize], gamma: f64) -> ReachAvoidObjective {
        ReachAvoidObjective::new(n, t, b, gamma).unwrap()
    }

    /// s0 -> s1 with probability 1; s1 is a target sink.
    fn two_chain() -> Mdp {
        Mdp::new(
            2,
            1,
            vec![(0, 0, SparseDist::dirac(1)), (1, 0, SparseDist::dirac(1))],
            SparseDist::dirac(0),
        )
        .unwrap()
    }

    #[test]
    fn target_states_have_value_one() {
        let mdp = two_chain();
        let v = value_reach_avoid(&mdp, &Policy::Deterministic(vec![0, 0]), &obj(2, &[1], &[], 0.9), 1e-9)
            .unwrap();
        assert_eq!(v.values[1], 1.0);
    }

    #[test]
    fn avoid_states_have_value_zero() {
        let mdp = two_chain();
        let v = value_reach_avoid(&mdp, &Policy::Deterministic(vec![0, 0]), &obj(2, &[], &[1], 0.9), 1e-9)
            .unwrap();
        assert_eq!(v.values[1], 0.0);
    }

    #[test]
    fn avoid_wins_when_sets_intersect() {
        let mdp = two_chain();
        let v = value_reach_avoid(
            &mdp,
            &Policy::Deterministic(vec![0, 0]),
            &obj(2, &[1], &[1], 0.9),
            1e-9,
        )
        .unwrap();
        assert_eq!(v.values[1], 0.0);
        assert_eq!(v.values[0], 0.0);
    }

    #[test]
    fn one_step_chain_discounts_once() {
        // V(s0) = gamma * V(s1) = 0.9.
        let mdp = two_chain();
        let v = value_reach_avoid(&mdp, &Policy::Deterministic(vec![0, 0]), &obj(2, &[1], &[], 0.9), 1e-12)
            .unwrap();
        assert!((v.values[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn split_chain_takes_expectation() {
        // s0 splits 0.5 to target s1, 0.5 to avoid s2: V(s0) = 0.9 * 0.5 = 0.45.
        let mdp = Mdp::new(
            3,
            1,
            vec![
                (0, 0, SparseDist::new(vec![(1, 0.5), (2, 0.5)]).unwrap()),
                (1, 0, SparseDist::dirac(1)),
                (2, 0, SparseDist::dirac(2)),
            ],
            SparseDist::dirac(0),
        )
        .unwrap();
        let v = value_reach_avoid(
            &mdp,
            &Policy::Deterministic(vec![0, 0, 0]),
            &obj(3, &[1], &[2], 0.9),
            1e-12,
        )
        .unwrap();
        assert!((v.values[0] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let mdp = two_chain();
        let err = value_reach_avoid(
            &mdp,
            &Policy::Deterministic(vec![0, 0]),
            &obj(2, &[1], &[], 0.9),
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, MdpError::ToleranceNotPositive { .. }));
    }

    #[test]
    fn optimal_picks_the_better_action() {
        // Action 0 leads to the avoid sink, action 1 to the target sink.
        let mdp = Mdp::new(
            3,
            2,
            vec![
                (0, 0, SparseDist::dirac(2)),
                (0, 1, SparseDist::dirac(1)),
                (1, 0, SparseDist::dirac(1)),
                (2, 0, SparseDist::dirac(2)),
            ],
            SparseDist::dirac(0),
        )
        .unwrap();
        let (v, pol) = optimal_value_and_policy(&mdp, &obj(3, &[1], &[2], 0.9), 1e-12).unwrap();
        assert!((v.values[0] - 0.9).abs() < 1e-12);
        assert_eq!(pol, Policy::Deterministic(vec![1, 0, 0]));
    }

    #[test]
    fn optimal_breaks_ties_by_lowest_action() {
        // Both actions at s0 reach the target in one step.
        let mdp = Mdp::new(
            2,
            2,
            vec![
                (0, 0, SparseDist::dirac(1)),
                (0, 1, SparseDist::dirac(1)),
                (1, 0, SparseDist::dirac(1)),
            ],
            SparseDist::dirac(0),
        )
        .unwrap();
        let (_, pol) = optimal_value_and_policy(&mdp, &obj(2, &[1], &[], 0.9), 1e-12).unwrap();
        assert_eq!(pol, Policy::Deterministic(vec![0, 0]));
    }

    #[test]
    fn single_target_state_is_trivially_one() {
        let mdp = Mdp::new(1, 2, vec![(0, 0, SparseDist::dirac(0)), (0, 1, SparseDist::dirac(0))], SparseDist::dirac(0))
            .unwrap();
        let (v, pol) = optimal_value_and_policy(&mdp, &obj(1, &[0], &[], 0.9), 1e-12).unwrap();
        assert_eq!(v.values[0], 1.0);
        assert_eq!(pol, Policy::Deterministic(vec![0]));
    }

    #[test]
    fn residuals_shrink_geometrically() {
        // A self-loop with escape probability keeps the iteration going long
        // enough to observe the contraction.
        let mdp = Mdp::new(
            2,
            1,
            vec![
                (0, 0, SparseDist::new(vec![(0, 0.9), (1, 0.1)]).unwrap()),
                (1, 0, SparseDist::dirac(1)),
            ],
            SparseDist::dirac(0),
        )
        .unwrap();
        let (_, residuals) = value_reach_avoid_traced(
            &mdp,
            &Policy::Deterministic(vec![0, 0]),
            &obj(2, &[1], &[], 0.95),
            1e-10,
        )
        .unwrap();
        for pair in residuals.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15);
        }
    }
}
