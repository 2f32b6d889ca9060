//! Analysis of the Markov chain induced by fixing a policy: transient
//! measures, stationary distributions, bottom strongly connected components,
//! and the episodicity check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::MdpError;
use crate::model::{Mdp, StateId};
use crate::policy::Policy;
use crate::tolerances;

/// Number of random deterministic policies probed by [`check_episodic`].
const EPISODIC_PROBES: usize = 100;
/// Seed stem for the episodicity probe policies.
const EPISODIC_PROBE_SEED: u64 = 0x45504953;
/// Power-iteration safety cap for [`stationary_distribution`]. Periodicity is
/// detected structurally beforehand, so hitting this cap means the chain
/// mixes too slowly for the requested tolerance.
const POWER_ITERATION_CAP: usize = 2_000_000;

/// The chain obtained by averaging each state's action rows under the policy.
/// Rows are sparse, sorted by destination.
pub struct InducedChain {
    rows: Vec<Vec<(StateId, f64)>>,
}

impl InducedChain {
    pub fn new(mdp: &Mdp, policy: &Policy) -> Result<Self, MdpError> {
        policy.validate_for(mdp)?;
        let rows = (0..mdp.n_states())
            .map(|s| {
                let mut row: Vec<(StateId, f64)> = Vec::new();
                for (a, pa) in policy.action_probs(s) {
                    let dist = mdp.row(s, a).expect("policy validated against model");
                    for &(t, p) in dist.entries() {
                        row.push((t, pa * p));
                    }
                }
                row.sort_unstable_by_key(|&(t, _)| t);
                let mut merged: Vec<(StateId, f64)> = Vec::with_capacity(row.len());
                for (t, p) in row {
                    match merged.last_mut() {
                        Some((u, q)) if *u == t => *q += p,
                        _ => merged.push((t, p)),
                    }
                }
                merged
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, s: StateId) -> &[(StateId, f64)] {
        &self.rows[s]
    }

    /// Support adjacency: successors with positive probability.
    pub fn successors(&self, s: StateId) -> impl Iterator<Item = StateId> + '_ {
        self.rows[s].iter().map(|&(t, _)| t)
    }

    /// One step of the chain applied to a dense distribution: `out = x P`.
    pub fn step(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (s, &mass) in x.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(t, p) in &self.rows[s] {
                out[t] += mass * p;
            }
        }
    }

    /// States reachable from `sources` in the support graph.
    pub fn reachable(&self, sources: impl Iterator<Item = StateId>) -> Vec<bool> {
        let mut seen = vec![false; self.rows.len()];
        let mut queue: Vec<StateId> = Vec::new();
        for s in sources {
            if !seen[s] {
                seen[s] = true;
                queue.push(s);
            }
        }
        while let Some(s) = queue.pop() {
            for t in self.successors(s) {
                if !seen[t] {
                    seen[t] = true;
                    queue.push(t);
                }
            }
        }
        seen
    }
}

/// The `n`-step occupancy distribution from `source`: the chance of sitting
/// in each state after exactly `n` transitions.
pub fn transient_measure(
    mdp: &Mdp,
    policy: &Policy,
    source: StateId,
    n: usize,
) -> Result<Vec<f64>, MdpError> {
    mdp.check_state(source)?;
    let chain = InducedChain::new(mdp, policy)?;
    let mut x = vec![0.0; mdp.n_states()];
    x[source] = 1.0;
    let mut y = vec![0.0; mdp.n_states()];
    for _ in 0..n {
        chain.step(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
    }
    Ok(x)
}

/// Strongly connected components of a support graph, via iterative Tarjan.
/// Components are emitted with members sorted ascending.
fn strongly_connected_components(adj: &[Vec<StateId>]) -> Vec<Vec<StateId>> {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<StateId> = Vec::new();
    let mut next_index = 0usize;
    let mut comps: Vec<Vec<StateId>> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(StateId, usize)> = vec![(root, 0)];
        while let Some(frame) = call.last_mut() {
            let (v, cursor) = (frame.0, frame.1);
            if cursor == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if cursor < adj[v].len() {
                frame.1 += 1;
                let w = adj[v][cursor];
                if index[w] == UNSEEN {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(parent) = call.last() {
                    let p = parent.0;
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

fn support_adjacency(chain: &InducedChain) -> Vec<Vec<StateId>> {
    (0..chain.n_states())
        .map(|s| chain.successors(s).collect())
        .collect()
}

fn bsccs_of_chain(chain: &InducedChain) -> Vec<Vec<StateId>> {
    let adj = support_adjacency(chain);
    let mut bottoms: Vec<Vec<StateId>> = strongly_connected_components(&adj)
        .into_iter()
        .filter(|comp| {
            let member = |s: StateId| comp.binary_search(&s).is_ok();
            comp.iter().all(|&v| adj[v].iter().all(|&w| member(w)))
        })
        .collect();
    bottoms.sort_by_key(|comp| comp[0]);
    bottoms
}

/// Bottom strongly connected components of the chain induced by `policy`:
/// maximal SCCs of the support graph with no outgoing transition mass,
/// sorted by smallest member index.
pub fn bsccs(mdp: &Mdp, policy: &Policy) -> Result<Vec<Vec<StateId>>, MdpError> {
    let chain = InducedChain::new(mdp, policy)?;
    Ok(bsccs_of_chain(&chain))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Structural period of a strongly connected component: the gcd of
/// `level(u) + 1 - level(v)` over its internal edges, with levels from a BFS
/// rooted at its smallest member. 1 means aperiodic.
fn component_period(chain: &InducedChain, comp: &[StateId]) -> usize {
    let member = |s: StateId| comp.binary_search(&s).is_ok();
    let mut level: Vec<Option<i64>> = vec![None; chain.n_states()];
    let root = comp[0];
    level[root] = Some(0);
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let lv = level[v].expect("queued nodes have levels");
        for w in chain.successors(v) {
            if member(w) && level[w].is_none() {
                level[w] = Some(lv + 1);
                queue.push_back(w);
            }
        }
    }
    let mut g: usize = 0;
    for &v in comp {
        let lv = level[v].expect("component is strongly connected");
        for w in chain.successors(v) {
            if member(w) {
                let diff = (lv + 1 - level[w].expect("member reached by BFS")).unsigned_abs() as usize;
                g = gcd(g, diff);
            }
        }
    }
    g.max(1)
}

/// The limiting distribution of the chain induced by `policy`, started from
/// the model's initial distribution.
///
/// Requires a unique, aperiodic bottom component among the states reachable
/// from the initial distribution; the result is supported exactly on that
/// component (zeros elsewhere) and satisfies the stationarity equation up to
/// the power-iteration tolerance.
pub fn stationary_distribution(
    mdp: &Mdp,
    policy: &Policy,
    tol: f64,
) -> Result<Vec<f64>, MdpError> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(MdpError::ToleranceNotPositive { tol });
    }
    let chain = InducedChain::new(mdp, policy)?;
    let reachable = chain.reachable(mdp.initial().support());
    let reachable_bottoms: Vec<Vec<StateId>> = bsccs_of_chain(&chain)
        .into_iter()
        .filter(|comp| reachable[comp[0]])
        .collect();
    if reachable_bottoms.len() != 1 {
        return Err(MdpError::NotErgodic {
            detail: format!(
                "{} bottom components are reachable from the initial distribution",
                reachable_bottoms.len()
            ),
        });
    }
    let comp = &reachable_bottoms[0];
    let period = component_period(&chain, comp);
    if period != 1 {
        return Err(MdpError::NotErgodic {
            detail: format!("the reachable bottom component is periodic with period {period}"),
        });
    }

    // Power iteration restricted to the bottom component.
    let in_comp = {
        let mut mask = vec![false; chain.n_states()];
        for &s in comp {
            mask[s] = true;
        }
        mask
    };
    let mut x = vec![0.0; chain.n_states()];
    for &s in comp {
        x[s] = 1.0 / comp.len() as f64;
    }
    let mut y = vec![0.0; chain.n_states()];
    for _ in 0..POWER_ITERATION_CAP {
        chain.step(&x, &mut y);
        // The component is closed, so no mass leaves it; renormalize to damp
        // floating-point drift.
        let sum: f64 = comp.iter().map(|&s| y[s]).sum();
        for &s in comp {
            y[s] /= sum;
        }
        let l1: f64 = comp.iter().map(|&s| (x[s] - y[s]).abs()).sum();
        std::mem::swap(&mut x, &mut y);
        if l1 < tol {
            for (s, v) in x.iter_mut().enumerate() {
                if !in_comp[s] {
                    *v = 0.0;
                }
            }
            return Ok(x);
        }
    }
    Err(MdpError::NotErgodic {
        detail: format!(
            "power iteration did not converge within {POWER_ITERATION_CAP} iterations (tolerance {tol})"
        ),
    })
}

/// Outcome of the episodicity check.
#[derive(Clone, Debug)]
pub struct EpisodicReport {
    pub episodic: bool,
    /// Human-readable reasons for failure; empty when episodic. The probe
    /// samples a fixed number of deterministic policies rather than
    /// enumerating all of them, so a pass is evidence, not proof.
    pub diagnostics: Vec<String>,
}

/// Checks that `reset` behaves like a reset state: every action row at
/// `reset` matches the initial distribution (within 1e-12 pointwise), and
/// `reset` lies in the single reachable bottom component under the
/// uniform-random policy and under each of 100 seeded random deterministic
/// probe policies.
pub fn check_episodic(mdp: &Mdp, reset: StateId) -> Result<EpisodicReport, MdpError> {
    mdp.check_state(reset)?;
    let mut diagnostics: Vec<String> = Vec::new();
    let note = |msg: String, diagnostics: &mut Vec<String>| {
        if !diagnostics.contains(&msg) {
            diagnostics.push(msg);
        }
    };

    for (action, dist) in mdp.enabled_rows(reset) {
        if !dist.approx_eq(mdp.initial(), tolerances::ROW_SUM) {
            note(
                format!("reset row mismatch: action {action} at the reset state does not restart from the initial distribution"),
                &mut diagnostics,
            );
        }
    }

    let probe = |policy: &Policy, label: &str, diagnostics: &mut Vec<String>| {
        let chain = InducedChain::new(mdp, policy).expect("probe policies are valid");
        let reachable = chain.reachable(mdp.initial().support());
        let bottoms: Vec<Vec<StateId>> = bsccs_of_chain(&chain)
            .into_iter()
            .filter(|comp| reachable[comp[0]])
            .collect();
        if bottoms.len() != 1 {
            note(
                format!("{} reachable bottom components under {label} (expected exactly one)", bottoms.len()),
                diagnostics,
            );
        }
        if !bottoms
            .iter()
            .any(|comp| comp.binary_search(&reset).is_ok())
        {
            note(
                "reset unreachable under some policy: it lies outside every recurrent component".to_string(),
                diagnostics,
            );
        }
    };

    probe(&Policy::uniform(mdp), "the uniform policy", &mut diagnostics);
    for k in 0..EPISODIC_PROBES {
        let mut rng = ChaCha8Rng::seed_from_u64(EPISODIC_PROBE_SEED.wrapping_add(k as u64));
        let pol = Policy::random_deterministic(mdp, &mut rng);
        probe(&pol, "a probe policy", &mut diagnostics);
        if !diagnostics.is_empty() && diagnostics.len() > 8 {
            break;
        }
    }

    Ok(EpisodicReport {
        episodic: diagnostics.is_empty(),
        diagnostics,
    })
}
