use mdp_core::{Policy, StateId};
use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::LatentError;
use crate::latent_mdp::LatentMdp;
use crate::loss::step_agreement;
use crate::sim::SampleSource;

/// Which concentration bound a sample size is computed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// Plain Hoeffding bound for a single estimate at confidence `delta`.
    Raw,
    /// Enough samples to certify the average value-gap bound.
    Avg,
    /// Enough samples to certify the initial-state value-gap bound; depends
    /// on the current loss and reset-mass estimates.
    Init,
}

/// Scalar parameters shared by the certification routines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacParams {
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl PacParams {
    pub fn new(epsilon: f64, delta: f64, gamma: f64) -> Result<Self, LatentError> {
        let check = |name: &'static str, value: f64| -> Result<(), LatentError> {
            if !(value > 0.0 && value < 1.0) {
                return Err(LatentError::InvalidParameter {
                    name,
                    value,
                    range: "(0, 1)",
                });
            }
            Ok(())
        };
        check("epsilon", epsilon)?;
        check("delta", delta)?;
        check("gamma", gamma)?;
        Ok(Self {
            epsilon,
            delta,
            gamma,
        })
    }
}

/// The number of samples required for the estimates to be probably
/// approximately correct at accuracy `epsilon` and confidence `delta`.
///
/// All three modes are ceilings of Hoeffding-style bounds using the natural
/// logarithm. `Raw` ignores `gamma` and `current`. `Avg` certifies the
/// average value-gap bound. `Init` certifies the initial-state value-gap
/// bound and needs the current `(loss, reset mass)` estimates, since the
/// required count depends on them; its result is a moving target that the
/// online loop re-evaluates as estimates sharpen.
///
/// Counts too large for a `u64` saturate at `u64::MAX`.
pub fn pac_sample_size(
    mode: SampleMode,
    epsilon: f64,
    delta: f64,
    gamma: f64,
    current: Option<(f64, f64)>,
) -> Result<u64, LatentError> {
    let params = PacParams::new(epsilon, delta, gamma)?;
    let samples = match mode {
        SampleMode::Raw => -params.delta.ln() / (2.0 * params.epsilon * params.epsilon),
        SampleMode::Avg => {
            let gamma_factor = params.gamma * params.gamma;
            let horizon = 1.0 - params.gamma;
            -gamma_factor * params.delta.ln()
                / (2.0 * params.epsilon * params.epsilon * horizon * horizon)
        }
        SampleMode::Init => {
            let (loss, reset_mass) = current.ok_or(LatentError::MissingEstimates)?;
            check_unit_interval("loss estimate", loss)?;
            check_unit_interval("reset-mass estimate", reset_mass)?;
            if reset_mass == 0.0 {
                return Err(LatentError::DegenerateReset);
            }
            let horizon = 1.0 - params.gamma;
            let gamma_factor = {
                let g = loss + reset_mass * (1.0 + params.epsilon * horizon);
                g * g
            };
            let occupancy = reset_mass.powi(4);
            -gamma_factor * (params.delta / 2.0).ln()
                / (2.0 * params.epsilon * params.epsilon * horizon * horizon * occupancy)
        }
    };
    Ok(samples.ceil() as u64)
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<(), LatentError> {
    if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
        return Err(LatentError::InvalidParameter {
            name: match name {
                "loss estimate" => "loss",
                _ => "reset_mass",
            },
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// The two closed-form value-gap bounds implied by a transition loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapBounds {
    /// Bound on the stationary-average gap: `gamma * loss / (1 - gamma)`.
    pub avg: f64,
    /// Bound on the gap from the initial states:
    /// `loss / (reset_mass * (1 - gamma))`.
    pub init: f64,
    /// The average bound exceeds 1 and certifies nothing.
    pub avg_vacuous: bool,
    /// The initial-state bound exceeds 1 and certifies nothing.
    pub init_vacuous: bool,
}

/// Computes both value-gap bounds from an exact (or estimated) transition
/// loss. Bounds above 1 are reported as-is and flagged vacuous, never
/// clamped.
pub fn value_gap_bounds(loss: f64, xi_reset: f64, gamma: f64) -> Result<GapBounds, LatentError> {
    if !(loss.is_finite() && (0.0..=1.0).contains(&loss)) {
        return Err(LatentError::InvalidParameter {
            name: "loss",
            value: loss,
            range: "[0, 1]",
        });
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(LatentError::InvalidParameter {
            name: "gamma",
            value: gamma,
            range: "(0, 1)",
        });
    }
    if !(xi_reset.is_finite() && xi_reset <= 1.0 && xi_reset >= 0.0) {
        return Err(LatentError::InvalidParameter {
            name: "xi_reset",
            value: xi_reset,
            range: "(0, 1]",
        });
    }
    if xi_reset == 0.0 {
        return Err(LatentError::DegenerateReset);
    }
    let avg = gamma * loss / (1.0 - gamma);
    let init = loss / (xi_reset * (1.0 - gamma));
    Ok(GapBounds {
        avg,
        init,
        avg_vacuous: avg > 1.0,
        init_vacuous: init > 1.0,
    })
}

/// How a certification run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    /// The sample count reached the PAC requirement; the bounds hold with
    /// the requested confidence.
    Criterion,
    /// The sample cap was hit first; the report is uncertified.
    Cap,
}

/// Which certification flow produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PacMode {
    Avg,
    Init,
    Online,
}

/// The outcome of a PAC certification run: the estimates, the sample count,
/// and the value-gap bounds they imply. The bounds include the `epsilon`
/// estimation slack, so a criterion-terminated report's bounds hold with
/// probability at least `1 - delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacReport {
    pub mode: PacMode,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub samples: u64,
    #[serde(rename = "L_hat")]
    pub l_hat: f64,
    pub xi_hat: f64,
    pub avg_bound: f64,
    /// Undefined (serialized as null) when the reset state was never
    /// sampled.
    pub init_bound: Option<f64>,
    /// The bound this report's mode is about exceeds 1 or is undefined.
    pub vacuous: bool,
    pub terminated_by: Termination,
}

impl PacReport {
    fn build(
        mode: PacMode,
        params: PacParams,
        samples: u64,
        l_hat: f64,
        xi_hat: f64,
        terminated_by: Termination,
    ) -> PacReport {
        let horizon = 1.0 - params.gamma;
        let avg_bound = params.gamma * l_hat / horizon + params.epsilon;
        let init_bound =
            (xi_hat > 0.0).then(|| l_hat / (xi_hat * horizon) + params.epsilon);
        let vacuous = match mode {
            PacMode::Avg => avg_bound > 1.0,
            PacMode::Init | PacMode::Online => init_bound.is_none_or(|b| b > 1.0),
        };
        PacReport {
            mode,
            epsilon: params.epsilon,
            delta: params.delta,
            gamma: params.gamma,
            samples,
            l_hat,
            xi_hat,
            avg_bound,
            init_bound,
            vacuous,
            terminated_by,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<PacReport, LatentError> {
        serde_json::from_str(text).map_err(|e| LatentError::Json {
            detail: e.to_string(),
        })
    }
}

/// Accumulates the two running estimates of the certification loop.
struct RunningEstimates {
    agreement_sum: f64,
    reset_hits: u64,
    count: u64,
}

impl RunningEstimates {
    fn new() -> Self {
        Self {
            agreement_sum: 0.0,
            reset_hits: 0,
            count: 0,
        }
    }

    fn push(&mut self, agreement: f64, at_reset: bool) {
        self.agreement_sum += agreement;
        self.reset_hits += u64::from(at_reset);
        self.count += 1;
    }

    fn loss(&self) -> f64 {
        1.0 - self.agreement_sum / self.count as f64
    }

    fn reset_mass(&self) -> f64 {
        self.reset_hits as f64 / self.count as f64
    }
}

/// How many samples the online loop draws between re-evaluations of the
/// required count.
const ONLINE_BATCH: u64 = 4096;

/// Certifies the initial-state value-gap bound online: draws batches of
/// transitions, updates the loss and reset-mass estimates, and recomputes
/// the required sample count — itself a function of the estimates — until
/// the collected samples meet it or `cap` is reached.
///
/// A cap-terminated report is still returned, with `terminated_by` set to
/// [`Termination::Cap`]; its bounds are uncertified.
pub fn certify_online(
    source: &mut dyn SampleSource,
    latent: &LatentMdp,
    phi: &Embedding,
    latent_policy: &Policy,
    reset: StateId,
    params: PacParams,
    cap: u64,
) -> Result<PacReport, LatentError> {
    check_certification_spaces(latent, phi, latent_policy)?;
    if cap == 0 {
        return Err(LatentError::InvalidParameter {
            name: "cap",
            value: 0.0,
            range: "at least 1",
        });
    }
    let mut estimates = RunningEstimates::new();
    let mut required: Option<u64> = None;
    let terminated_by = loop {
        // Draw up to a batch, but never overshoot a known requirement or
        // the cap.
        let goal = required.map_or(cap, |r| r.min(cap));
        let take = ONLINE_BATCH.min(goal.saturating_sub(estimates.count)).max(1);
        for _ in 0..take {
            let (s, a, s_next) = source.next_triple()?;
            let agreement = step_agreement(latent, phi, s, a, s_next)?;
            estimates.push(agreement, s == reset);
        }
        if estimates.reset_hits > 0 {
            let needed = pac_sample_size(
                SampleMode::Init,
                params.epsilon,
                params.delta,
                params.gamma,
                Some((estimates.loss(), estimates.reset_mass())),
            )?;
            required = Some(needed);
            if estimates.count >= needed {
                break Termination::Criterion;
            }
        }
        if estimates.count >= cap {
            break Termination::Cap;
        }
    };
    Ok(PacReport::build(
        PacMode::Online,
        params,
        estimates.count,
        estimates.loss(),
        estimates.reset_mass(),
        terminated_by,
    ))
}

/// Certifies the average value-gap bound with a precomputed sample count:
/// draws exactly `pac_sample_size(Avg, ...)` transitions and reports the
/// resulting estimates and bounds.
pub fn certify_average(
    source: &mut dyn SampleSource,
    latent: &LatentMdp,
    phi: &Embedding,
    latent_policy: &Policy,
    reset: StateId,
    params: PacParams,
) -> Result<PacReport, LatentError> {
    check_certification_spaces(latent, phi, latent_policy)?;
    let needed = pac_sample_size(
        SampleMode::Avg,
        params.epsilon,
        params.delta,
        params.gamma,
        None,
    )?;
    let mut estimates = RunningEstimates::new();
    for _ in 0..needed {
        let (s, a, s_next) = source.next_triple()?;
        let agreement = step_agreement(latent, phi, s, a, s_next)?;
        estimates.push(agreement, s == reset);
    }
    Ok(PacReport::build(
        PacMode::Avg,
        params,
        estimates.count,
        estimates.loss(),
        estimates.reset_mass(),
        Termination::Criterion,
    ))
}

fn check_certification_spaces(
    latent: &LatentMdp,
    phi: &Embedding,
    latent_policy: &Policy,
) -> Result<(), LatentError> {
    if phi.n_latent() != latent.n_states() {
        return Err(LatentError::DomainMismatch {
            detail: format!(
                "embedding has {} latent states, latent model has {}",
                phi.n_latent(),
                latent.n_states()
            ),
        });
    }
    if latent_policy.n_states() != latent.n_states() {
        return Err(LatentError::DomainMismatch {
            detail: format!(
                "latent policy covers {} states, latent model has {}",
                latent_policy.n_states(),
                latent.n_states()
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_sample_size_matches_hand_arithmetic() {
        // ceil(-ln(0.05) / (2 * 0.1^2)) = ceil(149.786...) = 150.
        let t = pac_sample_size(SampleMode::Raw, 0.1, 0.05, 0.9, None).unwrap();
        assert_eq!(t, 150);
    }

    #[test]
    fn avg_sample_size_matches_hand_arithmetic() {
        // ceil(0.81 * -ln(0.05) / (2 * 0.01 * 0.01)) = ceil(12132.7...) = 12133.
        let t = pac_sample_size(SampleMode::Avg, 0.1, 0.05, 0.9, None).unwrap();
        assert_eq!(t, 12133);
    }

    #[test]
    fn tightening_epsilon_tenfold_costs_a_hundredfold() {
        for mode in [SampleMode::Raw, SampleMode::Avg] {
            let coarse = pac_sample_size(mode, 0.1, 0.05, 0.9, None).unwrap();
            let fine = pac_sample_size(mode, 0.01, 0.05, 0.9, None).unwrap();
            // Exact up to the two ceilings.
            assert!(fine <= 100 * coarse);
            assert!(fine >= 100 * (coarse - 1));
        }
    }

    #[test]
    fn init_mode_needs_estimates_and_positive_reset_mass() {
        let err = pac_sample_size(SampleMode::Init, 0.1, 0.05, 0.9, None).unwrap_err();
        assert!(matches!(err, LatentError::MissingEstimates));
        let err =
            pac_sample_size(SampleMode::Init, 0.1, 0.05, 0.9, Some((0.2, 0.0))).unwrap_err();
        assert!(matches!(err, LatentError::DegenerateReset));
        let t = pac_sample_size(SampleMode::Init, 0.1, 0.05, 0.9, Some((0.0, 0.5))).unwrap();
        // gamma' = (0.5 * 1.01)^2, zeta = 0.5^4, delta' = 0.025.
        let expected = (0.505_f64.powi(2) * -(0.025_f64.ln())
            / (2.0 * 0.01 * 0.01 * 0.0625))
            .ceil() as u64;
        assert_eq!(t, expected);
    }

    #[test]
    fn zero_loss_gives_zero_bounds() {
        let b = value_gap_bounds(0.0, 0.3, 0.9).unwrap();
        assert_eq!(b.avg, 0.0);
        assert_eq!(b.init, 0.0);
        assert!(!b.avg_vacuous && !b.init_vacuous);
    }

    #[test]
    fn gap_bounds_match_hand_arithmetic() {
        let b = value_gap_bounds(0.01, 0.1, 0.9).unwrap();
        assert!((b.avg - 0.09).abs() < 1e-15);
        assert!((b.init - 1.0).abs() < 1e-15);
        assert!(!b.avg_vacuous);
    }

    #[test]
    fn bounds_above_one_are_flagged_not_clamped() {
        let b = value_gap_bounds(0.5, 0.1, 0.9).unwrap();
        assert!((b.init - 50.0).abs() < 1e-12);
        assert!(b.init_vacuous);
        assert!(b.avg > 1.0 && b.avg_vacuous);
    }

    #[test]
    fn gap_bounds_grow_with_gamma() {
        let low = value_gap_bounds(0.05, 0.2, 0.5).unwrap();
        let high = value_gap_bounds(0.05, 0.2, 0.9).unwrap();
        assert!(high.avg > low.avg);
        assert!(high.init > low.init);
    }

    #[test]
    fn zero_reset_mass_is_degenerate() {
        let err = value_gap_bounds(0.1, 0.0, 0.9).unwrap_err();
        assert!(matches!(err, LatentError::DegenerateReset));
    }

    #[test]
    fn report_json_uses_the_documented_field_names() {
        let report = PacReport::build(
            PacMode::Online,
            PacParams::new(0.1, 0.05, 0.9).unwrap(),
            1000,
            0.02,
            0.25,
            Termination::Criterion,
        );
        let text = report.to_json();
        for key in [
            "\"mode\"",
            "\"epsilon\"",
            "\"delta\"",
            "\"gamma\"",
            "\"samples\"",
            "\"L_hat\"",
            "\"xi_hat\"",
            "\"avg_bound\"",
            "\"init_bound\"",
            "\"vacuous\"",
            "\"terminated_by\"",
        ] {
            assert!(text.contains(key), "missing {key} in {text}");
        }
        assert!(text.contains("\"online\""));
        assert!(text.contains("\"criterion\""));
        let back = PacReport::from_json(&text).unwrap();
        assert_eq!(back, report);
    }
}
