use rand::Rng;

use super::{convergence::detect_convergence, ModelParams, Role};
use crate::error::Result;
use crate::forest::FeatureVector;
use crate::qos::{compute_netc, normalize, sample_profile, NetworkProfile, QosSample};
use crate::trust::{
    behavior_score, observe_behavior, step_trust, transition_probs, Observation, TransitionProbs,
    TrustState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    /// Features at episode start.
    pub features: FeatureVector,
    pub convergence_epoch: Option<u32>,
}

/// Runs a lone honest node under `profile` with the unboosted chain until it
/// converges or `cap` epochs pass. `first` seeds the channel trace.
pub fn honest_episode<R: Rng + ?Sized>(
    model: &ModelParams,
    profile: &NetworkProfile,
    first: QosSample,
    initial: TrustState,
    cap: u32,
    k_stable: u32,
    rng: &mut R,
) -> Result<EpisodeOutcome> {
    let tp = &model.trust;
    let truth = model.behavior.true_behavior(Role::Honest);
    let mut qos = first;
    let mut state = initial;
    let mut trace = vec![initial];
    let mut features = None;
    for _ in 0..cap {
        let norm = normalize(&qos, &model.bounds)?;
        let netc = compute_netc(&norm, &model.netc_weights);
        let obs = observe_behavior(&truth, &qos, tp.n_obs, tp.observation_noise, rng);
        let score = match obs {
            Observation::Evidence(ind) => Some(behavior_score(&ind, &tp.weights)),
            Observation::NoEvidence => None,
        };
        if features.is_none() {
            features = Some(FeatureVector {
                snr_n: norm.snr_n,
                pl_n: norm.pl_n,
                j_n: norm.j_n,
                l_n: norm.l_n,
                t_n: norm.t_n,
                sinr_n: norm.sinr_n,
                netc,
                initial_trust: initial.value(),
                behavior_score: score.unwrap_or(0.0),
            });
        }
        let probs = match score {
            Some(s) => transition_probs(s, netc, 1.0, tp)?,
            None => TransitionProbs::FROZEN,
        };
        state = step_trust(state, &probs, rng);
        trace.push(state);
        if let Some(e) = detect_convergence(
            &trace,
            Role::Honest,
            tp.trusted_threshold,
            tp.untrusted_threshold,
            k_stable,
        ) {
            return Ok(EpisodeOutcome {
                features: features.expect("set on the first epoch"),
                convergence_epoch: Some(e),
            });
        }
        qos = sample_profile(profile, Some(&qos), rng);
    }
    Ok(EpisodeOutcome {
        features: features.unwrap_or_else(|| FeatureVector::from_array([0.0; 9])),
        convergence_epoch: None,
    })
}
