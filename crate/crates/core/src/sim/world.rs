use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    convergence::detect_convergence, ConvergenceRecord, ExperimentConfig, Mode, ModelParams, Role,
};
use crate::error::Result;
use crate::forest::FeatureVector;
use crate::policy::{
    evaluate_policy, filter_participants, propagate_alert, Alert, LifecycleState, ServerView,
};
use crate::qos::{
    compute_netc, normalize, sample_profile, NetworkProfile, NormalizedQos, QosSample,
};
use crate::tca::{boost_factor, ConvergencePredictor};
use crate::trust::{
    aggregate_indirect, behavior_score, observe_behavior, probe_successes, recommendation_penalty,
    step_trust, transition_probs, BehaviorIndicators, Observation, TransitionProbs, TrustState,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub node_id: usize,
    pub community_id: usize,
    pub role: Role,
    pub true_behavior: BehaviorIndicators,
}

/// Communities of member nodes, each supervised by a (trusted) CL.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    /// Member ids per community, ascending.
    pub communities: Vec<Vec<usize>>,
}

impl Topology {
    pub fn malicious_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role.is_malicious()).count()
    }
}

/// Splits `n_nodes` into consecutive communities of `community_size` (the
/// last one may be smaller) and marks `floor(p_m * n_nodes)` nodes, chosen
/// uniformly, as `cfg.attack`.
pub fn build_network<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    behavior: &super::BehaviorParams,
    rng: &mut R,
) -> Result<Topology> {
    cfg.validate()?;
    let n = cfg.n_nodes;
    let n_malicious = ((cfg.p_m * n as f64) + 1e-9).floor() as usize;
    let mut roles = vec![Role::Honest; n];
    for i in index::sample(rng, n, n_malicious) {
        roles[i] = cfg.attack;
    }
    let nodes: Vec<NodeSpec> = roles
        .into_iter()
        .enumerate()
        .map(|(id, role)| NodeSpec {
            node_id: id,
            community_id: id / cfg.community_size,
            role,
            true_behavior: behavior.true_behavior(role),
        })
        .collect();
    let communities = (0..n)
        .collect::<Vec<_>>()
        .chunks(cfg.community_size)
        .map(<[usize]>::to_vec)
        .collect();
    Ok(Topology { nodes, communities })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub epoch: u32,
    pub community: usize,
    pub netc: f64,
    /// Predicted convergence epochs, TCA mode only.
    pub pc: Option<u32>,
    pub bf: f64,
}

/// Mutable state of one run.
pub struct World<'a> {
    model: &'a ModelParams,
    profile: NetworkProfile,
    pub topology: Topology,
    pub trust: Vec<TrustState>,
    pub lifecycle: Vec<LifecycleState>,
    /// Trust per node, index 0 is the admission state.
    pub traces: Vec<Vec<TrustState>>,
    honesty_adjustment: Vec<f64>,
    channels: Vec<Option<QosSample>>,
    pub last_scores: Vec<Option<f64>>,
    pub server: ServerView,
    pub alerts: Vec<Alert>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub epoch: u32,
}

struct Channel {
    norm: NormalizedQos,
    qos: QosSample,
    netc: f64,
}

impl<'a> World<'a> {
    pub fn new(model: &'a ModelParams, topology: Topology, profile: NetworkProfile) -> Self {
        let n = topology.nodes.len();
        let init = model.behavior.initial_state();
        let n_channels = if model.behavior.per_node_channels {
            n
        } else {
            topology.communities.len()
        };
        Self {
            model,
            profile,
            topology,
            trust: vec![init; n],
            lifecycle: vec![LifecycleState::Active; n],
            traces: vec![vec![init]; n],
            honesty_adjustment: vec![1.0; n],
            channels: vec![None; n_channels],
            last_scores: vec![None; n],
            server: ServerView::default(),
            alerts: Vec::new(),
            diagnostics: Vec::new(),
            epoch: 0,
        }
    }

    /// Switches the channel profile from the next epoch on.
    pub fn set_profile(&mut self, profile: NetworkProfile) {
        self.profile = profile;
    }

    fn sample_channel<R: Rng + ?Sized>(&mut self, idx: usize, rng: &mut R) -> Result<Channel> {
        let qos = sample_profile(&self.profile, self.channels[idx].as_ref(), rng);
        self.channels[idx] = Some(qos);
        let norm = normalize(&qos, &self.model.bounds)?;
        let netc = compute_netc(&norm, &self.model.netc_weights);
        Ok(Channel { norm, qos, netc })
    }

    /// What a prober learns about a target's cooperation over `qos`.
    fn estimate_cooperation<R: Rng + ?Sized>(
        &self,
        cooperation: f64,
        qos: &QosSample,
        rng: &mut R,
    ) -> Option<f64> {
        let n_obs = self.model.trust.n_obs;
        let k = probe_successes(cooperation, qos.packet_loss, n_obs, rng)?;
        Some(self.to_estimate(f64::from(k) / f64::from(n_obs), qos))
    }

    fn to_estimate(&self, observed_rate: f64, qos: &QosSample) -> f64 {
        if self.model.behavior.loss_compensated_estimates {
            (observed_rate / (1.0 - qos.packet_loss)).min(1.0)
        } else {
            observed_rate
        }
    }

    /// One evaluation epoch: channel sampling, CL observation, recommendation
    /// exchange, scoring, (boosted) Markov steps, then the response policy.
    pub fn run_epoch<R: Rng + ?Sized>(
        &mut self,
        mode: Mode,
        predictor: &dyn ConvergencePredictor,
        rng: &mut R,
    ) -> Result<()> {
        self.epoch += 1;
        let model = self.model;
        let behavior = &model.behavior;
        let tp = &model.trust;
        let mut next_trust = self.trust.clone();

        for c in 0..self.topology.communities.len() {
            let members = self.topology.communities[c].clone();
            let m = members.len();
            let local = |id: usize| id - members[0];

            let channels: Vec<Channel> = if behavior.per_node_channels {
                members
                    .iter()
                    .map(|&id| self.sample_channel(id, rng))
                    .collect::<Result<_>>()?
            } else {
                vec![self.sample_channel(c, rng)?]
            };
            let chan_of = |id: usize| if channels.len() == 1 { 0 } else { local(id) };

            // CL-side monitoring of every member, participating or not.
            let mut observations = Vec::with_capacity(m);
            let mut cl_view = Vec::with_capacity(m);
            for &id in &members {
                let qos = channels[chan_of(id)].qos;
                let o = observe_behavior(
                    &self.topology.nodes[id].true_behavior,
                    &qos,
                    tp.n_obs,
                    tp.observation_noise,
                    rng,
                );
                cl_view.push(match o {
                    Observation::Evidence(ind) => Some(self.to_estimate(ind.cooperation, &qos)),
                    Observation::NoEvidence => None,
                });
                observations.push(o);
            }

            // Recommendation exchange among participants.
            let participants = filter_participants(&members, &self.lifecycle);
            let mut about: Vec<Vec<(f64, TrustState)>> = vec![Vec::new(); m];
            let mut given: Vec<Vec<(f64, f64)>> = vec![Vec::new(); m];
            for &j in &participants {
                let rec_role = self.topology.nodes[j].role;
                for &i in &participants {
                    if i == j {
                        continue;
                    }
                    let target = &self.topology.nodes[i];
                    let rec = match rec_role {
                        Role::BadMouther => {
                            if behavior.collusion && target.role.is_malicious() {
                                Some(1.0)
                            } else {
                                Some(rng.gen::<f64>() * behavior.bad_mouth_max)
                            }
                        }
                        Role::Honest | Role::NonCooperative => {
                            let qos = channels[chan_of(i)].qos;
                            self.estimate_cooperation(target.true_behavior.cooperation, &qos, rng)
                        }
                    };
                    let Some(rec) = rec else { continue };
                    about[local(i)].push((rec, self.trust[j]));
                    if let Some(view) = cl_view[local(i)] {
                        given[local(j)].push((rec, view));
                    }
                }
            }

            // Scores. Honesty adjustments persist while a node is silent.
            let mut scores: Vec<Option<f64>> = Vec::with_capacity(m);
            for (k, &id) in members.iter().enumerate() {
                if !given[k].is_empty() {
                    self.honesty_adjustment[id] = recommendation_penalty(&given[k]);
                }
                scores.push(match observations[k] {
                    Observation::NoEvidence => None,
                    Observation::Evidence(o) => {
                        let ind = BehaviorIndicators::new(
                            o.cooperation,
                            o.direct_honesty * self.honesty_adjustment[id],
                            aggregate_indirect(&about[k], tp.untrusted_threshold),
                        );
                        Some(behavior_score(&ind, &tp.weights))
                    }
                });
            }

            // Boosting factor per channel, from channel features only.
            let mean_score = {
                let part: Vec<f64> = participants
                    .iter()
                    .filter_map(|&id| scores[local(id)])
                    .collect();
                if part.is_empty() {
                    0.5
                } else {
                    part.iter().sum::<f64>() / part.len() as f64
                }
            };
            let mut bfs = Vec::with_capacity(channels.len());
            for ch in &channels {
                let (pc, bf) = match mode {
                    Mode::Baseline => (None, 1.0),
                    Mode::Tca => {
                        let features = channel_features(ch, behavior.initial_trust, mean_score);
                        let prediction = predictor.prediction(&features);
                        (
                            Some(prediction.pc),
                            boost_factor(ch.netc, &prediction, &model.boost)?,
                        )
                    }
                };
                self.diagnostics.push(DiagnosticsRow {
                    epoch: self.epoch,
                    community: c,
                    netc: ch.netc,
                    pc,
                    bf,
                });
                bfs.push(bf);
            }

            for (k, &id) in members.iter().enumerate() {
                let ch = chan_of(id);
                let probs = match scores[k] {
                    None => TransitionProbs::FROZEN,
                    Some(s) => transition_probs(s, channels[ch].netc, bfs[ch], tp)?,
                };
                next_trust[id] = step_trust(self.trust[id], &probs, rng);
                self.last_scores[id] = scores[k];
            }
        }

        self.trust = next_trust;
        for (trace, &t) in self.traces.iter_mut().zip(&self.trust) {
            trace.push(t);
        }
        self.apply_policy();
        Ok(())
    }

    fn apply_policy(&mut self) {
        for id in 0..self.trust.len() {
            let community = self.topology.nodes[id].community_id;
            let (next, alert) = evaluate_policy(
                self.trust[id],
                self.lifecycle[id],
                &self.model.policy,
                id,
                community,
                self.epoch,
            );
            self.lifecycle[id] = next;
            if let Some(a) = alert {
                self.server = propagate_alert(&a, std::mem::take(&mut self.server));
                self.alerts.push(a);
            }
        }
    }
}

fn channel_features(ch: &Channel, initial_trust: f64, score: f64) -> FeatureVector {
    let n = ch.norm;
    FeatureVector {
        snr_n: n.snr_n,
        pl_n: n.pl_n,
        j_n: n.j_n,
        l_n: n.l_n,
        t_n: n.t_n,
        sinr_n: n.sinr_n,
        netc: ch.netc,
        initial_trust,
        behavior_score: score.clamp(0.0, 1.0),
    }
}

pub struct RunOutput {
    pub seed: u64,
    pub records: Vec<ConvergenceRecord>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub alerts: Vec<Alert>,
    pub server: ServerView,
    pub traces: Vec<Vec<TrustState>>,
    pub lifecycle: Vec<LifecycleState>,
}

/// Builds the network from `seed` and runs it for `cfg.epochs_cap` epochs.
pub fn run(
    model: &ModelParams,
    cfg: &ExperimentConfig,
    seed: u64,
    predictor: &dyn ConvergencePredictor,
) -> Result<RunOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topology = build_network(cfg, &model.behavior, &mut rng)?;
    let mut world = World::new(model, topology, *model.profiles.get(cfg.profile));
    for _ in 0..cfg.epochs_cap {
        world.run_epoch(cfg.mode, predictor, &mut rng)?;
    }
    let records = world
        .topology
        .nodes
        .iter()
        .map(|n| ConvergenceRecord {
            seed,
            node_id: n.node_id,
            role: n.role,
            profile: cfg.profile,
            mode: cfg.mode,
            convergence_epoch: detect_convergence(
                &world.traces[n.node_id],
                n.role,
                model.trust.trusted_threshold,
                model.trust.untrusted_threshold,
                cfg.k_stable,
            ),
            final_state: world.trust[n.node_id],
        })
        .collect();
    Ok(RunOutput {
        seed,
        records,
        diagnostics: world.diagnostics,
        alerts: world.alerts,
        server: world.server,
        traces: world.traces,
        lifecycle: world.lifecycle,
    })
}
