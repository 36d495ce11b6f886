//! Independent oracles shared by the property and acceptance targets. Each
//! check returns `Err` with a description of the first mismatch.

#![allow(dead_code)]

use iiot_trust::forest::{best_split, gini, FeatureVector, LabeledExample, NUM_FEATURES};
use iiot_trust::qos::{compute_netc, NetCWeights, NormalizedQos};
use iiot_trust::tca::{boost_factor, boosted_probs, BoostParams, ConvergencePrediction};
use iiot_trust::trust::{step_trust, transition_probs, TransitionProbs, TrustParams, TrustState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

fn close(what: &str, got: f64, want: f64) -> Check {
    if (got - want).abs() < 1e-12 {
        Ok(())
    } else {
        Err(format!("{what}: {got} != {want}"))
    }
}

pub fn pred(class_id: u8) -> ConvergencePrediction {
    ConvergencePrediction::from_class(class_id).unwrap()
}

pub fn netc_table() -> Check {
    let w = NetCWeights::equal();
    let best = NormalizedQos::from_array([1.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
    let worst = NormalizedQos::from_array([0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    let mid = NormalizedQos::from_array([0.5; 6]);
    close("best netC", compute_netc(&best, &w), 1.0)?;
    close("worst netC", compute_netc(&worst, &w), 0.0)?;
    close("midpoint netC", compute_netc(&mid, &w), 0.5)
}

pub fn boost_table() -> Check {
    let b = BoostParams::default();
    let bf = |netc: f64, class_id: u8| boost_factor(netc, &pred(class_id), &b).unwrap();
    close("bf(0, pc 16)", bf(0.0, 4), 1.2)?;
    close("bf(0.5, pc 8)", bf(0.5, 2), 1.05)?;
    close("bf(0.79, pc 16)", bf(0.79, 4), 1.0 + 0.21 * 0.2)?;
    close("bf(0.8, pc 16)", bf(0.8, 4), 1.0)?;
    close("bf(0.85, pc 16)", bf(0.85, 4), 1.0)?;
    close("bf(1, pc 16)", bf(1.0, 4), 1.0)?;
    close("bf(0.3, pc 12)", bf(0.3, 3), 1.105)?;
    let t = TrustParams {
        q_floor: 0.25,
        ..Default::default()
    };
    let p = boosted_probs(0.9, 0.3, &pred(3), &t, &b).unwrap();
    close("boosted p_up", p.up, 0.3315)
}

/// bf in [1, 1.2] and bf = 1 exactly when netC >= 0.8, on a fine grid.
pub fn boost_bounds_scan() -> Check {
    let b = BoostParams::default();
    for i in 0..=10_000 {
        let netc = f64::from(i) / 10_000.0;
        for class_id in 1..=4 {
            let bf = boost_factor(netc, &pred(class_id), &b).map_err(|e| e.to_string())?;
            if !(1.0..=1.2).contains(&bf) {
                return Err(format!(
                    "bf({netc}, class {class_id}) = {bf} outside [1, 1.2]"
                ));
            }
            if (bf == 1.0) != (netc >= 0.8) {
                return Err(format!(
                    "bf({netc}, class {class_id}) = {bf} violates the cutoff"
                ));
            }
        }
    }
    Ok(())
}

/// Raising any single coordinate's quality never lowers netC.
pub fn netc_monotone_scan(cases: usize, seed: u64) -> Check {
    let w = NetCWeights::equal();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Higher is better for snr, throughput, sinr; lower for the others.
    let better_up = [true, false, false, false, true, true];
    for _ in 0..cases {
        let v: [f64; 6] = std::array::from_fn(|_| rng.gen());
        let base = compute_netc(&NormalizedQos::from_array(v), &w);
        for (i, up) in better_up.iter().enumerate() {
            let mut u = v;
            let d = rng.gen::<f64>();
            u[i] = if *up {
                (v[i] + d).min(1.0)
            } else {
                (v[i] - d).max(0.0)
            };
            let moved = compute_netc(&NormalizedQos::from_array(u), &w);
            if moved < base - 1e-15 {
                return Err(format!("coordinate {i}: {base} -> {moved}"));
            }
        }
    }
    Ok(())
}

/// Row-stochasticity, grid confinement, single-step moves and absorption at
/// the boundaries over `n` randomized transitions.
pub fn markov_invariants(n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = TrustParams::default();
    let mut state = TrustState::NEUTRAL;
    for k in 0..n {
        let p = transition_probs(rng.gen(), rng.gen(), 1.0 + 0.2 * rng.gen::<f64>(), &t)
            .map_err(|e| e.to_string())?;
        if !p.is_row_stochastic() {
            return Err(format!("transition {k}: {p:?} not row-stochastic"));
        }
        let next = step_trust(state, &p, &mut rng);
        if next.index() > 10 || next.index().abs_diff(state.index()) > 1 {
            return Err(format!("transition {k}: {state} -> {next}"));
        }
        state = if rng.gen::<f64>() < 0.01 {
            TrustState::from_index(rng.gen_range(0..=10)).unwrap()
        } else {
            next
        };
    }
    let up = TransitionProbs {
        up: 1.0,
        down: 0.0,
        stay: 0.0,
    };
    let down = TransitionProbs {
        up: 0.0,
        down: 1.0,
        stay: 0.0,
    };
    if step_trust(TrustState::MAX, &up, &mut rng) != TrustState::MAX {
        return Err("ceiling not absorbing".into());
    }
    if step_trust(TrustState::MIN, &down, &mut rng) != TrustState::MIN {
        return Err("floor not absorbing".into());
    }
    Ok(())
}

/// Largest deviation between empirical and specified up/down/stay
/// frequencies, over a few probability rows and interior states.
pub fn step_frequency_deviation(draws: u32, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = [
        (0.4, 0.1, 0.5),
        (0.9, 0.0, 0.1),
        (0.0, 0.3, 0.7),
        (0.25, 0.25, 0.5),
    ];
    let mut worst = 0.0f64;
    for (up, down, stay) in rows {
        let probs = TransitionProbs { up, down, stay };
        for idx in [1u8, 5, 9] {
            let s = TrustState::from_index(idx).unwrap();
            let mut counts = [0u32; 3];
            for _ in 0..draws {
                let next = step_trust(s, &probs, &mut rng);
                counts[match next.index().cmp(&s.index()) {
                    std::cmp::Ordering::Greater => 0,
                    std::cmp::Ordering::Less => 1,
                    std::cmp::Ordering::Equal => 2,
                }] += 1;
            }
            for (c, p) in counts.iter().zip([up, down, stay]) {
                worst = worst.max((f64::from(*c) / f64::from(draws) - p).abs());
            }
        }
    }
    worst
}

/// Exhaustive scan: every feature, every midpoint between consecutive
/// distinct values, child impurities recomputed from scratch.
fn brute_force(
    data: &[LabeledExample],
    features: &[usize],
    min_leaf: usize,
) -> Vec<(usize, f64, f64)> {
    let counts = |set: &[&LabeledExample]| {
        let mut c = [0u32; 4];
        for e in set {
            c[usize::from(e.class_id) - 1] += 1;
        }
        c
    };
    let all: Vec<&LabeledExample> = data.iter().collect();
    let parent = gini(&counts(&all)).unwrap();
    let mut out = Vec::new();
    let mut fs = features.to_vec();
    fs.sort_unstable();
    fs.dedup();
    for &f in &fs {
        let mut values: Vec<f64> = data.iter().map(|e| e.features.get(f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let thr = (pair[0] + pair[1]) / 2.0;
            let (l, r): (Vec<&LabeledExample>, Vec<&LabeledExample>) =
                data.iter().partition(|e| e.features.get(f) <= thr);
            if l.len() < min_leaf || r.len() < min_leaf {
                continue;
            }
            let n = data.len() as f64;
            let child = l.len() as f64 / n * gini(&counts(&l)).unwrap()
                + r.len() as f64 / n * gini(&counts(&r)).unwrap();
            out.push((f, thr, parent - child));
        }
    }
    out
}

/// `best_split` against the exhaustive scan on `cases` random small sets.
pub fn best_split_vs_brute_force(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = rng.gen_range(1..=20);
        let n_feat = rng.gen_range(1..=3);
        let features: Vec<usize> = (0..n_feat)
            .map(|_| rng.gen_range(0..NUM_FEATURES))
            .collect();
        let min_leaf = rng.gen_range(1..=3);
        let n_classes = rng.gen_range(1..=4);
        let data: Vec<LabeledExample> = (0..n)
            .map(|_| {
                let v: [f64; NUM_FEATURES] =
                    std::array::from_fn(|_| f64::from(rng.gen_range(0..8u8)) / 8.0);
                LabeledExample {
                    features: FeatureVector::from_array(v),
                    class_id: rng.gen_range(1..=n_classes),
                }
            })
            .collect();
        let oracle = brute_force(&data, &features, min_leaf);
        let best_gain = oracle.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
        match best_split(&data, &features, min_leaf) {
            None if best_gain > 1e-12 => {
                return Err(format!("case {case}: missed a split with gain {best_gain}"))
            }
            None => {}
            Some(s) => {
                if (s.gain - best_gain).abs() >= 1e-9 {
                    return Err(format!("case {case}: gain {} vs {best_gain}", s.gain));
                }
                // Ties may resolve to any optimal candidate; a unique optimum must match exactly.
                let tied: Vec<_> = oracle
                    .iter()
                    .filter(|c| (c.2 - best_gain).abs() < 1e-9)
                    .collect();
                if !tied
                    .iter()
                    .any(|c| c.0 == s.feature && (c.1 - s.threshold).abs() < 1e-12)
                {
                    return Err(format!(
                        "case {case}: ({}, {}) not optimal",
                        s.feature, s.threshold
                    ));
                }
            }
        }
    }
    Ok(())
}
