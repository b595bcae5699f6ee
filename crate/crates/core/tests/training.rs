use ndarray::Array2;
use spikegrad::bptt::{
    backward, evaluate, forward, train_bptt, BackwardOptions, DirectGrads, Feedback, Network, OptimizerKind, TrainConfig,
};
use spikegrad::harness::{gen_rate_task, Dataset};
use spikegrad::neuron::{LifParams, ResetMode};
use spikegrad::objectives::{ObjectiveSpec, RegularizerSpec};
use spikegrad::online::{train_online, OnlineConfig, StepLoss, Stream, UpdatePolicy};
use spikegrad::plasticity::{perturbation_train, stdp_update, StdpParams};
use spikegrad::rng::seeded;
use spikegrad::surrogate::SurrogateKind;
use spikegrad::SpikeRaster;

fn task() -> Dataset {
    gen_rate_task(9, 8, 30, 0.2, 0.8, 24).unwrap()
}

fn cfg(epochs: usize) -> TrainConfig {
    TrainConfig {
        optimizer: OptimizerKind::adam(1e-2),
        epochs,
        batch_size: 8,
        seed: 9,
        ..Default::default()
    }
}

#[test]
fn every_objective_trains_without_error_and_lowers_loss() {
    let data = task();
    let objectives = [
        ObjectiveSpec::CeSpikeRate,
        ObjectiveSpec::MseSpikeRate {
            on_count: 20.0,
            off_count: 2.0,
        },
        ObjectiveSpec::MaxMembraneCe,
        ObjectiveSpec::SumMembraneCe,
        ObjectiveSpec::MseMembrane {
            on_level: 1.2,
            off_level: 0.0,
        },
    ];
    for objective in objectives {
        let mut net = Network::init(&[8, 12, 2], &LifParams::default(), false, &mut seeded(3)).unwrap();
        let before = evaluate(&net, &data, &objective, &RegularizerSpec::default()).unwrap().loss;
        train_bptt(&mut net, &data, &TrainConfig { objective, ..cfg(15) }).unwrap();
        let after = evaluate(&net, &data, &objective, &RegularizerSpec::default()).unwrap().loss;
        assert!(after < before, "{}: {before} -> {after}", objective.name());
    }
}

#[test]
fn recurrent_learnable_beta_network_trains() {
    let data = task();
    let lif = LifParams {
        learn_beta: true,
        ..LifParams::new(0.8, 1.0, ResetMode::Zero).unwrap()
    };
    let mut net = Network::init(&[8, 10, 2], &lif, true, &mut seeded(4)).unwrap();
    let h = train_bptt(&mut net, &data, &cfg(20)).unwrap();
    assert!(h.last().unwrap().loss < h[0].loss);
    for l in &net.layers {
        assert!(l.lif.beta > 0.0 && l.lif.beta <= 1.0);
        assert_ne!(l.lif.beta, 0.8, "beta should have moved");
    }
}

#[test]
fn random_feedback_differs_from_symmetric_but_still_learns() {
    let data = task();
    let mut rng = seeded(5);
    let mut net = Network::init(&[8, 12, 2], &LifParams::default(), false, &mut rng).unwrap();
    net.attach_random_feedback(&mut rng);
    let s = &data.samples[0];
    let rec = forward(&net, &s.input).unwrap();
    let l = ObjectiveSpec::CeSpikeRate
        .evaluate(&rec.output().membrane, &rec.output().spikes, s.label)
        .unwrap();
    let direct = DirectGrads::output(&rec, l.d_spikes, l.d_membrane);
    let sym = backward(&net, &rec, &direct, &BackwardOptions::default()).unwrap();
    let fa = backward(
        &net,
        &rec,
        &direct,
        &BackwardOptions {
            feedback: Feedback::RandomFixed,
            ..Default::default()
        },
    )
    .unwrap();
    // output layer gradient does not pass through feedback; hidden does
    assert_eq!(sym.layers[1].dw, fa.layers[1].dw);
    assert_ne!(sym.layers[0].dw, fa.layers[0].dw);

    let h = train_bptt(
        &mut net,
        &data,
        &TrainConfig {
            feedback: Feedback::RandomFixed,
            ..cfg(20)
        },
    )
    .unwrap();
    assert!(h.last().unwrap().loss < 0.5 * h[0].loss);
}

#[test]
fn upper_activity_penalty_quiets_the_network() {
    let data = task();
    let run = |reg: RegularizerSpec| {
        let mut net = Network::init(&[8, 12, 2], &LifParams::default(), false, &mut seeded(6)).unwrap();
        train_bptt(&mut net, &data, &TrainConfig { reg, ..cfg(15) }).unwrap();
        evaluate(&net, &data, &ObjectiveSpec::CeSpikeRate, &RegularizerSpec::default())
            .unwrap()
            .mean_counts
            .iter()
            .flatten()
            .sum::<f64>()
    };
    let plain = run(RegularizerSpec::default());
    let quiet = run(RegularizerSpec {
        lambda_upper: 0.01,
        theta_upper: 5.0,
        upper_exponent: 2,
        ..Default::default()
    });
    assert!(quiet < plain, "{quiet} vs {plain}");
}

#[test]
fn online_per_step_and_deferred_both_learn() {
    let inputs = Array2::from_shape_fn((50, 4), |(t, i)| ((t + i) % 3 == 0) as u8 as f64);
    let targets = Array2::from_shape_fn((50, 2), |(_, j)| 0.3 + 0.4 * j as f64);
    let streams = [Stream { inputs, targets }];
    // deferred updates sum a whole sequence of gradients, so the step shrinks
    // with the interval
    for (policy, lr) in [(UpdatePolicy::PerStep(1), 2e-3), (UpdatePolicy::PerStep(10), 5e-4), (UpdatePolicy::Deferred, 1e-4)] {
        let mut net = Network::init(&[4, 2], &LifParams::default(), false, &mut seeded(8)).unwrap();
        let h = train_online(
            &mut net,
            &streams,
            &OnlineConfig {
                loss: StepLoss::Membrane,
                surrogate: SurrogateKind::default(),
                policy,
                optimizer: OptimizerKind::Sgd { lr },
                epochs: 15,
            },
        )
        .unwrap();
        let (first, last) = (h.sequence_losses[0], *h.sequence_losses.last().unwrap());
        assert!(last < first, "{policy:?}: {first} -> {last}");
    }
}

#[test]
fn perturbation_never_accepts_a_worse_model() {
    let data = task();
    let mut net = Network::init(&[8, 6, 2], &LifParams::default(), false, &mut seeded(2)).unwrap();
    let h = perturbation_train(&mut net, &data, &ObjectiveSpec::CeSpikeRate, 0.1, 25, 1).unwrap();
    let mut best = h.initial_loss;
    for (l, ok) in h.losses.iter().zip(&h.accepted) {
        assert_eq!(*ok, *l < best);
        best = best.min(*l);
    }
    let now = evaluate(&net, &data, &ObjectiveSpec::CeSpikeRate, &RegularizerSpec::default()).unwrap().loss;
    assert!((now - best).abs() < 1e-12);
}

#[test]
fn stdp_strengthens_causal_inputs_within_bounds() {
    let t = 200;
    let mut pre = SpikeRaster::zeros(t, 2);
    let mut post = SpikeRaster::zeros(t, 1);
    for k in 0..19 {
        let s = 5 + 10 * k;
        pre.set(s - 3, 0, true);
        post.set(s, 0, true);
        pre.set(s + 3, 1, true);
    }
    let p = StdpParams::default();
    let mut w = Array2::from_elem((1, 2), 0.5);
    for _ in 0..200 {
        w = stdp_update(&pre, &post, &w, &p).unwrap();
    }
    assert_eq!(w[[0, 0]], p.w_max);
    assert_eq!(w[[0, 1]], p.w_min);
}
