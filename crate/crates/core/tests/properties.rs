use proptest::prelude::*;
use synsamp_core::harness::{
    apply_lesion, run_segments, survival_curve, train_eval_readout, window_counts, InputSchedule, LesionKind, LesionSpec, Segment,
    SpikeEvent, SurvivalRecord,
};
use synsamp_core::priors::PriorSpec;
use synsamp_core::wta::{Plasticity, Projection, Simulator, Topology, WtaNetwork, WtaParams};
use synsamp_core::ChainRng;

fn small_net(seed: u64) -> WtaNetwork {
    // 5 inputs onto two circuits of 3, plus all-to-all lateral synapses
    let topology = Topology {
        n_inputs: 5,
        circuits: vec![3, 3],
        projections: vec![
            Projection { source_start: 0, source_end: 5, target_start: 0, target_end: 6 },
            Projection { source_start: 5, source_end: 11, target_start: 0, target_end: 6 },
        ],
    };
    let params = WtaParams { gamma: -0.2, ..WtaParams::default() };
    WtaNetwork::new(params, topology, &PriorSpec::WTA, &mut ChainRng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn schedule_duration_is_the_sum_of_segments(
        durations in prop::collection::vec(1u32..40, 1..8),
        rate in 0.0f64..80.0,
        seed in 0u64..1000,
    ) {
        let net = small_net(seed);
        let plasticity = Plasticity { b: 0.01, ..Plasticity::default() };
        let mut sim = Simulator::new(net, plasticity, seed).unwrap();
        let segments: Vec<Segment> =
            durations.iter().map(|&d| Segment { duration_ms: d as f64, rates: vec![rate; 5], label: None }).collect();
        let mut schedule = InputSchedule::default();
        schedule.segments = segments.clone();
        let expected: u32 = durations.iter().sum();
        prop_assert_eq!(schedule.total_duration_ms(), expected as f64);
        let events = run_segments(&mut sim, segments).unwrap();
        prop_assert_eq!(sim.time_ms(), expected as f64);
        prop_assert_eq!(sim.step_count(), expected as u64);
        prop_assert!(events.iter().all(|e| e.time_ms > 0.0 && e.time_ms <= expected as f64));
        let onsets = schedule.onsets_ms();
        prop_assert_eq!(onsets[0], 0.0);
        for w in onsets.windows(2).zip(&durations) {
            prop_assert_eq!(w.0[1] - w.0[0], *w.1 as f64);
        }
    }

    #[test]
    fn lesions_are_idempotent(seed in 0u64..1000, neurons in prop::collection::btree_set(0usize..6, 1..4), pick in 0usize..1000) {
        let base = small_net(seed);
        let once_twice = |spec: &LesionSpec| {
            let mut a = base.clone();
            apply_lesion(&mut a, spec).unwrap();
            let mut b = a.clone();
            apply_lesion(&mut b, spec).unwrap();
            (a, b)
        };
        let spec = LesionSpec { kind: LesionKind::RemoveNeurons, targets: neurons.into_iter().collect(), time_ms: 0.0 };
        let (a, b) = once_twice(&spec);
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(&a, &base);

        let laterals: Vec<usize> = (0..base.n_synapses()).filter(|&s| base.is_lateral(s)).collect();
        let targets: Vec<usize> = laterals.iter().copied().skip(pick % laterals.len()).step_by(3).collect();
        let spec = LesionSpec { kind: LesionKind::RemoveConnectionsBanRegrowth, targets, time_ms: 0.0 };
        let (a, b) = once_twice(&spec);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn survival_is_non_increasing_in_age(
        lives in prop::collection::vec((0.0f64..1000.0, prop::option::of(0.0f64..3000.0)), 20..80),
        ages in prop::collection::vec(1.0f64..3000.0, 2..20),
    ) {
        let records: Vec<SurvivalRecord> = lives
            .iter()
            .enumerate()
            .map(|(i, &(birth, life))| SurvivalRecord { synapse: i, birth_ms: birth, death_ms: life.map(|l| birth + l) })
            .collect();
        let mut ages = ages;
        ages.sort_by(f64::total_cmp);
        let curve = survival_curve(&records, (0.0, 1000.0), 4000.0, &ages).unwrap();
        prop_assert!(curve.fraction.iter().all(|f| (0.0..=1.0).contains(f)));
        for w in curve.fraction.windows(2) {
            prop_assert!(w[1] <= w[0], "{:?}", curve.fraction);
        }
    }

    #[test]
    fn readout_windows_only_see_their_own_spikes(
        spikes in prop::collection::vec((0u32..4, 0.0f64..2000.0), 0..300),
        n_trials in 2usize..10,
    ) {
        let mut events: Vec<SpikeEvent> = spikes.iter().map(|&(k, t)| SpikeEvent { neuron: k, time_ms: t.floor() }).collect();
        events.sort_by(|a, b| a.time_ms.total_cmp(&b.time_ms));
        // trials of 200 ms pattern + 50 ms gap; first half trains, second half tests
        let windows: Vec<(f64, f64)> = (0..n_trials).map(|i| (250.0 * i as f64, 250.0 * i as f64 + 200.0)).collect();
        let h = n_trials / 2;
        let (train, test) = windows.split_at(h);
        let last_train = train.last().unwrap().1;
        prop_assert!(test.iter().all(|w| w.0 >= last_train));
        let full = window_counts(&events, 4, train);
        // dropping every spike after the training windows leaves their features unchanged
        let early: Vec<SpikeEvent> = events.iter().copied().filter(|e| e.time_ms <= last_train).collect();
        prop_assert_eq!(&full, &window_counts(&early, 4, train));
        let total: f64 = window_counts(&events, 4, &windows).iter().flatten().sum();
        prop_assert!(total <= events.len() as f64);
    }

    #[test]
    fn shuffled_labels_score_at_chance(seed in 0u64..10_000) {
        let mut rng = ChainRng::seed_from_u64(seed);
        let n = 400;
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| rng.normal()).collect()).collect();
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut shuffled = y.clone();
        for i in (1..n).rev() {
            shuffled.swap(i, rng.index(i + 1));
        }
        let s = train_eval_readout(&x[..n / 2], &shuffled[..n / 2], &x[n / 2..], &shuffled[n / 2..], 1.0).unwrap();
        // 4 standard deviations of a fair coin over 200 test trials
        let band = 4.0 * (0.25f64 / (n / 2) as f64).sqrt();
        prop_assert!((s.accuracy - 0.5).abs() <= band, "accuracy {}", s.accuracy);
    }
}
