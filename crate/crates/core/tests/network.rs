use proptest::prelude::*;
use scpg_core::cpg::{POP_1, POP_2, POP_A, POP_B, POP_REF};
use scpg_core::{
    build_cpg, build_cpg_ab, calibrate_feedback_weights, run, CalibrationSettings, CpgConfig, Drive, Error, Network,
    NeuronParams, Population, RngState, Schedule, Sign, StimulusProfile, WeightGrid,
};

fn small() -> CpgConfig {
    CpgConfig { n_cpg: 20, n_ref: 10, ..CpgConfig::shipped() }
}

#[test]
fn full_network_wiring() {
    let net = build_cpg(&CpgConfig::shipped(), RngState::new(0)).unwrap().network;
    let names: Vec<&str> = net.populations().iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, [POP_A, POP_B, POP_1, POP_2, POP_REF]);
    let wiring: Vec<(&str, Sign)> = net.projections().iter().map(|p| (p.name.as_str(), p.sign)).collect();
    let expected = [
        ("A->A:exc", Sign::Excitatory),
        ("A->A:inh", Sign::Inhibitory),
        ("B->B:exc", Sign::Excitatory),
        ("B->B:inh", Sign::Inhibitory),
        ("A->B:inh", Sign::Inhibitory),
        ("B->A:inh", Sign::Inhibitory),
        ("P1->P1:exc", Sign::Excitatory),
        ("P1->P1:inh", Sign::Inhibitory),
        ("P2->P2:exc", Sign::Excitatory),
        ("P2->P2:inh", Sign::Inhibitory),
        ("P1->P2:inh", Sign::Inhibitory),
        ("P2->P1:inh", Sign::Inhibitory),
        ("A->P1:exc", Sign::Excitatory),
        ("B->P2:inh", Sign::Inhibitory),
        ("Ref->P1:inh", Sign::Inhibitory),
        ("Ref->P2:exc", Sign::Excitatory),
        ("P1->A:inh", Sign::Inhibitory),
        ("P1->B:inh", Sign::Inhibitory),
        ("P2->A:exc", Sign::Excitatory),
        ("P2->B:exc", Sign::Excitatory),
    ];
    assert_eq!(wiring, expected);
}

#[test]
fn uncoupled_feedback_pair_drops_cross_inhibition() {
    let cfg = CpgConfig { couple_feedback_pair: false, ..small() };
    let net = build_cpg(&cfg, RngState::new(0)).unwrap().network;
    assert_eq!(net.projections().len(), 18);
    assert!(net.projections().iter().all(|p| p.name != "P1->P2:inh" && p.name != "P2->P1:inh"));
}

#[test]
fn only_a_and_b_are_driven() {
    let cfg = CpgConfig::shipped();
    let net = build_cpg(&cfg, RngState::new(0)).unwrap().network;
    for name in [POP_A, POP_B] {
        assert_eq!(net.population(name).unwrap().params.i_bias, cfg.i_st);
    }
    for name in [POP_1, POP_2] {
        assert_eq!(net.population(name).unwrap().params.i_bias, 0.0);
    }
}

#[test]
fn zero_probability_gives_no_edges() {
    let cfg = CpgConfig { p_exc: 0.0, p_inh: 0.0, ..small() };
    let net = build_cpg(&cfg, RngState::new(5)).unwrap().network;
    assert!(net.projections().iter().all(|p| p.adjacency.edge_count() == 0));
}

#[test]
fn unit_probability_is_all_to_all_without_self_loops() {
    let cfg = CpgConfig { p_exc: 1.0, p_inh: 1.0, ..small() };
    let net = build_cpg_ab(&cfg, RngState::new(5)).unwrap().network;
    for p in net.projections() {
        let n = cfg.n_cpg;
        let expected = if p.source == p.target { n * (n - 1) } else { n * n };
        assert_eq!(p.adjacency.edge_count(), expected, "{}", p.name);
        if p.source == p.target {
            assert!(p.adjacency.edges().all(|(i, j)| i != j));
        }
    }
}

#[test]
fn uncoupled_oscillators_fire_like_single_neurons() {
    let cfg = CpgConfig { p_exc: 0.0, p_inh: 0.0, n_cpg: 3, ..CpgConfig::shipped() };
    let net = build_cpg_ab(&cfg, RngState::new(0)).unwrap().network;
    let res = run(&net, &Schedule::new(), 200.0, RngState::new(0)).unwrap();
    let a = res.record(POP_A).unwrap();
    let b = res.record(POP_B).unwrap();
    assert_eq!(a.events, b.events);
    // Every neuron is identical, so they spike in lockstep.
    assert_eq!(a.len() % 3, 0);
    assert!(!a.is_empty());
}

#[test]
fn silent_reference_emits_nothing() {
    let net = build_cpg(&small(), RngState::new(1)).unwrap().network;
    let sched = Schedule::new().with(POP_REF, Drive::Rate(StimulusProfile::constant_rate(0.0, 500.0).unwrap()));
    let res = run(&net, &sched, 500.0, RngState::new(1)).unwrap();
    assert!(res.record(POP_REF).unwrap().is_empty());
}

#[test]
fn spike_delivery_takes_one_step() {
    let mut net = Network::new();
    let src = NeuronParams { i_bias: 10.0, ..NeuronParams::default() };
    let dst = NeuronParams { i_bias: 0.0, ..NeuronParams::default() };
    net.add_population(Population::lif("s", 1, src).unwrap()).unwrap();
    net.add_population(Population::lif("t", 1, dst).unwrap()).unwrap();
    net.connect("s", "t", Sign::Excitatory, 1.0, 500.0, &mut RngState::new(0).stream(scpg_core::Stream::Connectivity))
        .unwrap();
    let res = run(&net, &Schedule::new(), 20.0, RngState::new(0)).unwrap();
    let first_src = res.record("s").unwrap().events[0].step;
    let first_dst = res.record("t").unwrap().events[0].step;
    assert!(first_dst > first_src);
}

#[test]
fn run_rejects_bad_inputs() {
    let net = build_cpg(&small(), RngState::new(1)).unwrap().network;
    assert!(run(&net, &Schedule::new(), 10.5, RngState::new(0)).is_err());
    assert!(run(&net, &Schedule::new(), 0.0, RngState::new(0)).is_err());
    let unknown = Schedule::new().with("C", Drive::Current(1.0));
    assert!(matches!(run(&net, &unknown, 10.0, RngState::new(0)), Err(Error::UnknownPopulation(_))));
    let wrong_kind = Schedule::new().with(POP_A, Drive::Rate(StimulusProfile::constant_rate(10.0, 10.0).unwrap()));
    assert!(run(&net, &wrong_kind, 10.0, RngState::new(0)).is_err());
    let short = Schedule::new().with(POP_REF, Drive::Rate(StimulusProfile::constant_rate(10.0, 5.0).unwrap()));
    assert!(run(&net, &short, 100.0, RngState::new(0)).is_err());
}

#[test]
fn invalid_config_rejected() {
    for cfg in [
        CpgConfig { p_exc: 1.5, ..small() },
        CpgConfig { n_cpg: 0, ..small() },
        CpgConfig { w_cross_inh: -1.0, ..small() },
        CpgConfig { w_a1: f64::NAN, ..small() },
    ] {
        assert!(build_cpg(&cfg, RngState::new(0)).is_err());
    }
}

#[test]
fn config_toml_round_trip() {
    let cfg = CpgConfig::shipped();
    assert_eq!(CpgConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    assert!(CpgConfig::from_toml("n_cpg = 10\nbogus = 1\n").is_err());
}

fn tiny_settings(grid: WeightGrid) -> CalibrationSettings {
    CalibrationSettings { ref_rates_hz: vec![0.0, 171.0], t_ms: 500.0, seeds: vec![0], grid, ..Default::default() }
}

#[test]
fn calibration_over_single_point_returns_it() {
    let base = CpgConfig::shipped();
    let cal = calibrate_feedback_weights(&base, &tiny_settings(WeightGrid::single(&base))).unwrap();
    assert_eq!(cal.config, base);
    assert_eq!((cal.evaluated, cal.monotone), (1, 1));
    assert_eq!(cal.response.len(), 2);
}

#[test]
fn zero_feedback_gives_flat_response() {
    let mut base = small();
    for name in scpg_core::cpg::FEEDBACK_WEIGHTS {
        base.set_feedback_weight(name, 0.0).unwrap();
    }
    let cal = calibrate_feedback_weights(&base, &tiny_settings(WeightGrid::single(&base))).unwrap();
    // With every feedback weight at zero, Ref cannot reach A or B.
    assert_eq!(cal.response[0].1, cal.response[1].1);
}

#[test]
fn calibration_picks_within_grid() {
    let base = CpgConfig::shipped();
    let mut grid = WeightGrid::single(&base);
    grid.w_ref2 = vec![0.0, 0.5];
    grid.w_2ab = vec![0.0, 0.05];
    let cal = calibrate_feedback_weights(&base, &tiny_settings(grid.clone())).unwrap();
    assert_eq!(cal.evaluated, 4);
    assert!(grid.w_ref2.contains(&cal.config.w_ref2));
    assert!(grid.w_2ab.contains(&cal.config.w_2ab));
    assert!(cal.score.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn same_seed_same_spikes(seed in any::<u64>()) {
        let cfg = small();
        let sched = Schedule::new().with(POP_REF, Drive::Rate(StimulusProfile::constant_rate(80.0, 200.0).unwrap()));
        let go = || {
            let net = build_cpg(&cfg, RngState::new(seed)).unwrap().network;
            run(&net, &sched, 200.0, RngState::new(seed)).unwrap().spikes_csv()
        };
        prop_assert_eq!(go(), go());
    }

    #[test]
    fn spikes_are_ordered_and_in_range(seed in any::<u64>()) {
        let cfg = small();
        let net = build_cpg(&cfg, RngState::new(seed)).unwrap().network;
        let sched = Schedule::new().with(POP_REF, Drive::Rate(StimulusProfile::constant_rate(150.0, 100.0).unwrap()));
        let res = run(&net, &sched, 100.0, RngState::new(seed)).unwrap();
        for rec in &res.records {
            prop_assert!(rec.events.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(rec.events.iter().all(|s| (s.neuron as usize) < rec.n && (1..=100).contains(&s.step)));
        }
    }

    #[test]
    fn edge_density_tracks_probability(p in 0.05f64..0.95, seed in any::<u64>()) {
        let cfg = CpgConfig { p_exc: p, p_inh: p, n_cpg: 60, ..CpgConfig::shipped() };
        let net = build_cpg_ab(&cfg, RngState::new(seed)).unwrap().network;
        let proj = &net.projections()[4];
        let trials = 60.0 * 60.0;
        let sd = (trials * p * (1.0 - p)).sqrt();
        prop_assert!((proj.adjacency.edge_count() as f64 - trials * p).abs() <= 5.0 * sd);
    }
}
