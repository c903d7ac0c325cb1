use merge_game::calibrate::{calibrate, objective, CalibrationOptions, Evaluator, ProbabilitySource};
use merge_game::data::synthetic::{random_scenario, synthetic_events, SyntheticOptions};
use merge_game::data::{
    event_from_log, observations_from_events, read_events, savgol_smooth, segment_behaviors, write_events, LabelOptions,
    SegmentOptions,
};
use merge_game::dynamics::{behavior_overrides, idm_accel, mr_idm_accel, step_vehicle, ExecutionState, IdmParams};
use merge_game::game::{decide, expected_lag_payoffs, nash_mixed, qre_update};
use merge_game::payoff::{lag_payoffs, lat_scale, ma_payoffs, pth, ramp_scale, Conditioning, Direction, PayoffMatrix, Usmht, SCALING_D};
use merge_game::sim::scenarios::{behavior_parameter_sets, behavior_scenario, LAG_ID};
use merge_game::sim::{run_scenario, AccelSegment, MaMode, ScriptedProfile};
use merge_game::types::{relative_state, ActorRole, Lane, LagAction, ModelParams, RampGeometry, VehicleState, WorldState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn direct(u: f64, c: f64, d: f64) -> f64 {
    (u.exp() - (-u).exp()) / ((c * u).exp() + (-d * u).exp())
}

fn vehicle(id: u32, x: f64, lane: Lane, v: f64) -> VehicleState {
    let y = if lane == Lane::Main { 3.5 } else { 0.0 };
    VehicleState { id, x, y, v, a: 0.0, lane }
}

prop_compose! {
    fn worlds()(lag_v in 5.0..35.0f64, ma_dx in -60.0..80.0f64, ma_v in 5.0..35.0f64,
                lead_dx in 20.0..200.0f64, lead_v in 5.0..35.0f64, has_lead in any::<bool>(),
                ramp_end in 100.0..600.0f64) -> WorldState {
        let ramp = RampGeometry { ramp_end_x: ramp_end, merge_zone_start_x: -100.0, lane_offset: 3.5 };
        let lead = has_lead.then(|| vehicle(3, lead_dx, Lane::Main, lead_v));
        WorldState::new(0.0, vehicle(1, 0.0, Lane::Main, lag_v), vehicle(2, ma_dx, Lane::Ramp, ma_v), lead, ramp)
            .expect("valid world")
    }
}

prop_compose! {
    fn params()(phi in prop::array::uniform8(1.05..20.0f64), dn in -0.99..1.0f64, tau in 0.5..5.0f64,
                beta in 0.01..5.0f64) -> ModelParams {
        let mut phi = phi;
        phi[ModelParams::DO_NOTHING] = dn;
        ModelParams { phi, tau, beta, ..ModelParams::default() }
    }
}

prop_compose! {
    fn games()(p in prop::array::uniform2(prop::array::uniform4(-1.0..=1.0f64)),
               q in prop::array::uniform2(prop::array::uniform4(-1.0..=1.0f64))) -> PayoffMatrix {
        PayoffMatrix { p, q }
    }
}

fn argmax(v: &[f64; 4]) -> usize {
    (0..4).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn relative_state_is_antisymmetric(w in worlds()) {
        let ab = relative_state(&w, ActorRole::Lag, ActorRole::Ma).unwrap();
        let ba = relative_state(&w, ActorRole::Ma, ActorRole::Lag).unwrap();
        prop_assert_eq!(ab.dx, -ba.dx);
        prop_assert_eq!(ab.dv, -ba.dv);
        prop_assert_eq!(ab.dy, ba.dy);
    }

    #[test]
    fn non_finite_vehicle_fields_are_rejected(k in 0..4usize, bad in prop::sample::select(vec![f64::NAN, f64::INFINITY, f64::NEG_INFINITY])) {
        let mut f = [0.0, 3.5, 20.0, 0.0];
        f[k] = bad;
        prop_assert!(VehicleState::new(1, f[0], f[1], f[2], f[3], Lane::Main).is_err());
    }

    #[test]
    fn usmht_peaks_at_zero_above_minus_one(c in 1.05..20.0f64, x in -50.0..50.0f64, reverse in any::<bool>()) {
        let f = Usmht::new(c, 1.0).unwrap();
        let r = if reverse { Direction::Reverse } else { Direction::Forward };
        let v = f.eval(x, r);
        // Far out on the negative side the distance to -1 drops below f64 resolution.
        prop_assert!(v >= -1.0);
        prop_assert!(v > -1.0 || x.abs() > 15.0);
        prop_assert!(v <= f.peak());
        prop_assert!(v < f.peak() || x.abs() < 1e-6);
    }

    #[test]
    fn usmht_matches_direct_formula(c in 1.05..10.0f64, d in prop::sample::select(vec![1.0, 2.0, 3.0]), x in -50.0..50.0f64) {
        let f = Usmht::new(c, d).unwrap();
        let want = direct(x + f.shift(), c, d);
        prop_assert!((f.eval(x, Direction::Forward) - want).abs() <= 1e-12, "x {} got {} want {}", x, f.eval(x, Direction::Forward), want);
    }

    #[test]
    fn urgency_scalings_stay_positive(phi in 1.05..20.0f64, dy in -10.0..10.0f64, dx in -50.0..800.0f64, v in 0.0..40.0f64) {
        let cap = 1.0 + Usmht::new(phi, SCALING_D).unwrap().peak();
        let s_lat = lat_scale(dy, phi).unwrap();
        let s_ramp = ramp_scale(dx, v, phi).unwrap();
        prop_assert!(s_lat > 0.0 && s_lat <= cap);
        prop_assert!(s_ramp > 0.0 && s_ramp <= cap);
    }

    #[test]
    fn payoffs_are_pure(w in worlds(), p in params()) {
        prop_assert_eq!(lag_payoffs(&w, &p).unwrap(), lag_payoffs(&w, &p).unwrap());
        prop_assert_eq!(ma_payoffs(&w, &p).unwrap(), ma_payoffs(&w, &p).unwrap());
    }

    #[test]
    fn pth_is_linear(dx1 in -100.0..100.0f64, dx2 in -100.0..100.0f64, dv1 in -10.0..10.0f64, dv2 in -10.0..10.0f64,
                     k in -3.0..3.0f64, v in 1.0..40.0f64, tau in 0.1..10.0f64) {
        let sum = pth(dx1 + dx2, dv1 + dv2, v, tau);
        prop_assert!((sum - pth(dx1, dv1, v, tau) - pth(dx2, dv2, v, tau)).abs() < 1e-9);
        prop_assert!((pth(k * dx1, k * dv1, v, tau) - k * pth(dx1, dv1, v, tau)).abs() < 1e-9);
    }

    #[test]
    fn nash_passes_deviation_oracle(g in games()) {
        let eq = nash_mixed(&g);
        let value = |m: &[[f64; 4]; 2]| (0..2).map(|i| (0..4).map(|j| eq.row_mix[i] * eq.col_mix[j] * m[i][j]).sum::<f64>()).sum::<f64>();
        for i in 0..2 {
            prop_assert!((0..4).map(|j| eq.col_mix[j] * g.p[i][j]).sum::<f64>() - value(&g.p) <= 1e-8);
        }
        for j in 0..4 {
            prop_assert!(eq.row_mix[0] * g.q[0][j] + eq.row_mix[1] * g.q[1][j] - value(&g.q) <= 1e-8);
        }
    }

    #[test]
    fn qre_shift_invariance_and_monotonicity(u in prop::array::uniform4(-1.0..1.0f64), c in -5.0..5.0f64,
                                              bump in 0.01..1.0f64, k in 0..4usize, beta in 0.05..10.0f64) {
        let p = qre_update(&u, beta);
        let shifted = qre_update(&u.map(|v| v + c), beta);
        for j in 0..4 {
            prop_assert!((p[j] - shifted[j]).abs() < 1e-12);
        }
        let mut raised = u;
        raised[k] += bump;
        prop_assert!(qre_update(&raised, beta)[k] > p[k]);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qre_max_probability_falls_with_beta(u in prop::array::uniform4(-1.0..1.0f64)) {
        let mut sorted = u;
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 1e-3));
        let maxima: Vec<f64> = [0.05, 0.1, 0.3, 1.0, 3.0, 10.0]
            .iter()
            .map(|&b| qre_update(&u, b).into_iter().fold(0.0, f64::max))
            .collect();
        prop_assert!(maxima.windows(2).all(|w| w[1] < w[0]), "{:?}", maxima);
    }

    #[test]
    fn qre_argmax_follows_expected_payoffs(g in games(), beta in 0.01..10.0f64) {
        let eq = nash_mixed(&g);
        let q = expected_lag_payoffs(&g, &eq.row_mix);
        let best = argmax(&q);
        prop_assume!((0..4).all(|j| j == best || q[best] - q[j] > 1e-9));
        prop_assert_eq!(argmax(&qre_update(&q, beta)), best);
    }

    #[test]
    fn decide_is_reproducible(w in worlds(), p in params(), seed in any::<u64>()) {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut prev = None;
            let mut out = Vec::new();
            for k in 0..20 {
                let mut world = w;
                world.t = k as f64 * 0.1;
                let d = decide(&world, &p, prev.as_ref(), &mut rng).unwrap();
                out.push(d);
                prev = Some(d);
            }
            out
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn overrides_are_idempotent(w in worlds(), k in 0..4usize, prior in 0..4usize) {
        let mut exec = ExecutionState::new(IdmParams::default());
        exec = behavior_overrides(LagAction::ALL[prior], &w, &exec);
        let once = behavior_overrides(LagAction::ALL[k], &w, &exec);
        let twice = behavior_overrides(LagAction::ALL[k], &w, &once);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn savgol_reproduces_quadratics(a in -5.0..5.0f64, b in -2.0..2.0f64, c in -0.5..0.5f64, n in 5..80usize) {
        let t: Vec<f64> = (0..n).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|s| a + b * s + c * s * s).collect();
        let smooth = savgol_smooth(&y, 0.1, 2.0, 2).unwrap();
        for (u, v) in y.iter().zip(&smooth) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn epochs_partition_and_ignore_time_shifts(steps in prop::collection::vec(-0.03..0.03f64, 10..200), shift in -100.0..100.0f64) {
        let t: Vec<f64> = (0..steps.len()).map(|k| k as f64 * 0.1).collect();
        let mut g = vec![3.0];
        for s in &steps[1..] {
            g.push(g.last().unwrap() + s);
        }
        let opts = SegmentOptions::default();
        let e = segment_behaviors(&t, &g, &opts);
        prop_assert_eq!(e[0].t_start, t[0]);
        prop_assert_eq!(e.last().unwrap().t_end, *t.last().unwrap());
        for w in e.windows(2) {
            prop_assert_eq!(w[0].t_end, w[1].t_start);
            prop_assert!(w[0].t_start < w[0].t_end);
        }
        let moved: Vec<f64> = t.iter().map(|s| s + shift).collect();
        let e2 = segment_behaviors(&moved, &g, &opts);
        prop_assert_eq!(e.len(), e2.len());
        for (a, b) in e.iter().zip(&e2) {
            prop_assert_eq!(a.label, b.label);
            prop_assert!((a.t_start + shift - b.t_start).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulated_kinematics_stay_physical(seed in any::<u64>(), p in params()) {
        let opts = SyntheticOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut config = random_scenario(&p.with_beta(p.beta), &opts, seed, &mut rng);
        config.vehicles[0].model.as_mut().unwrap().sigma = 0.0;
        let log = run_scenario(&config).unwrap();
        let dt = config.dt_dyn;
        for spec in &config.vehicles {
            let recs: Vec<_> = log.vehicle(spec.state.id).collect();
            let v_max = recs.iter().map(|r| r.v).fold(0.0, f64::max);
            for r in &recs {
                prop_assert!(r.v >= 0.0);
                prop_assert!(r.a >= -9.0 - 1e-9 && r.a <= spec.idm.a_max + 1e-9, "a = {}", r.a);
            }
            for w in recs.windows(2) {
                prop_assert!((w[1].x - w[0].x).abs() <= v_max * dt + 0.5 * spec.idm.a_max * dt * dt + 1e-9);
            }
        }
        // Decisions stay fixed while held, and a held decision lasts its window.
        let lag = config.vehicles[0].model.unwrap();
        let recs: Vec<_> = log.vehicle(config.vehicles[0].state.id).collect();
        let mut last: Option<(f64, LagAction)> = None;
        for r in &recs {
            if let (Some(at), Some(action)) = (r.decided_at, r.decision) {
                match last {
                    Some((t0, a0)) if t0 == at => prop_assert_eq!(a0, action),
                    Some((t0, _)) => prop_assert!(at - t0 >= lag.t_window - 1e-9),
                    None => {}
                }
                last = Some((at, action));
            } else {
                last = None;
            }
        }
    }

    #[test]
    fn yield_behind_never_rear_ends_a_braking_merger(decel in 0.5..4.0f64, from in 0.0..10.0f64, seed in any::<u64>()) {
        let (_, params) = behavior_parameter_sets()[0];
        let mut config = behavior_scenario(params, seed);
        config.ma_mode = MaMode::Scripted(ScriptedProfile {
            accel: vec![AccelSegment { from, accel: -decel }, AccelSegment { from: from + 4.0, accel: 0.0 }],
            lane_change_at: Some(from + 1.0),
        });
        config.duration = 25.0;
        let log = run_scenario(&config).unwrap();
        prop_assert!(log.collisions.is_empty(), "{:?}", log.collisions);
    }
}

#[test]
fn do_nothing_without_merger_matches_plain_idm() {
    let base = IdmParams::default();
    let exec = ExecutionState::new(base);
    let ramp = RampGeometry {
        ramp_end_x: 300.0,
        merge_zone_start_x: 0.0,
        lane_offset: 3.5,
    };
    let mut lag = vehicle(1, 0.0, Lane::Main, 20.0);
    let mut lead = vehicle(3, 40.0, Lane::Main, 25.0);
    // A merger far behind on the ramp plays no part.
    let ma = vehicle(2, -5000.0, Lane::Ramp, 0.0);
    let mut plain = lag;
    for _ in 0..2000 {
        let world = WorldState::new(0.0, lag, ma, Some(lead), ramp).unwrap();
        let a = mr_idm_accel(&world, &exec).unwrap().max(-9.0);
        let a_plain = idm_accel(plain.v, lead.x - plain.x, plain.v - lead.v, &base).unwrap().max(-9.0);
        lag = step_vehicle(&lag, a, 0.01);
        plain = step_vehicle(&plain, a_plain, 0.01);
        lead = step_vehicle(&lead, 0.0, 0.01);
        assert_eq!(lag, plain);
    }
}

#[test]
fn simulator_log_round_trips_through_event_file() {
    let (_, params) = behavior_parameter_sets()[1];
    let config = behavior_scenario(params, 3);
    let log = run_scenario(&config).unwrap();
    let event = event_from_log(&log, &config, "rt", "sim", 1).unwrap();
    let mut buf = Vec::new();
    write_events(std::slice::from_ref(&event), &mut buf).unwrap();
    let back = read_events(buf.as_slice()).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back[0], event);
    let lag: Vec<_> = log.vehicle(LAG_ID).collect();
    assert_eq!(back[0].t.len(), lag.len());
    for (k, r) in lag.iter().enumerate() {
        assert_eq!(back[0].t[k], r.t);
        assert_eq!((back[0].lag[k].x, back[0].lag[k].v), (r.x, r.v));
    }
}

#[test]
fn calibration_invariants_hold() {
    let truth = ModelParams {
        phi: [1.7, 1.5, 10.0, 2.0, 2.0, 0.2, 3.0, 2.0],
        tau: 2.0,
        beta: 0.01,
        ..ModelParams::default()
    };
    let events = synthetic_events(&truth, 12, 4, "p", &SyntheticOptions::default()).unwrap();
    let obs = observations_from_events(&events, &LabelOptions::default(), 1.0).unwrap();
    let n = obs.len() as f64;
    let opts = CalibrationOptions {
        n_starts: 6,
        max_iters: 20,
        seed: 2,
        ..CalibrationOptions::default()
    };
    let a = calibrate(&obs, &opts).unwrap();
    let b = calibrate(&obs, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.starts.windows(2).all(|w| w[1].best_so_far <= w[0].best_so_far));
    assert_eq!(a.objective, objective(&a.params, &obs).unwrap());
    assert!((0.0..=n).contains(&a.objective) && (0.0..=1.0).contains(&a.mae));
    for source in [ProbabilitySource::Nash, ProbabilitySource::Qre { beta: 0.3 }] {
        let ev = Evaluator::new(&truth, source, Conditioning::Literal).unwrap();
        for o in &obs {
            let p = ev.probabilities(&o.world);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
