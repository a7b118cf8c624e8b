use hydrolimit::engine::{
    apply_update, count_current, evolve, evolve_coupled, evolve_observed, stream_for, traffic_direct_rate, Checkpoint,
    CoupledEnsemble, Configuration, CurrentCounter, Event, EventObserver, EventStream, EventTrace, Move, ObserverPath,
};
use hydrolimit::model::{
    kstep_rates, kstep_target, enumerate_self_avoiding, random_walk_paths, EnvironmentField, EnvironmentLaw, Family,
    JumpKernel, KPath, KStepField, Lattice, ModelSpec, PathLaw, RateFunction, SelfAvoidingLaw,
};
use hydrolimit::rng::rng_from_seed;
use num_rational::Ratio;
use rand::Rng;

type Q = Ratio<i64>;

fn tasep_env(lattice: Lattice, c: f64, alpha: Vec<f64>) -> EnvironmentField {
    EnvironmentField::misanthrope(lattice, c, RateFunction::exclusion(1), JumpKernel::totally_asymmetric(), alpha).unwrap()
}

fn random_config(lattice: Lattice, capacity: u8, seed: u64) -> Configuration {
    let mut rng = rng_from_seed(seed);
    let occ = (0..lattice.len).map(|_| rng.random_range(0..=capacity)).collect();
    Configuration::new(lattice, capacity, occ).unwrap()
}

fn family_specs() -> Vec<ModelSpec> {
    let nn = JumpKernel::nearest_neighbor(0.7).unwrap();
    vec![
        ModelSpec::misanthrope(
            2,
            0.5,
            RateFunction::from_fn(2, |n, m| n as f64 * (2 - m) as f64 / 2.0).unwrap(),
            JumpKernel::new(vec![(-1, 0.3), (1, 0.5), (2, 0.2)]).unwrap(),
            EnvironmentLaw::uniform(0.5, 2.0),
        ),
        ModelSpec {
            family: Family::BondMisanthrope { rate: RateFunction::exclusion(2), kernel: nn },
            capacity: 2,
            c: 0.5,
            environment: EnvironmentLaw::uniform(0.5, 2.0),
        },
        ModelSpec {
            family: Family::KstepTwoSided { k: 2, envelope: None },
            capacity: 2,
            c: 0.5,
            environment: EnvironmentLaw::uniform(0.5, 1.0),
        },
        ModelSpec {
            family: Family::KstepNearestNeighbor { k: 3, envelope: None },
            capacity: 1,
            c: 0.2,
            environment: EnvironmentLaw::uniform(0.3, 0.7),
        },
        ModelSpec {
            family: Family::Traffic { k: 2, weights: vec![1.0, 2.0, 3.0, 4.0] },
            capacity: 1,
            c: 0.5,
            environment: EnvironmentLaw::uniform(0.5, 2.0),
        },
    ]
}

#[test]
fn misanthrope_jump_below_threshold() {
    let lattice = Lattice::ring(4);
    let env = tasep_env(lattice, 0.5, vec![1.0; 4]);
    let eta = Configuration::new(lattice, 1, vec![1, 0, 0, 0]).unwrap();
    let after = apply_update(&env, &eta, 0, 0.0, 0.3);
    assert_eq!(after.occupancy(), &[0, 1, 0, 0]);
    let rejected = apply_update(&env, &eta, 0, 0.0, 0.6);
    assert_eq!(rejected, eta);
}

#[test]
fn empty_site_never_moves() {
    let lattice = Lattice::ring(4);
    let env = tasep_env(lattice, 0.5, vec![1.0; 4]);
    let eta = Configuration::new(lattice, 1, vec![0, 1, 0, 1]).unwrap();
    for u in [0.0, 0.1, 0.5, 0.99] {
        assert_eq!(apply_update(&env, &eta, 0, u, u), eta);
    }
}

#[test]
fn kstep_full_path_leaves_configuration_unchanged() {
    let lattice = Lattice::ring(5);
    let path = KPath { positions: vec![1, 2], beta: vec![1.0, 1.0] };
    let law = PathLaw::new(2, vec![(path, 1.0)]).unwrap();
    let field = KStepField {
        k: 2,
        laws: vec![law],
        law_of_site: vec![0; 5],
        lower: JumpKernel::totally_asymmetric(),
        envelope: JumpKernel::new(vec![(1, 0.5), (2, 0.5)]).unwrap(),
    };
    let env = EnvironmentField::kstep(lattice, 1, 0.5, field).unwrap();
    let eta = Configuration::new(lattice, 1, vec![1, 1, 1, 0, 0]).unwrap();
    let t = kstep_target(&lattice, eta.occupancy(), 1, 0, &[1, 2]);
    assert_eq!((t.step, t.site), (None, Some(0)));
    assert_eq!(apply_update(&env, &eta, 0, 0.5, 0.0), eta);
    let moved = apply_update(&env, &eta, 1, 0.5, 0.0);
    assert_eq!(moved.occupancy(), &[1, 0, 1, 1, 0]);
}

#[test]
fn kstep_target_examples() {
    let lattice = Lattice::ring(6);
    let open = [1, 0, 0, 0, 0, 0];
    let t = kstep_target(&lattice, &open, 1, 0, &[1, 2]);
    assert_eq!((t.step, t.site), (Some(1), Some(1)));
    let first_full = [1, 1, 0, 0, 0, 0];
    let t = kstep_target(&lattice, &first_full, 1, 0, &[1, 2]);
    assert_eq!((t.step, t.site), (Some(2), Some(2)));
    let full = [1, 1, 1, 0, 0, 0];
    let t = kstep_target(&lattice, &full, 1, 0, &[1, 2]);
    assert_eq!((t.step, t.site, t.displacement), (None, Some(0), 0));
}

#[test]
fn self_avoiding_law_examples() {
    let sym = enumerate_self_avoiding(&[(-1, 1.0), (1, 1.0)]);
    assert_eq!(sym.len(), 2);
    assert!(sym.iter().all(|(_, p)| (*p - 0.5f64).abs() < 1e-15));

    let forced = SelfAvoidingLaw::new(1, &[0.0, 1.0]).unwrap();
    for u in [0.0, 0.3, 0.999] {
        assert_eq!(forced.sample(u), vec![(1, true), (-1, false)]);
    }

    let uniform: Vec<(i64, Q)> = SelfAvoidingLaw::positions(2).map(|z| (z, Q::from_integer(1))).collect();
    let paths = enumerate_self_avoiding(&uniform);
    assert_eq!(paths.len(), 24);
    let theta = [-1, 2];
    let hit_left: Q = paths
        .iter()
        .filter(|(path, _)| path.iter().find(|z| theta.contains(z)) == Some(&-1))
        .map(|(_, p)| *p)
        .sum();
    assert_eq!(hit_left, Q::new(1, 2));
}

#[test]
fn self_avoiding_law_rejects_zero_weights() {
    assert!(SelfAvoidingLaw::new(2, &[0.0; 4]).is_err());
}

fn traffic_env(k: usize, weights: &[f64], beta: f64, len: usize) -> EnvironmentField {
    let law = SelfAvoidingLaw::new(k, weights).unwrap();
    EnvironmentField::traffic(Lattice::ring(len), 1, 0.5, law, vec![beta; len]).unwrap()
}

#[test]
fn traffic_direct_rate_examples() {
    let env = traffic_env(2, &[1.0; 4], 1.5, 8);
    let all_full = [1, 1, 1, 0, 0, 0, 1, 1];
    assert_eq!(traffic_direct_rate(&env, &all_full, 0, 1), 0.0);
    assert_eq!(traffic_direct_rate(&env, &all_full, 0, -1), 0.0);

    let one_open = [1, 1, 0, 1, 1, 1, 1, 1];
    assert_eq!(traffic_direct_rate(&env, &one_open, 0, 2), 1.5);
    assert_eq!(traffic_direct_rate(&env, &one_open, 0, 1), 0.0);

    let all_open = [1, 0, 0, 0, 0, 0, 0, 0];
    for z in [-2, -1, 1, 2] {
        assert_eq!(traffic_direct_rate(&env, &all_open, 0, z), 1.5 / 4.0);
    }
}

/// Rates of the traffic model computed through its `2k`-step path law, for
/// every occupancy pattern of the `2k` positions around the departure site.
fn traffic_agrees_with_path_representation(k: usize) {
    let weights: Vec<(i64, Q)> =
        SelfAvoidingLaw::positions(k).zip(1..).map(|(z, w)| (z, Q::from_integer(w))).collect();
    let beta = Q::new(3, 2);
    let paths: Vec<(Vec<i64>, Q, Vec<Q>)> = enumerate_self_avoiding(&weights)
        .into_iter()
        .map(|(path, p)| (path, p, vec![beta; 2 * k]))
        .collect();
    let total_prob: Q = paths.iter().map(|e| e.1).sum();
    assert_eq!(total_prob, Q::from_integer(1));
    for mask in 0u32..(1 << (2 * k)) {
        let open = |z: i64| {
            let j = weights.iter().position(|e| e.0 == z).unwrap();
            mask >> j & 1 == 1
        };
        let rates = kstep_rates(&paths, open);
        let z_total: Q = weights.iter().filter(|e| open(e.0)).map(|e| e.1).sum();
        for (z, w) in &weights {
            let direct = if open(*z) { beta * *w / z_total } else { Q::from_integer(0) };
            let via_paths = rates.iter().find(|e| e.0 == *z).map_or(Q::from_integer(0), |e| e.1);
            assert_eq!(direct, via_paths, "k = {k}, mask = {mask:b}, z = {z}");
        }
    }
}

#[test]
fn traffic_equals_2k_step_exactly() {
    for k in 1..=3 {
        traffic_agrees_with_path_representation(k);
    }
}

#[test]
fn traffic_direct_rate_matches_path_frequencies() {
    let env = traffic_env(2, &[1.0, 2.0, 3.0, 4.0], 1.0, 9);
    let occ = [1, 0, 1, 0, 1, 1, 1, 0, 1];
    let law = SelfAvoidingLaw::new(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
    let n = 200_000;
    let mut counts = std::collections::BTreeMap::new();
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64;
        if let Some((_, z)) = law.first_open(u, |z| occ[(z.rem_euclid(9)) as usize] < 1) {
            *counts.entry(z).or_insert(0usize) += 1;
        }
    }
    for (z, c) in counts {
        let freq = c as f64 / n as f64;
        assert!((freq - traffic_direct_rate(&env, &occ, 0, z)).abs() < 1e-4, "z = {z}");
    }
}

/// `c(x, x+n)` of the absorbed nearest-neighbor `k`-step model with right
/// probability `p`, for all binary patterns of `x-k..=x+k` with `eta(x) = 1`.
fn check_absorbed_nearest_neighbor(p: Q) {
    let k = 5;
    let one = Q::from_integer(1);
    let paths: Vec<(Vec<i64>, Q, Vec<Q>)> = random_walk_paths(&[(1, p), (-1, one - p)], k, true)
        .into_iter()
        .map(|(path, q)| (path, q, vec![one; k]))
        .collect();
    for mask in 0u32..(1 << (2 * k)) {
        let eta = |z: i64| -> u8 {
            if z == 0 {
                return 1;
            }
            let j = if z < 0 { (z + k as i64) as u32 } else { (z + k as i64 - 1) as u32 };
            (mask >> j & 1) as u8
        };
        let rates = kstep_rates(&paths, |z| eta(z) < 1);
        for n in 1..=k as i64 {
            for sign in [1i64, -1] {
                let y = sign * n;
                let q = if sign > 0 { p } else { one - p };
                let mut expected = q.pow(n as i32);
                if n == 3 {
                    expected *= one + p * (one - p);
                }
                let blocked = (1..n).any(|j| eta(sign * j) == 0) || eta(y) == 1;
                if blocked {
                    expected = Q::from_integer(0);
                }
                let got = rates.iter().find(|e| e.0 == y).map_or(Q::from_integer(0), |e| e.1);
                assert_eq!(got, expected, "p = {p}, mask = {mask:b}, y = {y}");
            }
        }
    }
}

#[test]
fn absorbed_five_step_rates_closed_form() {
    for p in [Q::new(1, 3), Q::new(2, 7), Q::new(1, 2), Q::new(9, 10)] {
        check_absorbed_nearest_neighbor(p);
    }
}

#[test]
fn zero_horizon_is_identity() {
    let lattice = Lattice::ring(30);
    let env = tasep_env(lattice, 1.0, vec![1.0; 30]);
    let mut eta = random_config(lattice, 1, 4);
    let before = eta.clone();
    let mut stream = stream_for(&env, 8).unwrap();
    evolve(&env, &mut eta, 0.0, &mut stream).unwrap();
    assert_eq!(eta, before);
}

#[test]
fn empty_configuration_stays_empty() {
    for spec in family_specs() {
        let lattice = Lattice::ring(40);
        let env = spec.sample_environment(lattice, 2).unwrap();
        let mut eta = Configuration::empty(lattice, spec.capacity);
        let mut stream = stream_for(&env, 3).unwrap();
        evolve(&env, &mut eta, 50.0, &mut stream).unwrap();
        assert_eq!(eta.particle_count(), 0, "{}", spec.family.name());
    }
}

#[test]
fn ring_conserves_particles() {
    for spec in family_specs() {
        let lattice = Lattice::ring(60);
        let env = spec.sample_environment(lattice, 5).unwrap();
        let mut eta = random_config(lattice, spec.capacity, 6);
        let n = eta.particle_count();
        let mut stream = stream_for(&env, 7).unwrap();
        evolve(&env, &mut eta, 100.0, &mut stream).unwrap();
        assert_eq!(eta.particle_count(), n, "{}", spec.family.name());
    }
}

#[test]
fn segment_blocks_jumps_past_the_boundary() {
    let lattice = Lattice::segment(5);
    let env = tasep_env(lattice, 1.0, vec![1.0; 5]);
    let mut eta = Configuration::new(lattice, 1, vec![0, 0, 0, 0, 1]).unwrap();
    let mut stream = stream_for(&env, 1).unwrap();
    evolve(&env, &mut eta, 100.0, &mut stream).unwrap();
    assert_eq!(eta.occupancy(), &[0, 0, 0, 0, 1]);
}

#[test]
fn evolution_is_deterministic() {
    for spec in family_specs() {
        let lattice = Lattice::ring(50);
        let env = spec.sample_environment(lattice, 9).unwrap();
        let run = || {
            let mut eta = random_config(lattice, spec.capacity, 10);
            let mut stream = stream_for(&env, 11).unwrap();
            evolve(&env, &mut eta, 80.0, &mut stream).unwrap();
            eta
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn coupled_copies_match_individual_runs() {
    for spec in family_specs() {
        let lattice = Lattice::ring(50);
        let env = spec.sample_environment(lattice, 12).unwrap();
        let configs: Vec<_> = (0..3).map(|i| random_config(lattice, spec.capacity, 20 + i)).collect();
        let coupled = evolve_coupled(&env, configs.clone(), 40.0, &mut stream_for(&env, 13).unwrap()).unwrap();
        for (c0, out) in configs.into_iter().zip(coupled) {
            let mut single = c0;
            evolve(&env, &mut single, 40.0, &mut stream_for(&env, 13).unwrap()).unwrap();
            assert_eq!(single, out, "{}", spec.family.name());
        }
    }
}

#[test]
fn identical_copies_stay_identical() {
    let spec = &family_specs()[0];
    let lattice = Lattice::ring(40);
    let env = spec.sample_environment(lattice, 1).unwrap();
    let eta = random_config(lattice, spec.capacity, 2);
    let out = evolve_coupled(&env, vec![eta.clone(), eta], 30.0, &mut stream_for(&env, 3).unwrap()).unwrap();
    assert_eq!(out[0], out[1]);
}

#[test]
fn coupled_lattices_must_match() {
    let lattice = Lattice::ring(10);
    let env = tasep_env(lattice, 1.0, vec![1.0; 10]);
    let a = Configuration::empty(lattice, 1);
    let b = Configuration::empty(Lattice::ring(11), 1);
    assert!(evolve_coupled(&env, vec![a, b], 1.0, &mut stream_for(&env, 0).unwrap()).is_err());
}

#[test]
fn order_holds_after_every_event() {
    for (i, spec) in family_specs().iter().enumerate() {
        let lattice = Lattice::ring(40);
        for trial in 0..20u64 {
            let env = spec.sample_environment(lattice, trial).unwrap();
            let xi = random_config(lattice, spec.capacity, 100 + trial);
            let mut rng = rng_from_seed(200 + trial);
            let occ = (0..lattice.len).map(|x| rng.random_range(0..=xi.get(x))).collect();
            let eta = Configuration::new(lattice, spec.capacity, occ).unwrap();
            let mut ens = CoupledEnsemble::new(&env, vec![eta, xi]).unwrap();
            let mut ok = true;
            ens.evolve_with(100.0, &mut stream_for(&env, 300 + trial).unwrap(), |_, c, _| {
                ok &= c[0].le(&c[1]);
                ok
            })
            .unwrap();
            assert!(ok, "family {i} trial {trial}");
        }
    }
}

#[test]
fn rotation_commutes_with_evolution() {
    for spec in family_specs() {
        let lattice = Lattice::ring(30);
        let env = spec.sample_environment(lattice, 41).unwrap();
        let eta = random_config(lattice, spec.capacity, 42);
        let mut plain = eta.clone();
        evolve(&env, &mut plain, 20.0, &mut stream_for(&env, 43).unwrap()).unwrap();
        for s in [1, 7, 29] {
            let env_s = env.rotated(s);
            let mut shifted = eta.rotated(s);
            let mut stream = stream_for(&env_s, 43).unwrap().with_rotation(s);
            evolve(&env_s, &mut shifted, 20.0, &mut stream).unwrap();
            assert_eq!(shifted, plain.rotated(s), "{} s = {s}", spec.family.name());
        }
    }
}

#[test]
fn checkpoint_resumes_exactly() {
    let spec = &family_specs()[4];
    let lattice = Lattice::ring(50);
    let env = spec.sample_environment(lattice, 1).unwrap();
    let eta = random_config(lattice, spec.capacity, 2);

    let mut straight = eta.clone();
    evolve(&env, &mut straight, 60.0, &mut stream_for(&env, 3).unwrap()).unwrap();

    let mut half = eta;
    let mut stream = stream_for(&env, 3).unwrap();
    evolve(&env, &mut half, 25.0, &mut stream).unwrap();
    let text = Checkpoint::new(25.0, half, stream).to_json().unwrap();
    let Checkpoint { mut config, mut stream, time, .. } = Checkpoint::from_json(&text).unwrap();
    assert_eq!(time, 25.0);
    evolve(&env, &mut config, 60.0, &mut stream).unwrap();
    assert_eq!(config, straight);
}

#[test]
fn event_trace_logs_every_event() {
    let lattice = Lattice::ring(10);
    let env = tasep_env(lattice, 1.0, vec![1.0; 10]);
    let mut eta = Configuration::new(lattice, 1, vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0]).unwrap();
    let mut stream = stream_for(&env, 5).unwrap();
    let mut trace = EventTrace::new(Vec::new()).unwrap();
    evolve_observed(&env, &mut eta, 5.0, &mut stream, &mut trace).unwrap();
    let text = String::from_utf8(trace.finish().unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,v1,v2,accepted");
    assert_eq!(lines.len() as u64 - 1, stream.emitted());
}

#[test]
fn stream_is_time_ordered_and_seeded() {
    let a: Vec<Event> = EventStream::new(1, 20, 2.0).unwrap().take(1000).collect();
    let b: Vec<Event> = EventStream::new(1, 20, 2.0).unwrap().take(1000).collect();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].t < w[1].t));
    assert!(a.iter().all(|e| e.x < 20 && (0.0..1.0).contains(&e.v1) && (0.0..1.0).contains(&e.v2)));
    let rate = 1000.0 / a.last().unwrap().t;
    assert!((rate - 40.0).abs() < 5.0, "{rate}");
}

#[test]
fn empty_configuration_has_no_current() {
    let lattice = Lattice::ring(20);
    let env = tasep_env(lattice, 1.0, vec![1.0; 20]);
    for path in [ObserverPath::fixed(3), ObserverPath::Linear { origin: 0, velocity: 0.7 }, ObserverPath::Linear { origin: 5, velocity: -1.3 }] {
        let mut eta = Configuration::empty(lattice, 1);
        let c = count_current(&env, &mut eta, path, 10.0, &mut stream_for(&env, 1).unwrap()).unwrap();
        assert_eq!(c.net(), 0);
    }
}

#[test]
fn single_crossing_counts_one() {
    let lattice = Lattice::ring(10);
    let occ = [0u8, 1, 0, 0, 0, 0, 0, 0, 0, 0];
    let mut counter = CurrentCounter::new(lattice, ObserverPath::fixed(1)).unwrap();
    let ev = Event { t: 0.5, x: 0, v1: 0.0, v2: 0.0 };
    counter.on_event(&ev, Some(Move { from: 0, to: 1, displacement: 1 }), &occ);
    assert_eq!((counter.plus, counter.minus, counter.tilde, counter.net()), (1, 0, 0, 1));
}

#[test]
fn observer_step_over_particles_subtracts_them() {
    let lattice = Lattice::segment(6);
    let occ = [0u8, 2, 1, 0, 0, 0];
    let mut counter =
        CurrentCounter::new(lattice, ObserverPath::Steps { origin: 1, steps: vec![(1.0, 1), (2.0, 1), (3.0, -1)] }).unwrap();
    counter.advance(2.5, &occ);
    assert_eq!(counter.tilde, -3);
    counter.advance(3.5, &occ);
    assert_eq!(counter.tilde, -2);
}

#[test]
fn static_observer_sees_signed_flow() {
    let lattice = Lattice::segment(30);
    let env = EnvironmentField::misanthrope(
        lattice,
        1.0,
        RateFunction::exclusion(1),
        JumpKernel::nearest_neighbor(0.5).unwrap(),
        vec![1.0; 30],
    )
    .unwrap();
    let mut eta = Configuration::from_fn(lattice, 1, |x| (x < 10) as u8).unwrap();
    let c = count_current(&env, &mut eta, ObserverPath::fixed(10), 50.0, &mut stream_for(&env, 2).unwrap()).unwrap();
    assert_eq!(c.tilde, 0);
    let right_of_cut: i64 = eta.occupancy()[10..].iter().map(|&n| n as i64).sum();
    assert_eq!(c.net(), right_of_cut);
    assert!(c.plus > 0 && c.minus > 0);
}

#[test]
fn homogeneous_tasep_current() {
    let l = 10_000;
    let lattice = Lattice::ring(l);
    let env = tasep_env(lattice, 1.0, vec![1.0; l]);
    let mut eta = Configuration::from_fn(lattice, 1, |x| (x % 2) as u8).unwrap();
    let t = 1e5;
    let c = count_current(&env, &mut eta, ObserverPath::fixed(0), t, &mut stream_for(&env, 77).unwrap()).unwrap();
    let rate = c.net() as f64 / t;
    assert!((rate - 0.25).abs() < 0.01, "{rate}");
}
