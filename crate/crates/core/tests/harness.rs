use hydrolimit::flux::{FluxMeta, FluxTable};
use hydrolimit::harness::{
    empirical_measure, opposite_discrepancies, run_hydro_experiment, run_riemann_current, sample_initial,
    test_discrepancy_decay, test_macroscopic_stability, test_ordering, CurrentExperiment, DiscrepancyInit, Embedding,
    ScalingExperiment, StabilityInit,
};
use hydrolimit::model::{EnvironmentLaw, JumpKernel, Lattice, ModelSpec, RateFunction};
use hydrolimit::pde::{delta_distance, MassMeasure, StepProfile};
use hydrolimit::Error;

fn homogeneous_tasep() -> ModelSpec {
    ModelSpec::tasep(1.0, EnvironmentLaw::constant(1.0))
}

fn disordered_tasep() -> ModelSpec {
    ModelSpec::tasep(0.5, EnvironmentLaw::uniform(0.5, 2.0))
}

fn nn_exclusion() -> ModelSpec {
    ModelSpec::misanthrope(
        1,
        0.5,
        RateFunction::exclusion(1),
        JumpKernel::nearest_neighbor(0.7).unwrap(),
        EnvironmentLaw::uniform(0.5, 2.0),
    )
}

fn parabola() -> FluxTable {
    FluxTable::from_fn(1, 200, |u| u * (1.0 - u)).unwrap()
}

fn window_mass(occ: &[u8], e: Embedding, a: f64, b: f64) -> f64 {
    occ.iter().enumerate().filter(|(i, _)| (a..b).contains(&e.point(*i))).map(|(_, &m)| m as f64).sum::<f64>()
        / e.scale as f64
}

#[test]
fn zero_and_full_profiles_sample_deterministically() {
    let lattice = Lattice::ring(400);
    let e = Embedding { scale: 100, first: -200 };
    let zero = sample_initial(&StepProfile::zero(1), 1, lattice, e, 3).unwrap();
    assert_eq!(zero.particle_count(), 0);

    let full = StepProfile::blocks(2, &[-1.0, 1.0], &[2.0]).unwrap();
    let c = sample_initial(&full, 2, lattice, e, 3).unwrap();
    for (i, &m) in c.occupancy().iter().enumerate() {
        let x = e.point(i);
        assert_eq!(m, if (-1.0..1.0).contains(&x) { 2 } else { 0 });
    }
}

#[test]
fn half_profile_concentrates_on_windows() {
    let n = 10_000;
    let lattice = Lattice::ring(3 * n);
    let e = Embedding { scale: n, first: -(n as i64) };
    let u0 = StepProfile::blocks(1, &[0.0, 1.0], &[0.5]).unwrap();
    let c = sample_initial(&u0, 1, lattice, e, 8).unwrap();
    for (a, b) in [(0.0, 0.25), (0.25, 0.5), (0.3, 0.9), (0.0, 1.0)] {
        let m = window_mass(c.occupancy(), e, a, b);
        let sd = (0.25 * (b - a) / n as f64).sqrt();
        assert!((m - 0.5 * (b - a)).abs() < 4.0 * sd, "[{a}, {b}): {m}");
        assert!((m - 0.5 * (b - a)).abs() < 0.01);
    }
    assert_eq!(window_mass(c.occupancy(), e, -1.0, 0.0), 0.0);
}

#[test]
fn profile_above_capacity_is_rejected() {
    let u0 = StepProfile::blocks(2, &[0.0, 1.0], &[1.5]).unwrap();
    let e = Embedding { scale: 10, first: 0 };
    assert!(sample_initial(&u0, 1, Lattice::ring(20), e, 0).is_err());
}

#[test]
fn empirical_measure_of_small_configurations() {
    let e = Embedding { scale: 10, first: 0 };
    let pi = empirical_measure(&[0, 0, 0], e);
    assert!(pi.measure.atoms.is_empty());
    assert_eq!(pi.measure.total_mass(), 0.0);

    let e = Embedding { scale: 4, first: -2 };
    let pi = empirical_measure(&[1, 0, 2, 0, 1], e);
    assert_eq!(pi.measure.atoms, vec![(-0.5, 0.25), (0.0, 0.5), (0.5, 0.25)]);
    assert_eq!(pi.measure.total_mass(), 1.0);
}

#[test]
fn opposite_discrepancy_counts() {
    assert_eq!(opposite_discrepancies(&[1, 0, 1], &[1, 0, 1]), 0);
    assert_eq!(opposite_discrepancies(&[0, 0, 1], &[1, 1, 1]), 0);
    assert_eq!(opposite_discrepancies(&[1, 0, 1, 0], &[0, 1, 0, 1]), 4);
}

#[test]
fn coupling_keeps_ordered_pairs_ordered() {
    for spec in [disordered_tasep(), nn_exclusion()] {
        let r = test_ordering(&spec, 50, 100, 200.0, 4).unwrap();
        assert!(r.passed(), "{}: seeds {:?}", spec.family.name(), r.failing_seeds);
        assert_eq!(r.trials, 50);
    }
}

#[test]
fn ordering_suite_rejects_empty_runs() {
    assert!(test_ordering(&disordered_tasep(), 0, 100, 10.0, 1).is_err());
    assert!(test_ordering(&disordered_tasep(), 5, 100, f64::INFINITY, 1).is_err());
}

#[test]
fn ordered_pairs_have_no_opposite_discrepancies() {
    let r = test_discrepancy_decay(&nn_exclusion(), &DiscrepancyInit::Independent { density: 0.0 }, 10, 50, &[10.0], 2)
        .unwrap();
    assert_eq!(r.initial_mean, 0.0);
    assert_eq!(r.final_mean, 0.0);
    assert_eq!(r.ordered_fraction, 1.0);
}

#[test]
fn single_pair_discrepancies_merge() {
    let r = test_discrepancy_decay(
        &nn_exclusion(),
        &DiscrepancyInit::SinglePair { density: 0.3 },
        60,
        60,
        &[100.0, 1000.0, 3000.0],
        5,
    )
    .unwrap();
    assert_eq!(r.initial_mean, 1.0);
    assert!(r.final_mean < 0.2, "{:?}", r.mean_counts);
    assert!(r.mean_counts.windows(2).all(|w| w[1] <= w[0]), "{:?}", r.mean_counts);
}

#[test]
fn swapped_particles_coalesce() {
    let r = test_discrepancy_decay(&nn_exclusion(), &DiscrepancyInit::Swap, 40, 30, &[2000.0], 6).unwrap();
    assert_eq!(r.initial_mean, 1.0);
    assert!(r.final_mean < 0.2, "{}", r.final_mean);
}

#[test]
fn identical_pairs_stay_at_distance_zero() {
    let r = test_macroscopic_stability(&disordered_tasep(), &StabilityInit::Identical { density: 0.4 }, 10, 200, 200.0, 0.01, 1)
        .unwrap();
    assert!(r.delta.iter().flatten().all(|&d| d == 0.0));
    assert_eq!(r.stable_fraction, 1.0);
}

#[test]
fn ordered_pairs_do_not_separate() {
    let r = test_macroscopic_stability(
        &nn_exclusion(),
        &StabilityInit::Ordered { density: 0.3, extra: 0.2 },
        20,
        200,
        500.0,
        0.01,
        2,
    )
    .unwrap();
    assert_eq!(r.nonincreasing_fraction, 1.0, "{:?}", r.delta);
}

#[test]
fn perturbed_pairs_stay_close() {
    let r = test_macroscopic_stability(&nn_exclusion(), &StabilityInit::Perturbed { density: 0.5 }, 20, 200, 500.0, 0.02, 3)
        .unwrap();
    assert!(r.stable_fraction >= 0.9, "{}", r.stable_fraction);
    for trace in &r.delta {
        assert!((trace[0] - 1.0 / 200.0).abs() < 1e-12, "{}", trace[0]);
    }
}

#[test]
fn constant_block_follows_the_pde() {
    let profile = StepProfile::blocks(1, &[-2.0, 2.0], &[0.5]).unwrap();
    let mut exp = ScalingExperiment::new(homogeneous_tasep(), parabola(), profile, vec![1000], 0.3, vec![1, 2, 3]);
    exp.time_points = 4;
    let r = run_hydro_experiment(&exp).unwrap();
    let s = &r.scales[0];
    assert!((s.total_mass - 2.0).abs() < 1e-12);
    assert!(s.max_mean_delta < 0.05 * 2.0, "{:?}", s.mean_delta);
}

#[test]
fn initial_sampling_error_shrinks() {
    let profile = StepProfile::blocks(1, &[-1.0, 0.0, 1.0], &[0.3, 0.7]).unwrap();
    let exp = ScalingExperiment::new(homogeneous_tasep(), parabola(), profile.clone(), vec![100, 10_000], 0.0, (1..=10).collect());
    let r = run_hydro_experiment(&exp).unwrap();
    assert_eq!(r.scales[0].times, vec![0.0]);
    assert!(r.final_decreasing(), "{:?}", r.scales.iter().map(|s| s.final_mean_delta).collect::<Vec<_>>());
    assert!(r.scales[1].final_mean_delta < 0.02);

    let target = profile.to_measure().unwrap();
    let lattice_len = r.scales[1].lattice_len;
    assert!(lattice_len >= 2 * 10_000);
    assert!(delta_distance(&target, &target) == 0.0);
}

#[test]
fn explicit_padding_below_light_cone_is_refused() {
    let profile = StepProfile::blocks(1, &[-0.5, 0.5], &[0.4]).unwrap();
    let mut exp = ScalingExperiment::new(homogeneous_tasep(), parabola(), profile, vec![100], 1.0, vec![1]);
    exp.padding = Some(0.1 * exp.spec.lipschitz_bound());
    assert!(matches!(run_hydro_experiment(&exp), Err(Error::Padding(_))));
}

#[test]
fn hydro_refuses_a_foreign_flux_table() {
    let mut flux = parabola();
    flux.meta = Some(FluxMeta {
        model_hash: "0".repeat(64),
        family: "tasep".into(),
        environment: EnvironmentLaw::constant(1.0),
        lattice_len: 10,
        burn_in: 0.0,
        horizon: 1.0,
        batches: 20,
        seeds: vec![1],
    });
    let profile = StepProfile::blocks(1, &[-0.5, 0.5], &[0.4]).unwrap();
    let exp = ScalingExperiment::new(homogeneous_tasep(), flux, profile, vec![100], 0.1, vec![1]);
    assert!(matches!(run_hydro_experiment(&exp), Err(Error::HashMismatch { .. })));
}

fn current_experiment(lambda: f64, rho: f64, velocities: Vec<f64>, scales: Vec<usize>, seeds: u64) -> CurrentExperiment {
    CurrentExperiment {
        spec: homogeneous_tasep(),
        flux: parabola(),
        lambda,
        rho,
        velocities,
        scales,
        time: 1.0,
        seeds: (1..=seeds).collect(),
        burn_in: 100.0,
        margin: 0.2,
    }
}

#[test]
fn equal_densities_give_the_flux_minus_drift() {
    let r = 0.3;
    let report = run_riemann_current(&current_experiment(r, r, vec![-0.5, 0.0, 0.5], vec![1000], 8)).unwrap();
    for row in &report.rows {
        let g = r * (1.0 - r) - row.velocity * r;
        assert!((row.expected - g).abs() < 1e-12);
        assert!(row.abs_error < 0.02, "v = {}: {} vs {g}", row.velocity, row.mean);
    }
}

#[test]
fn blocked_interface_carries_no_current() {
    let report = run_riemann_current(&current_experiment(0.0, 1.0, vec![0.0], vec![100, 300], 3)).unwrap();
    for row in &report.rows {
        assert_eq!(row.expected, 0.0);
        assert!(row.ratios.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn current_csv_has_one_line_per_seed() {
    let report = run_riemann_current(&current_experiment(0.2, 0.8, vec![0.0, 0.3], vec![50], 2)).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "velocity,scale,seed,ratio,expected");
    assert_eq!(text.lines().count(), 1 + 2 * 2);
}

#[test]
fn measures_accept_atoms_and_pieces() {
    let m = MassMeasure::new(vec![(0.0, 0.5)], vec![(0.0, 1.0, 0.5)]).unwrap();
    assert_eq!(m.total_mass(), 1.0);
}
