use hydrolimit::model::{
    EnvironmentLaw, Family, FieldKind, JumpKernel, Lattice, ModelSpec, RateFunction, ValueDistribution,
};

fn exclusion_spec(c: f64, kernel: JumpKernel, env: EnvironmentLaw) -> ModelSpec {
    ModelSpec::misanthrope(1, c, RateFunction::exclusion(1), kernel, env)
}

#[test]
fn exclusion_rate_satisfies_a3_to_a5() {
    for k in 1..=4u8 {
        let b = RateFunction::from_fn(k, |n, m| ((n > 0) && (m < k)) as u8 as f64).unwrap();
        assert!(b.validate().passed(), "K = {k}");
    }
}

#[test]
fn product_rate_passes() {
    let b = RateFunction::from_fn(3, |n, m| n as f64 * (3 - m) as f64).unwrap();
    let report = b.validate();
    assert!(report.passed());
    assert_eq!(b.sup_norm(), 9.0);
}

#[test]
fn rate_increasing_in_second_argument_fails_a5_at_first_pair() {
    let b = RateFunction::from_fn(2, |n, m| if m == 2 { 0.0 } else { n as f64 * m as f64 }).unwrap();
    let report = b.validate();
    let a5 = report.check("A5").unwrap();
    assert!(!a5.passed);
    assert!(a5.detail.contains("(1,0)->(1,1)"), "{}", a5.detail);
    assert!(report.check("A3").unwrap().passed);
}

#[test]
fn wrong_table_shape_is_structural() {
    assert!(RateFunction::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]]).is_err());
    assert!(RateFunction::new(1, vec![vec![0.0], vec![1.0, 0.0]]).is_err());
}

#[test]
fn unit_step_kernel_is_irreducible() {
    let p = JumpKernel::new(vec![(1, 1.0)]).unwrap();
    assert!(p.validate().check("A1").unwrap().passed);
}

#[test]
fn even_kernel_fails_a1() {
    let p = JumpKernel::new(vec![(2, 1.0)]).unwrap();
    assert!(!p.validate().check("A1").unwrap().passed);
    assert!(!p.validate().passed());
}

#[test]
fn symmetric_kernel_moments() {
    let p = JumpKernel::new(vec![(-1, 0.5), (1, 0.5)]).unwrap();
    assert!(p.validate().passed());
    assert_eq!(p.third_moment(), 1.0);
    assert_eq!(p.mean_abs(), 1.0);
    assert_eq!(p.mean(), 0.0);
}

#[test]
fn empty_kernel_is_structural() {
    assert!(JumpKernel::new(vec![]).is_err());
    assert!(JumpKernel::new(vec![(1, 0.4)]).is_err());
}

#[test]
fn lipschitz_examples() {
    let tasep = exclusion_spec(0.5, JumpKernel::totally_asymmetric(), EnvironmentLaw::uniform(0.5, 2.0));
    assert_eq!(tasep.lipschitz_bound(), 4.0);

    let ssep = exclusion_spec(1.0, JumpKernel::nearest_neighbor(0.5).unwrap(), EnvironmentLaw::constant(1.0));
    assert_eq!(ssep.lipschitz_bound(), 2.0);

    let two_step = ModelSpec {
        family: Family::KstepRandomWalk {
            kernel: JumpKernel::nearest_neighbor(0.5).unwrap(),
            k: 2,
            absorbed: false,
            envelope: Some(JumpKernel::nearest_neighbor(0.5).unwrap()),
        },
        capacity: 1,
        c: 0.5,
        environment: EnvironmentLaw::constant(1.0),
    };
    assert_eq!(two_step.lipschitz_bound(), 16.0);
}

#[test]
fn lipschitz_bound_ignores_the_realization() {
    let spec = exclusion_spec(0.5, JumpKernel::totally_asymmetric(), EnvironmentLaw::uniform(0.5, 2.0));
    let env = spec.sample_environment(Lattice::ring(50), 3).unwrap();
    let v = spec.lipschitz_bound();
    for s in [0, 1, 17, 49] {
        let shifted = env.rotated(s);
        assert!(shifted.check_invariants().passed());
        assert_eq!(spec.lipschitz_bound(), v);
    }
}

#[test]
fn point_mass_law_gives_homogeneous_field() {
    let spec = exclusion_spec(1.0, JumpKernel::totally_asymmetric(), EnvironmentLaw::constant(1.0));
    let env = spec.sample_environment(Lattice::ring(64), 11).unwrap();
    let FieldKind::Jump(f) = &env.kind else { panic!("jump field expected") };
    assert!(f.site_values.iter().all(|&a| a == 1.0));
}

#[test]
fn environment_is_a_function_of_the_seed() {
    let spec = exclusion_spec(0.5, JumpKernel::totally_asymmetric(), EnvironmentLaw::uniform(0.5, 2.0));
    let a = spec.sample_environment(Lattice::ring(100), 5).unwrap();
    let b = spec.sample_environment(Lattice::ring(100), 5).unwrap();
    let c = spec.sample_environment(Lattice::ring(100), 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn uniform_environment_mean() {
    let spec = exclusion_spec(0.5, JumpKernel::totally_asymmetric(), EnvironmentLaw::uniform(0.5, 2.0));
    let env = spec.sample_environment(Lattice::ring(10_000), 99).unwrap();
    let FieldKind::Jump(f) = &env.kind else { panic!("jump field expected") };
    let n = f.site_values.len() as f64;
    let mean = f.site_values.iter().sum::<f64>() / n;
    let sd = 1.5 / 12f64.sqrt();
    assert!((mean - 1.25).abs() < 3.0 * sd / n.sqrt(), "mean {mean}");
    assert!(f.site_values.iter().all(|&a| (0.5..=2.0).contains(&a)));
}

#[test]
fn law_escaping_ellipticity_is_rejected() {
    let spec = exclusion_spec(0.5, JumpKernel::totally_asymmetric(), EnvironmentLaw::uniform(0.25, 2.0));
    assert!(spec.sample_environment(Lattice::ring(10), 0).is_err());
}

#[test]
fn every_environment_family_stays_in_bounds() {
    let nn = JumpKernel::nearest_neighbor(0.7).unwrap();
    let specs = [
        exclusion_spec(0.5, nn.clone(), EnvironmentLaw::uniform(0.5, 2.0)),
        ModelSpec {
            family: Family::BondMisanthrope { rate: RateFunction::exclusion(2), kernel: nn.clone() },
            capacity: 2,
            c: 0.5,
            environment: EnvironmentLaw::uniform(0.5, 2.0),
        },
        ModelSpec {
            family: Family::KstepNearestNeighbor { k: 3, envelope: None },
            capacity: 1,
            c: 0.2,
            environment: EnvironmentLaw::Iid { value: ValueDistribution::Uniform { low: 0.3, high: 0.7 } },
        },
        ModelSpec {
            family: Family::KstepTwoSided { k: 2, envelope: None },
            capacity: 2,
            c: 0.5,
            environment: EnvironmentLaw::uniform(0.5, 1.0),
        },
        ModelSpec {
            family: Family::Traffic { k: 2, weights: vec![1.0, 2.0, 3.0, 4.0] },
            capacity: 1,
            c: 0.5,
            environment: EnvironmentLaw::uniform(0.5, 2.0),
        },
        ModelSpec {
            family: Family::KstepRandomWalk { kernel: nn, k: 2, absorbed: true, envelope: None },
            capacity: 1,
            c: 0.5,
            environment: EnvironmentLaw::Markov {
                values: vec![0.5, 2.0],
                transition: vec![vec![0.9, 0.1], vec![0.3, 0.7]],
            },
        },
    ];
    for spec in &specs {
        let v = spec.validate().unwrap();
        assert!(v.passed(), "{}: {:?}", spec.family.name(), v.failures().collect::<Vec<_>>());
        let env = spec.sample_environment(Lattice::ring(200), 1).unwrap();
        let report = env.check_invariants();
        assert!(report.passed(), "{}: {:?}", spec.family.name(), report.failures().collect::<Vec<_>>());
    }
}

#[test]
fn kstep_envelope_bound_is_checked() {
    let spec = ModelSpec {
        family: Family::KstepNearestNeighbor { k: 3, envelope: None },
        capacity: 1,
        c: 0.5,
        environment: EnvironmentLaw::uniform(0.3, 0.7),
    };
    let report = spec.validate().unwrap();
    assert!(!report.check("q-upper").unwrap().passed);
}

#[test]
fn reducible_markov_law_is_structural() {
    let spec = exclusion_spec(
        0.5,
        JumpKernel::totally_asymmetric(),
        EnvironmentLaw::Markov { values: vec![0.5, 2.0], transition: vec![vec![1.0, 0.0], vec![0.0, 1.0]] },
    );
    assert!(spec.validate().is_err());
}

#[test]
fn spec_round_trips_through_json() {
    let spec = exclusion_spec(0.5, JumpKernel::totally_asymmetric(), EnvironmentLaw::uniform(0.5, 2.0));
    let text = serde_json::to_string(&spec).unwrap();
    let back: ModelSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(spec, back);
}
