use indecision::rng::seeded;
use indecision::simulate::{
    generate_patients, generate_population, generate_queries, simulate_agent, simulate_population,
    FeatureSpec, PopulationSpec, QueryPlan, DEFAULT_QUERIES,
};
use indecision::{
    ComparisonQuery, Execution, IndecisionModel, MaxUForm, Mode, ModelKind, Normalizer, Response,
    StrictPolicy, StrictVariant,
};

/// 0.999 quantiles of the chi-squared distribution, keyed by degrees of freedom.
const CHI2_999: [(usize, f64); 3] = [(45, 80.07673201081901), (4, 18.46682695290317), (2, 13.815510557964274)];

fn uniformity_statistic(values: &[i64], lo: i64, hi: i64) -> f64 {
    let cells = (hi - lo + 1) as usize;
    let mut counts = vec![0usize; cells];
    for &v in values {
        assert!((lo..=hi).contains(&v), "{v} outside [{lo}, {hi}]");
        counts[(v - lo) as usize] += 1;
    }
    let expected = values.len() as f64 / cells as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

#[test]
fn patient_attributes_are_uniform() {
    let mut rng = seeded(2024);
    let items = generate_patients(&FeatureSpec::default(), &Normalizer::default(), 50_000, &mut rng).unwrap();
    let raw: Vec<[f64; 3]> = items.iter().map(|i| i.raw.unwrap().as_array()).collect();
    let column = |n: usize| raw.iter().map(|r| r[n] as i64).collect::<Vec<_>>();
    let checks = [(column(0), 25, 70), (column(1), 1, 5), (column(2), 0, 2)];
    for ((values, lo, hi), (df, critical)) in checks.iter().zip(CHI2_999) {
        assert_eq!((hi - lo) as usize, df);
        let stat = uniformity_statistic(values, *lo, *hi);
        assert!(stat < critical, "range [{lo}, {hi}]: statistic {stat}");
    }
    assert!(items.iter().all(|i| i.features.iter().all(|x| (0.0..=1.0).contains(x))));
}

#[test]
fn generation_is_reproducible() {
    let spec = FeatureSpec::default();
    let norm = Normalizer::default();
    let a = generate_queries(&spec, &norm, DEFAULT_QUERIES, &mut seeded(5)).unwrap();
    let b = generate_queries(&spec, &norm, DEFAULT_QUERIES, &mut seeded(5)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 40);
    assert_eq!(a.iter().map(|q| q.id.unwrap()).collect::<Vec<_>>(), (0..40).collect::<Vec<_>>());
}

#[test]
fn empirical_frequencies_match_the_distribution() {
    let repeats = 20_000;
    let query = ComparisonQuery::from_features(vec![0.7, 0.2, 0.5], vec![0.3, 0.6, 0.0]).unwrap();
    let queries = vec![query.clone(); repeats];
    let models = [
        IndecisionModel::new(ModelKind::MinDelta, vec![1.0, -0.5, 0.3], 0.4).unwrap(),
        IndecisionModel::new(ModelKind::MaxU(MaxUForm::TwiceMin), vec![0.2, 0.9, -0.4], 0.1).unwrap(),
        IndecisionModel::naive_rand(0.3).unwrap(),
    ];
    for (seed, model) in models.iter().enumerate() {
        let data = simulate_agent(model, None, &queries, Mode::Indecisive, "v", &mut seeded(seed as u64)).unwrap();
        let counts = data.response_counts();
        let dist = model.response_distribution(&query).unwrap();
        for r in Response::ALL {
            let p = dist.get(r);
            let sigma = (repeats as f64 * p * (1.0 - p)).sqrt();
            let diff = (counts[r.index()] as f64 - repeats as f64 * p).abs();
            assert!(diff <= 3.0 * sigma, "{} {r:?}: {} vs {p}", model.kind(), counts[r.index()]);
        }
    }
}

#[test]
fn strict_frequencies_match_the_distribution() {
    let repeats = 20_000;
    let query = ComparisonQuery::from_features(vec![0.5, 0.5, 0.5], vec![0.4, 0.7, 0.5]).unwrap();
    let model = IndecisionModel::new(ModelKind::Dom, vec![0.5, -1.0, 0.2], -0.1).unwrap();
    for variant in [StrictVariant::ClosedForm, StrictVariant::Process] {
        let policy = StrictPolicy::new(0.25, variant).unwrap();
        let data = simulate_agent(&model, Some(&policy), &vec![query.clone(); repeats], Mode::Strict, "v", &mut seeded(9)).unwrap();
        let counts = data.response_counts();
        assert_eq!(counts[0], 0);
        let p = model.strict_distribution(&policy, &query).unwrap().p1;
        let sigma = (repeats as f64 * p * (1.0 - p)).sqrt();
        assert!((counts[1] as f64 - repeats as f64 * p).abs() <= 3.0 * sigma, "{variant:?}");
    }
}

#[test]
fn always_indecisive_agent() {
    let queries = generate_queries(&FeatureSpec::default(), &Normalizer::default(), 50, &mut seeded(1)).unwrap();
    let data = simulate_agent(&IndecisionModel::naive_rand(1.0).unwrap(), None, &queries, Mode::Indecisive, "v", &mut seeded(2)).unwrap();
    assert_eq!(data.response_counts(), [50, 0, 0]);
}

#[test]
fn population_kind_counts_are_binomial() {
    let spec = PopulationSpec::new(
        10_000,
        vec![(ModelKind::MinDelta, 0.5), (ModelKind::MaxU(MaxUForm::TwiceMin), 0.5)],
    );
    let agents = generate_population(&spec, 77).unwrap();
    let min_delta = agents.iter().filter(|a| a.model.kind() == ModelKind::MinDelta).count() as f64;
    let sigma = (10_000.0f64 * 0.25).sqrt();
    assert!((min_delta - 5000.0).abs() <= 3.0 * sigma, "{min_delta}");
    let bounds = spec.bounds;
    for a in &agents {
        assert!(a.model.weights().iter().all(|w| bounds.weight.contains(*w)));
        assert!(bounds.threshold_for(a.model.kind()).contains(a.model.threshold()));
    }
}

#[test]
fn population_edge_cases() {
    assert!(generate_population(&PopulationSpec::new(0, vec![(ModelKind::MinDelta, 1.0)]), 1).unwrap().is_empty());
    let all = generate_population(&PopulationSpec::new(50, vec![(ModelKind::MinDelta, 1.0)]), 1).unwrap();
    assert!(all.iter().all(|a| a.model.kind() == ModelKind::MinDelta));
    assert!(generate_population(&PopulationSpec::new(5, vec![(ModelKind::MinDelta, 0.6)]), 1).is_err());
}

#[test]
fn population_simulation_is_order_independent() {
    let spec = PopulationSpec::new(12, vec![(ModelKind::Dom, 0.5), (ModelKind::MinU, 0.5)]);
    let agents = generate_population(&spec, 3).unwrap();
    let run = |agents: &[_], exec| {
        simulate_population(agents, &QueryPlan::PerVoter(10), &FeatureSpec::default(), &Normalizer::default(), Mode::Strict, 8, exec).unwrap()
    };
    let par = run(&agents, Execution::Parallel);
    assert_eq!(par, run(&agents, Execution::Sequential));
    assert_eq!(par.response_counts()[0], 0);
    // Agent i depends only on (seed, i), so a longer population extends a shorter one.
    let more = generate_population(&PopulationSpec { count: 20, ..spec }, 3).unwrap();
    assert_eq!(&more[..12], &agents[..]);
}
