//! Acceptance criteria. Each test writes one `criterion N: PASS|FAIL` line
//! straight to stderr, so the verdicts show up even when libtest captures
//! output.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use indecision::evaluate::{order_kinds, split_group, split_individual, KindScore, Paradigm, RankBy, SplitSpec};
use indecision::fitting::{fit_k_mixture, fit_model, Interval, SearchOptions};
use indecision::rng::{derive_seed, seeded};
use indecision::simulate::{
    generate_population, generate_queries, simulate_agent, simulate_population, Agent,
    FeatureSpec, PopulationSpec, QueryPlan,
};
use indecision::stats::{hypothesis_tests_from_counts, AggregateCounts, DEFAULT_ALPHA};
use indecision::{
    equivalence, log_likelihood, ComparisonQuery, Execution, IndecisionModel, MaxUForm, Mode,
    ModelKind, Normalizer, StrictPolicy, StrictVariant,
};
use rand::Rng;

fn verdict(criterion: u32, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {criterion}: {status} {detail}");
}

fn finish(criterion: u32, checks: &[(&str, bool)], detail: String) {
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let detail = if failed.is_empty() {
        detail
    } else {
        format!("{detail} [failed: {}]", failed.join(", "))
    };
    verdict(criterion, failed.is_empty(), &detail);
    assert!(failed.is_empty(), "criterion {criterion}: {detail}");
}

fn random_model(rng: &mut impl Rng) -> IndecisionModel {
    let kinds = ModelKind::all(if rng.random_bool(0.5) { MaxUForm::TwiceMin } else { MaxUForm::Sum });
    let kind = kinds[rng.random_range(0..kinds.len())];
    let w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
    match kind {
        ModelKind::NaiveRand => IndecisionModel::naive_rand(rng.random_range(0.0..=1.0)).unwrap(),
        ModelKind::UniformRand => IndecisionModel::uniform_rand(),
        ModelKind::Logit => IndecisionModel::logit(w).unwrap(),
        k if k.is_difference_based() => IndecisionModel::new(k, w, rng.random_range(0.0..=2.0)).unwrap(),
        k => IndecisionModel::new(k, w, rng.random_range(-2.0..=2.0)).unwrap(),
    }
}

#[test]
fn criterion_1_normalization() {
    let start = Instant::now();
    let mut rng = seeded(1);
    let (mut failures, mut strict_checks) = (0usize, 0usize);
    for _ in 0..10_000 {
        let model = random_model(&mut rng);
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..=1.0)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..=1.0)).collect();
        let query = ComparisonQuery::from_features(a, b).unwrap();
        let d = model.response_distribution(&query).unwrap();
        if (d.sum() - 1.0).abs() > 1e-12 || d.p.iter().any(|&p| p < 0.0) {
            failures += 1;
        }
        if !model.kind().has_scores() {
            continue;
        }
        for variant in [StrictVariant::ClosedForm, StrictVariant::Process] {
            for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let s = model.strict_distribution(&StrictPolicy::new(q, variant).unwrap(), &query).unwrap();
                strict_checks += 1;
                if (s.sum() - 1.0).abs() > 1e-12 || s.p1 < 0.0 || s.p2 < 0.0 {
                    failures += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    finish(
        1,
        &[("zero failures", failures == 0), ("under 5 s", elapsed < Duration::from_secs(5))],
        format!("10000 draws, {strict_checks} strict pairs, {failures} failures, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_2_equivalence() {
    let start = Instant::now();
    let report = equivalence::run(10_000, 7).unwrap();
    let elapsed = start.elapsed();
    let c = &report.counterexample;
    finish(
        2,
        &[
            ("zero mismatches", report.mismatches() == 0),
            ("every kind checked", report.kinds.iter().all(|k| k.trials == 10_000) && report.kinds.len() == 5),
            ("max-u divergence", c.diverges && c.main_text == "{1}" && c.response_function == "{0}"),
            ("under 10 s", elapsed < Duration::from_secs(10)),
        ],
        format!(
            "{} mismatches over 5 x 10000 draws; main-text {} vs rule {} at u=(1, 0.9), lambda=0.85; {elapsed:.2?}",
            report.mismatches(),
            c.main_text,
            c.response_function
        ),
    );
}

#[test]
fn criterion_3_uniform_baseline() {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let mut rng = seeded(seed);
        let queries = generate_queries(&FeatureSpec::default(), &Normalizer::default(), 40, &mut rng).unwrap();
        let agent = IndecisionModel::new(ModelKind::MinDelta, vec![0.5, -0.5, 0.2], 0.4).unwrap();
        let data = simulate_agent(&agent, None, &queries, Mode::Indecisive, "v", &mut rng).unwrap();
        let fit = fit_model(&data, ModelKind::UniformRand, &SearchOptions::new(1, 0)).unwrap();
        let ll = log_likelihood(&IndecisionModel::uniform_rand(), &data, None).unwrap();
        assert_eq!(fit.train_ll, ll);
        worst = worst.max((ll - -(3.0f64).ln()).abs());
    }
    let ll = -(3.0f64).ln();
    finish(
        3,
        &[("equals -ln 3", worst <= 1e-15), ("matches -1.10", (ll - -1.10).abs() <= 0.005)],
        format!("uniform-rand LL {ll:.4} on 5 datasets (max deviation {worst:e}), reported -1.10"),
    );
}

/// Pearson statistic of a 2x2 table from expected counts, computed cell by cell.
fn textbook_pearson(table: [[f64; 2]; 2]) -> f64 {
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let n = rows[0] + rows[1];
    let mut x = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / n;
            x += (table[i][j] - e).powi(2) / e;
        }
    }
    x
}

#[test]
fn criterion_4_hypothesis_tests() {
    let start = Instant::now();
    let report = hypothesis_tests_from_counts(
        AggregateCounts::new(581.0, 74.0, 275.0).unwrap(),
        AggregateCounts::new(751.0, 149.0, 0.0).unwrap(),
        false,
        DEFAULT_ALPHA,
    )
    .unwrap();
    let x1 = textbook_pearson([[581.0, 74.0], [751.0, 149.0]]);
    let x2 = textbook_pearson([[718.5, 211.5], [751.0, 149.0]]);
    let (h1, h2) = (&report.h0_1, &report.h0_2);
    let elapsed = start.elapsed();
    finish(
        4,
        &[
            ("effective votes", report.effective == (718.5, 211.5)),
            ("H0-1 cross-check", (h1.statistic - x1).abs() <= 1e-9),
            ("H0-2 cross-check", (h2.statistic - x2).abs() <= 1e-9),
            ("H0-1 frozen", (h1.statistic - 8.53140928828622).abs() <= 1e-9),
            ("H0-2 frozen", (h2.statistic - 11.065597381040101).abs() <= 1e-9),
            ("H0-1 rejected", h1.p_value < 0.01 && h1.rejected),
            ("H0-2 rejected", h2.p_value < 0.01 && h2.rejected),
            ("under 1 s", elapsed < Duration::from_secs(1)),
        ],
        format!(
            "H0-1 chi2={:.6} p={:.6}; H0-2 chi2={:.6} p={:.6}",
            h1.statistic, h1.p_value, h2.statistic, h2.p_value
        ),
    );
}

const RECOVERY_SEED: u64 = 2024;
const RECOVERY_AGENTS: usize = 30;

fn recovery_agents() -> Vec<Agent> {
    let mut spec = PopulationSpec::new(RECOVERY_AGENTS, vec![(ModelKind::MinDelta, 1.0)]);
    spec.q = Interval::new(0.5, 0.5).unwrap();
    generate_population(&spec, RECOVERY_SEED).unwrap()
}

struct Recovery {
    top_two: usize,
    fitted: f64,
    truth: f64,
}

/// Fits the five indecision kinds to each agent's training half and scores
/// them, and the agent's true parameters, on the test half.
fn recover(mode: Mode, budget: usize) -> Recovery {
    let agents = recovery_agents();
    let data = simulate_population(
        &agents,
        &QueryPlan::PerVoter(40),
        &FeatureSpec::default(),
        &Normalizer::default(),
        mode,
        RECOVERY_SEED,
        Execution::Parallel,
    )
    .unwrap();
    let kinds = ModelKind::indecision_kinds(MaxUForm::TwiceMin);
    let opts = SearchOptions::new(budget, RECOVERY_SEED);
    let (mut top_two, mut fitted, mut truth) = (0, 0.0, 0.0);
    for (i, agent) in agents.iter().enumerate() {
        let records = data.filter_voter(&agent.voter_id);
        let (train, test) = split_individual(&records, derive_seed(RECOVERY_SEED, i as u64)).unwrap();
        assert_eq!((train.len(), test.len()), (20, 20));
        let scores: Vec<KindScore> = kinds
            .iter()
            .map(|&kind| {
                let mut fit = fit_model(&train, kind, &opts).unwrap();
                fit.evaluate_test(&test).unwrap();
                KindScore::from_fit(&fit).unwrap()
            })
            .collect();
        if order_kinds(&scores, RankBy::Test)[..2].contains(&ModelKind::MinDelta) {
            top_two += 1;
        }
        fitted += scores[0].test_ll;
        let policy = (mode == Mode::Strict).then_some(&agent.policy);
        truth += log_likelihood(&agent.model, &test, policy).unwrap();
    }
    let n = agents.len() as f64;
    Recovery {
        top_two,
        fitted: fitted / n,
        truth: truth / n,
    }
}

#[test]
fn criterion_5_parameter_recovery() {
    let start = Instant::now();
    let r = recover(Mode::Indecisive, 1000);
    let elapsed = start.elapsed();
    let rate = r.top_two as f64 / RECOVERY_AGENTS as f64;
    let gap = r.fitted - r.truth;
    finish(
        5,
        &[
            ("min-delta top 2 for >= 70%", rate >= 0.7),
            ("mean test LL within 0.1", gap.abs() <= 0.1),
            ("under 5 min", elapsed < Duration::from_secs(300)),
        ],
        format!(
            "min-delta top 2 for {}/{RECOVERY_AGENTS} agents ({:.0}%); mean test LL fitted {:.4} vs true {:.4} (gap {gap:+.4}); {elapsed:.1?}",
            r.top_two,
            100.0 * rate,
            r.fitted,
            r.truth
        ),
    );
}

#[test]
fn criterion_6_strict_recovery() {
    let start = Instant::now();
    let r = recover(Mode::Strict, 5000);
    let elapsed = start.elapsed();
    let gap = r.fitted - r.truth;
    finish(
        6,
        &[
            ("mean test LL within 0.1", gap.abs() <= 0.1),
            ("under 10 min", elapsed < Duration::from_secs(600)),
        ],
        format!(
            "q=0.5, budget 5000: mean test LL fitted {:.4} vs true {:.4} (gap {gap:+.4}); {elapsed:.1?}",
            r.fitted, r.truth
        ),
    );
}

#[test]
fn criterion_7_mixture_dominance() {
    let start = Instant::now();
    let kinds = ModelKind::indecision_kinds(MaxUForm::TwiceMin);
    let seeds = [1u64, 2, 3, 4, 5];
    let mut single = [0.0; 5];
    let mut mixture = 0.0;
    for seed in seeds {
        let spec = PopulationSpec::new(
            100,
            vec![(ModelKind::MinDelta, 0.5), (ModelKind::MaxU(MaxUForm::TwiceMin), 0.5)],
        );
        let agents = generate_population(&spec, seed).unwrap();
        let data = simulate_population(
            &agents,
            &QueryPlan::PerVoter(40),
            &FeatureSpec::default(),
            &Normalizer::default(),
            Mode::Indecisive,
            seed,
            Execution::Parallel,
        )
        .unwrap();
        let split = split_group(&data, &SplitSpec { paradigm: Paradigm::Population, train_voters: 50, seed }).unwrap();
        for (k, kind) in kinds.into_iter().enumerate() {
            let mut fit = fit_model(&split.train, kind, &SearchOptions::new(5000, seed)).unwrap();
            single[k] += fit.evaluate_test(&split.test).unwrap() / seeds.len() as f64;
        }
        let mut mix = fit_k_mixture(&split.train, 2, None, MaxUForm::TwiceMin, &SearchOptions::new(20_000, seed)).unwrap();
        mixture += mix.evaluate_test(&split.test).unwrap() / seeds.len() as f64;
    }
    let (best_kind, best) = kinds
        .into_iter()
        .zip(single)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let elapsed = start.elapsed();
    finish(
        7,
        &[
            ("mixture >= best single - 0.02", mixture >= best - 0.02),
            ("under 15 min", elapsed < Duration::from_secs(900)),
        ],
        format!("2-mixture mean test LL {mixture:.4} vs best single ({best_kind}) {best:.4} over 5 seeds; {elapsed:.1?}"),
    );
}

fn run_cli(args: &[&str], out: &Path, threads: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_indecision"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("INDECISION_THREADS", threads)
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Runs the full command sequence into `out`, reading inputs from `out`.
fn pipeline(out: &Path, threads: &str) {
    let p = |name: &str| out.join(name).to_string_lossy().into_owned();
    let (ind, strict, fit_json, eval_json) = (p("ind.csv"), p("strict.csv"), p("fit_min-delta.json"), p("evaluation.json"));
    let steps: Vec<Vec<&str>> = vec![
        vec!["simulate", "--seed", "3", "--voters", "12", "--kinds", "min-delta=0.5,dom=0.5", "--shared-queries", "--queries", "15", "--output", "ind.csv"],
        vec!["simulate", "--seed", "4", "--voters", "12", "--mode", "strict", "--q-range", "0.2,0.8", "--shared-queries", "--queries", "15", "--output", "strict.csv"],
        vec!["fit", "--seed", "5", "--data", &strict, "--test", &strict, "--model", "min-delta", "--model", "logit", "--budget", "200"],
        vec!["fit", "--seed", "5", "--data", &strict, "--mixture", "2", "--budget", "300"],
        vec!["fit", "--seed", "5", "--data", &ind, "--vmixture", "--budget", "50"],
        vec!["evaluate", "--seed", "6", "--data", &ind, "--budget", "100"],
        vec!["evaluate", "--seed", "6", "--data", &ind, "--paradigm", "population", "--train-voters", "6", "--budget", "100", "--mixture-budget", "200"],
        vec!["hypothesis-test", "--indecisive", &ind, "--strict", &strict],
        vec!["equivalence-check", "--seed", "7", "--trials", "2000"],
        vec!["report", &fit_json, &eval_json],
    ];
    for args in &steps {
        run_cli(args, out, threads);
    }
}

const EXPECTED_FILES: [&str; 18] = [
    "agents.json",
    "equivalence.json",
    "evaluation.json",
    "fit_logit.json",
    "fit_min-delta.json",
    "fit_mixture.json",
    "fit_vmixture.json",
    "group_fits.json",
    "group_report.csv",
    "hypothesis.csv",
    "hypothesis.json",
    "ind.csv",
    "rank_table.csv",
    "rank_table_train.csv",
    "strict.csv",
    "summary.csv",
    "tallies.csv",
    "voter_fits.csv",
];

#[test]
fn criterion_8_cli_determinism() {
    let start = Instant::now();
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip(["1", "4", "4"]) {
        pipeline(dir.path(), threads);
    }
    let snaps: Vec<_> = dirs.iter().map(|d| snapshot(d.path())).collect();
    let files = snaps[0].len();
    let differing: Vec<String> = snaps[0]
        .iter()
        .filter(|(name, bytes)| snaps[1..].iter().any(|s| s.get(*name) != Some(*bytes)))
        .map(|(name, _)| name.clone())
        .collect();
    let elapsed = start.elapsed();
    finish(
        8,
        &[
            ("same file set", snaps.iter().all(|s| s.keys().eq(snaps[0].keys()))),
            ("byte-identical", differing.is_empty()),
            ("every output written", EXPECTED_FILES.iter().all(|f| snaps[0].contains_key(*f))),
        ],
        format!(
            "10 commands x 3 runs (1, 4, 4 threads): {files} files, {} differing {differing:?}; {elapsed:.1?}",
            differing.len()
        ),
    );
}
