use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use indecision::config::RunConfig;
use indecision::evaluate::{
    evaluate_individuals, group_report, rank_models, split_group, Paradigm, RankBy, SplitSpec,
    VoterEvaluation,
};
use indecision::fitting::{
    fit_k_mixture, fit_model, fit_vmixture, FitResult, FittedModel, Interval, SearchOptions,
};
use indecision::io::{
    self, AgentRecord, EvaluationRecord, FitRecord, LabelledFit, ModelRecord,
};
use indecision::rng::{derive_seed, seeded};
use indecision::simulate::{
    generate_population, generate_queries, simulate_population, FeatureSpec, PopulationSpec,
    QueryPlan,
};
use indecision::stats::{hypothesis_tests_from_counts, run_hypothesis_tests, AggregateCounts};
use indecision::{
    equivalence, mixture_log_likelihood, Error, Execution, MaxUForm, Mode, ModelKind,
    ResponseDataset, StrictVariant,
};

use crate::{
    Cli, Command, EquivalenceArgs, EvaluateArgs, FitArgs, Global, HypothesisArgs, ReportArgs,
    SimulateArgs,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or input values.
    Validation(String),
    Core(Error),
    /// The command ran but its check did not hold.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Core(_) | CliError::Failed(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Failed(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn invalid(message: impl Into<String>) -> CliError {
    CliError::Validation(message.into())
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
}

impl Context {
    fn new(global: &Global) -> Result<Self> {
        let mut cfg = match &global.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = global.seed {
            cfg.seed = seed;
        }
        if let Some(s) = &global.strict_variant {
            cfg.strict_variant = StrictVariant::from_slug(s)
                .ok_or_else(|| invalid(format!("unknown strict variant {s:?}")))?;
        }
        if let Some(s) = &global.maxu_variant {
            let form = MaxUForm::from_slug(s)
                .ok_or_else(|| invalid(format!("unknown Max-U variant {s:?}")))?;
            cfg.set_maxu_variant(form);
        }
        let out = global
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Context { cfg, out })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn load(&self, path: &Path) -> Result<ResponseDataset> {
        let loaded = io::load_dataset(path, &self.cfg.normalizer)?;
        for w in &loaded.warnings {
            log::warn!("{}: {w}", path.display());
        }
        Ok(loaded.dataset)
    }

    fn kind(&self, slug: &str) -> Result<ModelKind> {
        ModelKind::from_slug(slug, self.cfg.maxu_variant)
            .ok_or_else(|| invalid(format!("unknown model kind {slug:?}")))
    }

    fn kinds(&self, slugs: &[String]) -> Result<Vec<ModelKind>> {
        if slugs.is_empty() {
            return Ok(self.cfg.models.clone());
        }
        slugs.iter().map(|s| self.kind(s)).collect()
    }

    fn options(&self, budget: usize) -> Result<SearchOptions> {
        if budget == 0 {
            return Err(invalid("budget must be at least 1"));
        }
        Ok(self.cfg.search_options(budget))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(&cli.global)?;
    match cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Fit(a) => fit(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::HypothesisTest(a) => hypothesis(&ctx, a),
        Command::EquivalenceCheck(a) => equivalence_check(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

fn parse_mode(s: &str) -> Result<Mode> {
    Mode::from_slug(s).ok_or_else(|| invalid(format!("unknown mode {s:?}")))
}

fn parse_numbers(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("{what}: {p:?} is not a number")))
        })
        .collect()
}

fn simulate(ctx: &Context, a: SimulateArgs) -> Result<()> {
    if a.voters == 0 {
        return Err(invalid("--voters must be at least 1"));
    }
    if a.queries == 0 {
        return Err(invalid("--queries must be at least 1"));
    }
    let mode = parse_mode(&a.mode)?;
    let kind_distribution = a
        .kinds
        .split(',')
        .map(|pair| {
            let (slug, p) = pair
                .split_once('=')
                .ok_or_else(|| invalid(format!("--kinds entry {pair:?} is not kind=probability")))?;
            let p = p
                .trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("--kinds probability {p:?} is not a number")))?;
            Ok((ctx.kind(slug.trim())?, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let q = match parse_numbers(&a.q_range, "--q-range")?.as_slice() {
        [lo, hi] => Interval::new(*lo, *hi)?,
        _ => return Err(invalid("--q-range expects `lo,hi`")),
    };
    let seed = ctx.cfg.seed;
    let spec = PopulationSpec {
        count: a.voters,
        kind_distribution,
        bounds: ctx.cfg.bounds,
        n_features: indecision::Normalizer::DIM,
        q,
        strict_variant: ctx.cfg.strict_variant,
    };
    let agents = generate_population(&spec, seed)?;
    let features = FeatureSpec::default();
    let plan = if a.shared_queries {
        let mut rng = seeded(derive_seed(seed, u64::MAX));
        QueryPlan::Shared(generate_queries(&features, &ctx.cfg.normalizer, a.queries, &mut rng)?)
    } else {
        QueryPlan::PerVoter(a.queries)
    };
    let data = simulate_population(
        &agents,
        &plan,
        &features,
        &ctx.cfg.normalizer,
        mode,
        seed,
        Execution::Parallel,
    )?;
    let path = ctx.write(&a.output, &io::dataset_to_csv(&data, &ctx.cfg.normalizer)?)?;
    let truth: Vec<AgentRecord> = agents
        .iter()
        .map(|agent| AgentRecord {
            voter_id: agent.voter_id.clone(),
            model: ModelRecord::new(&agent.model, Some(&agent.policy)),
        })
        .collect();
    ctx.write("agents.json", &io::to_pretty_json(&truth)?)?;
    println!(
        "simulated {} records from {} voters ({}) -> {}",
        data.len(),
        agents.len(),
        mode.slug(),
        path.display()
    );
    Ok(())
}

fn vmixture_result(
    per_voter: &[(String, ResponseDataset)],
    train: &ResponseDataset,
    max_u: MaxUForm,
    opts: &SearchOptions,
) -> Result<FitResult> {
    let fit = fit_vmixture(per_voter, max_u, opts)?;
    let train_ll = mixture_log_likelihood(&fit.mixture, train, None)?;
    Ok(FitResult {
        model: FittedModel::Mixture(fit.mixture),
        policy: None,
        train_ll,
        test_ll: None,
        budget: opts.budget,
        seed: opts.seed,
        candidate_index: 0,
    })
}

fn show(label: &str, fit: &FitResult) {
    match fit.test_ll {
        Some(t) => println!("{label}: train_ll {:.6} test_ll {t:.6}", fit.train_ll),
        None => println!("{label}: train_ll {:.6}", fit.train_ll),
    }
}

fn fit(ctx: &Context, a: FitArgs) -> Result<()> {
    let data = ctx.load(&a.data)?;
    let test = a.test.as_deref().map(|p| ctx.load(p)).transpose()?;
    let finish = |label: &str, mut fit: FitResult| -> Result<()> {
        if let Some(test) = &test {
            fit.evaluate_test(test)?;
        }
        ctx.write(&format!("fit_{label}.json"), &io::fit_to_json(&fit)?)?;
        show(label, &fit);
        Ok(())
    };
    let max_u = ctx.cfg.maxu_variant;
    if a.vmixture {
        let opts = ctx.options(a.budget.unwrap_or(ctx.cfg.budget(data.mode())))?;
        return finish("vmixture", vmixture_result(&data.by_voter(), &data, max_u, &opts)?);
    }
    if let Some(k) = a.mixture {
        if k == 0 {
            return Err(invalid("--mixture must be at least 1"));
        }
        let fixed = a.fixed_kind.as_deref().map(|s| ctx.kind(s)).transpose()?;
        let opts = ctx.options(a.budget.unwrap_or(ctx.cfg.budget_mixture))?;
        return finish("mixture", fit_k_mixture(&data, k, fixed, max_u, &opts)?);
    }
    if a.fixed_kind.is_some() {
        return Err(invalid("--fixed-kind needs --mixture"));
    }
    let opts = ctx.options(a.budget.unwrap_or(ctx.cfg.budget(data.mode())))?;
    for kind in ctx.kinds(&a.models)? {
        finish(kind.slug(), fit_model(&data, kind, &opts)?)?;
    }
    Ok(())
}

fn rank_tables(ctx: &Context, voters: &[VoterEvaluation]) -> Result<()> {
    let scores = voters
        .iter()
        .map(VoterEvaluation::scores)
        .collect::<indecision::Result<Vec<_>>>()?;
    let by_test = rank_models(&scores, RankBy::Test)?;
    let by_train = rank_models(&scores, RankBy::Train)?;
    let table = io::rank_table_csv(&by_test);
    ctx.write("rank_table.csv", &table)?;
    ctx.write("rank_table_train.csv", &io::rank_table_csv(&by_train))?;
    print!("{table}");
    Ok(())
}

fn evaluate(ctx: &Context, a: EvaluateArgs) -> Result<()> {
    let paradigm = Paradigm::from_slug(&a.paradigm)
        .ok_or_else(|| invalid(format!("unknown paradigm {:?}", a.paradigm)))?;
    let data = ctx.load(&a.data)?;
    let kinds = ctx.kinds(&a.models)?;
    let seed = ctx.cfg.seed;
    let opts = ctx.options(a.budget.unwrap_or(ctx.cfg.budget(data.mode())))?;

    if paradigm == Paradigm::Individual {
        let voters = evaluate_individuals(&data, &kinds, &opts, seed)?;
        let record = EvaluationRecord::new(paradigm.slug(), &voters);
        ctx.write("evaluation.json", &io::to_pretty_json(&record)?)?;
        ctx.write("voter_fits.csv", &io::voter_fits_csv(&voters))?;
        return rank_tables(ctx, &voters);
    }

    let train_voters = a.train_voters.unwrap_or(match paradigm {
        Paradigm::Representatives => ctx.cfg.representatives_voters,
        _ => ctx.cfg.population_voters,
    });
    let split = split_group(
        &data,
        &SplitSpec {
            paradigm,
            train_voters,
            seed,
        },
    )?;
    let mut fits: Vec<(String, FitResult)> = Vec::new();
    for &kind in &kinds {
        fits.push((kind.slug().to_string(), fit_model(&split.train, kind, &opts)?));
    }
    let max_u = ctx.cfg.maxu_variant;
    let mix_opts = ctx.options(a.mixture_budget.unwrap_or(ctx.cfg.budget_mixture))?;
    let k = ctx.cfg.mixture_k;
    fits.push((
        format!("{k}-mixture"),
        fit_k_mixture(&split.train, k, None, max_u, &mix_opts)?,
    ));
    fits.push((
        format!("{k}-min-delta"),
        fit_k_mixture(&split.train, k, Some(ModelKind::MinDelta), max_u, &mix_opts)?,
    ));
    fits.push((
        "vmixture".to_string(),
        vmixture_result(&split.per_voter_train, &split.train, max_u, &opts)?,
    ));
    for (_, fit) in &mut fits {
        fit.evaluate_test(&split.test)?;
    }
    let models: Vec<_> = fits
        .iter()
        .map(|(label, f)| (label.clone(), f.model.clone(), f.policy))
        .collect();
    let rows = group_report(&models, &split)?;
    let stored: Vec<LabelledFit> = fits
        .iter()
        .map(|(label, f)| LabelledFit {
            label: label.clone(),
            fit: FitRecord::from_fit(f),
        })
        .collect();
    ctx.write("group_fits.json", &io::to_pretty_json(&stored)?)?;
    let table = io::group_report_csv(&rows);
    ctx.write("group_report.csv", &table)?;
    print!("{table}");
    Ok(())
}

fn parse_counts(text: &str) -> Result<(AggregateCounts, AggregateCounts)> {
    let (ind, st) = text
        .split_once(':')
        .ok_or_else(|| invalid("--counts expects `maj,min,flips:maj,min`"))?;
    let ind = parse_numbers(ind, "--counts")?;
    let st = parse_numbers(st, "--counts")?;
    match (ind.as_slice(), st.as_slice()) {
        ([a, b, c], [d, e]) => Ok((AggregateCounts::new(*a, *b, *c)?, AggregateCounts::new(*d, *e, 0.0)?)),
        _ => Err(invalid("--counts expects `maj,min,flips:maj,min`")),
    }
}

fn hypothesis(ctx: &Context, a: HypothesisArgs) -> Result<()> {
    let alpha = a.alpha.unwrap_or(ctx.cfg.alpha);
    let correction = a.correction || ctx.cfg.correction;
    let report = match (&a.counts, &a.indecisive, &a.strict) {
        (Some(counts), _, _) => {
            let (ind, st) = parse_counts(counts)?;
            hypothesis_tests_from_counts(ind, st, correction, alpha)?
        }
        (None, Some(ind), Some(st)) => {
            run_hypothesis_tests(&ctx.load(ind)?, &ctx.load(st)?, correction, alpha)?
        }
        _ => return Err(invalid("give --indecisive and --strict, or --counts")),
    };
    ctx.write("hypothesis.json", &io::to_pretty_json(&report)?)?;
    let table = io::hypothesis_csv(&report);
    ctx.write("hypothesis.csv", &table)?;
    if report.indecisive_tally.is_some() {
        ctx.write("tallies.csv", &io::tally_csv(&report))?;
    }
    print!("{table}");
    Ok(())
}

fn equivalence_check(ctx: &Context, a: EquivalenceArgs) -> Result<()> {
    if a.trials == 0 {
        return Err(invalid("--trials must be at least 1"));
    }
    let report = equivalence::run(a.trials, ctx.cfg.seed)?;
    ctx.write("equivalence.json", &io::to_pretty_json(&report)?)?;
    for k in &report.kinds {
        println!(
            "{}: {} trials, {} with ties, {} mismatches",
            k.kind, k.trials, k.ties, k.mismatches
        );
    }
    let c = &report.counterexample;
    println!(
        "max-u counterexample u(i)={} u(j)={} lambda={}: main-text {} sum-form {} response function {}",
        c.u_first, c.u_second, c.threshold, c.main_text, c.sum_form, c.response_function
    );
    if report.mismatches() > 0 {
        return Err(CliError::Failed(format!(
            "{} equivalence mismatches",
            report.mismatches()
        )));
    }
    if !c.diverges {
        return Err(CliError::Failed("the Max-U counterexample did not diverge".into()));
    }
    Ok(())
}

fn report(ctx: &Context, a: ReportArgs) -> Result<()> {
    let mut summary: Vec<(String, FitRecord)> = Vec::new();
    let mut voters: Vec<VoterEvaluation> = Vec::new();
    for path in &a.inputs {
        let text = fs::read_to_string(path)?;
        let source = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
        if value.get("paradigm").is_some() {
            let record: EvaluationRecord = serde_json::from_value(value).map_err(Error::from)?;
            for v in &record.voters {
                summary.extend(v.fits.iter().map(|f| (v.voter_id.clone(), f.clone())));
            }
            voters.extend(record.voter_evaluations()?);
        } else if value.is_array() {
            let fits: Vec<LabelledFit> = serde_json::from_value(value).map_err(Error::from)?;
            summary.extend(fits.into_iter().map(|l| (format!("{source}:{}", l.label), l.fit)));
        } else {
            let fit: FitRecord = serde_json::from_value(value).map_err(Error::from)?;
            fit.to_fit()?;
            summary.push((source, fit));
        }
    }
    let table = io::fit_summary_csv(&summary);
    ctx.write("summary.csv", &table)?;
    print!("{table}");
    if !voters.is_empty() {
        rank_tables(ctx, &voters)?;
    }
    Ok(())
}
