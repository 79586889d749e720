use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stagecraft::bn::{self, Dag};
use stagecraft::io::{self, CsvOptions, ModelDocument};
use stagecraft::learn::{learn, Algorithm, ExhaustiveOptions, LearnConfig, DEFAULT_MAX_EXHAUSTIVE_P};
use stagecraft::model::{compute_positions, simplify, to_ceg, SimplexMode, StagedTree, VariableSpec};
use stagecraft::scoring::{count_paths, mle_parameters, score};
use stagecraft::simulate::{self, SimConfig, StudyConfig, GENERATOR_SCHEME};
use stagecraft::{Dataset, Error};

const THREADS_ENV: &str = "STAGECRAFT_THREADS";

#[derive(Parser)]
#[command(name = "stagecraft", version, about = "Staged trees and chain event graphs for categorical data")]
struct Cli {
    /// Worker threads for parallel searches (default: available cores).
    /// The STAGECRAFT_THREADS environment variable takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a staged tree from a CSV file.
    Learn(LearnArgs),
    /// Score a model against data.
    Score(ScoreArgs),
    /// Sample a random simple staged tree and data from it.
    Simulate(SimulateArgs),
    /// Run the consistency study over a grid of settings.
    Study(StudyArgs),
    /// Build the chain event graph of a model.
    Ceg(CegArgs),
    /// Replace a model's stages by its positions.
    Simplify(SimplifyArgs),
    /// Normalized Hamming stage distance between two models.
    Distance(DistanceArgs),
    /// Export a model as Graphviz DOT.
    Export(ExportArgs),
    /// Bayesian-network utilities.
    #[command(subcommand)]
    Bn(BnCommand),
}

#[derive(Args)]
struct CsvArgs {
    /// Bin numeric columns into this many equal-frequency levels.
    #[arg(long)]
    bins: Option<usize>,
}

impl CsvArgs {
    fn read(&self, path: &Path) -> Result<Dataset, Error> {
        let imp = io::read_csv(path, &CsvOptions { bins: self.bins, ..CsvOptions::default() })?;
        if imp.dropped_rows > 0 {
            eprintln!("dropped {} row(s) with missing cells", imp.dropped_rows);
        }
        Ok(imp.data)
    }
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Algorithm,
    /// Comma-separated variable names, or `bn` to use a topological order of
    /// a hill-climbed Bayesian network.
    #[arg(long)]
    order: Option<String>,
    /// Additive smoothing for the fitted parameters.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_EXHAUSTIVE_P)]
    max_exhaustive_p: usize,
    /// Run exhaustive order search even above the cap.
    #[arg(long)]
    allow_large_p: bool,
    /// Recode the data to the variables and levels of this model first.
    #[arg(long)]
    levels_from: Option<PathBuf>,
    /// Store the learning time in the model file.
    #[arg(long)]
    record_timing: bool,
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    p: usize,
    /// Levels per variable: one number for all, or a comma-separated list.
    #[arg(long, default_value = "2")]
    levels: String,
    #[arg(long, value_parser = parse_probability)]
    q: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long)]
    out_data: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    /// Grid such as `q=0.2,0.5;n=25,250,2000;p=6;levels=2`.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, default_value = "bhc,simplified-bhc,marginal,total")]
    learners: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fill the wall_ms column.
    #[arg(long)]
    record_timing: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CegFormat {
    Json,
    Dot,
}

#[derive(Args)]
struct CegArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: CegFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimplifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistanceArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "dot")]
    format: ExportFormat,
    /// Export the chain event graph instead of the tree.
    #[arg(long)]
    ceg: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BnCommand {
    /// Hill-climb a Bayesian network by BIC.
    Learn {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add the edges that make a DAG simple along an order.
    Simplify {
        #[arg(long)]
        dag: PathBuf,
        /// Comma-separated topological order (default: smallest label first).
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Staged tree of a DAG under a topological order.
    Totree {
        #[arg(long)]
        dag: PathBuf,
        #[arg(long)]
        order: Option<String>,
        /// Take variable levels from this CSV and fit parameters on it.
        #[arg(long, conflicts_with = "levels")]
        data: Option<PathBuf>,
        /// Levels of every variable when no data is given.
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|_| {
        let ids: Vec<&str> = Algorithm::ALL.iter().map(|a| a.id()).collect();
        format!("unknown algorithm `{s}` (expected one of: {})", ids.join(", "))
    })
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let q: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&q) {
        Ok(q)
    } else {
        Err(format!("{q} is outside [0, 1]"))
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type Outcome = Result<(), Failure>;

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn cmd_learn(a: &LearnArgs) -> Outcome {
    let mut data = a.csv.read(&a.data)?;
    if let Some(path) = &a.levels_from {
        let template = io::read_model(path)?;
        data = data.recode(template.model.tree().variables())?;
    }
    let mut cfg = LearnConfig::new(a.algorithm);
    cfg.alpha = a.alpha;
    cfg.exhaustive = ExhaustiveOptions {
        max_p: a.max_exhaustive_p,
        allow_large_p: a.allow_large_p,
        threads: None,
    };
    let start = Instant::now();
    match (&a.order, a.algorithm.needs_order()) {
        (Some(o), true) if o == "bn" => cfg.order = Some(bn::learn_bn_hc(&data)?.order),
        (Some(o), true) => cfg.order = Some(data.order_from_names(&split_list(o))?),
        (None, true) => {
            return Err(Failure::Usage(format!("`{}` needs --order", a.algorithm)));
        }
        (Some(_), false) => {
            return Err(Failure::Usage(format!("`{}` chooses its own order; drop --order", a.algorithm)));
        }
        (None, false) => {}
    }
    let fit = learn(&data, &cfg)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;

    let counts = count_paths(&data, &fit.order)?;
    let s = score(&fit.model, &counts)?;
    let positions = compute_positions(&fit.model).num_positions();
    let mut doc = ModelDocument::new(fit.model);
    doc.meta.algorithm = Some(a.algorithm.id().into());
    doc.meta.bic = Some(s.bic);
    doc.meta.log_likelihood = Some(s.log_likelihood);
    doc.meta.n = Some(s.n);
    doc.meta.stages_per_depth = Some(doc.model.staging().stages_per_depth());
    doc.meta.positions = Some(positions);
    doc.meta.wall_ms = a.record_timing.then_some(ms);
    io::write_model(&a.out, &doc)?;
    println!(
        "algo={} bic={:.9} stages={} positions={} ms={:.6}",
        a.algorithm,
        s.bic,
        doc.model.num_stages(),
        positions,
        ms
    );
    Ok(())
}

fn cmd_score(a: &ScoreArgs) -> Outcome {
    let doc = io::read_model(&a.model)?;
    let data = a.csv.read(&a.data)?.recode(doc.model.tree().variables())?;
    let order: Vec<usize> = (0..data.n_vars()).collect();
    let s = score(&doc.model, &count_paths(&data, &order)?)?;
    println!(
        "logL={:.9} nparams={} N={} bic={:.9}",
        s.log_likelihood, s.n_params, s.n, s.bic
    );
    Ok(())
}

fn parse_levels(spec: &str, p: usize) -> Result<Vec<usize>, Failure> {
    let parts = split_list(spec);
    let nums = parts
        .iter()
        .map(|x| x.parse::<usize>().map_err(|e| Failure::Usage(format!("levels `{x}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    match nums.len() {
        1 => Ok(vec![nums[0]; p]),
        n if n == p => Ok(nums),
        n => Err(Failure::Usage(format!("{n} level counts given for {p} variables"))),
    }
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let cfg = SimConfig {
        levels: parse_levels(&a.levels, a.p)?,
        q: a.q,
        n: a.n,
        seed: a.seed,
    };
    let (truth, data) = simulate::simulate(&cfg)?;
    let mut doc = ModelDocument::new(truth);
    doc.meta.generator = Some(GENERATOR_SCHEME.into());
    doc.meta.seed = Some(a.seed);
    doc.meta.q = Some(a.q);
    io::write_model(&a.out_model, &doc)?;
    io::write_csv_path(&data, &a.out_data)?;
    println!(
        "stages={} positions={} N={}",
        doc.model.num_stages(),
        compute_positions(&doc.model).num_positions(),
        data.n_rows()
    );
    Ok(())
}

/// `q` values, sample sizes and per-variable levels.
type Grid = (Vec<f64>, Vec<usize>, Vec<usize>);

fn parse_grid(grid: &str) -> Result<Grid, Failure> {
    let (mut qs, mut ns, mut p, mut levels) = (None, None, None, "2".to_string());
    for item in grid.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("grid entry `{item}` is not key=value")))?;
        let bad = |e: &dyn std::fmt::Display| Failure::Usage(format!("grid `{key}`: {e}"));
        match key.trim() {
            "q" => {
                qs = Some(
                    split_list(value)
                        .iter()
                        .map(|x| parse_probability(x).map_err(|e| bad(&e)))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            "n" | "N" => {
                ns = Some(
                    split_list(value)
                        .iter()
                        .map(|x| x.parse::<usize>().map_err(|e| bad(&e)))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            "p" => p = Some(value.trim().parse::<usize>().map_err(|e| bad(&e))?),
            "levels" => levels = value.to_string(),
            other => return Err(Failure::Usage(format!("unknown grid key `{other}`"))),
        }
    }
    let missing = |k: &str| Failure::Usage(format!("grid needs `{k}=`"));
    let p = p.ok_or_else(|| missing("p"))?;
    Ok((qs.ok_or_else(|| missing("q"))?, ns.ok_or_else(|| missing("n"))?, parse_levels(&levels, p)?))
}

fn cmd_study(a: &StudyArgs) -> Outcome {
    let (qs, ns, levels) = parse_grid(&a.grid)?;
    let learners = split_list(&a.learners)
        .iter()
        .map(|s| parse_algorithm(s).map_err(Failure::Usage))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = StudyConfig {
        levels,
        qs,
        ns,
        replicates: a.replicates,
        learners,
        seed: a.seed,
        threads: None,
        record_timing: a.record_timing,
    };
    let rows = simulate::run_consistency_study(&cfg)?;
    let path = &a.out;
    let file = std::fs::File::create(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    simulate::write_study_csv(&rows, std::io::BufWriter::new(file))?;
    for c in simulate::summarize(&cfg, &rows) {
        println!(
            "q={:.6} N={} learner={} count={} mean={:.6} ci_low={:.6} ci_high={:.6}",
            c.q, c.n, c.learner, c.count, c.mean, c.ci_low, c.ci_high
        );
    }
    Ok(())
}

fn cmd_ceg(a: &CegArgs) -> Outcome {
    let doc = io::read_model(&a.model)?;
    let ceg = to_ceg(&doc.model);
    let text = match a.format {
        CegFormat::Json => io::ceg_to_json(&ceg)?,
        CegFormat::Dot => io::ceg_to_dot(&ceg, doc.model.staging()),
    };
    io::write_text(&a.out, &text)?;
    println!("vertices={} sink=1 edges={}", ceg.num_internal(), ceg.edges().len());
    Ok(())
}

fn cmd_simplify(a: &SimplifyArgs) -> Outcome {
    let doc = io::read_model(&a.model)?;
    let simple = simplify(&doc.model);
    let stages = simple.num_stages();
    io::write_model(&a.out, &ModelDocument::new(simple))?;
    println!("stages={stages}");
    Ok(())
}

fn cmd_distance(a: &DistanceArgs) -> Outcome {
    let x = io::read_model(&a.a)?;
    let y = io::read_model(&a.b)?;
    println!("{:.6}", simulate::hamming_stage_distance(&x.model, &y.model)?);
    Ok(())
}

fn cmd_export(a: &ExportArgs) -> Outcome {
    let doc = io::read_model(&a.model)?;
    let text = match a.format {
        ExportFormat::Dot if a.ceg => io::ceg_to_dot(&to_ceg(&doc.model), doc.model.staging()),
        ExportFormat::Dot => io::staged_tree_to_dot(&doc.model),
    };
    match &a.out {
        Some(path) => io::write_text(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn order_for(g: &Dag, order: Option<&str>) -> Result<Vec<usize>, Failure> {
    let Some(order) = order else {
        return Ok(bn::smallest_label_order(g));
    };
    split_list(order)
        .iter()
        .map(|name| {
            g.names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Failure::Run(Error::UnknownVariable(name.clone())))
        })
        .collect()
}

fn cmd_bn(c: &BnCommand) -> Outcome {
    match c {
        BnCommand::Learn { data, csv, out } => {
            let data = csv.read(data)?;
            let fit = bn::learn_bn_hc(&data)?;
            io::write_text(out, &io::dag_to_json(&fit.dag)?)?;
            let names: Vec<&str> = fit.order.iter().map(|&i| fit.dag.names()[i].as_str()).collect();
            println!("edges={} bic={:.9} order={}", fit.dag.num_edges(), fit.bic, names.join(","));
        }
        BnCommand::Simplify { dag, order, out } => {
            let g = io::dag_from_json(&io::read_text(dag)?)?;
            let order = order_for(&g, order.as_deref())?;
            let s = bn::simplify_dag(&g, &order)?;
            println!("added={}", s.num_edges() - g.num_edges());
            io::write_text(out, &io::dag_to_json(&s)?)?;
        }
        BnCommand::Totree { dag, order, data, levels, csv, out } => {
            let g = io::dag_from_json(&io::read_text(dag)?)?;
            let order = order_for(&g, order.as_deref())?;
            let (variables, data) = match data {
                Some(path) => {
                    let d = csv.read(path)?;
                    let cols = d.order_from_names(g.names())?;
                    let d = d.recode(&d.ordered_variables(&cols))?;
                    (d.variables().to_vec(), Some(d))
                }
                None => (
                    g.names()
                        .iter()
                        .map(|n| VariableSpec::with_cardinality(n.clone(), *levels))
                        .collect::<Result<Vec<_>, _>>()?,
                    None,
                ),
            };
            let mut st: StagedTree = bn::bn_to_staged_tree(&g, &variables, &order)?;
            if let Some(d) = data {
                let params = mle_parameters(&st, &count_paths(&d, &order)?, 0.0)?;
                st = st.with_params(params, SimplexMode::Closed)?;
            }
            println!("stages={} simple={}", st.num_stages(), bn::is_simple_dag_wrt(&g, &order)?);
            io::write_model(out, &ModelDocument::new(st))?;
        }
    }
    Ok(())
}

fn configure_threads(flag: Option<usize>) -> Outcome {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|e| Failure::Usage(format!("{THREADS_ENV}=`{v}`: {e}")))?,
        ),
        _ => flag,
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Learn(a) => cmd_learn(a),
        Command::Score(a) => cmd_score(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Study(a) => cmd_study(a),
        Command::Ceg(a) => cmd_ceg(a),
        Command::Simplify(a) => cmd_simplify(a),
        Command::Distance(a) => cmd_distance(a),
        Command::Export(a) => cmd_export(a),
        Command::Bn(c) => cmd_bn(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
